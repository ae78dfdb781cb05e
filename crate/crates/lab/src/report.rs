//! CSV, SVG and JSON emitters.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::LabConfig;
use crate::experiments::{Detail, ExperimentRecord, SweepCheck};
use crate::verify::{Status, VerifyReport};

pub const CSV_HEADER: [&str; 13] = [
    "family",
    "param",
    "cal_H",
    "cal_f_radial",
    "cal_f_xdy",
    "c0_dist",
    "l1inf",
    "sup_S",
    "sup_alpha",
    "bound_ok",
    "res_dS",
    "res_bridge",
    "wall_ms",
];

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn row(r: &ExperimentRecord, wall: bool) -> Vec<String> {
    vec![
        r.family.clone(),
        format!("{}", r.param),
        num(Some(r.cal_h)),
        num(r.cal_f_radial),
        num(r.cal_f_xdy),
        num(r.c0.map(|c| c.value)),
        num(r.l1inf.map(|l| l.value)),
        num(r.sup_s),
        num(r.sup_alpha),
        r.bound_ok.map(|b| b.to_string()).unwrap_or_default(),
        num(r.res_ds),
        num(r.res_bridge),
        if wall { r.wall_ms.to_string() } else { String::new() },
    ]
}

fn csv_bytes(records: &[ExperimentRecord], wall: bool) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record(row(r, wall)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn csv_string(records: &[ExperimentRecord]) -> String {
    String::from_utf8(csv_bytes(records, true)).expect("utf-8 fields")
}

/// The CSV with the `wall_ms` column blanked, for reproducibility checks.
pub fn csv_string_without_wall(records: &[ExperimentRecord]) -> String {
    String::from_utf8(csv_bytes(records, false)).expect("utf-8 fields")
}

pub fn write_csv(path: &Path, records: &[ExperimentRecord]) -> io::Result<()> {
    std::fs::write(path, csv_bytes(records, true))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One panel: a polyline of `(x, y)` with min/max tick labels.
fn panel(out: &mut String, x0: f64, title: &str, points: &[(f64, f64)]) {
    let (w, h, pad) = (360.0, 240.0, 40.0);
    let _ = writeln!(out, r#"<g transform="translate({x0},0)">"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if !finite.is_empty() {
        let (xmin, xmax) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (ymin, ymax) = finite.iter().fold((0.0_f64, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let sx = if xmax > xmin { (w - 2.0 * pad) / (xmax - xmin) } else { 0.0 };
        let sy = if ymax > ymin { (h - 2.0 * pad) / (ymax - ymin) } else { 0.0 };
        let map = |(x, y): (f64, f64)| {
            let px = if sx > 0.0 { pad + (x - xmin) * sx } else { w / 2.0 };
            (px, h - pad - (y - ymin) * sy)
        };
        let path: Vec<String> = finite.iter().map(|&p| {
            let (px, py) = map(p);
            format!("{px:.2},{py:.2}")
        }).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.join(" "));
        for &p in &finite {
            let (px, py) = map(p);
            let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="steelblue"/>"#);
        }
        let _ = writeln!(out, r#"<text x="{pad}" y="{}" font-size="10">{xmin}</text>"#, h - pad + 14.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{xmax}</text>"#, w - pad, h - pad + 14.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{ymin:.3e}</text>"#, pad - 2.0, h - pad);
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{ymax:.3e}</text>"#, pad - 2.0, pad + 4.0);
    }
    let _ = writeln!(out, "</g>");
}

/// Side-by-side line plots of `cal_H` and `c0_dist` against the parameter.
pub fn svg_string(records: &[ExperimentRecord], param_name: &str, config_echo: &str) -> String {
    let cal: Vec<(f64, f64)> = records.iter().map(|r| (r.param, r.cal_h)).collect();
    let c0: Vec<(f64, f64)> = records.iter().filter_map(|r| r.c0.map(|c| (r.param, c.value))).collect();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="720" height="240" font-family="sans-serif">"#);
    s.push('\n');
    let _ = writeln!(s, "<desc>{}</desc>", escape(config_echo));
    panel(&mut s, 0.0, &format!("cal_H vs {param_name}"), &cal);
    panel(&mut s, 360.0, &format!("c0_dist vs {param_name}"), &c0);
    s.push_str("</svg>\n");
    s
}

fn opt(v: Option<f64>) -> Value {
    v.filter(|x| x.is_finite()).map_or(Value::Null, Value::from)
}

pub fn record_json(r: &ExperimentRecord) -> Value {
    let mut v = json!({
        "family": r.family,
        "param": r.param,
        "cal_H": r.cal_h,
        "cal_f_radial": opt(r.cal_f_radial),
        "cal_f_xdy": opt(r.cal_f_xdy),
        "c0_dist": r.c0.map(|c| json!({"value": c.value, "spacing": c.spacing, "resolution": c.resolution})),
        "l1inf": r.l1inf.map(|l| json!({"value": l.value, "spacing": l.spacing, "resolution": l.resolution})),
        "sup_S": opt(r.sup_s),
        "sup_alpha": opt(r.sup_alpha),
        "bound_ok": r.bound_ok,
        "res_dS": opt(r.res_ds),
        "res_bridge": opt(r.res_bridge),
        "warnings": r.warnings,
    });
    let detail = match &r.detail {
        Detail::None => Value::Null,
        Detail::Grid(g) => json!({
            "k": g.k,
            "delta": g.delta,
            "target_rho": g.target_rho,
            "achieved_rho": g.achieved_rho,
            "transition_fraction": g.transition_fraction,
            "steps": g.steps,
            "cell_escape": g.cell_escape,
            "symmetry_gap": g.symmetry_gap,
            "symmetry_probes": g.symmetry_probes,
            "quadrature_nodes_per_axis": g.quadrature_nodes,
        }),
        Detail::Sequence(q) => json!({
            "eps": q.eps,
            "graphical": q.graphical,
            "min_abs_det": q.min_abs_det,
            "A": q.a,
            "slack": opt(q.slack),
            "sak_residual": opt(q.sak_residual),
            "I_R": opt(q.i_r),
            "bound_lambda": q.bound_kind.name(),
        }),
    };
    v["detail"] = detail;
    v
}

pub fn checks_json(checks: &[SweepCheck]) -> Value {
    Value::Array(
        checks
            .iter()
            .map(|c| json!({"check": c.name, "passed": c.passed, "message": c.message}))
            .collect(),
    )
}

pub fn verify_json(report: &VerifyReport, cfg: &LabConfig) -> Value {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "invariant": c.invariant,
                "subject": c.subject,
                "measured": opt(Some(c.measured)),
                "tolerance": c.tolerance,
                "status": c.status.label(),
            })
        })
        .collect();
    json!({
        "passed": report.passed(),
        "failures": report.checks.iter().filter(|c| c.status == Status::Fail).count(),
        "checks": checks,
        "config": cfg.echo(),
    })
}

/// Writes `<stem>.csv`, `<stem>.json`, `<stem>.config` and optionally
/// `<stem>.svg` into the output directory.
pub fn emit_report(
    cfg: &LabConfig,
    stem: &str,
    param_name: &str,
    records: &[ExperimentRecord],
    checks: &[SweepCheck],
) -> io::Result<()> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir)?;
    let echo = cfg.echo();
    write_csv(&dir.join(format!("{stem}.csv")), records)?;
    std::fs::write(dir.join(format!("{stem}.config")), &echo)?;
    let doc = json!({
        "config": echo,
        "records": records.iter().map(record_json).collect::<Vec<_>>(),
        "checks": checks_json(checks),
    });
    std::fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&doc).expect("json values are finite") + "\n",
    )?;
    if cfg.svg {
        std::fs::write(dir.join(format!("{stem}.svg")), svg_string(records, param_name, &echo))?;
    }
    Ok(())
}
