//! The full invariant suite behind `calabi-lab verify`.

use std::collections::BTreeMap;
use std::sync::Arc;

use calabi_core::calabi::{calabi_report, potential_gradient_residual, CalabiReport};
use calabi_core::chart::{chart_symplecticity_residual_of, dw_chart, ChartPoint, NewtonConfig};
use calabi_core::field::{Concatenation, ZeroField};
use calabi_core::flow::{richardson_error, symplecticity_residual};
use calabi_core::geometry::Point;
use calabi_core::linalg;
use calabi_core::quadrature::QuadratureConfig;
use calabi_core::phase::{
    path_independence_residual, phase_gradient_residual, phase_pullback_integrals, r_gradient_residual,
    theorem_bound_check, BoundConfig, PhaseData,
};
use calabi_core::suite::{self, SuiteMember};
use calabi_core::{BoxRegion, Dim, FlowMap, LabError, SharedField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::LabConfig;

pub const CHART_TOL: f64 = 1e-10;
pub const FLOW_SYMPLECTIC_TOL: f64 = 5e-6;
pub const CALABI_TOL: f64 = 1e-3;
pub const DF_TOL: f64 = 1e-4;
pub const DR_TOL: f64 = 1e-6;
pub const PATH_TOL: f64 = 1e-8;
pub const DS_TOL: f64 = 1e-3;
pub const BRIDGE_TOL: f64 = 1e-3;
pub const SAK_TOL: f64 = 1e-3;
pub const CONVERGENCE_GAIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fixture {
    #[default]
    None,
    /// A chart with one block sign flipped; everything after the chart
    /// check is skipped.
    CorruptChart,
    /// `H ≡ 0` in place of the suite.
    Zero,
}

impl std::str::FromStr for Fixture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Fixture::None),
            "corrupt-chart" | "corrupt_chart" => Ok(Fixture::CorruptChart),
            "zero" => Ok(Fixture::Zero),
            other => Err(format!("unknown fixture `{other}` (none, corrupt-chart, zero)")),
        }
    }
}

/// How a measured value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compare {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub invariant: &'static str,
    pub subject: String,
    pub measured: f64,
    pub tolerance: f64,
    pub compare: Compare,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// Checks of one invariant.
    pub fn of<'a>(&'a self, invariant: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.invariant == invariant)
    }

    fn push(&mut self, invariant: &'static str, subject: impl Into<String>, measured: f64, tolerance: f64) {
        self.push_cmp(invariant, subject, measured, tolerance, Compare::AtMost);
    }

    fn push_cmp(
        &mut self,
        invariant: &'static str,
        subject: impl Into<String>,
        measured: f64,
        tolerance: f64,
        compare: Compare,
    ) {
        let ok = match compare {
            Compare::AtMost => measured <= tolerance,
            Compare::AtLeast => measured >= tolerance,
        };
        self.checks.push(Check {
            invariant,
            subject: subject.into(),
            measured,
            tolerance,
            compare,
            status: if ok { Status::Pass } else { Status::Fail },
        });
    }

    fn skip(&mut self, invariant: &'static str, tolerance: f64) {
        self.checks.push(Check {
            invariant,
            subject: "-".into(),
            measured: f64::NAN,
            tolerance,
            compare: Compare::AtMost,
            status: Status::Skipped,
        });
    }
}

/// Invariants in the order they run, with their tolerances.
pub const INVARIANTS: &[(&str, f64)] = &[
    ("chart_symplecticity", CHART_TOL),
    ("flow_symplecticity", FLOW_SYMPLECTIC_TOL),
    ("flow_support", 0.0),
    ("self_convergence", CONVERGENCE_GAIN),
    ("two_formula", CALABI_TOL),
    ("primitive_agreement", CALABI_TOL),
    ("homomorphism", CALABI_TOL),
    ("group_law", 1.0),
    ("df_oracle", DF_TOL),
    ("dr_oracle", DR_TOL),
    ("path_independence", PATH_TOL),
    ("phase_support", 0.0),
    ("ds_residual", DS_TOL),
    ("bridge", BRIDGE_TOL),
    ("sak_residual", SAK_TOL),
];

fn flipped_chart(x: &[f64], y: &[f64]) -> ChartPoint<f64> {
    let mut c = dw_chart(x, y).expect("equal lengths");
    let n = c.p.len() / 2;
    for v in &mut c.p[n..] {
        *v = -*v;
    }
    c
}

pub fn run_verify_suite(cfg: &LabConfig, fixture: Fixture) -> Result<VerifyReport, LabError> {
    let mut report = VerifyReport::default();
    let dim = cfg.dim;
    let chart = match fixture {
        Fixture::CorruptChart => chart_symplecticity_residual_of(dim, flipped_chart, 20, cfg.seed),
        _ => chart_symplecticity_residual_of(dim, |x: &[f64], y: &[f64]| dw_chart(x, y).expect("equal lengths"), 20, cfg.seed),
    };
    report.push("chart_symplecticity", "linear chart", chart, CHART_TOL);
    if !report.passed() {
        for &(name, tol) in &INVARIANTS[1..] {
            report.skip(name, tol);
        }
        return Ok(report);
    }

    let members: Vec<SuiteMember<f64>> = match fixture {
        Fixture::Zero => vec![SuiteMember {
            name: "zero",
            field: zero_field(dim)?,
        }],
        _ => suite::standard_suite(dim)?,
    };
    let kinds = cfg.kinds();
    let mut reports: BTreeMap<&str, CalabiReport<f64>> = BTreeMap::new();

    for m in &members {
        let map = FlowMap::new(m.field.clone(), cfg.integrator, 1.0)?;
        let support = m.field.support().clone();
        let probes = support.sample(cfg.probes, cfg.seed, 0.0);

        report.push("flow_symplecticity", m.name, symplecticity_residual(&map, &probes)?, FLOW_SYMPLECTIC_TOL);

        let outside = outside_points(&support, 8, cfg.seed);
        let mut moved = 0.0_f64;
        for x in &outside {
            moved = moved.max(linalg::norm(&linalg::sub(&map.forward(x)?, x)));
        }
        report.push("flow_support", m.name, moved, 0.0);

        report.push_cmp(
            "self_convergence",
            m.name,
            convergence_gain(&map, &probes[..probes.len().min(4)])?,
            CONVERGENCE_GAIN,
            Compare::AtLeast,
        );

        let cal = calabi_report(m.field.as_ref(), &kinds, &cfg.quadrature, &cfg.integrator)?;
        for &(kind, v) in &cal.cal_f {
            report.push("two_formula", format!("{} {kind}", m.name), (cal.cal_h - v).abs(), CALABI_TOL);
        }
        if cal.cal_f.len() == 2 {
            let gap = (cal.cal_f[0].1 - cal.cal_f[1].1).abs();
            report.push("primitive_agreement", m.name, gap, CALABI_TOL);
        }

        let df_probes = &probes[..probes.len().min(cfg.df_probes)];
        for &kind in &kinds {
            let r = potential_gradient_residual(&map, kind, df_probes)?;
            report.push("df_oracle", format!("{} {kind}", m.name), r, DF_TOL);
        }

        for &kind in &kinds {
            let phase = PhaseData::new(map.clone(), kind, cfg.path_nodes)?;
            let mut outside_s = 0.0_f64;
            for x in &outside {
                outside_s = outside_s.max(phase.s_eval(x)?.abs());
            }
            report.push("phase_support", format!("{} {kind}", m.name), outside_s, 0.0);
            let inner = support.sample(cfg.phase_probes, cfg.seed ^ 0x9e37, 0.05);
            report.push(
                "ds_residual",
                format!("{} {kind}", m.name),
                phase_gradient_residual(&phase, &inner)?,
                DS_TOL,
            );
            let (i_s, i_r) = phase_pullback_integrals(&phase, &cfg.quadrature)?;
            let n1 = (dim.half() + 1) as f64;
            report.push(
                "bridge",
                format!("{} {kind}", m.name),
                (n1 * cal.cal_h - (i_s - i_r)).abs(),
                BRIDGE_TOL,
            );
        }
        reports.insert(m.name, cal);
    }

    let pairs: Vec<(&str, SharedField, SharedField, SharedField)> = match fixture {
        Fixture::Zero => {
            let z = zero_field(dim)?;
            let cat: SharedField = Arc::new(Concatenation::new(z.clone(), z.clone(), cfg.concat)?);
            vec![("zero∘zero", z.clone(), z, cat)]
        }
        _ => suite::composition_pairs(dim, cfg.concat)?,
    };
    for (label, h, k, cat) in &pairs {
        let (rh, rk) = match (find_report(&reports, &members, h), find_report(&reports, &members, k)) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            _ => (
                calabi_report(h.as_ref(), &kinds, &cfg.quadrature, &cfg.integrator)?,
                calabi_report(k.as_ref(), &kinds, &cfg.quadrature, &cfg.integrator)?,
            ),
        };
        // φ_K bends the edges of H's support inside the composed potential,
        // so the panels no longer line up with its kinks; refine twice.
        let composed_q = QuadratureConfig {
            spatial_nodes_per_axis: 2 * cfg.quadrature.spatial_nodes_per_axis,
            ..cfg.quadrature
        };
        let rc = calabi_report(cat.as_ref(), &kinds, &composed_q, &cfg.integrator)?;
        report.push(
            "homomorphism",
            format!("{label} cal_H"),
            (rc.cal_h - rh.cal_h - rk.cal_h).abs(),
            CALABI_TOL,
        );
        for &kind in &kinds {
            let (Some(c), Some(a), Some(b)) = (rc.cal_f(kind), rh.cal_f(kind), rk.cal_f(kind)) else {
                continue;
            };
            report.push("homomorphism", format!("{label} cal_f {kind}"), (c - a - b).abs(), CALABI_TOL);
        }

        let map_h = FlowMap::new(h.clone(), cfg.integrator, 1.0)?;
        let map_k = FlowMap::new(k.clone(), cfg.integrator, 1.0)?;
        let map_c = FlowMap::new(cat.clone(), cfg.integrator, 1.0)?;
        let mut gap = 0.0_f64;
        let mut allowance = 0.0_f64;
        for x in cat.support().sample(4, cfg.seed ^ 0x51, 0.1) {
            let kx = map_k.forward(&x)?;
            let composed = map_h.forward(&kx)?;
            let direct = map_c.forward(&x)?;
            gap = gap.max(linalg::norm(&linalg::sub(&composed, &direct)));
            let tol = richardson_error(&map_c, &x)? + richardson_error(&map_h, &kx)? + richardson_error(&map_k, &x)?;
            allowance = allowance.max(10.0 * tol);
        }
        // measured / allowance ≤ 1, or both exactly zero
        let ratio = if gap == 0.0 { 0.0 } else { gap / allowance };
        report.push("group_law", *label, ratio, 1.0);
    }

    for &kind in &kinds {
        let probes = random_chart_points(dim, 50, cfg.seed ^ 0xd1);
        report.push("dr_oracle", kind.to_string(), r_gradient_residual(kind, &probes, cfg.path_nodes), DR_TOL);
        report.push(
            "path_independence",
            kind.to_string(),
            path_independence_residual(kind, &probes, cfg.path_nodes, cfg.seed),
            PATH_TOL,
        );
    }

    let sak_field = match fixture {
        Fixture::Zero => zero_field(dim)?,
        _ => suite::scaled(0.1, suite::epsilon_base(dim)?),
    };
    let sak_map = FlowMap::new(sak_field, cfg.integrator, 1.0)?;
    for &kind in &kinds {
        let phase = PhaseData::new(sak_map.clone(), kind, cfg.path_nodes)?;
        let bound = theorem_bound_check(
            &phase,
            &BoundConfig {
                resolution: cfg.grid_res.min(17),
                sak_probes: cfg.sak_probes,
                newton: NewtonConfig {
                    tol: cfg.newton_tol_alpha,
                    max_iter: 50,
                },
                seed: cfg.seed,
            },
        )?;
        report.push("sak_residual", format!("ε-family 0.1 {kind}"), bound.sak_residual, SAK_TOL);
    }
    Ok(report)
}

fn find_report<'a>(
    reports: &'a BTreeMap<&str, CalabiReport<f64>>,
    members: &[SuiteMember<f64>],
    field: &SharedField,
) -> Option<&'a CalabiReport<f64>> {
    members
        .iter()
        .find(|m| Arc::ptr_eq(&m.field, field))
        .and_then(|m| reports.get(m.name))
}

fn zero_field(dim: Dim) -> Result<SharedField, LabError> {
    Ok(Arc::new(ZeroField::new(BoxRegion::cube(dim.full(), -1.0, 1.0)?)?))
}

/// Points beyond each face of the box, plus its corners.
fn outside_points(support: &BoxRegion, count: usize, seed: u64) -> Vec<Point<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0f);
    let d = support.len();
    let mut out: Vec<Point<f64>> = vec![linalg::from_slice(support.lo()), linalg::from_slice(support.hi())];
    for i in 0..count {
        let axis = i % d;
        let mut x: Point<f64> = (0..d)
            .map(|j| support.lo()[j] + rng.gen_range(0.0..1.0) * support.side(j))
            .collect();
        x[axis] = if rng.gen_bool(0.5) {
            support.hi()[axis] + rng.gen_range(0.0..0.5)
        } else {
            support.lo()[axis] - rng.gen_range(0.0..0.5)
        };
        out.push(x);
    }
    out
}

fn random_chart_points(dim: Dim, count: usize, seed: u64) -> Vec<ChartPoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dim.full();
    (0..count)
        .map(|_| ChartPoint {
            q: (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            p: (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        })
        .collect()
}

/// `max err(N) / max err(2N)` against a reference with `10N` steps.
fn convergence_gain(map: &FlowMap, probes: &[Point<f64>]) -> Result<f64, LabError> {
    let steps = map.config().steps;
    let reference = map.with_steps(10 * steps);
    let doubled = map.with_steps(2 * steps);
    let (mut coarse, mut fine) = (0.0_f64, 0.0_f64);
    for x in probes {
        let r = reference.forward(x)?;
        coarse = coarse.max(linalg::norm(&linalg::sub(&map.forward(x)?, &r)));
        fine = fine.max(linalg::norm(&linalg::sub(&doubled.forward(x)?, &r)));
    }
    // a map that is exact at this step count already converged
    if coarse <= 1e-14 {
        return Ok(f64::INFINITY);
    }
    Ok(coarse / fine.max(f64::MIN_POSITIVE))
}
