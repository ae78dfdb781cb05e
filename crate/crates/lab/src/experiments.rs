//! The grid counterexample sweep and the graphical ε-sequence.

use std::sync::Arc;
use std::time::Instant;

use calabi_core::calabi::{calabi_report, l1inf_norm, L1InfEstimate};
use calabi_core::chart::{graphicality_report, NewtonConfig};
use calabi_core::field::{GridBumps, ScalarField, Steady};
use calabi_core::flow::{c0_distance_to_identity, C0Estimate, FlowMap};
use calabi_core::linalg;
use calabi_core::phase::{phase_gradient_residual, phase_pullback_integrals, theorem_bound_check, BoundConfig, PhaseData};
use calabi_core::{Dim, LabError, LiouvilleKind, SharedField};

use crate::config::LabConfig;

/// One row of a sweep. `None` fields are left empty in the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub family: String,
    pub param: f64,
    pub cal_h: f64,
    pub cal_f_radial: Option<f64>,
    pub cal_f_xdy: Option<f64>,
    pub c0: Option<C0Estimate<f64>>,
    pub l1inf: Option<L1InfEstimate<f64>>,
    pub sup_s: Option<f64>,
    pub sup_alpha: Option<f64>,
    pub bound_ok: Option<bool>,
    pub res_ds: Option<f64>,
    pub res_bridge: Option<f64>,
    pub wall_ms: u128,
    pub detail: Detail,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detail {
    None,
    Grid(GridDetail),
    Sequence(SequenceDetail),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDetail {
    pub k: usize,
    pub delta: f64,
    pub target_rho: f64,
    pub achieved_rho: f64,
    pub transition_fraction: f64,
    pub steps: usize,
    /// Largest distance from a traced end point to its starting subcube.
    pub cell_escape: f64,
    /// Largest `|∇H(x + τ) − ∇H(x)|` over the cell grid, `τ` the shift to the
    /// opposite corner subcube.
    pub symmetry_gap: f64,
    pub symmetry_probes: usize,
    pub quadrature_nodes: usize,
}

impl GridDetail {
    pub fn c0_bound(&self, dim: Dim) -> f64 {
        (2.0 * dim.half() as f64).sqrt() * self.delta / self.k as f64
    }

    pub fn cal_bounds(&self, dim: Dim) -> (f64, f64) {
        let vol = self.delta.powi(dim.full() as i32);
        (self.achieved_rho * vol, vol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDetail {
    pub eps: f64,
    pub graphical: bool,
    pub min_abs_det: f64,
    pub a: f64,
    pub slack: Option<f64>,
    pub sak_residual: Option<f64>,
    pub i_r: Option<f64>,
    pub bound_kind: LiouvilleKind,
}

fn ms(start: Instant) -> u128 {
    start.elapsed().as_millis()
}

fn split_cal_f(values: &[(LiouvilleKind, f64)]) -> (Option<f64>, Option<f64>) {
    let find = |k| values.iter().find(|(kind, _)| *kind == k).map(|&(_, v)| v);
    (find(LiouvilleKind::Radial), find(LiouvilleKind::Xdy))
}

/// Transition fraction for a grid bump aiming at plateau fraction `1 − 1/k`,
/// and whether the minimum width forced a smaller plateau.
pub fn grid_transition(dim: Dim, k: usize, min_transition: f64) -> (f64, bool) {
    let target = 1.0 - 1.0 / k as f64;
    let ideal = 0.5 * (1.0 - target.powf(1.0 / dim.full() as f64));
    // k = 1 asks for an empty plateau; keep the bump nondegenerate
    let ideal = ideal.min(0.45);
    if ideal < min_transition {
        (min_transition, true)
    } else {
        (ideal, false)
    }
}

/// Example grid: `H_k = F_k`, one height-one plateau bump per subcube of
/// `[0, δ]^{2n}`.
///
/// All subcubes carry translates of the same bump and trajectories never
/// leave their subcube, so the time-one map commutes with the translations.
/// The C⁰ distance is measured on the subcube at the origin with
/// `grid_res` points per side (the full-box grid with `k(grid_res − 1) + 1`
/// points per axis restricted to that subcube), then spot-checked on the
/// opposite corner subcube.
pub fn run_grid_example(delta: f64, k: usize, cfg: &LabConfig) -> Result<ExperimentRecord, LabError> {
    let start = Instant::now();
    let dim = cfg.dim;
    let (tf, clamped) = grid_transition(dim, k, cfg.min_transition);
    let grid = GridBumps::new(dim, delta, k, tf)?;
    let target_rho = 1.0 - 1.0 / k as f64;
    let achieved_rho = grid.plateau_fraction();
    let mut warnings = Vec::new();
    if clamped {
        warnings.push(format!(
            "k = {k}: plateau fraction {target_rho:.4} needs a transition width below {:.4} of the cell; using {tf:.4} (plateau fraction {achieved_rho:.4})",
            cfg.min_transition
        ));
    }
    let field: SharedField = Arc::new(Steady(grid.clone()));

    let quadrature = cfg.quadrature;
    let cal_h = calabi_core::calabi::cal_from_hamiltonian(field.as_ref(), &quadrature)?;
    let quadrature_nodes = calabi_core::calabi::spatial_rules(field.as_ref(), &quadrature)[0].len();

    let full_res = k * (cfg.grid_res - 1) + 1;
    let l1inf = l1inf_norm(field.as_ref(), quadrature.time_nodes, full_res)?;

    let steps_needed = (grid.stiffness() / cfg.grid_stiffness).ceil() as usize;
    let steps = cfg.integrator.steps.max(steps_needed);
    let map = FlowMap::new(field.clone(), cfg.integrator.with_steps(steps), 1.0)?;

    let side = grid.cell_side();
    let d = dim.full();
    let cell = calabi_core::BoxRegion::cube(d, 0.0, side)?;
    let mut c0 = 0.0_f64;
    let mut cell_escape = 0.0_f64;
    let mut moved: Vec<(f64, linalg::Coords<f64>)> = Vec::new();
    for x in cell.grid(cfg.grid_res) {
        let y = map.forward(&x)?;
        let shift = linalg::sub(&y, &x);
        let dist = linalg::norm(&shift);
        c0 = c0.max(dist);
        cell_escape = cell_escape.max(distance_outside(&y, 0.0, side));
        if dist > 0.0 {
            moved.push((dist, x));
        }
    }

    // Translation check on the far corner subcube. The field is compared
    // over the whole cell grid; the map is not, since near the cell corners
    // a last-bit change in x moves φ(x) by O(side) over this many steps.
    let mut symmetry_gap = 0.0_f64;
    let mut symmetry_probes = 0;
    if k > 1 {
        let offset = side * (k - 1) as f64;
        for x in cell.grid(cfg.grid_res) {
            let xt: linalg::Coords<f64> = x.iter().map(|v| v + offset).collect();
            let g = grid.gradient(&x);
            let gt = grid.gradient(&xt);
            symmetry_gap = symmetry_gap.max(linalg::max_abs(&linalg::sub(&gt, &g)));
            symmetry_probes += 1;
        }
        moved.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, x) in moved.iter().take(4) {
            let xt: linalg::Coords<f64> = x.iter().map(|v| v + offset).collect();
            let yt = map.forward(&xt)?;
            cell_escape = cell_escape.max(distance_outside(&yt, offset, offset + side));
        }
    }
    if cell_escape > 0.0 {
        warnings.push(format!("k = {k}: a trajectory left its subcube by {cell_escape:e}"));
    }

    Ok(ExperimentRecord {
        family: "grid".into(),
        param: k as f64,
        cal_h,
        cal_f_radial: None,
        cal_f_xdy: None,
        c0: Some(C0Estimate {
            value: c0,
            spacing: cell.grid_spacing(cfg.grid_res),
            resolution: full_res,
        }),
        l1inf: Some(l1inf),
        sup_s: None,
        sup_alpha: None,
        bound_ok: None,
        res_ds: None,
        res_bridge: None,
        wall_ms: ms(start),
        detail: Detail::Grid(GridDetail {
            k,
            delta,
            target_rho,
            achieved_rho,
            transition_fraction: tf,
            steps,
            cell_escape,
            symmetry_gap,
            symmetry_probes,
            quadrature_nodes,
        }),
        warnings,
    })
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
}

fn distance_outside(y: &[f64], lo: f64, hi: f64) -> f64 {
    y.iter().fold(0.0, |m, &v| m.max(lo - v).max(v - hi))
}

pub fn run_grid_sweep(cfg: &LabConfig) -> Result<Vec<ExperimentRecord>, LabError> {
    (cfg.kmin..=cfg.kmax).map(|k| run_grid_example(cfg.delta, k, cfg)).collect()
}

/// The sequence `φ_{εH}¹` for the ε-family base.
pub fn run_graphical_sequence(
    base: &SharedField,
    eps: &[f64],
    cfg: &LabConfig,
) -> Result<Vec<ExperimentRecord>, LabError> {
    eps.iter().map(|&e| run_graphical_member(base, e, cfg)).collect()
}

fn run_graphical_member(base: &SharedField, eps: f64, cfg: &LabConfig) -> Result<ExperimentRecord, LabError> {
    let start = Instant::now();
    let field = calabi_core::suite::scaled(eps, base.clone());
    let kinds = cfg.kinds();
    let bound_kind = kinds[0];
    let report = calabi_report(field.as_ref(), &kinds, &cfg.quadrature, &cfg.integrator)?;
    let (cal_f_radial, cal_f_xdy) = split_cal_f(&report.cal_f);
    let map = FlowMap::new(field.clone(), cfg.integrator, 1.0)?;
    let c0 = c0_distance_to_identity(&map, cfg.grid_res)?;
    let l1inf = l1inf_norm(field.as_ref(), cfg.quadrature.time_nodes, cfg.grid_res)?;
    let graph = graphicality_report(&map, cfg.grid_res)?;
    let phase = PhaseData::new(map.clone(), bound_kind, cfg.path_nodes)?;
    let support = field.support().clone();
    let probes = support.sample(cfg.phase_probes, cfg.seed, 0.05);
    let res_ds = phase_gradient_residual(&phase, &probes)?;
    let (i_s, i_r) = phase_pullback_integrals(&phase, &cfg.quadrature)?;
    let n1 = (field.dim().half() + 1) as f64;
    let res_bridge = (n1 * report.cal_h - (i_s - i_r)).abs();

    let mut warnings = Vec::new();
    let mut detail = SequenceDetail {
        eps,
        graphical: graph.is_graphical,
        min_abs_det: graph.min_abs_det,
        a: support.diameter(),
        slack: None,
        sak_residual: None,
        i_r: Some(i_r),
        bound_kind,
    };
    let (mut sup_s, mut sup_alpha, mut bound_ok) = (None, None, None);
    if graph.is_graphical {
        let bound = theorem_bound_check(
            &phase,
            &BoundConfig {
                resolution: cfg.grid_res,
                sak_probes: cfg.sak_probes,
                newton: NewtonConfig {
                    tol: cfg.newton_tol_alpha,
                    max_iter: 50,
                },
                seed: cfg.seed,
            },
        )?;
        sup_s = Some(bound.sup_s);
        sup_alpha = Some(bound.sup_alpha);
        bound_ok = Some(bound.bound_ok);
        detail.slack = Some(bound.slack);
        detail.sak_residual = Some(bound.sak_residual);
    } else {
        warnings.push(format!(
            "ε = {eps}: not graphical (min |det| {:e}, negative {}, collisions {}); bound check skipped",
            graph.min_abs_det, graph.negative_dets, graph.injectivity_collisions
        ));
    }
    Ok(ExperimentRecord {
        family: "seq".into(),
        param: eps,
        cal_h: report.cal_h,
        cal_f_radial,
        cal_f_xdy,
        c0: Some(c0),
        l1inf: Some(l1inf),
        sup_s,
        sup_alpha,
        bound_ok,
        res_ds: Some(res_ds),
        res_bridge: Some(res_bridge),
        wall_ms: ms(start),
        detail: Detail::Sequence(detail),
        warnings,
    })
}

/// Both Calabi formulas and the grid quantities for one Hamiltonian.
pub fn run_single(label: &str, field: &SharedField, cfg: &LabConfig) -> Result<ExperimentRecord, LabError> {
    let start = Instant::now();
    let report = calabi_report(field.as_ref(), &cfg.kinds(), &cfg.quadrature, &cfg.integrator)?;
    let (cal_f_radial, cal_f_xdy) = split_cal_f(&report.cal_f);
    let map = FlowMap::new(field.clone(), cfg.integrator, 1.0)?;
    let c0 = c0_distance_to_identity(&map, cfg.grid_res)?;
    let l1inf = l1inf_norm(field.as_ref(), cfg.quadrature.time_nodes, cfg.grid_res)?;
    Ok(ExperimentRecord {
        family: label.replace(',', ";"),
        param: 1.0,
        cal_h: report.cal_h,
        cal_f_radial,
        cal_f_xdy,
        c0: Some(c0),
        l1inf: Some(l1inf),
        sup_s: None,
        sup_alpha: None,
        bound_ok: None,
        res_ds: None,
        res_bridge: None,
        wall_ms: ms(start),
        detail: Detail::None,
        warnings: Vec::new(),
    })
}

/// One named property check of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCheck {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

fn check(name: impl Into<String>, passed: bool, message: String) -> SweepCheck {
    SweepCheck {
        name: name.into(),
        passed,
        message,
    }
}

/// Per-k envelope of the grid example plus the separation property:
/// `c0` strictly decreasing in `k` while `cal_H` stays above half its
/// value at the smallest `k`.
pub fn grid_checks(records: &[ExperimentRecord], dim: Dim) -> Vec<SweepCheck> {
    let mut out = Vec::new();
    for r in records {
        let Detail::Grid(g) = &r.detail else { continue };
        let c0 = r.c0.map_or(f64::NAN, |c| c.value);
        let bound = g.c0_bound(dim);
        out.push(check(
            format!("grid k={} c0", g.k),
            c0 <= bound + 1e-3,
            format!("c0 {c0:.6} vs √(2n)δ/k {bound:.6} + 1e-3"),
        ));
        let (lo, hi) = g.cal_bounds(dim);
        out.push(check(
            format!("grid k={} cal_H", g.k),
            r.cal_h >= lo && r.cal_h <= hi,
            format!("cal_H {:.6} in [{lo:.6}, {hi:.6}]", r.cal_h),
        ));
        let l1 = r.l1inf.map_or(f64::NAN, |l| l.value);
        out.push(check(
            format!("grid k={} l1inf", g.k),
            (0.95..=1.0).contains(&l1),
            format!("l1inf {l1:.6} in [0.95, 1]"),
        ));
        out.push(check(
            format!("grid k={} in-cell", g.k),
            g.cell_escape == 0.0 && g.symmetry_gap <= 1e-6,
            format!("escape {:e}, translation gap {:e}", g.cell_escape, g.symmetry_gap),
        ));
    }
    let c0s: Vec<f64> = records.iter().filter_map(|r| r.c0.map(|c| c.value)).collect();
    if c0s.len() >= 2 {
        let decreasing = c0s.windows(2).all(|w| w[1] < w[0]);
        out.push(check("grid c0 decreasing", decreasing, format!("c0 by k: {}", list(&c0s))));
        let first = records[0].cal_h;
        let floor = records.iter().map(|r| r.cal_h).fold(f64::INFINITY, f64::min);
        out.push(check(
            "grid cal_H floor",
            floor >= first / 2.0,
            format!("min cal_H {floor:.6} vs half of first {:.6}", first / 2.0),
        ));
    }
    out
}

/// Every member graphical with the bound holding, `(sak)` residual small,
/// and `cal_H` and `sup_alpha` shrinking down the schedule.
pub fn sequence_checks(records: &[ExperimentRecord]) -> Vec<SweepCheck> {
    let mut out = Vec::new();
    for r in records {
        let Detail::Sequence(s) = &r.detail else { continue };
        out.push(check(
            format!("seq ε={} graphical", s.eps),
            s.graphical,
            format!("min |det((Dφ+I)/2)| {:e}", s.min_abs_det),
        ));
        if let (Some(ss), Some(sa), Some(ok)) = (r.sup_s, r.sup_alpha, r.bound_ok) {
            out.push(check(
                format!("seq ε={} bound", s.eps),
                ok && ss <= (s.a + 1.0) * sa + 1e-6,
                format!("sup_S {ss:e} vs (A+1)·sup_α {:e}", (s.a + 1.0) * sa),
            ));
        }
        if let Some(sak) = s.sak_residual {
            out.push(check(format!("seq ε={} sak", s.eps), sak <= 1e-3, format!("residual {sak:e} ≤ 1e-3")));
        }
    }
    let monotone = |vals: Vec<f64>| vals.windows(2).all(|w| w[1] <= w[0]);
    let cal: Vec<f64> = records.iter().map(|r| r.cal_h.abs()).collect();
    if cal.len() >= 2 {
        out.push(check("seq cal_H shrinking", monotone(cal.clone()), format!("|cal_H| by ε: {}", list(&cal))));
    }
    let alpha: Vec<f64> = records.iter().filter_map(|r| r.sup_alpha).collect();
    if alpha.len() >= 2 {
        out.push(check("seq sup_alpha shrinking", monotone(alpha.clone()), format!("sup_α by ε: {}", list(&alpha))));
    }
    out
}
