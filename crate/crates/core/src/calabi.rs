//! The Calabi invariant from a generating Hamiltonian and from the potential
//! `f_{λ,φ}`, plus the `L^(1,∞)` norm.
//!
//! Volume normalization: `(dλ)ⁿ = n! · dx₁dy₁⋯dxₙdyₙ`.

use crate::error::Result;
use crate::field::TimeDepField;
use crate::flow::{trace, FlowMap, IntegratorConfig};
use crate::geometry::{liouville, LiouvilleKind, Point};
use crate::linalg;
use crate::quadrature::{composite, tensor_nodes, tensor_sum, QuadratureConfig, Rule1D};
use crate::scalar::{factorial, Real};

/// Composite spatial rule over the support box, with panels split at the
/// field's axis breaks.
pub fn spatial_rules<T: Real>(field: &dyn TimeDepField<T>, q: &QuadratureConfig) -> Vec<Rule1D<T>> {
    let support = field.support();
    (0..support.len())
        .map(|axis| {
            composite(
                q.rule,
                q.spatial_nodes_per_axis,
                support.lo()[axis],
                support.hi()[axis],
                &field.axis_breaks(axis),
            )
        })
        .collect()
}

pub fn time_rule<T: Real>(field: &dyn TimeDepField<T>, q: &QuadratureConfig) -> Rule1D<T> {
    composite(q.rule, q.time_nodes, T::zero(), T::one(), &field.time_breaks())
}

/// `n! · ∫₀¹∫ H dt dx`.
pub fn cal_from_hamiltonian<T: Real>(field: &dyn TimeDepField<T>, q: &QuadratureConfig) -> Result<T> {
    q.validate()?;
    if field.is_zero() {
        return Ok(T::zero());
    }
    let n = field.dim().half();
    let space = spatial_rules(field, q);
    let integral = if field.is_autonomous() {
        tensor_sum(&space, |x| field.value(T::zero(), x))
    } else {
        let time = time_rule(field, q);
        time.integrate(|t| tensor_sum(&space, |x| field.value(t, x)))
    };
    Ok(factorial::<T>(n) * integral)
}

/// `f_{λ,φ}(x) = ∫₀¹ (λ(X_H) + H) ∘ φ^t(x) dt` for each requested primitive,
/// accumulated along the trajectory.
pub fn f_potentials<T: Real>(
    field: &dyn TimeDepField<T>,
    kinds: &[LiouvilleKind],
    x: &[T],
    cfg: &IntegratorConfig,
) -> Result<Vec<T>> {
    field.dim().check(x)?;
    if !field.support().contains_interior(x) {
        return Ok(vec![T::zero(); kinds.len()]);
    }
    let tr = trace(field, x, cfg, T::one(), kinds, false)?;
    Ok(tr.potentials.into_iter().map(|(_, v)| v).collect())
}

pub fn f_potential<T: Real>(
    field: &dyn TimeDepField<T>,
    kind: LiouvilleKind,
    x: &[T],
    cfg: &IntegratorConfig,
) -> Result<T> {
    Ok(f_potentials(field, &[kind], x, cfg)?[0])
}

/// `(φ*λ − λ)(x) = Dφ(x)ᵀ λ(φ(x)) − λ(x)`.
pub fn pullback_difference<T: Real>(
    map: &FlowMap<T>,
    kind: LiouvilleKind,
    x: &[T],
) -> Result<linalg::Coords<T>> {
    let (y, j) = map.forward_with_jacobian(x)?;
    Ok(linalg::sub(&j.transpose_mul_vec(&liouville(kind, &y)), &liouville(kind, x)))
}

/// Max over probes of `|∇f − (φ*λ − λ)|∞` with a finite-difference `∇f`.
pub fn potential_gradient_residual<T: Real>(map: &FlowMap<T>, kind: LiouvilleKind, probes: &[Point<T>]) -> Result<T> {
    let mut worst = T::zero();
    for x in probes {
        let err = std::cell::RefCell::new(None);
        let grad = crate::fd::gradient_extrapolated(
            |p| match map.trace(p, &[kind], false) {
                Ok(tr) => tr.potentials[0].1,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    T::zero()
                }
            },
            x,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        let oracle = pullback_difference(map, kind, x)?;
        worst = worst.max(linalg::max_abs(&linalg::sub(&grad, &oracle)));
    }
    Ok(worst)
}

/// `n!/(n+1) · ∫ f_{λ,φ} dx` for each primitive, sharing trajectories.
pub fn cal_from_potentials<T: Real>(
    field: &dyn TimeDepField<T>,
    kinds: &[LiouvilleKind],
    q: &QuadratureConfig,
    cfg: &IntegratorConfig,
) -> Result<Vec<T>> {
    q.validate()?;
    cfg.validate()?;
    if field.is_zero() {
        return Ok(vec![T::zero(); kinds.len()]);
    }
    let n = field.dim().half();
    let space = spatial_rules(field, q);
    let mut sums = vec![T::zero(); kinds.len()];
    for (x, w) in tensor_nodes(&space) {
        let f = f_potentials(field, kinds, &x, cfg)?;
        for (s, v) in sums.iter_mut().zip(f) {
            *s = *s + w * v;
        }
    }
    let scale = factorial::<T>(n) / T::from_usize_lossy(n + 1);
    Ok(sums.into_iter().map(|s| scale * s).collect())
}

pub fn cal_from_potential<T: Real>(
    field: &dyn TimeDepField<T>,
    kind: LiouvilleKind,
    q: &QuadratureConfig,
    cfg: &IntegratorConfig,
) -> Result<T> {
    Ok(cal_from_potentials(field, &[kind], q, cfg)?[0])
}

/// Grid under-estimate of `∫₀¹ max_x |H(t, x)| dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1InfEstimate<T> {
    pub value: T,
    pub resolution: usize,
    pub spacing: T,
}

pub fn l1inf_norm<T: Real>(
    field: &dyn TimeDepField<T>,
    time_nodes: usize,
    resolution: usize,
) -> Result<L1InfEstimate<T>> {
    let q = QuadratureConfig {
        time_nodes,
        ..Default::default()
    };
    q.validate()?;
    if resolution < 2 {
        return Err(crate::LabError::InvalidParameter(format!(
            "L^(1,∞) grid needs at least 2 points per axis, got {resolution}"
        )));
    }
    let grid = field.support().grid(resolution);
    let sup_at = |t: T| grid.iter().fold(T::zero(), |m, x| m.max(field.value(t, x).abs()));
    let value = if field.is_autonomous() {
        sup_at(T::zero())
    } else {
        time_rule(field, &q).integrate(sup_at)
    };
    Ok(L1InfEstimate {
        value,
        resolution,
        spacing: field.support().grid_spacing(resolution),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalabiReport<T> {
    pub cal_h: T,
    pub cal_f: Vec<(LiouvilleKind, T)>,
    /// Largest pairwise difference among all computed values.
    pub discrepancy: T,
    pub quadrature: QuadratureConfig,
    pub integrator: IntegratorConfig,
}

impl<T: Real> CalabiReport<T> {
    pub fn cal_f(&self, kind: LiouvilleKind) -> Option<T> {
        self.cal_f.iter().find(|(k, _)| *k == kind).map(|&(_, v)| v)
    }
}

pub fn calabi_report<T: Real>(
    field: &dyn TimeDepField<T>,
    kinds: &[LiouvilleKind],
    q: &QuadratureConfig,
    cfg: &IntegratorConfig,
) -> Result<CalabiReport<T>> {
    let cal_h = cal_from_hamiltonian(field, q)?;
    let values = cal_from_potentials(field, kinds, q, cfg)?;
    let mut all = vec![cal_h];
    all.extend(values.iter().copied());
    let mut discrepancy = T::zero();
    for (i, &a) in all.iter().enumerate() {
        for &b in &all[i + 1..] {
            discrepancy = discrepancy.max((a - b).abs());
        }
    }
    Ok(CalabiReport {
        cal_h,
        cal_f: kinds.iter().copied().zip(values).collect(),
        discrepancy,
        quadrature: *q,
        integrator: *cfg,
    })
}
