//! The correction function `R`, the generalized phase function `S_φ` of a
//! graph, the pullback integrals tying `S_φ` to the Calabi invariant, and
//! the sup-norm bound for graphical maps.
//!
//! Sign convention: `dS_φ = −θ_can` on `L_φ`, with `θ_can = ⟨p, dq⟩`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{
    alpha_at, dw_chart, dw_chart_inverse, graphicality_report, midpoint_preimage, ChartPoint, NewtonConfig,
};
use crate::error::{LabError, Result};
use crate::fd;
use crate::flow::FlowMap;
use crate::geometry::{liouville, LiouvilleKind, Point};
use crate::linalg::{self, Coords, Matrix};
use crate::quadrature::{gauss_legendre, tensor_nodes, QuadratureConfig};
use crate::scalar::{factorial, Real};

pub const DEFAULT_PATH_NODES: usize = 8;

/// The closed form `β = −θ_can − (Ψ⁻¹)*Λ` on `T*Δ`, where
/// `Λ = pr₁*λ − pr₂*λ`. Returns the `dq` and `dp` components.
pub fn correction_form<T: Real>(kind: LiouvilleKind, c: &ChartPoint<T>) -> (Coords<T>, Coords<T>) {
    let (x, y) = dw_chart_inverse(c);
    let lx = liouville(kind, &x);
    let ly = liouville(kind, &y);
    let half = T::lit(0.5);
    let beta_q = c
        .p
        .iter()
        .zip(lx.iter().zip(&ly))
        .map(|(&p, (&a, &b))| -p - (a - b))
        .collect();
    let sum: Coords<T> = lx.iter().zip(&ly).map(|(&a, &b)| a + b).collect();
    let beta_p = crate::chart::jbar(&sum).iter().map(|&v| -half * v).collect();
    (beta_q, beta_p)
}

/// `∫ β` along the straight segment from `a` to `b`, Gauss–Legendre with
/// `nodes` nodes.
pub fn segment_integral<T: Real>(kind: LiouvilleKind, a: &ChartPoint<T>, b: &ChartPoint<T>, nodes: usize) -> T {
    let dq = linalg::sub(&b.q, &a.q);
    let dp = linalg::sub(&b.p, &a.p);
    let half = T::lit(0.5);
    gauss_legendre::<T>(nodes).integrate(|u| {
        let s = half * (u + T::one());
        let c = ChartPoint {
            q: linalg::axpy(&a.q, s, &dq),
            p: linalg::axpy(&a.p, s, &dp),
        };
        let (bq, bp) = correction_form(kind, &c);
        half * (linalg::dot(&bq, &dq) + linalg::dot(&bp, &dp))
    })
}

/// `R(q, p)`: the integral of `β` along the fiber segment `s ↦ (q, s·p)`.
/// `R` vanishes on the zero section and `dR = β`.
pub fn r_function<T: Real>(kind: LiouvilleKind, c: &ChartPoint<T>, path_nodes: usize) -> T {
    let base = ChartPoint {
        q: c.q.clone(),
        p: linalg::zeros(c.p.len()),
    };
    segment_integral(kind, &base, c, path_nodes)
}

/// Max over probes of `|∇R − β|∞`, with a finite-difference `∇R` in the
/// flattened `(q, p)` coordinates.
pub fn r_gradient_residual<T: Real>(kind: LiouvilleKind, probes: &[ChartPoint<T>], path_nodes: usize) -> T {
    let mut worst = T::zero();
    for c in probes {
        let d = c.q.len();
        let z = c.flatten();
        let grad = fd::gradient(
            |w| {
                let point = ChartPoint {
                    q: linalg::from_slice(&w[..d]),
                    p: linalg::from_slice(&w[d..]),
                };
                r_function(kind, &point, path_nodes)
            },
            &z,
        );
        let (bq, bp) = correction_form(kind, c);
        let beta: Coords<T> = bq.iter().chain(&bp).copied().collect();
        worst = worst.max(linalg::max_abs(&linalg::sub(&grad, &beta)));
    }
    worst
}

/// Max over probes of the gap between `R(q, p)` and the integral of `β`
/// along a dog-leg `(q, 0) → (q + w, p/2 + v) → (q, p)` with random `w, v`.
pub fn path_independence_residual<T: Real>(
    kind: LiouvilleKind,
    probes: &[ChartPoint<T>],
    path_nodes: usize,
    seed: u64,
) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for c in probes {
        let d = c.q.len();
        let start = ChartPoint {
            q: c.q.clone(),
            p: linalg::zeros(d),
        };
        let corner = ChartPoint {
            q: c.q.iter().map(|&v| v + T::lit(rng.gen_range(-1.0..1.0))).collect(),
            p: c.p.iter().map(|&v| T::lit(0.5) * v + T::lit(rng.gen_range(-1.0..1.0))).collect(),
        };
        let bent = segment_integral(kind, &start, &corner, path_nodes) + segment_integral(kind, &corner, c, path_nodes);
        worst = worst.max((bent - r_function(kind, c, path_nodes)).abs());
    }
    worst
}

/// `S_φ` at `Ψ(φ(x), x)` together with its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample<T> {
    pub s: T,
    pub r: T,
    pub f: T,
}

/// Phase function of `L_φ` for a realized time-one map, parameterized by
/// `x ∈ M` through `x ↦ Ψ(φ(x), x)`.
#[derive(Debug, Clone)]
pub struct PhaseData<T: Real> {
    map: FlowMap<T>,
    kind: LiouvilleKind,
    path_nodes: usize,
}

impl<T: Real> PhaseData<T> {
    pub fn new(map: FlowMap<T>, kind: LiouvilleKind, path_nodes: usize) -> Result<Self> {
        if map.t_final() != T::one() {
            return Err(LabError::InvalidParameter(format!(
                "phase functions need a time-one map, got t = {}",
                map.t_final()
            )));
        }
        if path_nodes == 0 {
            return Err(LabError::InvalidParameter("path quadrature needs at least one node".into()));
        }
        Ok(Self { map, kind, path_nodes })
    }

    pub fn map(&self) -> &FlowMap<T> {
        &self.map
    }

    pub fn kind(&self) -> LiouvilleKind {
        self.kind
    }

    pub fn r_eval(&self, c: &ChartPoint<T>) -> T {
        r_function(self.kind, c, self.path_nodes)
    }

    /// `S = R∘Ψ(φ(x), x) + f_{λ,φ}(x)`, from one trajectory.
    pub fn sample(&self, x: &[T]) -> Result<PhaseSample<T>> {
        let tr = self.map.trace(x, &[self.kind], false)?;
        let f = tr.potentials[0].1;
        let r = self.r_eval(&dw_chart(&tr.end, x)?);
        Ok(PhaseSample { s: r + f, r, f })
    }

    pub fn s_eval(&self, x: &[T]) -> Result<T> {
        Ok(self.sample(x)?.s)
    }
}

pub fn phase_function<T: Real>(map: &FlowMap<T>, kind: LiouvilleKind, x: &[T]) -> Result<T> {
    PhaseData::new(map.clone(), kind, DEFAULT_PATH_NODES)?.s_eval(x)
}

/// Max over probes of `|∇(S∘x) + ((Dφ + I)/2)ᵀ p(x)|∞`, the defect of
/// `dS = −θ_can` pulled back along `x ↦ Ψ(φ(x), x)`.
pub fn phase_gradient_residual<T: Real>(phase: &PhaseData<T>, probes: &[Point<T>]) -> Result<T> {
    let mut worst = T::zero();
    for x in probes {
        let grad = fd_gradient_fallible(|p| phase.s_eval(p), x)?;
        let (y, j) = phase.map().forward_with_jacobian(x)?;
        let p = dw_chart(&y, x)?.p;
        let dm = j.add(&Matrix::identity(x.len())).scaled(T::lit(0.5));
        let theta = dm.transpose_mul_vec(&p);
        worst = worst.max(linalg::max_abs(&linalg::add(&grad, &theta)));
    }
    Ok(worst)
}

fn fd_gradient_fallible<T: Real>(f: impl Fn(&[T]) -> Result<T>, x: &[T]) -> Result<Coords<T>> {
    let err = std::cell::RefCell::new(None);
    let g = fd::gradient(
        |p| {
            f(p).unwrap_or_else(|e| {
                err.borrow_mut().get_or_insert(e);
                T::zero()
            })
        },
        x,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

/// `(I_S, I_R) = n! · (∫ S∘Ψ(φ(x), x) dx, ∫ R∘Ψ(φ(x), x) dx)` over the
/// support box. Their difference is `(n + 1)·Cal(φ)`.
pub fn phase_pullback_integrals<T: Real>(phase: &PhaseData<T>, q: &QuadratureConfig) -> Result<(T, T)> {
    q.validate()?;
    let field = phase.map().field();
    // the identity's graph is the zero section, where S and R vanish
    if field.is_zero() {
        return Ok((T::zero(), T::zero()));
    }
    let space = crate::calabi::spatial_rules(field.as_ref(), q);
    let mut i_s = T::zero();
    let mut i_r = T::zero();
    for (x, w) in tensor_nodes(&space) {
        let sample = phase.sample(&x)?;
        i_s = i_s + w * sample.s;
        i_r = i_r + w * sample.r;
    }
    let scale = factorial::<T>(field.dim().half());
    Ok((scale * i_s, scale * i_r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    /// Grid max of `|S_φ|` over `L_φ`.
    pub sup_s: T,
    /// Grid max of `|α|` over the support box.
    pub sup_alpha: T,
    /// Euclidean diameter of the support box.
    pub a: T,
    /// Largest difference quotient of `α` between neighbouring grid points.
    pub lipschitz_alpha: T,
    /// `1e−6 + (A + 1)·Lip(α)·(half the grid diagonal)`.
    pub slack: T,
    pub bound_ok: bool,
    /// Max over probes of `|∇_q(S∘(section)) + α|∞`.
    pub sak_residual: T,
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConfig {
    pub resolution: usize,
    pub sak_probes: usize,
    pub newton: NewtonConfig,
    pub seed: u64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            resolution: 33,
            sak_probes: 24,
            newton: NewtonConfig {
                tol: 1e-12,
                max_iter: 50,
            },
            seed: 0x5eed,
        }
    }
}

/// Checks `max |S_φ| ≤ (A + 1)·max |α|` on grids and the relation
/// `d(S_φ∘α) = −α` at random probes. Requires a graphical map.
pub fn theorem_bound_check<T: Real>(phase: &PhaseData<T>, cfg: &BoundConfig) -> Result<BoundReport<T>> {
    let map = phase.map();
    let report = graphicality_report(map, cfg.resolution)?;
    if !report.is_graphical {
        return Err(LabError::NotGraphical {
            min_abs_det: report.min_abs_det.as_f64(),
            negative_dets: report.negative_dets,
            collisions: report.injectivity_collisions,
        });
    }
    let support = map.support();
    let d = support.len();
    let grid = support.grid(cfg.resolution);
    let spacing = support.grid_spacing(cfg.resolution);
    let mut sup_s = T::zero();
    for x in &grid {
        sup_s = sup_s.max(phase.s_eval(x)?.abs());
    }
    let mut alphas = Vec::with_capacity(grid.len());
    for q in &grid {
        alphas.push(alpha_at(map, q, &cfg.newton)?);
    }
    let sup_alpha = alphas.iter().fold(T::zero(), |m, a| m.max(linalg::norm(a)));
    let mut lipschitz_alpha = T::zero();
    let r = cfg.resolution;
    for (flat, a) in alphas.iter().enumerate() {
        let mut stride = 1;
        for axis in 0..d {
            let index = (flat / stride) % r;
            if index + 1 < r {
                let b = &alphas[flat + stride];
                let h = support.side(axis) / T::from_usize_lossy(r - 1);
                lipschitz_alpha = lipschitz_alpha.max(linalg::norm(&linalg::sub(a, b)) / h);
            }
            stride *= r;
        }
    }
    let a = support.diameter();
    let half_diagonal = T::lit(0.5) * spacing * T::from_usize_lossy(d).sqrt();
    let slack = T::lit(1e-6) + (a + T::one()) * lipschitz_alpha * half_diagonal;
    let bound_ok = sup_s <= (a + T::one()) * sup_alpha + slack;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sak_residual = T::zero();
    let s_over_section = |q: &[T]| -> Result<T> {
        let (x, _) = midpoint_preimage(map, q, &cfg.newton)?;
        phase.s_eval(&x)
    };
    for _ in 0..cfg.sak_probes {
        let q: Point<T> = (0..d)
            .map(|i| {
                let u = T::lit(rng.gen_range(0.05..0.95));
                support.lo()[i] + u * support.side(i)
            })
            .collect();
        let grad = fd_gradient_fallible(&s_over_section, &q)?;
        let alpha = alpha_at(map, &q, &cfg.newton)?;
        sak_residual = sak_residual.max(linalg::max_abs(&linalg::add(&grad, &alpha)));
    }
    Ok(BoundReport {
        sup_s,
        sup_alpha,
        a,
        lipschitz_alpha,
        slack,
        bound_ok,
        sak_residual,
        resolution: cfg.resolution,
    })
}
