//! The graph of a map, the linear Darboux–Weinstein chart of `M × M`, and
//! the section one-form of a graphical map.
//!
//! The chart sends `(X, Y)` to `q = (X + Y)/2`, `p = J̄(X − Y)` with
//! `J̄(u_x, u_y) = (u_y, −u_x)`. It pulls `−dθ_can = Σ dq∧dp` back to
//! `ω ⊕ (−ω)` and maps the diagonal onto the zero section.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::fd;
use crate::flow::FlowMap;
use crate::geometry::{omega_matrix, Covector, Dim, Point};
use crate::linalg::{self, Coords, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint<T> {
    pub q: Point<T>,
    pub p: Covector<T>,
}

impl<T: Real> ChartPoint<T> {
    /// `(q, p)` as one vector of length `4n`.
    pub fn flatten(&self) -> Coords<T> {
        self.q.iter().chain(&self.p).copied().collect()
    }
}

/// `J̄(u_x, u_y) = (u_y, −u_x)`.
pub fn jbar<T: Real>(u: &[T]) -> Coords<T> {
    let n = u.len() / 2;
    (0..2 * n)
        .map(|i| if i < n { u[i + n] } else { -u[i - n] })
        .collect()
}

/// `J̄⁻¹(a, b) = (−b, a)`.
pub fn jbar_inverse<T: Real>(u: &[T]) -> Coords<T> {
    let n = u.len() / 2;
    (0..2 * n)
        .map(|i| if i < n { -u[i + n] } else { u[i - n] })
        .collect()
}

pub fn dw_chart<T: Real>(x: &[T], y: &[T]) -> Result<ChartPoint<T>> {
    if x.len() != y.len() {
        return Err(LabError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let half = T::lit(0.5);
    Ok(ChartPoint {
        q: x.iter().zip(y).map(|(&a, &b)| half * (a + b)).collect(),
        p: jbar(&linalg::sub(x, y)),
    })
}

/// `(X, Y) = (q + ½J̄⁻¹p, q − ½J̄⁻¹p)`.
pub fn dw_chart_inverse<T: Real>(c: &ChartPoint<T>) -> (Point<T>, Point<T>) {
    let u = jbar_inverse(&c.p);
    let half = T::lit(0.5);
    (linalg::axpy(&c.q, half, &u), linalg::axpy(&c.q, -half, &u))
}

/// Finite-difference step for the chart Jacobian; the chart is linear, so a
/// large step only reduces roundoff.
pub const CHART_FD_STEP: f64 = 1e-3;

/// Max-entry residual `‖DΨᵀ Ω_target DΨ − Ω_source‖` over `probes` random
/// points of `M × M`, for an arbitrary chart candidate.
pub fn chart_symplecticity_residual_of<T: Real>(
    dim: Dim,
    chart: impl Fn(&[T], &[T]) -> ChartPoint<T>,
    probes: usize,
    seed: u64,
) -> T {
    let d = dim.full();
    let omega = omega_matrix::<T>(dim);
    let source = Matrix::from_fn(2 * d, |r, c| {
        if r < d && c < d {
            omega[(r, c)]
        } else if r >= d && c >= d {
            -omega[(r - d, c - d)]
        } else {
            T::zero()
        }
    });
    let target = omega_matrix::<T>(Dim::new(d).expect("d ≥ 2"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..probes {
        let z: Vec<T> = (0..2 * d).map(|_| T::lit(rng.gen_range(-2.0..2.0))).collect();
        let dpsi = fd::jacobian_with(
            |w| chart(&w[..d], &w[d..]).flatten(),
            &z,
            |_| T::lit(CHART_FD_STEP),
        );
        let pulled = dpsi.transpose().mul(&target).mul(&dpsi);
        worst = worst.max(pulled.sub(&source).max_abs());
    }
    worst
}

pub fn chart_symplecticity_residual<T: Real>(dim: Dim, probes: usize, seed: u64) -> T {
    chart_symplecticity_residual_of(dim, |x, y| dw_chart(x, y).expect("equal lengths"), probes, seed)
}

/// `Ψ(φ(x), x)`, a point of `L_φ`.
pub fn graph_point<T: Real>(map: &FlowMap<T>, x: &[T]) -> Result<ChartPoint<T>> {
    let y = map.forward(x)?;
    dw_chart(&y, x)
}

/// `(φ(x) + x)/2` and its Jacobian `(Dφ(x) + I)/2`.
pub fn midpoint_map<T: Real>(map: &FlowMap<T>, x: &[T]) -> Result<(Point<T>, Matrix<T>, Point<T>)> {
    let (y, j) = map.forward_with_jacobian(x)?;
    let half = T::lit(0.5);
    let m = x.iter().zip(&y).map(|(&a, &b)| half * (a + b)).collect();
    let dm = j.add(&Matrix::identity(x.len())).scaled(half);
    Ok((m, dm, y))
}

pub const GRAPHICAL_DET_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalityReport<T> {
    pub is_graphical: bool,
    /// `min |det((Dφ + I)/2)|` over the probe grid.
    pub min_abs_det: T,
    /// Probes where that determinant is negative (an orientation flip means a
    /// fold was crossed even if no sample lands on it).
    pub negative_dets: usize,
    pub injectivity_collisions: usize,
    pub resolution: usize,
    pub threshold: T,
}

/// Samples `(Dφ + I)/2` on a grid over the support box and hashes midpoint
/// images to look for two far-apart probes landing on nearly the same point.
///
/// A collision is a pair of probes at grid distance ≥ 2 (Chebyshev, in grid
/// indices) whose images lie within an eighth of the grid spacing.
pub fn graphicality_report<T: Real>(map: &FlowMap<T>, resolution: usize) -> Result<GraphicalityReport<T>> {
    if resolution < 2 {
        return Err(LabError::InvalidParameter(format!(
            "graphicality grid needs at least 2 points per axis, got {resolution}"
        )));
    }
    let support = map.support();
    let d = support.len();
    let grid = support.grid(resolution);
    let radius = support.grid_spacing(resolution) / T::lit(8.0);
    let mut min_abs_det = T::infinity();
    let mut negative_dets = 0;
    let mut images = Vec::with_capacity(grid.len());
    for x in &grid {
        let (m, dm, _) = midpoint_map(map, x)?;
        let det = dm.det();
        min_abs_det = min_abs_det.min(det.abs());
        if det < T::zero() {
            negative_dets += 1;
        }
        images.push(m);
    }
    let key = |m: &[T]| -> Vec<i64> {
        m.iter()
            .map(|&v| (v / radius).floor().to_i64().unwrap_or(i64::MAX))
            .collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, m) in images.iter().enumerate() {
        buckets.entry(key(m)).or_default().push(i);
    }
    let index_of = |flat: usize| -> Vec<i64> {
        let mut rest = flat;
        let mut out = vec![0i64; d];
        for axis in (0..d).rev() {
            out[axis] = (rest % resolution) as i64;
            rest /= resolution;
        }
        out
    };
    let neighbours: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let mut collisions = 0;
    for (i, m) in images.iter().enumerate() {
        let base = key(m);
        let gi = index_of(i);
        for off in &neighbours {
            let k: Vec<i64> = base.iter().zip(off).map(|(a, b)| a.saturating_add(*b)).collect();
            let Some(bucket) = buckets.get(&k) else { continue };
            for &j in bucket {
                if j <= i {
                    continue;
                }
                let gj = index_of(j);
                let far = gi.iter().zip(&gj).any(|(a, b)| (a - b).abs() >= 2);
                if far && linalg::norm(&linalg::sub(m, &images[j])) < radius {
                    collisions += 1;
                }
            }
        }
    }
    let threshold = T::lit(GRAPHICAL_DET_THRESHOLD);
    Ok(GraphicalityReport {
        is_graphical: min_abs_det > threshold && negative_dets == 0 && collisions == 0,
        min_abs_det,
        negative_dets,
        injectivity_collisions: collisions,
        resolution,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Solves `(φ(x) + x)/2 = q` by damped Newton from `x = q`; returns `x` and
/// `φ(x)`.
pub fn midpoint_preimage<T: Real>(map: &FlowMap<T>, q: &[T], newton: &NewtonConfig) -> Result<(Point<T>, Point<T>)> {
    map.field().dim().check(q)?;
    if !map.support().contains_interior(q) {
        return Ok((linalg::from_slice(q), linalg::from_slice(q)));
    }
    let tol = T::lit(newton.tol);
    let mut x: Point<T> = linalg::from_slice(q);
    let (m, mut dm, mut y) = midpoint_map(map, &x)?;
    let mut residual = linalg::sub(&m, q);
    let mut norm = linalg::max_abs(&residual);
    for _ in 0..newton.max_iter {
        if norm <= tol {
            return Ok((x, y));
        }
        let delta = dm.solve(&residual)?;
        let mut step = T::one();
        loop {
            let trial = linalg::axpy(&x, -step, &delta);
            let (tm, tdm, ty) = midpoint_map(map, &trial)?;
            let tres = linalg::sub(&tm, q);
            let tnorm = linalg::max_abs(&tres);
            if tnorm < norm || step < T::lit(1.0 / 1024.0) {
                x = trial;
                (dm, y) = (tdm, ty);
                residual = tres;
                norm = tnorm;
                break;
            }
            step = step * T::lit(0.5);
        }
    }
    if norm <= tol {
        return Ok((x, y));
    }
    Err(LabError::NewtonFailed {
        context: "midpoint preimage",
        iterations: newton.max_iter,
        residual: norm.as_f64(),
    })
}

/// The section `α` of a graphical map: `α(q) = J̄(φ(x) − x)` where
/// `(φ(x) + x)/2 = q`.
#[derive(Debug, Clone)]
pub struct SectionForm<T: Real> {
    map: FlowMap<T>,
    newton: NewtonConfig,
}

impl<T: Real> SectionForm<T> {
    /// Checks graphicality first at the given probe resolution.
    pub fn new(map: FlowMap<T>, newton: NewtonConfig, resolution: usize) -> Result<Self> {
        let report = graphicality_report(&map, resolution)?;
        if !report.is_graphical {
            return Err(LabError::NotGraphical {
                min_abs_det: report.min_abs_det.as_f64(),
                negative_dets: report.negative_dets,
                collisions: report.injectivity_collisions,
            });
        }
        Ok(Self::new_unchecked(map, newton))
    }

    pub fn new_unchecked(map: FlowMap<T>, newton: NewtonConfig) -> Self {
        Self { map, newton }
    }

    pub fn map(&self) -> &FlowMap<T> {
        &self.map
    }

    pub fn eval(&self, q: &[T]) -> Result<Covector<T>> {
        alpha_at(&self.map, q, &self.newton)
    }
}

pub fn alpha_at<T: Real>(map: &FlowMap<T>, q: &[T], newton: &NewtonConfig) -> Result<Covector<T>> {
    let (x, y) = midpoint_preimage(map, q, newton)?;
    Ok(jbar(&linalg::sub(&y, &x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::PlateauBump;
    use crate::field::{ShapedBump, Steady};
    use crate::flow::IntegratorConfig;
    use crate::geometry::BoxRegion;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn rotation_map(rate: f64) -> FlowMap<f64> {
        let bump = PlateauBump::new(BoxRegion::cube(2, -1.5, 1.5).unwrap(), 0.3, 1.0, 0.02).unwrap();
        let field = Arc::new(Steady(ShapedBump::rotation(bump, rate).unwrap()));
        FlowMap::new(field, IntegratorConfig::default(), 1.0).unwrap()
    }

    #[test]
    fn worked_example() {
        let c = dw_chart(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(c.q.as_slice(), &[0.5, 0.0]);
        assert_eq!(c.p.as_slice(), &[0.0, -1.0]);
        let d = dw_chart(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert_eq!(d.p.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn inverse_round_trip() {
        let x = [0.3, -1.2, 2.5, 0.1];
        let y = [-0.7, 0.4, 1.0, 3.3];
        let (a, b) = dw_chart_inverse(&dw_chart(&x, &y).unwrap());
        for i in 0..4 {
            assert_abs_diff_eq!(a[i], x[i], epsilon = 1e-15);
            assert_abs_diff_eq!(b[i], y[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn chart_is_symplectic_in_each_dimension() {
        for n in 1..=3 {
            let r: f64 = chart_symplecticity_residual(Dim::new(n).unwrap(), 20, 7);
            assert!(r <= 1e-10, "n = {n}: {r}");
        }
    }

    #[test]
    fn sign_flipped_chart_is_detected() {
        let flipped = |x: &[f64], y: &[f64]| {
            let mut c = dw_chart(x, y).unwrap();
            c.p.iter_mut().for_each(|v| *v = -*v);
            c
        };
        let r = chart_symplecticity_residual_of(Dim::default(), flipped, 10, 3);
        assert!(r >= 1.0);
    }

    #[test]
    fn identity_is_graphical_with_zero_section() {
        let id = FlowMap::identity(BoxRegion::cube(2, -1.0, 1.0).unwrap()).unwrap();
        let rep = graphicality_report(&id, 9).unwrap();
        assert!(rep.is_graphical);
        assert_eq!(rep.min_abs_det, 1.0);
        let a = alpha_at(&id, &[0.2, 0.3], &NewtonConfig::default()).unwrap();
        assert_eq!(a.as_slice(), &[0.0, 0.0]);
        let g = graph_point(&id, &[0.2, 0.3]).unwrap();
        assert_eq!(g.p.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn rotation_sweep_crosses_the_fold() {
        // the plateau alone would allow rates up to π; the cutoff shear folds much earlier
        let reports: Vec<_> = [0.05, 0.1, 0.2, 0.5]
            .iter()
            .map(|&c| graphicality_report(&rotation_map(c), 33).unwrap())
            .collect();
        assert!(reports[0].is_graphical && reports[1].is_graphical);
        assert!(!reports[3].is_graphical);
        assert!(reports[3].negative_dets > 0);
        for w in reports.windows(2) {
            assert!(w[1].min_abs_det < w[0].min_abs_det);
        }
        assert!(reports[0].min_abs_det <= 0.5 * (1.0 + 0.05f64.cos()) + 1e-9);
    }

    #[test]
    fn alpha_round_trip_on_grid() {
        let map = rotation_map(0.1);
        let newton = NewtonConfig::default();
        for x in map.support().grid(7) {
            let g = graph_point(&map, &x).unwrap();
            let a = alpha_at(&map, &g.q, &newton).unwrap();
            assert!(linalg::max_abs(&linalg::sub(&a, &g.p)) < 1e-9);
            assert!(linalg::norm(&g.p) <= linalg::norm(&linalg::sub(&map.forward(&x).unwrap(), &x)) + 1e-15);
        }
    }
}
