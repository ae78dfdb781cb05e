//! Gauss–Legendre and midpoint rules, composite over break points, and their
//! tensor products over boxes.

use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::field::merge_breaks;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    GaussLegendre,
    Midpoint,
}

impl FromStr for QuadratureRule {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss_legendre" | "gauss-legendre" | "gl" => Ok(QuadratureRule::GaussLegendre),
            "midpoint" => Ok(QuadratureRule::Midpoint),
            other => Err(LabError::InvalidParameter(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// Node budget for space-time integrals over a field's support.
///
/// `spatial_nodes_per_axis` is spread across the smooth panels of each axis,
/// with at least [`QuadratureConfig::MIN_NODES_PER_PANEL`] nodes per panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub spatial_nodes_per_axis: usize,
    pub time_nodes: usize,
    pub rule: QuadratureRule,
}

impl QuadratureConfig {
    pub const MIN_NODES_PER_PANEL: usize = 8;

    pub fn new(spatial_nodes_per_axis: usize, time_nodes: usize, rule: QuadratureRule) -> Result<Self> {
        let cfg = Self {
            spatial_nodes_per_axis,
            time_nodes,
            rule,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spatial_nodes_per_axis < 2 || self.time_nodes < 2 {
            return Err(LabError::InvalidParameter(format!(
                "quadrature needs at least 2 nodes (spatial {}, time {})",
                self.spatial_nodes_per_axis, self.time_nodes
            )));
        }
        Ok(())
    }

    /// Nodes given to each panel when `total` nodes cover `panels` panels.
    pub fn nodes_per_panel(total: usize, panels: usize) -> usize {
        total
            .div_ceil(panels.max(1))
            .max(Self::MIN_NODES_PER_PANEL.min(total))
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            spatial_nodes_per_axis: 64,
            time_nodes: 32,
            rule: QuadratureRule::GaussLegendre,
        }
    }
}

/// A one-dimensional rule: `∫ f ≈ Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule1D<T> {
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn append_mapped(&mut self, reference: &Rule1D<T>, a: T, b: T) {
        let half = T::lit(0.5) * (b - a);
        let mid = T::lit(0.5) * (a + b);
        for (&x, &w) in reference.nodes.iter().zip(&reference.weights) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }
}

/// Gauss–Legendre rule with `n` nodes on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> Rule1D<T> {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n, in f64, from the Tricomi-style guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    Rule1D { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Midpoint rule with `n` cells on `[−1, 1]`.
pub fn midpoint<T: Real>(n: usize) -> Rule1D<T> {
    let h = T::lit(2.0) / T::from_usize_lossy(n);
    Rule1D {
        nodes: (0..n)
            .map(|i| -T::one() + h * (T::from_usize_lossy(i) + T::lit(0.5)))
            .collect(),
        weights: vec![h; n],
    }
}

fn reference_rule<T: Real>(rule: QuadratureRule, n: usize) -> Rule1D<T> {
    match rule {
        QuadratureRule::GaussLegendre => gauss_legendre(n),
        QuadratureRule::Midpoint => midpoint(n),
    }
}

/// Composite rule on `[a, b]` with panels split at the interior `breaks`.
/// The node budget `total` is spread over the panels.
pub fn composite<T: Real>(rule: QuadratureRule, total: usize, a: T, b: T, breaks: &[T]) -> Rule1D<T> {
    let mut edges = vec![a];
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let edges = merge_breaks(edges);
    let panels = edges.len() - 1;
    let per_panel = QuadratureConfig::nodes_per_panel(total, panels);
    let reference = reference_rule::<T>(rule, per_panel);
    let mut out = Rule1D {
        nodes: Vec::with_capacity(panels * per_panel),
        weights: Vec::with_capacity(panels * per_panel),
    };
    for w in edges.windows(2) {
        out.append_mapped(&reference, w[0], w[1]);
    }
    out
}

/// Tensor-product sum `Σ Πwᵢ f(x)` over all node combinations, in a fixed
/// lexicographic order (last axis fastest).
pub fn tensor_sum<T: Real>(axes: &[Rule1D<T>], mut f: impl FnMut(&[T]) -> T) -> T {
    tensor_nodes(axes).map(|(x, w)| w * f(&x)).sum()
}

/// Iterator over `(point, weight)` pairs of a tensor-product rule.
pub fn tensor_nodes<T: Real>(axes: &[Rule1D<T>]) -> impl Iterator<Item = (Vec<T>, T)> + '_ {
    let d = axes.len();
    let total: usize = axes.iter().map(|a| a.len()).product();
    (0..total).map(move |mut flat| {
        let mut point = vec![T::zero(); d];
        let mut weight = T::one();
        for axis in (0..d).rev() {
            let n = axes[axis].len();
            let i = flat % n;
            flat /= n;
            point[axis] = axes[axis].nodes[i];
            weight = weight * axes[axis].weights[i];
        }
        (point, weight)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_order_nodes_match_closed_forms() {
        let r2 = gauss_legendre::<f64>(2);
        assert_abs_diff_eq!(r2.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights[0], 1.0, epsilon = 1e-15);
        let r3 = gauss_legendre::<f64>(3);
        assert_abs_diff_eq!(r3.nodes[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r3.nodes[1], 0.0);
        assert_abs_diff_eq!(r3.weights[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r3.weights[0], 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in [1usize, 4, 17, 64] {
            let r = gauss_legendre::<f64>(n);
            assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for deg in 0..(2 * n).min(40) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx = r.integrate(|x| x.powi(deg as i32));
                assert_abs_diff_eq!(approx, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn single_precision_rule() {
        let r = gauss_legendre::<f32>(8);
        let v = r.integrate(|x| x * x);
        assert!((v - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn composite_respects_breaks_and_budget() {
        let r = composite::<f64>(QuadratureRule::GaussLegendre, 64, 0.0, 1.0, &[0.25, 0.75, 3.0]);
        assert_eq!(r.len(), 3 * 22);
        assert_abs_diff_eq!(r.integrate(|x| x.exp()), 1f64.exp() - 1.0, epsilon = 1e-14);
        let many = composite::<f64>(QuadratureRule::GaussLegendre, 64, 0.0, 1.0, &(1..24).map(|i| i as f64 / 24.0).collect::<Vec<_>>());
        assert_eq!(many.len(), 24 * 8);
    }

    #[test]
    fn midpoint_converges_at_second_order() {
        let e = |n| (midpoint::<f64>(n).integrate(|x| x.exp()) - (1f64.exp() - (-1f64).exp())).abs();
        let ratio = e(50) / e(100);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn tensor_sum_of_separable_integrand() {
        let r = gauss_legendre::<f64>(6);
        let axes = vec![r.clone(), r];
        let v = tensor_sum(&axes, |p| p[0] * p[0] * (1.0 + p[1]));
        assert_abs_diff_eq!(v, 2.0 / 3.0 * 2.0, epsilon = 1e-14);
    }
}
