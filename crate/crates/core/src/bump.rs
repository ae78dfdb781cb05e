//! Smooth compactly supported bumps built from the `exp(−1/s)` spline.

use smallvec::SmallVec;

use crate::error::{LabError, Result};
use crate::geometry::{BoxRegion, Point};
use crate::linalg::{self, Coords, Matrix};
use crate::scalar::Real;

/// Value and first two derivatives of a one-variable function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet<T> {
    pub fn constant(value: T) -> Self {
        Self {
            value,
            d1: T::zero(),
            d2: T::zero(),
        }
    }

    /// Product rule.
    pub fn mul(self, other: Self) -> Self {
        Self {
            value: self.value * other.value,
            d1: self.d1 * other.value + self.value * other.d1,
            d2: self.d2 * other.value
                + T::lit(2.0) * self.d1 * other.d1
                + self.value * other.d2,
        }
    }
}

/// The C^∞ transition `ψ(s) = e(s) / (e(s) + e(1−s))`, `e(s) = exp(−1/s)`:
/// 0 for `s ≤ 0`, 1 for `s ≥ 1`, with every derivative vanishing at both ends.
pub fn transition<T: Real>(s: T) -> Jet<T> {
    let one = T::one();
    if s <= T::zero() {
        return Jet::constant(T::zero());
    }
    if s >= one {
        return Jet::constant(one);
    }
    let r = one - s;
    let z = one / s - one / r;
    // ψ = 1 / (1 + e^z); q = ψ(1 − ψ) evaluated without overflow
    let (psi, q) = if z > T::zero() {
        let e = (-z).exp();
        (e / (one + e), e / ((one + e) * (one + e)))
    } else {
        let e = z.exp();
        (one / (one + e), e / ((one + e) * (one + e)))
    };
    if q == T::zero() {
        return Jet::constant(psi);
    }
    let two = T::lit(2.0);
    let g = one / (s * s) + one / (r * r);
    let dg = -two / (s * s * s) + two / (r * r * r);
    Jet {
        value: psi,
        d1: q * g,
        d2: q * ((one - two * psi) * g * g + dg),
    }
}

/// `max |ψ''|` on `[0, 1]`, sampled on a fine grid.
pub fn max_transition_curvature() -> f64 {
    (1..4096)
        .map(|i| transition(i as f64 / 4096.0).d2.abs())
        .fold(0.0, f64::max)
}

/// One-dimensional plateau profile on `[lo, hi]`: rises over `[lo, lo+w]`,
/// equals 1 on `[lo+w, hi−w]` and falls back to 0 over `[hi−w, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauProfile<T> {
    pub lo: T,
    pub hi: T,
    pub width: T,
}

impl<T: Real> PlateauProfile<T> {
    pub fn eval(&self, x: T) -> Jet<T> {
        if x <= self.lo || x >= self.hi {
            return Jet::constant(T::zero());
        }
        let inv_w = self.width.recip();
        let rise = transition((x - self.lo) * inv_w);
        let fall = transition((self.hi - x) * inv_w);
        let rise = Jet {
            value: rise.value,
            d1: rise.d1 * inv_w,
            d2: rise.d2 * inv_w * inv_w,
        };
        let fall = Jet {
            value: fall.value,
            d1: -fall.d1 * inv_w,
            d2: fall.d2 * inv_w * inv_w,
        };
        rise.mul(fall)
    }

    pub fn value(&self, x: T) -> T {
        if x <= self.lo || x >= self.hi {
            return T::zero();
        }
        let inv_w = self.width.recip();
        transition((x - self.lo) * inv_w).value * transition((self.hi - x) * inv_w).value
    }

    /// Points where the profile changes regime.
    pub fn breaks(&self) -> [T; 4] {
        [self.lo, self.lo + self.width, self.hi - self.width, self.hi]
    }
}

/// Value, gradient and Hessian of a tensor product `c · Π bⱼ(xⱼ)`.
pub fn product_derivatives<T: Real>(
    scale: T,
    jets: &[Jet<T>],
) -> (T, Coords<T>, Matrix<T>) {
    let d = jets.len();
    // product of all values except those at the given axes
    let without = |a: usize, b: usize| -> T {
        let mut acc = scale;
        for (k, j) in jets.iter().enumerate() {
            if k != a && k != b {
                acc = acc * j.value;
            }
        }
        acc
    };
    let mut grad: Coords<T> = linalg::zeros(d);
    let mut hess = Matrix::zeros(d);
    for r in 0..d {
        let rest = without(r, r);
        grad[r] = jets[r].d1 * rest;
        hess[(r, r)] = jets[r].d2 * rest;
        for c in r + 1..d {
            let v = jets[r].d1 * jets[c].d1 * without(r, c);
            hess[(r, c)] = v;
            hess[(c, r)] = v;
        }
    }
    let value = jets.iter().fold(scale, |acc, j| acc * j.value);
    (value, grad, hess)
}

/// Default lower bound on the transition width, as a fraction of the side.
pub const DEFAULT_MIN_TRANSITION_FRACTION: f64 = 0.04;

/// Smooth bump equal to `height` on a centred sub-box holding a fraction
/// `ρ` of the volume, vanishing identically outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauBump<T> {
    support: BoxRegion<T>,
    profiles: Vec<PlateauProfile<T>>,
    height: T,
    plateau_fraction: T,
}

impl<T: Real> PlateauBump<T> {
    /// Every axis uses the transition width `(1 − ρ^{1/d})/2 · side`, which
    /// must not fall below `min_transition_fraction · side`.
    pub fn new(
        support: BoxRegion<T>,
        plateau_fraction: T,
        height: T,
        min_transition_fraction: T,
    ) -> Result<Self> {
        let rho = plateau_fraction;
        if !(rho > T::zero() && rho < T::one()) {
            return Err(LabError::InvalidParameter(format!(
                "plateau fraction must lie in (0, 1), got {rho}"
            )));
        }
        if !(min_transition_fraction > T::zero() && min_transition_fraction < T::lit(0.5)) {
            return Err(LabError::InvalidParameter(format!(
                "transition fraction must lie in (0, 1/2), got {min_transition_fraction}"
            )));
        }
        let d = T::from_usize_lossy(support.len());
        let fraction = (T::one() - rho.powf(d.recip())) * T::lit(0.5);
        if fraction < min_transition_fraction {
            return Err(LabError::InfeasiblePlateau {
                requested: rho.as_f64(),
                max_feasible: Self::max_feasible_fraction(support.len(), min_transition_fraction)
                    .as_f64(),
            });
        }
        Ok(Self::with_transition_fraction(support, fraction, height))
    }

    /// Largest plateau fraction compatible with the minimum transition width.
    pub fn max_feasible_fraction(axes: usize, min_transition_fraction: T) -> T {
        (T::one() - T::lit(2.0) * min_transition_fraction).powi(axes as i32)
    }

    /// Bump with an explicit transition width fraction (in `(0, ½)`).
    pub fn with_transition_fraction(support: BoxRegion<T>, fraction: T, height: T) -> Self {
        let profiles: Vec<_> = (0..support.len())
            .map(|i| PlateauProfile {
                lo: support.lo()[i],
                hi: support.hi()[i],
                width: fraction * support.side(i),
            })
            .collect();
        let plateau_fraction = (T::one() - T::lit(2.0) * fraction).powi(support.len() as i32);
        Self {
            support,
            profiles,
            height,
            plateau_fraction,
        }
    }

    pub fn support(&self) -> &BoxRegion<T> {
        &self.support
    }

    pub fn height(&self) -> T {
        self.height
    }

    pub fn plateau_fraction(&self) -> T {
        self.plateau_fraction
    }

    pub fn profiles(&self) -> &[PlateauProfile<T>] {
        &self.profiles
    }

    /// The sub-box on which the bump equals its height.
    pub fn plateau_box(&self) -> BoxRegion<T> {
        let lo: Coords<T> = self.profiles.iter().map(|p| p.lo + p.width).collect();
        let hi: Coords<T> = self.profiles.iter().map(|p| p.hi - p.width).collect();
        BoxRegion::new(&lo, &hi).expect("plateau of a valid bump is nondegenerate")
    }

    /// Exact integral: each axis contributes `side − w` because
    /// `ψ(s) + ψ(1−s) = 1`.
    pub fn integral(&self) -> T {
        self.profiles
            .iter()
            .fold(self.height, |acc, p| acc * (p.hi - p.lo - p.width))
    }

    pub fn value(&self, x: &[T]) -> T {
        if !self.support.contains_interior(x) {
            return T::zero();
        }
        self.profiles
            .iter()
            .zip(x)
            .fold(self.height, |acc, (p, &xi)| acc * p.value(xi))
    }

    pub fn derivatives(&self, x: &[T]) -> (T, Coords<T>, Matrix<T>) {
        let d = x.len();
        if !self.support.contains_interior(x) {
            return (T::zero(), linalg::zeros(d), Matrix::zeros(d));
        }
        let jets: SmallVec<[Jet<T>; 4]> =
            self.profiles.iter().zip(x).map(|(p, &xi)| p.eval(xi)).collect();
        product_derivatives(self.height, &jets)
    }

    pub fn axis_breaks(&self, axis: usize) -> Vec<T> {
        self.profiles[axis].breaks().to_vec()
    }

    pub fn center(&self) -> Point<T> {
        self.support.center()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn transition_endpoints_and_symmetry() {
        assert_eq!(transition(0.0f64).value, 0.0);
        assert_eq!(transition(1.0f64).value, 1.0);
        assert_eq!(transition(-3.0f64).d1, 0.0);
        for &s in &[0.1, 0.3, 0.5, 0.77] {
            let a = transition(s);
            let b = transition(1.0 - s);
            assert_abs_diff_eq!(a.value + b.value, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(a.d1, b.d1, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(transition(0.5f64).d1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn transition_derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..50 {
            let s = i as f64 / 50.0;
            let j = transition(s);
            let d1 = (transition(s + h).value - transition(s - h).value) / (2.0 * h);
            let d2 = (transition(s + h).d1 - transition(s - h).d1) / (2.0 * h);
            assert_abs_diff_eq!(j.d1, d1, epsilon = 1e-7);
            assert_abs_diff_eq!(j.d2, d2, epsilon = 1e-5 * (1.0 + j.d2.abs()));
        }
    }

    #[test]
    fn transition_is_finite_near_endpoints() {
        for &s in &[1e-300f64, 1e-12, 1e-3, 1.0 - 1e-12] {
            let j = transition(s);
            assert!(j.value.is_finite() && j.d1.is_finite() && j.d2.is_finite(), "{s}");
        }
    }

    fn unit_bump(rho: f64) -> PlateauBump<f64> {
        PlateauBump::new(BoxRegion::cube(2, 0.0, 1.0).unwrap(), rho, 1.0, 0.01).unwrap()
    }

    #[test]
    fn plateau_value_at_center_and_boundary() {
        let b = unit_bump(0.9);
        assert_eq!(b.value(&[0.5, 0.5]), 1.0);
        assert_eq!(b.value(&[0.0, 0.5]), 0.0);
        assert_eq!(b.value(&[0.3, 1.0]), 0.0);
        assert_eq!(b.value(&[1.2, 0.5]), 0.0);
        assert_abs_diff_eq!(b.plateau_box().volume(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_plateau_reports_maximum() {
        let err = PlateauBump::new(BoxRegion::cube(2, 0.0, 1.0).unwrap(), 0.99, 1.0, 0.05)
            .unwrap_err();
        match err {
            LabError::InfeasiblePlateau {
                requested,
                max_feasible,
            } => {
                assert_eq!(requested, 0.99);
                assert_abs_diff_eq!(max_feasible, 0.81, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(PlateauBump::new(BoxRegion::cube(2, 0.0, 1.0).unwrap(), 1.0, 1.0, 0.05).is_err());
    }

    #[test]
    fn analytic_gradient_and_hessian_match_finite_differences() {
        let b = PlateauBump::new(
            BoxRegion::new(&[-1.0, -0.5], &[1.0, 1.5]).unwrap(),
            0.3,
            0.7,
            0.01,
        )
        .unwrap();
        for &p in &[[0.1, 0.2], [-0.8, 1.3], [0.9, -0.4], [0.0, 0.5]] {
            let (_, g, h) = b.derivatives(&p);
            let g_fd = crate::fd::gradient(|x| b.value(x), &p);
            for i in 0..2 {
                assert_abs_diff_eq!(g[i], g_fd[i], epsilon = 1e-8);
            }
            let h_fd = crate::fd::jacobian(|x| b.derivatives(x).1, &p);
            assert!(h.sub(&h_fd).max_abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn exact_integral_matches_fine_quadrature() {
        let b = unit_bump(0.9);
        let m = 2000;
        let h = 1.0 / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            for j in 0..m {
                sum += b.value(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            }
        }
        sum *= h * h;
        assert_abs_diff_eq!(sum, b.integral(), epsilon = 1e-6);
        assert!(b.integral() >= 0.9 && b.integral() <= 1.0);
    }
}
