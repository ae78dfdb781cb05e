//! Compactly supported functions on ℝ²ⁿ and `[0,1] × ℝ²ⁿ`.
//!
//! Every field declares a support box and must evaluate to exactly zero
//! (with zero derivatives) outside its interior.

use std::fmt::Debug;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::bump::{transition, PlateauBump, PlateauProfile};
use crate::error::{LabError, Result};
use crate::fd;
use crate::geometry::{BoxRegion, Dim, Point};
use crate::linalg::{self, Coords, Matrix};
use crate::scalar::Real;

/// Time-independent field with compact support.
pub trait ScalarField<T: Real>: Debug + Send + Sync {
    fn support(&self) -> &BoxRegion<T>;

    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T]) -> Coords<T> {
        if !self.support().contains_interior(x) {
            return linalg::zeros(x.len());
        }
        fd::gradient(|p| self.value(p), x)
    }

    fn hessian(&self, x: &[T]) -> Matrix<T> {
        if !self.support().contains_interior(x) {
            return Matrix::zeros(x.len());
        }
        fd::jacobian(|p| self.gradient(p), x)
    }

    fn derivatives(&self, x: &[T]) -> (Coords<T>, Matrix<T>) {
        (self.gradient(x), self.hessian(x))
    }

    /// Per-axis points where the field changes regime (used to place
    /// quadrature panels).
    fn axis_breaks(&self, _axis: usize) -> Vec<T> {
        Vec::new()
    }
}

/// Field `H: [0,1] × ℝ²ⁿ → ℝ` whose space support is a box.
pub trait TimeDepField<T: Real>: Debug + Send + Sync {
    fn support(&self) -> &BoxRegion<T>;

    fn value(&self, t: T, x: &[T]) -> T;

    /// Spatial gradient.
    fn gradient(&self, t: T, x: &[T]) -> Coords<T> {
        if !self.support().contains_interior(x) {
            return linalg::zeros(x.len());
        }
        fd::gradient(|p| self.value(t, p), x)
    }

    /// Spatial Hessian.
    fn hessian(&self, t: T, x: &[T]) -> Matrix<T> {
        if !self.support().contains_interior(x) {
            return Matrix::zeros(x.len());
        }
        fd::jacobian(|p| self.gradient(t, p), x)
    }

    /// Gradient and Hessian together; fields that share work between the
    /// two override this.
    fn derivatives(&self, t: T, x: &[T]) -> (Coords<T>, Matrix<T>) {
        (self.gradient(t, x), self.hessian(t, x))
    }

    fn axis_breaks(&self, _axis: usize) -> Vec<T> {
        Vec::new()
    }

    /// Times in `(0, 1)` where the field is only piecewise smooth.
    fn time_breaks(&self) -> Vec<T> {
        Vec::new()
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    /// Identically zero; lets integrals skip their quadrature.
    fn is_zero(&self) -> bool {
        false
    }

    fn dim(&self) -> Dim {
        Dim::new(self.support().len() / 2).expect("support box has even positive dimension")
    }
}

pub type SharedField<T> = Arc<dyn TimeDepField<T>>;
pub type SharedScalarField<T> = Arc<dyn ScalarField<T>>;

fn check_support<T: Real>(support: &BoxRegion<T>) -> Result<()> {
    if support.len() % 2 != 0 {
        return Err(LabError::DegenerateBox(format!(
            "support has {} axes; phase space needs an even number",
            support.len()
        )));
    }
    Ok(())
}

/// `H ≡ 0`, with a nominal support box.
#[derive(Debug, Clone)]
pub struct ZeroField<T> {
    support: BoxRegion<T>,
}

impl<T: Real> ZeroField<T> {
    pub fn new(support: BoxRegion<T>) -> Result<Self> {
        check_support(&support)?;
        Ok(Self { support })
    }
}

impl<T: Real> TimeDepField<T> for ZeroField<T> {
    fn support(&self) -> &BoxRegion<T> {
        &self.support
    }
    fn value(&self, _t: T, _x: &[T]) -> T {
        T::zero()
    }
    fn gradient(&self, _t: T, x: &[T]) -> Coords<T> {
        linalg::zeros(x.len())
    }
    fn hessian(&self, _t: T, x: &[T]) -> Matrix<T> {
        Matrix::zeros(x.len())
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        true
    }
}

impl<T: Real> ScalarField<T> for PlateauBump<T> {
    fn support(&self) -> &BoxRegion<T> {
        PlateauBump::support(self)
    }
    fn value(&self, x: &[T]) -> T {
        PlateauBump::value(self, x)
    }
    fn gradient(&self, x: &[T]) -> Coords<T> {
        PlateauBump::derivatives(self, x).1
    }
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        PlateauBump::derivatives(self, x).2
    }
    fn derivatives(&self, x: &[T]) -> (Coords<T>, Matrix<T>) {
        let (_, g, h) = PlateauBump::derivatives(self, x);
        (g, h)
    }
    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        PlateauBump::axis_breaks(self, axis)
    }
}

/// A bump multiplied by a quadratic polynomial centred at `center`:
/// `(a + ⟨g, x − x₀⟩ + ½ c |x − x₀|²) · bump(x)`.
///
/// With `a = g = 0` this is a rotation generator on the plateau: the
/// time-one map turns the plateau by the angle `−c` about `x₀`.
#[derive(Debug, Clone)]
pub struct ShapedBump<T> {
    bump: PlateauBump<T>,
    center: Point<T>,
    constant: T,
    linear: Coords<T>,
    quadratic: T,
}

impl<T: Real> ShapedBump<T> {
    pub fn new(
        bump: PlateauBump<T>,
        center: &[T],
        constant: T,
        linear: &[T],
        quadratic: T,
    ) -> Result<Self> {
        let d = bump.support().len();
        check_support(bump.support())?;
        if center.len() != d || linear.len() != d {
            return Err(LabError::DimensionMismatch {
                expected: d,
                found: center.len().max(linear.len()),
            });
        }
        Ok(Self {
            bump,
            center: linalg::from_slice(center),
            constant,
            linear: linalg::from_slice(linear),
            quadratic,
        })
    }

    /// `½ c |x − x₀|² · bump`, centred on the bump.
    pub fn rotation(bump: PlateauBump<T>, rate: T) -> Result<Self> {
        let center = bump.center();
        let d = center.len();
        Self::new(bump, &center, T::zero(), &linalg::zeros::<T>(d), rate)
    }

    fn polynomial(&self, x: &[T]) -> (T, Coords<T>) {
        let dx = linalg::sub(x, &self.center);
        let value = self.constant
            + linalg::dot(&self.linear, &dx)
            + T::lit(0.5) * self.quadratic * linalg::dot(&dx, &dx);
        let grad = linalg::axpy(&self.linear, self.quadratic, &dx);
        (value, grad)
    }
}

impl<T: Real> ScalarField<T> for ShapedBump<T> {
    fn support(&self) -> &BoxRegion<T> {
        self.bump.support()
    }

    fn value(&self, x: &[T]) -> T {
        let b = self.bump.value(x);
        if b == T::zero() {
            return T::zero();
        }
        self.polynomial(x).0 * b
    }

    fn gradient(&self, x: &[T]) -> Coords<T> {
        ScalarField::derivatives(self, x).0
    }

    fn hessian(&self, x: &[T]) -> Matrix<T> {
        ScalarField::derivatives(self, x).1
    }

    fn derivatives(&self, x: &[T]) -> (Coords<T>, Matrix<T>) {
        let (b, gb, hb) = self.bump.derivatives(x);
        let (p, gp) = self.polynomial(x);
        let grad = gb.iter().zip(&gp).map(|(&db, &dp)| p * db + b * dp).collect();
        let hess = Matrix::from_fn(x.len(), |r, c| {
            let poly_hess = if r == c { self.quadratic } else { T::zero() };
            p * hb[(r, c)] + gp[r] * gb[c] + gb[r] * gp[c] + b * poly_hess
        });
        (grad, hess)
    }

    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        self.bump.axis_breaks(axis)
    }
}

/// The grid field: one plateau bump of height 1 per subcube of `[0, δ]^{2n}`
/// divided into `k^{2n}` equal cells.
#[derive(Debug, Clone)]
pub struct GridBumps<T> {
    support: BoxRegion<T>,
    delta: T,
    k: usize,
    transition_fraction: T,
}

impl<T: Real> GridBumps<T> {
    pub fn new(dim: Dim, delta: T, k: usize, transition_fraction: T) -> Result<Self> {
        if !(delta > T::zero()) || k == 0 {
            return Err(LabError::InvalidParameter(format!(
                "grid needs δ > 0 and k ≥ 1 (got δ = {delta}, k = {k})"
            )));
        }
        if !(transition_fraction > T::zero() && transition_fraction < T::lit(0.5)) {
            return Err(LabError::InvalidParameter(format!(
                "transition fraction must lie in (0, 1/2), got {transition_fraction}"
            )));
        }
        Ok(Self {
            support: BoxRegion::cube(dim.full(), T::zero(), delta)?,
            delta,
            k,
            transition_fraction,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn cell_side(&self) -> T {
        self.delta / T::from_usize_lossy(self.k)
    }

    /// Fraction of each cell's volume on which the field equals 1.
    pub fn plateau_fraction(&self) -> T {
        (T::one() - T::lit(2.0) * self.transition_fraction).powi(self.support.len() as i32)
    }

    /// Transition width in absolute units.
    pub fn transition_width(&self) -> T {
        self.transition_fraction * self.cell_side()
    }

    /// `max|ψ''| / w²`, the largest second derivative of a single profile;
    /// the scale of `‖∇²H‖` that a fixed-step integrator must resolve.
    pub fn stiffness(&self) -> T {
        let w = self.transition_width();
        T::lit(crate::bump::max_transition_curvature()) / (w * w)
    }

    /// Index of the closed cell containing `x` along one axis, clamped.
    pub fn cell_index(&self, coordinate: T) -> usize {
        let raw = (coordinate / self.cell_side()).floor();
        let raw = raw.max(T::zero()).to_usize().unwrap_or(0);
        raw.min(self.k - 1)
    }

    fn profile(&self, index: usize) -> PlateauProfile<T> {
        let side = self.cell_side();
        PlateauProfile {
            lo: side * T::from_usize_lossy(index),
            hi: side * T::from_usize_lossy(index + 1),
            width: self.transition_width(),
        }
    }
}

impl<T: Real> ScalarField<T> for GridBumps<T> {
    fn support(&self) -> &BoxRegion<T> {
        &self.support
    }

    fn value(&self, x: &[T]) -> T {
        if !self.support.contains_interior(x) {
            return T::zero();
        }
        x.iter()
            .fold(T::one(), |acc, &xi| acc * self.profile(self.cell_index(xi)).value(xi))
    }

    fn gradient(&self, x: &[T]) -> Coords<T> {
        ScalarField::derivatives(self, x).0
    }

    fn hessian(&self, x: &[T]) -> Matrix<T> {
        ScalarField::derivatives(self, x).1
    }

    fn derivatives(&self, x: &[T]) -> (Coords<T>, Matrix<T>) {
        if !self.support.contains_interior(x) {
            return (linalg::zeros(x.len()), Matrix::zeros(x.len()));
        }
        let jets: SmallVec<[_; 4]> = x
            .iter()
            .map(|&xi| self.profile(self.cell_index(xi)).eval(xi))
            .collect();
        let (_, g, h) = crate::bump::product_derivatives(T::one(), &jets);
        (g, h)
    }

    fn axis_breaks(&self, _axis: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(3 * self.k + 1);
        for i in 0..self.k {
            let b = self.profile(i).breaks();
            if i == 0 {
                out.push(b[0]);
            }
            out.extend_from_slice(&b[1..]);
        }
        out
    }
}

/// Autonomous Hamiltonian `H(t, x) = F(x)`.
#[derive(Debug, Clone)]
pub struct Steady<F>(pub F);

impl<T: Real, F: ScalarField<T>> TimeDepField<T> for Steady<F> {
    fn support(&self) -> &BoxRegion<T> {
        self.0.support()
    }
    fn value(&self, _t: T, x: &[T]) -> T {
        self.0.value(x)
    }
    fn gradient(&self, _t: T, x: &[T]) -> Coords<T> {
        self.0.gradient(x)
    }
    fn hessian(&self, _t: T, x: &[T]) -> Matrix<T> {
        self.0.hessian(x)
    }
    fn derivatives(&self, _t: T, x: &[T]) -> (Coords<T>, Matrix<T>) {
        self.0.derivatives(x)
    }
    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        self.0.axis_breaks(axis)
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Scalar time modulation `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile<T> {
    Constant(T),
    /// `mean + amplitude · sin(2π · frequency · t)`
    Sine { mean: T, amplitude: T, frequency: T },
}

impl<T: Real> TimeProfile<T> {
    pub fn eval(&self, t: T) -> T {
        match *self {
            TimeProfile::Constant(c) => c,
            TimeProfile::Sine {
                mean,
                amplitude,
                frequency,
            } => {
                let two_pi = T::lit(std::f64::consts::TAU);
                mean + amplitude * (two_pi * frequency * t).sin()
            }
        }
    }
}

/// `H(t, x) = a(t) · F(x)`.
#[derive(Debug, Clone)]
pub struct Modulated<T: Real> {
    field: SharedScalarField<T>,
    profile: TimeProfile<T>,
}

impl<T: Real> Modulated<T> {
    pub fn new(field: SharedScalarField<T>, profile: TimeProfile<T>) -> Result<Self> {
        check_support(field.support())?;
        Ok(Self { field, profile })
    }
}

impl<T: Real> TimeDepField<T> for Modulated<T> {
    fn support(&self) -> &BoxRegion<T> {
        self.field.support()
    }
    fn value(&self, t: T, x: &[T]) -> T {
        self.profile.eval(t) * self.field.value(x)
    }
    fn gradient(&self, t: T, x: &[T]) -> Coords<T> {
        linalg::scale(self.profile.eval(t), &self.field.gradient(x))
    }
    fn hessian(&self, t: T, x: &[T]) -> Matrix<T> {
        self.field.hessian(x).scaled(self.profile.eval(t))
    }
    fn derivatives(&self, t: T, x: &[T]) -> (Coords<T>, Matrix<T>) {
        let a = self.profile.eval(t);
        let (g, h) = self.field.derivatives(x);
        (linalg::scale(a, &g), h.scaled(a))
    }
    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        self.field.axis_breaks(axis)
    }
    fn is_autonomous(&self) -> bool {
        matches!(self.profile, TimeProfile::Constant(_))
    }
}

/// `Σ Hᵢ`, supported on the hull of the summands' boxes.
#[derive(Debug, Clone)]
pub struct SumField<T: Real> {
    terms: Vec<SharedField<T>>,
    support: BoxRegion<T>,
}

impl<T: Real> SumField<T> {
    pub fn new(terms: Vec<SharedField<T>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| LabError::InvalidParameter("empty sum of fields".into()))?;
        let d = first.support().len();
        if let Some(bad) = terms.iter().find(|f| f.support().len() != d) {
            return Err(LabError::DimensionMismatch {
                expected: d,
                found: bad.support().len(),
            });
        }
        let support = terms
            .iter()
            .skip(1)
            .fold(first.support().clone(), |acc, f| acc.hull(f.support()));
        Ok(Self { terms, support })
    }
}

impl<T: Real> TimeDepField<T> for SumField<T> {
    fn support(&self) -> &BoxRegion<T> {
        &self.support
    }
    fn value(&self, t: T, x: &[T]) -> T {
        self.terms.iter().map(|f| f.value(t, x)).sum()
    }
    fn gradient(&self, t: T, x: &[T]) -> Coords<T> {
        self.terms.iter().fold(linalg::zeros(x.len()), |acc, f| {
            linalg::add(&acc, &f.gradient(t, x))
        })
    }
    fn hessian(&self, t: T, x: &[T]) -> Matrix<T> {
        self.terms
            .iter()
            .fold(Matrix::zeros(x.len()), |acc, f| acc.add(&f.hessian(t, x)))
    }
    fn derivatives(&self, t: T, x: &[T]) -> (Coords<T>, Matrix<T>) {
        self.terms.iter().fold(
            (linalg::zeros(x.len()), Matrix::zeros(x.len())),
            |(g, h), f| {
                let (gf, hf) = f.derivatives(t, x);
                (linalg::add(&g, &gf), h.add(&hf))
            },
        )
    }
    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        merge_breaks(self.terms.iter().flat_map(|f| f.axis_breaks(axis)))
    }
    fn time_breaks(&self) -> Vec<T> {
        merge_breaks(self.terms.iter().flat_map(|f| f.time_breaks()))
    }
    fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|f| f.is_autonomous())
    }
    fn is_zero(&self) -> bool {
        self.terms.iter().all(|f| f.is_zero())
    }
}

/// `ε · H`.
#[derive(Debug, Clone)]
pub struct ScaledField<T: Real> {
    factor: T,
    inner: SharedField<T>,
}

impl<T: Real> ScaledField<T> {
    pub fn new(factor: T, inner: SharedField<T>) -> Self {
        Self { factor, inner }
    }

    pub fn factor(&self) -> T {
        self.factor
    }
}

impl<T: Real> TimeDepField<T> for ScaledField<T> {
    fn support(&self) -> &BoxRegion<T> {
        self.inner.support()
    }
    fn value(&self, t: T, x: &[T]) -> T {
        self.factor * self.inner.value(t, x)
    }
    fn gradient(&self, t: T, x: &[T]) -> Coords<T> {
        linalg::scale(self.factor, &self.inner.gradient(t, x))
    }
    fn hessian(&self, t: T, x: &[T]) -> Matrix<T> {
        self.inner.hessian(t, x).scaled(self.factor)
    }
    fn derivatives(&self, t: T, x: &[T]) -> (Coords<T>, Matrix<T>) {
        let (g, h) = self.inner.derivatives(t, x);
        (linalg::scale(self.factor, &g), h.scaled(self.factor))
    }
    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        self.inner.axis_breaks(axis)
    }
    fn time_breaks(&self) -> Vec<T> {
        self.inner.time_breaks()
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
    fn is_zero(&self) -> bool {
        self.factor == T::zero() || self.inner.is_zero()
    }
}

/// Time reparametrization used by [`Concatenation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConcatMode {
    /// Linear double-speed halves; the result has a kink at `t = ½`.
    #[default]
    Kink,
    /// Halves reparametrized by the smooth transition, so all time
    /// derivatives vanish at `t = ½`.
    Smooth,
}

/// Runs `first` on `[0, ½]` and `second` on `[½, 1]`, each at double speed.
/// Its time-one map is `φ_second ∘ φ_first`.
#[derive(Debug, Clone)]
pub struct Concatenation<T: Real> {
    first: SharedField<T>,
    second: SharedField<T>,
    mode: ConcatMode,
    support: BoxRegion<T>,
}

impl<T: Real> Concatenation<T> {
    pub fn new(first: SharedField<T>, second: SharedField<T>, mode: ConcatMode) -> Result<Self> {
        if first.support().len() != second.support().len() {
            return Err(LabError::DimensionMismatch {
                expected: first.support().len(),
                found: second.support().len(),
            });
        }
        let support = first.support().hull(second.support());
        Ok(Self {
            first,
            second,
            mode,
            support,
        })
    }

    /// The active piece at time `t`, its local time and the speed factor.
    fn piece(&self, t: T) -> (&SharedField<T>, T, T) {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let (field, s) = if t < half {
            (&self.first, two * t)
        } else {
            (&self.second, two * t - T::one())
        };
        match self.mode {
            ConcatMode::Kink => (field, s, two),
            ConcatMode::Smooth => {
                let jet = transition(s);
                (field, jet.value, two * jet.d1)
            }
        }
    }
}

impl<T: Real> TimeDepField<T> for Concatenation<T> {
    fn support(&self) -> &BoxRegion<T> {
        &self.support
    }
    fn value(&self, t: T, x: &[T]) -> T {
        let (f, s, speed) = self.piece(t);
        speed * f.value(s, x)
    }
    fn gradient(&self, t: T, x: &[T]) -> Coords<T> {
        let (f, s, speed) = self.piece(t);
        linalg::scale(speed, &f.gradient(s, x))
    }
    fn hessian(&self, t: T, x: &[T]) -> Matrix<T> {
        let (f, s, speed) = self.piece(t);
        f.hessian(s, x).scaled(speed)
    }
    fn derivatives(&self, t: T, x: &[T]) -> (Coords<T>, Matrix<T>) {
        let (f, s, speed) = self.piece(t);
        let (g, h) = f.derivatives(s, x);
        (linalg::scale(speed, &g), h.scaled(speed))
    }
    fn axis_breaks(&self, axis: usize) -> Vec<T> {
        merge_breaks(
            self.first
                .axis_breaks(axis)
                .into_iter()
                .chain(self.second.axis_breaks(axis)),
        )
    }
    fn time_breaks(&self) -> Vec<T> {
        let half = T::lit(0.5);
        let mut out = vec![half];
        if self.mode == ConcatMode::Kink {
            out.extend(self.first.time_breaks().into_iter().map(|b| half * b));
            out.extend(self.second.time_breaks().into_iter().map(|b| half + half * b));
        }
        merge_breaks(out)
    }
    fn is_zero(&self) -> bool {
        self.first.is_zero() && self.second.is_zero()
    }
}

/// Sorted, deduplicated list of break points.
pub fn merge_breaks<T: Real>(breaks: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = breaks.into_iter().filter(|b| b.is_finite()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (T::one() + b.abs()));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump(lo: f64, hi: f64, rho: f64, c: f64) -> PlateauBump<f64> {
        PlateauBump::new(BoxRegion::cube(2, lo, hi).unwrap(), rho, c, 0.01).unwrap()
    }

    #[test]
    fn fields_vanish_outside_support() {
        let b = bump(-1.0, 1.0, 0.3, 1.0);
        let shaped = ShapedBump::new(b.clone(), &[0.2, 0.1], 0.5, &[1.0, -2.0], 3.0).unwrap();
        let grid = GridBumps::new(Dim::default(), 0.5, 3, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            if !b.support().contains_interior(&x) {
                assert_eq!(ScalarField::value(&b, &x), 0.0);
                assert_eq!(shaped.value(&x), 0.0);
                assert_eq!(shaped.gradient(&x).as_slice(), &[0.0, 0.0]);
            }
            if !grid.support().contains_interior(&x) {
                assert_eq!(grid.value(&x), 0.0);
            }
        }
        // boundary of the box and of interior grid cells
        assert_eq!(shaped.value(&[1.0, 0.0]), 0.0);
        assert_eq!(grid.value(&[0.5 / 3.0, 0.1]), 0.0);
    }

    #[test]
    fn shaped_bump_derivatives_match_finite_differences() {
        let shaped =
            ShapedBump::new(bump(-1.0, 1.0, 0.3, 0.8), &[0.2, 0.1], 0.5, &[1.0, -2.0], 3.0)
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = [rng.gen_range(-0.99..0.99), rng.gen_range(-0.99..0.99)];
            let g = shaped.gradient(&x);
            let g_fd = fd::gradient(|p| shaped.value(p), &x);
            assert!(linalg::max_abs(&linalg::sub(&g, &g_fd)) < 1e-7);
            let h_fd = fd::jacobian(|p| shaped.gradient(p), &x);
            assert!(shaped.hessian(&x).sub(&h_fd).max_abs() < 1e-5);
        }
    }

    #[test]
    fn grid_field_plateaus_and_breaks() {
        let grid = GridBumps::new(Dim::default(), 0.5, 4, 0.05).unwrap();
        let side = 0.125;
        assert_eq!(grid.value(&[1.5 * side, 2.5 * side]), 1.0);
        assert_abs_diff_eq!(grid.plateau_fraction(), 0.81, epsilon = 1e-12);
        let breaks = grid.axis_breaks(0);
        assert_eq!(breaks.len(), 13);
        assert_eq!(breaks[0], 0.0);
        assert_abs_diff_eq!(*breaks.last().unwrap(), 0.5, epsilon = 1e-15);
        let x = [0.3 * side, 2.02 * side];
        let h_fd = fd::jacobian(|p| grid.gradient(p), &x);
        assert!(grid.hessian(&x).sub(&h_fd).max_abs() < 1e-3 * grid.hessian(&x).max_abs());
    }

    #[test]
    fn concatenation_switches_at_half() {
        let k: SharedField<f64> = Arc::new(Steady(bump(-1.0, 1.0, 0.3, 1.0)));
        let h: SharedField<f64> = Arc::new(Steady(bump(-1.0, 1.0, 0.3, -2.0)));
        let cat = Concatenation::new(k, h, ConcatMode::Kink).unwrap();
        assert_eq!(cat.value(0.25, &[0.0, 0.0]), 2.0);
        assert_eq!(cat.value(0.75, &[0.0, 0.0]), -4.0);
        assert_eq!(cat.time_breaks(), vec![0.5]);
    }

    #[test]
    fn modulation_and_scaling() {
        let f: SharedScalarField<f64> = Arc::new(bump(-1.0, 1.0, 0.3, 1.0));
        let m = Modulated::new(
            f,
            TimeProfile::Sine {
                mean: 1.0,
                amplitude: 0.5,
                frequency: 1.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(m.value(0.25, &[0.0, 0.0]), 1.5, epsilon = 1e-12);
        assert!(!m.is_autonomous());
        let s = ScaledField::new(0.1, Arc::new(m));
        assert_abs_diff_eq!(s.value(0.25, &[0.0, 0.0]), 0.15, epsilon = 1e-12);
    }
}
