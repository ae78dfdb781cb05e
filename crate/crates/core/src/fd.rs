//! Central finite differences. Step `h = 1e-5 · max(1, |xᵢ|)` per coordinate.

use crate::geometry::OneForm;
use crate::linalg::{Coords, Matrix};
use crate::scalar::Real;

pub const RELATIVE_STEP: f64 = 1e-5;

pub fn step<T: Real>(x: T) -> T {
    T::lit(RELATIVE_STEP) * x.abs().max(T::one())
}

/// Gradient of `f` at `x` with the default step.
pub fn gradient<T: Real>(f: impl Fn(&[T]) -> T, x: &[T]) -> Coords<T> {
    gradient_with(f, x, |xi| step(xi))
}

pub fn gradient_with<T: Real>(
    f: impl Fn(&[T]) -> T,
    x: &[T],
    h_of: impl Fn(T) -> T,
) -> Coords<T> {
    let mut probe: Coords<T> = Coords::from_slice(x);
    (0..x.len())
        .map(|i| {
            let h = h_of(x[i]);
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (h + h)
        })
        .collect()
}

/// Gradient with one Richardson step: `(4·D(h/2) − D(h)) / 3`, error `O(h⁴)`.
/// For integrands with large third derivatives, e.g. near a bump edge.
pub fn gradient_extrapolated<T: Real>(f: impl Fn(&[T]) -> T, x: &[T]) -> Coords<T> {
    let coarse = gradient_with(&f, x, |xi| step(xi));
    let fine = gradient_with(&f, x, |xi| T::lit(0.5) * step(xi));
    let third = T::lit(1.0 / 3.0);
    coarse
        .iter()
        .zip(fine.iter())
        .map(|(&c, &f)| (T::lit(4.0) * f - c) * third)
        .collect()
}

/// Jacobian of a vector-valued map; entry `(r, c) = ∂f_r/∂x_c`.
pub fn jacobian<T: Real>(f: impl Fn(&[T]) -> Coords<T>, x: &[T]) -> Matrix<T> {
    jacobian_with(f, x, |xi| step(xi))
}

pub fn jacobian_with<T: Real>(
    f: impl Fn(&[T]) -> Coords<T>,
    x: &[T],
    h_of: impl Fn(T) -> T,
) -> Matrix<T> {
    let mut probe: Coords<T> = Coords::from_slice(x);
    let cols: Vec<Coords<T>> = (0..x.len())
        .map(|c| {
            let h = h_of(x[c]);
            probe[c] = x[c] + h;
            let plus = f(&probe);
            probe[c] = x[c] - h;
            let minus = f(&probe);
            probe[c] = x[c];
            plus.iter()
                .zip(&minus)
                .map(|(&a, &b)| (a - b) / (h + h))
                .collect()
        })
        .collect();
    // rows of `cols` are outputs; transpose into (output, input) layout
    Matrix::from_fn(x.len(), |r, c| cols[c][r])
}

/// Matrix `D` of the two-form `dα`, so that `dα(u, v) = uᵀ D v`,
/// `D_{ij} = ∂ᵢαⱼ − ∂ⱼαᵢ`.
pub fn exterior_derivative<T: Real>(form: &impl OneForm<T>, x: &[T]) -> Matrix<T> {
    let partials = jacobian(|p| form.eval(p), x);
    // partials(j, i) = ∂ᵢ αⱼ
    Matrix::from_fn(x.len(), |i, j| partials[(j, i)] - partials[(i, j)])
}
