//! Symplectic linear algebra on ℝ²ⁿ.
//!
//! Coordinates are ordered `(x₁,…,xₙ,y₁,…,yₙ)` and the symplectic form is
//! `ω = Σ dxᵢ∧dyᵢ`. Hamiltonian vector fields follow the convention
//! `ω(X_H, ·) = dH`, which for n = 1 gives `X_H = (∂H/∂y, −∂H/∂x)`.
//! Other texts use the opposite sign; every module in this crate assumes
//! this one.

use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::field::TimeDepField;
use crate::linalg::{self, Coords, Matrix};
use crate::scalar::Real;

pub type Point<T> = Coords<T>;
pub type Vector<T> = Coords<T>;
pub type Covector<T> = Coords<T>;

/// Half-dimension `n` of the phase space ℝ²ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dim(usize);

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidDimension(n));
        }
        Ok(Self(n))
    }

    pub fn half(self) -> usize {
        self.0
    }

    /// Number of coordinates, `2n`.
    pub fn full(self) -> usize {
        2 * self.0
    }

    pub fn check(self, coords: &[impl Copy]) -> Result<()> {
        if coords.len() != self.full() {
            return Err(LabError::DimensionMismatch {
                expected: self.full(),
                found: coords.len(),
            });
        }
        Ok(())
    }
}

impl Default for Dim {
    fn default() -> Self {
        Self(1)
    }
}

/// `ω(u, v) = Σᵢ (u_{xᵢ} v_{yᵢ} − u_{yᵢ} v_{xᵢ})`.
pub fn omega_pairing<T: Real>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() || u.len() % 2 != 0 || u.is_empty() {
        return Err(LabError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let n = u.len() / 2;
    Ok((0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum())
}

/// Matrix `Ω` with `ω(u, v) = uᵀ Ω v`, i.e. `[[0, I], [−I, 0]]`.
pub fn omega_matrix<T: Real>(dim: Dim) -> Matrix<T> {
    let n = dim.half();
    Matrix::from_fn(dim.full(), |r, c| {
        if r < n && c == r + n {
            T::one()
        } else if r >= n && c + n == r {
            -T::one()
        } else {
            T::zero()
        }
    })
}

/// Applies `Ω` to a covector: the vector `X` with `ω(X, ·) = dH` is `Ω ∇H`.
pub fn sharp<T: Real>(covector: &[T]) -> Vector<T> {
    let n = covector.len() / 2;
    let mut out = linalg::zeros(covector.len());
    for i in 0..n {
        out[i] = covector[n + i];
        out[n + i] = -covector[i];
    }
    out
}

/// Built-in primitives of ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiouvilleKind {
    /// `½ Σ (xᵢ dyᵢ − yᵢ dxᵢ)`
    Radial,
    /// `Σ xᵢ dyᵢ`
    Xdy,
}

impl LiouvilleKind {
    pub const ALL: [LiouvilleKind; 2] = [LiouvilleKind::Radial, LiouvilleKind::Xdy];

    pub fn name(self) -> &'static str {
        match self {
            LiouvilleKind::Radial => "radial",
            LiouvilleKind::Xdy => "xdy",
        }
    }
}

impl fmt::Display for LiouvilleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LiouvilleKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(LiouvilleKind::Radial),
            "xdy" => Ok(LiouvilleKind::Xdy),
            other => Err(LabError::InvalidParameter(format!(
                "unknown Liouville form '{other}'"
            ))),
        }
    }
}

/// The primitive one-form `λ` evaluated at `p`.
pub fn liouville<T: Real>(kind: LiouvilleKind, p: &[T]) -> Covector<T> {
    let n = p.len() / 2;
    let mut out = linalg::zeros(p.len());
    match kind {
        LiouvilleKind::Radial => {
            let half = T::lit(0.5);
            for i in 0..n {
                out[i] = -half * p[n + i];
                out[n + i] = half * p[i];
            }
        }
        LiouvilleKind::Xdy => {
            for i in 0..n {
                out[n + i] = p[i];
            }
        }
    }
    out
}

/// A one-form on ℝ²ⁿ given by an evaluator.
pub trait OneForm<T: Real> {
    fn eval(&self, p: &[T]) -> Covector<T>;
}

impl<T: Real> OneForm<T> for LiouvilleKind {
    fn eval(&self, p: &[T]) -> Covector<T> {
        liouville(*self, p)
    }
}

impl<T: Real, F: Fn(&[T]) -> Covector<T>> OneForm<T> for F {
    fn eval(&self, p: &[T]) -> Covector<T> {
        self(p)
    }
}

/// `X_{H_t}(p)`, the unique vector with `ω(X, ·) = d(H(t, ·))` at `p`.
pub fn hamiltonian_vector_field<T: Real>(
    field: &dyn TimeDepField<T>,
    t: T,
    p: &[T],
) -> Vector<T> {
    sharp(&field.gradient(t, p))
}

/// Axis-aligned box `Π [loᵢ, hiᵢ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion<T> {
    lo: Coords<T>,
    hi: Coords<T>,
}

impl<T: Real> BoxRegion<T> {
    pub fn new(lo: &[T], hi: &[T]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(LabError::DegenerateBox(format!(
                "corner lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(hi).any(|(&a, &b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(LabError::DegenerateBox(format!("lo {lo:?} hi {hi:?}")));
        }
        Ok(Self {
            lo: linalg::from_slice(lo),
            hi: linalg::from_slice(hi),
        })
    }

    /// The cube `[lo, hi]^len`.
    pub fn cube(len: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(&vec![lo; len], &vec![hi; len])
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn side(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> T {
        (0..self.len()).fold(T::one(), |acc, i| acc * self.side(i))
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> T {
        (0..self.len())
            .map(|i| self.side(i) * self.side(i))
            .sum::<T>()
            .sqrt()
    }

    pub fn center(&self) -> Point<T> {
        let half = T::lit(0.5);
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| half * (a + b))
            .collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &[T]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&a, &b))| x >= a && x <= b)
    }

    /// Open-box membership.
    pub fn contains_interior(&self, p: &[T]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&a, &b))| x > a && x < b)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.iter().zip(&other.lo).map(|(&a, &b)| a.min(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(&a, &b)| a.max(b)).collect(),
        }
    }

    /// Uniform grid with `resolution` points per axis (endpoints included).
    pub fn grid(&self, resolution: usize) -> Vec<Point<T>> {
        let resolution = resolution.max(2);
        let d = self.len();
        let steps: Coords<T> = (0..d)
            .map(|i| self.side(i) / T::from_usize_lossy(resolution - 1))
            .collect();
        let total = resolution.pow(d as u32);
        (0..total)
            .map(|mut flat| {
                (0..d)
                    .map(|axis| {
                        let idx = flat % resolution;
                        flat /= resolution;
                        if idx == resolution - 1 {
                            self.hi[axis]
                        } else {
                            self.lo[axis] + steps[axis] * T::from_usize_lossy(idx)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `count` uniform random points, each coordinate kept `margin` (a
    /// fraction of the side) away from the faces.
    pub fn sample(&self, count: usize, seed: u64, margin: f64) -> Vec<Point<T>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let margin = margin.clamp(0.0, 0.49);
        (0..count)
            .map(|_| {
                (0..self.len())
                    .map(|i| {
                        let u = T::lit(rng.gen_range(margin..1.0 - margin));
                        self.lo[i] + u * self.side(i)
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest grid spacing of [`BoxRegion::grid`] at this resolution.
    pub fn grid_spacing(&self, resolution: usize) -> T {
        let resolution = resolution.max(2);
        (0..self.len())
            .map(|i| self.side(i) / T::from_usize_lossy(resolution - 1))
            .fold(T::zero(), |a, b| a.max(b))
    }
}
