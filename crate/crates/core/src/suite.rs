//! A fixed set of test Hamiltonians used by the verification runs.

use std::sync::Arc;

use crate::bump::PlateauBump;
use crate::error::Result;
use crate::field::{
    Concatenation, ConcatMode, Modulated, ScaledField, ShapedBump, SharedField, Steady, SumField, TimeProfile,
};
use crate::geometry::{BoxRegion, Dim};
use crate::scalar::Real;

pub const MIN_TRANSITION_FRACTION: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct SuiteMember<T: Real> {
    pub name: &'static str,
    pub field: SharedField<T>,
}

fn cube<T: Real>(dim: Dim, lo: f64, hi: f64) -> Result<BoxRegion<T>> {
    BoxRegion::cube(dim.full(), T::lit(lo), T::lit(hi))
}

fn offset_box<T: Real>(dim: Dim, lo: [f64; 2], hi: [f64; 2]) -> Result<BoxRegion<T>> {
    let d = dim.full();
    let lo: Vec<T> = (0..d).map(|i| T::lit(lo[i % 2])).collect();
    let hi: Vec<T> = (0..d).map(|i| T::lit(hi[i % 2])).collect();
    BoxRegion::new(&lo, &hi)
}

fn bump<T: Real>(support: BoxRegion<T>, rho: f64, height: f64) -> Result<PlateauBump<T>> {
    PlateauBump::new(support, T::lit(rho), T::lit(height), T::lit(MIN_TRANSITION_FRACTION))
}

fn sine<T: Real>(mean: f64, amplitude: f64, frequency: f64) -> TimeProfile<T> {
    TimeProfile::Sine {
        mean: T::lit(mean),
        amplitude: T::lit(amplitude),
        frequency: T::lit(frequency),
    }
}

/// The plateau bump alone.
pub fn plain_bump<T: Real>(dim: Dim) -> Result<SharedField<T>> {
    Ok(Arc::new(Steady(bump(cube(dim, -1.0, 1.0)?, 0.25, 0.3)?)))
}

/// `½c|x − x₀|²` times a bump: a twist map of the support.
pub fn twist<T: Real>(dim: Dim, rate: f64) -> Result<SharedField<T>> {
    let b = bump(cube(dim, -1.5, 1.5)?, 0.3, 1.0)?;
    Ok(Arc::new(Steady(ShapedBump::rotation(b, T::lit(rate))?)))
}

/// An off-centre bump with a periodic amplitude.
pub fn pulsed<T: Real>(dim: Dim) -> Result<SharedField<T>> {
    let b = bump(offset_box(dim, [-0.5, -0.8], [1.2, 0.9])?, 0.35, 0.4)?;
    Ok(Arc::new(Modulated::new(Arc::new(b), sine(0.6, 0.4, 1.0))?))
}

/// `(a + ⟨g, x − x₀⟩)` times a bump.
pub fn dipole<T: Real>(dim: Dim) -> Result<SharedField<T>> {
    let b = bump(cube(dim, -1.0, 1.2)?, 0.3, 1.0)?;
    let center = b.center();
    let linear: Vec<T> = (0..dim.full())
        .map(|i| T::lit(if i % 2 == 0 { 0.3 } else { -0.2 }))
        .collect();
    Ok(Arc::new(Steady(ShapedBump::new(b, &center, T::lit(0.2), &linear, T::zero())?)))
}

/// Two overlapping bumps with out-of-phase modulation.
pub fn pair<T: Real>(dim: Dim) -> Result<SharedField<T>> {
    let a = bump(offset_box(dim, [-1.0, -1.0], [0.6, 0.4])?, 0.3, 0.35)?;
    let b = bump(offset_box(dim, [-0.4, -0.3], [1.0, 1.1])?, 0.3, -0.25)?;
    let terms: Vec<SharedField<T>> = vec![
        Arc::new(Modulated::new(Arc::new(a), sine(0.8, 0.2, 1.0))?),
        Arc::new(Modulated::new(Arc::new(b), sine(0.7, -0.3, 1.0))?),
    ];
    Ok(Arc::new(SumField::new(terms)?))
}

/// The standard suite: five Hamiltonians on `ℝ²ⁿ`, autonomous and not.
pub fn standard_suite<T: Real>(dim: Dim) -> Result<Vec<SuiteMember<T>>> {
    Ok(vec![
        SuiteMember {
            name: "bump",
            field: plain_bump(dim)?,
        },
        SuiteMember {
            name: "twist",
            field: twist(dim, 0.1)?,
        },
        SuiteMember {
            name: "pulsed",
            field: pulsed(dim)?,
        },
        SuiteMember {
            name: "dipole",
            field: dipole(dim)?,
        },
        SuiteMember {
            name: "pair",
            field: pair(dim)?,
        },
    ])
}

/// Pairs `(H, K)` for composition checks; the concatenation runs `K` first.
pub fn composition_pairs<T: Real>(dim: Dim, mode: ConcatMode) -> Result<Vec<(&'static str, SharedField<T>, SharedField<T>, SharedField<T>)>> {
    let suite = standard_suite::<T>(dim)?;
    let pick = |name: &str| {
        suite
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.field.clone())
            .expect("suite member")
    };
    [("bump∘twist", "bump", "twist"), ("pulsed∘dipole", "pulsed", "dipole"), ("pair∘bump", "pair", "bump")]
        .into_iter()
        .map(|(label, h, k)| {
            let (h, k) = (pick(h), pick(k));
            let cat: SharedField<T> = Arc::new(Concatenation::new(k.clone(), h.clone(), mode)?);
            Ok((label, h, k, cat))
        })
        .collect()
}

/// Base Hamiltonian of the ε-family `εH`.
pub fn epsilon_base<T: Real>(dim: Dim) -> Result<SharedField<T>> {
    twist(dim, 0.5)
}

pub fn scaled<T: Real>(eps: T, base: SharedField<T>) -> SharedField<T> {
    Arc::new(ScaledField::new(eps, base))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_vanish_outside_their_boxes() {
        for m in standard_suite::<f64>(Dim::default()).unwrap() {
            let s = m.field.support();
            let far: Vec<f64> = s.hi().iter().map(|h| h + 0.1).collect();
            let edge: Vec<f64> = s.lo().to_vec();
            for t in [0.0, 0.3, 0.9] {
                assert_eq!(m.field.value(t, &far), 0.0, "{}", m.name);
                assert_eq!(m.field.value(t, &edge), 0.0, "{}", m.name);
            }
        }
    }

    #[test]
    fn suite_builds_in_four_dimensions() {
        let suite = standard_suite::<f64>(Dim::new(2).unwrap()).unwrap();
        assert_eq!(suite.len(), 5);
        assert!(suite.iter().all(|m| m.field.support().len() == 4));
    }
}
