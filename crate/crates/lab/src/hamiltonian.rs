//! Textual Hamiltonian specs for the `cal` subcommand.
//!
//! ```text
//! zero | bump | twist[:rate] | pulsed | dipole | pair
//! grid:<k>            grid field over [0, δ]^{2n}
//! eps:<ε>             ε times the ε-family base
//! concat:<h>+<k>      K first, then H
//! ```

use std::sync::Arc;

use calabi_core::field::{Concatenation, GridBumps, Steady, ZeroField};
use calabi_core::geometry::BoxRegion;
use calabi_core::suite;
use calabi_core::{LabError, SharedField};

use crate::config::LabConfig;
use crate::experiments::grid_transition;

pub fn parse_hamiltonian(spec: &str, cfg: &LabConfig) -> Result<SharedField, LabError> {
    let dim = cfg.dim;
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let number = |what: &str| -> Result<f64, LabError> {
        arg.ok_or_else(|| LabError::InvalidParameter(format!("`{head}` needs a {what}")))?
            .parse()
            .map_err(|_| LabError::InvalidParameter(format!("bad {what} in `{spec}`")))
    };
    match head {
        "zero" => Ok(Arc::new(ZeroField::new(BoxRegion::cube(dim.full(), -1.0, 1.0)?)?)),
        "bump" => suite::plain_bump(dim),
        "twist" => suite::twist(dim, if arg.is_some() { number("rate")? } else { 0.1 }),
        "pulsed" => suite::pulsed(dim),
        "dipole" => suite::dipole(dim),
        "pair" => suite::pair(dim),
        "eps" => Ok(suite::scaled(number("scale")?, suite::epsilon_base(dim)?)),
        "grid" => {
            let k = number("subdivision k")?;
            if k < 1.0 || k.fract() != 0.0 {
                return Err(LabError::InvalidParameter(format!("grid k must be a positive integer, got {k}")));
            }
            let k = k as usize;
            let (tf, _) = grid_transition(dim, k, cfg.min_transition);
            Ok(Arc::new(Steady(GridBumps::new(dim, cfg.delta, k, tf)?)))
        }
        "concat" => {
            let (h, k) = arg
                .and_then(|a| a.split_once('+'))
                .ok_or_else(|| LabError::InvalidParameter("concat needs `concat:<h>+<k>`".into()))?;
            let h = parse_hamiltonian(h, cfg)?;
            let k = parse_hamiltonian(k, cfg)?;
            Ok(Arc::new(Concatenation::new(k, h, cfg.concat)?))
        }
        other => Err(LabError::InvalidParameter(format!("unknown Hamiltonian `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let cfg = LabConfig::default();
        for spec in ["zero", "bump", "twist", "twist:0.3", "pulsed", "dipole", "pair", "eps:0.1", "grid:3", "concat:bump+twist"] {
            let h = parse_hamiltonian(spec, &cfg).unwrap();
            assert_eq!(h.support().len(), 2, "{spec}");
        }
        assert!(parse_hamiltonian("grid:2.5", &cfg).is_err());
        assert!(parse_hamiltonian("eps", &cfg).is_err());
        assert!(parse_hamiltonian("spiral", &cfg).is_err());
    }
}
