use std::sync::Arc;

use calabi_core::bump::PlateauBump;
use calabi_core::calabi::{cal_from_hamiltonian, calabi_report, potential_gradient_residual};
use calabi_core::chart::graphicality_report;
use calabi_core::field::{ConcatMode, Concatenation, Steady, ZeroField};
use calabi_core::flow::{richardson_error, symplecticity_residual, IntegratorConfig, Scheme};
use calabi_core::geometry::BoxRegion;
use calabi_core::linalg;
use calabi_core::phase::{
    phase_gradient_residual, phase_pullback_integrals, theorem_bound_check, BoundConfig, PhaseData,
};
use calabi_core::quadrature::{QuadratureConfig, QuadratureRule};
use calabi_core::{suite, Dim, FlowMap, LiouvilleKind, SharedField};

const KINDS: [LiouvilleKind; 2] = [LiouvilleKind::Radial, LiouvilleKind::Xdy];

fn n1() -> Dim {
    Dim::new(1).unwrap()
}

fn quad(nodes: usize) -> QuadratureConfig {
    QuadratureConfig::new(nodes, 16, QuadratureRule::GaussLegendre).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    linalg::norm(&linalg::sub(a, b))
}

#[test]
fn autonomous_cal_matches_closed_form_integral() {
    let b = PlateauBump::new(BoxRegion::cube(2, -1.0, 1.0).unwrap(), 0.25, 0.3, 0.08).unwrap();
    let exact = b.integral();
    let field: SharedField = Arc::new(Steady(b));
    let v = cal_from_hamiltonian(field.as_ref(), &QuadratureConfig::default()).unwrap();
    assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
}

#[test]
fn both_formulas_agree_on_the_plain_bump() {
    let field = suite::plain_bump(n1()).unwrap();
    let r = calabi_report::<f64>(field.as_ref(), &KINDS, &quad(32), &IntegratorConfig::default()).unwrap();
    for (kind, v) in &r.cal_f {
        assert!((v - r.cal_h).abs() < 1e-3, "{kind}: {v} vs {}", r.cal_h);
    }
}

fn observed_order(scheme: Scheme, x: &[f64]) -> f64 {
    let field = suite::pulsed(n1()).unwrap();
    let base = IntegratorConfig {
        scheme,
        ..IntegratorConfig::default()
    };
    let map = FlowMap::new(field, base.with_steps(50), 1.0).unwrap();
    let reference = map.with_steps(3200).forward(x).unwrap();
    let e1 = dist(&map.forward(x).unwrap(), &reference);
    let e2 = dist(&map.with_steps(100).forward(x).unwrap(), &reference);
    (e1 / e2).log2()
}

#[test]
fn implicit_midpoint_converges_at_second_order() {
    let p = observed_order(Scheme::ImplicitMidpoint, &[1.0, 0.7]);
    assert!((p - 2.0).abs() < 0.3, "observed order {p}");
}

#[test]
fn rk4_converges_at_fourth_order() {
    let p = observed_order(Scheme::Rk4, &[1.0, 0.7]);
    assert!((p - 4.0).abs() < 0.5, "observed order {p}");
}

#[test]
fn concatenation_realizes_the_composition() {
    let h = suite::pulsed(n1()).unwrap();
    let k = suite::dipole(n1()).unwrap();
    let cfg = IntegratorConfig::default();
    let cat: SharedField = Arc::new(Concatenation::new(k.clone(), h.clone(), ConcatMode::Kink).unwrap());
    let (mh, mk, mc) = (
        FlowMap::new(h, cfg, 1.0).unwrap(),
        FlowMap::new(k, cfg, 1.0).unwrap(),
        FlowMap::new(cat, cfg, 1.0).unwrap(),
    );
    for x in [[0.2, 0.1], [-0.4, 0.5], [0.9, -0.2]] {
        let kx = mk.forward(&x).unwrap();
        let gap = dist(&mh.forward(&kx).unwrap(), &mc.forward(&x).unwrap());
        let tol = richardson_error(&mc, &x).unwrap() + richardson_error(&mh, &kx).unwrap() + richardson_error(&mk, &x).unwrap();
        assert!(gap <= 10.0 * tol.max(1e-13), "{x:?}: gap {gap:e}, tolerance {tol:e}");
    }
}

#[test]
fn zero_first_factor_leaves_the_second() {
    let k = suite::pulsed(n1()).unwrap();
    let zero: SharedField = Arc::new(ZeroField::new(k.support().clone()).unwrap());
    let cfg = IntegratorConfig::default();
    let cat: SharedField = Arc::new(Concatenation::new(zero, k.clone(), ConcatMode::Kink).unwrap());
    let (mk, mc) = (FlowMap::new(k, cfg, 1.0).unwrap(), FlowMap::new(cat, cfg, 1.0).unwrap());
    for x in [[0.2, 0.1], [0.6, -0.3]] {
        let gap = dist(&mk.forward(&x).unwrap(), &mc.forward(&x).unwrap());
        assert!(gap <= 10.0 * richardson_error(&mk, &x).unwrap(), "gap {gap:e}");
    }
}

#[test]
fn flows_are_symplectic_in_four_dimensions() {
    let dim = Dim::new(2).unwrap();
    for m in suite::standard_suite::<f64>(dim).unwrap() {
        let map = FlowMap::new(m.field.clone(), IntegratorConfig::default().with_steps(100), 1.0).unwrap();
        let probes = m.field.support().sample(6, 3, 0.0);
        let r = symplecticity_residual(&map, &probes).unwrap();
        assert!(r <= 5e-6, "{}: {r:e}", m.name);
    }
}

#[test]
fn potential_gradient_matches_pullback_difference() {
    let field = suite::dipole(n1()).unwrap();
    let map = FlowMap::new(field.clone(), IntegratorConfig::default(), 1.0).unwrap();
    let probes = field.support().sample(20, 11, 0.0);
    for kind in KINDS {
        let r = potential_gradient_residual(&map, kind, &probes).unwrap();
        assert!(r <= 1e-4, "{kind}: {r:e}");
    }
}

#[test]
fn small_epsilon_members_are_graphical_and_large_ones_fold() {
    let base = suite::epsilon_base::<f64>(n1()).unwrap();
    let cfg = IntegratorConfig::default();
    let small = FlowMap::new(suite::scaled(0.1, base.clone()), cfg, 1.0).unwrap();
    assert!(graphicality_report(&small, 17).unwrap().is_graphical);
    let large = FlowMap::new(suite::scaled(8.0, base), cfg, 1.0).unwrap();
    assert!(!graphicality_report(&large, 17).unwrap().is_graphical);
}

#[test]
fn phase_function_bridges_to_the_calabi_invariant() {
    let field = suite::scaled(0.05, suite::epsilon_base(n1()).unwrap());
    let cfg = IntegratorConfig::default();
    let q = quad(24);
    let cal_h = cal_from_hamiltonian(field.as_ref(), &q).unwrap();
    let map = FlowMap::new(field.clone(), cfg, 1.0).unwrap();
    for kind in KINDS {
        let phase = PhaseData::new(map.clone(), kind, 8).unwrap();
        let (i_s, i_r) = phase_pullback_integrals(&phase, &q).unwrap();
        let gap = (2.0 * cal_h - (i_s - i_r)).abs();
        assert!(gap <= 1e-3, "{kind}: {gap:e}");

        let inner = field.support().sample(6, 5, 0.05);
        assert!(phase_gradient_residual(&phase, &inner).unwrap() <= 1e-3);
        let outside = [[2.0, 0.0], [0.0, -1.6], [1.6, 1.6]];
        for x in outside {
            assert_eq!(phase.s_eval(&x).unwrap(), 0.0, "{kind} at {x:?}");
        }

        let bound = theorem_bound_check(&phase, &BoundConfig { resolution: 17, sak_probes: 8, ..Default::default() }).unwrap();
        assert!(bound.bound_ok, "{kind}: {bound:?}");
        assert!(bound.sak_residual <= 1e-3);
    }
}
