use std::sync::Arc;

use calabi_core::bump::{transition, PlateauBump};
use calabi_core::calabi::cal_from_hamiltonian;
use calabi_core::chart::{dw_chart, dw_chart_inverse, ChartPoint};
use calabi_core::field::{ConcatMode, Concatenation, GridBumps, ScalarField, Steady};
use calabi_core::flow::IntegratorConfig;
use calabi_core::geometry::{hamiltonian_vector_field, liouville, omega_pairing, BoxRegion};
use calabi_core::phase::r_function;
use calabi_core::quadrature::{QuadratureConfig, QuadratureRule};
use calabi_core::{fd, suite, Dim, FlowMap, LiouvilleKind, SharedField};
use proptest::prelude::*;

fn vec_of(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

fn small_quad() -> QuadratureConfig {
    QuadratureConfig::new(24, 8, QuadratureRule::GaussLegendre).unwrap()
}

fn unit_bump(height: f64) -> SharedField {
    let b = PlateauBump::new(BoxRegion::cube(2, -1.0, 1.0).unwrap(), 0.3, height, 0.08).unwrap();
    Arc::new(Steady(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_is_antisymmetric_and_bilinear(
        u in vec_of(4, -3.0, 3.0),
        v in vec_of(4, -3.0, 3.0),
        w in vec_of(4, -3.0, 3.0),
        a in -2.0..2.0_f64,
    ) {
        let uv = omega_pairing(&u, &v).unwrap();
        prop_assert!((uv + omega_pairing(&v, &u).unwrap()).abs() < 1e-12);
        prop_assert!(omega_pairing(&u, &u).unwrap().abs() < 1e-12);
        let combo: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + y).collect();
        let lhs = omega_pairing(&combo, &v).unwrap();
        let rhs = a * uv + omega_pairing(&w, &v).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn hamiltonian_vector_field_pairs_to_dh(
        p in vec_of(2, -0.95, 0.95),
        v in vec_of(2, -1.0, 1.0),
    ) {
        let h = unit_bump(0.7);
        let x = hamiltonian_vector_field(h.as_ref(), 0.0, &p);
        let dh = fd::gradient(|q| h.value(0.0, q), &p);
        let dh_v: f64 = dh.iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!((omega_pairing(&x, &v).unwrap() - dh_v).abs() < 1e-6);
    }

    #[test]
    fn both_primitives_differentiate_to_omega(p in vec_of(4, -2.0, 2.0)) {
        for kind in [LiouvilleKind::Radial, LiouvilleKind::Xdy] {
            let j = fd::jacobian(|q| liouville(kind, q), &p);
            // dλ(e_a, e_b) = ∂_a λ_b − ∂_b λ_a = Ω_ab
            let omega = calabi_core::geometry::omega_matrix::<f64>(Dim::new(2).unwrap());
            for a in 0..4 {
                for b in 0..4 {
                    let d = j[(b, a)] - j[(a, b)];
                    prop_assert!((d - omega[(a, b)]).abs() < 1e-6, "{kind} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn chart_round_trip(x in vec_of(4, -5.0, 5.0), y in vec_of(4, -5.0, 5.0)) {
        let c = dw_chart(&x, &y).unwrap();
        let (x2, y2) = dw_chart_inverse(&c);
        for i in 0..4 {
            prop_assert!((x[i] - x2[i]).abs() < 1e-12);
            prop_assert!((y[i] - y2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_diagonal_is_zero_section(x in vec_of(2, -5.0, 5.0)) {
        let c = dw_chart(&x, &x).unwrap();
        prop_assert!(c.p.iter().all(|&v| v == 0.0));
        prop_assert_eq!(c.q.to_vec(), x);
    }

    #[test]
    fn transition_is_a_monotone_step(s in 0.0..1.0_f64, t in 0.0..1.0_f64) {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        let ja = transition(a);
        let jb = transition(b);
        prop_assert!((0.0..=1.0).contains(&ja.value));
        prop_assert!(ja.value <= jb.value + 1e-15);
        prop_assert!(ja.d1 >= 0.0);
    }

    #[test]
    fn plateau_bump_is_bounded_by_its_height(p in vec_of(4, -1.5, 1.5), h in 0.1..3.0_f64) {
        let b = PlateauBump::new(BoxRegion::cube(4, -1.0, 1.0).unwrap(), 0.2, h, 0.05).unwrap();
        let v = b.value(&p);
        prop_assert!(v >= 0.0 && v <= h * (1.0 + 1e-12));
        if !b.support().contains_interior(&p) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn grid_field_is_periodic_across_cells(
        x in vec_of(2, 0.0, 1.0),
        k in 2usize..7,
        shift in (0usize..7, 0usize..7),
    ) {
        let g = GridBumps::new(Dim::new(1).unwrap(), 0.5, k, 0.1).unwrap();
        let side = g.cell_side();
        let base: Vec<f64> = x.iter().map(|v| v * side).collect();
        let moved = [base[0] + (shift.0 % k) as f64 * side, base[1] + (shift.1 % k) as f64 * side];
        prop_assert!((g.value(&base) - g.value(&moved)).abs() < 1e-12);
        let (ga, gb) = (g.gradient(&base), g.gradient(&moved));
        for i in 0..2 {
            prop_assert!((ga[i] - gb[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn r_vanishes_on_the_zero_section(q in vec_of(2, -3.0, 3.0)) {
        let c = ChartPoint { q: q.iter().copied().collect(), p: vec![0.0; 2].into_iter().collect() };
        for kind in [LiouvilleKind::Radial, LiouvilleKind::Xdy] {
            prop_assert_eq!(r_function(kind, &c, 8), 0.0);
        }
    }

    #[test]
    fn samples_stay_inside_and_repeat(seed in any::<u64>(), margin in 0.0..0.3_f64) {
        let b = BoxRegion::new(&[-1.0, 2.0], &[3.0, 2.5]).unwrap();
        let a = b.sample(16, seed, margin);
        prop_assert_eq!(&a, &b.sample(16, seed, margin));
        for p in &a {
            for i in 0..2 {
                let m = margin * b.side(i);
                prop_assert!(p[i] >= b.lo()[i] + m - 1e-12 && p[i] <= b.hi()[i] - m + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flow_is_identity_outside_support(
        p in vec_of(2, 1.0, 3.0),
        flip in (any::<bool>(), any::<bool>()),
    ) {
        let p: Vec<f64> = vec![if flip.0 { -p[0] } else { p[0] }, if flip.1 { -p[1] } else { p[1] }];
        let map = FlowMap::new(unit_bump(1.0), IntegratorConfig::default().with_steps(40), 1.0).unwrap();
        prop_assert_eq!(map.forward(&p).unwrap().to_vec(), p);
    }

    #[test]
    fn cal_h_is_linear_in_h(c in -3.0..3.0_f64) {
        let base: SharedField = suite::pulsed(Dim::new(1).unwrap()).unwrap();
        let q = small_quad();
        let one = cal_from_hamiltonian(base.as_ref(), &q).unwrap();
        let scaled = suite::scaled(c, base);
        let v = cal_from_hamiltonian(scaled.as_ref(), &q).unwrap();
        prop_assert!((v - c * one).abs() < 1e-12 * (1.0 + one.abs()));
    }

    #[test]
    fn cal_h_adds_under_concatenation(a in 0.1..2.0_f64, b in -2.0..2.0_f64, smooth in any::<bool>()) {
        let mode = if smooth { ConcatMode::Smooth } else { ConcatMode::Kink };
        // the hull's merged breaks thin out nodes per panel, and the smooth
        // reparametrization bends the time profile; refine both
        let q = QuadratureConfig::new(256, 128, QuadratureRule::GaussLegendre).unwrap();
        let h = suite::scaled(a, suite::pulsed(Dim::new(1).unwrap()).unwrap());
        let k = suite::scaled(b, unit_bump(1.0));
        let cat: SharedField = Arc::new(Concatenation::new(k.clone(), h.clone(), mode).unwrap());
        let sum = cal_from_hamiltonian(h.as_ref(), &q).unwrap() + cal_from_hamiltonian(k.as_ref(), &q).unwrap();
        let v = cal_from_hamiltonian(cat.as_ref(), &q).unwrap();
        prop_assert!((v - sum).abs() < 1e-9, "{v} vs {sum}");
    }
}
