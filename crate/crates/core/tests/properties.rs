use approx::assert_relative_eq;
use hexweb::chart_metric::MetricJet2;
use hexweb::cubic::roots;
use hexweb::duality::{
    dual_of_slope, orbit_invariant, plane_group_action, projective_distance, DualPoint, PlaneSection,
};
use hexweb::geodesic_flow::{relative_bracket, PhaseFn};
use hexweb::hydro_system::{characteristic_speeds, invariants_of, metric_from_speeds};
use hexweb::scalar::Scalar;
use hexweb::{
    cubic_integral_from_solution, hydro_residual, make_translation_family, Jet2, PhasePoint, Profile,
    TranslationFamilySpec,
};
use proptest::prelude::*;

fn pd_metric() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1f64..10.0, 0.1f64..10.0, -0.95f64..0.95).prop_map(|(e, g, t)| (e, t * (e * g).sqrt(), g))
}

fn plane() -> impl Strategy<Value = PlaneSection> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, 0.1f64..2.0).prop_map(|(a, b, c, d)| PlaneSection::new(a, b, c, d))
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
}

proptest! {
    #[test]
    fn jet_product_and_chain_rules(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let (jx, jy) = Jet2::seed(x, y);
        let f = Scalar::sin(jx * jy) + Scalar::exp(jx) * jy * jy;
        let (s, c) = (x * y).sin_cos();
        let ex = x.exp();
        prop_assert!(close(f.re, s + ex * y * y, 1e-14));
        prop_assert!(close(f.dx, y * c + ex * y * y, 1e-14));
        prop_assert!(close(f.dy, x * c + 2.0 * ex * y, 1e-14));
        prop_assert!(close(f.dxx, -y * y * s + ex * y * y, 1e-13));
        prop_assert!(close(f.dxy, c - x * y * s + 2.0 * ex * y, 1e-13));
        prop_assert!(close(f.dyy, -x * x * s + 2.0 * ex, 1e-13));
    }

    #[test]
    fn jet_division_inverts_multiplication(x in 0.5f64..2.0, y in 0.5f64..2.0) {
        let (jx, jy) = Jet2::seed(x, y);
        let a = jx * jx + jy;
        let b = (a * jy) / jy;
        for (p, q) in [(a.re, b.re), (a.dx, b.dx), (a.dy, b.dy), (a.dxx, b.dxx), (a.dxy, b.dxy), (a.dyy, b.dyy)] {
            prop_assert!(close(p, q, 1e-13));
        }
    }

    #[test]
    fn cubic_roots_resubstitute(a in 0.1f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
        for z in roots(a, b, c, d) {
            let p = ((z * a + b) * z + c) * z + d;
            let scale = a * z.norm().powi(3) + b.abs() * z.norm().powi(2) + c.abs() * z.norm() + d.abs();
            prop_assert!(p.norm() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn speeds_satisfy_identity_and_vieta((e, f, g) in pd_metric()) {
        let jet = MetricJet2::constant(e, f, g);
        let s = characteristic_speeds(&jet).unwrap();
        let m = s.lambda.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        prop_assert!(s.identity_residual() / (1.0 + m).powi(3) < 1e-10);
        prop_assert!(s.vieta_residuals(&jet).iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn constant_metrics_solve_the_system((e, f, g) in pd_metric()) {
        prop_assert_eq!(hydro_residual(&MetricJet2::constant(e, f, g)).max_abs(), 0.0);
    }

    #[test]
    fn metric_recovered_from_speeds((e, f, g) in pd_metric()) {
        let jet = MetricJet2::constant(e, f, g);
        if let Some(l) = characteristic_speeds(&jet).unwrap().real() {
            let [e2, f2, g2] = metric_from_speeds(l, f / g);
            prop_assert!(close(e2 / g2, e / g, 1e-9) && close(f2 / g2, f / g, 1e-9));
        }
    }

    #[test]
    fn invariants_cycle_with_labels(l1 in -3.0f64..-0.1, l2 in 0.1f64..1.0, l3 in 1.5f64..4.0, f in -0.5f64..0.5) {
        if let (Ok(r), Ok(rc)) = (invariants_of(f, [l1, l2, l3]), invariants_of(f, [l2, l3, l1])) {
            prop_assert!(close(rc[0], r[1], 1e-9) && close(rc[1], r[2], 1e-9) && close(rc[2], r[0], 1e-9));
        }
    }

    #[test]
    fn translation_family_solves_system(slope in -0.3f64..0.3, offset in 1.5f64..3.0, u in -0.3f64..0.3, v in 1.3f64..1.9) {
        let spec = TranslationFamilySpec { h: Profile::linear(slope, offset), f0: offset, ..Default::default() };
        let field = make_translation_family::<f64>(&spec).unwrap();
        let j = field.jet_at(u, v).unwrap();
        prop_assert!(hydro_residual(&j).relative(&j) < 1e-12);
    }

    #[test]
    fn cubic_integral_commutes_with_hamiltonian(u in -0.35f64..0.35, v in 1.25f64..1.95, p in -1.0f64..1.0, q in -1.0f64..1.0) {
        prop_assume!(p.abs() + q.abs() > 0.1);
        let field = make_translation_family::<f64>(&TranslationFamilySpec::default()).unwrap();
        let i = cubic_integral_from_solution(&field).unwrap();
        let x = PhasePoint::new(u, v, p, q);
        prop_assert!(relative_bracket(&field, &PhaseFn::Cubic(&i), &PhaseFn::Hamiltonian, &x).unwrap() < 1e-10);
    }

    #[test]
    fn duals_lie_on_the_quadric(z in 0.5f64..3.0, y in -2.0f64..2.0, p in 0.1f64..3.0, sign in prop::bool::ANY, eps in prop::sample::select(vec![1.0, -1.0])) {
        let p = if sign { p } else { -p };
        let [a, b, c, d] = dual_of_slope(z, y, p, eps);
        prop_assert!(DualPoint::new(a, b, c, d).quadric_residual(eps).abs() < 1e-12);
        prop_assert!(DualPoint::new(a, b, c, d).conic_at(z, y).abs() < 1e-9 * (1.0 + z * z + y * y).powi(2));
    }

    #[test]
    fn group_subgroups_compose(pl in plane(), s in -0.7f64..0.7, t in -0.7f64..0.7, k in 0usize..3) {
        let act = |pl, x: f64| {
            let mut ts = [0.0; 3];
            ts[k] = x;
            plane_group_action(pl, ts[0], ts[1], ts[2])
        };
        let two = act(act(pl, s), t).as_array();
        let one = act(pl, s + t).as_array();
        for (x, y) in two.iter().zip(one) {
            prop_assert!(close(*x, y, 1e-12));
        }
    }

    #[test]
    fn orbit_invariant_is_preserved(pl in plane(), t1 in -1.0f64..1.0, t2 in -1.0f64..1.0, t3 in -1.0f64..1.0) {
        let m = orbit_invariant(pl).unwrap();
        let n = orbit_invariant(plane_group_action(pl, t1, t2, t3)).unwrap();
        prop_assert!(projective_distance(m, n) < 1e-10);
    }
}

#[test]
fn single_precision_family() {
    let field = make_translation_family::<f32>(&TranslationFamilySpec::default()).unwrap();
    let j = field.jet(field.domain.center()).unwrap();
    assert!(hydro_residual(&j).relative(&j) < 1e-4);
    let wide = make_translation_family::<f64>(&TranslationFamilySpec::default()).unwrap();
    let jw = wide.jet(wide.domain.center()).unwrap();
    assert_relative_eq!(j.E() as f64, jw.E(), max_relative = 1e-6);
}
