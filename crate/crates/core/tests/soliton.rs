use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transverse_core::basic::BasicForm;
use transverse_core::chart::ScalarField;
use transverse_core::expr::Expr;
use transverse_core::jet::Jet;
use transverse_core::local::Local;
use transverse_core::scenario::Scenario;
use transverse_core::soliton::*;
use transverse_core::transverse::Tautness;

fn constant(s: &Scenario, v: f64) -> BasicForm {
    BasicForm::function(ScalarField::constant(s.chart(), v))
}

fn sphere() -> Scenario {
    Scenario::product_sphere().with_resolution(16).unwrap()
}

#[test]
fn flat_torus_is_steady() {
    let s = Scenario::flat_torus().with_resolution(12).unwrap();
    let r = soliton_residual(&SolitonCandidate::new(s)).unwrap();
    assert!(r.fitted_lambda.abs() < 1e-14);
    assert!(r.sup < 1e-12);
    assert_eq!(r.classification, Classification::Steady);
}

#[test]
fn round_sphere_factor_is_shrinking() {
    let s = sphere();
    let r = soliton_residual(&SolitonCandidate::gradient(s.clone(), constant(&s, 0.3))).unwrap();
    assert_relative_eq!(r.fitted_lambda, 1.0, epsilon = 1e-10);
    assert!(r.sup < 1e-8);
    assert_eq!(r.classification, Classification::Shrinking);
}

#[test]
fn gradient_suite_on_round_sphere() {
    let s = sphere();
    let r = gradient_identity_suite(&SolitonCandidate::gradient(s.clone(), constant(&s, 0.0)).with_lambda(1.0)).unwrap();
    assert!(r.applicable);
    assert_eq!(r.identities.len(), 4);
    for id in &r.identities {
        assert!(id.sup < 1e-8, "{} {}", id.name, id.sup);
    }
}

#[test]
fn gradient_suite_on_flat_torus_vanishes() {
    let s = Scenario::flat_torus().with_resolution(10).unwrap();
    let r = gradient_identity_suite(&SolitonCandidate::gradient(s.clone(), constant(&s, 1.0))).unwrap();
    assert!(r.applicable);
    assert!(r.worst() < 1e-12);
}

#[test]
fn twisted_suite_collapses_on_taut_scenarios() {
    for s in [Scenario::flat_torus().with_resolution(10).unwrap(), sphere()] {
        let f = constant(&s, 0.2);
        let g = gradient_identity_suite(&SolitonCandidate::gradient(s.clone(), f.clone())).unwrap();
        let t = twisted_identity_suite(&SolitonCandidate::twisted(s.clone(), f)).unwrap();
        assert!(g.applicable && t.applicable);
        for id in &g.identities {
            let other = t.identity(&id.name).unwrap();
            assert!((id.sup - other.sup).abs() < 1e-12, "{} {}", s.name(), id.name);
        }
    }
}

#[test]
fn carriere_twisted_attempt_fails() {
    let s = Scenario::carriere_default().with_resolution(16).unwrap();
    let l = s.log_rho().unwrap();
    let c = SolitonCandidate::twisted(s.clone(), constant(&s, 0.0));
    let base = soliton_residual(&c).unwrap();
    assert_eq!(base.classification, Classification::NotASoliton);
    // Ric^Q + ½L_τ g_Q = diag(0, −L²); the best constant fit leaves L²/√2
    assert_relative_eq!(base.sup, l * l / 2f64.sqrt(), epsilon = 1e-9);
    let suite = twisted_identity_suite(&c).unwrap();
    assert!(!suite.applicable);
    assert!(suite.identities.is_empty());
}

#[test]
fn hamilton_identity_is_linearly_sensitive() {
    let s = sphere();
    let res = |eps: f64| {
        let f = BasicForm::function(ScalarField::analytic(s.chart(), Expr::var(1).cos() * eps));
        let r = gradient_identity_suite(&SolitonCandidate::gradient(s.clone(), f).with_lambda(1.0)).unwrap();
        assert!(r.applicable);
        r.identity("hamilton").unwrap().sup
    };
    let (a, b) = (res(1e-8), res(1e-7));
    assert!(a > 1e-10);
    assert_relative_eq!(b / a, 10.0, epsilon = 1e-3);
}

#[test]
fn lie_derivative_of_gradient_is_twice_the_hessian() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in [Scenario::flat_torus(), Scenario::carriere_default()] {
        let q = s.q();
        for _ in 0..5 {
            let f = s.random_function(&mut rng);
            for x in [[0.1, 0.37, 0.81], [0.6, 0.2, 0.45]] {
                let loc = Local::new(s.metric(), &x, 3).unwrap();
                let fj = f.jet(&x, 3).unwrap();
                let grad = loc.sharp(&loc.df(&fj));
                let lie = loc.lie_metric(&grad);
                let hess = loc.hessian(&fj);
                for k in 0..q * q {
                    assert!((lie[k].value() - 2.0 * hess[k].value()).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn zero_field_has_zero_lie_derivative() {
    let s = Scenario::carriere_default();
    let loc = Local::new(s.metric(), &[0.3, 0.3, 0.3], 2).unwrap();
    let lie = loc.lie_metric(&[Jet::zero(1), Jet::zero(1)]);
    assert!(lie.iter().all(|v| v.value() == 0.0));
}

#[test]
fn fitted_lambda_minimizes_the_l2_residual() {
    let cases = [
        SolitonCandidate::new(Scenario::flat_torus().with_resolution(10).unwrap()),
        SolitonCandidate::new(sphere()),
        SolitonCandidate::new(Scenario::carriere_default().with_resolution(16).unwrap()),
    ];
    for c in cases {
        let r = soliton_residual(&c).unwrap();
        let at = l2_residual_at(&c, r.fitted_lambda).unwrap();
        assert!(l2_residual_at(&c, r.fitted_lambda + 0.01).unwrap() > at);
        assert!(l2_residual_at(&c, r.fitted_lambda - 0.01).unwrap() > at);
    }
}

#[test]
fn classification_is_scale_covariant() {
    for s in [sphere(), Scenario::carriere_default().with_resolution(16).unwrap()] {
        let base = soliton_residual(&SolitonCandidate::new(s.clone())).unwrap();
        for c in [0.5, 3.0] {
            let r = soliton_residual(&SolitonCandidate::new(s.scale_transverse(c).unwrap())).unwrap();
            assert_relative_eq!(r.fitted_lambda, base.fitted_lambda / c, epsilon = 1e-10);
            assert_eq!(r.classification, base.classification);
        }
    }
}

#[test]
fn theorem_consistency_on_built_in_scenarios() {
    let carriere = theorem_consistency_report(&SolitonCandidate::new(
        Scenario::carriere_default().with_resolution(16).unwrap(),
    ))
    .unwrap();
    assert_eq!(carriere.tautness, Tautness::NonTaut);
    assert!(carriere.consistent());
    let v = carriere.verdict("non_taut_implies_expanding").unwrap();
    assert!(v.applicable && v.consistent);
    assert!(carriere.verdict("expanding_gradient_is_einstein").unwrap().applicable);

    let torus = theorem_consistency_report(&SolitonCandidate::new(Scenario::flat_torus().with_resolution(10).unwrap()))
        .unwrap();
    assert!(torus.consistent());
    assert!(torus.verdict("steady_implies_ricci_flat").unwrap().applicable);

    let sph = theorem_consistency_report(&SolitonCandidate::new(sphere())).unwrap();
    assert!(sph.consistent());
    let v = sph.verdict("shrinking_implies_taut").unwrap();
    assert!(v.applicable && v.consistent);
}

#[test]
fn identity_residuals_are_controlled_by_the_soliton_residual() {
    let torus = Scenario::flat_torus().with_resolution(10).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;
    let cases = [
        (sphere(), Expr::var(1).cos(), 1.0),
        (torus, ((Expr::var(1) * two_pi).sin() + (Expr::var(2) * two_pi).cos() * 0.5) * 0.01, 0.0),
    ];
    for (s, shape, lambda) in cases {
        let ratios: Vec<f64> = [1e-9, 1e-8, 1e-7]
            .iter()
            .map(|&eps| {
                let f = BasicForm::function(ScalarField::analytic(s.chart(), shape.clone() * eps));
                let r = gradient_identity_suite(&SolitonCandidate::gradient(s.clone(), f).with_lambda(lambda)).unwrap();
                assert!(r.applicable && r.sup > 0.0, "{} {eps}: {:?}", s.name(), r);
                r.worst() / r.sup
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(hi.is_finite() && hi < 2.0 * lo, "{}: {ratios:?}", s.name());
    }
}
