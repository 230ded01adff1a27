mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transverse_core::basic::BasicForm;
use transverse_core::functionals::*;
use transverse_core::scenario::Scenario;

/// Smallest eigenvalue of −4u'' + V u on a periodic interval of length 1 by
/// second-order finite differences, extrapolated in the mesh width.
fn sturm_liouville_periodic(v: impl Fn(f64) -> f64) -> f64 {
    let solve = |n: usize| {
        let dx = 1.0 / n as f64;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 8.0 / (dx * dx) + v(i as f64 * dx);
            m[(i, (i + 1) % n)] -= 4.0 / (dx * dx);
            m[(i, (i + n - 1) % n)] -= 4.0 / (dx * dx);
        }
        m.symmetric_eigen().eigenvalues.min()
    };
    (4.0 * solve(400) - solve(200)) / 3.0
}

#[test]
fn carriere_lambda_matches_sturm_liouville_oracle() {
    let s = Scenario::carriere_default();
    let l = s.log_rho().unwrap();
    // potential S^Q + |κ|² − 2δ_B κ = −2L² + L² − 0 by hand
    let oracle = sturm_liouville_periodic(|_| -l * l);
    let p = BasicProblem::new(&s).unwrap();
    let r = lambda_q(&p).unwrap();
    assert!(r.converged);
    assert!((r.value - oracle).abs() < 1e-6, "{} vs {}", r.value, oracle);
    assert!(r.constraint_residual < 1e-10);
}

#[test]
fn lambda_on_taut_scenarios() {
    let t = lambda_q(&BasicProblem::new(&Scenario::flat_torus().with_resolution(12).unwrap()).unwrap()).unwrap();
    assert!(t.value.abs() < 1e-10);
    let s = lambda_q(&BasicProblem::new(&Scenario::product_sphere().with_resolution(12).unwrap()).unwrap()).unwrap();
    assert_relative_eq!(s.value, 2.0, epsilon = 1e-8);
}

#[test]
fn f_functional_at_the_lambda_minimizer() {
    let s = Scenario::carriere_default().with_resolution(32).unwrap();
    let p = BasicProblem::new(&s).unwrap();
    let r = lambda_q(&p).unwrap();
    let f = r.minimizer.unwrap();
    let rule = s.quadrature().unwrap();
    assert_relative_eq!(f_q(s.metric(), &f, &rule).unwrap(), r.value, epsilon = 1e-8);
    assert_relative_eq!(weighted_volume(s.metric(), &f, &rule).unwrap(), 1.0, epsilon = 1e-10);
}

#[test]
fn mu_on_flat_torus_is_negative_and_increases_to_zero() {
    let s = Scenario::flat_torus().with_resolution(24).unwrap();
    let p = BasicProblem::new(&s).unwrap();
    let mus: Vec<f64> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&sigma| {
            let r = mu_q(&p, sigma).unwrap();
            assert!(r.converged, "sigma {sigma}");
            r.value
        })
        .collect();
    assert_relative_eq!(mus[0], -2.0 - (4.0 * PI).ln(), epsilon = 1e-8);
    assert_relative_eq!(mus[1], -2.0 - (0.4 * PI).ln(), epsilon = 1e-8);
    assert!(mus.iter().all(|m| *m <= 0.0), "{mus:?}");
    assert!(mus[0] < mus[1] && mus[1] < mus[2], "{mus:?}");
    assert!(mus[2].abs() < 0.1 * mus[1].abs(), "{mus:?}");
}

#[test]
fn mu_is_scale_invariant() {
    for s in [Scenario::flat_torus().with_resolution(16).unwrap(), Scenario::carriere_default().with_resolution(32).unwrap()]
    {
        let base = mu_q(&BasicProblem::new(&s).unwrap(), 0.5).unwrap();
        let scaled = mu_q(&BasicProblem::new(&s.scale_transverse(2.0).unwrap()).unwrap(), 1.0).unwrap();
        assert!(base.converged && scaled.converged);
        assert!((base.value - scaled.value).abs() < 1e-5, "{}: {} vs {}", s.name(), base.value, scaled.value);
    }
}

#[test]
fn normalized_lambda_scales_out() {
    let s = Scenario::carriere_default().with_resolution(32).unwrap();
    let a = BasicProblem::new(&s).unwrap();
    let b = BasicProblem::new(&s.scale_transverse(3.0).unwrap()).unwrap();
    let na = normalized_lambda_q(&a, &lambda_q(&a).unwrap()).unwrap();
    let nb = normalized_lambda_q(&b, &lambda_q(&b).unwrap()).unwrap();
    assert_relative_eq!(na, nb, epsilon = 1e-9);
}

#[test]
fn f_and_w_at_zero_on_carriere() {
    let s = Scenario::carriere_default();
    let l = s.log_rho().unwrap();
    let rule = s.quadrature().unwrap();
    let zero = BasicForm::zero(s.chart(), 0, 2);
    assert_relative_eq!(f_q(s.metric(), &zero, &rule).unwrap(), -l * l, epsilon = 1e-8);
    let w = w_q(s.metric(), &zero, 1.0, &rule).unwrap();
    assert_relative_eq!(w, (-l * l - 2.0) / (4.0 * PI), epsilon = 1e-10);
    assert!(w_q(s.metric(), &zero, 0.0, &rule).is_err());
}

#[test]
fn first_variations_match_finite_differences() {
    for s in common::scenarios(32) {
        let rule = s.quadrature().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..3 {
            let id = common::random_inputs(&s, &mut rng);
            let inputs = VariationInputs { f: id.f, h: id.h, f_dot: id.f_dot, sigma: 0.7, sigma_dot: 0.3 };
            let fv = f_variation(s.metric(), &inputs, &rule).unwrap();
            assert!(fv.gap() < 1e-5, "{} F: {:e}", s.name(), fv.gap());
            let wv = w_variation(s.metric(), &inputs, &rule).unwrap();
            assert!(wv.gap() < 1e-5, "{} W: {:e}", s.name(), wv.gap());
            let sv = scalar_variation(s.metric(), &inputs.h, &[0.2, 0.9, 0.4]).unwrap();
            assert!(sv.gap() < 1e-5, "{} S: {:e}", s.name(), sv.gap());
        }
    }
}
