#![allow(dead_code)]

use rand::Rng;
use transverse_core::basic::{BasicForm, BasicTensor, IdentityInputs};
use transverse_core::chart::ScalarField;
use transverse_core::scenario::Scenario;

/// Symmetric basic 2-tensor α⊗β + β⊗α + φ g_Q with random α, β, φ.
pub fn random_tensor<R: Rng>(s: &Scenario, rng: &mut R) -> BasicTensor {
    let a = s.random_one_form(rng);
    let b = s.random_one_form(rng);
    let phi = s.random_function(rng);
    let q = s.q();
    let p = s.p();
    let entries = (0..q)
        .map(|i| {
            (0..q)
                .map(|j| {
                    let ab = a.component(i).mul(b.component(j));
                    let ba = a.component(j).mul(b.component(i));
                    ab.add(&ba).add(&phi.mul(s.metric().entry(p + i, p + j)))
                })
                .collect()
        })
        .collect();
    BasicTensor::symmetric(entries).unwrap()
}

pub fn random_inputs<R: Rng>(s: &Scenario, rng: &mut R) -> IdentityInputs {
    IdentityInputs {
        f: BasicForm::function(s.random_function(rng)),
        eta: s.random_one_form(rng),
        h: random_tensor(s, rng),
        f_dot: BasicForm::function(s.random_function(rng)),
    }
}

pub fn scenarios(resolution: usize) -> Vec<Scenario> {
    vec![
        Scenario::flat_torus().with_resolution(resolution).unwrap(),
        Scenario::product_sphere().with_resolution(resolution).unwrap(),
        Scenario::carriere_default().with_resolution(resolution).unwrap(),
    ]
}

pub fn constant(s: &Scenario, v: f64) -> BasicForm {
    BasicForm::function(ScalarField::constant(s.chart(), v))
}
