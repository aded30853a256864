#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use cuspidal::arith::DirichletCharacter;
use num_complex::Complex64;
use cuspidal::modform::{Structure, 
    dilate, eta_level, eta_quotient, level1_newforms, to_complex, true_twist, FormFlags, FormInput, MinimalTwist,
};

pub const NEWFORM: FormFlags = FormFlags { is_newform: true, prime_to_n_eigenform: true, twist_minimal: true };

pub fn eta(label: &str, spec: &[(u64, i64)], n: usize) -> Arc<FormInput> {
    let level = eta_level(spec).unwrap();
    let k = (spec.iter().map(|&(_, r)| r).sum::<i64>() / 2) as u32;
    let c = to_complex(&eta_quotient(spec, n).unwrap());
    Arc::new(FormInput::new(label, k, level, DirichletCharacter::trivial(level), c, NEWFORM).unwrap())
}

pub fn delta(n: usize) -> Arc<FormInput> {
    eta("delta", &[(1, 24)], n)
}

/// The weight-6 newform of level 3.
pub fn f2(n: usize) -> Arc<FormInput> {
    eta("f2", &[(1, 6), (3, 6)], n)
}

/// The weight-4 newform of level 6.
pub fn level6(n: usize) -> Arc<FormInput> {
    eta("level6", &[(1, 2), (2, 2), (3, 2), (6, 2)], n)
}

/// The weight-4 newform of level 8.
pub fn level8(n: usize) -> Arc<FormInput> {
    eta("level8", &[(2, 4), (4, 4)], n)
}

pub fn chi_minus3() -> DirichletCharacter {
    DirichletCharacter::from_exponents(3, vec![vec![1]]).unwrap()
}

/// `f2 ⊗ χ₋₃`, a newform of level 9 that is not twist-minimal.
pub fn f2_twist(n: usize) -> Arc<FormInput> {
    let base = f2(n);
    let tw = true_twist(&base, &chi_minus3()).unwrap();
    let flags = FormFlags { twist_minimal: false, ..NEWFORM };
    let mut f = FormInput::new("f2_twist", 6, tw.level, tw.character, tw.coeffs, flags).unwrap();
    f.minimal_twist = Some(MinimalTwist { form: base, character: chi_minus3() });
    Arc::new(f)
}

pub fn dilated(f: &Arc<FormInput>, m: u64) -> Arc<FormInput> {
    Arc::new(dilate(f, m))
}

pub fn level1(m: u32, n: usize) -> Arc<FormInput> {
    Arc::new(level1_newforms(m, n).unwrap().remove(0))
}

pub fn fixture(name: &str) -> Arc<FormInput> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"));
    Arc::new(FormInput::load(p).unwrap())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// `Σ cᵢ fᵢ` as a form of the given level.
pub fn combination(label: &str, level: u64, terms: &[(Complex64, Arc<FormInput>)]) -> Arc<FormInput> {
    let first = &terms[0].1;
    let len = terms.iter().map(|(_, f)| f.coeffs.len()).min().unwrap();
    let coeffs = (0..len).map(|n| terms.iter().map(|(c, f)| c * f.coeffs[n]).sum()).collect();
    let flags = FormFlags { is_newform: false, prime_to_n_eigenform: first.flags.prime_to_n_eigenform, twist_minimal: false };
    let mut f = FormInput::new(label, first.weight, level, first.character.clone(), coeffs, flags).unwrap();
    f.structure = Structure::Combination(terms.to_vec());
    f.newform = first.associated_newform();
    Arc::new(f)
}
