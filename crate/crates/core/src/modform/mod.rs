//! Cusp forms given by their q-expansion at ∞: evaluation with certified
//! truncation, slash operators, coefficient generators, twists and
//! p-stabilizations.

mod io;
mod series;
mod twist;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{ArithError, DirichletCharacter, IntMatrix2};

pub use io::{CombinationTerm, DilationSpec, FormFile, FormRef, Level1Spec, MinimalTwistSpec, SCHEMA};
pub use series::{
    eisenstein, eta_level, eta_quotient, hecke_extend, hecke_extend_exact, level1_newforms,
    level1_quadratic, to_complex, QuadraticPair,
};
pub use twist::{
    dilate, naive_twist, p_stabilize, root_pair, stabilization, true_twist, StabilizationVariant,
    TwistedForm,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModformError {
    #[error("need coefficients up to n = {needed}, only {available} available")]
    InsufficientCoefficients { needed: usize, available: usize },
    #[error("invalid form: {0}")]
    Invalid(String),
    #[error("form is not flagged twist-minimal")]
    NotTwistMinimal,
    #[error("missing coefficient a_{0}")]
    MissingPrime(u64),
    #[error("supplied root fails the Hecke polynomial (residual {residual:.3e})")]
    BadRoot { residual: f64 },
    #[error("weight {0} is not supported")]
    UnsupportedWeight(u32),
    #[error("eta quotient has non-integral or negative q-offset {num}/24")]
    FractionalOffset { num: i64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormFlags {
    #[serde(default)]
    pub is_newform: bool,
    #[serde(default)]
    pub prime_to_n_eigenform: bool,
    #[serde(default)]
    pub twist_minimal: bool,
}

/// How a form is built from others, when it is.
#[derive(Clone, Debug, Default)]
pub enum Structure {
    #[default]
    Plain,
    /// `f(z) = base(mz)`.
    Dilation { m: u64, base: Arc<FormInput> },
    /// `f = Σ cᵢ·gᵢ` with each `gᵢ` of level dividing that of `f`.
    Combination(Vec<(Complex64, Arc<FormInput>)>),
}

/// `self = form ⊗ character` with `form` twist-minimal.
#[derive(Clone, Debug)]
pub struct MinimalTwist {
    pub form: Arc<FormInput>,
    pub character: DirichletCharacter,
}

/// A cusp form in `S_k(N, χ)` with its expansion at ∞.
#[derive(Clone, Debug)]
pub struct FormInput {
    pub label: String,
    pub weight: u32,
    pub level: u64,
    pub character: DirichletCharacter,
    /// `coeffs[n] = aₙ` for `n ≥ 1`; `coeffs[0] = 0`.
    pub coeffs: Arc<Vec<Complex64>>,
    pub flags: FormFlags,
    pub structure: Structure,
    /// The newform whose Hecke eigenvalues this form shares away from N.
    pub newform: Option<Arc<FormInput>>,
    pub minimal_twist: Option<MinimalTwist>,
}

/// `|aₙ| ≤ C_f·n^γ` with `γ = (k − 1)/2 + 0.6`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailModel {
    pub growth: f64,
    pub gamma: f64,
}

impl TailModel {
    pub fn new(weight: u32, coeffs: &[Complex64]) -> TailModel {
        let gamma = (weight as f64 - 1.0) / 2.0 + 0.6;
        let max_ratio = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, a)| a.norm() / (n as f64).powf(gamma))
            .fold(0.0, f64::max);
        TailModel { growth: 2.0 * max_ratio.max(1e-300), gamma }
    }

    /// Upper bound for `Σ_{n>T} C_f n^γ rⁿ`, infinite when the closed form
    /// does not apply.
    pub fn tail_bound(&self, t: usize, r: f64) -> f64 {
        let t1 = t as f64 + 1.0;
        let ratio = r * (self.gamma / t1).exp();
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        (self.growth.ln() + self.gamma * t1.ln() + t1 * r.ln() - (1.0 - ratio).ln()).exp()
    }

    /// Smallest truncation `T` with tail bound at most `eps` for `|q| = r`.
    pub fn truncation(&self, r: f64, eps: f64) -> usize {
        if self.tail_bound(1, r) <= eps {
            return 1;
        }
        let start = ((self.gamma / -r.ln()).ceil() as usize).max(1);
        let mut hi = start;
        while self.tail_bound(hi, r) > eps {
            hi = hi.saturating_mul(2);
            if hi > 1 << 40 {
                return usize::MAX;
            }
        }
        let mut lo = start.min(hi);
        if self.tail_bound(lo, r) <= eps {
            while lo > 1 && self.tail_bound(lo - 1, r) <= eps {
                lo -= 1;
            }
            return lo;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_bound(mid, r) <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

impl FormInput {
    pub fn new(
        label: impl Into<String>,
        weight: u32,
        level: u64,
        character: DirichletCharacter,
        coeffs: Vec<Complex64>,
        flags: FormFlags,
    ) -> Result<FormInput, ModformError> {
        let f = FormInput {
            label: label.into(),
            weight,
            level,
            character,
            coeffs: Arc::new(coeffs),
            flags,
            structure: Structure::Plain,
            newform: None,
            minimal_twist: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ModformError> {
        if self.weight == 0 || self.level == 0 {
            return Err(ModformError::Invalid("weight and level must be positive".into()));
        }
        if self.level % self.character.modulus() != 0 {
            return Err(ModformError::Invalid(format!(
                "character modulus {} does not divide level {}",
                self.character.modulus(),
                self.level
            )));
        }
        if self.coeffs.len() < 2 {
            return Err(ModformError::Invalid("no coefficients".into()));
        }
        if self.coeffs[0].norm() != 0.0 {
            return Err(ModformError::Invalid("a_0 must vanish for a cusp form".into()));
        }
        if self.flags.is_newform && (self.coeffs[1] - 1.0).norm() > 1e-12 {
            return Err(ModformError::Invalid("newforms must have a_1 = 1".into()));
        }
        if let Structure::Dilation { m, .. } = &self.structure {
            if self.coeffs.iter().enumerate().any(|(n, a)| n as u64 % m != 0 && a.norm() != 0.0) {
                return Err(ModformError::Invalid(format!("dilation by {m} but a_n ≠ 0 with m ∤ n")));
            }
        }
        if self.coeffs.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(ModformError::Invalid("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Largest index with a supplied coefficient.
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn tail(&self) -> TailModel {
        TailModel::new(self.weight, &self.coeffs)
    }

    /// The newform to which the eigenform machinery applies.
    pub fn associated_newform(&self) -> Option<Arc<FormInput>> {
        if self.flags.is_newform {
            Some(Arc::new(self.clone()))
        } else {
            self.newform.clone()
        }
    }

    /// Character viewed modulo the level.
    pub fn character_at_level(&self) -> DirichletCharacter {
        self.character.lift(self.level).expect("modulus divides level")
    }

    /// The same form with its expansion at ∞ replaced, e.g. truncated. The
    /// structure is kept, so the new coefficients must still describe it.
    pub fn with_coeffs(&self, coeffs: Vec<Complex64>) -> FormInput {
        FormInput { coeffs: Arc::new(coeffs), ..self.clone() }
    }
}

/// `Σ_{n ≥ 1} aₙ e^{2πinz}`, truncated so the certified tail is at most `eps`.
pub fn evaluate_coeffs(
    coeffs: &[Complex64],
    tail: &TailModel,
    z: Complex64,
    eps: f64,
) -> Result<Complex64, ModformError> {
    Ok(evaluate_coeffs_counted(coeffs, tail, z, eps)?.0)
}

/// As [`evaluate_coeffs`], also returning the number of terms used.
pub fn evaluate_coeffs_counted(
    coeffs: &[Complex64],
    tail: &TailModel,
    z: Complex64,
    eps: f64,
) -> Result<(Complex64, usize), ModformError> {
    if !(z.im > 0.0) {
        return Err(ModformError::Invalid(format!("Im z must be positive, got {z}")));
    }
    let r = (-2.0 * std::f64::consts::PI * z.im).exp();
    let t = tail.truncation(r, eps);
    let available = coeffs.len().saturating_sub(1);
    if t > available {
        return Err(ModformError::InsufficientCoefficients { needed: t, available });
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let q = (two_pi_i * z).exp();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut qn = q;
    for (n, a) in coeffs.iter().enumerate().take(t + 1).skip(1) {
        if n % 64 == 0 {
            qn = (two_pi_i * z * n as f64).exp();
        }
        if a.re != 0.0 || a.im != 0.0 {
            sum += a * qn;
        }
        qn *= q;
    }
    Ok((sum, t))
}

pub fn evaluate(f: &FormInput, z: Complex64, eps: f64) -> Result<Complex64, ModformError> {
    evaluate_coeffs(&f.coeffs, &f.tail(), z, eps)
}

/// `det(M)^{k/2}·(cz + d)^{−k}·f(Mz)` to absolute accuracy `eps`.
pub fn evaluate_slash_coeffs(
    coeffs: &[Complex64],
    tail: &TailModel,
    weight: u32,
    m: &IntMatrix2,
    z: Complex64,
    eps: f64,
) -> Result<Complex64, ModformError> {
    Ok(evaluate_slash_counted(coeffs, tail, weight, m, z, eps)?.0)
}

/// As [`evaluate_slash_coeffs`], also returning the number of terms used.
pub fn evaluate_slash_counted(
    coeffs: &[Complex64],
    tail: &TailModel,
    weight: u32,
    m: &IntMatrix2,
    z: Complex64,
    eps: f64,
) -> Result<(Complex64, usize), ModformError> {
    let det = m.det();
    if det <= 0 {
        return Err(ModformError::Invalid(format!("slash needs det > 0, got {det}")));
    }
    let j = m.automorphy(z);
    let factor = (det as f64).powf(weight as f64 / 2.0) * j.powi(-(weight as i32));
    let w = m.act(z);
    let inner_eps = eps / factor.norm();
    let (v, t) = evaluate_coeffs_counted(coeffs, tail, w, inner_eps)?;
    Ok((factor * v, t))
}

pub fn evaluate_slash(
    f: &FormInput,
    m: &IntMatrix2,
    z: Complex64,
    eps: f64,
) -> Result<Complex64, ModformError> {
    evaluate_slash_coeffs(&f.coeffs, &f.tail(), f.weight, m, z, eps)
}
