//! Twists by Dirichlet characters, dilations and p-stabilizations.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FormFlags, FormInput, ModformError, Structure};
use crate::arith::{gcd, valuation, DirichletCharacter};

/// `Σ μ(n)·aₙ qⁿ`.
pub fn naive_twist(coeffs: &[Complex64], mu: &DirichletCharacter) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| if n == 0 { *a } else { mu.eval(n as i64) * a })
        .collect()
}

/// The newform `g ⊗ ν` together with its level and character.
#[derive(Clone, Debug)]
pub struct TwistedForm {
    pub level: u64,
    pub character: DirichletCharacter,
    pub coeffs: Vec<Complex64>,
}

/// Newform attached to `g ⊗ ν` for twist-minimal `g`, one prime of the
/// conductor of `ν` at a time. With `r_g = v_p(N_g)`, `r_χ` the conductor
/// exponent of `χ_g` at `p` and `p^u` that of `ν`:
///
/// 1. unless `r_g = r_χ > 0`: level exponent `max(r_g, 2u)`, naive twist;
/// 2. `r_g = r_χ > 0`, `u ≠ r_χ`: `max(r_g, u + r_χ, 2u)`, naive twist;
/// 3. `r_g = r_χ = u > 0`, `χ_gν` of conductor `p^{r′} > 1` at `p`:
///    `max(r_g, u + r′)`, naive twist;
/// 4. otherwise the level is unchanged and `a_{p^i n′}` becomes
///    `((χ_gν)(p)·conj(λ_p))^i·ν(n′)·b_{n′}` with `λ_p = b_p`.
pub fn true_twist(g: &FormInput, nu: &DirichletCharacter) -> Result<TwistedForm, ModformError> {
    if !g.flags.twist_minimal {
        return Err(ModformError::NotTwistMinimal);
    }
    let nu = nu.primitive();
    let mut level = g.level;
    let mut chi = g.character_at_level();
    let mut coeffs: Vec<Complex64> = g.coeffs.to_vec();
    let primes: Vec<u64> = crate::arith::factorize(nu.modulus()).primes().collect();
    for p in primes {
        let nu_p = nu.component_at(p);
        let u = nu_p.conductor_exponent_at(p);
        let r_g = valuation(level, p);
        let r_chi = chi.conductor_exponent_at(p);
        let exponent = if r_g == r_chi && r_g > 0 {
            if u != r_chi {
                Some(r_g.max(u + r_chi).max(2 * u))
            } else {
                let r_prime = chi.component_at(p).mul(&nu_p).conductor_exponent_at(p);
                (r_prime > 0).then(|| r_g.max(u + r_prime))
            }
        } else {
            Some(r_g.max(2 * u))
        };
        match exponent {
            Some(e) => {
                coeffs = naive_twist(&coeffs, &nu_p);
                level = level / p.pow(r_g) * p.pow(e);
            }
            None => {
                let lambda = coeffs.get(p as usize).copied().unwrap_or_default();
                let step = chi.away_from(p).eval(p as i64) * lambda.conj();
                let old = coeffs.clone();
                for (n, slot) in coeffs.iter_mut().enumerate().skip(1) {
                    let i = valuation(n as u64, p);
                    let n_prime = n as u64 / p.pow(i);
                    *slot = step.powu(i) * nu_p.eval(n_prime as i64) * old[n_prime as usize];
                }
            }
        }
        chi = chi.mul(&nu_p.pow(2)).lift(level)?;
    }
    Ok(TwistedForm { level, character: chi, coeffs })
}

/// `f(mz)` as a form of level `N·m`.
pub fn dilate(f: &Arc<FormInput>, m: u64) -> FormInput {
    let len = f.coeffs.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (len - 1) * m as usize + 1];
    for (n, a) in f.coeffs.iter().enumerate().skip(1) {
        coeffs[n * m as usize] = *a;
    }
    let level = f.level * m;
    FormInput {
        label: format!("{}({}z)", f.label, m),
        weight: f.weight,
        level,
        character: f.character.clone(),
        coeffs: Arc::new(coeffs),
        flags: FormFlags {
            is_newform: m == 1 && f.flags.is_newform,
            prime_to_n_eigenform: f.flags.prime_to_n_eigenform,
            twist_minimal: m == 1 && f.flags.twist_minimal,
        },
        structure: if m == 1 { f.structure.clone() } else { Structure::Dilation { m, base: f.clone() } },
        newform: f.associated_newform(),
        minimal_twist: if m == 1 { f.minimal_twist.clone() } else { None },
    }
}

/// Roots `(α, β)` of `X² − a_p X + χ(p) p^{k−1}`, with
/// `α = (a_p + √D)/2` for the principal square root of the discriminant.
pub fn root_pair(a_p: Complex64, chi_p: Complex64, p: u64, k: u32) -> (Complex64, Complex64) {
    let c = chi_p * (p as f64).powi(k as i32 - 1);
    let s = (a_p * a_p - 4.0 * c).sqrt();
    let (plus, minus) = (a_p + s, a_p - s);
    if plus.norm() >= minus.norm() {
        let alpha = plus / 2.0;
        (alpha, if alpha.norm() == 0.0 { minus / 2.0 } else { c / alpha })
    } else {
        let beta = minus / 2.0;
        (c / beta, beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilizationVariant {
    /// `h(z) − β h(pz)`.
    Sharp,
    /// `h(z) − α h(pz)`.
    Flat,
    /// `h(z) − p·β h(pz)`.
    Natural,
}

/// The combination `h(z) − c·h(pz)` at level `N·p`, without any check on `c`.
pub fn stabilization(h: &Arc<FormInput>, p: u64, c: Complex64) -> FormInput {
    let hp = Arc::new(dilate(h, p));
    let mut coeffs = h.coeffs.to_vec();
    for (n, slot) in coeffs.iter_mut().enumerate() {
        *slot -= c * hp.coeff(n);
    }
    FormInput {
        label: format!("{}_stab{}", h.label, p),
        weight: h.weight,
        level: h.level * p,
        character: h.character.clone(),
        coeffs: Arc::new(coeffs),
        flags: FormFlags {
            is_newform: false,
            prime_to_n_eigenform: h.flags.prime_to_n_eigenform,
            twist_minimal: false,
        },
        structure: Structure::Combination(vec![(Complex64::new(1.0, 0.0), h.clone()), (-c, hp)]),
        newform: h.associated_newform(),
        minimal_twist: None,
    }
}

/// p-stabilization of `h`; `root` is `β` for sharp/natural and `α` for flat.
pub fn p_stabilize(
    h: &Arc<FormInput>,
    p: u64,
    root: Complex64,
    variant: StabilizationVariant,
) -> Result<FormInput, ModformError> {
    if gcd(p, h.level) != 1 {
        return Err(ModformError::Invalid(format!("p = {p} divides the level {}", h.level)));
    }
    let k = h.weight;
    let pk = (p as f64).powi(k as i32 - 1);
    let chi_p = h.character.eval(p as i64);
    let a_p = h.coeff(p as usize);
    let residual = (root * root - a_p * root + chi_p * pk).norm();
    if residual > 1e-6 * pk {
        return Err(ModformError::BadRoot { residual });
    }
    let c = match variant {
        StabilizationVariant::Sharp | StabilizationVariant::Flat => root,
        StabilizationVariant::Natural => root * p as f64,
    };
    let mut out = stabilization(h, p, c);
    out.label = format!("{}_{:?}{}", h.label, variant, p).to_lowercase();
    Ok(out)
}
