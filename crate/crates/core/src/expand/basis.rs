//! Twist bases `(f₀ ⊗ μ)(mz)` and the eigenbasis least-squares method.

use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::{CuspExpansion, Diagnostics, ErrorModel, ExpandError, Method};
use crate::arith::{divisors, factorize, gcd, valuation, CharacterSpec, DirichletCharacter};
use crate::cusps::CuspDatum;
use crate::exec::Exec;
use crate::modform::{evaluate_coeffs_counted, evaluate_slash_counted, true_twist, FormInput, TailModel};
use crate::numeric::{lstsq_solve_report, sample_points, ComplexMatrix, SampleMode, SampleSpec};

/// One candidate `(f₀ ⊗ μ)(mz)`, computed as `(g₀ ⊗ ν)(mz)` with `g₀` the
/// twist-minimal form and `ν` the primitive character with `f₀ = g₀ ⊗ ψ`,
/// `ν = ψμ`.
#[derive(Clone, Debug)]
pub struct TwistBasisElement {
    pub mu: DirichletCharacter,
    pub nu: DirichletCharacter,
    pub m: u64,
    /// Level of `(f₀ ⊗ μ)(mz)`.
    pub level: u64,
    /// Coefficients of the newform `f₀ ⊗ μ`.
    pub coeffs: Arc<Vec<Complex64>>,
    pub tail: TailModel,
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisDescriptor {
    pub mu: CharacterSpec,
    pub mu_conductor: u64,
    pub m: u64,
    pub level: u64,
}

impl TwistBasisElement {
    pub fn coeff(&self, n: usize) -> Complex64 {
        if n as u64 % self.m == 0 {
            self.coeffs.get(n / self.m as usize).copied().unwrap_or_default()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        BasisDescriptor { mu: self.mu.to_spec(), mu_conductor: self.mu.conductor(), m: self.m, level: self.level }
    }
}

/// Whether `f₀ ⊗ μ` can occur in `f|[α_h]` for a cusp datum whose matrix has
/// `d` divisible by the prime-to-`c` part of `N`: for `p ∤ c`, `(χ_pμ_p)² = 1`;
/// for `p | c`, `μ_p²` must have conductor at most `p^{m′}` with
/// `m′ = v_p(N) − v_p(c)`.
pub fn basis_allowed(mu: &DirichletCharacter, chi: &DirichletCharacter, datum: &CuspDatum) -> bool {
    let n = datum.level;
    let c = gcd(datum.alpha1.c.unsigned_abs(), n);
    let c = if c == 0 { n } else { c };
    factorize(n).primes().all(|p| {
        let mu_p = mu.component_at(p);
        if c % p != 0 {
            mu_p.mul(&chi.component_at(p)).pow(2).is_trivial()
        } else {
            let m_prime = valuation(n, p) - valuation(c, p);
            mu_p.pow(2).conductor_exponent_at(p) <= m_prime
        }
    })
}

/// All `(f₀ ⊗ μ)(mz)` of level dividing `N·h_c` (pruned, when the datum's
/// matrix allows it) or `N·h`, for `μ` modulo `N`; duplicates removed,
/// ordered by conductor of `μ`, exponent vector, then `m`.
pub fn enumerate_twist_basis(f: &FormInput, datum: &CuspDatum) -> Result<Vec<TwistBasisElement>, ExpandError> {
    if !(f.flags.prime_to_n_eigenform || f.flags.is_newform) {
        return Err(ExpandError::MissingMetadata(format!("{} is not flagged as an eigenform", f.label)));
    }
    let f0 = f
        .associated_newform()
        .ok_or_else(|| ExpandError::MissingMetadata(format!("{} has no associated newform", f.label)))?;
    let (g0, psi) = if let Some(mt) = f0.minimal_twist.as_ref().or(f.minimal_twist.as_ref()) {
        (mt.form.clone(), mt.character.clone())
    } else if f0.flags.twist_minimal {
        (f0.clone(), DirichletCharacter::trivial(1))
    } else {
        return Err(ExpandError::MissingMetadata(format!("no twist-minimal form recorded for {}", f.label)));
    };
    let n = datum.level;
    let chi = f.character_at_level().lift(n)?;
    let bound = if datum.refined { n * datum.hc } else { n * datum.h };
    let mut mus = DirichletCharacter::all(n);
    mus.sort_by_key(|mu| (mu.conductor(), mu.exponent_vector()));
    let mut seen: Vec<DirichletCharacter> = Vec::new();
    let mut twists: Vec<(DirichletCharacter, DirichletCharacter, u64, Arc<Vec<Complex64>>)> = Vec::new();
    for mu in mus {
        if datum.refined && !basis_allowed(&mu, &chi, datum) {
            continue;
        }
        let nu = psi.mul(&mu).primitive();
        if seen.iter().any(|s| s.same_primitive(&nu)) {
            continue;
        }
        seen.push(nu.clone());
        let tw = true_twist(&g0, &nu)?;
        if bound % tw.level != 0 {
            continue;
        }
        let coeffs = Arc::new(tw.coeffs);
        if twists.iter().any(|(_, _, _, c)| same_series(c, &coeffs)) {
            continue;
        }
        twists.push((mu, nu, tw.level, coeffs));
    }
    let mut out = Vec::new();
    for (mu, nu, level, coeffs) in twists {
        let tail = TailModel::new(f.weight, &coeffs);
        for m in divisors(bound / level) {
            out.push(TwistBasisElement {
                mu: mu.clone(),
                nu: nu.clone(),
                m,
                level: level * m,
                coeffs: coeffs.clone(),
                tail,
            });
        }
    }
    Ok(out)
}

fn same_series(a: &[Complex64], b: &[Complex64]) -> bool {
    let len = a.len().min(b.len()).min(400);
    (1..len).all(|n| (a[n] - b[n]).norm() <= 1e-9 * (1.0 + a[n].norm()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenParams {
    /// `E₀`.
    pub digits: f64,
    /// Number of coefficients to synthesize.
    pub k: usize,
    /// `C`.
    pub decay: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct EigenExpansion {
    pub basis: Vec<TwistBasisElement>,
    /// `c_l` with `f|[α_h] = Σ c_l g_l`.
    pub c: Vec<Complex64>,
    /// `|c_l| < 10·10^{−E₀}`.
    pub negligible: Vec<bool>,
    /// Deepened accuracy `E` used for the point values.
    pub eval_digits: f64,
    pub expansion: CuspExpansion,
}

/// Least squares for `f|[α_h] = Σ c_l g_l` over a twist basis, with `M = 2L`
/// points in the rectangle `Im z ∈ [1/(2c√h), 1/(c√h)]`; values are divided
/// by `q = e^{2πiz}` and computed to `10^{−E}` with
/// `E = E₀ + (m₀ − 1)(2π√h/c − C)/ln 10` when that exceeds `E₀`.
pub fn expand_eigen(
    f: &FormInput,
    datum: &CuspDatum,
    basis: Vec<TwistBasisElement>,
    params: &EigenParams,
    exec: Exec,
) -> Result<EigenExpansion, ExpandError> {
    if basis.is_empty() {
        return Err(ExpandError::Invalid("empty twist basis".into()));
    }
    let l = basis.len();
    let m = 2 * l;
    let c = datum.alpha1.c.unsigned_abs() as f64;
    let h = datum.h as f64;
    let m0 = basis.iter().map(|g| g.m).filter(|&mm| mm as usize <= params.k.max(1)).max().unwrap_or(1);
    let gain = 2.0 * PI * h.sqrt() / c - params.decay;
    let eval_digits = if gain > 0.0 { params.digits + (m0 - 1) as f64 / LN_10 * gain } else { params.digits };
    let spec = SampleSpec::for_matrix(SampleMode::Eigen, m, params.seed, &datum.alpha1, datum.h);
    let points = sample_points(&spec);
    let eps = 10f64.powf(-eval_digits);
    let tail = f.tail();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let rows = exec.map(&points, |z| -> Result<(Vec<Complex64>, Complex64, usize), ExpandError> {
        let q = (two_pi_i * z).exp();
        let tol = eps * q.norm();
        let (value, terms) = evaluate_slash_counted(&f.coeffs, &tail, f.weight, &datum.alphah, *z, tol)?;
        let mut row = Vec::with_capacity(l);
        for g in &basis {
            let (v, _) = evaluate_coeffs_counted(&g.coeffs, &g.tail, z * g.m as f64, tol)?;
            row.push(v / q);
        }
        Ok((row, value / q, terms))
    });
    let mut a = ComplexMatrix::zeros(m, l);
    let mut rhs = Vec::with_capacity(m);
    let (mut min_terms, mut max_terms) = (usize::MAX, 0);
    for (i, r) in rows.into_iter().enumerate() {
        let (row, value, terms) = r?;
        for (j, v) in row.into_iter().enumerate() {
            a.set(i, j, v);
        }
        rhs.push(value);
        min_terms = min_terms.min(terms);
        max_terms = max_terms.max(terms);
    }
    let report = lstsq_solve_report(&a, &rhs, exec)?;
    let coeffs = synthesize(&basis, &report.solution, params.k)?;
    let threshold = 10.0 * 10f64.powf(-params.digits);
    let negligible = report.solution.iter().map(|x| x.norm() < threshold).collect();
    Ok(EigenExpansion {
        expansion: CuspExpansion {
            datum: datum.clone(),
            coeffs,
            error: ErrorModel { digits: params.digits, decay: params.decay },
            method: Method::Eigen,
            k0: params.k,
            diagnostics: Diagnostics {
                b0_magnitude: 0.0,
                residual_norm: report.residual_norm,
                condition: report.condition,
                points: m,
                min_terms,
                max_terms,
            },
        },
        basis,
        c: report.solution,
        negligible,
        eval_digits,
    })
}

/// `bₙ = Σ c_l·(coefficient n of g_l)` for `n = 0..=k`.
pub fn synthesize(basis: &[TwistBasisElement], c: &[Complex64], k: usize) -> Result<Vec<Complex64>, ExpandError> {
    for g in basis {
        let needed = k / g.m as usize;
        let available = g.coeffs.len() - 1;
        if needed > available {
            return Err(crate::modform::ModformError::InsufficientCoefficients { needed, available }.into());
        }
    }
    Ok((0..=k).map(|n| basis.iter().zip(c).map(|(g, cl)| cl * g.coeff(n)).sum()).collect())
}
