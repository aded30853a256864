//! Petersson inner products from cusp expansions.
//!
//! For `f, g ∈ S_k(N, χ)`,
//!
//! ```text
//! ⟨f,g⟩ = 4/vol · Σ_s (h_{s,0}/h_s) Σ_n a_{n,s}·conj(b_{n,s})/n^{k−1} · S_{s,n}
//! S_{s,n} = Σ_m (x/8π)^{k−1}(x·K_{k−2}(x) − K_{k−1}(x)),  x = 4πm√(n/h_s)
//! ```
//!
//! where `f|[α₁·τ_{h_s}] = Σ a_{n,s} qⁿ`. Triple products `⟨fg, h⟩` use the
//! same sum with the Cauchy product of the expansions of `f` and `g` and the
//! weight `m` of `h`.

mod constants;
mod provider;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use constants::{
    adjoint_constant, ichino_base, ichino_constant, nps_factor, ratio_check, AdjointLocal, IchinoLocal,
    LocalFactorSpec, RatioCheck, Relation,
};
pub use provider::{eigen_applicable, ExpansionProvider, MethodChoice, ProviderOptions, Request};

use crate::arith::{gamma0_index, lcm, ArithError, DirichletCharacter};
use crate::cusps::{enumerate_cusps, form_width, CuspDatum, CuspError};
use crate::exec::Exec;
use crate::expand::{ExpandError, Method};
use crate::modform::FormInput;
use crate::numeric::{bessel_k_scaled_seq, NumericError};

pub const SCHEMA: &str = "cuspidal/1";

/// Truncation margin below the requested accuracy, for both the `m` and the
/// `n` sums.
pub const SAFE_FACTOR: f64 = 1e3;

#[derive(Debug, Error)]
pub enum PeterssonError {
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Cusp(#[from] CuspError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("incompatible forms: {0}")]
    Mismatch(String),
    #[error("cusp widths sum to {sum}, expected the index {index}")]
    CuspSum { sum: u64, index: u64 },
}

/// `vol(Γ₀(N)\H) = (π/3)·N·Π_{p|N}(1 + 1/p)`.
pub fn volume(n: u64) -> f64 {
    PI / 3.0 * gamma0_index(n) as f64
}

/// `S_{s,n}` for weight `k` and width `h`, truncated once the remaining
/// terms are certified below `eps/1000`. Returns the sum and the number of
/// Bessel evaluations.
pub fn bessel_weight_sum(k: u32, n: u64, h: u64, eps: f64) -> Result<(f64, usize), NumericError> {
    if k < 2 || n == 0 || h == 0 {
        return Err(NumericError::InvalidArgument(format!("bessel_weight_sum needs k ≥ 2, n, h ≥ 1 (k={k}, n={n}, h={h})")));
    }
    let x1 = 4.0 * PI * (n as f64 / h as f64).sqrt();
    let km1 = (k - 1) as f64;
    let cutoff = eps / SAFE_FACTOR;
    let mut sum = 0.0;
    let mut terms = 0;
    for m in 1.. {
        let x = x1 * m as f64;
        let ks = bessel_k_scaled_seq(k - 1, x)?;
        let term = (km1 * (x / (8.0 * PI)).ln() - x).exp() * (x * ks[k as usize - 2] - ks[k as usize - 1]);
        sum += term;
        terms += 1;
        let next = x + x1;
        if next > (k * k) as f64 && tail_bound(k, next) < cutoff {
            break;
        }
    }
    Ok((sum, terms))
}

/// Bound on `|(x/8π)^{k−1}(xK_{k−2}(x) − K_{k−1}(x))|`, valid for `x > k²`.
pub fn tail_bound(k: u32, x: f64) -> f64 {
    ((k - 1) as f64 * (x / (8.0 * PI)).ln() - x).exp() * 2.0 * (x + 1.0) * (PI / (2.0 * x)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeterssonParams {
    /// `E`: the cusp sum is truncated and every expansion is requested so
    /// that the error is about `10^{−E}` relative to the largest `S_{s,1}`.
    pub digits: f64,
    pub method: MethodChoice,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for PeterssonParams {
    fn default() -> Self {
        PeterssonParams { digits: 12.0, method: MethodChoice::Auto, seed: 0, exec: Exec::Parallel }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspContribution {
    pub cusp: String,
    pub h0: u64,
    /// Width of the expansions used at this cusp.
    pub h: u64,
    pub n_s: usize,
    /// `C` handed to the expansion layer.
    pub decay: f64,
    /// `(h_{s,0}/h_s)·Σₙ …`, before the `4/vol` prefactor.
    pub contribution: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionSummary {
    pub form: String,
    pub level: u64,
    pub cusp: String,
    pub method: Method,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "E")]
    pub digits: f64,
    #[serde(rename = "C")]
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerProductReport {
    pub schema: &'static str,
    pub kind: &'static str,
    pub forms: Vec<String>,
    pub level: u64,
    pub weight: u32,
    pub value: Complex64,
    /// `|value|²`, reported for triple products.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_squared: Option<f64>,
    #[serde(rename = "E")]
    pub digits: f64,
    pub volume: f64,
    pub cusps: Vec<CuspContribution>,
    pub expansions: Vec<ExpansionSummary>,
    pub bessel_evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub schema: &'static str,
    pub kind: &'static str,
    pub value: Complex64,
    pub numerator: InnerProductReport,
    pub denominator: InnerProductReport,
}

/// Truncation data for one cusp of Γ₀(N).
#[derive(Clone, Debug)]
struct CuspPlan {
    datum: CuspDatum,
    width: u64,
    /// `S_{s,n}` for `n = 1..=n_s` (index 0 unused).
    s: Arc<Vec<f64>>,
    decay: f64,
}

impl CuspPlan {
    fn n_s(&self) -> usize {
        self.s.len() - 1
    }
}

struct Plan {
    level: u64,
    weight: u32,
    cusps: Vec<CuspPlan>,
    bessel_evaluations: usize,
}

/// Lists the cusps of Γ₀(N) with the widths `widths(c)` and computes
/// `S_{s,n}` until it drops a safe factor below `10^{−E}·max_s S_{s,1}`.
fn plan_cusps(
    level: u64,
    weight: u32,
    widths: impl Fn(u64) -> Result<u64, CuspError>,
    digits: f64,
    exec: Exec,
) -> Result<Plan, PeterssonError> {
    let trivial = DirichletCharacter::trivial(level);
    let mut data = Vec::new();
    for cusp in enumerate_cusps(level) {
        let datum = CuspDatum::new(level, &trivial, cusp)?;
        let width = widths(cusp.c)?;
        data.push((datum, width));
    }
    let sum: u64 = data.iter().map(|(d, _)| d.h0).sum();
    let index = gamma0_index(level);
    if sum != index {
        return Err(PeterssonError::CuspSum { sum, index });
    }
    let mut hs: Vec<u64> = data.iter().map(|(_, h)| *h).collect();
    hs.sort_unstable();
    hs.dedup();
    let firsts = exec.map(&hs, |&h| -> Result<(f64, usize), NumericError> {
        let x = 4.0 * PI / (h as f64).sqrt();
        let lead = tail_bound(weight, x.max(1e-3));
        bessel_weight_sum(weight, 1, h, lead * 1e-20)
    });
    let mut s1_max: f64 = 0.0;
    let mut evaluations = 0;
    for r in firsts {
        let (s, t) = r?;
        s1_max = s1_max.max(s.abs());
        evaluations += t;
    }
    let tol = 10f64.powf(-digits) * s1_max;
    let tables = exec.map(&hs, |&h| -> Result<(Vec<f64>, usize), NumericError> {
        let mut s = vec![0.0];
        let mut terms = 0;
        for n in 1.. {
            let (v, t) = bessel_weight_sum(weight, n, h, tol)?;
            s.push(v);
            terms += t;
            if v.abs() < tol / SAFE_FACTOR {
                break;
            }
        }
        Ok((s, terms))
    });
    let mut by_width = BTreeMap::new();
    for (h, r) in hs.iter().zip(tables) {
        let (s, t) = r?;
        evaluations += t;
        by_width.insert(*h, Arc::new(s));
    }
    let cusps = data
        .into_iter()
        .map(|(datum, width)| {
            let s = by_width[&width].clone();
            let decay = decay_envelope(&s);
            CuspPlan { datum, width, s, decay }
        })
        .collect();
    Ok(Plan { level, weight, cusps, bessel_evaluations: evaluations })
}

/// Largest `C ≥ 0.05` with `e^{−Cn} ≥ S_n/S_1` for all tabulated `n ≥ 2`.
fn decay_envelope(s: &[f64]) -> f64 {
    if s.len() <= 2 {
        return 1.0;
    }
    let s1 = s[1].abs();
    let c = (2..s.len())
        .map(|n| -(s[n].abs() / s1).max(f64::MIN_POSITIVE).ln() / n as f64)
        .fold(f64::INFINITY, f64::min);
    c.max(0.05)
}

fn check_level(f: &FormInput, level: u64) -> Result<(), PeterssonError> {
    if level % f.level != 0 {
        return Err(PeterssonError::Mismatch(format!("level {} of {} does not divide {level}", f.level, f.label)));
    }
    Ok(())
}

fn character_at(f: &FormInput, level: u64) -> Result<DirichletCharacter, PeterssonError> {
    Ok(f.character.lift(level)?)
}

fn request(f: &Arc<FormInput>, cusp: &CuspPlan, digits: f64) -> Request {
    Request {
        form: f.clone(),
        beta: cusp.datum.alpha1,
        width: cusp.width,
        k: cusp.n_s(),
        digits,
        decay: cusp.decay,
    }
}

fn summaries(provider: &ExpansionProvider) -> Vec<ExpansionSummary> {
    provider
        .expansions()
        .map(|(label, e)| ExpansionSummary {
            form: label.to_string(),
            level: e.datum.level,
            cusp: e.datum.cusp.to_string(),
            method: e.method,
            k: e.k(),
            digits: e.error.digits,
            decay: e.error.decay,
        })
        .collect()
}

/// `⟨f, g⟩` for forms of the same weight and character; levels may differ,
/// the computation runs at their lcm.
pub fn petersson_pair(
    f: &Arc<FormInput>,
    g: &Arc<FormInput>,
    params: &PeterssonParams,
) -> Result<InnerProductReport, PeterssonError> {
    let mut reports = petersson_pairs(&[(f.clone(), g.clone())], params)?;
    Ok(reports.remove(0))
}

/// Several pairs sharing one set of native expansions.
pub fn petersson_pairs(
    pairs: &[(Arc<FormInput>, Arc<FormInput>)],
    params: &PeterssonParams,
) -> Result<Vec<InnerProductReport>, PeterssonError> {
    let mut plans = Vec::with_capacity(pairs.len());
    for (f, g) in pairs {
        if f.weight != g.weight {
            return Err(PeterssonError::Mismatch(format!("weights {} and {} differ", f.weight, g.weight)));
        }
        let level = lcm(f.level, g.level);
        check_level(f, level)?;
        check_level(g, level)?;
        let chi = character_at(f, level)?;
        if chi != character_at(g, level)? {
            return Err(PeterssonError::Mismatch(format!("{} and {} have different characters", f.label, g.label)));
        }
        plans.push(plan_cusps(level, f.weight, |c| form_width(level, &chi, c), params.digits, params.exec)?);
    }
    let opts = ProviderOptions { method: params.method, seed: params.seed, exec: params.exec };
    let mut provider = ExpansionProvider::new(opts);
    for ((f, g), plan) in pairs.iter().zip(&plans) {
        for cusp in &plan.cusps {
            provider.plan(&request(f, cusp, params.digits))?;
            provider.plan(&request(g, cusp, params.digits))?;
        }
    }
    provider.compute()?;
    let expansions = summaries(&provider);
    let mut out = Vec::with_capacity(pairs.len());
    for ((f, g), plan) in pairs.iter().zip(plans) {
        let km1 = plan.weight as i32 - 1;
        let mut total = Complex64::new(0.0, 0.0);
        let mut cusps = Vec::with_capacity(plan.cusps.len());
        for cusp in &plan.cusps {
            let a = provider.get(&request(f, cusp, params.digits))?;
            let b = provider.get(&request(g, cusp, params.digits))?;
            let sum: Complex64 =
                (1..=cusp.n_s()).map(|n| a[n] * b[n].conj() * (cusp.s[n] / (n as f64).powi(km1))).sum();
            let contribution = sum * (cusp.datum.h0 as f64 / cusp.width as f64);
            total += contribution;
            cusps.push(CuspContribution {
                cusp: cusp.datum.cusp.to_string(),
                h0: cusp.datum.h0,
                h: cusp.width,
                n_s: cusp.n_s(),
                decay: cusp.decay,
                contribution,
            });
        }
        let vol = volume(plan.level);
        out.push(InnerProductReport {
            schema: SCHEMA,
            kind: "pair",
            forms: vec![f.label.clone(), g.label.clone()],
            level: plan.level,
            weight: plan.weight,
            value: total * (4.0 / vol),
            abs_squared: None,
            digits: params.digits,
            volume: vol,
            cusps,
            expansions: expansions.clone(),
            bessel_evaluations: plan.bessel_evaluations,
            note: None,
        });
    }
    Ok(out)
}

/// `⟨fA, gA⟩ / ⟨fB, gB⟩`, with expansions shared between the two products.
pub fn petersson_ratio(
    fa: &Arc<FormInput>,
    ga: &Arc<FormInput>,
    fb: &Arc<FormInput>,
    gb: &Arc<FormInput>,
    params: &PeterssonParams,
) -> Result<RatioReport, PeterssonError> {
    let mut r = petersson_pairs(&[(fa.clone(), ga.clone()), (fb.clone(), gb.clone())], params)?;
    let denominator = r.pop().expect("two reports");
    let numerator = r.pop().expect("two reports");
    Ok(RatioReport {
        schema: SCHEMA,
        kind: "ratio",
        value: numerator.value / denominator.value,
        numerator,
        denominator,
    })
}

/// `⟨fg, h⟩` for `f` of weight `k`, `g` of weight `m − k` and `h` of weight
/// `m`, at level `lcm(N_f, N_g, N_h)`. When `χ_f·χ_g ≠ χ_h` the product
/// vanishes identically and an exact zero is returned with a note.
pub fn petersson_triple(
    f: &Arc<FormInput>,
    g: &Arc<FormInput>,
    h: &Arc<FormInput>,
    params: &PeterssonParams,
) -> Result<InnerProductReport, PeterssonError> {
    let m = h.weight;
    if f.weight + g.weight != m {
        return Err(PeterssonError::Mismatch(format!(
            "weights {} + {} do not add up to {m}",
            f.weight, g.weight
        )));
    }
    let level = lcm(lcm(f.level, g.level), h.level);
    let (chi_f, chi_g, chi_h) = (character_at(f, level)?, character_at(g, level)?, character_at(h, level)?);
    let forms = vec![f.label.clone(), g.label.clone(), h.label.clone()];
    let vol = volume(level);
    if chi_f.mul(&chi_g) != chi_h {
        return Ok(InnerProductReport {
            schema: SCHEMA,
            kind: "triple",
            forms,
            level,
            weight: m,
            value: Complex64::new(0.0, 0.0),
            abs_squared: Some(0.0),
            digits: params.digits,
            volume: vol,
            cusps: Vec::new(),
            expansions: Vec::new(),
            bessel_evaluations: 0,
            note: Some("χ_f·χ_g ≠ χ_h, so the inner product vanishes".into()),
        });
    }
    let widths = |c: u64| -> Result<u64, CuspError> {
        let a = form_width(level, &chi_f, c)?;
        let b = form_width(level, &chi_g, c)?;
        let d = form_width(level, &chi_h, c)?;
        Ok(lcm(lcm(a, b), d))
    };
    let plan = plan_cusps(level, m, widths, params.digits, params.exec)?;
    let opts = ProviderOptions { method: params.method, seed: params.seed, exec: params.exec };
    let mut provider = ExpansionProvider::new(opts);
    // Errors in the Cauchy product add up over at most n_s terms.
    let product_digits = |cusp: &CuspPlan| params.digits + (cusp.n_s() as f64).log10();
    for cusp in &plan.cusps {
        provider.plan(&request(f, cusp, product_digits(cusp)))?;
        provider.plan(&request(g, cusp, product_digits(cusp)))?;
        provider.plan(&request(h, cusp, params.digits))?;
    }
    provider.compute()?;
    let mm1 = m as i32 - 1;
    let mut total = Complex64::new(0.0, 0.0);
    let mut cusps = Vec::with_capacity(plan.cusps.len());
    for cusp in &plan.cusps {
        let a = provider.get(&request(f, cusp, product_digits(cusp)))?;
        let b = provider.get(&request(g, cusp, product_digits(cusp)))?;
        let c = provider.get(&request(h, cusp, params.digits))?;
        let ns = cusp.n_s();
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 2..=ns {
            let p: Complex64 = (1..n).map(|i| a[i] * b[n - i]).sum();
            sum += p * c[n].conj() * (cusp.s[n] / (n as f64).powi(mm1));
        }
        let contribution = sum * (cusp.datum.h0 as f64 / cusp.width as f64);
        total += contribution;
        cusps.push(CuspContribution {
            cusp: cusp.datum.cusp.to_string(),
            h0: cusp.datum.h0,
            h: cusp.width,
            n_s: ns,
            decay: cusp.decay,
            contribution,
        });
    }
    let value = total * (4.0 / vol);
    Ok(InnerProductReport {
        schema: SCHEMA,
        kind: "triple",
        forms,
        level,
        weight: m,
        value,
        abs_squared: Some(value.norm_sqr()),
        digits: params.digits,
        volume: vol,
        cusps,
        expansions: summaries(&provider),
        bessel_evaluations: plan.bessel_evaluations,
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_10;

    #[test]
    fn volumes() {
        assert!((volume(1) - PI / 3.0).abs() < 1e-15);
        assert!((volume(6) - 4.0 * PI).abs() < 1e-13);
        assert!((volume(11) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn far_terms_vanish() {
        let (k, h, e) = (12, 1, 10.0);
        let eps = 10f64.powf(-e);
        let n = ((LN_10 * e + 50.0) / (4.0 * PI)).powi(2).ceil() as u64 + 1;
        let (s, _) = bessel_weight_sum(k, n, h, eps).unwrap();
        assert!(s.abs() < eps);
    }

    #[test]
    fn decay_envelope_bounds_table() {
        let s: Vec<f64> = std::iter::once(0.0).chain((1..30).map(|n| (-(n as f64).sqrt() * 3.0).exp())).collect();
        let c = decay_envelope(&s);
        for n in 2..s.len() {
            assert!((-c * n as f64).exp() >= s[n] / s[1] * (1.0 - 1e-12));
        }
    }
}
