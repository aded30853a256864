//! Expansions `f|[α_h]_k = Σ bₙqⁿ` at cusps: least squares on the
//! q-series, least squares on a basis of twists, and a slow Fourier-inversion
//! cross-check.

mod basis;
mod oracle;

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{ArithError, DirichletCharacter, IntMatrix2};
use crate::cusps::{transport_equivalent, CuspDatum, CuspError};
use crate::exec::Exec;
use crate::modform::{evaluate_slash_counted, FormInput, ModformError};
use crate::numeric::{lstsq_solve_report, sample_points, ComplexMatrix, NumericError, SampleMode, SampleSpec};

pub use basis::{basis_allowed, enumerate_twist_basis, expand_eigen, EigenExpansion, EigenParams, TwistBasisElement};
pub use oracle::{fourier_oracle, OracleParams, OracleResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpandError {
    #[error(transparent)]
    Modform(#[from] ModformError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Cusp(#[from] CuspError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("oracle did not converge (error bound {bound:.3e})")]
    Oracle { bound: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Eigen,
    Transport,
    /// The expansion at ∞ read off the input.
    Input,
}

/// `|err(bₙ)| ≈ 10^{−digits}·e^{n·decay}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub digits: f64,
    pub decay: f64,
}

impl ErrorModel {
    pub fn bound(&self, n: usize) -> f64 {
        (-self.digits * LN_10 + n as f64 * self.decay).exp()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub b0_magnitude: f64,
    pub residual_norm: f64,
    pub condition: f64,
    pub points: usize,
    /// Smallest and largest number of input coefficients used per point.
    pub min_terms: usize,
    pub max_terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspExpansion {
    pub datum: CuspDatum,
    /// `b₀, …, b_K`.
    pub coeffs: Vec<Complex64>,
    pub error: ErrorModel,
    pub method: Method,
    /// Requested number of coefficients before the budget adjustment.
    pub k0: usize,
    pub diagnostics: Diagnostics,
}

impl CuspExpansion {
    pub fn k(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The input expansion, valid when `datum` is the cusp ∞ with `α₁ ∈ Γ₀(N)`.
    pub fn from_input(f: &FormInput, datum: &CuspDatum, k: usize) -> Result<CuspExpansion, ExpandError> {
        if !datum.alpha1.in_gamma0(datum.level) || datum.h != 1 {
            return Err(ExpandError::Invalid("input expansion only applies at ∞ with α₁ ∈ Γ₀(N)".into()));
        }
        if k > f.n_max() {
            return Err(ModformError::InsufficientCoefficients { needed: k, available: f.n_max() }.into());
        }
        let factor = f.character_at_level().lift(datum.level)?.eval(datum.alpha1.d);
        Ok(CuspExpansion {
            datum: datum.clone(),
            coeffs: f.coeffs[..=k].iter().map(|a| a * factor).collect(),
            error: ErrorModel { digits: 16.0, decay: 0.0 },
            method: Method::Input,
            k0: k,
            diagnostics: Diagnostics::default(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectParams {
    /// `E`: absolute accuracy `10^{−E}`.
    pub digits: f64,
    /// `K₀`: coefficients wanted.
    pub k0: usize,
    /// `C₀`: wanted decay of the error envelope.
    pub decay: f64,
    pub seed: u64,
}

impl DirectParams {
    /// Parameters whose realized error is about `10^{−digits}·e^{nC}`. The
    /// least-squares fit truncates at `K`, so the first omitted term
    /// `b_{K+1}e^{−(K+1)C}` enters every coefficient; `digits` is raised by
    /// `log₁₀` of the growth bound `C_f (K+1)^γ` until `K` settles.
    pub fn tail_compensated(f: &FormInput, digits: f64, k0: usize, decay: f64, seed: u64) -> DirectParams {
        let tail = f.tail();
        let mut run = digits;
        for _ in 0..8 {
            let (k, _) = adjust_budget(run, k0, decay);
            let next = digits + (tail.growth * (k as f64 + 1.0).powf(tail.gamma)).log10().max(0.0);
            if (next - run).abs() < 1e-3 {
                break;
            }
            run = next;
        }
        DirectParams { digits: run, k0, decay, seed }
    }
}

/// `(K, C)` with `K ≥ K₀`, `C ≤ C₀` and `K·C ≈ E·ln 10`: `K` grows when
/// `K₀C₀` falls short, otherwise `C` shrinks.
pub fn adjust_budget(digits: f64, k0: usize, decay: f64) -> (usize, f64) {
    let target = digits * LN_10;
    let k0 = k0.max(1);
    if (k0 as f64) * decay < target {
        ((target / decay).ceil() as usize, decay)
    } else {
        (k0, target / k0 as f64)
    }
}

/// Least squares for the q-series: `M = 2K` points at `Im z = C/2π`,
/// unknowns `b₀..b_K`.
pub fn expand_direct(
    f: &FormInput,
    datum: &CuspDatum,
    params: &DirectParams,
    exec: Exec,
) -> Result<CuspExpansion, ExpandError> {
    if !(params.digits > 0.0 && params.decay > 0.0) {
        return Err(ExpandError::Invalid("digits and decay must be positive".into()));
    }
    let (k, c) = adjust_budget(params.digits, params.k0, params.decay);
    let m = 2 * k;
    let spec = SampleSpec::for_matrix(SampleMode::Direct { decay: c }, m, params.seed, &datum.alpha1, datum.h);
    let points = sample_points(&spec);
    let eps = 10f64.powf(-params.digits) / 10.0;
    let tail = f.tail();
    let values = exec.map(&points, |z| evaluate_slash_counted(&f.coeffs, &tail, f.weight, &datum.alphah, *z, eps));
    let mut rhs = Vec::with_capacity(m);
    let (mut min_terms, mut max_terms) = (usize::MAX, 0);
    for v in values {
        let (value, terms) = v?;
        rhs.push(value);
        min_terms = min_terms.min(terms);
        max_terms = max_terms.max(terms);
    }
    let a = ComplexMatrix::from_fn(m, k + 1, |i, n| (Complex64::new(0.0, 2.0 * PI * n as f64) * points[i]).exp());
    let report = lstsq_solve_report(&a, &rhs, exec)?;
    Ok(CuspExpansion {
        datum: datum.clone(),
        diagnostics: Diagnostics {
            b0_magnitude: report.solution[0].norm(),
            residual_norm: report.residual_norm,
            condition: report.condition,
            points: m,
            min_terms,
            max_terms,
        },
        coeffs: report.solution,
        error: ErrorModel { digits: params.digits, decay: c },
        method: Method::Direct,
        k0: params.k0,
    })
}

/// The expansion at `β′₁τ_h` from the one at `β₁τ_h` for an equivalent
/// matrix `β′₁` (same cusp class and width).
pub fn transport_expansion(
    exp: &CuspExpansion,
    beta1_new: IntMatrix2,
    chi: &DirichletCharacter,
) -> Result<CuspExpansion, ExpandError> {
    let n = exp.datum.level;
    let datum = CuspDatum::with_matrix(n, chi, beta1_new)?;
    if datum.h != exp.datum.h {
        return Err(CuspError::WidthMismatch { native: exp.datum.h, target: datum.h }.into());
    }
    let coeffs = transport_equivalent(&exp.coeffs, &exp.datum.alpha1, &beta1_new, chi, n, datum.h)?;
    Ok(CuspExpansion { datum, coeffs, method: Method::Transport, ..exp.clone() })
}

/// Versioned JSON report of one expansion.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport<'a> {
    pub schema: &'static str,
    pub form: &'a str,
    pub cusp: String,
    pub matrix: IntMatrix2,
    pub h: u64,
    pub h0: u64,
    pub method: Method,
    #[serde(rename = "E")]
    pub digits: f64,
    #[serde(rename = "C")]
    pub decay: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K0")]
    pub k0: usize,
    pub coefficients: &'a [Complex64],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<basis::BasisDescriptor>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_coefficients: Option<&'a [Complex64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negligible: Option<&'a [bool]>,
    pub diagnostics: Diagnostics,
}

impl<'a> ExpansionReport<'a> {
    pub fn new(form: &'a str, exp: &'a CuspExpansion, eigen: Option<&'a EigenExpansion>) -> Self {
        ExpansionReport {
            schema: crate::modform::SCHEMA,
            form,
            cusp: exp.datum.cusp.to_string(),
            matrix: exp.datum.alpha1,
            h: exp.datum.h,
            h0: exp.datum.h0,
            method: exp.method,
            digits: exp.error.digits,
            decay: exp.error.decay,
            k: exp.k(),
            k0: exp.k0,
            coefficients: &exp.coeffs,
            basis: eigen.map(|e| e.basis.iter().map(TwistBasisElement::descriptor).collect()),
            basis_coefficients: eigen.map(|e| e.c.as_slice()),
            negligible: eigen.map(|e| e.negligible.as_slice()),
            diagnostics: exp.diagnostics,
        }
    }
}
