//! Fourier inversion `b_m = e^{2πmy} ∫₀¹ (f|[α_h])(x + iy) e^{−2πimx} dx`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::ExpandError;
use crate::cusps::CuspDatum;
use crate::modform::{evaluate_slash_coeffs, FormInput};
use crate::numeric::composite_nodes;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleParams {
    /// Height of the integration segment.
    pub y: f64,
    /// Approximate number of quadrature nodes on the unit interval.
    pub nodes: usize,
    /// Absolute accuracy of each point value.
    pub eval_eps: f64,
    /// Results with a larger error bound are rejected.
    pub max_error: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams { y: 0.5, nodes: 256, eval_eps: 1e-15, max_error: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: Complex64,
    /// Point-evaluation error plus the difference between a 16-point and an
    /// 8-point composite rule, both amplified by `e^{2πmy}`.
    pub error_bound: f64,
}

pub fn fourier_oracle(
    f: &FormInput,
    datum: &CuspDatum,
    m: usize,
    params: &OracleParams,
) -> Result<OracleResult, ExpandError> {
    if !(params.y > 0.0) || params.nodes == 0 {
        return Err(ExpandError::Invalid("oracle needs y > 0 and at least one node".into()));
    }
    let panels = params.nodes.div_ceil(16);
    let tail = f.tail();
    let integrate = |order: usize| -> Result<Complex64, ExpandError> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (x, w) in composite_nodes(0.0, 1.0, panels, order) {
            let z = Complex64::new(x, params.y);
            let v = evaluate_slash_coeffs(&f.coeffs, &tail, f.weight, &datum.alphah, z, params.eval_eps)?;
            sum += w * v * Complex64::from_polar(1.0, -2.0 * PI * m as f64 * x);
        }
        Ok(sum)
    };
    let fine = integrate(16)?;
    let coarse = integrate(8)?;
    let amplify = (2.0 * PI * m as f64 * params.y).exp();
    let error_bound = amplify * ((fine - coarse).norm() + params.eval_eps);
    if !error_bound.is_finite() || error_bound > params.max_error {
        return Err(ExpandError::Oracle { bound: error_bound });
    }
    Ok(OracleResult { value: fine * amplify, error_bound })
}
