//! Modified Bessel functions of the second kind `K_n(x)` for integer `n`.
//!
//! `K₀` and `K₁` come from the power series for `x ≤ 2`, Temme's continued
//! fraction (Steed's method) for `2 < x < 30`, and the asymptotic expansion
//! beyond that, falling back to the continued fraction if the asymptotic
//! terms stop shrinking before reaching tolerance. Higher orders use the
//! upward recurrence `K_{n+1} = K_{n−1} + (2n/x)·K_n`, which is stable for K.
//!
//! Everything is computed in the exponentially scaled form `e^x·K_n(x)`, so
//! large arguments underflow only at the final rescaling.

use super::NumericError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ASYMPTOTIC_FROM: f64 = 30.0;

fn check_arg(x: f64) -> Result<(), NumericError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(NumericError::InvalidArgument(format!("Bessel K needs x > 0, got {x}")))
    }
}

/// `(e^x K₀(x), e^x K₁(x))` via the power series, for small `x`.
fn k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();
    // K0 = −(ln(x/2) + γ)·I0 + Σ_{k≥1} y^k/(k!)² H_k
    // K1 = 1/x + ln(x/2)·I1 − (x/4) Σ_{k≥0} (ψ(k+1) + ψ(k+2)) y^k/(k!(k+1)!)
    let mut i0 = 0.0;
    let mut s0 = 0.0;
    let mut i1_sum = 0.0;
    let mut s1 = 0.0;
    let mut t0 = 1.0; // y^k/(k!)²
    let mut t1 = 1.0; // y^k/(k!(k+1)!)
    let mut harmonic = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            harmonic += 1.0 / kf;
            t0 *= y / (kf * kf);
            t1 *= y / (kf * (kf + 1.0));
        }
        i0 += t0;
        s0 += t0 * harmonic;
        i1_sum += t1;
        let psi_sum = 2.0 * (-EULER_GAMMA) + harmonic + (harmonic + 1.0 / (kf + 1.0));
        s1 += t1 * psi_sum;
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1_sum {
            break;
        }
    }
    let k0 = -(ln_half + EULER_GAMMA) * i0 + s0;
    let i1 = 0.5 * x * i1_sum;
    let k1 = 1.0 / x + ln_half * i1 - 0.25 * x * s1;
    let scale = x.exp();
    (k0 * scale, k1 * scale)
}

/// `(e^x K₀(x), e^x K₁(x))` by Temme's continued fraction, valid for `x ≳ 2`.
fn k01_continued_fraction(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..100_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Asymptotic series for `e^x K_ν(x)`, `None` if the terms stall.
fn k_asymptotic(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if next.abs() > term.abs() {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            return Some(sum * (std::f64::consts::PI / (2.0 * x)).sqrt());
        }
    }
    None
}

fn k01_scaled(x: f64) -> (f64, f64) {
    if x <= 2.0 {
        k01_series(x)
    } else if x < ASYMPTOTIC_FROM {
        k01_continued_fraction(x)
    } else {
        match (k_asymptotic(0.0, x), k_asymptotic(1.0, x)) {
            (Some(k0), Some(k1)) => (k0, k1),
            _ => k01_continued_fraction(x),
        }
    }
}

/// `e^x·K_j(x)` for `j = 0..=n_max`.
pub fn bessel_k_scaled_seq(n_max: u32, x: f64) -> Result<Vec<f64>, NumericError> {
    check_arg(x)?;
    let (k0, k1) = k01_scaled(x);
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(k0);
    if n_max >= 1 {
        out.push(k1);
    }
    for j in 1..n_max as usize {
        let next = out[j - 1] + 2.0 * j as f64 / x * out[j];
        out.push(next);
    }
    Ok(out)
}

/// `e^x·K_n(x)`.
pub fn bessel_k_scaled(n: u32, x: f64) -> Result<f64, NumericError> {
    Ok(bessel_k_scaled_seq(n, x)?[n as usize])
}

/// `K_n(x)`; underflows to 0 for very large `x`.
pub fn bessel_k(n: u32, x: f64) -> Result<f64, NumericError> {
    let scaled = bessel_k_scaled(n, x)?;
    if scaled.is_infinite() {
        return Ok(scaled);
    }
    Ok(scaled * (-x).exp())
}
