//! Closed-form constants relating Petersson norms and triple products to
//! L-values, and the check of a computed value against a supplied L-value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Local factor `(*)_p` in `L(ad f, 1) = π²/6·(4π)^k/(k−1)!·⟨f,f⟩·Π (*)_p`,
/// tagged by the local representation of the twist-minimal form at `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum AdjointLocal {
    /// `p` does not divide the minimal level but divides `N`; `l_p` is
    /// `L_p(ad f, 1)`.
    UnramifiedNotMinimal { p: u64, l_p: f64 },
    SpecialMinimal { p: u64 },
    SpecialNonMinimal { p: u64 },
    PrincipalMinimal { p: u64 },
    PrincipalNonMinimal { p: u64 },
    /// Supercuspidal and isomorphic to its unramified quadratic twist.
    SupercuspidalEtaInvariant { p: u64 },
    Supercuspidal { p: u64 },
}

impl AdjointLocal {
    pub fn factor(&self) -> f64 {
        let inv = |p: u64| 1.0 / p as f64;
        match *self {
            AdjointLocal::UnramifiedNotMinimal { p, l_p } => (1.0 + inv(p)) * l_p,
            AdjointLocal::SpecialMinimal { p } | AdjointLocal::PrincipalMinimal { p } | AdjointLocal::Supercuspidal { p } => {
                1.0 + inv(p)
            }
            AdjointLocal::SpecialNonMinimal { p } => (1.0 + inv(p)) / (1.0 - inv(p) * inv(p)),
            AdjointLocal::PrincipalNonMinimal { p } => (1.0 + inv(p)) / (1.0 - inv(p)),
            AdjointLocal::SupercuspidalEtaInvariant { .. } => 1.0,
        }
    }
}

/// `L(ad f, 1)/⟨f, f⟩` for a weight-`k` newform.
pub fn adjoint_constant(k: u32, factors: &[AdjointLocal]) -> f64 {
    let log = 2.0 * PI.ln() - 6f64.ln() + k as f64 * (4.0 * PI).ln() - ln_factorial(k as u64 - 1);
    log.exp() * factors.iter().map(AdjointLocal::factor).product::<f64>()
}

/// Normalized Ichino local integral `I_p**` at a bad prime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum IchinoLocal {
    OneSpecialTwoUnramified { p: u64 },
    TwoPrincipalOneUnramified { p: u64 },
    TwoSpecialOneUnramified { p: u64 },
    /// `epsilon = −αβγ/p^{m−2}` from the three `p`-th coefficients.
    ThreeSpecial { p: u64, epsilon: f64 },
    TwoPrincipalOneSpecial { p: u64 },
    ThreePrincipal { p: u64 },
    /// One representation of conductor `p^c`, `c ≥ 2`, two unramified.
    HighConductor { p: u64, c: u32 },
    /// Two copies of a supercuspidal of conductor `p^c` that is invariant
    /// under the unramified quadratic twist, and one unramified
    /// representation with `s1 = α + α^{−1}`.
    NpsType1 { p: u64, c: u32, s1: f64 },
}

impl IchinoLocal {
    pub fn factor(&self) -> f64 {
        let base = |p: u64, c: u32| {
            let p = p as f64;
            p.powi(-(c as i32)) / ((1.0 + 1.0 / p) * (1.0 + 1.0 / p))
        };
        match *self {
            IchinoLocal::OneSpecialTwoUnramified { p }
            | IchinoLocal::TwoPrincipalOneUnramified { p }
            | IchinoLocal::TwoSpecialOneUnramified { p }
            | IchinoLocal::TwoPrincipalOneSpecial { p }
            | IchinoLocal::ThreePrincipal { p } => base(p, 1),
            IchinoLocal::ThreeSpecial { p, epsilon } => (1.0 - epsilon) * base(p, 1),
            IchinoLocal::HighConductor { p, c } => base(p, c),
            IchinoLocal::NpsType1 { p, c, s1 } => base(p, c) * nps_factor(p, c, s1),
        }
    }
}

/// `((α^{c/2+1} − α^{−c/2−1}) − p^{−1}(α^{c/2−1} − α^{−c/2+1}))² / (α − α^{−1})²`
/// through `Uⱼ(s₁) = (α^{j+1} − α^{−j−1})/(α − α^{−1})`, with
/// `U_{−1} = 0`, `U₀ = 1`, `U_{j+1} = s₁Uⱼ − U_{j−1}`.
pub fn nps_factor(p: u64, c: u32, s1: f64) -> f64 {
    let half = (c / 2) as usize;
    let mut u = vec![1.0, s1];
    while u.len() <= half {
        let j = u.len() - 1;
        u.push(s1 * u[j] - u[j - 1]);
    }
    let lower = if half >= 2 { u[half - 2] } else { 0.0 };
    let v = u[half] - lower / p as f64;
    v * v
}

/// `9·(m−2)!(k−1)!(m−k−1)! / (π^{2m+2}·2^{4m−2}·M_f^k·M_g^{m−k}·M_h^m)`.
pub fn ichino_base(k: u32, m: u32, m_f: u64, m_g: u64, m_h: u64) -> f64 {
    let (kf, mf) = (k as f64, m as f64);
    let log = 9f64.ln() + ln_factorial(m as u64 - 2) + ln_factorial(k as u64 - 1) + ln_factorial((m - k - 1) as u64)
        - (2.0 * mf + 2.0) * PI.ln()
        - (4.0 * mf - 2.0) * 2f64.ln()
        - kf * (m_f as f64).ln()
        - (mf - kf) * (m_g as f64).ln()
        - mf * (m_h as f64).ln();
    log.exp()
}

/// `|⟨f_{M_f} g_{M_g}, h_{M_h}⟩|² / L(f×g×h̄, m−1)`.
pub fn ichino_constant(k: u32, m: u32, m_f: u64, m_g: u64, m_h: u64, factors: &[IchinoLocal]) -> f64 {
    ichino_base(k, m, m_f, m_g, m_h) * factors.iter().map(IchinoLocal::factor).product::<f64>()
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// A constant together with the data it is computed from, as read from a
/// local-factor file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LocalFactorSpec {
    Adjoint {
        weight: u32,
        #[serde(default)]
        factors: Vec<AdjointLocal>,
    },
    Ichino {
        k: u32,
        m: u32,
        #[serde(default = "one")]
        m_f: u64,
        #[serde(default = "one")]
        m_g: u64,
        #[serde(default = "one")]
        m_h: u64,
        #[serde(default)]
        factors: Vec<IchinoLocal>,
    },
}

fn one() -> u64 {
    1
}

impl LocalFactorSpec {
    pub fn constant(&self) -> f64 {
        match self {
            LocalFactorSpec::Adjoint { weight, factors } => adjoint_constant(*weight, factors),
            LocalFactorSpec::Ichino { k, m, m_f, m_g, m_h, factors } => ichino_constant(*k, *m, *m_f, *m_g, *m_h, factors),
        }
    }

    /// How the constant links the computed value to the L-value.
    pub fn relation(&self) -> Relation {
        match self {
            LocalFactorSpec::Adjoint { .. } => Relation::Quotient,
            LocalFactorSpec::Ichino { .. } => Relation::Product,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `value = constant·L`.
    Product,
    /// `L/value = constant`.
    Quotient,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub value: f64,
    pub l_value: f64,
    pub constant: f64,
    pub relation: Relation,
    /// The value predicted from `L` and the constant.
    pub predicted: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative deviation `|value/predicted − 1|` against `tolerance`.
pub fn ratio_check(value: f64, l_value: f64, constant: f64, relation: Relation, tolerance: f64) -> RatioCheck {
    let predicted = match relation {
        Relation::Product => constant * l_value,
        Relation::Quotient => l_value / constant,
    };
    let deviation = (value / predicted - 1.0).abs();
    RatioCheck {
        value,
        l_value,
        constant,
        relation,
        predicted,
        deviation,
        tolerance,
        pass: deviation.is_finite() && deviation <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn adjoint_level_one() {
        assert!(rel(adjoint_constant(12, &[]), 639015.136088) < 1e-10);
    }

    #[test]
    fn exact_agreement_has_zero_deviation() {
        let r = ratio_check(6.0, 2.0, 3.0, Relation::Product, 1e-12);
        assert_eq!(r.deviation, 0.0);
        assert!(r.pass);
        let r = ratio_check(6.0, 2.0, 3.0 * 1.01, Relation::Product, 1e-6);
        assert!(!r.pass);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = LocalFactorSpec::Ichino {
            k: 8,
            m: 16,
            m_f: 1,
            m_g: 1,
            m_h: 1,
            factors: vec![IchinoLocal::NpsType1 { p: 3, c: 2, s1: 3348.0 / 3f64.powf(7.5) }],
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: LocalFactorSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
