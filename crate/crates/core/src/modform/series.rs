//! Exact coefficient generators: eta quotients, Eisenstein series, level-1
//! newforms and the Hecke recursion.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use super::{FormFlags, FormInput, ModformError};
use crate::arith::{factorize, gcd, lcm, DirichletCharacter};

fn sigma(n: u64, k: u32) -> BigInt {
    let mut s = BigInt::zero();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            s += BigInt::from(d).pow(k);
            if d * d != n {
                s += BigInt::from(n / d).pow(k);
            }
        }
        d += 1;
    }
    s
}

fn smallest_prime_factors(n: usize) -> Vec<u64> {
    let mut spf = vec![0u64; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u64;
                }
                j += i;
            }
        }
    }
    spf
}

pub fn to_complex(v: &[BigInt]) -> Vec<Complex64> {
    v.iter()
        .map(|x| Complex64::new(x.to_f64().unwrap_or(f64::NAN), 0.0))
        .collect()
}

/// Coefficients (index = power of q, `0..=n_max`) of
/// `q^{Σ d·r_d/24}·Π_d Π_n (1 − q^{dn})^{r_d}`.
///
/// Uses the logarithmic derivative `q P′/P = −Σ_d r_d·d·Σ_j σ(j) q^{dj}`,
/// which gives `n·Pₙ = Σ_{i=1}^{n} cᵢ P_{n−i}` in exact integers.
pub fn eta_quotient(spec: &[(u64, i64)], n_max: usize) -> Result<Vec<BigInt>, ModformError> {
    let num: i64 = spec.iter().map(|&(d, r)| d as i64 * r).sum();
    if num % 24 != 0 || num < 0 {
        return Err(ModformError::FractionalOffset { num });
    }
    if spec.iter().any(|&(d, _)| d == 0) {
        return Err(ModformError::Invalid("eta quotient with d = 0".into()));
    }
    let offset = (num / 24) as usize;
    let mut out = vec![BigInt::zero(); n_max + 1];
    if offset > n_max {
        return Ok(out);
    }
    let len = n_max - offset;
    let mut c = vec![0i64; len + 1];
    for &(d, r) in spec {
        let d = d as usize;
        let mut j = 1;
        while d * j <= len {
            let s = sigma(j as u64, 1).to_i64().expect("small");
            c[d * j] -= r * d as i64 * s;
            j += 1;
        }
    }
    let mut p: Vec<BigInt> = Vec::with_capacity(len + 1);
    p.push(BigInt::one());
    for n in 1..=len {
        let mut acc = BigInt::zero();
        for i in 1..=n {
            if c[i] != 0 {
                acc += &p[n - i] * c[i];
            }
        }
        debug_assert!((&acc % n as i64).is_zero());
        p.push(acc / n as i64);
    }
    for (i, v) in p.into_iter().enumerate() {
        out[i + offset] = v;
    }
    Ok(out)
}

/// Level of an eta quotient with trivial character: the least multiple `N`
/// of every `d` with `Σ (N/d)·r_d ≡ 0 (mod 24)`. Quotients whose character
/// is not trivial (odd weight, or `Π d^{r_d}` not a square) are rejected.
pub fn eta_level(spec: &[(u64, i64)]) -> Result<u64, ModformError> {
    if spec.iter().any(|&(d, _)| d == 0) {
        return Err(ModformError::Invalid("eta quotient with d = 0".into()));
    }
    let weight: i64 = spec.iter().map(|&(_, r)| r).sum();
    let mut exps: BTreeMap<u64, i64> = BTreeMap::new();
    for &(d, r) in spec {
        for &(p, e) in factorize(d).iter() {
            *exps.entry(p).or_default() += e as i64 * r;
        }
    }
    if weight % 4 != 0 || exps.values().any(|e| e % 2 != 0) {
        return Err(ModformError::Invalid("eta quotient with nontrivial character".into()));
    }
    let base = spec.iter().fold(1, |l, &(d, _)| lcm(l, d));
    (1..=24)
        .map(|t| base * t)
        .find(|&n| spec.iter().map(|&(d, r)| (n / d) as i64 * r).sum::<i64>() % 24 == 0)
        .ok_or_else(|| ModformError::Invalid("eta quotient is not modular on any Γ₀(N)".into()))
}

/// `E₄ = 1 + 240 Σ σ₃(n) qⁿ` or `E₆ = 1 − 504 Σ σ₅(n) qⁿ`.
pub fn eisenstein(k: u32, n_max: usize) -> Result<Vec<BigInt>, ModformError> {
    let (scale, power) = match k {
        4 => (240i64, 3u32),
        6 => (-504, 5),
        _ => return Err(ModformError::UnsupportedWeight(k)),
    };
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(BigInt::one());
    for n in 1..=n_max {
        out.push(sigma(n as u64, power) * scale);
    }
    Ok(out)
}

fn mul_series(a: &[BigInt], b: &[BigInt], n_max: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n_max + 1];
    for (i, x) in a.iter().enumerate().take(n_max + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n_max + 1 - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Newform coefficients of the shape `(Uₙ ± Vₙ·√D)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPair {
    pub disc: BigInt,
    pub u: Vec<BigInt>,
    pub v: Vec<BigInt>,
}

impl QuadraticPair {
    /// Complex coefficients for the sign `s = ±1`, avoiding cancellation by
    /// computing the smaller conjugate as `(U² − V²D)/(2·(U ∓ V√D))`.
    pub fn embed(&self, sign: i32) -> Vec<Complex64> {
        let sqrt_d = self.disc.to_f64().expect("finite").sqrt();
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| {
                let uf = u.to_f64().unwrap_or(f64::NAN);
                let vf = v.to_f64().unwrap_or(f64::NAN) * sign as f64;
                let val = if uf * vf >= 0.0 {
                    (uf + vf * sqrt_d) / 2.0
                } else {
                    let norm = u * u - v * v * &self.disc;
                    norm.to_f64().unwrap_or(f64::NAN) / (2.0 * (uf - vf * sqrt_d))
                };
                Complex64::new(val, 0.0)
            })
            .collect()
    }
}

fn power(base: &[BigInt], e: u32, n_max: usize) -> Vec<BigInt> {
    let mut acc = vec![BigInt::zero(); n_max + 1];
    acc[0] = BigInt::one();
    for _ in 0..e {
        acc = mul_series(&acc, base, n_max);
    }
    acc
}

/// Basis `Δ^j·E₄^a·E₆^b` (`12j + 4a + 6b = m`, `b ≤ 1`) of `S_m(SL₂(Z))`.
fn level1_basis(m: u32, n_max: usize) -> Result<Vec<Vec<BigInt>>, ModformError> {
    if !matches!(m, 12 | 16 | 18 | 20 | 22 | 24 | 26) {
        return Err(ModformError::UnsupportedWeight(m));
    }
    let delta = eta_quotient(&[(1, 24)], n_max)?;
    let e4 = eisenstein(4, n_max)?;
    let e6 = eisenstein(6, n_max)?;
    let mut basis = Vec::new();
    let mut j = 1;
    while 12 * j <= m {
        let rest = m - 12 * j;
        if rest == 2 {
            break;
        }
        let (a, b) = if rest % 4 == 0 { (rest / 4, 0) } else { ((rest - 6) / 4, 1) };
        let mut s = power(&delta, j, n_max);
        s = mul_series(&s, &power(&e4, a, n_max), n_max);
        if b == 1 {
            s = mul_series(&s, &e6, n_max);
        }
        basis.push(s);
        j += 1;
    }
    Ok(basis)
}

/// Exact data for the two conjugate weight-`m` newforms when
/// `dim S_m(SL₂(Z)) = 2`, `None` in dimension 1.
pub fn level1_quadratic(m: u32, n_max: usize) -> Result<Option<QuadraticPair>, ModformError> {
    let n_max = n_max.max(4);
    let basis = level1_basis(m, n_max)?;
    if basis.len() == 1 {
        return Ok(None);
    }
    if basis.len() != 2 {
        return Err(ModformError::UnsupportedWeight(m));
    }
    let (b1, b2) = (&basis[0], &basis[1]);
    let p = BigInt::from(2).pow(m - 1);
    // T₂ on a series: a_n ↦ a_{2n} + 2^{m−1} a_{n/2}.
    let t2 = |s: &[BigInt], n: usize| -> BigInt {
        let mut v = s[2 * n].clone();
        if n % 2 == 0 {
            v += &p * &s[n / 2];
        }
        v
    };
    // Matrix of T₂ in the triangular basis (B₁ = q + …, B₂ = q² + …).
    let col = |s: &[BigInt]| -> (BigInt, BigInt) {
        let c1 = t2(s, 1);
        let c2 = t2(s, 2) - &c1 * &b1[2];
        (c1, c2)
    };
    let (m11, m21) = col(b1);
    let (m12, m22) = col(b2);
    let tr = &m11 + &m22;
    let det = &m11 * &m22 - &m12 * &m21;
    let disc = &tr * &tr - det * 4;
    let shift = &tr - &b1[2] * 2;
    let u = (0..=n_max).map(|n| &b1[n] * 2 + &shift * &b2[n]).collect();
    let v = b2.clone();
    Ok(Some(QuadraticPair { disc, u, v }))
}

/// Normalized Hecke eigenforms of weight `m` and level 1. In dimension 2 the
/// form with `a₂ = (tr − √D)/2` comes first.
pub fn level1_newforms(m: u32, n_max: usize) -> Result<Vec<FormInput>, ModformError> {
    let flags = FormFlags { is_newform: true, prime_to_n_eigenform: true, twist_minimal: true };
    let triv = DirichletCharacter::trivial(1);
    match level1_quadratic(m, n_max)? {
        None => {
            let basis = level1_basis(m, n_max)?;
            let f = FormInput::new(format!("level1_wt{m}"), m, 1, triv, to_complex(&basis[0]), flags)?;
            Ok(vec![f])
        }
        Some(pair) => {
            let mut out = Vec::new();
            for (i, sign) in [-1, 1].into_iter().enumerate() {
                let mut c = pair.embed(sign);
                c.truncate(n_max + 1);
                c[0] = Complex64::new(0.0, 0.0);
                out.push(FormInput::new(format!("level1_wt{m}_{i}"), m, 1, triv.clone(), c, flags)?);
            }
            Ok(out)
        }
    }
}

/// Multiplicative extension from prime coefficients (complex version):
/// `a_{mn} = a_m a_n` for coprime `m, n` and
/// `a_{p^{r+1}} = a_p a_{p^r} − χ(p) p^{k−1} a_{p^{r−1}}`, with `χ` given
/// modulo the level (so `χ(p) = 0` for `p | N`).
pub fn hecke_extend(
    primes: &BTreeMap<u64, Complex64>,
    k: u32,
    chi: &DirichletCharacter,
    n_max: usize,
) -> Result<Vec<Complex64>, ModformError> {
    let spf = smallest_prime_factors(n_max);
    let mut a = vec![Complex64::new(0.0, 0.0); n_max + 1];
    if n_max >= 1 {
        a[1] = Complex64::new(1.0, 0.0);
    }
    for n in 2..=n_max {
        let p = spf[n] as usize;
        let mut pe = p;
        while n % (pe * p) == 0 {
            pe *= p;
        }
        a[n] = if pe == n {
            let ap = *primes.get(&(p as u64)).ok_or(ModformError::MissingPrime(p as u64))?;
            if n == p {
                ap
            } else {
                let pk = chi.eval(p as i64) * (p as f64).powi(k as i32 - 1);
                ap * a[n / p] - pk * a[n / p / p]
            }
        } else {
            a[pe] * a[n / pe]
        };
    }
    Ok(a)
}

/// Exact integer version of [`hecke_extend`] for trivial character of the
/// given level.
pub fn hecke_extend_exact(
    primes: &BTreeMap<u64, BigInt>,
    k: u32,
    level: u64,
    n_max: usize,
) -> Result<Vec<BigInt>, ModformError> {
    let spf = smallest_prime_factors(n_max);
    let mut a = vec![BigInt::zero(); n_max + 1];
    if n_max >= 1 {
        a[1] = BigInt::one();
    }
    for n in 2..=n_max {
        let p = spf[n] as usize;
        let mut pe = p;
        while n % (pe * p) == 0 {
            pe *= p;
        }
        a[n] = if pe == n {
            let ap = primes.get(&(p as u64)).ok_or(ModformError::MissingPrime(p as u64))?;
            if n == p {
                ap.clone()
            } else if gcd(p as u64, level) != 1 {
                ap * &a[n / p]
            } else {
                ap * &a[n / p] - BigInt::from(p).pow(k - 1) * &a[n / p / p]
            }
        } else {
            &a[pe] * &a[n / pe]
        };
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_and_level6_eta() {
        let d = eta_quotient(&[(1, 24)], 6).unwrap();
        let expect: Vec<BigInt> = [0, 1, -24, 252, -1472, 4830, -6048].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(d, expect);
        let f = eta_quotient(&[(1, 2), (2, 2), (3, 2), (6, 2)], 8).unwrap();
        let expect: Vec<BigInt> = [0, 1, -2, -3, 4, 6, 6, -16, -8].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(f, expect);
        let one = eta_quotient(&[], 3).unwrap();
        assert_eq!(one[0], BigInt::one());
        assert!(one[1..].iter().all(Zero::is_zero));
        assert!(eta_quotient(&[(1, 1)], 3).is_err());
    }

    #[test]
    fn eisenstein_values() {
        let e4 = eisenstein(4, 3).unwrap();
        assert_eq!(e4[0], BigInt::one());
        assert_eq!(e4[2], BigInt::from(2160));
        let e6 = eisenstein(6, 3).unwrap();
        assert_eq!(e6[1], BigInt::from(-504));
        assert!(eisenstein(8, 3).is_err());
    }

    #[test]
    fn level1_examples() {
        let d = &level1_newforms(12, 10).unwrap()[0];
        assert_eq!(d.coeff(2), Complex64::new(-24.0, 0.0));
        let h18 = &level1_newforms(18, 10).unwrap()[0];
        assert_eq!(h18.coeff(2).re, -528.0);
        assert_eq!(h18.coeff(3).re, -4284.0);
        let h16 = &level1_newforms(16, 10).unwrap()[0];
        assert_eq!((h16.coeff(2).re, h16.coeff(3).re), (216.0, -3348.0));
        let pair = level1_quadratic(24, 10).unwrap().unwrap();
        assert_eq!(pair.u[2], BigInt::from(1080));
        let prod = (&pair.u[2] * &pair.u[2] - &pair.v[2] * &pair.v[2] * &pair.disc) / 4;
        assert_eq!(prod, BigInt::from(291600) - BigInt::from(144) * 144169);
        let forms = level1_newforms(24, 10).unwrap();
        let a2 = 540.0 - 12.0 * 144169f64.sqrt();
        assert!((forms[0].coeff(2).re - a2).abs() < 1e-9);
        assert!(level1_newforms(14, 10).is_err());
    }

    #[test]
    fn hecke_small() {
        let mut primes = BTreeMap::new();
        for (p, t) in [(2u64, -24i64), (3, 252), (5, 4830)] {
            primes.insert(p, BigInt::from(t));
        }
        let a = hecke_extend_exact(&primes, 12, 1, 6).unwrap();
        assert_eq!(a[4], BigInt::from(-1472));
        assert_eq!(a[6], BigInt::from(-6048));
        assert_eq!(a[1], BigInt::one());
        primes.remove(&5);
        assert_eq!(hecke_extend_exact(&primes, 12, 1, 6), Err(ModformError::MissingPrime(5)));
    }
}
