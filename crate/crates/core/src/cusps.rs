//! Cusps of Γ₀(N), their widths, the matrices that move them to ∞, and the
//! transport of expansions between equivalent matrices and along degeneracy
//! maps `f(z) ↦ f(mz)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    divisors, euler_phi, ext_gcd, gcd, mod_inv, prime_to_part, root_of_unity, ArithError,
    DirichletCharacter, IntMatrix2, Phase,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CuspError {
    #[error("{c} does not divide the level {n}")]
    NotDivisor { c: u64, n: u64 },
    #[error("gcd({a}, {c}) != 1")]
    NotReduced { a: i64, c: u64 },
    #[error("{0} and {1} do not map ∞ to Γ₀({2})-equivalent cusps (or the width is inconsistent)")]
    NotEquivalent(IntMatrix2, IntMatrix2, u64),
    #[error("width {target} is not a multiple of {native}")]
    WidthMismatch { native: u64, target: u64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Cusp `a/c` of Γ₀(N); `c = N` is the class of ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cusp {
    pub a: i64,
    pub c: u64,
}

impl std::fmt::Display for Cusp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.a, self.c)
    }
}

impl std::str::FromStr for Cusp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, c) = s.split_once('/').ok_or_else(|| format!("cusp '{s}' is not of the form a/c"))?;
        let a = a.trim().parse::<i64>().map_err(|e| e.to_string())?;
        let c = c.trim().parse::<u64>().map_err(|e| e.to_string())?;
        Ok(Cusp { a, c })
    }
}

/// One representative per Γ₀(N)-class: for each `c | N` (ascending) and each
/// residue `r` mod `gcd(c, N/c)` coprime to it, the least `a ≥ 0` with
/// `a ≡ r` and `gcd(a, c) = 1`.
pub fn enumerate_cusps(n: u64) -> Vec<Cusp> {
    let mut out = Vec::new();
    for c in divisors(n) {
        let g = gcd(c, n / c);
        for r in 0..g {
            if gcd(r, g) != 1 {
                continue;
            }
            let mut a = r;
            while gcd(a, c) != 1 {
                a += g;
            }
            out.push(Cusp { a: a as i64, c });
        }
    }
    out
}

/// Number of cusps, `Σ_{c | N} φ(gcd(c, N/c))`.
pub fn cusp_count(n: u64) -> usize {
    divisors(n).iter().map(|&c| euler_phi(gcd(c, n / c)) as usize).sum()
}

/// Width of the cusp with denominator `c` for Γ₀(N): `N / gcd(c², N)`.
pub fn width_gamma0(n: u64, c: u64) -> Result<u64, CuspError> {
    if c == 0 || n % c != 0 {
        return Err(CuspError::NotDivisor { c, n });
    }
    Ok(n / gcd((c as u128 * c as u128 % n as u128) as u64, n))
}

/// Smallest `h | N/c` with `N | c²h` and `χ` trivial on `1 + chZ` mod `N`.
pub fn form_width(n: u64, chi: &DirichletCharacter, c: u64) -> Result<u64, CuspError> {
    let h0 = width_gamma0(n, c)?;
    let chi = chi.lift(n)?;
    for h in divisors(n / c) {
        if h % h0 != 0 {
            continue;
        }
        let step = c * h % n;
        let trivial = step == 0
            || (0..n / gcd(step, n)).all(|j| {
                let x = (1 + j as u128 * step as u128) % n as u128;
                chi.phase(x as i64) == Some(Phase::ONE)
            });
        if trivial {
            return Ok(h);
        }
    }
    Ok(n / c)
}

/// Completes `a/c` to `[[a, b], [c, d]] ∈ SL₂(Z)` with `d ≡ 0` modulo the
/// prime-to-`c` part of `N`, taking the least `|d|` (ties to positive).
pub fn choose_matrix(cusp: Cusp, n: u64) -> Result<IntMatrix2, CuspError> {
    let (a, c) = (cusp.a, cusp.c);
    if c == 0 || gcd(a.unsigned_abs(), c) != 1 {
        return Err(CuspError::NotReduced { a, c });
    }
    let d0 = prime_to_part(n, c);
    // d ≡ a^{-1} (mod c), d ≡ 0 (mod d0).
    let ainv = mod_inv(a, c).ok_or(CuspError::NotReduced { a, c })? as i128;
    let modulus = c as i128 * d0 as i128;
    let d0inv = mod_inv((d0 % c) as i64, c).expect("d0 is prime to c") as i128;
    let d = (d0 as i128 * ((ainv * d0inv) % c as i128)).rem_euclid(modulus);
    let d = if 2 * d > modulus { d - modulus } else { d };
    let d = d as i64;
    let b = (a as i128 * d as i128 - 1) / c as i128;
    let m = IntMatrix2::new(a, b as i64, c as i64, d);
    debug_assert_eq!(m.det(), 1);
    Ok(m)
}

/// Everything needed to expand at one cusp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspDatum {
    pub level: u64,
    pub cusp: Cusp,
    /// Width for Γ₀(N).
    pub h0: u64,
    /// Width once the character is taken into account.
    pub h: u64,
    pub alpha1: IntMatrix2,
    pub alphah: IntMatrix2,
    pub hc: u64,
    pub hd: u64,
    /// Whether `alpha1.d` is divisible by the prime-to-`c` part of `N`, the
    /// hypothesis under which the twist basis may be pruned.
    pub refined: bool,
}

impl CuspDatum {
    pub fn new(n: u64, chi: &DirichletCharacter, cusp: Cusp) -> Result<CuspDatum, CuspError> {
        let alpha1 = choose_matrix(cusp, n)?;
        CuspDatum::with_matrix(n, chi, alpha1)
    }

    /// Datum for an explicit `α₁ ∈ SL₂(Z)`.
    pub fn with_matrix(
        n: u64,
        chi: &DirichletCharacter,
        alpha1: IntMatrix2,
    ) -> Result<CuspDatum, CuspError> {
        if !alpha1.is_sl2() {
            return Err(ArithError::NotSl2(alpha1).into());
        }
        let c_eff = gcd(alpha1.c.unsigned_abs(), n);
        let c_eff = if c_eff == 0 { n } else { c_eff };
        let h0 = width_gamma0(n, c_eff)?;
        let h = form_width(n, chi, c_eff)?;
        let c0 = n / prime_to_part(n, c_eff);
        let hd = prime_to_part(h, c0);
        let hc = h / hd;
        let d0 = prime_to_part(n, c_eff);
        let cusp = Cusp { a: alpha1.a, c: alpha1.c.unsigned_abs() };
        Ok(CuspDatum {
            level: n,
            cusp,
            h0,
            h,
            alpha1,
            alphah: alpha1.mul(&IntMatrix2::scaling(h as i64)),
            hc,
            hd,
            refined: alpha1.d.rem_euclid(d0 as i64) == 0,
        })
    }

    /// All cusps of Γ₀(N) with their chosen matrices.
    pub fn all(n: u64, chi: &DirichletCharacter) -> Result<Vec<CuspDatum>, CuspError> {
        enumerate_cusps(n).into_iter().map(|s| CuspDatum::new(n, chi, s)).collect()
    }

    pub fn is_infinity(&self) -> bool {
        self.alpha1.c.rem_euclid(self.level as i64) == 0
    }
}

/// Relation `β′₁ = γ·β₁·δ_x` with `γ ∈ Γ₀(N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Equivalence {
    pub x: i64,
    pub gamma: IntMatrix2,
}

/// Finds the smallest `x ∈ [0, bound)` with `β′₁ δ_{−x} β₁^{−1} ∈ Γ₀(N)`,
/// verified by direct integer computation.
pub fn find_equivalence(
    n: u64,
    beta1: &IntMatrix2,
    beta1_new: &IntMatrix2,
    bound: u64,
) -> Result<Equivalence, CuspError> {
    let inv = beta1.inverse_sl2()?;
    if !beta1_new.is_sl2() {
        return Err(ArithError::NotSl2(*beta1_new).into());
    }
    for x in 0..bound as i64 {
        let gamma = beta1_new.mul(&IntMatrix2::translation(-x)).mul(&inv);
        if gamma.in_gamma0(n) {
            return Ok(Equivalence { x, gamma });
        }
    }
    Err(CuspError::NotEquivalent(*beta1, *beta1_new, n))
}

/// Index into `enumerate_cusps(n)` of the class of the cusp `α(∞)`.
pub fn cusp_class(n: u64, alpha: &IntMatrix2) -> Result<usize, CuspError> {
    for (i, s) in enumerate_cusps(n).into_iter().enumerate() {
        let beta = choose_matrix(s, n)?;
        if find_equivalence(n, &beta, alpha, n).is_ok() {
            return Ok(i);
        }
    }
    Err(CuspError::NotEquivalent(IntMatrix2::IDENTITY, *alpha, n))
}

/// Completes `a/c` (coprime) to some matrix of SL₂(Z).
pub fn complete_to_sl2(a: i64, c: i64) -> Result<IntMatrix2, CuspError> {
    let (g, x, y) = ext_gcd(a, c)?;
    if g != 1 {
        return Err(CuspError::NotReduced { a, c: c.unsigned_abs() });
    }
    // a·x + c·y = 1  ⇒  [[a, −y], [c, x]].
    Ok(IntMatrix2::new(a, -y, c, x))
}

/// Given `f|[β₁τ_h] = Σ bₙqⁿ`, returns the coefficients of `f|[β′₁τ_h]`:
/// `χ(d_γ)·e^{2πinx/h}·bₙ`.
pub fn transport_equivalent(
    coeffs: &[Complex64],
    beta1: &IntMatrix2,
    beta1_new: &IntMatrix2,
    chi: &DirichletCharacter,
    n: u64,
    h: u64,
) -> Result<Vec<Complex64>, CuspError> {
    let eq = find_equivalence(n, beta1, beta1_new, n * h)?;
    let chi = chi.lift(n)?;
    let factor = chi.eval(eq.gamma.d);
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(k, &b)| b * factor * root_of_unity((k as i64 % h as i64) * eq.x % h as i64, h))
        .collect())
}

/// Decomposition `[[m, 0], [0, 1]]·α₁ = A″·[[m₁, y], [0, m₂]]` with
/// `A″ ∈ SL₂(Z)`, so that `f(mz)|[α₁] = m^{−k/2}·(f|[A″])|[[m₁, y], [0, m₂]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Degeneracy {
    pub m: u64,
    pub m1: u64,
    pub m2: u64,
    pub y: i64,
    pub inner: IntMatrix2,
}

impl Degeneracy {
    /// Inner cusp `(a·m₂)/(c/m₁)` for Γ₀(N).
    pub fn inner_cusp(&self) -> Cusp {
        Cusp { a: self.inner.a, c: self.inner.c.unsigned_abs() }
    }

    pub fn upper(&self) -> IntMatrix2 {
        IntMatrix2::new(self.m1 as i64, self.y, 0, self.m2 as i64)
    }

    /// `A″·[[1, 0], [0, m₂]]·[[1, y], [0, 1]]·[[m₁, 0], [0, 1]]`.
    pub fn recompose(&self) -> IntMatrix2 {
        self.inner
            .mul(&IntMatrix2::new(1, 0, 0, self.m2 as i64))
            .mul(&IntMatrix2::translation(self.y))
            .mul(&IntMatrix2::scaling(self.m1 as i64))
    }

    /// Scale `m^{−k/2}`.
    pub fn scale(&self, k: u32) -> f64 {
        (self.m as f64).powf(-(k as f64) / 2.0)
    }
}

pub fn transport_degeneracy(m: u64, alpha1: &IntMatrix2) -> Result<Degeneracy, CuspError> {
    if !alpha1.is_sl2() {
        return Err(ArithError::NotSl2(*alpha1).into());
    }
    let IntMatrix2 { a, b, c, d } = *alpha1;
    let m1 = gcd(c.unsigned_abs(), m);
    let m1 = if m1 == 0 { m } else { m1 };
    let m2 = m / m1;
    let c1 = c / m1 as i64;
    let y = if m2 == 1 {
        0
    } else {
        let inv = mod_inv(c1, m2).expect("c/m1 is prime to m2") as i128;
        (d as i128 * inv).rem_euclid(m2 as i128) as i64
    };
    let inner = IntMatrix2::new(
        a * m2 as i64,
        b * m1 as i64 - y * a,
        c1,
        (d - y * c1) / m2 as i64,
    );
    debug_assert_eq!(inner.det(), 1);
    Ok(Degeneracy { m, m1, m2, y, inner })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cusp_lists() {
        assert_eq!(enumerate_cusps(1).len(), 1);
        assert_eq!(enumerate_cusps(6).len(), 4);
        assert_eq!(enumerate_cusps(25).len(), 6);
        let c27: Vec<String> = enumerate_cusps(27).iter().map(|s| s.to_string()).collect();
        assert_eq!(c27, ["0/1", "1/3", "2/3", "1/9", "2/9", "1/27"]);
    }

    #[test]
    fn widths() {
        assert_eq!(width_gamma0(6, 3).unwrap(), 2);
        assert_eq!(width_gamma0(27, 3).unwrap(), 3);
        assert_eq!(width_gamma0(97, 97).unwrap(), 1);
        assert!(width_gamma0(6, 4).is_err());
        let triv = DirichletCharacter::trivial(25);
        assert_eq!(form_width(25, &triv, 5).unwrap(), 1);
        let quartic = DirichletCharacter::from_exponents(5, vec![vec![1]]).unwrap();
        assert_eq!(form_width(5, &quartic, 1).unwrap(), 5);
    }

    #[test]
    fn chosen_matrices() {
        assert_eq!(choose_matrix(Cusp { a: 0, c: 1 }, 11).unwrap(), IntMatrix2::new(0, -1, 1, 0));
        assert_eq!(choose_matrix(Cusp { a: 1, c: 3 }, 6).unwrap(), IntMatrix2::new(1, -1, 3, -2));
        assert_eq!(choose_matrix(Cusp { a: 1, c: 9 }, 9).unwrap(), IntMatrix2::new(1, 0, 9, 1));
    }

    #[test]
    fn degeneracy_examples() {
        let alpha = choose_matrix(Cusp { a: 0, c: 1 }, 11).unwrap();
        let deg = transport_degeneracy(11, &alpha).unwrap();
        assert_eq!((deg.m1, deg.m2), (1, 11));
        assert_eq!(deg.recompose(), IntMatrix2::new(11, 0, 0, 1).mul(&alpha));
        let alpha = choose_matrix(Cusp { a: 1, c: 3 }, 27).unwrap();
        let deg = transport_degeneracy(3, &alpha).unwrap();
        assert_eq!((deg.m1, deg.m2, deg.y), (3, 1, 0));
        assert_eq!(deg.inner_cusp(), Cusp { a: 1, c: 1 });
        let id = transport_degeneracy(1, &alpha).unwrap();
        assert_eq!((id.m1, id.y, id.inner), (1, 0, alpha));
    }
}
