//! Exact integer arithmetic, 2×2 integer matrices and Dirichlet characters.
//!
//! Characters are stored as exponents on canonical generators of each
//! prime-power component of (Z/NZ)^×:
//!
//! * odd `p^e`: the least primitive root mod `p^e`;
//! * `2^e`, `e ≥ 3`: the pair `(−1, 5)`;
//! * `4`: the single generator `−1`;
//! * `2` and `1`: no generators.
//!
//! A character value on a generator of order `o` is `e^{2πi k/o}`; only the
//! integer `k` is stored, so products and twists stay exact until a value is
//! finally converted to a complex number.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest prime-power component for which discrete-log tables are built.
const MAX_TABLE: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("gcd(0, 0) is undefined")]
    ZeroGcd,
    #[error("{divisor} is not a unitary divisor of {modulus}")]
    NotUnitaryDivisor { divisor: u64, modulus: u64 },
    #[error("{0} does not divide {1}")]
    NotMultiple(u64, u64),
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error("modulus {0} is too large for discrete-log tables")]
    ModulusTooLarge(u64),
    #[error("matrix {0} does not have determinant 1")]
    NotSl2(IntMatrix2),
    #[error("integer overflow in matrix arithmetic")]
    Overflow,
}

// ---------------------------------------------------------------------------
// Integers

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// Extended Euclid: `(g, x, y)` with `g = gcd(a, b) > 0` and `a·x + b·y = g`.
pub fn ext_gcd(a: i64, b: i64) -> Result<(i64, i64, i64), ArithError> {
    if a == 0 && b == 0 {
        return Err(ArithError::ZeroGcd);
    }
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        r0 = -r0;
        s0 = -s0;
        t0 = -t0;
    }
    Ok((r0 as i64, s0 as i64, t0 as i64))
}

pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inv(a: i64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(m as i64), m as i64).ok()?;
    (g == 1).then(|| x.rem_euclid(m as i64) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Prime factorization as increasing `(p, e)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Factorization(pub Vec<(u64, u32)>);

impl Factorization {
    pub fn iter(&self) -> impl Iterator<Item = &(u64, u32)> {
        self.0.iter()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|&(p, _)| p)
    }

    pub fn value(&self) -> u64 {
        self.0.iter().map(|&(p, e)| p.pow(e)).product()
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.0.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e)
    }
}

pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut primes = Vec::new();
    let mut rest = n;
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        while rest % p == 0 {
            primes.push(p);
            rest /= p;
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            primes.push(m);
        } else {
            let d = pollard_rho(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    Factorization(out)
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .map(|&(p, e)| (p - 1) * p.pow(e - 1))
        .product()
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for &(p, e) in factorize(n).iter() {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

/// `p`-adic valuation of a nonzero integer.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Largest divisor of `n` coprime to `m`.
pub fn prime_to_part(n: u64, m: u64) -> u64 {
    let mut rest = n;
    loop {
        let g = gcd(rest, m);
        if g == 1 {
            return rest;
        }
        rest /= g;
    }
}

/// Index of Γ₀(N) in SL₂(Z): `N·Π(1 + 1/p)`.
pub fn gamma0_index(n: u64) -> u64 {
    factorize(n)
        .iter()
        .map(|&(p, e)| p.pow(e - 1) * (p + 1))
        .product()
}

// ---------------------------------------------------------------------------
// Matrices

/// Integer 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl fmt::Display for IntMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl IntMatrix2 {
    pub const IDENTITY: IntMatrix2 = IntMatrix2 { a: 1, b: 0, c: 0, d: 1 };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        IntMatrix2 { a, b, c, d }
    }

    /// `δ_x = [[1, x], [0, 1]]`.
    pub const fn translation(x: i64) -> Self {
        IntMatrix2::new(1, x, 0, 1)
    }

    /// `τ_h = [[h, 0], [0, 1]]`.
    pub const fn scaling(h: i64) -> Self {
        IntMatrix2::new(h, 0, 0, 1)
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn checked_mul(&self, o: &IntMatrix2) -> Result<IntMatrix2, ArithError> {
        let e = |x: i64, y: i64, z: i64, w: i64| -> Result<i64, ArithError> {
            let v = x as i128 * y as i128 + z as i128 * w as i128;
            i64::try_from(v).map_err(|_| ArithError::Overflow)
        };
        Ok(IntMatrix2 {
            a: e(self.a, o.a, self.b, o.c)?,
            b: e(self.a, o.b, self.b, o.d)?,
            c: e(self.c, o.a, self.d, o.c)?,
            d: e(self.c, o.b, self.d, o.d)?,
        })
    }

    /// Product; panics on `i64` overflow (entries here are tiny).
    pub fn mul(&self, o: &IntMatrix2) -> IntMatrix2 {
        self.checked_mul(o).expect("matrix product overflow")
    }

    /// Adjugate `[[d, −b], [−c, a]]`, the inverse up to the determinant.
    pub fn adjugate(&self) -> IntMatrix2 {
        IntMatrix2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn inverse_sl2(&self) -> Result<IntMatrix2, ArithError> {
        if self.det() != 1 {
            return Err(ArithError::NotSl2(*self));
        }
        Ok(self.adjugate())
    }

    pub fn is_sl2(&self) -> bool {
        self.det() == 1
    }

    pub fn in_gamma0(&self, n: u64) -> bool {
        self.det() == 1 && self.c.rem_euclid(n as i64) == 0
    }

    /// Möbius action on the upper half-plane.
    pub fn act(&self, z: Complex64) -> Complex64 {
        (z * self.a as f64 + self.b as f64) / (z * self.c as f64 + self.d as f64)
    }

    /// `cz + d`.
    pub fn automorphy(&self, z: Complex64) -> Complex64 {
        z * self.c as f64 + self.d as f64
    }
}

// ---------------------------------------------------------------------------
// Exact phases

/// The root of unity `e^{2πi num/den}`, kept as a reduced fraction in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase {
    num: u64,
    den: u64,
}

impl Phase {
    pub const ONE: Phase = Phase { num: 0, den: 1 };

    pub fn new(num: i64, den: u64) -> Phase {
        assert!(den > 0);
        let n = num.rem_euclid(den as i64) as u64;
        let g = gcd(n, den);
        Phase { num: n / g, den: den / g }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn add(&self, o: &Phase) -> Phase {
        let den = lcm(self.den, o.den);
        let n = (self.num as u128 * (den / self.den) as u128
            + o.num as u128 * (den / o.den) as u128)
            % den as u128;
        Phase::new(n as i64, den)
    }

    pub fn neg(&self) -> Phase {
        Phase::new(-(self.num as i64), self.den)
    }

    pub fn scale(&self, k: i64) -> Phase {
        let n = (self.num as i128 * k as i128).rem_euclid(self.den as i128);
        Phase::new(n as i64, self.den)
    }

    pub fn to_complex(&self) -> Complex64 {
        root_of_unity(self.num as i64, self.den)
    }
}

/// `e^{2πi k/n}` with the angle reduced to `[−π, π]` and exact values at
/// multiples of a quarter turn.
pub fn root_of_unity(k: i64, n: u64) -> Complex64 {
    let n_i = n as i64;
    let r = k.rem_euclid(n_i);
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 2 * r == n_i {
        return Complex64::new(-1.0, 0.0);
    }
    if 4 * r == n_i {
        return Complex64::new(0.0, 1.0);
    }
    if 4 * r == 3 * n_i {
        return Complex64::new(0.0, -1.0);
    }
    let centered = if 2 * r > n_i { r - n_i } else { r };
    let theta = 2.0 * std::f64::consts::PI * centered as f64 / n as f64;
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

// ---------------------------------------------------------------------------
// Dirichlet characters

#[derive(Clone, Debug)]
struct Component {
    p: u64,
    e: u32,
    q: u64,
    gens: Vec<u64>,
    orders: Vec<u64>,
    /// Character value on `gens[i]` is `e^{2πi exps[i]/orders[i]}`.
    exps: Vec<u64>,
    /// `table[r]` = discrete logs of `r` on `gens`, `None` for non-units.
    table: Arc<Vec<Option<[u64; 2]>>>,
}

fn least_primitive_root(p: u64, e: u32) -> u64 {
    let q = p.pow(e);
    let phi = (p - 1) * p.pow(e - 1);
    let ells: Vec<u64> = factorize(phi).primes().collect();
    (2..q)
        .find(|&g| g % p != 0 && ells.iter().all(|&l| mod_pow(g, phi / l, q) != 1))
        .expect("odd prime powers have primitive roots")
}

/// Canonical generators and their orders for `(Z/p^eZ)^×`.
fn canonical_generators(p: u64, e: u32) -> (Vec<u64>, Vec<u64>) {
    let q = p.pow(e);
    if p == 2 {
        match e {
            0 | 1 => (vec![], vec![]),
            2 => (vec![3], vec![2]),
            _ => (vec![q - 1, 5], vec![2, q / 4]),
        }
    } else {
        (vec![least_primitive_root(p, e)], vec![(p - 1) * p.pow(e - 1)])
    }
}

thread_local! {
    static TABLES: std::cell::RefCell<std::collections::HashMap<u64, Arc<Vec<Option<[u64; 2]>>>>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
}

fn dlog_table(p: u64, e: u32, gens: &[u64], orders: &[u64]) -> Arc<Vec<Option<[u64; 2]>>> {
    let q = p.pow(e);
    if let Some(t) = TABLES.with(|t| t.borrow().get(&q).cloned()) {
        return t;
    }
    let mut table = vec![None; q as usize];
    match gens.len() {
        0 => {
            for (r, slot) in table.iter_mut().enumerate() {
                if gcd(r as u64, q) == 1 {
                    *slot = Some([0, 0]);
                }
            }
        }
        1 => {
            let mut x = 1u64;
            for i in 0..orders[0] {
                table[x as usize] = Some([i, 0]);
                x = x * gens[0] % q;
            }
        }
        _ => {
            let mut x = 1u64;
            for i in 0..orders[0] {
                let mut y = x;
                for j in 0..orders[1] {
                    table[y as usize] = Some([i, j]);
                    y = y * gens[1] % q;
                }
                x = x * gens[0] % q;
            }
        }
    }
    let table = Arc::new(table);
    TABLES.with(|t| t.borrow_mut().insert(q, table.clone()));
    table
}

impl Component {
    fn new(p: u64, e: u32, exps: Vec<u64>) -> Result<Component, ArithError> {
        let q = p.pow(e);
        if q > MAX_TABLE {
            return Err(ArithError::ModulusTooLarge(q));
        }
        let (gens, orders) = canonical_generators(p, e);
        if exps.len() != gens.len() {
            return Err(ArithError::InvalidCharacter(format!(
                "component {q} needs {} exponents, got {}",
                gens.len(),
                exps.len()
            )));
        }
        let exps = exps.iter().zip(&orders).map(|(&k, &o)| k % o).collect();
        let table = dlog_table(p, e, &gens, &orders);
        Ok(Component { p, e, q, gens, orders, exps, table })
    }

    fn phase(&self, r: u64) -> Option<Phase> {
        let logs = self.table[(r % self.q) as usize]?;
        let mut acc = Phase::ONE;
        for i in 0..self.gens.len() {
            let k = (self.exps[i] as u128 * logs[i] as u128 % self.orders[i] as u128) as i64;
            acc = acc.add(&Phase::new(k, self.orders[i]));
        }
        Some(acc)
    }

    fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&k| k == 0)
    }

    fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(&self.orders)
            .map(|(&k, &o)| o / gcd(k, o))
            .fold(1, lcm)
    }

    /// Exponent `e'` of the conductor `p^{e'}` of this component.
    fn conductor_exponent(&self) -> u32 {
        if self.is_trivial() {
            return 0;
        }
        // (1 + p^j Z)/p^e is cyclic, generated by 1 + p^j, for odd p with
        // j ≥ 1 and for p = 2 with j ≥ 2.
        let start = if self.p == 2 { 2 } else { 1 };
        let mut best = self.e;
        for j in (start..self.e).rev() {
            let g = 1 + self.p.pow(j);
            if self.phase(g) == Some(Phase::ONE) {
                best = j;
            } else {
                break;
            }
        }
        best
    }
}

/// Exact Dirichlet character modulo `N`.
#[derive(Clone)]
pub struct DirichletCharacter {
    modulus: u64,
    components: Vec<Component>,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "χ mod {} [", self.modulus)?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:", c.q)?;
            for (k, o) in c.exps.iter().zip(&c.orders) {
                write!(f, " {k}/{o}")?;
            }
        }
        write!(f, "]")
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.exponent_vector() == other.exponent_vector()
    }
}

impl Eq for DirichletCharacter {}

impl DirichletCharacter {
    pub fn trivial(modulus: u64) -> DirichletCharacter {
        let exps = factorize(modulus)
            .iter()
            .map(|&(p, e)| vec![0; canonical_generators(p, e).0.len()])
            .collect();
        DirichletCharacter::from_exponents(modulus, exps).expect("trivial character is valid")
    }

    /// Builds a character from integer exponents: `exps[i][j]` is the
    /// numerator over the order of generator `j` of the `i`-th prime-power
    /// component (components in increasing prime order).
    pub fn from_exponents(modulus: u64, exps: Vec<Vec<u64>>) -> Result<Self, ArithError> {
        if modulus == 0 {
            return Err(ArithError::InvalidCharacter("modulus 0".into()));
        }
        let fac = factorize(modulus);
        if fac.0.len() != exps.len() {
            return Err(ArithError::InvalidCharacter(format!(
                "modulus {modulus} has {} prime components, got {}",
                fac.0.len(),
                exps.len()
            )));
        }
        let components = fac
            .iter()
            .zip(exps)
            .map(|(&(p, e), k)| Component::new(p, e, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DirichletCharacter { modulus, components })
    }

    /// Builds the character with prescribed value `e^{2πi t}` on each
    /// canonical generator, given as rationals `t = num/den`.
    pub fn from_rational_exponents(
        modulus: u64,
        exps: &[(u64, Vec<(i64, u64)>)],
    ) -> Result<Self, ArithError> {
        let fac = factorize(modulus);
        let mut out = Vec::new();
        for &(p, e) in fac.iter() {
            let q = p.pow(e);
            let (_, orders) = canonical_generators(p, e);
            let given = exps.iter().find(|(qq, _)| *qq == q);
            let ks = match given {
                None => vec![0; orders.len()],
                Some((_, ts)) => {
                    if ts.len() != orders.len() {
                        return Err(ArithError::InvalidCharacter(format!(
                            "component {q} needs {} exponents, got {}",
                            orders.len(),
                            ts.len()
                        )));
                    }
                    ts.iter()
                        .zip(&orders)
                        .map(|(&(num, den), &o)| {
                            if den == 0 || o % den != 0 {
                                return Err(ArithError::InvalidCharacter(format!(
                                    "exponent {num}/{den} on a generator of order {o}"
                                )));
                            }
                            Ok((num.rem_euclid(den as i64) as u64) * (o / den))
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
            };
            out.push(ks);
        }
        for (q, _) in exps {
            if !fac.iter().any(|&(p, e)| p.pow(e) == *q) {
                return Err(ArithError::InvalidCharacter(format!(
                    "{q} is not a prime-power component of {modulus}"
                )));
            }
        }
        DirichletCharacter::from_exponents(modulus, out)
    }

    /// All characters modulo `n`, ordered lexicographically by exponent vector.
    pub fn all(n: u64) -> Vec<DirichletCharacter> {
        let fac = factorize(n);
        let mut orders = Vec::new();
        for &(p, e) in fac.iter() {
            orders.push(canonical_generators(p, e).1);
        }
        let flat: Vec<u64> = orders.iter().flatten().copied().collect();
        let total: u64 = flat.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        let mut idx = vec![0u64; flat.len()];
        for _ in 0..total {
            let mut exps = Vec::new();
            let mut pos = 0;
            for o in &orders {
                exps.push(idx[pos..pos + o.len()].to_vec());
                pos += o.len();
            }
            out.push(DirichletCharacter::from_exponents(n, exps).expect("valid exponents"));
            for j in (0..flat.len()).rev() {
                idx[j] += 1;
                if idx[j] < flat[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        out
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Exponent numerators, flattened over components and generators.
    pub fn exponent_vector(&self) -> Vec<u64> {
        self.components.iter().flat_map(|c| c.exps.iter().copied()).collect()
    }

    /// Exponents as reduced rationals per prime-power component.
    pub fn rational_exponents(&self) -> Vec<(u64, Vec<(u64, u64)>)> {
        self.components
            .iter()
            .map(|c| {
                let ts = c
                    .exps
                    .iter()
                    .zip(&c.orders)
                    .map(|(&k, &o)| {
                        let g = gcd(k, o);
                        (k / g, o / g)
                    })
                    .collect();
                (c.q, ts)
            })
            .collect()
    }

    /// Exact value as a phase, `None` when `gcd(n, N) > 1`.
    pub fn phase(&self, n: i64) -> Option<Phase> {
        let r = n.rem_euclid(self.modulus as i64) as u64;
        let mut acc = Phase::ONE;
        for c in &self.components {
            acc = acc.add(&c.phase(r % c.q)?);
        }
        Some(acc)
    }

    pub fn eval(&self, n: i64) -> Complex64 {
        self.phase(n).map_or(Complex64::new(0.0, 0.0), |p| p.to_complex())
    }

    pub fn is_trivial(&self) -> bool {
        self.components.iter().all(Component::is_trivial)
    }

    pub fn order(&self) -> u64 {
        self.components.iter().map(Component::order).fold(1, lcm)
    }

    pub fn conductor(&self) -> u64 {
        self.components
            .iter()
            .map(|c| c.p.pow(c.conductor_exponent()))
            .product()
    }

    /// Conductor exponent at `p` (0 if `p ∤ N`).
    pub fn conductor_exponent_at(&self, p: u64) -> u32 {
        self.components
            .iter()
            .find(|c| c.p == p)
            .map_or(0, Component::conductor_exponent)
    }

    /// The same character viewed modulo a multiple `m` of `N`.
    pub fn lift(&self, m: u64) -> Result<DirichletCharacter, ArithError> {
        if m % self.modulus != 0 {
            return Err(ArithError::NotMultiple(self.modulus, m));
        }
        if m == self.modulus {
            return Ok(self.clone());
        }
        let mut exps = Vec::new();
        for &(p, e) in factorize(m).iter() {
            let (gens, orders) = canonical_generators(p, e);
            let old = self.components.iter().find(|c| c.p == p);
            let ks = gens
                .iter()
                .zip(&orders)
                .map(|(&g, &o)| match old {
                    None => 0,
                    Some(c) => {
                        let ph = c.phase(g % c.q).expect("generator is a unit");
                        (ph.num * (o / ph.den)) % o
                    }
                })
                .collect();
            exps.push(ks);
        }
        DirichletCharacter::from_exponents(m, exps)
    }

    /// Component on the unitary divisor `d` of `N`.
    pub fn restrict(&self, d: u64) -> Result<DirichletCharacter, ArithError> {
        if d == 0 || self.modulus % d != 0 || gcd(d, self.modulus / d) != 1 {
            return Err(ArithError::NotUnitaryDivisor { divisor: d, modulus: self.modulus });
        }
        let components: Vec<Component> =
            self.components.iter().filter(|c| d % c.p == 0).cloned().collect();
        Ok(DirichletCharacter { modulus: d, components })
    }

    /// Component at the prime `p` (modulus `p^{v_p(N)}`).
    pub fn component_at(&self, p: u64) -> DirichletCharacter {
        let q = p.pow(valuation(self.modulus, p));
        self.restrict(q).expect("prime-power part is unitary")
    }

    /// Restriction to the prime-to-`p` part of the modulus.
    pub fn away_from(&self, p: u64) -> DirichletCharacter {
        let q = p.pow(valuation(self.modulus, p));
        self.restrict(self.modulus / q).expect("prime-to-p part is unitary")
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> DirichletCharacter {
        let f = self.conductor();
        let mut exps = Vec::new();
        for &(p, e) in factorize(f).iter() {
            let (gens, orders) = canonical_generators(p, e);
            let c = self.components.iter().find(|c| c.p == p).expect("p divides N");
            let ks = gens
                .iter()
                .zip(&orders)
                .map(|(&g, &o)| {
                    let ph = c.phase(g).expect("unit");
                    (ph.num * (o / ph.den)) % o
                })
                .collect();
            exps.push(ks);
        }
        DirichletCharacter::from_exponents(f, exps).expect("primitive exponents are valid")
    }

    pub fn conj(&self) -> DirichletCharacter {
        self.pow(-1)
    }

    pub fn pow(&self, k: i64) -> DirichletCharacter {
        let exps = self
            .components
            .iter()
            .map(|c| {
                c.exps
                    .iter()
                    .zip(&c.orders)
                    .map(|(&x, &o)| (x as i128 * k as i128).rem_euclid(o as i128) as u64)
                    .collect()
            })
            .collect();
        DirichletCharacter::from_exponents(self.modulus, exps).expect("same shape")
    }

    /// Product, viewed modulo `lcm` of the two moduli.
    pub fn mul(&self, other: &DirichletCharacter) -> DirichletCharacter {
        let m = lcm(self.modulus, other.modulus);
        let a = self.lift(m).expect("lcm is a multiple");
        let b = other.lift(m).expect("lcm is a multiple");
        let exps = a
            .components
            .iter()
            .zip(&b.components)
            .map(|(x, y)| {
                x.exps
                    .iter()
                    .zip(&y.exps)
                    .zip(&x.orders)
                    .map(|((&u, &v), &o)| (u + v) % o)
                    .collect()
            })
            .collect();
        DirichletCharacter::from_exponents(m, exps).expect("same shape")
    }

    /// True when both characters induce the same primitive character.
    pub fn same_primitive(&self, other: &DirichletCharacter) -> bool {
        self.primitive() == other.primitive()
    }

    pub fn to_spec(&self) -> CharacterSpec {
        CharacterSpec {
            modulus: self.modulus,
            components: self
                .rational_exponents()
                .into_iter()
                .filter(|(_, ts)| !ts.is_empty())
                .map(|(q, ts)| ComponentSpec {
                    prime_power: q,
                    exponents: ts.into_iter().map(|(n, d)| [n as i64, d as i64]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &CharacterSpec) -> Result<DirichletCharacter, ArithError> {
        let exps: Vec<(u64, Vec<(i64, u64)>)> = spec
            .components
            .iter()
            .map(|c| {
                let ts = c
                    .exponents
                    .iter()
                    .map(|[n, d]| {
                        if *d <= 0 {
                            Err(ArithError::InvalidCharacter(format!("denominator {d}")))
                        } else {
                            Ok((*n, *d as u64))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((c.prime_power, ts))
            })
            .collect::<Result<Vec<_>, ArithError>>()?;
        DirichletCharacter::from_rational_exponents(spec.modulus, &exps)
    }
}

/// JSON form of a character: `{"modulus": N, "components": [{"prime_power":
/// q, "exponents": [[num, den], ...]}]}`; omitted components are trivial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterSpec {
    pub modulus: u64,
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub prime_power: u64,
    pub exponents: Vec<[i64; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(1).0, vec![]);
        assert_eq!(factorize(12).0, vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(144169).0, vec![(144169, 1)]);
        assert_eq!(factorize(600851475143).0, vec![(71, 1), (839, 1), (1471, 1), (6857, 1)]);
        let big = 4_611_686_014_132_420_609u64; // (2^31 − 1)^2
        assert_eq!(factorize(big).0, vec![(2147483647, 2)]);
    }

    #[test]
    fn ext_gcd_examples() {
        assert_eq!(ext_gcd(3, 5).unwrap(), (1, 2, -1));
        assert_eq!(ext_gcd(0, 7).unwrap(), (7, 0, 1));
        assert_eq!(ext_gcd(1071, 462).unwrap(), (21, -3, 7));
        assert_eq!(ext_gcd(0, 0), Err(ArithError::ZeroGcd));
        assert_eq!(ext_gcd(-4, 6).unwrap().0, 2);
    }

    #[test]
    fn generators() {
        assert_eq!(canonical_generators(3, 2).0, vec![2]);
        assert_eq!(canonical_generators(3, 3).0, vec![2]);
        assert_eq!(canonical_generators(5, 1).0, vec![2]);
        assert_eq!(canonical_generators(7, 1).0, vec![3]);
        assert_eq!(canonical_generators(2, 3).0, vec![7, 5]);
        assert_eq!(canonical_generators(2, 2).0, vec![3]);
    }

    #[test]
    fn mu1_mod_9() {
        let mu1 = DirichletCharacter::from_rational_exponents(9, &[(9, vec![(1, 6)])]).unwrap();
        let v = mu1.eval(4);
        let expect = root_of_unity(1, 3);
        assert!((v - expect).norm() < 1e-15);
        assert_eq!(mu1.order(), 6);
        assert_eq!(mu1.conductor(), 9);
        assert_eq!(mu1.eval(3), Complex64::new(0.0, 0.0));
        assert_eq!(mu1.restrict(9).unwrap(), mu1);
    }

    #[test]
    fn conductor_examples() {
        assert_eq!(DirichletCharacter::trivial(12).conductor(), 1);
        // χ(−1) = 1, χ(5) = −1 mod 8.
        let chi8 = DirichletCharacter::from_exponents(8, vec![vec![0, 1]]).unwrap();
        assert_eq!(chi8.eval(5), Complex64::new(-1.0, 0.0));
        assert_eq!(chi8.eval(-1), Complex64::new(1.0, 0.0));
        assert_eq!(chi8.conductor(), 8);
        let chi4 = DirichletCharacter::from_exponents(8, vec![vec![1, 0]]).unwrap();
        assert_eq!(chi4.conductor(), 4);
    }

    #[test]
    fn restrict_and_lift() {
        let chi = DirichletCharacter::from_exponents(45, vec![vec![2], vec![1]]).unwrap();
        let c9 = chi.restrict(9).unwrap();
        let c5 = chi.restrict(5).unwrap();
        for n in 0..200 {
            let prod = c9.eval(n) * c5.eval(n);
            assert!((prod - chi.eval(n)).norm() < 1e-14);
        }
        assert!(chi.restrict(3).is_err());
        assert!(chi.restrict(1).unwrap().is_trivial());
        let lifted = c9.lift(27 * 5).unwrap();
        for n in 0..500 {
            if gcd(n as u64, 135) == 1 {
                assert!((lifted.eval(n) - c9.eval(n)).norm() < 1e-14);
            }
        }
        assert_eq!(lifted.primitive(), c9.primitive());
    }

    #[test]
    fn spec_round_trip() {
        let chi = DirichletCharacter::from_exponents(40, vec![vec![1, 1], vec![3]]).unwrap();
        let back = DirichletCharacter::from_spec(&chi.to_spec()).unwrap();
        assert_eq!(back, chi);
    }

    #[test]
    fn all_characters_count() {
        assert_eq!(DirichletCharacter::all(27).len(), 18);
        assert_eq!(DirichletCharacter::all(8).len(), 4);
        assert_eq!(DirichletCharacter::all(1).len(), 1);
        assert!(DirichletCharacter::all(9)[0].is_trivial());
    }
}
