mod common;

use std::f64::consts::PI;

use common::*;
use cuspidal::arith::{ext_gcd, factorize, gamma0_index, gcd, DirichletCharacter, IntMatrix2, Phase};
use cuspidal::cusps::{choose_matrix, enumerate_cusps, transport_equivalent, CuspDatum};
use cuspidal::exec::Exec;
use cuspidal::expand::{enumerate_twist_basis, expand_direct, expand_eigen, DirectParams, EigenParams};
use cuspidal::modform::{evaluate, naive_twist};
use cuspidal::numeric::{bessel_k, composite_nodes, lstsq_solve, ComplexMatrix};
use cuspidal::petersson::{bessel_weight_sum, nps_factor, petersson_pair, PeterssonParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn trial_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Smallest divisor `d` of the modulus with `χ` trivial on units `≡ 1 (mod d)`.
fn brute_conductor(chi: &DirichletCharacter) -> u64 {
    let n = chi.modulus();
    cuspidal::arith::divisors(n)
        .into_iter()
        .find(|&d| (1..=n).filter(|&x| gcd(x, n) == 1 && x % d == 1 % d).all(|x| chi.phase(x as i64) == Some(Phase::ONE)))
        .unwrap()
}

/// `[SL₂(Z) : Γ₀(N)]` as the size of `P¹(Z/N)`.
fn brute_index(n: u64) -> u64 {
    let mut seen = std::collections::HashSet::new();
    for c in 0..n {
        for d in 0..n {
            if gcd(gcd(c, d), n) != 1 {
                continue;
            }
            let canon = (1..n.max(2))
                .filter(|&u| gcd(u, n) == 1 || n == 1)
                .map(|u| ((u * c) % n, (u * d) % n))
                .min()
                .unwrap();
            seen.insert(canon);
        }
    }
    seen.len() as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ext_gcd_bezout(a in -1_000_000_000i64..1_000_000_000, b in -1_000_000_000i64..1_000_000_000) {
        prop_assume!(a != 0 || b != 0);
        let (g, x, y) = ext_gcd(a, b).unwrap();
        prop_assert!(g > 0);
        prop_assert_eq!(a as i128 * x as i128 + b as i128 * y as i128, g as i128);
        prop_assert_eq!(a % g, 0);
        prop_assert_eq!(b % g, 0);
    }

    #[test]
    fn factorize_round_trips(n in 1u64..10_000_000) {
        let f = factorize(n);
        prop_assert_eq!(f.value(), n);
        let primes: Vec<u64> = f.primes().collect();
        prop_assert!(primes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(primes.iter().all(|&p| trial_prime(p)));
    }

    #[test]
    fn characters_are_multiplicative(n in 2u64..120, pick in any::<prop::sample::Index>(), x in 1i64..10_000, y in 1i64..10_000) {
        let all = DirichletCharacter::all(n);
        let chi = &all[pick.index(all.len())];
        prop_assume!(gcd(x as u64, n) == 1 && gcd(y as u64, n) == 1);
        let (px, py, pxy) = (chi.phase(x).unwrap(), chi.phase(y).unwrap(), chi.phase(x * y).unwrap());
        prop_assert_eq!(px.add(&py), pxy);
        prop_assert_eq!(chi.phase(1), Some(Phase::ONE));
        prop_assert_eq!(chi.phase(n as i64 * x), if n > 1 { None } else { Some(Phase::ONE) });
    }

    #[test]
    fn conductor_matches_brute_force(n in 2u64..100, pick in any::<prop::sample::Index>()) {
        let all = DirichletCharacter::all(n);
        let chi = &all[pick.index(all.len())];
        prop_assert_eq!(chi.conductor(), brute_conductor(chi));
    }

    #[test]
    fn chosen_matrices_send_infinity_to_the_cusp(n in 1u64..300) {
        for cusp in enumerate_cusps(n) {
            let m = choose_matrix(cusp, n).unwrap();
            prop_assert!(m.is_sl2());
            prop_assert_eq!((m.a, m.c as u64), (cusp.a, cusp.c));
        }
    }

    #[test]
    fn bessel_recurrence(nu in 1u32..30, x in 0.05f64..60.0) {
        let (a, b, c) = (bessel_k(nu - 1, x).unwrap(), bessel_k(nu, x).unwrap(), bessel_k(nu + 1, x).unwrap());
        prop_assert!((c - (a + 2.0 * nu as f64 / x * b)).abs() <= 1e-12 * c);
    }

    #[test]
    fn bessel_matches_quadrature(nu in 0u32..14, x in 0.2f64..30.0) {
        // K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt; the integrand is below 1e-300 past t = 9
        let quad: f64 = composite_nodes(0.0, 9.0 + (60.0 / x).ln().max(0.0), 128, 16)
            .iter()
            .map(|(t, w)| w * (-x * t.cosh()).exp() * (nu as f64 * t).cosh())
            .sum();
        let k = bessel_k(nu, x).unwrap();
        prop_assert!((k / quad - 1.0).abs() <= 1e-11, "K_{}({}) = {} vs {}", nu, x, k, quad);
    }

    #[test]
    fn least_squares_is_optimal(seed in any::<u64>(), dir in 0usize..4, step in -1.0f64..1.0) {
        let mut rng = cuspidal::numeric::Uniform::new(seed);
        let mut next = || Complex64::new(rng.next() - 0.5, rng.next() - 0.5);
        let entries: Vec<Complex64> = (0..40).map(|_| next()).collect();
        let a = ComplexMatrix::from_fn(10, 4, |i, j| entries[4 * i + j]);
        let b: Vec<Complex64> = (0..10).map(|_| next()).collect();
        let x = lstsq_solve(&a, &b).unwrap();
        let resid = |x: &[Complex64]| -> f64 {
            a.mul_vec(x).iter().zip(&b).map(|(y, b)| (y - b).norm_sqr()).sum()
        };
        let mut y = x.clone();
        y[dir] += Complex64::new(step, -step) * 1e-3;
        prop_assert!(resid(&y) >= resid(&x) - 1e-14);
    }

    #[test]
    fn twist_round_trip(n in 3u64..60, pick in any::<prop::sample::Index>()) {
        let all = DirichletCharacter::all(n);
        let mu = &all[pick.index(all.len())];
        let f = delta(200);
        let there = naive_twist(&f.coeffs, mu);
        let back = naive_twist(&there, &mu.conj());
        for m in 1..=200usize {
            let expect = if gcd(m as u64, n) == 1 { f.coeffs[m] } else { Complex64::new(0.0, 0.0) };
            prop_assert!((back[m] - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn nps_reductions(theta in 0.0f64..(2.0 * PI), p in prop::sample::select(vec![2u64, 3, 5, 7, 11])) {
        prop_assume!(theta.sin().abs() > 1e-3);
        let alpha = Complex64::from_polar(1.0, theta);
        let s1 = (alpha + 1.0 / alpha).re;
        let direct = |c: i32| -> f64 {
            let h = c / 2;
            let num = (alpha.powi(h + 1) - alpha.powi(-h - 1)) - (alpha.powi(h - 1) - alpha.powi(1 - h)) / p as f64;
            (num * num / ((alpha - 1.0 / alpha) * (alpha - 1.0 / alpha))).re
        };
        let tol = |v: f64| 1e-12 * (1.0 + v.abs());
        prop_assert!((nps_factor(p, 2, s1) - s1 * s1).abs() <= tol(s1 * s1));
        prop_assert!((nps_factor(p, 2, s1) - direct(2)).abs() <= tol(direct(2)));
        let c4 = (s1 * s1 - 1.0 - 1.0 / p as f64).powi(2);
        prop_assert!((nps_factor(p, 4, s1) - c4).abs() <= tol(c4));
        prop_assert!((nps_factor(p, 4, s1) - direct(4)).abs() <= tol(direct(4)));
        prop_assert!((nps_factor(p, 6, s1) - direct(6)).abs() <= 1e-11 * (1.0 + direct(6).abs()));
    }
}

#[test]
fn cusp_widths_partition_the_index() {
    for n in 1..=200u64 {
        let data = CuspDatum::all(n, &DirichletCharacter::trivial(n)).unwrap();
        assert_eq!(data.iter().map(|c| c.h0).sum::<u64>(), gamma0_index(n), "N = {n}");
        if n <= 60 {
            assert_eq!(gamma0_index(n), brute_index(n), "N = {n}");
        }
    }
}

#[test]
fn evaluation_matches_long_sum() {
    let d = delta(3000);
    for z in [Complex64::new(0.0, 1.0), Complex64::new(0.3, 0.2), Complex64::new(-0.41, 0.05)] {
        let eps = 1e-13;
        let v = evaluate(&d, z, eps).unwrap();
        let q = (Complex64::new(0.0, 2.0 * PI) * z).exp();
        let terms: Vec<Complex64> = (1..=3000).map(|n| d.coeffs[n] * q.powu(n as u32)).collect();
        let brute: Complex64 = terms.iter().sum();
        let rounding = 1e-15 * terms.iter().map(|t| t.norm()).sum::<f64>();
        assert!((v - brute).norm() <= eps + rounding, "{z}: {v} vs {brute}");
    }
}

#[test]
fn bessel_weight_sum_matches_quadrature_oracle() {
    let (s, _) = bessel_weight_sum(12, 1, 1, 1e-30).unwrap();
    let k = |nu: u32, x: f64| -> f64 {
        composite_nodes(0.0, 10.0, 160, 16)
            .iter()
            .map(|(t, w)| w * (-x * t.cosh()).exp() * (nu as f64 * t).cosh())
            .sum()
    };
    let oracle: f64 = (1..=12)
        .map(|m| {
            let x = 4.0 * PI * m as f64;
            (x / (8.0 * PI)).powi(11) * (x * k(10, x) - k(11, x))
        })
        .sum();
    assert!(rel(s, oracle) <= 1e-12, "{s} vs {oracle}");
}

#[test]
fn hermitian_symmetry_and_positivity() {
    let p = PeterssonParams { digits: 11.0, ..Default::default() };
    let a = fixture("level9_wt8");
    let sharp = combination("f − f(3z)", 27, &[(Complex64::new(1.0, 0.0), a.clone()), (Complex64::new(-1.0, 0.0), dilated(&a, 3))]);
    let a27 = combination("f", 27, &[(Complex64::new(1.0, 0.0), a.clone())]);
    let fg = petersson_pair(&sharp, &a27, &p).unwrap().value;
    let gf = petersson_pair(&a27, &sharp, &p).unwrap().value;
    assert!((fg - gf.conj()).norm() <= 1e-10 * fg.norm(), "{fg} vs {gf}");
    for f in [delta(1000), f2(3000), f2_twist(3000), level8(3000), a] {
        let v = petersson_pair(&f, &f, &p).unwrap().value;
        assert!(v.re > 0.0 && v.im.abs() <= 1e-9 * v.re, "{}: {v}", f.label);
    }
}

#[test]
fn e_scaling_is_stable() {
    let d = delta(1000);
    let at = |e: f64| petersson_pair(&d, &d, &PeterssonParams { digits: e, ..Default::default() }).unwrap().value.re;
    assert!(rel(at(8.0), at(11.0)) <= 1e-8);
}

#[test]
fn fresh_expansion_equals_transport() {
    let f = level6(3000);
    let chi = DirichletCharacter::trivial(6);
    let dp = DirectParams::tail_compensated(&f, 13.0, 20, 1.0, 0);
    for cusp in enumerate_cusps(6) {
        let beta = choose_matrix(cusp, 6).unwrap();
        // γβ for γ = [[1, 0], [6, 1]] ∈ Γ₀(6), then a translation
        let other = IntMatrix2::new(1, 0, 6, 1).mul(&beta).mul(&IntMatrix2::new(1, 1, 0, 1));
        let d1 = CuspDatum::with_matrix(6, &chi, beta).unwrap();
        let d2 = CuspDatum::with_matrix(6, &chi, other).unwrap();
        let e1 = expand_direct(&f, &d1, &dp, Exec::Parallel).unwrap();
        let e2 = expand_direct(&f, &d2, &dp, Exec::Parallel).unwrap();
        let moved = transport_equivalent(&e1.coeffs, &beta, &other, &chi, 6, d1.h).unwrap();
        let back = transport_equivalent(&moved, &other, &beta, &chi, 6, d1.h).unwrap();
        for n in 1..=12 {
            let budget = 3.0 * 2.0 * 10f64.powi(-13) * (n as f64 * e1.error.decay).exp();
            assert!((moved[n] - e2.coeffs[n]).norm() <= budget, "cusp {cusp}, n = {n}");
            assert!((back[n] - e1.coeffs[n]).norm() <= 1e-12 * (1.0 + e1.coeffs[n].norm()));
        }
    }
}

#[test]
fn direct_and_eigen_agree_on_fixtures() {
    for (name, level) in [("level27_wt4", 27u64), ("level25_wt4", 25), ("level9_wt8", 9)] {
        let f = fixture(name);
        for datum in CuspDatum::all(level, &f.character).unwrap() {
            if datum.is_infinity() {
                continue;
            }
            let basis = enumerate_twist_basis(&f, &datum).unwrap();
            let ep = EigenParams { digits: 12.0, k: 12, decay: 1.0, seed: 0 };
            let eigen = expand_eigen(&f, &datum, basis, &ep, Exec::Parallel).unwrap();
            let dp = DirectParams::tail_compensated(&f, 12.0, 12, 1.0, 0);
            let mut direct = expand_direct(&f, &datum, &dp, Exec::Parallel).unwrap();
            direct.error.digits = 12.0;
            for n in 1..=12 {
                let budget = 3.0 * (direct.error.bound(n) + eigen.expansion.error.bound(n));
                let diff = (direct.coeffs[n] - eigen.expansion.coeffs[n]).norm();
                assert!(diff <= budget, "{name} at {}: n = {n}, {diff:e} > {budget:e}", datum.cusp);
            }
        }
    }
}

#[test]
fn level27_has_unitary_structure() {
    let f = fixture("level27_wt4");
    let datum = CuspDatum::with_matrix(27, &f.character, IntMatrix2::new(1, -1, 3, -2)).unwrap();
    let dp = DirectParams { digits: 15.0, k0: 1, decay: 1.0, seed: 0 };
    let e = expand_direct(&f, &datum, &dp, Exec::Parallel).unwrap();
    for n in 1..=8 {
        let (b, a) = (e.coeffs[n].norm(), f.coeffs[n].norm());
        assert!(b.min((b - a).abs()) <= 1e-9, "n = {n}: |b| = {b}, |a| = {a}");
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let f = fixture("level27_wt4");
    let datum = CuspDatum::new(27, &f.character, enumerate_cusps(27)[1]).unwrap();
    let ep = EigenParams { digits: 12.0, k: 10, decay: 1.0, seed: 7 };
    let run = || {
        let basis = enumerate_twist_basis(&f, &datum).unwrap();
        expand_eigen(&f, &datum, basis, &ep, Exec::Parallel).unwrap().c
    };
    assert_eq!(run(), run());
    let seq = {
        let basis = enumerate_twist_basis(&f, &datum).unwrap();
        expand_eigen(&f, &datum, basis, &ep, Exec::Sequential).unwrap().c
    };
    assert!(run().iter().zip(&seq).all(|(a, b)| (a - b).norm() <= 1e-12));
}
