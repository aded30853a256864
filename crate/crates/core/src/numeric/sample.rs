//! Seeded sample points for the two least-squares algorithms.
//!
//! The generator is SplitMix64 with its state initialised to the seed; each
//! uniform draw in `[0, 1)` is `(next_u64 >> 11) · 2^−53`. Direct mode draws
//! one number per point (the real part); eigen mode draws the real part and
//! then the imaginary part.

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::arith::IntMatrix2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleMode {
    /// `Im z = C/2π`, `Re z` uniform in the unit interval centred at `−d/(ch)`.
    Direct { decay: f64 },
    /// `Im z ∈ [1/(2c√h), 1/(c√h)]`, `Re z ∈ [(−d − √(h/2))/(ch), (−d + √(h/2))/(ch)]`.
    Eigen,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub mode: SampleMode,
    pub count: usize,
    pub seed: u64,
    pub c: i64,
    pub d: i64,
    pub h: u64,
}

impl SampleSpec {
    /// Geometry read off `α₁ = [[a, b], [c, d]]` and the width `h`.
    pub fn for_matrix(mode: SampleMode, count: usize, seed: u64, alpha1: &IntMatrix2, h: u64) -> Self {
        assert!(alpha1.c != 0, "sample geometry needs c != 0");
        assert!(h >= 1);
        SampleSpec { mode, count, seed, c: alpha1.c, d: alpha1.d, h }
    }

    pub fn center(&self) -> f64 {
        -(self.d as f64) / (self.c as f64 * self.h as f64)
    }
}

pub struct Uniform(SplitMix64);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Uniform(SplitMix64::from_seed(seed.to_le_bytes()))
    }

    pub fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn sample_points(spec: &SampleSpec) -> Vec<Complex64> {
    let mut rng = Uniform::new(spec.seed);
    let center = spec.center();
    let h = spec.h as f64;
    let c = (spec.c.unsigned_abs()) as f64;
    match spec.mode {
        SampleMode::Direct { decay } => {
            let im = decay / (2.0 * std::f64::consts::PI);
            (0..spec.count)
                .map(|_| Complex64::new(center + rng.next() - 0.5, im))
                .collect()
        }
        SampleMode::Eigen => {
            let lo = 1.0 / (2.0 * c * h.sqrt());
            let hi = 1.0 / (c * h.sqrt());
            let half = (h / 2.0).sqrt() / (c * h);
            (0..spec.count)
                .map(|_| {
                    let re = center - half + 2.0 * half * rng.next();
                    let im = lo + (hi - lo) * rng.next();
                    Complex64::new(re, im)
                })
                .collect()
        }
    }
}
