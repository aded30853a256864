//! Expansions of (possibly old or composite) forms at the cusps of Γ₀(N),
//! computed once per cusp of each constituent form's own level and then
//! transported.
//!
//! A form `F` slashed by `β ∈ SL₂(Z)` is handled as a series
//! `F|β(z) = Σ cₙ e^{2πinz/w}`:
//!
//! * a form of level `L` is expanded at the chosen matrix `α′₁` of the
//!   Γ₀(L)-class of `β(∞)` (width `h′`), then `β = γ·α′₁·δ_x` with
//!   `γ ∈ Γ₀(L)` gives `cₙ = χ(d_γ)·h′^{−k/2}·e^{2πinx/h′}·b̃ₙ`, `w = h′`;
//! * `F = G(mz)` uses `[[m, 0], [0, 1]]·β = A″·[[m₁, y], [0, m₂]]`, so
//!   `F|β = m^{−k/2}·(G|A″)|[[m₁, y], [0, m₂]]`;
//! * combinations are summed over a common `w`.
//!
//! Requests carry a frequency budget `X = K/H` (coefficients of
//! `e^{2πitz}` with `t ≤ X` are needed) and an error target
//! `10^{−E}·e^{D·t}`, both rewritten along the way so each native expansion
//! gets its own `(E, K, C)`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{lcm, root_of_unity, IntMatrix2};
use crate::cusps::{cusp_class, enumerate_cusps, find_equivalence, transport_degeneracy, CuspDatum, CuspError};
use crate::exec::Exec;
use crate::expand::{
    enumerate_twist_basis, expand_direct, expand_eigen, CuspExpansion, DirectParams, EigenParams, ExpandError,
    Method,
};
use crate::modform::{FormInput, ModformError, Structure};
use crate::numeric::NumericError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Direct,
    Eigen,
    /// Eigen when the form's metadata permits, direct otherwise.
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderOptions {
    pub method: MethodChoice,
    pub seed: u64,
    pub exec: Exec,
}

/// `t ≤ num/den`.
#[derive(Clone, Copy, Debug)]
struct Budget {
    num: u64,
    den: u64,
}

impl Budget {
    fn max_index(&self, w: u64) -> usize {
        (self.num as u128 * w as u128 / self.den as u128) as usize
    }

    fn scale(&self, mul: u64, div: u64) -> Budget {
        Budget { num: self.num * mul, den: self.den * div }
    }
}

#[derive(Clone, Copy, Debug)]
struct Target {
    budget: Budget,
    digits: f64,
    /// Error growth per unit of frequency `t`.
    decay: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LeafKey {
    coeffs: usize,
    level: u64,
    class: usize,
}

#[derive(Clone, Debug)]
struct Need {
    form: Arc<FormInput>,
    datum: CuspDatum,
    k: usize,
    digits: f64,
    decay: f64,
}

struct Series {
    coeffs: Vec<Complex64>,
    w: u64,
}

/// One expansion per (form, native cusp), shared across all requests.
pub struct ExpansionProvider {
    opts: ProviderOptions,
    needs: Mutex<BTreeMap<LeafKey, Need>>,
    done: BTreeMap<LeafKey, (String, Arc<CuspExpansion>)>,
}

/// A request for `F|[β·τ_H]` with `K` coefficients.
#[derive(Clone, Debug)]
pub struct Request {
    pub form: Arc<FormInput>,
    pub beta: IntMatrix2,
    pub width: u64,
    pub k: usize,
    pub digits: f64,
    /// Wanted error growth `e^{C·n}` per coefficient index.
    pub decay: f64,
}

impl ExpansionProvider {
    pub fn new(opts: ProviderOptions) -> Self {
        ExpansionProvider { opts, needs: Mutex::new(BTreeMap::new()), done: BTreeMap::new() }
    }

    /// Records what `req` needs without computing anything.
    pub fn plan(&self, req: &Request) -> Result<(), ExpandError> {
        self.walk(&req.form, req.beta, &top_target(req), true).map(|_| ())
    }

    /// Computes every planned native expansion.
    pub fn compute(&mut self) -> Result<(), ExpandError> {
        let needs: Vec<(LeafKey, Need)> =
            std::mem::take(&mut *self.needs.lock().expect("poisoned")).into_iter().collect();
        let opts = self.opts;
        let results = opts.exec.map(&needs, |(_, need)| native_expansion(need, &opts));
        for ((key, need), r) in needs.into_iter().zip(results) {
            self.done.insert(key, (need.form.label.clone(), Arc::new(r?)));
        }
        Ok(())
    }

    /// Native expansions computed so far, with the label of their form.
    pub fn expansions(&self) -> impl Iterator<Item = (&str, &CuspExpansion)> {
        self.done.values().map(|(l, e)| (l.as_str(), e.as_ref()))
    }

    /// `b₀..b_K` of `F|[β·τ_H]`, after [`plan`](Self::plan) and
    /// [`compute`](Self::compute).
    pub fn get(&self, req: &Request) -> Result<Vec<Complex64>, ExpandError> {
        let series = self.walk(&req.form, req.beta, &top_target(req), false)?;
        let h = req.width;
        let factor = (h as f64).powf(req.form.weight as f64 / 2.0);
        let mut out = vec![Complex64::new(0.0, 0.0); req.k + 1];
        let peak = series.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (n, c) in series.coeffs.iter().enumerate() {
            let t = n as u128 * h as u128;
            if t % series.w as u128 != 0 {
                if c.norm() > 1e-6 * peak.max(1e-300) {
                    return Err(CuspError::WidthMismatch { native: series.w, target: h }.into());
                }
                continue;
            }
            let idx = (t / series.w as u128) as usize;
            if idx <= req.k {
                out[idx] = factor * c;
            }
        }
        Ok(out)
    }

    fn walk(&self, f: &Arc<FormInput>, beta: IntMatrix2, target: &Target, planning: bool) -> Result<Series, ExpandError> {
        let k = f.weight as f64;
        match &f.structure {
            Structure::Dilation { m, base } => {
                let deg = transport_degeneracy(*m, &beta)?;
                let (m1, m2) = (deg.m1, deg.m2);
                let scale = (*m as f64).powf(-k / 2.0) * (m1 as f64 / m2 as f64).powf(k / 2.0);
                let inner = Target {
                    budget: target.budget.scale(m2, m1),
                    digits: target.digits + scale.log10(),
                    decay: target.decay * m1 as f64 / m2 as f64,
                };
                let s = self.walk(base, deg.inner, &inner, planning)?;
                let w = m2 * s.w;
                let mut coeffs = vec![Complex64::new(0.0, 0.0); (s.coeffs.len() - 1) * m1 as usize + 1];
                for (n, c) in s.coeffs.iter().enumerate() {
                    let phase = root_of_unity((n as i128 * deg.y as i128).rem_euclid(w as i128) as i64, w);
                    coeffs[n * m1 as usize] = scale * phase * c;
                }
                Ok(Series { coeffs, w })
            }
            Structure::Combination(terms) => {
                let count = terms.len() as f64;
                let mut parts = Vec::with_capacity(terms.len());
                for (c, g) in terms {
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let inner = Target { digits: target.digits + (c.norm() * count).log10(), ..*target };
                    parts.push((*c, self.walk(g, beta, &inner, planning)?));
                }
                let w = parts.iter().fold(1, |w, (_, s)| lcm(w, s.w));
                let len = target.budget.max_index(w) + 1;
                let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
                for (c, s) in parts {
                    let step = (w / s.w) as usize;
                    for (n, v) in s.coeffs.iter().enumerate() {
                        if n * step < len {
                            coeffs[n * step] += c * v;
                        }
                    }
                }
                Ok(Series { coeffs, w })
            }
            Structure::Plain => self.leaf(f, beta, target, planning),
        }
    }

    fn leaf(&self, f: &Arc<FormInput>, beta: IntMatrix2, target: &Target, planning: bool) -> Result<Series, ExpandError> {
        let level = f.level;
        let chi = f.character_at_level();
        let class = cusp_class(level, &beta)?;
        let datum = CuspDatum::new(level, &chi, enumerate_cusps(level)[class])?;
        let hp = datum.h;
        let kmax = target.budget.max_index(hp).max(1);
        let kw = f.weight as f64 / 2.0;
        let key = LeafKey { coeffs: Arc::as_ptr(&f.coeffs) as usize, level, class };
        let native = if datum.is_infinity() {
            if kmax > f.n_max() {
                return Err(ModformError::InsufficientCoefficients { needed: kmax, available: f.n_max() }.into());
            }
            None
        } else if planning {
            let need = Need {
                form: f.clone(),
                datum: datum.clone(),
                k: kmax,
                digits: target.digits - kw * (hp as f64).log10(),
                decay: target.decay / hp as f64,
            };
            let mut needs = self.needs.lock().expect("poisoned");
            needs
                .entry(key)
                .and_modify(|n| {
                    n.k = n.k.max(need.k);
                    n.digits = n.digits.max(need.digits);
                    n.decay = n.decay.min(need.decay);
                })
                .or_insert(need);
            return Ok(Series { coeffs: vec![Complex64::new(0.0, 0.0); kmax + 1], w: hp });
        } else {
            let (_, e) =
                self.done.get(&key).ok_or_else(|| ExpandError::Invalid("expansion was not planned".into()))?;
            if e.k() < kmax {
                return Err(ExpandError::Invalid(format!("planned {} coefficients, need {kmax}", e.k())));
            }
            Some(e.clone())
        };
        let eq = find_equivalence(level, &datum.alpha1, &beta, level * hp)?;
        let chi_factor = chi.eval(eq.gamma.d) * (hp as f64).powf(-kw);
        let coeffs = (0..=kmax)
            .map(|n| {
                let b = match &native {
                    Some(e) => e.coeffs[n],
                    None => f.coeff(n) * chi.eval(datum.alpha1.d),
                };
                let phase = root_of_unity((n as i128 * eq.x as i128).rem_euclid(hp as i128) as i64, hp);
                chi_factor * phase * b
            })
            .collect();
        Ok(Series { coeffs, w: hp })
    }
}

fn top_target(req: &Request) -> Target {
    let kw = req.form.weight as f64 / 2.0;
    Target {
        budget: Budget { num: req.k as u64, den: req.width },
        digits: req.digits + kw * (req.width as f64).log10(),
        decay: req.decay * req.width as f64,
    }
}

/// Whether the eigenbasis method applies to `f` at `datum`.
pub fn eigen_applicable(f: &FormInput, datum: &CuspDatum) -> bool {
    enumerate_twist_basis(f, datum).is_ok()
}

fn native_expansion(need: &Need, opts: &ProviderOptions) -> Result<CuspExpansion, ExpandError> {
    let f = &need.form;
    let digits = need.digits.max(1.0);
    let decay = need.decay.max(1e-3);
    let use_eigen = match opts.method {
        MethodChoice::Direct => false,
        MethodChoice::Eigen => true,
        MethodChoice::Auto => eigen_applicable(f, &need.datum),
    };
    // Serial inside: the provider already spreads expansions over the pool.
    let inner = Exec::Sequential;
    if use_eigen {
        let basis = enumerate_twist_basis(f, &need.datum)?;
        let params = EigenParams { digits, k: need.k, decay, seed: opts.seed };
        match expand_eigen(f, &need.datum, basis, &params, inner) {
            Ok(e) => Ok(e.expansion),
            Err(ExpandError::Numeric(NumericError::Singular { .. })) if opts.method == MethodChoice::Auto => {
                direct(need, digits, decay, opts.seed)
            }
            Err(e) => Err(e),
        }
    } else {
        direct(need, digits, decay, opts.seed)
    }
}

fn direct(need: &Need, digits: f64, decay: f64, seed: u64) -> Result<CuspExpansion, ExpandError> {
    let params = DirectParams::tail_compensated(&need.form, digits, need.k, decay, seed);
    let mut e = expand_direct(&need.form, &need.datum, &params, Exec::Sequential)?;
    debug_assert_eq!(e.method, Method::Direct);
    e.error.digits = digits;
    Ok(e)
}
