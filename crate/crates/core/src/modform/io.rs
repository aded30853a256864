//! Form JSON files (`"schema": "cuspidal/1"`).
//!
//! Coefficients come from exactly one of `coefficients` (explicit `[re, im]`
//! pairs from n = 1), `eta` (`[[d, r], ...]`), `level1` (`{"weight": m,
//! "index": i}`), `dilation` or `combination`. Nested forms are either inline
//! objects or paths relative to the referencing file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    dilate, eta_quotient, level1_newforms, to_complex, FormFlags, FormInput, MinimalTwist,
    ModformError, Structure,
};
use crate::arith::{CharacterSpec, DirichletCharacter};

pub const SCHEMA: &str = "cuspidal/1";
const DEFAULT_N_MAX: usize = 1000;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormRef {
    Path(String),
    Inline(Box<FormFile>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Level1Spec {
    pub weight: u32,
    #[serde(default)]
    pub index: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilationSpec {
    pub m: u64,
    pub form: FormRef,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombinationTerm {
    pub coefficient: [f64; 2],
    pub form: FormRef,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimalTwistSpec {
    pub form: FormRef,
    pub character: CharacterSpec,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FormFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub character: Option<CharacterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<(u64, i64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level1: Option<Level1Spec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub flags: FormFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newform: Option<FormRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimal_twist: Option<MinimalTwistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<DilationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combination: Option<Vec<CombinationTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

fn io_err(e: impl std::fmt::Display) -> ModformError {
    ModformError::Io(e.to_string())
}

impl FormRef {
    fn resolve(&self, base: &Path) -> Result<Arc<FormInput>, ModformError> {
        match self {
            FormRef::Path(p) => Ok(Arc::new(FormInput::load(base.join(p))?)),
            FormRef::Inline(f) => Ok(Arc::new(f.build(base)?)),
        }
    }
}

impl FormFile {
    pub fn parse(text: &str) -> Result<FormFile, ModformError> {
        let f: FormFile = serde_json::from_str(text).map_err(io_err)?;
        if let Some(s) = &f.schema {
            if s != SCHEMA {
                return Err(ModformError::Io(format!("unsupported schema {s:?}, expected {SCHEMA:?}")));
            }
        }
        Ok(f)
    }

    /// Builds the form; `base` is the directory relative paths refer to.
    pub fn build(&self, base: &Path) -> Result<FormInput, ModformError> {
        let n_max = self.n_max.unwrap_or(DEFAULT_N_MAX);
        let sources = [
            self.coefficients.is_some(),
            self.eta.is_some(),
            self.level1.is_some(),
            self.dilation.is_some(),
            self.combination.is_some(),
        ];
        if sources.iter().filter(|b| **b).count() != 1 {
            return Err(ModformError::Invalid(
                "exactly one of coefficients, eta, level1, dilation, combination is required".into(),
            ));
        }
        let mut form = if let Some(d) = &self.dilation {
            dilate(&d.form.resolve(base)?, d.m)
        } else if let Some(terms) = &self.combination {
            self.combine(terms, base)?
        } else if let Some(l1) = &self.level1 {
            let mut forms = level1_newforms(l1.weight, n_max)?;
            if l1.index >= forms.len() {
                return Err(ModformError::Invalid(format!("level1 index {} out of range", l1.index)));
            }
            forms.swap_remove(l1.index)
        } else {
            let coeffs = if let Some(spec) = &self.eta {
                to_complex(&eta_quotient(spec, n_max)?)
            } else {
                let raw = self.coefficients.as_ref().expect("checked above");
                std::iter::once(Complex64::new(0.0, 0.0))
                    .chain(raw.iter().map(|[re, im]| Complex64::new(*re, *im)))
                    .collect()
            };
            let (weight, level) = match (self.weight, self.level) {
                (Some(w), Some(l)) => (w, l),
                _ => return Err(ModformError::Invalid("weight and level are required".into())),
            };
            let chi = self.character_or_trivial(level)?;
            FormInput::new(self.label.clone().unwrap_or_default(), weight, level, chi, coeffs, self.flags)?
        };
        if let Some(w) = self.weight {
            if w != form.weight {
                return Err(ModformError::Invalid(format!("declared weight {w}, built {}", form.weight)));
            }
        }
        if let Some(l) = self.level {
            if form.level % l != 0 && l % form.level != 0 {
                return Err(ModformError::Invalid(format!("declared level {l}, built {}", form.level)));
            }
            form.level = l.max(form.level);
        }
        if let Some(spec) = &self.character {
            form.character = DirichletCharacter::from_spec(spec)?;
        }
        if let Some(label) = &self.label {
            form.label = label.clone();
        }
        if self.dilation.is_some() || self.combination.is_some() || self.level1.is_some() {
            form.flags = FormFlags {
                is_newform: self.flags.is_newform || form.flags.is_newform,
                prime_to_n_eigenform: self.flags.prime_to_n_eigenform || form.flags.prime_to_n_eigenform,
                twist_minimal: self.flags.twist_minimal || form.flags.twist_minimal,
            };
        }
        if let Some(nf) = &self.newform {
            form.newform = Some(nf.resolve(base)?);
        }
        if let Some(mt) = &self.minimal_twist {
            form.minimal_twist = Some(MinimalTwist {
                form: mt.form.resolve(base)?,
                character: DirichletCharacter::from_spec(&mt.character)?,
            });
        }
        form.validate()?;
        Ok(form)
    }

    fn character_or_trivial(&self, level: u64) -> Result<DirichletCharacter, ModformError> {
        Ok(match &self.character {
            Some(spec) => DirichletCharacter::from_spec(spec)?,
            None => DirichletCharacter::trivial(level),
        })
    }

    fn combine(&self, terms: &[CombinationTerm], base: &Path) -> Result<FormInput, ModformError> {
        let parts = terms
            .iter()
            .map(|t| Ok((Complex64::new(t.coefficient[0], t.coefficient[1]), t.form.resolve(base)?)))
            .collect::<Result<Vec<_>, ModformError>>()?;
        let first = &parts.first().ok_or_else(|| ModformError::Invalid("empty combination".into()))?.1;
        let len = parts.iter().map(|(_, g)| g.coeffs.len()).min().expect("nonempty");
        let level = parts.iter().fold(1, |l, (_, g)| crate::arith::lcm(l, g.level));
        let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
        for (c, g) in &parts {
            if g.weight != first.weight {
                return Err(ModformError::Invalid("combination mixes weights".into()));
            }
            for (n, slot) in coeffs.iter_mut().enumerate() {
                *slot += c * g.coeffs[n];
            }
        }
        Ok(FormInput {
            label: self.label.clone().unwrap_or_default(),
            weight: first.weight,
            level,
            character: first.character.clone(),
            coeffs: Arc::new(coeffs),
            flags: FormFlags::default(),
            structure: Structure::Combination(parts.clone()),
            newform: first.associated_newform(),
            minimal_twist: None,
        })
    }

    /// Explicit-coefficient file for `f` (structure and references dropped).
    pub fn from_form(f: &FormInput) -> FormFile {
        FormFile {
            schema: Some(SCHEMA.into()),
            label: Some(f.label.clone()),
            weight: Some(f.weight),
            level: Some(f.level),
            character: Some(f.character.to_spec()),
            coefficients: Some(f.coeffs.iter().skip(1).map(|a| [a.re, a.im]).collect()),
            flags: f.flags,
            ..FormFile::default()
        }
    }
}

impl FormInput {
    pub fn load(path: impl AsRef<Path>) -> Result<FormInput, ModformError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        let mut f = FormFile::parse(&text)?.build(&base)?;
        if f.label.is_empty() {
            f.label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<FormInput, ModformError> {
        FormFile::parse(text)?.build(Path::new("."))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FormFile::from_form(self)).expect("serializable")
    }
}
