use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cuspidal::arith::{CharacterSpec, DirichletCharacter, IntMatrix2};
use cuspidal::cusps::{Cusp, CuspDatum};
use cuspidal::exec::{set_threads, Exec};
use cuspidal::expand::{
    enumerate_twist_basis, expand_direct, expand_eigen, CuspExpansion, DirectParams, EigenExpansion, EigenParams,
    ExpansionReport,
};
use cuspidal::modform::{
    eta_level, eta_quotient, level1_newforms, to_complex, true_twist, FormFile, FormFlags, FormInput, FormRef, MinimalTwist,
    MinimalTwistSpec, SCHEMA,
};
use cuspidal::petersson::{
    petersson_pair, petersson_ratio, petersson_triple, ratio_check, LocalFactorSpec, MethodChoice, PeterssonParams,
};
use serde_json::{json, Value};

const MAX_DIGITS: f64 = 13.0;

#[derive(Parser)]
#[command(name = "cuspidal", version, about = "Cusp expansions and Petersson inner products of modular forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expansion of a form at one cusp or at all cusps of Γ₀(N).
    Expand(ExpandArgs),
    /// ⟨f, g⟩.
    Petersson(PairArgs),
    /// ⟨fg, h⟩ and its squared absolute value.
    Triple(TripleArgs),
    /// ⟨f, g⟩ / ⟨h, h⟩.
    Ratio(TripleArgs),
    /// Compares a computed value with an L-value through a closed-form
    /// constant: ⟨f, f⟩ for adjoint specs, |⟨fg, h⟩|² for Ichino specs.
    Check(CheckArgs),
    /// Writes a form file with explicit coefficients.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Eigen,
    Auto,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => MethodChoice::Direct,
            MethodArg::Eigen => MethodChoice::Eigen,
            MethodArg::Auto => MethodChoice::Auto,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// Accuracy 10^-E (at most 13).
    #[arg(long, default_value_t = 12.0)]
    digits: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    #[arg(long)]
    threads: Option<usize>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    form: PathBuf,
    /// `all`, a cusp `a/c`, or a matrix `a,b,c,d` in SL₂(Z).
    #[arg(long, default_value = "all")]
    cusp: String,
    /// K₀, the number of coefficients wanted.
    #[arg(long, default_value_t = 20)]
    coeffs: usize,
    /// C₀, the growth rate of the error envelope.
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TripleArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    h: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: Option<PathBuf>,
    #[arg(long)]
    h: Option<PathBuf>,
    #[arg(long)]
    lvalue: f64,
    /// JSON local-factor spec; may carry a `tolerance` (default 1e-5).
    #[arg(long)]
    local_spec: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenerateArgs {
    /// Eta quotient `d:r,d:r,...`, e.g. `1:24`.
    #[arg(long, conflicts_with_all = ["level1", "twist", "form"])]
    eta: Option<String>,
    /// Level-1 newforms of this weight.
    #[arg(long, conflicts_with_all = ["twist", "form"])]
    level1: Option<u32>,
    /// Form to twist by `--char`.
    #[arg(long, requires = "char", conflicts_with = "form")]
    twist: Option<PathBuf>,
    /// Character `N:t` or `N:q=t|t,q=t` (exponents as fractions of a turn on
    /// the canonical generators), or inline JSON.
    #[arg(long)]
    char: Option<String>,
    /// Any form file (eta, level1, dilation, combination, ...) to write out
    /// with explicit coefficients.
    #[arg(long)]
    form: Option<PathBuf>,
    /// Flags an eta quotient as a newform and Hecke eigenform.
    #[arg(long, requires = "eta")]
    newform: bool,
    /// Flags an eta quotient as twist-minimal (implies --newform).
    #[arg(long, requires = "eta")]
    twist_minimal: bool,
    /// Number of coefficients.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes, mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn numeric<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Numeric(e.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Expand(a) => a.common.out.clone(),
        Command::Petersson(a) => a.common.out.clone(),
        Command::Triple(a) | Command::Ratio(a) => a.common.out.clone(),
        Command::Check(a) => a.common.out.clone(),
        Command::Generate(a) => a.out.clone(),
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e:#}");
            let report = json!({"schema": SCHEMA, "kind": "error", "error": format!("{e:#}")});
            if let Err(w) = emit(out.as_deref(), &report) {
                eprintln!("error: {w:#}");
            }
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Expand(a) => cmd_expand(a),
        Command::Petersson(a) => cmd_petersson(a),
        Command::Triple(a) => cmd_triple(a),
        Command::Ratio(a) => cmd_ratio(a),
        Command::Check(a) => cmd_check(a),
        Command::Generate(a) => cmd_generate(a),
    }
}

fn emit(out: Option<&Path>, value: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn load(path: &Path) -> anyhow::Result<Arc<FormInput>> {
    Ok(Arc::new(FormInput::load(path).with_context(|| format!("loading {}", path.display()))?))
}

impl Common {
    fn setup(&self) -> anyhow::Result<PeterssonParams> {
        if !(self.digits > 0.0 && self.digits <= MAX_DIGITS) {
            bail!("--digits must be in (0, {MAX_DIGITS}]");
        }
        if let Some(t) = self.threads {
            set_threads(t).map_err(|e| anyhow!(e))?;
        }
        Ok(PeterssonParams { digits: self.digits, method: self.method.into(), seed: self.seed, exec: Exec::Parallel })
    }
}

fn parse_cusp(s: &str, f: &FormInput) -> anyhow::Result<Vec<CuspDatum>> {
    let chi = f.character_at_level();
    if s == "all" {
        return Ok(CuspDatum::all(f.level, &chi)?);
    }
    if s.contains(',') {
        let v: Vec<i64> = s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>()?;
        let [a, b, c, d] = v[..] else { bail!("a matrix cusp needs four entries a,b,c,d") };
        return Ok(vec![CuspDatum::with_matrix(f.level, &chi, IntMatrix2::new(a, b, c, d))?]);
    }
    let cusp: Cusp = s.parse().map_err(|e: String| anyhow!(e))?;
    Ok(vec![CuspDatum::new(f.level, &chi, cusp)?])
}

fn cmd_expand(a: ExpandArgs) -> Result<ExitCode, Failure> {
    let params = a.common.setup()?;
    let f = load(&a.form)?;
    let data = parse_cusp(&a.cusp, &f)?;
    let mut results: Vec<(CuspExpansion, Option<EigenExpansion>)> = Vec::new();
    for datum in data {
        if datum.is_infinity() && datum.alpha1.in_gamma0(f.level) && datum.h == 1 {
            results.push((numeric(CuspExpansion::from_input(&f, &datum, a.coeffs))?, None));
            continue;
        }
        let eigen = match params.method {
            MethodChoice::Direct => false,
            MethodChoice::Eigen => true,
            MethodChoice::Auto => enumerate_twist_basis(&f, &datum).is_ok(),
        };
        if eigen {
            let basis = enumerate_twist_basis(&f, &datum)?;
            let p = EigenParams { digits: params.digits, k: a.coeffs, decay: a.decay, seed: params.seed };
            let e = numeric(expand_eigen(&f, &datum, basis, &p, params.exec))?;
            results.push((e.expansion.clone(), Some(e)));
        } else {
            let p = DirectParams::tail_compensated(&f, params.digits, a.coeffs, a.decay, params.seed);
            let mut e = numeric(expand_direct(&f, &datum, &p, params.exec))?;
            e.error.digits = params.digits;
            results.push((e, None));
        }
    }
    for (e, _) in &results {
        let shown: Vec<String> = e.coeffs.iter().skip(1).take(6).map(|c| format!("{:.6}", c)).collect();
        eprintln!("{} at {}: h = {}, {:?}, b1.. = {}", f.label, e.datum.cusp, e.datum.h, e.method, shown.join(", "));
    }
    let reports: Vec<Value> = results
        .iter()
        .map(|(e, eig)| serde_json::to_value(ExpansionReport::new(&f.label, e, eig.as_ref())))
        .collect::<Result<_, _>>()?;
    let value = if a.cusp == "all" {
        json!({"schema": SCHEMA, "kind": "expansions", "form": f.label, "level": f.level, "reports": reports})
    } else {
        reports.into_iter().next().expect("one cusp")
    };
    emit(a.common.out.as_deref(), &value)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_petersson(a: PairArgs) -> Result<ExitCode, Failure> {
    let params = a.common.setup()?;
    let (f, g) = (load(&a.f)?, load(&a.g)?);
    let r = numeric(petersson_pair(&f, &g, &params))?;
    eprintln!("<{}, {}> = {:.12e} {:+.3e}i (level {}, {} cusps)", f.label, g.label, r.value.re, r.value.im, r.level, r.cusps.len());
    emit(a.common.out.as_deref(), &serde_json::to_value(&r)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_triple(a: TripleArgs) -> Result<ExitCode, Failure> {
    let params = a.common.setup()?;
    let (f, g, h) = (load(&a.f)?, load(&a.g)?, load(&a.h)?);
    let r = numeric(petersson_triple(&f, &g, &h, &params))?;
    eprintln!("|<{}·{}, {}>|² = {:.12e}", f.label, g.label, h.label, r.abs_squared.unwrap_or_default());
    if let Some(note) = &r.note {
        eprintln!("note: {note}");
    }
    emit(a.common.out.as_deref(), &serde_json::to_value(&r)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ratio(a: TripleArgs) -> Result<ExitCode, Failure> {
    let params = a.common.setup()?;
    let (f, g, h) = (load(&a.f)?, load(&a.g)?, load(&a.h)?);
    let r = numeric(petersson_ratio(&f, &g, &h, &h, &params))?;
    eprintln!("<{}, {}>/<{}, {}> = {:.12e} {:+.12e}i", f.label, g.label, h.label, h.label, r.value.re, r.value.im);
    emit(a.common.out.as_deref(), &serde_json::to_value(&r)?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize)]
struct CheckFile {
    #[serde(flatten)]
    spec: LocalFactorSpec,
    #[serde(default)]
    tolerance: Option<f64>,
}

fn cmd_check(a: CheckArgs) -> Result<ExitCode, Failure> {
    let params = a.common.setup()?;
    let text = std::fs::read_to_string(&a.local_spec).with_context(|| format!("reading {}", a.local_spec.display()))?;
    let file: CheckFile = serde_json::from_str(&text).context("parsing the local-factor spec")?;
    let tolerance = file.tolerance.unwrap_or(1e-5);
    let f = load(&a.f)?;
    let (value, report) = match &file.spec {
        LocalFactorSpec::Adjoint { .. } => {
            let g = a.g.as_deref().map(load).transpose()?.unwrap_or_else(|| f.clone());
            let r = numeric(petersson_pair(&f, &g, &params))?;
            (r.value.re, serde_json::to_value(&r)?)
        }
        LocalFactorSpec::Ichino { .. } => {
            let (Some(g), Some(h)) = (&a.g, &a.h) else {
                return Err(anyhow!("an Ichino check needs --f, --g and --h").into());
            };
            let r = numeric(petersson_triple(&f, &load(g)?, &load(h)?, &params))?;
            (r.abs_squared.unwrap_or_default(), serde_json::to_value(&r)?)
        }
    };
    let constant = file.spec.constant();
    let check = ratio_check(value, a.lvalue, constant, file.spec.relation(), tolerance);
    eprintln!(
        "{}  value {:.10e}  L {:.10}  constant {:.10e}  deviation {:.2e}  (tolerance {:.0e})",
        if check.pass { "PASS" } else { "FAIL" },
        check.value,
        check.l_value,
        check.constant,
        check.deviation,
        check.tolerance
    );
    let out = json!({"schema": SCHEMA, "kind": "check", "spec": file.spec, "check": check, "computation": report});
    emit(a.common.out.as_deref(), &out)?;
    Ok(if check.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// `N:t`, `N:t|t` or `N:q=t|t,q=t`, with `t` a fraction `a/b` or `0`.
fn parse_char(s: &str) -> anyhow::Result<DirichletCharacter> {
    let s = s.trim();
    if s.starts_with('{') {
        let spec: CharacterSpec = serde_json::from_str(s)?;
        return Ok(DirichletCharacter::from_spec(&spec)?);
    }
    let (modulus, rest) = s.split_once(':').ok_or_else(|| anyhow!("character '{s}' is not of the form N:..."))?;
    let modulus: u64 = modulus.trim().parse()?;
    let frac = |t: &str| -> anyhow::Result<(i64, u64)> {
        match t.split_once('/') {
            Some((a, b)) => Ok((a.trim().parse()?, b.trim().parse()?)),
            None => Ok((t.trim().parse()?, 1)),
        }
    };
    let mut exps = Vec::new();
    for part in rest.split(',') {
        let (q, ts) = match part.split_once('=') {
            Some((q, ts)) => (q.trim().parse()?, ts),
            None => (modulus, part),
        };
        exps.push((q, ts.split('|').map(frac).collect::<anyhow::Result<Vec<_>>>()?));
    }
    Ok(DirichletCharacter::from_rational_exponents(modulus, &exps)?)
}

fn parse_eta(s: &str) -> anyhow::Result<Vec<(u64, i64)>> {
    s.split(',')
        .map(|p| {
            let (d, r) = p.split_once(':').ok_or_else(|| anyhow!("eta factor '{p}' is not d:r"))?;
            Ok((d.trim().parse()?, r.trim().parse()?))
        })
        .collect()
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode, Failure> {
    let newform = FormFlags { is_newform: true, prime_to_n_eigenform: true, twist_minimal: false };
    let forms: Vec<FormInput> = if let Some(spec) = &a.eta {
        let spec = parse_eta(spec)?;
        let level = eta_level(&spec)?;
        let weight: i64 = spec.iter().map(|&(_, r)| r).sum::<i64>() / 2;
        if weight <= 0 {
            return Err(anyhow!("eta quotient of non-positive weight").into());
        }
        let coeffs = to_complex(&eta_quotient(&spec, a.n)?);
        let chi = DirichletCharacter::trivial(level);
        let eigen = a.newform || a.twist_minimal;
        let flags = FormFlags { is_newform: eigen, prime_to_n_eigenform: eigen, twist_minimal: a.twist_minimal };
        vec![FormInput::new(format!("eta_{}", a.eta.as_deref().unwrap_or_default()), weight as u32, level, chi, coeffs, flags)?]
    } else if let Some(m) = a.level1 {
        level1_newforms(m, a.n)?
    } else if let Some(path) = &a.twist {
        let base = load(path)?;
        let nu = parse_char(a.char.as_deref().expect("required by clap"))?;
        let tw = true_twist(&base, &nu)?;
        let mut coeffs = tw.coeffs;
        coeffs.truncate(a.n + 1);
        let mut f = FormInput::new(format!("{}_twist", base.label), base.weight, tw.level, tw.character, coeffs, newform)?;
        f.minimal_twist = Some(MinimalTwist { form: base.clone(), character: nu });
        vec![f]
    } else if let Some(path) = &a.form {
        let mut f = (*load(path)?).clone();
        let mut coeffs = f.coeffs.to_vec();
        coeffs.truncate(a.n + 1);
        f = f.with_coeffs(coeffs);
        vec![f]
    } else {
        return Err(anyhow!("one of --eta, --level1, --twist or --form is required").into());
    };
    let files: Vec<Value> = forms
        .iter()
        .map(|f| {
            let mut file = FormFile::from_form(f);
            if let Some(mt) = &f.minimal_twist {
                if let Some(p) = &a.twist {
                    let path = std::fs::canonicalize(p).unwrap_or_else(|_| p.clone());
                    file.minimal_twist = Some(MinimalTwistSpec {
                        form: FormRef::Path(path.display().to_string()),
                        character: mt.character.to_spec(),
                    });
                }
            }
            serde_json::to_value(file)
        })
        .collect::<Result<_, _>>()?;
    for f in &forms {
        eprintln!("{}: weight {}, level {}, {} coefficients", f.label, f.weight, f.level, f.n_max());
    }
    match (&a.out, files.len()) {
        (_, 1) => emit(a.out.as_deref(), &files[0])?,
        (Some(out), _) => {
            let stem = out.with_extension("");
            for (i, v) in files.iter().enumerate() {
                emit(Some(&PathBuf::from(format!("{}_{i}.json", stem.display()))), v)?;
            }
        }
        (None, _) => emit(None, &Value::Array(files))?,
    }
    Ok(ExitCode::SUCCESS)
}
