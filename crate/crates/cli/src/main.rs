mod cache;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use mjf_core::cyclotomic::complex_json;
use mjf_core::diffops::{apply_operator, check_annihilation, OpId, OperatorSpec, StencilConfig};
use mjf_core::jacobigroup::{Evaluatable, TorsionPoint};
use mjf_core::lattice::{parse_vector, vector_json, DiscElement, Frame, Lattice};
use mjf_core::mu::{mu_hat_ll, mu_hat_ml, mu_m_eval, mu_two_var, negative_rank_one, splitting_residual, theta_ml, MuLatticeData};
use mjf_core::qseries::{ExactSeries, FloatSeries};
use mjf_core::rational::fmt_rat;
use mjf_core::specfun::theta_definite;
use mjf_core::theta::{value_json, ThetaSpec};
use mjf_core::verify::{run_all, run_suites, SuiteParams, SUITES};
use mjf_core::{Error, Point, Precision, Result, C64};

use cache::{Cache, Status};

const SCHEMA: &str = "mjf/1";

#[derive(Parser)]
#[command(name = "mjf", version, about = "Indefinite theta series, mu-functions and Jacobi-group operators")]
struct Cli {
    /// Target absolute accuracy of series evaluations, in (0, 1e-3].
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Output format (json for evaluation commands, text for verify by default).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Shorthand for --format json.
    #[arg(long, global = true)]
    json: bool,
    /// Cache directory; overrides MJF_CACHE_DIR and ~/.cache/indef-theta-lab.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lattice invariants.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Indefinite theta series θ^{E,E'}.
    Theta {
        #[command(subcommand)]
        cmd: ThetaCmd,
    },
    /// μ-functions.
    Mu {
        #[command(subcommand)]
        cmd: MuCmd,
    },
    /// Jacobi-group differential operators.
    Op {
        #[command(subcommand)]
        cmd: OpCmd,
    },
    /// Verification suites; exit status 0 all pass, 1 any failure, 2 bad configuration.
    Verify(VerifyArgs),
    /// Result cache maintenance.
    Cache {
        #[command(subcommand)]
        cmd: CacheCmd,
    },
    /// q-series stored as JSON.
    Series {
        #[command(subcommand)]
        cmd: SeriesCmd,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Signature, determinants, radical, parity.
    Analyze(LatticeArgs),
}

#[derive(Args, Clone, Default)]
struct LatticeArgs {
    /// Matrix such as '[[3,4],[4,3]]'; entries are integers or "p/q" strings.
    #[arg(long)]
    inline: Option<String>,
    /// paper-L (Q(x) = xᵀLx) or gram (Q(x) = ½xᵀGx).
    #[arg(long)]
    mode: Option<String>,
    /// Document whose "input" block (or top level) holds the fields.
    #[arg(long)]
    from_json: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct PointArgs {
    /// τ as "re,im" or "a+bi".
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// z as semicolon-separated complex numbers.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
}

#[derive(Args, Clone, Default)]
struct ThetaArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Partial frame E as a list of vectors.
    #[arg(long = "e")]
    e: Option<String>,
    /// Partial frame E' as a list of vectors.
    #[arg(long = "ep")]
    ep: Option<String>,
    /// Component shift λ ∈ L^♯ as a rational vector.
    #[arg(long)]
    shift: Option<String>,
}

#[derive(Subcommand)]
enum ThetaCmd {
    /// θ^{E,E'}_{L,λ}(τ, z) with its truncation certificate.
    Eval {
        #[command(flatten)]
        theta: ThetaArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// All discriminant-group components at (τ, z).
    Components {
        #[command(flatten)]
        theta: ThetaArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Exact q-expansion of the holomorphic part at z = ατ + β.
    Qexp {
        #[command(flatten)]
        theta: ThetaArgs,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        /// Highest exponent (exclusive), as "p/q".
        #[arg(long)]
        order: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MuKind {
    /// Two-variable μ(τ; u, v).
    TwoVar,
    /// μ_m(τ; z₁, z₂).
    M,
    /// μ̂_{m,l}(τ, z).
    Hat,
    /// θ_{m,l}(τ, z).
    ThetaMl,
    /// μ̂_{L,l} for a lattice with a negative frame.
    Lattice,
}

impl MuKind {
    fn as_str(&self) -> &'static str {
        match self {
            MuKind::TwoVar => "two-var",
            MuKind::M => "m",
            MuKind::Hat => "hat",
            MuKind::ThetaMl => "theta-ml",
            MuKind::Lattice => "lattice",
        }
    }
}

#[derive(Args, Clone, Default)]
struct MuArgs {
    #[arg(long, value_enum)]
    kind: Option<MuKind>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    /// z, or z₁;z₂ for --kind m.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    /// Component index l (integer), or a rational vector for --kind lattice.
    #[arg(long, allow_hyphen_values = true)]
    l: Option<String>,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Negative frame for --kind lattice.
    #[arg(long)]
    frame: Option<String>,
}

#[derive(Subcommand)]
enum MuCmd {
    Eval(MuArgs),
    /// μ̂(u,v) splitting residual at (τ, u, v).
    Residual(MuArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    /// θ^{E,E'} (needs --inline, --e, --ep).
    Theta,
    /// Positive-definite theta component (needs --inline, --shift).
    ThetaDefinite,
    /// μ̂_{m,l} (needs --m, --l).
    MuHat,
}

impl Target {
    fn as_str(&self) -> &'static str {
        match self {
            Target::Theta => "theta",
            Target::ThetaDefinite => "theta-definite",
            Target::MuHat => "mu-hat",
        }
    }
}

#[derive(Args, Clone, Default)]
struct OpArgs {
    /// Operator name (Xminus, Xplus, Yminus_e, Yplus_e, Laplacian_k, Casimir, HeisLaplacian_e, Heat, HeatE, Xi, XiE, XiHE).
    #[arg(long)]
    op: Option<String>,
    /// Weight k.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Frame for frame-dependent operators.
    #[arg(long)]
    frame: Option<String>,
    #[arg(long, value_enum)]
    target: Option<Target>,
    #[command(flatten)]
    theta: ThetaArgs,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    l: Option<i64>,
    /// τ; repeat together with --z for several points.
    #[arg(long, allow_hyphen_values = true)]
    tau: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    z: Vec<String>,
}

#[derive(Subcommand)]
enum OpCmd {
    /// Value of the operator applied to the target at the first point.
    Apply(OpArgs),
    /// Annihilation check with h-sweep at every point; exit 1 when not annihilated.
    Check(OpArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite id or "all".
    suite: String,
    #[arg(long, default_value_t = 1)]
    copies: usize,
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    order: i64,
}

#[derive(Subcommand)]
enum CacheCmd {
    Clear,
    Stats,
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// Evaluates a stored q-series (as emitted by `theta qexp`) at τ.
    Eval {
        #[arg(long)]
        from_json: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
}

struct Ctx {
    prec: Precision,
    format: Format,
    cache: Cache,
}

struct Output {
    doc: Value,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, format)) => {
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&out.doc).expect("serializable") + "\n",
                Format::Text => render_text(&out.doc),
            };
            // a closed pipe (e.g. `| head`) is not an error of the computation
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(Output, Format)> {
    let eps = cli.eps.unwrap_or(Precision::default().eps);
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::Parse(format!("eps: expected a value in (0, 1e-3], got {eps}")));
    }
    let default_format = if matches!(cli.cmd, Cmd::Verify(_)) { Format::Text } else { Format::Json };
    let format = if cli.json { Format::Json } else { cli.format.unwrap_or(default_format) };
    let cache = if cli.no_cache { Cache::disabled() } else { Cache::new(cache::resolve_dir(cli.cache_dir.as_deref())) };
    let ctx = Ctx { prec: Precision::new(eps), format, cache };
    if let Cmd::Verify(a) = &cli.cmd {
        // the text report is the document itself
        return verify(&ctx, a).map(|o| (o, format));
    }
    let out = match cli.cmd {
        Cmd::Lattice { cmd: LatticeCmd::Analyze(a) } => lattice_analyze(&a)?,
        Cmd::Theta { cmd } => theta(&ctx, cmd)?,
        Cmd::Mu { cmd } => mu(&ctx, cmd)?,
        Cmd::Op { cmd } => op(&ctx, cmd)?,
        Cmd::Cache { cmd } => cache_cmd(&ctx, cmd)?,
        Cmd::Series { cmd } => series(cmd)?,
        Cmd::Verify(_) => unreachable!(),
    };
    Ok((out, ctx.format))
}

// ---------------------------------------------------------------------------
// input assembly: flags override fields of --from-json

fn base(path: &Option<PathBuf>) -> Result<Map<String, Value>> {
    match path {
        None => Ok(Map::new()),
        Some(p) => {
            let v = input::read_json_file(p)?;
            match input::input_block(&v) {
                Value::Object(m) => Ok(m.clone()),
                _ => Err(Error::Parse("from-json: expected a JSON object".into())),
            }
        }
    }
}

fn put_lattice(m: &mut Map<String, Value>, a: &LatticeArgs) -> Result<()> {
    if let Some(s) = &a.inline {
        let l = input::lattice(s, a.mode.as_deref().unwrap_or("gram"))?;
        m.insert("lattice".into(), l.to_json());
    } else if let Some(mode) = &a.mode {
        // re-read a lattice from JSON under a different mode
        let g = m.get("lattice").and_then(|l| l.get("gram")).cloned().ok_or_else(|| Error::Parse("lattice: missing field".into()))?;
        let l = input::lattice(&g.to_string(), mode)?;
        m.insert("lattice".into(), l.to_json());
    }
    Ok(())
}

fn put_rat_vec(m: &mut Map<String, Value>, key: &str, s: &Option<String>) -> Result<()> {
    if let Some(s) = s {
        m.insert(key.into(), vector_json(&input::rat_vector(key, s)?));
    }
    Ok(())
}

fn put_frame(m: &mut Map<String, Value>, key: &str, s: &Option<String>) -> Result<()> {
    if let Some(s) = s {
        m.insert(key.into(), input::frame(key, s)?.to_json());
    }
    Ok(())
}

fn put_point(m: &mut Map<String, Value>, p: &PointArgs) -> Result<()> {
    if let Some(t) = &p.tau {
        m.insert("tau".into(), complex_json(input::tau(t)?));
    }
    if let Some(z) = &p.z {
        m.insert("z".into(), json!(input::complex_list("z", z)?.into_iter().map(complex_json).collect::<Vec<_>>()));
    }
    Ok(())
}

fn get_lattice(m: &Value) -> Result<Lattice> {
    let v = input::field(m, "lattice")?;
    Lattice::from_json(v).map_err(|e| match e {
        Error::Parse(s) | Error::Invalid(s) if !s.starts_with("lattice") => Error::Parse(format!("lattice: {s}")),
        e => e,
    })
}

fn get_frame(m: &Value, key: &str) -> Result<Frame> {
    Frame::from_json(input::field(m, key)?, key)
}

fn get_point(m: &Value) -> Result<Point> {
    let tau = input::complex_field(m, "tau")?;
    let z = input::complex_vec_field(m, "z")?;
    Point::new(tau, z).map_err(|e| Error::Parse(format!("tau: {e}")))
}

fn dim_check(field: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::Parse(format!("{field}: expected {n} entries, got {got}")));
    }
    Ok(())
}

fn doc(command: &str, input: Value, result: Value, meta: Value) -> Output {
    Output { doc: json!({"schema": SCHEMA, "command": command, "input": input, "result": result, "metadata": meta}), code: 0 }
}

/// Runs `compute` through the cache keyed by (command, input).
fn cached(ctx: &Ctx, command: &str, input: &Value, compute: impl FnOnce() -> Result<Value>) -> Result<(Value, Status)> {
    let key = json!({"command": command, "input": input});
    let (hit, status) = ctx.cache.lookup(&key, ctx.prec.eps);
    if let Some(v) = hit {
        return Ok((v, status));
    }
    let v = compute()?;
    ctx.cache.store(&key, ctx.prec.eps, &v);
    Ok((v, status))
}

fn meta(ctx: &Ctx, status: Status) -> Value {
    json!({"eps": ctx.prec.eps, "cache": status.as_str()})
}

// ---------------------------------------------------------------------------
// commands

fn lattice_analyze(a: &LatticeArgs) -> Result<Output> {
    let mut m = base(&a.from_json)?;
    put_lattice(&mut m, a)?;
    let input = Value::Object(m);
    let l = get_lattice(&input)?;
    let mut r = l.analyze().to_json();
    if l.is_integral() && l.is_even() && !l.is_degenerate() {
        let g = l.discriminant_group()?;
        r["discriminant_order"] = json!(g.order());
    }
    Ok(doc("lattice analyze", json!({"lattice": l.to_json()}), r, json!({})))
}

fn theta_input(t: &ThetaArgs) -> Result<Map<String, Value>> {
    let mut m = base(&t.lattice.from_json)?;
    put_lattice(&mut m, &t.lattice)?;
    put_frame(&mut m, "E", &t.e)?;
    put_frame(&mut m, "E'", &t.ep)?;
    put_rat_vec(&mut m, "shift", &t.shift)?;
    Ok(m)
}

fn theta_spec(ctx: &Ctx, input: &Value) -> Result<ThetaSpec> {
    let l = get_lattice(input)?;
    let (e, ep) = (get_frame(input, "E")?, get_frame(input, "E'")?);
    let spec = ThetaSpec::new(&l, &e, &ep, ctx.prec)?;
    match input.get("shift") {
        Some(s) => {
            let s = parse_vector(s, "shift")?;
            dim_check("shift", s.len(), l.rank())?;
            spec.with_shift(&s)
        }
        None => Ok(spec),
    }
}

fn theta(ctx: &Ctx, cmd: ThetaCmd) -> Result<Output> {
    match cmd {
        ThetaCmd::Eval { theta, point } => {
            let mut m = theta_input(&theta)?;
            put_point(&mut m, &point)?;
            let input = Value::Object(m);
            let spec = theta_spec(ctx, &input)?;
            let p = get_point(&input)?;
            dim_check("z", p.z.len(), spec.lattice().rank())?;
            let (r, st) = cached(ctx, "theta eval", &input, || Ok(value_json(&spec.eval(p.tau, &p.z)?)))?;
            Ok(doc("theta eval", input, r, meta(ctx, st)))
        }
        ThetaCmd::Components { theta, point } => {
            let mut m = theta_input(&theta)?;
            put_point(&mut m, &point)?;
            let input = Value::Object(m);
            let spec = theta_spec(ctx, &input)?;
            let p = get_point(&input)?;
            dim_check("z", p.z.len(), spec.lattice().rank())?;
            let (r, st) = cached(ctx, "theta components", &input, || {
                let cs = spec.components(p.tau, &p.z)?;
                Ok(json!(cs
                    .iter()
                    .map(|(x, v)| json!({"component": x.to_json(), "value": complex_json(v.value), "certificate": v.cert.to_json()}))
                    .collect::<Vec<_>>()))
            })?;
            Ok(doc("theta components", input, r, meta(ctx, st)))
        }
        ThetaCmd::Qexp { theta, alpha, beta, order } => {
            let mut m = theta_input(&theta)?;
            put_rat_vec(&mut m, "alpha", &alpha)?;
            put_rat_vec(&mut m, "beta", &beta)?;
            if let Some(o) = &order {
                m.insert("order".into(), json!(fmt_rat(&input::rat_scalar("order", o)?)));
            }
            let input = Value::Object(m);
            let spec = theta_spec(ctx, &input)?;
            let n = spec.lattice().rank();
            let a = parse_vector(input::field(&input, "alpha")?, "alpha")?;
            let b = parse_vector(input::field(&input, "beta")?, "beta")?;
            dim_check("alpha", a.len(), n)?;
            dim_check("beta", b.len(), n)?;
            let ord = match input::field(&input, "order")? {
                Value::String(s) => input::rat_scalar("order", s)?,
                Value::Number(x) => x.as_i64().map(mjf_core::rational::rat).ok_or_else(|| Error::Parse("order: expected \"p/q\"".into()))?,
                _ => return Err(Error::Parse("order: expected \"p/q\"".into())),
            };
            let t = TorsionPoint::new(a, b)?;
            // exact result: ε does not enter the key
            let key = json!({"command": "theta qexp", "input": input});
            let (hit, st) = ctx.cache.lookup(&key, f64::INFINITY);
            let r = match hit {
                Some(v) => v,
                None => {
                    let v = spec.holomorphic_part_qexp(&t, &ord)?.to_json();
                    ctx.cache.store(&key, 0.0, &v);
                    v
                }
            };
            Ok(doc("theta qexp", input, json!({"series": r}), json!({"cache": st.as_str(), "exact": true})))
        }
    }
}

fn mu_input(a: &MuArgs) -> Result<Map<String, Value>> {
    let mut m = base(&a.lattice.from_json)?;
    if let Some(k) = a.kind {
        m.insert("kind".into(), json!(k.as_str()));
    }
    put_point(&mut m, &PointArgs { tau: a.tau.clone(), z: a.z.clone() })?;
    for (key, s) in [("u", &a.u), ("v", &a.v)] {
        if let Some(s) = s {
            m.insert(key.into(), complex_json(input::complex(key, s)?));
        }
    }
    if let Some(mm) = a.m {
        m.insert("m".into(), json!(mm));
    }
    if let Some(l) = &a.l {
        let v = if l.trim_start().starts_with('[') { vector_json(&input::rat_vector("l", l)?) } else { json!(l.trim().parse::<i64>().map_err(|_| Error::Parse(format!("l: expected an integer, got {l:?}")))?) };
        m.insert("l".into(), v);
    }
    put_lattice(&mut m, &a.lattice)?;
    put_frame(&mut m, "frame", &a.frame)?;
    Ok(m)
}

fn get_u32(m: &Value, key: &str) -> Result<u32> {
    input::field(m, key)?.as_u64().and_then(|x| u32::try_from(x).ok()).ok_or_else(|| Error::Parse(format!("{key}: expected a non-negative integer")))
}

fn get_i64(m: &Value, key: &str) -> Result<i64> {
    input::field(m, key)?.as_i64().ok_or_else(|| Error::Parse(format!("{key}: expected an integer")))
}

fn one_z(p: &Point, n: usize) -> Result<()> {
    dim_check("z", p.z.len(), n)
}

fn mu(ctx: &Ctx, cmd: MuCmd) -> Result<Output> {
    let (name, a) = match &cmd {
        MuCmd::Eval(a) => ("mu eval", a),
        MuCmd::Residual(a) => ("mu residual", a),
    };
    let mut m = mu_input(a)?;
    if name == "mu residual" {
        m.insert("kind".into(), json!("two-var"));
    }
    let input = Value::Object(m);
    let kind = input::field(&input, "kind")?.as_str().unwrap_or_default().to_string();
    let tau = input::complex_field(&input, "tau")?;
    if !(tau.im > 0.0) {
        return Err(Error::Parse(format!("tau: imaginary part must be positive, got {}", tau.im)));
    }
    let prec = ctx.prec;
    let compute = || -> Result<Value> {
        let sv = match (name, kind.as_str()) {
            ("mu residual", _) => splitting_residual(tau, input::complex_field(&input, "u")?, input::complex_field(&input, "v")?, prec)?,
            (_, "two-var") => mu_two_var(tau, input::complex_field(&input, "u")?, input::complex_field(&input, "v")?, prec)?,
            (_, "m") => {
                let p = get_point(&input)?;
                one_z(&p, 2)?;
                mu_m_eval(get_u32(&input, "m")?, tau, p.z[0], p.z[1], prec)?
            }
            (_, "hat") | (_, "theta-ml") => {
                let p = get_point(&input)?;
                one_z(&p, 1)?;
                let (mm, l) = (get_u32(&input, "m")?, get_i64(&input, "l")?);
                if kind == "hat" {
                    mu_hat_ml(mm, l, tau, p.z[0], prec)?
                } else {
                    theta_ml(mm, l, tau, p.z[0], prec)?
                }
            }
            (_, "lattice") => {
                let l = get_lattice(&input)?;
                let d = MuLatticeData::new(&l, &get_frame(&input, "frame")?)?;
                let x = parse_vector(input::field(&input, "l")?, "l")?;
                dim_check("l", x.len(), l.rank())?;
                let p = get_point(&input)?;
                one_z(&p, l.rank())?;
                mu_hat_ll(&d, &DiscElement::reduce(&x), tau, &p.z, prec)?
            }
            (_, k) => return Err(Error::Parse(format!("kind: unknown kind {k:?}"))),
        };
        Ok(value_json(&sv))
    };
    let (r, st) = cached(ctx, name, &input, compute)?;
    Ok(doc(name, input, r, meta(ctx, st)))
}

fn op_input(a: &OpArgs) -> Result<Map<String, Value>> {
    let mut m = theta_input(&a.theta)?;
    if let Some(o) = &a.op {
        m.insert("op".into(), json!(OpId::parse(o)?.as_str()));
    }
    if let Some(k) = a.k {
        m.insert("k".into(), json!(k));
    }
    if let Some(t) = a.target {
        m.insert("target".into(), json!(t.as_str()));
    }
    put_frame(&mut m, "frame", &a.frame)?;
    if let Some(x) = a.m {
        m.insert("m".into(), json!(x));
    }
    if let Some(x) = a.l {
        m.insert("l".into(), json!(x));
    }
    if !a.tau.is_empty() {
        if a.tau.len() != a.z.len() {
            return Err(Error::Parse(format!("z: expected one --z per --tau ({} vs {})", a.tau.len(), a.z.len())));
        }
        let pts = a
            .tau
            .iter()
            .zip(&a.z)
            .map(|(t, z)| {
                Ok(json!({"tau": complex_json(input::tau(t)?), "z": input::complex_list("z", z)?.into_iter().map(complex_json).collect::<Vec<_>>()}))
            })
            .collect::<Result<Vec<_>>>()?;
        m.insert("points".into(), json!(pts));
    }
    Ok(m)
}

fn op(ctx: &Ctx, cmd: OpCmd) -> Result<Output> {
    let (name, a) = match &cmd {
        OpCmd::Apply(a) => ("op apply", a),
        OpCmd::Check(a) => ("op check", a),
    };
    let input = Value::Object(op_input(a)?);
    let id = OpId::parse(input::field(&input, "op")?.as_str().unwrap_or_default())?;
    let k = input::field(&input, "k")?.as_f64().ok_or_else(|| Error::Parse("k: expected a number".into()))?;
    let target = input::field(&input, "target")?.as_str().unwrap_or_default().to_string();
    let prec = ctx.prec;
    let frame = match input.get("frame") {
        Some(_) => Some(get_frame(&input, "frame")?),
        None => None,
    };
    let pts = match input.get("points") {
        Some(Value::Array(ps)) if !ps.is_empty() => ps.iter().map(get_point).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Parse("points: give at least one --tau/--z pair".into())),
    };

    let (lattice, frame, phi): (Lattice, Option<Frame>, Box<Evaluatable>) = match target.as_str() {
        "theta" => {
            let spec = theta_spec(ctx, &input)?;
            (spec.lattice().clone(), frame, Box::new(move |t: C64, z: &[C64]| spec.eval(t, z).map(|s| s.value)))
        }
        "theta-definite" => {
            let l = get_lattice(&input)?;
            let x = match input.get("shift") {
                Some(s) => parse_vector(s, "shift")?,
                None => vec![mjf_core::rational::rat(0); l.rank()],
            };
            dim_check("shift", x.len(), l.rank())?;
            let x = DiscElement::reduce(&x);
            let lc = l.clone();
            (l, frame, Box::new(move |t: C64, z: &[C64]| theta_definite(&lc, &x, t, z, prec).map(|s| s.value)))
        }
        "mu-hat" => {
            let (mm, l) = (get_u32(&input, "m")?, get_i64(&input, "l")?);
            let (lat, fr) = negative_rank_one(mm as i64)?;
            (lat, frame.or(Some(fr)), Box::new(move |t: C64, z: &[C64]| mu_hat_ml(mm, l, t, z[0], prec).map(|s| s.value)))
        }
        t => return Err(Error::Parse(format!("target: unknown target {t:?}"))),
    };
    for p in &pts {
        dim_check("z", p.z.len(), lattice.rank())?;
    }
    let spec = OperatorSpec::new(id, k, &lattice, frame)?;
    let cfg = StencilConfig::default();
    match cmd {
        OpCmd::Apply(_) => {
            let v = apply_operator(&spec, phi.as_ref(), &pts[0], &cfg)?;
            let r = json!({"value": complex_json(v.value), "predicted_error": v.predicted, "roundoff": v.roundoff, "operator": spec.to_json()});
            Ok(doc(name, input, r, json!({"eps": ctx.prec.eps})))
        }
        OpCmd::Check(_) => {
            let rep = check_annihilation(&spec, phi.as_ref(), &pts, &cfg)?;
            let code = if rep.pass() { 0 } else { 1 };
            let mut o = doc(name, input, rep.to_json(), json!({"eps": ctx.prec.eps}));
            o.code = code;
            Ok(o)
        }
    }
}

fn verify(ctx: &Ctx, a: &VerifyArgs) -> Result<Output> {
    let p = SuiteParams { copies: a.copies, order: a.order, prec: ctx.prec, ..SuiteParams::default() };
    let d = if a.suite == "all" {
        run_all(&p)?
    } else {
        if !SUITES.contains(&a.suite.as_str()) {
            return Err(Error::Parse(format!("suite: unknown suite {:?}; expected one of {} or all", a.suite, SUITES.join(", "))));
        }
        run_suites(&[a.suite.as_str()], &p)?
    };
    let code = d.exit_code() as u8;
    match ctx.format {
        Format::Json => Ok(Output { doc: d.to_json(), code }),
        Format::Text => Ok(Output { doc: Value::String(d.to_text()), code }),
    }
}

fn cache_cmd(ctx: &Ctx, cmd: CacheCmd) -> Result<Output> {
    match cmd {
        CacheCmd::Stats => Ok(doc("cache stats", json!({}), ctx.cache.stats(), json!({}))),
        CacheCmd::Clear => {
            let n = ctx.cache.clear().map_err(|e| Error::Invalid(format!("cache: {e}")))?;
            Ok(doc("cache clear", json!({}), json!({"removed": n}), json!({})))
        }
    }
}

fn series(cmd: SeriesCmd) -> Result<Output> {
    let SeriesCmd::Eval { from_json, tau, z } = cmd;
    let v = input::read_json_file(&from_json)?;
    // accept a bare series, a `theta qexp` document, or its result block
    let s = v.get("result").and_then(|r| r.get("series")).or_else(|| v.get("series")).unwrap_or(&v);
    let t = input::tau(&tau)?;
    let zs = match &z {
        Some(z) => Some(input::complex_list("z", z)?),
        None => None,
    };
    let (val, exact) = match ExactSeries::from_json(s) {
        Ok(es) => (es.eval(t, zs.as_deref())?, true),
        Err(_) => (FloatSeries::from_json(s).map_err(|e| Error::Parse(format!("series: {e}")))?.eval(t, zs.as_deref())?, false),
    };
    let mut input = json!({"tau": complex_json(t), "series": s});
    if let Some(zs) = &zs {
        input["z"] = json!(zs.iter().map(|x| complex_json(*x)).collect::<Vec<_>>());
    }
    Ok(doc("series eval", input, value_json(&val), json!({"exact_coefficients": exact})))
}

// ---------------------------------------------------------------------------
// text rendering

fn render_text(v: &Value) -> String {
    if let Value::String(s) = v {
        return s.clone();
    }
    let mut out = String::new();
    flatten("", v, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) if !is_complex(v) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(xs) if xs.iter().any(|x| x.is_object() && !is_complex(x)) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        _ => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&scalar_text(v));
            out.push('\n');
        }
    }
}

fn is_complex(v: &Value) -> bool {
    v.as_object().is_some_and(|m| m.len() == 2 && m.contains_key("re") && m.contains_key("im"))
}

fn scalar_text(v: &Value) -> String {
    if is_complex(v) {
        let g = |k: &str| v[k].as_str().map(str::to_string).unwrap_or_else(|| v[k].to_string());
        let im = g("im");
        return if im.starts_with('-') { format!("{}{}i", g("re"), im) } else { format!("{}+{}i", g("re"), im) };
    }
    match v {
        Value::String(s) => s.clone(),
        Value::Array(xs) => format!("[{}]", xs.iter().map(scalar_text).collect::<Vec<_>>().join(", ")),
        x => x.to_string(),
    }
}
