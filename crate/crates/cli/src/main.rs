mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bmop::mopoly::{a_polys, b_polys, p_coeffs, p_eval_with, q_coeffs, q_eval_with};
use bmop::recurrence::{p_recurrence_coeffs, q_recurrence_coeffs, RecurrenceCoeffs};
use bmop::quad::QuadConfig;
use bmop::rmt::{
    density_compare, kernel_density_curve, kernel_eval, kernel_trace, predicted_mean, sample_coupled, write_binary, write_csv, CoupledModel,
    HistogramSpec, KernelSpec,
};
use bmop::specfun::{Params, PrecisionConfig};
use bmop::verify::{self, Suite, VerifyOptions};
use bmop::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use output::{Format, Sink, Table};

#[derive(Parser)]
#[command(name = "bmop", version, about = "Multiple orthogonal polynomials with modified Bessel weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for tables.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// `double` or `extended:<bits>`; overrides BMOP_PRECISION.
    #[arg(long, global = true)]
    precision: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate Q_n, P_n or one of the polynomials A_{n,1}, A_{n,2}, B_{n,1}, B_{n,2} on a grid.
    Eval(EvalArgs),
    /// Run a verification suite and print a JSON report.
    Verify(VerifyArgs),
    /// Diagonal correlation kernel K_n(x, x) on a grid.
    Kernel(KernelArgs),
    /// Sample the coupled two-matrix model.
    Sample(SampleArgs),
    /// Dump expansion, polynomial or recurrence coefficients of degree n.
    Coeffs(CoeffArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Reference parameter set S0 or S1.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

impl ParamArgs {
    fn given(&self) -> bool {
        self.preset.is_some() || self.mu.is_some() || self.nu.is_some() || self.a.is_some() || self.b.is_some()
    }

    /// Explicit values override the preset; without a preset all four are required.
    fn resolve(&self) -> Result<(String, Params), Error> {
        let base = match &self.preset {
            Some(name) => Some(Params::preset(name).ok_or_else(|| Error::InvalidParams(format!("unknown preset {name:?}, expected S0 or S1")))?),
            None => None,
        };
        let pick = |v: Option<f64>, f: fn(&Params) -> f64, name: &str| {
            v.or(base.as_ref().map(f)).ok_or_else(|| Error::InvalidParams(format!("--{name} is required without --preset")))
        };
        let p = Params::new(pick(self.mu, Params::mu, "mu")?, pick(self.nu, Params::nu, "nu")?, pick(self.a, Params::a, "a")?, pick(self.b, Params::b, "b")?)?;
        let label = match (&self.preset, base == Some(p)) {
            (Some(name), true) => name.to_ascii_uppercase(),
            _ => format!("mu={} nu={} a={} b={}", p.mu(), p.nu(), p.a(), p.b()),
        };
        Ok((label, p))
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Explicit points, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Space the generated points logarithmically.
    #[arg(long)]
    log: bool,
}

impl GridArgs {
    fn points(&self) -> Result<Vec<f64>, Error> {
        if !self.x.is_empty() {
            return Ok(self.x.clone());
        }
        let (lo, hi) = match (self.x_min, self.x_max) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Error::InvalidParams("give --x or both --x-min and --x-max".into())),
        };
        if !(hi > lo) || self.points < 2 || (self.log && !(lo > 0.0)) {
            return Err(Error::InvalidParams(format!("bad grid [{lo}, {hi}] with {} points", self.points)));
        }
        let k = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| if self.log { lo * (hi / lo).powf(i as f64 / k) } else { lo + (hi - lo) * i as f64 / k })
            .collect())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "Q", alias = "q")]
    Q,
    #[value(name = "P", alias = "p")]
    P,
    #[value(name = "A1", alias = "a1")]
    A1,
    #[value(name = "A2", alias = "a2")]
    A2,
    #[value(name = "B1", alias = "b1")]
    B1,
    #[value(name = "B2", alias = "b2")]
    B2,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffKind {
    /// c_j in Q_n = sum_j c_j omega_{mu+j}
    #[value(name = "Q", alias = "q")]
    Q,
    /// d_j in P_n = sum_j d_j rho_{nu+j}
    #[value(name = "P", alias = "p")]
    P,
    #[value(name = "A1", alias = "a1")]
    A1,
    #[value(name = "A2", alias = "a2")]
    A2,
    #[value(name = "B1", alias = "b1")]
    B1,
    #[value(name = "B2", alias = "b2")]
    B2,
    /// a_{i,n}, i = -2..2, in x Q_n = sum_i a_{i,n} Q_{n+i}
    #[value(name = "rec-Q", alias = "rec-q")]
    RecQ,
    /// b_{i,n}, i = -2..2, in x P_n = sum_i b_{i,n} P_{n+i}
    #[value(name = "rec-P", alias = "rec-p")]
    RecP,
}

#[derive(Args)]
struct CoeffArgs {
    #[arg(long, value_enum)]
    kind: CoeffKind,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bessel,
    Lommel,
    Biorth,
    Recurrence,
    Limits,
    Mellin,
    Kernel,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Bessel => Suite::Bessel,
            SuiteArg::Lommel => Suite::Lommel,
            SuiteArg::Biorth => Suite::Biorth,
            SuiteArg::Recurrence => Suite::Recurrence,
            SuiteArg::Limits => Suite::Limits,
            SuiteArg::Mellin => Suite::Mellin,
            SuiteArg::Kernel => Suite::Kernel,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Biorthogonality matrix size (indices 0..N-1).
    #[arg(long = "N", default_value_t = 13)]
    size: usize,
    /// Largest degree in the recurrence checks.
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    /// Both presets are checked unless parameters are given.
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct KernelSpecArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kappa: Option<u32>,
    #[arg(long)]
    nu_total: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Inner dimension of the coupled model; with --tau replaces the four kernel parameters.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
}

impl KernelSpecArgs {
    fn resolve(&self) -> Result<KernelSpec, Error> {
        match (self.m, self.tau) {
            (Some(m), Some(tau)) => Ok(CoupledModel::new(self.n, m, tau, 0)?.kernel_spec()),
            (None, None) => match (self.nu_total, self.alpha, self.beta) {
                (Some(nu), Some(alpha), Some(beta)) => KernelSpec::new(self.kappa.unwrap_or(0), nu, alpha, beta, self.n),
                _ => Err(Error::InvalidParams("give --nu-total, --alpha and --beta, or --m and --tau".into())),
            },
            _ => Err(Error::InvalidParams("--m and --tau go together".into())),
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    spec: KernelSpecArgs,
    /// Evaluate K_n(x, y) at this fixed y instead of the diagonal.
    #[arg(long)]
    y: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Writes <out>.csv and <out>.bin.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add a binned comparison with the kernel using this many bins.
    #[arg(long)]
    bins: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_) | Error::Domain(_) | Error::CapExceeded { .. } | Error::Dimension(_) | Error::Pole(_) => 2,
        _ => 3,
    }
}

fn precision(cli: &Cli) -> Result<PrecisionConfig, Error> {
    match cli.precision.clone().or_else(|| std::env::var("BMOP_PRECISION").ok()) {
        Some(s) => PrecisionConfig::parse(&s),
        None => Ok(PrecisionConfig::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("bmop: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let prec = precision(cli)?;
    let sink = Sink::new(cli.output.clone(), cli.format);
    match &cli.command {
        Command::Eval(args) => eval(args, &prec, &sink),
        Command::Verify(args) => verify_cmd(args, &prec, &sink),
        Command::Kernel(args) => kernel(args, &sink),
        Command::Sample(args) => sample(args, &sink),
        Command::Coeffs(args) => coeffs(args, &sink),
    }
}

fn eval(args: &EvalArgs, prec: &PrecisionConfig, sink: &Sink) -> Result<u8, Error> {
    let (label, p) = args.params.resolve()?;
    let xs = args.grid.points()?;
    let pair = match args.kind {
        Kind::A1 | Kind::A2 => Some(a_polys(&p, args.n)?),
        Kind::B1 | Kind::B2 => Some(b_polys(&p, args.n)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let v = match args.kind {
            Kind::Q => q_eval_with(&p, args.n, x, prec)?,
            Kind::P => p_eval_with(&p, args.n, x, prec)?,
            Kind::A1 | Kind::B1 => pair.as_ref().unwrap().first_at(x),
            Kind::A2 | Kind::B2 => pair.as_ref().unwrap().second_at(x),
        };
        rows.push(vec![x, v]);
    }
    let kind = match args.kind {
        Kind::Q => "Q",
        Kind::P => "P",
        Kind::A1 => "A1",
        Kind::A2 => "A2",
        Kind::B1 => "B1",
        Kind::B2 => "B2",
    };
    let table = Table {
        comments: vec![
            format!("bmop eval kind={kind} n={}", args.n),
            params_comment(&label, &p),
            format!("precision {}", describe(prec)),
        ],
        columns: vec!["x".into(), "value".into()],
        rows,
        meta: json!({ "command": "eval", "kind": kind, "n": args.n, "params": p, "precision": prec }),
    };
    sink.table(&table)?;
    Ok(0)
}

fn coeffs(args: &CoeffArgs, sink: &Sink) -> Result<u8, Error> {
    let (label, p) = args.params.resolve()?;
    let n = args.n;
    let indexed = |v: Vec<f64>| v.into_iter().enumerate().map(|(j, c)| (j as f64, c)).collect::<Vec<_>>();
    let recurrence = |r: RecurrenceCoeffs| (-2..=2).filter(|i| n as i32 + i >= 0).map(|i| (i as f64, r.get(i))).collect::<Vec<_>>();
    let (name, index, pairs) = match args.kind {
        CoeffKind::Q => ("Q", "j", indexed(q_coeffs(&p, n).values())),
        CoeffKind::P => ("P", "j", indexed(p_coeffs(&p, n).values())),
        CoeffKind::A1 => ("A1", "power", indexed(a_polys(&p, n)?.first)),
        CoeffKind::A2 => ("A2", "power", indexed(a_polys(&p, n)?.second)),
        CoeffKind::B1 => ("B1", "power", indexed(b_polys(&p, n)?.first)),
        CoeffKind::B2 => ("B2", "power", indexed(b_polys(&p, n)?.second)),
        CoeffKind::RecQ => ("rec-Q", "i", recurrence(q_recurrence_coeffs(&p, n))),
        CoeffKind::RecP => ("rec-P", "i", recurrence(p_recurrence_coeffs(&p, n))),
    };
    if let Some((_, c)) = pairs.iter().find(|(_, c)| !c.is_finite()) {
        return Err(Error::Overflow(*c));
    }
    let table = Table {
        comments: vec![format!("bmop coeffs kind={name} n={n}"), params_comment(&label, &p)],
        columns: vec![index.into(), "coefficient".into()],
        rows: pairs.into_iter().map(|(i, c)| vec![i, c]).collect(),
        meta: json!({ "command": "coeffs", "kind": name, "n": n, "params": p }),
    };
    sink.table(&table)?;
    Ok(0)
}

fn params_comment(label: &str, p: &Params) -> String {
    let values = format!("mu={} nu={} a={} b={}", p.mu(), p.nu(), p.a(), p.b());
    if label == values {
        format!("params {values}")
    } else {
        format!("params {label}: {values}")
    }
}

fn describe(prec: &PrecisionConfig) -> String {
    if prec.is_extended() {
        format!("extended:{}", prec.bits())
    } else {
        "double".into()
    }
}

fn verify_cmd(args: &VerifyArgs, prec: &PrecisionConfig, sink: &Sink) -> Result<u8, Error> {
    let mut opts = VerifyOptions { biorth_size: args.size, n_max: args.n_max, precision: *prec, ..Default::default() };
    if args.params.given() {
        opts.params = vec![args.params.resolve()?];
    }
    let report = verify::run(args.suite.into(), &opts)?;
    sink.json(&json!({
        "schema": output::SCHEMA,
        "suite": report.suite,
        "checks": report.checks,
        "pass": report.pass,
    }))?;
    Ok(if report.pass { 0 } else { 1 })
}

fn kernel(args: &KernelArgs, sink: &Sink) -> Result<u8, Error> {
    let spec = args.spec.resolve()?;
    let xs = args.grid.points()?;
    let rows: Vec<Vec<f64>> = match args.y {
        None => kernel_density_curve(&spec, &xs)?.into_iter().map(|(x, v)| vec![x, v]).collect(),
        Some(y) => xs.iter().map(|&x| Ok(vec![x, kernel_eval(&spec, x, y)?])).collect::<Result<_, Error>>()?,
    };
    let what = match args.y {
        None => "K_n(x,x)".to_string(),
        Some(y) => format!("K_n(x,{y})"),
    };
    let table = Table {
        comments: vec![
            format!("bmop kernel {what}"),
            format!("kappa={} nu_total={} alpha={} beta={} n={}", spec.kappa, spec.nu_total, spec.alpha, spec.beta, spec.n),
        ],
        columns: vec!["x".into(), "kernel".into()],
        rows,
        meta: json!({ "command": "kernel", "spec": spec, "y": args.y }),
    };
    sink.table(&table)?;
    Ok(0)
}

fn sample(args: &SampleArgs, sink: &Sink) -> Result<u8, Error> {
    let model = CoupledModel::new(args.n, args.m, args.tau, args.seed)?;
    if args.samples < 2 {
        return Err(Error::InvalidParams("need at least 2 samples".into()));
    }
    let batch = sample_coupled(&model, args.samples)?;
    let spec = model.kernel_spec();
    let cfg = QuadConfig::default();
    let mut files = Vec::new();
    if let Some(out) = &args.out {
        let csv = out.with_extension("csv");
        let bin = out.with_extension("bin");
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv)?);
        write_csv(&batch, &mut w)?;
        std::io::Write::flush(&mut w)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(&bin)?);
        write_binary(&batch, &mut w)?;
        std::io::Write::flush(&mut w)?;
        files.push(csv.display().to_string());
        files.push(bin.display().to_string());
    }
    let (mean, se) = batch.mean_sum();
    let predicted = predicted_mean(&spec)?;
    let mut summary = json!({
        "schema": output::SCHEMA,
        "model": model,
        "kernel": spec,
        "num_samples": batch.num_samples,
        "seed": model.seed,
        "mean": mean,
        "std_error": se,
        "predicted_mean": predicted,
        "z_score": (mean - predicted) / se,
        "trace": kernel_trace(&spec, &cfg)?,
        "files": files,
    });
    if let Some(count) = args.bins {
        let bins = HistogramSpec::for_kernel(&spec, count, 1e-3 * spec.n as f64, &cfg)?;
        summary["density"] = serde_json::to_value(density_compare(&batch, &spec, &bins, &cfg)?).map_err(|e| Error::Io(e.to_string()))?;
    }
    sink.json(&summary)?;
    Ok(0)
}
