use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use nonrad_core::classify::{classify, ClassificationReport, ClassifyParams, Overall, Verdict};
use nonrad_core::fields::{
    direction, farfield_direct, farfield_series, field_series, proximity_margin, write_farfield_csv, write_field_csv,
    DirectField, FarFieldSample, FarFieldVariant, FieldSample, Method,
};
use nonrad_core::greens::WaveContext;
use nonrad_core::multipole::coeff_table;
use nonrad_core::sources::{SourceDescriptor, SourceSpec};
use nonrad_core::vector::norm;
use nonrad_core::Error;

#[derive(Parser)]
#[command(name = "nonrad", version, about = "Radiated fields and nonradiation tests for compactly supported currents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multipole coefficient table (α, paired family, β).
    Analyze(Common),
    /// Run every applicable nonradiation test; exit 0 nonradiating, 1 radiating, 3 inconsistent.
    Classify(Common),
    /// Far-field pattern on a (θ, φ) grid.
    Farfield {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 18)]
        n_theta: usize,
        #[arg(long, default_value_t = 36)]
        n_phi: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
    },
    /// Field samples on a square grid in the x–z plane, skipping points too close to the support.
    Fieldscan {
        #[command(flatten)]
        common: Common,
        /// Half-width of the grid in units of R.
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
        #[arg(long, default_value_t = 25)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
    },
    /// Classify the built-in example suite and print a pass/fail matrix.
    Verify(Overrides),
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    out: PathBuf,
    /// Truncation degree N.
    #[arg(long)]
    degree: Option<usize>,
    /// Base tolerance for the relative residual thresholds.
    #[arg(long)]
    tol: Option<f64>,
    /// Radius of the sphere used by the near-field tests.
    #[arg(long)]
    rprime: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct Common {
    /// JSON source descriptor.
    #[arg(long)]
    source: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Direct,
    Series,
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Descriptor(_) => Failure::Input(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

type Outcome<T> = Result<T, Failure>;

const MAX_DEGREE: usize = 120;

fn apply_overrides(ctx: WaveContext, o: &Overrides) -> Outcome<WaveContext> {
    let mut ctx = ctx;
    if let Some(n) = o.degree {
        if n == 0 || n > MAX_DEGREE {
            return Err(Failure::Input(format!("--degree must be in 1..={MAX_DEGREE}, got {n}")));
        }
        ctx = ctx.with_degree(n);
    }
    if let Some(t) = o.tol {
        ctx = ctx.with_tol(t).map_err(|e| Failure::Input(e.to_string()))?;
    }
    if let Some(r) = o.rprime {
        if !(r.is_finite() && r > ctx.radius) {
            return Err(Failure::Input(format!("--rprime must exceed R = {}, got {r}", ctx.radius)));
        }
    }
    Ok(ctx)
}

fn load(common: &Common) -> Outcome<(SourceSpec, WaveContext)> {
    let text = fs::read_to_string(&common.source)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", common.source.display())))?;
    let desc = SourceDescriptor::from_json(&text)?;
    let ctx = desc.context()?;
    let ctx = apply_overrides(ctx, &common.overrides)?;
    let src = desc.build(&ctx).map_err(|e| Failure::Input(e.to_string()))?;
    Ok((src, ctx))
}

fn output(dir: &Path, stem: &str, format: Format) -> Outcome<BufWriter<fs::File>> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", format.ext()));
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_json<W: Write, T: serde::Serialize>(mut w: W, value: &T) -> Outcome<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Numerical(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn classify_params(ctx: &WaveContext, o: &Overrides) -> ClassifyParams {
    let p = ClassifyParams::defaults(ctx);
    match o.rprime {
        Some(r) => p.with_rprime(r),
        None => p,
    }
}

fn write_report<W: Write>(mut w: W, rep: &ClassificationReport, format: Format) -> Outcome<()> {
    match format {
        Format::Json => write_json(w, rep),
        Format::Csv => {
            writeln!(w, "test,residual,threshold,verdict")?;
            for (name, t) in rep.tests() {
                let res = t.residual.map(|r| format!("{r:.16e}")).unwrap_or_default();
                writeln!(w, "{name},{res},{:.16e},{}", t.threshold, verdict_str(t.verdict))?;
            }
            writeln!(w, "overall,,,{}", overall_str(rep.overall))?;
            w.flush()?;
            Ok(())
        }
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "not_applicable",
    }
}

fn overall_str(o: Overall) -> &'static str {
    match o {
        Overall::Nonradiating => "nonradiating",
        Overall::Radiating => "radiating",
        Overall::Inconsistent => "inconsistent",
    }
}

fn cmd_analyze(common: &Common) -> Outcome<u8> {
    let (src, ctx) = load(common)?;
    let rule = src.default_rule(&ctx)?;
    let table = coeff_table(&src, &ctx, &rule)?;
    let o = &common.overrides;
    let w = output(&o.out, "coefficients", o.format)?;
    match o.format {
        Format::Csv => {
            let mut w = w;
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(w, &table)?,
    }
    Ok(0)
}

fn cmd_classify(common: &Common) -> Outcome<u8> {
    let (src, ctx) = load(common)?;
    let rep = classify(&src, &ctx, &classify_params(&ctx, &common.overrides))?;
    let o = &common.overrides;
    write_report(output(&o.out, "report", o.format)?, &rep, o.format)?;
    println!("{}: {}", src.name, overall_str(rep.overall));
    Ok(rep.overall.exit_code() as u8)
}

fn cmd_farfield(common: &Common, n_theta: usize, n_phi: usize, method: MethodArg) -> Outcome<u8> {
    if n_theta == 0 || n_phi == 0 {
        return Err(Failure::Input("--n-theta and --n-phi must be positive".into()));
    }
    let (src, ctx) = load(common)?;
    let rule = src.default_rule(&ctx)?;
    let dirs: Vec<_> = (0..n_theta)
        .flat_map(|i| {
            let theta = (i as f64 + 0.5) * std::f64::consts::PI / n_theta as f64;
            (0..n_phi).map(move |j| direction(theta, 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64))
        })
        .collect();
    let samples: Vec<FarFieldSample> = match method {
        MethodArg::Direct => dirs
            .par_iter()
            .map(|d| Ok(FarFieldSample { direction: *d, e_inf: farfield_direct(&src, &ctx, &rule, *d)? }))
            .collect::<Result<_, Error>>()?,
        MethodArg::Series => {
            let table = coeff_table(&src, &ctx, &rule)?;
            dirs.iter()
                .map(|d| {
                    let e = farfield_series(&table, *d, FarFieldVariant::Projector)?;
                    Ok(FarFieldSample { direction: *d, e_inf: e })
                })
                .collect::<Result<_, Error>>()?
        }
    };
    let o = &common.overrides;
    let mut w = output(&o.out, "farfield", o.format)?;
    match o.format {
        Format::Csv => {
            write_farfield_csv(&mut w, &samples)?;
            w.flush()?;
        }
        Format::Json => write_json(w, &samples)?,
    }
    Ok(0)
}

fn cmd_fieldscan(common: &Common, extent: f64, steps: usize, method: MethodArg) -> Outcome<u8> {
    if steps < 2 || !(extent.is_finite() && extent > 0.0) {
        return Err(Failure::Input("--steps must be at least 2 and --extent positive".into()));
    }
    let (src, ctx) = load(common)?;
    let rule = src.default_rule(&ctx)?;
    let half = extent * ctx.radius;
    let mut points = Vec::new();
    for i in 0..steps {
        for k in 0..steps {
            let x = -half + 2.0 * half * i as f64 / (steps - 1) as f64;
            let z = -half + 2.0 * half * k as f64 / (steps - 1) as f64;
            let p = [x, 0.0, z];
            let ok = match method {
                MethodArg::Direct => norm(p) - src.support_radius >= proximity_margin(&ctx),
                MethodArg::Series => norm(p) > ctx.radius + proximity_margin(&ctx),
            };
            if ok {
                points.push(p);
            }
        }
    }
    let samples: Vec<FieldSample> = match method {
        MethodArg::Direct => {
            let field = DirectField::new(&src, &ctx, &rule)?;
            let e = field.field_many(&points)?;
            points.iter().zip(e).map(|(p, e)| FieldSample { point: *p, e, method: Method::Direct }).collect()
        }
        MethodArg::Series => {
            let table = coeff_table(&src, &ctx, &rule)?;
            points
                .iter()
                .map(|p| Ok(FieldSample { point: *p, e: field_series(&table, &ctx, *p)?, method: Method::Series }))
                .collect::<Result<_, Error>>()?
        }
    };
    let o = &common.overrides;
    let mut w = output(&o.out, "fieldscan", o.format)?;
    match o.format {
        Format::Csv => {
            write_field_csv(&mut w, &samples)?;
            w.flush()?;
        }
        Format::Json => write_json(w, &samples)?,
    }
    Ok(0)
}

// The worked examples plus the radiating control, with the verdict each must reach.
const SUITE: [(&str, Overall); 5] = [
    (r#"{"kind": "curlcurl", "kappa": 1.0, "R": 1.0}"#, Overall::Nonradiating),
    (r#"{"kind": "gradient", "kappa": 1.0, "R": 1.0}"#, Overall::Nonradiating),
    (r#"{"kind": "bessel_pair", "kappa": 3.141592653589793, "R": 1.0}"#, Overall::Nonradiating),
    (r#"{"kind": "bessel_single", "kappa": 3.141592653589793, "R": 1.0}"#, Overall::Nonradiating),
    (r#"{"kind": "dipole_ball", "kappa": 1.0, "R": 1.0}"#, Overall::Radiating),
];

#[derive(serde::Serialize)]
struct SuiteEntry {
    source: String,
    expected: Overall,
    report: ClassificationReport,
}

fn cmd_verify(o: &Overrides) -> Outcome<u8> {
    let mut entries = Vec::new();
    for (json, expected) in SUITE {
        let desc = SourceDescriptor::from_json(json)?;
        let ctx = apply_overrides(desc.context()?, o)?;
        let src = desc.build(&ctx)?;
        let report = classify(&src, &ctx, &classify_params(&ctx, o))?;
        entries.push(SuiteEntry { source: src.name.clone(), expected, report });
    }

    let names: Vec<&str> = entries[0].report.tests().iter().map(|(n, _)| *n).collect();
    print!("{:<14}", "source");
    for n in &names {
        print!(" {n:>14}");
    }
    println!(" {:>14} {:>6}", "overall", "ok");
    let mut all_ok = true;
    for e in &entries {
        let ok = e.report.overall == e.expected;
        all_ok &= ok;
        print!("{:<14}", e.source);
        for (_, t) in e.report.tests() {
            let cell = match t.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::NotApplicable => "n/a",
            };
            print!(" {cell:>14}");
        }
        println!(" {:>14} {:>6}", overall_str(e.report.overall), if ok { "yes" } else { "NO" });
    }

    let mut w = output(&o.out, "verify", o.format)?;
    match o.format {
        Format::Json => write_json(w, &entries)?,
        Format::Csv => {
            writeln!(w, "source,expected,{},overall", names.join(","))?;
            for e in &entries {
                let cells: Vec<&str> = e.report.tests().iter().map(|(_, t)| verdict_str(t.verdict)).collect();
                writeln!(
                    w,
                    "{},{},{},{}",
                    e.source,
                    overall_str(e.expected),
                    cells.join(","),
                    overall_str(e.report.overall)
                )?;
            }
            w.flush()?;
        }
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn init_threads() -> Outcome<()> {
    let Ok(v) = std::env::var("NONRAD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Input(format!("NONRAD_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Numerical(e.to_string()))
}

fn run(cli: Cli) -> Outcome<u8> {
    init_threads()?;
    match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Classify(c) => cmd_classify(c),
        Command::Farfield { common, n_theta, n_phi, method } => cmd_farfield(common, *n_theta, *n_phi, *method),
        Command::Fieldscan { common, extent, steps, method } => cmd_fieldscan(common, *extent, *steps, *method),
        Command::Verify(o) => cmd_verify(o),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on its own for malformed arguments
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("nonrad: {f}");
            ExitCode::from(f.code())
        }
    }
}
