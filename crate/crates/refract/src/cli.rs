//! Command line front end: `scale`, `lt`, `density`, `simulate`,
//! `validate`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::mc::{estimate_occupation_lt, simulate_paths, McConfig, Scheme};
use crate::model::{ModelSpec, RefractedModel};
use crate::occupation::{occupation_density, occupation_lt, LtOptions, OccupationQuery};
use crate::scale::{BackendKind, ScaleFunctionSet};
use crate::validate::{run_validation, ValidationConfig};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "refract",
    version,
    about = "Occupation times and Parisian ruin for refracted Levy processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the scale functions (x, W, W', Z) to CSV.
    Scale(ScaleArgs),
    /// Evaluate occupation-time Laplace transforms to CSV.
    Lt(LtArgs),
    /// Sample the total-occupation density to CSV.
    Density(DensityArgs),
    /// Monte Carlo estimate of one occupation functional (JSON output).
    Simulate(SimulateArgs),
    /// Run the analytic-vs-Monte-Carlo validation suite (JSON report).
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcessSel {
    /// The driving process X.
    X,
    /// The refracted tail process Y = X - delta t.
    Y,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendSel {
    Rational,
    Numeric,
}

#[derive(Args)]
struct ScaleArgs {
    /// Model description JSON.
    #[arg(long)]
    model: PathBuf,
    /// Transform parameter q >= 0.
    #[arg(long)]
    q: f64,
    /// Largest tabulated x.
    #[arg(long, default_value_t = 5.0)]
    xmax: f64,
    /// Number of grid steps (points + 1 rows including x = 0).
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Which exponent to use.
    #[arg(long, value_enum, default_value_t = ProcessSel::X)]
    process: ProcessSel,
    #[arg(long, value_enum, default_value_t = BackendSel::Rational)]
    backend: BackendSel,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LtArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated transform parameters.
    #[arg(long, value_delimiter = ',', required = true)]
    theta: Vec<f64>,
    /// Lower exit level (absent = -infinity).
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    /// Upper exit level (absent = +infinity).
    #[arg(long)]
    hi: Option<f64>,
    /// Which functional: both barriers, up only, down only, or total.
    #[arg(long, default_value = "both")]
    which: String,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Grid extent (auto-sized when absent).
    #[arg(long)]
    xmax: Option<f64>,
    /// Depth of the ladder-series cross-check bookkeeping.
    #[arg(long, default_value_t = 30)]
    n_terms: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    n: usize,
    /// exact (bounded variation only) or euler.
    #[arg(long, default_value = "exact")]
    scheme: String,
    /// Euler step.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write one CSV row per path: occupation,exit,exit_time.
    #[arg(long)]
    paths_csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Validation config JSON (ships in configs/validate-default.json).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-case (theta, analytic, mc) rows for external plotting.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

fn load_model(path: &Path) -> Result<RefractedModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "malformed model JSON {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    spec.build()
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write stdout: {e}")))
        }
    }
}

fn run_scale(args: &ScaleArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let exponent = match args.process {
        ProcessSel::X => model.x_model(),
        ProcessSel::Y => model.y_model(),
    };
    let kind = match args.backend {
        BackendSel::Rational => BackendKind::Rational,
        BackendSel::Numeric => BackendKind::NumericInversion,
    };
    if args.points == 0 || !(args.xmax > 0.0) {
        return Err(Error::Config("scale table needs xmax > 0 and points >= 1".into()));
    }
    let set = ScaleFunctionSet::new(exponent, args.q, kind)?;
    let mut csv = String::from("x,w,w_prime,z\n");
    for i in 0..=args.points {
        let x = args.xmax * i as f64 / args.points as f64;
        let w = set.w(x)?;
        let wp = if x > 0.0 { set.w_prime(x)? } else { f64::NAN };
        let z = set.z(x)?;
        csv.push_str(&format!("{x:.12e},{w:.12e},{wp:.12e},{z:.12e}\n"));
    }
    write_output(&args.out, &csv)
}

fn run_lt(args: &LtArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let opts = LtOptions { tol: args.tol };
    let mut csv = String::from("theta,value,numerator,denominator,quad_error\n");
    for &theta in &args.theta {
        let (lo, hi) = match args.which.as_str() {
            "both" => {
                let lo = args.lo.ok_or_else(|| Error::Config("--which both needs --lo".into()))?;
                let hi = args.hi.ok_or_else(|| Error::Config("--which both needs --hi".into()))?;
                (lo, hi)
            }
            "up" => (
                f64::NEG_INFINITY,
                args.hi.ok_or_else(|| Error::Config("--which up needs --hi".into()))?,
            ),
            "down" => (
                args.lo.ok_or_else(|| Error::Config("--which down needs --lo".into()))?,
                f64::INFINITY,
            ),
            "total" => (f64::NEG_INFINITY, f64::INFINITY),
            other => return Err(Error::Config(format!("unknown functional '{other}'"))),
        };
        let r = occupation_lt(&model, &OccupationQuery::new(theta, lo, hi), &opts)?;
        csv.push_str(&format!(
            "{theta:.12e},{:.12e},{:.12e},{:.12e},{:.3e}\n",
            r.value, r.numerator, r.denominator, r.quad_error
        ));
    }
    write_output(&args.out, &csv)
}

fn run_density(args: &DensityArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let d = occupation_density(&model, args.points, args.n_terms, args.xmax)?;
    let mut csv = format!("# atom0={:.12e}\n", d.atom0);
    csv.push_str("x,density\n");
    for (x, g) in &d.grid {
        csv.push_str(&format!("{x:.12e},{g:.12e}\n"));
    }
    write_output(&args.out, &csv)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let scheme = match args.scheme.as_str() {
        "exact" => Scheme::ExactBv,
        "euler" => {
            let h = args.h.ok_or_else(|| Error::Config("euler scheme needs --h".into()))?;
            Scheme::Euler { h }
        }
        other => return Err(Error::Config(format!("unknown scheme '{other}'"))),
    };
    let query = OccupationQuery::new(
        args.theta,
        args.lo.unwrap_or(f64::NEG_INFINITY),
        args.hi.unwrap_or(f64::INFINITY),
    );
    let config = McConfig::new(args.n, scheme, args.seed);
    let est = estimate_occupation_lt(&model, &query, &config)?;
    if let Some(path) = &args.paths_csv {
        let outcomes = simulate_paths(&model, &query, &config)?;
        let mut csv = String::from("occupation,exit,exit_time\n");
        for o in &outcomes {
            csv.push_str(&format!(
                "{:.12e},{},{:.12e}\n",
                o.occupation_below_b,
                o.exit.as_str(),
                o.exit_time
            ));
        }
        fs::write(path, csv)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    let scheme_json = match est.scheme {
        Scheme::ExactBv => serde_json::json!("exact-bv"),
        Scheme::Euler { h } => serde_json::json!({"euler": {"h": h}}),
    };
    let doc = serde_json::json!({
        "mean": est.mean,
        "stderr": est.stderr,
        "n": est.n,
        "seed": est.seed,
        "scheme": scheme_json,
    });
    write_output(&args.out, &format!("{:#}\n", doc))
}

fn run_validate(args: &ValidateArgs) -> Result<bool> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config = ValidationConfig::from_json(&text)?;
    let report = run_validation(&config, args.seed);
    if let Some(path) = &args.emit_plot_data {
        let mut csv = String::from("id,theta,analytic,mc_mean,mc_stderr\n");
        for c in &report.cases {
            csv.push_str(&format!(
                "{},{:.6e},{:.12e},{:.12e},{:.12e}\n",
                c.id,
                c.query.theta,
                c.analytic.unwrap_or(f64::NAN),
                c.mc_mean.unwrap_or(f64::NAN),
                c.mc_stderr.unwrap_or(f64::NAN)
            ));
        }
        fs::write(path, csv)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    let body = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialisation failed: {e}")))?;
    write_output(&args.out, &format!("{body}\n"))?;
    Ok(report.all_passed())
}

/// Entry point used by the binary and by tests. Never panics on bad input;
/// returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help/version are successful exits; everything else is a
            // configuration error.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Ok(threads) = std::env::var("REFRACT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            // Ignore failures: the global pool may already be running.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let outcome = match &cli.command {
        Command::Scale(a) => run_scale(a).map(|()| true),
        Command::Lt(a) => run_lt(a).map(|()| true),
        Command::Density(a) => run_density(a).map(|()| true),
        Command::Simulate(a) => run_simulate(a).map(|()| true),
        Command::Validate(a) => run_validate(a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("validation failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
