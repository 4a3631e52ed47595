use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use resdecay::single_particle::Summation;
use resdecay_cli::config::{FitQuantity, StateKind, TimeUnit};
use resdecay_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "resdecay", version, about = "Resonant-state decay of one or two particles from a delta shell")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Pole table: poles.csv
    Poles(Flags),
    /// Single-particle curves and frames: curves.csv, frames.csv
    Evolve1(Flags),
    /// Two-particle curves and frames: two_body_curves.csv, two_body_frames.csv
    Evolve2(Flags),
    /// Pole, normalization, strength and sum-rule report: audit.json
    Audit(Flags),
    /// Log-log tail slope: tailfit.json
    Tailfit(Flags),
}

/// Overrides on top of the JSON config. Flags win over the file and over
/// the environment.
#[derive(Args, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    a: Option<f64>,

    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    alpha: Option<u32>,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long)]
    sign: Option<i32>,

    /// Number of poles; replaces any strength tolerance.
    #[arg(long)]
    n: Option<usize>,
    /// Strength-deficit tolerance; replaces any fixed pole count.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    cap: Option<usize>,

    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    unit: Option<Unit>,
    /// Uniform radii per frame.
    #[arg(long)]
    r_points: Option<usize>,
    #[arg(long)]
    frame_times: Option<usize>,
    #[arg(long)]
    no_frames: bool,
    /// Also write coefficients.csv.
    #[arg(long)]
    coefficients: bool,

    #[arg(long, value_enum)]
    summation: Option<Sum>,

    #[arg(long, value_enum)]
    quantity: Option<Quantity>,
    /// Fit two-particle curves.
    #[arg(long)]
    two_body: bool,
    /// Fit window in the time unit.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    window: Option<Vec<f64>>,
    /// Probe point in units of a: one value, or two for two particles.
    #[arg(long, num_args = 1..=2)]
    point: Option<Vec<f64>>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum Kind {
    Factorized,
    Entangled,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum Unit {
    Lifetime,
    Absolute,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum Sum {
    Plain,
    Subtracted,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum Quantity {
    Survival,
    Nonescape,
    Wavefunction,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply_env();
        if let Some(d) = &self.out {
            cfg.outputs.directory = d.clone();
        }
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.potential.lambda, self.lambda);
        set(&mut cfg.potential.a, self.a);
        if let Some(k) = self.kind {
            cfg.initial.kind = match k {
                Kind::Factorized => StateKind::FactorizedSymmetric,
                Kind::Entangled => StateKind::Entangled,
            };
        }
        if let Some(a) = self.alpha {
            cfg.initial.alpha = a;
        }
        if self.beta.is_some() {
            cfg.initial.beta = self.beta;
            if self.kind.is_none() {
                cfg.initial.kind = StateKind::Entangled;
            }
        }
        if self.sign.is_some() {
            cfg.initial.sign = self.sign;
        }
        if let Some(n) = self.n {
            cfg.truncation.n = Some(n);
            cfg.truncation.tol = None;
        }
        if let Some(tol) = self.tol {
            cfg.truncation.tol = Some(tol);
            cfg.truncation.n = None;
        }
        if let Some(cap) = self.cap {
            cfg.truncation.cap = cap;
        }
        set(&mut cfg.time_grid.t_min, self.t_min);
        set(&mut cfg.time_grid.t_max, self.t_max);
        if let Some(p) = self.points {
            cfg.time_grid.points = p;
        }
        if let Some(u) = self.unit {
            cfg.time_grid.unit = match u {
                Unit::Lifetime => TimeUnit::Lifetime,
                Unit::Absolute => TimeUnit::Absolute,
            };
        }
        if let Some(p) = self.r_points {
            cfg.spatial_grid.points = p;
        }
        if let Some(m) = self.frame_times {
            cfg.outputs.frame_times = m;
        }
        if self.no_frames {
            cfg.outputs.frames = false;
        }
        if self.coefficients {
            cfg.outputs.coefficients = true;
        }
        if let Some(s) = self.summation {
            cfg.summation = match s {
                Sum::Plain => Summation::Plain,
                Sum::Subtracted => Summation::Subtracted,
            };
        }
        if let Some(q) = self.quantity {
            cfg.fit.quantity = match q {
                Quantity::Survival => FitQuantity::Survival,
                Quantity::Nonescape => FitQuantity::Nonescape,
                Quantity::Wavefunction => FitQuantity::Wavefunction,
            };
        }
        if self.two_body {
            cfg.fit.two_body = true;
        }
        if let Some(w) = &self.window {
            cfg.fit.window = Some([w[0], w[1]]);
        }
        if let Some(p) = &self.point {
            cfg.fit.point = Some([p[0], *p.get(1).unwrap_or(&p[0])]);
        }
        Ok(cfg)
    }
}

fn execute(cmd: Command, flags: &Flags) -> Result<Vec<PathBuf>, CliError> {
    let cfg = flags.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = flags.threads {
        if n == 0 {
            return Err(CliError::field("threads", "must be >= 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::field("threads", e.to_string()))?;
    pool.install(|| run(cmd, &cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Config {
                message: e.kind().to_string(),
                field: None,
                line: None,
                column: None,
            };
            let mut body = err.to_json();
            body["error"]["usage"] = json!(e.render().to_string());
            eprintln!("{body}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let (cmd, flags) = match &cli.command {
        Sub::Poles(f) => (Command::Poles, f),
        Sub::Evolve1(f) => (Command::Evolve1, f),
        Sub::Evolve2(f) => (Command::Evolve2, f),
        Sub::Audit(f) => (Command::Audit, f),
        Sub::Tailfit(f) => (Command::Tailfit, f),
    };
    match execute(cmd, flags) {
        Ok(files) => {
            println!("{}", json!({ "command": cmd.name(), "outputs": files }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
