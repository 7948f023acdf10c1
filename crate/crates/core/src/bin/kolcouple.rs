use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kolcouple::experiment::{CheckSection, ExperimentConfig, ExperimentKind, SamplingSection, SCHEMA_VERSION};
use kolcouple::markovian::AreaLaw;
use kolcouple::path::simulate_path_euler;
use kolcouple::{derive_stream, run_experiment, Error, Report, StateVector, TransitionKernel};

#[derive(Parser)]
#[command(name = "kolcouple", version, about = "Couplings of the Kolmogorov diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps_override: Option<usize>,
    /// Worker threads (default: KOLCOUPLE_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// `.csv` writes the curve, anything else the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 unless the expected rate is reproduced.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Scalar,
    Paths,
}

#[derive(Subcommand)]
enum Command {
    /// Print H, V and L for index k as JSON.
    KernelDump {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Area law density and tail at one point.
    OracleArea {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        t: f64,
    },
    /// One simulated path as CSV (t, I0, ..., Ik).
    PathDump {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Half-cycle coupling survival curve.
    SimulateBck {
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        dt0: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-look-ahead coupling survival by block.
    SimulateLookahead {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<f64>>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "scalar")]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Look-ahead coupling restricted to unit blocks.
    BoundedHorizon {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<f64>>,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run any experiment from its config.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Check(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn base_config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig, Failure> {
    match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.kind != kind {
                return Err(Failure::Config(format!(
                    "config kind {:?} does not match the subcommand ({kind:?})",
                    cfg.kind
                )));
            }
            Ok(cfg)
        }
        None => Ok(ExperimentConfig {
            schema: SCHEMA_VERSION,
            kind,
            model: Default::default(),
            numerics: Default::default(),
            sampling: SamplingSection {
                replicates: 10_000,
                master_seed: 0,
            },
            schedule: Default::default(),
            fit: None,
            check: None,
            output: None,
        }),
    }
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn execute(mut cfg: ExperimentConfig, common: &Common) -> Result<(), Failure> {
    if let Some(n) = common.reps_override {
        cfg.sampling.replicates = n;
    }
    let report: Report = run_experiment(&cfg, common.threads)?;
    let out = common.out.clone().or_else(|| cfg.output.clone());
    let is_csv = out
        .as_deref()
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut w = sink(out.as_deref())?;
    if is_csv {
        if report.curve.blocks.is_some() {
            report.curve.write_block_csv(&mut w)?;
        } else {
            report.curve.write_time_csv(&mut w)?;
        }
    } else {
        writeln!(w, "{}", report.to_json_pretty())?;
    }
    w.flush()?;
    if let Some(fit) = &report.fit {
        eprintln!(
            "slope {:.4} +- {:.4} over t in [{:.4e}, {:.4e}] ({} points)",
            fit.slope, fit.stderr, fit.t_lo, fit.t_hi, fit.points
        );
    }
    if common.check {
        let check = cfg.check.clone().unwrap_or_else(|| CheckSection::default_for(cfg.kind));
        report.check(&check).map_err(Failure::Check)?;
        eprintln!("check passed");
    }
    Ok(())
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn kernel_dump(k: usize, out: Option<&Path>) -> Result<(), Failure> {
    let kernel = TransitionKernel::new(k)?;
    let fmt = |m: &nalgebra::DMatrix<f64>| {
        let rows: Vec<String> = matrix_rows(m)
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        format!("[\n    {}\n  ]", rows.join(",\n    "))
    };
    let mut w = sink(out)?;
    writeln!(
        w,
        "{{\n  \"k\": {k},\n  \"H\": {},\n  \"V\": {},\n  \"L\": {}\n}}",
        fmt(kernel.h()),
        fmt(kernel.v()),
        fmt(kernel.l())
    )?;
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::KernelDump { k, out } => kernel_dump(k, out.as_deref()),
        Command::OracleArea { a, t } => {
            let law = AreaLaw::new(a)?;
            let out = json!({
                "a": a,
                "t": t,
                "density": format!("{:.15e}", law.density(t)?),
                "tail": format!("{:.15e}", law.tail(t)?),
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            Ok(())
        }
        Command::PathDump { k, x, tmax, dt, seed, out } => {
            let kernel = TransitionKernel::new(k)?;
            let x = StateVector::new(x.unwrap_or_else(|| vec![0.0; kernel.dim()]));
            let path = simulate_path_euler(&kernel, &x, tmax, dt, &mut derive_stream(seed, 0))?;
            let mut w = sink(out.as_deref())?;
            path.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::SimulateBck { scale, dt0, tmax, reps, seed, common } => {
            let mut cfg = base_config(&common, ExperimentKind::Bck)?;
            cfg.model.k = Some(1);
            cfg.model.scale = scale.or(cfg.model.scale);
            cfg.numerics.dt0 = dt0.or(cfg.numerics.dt0);
            cfg.numerics.t_max = tmax.or(cfg.numerics.t_max);
            apply_sampling(&mut cfg, reps, seed);
            execute(cfg, &common)
        }
        Command::SimulateLookahead { k, z, alpha, nmax, reps, seed, mode, common } => {
            let kind = match mode {
                Mode::Scalar => ExperimentKind::LookaheadScalar,
                Mode::Paths => ExperimentKind::LookaheadPaths,
            };
            let mut cfg = base_config(&common, kind)?;
            cfg.model.k = k.or(cfg.model.k);
            if z.is_some() {
                cfg.model.z = z;
                cfg.model.x1 = None;
                cfg.model.x2 = None;
            }
            cfg.schedule.alpha = alpha.or(cfg.schedule.alpha);
            cfg.numerics.n_max = nmax.or(cfg.numerics.n_max);
            apply_sampling(&mut cfg, reps, seed);
            execute(cfg, &common)
        }
        Command::BoundedHorizon { k, z, nmax, reps, seed, common } => {
            let mut cfg = base_config(&common, ExperimentKind::BoundedHorizon)?;
            cfg.model.k = k.or(cfg.model.k);
            if z.is_some() {
                cfg.model.z = z;
            }
            cfg.numerics.n_max = nmax.or(cfg.numerics.n_max);
            apply_sampling(&mut cfg, reps, seed);
            execute(cfg, &common)
        }
        Command::Run { common } => {
            let path = common
                .config
                .as_ref()
                .ok_or_else(|| Failure::Config("run needs --config".into()))?;
            let cfg = ExperimentConfig::load(path)?;
            execute(cfg, &common)
        }
    }
}

fn apply_sampling(cfg: &mut ExperimentConfig, reps: Option<usize>, seed: Option<u64>) {
    if let Some(n) = reps {
        cfg.sampling.replicates = n;
    }
    if let Some(s) = seed {
        cfg.sampling.master_seed = s;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
