use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stochprod::analytic::QuadratureSpec;
use stochprod::experiment::{
    check_fixed_point, figure_tags, reproduce_figure, run_ensemble, FigureOverrides, Observable,
    RunConfig, RunManifest, DEFAULT_EPS_REAL,
};
use stochprod::stats::Binning;
use stochprod::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "stochprod", version, about = "Products of random stochastic matrices")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Matrix dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Dirichlet concentration.
    #[arg(long)]
    a: Option<f64>,
    /// Chain length; repeat for several.
    #[arg(long = "t")]
    t: Vec<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Band |Im(lambda)| < eps counted as real.
    #[arg(long)]
    eps_real: Option<f64>,
    /// Renormalize the product's columns after every step.
    #[arg(long)]
    renormalize: bool,
    /// Histogram bin count (default: interquartile rule).
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble and write per-observable CSVs.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of columns,distance,exponents,spectrum,perron,curve.
        #[arg(long, default_value = "columns")]
        observables: String,
    },
    /// Reproduce one figure's data series.
    Figure {
        tag: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check the Beta(2a, 2a) fixed point region by region on a grid.
    CheckFixedPoint {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 99)]
        grid: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Print the library version.
    Version,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        Error::NumericalFailure { .. } => EXIT_NUMERICAL,
        Error::Io { .. } => EXIT_IO,
    }
}

fn summarize(m: &RunManifest, dir: &std::path::Path) {
    for a in &m.artifacts {
        println!("wrote {} ({} bytes)", dir.join(&a.path).display(), a.bytes);
    }
    for (k, v) in &m.metrics {
        println!("{k} = {v}");
    }
    for (k, v) in &m.excluded {
        if *v > 0 {
            println!("excluded {k}: {v}");
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Version => {
            println!("stochprod {}", stochprod::VERSION);
            Ok(0)
        }
        Command::Ensemble { common, observables } => {
            let observables = observables
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| Observable::parse(s.trim()))
                .collect::<Result<_, _>>()?;
            let defaults = RunConfig::default();
            let cfg = RunConfig {
                n: common.n.unwrap_or(defaults.n),
                a: common.a.unwrap_or(defaults.a),
                t_values: if common.t.is_empty() { defaults.t_values } else { common.t },
                replicas: common.replicas.unwrap_or(defaults.replicas),
                master_seed: common.seed,
                observables,
                binning: common.bins.map_or(Binning::Auto, Binning::Count),
                eps_real: common.eps_real.unwrap_or(DEFAULT_EPS_REAL),
                output_dir: common.out.clone(),
                emit_svg: common.svg,
                renormalize_columns: common.renormalize,
            };
            let m = run_ensemble(&cfg)?;
            summarize(&m, &common.out);
            Ok(0)
        }
        Command::Figure { tag, common } => {
            let o = FigureOverrides {
                n: common.n,
                a: common.a,
                t: common.t,
                replicas: common.replicas,
                eps_real: common.eps_real,
                binning: common.bins.map(Binning::Count),
                svg: common.svg,
                renormalize_columns: common.renormalize,
            };
            let m = reproduce_figure(&tag, common.seed, &common.out, &o)?;
            summarize(&m, &common.out);
            Ok(0)
        }
        Command::CheckFixedPoint { a, grid, tol } => {
            let report = check_fixed_point(a, grid, tol, &QuadratureSpec::default())?;
            println!("z,region_i,region_ii,expected,residual");
            for r in &report.rows {
                println!("{},{},{},{},{:e}", r.z, r.region_i, r.region_ii, r.expected, r.residual);
            }
            println!(
                "a = {a}: max residual {:e}, max region error {:e}, tolerance {tol:e}: {}",
                report.max_residual,
                report.max_half_error,
                if report.passed { "pass" } else { "FAIL" }
            );
            Ok(if report.passed { 0 } else { EXIT_NUMERICAL })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure {k} threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Error::InvalidArgument(msg) = &e {
                if msg.contains("unknown figure tag") {
                    eprintln!("known tags: {}", figure_tags().join(" "));
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
