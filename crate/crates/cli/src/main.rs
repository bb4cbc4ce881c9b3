//! `gfi`: coverage study, limit diagnostics and spline demo.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gfi_core::rng::substream;
use gfi_core::sim::{
    self, compare_to_reference, run_experiment, ExperimentConfig, Format, Method,
    DEFAULT_COVERAGE_TOLERANCE, DEFAULT_LENGTH_TOLERANCE,
};
use gfi_core::spline::{self, SplineDomain, SplineModel};
use gfi_core::Error;

const SEED_ENV: &str = "GFI_SEED";

#[derive(Parser)]
#[command(name = "gfi", version, about = "Generalized fiducial inference experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coverage study and write the records.
    Coverage {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare records with the reference table; exit 0 on pass, 1 on fail.
    Verify {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Records to check instead of running the study.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Format of `--input` and of the report.
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long, default_value_t = DEFAULT_COVERAGE_TOLERANCE)]
        tolerance_coverage: f64,
        #[arg(long, default_value_t = DEFAULT_LENGTH_TOLERANCE)]
        tolerance_length: f64,
        /// Print every cell, not only the failing ones.
        #[arg(long)]
        all: bool,
    },
    /// Mean total variation between the fiducial distribution and its Gaussian limit.
    Bvm {
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.5])]
        theta_values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [20usize, 100, 500, 2000])]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        replicates: usize,
        #[arg(long, default_value_t = 4096)]
        grid_size: usize,
        #[arg(long, env = SEED_ENV, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a one-knot linear spline to simulated data and summarise the fiducial chain.
    SplineDemo {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        knot: f64,
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, env = SEED_ENV, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// key=value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, alias = "n_values", value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long, alias = "theta_values", value_delimiter = ',')]
    theta_values: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, alias = "grid_size")]
    grid_size: Option<usize>,
    /// Also read from the GFI_SEED environment variable.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            config.merge_key_values(&text)?;
        }
        if let Some(m) = &self.methods {
            config.methods = m.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.n_values {
            config.n_values = v.clone();
        }
        if let Some(v) = &self.theta_values {
            config.theta_values = v.clone();
        }
        if let Some(v) = self.replicates {
            config.replicates = v;
        }
        if let Some(v) = self.level {
            config.level = v;
        }
        if let Some(v) = self.grid_size {
            config.grid_size = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value = "csv")]
    format: String,
    /// Destination file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn format(&self) -> Result<Format, Error> {
        self.format.parse()
    }
}

fn write_text(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.into(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_) | Error::Io { .. } | Error::Csv(_) | Error::Json(_) | Error::UnknownCell { .. }
    )
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Coverage { experiment, output } => {
            let config = experiment.resolve()?;
            let format = output.format()?;
            let records = run_experiment(&config)?;
            match &output.output {
                Some(path) => sim::emit(&records, format, path)?,
                None => write_text(&sim::render(&records, format)?, None)?,
            }
            Ok(true)
        }
        Command::Verify { experiment, input, format, tolerance_coverage, tolerance_length, all } => {
            let format: Format = format.parse()?;
            let records = match &input {
                Some(path) => sim::load(path, format)?,
                None => run_experiment(&experiment.resolve()?)?,
            };
            let report = compare_to_reference(&records, tolerance_coverage, tolerance_length)?;
            if format == Format::Json {
                write_text(&(serde_json::to_string_pretty(&report)? + "\n"), None)?;
            } else {
                let mut text = String::new();
                for c in report.cells.iter().filter(|c| all || !c.passed) {
                    text += &format!(
                        "{} {:<13} n={:<4} theta={:<5} coverage {:.4} vs {:.3} (tol {:.4})  length {:.4} vs {:.4} (tol {:.3})\n",
                        if c.passed { "ok  " } else { "FAIL" },
                        c.method.name(),
                        c.n,
                        c.theta0,
                        c.coverage,
                        c.reference_coverage,
                        c.coverage_tolerance,
                        c.mean_length,
                        c.reference_length,
                        c.length_tolerance,
                    );
                }
                text += &format!(
                    "{} of {} cells within tolerance ({:.1}%): {}\n",
                    report.passed_cells,
                    report.cells.len(),
                    100.0 * report.pass_fraction,
                    if report.passed { "PASS" } else { "FAIL" }
                );
                write_text(&text, None)?;
            }
            Ok(report.passed)
        }
        Command::Bvm { theta_values, n_values, replicates, grid_size, seed, output } => {
            let format = output.format()?;
            let rows = sim::tv_decay_study(&theta_values, &n_values, replicates, grid_size, seed)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
                Format::Csv => {
                    let mut s = String::from("theta0,n,replicates,mean_tv,sd_tv\n");
                    for r in &rows {
                        s += &format!("{:.16e},{},{},{:.16e},{:.16e}\n", r.theta0, r.n, r.replicates, r.mean_tv, r.sd_tv);
                    }
                    s
                }
            };
            write_text(&text, output.output.as_deref())?;
            Ok(true)
        }
        Command::SplineDemo { n, knot, sigma, steps, level, seed } => {
            spline_demo(n, knot, sigma, steps, level, seed)?;
            Ok(true)
        }
    }
}

fn spline_demo(n: usize, knot: f64, sigma: f64, steps: usize, level: f64, seed: u64) -> Result<(), Error> {
    let domain = SplineDomain::new(0.0, 1.0)?;
    let truth = SplineModel::new(1, vec![knot], vec![0.2, 1.0, -2.0], sigma)
        .and_then(|m| m.validate(&domain).map(|_| m))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let data = spline::simulate(&truth, &domain, n, &mut substream(seed, 1))?;
    let init = spline::least_squares_init(&data, &domain, 1, 1)?;
    let chain = spline::sample_gfd(&data, &domain, &init, steps, seed)?;
    let names = ["t1", "alpha0", "alpha1", "alpha2", "sigma2"];
    let truth_vec = truth.param_vector();
    let mut text = format!(
        "draws {}  acceptance {:.3}  seed {}\nparam,truth,mean,sd,lower,upper\n",
        chain.draws.len(),
        chain.acceptance_rate,
        seed
    );
    for (j, name) in names.iter().enumerate() {
        let iv = chain.interval(j, level)?;
        text += &format!(
            "{name},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            truth_vec[j],
            chain.mean(j),
            chain.sd(j),
            iv.lo,
            iv.hi
        );
    }
    write_text(&text, None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_config_error(&e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
