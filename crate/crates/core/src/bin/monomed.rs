use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use monomed::calibration::{calibrate, CalibrationConfig, CriticalValues, DEFAULT_REPLICATES};
use monomed::io::read_input;
use monomed::isotonic::{FitMethod, WeightedMeans};
use monomed::med::{hsu_berger_med, step_up_identify_med};
use monomed::report::{critical_values_table, ordering_table, study_table, FitReport, MedReport};
use monomed::sim::{run_error_study, run_ordering_study, run_power_study, ScenarioConfig};
use monomed::Error;

#[derive(Parser)]
#[command(
    name = "monomed",
    version,
    about = "Monotone dose-response means and MED identification"
)]
struct Cli {
    /// Worker threads for Monte Carlo work (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Sdmmsa,
    Pava,
    Oracle,
}

impl From<Method> for FitMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Sdmmsa => FitMethod::Sdmmsa,
            Method::Pava => FitMethod::Pava,
            Method::Oracle => FitMethod::Oracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Comparator {
    Hb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Error,
    Power,
    Ordering,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Decimals shown in tables.
    #[arg(long, default_value_t = 3)]
    digits: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Fit nondecreasing means to the dose groups of a CSV file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "sdmmsa")]
        method: Method,
        #[command(flatten)]
        output: Output,
    },
    /// Calibrate step-up cutoffs by Monte Carlo.
    Calibrate {
        /// Data file supplying the design (sizes and nu).
        #[arg(long, conflicts_with = "sizes")]
        input: Option<PathBuf>,
        /// Group sizes n_0,n_1,...,n_k (control first).
        #[arg(long, value_delimiter = ',', requires = "seed")]
        sizes: Option<Vec<u32>>,
        /// Error degrees of freedom; defaults to sum(n) - (k + 1).
        #[arg(long)]
        nu: Option<u32>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long)]
        seed: u64,
        /// Where to write the calibration table (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Identify the minimum effective dose.
    Med {
        #[arg(long)]
        input: PathBuf,
        /// Calibration table from `calibrate`; otherwise cutoffs are calibrated inline.
        #[arg(long)]
        cutoffs: Option<PathBuf>,
        /// Seed for inline calibration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, value_enum)]
        comparator: Option<Comparator>,
        #[command(flatten)]
        output: Output,
    },
    /// Run a simulation study on a JSON scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "error")]
        study: Study,
        /// Calibration table; otherwise cutoffs are calibrated inline.
        #[arg(long)]
        cutoffs: Option<PathBuf>,
        /// Seed for inline calibration.
        #[arg(long)]
        calibration_seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        calibration_replicates: usize,
        /// Dose whose true mean is raised (ordering study).
        #[arg(long, default_value_t = 1)]
        dose: usize,
        /// Increasing amounts added to that mean (ordering study).
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
        bumps: Vec<f64>,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

/// Failure classes and their process exit codes.
#[derive(Debug)]
enum Failure {
    Input(String),
    Config(String),
    Calibration(String),
    Design(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
            Failure::Calibration(_) => 4,
            Failure::Design(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m)
            | Failure::Config(m)
            | Failure::Calibration(m)
            | Failure::Design(m)
            | Failure::Io(m) => m,
        }
    }

    /// Library errors raised while reading user data.
    fn input(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Calibration { .. } => Failure::Calibration(e.to_string()),
            Error::DesignMismatch(_) => Failure::Design(e.to_string()),
            Error::Data(_) => Failure::Input(e.to_string()),
            Error::Argument(_) | Error::Capacity { .. } => Failure::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_cutoffs(path: &Path) -> CliResult<CriticalValues> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    CriticalValues::from_json(&text).map_err(Failure::input)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn check_level(alpha: f64, delta: f64) -> CliResult<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Config(format!("alpha {alpha} is not in (0, 1)")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Failure::Config(format!("delta {delta} must be >= 0")));
    }
    Ok(())
}

fn cmd_fit(input: &Path, method: Method, output: &Output) -> CliResult<String> {
    let data = read_input(input).map_err(Failure::input)?;
    let groups = data.groups().map_err(Failure::input)?;
    if groups.len() < 2 {
        return Err(Failure::Input(
            "need a control row and at least one dose row".into(),
        ));
    }
    let (control, treatments) = groups.split_first().expect("checked length");
    let weighted = WeightedMeans::new(
        treatments.iter().map(|g| g.mean).collect(),
        treatments.iter().map(|g| f64::from(g.n)).collect(),
    )
    .map_err(Failure::input)?;
    let method = FitMethod::from(method);
    let fit = method.fit(&weighted)?;
    let report = FitReport::new(method, Some(control.clone()), treatments, &fit);
    Ok(match output.format {
        Format::Table => report.to_table(output.digits),
        Format::Json => json(&report),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_calibrate(
    input: Option<&Path>,
    sizes: Option<Vec<u32>>,
    nu: Option<u32>,
    alpha: f64,
    delta: f64,
    replicates: usize,
    seed: u64,
    out: Option<&Path>,
    output: &Output,
) -> CliResult<String> {
    check_level(alpha, delta)?;
    let (sizes, nu) = match (input, sizes) {
        (Some(path), _) => {
            let data = read_input(path)
                .and_then(|d| d.dose_response())
                .map_err(Failure::input)?;
            (data.sizes(), nu.unwrap_or(data.nu()))
        }
        (None, Some(sizes)) => {
            let total: u32 = sizes.iter().sum();
            let default_nu = total.saturating_sub(sizes.len() as u32);
            (sizes, nu.unwrap_or(default_nu))
        }
        (None, None) => {
            return Err(Failure::Config("give either --input or --sizes".into()));
        }
    };
    let config = CalibrationConfig::new(alpha, delta, sizes, nu, replicates, seed)?;
    let cv = calibrate(&config)?;
    let text = cv.to_json()?;
    if let Some(path) = out {
        write_file(path, &(text.clone() + "\n"))?;
    }
    Ok(match output.format {
        Format::Table => critical_values_table(&cv, output.digits),
        Format::Json => text,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_med(
    input: &Path,
    cutoffs: Option<&Path>,
    seed: Option<u64>,
    replicates: usize,
    alpha: f64,
    delta: f64,
    comparator: Option<Comparator>,
    output: &Output,
) -> CliResult<String> {
    check_level(alpha, delta)?;
    let data = read_input(input)
        .and_then(|d| d.dose_response())
        .map_err(Failure::input)?;
    let cv = match (cutoffs, seed) {
        (Some(path), _) => load_cutoffs(path)?,
        (None, Some(seed)) => {
            let config =
                CalibrationConfig::new(alpha, delta, data.sizes(), data.nu(), replicates, seed)?;
            calibrate(&config)?
        }
        (None, None) => {
            return Err(Failure::Config(
                "give --cutoffs or a --seed for inline calibration".into(),
            ))
        }
    };
    let mut decisions = vec![step_up_identify_med(&data, &cv, delta)?];
    if comparator.is_some() {
        decisions.push(hsu_berger_med(&data, delta, alpha)?);
    }
    let report = MedReport {
        delta,
        alpha,
        s: data.s(),
        nu: data.nu(),
        decisions,
    };
    Ok(match output.format {
        Format::Table => report.to_table(output.digits),
        Format::Json => json(&report),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario: &Path,
    study: Study,
    cutoffs: Option<&Path>,
    calibration_seed: Option<u64>,
    calibration_replicates: usize,
    dose: usize,
    bumps: &[f64],
    out: Option<&Path>,
    output: &Output,
) -> CliResult<String> {
    let text = fs::read_to_string(scenario)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", scenario.display())))?;
    let scenario: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("scenario: {e}")))?;
    scenario.validate().map_err(Failure::input)?;

    let (json_text, table) = match study {
        Study::Ordering => {
            let report = run_ordering_study(&scenario, dose, bumps, None)?;
            (json(&report), ordering_table(&report, output.digits))
        }
        Study::Error | Study::Power => {
            let cv = match (cutoffs, calibration_seed) {
                (Some(path), _) => load_cutoffs(path)?,
                (None, Some(seed)) => {
                    calibrate(&scenario.calibration_config(calibration_replicates, seed)?)?
                }
                (None, None) => {
                    return Err(Failure::Config(
                        "give --cutoffs or a --calibration-seed".into(),
                    ))
                }
            };
            let result = match study {
                Study::Error => run_error_study(&scenario, &cv)?,
                _ => run_power_study(&scenario, &cv)?,
            };
            (json(&result), study_table(&result, output.digits))
        }
    };
    if let Some(path) = out {
        write_file(path, &(json_text.clone() + "\n"))?;
    }
    Ok(match output.format {
        Format::Table => table,
        Format::Json => json_text,
    })
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Fit {
            input,
            method,
            output,
        } => cmd_fit(&input, method, &output),
        Command::Calibrate {
            input,
            sizes,
            nu,
            alpha,
            delta,
            replicates,
            seed,
            out,
            output,
        } => cmd_calibrate(
            input.as_deref(),
            sizes,
            nu,
            alpha,
            delta,
            replicates,
            seed,
            out.as_deref(),
            &output,
        ),
        Command::Med {
            input,
            cutoffs,
            seed,
            replicates,
            alpha,
            delta,
            comparator,
            output,
        } => cmd_med(
            &input,
            cutoffs.as_deref(),
            seed,
            replicates,
            alpha,
            delta,
            comparator,
            &output,
        ),
        Command::Simulate {
            scenario,
            study,
            cutoffs,
            calibration_seed,
            calibration_replicates,
            dose,
            bumps,
            out,
            output,
        } => cmd_simulate(
            &scenario,
            study,
            cutoffs.as_deref(),
            calibration_seed,
            calibration_replicates,
            dose,
            &bumps,
            out.as_deref(),
            &output,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
