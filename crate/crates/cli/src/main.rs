//! Command-line surface: classify | criteria | falsify | gallery-list |
//! compose-check | spectral-sample.
//!
//! Verdicts never drive exit codes; scripts parse the JSON. Exit codes
//! signal operational failure only: 2 parse/usage errors, 3 incompatible
//! projectors, 4 hypothesis gates.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skewlab::dichotomy::DichotomyClass;
use skewlab::error::Error;
use skewlab::grid::{GridSpec, RangeSpec, Spacing};
use skewlab::report;
use skewlab::spectral::ModeVector;

#[derive(Parser)]
#[command(name = "skewlab", version, about = "numerical laboratory for skew-evolution semiflows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Exponential-class t range as min:max:count
    #[arg(long = "grid-t", value_parser = parse_range)]
    grid_t: Option<(f64, f64, usize)>,
    /// Exponential-class s range as min:max:count
    #[arg(long = "grid-s", value_parser = parse_range)]
    grid_s: Option<(f64, f64, usize)>,
    /// Certification tolerance in log-units
    #[arg(long = "tol-log", default_value_t = 1e-9)]
    tol_log: f64,
    /// Use plain linear spacing instead of the linear/logarithmic mix
    #[arg(long)]
    linear: bool,
}

impl GridArgs {
    fn build(&self) -> Result<(GridSpec, GridSpec), Error> {
        let spacing = if self.linear { Spacing::Linear } else { Spacing::LogMix };
        let mut exp = GridSpec::default_exponential();
        let mut poly = GridSpec::default_polynomial();
        if let Some((min, max, count)) = self.grid_t {
            exp.t_range = RangeSpec::new(min, max, count, spacing)?;
            poly.t_range = RangeSpec::new(min.max(1.0), max, count, spacing)?;
        }
        if let Some((min, max, count)) = self.grid_s {
            exp.s_range = RangeSpec::new(min, max, count, spacing)?;
            poly.s_range = RangeSpec::new(min.max(1.0), max, count, spacing)?;
        }
        exp.tol_log = self.tol_log;
        poly.tol_log = self.tol_log;
        Ok((exp, poly))
    }
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Registered instance name (see gallery-list)
    #[arg(long)]
    gallery: Option<String>,
    /// Path to an instance-spec JSON file
    #[arg(long = "spec")]
    spec_path: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit, falsify, and cross-check all six dichotomy classes
    Classify {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Override the first component rate of the two-exponent instance
        #[arg(long)]
        alpha1: Option<f64>,
        /// Override the second component rate of the two-exponent instance
        #[arg(long)]
        alpha2: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Verify the integral characterization of exponential dichotomy
    Criteria {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Produce a report even when the hypothesis gates fail
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Evaluate a registered falsification witness
    Falsify {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Dichotomy class the witness targets (UED, BVED, ED, UPD, BVPD, PD)
        #[arg(long)]
        class: String,
        /// Registered witness name
        #[arg(long)]
        witness: String,
        #[arg(long = "n-max", default_value_t = 8)]
        n_max: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// List registered instances, witnesses, and recorded conclusions
    GalleryList,
    /// Composition-law residual sweep over the registry and the mode cocycle
    ComposeCheck {
        #[arg(long, default_value_t = 1000)]
        triples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "tol-log", default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Emit a CSV sample of the mode evolution for plotting
    SpectralSample {
        /// Initial coefficients, comma separated
        #[arg(long, default_value = "0,1")]
        modes: String,
        #[arg(long = "t-max", default_value_t = 0.5)]
        t_max: f64,
        #[arg(long, default_value_t = 11)]
        nt: usize,
        #[arg(long, default_value_t = 21)]
        ny: usize,
        #[arg(long)]
        out: Option<String>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected min:max:count".into());
    }
    let min: f64 = parts[0].parse().map_err(|e| format!("bad min: {e}"))?;
    let max: f64 = parts[1].parse().map_err(|e| format!("bad max: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad count: {e}"))?;
    Ok((min, max, count))
}

fn emit(text: &str, out: Option<&str>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Parse(format!("cannot write {path:?}: {e}"))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Parse(format!("stdout: {e}")))
        }
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify { instance, grid, alpha1, alpha2, out } => {
            let inst = if instance.gallery.as_deref() == Some("ex21") && (alpha1.is_some() || alpha2.is_some()) {
                skewlab::gallery::ex21(alpha1.unwrap_or(-1.0), alpha2.unwrap_or(1.0))
            } else {
                report::resolve_instance(instance.gallery.as_deref(), instance.spec_path.as_deref())?
            };
            let (exp, poly) = grid.build()?;
            let text = report::classify_json(&inst, &exp, &poly)?;
            emit(&text, out.as_deref())
        }
        Command::Criteria { instance, grid, force, out } => {
            let inst = report::resolve_instance(instance.gallery.as_deref(), instance.spec_path.as_deref())?;
            let (exp, _) = grid.build()?;
            let text = report::criteria_json(&inst, &exp, force)?;
            emit(&text, out.as_deref())
        }
        Command::Falsify { instance, class, witness, n_max, out } => {
            let inst = report::resolve_instance(instance.gallery.as_deref(), instance.spec_path.as_deref())?;
            let class = DichotomyClass::parse(&class)?;
            let text = report::falsify_json(&inst, class, &witness, n_max)?;
            emit(&text, out.as_deref())
        }
        Command::GalleryList => emit(&report::gallery_list_json(), None),
        Command::ComposeCheck { triples, seed, tol, out } => {
            let text = report::compose_check_json(triples, seed, tol)?;
            emit(&text, out.as_deref())
        }
        Command::SpectralSample { modes, t_max, nt, ny, out } => {
            let coeffs: Result<Vec<f64>, _> = modes.split(',').map(str::trim).map(str::parse::<f64>).collect();
            let coeffs = coeffs.map_err(|e| Error::Parse(format!("bad --modes: {e}")))?;
            let text = report::spectral_csv(&ModeVector::new(coeffs), t_max, nt, ny)?;
            emit(&text, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Parse(_) | Error::Validation(_) | Error::Domain(_) | Error::Ordering(_) => 2,
                Error::IncompatibleProjectors { .. } => 3,
                Error::NotApplicable(_) => 4,
                Error::Divergent(_) | Error::LatticeInconsistency(_) => 1,
            };
            ExitCode::from(code)
        }
    }
}
