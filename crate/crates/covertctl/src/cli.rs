//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use covertctl_core::analysis::{
    covert_gain_bound, reset_covert_bound, reset_detect_gain_bound, BoundDirection, BoundReport,
};
use covertctl_core::controllers::one_bit_fixed_point;
use covertctl_core::detectors::{innovation_energy_design, magnitude_design};
use covertctl_core::{simulate, Detector, NoiseModel};

use crate::error::{AppError, AppResult};
use crate::io::{append_results, fmt_num, read_text, read_trajectory, write_trajectory};
use crate::montecarlo::{estimate_error_rates, sweep, ExperimentConfig, ResultRow};
use crate::verify::{self, Grid, Oracle};

#[derive(Debug, Parser)]
#[command(
    name = "covertctl",
    version,
    about = "Covert control of AR(1) systems: simulation, bounds, detectors and Monte Carlo experiments",
    after_help = "Exit status: 0 on success, 1 on a domain or configuration error, 2 on an I/O error.\n\
                  COVERTCTL_THREADS caps Monte Carlo parallelism (default: hardware threads)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory from a config and write it as CSV (`n,x,u`) or JSON.
    Simulate {
        /// JSON config with `system`, `controller`, `horizon_n`, `master_seed`.
        #[arg(long)]
        config: PathBuf,
        /// Output path; a `.json` extension selects JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate closed-form limits; numeric flags accept comma-separated lists
    /// and every combination is evaluated.
    Bounds {
        #[arg(long, value_enum)]
        which: BoundKind,
        /// Plant gain `a`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        a: Vec<f64>,
        /// Covertness level: the target is `alpha + beta >= 1 - epsilon`.
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        /// Detection level: the target is `alpha + beta <= delta`.
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        /// Uniform bound on `E|X_n|^gamma` under control (magnitude design).
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
        /// Moment order used with `--c`.
        #[arg(long, value_delimiter = ',')]
        gamma: Vec<f64>,
        /// Noise standard deviation for Gaussian noise.
        #[arg(long = "sigma-z", value_delimiter = ',')]
        sigma_z: Vec<f64>,
        /// Noise law for the sample-count design.
        #[arg(long, value_enum, default_value = "uniform")]
        noise: NoiseKind,
        /// Support bound `B` of bounded noise.
        #[arg(long = "bound-b", value_delimiter = ',')]
        bound_b: Vec<f64>,
        /// Control energy `E_U`; defaults to the steady one-bit energy
        /// `(a B / (2 - a))^2` when `--a` and `--bound-b` are given.
        #[arg(long = "e-u", value_delimiter = ',')]
        e_u: Vec<f64>,
        /// Print JSON instead of a CSV table.
        #[arg(long)]
        json: bool,
    },
    /// Apply the configured detector to a stored trajectory and print the decision.
    Detect {
        #[arg(long)]
        config: PathBuf,
        /// Trajectory file written by `simulate` (CSV or JSON).
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Estimate (alpha, beta) and append a row to a results CSV (JSON mirror alongside).
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat an experiment over values of one numeric config field.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path of the field, e.g. `controller.b` or `detector.t`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, num_args = 0..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check closed forms against dense linear-algebra oracles.
    Verify {
        #[arg(long, value_enum)]
        oracle: OracleArg,
        /// `default` or a JSON grid file.
        #[arg(long, default_value = "default")]
        grid: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum BoundKind {
    /// Largest covert gain change `|b|` for a plant with gain `a` (needs --a, --epsilon).
    CovertGain,
    /// Largest `|a|` for which one stationary reset is covert (needs --epsilon).
    ResetCovert,
    /// Smallest `|a|` for which a known-time reset is detectable (needs --delta).
    ResetDetect,
    /// Innovation-energy sample count and threshold (needs --delta and noise/energy flags).
    K0,
    /// Magnitude-test level M and sample time n0 (needs --c, --gamma, --delta, --a, --sigma-z).
    N0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Covariance,
    Trace,
    Logdet,
    Inverse,
    Kl,
}

impl From<OracleArg> for Oracle {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Covariance => Oracle::Covariance,
            OracleArg::Trace => Oracle::Trace,
            OracleArg::Logdet => Oracle::Logdet,
            OracleArg::Inverse => Oracle::Inverse,
            OracleArg::Kl => Oracle::Kl,
        }
    }
}

fn load_config(path: &Path) -> AppResult<ExperimentConfig> {
    ExperimentConfig::from_json(&read_text(path)?)
}

/// Fails early when the directory that should hold `out` is missing.
fn check_output_dir(out: &Path) -> AppResult<()> {
    match out.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(AppError::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        )),
        _ => Ok(()),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> AppResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| AppError::io("<stdout>", e))
}

/// Runs one command, writing results to `out` and remarks to `err`.
pub fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> AppResult<()> {
    match command {
        Command::Simulate { config, out: path } => {
            let cfg = load_config(&config)?;
            check_output_dir(&path)?;
            for w in cfg.controller.warnings(&cfg.system) {
                let _ = writeln!(err, "warning: {w}");
            }
            let traj = simulate(&cfg.system, &cfg.controller, cfg.horizon_n, cfg.master_seed)?;
            write_trajectory(&path, &traj)?;
            emit(
                out,
                &format!("wrote {} states to {}\n", traj.len(), path.display()),
            )
        }
        Command::Bounds {
            which,
            a,
            epsilon,
            delta,
            c,
            gamma,
            sigma_z,
            noise,
            bound_b,
            e_u,
            json,
        } => {
            let flags = BoundFlags {
                a,
                epsilon,
                delta,
                c,
                gamma,
                sigma_z,
                noise,
                bound_b,
                e_u,
            };
            let reports = evaluate_bounds(which, &flags)?;
            if json {
                let text = serde_json::to_string_pretty(&reports)
                    .map_err(|e| AppError::config(e.to_string()))?;
                emit(out, &format!("{text}\n"))
            } else {
                emit(out, &bounds_table(&reports))
            }
        }
        Command::Detect { config, trajectory } => {
            let cfg = load_config(&config)?;
            let traj = read_trajectory(&trajectory)?;
            let detector: Detector = cfg.build_detector()?;
            let decision = detector.decide(&traj, &cfg.system)?;
            let text =
                serde_json::to_string(&decision).map_err(|e| AppError::config(e.to_string()))?;
            emit(out, &format!("{text}\n"))
        }
        Command::Experiment { config, out: path } => {
            let cfg = load_config(&config)?;
            check_output_dir(&path)?;
            for w in cfg.controller.warnings(&cfg.system) {
                let _ = writeln!(err, "warning: {w}");
            }
            let rates = estimate_error_rates(&cfg)?;
            let row = ResultRow::new("", None, rates, cfg.bound.as_ref());
            let json = serde_json::to_value(&cfg).map_err(|e| AppError::config(e.to_string()))?;
            append_results(&path, &json, std::slice::from_ref(&row))?;
            emit(out, &summary_line(&row))
        }
        Command::Sweep {
            config,
            param,
            values,
            out: path,
        } => {
            let cfg = load_config(&config)?;
            check_output_dir(&path)?;
            let results = sweep(&cfg, &param, &values)?;
            let rows: Vec<ResultRow> = results
                .into_iter()
                .map(|(v, r)| ResultRow::new(&param, Some(v), r, cfg.bound.as_ref()))
                .collect();
            let json = serde_json::to_value(&cfg).map_err(|e| AppError::config(e.to_string()))?;
            append_results(&path, &json, &rows)?;
            for row in &rows {
                emit(out, &summary_line(row))?;
            }
            Ok(())
        }
        Command::Verify { oracle, grid } => {
            let grid = if grid == "default" {
                Grid::default()
            } else {
                Grid::from_json(&read_text(Path::new(&grid))?)?
            };
            let report = verify::run(oracle.into(), &grid)?;
            emit(
                out,
                &format!(
                    "{}: {} cases, max abs error {:.3e} (tolerance {:e}) {}\n",
                    report.oracle.name(),
                    report.cases,
                    report.max_abs_error,
                    report.tolerance,
                    if report.passed { "PASS" } else { "FAIL" }
                ),
            )?;
            if report.passed {
                Ok(())
            } else {
                Err(AppError::config(format!(
                    "{} oracle exceeded its tolerance",
                    report.oracle.name()
                )))
            }
        }
    }
}

fn summary_line(row: &ResultRow) -> String {
    let r = &row.rates;
    let mut s = String::new();
    if !row.param.is_empty() {
        s.push_str(&format!(
            "{}={} ",
            row.param,
            row.value.map(fmt_num).unwrap_or_default()
        ));
    }
    s.push_str(&format!(
        "alpha={} (+/-{}) beta={} (+/-{}) trials={}",
        fmt_num(r.alpha_hat),
        fmt_num(r.alpha_ci),
        fmt_num(r.beta_hat),
        fmt_num(r.beta_ci),
        r.trials
    ));
    if let Some(v) = row.verdict {
        s.push_str(&format!(" verdict={}", v.as_str()));
    }
    s.push('\n');
    s
}

pub struct BoundFlags {
    pub a: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma_z: Vec<f64>,
    pub noise: NoiseKind,
    pub bound_b: Vec<f64>,
    pub e_u: Vec<f64>,
}

fn need<'a>(values: &'a [f64], flag: &str) -> AppResult<&'a [f64]> {
    if values.is_empty() {
        Err(AppError::config(format!("missing required flag --{flag}")))
    } else {
        Ok(values)
    }
}

/// Cartesian product of the listed flag values.
fn product(lists: &[&[f64]]) -> Vec<Vec<f64>> {
    lists.iter().fold(vec![Vec::new()], |acc, list| {
        acc.iter()
            .flat_map(|prefix| {
                list.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

pub fn evaluate_bounds(which: BoundKind, f: &BoundFlags) -> AppResult<Vec<BoundReport>> {
    let mut out = Vec::new();
    match which {
        BoundKind::CovertGain => {
            for v in product(&[need(&f.a, "a")?, need(&f.epsilon, "epsilon")?]) {
                let value = covert_gain_bound(v[0], v[1])?;
                out.push(BoundReport::new(
                    "covert_gain",
                    value,
                    BoundDirection::Upper,
                    &[("a", v[0]), ("epsilon", v[1])],
                )?);
            }
        }
        BoundKind::ResetCovert => {
            for &eps in need(&f.epsilon, "epsilon")? {
                out.push(BoundReport::new(
                    "reset_covert",
                    reset_covert_bound(eps)?,
                    BoundDirection::Upper,
                    &[("epsilon", eps)],
                )?);
            }
        }
        BoundKind::ResetDetect => {
            for &d in need(&f.delta, "delta")? {
                out.push(BoundReport::new(
                    "reset_detect",
                    reset_detect_gain_bound(d)?,
                    BoundDirection::Lower,
                    &[("delta", d)],
                )?);
            }
        }
        BoundKind::K0 => {
            let scale = match f.noise {
                NoiseKind::Gaussian => need(&f.sigma_z, "sigma-z")?,
                NoiseKind::Uniform => need(&f.bound_b, "bound-b")?,
            };
            let derive_energy = f.e_u.is_empty();
            let energies: Vec<f64> = if derive_energy {
                need(&f.a, "a or --e-u")?.to_vec()
            } else {
                f.e_u.clone()
            };
            for v in product(&[need(&f.delta, "delta")?, scale, &energies]) {
                let (delta, s, x) = (v[0], v[1], v[2]);
                let noise = match f.noise {
                    NoiseKind::Gaussian => NoiseModel::gaussian(s)?,
                    NoiseKind::Uniform => NoiseModel::uniform(s)?,
                };
                let mut inputs = vec![("delta", delta)];
                inputs.push(match f.noise {
                    NoiseKind::Gaussian => ("sigma_z", s),
                    NoiseKind::Uniform => ("bound_b", s),
                });
                let e_u = if derive_energy {
                    // steady one-bit energy (a B / (2 - a))^2 = ((a/2) C)^2 at the fixed point
                    let b = f.bound_b.first().copied().unwrap_or(s);
                    let c = 0.5 * x * one_bit_fixed_point(x, b);
                    inputs.push(("a", x));
                    c * c
                } else {
                    x
                };
                inputs.push(("e_u", e_u));
                let d = innovation_energy_design(delta, &noise, e_u)?;
                inputs.push(("k0_real", d.k0_real));
                inputs.push(("t", d.t));
                out.push(BoundReport::new(
                    "k0",
                    d.k0 as f64,
                    BoundDirection::Lower,
                    &inputs,
                )?);
            }
        }
        BoundKind::N0 => {
            for v in product(&[
                need(&f.c, "c")?,
                need(&f.gamma, "gamma")?,
                need(&f.delta, "delta")?,
                need(&f.a, "a")?,
                need(&f.sigma_z, "sigma-z")?,
            ]) {
                let d = magnitude_design(v[0], v[1], v[2], v[3], v[4])?;
                let inputs = [
                    ("c", v[0]),
                    ("gamma", v[1]),
                    ("delta", v[2]),
                    ("a", v[3]),
                    ("sigma_z", v[4]),
                ];
                out.push(BoundReport::new(
                    "magnitude_m",
                    d.m,
                    BoundDirection::Lower,
                    &inputs,
                )?);
                out.push(BoundReport::new(
                    "n0",
                    d.n0 as f64,
                    BoundDirection::Lower,
                    &inputs,
                )?);
            }
        }
    }
    Ok(out)
}

/// One CSV record per report: `name,direction,value,inputs` with inputs as `k=v;k=v`.
pub fn bounds_table(reports: &[BoundReport]) -> String {
    let mut s = String::from("name,direction,value,inputs\n");
    for r in reports {
        let inputs: Vec<String> = r
            .inputs
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_num(*v)))
            .collect();
        let dir = match r.direction {
            BoundDirection::Upper => "upper",
            BoundDirection::Lower => "lower",
        };
        s.push_str(&format!(
            "{},{dir},{},{}\n",
            r.name,
            fmt_num(r.value),
            inputs.join(";")
        ));
    }
    s
}

/// Parses arguments, runs, reports errors; returns the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
