//! File formats: trajectory CSV/JSON, covariance CSV, results CSV + JSON mirror.
//! Every file is written atomically through a temp file in the target directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use covertctl_core::{CovMatrix, Trajectory};

use crate::error::{AppError, AppResult};
use crate::montecarlo::ResultRow;

pub const RESULTS_HEADER: &str = "param,value,alpha,beta,alpha_ci,beta_ci,trials,verdict";

/// Formats with 12 significant digits, shortest representation.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Replaces `path` with `bytes` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| AppError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| AppError::io(path, e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// `n,x,u` with the initial state on row `n = 0` (empty control).
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("n,x,u\n");
    let _ = writeln!(out, "0,{},", fmt_num(traj.initial_state));
    for (k, (x, u)) in traj.states.iter().zip(&traj.controls).enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, fmt_num(*x), fmt_num(*u));
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> AppResult<Trajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("n,x,u") => {}
        other => {
            return Err(AppError::config(format!(
                "trajectory CSV header must be 'n,x,u', found {other:?}"
            )))
        }
    }
    let mut initial_state = None;
    let mut states = Vec::new();
    let mut controls = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(AppError::config(format!(
                "trajectory CSV row {}: expected 3 fields",
                row + 1
            )));
        }
        let bad =
            |what: &str| AppError::config(format!("trajectory CSV row {}: bad {what}", row + 1));
        let n: usize = fields[0].parse().map_err(|_| bad("n"))?;
        if n != row {
            return Err(bad("n (rows must be consecutive from 0)"));
        }
        let x: f64 = fields[1].parse().map_err(|_| bad("x"))?;
        if n == 0 {
            initial_state = Some(x);
        } else {
            states.push(x);
            controls.push(fields[2].parse().map_err(|_| bad("u"))?);
        }
    }
    Ok(Trajectory {
        states,
        controls,
        initial_state: initial_state
            .ok_or_else(|| AppError::config("trajectory CSV has no rows"))?,
        seed: 0,
        stream: 0,
        crossing_times: Vec::new(),
    })
}

/// Writes JSON for a `.json` path and CSV otherwise.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> AppResult<()> {
    if is_json(path) {
        let text =
            serde_json::to_string_pretty(traj).map_err(|e| AppError::config(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    } else {
        write_atomic(path, trajectory_to_csv(traj).as_bytes())
    }
}

pub fn read_trajectory(path: &Path) -> AppResult<Trajectory> {
    let text = read_text(path)?;
    if is_json(path) {
        let t: Trajectory =
            serde_json::from_str(&text).map_err(|e| AppError::config(e.to_string()))?;
        if t.states.len() != t.controls.len() {
            return Err(AppError::config(
                "trajectory states and controls differ in length",
            ));
        }
        Ok(t)
    } else {
        trajectory_from_csv(&text)
    }
}

/// Row-major, no header.
pub fn cov_to_csv(cov: &CovMatrix) -> String {
    let n = cov.dim();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_num(cov.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn cov_from_csv(text: &str) -> AppResult<CovMatrix> {
    let mut entries = Vec::new();
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        for f in line.split(',') {
            entries.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| AppError::config(format!("bad covariance entry '{f}'")))?,
            );
        }
        rows += 1;
    }
    Ok(CovMatrix::from_row_major(rows, entries)?)
}

pub fn result_csv_line(row: &ResultRow) -> String {
    let r = &row.rates;
    format!(
        "{},{},{},{},{},{},{},{}",
        row.param,
        row.value.map(fmt_num).unwrap_or_default(),
        fmt_num(r.alpha_hat),
        fmt_num(r.beta_hat),
        fmt_num(r.alpha_ci),
        fmt_num(r.beta_ci),
        r.trials,
        row.verdict.map(|v| v.as_str()).unwrap_or("")
    )
}

/// JSON companion of a results CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsMirror {
    pub records: Vec<ResultRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    /// Seconds since the Unix epoch at write time; the only non-reproducible field.
    pub timestamp_unix: u64,
    pub config: serde_json::Value,
    pub row: ResultRow,
}

pub fn mirror_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Appends rows to the results CSV (header on creation) and to its JSON mirror.
pub fn append_results(csv: &Path, config: &serde_json::Value, rows: &[ResultRow]) -> AppResult<()> {
    let mut text = match fs::read_to_string(csv) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(AppError::io(csv, e)),
    };
    if text.is_empty() {
        text.push_str(RESULTS_HEADER);
        text.push('\n');
    } else {
        if text.lines().next().map(str::trim) != Some(RESULTS_HEADER) {
            return Err(AppError::config(format!(
                "{} exists but is not a results file",
                csv.display()
            )));
        }
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    for row in rows {
        text.push_str(&result_csv_line(row));
        text.push('\n');
    }

    let mirror = mirror_path(csv);
    let mut doc = match fs::read_to_string(&mirror) {
        Ok(t) => serde_json::from_str::<ResultsMirror>(&t)
            .map_err(|e| AppError::config(format!("{}: {e}", mirror.display())))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => ResultsMirror {
            records: Vec::new(),
        },
        Err(e) => return Err(AppError::io(&mirror, e)),
    };
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    for row in rows {
        doc.records.push(ResultRecord {
            timestamp_unix: stamp,
            config: config.clone(),
            row: row.clone(),
        });
    }
    let json = serde_json::to_string_pretty(&doc).map_err(|e| AppError::config(e.to_string()))?;
    write_atomic(csv, text.as_bytes())?;
    write_atomic(&mirror, json.as_bytes())
}
