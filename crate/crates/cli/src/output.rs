use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hypocert::simulator::TimeSeries;
use hypocert::simulator::SweepTable;
use serde::Serialize;

use crate::CliError;

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(path)
}

/// `time,observable_id,mean,variance,replicas`, one row per record and
/// observable.
pub fn timeseries_csv(ts: &TimeSeries) -> String {
    let mut s = String::from("time,observable_id,mean,variance,replicas\n");
    for (t, time) in ts.times.iter().enumerate() {
        for (o, obs) in ts.observables.iter().enumerate() {
            let m = ts.stats[o][t];
            let _ = writeln!(s, "{time},{},{},{},{}", obs.id(), m.mean, m.variance, ts.replicas);
        }
    }
    s
}

pub fn write_timeseries(dir: &Path, ts: &TimeSeries) -> Result<PathBuf, CliError> {
    write_text(dir, "timeseries.csv", &timeseries_csv(ts))
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = String::from("particles,lambda_hat,ci_low,ci_high,r_squared,window_start,window_end\n");
    for row in &table.rows {
        match &row.fit {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    row.particles, f.lambda_hat, f.ci_low, f.ci_high, f.r_squared, f.window[0], f.window[1]
                );
            }
            None => {
                let _ = writeln!(s, "{},,,,,,", row.particles);
            }
        }
    }
    s
}

pub fn write_sweep(dir: &Path, table: &SweepTable) -> Result<PathBuf, CliError> {
    write_text(dir, "sweep.csv", &sweep_csv(table))
}
