//! Summaries over repeated campaigns, read back from their `stats.csv` files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// The columns a summary needs; the others are ignored.
#[derive(Deserialize)]
struct Row {
    seconds: f64,
    max_delta: u64,
}

/// Outcome of one campaign directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub max_delta: u64,
    /// Seconds of the first stats row with a positive delta.
    pub first_positive: Option<f64>,
}

/// Aggregate over campaigns.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
    pub average: f64,
    /// Sample standard deviation over `sqrt(n)`; `None` for a single run.
    pub std_error: Option<f64>,
    pub maximum: u64,
    /// Mean over the runs that reached a positive delta.
    pub time_to_positive: Option<f64>,
}

pub fn read_run(dir: &Path) -> Result<RunSummary> {
    let path = dir.join("stats.csv");
    if !path.is_file() {
        return Err(Error::config(format!("missing {}", path.display())));
    }
    let mut reader = csv::Reader::from_path(&path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let mut max_delta = 0;
    let mut first_positive = None;
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| Error::config(format!("malformed {}: {e}", path.display())))?;
        max_delta = max_delta.max(row.max_delta);
        if row.max_delta > 0 && first_positive.is_none() {
            first_positive = Some(row.seconds);
        }
    }
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        max_delta,
        first_positive,
    })
}

pub fn summarize(runs: Vec<RunSummary>) -> Summary {
    let n = runs.len() as f64;
    let deltas: Vec<f64> = runs.iter().map(|r| r.max_delta as f64).collect();
    let average = deltas.iter().sum::<f64>() / n;
    let std_error = (runs.len() > 1).then(|| {
        let var = deltas.iter().map(|d| (d - average).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / n.sqrt()
    });
    let times: Vec<f64> = runs.iter().filter_map(|r| r.first_positive).collect();
    let time_to_positive =
        (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
    Summary {
        maximum: runs.iter().map(|r| r.max_delta).max().unwrap_or(0),
        runs,
        average,
        std_error,
        time_to_positive,
    }
}

/// Reads every directory and summarizes them. A missing `stats.csv` is a
/// configuration error.
pub fn report(dirs: &[PathBuf]) -> Result<Summary> {
    if dirs.is_empty() {
        return Err(Error::config(
            "report needs at least one campaign directory",
        ));
    }
    let runs = dirs
        .iter()
        .map(|d| read_run(d))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(runs))
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            let t = r
                .first_positive
                .map_or_else(|| "-".to_string(), |t| format!("{t:.2}"));
            let _ = writeln!(
                s,
                "{}: max_delta={} first_positive_s={t}",
                r.dir.display(),
                r.max_delta
            );
        }
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            s,
            "{:>12} {:>12} {:>10} {:>14}",
            "Average δ", "Std. Error", "Maximum", "Time (s) δ>0"
        );
        let _ = writeln!(
            s,
            "{:>12.2} {:>12} {:>10} {:>14}",
            self.average,
            fmt_opt(self.std_error),
            self.maximum,
            fmt_opt(self.time_to_positive)
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn run_dir(rows: &[(f64, u64)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("seconds,executions,max_delta,coverage_count,queue_size\n");
        for (i, (t, d)) in rows.iter().enumerate() {
            body.push_str(&format!("{t:.3},{i},{d},1,1\n"));
        }
        fs::write(dir.path().join("stats.csv"), body).unwrap();
        dir
    }

    fn paths(dirs: &[tempfile::TempDir]) -> Vec<PathBuf> {
        dirs.iter().map(|d| d.path().to_path_buf()).collect()
    }

    #[test]
    fn constant_series_has_zero_error() {
        let dirs: Vec<_> = (0..5).map(|_| run_dir(&[(0.0, 0), (1.0, 47)])).collect();
        let s = report(&paths(&dirs)).unwrap();
        assert_eq!(s.average, 47.0);
        assert_eq!(s.std_error, Some(0.0));
        assert_eq!(s.maximum, 47);
    }

    #[test]
    fn two_runs_standard_error() {
        let dirs = vec![run_dir(&[(2.0, 3)]), run_dir(&[(4.0, 5)])];
        let s = report(&paths(&dirs)).unwrap();
        assert_eq!(s.average, 4.0);
        assert!((s.std_error.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.maximum, 5);
        assert_eq!(s.time_to_positive, Some(3.0));
    }

    #[test]
    fn first_positive_time() {
        let dirs = vec![run_dir(&[(0.0, 0), (1.0, 0), (5.0, 2), (6.0, 9)])];
        let s = report(&paths(&dirs)).unwrap();
        assert_eq!(s.time_to_positive, Some(5.0));
        assert_eq!(s.std_error, None);
        assert!(s.render().contains("Time (s) δ>0"));
    }

    #[test]
    fn missing_stats_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = report(&[dir.path().to_path_buf()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn report_does_not_touch_inputs() {
        let dir = run_dir(&[(0.0, 0), (1.0, 3)]);
        let before = fs::read(dir.path().join("stats.csv")).unwrap();
        report(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(fs::read(dir.path().join("stats.csv")).unwrap(), before);
    }
}
