//! Run metrics, CSV tables with commented headers, and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fde::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// First time after which `‖x‖ ≤ 0.1‖x(0)‖` at every later node; null
    /// in JSON when the run never settles.
    #[serde(with = "finite_or_null")]
    pub settling_time_10pct: f64,
    pub peak_control: f64,
    /// `∫‖u‖² dt` by the composite trapezoid rule.
    pub control_energy: f64,
    pub terminal_norm: f64,
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Settling time of a sampled norm series; infinite if the last node is
/// still outside the band.
pub fn settling_time(times: &[f64], norms: &[f64], fraction: f64) -> f64 {
    let Some(&n0) = norms.first() else { return 0.0 };
    let band = fraction * n0;
    match norms.iter().rposition(|v| *v > band) {
        None => times[0],
        Some(k) if k + 1 < times.len() => times[k + 1],
        Some(_) => f64::INFINITY,
    }
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(h: f64, values: &[f64]) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Running trapezoid integral, same length as `values`.
pub fn cumulative_trapezoid(h: f64, values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * h * (values[k - 1] + v);
        }
        out.push(acc);
    }
    out
}

pub fn compute_metrics(traj: &Trajectory) -> RunMetrics {
    let norms = traj.norms();
    let u2: Vec<f64> = traj.inputs.iter().map(|u| u.norm_squared()).collect();
    RunMetrics {
        settling_time_10pct: settling_time(&traj.times(), &norms, 0.1),
        peak_control: traj.inputs.iter().map(|u| u.norm()).fold(0.0, f64::max),
        control_energy: trapezoid(traj.h, &u2),
        terminal_norm: norms.last().copied().unwrap_or(0.0),
    }
}

/// A column-oriented table written as CSV behind `#` comment lines naming
/// every column with its unit.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: String,
    pub columns: Vec<(String, String)>,
    pub data: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(title: &str) -> Self {
        Self {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn col(mut self, name: &str, unit: &str, values: Vec<f64>) -> Self {
        self.columns.push((name.into(), unit.into()));
        self.data.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self) -> Result<String> {
        let n = self.rows();
        if let Some((i, _)) = self.data.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "column {} has {} rows, expected {n}",
                self.columns[i].0,
                self.data[i].len()
            )));
        }
        let mut o = String::new();
        let _ = writeln!(o, "# {}", self.title);
        for (name, unit) in &self.columns {
            let _ = writeln!(o, "# {name}: {unit}");
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        let _ = writeln!(o, "{}", names.join(","));
        for r in 0..n {
            let row: Vec<String> = self.data.iter().map(|c| c[r].to_string()).collect();
            let _ = writeln!(o, "{}", row.join(","));
        }
        Ok(o)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Named pass/fail check recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    /// TOML snapshot of the full configuration used.
    pub config: String,
    /// Relative to the run directory.
    pub outputs: Vec<PathBuf>,
    pub metrics: serde_json::Value,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Collects the files one run writes into its directory.
#[derive(Debug)]
pub struct OutDir {
    pub root: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root).map_err(|e| Error::Io(e).context(format!("creating {}", root.display())))?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        let p = self.root.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.path(name);
        t.save(&p)
    }

    pub fn plot(&mut self, name: &str, p: &crate::plot::Plot) -> Result<()> {
        let path = self.path(name);
        p.save(&path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let p = self.path(name);
        std::fs::write(p, serde_json::to_string_pretty(v)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settling_examples() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(settling_time(&t, &[1.0, 0.5, 0.05, 0.01], 0.1), 2.0);
        assert_eq!(settling_time(&t, &[1.0, 0.05, 0.2, 0.01], 0.1), 3.0);
        assert_eq!(settling_time(&t, &[1.0, 0.5, 0.5, 0.5], 0.1), f64::INFINITY);
        assert_eq!(settling_time(&t, &[0.0; 4], 0.1), 0.0);
    }

    #[test]
    fn trapezoid_exact_for_constants_and_lines() {
        assert_eq!(trapezoid(0.1, &[0.0; 11]), 0.0);
        assert!((trapezoid(0.1, &[4.0; 11]) - 4.0).abs() < 1e-14);
        let line: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        assert!((trapezoid(0.1, &line) - 0.5).abs() < 1e-14);
        let c = cumulative_trapezoid(0.1, &line);
        assert!((c[10] - 0.5).abs() < 1e-14 && c[0] == 0.0);
    }

    #[test]
    fn csv_header_and_shape() {
        let t = Table::new("demo").col("t", "s", vec![0.0, 0.5]).col("x", "1", vec![1.0, 0.25]);
        assert_eq!(t.to_csv().unwrap(), "# demo\n# t: s\n# x: 1\nt,x\n0,1\n0.5,0.25\n");
        assert!(Table::new("bad").col("a", "", vec![1.0]).col("b", "", vec![]).to_csv().is_err());
    }

    #[test]
    fn metrics_json_roundtrip_with_unsettled_run() {
        let m = RunMetrics {
            settling_time_10pct: f64::INFINITY,
            peak_control: 1.0,
            control_energy: 2.0,
            terminal_norm: 0.1,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"settling_time_10pct\":null"));
        assert_eq!(serde_json::from_str::<RunMetrics>(&s).unwrap(), m);
    }
}
