//! Experiment drivers. Each produces an [`ExperimentReport`]: a manifest with
//! the configuration echo, summary numbers and environment metadata, plus one
//! CSV table per plotted series.

pub mod loose_bound;
pub mod marginal;
pub mod mle;
pub mod scan_eval;
pub mod wall_clock;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;
use crate::gibbs::{estimate_expectation, Estimate, Feature, StartSpec};
use crate::influence::InfluenceMatrix;
use crate::model::BinaryPairwiseMrf;
use crate::optimizer::{optimize_scan, OptimizerConfig};
use crate::rng::RNG_ALGORITHM;
use crate::scan::{Scan, WeightVector};
use crate::variation::dobrushin_variation;

/// A table of numbers with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Runtime environment recorded with every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub rng: &'static str,
    pub threads: usize,
    pub os: &'static str,
    pub arch: &'static str,
    pub wall_time_ms: f64,
}

impl Environment {
    pub fn capture(wall_time_ms: f64) -> Self {
        Self {
            rng: RNG_ALGORITHM,
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            wall_time_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub id: String,
    pub config: Value,
    pub summary: Map<String, Value>,
    pub series: Vec<Series>,
    pub environment: Environment,
}

impl ExperimentReport {
    pub fn new(id: &str, config: &impl Serialize, wall_time_ms: f64) -> Result<Self> {
        Ok(Self {
            id: id.to_string(),
            config: serde_json::to_value(config)?,
            summary: Map::new(),
            series: Vec::new(),
            environment: Environment::capture(wall_time_ms),
        })
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.summary
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    fn csv_name(&self, series: &Series) -> String {
        format!("{}_{}.csv", self.id, series.name)
    }

    pub fn manifest(&self) -> Value {
        let series: Vec<Value> = self
            .series
            .iter()
            .map(|s| {
                serde_json::json!({
                    "name": s.name,
                    "file": self.csv_name(s),
                    "columns": s.columns,
                    "rows": s.rows.len(),
                })
            })
            .collect();
        serde_json::json!({
            "experiment": self.id,
            "config": self.config,
            "summary": self.summary,
            "series": series,
            "environment": self.environment,
        })
    }

    /// Writes `<id>_manifest.json` and one CSV per series into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.series.len() + 1);
        let manifest = dir.join(format!("{}_manifest.json", self.id));
        fs::write(&manifest, serde_json::to_string_pretty(&self.manifest())?)?;
        written.push(manifest);
        for s in &self.series {
            let path = dir.join(self.csv_name(s));
            fs::write(&path, s.to_csv())?;
            written.push(path);
        }
        Ok(written)
    }
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Median; NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Monte Carlo bias of a coordinate's mean after running `scan`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasPoint {
    pub length: usize,
    pub estimate: Estimate,
    pub truth: f64,
}

impl BiasPoint {
    pub fn bias(&self) -> f64 {
        self.estimate.mean - self.truth
    }

    /// `|bias_self| ≤ |bias_other| + z · √(se_self² + se_other²)`.
    pub fn no_worse_than(&self, other: &BiasPoint, z: f64) -> bool {
        self.bias().abs() <= other.bias().abs() + z * pooled_stderr(self, other)
    }

    /// `|bias_self − bias_other| ≤ z · √(se_self² + se_other²)`.
    pub fn within(&self, other: &BiasPoint, z: f64) -> bool {
        (self.bias() - other.bias()).abs() <= z * pooled_stderr(self, other)
    }
}

pub fn pooled_stderr(a: &BiasPoint, b: &BiasPoint) -> f64 {
    a.estimate.stderr.hypot(b.estimate.stderr)
}

pub(crate) fn measure_bias(
    model: &BinaryPairwiseMrf,
    scan: &Scan,
    target: usize,
    truth: f64,
    replicates: usize,
    start: &StartSpec,
    seed: u64,
) -> Result<BiasPoint> {
    let estimate = estimate_expectation(
        model,
        scan,
        start,
        &Feature::Coordinate(target),
        replicates,
        seed,
    )?;
    Ok(BiasPoint {
        length: scan.len(),
        estimate,
        truth,
    })
}

/// Variation of the standard scans and of the systematic-initialized optimized scan.
pub(crate) struct OptimizedCurvePoint {
    pub systematic: f64,
    pub uniform: f64,
    pub dogs: f64,
    pub iterated: Option<f64>,
}

pub(crate) fn curve_point(
    d: &WeightVector,
    bound: &InfluenceMatrix,
    length: usize,
    iterate: bool,
) -> Result<OptimizedCurvePoint> {
    let config = OptimizerConfig::default();
    let systematic = Scan::Systematic(length);
    let dogs = if length == 0 {
        dobrushin_variation(&systematic, d, bound)?
    } else {
        optimize_scan(&systematic, d, bound, &config)?.dv_after
    };
    let iterated = if iterate && length > 0 {
        Some(crate::optimizer::iterate_optimize(&systematic, d, bound, &config)?.dv_after)
    } else {
        None
    };
    Ok(OptimizedCurvePoint {
        systematic: dobrushin_variation(&systematic, d, bound)?,
        uniform: dobrushin_variation(&Scan::Uniform(length), d, bound)?,
        dogs,
        iterated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_csv_and_columns() {
        let mut s = Series::new("dv", &["T", "value"]);
        s.push(vec![1.0, 0.5]);
        s.push(vec![2.0, 0.25]);
        assert_eq!(s.to_csv(), "T,value\n1,0.5\n2,0.25\n");
        assert_eq!(s.column("value").unwrap(), vec![0.5, 0.25]);
        assert!(s.column("missing").is_none());
    }

    #[test]
    fn report_writes_manifest_and_tables() {
        let dir = std::env::temp_dir().join(format!("dogs-report-{}", std::process::id()));
        let mut report =
            ExperimentReport::new("demo", &serde_json::json!({"seed": 3}), 1.0).unwrap();
        report.summarize("answer", 42).unwrap();
        let mut s = Series::new("curve", &["T", "dv"]);
        s.push(vec![0.0, 1.0]);
        report.series.push(s);
        let files = report.write(&dir).unwrap();
        assert_eq!(files.len(), 2);
        let manifest: Value =
            serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(manifest["summary"]["answer"], 42);
        assert_eq!(manifest["series"][0]["file"], "demo_curve.csv");
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
    }
}
