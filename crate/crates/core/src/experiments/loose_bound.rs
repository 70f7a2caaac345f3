//! Sensitivity of the optimized scan to an inflated influence bound.
//!
//! Every factor reuses the marginal pipeline with the bound multiplied by the
//! factor. Sampling streams are shared across factors.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::marginal::{self, add_series, MarginalConfig, MarginalResult};
use super::{elapsed_ms, ExperimentReport, Series};
use crate::error::{Error, Result};
use crate::gibbs::StartSpec;
use crate::model::LatticeSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooseBoundConfig {
    pub lattice: LatticeSpec,
    pub model_seed: u64,
    pub target: usize,
    pub factors: Vec<f64>,
    pub lengths: Vec<usize>,
    pub replicates: usize,
    pub iterate: bool,
    pub start: StartSpec,
    pub seed: u64,
}

impl Default for LooseBoundConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::constant(40, 40, true, 0.165),
            model_seed: 0,
            target: 0,
            factors: vec![1.0, 1.1, 1.3, 1.5],
            lengths: vec![400, 800, 1600, 3200, 6400],
            replicates: 300,
            iterate: false,
            start: StartSpec::AllPlus,
            seed: 0,
        }
    }
}

impl LooseBoundConfig {
    /// Marginal configuration for one factor.
    pub fn marginal(&self, factor: f64, systematic_bias: bool) -> MarginalConfig {
        MarginalConfig {
            lattice: self.lattice.clone(),
            model_seed: self.model_seed,
            target: self.target,
            length: self.lengths.iter().copied().max().unwrap_or(0),
            curve_lengths: self.lengths.clone(),
            bias_lengths: self.lengths.clone(),
            replicates: self.replicates,
            scale: factor,
            iterate: self.iterate,
            systematic_bias,
            start: self.start.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorResult {
    pub factor: f64,
    pub result: MarginalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooseBoundResult {
    pub factors: Vec<FactorResult>,
}

impl LooseBoundResult {
    pub fn factor(&self, factor: f64) -> Option<&MarginalResult> {
        self.factors
            .iter()
            .find(|f| f.factor == factor)
            .map(|f| &f.result)
    }
}

pub fn run(config: &LooseBoundConfig) -> Result<LooseBoundResult> {
    if config.factors.is_empty() || config.lengths.is_empty() {
        return Err(Error::InvalidConfig(
            "loose-bound run needs factors and lengths".into(),
        ));
    }
    if let Some(&f) = config
        .factors
        .iter()
        .find(|f| !(f.is_finite() && **f >= 1.0))
    {
        return Err(Error::InvalidConfig(format!(
            "scale factor {f} must be finite and at least 1"
        )));
    }
    let factors = config
        .factors
        .iter()
        .enumerate()
        .map(|(k, &factor)| {
            let result = marginal::run(&config.marginal(factor, k == 0))?;
            Ok(FactorResult { factor, result })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LooseBoundResult { factors })
}

pub fn report(config: &LooseBoundConfig) -> Result<(LooseBoundResult, ExperimentReport)> {
    let start = Instant::now();
    let result = run(config)?;
    let mut report = ExperimentReport::new("loose_bound", config, elapsed_ms(start))?;
    let mut table = Series::new(
        "summary",
        &[
            "factor",
            "T",
            "systematic_dv",
            "dogs_dv",
            "dogs_bias",
            "dogs_stderr",
        ],
    );
    for f in &result.factors {
        add_series(&mut report, &f.result, &format!("_factor{}", f.factor));
        for c in &f.result.curves {
            let bias = f.result.bias.iter().find(|b| b.length == c.length);
            table.push(vec![
                f.factor,
                c.length as f64,
                c.systematic,
                c.dogs,
                bias.map_or(f64::NAN, |b| b.dogs.bias()),
                bias.map_or(f64::NAN, |b| b.dogs.estimate.stderr),
            ]);
        }
    }
    report.series.push(table);
    let norms: Vec<_> = result
        .factors
        .iter()
        .map(|f| serde_json::json!({"factor": f.factor, "norm": f.result.verdict.norm}))
        .collect();
    report.summarize("norms", norms)?;
    report.summarize("start", config.start.kind())?;
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn larger_factor_never_lowers_the_guarantee() {
        let config = LooseBoundConfig {
            lattice: LatticeSpec::constant(5, 5, true, 0.165),
            factors: vec![1.0, 1.5],
            lengths: vec![50, 100],
            replicates: 20,
            ..LooseBoundConfig::default()
        };
        let (result, report) = report(&config).unwrap();
        let (a, b) = (result.factor(1.0).unwrap(), result.factor(1.5).unwrap());
        for (x, y) in a.curves.iter().zip(&b.curves) {
            assert!(x.systematic <= y.systematic);
        }
        assert!(a.bias[0].systematic.is_some());
        assert!(b.bias[0].systematic.is_none());
        assert!(report.series("summary").is_some());
    }

    #[test]
    fn rejects_shrinking_factor() {
        let config = LooseBoundConfig {
            factors: vec![0.5],
            ..LooseBoundConfig::default()
        };
        assert!(run(&config).is_err());
    }
}
