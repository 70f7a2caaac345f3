//! Marginal-TV guarantees and measured bias for a single target variable.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{curve_point, elapsed_ms, measure_bias, BiasPoint, ExperimentReport, Series};
use crate::error::{Error, Result};
use crate::gibbs::StartSpec;
use crate::influence::{
    binary_pairwise_bound, ergodicity_check, scale_bound, ErgodicityVerdict, InfluenceMatrix,
};
use crate::model::{lattice_ising, BinaryPairwiseMrf, LatticeSpec, MARGINAL_LATTICE_COUPLING};
use crate::optimizer::{optimize_scan, OptimizerConfig};
use crate::rng::sub_seed;
use crate::scan::{Scan, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalConfig {
    pub lattice: LatticeSpec,
    pub model_seed: u64,
    pub target: usize,
    /// Length of the scan whose sampling histogram is reported.
    pub length: usize,
    pub curve_lengths: Vec<usize>,
    pub bias_lengths: Vec<usize>,
    pub replicates: usize,
    /// Multiplier applied to the influence bound before any computation.
    pub scale: f64,
    pub iterate: bool,
    /// Also measure the systematic scan's bias at every bias length.
    pub systematic_bias: bool,
    pub start: StartSpec,
    pub seed: u64,
}

impl Default for MarginalConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::constant(40, 40, false, MARGINAL_LATTICE_COUPLING),
            model_seed: 0,
            target: 0,
            length: 16_000,
            curve_lengths: (0..=16).map(|k| 1000 * k).collect(),
            bias_lengths: vec![1000, 2000, 4000, 8000, 16_000],
            replicates: 300,
            scale: 1.0,
            iterate: true,
            systematic_bias: true,
            start: StartSpec::AllPlus,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalCurvePoint {
    pub length: usize,
    pub systematic: f64,
    pub uniform: f64,
    pub dogs: f64,
    pub iterated: Option<f64>,
}

/// Sampling counts of the optimized scan bucketed by distance to the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceHistogram {
    /// `sites[k]`: number of variables at distance `k`.
    pub sites: Vec<usize>,
    /// `samples[k]`: number of scan steps selecting a variable at distance `k`.
    pub samples: Vec<usize>,
}

impl DistanceHistogram {
    fn build(spec: &LatticeSpec, target: usize, indices: &[usize]) -> Self {
        let p = spec.num_sites();
        let max = (0..p).map(|s| spec.manhattan(target, s)).max().unwrap_or(0);
        let mut sites = vec![0; max + 1];
        for s in 0..p {
            sites[spec.manhattan(target, s)] += 1;
        }
        let mut samples = vec![0; max + 1];
        for &i in indices {
            samples[spec.manhattan(target, i)] += 1;
        }
        Self { sites, samples }
    }

    /// Average number of times a variable at distance `k` is sampled.
    pub fn per_variable(&self) -> Vec<f64> {
        self.sites
            .iter()
            .zip(&self.samples)
            .map(|(&n, &c)| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect()
    }

    pub fn mean_distance(&self) -> f64 {
        let total: usize = self.samples.iter().sum();
        if total == 0 {
            return f64::NAN;
        }
        self.samples
            .iter()
            .enumerate()
            .map(|(k, &c)| (k * c) as f64)
            .sum::<f64>()
            / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasComparison {
    pub length: usize,
    pub systematic: Option<BiasPoint>,
    pub dogs: BiasPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalResult {
    pub verdict: ErgodicityVerdict,
    pub curves: Vec<MarginalCurvePoint>,
    /// Scan indices of the optimized scan of length `config.length`.
    pub dogs_indices: Vec<usize>,
    pub histogram: DistanceHistogram,
    /// Histograms of the four consecutive quarters of the optimized scan.
    pub quarters: Vec<DistanceHistogram>,
    pub bias: Vec<BiasComparison>,
    pub truth: Option<f64>,
}

impl MarginalResult {
    pub fn curve_at(&self, length: usize) -> Option<&MarginalCurvePoint> {
        self.curves.iter().find(|c| c.length == length)
    }
}

pub(crate) fn scaled_bound(model: &BinaryPairwiseMrf, scale: f64) -> Result<InfluenceMatrix> {
    scale_bound(&binary_pairwise_bound(model), scale)
}

/// Optimized scan of `length` steps as variable indices.
fn dogs_indices(d: &WeightVector, bound: &InfluenceMatrix, length: usize) -> Result<Vec<usize>> {
    if length == 0 {
        return Ok(Vec::new());
    }
    let out = optimize_scan(
        &Scan::Systematic(length),
        d,
        bound,
        &OptimizerConfig::default(),
    )?;
    Ok(out
        .scan
        .site_indices(bound.dim())
        .expect("deterministic output"))
}

pub fn run(config: &MarginalConfig) -> Result<MarginalResult> {
    let model = lattice_ising(&config.lattice, config.model_seed)?;
    let p = config.lattice.num_sites();
    if config.target >= p {
        return Err(Error::IndexOutOfRange {
            index: config.target,
            len: p,
        });
    }
    let bound = scaled_bound(&model, config.scale)?;
    let d = WeightVector::unit(p, config.target);

    let mut lengths = config.curve_lengths.clone();
    lengths.sort_unstable();
    lengths.dedup();
    let curves = lengths
        .iter()
        .map(|&t| {
            let pt = curve_point(&d, &bound, t, config.iterate)?;
            Ok(MarginalCurvePoint {
                length: t,
                systematic: pt.systematic,
                uniform: pt.uniform,
                dogs: pt.dogs,
                iterated: pt.iterated,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let indices = dogs_indices(&d, &bound, config.length)?;
    let histogram = DistanceHistogram::build(&config.lattice, config.target, &indices);
    let quarter = indices.len().div_ceil(4).max(1);
    let quarters = (0..4)
        .map(|q| {
            let lo = (q * quarter).min(indices.len());
            let hi = ((q + 1) * quarter).min(indices.len());
            DistanceHistogram::build(&config.lattice, config.target, &indices[lo..hi])
        })
        .collect();

    let field_free = model.unary().iter().all(|&u| u == 0.0);
    let truth = field_free.then_some(0.0);
    let bias = if config.replicates >= 2 {
        let reference = truth.unwrap_or(0.0);
        config
            .bias_lengths
            .iter()
            .map(|&t| {
                let systematic = if config.systematic_bias {
                    Some(measure_bias(
                        &model,
                        &Scan::Systematic(t),
                        config.target,
                        reference,
                        config.replicates,
                        &config.start,
                        sub_seed(config.seed, 0),
                    )?)
                } else {
                    None
                };
                let scan = Scan::deterministic(dogs_indices(&d, &bound, t)?);
                let dogs = measure_bias(
                    &model,
                    &scan,
                    config.target,
                    reference,
                    config.replicates,
                    &config.start,
                    sub_seed(config.seed, 1),
                )?;
                Ok(BiasComparison {
                    length: t,
                    systematic,
                    dogs,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    Ok(MarginalResult {
        verdict: ergodicity_check(&bound),
        curves,
        dogs_indices: indices,
        histogram,
        quarters,
        bias,
        truth,
    })
}

pub(crate) fn add_series(report: &mut ExperimentReport, result: &MarginalResult, suffix: &str) {
    let mut s = Series::new(
        format!("dv{suffix}"),
        &["T", "systematic", "uniform", "dogs", "iterated_dogs"],
    );
    for c in &result.curves {
        s.push(vec![
            c.length as f64,
            c.systematic,
            c.uniform,
            c.dogs,
            c.iterated.unwrap_or(f64::NAN),
        ]);
    }
    report.series.push(s);

    let mut s = Series::new(
        format!("histogram{suffix}"),
        &["distance", "variables", "samples", "per_variable"],
    );
    let per = result.histogram.per_variable();
    for (k, per) in per.iter().enumerate() {
        s.push(vec![
            k as f64,
            result.histogram.sites[k] as f64,
            result.histogram.samples[k] as f64,
            *per,
        ]);
    }
    report.series.push(s);

    let mut s = Series::new(
        format!("quarter_histograms{suffix}"),
        &["quarter", "distance", "samples", "per_variable"],
    );
    for (q, h) in result.quarters.iter().enumerate() {
        for (k, per) in h.per_variable().iter().enumerate() {
            s.push(vec![(q + 1) as f64, k as f64, h.samples[k] as f64, *per]);
        }
    }
    report.series.push(s);

    let mut s = Series::new(
        format!("bias{suffix}"),
        &[
            "T",
            "systematic_bias",
            "systematic_stderr",
            "dogs_bias",
            "dogs_stderr",
        ],
    );
    for b in &result.bias {
        let (sb, se) = b
            .systematic
            .map_or((f64::NAN, f64::NAN), |s| (s.bias(), s.estimate.stderr));
        s.push(vec![
            b.length as f64,
            sb,
            se,
            b.dogs.bias(),
            b.dogs.estimate.stderr,
        ]);
    }
    report.series.push(s);
}

pub fn report(config: &MarginalConfig) -> Result<(MarginalResult, ExperimentReport)> {
    let start = Instant::now();
    let result = run(config)?;
    let mut report = ExperimentReport::new("marginal", config, elapsed_ms(start))?;
    add_series(&mut report, &result, "");
    report.summarize("norm", result.verdict.norm)?;
    report.summarize("in_dobrushin_regime", result.verdict.in_dobrushin_regime)?;
    if let Some(c) = result.curve_at(config.length) {
        report.summarize("dv_at_length", c)?;
    }
    let means: Vec<f64> = result
        .quarters
        .iter()
        .map(DistanceHistogram::mean_distance)
        .collect();
    report.summarize("quarter_mean_distance", means)?;
    report.summarize(
        "samples_at_target",
        result.histogram.samples.first().copied().unwrap_or(0),
    )?;
    report.summarize("truth", result.truth)?;
    report.summarize("start", config.start.kind())?;
    Ok((result, report))
}
