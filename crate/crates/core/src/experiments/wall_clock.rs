//! End-to-end cost of a length-doubled DoGS scan against a long systematic scan.
//!
//! All sampling here runs on the calling thread so per-step times are not
//! distorted by contention.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{elapsed_ms, ExperimentReport, Series};
use crate::error::{Error, Result};
use crate::gibbs::{Feature, GibbsSampler, StartSpec};
use crate::influence::binary_pairwise_bound;
use crate::model::{lattice_ising, BinaryPairwiseMrf, LatticeSpec, ParamSource};
use crate::optimizer::length_doubling_select;
use crate::rng::{chain_rng, sub_seed};
use crate::scan::{Scan, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClockConfig {
    pub lattice: LatticeSpec,
    pub model_seed: u64,
    pub reference_length: usize,
    pub target: usize,
    /// Independent samples drawn from each sampler for the estimate series.
    pub samples: usize,
    /// Sample counts at which the projected speedup is reported.
    pub speedup_counts: Vec<usize>,
    pub start: StartSpec,
    pub seed: u64,
}

impl Default for WallClockConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::random_ferromagnet(100, 100),
            model_seed: 0,
            reference_length: 20_000,
            target: 0,
            samples: 100,
            speedup_counts: (0..=12).map(|k| 1usize << k).collect(),
            start: StartSpec::AllPlus,
            seed: 0,
        }
    }
}

impl WallClockConfig {
    /// Same lattice with every unary weight zero, so `E[X_target] = 0`.
    pub fn symmetric(mut self) -> Self {
        self.lattice.unary = ParamSource::Constant(0.0);
        self
    }
}

/// One point of a running estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatePoint {
    pub samples: usize,
    pub elapsed_ms: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallClockResult {
    pub reference_dv: f64,
    pub dogs_dv: f64,
    pub dogs_length: usize,
    pub lengths_tried: Vec<usize>,
    pub setup_time_ms: f64,
    /// Average measured time of one Gibbs step.
    pub step_time_us: f64,
    pub systematic: Vec<EstimatePoint>,
    pub dogs: Vec<EstimatePoint>,
    /// `(N, speedup)` pairs.
    pub speedup: Vec<(usize, f64)>,
    /// `E[X_target]` when the model is field-free, else `None`.
    pub truth: Option<f64>,
}

impl WallClockResult {
    /// Speedup as the number of samples grows without bound.
    pub fn asymptotic_speedup(&self, reference_length: usize) -> f64 {
        reference_length as f64 / self.dogs_length as f64
    }
}

fn draw_samples(
    model: &BinaryPairwiseMrf,
    scan: &Scan,
    config: &WallClockConfig,
    stream: u64,
    offset_ms: f64,
) -> Result<(Vec<EstimatePoint>, f64, usize)> {
    let feature = Feature::Coordinate(config.target);
    let mut sampler = GibbsSampler::new(model);
    let mut points = Vec::with_capacity(config.samples);
    let mut total = 0.0;
    let mut busy_ms = 0.0;
    for r in 0..config.samples {
        let start = Instant::now();
        let mut rng = chain_rng(sub_seed(sub_seed(config.seed, stream), r as u64));
        let mut state = config.start.initial_state(model, &mut rng)?;
        sampler.run(scan, &mut state, &mut rng);
        busy_ms += elapsed_ms(start);
        total += feature.evaluate(model, &state.values);
        points.push(EstimatePoint {
            samples: r + 1,
            elapsed_ms: offset_ms + busy_ms,
            mean: total / (r + 1) as f64,
        });
    }
    Ok((points, busy_ms, config.samples * scan.len()))
}

pub fn run(config: &WallClockConfig) -> Result<WallClockResult> {
    if config.samples == 0 || config.reference_length == 0 {
        return Err(Error::InvalidConfig(
            "samples and reference length must be positive".into(),
        ));
    }
    let model = lattice_ising(&config.lattice, config.model_seed)?;
    let p = model.unary().len();
    if config.target >= p {
        return Err(Error::IndexOutOfRange {
            index: config.target,
            len: p,
        });
    }
    let setup = Instant::now();
    let bound = binary_pairwise_bound(&model);
    let reference = Scan::Systematic(config.reference_length);
    let doubling =
        length_doubling_select(&reference, &WeightVector::unit(p, config.target), &bound)?;
    let setup_time_ms = elapsed_ms(setup);
    let dogs_scan = doubling.optimized.scan.clone();

    let (systematic, sys_ms, sys_steps) = draw_samples(&model, &reference, config, 0, 0.0)?;
    let (dogs, dogs_ms, dogs_steps) = draw_samples(&model, &dogs_scan, config, 1, setup_time_ms)?;
    let step_ms = (sys_ms + dogs_ms) / (sys_steps + dogs_steps) as f64;

    let speedup = config
        .speedup_counts
        .iter()
        .map(|&n| {
            let n = n as f64;
            let sys = n * config.reference_length as f64 * step_ms;
            let dogs = setup_time_ms + n * dogs_scan.len() as f64 * step_ms;
            (n as usize, sys / dogs)
        })
        .collect();
    let field_free = model.unary().iter().all(|&u| u == 0.0);
    Ok(WallClockResult {
        reference_dv: doubling.reference_dv,
        dogs_dv: doubling.optimized.dv_after,
        dogs_length: dogs_scan.len(),
        lengths_tried: doubling.lengths_tried,
        setup_time_ms,
        step_time_us: step_ms * 1e3,
        systematic,
        dogs,
        speedup,
        truth: field_free.then_some(0.0),
    })
}

pub fn report(config: &WallClockConfig) -> Result<(WallClockResult, ExperimentReport)> {
    let start = Instant::now();
    let result = run(config)?;
    let mut report = ExperimentReport::new("wall_clock", config, elapsed_ms(start))?;
    for (name, points) in [
        ("estimate_systematic", &result.systematic),
        ("estimate_dogs", &result.dogs),
    ] {
        let mut s = Series::new(name, &["samples", "elapsed_ms", "mean"]);
        for pt in points {
            s.push(vec![pt.samples as f64, pt.elapsed_ms, pt.mean]);
        }
        report.series.push(s);
    }
    let mut s = Series::new("speedup", &["samples", "speedup"]);
    for &(n, v) in &result.speedup {
        s.push(vec![n as f64, v]);
    }
    report.series.push(s);
    report.summarize("reference_dv", result.reference_dv)?;
    report.summarize("dogs_dv", result.dogs_dv)?;
    report.summarize("dogs_length", result.dogs_length)?;
    report.summarize("lengths_tried", &result.lengths_tried)?;
    report.summarize("setup_time_ms", result.setup_time_ms)?;
    report.summarize("step_time_us", result.step_time_us)?;
    report.summarize(
        "asymptotic_speedup",
        result.asymptotic_speedup(config.reference_length),
    )?;
    report.summarize("truth", result.truth)?;
    report.summarize("start", config.start.kind())?;
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_consistent() {
        let config = WallClockConfig {
            lattice: LatticeSpec::random_ferromagnet(6, 6),
            reference_length: 360,
            samples: 20,
            speedup_counts: vec![1, 10, 100, 1000],
            ..WallClockConfig::default()
        }
        .symmetric();
        let (result, report) = report(&config).unwrap();
        assert!(result.dogs_dv <= result.reference_dv);
        assert!(result.dogs_length <= 360);
        assert_eq!(result.truth, Some(0.0));
        assert_eq!(result.systematic.len(), 20);
        let speedups: Vec<f64> = result.speedup.iter().map(|s| s.1).collect();
        assert!(speedups.windows(2).all(|w| w[0] <= w[1]));
        assert!(*speedups.last().unwrap() <= result.asymptotic_speedup(360));
        assert_eq!(report.series.len(), 3);
    }
}
