//! Full-TV guarantees of standard and optimized scans on a random lattice.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{curve_point, elapsed_ms, median, ExperimentReport, Series};
use crate::error::{Error, Result};
use crate::influence::{binary_pairwise_bound, ergodicity_check, ErgodicityVerdict};
use crate::model::{lattice_ising, LatticeSpec};
use crate::scan::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEvalConfig {
    pub lattice: LatticeSpec,
    /// Scan lengths at which every curve is evaluated.
    pub lengths: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Also run iterated optimization at every length.
    pub iterate: bool,
}

impl Default for ScanEvalConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::random_ferromagnet(10, 10),
            lengths: (0..=16).map(|k| 50 * k).collect(),
            seeds: (0..5).collect(),
            iterate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub length: usize,
    pub systematic: f64,
    pub uniform: f64,
    pub dogs: f64,
    pub iterated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedCurves {
    pub seed: u64,
    pub verdict: ErgodicityVerdict,
    pub points: Vec<CurvePoint>,
}

impl SeedCurves {
    /// Systematic over DoGS variation at the longest length.
    pub fn final_improvement(&self) -> f64 {
        let last = self.points.last().expect("nonempty length grid");
        last.systematic / last.dogs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEvalResult {
    pub seeds: Vec<SeedCurves>,
}

impl ScanEvalResult {
    pub fn median_improvement(&self) -> f64 {
        let factors: Vec<f64> = self
            .seeds
            .iter()
            .map(SeedCurves::final_improvement)
            .collect();
        median(&factors)
    }
}

pub fn run(config: &ScanEvalConfig) -> Result<ScanEvalResult> {
    if config.lengths.is_empty() || config.seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "scan evaluation needs lengths and seeds".into(),
        ));
    }
    let mut lengths = config.lengths.clone();
    lengths.sort_unstable();
    lengths.dedup();
    let p = config.lattice.num_sites();
    let d = WeightVector::ones(p);
    let seeds = config
        .seeds
        .iter()
        .map(|&seed| {
            let model = lattice_ising(&config.lattice, seed)?;
            let bound = binary_pairwise_bound(&model);
            let points = lengths
                .iter()
                .map(|&t| {
                    let pt = curve_point(&d, &bound, t, config.iterate)?;
                    Ok(CurvePoint {
                        length: t,
                        systematic: pt.systematic,
                        uniform: pt.uniform,
                        dogs: pt.dogs,
                        iterated: pt.iterated,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SeedCurves {
                seed,
                verdict: ergodicity_check(&bound),
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanEvalResult { seeds })
}

pub fn report(config: &ScanEvalConfig) -> Result<(ScanEvalResult, ExperimentReport)> {
    let start = Instant::now();
    let result = run(config)?;
    let mut report = ExperimentReport::new("scan_eval", config, elapsed_ms(start))?;
    for s in &result.seeds {
        let mut series = Series::new(
            format!("dv_seed{}", s.seed),
            &["T", "systematic", "uniform", "dogs", "iterated_dogs"],
        );
        for pt in &s.points {
            series.push(vec![
                pt.length as f64,
                pt.systematic,
                pt.uniform,
                pt.dogs,
                pt.iterated.unwrap_or(f64::NAN),
            ]);
        }
        report.series.push(series);
    }
    let legends: Vec<_> = result
        .seeds
        .iter()
        .map(|s| {
            let best =
                |f: fn(&CurvePoint) -> f64| s.points.iter().map(f).fold(f64::INFINITY, f64::min);
            serde_json::json!({
                "seed": s.seed,
                "norm": s.verdict.norm,
                "in_dobrushin_regime": s.verdict.in_dobrushin_regime,
                "best_systematic": best(|p| p.systematic),
                "best_uniform": best(|p| p.uniform),
                "best_dogs": best(|p| p.dogs),
                "best_iterated_dogs": best(|p| p.iterated.unwrap_or(f64::INFINITY)),
                "final_improvement": s.final_improvement(),
            })
        })
        .collect();
    report.summarize("per_seed", legends)?;
    report.summarize("median_final_improvement", result.median_improvement())?;
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lattice_curves_are_ordered() {
        let config = ScanEvalConfig {
            lattice: LatticeSpec::random_ferromagnet(4, 4),
            lengths: vec![0, 16, 48, 96],
            seeds: vec![1, 2],
            iterate: true,
        };
        let (result, report) = report(&config).unwrap();
        for s in &result.seeds {
            assert_eq!(s.points[0].systematic, 16.0);
            for pt in &s.points[1..] {
                assert!(pt.dogs <= pt.systematic * (1.0 + 1e-12));
                assert!(pt.iterated.unwrap() <= pt.dogs * (1.0 + 1e-12));
            }
        }
        assert_eq!(report.series.len(), 2);
        assert!(report.summary.contains_key("median_final_improvement"));
    }
}
