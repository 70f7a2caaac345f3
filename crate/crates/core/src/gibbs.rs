//! Seeded Gibbs sampling under arbitrary scans.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{spin, BinaryPairwiseMrf, DiscreteMrf};
use crate::rng::{chain_rng, sub_seed, ChainRng};
use crate::scan::{Scan, StepRef};

/// `π(X_i = +1 | X_{−i})` for a binary pairwise model.
pub fn conditional_binary(model: &BinaryPairwiseMrf, i: usize, state: &[usize]) -> Result<f64> {
    model.conditional_plus(i, state)
}

/// Conditional distribution of `X_i` over its domain.
pub fn conditional_general(model: &dyn DiscreteMrf, i: usize, state: &[usize]) -> Result<Vec<f64>> {
    if i >= model.num_vars() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: model.num_vars(),
        });
    }
    let mut out = vec![0.0; model.domain_size(i)];
    model.conditional_probs(i, state, &mut out);
    Ok(out)
}

/// Assignment of a chain after `t` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub values: Vec<usize>,
    pub t: usize,
}

/// Initial state of each chain.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    /// Every variable at its largest value index (+1 for spins).
    #[default]
    AllPlus,
    /// Each variable uniform over its domain, drawn from the chain's generator.
    UniformRandom,
    Fixed(Vec<usize>),
}

impl StartSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            StartSpec::AllPlus => "all_plus",
            StartSpec::UniformRandom => "uniform_random",
            StartSpec::Fixed(_) => "fixed",
        }
    }

    pub fn initial_state(&self, model: &dyn DiscreteMrf, rng: &mut ChainRng) -> Result<ChainState> {
        let values = match self {
            StartSpec::AllPlus => (0..model.num_vars())
                .map(|i| model.domain_size(i) - 1)
                .collect(),
            StartSpec::UniformRandom => (0..model.num_vars())
                .map(|i| rng.gen_range(0..model.domain_size(i)))
                .collect(),
            StartSpec::Fixed(values) => {
                model.check_state(values)?;
                values.clone()
            }
        };
        Ok(ChainState { values, t: 0 })
    }
}

/// Quantity recorded from a chain's state. For two-valued variables the value
/// is the spin (−1 or +1); otherwise it is the value index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Coordinate(usize),
    /// Product of the listed coordinates.
    Product(Vec<usize>),
}

impl Feature {
    fn coordinate_value(model: &dyn DiscreteMrf, i: usize, v: usize) -> f64 {
        if model.domain_size(i) == 2 {
            spin(v)
        } else {
            v as f64
        }
    }

    pub fn evaluate(&self, model: &dyn DiscreteMrf, state: &[usize]) -> f64 {
        match self {
            Feature::Coordinate(i) => Self::coordinate_value(model, *i, state[*i]),
            Feature::Product(set) => set
                .iter()
                .map(|&i| Self::coordinate_value(model, i, state[i]))
                .product(),
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        let bad = match self {
            Feature::Coordinate(i) => (*i >= p).then_some(*i),
            Feature::Product(set) => set.iter().copied().find(|&i| i >= p),
        };
        match bad {
            Some(index) => Err(Error::IndexOutOfRange { index, len: p }),
            None => Ok(()),
        }
    }
}

/// Single-site Gibbs updates over a borrowed model.
pub struct GibbsSampler<'a> {
    model: &'a dyn DiscreteMrf,
    probs: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(model: &'a dyn DiscreteMrf) -> Self {
        let max_domain = (0..model.num_vars())
            .map(|i| model.domain_size(i))
            .max()
            .unwrap_or(1);
        Self {
            model,
            probs: vec![0.0; max_domain],
        }
    }

    /// Draws the coordinate to update from `q_t`.
    #[inline]
    pub fn select(&self, step: StepRef<'_>, rng: &mut ChainRng) -> usize {
        match step {
            StepRef::Site(i) => i,
            StepRef::Uniform => rng.gen_range(0..self.model.num_vars()),
            StepRef::Dist(q) => sample_index(q, rng.gen()),
        }
    }

    /// Resamples coordinate `i` from its conditional with one uniform draw.
    #[inline]
    pub fn resample(&mut self, state: &mut [usize], i: usize, rng: &mut ChainRng) {
        let size = self.model.domain_size(i);
        let probs = &mut self.probs[..size];
        self.model.conditional_probs(i, state, probs);
        state[i] = sample_index(probs, rng.gen());
    }

    /// Runs the scan from `state`, which is updated in place.
    pub fn run(&mut self, scan: &Scan, state: &mut ChainState, rng: &mut ChainRng) {
        let p = self.model.num_vars();
        for t in 0..scan.len() {
            let i = self.select(scan.step(t, p), rng);
            self.resample(&mut state.values, i, rng);
            state.t += 1;
        }
    }
}

#[inline]
fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in rounding slack past the last cumulative sum
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

fn check_scan(model: &dyn DiscreteMrf, scan: &Scan) -> Result<()> {
    scan.validate(model.num_vars())
}

/// Runs one chain through `scan` and returns its terminal state.
pub fn run_gibbs(
    model: &dyn DiscreteMrf,
    scan: &Scan,
    start: &StartSpec,
    seed: u64,
) -> Result<ChainState> {
    check_scan(model, scan)?;
    let mut rng = chain_rng(seed);
    let mut state = start.initial_state(model, &mut rng)?;
    GibbsSampler::new(model).run(scan, &mut state, &mut rng);
    Ok(state)
}

/// Runs one chain and keeps every intermediate state. `max_states` caps the
/// trajectory length (`T + 1` states) as a memory budget.
pub fn run_gibbs_trajectory(
    model: &dyn DiscreteMrf,
    scan: &Scan,
    start: &StartSpec,
    seed: u64,
    max_states: usize,
) -> Result<Vec<ChainState>> {
    check_scan(model, scan)?;
    if scan.len() + 1 > max_states {
        return Err(Error::InvalidConfig(format!(
            "trajectory of {} states exceeds the budget of {max_states}",
            scan.len() + 1
        )));
    }
    let p = model.num_vars();
    let mut rng = chain_rng(seed);
    let mut state = start.initial_state(model, &mut rng)?;
    let mut sampler = GibbsSampler::new(model);
    let mut out = Vec::with_capacity(scan.len() + 1);
    out.push(state.clone());
    for t in 0..scan.len() {
        let i = sampler.select(scan.step(t, p), &mut rng);
        sampler.resample(&mut state.values, i, &mut rng);
        state.t += 1;
        out.push(state.clone());
    }
    Ok(out)
}

/// Terminal feature values of independent replicate chains.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    /// Sub-seed of each replicate, by replicate index.
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn replicates(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Standard error of the mean, `s / √R`.
    pub fn stderr(&self) -> f64 {
        let r = self.values.len() as f64;
        let mean = self.mean();
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            stderr: self.stderr(),
            replicates: self.replicates(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicates: usize,
}

/// Runs `replicates` independent chains (in parallel, merged by replicate
/// index) and records the terminal feature of each.
pub fn sample_terminal_features(
    model: &dyn DiscreteMrf,
    scan: &Scan,
    start: &StartSpec,
    feature: &Feature,
    replicates: usize,
    seed: u64,
) -> Result<SampleBatch> {
    check_scan(model, scan)?;
    feature.check(model.num_vars())?;
    let seeds: Vec<u64> = (0..replicates as u64).map(|r| sub_seed(seed, r)).collect();
    let values = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = chain_rng(s);
            let mut state = start.initial_state(model, &mut rng)?;
            GibbsSampler::new(model).run(scan, &mut state, &mut rng);
            Ok(feature.evaluate(model, &state.values))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch { seeds, values })
}

/// Mean and standard error of a terminal feature over `replicates ≥ 2` chains.
pub fn estimate_expectation(
    model: &dyn DiscreteMrf,
    scan: &Scan,
    start: &StartSpec,
    feature: &Feature,
    replicates: usize,
    seed: u64,
) -> Result<Estimate> {
    if replicates < 2 {
        return Err(Error::TooFewReplicates(replicates));
    }
    Ok(sample_terminal_features(model, scan, start, feature, replicates, seed)?.estimate())
}

/// Estimate report as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub mean: f64,
    pub stderr: f64,
    #[serde(rename = "R")]
    pub replicates: usize,
    #[serde(rename = "T")]
    pub length: usize,
    pub scan_kind: String,
    pub start_kind: String,
    pub wall_time_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneralPairwiseMrf, HigherOrderBinaryMrf};

    fn pair() -> BinaryPairwiseMrf {
        BinaryPairwiseMrf::new(&[(0, 1, 0.25)], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn binary_conditionals() {
        let free = BinaryPairwiseMrf::new(&[], vec![0.0]).unwrap();
        assert_eq!(conditional_binary(&free, 0, &[0]).unwrap(), 0.5);
        let field = BinaryPairwiseMrf::new(&[], vec![0.5]).unwrap();
        assert!((conditional_binary(&field, 0, &[0]).unwrap() - 0.7310585786300049).abs() < 1e-15);
        assert!(
            (conditional_binary(&pair(), 0, &[0, 1]).unwrap() - 0.6224593312018546).abs() < 1e-15
        );
        assert!(conditional_binary(&pair(), 2, &[0, 1]).is_err());
    }

    #[test]
    fn general_conditionals() {
        let constant =
            GeneralPairwiseMrf::new(vec![3, 2], vec![(0, 1, vec![vec![1.5; 2]; 3])]).unwrap();
        let probs = conditional_general(&constant, 0, &[0, 1]).unwrap();
        assert!(probs.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));

        let potts = GeneralPairwiseMrf::potts(vec![3, 3], &[(0, 1)], 0.48).unwrap();
        let probs = conditional_general(&potts, 0, &[0, 2]).unwrap();
        let z = 2.0 + 0.48f64.exp();
        assert!((probs[0] - 1.0 / z).abs() < 1e-15);
        assert!((probs[2] - 0.48f64.exp() / z).abs() < 1e-15);
        assert!((probs[2] - 0.4469140350687637).abs() < 1e-12);

        let ho =
            HigherOrderBinaryMrf::new(vec![(vec![0, 1, 2], 0.3)], vec![0.1, 0.0, 0.0]).unwrap();
        let probs = conditional_general(&ho, 0, &[0, 1, 0]).unwrap();
        // field = 0.3·(+1)(−1) + 0.1 = −0.2
        assert!((probs[1] - crate::model::logistic(-0.4)).abs() < 1e-15);
    }

    #[test]
    fn empty_scan_returns_start() {
        let state = run_gibbs(&pair(), &Scan::Systematic(0), &StartSpec::AllPlus, 1).unwrap();
        assert_eq!(
            state,
            ChainState {
                values: vec![1, 1],
                t: 0
            }
        );
    }

    #[test]
    fn one_step_changes_only_its_site() {
        let m = BinaryPairwiseMrf::new(&[(0, 1, 0.9), (1, 2, -0.4)], vec![0.0, 0.3, 0.0]).unwrap();
        for seed in 0..50 {
            let start = StartSpec::Fixed(vec![0, 1, 0]);
            let end = run_gibbs(&m, &Scan::deterministic([1]), &start, seed).unwrap();
            assert_eq!(end.values[0], 0);
            assert_eq!(end.values[2], 0);
            assert_eq!(end.t, 1);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let m = pair();
        let a = run_gibbs_trajectory(&m, &Scan::Uniform(50), &StartSpec::UniformRandom, 9, 100)
            .unwrap();
        let b = run_gibbs_trajectory(&m, &Scan::Uniform(50), &StartSpec::UniformRandom, 9, 100)
            .unwrap();
        assert_eq!(a, b);
        assert!(run_gibbs_trajectory(&m, &Scan::Uniform(50), &StartSpec::AllPlus, 9, 10).is_err());
    }

    #[test]
    fn invalid_starts_are_rejected() {
        let m = pair();
        assert!(run_gibbs(&m, &Scan::Uniform(1), &StartSpec::Fixed(vec![0, 2]), 0).is_err());
        assert!(run_gibbs(&m, &Scan::Uniform(1), &StartSpec::Fixed(vec![0]), 0).is_err());
    }

    #[test]
    fn estimates() {
        let m = pair();
        let feature = Feature::Coordinate(0);
        assert!(matches!(
            estimate_expectation(&m, &Scan::Uniform(3), &StartSpec::AllPlus, &feature, 1, 0),
            Err(Error::TooFewReplicates(1))
        ));
        let e = estimate_expectation(&m, &Scan::Uniform(0), &StartSpec::AllPlus, &feature, 10, 0)
            .unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));

        let a =
            sample_terminal_features(&m, &Scan::Uniform(20), &StartSpec::AllPlus, &feature, 64, 5)
                .unwrap();
        let b =
            sample_terminal_features(&m, &Scan::Uniform(20), &StartSpec::AllPlus, &feature, 64, 5)
                .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn long_chain_matches_enumerated_joint() {
        let m = pair();
        let exact = crate::oracle::enumerate_distribution(&m).unwrap();
        let mut rng = chain_rng(2024);
        let mut state = ChainState {
            values: vec![1, 1],
            t: 0,
        };
        let mut sampler = GibbsSampler::new(&m);
        let n = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let i = sampler.select(StepRef::Uniform, &mut rng);
            sampler.resample(&mut state.values, i, &mut rng);
            counts[state.values[0] * 2 + state.values[1]] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            let prob = exact.probs()[k];
            // Autocorrelated draws: allow a generous multiple of the iid standard error.
            let se = (prob * (1.0 - prob) / n as f64).sqrt();
            assert!(
                (freq - prob).abs() < 3.0 * 4.0 * se,
                "state {k}: {freq} vs {prob}"
            );
        }
    }
}
