//! Maximum likelihood fitting of a small Ising model where the model
//! expectations in the gradient come from Gibbs chains.
//!
//! Parameters are the edge weights (in the model's sorted edge order) followed
//! by the unary weights. The reference point `θ*` is the exact maximizer of the
//! training log likelihood, found by gradient ascent on enumerated moments.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{elapsed_ms, median, ExperimentReport, Series};
use crate::error::{Error, Result};
use crate::gibbs::{GibbsSampler, StartSpec};
use crate::influence::binary_pairwise_bound;
use crate::model::{lattice_ising, spin, BinaryPairwiseMrf, LatticeSpec, ParamSource};
use crate::optimizer::{optimize_scan, OptimizerConfig};
use crate::oracle::enumerate_distribution;
use crate::rng::{chain_rng, sub_seed};
use crate::scan::{Scan, WeightVector};

/// Where the training samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Exact draws from the true model.
    #[default]
    TrueModel,
    /// Independent uniform ±1 entries.
    Rademacher,
}

/// How the model expectations in each gradient are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScanPolicy {
    /// Uniform random scan.
    Uniform,
    /// Uniform scan optimized with `d = 1` against the bound at the current estimate.
    Dogs { epsilon: f64 },
    /// Exact expectations under the current estimate; no sampling.
    Exact,
}

impl ScanPolicy {
    pub fn label(&self) -> String {
        match self {
            ScanPolicy::Uniform => "uniform".into(),
            ScanPolicy::Dogs { epsilon } => format!("dogs_eps{epsilon}"),
            ScanPolicy::Exact => "exact".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub lattice: LatticeSpec,
    pub model_seed: u64,
    pub data: DataSource,
    pub training_samples: usize,
    pub data_seed: u64,
    pub gradient_steps: usize,
    pub gibbs_steps: usize,
    /// Independent chains per gradient estimate.
    pub gibbs_runs: usize,
    pub step_size: f64,
    pub policies: Vec<ScanPolicy>,
    /// Replicates per policy; replicate `r` uses the same seeds under every policy.
    pub runs: usize,
    pub threshold: f64,
    pub start: StartSpec,
    pub seed: u64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec {
                rows: 3,
                cols: 3,
                toroidal: false,
                coupling: ParamSource::Uniform {
                    low: -0.5,
                    high: 0.5,
                },
                unary: ParamSource::Uniform {
                    low: -0.5,
                    high: 0.5,
                },
            },
            model_seed: 0,
            data: DataSource::TrueModel,
            training_samples: 10_000,
            data_seed: 0,
            gradient_steps: 60,
            gibbs_steps: 30,
            gibbs_runs: 30,
            step_size: 0.1,
            policies: vec![ScanPolicy::Uniform, ScanPolicy::Dogs { epsilon: 0.01 }],
            runs: 5,
            threshold: 0.25,
            start: StartSpec::UniformRandom,
            seed: 0,
        }
    }
}

impl MleConfig {
    fn validate(&self) -> Result<()> {
        let counts = [
            ("training_samples", self.training_samples),
            ("gradient_steps", self.gradient_steps),
            ("gibbs_steps", self.gibbs_steps),
            ("gibbs_runs", self.gibbs_runs),
            ("runs", self.runs),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidConfig("step size must be positive".into()));
        }
        for policy in &self.policies {
            if let ScanPolicy::Dogs { epsilon } = policy {
                if epsilon.is_nan() || *epsilon < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "epsilon {epsilon} must be >= 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sufficient statistics `(x_i x_j for edges, x_i)` of one state.
fn add_statistics(model: &BinaryPairwiseMrf, state: &[usize], weight: f64, out: &mut [f64]) {
    let m = model.num_edges();
    for (k, &(i, j, _)) in model.edges().iter().enumerate() {
        out[k] += weight * spin(state[i]) * spin(state[j]);
    }
    for (i, &v) in state.iter().enumerate() {
        out[m + i] += weight * spin(v);
    }
}

fn num_parameters(model: &BinaryPairwiseMrf) -> usize {
    model.num_edges() + model.unary().len()
}

fn parameters(model: &BinaryPairwiseMrf) -> Vec<f64> {
    model
        .edges()
        .iter()
        .map(|e| e.2)
        .chain(model.unary().iter().copied())
        .collect()
}

fn with_theta(model: &BinaryPairwiseMrf, theta: &[f64]) -> Result<BinaryPairwiseMrf> {
    let m = model.num_edges();
    model.with_parameters(&theta[..m], &theta[m..])
}

/// Exact model moments by enumeration.
pub fn exact_moments(model: &BinaryPairwiseMrf) -> Result<Vec<f64>> {
    let dist = enumerate_distribution(model)?;
    let mut out = vec![0.0; num_parameters(model)];
    for (k, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 {
            add_statistics(model, &dist.state_of(k), p, &mut out);
        }
    }
    Ok(out)
}

/// Empirical moments of `n` training samples.
pub fn training_moments(
    model: &BinaryPairwiseMrf,
    source: DataSource,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = chain_rng(seed);
    let mut out = vec![0.0; num_parameters(model)];
    let w = 1.0 / n as f64;
    match source {
        DataSource::TrueModel => {
            let dist = enumerate_distribution(model)?;
            for _ in 0..n {
                let state = dist.state_of(dist.sample_index(rng.gen::<f64>()));
                add_statistics(model, &state, w, &mut out);
            }
        }
        DataSource::Rademacher => {
            let p = model.unary().len();
            for _ in 0..n {
                let state: Vec<usize> = (0..p).map(|_| rng.gen_range(0..2)).collect();
                add_statistics(model, &state, w, &mut out);
            }
        }
    }
    Ok(out)
}

const FIT_STEP: f64 = 0.2;
const FIT_TOLERANCE: f64 = 1e-10;
const FIT_MAX_ITERATIONS: usize = 100_000;

/// Maximizer of the log likelihood with the given data moments, starting from zero.
pub fn exact_fit(structure: &BinaryPairwiseMrf, data: &[f64]) -> Result<Vec<f64>> {
    let mut theta = vec![0.0; data.len()];
    let mut last = f64::INFINITY;
    for _ in 0..FIT_MAX_ITERATIONS {
        let model = with_theta(structure, &theta)?;
        let moments = exact_moments(&model)?;
        let grad: Vec<f64> = data.iter().zip(&moments).map(|(a, b)| a - b).collect();
        last = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if last <= FIT_TOLERANCE {
            return Ok(theta);
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t += FIT_STEP * g;
        }
    }
    Err(Error::NoConvergence {
        iterations: FIT_MAX_ITERATIONS,
        last,
    })
}

/// Monte Carlo moments from `runs` chains of `scan`, each contributing its
/// terminal state.
fn sampled_moments(
    model: &BinaryPairwiseMrf,
    scan: &Scan,
    start: &StartSpec,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut sampler = GibbsSampler::new(model);
    let mut out = vec![0.0; num_parameters(model)];
    let w = 1.0 / runs as f64;
    for r in 0..runs {
        let mut rng = chain_rng(sub_seed(seed, r as u64));
        let mut state = start.initial_state(model, &mut rng)?;
        sampler.run(scan, &mut state, &mut rng);
        add_statistics(model, &state.values, w, &mut out);
    }
    Ok(out)
}

/// Shortest optimized uniform-initialized scan, up to `budget` steps, whose
/// variation is at most `epsilon`. Falls back to the optimized full budget.
pub fn dogs_scan(
    model: &BinaryPairwiseMrf,
    d: &WeightVector,
    budget: usize,
    epsilon: f64,
) -> Result<Scan> {
    let bound = binary_pairwise_bound(model);
    let config = OptimizerConfig::with_epsilon(epsilon);
    let mut last = None;
    for length in 1..=budget {
        let out = optimize_scan(&Scan::Uniform(length), d, &bound, &config)?;
        if out.dv_after <= epsilon {
            return Ok(out.scan);
        }
        last = Some(out.scan);
    }
    last.ok_or(Error::EmptyScan)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Error trajectory of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    /// `‖θ̂_k − θ*‖₂` for `k = 0, …` (entry 0 is the starting point).
    pub errors: Vec<f64>,
    /// Cumulative Gibbs steps spent before each entry of `errors`.
    pub gibbs_steps: Vec<usize>,
    /// Gradient step at which the estimate became non-finite.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    /// Cumulative Gibbs steps when the error first drops to `threshold`.
    pub fn steps_to(&self, threshold: f64) -> Option<usize> {
        self.errors
            .iter()
            .position(|&e| e <= threshold)
            .map(|k| self.gibbs_steps[k])
    }
}

fn run_replicate(
    config: &MleConfig,
    structure: &BinaryPairwiseMrf,
    data: &[f64],
    theta_star: &[f64],
    policy: ScanPolicy,
    seed: u64,
) -> Result<Trajectory> {
    let p = structure.unary().len();
    let ones = WeightVector::ones(p);
    let uniform = Scan::Uniform(config.gibbs_steps);
    let mut spent = 0;
    let mut theta = vec![0.0; data.len()];
    let mut traj = Trajectory {
        seed,
        errors: vec![distance(&theta, theta_star)],
        gibbs_steps: vec![0],
        diverged_at: None,
    };
    for step in 1..=config.gradient_steps {
        let model = with_theta(structure, &theta)?;
        let scan = match policy {
            ScanPolicy::Exact => None,
            ScanPolicy::Uniform => Some(uniform.clone()),
            ScanPolicy::Dogs { epsilon } => {
                Some(dogs_scan(&model, &ones, config.gibbs_steps, epsilon)?)
            }
        };
        let moments = match &scan {
            None => exact_moments(&model)?,
            Some(scan) => {
                spent += scan.len() * config.gibbs_runs;
                sampled_moments(
                    &model,
                    scan,
                    &config.start,
                    config.gibbs_runs,
                    sub_seed(seed, step as u64),
                )?
            }
        };
        for ((t, a), b) in theta.iter_mut().zip(data).zip(&moments) {
            *t += config.step_size * (a - b);
        }
        if theta.iter().any(|t| !t.is_finite()) {
            traj.diverged_at = Some(step);
            break;
        }
        traj.errors.push(distance(&theta, theta_star));
        traj.gibbs_steps.push(spent);
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRuns {
    pub policy: ScanPolicy,
    pub runs: Vec<Trajectory>,
}

impl PolicyRuns {
    /// Median cumulative Gibbs steps to reach `threshold`; runs that never
    /// reach it count as infinite.
    pub fn median_steps_to(&self, threshold: f64) -> f64 {
        let steps: Vec<f64> = self
            .runs
            .iter()
            .map(|r| r.steps_to(threshold).map_or(f64::INFINITY, |s| s as f64))
            .collect();
        median(&steps)
    }

    /// Median error after the final gradient step.
    pub fn median_final_error(&self) -> f64 {
        let finals: Vec<f64> = self
            .runs
            .iter()
            .map(|r| {
                if r.diverged_at.is_some() {
                    f64::INFINITY
                } else {
                    *r.errors.last().unwrap()
                }
            })
            .collect();
        median(&finals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleResult {
    pub theta_true: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub policies: Vec<PolicyRuns>,
}

impl MleResult {
    pub fn policy(&self, label: &str) -> Option<&PolicyRuns> {
        self.policies.iter().find(|p| p.policy.label() == label)
    }
}

pub fn run(config: &MleConfig) -> Result<MleResult> {
    config.validate()?;
    let truth = lattice_ising(&config.lattice, config.model_seed)?;
    let data = training_moments(
        &truth,
        config.data,
        config.training_samples,
        config.data_seed,
    )?;
    let theta_star = exact_fit(&truth, &data)?;
    let jobs: Vec<(usize, usize)> = (0..config.policies.len())
        .flat_map(|k| (0..config.runs).map(move |r| (k, r)))
        .collect();
    let trajectories = jobs
        .par_iter()
        .map(|&(k, r)| {
            let seed = sub_seed(config.seed, r as u64);
            run_replicate(config, &truth, &data, &theta_star, config.policies[k], seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut chunks = trajectories.into_iter();
    let policies = config
        .policies
        .iter()
        .map(|&policy| PolicyRuns {
            policy,
            runs: chunks.by_ref().take(config.runs).collect(),
        })
        .collect();
    Ok(MleResult {
        theta_true: parameters(&truth),
        theta_star,
        policies,
    })
}

pub fn report(config: &MleConfig) -> Result<(MleResult, ExperimentReport)> {
    let start = Instant::now();
    let result = run(config)?;
    let mut report = ExperimentReport::new("mle", config, elapsed_ms(start))?;
    let mut legend = Vec::new();
    for pr in &result.policies {
        let label = pr.policy.label();
        let mut s = Series::new(
            format!("error_{label}"),
            &["run", "gradient_step", "gibbs_steps", "error"],
        );
        for (r, traj) in pr.runs.iter().enumerate() {
            for (k, (&e, &g)) in traj.errors.iter().zip(&traj.gibbs_steps).enumerate() {
                s.push(vec![r as f64, k as f64, g as f64, e]);
            }
        }
        report.series.push(s);
        legend.push(serde_json::json!({
            "policy": label,
            "median_steps_to_threshold": pr.median_steps_to(config.threshold),
            "median_final_error": pr.median_final_error(),
            "diverged_runs": pr.runs.iter().filter(|r| r.diverged_at.is_some()).count(),
        }));
    }
    report.summarize("policies", legend)?;
    report.summarize("theta_true", &result.theta_true)?;
    report.summarize("theta_star", &result.theta_star)?;
    report.summarize("start", config.start.kind())?;
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> MleConfig {
        MleConfig {
            lattice: LatticeSpec {
                rows: 2,
                cols: 2,
                ..MleConfig::default().lattice
            },
            training_samples: 2000,
            gradient_steps: 40,
            gibbs_steps: 8,
            gibbs_runs: 10,
            step_size: 0.3,
            runs: 2,
            policies: vec![
                ScanPolicy::Uniform,
                ScanPolicy::Dogs { epsilon: 0.01 },
                ScanPolicy::Exact,
            ],
            ..MleConfig::default()
        }
    }

    #[test]
    fn exact_fit_matches_moments() {
        let model = lattice_ising(&tiny().lattice, 3).unwrap();
        let data = exact_moments(&model).unwrap();
        let theta = exact_fit(&model, &data).unwrap();
        assert!(distance(&theta, &parameters(&model)) < 1e-8);
    }

    #[test]
    fn zero_model_fits_to_zero() {
        let mut lattice = tiny().lattice;
        lattice.coupling = ParamSource::Constant(0.0);
        lattice.unary = ParamSource::Constant(0.0);
        let model = lattice_ising(&lattice, 0).unwrap();
        let data = exact_moments(&model).unwrap();
        assert!(exact_fit(&model, &data).unwrap().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn exact_policy_converges_to_fit() {
        let config = MleConfig {
            gradient_steps: 200,
            policies: vec![ScanPolicy::Exact],
            runs: 1,
            ..tiny()
        };
        let result = run(&config).unwrap();
        let traj = &result.policies[0].runs[0];
        assert!(*traj.errors.last().unwrap() < 1e-6);
    }

    #[test]
    fn runs_are_reproducible_and_counted() {
        let config = tiny();
        let (a, report) = report(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a, b);
        for pr in &a.policies {
            assert_eq!(pr.runs.len(), 2);
            let traj = &pr.runs[0];
            assert_eq!(traj.errors.len(), 41);
            let spent = traj.gibbs_steps[1];
            match pr.policy {
                ScanPolicy::Dogs { .. } => {
                    assert!(spent > 0 && spent <= 80 && spent % 10 == 0, "{spent}")
                }
                ScanPolicy::Uniform => assert_eq!(spent, 80),
                ScanPolicy::Exact => assert_eq!(spent, 0),
            }
        }
        assert_eq!(report.series.len(), 3);
    }

    #[test]
    fn huge_step_diverges_without_error() {
        let config = MleConfig {
            step_size: 1e308,
            policies: vec![ScanPolicy::Uniform],
            runs: 1,
            ..tiny()
        };
        let traj = &run(&config).unwrap().policies[0].runs[0];
        assert!(traj.diverged_at.is_some());
    }

    #[test]
    fn rejects_zero_counts() {
        let config = MleConfig {
            gibbs_runs: 0,
            ..tiny()
        };
        assert!(matches!(run(&config), Err(Error::InvalidConfig(_))));
    }
}
