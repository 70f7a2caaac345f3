//! Scan optimization by coordinate descent on the Dobrushin variation.
//!
//! The variation is linear in each `q_t`, so minimizing over one step with the
//! others fixed selects a point mass. A forward pass stores `b_T` and the undo
//! records of every step; the backward pass then revisits `t = T, …, 1`,
//! restoring `b_{t−1}` and choosing `q*_t = e_{argmin w}` where
//! `w = −d_t ⊙ (I − C̄) b_{t−1}` and `d_tᵀ = dᵀ B(q*_T) ⋯ B(q*_{t+1})`.
//! For deterministic input scans every update touches one column and one row
//! of `C̄`, and `w` lives in a lazily invalidated heap.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::argmin::LazyArgmin;
use crate::error::{Error, Result};
use crate::influence::InfluenceMatrix;
use crate::scan::{Scan, Step, StepRef, WeightVector};
use crate::variation::{
    apply_step, check_consistency, check_dimensions, dobrushin_variation, Change,
};

/// Two candidates whose `w` differ by at most this fraction of the larger
/// magnitude are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Minimum relative improvement for iterated optimization to continue.
pub const ITERATION_IMPROVEMENT: f64 = 1e-12;

#[inline]
fn tied(value: f64, best: f64) -> bool {
    value - best <= TIE_TOLERANCE * value.abs().max(best.abs())
}

/// How to choose among coordinates with (nearly) equal derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Keep the incumbent point mass if it is within [`TIE_TOLERANCE`] of the
    /// minimum, otherwise take the lowest minimizing index.
    #[default]
    KeepIncumbent,
    /// Always take the lowest minimizing index.
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Stop the backward pass once the variation is at most this value.
    pub epsilon: Option<f64>,
    pub tie_break: TieBreak,
    /// Cap on passes for [`iterate_optimize`].
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            tie_break: TieBreak::KeepIncumbent,
            max_iterations: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon: Some(epsilon),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        match self.epsilon {
            Some(e) if e.is_nan() || e < 0.0 => {
                Err(Error::InvalidConfig(format!("epsilon {e} must be >= 0")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedScan {
    pub scan: Scan,
    pub dv_before: f64,
    pub dv_after: f64,
    /// Steps re-chosen by the backward pass.
    pub steps_optimized: usize,
    /// Re-chosen steps whose minimum was attained by more than one coordinate.
    pub tie_count: usize,
    /// Passes performed (1 for a single run).
    pub iterations: usize,
}

/// Report of one optimization run, as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    pub dv_before: f64,
    pub dv_after: f64,
    pub steps_optimized: usize,
    pub wall_time_ms: f64,
    pub tie_count: usize,
    pub iterations: usize,
    pub length: usize,
}

impl OptimizedScan {
    pub fn report(&self, wall_time_ms: f64) -> OptimizerReport {
        OptimizerReport {
            dv_before: self.dv_before,
            dv_after: self.dv_after,
            steps_optimized: self.steps_optimized,
            wall_time_ms,
            tie_count: self.tie_count,
            iterations: self.iterations,
            length: self.scan.len(),
        }
    }
}

/// State of the backward pass when step `t` is chosen.
#[derive(Debug)]
pub struct BackwardStep<'a> {
    /// Zero-based step index.
    pub t: usize,
    /// `w_i`: the variation with `q_t = e_i`, minus a constant common to all `i`.
    pub derivative: &'a [f64],
    pub incumbent: StepRef<'a>,
    pub chosen: usize,
}

/// One forward–backward coordinate-descent pass.
pub fn optimize_scan(
    scan: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
    config: &OptimizerConfig,
) -> Result<OptimizedScan> {
    optimize_scan_observed(scan, d, bound, config, |_| {})
}

/// [`optimize_scan`] with a callback invoked at every backward step.
pub fn optimize_scan_observed(
    scan: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
    config: &OptimizerConfig,
    mut observer: impl FnMut(&BackwardStep<'_>),
) -> Result<OptimizedScan> {
    config.validate()?;
    let p = check_dimensions(scan, d, bound)?;
    let len = scan.len();
    if len == 0 {
        return Err(Error::EmptyScan);
    }

    // Forward: b_T and the undo records.
    let mut b = vec![1.0; p];
    let mut value = d.sum();
    let mut changes = Vec::with_capacity(len);
    for t in 0..len {
        let (weighted, change) = apply_step(scan.step(t, p), bound, d.as_slice(), &mut b, true);
        value -= weighted;
        changes.push(change.expect("recorded"));
    }
    let dv_before = d.dot(&b);
    check_consistency(value, dv_before, d)?;

    // Backward state: residual g = (I − C̄) b, current weights d_t, w = −d_t ⊙ g.
    let mut weights = d.as_slice().to_vec();
    let mut residual: Vec<f64> = (0..p).map(|i| bound.residual_at(i, &b)).collect();
    let mut w = LazyArgmin::new(residual.iter().zip(&weights).map(|(g, d)| -d * g).collect());
    let mut value = dv_before;
    let mut chosen_rev = Vec::with_capacity(len);
    let mut keep_prefix = 0;
    let mut tie_count = 0;

    for t in (0..len).rev() {
        if config.epsilon.is_some_and(|eps| value <= eps) {
            keep_prefix = t + 1;
            break;
        }
        match &changes[t] {
            Change::Site { index, prev } => {
                let k = *index;
                b[k] = *prev;
                residual[k] = bound.residual_at(k, &b);
                w.set(k, -weights[k] * residual[k]);
                for &(i, _) in bound.col(k) {
                    residual[i] = bound.residual_at(i, &b);
                    w.set(i, -weights[i] * residual[i]);
                }
            }
            Change::Dense(prev) => {
                b.copy_from_slice(prev);
                for (i, r) in residual.iter_mut().enumerate() {
                    *r = bound.residual_at(i, &b);
                }
                let fresh: Vec<f64> = residual.iter().zip(&weights).map(|(g, d)| -d * g).collect();
                w.reset(&fresh);
            }
        }

        let incumbent = scan.step(t, p);
        let (best, best_value) = w.argmin();
        let chosen = match (config.tie_break, incumbent) {
            (TieBreak::KeepIncumbent, StepRef::Site(j)) if tied(w.get(j), best_value) => j,
            _ => best,
        };
        if w.runner_up().is_some_and(|(_, v)| tied(v, best_value)) {
            tie_count += 1;
        }
        let incumbent_value = match incumbent {
            StepRef::Site(j) => w.get(j),
            StepRef::Uniform => w.values().iter().sum::<f64>() / p as f64,
            StepRef::Dist(q) => q.iter().zip(w.values()).map(|(q, w)| q * w).sum(),
        };
        value += w.get(chosen) - incumbent_value;
        observer(&BackwardStep {
            t,
            derivative: w.values(),
            incumbent,
            chosen,
        });

        // d_{t−1}ᵀ = d_tᵀ B(e_k); the zero diagonal makes the new d_k exactly 0.
        let dk = weights[chosen];
        if dk != 0.0 {
            weights[chosen] = 0.0;
            w.set(chosen, 0.0);
            for &(j, c) in bound.row(chosen) {
                weights[j] += dk * c;
                w.set(j, -weights[j] * residual[j]);
            }
        }
        chosen_rev.push(chosen);
    }

    let mut steps: Vec<Step> = (0..keep_prefix)
        .map(|t| scan.step(t, p).to_owned())
        .collect();
    steps.extend(chosen_rev.iter().rev().map(|&i| Step::Site(i)));
    let optimized = Scan::Steps(steps);
    let dv_after = dobrushin_variation(&optimized, d, bound)?;
    check_consistency(value, dv_after, d)?;
    Ok(OptimizedScan {
        scan: optimized,
        dv_before,
        dv_after,
        steps_optimized: chosen_rev.len(),
        tie_count,
        iterations: 1,
    })
}

/// Re-optimizes the output until the variation improves by less than
/// [`ITERATION_IMPROVEMENT`] relative to its value, or `max_iterations` passes
/// have run.
pub fn iterate_optimize(
    scan: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
    config: &OptimizerConfig,
) -> Result<OptimizedScan> {
    let mut best = optimize_scan(scan, d, bound, config)?;
    let dv_before = best.dv_before;
    let mut iterations = 1;
    while iterations < config.max_iterations.max(1) {
        let next = optimize_scan(&best.scan, d, bound, config)?;
        iterations += 1;
        let improvement = best.dv_after - next.dv_after;
        if improvement >= 0.0 {
            best = next;
        }
        if improvement <= ITERATION_IMPROVEMENT * best.dv_after.abs() {
            break;
        }
    }
    best.dv_before = dv_before;
    best.iterations = iterations;
    Ok(best)
}

/// Outcome of length-doubling selection.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingResult {
    pub optimized: OptimizedScan,
    /// Variation of the full reference scan, the accuracy to match.
    pub reference_dv: f64,
    /// Candidate lengths tried, in order.
    pub lengths_tried: Vec<usize>,
    pub setup_time_ms: f64,
}

/// Finds a short optimized scan matching the reference guarantee: optimize the
/// first `T̃` reference steps for `T̃ = 2, 4, 8, …` and accept the first whose
/// variation is at most the reference's. `T̃` is capped at the reference length.
pub fn length_doubling_select(
    reference: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
) -> Result<DoublingResult> {
    if reference.is_empty() {
        return Err(Error::EmptyScan);
    }
    let start = Instant::now();
    let reference_dv = dobrushin_variation(reference, d, bound)?;
    let config = OptimizerConfig::default();
    let mut length = 2usize.min(reference.len());
    let mut lengths_tried = Vec::new();
    loop {
        lengths_tried.push(length);
        let candidate = optimize_scan(&reference.prefix(length), d, bound, &config)?;
        if candidate.dv_after <= reference_dv || length >= reference.len() {
            return Ok(DoublingResult {
                optimized: candidate,
                reference_dv,
                lengths_tried,
                setup_time_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        length = (length * 2).min(reference.len());
    }
}
