//! Dobrushin variation `dᵀ B(q_T) ⋯ B(q_1) 1` with `B(q) = I − diag(q)(I − C̄)`.
//!
//! The forward recursion `b_t = B(q_t) b_{t−1}`, `b_0 = 1`, bounds the marginal
//! coupling probabilities of the chain coordinatewise, so `dᵀ b_T` bounds the
//! `d`-weighted total variation between the step-`T` law and the target.

use crate::error::{Error, Result};
use crate::influence::InfluenceMatrix;
use crate::scan::{Scan, StepRef, WeightVector};

/// Relative tolerance (per variable) between the running and recomputed variation.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// One forward update of `b`, stored as the overwritten values so the step can
/// be undone bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub enum Change {
    /// Only `b[index]` changed; it used to be `prev`.
    Site { index: usize, prev: f64 },
    /// Dense update; the full previous vector.
    Dense(Vec<f64>),
}

impl Change {
    /// Changed coordinate, or `None` for dense updates.
    pub fn index(&self) -> Option<usize> {
        match self {
            Change::Site { index, .. } => Some(*index),
            Change::Dense(_) => None,
        }
    }

    /// Restores the previous vector: `b_{t−1} = b_t + Δ_{t−1}`.
    pub fn undo(&self, b: &mut [f64]) {
        match self {
            Change::Site { index, prev } => b[*index] = *prev,
            Change::Dense(prev) => b.copy_from_slice(prev),
        }
    }

    /// `Δ = b_{t−1} − b_t` given the current `b_t`.
    pub fn delta(&self, b: &[f64]) -> Vec<(usize, f64)> {
        match self {
            Change::Site { index, prev } => vec![(*index, prev - b[*index])],
            Change::Dense(prev) => prev
                .iter()
                .zip(b)
                .enumerate()
                .filter(|(_, (p, c))| p != c)
                .map(|(i, (p, c))| (i, p - c))
                .collect(),
        }
    }
}

/// Applies `b ← B(q) b` and returns the weighted decrease `dᵀ Δ` together
/// with the undo record (when `record` is set).
pub(crate) fn apply_step(
    step: StepRef<'_>,
    bound: &InfluenceMatrix,
    d: &[f64],
    b: &mut [f64],
    record: bool,
) -> (f64, Option<Change>) {
    match step {
        StepRef::Site(i) => {
            let prev = b[i];
            let delta = bound.residual_at(i, b);
            b[i] = prev - delta;
            (
                d[i] * delta,
                record.then_some(Change::Site { index: i, prev }),
            )
        }
        StepRef::Uniform => {
            let p = b.len();
            let share = 1.0 / p as f64;
            dense_update(bound, d, b, record, |_| share)
        }
        StepRef::Dist(q) => dense_update(bound, d, b, record, |i| q[i]),
    }
}

fn dense_update(
    bound: &InfluenceMatrix,
    d: &[f64],
    b: &mut [f64],
    record: bool,
    q: impl Fn(usize) -> f64,
) -> (f64, Option<Change>) {
    let prev = b.to_vec();
    let mut weighted = 0.0;
    for i in 0..b.len() {
        let qi = q(i);
        if qi > 0.0 {
            let delta = qi * bound.residual_at(i, &prev);
            b[i] = prev[i] - delta;
            weighted += d[i] * delta;
        }
    }
    (weighted, record.then_some(Change::Dense(prev)))
}

pub(crate) fn check_dimensions(
    scan: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
) -> Result<usize> {
    let p = bound.dim();
    if d.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: d.dim(),
        });
    }
    scan.validate(p)?;
    Ok(p)
}

pub(crate) fn check_consistency(incremental: f64, recomputed: f64, d: &WeightVector) -> Result<()> {
    let tolerance = CONSISTENCY_TOLERANCE * d.dim().max(1) as f64 * d.max().max(1.0);
    if (incremental - recomputed).abs() > tolerance {
        return Err(Error::Inconsistent {
            incremental,
            recomputed,
        });
    }
    Ok(())
}

/// Forward pass of the coupling-bound recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBoundTrace {
    final_bound: Vec<f64>,
    changes: Vec<Change>,
    running: Vec<f64>,
    variation: f64,
}

impl CouplingBoundTrace {
    /// `b_T`.
    pub fn final_bound(&self) -> &[f64] {
        &self.final_bound
    }

    /// Undo records for steps `1..=T` (entry `t` restores `b_t` from `b_{t+1}`).
    pub fn changes(&self) -> &[Change] {
        &self.changes
    }

    /// `dᵀ b_T` recomputed from `b_T` directly.
    pub fn variation(&self) -> f64 {
        self.variation
    }

    /// Incrementally maintained `𝒱 = dᵀ b_t` after each step (entry 0 is `t = 0`).
    pub fn running_variation(&self) -> &[f64] {
        &self.running
    }

    /// `b_t` reconstructed by undoing steps `T, T−1, …, t+1`.
    pub fn bound_at(&self, t: usize) -> Vec<f64> {
        let mut b = self.final_bound.clone();
        for change in self.changes[t..].iter().rev() {
            change.undo(&mut b);
        }
        b
    }

    /// Rows `(t, changed_index or −1, running variation)` for `t = 1..=T`.
    pub fn csv_rows(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        self.changes.iter().enumerate().map(|(t, c)| {
            (
                t + 1,
                c.index().map_or(-1, |i| i as i64),
                self.running[t + 1],
            )
        })
    }
}

/// Runs the recursion over the whole scan, keeping the undo records.
pub fn forward_coupling_bounds(
    scan: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
) -> Result<CouplingBoundTrace> {
    let p = check_dimensions(scan, d, bound)?;
    let mut b = vec![1.0; p];
    let mut value = d.sum();
    let mut running = Vec::with_capacity(scan.len() + 1);
    running.push(value);
    let mut changes = Vec::with_capacity(scan.len());
    for t in 0..scan.len() {
        let (weighted, change) = apply_step(scan.step(t, p), bound, d.as_slice(), &mut b, true);
        value -= weighted;
        running.push(value);
        changes.extend(change);
    }
    let variation = d.dot(&b);
    check_consistency(value, variation, d)?;
    Ok(CouplingBoundTrace {
        final_bound: b,
        changes,
        running,
        variation,
    })
}

/// Dobrushin variation of `scan` under weights `d` and influence bound `C̄`.
pub fn dobrushin_variation(scan: &Scan, d: &WeightVector, bound: &InfluenceMatrix) -> Result<f64> {
    let p = check_dimensions(scan, d, bound)?;
    let mut b = vec![1.0; p];
    let mut value = d.sum();
    for t in 0..scan.len() {
        value -= apply_step(scan.step(t, p), bound, d.as_slice(), &mut b, false).0;
    }
    let variation = d.dot(&b);
    check_consistency(value, variation, d)?;
    Ok(variation)
}

/// Variation of every prefix length in `lengths` from a single pass.
pub fn variation_curve(
    scan: &Scan,
    d: &WeightVector,
    bound: &InfluenceMatrix,
    lengths: &[usize],
) -> Result<Vec<f64>> {
    let p = check_dimensions(scan, d, bound)?;
    if let Some(&t) = lengths.iter().find(|&&t| t > scan.len()) {
        return Err(Error::InvalidConfig(format!(
            "curve length {t} exceeds scan length {}",
            scan.len()
        )));
    }
    let mut b = vec![1.0; p];
    let mut at = vec![f64::NAN; scan.len() + 1];
    let mut wanted = vec![false; scan.len() + 1];
    for &t in lengths {
        wanted[t] = true;
    }
    if wanted[0] {
        at[0] = d.dot(&b);
    }
    for t in 0..scan.len() {
        apply_step(scan.step(t, p), bound, d.as_slice(), &mut b, false);
        if wanted[t + 1] {
            at[t + 1] = d.dot(&b);
        }
    }
    Ok(lengths.iter().map(|&t| at[t]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> InfluenceMatrix {
        InfluenceMatrix::from_dense(&[vec![0.0, 0.3], vec![0.2, 0.0]], "test").unwrap()
    }

    /// Dense `B(q_T) ⋯ B(q_1) 1`, written independently of the sparse recursion.
    fn dense_bound(scan: &Scan, c: &[Vec<f64>]) -> Vec<f64> {
        let p = c.len();
        let mut b = vec![1.0; p];
        for t in 0..scan.len() {
            let q = scan.step(t, p).to_dense(p);
            let mut next = vec![0.0; p];
            for i in 0..p {
                for j in 0..p {
                    let identity = if i == j { 1.0 } else { 0.0 };
                    let bij = identity - q[i] * (identity - c[i][j]);
                    next[i] += bij * b[j];
                }
            }
            b = next;
        }
        b
    }

    #[test]
    fn empty_scan_is_vacuous() {
        let d = WeightVector::new(vec![0.5, 2.0]).unwrap();
        assert_eq!(
            dobrushin_variation(&Scan::Systematic(0), &d, &two_by_two()).unwrap(),
            2.5
        );
    }

    #[test]
    fn influence_free_resample_couples_exactly() {
        let c = InfluenceMatrix::zeros(3, "zero");
        let trace =
            forward_coupling_bounds(&Scan::deterministic([0]), &WeightVector::ones(3), &c).unwrap();
        assert_eq!(trace.final_bound(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn hand_unrolled_two_variable_trace() {
        let c = two_by_two();
        let scan = Scan::deterministic([0, 1]);
        let trace = forward_coupling_bounds(&scan, &WeightVector::ones(2), &c).unwrap();
        let b1 = trace.bound_at(1);
        assert!((b1[0] - 0.3).abs() < 1e-15 && b1[1] == 1.0);
        let b2 = trace.final_bound();
        assert!((b2[0] - 0.3).abs() < 1e-15 && (b2[1] - 0.06).abs() < 1e-15);
        assert!((trace.variation() - 0.36).abs() < 1e-15);
        let dense = dense_bound(&scan, &c.to_dense());
        assert!(b2.iter().zip(&dense).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(
            dobrushin_variation(&scan, &WeightVector::new(vec![0.0, 0.0]).unwrap(), &c).unwrap(),
            0.0
        );
    }

    #[test]
    fn stochastic_steps_match_dense_products() {
        let c = InfluenceMatrix::from_dense(
            &[
                vec![0.0, 0.1, 0.4],
                vec![0.3, 0.0, 0.2],
                vec![0.05, 0.25, 0.0],
            ],
            "test",
        )
        .unwrap();
        let scan = Scan::Steps(vec![
            crate::scan::Step::Uniform,
            crate::scan::Step::Dist(vec![0.2, 0.5, 0.3]),
            crate::scan::Step::Site(2),
            crate::scan::Step::Uniform,
        ]);
        let trace = forward_coupling_bounds(&scan, &WeightVector::ones(3), &c).unwrap();
        let dense = dense_bound(&scan, &c.to_dense());
        for (a, b) in trace.final_bound().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-15);
        }
        let uniform = dobrushin_variation(&Scan::Uniform(4), &WeightVector::ones(3), &c).unwrap();
        let dense_uniform: f64 = dense_bound(&Scan::Uniform(4), &c.to_dense()).iter().sum();
        assert!((uniform - dense_uniform).abs() < 1e-14);
    }

    #[test]
    fn replay_restores_ones_bitwise() {
        let c = InfluenceMatrix::from_dense(
            &[
                vec![0.0, 0.13, 0.41],
                vec![0.37, 0.0, 0.29],
                vec![0.11, 0.23, 0.0],
            ],
            "test",
        )
        .unwrap();
        let scan = Scan::Steps(vec![
            crate::scan::Step::Site(1),
            crate::scan::Step::Uniform,
            crate::scan::Step::Site(0),
            crate::scan::Step::Dist(vec![0.1, 0.6, 0.3]),
            crate::scan::Step::Site(2),
        ]);
        let trace = forward_coupling_bounds(&scan, &WeightVector::ones(3), &c).unwrap();
        assert_eq!(trace.bound_at(0), vec![1.0; 3]);
        let rows: Vec<_> = trace.csv_rows().collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[1].1, -1);
        assert_eq!(rows[4].1, 2);
    }

    #[test]
    fn dimension_errors() {
        let c = two_by_two();
        assert!(matches!(
            dobrushin_variation(&Scan::Systematic(3), &WeightVector::ones(3), &c),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(
            dobrushin_variation(&Scan::deterministic([4]), &WeightVector::ones(2), &c).is_err()
        );
    }

    #[test]
    fn curve_matches_pointwise_evaluation() {
        let c = two_by_two();
        let d = WeightVector::ones(2);
        let curve = variation_curve(&Scan::Uniform(10), &d, &c, &[0, 3, 10]).unwrap();
        for (&t, v) in [0, 3, 10].iter().zip(curve) {
            assert_eq!(v, dobrushin_variation(&Scan::Uniform(t), &d, &c).unwrap());
        }
    }
}
