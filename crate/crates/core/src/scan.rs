//! Scans (sequences of variable-selection distributions) and variable weights.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on the total mass of an explicit selection distribution.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// One selection distribution `q_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// Point mass on one variable.
    Site(usize),
    /// `q_t = (1/p, …, 1/p)`.
    Uniform,
    /// Arbitrary probability vector over the `p` variables.
    Dist(Vec<f64>),
}

/// Borrowed view of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRef<'a> {
    Site(usize),
    Uniform,
    Dist(&'a [f64]),
}

impl StepRef<'_> {
    /// Probability `q_{t,i}` for a model with `p` variables.
    pub fn prob(&self, i: usize, p: usize) -> f64 {
        match *self {
            StepRef::Site(k) => f64::from(u8::from(k == i)),
            StepRef::Uniform => 1.0 / p as f64,
            StepRef::Dist(q) => q[i],
        }
    }

    pub fn to_owned(self) -> Step {
        match self {
            StepRef::Site(k) => Step::Site(k),
            StepRef::Uniform => Step::Uniform,
            StepRef::Dist(q) => Step::Dist(q.to_vec()),
        }
    }

    pub fn to_dense(self, p: usize) -> Vec<f64> {
        (0..p).map(|i| self.prob(i, p)).collect()
    }
}

impl Step {
    pub fn as_ref(&self) -> StepRef<'_> {
        match self {
            Step::Site(k) => StepRef::Site(*k),
            Step::Uniform => StepRef::Uniform,
            Step::Dist(q) => StepRef::Dist(q),
        }
    }
}

/// Scan family, as named in scan files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Deterministic,
    Systematic,
    Uniform,
    Explicit,
}

impl ScanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanKind::Deterministic => "deterministic",
            ScanKind::Systematic => "systematic",
            ScanKind::Uniform => "uniform",
            ScanKind::Explicit => "explicit",
        }
    }
}

impl fmt::Display for ScanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A length-`T` scan `q_1, …, q_T`.
///
/// `Systematic(T)` visits variables in index order, `q_t = e_{t mod p}` for the
/// zero-based step index `t`. `Uniform(T)` selects uniformly at random at every
/// step. `Steps` holds any explicit sequence, including deterministic scans.
#[derive(Debug, Clone, PartialEq)]
pub enum Scan {
    Systematic(usize),
    Uniform(usize),
    Steps(Vec<Step>),
}

impl Scan {
    pub fn deterministic(indices: impl IntoIterator<Item = usize>) -> Self {
        Scan::Steps(indices.into_iter().map(Step::Site).collect())
    }

    /// Scan of explicit probability vectors; each must lie on the simplex.
    pub fn explicit(vectors: Vec<Vec<f64>>) -> Result<Self> {
        for (t, q) in vectors.iter().enumerate() {
            check_simplex(t, q)?;
        }
        Ok(Scan::Steps(vectors.into_iter().map(Step::Dist).collect()))
    }

    pub fn len(&self) -> usize {
        match self {
            Scan::Systematic(t) | Scan::Uniform(t) => *t,
            Scan::Steps(steps) => steps.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Step `t` (zero-based) for a model with `p` variables.
    #[inline]
    pub fn step(&self, t: usize, p: usize) -> StepRef<'_> {
        match self {
            Scan::Systematic(_) => StepRef::Site(t % p),
            Scan::Uniform(_) => StepRef::Uniform,
            Scan::Steps(steps) => steps[t].as_ref(),
        }
    }

    pub fn kind(&self) -> ScanKind {
        match self {
            Scan::Systematic(_) => ScanKind::Systematic,
            Scan::Uniform(_) => ScanKind::Uniform,
            Scan::Steps(steps) if steps.iter().all(|s| matches!(s, Step::Site(_))) => {
                ScanKind::Deterministic
            }
            Scan::Steps(_) => ScanKind::Explicit,
        }
    }

    /// Checks indices and distributions against a model with `p` variables.
    pub fn validate(&self, p: usize) -> Result<()> {
        if p == 0 && !self.is_empty() {
            return Err(Error::InvalidScan(
                "nonempty scan over zero variables".into(),
            ));
        }
        if let Scan::Steps(steps) = self {
            for (t, step) in steps.iter().enumerate() {
                match step {
                    Step::Site(i) if *i >= p => {
                        return Err(Error::InvalidScan(format!(
                            "step {t} selects variable {i} of only {p}"
                        )))
                    }
                    Step::Dist(q) if q.len() != p => {
                        return Err(Error::DimensionMismatch {
                            expected: p,
                            found: q.len(),
                        })
                    }
                    Step::Dist(q) => check_simplex(t, q)?,
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// The first `len` steps (all of them if `len` exceeds the length).
    pub fn prefix(&self, len: usize) -> Scan {
        let len = len.min(self.len());
        match self {
            Scan::Systematic(_) => Scan::Systematic(len),
            Scan::Uniform(_) => Scan::Uniform(len),
            Scan::Steps(steps) => Scan::Steps(steps[..len].to_vec()),
        }
    }

    /// Variable indices when every step is a point mass.
    pub fn site_indices(&self, p: usize) -> Option<Vec<usize>> {
        (0..self.len())
            .map(|t| match self.step(t, p) {
                StepRef::Site(i) => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn to_steps(&self, p: usize) -> Vec<Step> {
        (0..self.len())
            .map(|t| self.step(t, p).to_owned())
            .collect()
    }
}

fn check_simplex(t: usize, q: &[f64]) -> Result<()> {
    if let Some(v) = q.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidScan(format!(
            "step {t} has invalid probability {v}"
        )));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::InvalidScan(format!(
            "step {t} sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Nonnegative per-variable weights `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeWeight { index, value });
        }
        Ok(Self(weights))
    }

    /// `d = 1`: full total variation.
    pub fn ones(p: usize) -> Self {
        Self(vec![1.0; p])
    }

    /// `d = e_i`: marginal total variation of one variable.
    pub fn unit(p: usize, i: usize) -> Self {
        Self::indicator(p, &[i])
    }

    /// 0/1 weights marking a marginal set.
    pub fn indicator(p: usize, set: &[usize]) -> Self {
        let mut d = vec![0.0; p];
        for &i in set {
            d[i] = 1.0;
        }
        Self(d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn systematic_visits_in_order() {
        let scan = Scan::Systematic(7);
        let sites: Vec<_> = (0..7).map(|t| scan.step(t, 3)).collect();
        assert_eq!(sites[0], StepRef::Site(0));
        assert_eq!(sites[4], StepRef::Site(1));
        assert_eq!(scan.site_indices(3).unwrap(), vec![0, 1, 2, 0, 1, 2, 0]);
        assert_eq!(scan.kind(), ScanKind::Systematic);
    }

    #[test]
    fn explicit_vectors_are_validated() {
        assert!(Scan::explicit(vec![vec![0.5, 0.5]]).is_ok());
        assert!(Scan::explicit(vec![vec![0.5, 0.6]]).is_err());
        assert!(Scan::explicit(vec![vec![1.5, -0.5]]).is_err());
        let scan = Scan::explicit(vec![vec![0.25, 0.75]]).unwrap();
        assert!(matches!(
            scan.validate(3),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(scan.kind(), ScanKind::Explicit);
    }

    #[test]
    fn deterministic_indices_are_range_checked() {
        let scan = Scan::deterministic([0, 2]);
        assert!(scan.validate(3).is_ok());
        assert!(scan.validate(2).is_err());
        assert_eq!(scan.kind(), ScanKind::Deterministic);
    }

    #[test]
    fn prefixes() {
        assert_eq!(Scan::Systematic(10).prefix(4), Scan::Systematic(4));
        assert_eq!(
            Scan::deterministic([3, 1, 2]).prefix(2),
            Scan::deterministic([3, 1])
        );
        assert_eq!(Scan::Uniform(2).prefix(9).len(), 2);
    }

    #[test]
    fn weights() {
        assert!(matches!(
            WeightVector::new(vec![1.0, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        let d = WeightVector::indicator(4, &[1, 3]);
        assert_eq!(d.as_slice(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(d.dot(&[1.0, 2.0, 3.0, 4.0]), 6.0);
    }
}
