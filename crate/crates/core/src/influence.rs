//! Entrywise upper bounds on the Dobrushin influence matrix.
//!
//! `C_ij` is the largest total-variation change in the conditional law of
//! `X_i` when only `X_j` changes. The bounds here are closed-form in the model
//! parameters and are zero outside the Markov-blanket pattern.

use crate::error::{Error, Result};
use crate::model::{
    BinaryPairwiseMrf, DiscreteMrf, GeneralPairwiseMrf, HigherOrderBinaryMrf, Model,
};

/// Exponent magnitude above which the closed forms switch to log space.
const LOG_SPACE_THRESHOLD: f64 = 30.0;

/// Relative tolerance of the spectral-norm power iteration.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Iteration cap of the spectral-norm power iteration.
pub const NORM_MAX_ITERATIONS: usize = 100_000;

/// Sparse nonnegative `p × p` matrix with zero diagonal, stored both by row
/// and by column.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    p: usize,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    provenance: String,
}

impl InfluenceMatrix {
    pub fn zeros(p: usize, provenance: impl Into<String>) -> Self {
        Self {
            p,
            rows: vec![Vec::new(); p],
            cols: vec![Vec::new(); p],
            provenance: provenance.into(),
        }
    }

    /// Builds from `(i, j, value)` triples. Exact zeros are dropped.
    pub fn from_entries(
        p: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
        for (i, j, value) in entries {
            if i >= p || j >= p {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    len: p,
                });
            }
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidInfluence(format!(
                    "entry ({i},{j}) = {value} is not a finite nonnegative number"
                )));
            }
            if value == 0.0 {
                continue;
            }
            if i == j {
                return Err(Error::InvalidInfluence(format!(
                    "diagonal entry ({i},{i}) must be zero"
                )));
            }
            rows[i].push((j, value));
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInfluence(format!(
                    "duplicate entry ({i},{})",
                    w[0].0
                )));
            }
            for &(j, v) in row.iter() {
                cols[j].push((i, v));
            }
        }
        Ok(Self {
            p,
            rows,
            cols,
            provenance: provenance.into(),
        })
    }

    pub fn from_dense(matrix: &[Vec<f64>], provenance: impl Into<String>) -> Result<Self> {
        let p = matrix.len();
        if let Some(row) = matrix.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: row.len(),
            });
        }
        let entries = matrix
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        Self::from_entries(p, entries, provenance)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    /// Nonzero entries `(j, C̄_ij)` of row `i`, sorted by `j`.
    #[inline]
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Nonzero entries `(i, C̄_ij)` of column `j`, sorted by `i`.
    #[inline]
    pub fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn max_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `((I − C̄) b)_i`.
    #[inline]
    pub fn residual_at(&self, i: usize, b: &[f64]) -> f64 {
        self.rows[i]
            .iter()
            .fold(b[i], |acc, &(j, c)| acc - c * b[j])
    }

    /// `C̄ v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * v[j]).sum())
            .collect()
    }

    /// `C̄ᵀ v`.
    pub fn mul_transpose_vec(&self, v: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, c)| c * v[i]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.p]; self.p];
        for (i, j, v) in self.entries() {
            dense[i][j] = v;
        }
        dense
    }

    /// True when every entry is at most the matching entry of `other`.
    pub fn dominated_by(&self, other: &InfluenceMatrix, slack: f64) -> bool {
        self.p == other.p && self.entries().all(|(i, j, v)| v <= other.get(i, j) + slack)
    }
}

#[inline]
fn ln_sinh(x: f64) -> f64 {
    // x > 0
    x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
}

#[inline]
fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

#[inline]
fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log of the cutoff `b*`: the point of `[−2s − 2θ_i, 2s − 2θ_i]` closest to 0.
#[inline]
pub fn log_cutoff(others_abs_sum: f64, unary: f64) -> f64 {
    let low = -2.0 * others_abs_sum - 2.0 * unary;
    let high = 2.0 * others_abs_sum - 2.0 * unary;
    low.max(high.min(0.0))
}

/// Binary pairwise bound for one entry:
/// `|e^{2θ} − e^{−2θ}| b* / ((1 + b* e^{2θ})(1 + b* e^{−2θ}))`,
/// evaluated as `sinh|2θ| / (cosh β + cosh 2θ)` with `β = ln b*`.
pub fn binary_pairwise_entry(theta_ij: f64, others_abs_sum: f64, unary_i: f64) -> f64 {
    let a = 2.0 * theta_ij.abs();
    if a == 0.0 {
        return 0.0;
    }
    let beta = log_cutoff(others_abs_sum, unary_i);
    if a.max(beta.abs()) <= LOG_SPACE_THRESHOLD {
        a.sinh() / (beta.cosh() + a.cosh())
    } else {
        (ln_sinh(a) - ln_add_exp(ln_cosh(beta), ln_cosh(a))).exp()
    }
}

/// Higher-order binary bound for one entry:
/// `|e^{2A} − e^{−2A}| b* / (1 + b*)² = sinh 2A / (1 + cosh β)`, capped at 1.
pub fn higher_order_entry(shared_abs_sum: f64, others_abs_sum: f64, unary_i: f64) -> f64 {
    let a = 2.0 * shared_abs_sum;
    if a == 0.0 {
        return 0.0;
    }
    let beta = log_cutoff(others_abs_sum, unary_i);
    let value = if a.max(beta.abs()) <= LOG_SPACE_THRESHOLD {
        a.sinh() / (1.0 + beta.cosh())
    } else {
        (ln_sinh(a) - ln_add_exp(0.0, ln_cosh(beta))).exp()
    };
    value.min(1.0)
}

/// Influence bound for binary pairwise (Ising-type) models.
pub fn binary_pairwise_bound(model: &BinaryPairwiseMrf) -> InfluenceMatrix {
    let p = model.num_vars();
    let mut entries = Vec::new();
    for i in 0..p {
        let nbrs = model.neighbors(i);
        for &(j, theta) in nbrs {
            let others: f64 = nbrs
                .iter()
                .filter(|&&(k, _)| k != j)
                .map(|&(_, t)| t.abs())
                .sum();
            entries.push((i, j, binary_pairwise_entry(theta, others, model.unary()[i])));
        }
    }
    InfluenceMatrix::from_entries(p, entries, "binary_pairwise_bound")
        .expect("closed-form entries are finite and nonnegative")
}

/// Influence bound for pairwise models over finite domains, maximizing over all
/// value pairs by enumeration:
/// `max_{x_j,y_j} |2σ(½ max_{a,b} [(θ_{a x_j} − θ_{a y_j}) − (θ_{b x_j} − θ_{b y_j})]) − 1|`.
pub fn general_pairwise_bound(model: &GeneralPairwiseMrf) -> InfluenceMatrix {
    let p = model.num_vars();
    let mut entries = Vec::new();
    for i in 0..p {
        for (j, table) in model.oriented_tables(i) {
            let (own, other) = (table.own_size(), table.other_size());
            let mut best = 0.0f64;
            for x in 0..other {
                for y in (x + 1)..other {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for a in 0..own {
                        let diff = table.get(a, x) - table.get(a, y);
                        lo = lo.min(diff);
                        hi = hi.max(diff);
                    }
                    // |2σ(r/2) − 1| = tanh(r/4)
                    best = best.max(((hi - lo) / 4.0).tanh());
                }
            }
            entries.push((i, j, best));
        }
    }
    InfluenceMatrix::from_entries(p, entries, "general_pairwise_bound")
        .expect("closed-form entries are finite and nonnegative")
}

/// Influence bound for binary models with higher-order factors.
pub fn higher_order_bound(model: &HigherOrderBinaryMrf) -> InfluenceMatrix {
    let p = model.num_vars();
    let factors = model.factors();
    let mut entries = Vec::new();
    for i in 0..p {
        let incident = model.incident_factors(i);
        for &j in model.blanket(i) {
            let (mut shared, mut others) = (0.0, 0.0);
            for &f in incident {
                let (members, theta) = &factors[f];
                if members.binary_search(&j).is_ok() {
                    shared += theta.abs();
                } else {
                    others += theta.abs();
                }
            }
            entries.push((i, j, higher_order_entry(shared, others, model.unary()[i])));
        }
    }
    InfluenceMatrix::from_entries(p, entries, "higher_order_bound")
        .expect("closed-form entries are finite and nonnegative")
}

/// The family-appropriate bound for any model.
pub fn influence_bound(model: &Model) -> InfluenceMatrix {
    match model {
        Model::Binary(m) => binary_pairwise_bound(m),
        Model::General(m) => general_pairwise_bound(m),
        Model::HigherOrder(m) => higher_order_bound(m),
    }
}

/// Multiplies every entry by `factor ≥ 1`, clipping at 1.
pub fn scale_bound(bound: &InfluenceMatrix, factor: f64) -> Result<InfluenceMatrix> {
    if !(factor >= 1.0 && factor.is_finite()) {
        return Err(Error::ScaleBelowOne(factor));
    }
    let entries = bound
        .entries()
        .map(|(i, j, v)| (i, j, (v * factor).min(1.0)));
    InfluenceMatrix::from_entries(
        bound.dim(),
        entries,
        format!("scaled({factor})*{}", bound.provenance()),
    )
}

/// Spectral norm `‖C̄‖₂` by power iteration on `C̄ᵀC̄`.
pub fn total_influence_norm(bound: &InfluenceMatrix) -> Result<f64> {
    let p = bound.dim();
    if p == 0 || bound.nnz() == 0 {
        return Ok(0.0);
    }
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut previous = f64::NAN;
    let mut estimate = 0.0;
    for _ in 0..NORM_MAX_ITERATIONS {
        let u = bound.mul_vec(&v);
        let w = bound.mul_transpose_vec(&u);
        estimate = u.iter().map(|x| x * x).sum::<f64>();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if (estimate - previous).abs() <= NORM_TOLERANCE * estimate {
            return Ok(estimate.sqrt());
        }
        previous = estimate;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::NoConvergence {
        iterations: NORM_MAX_ITERATIONS,
        last: estimate.sqrt(),
    })
}

/// Spectral norm and whether it certifies the Dobrushin regime `‖C̄‖ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErgodicityVerdict {
    pub norm: f64,
    pub in_dobrushin_regime: bool,
}

pub fn ergodicity_check(bound: &InfluenceMatrix) -> ErgodicityVerdict {
    let norm = match total_influence_norm(bound) {
        Ok(n) => n,
        Err(Error::NoConvergence { last, .. }) => last,
        Err(_) => f64::NAN,
    };
    ErgodicityVerdict {
        norm,
        in_dobrushin_regime: norm < 1.0,
    }
}
