//! Brute-force ground truth for small models.
//!
//! States are indexed lexicographically with variable 0 as the most
//! significant digit: for domain sizes `n_0, …, n_{p−1}` the state `x` has index
//! `Σ_k x_k · Π_{l>k} n_l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::InfluenceMatrix;
use crate::model::DiscreteMrf;
use crate::scan::{Scan, StepRef, WeightVector};

/// Largest state space any oracle will enumerate.
pub const MAX_STATES: u128 = 1 << 20;

/// Largest number of candidate scans `exhaustive_best_scan` will try.
pub const MAX_CANDIDATES: u128 = 1 << 16;

/// Largest state space for which a dense transition matrix is built.
pub const MAX_KERNEL_STATES: usize = 1 << 12;

fn state_count(domains: &[usize]) -> u128 {
    domains
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
        .unwrap_or(u128::MAX)
}

fn guard(domains: &[usize]) -> Result<usize> {
    let states = state_count(domains);
    if states > MAX_STATES {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: MAX_STATES,
        });
    }
    Ok(states as usize)
}

/// Advances a mixed-radix counter, skipping the `fixed` positions. Returns
/// `false` once every assignment has been visited.
fn advance(state: &mut [usize], domains: &[usize], fixed: &[usize]) -> bool {
    for k in (0..state.len()).rev() {
        if fixed.contains(&k) {
            continue;
        }
        state[k] += 1;
        if state[k] < domains[k] {
            return true;
        }
        state[k] = 0;
    }
    false
}

/// Compensated summation.
fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Dense probability vector over a product state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    domains: Vec<usize>,
    probs: Vec<f64>,
}

impl ExactDistribution {
    /// Validates nonnegativity and normalization to 1e−12.
    pub fn new(domains: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let states = guard(&domains)?;
        if probs.len() != states {
            return Err(Error::DimensionMismatch {
                expected: states,
                found: probs.len(),
            });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidStart(
                "negative or non-finite probability".into(),
            ));
        }
        let total = kahan_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidStart(format!("probabilities sum to {total}")));
        }
        Ok(Self { domains, probs })
    }

    pub fn point_mass(domains: Vec<usize>, state: &[usize]) -> Result<Self> {
        let states = guard(&domains)?;
        if state.len() != domains.len() || state.iter().zip(&domains).any(|(v, n)| v >= n) {
            return Err(Error::InvalidStart(format!(
                "{state:?} is not a state of {domains:?}"
            )));
        }
        let mut probs = vec![0.0; states];
        let index = index_in(&domains, state);
        probs[index] = 1.0;
        Ok(Self { domains, probs })
    }

    pub fn uniform(domains: Vec<usize>) -> Result<Self> {
        let states = guard(&domains)?;
        Ok(Self {
            domains,
            probs: vec![1.0 / states as f64; states],
        })
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn index_of(&self, state: &[usize]) -> usize {
        index_in(&self.domains, state)
    }

    pub fn state_of(&self, mut index: usize) -> Vec<usize> {
        let mut state = vec![0; self.domains.len()];
        for k in (0..self.domains.len()).rev() {
            state[k] = index % self.domains[k];
            index /= self.domains[k];
        }
        state
    }

    /// Marginal over the listed coordinates, indexed lexicographically in the
    /// order given.
    pub fn marginal(&self, set: &[usize]) -> Result<Vec<f64>> {
        for &k in set {
            if k >= self.domains.len() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    len: self.domains.len(),
                });
            }
        }
        let sub: Vec<usize> = set.iter().map(|&k| self.domains[k]).collect();
        let mut out = vec![0.0; sub.iter().product()];
        let mut state = vec![0; self.domains.len()];
        for &p in &self.probs {
            let proj: Vec<usize> = set.iter().map(|&k| state[k]).collect();
            out[index_in(&sub, &proj)] += p;
            advance(&mut state, &self.domains, &[]);
        }
        Ok(out)
    }

    /// Expectation of `f` over the distribution.
    pub fn expectation(&self, mut f: impl FnMut(&[usize]) -> f64) -> f64 {
        let mut state = vec![0; self.domains.len()];
        let mut terms = Vec::with_capacity(self.probs.len());
        for &p in &self.probs {
            terms.push(p * f(&state));
            advance(&mut state, &self.domains, &[]);
        }
        kahan_sum(terms)
    }

    /// Draws a state index by inversion of the cumulative distribution.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

fn index_in(domains: &[usize], state: &[usize]) -> usize {
    state
        .iter()
        .zip(domains)
        .fold(0, |acc, (&v, &n)| acc * n + v)
}

/// Exact joint distribution of a model.
pub fn enumerate_distribution(model: &dyn DiscreteMrf) -> Result<ExactDistribution> {
    let domains = model.domains();
    let states = guard(&domains)?;
    let mut logs = Vec::with_capacity(states);
    let mut state = vec![0; domains.len()];
    for _ in 0..states {
        logs.push(model.log_weight(&state));
        advance(&mut state, &domains, &[]);
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z = kahan_sum(weights.iter().copied());
    Ok(ExactDistribution {
        domains,
        probs: weights.iter().map(|w| w / z).collect(),
    })
}

fn tv_of(a: &[f64], b: &[f64]) -> f64 {
    0.5 * kahan_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

/// Exact Dobrushin influence: for every ordered pair (i, j), the largest TV
/// distance between conditionals of `X_i` under two states that differ only
/// at `j`, maximized over all such pairs.
pub fn exact_influence(model: &dyn DiscreteMrf) -> Result<InfluenceMatrix> {
    let p = model.num_vars();
    let domains = model.domains();
    let mut entries = Vec::new();
    for i in 0..p {
        let mut others = domains.clone();
        others[i] = 1;
        guard(&others)?;
        for j in (0..p).filter(|&j| j != i) {
            let value = pair_influence(model, &domains, i, j);
            if value > 0.0 {
                entries.push((i, j, value));
            }
        }
    }
    InfluenceMatrix::from_entries(p, entries, "exact")
}

fn pair_influence(model: &dyn DiscreteMrf, domains: &[usize], i: usize, j: usize) -> f64 {
    let ni = domains[i];
    let nj = domains[j];
    let mut state = vec![0; domains.len()];
    let mut conds = vec![vec![0.0; ni]; nj];
    let mut best: f64 = 0.0;
    loop {
        for (v, cond) in conds.iter_mut().enumerate() {
            state[j] = v;
            model.conditional_probs(i, &state, cond);
        }
        for x in 0..nj {
            for y in x + 1..nj {
                best = best.max(tv_of(&conds[x], &conds[y]));
            }
        }
        state[j] = 0;
        if !advance(&mut state, domains, &[i, j]) {
            break;
        }
    }
    best
}

/// Pushes `mu` through one Gibbs update of coordinate `i`, adding `weight`
/// times the result into `out`.
fn apply_site(
    model: &dyn DiscreteMrf,
    mu: &[f64],
    domains: &[usize],
    i: usize,
    weight: f64,
    out: &mut [f64],
) {
    let n = domains[i];
    let stride: usize = domains[i + 1..].iter().product();
    let mut state = vec![0; domains.len()];
    let mut cond = vec![0.0; n];
    loop {
        let base = index_in(domains, &state);
        let mass = kahan_sum((0..n).map(|a| mu[base + a * stride]));
        if mass > 0.0 {
            model.conditional_probs(i, &state, &mut cond);
            for (b, &c) in cond.iter().enumerate() {
                out[base + b * stride] += weight * mass * c;
            }
        }
        if !advance(&mut state, domains, &[i]) {
            break;
        }
    }
}

/// Applies one step `q` of a scan to a distribution.
fn apply_step(
    model: &dyn DiscreteMrf,
    mu: &[f64],
    domains: &[usize],
    step: StepRef<'_>,
) -> Vec<f64> {
    let p = domains.len();
    let mut out = vec![0.0; mu.len()];
    for i in 0..p {
        let q = step.prob(i, p);
        if q > 0.0 {
            apply_site(model, mu, domains, i, q, &mut out);
        }
    }
    out
}

/// Exact law `π_T` of the chain after running `scan` from `start`.
pub fn exact_step_distribution(
    model: &dyn DiscreteMrf,
    scan: &Scan,
    start: &ExactDistribution,
) -> Result<ExactDistribution> {
    let domains = model.domains();
    if domains != start.domains {
        return Err(Error::ShapeMismatch(format!(
            "start distribution over {:?}, model over {domains:?}",
            start.domains
        )));
    }
    scan.validate(domains.len())?;
    let mut mu = start.probs.clone();
    for t in 0..scan.len() {
        mu = apply_step(model, &mu, &domains, scan.step(t, domains.len()));
    }
    Ok(ExactDistribution { domains, probs: mu })
}

/// Dense transition matrix `P[x][y]` of one step `q`.
pub fn transition_matrix(model: &dyn DiscreteMrf, step: StepRef<'_>) -> Result<Vec<Vec<f64>>> {
    let domains = model.domains();
    let states = guard(&domains)?;
    if states > MAX_KERNEL_STATES {
        return Err(Error::StateSpaceTooLarge {
            states: states as u128,
            limit: MAX_KERNEL_STATES as u128,
        });
    }
    Ok((0..states)
        .map(|x| {
            let mut e = vec![0.0; states];
            e[x] = 1.0;
            apply_step(model, &e, &domains, step)
        })
        .collect())
}

fn check_same_space(mu: &ExactDistribution, nu: &ExactDistribution) -> Result<()> {
    if mu.domains != nu.domains {
        return Err(Error::ShapeMismatch(format!(
            "distributions over {:?} and {:?}",
            mu.domains, nu.domains
        )));
    }
    Ok(())
}

/// Total variation distance, half the L1 distance.
pub fn exact_tv(mu: &ExactDistribution, nu: &ExactDistribution) -> Result<f64> {
    check_same_space(mu, nu)?;
    Ok(tv_of(&mu.probs, &nu.probs))
}

/// Total variation between the marginals on `set`.
pub fn exact_marginal_tv(
    mu: &ExactDistribution,
    nu: &ExactDistribution,
    set: &[usize],
) -> Result<f64> {
    check_same_space(mu, nu)?;
    Ok(tv_of(&mu.marginal(set)?, &nu.marginal(set)?))
}

/// `dᵀ B(q_T) ⋯ B(q_1) 1` by dense matrix-vector products, with
/// `B(q) = I − diag(q)(I − C̄)`.
pub fn dense_variation(steps: &[Vec<f64>], d: &[f64], bound: &[Vec<f64>]) -> f64 {
    let p = d.len();
    let mut b = vec![1.0; p];
    for q in steps {
        let next: Vec<f64> = (0..p)
            .map(|i| {
                let cb: f64 = (0..p).map(|j| bound[i][j] * b[j]).sum();
                b[i] - q[i] * (b[i] - cb)
            })
            .collect();
        b = next;
    }
    d.iter().zip(&b).map(|(x, y)| x * y).sum()
}

/// Best deterministic scan found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub indices: Vec<usize>,
    pub dv: f64,
}

impl ExhaustiveResult {
    pub fn scan(&self) -> Scan {
        Scan::deterministic(self.indices.iter().copied())
    }
}

/// Minimum Dobrushin variation over all `p^T` deterministic scans of length
/// `T`; the lexicographically first minimizer wins ties.
pub fn exhaustive_best_scan(
    bound: &InfluenceMatrix,
    d: &WeightVector,
    length: usize,
) -> Result<ExhaustiveResult> {
    let p = bound.dim();
    if d.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: d.dim(),
        });
    }
    let candidates = (p as u128).checked_pow(length as u32).unwrap_or(u128::MAX);
    if candidates > MAX_CANDIDATES {
        return Err(Error::BudgetExceeded {
            candidates,
            limit: MAX_CANDIDATES,
        });
    }
    let dense = bound.to_dense();
    let unit = |i: usize| {
        let mut e = vec![0.0; p];
        e[i] = 1.0;
        e
    };
    let mut indices = vec![0; length];
    let domains = vec![p; length];
    let mut best: Option<ExhaustiveResult> = None;
    loop {
        let steps: Vec<Vec<f64>> = indices.iter().map(|&i| unit(i)).collect();
        let dv = dense_variation(&steps, d.as_slice(), &dense);
        if best.as_ref().is_none_or(|b| dv < b.dv) {
            best = Some(ExhaustiveResult {
                indices: indices.clone(),
                dv,
            });
        }
        if !advance(&mut indices, &domains, &[]) {
            break;
        }
    }
    Ok(best.expect("at least one candidate"))
}
