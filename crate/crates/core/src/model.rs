//! Discrete Markov random fields: binary pairwise (Ising), general pairwise
//! over finite domains, and binary models with higher-order factors.
//!
//! Every variable takes a value index in `0..domain_size(i)`. Binary models map
//! index 0 to the spin −1 and index 1 to +1, so the lexicographic state order of
//! a two-spin model is (−−, −+, +−, ++).

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin value (−1 or +1) of a binary value index.
#[inline]
pub fn spin(value: usize) -> f64 {
    if value == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Value index of a spin.
#[inline]
pub fn spin_index(spin: f64) -> usize {
    usize::from(spin > 0.0)
}

/// Common interface used by the sampler and the exact oracles.
pub trait DiscreteMrf: Send + Sync {
    fn num_vars(&self) -> usize;

    fn domain_size(&self, i: usize) -> usize;

    /// Variables sharing a nonzero potential with `i`.
    fn blanket(&self, i: usize) -> &[usize];

    /// Unnormalized log-probabilities of each value of variable `i` given the
    /// other coordinates of `state`. The entry `state[i]` is ignored.
    fn conditional_log_weights(&self, i: usize, state: &[usize], out: &mut [f64]);

    /// Unnormalized log-density of a full assignment.
    fn log_weight(&self, state: &[usize]) -> f64;

    /// Normalized conditional distribution of variable `i`.
    fn conditional_probs(&self, i: usize, state: &[usize], out: &mut [f64]) {
        self.conditional_log_weights(i, state, out);
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in out.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in out.iter_mut() {
            *v /= total;
        }
    }

    /// Largest Markov blanket size `m`.
    fn max_blanket(&self) -> usize {
        (0..self.num_vars())
            .map(|i| self.blanket(i).len())
            .max()
            .unwrap_or(0)
    }

    fn domains(&self) -> Vec<usize> {
        (0..self.num_vars()).map(|i| self.domain_size(i)).collect()
    }

    /// Checks that `state` assigns an in-domain value to every variable.
    fn check_state(&self, state: &[usize]) -> Result<()> {
        if state.len() != self.num_vars() {
            return Err(Error::InvalidStart(format!(
                "state has {} entries, model has {} variables",
                state.len(),
                self.num_vars()
            )));
        }
        for (i, &v) in state.iter().enumerate() {
            if v >= self.domain_size(i) {
                return Err(Error::InvalidStart(format!(
                    "value {v} of variable {i} outside domain of size {}",
                    self.domain_size(i)
                )));
            }
        }
        Ok(())
    }
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, len })
    }
}

/// Ising-type model `π(x) ∝ exp(Σ_{edges} θ_ij x_i x_j + Σ_i θ_i x_i)` over spins.
///
/// Each undirected edge is stored once under its lower index and mirrored into
/// per-variable neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPairwiseMrf {
    edges: Vec<(usize, usize, f64)>,
    neighbors: Vec<Vec<(usize, f64)>>,
    blankets: Vec<Vec<usize>>,
    unary: Vec<f64>,
}

impl BinaryPairwiseMrf {
    /// Builds a model with `unary.len()` variables. Each pair may appear once,
    /// in either orientation.
    pub fn new(pairs: &[(usize, usize, f64)], unary: Vec<f64>) -> Result<Self> {
        let p = unary.len();
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        for &(i, j, theta) in pairs {
            check_index(i, p)?;
            check_index(j, p)?;
            if i == j {
                return Err(Error::SelfPair(i));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(i, j));
            }
            edges.push((key.0, key.1, theta));
        }
        edges.sort_by_key(|&(i, j, _)| (i, j));

        let mut neighbors = vec![Vec::new(); p];
        for &(i, j, theta) in &edges {
            neighbors[i].push((j, theta));
            neighbors[j].push((i, theta));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(j, _)| j);
        }
        let blankets = neighbors
            .iter()
            .map(|list| {
                list.iter()
                    .filter(|(_, t)| *t != 0.0)
                    .map(|&(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Self {
            edges,
            neighbors,
            blankets,
            unary,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges `(i, j, θ_ij)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn unary(&self) -> &[f64] {
        &self.unary
    }

    /// `θ_ij`, zero for non-edges.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        self.neighbors[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.neighbors[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Local field `Σ_k θ_ik x_k + θ_i` acting on spin `i`.
    #[inline]
    pub fn local_field(&self, i: usize, state: &[usize]) -> f64 {
        self.neighbors[i]
            .iter()
            .fold(self.unary[i], |acc, &(k, theta)| {
                acc + theta * spin(state[k])
            })
    }

    /// `π(X_i = +1 | X_{-i})`.
    pub fn conditional_plus(&self, i: usize, state: &[usize]) -> Result<f64> {
        check_index(i, self.num_vars())?;
        Ok(logistic(2.0 * self.local_field(i, state)))
    }

    /// Same model with every unary weight negated.
    pub fn with_flipped_unary(&self) -> Self {
        let mut out = self.clone();
        for u in &mut out.unary {
            *u = -*u;
        }
        out
    }

    /// Returns a copy with new parameters on the same edge set.
    pub fn with_parameters(&self, pair_weights: &[f64], unary: &[f64]) -> Result<Self> {
        if pair_weights.len() != self.edges.len() || unary.len() != self.unary.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} edge and {} unary weights",
                self.edges.len(),
                self.unary.len()
            )));
        }
        let pairs: Vec<_> = self
            .edges
            .iter()
            .zip(pair_weights)
            .map(|(&(i, j, _), &t)| (i, j, t))
            .collect();
        Self::new(&pairs, unary.to_vec())
    }
}

/// Logistic function `1 / (1 + e^{-s})`.
#[inline]
pub fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

impl DiscreteMrf for BinaryPairwiseMrf {
    fn num_vars(&self) -> usize {
        self.unary.len()
    }

    fn domain_size(&self, _i: usize) -> usize {
        2
    }

    fn blanket(&self, i: usize) -> &[usize] {
        &self.blankets[i]
    }

    fn conditional_log_weights(&self, i: usize, state: &[usize], out: &mut [f64]) {
        let h = self.local_field(i, state);
        out[0] = -h;
        out[1] = h;
    }

    fn log_weight(&self, state: &[usize]) -> f64 {
        let pair: f64 = self
            .edges
            .iter()
            .map(|&(i, j, t)| t * spin(state[i]) * spin(state[j]))
            .sum();
        let single: f64 = self
            .unary
            .iter()
            .zip(state)
            .map(|(t, &v)| t * spin(v))
            .sum();
        pair + single
    }
}

/// Dense table `θ^{ij}_{ab}` with rows indexed by values of `i`, columns by values of `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PairTable {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 || rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch(
                "pair table must be a non-empty rectangle".into(),
            ));
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            values: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.cols + b]
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for b in 0..self.cols {
            for a in 0..self.rows {
                values.push(self.get(a, b));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Incidence record: the other endpoint, the table id, and whether this
/// variable indexes the table rows.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Incidence {
    other: usize,
    table: usize,
    is_row: bool,
}

/// Pairwise MRF over finite domains:
/// `π(x) ∝ exp(Σ_{edges} θ^{ij}_{x_i x_j} + Σ_i u_i(x_i))`, each edge counted once.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPairwiseMrf {
    domains: Vec<usize>,
    unary: Vec<Vec<f64>>,
    tables: Vec<(usize, usize, PairTable)>,
    incident: Vec<Vec<Incidence>>,
    blankets: Vec<Vec<usize>>,
}

impl GeneralPairwiseMrf {
    /// Builds from per-variable domain sizes and tables given as rows over the
    /// first variable's values. A table for `(j, i)` with `j > i` is stored
    /// transposed under `(i, j)`.
    pub fn new(domains: Vec<usize>, tables: Vec<(usize, usize, Vec<Vec<f64>>)>) -> Result<Self> {
        let p = domains.len();
        if let Some(i) = domains.iter().position(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!(
                "variable {i} has an empty domain"
            )));
        }
        let mut seen = HashSet::new();
        let mut canon = Vec::with_capacity(tables.len());
        for (i, j, rows) in tables {
            check_index(i, p)?;
            check_index(j, p)?;
            if i == j {
                return Err(Error::SelfPair(i));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::DuplicateEdge(i, j));
            }
            let table = PairTable::from_rows(&rows)?;
            if table.rows != domains[i] || table.cols != domains[j] {
                return Err(Error::ShapeMismatch(format!(
                    "table ({i},{j}) is {}x{}, domains are {}x{}",
                    table.rows, table.cols, domains[i], domains[j]
                )));
            }
            if i < j {
                canon.push((i, j, table));
            } else {
                canon.push((j, i, table.transpose()));
            }
        }
        canon.sort_by_key(|&(i, j, _)| (i, j));

        let mut incident = vec![Vec::new(); p];
        for (t, (i, j, _)) in canon.iter().enumerate() {
            incident[*i].push(Incidence {
                other: *j,
                table: t,
                is_row: true,
            });
            incident[*j].push(Incidence {
                other: *i,
                table: t,
                is_row: false,
            });
        }
        for list in &mut incident {
            list.sort_by_key(|inc| inc.other);
        }
        let blankets = incident
            .iter()
            .map(|list| {
                list.iter()
                    .filter(|inc| !canon[inc.table].2.is_zero())
                    .map(|inc| inc.other)
                    .collect()
            })
            .collect();
        let unary = domains.iter().map(|&d| vec![0.0; d]).collect();
        Ok(Self {
            domains,
            unary,
            tables: canon,
            incident,
            blankets,
        })
    }

    /// Attaches per-variable log-potentials `u_i(a)`.
    pub fn with_unary(mut self, unary: Vec<Vec<f64>>) -> Result<Self> {
        if unary.len() != self.domains.len()
            || unary.iter().zip(&self.domains).any(|(u, &d)| u.len() != d)
        {
            return Err(Error::ShapeMismatch(
                "unary tables must match the domains".into(),
            ));
        }
        self.unary = unary;
        Ok(self)
    }

    /// Potts smoothing `θ^{ij}_{ab} = strength · 1{a = b}` on every listed edge.
    pub fn potts(domains: Vec<usize>, edges: &[(usize, usize)], strength: f64) -> Result<Self> {
        let tables = edges
            .iter()
            .map(|&(i, j)| {
                let (di, dj) = (
                    *domains.get(i).ok_or(Error::IndexOutOfRange {
                        index: i,
                        len: domains.len(),
                    })?,
                    *domains.get(j).ok_or(Error::IndexOutOfRange {
                        index: j,
                        len: domains.len(),
                    })?,
                );
                let rows = (0..di)
                    .map(|a| {
                        (0..dj)
                            .map(|b| if a == b { strength } else { 0.0 })
                            .collect()
                    })
                    .collect();
                Ok((i, j, rows))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(domains, tables)
    }

    /// Canonical tables `(i, j, θ^{ij})` with `i < j`.
    pub fn tables(&self) -> impl Iterator<Item = (usize, usize, &PairTable)> {
        self.tables.iter().map(|(i, j, t)| (*i, *j, t))
    }

    pub fn unary(&self) -> &[Vec<f64>] {
        &self.unary
    }

    /// Neighbors of `i` with `θ^{ij}` oriented so rows index values of `i`.
    pub fn oriented_tables(&self, i: usize) -> impl Iterator<Item = (usize, OrientedTable<'_>)> {
        self.incident[i].iter().map(move |inc| {
            (
                inc.other,
                OrientedTable {
                    table: &self.tables[inc.table].2,
                    transposed: !inc.is_row,
                },
            )
        })
    }
}

/// Read-only view of `θ^{ij}` from variable `i`'s side.
#[derive(Debug, Clone, Copy)]
pub struct OrientedTable<'a> {
    table: &'a PairTable,
    transposed: bool,
}

impl OrientedTable<'_> {
    /// `θ^{ij}_{a b}` with `a` a value of `i` and `b` a value of `j`.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        if self.transposed {
            self.table.get(b, a)
        } else {
            self.table.get(a, b)
        }
    }

    pub fn own_size(&self) -> usize {
        if self.transposed {
            self.table.cols
        } else {
            self.table.rows
        }
    }

    pub fn other_size(&self) -> usize {
        if self.transposed {
            self.table.rows
        } else {
            self.table.cols
        }
    }
}

impl DiscreteMrf for GeneralPairwiseMrf {
    fn num_vars(&self) -> usize {
        self.domains.len()
    }

    fn domain_size(&self, i: usize) -> usize {
        self.domains[i]
    }

    fn blanket(&self, i: usize) -> &[usize] {
        &self.blankets[i]
    }

    fn conditional_log_weights(&self, i: usize, state: &[usize], out: &mut [f64]) {
        out.copy_from_slice(&self.unary[i]);
        for (j, table) in self.oriented_tables(i) {
            let xj = state[j];
            for (a, slot) in out.iter_mut().enumerate() {
                *slot += table.get(a, xj);
            }
        }
    }

    fn log_weight(&self, state: &[usize]) -> f64 {
        let pair: f64 = self
            .tables
            .iter()
            .map(|(i, j, t)| t.get(state[*i], state[*j]))
            .sum();
        let single: f64 = self.unary.iter().zip(state).map(|(u, &v)| u[v]).sum();
        pair + single
    }
}

/// Binary model `π(x) ∝ exp(Σ_S θ_S Π_{k∈S} x_k + Σ_i θ_i x_i)` with |S| ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderBinaryMrf {
    factors: Vec<(Vec<usize>, f64)>,
    unary: Vec<f64>,
    incident: Vec<Vec<usize>>,
    blankets: Vec<Vec<usize>>,
}

impl HigherOrderBinaryMrf {
    /// Repeated subsets are merged by summing their weights.
    pub fn new(factors: Vec<(Vec<usize>, f64)>, unary: Vec<f64>) -> Result<Self> {
        let p = unary.len();
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (mut members, theta) in factors {
            if members.len() < 2 {
                return Err(Error::InvalidFactor(format!(
                    "factor {members:?} has fewer than two members; singletons belong in the unary weights"
                )));
            }
            for &k in &members {
                check_index(k, p)?;
            }
            members.sort_unstable();
            if members.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidFactor(format!(
                    "factor {members:?} repeats a member"
                )));
            }
            *merged.entry(members).or_insert(0.0) += theta;
        }
        let factors: Vec<_> = merged.into_iter().collect();

        let mut incident = vec![Vec::new(); p];
        let mut blanket_sets = vec![std::collections::BTreeSet::new(); p];
        for (f, (members, theta)) in factors.iter().enumerate() {
            for &i in members {
                incident[i].push(f);
                if *theta != 0.0 {
                    blanket_sets[i].extend(members.iter().copied().filter(|&k| k != i));
                }
            }
        }
        let blankets = blanket_sets
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        Ok(Self {
            factors,
            unary,
            incident,
            blankets,
        })
    }

    /// Factors `(S, θ_S)` with sorted members, one per distinct subset.
    pub fn factors(&self) -> &[(Vec<usize>, f64)] {
        &self.factors
    }

    pub fn unary(&self) -> &[f64] {
        &self.unary
    }

    /// Ids of factors containing `i`.
    pub fn incident_factors(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    /// Field `Σ_{S∋i} θ_S Π_{k∈S, k≠i} x_k + θ_i` acting on spin `i`.
    pub fn local_field(&self, i: usize, state: &[usize]) -> f64 {
        self.incident[i].iter().fold(self.unary[i], |acc, &f| {
            let (members, theta) = &self.factors[f];
            let prod: f64 = members
                .iter()
                .filter(|&&k| k != i)
                .map(|&k| spin(state[k]))
                .product();
            acc + theta * prod
        })
    }
}

impl DiscreteMrf for HigherOrderBinaryMrf {
    fn num_vars(&self) -> usize {
        self.unary.len()
    }

    fn domain_size(&self, _i: usize) -> usize {
        2
    }

    fn blanket(&self, i: usize) -> &[usize] {
        &self.blankets[i]
    }

    fn conditional_log_weights(&self, i: usize, state: &[usize], out: &mut [f64]) {
        let h = self.local_field(i, state);
        out[0] = -h;
        out[1] = h;
    }

    fn log_weight(&self, state: &[usize]) -> f64 {
        let factors: f64 = self
            .factors
            .iter()
            .map(|(members, theta)| {
                theta * members.iter().map(|&k| spin(state[k])).product::<f64>()
            })
            .sum();
        let single: f64 = self
            .unary
            .iter()
            .zip(state)
            .map(|(t, &v)| t * spin(v))
            .sum();
        factors + single
    }
}

/// Any supported model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Binary(BinaryPairwiseMrf),
    General(GeneralPairwiseMrf),
    HigherOrder(HigherOrderBinaryMrf),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Binary(_) => "binary_pairwise",
            Model::General(_) => "general_pairwise",
            Model::HigherOrder(_) => "higher_order",
        }
    }

    fn inner(&self) -> &dyn DiscreteMrf {
        match self {
            Model::Binary(m) => m,
            Model::General(m) => m,
            Model::HigherOrder(m) => m,
        }
    }
}

impl From<BinaryPairwiseMrf> for Model {
    fn from(m: BinaryPairwiseMrf) -> Self {
        Model::Binary(m)
    }
}

impl From<GeneralPairwiseMrf> for Model {
    fn from(m: GeneralPairwiseMrf) -> Self {
        Model::General(m)
    }
}

impl From<HigherOrderBinaryMrf> for Model {
    fn from(m: HigherOrderBinaryMrf) -> Self {
        Model::HigherOrder(m)
    }
}

impl DiscreteMrf for Model {
    fn num_vars(&self) -> usize {
        self.inner().num_vars()
    }

    fn domain_size(&self, i: usize) -> usize {
        self.inner().domain_size(i)
    }

    fn blanket(&self, i: usize) -> &[usize] {
        self.inner().blanket(i)
    }

    fn conditional_log_weights(&self, i: usize, state: &[usize], out: &mut [f64]) {
        self.inner().conditional_log_weights(i, state, out)
    }

    fn log_weight(&self, state: &[usize]) -> f64 {
        self.inner().log_weight(state)
    }
}

/// Markov blanket of variable `i`, bounds-checked.
pub fn markov_blanket(model: &dyn DiscreteMrf, i: usize) -> Result<&[usize]> {
    check_index(i, model.num_vars())?;
    Ok(model.blanket(i))
}

/// Distribution of a per-edge or per-site parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    Constant(f64),
    Uniform {
        low: f64,
        high: f64,
    },
    /// Uniform over a finite set of values.
    Choice(Vec<f64>),
}

impl ParamSource {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            ParamSource::Constant(v) => *v,
            ParamSource::Uniform { low, high } => {
                if high > low {
                    rng.gen_range(*low..*high)
                } else {
                    *low
                }
            }
            ParamSource::Choice(values) => values[rng.gen_range(0..values.len())],
        }
    }
}

/// Coupling used for the 40×40 marginal-mixing lattice.
pub const MARGINAL_LATTICE_COUPLING: f64 = 1.0 / 3.915;

/// Two-dimensional grid Ising model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub toroidal: bool,
    pub coupling: ParamSource,
    pub unary: ParamSource,
}

impl LatticeSpec {
    /// Random-parameter lattice: `θ_ij ~ Uniform[0, 0.25]`, `θ_i` uniform on {0, 1}.
    pub fn random_ferromagnet(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            toroidal: false,
            coupling: ParamSource::Uniform {
                low: 0.0,
                high: 0.25,
            },
            unary: ParamSource::Choice(vec![0.0, 1.0]),
        }
    }

    /// Constant coupling, zero field.
    pub fn constant(rows: usize, cols: usize, toroidal: bool, coupling: f64) -> Self {
        Self {
            rows,
            cols,
            toroidal,
            coupling: ParamSource::Constant(coupling),
            unary: ParamSource::Constant(0.0),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn expected_edges(&self) -> usize {
        let (r, c) = (self.rows, self.cols);
        if self.toroidal {
            2 * r * c
        } else {
            2 * r * c - r - c
        }
    }

    /// Row-major site index.
    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.cols, site % self.cols)
    }

    /// Manhattan distance between sites, wrapping around on a torus.
    pub fn manhattan(&self, a: usize, b: usize) -> usize {
        let ((ra, ca), (rb, cb)) = (self.coords(a), self.coords(b));
        let (dr, dc) = (ra.abs_diff(rb), ca.abs_diff(cb));
        if self.toroidal {
            dr.min(self.rows - dr) + dc.min(self.cols - dc)
        } else {
            dr + dc
        }
    }

    /// Grid edges in generation order: for each site, right neighbor then down neighbor.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.expected_edges());
        for r in 0..self.rows {
            for c in 0..self.cols {
                let here = self.site(r, c);
                if c + 1 < self.cols || self.toroidal {
                    edges.push((here, self.site(r, (c + 1) % self.cols)));
                }
                if r + 1 < self.rows || self.toroidal {
                    edges.push((here, self.site((r + 1) % self.rows, c)));
                }
            }
        }
        edges
    }
}

/// Builds a grid Ising model; deterministic in `seed`.
///
/// Couplings are drawn edge by edge in [`LatticeSpec::edge_list`] order, then
/// unary weights site by site, from a ChaCha8 stream seeded with `seed`.
pub fn lattice_ising(spec: &LatticeSpec, seed: u64) -> Result<BinaryPairwiseMrf> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(Error::InvalidConfig(
            "lattice dimensions must be positive".into(),
        ));
    }
    if spec.toroidal && (spec.rows < 3 || spec.cols < 3) {
        return Err(Error::InvalidConfig(
            "toroidal lattices need at least 3 rows and 3 columns".into(),
        ));
    }
    spec.rows
        .checked_mul(spec.cols)
        .ok_or_else(|| Error::InvalidConfig("lattice size overflows".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<_> = spec
        .edge_list()
        .into_iter()
        .map(|(i, j)| (i, j, spec.coupling.draw(&mut rng)))
        .collect();
    let unary = (0..spec.num_sites())
        .map(|_| spec.unary.draw(&mut rng))
        .collect();
    BinaryPairwiseMrf::new(&pairs, unary)
}
