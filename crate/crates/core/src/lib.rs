//! Dobrushin-variation certificates and optimized scan orders for Gibbs
//! samplers on discrete Markov random fields.
//!
//! The crate covers the full pipeline: model construction ([`model`]),
//! closed-form influence bounds ([`influence`]), evaluation of the Dobrushin
//! variation of any scan ([`variation`]), coordinate-descent scan optimization
//! ([`optimizer`]), seeded Gibbs sampling ([`gibbs`]), brute-force oracles for
//! small models ([`oracle`]) and the experiment drivers ([`experiments`]).

mod argmin;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod influence;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod rng;
pub mod scan;
pub mod variation;

pub use error::{Error, Result};
pub use influence::{influence_bound, scale_bound, total_influence_norm, InfluenceMatrix};
pub use model::{
    lattice_ising, BinaryPairwiseMrf, DiscreteMrf, GeneralPairwiseMrf, HigherOrderBinaryMrf,
    LatticeSpec, Model,
};
pub use optimizer::{
    iterate_optimize, length_doubling_select, optimize_scan, OptimizedScan, OptimizerConfig,
};
pub use scan::{Scan, Step, WeightVector};
pub use variation::{dobrushin_variation, forward_coupling_bounds};
