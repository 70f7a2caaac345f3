//! Parsers for the compact argument syntaxes shared by several subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use dogs_core::gibbs::{Feature, StartSpec};
use dogs_core::influence::influence_bound;
use dogs_core::io;
use dogs_core::oracle::exact_influence;
use dogs_core::{InfluenceMatrix, Model, Scan, WeightVector};

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| anyhow!("bad list entry {s:?}: {e}"))
        })
        .collect()
}

/// `ones`, `unit:I`, `indicator:I,J,..` or `weights:W0,W1,..`.
pub fn parse_weights(text: &str, p: usize) -> Result<WeightVector> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let d = match kind {
        "ones" => WeightVector::ones(p),
        "unit" => {
            let i: usize = rest
                .parse()
                .with_context(|| format!("bad index in {text:?}"))?;
            if i >= p {
                bail!("weight index {i} out of range for {p} variables");
            }
            WeightVector::unit(p, i)
        }
        "indicator" => {
            let set: Vec<usize> = parse_list(rest)?;
            if let Some(&i) = set.iter().find(|&&i| i >= p) {
                bail!("weight index {i} out of range for {p} variables");
            }
            WeightVector::indicator(p, &set)
        }
        "weights" => WeightVector::new(parse_list(rest)?)?,
        _ => {
            bail!("unknown weight vector {text:?}; use ones, unit:I, indicator:I,J or weights:W,..")
        }
    };
    if d.dim() != p {
        bail!("weight vector has {} entries, model has {p}", d.dim());
    }
    Ok(d)
}

/// `all-plus`, `uniform` or `fixed:V0,V1,..`.
pub fn parse_start(text: &str) -> Result<StartSpec> {
    match text.split_once(':') {
        None if text == "all-plus" => Ok(StartSpec::AllPlus),
        None if text == "uniform" => Ok(StartSpec::UniformRandom),
        Some(("fixed", rest)) => Ok(StartSpec::Fixed(parse_list(rest)?)),
        _ => bail!("unknown start {text:?}; use all-plus, uniform or fixed:V,.."),
    }
}

/// `coordinate:I` or `product:I,J,..`.
pub fn parse_feature(text: &str) -> Result<Feature> {
    match text.split_once(':') {
        Some(("coordinate", i)) => Ok(Feature::Coordinate(i.parse()?)),
        Some(("product", rest)) => Ok(Feature::Product(parse_list(rest)?)),
        _ => bail!("unknown feature {text:?}; use coordinate:I or product:I,J"),
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScanArgs {
    /// Scan JSON file.
    #[arg(long)]
    pub scan: Option<PathBuf>,
    /// Systematic scan of this many steps.
    #[arg(long, value_name = "T")]
    pub systematic: Option<usize>,
    /// Uniform random scan of this many steps.
    #[arg(long, value_name = "T")]
    pub uniform: Option<usize>,
}

impl ScanArgs {
    pub fn load(&self) -> Result<Scan> {
        match (&self.scan, self.systematic, self.uniform) {
            (Some(path), _, _) => read(path, io::load_scan),
            (_, Some(t), _) => Ok(Scan::Systematic(t)),
            (_, _, Some(t)) => Ok(Scan::Uniform(t)),
            _ => bail!("no scan given"),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct BoundArgs {
    /// Model JSON file; its closed-form influence bound is used.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Influence matrix JSON file.
    #[arg(long)]
    pub influence: Option<PathBuf>,
}

impl BoundArgs {
    pub fn load(&self) -> Result<InfluenceMatrix> {
        match (&self.model, &self.influence) {
            (Some(path), _) => Ok(influence_bound(&read_model(path)?)),
            (_, Some(path)) => read(path, io::load_influence),
            _ => bail!("no model or influence matrix given"),
        }
    }
}

fn read<T>(path: &Path, load: fn(&Path) -> dogs_core::Result<T>) -> Result<T> {
    load(path).with_context(|| format!("loading {}", path.display()))
}

pub fn read_model(path: &Path) -> Result<Model> {
    read(path, io::load_model)
}

pub fn read_influence(path: &Path) -> Result<InfluenceMatrix> {
    read(path, io::load_influence)
}

/// Closed-form bound, or exact influence by enumeration.
pub fn bound_for(model: &Model, exact: bool) -> Result<InfluenceMatrix> {
    if exact {
        Ok(exact_influence(model)?)
    } else {
        Ok(influence_bound(model))
    }
}
