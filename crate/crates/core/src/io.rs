//! JSON file formats for models, influence matrices and scans.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::InfluenceMatrix;
use crate::model::{
    BinaryPairwiseMrf, DiscreteMrf, GeneralPairwiseMrf, HigherOrderBinaryMrf, Model,
};
use crate::scan::{Scan, ScanKind, Step};

/// Unary parameters: one value per spin variable, or one per domain value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnaryField {
    Spins(Vec<f64>),
    Tables(Vec<Vec<f64>>),
}

/// On-disk model container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unary: Option<UnaryField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domains: Option<Vec<usize>>,
    /// Tables keyed `"i,j"`, rows indexed by the value of `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<(Vec<usize>, f64)>>,
}

fn check_finite<'a>(what: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    match values.into_iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidConfig(format!(
            "{what} contains non-finite value {v}"
        ))),
        None => Ok(()),
    }
}

fn parse_pair_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidConfig(format!("table key {key:?} is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

impl ModelFile {
    pub fn from_model(model: &Model) -> Result<Self> {
        let mut file = ModelFile {
            kind: model.kind().to_string(),
            p: model.num_vars(),
            edges: None,
            unary: None,
            domains: None,
            tables: None,
            factors: None,
        };
        match model {
            Model::Binary(m) => {
                check_finite("edges", m.edges().iter().map(|(_, _, t)| t))?;
                check_finite("unary", m.unary())?;
                file.edges = Some(m.edges().to_vec());
                file.unary = Some(UnaryField::Spins(m.unary().to_vec()));
            }
            Model::General(m) => {
                let tables: BTreeMap<_, _> = m
                    .tables()
                    .map(|(i, j, t)| (format!("{i},{j}"), t.to_rows()))
                    .collect();
                check_finite("tables", tables.values().flatten().flatten())?;
                check_finite("unary", m.unary().iter().flatten())?;
                file.domains = Some(m.domains());
                file.tables = Some(tables);
                file.unary = Some(UnaryField::Tables(m.unary().to_vec()));
            }
            Model::HigherOrder(m) => {
                check_finite("factors", m.factors().iter().map(|(_, t)| t))?;
                check_finite("unary", m.unary())?;
                file.factors = Some(m.factors().to_vec());
                file.unary = Some(UnaryField::Spins(m.unary().to_vec()));
            }
        }
        Ok(file)
    }

    fn spin_unary(&self) -> Result<Vec<f64>> {
        match &self.unary {
            None => Ok(vec![0.0; self.p]),
            Some(UnaryField::Spins(u)) if u.len() == self.p => Ok(u.clone()),
            Some(UnaryField::Tables(t)) if t.is_empty() && self.p == 0 => Ok(Vec::new()),
            Some(_) => Err(Error::ShapeMismatch(format!(
                "unary must list {} spin parameters",
                self.p
            ))),
        }
    }

    pub fn into_model(self) -> Result<Model> {
        match self.kind.as_str() {
            "binary_pairwise" => {
                let unary = self.spin_unary()?;
                let edges = self.edges.unwrap_or_default();
                Ok(BinaryPairwiseMrf::new(&edges, unary)?.into())
            }
            "general_pairwise" => {
                let domains = self.domains.clone().unwrap_or_else(|| vec![2; self.p]);
                if domains.len() != self.p {
                    return Err(Error::DimensionMismatch {
                        expected: self.p,
                        found: domains.len(),
                    });
                }
                let tables = self
                    .tables
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(key, rows)| parse_pair_key(&key).map(|(i, j)| (i, j, rows)))
                    .collect::<Result<Vec<_>>>()?;
                let model = GeneralPairwiseMrf::new(domains, tables)?;
                let model = match self.unary {
                    None => model,
                    Some(UnaryField::Tables(u)) => model.with_unary(u)?,
                    Some(UnaryField::Spins(u)) if u.is_empty() && self.p == 0 => model,
                    Some(UnaryField::Spins(_)) => {
                        return Err(Error::ShapeMismatch(
                            "general pairwise unary must give one list per variable".into(),
                        ))
                    }
                };
                Ok(model.into())
            }
            "higher_order" => {
                let unary = self.spin_unary()?;
                Ok(HigherOrderBinaryMrf::new(self.factors.unwrap_or_default(), unary)?.into())
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

/// On-disk influence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceFile {
    pub p: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub provenance: String,
}

impl InfluenceFile {
    pub fn from_matrix(bound: &InfluenceMatrix) -> Self {
        Self {
            p: bound.dim(),
            entries: bound.entries().collect(),
            provenance: bound.provenance().to_string(),
        }
    }

    pub fn into_matrix(self) -> Result<InfluenceMatrix> {
        InfluenceMatrix::from_entries(self.p, self.entries, self.provenance)
    }
}

/// On-disk scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFile {
    pub kind: String,
    #[serde(rename = "T")]
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
}

impl ScanFile {
    /// Encodes a scan over `p` variables. Scans mixing point masses with other
    /// steps are written as explicit vectors.
    pub fn from_scan(scan: &Scan, p: usize) -> Self {
        let kind = scan.kind();
        let mut file = ScanFile {
            kind: kind.as_str().to_string(),
            length: scan.len(),
            indices: None,
            vectors: None,
        };
        match kind {
            ScanKind::Deterministic => file.indices = scan.site_indices(p),
            ScanKind::Explicit => {
                file.vectors = Some(
                    (0..scan.len())
                        .map(|t| scan.step(t, p).to_dense(p))
                        .collect(),
                )
            }
            ScanKind::Systematic | ScanKind::Uniform => {}
        }
        file
    }

    pub fn into_scan(self) -> Result<Scan> {
        let scan = match self.kind.as_str() {
            "systematic" => Scan::Systematic(self.length),
            "uniform" => Scan::Uniform(self.length),
            "deterministic" => Scan::Steps(
                self.indices
                    .ok_or_else(|| Error::InvalidScan("deterministic scan without indices".into()))?
                    .into_iter()
                    .map(Step::Site)
                    .collect(),
            ),
            "explicit" => Scan::explicit(
                self.vectors
                    .ok_or_else(|| Error::InvalidScan("explicit scan without vectors".into()))?,
            )?,
            other => return Err(Error::InvalidScan(format!("unknown scan kind {other:?}"))),
        };
        if scan.len() != self.length {
            return Err(Error::InvalidScan(format!(
                "T = {} but {} steps were given",
                self.length,
                scan.len()
            )));
        }
        Ok(scan)
    }
}

pub fn model_to_json(model: &Model) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from_model(
        model,
    )?)?)
}

pub fn model_from_json(text: &str) -> Result<Model> {
    serde_json::from_str::<ModelFile>(text)?.into_model()
}

pub fn influence_to_json(bound: &InfluenceMatrix) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InfluenceFile::from_matrix(
        bound,
    ))?)
}

pub fn influence_from_json(text: &str) -> Result<InfluenceMatrix> {
    serde_json::from_str::<InfluenceFile>(text)?.into_matrix()
}

pub fn scan_to_json(scan: &Scan, p: usize) -> Result<String> {
    Ok(serde_json::to_string(&ScanFile::from_scan(scan, p))?)
}

pub fn scan_from_json(text: &str) -> Result<Scan> {
    serde_json::from_str::<ScanFile>(text)?.into_scan()
}

pub fn load_model(path: &Path) -> Result<Model> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    Ok(fs::write(path, model_to_json(model)?)?)
}

pub fn load_influence(path: &Path) -> Result<InfluenceMatrix> {
    influence_from_json(&fs::read_to_string(path)?)
}

pub fn save_influence(path: &Path, bound: &InfluenceMatrix) -> Result<()> {
    Ok(fs::write(path, influence_to_json(bound)?)?)
}

pub fn load_scan(path: &Path) -> Result<Scan> {
    scan_from_json(&fs::read_to_string(path)?)
}

pub fn save_scan(path: &Path, scan: &Scan, p: usize) -> Result<()> {
    Ok(fs::write(path, scan_to_json(scan, p)?)?)
}
