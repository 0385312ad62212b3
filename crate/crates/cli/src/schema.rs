//! JSON wire formats for problem files.
//!
//! Distributions: `{"alphabet": 2, "length": 3, "mass": [{"outcome": [0, 1, 1], "p": 0.5}, ...]}`
//! where `outcome` is a flat index or a digit list. Unlisted outcomes have
//! mass zero. Density operators: `{"dim": 2, "re": [[..]], "im": [[..]]}`.
//! A hypothesis file holds either form; the keys decide which.

use std::fs;
use std::path::Path;

use oneshot_core::channels::{Channel, ClassicalChannel, QuantumChannel};
use oneshot_core::design::ConstraintPolytope;
use oneshot_core::distributions::{
    ClassicalDistribution, DensityOperator, Hypothesis, SequenceSpace,
};
use oneshot_core::hermitian::{CMatrix, HermitianMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Index(usize),
    Digits(Vec<usize>),
}

impl Outcome {
    fn resolve(&self, space: SequenceSpace) -> CliResult<usize> {
        match self {
            Outcome::Index(i) if *i < space.dim() => Ok(*i),
            Outcome::Index(i) => Err(CliError::validation(format!(
                "outcome {i} outside 0..{}",
                space.dim()
            ))),
            Outcome::Digits(d) => Ok(space.index(d)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassEntry {
    pub outcome: Outcome,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionJson {
    pub alphabet: usize,
    #[serde(default = "one")]
    pub length: usize,
    pub mass: Vec<MassEntry>,
}

fn one() -> usize {
    1
}

impl DistributionJson {
    /// Totals below one are kept as sub-normalized vectors; each solver
    /// decides whether it accepts them.
    pub fn build(&self) -> CliResult<ClassicalDistribution> {
        let space = SequenceSpace::new(self.alphabet, self.length)?;
        let mut mass = vec![0.0; space.dim()];
        let mut seen = vec![false; space.dim()];
        for e in &self.mass {
            let i = e.outcome.resolve(space)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(CliError::validation(format!("outcome {i} listed twice")));
            }
            mass[i] = e.p;
        }
        Ok(ClassicalDistribution::with_deficit(space, mass)?)
    }

    /// Sparse form listing the nonzero entries; digit lists for sequences.
    pub fn from_distribution(p: &ClassicalDistribution) -> Self {
        let space = p.space();
        let mass = p
            .mass()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0.0)
            .map(|(i, &m)| MassEntry {
                outcome: if space.length() == 1 {
                    Outcome::Index(i)
                } else {
                    Outcome::Digits(space.digits(i))
                },
                p: m,
            })
            .collect();
        Self {
            alphabet: space.base(),
            length: space.length(),
            mass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    fn build(&self) -> CliResult<CMatrix> {
        Ok(CMatrix::from_parts(&self.re, self.im.as_deref())?)
    }
}

pub fn density_from_value(v: Value) -> CliResult<DensityOperator> {
    let h: HermitianMatrix = serde_json::from_value(v).map_err(bad_json)?;
    Ok(DensityOperator::with_deficit(h)?)
}

pub fn hypothesis_from_value(v: Value) -> CliResult<Hypothesis> {
    let obj = v
        .as_object()
        .ok_or_else(|| CliError::validation("hypothesis must be a JSON object"))?;
    if obj.contains_key("mass") {
        let d: DistributionJson = serde_json::from_value(v).map_err(bad_json)?;
        Ok(d.build()?.into())
    } else if obj.contains_key("re") {
        Ok(density_from_value(v)?.into())
    } else {
        Err(CliError::validation(
            "hypothesis needs either \"mass\" (distribution) or \"re\" (density operator)",
        ))
    }
}

/// Channel descriptors. `slots` lifts a single-slot classical map to that
/// many independent slots; `compose` lists stages in application order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelJson {
    Loss {
        c: usize,
        g: usize,
        #[serde(default)]
        slots: Option<usize>,
    },
    Satadd {
        s: usize,
        g: usize,
        #[serde(default)]
        slots: Option<usize>,
    },
    Mix {
        delta: f64,
        dim: usize,
        #[serde(default)]
        slots: Option<usize>,
    },
    Jitter {
        q: f64,
        n: usize,
        g: usize,
    },
    Matrix {
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        slots: Option<usize>,
    },
    Truncate {
        dim: usize,
        keep: Vec<usize>,
    },
    Kraus {
        ops: Vec<MatrixJson>,
    },
    Compose {
        stages: Vec<ChannelJson>,
    },
}

fn lifted(c: ClassicalChannel, slots: Option<usize>) -> CliResult<Channel> {
    let c = match slots {
        Some(n) => c.lift(n)?,
        None => c,
    };
    Ok(Channel::Classical(c))
}

impl ChannelJson {
    pub fn build(&self) -> CliResult<Channel> {
        match self {
            ChannelJson::Loss { c, g, slots } => {
                if c > g {
                    return Err(CliError::validation(format!(
                        "loss c = {c} exceeds g = {g}"
                    )));
                }
                lifted(ClassicalChannel::loss_map(*c, *g), *slots)
            }
            ChannelJson::Satadd { s, g, slots } => {
                lifted(ClassicalChannel::saturating_add_map(*s, *g)?, *slots)
            }
            ChannelJson::Mix { delta, dim, slots } => {
                lifted(ClassicalChannel::uniform_mix_map(*delta, *dim)?, *slots)
            }
            ChannelJson::Jitter { q, n, g } => Ok(Channel::Classical(
                oneshot_core::channels::jitter_channel(*q, *n, *g)?,
            )),
            ChannelJson::Matrix { rows, slots } => {
                lifted(ClassicalChannel::from_matrix(rows.clone())?, *slots)
            }
            ChannelJson::Truncate { dim, keep } => {
                if let Some(k) = keep.iter().find(|&&k| k >= *dim) {
                    return Err(CliError::validation(format!(
                        "truncate keeps outcome {k} outside 0..{dim}"
                    )));
                }
                Ok(Channel::Classical(ClassicalChannel::truncate_projection(
                    *dim,
                    |i| keep.contains(&i),
                )))
            }
            ChannelJson::Kraus { ops } => {
                let ops = ops
                    .iter()
                    .map(MatrixJson::build)
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Channel::Quantum(QuantumChannel::new(ops)?))
            }
            ChannelJson::Compose { stages } => {
                let mut it = stages.iter();
                let first = it
                    .next()
                    .ok_or_else(|| CliError::validation("compose needs at least one stage"))?;
                let mut acc = first.build()?;
                for s in it {
                    acc = Channel::compose(&s.build()?, &acc)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn build_classical(&self) -> CliResult<ClassicalChannel> {
        match self.build()? {
            Channel::Classical(c) => Ok(c),
            Channel::Quantum(_) => Err(CliError::validation(
                "a classical channel is required here (no kraus stages)",
            )),
        }
    }
}

/// Linear cost vector for the inscribed-matter budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyJson {
    pub a: Vec<f64>,
}

/// An observed outcome and optionally the uniform draw used when the
/// optimal test is randomized at that outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataJson {
    pub observed: Outcome,
    #[serde(default)]
    pub u: Option<f64>,
}

impl DataJson {
    pub fn observed_index(&self, space: SequenceSpace) -> CliResult<usize> {
        self.observed.resolve(space)
    }
}

fn bad_json(e: serde_json::Error) -> CliError {
    CliError::validation(format!("schema error: {e}"))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_value(path: &Path) -> CliResult<Value> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Prefixes problems found while building an input with its path. Any core
/// error raised here is a property of the file, so it becomes a validation
/// error.
fn in_file<T>(path: &Path, r: CliResult<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        CliError::Io { .. } => e,
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let v = read_value(path)?;
    in_file(path, serde_json::from_value(v).map_err(bad_json))
}

pub fn load_hypothesis(path: &Path) -> CliResult<Hypothesis> {
    let v = read_value(path)?;
    in_file(path, hypothesis_from_value(v))
}

pub fn load_hypotheses(path: &Path) -> CliResult<Vec<Hypothesis>> {
    let v = read_value(path)?;
    let items = match v {
        Value::Array(items) => items,
        _ => return in_file(path, Err(CliError::validation("expected a JSON array"))),
    };
    in_file(path, items.into_iter().map(hypothesis_from_value).collect())
}

pub fn load_distribution(path: &Path) -> CliResult<ClassicalDistribution> {
    let d: DistributionJson = load(path)?;
    in_file(path, d.build())
}

pub fn load_distributions(path: &Path) -> CliResult<Vec<ClassicalDistribution>> {
    let ds: Vec<DistributionJson> = load(path)?;
    in_file(path, ds.iter().map(DistributionJson::build).collect())
}

pub fn load_classical_channel(path: &Path) -> CliResult<ClassicalChannel> {
    let c: ChannelJson = load(path)?;
    in_file(path, c.build_classical())
}

pub fn load_polytope(path: &Path) -> CliResult<ConstraintPolytope> {
    let p: ConstraintPolytope = load(path)?;
    in_file(path, p.validate().map_err(CliError::from).map(|_| p))
}
