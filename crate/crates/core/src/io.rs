//! JSON file formats for distributions and score vectors.
//!
//! Distribution file:
//!
//! ```json
//! {"space": {"kind": "dep_multi", "n": 2},
//!  "outcomes": [{"parts": [[0, 1], [1, 2]], "prob": "0.4"}]}
//! ```
//!
//! Score file (unlisted parts score 0):
//!
//! ```json
//! {"space": {"kind": "bio", "n": 2},
//!  "scores": [{"part": [1, "B"], "value": -0.43}, {"part": [2, "I"], "value": "-inf"}]}
//! ```
//!
//! Numbers may be given as JSON numbers or as decimal strings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::inference::ScoreVector;
use crate::structures::{OutputSpace, OutputVector, PartId, SpaceKind, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub kind: SpaceKind,
    pub n: usize,
}

impl SpaceJson {
    pub fn to_space(self) -> Result<OutputSpace> {
        OutputSpace::new(self.kind, self.n)
    }
}

impl From<&OutputSpace> for SpaceJson {
    fn from(space: &OutputSpace) -> Self {
        SpaceJson {
            kind: space.kind(),
            n: space.n(),
        }
    }
}

/// A part written as `[head, modifier]` or `[position, "B"|"I"|"O"]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartJson {
    Arc(usize, usize),
    Tag(usize, Tag),
}

impl From<PartId> for PartJson {
    fn from(part: PartId) -> Self {
        match part {
            PartId::Arc { head, modifier } => PartJson::Arc(head, modifier),
            PartId::Tag { position, tag } => PartJson::Tag(position, tag),
        }
    }
}

impl From<PartJson> for PartId {
    fn from(part: PartJson) -> Self {
        match part {
            PartJson::Arc(head, modifier) => PartId::Arc { head, modifier },
            PartJson::Tag(position, tag) => PartId::Tag { position, tag },
        }
    }
}

/// A real number as a JSON number or a string (`"0.15"`, `"-inf"`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberJson {
    Num(f64),
    Text(String),
}

impl NumberJson {
    pub fn value(&self) -> Result<f64> {
        match self {
            NumberJson::Num(x) => Ok(*x),
            NumberJson::Text(s) => match s.trim() {
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                t => t
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}"))),
            },
        }
    }
}

impl PartialEq for NumberJson {
    fn eq(&self, other: &Self) -> bool {
        match (self.value(), other.value()) {
            (Ok(a), Ok(b)) => a == b || (a.is_nan() && b.is_nan()),
            _ => false,
        }
    }
}

impl From<f64> for NumberJson {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            NumberJson::Num(x)
        } else if x == f64::NEG_INFINITY {
            NumberJson::Text("-inf".into())
        } else if x == f64::INFINITY {
            NumberJson::Text("inf".into())
        } else {
            NumberJson::Text("nan".into())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub parts: Vec<PartJson>,
    pub prob: NumberJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionJson {
    pub space: SpaceJson,
    pub outcomes: Vec<OutcomeJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntryJson {
    pub part: PartJson,
    pub value: NumberJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoresJson {
    pub space: SpaceJson,
    pub scores: Vec<ScoreEntryJson>,
}

pub fn parts_json(y: &OutputVector) -> Vec<PartJson> {
    y.part_ids().into_iter().map(PartJson::from).collect()
}

impl DistributionJson {
    pub fn from_distribution(dist: &Distribution) -> Self {
        DistributionJson {
            space: dist.space().into(),
            outcomes: dist
                .outcomes()
                .iter()
                .map(|(y, p)| OutcomeJson {
                    parts: parts_json(y),
                    prob: NumberJson::Num(*p),
                })
                .collect(),
        }
    }

    pub fn to_distribution(&self) -> Result<Distribution> {
        let space = self.space.to_space()?;
        let mut outcomes = Vec::with_capacity(self.outcomes.len());
        for o in &self.outcomes {
            let ids: Vec<PartId> = o.parts.iter().map(|&p| p.into()).collect();
            let y = OutputVector::from_part_ids(space, &ids)
                .map_err(|e| Error::InvalidDistribution(format!("bad output: {e}")))?;
            outcomes.push((y, o.prob.value()?));
        }
        Distribution::new(space, outcomes)
    }
}

pub fn distribution_from_json(text: &str) -> Result<Distribution> {
    let raw: DistributionJson = serde_json::from_str(text)?;
    raw.to_distribution()
}

pub fn distribution_to_json(dist: &Distribution) -> String {
    serde_json::to_string_pretty(&DistributionJson::from_distribution(dist))
        .expect("distribution serializes")
}

pub fn load_distribution(path: impl AsRef<Path>) -> Result<Distribution> {
    distribution_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_distribution(dist: &Distribution, path: impl AsRef<Path>) -> Result<()> {
    let mut text = distribution_to_json(dist);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

impl ScoresJson {
    pub fn from_scores(space: &OutputSpace, w: &ScoreVector) -> Self {
        ScoresJson {
            space: space.into(),
            scores: w
                .values()
                .iter()
                .enumerate()
                .map(|(c, &v)| ScoreEntryJson {
                    part: space.part_of_index(c).expect("index in range").into(),
                    value: v.into(),
                })
                .collect(),
        }
    }

    pub fn to_scores(&self) -> Result<(OutputSpace, ScoreVector)> {
        let space = self.space.to_space()?;
        let mut values = vec![0.0; space.num_parts()];
        for entry in &self.scores {
            let c = space.part_index(entry.part.into())?;
            values[c] = entry.value.value()?;
        }
        Ok((space, ScoreVector::new(values)?))
    }
}

pub fn scores_from_json(text: &str) -> Result<(OutputSpace, ScoreVector)> {
    let raw: ScoresJson = serde_json::from_str(text)?;
    raw.to_scores()
}

pub fn scores_to_json(space: &OutputSpace, w: &ScoreVector) -> String {
    serde_json::to_string_pretty(&ScoresJson::from_scores(space, w)).expect("scores serialize")
}
