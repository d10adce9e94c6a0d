//! Surrogate losses and pointwise risks.
//!
//! All four losses share the shape `loss(w, y) = -<w, y> + N(w)` where the
//! normalizer `N` does not depend on `y`:
//!
//! | kind       | `N(w)`                                              |
//! |------------|-----------------------------------------------------|
//! | `Nll`      | `log sum_{y'} exp <w, y'>`                          |
//! | `OneVsAll` | `sum_{y'} log(1 + exp <w, y'>)`                     |
//! | `SepBio`   | `sum_i log sum_t exp w[i, t]`                       |
//! | `SepDep`   | `sum_m log sum_{h != m} exp w[h, m]`, root included |
//!
//! so the risk under a distribution is `-<w, marginals> + N(w)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::inference::{enumerated_scores, marginal_inference, Algo, ScoreVector};
use crate::math::{log_sum_exp, sigmoid, softplus};
use crate::structures::{OutputSpace, OutputVector, SpaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "nll")]
    Nll,
    #[serde(rename = "one-vs-all")]
    OneVsAll,
    #[serde(rename = "sep-bio")]
    SepBio,
    #[serde(rename = "sep-dep")]
    SepDep,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Nll,
        LossKind::OneVsAll,
        LossKind::SepBio,
        LossKind::SepDep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Nll => "nll",
            LossKind::OneVsAll => "one-vs-all",
            LossKind::SepBio => "sep-bio",
            LossKind::SepDep => "sep-dep",
        }
    }

    pub fn is_separable(self) -> bool {
        matches!(self, LossKind::SepBio | LossKind::SepDep)
    }

    pub fn supports(self, space: &OutputSpace) -> bool {
        match self {
            LossKind::SepBio => space.kind() == SpaceKind::Bio,
            LossKind::SepDep => space.is_dep(),
            LossKind::Nll | LossKind::OneVsAll => true,
        }
    }

    pub(crate) fn check(self, space: &OutputSpace) -> Result<()> {
        if self.supports(space) {
            return Ok(());
        }
        Err(Error::WrongSpace {
            expected: if self == LossKind::SepBio {
                "bio"
            } else {
                "dependency"
            },
            actual: space.kind(),
        })
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nll" => Ok(LossKind::Nll),
            "one-vs-all" | "ova" => Ok(LossKind::OneVsAll),
            "sep-bio" => Ok(LossKind::SepBio),
            "sep-dep" | "head-selection" => Ok(LossKind::SepDep),
            other => Err(Error::Parse(format!("unknown loss {other:?}"))),
        }
    }
}

/// A loss or risk value with its gradient in `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `N(w)` and its gradient. `algo` picks the marginal-inference route for
/// `Nll`; the other kinds ignore it.
pub fn normalizer(
    kind: LossKind,
    space: &OutputSpace,
    w: &ScoreVector,
    algo: Algo,
) -> Result<LossEval> {
    kind.check(space)?;
    w.check(space)?;
    match kind {
        LossKind::Nll => {
            let r = marginal_inference(space, w, algo)?;
            Ok(LossEval {
                value: r.log_partition,
                gradient: r.mu.0,
            })
        }
        LossKind::OneVsAll => {
            let (ys, scores) = enumerated_scores(space, w)?;
            let mut value = 0.0;
            let mut gradient = vec![0.0; space.num_parts()];
            for (y, &s) in ys.iter().zip(&scores) {
                if s == f64::NEG_INFINITY {
                    continue;
                }
                value += softplus(s);
                let g = sigmoid(s);
                for &c in y.parts() {
                    gradient[c] += g;
                }
            }
            Ok(LossEval { value, gradient })
        }
        LossKind::SepBio | LossKind::SepDep => {
            let mut value = 0.0;
            let mut gradient = vec![0.0; space.num_parts()];
            for group in space.token_groups() {
                let scores: Vec<f64> = group.iter().map(|&c| w.values()[c]).collect();
                let lse = log_sum_exp(&scores);
                if lse == f64::NEG_INFINITY {
                    return Err(Error::NoFiniteOutput);
                }
                value += lse;
                for (&c, &s) in group.iter().zip(&scores) {
                    gradient[c] = (s - lse).exp();
                }
            }
            Ok(LossEval { value, gradient })
        }
    }
}

/// Loss of scores `w` on the gold output `y`. `Nll` goes through the fast
/// marginal-inference route.
pub fn loss(
    kind: LossKind,
    space: &OutputSpace,
    w: &ScoreVector,
    y: &OutputVector,
) -> Result<LossEval> {
    loss_with(kind, space, w, y, Algo::Fast)
}

pub fn loss_with(
    kind: LossKind,
    space: &OutputSpace,
    w: &ScoreVector,
    y: &OutputVector,
    algo: Algo,
) -> Result<LossEval> {
    if y.space() != space {
        return Err(Error::SpaceMismatch {
            left: space.to_string(),
            right: y.space().to_string(),
        });
    }
    if !space.is_valid(y)? {
        return Err(Error::InvalidOutput(y.to_string()));
    }
    let LossEval {
        value,
        mut gradient,
    } = normalizer(kind, space, w, algo)?;
    for &c in y.parts() {
        gradient[c] -= 1.0;
    }
    Ok(LossEval {
        value: value - w.score(y),
        gradient,
    })
}

/// `-<w, mu>` skipping parts with zero weight, so forbidden parts that the
/// distribution never uses do not produce `0 * inf`.
fn weighted_score(w: &ScoreVector, weights: &[f64]) -> f64 {
    -w.values()
        .iter()
        .zip(weights)
        .filter(|(_, &m)| m != 0.0)
        .map(|(&v, &m)| v * m)
        .sum::<f64>()
}

/// Expected loss under `dist`, computed in closed form as
/// `-<w, marginals(dist)> + N(w)`.
pub fn surrogate_risk(
    kind: LossKind,
    space: &OutputSpace,
    dist: &Distribution,
    w: &ScoreVector,
) -> Result<LossEval> {
    if dist.space() != space {
        return Err(Error::SpaceMismatch {
            left: space.to_string(),
            right: dist.space().to_string(),
        });
    }
    let marginals = dist.marginals();
    let LossEval {
        value,
        mut gradient,
    } = normalizer(kind, space, w, Algo::Fast)?;
    for (g, m) in gradient.iter_mut().zip(marginals.values()) {
        *g -= m;
    }
    Ok(LossEval {
        value: value + weighted_score(w, marginals.values()),
        gradient,
    })
}

/// Average loss over observed outputs.
pub fn empirical_risk(
    kind: LossKind,
    space: &OutputSpace,
    samples: &[OutputVector],
    w: &ScoreVector,
) -> Result<LossEval> {
    let mut value = 0.0;
    let mut gradient = vec![0.0; space.num_parts()];
    for y in samples {
        let e = loss(kind, space, w, y)?;
        value += e.value;
        for (g, d) in gradient.iter_mut().zip(&e.gradient) {
            *g += d;
        }
    }
    let k = samples.len().max(1) as f64;
    gradient.iter_mut().for_each(|g| *g /= k);
    Ok(LossEval {
        value: value / k,
        gradient,
    })
}

/// Per-token categorical NLL terms of a separable loss, computed one token
/// at a time.
pub fn token_losses(
    kind: LossKind,
    space: &OutputSpace,
    w: &ScoreVector,
    y: &OutputVector,
) -> Result<Vec<f64>> {
    if !kind.is_separable() {
        return Err(Error::WrongLossKind {
            kind: kind.to_string(),
            reason: "only token-separable losses split into token terms",
        });
    }
    kind.check(space)?;
    w.check(space)?;
    space
        .token_groups()
        .into_iter()
        .map(|group| {
            let gold = group
                .iter()
                .copied()
                .find(|&c| y.contains(c))
                .ok_or_else(|| Error::InvalidOutput(y.to_string()))?;
            let scores: Vec<f64> = group.iter().map(|&c| w.values()[c]).collect();
            Ok(log_sum_exp(&scores) - w.values()[gold])
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroOneRisk {
    pub risk: f64,
    /// `1 - max_y p(y)`.
    pub optimal_risk: f64,
    pub is_optimal: bool,
}

/// Expected 0-1 loss of scores `w`: an output costs nothing iff it belongs
/// to the full argmax set (scores within `tie_tolerance` of the maximum).
pub fn zero_one_risk(
    space: &OutputSpace,
    dist: &Distribution,
    w: &ScoreVector,
    tie_tolerance: f64,
) -> Result<ZeroOneRisk> {
    if dist.space() != space {
        return Err(Error::SpaceMismatch {
            left: space.to_string(),
            right: dist.space().to_string(),
        });
    }
    let (_, scores) = enumerated_scores(space, w)?;
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::NoFiniteOutput);
    }
    let risk: f64 = dist
        .outcomes()
        .iter()
        .filter(|(y, _)| w.score(y) < best - tie_tolerance)
        .map(|(_, p)| p)
        .sum();
    let optimal_risk = 1.0 - dist.max_probability();
    Ok(ZeroOneRisk {
        risk,
        optimal_risk,
        is_optimal: (risk - optimal_risk).abs() <= 1e-12,
    })
}
