//! Pointwise Bayes consistency of surrogate losses.
//!
//! A surrogate is consistent on a distribution when the scores minimizing
//! its pointwise risk rank a most probable output strictly above every
//! other output. Verdicts are computed from the full argmax set with strict
//! margins, so they never depend on how MAP inference breaks ties.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, PROB_TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::inference::{enumerated_scores, ScoreVector};
use crate::io::{parts_json, NumberJson, PartJson, ScoreEntryJson, SpaceJson};
use crate::losses::{surrogate_risk, LossKind};
use crate::math::log_sum_exp;
use crate::rng::PortableRng;
use crate::structures::{OutputSpace, OutputVector, PartId};

pub const SCORE_TIE_TOLERANCE: f64 = 1e-9;
/// Largest `max_y |<w, y> - log p(y)|` that certifies realizability.
pub const REALIZABILITY_TOLERANCE: f64 = 1e-9;
/// Margin by which a reconstructed distribution's mode beats every other output.
pub const MODE_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Armijo backtracking: shrink by `beta` until the decrease reaches `c * t * |g|^2`.
    Backtracking {
        beta: f64,
        c: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub grad_tolerance: f64,
    /// Echoed in reports. Descent always starts from `w = 0`.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 10_000,
            step_rule: StepRule::Fixed(0.5),
            grad_tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.step_rule {
            StepRule::Fixed(eta) => eta > 0.0,
            StepRule::Backtracking { beta, c } => 0.0 < beta && beta < 1.0 && 0.0 < c && c < 1.0,
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bad step rule {:?}",
                self.step_rule
            )));
        }
        if self.grad_tolerance.is_nan() || self.grad_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(
                "grad_tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerdictConfig {
    pub tie_tolerance: f64,
    pub prob_tolerance: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig {
            tie_tolerance: SCORE_TIE_TOLERANCE,
            prob_tolerance: PROB_TIE_TOLERANCE,
            optimizer: OptimizerConfig::default(),
        }
    }
}

fn separable_kind(kind: LossKind, space: &OutputSpace) -> Result<()> {
    if !kind.is_separable() {
        return Err(Error::WrongLossKind {
            kind: kind.to_string(),
            reason: "no closed-form minimizer; only token-separable losses have one",
        });
    }
    kind.check(space)
}

/// Minimizer of a token-separable risk: the log of each part marginal,
/// `-inf` where the marginal is zero.
pub fn closed_form_minimizer(kind: LossKind, dist: &Distribution) -> Result<ScoreVector> {
    separable_kind(kind, dist.space())?;
    ScoreVector::new(dist.marginals().values().iter().map(|m| m.ln()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub scores: ScoreVector,
    /// `max_y |<w, y> - log p(y)|`.
    pub residual: f64,
}

/// Worst deviation of `<w, y>` from `log p(y)` over all of `Y`.
pub fn realization_residual(dist: &Distribution, w: &ScoreVector) -> Result<f64> {
    let (ys, scores) = enumerated_scores(dist.space(), w)?;
    Ok(ys
        .iter()
        .zip(&scores)
        .map(|(y, &s)| {
            let target = dist.probability(y).ln();
            if s == target {
                0.0
            } else {
                (s - target).abs()
            }
        })
        .fold(0.0, f64::max))
}

/// Least-squares solve of `<w, y> = log p(y)` over all `y`, through the SVD
/// of the output indicator matrix (the system is rank deficient).
pub fn nll_realizable_minimizer(dist: &Distribution) -> Result<Realization> {
    let space = dist.space();
    let ys = space.enumerate()?;
    let missing = ys.iter().filter(|y| dist.probability(y) == 0.0).count();
    if missing > 0 {
        return Err(Error::UnsupportedOutputs { count: missing });
    }
    let mut a = DMatrix::<f64>::zeros(ys.len(), space.num_parts());
    let mut b = DVector::<f64>::zeros(ys.len());
    for (row, y) in ys.iter().enumerate() {
        for &c in y.parts() {
            a[(row, c)] = 1.0;
        }
        b[row] = dist.probability(y).ln();
    }
    let svd = a.svd(true, true);
    let eps = 1e-10 * svd.singular_values.max();
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidConfig(format!("least squares failed: {e}")))?;
    let scores = ScoreVector::new(x.iter().copied().collect())?;
    let residual = realization_residual(dist, &scores)?;
    Ok(Realization { scores, residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimization {
    pub scores: ScoreVector,
    pub grad_norm: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out first; `scores` is then the iterate
    /// with the smallest gradient seen.
    pub converged: bool,
}

/// Gradient descent on the pointwise surrogate risk from `w = 0`.
///
/// Separable risks are invariant to adding a constant to every score of a
/// token group, so their result is reported in the gauge where each group's
/// scores log-sum-exp to zero (the gauge of the closed-form minimizer).
pub fn minimize_risk(
    kind: LossKind,
    dist: &Distribution,
    config: &OptimizerConfig,
) -> Result<Minimization> {
    config.validate()?;
    let space = *dist.space();
    kind.check(&space)?;
    let risk = |w: &[f64]| -> Result<crate::losses::LossEval> {
        surrogate_risk(kind, &space, dist, &ScoreVector::new(w.to_vec())?)
    };
    let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));

    let mut w = vec![0.0; space.num_parts()];
    let mut best = (w.clone(), f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let eval = risk(&w)?;
        let g_norm = inf_norm(&eval.gradient);
        if g_norm < best.1 {
            best = (w.clone(), g_norm);
        }
        if g_norm <= config.grad_tolerance {
            converged = true;
            break;
        }
        if iterations == config.max_iters {
            break;
        }
        iterations += 1;
        let step = match config.step_rule {
            StepRule::Fixed(eta) => eta,
            StepRule::Backtracking { beta, c } => {
                let sq: f64 = eval.gradient.iter().map(|g| g * g).sum();
                let mut t = 1.0;
                for _ in 0..60 {
                    let trial: Vec<f64> = w
                        .iter()
                        .zip(&eval.gradient)
                        .map(|(x, g)| x - t * g)
                        .collect();
                    if risk(&trial)?.value <= eval.value - c * t * sq {
                        break;
                    }
                    t *= beta;
                }
                t
            }
        };
        for (x, g) in w.iter_mut().zip(&eval.gradient) {
            *x -= step * g;
        }
    }
    let (mut w, grad_norm) = if converged { (w, best.1) } else { best };
    if kind.is_separable() {
        for group in space.token_groups() {
            let lse = log_sum_exp(&group.iter().map(|&c| w[c]).collect::<Vec<_>>());
            for c in group {
                w[c] -= lse;
            }
        }
    }
    Ok(Minimization {
        scores: ScoreVector::new(w)?,
        grad_norm,
        iterations,
        converged,
    })
}

/// Normalized Boltzmann distribution `exp<w, y> / Z` as a table aligned with
/// the enumeration.
pub fn boltzmann_table(space: &OutputSpace, w: &ScoreVector) -> Result<Vec<f64>> {
    let (_, scores) = enumerated_scores(space, w)?;
    let z = log_sum_exp(&scores);
    Ok(scores.iter().map(|s| (s - z).exp()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Consistent,
    Inconsistent,
    Undetermined,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Consistent => "consistent",
            Status::Inconsistent => "inconsistent",
            Status::Undetermined => "undetermined",
        })
    }
}

/// `a` is more probable than `b`, yet the minimizer scores `b` higher.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub a: OutputVector,
    pub b: OutputVector,
    pub p_a: f64,
    pub p_b: f64,
    pub score_a: f64,
    pub score_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyVerdict {
    pub status: Status,
    pub kind: LossKind,
    pub space: OutputSpace,
    pub minimizer: ScoreVector,
    pub witness: Option<Witness>,
    /// Witness score gap `<w, b> - <w, a>` when inconsistent; otherwise the
    /// margin of the lowest-scoring mode over the best non-mode (`+inf` when
    /// every output is a mode).
    pub gap: f64,
    pub modes: Vec<OutputVector>,
    pub argmax: Vec<OutputVector>,
    /// Minimizer came from numerical optimization rather than a closed form
    /// or an exact realizability solve.
    pub empirical: bool,
    /// For NLL: whether the distribution is exactly realizable by part scores.
    pub realizable: Option<bool>,
    pub residual: Option<f64>,
    pub converged: bool,
    pub seed: u64,
}

pub fn consistency_verdict(
    kind: LossKind,
    dist: &Distribution,
    config: &VerdictConfig,
) -> Result<ConsistencyVerdict> {
    let space = *dist.space();
    kind.check(&space)?;
    let ys = space.enumerate()?;

    let mut empirical = false;
    let mut realizable = None;
    let mut residual = None;
    let mut converged = true;
    let minimizer = match kind {
        LossKind::SepBio | LossKind::SepDep => closed_form_minimizer(kind, dist)?,
        LossKind::Nll => {
            let exact = match nll_realizable_minimizer(dist) {
                Ok(r) => {
                    residual = Some(r.residual);
                    realizable = Some(r.residual <= REALIZABILITY_TOLERANCE);
                    (r.residual <= REALIZABILITY_TOLERANCE).then_some(r.scores)
                }
                Err(Error::UnsupportedOutputs { .. }) => None,
                Err(e) => return Err(e),
            };
            match exact {
                Some(w) => w,
                None => {
                    empirical = true;
                    let m = minimize_risk(kind, dist, &config.optimizer)?;
                    converged = m.converged;
                    m.scores
                }
            }
        }
        LossKind::OneVsAll => {
            empirical = true;
            let m = minimize_risk(kind, dist, &config.optimizer)?;
            converged = m.converged;
            m.scores
        }
    };

    let scores: Vec<f64> = ys.iter().map(|y| minimizer.score(y)).collect();
    let probs: Vec<f64> = ys.iter().map(|y| dist.probability(y)).collect();
    let p_max = probs.iter().copied().fold(0.0, f64::max);
    let is_mode: Vec<bool> = probs
        .iter()
        .map(|&p| p >= p_max - config.prob_tolerance)
        .collect();
    let s_max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let pick =
        |want: bool| -> Vec<usize> { (0..ys.len()).filter(|&i| is_mode[i] == want).collect() };
    let modes = pick(true);
    let others = pick(false);
    let fold_scores = |idx: &[usize], init: f64, f: fn(f64, f64) -> f64| {
        idx.iter().map(|&i| scores[i]).fold(init, f)
    };
    let mode_min = fold_scores(&modes, f64::INFINITY, f64::min);
    let mode_max = fold_scores(&modes, f64::NEG_INFINITY, f64::max);
    let other_max = fold_scores(&others, f64::NEG_INFINITY, f64::max);
    let tol = config.tie_tolerance;

    let mut witness = None;
    let (status, gap) = if other_max > mode_max + tol {
        // largest gap, then first pair in enumeration order
        let mut best: Option<(usize, usize, f64)> = None;
        for &a in &modes {
            for &b in &others {
                let g = scores[b] - scores[a];
                if g > tol
                    && probs[a] > probs[b] + config.prob_tolerance
                    && best.is_none_or(|(_, _, bg)| g > bg)
                {
                    best = Some((a, b, g));
                }
            }
        }
        let (a, b, g) = best.expect("a violating pair exists");
        witness = Some(Witness {
            a: ys[a].clone(),
            b: ys[b].clone(),
            p_a: probs[a],
            p_b: probs[b],
            score_a: scores[a],
            score_b: scores[b],
        });
        (Status::Inconsistent, g)
    } else {
        let margin = mode_min - other_max;
        let modes_on_top = mode_min >= s_max - tol;
        if modes_on_top && margin > tol {
            (Status::Consistent, margin)
        } else {
            (Status::Undetermined, margin)
        }
    };

    let argmax = (0..ys.len())
        .filter(|&i| scores[i] >= s_max - tol)
        .map(|i| ys[i].clone())
        .collect();
    Ok(ConsistencyVerdict {
        status,
        kind,
        space,
        minimizer,
        witness,
        gap,
        modes: modes.iter().map(|&i| ys[i].clone()).collect(),
        argmax,
        empirical,
        realizable,
        residual,
        converged,
        seed: config.optimizer.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub a: Vec<PartJson>,
    pub b: Vec<PartJson>,
    pub p_a: NumberJson,
    pub p_b: NumberJson,
    pub score_a: NumberJson,
    pub score_b: NumberJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictFlags {
    pub empirical: bool,
    pub realizable: Option<bool>,
    pub converged: bool,
}

/// JSON form of a verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub status: Status,
    pub loss: LossKind,
    pub space: SpaceJson,
    pub minimizer: Vec<ScoreEntryJson>,
    pub witness: Option<WitnessReport>,
    pub gap: NumberJson,
    pub modes: Vec<Vec<PartJson>>,
    pub argmax: Vec<Vec<PartJson>>,
    pub residual: Option<NumberJson>,
    pub flags: VerdictFlags,
    pub version: String,
    pub seed: u64,
}

impl ConsistencyVerdict {
    pub fn report(&self) -> VerdictReport {
        VerdictReport {
            status: self.status,
            loss: self.kind,
            space: (&self.space).into(),
            minimizer: self
                .minimizer
                .values()
                .iter()
                .enumerate()
                .map(|(c, &v)| ScoreEntryJson {
                    part: self.space.part_of_index(c).expect("index in range").into(),
                    value: v.into(),
                })
                .collect(),
            witness: self.witness.as_ref().map(|w| WitnessReport {
                a: parts_json(&w.a),
                b: parts_json(&w.b),
                p_a: w.p_a.into(),
                p_b: w.p_b.into(),
                score_a: w.score_a.into(),
                score_b: w.score_b.into(),
            }),
            gap: self.gap.into(),
            modes: self.modes.iter().map(parts_json).collect(),
            argmax: self.argmax.iter().map(parts_json).collect(),
            residual: self.residual.map(NumberJson::from),
            flags: VerdictFlags {
                empirical: self.empirical,
                realizable: self.realizable,
                converged: self.converged,
            },
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub trials: usize,
    pub seed: u64,
    /// Symmetric Dirichlet concentration.
    pub alpha: f64,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
    pub verdict: VerdictConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            trials: 1000,
            seed: 0,
            alpha: 1.0,
            jobs: 1,
            verdict: VerdictConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub dist: Distribution,
    pub verdict: ConsistencyVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub trials: usize,
    /// Draws whose verdict is not empirical (closed-form or exactly realized).
    pub exact_draws: usize,
    pub undetermined: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl SearchOutcome {
    /// Counterexamples backed by an exact minimizer rather than numerics.
    pub fn exact_counterexamples(&self) -> impl Iterator<Item = &Counterexample> {
        self.counterexamples.iter().filter(|c| !c.verdict.empirical)
    }
}

/// Draws `trials` distributions from a symmetric Dirichlet over `Y` and
/// keeps every inconsistent one. Trial `i` draws from
/// `PortableRng::for_stream(seed, i)`, so the outcome is independent of
/// `jobs`.
pub fn search_counterexamples(
    kind: LossKind,
    space: &OutputSpace,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    kind.check(space)?;
    if config.alpha.is_nan() || config.alpha <= 0.0 {
        return Err(Error::InvalidConfig("alpha must be positive".into()));
    }
    let k = space.enumerate()?.len();
    let run = |trial: usize| -> Result<(Distribution, ConsistencyVerdict)> {
        let mut rng = PortableRng::for_stream(config.seed, trial as u64);
        let dist = Distribution::from_table(*space, &rng.next_dirichlet(config.alpha, k))?;
        let verdict = consistency_verdict(kind, &dist, &config.verdict)?;
        Ok((dist, verdict))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results: Vec<(Distribution, ConsistencyVerdict)> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()
    })?;

    let mut outcome = SearchOutcome {
        trials: config.trials,
        exact_draws: 0,
        undetermined: 0,
        counterexamples: Vec::new(),
    };
    for (trial, (dist, verdict)) in results.into_iter().enumerate() {
        if !verdict.empirical {
            outcome.exact_draws += 1;
        }
        match verdict.status {
            Status::Undetermined => outcome.undetermined += 1,
            Status::Inconsistent if verdict.gap > config.verdict.tie_tolerance => {
                outcome.counterexamples.push(Counterexample {
                    trial,
                    dist,
                    verdict,
                })
            }
            _ => {}
        }
    }
    Ok(outcome)
}

/// Finds a distribution over `Y` with prescribed part marginals in which
/// `a` beats every other output by at least [`MODE_MARGIN`] (and so beats
/// `b`).
///
/// An elastic LP first checks feasibility and names the marginal
/// constraints that cannot be met. A second LP maximizes the smallest
/// probability, which picks a full-support table whenever one exists; the
/// LP solution is then projected back onto the equality constraints.
pub fn reconstruct_from_marginals(
    space: &OutputSpace,
    constraints: &[(PartId, f64)],
    mode_preference: (&OutputVector, &OutputVector),
) -> Result<Distribution> {
    let (a, b) = mode_preference;
    for y in [a, b] {
        if !space.is_valid(y)? {
            return Err(Error::InvalidOutput(y.to_string()));
        }
    }
    let ys = space.enumerate()?;
    let a_idx = ys
        .iter()
        .position(|y| y == a)
        .expect("valid output is enumerated");
    let b_idx = ys
        .iter()
        .position(|y| y == b)
        .expect("valid output is enumerated");
    let rows: Vec<(usize, f64, String)> = constraints
        .iter()
        .map(|&(part, v)| Ok((space.part_index(part)?, v, format!("{part} -> {v}"))))
        .collect::<Result<_>>()?;

    let mode_rows = |problem: &mut Problem, p: &[minilp::Variable]| {
        for (i, &var) in p.iter().enumerate() {
            if i != a_idx {
                problem.add_constraint(
                    [(p[a_idx], 1.0), (var, -1.0)],
                    ComparisonOp::Ge,
                    MODE_MARGIN,
                );
            }
        }
        debug_assert!(a_idx != b_idx || ys.len() == 1);
        problem.add_constraint(
            [(p[a_idx], 1.0), (p[b_idx], -1.0)],
            ComparisonOp::Ge,
            MODE_MARGIN,
        );
    };
    let mass_row = |problem: &mut Problem, p: &[minilp::Variable]| {
        problem.add_constraint(p.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    };
    let marginal_expr = |p: &[minilp::Variable], c: usize| -> Vec<(minilp::Variable, f64)> {
        ys.iter()
            .zip(p)
            .filter(|(y, _)| y.contains(c))
            .map(|(_, &v)| (v, 1.0))
            .collect()
    };

    // elastic feasibility phase
    let mut elastic = Problem::new(OptimizationDirection::Minimize);
    let p: Vec<_> = ys
        .iter()
        .map(|_| elastic.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let mut slacks = Vec::new();
    for &(c, v, _) in &rows {
        let up = elastic.add_var(1.0, (0.0, f64::INFINITY));
        let down = elastic.add_var(1.0, (0.0, f64::INFINITY));
        let mut expr = marginal_expr(&p, c);
        expr.push((up, 1.0));
        expr.push((down, -1.0));
        elastic.add_constraint(expr, ComparisonOp::Eq, v);
        slacks.push((up, down));
    }
    mass_row(&mut elastic, &p);
    mode_rows(&mut elastic, &p);
    let phase1 = elastic.solve().map_err(|_| Error::Infeasible {
        violated: vec![format!("{a} as mode with margin {MODE_MARGIN}")],
    })?;
    let violated: Vec<String> = rows
        .iter()
        .zip(&slacks)
        .filter(|(_, &(up, down))| phase1[up] + phase1[down] > 1e-9)
        .map(|((_, _, label), _)| label.clone())
        .collect();
    if !violated.is_empty() {
        return Err(Error::Infeasible { violated });
    }

    // max-min phase
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let p: Vec<_> = ys
        .iter()
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let floor = lp.add_var(1.0, (0.0, f64::INFINITY));
    for &var in &p {
        lp.add_constraint([(var, 1.0), (floor, -1.0)], ComparisonOp::Ge, 0.0);
    }
    for &(c, v, _) in &rows {
        lp.add_constraint(marginal_expr(&p, c), ComparisonOp::Eq, v);
    }
    mass_row(&mut lp, &p);
    mode_rows(&mut lp, &p);
    let solution = lp.solve().map_err(|e| Error::Infeasible {
        violated: vec![format!("max-min phase: {e}")],
    })?;
    let raw = DVector::from_iterator(ys.len(), p.iter().map(|&v| solution[v]));

    // project onto {A p = v}
    let mut eq = DMatrix::<f64>::zeros(rows.len() + 1, ys.len());
    let mut rhs = DVector::<f64>::zeros(rows.len() + 1);
    for (r, &(c, v, _)) in rows.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            if y.contains(c) {
                eq[(r, j)] = 1.0;
            }
        }
        rhs[r] = v;
    }
    eq.row_mut(rows.len()).fill(1.0);
    rhs[rows.len()] = 1.0;
    let gram = &eq * eq.transpose();
    let correction = eq.transpose()
        * gram
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
        * (&eq * &raw - &rhs);
    let polished = raw - correction;

    let probs: Vec<f64> = polished
        .iter()
        .map(|&x| if x.abs() < 1e-15 { 0.0 } else { x })
        .collect();
    if probs.iter().any(|&x| x < 0.0) {
        return Err(Error::Infeasible {
            violated: vec!["non-negativity after projection".into()],
        });
    }
    Distribution::from_table(*space, &probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{
        builtin_fixture, fixture_witness, single_root_constraints, Fixture,
    };

    #[test]
    fn closed_form_minimizers() {
        let w = closed_form_minimizer(
            LossKind::SepDep,
            &builtin_fixture(Fixture::DepMulti2).unwrap(),
        )
        .unwrap();
        for (got, want) in w.values().iter().zip([0.7f64, 0.6, 0.4, 0.3]) {
            assert!((got - want.ln()).abs() < 1e-12);
        }
        let w = closed_form_minimizer(
            LossKind::SepBio,
            &builtin_fixture(Fixture::NerBio2).unwrap(),
        )
        .unwrap();
        for (got, want) in w.values().iter().zip([0.65f64, 0.35, 0.4, 0.3, 0.3]) {
            assert!((got - want.ln()).abs() < 1e-12);
        }
        let space = OutputSpace::bio(3).unwrap();
        let y = space.enumerate().unwrap()[5].clone();
        let w = closed_form_minimizer(
            LossKind::SepBio,
            &Distribution::point_mass(y.clone()).unwrap(),
        )
        .unwrap();
        for (c, &v) in w.values().iter().enumerate() {
            assert_eq!(
                v,
                if y.contains(c) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            );
        }
        assert!(matches!(
            closed_form_minimizer(LossKind::Nll, &builtin_fixture(Fixture::NerBio2).unwrap()),
            Err(Error::WrongLossKind { .. })
        ));
        assert!(matches!(
            closed_form_minimizer(
                LossKind::SepDep,
                &builtin_fixture(Fixture::NerBio2).unwrap()
            ),
            Err(Error::WrongSpace { .. })
        ));
    }

    #[test]
    fn realizability() {
        for f in [Fixture::NerBio2, Fixture::DepMulti2] {
            let r = nll_realizable_minimizer(&builtin_fixture(f).unwrap()).unwrap();
            assert!(
                r.residual <= REALIZABILITY_TOLERANCE,
                "{f:?}: {}",
                r.residual
            );
        }
        let space = OutputSpace::bio(2).unwrap();
        let d = Distribution::from_table(space, &[0.4, 0.0, 0.1, 0.1, 0.4]).unwrap();
        assert!(matches!(
            nll_realizable_minimizer(&d),
            Err(Error::UnsupportedOutputs { count: 1 })
        ));

        // BB - BO - OB + OO = 0 in part space, so log 16 cannot be matched
        let d = Distribution::from_table(space, &[0.39, 0.01, 0.1, 0.1, 0.4]).unwrap();
        let r = nll_realizable_minimizer(&d).unwrap();
        assert!(r.residual > 1e-3);
    }

    #[test]
    fn verdicts_on_fixtures() {
        let cfg = VerdictConfig::default();
        for f in [Fixture::NerBio2, Fixture::DepMulti2, Fixture::DepSingle3] {
            let d = builtin_fixture(f).unwrap();
            let kind = if f == Fixture::NerBio2 {
                LossKind::SepBio
            } else {
                LossKind::SepDep
            };
            let v = consistency_verdict(kind, &d, &cfg).unwrap();
            assert_eq!(v.status, Status::Inconsistent, "{f:?}");
            let w = v.witness.as_ref().unwrap();
            let (a, b) = fixture_witness(f).unwrap();
            assert_eq!(w.a, a);
            if f != Fixture::DepSingle3 {
                assert_eq!(w.b, b);
            }
            assert!(w.p_a > w.p_b && w.score_a < w.score_b);
        }
        for f in [Fixture::NerBio2, Fixture::DepMulti2] {
            let v = consistency_verdict(LossKind::Nll, &builtin_fixture(f).unwrap(), &cfg).unwrap();
            assert_eq!(v.status, Status::Consistent);
            assert_eq!(v.realizable, Some(true));
            assert!(!v.empirical);
        }
    }

    #[test]
    fn point_mass_consistent_uniform_undetermined() {
        let space = OutputSpace::dep_multi(2).unwrap();
        let y = space.enumerate().unwrap()[1].clone();
        let v = consistency_verdict(
            LossKind::SepDep,
            &Distribution::point_mass(y.clone()).unwrap(),
            &VerdictConfig::default(),
        )
        .unwrap();
        assert_eq!(v.status, Status::Consistent);
        assert_eq!(v.gap, f64::INFINITY);
        assert_eq!(v.argmax, vec![y]);

        // every output is a mode but only one attains the max score
        let v = consistency_verdict(
            LossKind::SepDep,
            &Distribution::uniform(space).unwrap(),
            &VerdictConfig::default(),
        )
        .unwrap();
        assert_eq!(v.status, Status::Undetermined);
        assert!(v.witness.is_none());
    }

    #[test]
    fn separable_argmax_is_shift_invariant() {
        let d = builtin_fixture(Fixture::NerBio2).unwrap();
        let space = *d.space();
        let w = closed_form_minimizer(LossKind::SepBio, &d).unwrap();
        let mut shifted = w.values().to_vec();
        for (k, group) in space.token_groups().into_iter().enumerate() {
            for c in group {
                shifted[c] += 3.0 * k as f64 - 1.7;
            }
        }
        let shifted = ScoreVector::new(shifted).unwrap();
        let argmax = |w: &ScoreVector| {
            let (ys, s) = enumerated_scores(&space, w).unwrap();
            let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ys.iter()
                .zip(&s)
                .filter(|(_, &x)| x >= m - 1e-9)
                .map(|(y, _)| y.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(argmax(&w), argmax(&shifted));
    }

    #[test]
    fn minimizer_matches_closed_form() {
        for (f, kind) in [
            (Fixture::NerBio2, LossKind::SepBio),
            (Fixture::DepMulti2, LossKind::SepDep),
        ] {
            let d = builtin_fixture(f).unwrap();
            let m = minimize_risk(kind, &d, &OptimizerConfig::default()).unwrap();
            assert!(m.converged);
            let w = closed_form_minimizer(kind, &d).unwrap();
            for (x, y) in m.scores.values().iter().zip(w.values()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn backtracking_also_converges() {
        let d = builtin_fixture(Fixture::DepMulti2).unwrap();
        let cfg = OptimizerConfig {
            step_rule: StepRule::Backtracking { beta: 0.5, c: 1e-4 },
            ..OptimizerConfig::default()
        };
        let m = minimize_risk(LossKind::Nll, &d, &cfg).unwrap();
        assert!(m.converged);
        let q = boltzmann_table(d.space(), &m.scores).unwrap();
        let p = d.table().unwrap();
        let tv: f64 = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 1e-6);
    }

    #[test]
    fn optimizer_config_validation() {
        let d = builtin_fixture(Fixture::DepMulti2).unwrap();
        let bad = OptimizerConfig {
            step_rule: StepRule::Fixed(0.0),
            ..OptimizerConfig::default()
        };
        assert!(minimize_risk(LossKind::SepDep, &d, &bad).is_err());
        let bad = OptimizerConfig {
            step_rule: StepRule::Backtracking { beta: 1.5, c: 0.1 },
            ..OptimizerConfig::default()
        };
        assert!(minimize_risk(LossKind::SepDep, &d, &bad).is_err());
    }

    #[test]
    fn short_budget_reports_not_converged() {
        let d = builtin_fixture(Fixture::DepMulti2).unwrap();
        let cfg = OptimizerConfig {
            max_iters: 3,
            ..OptimizerConfig::default()
        };
        let m = minimize_risk(LossKind::SepDep, &d, &cfg).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn reconstruct_two_word_fixture() {
        let space = OutputSpace::dep_multi(2).unwrap();
        let (a, b) = fixture_witness(Fixture::DepMulti2).unwrap();
        let constraints: Vec<(PartId, f64)> =
            [((0, 1), 0.7), ((0, 2), 0.6), ((1, 2), 0.4), ((2, 1), 0.3)]
                .iter()
                .map(|&((head, modifier), v)| (PartId::Arc { head, modifier }, v))
                .collect();
        let d = reconstruct_from_marginals(&space, &constraints, (&a, &b)).unwrap();
        let want = builtin_fixture(Fixture::DepMulti2).unwrap();
        for (x, y) in d.table().unwrap().iter().zip(want.table().unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruct_single_root() {
        let space = OutputSpace::dep_single(3).unwrap();
        let (a, b) = fixture_witness(Fixture::DepSingle3).unwrap();
        let constraints: Vec<(PartId, f64)> = single_root_constraints()
            .into_iter()
            .map(|((head, modifier), v)| (PartId::Arc { head, modifier }, v))
            .collect();
        let d = reconstruct_from_marginals(&space, &constraints, (&a, &b)).unwrap();
        let m = d.marginals();
        for (part, v) in &constraints {
            assert!((m.get(space.part_index(*part).unwrap()) - v).abs() < 1e-12);
        }
        assert_eq!(d.mode(), vec![a.clone()]);
        assert!(d.probability(&a) >= d.probability(&b) + MODE_MARGIN - 1e-12);
    }

    #[test]
    fn reconstruct_reports_violations() {
        let space = OutputSpace::dep_multi(2).unwrap();
        let (a, b) = fixture_witness(Fixture::DepMulti2).unwrap();
        let constraints = [(
            PartId::Arc {
                head: 0,
                modifier: 1,
            },
            1.2,
        )];
        match reconstruct_from_marginals(&space, &constraints, (&a, &b)) {
            Err(Error::Infeasible { violated }) => {
                assert_eq!(violated, vec!["(0,1) -> 1.2".to_string()])
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn search_is_deterministic_across_jobs() {
        let space = OutputSpace::bio(2).unwrap();
        let base = SearchConfig {
            trials: 64,
            seed: 3,
            ..SearchConfig::default()
        };
        let one = search_counterexamples(LossKind::SepBio, &space, &base).unwrap();
        let four =
            search_counterexamples(LossKind::SepBio, &space, &SearchConfig { jobs: 4, ..base })
                .unwrap();
        assert_eq!(one, four);
        let none = search_counterexamples(
            LossKind::SepBio,
            &space,
            &SearchConfig { trials: 0, ..base },
        )
        .unwrap();
        assert!(none.counterexamples.is_empty());
    }

    #[test]
    fn report_serializes() {
        let d = builtin_fixture(Fixture::NerBio2).unwrap();
        let v = consistency_verdict(LossKind::SepBio, &d, &VerdictConfig::default()).unwrap();
        let json = serde_json::to_value(v.report()).unwrap();
        assert_eq!(json["status"], "inconsistent");
        assert_eq!(json["loss"], "sep-bio");
        assert_eq!(
            json["witness"]["a"],
            serde_json::json!([[1, "B"], [2, "I"]])
        );
    }
}
