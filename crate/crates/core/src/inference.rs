//! MAP and marginal inference.
//!
//! Every fast algorithm has a brute-force counterpart that enumerates `Y`.
//! Ties in MAP inference resolve to the first maximizer in enumeration order;
//! the fast routines reproduce that rule (the arborescence decoder only for
//! `n` within the enumeration cap).

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::distributions::MarginalVector;
use crate::error::{Error, Result};
use crate::math::{log_add, log_sum_exp};
use crate::structures::{OutputSpace, OutputVector, SpaceKind, Tag};

/// Part scores `w`. Entries are finite or `-inf` (forbidden part).
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(Error::InvalidScore(format!(
                "{bad} is not allowed as a part score"
            )));
        }
        Ok(ScoreVector(values))
    }

    pub fn zeros(space: &OutputSpace) -> Self {
        ScoreVector(vec![0.0; space.num_parts()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `<w, y>`, summed in part order.
    pub fn score(&self, y: &OutputVector) -> f64 {
        y.parts().iter().map(|&c| self.0[c]).sum()
    }

    pub(crate) fn check(&self, space: &OutputSpace) -> Result<()> {
        if self.0.len() != space.num_parts() {
            return Err(Error::DimensionMismatch {
                expected: space.num_parts(),
                actual: self.0.len(),
            });
        }
        Ok(())
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(w: ScoreVector) -> Self {
        w.0
    }
}

/// Gibbs marginals and log-partition of the distribution `p(y) ∝ exp<w, y>`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalResult {
    pub mu: MarginalVector,
    pub log_partition: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Algo {
    Brute,
    #[default]
    Fast,
}

pub fn enumerated_scores(
    space: &OutputSpace,
    w: &ScoreVector,
) -> Result<(Arc<[OutputVector]>, Vec<f64>)> {
    w.check(space)?;
    let ys = space.enumerate()?;
    let scores = ys.iter().map(|y| w.score(y)).collect();
    Ok((ys, scores))
}

pub fn map_bruteforce(space: &OutputSpace, w: &ScoreVector) -> Result<(OutputVector, f64)> {
    let (ys, scores) = enumerated_scores(space, w)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    if scores[best] == f64::NEG_INFINITY {
        return Err(Error::NoFiniteOutput);
    }
    Ok((ys[best].clone(), scores[best]))
}

pub fn marginals_bruteforce(space: &OutputSpace, w: &ScoreVector) -> Result<MarginalResult> {
    let (ys, scores) = enumerated_scores(space, w)?;
    let log_partition = log_sum_exp(&scores);
    if log_partition == f64::NEG_INFINITY {
        return Err(Error::NoFiniteOutput);
    }
    let mut mu = vec![0.0; space.num_parts()];
    for (y, &s) in ys.iter().zip(&scores) {
        let p = (s - log_partition).exp();
        for &c in y.parts() {
            mu[c] += p;
        }
    }
    Ok(MarginalResult {
        mu: MarginalVector(mu),
        log_partition,
    })
}

pub fn map_inference(
    space: &OutputSpace,
    w: &ScoreVector,
    algo: Algo,
) -> Result<(OutputVector, f64)> {
    match (algo, space.kind()) {
        (Algo::Brute, _) => map_bruteforce(space, w),
        (Algo::Fast, SpaceKind::Bio) => viterbi_bio(space, w),
        (Algo::Fast, _) => msa(space, w),
    }
}

pub fn marginal_inference(
    space: &OutputSpace,
    w: &ScoreVector,
    algo: Algo,
) -> Result<MarginalResult> {
    match (algo, space.kind()) {
        (Algo::Brute, _) => marginals_bruteforce(space, w),
        (Algo::Fast, SpaceKind::Bio) => forward_backward_bio(space, w),
        (Algo::Fast, _) => mtt_marginals(space, w),
    }
}

// BIO chains. The DP state is whether the previous tag was B or I, i.e.
// whether an I tag is allowed next.
const CLOSED: usize = 0;
const OPEN: usize = 1;

fn require_bio(space: &OutputSpace) -> Result<()> {
    if space.kind() != SpaceKind::Bio {
        return Err(Error::WrongSpace {
            expected: "bio",
            actual: space.kind(),
        });
    }
    Ok(())
}

/// Transitions out of `state` at `position`: `(tag, part, next_state)` for
/// every tag with a finite score.
fn bio_moves<'a>(
    space: &'a OutputSpace,
    w: &'a ScoreVector,
    position: usize,
    state: usize,
) -> impl Iterator<Item = (Tag, usize, usize)> + 'a {
    Tag::ALL.into_iter().filter_map(move |tag| {
        if tag == Tag::I && state != OPEN {
            return None;
        }
        let part = space.tag_part(position, tag)?;
        if w.values()[part] == f64::NEG_INFINITY {
            return None;
        }
        let next = if tag.opens_span() { OPEN } else { CLOSED };
        Some((tag, part, next))
    })
}

/// Viterbi decoding in `O(n)`. The backward pass stores the best suffix
/// score per state; the forward pass then takes the first tag (B < I < O)
/// that attains it, which yields the lexicographically first maximizer.
pub fn viterbi_bio(space: &OutputSpace, w: &ScoreVector) -> Result<(OutputVector, f64)> {
    require_bio(space)?;
    w.check(space)?;
    let n = space.n();
    let mut best: Vec<[Option<f64>; 2]> = vec![[None, None]; n + 2];
    best[n + 1] = [Some(0.0), Some(0.0)];
    for i in (1..=n).rev() {
        for state in [CLOSED, OPEN] {
            let mut cell: Option<f64> = None;
            for (_, part, next) in bio_moves(space, w, i, state) {
                if let Some(rest) = best[i + 1][next] {
                    let v = w.values()[part] + rest;
                    if cell.is_none_or(|c| v > c) {
                        cell = Some(v);
                    }
                }
            }
            best[i][state] = cell;
        }
    }
    if best[1][CLOSED].is_none() {
        return Err(Error::NoFiniteOutput);
    }
    let mut tags = Vec::with_capacity(n);
    let mut state = CLOSED;
    for i in 1..=n {
        let target = best[i][state].expect("reachable state");
        let (tag, _, next) = bio_moves(space, w, i, state)
            .find(|&(_, part, next)| {
                best[i + 1][next].is_some_and(|rest| w.values()[part] + rest == target)
            })
            .expect("a move attains the stored maximum");
        tags.push(tag);
        state = next;
    }
    let y = OutputVector::from_tags(*space, &tags)?;
    let score = w.score(&y);
    Ok((y, score))
}

/// Forward-backward in the log domain.
pub fn forward_backward_bio(space: &OutputSpace, w: &ScoreVector) -> Result<MarginalResult> {
    require_bio(space)?;
    w.check(space)?;
    let n = space.n();
    // alpha[i][s]: prefixes over positions 1..i-1 ending in state s
    let mut alpha: Vec<[Option<f64>; 2]> = vec![[None, None]; n + 2];
    alpha[1][CLOSED] = Some(0.0);
    for i in 1..=n {
        for state in [CLOSED, OPEN] {
            let Some(a) = alpha[i][state] else { continue };
            for (_, part, next) in bio_moves(space, w, i, state) {
                alpha[i + 1][next] = log_add(alpha[i + 1][next], a + w.values()[part]);
            }
        }
    }
    // beta[i][s]: suffixes over positions i..n entered in state s
    let mut beta: Vec<[Option<f64>; 2]> = vec![[None, None]; n + 2];
    beta[n + 1] = [Some(0.0), Some(0.0)];
    for i in (1..=n).rev() {
        for state in [CLOSED, OPEN] {
            let mut cell = None;
            for (_, part, next) in bio_moves(space, w, i, state) {
                if let Some(b) = beta[i + 1][next] {
                    cell = log_add(cell, w.values()[part] + b);
                }
            }
            beta[i][state] = cell;
        }
    }
    let log_partition = beta[1][CLOSED].ok_or(Error::NoFiniteOutput)?;
    let mut mu = vec![0.0; space.num_parts()];
    for i in 1..=n {
        for state in [CLOSED, OPEN] {
            let Some(a) = alpha[i][state] else { continue };
            for (_, part, next) in bio_moves(space, w, i, state) {
                if let Some(b) = beta[i + 1][next] {
                    mu[part] += (a + w.values()[part] + b - log_partition).exp();
                }
            }
        }
    }
    Ok(MarginalResult {
        mu: MarginalVector(mu),
        log_partition,
    })
}

fn require_dep(space: &OutputSpace) -> Result<()> {
    if !space.is_dep() {
        return Err(Error::WrongSpace {
            expected: "dependency",
            actual: space.kind(),
        });
    }
    Ok(())
}

/// Dense `(n + 1) x (n + 1)` arc matrix, `None` for missing arcs.
type ArcMatrix = Vec<Vec<Option<f64>>>;

fn arc_matrix(space: &OutputSpace, w: &ScoreVector, root_penalty: f64) -> ArcMatrix {
    let n = space.n();
    let mut scores = vec![vec![None; n + 1]; n + 1];
    for (h, row) in scores.iter_mut().enumerate() {
        for (m, cell) in row.iter_mut().enumerate().skip(1) {
            if h == m {
                continue;
            }
            let v = w.values()[space.arc(h, m)];
            if v != f64::NEG_INFINITY {
                *cell = Some(if h == 0 { v - root_penalty } else { v });
            }
        }
    }
    scores
}

/// Maximum spanning arborescence rooted at 0. For single-root spaces the
/// root arcs are shifted down by `M = 1 + sum |w|`, which makes any tree with
/// one root arc beat every tree with two. The returned score is `<w, y>`
/// without the shift.
pub fn msa(space: &OutputSpace, w: &ScoreVector) -> Result<(OutputVector, f64)> {
    require_dep(space)?;
    w.check(space)?;
    let penalty = match space.kind() {
        SpaceKind::DepSingle => {
            1.0 + w
                .values()
                .iter()
                .filter(|v| v.is_finite())
                .map(|v| v.abs())
                .sum::<f64>()
        }
        _ => 0.0,
    };
    let decode = |scores: &ArcMatrix| -> Option<(OutputVector, f64)> {
        let parents = chu_liu_edmonds(scores)?;
        let y = OutputVector::from_heads(*space, &parents[1..]).ok()?;
        if !space.is_valid(&y).ok()? {
            return None;
        }
        let s = w.score(&y);
        s.is_finite().then_some((y, s))
    };
    let mut scores = arc_matrix(space, w, penalty);
    let (mut y, best) = decode(&scores).ok_or(Error::NoFiniteOutput)?;
    if space.within_cap() {
        // Walk parts in index order and keep each one that some optimal tree
        // contains; this lands on the first optimal tree in enumeration order.
        let n = space.n();
        for c in 0..space.num_parts() {
            let crate::structures::PartId::Arc { head, modifier } = space.part_of_index(c)? else {
                unreachable!("dependency part")
            };
            if scores[head][modifier].is_none() {
                continue;
            }
            let mut trial = scores.clone();
            for (h, row) in trial.iter_mut().enumerate().take(n + 1) {
                if h != head {
                    row[modifier] = None;
                }
            }
            match decode(&trial) {
                Some((z, s)) if s == best => {
                    scores = trial;
                    y = z;
                }
                _ => scores[head][modifier] = None,
            }
        }
    }
    Ok((y, best))
}

/// Chu-Liu-Edmonds by recursive cycle contraction. Returns `parent[v]` for
/// every vertex (`parent[0]` is meaningless), or `None` when some vertex
/// cannot be reached from the root.
fn chu_liu_edmonds(scores: &ArcMatrix) -> Option<Vec<usize>> {
    let size = scores.len();
    let mut parent = vec![0usize; size];
    for v in 1..size {
        let mut best: Option<(usize, f64)> = None;
        for (u, row) in scores.iter().enumerate() {
            if u == v {
                continue;
            }
            if let Some(s) = row[v] {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((u, s));
                }
            }
        }
        parent[v] = best?.0;
    }
    let Some(cycle) = find_cycle(&parent) else {
        return Some(parent);
    };

    let mut in_cycle = vec![false; size];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    // old vertex -> contracted vertex; the cycle becomes the last vertex
    let mut to_new = vec![usize::MAX; size];
    let mut to_old = Vec::new();
    for v in 0..size {
        if !in_cycle[v] {
            to_new[v] = to_old.len();
            to_old.push(v);
        }
    }
    let c = to_old.len();
    for &v in &cycle {
        to_new[v] = c;
    }
    let new_size = c + 1;
    let mut contracted: ArcMatrix = vec![vec![None; new_size]; new_size];
    let mut enter_at = vec![usize::MAX; new_size];
    let mut leave_from = vec![usize::MAX; new_size];
    for u in 0..size {
        for v in 1..size {
            let Some(s) = scores[u][v] else { continue };
            if u == v || (in_cycle[u] && in_cycle[v]) {
                continue;
            }
            let (nu, nv) = (to_new[u], to_new[v]);
            let s = if in_cycle[v] {
                s - scores[parent[v]][v].expect("cycle arc")
            } else {
                s
            };
            if contracted[nu][nv].is_none_or(|old| s > old) {
                contracted[nu][nv] = Some(s);
                if in_cycle[v] {
                    enter_at[nu] = v;
                }
                if in_cycle[u] {
                    leave_from[nv] = u;
                }
            }
        }
    }
    let sub = chu_liu_edmonds(&contracted)?;
    let mut result = parent.clone();
    for (nv, &np) in sub.iter().enumerate().skip(1) {
        if nv == c {
            let u = to_old[np];
            result[enter_at[np]] = u;
        } else {
            let v = to_old[nv];
            result[v] = if np == c { leave_from[nv] } else { to_old[np] };
        }
    }
    Some(result)
}

fn find_cycle(parent: &[usize]) -> Option<Vec<usize>> {
    let size = parent.len();
    // 0 = unvisited, 1 = on current walk, 2 = done
    let mut state = vec![0u8; size];
    state[0] = 2;
    for start in 1..size {
        let mut walk = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            walk.push(v);
            v = parent[v];
        }
        if state[v] == 1 {
            let pos = walk
                .iter()
                .position(|&u| u == v)
                .expect("cycle start on walk");
            return Some(walk[pos..].to_vec());
        }
        for u in walk {
            state[u] = 2;
        }
    }
    None
}

/// Smallest accepted Laplacian determinant after column shifting.
const MIN_DETERMINANT: f64 = 1e-300;

/// Marginals and log-partition via the matrix-tree theorem.
///
/// Scores into each modifier are shifted by their maximum before
/// exponentiation; the shifts are added back to the log-partition. Marginals
/// are read off the inverse Laplacian as `dlog det L / dw`.
pub fn mtt_marginals(space: &OutputSpace, w: &ScoreVector) -> Result<MarginalResult> {
    require_dep(space)?;
    w.check(space)?;
    let n = space.n();
    let single = space.kind() == SpaceKind::DepSingle;

    let mut shifts = vec![0.0; n + 1];
    for (m, shift) in shifts.iter_mut().enumerate().skip(1) {
        let max = (0..=n)
            .filter(|&h| h != m)
            .map(|h| w.values()[space.arc(h, m)])
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::NoFiniteOutput);
        }
        *shift = max;
    }

    // Laplacian entries touched by each arc: (row, col, sign), words 1-based
    // mapped to 0-based rows and columns.
    let entries = |h: usize, m: usize| -> Vec<(usize, usize, f64)> {
        let mut e = Vec::with_capacity(2);
        if single {
            if h == 0 {
                e.push((0, m - 1, 1.0));
            } else {
                if m != 1 {
                    e.push((m - 1, m - 1, 1.0));
                }
                if h != 1 {
                    e.push((h - 1, m - 1, -1.0));
                }
            }
        } else {
            e.push((m - 1, m - 1, 1.0));
            if h != 0 {
                e.push((h - 1, m - 1, -1.0));
            }
        }
        e
    };

    let mut weights = vec![0.0; space.num_parts()];
    let mut laplacian = DMatrix::<f64>::zeros(n, n);
    #[allow(clippy::needless_range_loop)]
    for m in 1..=n {
        for h in (0..=n).filter(|&h| h != m) {
            let c = space.arc(h, m);
            let a = (w.values()[c] - shifts[m]).exp();
            weights[c] = a;
            for (i, j, sign) in entries(h, m) {
                laplacian[(i, j)] += sign * a;
            }
        }
    }

    let lu = laplacian.lu();
    let u = lu.u();
    let mut log_det = 0.0;
    let mut sign = lu.p().determinant::<f64>();
    for k in 0..n {
        let d = u[(k, k)];
        log_det += d.abs().ln();
        sign *= d.signum();
    }
    if sign.is_nan() || sign <= 0.0 || !log_det.is_finite() || log_det < MIN_DETERMINANT.ln() {
        return Err(Error::NumericallySingular { log_det });
    }
    let inverse = lu
        .try_inverse()
        .ok_or(Error::NumericallySingular { log_det })?;

    let mut mu = vec![0.0; space.num_parts()];
    for m in 1..=n {
        for h in (0..=n).filter(|&h| h != m) {
            let c = space.arc(h, m);
            if weights[c] == 0.0 {
                continue;
            }
            let grad: f64 = entries(h, m)
                .into_iter()
                .map(|(i, j, sign)| sign * inverse[(j, i)])
                .sum();
            mu[c] = weights[c] * grad;
        }
    }
    Ok(MarginalResult {
        mu: MarginalVector(mu),
        log_partition: log_det + shifts.iter().sum::<f64>(),
    })
}
