//! Explicit conditional distributions over an enumerated output space.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io;
use crate::rng::PortableRng;
use crate::structures::{OutputSpace, OutputVector, Tag};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Probabilities closer than this are treated as tied.
pub const PROB_TIE_TOLERANCE: f64 = 1e-12;

/// A probability table over `Y`. Outcomes are kept in enumeration order and
/// zero-mass outcomes are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    space: OutputSpace,
    outcomes: Vec<(OutputVector, f64)>,
}

impl Distribution {
    pub fn new(space: OutputSpace, outcomes: Vec<(OutputVector, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(outcomes.len());
        let mut total = 0.0;
        for (y, p) in outcomes {
            if *y.space() != space {
                return Err(Error::InvalidDistribution(format!(
                    "output {y} does not belong to {space}"
                )));
            }
            if !space.is_valid(&y)? {
                return Err(Error::InvalidDistribution(format!("invalid output {y}")));
            }
            if !seen.insert(y.clone()) {
                return Err(Error::InvalidDistribution(format!("duplicate output {y}")));
            }
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} of {y} is outside [0, 1]"
                )));
            }
            total += p;
            if p > 0.0 {
                kept.push((y, p));
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        kept.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Distribution {
            space,
            outcomes: kept,
        })
    }

    /// Builds a distribution from masses aligned with `space.enumerate()`.
    pub fn from_table(space: OutputSpace, probs: &[f64]) -> Result<Self> {
        let ys = space.enumerate()?;
        if ys.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                actual: probs.len(),
            });
        }
        Self::new(
            space,
            ys.iter().cloned().zip(probs.iter().copied()).collect(),
        )
    }

    pub fn point_mass(y: OutputVector) -> Result<Self> {
        Self::new(*y.space(), vec![(y, 1.0)])
    }

    pub fn uniform(space: OutputSpace) -> Result<Self> {
        let ys = space.enumerate()?;
        let p = 1.0 / ys.len() as f64;
        Self::new(space, ys.iter().map(|y| (y.clone(), p)).collect())
    }

    pub fn space(&self) -> &OutputSpace {
        &self.space
    }

    /// Support in enumeration order.
    pub fn outcomes(&self) -> &[(OutputVector, f64)] {
        &self.outcomes
    }

    pub fn probability(&self, y: &OutputVector) -> f64 {
        self.outcomes
            .binary_search_by(|(z, _)| z.cmp(y))
            .map(|i| self.outcomes[i].1)
            .unwrap_or(0.0)
    }

    /// Masses aligned with `space.enumerate()`, zeros included.
    pub fn table(&self) -> Result<Vec<f64>> {
        Ok(self
            .space
            .enumerate()?
            .iter()
            .map(|y| self.probability(y))
            .collect())
    }

    pub fn has_full_support(&self) -> Result<bool> {
        Ok(self.outcomes.len() == self.space.enumerate()?.len())
    }

    /// `values[c]` is the total mass of outputs containing part `c`.
    pub fn marginals(&self) -> MarginalVector {
        let mut values = vec![0.0; self.space.num_parts()];
        for (y, p) in &self.outcomes {
            for &c in y.parts() {
                values[c] += p;
            }
        }
        MarginalVector(values)
    }

    /// Every output attaining the largest probability (ties within
    /// [`PROB_TIE_TOLERANCE`]), in enumeration order.
    pub fn mode(&self) -> Vec<OutputVector> {
        let best = self.max_probability();
        self.outcomes
            .iter()
            .filter(|(_, p)| *p >= best - PROB_TIE_TOLERANCE)
            .map(|(y, _)| y.clone())
            .collect()
    }

    pub fn max_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| *p).fold(0.0, f64::max)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.outcomes.iter().map(|(_, p)| p * p.ln()).sum::<f64>()
    }

    /// `count` i.i.d. draws by inverse CDF over the support order.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<OutputVector> {
        let mut cumulative = Vec::with_capacity(self.outcomes.len());
        let mut acc = 0.0;
        for (_, p) in &self.outcomes {
            acc += p;
            cumulative.push(acc);
        }
        let mut rng = PortableRng::new(seed);
        (0..count)
            .map(|_| {
                let u = rng.next_f64();
                let i = cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(self.outcomes.len() - 1);
                self.outcomes[i].0.clone()
            })
            .collect()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "distribution over {}", self.space)?;
        for (y, p) in &self.outcomes {
            writeln!(f, "  {p:.6}  {y}")?;
        }
        Ok(())
    }
}

/// Part marginals of a distribution, indexed by dense part index.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalVector(pub Vec<f64>);

impl MarginalVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, part: usize) -> f64 {
        self.0[part]
    }
}

/// The hand-built distributions behind the three counterexamples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixture {
    /// BIO tagging over two tokens.
    NerBio2,
    /// Unconstrained arborescences over two words.
    DepMulti2,
    /// Single-root arborescences over three words, reconstructed from four
    /// arc marginals. The counterexample is stated with `n = 4`, but both of
    /// its witness trees carry exactly three arcs, so three words is the
    /// reading used here.
    DepSingle3,
}

impl Fixture {
    pub const ALL: [Fixture; 3] = [Fixture::NerBio2, Fixture::DepMulti2, Fixture::DepSingle3];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::NerBio2 => "ner",
            Fixture::DepMulti2 => "dep",
            Fixture::DepSingle3 => "singleroot",
        }
    }

    /// File name used for the shipped fixture files.
    pub fn file_name(self) -> &'static str {
        match self {
            Fixture::NerBio2 => "ner_bio2.json",
            Fixture::DepMulti2 => "dep_multi2.json",
            Fixture::DepSingle3 => "dep_single3.json",
        }
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ner" | "ner_bio2" => Ok(Fixture::NerBio2),
            "dep" | "dep_multi2" => Ok(Fixture::DepMulti2),
            "singleroot" | "dep_single3" => Ok(Fixture::DepSingle3),
            other => Err(Error::Parse(format!("unknown fixture {other:?}"))),
        }
    }
}

const DEP_SINGLE3_JSON: &str = include_str!("../fixtures/dep_single3.json");

pub fn builtin_fixture(fixture: Fixture) -> Result<Distribution> {
    match fixture {
        Fixture::NerBio2 => {
            let space = OutputSpace::bio(2)?;
            let seq = |a, b| OutputVector::from_tags(space, &[a, b]);
            use Tag::*;
            Distribution::new(
                space,
                vec![
                    (seq(B, B)?, 0.20),
                    (seq(B, I)?, 0.30),
                    (seq(B, O)?, 0.15),
                    (seq(O, B)?, 0.20),
                    (seq(O, O)?, 0.15),
                ],
            )
        }
        Fixture::DepMulti2 => {
            let space = OutputSpace::dep_multi(2)?;
            let tree = |arcs: &[(usize, usize)]| OutputVector::from_arcs(space, arcs);
            Distribution::new(
                space,
                vec![
                    (tree(&[(0, 1), (1, 2)])?, 0.4),
                    (tree(&[(0, 2), (2, 1)])?, 0.3),
                    (tree(&[(0, 1), (0, 2)])?, 0.3),
                ],
            )
        }
        Fixture::DepSingle3 => io::distribution_from_json(DEP_SINGLE3_JSON),
    }
}

/// The two outputs `(a, b)` each counterexample compares: `a` is the most
/// probable output, `b` the one the token-separable minimizer prefers.
pub fn fixture_witness(fixture: Fixture) -> Result<(OutputVector, OutputVector)> {
    match fixture {
        Fixture::NerBio2 => {
            let space = OutputSpace::bio(2)?;
            Ok((
                OutputVector::from_tags(space, &[Tag::B, Tag::I])?,
                OutputVector::from_tags(space, &[Tag::B, Tag::B])?,
            ))
        }
        Fixture::DepMulti2 => {
            let space = OutputSpace::dep_multi(2)?;
            Ok((
                OutputVector::from_arcs(space, &[(0, 1), (1, 2)])?,
                OutputVector::from_arcs(space, &[(0, 1), (0, 2)])?,
            ))
        }
        Fixture::DepSingle3 => {
            let space = OutputSpace::dep_single(3)?;
            Ok((
                OutputVector::from_arcs(space, &[(0, 1), (1, 2), (1, 3)])?,
                OutputVector::from_arcs(space, &[(0, 1), (1, 2), (2, 3)])?,
            ))
        }
    }
}

/// Arc marginals that pin down the single-root fixture.
pub fn single_root_constraints() -> Vec<((usize, usize), f64)> {
    vec![
        ((0, 1), 0.55),
        ((1, 2), 0.55),
        ((1, 3), 0.4),
        ((2, 3), 0.45),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::PartId;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ner_fixture_marginals() {
        let d = builtin_fixture(Fixture::NerBio2).unwrap();
        let m = d.marginals();
        for (got, want) in m.values().iter().zip([0.65, 0.35, 0.4, 0.3, 0.3]) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
        // each position carries one tag
        assert!(close(m.values().iter().sum::<f64>(), 2.0, 1e-12));
    }

    #[test]
    fn dep_fixture_marginals() {
        let d = builtin_fixture(Fixture::DepMulti2).unwrap();
        let m = d.marginals();
        for (got, want) in m.values().iter().zip([0.7, 0.6, 0.4, 0.3]) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
    }

    #[test]
    fn single_root_fixture_marginals() {
        let d = builtin_fixture(Fixture::DepSingle3).unwrap();
        let space = *d.space();
        let m = d.marginals();
        for ((h, m_), v) in single_root_constraints() {
            let c = space
                .part_index(PartId::Arc {
                    head: h,
                    modifier: m_,
                })
                .unwrap();
            assert!(close(m.get(c), v, 1e-9));
        }
        assert!(close(m.values().iter().sum::<f64>(), 3.0, 1e-9));
    }

    #[test]
    fn fixture_modes_are_the_witness_a() {
        for f in Fixture::ALL {
            let d = builtin_fixture(f).unwrap();
            let (a, b) = fixture_witness(f).unwrap();
            assert_eq!(d.mode(), vec![a.clone()], "{f:?}");
            assert!(d.probability(&a) > d.probability(&b));
        }
    }

    #[test]
    fn ner_realizability_identity() {
        let d = builtin_fixture(Fixture::NerBio2).unwrap();
        let p = d.table().unwrap(); // BB BI BO OB OO
        let lhs = p[0].ln() - p[2].ln() - p[3].ln() + p[4].ln();
        assert!(lhs.abs() < 1e-12);
    }

    #[test]
    fn point_mass_marginals_are_indicator() {
        let space = OutputSpace::dep_single(3).unwrap();
        let y = space.enumerate().unwrap()[4].clone();
        let d = Distribution::point_mass(y.clone()).unwrap();
        let bits = y.bits();
        for (c, v) in d.marginals().values().iter().enumerate() {
            assert_eq!(*v, if bits[c] { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn uniform_mode_is_everything() {
        let space = OutputSpace::bio(3).unwrap();
        let d = Distribution::uniform(space).unwrap();
        assert_eq!(d.mode(), space.enumerate().unwrap().to_vec());
    }

    #[test]
    fn rejects_bad_tables() {
        let space = OutputSpace::dep_multi(2).unwrap();
        let ys = space.enumerate().unwrap();
        let short = Distribution::new(space, vec![(ys[0].clone(), 0.5), (ys[1].clone(), 0.4)]);
        assert!(matches!(short, Err(Error::InvalidDistribution(_))));
        let dup = Distribution::new(space, vec![(ys[0].clone(), 0.5), (ys[0].clone(), 0.5)]);
        assert!(matches!(dup, Err(Error::InvalidDistribution(_))));
        let cyc = OutputVector::from_arcs(space, &[(1, 2), (2, 1)]).unwrap();
        assert!(Distribution::new(space, vec![(cyc, 1.0)]).is_err());
    }

    #[test]
    fn sampling_edge_cases() {
        let space = OutputSpace::bio(2).unwrap();
        let y = space.enumerate().unwrap()[3].clone();
        let d = Distribution::point_mass(y.clone()).unwrap();
        assert_eq!(d.sample(123, 5), vec![y; 5]);
        assert!(d.sample(1, 0).is_empty());
        let f = builtin_fixture(Fixture::NerBio2).unwrap();
        assert_eq!(f.sample(77, 50), f.sample(77, 50));
    }

    #[test]
    fn sampling_frequencies() {
        let d = builtin_fixture(Fixture::DepMulti2).unwrap();
        let count = 100_000;
        let draws = d.sample(1, count);
        for (y, p) in d.outcomes() {
            let k = draws.iter().filter(|z| *z == y).count() as f64;
            let sigma = (count as f64 * p * (1.0 - p)).sqrt();
            assert!((k - count as f64 * p).abs() <= 3.0 * sigma, "{y}: {k}");
        }
    }
}
