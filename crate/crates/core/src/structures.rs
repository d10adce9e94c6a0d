//! Output spaces, their part sets and exhaustive enumeration.
//!
//! Every output is a binary indicator over a finite part set `C`. Parts are
//! stored densely in a fixed order so that score files and test vectors are
//! bit-exact:
//!
//! * BIO tagging over `n` tokens: position-major, tag order `B, I, O`. The
//!   pair `(1, I)` is never a part (an inside tag cannot open a sentence), so
//!   `|C| = 3n - 1`.
//! * Arborescences over `n` words: arcs `(h, m)` with `h in 0..=n`,
//!   `m in 1..=n`, `h != m`, ordered by head then modifier, so `|C| = n^2`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BIO_CAP: usize = 8;
pub const DEFAULT_DEP_CAP: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpaceKind {
    #[serde(rename = "bio")]
    Bio,
    #[serde(rename = "dep_multi")]
    DepMulti,
    #[serde(rename = "dep_single")]
    DepSingle,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Bio => "bio",
            SpaceKind::DepMulti => "dep_multi",
            SpaceKind::DepSingle => "dep_single",
        }
    }

    pub fn is_dep(self) -> bool {
        matches!(self, SpaceKind::DepMulti | SpaceKind::DepSingle)
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bio" => Ok(SpaceKind::Bio),
            "dep_multi" | "dep-multi" | "dep" => Ok(SpaceKind::DepMulti),
            "dep_single" | "dep-single" | "singleroot" => Ok(SpaceKind::DepSingle),
            other => Err(Error::Parse(format!("unknown space kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    B,
    I,
    O,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::B, Tag::I, Tag::O];

    fn offset(self) -> usize {
        match self {
            Tag::B => 0,
            Tag::I => 1,
            Tag::O => 2,
        }
    }

    /// Whether an `I` tag may follow this tag.
    pub fn opens_span(self) -> bool {
        matches!(self, Tag::B | Tag::I)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::B => "B",
            Tag::I => "I",
            Tag::O => "O",
        };
        f.write_str(s)
    }
}

/// A single coordinate of an output vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartId {
    /// Tag at a 1-based token position.
    Tag { position: usize, tag: Tag },
    /// Dependency from `head` (0 is the artificial root) to `modifier`.
    Arc { head: usize, modifier: usize },
}

impl fmt::Display for PartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartId::Tag { position, tag } => write!(f, "({position},{tag})"),
            PartId::Arc { head, modifier } => write!(f, "({head},{modifier})"),
        }
    }
}

type EnumerationCache = HashMap<(SpaceKind, usize), Arc<[OutputVector]>>;

/// A family `Y` of structured outputs over `n` tokens.
///
/// Equality and ordering only look at `kind` and `n`; the enumeration cap is
/// configuration.
#[derive(Clone, Copy, Debug)]
pub struct OutputSpace {
    kind: SpaceKind,
    n: usize,
    cap: usize,
}

impl PartialEq for OutputSpace {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.n == other.n
    }
}

impl Eq for OutputSpace {}

impl Hash for OutputSpace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.n.hash(state);
    }
}

impl PartialOrd for OutputSpace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OutputSpace {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.kind, self.n).cmp(&(other.kind, other.n))
    }
}

impl fmt::Display for OutputSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={})", self.kind.name(), self.n)
    }
}

impl OutputSpace {
    pub fn new(kind: SpaceKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "a space needs at least one token".into(),
            ));
        }
        let cap = match kind {
            SpaceKind::Bio => DEFAULT_BIO_CAP,
            SpaceKind::DepMulti | SpaceKind::DepSingle => DEFAULT_DEP_CAP,
        };
        Ok(OutputSpace { kind, n, cap })
    }

    pub fn bio(n: usize) -> Result<Self> {
        Self::new(SpaceKind::Bio, n)
    }

    pub fn dep_multi(n: usize) -> Result<Self> {
        Self::new(SpaceKind::DepMulti, n)
    }

    pub fn dep_single(n: usize) -> Result<Self> {
        Self::new(SpaceKind::DepSingle, n)
    }

    /// Overrides the largest `n` for which [`enumerate`](Self::enumerate) is allowed.
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn is_dep(&self) -> bool {
        self.kind.is_dep()
    }

    pub fn within_cap(&self) -> bool {
        self.n <= self.cap
    }

    /// `|C|`.
    pub fn num_parts(&self) -> usize {
        match self.kind {
            SpaceKind::Bio => 3 * self.n - 1,
            SpaceKind::DepMulti | SpaceKind::DepSingle => self.n * self.n,
        }
    }

    pub fn part_index(&self, part: PartId) -> Result<usize> {
        let n = self.n;
        match (self.kind, part) {
            (SpaceKind::Bio, PartId::Tag { position, tag }) => {
                if position == 0 || position > n || (position == 1 && tag == Tag::I) {
                    return Err(self.illegal(part));
                }
                if position == 1 {
                    Ok(if tag == Tag::B { 0 } else { 1 })
                } else {
                    Ok(2 + 3 * (position - 2) + tag.offset())
                }
            }
            (kind, PartId::Arc { head, modifier }) if kind.is_dep() => {
                if modifier == 0 || modifier > n || head > n || head == modifier {
                    return Err(self.illegal(part));
                }
                if head == 0 {
                    Ok(modifier - 1)
                } else {
                    let col = if modifier < head {
                        modifier - 1
                    } else {
                        modifier - 2
                    };
                    Ok(n + (head - 1) * (n - 1) + col)
                }
            }
            _ => Err(self.illegal(part)),
        }
    }

    pub fn part_of_index(&self, index: usize) -> Result<PartId> {
        let n = self.n;
        if index >= self.num_parts() {
            return Err(Error::DimensionMismatch {
                expected: self.num_parts(),
                actual: index + 1,
            });
        }
        Ok(match self.kind {
            SpaceKind::Bio => {
                if index < 2 {
                    PartId::Tag {
                        position: 1,
                        tag: if index == 0 { Tag::B } else { Tag::O },
                    }
                } else {
                    let rel = index - 2;
                    PartId::Tag {
                        position: 2 + rel / 3,
                        tag: Tag::ALL[rel % 3],
                    }
                }
            }
            SpaceKind::DepMulti | SpaceKind::DepSingle => {
                if index < n {
                    PartId::Arc {
                        head: 0,
                        modifier: index + 1,
                    }
                } else {
                    let rel = index - n;
                    let head = 1 + rel / (n - 1);
                    let col = rel % (n - 1);
                    let modifier = if col + 1 < head { col + 1 } else { col + 2 };
                    PartId::Arc { head, modifier }
                }
            }
        })
    }

    /// Dense index of the arc `(head, modifier)`; panics on illegal arcs.
    pub(crate) fn arc(&self, head: usize, modifier: usize) -> usize {
        self.part_index(PartId::Arc { head, modifier })
            .expect("legal arc")
    }

    /// Dense index of `(position, tag)`; `None` for the excluded `(1, I)`.
    pub(crate) fn tag_part(&self, position: usize, tag: Tag) -> Option<usize> {
        self.part_index(PartId::Tag { position, tag }).ok()
    }

    /// Part groups that a token-separable loss normalizes over: the tags of
    /// each position for BIO, the candidate heads of each modifier for
    /// dependency spaces.
    pub fn token_groups(&self) -> Vec<Vec<usize>> {
        match self.kind {
            SpaceKind::Bio => (1..=self.n)
                .map(|i| {
                    Tag::ALL
                        .iter()
                        .filter_map(|&t| self.tag_part(i, t))
                        .collect()
                })
                .collect(),
            SpaceKind::DepMulti | SpaceKind::DepSingle => (1..=self.n)
                .map(|m| {
                    (0..=self.n)
                        .filter(|&h| h != m)
                        .map(|h| self.arc(h, m))
                        .collect()
                })
                .collect(),
        }
    }

    fn illegal(&self, part: PartId) -> Error {
        Error::IllegalPart {
            part: part.to_string(),
            space: self.to_string(),
        }
    }

    pub fn is_valid(&self, y: &OutputVector) -> Result<bool> {
        if y.space != *self {
            return Err(Error::SpaceMismatch {
                left: self.to_string(),
                right: y.space.to_string(),
            });
        }
        Ok(match self.kind {
            SpaceKind::Bio => y.tags().is_some_and(|tags| bio_sequence_ok(&tags)),
            SpaceKind::DepMulti | SpaceKind::DepSingle => match y.heads() {
                Some(heads) => self.heads_ok(&heads),
                None => false,
            },
        })
    }

    /// `heads[m - 1]` is the head of word `m`.
    fn heads_ok(&self, heads: &[usize]) -> bool {
        let n = self.n;
        if heads.len() != n {
            return false;
        }
        if self.kind == SpaceKind::DepSingle && heads.iter().filter(|&&h| h == 0).count() != 1 {
            return false;
        }
        // 0 = unvisited, 1 = on current path, 2 = reaches the root
        let mut state = vec![0u8; n + 1];
        state[0] = 2;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                path.push(v);
                let h = heads[v - 1];
                if h > n || h == v {
                    return false;
                }
                v = h;
            }
            if state[v] == 1 {
                return false;
            }
            for u in path {
                state[u] = 2;
            }
        }
        true
    }

    /// All outputs of the space in enumeration order (lexicographic on the
    /// sorted list of selected part indices).
    ///
    /// Results are memoized per `(kind, n)`.
    pub fn enumerate(&self) -> Result<Arc<[OutputVector]>> {
        if !self.within_cap() {
            return Err(Error::SpaceTooLarge {
                space: self.to_string(),
                cap: self.cap,
            });
        }
        static CACHE: OnceLock<Mutex<EnumerationCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache
            .lock()
            .expect("enumeration cache")
            .get(&(self.kind, self.n))
        {
            return Ok(hit.clone());
        }
        let mut outputs = match self.kind {
            SpaceKind::Bio => self.enumerate_bio(),
            SpaceKind::DepMulti | SpaceKind::DepSingle => self.enumerate_dep(),
        };
        outputs.sort();
        let outputs: Arc<[OutputVector]> = outputs.into();
        cache
            .lock()
            .expect("enumeration cache")
            .insert((self.kind, self.n), outputs.clone());
        Ok(outputs)
    }

    fn enumerate_bio(&self) -> Vec<OutputVector> {
        fn extend(space: &OutputSpace, prefix: &mut Vec<Tag>, out: &mut Vec<OutputVector>) {
            if prefix.len() == space.n {
                out.push(OutputVector::from_tags(*space, prefix).expect("valid prefix"));
                return;
            }
            let position = prefix.len() + 1;
            for tag in Tag::ALL {
                let allowed = match tag {
                    Tag::I => position > 1 && prefix[position - 2].opens_span(),
                    _ => true,
                };
                if allowed {
                    prefix.push(tag);
                    extend(space, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        extend(self, &mut Vec::with_capacity(self.n), &mut out);
        out
    }

    fn enumerate_dep(&self) -> Vec<OutputVector> {
        let n = self.n;
        let mut out = Vec::new();
        // odometer over head assignments, skipping self loops at check time
        let mut heads = vec![0usize; n];
        loop {
            if self.heads_ok(&heads) {
                out.push(OutputVector::from_heads(*self, &heads).expect("checked heads"));
            }
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                heads[k] += 1;
                if heads[k] <= n {
                    break;
                }
                heads[k] = 0;
                k += 1;
            }
        }
    }
}

fn bio_sequence_ok(tags: &[Tag]) -> bool {
    tags.first().is_some_and(|&t| t != Tag::I)
        && tags.windows(2).all(|w| w[1] != Tag::I || w[0].opens_span())
}

/// One structured output, stored as the sorted list of selected parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutputVector {
    space: OutputSpace,
    parts: Vec<usize>,
}

impl PartialOrd for OutputVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OutputVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.space
            .cmp(&other.space)
            .then_with(|| self.parts.cmp(&other.parts))
    }
}

impl OutputVector {
    /// Builds a vector from dense part indices (duplicates collapse).
    pub fn from_parts(space: OutputSpace, parts: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut parts: Vec<usize> = parts.into_iter().collect();
        parts.sort_unstable();
        parts.dedup();
        if let Some(&last) = parts.last() {
            if last >= space.num_parts() {
                return Err(Error::DimensionMismatch {
                    expected: space.num_parts(),
                    actual: last + 1,
                });
            }
        }
        Ok(OutputVector { space, parts })
    }

    pub fn from_bits(space: OutputSpace, bits: &[bool]) -> Result<Self> {
        if bits.len() != space.num_parts() {
            return Err(Error::DimensionMismatch {
                expected: space.num_parts(),
                actual: bits.len(),
            });
        }
        Self::from_parts(
            space,
            bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i),
        )
    }

    pub fn from_part_ids(space: OutputSpace, parts: &[PartId]) -> Result<Self> {
        let idx = parts
            .iter()
            .map(|&p| space.part_index(p))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(space, idx)
    }

    /// BIO output from one tag per position. Fails on `I` at position 1.
    pub fn from_tags(space: OutputSpace, tags: &[Tag]) -> Result<Self> {
        if space.kind != SpaceKind::Bio {
            return Err(Error::WrongSpace {
                expected: "bio",
                actual: space.kind,
            });
        }
        if tags.len() != space.n {
            return Err(Error::DimensionMismatch {
                expected: space.n,
                actual: tags.len(),
            });
        }
        let ids: Vec<PartId> = tags
            .iter()
            .enumerate()
            .map(|(i, &tag)| PartId::Tag {
                position: i + 1,
                tag,
            })
            .collect();
        Self::from_part_ids(space, &ids)
    }

    /// Dependency output from `heads[m - 1]` = head of word `m`.
    pub fn from_heads(space: OutputSpace, heads: &[usize]) -> Result<Self> {
        if !space.is_dep() {
            return Err(Error::WrongSpace {
                expected: "dependency",
                actual: space.kind,
            });
        }
        if heads.len() != space.n {
            return Err(Error::DimensionMismatch {
                expected: space.n,
                actual: heads.len(),
            });
        }
        let ids: Vec<PartId> = heads
            .iter()
            .enumerate()
            .map(|(i, &head)| PartId::Arc {
                head,
                modifier: i + 1,
            })
            .collect();
        Self::from_part_ids(space, &ids)
    }

    /// Dependency output from a list of `(head, modifier)` arcs.
    pub fn from_arcs(space: OutputSpace, arcs: &[(usize, usize)]) -> Result<Self> {
        let ids: Vec<PartId> = arcs
            .iter()
            .map(|&(head, modifier)| PartId::Arc { head, modifier })
            .collect();
        Self::from_part_ids(space, &ids)
    }

    pub fn space(&self) -> &OutputSpace {
        &self.space
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn contains(&self, part: usize) -> bool {
        self.parts.binary_search(&part).is_ok()
    }

    pub fn bits(&self) -> Vec<bool> {
        let mut bits = vec![false; self.space.num_parts()];
        for &p in &self.parts {
            bits[p] = true;
        }
        bits
    }

    pub fn part_ids(&self) -> Vec<PartId> {
        self.parts
            .iter()
            .map(|&p| self.space.part_of_index(p).expect("index in range"))
            .collect()
    }

    /// Tag sequence, if every position carries exactly one tag.
    pub fn tags(&self) -> Option<Vec<Tag>> {
        if self.space.kind != SpaceKind::Bio {
            return None;
        }
        let mut tags: Vec<Option<Tag>> = vec![None; self.space.n];
        for id in self.part_ids() {
            if let PartId::Tag { position, tag } = id {
                if tags[position - 1].replace(tag).is_some() {
                    return None;
                }
            }
        }
        tags.into_iter().collect()
    }

    /// Head of every word, if every word has exactly one incoming arc.
    pub fn heads(&self) -> Option<Vec<usize>> {
        if !self.space.is_dep() {
            return None;
        }
        let mut heads: Vec<Option<usize>> = vec![None; self.space.n];
        for id in self.part_ids() {
            if let PartId::Arc { head, modifier } = id {
                if heads[modifier - 1].replace(head).is_some() {
                    return None;
                }
            }
        }
        heads.into_iter().collect()
    }
}

impl fmt::Display for OutputVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(tags) = self.tags() {
            let s: Vec<String> = tags.iter().map(Tag::to_string).collect();
            return write!(f, "({})", s.join(","));
        }
        let s: Vec<String> = self.part_ids().iter().map(PartId::to_string).collect();
        write!(f, "{{{}}}", s.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag_seq(s: &str) -> Vec<Tag> {
        s.chars()
            .map(|c| match c {
                'B' => Tag::B,
                'I' => Tag::I,
                'O' => Tag::O,
                _ => panic!("bad tag"),
            })
            .collect()
    }

    #[test]
    fn bio_part_indices() {
        let s = OutputSpace::bio(2).unwrap();
        let idx = |position, tag| s.part_index(PartId::Tag { position, tag }).unwrap();
        assert_eq!(idx(1, Tag::B), 0);
        assert_eq!(idx(1, Tag::O), 1);
        assert_eq!(idx(2, Tag::B), 2);
        assert_eq!(idx(2, Tag::I), 3);
        assert_eq!(idx(2, Tag::O), 4);
        assert!(matches!(
            s.part_index(PartId::Tag {
                position: 1,
                tag: Tag::I
            }),
            Err(Error::IllegalPart { .. })
        ));
        assert!(s
            .part_index(PartId::Tag {
                position: 3,
                tag: Tag::B
            })
            .is_err());
    }

    #[test]
    fn dep_part_indices() {
        let s = OutputSpace::dep_multi(2).unwrap();
        let idx = |head, modifier| s.part_index(PartId::Arc { head, modifier }).unwrap();
        assert_eq!(idx(0, 1), 0);
        assert_eq!(idx(0, 2), 1);
        assert_eq!(idx(1, 2), 2);
        assert_eq!(idx(2, 1), 3);
        assert!(s
            .part_index(PartId::Arc {
                head: 1,
                modifier: 1
            })
            .is_err());
        assert!(s
            .part_index(PartId::Arc {
                head: 1,
                modifier: 0
            })
            .is_err());
        assert!(s
            .part_index(PartId::Tag {
                position: 1,
                tag: Tag::B
            })
            .is_err());
    }

    #[test]
    fn part_index_is_a_bijection() {
        for n in 1..=7 {
            for kind in [SpaceKind::Bio, SpaceKind::DepMulti, SpaceKind::DepSingle] {
                let s = OutputSpace::new(kind, n).unwrap();
                for i in 0..s.num_parts() {
                    let p = s.part_of_index(i).unwrap();
                    assert_eq!(s.part_index(p).unwrap(), i, "{s} {p}");
                }
                assert!(s.part_of_index(s.num_parts()).is_err());
            }
        }
    }

    #[test]
    fn validity_examples() {
        let bio = OutputSpace::bio(2).unwrap();
        let y = OutputVector::from_tags(bio, &tag_seq("BI")).unwrap();
        assert!(bio.is_valid(&y).unwrap());
        let y = OutputVector::from_tags(bio, &tag_seq("OI")).unwrap();
        assert!(!bio.is_valid(&y).unwrap());
        assert!(OutputVector::from_tags(bio, &tag_seq("IB")).is_err());
        // two tags on one position
        let y = OutputVector::from_parts(bio, [0, 1, 2]).unwrap();
        assert!(!bio.is_valid(&y).unwrap());

        let multi = OutputSpace::dep_multi(2).unwrap();
        let single = OutputSpace::dep_single(2).unwrap();
        let flat = OutputVector::from_arcs(multi, &[(0, 1), (0, 2)]).unwrap();
        assert!(multi.is_valid(&flat).unwrap());
        let cycle = OutputVector::from_arcs(multi, &[(1, 2), (2, 1)]).unwrap();
        assert!(!multi.is_valid(&cycle).unwrap());
        let flat_single = OutputVector::from_arcs(single, &[(0, 1), (0, 2)]).unwrap();
        assert!(!single.is_valid(&flat_single).unwrap());
        assert!(matches!(
            single.is_valid(&flat),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn from_bits_checks_dimension() {
        let s = OutputSpace::bio(2).unwrap();
        assert!(matches!(
            OutputVector::from_bits(s, &[true, false]),
            Err(Error::DimensionMismatch {
                expected: 5,
                actual: 2
            })
        ));
        let y = OutputVector::from_bits(s, &[true, false, false, true, false]).unwrap();
        assert_eq!(y.tags().unwrap(), tag_seq("BI"));
    }

    #[test]
    fn enumerate_bio_two() {
        let s = OutputSpace::bio(2).unwrap();
        let ys = s.enumerate().unwrap();
        let seqs: Vec<Vec<Tag>> = ys.iter().map(|y| y.tags().unwrap()).collect();
        let expected: Vec<Vec<Tag>> = ["BB", "BI", "BO", "OB", "OO"]
            .iter()
            .map(|s| tag_seq(s))
            .collect();
        assert_eq!(seqs, expected);
    }

    #[test]
    fn enumerate_dep_two() {
        let s = OutputSpace::dep_multi(2).unwrap();
        let ys = s.enumerate().unwrap();
        let expected = [
            OutputVector::from_arcs(s, &[(0, 1), (0, 2)]).unwrap(),
            OutputVector::from_arcs(s, &[(0, 1), (1, 2)]).unwrap(),
            OutputVector::from_arcs(s, &[(0, 2), (2, 1)]).unwrap(),
        ];
        assert_eq!(&ys[..], &expected[..]);
    }

    #[test]
    fn enumerate_single_root_three() {
        let s = OutputSpace::dep_single(3).unwrap();
        let ys = s.enumerate().unwrap();
        assert_eq!(ys.len(), 9);
        for y in ys.iter() {
            let roots = y.heads().unwrap().iter().filter(|&&h| h == 0).count();
            assert_eq!(roots, 1);
        }
    }

    #[test]
    fn enumeration_respects_cap() {
        let s = OutputSpace::dep_multi(7).unwrap();
        assert!(matches!(
            s.enumerate(),
            Err(Error::SpaceTooLarge { cap: 6, .. })
        ));
        let s = OutputSpace::bio(3).unwrap().with_cap(2);
        assert!(s.enumerate().is_err());
    }

    #[test]
    fn display() {
        let s = OutputSpace::dep_multi(2).unwrap();
        let y = OutputVector::from_arcs(s, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(y.to_string(), "{(0,1),(1,2)}");
        let b = OutputSpace::bio(2).unwrap();
        let y = OutputVector::from_tags(b, &tag_seq("BI")).unwrap();
        assert_eq!(y.to_string(), "(B,I)");
    }
}
