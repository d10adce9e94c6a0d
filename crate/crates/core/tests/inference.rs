use proptest::prelude::*;
use structcons::inference::{
    forward_backward_bio, map_bruteforce, map_inference, marginal_inference, marginals_bruteforce,
    msa, mtt_marginals,
};
use structcons::{Algo, OutputSpace, ScoreVector, SpaceKind};

fn space_and_scores(lo: f64, hi: f64) -> impl Strategy<Value = (OutputSpace, ScoreVector)> {
    (0..3usize, 1..=5usize).prop_flat_map(move |(k, n)| {
        let kind = [SpaceKind::Bio, SpaceKind::DepMulti, SpaceKind::DepSingle][k];
        let space = OutputSpace::new(kind, n).unwrap();
        prop::collection::vec(lo..hi, space.num_parts())
            .prop_map(move |w| (space, ScoreVector::new(w).unwrap()))
    })
}

/// Integer scores, so ties are common and tie-breaking is exercised.
fn tied_scores() -> impl Strategy<Value = (OutputSpace, ScoreVector)> {
    (0..3usize, 1..=4usize).prop_flat_map(|(k, n)| {
        let kind = [SpaceKind::Bio, SpaceKind::DepMulti, SpaceKind::DepSingle][k];
        let space = OutputSpace::new(kind, n).unwrap();
        prop::collection::vec(-1i8..=1, space.num_parts()).prop_map(move |w| {
            (
                space,
                ScoreVector::new(w.into_iter().map(f64::from).collect()).unwrap(),
            )
        })
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_map_matches_brute_force((space, w) in space_and_scores(-5.0, 5.0)) {
        let (y_fast, s_fast) = map_inference(&space, &w, Algo::Fast).unwrap();
        let (y_brute, s_brute) = map_bruteforce(&space, &w).unwrap();
        prop_assert_eq!(s_fast, s_brute);
        prop_assert_eq!(y_fast, y_brute);
    }

    #[test]
    fn fast_map_breaks_ties_like_enumeration((space, w) in tied_scores()) {
        let (y_fast, s_fast) = map_inference(&space, &w, Algo::Fast).unwrap();
        let (y_brute, s_brute) = map_bruteforce(&space, &w).unwrap();
        prop_assert_eq!(s_fast, s_brute);
        prop_assert_eq!(y_fast, y_brute);
    }

    #[test]
    fn fast_marginals_match_brute_force((space, w) in space_and_scores(-5.0, 5.0)) {
        let fast = marginal_inference(&space, &w, Algo::Fast).unwrap();
        let brute = marginals_bruteforce(&space, &w).unwrap();
        prop_assert!(max_abs_diff(fast.mu.values(), brute.mu.values()) < 1e-8);
        prop_assert!((fast.log_partition - brute.log_partition).abs() < 1e-8);
    }

    #[test]
    fn marginals_are_degree_normalized((space, w) in space_and_scores(-5.0, 5.0)) {
        let mu = marginal_inference(&space, &w, Algo::Fast).unwrap().mu;
        for group in space.token_groups() {
            let total: f64 = group.iter().map(|&c| mu.get(c)).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
        for &m in mu.values() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&m));
        }
        if space.kind() == SpaceKind::DepSingle {
            let root: f64 = (1..=space.n())
                .map(|m| mu.get(space.part_index(structcons::PartId::Arc { head: 0, modifier: m }).unwrap()))
                .sum();
            prop_assert!((root - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn group_shift_moves_only_the_partition(
        (space, w) in space_and_scores(-5.0, 5.0),
        delta in -3.0..3.0f64,
        pick in any::<usize>(),
    ) {
        prop_assume!(space.kind() != SpaceKind::DepSingle);
        let groups = space.token_groups();
        let group = &groups[pick % groups.len()];
        let mut shifted = w.values().to_vec();
        for &c in group {
            shifted[c] += delta;
        }
        let before = marginal_inference(&space, &w, Algo::Fast).unwrap();
        let after = marginal_inference(&space, &ScoreVector::new(shifted).unwrap(), Algo::Fast).unwrap();
        prop_assert!(max_abs_diff(before.mu.values(), after.mu.values()) < 1e-10);
        prop_assert!((after.log_partition - before.log_partition - delta).abs() < 1e-10);
    }

    #[test]
    fn single_root_msa_has_one_root_arc(n in 1..=5usize, seed in prop::collection::vec(-5.0..5.0f64, 25)) {
        let space = OutputSpace::dep_single(n).unwrap();
        let w = ScoreVector::new(seed[..space.num_parts()].to_vec()).unwrap();
        let (y, score) = msa(&space, &w).unwrap();
        let heads = y.heads().unwrap();
        prop_assert_eq!(heads.iter().filter(|&&h| h == 0).count(), 1);
        prop_assert_eq!(score, map_bruteforce(&space, &w).unwrap().1);
    }
}

#[test]
fn neg_inf_scores_are_respected() {
    let space = OutputSpace::bio(3).unwrap();
    let mut w = vec![0.0; space.num_parts()];
    // forbid O everywhere
    for pos in 1..=3 {
        let c = space
            .part_index(structcons::PartId::Tag {
                position: pos,
                tag: structcons::Tag::O,
            })
            .unwrap();
        w[c] = f64::NEG_INFINITY;
    }
    let w = ScoreVector::new(w).unwrap();
    let fb = forward_backward_bio(&space, &w).unwrap();
    let brute = marginals_bruteforce(&space, &w).unwrap();
    assert!(max_abs_diff(fb.mu.values(), brute.mu.values()) < 1e-12);
    // B or I at positions 2 and 3, B at position 1
    assert!((fb.log_partition - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn mtt_handles_forbidden_arcs() {
    let space = OutputSpace::dep_multi(3).unwrap();
    let mut w = vec![0.3, -0.2, 0.1, 1.0, -1.0, 0.5, 0.2, -0.7, 0.4];
    w[space
        .part_index(structcons::PartId::Arc {
            head: 0,
            modifier: 2,
        })
        .unwrap()] = f64::NEG_INFINITY;
    let w = ScoreVector::new(w).unwrap();
    let fast = mtt_marginals(&space, &w).unwrap();
    let brute = marginals_bruteforce(&space, &w).unwrap();
    assert!(max_abs_diff(fast.mu.values(), brute.mu.values()) < 1e-10);
    assert!((fast.log_partition - brute.log_partition).abs() < 1e-10);
}
