use proptest::prelude::*;
use structcons::{OutputSpace, OutputVector, SpaceKind};

fn small_spaces() -> Vec<OutputSpace> {
    let mut spaces = Vec::new();
    for n in 1..=5 {
        spaces.push(OutputSpace::bio(n).unwrap());
    }
    for n in 1..=4 {
        spaces.push(OutputSpace::dep_multi(n).unwrap());
        spaces.push(OutputSpace::dep_single(n).unwrap());
    }
    spaces
}

#[test]
fn enumeration_equals_filtered_bit_vectors() {
    for space in small_spaces() {
        let c = space.num_parts();
        assert!(c <= 16);
        let enumerated = space.enumerate().unwrap();
        let mut filtered = Vec::new();
        for mask in 0u32..(1 << c) {
            let bits: Vec<bool> = (0..c).map(|i| mask >> i & 1 == 1).collect();
            let y = OutputVector::from_bits(space, &bits).unwrap();
            if space.is_valid(&y).unwrap() {
                filtered.push(y);
            }
        }
        filtered.sort();
        assert_eq!(&filtered[..], &enumerated[..], "{space:?}");
    }
}

#[test]
fn bio_counts_follow_the_recurrence() {
    // a(n) = 2 a(n-1) + (sequences ending in B or I at n-1)
    let mut open = 1u64; // ends in B or I
    let mut total = 2u64; // n = 1: B, O
    for n in 1..=8 {
        let space = OutputSpace::bio(n).unwrap();
        assert_eq!(space.enumerate().unwrap().len() as u64, total, "n = {n}");
        let ends_open = space
            .enumerate()
            .unwrap()
            .iter()
            .filter(|y| y.tags().unwrap().last() != Some(&structcons::Tag::O))
            .count() as u64;
        assert_eq!(ends_open, open);
        let next_total = 2 * total + open;
        open += total;
        total = next_total;
    }
    assert_eq!(OutputSpace::bio(1).unwrap().enumerate().unwrap().len(), 2);
    assert_eq!(OutputSpace::bio(2).unwrap().enumerate().unwrap().len(), 5);
}

#[test]
fn tree_counts() {
    for n in 1..=6u32 {
        let multi = OutputSpace::dep_multi(n as usize).unwrap();
        assert_eq!(
            multi.enumerate().unwrap().len() as u64,
            (n as u64 + 1).pow(n - 1)
        );
        // trees whose root has exactly one child
        let single = OutputSpace::dep_single(n as usize).unwrap();
        assert_eq!(
            single.enumerate().unwrap().len() as u64,
            (n as u64).pow(n - 1)
        );
    }
}

#[test]
fn cap_is_configurable() {
    let space = OutputSpace::dep_multi(7).unwrap();
    assert!(space.enumerate().is_err());
    assert_eq!(space.with_cap(7).enumerate().unwrap().len(), 8usize.pow(6));
}

fn any_space() -> impl Strategy<Value = OutputSpace> {
    (0..3usize, 1..12usize).prop_map(|(k, n)| {
        let kind = [SpaceKind::Bio, SpaceKind::DepMulti, SpaceKind::DepSingle][k];
        OutputSpace::new(kind, n).unwrap()
    })
}

proptest! {
    #[test]
    fn part_index_is_a_bijection(space in any_space(), seed in any::<usize>()) {
        let c = seed % space.num_parts();
        let part = space.part_of_index(c).unwrap();
        prop_assert_eq!(space.part_index(part).unwrap(), c);
        prop_assert!(space.part_of_index(space.num_parts()).is_err());
    }

    #[test]
    fn enumerated_outputs_are_valid_and_sorted(space in any_space().prop_filter("cap", |s| s.within_cap())) {
        let ys = space.enumerate().unwrap();
        for pair in ys.windows(2) {
            prop_assert!(pair[0] < pair[1]);
        }
        for y in ys.iter() {
            prop_assert!(space.is_valid(y).unwrap());
            // one tag per position, one head per modifier
            prop_assert_eq!(y.parts().len(), space.n());
        }
    }
}
