use jacobstree::census::DEFAULT_STEP_CAP;
use jacobstree::{classify, membership_table, sweep, MapVariant};
use proptest::prelude::*;

#[test]
fn partitions_do_not_change_counts() {
    let base = sweep(1, 10_000, MapVariant::Minus, 1, DEFAULT_STEP_CAP).unwrap();
    for p in [2, 8, 64] {
        let r = sweep(1, 10_000, MapVariant::Minus, p, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(r.counts, base.counts, "partitions = {p}");
        assert_eq!(r.samples, base.samples);
    }
}

#[test]
fn columns_partition_the_range() {
    for v in [MapVariant::Plus, MapVariant::Minus] {
        let cols = membership_table(5_000, v, usize::MAX).unwrap();
        let mut all: Vec<u64> = cols.iter().flat_map(|(_, c)| c.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (1..=5_000).collect::<Vec<_>>());
        for (id, col) in &cols {
            assert!(col.windows(2).all(|w| w[0] < w[1]));
            assert!(col
                .iter()
                .all(|&q| classify(q, v, DEFAULT_STEP_CAP).unwrap().cycle() == Some(*id)));
        }
    }
}

#[test]
fn frequencies_are_stable() {
    let small = sweep(1, 10_000, MapVariant::Minus, 4, DEFAULT_STEP_CAP).unwrap();
    let large = sweep(1, 100_000, MapVariant::Minus, 4, DEFAULT_STEP_CAP).unwrap();
    for (id, f) in small.frequencies() {
        assert!((f - large.frequency(id)).abs() < 0.02, "{id}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counts_cover_the_range(lo in 1u64..50_000, len in 0u64..5_000, cap in 1u64..300, p in 1usize..6) {
        let hi = lo + len;
        for v in [MapVariant::Plus, MapVariant::Minus] {
            let r = sweep(lo, hi, v, p, cap).unwrap();
            prop_assert_eq!(r.counts.values().sum::<u64>() + r.truncated, hi - lo + 1);
            let total: f64 = r.frequencies().values().sum();
            prop_assert!(total <= 1.0 + 1e-9);
            for q in [lo, hi, lo + len / 2] {
                let direct = classify(q, v, cap).unwrap();
                let sample_has = r.samples.values().any(|s| s.contains(&q));
                if sample_has {
                    prop_assert!(direct.cycle().is_some());
                }
            }
        }
    }
}
