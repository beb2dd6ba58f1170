use std::collections::BTreeMap;

use jacobstree::census::DEFAULT_STEP_CAP;
use jacobstree::{
    build_tree, components, reverse_trajectory, trajectory, CycleId, JacobsthalTree, MapVariant,
};
use proptest::prelude::*;

fn seed() -> impl Strategy<Value = u64> {
    (0u64..5_000).prop_map(|i| 6 * i + if i % 2 == 0 { 1 } else { 5 })
}

fn variant() -> impl Strategy<Value = MapVariant> {
    prop_oneof![Just(MapVariant::Plus), Just(MapVariant::Minus)]
}

fn branch_powers(tree: &JacobsthalTree) -> BTreeMap<u64, Vec<u32>> {
    let mut out: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for n in tree.nodes() {
        if let (Some(t), Some(p)) = (n.theta, n.power) {
            out.entry(t).or_default().push(p);
        }
    }
    for l in tree.cross_links() {
        out.entry(l.theta).or_default().push(l.power);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_trees_are_valid(s in seed(), v in variant(), power in 1u32..24, nodes in 1usize..400) {
        let tree = build_tree(v, s, power, nodes).unwrap();
        tree.validate().unwrap();
        prop_assert!(tree.len() <= nodes);
        for n in tree.nodes() {
            if n.value % 3 == 0 {
                prop_assert!(!n.active && n.children.is_empty());
            }
        }
        for (_, mut ps) in branch_powers(&tree) {
            ps.sort_unstable();
            prop_assert!(ps[0] <= 2);
            prop_assert!(ps.windows(2).all(|w| w[1] - w[0] == 2));
        }
    }

    #[test]
    fn json_round_trip(s in seed(), v in variant(), nodes in 1usize..200) {
        let tree = build_tree(v, s, 16, nodes).unwrap();
        prop_assert_eq!(JacobsthalTree::load_json(&tree.export_json()).unwrap(), tree);
    }

    #[test]
    fn resumed_growth_matches_one_shot(s in seed(), v in variant(), a in 1usize..150, b in 150usize..300) {
        let mut tree = build_tree(v, s, 20, a).unwrap();
        tree.grow(b).unwrap();
        prop_assert_eq!(tree, build_tree(v, s, 20, b).unwrap());
    }
}

#[test]
fn tree_paths_are_forward_orbits() {
    for v in [MapVariant::Plus, MapVariant::Minus] {
        let tree = build_tree(v, 1, 40, 200_000).unwrap();
        let mut checked = 0;
        for n in tree.nodes().iter().filter(|n| n.value <= 1_000) {
            let forward = trajectory(n.value, v, DEFAULT_STEP_CAP).unwrap();
            assert_eq!(
                reverse_trajectory(&tree, n.value).unwrap(),
                forward.steps,
                "{v} {}",
                n.value
            );
            checked += 1;
        }
        assert!(checked > 100);
    }
}

#[test]
fn minus_components_are_isolated() {
    let trees = components(MapVariant::Minus, &[1, 5, 17], 30, 20_000).unwrap();
    for (i, a) in trees.iter().enumerate() {
        for b in &trees[i + 1..] {
            assert!(a.values().all(|v| !b.contains(v)));
        }
    }
    for id in [CycleId::C5_7, CycleId::C17] {
        let members = id.members(MapVariant::Minus).unwrap();
        assert!(members.iter().all(|&m| !trees[0].contains(m)));
    }
}
