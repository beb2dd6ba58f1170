//! Jacobsthal trees: growth by doubling θ·2^n and branching at integral
//! nodes `(θ·2^n ∓ 1)/3`.
//!
//! A node `m` found on the branch of θ at power `n` satisfies
//! `3m ± 1 = θ·2^n`, so under the corresponding map `m` reaches θ after one
//! odd step and `n` halvings. Reading the tree from a node back to its root
//! therefore replays the forward Collatz orbit.
//!
//! Growth always expands the pending `(θ, n)` with the smallest doubled value
//! θ·2^n. That makes the build deterministic and reproduces the narrative
//! order `1, 5, 3, 13, 17, 11, 7, 9, …` for the 3q+1 tree grown from 1.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collatz::MapVariant;
use crate::error::{Error, Result};
use crate::numcore::{node_value_u64, BranchRule};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub value: u64,
    /// Branch index θ the node sits on (its parent's value); `None` for roots.
    pub theta: Option<u64>,
    pub power: Option<u32>,
    pub rule: BranchRule,
    /// False for multiples of three, which never branch.
    pub active: bool,
    pub parent: Option<u64>,
    /// Child values in creation order.
    pub children: Vec<u64>,
}

/// An integral node whose value was already in the tree (first writer wins).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossLink {
    pub theta: u64,
    pub power: u32,
    pub value: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Pending {
    doubled: u128,
    theta: u64,
    power: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
struct FrontierEntry {
    theta: u64,
    power: u32,
}

#[derive(Clone, Debug)]
pub struct JacobsthalTree {
    variant: MapVariant,
    seeds: Vec<u64>,
    max_power: u32,
    nodes: Vec<TreeNode>,
    index: HashMap<u64, usize>,
    cross_links: Vec<CrossLink>,
    frontier: BinaryHeap<Reverse<Pending>>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    variant: MapVariant,
    seeds: Vec<u64>,
    max_power: u32,
    nodes: Vec<TreeNode>,
    #[serde(default)]
    cross_links: Vec<CrossLink>,
    #[serde(default)]
    frontier: Vec<FrontierEntry>,
}

impl PartialEq for JacobsthalTree {
    fn eq(&self, other: &Self) -> bool {
        self.variant == other.variant
            && self.seeds == other.seeds
            && self.max_power == other.max_power
            && self.nodes == other.nodes
            && self.cross_links == other.cross_links
            && self.frontier_entries() == other.frontier_entries()
    }
}

impl Eq for JacobsthalTree {}

fn check_seed(seed: u64) -> Result<()> {
    if seed.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "tree seed must be odd and positive, got {seed}"
        )));
    }
    if seed.is_multiple_of(3) {
        return Err(Error::domain(format!(
            "tree seed {seed} is a multiple of 3 and cannot branch"
        )));
    }
    Ok(())
}

impl JacobsthalTree {
    fn empty(variant: MapVariant, max_power: u32) -> Self {
        JacobsthalTree {
            variant,
            seeds: Vec::new(),
            max_power,
            nodes: Vec::new(),
            index: HashMap::new(),
            cross_links: Vec::new(),
            frontier: BinaryHeap::new(),
        }
    }

    fn add_root(&mut self, seed: u64) {
        self.seeds.push(seed);
        self.index.insert(seed, self.nodes.len());
        self.nodes.push(TreeNode {
            value: seed,
            theta: None,
            power: None,
            rule: self.variant.node_rule(),
            active: true,
            parent: None,
            children: Vec::new(),
        });
        self.schedule(seed);
    }

    fn schedule(&mut self, theta: u64) {
        self.frontier.push(Reverse(Pending {
            doubled: u128::from(theta) << 1,
            theta,
            power: 1,
        }));
    }

    /// Continues growth until the tree holds `max_nodes` nodes or the
    /// frontier is exhausted. On overflow the tree keeps everything built
    /// so far and the offending branch is dropped from the frontier.
    pub fn grow(&mut self, max_nodes: usize) -> Result<()> {
        let rule = self.variant.node_rule();
        while self.nodes.len() < max_nodes {
            let Some(Reverse(p)) = self.frontier.pop() else {
                break;
            };
            let value = node_value_u64(p.theta, p.power, rule)?;
            if p.power < self.max_power {
                let doubled = p
                    .doubled
                    .checked_mul(2)
                    .ok_or_else(|| Error::overflow(format!("{}·2^{}", p.theta, p.power + 1)))?;
                self.frontier.push(Reverse(Pending {
                    doubled,
                    power: p.power + 1,
                    ..p
                }));
            }
            let Some(value) = value else { continue };
            if self.index.contains_key(&value) {
                self.cross_links.push(CrossLink {
                    theta: p.theta,
                    power: p.power,
                    value,
                });
                continue;
            }
            let active = value % 3 != 0;
            let parent_idx = self.index[&p.theta];
            self.nodes[parent_idx].children.push(value);
            self.index.insert(value, self.nodes.len());
            self.nodes.push(TreeNode {
                value,
                theta: Some(p.theta),
                power: Some(p.power),
                rule,
                active,
                parent: Some(p.theta),
                children: Vec::new(),
            });
            if active {
                self.schedule(value);
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> MapVariant {
        self.variant
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn max_power(&self) -> u32 {
        self.max_power
    }

    /// Nodes in discovery order (roots first).
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, value: u64) -> Option<&TreeNode> {
        self.index.get(&value).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, value: u64) -> bool {
        self.index.contains_key(&value)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cross_links(&self) -> &[CrossLink] {
        &self.cross_links
    }

    /// Number of `(θ, n)` pairs still waiting to be expanded.
    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.nodes.iter().map(|n| n.value)
    }

    fn frontier_entries(&self) -> Vec<FrontierEntry> {
        let mut v: Vec<_> = self
            .frontier
            .iter()
            .map(|Reverse(p)| FrontierEntry {
                theta: p.theta,
                power: p.power,
            })
            .collect();
        v.sort();
        v
    }

    /// Re-derives every structural invariant from the stored nodes.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTree(msg));
        let rule = self.variant.node_rule();
        let mut seen = HashSet::new();
        for node in &self.nodes {
            if !seen.insert(node.value) {
                return bad(format!("duplicate node {}", node.value));
            }
            if node.rule != rule {
                return bad(format!(
                    "node {} uses rule {}, tree uses {}",
                    node.value, node.rule, rule
                ));
            }
            if node.active != (node.value % 3 != 0) {
                return bad(format!("node {} has the wrong activity flag", node.value));
            }
            if !node.active && !node.children.is_empty() {
                return bad(format!("inactive node {} has children", node.value));
            }
            for &c in &node.children {
                match self.node(c) {
                    Some(child) if child.parent == Some(node.value) => {}
                    _ => return bad(format!("child {c} of {} does not point back", node.value)),
                }
            }
            match (node.parent, node.theta, node.power) {
                (None, None, None) => {
                    if !self.seeds.contains(&node.value) {
                        return bad(format!("root {} is not a seed", node.value));
                    }
                    if node.value % 2 == 0 || node.value % 3 == 0 {
                        return bad(format!("root {} cannot branch", node.value));
                    }
                }
                (Some(parent), Some(theta), Some(power)) => {
                    if parent != theta {
                        return bad(format!(
                            "node {} has parent {parent} but θ = {theta}",
                            node.value
                        ));
                    }
                    if power == 0 || power > self.max_power {
                        return bad(format!(
                            "node {} has power {power} out of range",
                            node.value
                        ));
                    }
                    if node_value_u64(theta, power, rule)? != Some(node.value) {
                        return bad(format!(
                            "node {} is not ({theta}·2^{power} ∓ 1)/3",
                            node.value
                        ));
                    }
                    match self.node(parent) {
                        Some(p) if p.children.contains(&node.value) => {}
                        _ => return bad(format!("parent {parent} does not list {}", node.value)),
                    }
                }
                _ => {
                    return bad(format!(
                        "node {} has inconsistent origin fields",
                        node.value
                    ))
                }
            }
        }
        for seed in &self.seeds {
            if !self.contains(*seed) {
                return bad(format!("seed {seed} has no node"));
            }
        }
        for link in &self.cross_links {
            if node_value_u64(link.theta, link.power, rule)? != Some(link.value)
                || !self.contains(link.value)
                || !self.contains(link.theta)
            {
                return bad(format!("invalid cross link {link:?}"));
            }
        }
        Ok(())
    }

    /// Graphviz description. Inactive nodes are boxes; roots have a double
    /// outline; links to already-present values are dashed.
    pub fn export_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph jacobsthal_{} {{", self.variant);
        for node in &self.nodes {
            let mut attrs = Vec::new();
            if !node.active {
                attrs.push("shape=box".to_string());
            }
            if node.parent.is_none() {
                attrs.push("peripheries=2".to_string());
            }
            if attrs.is_empty() {
                let _ = writeln!(out, "  \"{}\";", node.value);
            } else {
                let _ = writeln!(out, "  \"{}\" [{}];", node.value, attrs.join(", "));
            }
        }
        for node in &self.nodes {
            if let (Some(theta), Some(power)) = (node.theta, node.power) {
                let _ = writeln!(
                    out,
                    "  \"{theta}\" -> \"{}\" [label=\"2^{power}\"];",
                    node.value
                );
            }
        }
        for link in &self.cross_links {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"2^{}\", style=dashed];",
                link.theta, link.value, link.power
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn export_json(&self) -> String {
        let doc = TreeDoc {
            variant: self.variant,
            seeds: self.seeds.clone(),
            max_power: self.max_power,
            nodes: self.nodes.clone(),
            cross_links: self.cross_links.clone(),
            frontier: self.frontier_entries(),
        };
        serde_json::to_string_pretty(&doc).expect("tree document serializes")
    }

    /// Parses an [`export_json`](Self::export_json) document and validates it.
    pub fn load_json(text: &str) -> Result<Self> {
        let doc: TreeDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidTree(e.to_string()))?;
        let mut tree = JacobsthalTree::empty(doc.variant, doc.max_power);
        tree.seeds = doc.seeds;
        for (i, node) in doc.nodes.iter().enumerate() {
            if tree.index.insert(node.value, i).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node {}", node.value)));
            }
        }
        tree.nodes = doc.nodes;
        tree.cross_links = doc.cross_links;
        for e in doc.frontier {
            if !tree.contains(e.theta) || e.power == 0 || e.power >= 128 {
                return Err(Error::InvalidTree(format!("invalid frontier entry {e:?}")));
            }
            tree.frontier.push(Reverse(Pending {
                doubled: u128::from(e.theta)
                    .checked_shl(e.power)
                    .unwrap_or(u128::MAX),
                theta: e.theta,
                power: e.power,
            }));
        }
        tree.validate()?;
        Ok(tree)
    }
}

/// Grows the tree of `variant` from `seed`, expanding each branch up to
/// θ·2^`max_power` and stopping at `max_nodes` nodes.
pub fn build_tree(
    variant: MapVariant,
    seed: u64,
    max_power: u32,
    max_nodes: usize,
) -> Result<JacobsthalTree> {
    check_seed(seed)?;
    if max_power == 0 {
        return Err(Error::domain("max_power must be ≥ 1"));
    }
    let mut tree = JacobsthalTree::empty(variant, max_power);
    tree.add_root(seed);
    match tree.grow(max_nodes) {
        Ok(()) => Ok(tree),
        Err(e) if e.is_overflow() => Err(Error::TreeOverflow(Box::new(tree))),
        Err(e) => Err(e),
    }
}

/// One tree per seed, built in parallel.
pub fn components(
    variant: MapVariant,
    seeds: &[u64],
    max_power: u32,
    max_nodes: usize,
) -> Result<Vec<JacobsthalTree>> {
    let distinct: HashSet<_> = seeds.iter().collect();
    if distinct.len() != seeds.len() {
        return Err(Error::domain("component seeds must be pairwise distinct"));
    }
    seeds
        .par_iter()
        .map(|&s| build_tree(variant, s, max_power, max_nodes))
        .collect()
}

fn push_halvings(out: &mut Vec<u64>, theta: u64, power: u32) -> Result<()> {
    let top = u128::from(theta) << power;
    let top = u64::try_from(top)
        .map_err(|_| Error::overflow(format!("{theta}·2^{power} exceeds u64")))?;
    out.extend((0..=power).map(|k| top >> k));
    Ok(())
}

/// Full Collatz orbit of `q_odd` read off the tree: from the node up
/// through its ancestors to the root, expanding every doubling. For a root
/// that closes a cycle (a cross link back to it), the loop is replayed once.
pub fn reverse_trajectory(tree: &JacobsthalTree, q_odd: u64) -> Result<Vec<u64>> {
    let mut node = tree.node(q_odd).ok_or(Error::NotFound(q_odd))?;
    let mut out = vec![q_odd];
    if node.parent.is_none() {
        if let Some(link) = tree.cross_links.iter().find(|l| l.value == q_odd) {
            push_halvings(&mut out, link.theta, link.power)?;
            node = tree.node(link.theta).expect("cross link source is a node");
        }
    }
    while let (Some(theta), Some(power)) = (node.theta, node.power) {
        push_halvings(&mut out, theta, power)?;
        node = tree.node(theta).expect("parent is a node");
    }
    Ok(out)
}

/// Four consecutive integral nodes along θ·2^n, starting and ending on a
/// multiple of three.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub theta: u64,
    pub rule: BranchRule,
    pub values: [u64; 4],
    pub powers: [u32; 4],
    pub bracketed: [bool; 4],
}

impl Cell {
    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .zip(self.bracketed)
            .map(|(v, b)| if b { format!("[{v}]") } else { v.to_string() })
            .collect::<Vec<_>>()
            .join(" - ")
    }
}

/// The `index`-th cell (counting from zero) on the branch θ·2^n under `rule`.
pub fn cell(theta: u64, rule: BranchRule, index: usize) -> Result<Cell> {
    if theta.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "θ must be odd and positive, got {theta}"
        )));
    }
    if theta.is_multiple_of(3) {
        return Err(Error::domain(format!(
            "θ = {theta} is a multiple of 3; its nodes are fractional"
        )));
    }
    let mut window: Vec<(u64, u32)> = Vec::with_capacity(4);
    let mut starts_seen = 0usize;
    for n in 0u32.. {
        let Some(v) = node_value_u64(theta, n, rule)? else {
            continue;
        };
        if window.is_empty() {
            if v % 3 == 0 {
                if starts_seen == index {
                    window.push((v, n));
                }
                starts_seen += 1;
            }
            continue;
        }
        window.push((v, n));
        if window.len() == 4 {
            break;
        }
    }
    let values = [window[0].0, window[1].0, window[2].0, window[3].0];
    let powers = [window[0].1, window[1].1, window[2].1, window[3].1];
    Ok(Cell {
        theta,
        rule,
        values,
        powers,
        bracketed: values.map(|v| v % 3 == 0),
    })
}
