//! The maps `C(3q±1)`: halve even `q`, send odd `q` to `3q + 1` or `3q − 1`.
//!
//! All arithmetic is on `u64` with checked operations; overflow is an error,
//! never a wrap.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detect::BrentDetector;
use crate::error::{Error, Result};
use crate::numcore::BranchRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapVariant {
    /// 3q + 1
    Plus,
    /// 3q − 1
    Minus,
}

impl MapVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            MapVariant::Plus => "plus",
            MapVariant::Minus => "minus",
        }
    }

    /// Node rule whose nodes are predecessors under this map:
    /// `3m + 1 = θ·2^n` for Plus, `3p − 1 = θ·2^n` for Minus.
    pub fn node_rule(self) -> BranchRule {
        match self {
            MapVariant::Plus => BranchRule::MinusOne,
            MapVariant::Minus => BranchRule::PlusOne,
        }
    }

    /// Minimal odd members of the known terminal cycles.
    pub fn anchors(self) -> &'static [u64] {
        match self {
            MapVariant::Plus => &[1],
            MapVariant::Minus => &[1, 5, 17],
        }
    }

    pub fn known_cycles(self) -> &'static [CycleId] {
        match self {
            MapVariant::Plus => &[CycleId::C1],
            MapVariant::Minus => &[CycleId::C1, CycleId::C5_7, CycleId::C17],
        }
    }
}

impl fmt::Display for MapVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "plus" | "+" | "3q+1" => Ok(MapVariant::Plus),
            "minus" | "-" | "3q-1" => Ok(MapVariant::Minus),
            other => Err(format!("expected `plus` or `minus`, got `{other}`")),
        }
    }
}

/// Label of a terminal cycle. `Other` carries the cycle's smallest odd member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CycleId {
    C1,
    C5_7,
    C17,
    Other(u64),
}

const PLUS_C1: [u64; 3] = [1, 4, 2];
const MINUS_C1: [u64; 2] = [1, 2];
const MINUS_C5_7: [u64; 5] = [5, 14, 7, 20, 10];
const MINUS_C17: [u64; 18] = [
    17, 50, 25, 74, 37, 110, 55, 164, 82, 41, 122, 61, 182, 91, 272, 136, 68, 34,
];

impl CycleId {
    /// Canonical members in orbit order starting at the anchor.
    pub fn members(self, variant: MapVariant) -> Option<&'static [u64]> {
        match (variant, self) {
            (MapVariant::Plus, CycleId::C1) => Some(&PLUS_C1),
            (MapVariant::Minus, CycleId::C1) => Some(&MINUS_C1),
            (MapVariant::Minus, CycleId::C5_7) => Some(&MINUS_C5_7),
            (MapVariant::Minus, CycleId::C17) => Some(&MINUS_C17),
            _ => None,
        }
    }

    pub fn anchor(self) -> u64 {
        match self {
            CycleId::C1 => 1,
            CycleId::C5_7 => 5,
            CycleId::C17 => 17,
            CycleId::Other(m) => m,
        }
    }

    /// The cycle containing `q`, if `q` lies on one of the known cycles.
    pub fn of(q: u64, variant: MapVariant) -> Option<CycleId> {
        match variant {
            MapVariant::Plus => matches!(q, 1 | 2 | 4).then_some(CycleId::C1),
            MapVariant::Minus => match q {
                1 | 2 => Some(CycleId::C1),
                5 | 7 | 10 | 14 | 20 => Some(CycleId::C5_7),
                17 | 25 | 34 | 37 | 41 | 50 | 55 | 61 | 68 | 74 | 82 | 91 | 110 | 122 | 136
                | 164 | 182 | 272 => Some(CycleId::C17),
                _ => None,
            },
        }
    }
}

impl fmt::Display for CycleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleId::C1 => f.write_str("C1"),
            CycleId::C5_7 => f.write_str("C5_7"),
            CycleId::C17 => f.write_str("C17"),
            CycleId::Other(m) => write!(f, "Other({m})"),
        }
    }
}

impl FromStr for CycleId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "C1" => Ok(CycleId::C1),
            "C5_7" => Ok(CycleId::C5_7),
            "C17" => Ok(CycleId::C17),
            _ => s
                .strip_prefix("Other(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|m| m.parse().ok())
                .map(CycleId::Other)
                .ok_or_else(|| format!("unknown cycle label `{s}`")),
        }
    }
}

impl Serialize for CycleId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CycleId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One application of the map.
pub fn step(q: u64, variant: MapVariant) -> Result<u64> {
    if q == 0 {
        return Err(Error::domain("the Collatz maps are defined on q ≥ 1"));
    }
    if q.is_multiple_of(2) {
        return Ok(q / 2);
    }
    let tripled = q
        .checked_mul(3)
        .ok_or_else(|| Error::overflow(format!("3·{q}")))?;
    match variant {
        MapVariant::Plus => tripled
            .checked_add(1)
            .ok_or_else(|| Error::overflow(format!("3·{q} + 1"))),
        MapVariant::Minus => Ok(tripled - 1),
    }
}

/// A Collatz orbit.
///
/// The orbit is followed until it returns to the anchor (smallest odd member)
/// of the known cycle it entered, so `1 → 4 → 2 → 1` and
/// `5 → 14 → 7 → 20 → 10 → 5` are complete trajectories. `terminal` is the
/// cycle the orbit entered; `truncated` is set when `max_steps` ran out
/// before any cycle was entered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub variant: MapVariant,
    pub start: u64,
    pub steps: Vec<u64>,
    pub terminal: Option<CycleId>,
    pub truncated: bool,
}

pub const TRAJECTORY_CSV_HEADER: &str = "variant,start,terminal,truncated,step_count,steps";

impl Trajectory {
    pub fn step_count(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Odd entries, in order.
    pub fn odd_steps(&self) -> Vec<u64> {
        self.steps.iter().copied().filter(|q| q % 2 == 1).collect()
    }

    /// One CSV record; the orbit itself is a single space-separated field.
    pub fn to_csv_line(&self) -> String {
        let terminal = self.terminal.map(|t| t.to_string()).unwrap_or_default();
        let steps: Vec<String> = self.steps.iter().map(u64::to_string).collect();
        format!(
            "{},{},{},{},{},{}",
            self.variant,
            self.start,
            terminal,
            self.truncated,
            self.step_count(),
            steps.join(" ")
        )
    }
}

fn smallest_odd(cycle: &[u64]) -> u64 {
    cycle
        .iter()
        .copied()
        .filter(|q| q % 2 == 1)
        .min()
        .or_else(|| cycle.iter().copied().min())
        .unwrap_or(0)
}

pub fn trajectory(q: u64, variant: MapVariant, max_steps: u64) -> Result<Trajectory> {
    if q == 0 {
        return Err(Error::domain("trajectory start must be ≥ 1"));
    }
    if max_steps == 0 {
        return Err(Error::domain("max_steps must be ≥ 1"));
    }
    let mut traj = Trajectory {
        variant,
        start: q,
        steps: vec![q],
        terminal: CycleId::of(q, variant),
        truncated: false,
    };
    let mut detector = BrentDetector::new(q);
    let mut cur = q;
    loop {
        if let Some(id) = traj.terminal {
            if traj.steps.len() > 1 && cur == id.anchor() {
                break;
            }
        }
        if traj.step_count() as u64 >= max_steps {
            traj.truncated = traj.terminal.is_none();
            break;
        }
        cur = match step(cur, variant) {
            Ok(next) => next,
            Err(_) => return Err(Error::TrajectoryOverflow(Box::new(traj))),
        };
        traj.steps.push(cur);
        if traj.terminal.is_none() {
            traj.terminal = CycleId::of(cur, variant);
            if traj.terminal.is_none() {
                // guard against a cycle outside the known set
                if let Some(lambda) = detector.observe(&cur) {
                    let tail = &traj.steps[traj.steps.len() - lambda as usize..];
                    traj.terminal = Some(CycleId::Other(smallest_odd(tail)));
                    break;
                }
            }
        }
    }
    Ok(traj)
}

/// One odd-to-odd step: `3q ± 1 = q_odd · 2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OddTrack {
    pub q_odd: u64,
    pub k: u32,
}

fn require_odd(q: u64) -> Result<()> {
    if q.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "expected an odd positive integer, got {q}"
        )));
    }
    Ok(())
}

pub fn odd_next(q_odd: u64, variant: MapVariant) -> Result<OddTrack> {
    require_odd(q_odd)?;
    let tripled = q_odd
        .checked_mul(3)
        .ok_or_else(|| Error::overflow(format!("3·{q_odd}")))?;
    let even = match variant {
        MapVariant::Plus => tripled
            .checked_add(1)
            .ok_or_else(|| Error::overflow(format!("3·{q_odd} + 1")))?,
        MapVariant::Minus => tripled - 1,
    };
    let k = even.trailing_zeros();
    Ok(OddTrack {
        q_odd: even >> k,
        k,
    })
}

/// Odd-compressed orbit starting at (and including) `q_odd`.
///
/// Stops after the first track that lands on a known cycle anchor (`1`, and
/// for Minus also `5` or `17`), on a member of `stop_set`, on a value already
/// in the list, or when `max_tracks` tracks have been taken.
pub fn odd_trajectory(
    q_odd: u64,
    variant: MapVariant,
    stop_set: &HashSet<u64>,
    max_tracks: usize,
) -> Result<Vec<u64>> {
    require_odd(q_odd)?;
    let anchors = variant.anchors();
    let mut out = vec![q_odd];
    let mut seen = HashSet::from([q_odd]);
    let mut cur = q_odd;
    while out.len() - 1 < max_tracks {
        cur = odd_next(cur, variant)?.q_odd;
        out.push(cur);
        if anchors.contains(&cur) || stop_set.contains(&cur) || !seen.insert(cur) {
            break;
        }
    }
    Ok(out)
}

/// A row of the odd-trajectory table: a seed that is an odd multiple of
/// three and the odd values that follow it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OddTableRow {
    pub seed: u64,
    pub trajectory: Vec<u64>,
}

/// Rows for every odd multiple of three up to `limit`. Each row is cut at
/// the first value already printed in an earlier row (that value is kept).
pub fn odd_table(limit: u64, variant: MapVariant) -> Result<Vec<OddTableRow>> {
    if limit < 3 {
        return Err(Error::domain(format!(
            "odd table limit must be ≥ 3, got {limit}"
        )));
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for seed in (3..=limit).step_by(6) {
        let mut trajectory = odd_trajectory(seed, variant, &seen, usize::MAX)?;
        trajectory.remove(0);
        seen.extend(trajectory.iter().copied());
        rows.push(OddTableRow { seed, trajectory });
    }
    Ok(rows)
}

/// `(q − 1)/4` for `q ≡ 1 (mod 4)`, `(q + 1)/4` for `q ≡ 3 (mod 4)`.
pub fn quad_reduce(q_odd: u64) -> Result<u64> {
    require_odd(q_odd)?;
    Ok(if q_odd % 4 == 1 {
        q_odd / 4
    } else {
        q_odd / 4 + 1
    })
}

/// The first `n_tracks` odd steps from `q_start_odd` with their exponents.
pub fn track_exponents(
    q_start_odd: u64,
    variant: MapVariant,
    n_tracks: usize,
) -> Result<Vec<OddTrack>> {
    require_odd(q_start_odd)?;
    let mut cur = q_start_odd;
    let mut out = Vec::with_capacity(n_tracks);
    for _ in 0..n_tracks {
        let t = odd_next(cur, variant)?;
        cur = t.q_odd;
        out.push(t);
    }
    Ok(out)
}
