//! Terminal-cycle census over integer ranges.
//!
//! Every `q` is followed until it lands on a known cycle. A shared table of
//! already-classified small values short-circuits most orbits; the table
//! only ever caches pure facts about the map, so results do not depend on
//! the order in which workers fill it.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU32, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::json;

use crate::collatz::{step, CycleId, MapVariant};
use crate::detect::BrentDetector;
use crate::error::{Error, Result};

pub const DEFAULT_STEP_CAP: u64 = 10_000;
pub const DEFAULT_MEMO_LIMIT: usize = 1 << 20;
pub const SAMPLE_SIZE: usize = 10;
pub const CENSUS_CSV_HEADER: &str = "q,cycle_label,steps";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    /// `steps` map applications lead from `q` onto the cycle `id`.
    Cycle { id: CycleId, steps: u64 },
    /// The step cap ran out first (or the orbit overflowed `u64`).
    Truncated,
}

impl Classification {
    pub fn cycle(self) -> Option<CycleId> {
        match self {
            Classification::Cycle { id, .. } => Some(id),
            Classification::Truncated => None,
        }
    }
}

const LABEL_BITS: u32 = 3;
const MAX_MEMO_STEPS: u64 = (u32::MAX >> LABEL_BITS) as u64;

fn label(id: CycleId) -> Option<u32> {
    match id {
        CycleId::C1 => Some(1),
        CycleId::C5_7 => Some(2),
        CycleId::C17 => Some(3),
        CycleId::Other(_) => None,
    }
}

fn unlabel(code: u32) -> CycleId {
    match code {
        1 => CycleId::C1,
        2 => CycleId::C5_7,
        _ => CycleId::C17,
    }
}

struct Memo {
    slots: Vec<AtomicU32>,
}

impl Memo {
    fn new(limit: usize) -> Self {
        Memo {
            slots: (0..limit).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    fn get(&self, q: u64) -> Option<(CycleId, u64)> {
        let slot = self.slots.get(usize::try_from(q).ok()?)?;
        let packed = slot.load(Ordering::Relaxed);
        (packed != 0).then(|| (unlabel(packed & 0b111), u64::from(packed >> LABEL_BITS)))
    }

    fn put(&self, q: u64, id: CycleId, steps: u64) {
        let (Some(code), true) = (label(id), steps <= MAX_MEMO_STEPS) else {
            return;
        };
        if let Some(slot) = usize::try_from(q).ok().and_then(|i| self.slots.get(i)) {
            slot.store(((steps as u32) << LABEL_BITS) | code, Ordering::Relaxed);
        }
    }
}

/// Follows the orbit of `q`, filling `path` with the values visited before
/// the classification became known.
fn walk(
    q: u64,
    variant: MapVariant,
    cap: u64,
    memo: Option<&Memo>,
    path: &mut Vec<u64>,
) -> Result<Classification> {
    path.clear();
    let mut detector = BrentDetector::new(q);
    let mut cur = q;
    loop {
        if let Some(id) = CycleId::of(cur, variant) {
            return finish(path, id, 0, cap, memo);
        }
        if let Some((id, steps)) = memo.and_then(|m| m.get(cur)) {
            return finish(path, id, steps, cap, memo);
        }
        if path.len() as u64 >= cap {
            return Ok(Classification::Truncated);
        }
        path.push(cur);
        cur = step(cur, variant)?;
        if let Some(lambda) = detector.observe(&cur) {
            let mut smallest = u64::MAX;
            let mut v = cur;
            for _ in 0..lambda {
                if v % 2 == 1 {
                    smallest = smallest.min(v);
                }
                v = step(v, variant)?;
            }
            return Ok(Classification::Cycle {
                id: CycleId::Other(smallest),
                steps: path.len() as u64,
            });
        }
    }
}

fn finish(
    path: &[u64],
    id: CycleId,
    tail: u64,
    cap: u64,
    memo: Option<&Memo>,
) -> Result<Classification> {
    let total = tail + path.len() as u64;
    if let Some(memo) = memo {
        for (i, &v) in path.iter().enumerate() {
            memo.put(v, id, total - i as u64);
        }
    }
    Ok(if total > cap {
        Classification::Truncated
    } else {
        Classification::Cycle { id, steps: total }
    })
}

/// Terminal cycle of `q`, reached within `step_cap` steps.
pub fn classify(q: u64, variant: MapVariant, step_cap: u64) -> Result<Classification> {
    if q == 0 {
        return Err(Error::domain("classify needs q ≥ 1"));
    }
    walk(q, variant, step_cap, None, &mut Vec::new())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusReport {
    pub variant: MapVariant,
    pub lo: u64,
    pub hi: u64,
    pub counts: BTreeMap<CycleId, u64>,
    pub truncated: u64,
    /// The first few values of each class, ascending.
    pub samples: BTreeMap<CycleId, Vec<u64>>,
    pub elapsed: Duration,
    pub step_cap: u64,
    pub partitions: usize,
}

impl CensusReport {
    pub fn range_size(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn frequencies(&self) -> BTreeMap<CycleId, f64> {
        let n = self.range_size() as f64;
        self.counts
            .iter()
            .map(|(&id, &c)| (id, c as f64 / n))
            .collect()
    }

    pub fn frequency(&self, id: CycleId) -> f64 {
        self.counts.get(&id).copied().unwrap_or(0) as f64 / self.range_size() as f64
    }

    /// Summary document; frequencies are rounded to four decimals.
    pub fn to_json(&self) -> serde_json::Value {
        let frequencies: BTreeMap<String, f64> = self
            .frequencies()
            .into_iter()
            .map(|(id, f)| (id.to_string(), (f * 1e4).round() / 1e4))
            .collect();
        let counts: BTreeMap<String, u64> = self
            .counts
            .iter()
            .map(|(id, &c)| (id.to_string(), c))
            .collect();
        let samples: BTreeMap<String, &Vec<u64>> = self
            .samples
            .iter()
            .map(|(id, s)| (id.to_string(), s))
            .collect();
        json!({
            "variant": self.variant,
            "lo": self.lo,
            "hi": self.hi,
            "counts": counts,
            "frequencies": frequencies,
            "truncated": self.truncated,
            "elapsed_ms": self.elapsed.as_millis() as u64,
            "step_cap": self.step_cap,
            "partitions": self.partitions,
            "samples": samples,
        })
    }

    /// Human-readable summary without the timing field.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} census of [{}, {}]\n", self.variant, self.lo, self.hi);
        for (id, f) in self.frequencies() {
            out.push_str(&format!("{id}\t{}\t{f:.4}\n", self.counts[&id]));
        }
        out.push_str(&format!("truncated\t{}\n", self.truncated));
        out
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    counts: BTreeMap<CycleId, u64>,
    truncated: u64,
    samples: BTreeMap<CycleId, Vec<u64>>,
}

impl Tally {
    fn add(&mut self, q: u64, c: Classification) {
        match c {
            Classification::Cycle { id, .. } => {
                *self.counts.entry(id).or_default() += 1;
                let s = self.samples.entry(id).or_default();
                if s.len() < SAMPLE_SIZE {
                    s.push(q);
                }
            }
            Classification::Truncated => self.truncated += 1,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (id, c) in other.counts {
            *self.counts.entry(id).or_default() += c;
        }
        self.truncated += other.truncated;
        for (id, s) in other.samples {
            let mine = self.samples.entry(id).or_default();
            mine.extend(s);
            mine.sort_unstable();
            mine.truncate(SAMPLE_SIZE);
        }
        self
    }
}

const CHUNK: u64 = 1 << 12;

fn check_range(lo: u64, hi: u64, partitions: usize) -> Result<()> {
    if lo == 0 || lo > hi {
        return Err(Error::domain(format!(
            "census range needs 1 ≤ lo ≤ hi, got [{lo}, {hi}]"
        )));
    }
    if hi == u64::MAX {
        return Err(Error::domain("census upper bound must be below u64::MAX"));
    }
    if partitions == 0 {
        return Err(Error::domain("partitions must be ≥ 1"));
    }
    Ok(())
}

fn pool(partitions: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(partitions)
        .build()
        .map_err(|e| Error::domain(format!("cannot start {partitions} workers: {e}")))
}

fn chunks(lo: u64, hi: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n = usize::try_from((hi - lo) / CHUNK + 1).expect("chunk count fits usize");
    (0..n).into_par_iter().map(move |i| {
        let a = lo + i as u64 * CHUNK;
        (a, hi.min(a + CHUNK - 1))
    })
}

fn classify_chunk(
    a: u64,
    b: u64,
    variant: MapVariant,
    cap: u64,
    memo: &Memo,
    mut f: impl FnMut(u64, Classification),
) {
    let mut path = Vec::new();
    for q in a..=b {
        // an overflowing orbit is reported like one that ran out of steps
        let c = walk(q, variant, cap, Some(memo), &mut path).unwrap_or(Classification::Truncated);
        f(q, c);
    }
}

fn report(
    variant: MapVariant,
    lo: u64,
    hi: u64,
    cap: u64,
    partitions: usize,
    tally: Tally,
    start: Instant,
) -> CensusReport {
    let mut counts = tally.counts;
    for &id in variant.known_cycles() {
        counts.entry(id).or_default();
    }
    CensusReport {
        variant,
        lo,
        hi,
        counts,
        truncated: tally.truncated,
        samples: tally.samples,
        elapsed: start.elapsed(),
        step_cap: cap,
        partitions,
    }
}

/// Classifies every `q` in `[lo, hi]` on `partitions` worker threads.
pub fn sweep(
    lo: u64,
    hi: u64,
    variant: MapVariant,
    partitions: usize,
    step_cap: u64,
) -> Result<CensusReport> {
    check_range(lo, hi, partitions)?;
    let start = Instant::now();
    let memo = Memo::new(DEFAULT_MEMO_LIMIT.min(hi as usize + 1));
    let tally = pool(partitions)?.install(|| {
        chunks(lo, hi)
            .map(|(a, b)| {
                let mut t = Tally::default();
                classify_chunk(a, b, variant, step_cap, &memo, |q, c| t.add(q, c));
                t
            })
            .reduce(Tally::default, Tally::merge)
    });
    Ok(report(variant, lo, hi, step_cap, partitions, tally, start))
}

/// Like [`sweep`], also returning the per-value classifications in order.
pub fn sweep_records(
    lo: u64,
    hi: u64,
    variant: MapVariant,
    partitions: usize,
    step_cap: u64,
) -> Result<(CensusReport, Vec<Classification>)> {
    check_range(lo, hi, partitions)?;
    let start = Instant::now();
    let memo = Memo::new(DEFAULT_MEMO_LIMIT.min(hi as usize + 1));
    let parts: Vec<(Tally, Vec<Classification>)> = pool(partitions)?.install(|| {
        chunks(lo, hi)
            .map(|(a, b)| {
                let mut t = Tally::default();
                let mut rows = Vec::with_capacity((b - a + 1) as usize);
                classify_chunk(a, b, variant, step_cap, &memo, |q, c| {
                    t.add(q, c);
                    rows.push(c);
                });
                (t, rows)
            })
            .collect()
    });
    let mut tally = Tally::default();
    let mut records = Vec::with_capacity((hi - lo + 1) as usize);
    for (t, rows) in parts {
        tally = tally.merge(t);
        records.extend(rows);
    }
    Ok((
        report(variant, lo, hi, step_cap, partitions, tally, start),
        records,
    ))
}

/// Writes `q,cycle_label,steps` rows for consecutive values from `lo`.
pub fn write_csv<W: Write>(mut w: W, lo: u64, records: &[Classification]) -> io::Result<()> {
    writeln!(w, "{CENSUS_CSV_HEADER}")?;
    for (q, c) in (lo..).zip(records) {
        match c {
            Classification::Cycle { id, steps } => writeln!(w, "{q},{id},{steps}")?,
            Classification::Truncated => writeln!(w, "{q},truncated,")?,
        }
    }
    Ok(())
}

/// The first `per_column` values of `[1, hi]` in each known cycle class,
/// ascending, one column per class.
pub fn membership_table(
    hi: u64,
    variant: MapVariant,
    per_column: usize,
) -> Result<Vec<(CycleId, Vec<u64>)>> {
    if hi == 0 {
        return Err(Error::domain("membership table needs hi ≥ 1"));
    }
    let mut columns: Vec<(CycleId, Vec<u64>)> = variant
        .known_cycles()
        .iter()
        .map(|&id| (id, Vec::new()))
        .collect();
    let memo = Memo::new(DEFAULT_MEMO_LIMIT.min(hi as usize + 1));
    let mut path = Vec::new();
    for q in 1..=hi {
        if columns.iter().all(|(_, c)| c.len() >= per_column) {
            break;
        }
        if let Some(id) = walk(q, variant, DEFAULT_STEP_CAP, Some(&memo), &mut path)?.cycle() {
            if let Some((_, col)) = columns.iter_mut().find(|(c, _)| *c == id) {
                if col.len() < per_column {
                    col.push(q);
                }
            }
        }
    }
    Ok(columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    use MapVariant::{Minus, Plus};

    fn id(q: u64, v: MapVariant) -> CycleId {
        classify(q, v, DEFAULT_STEP_CAP).unwrap().cycle().unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(id(3, Minus), CycleId::C1);
        assert_eq!(id(9, Minus), CycleId::C5_7);
        assert_eq!(id(21, Minus), CycleId::C17);
        assert_eq!(id(27, Plus), CycleId::C1);
        assert_eq!(
            classify(1, Plus, 5).unwrap(),
            Classification::Cycle {
                id: CycleId::C1,
                steps: 0
            }
        );
        assert_eq!(
            classify(3, Plus, 10).unwrap(),
            Classification::Cycle {
                id: CycleId::C1,
                steps: 5
            }
        );
        assert_eq!(classify(27, Plus, 10).unwrap(), Classification::Truncated);
        assert!(classify(0, Plus, 10).is_err());
        assert!(classify(u64::MAX, Plus, 10).unwrap_err().is_overflow());
    }

    #[test]
    fn memo_agrees_with_direct_walk() {
        let mut path = Vec::new();
        for v in [Plus, Minus] {
            let memo = Memo::new(1 << 12);
            for q in 1..3000 {
                let with = walk(q, v, 500, Some(&memo), &mut path).unwrap();
                assert_eq!(with, classify(q, v, 500).unwrap(), "q = {q}");
            }
        }
    }

    #[test]
    fn sweep_examples() {
        let r = sweep(1, 100, Plus, 2, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(r.counts[&CycleId::C1], 100);
        assert_eq!(r.frequency(CycleId::C1), 1.0);

        let r = sweep(5, 5, Minus, 1, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(r.counts[&CycleId::C5_7], 1);
        assert_eq!(r.counts[&CycleId::C1], 0);
        assert_eq!(r.samples[&CycleId::C5_7], [5]);

        assert!(sweep(0, 5, Minus, 1, 10).is_err());
        assert!(sweep(6, 5, Minus, 1, 10).is_err());
        assert!(sweep(1, 5, Minus, 0, 10).is_err());
    }

    #[test]
    fn truncation_is_counted() {
        let r = sweep(1, 100, Plus, 3, 20).unwrap();
        assert!(r.truncated > 0);
        assert_eq!(r.counts.values().sum::<u64>() + r.truncated, 100);
    }

    #[test]
    fn records_and_csv() {
        let (r, rows) = sweep_records(1, 12, Minus, 4, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(
            r,
            sweep(1, 12, Minus, 4, DEFAULT_STEP_CAP)
                .map(|s| CensusReport {
                    elapsed: r.elapsed,
                    ..s
                })
                .unwrap()
        );
        let mut buf = Vec::new();
        write_csv(&mut buf, 1, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CENSUS_CSV_HEADER);
        assert_eq!(lines[1], "1,C1,0");
        assert_eq!(lines[3], "3,C1,3");
        assert_eq!(lines[9], "9,C5_7,7");
    }

    #[test]
    fn json_summary() {
        let r = sweep(1, 3, Minus, 1, 100).unwrap();
        let v = r.to_json();
        assert_eq!(v["counts"]["C1"], 3);
        assert_eq!(v["frequencies"]["C1"], 1.0);
        assert_eq!(v["frequencies"]["C17"], 0.0);
        assert_eq!(v["step_cap"], 100);
        assert!(v["elapsed_ms"].is_u64());
    }

    #[test]
    fn membership_columns() {
        let cols = membership_table(250, Minus, 11).unwrap();
        assert_eq!(cols[0].1, [1, 2, 3, 4, 6, 8, 11, 12, 15, 16, 22]);
        assert_eq!(cols[1].1, [5, 7, 9, 10, 13, 14, 18, 19, 20, 26, 27]);
        assert_eq!(&cols[2].1[..10], [17, 21, 23, 25, 31, 33, 34, 37, 41, 42]);

        let cols = membership_table(10, Plus, 10).unwrap();
        assert_eq!(cols, [(CycleId::C1, (1..=10).collect())]);
    }
}
