//! Closed-form cycle equations.
//!
//! Following `N` odd steps with exponents `a₁..a_N` (so that
//! `3q_j ± 1 = q_{j+1}·2^{a_{j+1}}`) and requiring `q_N = q_0` gives
//!
//! ```text
//!   q = ε · S / (2^A − 3^N),   S = Σ_{j<N} 3^{N−1−j} · 2^{A_j}
//! ```
//!
//! with `A_j = a₁ + … + a_j`, `A = A_N`, and `ε = +1` for 3q+1, `−1` for
//! 3q−1. The exponent tuple is read in orbit order starting from `q`, e.g.
//! `17` under 3q−1 is `(1, 1, 1, 2, 1, 1, 4)`: `S = 2363`, `3^7 − 2^11 = 139`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::collatz::{track_exponents, MapVariant};
use crate::error::{Error, Result};
use crate::numcore::Sign;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TrackSpec {
    pub variant: MapVariant,
    pub exponents: Vec<u32>,
}

impl TrackSpec {
    pub fn new(variant: MapVariant, exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::domain("a cycle needs at least one track"));
        }
        if exponents.contains(&0) {
            return Err(Error::domain("track exponents must be ≥ 1"));
        }
        Ok(TrackSpec { variant, exponents })
    }

    pub fn tracks(&self) -> usize {
        self.exponents.len()
    }

    pub fn total_exponent(&self) -> u64 {
        self.exponents.iter().map(|&a| u64::from(a)).sum()
    }

    /// The tuple started at track `by`.
    pub fn rotated(&self, by: usize) -> TrackSpec {
        let mut exponents = self.exponents.clone();
        let len = exponents.len();
        exponents.rotate_left(by % len);
        TrackSpec {
            variant: self.variant,
            exponents,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleSolution {
    pub spec: TrackSpec,
    /// `S`, always positive.
    pub numerator: BigInt,
    /// `ε·(2^A − 3^N)`; `q = numerator / denominator`.
    pub denominator: BigInt,
    pub q: BigRational,
    /// ε: which side of `3q ± 1` the equation was solved for.
    pub sign: Sign,
    /// `q` is a positive odd integer.
    pub integral: bool,
    /// Simulation from `q` consumed exactly the given exponents and closed.
    pub verified: bool,
}

impl CycleSolution {
    /// `q` as a machine integer when it is integral and fits.
    pub fn q_u64(&self) -> Option<u64> {
        if self.integral {
            self.q.to_integer().to_u64()
        } else {
            None
        }
    }

    /// Re-runs the odd steps from `q` and checks they reproduce the tuple
    /// and return to `q`.
    pub fn simulate(&self) -> bool {
        let Some(q) = self.q_u64() else { return false };
        match track_exponents(q, self.spec.variant, self.spec.tracks()) {
            Ok(tracks) => {
                tracks
                    .iter()
                    .map(|t| t.k)
                    .eq(self.spec.exponents.iter().copied())
                    && tracks.last().map(|t| t.q_odd) == Some(q)
            }
            Err(_) => false,
        }
    }

    /// Odd members of the cycle in orbit order, starting at `q`.
    pub fn odd_members(&self) -> Option<Vec<u64>> {
        let q = self.q_u64()?;
        let tracks = track_exponents(q, self.spec.variant, self.spec.tracks()).ok()?;
        let mut out = vec![q];
        out.extend(tracks[..tracks.len() - 1].iter().map(|t| t.q_odd));
        Some(out)
    }

    pub fn q_string(&self) -> String {
        if self.q.is_integer() {
            self.q.numer().to_string()
        } else {
            format!("{}/{}", self.q.numer(), self.q.denom())
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "variant": self.spec.variant,
            "exponents": self.spec.exponents,
            "numerator": self.numerator.to_string(),
            "denominator": self.denominator.to_string(),
            "q": self.q_string(),
            "sign": self.sign,
            "integral": self.integral,
            "verified": self.verified,
        })
    }
}

fn epsilon(variant: MapVariant) -> Sign {
    match variant {
        MapVariant::Plus => Sign::Plus,
        MapVariant::Minus => Sign::Minus,
    }
}

/// Exact solution of the N-track cycle equation for `spec`.
pub fn multi_track_q(spec: &TrackSpec) -> Result<CycleSolution> {
    let spec = TrackSpec::new(spec.variant, spec.exponents.clone())?;
    let mut numerator = BigInt::zero();
    let mut partial: u64 = 0;
    for &a in &spec.exponents {
        numerator = numerator * 3u32 + (BigInt::one() << partial);
        partial += u64::from(a);
    }
    let n = u32::try_from(spec.tracks()).map_err(|_| Error::overflow("track count"))?;
    let mut denominator = (BigInt::one() << partial) - BigInt::from(3u32).pow(n);
    if denominator.is_zero() {
        return Err(Error::domain(
            "2^A = 3^N has no solution; denominator vanished",
        ));
    }
    let sign = epsilon(spec.variant);
    if sign == Sign::Minus {
        denominator = -denominator;
    }
    let q = BigRational::new(numerator.clone(), denominator.clone());
    let integral = q.is_integer() && q.is_positive() && q.numer().is_odd();
    let mut solution = CycleSolution {
        spec,
        numerator,
        denominator,
        q,
        sign,
        integral,
        verified: false,
    };
    solution.verified = solution.integral && solution.simulate();
    Ok(solution)
}

/// The two-track equation: exponent `m` on the first track, `k` on the second,
/// `q = (3 + 2^m) / ±(2^{k+m} − 9)`.
pub fn two_track_q(k: u32, m: u32, variant: MapVariant) -> Result<CycleSolution> {
    multi_track_q(&TrackSpec::new(variant, vec![m, k])?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub variant: MapVariant,
    pub max_tracks: usize,
    pub max_total_exponent: u32,
    /// One solution per cycle, rotated to start at its smallest odd member,
    /// ordered by `(N, exponents)`.
    pub solutions: Vec<CycleSolution>,
    pub skipped_overflow: u64,
}

impl CycleReport {
    pub fn representatives(&self) -> Vec<u64> {
        self.solutions
            .iter()
            .filter_map(CycleSolution::q_u64)
            .collect()
    }

    /// Every odd value lying on one of the reported cycles.
    pub fn odd_members(&self) -> BTreeSet<u64> {
        self.solutions
            .iter()
            .filter_map(CycleSolution::odd_members)
            .flatten()
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let solutions: Vec<_> = self
            .solutions
            .iter()
            .map(|s| {
                json!({
                    "exponents": s.spec.exponents,
                    "q": s.q_string(),
                    "sign": s.sign,
                    "verified": s.verified,
                })
            })
            .collect();
        json!({
            "variant": self.variant,
            "bounds": {
                "max_tracks": self.max_tracks,
                "max_total_exponent": self.max_total_exponent,
            },
            "solutions": solutions,
            "skipped_overflow_count": self.skipped_overflow,
        })
    }
}

struct Search {
    variant: MapVariant,
    max_tracks: usize,
    max_total: u32,
    /// For 3q−1: `A_n` must stay ≤ this + n at depth n, else no extension
    /// can make `3^N > 2^A`.
    minus_slack: Option<i64>,
}

#[derive(Default)]
struct Hits {
    found: Vec<(usize, Vec<u32>, u64)>,
    skipped: u64,
}

impl Hits {
    fn merge(mut self, other: Hits) -> Hits {
        self.found.extend(other.found);
        self.skipped += other.skipped;
        self
    }
}

impl Search {
    /// Depth-first over extensions of `prefix`. `horner` is
    /// `Σ_{j<n} 3^{n−1−j} 2^{A_j}` for the current prefix, `None` once it no
    /// longer fits in `i128`.
    fn walk(
        &self,
        prefix: &mut Vec<u32>,
        total: u32,
        horner: Option<i128>,
        pow3: Option<i128>,
        hits: &mut Hits,
    ) {
        let n = prefix.len();
        if n == self.max_tracks {
            return;
        }
        // S and 3^N for every child are the same; only A differs.
        let child_horner = horner
            .zip(pow2(total))
            .and_then(|(s, p)| s.checked_mul(3)?.checked_add(p));
        let child_pow3 = pow3.and_then(|p| p.checked_mul(3));
        for a in 1..=self.max_total.saturating_sub(total) {
            let child_total = total + a;
            if let Some(slack) = self.minus_slack {
                if i64::from(child_total) > slack + n as i64 + 1 {
                    break;
                }
            }
            prefix.push(a);
            self.evaluate(prefix, child_total, child_horner, child_pow3, hits);
            self.walk(prefix, child_total, child_horner, child_pow3, hits);
            prefix.pop();
        }
    }

    fn evaluate(
        &self,
        prefix: &[u32],
        total: u32,
        s: Option<i128>,
        pow3: Option<i128>,
        hits: &mut Hits,
    ) {
        let den = pow2(total).zip(pow3).map(|(p2, p3)| match self.variant {
            MapVariant::Plus => p2 - p3,
            MapVariant::Minus => p3 - p2,
        });
        let (Some(s), Some(den)) = (s, den) else {
            hits.skipped += 1;
            return;
        };
        if den <= 0 || s % den != 0 {
            return;
        }
        let q = s / den;
        if q % 2 == 1 {
            match u64::try_from(q) {
                Ok(q) => hits.found.push((prefix.len(), prefix.to_vec(), q)),
                Err(_) => hits.skipped += 1,
            }
        }
    }
}

fn pow2(e: u32) -> Option<i128> {
    (e < 127).then(|| 1i128 << e)
}

/// All cycles with at most `max_tracks` odd steps and total exponent at most
/// `max_total_exponent`, one entry per cycle.
///
/// Tuples whose numbers do not fit in 128 bits are skipped and counted.
pub fn enumerate_integer_cycles(
    variant: MapVariant,
    max_tracks: usize,
    max_total_exponent: u32,
) -> Result<CycleReport> {
    if max_tracks == 0 || max_total_exponent == 0 {
        return Err(Error::domain("enumeration bounds must be ≥ 1"));
    }
    let minus_slack = match variant {
        MapVariant::Plus => None,
        MapVariant::Minus => {
            let n = u32::try_from(max_tracks).map_err(|_| Error::overflow("max_tracks"))?;
            let log2 = BigUint::from(3u32).pow(n).bits() as i64 - 1;
            Some(log2 - max_tracks as i64)
        }
    };
    let search = Search {
        variant,
        max_tracks,
        max_total: max_total_exponent,
        minus_slack,
    };

    // shard on the first exponent
    let hits = (1..=max_total_exponent)
        .into_par_iter()
        .map(|a| {
            let mut hits = Hits::default();
            if let Some(slack) = search.minus_slack {
                if i64::from(a) > slack + 1 {
                    return hits;
                }
            }
            let mut prefix = vec![a];
            search.evaluate(&prefix, a, Some(1), Some(3), &mut hits);
            search.walk(&mut prefix, a, Some(1), Some(3), &mut hits);
            hits
        })
        .reduce(Hits::default, Hits::merge);

    let mut found = hits.found;
    found.sort();

    let mut by_anchor: BTreeMap<u64, CycleSolution> = BTreeMap::new();
    for (_, exponents, _) in found {
        let raw = multi_track_q(&TrackSpec::new(variant, exponents)?)?;
        let canonical = match raw.odd_members() {
            Some(members) => {
                let (pos, &min) = members
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, v)| *v)
                    .expect("cycle has members");
                if by_anchor.contains_key(&min) {
                    continue;
                }
                multi_track_q(&raw.spec.rotated(pos))?
            }
            None => raw,
        };
        let key = canonical.q_u64().unwrap_or(u64::MAX);
        by_anchor.entry(key).or_insert(canonical);
    }
    let mut solutions: Vec<_> = by_anchor.into_values().collect();
    solutions.sort_by(|a, b| {
        (a.spec.tracks(), &a.spec.exponents).cmp(&(b.spec.tracks(), &b.spec.exponents))
    });
    Ok(CycleReport {
        variant,
        max_tracks,
        max_total_exponent,
        solutions,
        skipped_overflow: hits.skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

fn is_prime(n: u64) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// The arithmetic relations between the members 5, 7 and 17 of the 3q−1
/// cycles.
pub fn identity_checks() -> Vec<IdentityCheck> {
    let mut out = Vec::new();

    let (lhs, rhs) = (5u64 * 7, 2u64 * 17 + 1);
    out.push(IdentityCheck {
        name: "q5*q7 = 2*q17 + 1",
        holds: lhs == rhs,
        detail: format!("{lhs} = {rhs}"),
    });

    let one = || BigUint::one();
    let solutions: Vec<u32> = (1..=64u32)
        .filter(|&k| {
            let lhs = ((one() << k) + 1u32) * ((one() << (k + 1)) - 1u32);
            let rhs = ((one() << (k + 2)) + 1u32) * 2u32 + 1u32;
            lhs == rhs
        })
        .collect();
    out.push(IdentityCheck {
        name: "(2^k+1)(2^(k+1)-1) = 2(2^(k+2)+1)+1 has the unique solution k = 2",
        holds: solutions == [2],
        detail: format!("k in {solutions:?} for 1 <= k <= 64"),
    });

    let fermat: Vec<u64> = (0..5).map(|i| (1u64 << (1u32 << i)) + 1).collect();
    let mersenne: Vec<u64> = (2..=63).map(|p| (1u64 << p) - 1).collect();
    let fermat_ok = [5u64, 17]
        .iter()
        .all(|v| fermat.contains(v) && is_prime(*v));
    let mersenne_ok = mersenne.contains(&7) && is_prime(7);
    out.push(IdentityCheck {
        name: "5 and 17 are Fermat primes, 7 is a Mersenne prime",
        holds: fermat_ok && mersenne_ok,
        detail: "5 = 2^(2^1)+1, 17 = 2^(2^2)+1, 7 = 2^3-1".to_string(),
    });

    let value = 7i64 * 5 - 2 * 17;
    out.push(IdentityCheck {
        name: "7*5 - 2*17 = 1",
        holds: value == 1,
        detail: format!("35 - 34 = {value}"),
    });
    out
}
