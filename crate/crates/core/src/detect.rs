//! Brent's cycle detection, in streaming and closed-loop form.

/// Tail length `mu` and period `lambda` of an eventually periodic orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleInfo {
    pub mu: u64,
    pub lambda: u64,
}

/// Incremental Brent detector: feed it `x₁, x₂, …` of an orbit started at
/// `x₀` and it reports the period as soon as a repeat is certain.
#[derive(Clone, Debug)]
pub struct BrentDetector<T> {
    tortoise: T,
    power: u64,
    lam: u64,
}

impl<T: PartialEq + Clone> BrentDetector<T> {
    pub fn new(start: T) -> Self {
        BrentDetector {
            tortoise: start,
            power: 1,
            lam: 0,
        }
    }

    /// Returns the period once `value` closes a cycle.
    pub fn observe(&mut self, value: &T) -> Option<u64> {
        self.lam += 1;
        if *value == self.tortoise {
            return Some(self.lam);
        }
        if self.lam == self.power {
            self.tortoise = value.clone();
            self.power *= 2;
            self.lam = 0;
        }
        None
    }
}

/// Runs Brent's algorithm for at most `limit` successor evaluations.
pub fn brent<T, F>(start: T, mut successor: F, limit: u64) -> Option<CycleInfo>
where
    T: PartialEq + Clone,
    F: FnMut(&T) -> T,
{
    let mut detector = BrentDetector::new(start.clone());
    let mut x = start.clone();
    let mut lambda = None;
    for _ in 0..limit {
        x = successor(&x);
        if let Some(l) = detector.observe(&x) {
            lambda = Some(l);
            break;
        }
    }
    let lambda = lambda?;

    let mut tortoise = start.clone();
    let mut hare = start;
    for _ in 0..lambda {
        hare = successor(&hare);
    }
    let mut mu = 0;
    while tortoise != hare {
        tortoise = successor(&tortoise);
        hare = successor(&hare);
        mu += 1;
    }
    Some(CycleInfo { mu, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_modular_map() {
        // -10 -> 4 -> 6 -> 8 -> 4 ...
        let info = brent(-10i64, |x| (x + 5).rem_euclid(6) + 3, 100).unwrap();
        assert_eq!(info, CycleInfo { mu: 1, lambda: 3 });
    }

    #[test]
    fn pure_cycle_and_fixed_point() {
        assert_eq!(
            brent(0u32, |x| (x + 1) % 7, 100),
            Some(CycleInfo { mu: 0, lambda: 7 })
        );
        assert_eq!(
            brent(5u32, |x| *x, 10),
            Some(CycleInfo { mu: 0, lambda: 1 })
        );
    }

    #[test]
    fn limit_exhausted() {
        assert_eq!(brent(0u64, |x| x + 1, 1000), None);
    }

    #[test]
    fn matches_naive_first_repeat() {
        for m in 2u64..60 {
            for a in 1..m {
                let f = |x: &u64| (x * x + a) % m;
                let mut seen = std::collections::HashMap::new();
                let mut x = 1u64;
                let mut i = 0u64;
                let (mu, lambda) = loop {
                    if let Some(&j) = seen.get(&x) {
                        break (j, i - j);
                    }
                    seen.insert(x, i);
                    x = f(&x);
                    i += 1;
                };
                assert_eq!(
                    brent(1u64, f, 10_000),
                    Some(CycleInfo { mu, lambda }),
                    "m={m} a={a}"
                );
            }
        }
    }
}
