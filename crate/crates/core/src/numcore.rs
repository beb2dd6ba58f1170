//! Exact arithmetic for the parameterized Jacobsthal numbers
//! `K±(θ, n) = (θ·2^n ± (−1)^n) / 3` and the objects built from them.
//!
//! Every value here is exact. Integers are unbounded (`BigUint`/`BigInt`);
//! a [`KValue`] is an integer or an integer over three, never a float.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Selects K⁻ (numerator `θ·2^n − (−1)^n`) or K⁺ (numerator `θ·2^n + (−1)^n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Minus => "minus",
            Sign::Plus => "plus",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "minus" | "-" => Ok(Sign::Minus),
            "plus" | "+" => Ok(Sign::Plus),
            other => Err(format!("expected `minus` or `plus`, got `{other}`")),
        }
    }
}

/// Which node formula is applied along a doubling branch θ·2^n:
/// `(θ·2^n − 1)/3` or `(θ·2^n + 1)/3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    MinusOne,
    PlusOne,
}

impl BranchRule {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchRule::MinusOne => "minus_one",
            BranchRule::PlusOne => "plus_one",
        }
    }
}

impl fmt::Display for BranchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BranchRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "minus" | "minus_one" | "minus-one" => Ok(BranchRule::MinusOne),
            "plus" | "plus_one" | "plus-one" => Ok(BranchRule::PlusOne),
            other => Err(format!("expected `minus` or `plus`, got `{other}`")),
        }
    }
}

/// A positive integer written as `theta · 2^n` with `theta` odd.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OddCore {
    pub theta: BigUint,
    pub n: u64,
}

impl OddCore {
    pub fn value(&self) -> BigUint {
        &self.theta << self.n
    }
}

/// Splits `q` into its odd part and power of two.
pub fn decompose(q: impl Into<BigUint>) -> Result<OddCore> {
    let q = q.into();
    let n = q
        .trailing_zeros()
        .ok_or_else(|| Error::domain("cannot decompose 0 into θ·2^n"))?;
    Ok(OddCore { theta: q >> n, n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThetaVariant {
    /// θ = 1 + 6i
    T1,
    /// θ = 3 + 6i
    T3,
    /// θ = 5 + 6i
    T5,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThetaClass {
    pub variant: ThetaVariant,
    pub i: BigUint,
}

fn odd_theta(theta: impl Into<BigUint>) -> Result<BigUint> {
    let theta = theta.into();
    if theta.is_even() {
        return Err(Error::domain(format!(
            "θ must be odd and positive, got {theta}"
        )));
    }
    Ok(theta)
}

pub fn classify_theta(theta: impl Into<BigUint>) -> Result<ThetaClass> {
    let theta = odd_theta(theta)?;
    let (i, r) = theta.div_rem(&BigUint::from(6u8));
    let variant = match u8::try_from(&r).expect("residue below 6") {
        1 => ThetaVariant::T1,
        3 => ThetaVariant::T3,
        _ => ThetaVariant::T5,
    };
    Ok(ThetaClass { variant, i })
}

/// An exact value that is either an integer or a reduced third.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KValue {
    numer: BigInt,
    denom: u8,
}

impl KValue {
    /// The value `thirds / 3`, reduced.
    pub fn from_thirds(thirds: BigInt) -> Self {
        let (q, r) = thirds.div_rem(&BigInt::from(3));
        if r.is_zero() {
            KValue { numer: q, denom: 1 }
        } else {
            KValue {
                numer: thirds,
                denom: 3,
            }
        }
    }

    pub fn integer(value: impl Into<BigInt>) -> Self {
        KValue {
            numer: value.into(),
            denom: 1,
        }
    }

    pub fn numer(&self) -> &BigInt {
        &self.numer
    }

    /// Always 1 or 3.
    pub fn denom(&self) -> u8 {
        self.denom
    }

    pub fn is_integer(&self) -> bool {
        self.denom == 1
    }

    pub fn as_integer(&self) -> Option<&BigInt> {
        self.is_integer().then_some(&self.numer)
    }

    pub fn is_multiple_of_3(&self) -> bool {
        self.is_integer() && (&self.numer % 3u8).is_zero()
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numer.clone(), BigInt::from(self.denom))
    }
}

impl fmt::Display for KValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom == 1 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

impl Serialize for KValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn alternating(n: u64) -> BigInt {
    if n.is_multiple_of(2) {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

/// `K±(θ, n) = (θ·2^n ± (−1)^n) / 3`, exact.
pub fn k_number(theta: impl Into<BigUint>, n: u64, sign: Sign) -> Result<KValue> {
    let theta = odd_theta(theta)?;
    let base = BigInt::from(theta) << n;
    let thirds = match sign {
        Sign::Minus => base - alternating(n),
        Sign::Plus => base + alternating(n),
    };
    Ok(KValue::from_thirds(thirds))
}

/// Integer initial conditions `K₀ = (θ ∓ 1)/3`, `K₁ = θ − K₀`.
///
/// Fails unless `(θ ∓ 1)/3` is an integer, i.e. θ ≡ 1 (mod 3) for
/// [`Sign::Minus`] and θ ≡ 2 (mod 3) for [`Sign::Plus`].
pub fn seed_pair(theta: impl Into<BigUint>, sign: Sign) -> Result<(KValue, KValue)> {
    let theta = BigInt::from(odd_theta(theta)?);
    let (thirds, op): (BigInt, char) = match sign {
        Sign::Minus => (&theta - 1, '-'),
        Sign::Plus => (&theta + 1, '+'),
    };
    let (k0, r) = thirds.div_rem(&BigInt::from(3));
    if !r.is_zero() {
        return Err(Error::NoIntegerSeed {
            theta: theta.to_string(),
            op,
        });
    }
    let k1 = &theta - &k0;
    Ok((KValue::integer(k0), KValue::integer(k1)))
}

/// Jacobsthal–Lucas / Jacobsthal style seeds parameterized by θ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LjJSeeds {
    pub lj0: BigUint,
    pub lj1: BigUint,
    pub j0: BigUint,
    pub j1: BigUint,
}

pub fn lj_j_seeds(theta: impl Into<BigUint>) -> Result<LjJSeeds> {
    let theta = odd_theta(theta)?;
    let twice = &theta << 1u8;
    Ok(LjJSeeds {
        lj0: &theta + 1u8,
        lj1: &theta - 1u8,
        j0: &twice - 1u8,
        j1: twice + 1u8,
    })
}

/// One row of a K± table: `entries[n] = K±(θ, n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceRow {
    pub theta: BigUint,
    pub sign: Sign,
    pub entries: Vec<KValue>,
    /// `bracketed[n]` is set when `entries[n]` is an integer multiple of three.
    pub bracketed: Vec<bool>,
}

pub const SEQUENCE_CSV_HEADER: &str = "theta,sign,n,value,is_multiple_of_3";

impl SequenceRow {
    /// Space separated, multiples of three in square brackets.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .zip(&self.bracketed)
            .map(|(v, &b)| if b { format!("[{v}]") } else { v.to_string() })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Writes the header and one line per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{SEQUENCE_CSV_HEADER}")?;
        for (n, (v, b)) in self.entries.iter().zip(&self.bracketed).enumerate() {
            writeln!(w, "{},{},{},{},{}", self.theta, self.sign, n, v, b)?;
        }
        Ok(())
    }

    /// Values are decimal strings so arbitrarily large entries stay exact.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .entries
            .iter()
            .zip(&self.bracketed)
            .enumerate()
            .map(|(n, (v, b))| json!({ "n": n, "value": v.to_string(), "is_multiple_of_3": b }))
            .collect();
        json!({ "theta": self.theta.to_string(), "sign": self.sign, "entries": entries })
    }
}

pub fn k_sequence(theta: impl Into<BigUint>, sign: Sign, count: usize) -> Result<SequenceRow> {
    if count < 2 {
        return Err(Error::domain(format!(
            "sequence length must be at least 2, got {count}"
        )));
    }
    let theta = odd_theta(theta)?;
    let entries = (0..count as u64)
        .map(|n| k_number(theta.clone(), n, sign))
        .collect::<Result<Vec<_>>>()?;
    let bracketed = entries.iter().map(KValue::is_multiple_of_3).collect();
    Ok(SequenceRow {
        theta,
        sign,
        entries,
        bracketed,
    })
}

/// `(θ·2^n − 1)/3` or `(θ·2^n + 1)/3` when that is an integer.
///
/// Always `None` when θ ≡ 0 (mod 3).
pub fn node_value(theta: impl Into<BigUint>, n: u64, rule: BranchRule) -> Result<Option<BigUint>> {
    let doubled = odd_theta(theta)? << n;
    let shifted = match rule {
        BranchRule::MinusOne => doubled - 1u8,
        BranchRule::PlusOne => doubled + 1u8,
    };
    let (q, r) = shifted.div_rem(&BigUint::from(3u8));
    Ok(r.is_zero().then_some(q))
}

/// Machine-word variant of [`node_value`]. Integrality is decided from
/// residues, so a non-integral node never reports overflow.
pub fn node_value_u64(theta: u64, n: u32, rule: BranchRule) -> Result<Option<u64>> {
    if theta.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "θ must be odd and positive, got {theta}"
        )));
    }
    // θ·2^n mod 3, using 2^n ≡ (−1)^n
    let pow_res = if n.is_multiple_of(2) { 1 } else { 2 };
    let res = (theta % 3) * pow_res % 3;
    let integral = match rule {
        BranchRule::MinusOne => res == 1,
        BranchRule::PlusOne => res == 2,
    };
    if !integral {
        return Ok(None);
    }
    let overflow = || Error::overflow(format!("{theta}·2^{n} does not fit the node range"));
    let wide = u128::from(theta);
    if n >= wide.leading_zeros() {
        return Err(overflow());
    }
    let doubled = wide << n;
    let shifted = match rule {
        BranchRule::MinusOne => doubled - 1,
        BranchRule::PlusOne => doubled + 1,
    };
    u64::try_from(shifted / 3).map(Some).map_err(|_| overflow())
}

/// The two rows obtained by alternately adding and subtracting one around
/// `2^n`: `row_a[n] = 2^n + (−1)^n`, `row_b[n] = 2^n − (−1)^n`.
pub fn g_sequences(count: usize) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    if count == 0 {
        return Err(Error::domain("g_sequences needs count ≥ 1"));
    }
    let mut row_a = Vec::with_capacity(count);
    let mut row_b = Vec::with_capacity(count);
    for n in 0..count {
        let p = BigUint::one() << n;
        if n % 2 == 0 {
            row_b.push(&p - 1u8);
            row_a.push(p + 1u8);
        } else {
            row_a.push(&p - 1u8);
            row_b.push(p + 1u8);
        }
    }
    Ok((row_a, row_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(row: &SequenceRow) -> Vec<i64> {
        row.entries
            .iter()
            .map(|v| i64::try_from(v.as_integer().expect("integral entry")).unwrap())
            .collect()
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().copied().map(BigUint::from).collect()
    }

    #[test]
    fn decompose_examples() {
        let c = decompose(1u32).unwrap();
        assert_eq!((c.theta, c.n), (BigUint::from(1u8), 0));
        let c = decompose(40u32).unwrap();
        assert_eq!((c.theta.clone(), c.n), (BigUint::from(5u8), 3));
        assert_eq!(c.value(), BigUint::from(40u8));
        let c = decompose(12u32).unwrap();
        assert_eq!((c.theta, c.n), (BigUint::from(3u8), 2));
        assert!(matches!(decompose(0u32), Err(Error::Domain(_))));
    }

    #[test]
    fn classify_examples() {
        let c = classify_theta(1u32).unwrap();
        assert_eq!((c.variant, c.i), (ThetaVariant::T1, BigUint::zero()));
        let c = classify_theta(5u32).unwrap();
        assert_eq!((c.variant, c.i), (ThetaVariant::T5, BigUint::zero()));
        let c = classify_theta(9u32).unwrap();
        assert_eq!((c.variant, c.i), (ThetaVariant::T3, BigUint::one()));
        assert!(classify_theta(4u32).is_err());
        assert!(classify_theta(0u32).is_err());
    }

    #[test]
    fn k_number_examples() {
        assert_eq!(
            k_number(49u32, 0, Sign::Minus).unwrap(),
            KValue::integer(16)
        );
        assert_eq!(k_number(1u32, 4, Sign::Minus).unwrap(), KValue::integer(5));
        assert_eq!(k_number(5u32, 1, Sign::Plus).unwrap(), KValue::integer(3));

        let third = k_number(3u32, 0, Sign::Minus).unwrap();
        assert!(!third.is_integer());
        assert_eq!(third.to_string(), "2/3");
        assert_eq!(k_number(3u32, 0, Sign::Plus).unwrap().to_string(), "4/3");
        assert!(k_number(2u32, 0, Sign::Plus).is_err());
    }

    #[test]
    fn third_fraction_rows() {
        // θ = 9 and 15 as tabulated; K⁺ then K⁻
        let cases: [(u32, Sign, [&str; 6]); 4] = [
            (
                9,
                Sign::Plus,
                ["10/3", "17/3", "37/3", "71/3", "145/3", "287/3"],
            ),
            (
                9,
                Sign::Minus,
                ["8/3", "19/3", "35/3", "73/3", "143/3", "289/3"],
            ),
            (
                15,
                Sign::Plus,
                ["16/3", "29/3", "61/3", "119/3", "241/3", "479/3"],
            ),
            (
                15,
                Sign::Minus,
                ["14/3", "31/3", "59/3", "121/3", "239/3", "481/3"],
            ),
        ];
        for (theta, sign, want) in cases {
            let row = k_sequence(theta, sign, 6).unwrap();
            let got: Vec<_> = row.entries.iter().map(ToString::to_string).collect();
            assert_eq!(got, want, "θ={theta} {sign}");
            assert!(row.bracketed.iter().all(|b| !b));
        }
        // θ = 3: computed directly from the closed form (the tabulated row
        // contains two misprints, 35/3 and 8/3)
        let row = k_sequence(3u32, Sign::Plus, 6).unwrap();
        let got: Vec<_> = row.entries.iter().map(ToString::to_string).collect();
        assert_eq!(got, ["4/3", "5/3", "13/3", "23/3", "49/3", "95/3"]);
        let row = k_sequence(3u32, Sign::Minus, 6).unwrap();
        let got: Vec<_> = row.entries.iter().map(ToString::to_string).collect();
        assert_eq!(got, ["2/3", "7/3", "11/3", "25/3", "47/3", "97/3"]);
    }

    #[test]
    fn seed_pair_examples() {
        assert_eq!(
            seed_pair(49u32, Sign::Minus).unwrap(),
            (KValue::integer(16), KValue::integer(33))
        );
        assert_eq!(
            seed_pair(1u32, Sign::Minus).unwrap(),
            (KValue::integer(0), KValue::integer(1))
        );
        assert!(matches!(
            seed_pair(9u32, Sign::Minus),
            Err(Error::NoIntegerSeed { .. })
        ));
        assert!(matches!(
            seed_pair(7u32, Sign::Plus),
            Err(Error::NoIntegerSeed { .. })
        ));
        assert_eq!(
            seed_pair(5u32, Sign::Plus).unwrap(),
            (KValue::integer(2), KValue::integer(3))
        );
    }

    #[test]
    fn lj_j_seed_examples() {
        let s = lj_j_seeds(1u32).unwrap();
        assert_eq!([s.lj0, s.lj1, s.j0, s.j1], big(&[2, 0, 1, 3])[..]);
        let s = lj_j_seeds(5u32).unwrap();
        assert_eq!([s.lj0, s.lj1, s.j0, s.j1], big(&[6, 4, 9, 11])[..]);
        let s = lj_j_seeds(7u32).unwrap();
        assert_eq!([s.lj0, s.lj1, s.j0, s.j1], big(&[8, 6, 13, 15])[..]);
    }

    #[test]
    fn k_sequence_examples() {
        let row = k_sequence(1u32, Sign::Minus, 10).unwrap();
        assert_eq!(ints(&row), [0, 1, 1, 3, 5, 11, 21, 43, 85, 171]);
        assert_eq!(row.to_text(), "[0] 1 1 [3] 5 11 [21] 43 85 [171]");

        let row = k_sequence(5u32, Sign::Plus, 10).unwrap();
        assert_eq!(row.to_text(), "2 [3] 7 13 [27] 53 107 [213] 427 853");

        let row = k_sequence(7u32, Sign::Minus, 10).unwrap();
        assert_eq!(row.to_text(), "2 5 [9] 19 37 [75] 149 299 [597] 1195");

        assert!(k_sequence(1u32, Sign::Minus, 1).is_err());
    }

    #[test]
    fn sequence_row_serializations() {
        let row = k_sequence(1u32, Sign::Minus, 3).unwrap();
        let mut buf = Vec::new();
        row.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "theta,sign,n,value,is_multiple_of_3\n1,minus,0,0,true\n1,minus,1,1,false\n1,minus,2,1,false\n"
        );
        let js = row.to_json();
        assert_eq!(js["sign"], "minus");
        assert_eq!(js["entries"][0]["value"], "0");
        assert_eq!(js["entries"][0]["is_multiple_of_3"], true);
    }

    #[test]
    fn node_value_examples() {
        assert_eq!(
            node_value(1u32, 2, BranchRule::MinusOne).unwrap(),
            Some(BigUint::one())
        );
        assert_eq!(
            node_value(1u32, 3, BranchRule::PlusOne).unwrap(),
            Some(BigUint::from(3u8))
        );
        for n in 0..=10 {
            assert_eq!(node_value(3u32, n, BranchRule::MinusOne).unwrap(), None);
            assert_eq!(node_value(3u32, n, BranchRule::PlusOne).unwrap(), None);
        }
    }

    #[test]
    fn node_value_u64_overflow_and_agreement() {
        assert_eq!(node_value_u64(1, 2, BranchRule::MinusOne).unwrap(), Some(1));
        assert_eq!(node_value_u64(5, 1, BranchRule::PlusOne).unwrap(), None);
        // 2^64 fits in u128 but (2^66 − 1)/3 does not fit in u64
        assert!(node_value_u64(1, 66, BranchRule::MinusOne)
            .unwrap_err()
            .is_overflow());
        // non-integral nodes never overflow
        assert_eq!(node_value_u64(1, 200, BranchRule::PlusOne).unwrap(), None);
        // (2^65 + 1)/3 < 2^64
        let big = node_value(1u32, 65, BranchRule::PlusOne).unwrap().unwrap();
        assert_eq!(
            node_value_u64(1, 65, BranchRule::PlusOne)
                .unwrap()
                .map(BigUint::from),
            Some(big)
        );
        assert!(node_value_u64(4, 1, BranchRule::PlusOne).is_err());
    }

    #[test]
    fn g_sequence_examples() {
        let (a, b) = g_sequences(6).unwrap();
        assert_eq!(a, big(&[2, 1, 5, 7, 17, 31]));
        assert_eq!(b, big(&[0, 3, 3, 9, 15, 33]));
        // the sixth entry obeys G(n+1) = 2·G(n) + 3
        assert_eq!(&b[4] * 2u8 + 3u8, b[5]);
        let (a, b) = g_sequences(1).unwrap();
        assert_eq!((a, b), (big(&[2]), big(&[0])));
        assert!(g_sequences(0).is_err());
    }

    #[test]
    fn parse_sign_and_rule() {
        assert_eq!("minus".parse::<Sign>().unwrap(), Sign::Minus);
        assert_eq!("plus".parse::<BranchRule>().unwrap(), BranchRule::PlusOne);
        assert!("both".parse::<Sign>().is_err());
    }
}
