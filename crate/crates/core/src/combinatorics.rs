//! Momentum multisets and the bookkeeping needed to expand a product of
//! global creation operators into subsystem blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QentError, Result};

/// Excitation content `{k_1^{r_1}, ..., k_s^{r_s}}` of a state: momenta in
/// strictly increasing order, each with a positive multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MomentumMultiset {
    entries: Vec<(i64, u32)>,
}

impl MomentumMultiset {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a multiset from `(momentum, multiplicity)` pairs in any order;
    /// repeated momenta are merged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, u32)>) -> Result<Self> {
        let mut entries: Vec<(i64, u32)> = Vec::new();
        let mut pairs: Vec<(i64, u32)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        for (k, r) in pairs {
            if r == 0 {
                return Err(QentError::InvalidMultiset(format!(
                    "momentum {k} has multiplicity 0"
                )));
            }
            match entries.last_mut() {
                Some((last, mult)) if *last == k => *mult += r,
                _ => entries.push((k, r)),
            }
        }
        Ok(Self { entries })
    }

    pub fn from_momenta(momenta: &[i64]) -> Self {
        Self::from_pairs(momenta.iter().map(|&k| (k, 1))).expect("unit multiplicities")
    }

    pub fn entries(&self) -> &[(i64, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn particle_count(&self) -> u32 {
        self.entries.iter().map(|&(_, r)| r).sum()
    }

    pub fn multiplicity(&self, k: i64) -> u32 {
        self.entries
            .binary_search_by_key(&k, |&(m, _)| m)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Momenta repeated by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<i64> {
        self.entries
            .iter()
            .flat_map(|&(k, r)| std::iter::repeat_n(k, r as usize))
            .collect()
    }

    pub fn check_fermionic(&self) -> Result<()> {
        match self.entries.iter().find(|&&(_, r)| r > 1) {
            Some(&(momentum, multiplicity)) => Err(QentError::PauliExclusion {
                momentum,
                multiplicity,
            }),
            None => Ok(()),
        }
    }

    /// All sub-multisets, ordered lexicographically by the multiplicity
    /// vector (first momentum most significant). There are `Π (r_i + 1)`.
    pub fn sub_multisets(&self) -> Vec<MomentumMultiset> {
        let mut out = vec![Vec::new()];
        for &(k, r) in &self.entries {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<(i64, u32)>| {
                    (0..=r).map(move |m| {
                        let mut next = prefix.clone();
                        if m > 0 {
                            next.push((k, m));
                        }
                        next
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|entries| MomentumMultiset { entries })
            .collect()
    }

    /// `self - other` when `other ⊆ self`.
    pub fn subtract(&self, other: &MomentumMultiset) -> Option<MomentumMultiset> {
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut rest = other.entries.iter().peekable();
        for &(k, r) in &self.entries {
            let mut r = r;
            if let Some(&&(ok, or)) = rest.peek() {
                if ok < k {
                    return None;
                }
                if ok == k {
                    if or > r {
                        return None;
                    }
                    r -= or;
                    rest.next();
                }
            }
            if r > 0 {
                entries.push((k, r));
            }
        }
        if rest.next().is_some() {
            return None;
        }
        Some(MomentumMultiset { entries })
    }

    /// Multiset sum.
    pub fn union(&self, other: &MomentumMultiset) -> MomentumMultiset {
        Self::from_pairs(self.entries.iter().chain(other.entries.iter()).copied())
            .expect("positive multiplicities")
    }

    pub fn is_disjoint(&self, other: &MomentumMultiset) -> bool {
        self.entries
            .iter()
            .all(|&(k, _)| other.multiplicity(k) == 0)
    }
}

impl fmt::Display for MomentumMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("{}");
        }
        for (n, &(k, r)) in self.entries.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            if r == 1 {
                write!(f, "{k}")?;
            } else {
                write!(f, "{k}^{r}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for MomentumMultiset {
    type Err = QentError;

    /// Parses the compact form `"1^2,3"`; `"{}"` or an empty string is ∅.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "{}" {
            return Ok(Self::empty());
        }
        let mut pairs = Vec::new();
        for term in s.split(',') {
            let term = term.trim();
            let (k, r) = match term.split_once('^') {
                Some((k, r)) => (k.trim(), r.trim()),
                None => (term, "1"),
            };
            let k: i64 = k
                .parse()
                .map_err(|_| QentError::Parse(format!("invalid momentum {k:?} in {s:?}")))?;
            let r: u32 = r
                .parse()
                .map_err(|_| QentError::Parse(format!("invalid multiplicity {r:?} in {s:?}")))?;
            pairs.push((k, r));
        }
        Self::from_pairs(pairs)
    }
}

impl TryFrom<String> for MomentumMultiset {
    type Error = QentError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MomentumMultiset> for String {
    fn from(m: MomentumMultiset) -> String {
        m.to_string()
    }
}

/// Assignment of the particles of a state to the blocks A, B and C.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splitting {
    pub a: MomentumMultiset,
    pub b: MomentumMultiset,
    pub c: MomentumMultiset,
}

impl Splitting {
    pub fn new(a: MomentumMultiset, b: MomentumMultiset, c: MomentumMultiset) -> Self {
        Self { a, b, c }
    }

    /// Completes `(a, b)` with `c = parent - a - b`, if that is a multiset.
    pub fn complete(
        parent: &MomentumMultiset,
        a: &MomentumMultiset,
        b: &MomentumMultiset,
    ) -> Option<Self> {
        let c = parent.subtract(a)?.subtract(b)?;
        Some(Self::new(a.clone(), b.clone(), c))
    }

    fn check_partitions(&self, parent: &MomentumMultiset) -> Result<()> {
        if self.a.union(&self.b).union(&self.c) != *parent {
            return Err(QentError::InvalidSplitting(parent.to_string()));
        }
        Ok(())
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Coefficient of `b†_{A,K_A} b†_{B,K_B} b†_{C,K_C}` in the multinomial
/// expansion of `Π_k (b†_{A,k} + b†_{B,k} + b†_{C,k})^{r_k} / √(r_k!)`.
pub fn bosonic_coefficient(parent: &MomentumMultiset, split: &Splitting) -> Result<f64> {
    split.check_partitions(parent)?;
    Ok(parent
        .entries()
        .iter()
        .map(|&(k, r)| {
            let denom = factorial(split.a.multiplicity(k))
                * factorial(split.b.multiplicity(k))
                * factorial(split.c.multiplicity(k));
            factorial(r).sqrt() / denom
        })
        .product())
}

/// Sign of reordering `Π_{k ascending} b†_{X_k, k}` into block order: all A
/// operators first, then B, then C, each ascending in momentum.
pub fn fermionic_sign(parent: &MomentumMultiset, split: &Splitting) -> Result<i8> {
    parent.check_fermionic()?;
    split.check_partitions(parent)?;
    let blocks: Vec<u8> = parent
        .entries()
        .iter()
        .map(|&(k, _)| {
            if split.a.multiplicity(k) > 0 {
                0
            } else if split.b.multiplicity(k) > 0 {
                1
            } else {
                2
            }
        })
        .collect();
    let mut inversions = 0usize;
    for (i, &x) in blocks.iter().enumerate() {
        inversions += blocks[i + 1..].iter().filter(|&&y| y < x).count();
    }
    Ok(if inversions.is_multiple_of(2) { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(s: &str) -> MomentumMultiset {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        let k = ms("3, 1^2");
        assert_eq!(k.entries(), &[(1, 2), (3, 1)]);
        assert_eq!(k.to_string(), "1^2,3");
        assert_eq!(k.particle_count(), 3);
        assert_eq!(ms("{}"), MomentumMultiset::empty());
        assert_eq!(ms("2,2"), ms("2^2"));
        assert!("1^0".parse::<MomentumMultiset>().is_err());
        assert!("a".parse::<MomentumMultiset>().is_err());
    }

    #[test]
    fn sub_multiset_enumeration() {
        assert_eq!(ms("5").sub_multisets(), vec![ms("{}"), ms("5")]);
        assert_eq!(
            ms("5^2").sub_multisets(),
            vec![ms("{}"), ms("5"), ms("5^2")]
        );
        assert_eq!(ms("1,2").sub_multisets().len(), 4);
        assert_eq!(ms("1^2,2,7^3").sub_multisets().len(), 3 * 2 * 4);
    }

    #[test]
    fn subtraction() {
        assert_eq!(ms("1,2").subtract(&ms("1")), Some(ms("2")));
        assert_eq!(ms("4^2").subtract(&ms("4^2")), Some(ms("{}")));
        assert_eq!(ms("1").subtract(&ms("2")), None);
        assert_eq!(ms("1^2").subtract(&ms("1^3")), None);
        assert_eq!(ms("3").subtract(&ms("1")), None);
    }

    #[test]
    fn bosonic_coefficients() {
        let k = ms("4");
        let split = Splitting::new(ms("4"), ms("{}"), ms("{}"));
        assert_eq!(bosonic_coefficient(&k, &split).unwrap(), 1.0);

        let k2 = ms("4^2");
        let cross = Splitting::new(ms("4"), ms("4"), ms("{}"));
        assert!((bosonic_coefficient(&k2, &cross).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let square = Splitting::new(ms("4^2"), ms("{}"), ms("{}"));
        assert!((bosonic_coefficient(&k2, &square).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-15);

        let bad = Splitting::new(ms("4"), ms("{}"), ms("{}"));
        assert!(matches!(
            bosonic_coefficient(&k2, &bad),
            Err(QentError::InvalidSplitting(_))
        ));
    }

    #[test]
    fn fermionic_signs() {
        let one = ms("3");
        for split in [
            Splitting::new(ms("3"), ms("{}"), ms("{}")),
            Splitting::new(ms("{}"), ms("3"), ms("{}")),
            Splitting::new(ms("{}"), ms("{}"), ms("3")),
        ] {
            assert_eq!(fermionic_sign(&one, &split).unwrap(), 1);
        }
        let two = ms("1,2");
        assert_eq!(
            fermionic_sign(&two, &Splitting::new(ms("2"), ms("1"), ms("{}"))).unwrap(),
            -1
        );
        let three = ms("1,2,3");
        assert_eq!(
            fermionic_sign(&three, &Splitting::new(ms("3"), ms("2"), ms("1"))).unwrap(),
            -1
        );
        assert_eq!(
            fermionic_sign(&three, &Splitting::new(ms("1,3"), ms("2"), ms("{}"))).unwrap(),
            -1
        );
        assert!(matches!(
            fermionic_sign(&ms("1^2"), &Splitting::new(ms("1^2"), ms("{}"), ms("{}"))),
            Err(QentError::PauliExclusion { .. })
        ));
    }
}
