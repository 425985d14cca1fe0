//! Multisets over interned states: the common currency for configurations,
//! transition pre/post sets and leader populations.

use std::collections::BTreeMap;
use std::fmt;

use crate::protocol::StateId;
use crate::CoreError;

/// A finite multiset of states with 64-bit counts.
///
/// Zero counts are never stored, so two multisets are equal iff their stored
/// entries are identical, and the stored key set is exactly the support.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Multiset {
    counts: BTreeMap<StateId, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a multiset from `(state, count)` pairs, summing duplicates.
    pub fn from_counts<I: IntoIterator<Item = (StateId, u64)>>(iter: I) -> Result<Self, CoreError> {
        let mut m = Multiset::new();
        for (q, n) in iter {
            m.add(q, n)?;
        }
        Ok(m)
    }

    pub fn count(&self, q: StateId) -> u64 {
        self.counts.get(&q).copied().unwrap_or(0)
    }

    /// Adds `n` occurrences of `q`, failing on 64-bit overflow.
    pub fn add(&mut self, q: StateId, n: u64) -> Result<(), CoreError> {
        if n == 0 {
            return Ok(());
        }
        let slot = self.counts.entry(q).or_insert(0);
        *slot = slot.checked_add(n).ok_or(CoreError::CountOverflow)?;
        Ok(())
    }

    /// Removes up to `n` occurrences of `q` (saturating at zero).
    pub fn remove(&mut self, q: StateId, n: u64) {
        if let Some(slot) = self.counts.get_mut(&q) {
            *slot = slot.saturating_sub(n);
            if *slot == 0 {
                self.counts.remove(&q);
            }
        }
    }

    /// Total number of elements, `Σ_q M(q)`.
    pub fn size(&self) -> u64 {
        self.counts
            .values()
            .try_fold(0u64, |acc, &n| acc.checked_add(n))
            .expect("population size overflows u64")
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// States with a positive count, in id order.
    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.counts.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, u64)> + '_ {
        self.counts.iter().map(|(&q, &n)| (q, n))
    }

    /// Componentwise sum `M ⊕ M'`.
    pub fn plus(&self, other: &Multiset) -> Result<Multiset, CoreError> {
        let mut out = self.clone();
        for (q, n) in other.iter() {
            out.add(q, n)?;
        }
        Ok(out)
    }

    /// Saturating componentwise difference `M ⊖ M'`: `max(M(q) - M'(q), 0)`.
    pub fn minus(&self, other: &Multiset) -> Multiset {
        let mut out = self.clone();
        for (q, n) in other.iter() {
            out.remove(q, n);
        }
        out
    }

    /// Componentwise comparison `M ≤ M'`.
    pub fn le(&self, other: &Multiset) -> bool {
        self.iter().all(|(q, n)| n <= other.count(q))
    }
}

impl FromIterator<StateId> for Multiset {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for q in iter {
            m.add(q, 1).expect("multiset literal overflows u64");
        }
        m
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.counts.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sid(i: u32) -> StateId {
        StateId::from_index(i)
    }

    #[test]
    fn zero_counts_are_never_stored() {
        let mut m = Multiset::new();
        m.add(sid(0), 2).unwrap();
        m.remove(sid(0), 2);
        assert!(m.is_empty());
        assert_eq!(m, Multiset::new());
        m.add(sid(1), 0).unwrap();
        assert_eq!(m.support().count(), 0);
    }

    #[test]
    fn add_overflow_is_an_error() {
        let mut m = Multiset::new();
        m.add(sid(0), u64::MAX).unwrap();
        assert!(matches!(m.add(sid(0), 1), Err(CoreError::CountOverflow)));
    }

    #[test]
    fn minus_saturates() {
        let a = Multiset::from_counts([(sid(0), 1)]).unwrap();
        let b = Multiset::from_counts([(sid(0), 5), (sid(1), 2)]).unwrap();
        let d = a.minus(&b);
        assert!(d.is_empty());
    }

    fn arb_multiset() -> impl Strategy<Value = Multiset> {
        proptest::collection::btree_map(0u32..6, 0u64..50, 0..6).prop_map(|m| {
            Multiset::from_counts(m.into_iter().map(|(q, n)| (sid(q), n))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn plus_then_minus_restores(a in arb_multiset(), b in arb_multiset()) {
            let sum = a.plus(&b).unwrap();
            let back = sum.minus(&b);
            prop_assert!(a.le(&back));
            prop_assert_eq!(back, a.clone());
            prop_assert!(a.le(&sum));
            prop_assert!(b.le(&sum));
        }

        #[test]
        fn size_is_additive(a in arb_multiset(), b in arb_multiset()) {
            let sum = a.plus(&b).unwrap();
            prop_assert_eq!(sum.size(), a.size() + b.size());
        }

        #[test]
        fn le_is_componentwise(a in arb_multiset(), b in arb_multiset()) {
            let le = a.le(&b);
            let pointwise = (0u32..6).all(|q| a.count(sid(q)) <= b.count(sid(q)));
            prop_assert_eq!(le, pointwise);
        }
    }
}
