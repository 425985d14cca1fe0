//! Dense fast path shared by exploration and simulation.
//!
//! Configurations over a fixed protocol are flattened to count vectors
//! indexed by `StateId`, and transitions are compiled to sorted pre-counts
//! plus a net delta. This keeps the hot loops allocation-light while the
//! public API stays on canonical `Multiset` values.

use crate::multiset::Multiset;
use crate::protocol::{Protocol, StateId};
use crate::CoreError;

pub(crate) type DenseConfig = Box<[u32]>;

pub(crate) struct CompiledTransition {
    /// Index into `Protocol::transitions`.
    pub index: usize,
    /// `(state, count)` pairs of the pre-multiset, sorted by state.
    pub pre: Vec<(u32, u32)>,
    /// Net count change per state, zero entries omitted.
    pub delta: Vec<(u32, i64)>,
    /// Every post state outputs 0 / outputs 1 (for the escape check).
    pub post_all: [bool; 2],
}

pub(crate) struct Compiled {
    pub n_states: usize,
    pub output: Vec<bool>,
    /// Non-silent transitions only; silent ones cannot change a configuration.
    pub transitions: Vec<CompiledTransition>,
}

impl Compiled {
    pub fn new(protocol: &Protocol) -> Self {
        let n_states = protocol.num_states();
        let output: Vec<bool> = (0..n_states)
            .map(|i| protocol.output(StateId::from_index(i as u32)))
            .collect();
        let mut transitions = Vec::new();
        for (index, t) in protocol.transitions().iter().enumerate() {
            if t.is_silent() {
                continue;
            }
            let pre: Vec<(u32, u32)> = t
                .prem()
                .iter()
                .map(|(q, n)| (q.index() as u32, n as u32))
                .collect();
            let mut delta = vec![0i64; n_states];
            for &q in t.pre() {
                delta[q.index()] -= 1;
            }
            for &q in t.post() {
                delta[q.index()] += 1;
            }
            let delta: Vec<(u32, i64)> = delta
                .into_iter()
                .enumerate()
                .filter(|&(_, d)| d != 0)
                .map(|(q, d)| (q as u32, d))
                .collect();
            let post_all = [
                t.post().iter().all(|&q| !output[q.index()]),
                t.post().iter().all(|&q| output[q.index()]),
            ];
            transitions.push(CompiledTransition {
                index,
                pre,
                delta,
                post_all,
            });
        }
        Compiled {
            n_states,
            output,
            transitions,
        }
    }

    pub fn to_dense(&self, m: &Multiset) -> Result<DenseConfig, CoreError> {
        let mut counts = vec![0u32; self.n_states];
        for (q, n) in m.iter() {
            if q.index() >= self.n_states {
                return Err(CoreError::MalformedTransition);
            }
            counts[q.index()] = u32::try_from(n).map_err(|_| CoreError::CountOverflow)?;
        }
        Ok(counts.into_boxed_slice())
    }

    pub fn to_multiset(&self, c: &[u32]) -> Multiset {
        Multiset::from_counts(
            c.iter()
                .enumerate()
                .filter(|&(_, &n)| n > 0)
                .map(|(q, &n)| (StateId::from_index(q as u32), n as u64)),
        )
        .expect("dense counts fit in u64")
    }

    pub fn enabled(&self, t: &CompiledTransition, c: &[u32]) -> bool {
        t.pre.iter().all(|&(q, n)| c[q as usize] >= n)
    }

    pub fn fire(&self, t: &CompiledTransition, c: &[u32]) -> DenseConfig {
        let mut next: Vec<u32> = c.to_vec();
        for &(q, d) in &t.delta {
            next[q as usize] = (next[q as usize] as i64 + d) as u32;
        }
        next.into_boxed_slice()
    }

    /// Number of ordered agent tuples matching the transition's pre-list:
    /// the product of falling factorials per required state.
    pub fn instances(&self, t: &CompiledTransition, c: &[u32]) -> u128 {
        let mut w: u128 = 1;
        for &(q, n) in &t.pre {
            let have = c[q as usize] as u128;
            for k in 0..n as u128 {
                if have <= k {
                    return 0;
                }
                w *= have - k;
            }
        }
        w
    }

    pub fn consensus(&self, c: &[u32]) -> Option<bool> {
        let mut out = None;
        for (q, &n) in c.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let b = self.output[q];
            match out {
                None => out = Some(b),
                Some(prev) if prev != b => return None,
                Some(_) => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::flock_standard;

    #[test]
    fn dense_fire_agrees_with_multiset_fire() {
        let p = flock_standard(3).unwrap();
        let compiled = Compiled::new(&p);
        let c = p
            .initial_configuration(&std::collections::BTreeMap::from([("1".to_owned(), 4)]))
            .unwrap();
        let dense = compiled.to_dense(&c).unwrap();
        for t in &compiled.transitions {
            let full = &p.transitions()[t.index];
            assert_eq!(compiled.enabled(t, &dense), p.enabled(full, &c).unwrap());
            if compiled.enabled(t, &dense) {
                let fired = compiled.fire(t, &dense);
                assert_eq!(compiled.to_multiset(&fired), p.fire(full, &c).unwrap());
            }
        }
    }

    #[test]
    fn instance_counts_are_falling_factorials() {
        let p = flock_standard(2).unwrap();
        let compiled = Compiled::new(&p);
        let c = p
            .initial_configuration(&std::collections::BTreeMap::from([("1".to_owned(), 4)]))
            .unwrap();
        let dense = compiled.to_dense(&c).unwrap();
        // s_{1,1} needs two agents in state 1: 4·3 ordered pairs
        let s11 = compiled
            .transitions
            .iter()
            .find(|t| t.pre == vec![(p.state_id("1").unwrap().index() as u32, 2)])
            .unwrap();
        assert_eq!(compiled.instances(s11, &dense), 12);
    }
}
