//! Protocol representation and single-step firing semantics.
//!
//! A protocol is a tuple `(Q, T, I, L, O)`: states, k-way transitions,
//! initial states, a leader multiset and a boolean output per state. Agents
//! are anonymous, so a global state (configuration) is a non-empty multiset
//! over `Q`. Any pair of agents whose states have no explicit transition is
//! assumed to interact silently; silent transitions are therefore never
//! materialized.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde_json::{Map as JsonMap, Value};

use crate::multiset::Multiset;
use crate::CoreError;

/// Dense index of an interned state name within its protocol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateId(u32);

impl StateId {
    pub fn from_index(i: u32) -> Self {
        StateId(i)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A k-way transition `p_1, …, p_i ↦ q_1, …, q_i` with `i ≥ 2`.
///
/// The ordered lists are kept as authored (the pairing matters for the
/// lowering gadget's output map), but enabling, firing and equality all go
/// through the derived pre/post multisets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pre: Vec<StateId>,
    post: Vec<StateId>,
}

impl Transition {
    pub fn arity(&self) -> usize {
        self.pre.len()
    }

    pub fn pre(&self) -> &[StateId] {
        &self.pre
    }

    pub fn post(&self) -> &[StateId] {
        &self.post
    }

    pub fn prem(&self) -> Multiset {
        self.pre.iter().copied().collect()
    }

    pub fn postm(&self) -> Multiset {
        self.post.iter().copied().collect()
    }

    /// A transition is silent iff its pre- and post-multisets coincide.
    pub fn is_silent(&self) -> bool {
        self.prem() == self.postm()
    }
}

/// A population protocol `(Q, T, I, L, O)` with canonical internal order:
/// states are interned in lexicographic name order and transitions are
/// deduplicated by pre/post multiset and sorted by their ordered lists.
#[derive(Clone, PartialEq)]
pub struct Protocol {
    names: Vec<String>,
    index: HashMap<String, StateId>,
    transitions: Vec<Transition>,
    initial: Vec<StateId>,
    leaders: Multiset,
    output: Vec<bool>,
    meta: JsonMap<String, Value>,
}

/// Accumulates the pieces of a protocol by name and validates on `build`.
#[derive(Default)]
pub struct ProtocolBuilder {
    states: BTreeSet<String>,
    transitions: Vec<(Vec<String>, Vec<String>)>,
    initial: BTreeSet<String>,
    leaders: BTreeMap<String, u64>,
    output: BTreeMap<String, bool>,
    meta: JsonMap<String, Value>,
}

impl ProtocolBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: impl Into<String>) -> &mut Self {
        self.states.insert(name.into());
        self
    }

    pub fn transition<S: AsRef<str>>(&mut self, pre: &[S], post: &[S]) -> &mut Self {
        self.transitions.push((
            pre.iter().map(|s| s.as_ref().to_owned()).collect(),
            post.iter().map(|s| s.as_ref().to_owned()).collect(),
        ));
        self
    }

    pub fn initial(&mut self, name: impl Into<String>) -> &mut Self {
        self.initial.insert(name.into());
        self
    }

    pub fn leader(&mut self, name: impl Into<String>, count: u64) -> &mut Self {
        if count > 0 {
            *self.leaders.entry(name.into()).or_insert(0) += count;
        }
        self
    }

    pub fn output(&mut self, name: impl Into<String>, value: bool) -> &mut Self {
        self.output.insert(name.into(), value);
        self
    }

    pub fn meta(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.meta.insert(key.into(), value);
        self
    }

    pub fn build(self) -> Result<Protocol, CoreError> {
        if self.states.is_empty() {
            return Err(CoreError::NoStates);
        }
        for name in &self.states {
            if name.is_empty() {
                return Err(CoreError::EmptyStateName);
            }
        }
        let names: Vec<String> = self.states.into_iter().collect();
        let index: HashMap<String, StateId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), StateId(i as u32)))
            .collect();
        let resolve = |name: &str| -> Result<StateId, CoreError> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| CoreError::UnknownState(name.to_owned()))
        };

        let mut resolved = Vec::with_capacity(self.transitions.len());
        for (pre, post) in &self.transitions {
            if pre.len() != post.len() {
                return Err(CoreError::ArityMismatch {
                    pre: pre.len(),
                    post: post.len(),
                });
            }
            if pre.len() < 2 {
                return Err(CoreError::ArityTooSmall(pre.len()));
            }
            let pre = pre.iter().map(|s| resolve(s)).collect::<Result<Vec<_>, _>>()?;
            let post = post.iter().map(|s| resolve(s)).collect::<Result<Vec<_>, _>>()?;
            resolved.push(Transition { pre, post });
        }
        // Dedup by (prem, postm), keeping the least ordered representative.
        let mut canon: BTreeMap<(Vec<(StateId, u64)>, Vec<(StateId, u64)>), Transition> =
            BTreeMap::new();
        for t in resolved {
            let key = (
                t.prem().iter().collect::<Vec<_>>(),
                t.postm().iter().collect::<Vec<_>>(),
            );
            match canon.get_mut(&key) {
                Some(existing) => {
                    if (&t.pre, &t.post) < (&existing.pre, &existing.post) {
                        *existing = t;
                    }
                }
                None => {
                    canon.insert(key, t);
                }
            }
        }
        let mut transitions: Vec<Transition> = canon.into_values().collect();
        transitions.sort_by(|a, b| (&a.pre, &a.post).cmp(&(&b.pre, &b.post)));

        let initial = self
            .initial
            .iter()
            .map(|s| resolve(s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut leaders = Multiset::new();
        for (name, count) in &self.leaders {
            leaders.add(resolve(name)?, *count)?;
        }
        let mut output = vec![false; names.len()];
        for name in &names {
            let value = self
                .output
                .get(name)
                .ok_or_else(|| CoreError::MissingOutput(name.clone()))?;
            output[index[name].index()] = *value;
        }
        for name in self.output.keys() {
            if !index.contains_key(name) {
                return Err(CoreError::UnknownState(name.clone()));
            }
        }

        Ok(Protocol {
            names,
            index,
            transitions,
            initial,
            leaders,
            output,
            meta: self.meta,
        })
    }
}

impl Protocol {
    pub fn builder() -> ProtocolBuilder {
        ProtocolBuilder::new()
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    /// State names in canonical (lexicographic) order; index = `StateId`.
    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.index.get(name).copied()
    }

    pub fn require_state(&self, name: &str) -> Result<StateId, CoreError> {
        self.state_id(name)
            .ok_or_else(|| CoreError::UnknownState(name.to_owned()))
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.names[q.index()]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial_states(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, q: StateId) -> bool {
        self.initial.binary_search(&q).is_ok()
    }

    pub fn leaders(&self) -> &Multiset {
        &self.leaders
    }

    pub fn output(&self, q: StateId) -> bool {
        self.output[q.index()]
    }

    pub fn meta(&self) -> &JsonMap<String, Value> {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut JsonMap<String, Value> {
        &mut self.meta
    }

    pub fn max_arity(&self) -> usize {
        self.transitions.iter().map(|t| t.arity()).max().unwrap_or(2)
    }

    /// Number of transitions of each arity `≥ 3`, as `(arity, count)` pairs.
    pub fn arity_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for t in &self.transitions {
            *hist.entry(t.arity()).or_insert(0) += 1;
        }
        hist
    }

    /// Human-readable form of a transition, e.g. `1,1 -> 2,0`.
    pub fn display_transition(&self, t: &Transition) -> String {
        let side = |states: &[StateId]| {
            states
                .iter()
                .map(|&q| self.state_name(q))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{} -> {}", side(t.pre()), side(t.post()))
    }

    fn check_states_known(&self, t: &Transition) -> Result<(), CoreError> {
        for &q in t.pre().iter().chain(t.post()) {
            if q.index() >= self.names.len() {
                return Err(CoreError::MalformedTransition);
            }
        }
        Ok(())
    }

    /// `t` is enabled at `c` iff `prem(t) ≤ c`.
    pub fn enabled(&self, t: &Transition, c: &Multiset) -> Result<bool, CoreError> {
        self.check_states_known(t)?;
        Ok(t.prem().le(c))
    }

    /// Fires `t` at `c`, producing `(c ⊖ prem(t)) ⊕ postm(t)`.
    pub fn fire(&self, t: &Transition, c: &Multiset) -> Result<Multiset, CoreError> {
        if !self.enabled(t, c)? {
            return Err(CoreError::TransitionDisabled(self.display_transition(t)));
        }
        c.minus(&t.prem()).plus(&t.postm())
    }

    /// Builds the initial configuration `D ⊕ L` for an input `D` given by
    /// per-initial-state counts.
    pub fn initial_configuration(
        &self,
        input: &BTreeMap<String, u64>,
    ) -> Result<Multiset, CoreError> {
        let mut c = self.leaders.clone();
        for (name, &count) in input {
            let q = self.require_state(name)?;
            if !self.is_initial(q) {
                return Err(CoreError::InputNotInitial(name.clone()));
            }
            c.add(q, count)?;
        }
        if c.is_empty() {
            return Err(CoreError::EmptyPopulation);
        }
        Ok(c)
    }

    /// Initial configuration from counts aligned with an explicit state order.
    pub fn initial_configuration_for(
        &self,
        input_states: &[StateId],
        counts: &[u64],
    ) -> Result<Multiset, CoreError> {
        debug_assert_eq!(input_states.len(), counts.len());
        let mut c = self.leaders.clone();
        for (&q, &n) in input_states.iter().zip(counts) {
            if !self.is_initial(q) {
                return Err(CoreError::InputNotInitial(self.state_name(q).to_owned()));
            }
            c.add(q, n)?;
        }
        if c.is_empty() {
            return Err(CoreError::EmptyPopulation);
        }
        Ok(c)
    }

    /// Consensus output of a configuration: `Some(b)` if every supported
    /// state outputs `b`, `None` (⊥) otherwise.
    pub fn consensus_output(&self, c: &Multiset) -> Option<bool> {
        let mut out = None;
        for q in c.support() {
            let b = self.output(q);
            match out {
                None => out = Some(b),
                Some(prev) if prev != b => return None,
                Some(_) => {}
            }
        }
        out
    }

    /// The input states this protocol's builder intended as its variable
    /// order (from `meta.input_states`), falling back to the sorted initial
    /// states.
    pub fn input_order(&self) -> Vec<StateId> {
        if let Some(Value::Array(names)) = self.meta.get("input_states") {
            let ids: Option<Vec<StateId>> = names
                .iter()
                .map(|v| v.as_str().and_then(|s| self.state_id(s)))
                .collect();
            if let Some(ids) = ids {
                if ids.iter().all(|&q| self.is_initial(q)) {
                    return ids;
                }
            }
        }
        self.initial.clone()
    }
}

impl fmt::Debug for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Protocol")
            .field("states", &self.names.len())
            .field("transitions", &self.transitions.len())
            .field("leaders", &self.leaders.size())
            .finish()
    }
}
