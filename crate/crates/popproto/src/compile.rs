//! Protocol compilers.
//!
//! `to_2way` replaces every transition of arity `i > 2` by a chain gadget:
//! forth-transitions collect the participants one by one, parking them in
//! disabled states while a single active token tracks progress; the final
//! success step flips the token into a backward token that releases the
//! parked agents into their destination states. Every forth step has an
//! explicit inverse, so a stalled collection attempt can always be undone.
//! The lowered protocol computes the same predicate with at most
//! `|Q| + Σ_{i≥3} 3i·n_i` states.
//!
//! `from_semigroup` turns a reversible commutative semigroup presentation
//! into a protocol whose agents rewrite a word held as a multiset of
//! letters, padding productions with a neutral state so both sides of each
//! rewrite consume equally many agents.

use std::collections::BTreeMap;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::analysis::{self, AnalysisError, Decision};
use crate::multiset::Multiset;
use crate::protocol::{Protocol, ProtocolBuilder, StateId};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("protocol has a transition of arity {0}; arities must be at least 2")]
    MalformedProtocol(usize),

    #[error("gadget state `{0}` collides with an existing state name")]
    NameCollision(String),

    #[error("presentation is not reversible: missing inverse of `{l} -> {r}`")]
    NotReversible { l: String, r: String },

    #[error("production has two empty sides")]
    EmptyProduction,

    #[error("designated letter `{0}` is not in the alphabet")]
    UnknownLetter(char),

    #[error(transparent)]
    Core(#[from] crate::CoreError),
}

/// Counts recorded by a lowering.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LoweringInfo {
    pub states_before: usize,
    pub states_after: usize,
    pub gadget_states: usize,
    pub lowered_transitions: usize,
    /// `|Q| + Σ_{i≥3} 3i·n_i`, the guaranteed ceiling on `states_after`.
    pub state_bound: usize,
}

/// The `|Q| + Σ_{i≥3} 3i·n_i` ceiling for lowering a protocol with the
/// given state count and transition arities.
pub fn lowered_state_bound(states: usize, arities: impl IntoIterator<Item = usize>) -> usize {
    states
        + arities
            .into_iter()
            .filter(|&a| a >= 3)
            .map(|a| 3 * a)
            .sum::<usize>()
}

/// Post-lowering state count certificate for a padded-presentation protocol
/// with `letters` letters and `productions` productions of maximal arity
/// `max_arity` (the letters plus one neutral state, plus gadget states).
pub fn semigroup_family_state_bound(letters: u64, productions: u64, max_arity: u64) -> u64 {
    letters + 1 + 3 * max_arity * productions
}

/// Lowers every k-way transition (k > 2) to the 2-way chain gadget.
/// Already-2-way protocols are returned unchanged. Initial states and
/// leaders are untouched; gadget states inherit the outputs of the agents
/// they stand in for.
pub fn to_2way(p: &Protocol) -> Result<(Protocol, LoweringInfo), CompileError> {
    let state_bound = lowered_state_bound(
        p.num_states(),
        p.transitions().iter().map(|t| t.arity()),
    );
    if let Some(t) = p.transitions().iter().find(|t| t.arity() < 2) {
        return Err(CompileError::MalformedProtocol(t.arity()));
    }
    let wide: Vec<usize> = p
        .transitions()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.arity() > 2)
        .map(|(i, _)| i)
        .collect();
    if wide.is_empty() {
        let mut lowered = p.clone();
        let info = LoweringInfo {
            states_before: p.num_states(),
            states_after: p.num_states(),
            gadget_states: 0,
            lowered_transitions: 0,
            state_bound,
        };
        lowered
            .meta_mut()
            .insert("lowering".to_owned(), serde_json::to_value(&info).unwrap());
        return Ok((lowered, info));
    }

    let mut b = ProtocolBuilder::new();
    for name in p.state_names() {
        b.state(name.clone());
        b.output(name.clone(), p.output(p.state_id(name).unwrap()));
    }
    for &q in p.initial_states() {
        b.initial(p.state_name(q));
    }
    for (q, n) in p.leaders().iter() {
        b.leader(p.state_name(q), n);
    }
    for (k, v) in p.meta() {
        b.meta(k.clone(), v.clone());
    }

    let mut gadget_states = 0usize;
    for (index, t) in p.transitions().iter().enumerate() {
        let arity = t.arity();
        if arity == 2 {
            let pre: Vec<&str> = t.pre().iter().map(|&q| p.state_name(q)).collect();
            let post: Vec<&str> = t.post().iter().map(|&q| p.state_name(q)).collect();
            b.transition(&pre, &post);
            continue;
        }
        let q = |j: usize| p.state_name(t.pre()[j - 1]).to_owned();
        let r = |j: usize| p.state_name(t.post()[j - 1]).to_owned();
        let disabled = |j: usize| format!("{index}.d{j}");
        let active = |j: usize| format!("{index}.a{j}");
        let backward = |j: usize| format!("{index}.b{j}");
        for j in 1..=arity - 2 {
            let name = disabled(j);
            if p.state_id(&name).is_some() {
                return Err(CompileError::NameCollision(name));
            }
            b.state(name.clone());
            b.output(name, p.output(t.pre()[j - 1]));
            gadget_states += 1;
        }
        for j in 2..=arity - 1 {
            for name in [active(j), backward(j)] {
                if p.state_id(&name).is_some() {
                    return Err(CompileError::NameCollision(name));
                }
            }
            b.state(active(j));
            b.output(active(j), p.output(t.pre()[j - 1]));
            b.state(backward(j));
            b.output(backward(j), p.output(t.post()[j - 1]));
            gadget_states += 2;
        }

        // collection chain with explicit inverses
        b.transition(&[q(1), q(2)], &[disabled(1), active(2)]);
        b.transition(&[disabled(1), active(2)], &[q(1), q(2)]);
        for l in 2..=arity - 2 {
            b.transition(&[active(l), q(l + 1)], &[disabled(l), active(l + 1)]);
            b.transition(&[disabled(l), active(l + 1)], &[active(l), q(l + 1)]);
        }
        // commit, then release the parked agents backwards
        b.transition(&[active(arity - 1), q(arity)], &[backward(arity - 1), r(arity)]);
        for l in (2..=arity - 2).rev() {
            b.transition(&[disabled(l), backward(l + 1)], &[backward(l), r(l + 1)]);
        }
        b.transition(&[disabled(1), backward(2)], &[r(1), r(2)]);
    }

    let mut lowered = b.build()?;
    let info = LoweringInfo {
        states_before: p.num_states(),
        states_after: lowered.num_states(),
        gadget_states,
        lowered_transitions: wide.len(),
        state_bound,
    };
    lowered
        .meta_mut()
        .insert("lowering".to_owned(), serde_json::to_value(&info).unwrap());
    Ok((lowered, info))
}

/// Outcome of checking that a lowering faithfully simulates its source on a
/// finite input domain.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationCheck {
    pub ok: bool,
    pub inputs_checked: usize,
    /// First violation: which input, which property, and a configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SimulationWitness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationWitness {
    pub input: Vec<u64>,
    pub property: String,
    pub configuration: BTreeMap<String, u64>,
}

/// Verifies, input by input, that `lowered = to_2way(p)` simulates `p`:
/// the original-state configurations reachable in both protocols coincide
/// (restriction), and every lowered configuration can reach one free of
/// gadget states (extension). Both checks are exhaustive over the explored
/// graphs.
pub fn check_simulation(
    p: &Protocol,
    lowered: &Protocol,
    input_states: &[StateId],
    domain: &[Vec<u64>],
    node_limit: usize,
) -> Result<SimulationCheck, AnalysisError> {
    // lowered ids of the original states; gadget states have no preimage
    let original_of: Vec<Option<StateId>> = lowered
        .state_names()
        .iter()
        .map(|name| p.state_id(name))
        .collect();
    let lowered_inputs: Vec<StateId> = input_states
        .iter()
        .map(|&q| lowered.require_state(p.state_name(q)))
        .collect::<Result<_, _>>()?;

    for (idx, counts) in domain.iter().enumerate() {
        let root1 = p.initial_configuration_for(input_states, counts)?;
        let g1 = analysis::explore(p, &root1, node_limit)?;
        let reach1: HashSet<Vec<(StateId, u64)>> = (0..g1.node_count() as u32)
            .map(|i| {
                g1.counts(i)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &n)| n > 0)
                    .map(|(q, &n)| (StateId::from_index(q as u32), n as u64))
                    .collect()
            })
            .collect();

        let root2 = lowered.initial_configuration_for(&lowered_inputs, counts)?;
        let g2 = analysis::explore(lowered, &root2, node_limit)?;

        let mut plain_nodes: Vec<bool> = Vec::with_capacity(g2.node_count());
        let mut reach2: HashSet<Vec<(StateId, u64)>> = HashSet::new();
        for i in 0..g2.node_count() as u32 {
            let mut mapped: Vec<(StateId, u64)> = Vec::new();
            let mut plain = true;
            for (q, &n) in g2.counts(i).iter().enumerate() {
                if n == 0 {
                    continue;
                }
                match original_of[q] {
                    Some(orig) => mapped.push((orig, n as u64)),
                    None => {
                        plain = false;
                        break;
                    }
                }
            }
            plain_nodes.push(plain);
            if plain {
                mapped.sort_unstable_by_key(|&(q, _)| q);
                reach2.insert(mapped);
            }
        }

        // restriction: identical reachability over original-state configurations
        if reach1 != reach2 {
            let missing = reach1
                .symmetric_difference(&reach2)
                .next()
                .expect("sets differ");
            return Ok(SimulationCheck {
                ok: false,
                inputs_checked: idx,
                witness: Some(SimulationWitness {
                    input: counts.clone(),
                    property: "restricted reachability differs".to_owned(),
                    configuration: missing
                        .iter()
                        .map(|&(q, n)| (p.state_name(q).to_owned(), n))
                        .collect(),
                }),
            });
        }

        // extension: every lowered configuration can reach a gadget-free one
        let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); g2.node_count()];
        for u in 0..g2.node_count() as u32 {
            for &v in g2.successors(u) {
                reverse[v as usize].push(u);
            }
        }
        let mut can_clear = plain_nodes.clone();
        let mut stack: Vec<u32> = (0..g2.node_count() as u32)
            .filter(|&i| can_clear[i as usize])
            .collect();
        while let Some(v) = stack.pop() {
            for &u in &reverse[v as usize] {
                if !can_clear[u as usize] {
                    can_clear[u as usize] = true;
                    stack.push(u);
                }
            }
        }
        if let Some(stuck) = can_clear.iter().position(|&ok| !ok) {
            return Ok(SimulationCheck {
                ok: false,
                inputs_checked: idx,
                witness: Some(SimulationWitness {
                    input: counts.clone(),
                    property: "configuration cannot shed gadget states".to_owned(),
                    configuration: g2
                        .configuration(lowered, stuck as u32)
                        .iter()
                        .map(|(q, n)| (lowered.state_name(q).to_owned(), n))
                        .collect(),
                }),
            });
        }
    }
    Ok(SimulationCheck {
        ok: true,
        inputs_checked: domain.len(),
        witness: None,
    })
}

/// A finite presentation of a commutative semigroup: productions over an
/// alphabet of single-character letters, closed under reversal, with
/// designated start, final and catalyst letters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemigroupPresentation {
    pub alphabet: Vec<char>,
    pub productions: Vec<Production>,
    pub s: char,
    pub f: char,
    pub c: char,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<char>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Production {
    pub l: String,
    pub r: String,
}

fn letter_counts(word: &str) -> BTreeMap<char, u64> {
    let mut counts = BTreeMap::new();
    for ch in word.chars() {
        *counts.entry(ch).or_insert(0) += 1;
    }
    counts
}

impl SemigroupPresentation {
    pub fn validate(&self) -> Result<(), CompileError> {
        let alphabet: HashSet<char> = self.alphabet.iter().copied().collect();
        for letter in [self.s, self.f, self.c].into_iter().chain(self.b) {
            if !alphabet.contains(&letter) {
                return Err(CompileError::UnknownLetter(letter));
            }
        }
        let pairs: HashSet<(BTreeMap<char, u64>, BTreeMap<char, u64>)> = self
            .productions
            .iter()
            .map(|p| (letter_counts(&p.l), letter_counts(&p.r)))
            .collect();
        for p in &self.productions {
            if p.l.is_empty() && p.r.is_empty() {
                return Err(CompileError::EmptyProduction);
            }
            for ch in p.l.chars().chain(p.r.chars()) {
                if !alphabet.contains(&ch) {
                    return Err(CompileError::UnknownLetter(ch));
                }
            }
            if !pairs.contains(&(letter_counts(&p.r), letter_counts(&p.l))) {
                return Err(CompileError::NotReversible {
                    l: p.l.clone(),
                    r: p.r.clone(),
                });
            }
        }
        Ok(())
    }

    /// Longest production side; the padded transition arity is at least 2.
    pub fn max_side(&self) -> usize {
        self.productions
            .iter()
            .map(|p| p.l.chars().count().max(p.r.chars().count()))
            .max()
            .unwrap_or(0)
    }

    /// Agents in the neutral state a single padded production can consume.
    pub fn padding_margin(&self) -> u64 {
        (self.max_side().max(2) - 1) as u64
    }
}

/// Pads a production so both sides consume the same number of agents,
/// appending the neutral state to the shorter side (both sides when the
/// production is unary).
pub fn pad(l: &str, r: &str, neutral: &str) -> (Vec<String>, Vec<String>) {
    let ls: Vec<String> = l.chars().map(String::from).collect();
    let rs: Vec<String> = r.chars().map(String::from).collect();
    let arity = ls.len().max(rs.len()).max(2);
    let mut pre = ls;
    pre.extend(std::iter::repeat(neutral.to_owned()).take(arity - pre.len()));
    let mut post = rs;
    post.extend(std::iter::repeat(neutral.to_owned()).take(arity - post.len()));
    (pre, post)
}

/// Compiles a presentation into a protocol: one padded transition per
/// non-silent production, plus attraction to the final letter. Input agents
/// start in the neutral padding state; the two leaders hold the catalyst
/// and start letters. Output 1 exactly on the final letter.
pub fn from_semigroup(sp: &SemigroupPresentation) -> Result<Protocol, CompileError> {
    sp.validate()?;
    let mut neutral = "x".to_owned();
    while sp.alphabet.iter().any(|&ch| String::from(ch) == neutral) {
        neutral.push('_');
    }

    let mut b = ProtocolBuilder::new();
    for &ch in &sp.alphabet {
        b.state(String::from(ch));
        b.output(String::from(ch), ch == sp.f);
    }
    b.state(neutral.clone());
    b.output(neutral.clone(), false);
    b.initial(neutral.clone());
    b.leader(String::from(sp.c), 1);
    b.leader(String::from(sp.s), 1);

    let mut rewrite_count = 0usize;
    for p in &sp.productions {
        if letter_counts(&p.l) == letter_counts(&p.r) {
            continue; // pads to a silent transition (e.g. commutativity)
        }
        let (pre, post) = pad(&p.l, &p.r, &neutral);
        b.transition(&pre, &post);
        rewrite_count += 1;
    }
    let final_letter = String::from(sp.f);
    for &ch in &sp.alphabet {
        if ch != sp.f {
            b.transition(
                &[final_letter.clone(), String::from(ch)],
                &[final_letter.clone(), final_letter.clone()],
            );
        }
    }
    b.transition(
        &[final_letter.clone(), neutral.clone()],
        &[final_letter.clone(), final_letter.clone()],
    );

    b.meta("construction", json!("semigroup"));
    b.meta(
        "params",
        json!({
            "alphabet": sp.alphabet.iter().collect::<String>(),
            "productions": sp.productions.len(),
            "max_side": sp.max_side(),
        }),
    );
    b.meta("designated", json!({
        "s": String::from(sp.s),
        "f": String::from(sp.f),
        "c": String::from(sp.c),
        "neutral": neutral.clone(),
    }));
    b.meta("input_states", json!([neutral]));
    let mut p = b.build()?;
    let cert = json!({
        "states": p.num_states(),
        "rewrite_transitions": rewrite_count,
        "state_bound_2way": semigroup_family_state_bound(
            sp.alphabet.len() as u64,
            rewrite_count as u64,
            sp.max_side().max(2) as u64,
        ),
    });
    p.meta_mut().insert("certificate".to_owned(), cert);
    Ok(p)
}

/// Smallest input population for which the compiled protocol outputs 1, up
/// to `max_m`; the predicate computed is monotone, so this is the protocol's
/// threshold. `None` if no population up to `max_m` accepts.
pub fn semigroup_threshold(
    p: &Protocol,
    max_m: u64,
    node_limit: usize,
) -> Result<Option<u64>, AnalysisError> {
    let input_states = p.input_order();
    for m in 0..=max_m {
        if m == 0 && p.leaders().is_empty() {
            continue;
        }
        let c0 = p.initial_configuration_for(&input_states, &[m])?;
        if analysis::decide_output(p, &c0, node_limit)? == Decision::One {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// A derivation of the presentation: a start word and the productions
/// applied, in order.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub start: String,
    pub productions: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub ok: bool,
    pub derivations_checked: usize,
    pub failures: Vec<String>,
}

/// Confirms the two-way correspondence between derivations and padded
/// firings:
///
/// * every `k`-step derivation can be replayed by the protocol from the
///   word's configuration padded with `margin·k` neutral agents, and
/// * the replayed firing sequence projects back to a valid derivation step
///   by step.
pub fn simulation_lemma_check(
    sp: &SemigroupPresentation,
    p: &Protocol,
    derivations: &[Derivation],
) -> Result<LemmaCheck, CompileError> {
    sp.validate()?;
    let neutral = p
        .meta()
        .get("designated")
        .and_then(|d| d.get("neutral"))
        .and_then(|v| v.as_str())
        .unwrap_or("x")
        .to_owned();
    let neutral_id = p.require_state(&neutral)?;
    let margin = sp.padding_margin();
    let mut failures = Vec::new();

    for (di, derivation) in derivations.iter().enumerate() {
        let k = derivation.productions.len() as u64;
        let m = margin * k;
        let mut config = Multiset::new();
        for ch in derivation.start.chars() {
            config.add(p.require_state(&String::from(ch))?, 1)?;
        }
        config.add(neutral_id, m)?;

        let mut word = letter_counts(&derivation.start);
        for &pi in &derivation.productions {
            let production = &sp.productions[pi];
            // word-level rewrite must apply
            let l = letter_counts(&production.l);
            if !l.iter().all(|(ch, n)| word.get(ch).copied().unwrap_or(0) >= *n) {
                failures.push(format!(
                    "derivation {di}: production `{} -> {}` not applicable",
                    production.l, production.r
                ));
                break;
            }
            for (ch, n) in &l {
                let slot = word.get_mut(ch).unwrap();
                *slot -= n;
                if *slot == 0 {
                    word.remove(ch);
                }
            }
            for (ch, n) in letter_counts(&production.r) {
                *word.entry(ch).or_insert(0) += n;
            }

            // protocol-level firing of the padded production must succeed
            let (pre, post) = pad(&production.l, &production.r, &neutral);
            let to_multiset = |names: &[String]| -> Result<Multiset, CompileError> {
                let mut m = Multiset::new();
                for name in names {
                    m.add(p.require_state(name)?, 1)?;
                }
                Ok(m)
            };
            let want_pre = to_multiset(&pre)?;
            let want_post = to_multiset(&post)?;
            let transition = p
                .transitions()
                .iter()
                .find(|t| t.prem() == want_pre && t.postm() == want_post);
            let transition = match transition {
                Some(t) => t,
                None => {
                    failures.push(format!(
                        "derivation {di}: padded production `{} -> {}` has no transition",
                        production.l, production.r
                    ));
                    break;
                }
            };
            match p.fire(transition, &config) {
                Ok(next) => config = next,
                Err(e) => {
                    failures.push(format!(
                        "derivation {di}: padded firing failed with margin {m}: {e}"
                    ));
                    break;
                }
            }

            // the configuration must still be the word plus neutral padding
            let projected: BTreeMap<char, u64> = config
                .iter()
                .filter(|&(q, _)| q != neutral_id)
                .map(|(q, n)| (p.state_name(q).chars().next().unwrap(), n))
                .collect();
            if projected != word {
                failures.push(format!(
                    "derivation {di}: configuration diverged from the rewritten word"
                ));
                break;
            }
        }
    }
    Ok(LemmaCheck {
        ok: failures.is_empty(),
        derivations_checked: derivations.len(),
        failures,
    })
}
