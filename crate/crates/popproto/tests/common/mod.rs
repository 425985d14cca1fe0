//! Independent oracles used by the integration tests. Everything here goes
//! through the public single-step API only (or no protocol machinery at
//! all), so agreement with the analysis module is meaningful.
//!
//! Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use popproto::multiset::Multiset;
use popproto::protocol::Protocol;

pub type NamedConfig = BTreeMap<String, u64>;

pub fn to_named(p: &Protocol, c: &Multiset) -> NamedConfig {
    c.iter()
        .map(|(q, n)| (p.state_name(q).to_owned(), n))
        .collect()
}

fn successors(p: &Protocol, c: &Multiset) -> Vec<Multiset> {
    let mut out = Vec::new();
    for t in p.transitions() {
        if t.is_silent() {
            continue;
        }
        if p.enabled(t, c).unwrap() {
            out.push(p.fire(t, c).unwrap());
        }
    }
    out
}

/// Fixpoint enumeration of the reachable configurations, by name.
pub fn naive_reach(p: &Protocol, c0: &Multiset) -> BTreeSet<NamedConfig> {
    let mut seen: BTreeSet<NamedConfig> = BTreeSet::new();
    let mut queue: VecDeque<Multiset> = VecDeque::new();
    seen.insert(to_named(p, c0));
    queue.push_back(c0.clone());
    while let Some(c) = queue.pop_front() {
        for next in successors(p, &c) {
            if seen.insert(to_named(p, &next)) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Quadratic-time exact decision: a configuration belongs to a terminal SCC
/// iff every configuration it reaches can reach it back; the output is `b`
/// iff all terminal configurations are `b`-consensus. `None` means
/// ill-specified.
pub fn naive_decide(p: &Protocol, c0: &Multiset) -> Option<bool> {
    let reachable: Vec<NamedConfig> = naive_reach(p, c0).into_iter().collect();
    let from_named = |named: &NamedConfig| -> Multiset {
        Multiset::from_counts(
            named
                .iter()
                .map(|(name, &n)| (p.state_id(name).unwrap(), n)),
        )
        .unwrap()
    };
    let reach_set = |start: &NamedConfig| -> BTreeSet<NamedConfig> {
        naive_reach(p, &from_named(start))
    };
    let reach_sets: Vec<BTreeSet<NamedConfig>> = reachable.iter().map(reach_set).collect();

    let mut value: Option<bool> = None;
    for (i, named) in reachable.iter().enumerate() {
        let terminal = reach_sets[i].iter().all(|d| {
            let j = reachable.iter().position(|x| x == d).unwrap();
            reach_sets[j].contains(named)
        });
        if !terminal {
            continue;
        }
        match p.consensus_output(&from_named(named)) {
            None => return None,
            Some(b) => match value {
                None => value = Some(b),
                Some(prev) if prev != b => return None,
                Some(_) => {}
            },
        }
    }
    value
}

/// A word over single-character letters, as a multiset.
pub type Word = BTreeMap<char, u64>;

pub fn word(s: &str) -> Word {
    let mut w = Word::new();
    for ch in s.chars() {
        *w.entry(ch).or_insert(0) += 1;
    }
    w
}

fn word_len(w: &Word) -> u64 {
    w.values().sum()
}

/// Applies `l -> r` to `w` given `free` spare padding agents, mirroring the
/// agent budget of a padded rewrite: the step consumes
/// `max(|l|,|r|,2) - |l|` spare agents. Pure word arithmetic.
fn apply_production(w: &Word, free: u64, l: &Word, r: &Word) -> Option<Word> {
    if !l.iter().all(|(ch, n)| w.get(ch).copied().unwrap_or(0) >= *n) {
        return None;
    }
    let arity = word_len(l).max(word_len(r)).max(2);
    if free < arity - word_len(l) {
        return None;
    }
    let mut next = w.clone();
    for (ch, n) in l {
        let slot = next.get_mut(ch).unwrap();
        *slot -= n;
        if *slot == 0 {
            next.remove(ch);
        }
    }
    for (&ch, n) in r {
        *next.entry(ch).or_insert(0) += n;
    }
    Some(next)
}

/// Smallest padding budget `m` (up to `max_m`) with which some word
/// containing `target` is derivable from `start`. Breadth-first over words;
/// the total agent count `|start| + m` is invariant.
pub fn rewriting_threshold(
    productions: &[(String, String)],
    start: &str,
    target: char,
    max_m: u64,
) -> Option<u64> {
    let rules: Vec<(Word, Word)> = productions
        .iter()
        .map(|(l, r)| (word(l), word(r)))
        .collect();
    for m in 0..=max_m {
        let total = word_len(&word(start)) + m;
        let mut seen: BTreeSet<Word> = BTreeSet::new();
        let mut queue: VecDeque<Word> = VecDeque::new();
        seen.insert(word(start));
        queue.push_back(word(start));
        let mut found = word(start).contains_key(&target);
        while let Some(w) = queue.pop_front() {
            if found {
                break;
            }
            for (l, r) in &rules {
                let free = total - word_len(&w);
                if let Some(next) = apply_production(&w, free, l, r) {
                    if next.contains_key(&target) {
                        found = true;
                        break;
                    }
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
        if found {
            return Some(m);
        }
    }
    None
}

/// All derivations from `start` of length up to `max_len`, budget-free
/// (the correspondence lemma supplies its own padding margin).
pub fn enumerate_derivations(
    productions: &[(String, String)],
    start: &str,
    max_len: usize,
) -> Vec<Vec<usize>> {
    let rules: Vec<(Word, Word)> = productions
        .iter()
        .map(|(l, r)| (word(l), word(r)))
        .collect();
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut layer: Vec<(Word, Vec<usize>)> = vec![(word(start), Vec::new())];
    for _ in 0..max_len {
        let mut next_layer = Vec::new();
        for (w, path) in &layer {
            for (i, (l, r)) in rules.iter().enumerate() {
                if let Some(next) = apply_production(w, u64::MAX, l, r) {
                    let mut p = path.clone();
                    p.push(i);
                    out.push(p.clone());
                    next_layer.push((next, p));
                }
            }
        }
        layer = next_layer;
    }
    out
}
