//! Behavioural checks of the k-way → 2-way lowering and the semigroup
//! compiler, against brute-force oracles where one exists.

mod common;

use std::collections::BTreeMap;

use popproto::analysis::{coverable, decide_output, explore};
use popproto::compile::{
    check_simulation, from_semigroup, semigroup_threshold, simulation_lemma_check, to_2way,
    Derivation, Production, SemigroupPresentation,
};
use popproto::constructions::flock_binary;
use popproto::multiset::Multiset;
use popproto::protocol::Protocol;

const LIMIT: usize = 2_000_000;

fn triple_protocol() -> Protocol {
    let mut b = Protocol::builder();
    b.state("a").state("b");
    b.output("a", false).output("b", true);
    b.initial("a");
    b.transition(&["a", "a", "a"], &["b", "b", "b"]);
    b.build().unwrap()
}

#[test]
fn lowered_triple_rendezvous_simulates_the_original() {
    let p = triple_protocol();
    let (lowered, info) = to_2way(&p).unwrap();
    assert_eq!(info.gadget_states, 3);
    let vars = p.input_order();
    let domain: Vec<Vec<u64>> = (1..=6).map(|x| vec![x]).collect();
    let check = check_simulation(&p, &lowered, &vars, &domain, LIMIT).unwrap();
    assert!(check.ok, "{:?}", check.witness);

    // with two agents the collection can never commit: b stays unreachable
    let c0 = lowered
        .initial_configuration(&BTreeMap::from([("a".to_owned(), 2)]))
        .unwrap();
    let b_state = [lowered.state_id("b").unwrap()];
    assert!(!coverable(&lowered, &c0, &b_state, LIMIT).unwrap());
}

#[test]
fn lowered_binary_flocks_compute_the_same_predicate() {
    for n in [7u64, 11] {
        let p = flock_binary(n).unwrap();
        assert!(p.max_arity() >= 3);
        let (lowered, _) = to_2way(&p).unwrap();
        let pv = p.input_order();
        let lv = lowered.input_order();
        for x in 1..=n + 1 {
            let cp = p.initial_configuration_for(&pv, &[x]).unwrap();
            let cl = lowered.initial_configuration_for(&lv, &[x]).unwrap();
            let dp = decide_output(&p, &cp, LIMIT).unwrap();
            let dl = decide_output(&lowered, &cl, LIMIT).unwrap();
            assert_eq!(dp, dl, "n={n} x={x}");
            assert_eq!(dp.as_bool(), Some(x >= n), "n={n} x={x}");
        }
        let domain: Vec<Vec<u64>> = (1..=n + 1).map(|x| vec![x]).collect();
        let check = check_simulation(&p, &lowered, &pv, &domain, LIMIT).unwrap();
        assert!(check.ok, "n={n}: {:?}", check.witness);
    }
}

fn test_presentation() -> SemigroupPresentation {
    SemigroupPresentation {
        alphabet: vec!['s', 'f', 'b', 'c'],
        productions: vec![
            Production {
                l: "s".into(),
                r: "fbb".into(),
            },
            Production {
                l: "fbb".into(),
                r: "s".into(),
            },
        ],
        s: 's',
        f: 'f',
        c: 'c',
        b: Some('b'),
    }
}

#[test]
fn semigroup_threshold_matches_rewriting_oracle() {
    let sp = test_presentation();
    let p = from_semigroup(&sp).unwrap();

    let rules: Vec<(String, String)> = sp
        .productions
        .iter()
        .map(|prod| (prod.l.clone(), prod.r.clone()))
        .collect();
    // leaders hold the catalyst and start letters, so derivations begin at "sc"
    let oracle = common::rewriting_threshold(&rules, "sc", 'f', 10).unwrap();
    assert_eq!(oracle, 2);

    let threshold = semigroup_threshold(&p, 10, LIMIT).unwrap().unwrap();
    assert_eq!(threshold, oracle);

    // and the computed predicate is exactly x ≥ threshold on a window
    let vars = p.input_order();
    for x in 0..=5u64 {
        let c0 = p.initial_configuration_for(&vars, &[x]).unwrap();
        let d = decide_output(&p, &c0, LIMIT).unwrap();
        assert_eq!(d.as_bool(), Some(x >= threshold), "x={x}");
    }
}

#[test]
fn rewrite_only_reachability_is_symmetric() {
    // the padded rewrites alone form a reversible system: every edge of the
    // rewrite-only reachability graph has its reverse edge
    let sp = test_presentation();
    let mut b = Protocol::builder();
    for &ch in &sp.alphabet {
        b.state(String::from(ch));
        b.output(String::from(ch), ch == 'f');
    }
    b.state("x");
    b.output("x", false);
    b.initial("x");
    b.leader("c", 1);
    b.leader("s", 1);
    for prod in &sp.productions {
        let (pre, post) = popproto::compile::pad(&prod.l, &prod.r, "x");
        b.transition(&pre, &post);
    }
    let rewrites_only = b.build().unwrap();
    let c0 = rewrites_only
        .initial_configuration(&BTreeMap::from([("x".to_owned(), 6)]))
        .unwrap();
    let g = explore(&rewrites_only, &c0, LIMIT).unwrap();
    assert!(g.node_count() > 1);
    for u in 0..g.node_count() as u32 {
        for &v in g.successors(u) {
            assert!(
                g.successors(v).contains(&u),
                "edge {u} -> {v} has no reverse"
            );
        }
    }
}

#[test]
fn lemma_check_passes_on_enumerated_derivations() {
    let sp = test_presentation();
    let p = from_semigroup(&sp).unwrap();
    let rules: Vec<(String, String)> = sp
        .productions
        .iter()
        .map(|prod| (prod.l.clone(), prod.r.clone()))
        .collect();
    let derivations: Vec<Derivation> = common::enumerate_derivations(&rules, "sc", 4)
        .into_iter()
        .map(|productions| Derivation {
            start: "sc".to_owned(),
            productions,
        })
        .collect();
    assert!(derivations.len() > 4);
    let check = simulation_lemma_check(&sp, &p, &derivations).unwrap();
    assert!(check.ok, "{:?}", check.failures);
    assert_eq!(check.derivations_checked, derivations.len());
}

#[test]
fn empty_derivation_is_trivially_fine() {
    let sp = test_presentation();
    let p = from_semigroup(&sp).unwrap();
    let check = simulation_lemma_check(
        &sp,
        &p,
        &[Derivation {
            start: "sc".to_owned(),
            productions: vec![],
        }],
    )
    .unwrap();
    assert!(check.ok);
}

#[test]
fn single_padded_firing_with_margin() {
    // one derivation step s -> fbb from ⟨s, c⟩ plus margin-many neutral agents
    let sp = test_presentation();
    let p = from_semigroup(&sp).unwrap();
    let neutral = p.state_id("x").unwrap();
    let mut c = Multiset::new();
    c.add(p.state_id("s").unwrap(), 1).unwrap();
    c.add(p.state_id("c").unwrap(), 1).unwrap();
    c.add(neutral, 4).unwrap();
    let pad_s = p
        .transitions()
        .iter()
        .find(|t| p.display_transition(t) == "s,x,x -> f,b,b")
        .expect("padded production present");
    let next = p.fire(pad_s, &c).unwrap();
    assert_eq!(next.count(p.state_id("f").unwrap()), 1);
    assert_eq!(next.count(p.state_id("b").unwrap()), 2);
    assert_eq!(next.count(neutral), 2);
}
