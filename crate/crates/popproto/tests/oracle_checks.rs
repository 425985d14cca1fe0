//! Cross-checks the analysis pipeline against the naive fixpoint oracles in
//! `common`, which only use the public single-step API.

mod common;

use std::collections::BTreeMap;

use popproto::analysis::{decide_output, explore, Decision};
use popproto::constructions::{flock_binary, flock_standard, majority_leaders};
use popproto::multiset::Multiset;
use popproto::protocol::Protocol;

fn input(p: &Protocol, x: u64) -> Multiset {
    let vars = p.input_order();
    p.initial_configuration_for(&vars, &[x]).unwrap()
}

#[test]
fn explore_matches_naive_reach_counts() {
    // two agents in the binary threshold-3 protocol: the pair state and its
    // doubled form, nothing else
    let p = flock_binary(3).unwrap();
    let c0 = input(&p, 2);
    let oracle = common::naive_reach(&p, &c0);
    assert_eq!(oracle.len(), 2);
    let g = explore(&p, &c0, 100_000).unwrap();
    assert_eq!(g.node_count(), oracle.len());

    // larger populations across the families
    for (p, xs) in [
        (flock_binary(3).unwrap(), vec![4, 6]),
        (flock_binary(5).unwrap(), vec![5]),
        (flock_standard(3).unwrap(), vec![5]),
        (majority_leaders(2).unwrap(), vec![3]),
    ] {
        for x in xs {
            let c0 = input(&p, x);
            let oracle = common::naive_reach(&p, &c0);
            let g = explore(&p, &c0, 1_000_000).unwrap();
            assert_eq!(g.node_count(), oracle.len(), "x={x}");
            // every explored node is in the oracle set
            for i in 0..g.node_count() as u32 {
                let named = common::to_named(&p, &g.configuration(&p, i));
                assert!(oracle.contains(&named), "x={x}: node {i} not reachable");
            }
        }
    }
}

#[test]
fn decide_matches_naive_terminal_analysis() {
    let cases: Vec<(Protocol, Vec<u64>)> = vec![
        (flock_standard(2).unwrap(), (1..=5).collect()),
        (flock_standard(3).unwrap(), (1..=5).collect()),
        (flock_binary(3).unwrap(), (1..=6).collect()),
        (flock_binary(4).unwrap(), (1..=6).collect()),
        (majority_leaders(2).unwrap(), (1..=4).collect()),
    ];
    for (p, xs) in cases {
        for x in xs {
            let c0 = input(&p, x);
            let fast = decide_output(&p, &c0, 1_000_000).unwrap();
            let naive = common::naive_decide(&p, &c0);
            assert_eq!(fast.as_bool(), naive, "x={x}");
        }
    }
}

#[test]
fn decision_is_invariant_under_state_renaming() {
    // same protocol with permuted state names explores in a different
    // canonical order; decisions must not change
    let p = flock_standard(3).unwrap();
    let rename = |q: &str| format!("s{}", q);
    let mut b = Protocol::builder();
    for name in p.state_names() {
        b.state(rename(name));
        b.output(rename(name), p.output(p.state_id(name).unwrap()));
    }
    for &q in p.initial_states() {
        b.initial(rename(p.state_name(q)));
    }
    for t in p.transitions() {
        let pre: Vec<String> = t.pre().iter().map(|&q| rename(p.state_name(q))).collect();
        let post: Vec<String> = t.post().iter().map(|&q| rename(p.state_name(q))).collect();
        b.transition(&pre, &post);
    }
    let renamed = b.build().unwrap();
    for x in 1..=6 {
        let a = decide_output(&p, &input(&p, x), 100_000).unwrap();
        let c0 = renamed
            .initial_configuration(&BTreeMap::from([("s1".to_owned(), x)]))
            .unwrap();
        let b = decide_output(&renamed, &c0, 100_000).unwrap();
        assert_eq!(a, b, "x={x}");
    }
}

#[cfg(feature = "parallel")]
#[test]
fn graphs_are_identical_across_thread_counts() {
    let p = flock_standard(5).unwrap();
    let c0 = input(&p, 8);
    let with_default = explore(&p, &c0, 1_000_000).unwrap();
    let with_one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| explore(&p, &c0, 1_000_000).unwrap());
    assert_eq!(with_default.node_count(), with_one.node_count());
    assert_eq!(with_default.edge_count(), with_one.edge_count());
    for i in 0..with_default.node_count() as u32 {
        assert_eq!(with_default.counts(i), with_one.counts(i));
        assert_eq!(with_default.successors(i), with_one.successors(i));
    }
}

#[test]
fn every_reachable_node_decides_like_the_root() {
    // well-specified protocols stabilize to an input-determined value, so
    // the decision from any reachable configuration must match the root's
    let p = flock_binary(5).unwrap();
    for x in [3u64, 6] {
        let c0 = input(&p, x);
        let root_decision = decide_output(&p, &c0, 1_000_000).unwrap();
        assert_ne!(root_decision, Decision::IllSpecified);
        let g = explore(&p, &c0, 1_000_000).unwrap();
        for i in 0..g.node_count() as u32 {
            let from_here = decide_output(&p, &g.configuration(&p, i), 1_000_000).unwrap();
            assert_eq!(from_here, root_decision, "x={x} node={i}");
        }
    }
}
