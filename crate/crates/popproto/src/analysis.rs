//! Exact decision of protocol outputs on fixed populations.
//!
//! All analyses are built on one primitive: exhaustive breadth-first
//! exploration of the configurations reachable from an initial one. On a
//! finite reachable space the fairness condition is equivalent to ending
//! inside a terminal (bottom) strongly connected component and visiting all
//! of it, so a protocol's output on an input is read off the terminal SCCs:
//! the output is `b` exactly when every terminal SCC consists of
//! `b`-consensus configurations, and ill-specified otherwise. No scheduling
//! or probabilistic argument is involved; answers are exact.
//!
//! Frontier expansion may fan out across threads, but successors are merged
//! in frontier order, so node numbering and every derived answer are
//! independent of thread count.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dense::{Compiled, DenseConfig};
use crate::multiset::Multiset;
use crate::par;
use crate::protocol::{Protocol, StateId};
use crate::CoreError;

/// Default cap on explored configurations before giving up explicitly.
pub const DEFAULT_NODE_LIMIT: usize = 5_000_000;

#[derive(Debug, Error)]
pub enum AnalysisError {
    /// Exploration needed more than `limit` configurations. The partial
    /// graph is carried along so callers can inspect how far it got; it is
    /// never silently passed off as complete.
    #[error("exploration exceeded the node limit of {limit}")]
    NodeLimitExceeded {
        limit: usize,
        partial: Box<ReachabilityGraph>,
    },

    #[error("1-awareness state set contains initial or leader state `{0}`")]
    InvalidQ1(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Explicit directed graph over the configurations reachable from a root,
/// all of one fixed population size. Edges are non-silent firings only;
/// silent steps cannot change a configuration.
pub struct ReachabilityGraph {
    n_states: usize,
    nodes: Vec<DenseConfig>,
    edges: Vec<Vec<u32>>,
    /// First-discovery parent and the protocol transition index that fired.
    parents: Vec<Option<(u32, u32)>>,
}

impl ReachabilityGraph {
    pub fn root(&self) -> u32 {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(|e| e.len()).sum()
    }

    pub fn successors(&self, node: u32) -> &[u32] {
        &self.edges[node as usize]
    }

    /// Dense per-state counts of a node, indexed by `StateId` index.
    pub fn counts(&self, node: u32) -> &[u32] {
        &self.nodes[node as usize]
    }

    pub fn population(&self) -> u64 {
        self.nodes[0].iter().map(|&n| n as u64).sum()
    }

    pub fn configuration(&self, p: &Protocol, node: u32) -> Multiset {
        Compiled::new(p).to_multiset(&self.nodes[node as usize])
    }

    /// Linear-scan lookup of a configuration.
    pub fn find(&self, p: &Protocol, c: &Multiset) -> Option<u32> {
        let compiled = Compiled::new(p);
        let dense = compiled.to_dense(c).ok()?;
        self.nodes
            .iter()
            .position(|n| **n == *dense)
            .map(|i| i as u32)
    }

    /// Transition indices of a firing sequence from the root to `node`.
    pub fn path_to(&self, node: u32) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = node;
        while let Some((parent, t)) = self.parents[cur as usize] {
            path.push(t as usize);
            cur = parent;
        }
        path.reverse();
        path
    }
}

impl fmt::Debug for ReachabilityGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReachabilityGraph")
            .field("nodes", &self.nodes.len())
            .field("edges", &self.edge_count())
            .field("states", &self.n_states)
            .finish()
    }
}

/// Breadth-first exploration bounded by `node_limit`.
pub fn explore(
    p: &Protocol,
    c0: &Multiset,
    node_limit: usize,
) -> Result<ReachabilityGraph, AnalysisError> {
    let compiled = Compiled::new(p);
    let (graph, _) = explore_inner(&compiled, c0, node_limit, None)?;
    Ok(graph)
}

type StopFn<'a> = &'a (dyn Fn(&[u32]) -> bool + Sync);

/// Shared BFS core. When `stop` is given, exploration halts as soon as a
/// matching configuration is discovered and returns its node id.
fn explore_inner(
    compiled: &Compiled,
    c0: &Multiset,
    node_limit: usize,
    stop: Option<StopFn>,
) -> Result<(ReachabilityGraph, Option<u32>), AnalysisError> {
    if c0.is_empty() {
        return Err(CoreError::EmptyPopulation.into());
    }
    let root = compiled.to_dense(c0)?;

    let mut nodes: Vec<DenseConfig> = Vec::new();
    let mut edges: Vec<Vec<u32>> = Vec::new();
    let mut parents: Vec<Option<(u32, u32)>> = Vec::new();
    let mut visited: HashMap<DenseConfig, u32> = HashMap::new();

    if let Some(stop) = stop {
        if stop(&root) {
            nodes.push(root.clone());
            edges.push(Vec::new());
            parents.push(None);
            let graph = ReachabilityGraph {
                n_states: compiled.n_states,
                nodes,
                edges,
                parents,
            };
            return Ok((graph, Some(0)));
        }
    }

    visited.insert(root.clone(), 0);
    nodes.push(root);
    edges.push(Vec::new());
    parents.push(None);

    let mut frontier: Vec<u32> = vec![0];
    while !frontier.is_empty() {
        // Expand in parallel, merge sequentially in frontier order so node
        // ids are deterministic.
        let expansions: Vec<Vec<(u32, DenseConfig)>> = par::map_vec(&frontier, |&id| {
            let counts = &nodes[id as usize];
            let mut succs = Vec::new();
            for t in &compiled.transitions {
                if compiled.enabled(t, counts) {
                    succs.push((t.index as u32, compiled.fire(t, counts)));
                }
            }
            succs
        });

        let mut next_frontier = Vec::new();
        for (&id, succs) in frontier.iter().zip(expansions) {
            for (t_index, succ) in succs {
                let succ_id = match visited.get(&succ) {
                    Some(&existing) => existing,
                    None => {
                        if nodes.len() >= node_limit {
                            let graph = ReachabilityGraph {
                                n_states: compiled.n_states,
                                nodes,
                                edges,
                                parents,
                            };
                            return Err(AnalysisError::NodeLimitExceeded {
                                limit: node_limit,
                                partial: Box::new(graph),
                            });
                        }
                        let new_id = nodes.len() as u32;
                        visited.insert(succ.clone(), new_id);
                        nodes.push(succ.clone());
                        edges.push(Vec::new());
                        parents.push(Some((id, t_index)));
                        next_frontier.push(new_id);
                        if let Some(stop) = stop {
                            if stop(&succ) {
                                edges[id as usize].push(new_id);
                                let graph = ReachabilityGraph {
                                    n_states: compiled.n_states,
                                    nodes,
                                    edges,
                                    parents,
                                };
                                return Ok((graph, Some(new_id)));
                            }
                        }
                        new_id
                    }
                };
                edges[id as usize].push(succ_id);
            }
            let out = &mut edges[id as usize];
            out.sort_unstable();
            out.dedup();
        }
        frontier = next_frontier;
    }

    let graph = ReachabilityGraph {
        n_states: compiled.n_states,
        nodes,
        edges,
        parents,
    };
    Ok((graph, None))
}

/// Iterative Tarjan decomposition; recursion-free so deep chains of
/// configurations cannot overflow the stack. Returns the component id of
/// each node and the number of components.
pub(crate) fn tarjan_scc(edges: &[Vec<u32>]) -> (Vec<u32>, usize) {
    const UNVISITED: u32 = u32::MAX;
    let n = edges.len();
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut comp = vec![UNVISITED; n];
    let mut next_index = 0u32;
    let mut n_comps = 0usize;
    let mut frames: Vec<(u32, usize)> = Vec::new();

    for start in 0..n as u32 {
        if index[start as usize] != UNVISITED {
            continue;
        }
        frames.push((start, 0));
        while let Some(frame) = frames.last_mut() {
            let (v, edge_pos) = (frame.0, frame.1);
            let vi = v as usize;
            if edge_pos == 0 {
                index[vi] = next_index;
                lowlink[vi] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[vi] = true;
            }
            if let Some(&w) = edges[vi].get(edge_pos) {
                frame.1 += 1;
                let wi = w as usize;
                if index[wi] == UNVISITED {
                    frames.push((w, 0));
                } else if on_stack[wi] {
                    lowlink[vi] = lowlink[vi].min(index[wi]);
                }
            } else {
                if lowlink[vi] == index[vi] {
                    let c = n_comps as u32;
                    n_comps += 1;
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        comp[w as usize] = c;
                        if w == v {
                            break;
                        }
                    }
                }
                frames.pop();
                if let Some(parent) = frames.last() {
                    let pi = parent.0 as usize;
                    lowlink[pi] = lowlink[pi].min(lowlink[vi]);
                }
            }
        }
    }
    (comp, n_comps)
}

/// Per-SCC flag: true iff the component has no edge leaving it.
pub(crate) fn terminal_flags(edges: &[Vec<u32>], comp: &[u32], n_comps: usize) -> Vec<bool> {
    let mut terminal = vec![true; n_comps];
    for (u, out) in edges.iter().enumerate() {
        for &v in out {
            if comp[u] != comp[v as usize] {
                terminal[comp[u] as usize] = false;
            }
        }
    }
    terminal
}

/// What a protocol stabilizes to on a fixed input, decided exactly.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Zero,
    One,
    IllSpecified,
}

impl Decision {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Decision::Zero => Some(false),
            Decision::One => Some(true),
            Decision::IllSpecified => None,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Decision::Zero => "0",
            Decision::One => "1",
            Decision::IllSpecified => "ill-specified",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub struct DecisionStats {
    pub decision: Decision,
    pub nodes: usize,
    pub terminal_sccs: usize,
    /// A node inside a terminal SCC exhibiting the decision (for
    /// ill-specified: a node breaking consensus uniformity).
    pub witness_node: Option<u32>,
}

pub(crate) fn decide_from_graph(p: &Protocol, graph: &ReachabilityGraph) -> DecisionStats {
    let compiled = Compiled::new(p);
    let (comp, n_comps) = tarjan_scc(&graph.edges);
    let terminal = terminal_flags(&graph.edges, &comp, n_comps);
    let terminal_sccs = terminal.iter().filter(|&&t| t).count();

    let mut value: Option<bool> = None;
    let mut witness_node = None;
    for (u, counts) in graph.nodes.iter().enumerate() {
        if !terminal[comp[u] as usize] {
            continue;
        }
        match compiled.consensus(counts) {
            None => {
                return DecisionStats {
                    decision: Decision::IllSpecified,
                    nodes: graph.node_count(),
                    terminal_sccs,
                    witness_node: Some(u as u32),
                };
            }
            Some(b) => match value {
                None => {
                    value = Some(b);
                    witness_node = Some(u as u32);
                }
                Some(prev) if prev != b => {
                    return DecisionStats {
                        decision: Decision::IllSpecified,
                        nodes: graph.node_count(),
                        terminal_sccs,
                        witness_node: Some(u as u32),
                    };
                }
                Some(_) => {}
            },
        }
    }
    let decision = match value {
        Some(false) => Decision::Zero,
        Some(true) => Decision::One,
        // A non-empty graph always has at least one terminal SCC.
        None => unreachable!("reachability graph has no terminal SCC"),
    };
    DecisionStats {
        decision,
        nodes: graph.node_count(),
        terminal_sccs,
        witness_node,
    }
}

/// Exact output of `p` started at `c0`: the consensus value every fair
/// execution stabilizes to, or ill-specified if none exists.
pub fn decide_output(
    p: &Protocol,
    c0: &Multiset,
    node_limit: usize,
) -> Result<Decision, AnalysisError> {
    Ok(decide_with_stats(p, c0, node_limit)?.decision)
}

pub fn decide_with_stats(
    p: &Protocol,
    c0: &Multiset,
    node_limit: usize,
) -> Result<DecisionStats, AnalysisError> {
    let graph = explore(p, c0, node_limit)?;
    Ok(decide_from_graph(p, &graph))
}

/// True iff some configuration reachable from `c0` puts an agent in one of
/// `targets`.
pub fn coverable(
    p: &Protocol,
    c0: &Multiset,
    targets: &[StateId],
    node_limit: usize,
) -> Result<bool, AnalysisError> {
    let compiled = Compiled::new(p);
    let mut mask = vec![false; compiled.n_states];
    for &q in targets {
        if q.index() >= compiled.n_states {
            return Err(CoreError::MalformedTransition.into());
        }
        mask[q.index()] = true;
    }
    let stop = move |counts: &[u32]| {
        counts
            .iter()
            .zip(&mask)
            .any(|(&n, &target)| target && n > 0)
    };
    let (_, hit) = explore_inner(&compiled, c0, node_limit, Some(&stop))?;
    Ok(hit.is_some())
}

/// How one verified input fared.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecidedOutput {
    Zero,
    One,
    IllSpecified,
    /// Exploration hit the node limit before the space was exhausted.
    Inconclusive,
}

impl fmt::Display for DecidedOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecidedOutput::Zero => "0",
            DecidedOutput::One => "1",
            DecidedOutput::IllSpecified => "ill-specified",
            DecidedOutput::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

impl From<Decision> for DecidedOutput {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Zero => DecidedOutput::Zero,
            Decision::One => DecidedOutput::One,
            Decision::IllSpecified => DecidedOutput::IllSpecified,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationEntry {
    pub input: Vec<u64>,
    pub expected: bool,
    pub decided: DecidedOutput,
    pub nodes: usize,
    pub terminal_sccs: usize,
    /// Firing sequence from the initial configuration into a terminal SCC
    /// exhibiting the wrong or ill-specified behaviour. Only on mismatch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<String>>,
}

impl VerificationEntry {
    pub fn ok(&self) -> bool {
        match self.decided {
            DecidedOutput::Zero => !self.expected,
            DecidedOutput::One => self.expected,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportVerdict {
    Pass,
    Fail,
    /// At least one entry hit the node limit; distinct from a failure.
    Inconclusive,
}

impl fmt::Display for ReportVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReportVerdict::Pass => "pass",
            ReportVerdict::Fail => "fail",
            ReportVerdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub variables: Vec<String>,
    pub node_limit: usize,
    pub entries: Vec<VerificationEntry>,
    pub verdict: ReportVerdict,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == ReportVerdict::Pass
    }

    /// One row per input: the input vector, decided output, node count and
    /// terminal-SCC count.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for var in &self.variables {
            out.push_str(var);
            out.push(',');
        }
        out.push_str("decided,nodes,terminal_sccs\n");
        for e in &self.entries {
            for v in &e.input {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&format!("{},{},{}\n", e.decided, e.nodes, e.terminal_sccs));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Decides the protocol's output on every input in `domain` and compares it
/// with `expected`. Inputs are counts aligned with `input_states`.
pub fn verify_predicate<F>(
    p: &Protocol,
    input_states: &[StateId],
    domain: &[Vec<u64>],
    expected: F,
    node_limit: usize,
) -> Result<VerificationReport, AnalysisError>
where
    F: Fn(&[u64]) -> bool + Sync,
{
    let roots: Vec<Multiset> = domain
        .iter()
        .map(|counts| p.initial_configuration_for(input_states, counts))
        .collect::<Result<_, _>>()?;
    let compiled = Compiled::new(p);
    for root in &roots {
        compiled.to_dense(root)?;
    }

    let results = par::map_indexed(domain.len(), |i| {
        let want = expected(&domain[i]);
        match explore(p, &roots[i], node_limit) {
            Ok(graph) => {
                let stats = decide_from_graph(p, &graph);
                let decided = DecidedOutput::from(stats.decision);
                let mismatch = !matches!(
                    (decided, want),
                    (DecidedOutput::Zero, false) | (DecidedOutput::One, true)
                );
                let counterexample = if mismatch {
                    stats.witness_node.map(|node| {
                        graph
                            .path_to(node)
                            .into_iter()
                            .map(|t| p.display_transition(&p.transitions()[t]))
                            .collect()
                    })
                } else {
                    None
                };
                VerificationEntry {
                    input: domain[i].clone(),
                    expected: want,
                    decided,
                    nodes: stats.nodes,
                    terminal_sccs: stats.terminal_sccs,
                    counterexample,
                }
            }
            Err(AnalysisError::NodeLimitExceeded { partial, .. }) => VerificationEntry {
                input: domain[i].clone(),
                expected: want,
                decided: DecidedOutput::Inconclusive,
                nodes: partial.node_count(),
                terminal_sccs: 0,
                counterexample: None,
            },
            Err(e) => panic!("pre-validated input failed exploration: {e}"),
        }
    });

    let any_fail = results.iter().any(|e| {
        matches!(
            e.decided,
            DecidedOutput::Zero | DecidedOutput::One | DecidedOutput::IllSpecified
        ) && !e.ok()
    });
    let any_inconclusive = results
        .iter()
        .any(|e| e.decided == DecidedOutput::Inconclusive);
    let verdict = if any_fail {
        ReportVerdict::Fail
    } else if any_inconclusive {
        ReportVerdict::Inconclusive
    } else {
        ReportVerdict::Pass
    };
    Ok(VerificationReport {
        variables: input_states
            .iter()
            .map(|&q| p.state_name(q).to_owned())
            .collect(),
        node_limit,
        entries: results,
        verdict,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OneAwareEntry {
    pub input: Vec<u64>,
    pub decided: DecidedOutput,
    /// Some reachable configuration touches the witness set.
    pub q1_covered: bool,
    /// Condition on 0-inputs: the witness set is never touched.
    pub never_touched_on_zero: bool,
    /// Condition on 1-inputs: every terminal-SCC configuration lies fully
    /// inside the witness set.
    pub terminal_inside_q1: bool,
    /// Output 1 iff the witness set is coverable.
    pub coverability_matches: bool,
}

impl OneAwareEntry {
    pub fn ok(&self) -> bool {
        matches!(self.decided, DecidedOutput::Zero | DecidedOutput::One)
            && self.never_touched_on_zero
            && self.terminal_inside_q1
            && self.coverability_matches
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OneAwareReport {
    pub q1: Vec<String>,
    pub entries: Vec<OneAwareEntry>,
    pub ok: bool,
}

/// Checks the 1-awareness conditions of a candidate witness set `q1` over a
/// finite input domain, together with the coverability characterization
/// (output 1 exactly when `q1` is coverable).
pub fn check_1aware(
    p: &Protocol,
    q1: &[StateId],
    input_states: &[StateId],
    domain: &[Vec<u64>],
    node_limit: usize,
) -> Result<OneAwareReport, AnalysisError> {
    for &q in q1 {
        if p.is_initial(q) || p.leaders().count(q) > 0 {
            return Err(AnalysisError::InvalidQ1(p.state_name(q).to_owned()));
        }
    }
    let mut mask = vec![false; p.num_states()];
    for &q in q1 {
        mask[q.index()] = true;
    }

    let roots: Vec<Multiset> = domain
        .iter()
        .map(|counts| p.initial_configuration_for(input_states, counts))
        .collect::<Result<_, _>>()?;

    let entries: Vec<Result<OneAwareEntry, AnalysisError>> = par::map_indexed(domain.len(), |i| {
        let graph = explore(p, &roots[i], node_limit)?;
        let stats = decide_from_graph(p, &graph);
        let covered = graph
            .nodes
            .iter()
            .any(|c| c.iter().zip(&mask).any(|(&n, &m)| m && n > 0));

        let (comp, n_comps) = tarjan_scc(&graph.edges);
        let terminal = terminal_flags(&graph.edges, &comp, n_comps);
        let all_terminal_inside = graph.nodes.iter().enumerate().all(|(u, c)| {
            !terminal[comp[u] as usize] || c.iter().zip(&mask).all(|(&n, &m)| m || n == 0)
        });

        let decided = DecidedOutput::from(stats.decision);
        Ok(OneAwareEntry {
            input: domain[i].clone(),
            decided,
            q1_covered: covered,
            never_touched_on_zero: decided != DecidedOutput::Zero || !covered,
            terminal_inside_q1: decided != DecidedOutput::One || all_terminal_inside,
            coverability_matches: (decided == DecidedOutput::One) == covered,
        })
    });
    let entries: Vec<OneAwareEntry> = entries.into_iter().collect::<Result<_, _>>()?;
    let ok = entries.iter().all(|e| e.ok());
    Ok(OneAwareReport {
        q1: q1.iter().map(|&q| p.state_name(q).to_owned()).collect(),
        entries,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{flock_standard, majority_leaders};
    use std::collections::BTreeMap;

    fn input(p: &Protocol, pairs: &[(&str, u64)]) -> Multiset {
        p.initial_configuration(&BTreeMap::from_iter(
            pairs.iter().map(|&(k, v)| (k.to_owned(), v)),
        ))
        .unwrap()
    }

    #[test]
    fn single_frozen_agent_yields_one_node() {
        let p = flock_standard(2).unwrap();
        let g = explore(&p, &input(&p, &[("1", 1)]), 1000).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.successors(0), &[] as &[u32]);
    }

    #[test]
    fn worked_example_decides_one_and_reaches_consensus() {
        let p = flock_standard(2).unwrap();
        let c0 = input(&p, &[("1", 3)]);
        let g = explore(&p, &c0, 10_000).unwrap();
        let all2 = Multiset::from_counts([(p.state_id("2").unwrap(), 3)]).unwrap();
        assert!(g.find(&p, &all2).is_some());
        assert_eq!(decide_output(&p, &c0, 10_000).unwrap(), Decision::One);
        assert_eq!(decide_output(&p, &input(&p, &[("1", 1)]), 10_000).unwrap(), Decision::Zero);
    }

    #[test]
    fn majority_with_two_leaders_decides_threshold() {
        let p = majority_leaders(2).unwrap();
        assert_eq!(decide_output(&p, &input(&p, &[("x", 3)]), 100_000).unwrap(), Decision::One);
        assert_eq!(decide_output(&p, &input(&p, &[("x", 1)]), 100_000).unwrap(), Decision::Zero);
    }

    #[test]
    fn node_limit_is_an_explicit_error() {
        let p = flock_standard(4).unwrap();
        let err = explore(&p, &input(&p, &[("1", 8)]), 5).unwrap_err();
        match err {
            AnalysisError::NodeLimitExceeded { limit, partial } => {
                assert_eq!(limit, 5);
                assert_eq!(partial.node_count(), 5);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn coverability_examples() {
        let p = flock_standard(3).unwrap();
        let target = [p.state_id("3").unwrap()];
        assert!(coverable(&p, &input(&p, &[("1", 3)]), &target, 10_000).unwrap());
        assert!(!coverable(&p, &input(&p, &[("1", 2)]), &target, 10_000).unwrap());
    }

    #[test]
    fn verify_flock_thresholds() {
        let p = flock_standard(2).unwrap();
        let vars = vec![p.state_id("1").unwrap()];
        let domain: Vec<Vec<u64>> = (1..=5).map(|x| vec![x]).collect();
        let report = verify_predicate(&p, &vars, &domain, |x| x[0] >= 2, 100_000).unwrap();
        assert!(report.passed());
        // a deliberately wrong predicate fails with a counterexample
        let report = verify_predicate(&p, &vars, &domain, |x| x[0] >= 3, 100_000).unwrap();
        assert_eq!(report.verdict, ReportVerdict::Fail);
        let bad = report.entries.iter().find(|e| !e.ok()).unwrap();
        assert_eq!(bad.input, vec![2]);
        assert!(bad.counterexample.is_some());
    }

    #[test]
    fn tarjan_handles_cycles_and_chains() {
        // 0 -> 1 -> 2 -> 0 plus 2 -> 3, 3 terminal
        let edges = vec![vec![1], vec![2], vec![0, 3], vec![]];
        let (comp, n) = tarjan_scc(&edges);
        assert_eq!(n, 2);
        assert_eq!(comp[0], comp[1]);
        assert_eq!(comp[1], comp[2]);
        assert_ne!(comp[0], comp[3]);
        let terminal = terminal_flags(&edges, &comp, n);
        assert!(terminal[comp[3] as usize]);
        assert!(!terminal[comp[0] as usize]);
    }

    #[test]
    fn one_awareness_of_the_threshold_state() {
        let p = flock_standard(2).unwrap();
        let vars = vec![p.state_id("1").unwrap()];
        let domain: Vec<Vec<u64>> = (1..=5).map(|x| vec![x]).collect();
        let q1 = [p.state_id("2").unwrap()];
        let report = check_1aware(&p, &q1, &vars, &domain, 100_000).unwrap();
        assert!(report.ok);

        // state 0 is not a valid witness set: the 1-consensus sink has no agent in it
        let q0 = [p.state_id("0").unwrap()];
        let report = check_1aware(&p, &q0, &vars, &domain[..3], 100_000).unwrap();
        assert!(!report.ok);

        // the empty witness set cannot satisfy the 1-side condition
        let report = check_1aware(&p, &[], &vars, &domain, 100_000).unwrap();
        assert!(!report.ok);

        // initial states are rejected outright
        let err = check_1aware(&p, &vars.clone(), &vars, &domain, 100_000).unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidQ1(_)));
    }
}
