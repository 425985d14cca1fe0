//! Randomized fair simulation for populations too large to explore.
//!
//! The scheduler generalizes the uniform-random-pair adversary to k-way
//! transitions: at each step an enabled non-silent transition is sampled
//! with probability proportional to the number of ordered agent tuples
//! matching its pre-list. If nothing non-silent is enabled the step is
//! silent and the configuration frozen. Random scheduling is almost surely
//! fair on a finite reachable space, so declared outcomes are strong
//! evidence, never proofs; exact answers come from `analysis`.
//!
//! Randomness comes from SplitMix64, a 64-bit counter-based generator (the
//! state advances by the golden-ratio increment `0x9E3779B97F4A7C15` and is
//! finalized by two xor-multiply rounds), so traces are reproducible from a
//! seed alone. Trial `i` of a batch uses the derived seed `mix(seed + (i+1)
//! · 0x9E3779B97F4A7C15)`, making batches independent of scheduling order.

use std::fmt;

use serde::Serialize;

use crate::dense::Compiled;
use crate::multiset::Multiset;
use crate::par;
use crate::protocol::Protocol;
use crate::CoreError;

/// SplitMix64: counter-based, seedable, stable across platforms.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform value in `[0, n)`, unbiased via rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty sampling range");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    fn next_u128_below(&mut self, n: u128) -> u128 {
        assert!(n > 0, "empty sampling range");
        if n <= u64::MAX as u128 {
            return self.next_below(n as u64) as u128;
        }
        let zone = u128::MAX - (u128::MAX % n);
        loop {
            let v = ((self.next_u64() as u128) << 64) | self.next_u64() as u128;
            if v < zone {
                return v % n;
            }
        }
    }
}

/// Seed for trial `index` of a batch run.
pub fn derive_trial_seed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Stabilized0,
    Stabilized1,
    Undecided,
}

impl RunStatus {
    pub fn stabilized(self) -> Option<bool> {
        match self {
            RunStatus::Stabilized0 => Some(false),
            RunStatus::Stabilized1 => Some(true),
            RunStatus::Undecided => None,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunStatus::Stabilized0 => "stabilized-0",
            RunStatus::Stabilized1 => "stabilized-1",
            RunStatus::Undecided => "undecided",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// Non-silent steps taken before the run ended.
    pub steps: u64,
    pub seed: u64,
    /// Tail of the fired transitions, if recording was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub max_steps: u64,
    /// Consecutive consensus steps required before declaring stabilization.
    pub window: u64,
    pub record_trace: bool,
    pub trace_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_steps: 10_000_000,
            window: 1000,
            record_trace: false,
            trace_cap: 64,
        }
    }
}

/// One scheduler step: samples among enabled non-silent transitions with
/// probability proportional to their ordered-tuple instance counts. Returns
/// the protocol transition index fired (or `None` for a silent step) and
/// the successor configuration.
pub fn step_random(
    p: &Protocol,
    c: &Multiset,
    rng: &mut SplitMix64,
) -> Result<(Option<usize>, Multiset), CoreError> {
    let compiled = Compiled::new(p);
    let dense = compiled.to_dense(c)?;
    match sample_transition(&compiled, &dense, rng) {
        Some(k) => {
            let t = &compiled.transitions[k];
            let next = compiled.fire(t, &dense);
            Ok((Some(t.index), compiled.to_multiset(&next)))
        }
        None => Ok((None, c.clone())),
    }
}

/// Index into `compiled.transitions` of the sampled transition.
fn sample_transition(compiled: &Compiled, c: &[u32], rng: &mut SplitMix64) -> Option<usize> {
    let weights: Vec<u128> = compiled
        .transitions
        .iter()
        .map(|t| compiled.instances(t, c))
        .collect();
    let total: u128 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let mut pick = rng.next_u128_below(total);
    for (k, &w) in weights.iter().enumerate() {
        if pick < w {
            return Some(k);
        }
        pick -= w;
    }
    unreachable!("sampled value exceeds total weight")
}

/// No enabled transition can move an agent out of the `b`-output states.
/// This is a bounded local check, not a stability proof.
fn escape_possible(compiled: &Compiled, c: &[u32], b: bool) -> bool {
    compiled
        .transitions
        .iter()
        .any(|t| compiled.enabled(t, c) && !t.post_all[b as usize])
}

/// Runs the random scheduler from `c0` until stabilization is detected or
/// `max_steps` non-silent steps have fired.
///
/// Stabilization to `b` is declared once the last `window` steps all
/// produced `b`-consensus configurations and no enabled transition can
/// leave the `b`-output states; a frozen consensus configuration qualifies
/// immediately.
pub fn run(p: &Protocol, c0: &Multiset, cfg: &RunConfig, seed: u64) -> Result<RunOutcome, CoreError> {
    let compiled = Compiled::new(p);
    let dense = compiled.to_dense(c0)?;
    Ok(run_dense(p, &compiled, dense, cfg, seed))
}

fn run_dense(
    p: &Protocol,
    compiled: &Compiled,
    mut c: crate::dense::DenseConfig,
    cfg: &RunConfig,
    seed: u64,
) -> RunOutcome {
    let mut rng = SplitMix64::new(seed);
    let mut trace: Option<Vec<String>> = cfg.record_trace.then(Vec::new);
    let mut steps = 0u64;
    let mut consensus_run = 0u64;
    let mut consensus_value = false;

    loop {
        // Frozen configurations decide immediately: nothing non-silent can fire.
        let sampled = sample_transition(compiled, &c, &mut rng);
        let k = match sampled {
            Some(k) => k,
            None => {
                let status = match compiled.consensus(&c) {
                    Some(false) => RunStatus::Stabilized0,
                    Some(true) => RunStatus::Stabilized1,
                    None => RunStatus::Undecided,
                };
                return RunOutcome {
                    status,
                    steps,
                    seed,
                    trace,
                };
            }
        };
        if steps >= cfg.max_steps {
            return RunOutcome {
                status: RunStatus::Undecided,
                steps,
                seed,
                trace,
            };
        }
        let t = &compiled.transitions[k];
        c = compiled.fire(t, &c);
        steps += 1;
        if let Some(log) = trace.as_mut() {
            if log.len() == cfg.trace_cap {
                log.remove(0);
            }
            log.push(p.display_transition(&p.transitions()[t.index]));
        }

        match compiled.consensus(&c) {
            Some(b) if consensus_run > 0 && b == consensus_value => consensus_run += 1,
            Some(b) => {
                consensus_value = b;
                consensus_run = 1;
            }
            None => consensus_run = 0,
        }
        if consensus_run >= cfg.window && !escape_possible(compiled, &c, consensus_value) {
            let status = if consensus_value {
                RunStatus::Stabilized1
            } else {
                RunStatus::Stabilized0
            };
            return RunOutcome {
                status,
                steps,
                seed,
                trace,
            };
        }
    }
}

/// One simulated trial of a batch.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub input: Vec<u64>,
    pub trial: u64,
    pub seed: u64,
    pub status: RunStatus,
    pub steps: u64,
}

/// Aggregate statistics for one input.
#[derive(Clone, Debug, Serialize)]
pub struct InputSummary {
    pub input: Vec<u64>,
    pub trials: u64,
    pub stabilized0: u64,
    pub stabilized1: u64,
    pub undecided: u64,
    /// Mean steps over stabilized trials, if any.
    pub mean_steps: Option<f64>,
    pub median_steps: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateTable {
    pub rows: Vec<TrialRecord>,
    pub summaries: Vec<InputSummary>,
}

impl EstimateTable {
    /// Per-trial CSV: `(input…, trial, seed, status, steps)`.
    pub fn rows_csv(&self, variables: &[String]) -> String {
        let mut out = String::new();
        for var in variables {
            out.push_str(var);
            out.push(',');
        }
        out.push_str("trial,seed,status,steps\n");
        for r in &self.rows {
            for v in &r.input {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&format!("{},{},{},{}\n", r.trial, r.seed, r.status, r.steps));
        }
        out
    }

    /// Per-input CSV with stabilization fractions and step statistics.
    pub fn summary_csv(&self, variables: &[String]) -> String {
        let mut out = String::new();
        for var in variables {
            out.push_str(var);
            out.push(',');
        }
        out.push_str("trials,stabilized0,stabilized1,undecided,mean_steps,median_steps\n");
        for s in &self.summaries {
            for v in &s.input {
                out.push_str(&v.to_string());
                out.push(',');
            }
            let mean = s
                .mean_steps
                .map(|m| format!("{m:.2}"))
                .unwrap_or_default();
            let median = s.median_steps.map(|m| m.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.trials, s.stabilized0, s.stabilized1, s.undecided, mean, median
            ));
        }
        out
    }
}

/// Runs `trials` seeded trials per input. Trials execute independently (and
/// possibly concurrently) under derived seeds, so the table only depends on
/// `(protocol, domain, trials, cfg, seed)`.
pub fn estimate(
    p: &Protocol,
    input_states: &[crate::protocol::StateId],
    domain: &[Vec<u64>],
    trials: u64,
    cfg: &RunConfig,
    seed: u64,
) -> Result<EstimateTable, CoreError> {
    let compiled = Compiled::new(p);
    let mut jobs = Vec::new();
    for counts in domain {
        let root = p.initial_configuration_for(input_states, counts)?;
        let dense = compiled.to_dense(&root)?;
        for trial in 0..trials {
            jobs.push((counts.clone(), trial, dense.clone()));
        }
    }
    let rows: Vec<TrialRecord> = par::map_vec(&jobs, |(counts, trial, dense)| {
        let trial_seed = derive_trial_seed(seed, *trial);
        let outcome = run_dense(p, &compiled, dense.clone(), cfg, trial_seed);
        TrialRecord {
            input: counts.clone(),
            trial: *trial,
            seed: trial_seed,
            status: outcome.status,
            steps: outcome.steps,
        }
    });

    let mut summaries = Vec::new();
    for counts in domain {
        let mut stabilized0 = 0;
        let mut stabilized1 = 0;
        let mut undecided = 0;
        let mut stabilized_steps: Vec<u64> = Vec::new();
        for r in rows.iter().filter(|r| &r.input == counts) {
            match r.status {
                RunStatus::Stabilized0 => stabilized0 += 1,
                RunStatus::Stabilized1 => stabilized1 += 1,
                RunStatus::Undecided => undecided += 1,
            }
            if r.status != RunStatus::Undecided {
                stabilized_steps.push(r.steps);
            }
        }
        stabilized_steps.sort_unstable();
        let mean_steps = if stabilized_steps.is_empty() {
            None
        } else {
            Some(stabilized_steps.iter().sum::<u64>() as f64 / stabilized_steps.len() as f64)
        };
        let median_steps = if stabilized_steps.is_empty() {
            None
        } else {
            Some(stabilized_steps[stabilized_steps.len() / 2])
        };
        summaries.push(InputSummary {
            input: counts.clone(),
            trials,
            stabilized0,
            stabilized1,
            undecided,
            mean_steps,
            median_steps,
        });
    }
    Ok(EstimateTable { rows, summaries })
}
