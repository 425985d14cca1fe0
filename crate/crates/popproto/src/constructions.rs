//! Builders for the concrete protocol families: threshold (flock) protocols
//! in unary and binary encoding, majority with leaders, single linear
//! inequalities and systems of linear inequalities. Every builder embeds a
//! size certificate and its theorem bound in the protocol's `meta`.
//!
//! State naming is stable so interchange files are reproducible: threshold
//! protocols use decimal value names, linear protocols use `x{i}` for
//! variables, `p{i}` / `m{i}` for `±2^i` (`p{i}.{row}.{flag}` / `m{i}.{row}`
//! in the system case) and `z+`/`z-`/`z0`/`z1` for reservoir states.

use serde_json::{json, Value};
use thiserror::Error;

use crate::protocol::{Protocol, ProtocolBuilder};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid construction parameter: {0}")]
    BadParameter(String),

    #[error(transparent)]
    Core(#[from] crate::CoreError),
}

/// `size(n)`: number of bits of the binary representation, `⌊log n⌋ + 1`.
pub fn size_bits(v: u64) -> u32 {
    if v == 0 {
        0
    } else {
        64 - v.leading_zeros()
    }
}

/// Indices of the set bits of `v`, ascending. `bits(13) = {0, 2, 3}`.
pub fn bits(v: u64) -> Vec<u32> {
    (0..64).filter(|&i| v & (1 << i) != 0).collect()
}

/// Smallest `t` with `2^t ≥ v`.
fn ceil_log2(v: u64) -> u32 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}

fn embed_certificate(p: &mut Protocol, bounds: Value) {
    let cert = json!({
        "states": p.num_states(),
        "transitions": p.transitions().len(),
        "leaders": p.leaders().size(),
        "max_arity": p.max_arity(),
    });
    p.meta_mut().insert("certificate".to_owned(), cert);
    p.meta_mut().insert("bounds".to_owned(), bounds);
}

/// The unary threshold protocol for `x ≥ n`: agents sum their values,
/// capping at `n`, and an agent that reaches `n` attracts all others.
/// `n + 1` states, leaderless.
pub fn flock_standard(n: u64) -> Result<Protocol, BuildError> {
    if n == 0 {
        return Err(BuildError::BadParameter(
            "threshold 0 is trivially true; use n = 1".to_owned(),
        ));
    }
    let name = |v: u64| v.to_string();
    let mut b = ProtocolBuilder::new();
    for v in 0..=n {
        b.state(name(v));
        b.output(name(v), v == n);
    }
    b.initial(name(1));
    // sum transitions; a summand of 0 or a capped pair with itself is silent
    for a in 1..n {
        for c in a..n {
            b.transition(&[name(a), name(c)], &[name(0), name((a + c).min(n))]);
        }
    }
    // attraction to the threshold state
    for a in 0..n {
        b.transition(&[name(a), name(n)], &[name(n), name(n)]);
    }
    b.meta("construction", json!("flock-standard"));
    b.meta("params", json!({ "n": n }));
    b.meta("input_states", json!([name(1)]));
    let mut p = b.build()?;
    embed_certificate(&mut p, json!({ "states": n + 1 }));
    Ok(p)
}

/// The binary-counting threshold protocol for `x ≥ n`: agents hold powers
/// of two, merge equal powers upward (reversibly), collect the bits of `n`
/// into a dedicated threshold state, and attract once it appears.
/// `size(n) + 3` states pre-lowering; at most `4⌊log n⌋ + 7` after lowering.
///
/// When `n` is a power of two the bit-collection step would be unary, so
/// the top power state is identified with the threshold state instead. For
/// `n = 1` the protocol degenerates to a single always-accepting state.
pub fn flock_binary(n: u64) -> Result<Protocol, BuildError> {
    if n == 0 {
        return Err(BuildError::BadParameter(
            "threshold 0 is trivially true; use n = 1".to_owned(),
        ));
    }
    let name = |v: u64| v.to_string();
    let bound = json!({ "states_2way": 4 * (size_bits(n) as u64 - 1) + 7 });

    let mut b = ProtocolBuilder::new();
    if n == 1 {
        b.state(name(1));
        b.initial(name(1));
        b.output(name(1), true);
        b.meta("construction", json!("flock-binary"));
        b.meta("params", json!({ "n": n }));
        b.meta("input_states", json!([name(1)]));
        let mut p = b.build()?;
        embed_certificate(&mut p, bound);
        return Ok(p);
    }

    let n_bits = bits(n);
    let power_of_two = n_bits.len() == 1;
    // top exponent that exists as a plain power state
    let top = if power_of_two {
        n_bits[0] // 2^top = n itself
    } else {
        size_bits(n)
    };
    b.state(name(0));
    b.output(name(0), false);
    for i in 0..=top {
        b.state(name(1 << i));
        b.output(name(1 << i), 1u64 << i == n);
    }
    if !power_of_two {
        b.state(name(n));
        b.output(name(n), true);
    }
    b.initial(name(1));

    // doubling moves and their inverses keep the represented value intact
    for i in 0..top {
        b.transition(&[name(1 << i), name(1 << i)], &[name(1 << (i + 1)), name(0)]);
        b.transition(&[name(1 << (i + 1)), name(0)], &[name(1 << i), name(1 << i)]);
    }
    if !power_of_two {
        let pre: Vec<String> = n_bits.iter().map(|&i| name(1 << i)).collect();
        let mut post = vec![name(n)];
        post.extend(std::iter::repeat(name(0)).take(n_bits.len() - 1));
        b.transition(&pre, &post);
    }
    // attraction once the threshold state is populated
    let all_states: Vec<u64> = {
        let mut v: Vec<u64> = (0..=top).map(|i| 1 << i).collect();
        v.push(0);
        if !power_of_two {
            v.push(n);
        }
        v
    };
    for &q in &all_states {
        if q != n {
            b.transition(&[name(n), name(q)], &[name(n), name(n)]);
        }
    }

    b.meta("construction", json!("flock-binary"));
    b.meta("params", json!({ "n": n }));
    b.meta("input_states", json!([name(1)]));
    let mut p = b.build()?;
    embed_certificate(&mut p, bound);
    Ok(p)
}

/// The 4-state majority protocol with `n` leaders in state `y`, computing
/// `x ≥ n`. Active `x`/`y` agents knock each other out; survivors convert
/// the passive agents to their side, with passive `x` beating passive `y`.
pub fn majority_leaders(n: u64) -> Result<Protocol, BuildError> {
    if n == 0 {
        return Err(BuildError::BadParameter(
            "majority threshold needs at least one leader".to_owned(),
        ));
    }
    let mut b = ProtocolBuilder::new();
    for (q, out) in [("x", true), ("y", false), ("xbar", true), ("ybar", false)] {
        b.state(q);
        b.output(q, out);
    }
    b.initial("x");
    b.leader("y", n);
    b.transition(&["x", "y"], &["xbar", "ybar"]);
    b.transition(&["x", "ybar"], &["x", "xbar"]);
    b.transition(&["y", "xbar"], &["y", "ybar"]);
    b.transition(&["xbar", "ybar"], &["xbar", "xbar"]);
    b.meta("construction", json!("majority"));
    b.meta("params", json!({ "n": n }));
    b.meta("input_states", json!(["x"]));
    let mut p = b.build()?;
    embed_certificate(&mut p, json!({ "states": 4, "leaders": n }));
    Ok(p)
}

/// Where a binary representation lives: the single-inequality state space
/// or one row of a system.
#[derive(Clone, Copy, Debug)]
pub enum RepContext {
    Single { n: u32 },
    SystemRow { row: usize, n: u32 },
}

/// `rep(z)`: the multiset of signed power-of-two states representing `z`,
/// as a list of state names (`⟨z-⟩` resp. `⟨z0⟩` for zero).
pub fn rep(z: i64, ctx: RepContext) -> Result<Vec<String>, BuildError> {
    let (n, suffix, zero) = match ctx {
        RepContext::Single { n } => (n, String::new(), "z-".to_owned()),
        RepContext::SystemRow { row, n } => (n, format!(".{row}"), "z0".to_owned()),
    };
    let magnitude = z.unsigned_abs();
    if size_bits(magnitude) > n {
        return Err(BuildError::BadParameter(format!(
            "coefficient {z} out of range for {n}-bit representation"
        )));
    }
    if z == 0 {
        return Ok(vec![zero]);
    }
    let copy = match ctx {
        RepContext::Single { .. } => String::new(),
        RepContext::SystemRow { .. } => ".0".to_owned(),
    };
    let sign = if z > 0 { "p" } else { "m" };
    Ok(bits(magnitude)
        .into_iter()
        .map(|i| {
            if z > 0 {
                format!("{sign}{i}{suffix}{copy}")
            } else {
                format!("{sign}{i}{suffix}")
            }
        })
        .collect())
}

/// Protocol for `Σ a_i·x_i + c > 0`.
///
/// Variable agents convert into the binary representation of their
/// coefficient, padded from a reservoir of zero-valued leader agents;
/// opposite powers cancel, representations renormalize reversibly, and the
/// surviving sign signals the consensus. `k + 2n + 4` states and at most
/// `5n + 2` leaders, with `n` the bit size of the largest coefficient;
/// at most `10kn` states after lowering to 2-way.
pub fn linear_inequality(a: &[i64], c: i64) -> Result<Protocol, BuildError> {
    if a.is_empty() {
        return Err(BuildError::BadParameter(
            "at least one coefficient is required".to_owned(),
        ));
    }
    let n = size_bits(
        a.iter()
            .map(|v| v.unsigned_abs())
            .chain([c.unsigned_abs(), 1])
            .max()
            .unwrap(),
    );
    let k = a.len();
    let ctx = RepContext::Single { n };

    let mut b = ProtocolBuilder::new();
    let var = |i: usize| format!("x{}", i + 1);
    let plus = |i: u32| format!("p{i}");
    let minus = |i: u32| format!("m{i}");
    for i in 0..k {
        b.state(var(i));
        b.output(var(i), false);
        b.initial(var(i));
    }
    for i in 0..=n {
        b.state(plus(i));
        b.output(plus(i), true);
        b.state(minus(i));
        b.output(minus(i), false);
    }
    b.state("z+");
    b.output("z+", true);
    b.state("z-");
    b.output("z-", false);

    for name in rep(c, ctx)? {
        b.leader(name, 1);
    }
    b.leader("z-", 4 * n as u64 + 2);

    let reservoir = ["z+", "z-"];
    // convert a variable agent into its coefficient's representation
    for (i, &coeff) in a.iter().enumerate() {
        let rep_states = rep(coeff, ctx)?;
        let arity = rep_states.len().max(2);
        for r in reservoir {
            let mut pre = vec![var(i)];
            pre.extend(std::iter::repeat(r.to_owned()).take(arity - 1));
            let mut post = rep_states.clone();
            post.extend(std::iter::repeat(r.to_owned()).take(arity - rep_states.len()));
            b.transition(&pre, &post);
        }
    }
    for i in 0..=n {
        b.transition(&[plus(i), minus(i)], &["z+".into(), "z-".into()]);
        b.transition(&[plus(i), "z-".into()], &[plus(i), "z+".into()]);
        b.transition(&[minus(i), "z+".into()], &[minus(i), "z-".into()]);
    }
    b.transition(&["z-", "z+"], &["z-", "z-"]);
    for i in 0..n {
        b.transition(&[plus(i), plus(i)], &[plus(i + 1), "z+".into()]);
        b.transition(&[minus(i), minus(i)], &[minus(i + 1), "z-".into()]);
        for r in reservoir {
            b.transition(&[plus(i + 1), r.to_owned()], &[plus(i), plus(i)]);
            b.transition(&[minus(i + 1), r.to_owned()], &[minus(i), minus(i)]);
        }
    }

    b.meta("construction", json!("linear"));
    b.meta("params", json!({ "a": a, "c": c }));
    b.meta("n", json!(n));
    b.meta("input_states", json!((0..k).map(var).collect::<Vec<_>>()));
    let mut p = b.build()?;
    embed_certificate(
        &mut p,
        json!({
            "states_2way": 10 * k as u64 * n as u64,
            "leaders": 5 * n as u64 + 2,
        }),
    );
    Ok(p)
}

/// A system `A·x + c > 0` of `m` strict inequalities over `k` variables.
/// Construct via [`LinearSystem::new`], which rejects ragged input.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    matrix: Vec<Vec<i64>>,
    constants: Vec<i64>,
}

impl LinearSystem {
    pub fn new(matrix: Vec<Vec<i64>>, constants: Vec<i64>) -> Result<Self, BuildError> {
        let m = matrix.len();
        if m == 0 || matrix[0].is_empty() {
            return Err(BuildError::BadParameter(
                "the system needs at least one row and one variable".to_owned(),
            ));
        }
        let k = matrix[0].len();
        if matrix.iter().any(|row| row.len() != k) {
            return Err(BuildError::BadParameter("ragged matrix".to_owned()));
        }
        if constants.len() != m {
            return Err(BuildError::BadParameter(format!(
                "expected {m} constants, got {}",
                constants.len()
            )));
        }
        Ok(LinearSystem { matrix, constants })
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix[0].len()
    }

    /// Largest absolute entry in the matrix or constant vector, at least 1.
    pub fn b_max(&self) -> u64 {
        self.matrix
            .iter()
            .flatten()
            .chain(&self.constants)
            .map(|v| v.unsigned_abs())
            .chain([1])
            .max()
            .unwrap()
    }

    /// Bit size of `b_max`; the `n` the theorem bounds are stated in.
    pub fn entry_size(&self) -> u32 {
        size_bits(self.b_max())
    }

    /// Top exponent of the per-row counters: `⌈log 2m²⌉ + size(b_max)`.
    /// Guarantees `2^top > 2m²·b_max`, so a top-power agent outweighs any
    /// value the variables can still contribute to a single row.
    pub fn top_exponent(&self) -> u32 {
        let m = self.rows() as u64;
        ceil_log2(2 * m * m) + self.entry_size()
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn constants(&self) -> &[i64] {
        &self.constants
    }
}

/// Protocol for the conjunction `A·x + c > 0`.
///
/// One counter sub-space per row, sharing a two-state reservoir. Positive
/// power states carry a boolean conviction flag; the `(m+1)`-way `true`
/// transition needs a zero-bit agent of every row simultaneously, which is
/// only possible when every row's value is positive. At most
/// `27(log m + n)(m + k)` states post-lowering and `14m(log m + n)` leaders.
pub fn linear_system(sys: &LinearSystem) -> Result<Protocol, BuildError> {
    let m = sys.rows();
    let k = sys.cols();
    let ell = sys.top_exponent();

    let mut b = ProtocolBuilder::new();
    let var = |j: usize| format!("x{}", j + 1);
    let plus = |i: u32, row: usize, flag: u8| format!("p{i}.{row}.{flag}");
    let minus = |i: u32, row: usize| format!("m{i}.{row}");
    for j in 0..k {
        b.state(var(j));
        b.output(var(j), false);
        b.initial(var(j));
    }
    for row in 1..=m {
        for i in 0..=ell {
            b.state(plus(i, row, 0));
            b.output(plus(i, row, 0), false);
            b.state(plus(i, row, 1));
            b.output(plus(i, row, 1), true);
            b.state(minus(i, row));
            b.output(minus(i, row), false);
        }
    }
    b.state("z0");
    b.output("z0", false);
    b.state("z1");
    b.output("z1", true);

    for (idx, &cv) in sys.constants.iter().enumerate() {
        for name in rep(cv, RepContext::SystemRow { row: idx + 1, n: ell })? {
            b.leader(name, 1);
        }
    }
    b.leader("z0", 5 * m as u64 * ell as u64 + 1);

    let zflag = |f: u8| format!("z{f}");
    for row in 1..=m {
        for i in 0..ell {
            for alpha in 0..=1u8 {
                for beta in alpha..=1u8 {
                    let conj = alpha & beta;
                    b.transition(
                        &[plus(i, row, alpha), plus(i, row, beta)],
                        &[plus(i + 1, row, conj), zflag(conj)],
                    );
                }
                for beta in 0..=1u8 {
                    let conj = alpha & beta;
                    b.transition(
                        &[plus(i + 1, row, alpha), zflag(beta)],
                        &[plus(i, row, conj), plus(i, row, conj)],
                    );
                }
            }
            b.transition(
                &[minus(i, row), minus(i, row)],
                &[minus(i + 1, row), zflag(0)],
            );
            for alpha in 0..=1u8 {
                b.transition(
                    &[minus(i + 1, row), zflag(alpha)],
                    &[minus(i, row), minus(i, row)],
                );
            }
        }
        for i in 0..=ell {
            for alpha in 0..=1u8 {
                b.transition(
                    &[plus(i, row, alpha), minus(i, row)],
                    &[zflag(alpha), zflag(0)],
                );
            }
            b.transition(
                &[zflag(0), plus(i, row, 1)],
                &[zflag(0), plus(i, row, 0)],
            );
            b.transition(&[minus(i, row), zflag(1)], &[minus(i, row), zflag(0)]);
            b.transition(&[zflag(1), plus(i, row, 0)], &[zflag(1), plus(i, row, 1)]);
        }
    }
    b.transition(&["z0", "z1"], &["z0", "z0"]);
    // the conjunction witness: a zero-bit 0-copy of every row at once
    let mut pre: Vec<String> = (1..=m).map(|row| plus(0, row, 0)).collect();
    pre.push(zflag(0));
    let mut post: Vec<String> = (1..=m).map(|row| plus(0, row, 1)).collect();
    post.push(zflag(1));
    b.transition(&pre, &post);

    // variable conversion produces the whole column across all rows
    for j in 0..k {
        let mut column = Vec::new();
        for row in 1..=m {
            column.extend(rep(
                sys.matrix[row - 1][j],
                RepContext::SystemRow { row, n: ell },
            )?);
        }
        let arity = column.len().max(2);
        for alpha in 0..=1u8 {
            let mut pre = vec![var(j)];
            pre.extend(std::iter::repeat(zflag(alpha)).take(arity - 1));
            let mut post = column.clone();
            post.extend(std::iter::repeat(zflag(alpha)).take(arity - column.len()));
            b.transition(&pre, &post);
        }
    }

    let logm = (m as f64).log2();
    let nsize = sys.entry_size() as f64;
    b.meta("construction", json!("system"));
    b.meta(
        "params",
        json!({ "matrix": sys.matrix, "c": sys.constants }),
    );
    b.meta("n", json!(sys.entry_size()));
    b.meta("top_exponent", json!(ell));
    b.meta("b_max", json!(sys.b_max()));
    b.meta("input_states", json!((0..k).map(var).collect::<Vec<_>>()));
    let mut p = b.build()?;
    embed_certificate(
        &mut p,
        json!({
            "states_2way": 27.0 * (logm + nsize) * (m + k) as f64,
            "leaders": 14.0 * m as f64 * (logm + nsize),
        }),
    );
    Ok(p)
}
