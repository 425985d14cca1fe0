//! Ground-truth predicate expressions and input ranges for the check
//! harness. Expressions are conjunctions of linear atoms over named input
//! variables (`"x - y > 0"`, `"x>=3 && y>=1"`), evaluated on concrete
//! inputs only.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("unexpected character `{0}` in expression")]
    BadToken(char),

    #[error("expected {0}")]
    Expected(&'static str),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("empty range for variable `{0}`")]
    EmptyRange(String),

    #[error("malformed range `{0}`; expected var=lo..hi")]
    BadRange(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

/// One linear atom `Σ coeff·var ⋈ constant`.
#[derive(Clone, Debug)]
pub struct Atom {
    pub terms: Vec<(String, i64)>,
    pub cmp: Cmp,
    pub rhs: i64,
}

/// A conjunction of linear atoms.
#[derive(Clone, Debug)]
pub struct Predicate {
    pub atoms: Vec<Atom>,
    source: String,
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Token {
    Num(i64),
    Ident(usize), // interned in Parser::idents
    Plus,
    Minus,
    Star,
    Cmp(Cmp),
    And,
}

struct Tokenizer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    idents: Vec<String>,
}

impl<'a> Tokenizer<'a> {
    fn tokenize(input: &'a str) -> Result<(Vec<Token>, Vec<String>), ParseError> {
        let mut t = Tokenizer {
            chars: input.chars().peekable(),
            idents: Vec::new(),
        };
        let mut tokens = Vec::new();
        while let Some(&ch) = t.chars.peek() {
            match ch {
                ' ' | '\t' => {
                    t.chars.next();
                }
                '0'..='9' => {
                    let mut value = 0i64;
                    while let Some(d) = t.chars.peek().and_then(|c| c.to_digit(10)) {
                        value = value * 10 + d as i64;
                        t.chars.next();
                    }
                    tokens.push(Token::Num(value));
                }
                '+' => {
                    t.chars.next();
                    tokens.push(Token::Plus);
                }
                '-' => {
                    t.chars.next();
                    tokens.push(Token::Minus);
                }
                '*' => {
                    t.chars.next();
                    tokens.push(Token::Star);
                }
                '>' => {
                    t.chars.next();
                    if t.chars.peek() == Some(&'=') {
                        t.chars.next();
                        tokens.push(Token::Cmp(Cmp::Ge));
                    } else {
                        tokens.push(Token::Cmp(Cmp::Gt));
                    }
                }
                '<' => {
                    t.chars.next();
                    if t.chars.peek() == Some(&'=') {
                        t.chars.next();
                        tokens.push(Token::Cmp(Cmp::Le));
                    } else {
                        tokens.push(Token::Cmp(Cmp::Lt));
                    }
                }
                '=' => {
                    t.chars.next();
                    if t.chars.peek() == Some(&'=') {
                        t.chars.next();
                    }
                    tokens.push(Token::Cmp(Cmp::Eq));
                }
                '&' => {
                    t.chars.next();
                    if t.chars.peek() == Some(&'&') {
                        t.chars.next();
                    }
                    tokens.push(Token::And);
                }
                '∧' => {
                    t.chars.next();
                    tokens.push(Token::And);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(&c) = t.chars.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            name.push(c);
                            t.chars.next();
                        } else {
                            break;
                        }
                    }
                    if name == "and" {
                        tokens.push(Token::And);
                    } else {
                        let id = t
                            .idents
                            .iter()
                            .position(|n| *n == name)
                            .unwrap_or_else(|| {
                                t.idents.push(name.clone());
                                t.idents.len() - 1
                            });
                        tokens.push(Token::Ident(id));
                    }
                }
                other => return Err(ParseError::BadToken(other)),
            }
        }
        Ok((tokens, t.idents))
    }
}

impl Predicate {
    pub fn parse(input: &str) -> Result<Predicate, ParseError> {
        let (tokens, idents) = Tokenizer::tokenize(input)?;
        let mut pos = 0;
        let mut atoms = Vec::new();
        loop {
            let atom = parse_atom(&tokens, &mut pos, &idents)?;
            atoms.push(atom);
            match tokens.get(pos) {
                Some(Token::And) => pos += 1,
                None => break,
                _ => return Err(ParseError::Expected("`&&` or end of expression")),
            }
        }
        Ok(Predicate {
            atoms,
            source: input.to_owned(),
        })
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = self
            .atoms
            .iter()
            .flat_map(|a| a.terms.iter().map(|(v, _)| v.as_str()))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Evaluates on a concrete input; errors if a variable is unbound.
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<bool, ParseError> {
        for atom in &self.atoms {
            let mut lhs = 0i64;
            for (var, coeff) in &atom.terms {
                let value = env
                    .get(var)
                    .ok_or_else(|| ParseError::UnknownVariable(var.clone()))?;
                lhs += coeff * value;
            }
            let holds = match atom.cmp {
                Cmp::Ge => lhs >= atom.rhs,
                Cmp::Gt => lhs > atom.rhs,
                Cmp::Le => lhs <= atom.rhs,
                Cmp::Lt => lhs < atom.rhs,
                Cmp::Eq => lhs == atom.rhs,
            };
            if !holds {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Parses `linear cmp linear` and normalizes to `terms cmp constant`.
fn parse_atom(tokens: &[Token], pos: &mut usize, idents: &[String]) -> Result<Atom, ParseError> {
    let (mut terms, lconst) = parse_linear(tokens, pos, idents)?;
    let cmp = match tokens.get(*pos) {
        Some(&Token::Cmp(c)) => {
            *pos += 1;
            c
        }
        _ => return Err(ParseError::Expected("a comparison operator")),
    };
    let (rterms, rconst) = parse_linear(tokens, pos, idents)?;
    for (var, coeff) in rterms {
        match terms.iter_mut().find(|(v, _)| *v == var) {
            Some((_, c)) => *c -= coeff,
            None => terms.push((var, -coeff)),
        }
    }
    terms.retain(|&(_, c)| c != 0);
    Ok(Atom {
        terms,
        cmp,
        rhs: rconst - lconst,
    })
}

/// Parses a sum of terms (`2x`, `3*y`, bare numbers, unary minus) and
/// returns the variable terms plus the constant part.
fn parse_linear(
    tokens: &[Token],
    pos: &mut usize,
    idents: &[String],
) -> Result<(Vec<(String, i64)>, i64), ParseError> {
    let mut terms: Vec<(String, i64)> = Vec::new();
    let mut constant = 0i64;
    let mut first = true;
    loop {
        let mut sign = 1i64;
        let mut saw_sign = false;
        while let Some(tok) = tokens.get(*pos) {
            match tok {
                Token::Plus => {
                    *pos += 1;
                    saw_sign = true;
                }
                Token::Minus => {
                    *pos += 1;
                    sign = -sign;
                    saw_sign = true;
                }
                _ => break,
            }
        }
        if !first && !saw_sign {
            break;
        }
        match tokens.get(*pos) {
            Some(&Token::Num(n)) => {
                *pos += 1;
                if let Some(Token::Star) = tokens.get(*pos) {
                    *pos += 1;
                }
                match tokens.get(*pos) {
                    Some(&Token::Ident(id)) => {
                        *pos += 1;
                        push_term(&mut terms, &idents[id], sign * n);
                    }
                    _ => constant += sign * n,
                }
            }
            Some(&Token::Ident(id)) => {
                *pos += 1;
                push_term(&mut terms, &idents[id], sign);
            }
            _ => return Err(ParseError::Expected("a term")),
        }
        first = false;
    }
    Ok((terms, constant))
}

fn push_term(terms: &mut Vec<(String, i64)>, var: &str, coeff: i64) {
    match terms.iter_mut().find(|(v, _)| v == var) {
        Some((_, c)) => *c += coeff,
        None => terms.push((var.to_owned(), coeff)),
    }
}

/// Per-variable inclusive integer ranges, expanded to a Cartesian product
/// in declaration order. Syntax: `x=1..6` or `x=0..3,y=0..3`.
#[derive(Clone, Debug)]
pub struct InputRanges {
    pub vars: Vec<(String, u64, u64)>,
}

impl InputRanges {
    pub fn parse(input: &str) -> Result<InputRanges, ParseError> {
        let mut vars = Vec::new();
        for part in input.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (name, range) = part
                .split_once('=')
                .ok_or_else(|| ParseError::BadRange(part.to_owned()))?;
            let name = name.trim().to_owned();
            let (lo, hi) = match range.split_once("..") {
                Some((lo, hi)) => {
                    let lo = lo.trim().parse::<u64>().map_err(|_| ParseError::BadRange(part.to_owned()))?;
                    let hi = hi.trim().parse::<u64>().map_err(|_| ParseError::BadRange(part.to_owned()))?;
                    (lo, hi)
                }
                None => {
                    let v = range.trim().parse::<u64>().map_err(|_| ParseError::BadRange(part.to_owned()))?;
                    (v, v)
                }
            };
            if lo > hi {
                return Err(ParseError::EmptyRange(name));
            }
            vars.push((name, lo, hi));
        }
        if vars.is_empty() {
            return Err(ParseError::Expected("at least one variable range"));
        }
        Ok(InputRanges { vars })
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|(n, _, _)| n.clone()).collect()
    }

    /// All input vectors in the box, last variable fastest.
    pub fn expand(&self) -> Vec<Vec<u64>> {
        let mut out: Vec<Vec<u64>> = vec![Vec::new()];
        for (_, lo, hi) in &self.vars {
            let mut next = Vec::with_capacity(out.len() * (*hi - *lo + 1) as usize);
            for prefix in &out {
                for v in *lo..=*hi {
                    let mut row = prefix.clone();
                    row.push(v);
                    next.push(row);
                }
            }
            out = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
        pairs.iter().map(|&(k, v)| (k.to_owned(), v)).collect()
    }

    #[test]
    fn threshold_atom() {
        let p = Predicate::parse("x>=3").unwrap();
        assert!(!p.eval(&env(&[("x", 2)])).unwrap());
        assert!(p.eval(&env(&[("x", 3)])).unwrap());
    }

    #[test]
    fn difference_atom() {
        let p = Predicate::parse("x - y > 0").unwrap();
        assert!(p.eval(&env(&[("x", 3), ("y", 2)])).unwrap());
        assert!(!p.eval(&env(&[("x", 2), ("y", 2)])).unwrap());
    }

    #[test]
    fn coefficients_and_conjunction() {
        let p = Predicate::parse("2x - 3*y > 0 && x >= 1").unwrap();
        assert!(p.eval(&env(&[("x", 2), ("y", 1)])).unwrap());
        assert!(!p.eval(&env(&[("x", 2), ("y", 2)])).unwrap());
        assert_eq!(p.variables(), vec!["x", "y"]);
        let q = Predicate::parse("x>=1 ∧ y>=1").unwrap();
        assert!(!q.eval(&env(&[("x", 1), ("y", 0)])).unwrap());
    }

    #[test]
    fn constants_move_to_the_right_side() {
        let p = Predicate::parse("x + 1 > 2y - 3").unwrap();
        // x + 1 > 2y - 3  ⇔  x - 2y > -4
        assert!(p.eval(&env(&[("x", 0), ("y", 1)])).unwrap());
        assert!(!p.eval(&env(&[("x", 0), ("y", 2)])).unwrap());
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let p = Predicate::parse("x>=1").unwrap();
        assert_eq!(
            p.eval(&env(&[("y", 1)])),
            Err(ParseError::UnknownVariable("x".to_owned()))
        );
    }

    #[test]
    fn parse_errors() {
        assert!(Predicate::parse("x ! y").is_err());
        assert!(Predicate::parse("x >=").is_err());
        assert!(Predicate::parse("x >= 1 &&").is_err());
    }

    #[test]
    fn ranges_expand_in_declaration_order() {
        let r = InputRanges::parse("x=1..2,y=5..6").unwrap();
        assert_eq!(
            r.expand(),
            vec![vec![1, 5], vec![1, 6], vec![2, 5], vec![2, 6]]
        );
        assert_eq!(r.names(), vec!["x", "y"]);
        assert!(InputRanges::parse("x=3..1").is_err());
        assert!(InputRanges::parse("").is_err());
        let single = InputRanges::parse("x=4").unwrap();
        assert_eq!(single.expand(), vec![vec![4]]);
    }
}
