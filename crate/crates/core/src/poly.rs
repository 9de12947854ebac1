//! Multilinear phase polynomials over boolean variables.
//!
//! A polynomial is a sum of clauses `theta * x_{i1} * ... * x_{id}` with real
//! coefficients in radians, plus a constant phase. Evaluating at a boolean
//! assignment yields the total phase; the brute-force [`Polynomial::exp_sum`]
//! sums `e^{i f(x)}` over the whole hypercube and serves as the reference
//! oracle for the graph encoding.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::caps;
use crate::error::{Error, Result};

/// One monomial `theta * prod_{i in vars} x_i`.
///
/// `vars` is strictly increasing and `theta` is stored in `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    theta: f64,
    vars: Vec<usize>,
}

impl Clause {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    /// Clause degree (number of variables).
    pub fn degree(&self) -> usize {
        self.vars.len()
    }
}

/// Canonical multilinear polynomial: no duplicate variable sets, no zero
/// coefficients, degree-0 terms folded into `constant_phase`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    clauses: Vec<Clause>,
    constant_phase: f64,
}

/// Reduce an angle to `[0, 2*pi)`.
fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t >= TAU {
        t -= TAU;
    }
    t
}

impl Polynomial {
    /// Builds a polynomial in canonical form from raw `(theta, vars)` pairs.
    ///
    /// Repeated variables inside one clause collapse (`x*x = x` over booleans),
    /// clauses with identical variable sets merge by summing coefficients mod
    /// `2*pi`, zero clauses are dropped and empty clauses accumulate into the
    /// constant phase.
    pub fn new(
        num_vars: usize,
        raw_clauses: impl IntoIterator<Item = (f64, Vec<usize>)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut constant = 0.0f64;
        for (theta, mut vars) in raw_clauses {
            if let Some(&v) = vars.iter().find(|&&v| v >= num_vars) {
                return Err(Error::domain(format!(
                    "clause variable {v} out of range for {num_vars} variables"
                )));
            }
            vars.sort_unstable();
            vars.dedup();
            if vars.is_empty() {
                constant += theta;
            } else {
                *merged.entry(vars).or_insert(0.0) += theta;
            }
        }
        let clauses = merged
            .into_iter()
            .filter_map(|(vars, theta)| {
                let theta = wrap_angle(theta);
                (theta != 0.0).then_some(Clause { theta, vars })
            })
            .collect();
        Ok(Polynomial {
            num_vars,
            clauses,
            constant_phase: wrap_angle(constant),
        })
    }

    /// The zero polynomial over `num_vars` variables.
    pub fn empty(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            clauses: Vec::new(),
            constant_phase: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn constant_phase(&self) -> f64 {
        self.constant_phase
    }

    /// Largest clause degree, 0 for a constant polynomial.
    pub fn max_degree(&self) -> usize {
        self.clauses.iter().map(Clause::degree).max().unwrap_or(0)
    }

    /// Variables that occur in at least one clause, ascending.
    pub fn occurring_vars(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_vars];
        for c in &self.clauses {
            for &v in &c.vars {
                seen[v] = true;
            }
        }
        (0..self.num_vars).filter(|&v| seen[v]).collect()
    }

    /// Evaluates the phase at a boolean assignment (plain real arithmetic,
    /// not reduced mod `2*pi`).
    pub fn evaluate(&self, assignment: &[bool]) -> Result<f64> {
        if assignment.len() != self.num_vars {
            return Err(Error::domain(format!(
                "assignment length {} does not match {} variables",
                assignment.len(),
                self.num_vars
            )));
        }
        let mut phase = self.constant_phase;
        for c in &self.clauses {
            if c.vars.iter().all(|&v| assignment[v]) {
                phase += c.theta;
            }
        }
        Ok(phase)
    }

    /// Brute-force exponential sum `sum_x e^{i f(x)}` over all `2^n`
    /// assignments. This is the reference oracle the graph encoding is
    /// checked against.
    ///
    /// Fails with a resource error above the brute-force cap
    /// (24 variables by default, `PERMSUM_MAX_N` overrides).
    pub fn exp_sum(&self) -> Result<Complex64> {
        let cap = caps::brute_force_cap();
        if self.num_vars > cap {
            return Err(Error::resource(format!(
                "exp_sum over {} variables exceeds cap {}",
                self.num_vars, cap
            )));
        }
        let masks: Vec<(u64, f64)> = self
            .clauses
            .iter()
            .map(|c| {
                let mask = c.vars.iter().fold(0u64, |m, &v| m | (1u64 << v));
                (mask, c.theta)
            })
            .collect();
        let mut sum = Complex64::new(0.0, 0.0);
        for x in 0u64..(1u64 << self.num_vars) {
            let mut phase = self.constant_phase;
            for &(mask, theta) in &masks {
                if x & mask == mask {
                    phase += theta;
                }
            }
            sum += Complex64::from_polar(1.0, phase);
        }
        Ok(sum)
    }

    /// Fixes some variables to constants and re-indexes the survivors
    /// densely, preserving their relative order.
    pub fn substitute(&self, fixed: &[(usize, bool)]) -> Result<Polynomial> {
        let mut assignment: Vec<Option<bool>> = vec![None; self.num_vars];
        for &(v, bit) in fixed {
            if v >= self.num_vars {
                return Err(Error::domain(format!(
                    "fixed variable {v} out of range for {} variables",
                    self.num_vars
                )));
            }
            if let Some(prev) = assignment[v] {
                if prev != bit {
                    return Err(Error::domain(format!("variable {v} fixed to both 0 and 1")));
                }
            }
            assignment[v] = Some(bit);
        }
        // dense re-indexing of the unfixed variables
        let mut remap: Vec<Option<usize>> = vec![None; self.num_vars];
        let mut next = 0;
        for v in 0..self.num_vars {
            if assignment[v].is_none() {
                remap[v] = Some(next);
                next += 1;
            }
        }
        let mut raw: Vec<(f64, Vec<usize>)> = vec![(self.constant_phase, Vec::new())];
        'clauses: for c in &self.clauses {
            let mut vars = Vec::with_capacity(c.vars.len());
            for &v in &c.vars {
                match assignment[v] {
                    Some(false) => continue 'clauses,
                    Some(true) => {}
                    None => vars.push(remap[v].unwrap()),
                }
            }
            raw.push((c.theta, vars));
        }
        Polynomial::new(next, raw)
    }

    /// Serializes to the `poly` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "poly n={}", self.num_vars);
        if self.constant_phase != 0.0 {
            let _ = writeln!(out, "{}", self.constant_phase);
        }
        for c in &self.clauses {
            let _ = write!(out, "{}", c.theta);
            for v in &c.vars {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `poly` text format:
    /// a `poly n=<int>` header, then one clause per line as
    /// `<theta_rad> <v1> [<v2> ...]`. A bare `<theta>` line adds to the
    /// constant phase; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Polynomial> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty polynomial file"))?;
        let num_vars = parse_header(header, "poly")?;
        let mut raw = Vec::new();
        for line in lines {
            let mut toks = line.split_whitespace();
            let theta: f64 = toks
                .next()
                .unwrap()
                .parse()
                .map_err(|e| Error::parse(format!("bad coefficient in {line:?}: {e}")))?;
            let vars = toks
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|e| Error::parse(format!("bad variable index in {line:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            raw.push((theta, vars));
        }
        Polynomial::new(num_vars, raw)
    }
}

/// Parses a `<kind> n=<int>`-style header (also used for `q=` circuit headers).
pub(crate) fn parse_header(line: &str, kind: &str) -> Result<usize> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(kind) {
        return Err(Error::parse(format!(
            "expected `{kind}` header, got {line:?}"
        )));
    }
    let kv = toks
        .next()
        .ok_or_else(|| Error::parse(format!("missing size in {kind} header")))?;
    let (_, value) = kv
        .split_once('=')
        .ok_or_else(|| Error::parse(format!("malformed {kind} header {line:?}")))?;
    value
        .parse()
        .map_err(|e| Error::parse(format!("bad size in {kind} header {line:?}: {e}")))
}
