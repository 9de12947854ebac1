//! Clause gadgets and their design constraints.
//!
//! A clause gadget is a small weighted digraph encoding one monomial
//! `theta * x_{i1}...x_{id}`: its first `d` vertices (the outer vertices)
//! attach to the variable cycles of the enclosing graph, the remaining `k`
//! inner vertices provide the degrees of freedom needed to cancel crossing
//! traversals. A gadget is valid when
//!
//! - for every assignment `s` of the clause variables, the permanent of the
//!   principal submatrix on the inner vertices plus the outer vertices with
//!   `s_i = 1` equals `e^{i theta}` if all `s_i = 1` and `1` otherwise, and
//! - for every ordered pair of distinct outer vertices `(x, y)` and every
//!   subset `o` of the remaining outer vertices, the partial cycle covers
//!   entering at `x`, leaving at `y` and covering exactly `o` inside the
//!   gadget sum to zero.
//!
//! [`generate_constraints`] writes those conditions as multilinear polynomial
//! equations over the `(d+k)^2` symbolic matrix entries (the zero conditions
//! via the row-replacement trick that turns crossing paths into cycles), and
//! [`verify_gadget`] evaluates the system on a concrete matrix.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::permanent::ComplexMatrix;

/// Symbolic constraint generation caps at this matrix order; the permanent
/// expansion has `(d+k)!` monomials.
pub const SYMBOLIC_ORDER_CAP: usize = 6;

/// A clause gadget: a `(d+k) x (d+k)` adjacency matrix whose rows/columns
/// `0..d` are outer vertices and the rest inner.
#[derive(Debug, Clone)]
pub struct Gadget {
    degree: usize,
    inner: usize,
    matrix: ComplexMatrix,
}

impl Gadget {
    pub fn new(degree: usize, inner: usize, matrix: ComplexMatrix) -> Result<Self> {
        if degree == 0 {
            return Err(Error::domain("gadget degree must be at least 1"));
        }
        if matrix.order() != degree + inner {
            return Err(Error::domain(format!(
                "gadget matrix order {} does not match degree {degree} + inner {inner}",
                matrix.order()
            )));
        }
        Ok(Gadget {
            degree,
            inner,
            matrix,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn inner_count(&self) -> usize {
        self.inner
    }

    pub fn order(&self) -> usize {
        self.degree + self.inner
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Outer vertex indices, `0..d`.
    pub fn outer_vertices(&self) -> std::ops::Range<usize> {
        0..self.degree
    }

    /// Inner vertex indices, `d..d+k`.
    pub fn inner_vertices(&self) -> std::ops::Range<usize> {
        self.degree..self.degree + self.inner
    }
}

fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `eta(theta) = (1/6) sqrt(3 (1+i) (1 - e^{i theta}))`, principal branch.
fn cubic_eta(theta: f64) -> Complex64 {
    ((Complex64::new(3.0, 3.0)) * (Complex64::new(1.0, 0.0) - phase(theta))).sqrt() / 6.0
}

/// The verified gadget for a clause of degree `d` (1, 2 or 3) with
/// coefficient `theta`. These matrices satisfy every constraint of
/// [`generate_constraints`] for all `theta`; see [`verify_gadget`].
pub fn gadget_matrix(degree: usize, theta: f64) -> Result<Gadget> {
    let e = phase(theta);
    match degree {
        1 => Gadget::new(1, 0, ComplexMatrix::from_rows(1, vec![e])?),
        2 => {
            let one = Complex64::new(1.0, 0.0);
            let rows = vec![
                (one + e) / 2.0,
                (e - one) / 2.0,
                (one - e) / 2.0,
                -one,
                Complex64::new(0.0, 0.0),
                one,
                one,
                one,
                one,
            ];
            Gadget::new(2, 1, ComplexMatrix::from_rows(3, rows)?)
        }
        3 => cubic_gadget(theta, false),
        d => Err(Error::unsupported(format!(
            "no gadget available for clause degree {d} (supported: 1, 2, 3)"
        ))),
    }
}

/// Cubic gadget variant whose `(4,0)` entry carries the radical
/// `-sqrt((1 - e^{i theta}) / (24 (1+i)))` instead of `-eta/sqrt(2)`; the two
/// differ by a factor `1+i` under the square root, which breaks the symmetry
/// of the corner pair. This variant fails the crossing-cancellation
/// constraints for most `theta` and is kept as a verification target; use
/// [`gadget_matrix`] for encoding.
pub fn cubic_gadget_radical_variant(theta: f64) -> Gadget {
    cubic_gadget(theta, true).expect("fixed-size construction cannot fail")
}

fn cubic_gadget(theta: f64, radical_corner: bool) -> Result<Gadget> {
    let e = phase(theta);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let eta = cubic_eta(theta);
    let sqrt2 = 2.0f64.sqrt();
    let ei_pi4 = phase(FRAC_PI_4);
    let ei_3pi4 = phase(3.0 * FRAC_PI_4);
    let a00 = (e - Complex64::new(1.0, 12.0)) / Complex64::new(0.0, -12.0);
    let corner = eta / sqrt2 * ei_pi4;
    let a40 = if radical_corner {
        -((one - e) / (Complex64::new(24.0, 24.0))).sqrt()
    } else {
        -eta / sqrt2
    };
    let rows = vec![
        a00,
        -eta,
        -eta,
        corner,
        -eta / sqrt2,
        -eta,
        i,
        -one + i,
        one,
        ei_3pi4,
        -eta,
        -one + i,
        i,
        one,
        ei_3pi4,
        corner,
        one,
        one,
        one,
        zero,
        a40,
        ei_3pi4,
        ei_3pi4,
        zero,
        one,
    ];
    Gadget::new(3, 2, ComplexMatrix::from_rows(5, rows)?)
}

/// One entry of a symbolic matrix: either the symbol with the given index or
/// a complex constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymEntry {
    Symbol(u32),
    Constant(Complex64),
}

/// Multilinear polynomial over symbols with complex coefficients, stored as
/// a map from the sorted symbol set of each monomial to its coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolicPolynomial {
    monomials: BTreeMap<Vec<u32>, Complex64>,
}

impl SymbolicPolynomial {
    pub fn zero() -> Self {
        SymbolicPolynomial::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut p = SymbolicPolynomial::default();
        if c != Complex64::new(0.0, 0.0) {
            p.monomials.insert(Vec::new(), c);
        }
        p
    }

    pub fn monomials(&self) -> impl Iterator<Item = (&[u32], Complex64)> {
        self.monomials.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn num_monomials(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    fn add_assign(&mut self, other: &SymbolicPolynomial) {
        for (k, v) in &other.monomials {
            let entry = self
                .monomials
                .entry(k.clone())
                .or_insert(Complex64::new(0.0, 0.0));
            *entry += v;
            if *entry == Complex64::new(0.0, 0.0) {
                self.monomials.remove(k);
            }
        }
    }

    /// Multiplies by a single matrix entry. Multilinearity is preserved
    /// because within one permanent expansion each symbol occurs at most
    /// once per monomial.
    fn mul_entry(&self, entry: SymEntry) -> SymbolicPolynomial {
        let mut out = SymbolicPolynomial::default();
        match entry {
            SymEntry::Constant(c) => {
                if c == Complex64::new(0.0, 0.0) {
                    return out;
                }
                for (k, v) in &self.monomials {
                    out.monomials.insert(k.clone(), v * c);
                }
            }
            SymEntry::Symbol(s) => {
                for (k, v) in &self.monomials {
                    let mut key = k.clone();
                    match key.binary_search(&s) {
                        Ok(_) => unreachable!("symbol repeated within a permanent monomial"),
                        Err(pos) => key.insert(pos, s),
                    }
                    out.monomials.insert(key, *v);
                }
            }
        }
        out
    }

    /// Evaluates at a symbol assignment (indexed by symbol id).
    pub fn evaluate(&self, symbols: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (key, coeff) in &self.monomials {
            let mut term = *coeff;
            for &s in key {
                term *= symbols[s as usize];
            }
            total += term;
        }
        total
    }
}

/// Exact symbolic permanent of a square matrix of symbols and constants, by
/// Laplace expansion along rows with memoized column-subset minors. The
/// empty matrix has permanent 1.
pub fn symbolic_permanent(entries: &[SymEntry], order: usize) -> Result<SymbolicPolynomial> {
    if entries.len() != order * order {
        return Err(Error::domain(format!(
            "entry count {} does not match order {order}",
            entries.len()
        )));
    }
    if order > SYMBOLIC_ORDER_CAP {
        return Err(Error::resource(format!(
            "symbolic permanent limited to order {SYMBOLIC_ORDER_CAP}, got {order}"
        )));
    }
    fn rec(
        entries: &[SymEntry],
        order: usize,
        row: usize,
        cols: u32,
        memo: &mut HashMap<u32, SymbolicPolynomial>,
    ) -> SymbolicPolynomial {
        if row == order {
            return SymbolicPolynomial::constant(Complex64::new(1.0, 0.0));
        }
        if let Some(hit) = memo.get(&cols) {
            return hit.clone();
        }
        let mut total = SymbolicPolynomial::zero();
        for j in 0..order {
            if cols & (1 << j) == 0 {
                continue;
            }
            let minor = rec(entries, order, row + 1, cols & !(1 << j), memo);
            total.add_assign(&minor.mul_entry(entries[row * order + j]));
        }
        memo.insert(cols, total.clone());
        total
    }
    if order == 0 {
        return Ok(SymbolicPolynomial::constant(Complex64::new(1.0, 0.0)));
    }
    let mut memo = HashMap::new();
    Ok(rec(entries, order, 0, (1u32 << order) - 1, &mut memo))
}

/// What an equation's left-hand side must equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RightHandSide {
    /// 1: consistent cover with at least one clause variable set to 0.
    One,
    /// `e^{i theta}`: consistent cover with every clause variable set to 1.
    Phase,
    /// 0: crossing traversals must cancel.
    Zero,
}

impl RightHandSide {
    pub fn value(self, theta: f64) -> Complex64 {
        match self {
            RightHandSide::One => Complex64::new(1.0, 0.0),
            RightHandSide::Phase => phase(theta),
            RightHandSide::Zero => Complex64::new(0.0, 0.0),
        }
    }
}

/// Identifies which condition an equation encodes.
#[derive(Debug, Clone, PartialEq)]
pub enum EquationTag {
    /// Consistent-cover condition for the given variable assignment
    /// (`assignment[i]` is the value of the i-th clause variable).
    Nonzero { assignment: Vec<bool> },
    /// Crossing-cancellation condition for covers entering outer vertex
    /// `entry`, leaving at `exit` and covering exactly `traversed` among the
    /// other outer vertices.
    Zero {
        entry: usize,
        exit: usize,
        traversed: Vec<usize>,
    },
}

impl fmt::Display for EquationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquationTag::Nonzero { assignment } => {
                write!(f, "nonzero s=")?;
                for &b in assignment {
                    write!(f, "{}", b as u8)?;
                }
                Ok(())
            }
            EquationTag::Zero {
                entry,
                exit,
                traversed,
            } => {
                write!(f, "zero x={entry} y={exit} o={{")?;
                for (i, v) in traversed.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equation {
    pub tag: EquationTag,
    pub lhs: SymbolicPolynomial,
    pub rhs: RightHandSide,
}

/// The full constraint system for a degree-`d` gadget with `k` inner
/// vertices: `2^d` consistent-cover equations plus `d(d-1) 2^{d-2}`
/// crossing-cancellation equations in `(d+k)^2` symbols `x_{i,j}`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    degree: usize,
    inner: usize,
    equations: Vec<Equation>,
}

impl ConstraintSystem {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn inner(&self) -> usize {
        self.inner
    }

    pub fn num_symbols(&self) -> usize {
        (self.degree + self.inner).pow(2)
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }
}

/// Generates the gadget-design constraint system for degree `d` with `k`
/// inner vertices. Purely symbolic: no permanent is evaluated numerically.
pub fn generate_constraints(degree: usize, inner: usize) -> Result<ConstraintSystem> {
    if degree == 0 {
        return Err(Error::domain("clause degree must be at least 1"));
    }
    let order = degree + inner;
    if order > SYMBOLIC_ORDER_CAP {
        return Err(Error::resource(format!(
            "constraint generation limited to d+k <= {SYMBOLIC_ORDER_CAP}, got {order}"
        )));
    }
    let symbol_at = |i: usize, j: usize| SymEntry::Symbol((i * order + j) as u32);
    let inner_vertices: Vec<usize> = (degree..order).collect();
    let mut equations = Vec::new();

    // consistent covers: one equation per assignment of the clause variables
    for s in 0u32..(1 << degree) {
        let assignment: Vec<bool> = (0..degree).map(|i| s & (1 << i) != 0).collect();
        let keep: Vec<usize> = (0..degree)
            .filter(|&i| assignment[i])
            .chain(inner_vertices.iter().copied())
            .collect();
        let m = keep.len();
        let entries: Vec<SymEntry> = keep
            .iter()
            .flat_map(|&i| keep.iter().map(move |&j| symbol_at(i, j)))
            .collect();
        let lhs = symbolic_permanent(&entries, m)?;
        let rhs = if assignment.iter().all(|&b| b) {
            RightHandSide::Phase
        } else {
            RightHandSide::One
        };
        equations.push(Equation {
            tag: EquationTag::Nonzero { assignment },
            lhs,
            rhs,
        });
    }

    // crossing cancellations: row-replacement permanents, one per
    // (entry, exit, traversed-outer-subset)
    for x in 0..degree {
        for y in 0..degree {
            if x == y {
                continue;
            }
            let rest: Vec<usize> = (0..degree).filter(|&v| v != x && v != y).collect();
            for mask in 0u32..(1 << rest.len()) {
                let traversed: Vec<usize> = rest
                    .iter()
                    .enumerate()
                    .filter(|(bit, _)| mask & (1 << bit) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                let mut keep: Vec<usize> = traversed.clone();
                keep.push(x);
                keep.push(y);
                keep.sort_unstable();
                keep.extend(inner_vertices.iter().copied());
                let m = keep.len();
                let y_pos = keep.iter().position(|&v| v == y).unwrap();
                let x_pos = keep.iter().position(|&v| v == x).unwrap();
                let entries: Vec<SymEntry> = keep
                    .iter()
                    .enumerate()
                    .flat_map(|(r, &i)| {
                        let keep = &keep;
                        keep.iter().enumerate().map(move |(cidx, &j)| {
                            if r == y_pos {
                                if cidx == x_pos {
                                    SymEntry::Constant(Complex64::new(1.0, 0.0))
                                } else {
                                    SymEntry::Constant(Complex64::new(0.0, 0.0))
                                }
                            } else {
                                symbol_at(i, j)
                            }
                        })
                    })
                    .collect();
                let lhs = symbolic_permanent(&entries, m)?;
                equations.push(Equation {
                    tag: EquationTag::Zero {
                        entry: x,
                        exit: y,
                        traversed,
                    },
                    lhs,
                    rhs: RightHandSide::Zero,
                });
            }
        }
    }

    Ok(ConstraintSystem {
        degree,
        inner,
        equations,
    })
}

/// Residual report from checking a concrete gadget against its constraint
/// system. Failures are reported, never thrown.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub degree: usize,
    pub inner: usize,
    pub theta: f64,
    pub tolerance: f64,
    /// `(tag, |lhs - rhs|)` per equation, in generation order.
    pub residuals: Vec<(EquationTag, f64)>,
    pub max_nonzero_residual: f64,
    pub max_zero_residual: f64,
    pub pass: bool,
}

impl VerificationReport {
    /// Tags of the equations whose residual exceeds the tolerance.
    pub fn failing(&self) -> Vec<&EquationTag> {
        self.residuals
            .iter()
            .filter(|(_, r)| *r > self.tolerance)
            .map(|(t, _)| t)
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.max_nonzero_residual.max(self.max_zero_residual)
    }
}

/// Substitutes the gadget entries into the symbolic constraint system for
/// its `(degree, inner)` shape and reports `|lhs - rhs|` per equation at the
/// given coefficient `theta`.
pub fn verify_gadget(gadget: &Gadget, theta: f64, tolerance: f64) -> Result<VerificationReport> {
    let system = generate_constraints(gadget.degree, gadget.inner)?;
    let order = gadget.order();
    let symbols: Vec<Complex64> = (0..order * order)
        .map(|k| gadget.matrix[(k / order, k % order)])
        .collect();
    let mut residuals = Vec::with_capacity(system.equations.len());
    let mut max_nonzero = 0.0f64;
    let mut max_zero = 0.0f64;
    for eq in &system.equations {
        let lhs = eq.lhs.evaluate(&symbols);
        let r = (lhs - eq.rhs.value(theta)).norm();
        match eq.tag {
            EquationTag::Nonzero { .. } => max_nonzero = max_nonzero.max(r),
            EquationTag::Zero { .. } => max_zero = max_zero.max(r),
        }
        residuals.push((eq.tag.clone(), r));
    }
    Ok(VerificationReport {
        degree: gadget.degree,
        inner: gadget.inner,
        theta,
        tolerance,
        residuals,
        max_nonzero_residual: max_nonzero,
        max_zero_residual: max_zero,
        pass: max_nonzero.max(max_zero) <= tolerance,
    })
}

/// Directly enumerates the partial cycle covers entering outer vertex `x`,
/// leaving at `y` and covering exactly the outer subset `o` inside the
/// gadget (on the crossing path or on interior cycles), and returns the sum
/// of their weights.
///
/// This is the independent oracle for the row-replacement construction: the
/// result equals the permanent of the submatrix on `{x,y} + o + inner` with
/// row `y` zeroed except for a 1 in column `x`.
pub fn partial_cover_sum(gadget: &Gadget, x: usize, y: usize, o: &[usize]) -> Result<Complex64> {
    let d = gadget.degree;
    if d < 2 {
        return Err(Error::domain(
            "partial cycle covers need at least two outer vertices",
        ));
    }
    if x >= d || y >= d || x == y {
        return Err(Error::domain(format!(
            "invalid outer vertex pair ({x}, {y}) for degree {d}"
        )));
    }
    let mut seen = vec![false; d];
    for &v in o {
        if v >= d || v == x || v == y || seen[v] {
            return Err(Error::domain(format!(
                "traversed set must be distinct outer vertices excluding {x} and {y}"
            )));
        }
        seen[v] = true;
    }
    let m = &gadget.matrix;
    // vertices available to the intra-gadget structure besides x and y
    let avail: Vec<usize> = o.iter().copied().chain(gadget.inner_vertices()).collect();
    let zero = Complex64::new(0.0, 0.0);

    // sum over permutations of `rest`, i.e. interior cycles covering them
    fn cycles_sum(
        m: &ComplexMatrix,
        rest: &[usize],
        used: u64,
        acc: Complex64,
        row: usize,
    ) -> Complex64 {
        if row == rest.len() {
            return acc;
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (k, &v) in rest.iter().enumerate() {
            if used & (1 << k) != 0 {
                continue;
            }
            let w = m[(rest[row], v)];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            total += cycles_sum(m, rest, used | (1 << k), acc * w, row + 1);
        }
        total
    }

    // enumerate simple paths x -> ... -> y over a chosen interior subset
    fn paths(
        m: &ComplexMatrix,
        avail: &[usize],
        current: usize,
        y: usize,
        on_path: u64,
        acc: Complex64,
        total: &mut Vec<(u64, Complex64)>,
    ) {
        let closing = m[(current, y)];
        if closing != Complex64::new(0.0, 0.0) {
            total.push((on_path, acc * closing));
        }
        for (k, &v) in avail.iter().enumerate() {
            if on_path & (1 << k) != 0 {
                continue;
            }
            let w = m[(current, v)];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            paths(m, avail, v, y, on_path | (1 << k), acc * w, total);
        }
    }

    let mut path_weights: Vec<(u64, Complex64)> = Vec::new();
    paths(
        m,
        &avail,
        x,
        y,
        0,
        Complex64::new(1.0, 0.0),
        &mut path_weights,
    );

    let mut total = zero;
    for (mask, w) in path_weights {
        let rest: Vec<usize> = avail
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) == 0)
            .map(|(_, &v)| v)
            .collect();
        total += w * cycles_sum(m, &rest, 0, Complex64::new(1.0, 0.0), 0);
    }
    Ok(total)
}

/// Renders a constraint system in the line-oriented export grammar:
/// one equation per line, each preceded by a `#` tag comment. Symbols print
/// as `x_<i>_<j>`, monomials as `(<re>,<im>)*x_a_b*x_c_d` (unit coefficients
/// elided), terms join with ` + `. With `theta = None` the phase right-hand
/// side prints as the reserved symbol `T`; otherwise right-hand sides are
/// numeric `(re,im)` pairs.
pub fn export_constraints(system: &ConstraintSystem, theta: Option<f64>) -> String {
    let order = system.degree + system.inner;
    // components below trig dust print as 0 to keep solver input clean
    let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let pair = |z: Complex64| format!("({},{})", snap(z.re), snap(z.im));
    let mut out = String::new();
    for eq in &system.equations {
        out.push_str(&format!("# {}\n", eq.tag));
        let mut line = String::new();
        if eq.lhs.is_zero() {
            line.push_str("(0,0)");
        } else {
            let terms: Vec<String> = eq
                .lhs
                .monomials()
                .map(|(syms, coeff)| {
                    let symbol_names: Vec<String> = syms
                        .iter()
                        .map(|&s| format!("x_{}_{}", s as usize / order, s as usize % order))
                        .collect();
                    if symbol_names.is_empty() {
                        pair(coeff)
                    } else if coeff == Complex64::new(1.0, 0.0) {
                        symbol_names.join("*")
                    } else {
                        format!("{}*{}", pair(coeff), symbol_names.join("*"))
                    }
                })
                .collect();
            line.push_str(&terms.join(" + "));
        }
        let rhs = match (eq.rhs, theta) {
            (RightHandSide::Phase, None) => "T".to_string(),
            (rhs, t) => pair(rhs.value(t.unwrap_or(0.0))),
        };
        out.push_str(&format!("{line} = {rhs}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permanent::{permanent, PermanentMethod};
    use std::f64::consts::PI;

    const THETA_GRID: [f64; 7] = [
        0.0,
        PI / 8.0,
        FRAC_PI_4,
        PI / 2.0,
        PI,
        1.234,
        std::f64::consts::TAU - 0.1,
    ];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linear_gadget_matches_phase() {
        let g = gadget_matrix(1, 0.77).unwrap();
        assert!((g.matrix()[(0, 0)] - phase(0.77)).norm() < 1e-15);
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn quadratic_gadget_at_pi_and_zero() {
        let g = gadget_matrix(2, PI).unwrap();
        let expect = [[0.0, -1.0, 1.0], [-1.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((g.matrix()[(i, j)] - c(expect[i][j], 0.0)).norm() < 1e-15);
            }
        }
        let g0 = gadget_matrix(2, 0.0).unwrap();
        let expect0 = [[1.0, 0.0, 0.0], [-1.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((g0.matrix()[(i, j)] - c(expect0[i][j], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(gadget_matrix(4, 1.0), Err(Error::Unsupported(_))));
        assert!(gadget_matrix(0, 1.0).is_err());
    }

    #[test]
    fn symbolic_permanent_small_cases() {
        let p = symbolic_permanent(&[SymEntry::Symbol(0)], 1).unwrap();
        assert_eq!(p.num_monomials(), 1);
        assert_eq!(p.evaluate(&[c(3.0, 1.0)]), c(3.0, 1.0));

        let syms: Vec<SymEntry> = (0..4).map(SymEntry::Symbol).collect();
        let p = symbolic_permanent(&syms, 2).unwrap();
        // x00*x11 + x01*x10
        assert_eq!(p.num_monomials(), 2);
        let vals = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        assert_eq!(p.evaluate(&vals), c(1.0 * 4.0 + 2.0 * 3.0, 0.0));

        let p = symbolic_permanent(&[], 0).unwrap();
        assert_eq!(p.evaluate(&[]), c(1.0, 0.0));
    }

    #[test]
    fn symbolic_permanent_matches_numeric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in 1..=5usize {
            let syms: Vec<SymEntry> = (0..(n * n) as u32).map(SymEntry::Symbol).collect();
            let poly = symbolic_permanent(&syms, n).unwrap();
            let vals: Vec<Complex64> = (0..n * n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let m = ComplexMatrix::from_rows(n, vals.clone()).unwrap();
            let direct = permanent(&m, PermanentMethod::Naive).unwrap();
            assert!((poly.evaluate(&vals) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn constraint_counts() {
        let s = generate_constraints(2, 1).unwrap();
        assert_eq!(s.equations().len(), 6);
        assert_eq!(s.num_symbols(), 9);

        let s = generate_constraints(3, 2).unwrap();
        assert_eq!(s.equations().len(), 20);
        assert_eq!(s.num_symbols(), 25);

        let s = generate_constraints(1, 0).unwrap();
        assert_eq!(s.equations().len(), 2);

        assert!(matches!(
            generate_constraints(4, 3),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn constraint_count_formula_for_all_shapes() {
        for d in 1..=4usize {
            for k in 0..=(SYMBOLIC_ORDER_CAP - d) {
                let s = generate_constraints(d, k).unwrap();
                let expect = (1 << d) + d * (d - 1) * (1 << d) / 4;
                assert_eq!(s.equations().len(), expect, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn degenerate_degree_one_system() {
        let s = generate_constraints(1, 0).unwrap();
        // s=0 keeps nothing: the empty permanent, so the equation reads 1 = 1
        let eq0 = &s.equations()[0];
        assert_eq!(
            eq0.tag,
            EquationTag::Nonzero {
                assignment: vec![false]
            }
        );
        assert_eq!(eq0.lhs.evaluate(&[c(9.0, 9.0)]), c(1.0, 0.0));
        assert_eq!(eq0.rhs, RightHandSide::One);
        // s=1 pins the single entry to the phase
        let eq1 = &s.equations()[1];
        assert_eq!(eq1.rhs, RightHandSide::Phase);
        assert_eq!(eq1.lhs.evaluate(&[c(9.0, 9.0)]), c(9.0, 9.0));
    }

    #[test]
    fn published_linear_and_quadratic_gadgets_verify() {
        for &theta in &THETA_GRID {
            for d in [1, 2] {
                let g = gadget_matrix(d, theta).unwrap();
                let report = verify_gadget(&g, theta, 1e-9).unwrap();
                assert!(
                    report.pass,
                    "degree {d} theta {theta}: max {}",
                    report.max_residual()
                );
            }
        }
    }

    #[test]
    fn corrected_cubic_gadget_verifies() {
        for &theta in &THETA_GRID {
            let g = gadget_matrix(3, theta).unwrap();
            let report = verify_gadget(&g, theta, 1e-9).unwrap();
            assert!(report.pass, "theta {theta}: max {}", report.max_residual());
        }
    }

    #[test]
    fn radical_corner_variant_fails_verification() {
        let g = cubic_gadget_radical_variant(PI);
        let report = verify_gadget(&g, PI, 1e-9).unwrap();
        assert!(!report.pass);
        assert!(!report.failing().is_empty());
        // at theta = 0 both corner conventions coincide (eta = 0)
        let g0 = cubic_gadget_radical_variant(0.0);
        assert!(verify_gadget(&g0, 0.0, 1e-9).unwrap().pass);
    }

    #[test]
    fn quadratic_full_permanent_is_phase() {
        let g = gadget_matrix(2, PI).unwrap();
        let p = permanent(g.matrix(), PermanentMethod::Naive).unwrap();
        assert!((p - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_as_quadratic_gadget_report() {
        // The 3x3 identity is a valid theta = 0 gadget: no crossing edges
        // exist, so every crossing sum is zero and all consistent covers
        // have weight 1. At theta = pi the all-ones equation must fail.
        let g = Gadget::new(2, 1, ComplexMatrix::identity(3)).unwrap();
        let report = verify_gadget(&g, 0.0, 1e-12).unwrap();
        assert!(report.pass);
        let report = verify_gadget(&g, PI, 1e-9).unwrap();
        assert!(!report.pass);
        let failing = report.failing();
        assert_eq!(failing.len(), 1);
        assert_eq!(
            *failing[0],
            EquationTag::Nonzero {
                assignment: vec![true, true]
            }
        );
        assert!((report.max_nonzero_residual - 2.0).abs() < 1e-12);
        assert_eq!(report.max_zero_residual, 0.0);
    }

    #[test]
    fn partial_cover_sum_quadratic_cancellation() {
        for &theta in &THETA_GRID {
            let g = gadget_matrix(2, theta).unwrap();
            assert!(partial_cover_sum(&g, 0, 1, &[]).unwrap().norm() < 1e-12);
            assert!(partial_cover_sum(&g, 1, 0, &[]).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn partial_cover_sum_rejects_degree_one() {
        let g = gadget_matrix(1, 1.0).unwrap();
        assert!(matches!(
            partial_cover_sum(&g, 0, 1, &[]),
            Err(Error::Domain(_))
        ));
    }

    fn row_replacement_permanent(g: &Gadget, x: usize, y: usize, o: &[usize]) -> Complex64 {
        let mut keep: Vec<usize> = o.to_vec();
        keep.push(x);
        keep.push(y);
        keep.sort_unstable();
        keep.extend(g.inner_vertices());
        let mut sub = g.matrix().principal(&keep);
        let y_pos = keep.iter().position(|&v| v == y).unwrap();
        let x_pos = keep.iter().position(|&v| v == x).unwrap();
        for j in 0..sub.order() {
            sub[(y_pos, j)] = c(0.0, 0.0);
        }
        sub[(y_pos, x_pos)] = c(1.0, 0.0);
        permanent(&sub, PermanentMethod::Naive).unwrap()
    }

    #[test]
    fn partial_cover_sum_matches_row_replacement() {
        // cross-validates the zero-equation construction against direct
        // enumeration, including on a gadget that does NOT satisfy the
        // constraints (the identity holds for any matrix)
        for &theta in &[0.9, PI, 5.5] {
            for g in [
                gadget_matrix(2, theta).unwrap(),
                gadget_matrix(3, theta).unwrap(),
                cubic_gadget_radical_variant(theta),
            ] {
                let d = g.degree();
                for x in 0..d {
                    for y in 0..d {
                        if x == y {
                            continue;
                        }
                        let rest: Vec<usize> = (0..d).filter(|&v| v != x && v != y).collect();
                        for mask in 0u32..(1 << rest.len()) {
                            let o: Vec<usize> = rest
                                .iter()
                                .enumerate()
                                .filter(|(k, _)| mask & (1 << k) != 0)
                                .map(|(_, &v)| v)
                                .collect();
                            let direct = partial_cover_sum(&g, x, y, &o).unwrap();
                            let trick = row_replacement_permanent(&g, x, y, &o);
                            assert!(
                                (direct - trick).norm() < 1e-10,
                                "d={d} x={x} y={y} o={o:?}: {direct} vs {trick}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn symbolic_and_numeric_residuals_agree() {
        // evaluating the symbolic system must reproduce numeric permanents
        let theta = 0.77;
        let g = gadget_matrix(2, theta).unwrap();
        let system = generate_constraints(2, 1).unwrap();
        let symbols: Vec<Complex64> = (0..9).map(|k| g.matrix()[(k / 3, k % 3)]).collect();
        for eq in system.equations() {
            let symbolic = eq.lhs.evaluate(&symbols);
            let numeric = match &eq.tag {
                EquationTag::Nonzero { assignment } => {
                    let keep: Vec<usize> = (0..2)
                        .filter(|&i| assignment[i])
                        .chain(std::iter::once(2))
                        .collect();
                    permanent(&g.matrix().principal(&keep), PermanentMethod::Naive).unwrap()
                }
                EquationTag::Zero {
                    entry,
                    exit,
                    traversed,
                } => row_replacement_permanent(&g, *entry, *exit, traversed),
            };
            assert!((symbolic - numeric).norm() < 1e-12);
        }
    }

    #[test]
    fn export_degree_one_numeric() {
        let s = generate_constraints(1, 0).unwrap();
        let text = export_constraints(&s, Some(PI));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# nonzero s=0");
        assert_eq!(lines[1], "(1,0) = (1,0)");
        assert_eq!(lines[2], "# nonzero s=1");
        assert_eq!(lines[3], "x_0_0 = (-1,0)");
    }

    #[test]
    fn export_symbolic_phase_rhs() {
        let s = generate_constraints(1, 0).unwrap();
        let text = export_constraints(&s, None);
        assert!(text.contains("x_0_0 = T"));
    }

    #[test]
    fn export_quadratic_structure() {
        let s = generate_constraints(2, 1).unwrap();
        let text = export_constraints(&s, None);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        // the all-ones equation is the 3x3 symbolic permanent against T
        let idx = lines.iter().position(|l| *l == "# nonzero s=11").unwrap();
        let eq = lines[idx + 1];
        assert!(eq.ends_with("= T"));
        assert_eq!(eq.matches("x_").count(), 18); // 3! monomials of 3 symbols
                                                  // zero equations end with (0,0)
        assert!(lines.iter().any(|l| l.starts_with("# zero x=0 y=1 o={}")));
        let zline = lines[lines.iter().position(|l| l.starts_with("# zero")).unwrap() + 1];
        assert!(zline.ends_with("= (0,0)"));
    }
}
