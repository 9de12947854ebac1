//! Circuit representations and sum-over-paths extraction.
//!
//! Circuits over {Hadamard, Toffoli, phase} gates are rewritten into a phase
//! polynomial over path variables: every Hadamard creates a fresh variable
//! and contributes `pi * (input expr) * (fresh var)`, a Toffoli maps its
//! target expression `z` to `z xor x*y`, and a phase gate contributes its
//! angle times the product of the wire expressions. The amplitude is then
//! `(1/sqrt(2)^h) * sum_x e^{i f(x)}` over assignments consistent with the
//! boundary conditions, which [`Circuit::amplitude_direct`] evaluates by
//! brute force; it is the independent oracle the graph encoding is tested
//! against.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::caps;
use crate::error::{Error, Result};
use crate::poly::{parse_header, Polynomial};

/// A `k`-qubit phase gate (`k` in 1..=3): multiplies the amplitude by
/// `e^{i theta}` on basis states where every listed qubit is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGate {
    theta: f64,
    qubits: Vec<usize>,
}

impl PhaseGate {
    pub fn new(theta: f64, qubits: Vec<usize>) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > 3 {
            return Err(Error::domain(format!(
                "phase gates act on 1 to 3 qubits, got {}",
                qubits.len()
            )));
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(Error::domain("phase gate qubits must be distinct"));
        }
        Ok(PhaseGate { theta, qubits })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn degree(&self) -> usize {
        self.qubits.len()
    }
}

/// Layered IQP circuit: a Hadamard wall, then alternating diagonal layers
/// and Hadamard walls. `layers` holds the diagonal layers, so an IQP-1
/// circuit has exactly one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct IqpCircuit {
    q: usize,
    layers: Vec<Vec<PhaseGate>>,
}

impl IqpCircuit {
    pub fn new(q: usize, layers: Vec<Vec<PhaseGate>>) -> Result<Self> {
        if q == 0 {
            return Err(Error::domain("circuit needs at least one qubit"));
        }
        if layers.is_empty() {
            return Err(Error::domain(
                "IQP circuit needs at least one diagonal layer",
            ));
        }
        for layer in &layers {
            for gate in layer {
                if let Some(&w) = gate.qubits.iter().find(|&&w| w >= q) {
                    return Err(Error::domain(format!(
                        "gate qubit {w} out of range for {q} qubits"
                    )));
                }
            }
        }
        Ok(IqpCircuit { q, layers })
    }

    pub fn qubits(&self) -> usize {
        self.q
    }

    pub fn layers(&self) -> &[Vec<PhaseGate>] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Hadamard count: one wall of `q` before each diagonal layer plus the
    /// final wall.
    pub fn hadamard_count(&self) -> usize {
        self.q * (self.layers.len() + 1)
    }

    /// Occurrence counts of degree-1/2/3 diagonal gates (occurrences are not
    /// merged, two gates on the same qubits count twice).
    pub fn gate_counts(&self) -> crate::resource::GateCounts {
        let mut counts = crate::resource::GateCounts {
            q: self.q,
            deg1: 0,
            deg2: 0,
            deg3: 0,
        };
        for gate in self.layers.iter().flatten() {
            match gate.degree() {
                1 => counts.deg1 += 1,
                2 => counts.deg2 += 1,
                _ => counts.deg3 += 1,
            }
        }
        counts
    }

    /// The equivalent {H, phase} op list, in time order.
    fn to_ops(&self) -> Vec<HtOp> {
        let mut ops = Vec::new();
        let wall = |ops: &mut Vec<HtOp>| {
            for w in 0..self.q {
                ops.push(HtOp::H(w));
            }
        };
        wall(&mut ops);
        for layer in &self.layers {
            ops.extend(layer.iter().cloned().map(HtOp::Phase));
            wall(&mut ops);
        }
        ops
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("iqp q={}\n", self.q);
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                out.push_str("layer\n");
            }
            for gate in layer {
                let _ = write!(out, "p {}", gate.theta);
                for w in &gate.qubits {
                    let _ = write!(out, " {w}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// One operation of a {Hadamard, Toffoli, phase} circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum HtOp {
    H(usize),
    Toffoli {
        control1: usize,
        control2: usize,
        target: usize,
    },
    Phase(PhaseGate),
}

/// A {Hadamard, Toffoli, phase} circuit as an ordered op list.
#[derive(Debug, Clone, PartialEq)]
pub struct HtCircuit {
    q: usize,
    ops: Vec<HtOp>,
}

impl HtCircuit {
    pub fn new(q: usize, ops: Vec<HtOp>) -> Result<Self> {
        if q == 0 {
            return Err(Error::domain("circuit needs at least one qubit"));
        }
        for op in &ops {
            let wires: Vec<usize> = match op {
                HtOp::H(w) => vec![*w],
                HtOp::Toffoli {
                    control1,
                    control2,
                    target,
                } => {
                    if control1 == control2 || control1 == target || control2 == target {
                        return Err(Error::domain("Toffoli wires must be distinct"));
                    }
                    vec![*control1, *control2, *target]
                }
                HtOp::Phase(g) => g.qubits.clone(),
            };
            if let Some(&w) = wires.iter().find(|&&w| w >= q) {
                return Err(Error::domain(format!(
                    "wire {w} out of range for {q} qubits"
                )));
            }
        }
        Ok(HtCircuit { q, ops })
    }

    pub fn qubits(&self) -> usize {
        self.q
    }

    pub fn ops(&self) -> &[HtOp] {
        &self.ops
    }

    pub fn hadamard_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, HtOp::H(_)))
            .count()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("ht q={}\n", self.q);
        for op in &self.ops {
            match op {
                HtOp::H(w) => {
                    let _ = writeln!(out, "h {w}");
                }
                HtOp::Toffoli {
                    control1,
                    control2,
                    target,
                } => {
                    let _ = writeln!(out, "ccx {control1} {control2} {target}");
                }
                HtOp::Phase(g) => {
                    let _ = write!(out, "p {}", g.theta);
                    for w in &g.qubits {
                        let _ = write!(out, " {w}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Either circuit kind, as found in circuit files.
#[derive(Debug, Clone, PartialEq)]
pub enum Circuit {
    Iqp(IqpCircuit),
    Ht(HtCircuit),
}

impl Circuit {
    pub fn qubits(&self) -> usize {
        match self {
            Circuit::Iqp(c) => c.qubits(),
            Circuit::Ht(c) => c.qubits(),
        }
    }

    /// Sum-over-paths amplitude `<b| C |a>`; see [`amplitude_direct`].
    pub fn amplitude_direct(&self, input: &[bool], output: &[bool]) -> Result<Complex64> {
        amplitude_direct(self, input, output)
    }

    /// Parses either the `iqp` or the `ht` text format, deciding by header.
    pub fn parse(text: &str) -> Result<Circuit> {
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .ok_or_else(|| Error::parse("empty circuit file"))?;
        if first.starts_with("iqp") {
            parse_iqp(text).map(Circuit::Iqp)
        } else if first.starts_with("ht") {
            parse_ht(text).map(Circuit::Ht)
        } else {
            Err(Error::parse(format!("unknown circuit header {first:?}")))
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Circuit::Iqp(c) => c.to_text(),
            Circuit::Ht(c) => c.to_text(),
        }
    }
}

/// Multilinear polynomial over F2: a set of monomials combined by xor.
/// The empty monomial is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct F2Expr {
    monomials: BTreeSet<Vec<usize>>,
}

impl F2Expr {
    pub fn zero() -> Self {
        F2Expr::default()
    }

    /// The constant 1 (the empty monomial).
    pub fn one() -> Self {
        let mut e = F2Expr::default();
        e.monomials.insert(Vec::new());
        e
    }

    pub fn var(v: usize) -> Self {
        let mut e = F2Expr::default();
        e.monomials.insert(vec![v]);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.monomials.iter()
    }

    fn toggle(&mut self, m: Vec<usize>) {
        if !self.monomials.remove(&m) {
            self.monomials.insert(m);
        }
    }

    pub fn xor(&self, other: &F2Expr) -> F2Expr {
        let mut out = self.clone();
        for m in &other.monomials {
            out.toggle(m.clone());
        }
        out
    }

    /// Multilinear product: unions of variable sets, collected mod 2.
    pub fn mul(&self, other: &F2Expr) -> F2Expr {
        let mut out = F2Expr::default();
        for a in &self.monomials {
            for b in &other.monomials {
                let mut m = a.clone();
                m.extend_from_slice(b);
                m.sort_unstable();
                m.dedup();
                out.toggle(m);
            }
        }
        out
    }

    /// Substitutes known variable values.
    pub fn reduce(&self, fixed: &[Option<bool>]) -> F2Expr {
        let mut out = F2Expr::default();
        'mono: for m in &self.monomials {
            let mut rest = Vec::new();
            for &v in m {
                match fixed.get(v).copied().flatten() {
                    Some(false) => continue 'mono,
                    Some(true) => {}
                    None => rest.push(v),
                }
            }
            out.toggle(rest);
        }
        out
    }

    /// Recognizes `v xor c` and bare constants: returns `(Some(v), c)` or
    /// `(None, c)`; `None` overall when the expression is anything richer.
    pub fn as_affine(&self) -> Option<(Option<usize>, bool)> {
        let mut var = None;
        let mut constant = false;
        for m in &self.monomials {
            match m.len() {
                0 => constant = true,
                1 if var.is_none() => var = Some(m[0]),
                _ => return None,
            }
        }
        Some((var, constant))
    }
}

/// Where a path variable came from.
#[derive(Debug, Clone, PartialEq)]
pub enum VarLabel {
    /// Circuit input on the given qubit.
    Input { qubit: usize },
    /// Created by the `ordinal`-th Hadamard (0-based, in op order) on the
    /// given qubit.
    Hadamard { qubit: usize, ordinal: usize },
}

/// Result of rewriting a circuit into a phase polynomial over path
/// variables, together with the boundary data still to be resolved.
#[derive(Debug, Clone)]
pub struct SumOverPaths {
    /// Phase polynomial over the path variables.
    pub poly: Polynomial,
    /// Number of Hadamard gates (the normalization is `1/sqrt(2)^h`).
    pub h: usize,
    /// Path-variable indices carrying circuit inputs (empty once the
    /// boundary has been substituted).
    pub input_vars: Vec<usize>,
    /// Per-qubit output conditions `B_j(x) = b_j` still to be imposed
    /// (empty once substituted).
    pub conditions: Vec<F2Expr>,
    /// Origin of each path variable of `poly`.
    pub var_labels: Vec<VarLabel>,
}

impl SumOverPaths {
    pub fn num_path_vars(&self) -> usize {
        self.poly.num_vars()
    }

    /// `(1/sqrt 2)^h`, the amplitude normalization.
    pub fn normalization(&self) -> f64 {
        inv_sqrt2_pow(self.h)
    }
}

fn extract_ops(q: usize, ops: &[HtOp]) -> Result<SumOverPaths> {
    let mut wire_exprs: Vec<F2Expr> = (0..q).map(F2Expr::var).collect();
    let mut labels: Vec<VarLabel> = (0..q).map(|qubit| VarLabel::Input { qubit }).collect();
    let mut raw_clauses: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut next_var = q;
    let mut h = 0usize;

    for op in ops {
        match op {
            HtOp::H(w) => {
                let fresh = next_var;
                next_var += 1;
                labels.push(VarLabel::Hadamard {
                    qubit: *w,
                    ordinal: h,
                });
                h += 1;
                for m in wire_exprs[*w].monomials() {
                    let mut vars = m.clone();
                    vars.push(fresh);
                    raw_clauses.push((PI, vars));
                }
                wire_exprs[*w] = F2Expr::var(fresh);
            }
            HtOp::Toffoli {
                control1,
                control2,
                target,
            } => {
                let prod = wire_exprs[*control1].mul(&wire_exprs[*control2]);
                wire_exprs[*target] = wire_exprs[*target].xor(&prod);
            }
            HtOp::Phase(gate) => {
                let mut prod = F2Expr::one();
                for &w in gate.qubits() {
                    prod = prod.mul(&wire_exprs[w]);
                }
                let monos: Vec<Vec<usize>> = prod.monomials().cloned().collect();
                if monos.len() <= 1 {
                    // a single monomial (or identically zero) carries any angle
                    if let Some(m) = monos.into_iter().next() {
                        raw_clauses.push((gate.theta(), m));
                    }
                } else if angle_is_pi(gate.theta()) {
                    // e^{i pi (a xor b)} = e^{i pi (a + b)}, so xor-expand
                    for m in monos {
                        raw_clauses.push((PI, m));
                    }
                } else {
                    return Err(Error::unsupported(format!(
                        "phase gate with angle {} applied to a composite wire expression; \
                         only single-monomial expressions or pi angles are supported",
                        gate.theta()
                    )));
                }
            }
        }
    }

    let poly = Polynomial::new(next_var, raw_clauses)?;
    Ok(SumOverPaths {
        poly,
        h,
        input_vars: (0..q).collect(),
        conditions: wire_exprs,
        var_labels: labels,
    })
}

fn angle_is_pi(theta: f64) -> bool {
    let r = theta.rem_euclid(2.0 * PI);
    (r - PI).abs() < 1e-12
}

/// Rewrites a {H, Toffoli, phase} circuit into its phase polynomial over
/// `q + h` path variables. Inputs and output conditions are returned
/// unresolved; [`amplitude_direct`] imposes them.
pub fn extract_ht(circuit: &HtCircuit) -> Result<SumOverPaths> {
    extract_ops(circuit.q, &circuit.ops)
}

/// Rewrites an IQP circuit and substitutes the boundary: the returned
/// polynomial ranges over the free mid-layer variables only. For a zero-zero
/// IQP-1 boundary that leaves exactly `q` free variables and only the
/// diagonal-gate clauses.
pub fn extract_iqp(circuit: &IqpCircuit, input: &[bool], output: &[bool]) -> Result<SumOverPaths> {
    let sop = extract_ops(circuit.q, &circuit.to_ops())?;
    // IQP output conditions are distinct fresh variables, so the boundary
    // is always satisfiable
    Ok(resolve_boundary(sop, input, output)?
        .expect("IQP boundary conditions are distinct fresh variables"))
}

/// Substitutes input bits and output conditions into a [`SumOverPaths`].
///
/// Conditions are imposed by substitution as long as each reduces to a
/// variable (possibly xor a constant); anything richer is an unsupported
/// circuit. `Ok(None)` signals an unsatisfiable boundary (amplitude 0).
fn resolve_boundary(
    sop: SumOverPaths,
    input: &[bool],
    output: &[bool],
) -> Result<Option<SumOverPaths>> {
    let q = sop.input_vars.len();
    if input.len() != q || output.len() != q {
        return Err(Error::domain(format!(
            "boundary bit-vectors must have length {q}, got {} and {}",
            input.len(),
            output.len()
        )));
    }
    let total = sop.poly.num_vars();
    let mut fixed: Vec<Option<bool>> = vec![None; total];
    for (&v, &bit) in sop.input_vars.iter().zip(input) {
        fixed[v] = Some(bit);
    }

    let mut pending: Vec<(F2Expr, bool)> = sop
        .conditions
        .iter()
        .cloned()
        .zip(output.iter().copied())
        .collect();
    while !pending.is_empty() {
        let mut progressed = false;
        let mut next = Vec::with_capacity(pending.len());
        for (expr, bit) in pending {
            let reduced = expr.reduce(&fixed);
            match reduced.as_affine() {
                Some((None, c)) => {
                    if c != bit {
                        return Ok(None); // unsatisfiable boundary
                    }
                    progressed = true;
                }
                Some((Some(v), c)) => {
                    fixed[v] = Some(bit ^ c);
                    progressed = true;
                }
                None => next.push((reduced, bit)),
            }
        }
        pending = next;
        if !pending.is_empty() && !progressed {
            return Err(Error::unsupported(
                "output condition is a composite expression; only conditions reducible to \
                 a single path variable (xor a constant) are supported",
            ));
        }
    }

    let substitution: Vec<(usize, bool)> = fixed
        .iter()
        .enumerate()
        .filter_map(|(v, b)| b.map(|bit| (v, bit)))
        .collect();
    let reduced_poly = sop.poly.substitute(&substitution)?;
    let labels: Vec<VarLabel> = sop
        .var_labels
        .iter()
        .enumerate()
        .filter(|(v, _)| fixed[*v].is_none())
        .map(|(_, l)| l.clone())
        .collect();
    Ok(Some(SumOverPaths {
        poly: reduced_poly,
        h: sop.h,
        input_vars: Vec::new(),
        conditions: Vec::new(),
        var_labels: labels,
    }))
}

/// Extracts the phase polynomial of either circuit kind with the boundary
/// fully substituted: the result ranges over the free path variables only.
/// `Ok(None)` means the boundary is unsatisfiable (amplitude 0).
pub fn extract_resolved(
    circuit: &Circuit,
    input: &[bool],
    output: &[bool],
) -> Result<Option<SumOverPaths>> {
    match circuit {
        Circuit::Iqp(c) => Ok(Some(extract_iqp(c, input, output)?)),
        Circuit::Ht(c) => resolve_boundary(extract_ht(c)?, input, output),
    }
}

/// `<b| C |a>` by brute-force evaluation of the sum over paths:
/// `(1/sqrt(2)^h) * sum over free path variables of e^{i f(x)}`.
///
/// Fails with a resource error when more than the brute-force cap of free
/// variables remain (24 by default, `PERMSUM_MAX_N` overrides).
pub fn amplitude_direct(circuit: &Circuit, input: &[bool], output: &[bool]) -> Result<Complex64> {
    let Some(resolved) = extract_resolved(circuit, input, output)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let free = resolved.poly.num_vars();
    let cap = caps::brute_force_cap();
    if free > cap {
        return Err(Error::resource(format!(
            "amplitude sum over {free} free path variables exceeds cap {cap}"
        )));
    }
    let sum = resolved.poly.exp_sum()?;
    Ok(sum * inv_sqrt2_pow(resolved.h))
}

/// `(1/sqrt 2)^h`, exact for even `h`.
fn inv_sqrt2_pow(h: usize) -> f64 {
    let half = 2f64.powi(-((h / 2) as i32));
    if h % 2 == 1 {
        half / 2f64.sqrt()
    } else {
        half
    }
}

/// Parses strings of `0`/`1` characters into bit-vectors.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::parse(format!("invalid bit character {other:?}"))),
        })
        .collect()
}

fn parse_gate_line(line: &str) -> Result<Option<PhaseGate>> {
    let mut toks = line.split_whitespace();
    let head = toks.next().unwrap();
    let rest: Vec<&str> = toks.collect();
    let parse_wires = |toks: &[&str]| -> Result<Vec<usize>> {
        toks.iter()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::parse(format!("bad wire index in {line:?}: {e}")))
            })
            .collect()
    };
    let gate = match head {
        "p" => {
            if rest.is_empty() {
                return Err(Error::parse(format!("missing angle in {line:?}")));
            }
            let theta: f64 = rest[0]
                .parse()
                .map_err(|e| Error::parse(format!("bad angle in {line:?}: {e}")))?;
            PhaseGate::new(theta, parse_wires(&rest[1..])?)?
        }
        "z" | "cz" | "ccz" => {
            let expect = match head {
                "z" => 1,
                "cz" => 2,
                _ => 3,
            };
            let wires = parse_wires(&rest)?;
            if wires.len() != expect {
                return Err(Error::parse(format!(
                    "{head} takes {expect} wire(s): {line:?}"
                )));
            }
            PhaseGate::new(PI, wires)?
        }
        _ => return Ok(None),
    };
    Ok(Some(gate))
}

fn parse_iqp(text: &str) -> Result<IqpCircuit> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().unwrap();
    let q = parse_header(header, "iqp")?;
    let mut layers: Vec<Vec<PhaseGate>> = vec![Vec::new()];
    for line in lines {
        if line == "layer" {
            layers.push(Vec::new());
            continue;
        }
        match parse_gate_line(line)? {
            Some(gate) => layers.last_mut().unwrap().push(gate),
            None => return Err(Error::parse(format!("unknown gate line {line:?}"))),
        }
    }
    IqpCircuit::new(q, layers)
}

fn parse_ht(text: &str) -> Result<HtCircuit> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().unwrap();
    let q = parse_header(header, "ht")?;
    let mut ops = Vec::new();
    for line in lines {
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap();
        match head {
            "h" => {
                let w: usize = toks
                    .next()
                    .ok_or_else(|| Error::parse(format!("missing wire in {line:?}")))?
                    .parse()
                    .map_err(|e| Error::parse(format!("bad wire in {line:?}: {e}")))?;
                ops.push(HtOp::H(w));
            }
            "ccx" => {
                let wires: Vec<usize> = toks
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|e| Error::parse(format!("bad wire in {line:?}: {e}")))
                    })
                    .collect::<Result<_>>()?;
                if wires.len() != 3 {
                    return Err(Error::parse(format!("ccx takes 3 wires: {line:?}")));
                }
                ops.push(HtOp::Toffoli {
                    control1: wires[0],
                    control2: wires[1],
                    target: wires[2],
                });
            }
            _ => match parse_gate_line(line)? {
                Some(gate) => ops.push(HtOp::Phase(gate)),
                None => return Err(Error::parse(format!("unknown gate line {line:?}"))),
            },
        }
    }
    HtCircuit::new(q, ops)
}

/// Dense state-vector amplitude `<b| C |a>`, for cross-checking the
/// sum-over-paths oracle (q <= 12).
pub fn statevector_amplitude(
    circuit: &Circuit,
    input: &[bool],
    output: &[bool],
) -> Result<Complex64> {
    let q = circuit.qubits();
    if q > 12 {
        return Err(Error::resource(format!(
            "state-vector simulation limited to 12 qubits, got {q}"
        )));
    }
    if input.len() != q || output.len() != q {
        return Err(Error::domain("boundary bit-vector length mismatch"));
    }
    let dim = 1usize << q;
    let mut state = vec![Complex64::new(0.0, 0.0); dim];
    let a0: usize = input
        .iter()
        .enumerate()
        .map(|(i, &b)| (b as usize) << i)
        .sum();
    state[a0] = Complex64::new(1.0, 0.0);

    let ops: Vec<HtOp> = match circuit {
        Circuit::Iqp(c) => c.to_ops(),
        Circuit::Ht(c) => c.ops.clone(),
    };
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    for op in &ops {
        match op {
            HtOp::H(w) => {
                let bit = 1usize << w;
                for i in 0..dim {
                    if i & bit == 0 {
                        let lo = state[i];
                        let hi = state[i | bit];
                        state[i] = (lo + hi) * inv_sqrt2;
                        state[i | bit] = (lo - hi) * inv_sqrt2;
                    }
                }
            }
            HtOp::Toffoli {
                control1,
                control2,
                target,
            } => {
                let (c1, c2, t) = (1usize << control1, 1usize << control2, 1usize << target);
                for i in 0..dim {
                    if i & c1 != 0 && i & c2 != 0 && i & t == 0 {
                        state.swap(i, i | t);
                    }
                }
            }
            HtOp::Phase(g) => {
                let mask: usize = g.qubits().iter().map(|&w| 1usize << w).sum();
                let phase = Complex64::from_polar(1.0, g.theta());
                for (i, amp) in state.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp *= phase;
                    }
                }
            }
        }
    }
    let b0: usize = output
        .iter()
        .enumerate()
        .map(|(i, &b)| (b as usize) << i)
        .sum();
    Ok(state[b0])
}

/// The 3-qubit worked example: one gate of each degree behind a Hadamard
/// wall, `P(theta3)` on all three qubits, `P(theta2)` on the first two and
/// `P(theta1)` on the last.
pub fn example_circuit(theta1: f64, theta2: f64, theta3: f64) -> IqpCircuit {
    IqpCircuit::new(
        3,
        vec![vec![
            PhaseGate::new(theta3, vec![0, 1, 2]).unwrap(),
            PhaseGate::new(theta2, vec![0, 1]).unwrap(),
            PhaseGate::new(theta1, vec![2]).unwrap(),
        ]],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bits(s: &str) -> Vec<bool> {
        parse_bits(s).unwrap()
    }

    #[test]
    fn iqp_zero_zero_extraction_shape() {
        let circuit = example_circuit(PI / 2.0, PI / 4.0, PI / 8.0);
        let sop = extract_iqp(&circuit, &bits("000"), &bits("000")).unwrap();
        assert_eq!(sop.h, 6);
        assert_eq!(sop.poly.num_vars(), 3);
        assert_eq!(sop.poly.clauses().len(), 3);
        let expect = Polynomial::new(
            3,
            vec![
                (PI / 8.0, vec![0, 1, 2]),
                (PI / 4.0, vec![0, 1]),
                (PI / 2.0, vec![2]),
            ],
        )
        .unwrap();
        assert_eq!(sop.poly, expect);
    }

    #[test]
    fn worked_example_amplitude() {
        let circuit = Circuit::Iqp(example_circuit(PI / 2.0, PI / 4.0, PI / 8.0));
        let amp = circuit
            .amplitude_direct(&bits("000"), &bits("000"))
            .unwrap();
        assert!((amp - c(0.348, 0.511)).norm() < 5e-3, "got {amp}");
    }

    #[test]
    fn empty_diagonal_is_identity() {
        let circuit = Circuit::Iqp(IqpCircuit::new(1, vec![vec![]]).unwrap());
        let amp = circuit.amplitude_direct(&[false], &[false]).unwrap();
        assert!((amp - c(1.0, 0.0)).norm() < 1e-12);
        // and orthogonal boundary has amplitude 0
        let amp = circuit.amplitude_direct(&[false], &[true]).unwrap();
        assert!(amp.norm() < 1e-12);
    }

    #[test]
    fn single_qubit_phase_amplitude() {
        let theta = 1.1;
        let circuit = Circuit::Iqp(
            IqpCircuit::new(1, vec![vec![PhaseGate::new(theta, vec![0]).unwrap()]]).unwrap(),
        );
        let amp = circuit.amplitude_direct(&[false], &[false]).unwrap();
        let expect = (c(1.0, 0.0) + Complex64::from_polar(1.0, theta)) / 2.0;
        assert!((amp - expect).norm() < 1e-12);
    }

    #[test]
    fn two_qubit_cz_amplitude() {
        let circuit = Circuit::Iqp(
            IqpCircuit::new(2, vec![vec![PhaseGate::new(PI, vec![0, 1]).unwrap()]]).unwrap(),
        );
        let amp = circuit.amplitude_direct(&bits("00"), &bits("00")).unwrap();
        assert!((amp - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ht_example_polynomial() {
        // three wires; H wall, Toffoli(controls 0 and 2, target 1), H wall,
        // one extra H on wire 1
        let circuit = HtCircuit::new(
            3,
            vec![
                HtOp::H(0),
                HtOp::H(1),
                HtOp::H(2),
                HtOp::Toffoli {
                    control1: 0,
                    control2: 2,
                    target: 1,
                },
                HtOp::H(0),
                HtOp::H(1),
                HtOp::H(2),
                HtOp::H(1),
            ],
        )
        .unwrap();
        let sop = extract_ht(&circuit).unwrap();
        assert_eq!(sop.h, 7);
        assert_eq!(sop.poly.num_vars(), 10);
        let expect = Polynomial::new(
            10,
            vec![
                (PI, vec![0, 3]),
                (PI, vec![1, 4]),
                (PI, vec![2, 5]),
                (PI, vec![3, 6]),
                (PI, vec![4, 7]),
                (PI, vec![3, 5, 7]),
                (PI, vec![5, 8]),
                (PI, vec![7, 9]),
            ],
        )
        .unwrap();
        assert_eq!(sop.poly, expect);
        // conditions (x6, x9, x8)
        assert_eq!(sop.conditions[0], F2Expr::var(6));
        assert_eq!(sop.conditions[1], F2Expr::var(9));
        assert_eq!(sop.conditions[2], F2Expr::var(8));
        assert_eq!(sop.num_path_vars(), 3 + 7);
    }

    #[test]
    fn single_hadamard_amplitude() {
        let circuit = Circuit::Ht(HtCircuit::new(1, vec![HtOp::H(0)]).unwrap());
        let amp = circuit.amplitude_direct(&[false], &[false]).unwrap();
        assert!((amp - c(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn double_hadamard_is_identity() {
        let circuit = Circuit::Ht(HtCircuit::new(1, vec![HtOp::H(0), HtOp::H(0)]).unwrap());
        let amp = circuit.amplitude_direct(&[false], &[false]).unwrap();
        assert!((amp - c(1.0, 0.0)).norm() < 1e-12);
        let amp = circuit.amplitude_direct(&[false], &[true]).unwrap();
        assert!(amp.norm() < 1e-12);
    }

    #[test]
    fn toffoli_composite_condition_resolves_after_inputs() {
        // bare Toffoli: condition on the target wire is z xor x*y, which
        // becomes affine once the inputs are substituted
        let circuit = Circuit::Ht(
            HtCircuit::new(
                3,
                vec![HtOp::Toffoli {
                    control1: 0,
                    control2: 1,
                    target: 2,
                }],
            )
            .unwrap(),
        );
        let amp = circuit
            .amplitude_direct(&bits("110"), &bits("111"))
            .unwrap();
        assert!((amp - c(1.0, 0.0)).norm() < 1e-12);
        let amp = circuit
            .amplitude_direct(&bits("110"), &bits("110"))
            .unwrap();
        assert!(amp.norm() < 1e-12);
    }

    #[test]
    fn non_pi_phase_on_composite_expression_is_unsupported() {
        // Toffoli leaves a composite expression on wire 2; a pi/4 phase gate
        // there cannot be extracted
        let circuit = HtCircuit::new(
            3,
            vec![
                HtOp::Toffoli {
                    control1: 0,
                    control2: 1,
                    target: 2,
                },
                HtOp::Phase(PhaseGate::new(PI / 4.0, vec![2]).unwrap()),
            ],
        )
        .unwrap();
        let err = Circuit::Ht(circuit)
            .amplitude_direct(&bits("000"), &bits("000"))
            .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        // with a pi angle the same circuit xor-expands fine
        let ok = HtCircuit::new(
            3,
            vec![
                HtOp::Toffoli {
                    control1: 0,
                    control2: 1,
                    target: 2,
                },
                HtOp::Phase(PhaseGate::new(PI, vec![2]).unwrap()),
            ],
        )
        .unwrap();
        Circuit::Ht(ok)
            .amplitude_direct(&bits("000"), &bits("000"))
            .unwrap();
    }

    #[test]
    fn gate_counts_are_occurrences() {
        let circuit = example_circuit(0.1, 0.2, 0.3);
        let counts = circuit.gate_counts();
        assert_eq!((counts.deg1, counts.deg2, counts.deg3), (1, 1, 1));
        assert_eq!(counts.q, 3);

        let empty = IqpCircuit::new(3, vec![vec![]]).unwrap();
        let counts = empty.gate_counts();
        assert_eq!((counts.deg1, counts.deg2, counts.deg3), (0, 0, 0));

        let twice = IqpCircuit::new(
            2,
            vec![vec![
                PhaseGate::new(PI, vec![0, 1]).unwrap(),
                PhaseGate::new(PI, vec![0, 1]).unwrap(),
            ]],
        )
        .unwrap();
        let counts = twice.gate_counts();
        assert_eq!((counts.deg1, counts.deg2, counts.deg3), (0, 2, 0));
    }

    fn random_iqp(rng: &mut ChaCha8Rng, q: usize, max_gates: usize, layers: usize) -> IqpCircuit {
        let mut all_layers = Vec::new();
        for _ in 0..layers {
            let gates = rng.random_range(0..=max_gates);
            let mut layer = Vec::new();
            for _ in 0..gates {
                let d = rng.random_range(1..=3.min(q));
                let mut wires: Vec<usize> = (0..q).collect();
                for i in 0..d {
                    let j = rng.random_range(i..q);
                    wires.swap(i, j);
                }
                let theta = rng.random_range(0.05..6.2);
                layer.push(PhaseGate::new(theta, wires[..d].to_vec()).unwrap());
            }
            all_layers.push(layer);
        }
        IqpCircuit::new(q, all_layers).unwrap()
    }

    #[test]
    fn amplitude_matches_statevector_on_random_iqp() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let q = rng.random_range(1..=4);
            let circuit = Circuit::Iqp(random_iqp(&mut rng, q, 5, 1));
            let a: Vec<bool> = (0..q).map(|_| rng.random()).collect();
            let b: Vec<bool> = (0..q).map(|_| rng.random()).collect();
            let direct = circuit.amplitude_direct(&a, &b).unwrap();
            let sv = statevector_amplitude(&circuit, &a, &b).unwrap();
            assert!((direct - sv).norm() < 1e-10, "direct {direct} sv {sv}");
            assert!(direct.norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn amplitude_matches_statevector_on_multilayer_iqp() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..15 {
            let q = rng.random_range(1..=3);
            let layers = rng.random_range(2..=3);
            let circuit = Circuit::Iqp(random_iqp(&mut rng, q, 3, layers));
            let a: Vec<bool> = (0..q).map(|_| rng.random()).collect();
            let b: Vec<bool> = (0..q).map(|_| rng.random()).collect();
            let direct = circuit.amplitude_direct(&a, &b).unwrap();
            let sv = statevector_amplitude(&circuit, &a, &b).unwrap();
            assert!((direct - sv).norm() < 1e-10, "direct {direct} sv {sv}");
        }
    }

    #[test]
    fn amplitude_matches_statevector_on_ht() {
        let circuits = vec![
            HtCircuit::new(
                3,
                vec![
                    HtOp::H(0),
                    HtOp::H(1),
                    HtOp::H(2),
                    HtOp::Toffoli {
                        control1: 0,
                        control2: 2,
                        target: 1,
                    },
                    HtOp::H(0),
                    HtOp::H(1),
                    HtOp::H(2),
                    HtOp::H(1),
                ],
            )
            .unwrap(),
            HtCircuit::new(
                2,
                vec![
                    HtOp::H(0),
                    HtOp::Phase(PhaseGate::new(PI, vec![0, 1]).unwrap()),
                    HtOp::H(0),
                    HtOp::H(1),
                ],
            )
            .unwrap(),
        ];
        for ht in circuits {
            let q = ht.qubits();
            let circuit = Circuit::Ht(ht);
            for a_bits in 0..(1u32 << q) {
                for b_bits in 0..(1u32 << q) {
                    let a: Vec<bool> = (0..q).map(|i| a_bits & (1 << i) != 0).collect();
                    let b: Vec<bool> = (0..q).map(|i| b_bits & (1 << i) != 0).collect();
                    let direct = circuit.amplitude_direct(&a, &b).unwrap();
                    let sv = statevector_amplitude(&circuit, &a, &b).unwrap();
                    assert!((direct - sv).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn path_variable_count_is_q_plus_h() {
        let circuit = example_circuit(0.3, 0.6, 0.9);
        let ops_form = extract_ops(3, &circuit.to_ops()).unwrap();
        assert_eq!(ops_form.poly.num_vars(), 3 + ops_form.h);
        assert_eq!(ops_form.var_labels.len(), 3 + ops_form.h);
        assert_eq!(circuit.hadamard_count(), ops_form.h);
    }

    #[test]
    fn circuit_text_round_trip() {
        let circuit = example_circuit(PI / 2.0, PI / 4.0, PI / 8.0);
        let parsed = Circuit::parse(&circuit.to_text()).unwrap();
        assert_eq!(parsed, Circuit::Iqp(circuit));

        let ht = HtCircuit::new(
            2,
            vec![
                HtOp::H(0),
                HtOp::Toffoli {
                    control1: 0,
                    control2: 1,
                    target: 0,
                },
            ],
        );
        // invalid Toffoli rejected
        assert!(ht.is_err());

        let text = "iqp q=3\nz 0\ncz 0 1\nccz 0 1 2\nlayer\np 0.5 2\n";
        let parsed = Circuit::parse(text).unwrap();
        let Circuit::Iqp(c) = &parsed else { panic!() };
        assert_eq!(c.num_layers(), 2);
        assert_eq!(c.layers()[0].len(), 3);
        assert!((c.layers()[0][0].theta() - PI).abs() < 1e-15);
        let round = Circuit::parse(&parsed.to_text()).unwrap();
        assert_eq!(round, parsed);

        let text = "ht q=3\nh 0\nccx 0 1 2\np 1.25 0 1\ncz 1 2\n";
        let parsed = Circuit::parse(text).unwrap();
        let round = Circuit::parse(&parsed.to_text()).unwrap();
        assert_eq!(round, parsed);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Circuit::parse("nope q=1").is_err());
        assert!(Circuit::parse("iqp q=2\nfoo 1\n").is_err());
        assert!(Circuit::parse("iqp q=2\np 0.5 5\n").is_err());
    }
}
