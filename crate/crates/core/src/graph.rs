//! Assembly of clause gadgets and variable cycles into an encoded graph.
//!
//! For a polynomial in canonical form the graph carries one gadget block per
//! clause and one anchor vertex per occurring variable. The anchor has a
//! self-loop of weight 1 and a weight-1 directed cycle through one outer
//! vertex of every clause containing the variable; the presence of that
//! cycle in a cycle cover encodes the assignment `x = 0`, its absence
//! `x = 1`. The scalar `multiplier` collects the constant phase and a factor
//! 2 per clause-free variable, so that
//!
//! `multiplier * per(adjacency) = sum_x e^{i f(x)}`.

use num_complex::Complex64;
use serde::Deserialize;

use crate::circuit::{extract_iqp, IqpCircuit};
use crate::error::{Error, Result};
use crate::gadgets::gadget_matrix;
use crate::permanent::{permanent, ComplexMatrix, PermanentMethod};
use crate::poly::Polynomial;

/// Anchor and cycle layout for one encoded variable.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct VariableMeta {
    /// Variable index in the source polynomial.
    pub var: usize,
    /// Anchor vertex (self-loop of weight 1).
    pub anchor: usize,
    /// Cyclic vertex sequence starting at the anchor: the cycle edges are
    /// consecutive pairs plus the wrap-around back to the anchor. A lone
    /// `[anchor]` entry denotes a clause-free variable kept as an isolated
    /// self-loop vertex.
    pub cycle: Vec<usize>,
}

/// Vertex range of one clause gadget.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ClauseMeta {
    pub degree: usize,
    /// First vertex of the gadget block.
    pub start: usize,
    /// Block size (`degree + inner`).
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
pub struct GraphMeta {
    pub variables: Vec<VariableMeta>,
    pub clauses: Vec<ClauseMeta>,
}

/// Weighted digraph whose permanent, times `multiplier`, equals the
/// exponential sum of the source polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedGraph {
    adjacency: ComplexMatrix,
    multiplier: Complex64,
    meta: GraphMeta,
}

impl EncodedGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.order()
    }

    pub fn adjacency(&self) -> &ComplexMatrix {
        &self.adjacency
    }

    pub fn multiplier(&self) -> Complex64 {
        self.multiplier
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    /// `multiplier * per(adjacency)`, the encoded exponential sum.
    pub fn encoded_sum(&self, method: PermanentMethod) -> Result<Complex64> {
        Ok(self.multiplier * permanent(&self.adjacency, method)?)
    }
}

fn gadget_block_len(degree: usize) -> Result<usize> {
    match degree {
        1 => Ok(1),
        2 => Ok(3),
        3 => Ok(5),
        d => Err(Error::unsupported(format!(
            "clause of degree {d} has no gadget (supported degrees: 1, 2, 3)"
        ))),
    }
}

fn encode_with_options(poly: &Polynomial, keep_clause_free: bool) -> Result<EncodedGraph> {
    // reject unencodable clauses first, naming the offender
    for (idx, clause) in poly.clauses().iter().enumerate() {
        if clause.degree() > 3 {
            return Err(Error::unsupported(format!(
                "clause {idx} on variables {:?} has degree {} > 3",
                clause.vars(),
                clause.degree()
            )));
        }
    }

    let occurring = poly.occurring_vars();
    let anchored: Vec<usize> = if keep_clause_free {
        (0..poly.num_vars()).collect()
    } else {
        occurring.clone()
    };
    let clause_free = poly.num_vars() - occurring.len();

    // layout: anchors first (in variable order), then gadget blocks in
    // clause order
    let mut anchor_of = vec![usize::MAX; poly.num_vars()];
    for (i, &v) in anchored.iter().enumerate() {
        anchor_of[v] = i;
    }
    let mut clause_meta = Vec::with_capacity(poly.clauses().len());
    let mut pos = anchored.len();
    for clause in poly.clauses() {
        let len = gadget_block_len(clause.degree())?;
        clause_meta.push(ClauseMeta {
            degree: clause.degree(),
            start: pos,
            len,
        });
        pos += len;
    }
    let n = pos;
    let mut adjacency = ComplexMatrix::zeros(n);

    for (i, _) in anchored.iter().enumerate() {
        adjacency[(i, i)] = Complex64::new(1.0, 0.0);
    }
    for (clause, meta) in poly.clauses().iter().zip(&clause_meta) {
        let gadget = gadget_matrix(clause.degree(), clause.theta())?;
        let m = gadget.matrix();
        for i in 0..meta.len {
            for j in 0..meta.len {
                adjacency[(meta.start + i, meta.start + j)] = m[(i, j)];
            }
        }
    }

    // weight-1 variable cycles: anchor -> outer vertex of each containing
    // clause, in clause order, -> anchor
    let one = Complex64::new(1.0, 0.0);
    let mut variables = Vec::with_capacity(anchored.len());
    for &v in &anchored {
        let anchor = anchor_of[v];
        let mut cycle = vec![anchor];
        for (clause, meta) in poly.clauses().iter().zip(&clause_meta) {
            if let Some(slot) = clause.vars().iter().position(|&u| u == v) {
                cycle.push(meta.start + slot);
            }
        }
        for k in 0..cycle.len() {
            let from = cycle[k];
            let to = cycle[(k + 1) % cycle.len()];
            if from != to {
                adjacency[(from, to)] = one;
            }
        }
        variables.push(VariableMeta {
            var: v,
            anchor,
            cycle,
        });
    }

    let multiplier =
        Complex64::from_polar(1.0, poly.constant_phase()) * 2f64.powi(clause_free as i32);
    Ok(EncodedGraph {
        adjacency,
        multiplier,
        meta: GraphMeta {
            variables,
            clauses: clause_meta,
        },
    })
}

/// Encodes a canonical polynomial. Clause-free variables contribute a factor
/// 2 to the multiplier and no vertex.
pub fn encode_polynomial(poly: &Polynomial) -> Result<EncodedGraph> {
    encode_with_options(poly, false)
}

/// Encodes the zero-zero amplitude of an IQP circuit: the amplitude is
/// `scale * multiplier * per(adjacency)` with the returned
/// `scale = 1/sqrt(2)^h`.
///
/// Unlike [`encode_polynomial`], free variables without clauses keep their
/// anchor vertex so the vertex count matches [`predicted_node_count`] on
/// IQP-1 circuits (their permanent contribution is the self-loop weight 1;
/// the factor 2 still goes to the multiplier).
pub fn encode_zero_zero(circuit: &IqpCircuit) -> Result<(EncodedGraph, f64)> {
    let q = circuit.qubits();
    let zeros = vec![false; q];
    let sop = extract_iqp(circuit, &zeros, &zeros)?;
    let graph = encode_with_options(&sop.poly, true)?;
    let h = sop.h as i32;
    let scale = if h % 2 == 0 {
        2f64.powi(-h / 2)
    } else {
        2f64.powi(-(h / 2)) / 2f64.sqrt()
    };
    Ok((graph, scale))
}

/// Predicted vertex counts for the zero-zero encoding of an IQP-1 circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCounts {
    /// This encoding: `q + #deg1 + 3 #deg2 + 5 #deg3`.
    pub encoded: usize,
    /// The 9-node-per-cubic-gadget encoding it supersedes:
    /// `2q + #deg1 + 3 #deg2 + 9 #deg3`.
    pub rudolph: usize,
}

/// Vertex-count formulas for IQP-1 circuits. Counts are per gate
/// occurrence; the formula matches the built graph when the diagonal gates
/// have pairwise distinct supports and angles that do not cancel (the
/// canonical polynomial merges duplicates).
pub fn predicted_node_count(circuit: &IqpCircuit) -> Result<NodeCounts> {
    if circuit.num_layers() != 1 {
        return Err(Error::domain(format!(
            "node-count formulas apply to single-layer IQP circuits, got {} layers",
            circuit.num_layers()
        )));
    }
    let counts = circuit.gate_counts();
    Ok(NodeCounts {
        encoded: counts.q + counts.deg1 + 3 * counts.deg2 + 5 * counts.deg3,
        rudolph: 2 * counts.q + counts.deg1 + 3 * counts.deg2 + 9 * counts.deg3,
    })
}

/// Formats a float with 17 significant digits (round-trips `f64` exactly).
pub(crate) fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes to the sparse JSON graph format. Entries are sorted by
/// `(i, j)`; floats carry 17 significant digits, so parsing recovers the
/// graph bit-exactly.
pub fn export_graph_json(g: &EncodedGraph) -> String {
    let n = g.vertex_count();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = g.adjacency[(i, j)];
            if z != Complex64::new(0.0, 0.0) {
                entries.push(format!("[{},{},{},{}]", i, j, fmt_g17(z.re), fmt_g17(z.im)));
            }
        }
    }
    let variables: Vec<String> = g
        .meta
        .variables
        .iter()
        .map(|v| {
            let cycle: Vec<String> = v.cycle.iter().map(|x| x.to_string()).collect();
            format!(
                "{{\"var\":{},\"anchor\":{},\"cycle\":[{}]}}",
                v.var,
                v.anchor,
                cycle.join(",")
            )
        })
        .collect();
    let clauses: Vec<String> = g
        .meta
        .clauses
        .iter()
        .map(|c| {
            format!(
                "{{\"degree\":{},\"start\":{},\"len\":{}}}",
                c.degree, c.start, c.len
            )
        })
        .collect();
    format!(
        "{{\"n\":{},\"entries\":[{}],\"multiplier\":[{},{}],\"meta\":{{\"variables\":[{}],\"clauses\":[{}]}}}}",
        n,
        entries.join(","),
        fmt_g17(g.multiplier.re),
        fmt_g17(g.multiplier.im),
        variables.join(","),
        clauses.join(",")
    )
}

/// Serializes the adjacency matrix alone in the dense text format
/// (multiplier and metadata are JSON-only).
pub fn export_graph_dense(g: &EncodedGraph) -> String {
    g.adjacency.to_text()
}

#[derive(Deserialize)]
struct JsonGraph {
    n: usize,
    entries: Vec<(usize, usize, f64, f64)>,
    multiplier: (f64, f64),
    #[serde(default)]
    meta: GraphMeta,
}

/// Parses the sparse JSON graph format.
pub fn parse_graph_json(text: &str) -> Result<EncodedGraph> {
    let raw: JsonGraph =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("bad graph JSON: {e}")))?;
    let mut adjacency = ComplexMatrix::zeros(raw.n);
    for (i, j, re, im) in raw.entries {
        if i >= raw.n || j >= raw.n {
            return Err(Error::parse(format!(
                "entry ({i},{j}) out of range for {} vertices",
                raw.n
            )));
        }
        adjacency[(i, j)] = Complex64::new(re, im);
    }
    Ok(EncodedGraph {
        adjacency,
        multiplier: Complex64::new(raw.multiplier.0, raw.multiplier.1),
        meta: raw.meta,
    })
}
