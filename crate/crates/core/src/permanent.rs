//! Permanent engines and matrix analysis.
//!
//! `per A = sum_{sigma in S_n} prod_i a_{i,sigma(i)}`. Four engines are
//! provided: the defining sum over permutations, Ryser's inclusion-exclusion
//! formula with Gray-code updates, a cycle-cover enumerator (which doubles as
//! the semantic oracle for graph encodings), and a block decomposition that
//! splits the matrix into connected components of its symmetrized support
//! before running Ryser per block.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const NAIVE_CAP: usize = 10;
const RYSER_CAP: usize = 32;
const COVER_CAP: usize = 8;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major slice of length `n*n`.
    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::domain(format!(
                "matrix data length {} does not match order {n}",
                data.len()
            )));
        }
        Ok(ComplexMatrix { n, data })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Submatrix keeping the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> ComplexMatrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self[(i, j)]);
            }
        }
        ComplexMatrix {
            n: rows.len(),
            data,
        }
    }

    /// Principal submatrix on `keep`.
    pub fn principal(&self, keep: &[usize]) -> ComplexMatrix {
        self.submatrix(keep, keep)
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// `self + eps * I`.
    pub fn shift_diagonal(&self, eps: f64) -> ComplexMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out[(i, i)] += eps;
        }
        out
    }

    /// Max row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Serializes to the dense text format: first line `n`, then `n` lines of
    /// `re+imj` tokens.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{}{:+}j", z.re, z.im))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the dense text format. Tokens may be `re+imj`, `re-imj`, a bare
    /// real, or a bare imaginary like `1.5j`.
    pub fn parse(text: &str) -> Result<ComplexMatrix> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::parse("empty matrix file"))?
            .parse()
            .map_err(|e| Error::parse(format!("bad matrix order: {e}")))?;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(format!("expected {n} matrix rows")))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != n {
                return Err(Error::parse(format!(
                    "expected {n} entries per row, got {} in {line:?}",
                    toks.len()
                )));
            }
            for t in toks {
                data.push(parse_complex(t)?);
            }
        }
        ComplexMatrix::from_rows(n, data)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Parses one complex token such as `1.5-0.25j`, `2`, `-1j` or `1e-3+2e-4j`.
pub fn parse_complex(tok: &str) -> Result<Complex64> {
    let t = tok.trim();
    let bad = || Error::parse(format!("bad complex token {tok:?}"));
    if let Some(body) = t.strip_suffix(['j', 'i']) {
        // split before the imaginary part: the last sign not at the start
        // and not an exponent sign
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = body[..k].parse().map_err(|_| bad())?;
                let im: f64 = match &body[k..] {
                    "+" => 1.0,
                    "-" => -1.0,
                    s => s.parse().map_err(|_| bad())?,
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    s => s.parse().map_err(|_| bad())?,
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// Permanent engine selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermanentMethod {
    /// Defining sum over all permutations (n <= 10).
    Naive,
    /// Ryser's inclusion-exclusion with Gray-code subset iteration (n <= 32).
    Ryser,
    /// Sum over enumerated cycle covers (n <= 8).
    CycleCover,
    /// Split into connected components of the symmetrized support, then run
    /// Ryser per block and multiply.
    BlockAuto,
}

impl std::str::FromStr for PermanentMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(PermanentMethod::Naive),
            "ryser" => Ok(PermanentMethod::Ryser),
            "cycle_cover" | "cycle-cover" => Ok(PermanentMethod::CycleCover),
            "block_auto" | "block-auto" | "auto" => Ok(PermanentMethod::BlockAuto),
            other => Err(Error::domain(format!("unknown permanent method {other:?}"))),
        }
    }
}

/// Computes the permanent with the chosen engine. `per` of the empty matrix
/// is 1 for every engine.
pub fn permanent(m: &ComplexMatrix, method: PermanentMethod) -> Result<Complex64> {
    match method {
        PermanentMethod::Naive => {
            cap_check(m.n, NAIVE_CAP, "naive permanent")?;
            Ok(permanent_naive(m))
        }
        PermanentMethod::Ryser => {
            cap_check(m.n, RYSER_CAP, "ryser permanent")?;
            Ok(permanent_ryser(m))
        }
        PermanentMethod::CycleCover => {
            cap_check(m.n, COVER_CAP, "cycle-cover permanent")?;
            Ok(enumerate_cycle_covers(m)?.iter().map(|c| c.weight).sum())
        }
        PermanentMethod::BlockAuto => permanent_block_auto(m),
    }
}

fn cap_check(n: usize, cap: usize, what: &str) -> Result<()> {
    if n > cap {
        return Err(Error::resource(format!(
            "{what} limited to order {cap}, got {n}"
        )));
    }
    Ok(())
}

fn permanent_naive(m: &ComplexMatrix) -> Complex64 {
    fn rec(m: &ComplexMatrix, row: usize, used: u32, acc: Complex64) -> Complex64 {
        if row == m.order() {
            return acc;
        }
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..m.order() {
            if used & (1 << j) != 0 {
                continue;
            }
            let a = m[(row, j)];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            total += rec(m, row + 1, used | (1 << j), acc * a);
        }
        total
    }
    if m.order() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    rec(m, 0, 0, Complex64::new(1.0, 0.0))
}

/// Ryser's formula, `O(2^n * n)` via Gray-code column-set updates:
/// `per A = (-1)^n sum_{S != 0} (-1)^{|S|} prod_i sum_{j in S} a_ij`.
fn permanent_ryser(m: &ComplexMatrix) -> Complex64 {
    let n = m.order();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut prev_gray = 0u64;
    for k in 1u64..=((1u64 << n) - 1) {
        let gray = k ^ (k >> 1);
        let changed = (gray ^ prev_gray).trailing_zeros() as usize;
        if gray & (1 << changed) != 0 {
            for i in 0..n {
                row_sums[i] += m[(i, changed)];
            }
        } else {
            for i in 0..n {
                row_sums[i] -= m[(i, changed)];
            }
        }
        prev_gray = gray;
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 0 {
        total
    } else {
        -total
    }
}

/// Connected components of the symmetrized support (`i ~ j` when `a_ij != 0`
/// or `a_ji != 0`), each sorted ascending.
pub fn support_components(m: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = m.order();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let zero = Complex64::new(0.0, 0.0);
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        comp[start] = id;
        while let Some(v) = stack.pop() {
            members.push(v);
            for u in 0..n {
                if comp[u] == usize::MAX && (m[(v, u)] != zero || m[(u, v)] != zero) {
                    comp[u] = id;
                    stack.push(u);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

fn permanent_block_auto(m: &ComplexMatrix) -> Result<Complex64> {
    let mut total = Complex64::new(1.0, 0.0);
    for comp in support_components(m) {
        let block = m.principal(&comp);
        cap_check(block.order(), RYSER_CAP, "block permanent")?;
        total *= permanent_ryser(&block);
    }
    Ok(total)
}

/// A permutation with nonzero weight, i.e. one cycle cover of the weighted
/// digraph whose adjacency matrix is the input.
#[derive(Debug, Clone)]
pub struct CycleCover {
    /// `permutation[i]` is the successor of vertex `i`.
    pub permutation: Vec<usize>,
    /// Product of the traversed edge weights.
    pub weight: Complex64,
}

impl CycleCover {
    /// Decomposes the permutation into its cycles, each starting at its
    /// smallest vertex.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.permutation.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                cyc.push(v);
                v = self.permutation[v];
            }
            out.push(cyc);
        }
        out
    }
}

/// Enumerates every cycle cover (permutation with nonzero weight), in
/// lexicographic permutation order. The weights sum to the permanent.
pub fn enumerate_cycle_covers(m: &ComplexMatrix) -> Result<Vec<CycleCover>> {
    cap_check(m.order(), COVER_CAP, "cycle cover enumeration")?;
    let n = m.order();
    let mut covers = Vec::new();
    let mut perm = vec![0usize; n];
    fn rec(
        m: &ComplexMatrix,
        row: usize,
        used: u32,
        acc: Complex64,
        perm: &mut Vec<usize>,
        covers: &mut Vec<CycleCover>,
    ) {
        let n = m.order();
        if row == n {
            covers.push(CycleCover {
                permutation: perm.clone(),
                weight: acc,
            });
            return;
        }
        for j in 0..n {
            if used & (1 << j) != 0 || m[(row, j)] == Complex64::new(0.0, 0.0) {
                continue;
            }
            perm[row] = j;
            rec(m, row + 1, used | (1 << j), acc * m[(row, j)], perm, covers);
        }
    }
    if n == 0 {
        // the empty permutation covers the empty graph with weight 1
        covers.push(CycleCover {
            permutation: Vec::new(),
            weight: Complex64::new(1.0, 0.0),
        });
        return Ok(covers);
    }
    rec(m, 0, 0, Complex64::new(1.0, 0.0), &mut perm, &mut covers);
    Ok(covers)
}

/// Gurvits/Glynn randomized estimator of the permanent: the mean over `N`
/// i.i.d. draws of `prod_i (Ax)_i * prod_i x_i` with `x` uniform over
/// `{-1, 1}^n`. Unbiased; additive error `O(||A||_2^n / sqrt(N))`.
///
/// Each sample draws from its own RNG stream derived from
/// `(seed, sample index)`, so any parallel split reproduces the serial
/// result bit for bit.
pub fn gurvits_estimate(m: &ComplexMatrix, samples: u64, seed: u64) -> Complex64 {
    gurvits_estimate_with_stderr(m, samples, seed).0
}

/// Same as [`gurvits_estimate`], also returning the standard error of the
/// mean (treating complex samples as points in the plane).
pub fn gurvits_estimate_with_stderr(
    m: &ComplexMatrix,
    samples: u64,
    seed: u64,
) -> (Complex64, f64) {
    let n = m.order();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0f64;
    let mut signs = vec![1.0f64; n];
    for k in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        for s in signs.iter_mut() {
            *s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let mut value = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (j, &s) in signs.iter().enumerate() {
                dot += m[(i, j)] * s;
            }
            value *= dot;
        }
        let sign: f64 = signs.iter().product();
        let sample = value * sign;
        sum += sample;
        sum_sq += sample.norm_sqr();
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean.norm_sqr()).max(0.0);
    let stderr = if samples > 1 {
        (var / (samples - 1) as f64).sqrt()
    } else {
        f64::INFINITY
    };
    (mean, stderr)
}

/// Largest singular value by power iteration on `A^H A`.
///
/// The start vector is the normalized all-ones vector; if it lies in the
/// null space a deterministic ramp vector and then the standard basis are
/// tried, so a zero result certifies `A = 0`.
pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    spectral_norm_with(m, 1e-10, 10_000)
}

pub fn spectral_norm_with(m: &ComplexMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = m.order();
    if n == 0 {
        return Ok(0.0);
    }
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)] * v[j]).sum())
            .collect()
    };
    let apply_adj = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|j| (0..n).map(|i| m[(i, j)].conj() * v[i]).sum())
            .collect()
    };
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    // candidate start vectors until one has a nonzero image
    let mut start = None;
    let ones: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n];
    let ramp: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new((i + 1) as f64, 0.0))
        .collect();
    let mut candidates: Vec<Vec<Complex64>> = vec![ones, ramp];
    for i in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[i] = Complex64::new(1.0, 0.0);
        candidates.push(e);
    }
    for cand in candidates {
        if norm(&apply(&cand)) > 0.0 {
            start = Some(cand);
            break;
        }
    }
    let Some(mut v) = start else {
        // every basis image is zero, so the matrix is zero
        return Ok(0.0);
    };
    let nv = norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }

    let mut sigma = 0.0f64;
    for iter in 0..max_iter {
        let w = apply(&v);
        let new_sigma = norm(&w); // ||Av|| for unit v: Rayleigh estimate of sigma_max
        if new_sigma == 0.0 {
            return Ok(0.0);
        }
        let u = apply_adj(&w);
        let nu = norm(&u);
        if nu == 0.0 {
            return Ok(new_sigma);
        }
        v = u.into_iter().map(|z| z / nu).collect();
        if iter > 0 && (new_sigma - sigma).abs() <= tol * new_sigma.max(f64::MIN_POSITIVE) {
            return Ok(new_sigma);
        }
        sigma = new_sigma;
    }
    Err(Error::Numeric(format!(
        "spectral norm power iteration did not converge within {max_iter} iterations (last estimate {sigma})"
    )))
}
