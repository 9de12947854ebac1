//! Monte-Carlo simulation of the two estimation schemes and the
//! diagonal-shift recovery of `|per A|^2`.
//!
//! Both schemes reduce to Bernoulli sampling against an exactly computable
//! post-selection probability, so the simulation draws coin flips rather
//! than modeling interferometers; the estimate is the rescaled hit rate.
//! The shift technique evaluates `|per(A + eps I)|^2` at several `eps`,
//! fits the even polynomial through the points and reads off the constant
//! term `|per A|^2`.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, IqpCircuit};
use crate::error::{Error, Result};
use crate::graph::encode_zero_zero;
use crate::permanent::{permanent, spectral_norm, ComplexMatrix, PermanentMethod};
use crate::resource::{success_prob_klm, SchemeParams};

/// Which estimation pipeline is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Post-select on one photon in each of the first `M` modes of the
    /// interferometer hosting the encoded graph.
    GraphEncoding,
    /// Gate-by-gate linear optics; post-select on every heralded gate
    /// succeeding and the all-zeros outcome.
    NonAdaptiveKlm,
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph" | "graph_encoding" => Ok(SchemeKind::GraphEncoding),
            "klm" | "nonadaptive_klm" => Ok(SchemeKind::NonAdaptiveKlm),
            other => Err(Error::domain(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Exact per-circuit quantities driving a scheme simulation.
#[derive(Debug, Clone, Copy)]
pub struct SchemeContext {
    pub scheme: SchemeKind,
    /// Exact probability of one sample being post-selected.
    pub p_true: f64,
    /// Factor turning the hit rate into a zero-zero-probability estimate.
    pub rescale: f64,
    /// Exact zero-zero probability, for error reporting.
    pub exact_probability: f64,
}

/// Exact post-selection probability of the scheme on the circuit's
/// zero-zero estimation task.
pub fn true_postselect_prob(
    scheme: SchemeKind,
    circuit: &IqpCircuit,
    params: &SchemeParams,
) -> Result<f64> {
    Ok(scheme_context(scheme, circuit, params)?.p_true)
}

/// Computes post-selection probability, rescale factor and the exact
/// zero-zero probability for a scheme/circuit pair.
pub fn scheme_context(
    scheme: SchemeKind,
    circuit: &IqpCircuit,
    params: &SchemeParams,
) -> Result<SchemeContext> {
    let q = circuit.qubits();
    let zeros = vec![false; q];
    let amp = Circuit::Iqp(circuit.clone()).amplitude_direct(&zeros, &zeros)?;
    let exact_probability = amp.norm_sqr();
    match scheme {
        SchemeKind::GraphEncoding => {
            let (graph, _) = encode_zero_zero(circuit)?;
            let m = graph.vertex_count();
            let per = permanent(graph.adjacency(), PermanentMethod::BlockAuto)?;
            let norm = spectral_norm(graph.adjacency())?;
            let norm_pow = norm.powi(2 * m as i32);
            let p_true = per.norm_sqr() / norm_pow;
            if p_true > 1.0 + 1e-9 {
                return Err(Error::Numeric(format!(
                    "post-selection probability {p_true} exceeds 1: |per|^2 is not bounded by ||G||^(2M)"
                )));
            }
            let mult_sq = graph.multiplier().norm_sqr();
            let rescale = mult_sq * norm_pow / 4f64.powi(q as i32);
            Ok(SchemeContext {
                scheme,
                p_true: p_true.min(1.0),
                rescale,
                exact_probability,
            })
        }
        SchemeKind::NonAdaptiveKlm => {
            let (p_s, _) = success_prob_klm(&circuit.gate_counts(), params);
            Ok(SchemeContext {
                scheme,
                p_true: exact_probability * p_s,
                rescale: 1.0 / p_s,
                exact_probability,
            })
        }
    }
}

/// One simulated estimation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationRun {
    pub samples: u64,
    pub post_selected: u64,
    /// `rescale * post_selected / samples`.
    pub estimate: f64,
}

/// Draws `samples` Bernoulli outcomes at the scheme's exact post-selection
/// probability and rescales the hit rate. Each draw uses its own RNG stream
/// keyed by `(seed, index)`, so results are reproducible and independent of
/// any parallel splitting.
pub fn simulate_estimation(ctx: &SchemeContext, samples: u64, seed: u64) -> EstimationRun {
    let mut hits = 0u64;
    for k in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        if rng.random::<f64>() < ctx.p_true {
            hits += 1;
        }
    }
    EstimationRun {
        samples,
        post_selected: hits,
        estimate: ctx.rescale * hits as f64 / samples as f64,
    }
}

const SHIFT_COEFF_CAP: usize = 10;

/// Exact coefficients of `per(A + eps I) = sum_i c_i eps^i`:
/// `c_i` sums the permanents of `A` with `i` diagonal rows/columns deleted,
/// so `c_0 = per A` and `c_M = 1`.
pub fn eps_poly_coeffs(matrix: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let m = matrix.order();
    if m > SHIFT_COEFF_CAP {
        return Err(Error::resource(format!(
            "shift-polynomial coefficients limited to order {SHIFT_COEFF_CAP}, got {m}"
        )));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m + 1];
    for mask in 0u32..(1 << m) {
        let keep: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) == 0).collect();
        let deleted = m - keep.len();
        let sub = matrix.principal(&keep);
        coeffs[deleted] += permanent(&sub, PermanentMethod::Ryser)?;
    }
    Ok(coeffs)
}

/// Matrix plus the shift amounts at which `|per(A + eps I)|^2` is evaluated.
#[derive(Debug, Clone)]
pub struct BoostSetup {
    pub matrix: ComplexMatrix,
    pub epsilons: Vec<f64>,
}

impl BoostSetup {
    /// Requires at least `2M + 1` distinct non-negative shifts: the target
    /// `|per(A + eps I)|^2` is a real polynomial of degree `2M` in `eps`.
    pub fn new(matrix: ComplexMatrix, epsilons: Vec<f64>) -> Result<Self> {
        let need = 2 * matrix.order() + 1;
        if epsilons.len() < need {
            return Err(Error::domain(format!(
                "need at least {need} shift values for order {}, got {}",
                matrix.order(),
                epsilons.len()
            )));
        }
        for (i, &e) in epsilons.iter().enumerate() {
            if e < 0.0 {
                return Err(Error::domain(format!("shift {e} is negative")));
            }
            if epsilons[..i].contains(&e) {
                return Err(Error::domain(format!("duplicate shift value {e}")));
            }
        }
        Ok(BoostSetup { matrix, epsilons })
    }

    /// Chebyshev-spaced shifts on `[0, 2]`, the default evaluation grid.
    pub fn chebyshev(matrix: ComplexMatrix) -> Self {
        let count = 2 * matrix.order() + 1;
        BoostSetup {
            matrix,
            epsilons: chebyshev_points(count, 0.0, 2.0),
        }
    }
}

/// `count` Chebyshev nodes mapped to `[lo, hi]`.
pub fn chebyshev_points(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mid = (lo + hi) / 2.0;
    let half = (hi - lo) / 2.0;
    (0..count)
        .map(|k| {
            mid + half * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos()
        })
        .collect()
}

/// Result of the shift recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostResult {
    /// Recovered `|per A|^2` (the fitted polynomial at 0).
    pub recovered: f64,
    /// All `2M + 1` fitted coefficients of `|per(A + eps I)|^2` in `eps`
    /// (`recovered` is the constant term).
    pub coefficients: Vec<f64>,
    /// Crude conditioning estimate of the solve (max/min pivot ratio).
    pub condition_estimate: f64,
    /// Set when the solve looks ill-conditioned.
    pub condition_warning: bool,
}

/// Recovers `|per A|^2` from evaluations of `|per(A + eps I)|^2` by fitting
/// the degree-`2M` polynomial through the first `2M + 1` points (Vandermonde
/// solve with partial pivoting). With `evaluations = None` the values are
/// computed exactly with the Ryser engine.
pub fn boost_recover(setup: &BoostSetup, evaluations: Option<&[f64]>) -> Result<BoostResult> {
    let m = setup.matrix.order();
    let points = 2 * m + 1;
    let eps = &setup.epsilons[..points];
    let values: Vec<f64> = match evaluations {
        Some(vals) => {
            if vals.len() < points {
                return Err(Error::domain(format!(
                    "need {points} evaluations, got {}",
                    vals.len()
                )));
            }
            vals[..points].to_vec()
        }
        None => {
            let mut vals = Vec::with_capacity(points);
            for &e in eps {
                let shifted = setup.matrix.shift_diagonal(e);
                vals.push(permanent(&shifted, PermanentMethod::Ryser)?.norm_sqr());
            }
            vals
        }
    };

    // Vandermonde system: rows [1, eps, eps^2, ..., eps^{2M}]
    let mut a = vec![vec![0.0f64; points]; points];
    for (r, &e) in eps.iter().enumerate() {
        let mut p = 1.0;
        for c in 0..points {
            a[r][c] = p;
            p *= e;
        }
    }
    let mut b = values;
    let (solution, condition_estimate) = solve_with_pivoting(&mut a, &mut b)?;
    Ok(BoostResult {
        recovered: solution[0],
        coefficients: solution,
        condition_estimate,
        condition_warning: condition_estimate > 1e12,
    })
}

/// Gaussian elimination with partial pivoting; returns the solution and the
/// max/min absolute pivot ratio.
fn solve_with_pivoting(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[pivot_row][col] == 0.0 {
            return Err(Error::Numeric("singular shift system".into()));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let p = a[col][col];
        max_pivot = max_pivot.max(p.abs());
        min_pivot = min_pivot.min(p.abs());
        for row in (col + 1)..n {
            let factor = a[row][col] / p;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok((x, max_pivot / min_pivot))
}

/// Spectral-norm bounds of the shifted matrix `A + eps I` for encoded-graph
/// adjacencies: `1 + eps <= ||A + eps I||_2 <= ||A||_inf + eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftNormBounds {
    pub lower: f64,
    pub upper: f64,
    pub observed: f64,
    pub pass: bool,
}

pub fn boosted_norm_bounds(matrix: &ComplexMatrix, eps: f64) -> Result<ShiftNormBounds> {
    if eps < 0.0 {
        return Err(Error::domain(format!("shift {eps} is negative")));
    }
    let lower = 1.0 + eps;
    let upper = matrix.norm_inf() + eps;
    let observed = spectral_norm(&matrix.shift_diagonal(eps))?;
    let tol = 1e-9 * upper.max(1.0);
    Ok(ShiftNormBounds {
        lower,
        upper,
        observed,
        pass: observed >= lower - tol && observed <= upper + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{example_circuit, PhaseGate};
    use crate::graph::encode_polynomial;
    use crate::poly::Polynomial;
    use crate::resource::{epsilon_for, hoeffding_samples};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let data: Vec<Complex64> = (0..n * n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_rows(n, data).unwrap()
    }

    fn single_cz_circuit() -> IqpCircuit {
        IqpCircuit::new(2, vec![vec![PhaseGate::new(PI, vec![0, 1]).unwrap()]]).unwrap()
    }

    #[test]
    fn klm_postselection_single_cz() {
        let p = true_postselect_prob(
            SchemeKind::NonAdaptiveKlm,
            &single_cz_circuit(),
            &SchemeParams::default(),
        )
        .unwrap();
        assert!((p - 1.0 / 54.0).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn identity_circuit_klm_probability_one() {
        let circuit = IqpCircuit::new(2, vec![vec![]]).unwrap();
        let ctx = scheme_context(
            SchemeKind::NonAdaptiveKlm,
            &circuit,
            &SchemeParams::default(),
        )
        .unwrap();
        assert!((ctx.p_true - 1.0).abs() < 1e-12);
        assert!((ctx.rescale - 1.0).abs() < 1e-12);
        let run = simulate_estimation(&ctx, 500, 3);
        assert_eq!(run.post_selected, 500);
        assert!((run.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graph_scheme_estimates_are_unbiased() {
        let ctx = scheme_context(
            SchemeKind::GraphEncoding,
            &single_cz_circuit(),
            &SchemeParams::default(),
        )
        .unwrap();
        // rescale * p_true must equal the exact zero-zero probability
        assert!(
            (ctx.rescale * ctx.p_true - ctx.exact_probability).abs() < 1e-12,
            "{ctx:?}"
        );
        assert!((ctx.exact_probability - 0.25).abs() < 1e-12);
        assert!(ctx.p_true > 0.0 && ctx.p_true < 1.0);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let ctx = scheme_context(
            SchemeKind::NonAdaptiveKlm,
            &single_cz_circuit(),
            &SchemeParams::default(),
        )
        .unwrap();
        let a = simulate_estimation(&ctx, 2000, 11);
        let b = simulate_estimation(&ctx, 2000, 11);
        assert_eq!(a, b);
        let c = simulate_estimation(&ctx, 2000, 12);
        assert_ne!(a.post_selected, c.post_selected);
    }

    #[test]
    fn estimates_concentrate_with_samples() {
        for scheme in [SchemeKind::NonAdaptiveKlm, SchemeKind::GraphEncoding] {
            let ctx =
                scheme_context(scheme, &single_cz_circuit(), &SchemeParams::default()).unwrap();
            let n = 1_000_000u64;
            let bound = 5.0 * (ctx.p_true * (1.0 - ctx.p_true) / n as f64).sqrt() * ctx.rescale;
            let mut hits = 0;
            for seed in 0..100 {
                let run = simulate_estimation(&ctx, n, seed);
                if (run.estimate - ctx.exact_probability).abs() <= bound {
                    hits += 1;
                }
            }
            assert!(
                hits >= 95,
                "{scheme:?}: only {hits} of 100 runs inside 5 sigma"
            );
        }
    }

    #[test]
    fn hoeffding_guarantee_on_example_circuit() {
        // both schemes, raw accuracy 0.02: at least 90% of seeded runs land
        // within the converted accuracy of the exact probability
        let circuit = example_circuit(PI / 2.0, PI / 4.0, PI / 8.0);
        let delta = 0.05;
        let raw_eps = 0.02;
        let n = hoeffding_samples(raw_eps, delta).unwrap();
        for scheme in [SchemeKind::GraphEncoding, SchemeKind::NonAdaptiveKlm] {
            let ctx = scheme_context(scheme, &circuit, &SchemeParams::default()).unwrap();
            let eps_prime = raw_eps * ctx.rescale;
            let mut hits = 0;
            for seed in 0..40 {
                let run = simulate_estimation(&ctx, n, seed);
                if (run.estimate - ctx.exact_probability).abs() <= eps_prime {
                    hits += 1;
                }
            }
            assert!(hits >= 36, "{scheme:?}: only {hits} of 40 within eps'");
            // consistency with the inverse budget
            assert!(epsilon_for(n, delta).unwrap() <= raw_eps);
        }
    }

    #[test]
    fn shift_coeffs_identity() {
        let coeffs = eps_poly_coeffs(&ComplexMatrix::identity(2)).unwrap();
        let expect = [c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        for (a, e) in coeffs.iter().zip(expect) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_coeffs_one_by_one() {
        let m = ComplexMatrix::from_rows(1, vec![c(0.3, -0.7)]).unwrap();
        let coeffs = eps_poly_coeffs(&m).unwrap();
        assert!((coeffs[0] - c(0.3, -0.7)).norm() < 1e-15);
        assert!((coeffs[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shift_coeffs_evaluate_to_shifted_permanent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = random_matrix(&mut rng, 4);
        let coeffs = eps_poly_coeffs(&m).unwrap();
        assert!((coeffs[4] - c(1.0, 0.0)).norm() < 1e-12);
        for &e in &[0.3, 1.7] {
            let direct = permanent(&m.shift_diagonal(e), PermanentMethod::Ryser).unwrap();
            let mut acc = c(0.0, 0.0);
            let mut p = 1.0;
            for coeff in &coeffs {
                acc += coeff * p;
                p *= e;
            }
            assert!((acc - direct).norm() < 1e-10, "eps {e}: {acc} vs {direct}");
        }
    }

    #[test]
    fn boost_recovers_scalar() {
        let m = ComplexMatrix::from_rows(1, vec![c(0.6, 0.8)]).unwrap();
        let setup = BoostSetup::new(m, vec![0.0, 1.0, 2.0]).unwrap();
        let result = boost_recover(&setup, None).unwrap();
        assert!((result.recovered - 1.0).abs() < 1e-10); // |0.6+0.8i|^2
    }

    #[test]
    fn boost_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let n = rng.random_range(1..=4);
            let m = random_matrix(&mut rng, n);
            let exact = permanent(&m, PermanentMethod::Ryser).unwrap().norm_sqr();
            let setup = BoostSetup::chebyshev(m);
            let result = boost_recover(&setup, None).unwrap();
            let denom = exact.max(1e-30);
            assert!(
                (result.recovered - exact).abs() / denom < 1e-6,
                "recovered {} vs {exact}",
                result.recovered
            );
        }
    }

    #[test]
    fn boost_with_noisy_evaluations() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = random_matrix(&mut rng, 3);
        let exact = permanent(&m, PermanentMethod::Ryser).unwrap().norm_sqr();
        let setup = BoostSetup::chebyshev(m.clone());
        let values: Vec<f64> = setup.epsilons[..7]
            .iter()
            .map(|&e| {
                let v = permanent(&m.shift_diagonal(e), PermanentMethod::Ryser)
                    .unwrap()
                    .norm_sqr();
                v + if rng.random() { 1e-8 } else { -1e-8 }
            })
            .collect();
        let result = boost_recover(&setup, Some(&values)).unwrap();
        assert!(
            (result.recovered - exact).abs() / exact.max(1.0) < 1e-5,
            "recovered {} vs {exact}",
            result.recovered
        );
    }

    #[test]
    fn fitted_polynomial_matches_coefficient_square() {
        // the fitted real polynomial b(eps) must agree with |sum c_i eps^i|^2
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let m = random_matrix(&mut rng, 3);
        let coeffs = eps_poly_coeffs(&m).unwrap();
        let setup = BoostSetup::chebyshev(m);
        let fit = boost_recover(&setup, None).unwrap();
        for _ in 0..5 {
            let e: f64 = rng.random_range(0.0..2.0);
            let mut shifted = c(0.0, 0.0);
            let mut p = 1.0;
            for coeff in &coeffs {
                shifted += coeff * p;
                p *= e;
            }
            let mut fitted = 0.0;
            let mut p = 1.0;
            for b in &fit.coefficients {
                fitted += b * p;
                p *= e;
            }
            assert!(
                (fitted - shifted.norm_sqr()).abs() < 1e-9 * shifted.norm_sqr().max(1.0),
                "eps {e}: fitted {fitted} vs {}",
                shifted.norm_sqr()
            );
        }
    }

    #[test]
    fn boost_rejects_bad_setups() {
        let m = ComplexMatrix::identity(2);
        assert!(BoostSetup::new(m.clone(), vec![0.0, 1.0]).is_err()); // too few
        assert!(BoostSetup::new(m.clone(), vec![0.0, 1.0, 1.0, 2.0, 3.0]).is_err()); // dup
        assert!(BoostSetup::new(m, vec![0.0, 1.0, -0.5, 2.0, 3.0]).is_err()); // negative
    }

    #[test]
    fn shifted_norm_bounds() {
        let check = boosted_norm_bounds(&ComplexMatrix::identity(3), 0.0).unwrap();
        assert!((check.lower - 1.0).abs() < 1e-12);
        assert!((check.upper - 1.0).abs() < 1e-12);
        assert!((check.observed - 1.0).abs() < 1e-9);
        assert!(check.pass);

        let poly = Polynomial::new(2, vec![(PI, vec![0, 1])]).unwrap();
        let graph = encode_polynomial(&poly).unwrap();
        let check = boosted_norm_bounds(graph.adjacency(), 2.0).unwrap();
        assert!(check.pass, "{check:?}");
        assert!(check.observed >= 3.0 - 1e-9);

        // large shifts dominate: observed / eps -> 1
        let check = boosted_norm_bounds(graph.adjacency(), 1e3).unwrap();
        assert!((check.observed / 1e3 - 1.0).abs() < 0.05);
    }
}
