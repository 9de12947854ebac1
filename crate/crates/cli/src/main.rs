//! `permsum` command line: polynomial/circuit graph encoding, permanent
//! engines, gadget tooling, resource analysis and scheme simulation.
//!
//! Exit codes: 0 success, 1 domain/input error, 2 resource-cap error,
//! 64 usage error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use permsum::circuit::{extract_resolved, parse_bits, Circuit};
use permsum::gadgets::{
    cubic_gadget_radical_variant, export_constraints, gadget_matrix, generate_constraints,
    verify_gadget, Gadget, VerificationReport,
};
use permsum::graph::{
    encode_polynomial, encode_zero_zero, export_graph_dense, export_graph_json, parse_graph_json,
    predicted_node_count,
};
use permsum::permanent::{
    gurvits_estimate_with_stderr, permanent, spectral_norm, ComplexMatrix, PermanentMethod,
};
use permsum::poly::Polynomial;
use permsum::resource::{
    ccz_threshold, epsilon_for, hoeffding_samples, log2_alpha, norm_bound_check, prob_alpha_lt_1,
    prob_fewer_photons, prob_fewer_photons_exact_ratio, resource_table, success_prob_klm,
    EstimationPlan, ProbMode, SchemeParams,
};
use permsum::sampling::{
    boost_recover, scheme_context, simulate_estimation, BoostSetup, SchemeKind,
};
use permsum::{Error, Result};

#[derive(Parser)]
#[command(
    name = "permsum",
    about = "Exponential sums of boolean phase polynomials as matrix permanents",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    /// Output format for scalar results and curves.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Seed for every randomized routine.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on internal parallelism. The engines are currently serial;
    /// output is identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a polynomial (or a circuit's zero-zero amplitude) as a graph.
    Encode(EncodeArgs),
    /// Compute the permanent of a matrix or encoded graph.
    Permanent(PermanentArgs),
    /// Circuit amplitude <out| C |in>, by brute-force sum or via the graph.
    Amplitude(AmplitudeArgs),
    /// Emit the gadget-design constraint system for external solvers.
    GadgetGen(GadgetGenArgs),
    /// Check a clause gadget against its constraint system.
    GadgetVerify(GadgetVerifyArgs),
    /// Full resource report for an IQP circuit.
    Analyze(AnalyzeArgs),
    /// Ensemble probability curves over random {Z, CZ, CCZ} circuits.
    ProbCurve(ProbCurveArgs),
    /// Monte-Carlo simulation of a sampling scheme.
    Simulate(SimulateArgs),
    /// Recover |per A|^2 from diagonally shifted permanents.
    Boost(BoostArgs),
    /// Circuit-ensemble statistics for a qubit count.
    Stats(StatsArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Polynomial file (`poly n=...` format).
    #[arg(long, conflicts_with = "circuit")]
    poly: Option<PathBuf>,
    /// IQP circuit file; encodes the zero-zero amplitude.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Emit the dense adjacency matrix instead of graph JSON.
    #[arg(long)]
    dense: bool,
}

#[derive(Args)]
struct PermanentArgs {
    /// Dense matrix text or graph JSON file.
    #[arg(long)]
    matrix: PathBuf,
    /// naive | ryser | cycle_cover | block_auto | gurvits
    #[arg(long, default_value = "block_auto")]
    method: String,
    /// Sample count for the gurvits estimator.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Args)]
struct AmplitudeArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Input bits, e.g. 000.
    #[arg(long = "in")]
    input: String,
    /// Output bits.
    #[arg(long = "out")]
    output: String,
    /// direct (brute-force sum) or graph (permanent of the encoding).
    #[arg(long, value_enum, default_value_t = AmplitudePath::Direct)]
    via: AmplitudePath,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AmplitudePath {
    Direct,
    Graph,
}

#[derive(Args)]
struct GadgetGenArgs {
    /// Clause degree d >= 1.
    #[arg(long)]
    degree: usize,
    /// Inner vertex count k >= 0.
    #[arg(long)]
    inner: usize,
    /// Clause coefficient; omitted means symbolic right-hand side `T`.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct GadgetVerifyArgs {
    /// Gadget degree (1, 2 or 3 for the built-in library).
    #[arg(long)]
    degree: usize,
    /// Coefficients to check; defaults to a small grid over [0, 2 pi).
    #[arg(long, num_args = 1..)]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Check the cubic variant with the asymmetric radical corner instead
    /// of the library gadget.
    #[arg(long)]
    radical_variant: bool,
    /// Verify a custom gadget from a dense matrix file (with --inner).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Inner vertex count of the custom gadget.
    #[arg(long, default_value_t = 0)]
    inner: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Target accuracy for the Hoeffding budgets.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Confidence parameter for the Hoeffding budgets.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Args)]
struct ProbCurveArgs {
    /// alpha (sample-ratio condition) or photons (photon-count condition).
    #[arg(long, value_enum)]
    theorem: Theorem,
    /// Qubit range, e.g. `6..12` (inclusive) or a single value.
    #[arg(long)]
    q: String,
    /// exact (big integers) or log (log-domain floats).
    #[arg(long, default_value = "exact")]
    mode: String,
    /// For --theorem photons: use the exact 7:1 photon comparison instead
    /// of the conservative one.
    #[arg(long)]
    exact_ratio: bool,
    /// Print full-precision probabilities instead of 4 significant digits.
    #[arg(long)]
    precise: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Theorem {
    Alpha,
    Photons,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// graph or klm.
    #[arg(long)]
    scheme: String,
    /// Raw per-sample accuracy; the sample count comes from the Hoeffding
    /// bound at --delta unless --samples is given.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Explicit sample count per run (overrides the Hoeffding budget).
    #[arg(long)]
    samples: Option<u64>,
    /// Number of seeded runs; run r uses seed (--seed + r).
    #[arg(long, default_value_t = 1)]
    runs: u64,
}

#[derive(Args)]
struct BoostArgs {
    /// Dense matrix file.
    #[arg(long)]
    matrix: PathBuf,
    /// Optional CSV of `epsilon,value` evaluations of |per(A + eps I)|^2.
    #[arg(long)]
    evals: Option<PathBuf>,
    /// Comma-separated shift values (default: Chebyshev points on [0, 2]).
    #[arg(long)]
    epsilons: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    q: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Resource(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

/// 17 significant digits; round-trips f64 exactly. Negative zero prints as
/// zero; non-finite values print as `null` (JSON has no infinities).
fn g17(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn complex_out(format: OutputFormat, z: Complex64) -> String {
    match format {
        OutputFormat::Json => format!("{{\"re\":{},\"im\":{}}}", g17(z.re), g17(z.im)),
        OutputFormat::Csv => format!("{},{}", g17(z.re), g17(z.im)),
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))
}

fn load_circuit(path: &PathBuf) -> Result<Circuit> {
    Circuit::parse(&read(path)?)
}

fn load_iqp(path: &PathBuf) -> Result<permsum::circuit::IqpCircuit> {
    match load_circuit(path)? {
        Circuit::Iqp(c) => Ok(c),
        Circuit::Ht(_) => Err(Error::Domain(
            "this command needs an IQP circuit (`iqp q=...` format)".into(),
        )),
    }
}

/// Matrix from dense text or, when the file starts with `{`, from graph
/// JSON (the adjacency matrix of the encoded graph).
fn load_matrix(path: &PathBuf) -> Result<ComplexMatrix> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(parse_graph_json(&text)?.adjacency().clone())
    } else {
        ComplexMatrix::parse(&text)
    }
}

fn run(cli: Cli) -> Result<()> {
    let _ = cli.threads.max(1);
    match cli.command {
        Command::Encode(args) => {
            let graph = match (&args.poly, &args.circuit) {
                (Some(path), None) => encode_polynomial(&Polynomial::parse(&read(path)?)?)?,
                (None, Some(path)) => encode_zero_zero(&load_iqp(path)?)?.0,
                _ => {
                    return Err(Error::Domain(
                        "encode needs exactly one of --poly or --circuit".into(),
                    ))
                }
            };
            if args.dense {
                print!("{}", export_graph_dense(&graph));
            } else {
                println!("{}", export_graph_json(&graph));
            }
            Ok(())
        }
        Command::Permanent(args) => {
            let matrix = load_matrix(&args.matrix)?;
            if args.method == "gurvits" {
                let (estimate, stderr) =
                    gurvits_estimate_with_stderr(&matrix, args.samples, cli.seed);
                match cli.format {
                    OutputFormat::Json => println!(
                        "{{\"re\":{},\"im\":{},\"stderr\":{},\"samples\":{}}}",
                        g17(estimate.re),
                        g17(estimate.im),
                        g17(stderr),
                        args.samples
                    ),
                    OutputFormat::Csv => {
                        println!("{},{},{}", g17(estimate.re), g17(estimate.im), g17(stderr))
                    }
                }
                return Ok(());
            }
            let method: PermanentMethod = args.method.parse()?;
            let value = permanent(&matrix, method)?;
            println!("{}", complex_out(cli.format, value));
            Ok(())
        }
        Command::Amplitude(args) => {
            let circuit = load_circuit(&args.circuit)?;
            let input = parse_bits(&args.input)?;
            let output = parse_bits(&args.output)?;
            let amp = match args.via {
                AmplitudePath::Direct => circuit.amplitude_direct(&input, &output)?,
                AmplitudePath::Graph => match extract_resolved(&circuit, &input, &output)? {
                    None => Complex64::new(0.0, 0.0),
                    Some(sop) => {
                        let graph = encode_polynomial(&sop.poly)?;
                        graph.encoded_sum(PermanentMethod::BlockAuto)? * sop.normalization()
                    }
                },
            };
            println!("{}", complex_out(cli.format, amp));
            Ok(())
        }
        Command::GadgetGen(args) => {
            let system = generate_constraints(args.degree, args.inner)?;
            print!("{}", export_constraints(&system, args.theta));
            Ok(())
        }
        Command::GadgetVerify(args) => {
            let thetas = if args.theta.is_empty() {
                vec![
                    0.0,
                    std::f64::consts::PI / 8.0,
                    std::f64::consts::PI / 4.0,
                    std::f64::consts::PI / 2.0,
                    std::f64::consts::PI,
                    1.234,
                ]
            } else {
                args.theta.clone()
            };
            let custom: Option<ComplexMatrix> =
                args.matrix.as_ref().map(load_matrix).transpose()?;
            let mut reports = Vec::new();
            for &theta in &thetas {
                let gadget: Gadget = match &custom {
                    Some(m) => Gadget::new(args.degree, args.inner, m.clone())?,
                    None if args.radical_variant => {
                        if args.degree != 3 {
                            return Err(Error::Domain(
                                "--radical-variant applies to degree 3".into(),
                            ));
                        }
                        cubic_gadget_radical_variant(theta)
                    }
                    None => gadget_matrix(args.degree, theta)?,
                };
                reports.push(verify_gadget(&gadget, theta, args.tol)?);
            }
            println!("{}", reports_json(&reports));
            Ok(())
        }
        Command::Analyze(args) => {
            let circuit = load_iqp(&args.circuit)?;
            println!("{}", analyze_json(&circuit, args.epsilon, args.delta)?);
            Ok(())
        }
        Command::ProbCurve(args) => {
            let mode: ProbMode = args.mode.parse()?;
            let (lo, hi) = parse_range(&args.q)?;
            let digits = if args.precise { 16 } else { 3 };
            for q in lo..=hi {
                let p = match (args.theorem, args.exact_ratio) {
                    (Theorem::Alpha, _) => prob_alpha_lt_1(q, mode)?,
                    (Theorem::Photons, false) => prob_fewer_photons(q, mode)?,
                    (Theorem::Photons, true) => prob_fewer_photons_exact_ratio(q, mode)?,
                };
                println!("{q},{p:.*e}", digits);
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let circuit = load_iqp(&args.circuit)?;
            let scheme: SchemeKind = args.scheme.parse()?;
            let ctx = scheme_context(scheme, &circuit, &SchemeParams::default())?;
            let samples = match args.samples {
                Some(n) => n,
                None => hoeffding_samples(args.epsilon, args.delta)?,
            };
            println!("seed,N,N_post,estimate");
            for r in 0..args.runs {
                let seed = cli.seed + r;
                let run = simulate_estimation(&ctx, samples, seed);
                println!(
                    "{seed},{},{},{}",
                    run.samples,
                    run.post_selected,
                    g17(run.estimate)
                );
            }
            Ok(())
        }
        Command::Boost(args) => {
            let matrix = load_matrix(&args.matrix)?;
            let (setup, evals) = match (&args.evals, &args.epsilons) {
                (Some(path), _) => {
                    let mut eps = Vec::new();
                    let mut vals = Vec::new();
                    for line in read(path)?.lines() {
                        let line = line.trim();
                        if line.is_empty() || line.starts_with('#') {
                            continue;
                        }
                        let (e, v) = line.split_once(',').ok_or_else(|| {
                            Error::Parse(format!("expected `epsilon,value` rows, got {line:?}"))
                        })?;
                        eps.push(
                            e.trim()
                                .parse::<f64>()
                                .map_err(|e| Error::Parse(e.to_string()))?,
                        );
                        vals.push(
                            v.trim()
                                .parse::<f64>()
                                .map_err(|e| Error::Parse(e.to_string()))?,
                        );
                    }
                    (BoostSetup::new(matrix, eps)?, Some(vals))
                }
                (None, Some(list)) => {
                    let eps = list
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<f64>()
                                .map_err(|e| Error::Parse(e.to_string()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (BoostSetup::new(matrix, eps)?, None)
                }
                (None, None) => (BoostSetup::chebyshev(matrix), None),
            };
            let result = boost_recover(&setup, evals.as_deref())?;
            println!(
                "{{\"recovered\":{},\"condition_estimate\":{},\"condition_warning\":{}}}",
                g17(result.recovered),
                g17(result.condition_estimate),
                result.condition_warning
            );
            Ok(())
        }
        Command::Stats(args) => {
            let stats = permsum::resource::ensemble_stats(args.q);
            let size = if stats.log2_size <= 10_000 {
                format!("\"{}\"", stats.size)
            } else {
                "null".to_string()
            };
            println!(
                "{{\"q\":{},\"log2_size\":{},\"size\":{},\"expected_photons\":{}}}",
                args.q,
                stats.log2_size,
                size,
                g17(stats.expected_photons)
            );
            Ok(())
        }
    }
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo
            .parse()
            .map_err(|e| Error::Parse(format!("bad range start {lo:?}: {e}")))?;
        let hi: usize = hi
            .parse()
            .map_err(|e| Error::Parse(format!("bad range end {hi:?}: {e}")))?;
        if hi < lo {
            return Err(Error::Domain(format!("empty range {text:?}")));
        }
        Ok((lo, hi))
    } else {
        let q: usize = text
            .parse()
            .map_err(|e| Error::Parse(format!("bad qubit count {text:?}: {e}")))?;
        Ok((q, q))
    }
}

fn reports_json(reports: &[VerificationReport]) -> String {
    let mut out = String::from("[");
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let residuals: Vec<String> = r
            .residuals
            .iter()
            .map(|(tag, res)| format!("{{\"equation\":\"{tag}\",\"residual\":{}}}", g17(*res)))
            .collect();
        let failing: Vec<String> = r.failing().iter().map(|tag| format!("\"{tag}\"")).collect();
        let _ = write!(
            out,
            "{{\"degree\":{},\"theta\":{},\"tolerance\":{},\"pass\":{},\"max_nonzero_residual\":{},\"max_zero_residual\":{},\"failing\":[{}],\"residuals\":[{}]}}",
            r.degree,
            g17(r.theta),
            g17(r.tolerance),
            r.pass,
            g17(r.max_nonzero_residual),
            g17(r.max_zero_residual),
            failing.join(","),
            residuals.join(",")
        );
    }
    out.push(']');
    out
}

fn analyze_json(
    circuit: &permsum::circuit::IqpCircuit,
    epsilon: f64,
    delta: f64,
) -> Result<String> {
    let params = SchemeParams::default();
    let counts = circuit.gate_counts();
    let (graph, scale) = encode_zero_zero(circuit)?;
    let norm = spectral_norm(graph.adjacency())?;
    let m = graph.vertex_count();
    let (p_s, log2_p_s) = success_prob_klm(&counts, &params);
    let alpha = log2_alpha(&counts, norm, m, &params);
    let (threshold, coeffs) = ccz_threshold(counts.q, counts.deg1, counts.deg2, &params);
    let table = resource_table(&counts);
    let bounds = norm_bound_check(&graph, &counts)?;
    // rescale factors from norms and closed forms only, so the budgets stay
    // available when the exact permanent is out of reach; for large circuits
    // the counts overflow f64 and only the log2 forms stay meaningful
    let log2_graph_rescale = 2.0 * graph.multiplier().norm().log2() + 2.0 * m as f64 * norm.log2()
        - 2.0 * counts.q as f64;
    let log2_klm_rescale = -log2_p_s;
    let log2_samples = |log2_rescale: f64| {
        ((2.0 / delta).ln() / 2.0).log2() - 2.0 * (epsilon.log2() - log2_rescale)
    };
    let graph_rescale = 2f64.powf(log2_graph_rescale);
    let klm_rescale = 2f64.powf(log2_klm_rescale);
    let plan = EstimationPlan::for_target(epsilon, delta, graph_rescale, klm_rescale)?;
    // exact zero-zero and post-selection probabilities need a brute-force
    // sum and a permanent; report null beyond the caps
    let graph_ctx = scheme_context(SchemeKind::GraphEncoding, circuit, &params).ok();
    let klm_ctx = scheme_context(SchemeKind::NonAdaptiveKlm, circuit, &params).ok();
    let node_counts = if circuit.num_layers() == 1 {
        let nc = predicted_node_count(circuit)?;
        format!("{{\"encoded\":{},\"rudolph\":{}}}", nc.encoded, nc.rudolph)
    } else {
        "null".to_string()
    };

    let mut out = String::from("{");
    let _ = write!(
        out,
        "\"q\":{},\"layers\":{},",
        circuit.qubits(),
        circuit.num_layers()
    );
    let _ = write!(
        out,
        "\"gate_counts\":{{\"deg1\":{},\"deg2\":{},\"deg3\":{}}},",
        counts.deg1, counts.deg2, counts.deg3
    );
    let _ = write!(out, "\"node_counts\":{node_counts},");
    let _ = write!(out, "\"vertices\":{m},");
    let _ = write!(out, "\"amplitude_scale\":{},", g17(scale));
    let _ = write!(out, "\"graph_norm\":{},", g17(norm));
    let _ = write!(
        out,
        "\"norm_bounds\":{{\"lower\":{},\"upper\":{},\"observed\":{},\"pass\":{}}},",
        g17(bounds.lower),
        g17(bounds.upper),
        g17(bounds.observed),
        bounds.pass
    );
    let _ = write!(
        out,
        "\"klm_success\":{{\"probability\":{},\"log2\":{}}},",
        g17(p_s),
        g17(log2_p_s)
    );
    let _ = write!(out, "\"log2_alpha\":{},", g17(alpha));
    let _ = write!(
        out,
        "\"ccz_threshold\":{{\"t\":{threshold},\"c_x\":{},\"c_y\":{},\"c_q\":{}}},",
        g17(coeffs.c_x),
        g17(coeffs.c_y),
        g17(coeffs.c_q)
    );
    let _ = write!(
        out,
        "\"resources\":{{\"klm_photons\":{},\"klm_modes\":{},\"graph_photons\":{},\"graph_modes\":{}}},",
        table.klm_photons, table.klm_modes, table.graph_photons, table.graph_modes
    );
    let opt = |v: Option<f64>| v.map_or("null".to_string(), g17);
    let _ = write!(
        out,
        "\"zero_zero_probability\":{},",
        opt(klm_ctx.as_ref().map(|c| c.exact_probability))
    );
    let _ = write!(
        out,
        "\"postselect\":{{\"graph\":{},\"klm\":{}}},",
        opt(graph_ctx.as_ref().map(|c| c.p_true)),
        opt(klm_ctx.as_ref().map(|c| c.p_true))
    );
    let _ = write!(
        out,
        "\"hoeffding\":{{\"epsilon\":{},\"delta\":{},\"graph\":{{\"raw_epsilon\":{},\"samples\":{},\"log2_samples\":{}}},\"klm\":{{\"raw_epsilon\":{},\"samples\":{},\"log2_samples\":{}}},\"epsilon_for_1e6\":{}}}",
        g17(plan.epsilon_target),
        g17(plan.delta),
        g17(plan.graph.raw_epsilon),
        g17(plan.graph.samples),
        g17(log2_samples(log2_graph_rescale)),
        g17(plan.klm.raw_epsilon),
        g17(plan.klm.samples),
        g17(log2_samples(log2_klm_rescale)),
        g17(epsilon_for(1_000_000, delta)?)
    );
    out.push('}');
    Ok(out)
}
