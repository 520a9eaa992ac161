//! Command-line front end for the walkspec library.
//!
//! Exit codes: 0 success, 2 validation failure, 3 refusal (ambiguous or
//! colliding input), 4 verification failure.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use walkspec::moment_map::{
    morse_certificate, search_isospectral, MomentMapError, ParameterPoint, SearchOptions,
};
use walkspec::puiseux::{
    alpha_branches, gamma_branches, gamma_diff_at_infinity, gamma_diff_at_zero, BranchPair,
    PuiseuxSeries,
};
use walkspec::reconstruct::{
    guarantee, muller_rows_for_n, muller_tables, reconstruct_e1, reconstruct_from_branches,
    reconstruct_from_diff, ReconstructError,
};
use walkspec::spectrum::{
    bias_diagnostic, isospectral_through, return_probabilities, simulate, u1_invariant_dims,
    Spectrum, SpectrumCmp,
};
use walkspec::walk::{format_rational, parse_rational, Rational, WalkShape};

const EXIT_VALIDATION: u8 = 2;
const EXIT_REFUSAL: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "walkspec",
    about = "Exact and arbitrary-precision analysis of return-probability spectra of integer random walks",
    version
)]
struct Cli {
    /// Working precision in bits (also via WALKSPEC_PRECISION; minimum 64)
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Output format
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// Thread cap (accepted for compatibility; evaluation is sequential)
    #[arg(long, global = true)]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact return probabilities I_1..I_N of a shape
    Spectrum(SpectrumArgs),
    /// Monte Carlo estimates of the return probabilities
    Simulate(SimulateArgs),
    /// Check the Laplace expansion of L(s) on a grid and fit the prefactor
    Asymptotics(AsymptoticsArgs),
    /// Branch series of u = chi(t) - 1 (alpha, gamma, differences)
    Series(SeriesArgs),
    /// Recover a shape from a spectrum or branch-series data
    Reconstruct(ReconstructArgs),
    /// Which uniqueness guarantee applies to reach (e, f)
    Guarantee(GuaranteeArgs),
    /// Brute-force isospectrality search over a rational grid
    Search(SearchArgs),
    /// Critical-point certificate for chi (transposition / degenerate)
    Certify(CertifyArgs),
    /// Classification tables of two-orbit primitive actions
    Tables(TablesArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Shape JSON file
    shape: PathBuf,
    /// Number of return probabilities
    #[arg(short, default_value_t = 10)]
    n: usize,
    /// Second shape: compare spectra instead of printing
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Also print the U(1) invariant dimensions d^n I_n
    #[arg(long)]
    u1_dims: bool,
    /// Run the bias diagnostic on the computed spectrum
    #[arg(long)]
    bias: bool,
}

#[derive(Args)]
struct SimulateArgs {
    shape: PathBuf,
    #[arg(short, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct AsymptoticsArgs {
    shape: PathBuf,
    /// Expansion order m
    #[arg(short, default_value_t = 1)]
    m: u32,
    /// Comma-separated increasing s grid
    #[arg(long, default_value = "100,1000,10000")]
    grid: String,
}

#[derive(Args)]
struct SeriesArgs {
    shape: PathBuf,
    /// What to emit: alpha | branches | diff-infinity | diff-zero
    #[arg(long, default_value = "diff-infinity")]
    what: String,
    /// Retained orders past the leading term
    #[arg(long, default_value_t = 8)]
    order: u32,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Input: spectrum JSON (e = 1 route, give -f), a diff series JSON
    /// (give -e and -f), or a branch-pair JSON {"gamma_plus", "gamma_minus"}
    input: PathBuf,
    #[arg(short)]
    e: Option<u32>,
    #[arg(short)]
    f: Option<u32>,
    /// kappa_0 = I_1 for the series routes
    #[arg(long, default_value = "0")]
    kappa0: String,
}

#[derive(Args)]
struct GuaranteeArgs {
    #[arg(short)]
    e: u32,
    #[arg(short)]
    f: u32,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(short)]
    e: u32,
    #[arg(short)]
    f: u32,
    #[arg(long, default_value_t = 6)]
    moments: usize,
    #[arg(long, default_value_t = 6)]
    denominator_bound: u64,
    #[arg(long)]
    unbiased_only: bool,
    #[arg(long, default_value_t = 10_000_000)]
    max_cells: u64,
    /// Re-emit only pairs whose grid-block cursor is at or beyond this
    /// denominator (continue an interrupted run)
    #[arg(long, default_value_t = 1)]
    resume_from: u64,
}

#[derive(Args)]
struct CertifyArgs {
    /// Shape JSON or parameter-point JSON {"e", "f", "kappas": [..]}
    input: PathBuf,
}

#[derive(Args)]
struct TablesArgs {
    /// Only rows whose tabulated degree equals n
    #[arg(long)]
    n: Option<u64>,
}

fn precision_from(cli: &Cli) -> u32 {
    let env = std::env::var("WALKSPEC_PRECISION")
        .ok()
        .and_then(|v| v.parse::<u32>().ok());
    cli.precision.or(env).unwrap_or(256).max(64)
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let v = json!({"schema": "error/1", "kind": kind, "message": message});
    println!("{v}");
    ExitCode::from(code)
}

/// Loads a shape, returning (error-code, message) on failure so the
/// machine-readable error JSON names the violated rule.
fn load_shape(path: &PathBuf) -> Result<WalkShape, (String, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ("Io".to_string(), format!("{}: {e}", path.display())))?;
    WalkShape::from_json_str(&text).map_err(|e| (e.code().to_string(), e.to_string()))
}

fn emit(format: &str, v: &Value, table: impl Fn(&Value) -> String) -> ExitCode {
    if format == "table" {
        println!("{}", table(v));
    } else {
        println!("{v}");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let precision = precision_from(&cli);
    let format = cli.format.clone();
    match &cli.command {
        Command::Spectrum(args) => cmd_spectrum(args, &format),
        Command::Simulate(args) => cmd_simulate(args, &format),
        Command::Asymptotics(args) => cmd_asymptotics(args, precision),
        Command::Series(args) => cmd_series(args, precision),
        Command::Reconstruct(args) => cmd_reconstruct(args, precision),
        Command::Guarantee(args) => cmd_guarantee(args, &format),
        Command::Search(args) => cmd_search(args),
        Command::Certify(args) => cmd_certify(args, precision),
        Command::Tables(args) => cmd_tables(args, &format),
    }
}

fn cmd_spectrum(args: &SpectrumArgs, format: &str) -> ExitCode {
    let shape = match load_shape(&args.shape) {
        Ok(s) => s,
        Err((code, msg)) => return fail(&code, msg, EXIT_VALIDATION),
    };
    if args.n < 1 {
        return fail("validation", "n must be at least 1".into(), EXIT_VALIDATION);
    }
    if let Some(other) = &args.compare {
        let other = match load_shape(other) {
            Ok(s) => s,
            Err((code, msg)) => return fail(&code, msg, EXIT_VALIDATION),
        };
        let v = match isospectral_through(&shape, &other, args.n) {
            SpectrumCmp::Equal => json!({
                "schema": "spectrum-compare/1",
                "equal_through": args.n,
                "verdict": "equal",
            }),
            SpectrumCmp::FirstDifference { n, a, b } => json!({
                "schema": "spectrum-compare/1",
                "verdict": "differ",
                "first_difference": {
                    "n": n,
                    "a": format_rational(&a),
                    "b": format_rational(&b),
                },
            }),
        };
        return emit(format, &v, |v| v.to_string());
    }
    let spec = return_probabilities(&shape, args.n);
    let mut v: Value = serde_json::from_str(&spec.to_json()).expect("valid json");
    if args.u1_dims {
        let (d, dims) = u1_invariant_dims(&shape, args.n);
        v["u1"] = json!({
            "d": d.to_string(),
            "dims": dims.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        });
    }
    if args.bias {
        match bias_diagnostic(&spec, 64) {
            Ok(verdict) => {
                v["bias_diagnostic"] = serde_json::to_value(&verdict).expect("serializable");
            }
            Err(e) => return fail("validation", e.to_string(), EXIT_VALIDATION),
        }
    }
    emit(format, &v, |v| {
        let vals = v["values"].as_array().unwrap();
        vals.iter()
            .enumerate()
            .map(|(i, x)| format!("I_{} = {}", i + 1, x.as_str().unwrap()))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn cmd_simulate(args: &SimulateArgs, format: &str) -> ExitCode {
    let shape = match load_shape(&args.shape) {
        Ok(s) => s,
        Err((code, msg)) => return fail(&code, msg, EXIT_VALIDATION),
    };
    if args.samples < 1 {
        return fail(
            "validation",
            "samples must be at least 1".into(),
            EXIT_VALIDATION,
        );
    }
    let emp = simulate(&shape, args.n, args.samples, args.seed);
    let v = serde_json::to_value(&emp).expect("serializable");
    emit(format, &v, |v| v.to_string())
}

fn cmd_asymptotics(args: &AsymptoticsArgs, precision: u32) -> ExitCode {
    let shape = match load_shape(&args.shape) {
        Ok(s) => s,
        Err((code, msg)) => return fail(&code, msg, EXIT_VALIDATION),
    };
    let grid: Vec<f64> = args
        .grid
        .split(',')
        .filter_map(|s| s.trim().parse::<f64>().ok())
        .collect();
    if grid.len() < 3 {
        return fail(
            "validation",
            "grid needs at least three increasing values".into(),
            EXIT_VALIDATION,
        );
    }
    match walkspec::asymptotics::verify_expansion(&shape, args.m, &grid, precision) {
        Ok(report) => {
            let v = serde_json::to_value(&report).expect("serializable");
            println!("{v}");
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAILED)
            }
        }
        Err(e) => fail("validation", e.to_string(), EXIT_VALIDATION),
    }
}

fn cmd_series(args: &SeriesArgs, precision: u32) -> ExitCode {
    let shape = match load_shape(&args.shape) {
        Ok(s) => s,
        Err((code, msg)) => return fail(&code, msg, EXIT_VALIDATION),
    };
    let order = args.order.max(1);
    let v = match args.what.as_str() {
        "alpha" => {
            let (minus, plus) = alpha_branches(&shape, order, precision);
            json!({
                "schema": "alpha-branches/1",
                "alpha_minus": series_value(&minus),
                "alpha_plus": series_value(&plus),
            })
        }
        "branches" => {
            let pair = gamma_branches(&shape, order, precision);
            json!({
                "schema": "gamma-branches/1",
                "gamma_plus": series_value(&pair.gamma_plus),
                "gamma_minus": series_value(&pair.gamma_minus),
            })
        }
        "diff-infinity" => {
            let diff = gamma_diff_at_infinity(&shape, order, precision);
            series_value(&diff)
        }
        "diff-zero" => match gamma_diff_at_zero(&shape, order, precision) {
            Ok(diff) => series_value(&diff),
            Err(e) => return fail("validation", e.to_string(), EXIT_VALIDATION),
        },
        other => {
            return fail(
                "validation",
                format!("unknown series kind {other:?}"),
                EXIT_VALIDATION,
            )
        }
    };
    println!("{v}");
    ExitCode::SUCCESS
}

fn series_value(s: &PuiseuxSeries) -> Value {
    serde_json::from_str(&s.to_json()).expect("valid json")
}

fn cmd_reconstruct(args: &ReconstructArgs, precision: u32) -> ExitCode {
    let text = match std::fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                "validation",
                format!("{}: {e}", args.input.display()),
                EXIT_VALIDATION,
            )
        }
    };
    let probe: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return fail("validation", e.to_string(), EXIT_VALIDATION),
    };
    let kappa0 = match parse_rational(&args.kappa0) {
        Some(r) => r,
        None => {
            return fail(
                "validation",
                format!("bad kappa0 {:?}", args.kappa0),
                EXIT_VALIDATION,
            )
        }
    };
    let result: Result<WalkShape, ReconstructError> = if probe.get("values").is_some() {
        // spectrum input: e = 1 route
        let spec = match Spectrum::from_json_str(&text) {
            Ok(s) => s,
            Err(e) => return fail("validation", e, EXIT_VALIDATION),
        };
        let f = match args.f {
            Some(f) => f,
            None => {
                return fail(
                    "validation",
                    "spectrum input needs -f (and assumes e = 1)".into(),
                    EXIT_VALIDATION,
                )
            }
        };
        if let Some(e) = args.e {
            if e != 1 {
                return fail(
                    "validation",
                    "spectrum reconstruction requires e = 1".into(),
                    EXIT_VALIDATION,
                );
            }
        }
        if spec.len() < (f + 1) as usize {
            return fail(
                "validation",
                format!("need at least {} spectrum values", f + 1),
                EXIT_VALIDATION,
            );
        }
        reconstruct_e1(&spec, f, precision)
    } else if probe.get("gamma_plus").is_some() {
        let plus = match PuiseuxSeries::from_json_str(&probe["gamma_plus"].to_string()) {
            Ok(s) => s,
            Err(e) => return fail("validation", e, EXIT_VALIDATION),
        };
        let minus = match PuiseuxSeries::from_json_str(&probe["gamma_minus"].to_string()) {
            Ok(s) => s,
            Err(e) => return fail("validation", e, EXIT_VALIDATION),
        };
        reconstruct_from_branches(
            &BranchPair {
                gamma_plus: plus,
                gamma_minus: minus,
            },
            &kappa0,
            precision,
        )
    } else if probe.get("direction").is_some() {
        let diff = match PuiseuxSeries::from_json_str(&text) {
            Ok(s) => s,
            Err(e) => return fail("validation", e, EXIT_VALIDATION),
        };
        let (e, f) = match (args.e, args.f) {
            (Some(e), Some(f)) => (e, f),
            _ => {
                return fail(
                    "validation",
                    "diff-series input needs both -e and -f".into(),
                    EXIT_VALIDATION,
                )
            }
        };
        reconstruct_from_diff(&diff, e, f, &kappa0, precision)
    } else {
        return fail(
            "validation",
            "unrecognized input schema (expected spectrum, diff series, or branch pair)".into(),
            EXIT_VALIDATION,
        );
    };
    match result {
        Ok(shape) => {
            let g = guarantee(shape.e(), shape.f());
            let v = json!({
                "schema": "reconstruction/1",
                "shape": serde_json::from_str::<Value>(&shape.to_json()).unwrap(),
                "reflection": serde_json::from_str::<Value>(&shape.reindex(-1).to_json()).unwrap(),
                "note": "the shape and its reflection are equivalent; spectral data cannot distinguish them",
                "guarantee": serde_json::to_value(&g).unwrap(),
            });
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e @ ReconstructError::AmbiguousLattice(_))
        | Err(e @ ReconstructError::DegreesEqual) => fail("refusal", e.to_string(), EXIT_REFUSAL),
        Err(e) => fail("validation", e.to_string(), EXIT_VALIDATION),
    }
}

fn cmd_guarantee(args: &GuaranteeArgs, format: &str) -> ExitCode {
    if args.e < 1 || args.f < 1 {
        return fail(
            "validation",
            "e and f must be positive".into(),
            EXIT_VALIDATION,
        );
    }
    let g = guarantee(args.e, args.f);
    let v = serde_json::to_value(&g).expect("serializable");
    emit(format, &v, |v| {
        format!(
            "(e, f) = ({}, {}), n = {}: {:?}\n{}",
            v["e"], v["f"], v["n"], v["verdict"], v["notes"]
        )
    })
}

fn cmd_search(args: &SearchArgs) -> ExitCode {
    let opts = SearchOptions {
        e: args.e,
        f: args.f,
        n_moments: args.moments,
        denominator_bound: args.denominator_bound,
        unbiased_only: args.unbiased_only,
        max_cells: args.max_cells,
        resume_from: args.resume_from,
    };
    match search_isospectral(&opts) {
        Ok(out) => {
            // stream pairs as JSON lines, then a summary object
            for p in &out.candidates {
                println!(
                    "{}",
                    json!({"kind": "candidate", "cursor": p.cursor,
                           "a": serde_json::from_str::<Value>(&p.a).unwrap(),
                           "b": serde_json::from_str::<Value>(&p.b).unwrap()})
                );
            }
            for p in &out.construction_related {
                println!(
                    "{}",
                    json!({"kind": "related", "cursor": p.cursor,
                           "relation": serde_json::to_value(&p.relation).unwrap(),
                           "a": serde_json::from_str::<Value>(&p.a).unwrap(),
                           "b": serde_json::from_str::<Value>(&p.b).unwrap()})
                );
            }
            println!(
                "{}",
                json!({"kind": "summary", "schema": out.schema,
                       "cells_scanned": out.cells_scanned,
                       "last_block": out.last_block,
                       "candidates": out.candidates.len(),
                       "construction_related": out.construction_related.len()})
            );
            ExitCode::SUCCESS
        }
        Err(e @ MomentMapError::SearchSpaceTooLarge { .. }) => {
            fail("refusal", e.to_string(), EXIT_REFUSAL)
        }
    }
}

fn cmd_certify(args: &CertifyArgs, precision: u32) -> ExitCode {
    let text = match std::fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                "validation",
                format!("{}: {e}", args.input.display()),
                EXIT_VALIDATION,
            )
        }
    };
    let point = if let Ok(shape) = WalkShape::from_json_str(&text) {
        ParameterPoint::from_shape(&shape)
    } else {
        // parameter-point schema: {"e": .., "f": .., "kappas": ["..", ..]}
        let v: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return fail("validation", e.to_string(), EXIT_VALIDATION),
        };
        let (e, f) = match (v["e"].as_u64(), v["f"].as_u64()) {
            (Some(e), Some(f)) => (e as u32, f as u32),
            _ => {
                return fail(
                    "validation",
                    "point input needs integer \"e\" and \"f\"".into(),
                    EXIT_VALIDATION,
                )
            }
        };
        let kappas: Option<Vec<Rational>> = v["kappas"].as_array().map(|a| {
            a.iter()
                .filter_map(|x| parse_rational(x.as_str()?))
                .collect()
        });
        let kappas = match kappas {
            Some(k) if k.len() == (e + f + 1) as usize => k,
            _ => {
                return fail(
                    "validation",
                    "point input needs e+f+1 rational \"kappas\"".into(),
                    EXIT_VALIDATION,
                )
            }
        };
        match ParameterPoint::try_new(e, f, kappas) {
            Ok(p) => p,
            Err(e) => return fail("validation", e, EXIT_VALIDATION),
        }
    };
    let cert = morse_certificate(&point, precision);
    let v = serde_json::to_value(&cert).expect("serializable");
    println!("{v}");
    ExitCode::SUCCESS
}

fn cmd_tables(args: &TablesArgs, format: &str) -> ExitCode {
    let rows = match args.n {
        Some(n) => muller_rows_for_n(n),
        None => muller_tables(),
    };
    let v = json!({
        "schema": "muller-tables/1",
        "rows": serde_json::to_value(&rows).unwrap(),
    });
    emit(format, &v, |v| {
        let rows = v["rows"].as_array().unwrap();
        rows.iter()
            .map(|r| {
                format!(
                    "{:10} {:3} {:28} n={:10} e={:14} 1/e+1/f={}",
                    r["table"].as_str().unwrap_or("?"),
                    r["label"].as_str().unwrap_or(""),
                    r["group"].as_str().unwrap_or(""),
                    r["n"]
                        .get("Fixed")
                        .map(|x| x.to_string())
                        .or_else(|| r["n"].get("Formula").map(|x| x.to_string()))
                        .unwrap_or_default(),
                    r["e_options"].as_str().unwrap_or(""),
                    r["inv_e_plus_inv_f"].as_str().unwrap_or("")
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    })
}
