//! `kfusion`: analyze and verify K-fusion frame instances, generate seeded
//! structured instances, and run the full property suite.
//!
//! Exit codes: 0 all checks pass, 1 check failure or internal diagnostic,
//! 2 parse/validation/usage error, 3 violated precondition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kfusion_cli::model;
use kfusion_core::error::Error;
use kfusion_core::harness::{
    analyze_instance, run_suite, verify_instance_check, CheckName, CheckRecord, SuiteConfig,
    VerificationReport,
};
use kfusion_core::kfusion::{canonical_kdual_fusion, fusion_analyze};
use kfusion_core::numerics::{RangedOperator, Tolerances};
use kfusion_core::spaces::{random_instance, Instance, InstanceParams, Structure};

const EXIT_CHECK_FAILED: i32 = 1;
const EXIT_VALIDATION: i32 = 2;
const EXIT_PRECONDITION: i32 = 3;

#[derive(Parser)]
#[command(
    name = "kfusion",
    version,
    about = "K-fusion frames: analysis, duality and multiplier verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze every family of an instance file against its operator K.
    Analyze(AnalyzeArgs),
    /// Run a named verification check against an instance file.
    Verify(VerifyArgs),
    /// Generate a seeded structured instance file.
    Random(RandomArgs),
    /// Run the full seeded property suite.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Instance file (JSON).
    path: PathBuf,
    /// Emit the machine-readable report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance file (JSON).
    path: PathBuf,
    /// Check to run: reconstruction | kdual | canonical-dual | kframe |
    /// local | local-duals | kw | lemma-v | multiplier | factorization |
    /// inverse | lower-bound | invertibility | composition |
    /// onb-composition | all.
    #[arg(long)]
    check: String,
    /// Override the residual tolerance used for preconditions and rank
    /// decisions (defaults to the instance file's value, or the
    /// KFUSION_TOL_RESIDUAL environment variable when set).
    #[arg(long)]
    tol: Option<f64>,
    /// Emit the machine-readable report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    subspaces: usize,
    #[arg(long)]
    seed: u64,
    /// Rank of the generated operator K (defaults to the dimension).
    #[arg(long = "rank-k")]
    rank_k: Option<usize>,
    /// generic | k_invertible | inside_pinv_range | block_orthogonal.
    #[arg(long, default_value = "generic")]
    structure: String,
    /// Comma-separated subspace dims (block dims for block_orthogonal).
    #[arg(long = "subspace-dims", value_delimiter = ',')]
    subspace_dims: Option<Vec<usize>>,
    /// complex | real.
    #[arg(long, default_value = "complex")]
    field: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Dimension spec: "2..8", "3", or "2,4,6".
    #[arg(long, default_value = "2..8")]
    dims: String,
    /// Sample count for the randomized Rayleigh oracle.
    #[arg(long = "oracle-samples", default_value_t = 2000)]
    oracle_samples: usize,
    /// Emit the machine-readable report instead of text.
    #[arg(long)]
    json: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Random(args) => cmd_random(&args),
        Command::Suite(args) => cmd_suite(&args),
    };
    std::process::exit(code);
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Dimension(_)
        | Error::Validation(_)
        | Error::Infeasible(_)
        | Error::UndefinedResidual(_) => EXIT_VALIDATION,
        Error::Precondition(_) | Error::NotKFrame(_) => EXIT_PRECONDITION,
        Error::Diagnostic(_) => EXIT_CHECK_FAILED,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

/// Residual tolerance precedence: --tol flag, then KFUSION_TOL_RESIDUAL, then
/// the instance file.
fn effective_tol(inst: &Instance<f64>, flag: Option<f64>) -> Result<Tolerances<f64>, Error> {
    let residual = if let Some(t) = flag {
        t
    } else if let Ok(env) = std::env::var("KFUSION_TOL_RESIDUAL") {
        env.parse::<f64>().map_err(|_| {
            Error::Validation(format!("KFUSION_TOL_RESIDUAL is not a number: '{env}'"))
        })?
    } else {
        inst.tol.residual_rel
    };
    Tolerances::new(inst.tol.rank_rel, residual)
}

#[derive(Serialize)]
struct AnalyzeReport {
    schema_version: u32,
    kind: &'static str,
    dim: usize,
    field: String,
    structure: String,
    pinv_norm: f64,
    families: Vec<kfusion_core::harness::FamilyAnalysisSummary>,
}

fn cmd_analyze(args: &AnalyzeArgs) -> i32 {
    let inst = match model::read_instance(&args.path) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let tol = match effective_tol(&inst, None) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    match analyze_instance(&inst, &tol) {
        Ok((pinv_norm, families)) => {
            if args.json {
                let report = AnalyzeReport {
                    schema_version: model::SCHEMA_VERSION,
                    kind: "analyze",
                    dim: inst.dim,
                    field: inst.field.to_string(),
                    structure: inst.structure.as_str().to_string(),
                    pinv_norm,
                    families,
                };
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!(
                    "instance: dim {}, field {}, structure {}, ‖K†‖ = {:.6e}",
                    inst.dim,
                    inst.field,
                    inst.structure.as_str(),
                    pinv_norm
                );
                for f in &families {
                    println!(
                        "family {}: is_bessel {} is_kfusion {}{} A_opt {:.6e} B_opt {:.6e} douglas {}",
                        f.family,
                        f.is_bessel,
                        f.is_kfusion,
                        if f.vacuous { " (vacuous: K = 0)" } else { "" },
                        f.lower_bound,
                        f.upper_bound,
                        f.douglas_holds,
                    );
                }
            }
            0
        }
        Err(e) => fail(&e),
    }
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    kind: &'static str,
    check: String,
    pass: bool,
    records: Vec<CheckRecord>,
}

fn cmd_verify(args: &VerifyArgs) -> i32 {
    let inst = match model::read_instance(&args.path) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let check = match CheckName::parse(&args.check) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let tol = match effective_tol(&inst, args.tol) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    match verify_instance_check(&inst, check, &tol) {
        Ok(records) => {
            let pass = records.iter().all(|r| r.pass);
            if args.json {
                let report = VerifyReport {
                    schema_version: model::SCHEMA_VERSION,
                    kind: "verify",
                    check: args.check.clone(),
                    pass,
                    records,
                };
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                for r in &records {
                    println!(
                        "{:<34} {:>12.6e}  (threshold {:.1e})  {}{}",
                        r.check,
                        r.value,
                        r.threshold,
                        if r.pass { "pass" } else { "FAIL" },
                        r.detail
                            .as_deref()
                            .map(|d| format!("  [{d}]"))
                            .unwrap_or_default(),
                    );
                }
                println!("verify {}: {}", args.check, if pass { "pass" } else { "FAIL" });
            }
            if pass {
                0
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => fail(&e),
    }
}

fn cmd_random(args: &RandomArgs) -> i32 {
    let structure: Structure = match args.structure.parse() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let field = match model::parse_field(&args.field) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let params = InstanceParams {
        dim: args.dim,
        n_subspaces: args.subspaces,
        subspace_dims: args.subspace_dims.clone(),
        k_rank: args.rank_k.unwrap_or(args.dim),
        structure,
        field,
    };
    let mut inst = match random_instance::<f64>(args.seed, &params) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    // The canonical-dual structure ships V as the canonical K-dual of W, so
    // duality checks run directly on the generated file.
    if structure == Structure::KInvertible {
        if let Err(e) = attach_canonical_dual(&mut inst) {
            return fail(&e);
        }
    }
    if let Err(e) = model::write_instance(&args.out, &inst) {
        return fail(&e);
    }
    println!("wrote {}", args.out.display());
    0
}

fn attach_canonical_dual(inst: &mut Instance<f64>) -> Result<(), Error> {
    let tol = inst.tol;
    let k = RangedOperator::new(inst.k.clone(), &tol)?;
    let w = inst.family("W")?.clone();
    let analysis = fusion_analyze(&w, &k, &tol)?;
    let dual = canonical_kdual_fusion(&w, &k, &analysis, &tol)?;
    inst.families.insert("V".to_string(), dual);
    Ok(())
}

fn parse_dims(spec: &str) -> Result<Vec<usize>, Error> {
    let bad = |msg: &str| Error::Validation(format!("invalid --dims '{spec}': {msg}"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad("bad lower bound"))?;
        let hi: usize = hi.trim().parse().map_err(|_| bad("bad upper bound"))?;
        if lo > hi {
            return Err(bad("empty range"));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|part| part.trim().parse().map_err(|_| bad("bad entry")))
        .collect()
}

fn cmd_suite(args: &SuiteArgs) -> i32 {
    let dims = match parse_dims(&args.dims) {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };
    let config = SuiteConfig {
        seed: args.seed,
        trials: args.trials,
        dims,
        oracle_samples: args.oracle_samples,
    };
    match run_suite(&config) {
        Ok(report) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                print_suite_text(&report);
            }
            if report.all_passed() {
                0
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => fail(&e),
    }
}

fn print_suite_text(report: &VerificationReport) {
    use std::collections::BTreeMap;
    struct Line {
        count: usize,
        failed: usize,
        worst: f64,
    }
    let mut lines: BTreeMap<&str, Line> = BTreeMap::new();
    for r in &report.records {
        let line = lines.entry(&r.check).or_insert(Line {
            count: 0,
            failed: 0,
            worst: f64::NEG_INFINITY,
        });
        line.count += 1;
        if !r.pass {
            line.failed += 1;
        }
        // For residuals the worst case is the largest value; for slack the
        // most negative; flags report failures through the counter.
        let badness = match r.metric {
            kfusion_core::harness::Metric::Residual => r.value,
            kfusion_core::harness::Metric::Slack => -r.value,
            kfusion_core::harness::Metric::Flag => -r.value,
        };
        if badness > line.worst {
            line.worst = badness;
        }
    }
    println!("{:<40} {:>7} {:>14} {:>8}", "check", "records", "worst", "result");
    for (name, line) in &lines {
        println!(
            "{:<40} {:>7} {:>14.3e} {:>8}",
            name,
            line.count,
            line.worst,
            if line.failed == 0 { "pass" } else { "FAIL" }
        );
    }
    println!(
        "suite: seed {}, trials {}, dims {:?}: {} records, {} passed, {} failed ({} ms)",
        report.seed,
        report.trials,
        report.dims,
        report.summary.total,
        report.summary.passed,
        report.summary.failed,
        report.wall_ms,
    );
}
