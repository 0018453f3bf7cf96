//! `subdiv-radius`: convergence and smoothness certificates for subdivision schemes.
//!
//! Exit codes: 0 success or certified regularity, 1 invalid input, 2 unsupported combination,
//! 3 sum rules fail, 4 divergence certified, 5 inconclusive.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use subdiv_core::difference::{factor, rotate_to_leading, FactorizationResult};
use subdiv_core::format::{self, parse_basis_json, parse_mask_json, parse_sequence_json, MaskFile, ValidatedMask};
use subdiv_core::mask::apply_subdivision;
use subdiv_core::rational::{format_rational, to_f64};
use subdiv_core::spectral::jsr::{jsr_branch_and_bound, BranchAndBoundOptions};
use subdiv_core::spectral::rsr::{self, RsrRegistry};
use subdiv_core::spectral::verdict::{regularity_report, ReportOptions, Status};
use subdiv_core::spectral::NormRegistry;
use subdiv_core::transition::{build_vk_basis, restrict, user_supplied_basis, SubspaceBasis};
use subdiv_core::{Error, MatrixMask, MultiIndex, Orientation, RatMatrix, VectorSequence};

#[derive(Parser)]
#[command(name = "subdiv-radius", version, about = "Certify convergence and smoothness of subdivision schemes")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the difference mask B_k.
    Factor(FactorArgs),
    /// Branch-and-bound bounds on the joint spectral radius on V_k.
    Jsr(JsrArgs),
    /// Restricted-norm bounds from the difference mask.
    Rsr(RsrArgs),
    /// Full regularity report.
    Check(CheckArgs),
    /// Iterate the scheme and print the control points as CSV.
    Render(RenderArgs),
}

#[derive(Args)]
struct Common {
    /// Mask JSON file.
    mask: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FactorArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    k: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormChoice {
    Inf,
    Two,
    Both,
}

impl NormChoice {
    fn names(self) -> Vec<String> {
        match self {
            NormChoice::Inf => vec!["inf".into()],
            NormChoice::Two => vec!["two".into()],
            NormChoice::Both => vec!["inf".into(), "two".into()],
        }
    }
}

#[derive(Args)]
struct JsrArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    depth: u32,
    #[arg(long, value_enum, default_value_t = NormChoice::Both)]
    norm: NormChoice,
    /// JSON list of row sequences spanning V_k.
    #[arg(long)]
    basis_file: Option<PathBuf>,
    /// Stop when upper - lower drops to this gap.
    #[arg(long, default_value_t = 0.0)]
    target_gap: f64,
    /// Largest number of products on one level.
    #[arg(long, default_value_t = 1 << 20)]
    node_limit: usize,
}

#[derive(Args)]
struct RsrArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    depth: u32,
    /// Difference mask to use instead of computing one (mask JSON or `factor` output).
    #[arg(long)]
    diff_mask: Option<PathBuf>,
    /// Also compute the good-set radius.
    #[arg(long)]
    exact_goodset: bool,
    /// closed-form, lp, nonnegative or goodset; chosen automatically when absent.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Highest smoothness order to try.
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    depth: u32,
    #[arg(long, value_enum, default_value_t = NormChoice::Both)]
    norm: NormChoice,
    #[arg(long)]
    exact_goodset: bool,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: Common,
    /// Number of refinement steps.
    #[arg(long, default_value_t = 5)]
    depth: u32,
    /// Initial control data (sequence JSON); a unit impulse at the origin by default.
    #[arg(long)]
    initial: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_mask(path: &Path) -> Result<ValidatedMask> {
    Ok(parse_mask_json(&read(path)?)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn matrix_json(m: &RatMatrix) -> Value {
    json!((0..m.rows()).map(|i| m.row(i).iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn factorization_json(b: &FactorizationResult) -> Value {
    json!({
        "b_mask": serde_json::to_value(MaskFile::from_mask(&b.b_mask)).expect("mask serializes"),
        "k": b.k,
        "m": b.m,
        "verified": b.verified,
        "canonical": b.canonical,
        "rotation": b.rotation.as_ref().map(matrix_json),
    })
}

fn pretty(v: &Value) -> String {
    format::to_canonical_json(v)
}

fn cmd_factor(args: &FactorArgs) -> Result<ExitCode> {
    let a = load_mask(&args.common.mask)?;
    let b = factor(&a.mask, args.k)?;
    emit(&args.common.out, &pretty(&factorization_json(&b)))?;
    Ok(ExitCode::SUCCESS)
}

fn subspace(mask: &MatrixMask, k: u32, m: usize, basis_file: &Option<PathBuf>) -> Result<SubspaceBasis> {
    Ok(match basis_file {
        Some(p) => user_supplied_basis(mask, parse_basis_json(&read(p)?)?, k)?,
        None => build_vk_basis(mask, k, m)?,
    })
}

fn cmd_jsr(args: &JsrArgs) -> Result<ExitCode> {
    let a = load_mask(&args.common.mask)?;
    let (lead, _, m) = rotate_to_leading(&a.mask)?;
    let basis = subspace(&lead, args.k, m, &args.basis_file)?;
    let family = restrict(&lead, &basis)?;
    let opts = BranchAndBoundOptions {
        max_depth: args.depth,
        target_gap: args.target_gap,
        node_limit: args.node_limit,
        ..Default::default()
    };
    let registry = NormRegistry::default();
    let mut reports = Vec::new();
    for name in args.norm.names() {
        let r = jsr_branch_and_bound(&family, registry.get(&name)?, &opts)?;
        log::info!("{} norm: {:.6} <= rho <= {:.6}", r.norm, r.lower, r.upper);
        reports.push(serde_json::to_value(r)?);
    }
    let out = json!({
        "k": args.k,
        "basis": basis.kind(),
        "dimension": basis.dim(),
        "reports": reports,
    });
    emit(&args.common.out, &pretty(&out))?;
    Ok(ExitCode::SUCCESS)
}

/// Difference mask from a file: either a bare mask or the output of `factor`.
fn supplied_difference(
    path: &Path,
    a: &ValidatedMask,
    lead: &MatrixMask,
    k: u32,
    m: usize,
) -> Result<FactorizationResult> {
    let mut v: Value = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(inner) = v.get_mut("b_mask") {
        v = inner.take();
    }
    let raw: MaskFile = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    let entries = raw
        .entries
        .iter()
        .map(|e| {
            let rows = e
                .value
                .iter()
                .map(|r| {
                    r.iter().map(|t| subdiv_core::rational::parse_rational(t)).collect::<subdiv_core::Result<Vec<_>>>()
                })
                .collect::<subdiv_core::Result<Vec<_>>>()?;
            Ok((MultiIndex::new(e.index.clone()), RatMatrix::from_rows(rows)?))
        })
        .collect::<subdiv_core::Result<Vec<_>>>()?;
    let b = MatrixMask::new(raw.s, raw.n, raw.d, entries)?.translated(&a.shift);
    let result = FactorizationResult::from_supplied(lead, b, k, m)?;
    if !result.verified {
        return Err(
            Error::SumRule("supplied difference mask does not satisfy the factorization identity".into()).into()
        );
    }
    Ok(result)
}

fn cmd_rsr(args: &RsrArgs) -> Result<ExitCode> {
    let a = load_mask(&args.common.mask)?;
    let b = match &args.diff_mask {
        Some(p) => {
            let (lead, _, m) = rotate_to_leading(&a.mask)?;
            supplied_difference(p, &a, &lead, args.k, m)?
        }
        None => factor(&a.mask, args.k)?,
    };
    let registry = RsrRegistry::default();
    let names: Vec<&str> = match &args.method {
        Some(name) => vec![name.as_str()],
        None if b.b_mask.dim() == 1 => vec!["closed-form"],
        None => vec!["nonnegative", "lp"],
    };
    let mut estimates = Vec::new();
    for name in names {
        let est = rsr::rsr_estimates(registry.get(name)?, &b, args.depth)?;
        let found = !est.is_empty();
        estimates.extend(est);
        if found {
            break;
        }
    }
    if estimates.is_empty() {
        return Err(Error::Unsupported("no restricted-norm method applies to this difference mask".into()).into());
    }
    let best = rsr::best_bound(&estimates).cloned();
    let goodset = if args.exact_goodset {
        match rsr::exact_rsr_goodset(&b)? {
            Some(rho) => json!(rho),
            None => json!("not-applicable"),
        }
    } else {
        Value::Null
    };
    let out = json!({
        "k": b.k,
        "estimates": estimates,
        "best": best,
        "goodset": goodset,
    });
    emit(&args.common.out, &pretty(&out))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode> {
    let a = load_mask(&args.common.mask)?;
    let opts =
        ReportOptions { k_max: args.k, depth: args.depth, norms: args.norm.names(), goodset: args.exact_goodset };
    let verdict = regularity_report(&a.mask, &opts)?;
    log::info!("verdict: {}", verdict.label());
    emit(&args.common.out, &verdict.to_json())?;
    Ok(match verdict.status {
        Status::ConvergentCertified | Status::CkCertified => ExitCode::SUCCESS,
        Status::DivergentCertified => ExitCode::from(4),
        Status::Inconclusive => ExitCode::from(5),
    })
}

fn csv_block(level: u32, c: &VectorSequence, out: &mut String) {
    for (idx, v) in c.entries() {
        let mut fields = vec![level.to_string()];
        fields.extend(idx.components().iter().map(|x| x.to_string()));
        fields.extend(v.iter().map(|q| format!("{:.12}", to_f64(q))));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
}

fn cmd_render(args: &RenderArgs) -> Result<ExitCode> {
    let a = load_mask(&args.common.mask)?;
    let mask = &a.mask;
    let mut c = match &args.initial {
        Some(p) => parse_sequence_json(&read(p)?)?,
        None => VectorSequence::delta(mask.dim(), mask.cols(), 0, MultiIndex::zeros(mask.dim()), Orientation::Column),
    };
    let mut header = vec!["level".to_string()];
    header.extend((1..=mask.dim()).map(|i| format!("i{i}")));
    header.extend((0..c.width()).map(|j| format!("c{j}")));
    let mut text = header.join(",") + "\n";
    if args.depth == 0 {
        csv_block(0, &c, &mut text);
    }
    for level in 1..=args.depth {
        c = apply_subdivision(mask, &c)?;
        csv_block(level, &c, &mut text);
    }
    emit(&args.common.out, text.trim_end())?;
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Unsupported(_)) => 2,
        Some(Error::SumRule(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let result = match &cli.command {
        Command::Factor(a) => cmd_factor(a),
        Command::Jsr(a) => cmd_jsr(a),
        Command::Rsr(a) => cmd_rsr(a),
        Command::Check(a) => cmd_check(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
