//! Command-line entry point. Subcommands share one configuration model:
//! values come from the config file when given, and individual flags
//! override file values. Exit codes: 0 success, 1 verification failure,
//! 2 malformed configuration or input, 3 computation failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::derivative::{finite_difference_field, ClassifyConfig};
use crate::engine::{default_sample_grid, maximal_field, OperatorKind};
use crate::explorer::{conditional_maximal_1d, line_field_corpus, line_maximal_abs, ratio_scan};
use crate::io;
use crate::profile::RadialProfile;
use crate::quadrature::QuadConfig;
use crate::svg::{Chart, Series};
use crate::verifier::checks::{line_equivalence, offaxis_audit, variation_row};
use crate::verifier::corpus::{corpus_generate, CorpusSpec};
use crate::verifier::{audit_corpus, default_corpus, run_verification};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "radmax",
    about = "Numerical laboratory for maximal functions of radial profiles",
    version
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ambient dimension; for eval this reinterprets the profile.
    #[arg(long, global = true)]
    dimension: Option<u32>,
    /// Base grid resolution.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Seed for all randomized components.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (fallback: RADMAX_WORKERS). Never affects results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Operator code: m, mc, mi, or f4.
    #[arg(long, global = true)]
    operator: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a maximal field of one profile and export it.
    Eval {
        /// Profile file (JSON or CSV); falls back to the config's `profile`.
        profile: Option<PathBuf>,
    },
    /// Run the full acceptance suite and write the verification report.
    Verify,
    /// Corpus sweep: fields, derivative tables, and plots.
    Report,
    /// Conditional-operator exploration on the line.
    ExploreMtilde,
    /// Off-axis and one-dimensional brute-force audits of the engine.
    Oracle,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("radmax: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) | Error::Profile(_) | Error::Serde(_) => 2,
                _ => 3,
            }
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.dimension {
        cfg.dimension = n;
    }
    if let Some(g) = cli.grid {
        cfg.grid = g;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(op) = &cli.operator {
        cfg.operator = op.clone();
    }
    if cfg.workers.is_none() {
        if let Ok(raw) = std::env::var("RADMAX_WORKERS") {
            let w: usize = raw
                .parse()
                .map_err(|_| Error::Config(format!("RADMAX_WORKERS must be an integer, got {raw:?}")))?;
            cfg.workers = Some(w);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let explicit_dimension = cli.dimension.is_some();
    let cfg = resolve_config(&cli)?;
    if let Some(w) = cfg.workers {
        if w > 0 {
            // Ignore the error from a pool that already exists: worker count
            // must not influence results, only scheduling.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build_global();
        }
    }
    std::fs::create_dir_all(&cfg.out)?;
    match cli.command {
        Command::Eval { profile } => eval(&cfg, profile.as_deref(), explicit_dimension),
        Command::Verify => verify(&cfg),
        Command::Report => report(&cfg),
        Command::ExploreMtilde => explore_mtilde(&cfg),
        Command::Oracle => oracle(&cfg),
    }
}

fn profile_series(p: &RadialProfile, grid: &[f64], label: &str, index: usize) -> Series {
    let pts = grid.iter().map(|&s| (s, p.evaluate(s))).collect();
    Series::new(label, pts, index)
}

fn field_series(field: &crate::engine::MaximalField, label: &str, index: usize) -> Series {
    let pts = field.samples.iter().map(|smp| (smp.s, smp.value)).collect();
    Series::new(label, pts, index)
}

fn eval(cfg: &RunConfig, arg_profile: Option<&Path>, explicit_dimension: bool) -> Result<i32> {
    let path = arg_profile
        .map(Path::to_path_buf)
        .or_else(|| cfg.profile.clone())
        .ok_or_else(|| Error::Config("eval needs a profile file (argument or config)".into()))?;
    let mut p = io::read_profile(&path)?;
    if explicit_dimension && cfg.dimension != p.dimension() {
        p = p.with_dimension(cfg.dimension)?;
    }
    let op = cfg.operator_kind()?;
    let hash = cfg.hash();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("profile")
        .to_string();
    let mut grid = default_sample_grid(&p, cfg.grid, cfg.extent);
    if matches!(op, OperatorKind::NonCentered | OperatorKind::Centered) {
        grid.insert(0, 0.0);
    }
    let field = maximal_field(&p, &grid, op, &stem, &cfg.engine_config())?;
    let base = cfg.out.join(format!("eval_{stem}_{}", op.code()));
    io::write_field_csv(&base.with_extension("csv"), &field, &hash)?;
    io::write_field_json(&base.with_extension("json"), &field, &hash)?;
    let mut chart = Chart::new(
        format!("{stem}: profile and {} field (n={})", op.code(), p.dimension()),
        "s",
        "value",
    );
    chart.push(profile_series(&p, &grid, "f", 0));
    chart.push(field_series(&field, op.code(), 1));
    std::fs::write(base.with_extension("svg"), chart.render(&hash))?;
    println!(
        "eval: {} samples of {} on {} written to {}",
        field.samples.len(),
        op.code(),
        stem,
        base.with_extension("csv").display()
    );
    Ok(0)
}

fn verify(cfg: &RunConfig) -> Result<i32> {
    let hash = cfg.hash();
    let report = run_verification(cfg.seed, cfg.grid, &hash)?;
    for c in &report.criteria {
        println!(
            "criterion {:02} {:<28} {}  {}",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    io::write_verification_json(&cfg.out.join("verification.json"), &report)?;
    io::write_verification_csv(&cfg.out.join("verification.csv"), &report)?;
    println!(
        "verify: {} of {} criteria passed (config {hash})",
        report.criteria.iter().filter(|c| c.passed).count(),
        report.criteria.len()
    );
    Ok(if report.passed { 0 } else { 1 })
}

fn report(cfg: &RunConfig) -> Result<i32> {
    let hash = cfg.hash();
    let engine = cfg.engine_config();
    let quad = QuadConfig::default();
    let corpus = match &cfg.corpus {
        Some(families) => corpus_generate(&CorpusSpec {
            dimension: cfg.dimension,
            families: families.clone(),
            seed: cfg.seed,
        })?,
        None => default_corpus(cfg.dimension, cfg.seed),
    };
    let count = cfg.grid / 4 + 1;
    let mut rows_summary = Vec::new();
    for item in &corpus {
        let p = &item.profile;
        let grid = default_sample_grid(p, count, cfg.extent);
        let coarse_grid = default_sample_grid(p, count / 2 + 1, cfg.extent);
        let m = maximal_field(p, &grid, OperatorKind::NonCentered, &item.id, &engine)?;
        let m_coarse =
            maximal_field(p, &coarse_grid, OperatorKind::NonCentered, &item.id, &engine)?;
        let mi = maximal_field(p, &grid, OperatorKind::Inner, &item.id, &engine)?;
        let f4 = maximal_field(p, &grid, OperatorKind::Endpoint, &item.id, &engine)?;
        io::write_field_csv(&cfg.out.join(format!("{}_m.csv", item.id)), &m, &hash)?;
        io::write_field_csv(&cfg.out.join(format!("{}_mi.csv", item.id)), &mi, &hash)?;
        io::write_field_csv(&cfg.out.join(format!("{}_f4.csv", item.id)), &f4, &hash)?;
        let rows = finite_difference_field(&m, p, &ClassifyConfig::default(), &quad)?;
        io::write_derivative_csv(
            &cfg.out.join(format!("{}_derivative.csv", item.id)),
            &rows,
            &hash,
        )?;
        let mut values = Chart::new(format!("{} (n={})", item.id, p.dimension()), "s", "value");
        values.push(profile_series(p, &grid, "f", 0));
        values.push(field_series(&m, "Mf", 1));
        values.push(field_series(&mi, "inner", 2));
        values.push(field_series(&f4, "endpoint", 3));
        std::fs::write(
            cfg.out.join(format!("{}_values.svg", item.id)),
            values.render(&hash),
        )?;
        let mut deriv = Chart::new(format!("{} derivatives", item.id), "s", "d/ds");
        deriv.push(Series::new(
            "finite difference",
            rows.iter().map(|r| (r.s, r.fd)).collect(),
            0,
        ));
        deriv.push(Series::new(
            "kernel formula",
            rows.iter().map(|r| (r.s, r.formula)).collect(),
            1,
        ));
        std::fs::write(
            cfg.out.join(format!("{}_derivative.svg", item.id)),
            deriv.render(&hash),
        )?;
        rows_summary.push(variation_row(&item.id, p, &m_coarse, &m));
    }
    io::write_json(
        &cfg.out.join("report.json"),
        &serde_json::json!({ "config_hash": hash, "variation": rows_summary }),
    )?;
    println!(
        "report: {} profiles in dimension {} written to {}",
        corpus.len(),
        cfg.dimension,
        cfg.out.display()
    );
    Ok(0)
}

fn explore_mtilde(cfg: &RunConfig) -> Result<i32> {
    use std::fmt::Write as _;
    let hash = cfg.hash();
    let fields = line_field_corpus(20, cfg.seed);
    let mut rows = format!("# config={hash}\nfield,x,conditional,plain,gap,witnesses\n");
    let mut worst_gap = f64::NEG_INFINITY;
    for (k, field) in fields.iter().enumerate() {
        let knots = field.knots();
        let mids: Vec<f64> = knots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let stride = (mids.len() / 11).max(1);
        for x in mids.iter().step_by(stride) {
            let cond = conditional_maximal_1d(field, *x);
            let extra: Vec<(f64, f64)> = cond.witnesses.iter().map(|w| (w.a, w.b)).collect();
            let plain = line_maximal_abs(field, *x, &extra);
            let gap = cond.value - plain;
            worst_gap = worst_gap.max(gap);
            let _ = writeln!(
                rows,
                "{k},{x:.17e},{:.17e},{plain:.17e},{gap:.17e},{}",
                cond.value,
                cond.witnesses.len()
            );
        }
    }
    std::fs::write(cfg.out.join("mtilde_points.csv"), rows)?;
    let scan = ratio_scan(2048)?;
    io::write_trend_csv(&cfg.out.join("mtilde_trends.csv"), &scan, &hash)?;
    io::write_json(
        &cfg.out.join("mtilde_trends.json"),
        &serde_json::json!({ "config_hash": hash, "report": scan }),
    )?;
    let mut chart = Chart::new("conditional-to-plain L1 ratios", "doubling index", "ratio");
    for (k, trend) in scan.trends.iter().enumerate() {
        let pts = trend
            .ratios
            .iter()
            .enumerate()
            .map(|(i, r)| (i as f64, *r))
            .collect();
        chart.push(Series::new(trend.family.clone(), pts, k));
    }
    std::fs::write(cfg.out.join("mtilde_trends.svg"), chart.render(&hash))?;
    let growing: Vec<&str> = scan
        .trends
        .iter()
        .filter(|t| t.growing)
        .map(|t| t.family.as_str())
        .collect();
    println!(
        "explore-mtilde: worst domination gap {worst_gap:.3e}; growing families: {}",
        if growing.is_empty() {
            "none".to_string()
        } else {
            growing.join(", ")
        }
    );
    Ok(0)
}

fn oracle(cfg: &RunConfig) -> Result<i32> {
    let hash = cfg.hash();
    let engine = cfg.engine_config();
    let mut corpus = audit_corpus(2, cfg.seed);
    corpus.extend(audit_corpus(3, cfg.seed));
    let balls = (2000 * cfg.grid / 1024).max(500);
    let (checked, worst_offaxis) = offaxis_audit(&corpus, 4, balls, cfg.seed, &engine)?;
    let line_corpus = audit_corpus(1, cfg.seed);
    let mut worst_line = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for item in &line_corpus {
        let (gap, ratio, _) =
            line_equivalence(&item.profile, &item.id, cfg.grid / 8 + 1, &engine)?;
        worst_line = worst_line.max(gap / item.profile.sup_norm().max(1.0));
        worst_ratio = worst_ratio.max(ratio);
    }
    let pass = worst_offaxis <= 1e-6 && worst_line <= 1e-6 && worst_ratio <= 1.0 + 1e-3;
    io::write_json(
        &cfg.out.join("oracle.json"),
        &serde_json::json!({
            "config_hash": hash,
            "offaxis": { "points": checked, "balls_per_point": balls, "worst_gap": worst_offaxis },
            "line": { "profiles": line_corpus.len(), "worst_gap": worst_line, "worst_variation_ratio": worst_ratio },
            "passed": pass,
        }),
    )?;
    println!(
        "oracle: off-axis worst gap {worst_offaxis:.3e} over {checked} points, line worst gap {worst_line:.3e}, variation ratio {worst_ratio:.6} -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { 0 } else { 1 })
}
