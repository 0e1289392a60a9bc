//! `chsh-forge` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 input, 3 falsification (a local model
//! with `|S| > 2`), 4 insufficient pool.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::experiment::{self, EmpiricalReport, FluctuationReport};
use crate::lhv::{
    chsh_from, validate_model, CorrelationReport, FactorizationReport, IntegrandValue, LhvModel, ModelDocument,
    QuartetPair, SettingUniverse, ValidationReport,
};
use crate::optimizer::{self, HuntConfig, HuntReport, VIOLATION_THRESHOLD};
use crate::pool::{self, QuantumTargets, Schedule, Selection, StitchReport, StitchedModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;
pub const EXIT_INSUFFICIENT_POOL: i32 = 4;

/// Caps hunt parallelism.
pub const THREADS_ENV: &str = "CHSH_FORGE_THREADS";

/// Tolerance for the two `S` routes agreeing and for factorization.
const ROUTE_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "chsh-forge", version, about = "Local hidden variable models and the CHSH bound")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Master seed; required by every stochastic command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of models (hunt), pool size (pool-select, stitch-demo) or trials per pair (estimate).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: Option<u64>,
    /// Hidden points per random model.
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub space_size: u64,
    /// Matching tolerance for pool selection.
    #[arg(long, global = true, default_value_t = pool::DEFAULT_MATCH_TOL)]
    pub tol: f64,
    /// Machine-readable output file.
    #[arg(long = "out", global = true)]
    pub output_path: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// stitch-demo: take components from a random pool instead of building them.
    #[arg(long, global = true)]
    pub pool_select: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSet {
    /// (+1/sqrt2, -1/sqrt2, -1/sqrt2, -1/sqrt2)
    Quantum,
    /// (+1, -1, -1, -1)
    Extremal,
}

impl TargetSet {
    fn targets(self) -> QuantumTargets {
        match self {
            TargetSet::Quantum => QuantumTargets::quantum(),
            TargetSet::Extremal => QuantumTargets::extremal(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file: correlations, S by two routes, integrand, factorization.
    Verify { model_file: PathBuf },
    /// Search random local models for a CHSH violation.
    Hunt,
    /// Stitch four per-pair models and compare S* with each component's own S.
    StitchDemo {
        #[arg(long, value_enum, default_value_t = TargetSet::Quantum)]
        targets: TargetSet,
    },
    /// Draw a random pool, write its manifest and select trials matching the targets.
    PoolSelect {
        #[arg(long, value_enum, default_value_t = TargetSet::Quantum)]
        targets: TargetSet,
    },
    /// Simulate a finite experiment on a model file.
    Estimate {
        model_file: PathBuf,
        /// Also write the CSV trial log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Repeat the experiment this many times and report how often |S_hat| > 2.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: Option<u64>,
    },
    /// List the 16 deterministic strategies and their S.
    Enumerate,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Falsified(String),
    InsufficientPool(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Input(_) => EXIT_INPUT,
            Failure::Falsified(_) => EXIT_FALSIFIED,
            Failure::InsufficientPool(_) => EXIT_INSUFFICIENT_POOL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Falsified(m) | Failure::InsufficientPool(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = &cli.config;
    let result = match &cli.command {
        Command::Verify { model_file } => cmd_verify(cfg, model_file),
        Command::Hunt => cmd_hunt(cfg),
        Command::StitchDemo { targets } => cmd_stitch_demo(cfg, *targets),
        Command::PoolSelect { targets } => cmd_pool_select(cfg, *targets),
        Command::Estimate { model_file, log, runs } => cmd_estimate(cfg, model_file, log.as_deref(), *runs),
        Command::Enumerate => cmd_enumerate(cfg),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn require_seed(cfg: &RunConfig, command: &str) -> Result<u64, Failure> {
    cfg.seed
        .ok_or_else(|| Failure::Usage(format!("`{command}` is stochastic and needs --seed")))
}

fn space_size(cfg: &RunConfig) -> usize {
    cfg.space_size as usize
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_output(cfg: &RunConfig, contents: &str) -> CmdResult {
    match &cfg.output_path {
        Some(path) => write_file(path, contents),
        None => Ok(()),
    }
}

fn load_model(path: &Path) -> Result<LhvModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let doc = ModelDocument::from_json(&text)
        .map_err(|e| Failure::Input(format!("{}: parse error: {e}", path.display())))?;
    let report = validate_model(&doc);
    if !report.passed() {
        return Err(Failure::Input(format!("{}: invalid model\n{report}", path.display())));
    }
    doc.into_model().map_err(|e| Failure::Input(e.to_string()))
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    validation: ValidationReport,
    correlations: Vec<CorrelationReport>,
    s_correlations: f64,
    s_integrand: f64,
    routes_agree: bool,
    bound_holds: bool,
    integrand: Vec<IntegrandValue<'a>>,
    factorization: FactorizationReport,
}

fn cmd_verify(cfg: &RunConfig, model_file: &Path) -> CmdResult {
    let model = load_model(model_file)?;
    let u = model.universe();
    let e = model.quartet_correlations();
    let correlations: Vec<CorrelationReport> = QuartetPair::ALL
        .into_iter()
        .map(|p| {
            let (a, b) = u.pair_names(p);
            CorrelationReport { alice: a.to_string(), bob: b.to_string(), value: e[p] }
        })
        .collect();
    let s_correlations = chsh_from(&e);
    let s_integrand = optimizer::brute_force_chsh(&model);
    let routes_agree = (s_correlations - s_integrand).abs() <= ROUTE_TOL;
    let bound_holds = s_correlations.abs() <= VIOLATION_THRESHOLD && s_integrand.abs() <= VIOLATION_THRESHOLD;
    let report = VerifyReport {
        validation: model.validate(),
        correlations,
        s_correlations,
        s_integrand,
        routes_agree,
        bound_holds,
        integrand: model.integrand_values(),
        factorization: model.factorization_check(ROUTE_TOL),
    };

    println!("correlations:");
    for (p, c) in QuartetPair::ALL.iter().zip(&report.correlations) {
        println!("  {p} E({}, {}) = {:+.17}", c.alice, c.bob, c.value);
    }
    println!("S (four correlations)   = {:+.17}", s_correlations);
    println!("S (weighted integrand)  = {:+.17}", s_integrand);
    println!("integrand A1(B1-B2) - A2(B1+B2):");
    for v in &report.integrand {
        println!("  {:<12} weight {:.17}  value {:+}", v.point, v.weight, v.value);
    }
    println!(
        "factorization E(a,b) = E_A(a) E_B(b): {}",
        if report.factorization.all_factorized { "holds on every pair" } else { "fails" }
    );
    for p in &report.factorization.pairs {
        println!(
            "  ({}, {}) joint {:+.6} product {:+.6} {}",
            p.alice,
            p.bob,
            p.joint,
            p.alice_marginal * p.bob_marginal,
            if p.factorized { "factorized" } else { "correlated" }
        );
    }
    write_output(cfg, &to_json(&report))?;
    if !bound_holds {
        return Err(Failure::Falsified(format!("|S| = {} exceeds 2", s_correlations.abs())));
    }
    if !routes_agree {
        return Err(Failure::Falsified(format!(
            "routes disagree: {s_correlations} vs {s_integrand}"
        )));
    }
    println!("bound |S| <= 2 holds");
    Ok(())
}

fn hunt_threads() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Some)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Serialize)]
struct FalsificationEvent {
    model_index: u64,
    seed: u64,
    s: f64,
    model: ModelDocument,
}

fn falsification_path(cfg: &RunConfig) -> PathBuf {
    match &cfg.output_path {
        Some(p) => p.with_extension("falsification.json"),
        None => PathBuf::from("falsification.json"),
    }
}

fn cmd_hunt(cfg: &RunConfig) -> CmdResult {
    let seed = require_seed(cfg, "hunt")?;
    let count = cfg.count.unwrap_or(100_000);
    let universe = Arc::new(SettingUniverse::standard());
    let config = HuntConfig { threads: hunt_threads()?, ..HuntConfig::default() };
    let report = optimizer::hunt_with(seed, count, space_size(cfg), &universe, &config)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    print_hunt(&report);
    write_output(cfg, &to_json(&report))?;
    if report.violations > 0 {
        let events = report
            .falsifications
            .iter()
            .map(|f| {
                let model = pool::random_model(f.seed, space_size(cfg), &universe)
                    .map_err(|e| Failure::Input(e.to_string()))?;
                Ok(FalsificationEvent { model_index: f.model_index, seed: f.seed, s: f.s, model: model.to_document() })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let path = falsification_path(cfg);
        write_file(&path, &to_json(&events))?;
        return Err(Failure::Falsified(format!(
            "FALSIFICATION: {} model(s) with |S| > 2, details in {}",
            report.violations,
            path.display()
        )));
    }
    Ok(())
}

fn print_hunt(r: &HuntReport) {
    println!("models       {}", r.n_models);
    println!("space size   {}", r.space_size);
    println!("max |S|      {:.17}", r.max_abs_s);
    println!("argmax       model {} (seed {}), S = {:+.17}", r.argmax_index, r.argmax_seed, r.argmax_s);
    println!("violations   {}", r.violations);
    println!("histogram of S (bucket width {}):", r.histogram.width);
    for (k, &c) in r.histogram.counts.iter().enumerate() {
        if c > 0 {
            let lo = r.histogram.lo + k as f64 * r.histogram.width;
            println!("  [{:+.2}, {:+.2}) {}", lo, lo + r.histogram.width, c);
        }
    }
}

#[derive(Debug, Serialize)]
struct StitchDemoReport {
    mode: &'static str,
    targets: TargetSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool_size: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Selection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stitched: Option<StitchReport>,
}

fn draw_and_select(cfg: &RunConfig, command: &str, targets: &QuantumTargets) -> Result<(u64, Vec<pool::PoolEntry>, Selection), Failure> {
    let seed = require_seed(cfg, command)?;
    let n = cfg.count.unwrap_or(10_000) as usize;
    let universe = Arc::new(SettingUniverse::standard());
    let entries = pool::draw_pool(seed, n, &universe, space_size(cfg), &Schedule::UniformRandom)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let selection = pool::select_matching_trials(&entries, targets, cfg.tol).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((seed, entries, selection))
}

fn cmd_stitch_demo(cfg: &RunConfig, target_set: TargetSet) -> CmdResult {
    let targets = target_set.targets();
    let universe = Arc::new(SettingUniverse::standard());
    let mut report = StitchDemoReport {
        mode: "direct",
        targets: target_set,
        seed: None,
        pool_size: None,
        tol: None,
        selection: None,
        stitched: None,
    };
    let stitched = if cfg.pool_select {
        let (seed, entries, selection) = draw_and_select(cfg, "stitch-demo --pool-select", &targets)?;
        report.mode = "pool-select";
        report.seed = Some(seed);
        report.pool_size = Some(entries.len() as u64);
        report.tol = Some(cfg.tol);
        let stitched = selection.stitch_from(&entries);
        report.selection = Some(selection);
        match stitched {
            Ok(s) => s,
            Err(e) => {
                write_output(cfg, &to_json(&report))?;
                return Err(Failure::InsufficientPool(e.to_string()));
            }
        }
    } else {
        StitchedModel::from_targets(&targets, &universe).map_err(|e| Failure::Usage(e.to_string()))?
    };
    let sr = pool::stitch_report(&stitched, &targets, report.selection.as_ref());

    println!("mode: {}", report.mode);
    println!("{:<6} {:>7} {:>20} {:>20} {:>12}", "pair", "trial", "target", "E_{L_q}(q)", "own S");
    for c in &sr.components {
        let trial = c.trial_index.map_or("-".to_string(), |n| n.to_string());
        println!(
            "{:<6} {:>7} {:>+20.17} {:>+20.17} {:>+12.9}",
            c.pair.label(),
            trial,
            c.target,
            c.selected_correlation,
            c.own_chsh
        );
    }
    println!("S* (stitched, non-local) = {:+.17}", sr.s_star);
    println!("max |S| over components  = {:.17}", sr.max_component_abs_chsh);
    report.stitched = Some(sr);
    write_output(cfg, &to_json(&report))
}

#[derive(Debug, Serialize)]
struct PoolSelectReport {
    seed: u64,
    pool_size: usize,
    space_size: usize,
    tol: f64,
    targets: TargetSet,
    selection: Selection,
    /// Pool models matching all four targets at once; always empty for local
    /// models and the quantum targets.
    full_matches: Vec<usize>,
}

fn cmd_pool_select(cfg: &RunConfig, target_set: TargetSet) -> CmdResult {
    let targets = target_set.targets();
    let (seed, entries, selection) = draw_and_select(cfg, "pool-select", &targets)?;
    let full_matches = pool::full_target_matches(&entries, &targets, cfg.tol);
    if let Some(path) = &cfg.output_path {
        let mut buf = Vec::new();
        pool::write_manifest(&entries, &mut buf).map_err(|e| Failure::Input(e.to_string()))?;
        write_file(path, &String::from_utf8(buf).expect("JSON is UTF-8"))?;
    }
    println!("pool of {} models, tol {}", entries.len(), cfg.tol);
    for pair in QuartetPair::ALL {
        match selection.matches.get(&pair) {
            Some(n) => println!("  {pair}: trial {n}, E = {:+.17}", entries[n - 1].model.pair_correlation(pair)),
            None => println!("  {pair}: no match"),
        }
    }
    println!("models matching all four targets: {}", full_matches.len());
    let report = PoolSelectReport {
        seed,
        pool_size: entries.len(),
        space_size: space_size(cfg),
        tol: cfg.tol,
        targets: target_set,
        selection: selection.clone(),
        full_matches,
    };
    println!("{}", to_json(&report).trim_end());
    if !selection.is_complete() {
        return Err(Failure::InsufficientPool(format!(
            "no matching trial for: {}",
            crate::lhv::pair_list(&selection.missing)
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    seed: u64,
    n_per_pair: u64,
    empirical: EmpiricalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    fluctuation: Option<FluctuationReport>,
}

fn cmd_estimate(cfg: &RunConfig, model_file: &Path, log: Option<&Path>, runs: Option<u64>) -> CmdResult {
    let model = load_model(model_file)?;
    let seed = require_seed(cfg, "estimate")?;
    let n = cfg.count.unwrap_or(10_000);
    let records = experiment::run_trials(&model, &experiment::round_robin(n as usize), seed)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let empirical = experiment::compare(&model, &records).map_err(|e| Failure::Input(e.to_string()))?;
    let fluctuation = runs
        .map(|r| experiment::fluctuation_demo(&model, n as usize, r as usize, seed))
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))?;

    println!("{:<6} {:>12} {:>20} {:>20} {:>14}", "pair", "settings", "exact", "empirical", "stderr");
    for p in &empirical.per_pair {
        println!(
            "{:<6} {:>12} {:>+20.17} {:>+20.17} {:>14.9}",
            p.pair.label(),
            format!("({},{})", p.alice, p.bob),
            p.exact,
            p.mean,
            p.stderr
        );
    }
    println!("S exact {:+.17}  S_hat {:+.17}  stderr {:.9}", empirical.s_exact, empirical.s_hat, empirical.s_stderr);
    if let Some(f) = &fluctuation {
        println!(
            "{} runs of {} per pair: |S_hat| > 2 in {} ({:.4}), exact S = {}",
            f.runs, f.n_per_pair, f.exceed_count, f.fraction_exceeding, f.exact_s
        );
    }

    let mut csv = Vec::new();
    experiment::write_trial_log(&records, &mut csv).map_err(|e| Failure::Input(e.to_string()))?;
    let csv = String::from_utf8(csv).expect("CSV is UTF-8");
    if let Some(path) = log {
        write_file(path, &csv)?;
    }
    let report = EstimateReport { seed, n_per_pair: n, empirical, fluctuation };
    match cfg.format {
        Format::Json => write_output(cfg, &to_json(&report)),
        Format::Csv => write_output(cfg, &csv),
    }
}

#[derive(Debug, Serialize)]
struct EnumerationRow {
    a1: i8,
    a2: i8,
    b1: i8,
    b2: i8,
    s: i32,
}

fn cmd_enumerate(cfg: &RunConfig) -> CmdResult {
    let rows: Vec<EnumerationRow> = optimizer::enumerate_deterministic()
        .into_iter()
        .map(|(st, s)| EnumerationRow { a1: st.a1, a2: st.a2, b1: st.b1, b2: st.b2, s })
        .collect();
    let mut csv = String::from("a1,a2,b1,b2,s\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.a1, r.a2, r.b1, r.b2, r.s));
    }
    print!("{csv}");
    let plus = rows.iter().filter(|r| r.s == 2).count();
    let minus = rows.iter().filter(|r| r.s == -2).count();
    println!("S = +2: {plus}, S = -2: {minus}");
    match cfg.format {
        Format::Json => write_output(cfg, &to_json(&rows)),
        Format::Csv => write_output(cfg, &csv),
    }
}
