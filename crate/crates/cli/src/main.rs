//! `rotorwalk` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rotorwalk::experiments::{self, ExperimentConfig, ExperimentReport, Horizon, Verdict};
use rotorwalk::mbp::palindromic_first_moment_identity;
use rotorwalk::rotor::{RunStatus, WalkOptions, WalkState};
use rotorwalk::spectral::{gamma_closed_form, spectral_radius, POWER_TOL};
use rotorwalk::{analyze, bundled, parse_generator, parse_law, Classification, Generator, MomentData, RotorLaw};

#[derive(Parser)]
#[command(name = "rotorwalk", version, about = "Rotor walks on periodic trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment matrices, spectral radius, classification and range limit.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Print one JSON document instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run one walk and record (n, |R_n|).
    Simulate(SimulateArgs),
    /// Exact identities, moment checks and, when palindromic, 2M = D.
    Verify(VerifyArgs),
    /// Run one Monte-Carlo experiment.
    Experiment(ExperimentArgs),
    /// Check 2M = D exactly and compare gamma with its closed form.
    Palindromic {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Generator file, or the name of a bundled generator.
    generator: String,
    /// File with `rotor.<i>` arrays overriding the generator's law.
    #[arg(long)]
    law: Option<PathBuf>,
}

#[derive(Args)]
struct WalkFlags {
    /// Root type (1-based).
    #[arg(long, default_value_t = 1)]
    root: usize,
    /// Base seed; a random one is drawn and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Stop once this many tree vertices are materialized.
    #[arg(long)]
    max_vertices: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    walk: WalkFlags,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    /// Record |R_n| every this many steps.
    #[arg(long, default_value_t = 1_000)]
    stride: u64,
    /// Never take more steps than this.
    #[arg(long)]
    step_cap: Option<u64>,
    /// Directory for series.csv and summary.toml.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `n,vertex_path,type,rotor_after` for every step to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    walk: WalkFlags,
    #[arg(long, default_value_t = 20)]
    returns: usize,
    #[arg(long, default_value_t = 100)]
    replicas: usize,
    /// Good-tree samples per root type for the moment check.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 100_000_000)]
    step_cap: u64,
    /// Directory for one sub-directory of reports per check.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    LlnRange,
    LlnReturns,
    LeafGrowth,
    Identities,
    Conjecture,
    Moments,
}

#[derive(Args)]
struct ExperimentArgs {
    kind: Kind,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    walk: WalkFlags,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    returns: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    stride: u64,
    /// Override the default tolerance of the main check.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, default_value_t = 100_000_000)]
    step_cap: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { source, json } => cmd_analyze(&source, json),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Experiment(args) => cmd_experiment(&args),
        Command::Palindromic { source, json } => cmd_palindromic(&source, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(source: &Source) -> Result<(Generator, RotorLaw), Failure> {
    let path = Path::new(&source.generator);
    let file = if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        parse_generator(&text).map_err(|e| format!("{}: {e}", path.display()))?
    } else if let Some(file) = bundled(&source.generator) {
        file
    } else {
        return Err(Failure::Usage(format!(
            "{}: no such file or bundled generator",
            source.generator
        )));
    };
    let law = match &source.law {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            parse_law(&text, &file.generator).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => file.law,
    };
    Ok((file.generator, law))
}

fn check_root(g: &Generator, root: usize) -> Outcome {
    if root == 0 || root > g.n_types() {
        return Err(Failure::Usage(format!(
            "--root {root} out of range 1..={}",
            g.n_types()
        )));
    }
    Ok(())
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeDoc<'a> {
    words: Vec<Vec<usize>>,
    palindromic: bool,
    #[serde(flatten)]
    analysis: &'a MomentData,
}

fn one_based_words(g: &Generator) -> Vec<Vec<usize>> {
    g.words().iter().map(|w| w.iter().map(|c| c + 1).collect()).collect()
}

fn cmd_analyze(source: &Source, json: bool) -> Outcome {
    let (g, law) = load(source)?;
    let data = analyze(&g, &law)?;
    if json {
        return print_json(&AnalyzeDoc {
            words: one_based_words(&g),
            palindromic: g.is_palindromic(),
            analysis: &data,
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "types: {}", data.n_types);
    let _ = write!(out, "{g}");
    let _ = write!(out, "D =\n{}", data.adjacency);
    match &data.m_exact {
        Some(m) => {
            let _ = write!(out, "M =\n{m}");
        }
        None => {
            let _ = write!(out, "M =\n{}", data.m);
        }
    }
    let _ = writeln!(out, "rho(M) = {:.12}", data.rho_m);
    let _ = writeln!(out, "classification: {} (rho(M) = {})", data.classification.label(), data.rho_m);
    if let Some(v) = &data.v {
        match &data.v_exact {
            Some(ve) => {
                let _ = write!(out, "V = (I - M)^-1 =\n{ve}");
            }
            None => {
                let _ = write!(out, "V = (I - M)^-1 =\n{v}");
            }
        }
    }
    if let Some(gm) = &data.gamma_matrix {
        let _ = write!(out, "I + (D - I) V =\n{gm}");
    }
    if let Some(gamma) = data.gamma {
        let _ = writeln!(out, "gamma = {gamma:.12}");
    }
    if let Some(limit) = data.predicted_limit {
        let _ = writeln!(out, "predicted limit of |R_n|/n = {limit:.12}");
    }
    for w in &data.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    print!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    generator: String,
    words: Vec<Vec<usize>>,
    root_type: usize,
    seed: String,
    requested_steps: u64,
    steps: u64,
    status: RunStatus,
    range: u64,
    range_ratio: f64,
    range_by_type: Vec<u64>,
    edge_traversals_by_type: Vec<u64>,
    sink_returns: usize,
    classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_limit: Option<f64>,
    notices: Vec<String>,
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let (g, law) = load(&args.source)?;
    check_root(&g, args.walk.root)?;
    let data = analyze(&g, &law)?;
    let seed = resolve_seed(args.walk.seed);
    let mut notices = Vec::new();
    if data.classification == Classification::Transient {
        notices.push("transient instance: the walk need not return to the sink".to_string());
    }
    let options = WalkOptions {
        range_stride: args.stride,
        max_vertices: args.walk.max_vertices,
        ..WalkOptions::default()
    };
    let mut walk = WalkState::with_options(&g, &law, args.walk.root, seed, options)?;
    let target = args.step_cap.map_or(args.steps, |cap| cap.min(args.steps));

    let mut status = match &args.trace {
        Some(path) => {
            let mut w = BufWriter::new(fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?);
            writeln!(w, "n,vertex_path,type,rotor_after")?;
            let cap = args.walk.max_vertices;
            let mut status = RunStatus::Completed;
            while walk.steps() < target {
                if cap.is_some_and(|c| walk.materialized() >= c) {
                    status = RunStatus::MemoryCapExhausted;
                    break;
                }
                let info = walk.step();
                let ty = walk.position_type(info.from).map_or(String::new(), |t| t.to_string());
                let rotor = info.rotor_after.map_or(String::new(), |r| r.to_string());
                writeln!(w, "{},{},{ty},{rotor}", info.n, walk.position_path(info.from))?;
            }
            w.flush()?;
            status
        }
        None => walk.run_to(target),
    };
    if status == RunStatus::Completed && target < args.steps {
        status = RunStatus::StepCapExhausted;
    }
    match status {
        RunStatus::StepCapExhausted => notices.push(format!("step cap exhausted after {} steps", walk.steps())),
        RunStatus::MemoryCapExhausted => notices.push(format!(
            "memory cap exhausted after {} steps ({} vertices)",
            walk.steps(),
            walk.materialized()
        )),
        RunStatus::Completed => {}
    }
    for n in &notices {
        eprintln!("notice: {n}");
    }

    let summary = SimulateSummary {
        generator: args.source.generator.clone(),
        words: one_based_words(&g),
        root_type: args.walk.root,
        seed: seed.to_string(),
        requested_steps: args.steps,
        steps: walk.steps(),
        status,
        range: walk.range_size(),
        range_ratio: walk.range_size() as f64 / walk.steps().max(1) as f64,
        range_by_type: walk.range_by_type().to_vec(),
        edge_traversals_by_type: walk.edge_traversals_by_type().to_vec(),
        sink_returns: walk.sink_visits().len(),
        classification: data.classification,
        predicted_limit: data.predicted_limit,
        notices,
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let mut csv = String::from("n,range\n");
        for (n, r) in walk.range_log() {
            let _ = writeln!(csv, "{n},{r}");
        }
        fs::write(dir.join("series.csv"), csv)?;
        fs::write(dir.join("summary.toml"), toml_string(&summary)?)?;
    }
    if args.json {
        print_json(&summary)
    } else {
        print!("{}", toml_string(&summary)?);
        Ok(())
    }
}

fn toml_string<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(toml::to_string(value)?)
}

fn print_report(r: &ExperimentReport) {
    println!("{}: {}", r.experiment, r.verdict.label());
    if let (Some(mean), Some(target)) = (r.mean, r.target) {
        let se = r.stderr.map_or(String::new(), |s| format!(" +/- {s:.6}"));
        println!("  mean {mean:.6}{se}, target {target:.6} ({})", r.target_source);
    } else if let Some(mean) = r.mean {
        println!("  mean {mean:.6}");
    }
    if let Some(tol) = r.tolerance {
        println!("  tolerance {tol} ({})", r.tolerance_label);
    }
    for c in &r.checks {
        let mark = if c.passed { "ok" } else { "FAIL" };
        println!(
            "  [{mark}] {}: {} vs {} (allowed {})",
            c.name, c.empirical, c.target, c.tolerance
        );
    }
    if r.violations > 0 {
        println!("  identity violations: {}", r.violations);
    }
    if let Some(c) = &r.first_counterexample {
        println!("  first counterexample: replica {} seed {} return {}: {}", c.replica, c.seed, c.k, c.message);
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
    println!("  runtime {:.2}s", r.runtime_seconds);
}

fn cmd_experiment(args: &ExperimentArgs) -> Outcome {
    let (g, law) = load(&args.source)?;
    check_root(&g, args.walk.root)?;
    let seed = resolve_seed(args.walk.seed);
    let mut cfg = ExperimentConfig::new(args.source.generator.clone(), g, law);
    cfg.root_type = args.walk.root;
    cfg.seed = seed;
    cfg.stride = args.stride;
    cfg.tolerance = args.tolerance;
    cfg.step_cap = args.step_cap;
    if args.walk.max_vertices.is_some() {
        cfg.max_vertices = args.walk.max_vertices;
    }
    let (default_replicas, horizon) = match args.kind {
        Kind::LlnRange | Kind::Conjecture => (20, Horizon::Steps(args.steps.unwrap_or(1_000_000))),
        Kind::LlnReturns | Kind::Identities => (20, Horizon::Returns(args.returns.unwrap_or(20))),
        Kind::LeafGrowth => (20, Horizon::Returns(args.returns.unwrap_or(12))),
        Kind::Moments => (1, Horizon::Steps(1)),
    };
    cfg.replicas = args.replicas.unwrap_or(default_replicas);
    cfg.horizon = horizon;
    cfg.samples = args.samples.unwrap_or(match args.kind {
        Kind::LeafGrowth => 10_000,
        _ => 100_000,
    });
    let report = match args.kind {
        Kind::LlnRange => experiments::lln_range(&cfg)?,
        Kind::LlnReturns => experiments::lln_at_returns(&cfg)?,
        Kind::LeafGrowth => experiments::leaf_growth(&cfg)?,
        Kind::Identities => experiments::verify_identities(&cfg)?,
        Kind::Conjecture => experiments::conjecture_probe(&cfg)?,
        Kind::Moments => experiments::moment_check(&cfg)?,
    };
    if let Some(dir) = &args.out {
        report.write_to(dir)?;
    }
    if args.json {
        print_json(&report)?;
    } else {
        print_report(&report);
    }
    if report.verdict == Verdict::Fail {
        Err(Failure::Verification)
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct PalindromicDoc {
    palindromic: bool,
    two_m_equals_d: bool,
    psi: f64,
    classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_closed_form: Option<f64>,
}

fn palindromic_doc(g: &Generator) -> Result<PalindromicDoc, Failure> {
    let exact = palindromic_first_moment_identity(g)?;
    let psi = spectral_radius(&g.adjacency(), POWER_TOL)?;
    let data = analyze(g, &RotorLaw::uniform(g))?;
    let positive = data.classification == Classification::PositiveRecurrent;
    Ok(PalindromicDoc {
        palindromic: true,
        two_m_equals_d: exact,
        psi,
        classification: data.classification,
        gamma: data.gamma,
        gamma_closed_form: if positive { gamma_closed_form(psi, 2.0).ok() } else { None },
        predicted_limit: data.predicted_limit,
        limit_closed_form: positive.then(|| (psi - 1.0) / psi),
    })
}

fn cmd_palindromic(source: &Source, json: bool) -> Outcome {
    let (g, _) = load(source)?;
    if !g.is_palindromic() {
        return Err(Failure::Usage("generator is not palindromic".into()));
    }
    let doc = palindromic_doc(&g)?;
    if json {
        print_json(&doc)?;
    } else {
        println!("2M=D: exact {}", if doc.two_m_equals_d { "pass" } else { "fail" });
        println!("rho(D) = {:.12}", doc.psi);
        println!("classification: {}", doc.classification.label());
        if let (Some(a), Some(b)) = (doc.gamma, doc.gamma_closed_form) {
            println!("gamma = {a:.12} (closed form {b:.12})");
        }
        if let (Some(a), Some(b)) = (doc.predicted_limit, doc.limit_closed_form) {
            println!("predicted limit = {a:.12} (closed form {b:.12})");
        }
    }
    if doc.two_m_equals_d {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

#[derive(Serialize)]
struct VerifyDoc {
    reports: Vec<ExperimentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    palindromic: Option<PalindromicDoc>,
    passed: bool,
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    let (g, law) = load(&args.source)?;
    check_root(&g, args.walk.root)?;
    let seed = resolve_seed(args.walk.seed);
    let mut cfg = ExperimentConfig::new(args.source.generator.clone(), g.clone(), law);
    cfg.root_type = args.walk.root;
    cfg.seed = seed;
    cfg.replicas = args.replicas;
    cfg.horizon = Horizon::Returns(args.returns);
    cfg.samples = args.samples;
    cfg.step_cap = args.step_cap;
    cfg.max_vertices = Some(args.walk.max_vertices.unwrap_or(1_000_000));

    let reports = vec![experiments::verify_identities(&cfg)?, experiments::moment_check(&cfg)?];
    let palindromic = if g.is_palindromic() { Some(palindromic_doc(&g)?) } else { None };
    let passed = reports.iter().all(|r| r.verdict != Verdict::Fail)
        && palindromic.as_ref().is_none_or(|p| p.two_m_equals_d);
    if let Some(dir) = &args.out {
        for r in &reports {
            r.write_to(&dir.join(&r.experiment))?;
        }
    }
    if args.json {
        print_json(&VerifyDoc {
            reports,
            palindromic,
            passed,
        })?;
    } else {
        for r in &reports {
            print_report(r);
        }
        if let Some(p) = &palindromic {
            println!("2M=D: exact {}", if p.two_m_equals_d { "pass" } else { "fail" });
        }
        println!("verify: {}", if passed { "pass" } else { "fail" });
    }
    io::stdout().flush()?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
