//! Command-line front end.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::audit::{extract_features, leakage_report, FragmentIndex};
use crate::axioms::{curated_axiom_set, curated_sources, load_axiom_sources, validation_config, AxiomFileError, AxiomSet, ValidationReport};
use crate::config::{RunConfig, RunConfigError};
use crate::oracle::{OracleConfig, Outcome};
use crate::parse::parse_equation;
use crate::record::{generate_dataset, verify_all, Agreement, DatasetRecord};

pub const DEFAULT_BOUND: f64 = 0.6;

#[derive(Debug, Parser)]
#[command(name = "eqgen", version, about = "Generate, verify and audit labeled equation datasets")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat key-value config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Oracle threshold.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Oracle trials per equation.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a labeled JSONL dataset.
    Generate {
        #[arg(long)]
        true_count: Option<usize>,
        #[arg(long)]
        false_count: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        filter_artifacts: Option<bool>,
        #[arg(long)]
        valid_steps: Option<usize>,
        /// Axiom files to use instead of the built-in set.
        #[arg(long = "axioms")]
        axioms: Vec<PathBuf>,
    },
    /// Check equations or dataset records with the random-evaluation oracle.
    Verify {
        /// `(= lhs rhs)` lines or JSONL records; `-` for stdin.
        input: PathBuf,
        /// Per-line verdicts; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report how well shallow features separate the two labels.
    Audit {
        input: PathBuf,
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long = "axioms")]
        axioms: Vec<PathBuf>,
    },
    /// Validate axiom files and list each rule's status.
    AxiomsCheck {
        /// Built-in files when none are given.
        paths: Vec<PathBuf>,
        /// Machine-readable report.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] RunConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Axioms(#[from] AxiomFileError),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Axioms(_) | CliError::Data(_) => 2,
            CliError::Gate(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command, writing primary output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file_cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        seed: cli.common.seed,
        epsilon: cli.common.epsilon,
        trials: cli.common.trials,
        ..RunConfig::default()
    };
    let mut cfg = file_cfg.overridden_by(flags);
    match cli.command {
        Command::Generate {
            true_count,
            false_count,
            out,
            filter_artifacts,
            valid_steps,
            axioms,
        } => {
            cfg = cfg.overridden_by(RunConfig {
                true_count,
                false_count,
                filter_artifacts,
                valid_steps,
                axioms: (!axioms.is_empty()).then_some(axioms),
                ..RunConfig::default()
            });
            cmd_generate(&cfg, out.as_deref(), stdout)
        }
        Command::Verify { input, out } => cmd_verify(&cfg, &input, out.as_deref(), stdout),
        Command::Audit { input, bound, axioms } => {
            cfg = cfg.overridden_by(RunConfig {
                bound,
                axioms: (!axioms.is_empty()).then_some(axioms),
                ..RunConfig::default()
            });
            cmd_audit(&cfg, &input, stdout)
        }
        Command::AxiomsCheck { paths, json } => cmd_axioms_check(&cfg, &paths, json, stdout),
    }
}

fn read_sources(paths: &[PathBuf]) -> Result<Vec<(String, String)>, CliError> {
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, text))
        })
        .collect()
}

fn validation_oracle(cfg: &RunConfig) -> Result<OracleConfig, CliError> {
    let mut o = validation_config();
    if let Some(e) = cfg.epsilon {
        o.epsilon = e;
    }
    if let Some(t) = cfg.trials {
        o.trials = t;
        o.min_valid_samples = t;
    }
    o.validate().map_err(RunConfigError::from)?;
    Ok(o)
}

fn load_set(cfg: &RunConfig) -> Result<AxiomSet, CliError> {
    match &cfg.axioms {
        None => Ok(curated_axiom_set()),
        Some(paths) => {
            let sources = read_sources(paths)?;
            let refs: Vec<(&str, &str)> = sources.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
            let (set, report) = load_axiom_sources(&refs, &validation_oracle(cfg)?, cfg.seed())?;
            for r in report.rejected() {
                warn!("axiom {} rejected: {}", r.id, r.status);
            }
            Ok(set)
        }
    }
}

fn open_out(out: Option<&Path>) -> Result<Option<BufWriter<fs::File>>, CliError> {
    out.map(|p| fs::File::create(p).map(BufWriter::new).map_err(io_err(p))).transpose()
}

pub fn cmd_generate(cfg: &RunConfig, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let dataset = cfg.dataset().map_err(RunConfigError::from)?;
    let ax = load_set(cfg)?;
    for rule in ax.rewrite_rules() {
        let size = rule.lhs.node_count() + rule.rhs.node_count();
        if size > dataset.truegen.max_nodes {
            return Err(RunConfigError::MaxNodesTooSmall {
                max_nodes: dataset.truegen.max_nodes,
                id: rule.id.clone(),
                size,
            }
            .into());
        }
    }
    info!("generating {} true and {} false records", dataset.true_count, dataset.false_count);
    let (records, stats) = generate_dataset(&ax, &dataset).map_err(|e| CliError::Gate(e.to_string()))?;

    let mut file = open_out(out)?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => stdout,
    };
    let write_err = |e| CliError::Io {
        path: out.map_or_else(|| PathBuf::from("-"), Path::to_path_buf),
        source: e,
    };
    for r in &records {
        writeln!(sink, "{}", r.to_json_line()).map_err(write_err)?;
    }
    sink.flush().map_err(write_err)?;

    eprintln!("records={}", records.len());
    eprintln!("true={}", dataset.true_count);
    eprintln!("false={}", dataset.false_count);
    eprintln!("attempts={}", stats.attempts);
    eprintln!("retries={}", stats.attempts - records.len());
    eprintln!("unknown_regenerations={}", stats.unknown_regenerations);
    eprintln!("unsound_regenerations={}", stats.unsound_regenerations);
    eprintln!("rejected_true_mutants={}", stats.rejected_true_mutants);
    eprintln!("artifact_rejections={}", stats.artifact_rejections);
    eprintln!("exhausted_walks={}", stats.exhausted_walks);
    Ok(())
}

/// One verified input line.
#[derive(Clone, Debug, Serialize)]
pub struct LineVerdict {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub equation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn read_lines(input: &Path) -> Result<Vec<String>, CliError> {
    if input.as_os_str() == "-" {
        return io::stdin().lock().lines().collect::<Result<_, _>>().map_err(io_err(input));
    }
    Ok(fs::read_to_string(input)
        .map_err(io_err(input))?
        .lines()
        .map(str::to_string)
        .collect())
}

pub fn cmd_verify(cfg: &RunConfig, input: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let oracle = cfg.oracle().map_err(RunConfigError::from)?;
    let lines = read_lines(input)?;
    let mut rows = Vec::new();
    let mut eqs = Vec::new();
    let mut parsed_rows = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut row = LineVerdict {
            line: i + 1,
            id: None,
            equation: text.to_string(),
            label: None,
            outcome: None,
            valid_samples: None,
            max_deviation: None,
            error: None,
        };
        let parsed = if text.starts_with('{') {
            serde_json::from_str::<DatasetRecord>(text)
                .map_err(|e| e.to_string())
                .and_then(|r| {
                    row.id = Some(r.id.clone());
                    row.equation = r.equation.clone();
                    row.label = Some(r.label);
                    r.parsed_equation().map_err(|e| e.to_string())
                })
        } else {
            parse_equation(text).map_err(|e| e.to_string())
        };
        match parsed {
            Ok(eq) => {
                parsed_rows.push(rows.len());
                eqs.push(eq);
            }
            Err(e) => {
                warn!("line {}: {e}", i + 1);
                row.error = Some(e);
            }
        }
        rows.push(row);
    }

    let verdicts = verify_all(&eqs, &oracle, cfg.seed());
    for (&r, v) in parsed_rows.iter().zip(&verdicts) {
        rows[r].outcome = Some(v.outcome);
        rows[r].valid_samples = Some(v.valid_samples());
        rows[r].max_deviation = Some(v.max_deviation());
    }

    let mut file = open_out(out)?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => stdout,
    };
    let write_err = |e| CliError::Io {
        path: out.map_or_else(|| PathBuf::from("-"), Path::to_path_buf),
        source: e,
    };
    for row in &rows {
        writeln!(sink, "{}", serde_json::to_string(row).expect("serializable")).map_err(write_err)?;
    }
    sink.flush().map_err(write_err)?;

    let count = |o| verdicts.iter().filter(|v| v.outcome == o).count();
    eprintln!("lines={}", rows.len());
    eprintln!("parse_errors={}", rows.len() - eqs.len());
    eprintln!("true={}", count(Outcome::True));
    eprintln!("false={}", count(Outcome::False));
    eprintln!("unknown={}", count(Outcome::Unknown));
    let labeled: Vec<(bool, &crate::oracle::Verdict)> = parsed_rows
        .iter()
        .zip(&verdicts)
        .filter_map(|(&r, v)| rows[r].label.map(|l| (l, v)))
        .collect();
    if !labeled.is_empty() {
        let labels: Vec<bool> = labeled.iter().map(|(l, _)| *l).collect();
        let vs: Vec<_> = labeled.iter().map(|(_, v)| (*v).clone()).collect();
        let a = Agreement::tally(&labels, &vs);
        eprintln!("labeled={}", a.total);
        eprintln!("agreement={:.6}", a.agreement_rate());
        eprintln!("unknown_rate={:.6}", a.unknown_rate());
    }
    Ok(())
}

pub fn cmd_audit(cfg: &RunConfig, input: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ax = load_set(cfg)?;
    let fragments = FragmentIndex::new(&ax);
    let lines = read_lines(input)?;
    let mut samples = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let rec: DatasetRecord =
            serde_json::from_str(text).map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        let eq = rec
            .parsed_equation()
            .map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        samples.push((eq, rec.label));
    }
    use rayon::prelude::*;
    let features: Vec<_> = samples
        .par_iter()
        .map(|(eq, l)| (extract_features(eq, &fragments), *l))
        .collect();
    let report = leakage_report(&features, cfg.bound.unwrap_or(DEFAULT_BOUND)).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(stdout, "{report}").map_err(io_err(Path::new("-")))?;
    Ok(())
}

pub fn cmd_axioms_check(cfg: &RunConfig, paths: &[PathBuf], json: bool, stdout: &mut dyn Write) -> Result<(), CliError> {
    let owned: Vec<(String, String)> = if paths.is_empty() {
        curated_sources().iter().map(|(n, t)| (n.to_string(), t.to_string())).collect()
    } else {
        read_sources(paths)?
    };
    let refs: Vec<(&str, &str)> = owned.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
    let (_, report) = load_axiom_sources(&refs, &validation_oracle(cfg)?, cfg.seed())?;
    write_report(&report, json, stdout).map_err(io_err(Path::new("-")))
}

fn write_report(report: &ValidationReport, json: bool, out: &mut dyn Write) -> io::Result<()> {
    if json {
        for e in &report.entries {
            writeln!(out, "{}", serde_json::to_string(e).expect("serializable"))?;
        }
        return Ok(());
    }
    for e in &report.entries {
        writeln!(out, "{:<16} {}:{:<4} {:<40} {}", e.id, e.source, e.line, e.status.to_string(), e.text)?;
    }
    writeln!(out, "{report}")
}
