//! `oie-eval`: scoring, matcher evaluation, annotation linting, and score
//! correlation for fact-synset OIE benchmarks, over the file formats of the
//! core library. Every report embeds a run manifest (command, input digests,
//! matcher, version, timestamp) so results can be traced to their inputs.

use std::fmt::{self, Display};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use oie_eval::formats::{
    parse_extractions, parse_gold, parse_match_annotations, parse_score_table, ParseError,
};
use oie_eval::lint::{diff_annotation_sets, lint_corpus, LintError, LintReport};
use oie_eval::matcher::{match_corpus, MatcherConfig};
use oie_eval::model::ExtractionSet;
use oie_eval::scorer::{
    evaluate_matcher, pearson, score_corpus, CorrelationEntry, CorrelationReport, ScoreError,
};

#[derive(Parser)]
#[command(name = "oie-eval", version, about = "Benchmark evaluation for OIE systems")]
struct Cli {
    /// Worker threads for per-sentence parallelism (0 uses all cores).
    /// Results are identical for any value.
    #[arg(long, global = true, env = "OIE_EVAL_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score an extraction set against a gold corpus (precision/recall/F1).
    Score {
        /// Gold corpus file.
        gold: PathBuf,
        /// Extraction TSV file (sent_id, arg1, rel, arg2[, confidence]).
        extractions: PathBuf,
        /// Matching function: em[+af][+lod][+punc].
        #[arg(long, default_value = "em+af+lod+punc")]
        matcher: MatcherConfig,
        /// System name for the report (default: extraction file stem).
        #[arg(long)]
        system: Option<String>,
        /// Drop extractions whose confidence is below this threshold;
        /// extractions without a confidence always pass.
        #[arg(long)]
        min_confidence: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate the matching function against human match annotations.
    MatchEval {
        /// Gold corpus file.
        gold: PathBuf,
        /// Match annotation TSV file (extraction fields plus cluster label).
        annotations: PathBuf,
        /// Matching function: em[+af][+lod][+punc].
        #[arg(long, default_value = "em+af+lod+punc")]
        matcher: MatcherConfig,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run annotation-quality proxies over one corpus, or diff two corpora.
    Lint {
        /// Gold corpus file.
        gold: PathBuf,
        /// Second gold corpus; when given, clusters missing from either
        /// side are reported.
        second: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Pearson correlations between columns of a score table.
    Correlate {
        /// Score table file (systems in rows, score columns).
        scores: PathBuf,
        /// Column pairs to correlate, e.g. "abqa:kbp,abqa:cqa"
        /// (default: every unordered column pair).
        #[arg(long)]
        pairs: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Failures mapped onto the exit-code contract: 1 I/O, 2 format, 3
/// precondition violation.
enum CliError {
    Io { path: PathBuf, source: std::io::Error },
    Format { path: PathBuf, source: ParseError },
    Precondition(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Format { .. } => 2,
            CliError::Precondition(_) => 3,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Format { path, source } => {
                write!(f, "{}:{}: {}", path.display(), source.line, source.message)
            }
            CliError::Precondition(message) => f.write_str(message),
        }
    }
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

/// Provenance block embedded in every report.
#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matcher: Option<String>,
    version: &'static str,
    timestamp: String,
}

impl RunManifest {
    fn new(command: &'static str, inputs: Vec<InputDigest>, matcher: Option<String>) -> Self {
        let timestamp = time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .expect("the RFC 3339 formatter accepts any UTC timestamp");
        RunManifest { command, inputs, matcher, version: env!("CARGO_PKG_VERSION"), timestamp }
    }

    fn header(&self) -> String {
        let mut out = format!("# command: {}\n", self.command);
        for input in &self.inputs {
            out.push_str(&format!("# input: {} sha256:{}\n", input.path, input.sha256));
        }
        if let Some(matcher) = &self.matcher {
            out.push_str(&format!("# matcher: {matcher}\n"));
        }
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# timestamp: {}\n", self.timestamp));
        out
    }
}

fn read_input(path: &Path) -> Result<(String, InputDigest), CliError> {
    let bytes =
        std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let text = String::from_utf8_lossy(&bytes).into_owned();
    Ok((text, digest))
}

fn formatted<T>(path: &Path, result: Result<T, ParseError>) -> Result<T, CliError> {
    result.map_err(|source| CliError::Format { path: path.to_path_buf(), source })
}

fn precondition<T>(result: Result<T, impl Display>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Precondition(e.to_string()))
}

fn emit<R: Serialize + Display>(
    out: &OutputArgs,
    manifest: &RunManifest,
    report: &R,
) -> Result<(), CliError> {
    let rendered = match out.format {
        Format::Text => {
            let mut text = manifest.header();
            text.push('\n');
            text.push_str(&report.to_string());
            if !text.ends_with('\n') {
                text.push('\n');
            }
            text
        }
        Format::Json => {
            let value = serde_json::json!({ "manifest": manifest, "report": report });
            let mut text = serde_json::to_string_pretty(&value)
                .expect("reports serialize without fallible map keys");
            text.push('\n');
            text
        }
    };
    match &out.output {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn cmd_score(
    gold_path: &Path,
    extractions_path: &Path,
    matcher: MatcherConfig,
    system: Option<String>,
    min_confidence: Option<f64>,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let (gold_text, gold_digest) = read_input(gold_path)?;
    let (extraction_text, extraction_digest) = read_input(extractions_path)?;
    let gold = formatted(gold_path, parse_gold(&gold_text))?;

    let system_name = system.unwrap_or_else(|| {
        extractions_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "system".to_string())
    });
    let mut extractions =
        formatted(extractions_path, parse_extractions(&system_name, &extraction_text))?;
    if let Some(threshold) = min_confidence {
        extractions.extractions.retain(|e| e.confidence().is_none_or(|c| c >= threshold));
    }

    let matches = match_corpus(&extractions, &gold, matcher);
    if !matches.orphans.is_empty() {
        eprintln!(
            "warning: {} extraction(s) reference sent_ids absent from the gold corpus",
            matches.orphans.len()
        );
    }
    let report = precondition(score_corpus(&matches.decisions, &gold, &extractions))?;

    let manifest =
        RunManifest::new("score", vec![gold_digest, extraction_digest], Some(matcher.to_string()));
    emit(out, &manifest, &report)
}

fn cmd_match_eval(
    gold_path: &Path,
    annotations_path: &Path,
    matcher: MatcherConfig,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let (gold_text, gold_digest) = read_input(gold_path)?;
    let (annotation_text, annotation_digest) = read_input(annotations_path)?;
    let gold = formatted(gold_path, parse_gold(&gold_text))?;
    let annotations =
        formatted(annotations_path, parse_match_annotations(&annotation_text, Some(&gold)))?;

    let set = ExtractionSet {
        system_name: "annotated".to_string(),
        extractions: annotations.iter().map(|a| a.extraction.clone()).collect(),
    };
    let matches = match_corpus(&set, &gold, matcher);
    let report = precondition(evaluate_matcher(&matches.decisions, &annotations))?;

    let manifest = RunManifest::new(
        "match-eval",
        vec![gold_digest, annotation_digest],
        Some(matcher.to_string()),
    );
    emit(out, &manifest, &report)
}

fn cmd_lint(
    gold_path: &Path,
    second_path: Option<&Path>,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let (gold_text, gold_digest) = read_input(gold_path)?;
    let gold = formatted(gold_path, parse_gold(&gold_text))?;
    let mut inputs = vec![gold_digest];

    let mut report = LintReport::new(lint_corpus(&gold));
    if let Some(second_path) = second_path {
        let (second_text, second_digest) = read_input(second_path)?;
        let second = formatted(second_path, parse_gold(&second_text))?;
        inputs.push(second_digest);
        let diff = match diff_annotation_sets(&gold, &second) {
            Ok(diff) => diff,
            Err(LintError::NoOverlappingSentences) => {
                return Err(CliError::Precondition(LintError::NoOverlappingSentences.to_string()))
            }
        };
        if !diff.only_in_first.is_empty() || !diff.only_in_second.is_empty() {
            eprintln!(
                "warning: corpora only partially align ({} sentence(s) only in {}, {} only in {})",
                diff.only_in_first.len(),
                gold_path.display(),
                diff.only_in_second.len(),
                second_path.display()
            );
        }
        report = report.with_diff(diff);
    }

    let manifest = RunManifest::new("lint", inputs, None);
    emit(out, &manifest, &report)
}

fn cmd_correlate(
    scores_path: &Path,
    pairs: Option<&str>,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let (scores_text, scores_digest) = read_input(scores_path)?;
    let table = formatted(scores_path, parse_score_table(&scores_text))?;
    if table.row_labels.len() < 2 {
        return Err(CliError::Precondition(format!(
            "score table has {} row(s); correlation needs at least 2",
            table.row_labels.len()
        )));
    }

    let selected: Vec<(String, String)> = match pairs {
        Some(spec) => spec
            .split(',')
            .map(|pair| {
                let (a, b) = pair.split_once(':').ok_or_else(|| {
                    CliError::Precondition(format!(
                        "pair {pair:?} is not of the form column:column"
                    ))
                })?;
                for label in [a, b] {
                    if !table.col_labels.iter().any(|l| l == label) {
                        return Err(CliError::Precondition(format!(
                            "column {label:?} is not in the score table"
                        )));
                    }
                }
                Ok((a.to_string(), b.to_string()))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let mut all = Vec::new();
            for (i, a) in table.col_labels.iter().enumerate() {
                for b in &table.col_labels[i + 1..] {
                    all.push((a.clone(), b.clone()));
                }
            }
            all
        }
    };

    let entries: Vec<CorrelationEntry> = selected
        .into_iter()
        .map(|(a, b)| {
            let x = table.column(&a).expect("selector validated above");
            let y = table.column(&b).expect("selector validated above");
            let label = format!("{a} ~ {b}");
            match pearson(&x, &y) {
                Ok(coefficient) => {
                    CorrelationEntry { label, coefficient: Some(coefficient), note: None }
                }
                Err(ScoreError::ConstantVector) => CorrelationEntry {
                    label,
                    coefficient: None,
                    note: Some("constant column".to_string()),
                },
                Err(other) => {
                    CorrelationEntry { label, coefficient: None, note: Some(other.to_string()) }
                }
            }
        })
        .collect();
    let report = CorrelationReport { entries };

    let manifest = RunManifest::new("correlate", vec![scores_digest], None);
    emit(out, &manifest, &report)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Score { gold, extractions, matcher, system, min_confidence, out } => {
            cmd_score(gold, extractions, *matcher, system.clone(), *min_confidence, out)
        }
        Command::MatchEval { gold, annotations, matcher, out } => {
            cmd_match_eval(gold, annotations, *matcher, out)
        }
        Command::Lint { gold, second, out } => cmd_lint(gold, second.as_deref(), out),
        Command::Correlate { scores, pairs, out } => cmd_correlate(scores, pairs.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .expect("the global thread pool is configured before first use");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.code())
        }
    }
}
