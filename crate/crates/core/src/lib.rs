//! Benchmark evaluation for Open Information Extraction systems.
//!
//! The gold standard is a set of sentences, each annotated with *clusters*:
//! groups of formulations that state the same fact, where square-bracketed
//! word groups are optional. An extraction matches a sentence if it matches
//! any formulation of any cluster; clusters are the unit of recall and
//! extractions the unit of precision.
//!
//! The crate is organized as:
//!
//! - [`model`]: tokens, formulations, clusters, sentences, extractions, and
//!   the invariants that keep them well-formed.
//! - [`formats`]: parsing and serialization of the gold, extraction, match
//!   annotation, and score-table file formats.
//! - [`matcher`]: the staged matching function (exact match, alternative
//!   formulations, level of detail, each optionally retried under
//!   punctuation normalization).
//! - [`scorer`]: corpus precision/recall/F1, matcher evaluation against
//!   human match labels, token-level and answer-bearing baselines, and
//!   correlation reporting.
//! - [`lint`]: annotation-quality proxies over one or two gold corpora.

pub mod formats;
pub mod lint;
pub mod matcher;
pub mod model;
pub mod scorer;

pub use formats::{parse_extractions, parse_gold, parse_match_annotations, ParseError};
pub use matcher::{match_corpus, match_extraction, MatchDecision, MatcherConfig, SentenceMatcher};
pub use model::{Extraction, ExtractionSet, GoldCorpus, MatchAnnotation, SentenceGold};
pub use scorer::{evaluate_matcher, score_corpus, ScoreReport};
