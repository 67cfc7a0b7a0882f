//! Scoring: corpus precision/recall/F1 pooled over match decisions,
//! evaluation of the matcher against human match labels, a token-overlap
//! baseline scorer, answer-cluster (passage-level) scoring, Pearson
//! correlation, and extraction-length statistics.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::matcher::{MatchDecision, MatcherConfig, SentenceMatcher};
use crate::model::{
    ConcreteTriple, ExtractionSet, GoldCorpus, MatchAnnotation, SentenceGold, Token,
};

/// Scoring-input failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("got {decisions} decisions for {extractions} extractions")]
    DecisionCountMismatch { decisions: usize, extractions: usize },
    #[error("got {decisions} decisions for {annotations} match annotations")]
    AnnotationCountMismatch { decisions: usize, annotations: usize },
    #[error("vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 points for correlation, got {0}")]
    TooFewPoints(usize),
    #[error("correlation input contains a non-finite value")]
    NonFiniteInput,
    #[error("correlation is undefined for a constant vector")]
    ConstantVector,
    #[error("empty extraction set")]
    EmptyExtractionSet,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Per-sentence slice of a [`ScoreReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceScore {
    pub sent_id: String,
    pub matched_extractions: usize,
    pub total_extractions: usize,
    pub matched_clusters: usize,
    pub total_clusters: usize,
}

/// Corpus-pooled (micro) precision/recall/F1 with a per-sentence breakdown.
///
/// Extractions whose sent_id has no gold sentence still count toward
/// `total_extractions` but appear in no per-sentence row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub system: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when there were no extractions, making precision undefined; the
    /// reported precision is then 0.
    pub precision_undefined: bool,
    pub matched_extractions: usize,
    pub total_extractions: usize,
    pub matched_clusters: usize,
    pub total_clusters: usize,
    pub per_sentence: Vec<SentenceScore>,
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system               {}", self.system)?;
        if self.precision_undefined {
            writeln!(f, "precision            {:.4} (undefined: no extractions)", self.precision)?;
        } else {
            writeln!(f, "precision            {:.4}", self.precision)?;
        }
        writeln!(f, "recall               {:.4}", self.recall)?;
        writeln!(f, "f1                   {:.4}", self.f1)?;
        writeln!(
            f,
            "matched extractions  {} / {}",
            self.matched_extractions, self.total_extractions
        )?;
        writeln!(f, "matched clusters     {} / {}", self.matched_clusters, self.total_clusters)?;
        if !self.per_sentence.is_empty() {
            writeln!(f)?;
            let mut rows = vec![vec![
                "sent_id".to_string(),
                "matched_ex".to_string(),
                "total_ex".to_string(),
                "matched_cl".to_string(),
                "total_cl".to_string(),
            ]];
            for s in &self.per_sentence {
                rows.push(vec![
                    s.sent_id.clone(),
                    s.matched_extractions.to_string(),
                    s.total_extractions.to_string(),
                    s.matched_clusters.to_string(),
                    s.total_clusters.to_string(),
                ]);
            }
            f.write_str(&aligned_table(&rows))?;
        }
        Ok(())
    }
}

fn aligned_table(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            if i + 1 < row.len() {
                for _ in cell.chars().count()..widths[i] {
                    out.push(' ');
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Micro precision/recall/F1 over match decisions: precision counts matched
/// extractions, recall counts distinct credited (sentence, cluster) pairs
/// against all gold clusters — a cluster earns credit at most once however
/// many extractions hit it.
pub fn score_corpus(
    decisions: &[MatchDecision],
    gold: &GoldCorpus,
    extractions: &ExtractionSet,
) -> Result<ScoreReport, ScoreError> {
    if decisions.len() != extractions.extractions.len() {
        return Err(ScoreError::DecisionCountMismatch {
            decisions: decisions.len(),
            extractions: extractions.extractions.len(),
        });
    }
    let mut total_by_sentence: HashMap<&str, usize> = HashMap::new();
    let mut matched_by_sentence: HashMap<&str, usize> = HashMap::new();
    let mut credited: HashSet<(&str, u32)> = HashSet::new();
    for (extraction, decision) in extractions.extractions.iter().zip(decisions) {
        let sent_id = extraction.sent_id();
        *total_by_sentence.entry(sent_id).or_default() += 1;
        if let Some(cluster) = decision.cluster() {
            *matched_by_sentence.entry(sent_id).or_default() += 1;
            credited.insert((sent_id, cluster));
        }
    }
    let per_sentence: Vec<SentenceScore> = gold
        .sentences()
        .iter()
        .map(|sentence| {
            let sent_id = sentence.sent_id();
            let matched_clusters = sentence
                .clusters()
                .iter()
                .filter(|c| credited.contains(&(sent_id, c.index())))
                .count();
            SentenceScore {
                sent_id: sent_id.to_string(),
                matched_extractions: matched_by_sentence.get(sent_id).copied().unwrap_or(0),
                total_extractions: total_by_sentence.get(sent_id).copied().unwrap_or(0),
                matched_clusters,
                total_clusters: sentence.clusters().len(),
            }
        })
        .collect();
    let matched_extractions = decisions.iter().filter(|d| d.is_match()).count();
    let total_extractions = extractions.extractions.len();
    let matched_clusters: usize = per_sentence.iter().map(|s| s.matched_clusters).sum();
    let total_clusters = gold.total_clusters();
    let precision_undefined = total_extractions == 0;
    let precision = ratio(matched_extractions, total_extractions);
    let recall = ratio(matched_clusters, total_clusters);
    Ok(ScoreReport {
        system: extractions.system_name.clone(),
        precision,
        recall,
        f1: f1_of(precision, recall),
        precision_undefined,
        matched_extractions,
        total_extractions,
        matched_clusters,
        total_clusters,
        per_sentence,
    })
}

/// Agreement between match decisions and human match labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchEvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Decision credited the labelled cluster.
    pub correct_match: usize,
    /// Decision credited a different cluster than labelled.
    pub wrong_cluster: usize,
    /// Decision credited a cluster where the label says none.
    pub spurious_match: usize,
    /// Decision says none where the label names a cluster.
    pub missed_match: usize,
    /// Decision and label both say none.
    pub correct_none: usize,
    pub total_pairs: usize,
}

impl fmt::Display for MatchEvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "precision       {:.4}", self.precision)?;
        writeln!(f, "recall          {:.4}", self.recall)?;
        writeln!(f, "f1              {:.4}", self.f1)?;
        writeln!(f, "correct match   {}", self.correct_match)?;
        writeln!(f, "wrong cluster   {}", self.wrong_cluster)?;
        writeln!(f, "spurious match  {}", self.spurious_match)?;
        writeln!(f, "missed match    {}", self.missed_match)?;
        writeln!(f, "correct none    {}", self.correct_none)?;
        writeln!(f, "total pairs     {}", self.total_pairs)?;
        Ok(())
    }
}

/// Confronts decisions with human labels, aligned positionally. A decision
/// is a true positive only when it credits exactly the labelled cluster;
/// crediting the wrong cluster counts against both precision and recall.
pub fn evaluate_matcher(
    decisions: &[MatchDecision],
    annotations: &[MatchAnnotation],
) -> Result<MatchEvalReport, ScoreError> {
    if decisions.len() != annotations.len() {
        return Err(ScoreError::AnnotationCountMismatch {
            decisions: decisions.len(),
            annotations: annotations.len(),
        });
    }
    let mut correct_match = 0;
    let mut wrong_cluster = 0;
    let mut spurious_match = 0;
    let mut missed_match = 0;
    let mut correct_none = 0;
    for (decision, annotation) in decisions.iter().zip(annotations) {
        match (decision.cluster(), annotation.gold_cluster) {
            (Some(c), label) if label != 0 && c == label => correct_match += 1,
            (Some(_), label) if label != 0 => wrong_cluster += 1,
            (Some(_), _) => spurious_match += 1,
            (None, 0) => correct_none += 1,
            (None, _) => missed_match += 1,
        }
    }
    let precision = ratio(correct_match, correct_match + spurious_match + wrong_cluster);
    let recall = ratio(correct_match, correct_match + wrong_cluster + missed_match);
    Ok(MatchEvalReport {
        precision,
        recall,
        f1: f1_of(precision, recall),
        correct_match,
        wrong_cluster,
        spurious_match,
        missed_match,
        correct_none,
        total_pairs: decisions.len(),
    })
}

/// One sentence of a flattened (synset-free) reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSentence {
    pub sent_id: String,
    pub triples: Vec<ConcreteTriple>,
}

/// A reference reduced to one concrete triple per cluster, for the
/// token-overlap baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatGold {
    pub sentences: Vec<FlatSentence>,
}

/// Flattens every cluster to the mandatory tokens of its first formulation.
pub fn flatten_gold(gold: &GoldCorpus) -> FlatGold {
    let sentences = gold
        .sentences()
        .iter()
        .map(|sentence| FlatSentence {
            sent_id: sentence.sent_id().to_string(),
            triples: sentence
                .clusters()
                .iter()
                .map(|cluster| {
                    let first = &cluster.formulations()[0];
                    ConcreteTriple {
                        arg1: first.arg1().mandatory_tokens(),
                        rel: first.rel().mandatory_tokens(),
                        arg2: first.arg2().mandatory_tokens(),
                    }
                })
                .collect(),
        })
        .collect();
    FlatGold { sentences }
}

/// Multiset intersection size of two token sequences.
fn shared_tokens(left: &[Token], right: &[Token]) -> usize {
    let mut counts: HashMap<&Token, usize> = HashMap::new();
    for t in left {
        *counts.entry(t).or_default() += 1;
    }
    let mut shared = 0;
    for t in right {
        if let Some(remaining) = counts.get_mut(t) {
            if *remaining > 0 {
                *remaining -= 1;
                shared += 1;
            }
        }
    }
    shared
}

fn triple_len(t: &ConcreteTriple) -> usize {
    t.arg1.len() + t.rel.len() + t.arg2.len()
}

/// Token-overlap baseline: within each sentence, extractions are greedily
/// assigned one-to-one to flattened gold triples by decreasing pair token F1
/// (slot-wise shared-token counts summed; zero-overlap pairs stay
/// unassigned), then precision and recall are micro-averaged over tokens.
/// A simplified word-level baseline for comparison against synset scoring.
pub fn token_level_score(extractions: &ExtractionSet, gold: &FlatGold) -> ScoreReport {
    let mut by_sentence: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, e) in extractions.extractions.iter().enumerate() {
        by_sentence.entry(e.sent_id()).or_default().push(i);
    }
    let total_extraction_tokens: usize =
        extractions.extractions.iter().map(|e| e.token_count()).sum();
    let total_gold_tokens: usize =
        gold.sentences.iter().flat_map(|s| s.triples.iter()).map(triple_len).sum();

    let mut shared_total = 0usize;
    let mut matched_extractions = 0usize;
    let mut matched_clusters = 0usize;
    let mut per_sentence = Vec::with_capacity(gold.sentences.len());
    for sentence in &gold.sentences {
        let extraction_ids = by_sentence.get(sentence.sent_id.as_str());
        let extraction_ids: &[usize] = extraction_ids.map(Vec::as_slice).unwrap_or(&[]);
        // Candidate pairs sorted by descending token F1, ties broken by
        // extraction then gold position for determinism.
        let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (ei, &extraction_id) in extraction_ids.iter().enumerate() {
            let e = &extractions.extractions[extraction_id];
            for (gi, g) in sentence.triples.iter().enumerate() {
                let shared = shared_tokens(e.arg1(), &g.arg1)
                    + shared_tokens(e.rel(), &g.rel)
                    + shared_tokens(e.arg2(), &g.arg2);
                if shared == 0 {
                    continue;
                }
                let f1 = 2.0 * shared as f64 / (e.token_count() + triple_len(g)) as f64;
                candidates.push((f1, ei, gi, shared));
            }
        }
        candidates.sort_by(|x, y| {
            y.0.partial_cmp(&x.0)
                .expect("token F1 is never NaN")
                .then(x.1.cmp(&y.1))
                .then(x.2.cmp(&y.2))
        });
        let mut extraction_used = vec![false; extraction_ids.len()];
        let mut gold_used = vec![false; sentence.triples.len()];
        let mut sentence_matched = 0usize;
        for (_, ei, gi, shared) in candidates {
            if extraction_used[ei] || gold_used[gi] {
                continue;
            }
            extraction_used[ei] = true;
            gold_used[gi] = true;
            shared_total += shared;
            sentence_matched += 1;
        }
        matched_extractions += sentence_matched;
        matched_clusters += sentence_matched;
        per_sentence.push(SentenceScore {
            sent_id: sentence.sent_id.clone(),
            matched_extractions: sentence_matched,
            total_extractions: extraction_ids.len(),
            matched_clusters: sentence_matched,
            total_clusters: sentence.triples.len(),
        });
    }

    let total_extractions = extractions.extractions.len();
    let total_clusters: usize = gold.sentences.iter().map(|s| s.triples.len()).sum();
    let precision_undefined = total_extraction_tokens == 0;
    let precision = ratio(shared_total, total_extraction_tokens);
    let recall = ratio(shared_total, total_gold_tokens);
    ScoreReport {
        system: extractions.system_name.clone(),
        precision,
        recall,
        f1: f1_of(precision, recall),
        precision_undefined,
        matched_extractions,
        total_extractions,
        matched_clusters,
        total_clusters,
        per_sentence,
    }
}

/// Passage-level answer scoring: a passage earns one point when any of its
/// extractions matches any of its answer clusters under the given matcher
/// configuration (sent_ids are not consulted). Returns the fraction of
/// passages earning a point; 0 for an empty input.
pub fn abqa_score(per_passage: &[(SentenceGold, ExtractionSet)], config: MatcherConfig) -> f64 {
    if per_passage.is_empty() {
        return 0.0;
    }
    let earned = per_passage
        .par_iter()
        .filter(|(answers, extractions)| {
            let matcher = SentenceMatcher::new(answers, config);
            extractions.extractions.iter().any(|e| matcher.decide(e).is_match())
        })
        .count();
    earned as f64 / per_passage.len() as f64
}

/// Pearson product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, ScoreError> {
    if x.len() != y.len() {
        return Err(ScoreError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(ScoreError::TooFewPoints(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ScoreError::NonFiniteInput);
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut variance_x = 0.0;
    let mut variance_y = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        covariance += dx * dy;
        variance_x += dx * dx;
        variance_y += dy * dy;
    }
    if variance_x == 0.0 || variance_y == 0.0 {
        return Err(ScoreError::ConstantVector);
    }
    Ok((covariance / (variance_x * variance_y).sqrt()).clamp(-1.0, 1.0))
}

/// One labelled correlation result; `coefficient` is absent when the pair
/// could not be correlated (see `note`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEntry {
    pub label: String,
    pub coefficient: Option<f64>,
    pub note: Option<String>,
}

/// Pearson coefficients for a batch of labelled column pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub entries: Vec<CorrelationEntry>,
}

impl fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows = vec![vec!["pair".to_string(), "pearson".to_string()]];
        for entry in &self.entries {
            let value = match (entry.coefficient, &entry.note) {
                (Some(c), _) => format!("{c:.4}"),
                (None, Some(note)) => format!("n/a ({note})"),
                (None, None) => "n/a".to_string(),
            };
            rows.push(vec![entry.label.clone(), value]);
        }
        f.write_str(&aligned_table(&rows))
    }
}

/// Arithmetic mean of per-extraction token counts.
pub fn extraction_length_stats(extractions: &ExtractionSet) -> Result<f64, ScoreError> {
    if extractions.extractions.is_empty() {
        return Err(ScoreError::EmptyExtractionSet);
    }
    let total: usize = extractions.extractions.iter().map(|e| e.token_count()).sum();
    Ok(total as f64 / extractions.extractions.len() as f64)
}
