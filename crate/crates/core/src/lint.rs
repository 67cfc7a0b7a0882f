//! Annotation-quality proxies: detect clusters that share formulations
//! (double annotation), clusters that mix distinct facts (double meaning),
//! and facts present in one annotation set but missing from another. Not
//! every finding is an annotation error; the proxies surface candidates for
//! human review.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    join_tokens, normalize_punc, Cluster, ConcreteTriple, GoldCorpus, SentenceGold, Token,
};

/// Lint-input failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LintError {
    #[error("the two corpora share no sent_ids")]
    NoOverlappingSentences,
}

/// The proxy that produced a finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    DoubleAnnotation,
    DoubleMeaning,
    CrossSetMissing,
}

/// How a double-annotation overlap was established: strict compares expanded
/// triples slot-for-slot; loose compares punctuation-normalized
/// linearizations, ignoring slot boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Strict,
    Loose,
}

/// Which corpus a cross-set finding's cluster is missing from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    MissingFromSecond,
    MissingFromFirst,
}

/// One proxy hit. The witnesses are serialized formulations, triples, or
/// linearizations that reproduce the triggering condition when re-checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub sent_id: String,
    /// Cluster indices involved, ascending.
    pub clusters: Vec<u32>,
    pub witnesses: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

fn expanded(cluster: &Cluster) -> Vec<ConcreteTriple> {
    cluster.expand().expect("expansion cap enforced at construction")
}

fn normalized_linearizations(triples: &[ConcreteTriple]) -> HashSet<Vec<Token>> {
    triples.iter().map(|t| normalize_punc(&t.linearize())).collect()
}

/// Flags every unordered cluster pair sharing a fact statement. Pairs whose
/// expanded triple sets intersect slot-for-slot are reported strict; pairs
/// that only share punctuation-normalized linearizations are reported loose.
/// Witnesses are the shared triples (strict) or linearizations (loose).
pub fn find_double_annotations(sentence: &SentenceGold) -> Vec<Finding> {
    let clusters: Vec<(u32, Vec<ConcreteTriple>)> =
        sentence.clusters().iter().map(|c| (c.index(), expanded(c))).collect();
    let triple_sets: Vec<HashSet<&ConcreteTriple>> =
        clusters.iter().map(|(_, triples)| triples.iter().collect()).collect();
    let linearization_sets: Vec<HashSet<Vec<Token>>> =
        clusters.iter().map(|(_, triples)| normalized_linearizations(triples)).collect();

    let mut findings = Vec::new();
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let strict_shared: BTreeSet<String> =
                triple_sets[i].intersection(&triple_sets[j]).map(|t| t.to_string()).collect();
            let (severity, witnesses) = if !strict_shared.is_empty() {
                (Severity::Strict, strict_shared)
            } else {
                let loose_shared: BTreeSet<String> = linearization_sets[i]
                    .intersection(&linearization_sets[j])
                    .map(|l| join_tokens(l))
                    .collect();
                if loose_shared.is_empty() {
                    continue;
                }
                (Severity::Loose, loose_shared)
            };
            findings.push(Finding {
                kind: FindingKind::DoubleAnnotation,
                sent_id: sentence.sent_id().to_string(),
                clusters: vec![clusters[i].0, clusters[j].0],
                witnesses: witnesses.into_iter().collect(),
                severity: Some(severity),
                direction: None,
            });
        }
    }
    findings
}

/// Flags clusters that state more than one fact: two formulations agreeing
/// on some expanded (arg1, rel) but with fully disjoint arg2 expansions.
/// One finding per offending cluster; witnesses are every formulation
/// involved in at least one such pair, in cluster order.
pub fn find_double_meanings(sentence: &SentenceGold) -> Vec<Finding> {
    type Heads = HashSet<(Vec<Token>, Vec<Token>)>;
    type Args2 = HashSet<Vec<Token>>;
    let mut findings = Vec::new();
    for cluster in sentence.clusters() {
        let formulations = cluster.formulations();
        let parts: Vec<(Heads, Args2)> = formulations
            .iter()
            .map(|f| {
                let triples = f.expand().expect("expansion cap enforced at construction");
                let heads = triples.iter().map(|t| (t.arg1.clone(), t.rel.clone())).collect();
                let args2 = triples.into_iter().map(|t| t.arg2).collect();
                (heads, args2)
            })
            .collect();
        let mut involved: BTreeSet<usize> = BTreeSet::new();
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let heads_overlap = parts[i].0.intersection(&parts[j].0).next().is_some();
                if heads_overlap && parts[i].1.is_disjoint(&parts[j].1) {
                    involved.insert(i);
                    involved.insert(j);
                }
            }
        }
        if involved.is_empty() {
            continue;
        }
        findings.push(Finding {
            kind: FindingKind::DoubleMeaning,
            sent_id: sentence.sent_id().to_string(),
            clusters: vec![cluster.index()],
            witnesses: involved.iter().map(|&i| formulations[i].to_string()).collect(),
            severity: None,
            direction: None,
        });
    }
    findings
}

/// Both single-corpus proxies over every sentence, in corpus order.
/// Sentences are processed in parallel; output order is deterministic.
pub fn lint_corpus(gold: &GoldCorpus) -> Vec<Finding> {
    gold.sentences()
        .par_iter()
        .map(|sentence| {
            let mut findings = find_double_annotations(sentence);
            findings.extend(find_double_meanings(sentence));
            findings
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Result of comparing two annotation sets for the same sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationDiff {
    pub findings: Vec<Finding>,
    /// sent_ids present only in the first corpus, in its order.
    pub only_in_first: Vec<String>,
    /// sent_ids present only in the second corpus, in its order.
    pub only_in_second: Vec<String>,
}

/// Compares two gold corpora sentence by sentence (aligned on sent_id). A
/// cluster is reported missing when none of its expanded triples appears in
/// any cluster expansion of the aligned sentence on the other side; the
/// finding's direction records which side lacks it. Witnesses are the
/// missing cluster's formulations. Findings follow first-corpus sentence
/// order, the first-to-second direction before the reverse per sentence.
pub fn diff_annotation_sets(
    first: &GoldCorpus,
    second: &GoldCorpus,
) -> Result<AnnotationDiff, LintError> {
    let second_by_id: HashMap<&str, &SentenceGold> =
        second.sentences().iter().map(|s| (s.sent_id(), s)).collect();
    let first_ids: HashSet<&str> = first.sentences().iter().map(|s| s.sent_id()).collect();
    if !first.sentences().iter().any(|s| second_by_id.contains_key(s.sent_id())) {
        return Err(LintError::NoOverlappingSentences);
    }

    let missing_clusters = |from: &SentenceGold, against: &SentenceGold, direction: Direction| {
        let against_triples: HashSet<ConcreteTriple> =
            against.clusters().iter().flat_map(expanded).collect();
        let mut findings = Vec::new();
        for cluster in from.clusters() {
            if expanded(cluster).iter().any(|t| against_triples.contains(t)) {
                continue;
            }
            findings.push(Finding {
                kind: FindingKind::CrossSetMissing,
                sent_id: from.sent_id().to_string(),
                clusters: vec![cluster.index()],
                witnesses: cluster.formulations().iter().map(|f| f.to_string()).collect(),
                severity: None,
                direction: Some(direction),
            });
        }
        findings
    };

    let findings: Vec<Finding> = first
        .sentences()
        .par_iter()
        .filter_map(|sentence_a| {
            let sentence_b = second_by_id.get(sentence_a.sent_id())?;
            let mut findings =
                missing_clusters(sentence_a, sentence_b, Direction::MissingFromSecond);
            findings.extend(missing_clusters(sentence_b, sentence_a, Direction::MissingFromFirst));
            Some(findings)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let only_in_first = first
        .sentences()
        .iter()
        .filter(|s| !second_by_id.contains_key(s.sent_id()))
        .map(|s| s.sent_id().to_string())
        .collect();
    let only_in_second = second
        .sentences()
        .iter()
        .filter(|s| !first_ids.contains(s.sent_id()))
        .map(|s| s.sent_id().to_string())
        .collect();
    Ok(AnnotationDiff { findings, only_in_first, only_in_second })
}

/// Sentence-level roll-up: how many distinct sentences have at least one
/// finding of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SentenceCounts {
    pub double_annotation: usize,
    pub double_meaning: usize,
    pub cross_set_missing: usize,
}

pub fn sentence_counts(findings: &[Finding]) -> SentenceCounts {
    let mut per_kind: HashMap<FindingKind, HashSet<&str>> = HashMap::new();
    for finding in findings {
        per_kind.entry(finding.kind).or_default().insert(finding.sent_id.as_str());
    }
    let count = |kind| per_kind.get(&kind).map(HashSet::len).unwrap_or(0);
    SentenceCounts {
        double_annotation: count(FindingKind::DoubleAnnotation),
        double_meaning: count(FindingKind::DoubleMeaning),
        cross_set_missing: count(FindingKind::CrossSetMissing),
    }
}

/// Findings plus roll-ups, ready for rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub findings: Vec<Finding>,
    pub sentence_counts: SentenceCounts,
    pub only_in_first: Vec<String>,
    pub only_in_second: Vec<String>,
}

impl LintReport {
    pub fn new(findings: Vec<Finding>) -> Self {
        let sentence_counts = sentence_counts(&findings);
        LintReport {
            findings,
            sentence_counts,
            only_in_first: Vec::new(),
            only_in_second: Vec::new(),
        }
    }

    pub fn with_diff(mut self, diff: AnnotationDiff) -> Self {
        self.findings.extend(diff.findings);
        self.sentence_counts = sentence_counts(&self.findings);
        self.only_in_first = diff.only_in_first;
        self.only_in_second = diff.only_in_second;
        self
    }
}

impl fmt::Display for LintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sections = [
            (
                FindingKind::DoubleAnnotation,
                "double annotation",
                self.sentence_counts.double_annotation,
            ),
            (FindingKind::DoubleMeaning, "double meaning", self.sentence_counts.double_meaning),
            (
                FindingKind::CrossSetMissing,
                "cross-set missing",
                self.sentence_counts.cross_set_missing,
            ),
        ];
        let mut first_section = true;
        for (kind, title, sentences) in sections {
            let group: Vec<&Finding> = self.findings.iter().filter(|x| x.kind == kind).collect();
            if group.is_empty() {
                continue;
            }
            if !first_section {
                writeln!(f)?;
            }
            first_section = false;
            let plural = if sentences == 1 { "sentence" } else { "sentences" };
            writeln!(f, "{title}: {} finding(s) in {sentences} {plural}", group.len())?;
            for finding in group {
                let clusters =
                    finding.clusters.iter().map(u32::to_string).collect::<Vec<_>>().join("+");
                let tag = match (finding.severity, finding.direction) {
                    (Some(Severity::Strict), _) => " [strict]",
                    (Some(Severity::Loose), _) => " [loose]",
                    (_, Some(Direction::MissingFromSecond)) => " [missing from second]",
                    (_, Some(Direction::MissingFromFirst)) => " [missing from first]",
                    _ => "",
                };
                writeln!(f, "  {} cluster {clusters}{tag}", finding.sent_id)?;
                for witness in &finding.witnesses {
                    writeln!(f, "    {witness}")?;
                }
            }
        }
        if !self.only_in_first.is_empty() {
            if !first_section {
                writeln!(f)?;
            }
            first_section = false;
            writeln!(f, "sentences only in first corpus: {}", self.only_in_first.join(", "))?;
        }
        if !self.only_in_second.is_empty() {
            if !first_section {
                writeln!(f)?;
            }
            first_section = false;
            writeln!(f, "sentences only in second corpus: {}", self.only_in_second.join(", "))?;
        }
        if first_section {
            writeln!(f, "no findings")?;
        }
        Ok(())
    }
}
