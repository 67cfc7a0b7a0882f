//! The staged matching function. Every extraction is tried against a
//! sentence's clusters with exact match (EM) first, then alternative
//! formulations (AF), then level-of-detail match (LoD); each stage can be
//! retried under punctuation normalization. The first success wins and the
//! decision records which stage matched.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ConcreteTriple, Extraction, ExtractionSet, GoldCorpus, SentenceGold, Token};

/// Which pipeline stages run. Exact match is always on; the flags enable the
/// stages layered on top of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatcherConfig {
    pub af_enabled: bool,
    pub lod_enabled: bool,
    pub punc_enabled: bool,
}

impl MatcherConfig {
    /// Exact match only.
    pub fn exact() -> Self {
        MatcherConfig { af_enabled: false, lod_enabled: false, punc_enabled: false }
    }

    /// All stages enabled.
    pub fn full() -> Self {
        MatcherConfig { af_enabled: true, lod_enabled: true, punc_enabled: true }
    }
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig::exact()
    }
}

/// Rejected matcher-configuration spelling.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown matcher configuration {0:?} (expected em[+af][+lod][+punc])")]
pub struct ConfigError(pub String);

impl FromStr for MatcherConfig {
    type Err = ConfigError;

    /// Accepts `em` optionally followed by `+af`, `+lod`, `+punc` in that
    /// order, e.g. `em`, `em+af`, `em+lod`, `em+af+lod+punc`.
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let err = || ConfigError(s.to_string());
        let mut parts = s.split('+');
        if parts.next() != Some("em") {
            return Err(err());
        }
        let mut config = MatcherConfig::exact();
        let mut last_rank = 0;
        for part in parts {
            let rank = match part {
                "af" => {
                    config.af_enabled = true;
                    1
                }
                "lod" => {
                    config.lod_enabled = true;
                    2
                }
                "punc" => {
                    config.punc_enabled = true;
                    3
                }
                _ => return Err(err()),
            };
            if rank <= last_rank {
                return Err(err());
            }
            last_rank = rank;
        }
        Ok(config)
    }
}

impl fmt::Display for MatcherConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("em")?;
        if self.af_enabled {
            f.write_str("+af")?;
        }
        if self.lod_enabled {
            f.write_str("+lod")?;
        }
        if self.punc_enabled {
            f.write_str("+punc")?;
        }
        Ok(())
    }
}

/// How a rewriting pair was harvested: from a copular formulation or
/// cross-cluster co-occurrence (IS), or from coordinated objects (AND).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairSource {
    Is,
    And,
}

/// A phrase pair (a, b) harvested from the gold reference that licenses
/// deleting either member from an over-long extraction argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewritingPair {
    pub a: Vec<Token>,
    pub b: Vec<Token>,
    pub source: PairSource,
    /// Lowest cluster index the pair was harvested from.
    pub source_cluster: u32,
}

/// The stage that produced a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchMethod {
    Em,
    Af,
    Lod,
}

/// Outcome of matching one extraction against one sentence's clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchDecision {
    cluster: Option<u32>,
    method: Option<MatchMethod>,
    punc_used: bool,
}

impl MatchDecision {
    pub fn matched(cluster: u32, method: MatchMethod, punc_used: bool) -> Self {
        MatchDecision { cluster: Some(cluster), method: Some(method), punc_used }
    }

    pub fn unmatched() -> Self {
        MatchDecision { cluster: None, method: None, punc_used: false }
    }

    pub fn cluster(&self) -> Option<u32> {
        self.cluster
    }

    pub fn method(&self) -> Option<MatchMethod> {
        self.method
    }

    pub fn is_match(&self) -> bool {
        self.cluster.is_some()
    }

    /// True when the matching stage succeeded only after punctuation
    /// normalization (its raw attempt failed).
    pub fn punc_used(&self) -> bool {
        self.punc_used
    }

    pub fn method_label(&self) -> &'static str {
        match self.method {
            Some(MatchMethod::Em) => "EM",
            Some(MatchMethod::Af) => "AF",
            Some(MatchMethod::Lod) => "LOD",
            None => "NONE",
        }
    }
}

/// Extraction/sentence pairing errors.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("extraction sent_id {extraction:?} does not match sentence {sentence:?}")]
    SentenceMismatch { extraction: String, sentence: String },
}

const DROPPABLE_IN_REL: [&str; 4] = ["a", "an", "the", "also"];
const COPULA_FORMS: [&str; 4] = ["is", "was", "are", "were"];

/// Whether a relation reduces to a bare copula: after dropping the
/// determiners "a"/"an"/"the" and "also", exactly one token must remain and
/// be a form of "to be" ("is", "was", "are", "were"), case-insensitively.
pub fn reduces_to_is(rel: &[Token]) -> bool {
    let mut remainder = rel.iter().filter(|t| {
        let lower = t.as_str().to_lowercase();
        !DROPPABLE_IN_REL.contains(&lower.as_str())
    });
    match (remainder.next(), remainder.next()) {
        (Some(only), None) => COPULA_FORMS.contains(&only.as_str().to_lowercase().as_str()),
        _ => false,
    }
}

fn find_subsequence(haystack: &[Token], needle: &[Token]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|window| window == needle)
}

struct ClusterTriples {
    index: u32,
    triples: Vec<ConcreteTriple>,
    members: HashSet<ConcreteTriple>,
}

fn expand_clusters(sentence: &SentenceGold) -> Vec<ClusterTriples> {
    sentence
        .clusters()
        .iter()
        .map(|cluster| {
            let triples = cluster.expand().expect("expansion cap enforced at construction");
            let members = triples.iter().cloned().collect();
            ClusterTriples { index: cluster.index(), triples, members }
        })
        .collect()
}

fn normalize_clusters(raw: &[ClusterTriples]) -> Vec<ClusterTriples> {
    raw.iter()
        .map(|cluster| {
            let mut triples = Vec::with_capacity(cluster.triples.len());
            let mut members = HashSet::with_capacity(cluster.triples.len());
            for triple in &cluster.triples {
                let normalized = triple.normalized();
                if members.insert(normalized.clone()) {
                    triples.push(normalized);
                }
            }
            ClusterTriples { index: cluster.index, triples, members }
        })
        .collect()
}

fn em_lookup(clusters: &[ClusterTriples], triple: &ConcreteTriple) -> Option<u32> {
    clusters.iter().find(|c| c.members.contains(triple)).map(|c| c.index)
}

fn lod_lookup(clusters: &[ClusterTriples], triple: &ConcreteTriple) -> Option<u32> {
    let linearized = triple.linearize();
    for candidate in clusters {
        if !candidate.triples.iter().any(|t| t.linearize() == linearized) {
            continue;
        }
        let supported = clusters
            .iter()
            .filter(|other| other.index != candidate.index)
            .flat_map(|other| other.triples.iter())
            .any(|t| t.rel == triple.rel && (t.arg1 == triple.arg1 || t.arg2 == triple.arg2));
        if supported {
            return Some(candidate.index);
        }
    }
    None
}

fn push_pair(
    pairs: &mut Vec<RewritingPair>,
    a: Vec<Token>,
    b: Vec<Token>,
    source: PairSource,
    source_cluster: u32,
) {
    if a.is_empty() || b.is_empty() || a == b {
        return;
    }
    pairs.push(RewritingPair { a, b, source, source_cluster });
}

/// Harvests rewriting pairs from a sentence's gold clusters.
///
/// IS pairs come from copular formulations — a triple (A, r, B) whose
/// relation reduces to "is" pairs A with B — and from two clusters stating
/// (E, rel, A) and (E, rel, B) with a copular rel. AND pairs come from two
/// clusters stating (E, rel, A) and (E, rel, B) with any identical rel.
/// Pairs are ordered by (source cluster, a, b, IS before AND) and
/// deduplicated on (a, b, source), keeping the lowest source cluster.
pub fn collect_rewriting_pairs(sentence: &SentenceGold) -> Vec<RewritingPair> {
    let mut pairs = Vec::new();
    for cluster in sentence.clusters() {
        for formulation in cluster.formulations() {
            if !reduces_to_is(&formulation.rel().mandatory_tokens()) {
                continue;
            }
            let triples = formulation.expand().expect("expansion cap enforced at construction");
            for triple in triples {
                push_pair(&mut pairs, triple.arg1, triple.arg2, PairSource::Is, cluster.index());
            }
        }
    }
    let clusters = expand_clusters(sentence);
    for (i, first) in clusters.iter().enumerate() {
        for second in &clusters[i + 1..] {
            for t1 in &first.triples {
                for t2 in &second.triples {
                    if t1.arg1 != t2.arg1 || t1.rel != t2.rel {
                        continue;
                    }
                    if reduces_to_is(&t1.rel) {
                        push_pair(
                            &mut pairs,
                            t1.arg2.clone(),
                            t2.arg2.clone(),
                            PairSource::Is,
                            first.index,
                        );
                    }
                    push_pair(
                        &mut pairs,
                        t1.arg2.clone(),
                        t2.arg2.clone(),
                        PairSource::And,
                        first.index,
                    );
                }
            }
        }
    }
    pairs.sort_by(|x, y| {
        (x.source_cluster, &x.a, &x.b, x.source).cmp(&(y.source_cluster, &y.a, &y.b, y.source))
    });
    let mut seen = HashSet::new();
    pairs.retain(|p| seen.insert((p.a.clone(), p.b.clone(), p.source)));
    pairs
}

/// Removes `b_span` and `a_span` (in that order of variants) from `tokens`,
/// also dropping a single "and" or "," left dangling between the two spans.
/// Returns none unless both members occur as non-overlapping contiguous
/// subsequences.
fn rewrite_slot(tokens: &[Token], a: &[Token], b: &[Token]) -> Option<[Vec<Token>; 2]> {
    let a_start = find_subsequence(tokens, a)?;
    let b_start = find_subsequence(tokens, b)?;
    let a_span = a_start..a_start + a.len();
    let b_span = b_start..b_start + b.len();
    if a_span.start < b_span.end && b_span.start < a_span.end {
        return None;
    }
    let (first_end, second_start) = if a_span.start < b_span.start {
        (a_span.end, b_span.start)
    } else {
        (b_span.end, a_span.start)
    };
    let gap_is_connector =
        second_start - first_end == 1 && matches!(tokens[first_end].as_str(), "and" | ",");
    let remove = |span: &Range<usize>| -> Vec<Token> {
        tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| !span.contains(i) && !(gap_is_connector && *i == first_end))
            .map(|(_, t)| t.clone())
            .collect()
    };
    Some([remove(&b_span), remove(&a_span)])
}

/// Deletion variants of an extraction licensed by rewriting pairs. IS pairs
/// apply only when the extraction's relation reduces to "is"; AND pairs only
/// when the rewritten argument contains the token "and". For each applicable
/// pair and argument slot containing both members, the b-removed variant
/// precedes the a-removed one; duplicates and the original are dropped.
pub fn generate_alternatives(extraction: &Extraction, pairs: &[RewritingPair]) -> Vec<Extraction> {
    let rel_is_copular = reduces_to_is(extraction.rel());
    let mut out = Vec::new();
    let mut seen: HashSet<ConcreteTriple> = HashSet::new();
    seen.insert(extraction.triple());
    for pair in pairs {
        for rewrite_arg1 in [true, false] {
            let slot = if rewrite_arg1 { extraction.arg1() } else { extraction.arg2() };
            let applicable = match pair.source {
                PairSource::Is => rel_is_copular,
                PairSource::And => slot.iter().any(|t| t.as_str() == "and"),
            };
            if !applicable {
                continue;
            }
            let Some(variants) = rewrite_slot(slot, &pair.a, &pair.b) else {
                continue;
            };
            for rewritten in variants {
                let (arg1, arg2) = if rewrite_arg1 {
                    (rewritten, extraction.arg2().to_vec())
                } else {
                    (extraction.arg1().to_vec(), rewritten)
                };
                let candidate = Extraction::new(
                    extraction.sent_id().to_string(),
                    arg1,
                    extraction.rel().to_vec(),
                    arg2,
                    extraction.confidence(),
                )
                .expect("rewriting keeps the untouched pair member in the slot");
                if seen.insert(candidate.triple()) {
                    out.push(candidate);
                }
            }
        }
    }
    out
}

/// A sentence's clusters pre-expanded for repeated matching. Building one
/// amortizes expansion, normalization, and pair harvesting across all
/// extractions of the sentence.
pub struct SentenceMatcher<'g> {
    sentence: &'g SentenceGold,
    config: MatcherConfig,
    raw: Vec<ClusterTriples>,
    normalized: Vec<ClusterTriples>,
    pairs: Vec<RewritingPair>,
}

impl<'g> SentenceMatcher<'g> {
    pub fn new(sentence: &'g SentenceGold, config: MatcherConfig) -> Self {
        let raw = expand_clusters(sentence);
        let normalized = if config.punc_enabled { normalize_clusters(&raw) } else { Vec::new() };
        let pairs = if config.af_enabled { collect_rewriting_pairs(sentence) } else { Vec::new() };
        SentenceMatcher { sentence, config, raw, normalized, pairs }
    }

    pub fn sentence(&self) -> &SentenceGold {
        self.sentence
    }

    /// Runs the pipeline without checking sent_id agreement; stages run in
    /// EM, AF, LoD order, each raw first and punctuation-normalized second.
    /// Extractions with an empty arg2 only take part in exact matching.
    pub fn decide(&self, extraction: &Extraction) -> MatchDecision {
        let raw_triple = extraction.triple();
        if let Some(cluster) = em_lookup(&self.raw, &raw_triple) {
            return MatchDecision::matched(cluster, MatchMethod::Em, false);
        }
        let normalized_triple =
            if self.config.punc_enabled { Some(raw_triple.normalized()) } else { None };
        if let Some(triple) = &normalized_triple {
            if let Some(cluster) = em_lookup(&self.normalized, triple) {
                return MatchDecision::matched(cluster, MatchMethod::Em, true);
            }
        }
        if extraction.arg2().is_empty() {
            return MatchDecision::unmatched();
        }
        if self.config.af_enabled {
            let alternatives = generate_alternatives(extraction, &self.pairs);
            for alternative in &alternatives {
                if let Some(cluster) = em_lookup(&self.raw, &alternative.triple()) {
                    return MatchDecision::matched(cluster, MatchMethod::Af, false);
                }
            }
            if self.config.punc_enabled {
                for alternative in &alternatives {
                    if let Some(cluster) =
                        em_lookup(&self.normalized, &alternative.triple().normalized())
                    {
                        return MatchDecision::matched(cluster, MatchMethod::Af, true);
                    }
                }
            }
        }
        if self.config.lod_enabled {
            if let Some(cluster) = lod_lookup(&self.raw, &raw_triple) {
                return MatchDecision::matched(cluster, MatchMethod::Lod, false);
            }
            if let Some(triple) = &normalized_triple {
                if let Some(cluster) = lod_lookup(&self.normalized, triple) {
                    return MatchDecision::matched(cluster, MatchMethod::Lod, true);
                }
            }
        }
        MatchDecision::unmatched()
    }
}

/// Lowest cluster whose expansion contains the extraction's triple slot-for-
/// slot, with both sides punctuation-normalized when `punc` is set.
pub fn exact_match(extraction: &Extraction, sentence: &SentenceGold, punc: bool) -> Option<u32> {
    let clusters = expand_clusters(sentence);
    if punc {
        let normalized = normalize_clusters(&clusters);
        em_lookup(&normalized, &extraction.triple().normalized())
    } else {
        em_lookup(&clusters, &extraction.triple())
    }
}

/// Exact-matches the generated alternatives in order; the first to match
/// determines the credited cluster.
pub fn af_match(
    extraction: &Extraction,
    sentence: &SentenceGold,
    pairs: &[RewritingPair],
    punc: bool,
) -> Option<u32> {
    let clusters = expand_clusters(sentence);
    let clusters = if punc { normalize_clusters(&clusters) } else { clusters };
    for alternative in generate_alternatives(extraction, pairs) {
        let triple = if punc { alternative.triple().normalized() } else { alternative.triple() };
        if let Some(cluster) = em_lookup(&clusters, &triple) {
            return Some(cluster);
        }
    }
    None
}

/// Level-of-detail match: the lowest cluster C holding a triple whose
/// linearization equals the extraction's, provided some other cluster holds
/// a triple with the extraction's relation and one of its arguments in the
/// corresponding slots. C (the linearization cluster) is credited.
pub fn lod_match(extraction: &Extraction, sentence: &SentenceGold, punc: bool) -> Option<u32> {
    let clusters = expand_clusters(sentence);
    if punc {
        let normalized = normalize_clusters(&clusters);
        lod_lookup(&normalized, &extraction.triple().normalized())
    } else {
        lod_lookup(&clusters, &extraction.triple())
    }
}

/// Full pipeline for one extraction against its sentence's gold clusters.
pub fn match_extraction(
    extraction: &Extraction,
    sentence: &SentenceGold,
    config: MatcherConfig,
) -> Result<MatchDecision, MatchError> {
    if extraction.sent_id() != sentence.sent_id() {
        return Err(MatchError::SentenceMismatch {
            extraction: extraction.sent_id().to_string(),
            sentence: sentence.sent_id().to_string(),
        });
    }
    Ok(SentenceMatcher::new(sentence, config).decide(extraction))
}

/// An extraction whose sent_id has no gold sentence; it is decided NONE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrphanExtraction {
    /// Position in the extraction set.
    pub index: usize,
    pub sent_id: String,
}

/// Per-extraction decisions over a whole corpus, in extraction order.
#[derive(Debug, Clone)]
pub struct CorpusMatches {
    pub decisions: Vec<MatchDecision>,
    pub orphans: Vec<OrphanExtraction>,
}

/// Matches every extraction against its sentence. Sentences are prepared and
/// extractions matched in parallel; results are order-preserving and
/// identical to sequential evaluation regardless of thread count.
pub fn match_corpus(
    extractions: &ExtractionSet,
    gold: &GoldCorpus,
    config: MatcherConfig,
) -> CorpusMatches {
    let sentences: HashMap<&str, &SentenceGold> =
        gold.sentences().iter().map(|s| (s.sent_id(), s)).collect();
    let used: HashSet<&str> = extractions.extractions.iter().map(|e| e.sent_id()).collect();
    let matchers: HashMap<&str, SentenceMatcher> = gold
        .sentences()
        .par_iter()
        .filter(|s| used.contains(s.sent_id()))
        .map(|s| (s.sent_id(), SentenceMatcher::new(s, config)))
        .collect();
    let decisions: Vec<MatchDecision> = extractions
        .extractions
        .par_iter()
        .map(|e| match matchers.get(e.sent_id()) {
            Some(matcher) => matcher.decide(e),
            None => MatchDecision::unmatched(),
        })
        .collect();
    let orphans = extractions
        .extractions
        .iter()
        .enumerate()
        .filter(|(_, e)| !sentences.contains_key(e.sent_id()))
        .map(|(index, e)| OrphanExtraction { index, sent_id: e.sent_id().to_string() })
        .collect();
    CorpusMatches { decisions, orphans }
}
