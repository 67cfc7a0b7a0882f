//! Core data model for synset-based extraction benchmarks: tokens, slot
//! patterns with optional-word groups, fact formulations, clusters (synsets),
//! gold-annotated sentences, and system extractions.
//!
//! All text is pre-tokenized; the model never re-tokenizes. A token sequence
//! is rendered by joining tokens with single spaces, and parsed by splitting
//! on whitespace, so rendering and parsing are mutually inverse.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// Separator between tuple slots in serialized form. Forbidden inside tokens
/// so that serialized lines can be split unambiguously.
pub const SLOT_SEPARATOR: &str = "-->";

/// Maximum optional groups per formulation, enforced at construction.
pub const MAX_OPTIONAL_GROUPS: usize = 16;

/// Hard cap on the number of concrete triples a formulation may expand to.
pub const MAX_TRIPLES_PER_FORMULATION: usize = 1 << 16;

/// Construction-time validation failures for model values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("empty token")]
    EmptyToken,
    #[error("token {0:?} contains whitespace")]
    WhitespaceInToken(String),
    #[error("token {0:?} contains the slot separator \"{SLOT_SEPARATOR}\"")]
    SeparatorInToken(String),
    #[error("group has no tokens")]
    EmptyGroup,
    #[error("{0} slot is empty")]
    EmptySlot(&'static str),
    #[error("{0} slot has no mandatory token")]
    NoMandatoryToken(&'static str),
    #[error("formulation has {0} optional groups (limit is {MAX_OPTIONAL_GROUPS})")]
    TooManyOptionalGroups(usize),
    #[error("formulation expands to {0} triples (limit is {MAX_TRIPLES_PER_FORMULATION})")]
    ExpansionCapExceeded(usize),
    #[error("cluster index must be positive")]
    ZeroClusterIndex,
    #[error("cluster {0} has no formulations")]
    EmptyCluster(u32),
    #[error("cluster {cluster} repeats formulation {formulation:?}")]
    DuplicateFormulation { cluster: u32, formulation: String },
    #[error("empty sent_id")]
    EmptySentId,
    #[error("sent_id {0:?} contains whitespace")]
    WhitespaceInSentId(String),
    #[error("sentence text contains a line break")]
    LineBreakInText,
    #[error("expected cluster index {expected}, found {found}")]
    NonContiguousClusterIndex { expected: u32, found: u32 },
    #[error("duplicate sent_id {0:?}")]
    DuplicateSentId(String),
    #[error("confidence {0} is not finite")]
    NonFiniteConfidence(f64),
}

/// A single surface token. Non-empty, free of whitespace, and never contains
/// the slot separator, so any token sequence round-trips through text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.is_empty() {
            return Err(ModelError::EmptyToken);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(ModelError::WhitespaceInToken(text));
        }
        if text.contains(SLOT_SEPARATOR) {
            return Err(ModelError::SeparatorInToken(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Splits pre-tokenized text on whitespace into validated tokens.
pub fn parse_tokens(text: &str) -> Result<Vec<Token>, ModelError> {
    text.split_whitespace().map(Token::new).collect()
}

/// Renders a token sequence as space-joined text.
pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

fn is_punct_char(c: char) -> bool {
    // ASCII punctuation is included on top of the Unicode punctuation
    // category so that characters like backtick (category Sk) are stripped:
    // pre-tokenized corpora use `` and '' as quote tokens.
    c.is_ascii_punctuation() || c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// Punctuation-insensitive normal form of a token sequence: punctuation
/// characters are removed, letters are lowercased, and tokens emptied by the
/// removal are dropped. The result can be shorter than the input, or empty.
pub fn normalize_punc(tokens: &[Token]) -> Vec<Token> {
    tokens
        .iter()
        .filter_map(|t| {
            let kept: String = t.as_str().chars().filter(|c| !is_punct_char(*c)).collect();
            if kept.is_empty() {
                None
            } else {
                Some(Token(kept.to_lowercase()))
            }
        })
        .collect()
}

/// A run of tokens inside a slot pattern, either mandatory or optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    tokens: Vec<Token>,
    optional: bool,
}

impl Group {
    pub fn mandatory(tokens: Vec<Token>) -> Result<Self, ModelError> {
        Self::build(tokens, false)
    }

    pub fn optional(tokens: Vec<Token>) -> Result<Self, ModelError> {
        Self::build(tokens, true)
    }

    fn build(tokens: Vec<Token>, optional: bool) -> Result<Self, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyGroup);
        }
        Ok(Group { tokens, optional })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn is_optional(&self) -> bool {
        self.optional
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.optional {
            write!(f, "[{}]", join_tokens(&self.tokens))
        } else {
            f.write_str(&join_tokens(&self.tokens))
        }
    }
}

/// One tuple slot as annotated: an ordered mix of mandatory token runs and
/// independently includable optional groups. May be empty (arg2 only).
///
/// Adjacent mandatory groups are merged on construction, so two patterns
/// that differ only in how a mandatory run was split compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPattern {
    groups: Vec<Group>,
}

impl SlotPattern {
    pub fn new(groups: Vec<Group>) -> Self {
        let mut merged: Vec<Group> = Vec::with_capacity(groups.len());
        for group in groups {
            match merged.last_mut() {
                Some(prev) if !prev.optional && !group.optional => {
                    prev.tokens.extend(group.tokens);
                }
                _ => merged.push(group),
            }
        }
        SlotPattern { groups: merged }
    }

    pub fn empty() -> Self {
        SlotPattern { groups: Vec::new() }
    }

    /// Builds a pattern of a single mandatory run (no optional groups).
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self, ModelError> {
        Ok(SlotPattern::new(vec![Group::mandatory(tokens)?]))
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn has_mandatory(&self) -> bool {
        self.groups.iter().any(|g| !g.optional)
    }

    pub fn optional_count(&self) -> usize {
        self.groups.iter().filter(|g| g.optional).count()
    }

    /// Tokens of the mandatory groups, in slot order.
    pub fn mandatory_tokens(&self) -> Vec<Token> {
        self.groups.iter().filter(|g| !g.optional).flat_map(|g| g.tokens.iter().cloned()).collect()
    }

    /// All distinct token sequences obtainable by including or dropping each
    /// optional group independently. The mandatory-only variant comes first;
    /// variants are ordered by the inclusion bitmask over optional groups and
    /// deduplicated keeping first occurrence. An empty pattern expands to the
    /// single empty sequence.
    pub fn expand(&self) -> Vec<Vec<Token>> {
        let optional_count = self.optional_count() as u32;
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for mask in 0u64..(1u64 << optional_count) {
            let mut variant = Vec::new();
            let mut bit = 0u32;
            for group in &self.groups {
                let include = if group.optional {
                    let inc = mask & (1u64 << bit) != 0;
                    bit += 1;
                    inc
                } else {
                    true
                };
                if include {
                    variant.extend_from_slice(&group.tokens);
                }
            }
            if seen.insert(variant.clone()) {
                out.push(variant);
            }
        }
        out
    }
}

impl fmt::Display for SlotPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, group) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{group}")?;
        }
        Ok(())
    }
}

/// One way of phrasing a fact: three slot patterns. arg1 and rel must carry
/// at least one mandatory token; arg2 may be empty or must carry one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formulation {
    arg1: SlotPattern,
    rel: SlotPattern,
    arg2: SlotPattern,
}

impl Formulation {
    pub fn new(arg1: SlotPattern, rel: SlotPattern, arg2: SlotPattern) -> Result<Self, ModelError> {
        if arg1.is_empty() {
            return Err(ModelError::EmptySlot("arg1"));
        }
        if !arg1.has_mandatory() {
            return Err(ModelError::NoMandatoryToken("arg1"));
        }
        if rel.is_empty() {
            return Err(ModelError::EmptySlot("rel"));
        }
        if !rel.has_mandatory() {
            return Err(ModelError::NoMandatoryToken("rel"));
        }
        if !arg2.is_empty() && !arg2.has_mandatory() {
            return Err(ModelError::NoMandatoryToken("arg2"));
        }
        let optional = arg1.optional_count() + rel.optional_count() + arg2.optional_count();
        if optional > MAX_OPTIONAL_GROUPS {
            return Err(ModelError::TooManyOptionalGroups(optional));
        }
        Ok(Formulation { arg1, rel, arg2 })
    }

    pub fn arg1(&self) -> &SlotPattern {
        &self.arg1
    }

    pub fn rel(&self) -> &SlotPattern {
        &self.rel
    }

    pub fn arg2(&self) -> &SlotPattern {
        &self.arg2
    }

    /// Cartesian product of the per-slot expansions, deduplicated keeping
    /// first occurrence (slots iterate in arg1, rel, arg2 order, arg2 fastest).
    pub fn expand(&self) -> Result<Vec<ConcreteTriple>, ModelError> {
        let a1 = self.arg1.expand();
        let rel = self.rel.expand();
        let a2 = self.arg2.expand();
        let raw = a1.len() * rel.len() * a2.len();
        if raw > MAX_TRIPLES_PER_FORMULATION {
            return Err(ModelError::ExpansionCapExceeded(raw));
        }
        let mut out = Vec::with_capacity(raw);
        let mut seen = HashSet::with_capacity(raw);
        for va1 in &a1 {
            for vr in &rel {
                for va2 in &a2 {
                    let triple =
                        ConcreteTriple { arg1: va1.clone(), rel: vr.clone(), arg2: va2.clone() };
                    if seen.insert(triple.clone()) {
                        out.push(triple);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.arg2.is_empty() {
            write!(f, "{} {SLOT_SEPARATOR} {} {SLOT_SEPARATOR}", self.arg1, self.rel)
        } else {
            write!(f, "{} {SLOT_SEPARATOR} {} {SLOT_SEPARATOR} {}", self.arg1, self.rel, self.arg2)
        }
    }
}

/// A fully concrete (arg1, rel, arg2) triple: no optional structure left.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteTriple {
    pub arg1: Vec<Token>,
    pub rel: Vec<Token>,
    pub arg2: Vec<Token>,
}

impl ConcreteTriple {
    /// Slot-boundary-free form: arg1, rel, and arg2 tokens concatenated.
    pub fn linearize(&self) -> Vec<Token> {
        let mut out = Vec::with_capacity(self.arg1.len() + self.rel.len() + self.arg2.len());
        out.extend_from_slice(&self.arg1);
        out.extend_from_slice(&self.rel);
        out.extend_from_slice(&self.arg2);
        out
    }

    /// Triple with [`normalize_punc`] applied slot-wise.
    pub fn normalized(&self) -> ConcreteTriple {
        ConcreteTriple {
            arg1: normalize_punc(&self.arg1),
            rel: normalize_punc(&self.rel),
            arg2: normalize_punc(&self.arg2),
        }
    }
}

impl fmt::Display for ConcreteTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.arg2.is_empty() {
            write!(
                f,
                "{} {SLOT_SEPARATOR} {} {SLOT_SEPARATOR}",
                join_tokens(&self.arg1),
                join_tokens(&self.rel)
            )
        } else {
            write!(
                f,
                "{} {SLOT_SEPARATOR} {} {SLOT_SEPARATOR} {}",
                join_tokens(&self.arg1),
                join_tokens(&self.rel),
                join_tokens(&self.arg2)
            )
        }
    }
}

/// A fact synset: every formulation phrases the same fact. Indices are
/// 1-based and unique within a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    index: u32,
    formulations: Vec<Formulation>,
}

impl Cluster {
    pub fn new(index: u32, formulations: Vec<Formulation>) -> Result<Self, ModelError> {
        if index == 0 {
            return Err(ModelError::ZeroClusterIndex);
        }
        if formulations.is_empty() {
            return Err(ModelError::EmptyCluster(index));
        }
        let mut seen = HashSet::new();
        for f in &formulations {
            let rendered = f.to_string();
            if !seen.insert(rendered.clone()) {
                return Err(ModelError::DuplicateFormulation {
                    cluster: index,
                    formulation: rendered,
                });
            }
        }
        Ok(Cluster { index, formulations })
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn formulations(&self) -> &[Formulation] {
        &self.formulations
    }

    /// Union of the formulation expansions, deduplicated keeping first
    /// occurrence in formulation order.
    pub fn expand(&self) -> Result<Vec<ConcreteTriple>, ModelError> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for f in &self.formulations {
            for triple in f.expand()? {
                if seen.insert(triple.clone()) {
                    out.push(triple);
                }
            }
        }
        Ok(out)
    }
}

fn validate_sent_id(sent_id: &str) -> Result<(), ModelError> {
    if sent_id.is_empty() {
        return Err(ModelError::EmptySentId);
    }
    if sent_id.chars().any(char::is_whitespace) {
        return Err(ModelError::WhitespaceInSentId(sent_id.to_string()));
    }
    Ok(())
}

/// One gold-annotated sentence: raw text plus its fact clusters, whose
/// indices run contiguously from 1. A sentence may have zero clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceGold {
    sent_id: String,
    text: String,
    clusters: Vec<Cluster>,
}

impl SentenceGold {
    pub fn new(sent_id: String, text: String, clusters: Vec<Cluster>) -> Result<Self, ModelError> {
        validate_sent_id(&sent_id)?;
        if text.contains('\n') || text.contains('\r') {
            return Err(ModelError::LineBreakInText);
        }
        for (i, cluster) in clusters.iter().enumerate() {
            let expected = (i + 1) as u32;
            if cluster.index() != expected {
                return Err(ModelError::NonContiguousClusterIndex {
                    expected,
                    found: cluster.index(),
                });
            }
        }
        Ok(SentenceGold { sent_id, text, clusters })
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, index: u32) -> Option<&Cluster> {
        if index == 0 {
            return None;
        }
        self.clusters.get(index as usize - 1)
    }
}

/// A gold corpus: annotated sentences with unique sent_ids, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldCorpus {
    sentences: Vec<SentenceGold>,
}

impl GoldCorpus {
    pub fn new(sentences: Vec<SentenceGold>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if !seen.insert(s.sent_id().to_string()) {
                return Err(ModelError::DuplicateSentId(s.sent_id().to_string()));
            }
        }
        Ok(GoldCorpus { sentences })
    }

    pub fn sentences(&self) -> &[SentenceGold] {
        &self.sentences
    }

    pub fn sentence(&self, sent_id: &str) -> Option<&SentenceGold> {
        self.sentences.iter().find(|s| s.sent_id() == sent_id)
    }

    pub fn total_clusters(&self) -> usize {
        self.sentences.iter().map(|s| s.clusters().len()).sum()
    }
}

/// One system output tuple. arg1 and rel are non-empty; arg2 may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    sent_id: String,
    arg1: Vec<Token>,
    rel: Vec<Token>,
    arg2: Vec<Token>,
    confidence: Option<f64>,
}

impl Extraction {
    pub fn new(
        sent_id: String,
        arg1: Vec<Token>,
        rel: Vec<Token>,
        arg2: Vec<Token>,
        confidence: Option<f64>,
    ) -> Result<Self, ModelError> {
        validate_sent_id(&sent_id)?;
        if arg1.is_empty() {
            return Err(ModelError::EmptySlot("arg1"));
        }
        if rel.is_empty() {
            return Err(ModelError::EmptySlot("rel"));
        }
        if let Some(c) = confidence {
            if !c.is_finite() {
                return Err(ModelError::NonFiniteConfidence(c));
            }
        }
        Ok(Extraction { sent_id, arg1, rel, arg2, confidence })
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    pub fn arg1(&self) -> &[Token] {
        &self.arg1
    }

    pub fn rel(&self) -> &[Token] {
        &self.rel
    }

    pub fn arg2(&self) -> &[Token] {
        &self.arg2
    }

    pub fn confidence(&self) -> Option<f64> {
        self.confidence
    }

    /// The extraction's tuple content, without sent_id and confidence.
    pub fn triple(&self) -> ConcreteTriple {
        ConcreteTriple { arg1: self.arg1.clone(), rel: self.rel.clone(), arg2: self.arg2.clone() }
    }

    /// Total tokens across the three slots.
    pub fn token_count(&self) -> usize {
        self.arg1.len() + self.rel.len() + self.arg2.len()
    }
}

/// The output of one extraction system over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionSet {
    pub system_name: String,
    pub extractions: Vec<Extraction>,
}

/// A human judgement: the cluster an extraction was labelled with, or 0 for
/// "matches nothing in this sentence".
#[derive(Debug, Clone, PartialEq)]
pub struct MatchAnnotation {
    pub extraction: Extraction,
    pub gold_cluster: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Token> {
        parse_tokens(text).unwrap()
    }

    fn slot(mandatory: &str) -> SlotPattern {
        SlotPattern::from_tokens(toks(mandatory)).unwrap()
    }

    #[test]
    fn token_rejects_whitespace_separator_and_empty() {
        assert_eq!(Token::new(""), Err(ModelError::EmptyToken));
        assert!(matches!(Token::new("a b"), Err(ModelError::WhitespaceInToken(_))));
        assert!(matches!(Token::new("a\tb"), Err(ModelError::WhitespaceInToken(_))));
        assert!(matches!(Token::new("x-->y"), Err(ModelError::SeparatorInToken(_))));
        assert_eq!(Token::new("O'Brien").unwrap().as_str(), "O'Brien");
    }

    #[test]
    fn join_and_parse_tokens_are_inverse() {
        let ts = toks("He served as Prime Minister");
        assert_eq!(parse_tokens(&join_tokens(&ts)).unwrap(), ts);
    }

    #[test]
    fn expand_without_optionals_is_single_variant() {
        let s = slot("founding justice");
        assert_eq!(s.expand(), vec![toks("founding justice")]);
    }

    #[test]
    fn expand_orders_mandatory_only_first_and_dedups() {
        let s = SlotPattern::new(vec![
            Group::optional(toks("the")).unwrap(),
            Group::mandatory(toks("High Court")).unwrap(),
            Group::optional(toks("of Australia")).unwrap(),
        ]);
        let variants = s.expand();
        assert_eq!(variants.len(), 4);
        assert_eq!(variants[0], toks("High Court"));
        assert!(variants.contains(&toks("the High Court")));
        assert!(variants.contains(&toks("High Court of Australia")));
        assert!(variants.contains(&toks("the High Court of Australia")));
    }

    #[test]
    fn expand_dedups_identical_optional_groups() {
        // Two optional groups with identical text produce 4 raw variants but
        // only 3 distinct ones.
        let s = SlotPattern::new(vec![
            Group::optional(toks("very")).unwrap(),
            Group::mandatory(toks("tall")).unwrap(),
        ]);
        let twice = SlotPattern::new(vec![
            Group::optional(toks("x")).unwrap(),
            Group::optional(toks("x")).unwrap(),
            Group::mandatory(toks("y")).unwrap(),
        ]);
        assert_eq!(s.expand().len(), 2);
        assert_eq!(twice.expand().len(), 3);
    }

    #[test]
    fn empty_slot_expands_to_the_empty_sequence() {
        assert_eq!(SlotPattern::empty().expand(), vec![Vec::<Token>::new()]);
    }

    #[test]
    fn adjacent_mandatory_groups_merge() {
        let split = SlotPattern::new(vec![
            Group::mandatory(toks("High")).unwrap(),
            Group::mandatory(toks("Court")).unwrap(),
        ]);
        let whole = slot("High Court");
        assert_eq!(split, whole);
        assert_eq!(split.groups().len(), 1);
    }

    #[test]
    fn formulation_requires_mandatory_arg1_and_rel() {
        let all_optional = SlotPattern::new(vec![Group::optional(toks("a")).unwrap()]);
        assert_eq!(
            Formulation::new(all_optional.clone(), slot("is"), SlotPattern::empty()),
            Err(ModelError::NoMandatoryToken("arg1"))
        );
        assert_eq!(
            Formulation::new(slot("He"), SlotPattern::empty(), SlotPattern::empty()),
            Err(ModelError::EmptySlot("rel"))
        );
        assert_eq!(
            Formulation::new(slot("He"), slot("is"), all_optional),
            Err(ModelError::NoMandatoryToken("arg2"))
        );
        assert!(Formulation::new(slot("He"), slot("is"), SlotPattern::empty()).is_ok());
    }

    #[test]
    fn formulation_enforces_optional_group_cap() {
        let mut groups = vec![Group::mandatory(toks("x")).unwrap()];
        for i in 0..(MAX_OPTIONAL_GROUPS + 1) {
            groups.push(Group::optional(toks(&format!("o{i}"))).unwrap());
        }
        let wide = SlotPattern::new(groups);
        assert_eq!(
            Formulation::new(wide, slot("is"), SlotPattern::empty()),
            Err(ModelError::TooManyOptionalGroups(MAX_OPTIONAL_GROUPS + 1))
        );
    }

    #[test]
    fn formulation_expansion_is_cartesian_product() {
        let f = Formulation::new(
            slot("He"),
            SlotPattern::new(vec![
                Group::mandatory(toks("became")).unwrap(),
                Group::optional(toks("a")).unwrap(),
            ]),
            SlotPattern::new(vec![
                Group::optional(toks("founding")).unwrap(),
                Group::mandatory(toks("justice")).unwrap(),
            ]),
        )
        .unwrap();
        let triples = f.expand().unwrap();
        assert_eq!(triples.len(), 4);
        assert_eq!(
            triples[0],
            ConcreteTriple { arg1: toks("He"), rel: toks("became"), arg2: toks("justice") }
        );
        assert!(triples.contains(&ConcreteTriple {
            arg1: toks("He"),
            rel: toks("became a"),
            arg2: toks("founding justice"),
        }));
    }

    #[test]
    fn linearize_concatenates_slots() {
        let t = ConcreteTriple { arg1: toks("He"), rel: toks("became"), arg2: toks("a justice") };
        assert_eq!(t.linearize(), toks("He became a justice"));
    }

    #[test]
    fn normalize_punc_strips_lowercases_and_drops_emptied_tokens() {
        assert_eq!(normalize_punc(&toks("Marc 's , label .")), toks("marc s label"));
        assert_eq!(normalize_punc(&toks("`` My Way ''")), toks("my way"));
        assert_eq!(normalize_punc(&toks(", . ``")), Vec::<Token>::new());
        // Unicode punctuation outside ASCII is removed too.
        assert_eq!(normalize_punc(&toks("don\u{2019}t \u{2014}")), toks("dont"));
    }

    #[test]
    fn normalize_punc_is_idempotent_on_examples() {
        for text in ["Marc 's own label ,", "`` My Classical Way ''", "plain words"] {
            let once = normalize_punc(&toks(text));
            assert_eq!(normalize_punc(&once), once);
        }
    }

    #[test]
    fn cluster_rejects_duplicate_formulations() {
        let f = Formulation::new(slot("He"), slot("is"), slot("tall")).unwrap();
        let err = Cluster::new(1, vec![f.clone(), f]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateFormulation { cluster: 1, .. }));
    }

    #[test]
    fn sentence_requires_contiguous_cluster_indices() {
        let f = Formulation::new(slot("He"), slot("is"), slot("tall")).unwrap();
        let c2 = Cluster::new(2, vec![f]).unwrap();
        assert_eq!(
            SentenceGold::new("s1".into(), "He is tall .".into(), vec![c2]),
            Err(ModelError::NonContiguousClusterIndex { expected: 1, found: 2 })
        );
    }

    #[test]
    fn corpus_rejects_duplicate_sent_ids() {
        let s = SentenceGold::new("s1".into(), "Text .".into(), vec![]).unwrap();
        assert_eq!(
            GoldCorpus::new(vec![s.clone(), s]),
            Err(ModelError::DuplicateSentId("s1".into()))
        );
    }

    #[test]
    fn extraction_validates_slots_and_confidence() {
        assert!(matches!(
            Extraction::new("s1".into(), vec![], toks("is"), toks("x"), None),
            Err(ModelError::EmptySlot("arg1"))
        ));
        assert!(matches!(
            Extraction::new("s1".into(), toks("He"), toks("is"), vec![], Some(f64::NAN)),
            Err(ModelError::NonFiniteConfidence(_))
        ));
        let e = Extraction::new("s1".into(), toks("He"), toks("is"), vec![], Some(0.5)).unwrap();
        assert_eq!(e.token_count(), 2);
        assert_eq!(e.triple().to_string(), "He --> is -->");
    }

    #[test]
    fn formulation_display_round_trips_structure() {
        let f = Formulation::new(
            SlotPattern::new(vec![
                Group::optional(toks("`")).unwrap(),
                Group::optional(toks("`")).unwrap(),
                Group::mandatory(toks("My Classical Way")).unwrap(),
                Group::optional(toks("''")).unwrap(),
            ]),
            slot("was"),
            slot("released"),
        )
        .unwrap();
        assert_eq!(f.to_string(), "[`] [`] My Classical Way [''] --> was --> released");
    }
}
