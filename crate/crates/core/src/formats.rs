//! On-disk formats: the gold annotation file, system extraction TSV, match
//! annotation TSV, and score tables. Parsers report 1-based line numbers and
//! never panic on malformed input; serializers emit the canonical form, so
//! parse–serialize round-trips are exact and serialization is a fixpoint.
//!
//! Gold annotation file, UTF-8 with LF line ends (CRLF tolerated on read):
//!
//! ```text
//! sent_id:justice_1<TAB>He served as the first Prime Minister ...
//! 1 --> He --> served as --> [the] [a] Prime Minister
//! 2 --> He --> became --> [a] founding justice
//! ```
//!
//! A sentence block is a `sent_id:<id><TAB><text>` header followed by one
//! line per formulation (`<cluster> --> <arg1> --> <rel> --> <arg2>`); the
//! cluster index repeats on consecutive lines to add formulations to the same
//! cluster and indices run contiguously from 1. Optional word groups are
//! bracketed (`[a]`, `[of Australia]`). A blank line ends the block; lines
//! whose first character is `#` are comments.

use std::fmt;

use thiserror::Error;

use crate::model::{
    join_tokens, parse_tokens, Cluster, Extraction, ExtractionSet, Formulation, GoldCorpus, Group,
    MatchAnnotation, ModelError, SentenceGold, SlotPattern, Token,
};

/// A malformed-input diagnostic pointing at the offending line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }

    fn model(line: usize, err: ModelError) -> Self {
        ParseError { line, message: err.to_string() }
    }
}

/// Iterates lines with 1-based numbers, stripping a trailing `\r`.
fn numbered_lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input.lines().enumerate().map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
}

/// Parses one slot pattern: whitespace-separated tokens with optional groups
/// in square brackets. Returns a message without line context; callers attach
/// the line number.
pub fn parse_slot(text: &str) -> Result<SlotPattern, String> {
    let mut groups: Vec<Group> = Vec::new();
    let mut group_tokens: Vec<Token> = Vec::new();
    let mut current = String::new();
    let mut in_group = false;

    fn flush(
        current: &mut String,
        in_group: bool,
        group_tokens: &mut Vec<Token>,
        groups: &mut Vec<Group>,
    ) -> Result<(), String> {
        if current.is_empty() {
            return Ok(());
        }
        let token = Token::new(std::mem::take(current)).map_err(|e| e.to_string())?;
        if in_group {
            group_tokens.push(token);
        } else {
            groups.push(Group::mandatory(vec![token]).map_err(|e| e.to_string())?);
        }
        Ok(())
    }

    for c in text.chars() {
        match c {
            '[' => {
                if in_group {
                    return Err("nested '[' in slot".into());
                }
                flush(&mut current, in_group, &mut group_tokens, &mut groups)?;
                in_group = true;
            }
            ']' => {
                if !in_group {
                    return Err("unbalanced ']' in slot".into());
                }
                flush(&mut current, in_group, &mut group_tokens, &mut groups)?;
                if group_tokens.is_empty() {
                    return Err("empty optional group".into());
                }
                groups.push(
                    Group::optional(std::mem::take(&mut group_tokens))
                        .map_err(|e| e.to_string())?,
                );
                in_group = false;
            }
            c if c.is_whitespace() => {
                flush(&mut current, in_group, &mut group_tokens, &mut groups)?;
            }
            c => current.push(c),
        }
    }
    if in_group {
        return Err("unclosed '[' in slot".into());
    }
    flush(&mut current, in_group, &mut group_tokens, &mut groups)?;
    Ok(SlotPattern::new(groups))
}

/// Splits `a1 --> rel --> a2` into the three slot texts. The final slot may
/// be absent tokens (line ending in `-->`) for an empty arg2.
fn split_slots(text: &str) -> Result<Vec<&str>, String> {
    let (body, trailing_empty) = match text.strip_suffix(" -->") {
        Some(rest) if !rest.ends_with(" -->") => (rest, true),
        _ => (text, false),
    };
    let mut parts: Vec<&str> = body.split(" --> ").collect();
    if trailing_empty {
        parts.push("");
    }
    Ok(parts)
}

/// Parses `arg1 --> rel --> arg2` as one formulation.
pub fn parse_formulation(text: &str) -> Result<Formulation, String> {
    let parts = split_slots(text)?;
    if parts.len() != 3 {
        return Err(format!("expected 3 slots separated by \" --> \", found {}", parts.len()));
    }
    let arg1 = parse_slot(parts[0])?;
    let rel = parse_slot(parts[1])?;
    let arg2 = parse_slot(parts[2])?;
    Formulation::new(arg1, rel, arg2).map_err(|e| e.to_string())
}

struct PendingSentence {
    sent_id: String,
    text: String,
    header_line: usize,
    clusters: Vec<(u32, Vec<Formulation>)>,
}

/// Parses a gold annotation file.
pub fn parse_gold(input: &str) -> Result<GoldCorpus, ParseError> {
    let mut sentences: Vec<SentenceGold> = Vec::new();
    let mut seen_ids: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut pending: Option<PendingSentence> = None;

    fn finish(
        pending: &mut Option<PendingSentence>,
        sentences: &mut Vec<SentenceGold>,
        seen_ids: &mut std::collections::HashSet<String>,
    ) -> Result<(), ParseError> {
        let Some(p) = pending.take() else { return Ok(()) };
        if !seen_ids.insert(p.sent_id.clone()) {
            return Err(ParseError::at(
                p.header_line,
                format!("duplicate sent_id {:?}", p.sent_id),
            ));
        }
        let mut clusters = Vec::with_capacity(p.clusters.len());
        for (index, formulations) in p.clusters {
            clusters.push(
                Cluster::new(index, formulations)
                    .map_err(|e| ParseError::model(p.header_line, e))?,
            );
        }
        let sentence = SentenceGold::new(p.sent_id, p.text, clusters)
            .map_err(|e| ParseError::model(p.header_line, e))?;
        sentences.push(sentence);
        Ok(())
    }

    for (line_no, line) in numbered_lines(input) {
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            finish(&mut pending, &mut sentences, &mut seen_ids)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix("sent_id:") {
            if pending.is_some() {
                return Err(ParseError::at(
                    line_no,
                    "sentence header without a blank line after the previous sentence",
                ));
            }
            let Some((sent_id, text)) = rest.split_once('\t') else {
                return Err(ParseError::at(
                    line_no,
                    "sentence header needs a tab between sent_id and text",
                ));
            };
            pending = Some(PendingSentence {
                sent_id: sent_id.to_string(),
                text: text.to_string(),
                header_line: line_no,
                clusters: Vec::new(),
            });
            continue;
        }
        let Some(p) = pending.as_mut() else {
            return Err(ParseError::at(line_no, "cluster line outside a sentence block"));
        };
        let parts = split_slots(line).map_err(|m| ParseError::at(line_no, m))?;
        if parts.len() != 4 {
            return Err(ParseError::at(
                line_no,
                format!(
                    "expected cluster index and 3 slots separated by \" --> \", found {} fields",
                    parts.len()
                ),
            ));
        }
        let index: u32 = parts[0].trim().parse().map_err(|_| {
            ParseError::at(
                line_no,
                format!("cluster index {:?} is not a positive integer", parts[0]),
            )
        })?;
        if index == 0 {
            return Err(ParseError::at(line_no, "cluster index must be positive (1-based)"));
        }
        let arg1 = parse_slot(parts[1]).map_err(|m| ParseError::at(line_no, m))?;
        let rel = parse_slot(parts[2]).map_err(|m| ParseError::at(line_no, m))?;
        let arg2 = parse_slot(parts[3]).map_err(|m| ParseError::at(line_no, m))?;
        let formulation =
            Formulation::new(arg1, rel, arg2).map_err(|e| ParseError::model(line_no, e))?;
        let current = p.clusters.len() as u32;
        if index == current && current > 0 {
            p.clusters.last_mut().unwrap().1.push(formulation);
        } else if index == current + 1 {
            p.clusters.push((index, vec![formulation]));
        } else {
            let expected = if current == 0 {
                "1".to_string()
            } else {
                format!("{current} or {}", current + 1)
            };
            return Err(ParseError::at(
                line_no,
                format!("cluster index {index} is not contiguous (expected {expected})"),
            ));
        }
    }
    finish(&mut pending, &mut sentences, &mut seen_ids)?;
    GoldCorpus::new(sentences).map_err(|e| ParseError::model(0, e))
}

/// Renders a gold corpus in canonical form: LF line ends, one line per
/// formulation, blank line between sentence blocks, trailing newline.
pub fn serialize_gold(corpus: &GoldCorpus) -> String {
    let mut out = String::new();
    for (i, sentence) in corpus.sentences().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("sent_id:");
        out.push_str(sentence.sent_id());
        out.push('\t');
        out.push_str(sentence.text());
        out.push('\n');
        for cluster in sentence.clusters() {
            for formulation in cluster.formulations() {
                out.push_str(&format!("{} --> {formulation}\n", cluster.index()));
            }
        }
    }
    out
}

/// Parses a system extraction TSV: `sent_id TAB arg1 TAB rel TAB arg2` with
/// an optional trailing confidence column. Blank lines are skipped.
pub fn parse_extractions(system_name: &str, input: &str) -> Result<ExtractionSet, ParseError> {
    let mut extractions = Vec::new();
    for (line_no, line) in numbered_lines(input) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 && fields.len() != 5 {
            return Err(ParseError::at(
                line_no,
                format!("expected 4 or 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let confidence = match fields.get(4) {
            None => None,
            Some(text) => Some(text.trim().parse::<f64>().map_err(|_| {
                ParseError::at(line_no, format!("confidence {text:?} is not a number"))
            })?),
        };
        let extraction = build_extraction(fields[0], fields[1], fields[2], fields[3], confidence)
            .map_err(|e| ParseError::model(line_no, e))?;
        extractions.push(extraction);
    }
    Ok(ExtractionSet { system_name: system_name.to_string(), extractions })
}

fn build_extraction(
    sent_id: &str,
    arg1: &str,
    rel: &str,
    arg2: &str,
    confidence: Option<f64>,
) -> Result<Extraction, ModelError> {
    Extraction::new(
        sent_id.to_string(),
        parse_tokens(arg1)?,
        parse_tokens(rel)?,
        parse_tokens(arg2)?,
        confidence,
    )
}

fn extraction_fields(e: &Extraction) -> String {
    let mut out = format!(
        "{}\t{}\t{}\t{}",
        e.sent_id(),
        join_tokens(e.arg1()),
        join_tokens(e.rel()),
        join_tokens(e.arg2())
    );
    if let Some(c) = e.confidence() {
        out.push('\t');
        out.push_str(&c.to_string());
    }
    out
}

/// Renders an extraction set in canonical TSV form.
pub fn serialize_extractions(set: &ExtractionSet) -> String {
    let mut out = String::new();
    for e in &set.extractions {
        out.push_str(&extraction_fields(e));
        out.push('\n');
    }
    out
}

/// Parses a match annotation TSV: the extraction columns plus a trailing
/// integer cluster label (0 meaning "no cluster"). With a gold corpus
/// supplied, sent_ids and label bounds are cross-checked.
pub fn parse_match_annotations(
    input: &str,
    gold: Option<&GoldCorpus>,
) -> Result<Vec<MatchAnnotation>, ParseError> {
    let mut annotations = Vec::new();
    for (line_no, line) in numbered_lines(input) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(ParseError::at(
                line_no,
                format!("expected 5 or 6 tab-separated fields, found {}", fields.len()),
            ));
        }
        let label_text = *fields.last().unwrap();
        let gold_cluster: u32 = label_text.trim().parse().map_err(|_| {
            ParseError::at(
                line_no,
                format!("cluster label {label_text:?} is not a non-negative integer"),
            )
        })?;
        let confidence = if fields.len() == 6 {
            Some(fields[4].trim().parse::<f64>().map_err(|_| {
                ParseError::at(line_no, format!("confidence {:?} is not a number", fields[4]))
            })?)
        } else {
            None
        };
        let extraction = build_extraction(fields[0], fields[1], fields[2], fields[3], confidence)
            .map_err(|e| ParseError::model(line_no, e))?;
        if let Some(gold) = gold {
            let Some(sentence) = gold.sentence(extraction.sent_id()) else {
                return Err(ParseError::at(
                    line_no,
                    format!("sent_id {:?} is not in the gold corpus", extraction.sent_id()),
                ));
            };
            if gold_cluster as usize > sentence.clusters().len() {
                return Err(ParseError::at(
                    line_no,
                    format!(
                        "cluster label {gold_cluster} out of range (sentence {:?} has {} clusters)",
                        extraction.sent_id(),
                        sentence.clusters().len()
                    ),
                ));
            }
        }
        annotations.push(MatchAnnotation { extraction, gold_cluster });
    }
    Ok(annotations)
}

/// Renders match annotations in canonical TSV form.
pub fn serialize_match_annotations(annotations: &[MatchAnnotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        out.push_str(&extraction_fields(&a.extraction));
        out.push('\t');
        out.push_str(&a.gold_cluster.to_string());
        out.push('\n');
    }
    out
}

/// A rectangular table of named numeric columns, e.g. one row per extraction
/// system and one column per benchmark score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    /// Header label of the row-name column.
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major values; every row has `col_labels.len()` entries.
    pub values: Vec<Vec<f64>>,
}

impl ScoreTable {
    /// The values of a named column, top to bottom.
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let idx = self.col_labels.iter().position(|l| l == label)?;
        Some(self.values.iter().map(|row| row[idx]).collect())
    }
}

/// Parses a score table: a TSV whose first row is the header (corner label
/// then column labels) and whose remaining rows are a label followed by one
/// finite number per column.
pub fn parse_score_table(input: &str) -> Result<ScoreTable, ParseError> {
    let mut lines = numbered_lines(input).filter(|(_, l)| !l.trim().is_empty());
    let Some((header_line, header)) = lines.next() else {
        return Err(ParseError::at(1, "empty score table"));
    };
    let mut header_fields = header.split('\t');
    let corner = header_fields.next().unwrap_or("").to_string();
    let col_labels: Vec<String> = header_fields.map(str::to_string).collect();
    if col_labels.is_empty() {
        return Err(ParseError::at(header_line, "header needs at least one value column"));
    }
    for (i, label) in col_labels.iter().enumerate() {
        if col_labels[..i].contains(label) {
            return Err(ParseError::at(header_line, format!("duplicate column label {label:?}")));
        }
    }

    let mut row_labels = Vec::new();
    let mut values = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != col_labels.len() + 1 {
            return Err(ParseError::at(
                line_no,
                format!(
                    "row has {} fields, expected {} (label plus one per column)",
                    fields.len(),
                    col_labels.len() + 1
                ),
            ));
        }
        let mut row = Vec::with_capacity(col_labels.len());
        for cell in &fields[1..] {
            let value: f64 = cell
                .trim()
                .parse()
                .map_err(|_| ParseError::at(line_no, format!("cell {cell:?} is not a number")))?;
            if !value.is_finite() {
                return Err(ParseError::at(line_no, format!("cell {cell:?} is not finite")));
            }
            row.push(value);
        }
        row_labels.push(fields[0].to_string());
        values.push(row);
    }
    Ok(ScoreTable { corner, row_labels, col_labels, values })
}

/// Renders a score table in canonical TSV form.
pub fn serialize_score_table(table: &ScoreTable) -> String {
    let mut out = String::new();
    out.push_str(&table.corner);
    for label in &table.col_labels {
        out.push('\t');
        out.push_str(label);
    }
    out.push('\n');
    for (label, row) in table.row_labels.iter().zip(&table.values) {
        out.push_str(label);
        for value in row {
            out.push('\t');
            out.push_str(&value.to_string());
        }
        out.push('\n');
    }
    out
}

impl fmt::Display for ScoreTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_score_table(self))
    }
}
