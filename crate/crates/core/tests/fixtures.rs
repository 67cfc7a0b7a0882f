//! End-to-end checks on the bundled example corpus: every match verdict,
//! lint finding, and round-trip below is pinned to the documented behaviour
//! of the annotation format and matcher stages.

use oie_eval::formats::{
    parse_extractions, parse_gold, parse_match_annotations, parse_score_table, serialize_gold,
    serialize_match_annotations, serialize_score_table,
};
use oie_eval::lint::{
    diff_annotation_sets, find_double_annotations, find_double_meanings, lint_corpus, Direction,
    FindingKind, Severity,
};
use oie_eval::matcher::{
    collect_rewriting_pairs, generate_alternatives, match_corpus, match_extraction, MatchMethod,
    MatcherConfig, PairSource,
};
use oie_eval::model::{parse_tokens, Extraction, GoldCorpus, SentenceGold, Token};
use oie_eval::scorer::{evaluate_matcher, pearson, score_corpus};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {path}: {e}"))
}

fn gold(name: &str) -> GoldCorpus {
    parse_gold(&fixture(name)).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

fn toks(text: &str) -> Vec<Token> {
    parse_tokens(text).unwrap()
}

fn extraction(sent_id: &str, arg1: &str, rel: &str, arg2: &str) -> Extraction {
    Extraction::new(sent_id.into(), toks(arg1), toks(rel), toks(arg2), None).unwrap()
}

fn config(spelling: &str) -> MatcherConfig {
    spelling.parse().unwrap()
}

fn decide(
    sentence: &SentenceGold,
    e: &Extraction,
    spelling: &str,
) -> (Option<u32>, Option<MatchMethod>, bool) {
    let decision = match_extraction(e, sentence, config(spelling)).unwrap();
    (decision.cluster(), decision.method(), decision.punc_used())
}

const ALL_CONFIGS: [&str; 5] = ["em", "em+af", "em+lod", "em+af+lod", "em+af+lod+punc"];

#[test]
fn served_as_extraction_never_matches() {
    let gold = gold("justice.gold");
    let sentence = &gold.sentences()[0];
    let e = extraction("justice_1", "He", "served as first Prime Minister of", "Australia");
    for spelling in ALL_CONFIGS {
        assert_eq!(decide(sentence, &e, spelling), (None, None, false), "config {spelling}");
    }
}

#[test]
fn became_justice_extraction_needs_level_of_detail() {
    let gold = gold("justice.gold");
    let sentence = &gold.sentences()[0];
    let e = extraction("justice_1", "He", "became", "founding justice of High Court of Australia");
    assert_eq!(decide(sentence, &e, "em"), (None, None, false));
    assert_eq!(decide(sentence, &e, "em+af"), (None, None, false));
    assert_eq!(decide(sentence, &e, "em+lod"), (Some(3), Some(MatchMethod::Lod), false));
    assert_eq!(decide(sentence, &e, "em+af+lod"), (Some(3), Some(MatchMethod::Lod), false));
    assert_eq!(decide(sentence, &e, "em+af+lod+punc"), (Some(3), Some(MatchMethod::Lod), false));
}

#[test]
fn gonzales_rewriting_pairs_are_harvested_in_order() {
    let gold = gold("gonzales.gold");
    let pairs = collect_rewriting_pairs(&gold.sentences()[0]);
    let summary: Vec<(String, String, PairSource, u32)> = pairs
        .iter()
        .map(|p| {
            (
                oie_eval::model::join_tokens(&p.a),
                oie_eval::model::join_tokens(&p.b),
                p.source,
                p.source_cluster,
            )
        })
        .collect();
    assert_eq!(
        summary,
        vec![
            ("Paris".into(), "Cologne".into(), PairSource::And, 1),
            ("Canadian".into(), "musician".into(), PairSource::Is, 3),
            ("Canadian".into(), "musician".into(), PairSource::And, 3),
            ("Chilly Gonzales".into(), "Canadian".into(), PairSource::Is, 3),
            ("Chilly Gonzales".into(), "musician".into(), PairSource::Is, 4),
        ]
    );
}

#[test]
fn copular_extraction_matches_through_alternatives() {
    let gold = gold("gonzales.gold");
    let sentence = &gold.sentences()[0];
    let pairs = collect_rewriting_pairs(sentence);
    let e = extraction("gonzales_1", "Chilly Gonzales", "is a", "Canadian musician");
    let alternatives: Vec<String> =
        generate_alternatives(&e, &pairs).iter().map(|a| a.triple().to_string()).collect();
    assert_eq!(
        alternatives,
        vec!["Chilly Gonzales --> is a --> Canadian", "Chilly Gonzales --> is a --> musician",]
    );
    assert_eq!(decide(sentence, &e, "em"), (None, None, false));
    assert_eq!(decide(sentence, &e, "em+af"), (Some(4), Some(MatchMethod::Af), false));
}

#[test]
fn conjoined_extraction_matches_through_alternatives() {
    let gold = gold("gonzales.gold");
    let sentence = &gold.sentences()[0];
    let pairs = collect_rewriting_pairs(sentence);
    let e = extraction("gonzales_1", "Chilly Gonzales", "lived in", "Paris and Cologne");
    let alternatives: Vec<String> =
        generate_alternatives(&e, &pairs).iter().map(|a| a.triple().to_string()).collect();
    assert_eq!(
        alternatives,
        vec!["Chilly Gonzales --> lived in --> Paris", "Chilly Gonzales --> lived in --> Cologne",]
    );
    assert_eq!(decide(sentence, &e, "em"), (None, None, false));
    assert_eq!(decide(sentence, &e, "em+af"), (Some(1), Some(MatchMethod::Af), false));
}

#[test]
fn two_cluster_combination_matches_but_three_cluster_does_not() {
    let gold = gold("broadcast.gold");
    let sentence = &gold.sentences()[0];
    let two = extraction("broadcast_1", "Alex", "broadcasts", "Music on a website");
    let three = extraction("broadcast_1", "Alex", "broadcasts", "a web series Music on a website");
    assert_eq!(decide(sentence, &two, "em"), (None, None, false));
    assert_eq!(decide(sentence, &two, "em+af"), (None, None, false));
    assert_eq!(decide(sentence, &two, "em+af+lod"), (Some(3), Some(MatchMethod::Lod), false));
    for spelling in ALL_CONFIGS {
        assert_eq!(decide(sentence, &three, spelling), (None, None, false), "config {spelling}");
    }
}

#[test]
fn quoted_title_matches_only_after_punctuation_normalization() {
    let gold = gold("release.gold");
    let sentence = &gold.sentences()[0];

    let plain = extraction("release_1", "My Classical Way", "was", "released");
    assert_eq!(decide(sentence, &plain, "em"), (Some(1), Some(MatchMethod::Em), false));

    let quoted =
        extraction("release_1", "`` My Classical Way ''", "was released on", "21 September 2010");
    assert_eq!(decide(sentence, &quoted, "em"), (None, None, false));
    assert_eq!(decide(sentence, &quoted, "em+af+lod"), (None, None, false));
    assert_eq!(decide(sentence, &quoted, "em+punc"), (Some(2), Some(MatchMethod::Em), true));
    assert_eq!(decide(sentence, &quoted, "em+af+lod+punc"), (Some(2), Some(MatchMethod::Em), true));
}

#[test]
fn release_date_and_label_extraction_rewrites_to_the_date_cluster() {
    let gold = gold("release.gold");
    let sentence = &gold.sentences()[0];
    let e = extraction(
        "release_1",
        "My Classical Way",
        "was released on",
        "21 September 2010 and Frazzy Frog Music",
    );
    assert_eq!(decide(sentence, &e, "em"), (None, None, false));
    assert_eq!(decide(sentence, &e, "em+af"), (Some(2), Some(MatchMethod::Af), false));
}

#[test]
fn release_corpus_shape_matches_the_annotation_example() {
    let gold = gold("release.gold");
    let sentence = &gold.sentences()[0];
    assert_eq!(sentence.clusters().len(), 6);
    let formulation_counts: Vec<usize> =
        sentence.clusters().iter().map(|c| c.formulations().len()).collect();
    assert_eq!(formulation_counts, vec![1, 1, 1, 4, 2, 5]);
}

#[test]
fn mini_corpus_full_matcher_beats_exact_matcher() {
    let gold = gold("mini.gold");
    let extractions = parse_extractions("demo", &fixture("mini.extractions")).unwrap();

    let em = match_corpus(&extractions, &gold, config("em"));
    let full = match_corpus(&extractions, &gold, config("em+af+lod+punc"));
    let em_matched = em.decisions.iter().filter(|d| d.is_match()).count();
    let full_matched = full.decisions.iter().filter(|d| d.is_match()).count();
    assert_eq!(em_matched, 1);
    assert_eq!(full_matched, 7);

    let report = score_corpus(&full.decisions, &gold, &extractions).unwrap();
    assert_eq!(report.matched_extractions, 7);
    assert_eq!(report.total_extractions, 9);
    assert_eq!(report.matched_clusters, 6);
    assert_eq!(report.total_clusters, 16);
    assert!((report.precision - 7.0 / 9.0).abs() < 1e-15);
    assert!((report.recall - 6.0 / 16.0).abs() < 1e-15);
}

#[test]
fn match_annotations_agree_with_the_full_matcher() {
    let gold = gold("justice.gold");
    let annotations = parse_match_annotations(&fixture("justice.matches"), Some(&gold)).unwrap();
    assert_eq!(annotations.len(), 2);
    assert_eq!(annotations[0].gold_cluster, 0);
    assert_eq!(annotations[1].gold_cluster, 3);

    let set = oie_eval::model::ExtractionSet {
        system_name: "annotated".into(),
        extractions: annotations.iter().map(|a| a.extraction.clone()).collect(),
    };

    let full = match_corpus(&set, &gold, config("em+af+lod+punc"));
    let report = evaluate_matcher(&full.decisions, &annotations).unwrap();
    assert_eq!(report.correct_match, 1);
    assert_eq!(report.correct_none, 1);
    assert_eq!((report.precision, report.recall, report.f1), (1.0, 1.0, 1.0));

    let em = match_corpus(&set, &gold, config("em"));
    let report = evaluate_matcher(&em.decisions, &annotations).unwrap();
    assert_eq!(report.missed_match, 1);
    assert_eq!(report.recall, 0.0);
}

#[test]
fn overlapping_justice_clusters_fire_the_loose_double_annotation_proxy() {
    let gold = gold("double_annotation.gold");
    let findings = find_double_annotations(&gold.sentences()[0]);
    assert_eq!(findings.len(), 1);
    let finding = &findings[0];
    assert_eq!(finding.kind, FindingKind::DoubleAnnotation);
    assert_eq!(finding.severity, Some(Severity::Loose));
    assert_eq!(finding.clusters, vec![1, 2]);
    assert!(finding
        .witnesses
        .contains(&"he became a founding justice of the high court of australia".to_string()));
    assert!(find_double_meanings(&gold.sentences()[0]).is_empty());
}

#[test]
fn fraud_cluster_fires_one_double_meaning_with_five_witnesses() {
    let gold = gold("fraud.gold");
    let findings = lint_corpus(&gold);
    assert_eq!(findings.len(), 1);
    let finding = &findings[0];
    assert_eq!(finding.kind, FindingKind::DoubleMeaning);
    assert_eq!(finding.clusters, vec![1]);
    assert_eq!(finding.witnesses.len(), 5);
    assert_eq!(
        finding.witnesses[0],
        "It --> deals --> with cases of fraud in [relation to] money laundering"
    );
}

#[test]
fn dangling_feet_cluster_is_missing_from_the_second_set() {
    let first = gold("graner_first.gold");
    let second = gold("graner_second.gold");
    let diff = diff_annotation_sets(&first, &second).unwrap();
    assert_eq!(diff.findings.len(), 1);
    let finding = &diff.findings[0];
    assert_eq!(finding.kind, FindingKind::CrossSetMissing);
    assert_eq!(finding.clusters, vec![2]);
    assert_eq!(finding.direction, Some(Direction::MissingFromSecond));
    assert_eq!(
        finding.witnesses,
        vec!["feet --> dangling off [the] floor for --> nearly five hours"]
    );
    assert!(diff.only_in_first.is_empty());
    assert!(diff.only_in_second.is_empty());

    let self_diff = diff_annotation_sets(&first, &first).unwrap();
    assert!(self_diff.findings.is_empty());
}

#[test]
fn gold_fixtures_round_trip_through_the_serializer() {
    for name in [
        "release.gold",
        "justice.gold",
        "broadcast.gold",
        "gonzales.gold",
        "double_annotation.gold",
        "fraud.gold",
        "graner_first.gold",
        "graner_second.gold",
        "mini.gold",
    ] {
        let first = parse_gold(&fixture(name)).unwrap();
        let canonical = serialize_gold(&first);
        let second = parse_gold(&canonical).unwrap();
        assert_eq!(canonical, serialize_gold(&second), "{name} is not a serializer fixpoint");
    }
}

#[test]
fn match_annotation_fixture_round_trips() {
    let gold = gold("justice.gold");
    let text = fixture("justice.matches");
    let annotations = parse_match_annotations(&text, Some(&gold)).unwrap();
    let canonical = serialize_match_annotations(&annotations);
    let reparsed = parse_match_annotations(&canonical, Some(&gold)).unwrap();
    assert_eq!(annotations, reparsed);
    assert_eq!(canonical, serialize_match_annotations(&reparsed));
}

#[test]
fn downstream_scores_correlate_as_frozen() {
    let table = parse_score_table(&fixture("downstream.scores")).unwrap();
    assert_eq!(table.row_labels.len(), 6);
    let abqa = table.column("abqa").unwrap();
    let cqa = table.column("cqa").unwrap();
    let kbp = table.column("kbp").unwrap();
    // Frozen with the raw-sums textbook formula, independently of the
    // means-and-covariance route used by `pearson`.
    assert!((pearson(&abqa, &cqa).unwrap() - 0.6637465183030729).abs() < 1e-12);
    assert!((pearson(&abqa, &kbp).unwrap() - 0.9548673292655656).abs() < 1e-12);
    assert!((pearson(&cqa, &kbp).unwrap() - 0.6545932225238484).abs() < 1e-12);

    let canonical = serialize_score_table(&table);
    let reparsed = parse_score_table(&canonical).unwrap();
    assert_eq!(canonical, serialize_score_table(&reparsed));
}
