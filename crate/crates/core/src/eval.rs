//! Tagging accuracy and parse coverage over a held-out annotated corpus,
//! reported per sentence-pattern group in the published table layout.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{head_of_chunk, AnnotatedSentence, NULL_TAG};
use crate::grammar::{Grammar, TagMap};
use crate::model::Model;
use crate::num::Prob;
use crate::relations::recognize;
use crate::rng::SplitMix64;
use crate::tagger::{tag, TagError, TagOptions};

/// Evaluation options; decoding follows the same knobs as the tagger.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub tag: TagOptions,
}

/// Scores for one evaluation group.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<F> {
    pub group_label: String,
    /// Correct non-Null tags over scored non-Null tags (1 when nothing is
    /// scored).
    pub tag_accuracy: F,
    /// Sentences whose non-Null tags are all correct.
    pub sentence_exact_match: F,
    /// Sentences whose decoded tag sequence the grammar recognizes.
    pub parse_coverage_predicted: F,
    /// Sentences whose gold tag sequence the grammar recognizes.
    pub parse_coverage_gold: F,
    /// (gold, predicted) counts over scored tags.
    pub per_tag_confusion: BTreeMap<(String, String), u64>,
    pub scored_tags: u64,
    pub sentences: u64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty gold set")]
    EmptyGold,
    #[error("gold sentence {index} is not fully annotated")]
    UnannotatedGold { index: usize },
    #[error("split ratio must be strictly between 0 and 1")]
    BadRatio,
    #[error("corpus of {len} sentence(s) is too small to split")]
    TooSmall { len: usize },
    #[error(transparent)]
    Tag(#[from] TagError),
}

/// Strip each gold sentence, re-tag it, and score chunk by chunk (Null chunks
/// excluded). Parse coverage is computed on both the gold and the predicted
/// tag sequences.
pub fn evaluate<F: Prob>(
    model: &Model<F>,
    grammar: &Grammar,
    map: &TagMap,
    gold: &[AnnotatedSentence],
    group_label: impl Into<String>,
    options: EvalOptions,
) -> Result<EvalReport<F>, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut correct = 0u64;
    let mut scored = 0u64;
    let mut exact = 0u64;
    let mut cover_pred = 0u64;
    let mut cover_gold = 0u64;
    let mut confusion: BTreeMap<(String, String), u64> = BTreeMap::new();

    for (index, sentence) in gold.iter().enumerate() {
        if !sentence.is_annotated() {
            return Err(EvalError::UnannotatedGold { index });
        }
        let stripped = sentence.stripped();
        let decoded = tag(model, &stripped, options.tag)?;
        let mut all_correct = true;
        for (chunk, decision) in sentence.chunks.iter().zip(&decoded.decisions) {
            let gold_tag = chunk.function_tag.as_deref().expect("checked above");
            if gold_tag == NULL_TAG {
                continue;
            }
            scored += 1;
            if decision.tag == gold_tag {
                correct += 1;
            } else {
                all_correct = false;
            }
            *confusion
                .entry((gold_tag.to_string(), decision.tag.clone()))
                .or_default() += 1;
        }
        if all_correct {
            exact += 1;
        }
        let gold_tags = sentence.gold_tags().expect("checked above");
        if recognize(grammar, map, &gold_tags) {
            cover_gold += 1;
        }
        if recognize(grammar, map, &decoded.tags()) {
            cover_pred += 1;
        }
    }

    let ratio = |num: u64, den: u64| {
        if den == 0 {
            F::one()
        } else {
            F::from_u64(num).unwrap() / F::from_u64(den).unwrap()
        }
    };
    Ok(EvalReport {
        group_label: group_label.into(),
        tag_accuracy: ratio(correct, scored),
        sentence_exact_match: ratio(exact, gold.len() as u64),
        parse_coverage_predicted: ratio(cover_pred, gold.len() as u64),
        parse_coverage_gold: ratio(cover_gold, gold.len() as u64),
        per_tag_confusion: confusion,
        scored_tags: scored,
        sentences: gold.len() as u64,
    })
}

/// The head-feature sequence that identifies a sentence's pattern.
pub fn pattern_of(sentence: &AnnotatedSentence) -> Vec<String> {
    sentence
        .chunks
        .iter()
        .map(|c| head_of_chunk(c).feature())
        .collect()
}

/// Partition gold sentences by whether their pattern occurs in the training
/// corpus: (seen patterns, novel patterns).
pub fn group_by_pattern(
    train: &[AnnotatedSentence],
    gold: &[AnnotatedSentence],
) -> (Vec<AnnotatedSentence>, Vec<AnnotatedSentence>) {
    let seen: HashSet<Vec<String>> = train.iter().map(pattern_of).collect();
    let mut in_corpus = Vec::new();
    let mut novel = Vec::new();
    for s in gold {
        if seen.contains(&pattern_of(s)) {
            in_corpus.push(s.clone());
        } else {
            novel.push(s.clone());
        }
    }
    (in_corpus, novel)
}

/// The two-group evaluation: sentence patterns that occur in the training
/// corpus against those that do not. Empty groups are skipped.
pub fn evaluate_groups<F: Prob>(
    model: &Model<F>,
    grammar: &Grammar,
    map: &TagMap,
    train: &[AnnotatedSentence],
    gold: &[AnnotatedSentence],
    options: EvalOptions,
) -> Result<Vec<EvalReport<F>>, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let (in_corpus, novel) = group_by_pattern(train, gold);
    let mut reports = Vec::new();
    if !in_corpus.is_empty() {
        reports.push(evaluate(
            model,
            grammar,
            map,
            &in_corpus,
            "sentence patterns in the corpus",
            options,
        )?);
    }
    if !novel.is_empty() {
        reports.push(evaluate(
            model,
            grammar,
            map,
            &novel,
            "sentence patterns that are not in the corpus",
            options,
        )?);
    }
    Ok(reports)
}

/// Deterministic seeded shuffle followed by a ratio split; the two parts are
/// disjoint and exhaust the corpus.
pub fn split_corpus(
    corpus: &[AnnotatedSentence],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<AnnotatedSentence>, Vec<AnnotatedSentence>), EvalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::BadRatio);
    }
    if corpus.len() < 2 {
        return Err(EvalError::TooSmall { len: corpus.len() });
    }
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    SplitMix64::new(seed).shuffle(&mut indices);
    let take = ((ratio * corpus.len() as f64).round() as usize).clamp(1, corpus.len() - 1);
    let train = indices[..take].iter().map(|&i| corpus[i].clone()).collect();
    let test = indices[take..].iter().map(|&i| corpus[i].clone()).collect();
    Ok((train, test))
}

/// Percentage with one decimal, rounding half up: 0.974 renders as `97.4%`.
pub fn format_percent<F: Prob>(ratio: F) -> String {
    let tenths = (ratio.to_f64().expect("finite ratio") * 1000.0).round() as i64;
    format!("{}.{}%", tenths / 10, (tenths % 10).abs())
}

/// Aligned plain-text table in the published layout.
pub fn render_report<F: Prob>(reports: &[EvalReport<F>]) -> String {
    let label_width = reports
        .iter()
        .map(|r| r.group_label.chars().count())
        .chain(["Sentence Patterns".chars().count()])
        .max()
        .unwrap_or(20)
        .max(20);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:label_width$}  {:>9}  {:>9}  {:>12}  {:>12}  {:>6}",
        "Sentence Patterns", "Accuracy", "Exact", "Parse(pred)", "Parse(gold)", "Tags"
    );
    let _ = writeln!(
        out,
        "{}",
        "-".repeat(label_width + 2 + 9 + 2 + 9 + 2 + 12 + 2 + 12 + 2 + 6)
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:label_width$}  {:>9}  {:>9}  {:>12}  {:>12}  {:>6}",
            r.group_label,
            format_percent(r.tag_accuracy),
            format_percent(r.sentence_exact_match),
            format_percent(r.parse_coverage_predicted),
            format_percent(r.parse_coverage_gold),
            r.scored_tags,
        );
    }
    out
}

/// Flat `group.metric=value` lines for machine diffing.
pub fn render_report_kv<F: Prob>(reports: &[EvalReport<F>]) -> String {
    let mut out = String::new();
    for r in reports {
        let slug = slugify(&r.group_label);
        let _ = writeln!(out, "{slug}.tag_accuracy={:?}", r.tag_accuracy);
        let _ = writeln!(
            out,
            "{slug}.sentence_exact_match={:?}",
            r.sentence_exact_match
        );
        let _ = writeln!(
            out,
            "{slug}.parse_coverage_predicted={:?}",
            r.parse_coverage_predicted
        );
        let _ = writeln!(
            out,
            "{slug}.parse_coverage_gold={:?}",
            r.parse_coverage_gold
        );
        let _ = writeln!(out, "{slug}.scored_tags={}", r.scored_tags);
        let _ = writeln!(out, "{slug}.sentences={}", r.sentences);
        for ((gold, predicted), count) in &r.per_tag_confusion {
            let _ = writeln!(out, "{slug}.confusion.{gold}.{predicted}={count}");
        }
    }
    out
}

fn slugify(label: &str) -> String {
    let mut slug = String::new();
    let mut last_sep = true;
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
            last_sep = false;
        } else if !last_sep {
            slug.push('_');
            last_sep = true;
        }
    }
    while slug.ends_with('_') {
        slug.pop();
    }
    slug
}
