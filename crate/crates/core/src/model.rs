//! Relative-frequency model: a prior table P(tag | pc) and a transition table
//! P(next | prev) estimated from exact counts over an annotated corpus.
//!
//! Counts are the model; probabilities are computed lazily so retraining and
//! persistence stay lossless. Chunks tagged `Null` (sentence-final carriers)
//! contribute neither emissions nor transitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{head_of_chunk, AnnotatedSentence, NULL_TAG};
use crate::num::Prob;

/// Pseudo-tag used as the transition source for the first chunk when the
/// begin-of-sentence variant is enabled.
pub const BOS_TAG: &str = "<s>";

// ---------------------------------------------------------------------------
// Count tables
// ---------------------------------------------------------------------------

/// The four exact count tables behind the model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTables {
    /// C(pc): occurrences of each head feature.
    pub feature_total: BTreeMap<String, u64>,
    /// C(tag, pc): tag counts grouped by head feature.
    pub emission: BTreeMap<String, BTreeMap<String, u64>>,
    /// C(tag): occurrences of each tag.
    pub tag_total: BTreeMap<String, u64>,
    /// C(next, prev): successor counts grouped by the previous tag.
    pub successor: BTreeMap<String, BTreeMap<String, u64>>,
}

impl CountTables {
    /// Pointwise sum; associative and commutative, so partial tables from a
    /// partitioned corpus can be merged in any order.
    pub fn merge(&mut self, other: &CountTables) {
        for (k, v) in &other.feature_total {
            *self.feature_total.entry(k.clone()).or_default() += v;
        }
        for (pc, row) in &other.emission {
            let dst = self.emission.entry(pc.clone()).or_default();
            for (t, v) in row {
                *dst.entry(t.clone()).or_default() += v;
            }
        }
        for (k, v) in &other.tag_total {
            *self.tag_total.entry(k.clone()).or_default() += v;
        }
        for (prev, row) in &other.successor {
            let dst = self.successor.entry(prev.clone()).or_default();
            for (t, v) in row {
                *dst.entry(t.clone()).or_default() += v;
            }
        }
    }

    /// Check the structural invariants relating the four tables.
    pub fn verify(&self) -> Result<(), String> {
        for (pc, row) in &self.emission {
            let sum: u64 = row.values().sum();
            let total = self.feature_total.get(pc).copied().unwrap_or(0);
            if sum != total {
                return Err(format!(
                    "emission counts for `{pc}` sum to {sum}, C(pc) is {total}"
                ));
            }
        }
        for pc in self.feature_total.keys() {
            if !self.emission.contains_key(pc) {
                return Err(format!("feature `{pc}` has a total but no emission row"));
            }
        }
        for (prev, row) in &self.successor {
            if prev == BOS_TAG {
                continue;
            }
            let sum: u64 = row.values().sum();
            let total = self.tag_total.get(prev).copied().unwrap_or(0);
            if sum > total {
                return Err(format!(
                    "successor counts for `{prev}` sum to {sum}, exceeding C(tag) = {total}"
                ));
            }
        }
        Ok(())
    }

    fn successor_total(&self, prev: &str) -> u64 {
        self.successor
            .get(prev)
            .map(|row| row.values().sum())
            .unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Training options.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    /// Count a pseudo-transition from [`BOS_TAG`] into each sentence's first
    /// tag, so decoding can score the first chunk with a transition factor.
    pub begin_of_sentence: bool,
}

/// A trained model: count tables plus the observed tag and feature
/// inventories. `F` is the probability scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    counts: CountTables,
    tag_inventory: BTreeSet<String>,
    feature_inventory: BTreeSet<String>,
    alpha: F,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("sentence {index} is not fully annotated")]
    UnannotatedSentence { index: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    FileFormat {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: probability {value} is outside [0,1]")]
    BadProbability {
        path: String,
        line: usize,
        value: f64,
    },
    #[error("{path}:{line}: probabilities sum to {sum}, deviating from 1 by more than 1e-6")]
    RowSum { path: String, line: usize, sum: f64 },
    #[error("count tables are inconsistent: {0}")]
    BadCounts(String),
}

impl<F: Prob> Model<F> {
    /// Estimate a model from a fully annotated corpus.
    pub fn train(corpus: &[AnnotatedSentence]) -> Result<Model<F>, ModelError> {
        Model::train_with(corpus, TrainOptions::default())
    }

    pub fn train_with(
        corpus: &[AnnotatedSentence],
        options: TrainOptions,
    ) -> Result<Model<F>, ModelError> {
        if corpus.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let mut counts = CountTables::default();
        for (index, sentence) in corpus.iter().enumerate() {
            if !sentence.is_annotated() {
                return Err(ModelError::UnannotatedSentence { index });
            }
            let mut tags: Vec<&str> = Vec::new();
            for chunk in &sentence.chunks {
                let tag = chunk.function_tag.as_deref().expect("checked above");
                if tag == NULL_TAG {
                    continue;
                }
                let pc = head_of_chunk(chunk).feature();
                *counts.feature_total.entry(pc.clone()).or_default() += 1;
                *counts
                    .emission
                    .entry(pc)
                    .or_default()
                    .entry(tag.to_string())
                    .or_default() += 1;
                *counts.tag_total.entry(tag.to_string()).or_default() += 1;
                tags.push(tag);
            }
            if options.begin_of_sentence {
                if let Some(first) = tags.first() {
                    *counts
                        .successor
                        .entry(BOS_TAG.to_string())
                        .or_default()
                        .entry(first.to_string())
                        .or_default() += 1;
                }
            }
            for pair in tags.windows(2) {
                *counts
                    .successor
                    .entry(pair[0].to_string())
                    .or_default()
                    .entry(pair[1].to_string())
                    .or_default() += 1;
            }
        }
        Ok(Model::from_counts(counts))
    }

    /// Build a model directly from count tables.
    pub fn from_counts(counts: CountTables) -> Model<F> {
        let mut tag_inventory: BTreeSet<String> = counts.tag_total.keys().cloned().collect();
        for row in counts.emission.values() {
            tag_inventory.extend(row.keys().cloned());
        }
        for (prev, row) in &counts.successor {
            if prev != BOS_TAG {
                tag_inventory.insert(prev.clone());
            }
            tag_inventory.extend(row.keys().cloned());
        }
        let feature_inventory = counts.feature_total.keys().cloned().collect();
        Model {
            counts,
            tag_inventory,
            feature_inventory,
            alpha: F::zero(),
        }
    }

    /// Additive smoothing weight used by `prior` and `transition`;
    /// zero (the default) reproduces plain relative frequencies.
    pub fn with_alpha(mut self, alpha: F) -> Model<F> {
        assert!(alpha >= F::zero(), "alpha must be non-negative");
        self.alpha = alpha;
        self
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    /// True when the counts carry begin-of-sentence pseudo-transitions; the
    /// property is data-derived so it survives persistence.
    pub fn begin_of_sentence(&self) -> bool {
        self.counts.successor.contains_key(BOS_TAG)
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn tag_inventory(&self) -> &BTreeSet<String> {
        &self.tag_inventory
    }

    pub fn feature_inventory(&self) -> &BTreeSet<String> {
        &self.feature_inventory
    }

    pub fn is_empty(&self) -> bool {
        self.tag_inventory.is_empty()
    }

    /// P(tag | pc) for every tag with a nonzero numerator (every inventory
    /// tag once alpha > 0). Unknown features yield an empty map; the decoder
    /// applies its fallback policy instead.
    pub fn prior(&self, pc: &str) -> BTreeMap<String, F> {
        let mut out = BTreeMap::new();
        let Some(total) = self.counts.feature_total.get(pc) else {
            return out;
        };
        let inventory = count_to(self.tag_inventory.len() as u64);
        let denom = count_to::<F>(*total) + self.alpha * inventory;
        let row = self.counts.emission.get(pc);
        for tag in &self.tag_inventory {
            let c = row.and_then(|r| r.get(tag)).copied().unwrap_or(0);
            let num = count_to::<F>(c) + self.alpha;
            if num > F::zero() {
                out.insert(tag.clone(), num / denom);
            }
        }
        out
    }

    /// P(next | prev), normalized over prev's observed successor counts so
    /// rows with any observed successor sum to one at alpha = 0.
    pub fn transition(&self, prev: &str, next: &str) -> F {
        let row_total = self.counts.successor_total(prev);
        let c = self
            .counts
            .successor
            .get(prev)
            .and_then(|row| row.get(next))
            .copied()
            .unwrap_or(0);
        let num = count_to::<F>(c) + self.alpha;
        let denom =
            count_to::<F>(row_total) + self.alpha * count_to(self.tag_inventory.len() as u64);
        if denom <= F::zero() {
            return F::zero();
        }
        num / denom
    }
}

fn count_to<F: Prob>(c: u64) -> F {
    F::from_u64(c).expect("count fits the probability scalar")
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// The three files a model is persisted as.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelPaths {
    pub prior: PathBuf,
    pub transition: PathBuf,
    pub counts: PathBuf,
}

impl ModelPaths {
    /// `stem` -> `stem.prior.tbl`, `stem.trans.tbl`, `stem.counts.tbl`.
    pub fn from_stem(stem: impl AsRef<Path>) -> ModelPaths {
        let stem = stem.as_ref();
        let suffixed = |suffix: &str| {
            let mut os = stem.as_os_str().to_owned();
            os.push(suffix);
            PathBuf::from(os)
        };
        ModelPaths {
            prior: suffixed(".prior.tbl"),
            transition: suffixed(".trans.tbl"),
            counts: suffixed(".counts.tbl"),
        }
    }
}

/// Probability rendering for the table files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Shortest representation that round-trips the scalar.
    #[default]
    Full,
    /// Rounded to four decimals, as the published tables display them.
    Display4,
}

pub fn format_prob<F: Prob>(p: F, precision: Precision) -> String {
    match precision {
        Precision::Full => format!("{p:?}"),
        Precision::Display4 => {
            let scale = F::from_u64(10_000).expect("scale fits");
            format!("{:?}", (p * scale).round() / scale)
        }
    }
}

impl<F: Prob> Model<F> {
    /// Render the prior table: one line per feature,
    /// `pc#tag:prob,tag:prob,...`, tags ordered by descending probability
    /// then lexicographically. Probabilities are the plain relative
    /// frequencies regardless of the runtime alpha, so the files are a pure
    /// function of the counts.
    pub fn render_prior_table(&self, precision: Precision) -> String {
        let mut out = String::new();
        for (pc, row) in &self.counts.emission {
            let total = self.counts.feature_total[pc];
            let mut entries: Vec<(&str, F)> = row
                .iter()
                .map(|(tag, c)| (tag.as_str(), count_to::<F>(*c) / count_to::<F>(total)))
                .collect();
            entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
            let _ = write!(out, "{pc}#");
            for (i, (tag, p)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{tag}:{}", format_prob(*p, precision));
            }
            out.push('\n');
        }
        out
    }

    /// Render the transition table: one line per observed pair,
    /// `prev,next=prob`, sorted by (prev, next).
    pub fn render_transition_table(&self, precision: Precision) -> String {
        let mut out = String::new();
        for (prev, row) in &self.counts.successor {
            let total = self.counts.successor_total(prev);
            for (next, c) in row {
                let p = count_to::<F>(*c) / count_to::<F>(total);
                let _ = writeln!(out, "{prev},{next}={}", format_prob(p, precision));
            }
        }
        out
    }

    /// Render the raw counts companion: `key<TAB>count` lines.
    pub fn render_counts_table(&self) -> String {
        let mut out = String::new();
        for (pc, c) in &self.counts.feature_total {
            let _ = writeln!(out, "feature:{pc}\t{c}");
        }
        for (pc, row) in &self.counts.emission {
            for (tag, c) in row {
                let _ = writeln!(out, "emit:{pc}#{tag}\t{c}");
            }
        }
        for (tag, c) in &self.counts.tag_total {
            let _ = writeln!(out, "tag:{tag}\t{c}");
        }
        for (prev, row) in &self.counts.successor {
            for (next, c) in row {
                let _ = writeln!(out, "next:{prev},{next}\t{c}");
            }
        }
        out
    }

    /// Write the three table files.
    pub fn save(&self, paths: &ModelPaths) -> Result<(), ModelError> {
        write_file(&paths.prior, &self.render_prior_table(Precision::Full))?;
        write_file(
            &paths.transition,
            &self.render_transition_table(Precision::Full),
        )?;
        write_file(&paths.counts, &self.render_counts_table())?;
        Ok(())
    }

    /// Load a model, failing on any validation finding.
    pub fn load(paths: &ModelPaths) -> Result<Model<F>, ModelError> {
        let (model, warnings) = Model::load_inner(paths, true)?;
        debug_assert!(warnings.is_empty());
        Ok(model)
    }

    /// Load a model, demoting row-sum deviations to warnings.
    pub fn load_lenient(paths: &ModelPaths) -> Result<(Model<F>, Vec<String>), ModelError> {
        Model::load_inner(paths, false)
    }

    fn load_inner(paths: &ModelPaths, strict: bool) -> Result<(Model<F>, Vec<String>), ModelError> {
        let counts_text = read_file(&paths.counts)?;
        let counts = parse_counts_table(&counts_text, &paths.counts)?;
        counts.verify().map_err(ModelError::BadCounts)?;

        let mut warnings = Vec::new();
        let prior_text = read_file(&paths.prior)?;
        validate_prior_table(&prior_text, &paths.prior, strict, &mut warnings)?;
        let transition_text = read_file(&paths.transition)?;
        validate_transition_table(&transition_text, &paths.transition)?;

        Ok((Model::from_counts(counts), warnings))
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), ModelError> {
    std::fs::write(path, content).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> ModelError {
    ModelError::FileFormat {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn parse_counts_table(text: &str, path: &Path) -> Result<CountTables, ModelError> {
    let mut counts = CountTables::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (key, value) = line
            .split_once('\t')
            .ok_or_else(|| format_err(path, line_no, "expected `key<TAB>count`"))?;
        let count: u64 = value
            .trim()
            .parse()
            .map_err(|_| format_err(path, line_no, format!("bad count `{value}`")))?;
        let (kind, rest) = key
            .split_once(':')
            .ok_or_else(|| format_err(path, line_no, "expected `kind:key`"))?;
        match kind {
            "feature" => {
                counts.feature_total.insert(rest.to_string(), count);
            }
            "emit" => {
                let (pc, tag) = rest
                    .split_once('#')
                    .ok_or_else(|| format_err(path, line_no, "expected `emit:pc#tag`"))?;
                counts
                    .emission
                    .entry(pc.to_string())
                    .or_default()
                    .insert(tag.to_string(), count);
            }
            "tag" => {
                counts.tag_total.insert(rest.to_string(), count);
            }
            "next" => {
                let (prev, next) = rest
                    .split_once(',')
                    .ok_or_else(|| format_err(path, line_no, "expected `next:prev,next`"))?;
                counts
                    .successor
                    .entry(prev.to_string())
                    .or_default()
                    .insert(next.to_string(), count);
            }
            other => {
                return Err(format_err(
                    path,
                    line_no,
                    format!("unknown key kind `{other}`"),
                ))
            }
        }
    }
    Ok(counts)
}

fn parse_prob(path: &Path, line_no: usize, raw: &str) -> Result<f64, ModelError> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| format_err(path, line_no, format!("bad probability `{raw}`")))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(ModelError::BadProbability {
            path: path.display().to_string(),
            line: line_no,
            value,
        });
    }
    Ok(value)
}

fn validate_prior_table(
    text: &str,
    path: &Path,
    strict: bool,
    warnings: &mut Vec<String>,
) -> Result<(), ModelError> {
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (_pc, rest) = line
            .split_once('#')
            .ok_or_else(|| format_err(path, line_no, "expected `pc#tag:prob,...`"))?;
        let mut sum = 0.0;
        for part in rest.split(',') {
            let (_tag, prob) = part
                .split_once(':')
                .ok_or_else(|| format_err(path, line_no, "expected `tag:prob`"))?;
            sum += parse_prob(path, line_no, prob)?;
        }
        if (sum - 1.0).abs() > 1e-6 {
            if strict {
                return Err(ModelError::RowSum {
                    path: path.display().to_string(),
                    line: line_no,
                    sum,
                });
            }
            warnings.push(format!(
                "{}:{line_no}: probabilities sum to {sum}",
                path.display()
            ));
        }
    }
    Ok(())
}

fn validate_transition_table(text: &str, path: &Path) -> Result<(), ModelError> {
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (pair, prob) = line
            .split_once('=')
            .ok_or_else(|| format_err(path, line_no, "expected `prev,next=prob`"))?;
        if pair.split_once(',').is_none() {
            return Err(format_err(path, line_no, "expected `prev,next`"));
        }
        parse_prob(path, line_no, prob)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, LoadMode};

    type M = Model<f64>;

    fn corpus(text: &str) -> Vec<AnnotatedSentence> {
        parse_corpus(text, LoadMode::Strict)
            .expect("corpus parses")
            .sentences
    }

    fn train(text: &str) -> M {
        Model::train(&corpus(text)).expect("training succeeds")
    }

    #[test]
    fn use_postposition_prior_is_certain() {
        let m = train(
            "PPC@UseP[ဖြင့်/ppm.use]\n\
             NC@Subj[လူ/n.person]#VC@Active[စား/v.common]\n",
        );
        let prior = m.prior("ppm.use");
        assert_eq!(prior.len(), 1);
        assert_eq!(prior["UseP"], 1.0);
    }

    #[test]
    fn unknown_feature_has_empty_prior() {
        let m = train("VC@Active[စား/v.common]");
        assert!(m.prior("x.y").is_empty());
    }

    #[test]
    fn prior_ratios_are_exact() {
        // pc seen 4 times: PSubj three times, PObj once
        let m = train(
            "NC@PSubj[က/n.person]\n\
             NC@PSubj[ခ/n.person]\n\
             NC@PSubj[စ/n.person]\n\
             NC@PObj[တ/n.person]\n",
        );
        let prior = m.prior("n.person");
        assert_eq!(prior["PSubj"], 0.75);
        assert_eq!(prior["PObj"], 0.25);
    }

    #[test]
    fn single_chunk_sentence_has_no_transitions() {
        let m = train("VC@Active[စား/v.common]");
        assert!(m.counts().successor.is_empty());
    }

    #[test]
    fn cause_transition_is_certain() {
        let m = train("NC@PCau[မိုး/n.natural]#PPC@CauP[ကြောင့်/ppm.cause]#VC@Active[ပျက်/v.common]");
        assert_eq!(m.transition("PCau", "CauP"), 1.0);
    }

    #[test]
    fn unknown_prev_transition_is_zero() {
        let m = train("VC@Active[စား/v.common]");
        assert_eq!(m.transition("PCau", "CauP"), 0.0);
    }

    #[test]
    fn transition_matches_the_published_display_value() {
        // PlaP observed 18 times, followed by Active 11 times and Subj 7 times
        let mut text = String::new();
        for _ in 0..11 {
            text.push_str(
                "NC@PPla[လမ်း/n.location]#PPC@PlaP[တွင်/ppm.place]#VC@Active[စား/v.common]\n",
            );
        }
        for _ in 0..7 {
            text.push_str(
                "NC@PPla[လမ်း/n.location]#PPC@PlaP[တွင်/ppm.place]#NC@Subj[လူ/n.person]#VC@Active[စား/v.common]\n",
            );
        }
        let m = train(&text);
        let p = m.transition("PlaP", "Active");
        assert!((p - 11.0 / 18.0).abs() < 1e-15);
        assert_eq!(format_prob(p, Precision::Display4), "0.6111");
        assert_eq!(format_prob(1.0f64, Precision::Display4), "1.0");
    }

    #[test]
    fn null_chunks_are_excluded_and_bridged() {
        let m = train("VC@Active[စား/v.common]#SFC@Null[သည်/sf]#CC@CCS[လျှင်/cc.sent]");
        assert!(!m.tag_inventory().contains(NULL_TAG));
        assert!(!m.feature_inventory().contains("sf.declarative"));
        // the transition skips the Null chunk entirely
        assert_eq!(m.transition("Active", "CCS"), 1.0);
    }

    #[test]
    fn priors_and_transition_rows_normalize() {
        let mut rng = crate::rng::SplitMix64::new(991);
        let corpus = crate::testkit::fixtures::random_corpus(&mut rng, 30, 8);
        let m: M = Model::train(&corpus).unwrap();
        for pc in m.feature_inventory() {
            let sum: f64 = m.prior(pc).values().sum();
            assert!((sum - 1.0).abs() < 1e-9, "prior({pc}) sums to {sum}");
        }
        for prev in m.tag_inventory() {
            if m.counts().successor.contains_key(prev) {
                let sum: f64 = m
                    .tag_inventory()
                    .iter()
                    .map(|next| m.transition(prev, next))
                    .sum();
                assert!((sum - 1.0).abs() < 1e-9, "transition({prev}) sums to {sum}");
            }
        }
    }

    #[test]
    fn smoothing_spreads_mass_over_the_inventory() {
        let m = train(
            "NC@PSubj[က/n.person]#VC@Active[စား/v.common]\n\
             NC@PObj[ခ/n.objects]#VC@Active[သွား/v.common]\n",
        )
        .with_alpha(0.5);
        let prior = m.prior("n.person");
        // every inventory tag now has mass
        assert_eq!(prior.len(), m.tag_inventory().len());
        let sum: f64 = prior.values().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // unknown feature still yields the empty map
        assert!(m.prior("zz.zz").is_empty());
    }

    #[test]
    fn training_is_order_insensitive_and_monotone() {
        let mut rng = crate::rng::SplitMix64::new(5150);
        let mut corpus = crate::testkit::fixtures::random_corpus(&mut rng, 20, 6);
        let a: M = Model::train(&corpus).unwrap();
        let before = a.counts().clone();

        rng.shuffle(&mut corpus);
        let b: M = Model::train(&corpus).unwrap();
        assert_eq!(a, b);

        corpus.push(crate::testkit::fixtures::random_annotated_sentence(
            &mut rng, 6,
        ));
        let c: M = Model::train(&corpus).unwrap();
        for (pc, n) in &before.feature_total {
            assert!(c.counts().feature_total[pc] >= *n);
        }
        for (tag, n) in &before.tag_total {
            assert!(c.counts().tag_total[tag] >= *n);
        }
    }

    #[test]
    fn merged_partial_tables_equal_a_full_train() {
        let mut rng = crate::rng::SplitMix64::new(77);
        let corpus = crate::testkit::fixtures::random_corpus(&mut rng, 24, 6);
        let full: M = Model::train(&corpus).unwrap();
        let (left, right) = corpus.split_at(corpus.len() / 2);
        let mut merged = if left.is_empty() {
            CountTables::default()
        } else {
            Model::<f64>::train(left).unwrap().counts().clone()
        };
        merged.merge(Model::<f64>::train(right).unwrap().counts());
        assert_eq!(&merged, full.counts());
    }

    #[test]
    fn begin_of_sentence_flag_counts_a_pseudo_transition() {
        let opts = TrainOptions {
            begin_of_sentence: true,
        };
        let m: M = Model::train_with(
            &corpus("NC@PSubj[က/n.person]#VC@Active[စား/v.common]"),
            opts,
        )
        .unwrap();
        assert!(m.begin_of_sentence());
        assert_eq!(m.transition(BOS_TAG, "PSubj"), 1.0);
        assert!(!m.tag_inventory().contains(BOS_TAG));
    }

    #[test]
    fn train_rejects_bad_input() {
        assert!(matches!(
            Model::<f64>::train(&[]).unwrap_err(),
            ModelError::EmptyCorpus
        ));
        let unannotated = corpus("NC[က/n.person]");
        assert!(matches!(
            Model::<f64>::train(&unannotated).unwrap_err(),
            ModelError::UnannotatedSentence { index: 0 }
        ));
    }

    #[test]
    fn prior_file_holds_the_published_line() {
        let m = train(
            "PPC@UseP[ဖြင့်/ppm.use]\n\
             CC@CCC[နှင့်/cc.chunk]\n",
        );
        let table = m.render_prior_table(Precision::Full);
        assert!(table.contains("ppm.use#UseP:1.0\n"), "table was:\n{table}");
        assert!(table.contains("cc.chunk#CCC:1.0\n"));
    }

    #[test]
    fn save_load_round_trip_is_byte_identical() {
        let dir = std::env::temp_dir().join(format!("functag-model-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut rng = crate::rng::SplitMix64::new(31);
        for i in 0..20 {
            let corpus = crate::testkit::fixtures::random_corpus(&mut rng, 15, 6);
            let m: M = Model::train(&corpus).unwrap();
            let paths = ModelPaths::from_stem(dir.join(format!("m{i}")));
            m.save(&paths).unwrap();
            let loaded = M::load(&paths).unwrap();
            assert_eq!(loaded.counts(), m.counts());
            assert_eq!(loaded.tag_inventory(), m.tag_inventory());
            let paths2 = ModelPaths::from_stem(dir.join(format!("m{i}b")));
            loaded.save(&paths2).unwrap();
            for (a, b) in [
                (&paths.prior, &paths2.prior),
                (&paths.transition, &paths2.transition),
                (&paths.counts, &paths2.counts),
            ] {
                assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_model_saves_empty_files_and_loads_back() {
        let dir = std::env::temp_dir().join(format!("functag-empty-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let empty: M = Model::from_counts(CountTables::default());
        let paths = ModelPaths::from_stem(dir.join("empty"));
        empty.save(&paths).unwrap();
        assert_eq!(std::fs::read(&paths.prior).unwrap().len(), 0);
        assert_eq!(std::fs::read(&paths.transition).unwrap().len(), 0);
        let loaded = M::load(&paths).unwrap();
        assert!(loaded.is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_rejects_malformed_tables() {
        let dir = std::env::temp_dir().join(format!("functag-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let paths = ModelPaths::from_stem(dir.join("bad"));
        std::fs::write(
            &paths.counts,
            "feature:n.person\t2\nemit:n.person#PSubj\t2\n",
        )
        .unwrap();
        std::fs::write(&paths.transition, "").unwrap();

        std::fs::write(&paths.prior, "n.person#PSubj;1.0\n").unwrap();
        assert!(matches!(
            M::load(&paths),
            Err(ModelError::FileFormat { line: 1, .. })
        ));

        std::fs::write(&paths.prior, "n.person#PSubj:1.5\n").unwrap();
        assert!(matches!(
            M::load(&paths),
            Err(ModelError::BadProbability { .. })
        ));

        std::fs::write(&paths.prior, "n.person#PSubj:0.4,PObj:0.4\n").unwrap();
        assert!(matches!(M::load(&paths), Err(ModelError::RowSum { .. })));
        let (_, warnings) = M::load_lenient(&paths).unwrap();
        assert_eq!(warnings.len(), 1);

        // counts that violate the emission-sum invariant
        std::fs::write(&paths.prior, "").unwrap();
        std::fs::write(
            &paths.counts,
            "feature:n.person\t3\nemit:n.person#PSubj\t2\n",
        )
        .unwrap();
        assert!(matches!(M::load(&paths), Err(ModelError::BadCounts(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
