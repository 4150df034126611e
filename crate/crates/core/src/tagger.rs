//! Function-tag decoding: score each chunk's candidate tags by
//! prior(tag | pc) times transition(prev, tag) and pick the argmax.
//!
//! `greedy` commits left to right exactly as the multiply-and-pick procedure
//! describes; `lattice` maximizes the same product over whole sequences by
//! dynamic programming. Sentence-final chunks are forced to `Null` and do not
//! anchor transitions. Ties break toward the higher prior, then the
//! lexicographically smaller tag.

use std::fmt;

use thiserror::Error;

use crate::corpus::{head_of_chunk, AnnotatedSentence, ChunkType, NULL_TAG};
use crate::model::{Model, BOS_TAG};
use crate::num::Prob;

/// Decoding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    #[default]
    Greedy,
    Lattice,
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::Greedy => "greedy",
            DecodeMode::Lattice => "lattice",
        })
    }
}

/// Policy for chunks whose head feature was never seen in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackPolicy {
    /// Uniform pseudo-prior over the tag inventory.
    #[default]
    Uniform,
    /// The single most frequent tag overall.
    MostFrequent,
}

/// Decoding options.
#[derive(Debug, Clone, Copy, Default)]
pub struct TagOptions {
    pub mode: DecodeMode,
    pub fallback: FallbackPolicy,
}

/// How a decision was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionSource {
    Scored,
    FallbackUnknownFeature,
    ForcedNull,
}

/// One per-chunk decision. `score` is the linear-space factor this position
/// contributed (prior, times the transition from the previous choice where
/// one applies).
#[derive(Debug, Clone, PartialEq)]
pub struct TagDecision<F> {
    pub chunk_index: usize,
    pub tag: String,
    pub score: F,
    pub source: DecisionSource,
}

/// The decoded sequence, one decision per chunk in order.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSequence<F> {
    pub decisions: Vec<TagDecision<F>>,
    pub decode_mode: DecodeMode,
}

impl<F: Prob> TagSequence<F> {
    pub fn tags(&self) -> Vec<&str> {
        self.decisions.iter().map(|d| d.tag.as_str()).collect()
    }

    /// Product of the per-decision factors.
    pub fn total_score(&self) -> F {
        self.decisions.iter().fold(F::one(), |acc, d| acc * d.score)
    }

    /// Sum of the per-decision log factors (what the lattice maximizes).
    pub fn log_score(&self) -> F {
        self.decisions
            .iter()
            .fold(F::zero(), |acc, d| acc + d.score.ln())
    }

    /// Wrap externally supplied tags (e.g. gold annotations) so they can be
    /// rendered; every factor is one.
    pub fn from_tags<S: AsRef<str>>(tags: &[S], decode_mode: DecodeMode) -> TagSequence<F> {
        TagSequence {
            decisions: tags
                .iter()
                .enumerate()
                .map(|(chunk_index, tag)| {
                    let tag = tag.as_ref().to_string();
                    let source = if tag == NULL_TAG {
                        DecisionSource::ForcedNull
                    } else {
                        DecisionSource::Scored
                    };
                    TagDecision {
                        chunk_index,
                        tag,
                        score: F::one(),
                        source,
                    }
                })
                .collect(),
            decode_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("cannot tag an empty sentence")]
    EmptySentence,
    #[error("cannot tag with an empty model")]
    EmptyModel,
    #[error("tag sequence has {got} decisions for {expected} chunks")]
    LengthMismatch { expected: usize, got: usize },
}

/// Candidate tags for a feature, ordered by descending prior with
/// lexicographic tie-breaking; empty when the feature is unknown.
pub fn candidates<F: Prob>(model: &Model<F>, pc: &str) -> Vec<(String, F)> {
    let mut out: Vec<(String, F)> = model.prior(pc).into_iter().collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// Left-to-right decoding: each position takes the argmax of
/// prior × transition-from-the-previous-choice.
pub fn tag_greedy<F: Prob>(
    model: &Model<F>,
    sentence: &AnnotatedSentence,
) -> Result<TagSequence<F>, TagError> {
    tag(
        model,
        sentence,
        TagOptions {
            mode: DecodeMode::Greedy,
            ..TagOptions::default()
        },
    )
}

/// Whole-sequence decoding: maximizes the product of all priors and
/// transitions by dynamic programming.
pub fn tag_lattice<F: Prob>(
    model: &Model<F>,
    sentence: &AnnotatedSentence,
) -> Result<TagSequence<F>, TagError> {
    tag(
        model,
        sentence,
        TagOptions {
            mode: DecodeMode::Lattice,
            ..TagOptions::default()
        },
    )
}

/// Decode with explicit options.
pub fn tag<F: Prob>(
    model: &Model<F>,
    sentence: &AnnotatedSentence,
    options: TagOptions,
) -> Result<TagSequence<F>, TagError> {
    if sentence.chunks.is_empty() {
        return Err(TagError::EmptySentence);
    }
    let positions = scored_positions(model, sentence, options.fallback)?;
    let chosen = match options.mode {
        DecodeMode::Greedy => decode_greedy(model, &positions),
        DecodeMode::Lattice => decode_lattice(model, &positions),
    };

    let mut decisions = Vec::with_capacity(sentence.chunks.len());
    let mut next = chosen.into_iter();
    for (chunk_index, chunk) in sentence.chunks.iter().enumerate() {
        if chunk.chunk_type == ChunkType::Sfc {
            decisions.push(TagDecision {
                chunk_index,
                tag: NULL_TAG.to_string(),
                score: F::one(),
                source: DecisionSource::ForcedNull,
            });
        } else {
            let (tag, score, source) = next.next().expect("one choice per scored position");
            decisions.push(TagDecision {
                chunk_index,
                tag,
                score,
                source,
            });
        }
    }
    Ok(TagSequence {
        decisions,
        decode_mode: options.mode,
    })
}

/// A scored position: the candidate list (tag, pseudo-prior weight) in
/// preference order, plus where the weights came from.
struct Position<F> {
    cands: Vec<(String, F)>,
    source: DecisionSource,
}

fn scored_positions<F: Prob>(
    model: &Model<F>,
    sentence: &AnnotatedSentence,
    fallback: FallbackPolicy,
) -> Result<Vec<Position<F>>, TagError> {
    let mut out = Vec::new();
    for chunk in &sentence.chunks {
        if chunk.chunk_type == ChunkType::Sfc {
            continue;
        }
        let pc = head_of_chunk(chunk).feature();
        let cands = candidates(model, &pc);
        if !cands.is_empty() {
            out.push(Position {
                cands,
                source: DecisionSource::Scored,
            });
            continue;
        }
        if model.is_empty() {
            return Err(TagError::EmptyModel);
        }
        let cands = match fallback {
            FallbackPolicy::Uniform => {
                let weight = F::one() / F::from_u64(model.tag_inventory().len() as u64).unwrap();
                model
                    .tag_inventory()
                    .iter()
                    .map(|t| (t.clone(), weight))
                    .collect()
            }
            FallbackPolicy::MostFrequent => {
                let total: u64 = model.counts().tag_total.values().sum();
                let (tag, count) = model
                    .counts()
                    .tag_total
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                    .expect("non-empty model");
                let weight = F::from_u64(*count).unwrap() / F::from_u64(total.max(1)).unwrap();
                vec![(tag.clone(), weight)]
            }
        };
        out.push(Position {
            cands,
            source: DecisionSource::FallbackUnknownFeature,
        });
    }
    Ok(out)
}

fn first_factor<F: Prob>(model: &Model<F>, weight: F, tag: &str) -> F {
    if model.begin_of_sentence() {
        weight * model.transition(BOS_TAG, tag)
    } else {
        weight
    }
}

fn decode_greedy<F: Prob>(
    model: &Model<F>,
    positions: &[Position<F>],
) -> Vec<(String, F, DecisionSource)> {
    let mut out: Vec<(String, F, DecisionSource)> = Vec::with_capacity(positions.len());
    let mut prev: Option<String> = None;
    for pos in positions {
        let scores: Vec<F> = pos
            .cands
            .iter()
            .map(|(tag, weight)| match &prev {
                None => first_factor(model, *weight, tag),
                Some(p) => *weight * model.transition(p, tag),
            })
            .collect();
        // When no candidate has any transition evidence the position degrades
        // to prior-only scoring, which keeps the recorded score positive and
        // picks the same tag an all-zero argmax would tie-break to.
        let dead = scores.iter().all(|s| *s <= F::zero());
        let mut best = 0;
        if !dead {
            for (k, s) in scores.iter().enumerate() {
                if *s > scores[best] {
                    best = k;
                }
            }
        }
        let (tag, weight) = &pos.cands[best];
        let score = if dead { *weight } else { scores[best] };
        out.push((tag.clone(), score, pos.source));
        prev = Some(tag.clone());
    }
    out
}

fn decode_lattice<F: Prob>(
    model: &Model<F>,
    positions: &[Position<F>],
) -> Vec<(String, F, DecisionSource)> {
    if positions.is_empty() {
        return Vec::new();
    }
    // forward pass in log space; candidate order encodes the tie-break, so
    // only strictly better values displace a choice
    let mut alpha: Vec<Vec<F>> = Vec::with_capacity(positions.len());
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(positions.len());

    let first: Vec<F> = positions[0]
        .cands
        .iter()
        .map(|(tag, weight)| first_factor(model, *weight, tag).ln())
        .collect();
    alpha.push(first);
    back.push(vec![0; positions[0].cands.len()]);

    for i in 1..positions.len() {
        let mut row = Vec::with_capacity(positions[i].cands.len());
        let mut ptr = Vec::with_capacity(positions[i].cands.len());
        for (tag, weight) in &positions[i].cands {
            let mut best_j = 0;
            let mut best = F::neg_infinity();
            for (j, (prev_tag, _)) in positions[i - 1].cands.iter().enumerate() {
                let v = alpha[i - 1][j] + model.transition(prev_tag, tag).ln();
                if v > best {
                    best = v;
                    best_j = j;
                }
            }
            row.push(best + weight.ln());
            ptr.push(best_j);
        }
        alpha.push(row);
        back.push(ptr);
    }

    let last = alpha.len() - 1;
    let mut best_k = 0;
    for (k, v) in alpha[last].iter().enumerate() {
        if *v > alpha[last][best_k] {
            best_k = k;
        }
    }

    if alpha[last][best_k] == F::neg_infinity() {
        // every complete path has zero probability; drop the transition
        // factors so decoding degrades to independent prior argmaxes
        return positions
            .iter()
            .map(|p| (p.cands[0].0.clone(), p.cands[0].1, p.source))
            .collect();
    }

    let mut picks = vec![best_k; positions.len()];
    for i in (1..positions.len()).rev() {
        picks[i - 1] = back[i][picks[i]];
    }

    picks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (tag, weight) = &positions[i].cands[k];
            let score = if i == 0 {
                first_factor(model, *weight, tag)
            } else {
                let prev_tag = &positions[i - 1].cands[picks[i - 1]].0;
                *weight * model.transition(prev_tag, tag)
            };
            (tag.clone(), score, positions[i].source)
        })
        .collect()
}

/// Log of the sequence objective Π prior(tag|pc) × Π transition(prev, tag)
/// for a concrete assignment, folded in the same order the lattice maximizes.
/// Zero factors yield negative infinity; a tag outside a position's candidate
/// set does too. Null decisions on sentence-final chunks are skipped.
pub fn log_objective<F: Prob>(
    model: &Model<F>,
    sentence: &AnnotatedSentence,
    tags: &TagSequence<F>,
    fallback: FallbackPolicy,
) -> Result<F, TagError> {
    if tags.decisions.len() != sentence.chunks.len() {
        return Err(TagError::LengthMismatch {
            expected: sentence.chunks.len(),
            got: tags.decisions.len(),
        });
    }
    let positions = scored_positions(model, sentence, fallback)?;
    let chosen: Vec<&str> = sentence
        .chunks
        .iter()
        .zip(&tags.decisions)
        .filter(|(c, _)| c.chunk_type != ChunkType::Sfc)
        .map(|(_, d)| d.tag.as_str())
        .collect();
    let mut total = F::zero();
    for (i, (pos, tag)) in positions.iter().zip(&chosen).enumerate() {
        let Some((_, weight)) = pos.cands.iter().find(|(t, _)| t == tag) else {
            return Ok(F::neg_infinity());
        };
        if i == 0 {
            total = first_factor(model, *weight, tag).ln();
        } else {
            total = total + model.transition(chosen[i - 1], tag).ln();
            total = total + weight.ln();
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Render `TAG[surface]` elements joined by `#`. Null decisions merge their
/// words into the preceding element (the sentence-final particle joins the
/// verb), and the terminator is appended when the source line carried one.
pub fn render_tagged<F: Prob>(
    sentence: &AnnotatedSentence,
    tags: &TagSequence<F>,
) -> Result<String, TagError> {
    if tags.decisions.len() != sentence.chunks.len() {
        return Err(TagError::LengthMismatch {
            expected: sentence.chunks.len(),
            got: tags.decisions.len(),
        });
    }
    let mut parts: Vec<(String, String)> = Vec::new();
    for (chunk, decision) in sentence.chunks.iter().zip(&tags.decisions) {
        let surface = chunk.surface();
        if decision.tag == NULL_TAG {
            if let Some(last) = parts.last_mut() {
                last.1.push_str(&surface);
                continue;
            }
        }
        parts.push((decision.tag.clone(), surface));
    }
    let mut out = parts
        .iter()
        .map(|(tag, words)| format!("{tag}[{words}]"))
        .collect::<Vec<_>>()
        .join("#");
    if sentence.terminated {
        out.push(crate::corpus::SENTENCE_FINAL_MARK);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, parse_sentence_line, LoadMode};
    use crate::model::CountTables;
    use crate::testkit::fixtures;

    type M = Model<f64>;

    fn fixture_model() -> M {
        Model::train(&fixtures::training_corpus()).unwrap()
    }

    fn corpus(text: &str) -> Vec<crate::corpus::AnnotatedSentence> {
        parse_corpus(text, LoadMode::Strict).unwrap().sentences
    }

    #[test]
    fn greedy_reproduces_the_bicycle_tags_and_line() {
        let model = fixture_model();
        let input = parse_sentence_line(&fixtures::golden("bicycle_input")).unwrap();
        let seq = tag_greedy(&model, &input).unwrap();
        assert_eq!(
            seq.tags(),
            vec![
                "PSubj", "CCC", "PSubj", "SubjP", "PPla", "PlaP", "PUse", "UseP", "Active", "Null"
            ]
        );
        assert_eq!(
            render_tagged(&input, &seq).unwrap(),
            fixtures::golden("bicycle_tagged")
        );
        for d in &seq.decisions {
            match d.source {
                DecisionSource::ForcedNull => assert_eq!(d.tag, NULL_TAG),
                _ => assert!(d.score > 0.0),
            }
        }
    }

    #[test]
    fn greedy_reproduces_the_leader_tags_and_line() {
        let model = fixture_model();
        let input = parse_sentence_line(&fixtures::golden("leader_input")).unwrap();
        let seq = tag_greedy(&model, &input).unwrap();
        assert_eq!(
            seq.tags(),
            vec!["PSubj", "SubjP", "PObj", "ObjP", "PPcomplO", "PcomplOP", "Active", "Null"]
        );
        assert_eq!(
            render_tagged(&input, &seq).unwrap(),
            fixtures::golden("leader_tagged")
        );
    }

    #[test]
    fn lattice_recovers_the_book_tags_where_greedy_cannot() {
        let model = fixture_model();
        let input = parse_sentence_line(&fixtures::golden("book_input")).unwrap();
        let lattice = tag_lattice(&model, &input).unwrap();
        assert_eq!(
            lattice.tags(),
            vec!["Subj", "Active", "CCA", "PObj", "ObjP", "Subj", "Active", "Null"]
        );
        assert_eq!(
            render_tagged(&input, &lattice).unwrap(),
            fixtures::golden("book_tagged")
        );
        // greedy commits to PSubj up front and strands the path entirely
        let greedy = tag_greedy(&model, &input).unwrap();
        assert_eq!(greedy.tags()[0], "PSubj");
        let fb = FallbackPolicy::Uniform;
        let lat = log_objective(&model, &input, &lattice, fb).unwrap();
        let grd = log_objective(&model, &input, &greedy, fb).unwrap();
        assert!(lat > grd);
        assert!(grd == f64::NEG_INFINITY);
    }

    #[test]
    fn single_chunk_deterministic_model() {
        let model: M = Model::train(&corpus("VC@Active[စား/v.common]")).unwrap();
        let input = parse_sentence_line("VC[စား/v.common]").unwrap();
        let seq = tag_greedy(&model, &input).unwrap();
        assert_eq!(seq.tags(), vec!["Active"]);
        assert_eq!(seq.decisions[0].score, 1.0);
        assert_eq!(tag_lattice(&model, &input).unwrap().tags(), vec!["Active"]);
    }

    #[test]
    fn candidates_order_and_ties() {
        let model: M = Model::train(&corpus(
            "AC@Ada[လှ/adj.dem]\nAC@Ada[မြ/adj.dem]\nAC@Ada[က/adj.dem]\n\
             AC@Ada[ခ/adj.dem]\nAC@Ada[စ/adj.dem]\nAC@Ada[တ/adj.dem]\n\
             AC@Ada[န/adj.dem]\nAC@Ada[ပ/adj.dem]\nAC@Ada[ဘ/adj.dem]\nNC@PObj[စာ/adj.dem]\n",
        ))
        .unwrap();
        let cands = candidates(&model, "adj.dem");
        assert_eq!(cands[0].0, "Ada");
        assert!((cands[0].1 - 0.9).abs() < 1e-12);
        assert_eq!(cands[1], ("PObj".to_string(), 0.1));
        assert!(candidates(&model, "nope.x").is_empty());

        // exact tie resolves lexicographically
        let tied: M =
            Model::train(&corpus("NC@PObj[စာ/n.objects]\nNC@Obj[ရေ/n.objects]\n")).unwrap();
        let cands = candidates(&tied, "n.objects");
        assert_eq!(cands[0].0, "Obj");
        assert_eq!(cands[1].0, "PObj");
        assert_eq!(cands[0].1, cands[1].1);
    }

    #[test]
    fn sfc_is_forced_null_and_transitions_bridge_it() {
        let model: M = Model::train(&corpus(
            "VC@Active[စား/v.common]#SFC@Null[သည်/sf]#CC@CCS[လျှင်/cc.sent]\n",
        ))
        .unwrap();
        let input = parse_sentence_line("VC[စား/v.common]#SFC[သည်/sf]#CC[လျှင်/cc.sent]").unwrap();
        let seq = tag_greedy(&model, &input).unwrap();
        assert_eq!(seq.tags(), vec!["Active", "Null", "CCS"]);
        assert_eq!(seq.decisions[1].source, DecisionSource::ForcedNull);
        // CCS was scored against Active (across the Null), so the factor is
        // prior 1.0 times transition 1.0
        assert_eq!(seq.decisions[2].score, 1.0);
    }

    #[test]
    fn unknown_feature_falls_back() {
        let model: M = Model::train(&corpus(
            "NC@PSubj[က/n.person]#VC@Active[စား/v.common]\n\
             NC@PSubj[ခ/n.person]#VC@Active[သွား/v.common]\n\
             NC@PObj[စာ/n.objects]#VC@Active[နေ/v.common]\n",
        ))
        .unwrap();
        let input = parse_sentence_line("RC[မြန်/adv.manner]").unwrap();
        let seq = tag_greedy(&model, &input).unwrap();
        assert_eq!(
            seq.decisions[0].source,
            DecisionSource::FallbackUnknownFeature
        );
        // uniform weights tie; lexicographically first inventory tag wins
        assert_eq!(seq.tags(), vec!["Active"]);

        let seq = tag(
            &model,
            &input,
            TagOptions {
                fallback: FallbackPolicy::MostFrequent,
                ..TagOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq.tags(), vec!["Active"]); // Active: 3 of 6 observations
        assert_eq!(seq.decisions[0].score, 0.5);
        assert_eq!(
            seq.decisions[0].source,
            DecisionSource::FallbackUnknownFeature
        );
    }

    #[test]
    fn dead_transition_row_degrades_to_prior_only() {
        let model: M =
            Model::train(&corpus("NC@PSubj[က/n.person]\nVC@Active[စား/v.common]\n")).unwrap();
        let input = parse_sentence_line("NC[က/n.person]#VC[စား/v.common]").unwrap();
        let seq = tag_greedy(&model, &input).unwrap();
        assert_eq!(seq.tags(), vec!["PSubj", "Active"]);
        assert_eq!(seq.decisions[1].score, 1.0); // prior alone, not 0
        let seq = tag_lattice(&model, &input).unwrap();
        assert_eq!(seq.tags(), vec!["PSubj", "Active"]);
        assert!(seq.decisions.iter().all(|d| d.score > 0.0));
    }

    #[test]
    fn lattice_beats_greedy_on_a_myopic_trap() {
        // position 1: A is the greedy pick (prior 0.6) but strands the path;
        // B (0.4) keeps the certain transition into C
        let mut counts = CountTables::default();
        counts.feature_total.insert("pc.one".into(), 5);
        counts.emission.insert(
            "pc.one".into(),
            [("TagA".into(), 3u64), ("TagB".into(), 2u64)].into(),
        );
        counts.feature_total.insert("pc.two".into(), 1);
        counts
            .emission
            .insert("pc.two".into(), [("TagC".into(), 1u64)].into());
        counts.tag_total = [
            ("TagA".into(), 13u64),
            ("TagB".into(), 5u64),
            ("TagC".into(), 6u64),
            ("TagX".into(), 9u64),
        ]
        .into();
        counts.successor.insert(
            "TagA".into(),
            [("TagC".into(), 1u64), ("TagX".into(), 9u64)].into(),
        );
        counts
            .successor
            .insert("TagB".into(), [("TagC".into(), 5u64)].into());
        counts.verify().unwrap();
        let model: M = Model::from_counts(counts);

        let input = parse_sentence_line("NC[က/pc.one]#NC[ခ/pc.two]").unwrap();
        let greedy = tag_greedy(&model, &input).unwrap();
        let lattice = tag_lattice(&model, &input).unwrap();
        assert_eq!(greedy.tags(), vec!["TagA", "TagC"]);
        assert_eq!(lattice.tags(), vec!["TagB", "TagC"]);
        assert!((greedy.total_score() - 0.6 * 0.1).abs() < 1e-12);
        assert!((lattice.total_score() - 0.4 * 1.0).abs() < 1e-12);
        assert!(lattice.total_score() > greedy.total_score());
    }

    #[test]
    fn errors_for_empty_inputs() {
        let model = fixture_model();
        let empty = crate::corpus::AnnotatedSentence {
            chunks: vec![],
            terminated: false,
        };
        assert_eq!(
            tag_greedy(&model, &empty).unwrap_err(),
            TagError::EmptySentence
        );

        let hollow: M = Model::from_counts(CountTables::default());
        let input = parse_sentence_line("NC[က/n.person]").unwrap();
        assert_eq!(
            tag_greedy(&hollow, &input).unwrap_err(),
            TagError::EmptyModel
        );
    }

    #[test]
    fn gold_tags_render_the_golden_lines() {
        let leader = parse_sentence_line(&fixtures::golden("leader_input")).unwrap();
        let gold: TagSequence<f64> = TagSequence::from_tags(
            &[
                "PSubj", "SubjP", "PObj", "ObjP", "PPcomplO", "PcomplOP", "Active", "Null",
            ],
            DecodeMode::Greedy,
        );
        assert_eq!(
            render_tagged(&leader, &gold).unwrap(),
            fixtures::golden("leader_tagged")
        );

        // no SFC chunk: plain join, no merge
        let plain = parse_sentence_line("NC[က/n.person]#VC[စား/v.common]").unwrap();
        let gold: TagSequence<f64> =
            TagSequence::from_tags(&["Subj", "Active"], DecodeMode::Greedy);
        assert_eq!(render_tagged(&plain, &gold).unwrap(), "Subj[က]#Active[စား]");

        let wrong: TagSequence<f64> = TagSequence::from_tags(&["Subj"], DecodeMode::Greedy);
        assert!(matches!(
            render_tagged(&plain, &wrong),
            Err(TagError::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn annotated_input_tags_are_ignored() {
        let model = fixture_model();
        let gold = &fixtures::training_corpus()[1];
        let stripped = gold.stripped();
        let a = tag_greedy(&model, gold).unwrap();
        let b = tag_greedy(&model, &stripped).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decoding_is_deterministic() {
        let model = fixture_model();
        let mut rng = crate::rng::SplitMix64::new(404);
        for _ in 0..25 {
            let s = fixtures::random_sentence_sized(&mut rng, 1, 7, false);
            let a = tag(&model, &s, TagOptions::default()).unwrap();
            let b = tag(&model, &s, TagOptions::default()).unwrap();
            assert_eq!(a, b);
            let la = tag_lattice(&model, &s).unwrap();
            let lb = tag_lattice(&model, &s).unwrap();
            assert_eq!(la, lb);
            let fb = FallbackPolicy::Uniform;
            let lat = log_objective(&model, &s, &la, fb).unwrap();
            let grd = log_objective(&model, &s, &a, fb).unwrap();
            assert!(lat >= grd - 1e-9 || grd == f64::NEG_INFINITY);
        }
    }
}
