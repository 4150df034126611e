//! Deterministic generators and fixture access used by the test suites.
//!
//! Everything here is seeded through [`crate::rng::SplitMix64`], so test runs
//! are reproducible byte for byte.

use crate::corpus::{AnnotatedSentence, Chunk, ChunkType, PosTag, WordEntry, NULL_TAG};
use crate::rng::SplitMix64;

/// Fixture files checked in at the workspace root.
pub mod fixtures {
    use super::*;
    use std::path::PathBuf;

    pub fn path(rel: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .join(rel)
    }

    fn read(rel: &str) -> String {
        let p = path(rel);
        std::fs::read_to_string(&p)
            .unwrap_or_else(|e| panic!("cannot read fixture {}: {e}", p.display()))
    }

    /// The four fully annotated sentences, one line each.
    pub fn example_lines() -> Vec<String> {
        read("corpus/examples.txt")
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with("//"))
            .map(str::to_string)
            .collect()
    }

    /// Raw text of the training corpus (the annotated examples plus the synthetic
    /// disambiguation sentences).
    pub fn training_text() -> String {
        read("corpus/training.txt")
    }

    /// Parsed training corpus.
    pub fn training_corpus() -> Vec<AnnotatedSentence> {
        crate::corpus::parse_corpus(&training_text(), crate::corpus::LoadMode::Strict)
            .expect("training fixture parses")
            .sentences
    }

    /// One golden line (bicycle/leader/book, _input or _tagged).
    pub fn golden(name: &str) -> String {
        read(&format!("golden/{name}.txt")).trim_end().to_string()
    }

    /// A random structurally valid sentence. Covers every chunk type, one to
    /// five words per chunk, annotated or unannotated, normalization-stable
    /// POS tags only.
    pub fn random_sentence(rng: &mut SplitMix64) -> AnnotatedSentence {
        let annotated = rng.chance(1, 2);
        random_sentence_sized(rng, 1, 8, annotated)
    }

    /// A random fully annotated sentence (training form).
    pub fn random_annotated_sentence(rng: &mut SplitMix64, max_chunks: usize) -> AnnotatedSentence {
        random_sentence_sized(rng, 1, max_chunks, true)
    }

    pub fn random_sentence_sized(
        rng: &mut SplitMix64,
        min_chunks: usize,
        max_chunks: usize,
        annotated: bool,
    ) -> AnnotatedSentence {
        let n = rng.range(min_chunks, max_chunks.max(min_chunks));
        let chunks = (0..n).map(|_| random_chunk(rng, annotated)).collect();
        AnnotatedSentence {
            chunks,
            terminated: rng.chance(2, 3),
        }
    }

    /// A random corpus of fully annotated sentences.
    pub fn random_corpus(
        rng: &mut SplitMix64,
        max_sentences: usize,
        max_chunks: usize,
    ) -> Vec<AnnotatedSentence> {
        let n = rng.range(1, max_sentences);
        (0..n)
            .map(|_| random_sentence_sized(rng, 1, max_chunks, true))
            .collect()
    }

    const SYLLABLES: &[&str] = &[
        "က",
        "ခ",
        "စ",
        "တ",
        "န",
        "မ",
        "လ",
        "သ",
        "ရေ",
        "စာ",
        "နေ",
        "လူ",
        "မြို့",
        "သွား",
    ];

    const NON_NULL_TAGS: &[&str] = &[
        "Active", "Subj", "PSubj", "SubjP", "Obj", "PObj", "ObjP", "PPla", "PlaP", "PUse", "UseP",
        "PTim", "TimP", "PCau", "CauP", "PAim", "AimP", "CCC", "CCS", "CCA", "Ada", "PPcomplO",
        "PcomplOP", "PIobj", "IobjP",
    ];

    // bases: a mix of head-compatible and modifier bases; none of these are
    // rewritten by POS normalization, so serialized lines reparse identically.
    const BASES: &[(&str, &[&str])] = &[
        (
            "n",
            &[
                "person", "food", "time", "location", "objects", "animals", "natural",
            ],
        ),
        ("pron", &["person", "possessive"]),
        ("ppm", &["subj", "obj", "place", "time", "use", "cause"]),
        ("adj", &["dem"]),
        ("adv", &["manner"]),
        ("cc", &["chunk", "sent", "adj", "mean"]),
        ("v", &["common"]),
        ("part", &["number", "support", "type", "eg"]),
        ("sf", &["declarative"]),
    ];

    fn random_word(rng: &mut SplitMix64) -> String {
        let n = rng.range(1, 3);
        (0..n).map(|_| *rng.choose(SYLLABLES)).collect()
    }

    fn random_pos(rng: &mut SplitMix64) -> PosTag {
        let (base, cats) = rng.choose(BASES);
        PosTag::new(*base, *rng.choose(cats))
    }

    fn random_chunk(rng: &mut SplitMix64, annotated: bool) -> Chunk {
        let chunk_type = *rng.choose(&ChunkType::ALL);
        let n = rng.range(1, 5);
        let words = (0..n)
            .map(|_| WordEntry::new(random_word(rng), random_pos(rng)))
            .collect();
        let function_tag = if annotated {
            Some(if chunk_type == ChunkType::Sfc {
                NULL_TAG.to_string()
            } else {
                rng.choose(NON_NULL_TAGS).to_string()
            })
        } else {
            None
        };
        Chunk {
            chunk_type,
            function_tag,
            words,
        }
    }
}

/// Random acyclic (finite-language) grammars and strings drawn from them.
pub mod grammars {
    use super::*;
    use crate::grammar::Grammar;

    /// Generate a random finite-language grammar as rule text. Nonterminals
    /// are layered so rules only reference strictly lower layers, which keeps
    /// the grammar acyclic and every nonterminal productive.
    pub fn random_finite_grammar_text(rng: &mut SplitMix64) -> String {
        let terminals = ["a", "b", "c", "d", "e"];
        let levels = rng.range(1, 3);
        let mut names: Vec<Vec<String>> = Vec::new();
        for level in 0..=levels {
            let n = rng.range(1, 2);
            names.push((0..n).map(|i| format!("N{level}_{i}")).collect());
        }
        let mut lines = Vec::new();
        // start symbol first
        for level in (0..=levels).rev() {
            for idx in 0..names[level].len() {
                let alts = rng.range(1, 3);
                let mut rhs_alts = Vec::new();
                for _ in 0..alts {
                    let len = rng.range(1, 3);
                    let mut syms = Vec::new();
                    for _ in 0..len {
                        if level > 0 && rng.chance(1, 2) {
                            let lower = rng.below(level);
                            syms.push(rng.choose(&names[lower]).clone());
                        } else {
                            syms.push(rng.choose(&terminals).to_string());
                        }
                    }
                    rhs_alts.push(syms.join(" "));
                }
                lines.push(format!("{} -> {}", names[level][idx], rhs_alts.join(" | ")));
            }
        }
        lines.join("\n")
    }

    /// Derive a random string from the grammar by expanding leftmost
    /// nonterminals with random alternatives. The grammar must be acyclic.
    pub fn random_string(rng: &mut SplitMix64, grammar: &Grammar) -> Vec<String> {
        let mut form = vec![grammar.start().to_string()];
        loop {
            let Some(pos) = form.iter().position(|s| grammar.is_nonterminal(s)) else {
                return form;
            };
            let prods = grammar.productions_for(&form[pos]);
            let prod = &prods[rng.below(prods.len())];
            let replacement: Vec<String> = prod.rhs.iter().map(|s| s.to_string()).collect();
            form.splice(pos..=pos, replacement);
        }
    }
}
