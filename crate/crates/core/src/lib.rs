//! Function tagging and grammatical relations for chunked Myanmar sentences.
//!
//! The pipeline: parse annotated corpus lines, estimate prior and transition
//! tables by relative frequency, decode a function tag per chunk, then parse
//! the tag sequence with a context-free grammar into trees and derivation
//! traces.
//!
//! Probability and score arithmetic is generic over the scalar type (any
//! [`num::Prob`], i.e. `f32`/`f64`); the aliases at the crate root pin `f64`.

pub mod corpus;
pub mod eval;
pub mod grammar;
pub mod model;
pub mod num;
pub mod relations;
pub mod rng;
pub mod tagger;
pub mod testkit;

/// Model over `f64` probabilities.
pub type Model = model::Model<f64>;
/// Tag decision over `f64` scores.
pub type TagDecision = tagger::TagDecision<f64>;
/// Tag sequence over `f64` scores.
pub type TagSequence = tagger::TagSequence<f64>;
/// Evaluation report over `f64` ratios.
pub type EvalReport = eval::EvalReport<f64>;
/// Pipeline output over `f64` scores.
pub type PipelineOutput = relations::PipelineOutput<f64>;
