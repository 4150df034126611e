//! Command-line driver wiring the toolkit into shell pipelines: train a
//! model, tag chunked sentences, parse the tags into trees and derivations,
//! evaluate against gold annotations, and inspect grammars.
//!
//! All commands are line-oriented and deterministic: identical inputs and
//! flags produce byte-identical output.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use functag_core::corpus::{self, AnnotatedSentence, LoadMode};
use functag_core::eval::{self, EvalOptions};
use functag_core::grammar::{self, Grammar, TagMap};
use functag_core::model::{Model, ModelPaths, TrainOptions};
use functag_core::relations::{self, ParseOptions, PipelineOptions};
use functag_core::tagger::{DecodeMode, FallbackPolicy, TagOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "functag",
    version,
    about = "Function tagging and grammatical relations for chunked Myanmar sentences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Greedy,
    Lattice,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FallbackArg {
    Uniform,
    Mfreq,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TreeArg {
    Bracketed,
    Indented,
}

/// Decoding flags shared by the tagging commands.
#[derive(Debug, Clone, Copy, clap::Args)]
pub struct DecodeArgs {
    /// Decoding strategy.
    #[arg(long, value_enum, default_value = "greedy")]
    pub mode: ModeArg,
    /// Policy for head features never seen in training.
    #[arg(long, value_enum, default_value = "uniform")]
    pub fallback: FallbackArg,
    /// Additive smoothing weight (0 = plain relative frequencies).
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

impl DecodeArgs {
    fn tag_options(&self) -> TagOptions {
        TagOptions {
            mode: match self.mode {
                ModeArg::Greedy => DecodeMode::Greedy,
                ModeArg::Lattice => DecodeMode::Lattice,
            },
            fallback: match self.fallback {
                FallbackArg::Uniform => FallbackPolicy::Uniform,
                FallbackArg::Mfreq => FallbackPolicy::MostFrequent,
            },
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the prior/transition tables from an annotated corpus and
    /// write them beside the model stem.
    Train {
        /// Annotated corpus file(s), one sentence per line.
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        /// Output stem; writes STEM.prior.tbl, STEM.trans.tbl, STEM.counts.tbl.
        #[arg(long)]
        model: PathBuf,
        /// Report rejected lines instead of failing on them.
        #[arg(long)]
        lenient: bool,
        /// Also count begin-of-sentence pseudo-transitions.
        #[arg(long)]
        bos: bool,
    },
    /// Tag chunked input lines and print them in display form.
    Tag {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Exit nonzero when any line is rejected.
        #[arg(long)]
        strict: bool,
        /// Input files; stdin when omitted.
        files: Vec<PathBuf>,
    },
    /// Tag input lines and parse the tag sequence into a tree.
    Parse {
        #[arg(long)]
        model: PathBuf,
        /// Grammar file; the built-in grammar when omitted.
        #[arg(long)]
        grammar: Option<PathBuf>,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Tree rendering style.
        #[arg(long, value_enum, default_value = "bracketed")]
        tree: TreeArg,
        /// Cap on enumerated parse trees per sentence.
        #[arg(long, default_value_t = 64)]
        cap: usize,
        #[arg(long)]
        strict: bool,
        files: Vec<PathBuf>,
    },
    /// Print the numbered top-down derivation of each input.
    Derive {
        /// Model stem; required unless --from-tags is given.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        grammar: Option<PathBuf>,
        /// Treat input lines as whitespace-separated tag sequences instead of
        /// chunked sentences.
        #[arg(long)]
        from_tags: bool,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        strict: bool,
        files: Vec<PathBuf>,
    },
    /// Score tagging accuracy and parse coverage against gold annotations.
    Eval {
        /// Gold annotated corpus.
        #[arg(long)]
        corpus: PathBuf,
        /// Evaluate a pretrained model (conflicts with --split).
        #[arg(long, conflicts_with = "split")]
        model: Option<PathBuf>,
        /// Train/test split ratio over --corpus (e.g. 0.8).
        #[arg(long)]
        split: Option<f64>,
        /// Shuffle seed for --split.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training corpus used for pattern grouping (implied by --split).
        #[arg(long)]
        train_corpus: Option<PathBuf>,
        /// Report the seen-pattern and novel-pattern groups separately.
        #[arg(long)]
        group_novel: bool,
        #[arg(long)]
        grammar: Option<PathBuf>,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Emit flat group.metric=value lines instead of the table.
        #[arg(long)]
        kv: bool,
    },
    /// Check a grammar for recursion, unreachable and unproductive symbols.
    ValidateGrammar {
        #[arg(long)]
        grammar: Option<PathBuf>,
    },
}

/// Dispatch a parsed command over explicit streams; returns the exit code.
pub fn run(
    command: Command,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    match execute(command, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "functag: {e}");
            e.exit_code
        }
    }
}

struct CliError {
    exit_code: i32,
    message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        exit_code: EXIT_USAGE,
        message: message.into(),
    }
}

fn data(message: impl std::fmt::Display) -> CliError {
    CliError {
        exit_code: EXIT_DATA,
        message: message.to_string(),
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        data(format!("i/o error: {e}"))
    }
}

/// One input line with its provenance for diagnostics.
struct InputLine {
    source: String,
    line: usize,
    text: String,
}

fn read_inputs(files: &[PathBuf], stdin: &mut dyn BufRead) -> Result<Vec<InputLine>, CliError> {
    let mut out = Vec::new();
    if files.is_empty() {
        let mut text = String::new();
        stdin.read_to_string(&mut text)?;
        collect_lines("stdin", &text, &mut out);
    } else {
        for path in files {
            let text = std::fs::read_to_string(path)
                .map_err(|e| data(format!("{}: {e}", path.display())))?;
            collect_lines(&path.display().to_string(), &text, &mut out);
        }
    }
    Ok(out)
}

fn collect_lines(source: &str, text: &str, out: &mut Vec<InputLine>) {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        out.push(InputLine {
            source: source.to_string(),
            line: idx + 1,
            text: line.to_string(),
        });
    }
}

fn load_model(stem: &Path, alpha: f64) -> Result<Model<f64>, CliError> {
    if alpha < 0.0 {
        return Err(usage("--alpha must be non-negative"));
    }
    let paths = ModelPaths::from_stem(stem);
    let model = Model::load(&paths).map_err(data)?;
    Ok(model.with_alpha(alpha))
}

fn load_grammar(path: &Option<PathBuf>, stderr: &mut dyn Write) -> Result<Grammar, CliError> {
    match path {
        None => Ok(grammar::default_grammar().clone()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            let parsed = grammar::parse_grammar_text(&text)
                .map_err(|e| data(format!("{}: {e}", p.display())))?;
            for w in &parsed.warnings {
                let _ = writeln!(stderr, "{}: warning: {w}", p.display());
            }
            Ok(parsed.grammar)
        }
    }
}

fn load_gold_corpus(path: &Path) -> Result<Vec<AnnotatedSentence>, CliError> {
    let load = corpus::load_corpus(path, LoadMode::Strict)
        .map_err(|e| data(format!("{}: {e}", path.display())))?;
    Ok(load.sentences)
}

fn execute(
    command: Command,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    match command {
        Command::Train {
            corpus: corpus_paths,
            model,
            lenient,
            bos,
        } => {
            let mode = if lenient {
                LoadMode::Lenient
            } else {
                LoadMode::Strict
            };
            let mut sentences = Vec::new();
            for path in &corpus_paths {
                let load = corpus::load_corpus(path, mode)
                    .map_err(|e| data(format!("{}: {e}", path.display())))?;
                for d in &load.diagnostics {
                    let _ = writeln!(stderr, "{}:{}: corpus: {}", path.display(), d.line, d.error);
                }
                sentences.extend(load.sentences);
            }
            let trained = Model::<f64>::train_with(
                &sentences,
                TrainOptions {
                    begin_of_sentence: bos,
                },
            )
            .map_err(data)?;
            let paths = ModelPaths::from_stem(&model);
            trained.save(&paths).map_err(data)?;
            let _ = writeln!(
                stdout,
                "trained on {} sentence(s): {} features, {} tags",
                sentences.len(),
                trained.feature_inventory().len(),
                trained.tag_inventory().len()
            );
            Ok(EXIT_OK)
        }

        Command::Tag {
            model,
            decode,
            strict,
            files,
        } => {
            let model = load_model(&model, decode.alpha)?;
            let options = decode.tag_options();
            let mut failures = 0usize;
            for input in read_inputs(&files, stdin)? {
                match tag_one(&model, options, &input.text) {
                    Ok(line) => {
                        let _ = writeln!(stdout, "{line}");
                    }
                    Err((stage, msg)) => {
                        failures += 1;
                        let _ = writeln!(stderr, "{}:{}: {stage}: {msg}", input.source, input.line);
                    }
                }
            }
            Ok(exit_for(failures, strict))
        }

        Command::Parse {
            model,
            grammar,
            decode,
            tree,
            cap,
            strict,
            files,
        } => {
            let model = load_model(&model, decode.alpha)?;
            let grammar = load_grammar(&grammar, stderr)?;
            let map = TagMap::default();
            let options = PipelineOptions {
                tag: decode.tag_options(),
                parse: ParseOptions { cap: cap.max(1) },
            };
            let mut failures = 0usize;
            for input in read_inputs(&files, stdin)? {
                let sentence = match corpus::parse_sentence_line(&input.text) {
                    Ok(s) => s,
                    Err(e) => {
                        failures += 1;
                        let _ = writeln!(stderr, "{}:{}: corpus: {e}", input.source, input.line);
                        continue;
                    }
                };
                let out = match relations::run_pipeline(&model, &grammar, &map, &sentence, options)
                {
                    Ok(out) => out,
                    Err(e) => {
                        failures += 1;
                        let _ = writeln!(stderr, "{}:{}: tagger: {e}", input.source, input.line);
                        continue;
                    }
                };
                let _ = writeln!(stdout, "{}", out.rendered);
                match out.parse {
                    Ok(parse_tree) => match tree {
                        TreeArg::Bracketed => {
                            let _ = writeln!(stdout, "{}", relations::render_tree(&parse_tree));
                        }
                        TreeArg::Indented => {
                            let _ =
                                write!(stdout, "{}", relations::render_tree_indented(&parse_tree));
                            let _ = writeln!(stdout);
                        }
                    },
                    Err(rejection) => {
                        failures += 1;
                        let _ = writeln!(
                            stderr,
                            "{}:{}: relations: {rejection}",
                            input.source, input.line
                        );
                    }
                }
            }
            Ok(exit_for(failures, strict))
        }

        Command::Derive {
            model,
            grammar,
            from_tags,
            decode,
            strict,
            files,
        } => {
            let grammar = load_grammar(&grammar, stderr)?;
            let map = TagMap::default();
            let model = match (&model, from_tags) {
                (Some(stem), _) => Some(load_model(stem, decode.alpha)?),
                (None, true) => None,
                (None, false) => {
                    return Err(usage("derive requires --model unless --from-tags is given"))
                }
            };
            let options = decode.tag_options();
            let mut failures = 0usize;
            let mut first = true;
            for input in read_inputs(&files, stdin)? {
                let tags: Vec<String> = if from_tags {
                    input.text.split_whitespace().map(str::to_string).collect()
                } else {
                    let model = model.as_ref().expect("model required above");
                    match tag_sequence_of(model, options, &input.text) {
                        Ok(tags) => tags,
                        Err((stage, msg)) => {
                            failures += 1;
                            let _ =
                                writeln!(stderr, "{}:{}: {stage}: {msg}", input.source, input.line);
                            continue;
                        }
                    }
                };
                match relations::derive(&grammar, &map, &tags) {
                    Ok(trace) => {
                        if !first {
                            let _ = writeln!(stdout);
                        }
                        first = false;
                        let _ = write!(stdout, "{}", trace.render());
                    }
                    Err(rejection) => {
                        failures += 1;
                        let _ = writeln!(
                            stderr,
                            "{}:{}: relations: {rejection}",
                            input.source, input.line
                        );
                    }
                }
            }
            Ok(exit_for(failures, strict))
        }

        Command::Eval {
            corpus: corpus_path,
            model,
            split,
            seed,
            train_corpus,
            group_novel,
            grammar,
            decode,
            kv,
        } => {
            let grammar = load_grammar(&grammar, stderr)?;
            let map = TagMap::default();
            let gold_all = load_gold_corpus(&corpus_path)?;
            let options = EvalOptions {
                tag: decode.tag_options(),
            };

            let (trained, train_set, gold) = match (model, split) {
                (Some(stem), None) => {
                    let m = load_model(&stem, decode.alpha)?;
                    let train_set = match &train_corpus {
                        Some(p) => Some(load_gold_corpus(p)?),
                        None => None,
                    };
                    (m, train_set, gold_all)
                }
                (None, Some(ratio)) => {
                    let (train, test) = eval::split_corpus(&gold_all, ratio, seed).map_err(data)?;
                    let m = Model::<f64>::train(&train).map_err(data)?;
                    let m = if decode.alpha > 0.0 {
                        m.with_alpha(decode.alpha)
                    } else {
                        m
                    };
                    (m, Some(train), test)
                }
                (None, None) => return Err(usage("eval requires --model or --split")),
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };

            let reports = if group_novel {
                let train_set = train_set
                    .ok_or_else(|| usage("--group-novel requires --train-corpus (or --split)"))?;
                eval::evaluate_groups(&trained, &grammar, &map, &train_set, &gold, options)
                    .map_err(data)?
            } else {
                vec![
                    eval::evaluate(&trained, &grammar, &map, &gold, "all sentences", options)
                        .map_err(data)?,
                ]
            };

            if kv {
                let _ = write!(stdout, "{}", eval::render_report_kv(&reports));
            } else {
                let _ = write!(stdout, "{}", eval::render_report(&reports));
            }
            Ok(EXIT_OK)
        }

        Command::ValidateGrammar {
            grammar: grammar_path,
        } => {
            let grammar = load_grammar(&grammar_path, stderr)?;
            let report = grammar::validate(&grammar);
            let _ = writeln!(
                stdout,
                "start symbol:             {}\nnonterminals:             {}\nterminals:                {}\nproductions:              {}",
                grammar.start(),
                grammar.nonterminals().len(),
                grammar.terminals().len(),
                grammar.productions().len(),
            );
            let _ = write!(stdout, "{}", report.render());
            Ok(EXIT_OK)
        }
    }
}

fn exit_for(failures: usize, strict: bool) -> i32 {
    if failures > 0 && strict {
        EXIT_DATA
    } else {
        EXIT_OK
    }
}

fn tag_one(
    model: &Model<f64>,
    options: TagOptions,
    text: &str,
) -> Result<String, (&'static str, String)> {
    let sentence = corpus::parse_sentence_line(text).map_err(|e| ("corpus", e.to_string()))?;
    let seq = functag_core::tagger::tag(model, &sentence, options)
        .map_err(|e| ("tagger", e.to_string()))?;
    functag_core::tagger::render_tagged(&sentence, &seq).map_err(|e| ("tagger", e.to_string()))
}

fn tag_sequence_of(
    model: &Model<f64>,
    options: TagOptions,
    text: &str,
) -> Result<Vec<String>, (&'static str, String)> {
    let sentence = corpus::parse_sentence_line(text).map_err(|e| ("corpus", e.to_string()))?;
    let seq = functag_core::tagger::tag(model, &sentence, options)
        .map_err(|e| ("tagger", e.to_string()))?;
    Ok(seq.tags().into_iter().map(str::to_string).collect())
}
