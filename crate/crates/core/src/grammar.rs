//! Context-free grammars over function-tag terminals.
//!
//! Rule text format: one rule per line, `LHS -> ALT1 | ALT2 | ...`, symbols
//! whitespace-separated, `ε` for an empty alternative, `//` comments, blank
//! lines allowed. The first LHS is the start symbol; every symbol that never
//! appears as an LHS is a terminal.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Marker symbol for an empty alternative in rule text.
pub const EPSILON: &str = "ε";

/// Terminal admitted by `Subj -> subj-bare` (a subject tag with no
/// postposition pair).
pub const BARE_SUBJ: &str = "subj-bare";
/// Terminal admitted by `Obj -> obj-bare`.
pub const BARE_OBJ: &str = "obj-bare";

const DEFAULT_GRAMMAR_TEXT: &str = include_str!("../data/myanmar.grammar");
const EXTENSION_MARKER: &str = "// EXT";

/// One production `lhs -> rhs`; an empty `rhs` is an epsilon rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rhs.is_empty() {
            write!(f, "{} -> {}", self.lhs, EPSILON)
        } else {
            write!(f, "{} -> {}", self.lhs, self.rhs.join(" "))
        }
    }
}

/// A CFG 4-tuple: nonterminals, terminals, an ordered production list and a
/// start symbol. Production order is significant; it drives the parser's
/// preference among ambiguous derivations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    start: String,
    nonterminals: BTreeSet<String>,
    terminals: BTreeSet<String>,
    productions: Vec<Production>,
}

impl Grammar {
    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn nonterminals(&self) -> &BTreeSet<String> {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &BTreeSet<String> {
        &self.terminals
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn is_nonterminal(&self, sym: &str) -> bool {
        self.nonterminals.contains(sym)
    }

    pub fn is_terminal(&self, sym: &str) -> bool {
        self.terminals.contains(sym)
    }

    /// Productions with the given LHS, in production order.
    pub fn productions_for(&self, lhs: &str) -> Vec<&Production> {
        self.productions.iter().filter(|p| p.lhs == lhs).collect()
    }

    /// One production per line, preserving order; reparses to an equal
    /// grammar.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for p in &self.productions {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}: missing `->`")]
    MissingArrow { line: usize },
    #[error("line {line}: empty left-hand side")]
    EmptyLhs { line: usize },
    #[error("line {line}: left-hand side must be a single symbol")]
    MultiSymbolLhs { line: usize },
    #[error("line {line}: empty alternative (use `ε` for an epsilon rule)")]
    EmptyAlternative { line: usize },
    #[error("grammar has no rules")]
    Empty,
}

/// A parsed grammar plus non-fatal findings (currently duplicate rules).
#[derive(Debug, Clone)]
pub struct ParsedGrammar {
    pub grammar: Grammar,
    pub warnings: Vec<String>,
}

/// Parse rule text into a grammar.
pub fn parse_grammar_text(text: &str) -> Result<ParsedGrammar, GrammarError> {
    let mut productions: Vec<Production> = Vec::new();
    let mut warnings = Vec::new();
    let mut start = None;
    let mut seen: HashSet<(String, Vec<String>)> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.split_once("//") {
            Some((head, _)) => head,
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs_text) = line
            .split_once("->")
            .or_else(|| line.split_once('→'))
            .ok_or(GrammarError::MissingArrow { line: line_no })?;
        let lhs = lhs.trim();
        if lhs.is_empty() {
            return Err(GrammarError::EmptyLhs { line: line_no });
        }
        if lhs.split_whitespace().count() != 1 {
            return Err(GrammarError::MultiSymbolLhs { line: line_no });
        }
        if start.is_none() {
            start = Some(lhs.to_string());
        }
        for alt in rhs_text.split('|') {
            let symbols: Vec<String> = alt.split_whitespace().map(str::to_string).collect();
            let rhs = if symbols == [EPSILON] {
                Vec::new()
            } else if symbols.is_empty() || symbols.iter().any(|s| s == EPSILON) {
                return Err(GrammarError::EmptyAlternative { line: line_no });
            } else {
                symbols
            };
            if !seen.insert((lhs.to_string(), rhs.clone())) {
                warnings.push(format!(
                    "line {line_no}: duplicate rule `{lhs} -> {}`",
                    if rhs.is_empty() {
                        EPSILON.to_string()
                    } else {
                        rhs.join(" ")
                    }
                ));
                continue;
            }
            productions.push(Production {
                lhs: lhs.to_string(),
                rhs,
            });
        }
    }

    let start = start.ok_or(GrammarError::Empty)?;
    let nonterminals: BTreeSet<String> = productions.iter().map(|p| p.lhs.clone()).collect();
    let terminals: BTreeSet<String> = productions
        .iter()
        .flat_map(|p| p.rhs.iter())
        .filter(|s| !nonterminals.contains(*s))
        .cloned()
        .collect();

    Ok(ParsedGrammar {
        grammar: Grammar {
            start,
            nonterminals,
            terminals,
            productions,
        },
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Structural findings about a grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarReport {
    pub undefined_symbols: BTreeSet<String>,
    pub unreachable_nonterminals: BTreeSet<String>,
    pub unproductive_nonterminals: BTreeSet<String>,
    /// True when the nonterminal dependency graph has a cycle.
    pub recursive: bool,
    /// True iff the dependency graph is acyclic.
    pub language_finite: bool,
}

impl GrammarReport {
    pub fn render(&self) -> String {
        fn set(s: &BTreeSet<String>) -> String {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter().cloned().collect::<Vec<_>>().join(", ")
            }
        }
        format!(
            "undefined symbols:        {}\n\
             unreachable nonterminals: {}\n\
             unproductive nonterminals: {}\n\
             recursive:                {}\n\
             language finite:          {}\n",
            set(&self.undefined_symbols),
            set(&self.unreachable_nonterminals),
            set(&self.unproductive_nonterminals),
            self.recursive,
            self.language_finite,
        )
    }
}

/// Inspect a grammar for unreachable or unproductive nonterminals and for
/// recursion (which decides language finiteness).
pub fn validate(grammar: &Grammar) -> GrammarReport {
    // undefined symbols are impossible by construction (any non-LHS symbol is
    // classified as a terminal) but the check stays for grammars built by
    // other means later
    let undefined: BTreeSet<String> = grammar
        .productions
        .iter()
        .flat_map(|p| p.rhs.iter())
        .filter(|s| !grammar.is_nonterminal(s) && !grammar.is_terminal(s))
        .cloned()
        .collect();

    // reachability from the start symbol
    let mut reached: BTreeSet<&str> = BTreeSet::new();
    let mut queue = vec![grammar.start()];
    while let Some(sym) = queue.pop() {
        if !reached.insert(sym) {
            continue;
        }
        for p in grammar.productions.iter().filter(|p| p.lhs == sym) {
            for s in &p.rhs {
                if grammar.is_nonterminal(s) && !reached.contains(s.as_str()) {
                    queue.push(s);
                }
            }
        }
    }
    let unreachable: BTreeSet<String> = grammar
        .nonterminals
        .iter()
        .filter(|nt| !reached.contains(nt.as_str()))
        .cloned()
        .collect();

    // productivity fixpoint
    let mut productive: BTreeSet<&str> = BTreeSet::new();
    loop {
        let mut changed = false;
        for p in &grammar.productions {
            if productive.contains(p.lhs.as_str()) {
                continue;
            }
            let ok = p
                .rhs
                .iter()
                .all(|s| grammar.is_terminal(s) || productive.contains(s.as_str()));
            if ok {
                productive.insert(&p.lhs);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unproductive: BTreeSet<String> = grammar
        .nonterminals
        .iter()
        .filter(|nt| !productive.contains(nt.as_str()))
        .cloned()
        .collect();

    // cycle detection over nonterminal references
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for p in &grammar.productions {
        for s in &p.rhs {
            if grammar.is_nonterminal(s) {
                edges.entry(&p.lhs).or_default().insert(s);
            }
        }
    }
    let recursive = has_cycle(&edges);

    GrammarReport {
        undefined_symbols: undefined,
        unreachable_nonterminals: unreachable,
        unproductive_nonterminals: unproductive,
        recursive,
        language_finite: !recursive,
    }
}

fn has_cycle(edges: &BTreeMap<&str, BTreeSet<&str>>) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks: HashMap<&str, Mark> = HashMap::new();
    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        marks: &mut HashMap<&'a str, Mark>,
    ) -> bool {
        match marks.get(node).copied().unwrap_or(Mark::White) {
            Mark::Grey => return true,
            Mark::Black => return false,
            Mark::White => {}
        }
        marks.insert(node, Mark::Grey);
        if let Some(next) = edges.get(node) {
            for n in next {
                if visit(n, edges, marks) {
                    return true;
                }
            }
        }
        marks.insert(node, Mark::Black);
        false
    }
    let nodes: Vec<&str> = edges.keys().copied().collect();
    nodes.into_iter().any(|n| visit(n, edges, &mut marks))
}

// ---------------------------------------------------------------------------
// Built-in grammar
// ---------------------------------------------------------------------------

/// The built-in grammar: the proposed core rules followed by the extension
/// block (clause shapes for the documented sentence structures and pairing
/// rules for the remaining phrase roles).
pub fn default_grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| {
        parse_grammar_text(DEFAULT_GRAMMAR_TEXT)
            .expect("embedded grammar parses")
            .grammar
    })
}

/// The core rules alone, with every `// EXT` block stripped.
pub fn core_grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| {
        let cut = DEFAULT_GRAMMAR_TEXT
            .find(EXTENSION_MARKER)
            .unwrap_or(DEFAULT_GRAMMAR_TEXT.len());
        parse_grammar_text(&DEFAULT_GRAMMAR_TEXT[..cut])
            .expect("embedded core grammar parses")
            .grammar
    })
}

/// Raw text of the built-in grammar (identical to the checked-in asset).
pub fn default_grammar_text() -> &'static str {
    DEFAULT_GRAMMAR_TEXT
}

// ---------------------------------------------------------------------------
// Tag-to-terminal mapping
// ---------------------------------------------------------------------------

/// Result of mapping one function tag to grammar input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappedTag {
    /// The tag does not surface in the terminal sequence (Null).
    Dropped,
    Terminal(String),
}

/// Maps decoder output tags onto grammar terminals. The default map drops
/// `Null`, sends `Active` to `Verb`, routes the bare roles onto their renamed
/// terminals, and leaves everything else alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMap {
    dropped: BTreeSet<String>,
    renames: BTreeMap<String, String>,
}

impl Default for TagMap {
    fn default() -> Self {
        let mut renames = BTreeMap::new();
        renames.insert("Active".to_string(), "Verb".to_string());
        renames.insert("Subj".to_string(), BARE_SUBJ.to_string());
        renames.insert("Obj".to_string(), BARE_OBJ.to_string());
        let mut dropped = BTreeSet::new();
        dropped.insert(crate::corpus::NULL_TAG.to_string());
        TagMap { dropped, renames }
    }
}

impl TagMap {
    /// A map that drops nothing and renames nothing.
    pub fn identity() -> TagMap {
        TagMap {
            dropped: BTreeSet::new(),
            renames: BTreeMap::new(),
        }
    }

    pub fn map(&self, tag: &str) -> MappedTag {
        if self.dropped.contains(tag) {
            return MappedTag::Dropped;
        }
        match self.renames.get(tag) {
            Some(t) => MappedTag::Terminal(t.clone()),
            None => MappedTag::Terminal(tag.to_string()),
        }
    }

    /// Map a tag sequence onto terminals, recording for each terminal the
    /// index of the tag it came from.
    pub fn map_sequence<S: AsRef<str>>(&self, tags: &[S]) -> Vec<(usize, String)> {
        tags.iter()
            .enumerate()
            .filter_map(|(i, t)| match self.map(t.as_ref()) {
                MappedTag::Dropped => None,
                MappedTag::Terminal(term) => Some((i, term)),
            })
            .collect()
    }
}
