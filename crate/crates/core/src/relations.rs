//! Grammatical relations: parse a function-tag sequence against a grammar,
//! producing parse trees and leftmost top-down derivation traces, or a
//! structured rejection.
//!
//! The engine is an Earley chart parser, so arbitrary context-free grammars
//! terminate, including recursive and ambiguous ones. Trees are enumerated in
//! a fixed preference order: earlier productions win at every choice point,
//! and the leftmost child takes the longest span first. The derivation trace
//! is the leftmost linearization of the preferred tree.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::corpus::AnnotatedSentence;
use crate::grammar::{Grammar, Production, TagMap, EPSILON};
use crate::model::Model;
use crate::num::Prob;
use crate::tagger::{render_tagged, tag, TagError, TagOptions, TagSequence};

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

/// A parse tree node. A node without children is a terminal leaf and may
/// carry the surface words of the chunk it spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
    pub surface: Option<String>,
}

impl ParseTree {
    pub fn leaf(label: impl Into<String>) -> ParseTree {
        ParseTree {
            label: label.into(),
            children: Vec::new(),
            surface: None,
        }
    }

    pub fn leaf_with_surface(label: impl Into<String>, surface: impl Into<String>) -> ParseTree {
        ParseTree {
            label: label.into(),
            children: Vec::new(),
            surface: Some(surface.into()),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> ParseTree {
        ParseTree {
            label: label.into(),
            children,
            surface: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Leaf labels from left to right (the yield of the tree). Epsilon
    /// placeholders under empty expansions are not part of the yield.
    pub fn leaf_labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.is_leaf() {
            if self.label != EPSILON {
                out.push(&self.label);
            }
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    fn leaves_mut(&mut self, out: &mut Vec<*mut ParseTree>) {
        if self.is_leaf() {
            if self.label != EPSILON {
                out.push(self as *mut ParseTree);
            }
        } else {
            for c in &mut self.children {
                c.leaves_mut(out);
            }
        }
    }
}

/// Single-line bracketed rendering: internal nodes as `(label children...)`,
/// leaves as `(label surface)` when they carry words, else the bare label.
pub fn render_tree(tree: &ParseTree) -> String {
    let mut out = String::new();
    write_bracketed(tree, &mut out);
    out
}

fn write_bracketed(tree: &ParseTree, out: &mut String) {
    if tree.is_leaf() {
        match &tree.surface {
            Some(words) => {
                out.push('(');
                out.push_str(&tree.label);
                out.push(' ');
                out.push_str(words);
                out.push(')');
            }
            None => out.push_str(&tree.label),
        }
        return;
    }
    out.push('(');
    out.push_str(&tree.label);
    for c in &tree.children {
        out.push(' ');
        write_bracketed(c, out);
    }
    out.push(')');
}

/// Multi-line rendering with two-space indentation.
pub fn render_tree_indented(tree: &ParseTree) -> String {
    let mut out = String::new();
    write_indented(tree, 0, &mut out);
    out
}

fn write_indented(tree: &ParseTree, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(&tree.label);
    if let Some(words) = &tree.surface {
        out.push(' ');
        out.push_str(words);
    }
    out.push('\n');
    for c in &tree.children {
        write_indented(c, depth + 1, out);
    }
}

/// Read a bracketed tree back. `(X atom)` parses as a leaf labelled `X`
/// carrying surface `atom`; a bare atom is a surface-less leaf.
pub fn parse_tree_text(text: &str) -> Result<ParseTree, String> {
    let tokens = tokenize_tree(text);
    let mut pos = 0;
    let tree = parse_tree_tokens(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("trailing tokens after tree (at token {pos})"));
    }
    Ok(tree)
}

enum TreeToken {
    Open,
    Close,
    Atom(String),
}

fn tokenize_tree(text: &str) -> Vec<TreeToken> {
    let mut tokens = Vec::new();
    let mut atom = String::new();
    for c in text.chars() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !atom.is_empty() {
                tokens.push(TreeToken::Atom(std::mem::take(&mut atom)));
            }
            match c {
                '(' => tokens.push(TreeToken::Open),
                ')' => tokens.push(TreeToken::Close),
                _ => {}
            }
        } else {
            atom.push(c);
        }
    }
    if !atom.is_empty() {
        tokens.push(TreeToken::Atom(atom));
    }
    tokens
}

fn parse_tree_tokens(tokens: &[TreeToken], pos: &mut usize) -> Result<ParseTree, String> {
    match tokens.get(*pos) {
        Some(TreeToken::Atom(a)) => {
            *pos += 1;
            Ok(ParseTree::leaf(a.clone()))
        }
        Some(TreeToken::Open) => {
            *pos += 1;
            let label = match tokens.get(*pos) {
                Some(TreeToken::Atom(a)) => a.clone(),
                _ => return Err("expected a label after `(`".to_string()),
            };
            *pos += 1;
            let mut children = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(TreeToken::Close) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => children.push(parse_tree_tokens(tokens, pos)?),
                    None => return Err("unclosed `(`".to_string()),
                }
            }
            // `(X atom)` is the leaf-with-surface form, except the epsilon
            // placeholder which marks an empty expansion
            if children.len() == 1
                && children[0].is_leaf()
                && children[0].surface.is_none()
                && children[0].label != EPSILON
            {
                let surface = children.pop().expect("one child").label;
                return Ok(ParseTree::leaf_with_surface(label, surface));
            }
            Ok(ParseTree::node(label, children))
        }
        _ => Err("expected a tree".to_string()),
    }
}

// ---------------------------------------------------------------------------
// Derivation traces
// ---------------------------------------------------------------------------

/// One derivation step: the sentential form after applying `rule` to the
/// leftmost nonterminal of the previous form. The first step has no rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationStep {
    pub form: Vec<String>,
    pub rule: Option<Production>,
}

/// A leftmost top-down derivation from the start symbol to the terminal
/// sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTrace {
    pub steps: Vec<DerivationStep>,
}

impl DerivationTrace {
    /// Numbered rendering in the published table layout:
    /// `N. >> FORM  [RULE]`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            let rule = match &step.rule {
                None => "start".to_string(),
                Some(p) => p.to_string(),
            };
            let prefix = if i == 0 { "" } else { ">> " };
            out.push_str(&format!(
                "{}. {}{}  [{}]\n",
                i + 1,
                prefix,
                step.form.join(" "),
                rule
            ));
        }
        out
    }

    /// Rebuild the parse tree by replaying the steps; inverse of the trace
    /// construction, used to check derivation validity.
    pub fn replay(&self) -> Result<ParseTree, String> {
        let start = self
            .steps
            .first()
            .filter(|s| s.form.len() == 1 && s.rule.is_none())
            .ok_or("trace must begin with the bare start symbol")?;
        let mut root = ParseTree::leaf(start.form[0].clone());
        for step in &self.steps[1..] {
            let rule = step.rule.as_ref().ok_or("non-initial step lacks a rule")?;
            let mut leaves: Vec<*mut ParseTree> = Vec::new();
            root.leaves_mut(&mut leaves);
            // the leftmost leaf whose label matches the rule's LHS and which
            // is still expandable must be the leftmost nonterminal
            let mut applied = false;
            for leaf in leaves {
                // SAFETY: pointers collected from a live mutable traversal,
                // used one-at-a-time before any further structural change
                let node = unsafe { &mut *leaf };
                if node.label == rule.lhs {
                    node.children = if rule.rhs.is_empty() {
                        vec![ParseTree::leaf(EPSILON)]
                    } else {
                        rule.rhs
                            .iter()
                            .map(|s| ParseTree::leaf(s.clone()))
                            .collect()
                    };
                    applied = true;
                    break;
                }
            }
            if !applied {
                return Err(format!("rule `{rule}` does not apply"));
            }
        }
        Ok(root)
    }
}

/// Build the leftmost derivation of a tree: rules appear in preorder.
pub fn derivation_of_tree(tree: &ParseTree, grammar: &Grammar) -> DerivationTrace {
    let mut steps = vec![DerivationStep {
        form: vec![tree.label.clone()],
        rule: None,
    }];
    let mut form = vec![tree.label.clone()];
    let mut nodes: Vec<&ParseTree> = Vec::new();
    preorder_internal(tree, &mut nodes);
    for node in nodes {
        let idx = form
            .iter()
            .position(|s| grammar.is_nonterminal(s))
            .expect("a pending internal node implies a nonterminal in the form");
        debug_assert_eq!(form[idx], node.label);
        let rhs: Vec<String> = node.children.iter().map(|c| c.label.clone()).collect();
        form.splice(idx..=idx, rhs.iter().cloned());
        steps.push(DerivationStep {
            form: form.clone(),
            rule: Some(Production {
                lhs: node.label.clone(),
                rhs,
            }),
        });
    }
    DerivationTrace { steps }
}

fn preorder_internal<'a>(tree: &'a ParseTree, out: &mut Vec<&'a ParseTree>) {
    if tree.is_leaf() {
        return;
    }
    out.push(tree);
    for c in &tree.children {
        preorder_internal(c, out);
    }
}

// ---------------------------------------------------------------------------
// Rejections
// ---------------------------------------------------------------------------

/// Why a tag sequence was not accepted by the grammar.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Rejection {
    /// The mapped terminal sequence that was attempted.
    pub terminals: Vec<String>,
    /// Length of the longest prefix that is a prefix of some sentence in the
    /// language.
    pub viable_prefix: usize,
    /// First input symbol that is not a terminal of the grammar, if any.
    pub unknown: Option<(usize, String)>,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tag sequence not derivable (longest viable prefix: {})",
            if self.viable_prefix == 0 {
                "none".to_string()
            } else {
                self.terminals[..self.viable_prefix].join(" ")
            }
        )?;
        if let Some((i, sym)) = &self.unknown {
            write!(f, "; unknown terminal `{sym}` at position {i}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Earley engine
// ---------------------------------------------------------------------------

/// Completed spans keyed by (production or nonterminal id, origin).
type SpanTable = HashMap<(usize, usize), BTreeSet<usize>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: usize,
    dot: usize,
    origin: usize,
}

struct Engine<'g> {
    names: Vec<&'g str>,
    ids: HashMap<&'g str, usize>,
    is_nt: Vec<bool>,
    prods: Vec<(usize, Vec<usize>)>,
    by_lhs: Vec<Vec<usize>>,
    nullable: Vec<bool>,
    start: usize,
}

const UNKNOWN_SYM: usize = usize::MAX;

impl<'g> Engine<'g> {
    fn new(grammar: &'g Grammar) -> Engine<'g> {
        let mut names: Vec<&str> = Vec::new();
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let intern = |s: &'g str, names: &mut Vec<&'g str>, ids: &mut HashMap<&'g str, usize>| {
            *ids.entry(s).or_insert_with(|| {
                names.push(s);
                names.len() - 1
            })
        };
        for nt in grammar.nonterminals() {
            intern(nt, &mut names, &mut ids);
        }
        for t in grammar.terminals() {
            intern(t, &mut names, &mut ids);
        }
        let is_nt: Vec<bool> = names.iter().map(|s| grammar.is_nonterminal(s)).collect();
        let prods: Vec<(usize, Vec<usize>)> = grammar
            .productions()
            .iter()
            .map(|p| {
                (
                    ids[p.lhs.as_str()],
                    p.rhs.iter().map(|s| ids[s.as_str()]).collect(),
                )
            })
            .collect();
        let mut by_lhs = vec![Vec::new(); names.len()];
        for (idx, (lhs, _)) in prods.iter().enumerate() {
            by_lhs[*lhs].push(idx);
        }
        // nullable fixpoint
        let mut nullable = vec![false; names.len()];
        loop {
            let mut changed = false;
            for (lhs, rhs) in &prods {
                if !nullable[*lhs] && rhs.iter().all(|s| nullable[*s]) {
                    nullable[*lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let start = ids[grammar.start()];
        Engine {
            names,
            ids,
            is_nt,
            prods,
            by_lhs,
            nullable,
            start,
        }
    }

    fn id_of(&self, sym: &str) -> usize {
        self.ids.get(sym).copied().unwrap_or(UNKNOWN_SYM)
    }

    /// Build the Earley chart. Returns the state sets.
    fn chart(&self, input: &[usize]) -> Vec<Vec<Item>> {
        let n = input.len();
        let mut sets: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];

        let push =
            |sets: &mut Vec<Vec<Item>>, seen: &mut Vec<HashSet<Item>>, k: usize, item: Item| {
                if seen[k].insert(item) {
                    sets[k].push(item);
                }
            };

        for &p in &self.by_lhs[self.start] {
            push(
                &mut sets,
                &mut seen,
                0,
                Item {
                    prod: p,
                    dot: 0,
                    origin: 0,
                },
            );
        }

        for k in 0..=n {
            let mut i = 0;
            while i < sets[k].len() {
                let item = sets[k][i];
                i += 1;
                let (lhs, rhs) = &self.prods[item.prod];
                if item.dot < rhs.len() {
                    let sym = rhs[item.dot];
                    if sym != UNKNOWN_SYM && self.is_nt[sym] {
                        // predict
                        for &p in &self.by_lhs[sym] {
                            push(
                                &mut sets,
                                &mut seen,
                                k,
                                Item {
                                    prod: p,
                                    dot: 0,
                                    origin: k,
                                },
                            );
                        }
                        // nullable shortcut: the predicted symbol may derive ε
                        if self.nullable[sym] {
                            push(
                                &mut sets,
                                &mut seen,
                                k,
                                Item {
                                    prod: item.prod,
                                    dot: item.dot + 1,
                                    origin: item.origin,
                                },
                            );
                        }
                    } else if k < n && input[k] == sym {
                        // scan
                        push(
                            &mut sets,
                            &mut seen,
                            k + 1,
                            Item {
                                prod: item.prod,
                                dot: item.dot + 1,
                                origin: item.origin,
                            },
                        );
                    }
                } else {
                    // complete
                    let mut j = 0;
                    while j < sets[item.origin].len() {
                        let parent = sets[item.origin][j];
                        j += 1;
                        let (_, prhs) = &self.prods[parent.prod];
                        if parent.dot < prhs.len() && prhs[parent.dot] == *lhs {
                            push(
                                &mut sets,
                                &mut seen,
                                k,
                                Item {
                                    prod: parent.prod,
                                    dot: parent.dot + 1,
                                    origin: parent.origin,
                                },
                            );
                        }
                    }
                }
            }
        }
        sets
    }

    fn accepted(&self, sets: &[Vec<Item>], n: usize) -> bool {
        sets[n].iter().any(|item| {
            let (lhs, rhs) = &self.prods[item.prod];
            *lhs == self.start && item.dot == rhs.len() && item.origin == 0
        })
    }

    fn viable_prefix(&self, sets: &[Vec<Item>]) -> usize {
        sets.iter().rposition(|s| !s.is_empty()).unwrap_or(0)
    }

    /// Completed spans per (production, origin) and per (nonterminal, origin).
    fn span_tables(&self, sets: &[Vec<Item>]) -> (SpanTable, SpanTable) {
        let mut prod_spans: SpanTable = HashMap::new();
        let mut nt_spans: SpanTable = HashMap::new();
        for (end, set) in sets.iter().enumerate() {
            for item in set {
                let (lhs, rhs) = &self.prods[item.prod];
                if item.dot == rhs.len() {
                    prod_spans
                        .entry((item.prod, item.origin))
                        .or_default()
                        .insert(end);
                    nt_spans.entry((*lhs, item.origin)).or_default().insert(end);
                }
            }
        }
        (prod_spans, nt_spans)
    }
}

/// Tree enumeration over a finished chart.
struct TreeBuilder<'e, 'g> {
    engine: &'e Engine<'g>,
    input: Vec<usize>,
    prod_spans: SpanTable,
    nt_spans: SpanTable,
}

impl TreeBuilder<'_, '_> {
    /// Up to `cap` trees for `sym` over `[i, j)`, in preference order.
    /// `path` guards against unit-cycle re-entry on the same span (such
    /// derivations form infinite families and are skipped).
    fn symbol_trees(
        &self,
        sym: usize,
        i: usize,
        j: usize,
        cap: usize,
        path: &mut Vec<(usize, usize, usize)>,
    ) -> Vec<ParseTree> {
        if cap == 0 {
            return Vec::new();
        }
        if !self.engine.is_nt[sym] {
            if j == i + 1 && self.input[i] == sym {
                return vec![ParseTree::leaf(self.engine.names[sym])];
            }
            return Vec::new();
        }
        if path.contains(&(sym, i, j)) {
            return Vec::new();
        }
        path.push((sym, i, j));
        let mut out = Vec::new();
        for &p in &self.engine.by_lhs[sym] {
            if out.len() >= cap {
                break;
            }
            if !self
                .prod_spans
                .get(&(p, i))
                .is_some_and(|ends| ends.contains(&j))
            {
                continue;
            }
            let (_, rhs) = &self.engine.prods[p];
            let mut splits = Vec::new();
            self.enumerate_splits(rhs, i, j, &mut Vec::new(), &mut splits, cap);
            for split in splits {
                if out.len() >= cap {
                    break;
                }
                let child_lists: Vec<Vec<ParseTree>> = split
                    .iter()
                    .map(|&(s, a, b)| self.symbol_trees(s, a, b, cap - out.len(), path))
                    .collect();
                if child_lists.iter().any(|l| l.is_empty()) && !rhs.is_empty() {
                    continue;
                }
                self.product(sym, &child_lists, cap, &mut out);
            }
        }
        path.pop();
        out
    }

    /// Split points for the remaining `rhs` symbols spanning `[pos, end)`;
    /// the leftmost symbol takes the longest span first.
    fn enumerate_splits(
        &self,
        rhs: &[usize],
        pos: usize,
        end: usize,
        acc: &mut Vec<(usize, usize, usize)>,
        out: &mut Vec<Vec<(usize, usize, usize)>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        let Some((&sym, rest)) = rhs.split_first() else {
            if pos == end {
                out.push(acc.clone());
            }
            return;
        };
        if !self.engine.is_nt[sym] {
            if pos < end && self.input[pos] == sym {
                acc.push((sym, pos, pos + 1));
                self.enumerate_splits(rest, pos + 1, end, acc, out, cap);
                acc.pop();
            }
            return;
        }
        let Some(ends) = self.nt_spans.get(&(sym, pos)) else {
            return;
        };
        for &e in ends.iter().rev() {
            if e > end {
                continue;
            }
            acc.push((sym, pos, e));
            self.enumerate_splits(rest, e, end, acc, out, cap);
            acc.pop();
            if out.len() >= cap {
                return;
            }
        }
    }

    /// Cartesian product of per-child tree lists, leftmost child most
    /// significant, capped.
    fn product(
        &self,
        sym: usize,
        child_lists: &[Vec<ParseTree>],
        cap: usize,
        out: &mut Vec<ParseTree>,
    ) {
        if child_lists.is_empty() {
            // empty expansion: a placeholder leaf keeps the node internal
            if out.len() < cap {
                out.push(ParseTree::node(
                    self.engine.names[sym],
                    vec![ParseTree::leaf(EPSILON)],
                ));
            }
            return;
        }
        let mut indices = vec![0usize; child_lists.len()];
        loop {
            if out.len() >= cap {
                return;
            }
            let children: Vec<ParseTree> = indices
                .iter()
                .zip(child_lists)
                .map(|(&ix, list)| list[ix].clone())
                .collect();
            out.push(ParseTree::node(self.engine.names[sym], children));
            // odometer increment, rightmost child varies fastest
            let mut k = child_lists.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                indices[k] += 1;
                if indices[k] < child_lists[k].len() {
                    break;
                }
                indices[k] = 0;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Enumeration limits for `parse_all`.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Maximum number of trees to enumerate.
    pub cap: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { cap: 64 }
    }
}

/// The enumerated parse trees of an accepted input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseForest {
    pub trees: Vec<ParseTree>,
    /// Set when enumeration stopped at the cap.
    pub truncated: bool,
}

impl ParseForest {
    /// Number of distinct trees enumerated (a lower bound when truncated).
    pub fn ambiguity(&self) -> usize {
        self.trees.len()
    }
}

fn map_terminals<S: AsRef<str>>(map: &TagMap, tags: &[S]) -> Vec<String> {
    map.map_sequence(tags).into_iter().map(|(_, t)| t).collect()
}

/// True iff the mapped tag sequence is in the grammar's language.
pub fn recognize<S: AsRef<str>>(grammar: &Grammar, map: &TagMap, tags: &[S]) -> bool {
    let terminals = map_terminals(map, tags);
    let engine = Engine::new(grammar);
    let input: Vec<usize> = terminals.iter().map(|t| engine.id_of(t)).collect();
    let sets = engine.chart(&input);
    engine.accepted(&sets, input.len())
}

/// Recognition with diagnostics: `Ok` for members of the language, otherwise
/// a rejection naming the longest viable prefix and any unknown terminal.
pub fn analyze<S: AsRef<str>>(
    grammar: &Grammar,
    map: &TagMap,
    tags: &[S],
) -> Result<(), Rejection> {
    let terminals = map_terminals(map, tags);
    let engine = Engine::new(grammar);
    let input: Vec<usize> = terminals.iter().map(|t| engine.id_of(t)).collect();
    let sets = engine.chart(&input);
    if engine.accepted(&sets, input.len()) {
        return Ok(());
    }
    let unknown = terminals
        .iter()
        .enumerate()
        .find(|(i, _)| input[*i] == UNKNOWN_SYM || !grammar.is_terminal(terminals[*i].as_str()))
        .map(|(i, t)| (i, t.clone()));
    Err(Rejection {
        viable_prefix: engine.viable_prefix(&sets).min(terminals.len()),
        terminals,
        unknown,
    })
}

/// Enumerate parse trees for the mapped tag sequence, in preference order,
/// up to the configured cap. Empty iff the input is not recognized.
pub fn parse_all<S: AsRef<str>>(
    grammar: &Grammar,
    map: &TagMap,
    tags: &[S],
    options: ParseOptions,
) -> ParseForest {
    let terminals = map_terminals(map, tags);
    parse_terminals(grammar, &terminals, options)
}

fn parse_terminals(grammar: &Grammar, terminals: &[String], options: ParseOptions) -> ParseForest {
    let engine = Engine::new(grammar);
    let input: Vec<usize> = terminals.iter().map(|t| engine.id_of(t)).collect();
    let sets = engine.chart(&input);
    if !engine.accepted(&sets, input.len()) {
        return ParseForest {
            trees: Vec::new(),
            truncated: false,
        };
    }
    let (prod_spans, nt_spans) = engine.span_tables(&sets);
    let builder = TreeBuilder {
        engine: &engine,
        input,
        prod_spans,
        nt_spans,
    };
    // enumerate one past the cap to learn whether the cap truncates
    let mut trees = builder.symbol_trees(
        engine.start,
        0,
        terminals.len(),
        options.cap + 1,
        &mut Vec::new(),
    );
    let truncated = trees.len() > options.cap;
    trees.truncate(options.cap);
    ParseForest { trees, truncated }
}

/// The leftmost top-down derivation of the preferred parse.
pub fn derive<S: AsRef<str>>(
    grammar: &Grammar,
    map: &TagMap,
    tags: &[S],
) -> Result<DerivationTrace, Rejection> {
    let forest = parse_all(grammar, map, tags, ParseOptions { cap: 1 });
    match forest.trees.into_iter().next() {
        Some(tree) => Ok(derivation_of_tree(&tree, grammar)),
        None => Err(analyze(grammar, map, tags).expect_err("unrecognized input must reject")),
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Options for the end-to-end pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions {
    pub tag: TagOptions,
    pub parse: ParseOptions,
}

/// Output of the end-to-end pipeline for one sentence.
#[derive(Debug, Clone)]
pub struct PipelineOutput<F> {
    /// The decoded tag sequence.
    pub tags: TagSequence<F>,
    /// The tagged line in display form.
    pub rendered: String,
    /// The preferred parse with surface words on the leaves, or the
    /// rejection diagnostics.
    pub parse: Result<ParseTree, Rejection>,
}

/// Tag a sentence, map the tags onto grammar terminals, and parse them.
pub fn run_pipeline<F: Prob>(
    model: &Model<F>,
    grammar: &Grammar,
    map: &TagMap,
    sentence: &AnnotatedSentence,
    options: PipelineOptions,
) -> Result<PipelineOutput<F>, TagError> {
    let tags = tag(model, sentence, options.tag)?;
    let rendered = render_tagged(sentence, &tags)?;
    let mapped = map.map_sequence(&tags.tags());
    let terminals: Vec<String> = mapped.iter().map(|(_, t)| t.clone()).collect();

    let forest = parse_terminals(grammar, &terminals, options.parse);
    let parse = match forest.trees.into_iter().next() {
        Some(mut tree) => {
            attach_surfaces(&mut tree, sentence, &mapped);
            Ok(tree)
        }
        None => Err(match analyze(grammar, map, &tags.tags()) {
            Err(r) => r,
            Ok(()) => unreachable!("empty forest for recognized input"),
        }),
    };
    Ok(PipelineOutput {
        tags,
        rendered,
        parse,
    })
}

/// Attach chunk surfaces to the tree's leaves. Dropped chunks (Null) merge
/// their words into the preceding leaf, mirroring the tagged-line rendering.
fn attach_surfaces(tree: &mut ParseTree, sentence: &AnnotatedSentence, mapped: &[(usize, String)]) {
    let mut leaves: Vec<*mut ParseTree> = Vec::new();
    tree.leaves_mut(&mut leaves);
    debug_assert_eq!(leaves.len(), mapped.len());
    let covered: Vec<usize> = mapped.iter().map(|(i, _)| *i).collect();
    for (k, leaf) in leaves.iter().enumerate() {
        // SAFETY: leaf pointers are distinct nodes of a tree we own
        let node = unsafe { &mut **leaf };
        let chunk_idx = covered[k];
        let mut surface = sentence.chunks[chunk_idx].surface();
        // pull in the words of dropped chunks that follow this one (up to the
        // next covered chunk)
        let until = covered.get(k + 1).copied().unwrap_or(sentence.chunks.len());
        for dropped in &sentence.chunks[chunk_idx + 1..until] {
            surface.push_str(&dropped.surface());
        }
        node.surface = Some(surface);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{default_grammar, parse_grammar_text, TagMap};

    fn custom(text: &str) -> Grammar {
        parse_grammar_text(text).unwrap().grammar
    }

    fn split(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn recognizes_the_complex_sentence_structure() {
        let g = default_grammar();
        let map = TagMap::default();
        assert!(recognize(
            g,
            &map,
            &split("Verb CCS PSubj SubjP PPla PlaP Obj Verb")
        ));
        assert!(!recognize(g, &map, &split("SubjP")));
        assert!(!recognize(g, &map, &split("ObjP PSubj")));
    }

    #[test]
    fn unknown_terminals_reject_with_a_diagnostic() {
        let g = default_grammar();
        let map = TagMap::default();
        let err = analyze(g, &map, &split("PSubj Zzz Verb")).unwrap_err();
        assert_eq!(err.unknown, Some((1, "Zzz".to_string())));
        assert!(!recognize(g, &map, &split("PSubj Zzz Verb")));
    }

    #[test]
    fn rejection_names_the_longest_viable_prefix() {
        let g = default_grammar();
        let map = TagMap::default();
        // PSubj SubjP starts many sentences but ObjP cannot follow
        let err = analyze(g, &map, &split("PSubj SubjP ObjP")).unwrap_err();
        assert_eq!(err.viable_prefix, 2);
        let msg = err.to_string();
        assert!(msg.contains("PSubj SubjP"), "message was: {msg}");
    }

    #[test]
    fn leader_sequence_has_exactly_one_tree() {
        let g = default_grammar();
        let map = TagMap::default();
        let forest = parse_all(
            g,
            &map,
            &split("PSubj SubjP PObj ObjP PPcomplO PcomplOP Verb"),
            ParseOptions::default(),
        );
        assert_eq!(forest.ambiguity(), 1);
        assert!(!forest.truncated);
        let tree = &forest.trees[0];
        assert_eq!(render_tree(tree),
            "(Sentence (I-sent (Subj PSubj SubjP) (Obj PObj ObjP) (PcomplO PPcomplO PcomplOP) Verb))");
    }

    #[test]
    fn book_sequence_yields_the_object_sentence_constituent() {
        let g = default_grammar();
        let map = TagMap::default();
        let forest = parse_all(
            g,
            &map,
            &split("Subj Verb CCA PObj ObjP Subj Verb"),
            ParseOptions::default(),
        );
        assert_eq!(forest.ambiguity(), 1);
        let tree = &forest.trees[0];
        assert_eq!(tree.label, "Sentence");
        assert_eq!(tree.children.len(), 2);
        assert_eq!(tree.children[0].label, "Obj-sent");
        assert_eq!(tree.children[1].label, "I-sent");
        assert_eq!(
            tree.leaf_labels(),
            vec![
                "subj-bare",
                "Verb",
                "CCA",
                "PObj",
                "ObjP",
                "subj-bare",
                "Verb"
            ]
        );
    }

    #[test]
    fn simple_sentence_trace_matches_the_published_derivation() {
        let g = default_grammar();
        let map = TagMap::default();
        let trace = derive(g, &map, &split("PSubj SubjP PAim AimP Obj Verb")).unwrap();
        assert_eq!(trace.steps.len(), 6);
        let rules: Vec<String> = trace
            .steps
            .iter()
            .skip(1)
            .map(|s| s.rule.as_ref().unwrap().to_string())
            .collect();
        assert_eq!(
            rules,
            vec![
                "Sentence -> I-sent",
                "I-sent -> Subj Aim Obj Verb",
                "Subj -> PSubj SubjP",
                "Aim -> PAim AimP",
                "Obj -> obj-bare",
            ]
        );
        let last = &trace.steps[5].form;
        assert_eq!(last.join(" "), "PSubj SubjP PAim AimP obj-bare Verb");
        let text = trace.render();
        assert!(text.starts_with("1. Sentence  [start]\n2. >> I-sent  [Sentence -> I-sent]\n"));
    }

    #[test]
    fn complex_sentence_trace_matches_the_published_derivation() {
        let g = default_grammar();
        let map = TagMap::default();
        let trace = derive(g, &map, &split("Verb CCS PSubj SubjP PPla PlaP Obj Verb")).unwrap();
        assert_eq!(trace.steps.len(), 7);
        let rules: Vec<String> = trace
            .steps
            .iter()
            .skip(1)
            .map(|s| s.rule.as_ref().unwrap().to_string())
            .collect();
        assert_eq!(
            rules,
            vec![
                "Sentence -> I-sent CCS I-sent",
                "I-sent -> Verb",
                "I-sent -> Subj Pla Obj Verb",
                "Subj -> PSubj SubjP",
                "Pla -> PPla PlaP",
                "Obj -> obj-bare",
            ]
        );
    }

    #[test]
    fn single_verb_trace() {
        let g = default_grammar();
        let trace = derive(g, &TagMap::default(), &["Verb"]).unwrap();
        assert_eq!(trace.steps.len(), 3);
        assert_eq!(trace.steps[1].form, vec!["I-sent"]);
        assert_eq!(trace.steps[2].form, vec!["Verb"]);
    }

    #[test]
    fn derive_rejects_non_members() {
        let g = default_grammar();
        let err = derive(g, &TagMap::default(), &split("ObjP PSubj")).unwrap_err();
        assert_eq!(err.viable_prefix, 0);
    }

    #[test]
    fn recursive_grammars_terminate_and_accept() {
        let g = custom("S -> S a | a");
        let map = TagMap::identity();
        for n in [1usize, 2, 10, 50] {
            let input = vec!["a"; n];
            assert!(recognize(&g, &map, &input), "a^{n} should be accepted");
        }
        assert!(!recognize(&g, &map, &Vec::<&str>::new()));
        let forest = parse_all(&g, &map, &["a", "a", "a"], ParseOptions::default());
        assert_eq!(forest.ambiguity(), 1);
    }

    #[test]
    fn ambiguous_grammars_enumerate_in_stable_order_and_cap() {
        // classic ambiguous concatenation: n-1 trees for n symbols... here
        // E -> E E | x over 4 symbols has the Catalan number C3 = 5 trees
        let g = custom("E -> E E | x");
        let map = TagMap::identity();
        let forest = parse_all(&g, &map, &["x", "x", "x", "x"], ParseOptions::default());
        assert_eq!(forest.ambiguity(), 5);
        assert!(!forest.truncated);
        let again = parse_all(&g, &map, &["x", "x", "x", "x"], ParseOptions::default());
        assert_eq!(forest, again);
        // first tree prefers the earlier production with the longest left span
        assert_eq!(
            render_tree(&forest.trees[0]),
            "(E (E (E (E x) (E x)) (E x)) (E x))"
        );

        let capped = parse_all(&g, &map, &["x"; 8], ParseOptions { cap: 10 });
        assert!(capped.truncated);
        assert_eq!(capped.trees.len(), 10);
    }

    #[test]
    fn epsilon_rules_parse() {
        let g = custom("S -> A b\nA -> a | ε");
        let map = TagMap::identity();
        assert!(recognize(&g, &map, &["b"]));
        assert!(recognize(&g, &map, &["a", "b"]));
        assert!(!recognize(&g, &map, &["a"]));
        let forest = parse_all(&g, &map, &["b"], ParseOptions::default());
        assert_eq!(forest.ambiguity(), 1);
        assert_eq!(render_tree(&forest.trees[0]), "(S (A ε) b)");
        let back = parse_tree_text(&render_tree(&forest.trees[0])).unwrap();
        assert_eq!(&back, &forest.trees[0]);
        assert_eq!(forest.trees[0].leaf_labels(), vec!["b"]);
    }

    #[test]
    fn trees_replay_from_their_traces() {
        let g = default_grammar();
        let map = TagMap::default();
        for input in [
            "PSubj SubjP PAim AimP Obj Verb",
            "Verb CCS PSubj SubjP PPla PlaP Obj Verb",
            "Subj Verb CCA PObj ObjP Subj Verb",
            "Verb",
        ] {
            let forest = parse_all(g, &map, &split(input), ParseOptions { cap: 1 });
            let tree = &forest.trees[0];
            let trace = derivation_of_tree(tree, g);
            let rebuilt = trace.replay().expect("replay succeeds");
            assert_eq!(&rebuilt, tree);
        }
    }

    #[test]
    fn tree_rendering_round_trips() {
        let mut rng = crate::rng::SplitMix64::new(2024);
        for _ in 0..100 {
            let tree = random_surface_tree(&mut rng, 0);
            let text = render_tree(&tree);
            let back = parse_tree_text(&text).expect("reparse");
            assert_eq!(back, tree, "failed on {text}");
        }
    }

    fn random_surface_tree(rng: &mut crate::rng::SplitMix64, depth: usize) -> ParseTree {
        let labels = ["S", "NP", "VP", "X1", "X2"];
        let words = ["က", "ခ", "စာ", "လူ"];
        if depth >= 3 || rng.chance(1, 3) {
            ParseTree::leaf_with_surface(*rng.choose(&labels), *rng.choose(&words))
        } else {
            let n = rng.range(1, 3);
            let children = (0..n)
                .map(|_| random_surface_tree(rng, depth + 1))
                .collect();
            ParseTree::node(*rng.choose(&labels), children)
        }
    }

    #[test]
    fn indented_rendering_shows_the_structure() {
        let forest = parse_all(
            default_grammar(),
            &TagMap::default(),
            &split("PSubj SubjP Verb"),
            ParseOptions { cap: 1 },
        );
        let text = render_tree_indented(&forest.trees[0]);
        assert_eq!(
            text,
            "Sentence\n  I-sent\n    Subj\n      PSubj\n      SubjP\n    Verb\n"
        );
    }

    #[test]
    fn pipeline_produces_the_leader_tree_with_surfaces() {
        use crate::testkit::fixtures;
        let model: Model<f64> = Model::train(&fixtures::training_corpus()).unwrap();
        let sentence =
            crate::corpus::parse_sentence_line(&fixtures::golden("leader_input")).unwrap();
        let out = run_pipeline(
            &model,
            default_grammar(),
            &TagMap::default(),
            &sentence,
            PipelineOptions::default(),
        )
        .unwrap();
        assert_eq!(out.rendered, fixtures::golden("leader_tagged"));
        let tree = out.parse.expect("leader sentence parses");
        assert_eq!(
            render_tree(&tree),
            "(Sentence (I-sent (Subj (PSubj သူတို့) (SubjP သည်)) (Obj (PObj မောင်ဘ) (ObjP ကို)) \
             (PcomplO (PPcomplO ခေါင်းဆောင်) (PcomplOP အဖြစ်)) (Verb ရွေးချယ်ခဲ့သည်)))"
        );
    }

    #[test]
    fn pipeline_produces_the_book_tree_in_lattice_mode() {
        use crate::tagger::DecodeMode;
        use crate::testkit::fixtures;
        let model: Model<f64> = Model::train(&fixtures::training_corpus()).unwrap();
        let sentence = crate::corpus::parse_sentence_line(&fixtures::golden("book_input")).unwrap();
        let out = run_pipeline(
            &model,
            default_grammar(),
            &TagMap::default(),
            &sentence,
            PipelineOptions {
                tag: TagOptions {
                    mode: DecodeMode::Lattice,
                    ..TagOptions::default()
                },
                ..PipelineOptions::default()
            },
        )
        .unwrap();
        let tree = out.parse.expect("book sentence parses");
        assert_eq!(tree.children[0].label, "Obj-sent");
        assert_eq!(tree.children[1].label, "I-sent");
        // the final verb leaf carries the merged sentence-final particle
        let leaves = tree.leaf_labels();
        assert_eq!(leaves.last(), Some(&"Verb"));
        fn last_leaf(t: &ParseTree) -> &ParseTree {
            if t.is_leaf() {
                t
            } else {
                last_leaf(t.children.last().unwrap())
            }
        }
        assert_eq!(last_leaf(&tree).surface.as_deref(), Some("ဖတ်သည်"));
    }

    #[test]
    fn pipeline_labels_relations_failures() {
        use crate::testkit::fixtures;
        let model: Model<f64> = Model::train(&fixtures::training_corpus()).unwrap();
        // a lone postposition decodes fine but cannot parse
        let sentence = crate::corpus::parse_sentence_line("PPC[သည်/ppm.subj]").unwrap();
        let out = run_pipeline(
            &model,
            default_grammar(),
            &TagMap::default(),
            &sentence,
            PipelineOptions::default(),
        )
        .unwrap();
        let rejection = out.parse.expect_err("SubjP alone cannot parse");
        assert_eq!(rejection.terminals, vec!["SubjP"]);
    }
}
