//! Annotated corpus format: chunked Myanmar sentences with optional function
//! tags, one sentence per line.
//!
//! The line grammar is
//! `chunk ("#" chunk)* ["။"]` with `chunk := TYPE ["@" TAG] "[" entry ("," entry)* "]"`
//! and `entry := WORD "/" POS`. Whitespace around separators is tolerated on
//! input and absent from the canonical serialization.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// The sentence-final mark (U+104B) that closes a terminated sentence.
pub const SENTENCE_FINAL_MARK: char = '။';

/// Characters that may not occur inside a word or POS tag.
const RESERVED: &[char] = &['/', ',', '[', ']', '#', '@'];

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// The seven chunk categories a sentence is segmented into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChunkType {
    /// Noun chunk.
    Nc,
    /// Postpositional chunk.
    Ppc,
    /// Adjectival chunk.
    Ac,
    /// Adverbial chunk.
    Rc,
    /// Conjunctive chunk.
    Cc,
    /// Sentence-final chunk.
    Sfc,
    /// Verb chunk.
    Vc,
}

impl ChunkType {
    pub const ALL: [ChunkType; 7] = [
        ChunkType::Nc,
        ChunkType::Ppc,
        ChunkType::Ac,
        ChunkType::Rc,
        ChunkType::Cc,
        ChunkType::Sfc,
        ChunkType::Vc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChunkType::Nc => "NC",
            ChunkType::Ppc => "PPC",
            ChunkType::Ac => "AC",
            ChunkType::Rc => "RC",
            ChunkType::Cc => "CC",
            ChunkType::Sfc => "SFC",
            ChunkType::Vc => "VC",
        }
    }

    pub fn parse(s: &str) -> Option<ChunkType> {
        Some(match s {
            "NC" => ChunkType::Nc,
            "PPC" => ChunkType::Ppc,
            "AC" => ChunkType::Ac,
            "RC" => ChunkType::Rc,
            "CC" => ChunkType::Cc,
            "SFC" => ChunkType::Sfc,
            "VC" => ChunkType::Vc,
            _ => return None,
        })
    }

    /// POS bases that can head a chunk of this type. Head selection walks the
    /// word list and keeps the last entry whose base is listed here.
    pub fn head_bases(self) -> &'static [&'static str] {
        match self {
            ChunkType::Nc => &["n", "pron"],
            ChunkType::Ppc => &["ppm"],
            ChunkType::Ac => &["adj"],
            ChunkType::Rc => &["adv"],
            ChunkType::Cc => &["cc"],
            ChunkType::Sfc => &["sf"],
            ChunkType::Vc => &["v", "verb"],
        }
    }
}

impl fmt::Display for ChunkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A POS tag split into its base and optional semantic category,
/// e.g. `n.person` or plain `sf`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosTag {
    pub base: String,
    /// Empty when the tag carries no category.
    pub category: String,
}

impl PosTag {
    pub fn new(base: impl Into<String>, category: impl Into<String>) -> PosTag {
        PosTag {
            base: base.into(),
            category: category.into(),
        }
    }

    /// The dotted feature string used as the model feature (pc).
    pub fn feature(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.category.is_empty() {
            f.write_str(&self.base)
        } else {
            write!(f, "{}.{}", self.base, self.category)
        }
    }
}

/// One `word/pos` pair inside a chunk.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordEntry {
    pub word: String,
    pub pos: PosTag,
}

impl WordEntry {
    pub fn new(word: impl Into<String>, pos: PosTag) -> WordEntry {
        WordEntry {
            word: word.into(),
            pos,
        }
    }
}

impl fmt::Display for WordEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.word, self.pos)
    }
}

/// A chunk: its type, an optional function tag and a non-empty word list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub chunk_type: ChunkType,
    pub function_tag: Option<String>,
    pub words: Vec<WordEntry>,
}

impl Chunk {
    pub fn new(
        chunk_type: ChunkType,
        function_tag: Option<String>,
        words: Vec<WordEntry>,
    ) -> Chunk {
        Chunk {
            chunk_type,
            function_tag,
            words,
        }
    }

    /// Concatenated surface form of the chunk (Myanmar script uses no
    /// inter-word spacing).
    pub fn surface(&self) -> String {
        self.words.iter().map(|w| w.word.as_str()).collect()
    }
}

/// A parsed corpus line: ordered chunks plus whether the source line ended
/// with the sentence-final mark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub chunks: Vec<Chunk>,
    pub terminated: bool,
}

impl AnnotatedSentence {
    /// True when every chunk carries a function tag (training form).
    pub fn is_annotated(&self) -> bool {
        self.chunks.iter().all(|c| c.function_tag.is_some())
    }

    /// Copy of this sentence with all function tags removed (input form).
    pub fn stripped(&self) -> AnnotatedSentence {
        AnnotatedSentence {
            chunks: self
                .chunks
                .iter()
                .map(|c| Chunk {
                    function_tag: None,
                    ..c.clone()
                })
                .collect(),
            terminated: self.terminated,
        }
    }

    /// Gold tags in chunk order; `None` if the sentence is not fully annotated.
    pub fn gold_tags(&self) -> Option<Vec<&str>> {
        self.chunks
            .iter()
            .map(|c| c.function_tag.as_deref())
            .collect()
    }
}

/// The synthetic tag assigned to sentence-final chunks.
pub const NULL_TAG: &str = "Null";

/// Registry of legal function tags with their descriptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagset {
    tags: BTreeMap<String, String>,
}

impl Tagset {
    /// The standard inventory: the published tag table plus `Null`.
    pub fn standard() -> &'static Tagset {
        use std::sync::OnceLock;
        static STANDARD: OnceLock<Tagset> = OnceLock::new();
        STANDARD.get_or_init(|| {
            let rows: &[(&str, &str)] = &[
                ("Active", "Verb"),
                ("Subj", "Subject"),
                ("PSubj", "Subject"),
                ("SubjP", "Postposition of Subject"),
                ("Obj", "Object"),
                ("PObj", "Object"),
                ("ObjP", "Postposition of Object"),
                ("PIobj", "Indirect Object"),
                ("IobjP", "Postposition of Indirect Object"),
                ("Pla", "Place"),
                ("PPla", "Place"),
                ("PlaP", "Postposition of Place"),
                ("Tim", "Time"),
                ("PTim", "Time"),
                ("TimP", "Postposition of Time"),
                ("PExt", "Extract"),
                ("ExtP", "Postposition of Extract"),
                ("PSim", "Similie"),
                ("SimP", "Postposition of Similie"),
                ("PCom", "Compare"),
                ("ComP", "Postposition of Compare"),
                ("POwn", "Own"),
                ("OwnP", "Postposition of Own"),
                ("Ada", "Adjective"),
                ("PcomplS", "Subject Complement"),
                ("PcomplP", "Object Complement"),
                ("PPcomplO", "Object Complement"),
                ("PcomplOP", "Postposition of Object Complement"),
                ("PUse", "Use"),
                ("UseP", "Postposition of Use"),
                ("PCau", "Cause"),
                ("CauP", "Postposition of Cause"),
                ("PAim", "Aim"),
                ("AimP", "Postposition of Aim"),
                ("CCS", "Join the sentences"),
                ("CCM", "Join the meanings"),
                ("CCC", "Join the words"),
                ("CCP", "Join with particles"),
                ("CCA", "Join as an adjective"),
                (NULL_TAG, "Sentence-final carrier"),
            ];
            Tagset {
                tags: rows
                    .iter()
                    .map(|(t, d)| (t.to_string(), d.to_string()))
                    .collect(),
            }
        })
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.contains_key(tag)
    }

    pub fn description(&self, tag: &str) -> Option<&str> {
        self.tags.get(tag).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.tags.iter().map(|(t, d)| (t.as_str(), d.as_str()))
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// A sentence-line parse failure, located by byte offset into the line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty sentence")]
    EmptySentence,
    #[error("unknown chunk type `{0}`")]
    UnknownChunkType(String),
    #[error("unknown function tag `{0}`")]
    UnknownFunctionTag(String),
    #[error("expected `[` to open the chunk body")]
    ExpectedOpenBracket,
    #[error("expected `]` or `,` in the chunk body")]
    ExpectedCloseBracket,
    #[error("unclosed chunk body")]
    UnclosedBody,
    #[error("empty chunk body")]
    EmptyChunkBody,
    #[error("empty function tag after `@`")]
    EmptyFunctionTag,
    #[error("empty word in entry")]
    EmptyWord,
    #[error("expected `/` between word and POS tag")]
    ExpectedSlash,
    #[error("empty POS tag")]
    EmptyPos,
    #[error("malformed POS tag `{0}`")]
    BadPosTag(String),
    #[error("unexpected trailing text")]
    TrailingText,
    #[error("a line must tag either all chunks or none; found a mix")]
    MixedAnnotation,
}

/// Corpus-file loading failure.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{count} line(s) rejected; first: line {line}: {error}")]
    Rejected {
        count: usize,
        line: usize,
        error: ParseError,
        diagnostics: Vec<LineDiagnostic>,
    },
}

/// One rejected line with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub error: ParseError,
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.error)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Options controlling line parsing.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Apply the POS normalization table (`verb` -> `v`, bare `sf` ->
    /// `sf.declarative`) so the published examples are mutually consistent.
    pub normalize_pos: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            normalize_pos: true,
        }
    }
}

/// Parse one corpus line with default options.
pub fn parse_sentence_line(line: &str) -> Result<AnnotatedSentence, ParseError> {
    parse_sentence_line_with(line, ParseOptions::default())
}

/// Parse one corpus line.
pub fn parse_sentence_line_with(
    line: &str,
    options: ParseOptions,
) -> Result<AnnotatedSentence, ParseError> {
    let mut sc = Scanner { src: line, pos: 0 };
    sc.skip_ws();
    if sc.rest().trim().is_empty() {
        return Err(err(sc.pos, ParseErrorKind::EmptySentence));
    }

    // The body ends where the optional sentence-final mark begins; the mark
    // may follow the last `]` directly or after a lone `#`.
    let trimmed_end = line.trim_end();
    let (body_end, terminated) = match trimmed_end.strip_suffix(SENTENCE_FINAL_MARK) {
        Some(head) => {
            let head = head.trim_end();
            let head = head.strip_suffix('#').unwrap_or(head).trim_end();
            (head.len(), true)
        }
        None => (trimmed_end.len(), false),
    };

    let mut chunks = Vec::new();
    loop {
        let chunk = parse_chunk(&mut sc, body_end, options)?;
        chunks.push(chunk);
        sc.skip_ws();
        if sc.pos >= body_end {
            break;
        }
        if !sc.eat('#') {
            return Err(err(sc.pos, ParseErrorKind::TrailingText));
        }
        sc.skip_ws();
        if sc.pos >= body_end {
            return Err(err(sc.pos, ParseErrorKind::EmptySentence));
        }
    }

    let tagged = chunks.iter().filter(|c| c.function_tag.is_some()).count();
    if tagged != 0 && tagged != chunks.len() {
        return Err(err(0, ParseErrorKind::MixedAnnotation));
    }

    Ok(AnnotatedSentence { chunks, terminated })
}

fn err(offset: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { offset, kind }
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    /// Consume an ASCII-alphanumeric identifier (chunk types and tags).
    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric()) {
            self.bump();
        }
        &self.src[start..self.pos]
    }
}

fn parse_chunk(
    sc: &mut Scanner<'_>,
    body_end: usize,
    options: ParseOptions,
) -> Result<Chunk, ParseError> {
    sc.skip_ws();
    let type_offset = sc.pos;
    let ty = sc.ident();
    let chunk_type = ChunkType::parse(ty).ok_or_else(|| {
        err(
            type_offset,
            ParseErrorKind::UnknownChunkType(ty.to_string()),
        )
    })?;

    sc.skip_ws();
    let function_tag = if sc.eat('@') {
        sc.skip_ws();
        let tag_offset = sc.pos;
        let tag = sc.ident();
        if tag.is_empty() {
            return Err(err(tag_offset, ParseErrorKind::EmptyFunctionTag));
        }
        if !Tagset::standard().contains(tag) {
            return Err(err(
                tag_offset,
                ParseErrorKind::UnknownFunctionTag(tag.to_string()),
            ));
        }
        Some(tag.to_string())
    } else {
        None
    };

    sc.skip_ws();
    if !sc.eat('[') {
        return Err(err(sc.pos, ParseErrorKind::ExpectedOpenBracket));
    }
    sc.skip_ws();
    if sc.peek() == Some(']') {
        return Err(err(sc.pos, ParseErrorKind::EmptyChunkBody));
    }

    let mut words = Vec::new();
    loop {
        words.push(parse_entry(sc, body_end, options)?);
        sc.skip_ws();
        match sc.bump() {
            Some(',') => sc.skip_ws(),
            Some(']') => break,
            Some(_) => return Err(err(sc.pos, ParseErrorKind::ExpectedCloseBracket)),
            None => return Err(err(sc.pos, ParseErrorKind::UnclosedBody)),
        }
    }

    Ok(Chunk {
        chunk_type,
        function_tag,
        words,
    })
}

fn parse_entry(
    sc: &mut Scanner<'_>,
    body_end: usize,
    options: ParseOptions,
) -> Result<WordEntry, ParseError> {
    sc.skip_ws();
    let word_offset = sc.pos;
    let word = scan_field(sc, body_end);
    let word = word.trim();
    if word.is_empty() {
        return Err(err(word_offset, ParseErrorKind::EmptyWord));
    }
    if !sc.eat('/') {
        return Err(err(sc.pos, ParseErrorKind::ExpectedSlash));
    }
    let pos_offset = sc.pos;
    let raw = scan_field(sc, body_end);
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(err(pos_offset, ParseErrorKind::EmptyPos));
    }
    let pos = parse_pos_tag(raw, options)
        .ok_or_else(|| err(pos_offset, ParseErrorKind::BadPosTag(raw.to_string())))?;
    Ok(WordEntry {
        word: word.to_string(),
        pos,
    })
}

/// Consume text up to the next reserved character or the end of the body.
fn scan_field<'a>(sc: &mut Scanner<'a>, body_end: usize) -> &'a str {
    let start = sc.pos;
    while sc.pos < body_end {
        match sc.peek() {
            Some(c) if !RESERVED.contains(&c) => {
                sc.bump();
            }
            _ => break,
        }
    }
    &sc.src[start..sc.pos]
}

fn parse_pos_tag(raw: &str, options: ParseOptions) -> Option<PosTag> {
    let (base, category) = match raw.split_once('.') {
        Some((b, c)) => (b, c),
        None => (raw, ""),
    };
    if base.is_empty() || base.chars().any(|c| c.is_whitespace()) {
        return None;
    }
    // "at most one '.'" and no dangling dot
    if raw.contains('.') && (category.is_empty() || category.contains('.')) {
        return None;
    }
    if category.chars().any(|c| c.is_whitespace()) {
        return None;
    }
    let mut base = base.to_string();
    let mut category = category.to_string();
    if options.normalize_pos {
        if base == "verb" {
            base = "v".to_string();
        }
        if base == "sf" && category.is_empty() {
            category = "declarative".to_string();
        }
    }
    Some(PosTag { base, category })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical single-line form; `parse_sentence_line(serialize_sentence(s))`
/// is structurally equal to `s`.
pub fn serialize_sentence(s: &AnnotatedSentence) -> String {
    let mut out = String::new();
    for (i, chunk) in s.chunks.iter().enumerate() {
        if i > 0 {
            out.push('#');
        }
        out.push_str(chunk.chunk_type.as_str());
        if let Some(tag) = &chunk.function_tag {
            out.push('@');
            out.push_str(tag);
        }
        out.push('[');
        for (j, entry) in chunk.words.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&entry.word);
            out.push('/');
            out.push_str(&entry.pos.to_string());
        }
        out.push(']');
    }
    if s.terminated {
        out.push(SENTENCE_FINAL_MARK);
    }
    out
}

// ---------------------------------------------------------------------------
// Head extraction
// ---------------------------------------------------------------------------

/// A chunk head: the entry whose POS represents the chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Head<'a> {
    pub entry: &'a WordEntry,
    /// Set when no entry was compatible with the chunk type and the last
    /// entry was used instead.
    pub fallback: bool,
}

impl<'a> Head<'a> {
    /// The model feature (pc) contributed by this head.
    pub fn feature(&self) -> String {
        self.entry.pos.feature()
    }
}

/// Select the head entry of a chunk: the last entry whose POS base is
/// compatible with the chunk type, else the last entry flagged as fallback.
pub fn head_of_chunk(chunk: &Chunk) -> Head<'_> {
    let bases = chunk.chunk_type.head_bases();
    let compatible = chunk
        .words
        .iter()
        .rfind(|w| bases.contains(&w.pos.base.as_str()));
    match compatible {
        Some(entry) => Head {
            entry,
            fallback: false,
        },
        None => Head {
            entry: chunk.words.last().expect("chunk words are non-empty"),
            fallback: true,
        },
    }
}

// ---------------------------------------------------------------------------
// Corpus loading
// ---------------------------------------------------------------------------

/// Whether rejected lines abort loading or are reported as diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    #[default]
    Strict,
    Lenient,
}

/// Result of loading a corpus: accepted sentences plus per-line diagnostics
/// for rejected lines (lenient mode only; strict loading fails instead).
#[derive(Debug, Clone, Default)]
pub struct CorpusLoad {
    pub sentences: Vec<AnnotatedSentence>,
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Parse corpus text: one sentence per line, blank lines and `//` comments
/// skipped.
pub fn parse_corpus(text: &str, mode: LoadMode) -> Result<CorpusLoad, CorpusError> {
    parse_corpus_with(text, mode, ParseOptions::default())
}

pub fn parse_corpus_with(
    text: &str,
    mode: LoadMode,
    options: ParseOptions,
) -> Result<CorpusLoad, CorpusError> {
    let mut load = CorpusLoad::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        match parse_sentence_line_with(line, options) {
            Ok(sentence) => load.sentences.push(sentence),
            Err(error) => load.diagnostics.push(LineDiagnostic {
                line: idx + 1,
                error,
            }),
        }
    }
    if mode == LoadMode::Strict && !load.diagnostics.is_empty() {
        let first = load.diagnostics[0].clone();
        return Err(CorpusError::Rejected {
            count: load.diagnostics.len(),
            line: first.line,
            error: first.error,
            diagnostics: load.diagnostics,
        });
    }
    Ok(load)
}

/// Load a corpus file (UTF-8, LF).
pub fn load_corpus(path: impl AsRef<Path>, mode: LoadMode) -> Result<CorpusLoad, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, mode)
}
