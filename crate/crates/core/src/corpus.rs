//! Corpus ingestion and adverb occurrence extraction.
//!
//! Documents come in as plain text (one document per file) or JSONL
//! (`{"id": ..., "text": ..., "source": ...}`). Sentences are segmented on
//! terminal punctuation, then tokenized by splitting on whitespace and
//! detaching leading/trailing punctuation as separate tokens. Tokenization
//! is lossless: each token carries byte offsets into its sentence.
//!
//! A token is extracted as an adverb occurrence iff it is listed in the
//! known-adverb dictionary or ends with an adverbial suffix (stem of at
//! least `min_stem_chars` characters), and is not in the ambiguous-exclusion
//! list. Exclusion always wins, even over dictionary membership.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content_id;
use crate::exec;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unreadable file {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at {path}:{line}: {detail}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("duplicate document id {0}")]
    DuplicateDocId(String),
    #[error("malformed lexicon at line {line}: {detail}")]
    MalformedLexicon { line: usize, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One token with byte offsets into the sentence it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub doc_id: String,
    pub source: String,
    pub sentences: Vec<Sentence>,
}

/// One corpus instance of an adverb. This struct is the wire format of the
/// occurrences JSONL file consumed by the embedding adapter; it carries
/// exactly these fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdverbOccurrence {
    pub occurrence_id: String,
    pub lemma: String,
    pub surface: String,
    pub sentence_text: String,
    pub token_index: usize,
    pub token_count: usize,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestFormat {
    PlainText,
    Jsonl,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}'
                | '\u{2026}' | '\u{00A1}' | '\u{00BF}' | '\u{00AB}' | '\u{00BB}'
        )
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Split raw text into sentences on runs of terminal punctuation followed by
/// whitespace or end of input. The terminal run stays with its sentence;
/// surrounding whitespace is trimmed. Text without terminal punctuation is
/// one sentence.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if is_terminal(c) {
            // consume the rest of the terminal run ("...", "?!")
            while let Some(&next) = chars.peek() {
                if is_terminal(next) {
                    current.push(next);
                    chars.next();
                } else {
                    break;
                }
            }
            let at_boundary = match chars.peek() {
                None => true,
                Some(&next) => next.is_whitespace(),
            };
            if at_boundary {
                let trimmed = current.trim();
                if !trimmed.is_empty() {
                    sentences.push(trimmed.to_string());
                }
                current.clear();
            }
        }
    }
    let trimmed = current.trim();
    if !trimmed.is_empty() {
        sentences.push(trimmed.to_string());
    }
    sentences
}

/// Whitespace split, then detach leading and trailing punctuation characters
/// as their own tokens. Interior punctuation (apostrophes, hyphens) stays in
/// the word token. Offsets are byte positions into `text`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start = None::<usize>;
    let bytes_len = text.len();
    let push_chunk = |start: usize, end: usize, tokens: &mut Vec<Token>| {
        let chunk = &text[start..end];
        // leading punctuation
        let mut word_start = start;
        for c in chunk.chars() {
            if is_punct(c) {
                tokens.push(Token {
                    text: c.to_string(),
                    start: word_start,
                    end: word_start + c.len_utf8(),
                });
                word_start += c.len_utf8();
            } else {
                break;
            }
        }
        if word_start >= end {
            return;
        }
        // trailing punctuation, collected then emitted in order
        let mut word_end = end;
        let mut trailing = Vec::new();
        for c in text[word_start..end].chars().rev() {
            if is_punct(c) {
                word_end -= c.len_utf8();
                trailing.push(Token {
                    text: c.to_string(),
                    start: word_end,
                    end: word_end + c.len_utf8(),
                });
            } else {
                break;
            }
        }
        if word_start < word_end {
            tokens.push(Token {
                text: text[word_start..word_end].to_string(),
                start: word_start,
                end: word_end,
            });
        }
        tokens.extend(trailing.into_iter().rev());
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                push_chunk(start, i, &mut tokens);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(start) = chunk_start {
        push_chunk(start, bytes_len, &mut tokens);
    }
    tokens
}

fn sentence_from_text(text: &str) -> Sentence {
    Sentence {
        tokens: tokenize(text),
        text: text.to_string(),
    }
}

fn doc_from_text(doc_id: String, source: String, text: &str) -> CorpusDocument {
    CorpusDocument {
        doc_id,
        source,
        sentences: segment_sentences(text).iter().map(|s| sentence_from_text(s)).collect(),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

#[derive(Deserialize)]
struct JsonlRecord {
    #[serde(default)]
    id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

/// Read corpus files into documents, in input order. Plain text yields one
/// document per file; empty files yield none. JSONL yields one document per
/// line; every record must carry a `text` field.
pub fn ingest(paths: &[PathBuf], format: IngestFormat) -> Result<Vec<CorpusDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    for path in paths {
        match format {
            IngestFormat::PlainText => {
                let text = fs::read_to_string(path).map_err(|e| CorpusError::UnreadableFile {
                    path: path.clone(),
                    source: e,
                })?;
                if text.trim().is_empty() {
                    continue;
                }
                let stem = file_stem(path);
                if !seen.insert(stem.clone()) {
                    return Err(CorpusError::DuplicateDocId(stem));
                }
                docs.push(doc_from_text(stem.clone(), stem, &text));
            }
            IngestFormat::Jsonl => {
                let file = fs::File::open(path).map_err(|e| CorpusError::UnreadableFile {
                    path: path.clone(),
                    source: e,
                })?;
                let stem = file_stem(path);
                for (lineno, line) in BufReader::new(file).lines().enumerate() {
                    let line = line.map_err(|e| CorpusError::UnreadableFile {
                        path: path.clone(),
                        source: e,
                    })?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record: JsonlRecord =
                        serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                            path: path.clone(),
                            line: lineno + 1,
                            detail: e.to_string(),
                        })?;
                    let text = record.text.ok_or_else(|| CorpusError::MalformedRecord {
                        path: path.clone(),
                        line: lineno + 1,
                        detail: "missing `text` field".to_string(),
                    })?;
                    let doc_id = record
                        .id
                        .unwrap_or_else(|| format!("{}-{}", stem, lineno + 1));
                    if !seen.insert(doc_id.clone()) {
                        return Err(CorpusError::DuplicateDocId(doc_id));
                    }
                    let source = record.source.unwrap_or_else(|| stem.clone());
                    docs.push(doc_from_text(doc_id, source, &text));
                }
            }
        }
    }
    Ok(docs)
}

/// Dictionary, exclusion list, and suffix table driving extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionLexicon {
    pub known_adverbs: BTreeSet<String>,
    pub ambiguous_exclusions: BTreeSet<String>,
    pub adverbial_suffixes: Vec<String>,
    /// Minimum characters left of a suffix before a morphological match
    /// counts ("fly" and "ply" never match "-ly").
    pub min_stem_chars: usize,
}

impl Default for ExtractionLexicon {
    fn default() -> Self {
        ExtractionLexicon::parse(include_str!("../data/extraction_lexicon.txt"))
            .expect("shipped extraction lexicon is well-formed")
    }
}

impl ExtractionLexicon {
    /// Parse the sectioned lexicon format: `[known]`, `[excluded]` and
    /// `[suffixes]` headers, one entry per line. Blank lines and lines
    /// starting with `#` are ignored. A leading `-` on a suffix is stripped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut lex = ExtractionLexicon {
            known_adverbs: BTreeSet::new(),
            ambiguous_exclusions: BTreeSet::new(),
            adverbial_suffixes: Vec::new(),
            min_stem_chars: 3,
        };
        let mut section = None::<&str>;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[known]" => section = Some("known"),
                "[excluded]" => section = Some("excluded"),
                "[suffixes]" => section = Some("suffixes"),
                _ if line.starts_with('[') => {
                    return Err(CorpusError::MalformedLexicon {
                        line: lineno + 1,
                        detail: format!("unknown section {line}"),
                    })
                }
                entry => match section {
                    Some("known") => {
                        lex.known_adverbs.insert(entry.to_lowercase());
                    }
                    Some("excluded") => {
                        lex.ambiguous_exclusions.insert(entry.to_lowercase());
                    }
                    Some("suffixes") => {
                        let suffix = entry.strip_prefix('-').unwrap_or(entry).to_lowercase();
                        if !lex.adverbial_suffixes.contains(&suffix) {
                            lex.adverbial_suffixes.push(suffix);
                        }
                    }
                    _ => {
                        return Err(CorpusError::MalformedLexicon {
                            line: lineno + 1,
                            detail: "entry before any section header".to_string(),
                        })
                    }
                },
            }
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::UnreadableFile {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    fn matches(&self, lower: &str) -> bool {
        if self.ambiguous_exclusions.contains(lower) {
            return false;
        }
        if self.known_adverbs.contains(lower) {
            return true;
        }
        self.adverbial_suffixes.iter().any(|suffix| {
            lower.ends_with(suffix.as_str())
                && lower.chars().count() >= suffix.chars().count() + self.min_stem_chars
        })
    }
}

/// Extract adverb occurrences from one document, in corpus order.
pub fn extract_adverbs(doc: &CorpusDocument, lexicon: &ExtractionLexicon) -> Vec<AdverbOccurrence> {
    let mut out = Vec::new();
    for (si, sentence) in doc.sentences.iter().enumerate() {
        for (ti, token) in sentence.tokens.iter().enumerate() {
            let lower = token.text.to_lowercase();
            if lexicon.matches(&lower) {
                out.push(AdverbOccurrence {
                    occurrence_id: content_id(
                        "occurrence",
                        &[&doc.doc_id, &si.to_string(), &ti.to_string()],
                    ),
                    lemma: lower,
                    surface: token.text.clone(),
                    sentence_text: sentence.text.clone(),
                    token_index: ti,
                    token_count: sentence.tokens.len(),
                    source: doc.source.clone(),
                });
            }
        }
    }
    out
}

/// Extract over many documents. Documents are independent work units; the
/// result keeps corpus order regardless of worker count.
pub fn extract_corpus(
    docs: &[CorpusDocument],
    lexicon: &ExtractionLexicon,
) -> Vec<AdverbOccurrence> {
    exec::map_ordered(docs, |doc| extract_adverbs(doc, lexicon))
        .into_iter()
        .flatten()
        .collect()
}

/// Sequential reference implementation of [`extract_corpus`].
pub fn extract_corpus_seq(
    docs: &[CorpusDocument],
    lexicon: &ExtractionLexicon,
) -> Vec<AdverbOccurrence> {
    exec::map_ordered_seq(docs, |doc| extract_adverbs(doc, lexicon))
        .into_iter()
        .flatten()
        .collect()
}

/// Write occurrences as JSONL, one record per line, in the given order.
pub fn write_occurrences<W: Write>(
    mut w: W,
    occurrences: &[AdverbOccurrence],
) -> Result<(), CorpusError> {
    for occ in occurrences {
        serde_json::to_writer(&mut w, occ).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_occurrences(path: &Path) -> Result<Vec<AdverbOccurrence>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| CorpusError::UnreadableFile {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let occ: AdverbOccurrence =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                path: path.to_path_buf(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        out.push(occ);
    }
    Ok(out)
}
