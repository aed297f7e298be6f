//! Parse, validate and canonically emit the YAML lexicon files the pipeline
//! produces.
//!
//! The schema is a self-contained convention (see the README for the
//! mapping onto upstream lexicon field names): a top-level mapping from
//! synset id to an entry with `category`, `gloss`, `members` (list of
//! `{lemma, sense_id}`) and `examples`. Parsing is strict - unknown keys
//! are errors, because these files are hand-edited and silent key typos are
//! the dominant failure mode.
//!
//! Emission is canonical: entries sorted by synset id, fixed key order,
//! two-space indent, deterministic scalar quoting, trailing newline.
//! `emit` then `parse` is the identity.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::synsets::{Synset, SynsetError, SynsetId};
use crate::taxonomy::parse_category;

#[derive(Debug, Error)]
pub enum OewnError {
    #[error("schema violation at {path}: {detail}")]
    SchemaViolation { path: String, detail: String },
    #[error("duplicate sense id {0}")]
    DuplicateSenseId(String),
    #[error("bad synset id {0:?}")]
    BadSynsetId(String),
    #[error("yaml error: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Member {
    pub lemma: String,
    pub sense_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconEntry {
    /// Raw category label; membership in the ten-way taxonomy is a
    /// validation finding, not a parse error.
    pub category: String,
    pub gloss: String,
    pub members: Vec<Member>,
    pub examples: Vec<String>,
}

/// An ordered lexicon document. Parsing preserves file order; equality is
/// structural (order-insensitive), matching the map semantics of the file.
#[derive(Debug, Clone, Default)]
pub struct LexiconFile {
    entries: Vec<(SynsetId, LexiconEntry)>,
}

impl PartialEq for LexiconFile {
    fn eq(&self, other: &Self) -> bool {
        let mut a: Vec<_> = self.entries.iter().collect();
        let mut b: Vec<_> = other.entries.iter().collect();
        a.sort_by(|x, y| x.0.cmp(&y.0));
        b.sort_by(|x, y| x.0.cmp(&y.0));
        a == b
    }
}

impl Eq for LexiconFile {}

impl LexiconFile {
    pub fn new() -> LexiconFile {
        LexiconFile::default()
    }

    pub fn entries(&self) -> &[(SynsetId, LexiconEntry)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &SynsetId) -> Option<&LexiconEntry> {
        self.entries.iter().find(|(eid, _)| eid == id).map(|(_, e)| e)
    }

    /// Append an entry, enforcing the file invariants.
    pub fn push(&mut self, id: SynsetId, entry: LexiconEntry) -> Result<(), OewnError> {
        if self.entries.iter().any(|(eid, _)| *eid == id) {
            return Err(OewnError::SchemaViolation {
                path: id.to_string(),
                detail: "duplicate synset id".to_string(),
            });
        }
        if entry.gloss.trim().is_empty() {
            return Err(OewnError::SchemaViolation {
                path: format!("{id}.gloss"),
                detail: "gloss must be nonempty".to_string(),
            });
        }
        if entry.members.is_empty() {
            return Err(OewnError::SchemaViolation {
                path: format!("{id}.members"),
                detail: "at least one member required".to_string(),
            });
        }
        let mut seen: BTreeSet<&str> = self
            .entries
            .iter()
            .flat_map(|(_, e)| e.members.iter().map(|m| m.sense_id.as_str()))
            .collect();
        for member in &entry.members {
            if !seen.insert(&member.sense_id) {
                return Err(OewnError::DuplicateSenseId(member.sense_id.clone()));
            }
        }
        self.entries.push((id, entry));
        Ok(())
    }

    /// Build a lexicon document from synsets, resolving each member sense
    /// id to its lemma.
    pub fn from_synsets<'a, I>(synsets: I, lemma_of: impl Fn(&str) -> Option<String>) -> Result<LexiconFile, OewnError>
    where
        I: IntoIterator<Item = &'a Synset>,
    {
        let mut file = LexiconFile::new();
        for synset in synsets {
            let members = synset
                .members
                .iter()
                .map(|sense_id| {
                    lemma_of(sense_id)
                        .map(|lemma| Member {
                            lemma,
                            sense_id: sense_id.clone(),
                        })
                        .ok_or_else(|| OewnError::SchemaViolation {
                            path: format!("{}.members", synset.synset_id),
                            detail: format!("unknown sense id {sense_id}"),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            file.push(
                synset.synset_id.clone(),
                LexiconEntry {
                    category: synset.category.as_str().to_string(),
                    gloss: synset.gloss.clone(),
                    members,
                    examples: synset.examples.clone(),
                },
            )?;
        }
        Ok(file)
    }
}

fn type_name(v: &serde_yaml::Value) -> &'static str {
    match v {
        serde_yaml::Value::Null => "null",
        serde_yaml::Value::Bool(_) => "bool",
        serde_yaml::Value::Number(_) => "number",
        serde_yaml::Value::String(_) => "string",
        serde_yaml::Value::Sequence(_) => "sequence",
        serde_yaml::Value::Mapping(_) => "mapping",
        serde_yaml::Value::Tagged(_) => "tagged value",
    }
}

fn expect_string(v: &serde_yaml::Value, path: &str) -> Result<String, OewnError> {
    match v {
        serde_yaml::Value::String(s) => Ok(s.clone()),
        other => Err(OewnError::SchemaViolation {
            path: path.to_string(),
            detail: format!("expected string, found {}", type_name(other)),
        }),
    }
}

/// Strict parse of a lexicon document from YAML text.
pub fn parse_lexicon_str(text: &str) -> Result<LexiconFile, OewnError> {
    let value: serde_yaml::Value = serde_yaml::from_str(text)?;
    let mapping = match value {
        serde_yaml::Value::Null => return Ok(LexiconFile::new()),
        serde_yaml::Value::Mapping(m) => m,
        other => {
            return Err(OewnError::SchemaViolation {
                path: "$".to_string(),
                detail: format!("expected mapping at top level, found {}", type_name(&other)),
            })
        }
    };
    let mut file = LexiconFile::new();
    for (key, value) in mapping {
        let key_str = expect_string(&key, "$ (synset key)")?;
        let id = SynsetId::new(&key_str).map_err(|_| OewnError::BadSynsetId(key_str.clone()))?;
        let entry_map = match value {
            serde_yaml::Value::Mapping(m) => m,
            other => {
                return Err(OewnError::SchemaViolation {
                    path: key_str.clone(),
                    detail: format!("expected mapping, found {}", type_name(&other)),
                })
            }
        };
        let mut category = None;
        let mut gloss = None;
        let mut members = None;
        let mut examples = Vec::new();
        for (field_key, field_value) in &entry_map {
            let field = expect_string(field_key, &format!("{key_str} (field name)"))?;
            match field.as_str() {
                "category" => {
                    category = Some(expect_string(field_value, &format!("{key_str}.category"))?)
                }
                "gloss" => gloss = Some(expect_string(field_value, &format!("{key_str}.gloss"))?),
                "members" => {
                    let seq = field_value.as_sequence().ok_or_else(|| {
                        OewnError::SchemaViolation {
                            path: format!("{key_str}.members"),
                            detail: format!(
                                "expected sequence, found {}",
                                type_name(field_value)
                            ),
                        }
                    })?;
                    let mut parsed = Vec::new();
                    for (i, item) in seq.iter().enumerate() {
                        let path = format!("{key_str}.members[{i}]");
                        let map = item.as_mapping().ok_or_else(|| OewnError::SchemaViolation {
                            path: path.clone(),
                            detail: format!("expected mapping, found {}", type_name(item)),
                        })?;
                        let mut lemma = None;
                        let mut sense_id = None;
                        for (mk, mv) in map {
                            let mfield = expect_string(mk, &format!("{path} (field name)"))?;
                            match mfield.as_str() {
                                "lemma" => lemma = Some(expect_string(mv, &format!("{path}.lemma"))?),
                                "sense_id" => {
                                    sense_id = Some(expect_string(mv, &format!("{path}.sense_id"))?)
                                }
                                other => {
                                    return Err(OewnError::SchemaViolation {
                                        path: path.clone(),
                                        detail: format!("unknown key {other:?}"),
                                    })
                                }
                            }
                        }
                        let lemma = lemma.ok_or_else(|| OewnError::SchemaViolation {
                            path: path.clone(),
                            detail: "missing lemma".to_string(),
                        })?;
                        let sense_id = sense_id.ok_or_else(|| OewnError::SchemaViolation {
                            path: path.clone(),
                            detail: "missing sense_id".to_string(),
                        })?;
                        if lemma.trim().is_empty() {
                            return Err(OewnError::SchemaViolation {
                                path: format!("{path}.lemma"),
                                detail: "lemma must be nonempty".to_string(),
                            });
                        }
                        parsed.push(Member { lemma, sense_id });
                    }
                    members = Some(parsed);
                }
                "examples" => {
                    let seq = field_value.as_sequence().ok_or_else(|| {
                        OewnError::SchemaViolation {
                            path: format!("{key_str}.examples"),
                            detail: format!(
                                "expected sequence, found {}",
                                type_name(field_value)
                            ),
                        }
                    })?;
                    examples = seq
                        .iter()
                        .enumerate()
                        .map(|(i, v)| expect_string(v, &format!("{key_str}.examples[{i}]")))
                        .collect::<Result<Vec<_>, _>>()?;
                }
                other => {
                    return Err(OewnError::SchemaViolation {
                        path: key_str.clone(),
                        detail: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let category = category.ok_or_else(|| OewnError::SchemaViolation {
            path: key_str.clone(),
            detail: "missing category".to_string(),
        })?;
        let gloss = gloss.ok_or_else(|| OewnError::SchemaViolation {
            path: key_str.clone(),
            detail: "missing gloss".to_string(),
        })?;
        let members = members.ok_or_else(|| OewnError::SchemaViolation {
            path: key_str.clone(),
            detail: "missing members".to_string(),
        })?;
        file.push(
            id,
            LexiconEntry {
                category,
                gloss,
                members,
                examples,
            },
        )?;
    }
    Ok(file)
}

pub fn parse_lexicon(path: &Path) -> Result<LexiconFile, OewnError> {
    parse_lexicon_str(&std::fs::read_to_string(path)?)
}

const BOOLEAN_LIKE: [&str; 9] = [
    "true", "false", "yes", "no", "on", "off", "null", "~", "none",
];

fn plain_safe(s: &str) -> bool {
    if s.is_empty() || s.len() > 200 {
        return false;
    }
    let first = s.chars().next().expect("nonempty");
    if !first.is_ascii_alphabetic() {
        return false;
    }
    if !s.chars().all(|c| {
        c.is_ascii_alphanumeric()
            || matches!(c, ' ' | '_' | '\'' | '(' | ')' | ',' | '.' | ';' | ':' | '/' | '-')
    }) {
        return false;
    }
    if s.contains(": ") || s.ends_with(':') || s.ends_with(' ') {
        return false;
    }
    !BOOLEAN_LIKE.contains(&s.to_lowercase().as_str())
}

fn emit_scalar(s: &str, out: &mut String) {
    if plain_safe(s) {
        out.push_str(s);
        return;
    }
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || (c as u32) == 0x7f => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Canonical serialization: entries sorted by synset id, fixed key order,
/// two-space indent, trailing newline. A pure function of lexicon content.
pub fn emit_lexicon_string(lexicon: &LexiconFile) -> String {
    let mut sorted: Vec<&(SynsetId, LexiconEntry)> = lexicon.entries.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (id, entry) in sorted {
        out.push_str(id.as_str());
        out.push_str(":\n  category: ");
        emit_scalar(&entry.category, &mut out);
        out.push_str("\n  gloss: ");
        emit_scalar(&entry.gloss, &mut out);
        out.push_str("\n  members:\n");
        for member in &entry.members {
            out.push_str("  - lemma: ");
            emit_scalar(&member.lemma, &mut out);
            out.push_str("\n    sense_id: ");
            emit_scalar(&member.sense_id, &mut out);
            out.push('\n');
        }
        if entry.examples.is_empty() {
            out.push_str("  examples: []\n");
        } else {
            out.push_str("  examples:\n");
            for example in &entry.examples {
                out.push_str("  - ");
                emit_scalar(example, &mut out);
                out.push('\n');
            }
        }
    }
    out
}

/// Emit to a file atomically (write a temp sibling, then rename).
pub fn emit_lexicon(lexicon: &LexiconFile, path: &Path) -> Result<(), OewnError> {
    let text = emit_lexicon_string(lexicon);
    let tmp = path.with_extension("yaml.tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(text.as_bytes())?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Finding {
    UnknownCategory {
        synset_id: SynsetId,
        category: String,
    },
    MissingExamples {
        synset_id: SynsetId,
    },
    PossibleDuplicate {
        a: SynsetId,
        b: SynsetId,
        shared_lemma: String,
    },
    IdRangeViolation {
        synset_id: SynsetId,
    },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::UnknownCategory {
                synset_id,
                category,
            } => write!(f, "{synset_id}: unknown category {category:?}"),
            Finding::MissingExamples { synset_id } => {
                write!(f, "{synset_id}: no examples on a validated entry")
            }
            Finding::PossibleDuplicate { a, b, shared_lemma } => write!(
                f,
                "{a} and {b}: identical gloss with shared lemma {shared_lemma:?}"
            ),
            Finding::IdRangeViolation { synset_id } => write!(
                f,
                "{synset_id}: minted outside the configured id range"
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidateOptions {
    /// When set, entries that are not in `known_existing` must carry ids
    /// inside this numeric range.
    pub new_id_range: Option<(u32, u32)>,
    pub known_existing: BTreeSet<SynsetId>,
}

/// Consistency report over a lexicon document. Never mutates; findings are
/// a human work queue, and an empty report is the success case.
pub fn validate_lexicon(lexicon: &LexiconFile, options: &ValidateOptions) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (id, entry) in &lexicon.entries {
        if parse_category(&entry.category).is_err() {
            findings.push(Finding::UnknownCategory {
                synset_id: id.clone(),
                category: entry.category.clone(),
            });
        }
        if entry.examples.is_empty() {
            findings.push(Finding::MissingExamples {
                synset_id: id.clone(),
            });
        }
        if let Some((lo, hi)) = options.new_id_range {
            if !options.known_existing.contains(id) {
                let n = id.number();
                if n < lo || n > hi {
                    findings.push(Finding::IdRangeViolation {
                        synset_id: id.clone(),
                    });
                }
            }
        }
    }
    for i in 0..lexicon.entries.len() {
        for j in (i + 1)..lexicon.entries.len() {
            let (id_a, a) = &lexicon.entries[i];
            let (id_b, b) = &lexicon.entries[j];
            if a.gloss != b.gloss {
                continue;
            }
            let lemmas_a: BTreeSet<&str> = a.members.iter().map(|m| m.lemma.as_str()).collect();
            if let Some(shared) = b
                .members
                .iter()
                .map(|m| m.lemma.as_str())
                .find(|l| lemmas_a.contains(l))
            {
                let (lo, hi) = if id_a < id_b { (id_a, id_b) } else { (id_b, id_a) };
                findings.push(Finding::PossibleDuplicate {
                    a: lo.clone(),
                    b: hi.clone(),
                    shared_lemma: shared.to_string(),
                });
            }
        }
    }
    findings
}

impl From<SynsetError> for OewnError {
    fn from(e: SynsetError) -> OewnError {
        OewnError::BadSynsetId(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(category: &str, gloss: &str, lemma: &str, sense: &str, examples: &[&str]) -> LexiconEntry {
        LexiconEntry {
            category: category.to_string(),
            gloss: gloss.to_string(),
            members: vec![Member {
                lemma: lemma.to_string(),
                sense_id: sense.to_string(),
            }],
            examples: examples.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn small_lexicon() -> LexiconFile {
        let mut lex = LexiconFile::new();
        lex.push(
            SynsetId::new("00000002-r").unwrap(),
            entry("manner", "in a soft way", "softly", "softly-1", &["she sang softly"]),
        )
        .unwrap();
        lex.push(
            SynsetId::new("00000001-r").unwrap(),
            entry("degree", "to a high degree", "highly", "highly-1", &["highly unusual"]),
        )
        .unwrap();
        lex
    }

    #[test]
    fn emit_sorts_and_parse_round_trips() {
        let lex = small_lexicon();
        let text = emit_lexicon_string(&lex);
        // sorted: 00000001-r before 00000002-r
        assert!(text.find("00000001-r").unwrap() < text.find("00000002-r").unwrap());
        assert!(text.ends_with('\n'));
        let back = parse_lexicon_str(&text).unwrap();
        assert_eq!(back, lex);
        // canonical: emitting the parse reproduces the bytes
        assert_eq!(emit_lexicon_string(&back), text);
    }

    #[test]
    fn bad_synset_id_rejected() {
        let err = parse_lexicon_str("00043413-n:\n  category: manner\n  gloss: g\n  members:\n  - lemma: a\n    sense_id: s\n").unwrap_err();
        assert!(matches!(err, OewnError::BadSynsetId(id) if id == "00043413-n"));
    }

    #[test]
    fn missing_gloss_rejected() {
        let err = parse_lexicon_str(
            "00043413-r:\n  category: manner\n  members:\n  - lemma: a\n    sense_id: s\n",
        )
        .unwrap_err();
        assert!(matches!(err, OewnError::SchemaViolation { detail, .. } if detail.contains("missing gloss")));
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let err = parse_lexicon_str(
            "00043413-r:\n  category: manner\n  gloss: g\n  extra: 1\n  members:\n  - lemma: a\n    sense_id: s\n",
        )
        .unwrap_err();
        match err {
            OewnError::SchemaViolation { path, detail } => {
                assert_eq!(path, "00043413-r");
                assert!(detail.contains("extra"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_sense_ids_rejected() {
        let err = parse_lexicon_str(
            "00000001-r:\n  category: manner\n  gloss: g\n  members:\n  - lemma: a\n    sense_id: s\n\
             00000002-r:\n  category: manner\n  gloss: h\n  members:\n  - lemma: b\n    sense_id: s\n",
        )
        .unwrap_err();
        assert!(matches!(err, OewnError::DuplicateSenseId(s) if s == "s"));
    }

    #[test]
    fn empty_document_is_empty_lexicon() {
        assert!(parse_lexicon_str("").unwrap().is_empty());
    }

    #[test]
    fn quoting_covers_awkward_scalars() {
        let mut lex = LexiconFile::new();
        lex.push(
            SynsetId::new("00000001-r").unwrap(),
            entry(
                "manner",
                "contains: colon, \"quotes\" and #hash",
                "x-ly",
                "s1",
                &["[...] bracketed", "line\nbreak", "true"],
            ),
        )
        .unwrap();
        let text = emit_lexicon_string(&lex);
        let back = parse_lexicon_str(&text).unwrap();
        assert_eq!(back, lex);
    }

    #[test]
    fn validate_flags_unknown_category() {
        let mut lex = LexiconFile::new();
        lex.push(
            SynsetId::new("00000001-r").unwrap(),
            entry("adv.all", "g", "a", "s1", &["ex"]),
        )
        .unwrap();
        let findings = validate_lexicon(&lex, &ValidateOptions::default());
        assert_eq!(findings.len(), 1);
        assert!(matches!(&findings[0], Finding::UnknownCategory { category, .. } if category == "adv.all"));
    }

    #[test]
    fn validate_flags_duplicates_and_missing_examples() {
        let mut lex = LexiconFile::new();
        lex.push(
            SynsetId::new("00000001-r").unwrap(),
            entry("manner", "same gloss", "softly", "s1", &[]),
        )
        .unwrap();
        lex.push(
            SynsetId::new("00000002-r").unwrap(),
            entry("manner", "same gloss", "softly", "s2", &["ok"]),
        )
        .unwrap();
        let findings = validate_lexicon(&lex, &ValidateOptions::default());
        assert!(findings
            .iter()
            .any(|f| matches!(f, Finding::MissingExamples { synset_id } if synset_id.as_str() == "00000001-r")));
        assert!(findings
            .iter()
            .any(|f| matches!(f, Finding::PossibleDuplicate { shared_lemma, .. } if shared_lemma == "softly")));
    }

    #[test]
    fn validate_range_check_spares_known_ids() {
        let mut lex = LexiconFile::new();
        lex.push(
            SynsetId::new("00000001-r").unwrap(),
            entry("manner", "g1", "a", "s1", &["e"]),
        )
        .unwrap();
        lex.push(
            SynsetId::new("00099999-r").unwrap(),
            entry("manner", "g2", "b", "s2", &["e2"]),
        )
        .unwrap();
        let options = ValidateOptions {
            new_id_range: Some((90_000_000, 99_999_999)),
            known_existing: [SynsetId::new("00000001-r").unwrap()].into_iter().collect(),
        };
        let findings = validate_lexicon(&lex, &options);
        assert_eq!(findings.len(), 1);
        assert!(matches!(&findings[0], Finding::IdRangeViolation { synset_id } if synset_id.as_str() == "00099999-r"));
    }

    fn scalar_strategy() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[ -~]{1,40}")
            .expect("regex")
            .prop_filter("nonempty after trim", |s| !s.trim().is_empty())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn random_lexicons_round_trip(
            seeds in proptest::collection::vec(
                (0u32..100_000_000, scalar_strategy(), scalar_strategy(),
                 proptest::collection::vec(scalar_strategy(), 0..3)),
                1..6
            )
        ) {
            let mut lex = LexiconFile::new();
            for (i, (num, gloss, lemma, examples)) in seeds.iter().enumerate() {
                let id = SynsetId::from_number(*num);
                if lex.get(&id).is_some() {
                    continue;
                }
                let entry = LexiconEntry {
                    category: "manner".to_string(),
                    gloss: gloss.clone(),
                    members: vec![Member {
                        lemma: lemma.clone(),
                        sense_id: format!("sense-{i}"),
                    }],
                    examples: examples.clone(),
                };
                lex.push(id, entry).unwrap();
            }
            let text = emit_lexicon_string(&lex);
            let back = parse_lexicon_str(&text).unwrap();
            prop_assert_eq!(&back, &lex);
            prop_assert_eq!(emit_lexicon_string(&back), text);
        }
    }
}
