//! The ten-way adverb supersense taxonomy and a cue-lexicon category
//! suggester.
//!
//! The suggester pre-fills the review UI and is never an authority: final
//! labels come from annotators. A cue-lexicon hit pins its category to the
//! top with score 1.0; otherwise a small position-and-suffix rule table
//! produces a deterministic total order (ties broken lexicographically on
//! category name).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::tokenize;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("unknown category: {0}")]
    UnknownCategory(String),
    #[error("lemma {lemma:?} does not occur as a token in {sentence:?}")]
    LemmaNotInSentence { lemma: String, sentence: String },
    #[error("cue lemma {lemma:?} listed under both {first} and {second}")]
    DuplicateCueLemma {
        lemma: String,
        first: SupersenseCategory,
        second: SupersenseCategory,
    },
    #[error("malformed cue lexicon at line {line}: {detail}")]
    MalformedCueLine { line: usize, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The closed set of ten adverb supersenses, ordered by semantic scope:
/// event-internal modifiers first, then agent- and speaker-level, then
/// discourse-level operators.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum SupersenseCategory {
    Manner,
    SubjectOriented,
    SpeakerOriented,
    Frequency,
    Temporal,
    Spatial,
    Degree,
    Domain,
    Focus,
    Conjunctive,
}

impl SupersenseCategory {
    pub const ALL: [SupersenseCategory; 10] = [
        SupersenseCategory::Manner,
        SupersenseCategory::SubjectOriented,
        SupersenseCategory::SpeakerOriented,
        SupersenseCategory::Frequency,
        SupersenseCategory::Temporal,
        SupersenseCategory::Spatial,
        SupersenseCategory::Degree,
        SupersenseCategory::Domain,
        SupersenseCategory::Focus,
        SupersenseCategory::Conjunctive,
    ];

    /// Stable lowercase serialization.
    pub fn as_str(self) -> &'static str {
        match self {
            SupersenseCategory::Manner => "manner",
            SupersenseCategory::SubjectOriented => "subject_oriented",
            SupersenseCategory::SpeakerOriented => "speaker_oriented",
            SupersenseCategory::Frequency => "frequency",
            SupersenseCategory::Temporal => "temporal",
            SupersenseCategory::Spatial => "spatial",
            SupersenseCategory::Degree => "degree",
            SupersenseCategory::Domain => "domain",
            SupersenseCategory::Focus => "focus",
            SupersenseCategory::Conjunctive => "conjunctive",
        }
    }
}

impl fmt::Display for SupersenseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SupersenseCategory {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_category(s)
    }
}

/// Case-insensitive parse of one of the ten canonical labels.
pub fn parse_category(label: &str) -> Result<SupersenseCategory, TaxonomyError> {
    let lower = label.trim().to_lowercase();
    SupersenseCategory::ALL
        .into_iter()
        .find(|c| c.as_str() == lower)
        .ok_or_else(|| TaxonomyError::UnknownCategory(label.to_string()))
}

/// Review aids for one category: the paraphrase test, the probe question,
/// and the seed adverbs that typify it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryDiagnostic {
    pub category: SupersenseCategory,
    pub paraphrase_template: String,
    pub probe_question: String,
    pub cue_lexicon: Vec<String>,
}

fn diagnostic_texts(category: SupersenseCategory) -> (&'static str, &'static str) {
    match category {
        SupersenseCategory::Manner => ("in a [X] manner", "How was it done?"),
        SupersenseCategory::SubjectOriented => (
            "It was [X] of [SUBJECT] to [VERB]",
            "What does it say about the subject?",
        ),
        SupersenseCategory::SpeakerOriented => (
            "It is [X] that ... / I say this [X]",
            "What is the speaker's stance toward the proposition?",
        ),
        SupersenseCategory::Frequency => ("with [X] regularity", "How often?"),
        SupersenseCategory::Temporal => ("at a [X] time", "When? For how long?"),
        SupersenseCategory::Spatial => ("in/at a [X] place", "Where?"),
        SupersenseCategory::Degree => ("to a [X] extent", "To what extent? How much?"),
        SupersenseCategory::Domain => ("in a [X] sense", "From which perspective or discipline?"),
        SupersenseCategory::Focus => (
            "[X] this constituent",
            "Does it mark inclusion, exclusion, or emphasis?",
        ),
        SupersenseCategory::Conjunctive => (
            "in contrast / as a consequence",
            "How does it relate the clause to prior discourse?",
        ),
    }
}

/// The taxonomy plus its loaded cue lexicons. Immutable after load; safe to
/// share across any number of readers.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    diagnostics: Vec<CategoryDiagnostic>,
    cue_index: BTreeMap<String, SupersenseCategory>,
}

impl Taxonomy {
    /// Taxonomy with the shipped seed cue lexicon.
    pub fn builtin() -> Taxonomy {
        Taxonomy::from_cue_text(include_str!("../data/cue_lexicon.tsv"))
            .expect("shipped cue lexicon is well-formed")
    }

    /// Parse a cue lexicon: one `category<TAB>lemma` record per line, `#`
    /// comments and blank lines ignored. Lemmas must be disjoint across
    /// categories.
    pub fn from_cue_text(text: &str) -> Result<Taxonomy, TaxonomyError> {
        let mut cue_index = BTreeMap::new();
        let mut per_category: BTreeMap<SupersenseCategory, Vec<String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (cat_str, lemma) =
                line.split_once('\t')
                    .ok_or_else(|| TaxonomyError::MalformedCueLine {
                        line: lineno + 1,
                        detail: "expected category<TAB>lemma".to_string(),
                    })?;
            let category = parse_category(cat_str)?;
            let lemma = lemma.trim().to_lowercase();
            if lemma.is_empty() {
                return Err(TaxonomyError::MalformedCueLine {
                    line: lineno + 1,
                    detail: "empty lemma".to_string(),
                });
            }
            if let Some(&first) = cue_index.get(&lemma) {
                return Err(TaxonomyError::DuplicateCueLemma {
                    lemma,
                    first,
                    second: category,
                });
            }
            cue_index.insert(lemma.clone(), category);
            per_category.entry(category).or_default().push(lemma);
        }
        let diagnostics = SupersenseCategory::ALL
            .into_iter()
            .map(|category| {
                let (paraphrase, probe) = diagnostic_texts(category);
                let mut cues = per_category.remove(&category).unwrap_or_default();
                cues.sort();
                CategoryDiagnostic {
                    category,
                    paraphrase_template: paraphrase.to_string(),
                    probe_question: probe.to_string(),
                    cue_lexicon: cues,
                }
            })
            .collect();
        Ok(Taxonomy {
            diagnostics,
            cue_index,
        })
    }

    pub fn from_cue_file(path: &Path) -> Result<Taxonomy, TaxonomyError> {
        Taxonomy::from_cue_text(&std::fs::read_to_string(path)?)
    }

    pub fn diagnostics(&self) -> &[CategoryDiagnostic] {
        &self.diagnostics
    }

    pub fn diagnostic(&self, category: SupersenseCategory) -> &CategoryDiagnostic {
        &self.diagnostics[SupersenseCategory::ALL
            .iter()
            .position(|c| *c == category)
            .expect("category in ALL")]
    }

    pub fn cue_category(&self, lemma: &str) -> Option<SupersenseCategory> {
        self.cue_index.get(&lemma.to_lowercase()).copied()
    }

    /// Rank all ten categories for one usage of `lemma` in `sentence`.
    ///
    /// Scores are in [0, 1]; the order is total and deterministic. The rule
    /// table: a cue hit scores 1.0; "-ly" forms default to manner unless
    /// sentence-initial (then speaker- and subject-oriented move up);
    /// directional/locative suffixes boost spatial, "-times" frequency,
    /// "-wise" domain; sentence-initial bare forms boost conjunctive and
    /// sentence-final ones spatial/temporal.
    pub fn suggest_category(
        &self,
        lemma: &str,
        sentence: &str,
    ) -> Result<Vec<(SupersenseCategory, f64)>, TaxonomyError> {
        use SupersenseCategory::*;
        let lemma = lemma.to_lowercase();
        let tokens = tokenize(sentence);
        let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        let position = lowered.iter().position(|t| *t == lemma).ok_or_else(|| {
            TaxonomyError::LemmaNotInSentence {
                lemma: lemma.clone(),
                sentence: sentence.to_string(),
            }
        })?;

        let mut scores: BTreeMap<SupersenseCategory, f64> = SupersenseCategory::ALL
            .into_iter()
            .map(|c| (c, if c == Manner { 0.10 } else { 0.05 }))
            .collect();
        let is_word = |t: &str| t.chars().any(|c| c.is_alphanumeric());
        let last_word = lowered.iter().rposition(|t| is_word(t));
        let sentence_initial = position == 0;
        let sentence_final = last_word == Some(position);
        let ends_ly = lemma.ends_with("ly") && lemma.chars().count() >= 5;

        let mut bump = |cat: SupersenseCategory, amount: f64| {
            *scores.get_mut(&cat).expect("all categories present") += amount;
        };
        if ends_ly {
            bump(Manner, 0.50);
            bump(Degree, 0.10);
            bump(SubjectOriented, 0.05);
            if sentence_initial {
                bump(SpeakerOriented, 0.60);
                bump(SubjectOriented, 0.30);
            }
        } else {
            if lemma.ends_with("ward") || lemma.ends_with("wards") || lemma.ends_with("where") {
                bump(Spatial, 0.50);
            }
            if lemma.ends_with("times") {
                bump(Frequency, 0.50);
            }
            if lemma.ends_with("wise") {
                bump(Domain, 0.45);
            }
            if sentence_initial {
                bump(Conjunctive, 0.40);
                bump(Temporal, 0.10);
            }
            if sentence_final {
                bump(Spatial, 0.30);
                bump(Temporal, 0.25);
            }
        }
        if let Some(cue) = self.cue_category(&lemma) {
            scores.insert(cue, 1.0);
        }

        let mut ranked: Vec<(SupersenseCategory, f64)> = scores.into_iter().collect();
        ranked.sort_by(|(ca, sa), (cb, sb)| {
            sb.partial_cmp(sa)
                .expect("scores are finite")
                .then_with(|| ca.as_str().cmp(cb.as_str()))
        });
        Ok(ranked)
    }
}
