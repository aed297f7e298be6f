//! Synthetic planted-sense demo: a small corpus plus fake embeddings that
//! let the whole pipeline run with no model downloads.
//!
//! Each lemma gets a fixed number of planted senses; each sense is a tight
//! blob around its own coordinate axis, so agglomerative clustering at the
//! default threshold recovers the plant exactly. Per sense, one in-window
//! sentence is planted with the minimal entropy (the expected prototypical
//! example) and two decoys sit outside the token window with even lower
//! entropies, which exercises the length filter. Everything is driven by a
//! seeded RNG and plain arithmetic, so identical seeds produce identical
//! bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{extract_corpus, ingest, AdverbOccurrence, CorpusError, ExtractionLexicon, IngestFormat};
use crate::embeddings::{write_embeddings, EmbeddingError};

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("generator invariant violated: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSpec {
    pub lemmas: Vec<String>,
    pub senses_per_lemma: usize,
    pub occurrences_per_sense: usize,
    pub dimension: usize,
    pub sentences_per_document: usize,
}

impl Default for DemoSpec {
    fn default() -> Self {
        DemoSpec {
            lemmas: ["brightly", "coldly", "faintly", "sharply", "stiffly"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            senses_per_lemma: 5,
            occurrences_per_sense: 25,
            dimension: 8,
            sentences_per_document: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSense {
    pub label: usize,
    pub occurrence_ids: Vec<String>,
    pub expected_example_id: String,
    pub expected_example_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedLemma {
    pub lemma: String,
    pub senses: Vec<PlantedSense>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoTruth {
    pub seed: u64,
    pub expected_occurrence_count: usize,
    pub lemmas: Vec<PlantedLemma>,
}

#[derive(Debug, Clone)]
pub struct DemoFiles {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub truth: PathBuf,
}

// none of these are known adverbs, none end in an adverbial suffix
const FILLER: [&str; 20] = [
    "the", "old", "man", "grey", "bird", "garden", "stone", "river", "door", "wind", "night",
    "morning", "tower", "cloud", "path", "field", "lamp", "boat", "wall", "tree",
];
const VERBS: [&str; 6] = ["moved", "turned", "sang", "walked", "looked", "spoke"];

struct PlannedSentence {
    lemma_index: usize,
    sense: usize,
    kind: SentenceKind,
    text: String,
    token_count: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum SentenceKind {
    /// The planted minimum-entropy in-window sentence.
    Prototype,
    /// Below the window with the globally lowest entropy.
    ShortDecoy,
    /// Above the window, second-lowest entropy.
    LongDecoy,
    Plain,
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Build one sentence of exactly `token_count` tokens (the terminal period
/// counts as a token) with the lemma at a non-initial position.
fn build_sentence(lemma: &str, token_count: usize, variant: usize) -> String {
    assert!(token_count >= 3);
    let word_count = token_count - 1;
    let verb = VERBS[variant % VERBS.len()];
    let lemma_pos = 1 + (variant % (word_count - 1).max(1)).min(word_count - 2);
    let mut words = Vec::with_capacity(word_count);
    for i in 0..word_count {
        if i == lemma_pos {
            words.push(lemma.to_string());
        } else if i + 1 == lemma_pos {
            words.push(verb.to_string());
        } else {
            words.push(FILLER[(variant * 3 + i * 7) % FILLER.len()].to_string());
        }
    }
    words[0] = capitalize(&words[0]);
    format!("{}.", words.join(" "))
}

fn plan_sentences(spec: &DemoSpec) -> Vec<PlannedSentence> {
    let mut planned = Vec::new();
    for (li, lemma) in spec.lemmas.iter().enumerate() {
        for sense in 0..spec.senses_per_lemma {
            for k in 0..spec.occurrences_per_sense {
                let variant = li * 97 + sense * 31 + k * 7;
                let (kind, text, token_count) = match k {
                    0 => {
                        let text = build_sentence(lemma, 9, variant);
                        (SentenceKind::Prototype, text, 9)
                    }
                    1 => {
                        // one word plus period: 2 tokens, below the window
                        (SentenceKind::ShortDecoy, format!("{}.", capitalize(lemma)), 2)
                    }
                    2 => {
                        let text = build_sentence(lemma, 22, variant);
                        (SentenceKind::LongDecoy, text, 22)
                    }
                    _ => {
                        let len = 5 + (variant % 14); // lengths 5..=18
                        let text = build_sentence(lemma, len, variant);
                        (SentenceKind::Plain, text, len)
                    }
                };
                planned.push(PlannedSentence {
                    lemma_index: li,
                    sense,
                    kind,
                    text,
                    token_count,
                });
            }
        }
    }
    planned
}

/// Generate the demo corpus, fake embeddings and planted-truth file into a
/// run directory. Returns the truth record.
pub fn generate(run_dir: &Path, seed: u64, spec: &DemoSpec) -> Result<(DemoTruth, DemoFiles), DemoError> {
    let planned = plan_sentences(spec);

    // corpus JSONL: documents of `sentences_per_document` sentences each
    let corpus_dir = run_dir.join("corpus");
    std::fs::create_dir_all(&corpus_dir)?;
    let corpus_path = corpus_dir.join("demo.jsonl");
    let mut corpus_text = String::new();
    for (i, chunk) in planned.chunks(spec.sentences_per_document).enumerate() {
        let text: Vec<&str> = chunk.iter().map(|p| p.text.as_str()).collect();
        let record = serde_json::json!({
            "id": format!("demo-{:04}", i + 1),
            "text": text.join(" "),
            "source": "demo",
        });
        corpus_text.push_str(&serde_json::to_string(&record).map_err(std::io::Error::other)?);
        corpus_text.push('\n');
    }
    std::fs::write(&corpus_path, &corpus_text)?;

    // run real extraction over the generated corpus; the planted sentences
    // must be recovered one-for-one, in order
    let docs = ingest(&[corpus_path.clone()], IngestFormat::Jsonl)?;
    let lexicon = ExtractionLexicon::default();
    let occurrences = extract_corpus(&docs, &lexicon);
    if occurrences.len() != planned.len() {
        return Err(DemoError::Invariant(format!(
            "extracted {} occurrences, planted {}",
            occurrences.len(),
            planned.len()
        )));
    }
    for (occ, plan) in occurrences.iter().zip(&planned) {
        let expected_lemma = &spec.lemmas[plan.lemma_index];
        if &occ.lemma != expected_lemma {
            return Err(DemoError::Invariant(format!(
                "occurrence {} extracted lemma {} where {} was planted",
                occ.occurrence_id, occ.lemma, expected_lemma
            )));
        }
        if occ.token_count != plan.token_count {
            return Err(DemoError::Invariant(format!(
                "occurrence {} has {} tokens, planned {}",
                occ.occurrence_id, occ.token_count, plan.token_count
            )));
        }
    }

    // fake embeddings: one tight blob per (lemma, sense) around basis axis
    // `sense`, plus planted entropies
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(planned.len());
    let mut truth_lemmas: BTreeMap<usize, BTreeMap<usize, PlantedSense>> = BTreeMap::new();
    for (occ, plan) in occurrences.iter().zip(&planned) {
        let mut vector = vec![0.0f64; spec.dimension];
        vector[plan.sense % spec.dimension] = 1.0;
        for x in vector.iter_mut() {
            *x += rng.random_range(-0.05..0.05);
        }
        let entropy = match plan.kind {
            SentenceKind::Prototype => 0.1,
            SentenceKind::ShortDecoy => 0.01,
            SentenceKind::LongDecoy => 0.02,
            SentenceKind::Plain => rng.random_range(0.5..5.0),
        };
        records.push((occ.occurrence_id.clone(), vector, entropy));
        let sense_truth = truth_lemmas
            .entry(plan.lemma_index)
            .or_default()
            .entry(plan.sense)
            .or_insert_with(|| PlantedSense {
                label: plan.sense,
                occurrence_ids: Vec::new(),
                expected_example_id: String::new(),
                expected_example_text: String::new(),
            });
        sense_truth.occurrence_ids.push(occ.occurrence_id.clone());
        if plan.kind == SentenceKind::Prototype {
            sense_truth.expected_example_id = occ.occurrence_id.clone();
            sense_truth.expected_example_text = occ.sentence_text.clone();
        }
    }

    let embeddings_path = run_dir.join("embeddings.jsonl");
    let mut buf = Vec::new();
    write_embeddings(
        &mut buf,
        spec.dimension,
        &format!("fake-demo/seed{seed}"),
        &records,
    )?;
    std::fs::write(&embeddings_path, &buf)?;

    let truth = DemoTruth {
        seed,
        expected_occurrence_count: planned.len(),
        lemmas: truth_lemmas
            .into_iter()
            .map(|(li, senses)| PlantedLemma {
                lemma: spec.lemmas[li].clone(),
                senses: senses.into_values().collect(),
            })
            .collect(),
    };
    let truth_path = run_dir.join("demo_truth.json");
    let mut truth_text =
        serde_json::to_string_pretty(&truth).map_err(std::io::Error::other)?;
    truth_text.push('\n');
    std::fs::write(&truth_path, &truth_text)?;

    Ok((
        truth,
        DemoFiles {
            corpus: corpus_path,
            embeddings: embeddings_path,
            truth: truth_path,
        },
    ))
}

/// Convenience for tests: regenerate and return the occurrences the demo
/// corpus extracts with the default lexicon.
pub fn extract_demo_occurrences(corpus_path: &Path) -> Result<Vec<AdverbOccurrence>, DemoError> {
    let docs = ingest(&[corpus_path.to_path_buf()], IngestFormat::Jsonl)?;
    Ok(extract_corpus(&docs, &ExtractionLexicon::default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filler_words_are_extraction_safe() {
        let lexicon = ExtractionLexicon::default();
        for word in FILLER.iter().chain(VERBS.iter()) {
            assert!(
                !lexicon.known_adverbs.contains(*word),
                "{word} is a known adverb"
            );
            assert!(!word.ends_with("ly"), "{word} would match the suffix rule");
        }
    }

    #[test]
    fn demo_lemmas_stay_out_of_the_cue_lexicon() {
        let taxonomy = crate::taxonomy::Taxonomy::builtin();
        for lemma in DemoSpec::default().lemmas {
            assert!(taxonomy.cue_category(&lemma).is_none(), "{lemma} is cued");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let spec = DemoSpec {
            lemmas: vec!["brightly".to_string(), "coldly".to_string()],
            senses_per_lemma: 2,
            occurrences_per_sense: 4,
            dimension: 4,
            sentences_per_document: 3,
        };
        let (truth_a, files_a) = generate(dir_a.path(), 7, &spec).unwrap();
        let (truth_b, files_b) = generate(dir_b.path(), 7, &spec).unwrap();
        assert_eq!(truth_a, truth_b);
        for (a, b) in [
            (&files_a.corpus, &files_b.corpus),
            (&files_a.embeddings, &files_b.embeddings),
            (&files_a.truth, &files_b.truth),
        ] {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
        let (truth_c, _) = generate(dir_a.path(), 8, &spec).unwrap();
        assert_ne!(truth_a, truth_c);
    }

    #[test]
    fn planted_counts_and_windows() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DemoSpec::default();
        let (truth, files) = generate(dir.path(), 42, &spec).unwrap();
        assert_eq!(truth.expected_occurrence_count, 5 * 5 * 25);
        assert_eq!(truth.lemmas.len(), 5);
        for lemma in &truth.lemmas {
            assert_eq!(lemma.senses.len(), 5);
            for sense in &lemma.senses {
                assert_eq!(sense.occurrence_ids.len(), 25);
                assert!(!sense.expected_example_id.is_empty());
            }
        }
        let store = crate::embeddings::load_store(&files.embeddings).unwrap();
        assert_eq!(store.len(), 625);
        assert!(store.records().all(|r| r.masked_entropy >= 0.0));
    }
}
