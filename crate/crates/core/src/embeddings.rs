//! Embedding interchange format and the vector math used downstream.
//!
//! The embeddings file is JSONL: one header line declaring the
//! dimensionality and model tag, then one record per occurrence. Vectors
//! are decimal text read at full double precision, so files round-trip
//! bit-exactly across languages. The store validates every record on load;
//! all vector operations are pure functions.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("unreadable file {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing header line")]
    MissingHeader,
    #[error("malformed line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("header dimension {0} is too small (need >= 2)")]
    InvalidDimension(usize),
    #[error("vector dimension mismatch for {0}")]
    DimensionMismatch(String),
    #[error("non-finite vector entry for {0}")]
    NonFiniteVector(String),
    #[error("zero-norm vector for {0}")]
    ZeroNormVector(String),
    #[error("negative or non-finite masked entropy for {0}")]
    InvalidEntropy(String),
    #[error("duplicate occurrence id {0}")]
    DuplicateOccurrence(String),
    #[error("empty input")]
    EmptyInput,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Contextual vector plus masked-token entropy (nats) for one occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub occurrence_id: String,
    pub vector: Vec<f64>,
    pub masked_entropy: f64,
    pub model_tag: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireHeader {
    dimension: usize,
    model_tag: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    occurrence_id: String,
    vector: Vec<f64>,
    masked_entropy: f64,
}

/// Validated, immutable collection of embeddings sharing one dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    pub dimension: usize,
    pub model_tag: String,
    records: BTreeMap<String, EmbeddingRecord>,
}

impl EmbeddingStore {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, occurrence_id: &str) -> Option<&EmbeddingRecord> {
        self.records.get(occurrence_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &EmbeddingRecord> {
        self.records.values()
    }
}

fn validate_record(
    dimension: usize,
    id: &str,
    vector: &[f64],
    masked_entropy: f64,
) -> Result<(), EmbeddingError> {
    if vector.len() != dimension {
        return Err(EmbeddingError::DimensionMismatch(id.to_string()));
    }
    if vector.iter().any(|x| !x.is_finite()) {
        return Err(EmbeddingError::NonFiniteVector(id.to_string()));
    }
    if norm(vector) <= 0.0 {
        return Err(EmbeddingError::ZeroNormVector(id.to_string()));
    }
    if !masked_entropy.is_finite() || masked_entropy < 0.0 {
        return Err(EmbeddingError::InvalidEntropy(id.to_string()));
    }
    Ok(())
}

/// Load and validate an embeddings JSONL file.
pub fn load_store(path: &Path) -> Result<EmbeddingStore, EmbeddingError> {
    let file = fs::File::open(path).map_err(|e| EmbeddingError::UnreadableFile {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: WireHeader = loop {
        match lines.next() {
            None => return Err(EmbeddingError::MissingHeader),
            Some((lineno, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| EmbeddingError::MalformedLine {
                    line: lineno + 1,
                    detail: e.to_string(),
                })?;
            }
        }
    };
    if header.dimension < 2 {
        return Err(EmbeddingError::InvalidDimension(header.dimension));
    }
    let mut records = BTreeMap::new();
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireRecord =
            serde_json::from_str(&line).map_err(|e| EmbeddingError::MalformedLine {
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        validate_record(
            header.dimension,
            &wire.occurrence_id,
            &wire.vector,
            wire.masked_entropy,
        )?;
        let record = EmbeddingRecord {
            occurrence_id: wire.occurrence_id.clone(),
            vector: wire.vector,
            masked_entropy: wire.masked_entropy,
            model_tag: header.model_tag.clone(),
        };
        if records.insert(wire.occurrence_id.clone(), record).is_some() {
            return Err(EmbeddingError::DuplicateOccurrence(wire.occurrence_id));
        }
    }
    Ok(EmbeddingStore {
        dimension: header.dimension,
        model_tag: header.model_tag,
        records,
    })
}

/// Write an embeddings JSONL file: header line, then records in the given
/// order.
pub fn write_embeddings<W: Write>(
    mut w: W,
    dimension: usize,
    model_tag: &str,
    records: &[(String, Vec<f64>, f64)],
) -> Result<(), EmbeddingError> {
    let header = WireHeader {
        dimension,
        model_tag: model_tag.to_string(),
    };
    serde_json::to_writer(&mut w, &header).map_err(std::io::Error::other)?;
    w.write_all(b"\n")?;
    for (occurrence_id, vector, masked_entropy) in records {
        validate_record(dimension, occurrence_id, vector, *masked_entropy)?;
        let wire = WireRecord {
            occurrence_id: occurrence_id.clone(),
            vector: vector.clone(),
            masked_entropy: *masked_entropy,
        };
        serde_json::to_writer(&mut w, &wire).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Cosine distance: 1 - u.v / (|u||v|), in [0, 2].
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    Ok(1.0 - cosine_similarity(u, v)?)
}

/// Cosine similarity: u.v / (|u||v|), in [-1, 1].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch(format!(
            "{} vs {}",
            u.len(),
            v.len()
        )));
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu <= 0.0 || nv <= 0.0 {
        return Err(EmbeddingError::ZeroNormVector("operand".to_string()));
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Component-wise arithmetic mean of a nonempty uniform-dimension set.
pub fn centroid(vectors: &[&[f64]]) -> Result<Vec<f64>, EmbeddingError> {
    let first = vectors.first().ok_or(EmbeddingError::EmptyInput)?;
    let dim = first.len();
    let mut sum = vec![0.0f64; dim];
    for v in vectors {
        if v.len() != dim {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "{} vs {}",
                v.len(),
                dim
            )));
        }
        for (acc, x) in sum.iter_mut().zip(v.iter()) {
            *acc += x;
        }
    }
    let n = vectors.len() as f64;
    for acc in sum.iter_mut() {
        *acc /= n;
    }
    Ok(sum)
}

/// Upper-triangle pairwise distance matrix in condensed form: entry (i, j)
/// with i < j lives at `i*(2n-i-1)/2 + (j-i-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedMatrix {
    pub n: usize,
    data: Vec<f64>,
}

impl CondensedMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i != j && i < self.n && j < self.n);
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.data[i * (2 * self.n - i - 1) / 2 + (j - i - 1)]
    }
}

fn distance_row(vectors: &[Vec<f64>], norms: &[f64], i: usize) -> Vec<f64> {
    (i + 1..vectors.len())
        .map(|j| 1.0 - dot(&vectors[i], &vectors[j]) / (norms[i] * norms[j]))
        .collect()
}

/// All pairwise cosine distances. Rows are independent work items, so this
/// runs data-parallel under the `parallel` feature; output is identical to
/// the sequential path.
pub fn pairwise_cosine_distances(vectors: &[Vec<f64>]) -> Result<CondensedMatrix, EmbeddingError> {
    let norms = check_norms(vectors)?;
    let indices: Vec<usize> = (0..vectors.len()).collect();
    let rows = exec::map_ordered(&indices, |&i| distance_row(vectors, &norms, i));
    Ok(CondensedMatrix {
        n: vectors.len(),
        data: rows.into_iter().flatten().collect(),
    })
}

/// Sequential reference implementation of [`pairwise_cosine_distances`].
pub fn pairwise_cosine_distances_seq(
    vectors: &[Vec<f64>],
) -> Result<CondensedMatrix, EmbeddingError> {
    let norms = check_norms(vectors)?;
    let indices: Vec<usize> = (0..vectors.len()).collect();
    let rows = exec::map_ordered_seq(&indices, |&i| distance_row(vectors, &norms, i));
    Ok(CondensedMatrix {
        n: vectors.len(),
        data: rows.into_iter().flatten().collect(),
    })
}

fn check_norms(vectors: &[Vec<f64>]) -> Result<Vec<f64>, EmbeddingError> {
    if let Some(first) = vectors.first() {
        for v in vectors {
            if v.len() != first.len() {
                return Err(EmbeddingError::DimensionMismatch(format!(
                    "{} vs {}",
                    v.len(),
                    first.len()
                )));
            }
        }
    }
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = norm(v);
            if n <= 0.0 || !n.is_finite() {
                Err(EmbeddingError::ZeroNormVector(format!("index {i}")))
            } else {
                Ok(n)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_vectors_have_zero_distance() {
        let u = vec![1.0, 2.0, 3.0];
        assert!(cosine_distance(&u, &u).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn orthogonal_vectors_have_unit_distance() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_distance() {
        // dot = 1*1 + 1*0 = 1; |u| = sqrt(2); |v| = 1
        let expected = 1.0 - 1.0 / 2f64.sqrt();
        let got = cosine_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((got - expected).abs() <= 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            cosine_distance(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(EmbeddingError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(
            centroid(&[&[0.0, 0.0], &[2.0, 2.0]]).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(centroid(&[&[1.0, 0.0]]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(centroid(&[]), Err(EmbeddingError::EmptyInput)));
    }

    #[test]
    fn zero_centroid_is_reachable_and_poisons_cosine() {
        let c = centroid(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
        assert!(matches!(
            cosine_distance(&c, &[1.0, 0.0]),
            Err(EmbeddingError::ZeroNormVector(_))
        ));
    }

    fn write_file(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.jsonl");
        fs::write(&p, content).unwrap();
        (dir, p)
    }

    #[test]
    fn loads_valid_store() {
        let (_d, p) = write_file(
            "{\"dimension\": 4, \"model_tag\": \"test\"}\n\
             {\"occurrence_id\": \"a\", \"vector\": [1, 0, 0, 0], \"masked_entropy\": 0.5}\n\
             {\"occurrence_id\": \"b\", \"vector\": [0, 1, 0, 0], \"masked_entropy\": 1.5}\n\
             {\"occurrence_id\": \"c\", \"vector\": [0, 0, 1, 0], \"masked_entropy\": 0.0}\n",
        );
        let store = load_store(&p).unwrap();
        assert_eq!(store.len(), 3);
        assert_eq!(store.dimension, 4);
        assert_eq!(store.get("b").unwrap().model_tag, "test");
    }

    #[test]
    fn dimension_mismatch_on_load() {
        let (_d, p) = write_file(
            "{\"dimension\": 4, \"model_tag\": \"t\"}\n\
             {\"occurrence_id\": \"a\", \"vector\": [1, 0, 0], \"masked_entropy\": 0.5}\n",
        );
        assert!(matches!(
            load_store(&p),
            Err(EmbeddingError::DimensionMismatch(id)) if id == "a"
        ));
    }

    #[test]
    fn duplicate_id_on_load() {
        let (_d, p) = write_file(
            "{\"dimension\": 2, \"model_tag\": \"t\"}\n\
             {\"occurrence_id\": \"a\", \"vector\": [1, 0], \"masked_entropy\": 0.5}\n\
             {\"occurrence_id\": \"a\", \"vector\": [0, 1], \"masked_entropy\": 0.5}\n",
        );
        assert!(matches!(
            load_store(&p),
            Err(EmbeddingError::DuplicateOccurrence(id)) if id == "a"
        ));
    }

    #[test]
    fn negative_entropy_rejected() {
        let (_d, p) = write_file(
            "{\"dimension\": 2, \"model_tag\": \"t\"}\n\
             {\"occurrence_id\": \"a\", \"vector\": [1, 0], \"masked_entropy\": -0.1}\n",
        );
        assert!(matches!(load_store(&p), Err(EmbeddingError::InvalidEntropy(_))));
    }

    #[test]
    fn write_then_load_round_trips() {
        let records = vec![
            ("a".to_string(), vec![0.25, -1.5], 0.75),
            ("b".to_string(), vec![1e-3, 2e8], 3.25),
        ];
        let mut buf = Vec::new();
        write_embeddings(&mut buf, 2, "tag", &records).unwrap();
        let (_d, p) = write_file(std::str::from_utf8(&buf).unwrap());
        let store = load_store(&p).unwrap();
        assert_eq!(store.get("a").unwrap().vector, vec![0.25, -1.5]);
        assert_eq!(store.get("b").unwrap().masked_entropy, 3.25);
    }

    #[test]
    fn pairwise_parallel_matches_sequential() {
        let vectors: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                (0..6)
                    .map(|d| ((i * 7 + d * 13) % 23) as f64 - 11.0 + 0.5)
                    .collect()
            })
            .collect();
        let a = pairwise_cosine_distances(&vectors).unwrap();
        let b = pairwise_cosine_distances_seq(&vectors).unwrap();
        assert_eq!(a, b);
        // spot-check against the scalar op
        assert_eq!(
            a.get(3, 17),
            cosine_distance(&vectors[3], &vectors[17]).unwrap()
        );
    }

    fn nonzero_vector() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, 2..6)
            .prop_filter("nonzero norm", |v| norm(v) > 1e-6)
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(u in nonzero_vector(), v in nonzero_vector()) {
            prop_assume!(u.len() == v.len());
            prop_assert_eq!(
                cosine_distance(&u, &v).unwrap(),
                cosine_distance(&v, &u).unwrap()
            );
        }

        #[test]
        fn self_distance_is_zero(u in nonzero_vector()) {
            prop_assert!(cosine_distance(&u, &u).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn distance_in_range(u in nonzero_vector(), v in nonzero_vector()) {
            prop_assume!(u.len() == v.len());
            let d = cosine_distance(&u, &v).unwrap();
            prop_assert!(d >= -1e-12 && d <= 2.0 + 1e-12);
        }

        #[test]
        fn scale_invariance(u in nonzero_vector(), v in nonzero_vector(),
                            a in 0.01f64..100.0, b in 0.01f64..100.0) {
            prop_assume!(u.len() == v.len());
            let su: Vec<f64> = u.iter().map(|x| a * x).collect();
            let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
            let d1 = cosine_distance(&u, &v).unwrap();
            let d2 = cosine_distance(&su, &sv).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-9);
        }
    }
}
