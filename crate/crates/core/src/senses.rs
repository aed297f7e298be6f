//! Sense induction: cluster each adverb's occurrences bottom-up over cosine
//! distance, pick a prototypical example per cluster, and draft sense
//! entries for human review.
//!
//! Clustering is agglomerative: start from singletons and repeatedly merge
//! the closest pair of clusters under the configured linkage until the
//! minimum inter-cluster distance exceeds the threshold. The sense count is
//! emergent, never predefined. Clusters smaller than `min_cluster_size` are
//! dropped into a residual report rather than silently deleted.
//!
//! Determinism: merge ties break on the smallest member index of each
//! cluster, output clusters sort by descending size then smallest member
//! id, and every id is a content hash of its inputs.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content_id;
use crate::corpus::AdverbOccurrence;
use crate::embeddings::{
    centroid, pairwise_cosine_distances, CondensedMatrix, EmbeddingError, EmbeddingStore,
};
use crate::exec;
use crate::taxonomy::SupersenseCategory;

#[derive(Debug, Error)]
pub enum SenseError {
    #[error("no embedding for occurrence {0}")]
    MissingEmbedding(String),
    #[error("no occurrence record for {0}")]
    MissingOccurrence(String),
    #[error("duplicate occurrence id {0}")]
    DuplicateOccurrence(String),
    #[error("occurrence {id} has lemma {found:?}, expected {expected:?}")]
    MixedLemma {
        id: String,
        expected: String,
        found: String,
    },
    #[error("invalid cluster params: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("malformed record at {path}:{line}: {detail}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Average,
    Complete,
    Single,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(format!("unknown linkage {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub distance_threshold: f64,
    pub min_cluster_size: usize,
    pub linkage: Linkage,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            distance_threshold: 0.4,
            min_cluster_size: 100,
            linkage: Linkage::Average,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<(), SenseError> {
        if !(self.distance_threshold > 0.0 && self.distance_threshold < 2.0) {
            return Err(SenseError::InvalidParams(format!(
                "distance_threshold {} outside (0, 2)",
                self.distance_threshold
            )));
        }
        if self.min_cluster_size < 1 {
            return Err(SenseError::InvalidParams(
                "min_cluster_size must be >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Token-length window for prototypical examples, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleFilter {
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl Default for ExampleFilter {
    fn default() -> Self {
        ExampleFilter {
            min_tokens: 3,
            max_tokens: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "target")]
pub enum ClusterStatus {
    Candidate,
    Validated,
    Discarded,
    MergedInto(String),
}

/// One induced candidate sense: member occurrences plus their centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseCluster {
    pub cluster_id: String,
    pub lemma: String,
    pub member_ids: Vec<String>,
    pub centroid: Vec<f64>,
    #[serde(flatten)]
    pub status: ClusterStatus,
}

/// Occurrence dropped by the size filter, kept for annotator review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub occurrence_id: String,
    pub lemma: String,
    pub reason: String,
    pub dropped_cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterOutcome {
    pub clusters: Vec<SenseCluster>,
    pub residual: Vec<ResidualRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Auto,
    HumanValidated,
}

/// A drafted or validated sense entry. Drafts carry the suggester's top
/// category and a template gloss; review promotes them to human_validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseEntry {
    pub sense_id: String,
    pub lemma: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub category: Option<SupersenseCategory>,
    pub gloss: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub example: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub example_occurrence_id: Option<String>,
    pub cluster_id: String,
    pub provenance: Provenance,
}

impl SenseEntry {
    /// A human_validated entry must carry a category, a nonempty gloss and
    /// a verified example.
    pub fn check_validated(&self) -> Result<(), String> {
        if self.provenance != Provenance::HumanValidated {
            return Err(format!("{} is not human_validated", self.sense_id));
        }
        if self.category.is_none() {
            return Err(format!("{} has no category", self.sense_id));
        }
        if self.gloss.trim().is_empty() {
            return Err(format!("{} has an empty gloss", self.sense_id));
        }
        if self.example.as_deref().map_or(true, |e| e.trim().is_empty()) {
            return Err(format!("{} has no verified example", self.sense_id));
        }
        Ok(())
    }
}

fn linkage_update(linkage: Linkage, da: f64, db: f64, na: usize, nb: usize) -> f64 {
    match linkage {
        Linkage::Single => da.min(db),
        Linkage::Complete => da.max(db),
        Linkage::Average => (na as f64 * da + nb as f64 * db) / ((na + nb) as f64),
    }
}

/// Bottom-up agglomerative clustering with a distance-threshold stop.
///
/// Merging continues while the minimum inter-cluster linkage distance is at
/// most `threshold` (a pair exactly at the threshold still merges). Among
/// minimal pairs, the one with the lexicographically smallest pair of
/// cluster representatives (each cluster's smallest member index) merges
/// first, which makes the merge sequence - and with it the final partition
/// - fully deterministic. Returns sorted member-index groups, ordered by
/// smallest member.
pub fn agglomerate(dist: &CondensedMatrix, linkage: Linkage, threshold: f64) -> Vec<Vec<usize>> {
    let n = dist.n;
    if n == 0 {
        return Vec::new();
    }
    // slot i holds the cluster whose smallest member is i (or nothing once
    // merged away); inter-cluster distances live in a dense n*n buffer.
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist.get(i, j);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if members[a].is_none() {
                continue;
            }
            for b in (a + 1)..n {
                if members[b].is_none() {
                    continue;
                }
                let dab = d[a * n + b];
                let candidate = (dab, a, b);
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        if candidate.0 < cur.0
                            || (candidate.0 == cur.0 && (candidate.1, candidate.2) < (cur.1, cur.2))
                        {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        let Some((dmin, a, b)) = best else { break };
        if dmin > threshold {
            break;
        }
        let absorbed = members[b].take().expect("b is active");
        let na = members[a].as_ref().expect("a is active").len();
        let nb = absorbed.len();
        for k in 0..n {
            if k == a || members[k].is_none() {
                continue;
            }
            let updated = linkage_update(linkage, d[a * n + k], d[b * n + k], na, nb);
            d[a * n + k] = updated;
            d[k * n + a] = updated;
        }
        let merged = members[a].as_mut().expect("a is active");
        merged.extend(absorbed);
        merged.sort_unstable();
    }
    members.into_iter().flatten().collect()
}

/// Cluster one lemma's occurrences into candidate senses.
///
/// Occurrences are canonicalized by sorting on occurrence id, so the result
/// does not depend on input order. Groups below `min_cluster_size` go to
/// the residual report. Output clusters sort by descending size, then by
/// smallest member id.
pub fn cluster_senses(
    lemma: &str,
    occurrences: &[AdverbOccurrence],
    store: &EmbeddingStore,
    params: &ClusterParams,
) -> Result<ClusterOutcome, SenseError> {
    params.validate()?;
    let mut sorted: Vec<&AdverbOccurrence> = occurrences.iter().collect();
    sorted.sort_by(|a, b| a.occurrence_id.cmp(&b.occurrence_id));
    for pair in sorted.windows(2) {
        if pair[0].occurrence_id == pair[1].occurrence_id {
            return Err(SenseError::DuplicateOccurrence(pair[0].occurrence_id.clone()));
        }
    }
    let mut vectors = Vec::with_capacity(sorted.len());
    for occ in &sorted {
        if occ.lemma != lemma {
            return Err(SenseError::MixedLemma {
                id: occ.occurrence_id.clone(),
                expected: lemma.to_string(),
                found: occ.lemma.clone(),
            });
        }
        let record = store
            .get(&occ.occurrence_id)
            .ok_or_else(|| SenseError::MissingEmbedding(occ.occurrence_id.clone()))?;
        vectors.push(record.vector.clone());
    }
    if sorted.is_empty() {
        return Ok(ClusterOutcome::default());
    }
    let dist = pairwise_cosine_distances(&vectors)?;
    let partition = agglomerate(&dist, params.linkage, params.distance_threshold);

    let mut clusters = Vec::new();
    let mut residual = Vec::new();
    for group in partition {
        if group.len() < params.min_cluster_size {
            for idx in group.iter() {
                residual.push(ResidualRecord {
                    occurrence_id: sorted[*idx].occurrence_id.clone(),
                    lemma: lemma.to_string(),
                    reason: "below_min_cluster_size".to_string(),
                    dropped_cluster_size: group.len(),
                });
            }
            continue;
        }
        let member_ids: Vec<String> = group
            .iter()
            .map(|&idx| sorted[idx].occurrence_id.clone())
            .collect();
        let member_vectors: Vec<&[f64]> =
            group.iter().map(|&idx| vectors[idx].as_slice()).collect();
        let mut id_parts: Vec<&str> = vec![lemma];
        id_parts.extend(member_ids.iter().map(|s| s.as_str()));
        clusters.push(SenseCluster {
            cluster_id: format!("c{}", content_id("cluster", &id_parts)),
            lemma: lemma.to_string(),
            centroid: centroid(&member_vectors)?,
            member_ids,
            status: ClusterStatus::Candidate,
        });
    }
    clusters.sort_by(|a, b| {
        b.member_ids
            .len()
            .cmp(&a.member_ids.len())
            .then_with(|| a.member_ids[0].cmp(&b.member_ids[0]))
    });
    residual.sort_by(|a, b| a.occurrence_id.cmp(&b.occurrence_id));
    Ok(ClusterOutcome { clusters, residual })
}

fn group_by_lemma(occurrences: &[AdverbOccurrence]) -> BTreeMap<String, Vec<AdverbOccurrence>> {
    let mut groups: BTreeMap<String, Vec<AdverbOccurrence>> = BTreeMap::new();
    for occ in occurrences {
        groups.entry(occ.lemma.clone()).or_default().push(occ.clone());
    }
    groups
}

fn merge_outcomes(results: Vec<Result<ClusterOutcome, SenseError>>) -> Result<ClusterOutcome, SenseError> {
    let mut merged = ClusterOutcome::default();
    for result in results {
        let outcome = result?;
        merged.clusters.extend(outcome.clusters);
        merged.residual.extend(outcome.residual);
    }
    Ok(merged)
}

/// Cluster every lemma in an occurrence set. Per-lemma jobs are independent
/// and run data-parallel under the `parallel` feature; results merge in
/// lemma order either way.
pub fn cluster_all_lemmas(
    occurrences: &[AdverbOccurrence],
    store: &EmbeddingStore,
    params: &ClusterParams,
) -> Result<ClusterOutcome, SenseError> {
    let groups: Vec<(String, Vec<AdverbOccurrence>)> = group_by_lemma(occurrences).into_iter().collect();
    merge_outcomes(exec::map_ordered(&groups, |(lemma, occs)| {
        cluster_senses(lemma, occs, store, params)
    }))
}

/// Sequential reference implementation of [`cluster_all_lemmas`].
pub fn cluster_all_lemmas_seq(
    occurrences: &[AdverbOccurrence],
    store: &EmbeddingStore,
    params: &ClusterParams,
) -> Result<ClusterOutcome, SenseError> {
    let groups: Vec<(String, Vec<AdverbOccurrence>)> = group_by_lemma(occurrences).into_iter().collect();
    merge_outcomes(exec::map_ordered_seq(&groups, |(lemma, occs)| {
        cluster_senses(lemma, occs, store, params)
    }))
}

/// Pick the prototypical example: among members whose sentence length falls
/// inside the filter window (inclusive), the one with minimal masked
/// entropy, ties broken by lexicographic occurrence id. `None` means no
/// member is eligible and an annotator must source an example manually.
pub fn select_example(
    cluster: &SenseCluster,
    occurrences: &BTreeMap<String, AdverbOccurrence>,
    store: &EmbeddingStore,
    filter: &ExampleFilter,
) -> Result<Option<(String, String)>, SenseError> {
    let mut best: Option<(f64, &str, &str)> = None;
    let mut member_ids: Vec<&String> = cluster.member_ids.iter().collect();
    member_ids.sort();
    for id in member_ids {
        let occ = occurrences
            .get(id)
            .ok_or_else(|| SenseError::MissingOccurrence(id.clone()))?;
        if occ.token_count < filter.min_tokens || occ.token_count > filter.max_tokens {
            continue;
        }
        let record = store
            .get(id)
            .ok_or_else(|| SenseError::MissingEmbedding(id.clone()))?;
        let entropy = record.masked_entropy;
        best = match best {
            None => Some((entropy, id, &occ.sentence_text)),
            Some(cur) if entropy < cur.0 => Some((entropy, id, &occ.sentence_text)),
            Some(cur) => Some(cur),
        };
    }
    Ok(best.map(|(_, id, sentence)| (sentence.to_string(), id.to_string())))
}

/// Build the pre-human draft entry for a cluster. `ordinal` is the sense
/// number within the lemma (1-based, in cluster output order); the category
/// is the suggester's top choice with provenance `auto`.
pub fn draft_entry(
    cluster: &SenseCluster,
    ordinal: usize,
    example: Option<(String, String)>,
    suggestions: &[(SupersenseCategory, f64)],
) -> SenseEntry {
    let gloss = match &example {
        Some((sentence, _)) => format!(
            "{} (sense {}): as in '{}'",
            cluster.lemma, ordinal, sentence
        ),
        None => format!("{} (sense {})", cluster.lemma, ordinal),
    };
    let (example, example_occurrence_id) = match example {
        Some((sentence, id)) => (Some(sentence), Some(id)),
        None => (None, None),
    };
    SenseEntry {
        sense_id: format!("s{}", content_id("sense", &[&cluster.cluster_id])),
        lemma: cluster.lemma.clone(),
        category: suggestions.first().map(|(c, _)| *c),
        gloss,
        example,
        example_occurrence_id,
        cluster_id: cluster.cluster_id.clone(),
        provenance: Provenance::Auto,
    }
}

fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<(), SenseError> {
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, SenseError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| SenseError::MalformedRecord {
                path: path.to_path_buf(),
                line: lineno + 1,
                detail: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn write_clusters<W: Write>(w: W, clusters: &[SenseCluster]) -> Result<(), SenseError> {
    write_jsonl(w, clusters)
}

pub fn read_clusters(path: &Path) -> Result<Vec<SenseCluster>, SenseError> {
    read_jsonl(path)
}

pub fn write_residual<W: Write>(w: W, residual: &[ResidualRecord]) -> Result<(), SenseError> {
    write_jsonl(w, residual)
}

pub fn write_senses<W: Write>(w: W, senses: &[SenseEntry]) -> Result<(), SenseError> {
    write_jsonl(w, senses)
}

pub fn read_senses(path: &Path) -> Result<Vec<SenseEntry>, SenseError> {
    read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::pairwise_cosine_distances_seq;
    use proptest::prelude::*;

    fn occ(id: &str, lemma: &str, token_count: usize) -> AdverbOccurrence {
        AdverbOccurrence {
            occurrence_id: id.to_string(),
            lemma: lemma.to_string(),
            surface: lemma.to_string(),
            sentence_text: format!("sentence for {id}"),
            token_index: 0,
            token_count,
            source: "test".to_string(),
        }
    }

    fn store_from(records: Vec<(String, Vec<f64>, f64)>, dim: usize) -> EmbeddingStore {
        let mut buf = Vec::new();
        crate::embeddings::write_embeddings(&mut buf, dim, "test", &records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.jsonl");
        std::fs::write(&p, &buf).unwrap();
        crate::embeddings::load_store(&p).unwrap()
    }

    fn blob(center: &[f64], jitter: f64, index: usize) -> Vec<f64> {
        center
            .iter()
            .enumerate()
            .map(|(d, &c)| c + jitter * (((index * 31 + d * 17) % 7) as f64 - 3.0) / 3.0)
            .collect()
    }

    #[test]
    fn hand_traced_four_point_case() {
        // unit vectors at 0, 10, 90 and 100 degrees
        let angles = [0.0f64, 10.0, 90.0, 100.0];
        let vectors: Vec<Vec<f64>> = angles
            .iter()
            .map(|a| {
                let r = a.to_radians();
                vec![r.cos(), r.sin()]
            })
            .collect();
        let dist = pairwise_cosine_distances_seq(&vectors).unwrap();
        for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
            let partition = agglomerate(&dist, linkage, 0.4);
            assert_eq!(partition, vec![vec![0, 1], vec![2, 3]], "{linkage:?}");
        }
    }

    #[test]
    fn two_planted_blobs_recovered() {
        let mut records = Vec::new();
        let mut occurrences = Vec::new();
        for i in 0..5 {
            let id = format!("a{i}");
            records.push((id.clone(), blob(&[1.0, 0.0, 0.0], 0.02, i), 1.0));
            occurrences.push(occ(&id, "testly", 5));
        }
        for i in 0..5 {
            let id = format!("b{i}");
            records.push((id.clone(), blob(&[0.0, 1.0, 0.0], 0.02, i + 5), 1.0));
            occurrences.push(occ(&id, "testly", 5));
        }
        let store = store_from(records, 3);
        let params = ClusterParams {
            distance_threshold: 0.4,
            min_cluster_size: 2,
            linkage: Linkage::Average,
        };
        let outcome = cluster_senses("testly", &occurrences, &store, &params).unwrap();
        assert_eq!(outcome.clusters.len(), 2);
        assert!(outcome.residual.is_empty());
        let members: Vec<Vec<String>> = outcome
            .clusters
            .iter()
            .map(|c| c.member_ids.clone())
            .collect();
        assert_eq!(members[0], vec!["a0", "a1", "a2", "a3", "a4"]);
        assert_eq!(members[1], vec!["b0", "b1", "b2", "b3", "b4"]);
    }

    #[test]
    fn identical_vectors_form_one_cluster() {
        let records: Vec<_> = (0..6)
            .map(|i| (format!("x{i}"), vec![0.3, 0.4, 0.5], 1.0))
            .collect();
        let occurrences: Vec<_> = (0..6).map(|i| occ(&format!("x{i}"), "samely", 5)).collect();
        let store = store_from(records, 3);
        let params = ClusterParams {
            distance_threshold: 0.01,
            min_cluster_size: 1,
            linkage: Linkage::Average,
        };
        let outcome = cluster_senses("samely", &occurrences, &store, &params).unwrap();
        assert_eq!(outcome.clusters.len(), 1);
        assert_eq!(outcome.clusters[0].member_ids.len(), 6);
    }

    #[test]
    fn orthogonal_singletons_all_dropped() {
        let dim = 10;
        let records: Vec<_> = (0..10)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                (format!("o{i}"), v, 1.0)
            })
            .collect();
        let occurrences: Vec<_> = (0..10).map(|i| occ(&format!("o{i}"), "orthly", 5)).collect();
        let store = store_from(records, dim);
        let params = ClusterParams {
            distance_threshold: 0.4,
            min_cluster_size: 2,
            linkage: Linkage::Average,
        };
        let outcome = cluster_senses("orthly", &occurrences, &store, &params).unwrap();
        assert!(outcome.clusters.is_empty());
        assert_eq!(outcome.residual.len(), 10);
        assert!(outcome
            .residual
            .iter()
            .all(|r| r.reason == "below_min_cluster_size" && r.dropped_cluster_size == 1));
    }

    #[test]
    fn missing_embedding_is_an_error() {
        let store = store_from(vec![("a".to_string(), vec![1.0, 0.0], 1.0)], 2);
        let occurrences = vec![occ("a", "l", 5), occ("zz", "l", 5)];
        assert!(matches!(
            cluster_senses("l", &occurrences, &store, &ClusterParams {
                min_cluster_size: 1,
                ..Default::default()
            }),
            Err(SenseError::MissingEmbedding(id)) if id == "zz"
        ));
    }

    #[test]
    fn clustering_ignores_input_order() {
        let mut records = Vec::new();
        let mut occurrences = Vec::new();
        for i in 0..4 {
            let id = format!("a{i}");
            records.push((id.clone(), blob(&[1.0, 0.0], 0.01, i), 1.0));
            occurrences.push(occ(&id, "l", 5));
        }
        for i in 0..4 {
            let id = format!("b{i}");
            records.push((id.clone(), blob(&[0.0, 1.0], 0.01, i + 9), 1.0));
            occurrences.push(occ(&id, "l", 5));
        }
        let store = store_from(records, 2);
        let params = ClusterParams {
            distance_threshold: 0.4,
            min_cluster_size: 1,
            linkage: Linkage::Average,
        };
        let forward = cluster_senses("l", &occurrences, &store, &params).unwrap();
        let mut shuffled = occurrences.clone();
        shuffled.reverse();
        shuffled.swap(0, 3);
        let backward = cluster_senses("l", &shuffled, &store, &params).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn batch_clustering_parallel_matches_sequential() {
        let mut records = Vec::new();
        let mut occurrences = Vec::new();
        for (li, lemma) in ["aly", "bly", "cly", "dly"].iter().enumerate() {
            for s in 0..2 {
                for i in 0..6 {
                    let id = format!("{lemma}-{s}-{i}");
                    let mut center = vec![0.0; 4];
                    center[s] = 1.0;
                    records.push((id.clone(), blob(&center, 0.02, li * 31 + s * 7 + i), 1.0));
                    occurrences.push(occ(&id, lemma, 5));
                }
            }
        }
        let store = store_from(records, 4);
        let params = ClusterParams {
            distance_threshold: 0.4,
            min_cluster_size: 2,
            linkage: Linkage::Average,
        };
        let par = cluster_all_lemmas(&occurrences, &store, &params).unwrap();
        let seq = cluster_all_lemmas_seq(&occurrences, &store, &params).unwrap();
        assert_eq!(par, seq);
        assert_eq!(par.clusters.len(), 8);
    }

    fn example_fixture(lengths_entropies: &[(&str, usize, f64)]) -> (SenseCluster, BTreeMap<String, AdverbOccurrence>, EmbeddingStore) {
        let mut occurrences = BTreeMap::new();
        let mut records = Vec::new();
        let mut member_ids = Vec::new();
        for (id, len, entropy) in lengths_entropies {
            occurrences.insert(id.to_string(), occ(id, "l", *len));
            records.push((id.to_string(), vec![1.0, 0.0], *entropy));
            member_ids.push(id.to_string());
        }
        let store = store_from(records, 2);
        let cluster = SenseCluster {
            cluster_id: "c1".to_string(),
            lemma: "l".to_string(),
            member_ids,
            centroid: vec![1.0, 0.0],
            status: ClusterStatus::Candidate,
        };
        (cluster, occurrences, store)
    }

    #[test]
    fn lowest_entropy_in_window_wins() {
        let (cluster, occs, store) =
            example_fixture(&[("a", 5, 1.2), ("b", 6, 0.5), ("c", 7, 0.9)]);
        let got = select_example(&cluster, &occs, &store, &ExampleFilter::default()).unwrap();
        assert_eq!(got.unwrap().1, "b");
    }

    #[test]
    fn out_of_window_minimum_is_skipped() {
        let (cluster, occs, store) =
            example_fixture(&[("a", 2, 0.1), ("b", 6, 0.5), ("c", 7, 0.9)]);
        let got = select_example(&cluster, &occs, &store, &ExampleFilter::default()).unwrap();
        assert_eq!(got.unwrap().1, "b");
    }

    #[test]
    fn no_eligible_example_when_all_too_long() {
        let (cluster, occs, store) =
            example_fixture(&[("a", 25, 0.1), ("b", 25, 0.5), ("c", 25, 0.9)]);
        let got = select_example(&cluster, &occs, &store, &ExampleFilter::default()).unwrap();
        assert!(got.is_none());
    }

    #[test]
    fn window_bounds_are_inclusive() {
        let (cluster, occs, store) = example_fixture(&[
            ("a2", 2, 0.1),
            ("b3", 3, 0.4),
            ("c20", 20, 0.2),
            ("d21", 21, 0.05),
        ]);
        let got = select_example(&cluster, &occs, &store, &ExampleFilter::default())
            .unwrap()
            .unwrap();
        // 20 tokens eligible and has the lowest in-window entropy
        assert_eq!(got.1, "c20");
    }

    #[test]
    fn entropy_ties_break_on_id() {
        let (cluster, occs, store) =
            example_fixture(&[("zz", 5, 0.5), ("aa", 5, 0.5), ("mm", 5, 0.5)]);
        let got = select_example(&cluster, &occs, &store, &ExampleFilter::default()).unwrap();
        assert_eq!(got.unwrap().1, "aa");
    }

    #[test]
    fn selection_invariant_under_member_permutation() {
        let (mut cluster, occs, store) =
            example_fixture(&[("a", 5, 1.2), ("b", 6, 0.5), ("c", 7, 0.9)]);
        let first = select_example(&cluster, &occs, &store, &ExampleFilter::default()).unwrap();
        cluster.member_ids.reverse();
        let second = select_example(&cluster, &occs, &store, &ExampleFilter::default()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn draft_with_example_embeds_sentence() {
        let cluster = SenseCluster {
            cluster_id: "cabc".to_string(),
            lemma: "thus".to_string(),
            member_ids: vec!["o1".to_string()],
            centroid: vec![1.0, 0.0],
            status: ClusterStatus::Candidate,
        };
        let suggestions = vec![(SupersenseCategory::Conjunctive, 1.0)];
        let entry = draft_entry(
            &cluster,
            1,
            Some(("it is late and thus we must go".to_string(), "o1".to_string())),
            &suggestions,
        );
        assert_eq!(
            entry.gloss,
            "thus (sense 1): as in 'it is late and thus we must go'"
        );
        assert_eq!(entry.category, Some(SupersenseCategory::Conjunctive));
        assert_eq!(entry.provenance, Provenance::Auto);
        // drafting twice is stable
        let again = draft_entry(
            &cluster,
            1,
            Some(("it is late and thus we must go".to_string(), "o1".to_string())),
            &suggestions,
        );
        assert_eq!(entry, again);
    }

    #[test]
    fn draft_without_example_cannot_be_promoted() {
        let cluster = SenseCluster {
            cluster_id: "cd".to_string(),
            lemma: "l".to_string(),
            member_ids: vec!["o1".to_string()],
            centroid: vec![1.0, 0.0],
            status: ClusterStatus::Candidate,
        };
        let mut entry = draft_entry(&cluster, 2, None, &[(SupersenseCategory::Manner, 0.6)]);
        assert_eq!(entry.gloss, "l (sense 2)");
        assert!(entry.example.is_none());
        entry.provenance = Provenance::HumanValidated;
        assert!(entry.check_validated().is_err());
    }

    #[test]
    fn cluster_serialization_round_trips() {
        let cluster = SenseCluster {
            cluster_id: "c9".to_string(),
            lemma: "l".to_string(),
            member_ids: vec!["a".to_string(), "b".to_string()],
            centroid: vec![0.5, 0.5],
            status: ClusterStatus::MergedInto("c1".to_string()),
        };
        let json = serde_json::to_string(&cluster).unwrap();
        let back: SenseCluster = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cluster);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn threshold_monotonicity(
            seed in 0u64..500,
            n in 2usize..10,
            t1 in 0.05f64..1.0,
            delta in 0.0f64..0.9,
        ) {
            let vectors: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..3)
                        .map(|d| {
                            let x = seed
                                .wrapping_mul(6364136223846793005)
                                .wrapping_add(((i * 3 + d) as u64).wrapping_mul(1442695040888963407));
                            ((x >> 33) as f64 / (1u64 << 31) as f64) - 0.5
                        })
                        .collect()
                })
                .filter(|v: &Vec<f64>| crate::embeddings::norm(v) > 1e-6)
                .collect();
            prop_assume!(vectors.len() >= 2);
            let dist = pairwise_cosine_distances_seq(&vectors).unwrap();
            for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
                let low = agglomerate(&dist, linkage, t1).len();
                let high = agglomerate(&dist, linkage, t1 + delta).len();
                prop_assert!(high <= low, "{linkage:?}: {high} > {low}");
            }
        }

        #[test]
        fn partitions_cover_all_points(seed in 0u64..500, n in 1usize..12) {
            let vectors: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..4)
                        .map(|d| {
                            let x = seed
                                .wrapping_mul(2862933555777941757)
                                .wrapping_add(((i * 4 + d) as u64).wrapping_mul(3202034522624059733));
                            ((x >> 33) as f64 / (1u64 << 31) as f64) + 0.01
                        })
                        .collect()
                })
                .collect();
            let dist = pairwise_cosine_distances_seq(&vectors).unwrap();
            let partition = agglomerate(&dist, Linkage::Average, 0.4);
            let mut seen: Vec<usize> = partition.into_iter().flatten().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}
