//! Synset formation and lexicon maintenance.
//!
//! Validated senses group into synsets per category: senses whose centroid
//! cosine similarity clears the threshold are connected, and each connected
//! component becomes one synset. Components close enough to an existing
//! synset's stored centroid align to it instead of minting a new id; new
//! ids are allocated ascending from a configured sandbox range so
//! experiments never collide with genuine lexicon ids.
//!
//! Every mutation goes through an audit event; replaying the event log over
//! the initial lexicon reproduces the final state exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::cosine_similarity;
use crate::senses::SenseEntry;
use crate::taxonomy::SupersenseCategory;

#[derive(Debug, Error)]
pub enum SynsetError {
    #[error("sense {0} is not human_validated: {1}")]
    UnvalidatedSense(String, String),
    #[error("sense {0} carries no centroid")]
    MissingCentroid(String),
    #[error("duplicate sense id {0}")]
    DuplicateSense(String),
    #[error("bad synset id {0:?}: expected 8 digits followed by -r")]
    BadSynsetId(String),
    #[error("unknown synset {0}")]
    UnknownSynset(String),
    #[error("cannot merge {a} ({a_cat}) with {b} ({b_cat}): categories differ")]
    CategoryMismatch {
        a: String,
        a_cat: SupersenseCategory,
        b: String,
        b_cat: SupersenseCategory,
    },
    #[error("merge arguments are identical: {0}")]
    IdenticalArguments(String),
    #[error("synset id {0} already present")]
    DuplicateSynset(String),
    #[error("id range {0:08}-{1:08} exhausted")]
    IdRangeExhausted(u32, u32),
    #[error(transparent)]
    Embedding(#[from] crate::embeddings::EmbeddingError),
    #[error("malformed record at {path}:{line}: {detail}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Adverb synset identifier: eight digits plus the `-r` part-of-speech
/// suffix, e.g. `00043413-r`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SynsetId(String);

impl SynsetId {
    pub fn new(s: &str) -> Result<SynsetId, SynsetError> {
        let bytes = s.as_bytes();
        let ok = bytes.len() == 10
            && bytes[..8].iter().all(|b| b.is_ascii_digit())
            && &bytes[8..] == b"-r";
        if ok {
            Ok(SynsetId(s.to_string()))
        } else {
            Err(SynsetError::BadSynsetId(s.to_string()))
        }
    }

    pub fn from_number(n: u32) -> SynsetId {
        SynsetId(format!("{n:08}-r"))
    }

    pub fn number(&self) -> u32 {
        self.0[..8].parse().expect("validated digits")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for SynsetId {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        SynsetId::new(&s).map_err(|e| e.to_string())
    }
}

impl From<SynsetId> for String {
    fn from(id: SynsetId) -> String {
        id.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Existing,
    New,
}

/// A category-homogeneous group of senses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synset {
    pub synset_id: SynsetId,
    pub category: SupersenseCategory,
    pub members: Vec<String>,
    pub gloss: String,
    pub examples: Vec<String>,
    pub origin: Origin,
    /// Mean of member sense centroids; absent for imported synsets that
    /// never carried one (alignment against those is skipped, not guessed).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub centroid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynsetParams {
    pub similarity_threshold: f64,
    pub id_range_start: u32,
    pub id_range_end: u32,
}

impl Default for SynsetParams {
    fn default() -> Self {
        SynsetParams {
            similarity_threshold: 0.8,
            id_range_start: 90_000_000,
            id_range_end: 99_999_999,
        }
    }
}

/// In-memory synset collection. Mutation is single-writer; retired ids are
/// never reallocated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynsetLexicon {
    synsets: BTreeMap<SynsetId, Synset>,
    retired: BTreeSet<SynsetId>,
}

impl SynsetLexicon {
    pub fn new() -> SynsetLexicon {
        SynsetLexicon::default()
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn get(&self, id: &SynsetId) -> Option<&Synset> {
        self.synsets.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values()
    }

    pub fn insert_new(&mut self, synset: Synset) -> Result<(), SynsetError> {
        if self.synsets.contains_key(&synset.synset_id) || self.retired.contains(&synset.synset_id)
        {
            return Err(SynsetError::DuplicateSynset(synset.synset_id.to_string()));
        }
        self.synsets.insert(synset.synset_id.clone(), synset);
        Ok(())
    }

    fn upsert(&mut self, synset: Synset) {
        self.synsets.insert(synset.synset_id.clone(), synset);
    }

    /// Serialize as JSONL sorted by synset id. This is the canonical state
    /// file; it carries no timestamps, so identical state means identical
    /// bytes.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), SynsetError> {
        for synset in self.synsets.values() {
            serde_json::to_writer(&mut w, synset).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Result<Vec<u8>, SynsetError> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    pub fn read_jsonl(path: &Path) -> Result<SynsetLexicon, SynsetError> {
        let file = std::fs::File::open(path)?;
        let mut lexicon = SynsetLexicon::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let synset: Synset =
                serde_json::from_str(&line).map_err(|e| SynsetError::MalformedRecord {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    detail: e.to_string(),
                })?;
            lexicon.insert_new(synset)?;
        }
        Ok(lexicon)
    }
}

/// A sense entry paired with its cluster centroid, ready for grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedSense {
    pub entry: SenseEntry,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedComponent {
    pub synset_id: SynsetId,
    pub sense_ids: Vec<String>,
    pub similarity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub aligned: Vec<AlignedComponent>,
    pub new_synsets: usize,
    /// Existing same-category synsets that could not be considered for
    /// alignment because they carry no stored centroid.
    pub skipped_existing_without_centroid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormOutcome {
    pub synsets: Vec<Synset>,
    pub report: AlignmentReport,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so components key on their first element
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn mean_of(vectors: &[&[f64]]) -> Result<Vec<f64>, SynsetError> {
    Ok(crate::embeddings::centroid(vectors)?)
}

/// Group validated senses into synsets.
///
/// Within each category, senses whose centroid similarity meets the
/// threshold are connected; each connected component becomes one synset.
/// A component is aligned to the existing synset with the most similar
/// stored centroid when that similarity also clears the threshold;
/// otherwise it gets a fresh id from the configured range, ascending.
/// The output partitions the input senses.
pub fn form_synsets(
    senses: &[ValidatedSense],
    existing: &SynsetLexicon,
    params: &SynsetParams,
) -> Result<FormOutcome, SynsetError> {
    let mut seen = BTreeSet::new();
    for sense in senses {
        sense
            .entry
            .check_validated()
            .map_err(|detail| SynsetError::UnvalidatedSense(sense.entry.sense_id.clone(), detail))?;
        if sense.centroid.is_empty() {
            return Err(SynsetError::MissingCentroid(sense.entry.sense_id.clone()));
        }
        if !seen.insert(sense.entry.sense_id.clone()) {
            return Err(SynsetError::DuplicateSense(sense.entry.sense_id.clone()));
        }
    }

    let mut by_category: BTreeMap<SupersenseCategory, Vec<&ValidatedSense>> = BTreeMap::new();
    for sense in senses {
        by_category
            .entry(sense.entry.category.expect("validated sense has category"))
            .or_default()
            .push(sense);
    }

    let mut report = AlignmentReport::default();
    // (category, component senses sorted by id, component centroid)
    let mut components: Vec<(SupersenseCategory, Vec<&ValidatedSense>, Vec<f64>)> = Vec::new();
    for (category, mut group) in by_category {
        group.sort_by(|a, b| a.entry.sense_id.cmp(&b.entry.sense_id));
        let mut uf = UnionFind::new(group.len());
        for i in 0..group.len() {
            for j in (i + 1)..group.len() {
                let sim = cosine_similarity(&group[i].centroid, &group[j].centroid)?;
                if sim >= params.similarity_threshold {
                    uf.union(i, j);
                }
            }
        }
        let mut grouped: BTreeMap<usize, Vec<&ValidatedSense>> = BTreeMap::new();
        for (i, sense) in group.iter().enumerate() {
            grouped.entry(uf.find(i)).or_default().push(sense);
        }
        for (_, component) in grouped {
            let vectors: Vec<&[f64]> = component.iter().map(|s| s.centroid.as_slice()).collect();
            let center = mean_of(&vectors)?;
            components.push((category, component, center));
        }
    }

    // alignment against existing synsets, then id allocation in component order
    let mut formed: BTreeMap<SynsetId, Synset> = BTreeMap::new();
    let mut taken: BTreeSet<SynsetId> = existing.synsets.keys().cloned().collect();
    taken.extend(existing.retired.iter().cloned());
    let mut next_candidate = params.id_range_start;
    for (category, component, center) in components {
        let mut best: Option<(f64, &Synset)> = None;
        for synset in existing.iter().filter(|s| s.category == category) {
            match &synset.centroid {
                None => {
                    report.skipped_existing_without_centroid += 1;
                }
                Some(existing_center) => {
                    let sim = cosine_similarity(&center, existing_center)?;
                    best = match best {
                        Some((cur, _)) if sim <= cur => best,
                        _ if sim >= params.similarity_threshold => Some((sim, synset)),
                        other => other,
                    };
                }
            }
        }
        let sense_ids: Vec<String> = component
            .iter()
            .map(|s| s.entry.sense_id.clone())
            .collect();
        match best {
            Some((similarity, target)) => {
                report.aligned.push(AlignedComponent {
                    synset_id: target.synset_id.clone(),
                    sense_ids: sense_ids.clone(),
                    similarity,
                });
                let slot = formed.entry(target.synset_id.clone()).or_insert_with(|| {
                    let mut aligned = target.clone();
                    aligned.origin = Origin::Existing;
                    aligned
                });
                for sense in &component {
                    if !slot.members.contains(&sense.entry.sense_id) {
                        slot.members.push(sense.entry.sense_id.clone());
                    }
                    if let Some(example) = &sense.entry.example {
                        if !slot.examples.contains(example) {
                            slot.examples.push(example.clone());
                        }
                    }
                }
                slot.centroid = combine_centroids(slot.centroid.take(), &component)?;
            }
            None => {
                let id = loop {
                    if next_candidate > params.id_range_end {
                        return Err(SynsetError::IdRangeExhausted(
                            params.id_range_start,
                            params.id_range_end,
                        ));
                    }
                    let candidate = SynsetId::from_number(next_candidate);
                    next_candidate += 1;
                    if !taken.contains(&candidate) {
                        break candidate;
                    }
                };
                taken.insert(id.clone());
                let examples: Vec<String> = component
                    .iter()
                    .filter_map(|s| s.entry.example.clone())
                    .fold(Vec::new(), |mut acc, e| {
                        if !acc.contains(&e) {
                            acc.push(e);
                        }
                        acc
                    });
                formed.insert(
                    id.clone(),
                    Synset {
                        synset_id: id,
                        category,
                        gloss: component[0].entry.gloss.clone(),
                        members: sense_ids,
                        examples,
                        origin: Origin::New,
                        centroid: Some(center),
                    },
                );
                report.new_synsets += 1;
            }
        }
    }
    Ok(FormOutcome {
        synsets: formed.into_values().collect(),
        report,
    })
}

fn combine_centroids(
    current: Option<Vec<f64>>,
    added: &[&ValidatedSense],
) -> Result<Option<Vec<f64>>, SynsetError> {
    let Some(current) = current else {
        return Ok(None);
    };
    let mut vectors: Vec<&[f64]> = vec![current.as_slice()];
    vectors.extend(added.iter().map(|s| s.centroid.as_slice()));
    Ok(Some(mean_of(&vectors)?))
}

/// Merge synset `b` into `a` (or vice versa): the lexicographically smaller
/// id survives. Members and examples concatenate with duplicates removed;
/// glosses concatenate pending human edit. The retired id is never reused.
pub fn merge_synsets(
    lexicon: &mut SynsetLexicon,
    a: &SynsetId,
    b: &SynsetId,
) -> Result<Synset, SynsetError> {
    if a == b {
        return Err(SynsetError::IdenticalArguments(a.to_string()));
    }
    let sa = lexicon
        .get(a)
        .ok_or_else(|| SynsetError::UnknownSynset(a.to_string()))?
        .clone();
    let sb = lexicon
        .get(b)
        .ok_or_else(|| SynsetError::UnknownSynset(b.to_string()))?
        .clone();
    if sa.category != sb.category {
        return Err(SynsetError::CategoryMismatch {
            a: a.to_string(),
            a_cat: sa.category,
            b: b.to_string(),
            b_cat: sb.category,
        });
    }
    let (survivor, loser) = if sa.synset_id < sb.synset_id {
        (sa, sb)
    } else {
        (sb, sa)
    };
    let mut merged = survivor.clone();
    for member in &loser.members {
        if !merged.members.contains(member) {
            merged.members.push(member.clone());
        }
    }
    for example in &loser.examples {
        if !merged.examples.contains(example) {
            merged.examples.push(example.clone());
        }
    }
    merged.gloss = format!("{}; {}", survivor.gloss, loser.gloss);
    merged.centroid = match (&survivor.centroid, &loser.centroid) {
        (Some(cs), Some(cl)) => {
            let ws = survivor.members.len() as f64;
            let wl = loser.members.len() as f64;
            Some(
                cs.iter()
                    .zip(cl)
                    .map(|(x, y)| (ws * x + wl * y) / (ws + wl))
                    .collect(),
            )
        }
        _ => None,
    };
    lexicon.synsets.remove(&loser.synset_id);
    lexicon.retired.insert(loser.synset_id);
    lexicon.upsert(merged.clone());
    Ok(merged)
}

/// All same-category synset pairs at or above the similarity threshold,
/// sorted by descending similarity then id pair. A human work queue, never
/// an auto-merge.
pub fn duplicate_scan(
    lexicon: &SynsetLexicon,
    params: &SynsetParams,
) -> Result<Vec<(SynsetId, SynsetId, f64)>, SynsetError> {
    let synsets: Vec<&Synset> = lexicon.iter().collect();
    let mut pairs = Vec::new();
    for i in 0..synsets.len() {
        for j in (i + 1)..synsets.len() {
            let (a, b) = (synsets[i], synsets[j]);
            if a.category != b.category {
                continue;
            }
            let (Some(ca), Some(cb)) = (&a.centroid, &b.centroid) else {
                continue;
            };
            let sim = cosine_similarity(ca, cb)?;
            if sim >= params.similarity_threshold {
                pairs.push((a.synset_id.clone(), b.synset_id.clone(), sim));
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .expect("similarities are finite")
            .then_with(|| (&x.0, &x.1).cmp(&(&y.0, &y.1)))
    });
    Ok(pairs)
}

/// One audited lexicon mutation. `upsert` carries its full payload so a
/// log replay needs nothing but the initial lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum AuditEvent {
    Upsert { synset: Synset },
    Merge { a: SynsetId, b: SynsetId },
}

/// Log-file record: event plus attribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub timestamp: String,
    pub actor: String,
    #[serde(flatten)]
    pub event: AuditEvent,
}

pub fn apply_event(lexicon: &mut SynsetLexicon, event: &AuditEvent) -> Result<(), SynsetError> {
    match event {
        AuditEvent::Upsert { synset } => {
            if lexicon.retired.contains(&synset.synset_id) {
                return Err(SynsetError::DuplicateSynset(synset.synset_id.to_string()));
            }
            lexicon.upsert(synset.clone());
            Ok(())
        }
        AuditEvent::Merge { a, b } => merge_synsets(lexicon, a, b).map(|_| ()),
    }
}

/// Fold an audit log over an initial lexicon.
pub fn replay_audit(
    initial: &SynsetLexicon,
    records: &[AuditRecord],
) -> Result<SynsetLexicon, SynsetError> {
    let mut lexicon = initial.clone();
    for record in records {
        apply_event(&mut lexicon, &record.event)?;
    }
    Ok(lexicon)
}

/// Append one record to the audit log, fsynced before returning.
pub fn append_audit_record(path: &Path, record: &AuditRecord) -> Result<(), SynsetError> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut line = serde_json::to_vec(record).map_err(std::io::Error::other)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_all()?;
    Ok(())
}

pub fn read_audit_log(path: &Path) -> Result<Vec<AuditRecord>, SynsetError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| SynsetError::MalformedRecord {
                path: path.to_path_buf(),
                line: lineno + 1,
                detail: e.to_string(),
            })?,
        );
    }
    Ok(out)
}
