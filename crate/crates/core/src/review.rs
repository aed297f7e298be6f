//! Event-sourced review state: drafted senses plus an append-only decision
//! log fold into the current annotation state.
//!
//! Tasks are derived deterministically. Every draft opens a classification
//! task and an example-verification task; a gloss-editing task appears once
//! a sense is classified; merge-candidate tasks come from the duplicate
//! scan over the loaded synsets. Replaying the decision log over the same
//! drafts always reproduces the same state, byte for byte.
//!
//! Optimistic concurrency: each task carries a revision that bumps whenever
//! its underlying entity changes; a decision submitted against a stale
//! revision is rejected with a conflict.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::senses::{Provenance, SenseEntry};
use crate::synsets::{
    duplicate_scan, merge_synsets, SynsetError, SynsetId, SynsetLexicon, SynsetParams,
};
use crate::taxonomy::{SupersenseCategory, Taxonomy};

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("task {0} is already done")]
    TaskAlreadyDone(String),
    #[error("task {task}: result type {got} does not match task kind {expected}")]
    InvalidResultType {
        task: String,
        expected: String,
        got: String,
    },
    #[error("task {task}: revision conflict (task at {current}, decision against {submitted})")]
    RevisionConflict {
        task: String,
        current: u64,
        submitted: u64,
    },
    #[error("decision id {0} already used with different content")]
    ConflictingDecisionId(String),
    #[error("invalid decision: {0}")]
    InvalidDecision(String),
    #[error("replay failed at decision {decision_id}: {detail}")]
    Replay { decision_id: String, detail: String },
    #[error(transparent)]
    Synset(#[from] SynsetError),
    #[error("malformed record at {path}:{line}: {detail}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ClassifySense,
    VerifyExample,
    EditGloss,
    MergeCandidate,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::ClassifySense => "classify_sense",
            TaskKind::VerifyExample => "verify_example",
            TaskKind::EditGloss => "edit_gloss",
            TaskKind::MergeCandidate => "merge_candidate",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        match s {
            "classify_sense" => Some(TaskKind::ClassifySense),
            "verify_example" => Some(TaskKind::VerifyExample),
            "edit_gloss" => Some(TaskKind::EditGloss),
            "merge_candidate" => Some(TaskKind::MergeCandidate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Open,
    Done,
    Skipped,
}

impl TaskState {
    pub fn parse(s: &str) -> Option<TaskState> {
        match s {
            "open" => Some(TaskState::Open),
            "done" => Some(TaskState::Done),
            "skipped" => Some(TaskState::Skipped),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub task_id: String,
    pub kind: TaskKind,
    pub state: TaskState,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lemma: Option<String>,
    pub revision: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub assignee: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub done_by: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decision_id: Option<String>,
    pub payload: serde_json::Value,
}

/// The outcome an annotator submits for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum DecisionResult {
    Classify { category: SupersenseCategory },
    ApproveExample,
    ReplaceExample { text: String },
    EditGloss { text: String },
    Merge { accept: bool },
}

impl DecisionResult {
    fn kind_label(&self) -> &'static str {
        match self {
            DecisionResult::Classify { .. } => "classify",
            DecisionResult::ApproveExample => "approve_example",
            DecisionResult::ReplaceExample { .. } => "replace_example",
            DecisionResult::EditGloss { .. } => "edit_gloss",
            DecisionResult::Merge { .. } => "merge",
        }
    }

    fn matches(&self, kind: TaskKind) -> bool {
        matches!(
            (self, kind),
            (DecisionResult::Classify { .. }, TaskKind::ClassifySense)
                | (DecisionResult::ApproveExample, TaskKind::VerifyExample)
                | (DecisionResult::ReplaceExample { .. }, TaskKind::VerifyExample)
                | (DecisionResult::EditGloss { .. }, TaskKind::EditGloss)
                | (DecisionResult::Merge { .. }, TaskKind::MergeCandidate)
        )
    }
}

/// Append-only, immutable once written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub decision_id: String,
    pub task_id: String,
    pub actor: String,
    pub timestamp: String,
    pub task_revision: u64,
    pub result: DecisionResult,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

fn decision_content_eq(a: &ReviewDecision, b: &ReviewDecision) -> bool {
    // timestamps may differ between retries of the same decision
    a.decision_id == b.decision_id
        && a.task_id == b.task_id
        && a.actor == b.actor
        && a.task_revision == b.task_revision
        && a.result == b.result
        && a.note == b.note
}

#[derive(Debug, Clone, PartialEq)]
struct SenseState {
    entry: SenseEntry,
    classified: bool,
    example_verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Applied {
    /// The decision was accepted and the task transitioned.
    Accepted,
    /// A retry of an identical, already-applied decision; nothing changed.
    AlreadyApplied,
}

/// Review state over one run directory's drafts and synsets.
#[derive(Debug, Clone)]
pub struct ReviewState {
    senses: BTreeMap<String, SenseState>,
    synsets: SynsetLexicon,
    tasks: BTreeMap<String, ReviewTask>,
    decisions: Vec<ReviewDecision>,
    decisions_by_id: BTreeMap<String, usize>,
    suggestions: BTreeMap<String, serde_json::Value>,
}

/// Everything downstream stages need: current senses (validated subset
/// marked by provenance), current synsets, and the decision log itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportSnapshot {
    pub senses: Vec<SenseEntry>,
    pub validated_sense_ids: Vec<String>,
    pub synsets: Vec<crate::synsets::Synset>,
    pub decisions: Vec<ReviewDecision>,
}

impl ReviewState {
    /// Build the initial state for a set of drafts: one classify and one
    /// verify task per sense, plus merge-candidate tasks from the duplicate
    /// scan over the loaded synsets.
    pub fn new(
        drafts: Vec<SenseEntry>,
        synsets: SynsetLexicon,
        taxonomy: &Taxonomy,
        synset_params: &SynsetParams,
    ) -> Result<ReviewState, ReviewError> {
        let mut senses = BTreeMap::new();
        let mut suggestions = BTreeMap::new();
        for draft in drafts {
            let suggestion = draft.example.as_deref().and_then(|example| {
                taxonomy
                    .suggest_category(&draft.lemma, example)
                    .ok()
                    .map(|ranked| {
                        let rows: Vec<serde_json::Value> = ranked
                            .iter()
                            .map(|(cat, score)| {
                                let diag = taxonomy.diagnostic(*cat);
                                json!({
                                    "category": cat,
                                    "score": score,
                                    "paraphrase_template": diag.paraphrase_template,
                                    "probe_question": diag.probe_question,
                                })
                            })
                            .collect();
                        serde_json::Value::Array(rows)
                    })
            });
            if let Some(s) = suggestion {
                suggestions.insert(draft.sense_id.clone(), s);
            }
            let state = SenseState {
                classified: false,
                example_verified: false,
                entry: draft,
            };
            senses.insert(state.entry.sense_id.clone(), state);
        }
        let mut state = ReviewState {
            senses,
            synsets,
            tasks: BTreeMap::new(),
            decisions: Vec::new(),
            decisions_by_id: BTreeMap::new(),
            suggestions,
        };
        for sense_id in state.senses.keys().cloned().collect::<Vec<_>>() {
            state.open_task(
                format!("classify:{sense_id}"),
                TaskKind::ClassifySense,
                Some(sense_id.clone()),
            );
            state.open_task(
                format!("verify:{sense_id}"),
                TaskKind::VerifyExample,
                Some(sense_id.clone()),
            );
        }
        for (a, b, similarity) in duplicate_scan(&state.synsets, synset_params)? {
            let task_id = format!("merge:{a}+{b}");
            let payload = json!({
                "a": state.synsets.get(&a),
                "b": state.synsets.get(&b),
                "similarity": similarity,
            });
            state.tasks.insert(
                task_id.clone(),
                ReviewTask {
                    task_id,
                    kind: TaskKind::MergeCandidate,
                    state: TaskState::Open,
                    lemma: None,
                    revision: 0,
                    assignee: None,
                    done_by: None,
                    decision_id: None,
                    payload,
                },
            );
        }
        Ok(state)
    }

    /// Rebuild state by folding a decision log over the drafts. Any
    /// decision the fold rejects is surfaced as a replay error and the
    /// state is refused.
    pub fn replay(
        drafts: Vec<SenseEntry>,
        synsets: SynsetLexicon,
        taxonomy: &Taxonomy,
        synset_params: &SynsetParams,
        decisions: Vec<ReviewDecision>,
    ) -> Result<ReviewState, ReviewError> {
        let mut state = ReviewState::new(drafts, synsets, taxonomy, synset_params)?;
        for decision in decisions {
            let decision_id = decision.decision_id.clone();
            state.apply(decision).map_err(|e| ReviewError::Replay {
                decision_id: decision_id.clone(),
                detail: e.to_string(),
            })?;
        }
        Ok(state)
    }

    fn open_task(&mut self, task_id: String, kind: TaskKind, sense_id: Option<String>) {
        let payload = sense_id
            .as_ref()
            .map(|id| self.sense_payload(id, kind))
            .unwrap_or(serde_json::Value::Null);
        let lemma = sense_id
            .as_ref()
            .and_then(|id| self.senses.get(id))
            .map(|s| s.entry.lemma.clone());
        self.tasks.insert(
            task_id.clone(),
            ReviewTask {
                task_id,
                kind,
                state: TaskState::Open,
                lemma,
                revision: 0,
                assignee: None,
                done_by: None,
                decision_id: None,
                payload,
            },
        );
    }

    fn sense_payload(&self, sense_id: &str, kind: TaskKind) -> serde_json::Value {
        let sense = &self.senses[sense_id];
        let mut payload = json!({ "sense": sense.entry });
        if kind == TaskKind::ClassifySense {
            if let Some(suggestion) = self.suggestions.get(sense_id) {
                payload["suggestions"] = suggestion.clone();
            }
        }
        payload
    }

    /// Refresh payloads of open tasks attached to a sense; bump revisions
    /// where the payload actually changed.
    fn refresh_sense_tasks(&mut self, sense_id: &str) {
        for prefix in ["classify", "verify", "gloss"] {
            let task_id = format!("{prefix}:{sense_id}");
            let Some(task) = self.tasks.get(&task_id) else {
                continue;
            };
            if task.state != TaskState::Open {
                continue;
            }
            let fresh = self.sense_payload(sense_id, task.kind);
            let task = self.tasks.get_mut(&task_id).expect("just looked up");
            if task.payload != fresh {
                task.payload = fresh;
                task.revision += 1;
            }
        }
    }

    fn promote_if_complete(&mut self, sense_id: &str) {
        let sense = self.senses.get_mut(sense_id).expect("sense exists");
        if sense.classified && sense.entry.example.is_some() {
            sense.entry.provenance = Provenance::HumanValidated;
        }
    }

    /// Validate and apply one decision. Identical retries (same decision id
    /// and content) are no-ops; reused ids with different content are
    /// rejected.
    pub fn apply(&mut self, decision: ReviewDecision) -> Result<Applied, ReviewError> {
        if let Some(&idx) = self.decisions_by_id.get(&decision.decision_id) {
            return if decision_content_eq(&self.decisions[idx], &decision) {
                Ok(Applied::AlreadyApplied)
            } else {
                Err(ReviewError::ConflictingDecisionId(decision.decision_id))
            };
        }
        let task = self
            .tasks
            .get(&decision.task_id)
            .ok_or_else(|| ReviewError::UnknownTask(decision.task_id.clone()))?
            .clone();
        if task.state == TaskState::Done {
            return Err(ReviewError::TaskAlreadyDone(task.task_id));
        }
        if !decision.result.matches(task.kind) {
            return Err(ReviewError::InvalidResultType {
                task: task.task_id,
                expected: task.kind.as_str().to_string(),
                got: decision.result.kind_label().to_string(),
            });
        }
        if decision.task_revision != task.revision {
            return Err(ReviewError::RevisionConflict {
                task: task.task_id,
                current: task.revision,
                submitted: decision.task_revision,
            });
        }

        let sense_id = task.task_id.split_once(':').map(|(_, id)| id.to_string());
        match &decision.result {
            DecisionResult::Classify { category } => {
                let sense_id = sense_id.expect("classify tasks carry a sense id");
                let sense = self
                    .senses
                    .get_mut(&sense_id)
                    .ok_or_else(|| ReviewError::UnknownTask(task.task_id.clone()))?;
                sense.entry.category = Some(*category);
                sense.classified = true;
                self.promote_if_complete(&sense_id);
                // classification unlocks gloss refinement
                let gloss_task = format!("gloss:{sense_id}");
                if !self.tasks.contains_key(&gloss_task) {
                    self.open_task(gloss_task, TaskKind::EditGloss, Some(sense_id.clone()));
                }
                self.refresh_sense_tasks(&sense_id);
            }
            DecisionResult::ApproveExample => {
                let sense_id = sense_id.expect("verify tasks carry a sense id");
                let sense = self
                    .senses
                    .get_mut(&sense_id)
                    .ok_or_else(|| ReviewError::UnknownTask(task.task_id.clone()))?;
                if sense.entry.example.is_none() {
                    return Err(ReviewError::InvalidDecision(format!(
                        "{sense_id} has no example to approve; replace instead"
                    )));
                }
                sense.example_verified = true;
                self.promote_if_complete(&sense_id);
                self.refresh_sense_tasks(&sense_id);
            }
            DecisionResult::ReplaceExample { text } => {
                if text.trim().is_empty() {
                    return Err(ReviewError::InvalidDecision(
                        "replacement example must be nonempty".to_string(),
                    ));
                }
                let sense_id = sense_id.expect("verify tasks carry a sense id");
                let sense = self
                    .senses
                    .get_mut(&sense_id)
                    .ok_or_else(|| ReviewError::UnknownTask(task.task_id.clone()))?;
                sense.entry.example = Some(text.clone());
                sense.entry.example_occurrence_id = None;
                sense.example_verified = true;
                self.promote_if_complete(&sense_id);
                self.refresh_sense_tasks(&sense_id);
            }
            DecisionResult::EditGloss { text } => {
                if text.trim().is_empty() {
                    return Err(ReviewError::InvalidDecision(
                        "gloss must be nonempty".to_string(),
                    ));
                }
                let sense_id = sense_id.expect("gloss tasks carry a sense id");
                let sense = self
                    .senses
                    .get_mut(&sense_id)
                    .ok_or_else(|| ReviewError::UnknownTask(task.task_id.clone()))?;
                sense.entry.gloss = text.clone();
                self.refresh_sense_tasks(&sense_id);
            }
            DecisionResult::Merge { accept } => {
                if *accept {
                    let rest = task
                        .task_id
                        .strip_prefix("merge:")
                        .ok_or_else(|| ReviewError::UnknownTask(task.task_id.clone()))?;
                    let (a, b) = rest.split_once('+').ok_or_else(|| {
                        ReviewError::UnknownTask(task.task_id.clone())
                    })?;
                    let a = SynsetId::new(a)?;
                    let b = SynsetId::new(b)?;
                    merge_synsets(&mut self.synsets, &a, &b)?;
                }
            }
        }

        let task = self.tasks.get_mut(&decision.task_id).expect("task exists");
        task.state = TaskState::Done;
        task.done_by = Some(decision.actor.clone());
        task.decision_id = Some(decision.decision_id.clone());
        self.decisions_by_id
            .insert(decision.decision_id.clone(), self.decisions.len());
        self.decisions.push(decision);
        Ok(Applied::Accepted)
    }

    pub fn task(&self, task_id: &str) -> Option<&ReviewTask> {
        self.tasks.get(task_id)
    }

    /// Tasks in stable task-id order, optionally filtered, starting after
    /// the cursor.
    pub fn list_tasks(
        &self,
        kind: Option<TaskKind>,
        state: Option<TaskState>,
        lemma: Option<&str>,
        after: Option<&str>,
        limit: usize,
    ) -> Vec<&ReviewTask> {
        self.tasks
            .values()
            .filter(|t| kind.map_or(true, |k| t.kind == k))
            .filter(|t| state.map_or(true, |s| t.state == s))
            .filter(|t| lemma.map_or(true, |l| t.lemma.as_deref() == Some(l)))
            .filter(|t| after.map_or(true, |a| t.task_id.as_str() > a))
            .take(limit)
            .collect()
    }

    pub fn senses(&self) -> Vec<&SenseEntry> {
        self.senses.values().map(|s| &s.entry).collect()
    }

    pub fn synsets(&self) -> &SynsetLexicon {
        &self.synsets
    }

    pub fn decisions(&self) -> &[ReviewDecision] {
        &self.decisions
    }

    pub fn export(&self) -> ExportSnapshot {
        ExportSnapshot {
            senses: self.senses.values().map(|s| s.entry.clone()).collect(),
            validated_sense_ids: self
                .senses
                .values()
                .filter(|s| s.entry.provenance == Provenance::HumanValidated)
                .map(|s| s.entry.sense_id.clone())
                .collect(),
            synsets: self.synsets.iter().cloned().collect(),
            decisions: self.decisions.clone(),
        }
    }
}

/// Append one decision to the log file, fsynced before returning.
pub fn append_decision(path: &Path, decision: &ReviewDecision) -> Result<(), ReviewError> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut line = serde_json::to_vec(decision).map_err(std::io::Error::other)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_all()?;
    Ok(())
}

pub fn read_decisions(path: &Path) -> Result<Vec<ReviewDecision>, ReviewError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| ReviewError::MalformedRecord {
                path: path.to_path_buf(),
                line: lineno + 1,
                detail: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::senses::Provenance;

    fn draft(sense_id: &str, lemma: &str, example: Option<&str>) -> SenseEntry {
        SenseEntry {
            sense_id: sense_id.to_string(),
            lemma: lemma.to_string(),
            category: Some(SupersenseCategory::Manner),
            gloss: format!("{lemma} (sense 1)"),
            example: example.map(|e| e.to_string()),
            example_occurrence_id: example.map(|_| format!("occ-{sense_id}")),
            cluster_id: format!("c-{sense_id}"),
            provenance: Provenance::Auto,
        }
    }

    fn decision(id: &str, task: &str, revision: u64, result: DecisionResult) -> ReviewDecision {
        ReviewDecision {
            decision_id: id.to_string(),
            task_id: task.to_string(),
            actor: "annotator-1".to_string(),
            timestamp: "2026-01-01T00:00:00Z".to_string(),
            task_revision: revision,
            result,
            note: None,
        }
    }

    fn fresh(drafts: Vec<SenseEntry>) -> ReviewState {
        ReviewState::new(
            drafts,
            SynsetLexicon::new(),
            &Taxonomy::builtin(),
            &SynsetParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn fresh_run_opens_classify_and_verify_per_draft() {
        let drafts: Vec<SenseEntry> = (0..5)
            .map(|i| draft(&format!("s{i}"), "softly", Some("she sang softly tonight")))
            .collect();
        let state = fresh(drafts);
        let tasks = state.list_tasks(None, None, None, None, usize::MAX);
        assert_eq!(tasks.len(), 10);
        let classify = state.list_tasks(Some(TaskKind::ClassifySense), None, None, None, usize::MAX);
        assert_eq!(classify.len(), 5);
        let done = state.list_tasks(None, Some(TaskState::Done), None, None, usize::MAX);
        assert!(done.is_empty());
    }

    #[test]
    fn classify_promotes_sense_with_example() {
        let mut state = fresh(vec![draft("s1", "hopefully", Some("hopefully it works out"))]);
        state
            .apply(decision(
                "d1",
                "classify:s1",
                0,
                DecisionResult::Classify {
                    category: SupersenseCategory::SpeakerOriented,
                },
            ))
            .unwrap();
        let sense = &state.senses()[0];
        assert_eq!(sense.category, Some(SupersenseCategory::SpeakerOriented));
        assert_eq!(sense.provenance, Provenance::HumanValidated);
        // a gloss task appeared
        assert!(state.task("gloss:s1").is_some());
        // the classify task is done with attribution
        let task = state.task("classify:s1").unwrap();
        assert_eq!(task.state, TaskState::Done);
        assert_eq!(task.done_by.as_deref(), Some("annotator-1"));
    }

    #[test]
    fn classify_without_example_stays_auto_until_replacement() {
        let mut state = fresh(vec![draft("s1", "oddly", None)]);
        state
            .apply(decision(
                "d1",
                "classify:s1",
                0,
                DecisionResult::Classify {
                    category: SupersenseCategory::SubjectOriented,
                },
            ))
            .unwrap();
        assert_eq!(state.senses()[0].provenance, Provenance::Auto);
        // verify task revision was bumped by the classify (payload changed)
        let verify = state.task("verify:s1").unwrap();
        assert_eq!(verify.revision, 1);
        state
            .apply(decision(
                "d2",
                "verify:s1",
                1,
                DecisionResult::ReplaceExample {
                    text: "he blinked oddly at the light".to_string(),
                },
            ))
            .unwrap();
        let sense = &state.senses()[0];
        assert_eq!(sense.provenance, Provenance::HumanValidated);
        assert_eq!(sense.example.as_deref(), Some("he blinked oddly at the light"));
        assert!(sense.example_occurrence_id.is_none());
    }

    #[test]
    fn second_submission_is_rejected() {
        let mut state = fresh(vec![draft("s1", "softly", Some("she sang softly"))]);
        let d = decision(
            "d1",
            "classify:s1",
            0,
            DecisionResult::Classify {
                category: SupersenseCategory::Manner,
            },
        );
        state.apply(d.clone()).unwrap();
        // identical retry: idempotent
        assert_eq!(state.apply(d).unwrap(), Applied::AlreadyApplied);
        // a different decision against the done task: rejected
        let err = state
            .apply(decision(
                "d2",
                "classify:s1",
                0,
                DecisionResult::Classify {
                    category: SupersenseCategory::Degree,
                },
            ))
            .unwrap_err();
        assert!(matches!(err, ReviewError::TaskAlreadyDone(_)));
    }

    #[test]
    fn mismatched_result_type_rejected() {
        let mut state = fresh(vec![draft("s1", "softly", Some("she sang softly"))]);
        let err = state
            .apply(decision("d1", "classify:s1", 0, DecisionResult::ApproveExample))
            .unwrap_err();
        assert!(matches!(err, ReviewError::InvalidResultType { .. }));
    }

    #[test]
    fn stale_revision_conflicts() {
        let mut state = fresh(vec![draft("s1", "softly", Some("she sang softly"))]);
        state
            .apply(decision(
                "d1",
                "classify:s1",
                0,
                DecisionResult::Classify {
                    category: SupersenseCategory::Manner,
                },
            ))
            .unwrap();
        // verify task is now at revision 1; a client that fetched earlier
        // submits against 0 and must see a conflict
        let err = state
            .apply(decision("d2", "verify:s1", 0, DecisionResult::ApproveExample))
            .unwrap_err();
        assert!(matches!(err, ReviewError::RevisionConflict { current: 1, submitted: 0, .. }));
    }

    #[test]
    fn unknown_task_rejected() {
        let mut state = fresh(vec![]);
        let err = state
            .apply(decision("d1", "classify:ghost", 0, DecisionResult::ApproveExample))
            .unwrap_err();
        assert!(matches!(err, ReviewError::UnknownTask(_)));
    }

    #[test]
    fn replay_matches_incremental_state() {
        let drafts: Vec<SenseEntry> = (0..3)
            .map(|i| draft(&format!("s{i}"), "softly", Some("she sang softly tonight")))
            .collect();
        let mut live = fresh(drafts.clone());
        let decisions = vec![
            decision(
                "d1",
                "classify:s0",
                0,
                DecisionResult::Classify {
                    category: SupersenseCategory::Manner,
                },
            ),
            decision("d2", "verify:s1", 0, DecisionResult::ApproveExample),
            decision(
                "d3",
                "gloss:s0",
                0,
                DecisionResult::EditGloss {
                    text: "in a soft and gentle way".to_string(),
                },
            ),
        ];
        for d in &decisions {
            live.apply(d.clone()).unwrap();
        }
        let replayed = ReviewState::replay(
            drafts,
            SynsetLexicon::new(),
            &Taxonomy::builtin(),
            &SynsetParams::default(),
            decisions,
        )
        .unwrap();
        let a = serde_json::to_vec(&live.export()).unwrap();
        let b = serde_json::to_vec(&replayed.export()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replay_with_unknown_task_is_refused() {
        let err = ReviewState::replay(
            vec![],
            SynsetLexicon::new(),
            &Taxonomy::builtin(),
            &SynsetParams::default(),
            vec![decision("d1", "classify:ghost", 0, DecisionResult::ApproveExample)],
        )
        .unwrap_err();
        assert!(matches!(err, ReviewError::Replay { .. }));
    }

    #[test]
    fn zero_decisions_snapshot_equals_drafts() {
        let drafts = vec![draft("s1", "softly", Some("she sang softly"))];
        let state = fresh(drafts.clone());
        let snapshot = state.export();
        assert_eq!(snapshot.senses, drafts);
        assert!(snapshot.validated_sense_ids.is_empty());
        assert!(snapshot.decisions.is_empty());
    }

    #[test]
    fn decision_log_roundtrips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("decisions.jsonl");
        let d1 = decision(
            "d1",
            "classify:s1",
            0,
            DecisionResult::Classify {
                category: SupersenseCategory::Focus,
            },
        );
        let d2 = decision("d2", "verify:s1", 1, DecisionResult::ApproveExample);
        append_decision(&path, &d1).unwrap();
        append_decision(&path, &d2).unwrap();
        assert_eq!(read_decisions(&path).unwrap(), vec![d1, d2]);
    }

    #[test]
    fn pagination_cursor_walks_task_ids() {
        let drafts: Vec<SenseEntry> = (0..4)
            .map(|i| draft(&format!("s{i}"), "softly", Some("she sang softly")))
            .collect();
        let state = fresh(drafts);
        let page1 = state.list_tasks(None, None, None, None, 3);
        assert_eq!(page1.len(), 3);
        let cursor = page1.last().unwrap().task_id.clone();
        let page2 = state.list_tasks(None, None, None, Some(&cursor), 100);
        assert_eq!(page2.len(), 5);
        let mut all: Vec<String> = page1
            .iter()
            .chain(page2.iter())
            .map(|t| t.task_id.clone())
            .collect();
        let mut sorted = all.clone();
        sorted.sort();
        all.dedup();
        assert_eq!(all, sorted);
    }
}
