//! Pipeline stage implementations behind the CLI subcommands.
//!
//! Every stage reads its inputs from the run directory, checks them against
//! the manifest (refusing stale intermediates without --force), does its
//! work, writes outputs atomically, and records hashes and counts back into
//! the manifest. Stage outputs carry no timestamps, so rerunning a stage
//! over unchanged inputs reproduces its output byte for byte; the audit and
//! decision logs are the only append-only files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use advsense_core::agreement::{agreement_report, AnnotationSet};
use advsense_core::corpus::{
    extract_corpus, ingest, read_occurrences, write_occurrences, AdverbOccurrence,
    ExtractionLexicon,
};
use advsense_core::demo::{generate, DemoSpec};
use advsense_core::embeddings::load_store;
use advsense_core::manifest::{hash_file, Manifest, StageRecord};
use advsense_core::oewn::{
    emit_lexicon, parse_lexicon, validate_lexicon, LexiconFile, ValidateOptions,
};
use advsense_core::review::{read_decisions, ReviewState};
use advsense_core::senses::{
    cluster_all_lemmas, draft_entry, read_clusters, read_senses, select_example, write_clusters,
    write_residual, write_senses, Provenance, SenseEntry,
};
use advsense_core::synsets::{
    append_audit_record, form_synsets, AuditEvent, AuditRecord, Origin, Synset, SynsetLexicon,
    ValidatedSense,
};
use advsense_core::taxonomy::{parse_category, Taxonomy};

use crate::config::RunConfig;
use crate::CliError;

pub struct StageContext {
    pub config: RunConfig,
    pub force: bool,
    pub dry_run: bool,
}

impl StageContext {
    fn path(&self, name: &str) -> PathBuf {
        self.config.run_dir.join(name)
    }

    fn rel(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.run_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    }

    fn manifest_path(&self) -> PathBuf {
        self.path("manifest.json")
    }

    fn load_manifest(&self) -> Result<Manifest, CliError> {
        Manifest::load(&self.manifest_path()).map_err(internal)
    }

    fn taxonomy(&self) -> Result<Taxonomy, CliError> {
        match &self.config.cue_lexicon {
            Some(path) => {
                require_file(path, "cue lexicon")?;
                Taxonomy::from_cue_file(path)
                    .map_err(|e| CliError::Config(format!("cue lexicon: {e}")))
            }
            None => Ok(Taxonomy::builtin()),
        }
    }

    fn extraction_lexicon(&self) -> Result<ExtractionLexicon, CliError> {
        match &self.config.extraction_lexicon {
            Some(path) => {
                require_file(path, "extraction lexicon")?;
                ExtractionLexicon::load(path)
                    .map_err(|e| CliError::Config(format!("extraction lexicon: {e}")))
            }
            None => Ok(ExtractionLexicon::default()),
        }
    }

    /// Hash the given input files, then refuse to run if any of them no
    /// longer matches what the producing stage recorded.
    fn guard_inputs(&self, paths: &[&Path]) -> Result<BTreeMap<String, String>, CliError> {
        let mut hashes = BTreeMap::new();
        for path in paths {
            hashes.insert(self.rel(path), hash_file(path).map_err(internal)?);
        }
        let manifest = self.load_manifest()?;
        let stale = manifest.stale_inputs(&hashes);
        if !stale.is_empty() && !self.force {
            let detail: Vec<String> = stale
                .iter()
                .map(|s| format!("{} (produced by {}, since edited)", s.path, s.produced_by))
                .collect();
            return Err(CliError::Config(format!(
                "stale inputs: {}; rerun the producing stage or pass --force",
                detail.join(", ")
            )));
        }
        Ok(hashes)
    }

    fn record_stage(
        &self,
        stage: &str,
        inputs: BTreeMap<String, String>,
        output_paths: &[&Path],
        counts: BTreeMap<String, u64>,
    ) -> Result<(), CliError> {
        let mut outputs = BTreeMap::new();
        for path in output_paths {
            outputs.insert(self.rel(path), hash_file(path).map_err(internal)?);
        }
        let mut manifest = self.load_manifest()?;
        manifest.record_stage(
            stage,
            StageRecord {
                config_hash: self.config.config_hash(),
                inputs,
                outputs,
                counts,
            },
        );
        manifest.save(&self.manifest_path()).map_err(internal)
    }
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "{what} not found at {}",
            path.display()
        )));
    }
    Ok(())
}

fn require_stage_input(path: &Path, stage: &str, produced_by: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "{stage}: missing stage input {} (run `advsense {produced_by}` first)",
            path.display()
        )));
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, bytes).map_err(internal)?;
    std::fs::rename(&tmp, path).map_err(internal)
}

/// Expand configured corpus paths: directories become their sorted regular
/// files. Missing paths are configuration errors before any work happens.
fn corpus_files(ctx: &StageContext) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for path in &ctx.config.corpus_paths {
        if path.is_file() {
            files.push(path.clone());
        } else if path.is_dir() {
            let mut in_dir: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(internal)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            in_dir.sort();
            files.extend(in_dir);
        } else {
            return Err(CliError::Config(format!(
                "corpus path not found: {}",
                path.display()
            )));
        }
    }
    Ok(files)
}

pub fn cmd_extract(ctx: &StageContext) -> Result<(), CliError> {
    let files = corpus_files(ctx)?;
    let lexicon = ctx.extraction_lexicon()?;
    let out_path = ctx.path("occurrences.jsonl");
    if ctx.dry_run {
        for f in &files {
            println!("would read {}", f.display());
        }
        println!("would write {}", out_path.display());
        return Ok(());
    }
    if files.is_empty() {
        eprintln!("warning: corpus is empty; writing an empty occurrences file");
    }
    let docs = ingest(&files, ctx.config.corpus_format).map_err(internal)?;
    let occurrences = extract_corpus(&docs, &lexicon);
    let mut buf = Vec::new();
    write_occurrences(&mut buf, &occurrences).map_err(internal)?;
    write_atomic(&out_path, &buf)?;

    let mut inputs = BTreeMap::new();
    for f in &files {
        inputs.insert(ctx.rel(f), hash_file(f).map_err(internal)?);
    }
    if let Some(lex) = &ctx.config.extraction_lexicon {
        inputs.insert(ctx.rel(lex), hash_file(lex).map_err(internal)?);
    }
    let counts = BTreeMap::from([
        ("documents".to_string(), docs.len() as u64),
        ("occurrences".to_string(), occurrences.len() as u64),
    ]);
    ctx.record_stage("extract", inputs, &[&out_path], counts)?;
    println!(
        "extracted {} occurrences from {} documents",
        occurrences.len(),
        docs.len()
    );
    Ok(())
}

pub fn cmd_cluster(ctx: &StageContext) -> Result<(), CliError> {
    let occ_path = ctx.path("occurrences.jsonl");
    let emb_path = ctx.config.embeddings_path.clone();
    require_stage_input(&occ_path, "cluster", "extract")?;
    require_stage_input(&emb_path, "cluster", "demo (or the embedding adapter)")?;
    let clusters_path = ctx.path("clusters.jsonl");
    let residual_path = ctx.path("residual.jsonl");
    if ctx.dry_run {
        println!("would read {}", occ_path.display());
        println!("would read {}", emb_path.display());
        println!("would write {}", clusters_path.display());
        println!("would write {}", residual_path.display());
        return Ok(());
    }
    let inputs = ctx.guard_inputs(&[&occ_path, &emb_path])?;
    let occurrences = read_occurrences(&occ_path).map_err(internal)?;
    let store = load_store(&emb_path).map_err(internal)?;
    let outcome =
        cluster_all_lemmas(&occurrences, &store, &ctx.config.cluster).map_err(internal)?;

    let mut buf = Vec::new();
    write_clusters(&mut buf, &outcome.clusters).map_err(internal)?;
    write_atomic(&clusters_path, &buf)?;
    let mut buf = Vec::new();
    write_residual(&mut buf, &outcome.residual).map_err(internal)?;
    write_atomic(&residual_path, &buf)?;

    let lemmas: std::collections::BTreeSet<&str> =
        occurrences.iter().map(|o| o.lemma.as_str()).collect();
    let counts = BTreeMap::from([
        ("lemmas".to_string(), lemmas.len() as u64),
        ("clusters".to_string(), outcome.clusters.len() as u64),
        ("residual_occurrences".to_string(), outcome.residual.len() as u64),
    ]);
    ctx.record_stage("cluster", inputs, &[&clusters_path, &residual_path], counts)?;
    println!(
        "clustered {} lemmas into {} candidate senses ({} occurrences dropped as residual)",
        lemmas.len(),
        outcome.clusters.len(),
        outcome.residual.len()
    );
    Ok(())
}

pub fn cmd_select(ctx: &StageContext) -> Result<(), CliError> {
    let clusters_path = ctx.path("clusters.jsonl");
    let occ_path = ctx.path("occurrences.jsonl");
    let emb_path = ctx.config.embeddings_path.clone();
    require_stage_input(&clusters_path, "select", "cluster")?;
    require_stage_input(&occ_path, "select", "extract")?;
    require_stage_input(&emb_path, "select", "demo (or the embedding adapter)")?;
    let senses_path = ctx.path("senses.jsonl");
    if ctx.dry_run {
        println!("would read {}", clusters_path.display());
        println!("would read {}", occ_path.display());
        println!("would read {}", emb_path.display());
        println!("would write {}", senses_path.display());
        return Ok(());
    }
    let inputs = ctx.guard_inputs(&[&clusters_path, &occ_path, &emb_path])?;
    let clusters = read_clusters(&clusters_path).map_err(internal)?;
    let occurrences: BTreeMap<String, AdverbOccurrence> = read_occurrences(&occ_path)
        .map_err(internal)?
        .into_iter()
        .map(|o| (o.occurrence_id.clone(), o))
        .collect();
    let store = load_store(&emb_path).map_err(internal)?;
    let taxonomy = ctx.taxonomy()?;

    let mut ordinals: BTreeMap<String, usize> = BTreeMap::new();
    let mut drafts = Vec::with_capacity(clusters.len());
    let mut with_example = 0u64;
    for cluster in &clusters {
        let ordinal = ordinals
            .entry(cluster.lemma.clone())
            .and_modify(|n| *n += 1)
            .or_insert(1);
        let example = select_example(cluster, &occurrences, &store, &ctx.config.example)
            .map_err(internal)?;
        if example.is_some() {
            with_example += 1;
        }
        let suggestions = match &example {
            Some((sentence, _)) => taxonomy
                .suggest_category(&cluster.lemma, sentence)
                .map_err(internal)?,
            None => Vec::new(),
        };
        drafts.push(draft_entry(cluster, *ordinal, example, &suggestions));
    }
    let mut buf = Vec::new();
    write_senses(&mut buf, &drafts).map_err(internal)?;
    write_atomic(&senses_path, &buf)?;

    let counts = BTreeMap::from([
        ("senses".to_string(), drafts.len() as u64),
        ("with_example".to_string(), with_example),
        ("without_example".to_string(), drafts.len() as u64 - with_example),
    ]);
    ctx.record_stage("select", inputs, &[&senses_path], counts)?;
    println!(
        "drafted {} sense entries ({} with a selected example)",
        drafts.len(),
        with_example
    );
    Ok(())
}

/// Load the existing lexicon configured for alignment, as typed synsets
/// without centroids.
fn load_existing(ctx: &StageContext) -> Result<(SynsetLexicon, BTreeMap<String, String>), CliError> {
    let mut lexicon = SynsetLexicon::new();
    let mut lemma_of = BTreeMap::new();
    let Some(path) = &ctx.config.existing_lexicon else {
        return Ok((lexicon, lemma_of));
    };
    require_file(path, "existing lexicon")?;
    let file = parse_lexicon(path).map_err(|e| CliError::Config(format!("existing lexicon: {e}")))?;
    for (id, entry) in file.entries() {
        let category = parse_category(&entry.category).map_err(|e| {
            CliError::Config(format!("existing lexicon {id}: {e}"))
        })?;
        for member in &entry.members {
            lemma_of.insert(member.sense_id.clone(), member.lemma.clone());
        }
        lexicon
            .insert_new(Synset {
                synset_id: id.clone(),
                category,
                members: entry.members.iter().map(|m| m.sense_id.clone()).collect(),
                gloss: entry.gloss.clone(),
                examples: entry.examples.clone(),
                origin: Origin::Existing,
                centroid: None,
            })
            .map_err(internal)?;
    }
    Ok((lexicon, lemma_of))
}

/// Fold the decision log (when present) over drafts and any previously
/// formed synsets.
fn fold_review_state(
    ctx: &StageContext,
    drafts: Vec<SenseEntry>,
    synsets: SynsetLexicon,
) -> Result<Option<ReviewState>, CliError> {
    let decisions_path = ctx.path("decisions.jsonl");
    if !decisions_path.exists() {
        return Ok(None);
    }
    let decisions = read_decisions(&decisions_path).map_err(internal)?;
    let taxonomy = ctx.taxonomy()?;
    ReviewState::replay(drafts, synsets, &taxonomy, &ctx.config.synset, decisions)
        .map(Some)
        .map_err(internal)
}

pub fn cmd_synsets(ctx: &StageContext, accept_drafts: bool) -> Result<(), CliError> {
    let senses_path = ctx.path("senses.jsonl");
    let clusters_path = ctx.path("clusters.jsonl");
    require_stage_input(&senses_path, "synsets", "select")?;
    require_stage_input(&clusters_path, "synsets", "cluster")?;
    let synsets_path = ctx.path("synsets.jsonl");
    let audit_path = ctx.path("audit_log.jsonl");
    if ctx.dry_run {
        println!("would read {}", senses_path.display());
        println!("would read {}", clusters_path.display());
        println!("would write {}", synsets_path.display());
        println!("would append {}", audit_path.display());
        return Ok(());
    }
    let mut guard_paths: Vec<&Path> = vec![&senses_path, &clusters_path];
    let decisions_path = ctx.path("decisions.jsonl");
    if decisions_path.exists() {
        guard_paths.push(&decisions_path);
    }
    let inputs = ctx.guard_inputs(&guard_paths)?;

    let drafts = read_senses(&senses_path).map_err(internal)?;
    let centroids: BTreeMap<String, Vec<f64>> = read_clusters(&clusters_path)
        .map_err(internal)?
        .into_iter()
        .map(|c| (c.cluster_id.clone(), c.centroid))
        .collect();

    let folded = fold_review_state(ctx, drafts.clone(), SynsetLexicon::new())?;
    let senses: Vec<SenseEntry> = match &folded {
        Some(state) => state.senses().into_iter().cloned().collect(),
        None if accept_drafts => drafts
            .into_iter()
            .map(|mut entry| {
                if entry.category.is_some() && entry.example.is_some() {
                    entry.provenance = Provenance::HumanValidated;
                }
                entry
            })
            .collect(),
        None => {
            return Err(CliError::Config(
                "synsets: no decision log found; review the drafts (`advsense serve`) or pass \
                 --accept-drafts"
                    .to_string(),
            ))
        }
    };
    let mut skipped = 0usize;
    let mut validated = Vec::new();
    for entry in senses {
        if entry.provenance != Provenance::HumanValidated {
            skipped += 1;
            continue;
        }
        let centroid = centroids.get(&entry.cluster_id).cloned().ok_or_else(|| {
            CliError::Internal(format!(
                "sense {} references unknown cluster {}",
                entry.sense_id, entry.cluster_id
            ))
        })?;
        validated.push(ValidatedSense { entry, centroid });
    }
    if validated.is_empty() {
        return Err(CliError::Config(
            "synsets: no validated senses to group".to_string(),
        ));
    }

    let (existing, _) = load_existing(ctx)?;
    let outcome = form_synsets(&validated, &existing, &ctx.config.synset).map_err(internal)?;

    let mut lexicon = existing.clone();
    for synset in &outcome.synsets {
        let event = AuditEvent::Upsert {
            synset: synset.clone(),
        };
        advsense_core::synsets::apply_event(&mut lexicon, &event).map_err(internal)?;
        append_audit_record(
            &audit_path,
            &AuditRecord {
                timestamp: chrono::Utc::now()
                    .to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                actor: ctx.config.actor.clone(),
                event,
            },
        )
        .map_err(internal)?;
    }
    write_atomic(&synsets_path, &lexicon.to_jsonl_bytes().map_err(internal)?)?;

    let counts = BTreeMap::from([
        ("validated_senses".to_string(), validated.len() as u64),
        ("skipped_unvalidated".to_string(), skipped as u64),
        ("synsets".to_string(), lexicon.len() as u64),
        ("aligned_components".to_string(), outcome.report.aligned.len() as u64),
        ("new_synsets".to_string(), outcome.report.new_synsets as u64),
    ]);
    ctx.record_stage("synsets", inputs, &[&synsets_path], counts)?;
    println!(
        "formed {} synsets from {} validated senses ({} aligned to existing entries, {} skipped as unvalidated)",
        lexicon.len(),
        validated.len(),
        outcome.report.aligned.len(),
        skipped
    );
    if outcome.report.skipped_existing_without_centroid > 0 {
        println!(
            "note: {} alignment comparisons skipped (existing synsets without stored centroids)",
            outcome.report.skipped_existing_without_centroid
        );
    }
    Ok(())
}

pub fn cmd_emit(ctx: &StageContext) -> Result<(), CliError> {
    let synsets_path = ctx.path("synsets.jsonl");
    let senses_path = ctx.path("senses.jsonl");
    require_stage_input(&synsets_path, "emit", "synsets")?;
    require_stage_input(&senses_path, "emit", "select")?;
    let lexicon_path = ctx.path("lexicon.yaml");
    if ctx.dry_run {
        println!("would read {}", synsets_path.display());
        println!("would read {}", senses_path.display());
        println!("would write {}", lexicon_path.display());
        return Ok(());
    }
    let mut guard_paths: Vec<&Path> = vec![&synsets_path, &senses_path];
    let decisions_path = ctx.path("decisions.jsonl");
    if decisions_path.exists() {
        guard_paths.push(&decisions_path);
    }
    let inputs = ctx.guard_inputs(&guard_paths)?;

    let drafts = read_senses(&senses_path).map_err(internal)?;
    let synsets = SynsetLexicon::read_jsonl(&synsets_path).map_err(internal)?;
    let (folded_senses, folded_synsets) = match fold_review_state(ctx, drafts.clone(), synsets.clone())? {
        Some(state) => (
            state.senses().into_iter().cloned().collect::<Vec<_>>(),
            state.synsets().clone(),
        ),
        None => (drafts, synsets),
    };

    let (_, existing_lemmas) = load_existing(ctx)?;
    let mut lemma_of: BTreeMap<String, String> = existing_lemmas;
    for sense in &folded_senses {
        lemma_of.insert(sense.sense_id.clone(), sense.lemma.clone());
    }
    let file = LexiconFile::from_synsets(folded_synsets.iter(), |sense_id| {
        lemma_of.get(sense_id).cloned()
    })
    .map_err(internal)?;
    emit_lexicon(&file, &lexicon_path).map_err(internal)?;

    let options = validate_options(ctx)?;
    let findings = validate_lexicon(&file, &options);
    ctx.record_stage(
        "emit",
        inputs,
        &[&lexicon_path],
        BTreeMap::from([
            ("synsets".to_string(), file.len() as u64),
            ("findings".to_string(), findings.len() as u64),
        ]),
    )?;
    println!("emitted {} synsets to {}", file.len(), lexicon_path.display());
    for finding in &findings {
        println!("finding: {finding}");
    }
    if findings.is_empty() {
        Ok(())
    } else {
        Err(CliError::Findings(findings.len()))
    }
}

fn validate_options(ctx: &StageContext) -> Result<ValidateOptions, CliError> {
    let mut options = ValidateOptions::default();
    if ctx.config.existing_lexicon.is_some() {
        let (existing, _) = load_existing(ctx)?;
        options.new_id_range = Some((
            ctx.config.synset.id_range_start,
            ctx.config.synset.id_range_end,
        ));
        options.known_existing = existing.iter().map(|s| s.synset_id.clone()).collect();
    }
    Ok(options)
}

pub fn cmd_validate(ctx: &StageContext, lexicon_path: Option<PathBuf>) -> Result<(), CliError> {
    let path = lexicon_path.unwrap_or_else(|| ctx.path("lexicon.yaml"));
    require_file(&path, "lexicon")?;
    if ctx.dry_run {
        println!("would validate {}", path.display());
        return Ok(());
    }
    let file = match parse_lexicon(&path) {
        Ok(file) => file,
        Err(e) => {
            println!("finding: {e}");
            return Err(CliError::Findings(1));
        }
    };
    let findings = validate_lexicon(&file, &validate_options(ctx)?);
    for finding in &findings {
        println!("finding: {finding}");
    }
    if findings.is_empty() {
        println!("{}: {} synsets, no findings", path.display(), file.len());
        Ok(())
    } else {
        Err(CliError::Findings(findings.len()))
    }
}

pub fn cmd_kappa(
    a_path: &Path,
    b_path: &Path,
    json_out: Option<&Path>,
) -> Result<(), CliError> {
    require_file(a_path, "annotation file")?;
    require_file(b_path, "annotation file")?;
    let name = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "annotator".to_string())
    };
    let a = AnnotationSet::load_csv(a_path, &name(a_path))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let b = AnnotationSet::load_csv(b_path, &name(b_path))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let report = agreement_report(&a, &b).map_err(|e| CliError::Config(e.to_string()))?;
    print!("{}", report.render_text());
    if let Some(path) = json_out {
        let mut text = serde_json::to_string_pretty(&report).map_err(internal)?;
        text.push('\n');
        std::fs::write(path, text).map_err(internal)?;
    }
    Ok(())
}

/// Write the demo's run-scale config unless one already exists: the demo
/// plants 25 occurrences per sense, so the cluster-size floor scales down
/// to 20 while every other default keeps its standard value.
pub fn write_demo_config(run_dir: &Path) -> Result<PathBuf, CliError> {
    let path = run_dir.join("config.toml");
    if path.exists() {
        return Ok(path);
    }
    let text = "\
seed = 42

[corpus]
paths = [\"corpus\"]
format = \"jsonl\"

[cluster]
distance_threshold = 0.4
min_cluster_size = 20
linkage = \"average\"

[example]
min_tokens = 3
max_tokens = 20

[synset]
similarity_threshold = 0.8
id_range = [90000000, 99999999]
";
    std::fs::write(&path, text).map_err(internal)?;
    Ok(path)
}

pub fn cmd_demo(ctx: &StageContext, full: bool) -> Result<(), CliError> {
    if ctx.dry_run {
        println!("would write {}", ctx.path("corpus/demo.jsonl").display());
        println!("would write {}", ctx.config.embeddings_path.display());
        println!("would write {}", ctx.path("demo_truth.json").display());
        if full {
            println!("would run extract, cluster, select, synsets --accept-drafts, emit");
        }
        return Ok(());
    }
    std::fs::create_dir_all(&ctx.config.run_dir).map_err(internal)?;
    let (truth, files) =
        generate(&ctx.config.run_dir, ctx.config.seed, &DemoSpec::default()).map_err(internal)?;
    let counts = BTreeMap::from([
        (
            "planted_occurrences".to_string(),
            truth.expected_occurrence_count as u64,
        ),
        ("lemmas".to_string(), truth.lemmas.len() as u64),
    ]);
    ctx.record_stage(
        "demo",
        BTreeMap::new(),
        &[&files.corpus, &files.embeddings, &files.truth],
        counts,
    )?;
    println!(
        "generated demo corpus: {} lemmas, {} planted occurrences (seed {})",
        truth.lemmas.len(),
        truth.expected_occurrence_count,
        ctx.config.seed
    );
    if full {
        cmd_extract(ctx)?;
        cmd_cluster(ctx)?;
        cmd_select(ctx)?;
        cmd_synsets(ctx, true)?;
        cmd_emit(ctx)?;
    }
    Ok(())
}

pub fn cmd_serve(
    ctx: &StageContext,
    addr: &str,
    ui_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let senses_path = ctx.path("senses.jsonl");
    require_stage_input(&senses_path, "serve", "select")?;
    if ctx.dry_run {
        println!("would serve {} on {}", ctx.config.run_dir.display(), addr);
        return Ok(());
    }
    let taxonomy = ctx.taxonomy()?;
    let config = advsense_review::ServiceConfig {
        run_dir: ctx.config.run_dir.clone(),
        taxonomy,
        synset_params: ctx.config.synset,
        ui_dir,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
    runtime
        .block_on(advsense_review::serve(config, addr))
        .map_err(internal)
}
