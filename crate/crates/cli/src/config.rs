//! Run configuration: defaults, the keyed config file, and flag overrides,
//! with precedence flags > file > defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use advsense_core::corpus::IngestFormat;
use advsense_core::manifest::hash_bytes;
use advsense_core::senses::{ClusterParams, ExampleFilter, Linkage};
use advsense_core::synsets::SynsetParams;

use crate::CliError;

/// The effective configuration every stage runs under. Defaults are the
/// published pipeline settings: clustering threshold 0.4 with at least 100
/// elements per sense, example window 3..=20 tokens.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub run_dir: PathBuf,
    pub corpus_paths: Vec<PathBuf>,
    pub corpus_format: IngestFormat,
    pub extraction_lexicon: Option<PathBuf>,
    pub cue_lexicon: Option<PathBuf>,
    pub existing_lexicon: Option<PathBuf>,
    pub embeddings_path: PathBuf,
    pub cluster: ClusterParams,
    pub example: ExampleFilter,
    pub synset: SynsetParams,
    pub seed: u64,
    pub actor: String,
}

/// On-disk config file schema; every key optional.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub actor: Option<String>,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub lexicon: LexiconSection,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub example: ExampleSection,
    #[serde(default)]
    pub synset: SynsetSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub paths: Option<Vec<String>>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconSection {
    pub extraction: Option<String>,
    pub cues: Option<String>,
    pub existing: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub distance_threshold: Option<f64>,
    pub min_cluster_size: Option<usize>,
    pub linkage: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleSection {
    pub min_tokens: Option<usize>,
    pub max_tokens: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SynsetSection {
    pub similarity_threshold: Option<f64>,
    pub id_range: Option<[u32; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub embeddings: Option<String>,
}

/// Flag-level overrides collected from the CLI; None means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus_paths: Vec<PathBuf>,
    pub corpus_format: Option<String>,
    pub distance_threshold: Option<f64>,
    pub min_cluster_size: Option<usize>,
    pub linkage: Option<String>,
    pub min_tokens: Option<usize>,
    pub max_tokens: Option<usize>,
    pub similarity_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub actor: Option<String>,
}

fn parse_format(s: &str) -> Result<IngestFormat, CliError> {
    match s {
        "plain_text" => Ok(IngestFormat::PlainText),
        "jsonl" => Ok(IngestFormat::Jsonl),
        other => Err(CliError::Config(format!(
            "unknown corpus format {other:?} (expected plain_text or jsonl)"
        ))),
    }
}

fn resolve(run_dir: &Path, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    if path.is_absolute() {
        path
    } else {
        run_dir.join(path)
    }
}

impl RunConfig {
    /// Merge defaults, an optional config file, and flag overrides.
    pub fn load(
        run_dir: &Path,
        config_path: Option<&Path>,
        overrides: &Overrides,
    ) -> Result<RunConfig, CliError> {
        let file: ConfigFile = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    CliError::Config(format!("malformed config {}: {e}", path.display()))
                })?
            }
            None => {
                let default_path = run_dir.join("config.toml");
                if default_path.exists() {
                    let text = std::fs::read_to_string(&default_path).map_err(|e| {
                        CliError::Config(format!(
                            "cannot read config {}: {e}",
                            default_path.display()
                        ))
                    })?;
                    toml::from_str(&text).map_err(|e| {
                        CliError::Config(format!(
                            "malformed config {}: {e}",
                            default_path.display()
                        ))
                    })?
                } else {
                    ConfigFile::default()
                }
            }
        };

        let corpus_paths: Vec<PathBuf> = if !overrides.corpus_paths.is_empty() {
            overrides.corpus_paths.clone()
        } else {
            file.corpus
                .paths
                .clone()
                .unwrap_or_else(|| vec!["corpus".to_string()])
                .iter()
                .map(|p| resolve(run_dir, p))
                .collect()
        };
        let format_str = overrides
            .corpus_format
            .clone()
            .or(file.corpus.format.clone())
            .unwrap_or_else(|| "jsonl".to_string());
        let linkage_str = overrides
            .linkage
            .clone()
            .or(file.cluster.linkage.clone())
            .unwrap_or_else(|| "average".to_string());
        let linkage: Linkage = linkage_str.parse().map_err(CliError::Config)?;
        let id_range = file.synset.id_range.unwrap_or([90_000_000, 99_999_999]);
        if id_range[0] > id_range[1] {
            return Err(CliError::Config(format!(
                "synset id_range start {} exceeds end {}",
                id_range[0], id_range[1]
            )));
        }

        let config = RunConfig {
            run_dir: run_dir.to_path_buf(),
            corpus_paths,
            corpus_format: parse_format(&format_str)?,
            extraction_lexicon: file.lexicon.extraction.as_deref().map(|p| resolve(run_dir, p)),
            cue_lexicon: file.lexicon.cues.as_deref().map(|p| resolve(run_dir, p)),
            existing_lexicon: file.lexicon.existing.as_deref().map(|p| resolve(run_dir, p)),
            embeddings_path: resolve(
                run_dir,
                file.paths.embeddings.as_deref().unwrap_or("embeddings.jsonl"),
            ),
            cluster: ClusterParams {
                distance_threshold: overrides
                    .distance_threshold
                    .or(file.cluster.distance_threshold)
                    .unwrap_or(0.4),
                min_cluster_size: overrides
                    .min_cluster_size
                    .or(file.cluster.min_cluster_size)
                    .unwrap_or(100),
                linkage,
            },
            example: ExampleFilter {
                min_tokens: overrides.min_tokens.or(file.example.min_tokens).unwrap_or(3),
                max_tokens: overrides.max_tokens.or(file.example.max_tokens).unwrap_or(20),
            },
            synset: SynsetParams {
                similarity_threshold: overrides
                    .similarity_threshold
                    .or(file.synset.similarity_threshold)
                    .unwrap_or(0.8),
                id_range_start: id_range[0],
                id_range_end: id_range[1],
            },
            seed: overrides.seed.or(file.seed).unwrap_or(42),
            actor: overrides
                .actor
                .clone()
                .or(file.actor)
                .unwrap_or_else(|| "pipeline".to_string()),
        };
        config.cluster.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if config.example.min_tokens > config.example.max_tokens {
            return Err(CliError::Config(format!(
                "example window min {} exceeds max {}",
                config.example.min_tokens, config.example.max_tokens
            )));
        }
        Ok(config)
    }

    /// Hash of the effective configuration, recorded per stage in the
    /// manifest. Path fields are relativized where possible so moving a run
    /// directory does not invalidate it.
    pub fn config_hash(&self) -> String {
        let mut view = BTreeMap::new();
        let rel = |p: &Path| {
            p.strip_prefix(&self.run_dir)
                .unwrap_or(p)
                .to_string_lossy()
                .into_owned()
        };
        view.insert(
            "corpus_paths".to_string(),
            self.corpus_paths.iter().map(|p| rel(p)).collect::<Vec<_>>().join(","),
        );
        view.insert("corpus_format".to_string(), format!("{:?}", self.corpus_format));
        view.insert(
            "extraction_lexicon".to_string(),
            self.extraction_lexicon.as_deref().map(rel).unwrap_or_default(),
        );
        view.insert(
            "cue_lexicon".to_string(),
            self.cue_lexicon.as_deref().map(rel).unwrap_or_default(),
        );
        view.insert(
            "existing_lexicon".to_string(),
            self.existing_lexicon.as_deref().map(rel).unwrap_or_default(),
        );
        view.insert("embeddings".to_string(), rel(&self.embeddings_path));
        view.insert(
            "cluster".to_string(),
            format!(
                "{}:{}:{:?}",
                self.cluster.distance_threshold, self.cluster.min_cluster_size, self.cluster.linkage
            ),
        );
        view.insert(
            "example".to_string(),
            format!("{}:{}", self.example.min_tokens, self.example.max_tokens),
        );
        view.insert(
            "synset".to_string(),
            format!(
                "{}:{}:{}",
                self.synset.similarity_threshold, self.synset.id_range_start, self.synset.id_range_end
            ),
        );
        view.insert("seed".to_string(), self.seed.to_string());
        let serialized = serde_json::to_string(&view).expect("flat map serializes");
        hash_bytes(serialized.as_bytes())
    }
}
