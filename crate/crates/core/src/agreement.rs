//! Inter-annotator agreement over supersense labels: confusion matrices and
//! Cohen's kappa for the two-annotator setup.
//!
//! Items labelled by only one annotator are excluded pairwise and reported,
//! not treated as an eleventh category.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::taxonomy::{parse_category, SupersenseCategory, TaxonomyError};

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("annotators share no items")]
    NoSharedItems,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("kappa undefined: degenerate marginals with disagreement (corrupt input?)")]
    UndefinedKappa,
    #[error("malformed annotation file {path}:{line}: {detail}")]
    MalformedAnnotation {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("duplicate item id {0}")]
    DuplicateItem(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One annotator's labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    pub annotator_id: String,
    pub labels: BTreeMap<String, SupersenseCategory>,
}

impl AnnotationSet {
    /// Load a `item_id,category` CSV (header required).
    pub fn load_csv(path: &Path, annotator_id: &str) -> Result<AnnotationSet, AgreementError> {
        let mut reader = csv::Reader::from_path(path)?;
        {
            let headers = reader.headers()?;
            let fields: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
            if fields != ["item_id", "category"] {
                return Err(AgreementError::MalformedAnnotation {
                    path: path.to_path_buf(),
                    line: 1,
                    detail: format!("expected header item_id,category, found {fields:?}"),
                });
            }
        }
        let mut labels = BTreeMap::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let item = record
                .get(0)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| AgreementError::MalformedAnnotation {
                    path: path.to_path_buf(),
                    line: i + 2,
                    detail: "missing item_id".to_string(),
                })?;
            let category = record.get(1).map(str::trim).unwrap_or_default();
            let category = parse_category(category)?;
            if labels.insert(item.to_string(), category).is_some() {
                return Err(AgreementError::DuplicateItem(item.to_string()));
            }
        }
        Ok(AnnotationSet {
            annotator_id: annotator_id.to_string(),
            labels,
        })
    }
}

/// Square confusion matrix over an ordered category list; rows are the
/// first annotator, columns the second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub categories: Vec<SupersenseCategory>,
    pub counts: Vec<Vec<u64>>,
    pub n: u64,
}

impl ConfusionMatrix {
    pub fn from_counts(
        categories: Vec<SupersenseCategory>,
        counts: Vec<Vec<u64>>,
    ) -> ConfusionMatrix {
        let n = counts.iter().flatten().sum();
        ConfusionMatrix {
            categories,
            counts,
            n,
        }
    }

    pub fn transpose(&self) -> ConfusionMatrix {
        let k = self.categories.len();
        let mut t = vec![vec![0u64; k]; k];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                t[j][i] = c;
            }
        }
        ConfusionMatrix {
            categories: self.categories.clone(),
            counts: t,
            n: self.n,
        }
    }
}

/// Items present for one annotator only, excluded from the matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Exclusions {
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

/// Cross-tabulate two annotators over their shared items. All ten
/// categories index the matrix, in taxonomy order.
pub fn confusion(
    a: &AnnotationSet,
    b: &AnnotationSet,
) -> Result<(ConfusionMatrix, Exclusions), AgreementError> {
    let index: BTreeMap<SupersenseCategory, usize> = SupersenseCategory::ALL
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut counts = vec![vec![0u64; 10]; 10];
    let mut n = 0u64;
    let mut exclusions = Exclusions::default();
    for (item, cat_a) in &a.labels {
        match b.labels.get(item) {
            Some(cat_b) => {
                counts[index[cat_a]][index[cat_b]] += 1;
                n += 1;
            }
            None => exclusions.only_in_a.push(item.clone()),
        }
    }
    for item in b.labels.keys() {
        if !a.labels.contains_key(item) {
            exclusions.only_in_b.push(item.clone());
        }
    }
    if n == 0 {
        return Err(AgreementError::NoSharedItems);
    }
    Ok((
        ConfusionMatrix {
            categories: SupersenseCategory::ALL.to_vec(),
            counts,
            n,
        },
        exclusions,
    ))
}

/// Observed agreement: trace / n.
pub fn observed_agreement(m: &ConfusionMatrix) -> Result<f64, AgreementError> {
    if m.n == 0 {
        return Err(AgreementError::EmptyMatrix);
    }
    let trace: u64 = (0..m.categories.len()).map(|i| m.counts[i][i]).sum();
    Ok(trace as f64 / m.n as f64)
}

/// Chance agreement: sum of row-marginal * column-marginal products / n^2.
pub fn expected_agreement(m: &ConfusionMatrix) -> Result<f64, AgreementError> {
    if m.n == 0 {
        return Err(AgreementError::EmptyMatrix);
    }
    let k = m.categories.len();
    let mut p_e = 0.0f64;
    for i in 0..k {
        let row: u64 = m.counts[i].iter().sum();
        let col: u64 = (0..k).map(|j| m.counts[j][i]).sum();
        p_e += row as f64 * col as f64;
    }
    Ok(p_e / (m.n as f64 * m.n as f64))
}

fn kappa_from_agreements(p_o: f64, p_e: f64) -> Result<f64, AgreementError> {
    if (1.0 - p_e).abs() < 1e-15 {
        return if (1.0 - p_o).abs() < 1e-12 {
            Ok(1.0)
        } else {
            Err(AgreementError::UndefinedKappa)
        };
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Cohen's kappa: (p_o - p_e) / (1 - p_e). When chance agreement is total
/// (p_e = 1), perfect observation returns 1; disagreement under those
/// marginals cannot arise from consistent counts, so anything else signals
/// corrupt input.
pub fn cohen_kappa(m: &ConfusionMatrix) -> Result<f64, AgreementError> {
    kappa_from_agreements(observed_agreement(m)?, expected_agreement(m)?)
}

/// Full agreement report, serializable as JSON and renderable as text.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub annotator_a: String,
    pub annotator_b: String,
    pub kappa: f64,
    pub n: u64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub excluded: Exclusions,
    pub matrix: ConfusionMatrix,
}

pub fn agreement_report(
    a: &AnnotationSet,
    b: &AnnotationSet,
) -> Result<AgreementReport, AgreementError> {
    let (matrix, excluded) = confusion(a, b)?;
    Ok(AgreementReport {
        annotator_a: a.annotator_id.clone(),
        annotator_b: b.annotator_id.clone(),
        kappa: cohen_kappa(&matrix)?,
        n: matrix.n,
        observed_agreement: observed_agreement(&matrix)?,
        expected_agreement: expected_agreement(&matrix)?,
        excluded,
        matrix,
    })
}

impl AgreementReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "kappa: {:.6}\nn: {}\nobserved agreement: {:.6}\nexpected agreement: {:.6}\n",
            self.kappa, self.n, self.observed_agreement, self.expected_agreement
        ));
        out.push_str(&format!(
            "excluded items: {} only {}, {} only {}\n",
            self.excluded.only_in_a.len(),
            self.annotator_a,
            self.excluded.only_in_b.len(),
            self.annotator_b
        ));
        out
    }
}
