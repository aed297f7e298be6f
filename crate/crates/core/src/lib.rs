//! Building blocks for a semi-automatic adverb lexicon expansion pipeline.
//!
//! The pipeline turns raw corpora into reviewed, category-labelled adverb
//! synsets in a YAML lexicon format:
//!
//! 1. [`corpus`] ingests documents and extracts adverb occurrences by
//!    dictionary lookup plus suffix morphology.
//! 2. An external adapter computes a contextual embedding and a masked-token
//!    entropy per occurrence; [`embeddings`] defines that interchange format
//!    and the vector math everything downstream uses.
//! 3. [`senses`] clusters each adverb's occurrences into candidate senses
//!    (agglomerative clustering over cosine distance) and picks each sense's
//!    prototypical example by minimum masked entropy.
//! 4. [`taxonomy`] supplies the ten supersense categories and a cue-lexicon
//!    suggester that pre-fills human review.
//! 5. [`review`] folds annotator decisions over drafted senses; [`synsets`]
//!    groups validated senses into category-homogeneous synsets.
//! 6. [`oewn`] parses, validates and canonically emits the YAML lexicon.
//! 7. [`agreement`] computes Cohen's kappa between two annotators.
//!
//! Hot loops (pairwise distances, per-document extraction, per-lemma
//! clustering) run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to equivalent sequential code otherwise. Both
//! paths produce identical output.

pub mod agreement;
pub mod corpus;
pub mod demo;
pub mod embeddings;
mod exec;
pub mod manifest;
pub mod oewn;
pub mod review;
pub mod senses;
pub mod synsets;
pub mod taxonomy;

mod ids;

pub use ids::content_id;
