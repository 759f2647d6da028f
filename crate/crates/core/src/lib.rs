//! Report-guided automatic annotation of lesion candidates in 3D
//! confidence volumes, with FROC/ROC evaluation and resampling statistics.
//!
//! The pipeline: average an ensemble of voxel-level confidence maps
//! ([`annotate::ensemble_average`]), extract lesion candidates by dynamic
//! peak-relative region growing ([`extraction::extract_dynamic`]), count
//! clinically significant findings in the free-text radiology report
//! ([`reports::extract`]), and keep the top candidates as the automatic
//! voxel annotation ([`annotate::report_guided_annotation`]). Evaluation
//! covers lesion-level FROC/pAUC, case-level ROC/AUROC, Dice overlap,
//! permutation tests, bootstrap intervals, and annotation-efficiency
//! ratios. A deterministic synthetic generator provides phantoms and
//! report text for end-to-end validation.

pub mod annotate;
pub mod efficiency;
pub mod error;
pub mod extraction;
pub mod metrics;
pub mod reports;
pub mod stats;
pub mod synthetic;
pub mod volume;

pub use error::{Error, Result};

/// The book chapters from `book/`, embedded so their code samples run as
/// doc-tests and cannot drift from the library.
pub mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub mod overview {}
    #[doc = include_str!("../../../book/src/reports.md")]
    pub mod reports {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    pub mod extraction {}
    #[doc = include_str!("../../../book/src/annotation.md")]
    pub mod annotation {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub mod metrics {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    pub mod statistics {}
    #[doc = include_str!("../../../book/src/efficiency.md")]
    pub mod efficiency {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
