//! Interdisciplinarity scores for scientific papers and the panel analyses
//! built on them.
//!
//! The pipeline runs corpus files → co-citation similarity between subject
//! categories → per-paper integration scores → person and person-year
//! panels → fixed-effects models. [`simgen`] produces synthetic corpora
//! with known effects for end-to-end checks.

pub mod corpus;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod panel;
pub mod sc_space;
pub mod scalar;
pub mod simgen;
pub mod stats;

pub use corpus::{Corpus, FieldRecord, JournalRecord, PaperRecord, PersonRecord, ScCatalog, ScId};
pub use error::{Error, ErrorKind, Result};
pub use ingest::{load_corpus, validate_corpus, write_corpus, CorpusPaths, LoadReport, Strictness, ValidationReport};
pub use metrics::{paper_idr, score_corpus, score_paper, PaperMetrics, PersonMetrics, RefProportions, ScoreFlag};
pub use panel::{build_panels, median_split_from_rows, median_split_variance, Panels, CollabRule, PanelConfig, PaperRow, PersonRow, PersonYearRow, SplitReport};
pub use sc_space::{build_cocitation, sum_counts, to_cosine, CoCitationCounts, EpochRegistry, SimilarityMatrix, YearWindow};
pub use scalar::{Real, Weight};
pub use simgen::{generate, target_idr_mix, GroundTruth, SimConfig, Simulation};
pub use stats::{run_h_models, ModelSuiteReport, RegressionResult, SuiteSpec};

/// Double-precision similarity matrix.
pub type Similarity = SimilarityMatrix<f64>;
/// Single-precision similarity matrix.
pub type Similarity32 = SimilarityMatrix<f32>;
/// Epoch-indexed double-precision matrices.
pub type Registry = EpochRegistry<f64>;
/// Per-paper scores keyed by paper id.
pub type Scores = panel::Scores;
/// Double-precision design matrix.
pub type Design = stats::DesignMatrix<f64>;
/// Double-precision regression result.
pub type Fit = RegressionResult<f64>;
