//! Metrics, group reports, comparison tables and feature export.

pub mod compare;
pub mod embed;
pub mod metrics;
pub mod predict;
pub mod report;

pub use compare::{compare_reports, Comparison, ComparisonRow, METHOD_ORDER};
pub use embed::{centroid_distance, export_embeddings, pca_2d, EmbeddingDomain, Embeddings};
pub use metrics::{format_pct, mae_per_axis, pct_of_range, r_squared, round_half_up};
pub use predict::{extract_features, predict_forces, truth_forces};
pub use report::{build_group_report, report_from_predictions, AxisMetrics, GroupReport, AVG_CONVENTION};
