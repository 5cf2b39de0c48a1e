//! Classification metrics and their tabular and graphical outputs.

mod metrics;
mod plots;
mod predictions;
mod table;

pub use metrics::{evaluate, ClassMetrics, ClassificationReport, ConfusionMatrix};
pub use plots::{emit_plots, CONFUSION_CSV, FIGURES_DIR, METRICS_CSV, SUPPORT_CSV};
pub use predictions::{read_predictions_csv, write_predictions_csv, Prediction};
pub use table::{format_percent, format_rate, render_results_table, ResultRow, ResultsTable, TABLE_COLUMNS};
