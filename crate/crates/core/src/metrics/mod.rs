//! Endmember matching and SAD/RMSE scoring against ground truth.

mod matching;
mod report;

pub use matching::{hungarian, match_endmembers, sad_cost_matrix, EXHAUSTIVE_LIMIT};
pub use report::{config_hash, evaluate, mean_std, median, rmse_report, sad_report, MetricsReport};
