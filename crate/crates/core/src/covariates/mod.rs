//! Meeting-level regressors: diversity entropies, staff-forecast trends,
//! member composition, SEP disagreement and its principal components.

mod composition;
mod pca;
mod sep;

pub use composition::{
    entropy, meeting_covariates, member_composition, trend_and_sd, write_covariates_csv, Composition,
    MeetingCovariates, COVARIATE_COLUMNS, DAYS_PER_YEAR,
};
pub use pca::{pca, write_pca_csv, PcaResult};
pub use sep::{sep_disagreement, sep_measures, Center, MeasureMatrix};
