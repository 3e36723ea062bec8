//! Event studies of market reactions to minutes releases: outcome
//! construction, the dove/hawk sentiment axis, per-horizon local
//! projections and BCa bootstrap bands.

mod bootstrap;
mod outcome;
mod panel;
mod projection;

pub use bootstrap::{
    acceleration, bca_bootstrap, bca_interval, bca_with, bias_correction, bootstrap_coefficients,
    jackknife_coefficients, percentile_interval, BootstrapMode, BootstrapOptions, Interval,
};
pub use outcome::{centroid, log_return, sentiment_axis, spread_outcome, Indicator};
pub use panel::{load_events, Event, EventPanel, HORIZONS};
pub use projection::{
    event_study, local_projection, write_projection_csv, HorizonBands, HorizonFit, ProjectionResult,
    MIN_EVENTS,
};
