//! Replayability time series and login-wall onset detection.

mod onset;
mod series;
mod stats;

pub use onset::{
    daily_counts, detect_onset, login_page_series, max_daily_jump, DailyJump, DayCount, FirstLoginRedirect,
    OnsetError, OnsetReport, LOGIN_PAGE_TARGET,
};
pub use series::{bucketize, merge_series, plot_points, Granularity, Period, PlotPoint, TimeBucket};
pub use stats::{percentage_replayable, ReplayabilityStats};
