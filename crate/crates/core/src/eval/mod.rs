//! Closed-loop evaluation of ANN and sigma-delta controllers.

mod controller;
mod plot;
mod report;
mod trace;

pub use controller::{Controller, StepCost};
pub use plot::{mean_ci95, plot_timeseries, series, Metric, Series};
pub use report::{compare, scatter_csv, Comparison, ComparisonRow, EvalReport, MeanSd, ReportRow, METRIC_NAMES};
pub use trace::{
    collect_observations, episode_rng, read_trace_csv, run_episode, run_episode_steps, run_suite, trace_file_name,
    trace_to_csv, write_trace_csv, EpisodeTrace, TraceStep, EPISODE_STEPS,
};

#[cfg(test)]
mod tests;
