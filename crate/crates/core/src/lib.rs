//! Point and interval estimates for single-server loss queues built from
//! samples of service (M/GI/1/n) or interarrival (GI/M/1/n) times.
//!
//! The pipeline is: sample → [`EmpiricalCdf`] → Poisson-weighted moments
//! ([`moments_empirical`]) → explicit convolution recursion
//! ([`estimate_characteristic`]) → bounds whose widths come from the
//! limiting laws of the Kolmogorov statistics ([`interval_table`]).

pub mod ecdf;
pub mod error;
pub mod intervals;
pub mod kolmogorov;
pub mod moments;
pub mod quadrature;
pub mod recursion;
pub mod reproduce;
pub mod simulate;

pub use ecdf::{build_ecdf, ks_statistics, EmpiricalCdf, KsStatistics, Sample};
pub use error::{Error, Result};
pub use intervals::{
    bounds_one_sided, bounds_two_sided, bounds_with_widths, interval_table,
    interval_table_with_widths, solve_widths, BoundSequences, IntervalRow, IntervalTable, Method,
    RowFlags, Widths,
};
pub use kolmogorov::{
    conv_cdf, crossing_point, kolmogorov_cdf, normal_cdf, one_sided_cdf, quantile, width_for,
    ConfidenceSpec, Crossing, LimitLaw,
};
pub use moments::{
    moments_atomic, moments_empirical, moments_exponential, moments_quadrature, MomentVector,
};
pub use recursion::{
    estimate_characteristic, solve_recursion, Characteristic, CharacteristicSpec, RecursionResult,
};
pub use reproduce::{run_reproduce, MomentSource, Reproduction};
pub use simulate::{
    draw_samples, ks_law_experiment, loss_probability_oracle, simulate_busy_period,
    simulate_busy_period_range, Estimate, KsLawExperiment, ServiceDistribution, SimulationResult,
    RNG_NAME,
};
