//! Shared inputs for the criterion benches.

use lossq_core::{draw_samples, EmpiricalCdf, ServiceDistribution};

/// ECDF of `n` Exp(1) draws with a fixed seed.
pub fn exponential_ecdf(n: usize) -> EmpiricalCdf {
    let dist = ServiceDistribution::exponential(1.0).expect("valid rate");
    EmpiricalCdf::from(draw_samples(&dist, n, 1).expect("valid sample"))
}
