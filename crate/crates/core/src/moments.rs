//! Poisson-weighted moments `r_i(F) = ∫ e^{-αx} (αx)^i / i! dF(x)`.
//!
//! These are the coefficients of the convolution recurrence. `α` is the
//! arrival rate when `F` is a service-time law (M/GI/1/n) and the service
//! rate when `F` is an interarrival law (GI/M/1/n).

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    rate: f64,
    values: Vec<f64>,
}

impl MomentVector {
    /// Wraps precomputed coefficients `r_0..r_m`. Each must lie in `[0, 1]`
    /// and the partial sum may not exceed one.
    pub fn new(rate: f64, values: Vec<f64>) -> Result<Self> {
        check_rate(rate)?;
        if values.is_empty() {
            return Err(Error::invalid("moment vector needs at least r_0"));
        }
        if let Some((i, r)) = values
            .iter()
            .enumerate()
            .find(|(_, r)| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::invalid(format!("r_{i} = {r} is outside [0, 1]")));
        }
        let total: f64 = values.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(format!(
                "moments sum to {total}, which exceeds 1"
            )));
        }
        Ok(Self { rate, values })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Highest index `m` available.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied()
    }
}

impl std::ops::Index<usize> for MomentVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "rate must be positive and finite, got {rate}"
        )))
    }
}

// exp(-x) underflows to zero past ~745.
const LINEAR_WEIGHT_LIMIT: f64 = 700.0;

/// Adds `e^{-αx}(αx)^i/i!` for `i = 0..=m` into `acc`, building each weight
/// from the previous one. Large `αx` is handled in log space.
fn accumulate_poisson_weights(acc: &mut [f64], ax: f64) {
    if ax < LINEAR_WEIGHT_LIMIT {
        let mut w = (-ax).exp();
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot += w;
            w *= ax / (i + 1) as f64;
        }
    } else {
        let log_ax = ax.ln();
        let mut lw = -ax;
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot += lw.exp();
            lw += log_ax - ((i + 1) as f64).ln();
        }
    }
}

/// Stieltjes sum against atoms of mass `1/len` at each of `points`.
///
/// Unlike [`moments_empirical`] this accepts points at zero.
pub fn moments_atomic(points: &[f64], rate: f64, order: usize) -> Result<MomentVector> {
    check_rate(rate)?;
    if points.is_empty() {
        return Err(Error::invalid("no atoms supplied"));
    }
    if let Some(x) = points.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::invalid(format!(
            "atom at {x} is not a nonnegative real"
        )));
    }
    let mut acc = vec![0.0; order + 1];
    for &x in points {
        accumulate_poisson_weights(&mut acc, rate * x);
    }
    let n = points.len() as f64;
    for r in &mut acc {
        *r /= n;
    }
    MomentVector::new(rate, acc)
}

/// `r_i(F_N)`: the exact integral against the empirical CDF.
pub fn moments_empirical(ecdf: &EmpiricalCdf, rate: f64, order: usize) -> Result<MomentVector> {
    moments_atomic(ecdf.sorted_values(), rate, order)
}

/// Closed form for an exponential law with rate `exp_rate`:
/// `r_i = exp_rate * α^i / (α + exp_rate)^(i+1)`.
pub fn moments_exponential(rate: f64, exp_rate: f64, order: usize) -> Result<MomentVector> {
    check_rate(rate)?;
    check_rate(exp_rate)?;
    let ratio = rate / (rate + exp_rate);
    let mut r = exp_rate / (rate + exp_rate);
    let values = (0..=order)
        .map(|_| {
            let cur = r;
            r *= ratio;
            cur
        })
        .collect();
    MomentVector::new(rate, values)
}

const TAIL_EPS: f64 = 1e-10;

/// Moments of an arbitrary CDF via integration by parts:
///
/// * `r_0 = α ∫ e^{-αx} F(x) dx`
/// * `r_i = α ∫ [p_i(x) - p_{i-1}(x)] F(x) dx` for `i >= 1`,
///
/// with `p_i(x) = e^{-αx}(αx)^i/i!`. The integrals run numerically over
/// `[0, X]` where `1 - F(X) < 1e-10` and `αX >= 40`; beyond `X` the CDF is
/// taken as one and the tail is added in closed form.
pub fn moments_quadrature<F>(cdf: F, rate: f64, order: usize) -> Result<MomentVector>
where
    F: Fn(f64) -> f64,
{
    check_rate(rate)?;
    let upper = truncation_point(&cdf, rate)?;
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-10,
        max_intervals: 50_000,
    };

    let weight = |i: usize, x: f64| -> f64 {
        let ax = rate * x;
        let mut w = (-ax).exp();
        for k in 0..i {
            w *= ax / (k + 1) as f64;
        }
        w
    };

    let bad_value = Cell::new(None);
    let checked_cdf = |x: f64| {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            bad_value.set(Some((x, f)));
            return 0.0;
        }
        f
    };

    let mut values = Vec::with_capacity(order + 1);
    for i in 0..=order {
        let kernel = |x: f64| {
            let k = if i == 0 {
                weight(0, x)
            } else {
                weight(i, x) - weight(i - 1, x)
            };
            rate * k * checked_cdf(x)
        };
        let body = quadrature::integrate(kernel, 0.0, upper, tol)
            .map_err(|e| Error::Quadrature(format!("r_{i} at rate {rate}: {e}")))?;
        if let Some((x, f)) = bad_value.get() {
            return Err(Error::Quadrature(format!(
                "CDF returned {f} at x = {x}; expected a value in [0, 1]"
            )));
        }
        // ∫_X^∞ α p_0 = p_0(X); ∫_X^∞ α (p_i - p_{i-1}) = p_i(X).
        let tail = weight(i, upper);
        values.push((body.value + tail).clamp(0.0, 1.0));
    }
    MomentVector::new(rate, values)
}

fn truncation_point<F: Fn(f64) -> f64>(cdf: &F, rate: f64) -> Result<f64> {
    let mut x = 1.0 / rate;
    for _ in 0..200 {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Quadrature(format!(
                "CDF returned {f} at x = {x}; expected a value in [0, 1]"
            )));
        }
        if 1.0 - f < TAIL_EPS {
            return Ok(x.max(40.0 / rate));
        }
        x *= 2.0;
    }
    Err(Error::Quadrature(format!(
        "CDF tail does not fall below {TAIL_EPS:e} before x = {x:e}"
    )))
}
