//! Recursive lower/upper bounds for the recursion values.
//!
//! With `|r_0 - r̂_0| < ε` and `|r_i - r̂_i| < w` for `i >= 1`, the bounds
//! are built level by level, each consuming the *opposite* bound at the
//! earlier levels:
//!
//! ```text
//! lower_1 = Q_0 / (r_0 + ε)              upper_1 = Q_0 / (r_0 - ε)
//! lower_n = [(1 - r_1 - w) lower_{n-1} - Σ_{i=2}^{n-1} (r_i + w) upper_{n-i}] / (r_0 + ε)
//! upper_n = [(1 - r_1 + w) upper_{n-1} - Σ_{i=2}^{n-1} (r_i - w) lower_{n-i}] / (r_0 - ε)
//! ```
//!
//! The two-sided statistic uses `w = 2ε` with `K(ε√N) = P`. The one-sided
//! statistics use `ε` from `1 - exp(-2Nε²) = P` and `w = γ` from the
//! convolution law.
//!
//! Degenerate cases follow fixed conventions: `r_0 <= ε` makes every upper
//! bound infinite; a negative leading coefficient `1 - r_1 - w` or a negative
//! lower-bound bracket is replaced by zero. Each is flagged on its row.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kolmogorov::{width_for, ConfidenceSpec, LimitLaw};
use crate::moments::MomentVector;
use crate::recursion::{require_order, solve_recursion, Characteristic, CharacteristicSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Bounds from `δ_N`.
    TwoSidedStatistic,
    /// Bounds from `δ_N^-` (or `δ_N^+`) and their sum.
    OneSidedStatistics,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::TwoSidedStatistic => "two-sided",
            Method::OneSidedStatistics => "one-sided",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(Method::TwoSidedStatistic),
            "one-sided" => Ok(Method::OneSidedStatistics),
            other => Err(Error::invalid(format!(
                "unknown method {other:?}; expected two-sided or one-sided"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFlags {
    /// `r_0 <= ε`: the upper bound is `+∞`.
    pub upper_infinite: bool,
    /// `1 - r_1 - w < 0` was replaced by zero in the lower bound.
    pub lead_clamped: bool,
    /// The lower-bound bracket was negative and replaced by zero.
    pub term_clamped: bool,
    /// A natural-scale bound was moved into the characteristic's range
    /// (nonnegative expectations, probabilities at most one).
    pub range_clipped: bool,
    /// No usable bound on this row; the natural range is reported instead.
    pub degenerate: bool,
}

impl RowFlags {
    pub fn any(&self) -> bool {
        self.upper_infinite
            || self.lead_clamped
            || self.term_clamped
            || self.range_clipped
            || self.degenerate
    }

    fn merge(&mut self, other: RowFlags) {
        self.upper_infinite |= other.upper_infinite;
        self.lead_clamped |= other.lead_clamped;
        self.term_clamped |= other.term_clamped;
        self.range_clipped |= other.range_clipped;
        self.degenerate |= other.degenerate;
    }

    /// Short comma-separated labels, empty when no flag is set.
    pub fn labels(&self) -> String {
        let mut out = Vec::new();
        if self.upper_infinite {
            out.push("upper-inf");
        }
        if self.lead_clamped {
            out.push("lead-clamped");
        }
        if self.term_clamped {
            out.push("term-clamped");
        }
        if self.range_clipped {
            out.push("range-clipped");
        }
        if self.degenerate {
            out.push("degenerate");
        }
        out.join(",")
    }
}

/// Widths applied to `r_0` and to `r_i, i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Widths {
    pub epsilon: f64,
    pub higher: f64,
}

impl Widths {
    pub fn two_sided(epsilon: f64) -> Self {
        Self {
            epsilon,
            higher: 2.0 * epsilon,
        }
    }

    pub fn one_sided(epsilon: f64, gamma: f64) -> Self {
        Self {
            epsilon,
            higher: gamma,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("gamma", self.higher)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be a nonnegative finite width, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Paired bound sequences on the recursion scale, indexed `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSequences {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub flags: Vec<RowFlags>,
}

/// Bounds for the statistic `δ_N`: width `ε` on `r_0`, `2ε` elsewhere.
pub fn bounds_two_sided(
    seed: f64,
    moments: &MomentVector,
    eps: f64,
    n: usize,
) -> Result<BoundSequences> {
    bounds_with_widths(seed, moments, Widths::two_sided(eps), n)
}

/// Bounds for `δ_N^-`/`δ_N^+`: width `ε` on `r_0`, `γ` elsewhere.
pub fn bounds_one_sided(
    seed: f64,
    moments: &MomentVector,
    eps: f64,
    gamma: f64,
    n: usize,
) -> Result<BoundSequences> {
    bounds_with_widths(seed, moments, Widths::one_sided(eps, gamma), n)
}

/// Runs the bound recursion for arbitrary widths.
///
/// The recursion is positively homogeneous in the seed, so a negative seed
/// is handled by bounding the unit seed and mirroring: lower and upper swap
/// roles after scaling.
pub fn bounds_with_widths(
    seed: f64,
    moments: &MomentVector,
    widths: Widths,
    n: usize,
) -> Result<BoundSequences> {
    widths.validate()?;
    require_order(moments, n)?;
    if !seed.is_finite() {
        return Err(Error::invalid(format!("seed must be finite, got {seed}")));
    }
    let unit = unit_bounds(moments.values(), widths, n);
    if seed >= 0.0 {
        Ok(BoundSequences {
            lower: unit.lower.iter().map(|v| scale(seed, *v)).collect(),
            upper: unit.upper.iter().map(|v| scale(seed, *v)).collect(),
            flags: unit.flags,
        })
    } else {
        Ok(BoundSequences {
            lower: unit.upper.iter().map(|v| scale(seed, *v)).collect(),
            upper: unit.lower.iter().map(|v| scale(seed, *v)).collect(),
            flags: unit.flags,
        })
    }
}

// 0 * inf is taken as 0: a zero seed pins every level to zero.
fn scale(seed: f64, v: f64) -> f64 {
    if seed == 0.0 {
        0.0
    } else {
        seed * v
    }
}

fn unit_bounds(r: &[f64], widths: Widths, n: usize) -> BoundSequences {
    let Widths {
        epsilon: eps,
        higher: w,
    } = widths;
    let mut lower = vec![1.0];
    let mut upper = vec![1.0];
    let mut flags = vec![RowFlags::default()];
    if n == 0 {
        return BoundSequences {
            lower,
            upper,
            flags,
        };
    }

    let upper_infinite = r[0] <= eps;
    let lo_div = r[0] + eps;
    let up_div = r[0] - eps;

    lower.push(1.0 / lo_div);
    upper.push(if upper_infinite {
        f64::INFINITY
    } else {
        1.0 / up_div
    });
    flags.push(RowFlags {
        upper_infinite,
        ..RowFlags::default()
    });

    for k in 2..=n {
        let mut f = RowFlags {
            upper_infinite,
            ..RowFlags::default()
        };

        let mut lead = 1.0 - r[1] - w;
        if lead < 0.0 {
            lead = 0.0;
            f.lead_clamped = true;
        }
        let mut lo = lead * lower[k - 1];
        for i in 2..k {
            lo -= (r[i] + w) * upper[k - i];
        }
        if lo < 0.0 || lo.is_nan() {
            lo = 0.0;
            f.term_clamped = true;
        }
        lower.push(lo / lo_div);

        if upper_infinite {
            upper.push(f64::INFINITY);
        } else {
            // (r_i - w) may be negative; the term then widens the bound.
            let mut up = (1.0 - r[1] + w) * upper[k - 1];
            for i in 2..k {
                up -= (r[i] - w) * lower[k - i];
            }
            upper.push(up / up_div);
        }
        flags.push(f);
    }

    BoundSequences {
        lower,
        upper,
        flags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub n: usize,
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
    pub flags: RowFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTable {
    pub characteristic: Characteristic,
    pub method: Method,
    pub widths: Widths,
    /// Solved `ε`, present when the widths came from a confidence level.
    pub epsilon: Option<ConfidenceSpec>,
    /// Solved `γ` (one-sided method only).
    pub gamma: Option<ConfidenceSpec>,
    pub rows: Vec<IntervalRow>,
}

/// Widths for `method` at confidence `p` from `n_obs` observations.
pub fn solve_widths(
    method: Method,
    p: f64,
    n_obs: usize,
) -> Result<(Widths, ConfidenceSpec, Option<ConfidenceSpec>)> {
    match method {
        Method::TwoSidedStatistic => {
            let eps = width_for(LimitLaw::TwoSided, p, n_obs)?;
            Ok((Widths::two_sided(eps.width), eps, None))
        }
        Method::OneSidedStatistics => {
            let eps = width_for(LimitLaw::OneSided, p, n_obs)?;
            let gamma = width_for(LimitLaw::OneSidedSum, p, n_obs)?;
            Ok((Widths::one_sided(eps.width, gamma.width), eps, Some(gamma)))
        }
    }
}

/// Point estimates and bounds for buffer sizes `0..=n`, on the
/// characteristic's natural scale.
pub fn interval_table(
    spec: &CharacteristicSpec,
    moments: &MomentVector,
    confidence: f64,
    n_obs: usize,
    method: Method,
    n: usize,
) -> Result<IntervalTable> {
    let (widths, eps, gamma) = solve_widths(method, confidence, n_obs)?;
    let mut table = interval_table_with_widths(spec, moments, method, widths, n)?;
    table.epsilon = Some(eps);
    table.gamma = gamma;
    Ok(table)
}

/// As [`interval_table`] but with the widths given directly.
pub fn interval_table_with_widths(
    spec: &CharacteristicSpec,
    moments: &MomentVector,
    method: Method,
    widths: Widths,
    n: usize,
) -> Result<IntervalTable> {
    spec.check_rate(moments)?;
    let point_q = solve_recursion(spec.seed(), moments, n)?;
    let bounds = bounds_with_widths(spec.seed(), moments, widths, n)?;

    let rows = (0..=n)
        .map(|k| {
            if k == 0 {
                let v = spec.to_natural(spec.seed());
                return Ok(IntervalRow {
                    n: 0,
                    lower: v,
                    point: v,
                    upper: v,
                    flags: RowFlags::default(),
                });
            }
            let point = natural_point(spec, point_q[k], k)?;
            let (lower, upper, extra) = natural_bounds(spec, bounds.lower[k], bounds.upper[k]);
            let mut flags = bounds.flags[k];
            flags.merge(extra);
            Ok(IntervalRow {
                n: k,
                lower,
                point,
                upper,
                flags,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(IntervalTable {
        characteristic: spec.kind(),
        method,
        widths,
        epsilon: None,
        gamma: None,
        rows,
    })
}

fn natural_point(spec: &CharacteristicSpec, q: f64, k: usize) -> Result<f64> {
    if spec.kind() == Characteristic::LossProbability && q <= 0.0 {
        return Err(Error::Degenerate(format!(
            "point estimate 1/π_{k} = {q} is not positive"
        )));
    }
    Ok(spec.to_natural(q))
}

fn natural_bounds(spec: &CharacteristicSpec, q_lo: f64, q_up: f64) -> (f64, f64, RowFlags) {
    let mut flags = RowFlags::default();
    match spec.kind() {
        Characteristic::LossProbability => {
            if !(q_lo > 0.0 && q_up > 0.0) {
                flags.degenerate = true;
                return (0.0, 1.0, flags);
            }
            // π = 1/Q reverses the order.
            let lower = q_up.recip();
            let mut upper = q_lo.recip();
            if upper > 1.0 {
                upper = 1.0;
                flags.range_clipped = true;
            }
            (lower, upper, flags)
        }
        _ => {
            let mut lower = spec.to_natural(q_lo);
            let upper = spec.to_natural(q_up);
            if lower < 0.0 {
                lower = 0.0;
                flags.range_clipped = true;
            }
            (lower, upper, flags)
        }
    }
}
