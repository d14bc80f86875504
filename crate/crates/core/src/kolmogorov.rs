//! Limiting laws of the scaled Kolmogorov statistics and the quantile
//! equations that turn a confidence level into a bound width.
//!
//! * `K(z)`: law of `sqrt(N) * delta_N` (two-sided).
//! * `F(z) = 1 - exp(-2 z^2)`: law of either one-sided statistic.
//! * `G = F * F`: law of the sum of two independent one-sided statistics.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SERIES_TOL: f64 = 1e-12;
const BRACKET: (f64, f64) = (0.0, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitLaw {
    /// Kolmogorov's `K(z)`.
    TwoSided,
    /// `F(z) = 1 - exp(-2 z^2)`.
    OneSided,
    /// `G(z) = (F * F)(z)`.
    OneSidedSum,
}

impl LimitLaw {
    pub const ALL: [LimitLaw; 3] = [
        LimitLaw::TwoSided,
        LimitLaw::OneSided,
        LimitLaw::OneSidedSum,
    ];

    pub fn cdf(self, z: f64) -> f64 {
        match self {
            LimitLaw::TwoSided => kolmogorov_cdf(z),
            LimitLaw::OneSided => one_sided_cdf(z),
            LimitLaw::OneSidedSum => conv_cdf(z),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LimitLaw::TwoSided => "two-sided",
            LimitLaw::OneSided => "one-sided",
            LimitLaw::OneSidedSum => "one-sided-sum",
        }
    }
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LimitLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(LimitLaw::TwoSided),
            "one-sided" => Ok(LimitLaw::OneSided),
            "one-sided-sum" => Ok(LimitLaw::OneSidedSum),
            other => Err(Error::invalid(format!(
                "unknown law {other:?}; expected two-sided, one-sided or one-sided-sum"
            ))),
        }
    }
}

/// Kolmogorov's distribution `K(z) = sum_j (-1)^j exp(-2 j^2 z^2)`.
///
/// Below `z = 0.1` the value is under `1e-8` and the alternating series is
/// slow, so zero is returned.
pub fn kolmogorov_cdf(z: f64) -> f64 {
    if z.is_nan() || z < 0.1 {
        return 0.0;
    }
    let mut sum = 1.0;
    let mut sign = -1.0;
    for j in 1.. {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * z * z).exp();
        sum += 2.0 * sign * term;
        if term < SERIES_TOL {
            break;
        }
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

/// Limiting law of `sqrt(N) * delta_N^-` (and of `delta_N^+`).
pub fn one_sided_cdf(z: f64) -> f64 {
    if z.is_nan() || z <= 0.0 {
        return 0.0;
    }
    -(-2.0 * z * z).exp_m1()
}

/// `G(z) = 1 - exp(-2 z^2) - sqrt(pi) z exp(-z^2) [2 Phi(sqrt(2) z) - 1]`,
/// the self-convolution of [`one_sided_cdf`].
pub fn conv_cdf(z: f64) -> f64 {
    if z.is_nan() || z <= 0.0 {
        return 0.0;
    }
    // 2 Phi(sqrt(2) z) - 1 = erf(z)
    let central = 2.0 * normal_cdf(SQRT_2 * z) - 1.0;
    let g = one_sided_cdf(z) - PI.sqrt() * z * (-z * z).exp() * central;
    g.clamp(0.0, 1.0)
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Solves `law(z) = p` by bisection on `[0, 10]`.
pub fn quantile(law: LimitLaw, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} is not in (0, 1)")));
    }
    Ok(bisect(|z| law.cdf(z) - p, BRACKET.0, BRACKET.1))
}

// Assumes f(lo) <= 0 <= f(hi) and f nondecreasing.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// A solved bound width: `width = z / sqrt(N)` with `law(z) = confidence`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    pub confidence: f64,
    pub n_obs: usize,
    pub law: LimitLaw,
    pub z: f64,
    pub width: f64,
}

pub fn width_for(law: LimitLaw, p: f64, n_obs: usize) -> Result<ConfidenceSpec> {
    if n_obs == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let z = quantile(law, p)?;
    Ok(ConfidenceSpec {
        confidence: p,
        n_obs,
        law,
        z,
        width: z / (n_obs as f64).sqrt(),
    })
}

/// Where `F1(x) = F(x/2) = 1 - exp(-x^2/2)` and `G(x)` cross on `(0, inf)`.
///
/// Beyond the crossing `F1 <= G`, so for confidence levels above the
/// returned level the convolution width is at most twice the one-sided one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub x0: f64,
    pub level: f64,
}

pub fn crossing_point() -> Crossing {
    let diff = |x: f64| doubled_one_sided_cdf(x) - conv_cdf(x);
    let (lo, hi) = (0.5, 3.0);
    // F1 - G is positive at 0.5 and negative at 3.
    debug_assert!(diff(lo) > 0.0 && diff(hi) < 0.0);
    let x0 = bisect(|x| -diff(x), lo, hi);
    Crossing {
        x0,
        level: doubled_one_sided_cdf(x0),
    }
}

/// Law of twice a one-sided statistic, `F(x/2)`.
pub fn doubled_one_sided_cdf(x: f64) -> f64 {
    one_sided_cdf(0.5 * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_values() {
        assert_eq!(kolmogorov_cdf(0.0), 0.0);
        assert_eq!(kolmogorov_cdf(-1.0), 0.0);
        assert!((kolmogorov_cdf(1.3581) - 0.95).abs() < 1e-3);
        assert!((kolmogorov_cdf(10.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_values() {
        assert_eq!(one_sided_cdf(0.0), 0.0);
        assert_eq!(one_sided_cdf(-0.3), 0.0);
        assert!((one_sided_cdf(1.224) - 0.95).abs() < 1e-3);
        let median = (std::f64::consts::LN_2 / 2.0).sqrt();
        assert!((one_sided_cdf(median) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conv_values() {
        assert_eq!(conv_cdf(0.0), 0.0);
        assert!((conv_cdf(2.08) - 0.95).abs() < 2e-3);
    }

    #[test]
    fn normal_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        for z in [0.1, 0.7, 1.5, 3.2, 6.0] {
            assert!((normal_cdf(-z) - (1.0 - normal_cdf(z))).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(quantile(LimitLaw::OneSided, p).is_err());
        }
    }

    #[test]
    fn quantile_residual() {
        for law in LimitLaw::ALL {
            for p in [0.01, 0.3, 0.5, 0.9, 0.95, 0.999] {
                let z = quantile(law, p).unwrap();
                assert!((law.cdf(z) - p).abs() <= 1e-9, "{law} {p}");
            }
        }
    }

    #[test]
    fn one_sided_quantile_is_analytic() {
        for p in [0.1_f64, 0.5, 0.95] {
            let exact = (-(1.0 - p).ln() / 2.0).sqrt();
            assert!((quantile(LimitLaw::OneSided, p).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn widths_scale_with_sqrt_n() {
        let w = width_for(LimitLaw::TwoSided, 0.95, 10_000).unwrap();
        assert!((w.width - w.z / 100.0).abs() < 1e-16);
        assert!(width_for(LimitLaw::TwoSided, 0.95, 0).is_err());
    }

    #[test]
    fn crossing_is_a_root() {
        let c = crossing_point();
        assert!((doubled_one_sided_cdf(c.x0) - conv_cdf(c.x0)).abs() < 1e-9);
    }

    #[test]
    fn law_names_round_trip() {
        for law in LimitLaw::ALL {
            assert_eq!(law.as_str().parse::<LimitLaw>().unwrap(), law);
        }
        assert!("kuiper".parse::<LimitLaw>().is_err());
    }
}
