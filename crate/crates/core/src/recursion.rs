//! The explicit form of the convolution recurrence `Q_n = Σ_{i=0}^n Q_{n-i+1} r_i`:
//!
//! ```text
//! Q_1 = Q_0 / r_0
//! Q_n = [(1 - r_1) Q_{n-1} - r_2 Q_{n-2} - ... - r_{n-1} Q_1] / r_0,   n >= 2
//! ```
//!
//! Busy period, served and lost customers (M/GI/1/n) and the reciprocal
//! loss probability (GI/M/1/n) all obey it with different seeds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Characteristic {
    /// `E T_n`, expected busy period of M/GI/1/n.
    BusyPeriod,
    /// `E ν_n`, expected customers served in a busy period.
    ServedCustomers,
    /// `E L_n`, expected customers lost in a busy period.
    LostCustomers,
    /// `π_n`, stationary loss probability of GI/M/1/n-1.
    LossProbability,
}

impl Characteristic {
    pub fn as_str(self) -> &'static str {
        match self {
            Characteristic::BusyPeriod => "busy",
            Characteristic::ServedCustomers => "served",
            Characteristic::LostCustomers => "lost",
            Characteristic::LossProbability => "loss-prob",
        }
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Characteristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "busy" => Ok(Characteristic::BusyPeriod),
            "served" => Ok(Characteristic::ServedCustomers),
            "lost" => Ok(Characteristic::LostCustomers),
            "loss-prob" => Ok(Characteristic::LossProbability),
            other => Err(Error::invalid(format!(
                "unknown characteristic {other:?}; expected busy, served, lost or loss-prob"
            ))),
        }
    }
}

/// A characteristic together with the system parameters that fix its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSpec {
    kind: Characteristic,
    /// `λ` for the M/GI/1/n kinds, `μ` for the loss probability.
    rate: f64,
    mean_service: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl CharacteristicSpec {
    /// Seed `E T_0 = b`.
    pub fn busy_period(arrival_rate: f64, mean_service: f64) -> Result<Self> {
        Ok(Self {
            kind: Characteristic::BusyPeriod,
            rate: positive("arrival rate", arrival_rate)?,
            mean_service: Some(positive("mean service time", mean_service)?),
        })
    }

    /// Seed `E ν_0 = 1`.
    pub fn served_customers(arrival_rate: f64, mean_service: f64) -> Result<Self> {
        Ok(Self {
            kind: Characteristic::ServedCustomers,
            rate: positive("arrival rate", arrival_rate)?,
            mean_service: Some(positive("mean service time", mean_service)?),
        })
    }

    /// Runs on `E L_n - 1` with seed `λb - 1`.
    pub fn lost_customers(arrival_rate: f64, mean_service: f64) -> Result<Self> {
        Ok(Self {
            kind: Characteristic::LostCustomers,
            rate: positive("arrival rate", arrival_rate)?,
            mean_service: Some(positive("mean service time", mean_service)?),
        })
    }

    /// Runs on `1/π_n` with seed `1/π_0 = 1`.
    pub fn loss_probability(service_rate: f64) -> Result<Self> {
        Ok(Self {
            kind: Characteristic::LossProbability,
            rate: positive("service rate", service_rate)?,
            mean_service: None,
        })
    }

    pub fn new(kind: Characteristic, rate: f64, mean_service: Option<f64>) -> Result<Self> {
        let need_b = || {
            mean_service
                .ok_or_else(|| Error::invalid(format!("{kind} requires the mean service time")))
        };
        match kind {
            Characteristic::BusyPeriod => Self::busy_period(rate, need_b()?),
            Characteristic::ServedCustomers => Self::served_customers(rate, need_b()?),
            Characteristic::LostCustomers => Self::lost_customers(rate, need_b()?),
            Characteristic::LossProbability => Self::loss_probability(rate),
        }
    }

    pub fn kind(&self) -> Characteristic {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean_service(&self) -> Option<f64> {
        self.mean_service
    }

    /// `Q_0` on the recursion scale.
    pub fn seed(&self) -> f64 {
        let b = self.mean_service.unwrap_or(0.0);
        match self.kind {
            Characteristic::BusyPeriod => b,
            Characteristic::ServedCustomers => 1.0,
            Characteristic::LostCustomers => self.rate * b - 1.0,
            Characteristic::LossProbability => 1.0,
        }
    }

    /// Maps a recursion value `Q_n` to the characteristic's own scale.
    pub fn to_natural(&self, q: f64) -> f64 {
        match self.kind {
            Characteristic::BusyPeriod | Characteristic::ServedCustomers => q,
            Characteristic::LostCustomers => q + 1.0,
            Characteristic::LossProbability => q.recip(),
        }
    }

    pub(crate) fn check_rate(&self, moments: &MomentVector) -> Result<()> {
        let tol = 1e-12 * self.rate.max(1.0);
        if (moments.rate() - self.rate).abs() > tol {
            return Err(Error::invalid(format!(
                "moments were computed at rate {} but {} needs rate {}",
                moments.rate(),
                self.kind,
                self.rate
            )));
        }
        Ok(())
    }

    // Busy period, served count and loss probability are strictly positive;
    // the lost count may be zero.
    fn is_anomalous(&self, natural: f64) -> bool {
        match self.kind {
            Characteristic::LostCustomers => natural < 0.0,
            _ => natural <= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionResult {
    /// `Q_0..Q_n` on the recursion scale (index 0 is the seed).
    pub q_values: Vec<f64>,
    /// Characteristic values for buffer sizes `0..=n`.
    pub natural_values: Vec<f64>,
    /// Buffer sizes whose estimate has an impossible sign (possible with
    /// noisy empirical moments). Values are reported unclamped.
    pub sign_anomalies: Vec<usize>,
}

impl RecursionResult {
    pub fn order(&self) -> usize {
        self.q_values.len() - 1
    }
}

pub(crate) fn require_order(moments: &MomentVector, n: usize) -> Result<()> {
    if n >= 2 && moments.order() < n - 1 {
        return Err(Error::invalid(format!(
            "order {n} needs r_0..r_{}, but only r_0..r_{} are available",
            n - 1,
            moments.order()
        )));
    }
    Ok(())
}

/// `Q_0..Q_n` from the explicit recursion, exactly as written.
pub fn solve_recursion(seed: f64, moments: &MomentVector, n: usize) -> Result<Vec<f64>> {
    require_order(moments, n)?;
    let r = moments.values();
    if r[0] <= 0.0 {
        return Err(Error::Degenerate(
            "r_0 = 0, the recursion divides by it".into(),
        ));
    }
    let mut q = Vec::with_capacity(n + 1);
    q.push(seed);
    if n == 0 {
        return Ok(q);
    }
    q.push(seed / r[0]);
    for k in 2..=n {
        let mut acc = (1.0 - r[1]) * q[k - 1];
        for i in 2..k {
            acc -= r[i] * q[k - i];
        }
        q.push(acc / r[0]);
    }
    Ok(q)
}

/// Point estimates `Q̂_0..Q̂_n` mapped to the characteristic's scale.
pub fn estimate_characteristic(
    spec: &CharacteristicSpec,
    moments: &MomentVector,
    n: usize,
) -> Result<RecursionResult> {
    spec.check_rate(moments)?;
    let q_values = solve_recursion(spec.seed(), moments, n)?;
    if spec.kind == Characteristic::LossProbability {
        if let Some((k, q)) = q_values.iter().enumerate().find(|(_, q)| **q <= 0.0) {
            return Err(Error::Degenerate(format!(
                "1/π_{k} = {q} is not positive, so no loss probability in (0, 1] exists"
            )));
        }
    }
    let natural_values: Vec<f64> = q_values.iter().map(|&q| spec.to_natural(q)).collect();
    let sign_anomalies = natural_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| spec.is_anomalous(v))
        .map(|(k, _)| k)
        .collect();
    Ok(RecursionResult {
        q_values,
        natural_values,
        sign_anomalies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moments_exponential;

    fn mv(v: &[f64]) -> MomentVector {
        MomentVector::new(1.0, v.to_vec()).unwrap()
    }

    #[test]
    fn exponential_busy_period_is_linear() {
        let q = solve_recursion(1.0, &mv(&[0.5, 0.25, 0.125, 0.0625]), 4).unwrap();
        for (k, v) in q.iter().enumerate() {
            assert!((v - (k + 1) as f64).abs() < 1e-12, "Q_{k} = {v}");
        }
    }

    #[test]
    fn zero_seed_stays_zero() {
        let q = solve_recursion(0.0, &mv(&[0.4, 0.3, 0.1, 0.05]), 4).unwrap();
        assert!(q.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rounded_empirical_moments() {
        let q = solve_recursion(1.0, &mv(&[0.5031, 0.2488, 0.1234, 0.0615]), 4).unwrap();
        let reference = [1.987589, 2.967558, 3.943322];
        for (k, p) in reference.iter().enumerate() {
            assert!(
                (q[k + 1] - p).abs() < 1e-3,
                "Q_{}: {} vs {p}",
                k + 1,
                q[k + 1]
            );
        }
    }

    #[test]
    fn zero_r0_is_degenerate() {
        let err = solve_recursion(1.0, &mv(&[0.0, 0.5]), 2).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn too_few_moments() {
        assert!(solve_recursion(1.0, &mv(&[0.5, 0.25]), 4).is_err());
        assert!(solve_recursion(1.0, &mv(&[0.5, 0.25]), 3).is_err());
        assert!(solve_recursion(1.0, &mv(&[0.5, 0.25]), 2).is_ok());
    }

    #[test]
    fn loss_probability_at_unit_load() {
        let spec = CharacteristicSpec::loss_probability(1.0).unwrap();
        let r = moments_exponential(1.0, 1.0, 3).unwrap();
        let out = estimate_characteristic(&spec, &r, 3).unwrap();
        for (k, p) in out.natural_values.iter().enumerate() {
            assert!((p - 1.0 / (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn lost_customers_at_unit_load() {
        let spec = CharacteristicSpec::lost_customers(1.0, 1.0).unwrap();
        assert_eq!(spec.seed(), 0.0);
        let r = moments_exponential(1.0, 1.0, 4).unwrap();
        let out = estimate_characteristic(&spec, &r, 4).unwrap();
        assert!(out.natural_values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn served_customers_at_unit_load() {
        let spec = CharacteristicSpec::served_customers(1.0, 1.0).unwrap();
        let r = moments_exponential(1.0, 1.0, 4).unwrap();
        let out = estimate_characteristic(&spec, &r, 4).unwrap();
        for k in 1..=4 {
            assert!((out.natural_values[k] - (k + 1) as f64).abs() < 1e-12);
        }
        assert!(out.sign_anomalies.is_empty());
    }

    #[test]
    fn light_load_lost_seed_is_negative() {
        let spec = CharacteristicSpec::lost_customers(0.5, 1.0).unwrap();
        assert_eq!(spec.seed(), -0.5);
        let r = moments_exponential(0.5, 1.0, 3).unwrap();
        let out = estimate_characteristic(&spec, &r, 3).unwrap();
        assert!((out.natural_values[0] - 0.5).abs() < 1e-15);
        assert!(out.sign_anomalies.is_empty());
    }

    #[test]
    fn rate_mismatch_rejected() {
        let spec = CharacteristicSpec::busy_period(2.0, 1.0).unwrap();
        let r = moments_exponential(1.0, 1.0, 3).unwrap();
        assert!(estimate_characteristic(&spec, &r, 3).is_err());
    }

    #[test]
    fn mean_service_required() {
        assert!(CharacteristicSpec::new(Characteristic::BusyPeriod, 1.0, None).is_err());
        assert!(CharacteristicSpec::new(Characteristic::LossProbability, 1.0, None).is_ok());
    }
}
