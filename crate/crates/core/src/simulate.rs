//! Seeded sampling, a busy-cycle simulator for M/GI/1/n, an exact
//! birth–death oracle for the loss probability and a Monte Carlo harness for
//! the limiting laws of the Kolmogorov statistics.
//!
//! All randomness comes from [`RNG_NAME`]. Each replication (or trial) `i`
//! uses stream `i + 1` of the generator seeded with the caller's seed, so
//! results do not depend on how replications are split or scheduled.
//! Sample draws use stream 0.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecdf::{ks_statistics, EmpiricalCdf, Sample};
use crate::error::{Error, Result};

/// Generator identity, part of the reproducibility contract.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64, stream per replication";

const CHUNK: usize = 4096;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ServiceDistribution {
    Exponential { rate: f64 },
    Erlang { shape: u32, rate: f64 },
    Deterministic { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl ServiceDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        Self::Erlang { shape, rate }.validated()
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::Deterministic { value }.validated()
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        Self::Uniform { low, high }.validated()
    }

    fn validated(self) -> Result<Self> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let ok = match self {
            Self::Exponential { rate } => pos(rate),
            Self::Erlang { shape, rate } => shape >= 1 && pos(rate),
            Self::Deterministic { value } => pos(value),
            Self::Uniform { low, high } => {
                low.is_finite() && high.is_finite() && low >= 0.0 && low < high
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::invalid(format!(
                "invalid distribution parameters: {self}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Erlang { shape, rate } => shape as f64 / rate,
            Self::Deterministic { value } => value,
            Self::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::Erlang { shape, rate } => shape as f64 / (rate * rate),
            Self::Deterministic { .. } => 0.0,
            Self::Uniform { low, high } => (high - low).powi(2) / 12.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => -(-rate * x).exp_m1(),
            Self::Erlang { shape, rate } => {
                let rx = rate * x;
                let mut term = (-rx).exp();
                let mut tail = 0.0;
                for k in 0..shape {
                    tail += term;
                    term *= rx / (k + 1) as f64;
                }
                (1.0 - tail).clamp(0.0, 1.0)
            }
            Self::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
        }
    }

    /// One strictly positive draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = match *self {
                Self::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
                Self::Erlang { shape, rate } => Gamma::new(shape as f64, 1.0 / rate)
                    .expect("validated")
                    .sample(rng),
                Self::Deterministic { value } => value,
                Self::Uniform { low, high } => {
                    Uniform::new(low, high).expect("validated").sample(rng)
                }
            };
            if v > 0.0 {
                return v;
            }
        }
    }
}

impl fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Erlang { shape, rate } => write!(f, "erlang:{shape}:{rate}"),
            Self::Deterministic { value } => write!(f, "det:{value}"),
            Self::Uniform { low, high } => write!(f, "uniform:{low}:{high}"),
        }
    }
}

/// Parses `exp:<rate>`, `erlang:<shape>:<rate>`, `det:<value>` or
/// `uniform:<low>:<high>`.
impl FromStr for ServiceDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {t:?} in distribution {s:?}")))
        };
        match parts.as_slice() {
            ["exp", rate] => Self::exponential(num(rate)?),
            ["erlang", shape, rate] => {
                let k = shape
                    .parse::<u32>()
                    .map_err(|_| Error::invalid(format!("bad Erlang shape {shape:?}")))?;
                Self::erlang(k, num(rate)?)
            }
            ["det", value] => Self::deterministic(num(value)?),
            ["uniform", low, high] => Self::uniform(num(low)?, num(high)?),
            _ => Err(Error::invalid(format!(
                "unknown distribution {s:?}; expected exp:<rate>, erlang:<k>:<rate>, det:<v> or uniform:<a>:<b>"
            ))),
        }
    }
}

pub fn draw_samples(dist: &ServiceDistribution, n_obs: usize, seed: u64) -> Result<Sample> {
    if n_obs == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let mut rng = stream_rng(seed, 0);
    let values = (0..n_obs).map(|_| dist.draw(&mut rng)).collect();
    Sample::new(values)
}

/// Mean and standard error of one simulated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn brackets(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub arrival_rate: f64,
    pub buffer: usize,
    pub distribution: ServiceDistribution,
    pub replications: u64,
    pub seed: u64,
    pub rng: String,
    pub busy_period: Estimate,
    pub served: Estimate,
    pub lost: Estimate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments3 {
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Moments3 {
    fn push(&mut self, v: [f64; 3]) {
        for (j, x) in v.into_iter().enumerate() {
            self.sum[j] += x;
            self.sum_sq[j] += x * x;
        }
    }

    fn add(mut self, o: Moments3) -> Moments3 {
        for j in 0..3 {
            self.sum[j] += o.sum[j];
            self.sum_sq[j] += o.sum_sq[j];
        }
        self
    }
}

/// One busy cycle: returns (length, served, lost).
///
/// The cycle starts with a customer entering service on an empty system.
/// Arrivals are admitted while fewer than `buffer` customers wait (the one
/// in service is not counted) and are lost otherwise.
pub fn busy_cycle<R: Rng + ?Sized>(
    rng: &mut R,
    arrival_rate: f64,
    dist: &ServiceDistribution,
    buffer: usize,
) -> (f64, u64, u64) {
    let interarrival = Exp::new(arrival_rate).expect("positive arrival rate");
    let mut waiting = 0usize;
    let mut served = 0u64;
    let mut lost = 0u64;
    let mut next_arrival = interarrival.sample(rng);
    let mut departure = dist.draw(rng);
    loop {
        if next_arrival < departure {
            let now = next_arrival;
            if waiting < buffer {
                waiting += 1;
            } else {
                lost += 1;
            }
            next_arrival = now + interarrival.sample(rng);
        } else {
            let now = departure;
            served += 1;
            if waiting == 0 {
                return (now, served, lost);
            }
            waiting -= 1;
            departure = now + dist.draw(rng);
        }
    }
}

fn simulate_range(
    arrival_rate: f64,
    dist: &ServiceDistribution,
    buffer: usize,
    seed: u64,
    range: std::ops::Range<u64>,
) -> Moments3 {
    let mut acc = Moments3::default();
    for rep in range {
        let mut rng = stream_rng(seed, rep + 1);
        let (t, s, l) = busy_cycle(&mut rng, arrival_rate, dist, buffer);
        acc.push([t, s as f64, l as f64]);
    }
    acc
}

/// Monte Carlo estimates of `E T_n`, `E ν_n` and `E L_n`.
///
/// Replications run in parallel in fixed chunks whose partial sums are
/// combined in chunk order, so the result is identical for every thread count.
pub fn simulate_busy_period(
    arrival_rate: f64,
    dist: &ServiceDistribution,
    buffer: usize,
    replications: u64,
    seed: u64,
) -> Result<SimulationResult> {
    simulate_busy_period_range(arrival_rate, dist, buffer, 0..replications, seed)
}

/// Like [`simulate_busy_period`] but over replication indices `range`, so
/// disjoint ranges can be pooled.
pub fn simulate_busy_period_range(
    arrival_rate: f64,
    dist: &ServiceDistribution,
    buffer: usize,
    range: std::ops::Range<u64>,
    seed: u64,
) -> Result<SimulationResult> {
    if !(arrival_rate.is_finite() && arrival_rate > 0.0) {
        return Err(Error::invalid(format!(
            "arrival rate must be positive, got {arrival_rate}"
        )));
    }
    let replications = range.end.saturating_sub(range.start);
    if replications == 0 {
        return Err(Error::invalid("at least one replication is required"));
    }
    let dist = dist.validated()?;
    let chunks: Vec<std::ops::Range<u64>> = (range.start..range.end)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK as u64).min(range.end))
        .collect();
    let partials: Vec<Moments3> = chunks
        .into_par_iter()
        .map(|c| simulate_range(arrival_rate, &dist, buffer, seed, c))
        .collect();
    let total = partials
        .into_iter()
        .fold(Moments3::default(), Moments3::add);

    let r = replications as f64;
    let est = |j: usize| {
        let mean = total.sum[j] / r;
        let var = if replications > 1 {
            ((total.sum_sq[j] - r * mean * mean) / (r - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / r).sqrt(),
        }
    };
    Ok(SimulationResult {
        arrival_rate,
        buffer,
        distribution: dist,
        replications,
        seed,
        rng: RNG_NAME.to_string(),
        busy_period: est(0),
        served: est(1),
        lost: est(2),
    })
}

/// Blocking probability of the finite birth–death chain with Poisson(λ)
/// arrivals, exponential(μ) service and `capacity` total positions.
///
/// The stationary law is `p_k ∝ ρ^k`, `k = 0..=capacity`, `ρ = λ/μ`.
pub fn loss_probability_oracle(
    interarrival: &ServiceDistribution,
    service_rate: f64,
    capacity: usize,
) -> Result<f64> {
    let ServiceDistribution::Exponential { rate: lambda } = interarrival.validated()? else {
        return Err(Error::invalid(
            "the birth-death oracle needs exponential interarrival times",
        ));
    };
    if !(service_rate.is_finite() && service_rate > 0.0) {
        return Err(Error::invalid(format!(
            "service rate must be positive, got {service_rate}"
        )));
    }
    if capacity == 0 {
        return Err(Error::invalid("capacity must be at least one position"));
    }
    let rho = lambda / service_rate;
    // Normalize against the largest weight to stay finite for any ρ.
    let (num, den) = if rho <= 1.0 {
        let mut w = 1.0;
        let mut sum = 0.0;
        for _ in 0..=capacity {
            sum += w;
            w *= rho;
        }
        (rho.powi(capacity as i32), sum)
    } else {
        let inv = 1.0 / rho;
        let mut w = 1.0;
        let mut sum = 0.0;
        for _ in 0..=capacity {
            sum += w;
            w *= inv;
        }
        (1.0, sum)
    };
    Ok(num / den)
}

/// Scaled statistics from repeated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsLawExperiment {
    pub n_obs: usize,
    pub trials: usize,
    pub seed: u64,
    /// `√N δ_N` per trial.
    pub two_sided: Vec<f64>,
    /// `√N δ_N^-` per trial.
    pub minus: Vec<f64>,
    /// `√N δ_N^+` per trial.
    pub plus: Vec<f64>,
    /// Sample correlation of `minus` and `plus`.
    pub correlation: f64,
}

pub fn ks_law_experiment(
    dist: &ServiceDistribution,
    n_obs: usize,
    trials: usize,
    seed: u64,
) -> Result<KsLawExperiment> {
    if n_obs < 100 || trials < 100 {
        return Err(Error::invalid(format!(
            "need N >= 100 and trials >= 100, got N = {n_obs}, trials = {trials}"
        )));
    }
    let dist = dist.validated()?;
    let stats = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64 + 1);
            let values: Vec<f64> = (0..n_obs).map(|_| dist.draw(&mut rng)).collect();
            let ecdf = EmpiricalCdf::from(Sample::new(values)?);
            Ok(ks_statistics(&ecdf, |x| dist.cdf(x))?.scaled(n_obs))
        })
        .collect::<Result<Vec<_>>>()?;

    let two_sided: Vec<f64> = stats.iter().map(|s| s.two_sided).collect();
    let minus: Vec<f64> = stats.iter().map(|s| s.one_sided_minus).collect();
    let plus: Vec<f64> = stats.iter().map(|s| s.one_sided_plus).collect();
    let correlation = pearson(&minus, &plus);
    Ok(KsLawExperiment {
        n_obs,
        trials,
        seed,
        two_sided,
        minus,
        plus,
        correlation,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_draws() {
        let d = ServiceDistribution::deterministic(1.0).unwrap();
        assert_eq!(draw_samples(&d, 3, 9).unwrap().values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn draws_are_reproducible() {
        let d = ServiceDistribution::exponential(1.0).unwrap();
        assert_eq!(
            draw_samples(&d, 100, 5).unwrap(),
            draw_samples(&d, 100, 5).unwrap()
        );
        assert_ne!(
            draw_samples(&d, 100, 5).unwrap(),
            draw_samples(&d, 100, 6).unwrap()
        );
    }

    #[test]
    fn zero_buffer_cycle_is_one_service() {
        let d = ServiceDistribution::deterministic(2.5).unwrap();
        let r = simulate_busy_period(3.0, &d, 0, 2000, 1).unwrap();
        assert_eq!(r.busy_period.mean, 2.5);
        assert_eq!(r.served.mean, 1.0);
        assert_eq!(r.busy_period.std_error, 0.0);
        // lost ~ Poisson(7.5)
        assert!(r.lost.brackets(7.5, 4.0), "{:?}", r.lost);
    }

    #[test]
    fn oracle_closed_forms() {
        let exp = |l| ServiceDistribution::exponential(l).unwrap();
        for c in 1..=6 {
            let p = loss_probability_oracle(&exp(1.0), 1.0, c).unwrap();
            assert!((p - 1.0 / (c + 1) as f64).abs() < 1e-15);
        }
        assert!((loss_probability_oracle(&exp(2.0), 1.0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // ρ = 1/2, c = 2: (1/4) / (1 + 1/2 + 1/4)
        assert!((loss_probability_oracle(&exp(0.5), 1.0, 2).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        let det = ServiceDistribution::deterministic(1.0).unwrap();
        assert!(loss_probability_oracle(&det, 1.0, 2).is_err());
        assert!(loss_probability_oracle(&exp(1.0), 1.0, 0).is_err());
    }

    #[test]
    fn huge_load_stays_finite() {
        let exp = ServiceDistribution::exponential(1e3).unwrap();
        let p = loss_probability_oracle(&exp, 1.0, 400).unwrap();
        assert!((p - (1.0 - 1e-3)).abs() < 1e-9, "{p}");
    }

    #[test]
    fn distribution_parsing() {
        let cases = [
            ("exp:2", ServiceDistribution::Exponential { rate: 2.0 }),
            (
                "erlang:2:2",
                ServiceDistribution::Erlang {
                    shape: 2,
                    rate: 2.0,
                },
            ),
            ("det:1.5", ServiceDistribution::Deterministic { value: 1.5 }),
            (
                "uniform:0:2",
                ServiceDistribution::Uniform {
                    low: 0.0,
                    high: 2.0,
                },
            ),
        ];
        for (text, d) in cases {
            assert_eq!(text.parse::<ServiceDistribution>().unwrap(), d);
            assert_eq!(d.to_string().parse::<ServiceDistribution>().unwrap(), d);
        }
        for bad in [
            "exp",
            "exp:-1",
            "erlang:0:1",
            "uniform:2:1",
            "gamma:1:1",
            "det:x",
        ] {
            assert!(bad.parse::<ServiceDistribution>().is_err(), "{bad}");
        }
    }

    #[test]
    fn erlang_cdf_matches_closed_form() {
        let d = ServiceDistribution::erlang(2, 2.0).unwrap();
        for x in [0.1_f64, 0.5, 1.0, 3.0] {
            let expect = 1.0 - (-2.0 * x).exp() * (1.0 + 2.0 * x);
            assert!((d.cdf(x) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn experiment_preconditions() {
        let d = ServiceDistribution::exponential(1.0).unwrap();
        assert!(ks_law_experiment(&d, 50, 200, 1).is_err());
        assert!(ks_law_experiment(&d, 200, 50, 1).is_err());
    }
}
