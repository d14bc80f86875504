//! The reference numerical example: M/M/1/n busy periods with
//! `λ = μ = 1`, `n = 4`, `P = 0.95` and `N = 10,000` observations.

use serde::{Deserialize, Serialize};

use crate::ecdf::EmpiricalCdf;
use crate::error::Result;
use crate::intervals::{interval_table, interval_table_with_widths, IntervalTable, Method, Widths};
use crate::moments::{moments_empirical, moments_exponential, MomentVector};
use crate::recursion::{estimate_characteristic, CharacteristicSpec};
use crate::simulate::{draw_samples, ServiceDistribution, RNG_NAME};

pub const ARRIVAL_RATE: f64 = 1.0;
pub const SERVICE_RATE: f64 = 1.0;
pub const BUFFER: usize = 4;
pub const CONFIDENCE: f64 = 0.95;
pub const N_OBS: usize = 10_000;

/// Empirical moments `r_0..r_4` of the reference sample, as printed to four
/// decimals. The sample itself was never released.
pub const REFERENCE_MOMENTS: [f64; 5] = [0.5031, 0.2488, 0.1234, 0.0615, 0.0308];
/// Printed `ε` for the two-sided statistic.
pub const REFERENCE_EPS_TWO_SIDED: f64 = 0.013581;
/// Printed `ε` for the one-sided statistics.
pub const REFERENCE_EPS_ONE_SIDED: f64 = 0.01224;
/// Printed `γ` for the sum of the one-sided statistics.
pub const REFERENCE_GAMMA: f64 = 0.0208;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    /// Closed-form moments of the true exponential law.
    Theoretical,
    /// Moments of a freshly simulated exponential sample.
    Simulated,
    /// The printed reference moments and widths.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub source: MomentSource,
    pub n_obs: usize,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    /// `r_i` of the exact exponential law.
    pub theoretical_moments: MomentVector,
    /// `E T_0..E T_4` from the exact moments.
    pub theoretical_busy: Vec<f64>,
    /// Moments feeding the estimators (equal to the theoretical ones in
    /// theoretical mode).
    pub moments: MomentVector,
    pub two_sided: IntervalTable,
    pub one_sided: IntervalTable,
}

fn busy_spec() -> Result<CharacteristicSpec> {
    CharacteristicSpec::busy_period(ARRIVAL_RATE, 1.0 / SERVICE_RATE)
}

/// Builds the three reference tables from the chosen moment source.
///
/// Theoretical and simulated modes solve the widths from `CONFIDENCE` and
/// `n_obs`; reference mode uses the printed moments and widths verbatim.
pub fn run_reproduce(source: MomentSource, n_obs: usize, seed: u64) -> Result<Reproduction> {
    let spec = busy_spec()?;
    let theoretical_moments = moments_exponential(ARRIVAL_RATE, SERVICE_RATE, BUFFER)?;
    let theoretical_busy =
        estimate_characteristic(&spec, &theoretical_moments, BUFFER)?.natural_values;

    let (moments, used_seed) = match source {
        MomentSource::Theoretical => (theoretical_moments.clone(), None),
        MomentSource::Reference => (
            MomentVector::new(ARRIVAL_RATE, REFERENCE_MOMENTS.to_vec())?,
            None,
        ),
        MomentSource::Simulated => {
            let dist = ServiceDistribution::exponential(SERVICE_RATE)?;
            let sample = draw_samples(&dist, n_obs, seed)?;
            let ecdf = EmpiricalCdf::from(sample);
            (moments_empirical(&ecdf, ARRIVAL_RATE, BUFFER)?, Some(seed))
        }
    };

    let (two_sided, one_sided, n_obs) = match source {
        MomentSource::Reference => (
            interval_table_with_widths(
                &spec,
                &moments,
                Method::TwoSidedStatistic,
                Widths::two_sided(REFERENCE_EPS_TWO_SIDED),
                BUFFER,
            )?,
            interval_table_with_widths(
                &spec,
                &moments,
                Method::OneSidedStatistics,
                Widths::one_sided(REFERENCE_EPS_ONE_SIDED, REFERENCE_GAMMA),
                BUFFER,
            )?,
            N_OBS,
        ),
        _ => (
            interval_table(
                &spec,
                &moments,
                CONFIDENCE,
                n_obs,
                Method::TwoSidedStatistic,
                BUFFER,
            )?,
            interval_table(
                &spec,
                &moments,
                CONFIDENCE,
                n_obs,
                Method::OneSidedStatistics,
                BUFFER,
            )?,
            n_obs,
        ),
    };

    Ok(Reproduction {
        source,
        n_obs,
        seed: used_seed,
        rng: used_seed.map(|_| RNG_NAME.to_string()),
        theoretical_moments,
        theoretical_busy,
        moments,
        two_sided,
        one_sided,
    })
}
