//! Empirical distribution functions and the Kolmogorov deviation statistics.
//!
//! An [`EmpiricalCdf`] places mass `1/N` on each observation and is
//! right-continuous. Against a continuous model CDF the one-sided suprema
//! are attained at the order statistics, so [`ks_statistics`] enumerates
//! the jump points instead of scanning a grid.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw observations of an input characteristic (service or interarrival
/// times). Every value is strictly positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "sample must contain at least one observation",
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::invalid(format!(
                "observation {} is {v}; all observations must be positive and finite",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    /// Parses one positive decimal per line. Blank lines are skipped; any
    /// other unparseable or nonpositive line is reported by its 1-based number.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::invalid(format!("read failure: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            match trimmed.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => values.push(v),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        content: trimmed.to_string(),
                    })
                }
            }
        }
        Self::new(values)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Writes the sample in the one-value-per-line format accepted by
    /// [`Sample::from_reader`]. Values use the shortest round-trip
    /// representation, so reading the output back yields identical bits.
    pub fn write_to<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_obs(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Right-continuous step distribution function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &Sample) -> Self {
        let mut sorted = sample.values.clone();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn n_obs(&self) -> usize {
        self.sorted.len()
    }

    /// Fraction of observations `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let below_or_at = self.sorted.partition_point(|&v| v <= x);
        below_or_at as f64 / self.sorted.len() as f64
    }
}

impl From<Sample> for EmpiricalCdf {
    fn from(sample: Sample) -> Self {
        let mut sorted = sample.values;
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }
}

pub fn build_ecdf(sample: &Sample) -> EmpiricalCdf {
    EmpiricalCdf::new(sample)
}

/// Sup-deviations between a model CDF `F` and an empirical CDF `F_N`.
///
/// `one_sided_minus` is `sup (F - F_N)`, `one_sided_plus` is `sup (F_N - F)`
/// and `two_sided` is the larger of the two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsStatistics {
    pub two_sided: f64,
    pub one_sided_minus: f64,
    pub one_sided_plus: f64,
}

impl KsStatistics {
    pub fn scaled(&self, n_obs: usize) -> Self {
        let s = (n_obs as f64).sqrt();
        Self {
            two_sided: self.two_sided * s,
            one_sided_minus: self.one_sided_minus * s,
            one_sided_plus: self.one_sided_plus * s,
        }
    }
}

/// Kolmogorov statistics of `ecdf` against a continuous `model_cdf`.
///
/// Tied observations form one stacked jump; the gap above it is measured
/// with the count after the last tied point and the gap below it with the
/// count before the first.
pub fn ks_statistics<F>(ecdf: &EmpiricalCdf, model_cdf: F) -> Result<KsStatistics>
where
    F: Fn(f64) -> f64,
{
    let xs = &ecdf.sorted;
    let n = xs.len() as f64;
    let mut plus = 0.0_f64;
    let mut minus = 0.0_f64;

    let mut start = 0;
    while start < xs.len() {
        let x = xs[start];
        let mut end = start + 1;
        while end < xs.len() && xs[end] == x {
            end += 1;
        }
        let f = model_cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::NumericDomain(format!(
                "model CDF returned {f} at x = {x}; expected a value in [0, 1]"
            )));
        }
        plus = plus.max(end as f64 / n - f);
        minus = minus.max(f - start as f64 / n);
        start = end;
    }

    Ok(KsStatistics {
        two_sided: plus.max(minus),
        one_sided_minus: minus,
        one_sided_plus: plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ecdf(values: &[f64]) -> EmpiricalCdf {
        EmpiricalCdf::new(&Sample::new(values.to_vec()).unwrap())
    }

    #[test]
    fn single_point_step() {
        let e = ecdf(&[1.0]);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(1.0), 1.0);
        assert_eq!(e.eval(7.0), 1.0);
    }

    #[test]
    fn ties_stack() {
        let e = ecdf(&[2.0, 1.0, 3.0, 2.0]);
        assert_eq!(e.sorted_values(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(1.999), 0.25);
    }

    #[test]
    fn rejects_empty_and_nonpositive() {
        assert!(matches!(Sample::new(vec![]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            Sample::new(vec![1.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            Sample::new(vec![-2.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            Sample::new(vec![f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn single_point_against_uniform() {
        let s = ks_statistics(&ecdf(&[0.5]), |x: f64| x.clamp(0.0, 1.0)).unwrap();
        assert_eq!(s.one_sided_plus, 0.5);
        assert_eq!(s.one_sided_minus, 0.5);
        assert_eq!(s.two_sided, 0.5);
    }

    #[test]
    fn midpoint_quantiles_give_half_step() {
        let n = 10;
        let vals: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        let s = ks_statistics(&ecdf(&vals), |x: f64| x.clamp(0.0, 1.0)).unwrap();
        assert!((s.two_sided - 0.05).abs() < 1e-15);
        assert!((s.one_sided_plus - 0.05).abs() < 1e-15);
        assert!((s.one_sided_minus - 0.05).abs() < 1e-15);
    }

    #[test]
    fn tied_jump_uses_counts_on_both_sides() {
        // F(x) = x on [0,1]; sample {0.5, 0.5}: F_N jumps 0 -> 1 at 0.5.
        let s = ks_statistics(&ecdf(&[0.5, 0.5]), |x: f64| x.clamp(0.0, 1.0)).unwrap();
        assert_eq!(s.one_sided_plus, 0.5);
        assert_eq!(s.one_sided_minus, 0.5);
    }

    #[test]
    fn model_out_of_range_is_an_error() {
        let err = ks_statistics(&ecdf(&[1.0, 2.0]), |x| x).unwrap_err();
        assert!(matches!(err, Error::NumericDomain(_)));
    }

    #[test]
    fn parse_reports_line_number() {
        let text = "1.5\n\n2.0\nabc\n";
        let err = Sample::from_reader(text.as_bytes()).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 4,
                content: "abc".into()
            }
        );
        let ok = Sample::from_reader("  0.25 \n\n3\n".as_bytes()).unwrap();
        assert_eq!(ok.values(), &[0.25, 3.0]);
    }

    #[test]
    fn write_then_read_is_exact() {
        let s = Sample::new(vec![0.1, 1.0 / 3.0, 2.5e-7, 123456.789]).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(Sample::from_reader(buf.as_slice()).unwrap(), s);
    }
}
