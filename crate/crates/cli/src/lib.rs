//! Argument definitions, command dispatch and output rendering for `lossq`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lossq_core::reproduce::{BUFFER, N_OBS};
use lossq_core::{
    draw_samples, interval_table, moments_empirical, run_reproduce, simulate_busy_period,
    width_for, Characteristic, CharacteristicSpec, EmpiricalCdf, IntervalTable, LimitLaw, Method,
    MomentSource, MomentVector, Reproduction, Sample, ServiceDistribution,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lossq_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 when the numbers admit no output, 1 for every other failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(lossq_core::Error::Degenerate(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lossq",
    version,
    about = "Point and interval estimates for single-server loss queues"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantile of a limiting law, optionally as a bound width for N observations.
    Quantile(QuantileArgs),
    /// Poisson-weighted moments of a sample file.
    Moments(MomentsArgs),
    /// Point estimates and confidence bounds from a sample file.
    Estimate(EstimateArgs),
    /// Monte Carlo busy-period statistics, optionally writing a sample file.
    Simulate(SimulateArgs),
    /// Rebuild the reference M/M/1/4 tables at N = 10000.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    /// Poisson arrivals, general service (samples are service times).
    Mg1n,
    /// General arrivals, exponential service (samples are interarrival times).
    Gim1n,
}

#[derive(Debug, Clone, Args)]
pub struct QuantileArgs {
    /// two-sided, one-sided or one-sided-sum.
    #[arg(long)]
    pub law: LimitLaw,
    /// Confidence probability in (0, 1).
    #[arg(long)]
    pub p: f64,
    /// Sample size; prints the width z/sqrt(N) as well.
    #[arg(long = "n-obs")]
    pub n_obs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Rate α of the Poisson weights.
    #[arg(long)]
    pub rate: f64,
    /// Highest moment index.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub system: System,
    /// busy, served, lost (mg1n) or loss-prob (gim1n). Defaults to busy or loss-prob.
    #[arg(long)]
    pub characteristic: Option<Characteristic>,
    /// Arrival rate λ (mg1n).
    #[arg(long = "arrival-rate")]
    pub arrival_rate: Option<f64>,
    /// Mean service time b (mg1n).
    #[arg(long = "mean-service")]
    pub mean_service: Option<f64>,
    /// Service rate μ (gim1n).
    #[arg(long = "service-rate")]
    pub service_rate: Option<f64>,
    /// Largest buffer size n in the table.
    #[arg(long, default_value_t = 4)]
    pub buffer: usize,
    /// File with one positive observation per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// two-sided (δ_N) or one-sided (δ_N^- and δ_N^+).
    #[arg(long, default_value = "two-sided")]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// exp:<rate>, erlang:<k>:<rate>, det:<v> or uniform:<a>:<b>.
    #[arg(long)]
    pub dist: ServiceDistribution,
    #[arg(long = "arrival-rate", default_value_t = 1.0)]
    pub arrival_rate: f64,
    #[arg(long, default_value_t = 4)]
    pub buffer: usize,
    #[arg(long, default_value_t = 100_000)]
    pub replications: u64,
    #[arg(long, env = "LOSSQ_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also write `--samples` draws from the distribution to this file.
    #[arg(long = "emit-samples")]
    pub emit_samples: Option<PathBuf>,
    #[arg(long, default_value_t = N_OBS)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long = "n-obs", default_value_t = N_OBS)]
    pub n_obs: usize,
    #[arg(long, env = "LOSSQ_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Use exact exponential moments instead of a simulated sample.
    #[arg(long, conflicts_with = "fixture")]
    pub theoretical: bool,
    /// `paper` substitutes the published reference moments and widths.
    #[arg(long, value_parser = ["paper"])]
    pub fixture: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Quantile(a) => run_quantile(a, out),
        Command::Moments(a) => run_moments(a, out),
        Command::Estimate(a) => {
            let sample = Sample::from_path(&a.input)?;
            run_estimate(a, &sample, out)
        }
        Command::Simulate(a) => run_simulate(a, out),
        Command::Reproduce(a) => run_reproduce_cmd(a, out),
    }
}

fn run_quantile(a: &QuantileArgs, out: &mut dyn Write) -> Result<(), CliError> {
    match a.n_obs {
        Some(n) => {
            let spec = width_for(a.law, a.p, n)?;
            writeln!(out, "z = {:.6}", spec.z)?;
            writeln!(out, "width = {:.6} (N = {n})", spec.width)?;
        }
        None => writeln!(out, "z = {:.6}", lossq_core::quantile(a.law, a.p)?)?,
    }
    Ok(())
}

fn run_moments(a: &MomentsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ecdf = EmpiricalCdf::from(Sample::from_path(&a.input)?);
    let m = moments_empirical(&ecdf, a.rate, a.order)?;
    write_moments(&m, ecdf.n_obs(), a.format, out)
}

fn write_moments(
    m: &MomentVector,
    n_obs: usize,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format {
        Format::Table => {
            writeln!(out, "# rate = {}, N = {n_obs}", m.rate())?;
            writeln!(out, "{:>3}  {:>10}", "i", "r_i")?;
            for (i, r) in m.values().iter().enumerate() {
                writeln!(out, "{i:>3}  {r:>10.6}")?;
            }
        }
        Format::Csv => {
            writeln!(out, "i,r_i")?;
            for (i, r) in m.values().iter().enumerate() {
                writeln!(out, "{i},{r}")?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, m)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Resolves the characteristic and checks that the rates it needs are present.
pub fn characteristic_spec(a: &EstimateArgs) -> Result<CharacteristicSpec, CliError> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| {
            CliError::Usage(format!(
                "missing --{flag}: it is required for --system {}",
                system_name(a.system)
            ))
        })
    };
    match a.system {
        System::Mg1n => {
            let kind = a.characteristic.unwrap_or(Characteristic::BusyPeriod);
            if kind == Characteristic::LossProbability {
                return Err(CliError::Usage(
                    "--characteristic loss-prob needs --system gim1n".into(),
                ));
            }
            let lambda = need(a.arrival_rate, "arrival-rate")?;
            let b = need(a.mean_service, "mean-service")?;
            Ok(CharacteristicSpec::new(kind, lambda, Some(b))?)
        }
        System::Gim1n => {
            let kind = a.characteristic.unwrap_or(Characteristic::LossProbability);
            if kind != Characteristic::LossProbability {
                return Err(CliError::Usage(format!(
                    "--characteristic {kind} needs --system mg1n"
                )));
            }
            let mu = need(a.service_rate, "service-rate")?;
            Ok(CharacteristicSpec::loss_probability(mu)?)
        }
    }
}

fn system_name(s: System) -> &'static str {
    match s {
        System::Mg1n => "mg1n",
        System::Gim1n => "gim1n",
    }
}

#[derive(Debug, Serialize)]
struct RowReport {
    n: usize,
    lower: f64,
    point: f64,
    upper: f64,
    flags: String,
}

#[derive(Debug, Serialize)]
struct EstimateReport<'a> {
    system: System,
    characteristic: Characteristic,
    method: Method,
    n_obs: usize,
    confidence: f64,
    epsilon: f64,
    gamma: Option<f64>,
    moments: &'a [f64],
    rows: Vec<RowReport>,
}

/// Estimation from an already loaded sample; `estimate` uses this after
/// reading `--input`.
pub fn run_estimate(
    a: &EstimateArgs,
    sample: &Sample,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if a.buffer == 0 {
        return Err(CliError::Usage("--buffer must be at least 1".into()));
    }
    let spec = characteristic_spec(a)?;
    let ecdf = EmpiricalCdf::from(sample.clone());
    let order = a.buffer.max(1);
    let m = moments_empirical(&ecdf, spec.rate(), order)?;
    let table = interval_table(&spec, &m, a.confidence, ecdf.n_obs(), a.method, a.buffer)?;
    let report = EstimateReport {
        system: a.system,
        characteristic: spec.kind(),
        method: a.method,
        n_obs: ecdf.n_obs(),
        confidence: a.confidence,
        epsilon: table.widths.epsilon,
        gamma: table.gamma.map(|g| g.width),
        moments: m.values(),
        rows: table
            .rows
            .iter()
            .map(|r| RowReport {
                n: r.n,
                lower: r.lower,
                point: r.point,
                upper: r.upper,
                flags: r.flags.labels(),
            })
            .collect(),
    };
    match a.format {
        Format::Table => {
            let mut head = format!(
                "# {} ({}), N = {}, P = {}, {} statistic, eps = {:.6}",
                spec.kind(),
                system_name(a.system),
                report.n_obs,
                a.confidence,
                a.method,
                report.epsilon
            );
            if let Some(g) = report.gamma {
                head.push_str(&format!(", gamma = {g:.6}"));
            }
            writeln!(out, "{head}")?;
            write_rows(&report.rows, out)?;
        }
        Format::Csv => {
            writeln!(out, "n,lower,point,upper,flags")?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.n, r.lower, r.point, r.upper, r.flags
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn write_rows(rows: &[RowReport], out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "{:>3}  {:>12}  {:>12}  {:>12}  flags",
        "n", "estimate", "lower", "upper"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:>3}  {:>12.6}  {:>12.6}  {:>12.6}  {}",
            r.n, r.point, r.lower, r.upper, r.flags
        )?;
    }
    Ok(())
}

fn run_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = &a.emit_samples {
        let sample = draw_samples(&a.dist, a.samples, a.seed)?;
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        sample.write_to(&mut w)?;
        w.flush()?;
    }
    let result = simulate_busy_period(a.arrival_rate, &a.dist, a.buffer, a.replications, a.seed)?;
    serde_json::to_writer_pretty(&mut *out, &result)?;
    writeln!(out)?;
    Ok(())
}

fn run_reproduce_cmd(a: &ReproduceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let source = if a.fixture.is_some() {
        MomentSource::Reference
    } else if a.theoretical {
        MomentSource::Theoretical
    } else {
        MomentSource::Simulated
    };
    let rep = run_reproduce(source, a.n_obs, a.seed)?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &rep)?;
            writeln!(out)?;
        }
        Format::Csv => write_reproduction_csv(&rep, out)?,
        Format::Table => write_reproduction_table(&rep, out)?,
    }
    Ok(())
}

fn source_label(rep: &Reproduction) -> String {
    match rep.source {
        MomentSource::Theoretical => "exact exponential moments".into(),
        MomentSource::Reference => "published reference moments".into(),
        MomentSource::Simulated => format!(
            "simulated Exp(1) sample, N = {}, seed = {}, rng = {}",
            rep.n_obs,
            rep.seed.unwrap_or_default(),
            rep.rng.as_deref().unwrap_or("")
        ),
    }
}

fn write_reproduction_table(rep: &Reproduction, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "# M/M/1/{BUFFER}, λ = μ = 1, {}", source_label(rep))?;
    writeln!(out)?;
    writeln!(out, "Poisson-weighted moments")?;
    writeln!(out, "{:>3}  {:>12}  {:>12}", "i", "theoretical", "used")?;
    for i in 0..=BUFFER {
        writeln!(
            out,
            "{i:>3}  {:>12.6}  {:>12.6}",
            rep.theoretical_moments[i], rep.moments[i]
        )?;
    }
    for (title, table) in [
        ("Busy period, two-sided statistic", &rep.two_sided),
        ("Busy period, one-sided statistics", &rep.one_sided),
    ] {
        writeln!(out)?;
        writeln!(out, "{title} ({})", widths_label(table))?;
        writeln!(
            out,
            "{:>3}  {:>12}  {:>12}  {:>12}  {:>12}  flags",
            "n", "E T_n", "estimate", "lower", "upper"
        )?;
        for row in &table.rows {
            writeln!(
                out,
                "{:>3}  {:>12.6}  {:>12.6}  {:>12.6}  {:>12.6}  {}",
                row.n,
                rep.theoretical_busy[row.n],
                row.point,
                row.lower,
                row.upper,
                row.flags.labels()
            )?;
        }
    }
    Ok(())
}

fn widths_label(t: &IntervalTable) -> String {
    match t.method {
        Method::TwoSidedStatistic => format!("eps = {:.6}", t.widths.epsilon),
        Method::OneSidedStatistics => {
            format!(
                "eps = {:.6}, gamma = {:.6}",
                t.widths.epsilon, t.widths.higher
            )
        }
    }
}

fn write_reproduction_csv(rep: &Reproduction, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "table,n,expected,estimate,lower,upper,flags")?;
    for i in 0..=BUFFER {
        writeln!(
            out,
            "moments,{i},{},{},,,",
            rep.theoretical_moments[i], rep.moments[i]
        )?;
    }
    for (name, table) in [("two-sided", &rep.two_sided), ("one-sided", &rep.one_sided)] {
        for row in &table.rows {
            writeln!(
                out,
                "{name},{},{},{},{},{},{}",
                row.n,
                rep.theoretical_busy[row.n],
                row.point,
                row.lower,
                row.upper,
                row.flags.labels()
            )?;
        }
    }
    Ok(())
}
