use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use lossq_cli::{run_estimate, Cli};
use lossq_core::{draw_samples, ServiceDistribution};

fn lossq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lossq"))
        .args(args)
        .env_remove("LOSSQ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn emit(dir: &Path, dist: &str, n: usize, seed: u64) -> String {
    let path = dir.join(format!("{}-{seed}.txt", dist.replace(':', "_")));
    let p = path.to_str().unwrap().to_string();
    let o = lossq(&[
        "simulate",
        "--dist",
        dist,
        "--replications",
        "100",
        "--seed",
        &seed.to_string(),
        "--emit-samples",
        &p,
        "--samples",
        &n.to_string(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn emitted_samples_reproduce_in_process_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let path = emit(dir.path(), "exp:1", 10_000, 42);
    let args = [
        "lossq",
        "estimate",
        "--system",
        "mg1n",
        "--characteristic",
        "busy",
        "--arrival-rate",
        "1",
        "--mean-service",
        "1",
        "--input",
        &path,
    ];
    let from_file = lossq(&args[1..]);
    assert!(from_file.status.success());

    let cli = Cli::parse_from(args);
    let lossq_cli::Command::Estimate(est) = &cli.command else {
        unreachable!()
    };
    let sample = draw_samples(&ServiceDistribution::exponential(1.0).unwrap(), 10_000, 42).unwrap();
    let mut buf = Vec::new();
    run_estimate(est, &sample, &mut buf).unwrap();
    assert_eq!(from_file.stdout, buf);
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = emit(dir.path(), "erlang:2:2", 5_000, 7);
    let base = [
        "estimate",
        "--system",
        "mg1n",
        "--arrival-rate",
        "0.8",
        "--mean-service",
        "1",
        "--method",
        "one-sided",
        "--input",
        &path,
        "--format",
    ];
    let csv = stdout(&lossq(&[&base[..], &["csv"]].concat()));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&lossq(&[&base[..], &["json"]].concat()))).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), rows.len());
    for (line, row) in lines.iter().zip(rows) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<u64>().unwrap(), row["n"].as_u64().unwrap());
        for (j, key) in ["lower", "point", "upper"].iter().enumerate() {
            assert_eq!(
                f[j + 1].parse::<f64>().unwrap(),
                row[key].as_f64().unwrap(),
                "{key}"
            );
        }
        assert_eq!(f[4], row["flags"].as_str().unwrap());
    }
}

#[test]
fn missing_mean_service_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = emit(dir.path(), "exp:1", 100, 1);
    let o = lossq(&[
        "estimate",
        "--system",
        "mg1n",
        "--arrival-rate",
        "1",
        "--input",
        &path,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mean-service"));
}

#[test]
fn bad_sample_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "1.0\n\n2.5\nabc\n").unwrap();
    let o = lossq(&["moments", "--input", path.to_str().unwrap(), "--rate", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn loss_probability_near_birth_death_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = emit(dir.path(), "exp:1", 10_000, 9);
    let o = lossq(&[
        "estimate",
        "--system",
        "gim1n",
        "--service-rate",
        "1",
        "--buffer",
        "3",
        "--input",
        &path,
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = v["rows"][3]["point"].as_f64().unwrap();
    assert!((p - 0.25).abs() < 0.02, "{p}");
}

#[test]
fn degenerate_loss_probability_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // Interarrival times far longer than service: r_0 is essentially zero.
    let path = dir.path().join("slow.txt");
    std::fs::write(&path, "900\n1000\n1100\n").unwrap();
    let o = lossq(&[
        "estimate",
        "--system",
        "gim1n",
        "--service-rate",
        "1",
        "--input",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn reproduce_fixture_tables() {
    let o = lossq(&["reproduce", "--fixture", "paper", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = |t: &str, n: usize, k: &str| v[t]["rows"][n][k].as_f64().unwrap();
    assert!((row("two_sided", 1, "lower") - 1.935434).abs() < 1e-5);
    assert!((row("two_sided", 1, "upper") - 2.042817).abs() < 1e-5);
    assert!((row("one_sided", 3, "lower") - 3.327933).abs() < 1e-3);
    assert!((row("one_sided", 3, "upper") - 4.633603).abs() < 1e-3);
    // Row 4 from the printed moments.
    assert!((row("two_sided", 4, "point") - 4.917924).abs() < 1e-6);
    assert!((row("two_sided", 4, "lower") - 3.194650).abs() < 1e-6);
    assert!((row("two_sided", 4, "upper") - 6.938352).abs() < 1e-6);
}

#[test]
fn reproduce_theoretical_moments_exact() {
    let o = lossq(&["reproduce", "--theoretical", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let used: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("moments,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(used, vec![0.5, 0.25, 0.125, 0.0625, 0.03125]);
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_lossq"));
        c.args(["simulate", "--dist", "exp:1", "--replications", "500"])
            .args(extra);
        match env {
            Some(s) => c.env("LOSSQ_SEED", s),
            None => c.env_remove("LOSSQ_SEED"),
        };
        String::from_utf8(c.output().unwrap().stdout).unwrap()
    };
    assert_eq!(run(Some("77"), &[]), run(None, &["--seed", "77"]));
    assert!(run(Some("77"), &[]).contains("ChaCha8Rng"));
}

#[test]
fn quantile_prints_width() {
    let o = lossq(&[
        "quantile",
        "--law",
        "two-sided",
        "--p",
        "0.95",
        "--n-obs",
        "10000",
    ]);
    assert_eq!(stdout(&o), "z = 1.358099\nwidth = 0.013581 (N = 10000)\n");
}
