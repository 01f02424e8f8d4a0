//! End-to-end checks of the binary: instance generation round trips, CSV
//! schema stability, config-file precedence, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use approxgrad::linalg::full_eig;
use approxgrad::problems::{load_instance, save_instance, Instance};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_approxgrad"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn gen_round_trips_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a");
    let out = run(&[
        "gen", "--family", "uniform", "--n", "20", "--m", "10", "--seed", "5", "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    // reload through the library and re-save: every file must be identical
    let inst = load_instance(&first).unwrap();
    let second = tmp.path().join("b");
    save_instance(&inst, &second).unwrap();
    assert_eq!(read_dir_sorted(&first), read_dir_sorted(&second));
}

#[test]
fn distinct_seeds_give_distinct_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for seed in ["1", "2"] {
        let dir = tmp.path().join(seed);
        let out = run(&[
            "gen", "--family", "gaussian", "--n", "15", "--m", "6", "--seed", seed, "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let text = stdout(&out);
        let hash = text.split("hash=").nth(1).unwrap().split_whitespace().next().unwrap();
        hashes.push(hash.to_string());
    }
    assert_ne!(hashes[0], hashes[1]);
}

#[test]
fn spike_family_has_eigenvalue_five() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("spike");
    let out = run(&[
        "gen", "--family", "uniform-spike", "--n", "30", "--m", "8", "--seed", "9", "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let Instance::MaxEig(inst) = load_instance(&dir).unwrap() else {
        panic!("expected maxeig instance");
    };
    let top = full_eig(&inst.c).unwrap().lambda[0];
    assert!((top - 5.0).abs() < 1e-8, "lambda_max = {top}");
}

#[test]
fn solve_csv_schema_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    assert!(run(&[
        "gen", "--family", "gaussian", "--n", "25", "--m", "10", "--seed", "4", "--out",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    let csv = tmp.path().join("run.csv");
    let out = run(&[
        "solve", "--instance", dir.to_str().unwrap(), "--eps", "0.3", "--oracle", "partial",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,wall_seconds,gap,value_estimate,m_used,pct_eigs,delta_cert,eig_gap"
    );
    // parse every row and re-serialize: shortest round-trip formatting makes
    // the reconstruction byte-identical
    let mut rebuilt = String::from("k,wall_seconds,gap,value_estimate,m_used,pct_eigs,delta_cert,eig_gap\n");
    let mut prev_k = None;
    let mut prev_t = 0.0f64;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8, "row {line}");
        let k: usize = f[0].parse().unwrap();
        let t: f64 = f[1].parse().unwrap();
        let pct: f64 = f[5].parse().unwrap();
        assert!(prev_k.is_none_or(|p| k > p), "k not increasing");
        assert!(t >= prev_t, "wall_seconds decreased");
        assert!(pct > 0.0 && pct <= 1.0);
        prev_k = Some(k);
        prev_t = t;
        let nums: Vec<f64> = [1, 2, 3, 5, 6].iter().map(|&i| f[i].parse().unwrap()).collect();
        rebuilt.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            k, nums[0], nums[1], nums[2], f[4], nums[3], nums[4],
            if f[7].is_empty() {
                String::new()
            } else {
                f[7].parse::<f64>().unwrap().to_string()
            }
        ));
    }
    assert_eq!(text, rebuilt);
}

#[test]
fn oracle_both_writes_paired_csvs_with_matching_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    assert!(run(&[
        "gen", "--family", "uniform", "--n", "20", "--m", "8", "--seed", "11", "--out",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    let csv = tmp.path().join("run.csv");
    let eps = 0.3;
    let out = run(&[
        "solve", "--instance", dir.to_str().unwrap(), "--eps", "0.3", "--oracle", "both",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(tmp.path().join("run.exact.csv").exists());
    assert!(tmp.path().join("run.partial.csv").exists());
    let text = stdout(&out);
    let gaps: Vec<f64> = text
        .lines()
        .map(|l| {
            l.split("final_gap=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
        })
        .collect();
    assert_eq!(gaps.len(), 2);
    assert!((gaps[0] - gaps[1]).abs() <= 3.0 * eps / 6.0 + 1e-6);
}

#[test]
fn huge_eps_terminates_immediately() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    assert!(run(&[
        "gen", "--family", "gaussian", "--n", "10", "--m", "4", "--seed", "2", "--out",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    let csv = tmp.path().join("run.csv");
    let out = run(&[
        "solve", "--instance", dir.to_str().unwrap(), "--eps", "0.3", "--gap", "1e3",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let iters: usize = stdout(&out)
        .split("iterations=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(iters <= 1, "iterations = {iters}");
}

#[test]
fn config_file_fills_flags_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("run.csv");
    let cfg = tmp.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "problem=maxeig\nfamily=uniform\nseed=6\nn=15\nm=6\neps=10\nout={}\n",
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    // config alone runs (eps=10 is a very loose target)
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    // the flag overrides the file value: a tighter eps forces more iterations
    let loose: usize = stdout(&out)
        .split("iterations=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    let out2 = run(&["solve", "--config", cfg.to_str().unwrap(), "--eps", "0.1"]);
    assert!(out2.status.success());
    let tight: usize = stdout(&out2)
        .split("iterations=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(tight > loose, "tight={tight} loose={loose}");
}

#[test]
fn predict_prints_counts_and_empirical_mean() {
    let out = run(&["predict", "--n", "5000", "--eps", "1e-2", "--gamma", "1e-6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let semi: f64 = text
        .lines()
        .find(|l| l.starts_with("semicircle"))
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((2.0..=2.6).contains(&semi), "semicircle count {semi}");
    assert!(text.lines().any(|l| l.starts_with("marchenko")));

    // gamma close to 1 leaves almost no window
    let out = run(&["predict", "--n", "5000", "--eps", "1e-2", "--gamma", "0.99"]);
    let text = stdout(&out);
    let semi: f64 = text
        .lines()
        .find(|l| l.starts_with("semicircle"))
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(semi < 0.05, "expected near-zero count, got {semi}");

    // empirical comparison path
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("r.csv");
    std::fs::write(
        &csv,
        "k,wall_seconds,gap,value_estimate,m_used,pct_eigs,delta_cert,eig_gap\n\
         0,0.1,1.0,2.0,3,0.06,0.01,\n1,0.2,0.5,1.9,5,0.1,0.01,0.3\n",
    )
    .unwrap();
    let out = run(&[
        "predict", "--n", "50", "--eps", "1e-2", "--gamma", "1e-6", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("empirical mean m_used = 4.0000"));
}

#[test]
fn exit_codes_distinguish_usage_and_runtime_errors() {
    // missing required flags -> usage
    let out = run(&["solve"]);
    assert_eq!(out.status.code(), Some(2));
    // bad oracle mode -> usage
    let out = run(&["solve", "--eps", "0.1", "--oracle", "sideways", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown config key -> usage
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    std::fs::write(&cfg, "volume=11\n").unwrap();
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // nonexistent instance dir -> runtime
    let out = run(&[
        "solve", "--instance", "/nonexistent-dir", "--eps", "0.1", "--out", "/tmp/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_small_grid_reports_speedup() {
    let out = run(&[
        "bench", "--sizes", "60", "--kinds", "spiked", "--eps", "2.0", "--seed", "3",
        "--max-iter", "40",
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let speed_line = text.lines().find(|l| l.contains("speedup")).unwrap();
    let ratio: f64 = speed_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(ratio > 1.0, "speedup {ratio}");
}
