//! Benchmark harness: generate instances, run solves with exact or partial
//! eigendecomposition gradients, and emit per-iteration CSV plus summary
//! tables.
//!
//! Verbs: `solve`, `bench`, `predict`, `gen`. Every solve flag can also come
//! from a flat key=value config file (`--config`); explicit flags win.
//! Exit codes: 0 success (including budget exhaustion), 2 usage error,
//! 3 runtime failure.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use sha2::{Digest, Sha256};

use approxgrad::problems::{
    load_instance, save_instance, spiked_instance, Instance, MaxEigBallProblem, MaxEigInstance,
    SparsePcaProblem, SpcaInstance,
};
use approxgrad::problems::AffineOperator;
use approxgrad::randgen::{
    marchenko_fraction, sample_instance_matrices, semicircle_fraction, FamilyKind, SpectralFamily,
};
use approxgrad::solver::{
    HistoryRow, SmoothProblem, SolveOptions, SolveResult, SolveStatus, Solver, StepSchedule,
    StopRule,
};

const CSV_HEADER: &str = "k,wall_seconds,gap,value_estimate,m_used,pct_eigs,delta_cert,eig_gap";

#[derive(Parser)]
#[command(name = "approxgrad", about = "Smoothed spectral optimization benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write a per-iteration CSV plus a summary line.
    Solve(SolveArgs),
    /// Run an exact-vs-partial timing grid and print a summary table.
    Bench(BenchArgs),
    /// Print asymptotic eigenvalue-count predictions.
    Predict(PredictArgs),
    /// Generate an instance directory.
    Gen(GenArgs),
}

#[derive(Args, Default)]
struct SolveArgs {
    /// Flat key=value file supplying defaults for any solve flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem kind: maxeig | spca.
    #[arg(long)]
    problem: Option<String>,
    /// Load the instance from a directory instead of generating it.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Spectral family for generated maxeig instances:
    /// gaussian | wishart | uniform | uniform-spike.
    #[arg(long)]
    family: Option<String>,
    /// Generation seed (mandatory for generated instances).
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Number of dual variables (maxeig).
    #[arg(long)]
    m: Option<usize>,
    /// Ball radius (maxeig).
    #[arg(long)]
    beta: Option<f64>,
    /// Box radius / sparsity penalty (spca).
    #[arg(long)]
    rho: Option<f64>,
    /// Spike strength for generated spca instances.
    #[arg(long)]
    v: Option<f64>,
    /// Target precision.
    #[arg(long)]
    eps: Option<f64>,
    /// Oracle precision; defaults to eps/6.
    #[arg(long)]
    delta: Option<f64>,
    /// Oracle mode: exact | partial | both.
    #[arg(long)]
    oracle: Option<String>,
    /// Stop once the gap shrinks by this factor (default 1e-2).
    #[arg(long)]
    stop_factor: Option<f64>,
    /// Stop at this absolute gap instead of a reduction factor.
    #[arg(long)]
    gap: Option<f64>,
    /// Iteration budget override.
    #[arg(long)]
    max_iter: Option<usize>,
    /// CSV output path; `both` mode appends .exact.csv / .partial.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated matrix sizes (default 100,200,500).
    #[arg(long, default_value = "100,200,500")]
    sizes: String,
    /// Comma-separated instance kinds: spiked | wishart (default both).
    #[arg(long, default_value = "spiked,wishart")]
    kinds: String,
    #[arg(long, default_value_t = 2.0)]
    eps: f64,
    #[arg(long)]
    seed: u64,
    /// Gap-reduction stop factor shared by both oracles.
    #[arg(long, default_value_t = 1e-2)]
    stop_factor: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// RunRecord CSV; when given, also prints the empirical mean m_used.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// maxeig family (gaussian | wishart | uniform | uniform-spike) or
    /// `spiked` for an spca instance.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Number of dual variables (maxeig only).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    v: f64,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<approxgrad::error::Error> for CliError {
    fn from(e: approxgrad::error::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

// ---------- config resolution ----------

/// Merge a key=value config file into unset solve flags. Keys match the long
/// flag names.
fn apply_config(args: &mut SolveArgs, path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!("config line {} is not key=value", lineno + 1));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    fn parse<T: std::str::FromStr>(
        slot: &mut Option<T>,
        map: &HashMap<String, String>,
        key: &str,
    ) -> CliResult<()> {
        if slot.is_none() {
            if let Some(raw) = map.get(key) {
                *slot = Some(
                    raw.parse()
                        .map_err(|_| CliError::Usage(format!("bad config value for {key}: {raw}")))?,
                );
            }
        }
        Ok(())
    }
    parse(&mut args.problem, &map, "problem")?;
    parse(&mut args.instance, &map, "instance")?;
    parse(&mut args.family, &map, "family")?;
    parse(&mut args.seed, &map, "seed")?;
    parse(&mut args.n, &map, "n")?;
    parse(&mut args.m, &map, "m")?;
    parse(&mut args.beta, &map, "beta")?;
    parse(&mut args.rho, &map, "rho")?;
    parse(&mut args.v, &map, "v")?;
    parse(&mut args.eps, &map, "eps")?;
    parse(&mut args.delta, &map, "delta")?;
    parse(&mut args.oracle, &map, "oracle")?;
    parse(&mut args.stop_factor, &map, "stop_factor")?;
    parse(&mut args.gap, &map, "gap")?;
    parse(&mut args.max_iter, &map, "max_iter")?;
    parse(&mut args.out, &map, "out")?;
    let known = [
        "problem", "instance", "family", "seed", "n", "m", "beta", "rho", "v", "eps", "delta",
        "oracle", "stop_factor", "gap", "max_iter", "out",
    ];
    for k in map.keys() {
        if !known.contains(&k.as_str()) {
            return usage(format!("unknown config key: {k}"));
        }
    }
    Ok(())
}

// ---------- instance handling ----------

/// Content digest of an instance for reproducibility audits: hashes the kind,
/// scalars, and every entry in shortest round-trip decimal form.
fn instance_hash(inst: &Instance) -> String {
    let mut h = Sha256::new();
    let mut feed = |s: &str| h.update(s.as_bytes());
    match inst {
        Instance::MaxEig(i) => {
            feed(&format!("maxeig n={} m={} beta={} eps={}\n", i.c.n(), i.components.len(), i.beta, i.eps));
            let mut buf = String::new();
            for a in &i.components {
                for e in a.matrix().iter() {
                    write!(buf, "{e} ").unwrap();
                }
            }
            for e in i.c.matrix().iter() {
                write!(buf, "{e} ").unwrap();
            }
            for e in i.b.iter() {
                write!(buf, "{e} ").unwrap();
            }
            feed(&buf);
        }
        Instance::Spca(i) => {
            feed(&format!("spca n={} rho={} eps={}\n", i.c.n(), i.rho, i.eps));
            let mut buf = String::new();
            for e in i.c.matrix().iter() {
                write!(buf, "{e} ").unwrap();
            }
            feed(&buf);
        }
    }
    hex::encode(&h.finalize()[..8])
}

fn build_maxeig_instance(args: &SolveArgs, eps: f64) -> CliResult<Instance> {
    let n = args.n.ok_or(CliError::Usage("--n required for generated instances".into()))?;
    let m = args.m.ok_or(CliError::Usage("--m required for maxeig instances".into()))?;
    let seed = args.seed.ok_or(CliError::Usage("--seed required for generated instances".into()))?;
    let fam_name = args.family.as_deref().unwrap_or("gaussian");
    let kind = FamilyKind::parse(fam_name)
        .ok_or(CliError::Usage(format!("unknown family: {fam_name}")))?;
    let family = SpectralFamily::new(kind, n, 1.0)?;
    let (components, c) = sample_instance_matrices(&family, m, seed)?;
    Ok(Instance::MaxEig(MaxEigInstance {
        components,
        c,
        b: DVector::zeros(m),
        beta: args.beta.unwrap_or(1.0),
        eps,
        seed,
        family: Some(kind.name().to_string()),
    }))
}

fn build_spca_instance(args: &SolveArgs, eps: f64) -> CliResult<Instance> {
    let n = args.n.ok_or(CliError::Usage("--n required for generated instances".into()))?;
    let seed = args.seed.ok_or(CliError::Usage("--seed required for generated instances".into()))?;
    let v = args.v.unwrap_or(50.0);
    let rho = args.rho.ok_or(CliError::Usage("--rho required for spca".into()))?;
    let c = spiked_instance(n, v, seed)?;
    Ok(Instance::Spca(SpcaInstance { c, rho, eps, v, seed }))
}

/// A problem boxed behind the solver trait plus the pieces the harness needs.
struct Prepared {
    problem: Box<dyn SmoothProblem>,
    set: approxgrad::solver::FeasibleSet,
    lipschitz: f64,
    default_budget: usize,
}

fn prepare(inst: &Instance, eps: f64) -> CliResult<Prepared> {
    match inst {
        Instance::MaxEig(i) => {
            let op = AffineOperator::new(i.components.clone(), i.c.clone(), i.b.clone())?;
            let p = MaxEigBallProblem::new(op, i.beta, eps)?;
            let set = p.feasible_set();
            let l = p.cfg.lipschitz;
            let budget = p.global_budget(eps);
            Ok(Prepared { problem: Box::new(p), set, lipschitz: l, default_budget: budget })
        }
        Instance::Spca(i) => {
            let p = SparsePcaProblem::new(i.c.clone(), i.rho, eps)?;
            let set = p.feasible_set();
            let l = p.cfg.lipschitz;
            Ok(Prepared { problem: Box::new(p), set, lipschitz: l, default_budget: 5000 })
        }
    }
}

// ---------- CSV ----------

fn write_csv(path: &Path, rows: &[HistoryRow]) -> CliResult<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.k, r.wall_seconds, r.gap, r.value_estimate, r.m_used, r.pct_eigs, r.delta_cert
        )
        .unwrap();
        match r.eig_gap {
            Some(g) => writeln!(out, ",{g}").unwrap(),
            None => out.push_str(",\n"),
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn read_csv(path: &Path) -> CliResult<Vec<HistoryRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(CliError::Runtime(format!("{} is not a run CSV", path.display()))),
    }
    let mut rows = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(CliError::Runtime(format!("bad CSV row: {line}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| CliError::Runtime(format!("bad number: {s}")));
        rows.push(HistoryRow {
            k: f[0].parse().map_err(|_| CliError::Runtime(format!("bad k: {}", f[0])))?,
            wall_seconds: num(f[1])?,
            gap: num(f[2])?,
            value_estimate: num(f[3])?,
            m_used: f[4].parse().map_err(|_| CliError::Runtime(format!("bad m_used: {}", f[4])))?,
            pct_eigs: num(f[5])?,
            delta_cert: num(f[6])?,
            eig_gap: if f[7].is_empty() { None } else { Some(num(f[7])?) },
        });
    }
    Ok(rows)
}

// ---------- solve ----------

fn run_one(prep: &Prepared, delta: f64, stop: StopRule, max_iter: usize) -> CliResult<SolveResult> {
    let sched = StepSchedule::standard();
    let solver = Solver::new(&prep.set, &sched, prep.lipschitz);
    Ok(solver.solve(
        prep.problem.as_ref(),
        &SolveOptions { delta, stop, max_iter, record_iterates: false },
    )?)
}

fn summary_line(hash: &str, oracle: &str, res: &SolveResult, seconds: f64) -> String {
    let mean_pct = if res.history.is_empty() {
        0.0
    } else {
        res.history.iter().map(|r| r.pct_eigs).sum::<f64>() / res.history.len() as f64
    };
    format!(
        "summary instance={hash} oracle={oracle} iterations={} final_gap={} total_seconds={:.3} \
         mean_pct_eigs={:.4} budget_exhausted={}",
        res.iterations,
        res.final_gap,
        seconds,
        mean_pct,
        res.status == SolveStatus::BudgetExhausted
    )
}

fn cmd_solve(mut args: SolveArgs) -> CliResult<()> {
    if let Some(cfg) = args.config.clone() {
        apply_config(&mut args, &cfg)?;
    }
    let problem_kind = args.problem.clone().unwrap_or_else(|| "maxeig".into());
    let eps = match args.eps {
        Some(e) if e > 0.0 => e,
        Some(_) => return usage("--eps must be positive"),
        None => return usage("--eps is required"),
    };
    let delta = args.delta.unwrap_or(eps / 6.0);
    if delta < 0.0 {
        return usage("--delta must be nonnegative");
    }
    let oracle = args.oracle.clone().unwrap_or_else(|| "partial".into());
    if !["exact", "partial", "both"].contains(&oracle.as_str()) {
        return usage(format!("unknown oracle mode: {oracle}"));
    }
    let stop_factor = args.stop_factor.unwrap_or(1e-2);
    if !(stop_factor > 0.0 && stop_factor <= 1.0) {
        return usage("--stop-factor must be in (0, 1]");
    }
    let out = args.out.clone().ok_or(CliError::Usage("--out is required".into()))?;

    let inst = match &args.instance {
        Some(dir) => load_instance(dir)?,
        None => match problem_kind.as_str() {
            "maxeig" => build_maxeig_instance(&args, eps)?,
            "spca" => build_spca_instance(&args, eps)?,
            other => return usage(format!("unknown problem kind: {other}")),
        },
    };
    let hash = instance_hash(&inst);
    let prep = prepare(&inst, eps)?;
    let stop = match args.gap {
        Some(g) => StopRule::GapBelow(g),
        None => StopRule::GapReduction(stop_factor),
    };
    let max_iter = args.max_iter.unwrap_or(prep.default_budget);

    let modes: Vec<(&str, f64)> = match oracle.as_str() {
        "exact" => vec![("exact", 0.0)],
        "partial" => vec![("partial", delta)],
        _ => vec![("exact", 0.0), ("partial", delta)],
    };
    let split = modes.len() > 1;
    for (name, d) in modes {
        let t0 = Instant::now();
        let res = run_one(&prep, d, stop, max_iter)?;
        let secs = t0.elapsed().as_secs_f64();
        let path = if split {
            // out.csv -> out.exact.csv / out.partial.csv
            let mut s = out.with_extension("").into_os_string();
            s.push(format!(".{name}.csv"));
            PathBuf::from(s)
        } else {
            out.clone()
        };
        write_csv(&path, &res.history)?;
        println!("{}", summary_line(&hash, name, &res, secs));
    }
    Ok(())
}

// ---------- bench ----------

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let sizes: Vec<usize> = if args.sizes.trim().is_empty() {
        Vec::new()
    } else {
        args.sizes
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("bad size: {s}"))))
            .collect::<CliResult<_>>()?
    };
    let kinds: Vec<String> = if args.kinds.trim().is_empty() {
        Vec::new()
    } else {
        args.kinds.split(',').map(|s| s.trim().to_string()).collect()
    };
    for k in &kinds {
        if k != "spiked" && k != "wishart" {
            return usage(format!("unknown bench kind: {k}"));
        }
    }

    // per kind: one (full seconds, partial seconds) cell per size, or a
    // failure marker
    type BenchCells = Vec<Option<(f64, f64)>>;
    let mut rows: Vec<(String, BenchCells)> = Vec::new();
    for kind in &kinds {
        let mut cells = Vec::new();
        for &n in &sizes {
            cells.push(bench_cell(kind, n, &args).ok());
        }
        rows.push((kind.clone(), cells));
    }

    let mut header = format!("{:<10}{:<10}", "kind", "oracle");
    for n in &sizes {
        write!(header, "{:>12}", format!("n={n}")).unwrap();
    }
    println!("{header}");
    for (kind, cells) in &rows {
        for (label, pick) in [("full", 0usize), ("partial", 1)] {
            let mut line = format!("{kind:<10}{label:<10}");
            for c in cells {
                match c {
                    Some(t) => {
                        let v = if pick == 0 { t.0 } else { t.1 };
                        write!(line, "{v:>12.3}").unwrap();
                    }
                    None => write!(line, "{:>12}", "failed").unwrap(),
                }
            }
            println!("{line}");
        }
        let mut line = format!("{kind:<10}{:<10}", "speedup");
        for c in cells {
            match c {
                Some((full, partial)) if *partial > 0.0 => {
                    write!(line, "{:>12.2}", full / partial).unwrap()
                }
                _ => write!(line, "{:>12}", "failed").unwrap(),
            }
        }
        println!("{line}");
    }
    Ok(())
}

/// One grid entry: identical instance and stopping rule for both oracles;
/// returns (full seconds, partial seconds).
fn bench_cell(kind: &str, n: usize, args: &BenchArgs) -> CliResult<(f64, f64)> {
    let eps = args.eps;
    let c = match kind {
        "spiked" => spiked_instance(n, 100.0, args.seed)?,
        _ => {
            let family = SpectralFamily::new(FamilyKind::Wishart, n, 1.0)?;
            approxgrad::randgen::sample(&family, args.seed)?.scale(n as f64 / 4.0)
        }
    };
    let mut times = [0.0f64; 2];
    for (slot, delta) in [(0usize, 0.0), (1, eps / 6.0)] {
        let p = SparsePcaProblem::new(c.clone(), 20.0, eps)?;
        let set = p.feasible_set();
        let sched = StepSchedule::standard();
        let solver = Solver::new(&set, &sched, p.cfg.lipschitz);
        let t0 = Instant::now();
        solver.solve(
            &p,
            &SolveOptions {
                delta,
                stop: StopRule::GapReduction(args.stop_factor),
                max_iter: args.max_iter,
                record_iterates: false,
            },
        )?;
        times[slot] = t0.elapsed().as_secs_f64();
    }
    Ok((times[0], times[1]))
}

// ---------- predict ----------

fn cmd_predict(args: PredictArgs) -> CliResult<()> {
    if args.eps <= 0.0 || args.gamma <= 0.0 || args.gamma >= 1.0 {
        return usage("need eps > 0 and gamma in (0, 1)");
    }
    let n = args.n;
    let semi = semicircle_fraction(args.eps, args.gamma, args.sigma, n)?;
    let mp = marchenko_fraction(args.eps, args.gamma, args.sigma, n)?;
    println!("semicircle n*P = {:.4}", semi * n as f64);
    println!("marchenko n*P = {:.4}", mp * n as f64);
    if let Some(csv) = &args.csv {
        let rows = read_csv(csv)?;
        if rows.is_empty() {
            return Err(CliError::Runtime("empirical CSV has no rows".into()));
        }
        let mean = rows.iter().map(|r| r.m_used as f64).sum::<f64>() / rows.len() as f64;
        println!("empirical mean m_used = {mean:.4}");
    }
    Ok(())
}

// ---------- gen ----------

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let inst = if args.family == "spiked" {
        let rho = args.rho.ok_or(CliError::Usage("--rho required for spiked/spca".into()))?;
        Instance::Spca(SpcaInstance {
            c: spiked_instance(args.n, args.v, args.seed)?,
            rho,
            eps: args.eps,
            v: args.v,
            seed: args.seed,
        })
    } else {
        let kind = FamilyKind::parse(&args.family)
            .ok_or(CliError::Usage(format!("unknown family: {}", args.family)))?;
        let m = args.m.ok_or(CliError::Usage("--m required for maxeig families".into()))?;
        let family = SpectralFamily::new(kind, args.n, 1.0)?;
        let (components, c) = sample_instance_matrices(&family, m, args.seed)?;
        Instance::MaxEig(MaxEigInstance {
            components,
            c,
            b: DVector::zeros(m),
            beta: args.beta,
            eps: args.eps,
            seed: args.seed,
            family: Some(kind.name().to_string()),
        })
    };
    save_instance(&inst, &args.out)?;
    println!(
        "wrote {} instance n={} hash={} to {}",
        inst.kind(),
        inst.matrix_dim(),
        instance_hash(&inst),
        args.out.display()
    );
    Ok(())
}
