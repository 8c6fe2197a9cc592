use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mhdlab::io::{csv_row, file_digest, parse_config, RunManifest};
use mhdlab::kernel::{bound_envelope, kernel_values, Estimate};
use mhdlab::linear::decay::{propagator_decay_experiment, symbol_decay, InitProfile, DecayReport};
use mhdlab::linear::quadrature::{symbol_norm, symbol_spec, Region};
use mhdlab::linear::{char_poly_scan, oracle_test};
use mhdlab::solver::{run, DirObserver, TrajectoryRecord};
use mhdlab::stats::logspace;
use mhdlab::verify::{claim_ids, parse_claim, run_all, run_claim, Budget, Verdict};
use mhdlab::Error;

#[derive(Parser)]
#[command(name = "mhdlab", version, about = "Kernels, linear flow, solver and claim scanners for 2D MHD")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; `-` writes to standard output.
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Kernel symbols and their envelopes.
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Exact linear flow: oracle, characteristic polynomial, decay rates.
    Linear {
        #[command(subcommand)]
        cmd: LinearCmd,
    },
    /// Run the nonlinear solver.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scan the inequality claims.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Tabulate every kernel symbol and envelope on a wavenumber grid.
    Scan {
        /// Comma-separated times.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 8.0)]
        kmax: f64,
        /// Points per axis on [-kmax, kmax].
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 16.0)]
        c_decay: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    Gaussian,
    Random,
    Zero,
}

#[derive(Subcommand)]
enum LinearCmd {
    /// Compare the closed-form semigroup with the matrix exponential.
    OracleTest {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
        times: Vec<f64>,
        #[arg(long, default_value_t = 8.0)]
        kmax: f64,
    },
    /// Characteristic polynomial residual on a wavenumber grid.
    Charpoly {
        #[arg(long, default_value_t = 8.0)]
        kmax: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Fit the decay rate of a propagator or a catalogued symbol norm.
    Decay {
        /// Propagator id (kn1L, ku1L, kn2L, kn5L-ii, k1L, ...).
        #[arg(long, conflicts_with = "symbol", required_unless_present = "symbol")]
        prop: Option<String>,
        /// Symbol id from the catalog (kn1-1, ku1, kn2-2, ...).
        #[arg(long)]
        symbol: Option<String>,
        /// Region: low, high, all, band:N.
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        q_xi: Option<f64>,
        #[arg(long)]
        q_eta: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        t0: f64,
        #[arg(long, default_value_t = 1000.0)]
        t1: f64,
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[arg(long, value_enum, default_value_t = ProfileKind::Gaussian)]
        profile: ProfileKind,
        #[arg(long, default_value_t = 4.0)]
        sigma: f64,
        /// Raw (t, value) series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate one catalogued symbol norm at given times.
    SymbolNorm {
        #[arg(long)]
        symbol: String,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        q_xi: Option<f64>,
        #[arg(long)]
        q_eta: Option<f64>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Run every checker and write the JSON report.
    All {
        /// Report path (same as --out).
        #[arg(long)]
        report: Option<String>,
        /// Use this sample count for every randomized checker.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run one checker and print its result.
    One {
        #[arg(long)]
        claim: String,
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// Failure with its exit status: 2 for usage-type errors, 1 otherwise.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownClaim(_)
            | Error::UnknownQuantity(_)
            | Error::UnknownEstimate(_)
            | Error::InvalidConfig(_)
            | Error::InvalidBudget(_) => 2,
            _ => 1,
        };
        let mut msg = e.to_string();
        if let Error::UnknownClaim(_) = e {
            msg.push_str("\nknown claims:\n  ");
            msg.push_str(&claim_ids().join("\n  "));
        }
        Fail(code, msg)
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(1, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(1, e.to_string())
    }
}

type Res<T> = Result<T, Fail>;

/// Where a command's main output goes.
enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    fn new(out: Option<&str>) -> Sink {
        match out {
            None | Some("-") => Sink::Stdout,
            Some(p) => Sink::File(PathBuf::from(p)),
        }
    }

    fn write(&self, text: &str, m: &mut RunManifest) -> Res<()> {
        match self {
            Sink::Stdout => {
                std::io::stdout().write_all(text.as_bytes())?;
            }
            Sink::File(p) => {
                if let Some(d) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(d)?;
                }
                fs::write(p, text)?;
                m.outputs.push(p.display().to_string());
            }
        }
        Ok(())
    }

    /// The manifest lands beside a file output; with standard output it goes
    /// to standard error.
    fn finish(&self, m: &mut RunManifest) -> Res<()> {
        match self {
            Sink::Stdout => {
                m.close();
                eprintln!("{}", serde_json::to_string_pretty(m)?);
            }
            Sink::File(p) => {
                let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
                m.finish_to(&dir.join("manifest.json"))?;
            }
        }
        Ok(())
    }
}

fn manifest(config: &Value, seed: u64) -> Res<RunManifest> {
    Ok(RunManifest::begin(std::env::args().collect(), config, seed)?)
}

fn region_for(symbol: &str, region: Option<&str>) -> Res<Region> {
    match region {
        Some(r) => Ok(Region::parse(r)?),
        None => Ok(symbol_spec(symbol)?.default_region(1.0)),
    }
}

fn kernel_scan(c: &Common, t: &[f64], kmax: f64, n: usize, c_decay: f64) -> Res<()> {
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if n < 2 || !positive(kmax) || !positive(c_decay) || t.iter().any(|&t| t.is_nan() || t < 0.0) {
        return Err(Fail(2, "need n ≥ 2, kmax > 0, c_decay > 0 and times ≥ 0".into()));
    }
    let cfg = json!({"t": t, "kmax": kmax, "n": n, "c_decay": c_decay});
    let mut m = manifest(&cfg, c.seed.unwrap_or(0))?;
    let mut out = String::from("t,xi,eta,A,K,K1,dtK,ddtK,comp,comp_x,dt_comp");
    for i in 1..=8 {
        out.push_str(&format!(",envelope_{i}"));
    }
    out.push('\n');
    let axis: Vec<f64> = (0..n).map(|i| -kmax + 2.0 * kmax * i as f64 / (n - 1) as f64).collect();
    for &tt in t {
        for &eta in &axis {
            for &xi in &axis {
                let kv = kernel_values(tt, xi, eta);
                let mut row = vec![tt, xi, eta, xi.hypot(eta), kv.k, kv.k1, kv.dt_k, kv.ddt_k, kv.comp, kv.comp_x, kv.dt_comp];
                row.extend(Estimate::ALL.iter().map(|e| bound_envelope(*e, tt, xi, eta, c_decay)));
                out.push_str(&csv_row(&row));
                out.push('\n');
            }
        }
    }
    let sink = Sink::new(c.out.as_deref());
    sink.write(&out, &mut m)?;
    sink.finish(&mut m)
}

fn decay_csv(r: &DecayReport) -> String {
    let mut s = String::from("t,value\n");
    for (t, v) in r.times.iter().zip(&r.values) {
        s.push_str(&csv_row(&[*t, *v]));
        s.push('\n');
    }
    s
}

fn linear(c: &Common, cmd: LinearCmd) -> Res<()> {
    let seed = c.seed.unwrap_or(0);
    let sink = Sink::new(c.out.as_deref());
    match cmd {
        LinearCmd::OracleTest { samples, times, kmax } => {
            if samples == 0 {
                return Err(Error::InvalidBudget("samples must be positive".into()).into());
            }
            let mut m = manifest(&json!({"samples": samples, "times": times, "kmax": kmax}), seed)?;
            let r = oracle_test(samples, &times, kmax, seed);
            let mut v = serde_json::to_value(&r)?;
            v["pass"] = json!(r.max_rel_err <= 1e-8);
            sink.write(&(serde_json::to_string_pretty(&v)? + "\n"), &mut m)?;
            sink.finish(&mut m)
        }
        LinearCmd::Charpoly { kmax, n } => {
            let mut m = manifest(&json!({"kmax": kmax, "n": n}), seed)?;
            let r = char_poly_scan(n, kmax);
            sink.write(&format!("max_residual {r:.16e}\n"), &mut m)?;
            sink.finish(&mut m)
        }
        LinearCmd::Decay { prop, symbol, region, q_xi, q_eta, t0, t1, points, profile, sigma, csv } => {
            let cfg = json!({
                "prop": prop, "symbol": symbol, "region": region, "q_xi": q_xi, "q_eta": q_eta,
                "t0": t0, "t1": t1, "points": points, "sigma": sigma,
                "profile": profile.to_possible_value().map(|v| v.get_name().to_string()),
            });
            let mut m = manifest(&cfg, seed)?;
            if points < 2 {
                return Err(Fail(2, "need at least two points".into()));
            }
            let times = logspace(t0, t1, points);
            let r = if let Some(p) = prop {
                let init = match profile {
                    ProfileKind::Gaussian => InitProfile::Gaussian { sigma },
                    ProfileKind::Random => InitProfile::BandLimitedRandom { sigma, seed },
                    ProfileKind::Zero => InitProfile::Zero,
                };
                propagator_decay_experiment(&p, init, &times)?
            } else {
                let id = symbol.expect("clap requires one of prop/symbol");
                let spec = symbol_spec(&id)?;
                let reg = region_for(&id, region.as_deref())?;
                let (qx, qy) = (q_xi.unwrap_or(spec.default_q.0), q_eta.unwrap_or(spec.default_q.1));
                symbol_decay(&id, reg, qx, qy, &times)?
            };
            if let Some(path) = csv {
                fs::write(&path, decay_csv(&r))?;
                m.outputs.push(path.display().to_string());
            }
            sink.write(&(serde_json::to_string_pretty(&r)? + "\n"), &mut m)?;
            sink.finish(&mut m)
        }
        LinearCmd::SymbolNorm { symbol, t, region, q_xi, q_eta } => {
            let spec = symbol_spec(&symbol)?;
            let reg = region_for(&symbol, region.as_deref())?;
            let (qx, qy) = (q_xi.unwrap_or(spec.default_q.0), q_eta.unwrap_or(spec.default_q.1));
            let cfg = json!({"symbol": symbol, "t": t, "region": reg.label(), "q_xi": qx, "q_eta": qy});
            let mut m = manifest(&cfg, seed)?;
            let mut out = String::from("t,norm\n");
            for &tt in &t {
                out.push_str(&csv_row(&[tt, symbol_norm(&symbol, reg, qx, qy, tt)?]));
                out.push('\n');
            }
            sink.write(&out, &mut m)?;
            sink.finish(&mut m)
        }
    }
}

fn simulate(c: &Common, config: &Path) -> Res<()> {
    let dir = match c.out.as_deref() {
        None | Some("-") => return Err(Fail(2, "simulate needs --out <dir>".into())),
        Some(d) => PathBuf::from(d),
    };
    let mut cfg = parse_config(&fs::read_to_string(config)?)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    fs::create_dir_all(&dir)?;
    let mut m = RunManifest::begin(std::env::args().collect(), &cfg, cfg.seed)?;
    let mut obs = DirObserver { dir: &dir, written: Vec::new() };
    let (rec, _, err): (TrajectoryRecord, _, _) = run(&cfg, None, &mut obs);
    m.outputs.extend(obs.written);
    let traj = dir.join("trajectory.csv");
    fs::write(&traj, rec.to_csv())?;
    m.outputs.push("trajectory.csv".into());
    let digest = file_digest(&traj)?;
    m.finish(&dir)?;
    eprintln!("{} rows, {} steps, trajectory sha256 {digest}", rec.times.len(), rec.steps);
    match err {
        None => Ok(()),
        Some(e) => Err(e.into()),
    }
}

fn verify(c: &Common, cmd: VerifyCmd) -> Res<()> {
    let seed = c.seed.unwrap_or(0);
    let budget = |s: Option<usize>| s.map_or_else(Budget::default, Budget::uniform);
    match cmd {
        VerifyCmd::All { report, samples } => {
            let b = budget(samples);
            let sink = Sink::new(report.as_deref().or(c.out.as_deref()));
            let mut m = manifest(&serde_json::to_value(b)?, seed)?;
            let r = run_all(&b, seed)?;
            sink.write(&(serde_json::to_string_pretty(&r)? + "\n"), &mut m)?;
            sink.finish(&mut m)?;
            for (k, v) in &r.results {
                eprintln!("{:?} {k}: C = {:.4e} (cap {:.0e})", v.verdict, v.max_ratio, v.cap);
            }
            if r.all_pass() {
                Ok(())
            } else {
                Err(Fail(1, format!("failing claims: {}", r.failures().join(", "))))
            }
        }
        VerifyCmd::One { claim, samples } => {
            let cl = parse_claim(&claim)?;
            let b = budget(samples);
            let mut m = manifest(&json!({"claim": claim, "budget": b}), seed)?;
            let r = run_claim(&cl, &b, seed)?;
            let sink = Sink::new(c.out.as_deref());
            sink.write(&(serde_json::to_string_pretty(&r)? + "\n"), &mut m)?;
            sink.finish(&mut m)?;
            if r.verdict == Verdict::Pass {
                Ok(())
            } else {
                Err(Fail(1, format!("{} FAIL", r.claim)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid --threads {n}");
            return ExitCode::from(2);
        }
    }
    let c = cli.common.clone();
    let res = match cli.cmd {
        Cmd::Kernel { cmd: KernelCmd::Scan { t, kmax, n, c_decay } } => kernel_scan(&c, &t, kmax, n, c_decay),
        Cmd::Linear { cmd } => linear(&c, cmd),
        Cmd::Simulate { config } => simulate(&c, &config),
        Cmd::Verify { cmd } => verify(&c, cmd),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
