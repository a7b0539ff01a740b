//! The `edgecd` command line.
//!
//! Every subcommand reads its settings from flags, then applies the matching
//! section of an optional JSON `--config` file on top, so a value present in
//! the file wins. Outputs go to `--out`, falling back to `$EDGECD_OUT_DIR` and
//! then the working directory.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::chain::{build_h0, ChainSpec, Schedule};
use crate::dynamics::{omega_sweep, transfer_run, write_sweep_csv, EvolveOptions};
use crate::error::{Error, Result};
use crate::export::write_atomic;
use crate::gauge::{gauge_table, write_gauge_csv, CdOperator, CdVariant};
use crate::operator::HermitianOperator;
use crate::pauli::{
    decompose_brute, decompose_h0, decompose_structured, pad, write_terms, KappaMode, KappaSchedule,
    PauliTerm, StructuredPart,
};
use crate::robustness::{self, disorder_sweep, sweep_options, CdSource, SweepAxis, SweepSpec};
use crate::variational::{optimize_transfer, CostKind, OptimizerConfig};

pub const OUT_DIR_ENV: &str = "EDGECD_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "edgecd", version, about = "Counter-diabatic edge-state transfer in SSH chains")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file whose entries override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the edge state under H0 plus an optional analytic CD term.
    Transfer {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        opts: TransferOpts,
    },
    /// Tabulate gauge coefficients and NNN strengths over the protocol.
    Gauge {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        opts: GaugeOpts,
    },
    /// Pauli decomposition of one Hamiltonian family, checked against brute force.
    Decompose {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        opts: DecomposeOpts,
    },
    /// SPSA search for the NNN schedule of the Trotter circuit.
    Optimize {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        opts: OptimizeOpts,
    },
    /// Fidelity under detuning or disorder.
    Robustness {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        opts: RobustnessOpts,
    },
}

/// Overwrites every field that `other` sets.
macro_rules! overlay {
    ($ty:ty { $($f:ident),* $(,)? }) => {
        impl $ty {
            fn overlay(&mut self, other: Self) {
                $(if other.$f.is_some() { self.$f = other.$f; })*
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainArgs {
    /// Number of sites, odd and at least 3 [default: 5].
    #[arg(long)]
    pub sites: Option<usize>,
    /// cosine, cubic or trig [default: cosine].
    #[arg(long)]
    pub schedule: Option<String>,
    /// Ramp rate Ω, with T = π/Ω [default: 1].
    #[arg(long)]
    pub omega: Option<f64>,
    /// Protocol time of the cubic schedule [default: π/Ω].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Energy scale [default: 1].
    #[arg(long)]
    pub t0: Option<f64>,
}
overlay!(ChainArgs { sites, schedule, omega, horizon, t0 });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferOpts {
    /// CD variant: none, full<l>, suba<l>, nnn<l>, equal<l> [default: none].
    #[arg(long)]
    pub cd: Option<String>,
    /// Ω grid `a:b:n` or `a:b:log:n`; writes a sweep instead of a trajectory.
    #[arg(long)]
    pub omega_sweep: Option<String>,
}
overlay!(TransferOpts { cd, omega_sweep });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeOpts {
    /// Nested-commutator order [default: 1].
    #[arg(long)]
    pub order: Option<usize>,
    /// Number of time rows [default: 200].
    #[arg(long)]
    pub grid: Option<usize>,
}
overlay!(GaugeOpts { order, grid });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeOpts {
    /// h0, ht1, ht2, kappa or rice-mele [default: h0].
    #[arg(long)]
    pub part: Option<String>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub t2: Option<f64>,
}
overlay!(DecomposeOpts { part, t1, t2 });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeOpts {
    /// equal or distinct [default: distinct].
    #[arg(long)]
    pub mode: Option<String>,
    /// fidelity or hellinger [default: fidelity].
    #[arg(long)]
    pub cost: Option<String>,
    /// Shots per Hellinger evaluation [default: 1024].
    #[arg(long)]
    pub shots: Option<usize>,
    /// SPSA iterations [default: per-size table].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Independent runs [default: 10].
    #[arg(long)]
    pub runs: Option<usize>,
    /// Trotter steps [default: 22].
    #[arg(long)]
    pub r: Option<usize>,
    /// Lower clip of every κ [default: per-size table].
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_bound: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop H0 from the circuit.
    #[arg(long = "no-h0", num_args = 0, default_missing_value = "true")]
    pub no_h0: Option<bool>,
}
overlay!(OptimizeOpts { mode, cost, shots, iters, runs, r, kappa_bound, seed, no_h0 });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessOpts {
    /// delta, delta-sine, sigma-delta or sigma-tau [default: sigma-tau].
    #[arg(long)]
    pub axis: Option<String>,
    /// Strengths as `a:b:n` or a comma list [default: 0:0.2:11].
    #[arg(long)]
    pub values: Option<String>,
    /// Disorder realizations per value [default: 200].
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// κ schedule JSON, or an optimize report.
    #[arg(long)]
    pub kappa: Option<PathBuf>,
    /// Analytic CD variant used when no κ file is given [default: none].
    #[arg(long)]
    pub cd: Option<String>,
    /// Run the κ schedule without H0.
    #[arg(long = "no-h0", num_args = 0, default_missing_value = "true")]
    pub no_h0: Option<bool>,
}
overlay!(RobustnessOpts { axis, values, samples, seed, kappa, cd, no_h0 });

/// Layout of the `--config` file; each section applies to one subcommand.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub chain: ChainArgs,
    pub transfer: TransferOpts,
    pub gauge: GaugeOpts,
    pub decompose: DecomposeOpts,
    pub optimize: OptimizeOpts,
    pub robustness: RobustnessOpts,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl ChainArgs {
    fn schedule(&self) -> Result<Schedule> {
        let t0 = self.t0.unwrap_or(1.0);
        let omega = self.omega.unwrap_or(1.0);
        match self.schedule.as_deref().unwrap_or("cosine") {
            "cosine" => Schedule::cosine(omega, t0),
            "trig" => Schedule::trig(omega, t0),
            "cubic" => Schedule::cubic(self.horizon.unwrap_or(PI / omega), t0),
            other => Err(Error::InvalidParameter(format!(
                "unknown schedule `{other}` (cosine, cubic or trig)"
            ))),
        }
    }

    fn resolve(&self) -> Result<(ChainSpec, Schedule)> {
        let schedule = self.schedule()?;
        let spec = ChainSpec::from_sites(self.sites.unwrap_or(5), &schedule)?;
        Ok((spec, schedule))
    }
}

/// Parses `a:b:n` (linear, inclusive), `a:b:log:n` (geometric), a comma list
/// or a single number.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse grid `{s}`"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let (a, b, log, n) = match parts.as_slice() {
        [a, b, n] => (num(a)?, num(b)?, false, n),
        [a, b, "log", n] => (num(a)?, num(b)?, true, n),
        [_] => return s.split(',').map(num).collect(),
        _ => return Err(bad()),
    };
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if log && !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!("log grid needs positive ends, got `{s}`")));
    }
    Ok((0..n)
        .map(|k| {
            let x = k as f64 / (n - 1) as f64;
            if log {
                (a.ln() + x * (b.ln() - a.ln())).exp()
            } else {
                a + x * (b - a)
            }
        })
        .collect())
}

/// Maps an error to the process exit code: 2 for invalid input, 3 for
/// numerical failure, 1 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else if err.is_numerical() {
        3
    } else {
        1
    }
}

struct Ctx {
    out: PathBuf,
    written: Vec<PathBuf>,
}

impl Ctx {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

/// Result of one command: files written and a short human summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let out = cfg
        .out
        .clone()
        .or(cli.out.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let workers = cfg.workers.or(cli.workers);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let mut ctx = Ctx {
        out,
        written: Vec::new(),
    };
    let summary = pool.install(|| dispatch(cli.command, cfg, &mut ctx))?;
    Ok(Outcome {
        files: ctx.written,
        summary,
    })
}

fn dispatch(command: Command, cfg: ExperimentConfig, ctx: &mut Ctx) -> Result<String> {
    match command {
        Command::Transfer { mut chain, mut opts } => {
            chain.overlay(cfg.chain);
            opts.overlay(cfg.transfer);
            cmd_transfer(&chain, &opts, ctx)
        }
        Command::Gauge { mut chain, mut opts } => {
            chain.overlay(cfg.chain);
            opts.overlay(cfg.gauge);
            cmd_gauge(&chain, &opts, ctx)
        }
        Command::Decompose { mut chain, mut opts } => {
            chain.overlay(cfg.chain);
            opts.overlay(cfg.decompose);
            cmd_decompose(&chain, &opts, ctx)
        }
        Command::Optimize { mut chain, mut opts } => {
            chain.overlay(cfg.chain);
            opts.overlay(cfg.optimize);
            cmd_optimize(&chain, &opts, ctx)
        }
        Command::Robustness { mut chain, mut opts } => {
            chain.overlay(cfg.chain);
            opts.overlay(cfg.robustness);
            cmd_robustness(&chain, &opts, ctx)
        }
    }
}

fn cmd_transfer(chain: &ChainArgs, opts: &TransferOpts, ctx: &mut Ctx) -> Result<String> {
    let (spec, schedule) = chain.resolve()?;
    let variant = CdVariant::parse(opts.cd.as_deref().unwrap_or("none"))?;
    let evolve = EvolveOptions::default();
    if let Some(grid) = &opts.omega_sweep {
        let omegas = parse_grid(grid)?;
        let rows = omega_sweep(&spec, &schedule, variant, &omegas, &evolve)?;
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows)?;
        ctx.write("omega_sweep.csv", &buf)?;
        return Ok(format!("{} sweep points", rows.len()));
    }
    let report = transfer_run(&spec, &schedule, variant, &evolve)?;
    let mut buf = Vec::new();
    report.write_trajectory_csv(&mut buf)?;
    ctx.write("transfer_trajectory.csv", &buf)?;
    ctx.json("transfer_summary.json", &report)?;
    Ok(format!("F(T) = {:.10}", report.final_fidelity))
}

fn cmd_gauge(chain: &ChainArgs, opts: &GaugeOpts, ctx: &mut Ctx) -> Result<String> {
    let (spec, schedule) = chain.resolve()?;
    let order = opts.order.unwrap_or(1);
    let rows = gauge_table(&spec, &schedule, order, opts.grid.unwrap_or(200))?;
    let mut buf = Vec::new();
    write_gauge_csv(&mut buf, &spec, &rows, order)?;
    ctx.write("gauge.csv", &buf)?;
    Ok(format!("{} rows", rows.len()))
}

fn part_operator(spec: &ChainSpec, part: &str, t1: f64, t2: f64) -> Result<HermitianOperator> {
    let n = spec.sites();
    match part {
        "h0" => build_h0(spec, t1, t2),
        "ht1" => build_h0(spec, t1, 0.0),
        "ht2" => build_h0(spec, 0.0, t2),
        "kappa" => Ok(CdOperator::nnn_a(n, &vec![1.0; spec.n_cells() - 1])?.matrix),
        "rice-mele" => HermitianOperator::from_real(&DMatrix::from_fn(n, n, |i, j| {
            match (i == j, i % 2) {
                (false, _) => 0.0,
                (true, 0) => 1.0,
                (true, _) => -1.0,
            }
        })),
        other => Err(Error::InvalidParameter(format!(
            "unknown part `{other}` (h0, ht1, ht2, kappa or rice-mele)"
        ))),
    }
}

fn terms_agree(a: &[PauliTerm], b: &[PauliTerm], tol: f64) -> bool {
    let map = |ts: &[PauliTerm]| -> BTreeMap<String, f64> {
        ts.iter().map(|t| (t.label(), t.coefficient)).collect()
    };
    let (ma, mb) = (map(a), map(b));
    ma.len() == mb.len()
        && ma
            .iter()
            .all(|(k, &v)| mb.get(k).is_some_and(|&w| (v - w).abs() <= tol))
}

fn cmd_decompose(chain: &ChainArgs, opts: &DecomposeOpts, ctx: &mut Ctx) -> Result<String> {
    let (spec, _) = chain.resolve()?;
    let part = opts.part.as_deref().unwrap_or("h0").to_ascii_lowercase();
    let (t1, t2) = (opts.t1.unwrap_or(1.0), opts.t2.unwrap_or(1.0));
    let brute = decompose_brute(&pad(&part_operator(&spec, &part, t1, t2)?));
    let structured = match part.as_str() {
        "h0" => decompose_h0(&spec, t1, t2)?,
        "ht1" => decompose_structured(&spec, t1, t2, StructuredPart::Ht1)?,
        "ht2" => decompose_structured(&spec, t1, t2, StructuredPart::Ht2)?,
        "kappa" => decompose_structured(&spec, t1, t2, StructuredPart::KappaPattern)?,
        _ => decompose_structured(&spec, t1, t2, StructuredPart::RiceMele)?,
    };
    if !terms_agree(&structured, &brute, 1e-12) {
        return Err(Error::SelfCheck(format!(
            "structured and brute-force decompositions of `{part}` differ"
        )));
    }
    let mut buf = Vec::new();
    write_terms(&mut buf, &structured)?;
    ctx.write(&format!("pauli_{part}.txt"), &buf)?;
    Ok(format!("{} terms", structured.len()))
}

fn cmd_optimize(chain: &ChainArgs, opts: &OptimizeOpts, ctx: &mut Ctx) -> Result<String> {
    let (spec, schedule) = chain.resolve()?;
    let mut cfg = OptimizerConfig::size_defaults(spec.n_cells());
    if let Some(m) = &opts.mode {
        cfg.mode = KappaMode::parse(m)?;
    }
    cfg.cost = match opts.cost.as_deref().unwrap_or("fidelity") {
        "fidelity" => CostKind::Fidelity,
        "hellinger" => CostKind::Hellinger {
            shots: opts.shots.unwrap_or(1024),
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown cost `{other}` (fidelity or hellinger)"
            )))
        }
    };
    cfg.iterations = opts.iters.unwrap_or(cfg.iterations);
    cfg.runs = opts.runs.unwrap_or(cfg.runs);
    cfg.r = opts.r.unwrap_or(cfg.r);
    cfg.kappa_bound = opts.kappa_bound.unwrap_or(cfg.kappa_bound);
    cfg.seed = opts.seed.unwrap_or(0);
    cfg.h0_on = !opts.no_h0.unwrap_or(false);
    let report = optimize_transfer(&spec, &schedule, &cfg)?;
    ctx.json("optimize_report.json", &report)?;
    let mut buf = Vec::new();
    report.write_traces_csv(&mut buf)?;
    ctx.write("optimize_traces.csv", &buf)?;
    let avg = &report.aggregate.avg_kappa_schedule;
    ctx.json("kappa_avg.json", avg)?;
    let mut buf = Vec::new();
    avg.write_circuit_csv(&mut buf, schedule.horizon())?;
    ctx.write("kappa_avg.csv", &buf)?;
    let a = &report.aggregate;
    Ok(format!("mean F = {:.6}, std = {:.6}, best = {:.6}", a.mean, a.std, a.best))
}

/// Reads a κ schedule, or the averaged schedule and `h0_on` flag of a report.
fn load_kappa(path: &Path) -> Result<(KappaSchedule, Option<bool>)> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    match value.get("aggregate") {
        Some(agg) => {
            let k = KappaSchedule::deserialize(&agg["avg_kappa_schedule"])?;
            let h0 = value.pointer("/config/h0_on").and_then(|v| v.as_bool());
            Ok((k, h0))
        }
        None => Ok((KappaSchedule::deserialize(&value)?, None)),
    }
}

fn cmd_robustness(chain: &ChainArgs, opts: &RobustnessOpts, ctx: &mut Ctx) -> Result<String> {
    let (spec, schedule) = chain.resolve()?;
    let axis = SweepAxis::parse(opts.axis.as_deref().unwrap_or("sigma-tau"))?;
    let cd_source = match &opts.kappa {
        Some(p) => {
            let (kappa, h0) = load_kappa(p)?;
            let h0_on = match opts.no_h0 {
                Some(no) => !no,
                None => h0.unwrap_or(true),
            };
            CdSource::FixedKappa { kappa, h0_on }
        }
        None => match CdVariant::parse(opts.cd.as_deref().unwrap_or("none"))? {
            Some(variant) => CdSource::Analytic { variant },
            None => CdSource::None,
        },
    };
    let sweep = SweepSpec {
        axis,
        values: parse_grid(opts.values.as_deref().unwrap_or("0:0.2:11"))?,
        n_samples: opts.samples.unwrap_or(200),
        seed: opts.seed.unwrap_or(0),
        cd_source,
    };
    let rows = disorder_sweep(&spec, &schedule, &sweep, &sweep_options())?;
    let mut buf = Vec::new();
    robustness::write_sweep_csv(&mut buf, &rows)?;
    let name = serde_json::to_value(axis)?;
    ctx.write(&format!("robustness_{}.csv", name.as_str().unwrap_or("sweep")), &buf)?;
    Ok(format!("{} sweep points", rows.len()))
}

/// Parses `args`, runs the command and reports on stdout/stderr. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
