//! SPSA optimization of the NNN driving schedule of the digitized protocol.

use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, Schedule};
use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::gauge::{alpha_closed_form, build_cd, CdVariant};
use crate::pauli::{sample_counts, KappaMode, KappaSchedule, TrotterCircuit};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// `1 - |ψ_target|²`.
    Fidelity,
    /// `1 - sqrt(p_target)` from `shots` sampled measurements.
    Hellinger { shots: usize },
}

/// `a_k = a / (k + 1 + A)^alpha`, `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaGains {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl SpsaGains {
    pub fn standard(kappa_bound: f64, iterations: usize) -> Self {
        Self {
            a: kappa_bound.abs(),
            c: 0.1,
            big_a: 0.1 * iterations as f64,
            alpha: 0.602,
            gamma: 0.101,
        }
    }

    pub fn step(&self, k: usize) -> f64 {
        self.a / (k as f64 + 1.0 + self.big_a).powf(self.alpha)
    }

    pub fn perturbation(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub r: usize,
    pub sigma_range: (f64, f64),
    pub kappa_bound: f64,
    /// `None` selects [`SpsaGains::standard`].
    pub gains: Option<SpsaGains>,
    pub seed: u64,
    pub runs: usize,
    pub cost: CostKind,
    pub h0_on: bool,
    pub mode: KappaMode,
}

/// Warm-start scale ranges and bounds for `N = 3..=8`.
const SIGMA_TABLE: [(f64, f64); 6] = [(4.0, 5.0), (6.0, 7.0), (7.0, 8.0), (9.0, 10.0), (10.0, 11.0), (11.0, 13.0)];
const BOUND_TABLE: [f64; 6] = [-2.5, -3.0, -3.5, -4.0, -4.5, -5.0];
const ITER_TABLE: [usize; 6] = [1000, 2000, 3000, 5000, 6000, 10000];

impl OptimizerConfig {
    /// Per-size defaults; sizes outside `3..=8` take the nearest entry.
    pub fn size_defaults(n_cells: usize) -> Self {
        let idx = n_cells.clamp(3, 8) - 3;
        Self {
            iterations: ITER_TABLE[idx],
            r: 22,
            sigma_range: SIGMA_TABLE[idx],
            kappa_bound: BOUND_TABLE[idx],
            gains: None,
            seed: 0,
            runs: 10,
            cost: CostKind::Fidelity,
            h0_on: true,
            mode: KappaMode::DistinctSymmetric,
        }
    }

    pub fn gains(&self) -> SpsaGains {
        self.gains
            .unwrap_or_else(|| SpsaGains::standard(self.kappa_bound, self.iterations))
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if self.r < 2 {
            return Err(Error::InvalidParameter(format!("need r >= 2, got {}", self.r)));
        }
        if !(self.kappa_bound <= 0.0 && self.kappa_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa bound must be finite and <= 0, got {}",
                self.kappa_bound
            )));
        }
        let (lo, hi) = self.sigma_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if self.runs < 1 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        if let CostKind::Hellinger { shots } = self.cost {
            if shots < 1 {
                return Err(Error::InvalidParameter("shots must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// `1 - |ψ[target]|²`.
pub fn cost_fidelity(psi: &StateVector, target: usize) -> Result<f64> {
    let amp = psi.amplitudes().get(target).ok_or(Error::IndexOutOfRange {
        index: target,
        dim: psi.dim(),
    })?;
    Ok((1.0 - amp.norm_sqr()).max(0.0))
}

/// Squared Hellinger distance to the point mass on `target`,
/// `1 - sqrt(counts[target] / Σ counts)`.
pub fn cost_hellinger(counts: &[u64], target: usize) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("empty histogram".into()));
    }
    let hit = *counts.get(target).ok_or(Error::IndexOutOfRange {
        index: target,
        dim: counts.len(),
    })?;
    Ok(1.0 - (hit as f64 / total as f64).sqrt())
}

/// Hellinger cost with exact probabilities in place of samples.
pub fn cost_hellinger_exact(psi: &StateVector, target: usize) -> Result<f64> {
    Ok(1.0 - (1.0 - cost_fidelity(psi, target)?).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpsaResult {
    /// Lowest-cost point among all evaluations.
    pub theta: Vec<f64>,
    pub best_cost: f64,
    /// Final iterate.
    pub last: Vec<f64>,
    /// `(f(θ+) + f(θ-)) / 2` per iteration.
    pub trace: Vec<f64>,
}

fn clip(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.clamp(lo, hi)
}

/// SPSA with Rademacher perturbations and box constraints.
///
/// The cost is called with the point and an evaluation index (0 for `θ0`,
/// `2k + 1` and `2k + 2` for the pair at iteration `k`), which stochastic
/// costs use to derive their own noise streams. Both perturbed points are
/// clipped into the box before evaluation.
pub fn spsa_minimize<F>(
    cost: &F,
    theta0: &[f64],
    bounds: (f64, f64),
    iterations: usize,
    gains: &SpsaGains,
    seed: u64,
) -> Result<SpsaResult>
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    let (lo, hi) = bounds;
    if !(lo <= hi) {
        return Err(Error::InvalidParameter(format!("empty bounds [{lo}, {hi}]")));
    }
    for (index, &value) in theta0.iter().enumerate() {
        if !(value >= lo && value <= hi) {
            return Err(Error::OutOfBounds {
                index,
                value,
                lower: lo,
                upper: hi,
            });
        }
    }
    let mut rng = seeds::rng(seed);
    let mut theta = theta0.to_vec();
    let mut best = (cost(&theta, 0)?, theta.clone());
    let mut trace = Vec::with_capacity(iterations);
    let dim = theta.len();
    for k in 0..iterations {
        let ck = gains.perturbation(k);
        let ak = gains.step(k);
        let delta: Vec<f64> = (0..dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| clip(t + ck * d, bounds)).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| clip(t - ck * d, bounds)).collect();
        let id = 2 * k as u64;
        let (fp, fm) = rayon::join(|| cost(&plus, id + 1), || cost(&minus, id + 2));
        let (fp, fm) = (fp?, fm?);
        trace.push(0.5 * (fp + fm));
        if fp < best.0 {
            best = (fp, plus);
        }
        if fm < best.0 {
            best = (fm, minus);
        }
        let scale = (fp - fm) / (2.0 * ck);
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t = clip(*t - ak * scale / d, bounds);
        }
    }
    Ok(SpsaResult {
        theta: best.1,
        best_cost: best.0,
        last: theta,
        trace,
    })
}

/// First-order NNN strength `α_1 (t1 ṫ2 - ṫ1 t2)` at time `t`.
pub fn first_order_kappa(spec: &ChainSpec, schedule: &Schedule, t: f64) -> Result<f64> {
    let h = schedule.eval_hoppings(t)?;
    let drive = h.t1 * h.t2_dot - h.t1_dot() * h.t2;
    if drive == 0.0 {
        return Ok(0.0);
    }
    if schedule.lambda_sum().is_some() {
        Ok(alpha_closed_form(spec.n_cells(), h.t1, h.t2, 1)?.alphas[0] * drive)
    } else {
        Ok(build_cd(spec, schedule, t, CdVariant::EqualNnnA(1))?.kappa(3, 1))
    }
}

/// Warm start `σ κ^(1)(kΔt)`, with zero endpoints and values clipped to
/// `[kappa_bound, 0]`.
pub fn init_kappa(
    spec: &ChainSpec,
    schedule: &Schedule,
    r: usize,
    sigma: f64,
    mode: KappaMode,
    kappa_bound: f64,
) -> Result<KappaSchedule> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("σ_κ must be positive, got {sigma}")));
    }
    if r < 2 {
        return Err(Error::InvalidParameter(format!("need r >= 2, got {r}")));
    }
    let dt = schedule.horizon() / r as f64;
    let interior = (1..r)
        .map(|k| Ok((sigma * first_order_kappa(spec, schedule, dt * k as f64)?).clamp(kappa_bound, 0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let n_bonds = spec.n_cells() - 1;
    let copies = KappaSchedule::n_params(mode, n_bonds, r) / (r - 1);
    let params: Vec<f64> = (0..copies).flat_map(|_| interior.iter().copied()).collect();
    KappaSchedule::from_params(mode, n_bonds, r, &params)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub run: usize,
    pub sigma_kappa: f64,
    /// Exact `|ψ_target|²` at the returned schedule.
    pub final_fidelity: f64,
    pub best_cost: f64,
    pub kappa_schedule: KappaSchedule,
    pub cost_trace: Vec<f64>,
    /// Target population per iteration, estimated from the evaluated costs.
    pub p_target_trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub best: f64,
    pub avg_kappa_schedule: KappaSchedule,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub unix_time: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    pub sites: usize,
    pub config: OptimizerConfig,
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
    pub metadata: Metadata,
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn average_schedule(runs: &[RunResult]) -> KappaSchedule {
    let first = &runs[0].kappa_schedule;
    let n = runs.len() as f64;
    let samples = (0..first.n_bonds())
        .map(|b| {
            (0..=first.r)
                .map(|k| runs.iter().map(|r| r.kappa_schedule.samples[b][k]).sum::<f64>() / n)
                .collect()
        })
        .collect();
    KappaSchedule {
        mode: first.mode,
        r: first.r,
        samples,
    }
}

fn single_run(
    spec: &ChainSpec,
    schedule: &Schedule,
    cfg: &OptimizerConfig,
    circuit: &TrotterCircuit,
    run: usize,
) -> Result<RunResult> {
    let (lo, hi) = cfg.sigma_range;
    let mut rng = seeds::rng_at(cfg.seed, &[run as u64, 0]);
    let sigma = lo + (hi - lo) * rng.random::<f64>();
    let init = init_kappa(spec, schedule, cfg.r, sigma, cfg.mode, cfg.kappa_bound)?;
    let n_bonds = init.n_bonds();
    let target = spec.sites() - 1;
    let evaluate = |theta: &[f64], id: u64| -> Result<f64> {
        let k = KappaSchedule::from_params(cfg.mode, n_bonds, cfg.r, theta)?;
        let psi = circuit.propagate(&k, cfg.h0_on)?;
        match cfg.cost {
            CostKind::Fidelity => cost_fidelity(&psi, target),
            CostKind::Hellinger { shots } => {
                let mut shot_rng = seeds::rng_at(cfg.seed, &[run as u64, 1, id]);
                cost_hellinger(&sample_counts(&psi, shots, &mut shot_rng)?, target)
            }
        }
    };
    let spsa_seed = seeds::derive(cfg.seed, &[run as u64, 2]);
    let res = spsa_minimize(
        &evaluate,
        &init.to_params(),
        (cfg.kappa_bound, 0.0),
        cfg.iterations,
        &cfg.gains(),
        spsa_seed,
    )?;
    let best = KappaSchedule::from_params(cfg.mode, n_bonds, cfg.r, &res.theta)?;
    let psi = circuit.propagate(&best, cfg.h0_on)?;
    let final_fidelity = 1.0 - cost_fidelity(&psi, target)?;
    let p_target_trace = res
        .trace
        .iter()
        .map(|&c| match cfg.cost {
            CostKind::Fidelity => 1.0 - c,
            CostKind::Hellinger { .. } => (1.0 - c) * (1.0 - c),
        })
        .collect();
    Ok(RunResult {
        run,
        sigma_kappa: sigma,
        final_fidelity,
        best_cost: res.best_cost,
        kappa_schedule: best,
        cost_trace: res.trace,
        p_target_trace,
    })
}

/// `cfg.runs` independent warm-started SPSA runs on the Trotter circuit,
/// executed in parallel with per-run seeds.
pub fn optimize_transfer(spec: &ChainSpec, schedule: &Schedule, cfg: &OptimizerConfig) -> Result<OptimizationReport> {
    cfg.validate()?;
    let started = Instant::now();
    let circuit = TrotterCircuit::new(spec, schedule, cfg.r)?;
    let runs = (0..cfg.runs)
        .into_par_iter()
        .map(|run| single_run(spec, schedule, cfg, &circuit, run))
        .collect::<Result<Vec<RunResult>>>()?;
    let fids: Vec<f64> = runs.iter().map(|r| r.final_fidelity).collect();
    let (mean, std) = mean_std(&fids);
    let aggregate = Aggregate {
        mean,
        std,
        best: fids.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        avg_kappa_schedule: average_schedule(&runs),
    };
    Ok(OptimizationReport {
        sites: spec.sites(),
        config: cfg.clone(),
        runs,
        aggregate,
        metadata: Metadata {
            unix_time: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

impl OptimizationReport {
    /// CSV with columns `iteration, run_1..run_R`.
    pub fn write_traces_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string()];
        header.extend((1..=self.runs.len()).map(|r| format!("run_{r}")));
        w.write_record(&header)?;
        for k in 0..self.config.iterations {
            let mut rec = vec![k.to_string()];
            rec.extend(self.runs.iter().map(|r| fmt_f64(r.cost_trace[k])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
