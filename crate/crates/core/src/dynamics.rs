//! Analog time evolution of single-particle states on the chain.
//!
//! The integrator applies, per substep of width `h`, the exact exponential
//! of the Hamiltonian sampled at the substep midpoint. It is unitary to
//! machine precision and second-order accurate in `h`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{build_h0, zero_mode_at, ChainSpec, Schedule};
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::gauge::{build_cd, CdVariant};
use crate::operator::{CVector, HermitianOperator, C64};

/// Unit-norm tolerance of [`StateVector`].
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !((norm - 1.0).abs() < NORM_TOL) {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps` first; fails on the zero vector.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            amps: amps / C64::new(norm, 0.0),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub(crate) fn from_unchecked(amps: CVector) -> Self {
        Self { amps }
    }
}

/// `|<φ|ψ>|²`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            found: psi.dim(),
        });
    }
    Ok(phi.amps.dotc(&psi.amps).norm_sqr().min(1.0))
}

/// States on a uniform time grid `t_k = k T / steps`, `k = 0..=steps`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    /// `|<j|ψ(t)>|²` per grid point.
    pub fn site_probabilities(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(StateVector::probabilities).collect()
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn max_norm_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.amps.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn step_loop<H>(
    hamiltonian_at: &H,
    psi0: &StateVector,
    horizon: f64,
    steps: usize,
    mut visit: impl FnMut(usize, &CVector),
) -> Result<CVector>
where
    H: Fn(f64) -> Result<HermitianOperator> + ?Sized,
{
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad horizon {horizon}")));
    }
    let h = horizon / steps as f64;
    let mut psi = psi0.amps.clone();
    visit(0, &psi);
    for k in 0..steps {
        let ham = hamiltonian_at((k as f64 + 0.5) * h)?;
        if ham.dim() != psi.len() {
            return Err(Error::DimensionMismatch {
                expected: psi.len(),
                found: ham.dim(),
            });
        }
        psi = ham.propagator(h) * psi;
        visit(k + 1, &psi);
    }
    Ok(psi)
}

/// Integrates `i dψ/dt = H(t) ψ` over `[0, T]` with a fixed step count and
/// records every grid point.
pub fn propagate<H>(hamiltonian_at: &H, psi0: &StateVector, horizon: f64, steps: usize) -> Result<Trajectory>
where
    H: Fn(f64) -> Result<HermitianOperator> + ?Sized,
{
    let mut states = Vec::with_capacity(steps + 1);
    step_loop(hamiltonian_at, psi0, horizon, steps, |_, v| {
        states.push(StateVector::from_unchecked(v.clone()))
    })?;
    let times = (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
    Ok(Trajectory { times, states })
}

/// Final state only.
pub fn evolve<H>(hamiltonian_at: &H, psi0: &StateVector, horizon: f64, steps: usize) -> Result<StateVector>
where
    H: Fn(f64) -> Result<HermitianOperator> + ?Sized,
{
    step_loop(hamiltonian_at, psi0, horizon, steps, |_, _| {}).map(StateVector::from_unchecked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveOptions {
    pub initial_steps: usize,
    /// Accept when doubling the step count moves the figure of merit by less.
    pub tolerance: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            initial_steps: 4096,
            tolerance: 1e-8,
            max_steps: 1 << 21,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Converged {
    pub trajectory: Option<Trajectory>,
    pub state: StateVector,
    pub steps: usize,
    pub value: f64,
    /// `|value(steps) - value(steps / 2)|`.
    pub change: f64,
}

/// Doubles the step count from `opts.initial_steps` until `measure(ψ(T))`
/// changes by less than `opts.tolerance`, returning the finer run.
pub fn evolve_converged<H, M>(
    hamiltonian_at: &H,
    psi0: &StateVector,
    horizon: f64,
    opts: &EvolveOptions,
    measure: M,
    record: bool,
) -> Result<Converged>
where
    H: Fn(f64) -> Result<HermitianOperator> + ?Sized,
    M: Fn(&StateVector) -> Result<f64>,
{
    let run = |steps: usize| -> Result<(StateVector, Option<Trajectory>)> {
        if record {
            let tr = propagate(hamiltonian_at, psi0, horizon, steps)?;
            Ok((tr.final_state().clone(), Some(tr)))
        } else {
            Ok((evolve(hamiltonian_at, psi0, horizon, steps)?, None))
        }
    };
    let mut steps = opts.initial_steps.max(1);
    let (state, _) = run(steps)?;
    let mut prev = measure(&state)?;
    loop {
        let next_steps = steps * 2;
        if next_steps > opts.max_steps {
            return Err(Error::NotConverged {
                steps,
                change: f64::NAN,
            });
        }
        let (state, trajectory) = run(next_steps)?;
        let value = measure(&state)?;
        let change = (value - prev).abs();
        if change < opts.tolerance {
            return Ok(Converged {
                trajectory,
                state,
                steps: next_steps,
                value,
                change,
            });
        }
        if next_steps * 2 > opts.max_steps {
            return Err(Error::NotConverged {
                steps: next_steps,
                change,
            });
        }
        prev = value;
        steps = next_steps;
    }
}

/// `H0(t) + H_cd(t)` for an optional analytic CD variant.
pub fn transfer_hamiltonian(
    spec: &ChainSpec,
    schedule: &Schedule,
    variant: Option<CdVariant>,
) -> impl Fn(f64) -> Result<HermitianOperator> + Send + Sync + 'static {
    let (spec, schedule) = (*spec, *schedule);
    move |t| {
        let h = schedule.eval_hoppings(t)?;
        let h0 = build_h0(&spec, h.t1, h.t2)?;
        match variant {
            None => Ok(h0),
            Some(v) => h0.add(&build_cd(&spec, &schedule, t, v)?.matrix),
        }
    }
}

/// Outcome of one transfer.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub sites: usize,
    pub omega: f64,
    pub horizon: f64,
    pub variant: String,
    pub steps: usize,
    /// `F(T)` against the final zero mode.
    pub final_fidelity: f64,
    pub min_fidelity: f64,
    /// Population of the last site at `T`.
    pub edge_population: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub fidelity: Vec<f64>,
    #[serde(skip)]
    pub probabilities: Vec<Vec<f64>>,
}

impl RunReport {
    /// CSV with columns `t, F, p_1..p_{2N-1}`.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "F".to_string()];
        header.extend((1..=self.sites).map(|j| format!("p_{j}")));
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut rec = vec![fmt_f64(*t), fmt_f64(self.fidelity[k])];
            rec.extend(self.probabilities[k].iter().map(|&p| fmt_f64(p)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn variant_label(variant: Option<CdVariant>) -> String {
    variant.map_or_else(|| "none".to_string(), |v| v.label())
}

/// Starts in the zero mode at `t = 0`, evolves under `H0 (+ H_cd)` to the
/// converged resolution and tracks the fidelity with the instantaneous zero
/// mode.
pub fn transfer_run(
    spec: &ChainSpec,
    schedule: &Schedule,
    variant: Option<CdVariant>,
    opts: &EvolveOptions,
) -> Result<RunReport> {
    let horizon = schedule.horizon();
    let psi0 = zero_mode_at(spec, schedule, 0.0)?;
    let target = zero_mode_at(spec, schedule, horizon)?;
    let ham = transfer_hamiltonian(spec, schedule, variant);
    let conv = evolve_converged(&ham, &psi0, horizon, opts, |s| fidelity(s, &target), true)?;
    let tr = conv.trajectory.expect("recorded run");
    let fidelity_trace = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, s)| fidelity(s, &zero_mode_at(spec, schedule, t)?))
        .collect::<Result<Vec<f64>>>()?;
    let probabilities = tr.site_probabilities();
    Ok(RunReport {
        sites: spec.sites(),
        omega: schedule.omega(),
        horizon,
        variant: variant_label(variant),
        steps: conv.steps,
        final_fidelity: conv.value,
        min_fidelity: fidelity_trace.iter().copied().fold(f64::INFINITY, f64::min),
        edge_population: probabilities.last().map_or(0.0, |p| p[spec.sites() - 1]),
        times: tr.times,
        fidelity: fidelity_trace,
        probabilities,
    })
}

/// `F(T)` only, without recording the trajectory.
pub fn transfer_fidelity(
    spec: &ChainSpec,
    schedule: &Schedule,
    variant: Option<CdVariant>,
    opts: &EvolveOptions,
) -> Result<f64> {
    let horizon = schedule.horizon();
    let psi0 = zero_mode_at(spec, schedule, 0.0)?;
    let target = zero_mode_at(spec, schedule, horizon)?;
    let ham = transfer_hamiltonian(spec, schedule, variant);
    Ok(evolve_converged(&ham, &psi0, horizon, opts, |s| fidelity(s, &target), false)?.value)
}

/// `F(T)` for each rate in `omegas`, computed in parallel, in input order.
pub fn omega_sweep(
    spec: &ChainSpec,
    schedule: &Schedule,
    variant: Option<CdVariant>,
    omegas: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<(f64, f64)>> {
    if omegas.is_empty() {
        return Err(Error::InvalidParameter("Ω list is empty".into()));
    }
    omegas
        .par_iter()
        .map(|&om| {
            let s = schedule.with_omega(om)?;
            Ok((om, transfer_fidelity(spec, &s, variant, opts)?))
        })
        .collect()
}

/// CSV with columns `omega, F`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "F"])?;
    for (om, f) in rows {
        w.write_record([fmt_f64(*om), fmt_f64(*f)])?;
    }
    w.flush()?;
    Ok(())
}
