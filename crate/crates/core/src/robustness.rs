//! Transfer fidelity under Rice-Mele detuning and quenched disorder.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    build_h0, sample_perturbation, zero_mode_at, ChainSpec, DeltaMode, DisorderConfig, Perturbation,
    Schedule,
};
use crate::dynamics::{evolve_converged, fidelity, EvolveOptions};
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::gauge::{build_cd, CdOperator, CdVariant};
use crate::operator::HermitianOperator;
use crate::pauli::KappaSchedule;
use crate::seeds;
use crate::variational::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Staggered potential `δ`, constant in time.
    RiceMeleConstant,
    /// Staggered potential `δ sin Ωt`.
    RiceMeleSine,
    /// On-site disorder width `σ_δ`.
    DiagonalDisorder,
    /// Hopping disorder width `σ_τ`.
    HoppingDisorder,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "delta" | "rice-mele" | "rice-mele-constant" => Ok(SweepAxis::RiceMeleConstant),
            "delta-sine" | "rice-mele-sine" => Ok(SweepAxis::RiceMeleSine),
            "sigma-delta" | "diagonal" => Ok(SweepAxis::DiagonalDisorder),
            "sigma-tau" | "hopping" => Ok(SweepAxis::HoppingDisorder),
            other => Err(Error::InvalidParameter(format!(
                "unknown axis `{other}` (delta, delta-sine, sigma-delta, sigma-tau)"
            ))),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, SweepAxis::DiagonalDisorder | SweepAxis::HoppingDisorder)
    }

    /// Perturbation settings for strength `value`.
    pub fn config(&self, value: f64, seed: u64) -> DisorderConfig {
        let base = DisorderConfig {
            seed,
            ..DisorderConfig::none()
        };
        match self {
            SweepAxis::RiceMeleConstant => DisorderConfig { delta: value, ..base },
            SweepAxis::RiceMeleSine => DisorderConfig {
                delta_mode: DeltaMode::Sine,
                delta: value,
                ..base
            },
            SweepAxis::DiagonalDisorder => DisorderConfig {
                sigma_delta: value,
                ..base
            },
            SweepAxis::HoppingDisorder => DisorderConfig {
                sigma_tau: value,
                ..base
            },
        }
    }
}

/// Where the CD driving comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CdSource {
    Analytic { variant: CdVariant },
    /// A sampled NNN schedule, linearly interpolated in time.
    FixedKappa { kappa: KappaSchedule, h0_on: bool },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub cd_source: CdSource,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sweep values must be finite".into()));
        }
        if self.axis.is_random() && self.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("disorder widths must be non-negative".into()));
        }
        if self.n_samples < 1 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Samples actually drawn per value: one on the deterministic axes.
    pub fn effective_samples(&self) -> usize {
        if self.axis.is_random() {
            self.n_samples
        } else {
            1
        }
    }
}

/// Integrator settings for Monte-Carlo runs, where the sampling error
/// dominates the step-size error long before `1e-8`.
pub fn sweep_options() -> EvolveOptions {
    EvolveOptions {
        initial_steps: 1024,
        tolerance: 1e-6,
        ..EvolveOptions::default()
    }
}

fn check_source(spec: &ChainSpec, source: &CdSource) -> Result<()> {
    if let CdSource::FixedKappa { kappa, .. } = source {
        kappa.validate()?;
        if kappa.n_bonds() != spec.n_cells() - 1 {
            return Err(Error::DimensionMismatch {
                expected: spec.n_cells() - 1,
                found: kappa.n_bonds(),
            });
        }
    }
    Ok(())
}

/// `F(T)` under `H' = H0 + H_cd + H_diag(t) + H_offdiag` for one realization.
pub fn perturbed_run(
    spec: &ChainSpec,
    schedule: &Schedule,
    source: &CdSource,
    perturbation: &Perturbation,
    opts: &EvolveOptions,
) -> Result<f64> {
    check_source(spec, source)?;
    let horizon = schedule.horizon();
    let psi0 = zero_mode_at(spec, schedule, 0.0)?;
    let target = zero_mode_at(spec, schedule, horizon)?;
    let offdiag = perturbation.offdiag();
    let static_part = if perturbation.is_zero() { None } else { Some(offdiag) };
    let ham = |t: f64| -> Result<HermitianOperator> {
        let h = schedule.eval_hoppings(t)?;
        let mut total = match source {
            CdSource::FixedKappa { h0_on: false, .. } => HermitianOperator::zeros(spec.sites()),
            _ => build_h0(spec, h.t1, h.t2)?,
        };
        match source {
            CdSource::Analytic { variant } => {
                total = total.add(&build_cd(spec, schedule, t, *variant)?.matrix)?;
            }
            CdSource::FixedKappa { kappa, .. } => {
                let k = kappa.interpolate(t, horizon);
                total = total.add(&CdOperator::nnn_a(spec.sites(), &k)?.matrix)?;
            }
            CdSource::None => {}
        }
        if let Some(off) = &static_part {
            total = total.add(off)?.add(&perturbation.diag_at(t))?;
        }
        Ok(total)
    };
    Ok(evolve_converged(&ham, &psi0, horizon, opts, |s| fidelity(s, &target), false)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    pub n_samples: usize,
}

/// Mean and population standard deviation of `F(T)` per sweep value.
/// Sample `s` of value `v` draws its disorder from the stream at
/// `(seed, v, s)`; all runs execute in parallel and are merged by index.
pub fn disorder_sweep(
    spec: &ChainSpec,
    schedule: &Schedule,
    sweep: &SweepSpec,
    opts: &EvolveOptions,
) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    check_source(spec, &sweep.cd_source)?;
    let per = sweep.effective_samples();
    let omega = schedule.omega();
    let jobs: Vec<(usize, usize)> = (0..sweep.values.len())
        .flat_map(|v| (0..per).map(move |s| (v, s)))
        .collect();
    let fids = jobs
        .par_iter()
        .map(|&(v, s)| {
            let cfg = sweep
                .axis
                .config(sweep.values[v], seeds::derive(sweep.seed, &[v as u64]));
            let p = sample_perturbation(spec, &cfg, omega, s as u64)?;
            perturbed_run(spec, schedule, &sweep.cd_source, &p, opts)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(sweep
        .values
        .iter()
        .enumerate()
        .map(|(v, &value)| {
            let (mean, std) = mean_std(&fids[v * per..(v + 1) * per]);
            SweepRow {
                value,
                mean,
                std,
                n_samples: per,
            }
        })
        .collect())
}

/// CSV with columns `value, mean_F, std_F, n_samples`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value", "mean_F", "std_F", "n_samples"])?;
    for r in rows {
        w.write_record([
            fmt_f64(r.value),
            fmt_f64(r.mean),
            fmt_f64(r.std),
            r.n_samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
