//! Odd-site SSH chains: geometry, hopping schedules, the zero-energy edge
//! mode and the detuning / disorder perturbations.
//!
//! Sites are 1-based in the physics (site `j`) and 0-based in storage
//! (vector index `j - 1`). Odd sites form sublattice A, even sites
//! sublattice B. Bond `(2j, 2j-1)` carries the intra-cell hopping `t2`,
//! bond `(2j+1, 2j)` the inter-cell hopping `t1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, C64};
use crate::seeds;

/// Chain geometry: `n_cells` unit cells give `2 n_cells - 1` sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_cells: usize,
    t0: f64,
    lambda_sum: f64,
}

impl ChainSpec {
    pub fn new(n_cells: usize, t0: f64, lambda_sum: f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "chain needs at least 2 unit cells, got {n_cells}"
            )));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
        }
        if !(lambda_sum > 0.0 && lambda_sum.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hopping sum must be positive, got {lambda_sum}"
            )));
        }
        Ok(Self {
            n_cells,
            t0,
            lambda_sum,
        })
    }

    /// Spec matching a schedule: same `t0`, and `Λ` from the schedule when it
    /// belongs to the constant-sum family (`t0` otherwise).
    pub fn for_schedule(n_cells: usize, schedule: &Schedule) -> Result<Self> {
        let lambda = schedule.lambda_sum().unwrap_or(schedule.t0());
        Self::new(n_cells, schedule.t0(), lambda)
    }

    /// Spec from an odd site count.
    pub fn from_sites(sites: usize, schedule: &Schedule) -> Result<Self> {
        if sites < 3 || sites % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "site count must be odd and at least 3, got {sites}"
            )));
        }
        Self::for_schedule((sites + 1) / 2, schedule)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn sites(&self) -> usize {
        2 * self.n_cells - 1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn lambda_sum(&self) -> f64 {
        self.lambda_sum
    }

    /// 0-based index of the right edge site `2N - 1`.
    pub fn right_edge(&self) -> usize {
        self.sites() - 1
    }
}

/// Time parameterization of the two hoppings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `t1,2 = t0 (1 ± cos Ωt)`, `T = π/Ω`.
    CosineRamp { omega: f64 },
    /// `t1 = t0 P(t/T)`, `t2 = t0 (1 - P(t/T))`, `P(x) = 2x³ - 3x² + 1`.
    CubicPoly { horizon: f64 },
    /// `t1 = t0 cos(Ωt/2)`, `t2 = t0 sin(Ωt/2)`, `T = π/Ω`.
    TrigHalfAngle { omega: f64 },
}

/// Hopping values and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hoppings {
    pub t1: f64,
    pub t2: f64,
    /// Control parameter, `λ = t1`.
    pub lambda: f64,
    /// `dλ/dt = dt1/dt`.
    pub lambda_dot: f64,
    pub t2_dot: f64,
}

impl Hoppings {
    pub fn t1_dot(&self) -> f64 {
        self.lambda_dot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub t0: f64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("t0 must be positive, got {t0}")));
        }
        let rate = match kind {
            ScheduleKind::CosineRamp { omega } | ScheduleKind::TrigHalfAngle { omega } => omega,
            ScheduleKind::CubicPoly { horizon } => horizon,
        };
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "schedule rate/horizon must be positive, got {rate}"
            )));
        }
        Ok(Self { kind, t0 })
    }

    pub fn cosine(omega: f64, t0: f64) -> Result<Self> {
        Self::new(ScheduleKind::CosineRamp { omega }, t0)
    }

    pub fn cubic(horizon: f64, t0: f64) -> Result<Self> {
        Self::new(ScheduleKind::CubicPoly { horizon }, t0)
    }

    pub fn trig(omega: f64, t0: f64) -> Result<Self> {
        Self::new(ScheduleKind::TrigHalfAngle { omega }, t0)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Transfer time `T`.
    pub fn horizon(&self) -> f64 {
        match self.kind {
            ScheduleKind::CosineRamp { omega } | ScheduleKind::TrigHalfAngle { omega } => {
                PI / omega
            }
            ScheduleKind::CubicPoly { horizon } => horizon,
        }
    }

    /// Angular rate; for the polynomial ramp the equivalent `π/T`.
    pub fn omega(&self) -> f64 {
        match self.kind {
            ScheduleKind::CosineRamp { omega } | ScheduleKind::TrigHalfAngle { omega } => omega,
            ScheduleKind::CubicPoly { horizon } => PI / horizon,
        }
    }

    /// Same kind and `t0` at rate `omega`; the polynomial ramp gets `T = π/Ω`.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        let kind = match self.kind {
            ScheduleKind::CosineRamp { .. } => ScheduleKind::CosineRamp { omega },
            ScheduleKind::TrigHalfAngle { .. } => ScheduleKind::TrigHalfAngle { omega },
            ScheduleKind::CubicPoly { .. } => ScheduleKind::CubicPoly {
                horizon: PI / omega,
            },
        };
        Self::new(kind, self.t0)
    }

    /// Constant `Λ = t1 + t2`, when the schedule has one.
    pub fn lambda_sum(&self) -> Option<f64> {
        match self.kind {
            ScheduleKind::CosineRamp { .. } => Some(2.0 * self.t0),
            ScheduleKind::CubicPoly { .. } => Some(self.t0),
            ScheduleKind::TrigHalfAngle { .. } => None,
        }
    }

    /// Evaluates `(t1, t2, λ, λ̇)` at time `t`.
    pub fn eval_hoppings(&self, t: f64) -> Result<Hoppings> {
        let horizon = self.horizon();
        let slack = 1e-12 * horizon.max(1.0);
        if !(t >= -slack && t <= horizon + slack) {
            return Err(Error::Domain { t, horizon });
        }
        let t = t.clamp(0.0, horizon);
        let t0 = self.t0;
        let (t1, t2, t1_dot, t2_dot) = match self.kind {
            ScheduleKind::CosineRamp { omega } => {
                let (s, c) = (omega * t).sin_cos();
                (
                    t0 * (1.0 + c),
                    t0 * (1.0 - c),
                    -omega * t0 * s,
                    omega * t0 * s,
                )
            }
            ScheduleKind::CubicPoly { horizon } => {
                let x = t / horizon;
                let p = 2.0 * x * x * x - 3.0 * x * x + 1.0;
                let dp = (6.0 * x * x - 6.0 * x) / horizon;
                // 1 - P written out so it stays non-negative under rounding
                (t0 * p, t0 * x * x * (3.0 - 2.0 * x), t0 * dp, -t0 * dp)
            }
            ScheduleKind::TrigHalfAngle { omega } => {
                let (s, c) = (0.5 * omega * t).sin_cos();
                (t0 * c, t0 * s, -0.5 * omega * t0 * s, 0.5 * omega * t0 * c)
            }
        };
        Ok(Hoppings {
            t1,
            t2,
            lambda: t1,
            lambda_dot: t1_dot,
            t2_dot,
        })
    }

    /// `(∂t1/∂λ, ∂t2/∂λ)` at time `t`. For the half-angle schedule
    /// `∂t2/∂λ = -t1/t2`, which diverges at `t = 0`; `None` is returned there.
    pub fn lambda_partials(&self, t: f64) -> Result<Option<(f64, f64)>> {
        let h = self.eval_hoppings(t)?;
        Ok(match self.kind {
            ScheduleKind::CosineRamp { .. } | ScheduleKind::CubicPoly { .. } => Some((1.0, -1.0)),
            ScheduleKind::TrigHalfAngle { .. } => {
                if h.t2 <= 1e-300 {
                    None
                } else {
                    Some((1.0, -h.t1 / h.t2))
                }
            }
        })
    }
}

/// Real symmetric SSH hopping matrix.
pub fn hopping_matrix(spec: &ChainSpec, t1: f64, t2: f64) -> DMatrix<f64> {
    let m = spec.sites();
    let mut h = DMatrix::zeros(m, m);
    for j in 1..spec.n_cells() {
        // (2j, 2j-1) intra-cell, (2j+1, 2j) inter-cell; 1-based
        let (a, b) = (2 * j - 1, 2 * j - 2);
        h[(a, b)] = t2;
        h[(b, a)] = t2;
        let (a, b) = (2 * j, 2 * j - 1);
        h[(a, b)] = t1;
        h[(b, a)] = t1;
    }
    h
}

/// Reference Hamiltonian `H0(t1, t2)`.
pub fn build_h0(spec: &ChainSpec, t1: f64, t2: f64) -> Result<HermitianOperator> {
    if !t1.is_finite() || !t2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "hoppings must be finite, got ({t1}, {t2})"
        )));
    }
    HermitianOperator::from_real(&hopping_matrix(spec, t1, t2))
}

/// The zero-energy eigenstate of `H0(t1, t2)`.
///
/// Amplitudes on sublattice A follow `(-t2)^(i-1) t1^(N-i)`, the
/// homogeneous form of `(-t2/t1)^(i-1)`, which stays finite at `t1 = 0`.
/// Sublattice B amplitudes are exactly zero.
pub fn zero_mode(spec: &ChainSpec, t1: f64, t2: f64) -> Result<StateVector> {
    let scale = t1.abs().max(t2.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "zero mode undefined for t1 = {t1}, t2 = {t2}"
        )));
    }
    let (u1, u2) = (t1 / scale, t2 / scale);
    let n = spec.n_cells();
    let mut amps = DVector::from_element(spec.sites(), C64::new(0.0, 0.0));
    for i in 1..=n {
        let a = (-u2).powi(i as i32 - 1) * u1.powi((n - i) as i32);
        amps[2 * i - 2] = C64::new(a, 0.0);
    }
    let norm = amps.norm();
    StateVector::new(amps / C64::new(norm, 0.0))
}

/// Zero mode at time `t` of a schedule.
pub fn zero_mode_at(spec: &ChainSpec, schedule: &Schedule, t: f64) -> Result<StateVector> {
    let h = schedule.eval_hoppings(t)?;
    zero_mode(spec, h.t1, h.t2)
}

/// Time profile of the staggered Rice-Mele term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// `Δ(t) = δ`.
    Constant,
    /// `Δ(t) = δ sin Ωt`.
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    pub delta_mode: DeltaMode,
    /// Staggered amplitude `δ`.
    pub delta: f64,
    /// On-site disorder half-width `σ_δ`.
    pub sigma_delta: f64,
    /// Hopping disorder half-width `σ_τ`.
    pub sigma_tau: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl DisorderConfig {
    pub fn none() -> Self {
        Self {
            delta_mode: DeltaMode::Constant,
            delta: 0.0,
            sigma_delta: 0.0,
            sigma_tau: 0.0,
            n_samples: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_delta >= 0.0) || !(self.sigma_tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "disorder widths must be non-negative, got σ_δ = {}, σ_τ = {}",
                self.sigma_delta, self.sigma_tau
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter("δ must be finite".into()));
        }
        if self.n_samples < 1 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// One quenched realization of the detuning and disorder terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    sites: usize,
    delta_mode: DeltaMode,
    delta: f64,
    omega: f64,
    /// `δ_j`, one per site.
    pub onsite: Vec<f64>,
    /// `τ_j`, one per nearest-neighbour bond `(j+1, j)`.
    pub hopping: Vec<f64>,
}

impl Perturbation {
    /// Staggered potential `Δ(t)`.
    pub fn staggered(&self, t: f64) -> f64 {
        match self.delta_mode {
            DeltaMode::Constant => self.delta,
            DeltaMode::Sine => self.delta * (self.omega * t).sin(),
        }
    }

    /// Diagonal part `Σ [(-1)^(j-1) Δ(t) + δ_j] |j><j|`.
    pub fn diag_at(&self, t: f64) -> HermitianOperator {
        let d = self.staggered(t);
        let diag = DVector::from_fn(self.sites, |k, _| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(sign * d + self.onsite[k], 0.0)
        });
        HermitianOperator::new(nalgebra::DMatrix::from_diagonal(&diag))
            .expect("diagonal real matrix is Hermitian")
    }

    /// Nearest-neighbour hopping disorder `Σ τ_j |j+1><j| + h.c.`.
    pub fn offdiag(&self) -> HermitianOperator {
        let mut m = DMatrix::zeros(self.sites, self.sites);
        for (k, &tau) in self.hopping.iter().enumerate() {
            m[(k + 1, k)] = tau;
            m[(k, k + 1)] = tau;
        }
        HermitianOperator::from_real(&m).expect("real symmetric matrix is Hermitian")
    }

    pub fn is_zero(&self) -> bool {
        self.delta == 0.0
            && self.onsite.iter().all(|&x| x == 0.0)
            && self.hopping.iter().all(|&x| x == 0.0)
    }
}

/// Draws one realization: `δ_j ~ U[-σ_δ, σ_δ]`, `τ_j ~ U[-σ_τ, σ_τ]`, held
/// fixed in time. `omega` sets the rate of the sine-modulated stagger.
pub fn build_perturbations<R: Rng + ?Sized>(
    spec: &ChainSpec,
    cfg: &DisorderConfig,
    omega: f64,
    rng: &mut R,
) -> Result<Perturbation> {
    cfg.validate()?;
    let sites = spec.sites();
    let mut uniform = |width: f64| width * (2.0 * rng.random::<f64>() - 1.0);
    let onsite = (0..sites).map(|_| uniform(cfg.sigma_delta)).collect();
    let hopping = (0..sites - 1).map(|_| uniform(cfg.sigma_tau)).collect();
    Ok(Perturbation {
        sites,
        delta_mode: cfg.delta_mode,
        delta: cfg.delta,
        omega,
        onsite,
        hopping,
    })
}

/// Realization number `sample` of a configuration, on its own RNG stream.
pub fn sample_perturbation(
    spec: &ChainSpec,
    cfg: &DisorderConfig,
    omega: f64,
    sample: u64,
) -> Result<Perturbation> {
    let mut rng = seeds::rng_at(cfg.seed, &[sample]);
    build_perturbations(spec, cfg, omega, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(n: usize) -> ChainSpec {
        ChainSpec::new(n, 1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_small_chains_and_bad_energies() {
        assert!(ChainSpec::new(1, 1.0, 2.0).is_err());
        assert!(ChainSpec::new(3, 0.0, 2.0).is_err());
        assert!(ChainSpec::new(3, 1.0, -1.0).is_err());
        assert_eq!(spec(3).sites(), 5);
        assert_eq!(spec(8).sites(), 15);
    }

    #[test]
    fn cosine_ramp_endpoints_and_midpoint() {
        let s = Schedule::cosine(1.0, 1.0).unwrap();
        let h = s.eval_hoppings(0.0).unwrap();
        assert_eq!((h.t1, h.t2, h.lambda, h.lambda_dot), (2.0, 0.0, 2.0, 0.0));
        let h = s.eval_hoppings(PI / 2.0).unwrap();
        assert_relative_eq!(h.t1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(h.t2, 1.0, epsilon = 1e-15);
        assert_relative_eq!(h.lambda, 1.0, epsilon = 1e-15);
        assert_relative_eq!(h.lambda_dot, -1.0, epsilon = 1e-15);
        let h = s.eval_hoppings(s.horizon()).unwrap();
        assert!(h.t1.abs() < 1e-15);
    }

    #[test]
    fn trig_half_angle_midpoint() {
        let s = Schedule::trig(1.0, 1.0).unwrap();
        let h = s.eval_hoppings(PI / 2.0).unwrap();
        let r = 2f64.sqrt() / 2.0;
        assert_relative_eq!(h.t1, r, epsilon = 1e-15);
        assert_relative_eq!(h.t2, r, epsilon = 1e-15);
    }

    #[test]
    fn outside_window_is_domain_error() {
        let s = Schedule::cosine(1.0, 1.0).unwrap();
        assert!(matches!(s.eval_hoppings(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(s.eval_hoppings(4.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn lambda_sum_identities() {
        let c = Schedule::cosine(0.7, 1.3).unwrap();
        let p = Schedule::cubic(2.5, 0.8).unwrap();
        for k in 0..=50 {
            let h = c.eval_hoppings(c.horizon() * k as f64 / 50.0).unwrap();
            assert_relative_eq!(h.t1 + h.t2, 2.6, epsilon = 1e-14);
            let h = p.eval_hoppings(p.horizon() * k as f64 / 50.0).unwrap();
            assert_relative_eq!(h.t1 + h.t2, 0.8, epsilon = 1e-14);
        }
        let q = Schedule::trig(1.1, 1.5).unwrap();
        for k in 0..=50 {
            let h = q.eval_hoppings(q.horizon() * k as f64 / 50.0).unwrap();
            assert_relative_eq!(h.t1 * h.t1 + h.t2 * h.t2, 2.25, epsilon = 1e-13);
            assert!(h.t1 >= 0.0 && h.t2 >= 0.0);
        }
    }

    #[test]
    fn lambda_dot_matches_central_differences() {
        let h = 1e-5;
        for s in [
            Schedule::cosine(1.0, 1.0).unwrap(),
            Schedule::cosine(0.3, 2.0).unwrap(),
            Schedule::cubic(3.0, 1.0).unwrap(),
            Schedule::trig(1.0, 1.0).unwrap(),
        ] {
            for k in 1..=20 {
                let t = s.horizon() * k as f64 / 21.0;
                let fd = (s.eval_hoppings(t + h).unwrap().lambda
                    - s.eval_hoppings(t - h).unwrap().lambda)
                    / (2.0 * h);
                let an = s.eval_hoppings(t).unwrap().lambda_dot;
                assert!((fd - an).abs() < 1e-6, "{s:?} t={t}: fd {fd} vs {an}");
                let fd2 = (s.eval_hoppings(t + h).unwrap().t2
                    - s.eval_hoppings(t - h).unwrap().t2)
                    / (2.0 * h);
                assert!((fd2 - s.eval_hoppings(t).unwrap().t2_dot).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn h0_bond_pattern() {
        let s = spec(3);
        let h = hopping_matrix(&s, 0.7, 0.3);
        let expected = [((1, 2), 0.3), ((2, 3), 0.7), ((3, 4), 0.3), ((4, 5), 0.7)];
        for i in 1..=5 {
            for j in 1..=5 {
                let want = expected
                    .iter()
                    .find(|((a, b), _)| (*a, *b) == (i, j) || (*b, *a) == (i, j))
                    .map(|(_, v)| *v)
                    .unwrap_or(0.0);
                assert_eq!(h[(i - 1, j - 1)], want, "entry ({i},{j})");
            }
        }
        // t1 = 0 decouples the last site
        let h = hopping_matrix(&s, 0.0, 1.0);
        assert!(h.row(4).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn h0_spectrum_is_chiral_with_single_zero() {
        let s = spec(3);
        let vals = build_h0(&s, 1.0, 1.0).unwrap().eigenvalues();
        // dense eigensolve of the 5-site chain with unit hoppings: 0, ±1, ±√3
        let want = [-(3f64.sqrt()), -1.0, 0.0, 1.0, 3f64.sqrt()];
        for (a, b) in vals.iter().zip(want) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_mode_examples() {
        let s = spec(3);
        let v = zero_mode(&s, 2.0, 1.0).unwrap();
        let n = 21f64.sqrt();
        let want = [4.0 / n, 0.0, -2.0 / n, 0.0, 1.0 / n];
        for (a, b) in v.amplitudes().iter().zip(want) {
            assert_relative_eq!(a.re, b, epsilon = 1e-14);
            assert_eq!(a.im, 0.0);
        }
        let v = zero_mode(&s, 1.0, 0.0).unwrap();
        assert_eq!(v.amplitudes()[0].re, 1.0);
        let v = zero_mode(&s, 0.0, 3.0).unwrap();
        assert_eq!(v.amplitudes()[4].re.abs(), 1.0);
        assert!(v.amplitudes().iter().take(4).all(|z| z.norm() == 0.0));
        assert!(matches!(zero_mode(&s, 0.0, 0.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn zero_mode_survives_extreme_ratios() {
        let s = spec(8);
        let v = zero_mode(&s, 1e-200, 1.0).unwrap();
        assert!((v.amplitudes().norm() - 1.0).abs() < 1e-12);
        let v = zero_mode(&s, 1e150, 1e-150).unwrap();
        assert!((v.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbation_examples() {
        let s = spec(3);
        let mut rng = seeds::rng(1);
        let p = build_perturbations(&s, &DisorderConfig::none(), 1.0, &mut rng).unwrap();
        assert!(p.diag_at(0.3).is_zero());
        assert!(p.offdiag().is_zero());

        let cfg = DisorderConfig {
            delta: 0.1,
            ..DisorderConfig::none()
        };
        let p = build_perturbations(&s, &cfg, 1.0, &mut rng).unwrap();
        let d = p.diag_at(0.7);
        let want = [0.1, -0.1, 0.1, -0.1, 0.1];
        for (k, w) in want.iter().enumerate() {
            assert_relative_eq!(d.matrix()[(k, k)].re, *w, epsilon = 1e-15);
        }
    }

    #[test]
    fn sine_stagger_follows_the_ramp() {
        let s = spec(3);
        let cfg = DisorderConfig {
            delta_mode: DeltaMode::Sine,
            delta: 0.2,
            ..DisorderConfig::none()
        };
        let p = sample_perturbation(&s, &cfg, 1.0, 0).unwrap();
        assert_relative_eq!(p.staggered(PI / 2.0), 0.2, epsilon = 1e-15);
        assert!(p.staggered(0.0).abs() < 1e-15);
    }

    #[test]
    fn disorder_is_seeded_and_bounded() {
        let s = spec(4);
        let cfg = DisorderConfig {
            sigma_delta: 0.05,
            sigma_tau: 0.02,
            seed: 99,
            n_samples: 10,
            ..DisorderConfig::none()
        };
        let a = sample_perturbation(&s, &cfg, 1.0, 3).unwrap();
        let b = sample_perturbation(&s, &cfg, 1.0, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_perturbation(&s, &cfg, 1.0, 4).unwrap();
        assert_ne!(a, c);
        assert!(a.onsite.iter().all(|x| x.abs() <= 0.05));
        assert!(a.hopping.iter().all(|x| x.abs() <= 0.02));
        assert_eq!(a.hopping.len(), 6);
        let bad = DisorderConfig {
            sigma_tau: -1.0,
            ..cfg
        };
        assert!(sample_perturbation(&s, &bad, 1.0, 0).is_err());
    }
}
