//! Qubit encoding of the chain: padding to `2^n`, Pauli decompositions and
//! the first-order Trotter emulation of the digitized protocol.
//!
//! Site `j` (1-based) is the computational basis state `|j - 1>`. In labels
//! the leftmost letter acts on the most significant qubit.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{hopping_matrix, ChainSpec, Schedule};
use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::operator::{unitary_exp, CMatrix, CVector, HermitianOperator, C64};

/// Coefficients below this magnitude are dropped from term lists.
pub const PRUNE: f64 = 1e-12;

/// Smallest `n` with `2^n >= dim`.
pub fn qubits_for(dim: usize) -> usize {
    dim.next_power_of_two().trailing_zeros() as usize
}

/// A tensor product of single-qubit Paulis, stored as bit masks: bit `q` of
/// `x` / `z` is set when qubit `q` carries X / Z (both for Y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    pub n: usize,
    pub x: u32,
    pub z: u32,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0 }
    }

    pub fn parse(label: &str) -> Result<Self> {
        let n = label.chars().count();
        if n > 16 {
            return Err(Error::InvalidParameter(format!("label `{label}` too long")));
        }
        let (mut x, mut z) = (0u32, 0u32);
        for (pos, ch) in label.chars().enumerate() {
            let bit = 1u32 << (n - 1 - pos);
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "bad Pauli letter `{ch}` in `{label}`"
                    )))
                }
            }
        }
        Ok(Self { n, x, z })
    }

    pub fn letter(&self, qubit: usize) -> char {
        match ((self.x >> qubit) & 1, (self.z >> qubit) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }

    pub fn label(&self) -> String {
        (0..self.n).rev().map(|q| self.letter(q)).collect()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `P |b> = phase(b) |b ^ x>`.
    pub fn phase(&self, b: usize) -> C64 {
        let sign = if ((b as u32) & self.z).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let i_pow = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ][(self.y_count() % 4) as usize];
        i_pow * sign
    }

    pub fn matrix(&self) -> CMatrix {
        let d = 1usize << self.n;
        let mut m = CMatrix::zeros(d, d);
        for b in 0..d {
            m[(b ^ self.x as usize, b)] = self.phase(b);
        }
        m
    }

    /// `self ⊗ other`, with `self` on the high qubits.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        PauliString {
            n: self.n + other.n,
            x: (self.x << other.n) | other.x,
            z: (self.z << other.n) | other.z,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub string: PauliString,
    pub coefficient: f64,
}

impl PauliTerm {
    pub fn label(&self) -> String {
        self.string.label()
    }
}

/// A Hamiltonian embedded in the top-left block of a `2^n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedOperator {
    pub n_qubits: usize,
    pub matrix: HermitianOperator,
}

pub fn pad(h: &HermitianOperator) -> PaddedOperator {
    let n_qubits = qubits_for(h.dim());
    let d = 1usize << n_qubits;
    let mut m = CMatrix::zeros(d, d);
    m.view_mut((0, 0), (h.dim(), h.dim())).copy_from(h.matrix());
    PaddedOperator {
        n_qubits,
        matrix: HermitianOperator::new(m).expect("padding preserves Hermiticity"),
    }
}

fn sort_terms(mut terms: Vec<PauliTerm>) -> Vec<PauliTerm> {
    terms.sort_by(|a, b| a.label().cmp(&b.label()));
    terms
}

/// All `4^n` projections `tr(P H) / 2^n`, pruned.
pub fn decompose_brute(h: &PaddedOperator) -> Vec<PauliTerm> {
    let n = h.n_qubits;
    let d = 1usize << n;
    let m = h.matrix.matrix();
    let mut terms = Vec::new();
    for x in 0..d as u32 {
        for z in 0..d as u32 {
            let p = PauliString { n, x, z };
            // tr(P H) = Σ_b phase(b) H[b, b ^ x]
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..d {
                acc += p.phase(b) * m[(b, b ^ x as usize)];
            }
            let c = acc.re / d as f64;
            if c.abs() >= PRUNE {
                terms.push(PauliTerm {
                    string: p,
                    coefficient: c,
                });
            }
        }
    }
    sort_terms(terms)
}

/// `Σ c_k P_k` as a dense matrix.
pub fn reconstruct(n_qubits: usize, terms: &[PauliTerm]) -> CMatrix {
    let d = 1usize << n_qubits;
    let mut m = CMatrix::zeros(d, d);
    for t in terms {
        for b in 0..d {
            m[(b ^ t.string.x as usize, b)] += t.string.phase(b) * t.coefficient;
        }
    }
    m
}

/// A sparse linear combination of Pauli strings on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
struct PauliSum {
    n: usize,
    terms: BTreeMap<(u32, u32), f64>,
}

impl PauliSum {
    fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    fn identity(n: usize) -> Self {
        let mut s = Self::zero(n);
        s.terms.insert((0, 0), 1.0);
        s
    }

    /// `(I + s Z) / 2`: projector on bit 0 (`s = 1`) or bit 1 (`s = -1`).
    fn projector(bit: u32) -> Self {
        let mut s = Self::zero(1);
        s.terms.insert((0, 0), 0.5);
        s.terms.insert((0, 1), if bit == 0 { 0.5 } else { -0.5 });
        s
    }

    fn add_assign(&mut self, other: &PauliSum) {
        debug_assert_eq!(self.n, other.n);
        for (k, v) in &other.terms {
            *self.terms.entry(*k).or_insert(0.0) += v;
        }
    }

    fn tensor(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero(self.n + other.n);
        for (&(xa, za), &ca) in &self.terms {
            for (&(xb, zb), &cb) in &other.terms {
                let key = ((xa << other.n) | xb, (za << other.n) | zb);
                *out.terms.entry(key).or_insert(0.0) += ca * cb;
            }
        }
        out
    }

    fn scaled(mut self, f: f64) -> PauliSum {
        for v in self.terms.values_mut() {
            *v *= f;
        }
        self
    }

    fn into_terms(self) -> Vec<PauliTerm> {
        let n = self.n;
        sort_terms(
            self.terms
                .into_iter()
                .filter(|(_, c)| c.abs() >= PRUNE)
                .map(|((x, z), c)| PauliTerm {
                    string: PauliString { n, x, z },
                    coefficient: c,
                })
                .collect(),
        )
    }
}

/// Projector onto `width`-bit integers `u < bound`, built from the binary
/// digits of `bound`; `bound = 2^width` collapses to the identity string.
fn prefix_below(bound: usize, width: usize) -> PauliSum {
    if bound >= 1usize << width {
        return PauliSum::identity(width);
    }
    if bound == 0 {
        return PauliSum::zero(width);
    }
    let half = 1usize << (width - 1);
    if bound <= half {
        PauliSum::projector(0).tensor(&prefix_below(bound, width - 1))
    } else {
        let mut s = PauliSum::projector(0).tensor(&PauliSum::identity(width - 1));
        s.add_assign(&PauliSum::projector(1).tensor(&prefix_below(bound - half, width - 1)));
        s
    }
}

/// Projector onto the single `width`-bit integer `u`.
fn exact(u: usize, width: usize) -> PauliSum {
    (0..width).rev().fold(PauliSum::identity(0), |acc, q| {
        acc.tensor(&PauliSum::projector(((u >> q) & 1) as u32))
    })
}

/// Skew-diagonal sums on `m` qubits: every X/Y string with an even (`odd =
/// false`) or odd number of Y, coefficient `γ / 2^(m-1)`,
/// `γ = (-1)^(⌊n_Y/2⌋ + ñ_Y)` with `ñ_Y` the Y count in the rightmost
/// `m - 1` letters.
///
/// Even: `|01..1><10..0| + h.c.`. Odd: `i (|10..0><01..1| - h.c.)`.
fn skew(m: usize, odd: bool) -> PauliSum {
    let mut s = PauliSum::zero(m);
    let full = (1u32 << m) - 1;
    let low = (1u32 << (m - 1)) - 1;
    for ymask in 0..=full {
        let n_y = ymask.count_ones();
        if (n_y % 2 == 1) != odd {
            continue;
        }
        let tilde = (ymask & low).count_ones();
        let gamma = if (n_y / 2 + tilde) % 2 == 0 { 1.0 } else { -1.0 };
        s.terms
            .insert((full, ymask), gamma / (1u64 << (m - 1)) as f64);
    }
    s
}

/// Closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuredPart {
    /// Intra-cell bonds, scaled by `t2`.
    Ht2,
    /// Inter-cell bonds, scaled by `t1`.
    Ht1,
    /// Unit NNN couplings on every odd-odd distance-2 bond.
    KappaPattern,
    /// Staggered potential `(-1)^(j-1)` per unit `Δ`.
    RiceMele,
}

fn check_cells(spec: &ChainSpec) -> Result<()> {
    if !(2..=8).contains(&spec.n_cells()) {
        return Err(Error::UnsupportedChain(spec.n_cells()));
    }
    Ok(())
}

fn ht2_sum(spec: &ChainSpec) -> PauliSum {
    let n = qubits_for(spec.sites());
    let mut x = PauliSum::zero(1);
    x.terms.insert((1, 0), 1.0);
    prefix_below(spec.n_cells() - 1, n - 1).tensor(&x)
}

fn ht1_sum(spec: &ChainSpec) -> PauliSum {
    let n = qubits_for(spec.sites());
    let top = 2 * spec.n_cells() - 2;
    let mut s = PauliSum::zero(n);
    for m in 2..=n {
        let low = 1usize << (m - 1);
        let count = if low > top { 0 } else { (top - low) / (1 << m) + 1 };
        if count > 0 {
            s.add_assign(&prefix_below(count, n - m).tensor(&skew(m, false)));
        }
    }
    s
}

/// Terms of the single bond `κ_{2b+1, 2b-1}`, `b = 1..N-1`, per unit `κ`.
fn bond_sum(spec: &ChainSpec, bond: usize) -> Result<PauliSum> {
    let n = qubits_for(spec.sites());
    if bond == 0 || bond >= spec.n_cells() {
        return Err(Error::IndexOutOfRange {
            index: bond,
            dim: spec.n_cells() - 1,
        });
    }
    let u = bond - 1;
    let m = u.trailing_ones() as usize + 1;
    Ok(exact(u >> m, n - 1 - m)
        .tensor(&skew(m, true))
        .tensor(&PauliSum::projector(0)))
}

fn kappa_sum(spec: &ChainSpec) -> PauliSum {
    let n = qubits_for(spec.sites());
    let cells = spec.n_cells();
    let mut s = PauliSum::zero(n);
    for m in 1..n {
        let low = 1usize << (m - 1);
        let count = if low > cells - 1 {
            0
        } else {
            (cells - 1 - low) / (1 << m) + 1
        };
        if count > 0 {
            s.add_assign(
                &prefix_below(count, n - 1 - m)
                    .tensor(&skew(m, true))
                    .tensor(&PauliSum::projector(0)),
            );
        }
    }
    s
}

fn rice_mele_sum(spec: &ChainSpec) -> PauliSum {
    let n = qubits_for(spec.sites());
    let cells = spec.n_cells();
    let mut z = PauliSum::zero(1);
    z.terms.insert((0, 1), 1.0);
    let mut s = prefix_below(cells - 1, n - 1).tensor(&z);
    s.add_assign(&exact(cells - 1, n - 1).tensor(&PauliSum::projector(0)));
    s
}

/// Closed-form decomposition of one Hamiltonian family.
pub fn decompose_structured(spec: &ChainSpec, t1: f64, t2: f64, part: StructuredPart) -> Result<Vec<PauliTerm>> {
    check_cells(spec)?;
    let sum = match part {
        StructuredPart::Ht2 => ht2_sum(spec).scaled(t2),
        StructuredPart::Ht1 => ht1_sum(spec).scaled(t1),
        StructuredPart::KappaPattern => kappa_sum(spec),
        StructuredPart::RiceMele => rice_mele_sum(spec),
    };
    Ok(sum.into_terms())
}

/// `H0(t1, t2)` as one term list.
pub fn decompose_h0(spec: &ChainSpec, t1: f64, t2: f64) -> Result<Vec<PauliTerm>> {
    check_cells(spec)?;
    let mut s = ht2_sum(spec).scaled(t2);
    s.add_assign(&ht1_sum(spec).scaled(t1));
    Ok(s.into_terms())
}

/// NNN driving `Σ_b κ_b K_b` on sublattice A.
pub fn decompose_kappa(spec: &ChainSpec, kappas: &[f64]) -> Result<Vec<PauliTerm>> {
    check_cells(spec)?;
    if kappas.len() != spec.n_cells() - 1 {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cells() - 1,
            found: kappas.len(),
        });
    }
    let mut s = PauliSum::zero(qubits_for(spec.sites()));
    for (b, &k) in kappas.iter().enumerate() {
        s.add_assign(&bond_sum(spec, b + 1)?.scaled(k));
    }
    Ok(s.into_terms())
}

/// Terms of a single NNN bond per unit strength.
pub fn bond_terms(spec: &ChainSpec, bond: usize) -> Result<Vec<PauliTerm>> {
    check_cells(spec)?;
    Ok(bond_sum(spec, bond)?.into_terms())
}

/// One `<coefficient> <label>` line per term.
pub fn write_terms<W: Write>(mut out: W, terms: &[PauliTerm]) -> Result<()> {
    for t in terms {
        writeln!(out, "{} {}", fmt_f64(t.coefficient), t.label())?;
    }
    Ok(())
}

/// Layout of the variational NNN schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    /// Bond `i` and bond `N - i` are time reverses of each other.
    DistinctSymmetric,
    /// One array shared by all bonds.
    Equal,
}

impl KappaMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(KappaMode::Equal),
            "distinct" | "distinct-symmetric" | "distinct_symmetric" | "symmetric" => {
                Ok(KappaMode::DistinctSymmetric)
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown kappa mode `{other}` (equal or distinct)"
            ))),
        }
    }
}

/// `κ_b(kΔt)` for bonds `b = 1..N-1` and `k = 0..=r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSchedule {
    pub mode: KappaMode,
    pub r: usize,
    /// `samples[b - 1][k]`.
    pub samples: Vec<Vec<f64>>,
}

impl KappaSchedule {
    pub fn n_bonds(&self) -> usize {
        self.samples.len()
    }

    pub fn n_params(mode: KappaMode, n_bonds: usize, r: usize) -> usize {
        let interior = r.saturating_sub(1);
        match mode {
            KappaMode::Equal => interior,
            KappaMode::DistinctSymmetric => (n_bonds + 1) / 2 * interior,
        }
    }

    pub fn zeros(mode: KappaMode, n_bonds: usize, r: usize) -> Result<Self> {
        Self::from_params(mode, n_bonds, r, &vec![0.0; Self::n_params(mode, n_bonds, r)])
    }

    /// Builds the schedule from its free interior values. For
    /// DistinctSymmetric the free arrays are bonds `1..=⌈(N-1)/2⌉`; a
    /// self-paired middle bond is symmetrized as `(θ(k) + θ(r-k)) / 2`.
    pub fn from_params(mode: KappaMode, n_bonds: usize, r: usize, params: &[f64]) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidParameter(format!("need r >= 2, got {r}")));
        }
        if n_bonds == 0 {
            return Err(Error::InvalidParameter("need at least one bond".into()));
        }
        let want = Self::n_params(mode, n_bonds, r);
        if params.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                found: params.len(),
            });
        }
        let array = |chunk: &[f64]| {
            let mut a = vec![0.0; r + 1];
            a[1..r].copy_from_slice(chunk);
            a
        };
        let samples = match mode {
            KappaMode::Equal => vec![array(params); n_bonds],
            KappaMode::DistinctSymmetric => {
                let mut s = vec![Vec::new(); n_bonds];
                for (i, chunk) in params.chunks(r - 1).enumerate() {
                    let mirror = n_bonds - 1 - i;
                    let a = array(chunk);
                    if mirror == i {
                        s[i] = (0..=r).map(|k| 0.5 * (a[k] + a[r - k])).collect();
                    } else {
                        s[mirror] = a.iter().rev().copied().collect();
                        s[i] = a;
                    }
                }
                s
            }
        };
        Ok(Self { mode, r, samples })
    }

    /// Inverse of [`from_params`](Self::from_params) on valid schedules.
    pub fn to_params(&self) -> Vec<f64> {
        let take = match self.mode {
            KappaMode::Equal => 1,
            KappaMode::DistinctSymmetric => (self.n_bonds() + 1) / 2,
        };
        self.samples[..take]
            .iter()
            .flat_map(|a| a[1..self.r].iter().copied())
            .collect()
    }

    /// Boundary zeros and the mode's equality / symmetry constraint.
    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(Error::KappaConstraint(format!("r = {} < 2", self.r)));
        }
        if self.samples.is_empty() {
            return Err(Error::KappaConstraint("no bonds".into()));
        }
        let r = self.r;
        for (b, a) in self.samples.iter().enumerate() {
            if a.len() != r + 1 {
                return Err(Error::KappaConstraint(format!(
                    "bond {} has {} samples, expected {}",
                    b + 1,
                    a.len(),
                    r + 1
                )));
            }
            if a[0] != 0.0 || a[r] != 0.0 {
                return Err(Error::KappaConstraint(format!(
                    "bond {} does not vanish at t = 0 and t = T",
                    b + 1
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::KappaConstraint(format!("bond {} not finite", b + 1)));
            }
        }
        let nb = self.n_bonds();
        for b in 0..nb {
            let ok = match self.mode {
                KappaMode::Equal => self.samples[b] == self.samples[0],
                KappaMode::DistinctSymmetric => {
                    let m = &self.samples[nb - 1 - b];
                    (0..=r).all(|k| self.samples[b][k] == m[r - k])
                }
            };
            if !ok {
                return Err(Error::KappaConstraint(format!(
                    "bond {} breaks the {:?} constraint",
                    b + 1,
                    self.mode
                )));
            }
        }
        Ok(())
    }

    /// Checks `lower <= κ <= upper` everywhere.
    pub fn check_bounds(&self, lower: f64, upper: f64) -> Result<()> {
        for (b, a) in self.samples.iter().enumerate() {
            for (k, &v) in a.iter().enumerate() {
                if !(v >= lower && v <= upper) {
                    return Err(Error::OutOfBounds {
                        index: b * (self.r + 1) + k,
                        value: v,
                        lower,
                        upper,
                    });
                }
            }
        }
        Ok(())
    }

    /// Bond strengths at step `k`.
    pub fn at_step(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|a| a[k]).collect()
    }

    /// Piecewise-linear interpolation at time `t` on the grid `kT/r`.
    pub fn interpolate(&self, t: f64, horizon: f64) -> Vec<f64> {
        let x = (t / horizon * self.r as f64).clamp(0.0, self.r as f64);
        let k = (x.floor() as usize).min(self.r - 1);
        let w = x - k as f64;
        self.samples
            .iter()
            .map(|a| (1.0 - w) * a[k] + w * a[k + 1])
            .collect()
    }

    /// CSV with columns `k, t, dt, kappa_3_1, kappa_5_3, ...`.
    pub fn write_circuit_csv<W: Write>(&self, out: W, horizon: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string(), "t".to_string(), "dt".to_string()];
        header.extend((1..=self.n_bonds()).map(|b| format!("kappa_{}_{}", 2 * b + 1, 2 * b - 1)));
        w.write_record(&header)?;
        let dt = horizon / self.r as f64;
        for k in 0..=self.r {
            let mut rec = vec![k.to_string(), fmt_f64(dt * k as f64), fmt_f64(dt)];
            rec.extend(self.samples.iter().map(|a| fmt_f64(a[k])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Padded site-space matrix of bond `b` per unit strength: `+i` at
/// `(2b, 2b - 2)` and `-i` at the transpose (0-based).
fn bond_matrix(dim: usize, bond: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    let (i, j) = (2 * bond, 2 * bond - 2);
    m[(i, j)] = C64::new(0.0, 1.0);
    m[(j, i)] = C64::new(0.0, -1.0);
    m
}

/// Precomputed pieces of the Trotter product for one chain, schedule and `r`.
#[derive(Debug, Clone)]
pub struct TrotterCircuit {
    pub sites: usize,
    pub n_qubits: usize,
    pub r: usize,
    pub horizon: f64,
    /// `exp(-i H0(kΔt) Δt)` for `k = 1..=r`.
    h0_factors: Vec<CMatrix>,
    bonds: Vec<CMatrix>,
}

impl TrotterCircuit {
    pub fn new(spec: &ChainSpec, schedule: &Schedule, r: usize) -> Result<Self> {
        Self::with_hoppings(spec, schedule.horizon(), r, |t| {
            let h = schedule.eval_hoppings(t)?;
            Ok((h.t1, h.t2))
        })
    }

    /// Circuit for an arbitrary hopping profile `t -> (t1, t2)`.
    pub fn with_hoppings<F>(spec: &ChainSpec, horizon: f64, r: usize, hoppings: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<(f64, f64)>,
    {
        if r < 2 {
            return Err(Error::InvalidParameter(format!("need r >= 2, got {r}")));
        }
        let n_qubits = qubits_for(spec.sites());
        let dim = 1usize << n_qubits;
        let dt = horizon / r as f64;
        let mut h0_factors = Vec::with_capacity(r);
        for k in 1..=r {
            let (t1, t2) = hoppings(dt * k as f64)?;
            let mut m = CMatrix::zeros(dim, dim);
            let h = hopping_matrix(spec, t1, t2);
            m.view_mut((0, 0), (spec.sites(), spec.sites()))
                .copy_from(&h.map(|x| C64::new(x, 0.0)));
            h0_factors.push(unitary_exp(&m, dt));
        }
        let bonds = (1..spec.n_cells()).map(|b| bond_matrix(dim, b)).collect();
        Ok(Self {
            sites: spec.sites(),
            n_qubits,
            r,
            horizon,
            h0_factors,
            bonds,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `Π_k exp(-i H_cd(kΔt) Δt) exp(-i H0(kΔt) Δt) |0>`.
    pub fn propagate(&self, kappa: &KappaSchedule, h0_on: bool) -> Result<StateVector> {
        kappa.validate()?;
        if kappa.r != self.r {
            return Err(Error::DimensionMismatch {
                expected: self.r,
                found: kappa.r,
            });
        }
        if kappa.n_bonds() != self.bonds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bonds.len(),
                found: kappa.n_bonds(),
            });
        }
        let dim = self.dim();
        let dt = self.horizon / self.r as f64;
        let mut psi = CVector::zeros(dim);
        psi[0] = C64::new(1.0, 0.0);
        for k in 1..=self.r {
            if h0_on {
                psi = &self.h0_factors[k - 1] * psi;
            }
            let ks = kappa.at_step(k);
            if ks.iter().any(|&x| x != 0.0) {
                let mut gen = CMatrix::zeros(dim, dim);
                for (b, &kv) in ks.iter().enumerate() {
                    if kv != 0.0 {
                        gen += &self.bonds[b] * C64::new(kv, 0.0);
                    }
                }
                psi = unitary_exp(&gen, dt) * psi;
            }
        }
        Ok(StateVector::from_unchecked(psi))
    }
}

/// One-shot Trotter emulation.
pub fn trotter_propagate(
    spec: &ChainSpec,
    schedule: &Schedule,
    kappa: &KappaSchedule,
    h0_on: bool,
) -> Result<StateVector> {
    kappa.validate()?;
    TrotterCircuit::new(spec, schedule, kappa.r)?.propagate(kappa, h0_on)
}

/// `n_shot` computational-basis measurements of `ψ`.
pub fn sample_counts<R: Rng + ?Sized>(psi: &StateVector, n_shot: usize, rng: &mut R) -> Result<Vec<u64>> {
    if n_shot == 0 {
        return Err(Error::InvalidParameter("n_shot must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(psi.dim());
    let mut acc = 0.0;
    for p in psi.probabilities() {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; psi.dim()];
    for _ in 0..n_shot {
        let u = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(psi.dim() - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}
