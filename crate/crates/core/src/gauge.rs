//! Approximate adiabatic gauge potentials from nested commutators, and the
//! counter-diabatic (CD) operators built from them.
//!
//! With `C_0 = ∂H0` and `C_m = [H0, C_{m-1}]`, the order-`ℓ` ansatz is
//! `A = i Σ_k α_k C_{2k-1}`. The coefficients minimize `tr G²` with
//! `G = C_0 + Σ_k α_k C_{2k}`, which is the linear system `M α = -b`,
//! `M_jk = tr(C_2j C_2k)`, `b_j = tr(C_0 C_2j)`.
//!
//! Every matrix here is real: `H0` is real symmetric, so even-depth
//! commutators are symmetric and odd-depth ones antisymmetric. The CD
//! operator `λ̇ A` therefore has entries `+iκ` below the diagonal with
//! `κ = λ̇ Σ_k α_k C_{2k-1}[i, j]`.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{hopping_matrix, ChainSpec, Schedule};
use crate::error::{Error, Result};
use crate::operator::{real_to_complex, CMatrix, HermitianOperator, C64};

/// Condition-number limit of the equilibrated Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative magnitude below which a CD matrix entry is treated as zero.
const COUPLING_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCoefficients {
    pub order: usize,
    pub alphas: Vec<f64>,
}

/// `C_m` for a real pair `(h0, c0)`.
pub fn nested_commutator_real(h0: &DMatrix<f64>, c0: &DMatrix<f64>, depth: usize) -> DMatrix<f64> {
    let mut c = c0.clone();
    for _ in 0..depth {
        c = h0 * &c - &c * h0;
    }
    c
}

/// `C_0 .. C_depth`.
pub fn commutator_tower(h0: &DMatrix<f64>, c0: &DMatrix<f64>, depth: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(depth + 1);
    out.push(c0.clone());
    for m in 1..=depth {
        let prev = &out[m - 1];
        let next = h0 * prev - prev * h0;
        out.push(next);
    }
    out
}

/// `C_m` where `C_0 = dh0` and `C_m = [h0, C_{m-1}]`.
pub fn nested_commutator(
    h0: &HermitianOperator,
    dh0: &HermitianOperator,
    depth: usize,
) -> Result<CMatrix> {
    if h0.dim() != dh0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: dh0.dim(),
        });
    }
    let mut c = dh0.matrix().clone();
    for _ in 0..depth {
        c = h0.matrix() * &c - &c * h0.matrix();
    }
    Ok(c)
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(a b) for symmetric b equals the entrywise inner product
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

struct GramSystem {
    m: DMatrix<f64>,
    b: DVector<f64>,
}

fn gram_system(tower: &[DMatrix<f64>], order: usize) -> GramSystem {
    let evens: Vec<&DMatrix<f64>> = (1..=order).map(|k| &tower[2 * k]).collect();
    let m = DMatrix::from_fn(order, order, |j, k| frob(evens[j], evens[k]));
    let b = DVector::from_fn(order, |j, _| frob(&tower[0], evens[j]));
    GramSystem { m, b }
}

/// Jacobi-scaled Gram matrix, its scaling and condition number.
fn equilibrate(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, f64) {
    let n = m.nrows();
    let d = DVector::from_fn(n, |j, _| {
        let x = m[(j, j)];
        if x > 0.0 {
            1.0 / x.sqrt()
        } else {
            0.0
        }
    });
    let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * m[(i, j)] * d[j]);
    let eig = SymmetricEigen::new(scaled.clone());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    let cond = if d.iter().any(|&x| x == 0.0) || lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    };
    (scaled, d, cond)
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidParameter("gauge order must be at least 1".into()));
    }
    Ok(())
}

/// Minimizer of `tr G²` for real `h0` and generator `c0`.
///
/// Fails with a degenerate-point error when the equilibrated Gram matrix has
/// condition number above [`MAX_CONDITION`].
pub fn solve_alphas_real(h0: &DMatrix<f64>, c0: &DMatrix<f64>, order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    let tower = commutator_tower(h0, c0, 2 * order);
    let sys = gram_system(&tower, order);
    let (scaled, d, cond) = equilibrate(&sys.m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegeneratePoint { condition: cond });
    }
    let rhs = -d.component_mul(&sys.b);
    let y = scaled
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::DegeneratePoint { condition: cond })?;
    let alpha = d.component_mul(&y);
    let resid = &sys.m * &alpha + &sys.b;
    let scale = sys.b.norm().max((&sys.m * &alpha).norm());
    if scale > 0.0 && resid.norm() > 1e-8 * scale {
        return Err(Error::DegeneratePoint { condition: cond });
    }
    Ok(alpha.iter().copied().collect())
}

/// Like [`solve_alphas_real`], but at singular points returns the
/// minimum-norm least-squares minimizer instead of failing. Used when
/// sweeping a schedule through its endpoints, where some commutators vanish.
pub fn solve_alphas_lenient(h0: &DMatrix<f64>, c0: &DMatrix<f64>, order: usize) -> Result<Vec<f64>> {
    match solve_alphas_real(h0, c0, order) {
        Err(Error::DegeneratePoint { .. }) => {}
        other => return other,
    }
    let tower = commutator_tower(h0, c0, 2 * order);
    let sys = gram_system(&tower, order);
    let (scaled, d, _) = equilibrate(&sys.m);
    let rhs = -d.component_mul(&sys.b);
    let eig = SymmetricEigen::new(scaled);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut y = DVector::zeros(order);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > top * 1e-12 {
            let v = eig.eigenvectors.column(k);
            y += v * (v.dot(&rhs) / lam);
        }
    }
    Ok(d.component_mul(&y).iter().copied().collect())
}

fn real_part(op: &HermitianOperator) -> Result<DMatrix<f64>> {
    let max_im = op.matrix().iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if max_im > 0.0 {
        return Err(Error::InvalidParameter(
            "gauge coefficients need real Hamiltonians".into(),
        ));
    }
    Ok(op.matrix().map(|z| z.re))
}

/// Gauge coefficients of order `ℓ` for `H0 = h0` and `∂_λH0 = dh0`.
pub fn solve_alphas(
    h0: &HermitianOperator,
    dh0: &HermitianOperator,
    order: usize,
) -> Result<GaugeCoefficients> {
    if h0.dim() != dh0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: dh0.dim(),
        });
    }
    let alphas = solve_alphas_real(&real_part(h0)?, &real_part(dh0)?, order)?;
    Ok(GaugeCoefficients { order, alphas })
}

/// `tr G_ℓ²` at the given coefficients.
pub fn action(h0: &DMatrix<f64>, c0: &DMatrix<f64>, alphas: &[f64]) -> f64 {
    let tower = commutator_tower(h0, c0, 2 * alphas.len());
    let mut g = c0.clone();
    for (k, a) in alphas.iter().enumerate() {
        g += &tower[2 * k + 2] * *a;
    }
    frob(&g, &g)
}

/// `C(N) = [2(N-2)+1] / [8(N-2)+1]`.
pub fn c_factor(n_cells: usize) -> f64 {
    let m = n_cells as f64 - 2.0;
    (2.0 * m + 1.0) / (8.0 * m + 1.0)
}

/// Closed-form coefficients for orders 1 and 2, valid when `t1 + t2` is
/// constant.
pub fn alpha_closed_form(n_cells: usize, t1: f64, t2: f64, order: usize) -> Result<GaugeCoefficients> {
    if t1 == 0.0 && t2 == 0.0 {
        return Err(Error::DegeneratePoint {
            condition: f64::INFINITY,
        });
    }
    let n = n_cells as f64;
    let (a, b) = (t1 * t1, t2 * t2);
    let alphas = match order {
        1 => vec![-c_factor(n_cells) / (a + b)],
        2 => {
            let den = 72.0 * (n - 2.0) * (a.powi(4) + b.powi(4))
                + (8.0 * n * (128.0 * n - 581.0) + 4851.0) * a * b * (a * a + b * b)
                + 2.0 * (16.0 * n * (32.0 * n - 99.0) + 193.0) * a * a * b * b;
            let a1 = -(a + b)
                * (90.0 * (n - 2.0) * (a * a + b * b)
                    + (2.0 * n * (256.0 * n - 1039.0) + 1725.0) * a * b)
                / den;
            let a2 = (18.0 * (n - 2.0) * (a * a + b * b)
                + 2.0 * (32.0 * n * (n - 4.0) + 111.0) * a * b)
                / den;
            vec![a1, a2]
        }
        other => return Err(Error::UnsupportedOrder(other)),
    };
    Ok(GaugeCoefficients { order, alphas })
}

/// Which part of the order-`ℓ` CD operator to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "order", rename_all = "snake_case")]
pub enum CdVariant {
    FullOrder(usize),
    /// Drops all couplings between even sites.
    SublatticeA(usize),
    /// Keeps only odd-odd couplings at distance 2.
    NnnAOnly(usize),
    /// One strength `α_1 (t1 ṫ2 - ṫ1 t2)` on every odd-odd distance-2 bond;
    /// for constant `t1 + t2` this is `-Λ λ̇ α_1`.
    EqualNnnA(usize),
}

impl CdVariant {
    pub fn order(&self) -> usize {
        match *self {
            CdVariant::FullOrder(l)
            | CdVariant::SublatticeA(l)
            | CdVariant::NnnAOnly(l)
            | CdVariant::EqualNnnA(l) => l,
        }
    }

    /// Parses `full2`, `suba2`, `nnn1`, `equal2`, ...; `none` gives `None`.
    pub fn parse(s: &str) -> Result<Option<Self>> {
        let s = s.trim().to_ascii_lowercase();
        if s == "none" {
            return Ok(None);
        }
        let split = s
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| Error::InvalidParameter(format!("CD variant `{s}` lacks an order")))?;
        let (name, digits) = s.split_at(split);
        let order: usize = digits
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad CD order in `{s}`")))?;
        if order == 0 {
            return Err(Error::InvalidParameter("CD order must be at least 1".into()));
        }
        let v = match name {
            "full" => CdVariant::FullOrder(order),
            "suba" | "sublattice" => CdVariant::SublatticeA(order),
            "nnn" => CdVariant::NnnAOnly(order),
            "equal" => CdVariant::EqualNnnA(order),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown CD variant `{s}` (full, suba, nnn, equal or none)"
                )))
            }
        };
        Ok(Some(v))
    }

    pub fn label(&self) -> String {
        match *self {
            CdVariant::FullOrder(l) => format!("full{l}"),
            CdVariant::SublatticeA(l) => format!("suba{l}"),
            CdVariant::NnnAOnly(l) => format!("nnn{l}"),
            CdVariant::EqualNnnA(l) => format!("equal{l}"),
        }
    }

    fn keeps(&self, i: usize, j: usize) -> bool {
        // 1-based sites, i > j
        let odd_pair = i % 2 == 1 && j % 2 == 1;
        match self {
            CdVariant::FullOrder(_) => true,
            CdVariant::SublatticeA(_) => !(i % 2 == 0 && j % 2 == 0),
            CdVariant::NnnAOnly(_) | CdVariant::EqualNnnA(_) => odd_pair && i - j == 2,
        }
    }
}

/// A coupling `+iκ |i><j| - iκ |j><i|` between 1-based sites `i > j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdOperator {
    pub matrix: HermitianOperator,
    pub couplings: Vec<Coupling>,
}

impl CdOperator {
    pub fn zero(sites: usize) -> Self {
        Self {
            matrix: HermitianOperator::zeros(sites),
            couplings: Vec::new(),
        }
    }

    pub fn from_couplings(sites: usize, couplings: Vec<Coupling>) -> Result<Self> {
        let mut m = CMatrix::zeros(sites, sites);
        for c in &couplings {
            if !(c.i > c.j && c.j >= 1 && c.i <= sites) {
                return Err(Error::InvalidParameter(format!(
                    "coupling ({}, {}) must satisfy {sites} >= i > j >= 1",
                    c.i, c.j
                )));
            }
            m[(c.i - 1, c.j - 1)] += C64::new(0.0, c.kappa);
            m[(c.j - 1, c.i - 1)] -= C64::new(0.0, c.kappa);
        }
        Ok(Self {
            matrix: HermitianOperator::new(m)?,
            couplings,
        })
    }

    /// NNN couplings on sublattice A, `κ_{2j+1,2j-1}` for `j = 1..N-1`.
    pub fn nnn_a(sites: usize, kappas: &[f64]) -> Result<Self> {
        let n_bonds = (sites - 1) / 2;
        if kappas.len() != n_bonds {
            return Err(Error::DimensionMismatch {
                expected: n_bonds,
                found: kappas.len(),
            });
        }
        let couplings = kappas
            .iter()
            .enumerate()
            .map(|(b, &kappa)| Coupling {
                i: 2 * b + 3,
                j: 2 * b + 1,
                kappa,
            })
            .collect();
        Self::from_couplings(sites, couplings)
    }

    pub fn kappa(&self, i: usize, j: usize) -> f64 {
        self.couplings
            .iter()
            .find(|c| c.i == i && c.j == j)
            .map_or(0.0, |c| c.kappa)
    }
}

/// `(H^{t1}, H^{t2})`: the unit-hopping parts of `H0`.
pub fn hopping_parts(spec: &ChainSpec) -> (DMatrix<f64>, DMatrix<f64>) {
    (hopping_matrix(spec, 1.0, 0.0), hopping_matrix(spec, 0.0, 1.0))
}

/// `∂_λ H0` at time `t`, or `None` at the half-angle schedule's `t = 0`
/// where `∂t2/∂λ` diverges.
pub fn dh0_dlambda(spec: &ChainSpec, schedule: &Schedule, t: f64) -> Result<Option<DMatrix<f64>>> {
    let (h1, h2) = hopping_parts(spec);
    Ok(schedule
        .lambda_partials(t)?
        .map(|(p1, p2)| h1 * p1 + h2 * p2))
}

/// Real matrix `λ̇ Σ_k α_k C_{2k-1}`: the CD operator is `i` times it.
///
/// The tower is seeded with `∂_t H0 = ṫ1 H^{t1} + ṫ2 H^{t2}`, which equals
/// `λ̇ ∂_λH0` and stays finite where `∂_λH0` does not. The `α`s are
/// unchanged by that rescaling.
pub fn cd_generator(spec: &ChainSpec, schedule: &Schedule, t: f64, order: usize) -> Result<DMatrix<f64>> {
    check_order(order)?;
    let h = schedule.eval_hoppings(t)?;
    let (h1, h2) = hopping_parts(spec);
    let dt_h0 = &h1 * h.t1_dot() + &h2 * h.t2_dot;
    let sites = spec.sites();
    if dt_h0.iter().all(|&x| x == 0.0) {
        return Ok(DMatrix::zeros(sites, sites));
    }
    let h0 = h1 * h.t1 + h2 * h.t2;
    let alphas = solve_alphas_lenient(&h0, &dt_h0, order)?;
    let tower = commutator_tower(&h0, &dt_h0, 2 * order - 1);
    let mut k = DMatrix::zeros(sites, sites);
    for (idx, a) in alphas.iter().enumerate() {
        k += &tower[2 * idx + 1] * *a;
    }
    Ok(k)
}

/// CD operator `H_cd(t)` for a variant.
pub fn build_cd(spec: &ChainSpec, schedule: &Schedule, t: f64, variant: CdVariant) -> Result<CdOperator> {
    let sites = spec.sites();
    let order = variant.order();
    if let CdVariant::EqualNnnA(_) = variant {
        check_order(order)?;
        let h = schedule.eval_hoppings(t)?;
        let drive = h.t1 * h.t2_dot - h.t1_dot() * h.t2;
        if drive == 0.0 {
            return Ok(CdOperator::zero(sites));
        }
        let (h1, h2) = hopping_parts(spec);
        let h0 = &h1 * h.t1 + &h2 * h.t2;
        let c0 = h1 * h.t1_dot() + h2 * h.t2_dot;
        let alphas = solve_alphas_lenient(&h0, &c0, order)?;
        let kappa = alphas[0] * drive;
        return CdOperator::nnn_a(sites, &vec![kappa; spec.n_cells() - 1]);
    }
    let k = cd_generator(spec, schedule, t, order)?;
    let scale = k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut couplings = Vec::new();
    for j in 1..=sites {
        for i in j + 1..=sites {
            let kappa = k[(i - 1, j - 1)];
            if kappa.abs() > COUPLING_CUTOFF * scale && variant.keeps(i, j) {
                couplings.push(Coupling { i, j, kappa });
            }
        }
    }
    CdOperator::from_couplings(sites, couplings)
}

/// Approximate gauge potential `i Σ_k α_k C_{2k-1}` on site space.
pub fn gauge_potential(h0: &DMatrix<f64>, dh0: &DMatrix<f64>, order: usize) -> Result<CMatrix> {
    let alphas = solve_alphas_real(h0, dh0, order)?;
    let tower = commutator_tower(h0, dh0, 2 * order - 1);
    let mut a = DMatrix::zeros(h0.nrows(), h0.ncols());
    for (k, al) in alphas.iter().enumerate() {
        a += &tower[2 * k + 1] * *al;
    }
    Ok(a.map(|x| C64::new(0.0, x)))
}

/// `G_ℓ = C_0 + Σ_k α_k C_{2k}` at the optimal coefficients.
pub fn residual_generator(h0: &DMatrix<f64>, dh0: &DMatrix<f64>, order: usize) -> Result<CMatrix> {
    let alphas = solve_alphas_real(h0, dh0, order)?;
    let tower = commutator_tower(h0, dh0, 2 * order);
    let mut g = dh0.clone();
    for (k, al) in alphas.iter().enumerate() {
        g += &tower[2 * k + 2] * *al;
    }
    Ok(real_to_complex(&g))
}

/// Nonzero entries `(i, j, |i - j|)`, 1-based, lower triangle including the
/// diagonal.
pub fn support_pattern(matrix: &CMatrix) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 0..matrix.nrows() {
        for j in 0..=i.min(matrix.ncols().saturating_sub(1)) {
            if matrix[(i, j)].norm() > 1e-12 {
                out.insert((i + 1, j + 1, i - j));
            }
        }
    }
    out
}

pub fn support_distances(matrix: &CMatrix) -> BTreeSet<usize> {
    support_pattern(matrix).into_iter().map(|(_, _, d)| d).collect()
}

/// Odd-odd site pairs `(i, j)`, `i > j`, ordered by distance then position.
pub fn odd_pairs(sites: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in (2..sites).step_by(2) {
        for j in (1..=sites - d).step_by(2) {
            out.push((j + d, j));
        }
    }
    out
}

/// One row of the coefficient export.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeRow {
    pub t: f64,
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
}

/// `α_k(t)` and sublattice-A `κ_ij(t)` on the grid `t_k = kT/grid`,
/// `k = 0..grid-1`.
pub fn gauge_table(spec: &ChainSpec, schedule: &Schedule, order: usize, grid: usize) -> Result<Vec<GaugeRow>> {
    check_order(order)?;
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be at least 1".into()));
    }
    let horizon = schedule.horizon();
    let pairs = odd_pairs(spec.sites());
    let (h1, h2) = hopping_parts(spec);
    (0..grid)
        .map(|k| {
            let t = horizon * k as f64 / grid as f64;
            let h = schedule.eval_hoppings(t)?;
            let h0 = &h1 * h.t1 + &h2 * h.t2;
            let alphas = match schedule.lambda_partials(t)? {
                Some((p1, p2)) => solve_alphas_lenient(&h0, &(&h1 * p1 + &h2 * p2), order)?,
                None => solve_alphas_lenient(&h0, &h2, order)?,
            };
            let gen = cd_generator(spec, schedule, t, order)?;
            let kappas = pairs.iter().map(|&(i, j)| gen[(i - 1, j - 1)]).collect();
            Ok(GaugeRow { t, alphas, kappas })
        })
        .collect()
}

/// Writes the coefficient table as CSV with columns
/// `t, alpha_1.., kappa_i_j..`.
pub fn write_gauge_csv<W: Write>(out: W, spec: &ChainSpec, rows: &[GaugeRow], order: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=order).map(|k| format!("alpha_{k}")));
    header.extend(odd_pairs(spec.sites()).iter().map(|(i, j)| format!("kappa_{i}_{j}")));
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![crate::export::fmt_f64(row.t)];
        rec.extend(row.alphas.iter().map(|&x| crate::export::fmt_f64(x)));
        rec.extend(row.kappas.iter().map(|&x| crate::export::fmt_f64(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
