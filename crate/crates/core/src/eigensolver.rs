//! Lowest eigenpairs of Pauli-string Hamiltonians.
//!
//! Lanczos with full reorthogonalisation and explicit restarts is the default
//! path; the shifted power method is kept as a slower cross-check. Both can be
//! confined to a joint eigenspace of commuting parity strings by projecting
//! with `prod_k (1 + s_k P_k) / 2` after every operator application.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{inner, partial_trace_pure, vec_norm, ComplexMatrix, C64, ZERO};
use crate::spin_models::{Pauli, PauliStringOperator};
use crate::states::{DensityMatrix, Partition};
use crate::witness::CorrelatorSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Lanczos,
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Total operator applications per eigenpair.
    pub max_iterations: usize,
    /// Krylov dimension between restarts.
    pub krylov_dim: usize,
    /// Residual target relative to the operator norm bound.
    pub tol: f64,
    /// Sector energies closer than this (relative to `|E_0|`) are degenerate.
    pub degeneracy_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: Method::Lanczos, max_iterations: 5000, krylov_dim: 200, tol: 1e-9, degeneracy_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    /// Parity eigenvalues per returned state; empty when unrestricted.
    pub sector_labels: Vec<Vec<i8>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundStateKind {
    SymmetricThermal,
    BrokenPlus,
    BrokenMinus,
    RawLowest,
}

/// Joint eigenspace of commuting involutions.
#[derive(Clone, Copy, Debug)]
pub struct Sector<'a> {
    parities: &'a [PauliStringOperator],
    signs: &'a [i8],
}

impl<'a> Sector<'a> {
    pub fn new(parities: &'a [PauliStringOperator], signs: &'a [i8]) -> Result<Self> {
        if parities.len() != signs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parities, {} signs",
                parities.len(),
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("parity signs must be +1 or -1".into()));
        }
        Ok(Self { parities, signs })
    }

    fn project(&self, v: &mut [C64], scratch: &mut [C64]) -> Result<()> {
        for (p, &s) in self.parities.iter().zip(self.signs) {
            p.matvec_into(v, scratch)?;
            let s = s as f64;
            for (x, &y) in v.iter_mut().zip(scratch.iter()) {
                *x = (*x + y * s) * 0.5;
            }
        }
        Ok(())
    }
}

/// One converged eigenpair plus diagnostics.
#[derive(Clone, Debug)]
pub struct LanczosReport {
    pub energy: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
    /// Ritz value at the end of each restart cycle.
    pub restart_energies: Vec<f64>,
}

fn random_start(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Classical Gram-Schmidt against `basis`, repeated once when the first
/// pass removes most of the norm (DGKS criterion).
fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) {
    if basis.is_empty() {
        return;
    }
    let mut before = vec_norm(v);
    for _ in 0..2 {
        let coeffs: Vec<C64> = basis.iter().map(|b| inner(b, v)).collect();
        for (b, p) in basis.iter().zip(coeffs) {
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let after = vec_norm(v);
        if after > std::f64::consts::FRAC_1_SQRT_2 * before {
            break;
        }
        before = after;
    }
}

fn residual_norm(op: &PauliStringOperator, v: &[C64], e: f64) -> Result<f64> {
    let hv = op.matvec(v)?;
    Ok(hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt())
}

/// Lowest eigenpair of a real symmetric tridiagonal matrix.
fn tridiagonal_lowest(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let (k, &e) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    (e, eig.eigenvectors.column(k).iter().copied().collect())
}

/// Lowest eigenpair of `op` restricted to `sector` and the orthogonal
/// complement of `locked`.
pub fn lanczos(
    op: &PauliStringOperator,
    sector: Option<&Sector>,
    locked: &[Vec<C64>],
    seed: u64,
    cfg: &SolverConfig,
) -> Result<LanczosReport> {
    let dim = op.dim();
    let norm = op.norm_bound().max(1e-300);
    let target = cfg.tol * norm;
    let mut scratch = vec![ZERO; dim];

    let mut v0 = random_start(dim, seed);
    if let Some(s) = sector {
        s.project(&mut v0, &mut scratch)?;
    }
    orthogonalize(&mut v0, locked);
    if normalize(&mut v0) < 1e-10 {
        return Err(Error::EmptySector);
    }

    let mut iterations = 0usize;
    let mut restart_energies = Vec::new();
    let mut last_residual = f64::INFINITY;
    let max_krylov = cfg.krylov_dim.clamp(2, dim.max(2));

    loop {
        let mut basis: Vec<Vec<C64>> = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let ritz = loop {
            let j = basis.len() - 1;
            let mut w = vec![ZERO; dim];
            op.matvec_into(&basis[j], &mut w)?;
            iterations += 1;
            if let Some(s) = sector {
                s.project(&mut w, &mut scratch)?;
            }
            let alpha = inner(&basis[j], &w).re;
            alphas.push(alpha);
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, locked);
            let beta = vec_norm(&w);

            let m = alphas.len();
            let exhausted = beta <= 1e-12 * norm || m >= max_krylov || m + locked.len() >= dim;
            if exhausted || m % 10 == 0 || iterations >= cfg.max_iterations {
                let ritz = tridiagonal_lowest(&alphas, &betas);
                let estimate = beta * ritz.1[m - 1].abs();
                if exhausted || estimate <= 0.1 * target || iterations >= cfg.max_iterations {
                    break ritz;
                }
            }
            w.iter_mut().for_each(|x| *x /= beta);
            betas.push(beta);
            basis.push(w);
        };

        let mut x = vec![ZERO; dim];
        for (b, &c) in basis.iter().zip(&ritz.1) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += bi * c;
            }
        }
        if let Some(s) = sector {
            s.project(&mut x, &mut scratch)?;
        }
        orthogonalize(&mut x, locked);
        normalize(&mut x);
        let energy = op.expectation(&x)?.re;
        restart_energies.push(energy);
        let residual = residual_norm(op, &x, energy)?;
        last_residual = last_residual.min(residual);
        if residual <= target {
            return Ok(LanczosReport { energy, vector: x, residual, iterations, restart_energies });
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::Convergence { iterations, residual: last_residual });
        }
        v0 = x;
    }
}

/// Lowest eigenpair of `op` by power iteration on `c - H`, with `c` the
/// Gershgorin-type bound `sum |c_t|`.
pub fn power_method(
    op: &PauliStringOperator,
    sector: Option<&Sector>,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<LanczosReport> {
    let dim = op.dim();
    let shift = op.norm_bound();
    let target = cfg.tol * shift.max(1e-300);
    let mut scratch = vec![ZERO; dim];
    let mut v = random_start(dim, seed);
    if let Some(s) = sector {
        s.project(&mut v, &mut scratch)?;
    }
    if normalize(&mut v) < 1e-10 {
        return Err(Error::EmptySector);
    }
    let mut hv = vec![ZERO; dim];
    let mut restart_energies = Vec::new();
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        op.matvec_into(&v, &mut hv)?;
        if it % 10 == 0 {
            let e = inner(&v, &hv).re;
            residual = hv.iter().zip(&v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
            restart_energies.push(e);
            if residual <= target {
                return Ok(LanczosReport { energy: e, vector: v, residual, iterations: it, restart_energies });
            }
        }
        for (x, h) in v.iter_mut().zip(&hv) {
            *x = *x * shift - h;
        }
        if let Some(s) = sector {
            s.project(&mut v, &mut scratch)?;
        }
        normalize(&mut v);
    }
    Err(Error::Convergence { iterations: cfg.max_iterations, residual })
}

fn solve_one(
    op: &PauliStringOperator,
    sector: Option<&Sector>,
    locked: &[Vec<C64>],
    seed: u64,
    cfg: &SolverConfig,
) -> Result<LanczosReport> {
    match cfg.method {
        Method::Lanczos => lanczos(op, sector, locked, seed, cfg),
        Method::Power if locked.is_empty() => power_method(op, sector, seed, cfg),
        Method::Power => Err(Error::InvalidParameter("power method only returns the lowest state".into())),
    }
}

/// `k` lowest eigenpairs by successive deflation.
pub fn lowest_states(op: &PauliStringOperator, k: usize, seed: u64, cfg: &SolverConfig) -> Result<GroundStateResult> {
    if k == 0 || k > op.dim() {
        return Err(Error::InvalidParameter(format!("k = {k} for dimension {}", op.dim())));
    }
    let mut out = GroundStateResult { energies: vec![], vectors: vec![], residuals: vec![], sector_labels: vec![] };
    for i in 0..k {
        let r = solve_one(op, None, &out.vectors, seed.wrapping_add(i as u64), cfg)?;
        out.energies.push(r.energy);
        out.vectors.push(r.vector);
        out.residuals.push(r.residual);
        out.sector_labels.push(vec![]);
    }
    Ok(out)
}

/// Lowest state in the joint eigenspace `P_k v = s_k v`.
pub fn lowest_in_sector(
    op: &PauliStringOperator,
    parities: &[PauliStringOperator],
    signs: &[i8],
    seed: u64,
    cfg: &SolverConfig,
) -> Result<GroundStateResult> {
    let sector = Sector::new(parities, signs)?;
    let r = solve_one(op, Some(&sector), &[], seed, cfg)?;
    Ok(GroundStateResult {
        energies: vec![r.energy],
        vectors: vec![r.vector],
        residuals: vec![r.residual],
        sector_labels: vec![signs.to_vec()],
    })
}

/// Convex combination of pure states on an `n`-spin register.
#[derive(Clone, Debug)]
pub struct GroundState {
    n_spins: usize,
    components: Vec<(f64, Vec<C64>)>,
}

impl GroundState {
    pub fn pure(n_spins: usize, v: Vec<C64>) -> Self {
        Self { n_spins, components: vec![(1.0, v)] }
    }

    pub fn mixture(n_spins: usize, components: Vec<(f64, Vec<C64>)>) -> Self {
        Self { n_spins, components }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn components(&self) -> &[(f64, Vec<C64>)] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    /// `Tr(rho O)`.
    pub fn expectation(&self, op: &PauliStringOperator) -> Result<f64> {
        let mut s = 0.0;
        for (w, v) in &self.components {
            s += w * op.expectation(v)?.re;
        }
        Ok(s)
    }

    /// Correlators of the spin pair `(i, j)`; one-point values are averaged
    /// over the two sites.
    pub fn pair_correlators(&self, i: usize, j: usize) -> Result<CorrelatorSet> {
        let n = self.n_spins;
        let single = |p: Pauli| -> Result<f64> {
            let mut op = PauliStringOperator::new(n)?;
            op.add(0.5, &[(i, p)])?;
            op.add(0.5, &[(j, p)])?;
            self.expectation(&op)
        };
        let pair = |a: Pauli, b: Pauli| -> Result<f64> {
            let mut op = PauliStringOperator::new(n)?;
            op.add(1.0, &[(i, a), (j, b)])?;
            self.expectation(&op)
        };
        Ok(CorrelatorSet {
            g_z: single(Pauli::Z)?,
            g_xx: pair(Pauli::X, Pauli::X)?,
            g_yy: pair(Pauli::Y, Pauli::Y)?,
            g_zz: pair(Pauli::Z, Pauli::Z)?,
            g_x: single(Pauli::X)?,
            g_xz: pair(Pauli::X, Pauli::Z)?,
        })
    }

    /// Reduced state on the given spins, one qubit party per spin.
    pub fn reduced(&self, sites: &[usize]) -> Result<DensityMatrix> {
        let dims = vec![2; self.n_spins];
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let d = 1usize << sorted.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (w, v) in &self.components {
            let r = partial_trace_pure(v, &dims, &sorted)?;
            m = m.try_add(&r.scale_real(*w))?;
        }
        DensityMatrix::new(m.hermitian_part(), Partition::qubits(sorted.len())?)
    }

    /// Full density matrix; desk-scale registers only.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        if self.n_spins > 12 {
            return Err(Error::DimensionCap { dim: 1 << self.n_spins, cap: 1 << 12 });
        }
        let d = 1usize << self.n_spins;
        let mut m = ComplexMatrix::zeros(d, d);
        for (w, v) in &self.components {
            m = m.try_add(&ComplexMatrix::outer(v).scale_real(*w))?;
        }
        DensityMatrix::new(m.hermitian_part(), Partition::qubits(self.n_spins)?)
    }
}

/// A ground state with the numbers a sweep row reports.
#[derive(Clone, Debug)]
pub struct GroundStateInfo {
    pub state: GroundState,
    pub energy: f64,
    /// Gap between the two lowest sector ground energies.
    pub sector_gap: f64,
    /// Largest residual among the eigenpairs used.
    pub residual: f64,
    /// `(signs, energy)` for every sector solved, lowest first.
    pub sectors: Vec<(Vec<i8>, f64)>,
}

fn all_sign_tuples(n: usize) -> Vec<Vec<i8>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|k| if mask >> k & 1 == 0 { 1 } else { -1 }).collect())
        .collect()
}

/// Lowest state of every parity sector, sorted by energy. Empty sectors are
/// skipped.
pub fn sector_ground_states(
    op: &PauliStringOperator,
    parities: &[PauliStringOperator],
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Vec<(Vec<i8>, LanczosReport)>> {
    let mut out = Vec::new();
    for (i, signs) in all_sign_tuples(parities.len()).into_iter().enumerate() {
        let sector = Sector::new(parities, &signs)?;
        match solve_one(op, Some(&sector), &[], seed.wrapping_add(i as u64), cfg) {
            Ok(r) => out.push((signs, r)),
            Err(Error::EmptySector) => continue,
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySector);
    }
    out.sort_by(|a, b| a.1.energy.total_cmp(&b.1.energy));
    Ok(out)
}

fn degeneracy_threshold(e0: f64, cfg: &SolverConfig) -> f64 {
    cfg.degeneracy_tol * e0.abs().max(1.0)
}

/// Equal mixture of the sector ground states degenerate with the lowest one;
/// the unique ground state otherwise.
pub fn symmetric_ground_state(
    op: &PauliStringOperator,
    parities: &[PauliStringOperator],
    seed: u64,
    cfg: &SolverConfig,
) -> Result<GroundStateInfo> {
    let sectors = sector_ground_states(op, parities, seed, cfg)?;
    let e0 = sectors[0].1.energy;
    let thr = degeneracy_threshold(e0, cfg);
    let members: Vec<&LanczosReport> =
        sectors.iter().map(|(_, r)| r).take_while(|r| r.energy - e0 < thr).collect();
    let w = 1.0 / members.len() as f64;
    let residual = members.iter().map(|r| r.residual).fold(0.0, f64::max);
    let state = GroundState::mixture(op.n_spins(), members.iter().map(|r| (w, r.vector.clone())).collect());
    let sector_gap = sectors.get(1).map_or(f64::INFINITY, |s| s.1.energy - e0);
    Ok(GroundStateInfo {
        state,
        energy: e0,
        sector_gap,
        residual,
        sectors: sectors.iter().map(|(s, r)| (s.clone(), r.energy)).collect(),
    })
}

/// Golden-section maximisation of `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `(|g0> + sign e^{i chi} |g1>) / sqrt 2` from the two lowest parity
/// sectors, with `chi` maximising `<order>` for the `+` branch.
pub fn broken_ground_state(
    op: &PauliStringOperator,
    parity: &PauliStringOperator,
    order: &PauliStringOperator,
    sign: i8,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<GroundStateInfo> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidParameter("branch sign must be +1 or -1".into()));
    }
    let parities = std::slice::from_ref(parity);
    let sectors = sector_ground_states(op, parities, seed, cfg)?;
    if sectors.len() < 2 {
        return Err(Error::NotDegenerate { gap: f64::INFINITY, tol: 0.0 });
    }
    let (g0, g1) = (&sectors[0].1, &sectors[1].1);
    let gap = g1.energy - g0.energy;
    let thr = degeneracy_threshold(g0.energy, cfg);
    if gap >= thr {
        return Err(Error::NotDegenerate { gap, tol: thr });
    }
    superpose(op.n_spins(), g0, g1, order, sign).map(|(state, _)| GroundStateInfo {
        state,
        energy: g0.energy,
        sector_gap: gap,
        residual: g0.residual.max(g1.residual),
        sectors: sectors.iter().map(|(s, r)| (s.clone(), r.energy)).collect(),
    })
}

/// Phase-aligned equal superposition of two parity eigenstates; returns the
/// state and its order parameter.
pub fn superpose(
    n_spins: usize,
    g0: &LanczosReport,
    g1: &LanczosReport,
    order: &PauliStringOperator,
    sign: i8,
) -> Result<(GroundState, f64)> {
    let d0 = order.expectation(&g0.vector)?.re;
    let d1 = order.expectation(&g1.vector)?.re;
    let off = order.matrix_element(&g0.vector, &g1.vector)?;
    let m = |chi: f64| 0.5 * (d0 + d1) + (C64::from_polar(1.0, chi) * off).re;

    let steps = 64;
    let (best, _) = (0..steps)
        .map(|k| std::f64::consts::TAU * k as f64 / steps as f64)
        .map(|chi| (chi, m(chi)))
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let h = std::f64::consts::TAU / steps as f64;
    let chi = golden_section_max(m, best - h, best + h, 60);
    if (m(chi) - m(chi + std::f64::consts::PI)).abs() < 1e-9 {
        return Err(Error::NoOrderParameter);
    }
    let phase = C64::from_polar(sign as f64, chi);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v: Vec<C64> = g0.vector.iter().zip(&g1.vector).map(|(a, b)| (a + phase * b) * s).collect();
    let value = order.expectation(&v)?.re;
    Ok((GroundState::pure(n_spins, v), value))
}
