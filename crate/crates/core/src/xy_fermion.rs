//! Free-fermion solution of the periodic XY ring.
//!
//! After Jordan-Wigner and Fourier transformation each momentum pair
//! `(k, -k)` is a 2x2 Bogoliubov problem with
//!
//! ```text
//! omega_k = sqrt((1 + lambda cos k)^2 + (gamma lambda sin k)^2)
//! phi_k   = atan2(gamma lambda sin k, 1 + lambda cos k)
//! ```
//!
//! All nearest-neighbour spin correlators of the even-parity ground state
//! follow from the single contraction
//! `G(r) = (1/n) sum_k cos(k r + phi_k)`:
//! `<sz> = G(0)`, `<sx sx> = G(-1)`, `<sy sy> = G(1)` and
//! `<sz sz> = G(0)^2 - G(1) G(-1)`.
//!
//! Momenta are antiperiodic, `k = pi (2m + 1) / n`, which is the
//! even-parity sector of an `n`-spin ring. With `n_modes` equal to the spin
//! count the results coincide with exact diagonalisation of that sector.

use crate::error::{Error, Result};
use crate::witness::{xstate_witness_norm, CorrelatorSet};

pub const DEFAULT_N_MODES: usize = 2048;

#[derive(Clone, Debug)]
pub struct FermionRing {
    n_modes: usize,
    lambda: f64,
    gamma: f64,
    momenta: Vec<f64>,
    dispersion: Vec<f64>,
    /// `(cos phi_k, sin phi_k)`
    rotations: Vec<(f64, f64)>,
}

/// Contractions `G(r)` for `r` in `r_min..=r_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionCorrelators {
    pub r_min: i64,
    pub values: Vec<f64>,
}

impl FermionCorrelators {
    pub fn get(&self, r: i64) -> Option<f64> {
        usize::try_from(r - self.r_min).ok().and_then(|i| self.values.get(i).copied())
    }
}

pub fn solve_ring(lambda: f64, gamma: f64, n_modes: usize) -> Result<FermionRing> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1]")));
    }
    if n_modes == 0 || n_modes % 2 != 0 {
        return Err(Error::InvalidParameter(format!("n_modes = {n_modes} must be even and positive")));
    }
    let n = n_modes as f64;
    let momenta: Vec<f64> = (0..n_modes).map(|m| std::f64::consts::PI * (2 * m + 1) as f64 / n).collect();
    let (dispersion, rotations) = momenta
        .iter()
        .map(|&k| {
            let a = 1.0 + lambda * k.cos();
            let b = gamma * lambda * k.sin();
            let w = a.hypot(b);
            // A zero mode counts as filled.
            let rot = if w > 0.0 { (a / w, b / w) } else { (1.0, 0.0) };
            (w, rot)
        })
        .unzip();
    Ok(FermionRing { n_modes, lambda, gamma, momenta, dispersion, rotations })
}

impl FermionRing {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn dispersion(&self) -> &[f64] {
        &self.dispersion
    }

    /// Bogoliubov angles `phi_k`.
    pub fn angles(&self) -> Vec<f64> {
        self.rotations.iter().map(|&(c, s)| s.atan2(c)).collect()
    }

    /// Ground-state energy per spin.
    pub fn energy_density(&self) -> f64 {
        -self.dispersion.iter().sum::<f64>() / self.n_modes as f64
    }

    pub fn contraction(&self, r: i64) -> f64 {
        let rf = r as f64;
        let sum: f64 = self
            .momenta
            .iter()
            .zip(&self.rotations)
            .map(|(k, (c, s))| (k * rf).cos() * c - (k * rf).sin() * s)
            .sum();
        sum / self.n_modes as f64
    }

    pub fn contractions(&self, r_min: i64, r_max: i64) -> FermionCorrelators {
        FermionCorrelators { r_min, values: (r_min..=r_max).map(|r| self.contraction(r)).collect() }
    }
}

/// Nearest-neighbour correlators of the Z2-symmetric ground state.
/// `g_x` and `g_xz` vanish by symmetry.
pub fn symmetric_correlators(ring: &FermionRing) -> CorrelatorSet {
    let g0 = ring.contraction(0);
    let gp = ring.contraction(1);
    let gm = ring.contraction(-1);
    CorrelatorSet { g_z: g0, g_xx: gm, g_yy: gp, g_zz: g0 * g0 - gp * gm, g_x: 0.0, g_xz: 0.0 }
}

/// `lambda_f` with `gamma^2 + 1/lambda_f^2 = 1`; infinite at `gamma = 1`.
pub fn factorization_point(gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1]")));
    }
    if gamma == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (1.0 - gamma * gamma).sqrt())
}

/// `(lambda, ||W||)` of the symmetric pair state along `grid`.
pub fn symmetric_witness_curve(gamma: f64, grid: &[f64], n_modes: usize) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&l| {
            let ring = solve_ring(l, gamma, n_modes)?;
            Ok((l, xstate_witness_norm(&symmetric_correlators(&ring))))
        })
        .collect()
}
