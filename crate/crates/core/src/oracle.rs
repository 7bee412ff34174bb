//! Brute-force classicality distance
//! `C(rho) = min over local projective bases of ||rho - Phi(rho)||_1`.
//!
//! Desk-scale only: qubit parties, total dimension at most 256. The search
//! returns an upper bound on `C`; for two parties the exhaustive coarse grid
//! value is also reported.

use std::f64::consts::{PI, TAU};

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::states::{disturbance, DensityMatrix, LocalMeasurement, MeasurementAngles};
use crate::witness::witness_norm;

pub const ORACLE_DIM_CAP: usize = 1 << 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    /// Grid points per angle.
    pub coarse_grid: usize,
    /// Simplex iterations per parameter and start.
    pub refine_iterations: usize,
    /// Number of simplex starts.
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { coarse_grid: 24, refine_iterations: 60, restarts: 8, tol: 1e-8, seed: 0 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_grid < 2 || self.refine_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter("oracle counts must be positive (grid >= 2)".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("oracle tol = {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub value: f64,
    pub angles: MeasurementAngles,
    /// Minimum over the full product grid; two-party states only.
    pub grid_min: Option<f64>,
    pub evaluations: usize,
}

impl OracleResult {
    pub fn is_classical(&self, tol: f64) -> bool {
        self.value <= tol
    }
}

struct Objective<'a> {
    rho: &'a DensityMatrix,
}

impl Objective<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        let angles = to_angles(x);
        disturbance(self.rho, &LocalMeasurement::from_angles(&angles)).unwrap_or(f64::INFINITY)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(x))
    }
}

fn to_angles(x: &[f64]) -> MeasurementAngles {
    let pairs: Vec<(f64, f64)> = x.chunks(2).map(|c| (c[0], c[1])).collect();
    MeasurementAngles::canonical(&pairs)
}

fn flatten(a: &MeasurementAngles) -> Vec<f64> {
    a.as_slice().iter().flat_map(|&(t, p)| [t, p]).collect()
}

/// Bloch angles of each party's dominant marginal eigenvector.
fn marginal_seed(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(2 * rho.partition().parties());
    for k in 0..rho.partition().parties() {
        let m = rho.reduced(&[k])?;
        let v = hermitian_eigen(m.matrix())?.eigenvectors.column(0);
        x.push(2.0 * v[1].norm().atan2(v[0].norm()));
        x.push(v[1].arg() - v[0].arg());
    }
    Ok(x)
}

/// Single-party grid. Antipodal directions give the same projectors, so the
/// polar angle only needs the upper hemisphere.
fn party_grid(n: usize) -> Vec<(f64, f64)> {
    let nt = (n / 2).max(2);
    let mut g = vec![(0.0, 0.0)];
    for i in 1..nt {
        let t = 0.5 * PI * i as f64 / (nt - 1) as f64;
        for j in 0..n {
            g.push((t, TAU * j as f64 / n as f64));
        }
    }
    g
}

fn refine(obj: &Objective, x0: &[f64], step: f64, iters: usize) -> Result<(Vec<f64>, f64)> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-15)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let res = Executor::new(Objective { rho: obj.rho }, solver)
        .configure(|s| s.max_iters(iters as u64))
        .run()
        .map_err(|e| Error::InvalidState(e.to_string()))?;
    let st = res.state();
    let x = st.best_param.clone().unwrap_or_else(|| x0.to_vec());
    let v = obj.eval(&x);
    Ok((x, v))
}

pub fn classicality_distance(rho: &DensityMatrix, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let part = rho.partition();
    if !part.all_qubits() {
        return Err(Error::InvalidParameter("oracle needs qubit parties".into()));
    }
    if rho.dim() > ORACLE_DIM_CAP {
        return Err(Error::DimensionCap { dim: rho.dim(), cap: ORACLE_DIM_CAP });
    }
    let parties = part.parties();
    let obj = Objective { rho };
    let done = |v: f64| v <= cfg.tol / 100.0;
    let mut evaluations = 0usize;
    let finish = |x: Vec<f64>, v: f64, grid_min, evaluations| {
        let angles = to_angles(&x);
        Ok(OracleResult { value: v.max(0.0), angles, grid_min, evaluations })
    };

    let mut starts: Vec<(Vec<f64>, f64)> = Vec::new();
    for x in [marginal_seed(rho)?, vec![0.0; 2 * parties]] {
        let v = obj.eval(&x);
        evaluations += 1;
        if done(v) {
            return finish(x, v, None, evaluations);
        }
        starts.push((x, v));
    }

    let grid = party_grid(cfg.coarse_grid);
    let mut grid_min = None;
    let grid_best = if parties == 2 {
        let (best, v) = grid
            .par_iter()
            .map(|&(t0, p0)| {
                grid.iter()
                    .map(|&(t1, p1)| {
                        let x = vec![t0, p0, t1, p1];
                        let v = obj.eval(&x);
                        (x, v)
                    })
                    .fold((vec![], f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            })
            .reduce(|| (vec![], f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
        evaluations += grid.len() * grid.len();
        grid_min = Some(v);
        (best, v)
    } else {
        // Cyclic coordinate scans from the best seed.
        let mut x = starts.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0.clone();
        let mut v = f64::INFINITY;
        for _ in 0..2 {
            for k in 0..parties {
                let (cand, cv) = grid
                    .par_iter()
                    .map(|&(t, p)| {
                        let mut y = x.clone();
                        y[2 * k] = t;
                        y[2 * k + 1] = p;
                        let v = obj.eval(&y);
                        (y, v)
                    })
                    .reduce(|| (vec![], f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
                evaluations += grid.len();
                if cv < v {
                    x = cand;
                    v = cv;
                }
            }
        }
        (x, v)
    };
    if done(grid_best.1) {
        return finish(grid_best.0, grid_best.1, grid_min, evaluations);
    }
    let grid_step = PI / cfg.coarse_grid as f64;
    let mut seeded: Vec<(Vec<f64>, f64, f64)> = vec![(grid_best.0, grid_best.1, grid_step)];
    seeded.extend(starts.into_iter().map(|(x, v)| (x, v, 0.2)));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while seeded.len() < cfg.restarts {
        let x: Vec<f64> = (0..parties).flat_map(|_| [rng.gen_range(-1.0f64..1.0).acos(), rng.gen_range(0.0..TAU)]).collect();
        seeded.push((x, f64::INFINITY, 0.3));
    }
    seeded.truncate(cfg.restarts.max(1));

    let iters = cfg.refine_iterations * 2 * parties;
    let refined: Vec<Result<(Vec<f64>, f64)>> =
        seeded.par_iter().map(|(x, _, step)| refine(&obj, x, *step, iters)).collect();
    evaluations += seeded.len() * iters;
    let mut best = (Vec::new(), f64::INFINITY);
    for r in refined {
        let (x, v) = r?;
        if v < best.1 {
            best = (x, v);
        }
    }
    // One polishing pass from the winner with a smaller simplex.
    if !done(best.1) {
        let (x, v) = refine(&obj, &best.0, grid_step / 8.0, iters)?;
        evaluations += iters;
        if v < best.1 {
            best = (x, v);
        }
    }
    let canon = flatten(&to_angles(&best.0));
    let v = obj.eval(&canon);
    finish(canon, v, grid_min, evaluations)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SufficiencyReport {
    pub witness: f64,
    pub distance: f64,
    /// `witness > 10 tol` implies `distance > tol`.
    pub implication_holds: bool,
}

pub fn certify_witness_sufficiency(rho: &DensityMatrix, cfg: &OracleConfig) -> Result<SufficiencyReport> {
    let witness = witness_norm(rho)?;
    let distance = classicality_distance(rho, cfg)?.value;
    let implication_holds = !(witness > 10.0 * cfg.tol) || distance > cfg.tol;
    Ok(SufficiencyReport { witness, distance, implication_holds })
}
