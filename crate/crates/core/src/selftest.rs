//! Quick invariant checks exposed as the `selftest` command.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eigensolver::{lowest_in_sector, lowest_states, GroundState, SolverConfig};
use crate::error::Result;
use crate::linalg::hermitian_eigenvalues;
use crate::oracle::{classicality_distance, OracleConfig};
use crate::random::{random_angles, random_probabilities, random_xstate};
use crate::spin_models::{build_ashkin_teller, build_xy, xy_parity, ATParams, XYParams};
use crate::states::{make_classical_state, LocalMeasurement, Partition};
use crate::witness::{witness_norm, xstate_witness_norm};
use crate::xy_fermion::{solve_ring, symmetric_correlators};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

pub fn run_selftest(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();

    out.push(check("classical states: zero witness and zero distance", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut w, mut d) = (0.0f64, 0.0f64);
        for parties in [2, 3] {
            for _ in 0..5 {
                let part = Partition::qubits(parties)?;
                let m = LocalMeasurement::from_angles(&random_angles(&mut rng, parties));
                let rho = make_classical_state(&part, &m, &random_probabilities(&mut rng, 1 << parties))?;
                w = w.max(witness_norm(&rho)?);
                d = d.max(classicality_distance(&rho, &OracleConfig::default())?.value);
            }
        }
        Ok((w <= 1e-10 && d <= 1e-8, format!("max witness {w:.2e}, max distance {d:.2e}")))
    }));

    out.push(check("X-state closed form equals matrix trace norm", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let x = random_xstate(&mut rng);
            worst = worst.max((xstate_witness_norm(&x.correlators()) - witness_norm(&x.density_matrix())?).abs());
        }
        Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
    }));

    out.push(check("Lanczos matches dense diagonalisation", || {
        let cfg = SolverConfig::default();
        let mut worst = 0.0f64;
        for h in [
            build_xy(&XYParams::new(8, 0.6, 1.3)?)?,
            build_ashkin_teller(&ATParams::new(4, 0.7, 2.0)?)?,
        ] {
            let dense = hermitian_eigenvalues(&h.to_dense()?)?;
            let e0 = dense.iter().copied().fold(f64::INFINITY, f64::min);
            worst = worst.max((lowest_states(&h, 1, seed, &cfg)?.energies[0] - e0).abs());
        }
        Ok((worst <= 1e-10, format!("max deviation {worst:.2e}")))
    }));

    out.push(check("free fermions reproduce the even sector of a ring", || {
        let (n, l, g) = (8, 0.7, 0.6);
        let h = build_xy(&XYParams::new(n, g, l)?)?;
        let r = lowest_in_sector(&h, &[xy_parity(n)?], &[1], seed, &SolverConfig::default())?;
        let ed = GroundState::pure(n, r.vectors[0].clone()).pair_correlators(0, 1)?;
        let ff = symmetric_correlators(&solve_ring(l, g, n)?);
        let dev = [ed.g_z - ff.g_z, ed.g_xx - ff.g_xx, ed.g_yy - ff.g_yy, ed.g_zz - ff.g_zz]
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        Ok((dev <= 1e-9, format!("max deviation {dev:.2e}")))
    }));

    out
}
