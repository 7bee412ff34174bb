//! Seeded random instances: matrices, states, probability vectors and
//! measurement angles. Used by tests, the self-test command and the
//! acceptance suite.

use rand::Rng;

use crate::linalg::{inner, vec_norm, ComplexMatrix, C64};
use crate::states::MeasurementAngles;
use crate::witness::XStateParams;

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

/// Gram-Schmidt of a random complex matrix. Not Haar distributed.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let m = random_matrix(rng, n, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = m.column(j);
        for u in &cols {
            let p = inner(u, &v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let nv = vec_norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Full-rank density matrix `A A^dagger / Tr(A A^dagger)`.
pub fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    let rho = &a * &a.adjoint();
    let t = rho.trace().re;
    rho.scale_real(1.0 / t).hermitian_part()
}

pub fn random_state_vector(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> =
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Probability vector from normalised uniform draws.
pub fn random_probabilities(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn random_angles(rng: &mut impl Rng, parties: usize) -> MeasurementAngles {
    let pairs = (0..parties)
        .map(|_| {
            // cos(theta) uniform gives an isotropic direction.
            let theta = rng.gen_range(-1.0f64..1.0).acos();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            (theta, phi)
        })
        .collect();
    MeasurementAngles::new(pairs).expect("sampled angles are in range")
}

/// Valid translation-invariant X-state (`b1 == b2`) drawn directly in
/// matrix form.
pub fn random_xstate(rng: &mut impl Rng) -> XStateParams {
    let p = random_probabilities(rng, 3);
    let (a, b, d) = (p[0], p[1] / 2.0, p[2]);
    let z = rng.gen_range(-1.0..=1.0) * b;
    let f = rng.gen_range(-1.0..=1.0) * (a * d).sqrt();
    XStateParams::new(a, b, b, d, z, f).expect("sampled X-state is valid")
}
