//! The nonclassicality witness `W = [rho, rho_A1 (x) ... (x) rho_AN]` and its
//! closed form for Z2-symmetric two-qubit X-states.

use crate::error::{Error, Result};
use crate::linalg::{commutator, kron, trace_norm, ComplexMatrix};
use crate::states::{DensityMatrix, Partition};

/// Eigenvalues down to this value are clipped to zero when assembling an
/// X-state from correlators; anything more negative is unphysical.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Product of the single-party marginals, built left to right.
pub fn marginal_product(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let mut prod = ComplexMatrix::identity(1);
    for k in 0..rho.partition().parties() {
        prod = kron(&prod, rho.reduced(&[k])?.matrix())?;
    }
    Ok(prod)
}

/// `W = [rho, rho_A1 (x) ... (x) rho_AN]`. Anti-Hermitian and traceless.
pub fn witness_operator(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if rho.partition().parties() < 2 {
        return Err(Error::SingleParty);
    }
    commutator(rho.matrix(), &marginal_product(rho)?)
}

/// Trace norm of the witness operator. Positive values certify
/// nonclassicality; zero is inconclusive.
pub fn witness_norm(rho: &DensityMatrix) -> Result<f64> {
    trace_norm(&witness_operator(rho)?)
}

/// Translation-invariant spin-pair correlators. `g_x` and `g_xz` are only
/// nonzero once the Z2 symmetry is broken.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorrelatorSet {
    /// `<sigma_z>`
    pub g_z: f64,
    /// `<sigma_x^i sigma_x^j>`
    pub g_xx: f64,
    /// `<sigma_y^i sigma_y^j>`
    pub g_yy: f64,
    /// `<sigma_z^i sigma_z^j>`
    pub g_zz: f64,
    /// `<sigma_x>`
    pub g_x: f64,
    /// `<sigma_x^i sigma_z^{i+1}>`
    pub g_xz: f64,
}

impl CorrelatorSet {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.g_z, self.g_xx, self.g_yy, self.g_zz, self.g_x, self.g_xz];
        if vals.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(Error::InvalidState(format!("correlators outside [-1, 1]: {self:?}")));
        }
        Ok(())
    }
}

/// Two-qubit X-state
///
/// ```text
/// | a  0  0  f |
/// | 0  b1 z  0 |
/// | 0  z  b2 0 |
/// | f  0  0  d |
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XStateParams {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub d: f64,
    pub z: f64,
    pub f: f64,
}

impl XStateParams {
    pub fn new(a: f64, b1: f64, b2: f64, d: f64, z: f64, f: f64) -> Result<Self> {
        let x = Self { a, b1, b2, d, z, f };
        x.validate()?;
        Ok(x)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b1, b2, d, z, f } = *self;
        if ((a + b1 + b2 + d) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("X-state trace {}", a + b1 + b2 + d)));
        }
        if a < 0.0 || b1 < 0.0 || b2 < 0.0 || d < 0.0 {
            return Err(Error::InvalidState("negative X-state population".into()));
        }
        if z.abs() > (b1 * b2).sqrt() + 1e-12 || f.abs() > (a * d).sqrt() + 1e-12 {
            return Err(Error::InvalidState("X-state coherence exceeds positivity bound".into()));
        }
        Ok(())
    }

    /// Density-matrix entries from translation-invariant correlators
    /// (`b1 == b2`). Slightly negative eigenvalues (within
    /// [`POSITIVITY_TOL`]) are clipped and the trace renormalised.
    pub fn from_correlators(c: &CorrelatorSet) -> Result<Self> {
        c.validate()?;
        let a = 0.25 * (1.0 + 2.0 * c.g_z + c.g_zz);
        let b = 0.25 * (1.0 - c.g_zz);
        let d = 0.25 * (1.0 - 2.0 * c.g_z + c.g_zz);
        let z = 0.25 * (c.g_xx + c.g_yy);
        let f = 0.25 * (c.g_xx - c.g_yy);

        let (a, d, f) = clip_block(a, d, f)?;
        let (b1, b2, z) = clip_block(b, b, z)?;
        let tr = a + b1 + b2 + d;
        if tr <= 0.0 {
            return Err(Error::InvalidState("X-state with vanishing trace".into()));
        }
        let x = Self { a: a / tr, b1: b1 / tr, b2: b2 / tr, d: d / tr, z: z / tr, f: f / tr };
        x.validate()?;
        Ok(x)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let Self { a, b1, b2, d, z, f } = *self;
        ComplexMatrix::from_real_rows(&[
            &[a, 0.0, 0.0, f],
            &[0.0, b1, z, 0.0],
            &[0.0, z, b2, 0.0],
            &[f, 0.0, 0.0, d],
        ])
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix::from_parts_unchecked(self.matrix(), Partition::qubits(2).expect("two qubits"))
    }

    /// Correlators of this state; `g_z` is the average of the two sites'
    /// magnetizations, so only `b1 == b2` round-trips.
    pub fn correlators(&self) -> CorrelatorSet {
        CorrelatorSet {
            g_z: self.a - self.d,
            g_xx: 2.0 * (self.z + self.f),
            g_yy: 2.0 * (self.z - self.f),
            g_zz: self.a + self.d - self.b1 - self.b2,
            g_x: 0.0,
            g_xz: 0.0,
        }
    }

    /// The `(0, 3)` entry of the witness for `b1 == b2 == b`:
    /// `f [(b + d)^2 - (a + b)^2]`.
    pub fn witness_corner(&self) -> f64 {
        let b = 0.5 * (self.b1 + self.b2);
        self.f * ((b + self.d).powi(2) - (self.a + b).powi(2))
    }
}

/// Clips a real symmetric block `[[p, c], [c, q]]` to be positive
/// semidefinite when its negative eigenvalue is within tolerance.
fn clip_block(p: f64, q: f64, c: f64) -> Result<(f64, f64, f64)> {
    let mean = 0.5 * (p + q);
    let rad = (0.25 * (p - q).powi(2) + c * c).sqrt();
    let hi = mean + rad;
    // det / hi avoids cancellation in mean - rad.
    let lo = if hi > 0.0 { (p * q - c * c) / hi } else { mean - rad };
    if lo >= 0.0 && p >= 0.0 && q >= 0.0 {
        return Ok((p, q, c));
    }
    if lo < -POSITIVITY_TOL {
        return Err(Error::InvalidState(format!("correlators give eigenvalue {lo:e}")));
    }
    if rad == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    // Keep only the top eigenvector component.
    let hi = hi.max(0.0);
    let (u0, u1) = if c.abs() > 0.0 {
        let n = ((hi - q).powi(2) + c * c).sqrt();
        ((hi - q) / n, c / n)
    } else if p >= q {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    Ok((hi * u0 * u0, hi * u1 * u1, hi * u0 * u1))
}

pub fn xstate_from_correlators(c: &CorrelatorSet) -> Result<XStateParams> {
    XStateParams::from_correlators(c)
}

/// `||W|| = |<sx sx> - <sy sy>| |<sz>| / 2` for a translation-invariant
/// Z2-symmetric pair. `g_x` and `g_xz` are ignored.
pub fn xstate_witness_norm(c: &CorrelatorSet) -> f64 {
    0.5 * (c.g_xx - c.g_yy).abs() * c.g_z.abs()
}

/// Which of the two necessary conditions for a classical Z2-symmetric pair
/// state hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassicalityFlags {
    pub zero_magnetization: bool,
    pub isotropic: bool,
}

impl ClassicalityFlags {
    /// Classicality is only possible if at least one condition holds.
    pub fn classical_possible(&self) -> bool {
        self.zero_magnetization || self.isotropic
    }
}

pub fn classicality_conditions(c: &CorrelatorSet, tol: f64) -> ClassicalityFlags {
    ClassicalityFlags {
        zero_magnetization: c.g_z.abs() <= tol,
        isotropic: (c.g_xx - c.g_yy).abs() <= tol,
    }
}

/// Two-spin state with broken Z2 symmetry,
///
/// ```text
/// | a p p f |
/// | p b z q |
/// | p z b q |
/// | f q q d |
/// ```
///
/// with `p = (<sx> + <sx sz>) / 4`, `q = (<sx> - <sx sz>) / 4` so that the
/// trace is one.
pub fn broken_pair_state(c: &CorrelatorSet) -> Result<DensityMatrix> {
    c.validate()?;
    let a = 0.25 * (1.0 + 2.0 * c.g_z + c.g_zz);
    let b = 0.25 * (1.0 - c.g_zz);
    let d = 0.25 * (1.0 - 2.0 * c.g_z + c.g_zz);
    let z = 0.25 * (c.g_xx + c.g_yy);
    let f = 0.25 * (c.g_xx - c.g_yy);
    let p = 0.25 * (c.g_x + c.g_xz);
    let q = 0.25 * (c.g_x - c.g_xz);
    let m = ComplexMatrix::from_real_rows(&[
        &[a, p, p, f],
        &[p, b, z, q],
        &[p, z, b, q],
        &[f, q, q, d],
    ]);
    DensityMatrix::new(m, Partition::qubits(2)?)
}
