//! Density matrices over partitioned spaces, local projective measurements
//! and the non-selective measurement map `Phi(rho) = sum_j Pi_j rho Pi_j`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, hermitian_eigenvalues, kron, trace_norm, ComplexMatrix, C64, ONE, ZERO,
};
use crate::witness::witness_norm;

/// Default trace-norm tolerance for classicality decisions.
pub const DEFAULT_CLASSICALITY_TOL: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const MIN_EIGENVALUE: f64 = -1e-10;
const PROJECTOR_TOL: f64 = 1e-12;

/// Ordered subsystem dimensions of a composite space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    dims: Vec<usize>,
}

impl Partition {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidPartition("no parties".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidPartition(format!("party dimension {d} < 2")));
        }
        Ok(Self { dims })
    }

    /// `n` qubit parties.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn all_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix with its partition.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    partition: Partition,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, partition: Partition) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        if matrix.rows() != partition.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimension {} vs partition product {}",
                matrix.rows(),
                partition.total_dim()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)?.last().copied().unwrap_or(0.0);
        if min_eig < MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { matrix, partition })
    }

    /// `|psi><psi|` for a (not necessarily normalised) vector.
    pub fn from_pure(psi: &[C64], partition: Partition) -> Result<Self> {
        let n = crate::linalg::vec_norm(psi);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|x| x / n).collect();
        Self::new(ComplexMatrix::outer(&v), partition)
    }

    /// Skips the positivity check; callers guarantee validity by construction.
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, partition: Partition) -> Self {
        debug_assert_eq!(matrix.rows(), partition.total_dim());
        Self { matrix, partition }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Reduced state of the parties in `keep`.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = crate::linalg::partial_trace(&self.matrix, self.partition.dims(), keep)?;
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        let dims = kept.iter().map(|&k| self.partition.dims()[k]).collect();
        Ok(Self { matrix: m, partition: Partition::new(dims)? })
    }

    /// Conjugation by a unitary acting on the whole space.
    pub fn rotated(&self, u: &ComplexMatrix) -> Result<DensityMatrix> {
        let m = u.matmul(&self.matrix)?.matmul(&u.adjoint())?.hermitian_part();
        Ok(Self { matrix: m, partition: self.partition.clone() })
    }
}

/// Polar/azimuthal Bloch angles, one pair per qubit party.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementAngles {
    angles: Vec<(f64, f64)>,
}

impl MeasurementAngles {
    /// Accepts `theta` in `[0, pi]`, `phi` in `[0, 2 pi)`.
    pub fn new(angles: Vec<(f64, f64)>) -> Result<Self> {
        for &(t, p) in &angles {
            if !(0.0..=PI).contains(&t) || !(0.0..TAU).contains(&p) {
                return Err(Error::InvalidMeasurement(format!("angles ({t}, {p}) out of range")));
            }
        }
        Ok(Self { angles })
    }

    /// Folds arbitrary real angles into the canonical ranges; the azimuth is
    /// set to zero at the poles where it carries no information.
    pub fn canonical(raw: &[(f64, f64)]) -> Self {
        let angles = raw
            .iter()
            .map(|&(t, p)| {
                let mut t = t.rem_euclid(TAU);
                let mut p = p;
                if t > PI {
                    t = TAU - t;
                    p += PI;
                }
                let p = if t < 1e-12 || PI - t < 1e-12 { 0.0 } else { p.rem_euclid(TAU) };
                (t, if p >= TAU { 0.0 } else { p })
            })
            .collect();
        Self { angles }
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn parties(&self) -> usize {
        self.angles.len()
    }
}

/// Orthonormal basis `{|+n>, |-n>}` for the Bloch direction at `(theta, phi)`,
/// returned as a unitary whose columns are the basis vectors.
pub fn bloch_basis(theta: f64, phi: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = C64::from_polar(1.0, phi);
    let mut u = ComplexMatrix::zeros(2, 2);
    u[(0, 0)] = C64::new(c, 0.0);
    u[(1, 0)] = e * s;
    u[(0, 1)] = -e.conj() * s;
    u[(1, 1)] = C64::new(c, 0.0);
    u
}

/// One orthonormal basis per party; the rank-1 projectors are the outer
/// products of the basis columns.
#[derive(Clone, Debug)]
pub struct LocalMeasurement {
    bases: Vec<ComplexMatrix>,
}

impl LocalMeasurement {
    /// Each matrix must be unitary; column `i` is the range of projector `i`.
    pub fn from_bases(bases: Vec<ComplexMatrix>) -> Result<Self> {
        for (k, u) in bases.iter().enumerate() {
            if !u.is_square() {
                return Err(Error::InvalidMeasurement(format!("party {k}: non-square basis")));
            }
            let gram = u.adjoint().matmul(u)?;
            let defect = gram.max_abs_diff(&ComplexMatrix::identity(u.rows()));
            if defect > PROJECTOR_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "party {k}: basis not orthonormal (defect {defect:e})"
                )));
            }
        }
        Ok(Self { bases })
    }

    /// Explicit projector sets. Each set must consist of rank-1 orthogonal
    /// projectors summing to the identity.
    pub fn from_projectors(sets: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let mut bases = Vec::with_capacity(sets.len());
        for (k, set) in sets.iter().enumerate() {
            let d = set.first().map_or(0, |p| p.rows());
            if set.len() != d || d < 2 {
                return Err(Error::InvalidMeasurement(format!(
                    "party {k}: need {d} rank-1 projectors, got {}",
                    set.len()
                )));
            }
            let mut sum = ComplexMatrix::zeros(d, d);
            let mut columns = Vec::with_capacity(d);
            for (i, p) in set.iter().enumerate() {
                if p.rows() != d || p.cols() != d {
                    return Err(Error::InvalidMeasurement(format!("party {k}: shape mismatch")));
                }
                if p.hermiticity_defect() > PROJECTOR_TOL {
                    return Err(Error::InvalidMeasurement(format!("party {k}: Pi_{i} not Hermitian")));
                }
                let sq = p.matmul(p)?;
                if sq.max_abs_diff(p) > PROJECTOR_TOL {
                    return Err(Error::InvalidMeasurement(format!("party {k}: Pi_{i} not idempotent")));
                }
                if (p.trace() - ONE).norm() > PROJECTOR_TOL {
                    return Err(Error::InvalidMeasurement(format!("party {k}: Pi_{i} not rank 1")));
                }
                for (j, q) in set.iter().enumerate().skip(i + 1) {
                    if p.matmul(q)?.max_abs() > PROJECTOR_TOL {
                        return Err(Error::InvalidMeasurement(format!(
                            "party {k}: Pi_{i} and Pi_{j} not orthogonal"
                        )));
                    }
                }
                sum = sum.try_add(p)?;
                // Range vector: the column with the largest diagonal weight.
                let c = (0..d).max_by(|&a, &b| p[(a, a)].re.total_cmp(&p[(b, b)].re)).unwrap();
                let w = p[(c, c)].re.sqrt();
                columns.push(p.column(c).into_iter().map(|x| x / w).collect::<Vec<_>>());
            }
            if sum.max_abs_diff(&ComplexMatrix::identity(d)) > PROJECTOR_TOL {
                return Err(Error::InvalidMeasurement(format!("party {k}: projectors incomplete")));
            }
            bases.push(ComplexMatrix::from_fn(d, d, |r, c| columns[c][r]));
        }
        Self::from_bases(bases)
    }

    pub fn computational(partition: &Partition) -> Self {
        Self { bases: partition.dims().iter().map(|&d| ComplexMatrix::identity(d)).collect() }
    }

    pub fn from_angles(angles: &MeasurementAngles) -> Self {
        Self { bases: angles.as_slice().iter().map(|&(t, p)| bloch_basis(t, p)).collect() }
    }

    pub fn parties(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[ComplexMatrix] {
        &self.bases
    }

    pub fn matches(&self, partition: &Partition) -> bool {
        self.bases.len() == partition.parties()
            && self.bases.iter().zip(partition.dims()).all(|(u, &d)| u.rows() == d)
    }

    fn check(&self, partition: &Partition) -> Result<()> {
        if self.matches(partition) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("measurement does not match partition".into()))
        }
    }

    pub fn party_projectors(&self, party: usize) -> Vec<ComplexMatrix> {
        let u = &self.bases[party];
        (0..u.cols()).map(|i| ComplexMatrix::outer(&u.column(i))).collect()
    }

    /// Joint basis `U_1 (x) ... (x) U_N`.
    pub fn joint_basis(&self) -> Result<ComplexMatrix> {
        let mut u = ComplexMatrix::identity(1);
        for b in &self.bases {
            u = kron(&u, b)?;
        }
        Ok(u)
    }

    /// All joint projectors `Pi_j`, index strings in lexicographic order with
    /// the first party most significant.
    pub fn joint_projectors(&self) -> Result<Vec<ComplexMatrix>> {
        let u = self.joint_basis()?;
        Ok((0..u.cols()).map(|j| ComplexMatrix::outer(&u.column(j))).collect())
    }
}

/// `U^dagger rho U` for the joint measurement basis.
fn in_measurement_basis(rho: &ComplexMatrix, m: &LocalMeasurement) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let u = m.joint_basis()?;
    let r = u.adjoint().matmul(rho)?.matmul(&u)?;
    Ok((u, r))
}

/// `||rho - Phi(rho)||_1`, computed as the trace norm of the off-diagonal
/// part of `rho` written in the measurement basis.
pub fn disturbance(rho: &DensityMatrix, m: &LocalMeasurement) -> Result<f64> {
    m.check(rho.partition())?;
    let (_, mut r) = in_measurement_basis(rho.matrix(), m)?;
    for i in 0..r.rows() {
        r[(i, i)] = ZERO;
    }
    trace_norm(&r.hermitian_part())
}

/// Non-selective local measurement `Phi(rho) = sum_j Pi_j rho Pi_j`.
pub fn apply_measurement(rho: &DensityMatrix, m: &LocalMeasurement) -> Result<DensityMatrix> {
    m.check(rho.partition())?;
    let (u, r) = in_measurement_basis(rho.matrix(), m)?;
    let probs: Vec<C64> = r.diagonal().into_iter().map(|p| C64::new(p.re, 0.0)).collect();
    let out = u.matmul(&ComplexMatrix::from_diagonal(&probs))?.matmul(&u.adjoint())?;
    Ok(DensityMatrix::from_parts_unchecked(out.hermitian_part(), rho.partition().clone()))
}

/// `rho = sum_j p_j Pi_j`.
pub fn make_classical_state(
    partition: &Partition,
    m: &LocalMeasurement,
    probs: &[f64],
) -> Result<DensityMatrix> {
    m.check(partition)?;
    if probs.len() != partition.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} joint projectors",
            probs.len(),
            partition.total_dim()
        )));
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization { sum });
    }
    let u = m.joint_basis()?;
    let d: Vec<C64> = probs.iter().map(|&p| C64::new(p, 0.0)).collect();
    let rho = u.matmul(&ComplexMatrix::from_diagonal(&d))?.matmul(&u.adjoint())?;
    Ok(DensityMatrix::from_parts_unchecked(rho.hermitian_part(), partition.clone()))
}

/// `||Phi(rho) - rho||_1 <= tol`.
pub fn is_classical_under(rho: &DensityMatrix, m: &LocalMeasurement, tol: f64) -> Result<bool> {
    Ok(disturbance(rho, m)? <= tol)
}

/// `max_j ||[rho, Pi_j]||_1`; zero exactly when `rho` is classical under `m`.
pub fn max_commutator_norm(rho: &DensityMatrix, m: &LocalMeasurement) -> Result<f64> {
    m.check(rho.partition())?;
    let mut worst = 0.0f64;
    for p in m.joint_projectors()? {
        worst = worst.max(trace_norm(&commutator(rho.matrix(), &p)?)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessImplication {
    /// `||Phi(rho) - rho||_1`.
    pub disturbance: f64,
    /// `||[rho, rho_A1 (x) ... (x) rho_AN]||_1`.
    pub witness: f64,
    /// False only if `rho` is classical under `m` yet the witness is nonzero.
    pub implication_holds: bool,
}

/// Evaluates both sides of "classical under `m` implies vanishing witness".
pub fn check_witness_implication(rho: &DensityMatrix, m: &LocalMeasurement) -> Result<WitnessImplication> {
    let dist = disturbance(rho, m)?;
    let w = witness_norm(rho)?;
    let implication_holds = dist > DEFAULT_CLASSICALITY_TOL || w <= DEFAULT_CLASSICALITY_TOL;
    Ok(WitnessImplication { disturbance: dist, witness: w, implication_holds })
}

/// Reads the plain-text state format: party dimensions on the first line,
/// then the row-major entries as whitespace-separated `re,im` pairs.
pub fn parse_state_text(text: &str) -> Result<DensityMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let first = lines.next().ok_or_else(|| Error::Parse("empty state file".into()))?;
    let dims = first
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension '{t}'"))))
        .collect::<Result<Vec<_>>>()?;
    let partition = Partition::new(dims)?;
    let d = partition.total_dim();
    let mut data = Vec::with_capacity(d * d);
    for tok in lines.flat_map(str::split_whitespace) {
        let (re, im) = tok.split_once(',').ok_or_else(|| Error::Parse(format!("expected re,im, got '{tok}'")))?;
        let re: f64 = re.parse().map_err(|_| Error::Parse(format!("bad number '{re}'")))?;
        let im: f64 = im.parse().map_err(|_| Error::Parse(format!("bad number '{im}'")))?;
        data.push(C64::new(re, im));
    }
    if data.len() != d * d {
        return Err(Error::Parse(format!("expected {} entries, found {}", d * d, data.len())));
    }
    DensityMatrix::new(ComplexMatrix::from_vec(d, d, data)?, partition)
}

pub fn format_state_text(rho: &DensityMatrix) -> String {
    let dims: Vec<String> = rho.partition().dims().iter().map(|d| d.to_string()).collect();
    let mut out = dims.join(" ");
    out.push('\n');
    let m = rho.matrix();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::*;
    use crate::witness::{CorrelatorSet, XStateParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> DensityMatrix {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        DensityMatrix::from_pure(&[s, ZERO, ZERO, s], Partition::qubits(2).unwrap()).unwrap()
    }

    /// `sum_j Pi_j rho Pi_j` summed term by term.
    fn phi_oracle(rho: &ComplexMatrix, m: &LocalMeasurement) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for p in m.joint_projectors().unwrap() {
            out = &out + &(&(&p * rho) * &p);
        }
        out
    }

    #[test]
    fn state_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = DensityMatrix::new(random_density(&mut rng, 4), Partition::qubits(2).unwrap()).unwrap();
        let back = parse_state_text(&format_state_text(&rho)).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
        assert!(parse_state_text("2 2\n1,0 0,0").is_err());
        assert!(parse_state_text("2\n1,0 0,0 0,0 x").is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![]).is_err());
        assert!(Partition::new(vec![2, 1]).is_err());
        let p = Partition::new(vec![2, 3, 2]).unwrap();
        assert_eq!(p.total_dim(), 12);
        assert!(!p.all_qubits());
    }

    #[test]
    fn density_validation() {
        let p = Partition::qubits(1).unwrap();
        assert!(DensityMatrix::new(ComplexMatrix::identity(2), p.clone()).is_err());
        let neg = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(DensityMatrix::new(neg, p.clone()).is_err());
        let mut nh = ComplexMatrix::identity(2).scale_real(0.5);
        nh[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(nh, p.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(2).scale_real(0.5), p).is_ok());
    }

    #[test]
    fn measurement_validation() {
        let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!(LocalMeasurement::from_projectors(vec![vec![p0.clone(), p1.clone()]]).is_ok());
        // incomplete
        assert!(LocalMeasurement::from_projectors(vec![vec![p0.clone(), p0.clone()]]).is_err());
        // not idempotent
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(LocalMeasurement::from_projectors(vec![vec![half.clone(), half]]).is_err());
        // a qutrit basis supplied explicitly
        let q: Vec<ComplexMatrix> = (0..3)
            .map(|i| {
                let mut d = [0.0; 3];
                d[i] = 1.0;
                ComplexMatrix::from_real_diagonal(&d)
            })
            .collect();
        let m = LocalMeasurement::from_projectors(vec![q, vec![p0, p1]]).unwrap();
        assert!(m.matches(&Partition::new(vec![3, 2]).unwrap()));
    }

    #[test]
    fn projectors_round_trip_through_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 3));
        let sets = (0..3).map(|k| m.party_projectors(k)).collect();
        let m2 = LocalMeasurement::from_projectors(sets).unwrap();
        let a = m.joint_projectors().unwrap();
        let b = m2.joint_projectors().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.max_abs_diff(y) < 1e-13);
        }
    }

    #[test]
    fn bloch_projectors_point_along_direction() {
        let (t, p) = (1.1, 2.3);
        let proj = &LocalMeasurement::from_angles(&MeasurementAngles::new(vec![(t, p)]).unwrap())
            .party_projectors(0)[0];
        let n = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
        let expected = &(&crate::linalg::pauli_x().scale_real(n[0])
            + &crate::linalg::pauli_y().scale_real(n[1]))
            + &crate::linalg::pauli_z().scale_real(n[2]);
        let expected = (&ComplexMatrix::identity(2) + &expected).scale_real(0.5);
        assert!(proj.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn diagonal_state_is_unchanged_by_computational_measurement() {
        let p = Partition::qubits(2).unwrap();
        let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.1, 0.2, 0.3, 0.4]), p.clone())
            .unwrap();
        let out = apply_measurement(&rho, &LocalMeasurement::computational(&p)).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn bell_state_loses_coherences() {
        let rho = bell();
        let out = apply_measurement(&rho, &LocalMeasurement::computational(rho.partition())).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn measurement_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = Partition::qubits(2).unwrap();
        for _ in 0..20 {
            let rho = DensityMatrix::new(random_density(&mut rng, 4), p.clone()).unwrap();
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 2));
            let fast = apply_measurement(&rho, &m).unwrap();
            let oracle = phi_oracle(rho.matrix(), &m);
            assert!(fast.matrix().max_abs_diff(&oracle) < 1e-14);
        }
    }

    #[test]
    fn measurement_rejects_partition_mismatch() {
        let rho = bell();
        let m = LocalMeasurement::computational(&Partition::qubits(3).unwrap());
        assert!(apply_measurement(&rho, &m).is_err());
    }

    #[test]
    fn classical_state_construction() {
        let p = Partition::qubits(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 2));

        let uniform = make_classical_state(&p, &m, &[0.25; 4]).unwrap();
        assert!(uniform.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);

        let pure = make_classical_state(&p, &m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let u = m.joint_basis().unwrap();
        assert!(pure.matrix().max_abs_diff(&ComplexMatrix::outer(&u.column(0))) < 1e-15);

        for _ in 0..50 {
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 2));
            let rho = make_classical_state(&p, &m, &random_probabilities(&mut rng, 4)).unwrap();
            let out = apply_measurement(&rho, &m).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) <= 1e-12);
            assert!(is_classical_under(&rho, &m, DEFAULT_CLASSICALITY_TOL).unwrap());
        }
    }

    #[test]
    fn classical_state_normalization_errors() {
        let p = Partition::qubits(1).unwrap();
        let m = LocalMeasurement::computational(&p);
        assert!(matches!(make_classical_state(&p, &m, &[0.6, 0.6]), Err(Error::Normalization { .. })));
        assert!(matches!(make_classical_state(&p, &m, &[1.2, -0.2]), Err(Error::Normalization { .. })));
        assert!(make_classical_state(&p, &m, &[0.5, 0.5]).is_ok());
    }

    #[test]
    fn classicality_of_simple_states() {
        let p = Partition::qubits(2).unwrap();
        let comp = LocalMeasurement::computational(&p);
        let up_down = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0]), p).unwrap();
        assert!(is_classical_under(&up_down, &comp, DEFAULT_CLASSICALITY_TOL).unwrap());

        let rho = bell();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 2));
            assert!(!is_classical_under(&rho, &m, DEFAULT_CLASSICALITY_TOL).unwrap());
            let out = apply_measurement(&rho, &m).unwrap();
            let d = trace_norm(&(out.matrix() - rho.matrix())).unwrap();
            assert!(d > 0.1, "disturbance {d}");
        }
    }

    #[test]
    fn witness_implication_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for n in 2..=3 {
            let p = Partition::qubits(n).unwrap();
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, n));
            let rho = make_classical_state(&p, &m, &random_probabilities(&mut rng, 1 << n)).unwrap();
            let r = check_witness_implication(&rho, &m).unwrap();
            assert!(r.disturbance <= 1e-10 && r.witness <= 1e-10, "{r:?}");
            assert!(r.implication_holds);
        }

        let rho = bell();
        let r = check_witness_implication(&rho, &LocalMeasurement::computational(rho.partition())).unwrap();
        assert!(r.disturbance > 0.5);
        assert!(r.witness < 1e-15);
        assert!(r.implication_holds);

        for _ in 0..20 {
            let c = CorrelatorSet {
                g_z: rng.gen_range(0.05..0.5),
                g_xx: rng.gen_range(0.2..0.4),
                g_yy: rng.gen_range(-0.2..0.1),
                g_zz: rng.gen_range(0.0..0.2),
                ..Default::default()
            };
            let x = XStateParams::from_correlators(&c).unwrap();
            let rho = x.density_matrix();
            let r = check_witness_implication(&rho, &LocalMeasurement::computational(rho.partition())).unwrap();
            assert!(r.disturbance > 0.0 && r.witness > 0.0, "{c:?} {r:?}");
        }
    }

    #[test]
    fn commutator_criterion_equivalence_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut classical_seen = 0;
        for trial in 0..1200 {
            let n = 2 + trial % 2;
            let p = Partition::qubits(n).unwrap();
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, n));
            let rho = if trial % 3 == 0 {
                classical_seen += 1;
                make_classical_state(&p, &m, &random_probabilities(&mut rng, 1 << n)).unwrap()
            } else {
                DensityMatrix::new(random_density(&mut rng, 1 << n), p).unwrap()
            };
            let undisturbed = disturbance(&rho, &m).unwrap() <= 1e-12;
            let commuting = max_commutator_norm(&rho, &m).unwrap() <= 1e-10;
            assert_eq!(undisturbed, commuting, "trial {trial}");
        }
        assert!(classical_seen >= 300);
    }

    /// `sum_j [rho, Pi_j][rho, Pi_j]^dagger
    ///   = rho^2 + Phi(rho^2) - rho Phi(rho) - Phi(rho) rho`,
    /// which collapses to `Phi(rho^2) - rho^2` once `Phi(rho) = rho`.
    #[test]
    fn sum_of_commutator_squares_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = Partition::qubits(2).unwrap();
        for _ in 0..20 {
            let rho = DensityMatrix::new(random_density(&mut rng, 4), p.clone()).unwrap();
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 2));
            let mut lhs = ComplexMatrix::zeros(4, 4);
            for pj in m.joint_projectors().unwrap() {
                let c = commutator(rho.matrix(), &pj).unwrap();
                lhs = &lhs + &(&c * &c.adjoint());
            }
            let r = rho.matrix();
            let rho2 = r * r;
            let phi = phi_oracle(r, &m);
            let rhs = &(&(&rho2 + &phi_oracle(&rho2, &m)) - &(r * &phi)) - &(&phi * r);
            assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
            // Traceless right-hand side of the collapsed form cannot match a
            // nonzero positive left-hand side.
            assert!(lhs.trace().re > 1e-6);
        }
        for _ in 0..20 {
            let m = LocalMeasurement::from_angles(&random_angles(&mut rng, 2));
            let rho = make_classical_state(&p, &m, &random_probabilities(&mut rng, 4)).unwrap();
            let mut lhs = ComplexMatrix::zeros(4, 4);
            for pj in m.joint_projectors().unwrap() {
                let c = commutator(rho.matrix(), &pj).unwrap();
                lhs = &lhs + &(&c * &c.adjoint());
            }
            let rho2 = rho.matrix() * rho.matrix();
            let rhs = &phi_oracle(&rho2, &m) - &rho2;
            assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
            assert!(lhs.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn measurement_is_idempotent_and_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for n in 1..=3 {
            let p = Partition::qubits(n).unwrap();
            for _ in 0..10 {
                let rho = DensityMatrix::new(random_density(&mut rng, 1 << n), p.clone()).unwrap();
                let m = LocalMeasurement::from_angles(&random_angles(&mut rng, n));
                let once = apply_measurement(&rho, &m).unwrap();
                let twice = apply_measurement(&once, &m).unwrap();
                assert!(once.matrix().max_abs_diff(twice.matrix()) <= 1e-12);
                assert!((once.matrix().trace() - ONE).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn canonical_angles_fold_into_range() {
        let a = MeasurementAngles::canonical(&[(-0.3, 7.0), (0.0, 1.0), (PI + 0.2, 0.1)]);
        let s = a.as_slice();
        assert!((s[0].0 - 0.3).abs() < 1e-15);
        assert!((s[0].1 - (7.0 + PI).rem_euclid(TAU)).abs() < 1e-12);
        assert_eq!(s[1], (0.0, 0.0));
        assert!((s[2].0 - (PI - 0.2)).abs() < 1e-12);
        // Same Bloch direction before and after folding.
        for (&(t, p), &(tc, pc)) in [(-0.3f64, 7.0f64), (PI + 0.2, 0.1)].iter().zip([s[0], s[2]].iter()) {
            let n = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
            let m = [tc.sin() * pc.cos(), tc.sin() * pc.sin(), tc.cos()];
            for k in 0..3 {
                assert!((n[k] - m[k]).abs() < 1e-12);
            }
        }
    }
}
