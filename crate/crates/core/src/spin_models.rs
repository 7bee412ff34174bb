//! Pauli-string operators with a matrix-free matvec, and the XY and quantum
//! Ashkin-Teller chain Hamiltonians built from them.
//!
//! Site `k` of an `n`-spin register is bit `n - 1 - k` of the basis index,
//! so site 0 is the leftmost tensor factor and contiguous blocks of leading
//! sites are contiguous index ranges. Bit value 0 is spin up (`sigma_z = +1`).

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I, ONE, ZERO};

/// Largest register handled by state-vector routines.
pub const MAX_SPINS: usize = 28;

/// Below this dimension matvec runs serially.
const PARALLEL_MIN_DIM: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => crate::linalg::pauli_x(),
            Pauli::Y => crate::linalg::pauli_y(),
            Pauli::Z => crate::linalg::pauli_z(),
        }
    }
}

/// Real coefficient times a tensor product of single-site Paulis, stored as
/// X and Z bit masks (`Y = i X Z`).
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    coefficient: f64,
    x_mask: u64,
    z_mask: u64,
    n_spins: usize,
}

impl PauliString {
    pub fn from_labels(coefficient: f64, labels: &[Pauli]) -> Result<Self> {
        let n = labels.len();
        if n == 0 || n > MAX_SPINS {
            return Err(Error::InvalidParameter(format!("{n} spins (max {MAX_SPINS})")));
        }
        let (mut x_mask, mut z_mask) = (0u64, 0u64);
        for (site, p) in labels.iter().enumerate() {
            let bit = 1u64 << (n - 1 - site);
            let (x, z) = p.bits();
            if x {
                x_mask |= bit;
            }
            if z {
                z_mask |= bit;
            }
        }
        Ok(Self { coefficient, x_mask, z_mask, n_spins: n })
    }

    /// Identity everywhere except the listed `(site, label)` pairs.
    pub fn sparse(n_spins: usize, coefficient: f64, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut labels = vec![Pauli::I; n_spins];
        for &(site, p) in ops {
            if site >= n_spins {
                return Err(Error::InvalidParameter(format!("site {site} >= {n_spins}")));
            }
            labels[site] = p;
        }
        Self::from_labels(coefficient, &labels)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn labels(&self) -> Vec<Pauli> {
        (0..self.n_spins)
            .map(|site| {
                let bit = 1u64 << (self.n_spins - 1 - site);
                match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
                    (false, false) => Pauli::I,
                    (true, false) => Pauli::X,
                    (true, true) => Pauli::Y,
                    (false, true) => Pauli::Z,
                }
            })
            .collect()
    }

    /// Coefficient times `i^(number of Y)`.
    fn phase(&self) -> C64 {
        let ny = (self.x_mask & self.z_mask).count_ones() % 4;
        let ipow = [ONE, I, -ONE, -I][ny as usize];
        ipow * self.coefficient
    }

    /// Dense matrix via Kronecker products of the site labels.
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::identity(1);
        for p in self.labels() {
            m = crate::linalg::kron(&m, &p.matrix())?;
        }
        Ok(m.scale_real(self.coefficient))
    }
}

/// Terms sharing one bit-flip pattern; each contributes
/// `factor * (-1)^popcount(b & z_mask)` with `b` the source index.
#[derive(Clone, Debug)]
struct FlipGroup {
    x_mask: usize,
    terms: Vec<(C64, usize)>,
}

impl FlipGroup {
    fn coefficient(&self, b: usize) -> C64 {
        let mut c = ZERO;
        for &(f, z) in &self.terms {
            if z != 0 && (b & z).count_ones() & 1 == 1 {
                c -= f;
            } else {
                c += f;
            }
        }
        c
    }
}

/// Largest dimension for which the diagonal is tabulated.
const DIAGONAL_TABLE_MAX_DIM: usize = 1 << 22;

/// Hermitian operator `sum_t c_t P_t` over `n_spins` spins-1/2.
#[derive(Clone, Debug)]
pub struct PauliStringOperator {
    n_spins: usize,
    terms: Vec<PauliString>,
    groups: Vec<FlipGroup>,
    diagonal: OnceLock<Option<Vec<C64>>>,
}

impl PauliStringOperator {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 || n_spins > MAX_SPINS {
            return Err(Error::InvalidParameter(format!("{n_spins} spins (max {MAX_SPINS})")));
        }
        Ok(Self { n_spins, terms: Vec::new(), groups: Vec::new(), diagonal: OnceLock::new() })
    }

    pub fn push(&mut self, term: PauliString) -> Result<()> {
        if term.n_spins != self.n_spins {
            return Err(Error::DimensionMismatch(format!(
                "term on {} spins added to {}-spin operator",
                term.n_spins, self.n_spins
            )));
        }
        let (x_mask, entry) = (term.x_mask as usize, (term.phase(), term.z_mask as usize));
        match self.groups.iter_mut().find(|g| g.x_mask == x_mask) {
            Some(g) => g.terms.push(entry),
            None => self.groups.push(FlipGroup { x_mask, terms: vec![entry] }),
        }
        self.diagonal = OnceLock::new();
        self.terms.push(term);
        Ok(())
    }

    /// `coefficient * prod_(site, label)`.
    pub fn add(&mut self, coefficient: f64, ops: &[(usize, Pauli)]) -> Result<()> {
        self.push(PauliString::sparse(self.n_spins, coefficient, ops)?)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_spins
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// Upper bound on the spectral radius: `sum_t |c_t|`.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    fn diagonal_table(&self) -> Option<&[C64]> {
        self.diagonal
            .get_or_init(|| {
                let g = self.groups.iter().find(|g| g.x_mask == 0)?;
                (self.dim() <= DIAGONAL_TABLE_MAX_DIM).then(|| (0..self.dim()).map(|a| g.coefficient(a)).collect())
            })
            .as_deref()
    }

    fn row_value(&self, a: usize, v: &[C64], diag: Option<&[C64]>) -> C64 {
        let mut s = diag.map_or(ZERO, |d| d[a] * v[a]);
        for g in &self.groups {
            if diag.is_some() && g.x_mask == 0 {
                continue;
            }
            let b = a ^ g.x_mask;
            s += g.coefficient(b) * v[b];
        }
        s
    }

    /// `out = H v`, term by term on the bit representation.
    pub fn matvec_into(&self, v: &[C64], out: &mut [C64]) -> Result<()> {
        let dim = self.dim();
        if v.len() != dim || out.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "vector lengths {} / {} for dimension {dim}",
                v.len(),
                out.len()
            )));
        }
        let diag = self.diagonal_table();
        if dim >= PARALLEL_MIN_DIM {
            out.par_chunks_mut(4096).enumerate().for_each(|(chunk, o)| {
                let base = chunk * 4096;
                for (k, slot) in o.iter_mut().enumerate() {
                    *slot = self.row_value(base + k, v, diag);
                }
            });
        } else {
            for (a, slot) in out.iter_mut().enumerate() {
                *slot = self.row_value(a, v, diag);
            }
        }
        Ok(())
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![ZERO; self.dim()];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    /// `<v|H|v>`.
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let hv = self.matvec(v)?;
        Ok(crate::linalg::inner(v, &hv))
    }

    /// `<u|H|v>`.
    pub fn matrix_element(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        let hv = self.matvec(v)?;
        Ok(crate::linalg::inner(u, &hv))
    }

    /// Dense matrix, assembled column by column from matvecs.
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        if self.n_spins > 12 {
            return Err(Error::DimensionCap { dim: self.dim(), cap: 1 << 12 });
        }
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        for j in 0..dim {
            e[j] = ONE;
            let col = self.matvec(&e)?;
            e[j] = ZERO;
            for (i, x) in col.into_iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        Ok(m)
    }

    /// Sum of two operators on the same register.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone())?;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XYParams {
    pub n_spins: usize,
    /// Anisotropy in `[0, 1]`.
    pub gamma: f64,
    /// `J / h`.
    pub lambda: f64,
    /// Longitudinal `sigma_x` pinning field, units of `h`.
    pub pinning_eps: f64,
}

/// Pinning strength used when a symmetry-breaking field is requested.
pub const DEFAULT_PINNING_EPS: f64 = 1e-3;

impl XYParams {
    pub fn new(n_spins: usize, gamma: f64, lambda: f64) -> Result<Self> {
        let p = Self { n_spins, gamma, lambda, pinning_eps: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_pinning(mut self, eps: f64) -> Result<Self> {
        self.pinning_eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 2 || self.n_spins > MAX_SPINS {
            return Err(Error::InvalidParameter(format!("XY chain needs 2..={MAX_SPINS} spins")));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda {} < 0", self.lambda)));
        }
        if !(self.pinning_eps >= 0.0 && self.pinning_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("pinning {} < 0", self.pinning_eps)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ATParams {
    /// Number of sites `M`; the register holds `2M` spins.
    pub n_sites: usize,
    pub beta: f64,
    pub delta: f64,
    pub coupling: f64,
}

impl ATParams {
    pub fn new(n_sites: usize, beta: f64, delta: f64) -> Result<Self> {
        let p = Self { n_sites, beta, delta, coupling: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn n_spins(&self) -> usize {
        2 * self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || 2 * self.n_sites > MAX_SPINS {
            return Err(Error::InvalidParameter(format!("Ashkin-Teller chain needs 2..={} sites", MAX_SPINS / 2)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta {} must be positive", self.beta)));
        }
        if !self.delta.is_finite() || !self.coupling.is_finite() {
            return Err(Error::InvalidParameter("non-finite coupling".into()));
        }
        Ok(())
    }

    /// Register index of `sigma_j`.
    pub fn sigma(j: usize) -> usize {
        2 * j
    }

    /// Register index of `tau_j`.
    pub fn tau(j: usize) -> usize {
        2 * j + 1
    }
}

/// `H = -sum_i { (lambda/2) [(1+gamma) X_i X_{i+1} + (1-gamma) Y_i Y_{i+1}] + Z_i }
///      - eps sum_i X_i` on a ring.
pub fn build_xy(p: &XYParams) -> Result<PauliStringOperator> {
    p.validate()?;
    let n = p.n_spins;
    let mut h = PauliStringOperator::new(n)?;
    let jxx = -0.5 * p.lambda * (1.0 + p.gamma);
    let jyy = -0.5 * p.lambda * (1.0 - p.gamma);
    for i in 0..n {
        let j = (i + 1) % n;
        h.add(jxx, &[(i, Pauli::X), (j, Pauli::X)])?;
        h.add(jyy, &[(i, Pauli::Y), (j, Pauli::Y)])?;
        h.add(-1.0, &[(i, Pauli::Z)])?;
    }
    if p.pinning_eps > 0.0 {
        for i in 0..n {
            h.add(-p.pinning_eps, &[(i, Pauli::X)])?;
        }
    }
    Ok(h)
}

/// Quantum Ashkin-Teller ring with interleaved `sigma_0 tau_0 sigma_1 tau_1 ...`.
pub fn build_ashkin_teller(p: &ATParams) -> Result<PauliStringOperator> {
    p.validate()?;
    let m = p.n_sites;
    let jc = p.coupling;
    let mut h = PauliStringOperator::new(p.n_spins())?;
    for j in 0..m {
        let (s, t) = (ATParams::sigma(j), ATParams::tau(j));
        h.add(-jc, &[(s, Pauli::X)])?;
        h.add(-jc, &[(t, Pauli::X)])?;
        h.add(-jc * p.delta, &[(s, Pauli::X), (t, Pauli::X)])?;
    }
    for j in 0..m {
        let k = (j + 1) % m;
        let (s0, t0, s1, t1) = (ATParams::sigma(j), ATParams::tau(j), ATParams::sigma(k), ATParams::tau(k));
        h.add(-jc * p.beta, &[(s0, Pauli::Z), (s1, Pauli::Z)])?;
        h.add(-jc * p.beta, &[(t0, Pauli::Z), (t1, Pauli::Z)])?;
        h.add(-jc * p.beta * p.delta, &[(s0, Pauli::Z), (s1, Pauli::Z), (t0, Pauli::Z), (t1, Pauli::Z)])?;
    }
    Ok(h)
}

/// `prod_i Z_i`.
pub fn xy_parity(n_spins: usize) -> Result<PauliStringOperator> {
    let mut p = PauliStringOperator::new(n_spins)?;
    p.push(PauliString::from_labels(1.0, &vec![Pauli::Z; n_spins])?)?;
    Ok(p)
}

/// `(prod_j sigma^x_j, prod_j tau^x_j)`.
pub fn ashkin_teller_parities(n_sites: usize) -> Result<(PauliStringOperator, PauliStringOperator)> {
    let n = 2 * n_sites;
    let mut p1 = PauliStringOperator::new(n)?;
    let mut p2 = PauliStringOperator::new(n)?;
    let sig: Vec<(usize, Pauli)> = (0..n_sites).map(|j| (ATParams::sigma(j), Pauli::X)).collect();
    let tau: Vec<(usize, Pauli)> = (0..n_sites).map(|j| (ATParams::tau(j), Pauli::X)).collect();
    p1.add(1.0, &sig)?;
    p2.add(1.0, &tau)?;
    Ok((p1, p2))
}

/// Uniform order parameter `(1/n) sum_i X_i`.
pub fn x_magnetization(n_spins: usize) -> Result<PauliStringOperator> {
    let mut m = PauliStringOperator::new(n_spins)?;
    for i in 0..n_spins {
        m.add(1.0 / n_spins as f64, &[(i, Pauli::X)])?;
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelParams {
    Xy(XYParams),
    AshkinTeller(ATParams),
}

impl ModelParams {
    pub fn n_spins(&self) -> usize {
        match self {
            ModelParams::Xy(p) => p.n_spins,
            ModelParams::AshkinTeller(p) => p.n_spins(),
        }
    }

    pub fn hamiltonian(&self) -> Result<PauliStringOperator> {
        match self {
            ModelParams::Xy(p) => build_xy(p),
            ModelParams::AshkinTeller(p) => build_ashkin_teller(p),
        }
    }
}

/// The Z2 parity of the XY chain, or both Z2 parities of the Ashkin-Teller
/// chain.
pub fn parity_operators(params: &ModelParams) -> Result<(PauliStringOperator, Option<PauliStringOperator>)> {
    match params {
        ModelParams::Xy(p) => Ok((xy_parity(p.n_spins)?, None)),
        ModelParams::AshkinTeller(p) => {
            let (a, b) = ashkin_teller_parities(p.n_sites)?;
            Ok((a, Some(b)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, kron, pauli_x, pauli_y, pauli_z};
    use crate::random::random_state_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn embed(n: usize, ops: &[(usize, ComplexMatrix)]) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(1);
        for site in 0..n {
            let f = ops.iter().find(|(s, _)| *s == site).map(|(_, m)| m.clone()).unwrap_or(ComplexMatrix::identity(2));
            m = kron(&m, &f).unwrap();
        }
        m
    }

    fn dense_matches_matvec(h: &PauliStringOperator, rng: &mut impl Rng, vectors: usize) {
        let d = h.to_dense().unwrap();
        for _ in 0..vectors {
            let v = random_state_vector(rng, h.dim());
            let a = h.matvec(&v).unwrap();
            let b = d.matvec(&v).unwrap();
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-12, "{err}");
        }
    }

    fn commutes(a: &PauliStringOperator, b: &PauliStringOperator) -> f64 {
        commutator(&a.to_dense().unwrap(), &b.to_dense().unwrap()).unwrap().max_abs()
    }

    #[test]
    fn labels_round_trip() {
        let labels = [Pauli::X, Pauli::I, Pauli::Y, Pauli::Z];
        let s = PauliString::from_labels(0.5, &labels).unwrap();
        assert_eq!(s.labels(), labels);
        let dense = s.to_dense().unwrap();
        let expected = embed(4, &[(0, pauli_x()), (2, pauli_y()), (3, pauli_z())]).scale_real(0.5);
        assert!(dense.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn identity_string_leaves_vector_unchanged() {
        let mut h = PauliStringOperator::new(3).unwrap();
        h.add(1.0, &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let v = random_state_vector(&mut rng, 8);
        assert_eq!(h.matvec(&v).unwrap(), v);
    }

    #[test]
    fn single_z_flips_half_the_signs() {
        let mut h = PauliStringOperator::new(3).unwrap();
        h.add(1.0, &[(0, Pauli::Z)]).unwrap();
        let v = vec![ONE; 8];
        let out = h.matvec(&v).unwrap();
        // Site 0 is the most significant bit.
        let expected: Vec<C64> = (0..8).map(|a| if a & 4 == 0 { ONE } else { -ONE }).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn matvec_rejects_wrong_length() {
        let h = build_xy(&XYParams::new(3, 0.5, 1.0).unwrap()).unwrap();
        assert!(matches!(h.matvec(&[ONE; 4]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn random_operator_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 8;
        let mut h = PauliStringOperator::new(n).unwrap();
        let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for _ in 0..25 {
            let labels: Vec<Pauli> = (0..n).map(|_| all[rng.gen_range(0..4)]).collect();
            h.push(PauliString::from_labels(rng.gen_range(-1.0..1.0), &labels).unwrap()).unwrap();
        }
        // Dense oracle from Kronecker products, independent of matvec.
        let mut dense = ComplexMatrix::zeros(256, 256);
        for t in h.terms() {
            dense = &dense + &t.to_dense().unwrap();
        }
        for _ in 0..5 {
            let v = random_state_vector(&mut rng, 256);
            let a = h.matvec(&v).unwrap();
            let b = dense.matvec(&v).unwrap();
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-12);
        }
    }

    #[test]
    fn parallel_matvec_matches_serial_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let h = build_ashkin_teller(&ATParams::new(7, 0.8, 1.3).unwrap()).unwrap();
        let v = random_state_vector(&mut rng, h.dim());
        let par = h.matvec(&v).unwrap();
        let serial: Vec<C64> = (0..h.dim()).map(|a| h.row_value(a, &v, h.diagonal_table())).collect();
        assert_eq!(par, serial);
    }

    #[test]
    fn xy_term_count_and_field_limit() {
        let h = build_xy(&XYParams::new(5, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(h.terms().len(), 15);
        let pinned = build_xy(&XYParams::new(5, 1.0, 0.0).unwrap().with_pinning(1e-3).unwrap()).unwrap();
        assert_eq!(pinned.terms().len(), 20);
        // All up is an eigenvector with energy -N.
        let mut up = vec![ZERO; 32];
        up[0] = ONE;
        let hv = h.matvec(&up).unwrap();
        assert!((hv[0] + 5.0).norm() < 1e-15);
        assert!(hv[1..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn two_spin_ising_matches_hand_construction() {
        let lambda = 0.7;
        let h = build_xy(&XYParams::new(2, 1.0, lambda).unwrap()).unwrap();
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let zi = kron(&pauli_z(), &ComplexMatrix::identity(2)).unwrap();
        let iz = kron(&ComplexMatrix::identity(2), &pauli_z()).unwrap();
        // Two bonds (0,1) and (1,0) on the two-site ring.
        let expected = &xx.scale_real(-2.0 * lambda) - &(&zi + &iz);
        assert!(h.to_dense().unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn xx_model_conserves_magnetization() {
        let n = 5;
        let h = build_xy(&XYParams::new(n, 0.0, 1.3).unwrap()).unwrap();
        let mut mz = PauliStringOperator::new(n).unwrap();
        for i in 0..n {
            mz.add(1.0, &[(i, Pauli::Z)]).unwrap();
        }
        assert!(commutes(&h, &mz) <= 1e-12);
        let h = build_xy(&XYParams::new(n, 0.4, 1.3).unwrap()).unwrap();
        assert!(commutes(&h, &mz) > 0.1);
    }

    #[test]
    fn ashkin_teller_decouples_at_zero_delta() {
        let p = ATParams::new(3, 0.9, 0.0).unwrap();
        let h = build_ashkin_teller(&p).unwrap();
        let mut sigma = PauliStringOperator::new(6).unwrap();
        let mut tau = PauliStringOperator::new(6).unwrap();
        for t in h.terms() {
            let on_tau = t.labels().iter().enumerate().any(|(k, &l)| l != Pauli::I && k % 2 == 1);
            if on_tau {
                tau.push(t.clone()).unwrap();
            } else {
                sigma.push(t.clone()).unwrap();
            }
        }
        assert!(commutes(&sigma, &tau) <= 1e-12);
    }

    #[test]
    fn ashkin_teller_matches_hand_construction() {
        let (beta, delta) = (1.0, 3.0);
        let h = build_ashkin_teller(&ATParams::new(2, beta, delta).unwrap()).unwrap();
        let d = h.to_dense().unwrap();
        assert!(d.is_hermitian(1e-15));
        let (x, z) = (pauli_x(), pauli_z());
        let mut expected = ComplexMatrix::zeros(16, 16);
        for j in 0..2 {
            let (s, t) = (2 * j, 2 * j + 1);
            expected = &expected - &embed(4, &[(s, x.clone())]);
            expected = &expected - &embed(4, &[(t, x.clone())]);
            expected = &expected - &embed(4, &[(s, x.clone()), (t, x.clone())]).scale_real(delta);
        }
        for j in 0..2 {
            let k = (j + 1) % 2;
            let ss = embed(4, &[(2 * j, z.clone()), (2 * k, z.clone())]);
            let tt = embed(4, &[(2 * j + 1, z.clone()), (2 * k + 1, z.clone())]);
            expected = &expected - &ss.scale_real(beta);
            expected = &expected - &tt.scale_real(beta);
            expected = &expected - &(&ss * &tt).scale_real(beta * delta);
        }
        assert!(d.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn parities_are_conserved_involutions() {
        let at = ModelParams::AshkinTeller(ATParams::new(3, 0.7, 2.0).unwrap());
        let h = at.hamiltonian().unwrap();
        let (p1, p2) = parity_operators(&at).unwrap();
        let p2 = p2.unwrap();
        for p in [&p1, &p2] {
            assert!(commutes(&h, p) <= 1e-12);
            let d = p.to_dense().unwrap();
            assert!((&d * &d).max_abs_diff(&ComplexMatrix::identity(64)) < 1e-15);
        }

        let xy = ModelParams::Xy(XYParams::new(6, 0.6, 1.4).unwrap());
        let (p, none) = parity_operators(&xy).unwrap();
        assert!(none.is_none());
        assert!(commutes(&xy.hamiltonian().unwrap(), &p) <= 1e-12);

        let two = xy_parity(2).unwrap().to_dense().unwrap();
        assert!(two.max_abs_diff(&kron(&pauli_z(), &pauli_z()).unwrap()) < 1e-15);
    }

    #[test]
    fn pinning_breaks_parity() {
        let p = XYParams::new(4, 0.6, 1.4).unwrap().with_pinning(1e-3).unwrap();
        let h = build_xy(&p).unwrap();
        assert!(commutes(&h, &xy_parity(4).unwrap()) > 1e-4);
    }

    #[test]
    fn built_hamiltonians_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let models = [
            ModelParams::Xy(XYParams::new(10, 0.6, 1.3).unwrap()),
            ModelParams::Xy(XYParams::new(7, 0.0, 0.4).unwrap().with_pinning(0.01).unwrap()),
            ModelParams::AshkinTeller(ATParams::new(5, 1.0, 3.0).unwrap()),
            ModelParams::AshkinTeller(ATParams::new(4, 0.6, -0.5).unwrap()),
        ];
        for m in models {
            dense_matches_matvec(&m.hamiltonian().unwrap(), &mut rng, 50);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(XYParams::new(1, 0.5, 1.0).is_err());
        assert!(XYParams::new(4, 1.5, 1.0).is_err());
        assert!(XYParams::new(4, 0.5, -1.0).is_err());
        assert!(ATParams::new(1, 1.0, 1.0).is_err());
        assert!(ATParams::new(4, 0.0, 1.0).is_err());
    }
}
