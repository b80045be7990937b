//! States, structural maps, and dense complex linear algebra on small
//! qubit registers.
//!
//! Basis convention: qubit 0 (the leftmost label, A) is the most
//! significant bit of the computational basis index, so `|100>` on three
//! qubits is index 4.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const MAX_QUBITS: usize = 10;
/// Hermiticity / trace / normalization tolerance.
pub const STATE_TOL: f64 = 1e-12;
/// Eigenvalues in [-PSD_FLOOR, 0) are clamped to zero; anything more
/// negative is a hard error.
pub const PSD_FLOOR: f64 = 1e-10;

/// Bit of `index` belonging to qubit `q` on an `n`-qubit register.
#[inline]
pub fn qubit_bit(index: usize, q: usize, n: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// An ordered set of qubit labels in `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitSet {
    labels: Vec<usize>,
}

impl QubitSet {
    pub fn new(mut labels: Vec<usize>, n_qubits: usize) -> Result<Self> {
        labels.sort_unstable();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateQubit(w[0]));
            }
        }
        for &q in &labels {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { q, n: n_qubits });
            }
        }
        Ok(Self { labels })
    }

    pub fn all(n_qubits: usize) -> Self {
        Self {
            labels: (0..n_qubits).collect(),
        }
    }

    pub fn single(q: usize, n_qubits: usize) -> Result<Self> {
        Self::new(vec![q], n_qubits)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.labels.binary_search(&q).is_ok()
    }
}

/// Normalized amplitude vector over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: CVec,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: CVec) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::RegisterTooLarge(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} amplitudes, got {}",
                dim,
                amplitudes.len()
            )));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized((norm_sq - 1.0).abs()));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }
}

/// Named states used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedState {
    W,
    Wbar,
    WWbar,
    Star,
    Ghz(usize),
    Dicke(usize, usize),
    BasisKet { n_qubits: usize, bits: usize },
}

fn uniform_support(n_qubits: usize, support: &[usize]) -> Result<PureState> {
    let dim = 1usize << n_qubits;
    let amp = Complex64::new(1.0 / (support.len() as f64).sqrt(), 0.0);
    let mut v = CVec::zeros(dim);
    for &idx in support {
        v[idx] = amp;
    }
    PureState::new(n_qubits, v)
}

pub fn make_named_state(name: NamedState) -> Result<PureState> {
    match name {
        NamedState::W => uniform_support(3, &[0b001, 0b010, 0b100]),
        NamedState::Wbar => uniform_support(3, &[0b110, 0b101, 0b011]),
        NamedState::WWbar => uniform_support(3, &[0b001, 0b010, 0b100, 0b011, 0b101, 0b110]),
        NamedState::Star => uniform_support(3, &[0b000, 0b100, 0b101, 0b111]),
        NamedState::Ghz(n) => {
            if n == 0 || n > MAX_QUBITS {
                return Err(Error::InvalidStateSpec(format!("GHZ({n})")));
            }
            uniform_support(n, &[0, (1usize << n) - 1])
        }
        NamedState::Dicke(n, k) => {
            if n == 0 || n > MAX_QUBITS || k > n {
                return Err(Error::InvalidStateSpec(format!("Dicke({n},{k})")));
            }
            let support: Vec<usize> =
                (0..1usize << n).filter(|i| i.count_ones() as usize == k).collect();
            uniform_support(n, &support)
        }
        NamedState::BasisKet { n_qubits, bits } => {
            if n_qubits == 0 || n_qubits > MAX_QUBITS || bits >= (1usize << n_qubits) {
                return Err(Error::InvalidStateSpec(format!(
                    "BasisKet({n_qubits},{bits})"
                )));
            }
            uniform_support(n_qubits, &[bits])
        }
    }
}

/// Parse a state name as used by the CLI: `w`, `wbar`, `wwbar`, `star`,
/// `ghz3`, `dicke4_2`, `ket010`.
pub fn parse_state_name(s: &str) -> Result<NamedState> {
    let s = s.to_ascii_lowercase();
    match s.as_str() {
        "w" => return Ok(NamedState::W),
        "wbar" => return Ok(NamedState::Wbar),
        "wwbar" => return Ok(NamedState::WWbar),
        "star" => return Ok(NamedState::Star),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("ghz") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::InvalidStateSpec(s.clone()))?;
        return Ok(NamedState::Ghz(n));
    }
    if let Some(rest) = s.strip_prefix("dicke") {
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() == 2 {
            let n = parts[0].parse().map_err(|_| Error::InvalidStateSpec(s.clone()))?;
            let k = parts[1].parse().map_err(|_| Error::InvalidStateSpec(s.clone()))?;
            return Ok(NamedState::Dicke(n, k));
        }
        return Err(Error::InvalidStateSpec(s));
    }
    if let Some(rest) = s.strip_prefix("ket") {
        if !rest.is_empty() && rest.chars().all(|c| c == '0' || c == '1') {
            let bits = usize::from_str_radix(rest, 2).unwrap();
            return Ok(NamedState::BasisKet {
                n_qubits: rest.len(),
                bits,
            });
        }
        return Err(Error::InvalidStateSpec(s));
    }
    Err(Error::InvalidStateSpec(s))
}

/// Trace-one PSD Hermitian matrix over an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(mat: CMat) -> Result<Self> {
        let dim = mat.nrows();
        if dim != mat.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not a square power-of-two matrix",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::RegisterTooLarge(n_qubits));
        }
        let mut herm_dev = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                herm_dev = herm_dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if herm_dev > STATE_TOL {
            return Err(Error::NotHermitian(herm_dev));
        }
        let trace_dev = (mat.trace() - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > STATE_TOL {
            return Err(Error::TraceNotOne(trace_dev));
        }
        let (eigs, _) = eig_hermitian(&mat)?;
        if eigs[0] < -PSD_FLOOR {
            return Err(Error::NotPositiveSemidefinite(eigs[0]));
        }
        Ok(Self { n_qubits, mat })
    }

    pub(crate) fn new_unchecked(n_qubits: usize, mat: CMat) -> Self {
        Self { n_qubits, mat }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    /// Max-norm distance between the two matrices.
    pub fn max_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
    }
}

pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    let v = psi.amplitudes();
    let mat = v * v.adjoint();
    DensityMatrix::new_unchecked(psi.n_qubits(), mat)
}

/// Project qubit `q` onto `(|0> + |1>)/sqrt(2)`, remove it, renormalize.
pub fn project_qubit_plus(psi: &PureState, q: usize) -> Result<PureState> {
    let n = psi.n_qubits();
    if q >= n {
        return Err(Error::QubitOutOfRange { q, n });
    }
    if n == 1 {
        return Err(Error::UnsupportedRegister(
            "cannot project out the only qubit".into(),
        ));
    }
    let new_n = n - 1;
    let new_dim = 1usize << new_n;
    let shift = n - 1 - q; // bit position of q in the full index
    let low_mask = (1usize << shift) - 1;
    let mut out = CVec::zeros(new_dim);
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    for i in 0..new_dim {
        let high = (i & !low_mask) << 1;
        let low = i & low_mask;
        let idx0 = high | low;
        let idx1 = high | (1usize << shift) | low;
        out[i] = (psi.amplitude(idx0) + psi.amplitude(idx1)) * inv_sqrt2;
    }
    let norm: f64 = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(Error::ZeroNormProjection);
    }
    out /= Complex64::new(norm, 0.0);
    PureState::new(new_n, out)
}

/// Kronecker product with `rho1`'s qubits more significant.
pub fn tensor(rho1: &DensityMatrix, rho2: &DensityMatrix) -> DensityMatrix {
    let mat = rho1.matrix().kronecker(rho2.matrix());
    DensityMatrix::new_unchecked(rho1.n_qubits() + rho2.n_qubits(), mat)
}

/// Reduced state on `keep`, in ascending original label order.
pub fn partial_trace(rho: &DensityMatrix, keep: &QubitSet) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    for &q in keep.labels() {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
    }
    let kept = keep.labels();
    let discarded: Vec<usize> = (0..n).filter(|q| !keep.contains(*q)).collect();
    let k = kept.len();
    let out_dim = 1usize << k;
    let env_dim = 1usize << discarded.len();

    // full-register index from a kept-part index and an environment index
    let compose = |part: usize, env: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            let bit = (part >> (k - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        for (pos, &q) in discarded.iter().enumerate() {
            let bit = (env >> (discarded.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        idx
    };

    let mut out = CMat::zeros(out_dim, out_dim);
    for i in 0..out_dim {
        for j in 0..out_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..env_dim {
                acc += rho.element(compose(i, e), compose(j, e));
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix::new_unchecked(k, out))
}

/// Zero all off-diagonal elements (computational basis).
pub fn dephased_diagonal(rho: &DensityMatrix) -> DensityMatrix {
    let dim = rho.dim();
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        out[(i, i)] = Complex64::new(rho.element(i, i).re, 0.0);
    }
    DensityMatrix::new_unchecked(rho.n_qubits(), out)
}

/// Tensor product of all single-qubit marginals, original qubit order.
pub fn product_of_marginals(rho: &DensityMatrix) -> DensityMatrix {
    let n = rho.n_qubits();
    let mut out: Option<DensityMatrix> = None;
    for q in 0..n {
        let marg = partial_trace(rho, &QubitSet::single(q, n).unwrap()).unwrap();
        out = Some(match out {
            None => marg,
            Some(acc) => tensor(&acc, &marg),
        });
    }
    out.unwrap()
}

/// Transpose the indices of the given qubits (partial transpose). The
/// result need not be PSD, so a raw matrix is returned.
pub fn partial_transpose(rho: &DensityMatrix, qubits: &QubitSet) -> Result<CMat> {
    let n = rho.n_qubits();
    for &q in qubits.labels() {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
    }
    let dim = rho.dim();
    let mut mask = 0usize;
    for &q in qubits.labels() {
        mask |= 1usize << (n - 1 - q);
    }
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            // swap the masked bits between row and column
            let ti = (i & !mask) | (j & mask);
            let tj = (j & !mask) | (i & mask);
            out[(ti, tj)] = rho.element(i, j);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and
/// the matching orthonormal eigenvector columns.
pub fn eig_hermitian(h: &CMat) -> Result<(DVector<f64>, CMat)> {
    let dim = h.nrows();
    if dim != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            h.nrows(),
            h.ncols()
        )));
    }
    let mut herm_dev = 0.0f64;
    for i in 0..dim {
        for j in i..dim {
            herm_dev = herm_dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if herm_dev > 1e-10 {
        return Err(Error::NotHermitian(herm_dev));
    }
    // symmetrize to suppress round-off before factorization
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let decomp = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| decomp.eigenvalues[a].total_cmp(&decomp.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&i| decomp.eigenvalues[i]));
    let mut vectors = CMat::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &decomp.eigenvectors.column(i));
    }
    Ok((eigenvalues, vectors))
}
