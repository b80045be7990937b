//! Per-qubit dephasing channel with the quartz-thickness Gaussian law
//! `p(l) = (1 - exp(-Gamma l^2)) / 2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::states::{qubit_bit, CMat, DensityMatrix, QubitSet};

/// Dephasing description: rate `gamma` (units of 1/lambda0^2 with the
/// thickness `ell` in lambda0 units) applied to `targets`.
#[derive(Debug, Clone)]
pub struct DephasingSpec {
    gamma: f64,
    ell: f64,
    targets: QubitSet,
}

impl DephasingSpec {
    pub fn new(gamma: f64, ell: f64, targets: QubitSet) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::NegativeParameter(format!("gamma = {gamma}")));
        }
        if ell < 0.0 {
            return Err(Error::NegativeParameter(format!("ell = {ell}")));
        }
        Ok(Self {
            gamma,
            ell,
            targets,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn targets(&self) -> &QubitSet {
        &self.targets
    }

    pub fn prob(&self) -> f64 {
        dephase_prob(self.gamma, self.ell).expect("validated on construction")
    }
}

/// `p(l) = (1 - exp(-Gamma l^2)) / 2`, in [0, 1/2].
pub fn dephase_prob(gamma: f64, ell: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::NegativeParameter(format!("gamma = {gamma}")));
    }
    if ell < 0.0 {
        return Err(Error::NegativeParameter(format!("ell = {ell}")));
    }
    Ok(0.5 * (-(-gamma * ell * ell).exp() + 1.0))
}

/// Apply the channel by its exact element-wise form: the off-diagonal
/// element between bitstrings differing on k target qubits picks up a
/// factor (1-2p)^k; diagonals are untouched.
pub fn apply_dephasing(rho: &DensityMatrix, spec: &DephasingSpec) -> Result<DensityMatrix> {
    apply_dephasing_p(rho, spec.prob(), spec.targets())
}

/// Direct-probability parameterization of [`apply_dephasing`].
pub fn apply_dephasing_p(rho: &DensityMatrix, p: f64, targets: &QubitSet) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::NegativeParameter(format!(
            "dephasing probability {p} outside [0, 1/2]"
        )));
    }
    for &q in targets.labels() {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
    }
    let factor = 1.0 - 2.0 * p;
    let dim = rho.dim();
    let mut mask = 0usize;
    for &q in targets.labels() {
        mask |= 1usize << (n - 1 - q);
    }
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let k = ((i ^ j) & mask).count_ones();
            let scale = factor.powi(k as i32);
            out[(i, j)] = rho.element(i, j) * Complex64::new(scale, 0.0);
        }
    }
    Ok(DensityMatrix::new_unchecked(n, out))
}

/// Kraus-form reference: sequentially, for each target qubit,
/// `rho <- (1-p) rho + p Z_q rho Z_q`. Kept as an independent cross-check
/// of the element-wise implementation.
pub fn apply_dephasing_kraus(
    rho: &DensityMatrix,
    p: f64,
    targets: &QubitSet,
) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::NegativeParameter(format!(
            "dephasing probability {p} outside [0, 1/2]"
        )));
    }
    let dim = rho.dim();
    let mut mat = rho.matrix().clone();
    for &q in targets.labels() {
        if q >= n {
            return Err(Error::QubitOutOfRange { q, n });
        }
        let mut z_rho_z = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let si = 1.0 - 2.0 * qubit_bit(i, q, n) as f64;
                let sj = 1.0 - 2.0 * qubit_bit(j, q, n) as f64;
                z_rho_z[(i, j)] = mat[(i, j)] * Complex64::new(si * sj, 0.0);
            }
        }
        mat = mat * Complex64::new(1.0 - p, 0.0) + z_rho_z * Complex64::new(p, 0.0);
    }
    Ok(DensityMatrix::new_unchecked(n, mat))
}
