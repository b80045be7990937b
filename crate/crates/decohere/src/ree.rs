//! Relative entropy of entanglement: minimize S(rho || sigma) over fully
//! separable states sigma by alternating weight / factor descent over a
//! product-pure-state ensemble, with seeded random restarts.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{clamp_spectrum, entropy_of_spectrum};
use crate::states::{eig_hermitian, CMat, CVec, DensityMatrix};

/// Full-rank regularizer mixed into sigma before taking its logarithm.
const SIGMA_MIX: f64 = 1e-12;
/// Hard floor on regularized eigenvalues.
const EIG_FLOOR: f64 = 1e-14;
/// Overlap above which two ensemble members count as duplicates.
const DUP_OVERLAP: f64 = 1.0 - 1e-10;
/// Objective floor: S(rho || sigma) this small means rho is separable to
/// well below the reporting floor, so the restart stops early.
const OBJECTIVE_FLOOR: f64 = 5e-8;
/// Frank-Wolfe duality gap below which the restart is certified
/// converged (the gap upper-bounds f - f* for the convex objective).
const GAP_TOL: f64 = 5e-5;
/// Minimum objective improvement a 100-iteration window must deliver for
/// a restart to keep going; below this the restart is abandoned and
/// reported as not converged.
const PLATEAU_EPS: f64 = 1e-6;
/// Ensemble weights below this are pruned during duplicate merging.
const WEIGHT_PRUNE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ReeOptions {
    /// Ensemble size; `None` means 4 * 2^n.
    pub ensemble_size: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence tolerance on the objective change.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ReeOptions {
    fn default() -> Self {
        Self {
            ensemble_size: None,
            restarts: 24,
            max_iters: 2000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl ReeOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReeResult {
    /// Upper bound on E in nats (raw solver value, not floored).
    pub value: f64,
    pub sigma_star: DensityMatrix,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    /// max - min over the restart optima.
    pub spread: f64,
}

/// Mixture of product pure states parameterized by Bloch angles
/// (theta, phi) per qubit per member; the first amplitude of each factor
/// is kept real and non-negative.
#[derive(Debug, Clone)]
pub struct SeparableEnsemble {
    n_qubits: usize,
    weights: Vec<f64>,
    /// angles[member][qubit] = (theta, phi)
    angles: Vec<Vec<(f64, f64)>>,
}

fn bloch_factor(theta: f64, phi: f64) -> [Complex64; 2] {
    [
        Complex64::new((0.5 * theta).cos(), 0.0),
        Complex64::from_polar((0.5 * theta).sin(), phi),
    ]
}

/// The solver handles at most 3 qubits, so kets fit in a stack buffer.
const MAX_DIM: usize = 8;
type Ket = [Complex64; MAX_DIM];

const KET_ZERO: Ket = [Complex64::new(0.0, 0.0); MAX_DIM];

/// Kronecker product of single-qubit factors written into `out`;
/// returns the ket dimension 2^n.
fn ket_from_factors(factors: &[[Complex64; 2]], out: &mut Ket) -> usize {
    out[0] = Complex64::new(1.0, 0.0);
    let mut len = 1usize;
    for f in factors {
        for i in (0..len).rev() {
            let a = out[i];
            out[2 * i] = a * f[0];
            out[2 * i + 1] = a * f[1];
        }
        len *= 2;
    }
    len
}

fn ket_from_angles(angles: &[(f64, f64)], out: &mut Ket) -> usize {
    out[0] = Complex64::new(1.0, 0.0);
    let mut len = 1usize;
    for &(theta, phi) in angles {
        let f = bloch_factor(theta, phi);
        for i in (0..len).rev() {
            let a = out[i];
            out[2 * i] = a * f[0];
            out[2 * i + 1] = a * f[1];
        }
        len *= 2;
    }
    len
}

/// <a|b> over the first `dim` entries.
fn ket_dotc(a: &Ket, b: &Ket, dim: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        acc += a[i].conj() * b[i];
    }
    acc
}

/// out = M |k> over the leading dim x dim block.
fn mat_ket(m: &CMat, k: &Ket, dim: usize, out: &mut Ket) {
    for r in 0..dim {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            acc += m[(r, c)] * k[c];
        }
        out[r] = acc;
    }
}

impl SeparableEnsemble {
    pub fn new(n_qubits: usize, weights: Vec<f64>, angles: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if weights.len() != angles.len() || weights.is_empty() {
            return Err(Error::DimensionMismatch(
                "weights and member lists must have equal non-zero length".into(),
            ));
        }
        if angles.iter().any(|a| a.len() != n_qubits) {
            return Err(Error::DimensionMismatch(
                "every member needs one (theta, phi) pair per qubit".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::NegativeParameter("ensemble weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized((total - 1.0).abs()));
        }
        let mut ens = Self {
            n_qubits,
            weights,
            angles,
        };
        ens.canonicalize_gauge();
        Ok(ens)
    }

    /// Haar-random factors on each qubit, uniform weights.
    pub fn random<R: Rng>(n_qubits: usize, m: usize, rng: &mut R) -> Self {
        let mut angles = Vec::with_capacity(m);
        for _ in 0..m {
            let mut member = Vec::with_capacity(n_qubits);
            for _ in 0..n_qubits {
                let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
                let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                member.push((theta, phi));
            }
            angles.push(member);
        }
        Self {
            n_qubits,
            weights: vec![1.0 / m as f64; m],
            angles,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn angles(&self) -> &[Vec<(f64, f64)>] {
        &self.angles
    }

    pub fn member_ket(&self, j: usize) -> CVec {
        let mut buf = KET_ZERO;
        let dim = ket_from_angles(&self.angles[j], &mut buf);
        CVec::from_iterator(dim, buf[..dim].iter().copied())
    }

    /// sigma = sum_j p_j |psi_j><psi_j|
    pub fn assemble(&self) -> CMat {
        let dim = 1usize << self.n_qubits;
        let mut sigma = CMat::zeros(dim, dim);
        let mut ket = KET_ZERO;
        for j in 0..self.len() {
            let w = self.weights[j];
            if w == 0.0 {
                continue;
            }
            ket_from_angles(&self.angles[j], &mut ket);
            for r in 0..dim {
                let wk = ket[r] * w;
                for c in 0..dim {
                    sigma[(r, c)] += wk * ket[c].conj();
                }
            }
        }
        sigma
    }

    /// Map all angles back to theta in [0, pi] so the first factor
    /// amplitude stays real and non-negative.
    fn canonicalize_gauge(&mut self) {
        let two_pi = 2.0 * std::f64::consts::PI;
        for member in &mut self.angles {
            for ang in member.iter_mut() {
                let (mut theta, mut phi) = *ang;
                theta = theta.rem_euclid(two_pi);
                if theta > std::f64::consts::PI {
                    theta = two_pi - theta;
                    phi += std::f64::consts::PI;
                }
                phi = phi.rem_euclid(two_pi);
                if (theta - std::f64::consts::PI).abs() < 1e-15 {
                    phi = 0.0;
                }
                *ang = (theta, phi);
            }
        }
    }
}

/// Eigendecomposition of the regularized sigma: clamped eigenvalues get
/// SIGMA_MIX / dim mixed in and are floored at EIG_FLOOR.
struct SigmaEig {
    lambda: Vec<f64>,
    vectors: CMat,
}

fn sigma_eig(sigma: &CMat) -> Result<SigmaEig> {
    let dim = sigma.nrows();
    let (raw, vectors) = eig_hermitian(sigma)?;
    let lambda: Vec<f64> = raw
        .iter()
        .map(|&l| (l.max(0.0) + SIGMA_MIX / dim as f64).max(EIG_FLOOR))
        .collect();
    Ok(SigmaEig { lambda, vectors })
}

/// S(rho || sigma) with sigma regularized; `tr_rho_ln_rho` is precomputed.
fn objective_from_eig(tr_rho_ln_rho: f64, rho: &CMat, se: &SigmaEig) -> f64 {
    let rotated = se.vectors.adjoint() * rho * &se.vectors;
    let mut tr_rho_ln_sigma = 0.0;
    for i in 0..se.lambda.len() {
        let w = rotated[(i, i)].re;
        tr_rho_ln_sigma += w * se.lambda[i].ln();
    }
    tr_rho_ln_rho - tr_rho_ln_sigma
}

fn objective(tr_rho_ln_rho: f64, rho: &CMat, ensemble: &SeparableEnsemble) -> Result<f64> {
    let se = sigma_eig(&ensemble.assemble())?;
    Ok(objective_from_eig(tr_rho_ln_rho, rho, &se))
}

/// Public objective evaluation: S(rho || sigma(ensemble)).
pub fn ensemble_objective(rho: &DensityMatrix, ensemble: &SeparableEnsemble) -> Result<f64> {
    let tr = tr_rho_ln_rho(rho)?;
    objective(tr, rho.matrix(), ensemble)
}

fn tr_rho_ln_rho(rho: &DensityMatrix) -> Result<f64> {
    let (eigs, _) = eig_hermitian(rho.matrix())?;
    let clamped = clamp_spectrum(eigs.as_slice())?;
    Ok(-entropy_of_spectrum(&clamped))
}

/// Gradient of f(sigma) = -Tr rho ln sigma as a Hermitian matrix G with
/// df = -Tr(G dSigma): G = V (K ∘ V† rho V) V†, K the log divided
/// differences of the regularized spectrum.
fn grad_matrix(rho: &CMat, se: &SigmaEig) -> CMat {
    let dim = se.lambda.len();
    let rotated = se.vectors.adjoint() * rho * &se.vectors;
    let mut inner = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let li = se.lambda[i];
            let lj = se.lambda[j];
            let d = li - lj;
            let k = if d.abs() <= 1e-12 * li.max(lj) {
                2.0 / (li + lj)
            } else {
                (d / lj).ln_1p() / d
            };
            inner[(i, j)] = rotated[(i, j)] * Complex64::new(k, 0.0);
        }
    }
    &se.vectors * inner * se.vectors.adjoint()
}

/// One convex weight update with the factors held fixed. Duplicate
/// members are merged first; the multiplicative update is safeguarded so
/// the objective never increases beyond 1e-12.
pub fn weight_step(rho: &DensityMatrix, ensemble: &SeparableEnsemble) -> Result<SeparableEnsemble> {
    let tr = tr_rho_ln_rho(rho)?;
    Ok(weight_step_inner(tr, rho.matrix(), &merge_duplicates(ensemble))?.0)
}

fn merge_duplicates(ensemble: &SeparableEnsemble) -> SeparableEnsemble {
    let m = ensemble.len();
    let dim = 1usize << ensemble.n_qubits;
    let kets: Vec<Ket> = (0..m)
        .map(|j| {
            let mut buf = KET_ZERO;
            ket_from_angles(&ensemble.angles[j], &mut buf);
            buf
        })
        .collect();
    let mut weights: Vec<f64> = Vec::new();
    let mut angles: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    'outer: for j in 0..m {
        for (slot, &i) in kept.iter().enumerate() {
            let overlap = ket_dotc(&kets[i], &kets[j], dim).norm_sqr();
            if overlap > DUP_OVERLAP {
                weights[slot] += ensemble.weights[j];
                continue 'outer;
            }
        }
        kept.push(j);
        weights.push(ensemble.weights[j]);
        angles.push(ensemble.angles[j].clone());
    }
    // prune dead members, keeping the normalization intact
    if weights.iter().any(|&w| w < WEIGHT_PRUNE) && weights.len() > 1 {
        let mut pruned_w = Vec::new();
        let mut pruned_a = Vec::new();
        for (w, a) in weights.iter().zip(angles.iter()) {
            if *w >= WEIGHT_PRUNE {
                pruned_w.push(*w);
                pruned_a.push(a.clone());
            }
        }
        if !pruned_w.is_empty() {
            let total: f64 = pruned_w.iter().sum();
            for w in &mut pruned_w {
                *w /= total;
            }
            weights = pruned_w;
            angles = pruned_a;
        }
    }
    SeparableEnsemble {
        n_qubits: ensemble.n_qubits,
        weights,
        angles,
    }
}

fn weight_step_inner(
    tr_rho_ln_rho: f64,
    rho: &CMat,
    ensemble: &SeparableEnsemble,
) -> Result<(SeparableEnsemble, f64)> {
    let (ens, f, _se) = weight_step_eig(tr_rho_ln_rho, rho, ensemble)?;
    Ok((ens, f))
}

fn weight_step_eig(
    tr_rho_ln_rho: f64,
    rho: &CMat,
    ensemble: &SeparableEnsemble,
) -> Result<(SeparableEnsemble, f64, SigmaEig)> {
    let se = sigma_eig(&ensemble.assemble())?;
    let f0 = objective_from_eig(tr_rho_ln_rho, rho, &se);
    let g = grad_matrix(rho, &se);
    let dim = 1usize << ensemble.n_qubits;
    let mut ket = KET_ZERO;
    let mut g_ket = KET_ZERO;
    let mut new_weights = Vec::with_capacity(ensemble.len());
    for j in 0..ensemble.len() {
        ket_from_angles(&ensemble.angles[j], &mut ket);
        mat_ket(&g, &ket, dim, &mut g_ket);
        let expect = ket_dotc(&ket, &g_ket, dim).re.max(0.0);
        new_weights.push(ensemble.weights[j] * expect);
    }
    let total: f64 = new_weights.iter().sum();
    if total <= 0.0 {
        return Ok((ensemble.clone(), f0, se));
    }
    for w in &mut new_weights {
        *w /= total;
    }
    // safeguarded: damp toward the old weights if the EM step overshoots
    let mut t = 1.0;
    for _ in 0..30 {
        let trial_weights: Vec<f64> = ensemble
            .weights
            .iter()
            .zip(&new_weights)
            .map(|(&a, &b)| (1.0 - t) * a + t * b)
            .collect();
        let trial = SeparableEnsemble {
            n_qubits: ensemble.n_qubits,
            weights: trial_weights,
            angles: ensemble.angles.clone(),
        };
        let trial_se = sigma_eig(&trial.assemble())?;
        let f = objective_from_eig(tr_rho_ln_rho, rho, &trial_se);
        if f <= f0 + 1e-12 {
            return Ok((trial, f, trial_se));
        }
        t *= 0.5;
    }
    Ok((ensemble.clone(), f0, se))
}

/// Analytic gradient of the objective with respect to the flattened
/// angle parameters, ordered (member, qubit, theta-then-phi).
pub fn factor_gradient(rho: &DensityMatrix, ensemble: &SeparableEnsemble) -> Result<Vec<f64>> {
    let se = sigma_eig(&ensemble.assemble())?;
    let g = grad_matrix(rho.matrix(), &se);
    Ok(factor_gradient_inner(&g, ensemble))
}

fn factor_gradient_inner(g: &CMat, ensemble: &SeparableEnsemble) -> Vec<f64> {
    let n = ensemble.n_qubits;
    let mut grad = Vec::with_capacity(ensemble.len() * n * 2);
    let dim = 1usize << n;
    let mut ket = KET_ZERO;
    let mut g_ket = KET_ZERO;
    let mut d_ket = KET_ZERO;
    let mut factors: Vec<[Complex64; 2]> = vec![[Complex64::new(0.0, 0.0); 2]; n];
    for j in 0..ensemble.len() {
        let p = ensemble.weights[j];
        for (q, &(t2, p2)) in ensemble.angles[j].iter().enumerate() {
            factors[q] = bloch_factor(t2, p2);
        }
        ket_from_factors(&factors, &mut ket);
        mat_ket(g, &ket, dim, &mut g_ket);
        for q in 0..n {
            let (theta, phi) = ensemble.angles[j][q];
            let d_theta = [
                Complex64::new(-0.5 * (0.5 * theta).sin(), 0.0),
                Complex64::from_polar(0.5 * (0.5 * theta).cos(), phi),
            ];
            let d_phi = [
                Complex64::new(0.0, 0.0),
                Complex64::from_polar((0.5 * theta).sin(), phi) * Complex64::new(0.0, 1.0),
            ];
            let saved = factors[q];
            for deriv in [d_theta, d_phi] {
                // d|psi> with factor q replaced by its derivative
                factors[q] = deriv;
                ket_from_factors(&factors, &mut d_ket);
                let inner = ket_dotc(&d_ket, &g_ket, dim); // <d psi| G |psi>
                grad.push(-2.0 * p * inner.re);
            }
            factors[q] = saved;
        }
    }
    grad
}

/// One line-searched gradient step on the factor angles with the weights
/// held fixed. Returns the updated ensemble and whether a step was
/// accepted.
pub fn factor_step(
    rho: &DensityMatrix,
    ensemble: &SeparableEnsemble,
    step: &mut f64,
) -> Result<(SeparableEnsemble, bool)> {
    let tr = tr_rho_ln_rho(rho)?;
    let (ens, _f, accepted) = factor_step_inner(tr, rho.matrix(), ensemble, step, None)?;
    Ok((ens, accepted))
}

fn apply_angle_step(ensemble: &SeparableEnsemble, grad: &[f64], s: f64) -> SeparableEnsemble {
    let n = ensemble.n_qubits;
    let mut angles = ensemble.angles.clone();
    let mut idx = 0;
    for member in angles.iter_mut() {
        for ang in member.iter_mut() {
            ang.0 -= s * grad[idx];
            ang.1 -= s * grad[idx + 1];
            idx += 2;
        }
    }
    debug_assert_eq!(idx, ensemble.len() * n * 2);
    let mut out = SeparableEnsemble {
        n_qubits: n,
        weights: ensemble.weights.clone(),
        angles,
    };
    out.canonicalize_gauge();
    out
}

fn factor_step_inner(
    tr_rho_ln_rho: f64,
    rho: &CMat,
    ensemble: &SeparableEnsemble,
    step: &mut f64,
    precomputed: Option<SigmaEig>,
) -> Result<(SeparableEnsemble, f64, bool)> {
    let se = match precomputed {
        Some(se) => se,
        None => sigma_eig(&ensemble.assemble())?,
    };
    let f0 = objective_from_eig(tr_rho_ln_rho, rho, &se);
    let g = grad_matrix(rho, &se);
    let grad = factor_gradient_inner(&g, ensemble);
    let grad_norm_sq: f64 = grad.iter().map(|x| x * x).sum();
    if grad_norm_sq == 0.0 {
        return Ok((ensemble.clone(), f0, false));
    }
    let mut s = (*step).max(1e-12);
    for _ in 0..60 {
        let trial = apply_angle_step(ensemble, &grad, s);
        let f = objective(tr_rho_ln_rho, rho, &trial)?;
        if f <= f0 - 1e-4 * s * grad_norm_sq {
            *step = (s * 2.0).min(1e3);
            return Ok((trial, f, true));
        }
        s *= 0.5;
    }
    *step = (*step * 0.5).max(1e-12);
    Ok((ensemble.clone(), f0, false))
}

/// Lexicographically-minimal qubit relabeling of rho. Makes the solver
/// output exactly invariant under qubit permutations, which E is by
/// definition.
fn canonical_permutation(rho: &DensityMatrix) -> (Vec<usize>, CMat) {
    let n = rho.n_qubits();
    let dim = rho.dim();
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut base: Vec<usize> = (0..n).collect();
    permute_all(&mut base, 0, &mut perms);
    let mut best: Option<(Vec<usize>, CMat)> = None;
    for perm in perms {
        // new qubit q carries old qubit perm[q]
        let map_index = |i: usize| -> usize {
            let mut out = 0usize;
            for q in 0..n {
                let bit = (i >> (n - 1 - perm[q])) & 1;
                out |= bit << (n - 1 - q);
            }
            out
        };
        let mut mat = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                mat[(map_index(i), map_index(j))] = rho.element(i, j);
            }
        }
        let better = match &best {
            None => true,
            Some((_, cur)) => lex_less(&mat, cur),
        };
        if better {
            best = Some((perm, mat));
        }
    }
    best.unwrap()
}

fn permute_all(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute_all(items, start + 1, out);
        items.swap(start, i);
    }
}

fn lex_less(a: &CMat, b: &CMat) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
        match x.im.total_cmp(&y.im) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

fn angles_from_factor(f: &[Complex64; 2]) -> (f64, f64) {
    let theta = 2.0 * f[1].norm().atan2(f[0].norm());
    let phi = f[1].arg() - f[0].arg();
    (theta, phi)
}

/// Top eigenvector of the Hermitian 2x2 matrix [[m00, m01], [m01*, m11]].
fn top_eigvec_2x2(m00: f64, m11: f64, m01: Complex64) -> [Complex64; 2] {
    let half_gap = 0.5 * (m00 - m11);
    let disc = (half_gap * half_gap + m01.norm_sqr()).sqrt();
    let top = 0.5 * (m00 + m11) + disc;
    if m01.norm() < 1e-300 {
        if m00 >= m11 {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
        }
    } else {
        let v0 = m01;
        let v1 = Complex64::new(top - m00, 0.0);
        let norm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        [v0 / norm, v1 / norm]
    }
}

/// Round an arbitrary ket to a product state: each factor is the top
/// eigenvector of the ket's single-qubit reduced density matrix.
fn product_rounding(v: &CVec, n_qubits: usize) -> Vec<[Complex64; 2]> {
    let dim = 1usize << n_qubits;
    let mut factors = Vec::with_capacity(n_qubits);
    for q in 0..n_qubits {
        let shift = n_qubits - 1 - q;
        let mask = 1usize << shift;
        let mut m00 = 0.0;
        let mut m11 = 0.0;
        let mut m01 = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            if i & mask != 0 {
                continue;
            }
            let a = v[i];
            let b = v[i | mask];
            m00 += a.norm_sqr();
            m11 += b.norm_sqr();
            m01 += a * b.conj();
        }
        factors.push(top_eigvec_2x2(m00, m11, m01));
    }
    factors
}

/// Maximize <psi| G |psi> over product states by alternating single-qubit
/// eigenvector updates from several starting points. Returns the best
/// factors and the attained value.
fn best_product_state(
    g: &CMat,
    n_qubits: usize,
    inits: &[Vec<[Complex64; 2]>],
) -> (Vec<[Complex64; 2]>, f64) {
    let dim = 1usize << n_qubits;
    let mut u0 = KET_ZERO;
    let mut u1 = KET_ZERO;
    let mut g_u0 = KET_ZERO;
    let mut g_u1 = KET_ZERO;
    let mut ket = KET_ZERO;
    let mut best: Option<(Vec<[Complex64; 2]>, f64)> = None;
    for init in inits {
        let mut factors = init.clone();
        let mut value = f64::NEG_INFINITY;
        for _sweep in 0..60 {
            for q in 0..n_qubits {
                // 2x2 contraction of G over the other factors
                let saved = factors[q];
                factors[q] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
                ket_from_factors(&factors, &mut u0);
                factors[q] = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
                ket_from_factors(&factors, &mut u1);
                factors[q] = saved;
                mat_ket(g, &u0, dim, &mut g_u0);
                mat_ket(g, &u1, dim, &mut g_u1);
                let m00 = ket_dotc(&u0, &g_u0, dim).re;
                let m11 = ket_dotc(&u1, &g_u1, dim).re;
                let m01 = ket_dotc(&u0, &g_u1, dim);
                factors[q] = top_eigvec_2x2(m00, m11, m01);
            }
            ket_from_factors(&factors, &mut ket);
            mat_ket(g, &ket, dim, &mut g_u0);
            let new_value = ket_dotc(&ket, &g_u0, dim).re;
            if (new_value - value).abs() < 1e-13 {
                value = new_value;
                break;
            }
            value = new_value;
        }
        match &best {
            Some((_, v)) if *v >= value => {}
            _ => best = Some((factors, value)),
        }
    }
    best.expect("at least one init")
}

/// Frank-Wolfe vertex insertion: find the product state maximizing the
/// gradient, report the duality gap, and mix the vertex in with a
/// backtracking line search when the gap is still large.
fn frank_wolfe_step<R: rand::Rng>(
    tr_rho_ln_rho: f64,
    rho: &CMat,
    ensemble: &SeparableEnsemble,
    tol: f64,
    rng: &mut R,
) -> Result<(SeparableEnsemble, f64, f64)> {
    let n = ensemble.n_qubits;
    let se = sigma_eig(&ensemble.assemble())?;
    let f0 = objective_from_eig(tr_rho_ln_rho, rho, &se);
    let g = grad_matrix(rho, &se);

    let mut inits: Vec<Vec<[Complex64; 2]>> = Vec::new();
    let mut order: Vec<usize> = (0..ensemble.len()).collect();
    order.sort_by(|&a, &b| ensemble.weights[b].total_cmp(&ensemble.weights[a]));
    for &j in order.iter().take(2) {
        inits.push(
            ensemble.angles[j]
                .iter()
                .map(|&(t, p)| bloch_factor(t, p))
                .collect(),
        );
    }
    // deterministic inits: the leading gradient eigenvectors rounded to
    // the nearest product state plus every computational-basis product;
    // these guard against the alternating sweeps missing the dominant
    // vertex and under-reporting the gap. Round-off in the gradient
    // assembly grows with the sigma eigenvalue spread, so symmetrize
    // before factorizing.
    let g_sym = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let (_, g_vecs) = eig_hermitian(&g_sym)?;
    let dim = g_vecs.nrows();
    for col in (dim.saturating_sub(3)..dim).rev() {
        inits.push(product_rounding(&g_vecs.column(col).into_owned(), n));
    }
    for basis in 0..dim {
        inits.push(
            (0..n)
                .map(|q| {
                    if (basis >> (n - 1 - q)) & 1 == 1 {
                        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
                    } else {
                        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
                    }
                })
                .collect(),
        );
    }
    for _ in 0..6 {
        inits.push(
            (0..n)
                .map(|_| {
                    let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
                    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                    bloch_factor(theta, phi)
                })
                .collect(),
        );
    }
    let (factors, value) = best_product_state(&g, n, &inits);
    // Tr(G sigma) = Tr(rho) = 1 for the exact gradient, so the duality
    // gap over the separable set is value - 1.
    let gap = value - 1.0;
    if gap <= GAP_TOL {
        return Ok((ensemble.clone(), f0, gap));
    }
    let vertex_angles: Vec<(f64, f64)> = factors.iter().map(angles_from_factor).collect();
    let mut t = 1.0f64;
    for _ in 0..50 {
        let mut weights: Vec<f64> = ensemble.weights.iter().map(|&w| w * (1.0 - t)).collect();
        weights.push(t);
        let mut angles = ensemble.angles.clone();
        angles.push(vertex_angles.clone());
        let mut trial = SeparableEnsemble {
            n_qubits: n,
            weights,
            angles,
        };
        trial.canonicalize_gauge();
        let f = objective(tr_rho_ln_rho, rho, &trial)?;
        if f <= f0 - 0.25 * t * gap.min(f0) || f < f0 - 1e-15 && t < 1e-8 {
            // fully corrective: re-optimize the weights over the enlarged
            // vertex set before handing back to the local steps
            let mut cur = merge_duplicates(&trial);
            let mut f_cur = f;
            for _ in 0..15 {
                let (next, f_next, _se) = weight_step_eig(tr_rho_ln_rho, rho, &cur)?;
                let gain = f_cur - f_next;
                cur = next;
                f_cur = f_next;
                if gain < 0.1 * tol {
                    break;
                }
            }
            return Ok((cur, f_cur, gap));
        }
        t *= 0.5;
    }
    Ok((ensemble.clone(), f0, gap))
}

/// Computational-basis product ensemble weighted by the diagonal of rho.
fn diagonal_ensemble(rho: &CMat, n_qubits: usize) -> SeparableEnsemble {
    let dim = 1usize << n_qubits;
    let mut weights: Vec<f64> = (0..dim).map(|i| rho[(i, i)].re.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in &mut weights {
            *w /= total;
        }
    } else {
        weights = vec![1.0 / dim as f64; dim];
    }
    let angles: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|i| {
            (0..n_qubits)
                .map(|q| {
                    let bit = (i >> (n_qubits - 1 - q)) & 1;
                    (if bit == 1 { std::f64::consts::PI } else { 0.0 }, 0.0)
                })
                .collect()
        })
        .collect();
    SeparableEnsemble {
        n_qubits,
        weights,
        angles,
    }
}

struct RestartOutcome {
    value: f64,
    ensemble: SeparableEnsemble,
    iterations: usize,
    converged: bool,
}

fn run_restart(
    tr: f64,
    rho: &CMat,
    n_qubits: usize,
    m: usize,
    opts: &ReeOptions,
    restart_index: usize,
) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart_index as u64));
    // restart 0 starts from the classical candidate (computational-basis
    // products weighted by diag(rho)), which is exactly optimal whenever
    // rho is diagonal; the remaining restarts are Haar-random
    let mut ens = if restart_index == 0 {
        diagonal_ensemble(rho, n_qubits)
    } else {
        SeparableEnsemble::random(n_qubits, m, &mut rng)
    };
    let mut f = objective(tr, rho, &ens)?;
    let mut step = 0.1;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut plateau_ref = f;
    let mut converged = false;
    let mut last_gap = f64::NAN;
    let mut stop_reason = "max_iters";
    for it in 0..opts.max_iters {
        iterations = it + 1;
        // merging duplicates is O(m^2); doing it periodically is enough
        if it % 10 == 0 {
            ens = merge_duplicates(&ens);
        }
        let (e1, _f1, se1) = weight_step_eig(tr, rho, &ens)?;
        let (e2, f2, _accepted) = factor_step_inner(tr, rho, &e1, &mut step, Some(se1))?;
        let delta = f - f2;
        ens = e2;
        f = f2;
        if f < OBJECTIVE_FLOOR {
            converged = true;
            stop_reason = "floor";
            break;
        }
        // give up (honestly, converged = false) once a 100-iteration
        // window no longer buys a meaningful improvement
        if (it + 1) % 100 == 0 {
            if plateau_ref - f < PLATEAU_EPS {
                stop_reason = "plateau";
                break;
            }
            plateau_ref = f;
        }
        // When local steps slow down, check the duality gap over the
        // separable set and, if it is still large, insert the best
        // product-state vertex of the gradient. Stop either on a
        // certified small gap or when both the local steps and the
        // vertex insertion have stalled.
        if delta.abs() < opts.tol || (it + 1) % 50 == 0 {
            let (e3, f3, gap) = frank_wolfe_step(tr, rho, &ens, opts.tol, &mut rng)?;
            let fw_delta = f - f3;
            ens = e3;
            f = f3;
            last_gap = gap;
            if gap <= GAP_TOL {
                converged = true;
                stop_reason = "gap";
                break;
            }
            if delta.abs() < opts.tol && fw_delta.abs() < opts.tol {
                stall += 1;
                if stall >= 2 {
                    converged = true;
                    stop_reason = "stall";
                    break;
                }
            } else {
                stall = 0;
            }
        }
    }
    if std::env::var_os("REE_TRACE").is_some() {
        eprintln!(
            "restart {restart_index}: f {f:.3e} iters {iterations} converged {converged} reason {stop_reason} gap {last_gap:.3e}"
        );
    }
    Ok(RestartOutcome {
        value: f,
        ensemble: ens,
        iterations,
        converged,
    })
}

/// Minimize S(rho || sigma) over fully separable sigma. Deterministic
/// given the options seed; restarts run independently and the best final
/// value is reported together with the restart spread.
pub fn ree(rho: &DensityMatrix, options: &ReeOptions) -> Result<ReeResult> {
    let n = rho.n_qubits();
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedRegister(format!(
            "REE solver supports 2 or 3 qubits, got {n}"
        )));
    }
    if options.restarts == 0 || options.max_iters == 0 {
        return Err(Error::Usage("restarts and max_iters must be positive".into()));
    }
    let (perm, canon_mat) = canonical_permutation(rho);
    let canon = DensityMatrix::new_unchecked(n, canon_mat);
    let dim = canon.dim();
    let m = options.ensemble_size.unwrap_or(4 * dim);
    let tr = tr_rho_ln_rho(&canon)?;

    let outcomes: Vec<RestartOutcome> = (0..options.restarts)
        .into_par_iter()
        .map(|r| run_restart(tr, canon.matrix(), n, m, options, r))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value < outcomes[best].value {
            best = i;
        }
    }
    let values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));

    // undo the canonical relabeling on the witness state
    let sigma_canon = outcomes[best].ensemble.assemble();
    let mut sigma_mat = CMat::zeros(dim, dim);
    let unmap = |i: usize| -> usize {
        let mut out = 0usize;
        for q in 0..n {
            let bit = (i >> (n - 1 - q)) & 1;
            out |= bit << (n - 1 - perm[q]);
        }
        out
    };
    for i in 0..dim {
        for j in 0..dim {
            sigma_mat[(unmap(i), unmap(j))] = sigma_canon[(i, j)];
        }
    }
    let sigma_star = DensityMatrix::new(sigma_mat)?;

    Ok(ReeResult {
        value: outcomes[best].value,
        sigma_star,
        iterations: outcomes[best].iterations,
        restarts_used: options.restarts,
        converged: outcomes[best].converged,
        spread,
    })
}
