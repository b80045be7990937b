//! Simulated polarization tomography: product Pauli measurement
//! settings, multinomial photon-count sampling, linear-inversion
//! reconstruction with PSD projection, fidelity, and bootstrap error
//! bars for the measures.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{self, MeasureRecord, MeasureUncertainties};
use crate::ree::ReeOptions;
use crate::states::{eig_hermitian, CMat, CVec, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    fn letter(self) -> char {
        match self {
            PauliBasis::X => 'X',
            PauliBasis::Y => 'Y',
            PauliBasis::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Result<Self> {
        match c {
            'X' | 'x' => Ok(PauliBasis::X),
            'Y' | 'y' => Ok(PauliBasis::Y),
            'Z' | 'z' => Ok(PauliBasis::Z),
            other => Err(Error::Parse(format!("unknown Pauli basis letter {other}"))),
        }
    }

    /// Eigenvector for outcome bit 0 (+1 eigenvalue) or 1 (-1 eigenvalue).
    fn eigenvector(self, bit: usize) -> [Complex64; 2] {
        let s = 1.0 / 2.0f64.sqrt();
        match (self, bit) {
            (PauliBasis::Z, 0) => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            (PauliBasis::Z, _) => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            (PauliBasis::X, 0) => [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
            (PauliBasis::X, _) => [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
            (PauliBasis::Y, 0) => [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
            (PauliBasis::Y, _) => [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
        }
    }
}

pub type Setting = Vec<PauliBasis>;

/// All 3^n product settings, in base-3 order with X < Y < Z.
pub fn all_settings(n_qubits: usize) -> Vec<Setting> {
    let total = 3usize.pow(n_qubits as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut setting = Vec::with_capacity(n_qubits);
        let mut c = code;
        let mut digits = vec![0usize; n_qubits];
        for q in (0..n_qubits).rev() {
            digits[q] = c % 3;
            c /= 3;
        }
        for q in 0..n_qubits {
            setting.push(match digits[q] {
                0 => PauliBasis::X,
                1 => PauliBasis::Y,
                _ => PauliBasis::Z,
            });
        }
        out.push(setting);
    }
    out
}

pub fn setting_label(setting: &Setting) -> String {
    setting.iter().map(|b| b.letter()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotModel {
    /// Noiseless: counts are N * p rounded by largest remainder, and the
    /// exact frequencies are retained for reconstruction.
    Exact,
    /// Multinomial photon statistics, reproducible by seed.
    Sampled { seed: u64 },
}

/// Per-setting photon counts for a full tomography run.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub n_qubits: usize,
    pub shots_per_setting: u64,
    settings: Vec<Setting>,
    counts: Vec<Vec<u64>>,
    /// Present in exact mode; reconstruction then bypasses the integer
    /// rounding.
    exact_freqs: Option<Vec<Vec<f64>>>,
}

impl CountTable {
    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn is_exact(&self) -> bool {
        self.exact_freqs.is_some()
    }

    fn frequencies(&self, setting_index: usize) -> Vec<f64> {
        if let Some(exact) = &self.exact_freqs {
            return exact[setting_index].clone();
        }
        let n = self.shots_per_setting as f64;
        self.counts[setting_index]
            .iter()
            .map(|&c| c as f64 / n)
            .collect()
    }

    /// CSV with columns `setting,outcome_bits,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,outcome_bits,count\n");
        for (si, setting) in self.settings.iter().enumerate() {
            for (o, &c) in self.counts[si].iter().enumerate() {
                let bits: String = (0..self.n_qubits)
                    .map(|q| {
                        if (o >> (self.n_qubits - 1 - q)) & 1 == 1 {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect();
                out.push_str(&format!("{},{},{}\n", setting_label(setting), bits, c));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        if header.trim() != "setting,outcome_bits,count" {
            return Err(Error::Parse(format!("unexpected header: {header}")));
        }
        let mut n_qubits = 0usize;
        let mut rows: Vec<(String, usize, u64)> = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad row: {line}")));
            }
            n_qubits = parts[0].len();
            let outcome = usize::from_str_radix(parts[1], 2)
                .map_err(|_| Error::Parse(format!("bad outcome bits: {}", parts[1])))?;
            let count: u64 = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad count: {}", parts[2])))?;
            rows.push((parts[0].to_string(), outcome, count));
        }
        let settings = all_settings(n_qubits);
        let dim = 1usize << n_qubits;
        let mut counts = vec![vec![0u64; dim]; settings.len()];
        let mut seen = vec![vec![false; dim]; settings.len()];
        for (label, outcome, count) in rows {
            let setting: Setting = label
                .chars()
                .map(PauliBasis::from_letter)
                .collect::<Result<_>>()?;
            let si = settings
                .iter()
                .position(|s| *s == setting)
                .ok_or_else(|| Error::Parse(format!("unknown setting {label}")))?;
            counts[si][outcome] = count;
            seen[si][outcome] = true;
        }
        if seen.iter().flatten().any(|&s| !s) {
            return Err(Error::IncompleteCountTable(
                "missing setting/outcome rows".into(),
            ));
        }
        let shots = counts[0].iter().sum();
        for (si, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total != shots {
                return Err(Error::IncompleteCountTable(format!(
                    "setting {} has {} shots, expected {}",
                    setting_label(&settings[si]),
                    total,
                    shots
                )));
            }
        }
        Ok(Self {
            n_qubits,
            shots_per_setting: shots,
            settings,
            counts,
            exact_freqs: None,
        })
    }
}

/// Reconstruction output.
#[derive(Debug, Clone)]
pub struct TomoResult {
    pub rho_hat: DensityMatrix,
    pub fidelity_vs_target: Option<f64>,
    /// Total negative eigenvalue mass removed by the PSD projection.
    pub eigen_clip_mass: f64,
}

/// Born-rule outcome probabilities for one product Pauli setting.
pub fn born_probabilities(rho: &DensityMatrix, setting: &Setting) -> Result<Vec<f64>> {
    let n = rho.n_qubits();
    if setting.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "setting has {} letters for {} qubits",
            setting.len(),
            n
        )));
    }
    let dim = rho.dim();
    let mut probs = Vec::with_capacity(dim);
    for outcome in 0..dim {
        let mut ket = vec![Complex64::new(1.0, 0.0)];
        for (q, basis) in setting.iter().enumerate() {
            let bit = (outcome >> (n - 1 - q)) & 1;
            let f = basis.eigenvector(bit);
            let mut next = Vec::with_capacity(ket.len() * 2);
            for a in &ket {
                next.push(a * f[0]);
                next.push(a * f[1]);
            }
            ket = next;
        }
        let e = CVec::from_vec(ket);
        let p = (e.adjoint() * rho.matrix() * &e)[(0, 0)].re;
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

fn largest_remainder_round(probs: &[f64], shots: u64) -> Vec<u64> {
    let scaled: Vec<f64> = probs.iter().map(|&p| p * shots as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|&x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut rem: Vec<(usize, f64)> = scaled
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, x - x.floor()))
        .collect();
    rem.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for k in 0..(shots - assigned) as usize {
        counts[rem[k % rem.len()].0] += 1;
    }
    counts
}

fn multinomial_draw<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    // cumulative inversion; probs sum to 1
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let last = cumulative.len() - 1;
    cumulative[last] = 1.0;
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let idx = cumulative.partition_point(|&c| c < u).min(last);
        counts[idx] += 1;
    }
    counts
}

/// Simulate a full tomography run over all 3^n settings.
pub fn sample_counts(rho: &DensityMatrix, shots: u64, model: ShotModel) -> Result<CountTable> {
    if shots == 0 {
        return Err(Error::Usage("shots must be at least 1".into()));
    }
    let n = rho.n_qubits();
    let settings = all_settings(n);
    let mut counts = Vec::with_capacity(settings.len());
    let mut exact_freqs = match model {
        ShotModel::Exact => Some(Vec::with_capacity(settings.len())),
        ShotModel::Sampled { .. } => None,
    };
    let mut rng = match model {
        ShotModel::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        ShotModel::Exact => None,
    };
    for setting in &settings {
        let probs = born_probabilities(rho, setting)?;
        match (&mut rng, &mut exact_freqs) {
            (Some(r), _) => counts.push(multinomial_draw(&probs, shots, r)),
            (None, Some(freqs)) => {
                counts.push(largest_remainder_round(&probs, shots));
                freqs.push(probs);
            }
            _ => unreachable!(),
        }
    }
    Ok(CountTable {
        n_qubits: n,
        shots_per_setting: shots,
        settings,
        counts,
        exact_freqs,
    })
}

fn pauli_matrix(kind: usize) -> CMat {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match kind {
        0 => CMat::from_row_slice(2, 2, &[one, z, z, one]),
        1 => CMat::from_row_slice(2, 2, &[z, one, one, z]),
        2 => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        _ => CMat::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

/// Linear inversion from averaged Pauli expectations, then projection to
/// the nearest unit-trace PSD matrix by eigenvalue clipping with uniform
/// redistribution of the clipped mass.
pub fn reconstruct(counts: &CountTable, target: Option<&DensityMatrix>) -> Result<TomoResult> {
    let n = counts.n_qubits;
    let dim = 1usize << n;
    let settings = counts.settings();
    let expected = 3usize.pow(n as u32);
    if settings.len() != expected {
        return Err(Error::IncompleteCountTable(format!(
            "{} settings present, expected {expected}",
            settings.len()
        )));
    }
    let freqs: Vec<Vec<f64>> = (0..settings.len()).map(|i| counts.frequencies(i)).collect();

    // string digits: 0=I, 1=X, 2=Y, 3=Z per qubit
    let n_strings = 4usize.pow(n as u32);
    let mut rho_lin = CMat::zeros(dim, dim);
    for code in 0..n_strings {
        let mut digits = vec![0usize; n];
        let mut c = code;
        for q in (0..n).rev() {
            digits[q] = c % 4;
            c /= 4;
        }
        let mut estimate_sum = 0.0;
        let mut n_containing = 0usize;
        for (si, setting) in settings.iter().enumerate() {
            let contains = digits.iter().enumerate().all(|(q, &d)| {
                d == 0
                    || matches!(
                        (d, setting[q]),
                        (1, PauliBasis::X) | (2, PauliBasis::Y) | (3, PauliBasis::Z)
                    )
            });
            if !contains {
                continue;
            }
            n_containing += 1;
            let mut est = 0.0;
            for (outcome, &f) in freqs[si].iter().enumerate() {
                let mut sign = 1.0;
                for (q, &d) in digits.iter().enumerate() {
                    if d != 0 && (outcome >> (n - 1 - q)) & 1 == 1 {
                        sign = -sign;
                    }
                }
                est += sign * f;
            }
            estimate_sum += est;
        }
        let expectation = estimate_sum / n_containing as f64;
        let mut op = CMat::identity(1, 1);
        for &d in &digits {
            op = op.kronecker(&pauli_matrix(d));
        }
        rho_lin += op * Complex64::new(expectation / dim as f64, 0.0);
    }

    // PSD projection
    let (eigs, vecs) = eig_hermitian(&rho_lin)?;
    let mut lambda: Vec<f64> = eigs.iter().copied().collect();
    let eigen_clip_mass: f64 = lambda.iter().filter(|&&l| l < 0.0).map(|&l| -l).sum();
    loop {
        let deficit: f64 = lambda.iter().filter(|&&l| l < 0.0).map(|&l| -l).sum();
        for l in lambda.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        if deficit == 0.0 {
            break;
        }
        let n_pos = lambda.iter().filter(|&&l| l > 0.0).count().max(1);
        let share = deficit / n_pos as f64;
        for l in lambda.iter_mut() {
            if *l > 0.0 {
                *l -= share;
            }
        }
    }
    let total: f64 = lambda.iter().sum();
    if total > 0.0 {
        for l in lambda.iter_mut() {
            *l /= total;
        }
    }
    let mut rho_mat = CMat::zeros(dim, dim);
    for (i, &l) in lambda.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(i);
            rho_mat += (v * v.adjoint()) * Complex64::new(l, 0.0);
        }
    }
    let rho_hat = DensityMatrix::new(rho_mat)?;
    let fidelity_vs_target = match target {
        Some(t) => Some(fidelity(&rho_hat, t)?),
        None => None,
    };
    Ok(TomoResult {
        rho_hat,
        fidelity_vs_target,
        eigen_clip_mass,
    })
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "fidelity between states of different size".into(),
        ));
    }
    let (eigs, vecs) = eig_hermitian(rho.matrix())?;
    let dim = rho.dim();
    let mut sqrt_rho = CMat::zeros(dim, dim);
    for (i, &l) in eigs.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(i);
            sqrt_rho += (v * v.adjoint()) * Complex64::new(l.sqrt(), 0.0);
        }
    }
    let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let (m_eigs, _) = eig_hermitian(&inner)?;
    let root_sum: f64 = m_eigs.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0))
}

/// Trace distance (1/2) || rho - sigma ||_1.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let diff = rho.matrix() - sigma.matrix();
    let (eigs, _) = eig_hermitian(&diff)?;
    Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
}

/// Bootstrap the measures under simulated photon statistics: B
/// independent count tables are reconstructed and measured; central
/// values are the resample means and uncertainties the sample standard
/// deviations. Per-resample RNG seed is `seed + resample index`.
pub fn bootstrap_measures(
    rho_target: &DensityMatrix,
    shots: u64,
    resamples: usize,
    seed: u64,
    exact: bool,
    ree_options: &ReeOptions,
) -> Result<MeasureRecord> {
    if resamples < 2 {
        return Err(Error::Usage("bootstrap needs at least 2 resamples".into()));
    }
    let records: Vec<MeasureRecord> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let model = if exact {
                ShotModel::Exact
            } else {
                ShotModel::Sampled {
                    seed: seed.wrapping_add(b as u64),
                }
            };
            let counts = sample_counts(rho_target, shots, model)?;
            let recon = reconstruct(&counts, None)?;
            let mut opts = ree_options.clone();
            opts.seed = ree_options.seed.wrapping_add(b as u64);
            measures::all_measures(&recon.rho_hat, &opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&MeasureRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n;
    let std = |f: &dyn Fn(&MeasureRecord) -> f64, mu: f64| {
        (records.iter().map(|r| (f(r) - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let fe: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.e;
    let fc: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.c;
    let fcg: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.c_g;
    let fcl: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.c_l;
    let ft: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.t;
    let fk: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.k;
    let fm: &dyn Fn(&MeasureRecord) -> f64 = &|r| r.m;
    let (e, c, c_g, c_l, t, k, m) = (
        mean(fe),
        mean(fc),
        mean(fcg),
        mean(fcl),
        mean(ft),
        mean(fk),
        mean(fm),
    );
    Ok(MeasureRecord {
        e,
        c,
        c_g,
        c_l,
        t,
        k,
        m,
        uncertainties: Some(MeasureUncertainties {
            e: std(fe, e),
            c: std(fc, c),
            c_g: std(fcg, c_g),
            c_l: std(fcl, c_l),
            t: std(ft, t),
            k: std(fk, k),
            m: std(fm, m),
        }),
    })
}
