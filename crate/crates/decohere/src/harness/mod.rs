//! Orchestration: dephasing sweeps over quartz thickness, decay-rate
//! fits on semilog-vs-l^2 axes, ordering verification, CSV emission, and
//! the CLI.

pub mod cli;
pub mod config;
pub mod csvio;

use crate::channels::{apply_dephasing_p, dephase_prob, DephasingSpec};
use crate::error::{Error, Result};
use crate::measures::{self, MeasureRecord, Quantity};
use crate::ree::ReeOptions;
use crate::states::{density_from_pure, make_named_state, DensityMatrix, NamedState, QubitSet};
use crate::tomo;

/// Which qubits the dephaser acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSpec {
    All,
    Single(usize),
}

impl TargetSpec {
    pub fn to_qubit_set(self, n_qubits: usize) -> Result<QubitSet> {
        match self {
            TargetSpec::All => Ok(QubitSet::all(n_qubits)),
            TargetSpec::Single(q) => QubitSet::single(q, n_qubits),
        }
    }

    /// `all`, a qubit letter (`a`..), or a numeric label.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "all" {
            return Ok(TargetSpec::All);
        }
        if s.len() == 1 {
            let c = s.chars().next().unwrap();
            if c.is_ascii_alphabetic() {
                return Ok(TargetSpec::Single(c as usize - 'a' as usize));
            }
        }
        s.parse::<usize>()
            .map(TargetSpec::Single)
            .map_err(|_| Error::Parse(format!("bad target spec: {s}")))
    }
}

/// Thickness grid in lambda0 units.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 4 {
            return Err(Error::Usage(format!("grid count {count} < 4")));
        }
        if !(stop > start && start >= 0.0) {
            return Err(Error::Usage(format!(
                "grid bounds must satisfy stop > start >= 0, got {start}:{stop}"
            )));
        }
        Ok(Self { start, stop, count })
    }

    /// `start:stop:count`
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad grid spec: {s}")));
        }
        let start = parts[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid start: {}", parts[0])))?;
        let stop = parts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid stop: {}", parts[1])))?;
        let count = parts[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid count: {}", parts[2])))?;
        Self::new(start, stop, count)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
            })
            .collect()
    }
}

/// Tomographic-noise options for a sweep (off when `None` in the config).
#[derive(Debug, Clone, Copy)]
pub struct TomoOptions {
    pub shots: u64,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub state: NamedState,
    /// Dephasing rate in lambda0^-2 units.
    pub gamma: f64,
    pub targets: TargetSpec,
    pub ell: GridSpec,
    pub ree: ReeOptions,
    pub tomo: Option<TomoOptions>,
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub ell: f64,
    pub ell_sq: f64,
    pub record: MeasureRecord,
    /// False when the REE solver failed to converge at this point.
    pub ree_converged: bool,
}

/// One row per grid point, ordered by ell; REE non-convergence flags the
/// row instead of aborting the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.gamma < 0.0 {
        return Err(Error::NegativeParameter(format!("gamma = {}", config.gamma)));
    }
    let psi = make_named_state(config.state)?;
    let rho0 = density_from_pure(&psi);
    let targets = config.targets.to_qubit_set(rho0.n_qubits())?;
    let mut rows = Vec::with_capacity(config.ell.count);
    for (i, ell) in config.ell.points().into_iter().enumerate() {
        let spec = DephasingSpec::new(config.gamma, ell, targets.clone())?;
        let rho = crate::channels::apply_dephasing(&rho0, &spec)?;
        let (record, ree_converged) = match &config.tomo {
            None => {
                let (record, ree_result) = measures::all_measures_detailed(&rho, &config.ree)?;
                (record, ree_result.converged)
            }
            Some(t) => {
                let point_seed = t.seed.wrapping_add((i * t.resamples) as u64);
                let record = tomo::bootstrap_measures(
                    &rho,
                    t.shots,
                    t.resamples,
                    point_seed,
                    false,
                    &config.ree,
                )?;
                (record, true)
            }
        };
        rows.push(SweepRow {
            ell,
            ell_sq: ell * ell,
            record,
            ree_converged,
        });
    }
    Ok(rows)
}

/// Measure record of the fully dephased (p = 1/2 on `targets`) ideal
/// state; source of exact fit asymptotes.
pub fn asymptote_record(
    state: NamedState,
    targets: TargetSpec,
    ree: &ReeOptions,
) -> Result<MeasureRecord> {
    let psi = make_named_state(state)?;
    let rho0 = density_from_pure(&psi);
    let set = targets.to_qubit_set(rho0.n_qubits())?;
    let rho_inf = apply_dephasing_p(&rho0, 0.5, &set)?;
    measures::all_measures(&rho_inf, ree)
}

/// Fitted Gaussian decay rate for one quantity.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub quantity: Quantity,
    /// -slope of ln(Q - Q_inf) against l^2, in lambda0^-2 units.
    pub gamma_fit: f64,
    pub intercept: f64,
    pub asymptote: f64,
    pub points_used: usize,
    pub residual_rms: f64,
}

/// Ordinary least squares of ln(Q(l) - Q_inf) against l^2 over the
/// points that sit clearly above the asymptote.
pub fn fit_decay(rows: &[SweepRow], quantity: Quantity, asymptote: f64) -> Result<DecayFit> {
    if rows.is_empty() {
        return Err(Error::InsufficientFitPoints { have: 0, need: 3 });
    }
    let q0 = rows[0].record.get(quantity);
    let eps_fit = (1e-4 * (q0 - asymptote)).max(1e-7);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in rows {
        let excess = row.record.get(quantity) - asymptote;
        if excess > eps_fit {
            xs.push(row.ell_sq);
            ys.push(excess.ln());
        }
    }
    finish_fit(quantity, asymptote, &xs, &ys)
}

/// Ordinary least squares of ln Q(l) against l^2; the convention used for
/// the rate-hierarchy comparison. The exact asymptote is still used to
/// exclude saturated tail points, which would otherwise flatten the
/// slope, but it is not subtracted from Q.
pub fn fit_decay_semilog(
    rows: &[SweepRow],
    quantity: Quantity,
    asymptote: f64,
) -> Result<DecayFit> {
    if rows.is_empty() {
        return Err(Error::InsufficientFitPoints { have: 0, need: 3 });
    }
    let q0 = rows[0].record.get(quantity);
    let eps_fit = (1e-4 * (q0 - asymptote)).max(1e-7);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in rows {
        let q = row.record.get(quantity);
        if q > eps_fit.max(1e-7) && q - asymptote > eps_fit {
            xs.push(row.ell_sq);
            ys.push(q.ln());
        }
    }
    finish_fit(quantity, asymptote, &xs, &ys)
}

fn finish_fit(quantity: Quantity, asymptote: f64, xs: &[f64], ys: &[f64]) -> Result<DecayFit> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientFitPoints { have: n, need: 3 });
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::NonConvergence("degenerate fit abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual_rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    let gamma_fit = -slope;
    if !gamma_fit.is_finite() {
        return Err(Error::NonConvergence("non-finite fitted rate".into()));
    }
    Ok(DecayFit {
        quantity,
        gamma_fit,
        intercept,
        asymptote,
        points_used: n,
        residual_rms,
    })
}

/// Quantities fitted for the rate comparison (K is constant under
/// dephasing and carries rate zero by definition).
pub const FIT_QUANTITIES: [Quantity; 5] = [
    Quantity::E,
    Quantity::Cg,
    Quantity::C,
    Quantity::Cl,
    Quantity::T,
];

#[derive(Debug, Clone)]
pub struct OrderingReport {
    /// (quantity, rate) in decreasing rate order, K included at rate 0.
    pub ranked: Vec<(Quantity, f64)>,
    pub pass: bool,
    /// Adjacent pairs (faster-expected, slower-expected) that violate the
    /// strict ordering.
    pub violations: Vec<(Quantity, Quantity)>,
}

impl OrderingReport {
    pub fn summary(&self) -> String {
        let order = self
            .ranked
            .iter()
            .map(|(q, r)| format!("{}={:.4e}", q.label(), r))
            .collect::<Vec<_>>()
            .join(" > ");
        if self.pass {
            format!("ordering PASS: {order}")
        } else {
            let v = self
                .violations
                .iter()
                .map(|(a, b)| format!("{} !> {}", a.label(), b.label()))
                .collect::<Vec<_>>()
                .join(", ");
            format!("ordering FAIL ({v}): {order}")
        }
    }
}

/// Check the strict rate hierarchy E > C_G > C > C_L > T > K, with K
/// pinned to rate zero.
pub fn verify_ordering(fits: &[DecayFit]) -> Result<OrderingReport> {
    let rate = |q: Quantity| -> Result<f64> {
        fits.iter()
            .find(|f| f.quantity == q)
            .map(|f| f.gamma_fit)
            .ok_or_else(|| Error::Usage(format!("missing fit for {}", q.label())))
    };
    let expected = [
        (Quantity::E, rate(Quantity::E)?),
        (Quantity::Cg, rate(Quantity::Cg)?),
        (Quantity::C, rate(Quantity::C)?),
        (Quantity::Cl, rate(Quantity::Cl)?),
        (Quantity::T, rate(Quantity::T)?),
        (Quantity::K, 0.0),
    ];
    let mut violations = Vec::new();
    for pair in expected.windows(2) {
        if pair[0].1 <= pair[1].1 {
            violations.push((pair[0].0, pair[1].0));
        }
    }
    let mut ranked = expected.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(OrderingReport {
        ranked,
        pass: violations.is_empty(),
        violations,
    })
}

/// Thickness beyond which exp(-Gamma l^2) has fully saturated.
pub fn saturation_thickness(gamma: f64) -> f64 {
    (40.0 / gamma).sqrt()
}

/// Convenience: p(l) for reporting.
pub fn sweep_prob(gamma: f64, ell: f64) -> Result<f64> {
    dephase_prob(gamma, ell)
}

/// Full ideal-state density matrix at one sweep point.
pub fn state_at(state: NamedState, gamma: f64, ell: f64, targets: TargetSpec) -> Result<DensityMatrix> {
    let psi = make_named_state(state)?;
    let rho0 = density_from_pure(&psi);
    let set = targets.to_qubit_set(rho0.n_qubits())?;
    let spec = DephasingSpec::new(gamma, ell, set)?;
    crate::channels::apply_dephasing(&rho0, &spec)
}
