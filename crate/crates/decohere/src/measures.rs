//! Von Neumann entropy, relative entropy, and the closed-form
//! correlation/coherence measures, all in nats.

use crate::error::{Error, Result};
use crate::ree::{self, ReeOptions};
use crate::states::{
    dephased_diagonal, eig_hermitian, product_of_marginals, DensityMatrix, PSD_FLOOR,
};

/// Eigenvalues of sigma below this are treated as outside its support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// REE values below this are reported as exactly zero in measure records.
pub const ZERO_FLOOR: f64 = 1e-6;

/// The seven reported quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    E,
    C,
    Cg,
    Cl,
    T,
    K,
    M,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::E,
        Quantity::C,
        Quantity::Cg,
        Quantity::Cl,
        Quantity::T,
        Quantity::K,
        Quantity::M,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::E => "E",
            Quantity::C => "C",
            Quantity::Cg => "CG",
            Quantity::Cl => "CL",
            Quantity::T => "T",
            Quantity::K => "K",
            Quantity::M => "M",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E" => Ok(Quantity::E),
            "C" => Ok(Quantity::C),
            "CG" | "C_G" => Ok(Quantity::Cg),
            "CL" | "C_L" => Ok(Quantity::Cl),
            "T" => Ok(Quantity::T),
            "K" => Ok(Quantity::K),
            "M" => Ok(Quantity::M),
            other => Err(Error::Parse(format!("unknown quantity {other}"))),
        }
    }
}

/// The seven scalars for one state, with optional one-sigma uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRecord {
    pub e: f64,
    pub c: f64,
    pub c_g: f64,
    pub c_l: f64,
    pub t: f64,
    pub k: f64,
    pub m: f64,
    pub uncertainties: Option<MeasureUncertainties>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureUncertainties {
    pub e: f64,
    pub c: f64,
    pub c_g: f64,
    pub c_l: f64,
    pub t: f64,
    pub k: f64,
    pub m: f64,
}

impl MeasureRecord {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::E => self.e,
            Quantity::C => self.c,
            Quantity::Cg => self.c_g,
            Quantity::Cl => self.c_l,
            Quantity::T => self.t,
            Quantity::K => self.k,
            Quantity::M => self.m,
        }
    }

    pub fn uncertainty(&self, q: Quantity) -> Option<f64> {
        self.uncertainties.map(|u| match q {
            Quantity::E => u.e,
            Quantity::C => u.c,
            Quantity::Cg => u.c_g,
            Quantity::Cl => u.c_l,
            Quantity::T => u.t,
            Quantity::K => u.k,
            Quantity::M => u.m,
        })
    }
}

/// Clamp a spectrum for entropy use: values in [-PSD_FLOOR, 0) become 0,
/// anything more negative is a hard error.
pub(crate) fn clamp_spectrum(eigs: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(eigs.len());
    for &l in eigs {
        if l < -PSD_FLOOR {
            return Err(Error::NotPositiveSemidefinite(l));
        }
        out.push(l.max(0.0));
    }
    Ok(out)
}

pub(crate) fn entropy_of_spectrum(eigs: &[f64]) -> f64 {
    eigs.iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// S(rho) = -Tr rho ln rho, in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let (eigs, _) = eig_hermitian(rho.matrix())?;
    let clamped = clamp_spectrum(eigs.as_slice())?;
    Ok(entropy_of_spectrum(&clamped))
}

/// S(rho || sigma) = Tr(rho ln rho - rho ln sigma). Returns
/// `f64::INFINITY` when rho has weight outside sigma's support.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let tr_rho_ln_rho = -von_neumann_entropy(rho)?;
    let (mu, u) = eig_hermitian(sigma.matrix())?;
    let mu = clamp_spectrum(mu.as_slice())?;
    // weights <u_i| rho |u_i>
    let rotated = u.adjoint() * rho.matrix() * &u;
    let mut tr_rho_ln_sigma = 0.0;
    for i in 0..mu.len() {
        let w = rotated[(i, i)].re.max(0.0);
        if mu[i] < SUPPORT_TOL {
            if w > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
        } else if w > 0.0 {
            tr_rho_ln_sigma += w * mu[i].ln();
        }
    }
    Ok(tr_rho_ln_rho - tr_rho_ln_sigma)
}

/// C(rho) = S(rho_d) - S(rho).
pub fn total_coherence(rho: &DensityMatrix) -> Result<f64> {
    let s_d = von_neumann_entropy(&dephased_diagonal(rho))?;
    let s = von_neumann_entropy(rho)?;
    Ok((s_d - s).max(0.0))
}

/// C_L(rho) = S(pi_d(rho)) - S(pi(rho)).
pub fn local_coherence(rho: &DensityMatrix) -> Result<f64> {
    let pi = product_of_marginals(rho);
    let s_pi_d = von_neumann_entropy(&dephased_diagonal(&pi))?;
    let s_pi = von_neumann_entropy(&pi)?;
    Ok((s_pi_d - s_pi).max(0.0))
}

/// C_G(rho) = C(rho) - C_L(rho).
pub fn global_coherence(rho: &DensityMatrix) -> Result<f64> {
    Ok(total_coherence(rho)? - local_coherence(rho)?)
}

/// T(rho) = S(pi(rho)) - S(rho).
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    let s_pi = von_neumann_entropy(&product_of_marginals(rho))?;
    let s = von_neumann_entropy(rho)?;
    Ok((s_pi - s).max(0.0))
}

/// K(rho) = S(rho_d || pi(rho_d)) = S(pi(rho_d)) - S(rho_d).
pub fn classical_correlations(rho: &DensityMatrix) -> Result<f64> {
    let rho_d = dephased_diagonal(rho);
    let s_pi_d = von_neumann_entropy(&product_of_marginals(&rho_d))?;
    let s_d = von_neumann_entropy(&rho_d)?;
    Ok((s_pi_d - s_d).max(0.0))
}

/// M(rho) via both routes C + K and T + C_L; asserts agreement within
/// 1e-9 and returns their mean.
pub fn hookup(rho: &DensityMatrix) -> Result<f64> {
    let route_coherence = total_coherence(rho)? + classical_correlations(rho)?;
    let route_correlation = mutual_information(rho)? + local_coherence(rho)?;
    let gap = (route_coherence - route_correlation).abs();
    if gap > 1e-9 {
        return Err(Error::NonConvergence(format!(
            "hookup routes disagree by {gap:.3e}"
        )));
    }
    Ok(0.5 * (route_coherence + route_correlation))
}

/// Fill all seven scalars. E is delegated to the REE solver and floored
/// to exactly zero below [`ZERO_FLOOR`].
pub fn all_measures(rho: &DensityMatrix, ree_options: &ReeOptions) -> Result<MeasureRecord> {
    Ok(all_measures_detailed(rho, ree_options)?.0)
}

/// Same as [`all_measures`] but also returns the full REE diagnostics.
pub fn all_measures_detailed(
    rho: &DensityMatrix,
    ree_options: &ReeOptions,
) -> Result<(MeasureRecord, ree::ReeResult)> {
    let c = total_coherence(rho)?;
    let c_l = local_coherence(rho)?;
    let c_g = c - c_l;
    let t = mutual_information(rho)?;
    let k = classical_correlations(rho)?;
    let m = hookup(rho)?;
    let ree_result = ree::ree(rho, ree_options)?;
    let e = if ree_result.value < ZERO_FLOOR {
        0.0
    } else {
        ree_result.value
    };
    Ok((
        MeasureRecord {
            e,
            c,
            c_g,
            c_l,
            t,
            k,
            m,
            uncertainties: None,
        },
        ree_result,
    ))
}
