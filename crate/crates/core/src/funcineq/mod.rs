//! Poincaré and log-Sobolev constants of the mean-field measure
//! `m ∝ e^{-V}` from the sufficient criteria, plus a grid spectral-gap
//! oracle.
//!
//! Log-Sobolev constants use the normalization `Ent(g²) ≤ 2 C_LS ∫|∇g|²`,
//! so `C_LS = 1/ρ_LS`.

mod grid;

pub use grid::{
    required_half_width, spectral_gap, spectral_gap_oracle, GridMeasure, SpectralGapReport,
};

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::potentials::{
    convexity_at_infinity_fit, dissipativity_rate, lipschitz_constant, ConstantsBundle,
    PotentialSpec, Provenance, Role,
};

/// A constant together with where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sourced {
    pub value: f64,
    pub provenance: Provenance,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    BakryEmery,
    LipschitzRoute,
    ConvexityCriterion,
    Zegarlinski,
    User,
}

/// `ρ_LS ↔ C_LS`.
pub fn c_ls_from_rho(rho: f64) -> f64 {
    1.0 / rho
}

pub fn rho_from_c_ls(c_ls: f64) -> f64 {
    1.0 / c_ls
}

/// `κ = κ₁ - κ₂⁻` from uniform convexity, with `C_LS = 1/κ`.
pub fn kappa_bakry_emery(u: &PotentialSpec, w: &PotentialSpec) -> Option<(Sourced, Sourced)> {
    let k1 = u.hessian_eig_bounds().0;
    let k2 = w.hessian_eig_bounds().0;
    let kappa = k1 - (-k2).max(0.0);
    (kappa > 0.0 && kappa.is_finite()).then(|| {
        let s = |value| Sourced {
            value,
            provenance: Provenance::Analytic,
            source: Source::BakryEmery,
        };
        (s(kappa), s(c_ls_from_rho(kappa)))
    })
}

/// `κ = h + 1/c_Lip` when `h > -1/c_Lip`.
pub fn kappa_thm1(h: f64, c_lip: f64) -> Option<f64> {
    if !(c_lip.is_finite() && c_lip > 0.0) {
        return None;
    }
    let kappa = h + 1.0 / c_lip;
    (kappa > 0.0).then_some(kappa)
}

/// The slack `(cU - K) e^{-cR/4} - 2K` when positive.
pub fn upi_criterion(c_u: f64, c: f64, r: f64, k: f64) -> Option<f64> {
    let v = (c_u - k) * (-c * r / 4.0).exp() - 2.0 * k;
    (v > 0.0).then_some(v)
}

/// `C_LS = 1/(ρ (1 - γ₀)²)` with `γ₀ = c_Lip K < 1`.
pub fn lsi_thm2(rho_marginal: f64, c_lip: f64, k: f64) -> Option<f64> {
    if !(rho_marginal > 0.0) {
        return None;
    }
    let gamma0 = if k == 0.0 { 0.0 } else { c_lip * k };
    (gamma0 < 1.0).then(|| c_ls_from_rho(rho_marginal * (1.0 - gamma0).powi(2)))
}

/// The super-convexity test `e^{cR/4} K / (cU - K) < 1`.
pub fn ulsi_criterion(c_u: f64, c: f64, r: f64, k: f64) -> bool {
    c_u > k && (c * r / 4.0).exp() * k / (c_u - k) < 1.0
}

/// The Lipschitz bound `e^{cR/4}/(cU - K)` used in place of `c_Lip` when
/// [`ulsi_criterion`] holds.
pub fn ulsi_lipschitz_bound(c_u: f64, c: f64, r: f64, k: f64) -> f64 {
    (c * r / 4.0).exp() / (c_u - k)
}

/// Candidate values for `κ` and `C_LS` from every applicable criterion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalConstants {
    pub kappa: Vec<Sourced>,
    pub c_ls: Vec<Sourced>,
}

impl FunctionalConstants {
    /// Largest certifying `κ`, falling back to the largest estimate.
    pub fn best_kappa(&self) -> Option<Sourced> {
        best(&self.kappa, |a, b| a.value > b.value)
    }

    /// Smallest certifying `C_LS`, falling back to the smallest estimate.
    pub fn best_c_ls(&self) -> Option<Sourced> {
        best(&self.c_ls, |a, b| a.value < b.value)
    }
}

fn best(xs: &[Sourced], better: impl Fn(&Sourced, &Sourced) -> bool) -> Option<Sourced> {
    let pick = |cert: bool| {
        xs.iter()
            .filter(|s| s.provenance.certifying() == cert)
            .fold(None, |acc: Option<Sourced>, s| match acc {
                Some(a) if !better(s, &a) => Some(a),
                _ => Some(*s),
            })
    };
    pick(true).or_else(|| pick(false))
}

/// Derives `κ` (and `C_LS` where possible) for `(U, W)`, filling the
/// `cLip` and convexity fields of `bundle` on the way. `kappa` and `C_LS`
/// are set to the best derived values unless already present.
///
/// `rho_marginal` enables the Zegarlinski-type route for `C_LS`.
pub fn derive_functional_constants(
    u: &PotentialSpec,
    w: &PotentialSpec,
    bundle: &mut ConstantsBundle,
    rho_marginal: Option<(f64, Provenance)>,
) -> Result<FunctionalConstants> {
    u.check_role(Role::Confinement)?;
    w.check_role(Role::Interaction)?;
    let mut out = FunctionalConstants::default();
    let k = w.hessian_bound();

    if let Some((kappa, c_ls)) = kappa_bakry_emery(u, w) {
        out.kappa.push(kappa);
        out.c_ls.push(c_ls);
    }

    // c_Lip route with h = -K, a lower bound on the interaction block
    // matrix for every N.
    let searched = Cell::new(false);
    let unconverged = Cell::new(false);
    let c_lip = lipschitz_constant(|r| {
        let b = dissipativity_rate(u, w, r);
        searched.set(searched.get() || !b.analytic);
        unconverged.set(unconverged.get() || !b.converged);
        b.value
    });
    let clip_prov = if !c_lip.converged || unconverged.get() {
        Provenance::NumericEstimate
    } else if searched.get() {
        Provenance::RefinedSupremum
    } else {
        Provenance::Analytic
    };
    bundle.set_c_lip(&c_lip, clip_prov);
    if c_lip.is_finite() {
        if let Some(kappa) = kappa_thm1(-k, c_lip.value) {
            out.kappa.push(Sourced {
                value: kappa,
                provenance: clip_prov,
                source: Source::LipschitzRoute,
            });
        }
        if let Some((rho, p)) = rho_marginal {
            if let Some(c_ls) = lsi_thm2(rho, c_lip.value, k) {
                out.c_ls.push(Sourced {
                    value: c_ls,
                    provenance: p.weakest(clip_prov),
                    source: Source::Zegarlinski,
                });
            }
        }
    }

    if let Some(fit) = convexity_at_infinity_fit(u, w)? {
        bundle.set_convexity(&fit);
        let fit_prov = bundle
            .provenance_of("cU")
            .unwrap_or(Provenance::NumericEstimate)
            .weakest(Provenance::CriterionDerived);
        if let Some(kappa) = upi_criterion(fit.c_u, fit.c, fit.r, k) {
            out.kappa.push(Sourced {
                value: kappa,
                provenance: fit_prov,
                source: Source::ConvexityCriterion,
            });
        }
        if let Some((rho, p)) = rho_marginal {
            if ulsi_criterion(fit.c_u, fit.c, fit.r, k) {
                let lip = ulsi_lipschitz_bound(fit.c_u, fit.c, fit.r, k);
                if let Some(c_ls) = lsi_thm2(rho, lip, k) {
                    out.c_ls.push(Sourced {
                        value: c_ls,
                        provenance: p.weakest(fit_prov),
                        source: Source::ConvexityCriterion,
                    });
                }
            }
        }
    }
    if bundle.kappa.is_none() {
        if let Some(best) = out.best_kappa() {
            bundle.set_kappa(best.value, best.provenance)?;
        }
    }
    if bundle.c_ls.is_none() {
        if let Some(best) = out.best_c_ls() {
            bundle.set_c_ls(best.value, best.provenance)?;
        }
    }
    Ok(out)
}
