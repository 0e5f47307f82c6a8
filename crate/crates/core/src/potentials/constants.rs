use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConvexityFit, Family, LipschitzConstant, PotentialSpec, Role};
use crate::error::{Error, Result};
use crate::numerics::{golden_max, grid_max};

/// Where a constant came from. Ordered from strongest to weakest; a derived
/// constant inherits the weakest provenance of its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    UserSupplied,
    /// Supremum of a closed-form radial profile located on a grid and
    /// refined by golden section to machine tolerance.
    RefinedSupremum,
    /// Value produced by a sufficient criterion whose constant is not
    /// spelled out by the criterion itself.
    CriterionDerived,
    /// Sampled or otherwise unconfirmed estimate; never certifying.
    NumericEstimate,
}

impl Provenance {
    pub fn certifying(self) -> bool {
        self != Provenance::NumericEstimate
    }

    pub fn weakest(self, other: Self) -> Self {
        self.max(other)
    }
}

/// One feasible pair for `|∇²U|_op ≤ K1 |∇U| + K2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovPair {
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
}

/// Every scalar the certifier consumes, with per-field provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsBundle {
    /// `sup |∇²W|_op`
    #[serde(rename = "K")]
    pub k: f64,
    /// `sup |∇W|`, `+∞` when unbounded.
    #[serde(rename = "K_prime", with = "crate::report::extended")]
    pub k_prime: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    /// All feasible Lyapunov pairs on the slope grid; the certifier picks
    /// among them jointly with its own constant formulas.
    #[serde(default)]
    pub lyapunov_candidates: Vec<LyapunovPair>,
    #[serde(rename = "cU", default)]
    pub c_u: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(rename = "R", default)]
    pub r: Option<f64>,
    /// `c_Lip,m`; `Some(∞)` when the quadrature diverged.
    #[serde(rename = "cLip", with = "crate::report::extended::option", default)]
    pub c_lip: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(rename = "C_LS", default)]
    pub c_ls: Option<f64>,
    pub d: usize,
    pub provenance: BTreeMap<String, Provenance>,
}

impl ConstantsBundle {
    /// A bundle from user-supplied values only.
    pub fn from_values(k: f64, k_prime: f64, k1: f64, k2: f64, d: usize) -> Result<Self> {
        let mut provenance = BTreeMap::new();
        for key in ["K", "K_prime", "K1", "K2"] {
            provenance.insert(key.to_string(), Provenance::UserSupplied);
        }
        let b = Self {
            k,
            k_prime,
            k1,
            k2,
            lyapunov_candidates: vec![LyapunovPair { k1, k2 }],
            c_u: None,
            c: None,
            r: None,
            c_lip: None,
            kappa: None,
            c_ls: None,
            d,
            provenance,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn provenance_of(&self, key: &str) -> Option<Provenance> {
        self.provenance.get(key).copied()
    }

    pub fn set_kappa(&mut self, kappa: f64, provenance: Provenance) -> Result<()> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa must be > 0, got {kappa}")));
        }
        self.kappa = Some(kappa);
        self.provenance.insert("kappa".into(), provenance);
        Ok(())
    }

    pub fn set_c_ls(&mut self, c_ls: f64, provenance: Provenance) -> Result<()> {
        if !(c_ls.is_finite() && c_ls > 0.0) {
            return Err(Error::InvalidArgument(format!("C_LS must be > 0, got {c_ls}")));
        }
        self.c_ls = Some(c_ls);
        self.provenance.insert("C_LS".into(), provenance);
        Ok(())
    }

    pub fn set_convexity(&mut self, fit: &ConvexityFit) {
        self.c_u = Some(fit.c_u);
        self.c = Some(fit.c);
        self.r = Some(fit.r);
        let p = if fit.verified {
            fit.provenance
        } else {
            Provenance::NumericEstimate
        };
        for key in ["cU", "c", "R"] {
            self.provenance.insert(key.into(), p);
        }
    }

    /// Records `c_Lip`. Only a converged quadrature yields a finite value.
    pub fn set_c_lip(&mut self, c_lip: &LipschitzConstant, provenance: Provenance) {
        self.c_lip = Some(if c_lip.is_finite() {
            c_lip.value
        } else {
            f64::INFINITY
        });
        self.provenance.insert("cLip".into(), provenance);
    }

    /// Selects `(K1, K2)` from the candidate list minimizing `objective`.
    pub fn select_lyapunov<F: Fn(LyapunovPair) -> f64>(&mut self, objective: F) {
        if let Some(best) = self
            .lyapunov_candidates
            .iter()
            .copied()
            .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        {
            self.k1 = best.k1;
            self.k2 = best.k2;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return bad(format!("K must be finite and >= 0, got {}", self.k));
        }
        if !(self.k_prime >= 0.0) {
            return bad(format!("K' must be >= 0, got {}", self.k_prime));
        }
        if !(self.k1 >= 0.0 && self.k1.is_finite() && self.k2 >= 0.0 && self.k2.is_finite()) {
            return bad(format!("K1, K2 must be finite and >= 0, got {}, {}", self.k1, self.k2));
        }
        if matches!(self.kappa, Some(k) if !(k > 0.0)) {
            return bad("kappa must be > 0".into());
        }
        if matches!(self.c_ls, Some(c) if !(c > 0.0)) {
            return bad("C_LS must be > 0".into());
        }
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        Ok(())
    }
}

/// Slope grid for the Lyapunov pair: `{0} ∪ {2^-20, …, 2^10}`.
pub fn lyapunov_slope_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-20..=10).map(|e| 2f64.powi(e)))
        .collect()
}

/// Feasible `(K1, K2)` pairs for the confinement potential, one per slope
/// on the grid. Slopes for which `|∇²U| - K1|∇U|` is unbounded are dropped.
pub fn lyapunov_candidates(u: &PotentialSpec) -> Vec<LyapunovPair> {
    lyapunov_slope_grid()
        .into_iter()
        .filter_map(|k1| lyapunov_offset(u, k1).map(|k2| LyapunovPair { k1, k2 }))
        .collect()
}

fn lyapunov_offset(u: &PotentialSpec, k1: f64) -> Option<f64> {
    if let Family::Quadratic { coef } = u.family {
        // |∇²U| = coef, |∇U| = coef·r: the excess peaks at r = 0.
        return Some(coef);
    }
    let excess = |r: f64| u.hessian_opnorm_at(r) - k1 * u.profile(r).d1.abs();
    let mut hi = 50.0 * u.length_scale();
    let mut bounded = false;
    for _ in 0..60 {
        if excess(hi) <= 0.0 && excess(2.0 * hi) <= excess(hi) {
            bounded = true;
            break;
        }
        // Bounded but positive excess, e.g. a constant Hessian norm.
        if excess(2.0 * hi) <= excess(hi) && excess(4.0 * hi) <= excess(2.0 * hi) && k1 == 0.0 {
            let growth = excess(4.0 * hi) - excess(hi);
            if growth.abs() <= 1e-12 * (1.0 + excess(hi).abs()) {
                bounded = true;
                break;
            }
        }
        hi *= 2.0;
    }
    if !bounded {
        return None;
    }
    let n = 2001;
    let mut best = grid_max(|r| excess(r).max(0.0), 0.0, hi, n).value;
    // |∇U| vanishes at critical radii, where the excess has a kink narrower
    // than the grid step once K1 is large.
    let step = hi / (n - 1) as f64;
    for rc in critical_radii(u) {
        best = best.max(excess(rc));
        for (a, b) in [((rc - step).max(0.0), rc), (rc, rc + step)] {
            best = best.max(golden_max(excess, a, b, 1e-12).value);
        }
    }
    Some(best.max(0.0))
}

fn critical_radii(u: &PotentialSpec) -> Vec<f64> {
    match u.family {
        Family::QuarticDoubleWell { quartic, well } if well > 0.0 => {
            vec![0.0, (well / (2.0 * quartic)).sqrt()]
        }
        _ => vec![0.0],
    }
}

/// `K`, `K'`, and the Lyapunov pair for `(U, W)`.
///
/// The default `(K1, K2)` minimizes the single-constant `M` of the bounded
/// gradient route (with `K' = 0` when `∇W` is unbounded); the certifier
/// re-selects from `lyapunov_candidates` for its own route.
pub fn extract_constants(u: &PotentialSpec, w: &PotentialSpec) -> Result<ConstantsBundle> {
    u.check_role(Role::Confinement)?;
    w.check_role(Role::Interaction)?;
    if u.dim != w.dim {
        return Err(Error::DimensionMismatch {
            expected: u.dim,
            got: w.dim,
        });
    }
    let d = u.dim;
    let k = w.hessian_bound();
    let k_prime = w.gradient_bound();
    let candidates = lyapunov_candidates(u);
    if candidates.is_empty() {
        return Err(Error::MissingConstant {
            constant: "K1/K2".into(),
            remedy: "no Lyapunov pair found on the slope grid".into(),
        });
    }
    let lyap_prov = if matches!(u.family, Family::Quadratic { .. }) {
        Provenance::Analytic
    } else {
        Provenance::RefinedSupremum
    };
    let mut provenance = BTreeMap::new();
    provenance.insert("K".into(), Provenance::Analytic);
    provenance.insert("K_prime".into(), Provenance::Analytic);
    provenance.insert("K1".into(), lyap_prov);
    provenance.insert("K2".into(), lyap_prov);

    let mut bundle = ConstantsBundle {
        k,
        k_prime,
        k1: candidates[0].k1,
        k2: candidates[0].k2,
        lyapunov_candidates: candidates,
        c_u: None,
        c: None,
        r: None,
        c_lip: None,
        kappa: None,
        c_ls: None,
        d,
        provenance,
    };
    let kp = if k_prime.is_finite() { k_prime } else { 0.0 };
    bundle.select_lyapunov(|p| {
        let (c1, c2) = crate::certifier::thm3_formula(k, kp, p.k1, p.k2, d);
        crate::certifier::single_m(c1, c2, k)
    });
    bundle.validate()?;
    Ok(bundle)
}
