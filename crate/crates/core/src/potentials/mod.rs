//! Parametric radial potential families with exact derivatives, and the
//! scalar constants the certifier consumes.
//!
//! Every built-in family is radial, `P(x) = f(|x|)`, so value, gradient and
//! Hessian follow from the profile `(f, f', f'/r, f'')`:
//!
//! ```text
//! ∇P(x)  = (f'(r)/r) x
//! ∇²P(x) = (f'(r)/r) I + (f''(r) - f'(r)/r) x̂ x̂ᵀ
//! ```
//!
//! The Hessian has eigenvalue `f''(r)` along `x̂` and `f'(r)/r` (multiplicity
//! `d - 1`) across it.

mod constants;
mod convexity;
mod dissipativity;

pub use constants::{
    extract_constants, lyapunov_candidates, ConstantsBundle, LyapunovPair, Provenance,
};
pub use convexity::{convexity_at_infinity_fit, verify_convexity_pairs, ConvexityFit};
pub use dissipativity::{
    confinement_dissipativity, dissipativity_rate, interaction_dissipativity, lipschitz_constant,
    Dissipativity, LipschitzConstant,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Sign of a Gaussian bump: attractive bumps are wells, `W = -A e^{-r²/2σ²}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpSign {
    Attractive,
    Repulsive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", deny_unknown_fields)]
pub enum Family {
    /// `coef/2 · |x|²`
    Quadratic { coef: f64 },
    /// `quartic · |x|⁴ - well · |x|²`
    QuarticDoubleWell { quartic: f64, well: f64 },
    /// `∓ amplitude · exp(-|x|²/(2 width²))`
    GaussianBump {
        amplitude: f64,
        width: f64,
        sign: BumpSign,
    },
    /// `amplitude · cos(frequency · |x|)`
    Cosine { amplitude: f64, frequency: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Confinement,
    Interaction,
}

/// Radial profile of a potential at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub f: f64,
    pub d1: f64,
    /// `f'(r)/r`, continuous at `r = 0`.
    pub d1_over_r: f64,
    pub d2: f64,
}

impl Family {
    pub fn profile(&self, r: f64) -> Profile {
        match *self {
            Family::Quadratic { coef } => Profile {
                f: 0.5 * coef * r * r,
                d1: coef * r,
                d1_over_r: coef,
                d2: coef,
            },
            Family::QuarticDoubleWell { quartic, well } => {
                let r2 = r * r;
                Profile {
                    f: quartic * r2 * r2 - well * r2,
                    d1: 4.0 * quartic * r2 * r - 2.0 * well * r,
                    d1_over_r: 4.0 * quartic * r2 - 2.0 * well,
                    d2: 12.0 * quartic * r2 - 2.0 * well,
                }
            }
            Family::GaussianBump {
                amplitude,
                width,
                sign,
            } => {
                let s = match sign {
                    BumpSign::Attractive => -amplitude,
                    BumpSign::Repulsive => amplitude,
                };
                let w2 = width * width;
                let e = (-0.5 * r * r / w2).exp();
                Profile {
                    f: s * e,
                    d1: -s * r / w2 * e,
                    d1_over_r: -s / w2 * e,
                    d2: -s * (1.0 / w2 - r * r / (w2 * w2)) * e,
                }
            }
            Family::Cosine {
                amplitude,
                frequency,
            } => {
                let wr = frequency * r;
                let (s, c) = wr.sin_cos();
                let sinc = if wr.abs() < 1e-4 {
                    1.0 - wr * wr / 6.0
                } else {
                    s / wr
                };
                Profile {
                    f: amplitude * c,
                    d1: -amplitude * frequency * s,
                    d1_over_r: -amplitude * frequency * frequency * sinc,
                    d2: -amplitude * frequency * frequency * c,
                }
            }
        }
    }

    /// A natural length scale, used to size search boxes.
    pub fn length_scale(&self) -> f64 {
        match *self {
            Family::Quadratic { coef } if coef > 0.0 => 1.0 / coef.sqrt(),
            Family::Quadratic { .. } => 1.0,
            Family::QuarticDoubleWell { quartic, well } => {
                let well_pos = if well > 0.0 { (well / (2.0 * quartic)).sqrt() } else { 0.0 };
                well_pos.max(quartic.powf(-0.25))
            }
            Family::GaussianBump { width, .. } => width,
            Family::Cosine { frequency, .. } => std::f64::consts::PI / frequency,
        }
    }
}

/// Value, gradient and Hessian of a potential at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct PotentialSpec {
    pub family: Family,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: String,
    params: serde_json::Value,
    dim: usize,
}

impl TryFrom<RawSpec> for PotentialSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        let tagged = serde_json::json!({ "family": raw.family, "params": raw.params });
        let family: Family = serde_json::from_value(tagged)
            .map_err(|e| Error::InvalidPotential(e.to_string()))?;
        PotentialSpec::new(family, raw.dim)
    }
}

impl From<PotentialSpec> for RawSpec {
    fn from(s: PotentialSpec) -> Self {
        let mut v = serde_json::to_value(s.family).expect("family serializes");
        RawSpec {
            family: v["family"].as_str().unwrap_or_default().to_string(),
            params: v["params"].take(),
            dim: s.dim,
        }
    }
}

impl PotentialSpec {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        let spec = Self { family, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn quadratic(coef: f64, dim: usize) -> Result<Self> {
        Self::new(Family::Quadratic { coef }, dim)
    }

    pub fn double_well(quartic: f64, well: f64, dim: usize) -> Result<Self> {
        Self::new(Family::QuarticDoubleWell { quartic, well }, dim)
    }

    pub fn bump(amplitude: f64, width: f64, sign: BumpSign, dim: usize) -> Result<Self> {
        Self::new(
            Family::GaussianBump {
                amplitude,
                width,
                sign,
            },
            dim,
        )
    }

    pub fn cosine(amplitude: f64, frequency: f64, dim: usize) -> Result<Self> {
        Self::new(
            Family::Cosine {
                amplitude,
                frequency,
            },
            dim,
        )
    }

    /// The identically zero interaction, `Quadratic(0)`.
    pub fn zero(dim: usize) -> Self {
        Self {
            family: Family::Quadratic { coef: 0.0 },
            dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Quadratic { coef } if coef == 0.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPotential(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        match self.family {
            Family::Quadratic { coef } => {
                if !(coef.is_finite() && coef >= 0.0) {
                    return bad("Quadratic coef must be finite and >= 0");
                }
            }
            Family::QuarticDoubleWell { quartic, well } => {
                if !(quartic.is_finite() && quartic > 0.0) {
                    return bad("QuarticDoubleWell quartic coefficient must be > 0");
                }
                if !(well.is_finite() && well >= 0.0) {
                    return bad("QuarticDoubleWell well coefficient must be >= 0");
                }
            }
            Family::GaussianBump {
                amplitude, width, ..
            } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return bad("GaussianBump amplitude must be finite and >= 0");
                }
                if !(width.is_finite() && width > 0.0) {
                    return bad("GaussianBump width must be > 0");
                }
            }
            Family::Cosine {
                amplitude,
                frequency,
            } => {
                if !amplitude.is_finite() {
                    return bad("Cosine amplitude must be finite");
                }
                if !(frequency.is_finite() && frequency > 0.0) {
                    return bad("Cosine frequency must be > 0");
                }
            }
        }
        Ok(())
    }

    /// Checks that this spec may play `role`. Confinement potentials must
    /// give an integrable Gibbs measure.
    pub fn check_role(&self, role: Role) -> Result<()> {
        match (role, self.family) {
            (Role::Interaction, _) => Ok(()),
            (Role::Confinement, Family::Quadratic { coef }) if coef > 0.0 => Ok(()),
            (Role::Confinement, Family::QuarticDoubleWell { .. }) => Ok(()),
            (Role::Confinement, f) => Err(Error::InvalidPotential(format!(
                "{f:?} is not confining: exp(-U) is not integrable"
            ))),
        }
    }

    #[inline]
    pub fn profile(&self, r: f64) -> Profile {
        self.family.profile(r)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        ensure_finite("x", x)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Evaluation> {
        self.check_point(x)?;
        let r = norm(x);
        let p = self.profile(r);
        let gradient = DVector::from_iterator(self.dim, x.iter().map(|&xi| p.d1_over_r * xi));
        let mut hessian = DMatrix::from_diagonal_element(self.dim, self.dim, p.d1_over_r);
        if r > 0.0 {
            let k = (p.d2 - p.d1_over_r) / (r * r);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    hessian[(i, j)] += k * x[i] * x[j];
                }
            }
        }
        Ok(Evaluation {
            value: p.f,
            gradient,
            hessian,
        })
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile(norm(x)).f
    }

    /// Writes `∇P(x)` into `out` without allocating.
    #[inline]
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let k = self.profile(norm(x)).d1_over_r;
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = k * xi;
        }
    }

    /// Adds `scale · ∇²P(x)` into a `d × d` block of `m` at `(row, col)`.
    pub(crate) fn add_hessian_block(
        &self,
        x: &[f64],
        scale: f64,
        m: &mut DMatrix<f64>,
        row: usize,
        col: usize,
    ) {
        let r = norm(x);
        let p = self.profile(r);
        let k = if r > 0.0 {
            (p.d2 - p.d1_over_r) / (r * r)
        } else {
            0.0
        };
        for i in 0..self.dim {
            m[(row + i, col + i)] += scale * p.d1_over_r;
            for j in 0..self.dim {
                m[(row + i, col + j)] += scale * k * x[i] * x[j];
            }
        }
    }

    /// Hessian operator norm at radius `r`.
    pub fn hessian_opnorm_at(&self, r: f64) -> f64 {
        let p = self.profile(r);
        if self.dim == 1 {
            p.d2.abs()
        } else {
            p.d2.abs().max(p.d1_over_r.abs())
        }
    }

    /// Exact `(inf, sup)` of the Hessian eigenvalues over `R^d`.
    pub fn hessian_eig_bounds(&self) -> (f64, f64) {
        match self.family {
            Family::Quadratic { coef } => (coef, coef),
            Family::QuarticDoubleWell { well, .. } => (-2.0 * well, f64::INFINITY),
            Family::GaussianBump {
                amplitude,
                width,
                sign,
            } => {
                let peak = amplitude / (width * width);
                let dip = 2.0 * amplitude * (-1.5f64).exp() / (width * width);
                match sign {
                    BumpSign::Attractive => (-dip, peak),
                    BumpSign::Repulsive => (-peak, dip),
                }
            }
            Family::Cosine {
                amplitude,
                frequency,
            } => {
                let k = amplitude.abs() * frequency * frequency;
                (-k, k)
            }
        }
    }

    /// `sup |∇²P|_op`, possibly infinite.
    pub fn hessian_bound(&self) -> f64 {
        let (lo, hi) = self.hessian_eig_bounds();
        lo.abs().max(hi.abs())
    }

    /// `sup |∇P|`, possibly infinite.
    pub fn gradient_bound(&self) -> f64 {
        match self.family {
            Family::Quadratic { coef: 0.0 } => 0.0,
            Family::Quadratic { .. } | Family::QuarticDoubleWell { .. } => f64::INFINITY,
            Family::GaussianBump {
                amplitude, width, ..
            } => amplitude / width * (-0.5f64).exp(),
            Family::Cosine {
                amplitude,
                frequency,
            } => amplitude.abs() * frequency,
        }
    }

    /// `liminf_{|x|→∞}` of the smallest Hessian eigenvalue.
    pub fn asymptotic_hessian_floor(&self) -> f64 {
        match self.family {
            Family::Quadratic { coef } => coef,
            Family::QuarticDoubleWell { .. } => f64::INFINITY,
            Family::GaussianBump { .. } => 0.0,
            Family::Cosine {
                amplitude,
                frequency,
            } => -amplitude.abs() * frequency * frequency,
        }
    }

    pub fn length_scale(&self) -> f64 {
        self.family.length_scale()
    }
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
