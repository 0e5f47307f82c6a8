//! The N-particle mean-field potential
//!
//! ```text
//! V(x) = Σᵢ U(xᵢ) + 1/(2N) Σᵢ Σⱼ W(xᵢ - xⱼ)
//! ```
//!
//! with its forces and block Hessian `∇²V = H_U + H_W`.
//!
//! Configurations are flat slices of length `N·d`, particle-major.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::potentials::{PotentialSpec, Provenance, Role};
use crate::rng::Stream;

/// Largest `N·d` for which dense `Nd × Nd` matrices are assembled.
pub const DENSE_CAP: usize = 4096;
/// Below this size the operator norm goes straight to a dense solve.
const DENSE_DIRECT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub particles: usize,
    pub confinement: PotentialSpec,
    pub interaction: PotentialSpec,
}

impl ModelConfig {
    pub fn new(particles: usize, confinement: PotentialSpec, interaction: PotentialSpec) -> Result<Self> {
        let m = Self {
            particles,
            confinement,
            interaction,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 particles, got {}",
                self.particles
            )));
        }
        if self.confinement.dim != self.interaction.dim {
            return Err(Error::DimensionMismatch {
                expected: self.confinement.dim,
                got: self.interaction.dim,
            });
        }
        self.confinement.check_role(Role::Confinement)?;
        self.interaction.check_role(Role::Interaction)
    }

    pub fn dim(&self) -> usize {
        self.confinement.dim
    }

    /// Total configuration dimension `N·d`.
    pub fn size(&self) -> usize {
        self.particles * self.dim()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                got: x.len(),
            });
        }
        ensure_finite("x", x)
    }

    /// `V(x)`, including the `i = j` self-terms of the double sum.
    pub fn total_potential(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let (n, d) = (self.particles, self.dim());
        let mut conf = 0.0;
        for i in 0..n {
            conf += self.confinement.value(&x[i * d..(i + 1) * d]);
        }
        let mut inter = 0.0;
        if !self.interaction.is_zero() {
            let mut diff = vec![0.0; d];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..d {
                        diff[k] = x[i * d + k] - x[j * d + k];
                    }
                    inter += self.interaction.value(&diff);
                }
            }
        }
        Ok(conf + inter / (2.0 * n as f64))
    }

    /// `-∇V(x)`.
    pub fn force(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let order: Vec<usize> = (0..self.particles).collect();
        let mut out = vec![0.0; self.size()];
        let mut scratch = ForceScratch::new(self);
        self.force_into(x, &order, &mut out, &mut scratch);
        Ok(out)
    }

    /// Allocation-free force assembly.
    ///
    /// `order` lists particle indices in canonical order; pair terms are
    /// computed once per canonical pair (the pair gradient is odd) and each
    /// particle accumulates its partners in canonical order, so relabelling
    /// particles permutes the output exactly.
    pub fn force_into(&self, x: &[f64], order: &[usize], out: &mut [f64], scratch: &mut ForceScratch) {
        let (n, d) = (self.particles, self.dim());
        for i in 0..n {
            let (xi, oi) = (&x[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
            self.confinement.gradient_into(xi, oi);
            for v in oi.iter_mut() {
                *v = -*v;
            }
        }
        if self.interaction.is_zero() {
            return;
        }
        let pairs = &mut scratch.pairs;
        let diff = &mut scratch.diff;
        let grad = &mut scratch.grad;
        for a in 0..n {
            let i = order[a];
            for b in a + 1..n {
                let j = order[b];
                for k in 0..d {
                    diff[k] = x[i * d + k] - x[j * d + k];
                }
                self.interaction.gradient_into(diff, grad);
                let ab = (a * n + b) * d;
                let ba = (b * n + a) * d;
                for k in 0..d {
                    pairs[ab + k] = grad[k];
                    pairs[ba + k] = -grad[k];
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        for a in 0..n {
            let i = order[a];
            for k in 0..d {
                let mut acc = 0.0;
                for b in 0..n {
                    if b != a {
                        acc += pairs[(a * n + b) * d + k];
                    }
                }
                out[i * d + k] -= acc * inv_n;
            }
        }
    }

    pub fn hessian_blocks(&self, x: &[f64]) -> Result<HessianBlocks> {
        self.check(x)?;
        let size = self.size();
        if size > DENSE_CAP {
            return Err(Error::SizeCap {
                size,
                cap: DENSE_CAP,
            });
        }
        let (n, d) = (self.particles, self.dim());
        let mut h_u = DMatrix::zeros(size, size);
        for i in 0..n {
            self.confinement
                .add_hessian_block(&x[i * d..(i + 1) * d], 1.0, &mut h_u, i * d, i * d);
        }
        let mut h_w = DMatrix::zeros(size, size);
        if !self.interaction.is_zero() {
            let inv_n = 1.0 / n as f64;
            let mut diff = vec![0.0; d];
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for k in 0..d {
                        diff[k] = x[i * d + k] - x[j * d + k];
                    }
                    self.interaction
                        .add_hessian_block(&diff, -inv_n, &mut h_w, i * d, j * d);
                    self.interaction
                        .add_hessian_block(&diff, inv_n, &mut h_w, i * d, i * d);
                }
            }
        }
        Ok(HessianBlocks { h_u, h_w })
    }

    /// Matrix-free `out = H_W(x) z`.
    pub fn hw_apply(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        let (n, d) = (self.particles, self.dim());
        out.iter_mut().for_each(|v| *v = 0.0);
        if self.interaction.is_zero() {
            return;
        }
        let inv_n = 1.0 / n as f64;
        let mut diff = vec![0.0; d];
        for i in 0..n {
            for j in i + 1..n {
                let mut r2 = 0.0;
                for k in 0..d {
                    diff[k] = x[i * d + k] - x[j * d + k];
                    r2 += diff[k] * diff[k];
                }
                let r = r2.sqrt();
                let p = self.interaction.profile(r);
                let radial = if r > 0.0 { (p.d2 - p.d1_over_r) / r2 } else { 0.0 };
                // ∇²W(xᵢ - xⱼ)(zᵢ - zⱼ), shared with opposite sign by i and j.
                let proj: f64 = (0..d).map(|k| diff[k] * (z[i * d + k] - z[j * d + k])).sum();
                for k in 0..d {
                    let dz = z[i * d + k] - z[j * d + k];
                    let v = inv_n * (p.d1_over_r * dz + radial * proj * diff[k]);
                    out[i * d + k] += v;
                    out[j * d + k] -= v;
                }
            }
        }
    }

    /// `|H_W(x)|_op`.
    pub fn hw_opnorm(&self, x: &[f64]) -> Result<OpNorm> {
        self.check(x)?;
        if self.interaction.is_zero() {
            return Ok(OpNorm {
                value: 0.0,
                method: OpNormMethod::Exact,
                converged: true,
            });
        }
        if self.size() <= DENSE_DIRECT {
            return self.hw_opnorm_dense(x);
        }
        let p = self.hw_opnorm_power(x, 20_000);
        if p.converged {
            return Ok(p);
        }
        if self.size() <= DENSE_CAP {
            return self.hw_opnorm_dense(x);
        }
        Ok(p)
    }

    pub fn hw_opnorm_dense(&self, x: &[f64]) -> Result<OpNorm> {
        let h = self.hessian_blocks(x)?.h_w;
        let ev = SymmetricEigen::new(h).eigenvalues;
        Ok(OpNorm {
            value: ev.amax(),
            method: OpNormMethod::Dense,
            converged: true,
        })
    }

    /// Power iteration on the matrix-free action. Stops once the
    /// eigen-residual `|H v - θ v|` is below `1e-10 |θ|` and `|Hv|` has
    /// stalled; `converged` is false if the iteration budget runs out.
    pub fn hw_opnorm_power(&self, x: &[f64], max_iter: usize) -> OpNorm {
        let size = self.size();
        let mut s = Stream::new(0x9e37, size as u64);
        let mut v: Vec<f64> = (0..size).map(|_| s.normal()).collect();
        normalize(&mut v);
        let mut w = vec![0.0; size];
        let mut prev = 0.0;
        for _ in 0..max_iter {
            self.hw_apply(x, &v, &mut w);
            let mu = norm2(&w);
            if mu == 0.0 {
                return OpNorm {
                    value: 0.0,
                    method: OpNormMethod::PowerIteration,
                    converged: true,
                };
            }
            let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let resid = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (b - theta * a).powi(2))
                .sum::<f64>()
                .sqrt();
            if resid <= 1e-10 * theta.abs() && (mu - prev).abs() <= 1e-14 * mu {
                return OpNorm {
                    value: mu,
                    method: OpNormMethod::PowerIteration,
                    converged: true,
                };
            }
            prev = mu;
            for (a, b) in v.iter_mut().zip(&w) {
                *a = b / mu;
            }
        }
        OpNorm {
            value: prev,
            method: OpNormMethod::PowerIteration,
            converged: false,
        }
    }

    /// The matrix `(1/N)(-1{i≠j} ∇²W(xᵢ - xⱼ))` of the interaction lower
    /// bound condition.
    pub fn coupling_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let size = self.size();
        if size > DENSE_CAP {
            return Err(Error::SizeCap {
                size,
                cap: DENSE_CAP,
            });
        }
        let (n, d) = (self.particles, self.dim());
        let mut m = DMatrix::zeros(size, size);
        let mut diff = vec![0.0; d];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..d {
                    diff[k] = x[i * d + k] - x[j * d + k];
                }
                self.interaction
                    .add_hessian_block(&diff, -1.0 / n as f64, &mut m, i * d, j * d);
            }
        }
        Ok(m)
    }
}

/// Scratch buffers for [`ModelConfig::force_into`].
#[derive(Debug, Clone)]
pub struct ForceScratch {
    pairs: Vec<f64>,
    diff: Vec<f64>,
    grad: Vec<f64>,
}

impl ForceScratch {
    pub fn new(model: &ModelConfig) -> Self {
        let (n, d) = (model.particles, model.dim());
        let pairs = if model.interaction.is_zero() { 0 } else { n * n * d };
        Self {
            pairs: vec![0.0; pairs],
            diff: vec![0.0; d],
            grad: vec![0.0; d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub h_u: DMatrix<f64>,
    pub h_w: DMatrix<f64>,
}

impl HessianBlocks {
    pub fn total(&self) -> DMatrix<f64> {
        &self.h_u + &self.h_w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpNormMethod {
    Exact,
    Dense,
    PowerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpNorm {
    pub value: f64,
    pub method: OpNormMethod,
    pub converged: bool,
}

/// Sampled estimate of the best `h` in the interaction lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HEstimate {
    pub h: f64,
    pub samples: usize,
    pub provenance: Provenance,
}

/// Minimum, over `n_samples` Gaussian configurations of spread `spread`,
/// of the smallest eigenvalue of [`ModelConfig::coupling_matrix`].
///
/// This is an upper bound on the true infimum, hence never certifying.
pub fn upiw_h_estimate(model: &ModelConfig, n_samples: usize, spread: f64, seed: u64) -> Result<HEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    if model.interaction.is_zero() {
        return Ok(HEstimate {
            h: 0.0,
            samples: n_samples,
            provenance: Provenance::NumericEstimate,
        });
    }
    let mut s = Stream::new(seed, 0x0b1e);
    let mut h = f64::INFINITY;
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..model.size()).map(|_| spread * s.normal()).collect();
        let ev = SymmetricEigen::new(model.coupling_matrix(&x)?).eigenvalues;
        h = h.min(ev.min());
    }
    Ok(HEstimate {
        h,
        samples: n_samples,
        provenance: Provenance::NumericEstimate,
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    v.iter_mut().for_each(|a| *a /= n);
}
