use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::ModelConfig;
use crate::numerics::SymTridiagonal;
use crate::rng::Stream;

/// Largest admissible tail mass outside the box.
pub const TAIL_MASS: f64 = 1e-12;
const MAX_NODES: usize = 1 << 22;

/// Gibbs measure `e^{-V}/Z` discretized on a uniform midpoint grid over
/// `[-L, L]^dims`, `dims ∈ {1, 2}`.
///
/// Node `k` of a 2D grid has coordinates `(nodes[k / n], nodes[k % n])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    pub dims: usize,
    pub n: usize,
    pub half_width: f64,
    pub dx: f64,
    pub nodes: Vec<f64>,
    pub potential: Vec<f64>,
    /// Probability mass per cell; sums to 1.
    pub weights: Vec<f64>,
    pub log_z: f64,
}

impl GridMeasure {
    pub fn new<F: Fn(&[f64]) -> f64>(v: F, dims: usize, half_width: f64, n: usize) -> Result<Self> {
        let g = Self::build(&v, dims, half_width, n)?;
        if g.tail_mass() > TAIL_MASS {
            return Err(Error::TailCoverage {
                required: required_half_width(&v, dims),
            });
        }
        Ok(g)
    }

    /// Measure of a model with `N·d ≤ 2`.
    pub fn from_model(model: &ModelConfig, half_width: f64, n: usize) -> Result<Self> {
        let size = model.size();
        if size > 2 {
            return Err(Error::InvalidArgument(format!(
                "grid measures need N·d ≤ 2, got {size}"
            )));
        }
        Self::new(|x| model.total_potential(x).unwrap_or(f64::INFINITY), size, half_width, n)
    }

    fn build<F: Fn(&[f64]) -> f64>(v: &F, dims: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(Error::InvalidArgument(format!("grid dimension must be 1 or 2, got {dims}")));
        }
        if n < 8 || !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need n ≥ 8 and a positive box, got n = {n}, L = {half_width}"
            )));
        }
        let total = n.pow(dims as u32);
        if total > MAX_NODES {
            return Err(Error::ResourceCap(format!("{total} grid nodes exceed {MAX_NODES}")));
        }
        let dx = 2.0 * half_width / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -half_width + (i as f64 + 0.5) * dx).collect();
        let potential: Vec<f64> = (0..total)
            .map(|k| {
                if dims == 1 {
                    v(&[nodes[k]])
                } else {
                    v(&[nodes[k / n], nodes[k % n]])
                }
            })
            .collect();
        if potential.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("potential on grid".into()));
        }
        let vmin = potential.iter().copied().fold(f64::INFINITY, f64::min);
        let cell = dx.powi(dims as i32);
        let raw: Vec<f64> = potential.iter().map(|p| (vmin - p).exp()).collect();
        let sum: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / sum).collect();
        Ok(Self {
            dims,
            n,
            half_width,
            dx,
            nodes,
            potential,
            weights,
            log_z: (sum * cell).ln() - vmin,
        })
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    /// Coordinates of node `k` (second entry unused in 1D).
    pub fn point(&self, k: usize) -> [f64; 2] {
        if self.dims == 1 {
            [self.nodes[k], 0.0]
        } else {
            [self.nodes[k / self.n], self.nodes[k % self.n]]
        }
    }

    /// Tabulates `f` on the nodes.
    pub fn tabulate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|k| f(&self.point(k)[..self.dims]))
            .collect()
    }

    pub fn expect(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        let (i, j) = if self.dims == 1 { (k, 0) } else { (k / n, k % n) };
        let step = if self.dims == 1 { 1 } else { n };
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = k - step;
        }
        if i + 1 < n {
            out[1] = k + step;
        }
        if self.dims == 2 {
            if j > 0 {
                out[2] = k - 1;
            }
            if j + 1 < n {
                out[3] = k + 1;
            }
        }
        out.into_iter().filter(|&m| m != usize::MAX)
    }

    /// Estimated mass outside the box: boundary density over the outward
    /// slope of `V`, summed over boundary faces.
    pub fn tail_mass(&self) -> f64 {
        let n = self.n;
        let cell = self.dx.powi(self.dims as i32);
        let face = |k: usize, inner: usize| {
            let slope = (self.potential[k] - self.potential[inner]) / self.dx;
            if slope <= 0.0 {
                return f64::INFINITY;
            }
            self.weights[k] / cell * self.dx.powi(self.dims as i32 - 1) / slope
        };
        let mut mass = 0.0;
        if self.dims == 1 {
            mass += face(0, 1) + face(n - 1, n - 2);
        } else {
            for t in 0..n {
                mass += face(t, n + t);
                mass += face((n - 1) * n + t, (n - 2) * n + t);
                mass += face(t * n, t * n + 1);
                mass += face(t * n + n - 1, t * n + n - 2);
            }
        }
        mass
    }

    /// `(Qf)_k = Σ_j Q_kj (f_j - f_k)` with `Q_kj = e^{-(V_j - V_k)/2}/dx²`,
    /// a discretization of `Δ - ∇V·∇` reversible for the grid weights.
    pub fn generator_apply(&self, f: &[f64], out: &mut [f64]) {
        let inv = 1.0 / (self.dx * self.dx);
        for k in 0..self.len() {
            let mut acc = 0.0;
            for j in self.neighbors(k) {
                acc += (-(self.potential[j] - self.potential[k]) / 2.0).exp() * (f[j] - f[k]);
            }
            out[k] = inv * acc;
        }
    }

    /// Discrete Dirichlet form `Σ_{edges} √(π_k π_j)/dx² (f_j - f_k)(g_j - g_k)`.
    pub fn dirichlet_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let inv = 1.0 / (self.dx * self.dx);
        let mut acc = 0.0;
        for k in 0..self.len() {
            for j in self.neighbors(k).filter(|&j| j > k) {
                acc += (self.weights[k] * self.weights[j]).sqrt() * (f[j] - f[k]) * (g[j] - g[k]);
            }
        }
        inv * acc
    }

    /// Diagonal of the symmetrized generator `-Π^{1/2} Q Π^{-1/2}`; its
    /// off-diagonal entries are all `-1/dx²`.
    fn symmetric_diagonal(&self) -> Vec<f64> {
        let inv = 1.0 / (self.dx * self.dx);
        (0..self.len())
            .map(|k| {
                inv * self
                    .neighbors(k)
                    .map(|j| (-(self.potential[j] - self.potential[k]) / 2.0).exp())
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Smallest half-width whose box leaves tail mass below `1e-12`.
pub fn required_half_width<F: Fn(&[f64]) -> f64>(v: &F, dims: usize) -> f64 {
    let mut l = 1.0;
    for _ in 0..80 {
        let n = if dims == 1 { 400 } else { 120 };
        if let Ok(g) = GridMeasure::build(v, dims, l, n) {
            if g.tail_mass() <= TAIL_MASS {
                return l;
            }
        }
        l *= 1.25;
    }
    f64::INFINITY
}

/// Smallest nonzero eigenvalue of the discretized `-(Δ - ∇V·∇)`.
pub fn spectral_gap_oracle(measure: &GridMeasure) -> Result<f64> {
    let diag = measure.symmetric_diagonal();
    let off = -1.0 / (measure.dx * measure.dx);
    if measure.dims == 1 {
        let t = SymTridiagonal {
            diag,
            off: vec![off; measure.len() - 1],
        };
        return Ok(t.eigenvalue(1));
    }
    deflated_inverse_iteration(measure, &diag, off)
}

/// Smallest eigenvalue of `S + σ u uᵀ`, where `u = √π` spans the kernel of
/// the symmetrized generator `S`, by inverse iteration with
/// Jacobi-preconditioned conjugate gradients.
fn deflated_inverse_iteration(g: &GridMeasure, diag: &[f64], off: f64) -> Result<f64> {
    let len = g.len();
    let u: Vec<f64> = g.weights.iter().map(|w| w.sqrt()).collect();
    let sigma = 2.0 * diag.iter().fold(0.0_f64, |a, &b| a.max(b)) + 8.0 * off.abs();
    let apply_s = |x: &[f64], y: &mut [f64]| {
        for k in 0..len {
            let mut acc = diag[k] * x[k];
            for j in g.neighbors(k) {
                acc += off * x[j];
            }
            y[k] = acc;
        }
    };
    let apply = |x: &[f64], y: &mut [f64]| {
        apply_s(x, y);
        let p = dot(&u, x) * sigma;
        for k in 0..len {
            y[k] += p * u[k];
        }
    };
    let precond: Vec<f64> = (0..len).map(|k| 1.0 / (diag[k] + sigma * u[k] * u[k])).collect();

    let mut s = Stream::new(0x5ca1, len as u64);
    let mut x: Vec<f64> = (0..len).map(|_| s.normal()).collect();
    let ux = dot(&u, &x);
    for k in 0..len {
        x[k] -= ux * u[k];
    }
    scale(&mut x);
    let mut y = vec![0.0; len];
    let mut sx = vec![0.0; len];
    let mut theta_prev = f64::INFINITY;
    for _ in 0..500 {
        cg_solve(&apply, &precond, &x, &mut y, 1e-12, 20 * len)?;
        x.copy_from_slice(&y);
        scale(&mut x);
        apply(&x, &mut sx);
        let theta = dot(&x, &sx);
        if (theta - theta_prev).abs() <= 1e-13 * theta.abs() {
            return Ok(theta);
        }
        theta_prev = theta;
    }
    Err(Error::ResourceCap("inverse iteration did not converge".into()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scale(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

fn cg_solve<A: Fn(&[f64], &mut [f64])>(
    apply: &A,
    precond: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(precond).map(|(a, p)| a * p).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let bnorm = dot(b, b).sqrt();
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(());
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] * precond[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    if dot(&r, &r).sqrt() <= 1e-8 * bnorm {
        Ok(())
    } else {
        Err(Error::ResourceCap("conjugate gradients did not converge".into()))
    }
}

/// Spectral gap at two (1D: three) resolutions with a Richardson estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGapReport {
    pub gap: f64,
    pub coarse_gap: f64,
    pub richardson: f64,
    /// `(g(h) - g(h/2)) / (g(h/2) - g(h/4))`; about 4 for second order.
    pub convergence_ratio: Option<f64>,
    pub half_width: f64,
    pub dx: f64,
    pub n: usize,
}

/// Gap of `e^{-V}` on `[-L, L]^dims` at `n` and `2n` nodes per axis.
/// `half_width` defaults to 1.1 times [`required_half_width`].
pub fn spectral_gap<F: Fn(&[f64]) -> f64>(
    v: F,
    dims: usize,
    half_width: Option<f64>,
    n: usize,
) -> Result<SpectralGapReport> {
    let l = half_width.unwrap_or_else(|| 1.1 * required_half_width(&v, dims));
    let coarse = GridMeasure::new(&v, dims, l, n)?;
    let fine = GridMeasure::new(&v, dims, l, 2 * n)?;
    let g1 = spectral_gap_oracle(&coarse)?;
    let g2 = spectral_gap_oracle(&fine)?;
    let convergence_ratio = if dims == 1 {
        let g3 = spectral_gap_oracle(&GridMeasure::new(&v, dims, l, 4 * n)?)?;
        Some((g1 - g2) / (g2 - g3))
    } else {
        None
    };
    Ok(SpectralGapReport {
        gap: g2,
        coarse_gap: g1,
        richardson: (4.0 * g2 - g1) / 3.0,
        convergence_ratio,
        half_width: l,
        dx: fine.dx,
        n: 2 * n,
    })
}
