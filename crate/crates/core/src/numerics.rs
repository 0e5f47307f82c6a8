//! Small numerical kernels shared by the certification pipeline: 1D
//! maximization, Gauss–Legendre panels, and symmetric eigenvalue solvers
//! for the tiny and tridiagonal matrices that show up in certificates and
//! grid oracles.

use nalgebra::DMatrix;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a bounded one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
    pub converged: bool,
}

/// Golden-section search for a local maximum of `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Maximum {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while (hi - lo) > tol * (1.0 + x1.abs().max(x2.abs())) && iters < 200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        iters += 1;
    }
    let (arg, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Maximum {
        arg,
        value,
        converged: iters < 200,
    }
}

/// Global maximum of `f` on `[lo, hi]`: uniform grid of `n` points, then
/// golden-section refinement around the best few grid maxima.
///
/// `converged` is false when the maximizer sits on the grid boundary
/// (the supremum may lie outside the box) or a refinement failed.
pub fn grid_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Maximum {
    assert!(n >= 3 && hi > lo);
    let step = (hi - lo) / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|i| f(lo + step * i as f64)).collect();

    let mut peaks: Vec<usize> = (1..n - 1)
        .filter(|&i| vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1])
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    peaks.truncate(4);

    let (mut best_i, mut best) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut out = Maximum {
        arg: lo + step * best_i as f64,
        value: best,
        converged: best_i != 0 && best_i != n - 1,
    };
    for i in peaks {
        let a = lo + step * (i - 1) as f64;
        let b = lo + step * (i + 1) as f64;
        let m = golden_max(&f, a, b, 1e-12);
        if m.value > out.value || (m.value == out.value && !out.converged) {
            out = Maximum {
                arg: m.arg,
                value: m.value,
                converged: m.converged,
            };
        }
    }
    // Flat functions (constant) are fine: the max is attained everywhere.
    if !out.converged && vals.iter().all(|&v| (v - best).abs() <= 1e-15 * (1.0 + best.abs())) {
        out.converged = true;
    }
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre panel rule.
#[derive(Debug, Clone)]
pub struct GaussPanel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussPanel {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    /// Nodes mapped to `[a, b]` with their scaled weights.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, w * half))
    }
}

/// Eigenvalues of a real symmetric 2×2 matrix `[[a, b], [b, c]]`, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let hi = mean + rad;
    // Product form keeps the small root accurate when |det| << trace².
    let det = a * c - b * b;
    let lo = if hi != 0.0 { det / hi } else { mean - rad };
    (lo, hi)
}

/// Cyclic Jacobi eigenvalue iteration for small dense symmetric matrices.
/// Returns ascending eigenvalues. The input is symmetrized first.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = 0.5 * (m + m.transpose());
    let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let prev = if q == 0.0 { f64::EPSILON * (1.0 + x.abs()) } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let n = self.diag.len();
        assert!(k < n);
        // Gershgorin interval.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
