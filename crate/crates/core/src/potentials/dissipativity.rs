//! Drift dissipativity `b₀(r)` and the Lipschitz constant built from it.
//!
//! For `|x - y| = r` and unit `e = (x - y)/r`, the rate is
//!
//! ```text
//! b₀(r) = sup_{x,y,z} -⟨e, ∇U(x) - ∇U(y) + ∇W(x - z) - ∇W(y - z)⟩.
//! ```
//!
//! `z` only enters through `a = x - z`, which ranges over all of `R^d`
//! independently of `x`, so the supremum splits into a confinement part and
//! an interaction part, each of the form `sup_a -⟨e, ∇P(a) - ∇P(a - r e)⟩`.
//! For radial `P` that one-point search reduces to one variable in `d = 1`
//! and to an (axial, transverse) pair for `d > 1`.

use serde::{Deserialize, Serialize};

use super::{Family, PotentialSpec};
use crate::numerics::{golden_max, grid_max, GaussPanel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipativity {
    pub value: f64,
    /// False when the optimizer could not confirm the supremum; such a
    /// value is only a lower bound and must not feed a certificate.
    pub converged: bool,
    pub analytic: bool,
}

impl Dissipativity {
    fn exact(value: f64) -> Self {
        Self {
            value,
            converged: true,
            analytic: true,
        }
    }

    fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            converged: self.converged && other.converged,
            analytic: self.analytic && other.analytic,
        }
    }
}

/// `b₀(r)` for the pair `(U, W)`.
pub fn dissipativity_rate(u: &PotentialSpec, w: &PotentialSpec, r: f64) -> Dissipativity {
    assert!(r > 0.0, "dissipativity_rate needs r > 0");
    confinement_dissipativity(u, r).add(interaction_dissipativity(w, r))
}

/// Confinement part `sup_x -⟨e, ∇U(x) - ∇U(x - r e)⟩`.
pub fn confinement_dissipativity(u: &PotentialSpec, r: f64) -> Dissipativity {
    match u.family {
        Family::Quadratic { coef } => Dissipativity::exact(-coef * r),
        // ⟨e, ∇U(m + re/2) - ∇U(m - re/2)⟩ = 4q(|m|² r + r³/4 + 2 r m_e²) - 2wr,
        // minimized at m = 0.
        Family::QuarticDoubleWell { quartic, well } => {
            Dissipativity::exact(2.0 * well * r - quartic * r * r * r)
        }
        _ => pair_gap_search(u, r),
    }
}

/// Interaction part `sup_a -⟨e, ∇W(a) - ∇W(a - r e)⟩`.
pub fn interaction_dissipativity(w: &PotentialSpec, r: f64) -> Dissipativity {
    match w.family {
        Family::Quadratic { coef } => Dissipativity::exact(-coef * r),
        _ => pair_gap_search(w, r),
    }
}

/// Numerical search for `sup_a -⟨e, ∇P(a) - ∇P(a - r e)⟩`, used for
/// families without a closed form (and as a cross-check of those with one).
pub(crate) fn pair_gap_search(p: &PotentialSpec, r: f64) -> Dissipativity {
    let g = |rad: f64| p.profile(rad).d1_over_r;
    let half_box = 50.0 * p.length_scale() + r;
    if p.dim == 1 {
        let f = |a: f64| -(g(a.abs()) * a - g((a - r).abs()) * (a - r));
        let m = grid_max(f, -half_box, half_box, 2001);
        return Dissipativity {
            value: m.value,
            converged: m.converged,
            analytic: false,
        };
    }

    // x = (p, ρ), y = (p - r, ρ) in an axial/transverse section.
    let f = |ax: f64, tr: f64| {
        let y = ax - r;
        -(g((ax * ax + tr * tr).sqrt()) * ax - g((y * y + tr * tr).sqrt()) * y)
    };
    let (na, nt) = (201usize, 101usize);
    let da = 2.0 * half_box / (na - 1) as f64;
    let dt = half_box / (nt - 1) as f64;
    let mut starts: Vec<(f64, f64, f64)> = Vec::with_capacity(na * nt);
    for i in 0..na {
        for j in 0..nt {
            let (ax, tr) = (-half_box + da * i as f64, dt * j as f64);
            starts.push((f(ax, tr), ax, tr));
        }
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = starts[0];
    let mut converged = true;
    for &(v0, mut ax, mut tr) in starts.iter().take(4) {
        let mut v = v0;
        let mut ok = false;
        let (mut wa, mut wt) = (da, dt);
        for _ in 0..60 {
            let ma = golden_max(|t| f(t, tr), ax - wa, ax + wa, 1e-13);
            ax = ma.arg;
            let lo = (tr - wt).max(0.0);
            let mt = golden_max(|t| f(ax, t), lo, tr + wt, 1e-13);
            tr = mt.arg;
            let nv = mt.value.max(ma.value);
            if (nv - v).abs() <= 1e-14 * (1.0 + nv.abs()) {
                v = nv;
                ok = true;
                break;
            }
            v = nv;
            wa = (wa * 0.7).max(1e-9);
            wt = (wt * 0.7).max(1e-9);
        }
        if v > best.0 {
            best = (v, ax, tr);
            converged = ok;
        } else if v == best.0 {
            converged &= ok;
        }
    }
    let on_edge = best.1.abs() >= half_box * (1.0 - 1e-9) || best.2 >= half_box * (1.0 - 1e-9);
    Dissipativity {
        value: best.0,
        converged: converged && !on_edge,
        analytic: false,
    }
}

/// Result of the `c_Lip` quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConstant {
    /// `+∞` when the outer integral does not converge.
    #[serde(with = "crate::report::extended")]
    pub value: f64,
    pub converged: bool,
    /// Truncation point of the outer integral.
    pub truncated_at: f64,
    pub panels: usize,
}

impl LipschitzConstant {
    pub fn is_finite(&self) -> bool {
        self.converged && self.value.is_finite()
    }
}

const TAIL_REL_TOL: f64 = 1e-10;
const S_MAX: f64 = 1e4;

/// `c_Lip = ¼ ∫₀^∞ exp{¼ ∫₀^s b₀(u) du} s ds` by adaptive Gauss–Legendre
/// panels. The inner integral is carried cumulatively from panel to panel;
/// the outer integral stops once the exponential tail bound past the
/// current point falls below `1e-10` of the running value.
pub fn lipschitz_constant<F: Fn(f64) -> f64>(b0: F) -> LipschitzConstant {
    let gl = GaussPanel::new(10);
    // Inner integral from s0 (where it equals inner0) to s.
    let inner_at = |s0: f64, inner0: f64, s: f64| inner0 + gl.integrate(s0, s, &b0);
    let outer_panel = |s0: f64, inner0: f64, s1: f64| {
        gl.mapped(s0, s1)
            .map(|(s, w)| w * (0.25 * inner_at(s0, inner0, s)).exp() * s)
            .sum::<f64>()
    };

    let mut s = 0.0;
    let mut inner = 0.0;
    let mut total = 0.0;
    let mut h = 0.25;
    let mut panels = 0usize;
    let mut prev_b0 = f64::INFINITY;
    let infinite = |s: f64, panels: usize| LipschitzConstant {
        value: f64::INFINITY,
        converged: false,
        truncated_at: s,
        panels,
    };

    while s < S_MAX {
        let whole = outer_panel(s, inner, s + h);
        let mid = s + 0.5 * h;
        let inner_mid = inner_at(s, inner, mid);
        let halves = outer_panel(s, inner, mid) + outer_panel(mid, inner_mid, s + h);
        let tol = 1e-13 * (total + halves).abs() + 1e-300;
        if (whole - halves).abs() > tol && h > 1e-6 {
            h *= 0.5;
            continue;
        }
        inner = inner_at(mid, inner_mid, s + h);
        s += h;
        total += 0.25 * halves;
        panels += 1;
        if !total.is_finite() || !inner.is_finite() {
            return infinite(s, panels);
        }

        let slope = b0(s);
        if slope < 0.0 && slope <= prev_b0 {
            let k = -0.25 * slope;
            let tail = 0.25 * (0.25 * inner).exp() * (s / k + 1.0 / (k * k));
            if tail < TAIL_REL_TOL * total {
                return LipschitzConstant {
                    value: total,
                    converged: true,
                    truncated_at: s,
                    panels,
                };
            }
        }
        prev_b0 = slope;
        if (whole - halves).abs() < 0.01 * tol {
            h = (h * 1.5).min(4.0);
        }
    }
    infinite(s, panels)
}
