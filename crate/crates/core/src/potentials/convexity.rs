//! Fit of the convexity-at-infinity triple `(cU, c, R)`:
//!
//! ```text
//! ⟨∇U(x) - ∇U(y), x - y⟩ ≥ cU |x-y|² - c |x-y| 1{|x-y| ≤ R}
//! ```
//!
//! Dividing by `r = |x - y|`, the triple is feasible iff
//! `b_U(r) + cU r ≤ c 1{r ≤ R}` for all `r`, where `b_U` is the confinement
//! part of the dissipativity rate. So for a given `cU` the smallest `c` is
//! `sup_r (b_U(r) + cU r)⁺` and the smallest `R` is the last zero crossing.

use serde::{Deserialize, Serialize};

use super::{confinement_dissipativity, PotentialSpec, Provenance, Role};
use crate::error::Result;
use crate::numerics::{golden_max, grid_max};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityFit {
    #[serde(rename = "cU")]
    pub c_u: f64,
    pub c: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// `(cU - K) e^{-cR/4} - 2K` for the interaction bound `K` in use.
    pub upi_slack: f64,
    /// Random-pair re-verification outcome.
    pub verified: bool,
    pub max_violation: f64,
    pub provenance: Provenance,
}

fn upi_slack(c_u: f64, c: f64, r: f64, k: f64) -> f64 {
    (c_u - k) * (-c * r / 4.0).exp() - 2.0 * k
}

/// Smallest `(c, R)` for a given `cU`, or `None` when `b_U(r) + cU r`
/// stays positive out to the search limit.
fn fit_for(u: &PotentialSpec, c_u: f64) -> Option<(f64, f64)> {
    let excess = |r: f64| confinement_dissipativity(u, r).value + c_u * r;
    let mut hi = 50.0 * u.length_scale();
    let mut ok = false;
    for _ in 0..40 {
        if excess(hi) <= 0.0 && excess(2.0 * hi) <= excess(hi) {
            ok = true;
            break;
        }
        hi *= 2.0;
    }
    if !ok {
        return None;
    }
    let m = grid_max(|r| excess(r).max(0.0), 0.0, hi, 2001);
    let c = m.value.max(0.0);
    if c == 0.0 {
        return Some((0.0, 0.0));
    }
    // Last positive grid point, then bisection on the crossing.
    let n = 2001;
    let step = hi / (n - 1) as f64;
    let last = (0..n).rev().find(|&i| excess(step * i as f64) > 0.0)?;
    let (mut a, mut b) = (step * last as f64, step * (last + 1) as f64);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if excess(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some((c, b))
}

/// Finds a feasible `(cU, c, R)`, choosing `cU` to maximize the uniform
/// Poincaré criterion slack against `K = sup |∇²W|_op`.
///
/// Returns `None` if no feasible triple exists on the search range.
pub fn convexity_at_infinity_fit(u: &PotentialSpec, w: &PotentialSpec) -> Result<Option<ConvexityFit>> {
    u.check_role(Role::Confinement)?;
    w.check_role(Role::Interaction)?;
    let k = w.hessian_bound();
    let floor = u.asymptotic_hessian_floor();

    let best = if floor.is_finite() {
        // The asymptotic Hessian floor is the largest admissible cU.
        fit_for(u, floor).map(|(c, r)| (floor, c, r))
    } else {
        let scale = 1.0 / (u.length_scale() * u.length_scale());
        let objective = |log_cu: f64| {
            let c_u = log_cu.exp();
            match fit_for(u, c_u) {
                Some((c, r)) => upi_slack(c_u, c, r, k),
                None => f64::NEG_INFINITY,
            }
        };
        let lo = (1e-3 * scale).ln();
        let hi = (1e3 * scale).ln();
        let n = 121;
        let step = (hi - lo) / (n - 1) as f64;
        let (mut bi, mut bv) = (0usize, f64::NEG_INFINITY);
        for i in 0..n {
            let v = objective(lo + step * i as f64);
            if v > bv {
                bv = v;
                bi = i;
            }
        }
        if bv == f64::NEG_INFINITY {
            None
        } else {
            let a = lo + step * bi.saturating_sub(1) as f64;
            let b = lo + step * (bi + 1).min(n - 1) as f64;
            let m = golden_max(objective, a, b, 1e-10);
            let c_u = if m.value >= bv { m.arg.exp() } else { (lo + step * bi as f64).exp() };
            fit_for(u, c_u).map(|(c, r)| (c_u, c, r))
        }
    };

    let Some((c_u, c, r)) = best else {
        return Ok(None);
    };
    let (verified, max_violation) = verify_convexity_pairs(u, c_u, c, r, 10_000, 0x5eed);
    Ok(Some(ConvexityFit {
        c_u,
        c,
        r,
        upi_slack: upi_slack(c_u, c, r, k),
        verified,
        max_violation,
        provenance: Provenance::RefinedSupremum,
    }))
}

/// Checks the convexity-at-infinity inequality on `n` random pairs.
/// Returns `(all_hold, worst_violation)`.
pub fn verify_convexity_pairs(
    u: &PotentialSpec,
    c_u: f64,
    c: f64,
    r: f64,
    n: usize,
    seed: u64,
) -> (bool, f64) {
    let d = u.dim;
    let mut s = Stream::new(seed, 0xc0_4e);
    let reach = 3.0 * u.length_scale() + r;
    let mut gx = vec![0.0; d];
    let mut gy = vec![0.0; d];
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| s.uniform_in(-reach, reach)).collect();
        let y: Vec<f64> = (0..d).map(|_| s.uniform_in(-reach, reach)).collect();
        u.gradient_into(&x, &mut gx);
        u.gradient_into(&y, &mut gy);
        let dist2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let dist = dist2.sqrt();
        let lhs: f64 = (0..d).map(|k| (gx[k] - gy[k]) * (x[k] - y[k])).sum();
        let rhs = c_u * dist2 - if dist <= r { c * dist } else { 0.0 };
        let tol = 1e-9 * (1.0 + lhs.abs() + rhs.abs());
        worst = worst.max(rhs - lhs - tol);
    }
    (worst <= 0.0, worst.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::BumpSign;

    #[test]
    fn quadratic_is_globally_convex() {
        let u = PotentialSpec::quadratic(1.5, 2).unwrap();
        let fit = convexity_at_infinity_fit(&u, &PotentialSpec::zero(2))
            .unwrap()
            .unwrap();
        assert_eq!((fit.c_u, fit.c, fit.r), (1.5, 0.0, 0.0));
        assert!(fit.verified);
        assert_eq!(fit.upi_slack, 1.5);
    }

    #[test]
    fn double_well_triple_is_feasible() {
        let u = PotentialSpec::double_well(0.25, 0.5, 1).unwrap();
        let w = PotentialSpec::bump(0.02, 1.0, BumpSign::Attractive, 1).unwrap();
        let fit = convexity_at_infinity_fit(&u, &w).unwrap().unwrap();
        assert!(fit.verified, "{fit:?}");
        assert!(fit.c > 0.0 && fit.r > 0.0);
        // b_U(r) = r - r³/4 here, so c and R have closed forms in s = 1 + cU.
        let s = 1.0 + fit.c_u;
        assert!((fit.r - 2.0 * s.sqrt()).abs() < 1e-9);
        let c_exact = 4.0 / 3.0 * s * (s / 3.0).sqrt();
        assert!((fit.c - c_exact).abs() < 1e-9 * c_exact);
        assert!(fit.upi_slack > 0.0);
    }

    #[test]
    fn infeasible_triple_is_detected() {
        let u = PotentialSpec::double_well(0.25, 0.5, 1).unwrap();
        // c too small for this cU
        let (ok, worst) = verify_convexity_pairs(&u, 1.0, 0.1, 3.0, 10_000, 1);
        assert!(!ok && worst > 0.0);
    }
}
