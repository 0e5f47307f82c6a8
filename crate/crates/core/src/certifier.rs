//! Hypocoercive rate certification.
//!
//! Pipeline: constants `(C1, C2)` → `M` (or `M1`, `M2`) → coefficients
//! `(a, b, c, λ₀)` of the twisted inner product → positivity of
//! `T - Diag(λ₀, 0, λ₀, 0)` → rate `λ` and prefactor `C₀`.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_max, sym2_eigenvalues};
use crate::potentials::{ConstantsBundle, LyapunovPair, Provenance};
use crate::report::SCHEMA_VERSION;

/// Tolerance on the smallest eigenvalue of `S`.
pub const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Bounded `∇W`, Poincaré constant `κ`.
    Thm3,
    /// Log-Sobolev constant `C_LS`.
    Thm4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SingleM,
    #[serde(rename = "split_m_case1")]
    SplitMCase1,
    #[serde(rename = "split_m_case2")]
    SplitMCase2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundednessConstants {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub mode: Mode,
}

impl BoundednessConstants {
    pub fn new(c1: f64, c2: f64, k: f64, mode: Mode) -> Self {
        let m1 = 2.0 * c1;
        let m2 = 2.0 * c2 + 2.0 * k * k;
        Self {
            c1,
            c2,
            m: m1.max(m2),
            m1,
            m2,
            mode,
        }
    }
}

pub(crate) fn thm3_formula(_k: f64, k_prime: f64, k1: f64, k2: f64, d: usize) -> (f64, f64) {
    let d = d as f64;
    let c1 = 50.0 * k1 * k1;
    let c2 = 4.0 * k2 * k2
        + 25.0 * k1.powi(4) * d * d / 4.0
        + 25.0 * k_prime * k_prime * k1 * k1 / 2.0;
    (c1, c2)
}

pub(crate) fn single_m(c1: f64, c2: f64, k: f64) -> f64 {
    (2.0 * c1).max(2.0 * c2 + 2.0 * k * k)
}

/// `(C1, C2)` on the bounded interaction gradient route.
pub fn constants_thm3(k: f64, k_prime: f64, k1: f64, k2: f64, d: usize) -> Result<BoundednessConstants> {
    if !k_prime.is_finite() {
        return Err(Error::MissingConstant {
            constant: "K_prime".into(),
            remedy: "∇W unbounded: use mode thm4 and provide C_LS".into(),
        });
    }
    let (c1, c2) = thm3_formula(k, k_prime, k1, k2, d);
    Ok(BoundednessConstants::new(c1, c2, k, Mode::Thm3))
}

/// `(C1, C2)` on the log-Sobolev route.
pub fn constants_thm4(k: f64, k1: f64, k2: f64, c_ls: f64, d: usize) -> BoundednessConstants {
    let df = d as f64;
    let c1 = 50.0 * k1 * k1 * (1.0 + 4.0 * k * k * c_ls * c_ls);
    let c2 = 4.0 * k2 * k2
        + 25.0 * k1.powi(4) * df * df / 4.0
        + 50.0 * std::f64::consts::LN_2 * df * k * k * k1 * k1 * c_ls;
    BoundednessConstants::new(c1, c2, k, Mode::Thm4)
}

/// Coefficients of `((h, h)) = ‖h‖² + a‖∇ᵥh‖² + 2b⟨∇ᵥh, ∇ₓh⟩ + c‖∇ₓh‖²`
/// and the coercivity margin `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lambda0: f64,
}

/// `(1/(25M), 1/(200M²), 1/(800M³), 1/(440M²))`, with `M` clamped to `≥ 1`.
pub fn default_coefficients(m: f64) -> Coefficients {
    let m = m.max(1.0);
    Coefficients {
        a: 1.0 / (25.0 * m),
        b: 1.0 / (200.0 * m * m),
        c: 1.0 / (800.0 * m * m * m),
        lambda0: 1.0 / (440.0 * m * m),
    }
}

pub fn build_t(a: f64, b: f64, c: f64, m: f64) -> Matrix4<f64> {
    let s = m.sqrt();
    let e13 = -(a + b + c * s) / 2.0;
    let e14 = -b * s / 2.0;
    let e34 = -c * s / 2.0;
    Matrix4::new(
        1.0 + a - b * s, 0.0, e13, e14,
        0.0, a, 0.0, -b,
        e13, 0.0, b, e34,
        e14, -b, e34, c,
    )
}

/// The split-constant matrix with `-b√M1/2` in both `(1,4)` slots, which is
/// what the Cauchy–Schwarz step produces. With `M1 = M2 = M` it equals
/// [`build_t`] exactly.
pub fn build_tprime(a: f64, b: f64, c: f64, m1: f64, m2: f64) -> Matrix4<f64> {
    let (s1, s2) = (m1.sqrt(), m2.sqrt());
    let e13 = -(a + b + c * s2) / 2.0;
    let e14 = -b * s1 / 2.0;
    let e34 = -c * s1 / 2.0;
    Matrix4::new(
        1.0 + a - b * s2, 0.0, e13, e14,
        0.0, a, 0.0, -b,
        e13, 0.0, b, e34,
        e14, -b, e34, c,
    )
}

/// The split-constant matrix entry-for-entry as printed, with `-b√M2/2` at
/// `(1,4)` and `-b√M1/2` at `(4,1)`. Not symmetric.
pub fn build_tprime_display(a: f64, b: f64, c: f64, m1: f64, m2: f64) -> Matrix4<f64> {
    let mut t = build_tprime(a, b, c, m1, m2);
    t[(0, 3)] = -b * m2.sqrt() / 2.0;
    t
}

/// `(T + Tᵀ)/2`.
pub fn symmetrize(t: &Matrix4<f64>) -> Matrix4<f64> {
    (t + t.transpose()) * 0.5
}

/// Smallest eigenvalue of `S = T - Diag(λ₀, 0, λ₀, 0)`.
pub fn verify_coercivity(t: &Matrix4<f64>, lambda0: f64) -> f64 {
    let mut s = symmetrize(t);
    s[(0, 0)] -= lambda0;
    s[(2, 2)] -= lambda0;
    SymmetricEigen::new(s).eigenvalues.min()
}

/// `λ₀ min{1/(2a+1), κ/(2cκ+1)}`.
pub fn rate_lambda(lambda0: f64, a: f64, c: f64, kappa: f64) -> f64 {
    lambda0 * (1.0 / (2.0 * a + 1.0)).min(kappa / (2.0 * c * kappa + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

/// Equivalence constants between the twisted norm and `H¹(μ)`.
pub fn norm_equivalence(a: f64, b: f64, c: f64) -> Result<NormEquivalence> {
    if !(b * b < a * c) {
        return Err(Error::InvalidCertificate(format!(
            "b² = {:e} is not below ac = {:e}: the twisted form is degenerate",
            b * b,
            a * c
        )));
    }
    let (lo, hi) = sym2_eigenvalues(a, b, c);
    let c1 = lo.min(1.0).sqrt();
    let c2 = hi.max(1.0).sqrt();
    Ok(NormEquivalence { c1, c2, c0: c2 / c1 })
}

pub const CASE1_ALPHA: (u64, u64) = (3072, 25921);
pub const CASE1_BETA: (u64, u64) = (576, 25921);
pub const CASE1_GAMMA: (u64, u64) = (216, 25921);

fn ratio(q: (u64, u64)) -> f64 {
    q.0 as f64 / q.1 as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovedCoefficients {
    pub coefficients: Coefficients,
    pub variant: Variant,
    /// Whether the sufficient conditions held on the constructed values.
    pub conditions_hold: bool,
    pub diagnostic: Option<String>,
}

/// Coefficients for the split bound `M1‖∇²ₓᵥh‖² + M2‖∇ᵥh‖²`, giving a rate of
/// order `M2^{-1/2}`.
///
/// For `M1 > 1` the `a` and `c` printed alongside the `√M` scaling omit the
/// factor `b` of the equality system and violate the sufficient conditions;
/// here the same `(α', β', γ')` as in the unscaled solution are used with
/// the scaling of the `M1 ≤ 1` case.
pub fn improved_coefficients(m1: f64, m2: f64) -> ImprovedCoefficients {
    let m = m2.max(1.0);
    let q = m.powf(0.25);
    let (alpha, beta, gamma, variant) = if m1 <= 1.0 {
        (ratio(CASE1_ALPHA), ratio(CASE1_BETA), ratio(CASE1_GAMMA), Variant::SplitMCase1)
    } else {
        let beta = 1.0 / (16.0 * m1 * m1 / 3.0 + 1.0 + 3.0 / (8.0 * m1)).powi(2);
        (16.0 * m1 * m1 * beta / 3.0, beta, 3.0 * beta / (8.0 * m1), Variant::SplitMCase2)
    };
    let b = beta / (q * q);
    let coefficients = Coefficients {
        a: alpha / q,
        b,
        c: gamma / (q * q * q),
        lambda0: b / 4.0,
    };
    if split_conditions(&coefficients, m1, m2) {
        ImprovedCoefficients {
            coefficients,
            variant,
            conditions_hold: true,
            diagnostic: None,
        }
    } else {
        ImprovedCoefficients {
            coefficients: default_coefficients(1f64.max(m1).max(m2)),
            variant: Variant::SingleM,
            conditions_hold: false,
            diagnostic: Some(format!(
                "split conditions failed for M1 = {m1}, M2 = {m2}; fell back to single-M coefficients"
            )),
        }
    }
}

/// The sufficient conditions under which `T' - Diag(λ₀,0,λ₀,0) ≥ 0`,
/// checked to a relative rounding tolerance.
pub fn split_conditions(k: &Coefficients, m1: f64, m2: f64) -> bool {
    let Coefficients { a, b, c, lambda0 } = *k;
    let ge = |lhs: f64, rhs: f64| lhs >= rhs * (1.0 - 1e-12);
    let (s1, s2) = (m1.sqrt(), m2.sqrt());
    ge(0.25, b * s2)
        && (lambda0 - b / 4.0).abs() <= 1e-15 * b
        && lambda0 <= 0.25
        && ge(0.25 * b, ((a + b + c * s2) / 2.0).powi(2))
        && ge(a * c / 8.0, (b * s1 / 2.0).powi(2))
        && ge(a * c / 2.0, b * b)
        && ge(b / 4.0 * 3.0 * c / 8.0, (c * s1 / 2.0).powi(2))
}

/// Outcome of a numeric coefficient search, reported next to the literal
/// choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedCoefficients {
    pub coefficients: Coefficients,
    pub lambda: f64,
    pub psd_witness: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

/// Largest `λ₀` for which `T - Diag(λ₀,0,λ₀,0) ≥ 0`, by bisection.
fn max_lambda0(t: &Matrix4<f64>) -> f64 {
    if verify_coercivity(t, 0.0) < 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, t[(0, 0)].min(t[(2, 2)]).max(0.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if verify_coercivity(t, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Coordinate-wise golden search over `ln a, ln b, ln c` maximizing `λ`,
/// with `λ₀` set to the largest value keeping `S` positive semidefinite.
/// Starts from `start` and never returns a worse rate.
pub fn refine_coefficients<F>(start: &Coefficients, kappa: f64, build: F) -> RefinedCoefficients
where
    F: Fn(f64, f64, f64) -> Matrix4<f64>,
{
    let eval = |x: [f64; 3]| -> (f64, f64) {
        let (a, b, c) = (x[0].exp(), x[1].exp(), x[2].exp());
        if !(b * b < a * c) {
            return (0.0, 0.0);
        }
        let l0 = max_lambda0(&build(a, b, c));
        (rate_lambda(l0, a, c, kappa), l0)
    };
    let mut x = [start.a.ln(), start.b.ln(), start.c.ln()];
    let mut best = eval(x).0;
    for _ in 0..8 {
        let before = best;
        for i in 0..3 {
            let m = golden_max(
                |t| {
                    let mut y = x;
                    y[i] = t;
                    eval(y).0
                },
                x[i] - 3.0,
                x[i] + 3.0,
                1e-9,
            );
            if m.value > best {
                best = m.value;
                x[i] = m.arg;
            }
        }
        if best <= before * (1.0 + 1e-9) {
            break;
        }
    }
    let (a, b, c) = (x[0].exp(), x[1].exp(), x[2].exp());
    let lambda0 = eval(x).1 * (1.0 - 1e-9);
    let coefficients = Coefficients { a, b, c, lambda0 };
    let literal = rate_lambda(start.lambda0, start.a, start.c, kappa);
    let lambda = rate_lambda(lambda0, a, c, kappa);
    let witness = verify_coercivity(&build(a, b, c), lambda0);
    match norm_equivalence(a, b, c) {
        Ok(ne) if lambda > literal && witness >= -PSD_TOL => RefinedCoefficients {
            coefficients,
            lambda,
            psd_witness: witness,
            c0: ne.c0,
        },
        _ => RefinedCoefficients {
            coefficients: *start,
            lambda: literal,
            psd_witness: verify_coercivity(&build(start.a, start.b, start.c), start.lambda0),
            c0: norm_equivalence(start.a, start.b, start.c).map_or(f64::INFINITY, |n| n.c0),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub mode: Mode,
    /// Use the split `(M1, M2)` coefficients.
    pub split: bool,
    /// Also run the numeric coefficient search.
    pub refine: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Thm3,
            split: false,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: String,
    pub mode: Mode,
    pub variant: Variant,
    pub inputs: ConstantsBundle,
    /// The Lyapunov pair used, chosen jointly with the coefficients.
    pub lyapunov: LyapunovPair,
    pub boundedness: BoundednessConstants,
    pub coefficients: Coefficients,
    /// Row-major entries of `T` (or `T'`).
    pub t_matrix: [[f64; 4]; 4],
    pub psd_witness: f64,
    pub kappa_used: f64,
    pub lambda: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    /// `λ` of the single-`M` coefficients, reported next to a split result.
    pub lambda_single_m: Option<f64>,
    pub refined: Option<RefinedCoefficients>,
    /// Weakest provenance among the inputs that entered.
    pub provenance: Provenance,
    pub certified: bool,
    pub diagnostics: Vec<String>,
}

fn matrix_rows(t: &Matrix4<f64>) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = t[(i, j)];
        }
    }
    out
}

struct Attempt {
    pair: LyapunovPair,
    bc: BoundednessConstants,
    coefficients: Coefficients,
    variant: Variant,
    t: Matrix4<f64>,
    lambda: f64,
    lambda_single: f64,
    diagnostic: Option<String>,
}

fn attempt(bundle: &ConstantsBundle, opts: &CertifyOptions, pair: LyapunovPair, kappa: f64) -> Result<Attempt> {
    let bc = match opts.mode {
        Mode::Thm3 => constants_thm3(bundle.k, bundle.k_prime, pair.k1, pair.k2, bundle.d)?,
        Mode::Thm4 => constants_thm4(bundle.k, pair.k1, pair.k2, bundle.c_ls.unwrap_or(0.0), bundle.d),
    };
    let single = default_coefficients(bc.m);
    let lambda_single = rate_lambda(single.lambda0, single.a, single.c, kappa);
    if !opts.split {
        let t = build_t(single.a, single.b, single.c, bc.m.max(1.0));
        return Ok(Attempt {
            pair,
            bc,
            coefficients: single,
            variant: Variant::SingleM,
            t,
            lambda: lambda_single,
            lambda_single,
            diagnostic: None,
        });
    }
    let imp = improved_coefficients(bc.m1, bc.m2);
    let k = imp.coefficients;
    let t = if imp.variant == Variant::SingleM {
        build_t(k.a, k.b, k.c, bc.m.max(1.0))
    } else {
        build_tprime(k.a, k.b, k.c, bc.m1, bc.m2)
    };
    Ok(Attempt {
        pair,
        bc,
        coefficients: k,
        variant: imp.variant,
        t,
        lambda: rate_lambda(k.lambda0, k.a, k.c, kappa),
        lambda_single,
        diagnostic: imp.diagnostic,
    })
}

/// Runs the certification pipeline on a constants bundle.
///
/// The Lyapunov pair is re-selected from `bundle.lyapunov_candidates` to
/// maximize the resulting rate. The particle count enters nowhere.
pub fn certify(bundle: &ConstantsBundle, opts: &CertifyOptions) -> Result<Certificate> {
    bundle.validate()?;
    let prov = |key: &str| bundle.provenance_of(key).unwrap_or(Provenance::UserSupplied);

    let (kappa, mut provenance) = match opts.mode {
        Mode::Thm3 => {
            if !bundle.k_prime.is_finite() {
                return Err(Error::MissingConstant {
                    constant: "K_prime".into(),
                    remedy: "∇W unbounded: use mode thm4 and provide C_LS".into(),
                });
            }
            let Some(kappa) = bundle.kappa else {
                return Err(Error::MissingConstant {
                    constant: "kappa".into(),
                    remedy: "provide kappa, or derive it from Bakry-Emery curvature, the c_Lip route, or the convexity-at-infinity criterion".into(),
                });
            };
            (kappa, prov("K").weakest(prov("K_prime")).weakest(prov("kappa")))
        }
        Mode::Thm4 => {
            let Some(c_ls) = bundle.c_ls else {
                return Err(Error::MissingConstant {
                    constant: "C_LS".into(),
                    remedy: "provide C_LS, or derive it from Bakry-Emery curvature or the Zegarlinski-type criterion".into(),
                });
            };
            let from_ls = 1.0 / c_ls;
            match bundle.kappa {
                Some(k) if k > from_ls => (k, prov("K").weakest(prov("C_LS")).weakest(prov("kappa"))),
                _ => (from_ls, prov("K").weakest(prov("C_LS"))),
            }
        }
    };
    provenance = provenance.weakest(prov("K1")).weakest(prov("K2"));

    let mut candidates = bundle.lyapunov_candidates.clone();
    if candidates.is_empty() {
        candidates.push(LyapunovPair {
            k1: bundle.k1,
            k2: bundle.k2,
        });
    }
    let mut best: Option<Attempt> = None;
    for pair in candidates {
        let a = attempt(bundle, opts, pair, kappa)?;
        if best.as_ref().is_none_or(|b| a.lambda > b.lambda) {
            best = Some(a);
        }
    }
    let best = best.expect("at least one candidate");

    let mut diagnostics = Vec::new();
    if let Some(d) = &best.diagnostic {
        diagnostics.push(d.clone());
    }
    let k = best.coefficients;
    let psd_witness = verify_coercivity(&best.t, k.lambda0);
    let ne = norm_equivalence(k.a, k.b, k.c);
    let (c1, c2, c0) = match &ne {
        Ok(n) => (n.c1, n.c2, n.c0),
        Err(e) => {
            diagnostics.push(e.to_string());
            (0.0, 1.0, f64::INFINITY)
        }
    };
    if psd_witness < -PSD_TOL {
        diagnostics.push(format!("coercivity matrix not PSD: min eigenvalue {psd_witness:e}"));
    }
    if !provenance.certifying() {
        diagnostics.push("an input is a numeric estimate; result is not certifying".into());
    }
    let positive = [k.a, k.b, k.c, k.lambda0, best.lambda, c0]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
    let certified = positive
        && ne.is_ok()
        && psd_witness >= -PSD_TOL
        && best.lambda <= k.lambda0
        && provenance.certifying();

    let refined = opts.refine.then(|| {
        let (m, m1, m2, variant) = (best.bc.m.max(1.0), best.bc.m1, best.bc.m2, best.variant);
        if variant == Variant::SingleM {
            refine_coefficients(&k, kappa, |a, b, c| build_t(a, b, c, m))
        } else {
            refine_coefficients(&k, kappa, |a, b, c| build_tprime(a, b, c, m1, m2))
        }
    });

    let mut inputs = bundle.clone();
    inputs.k1 = best.pair.k1;
    inputs.k2 = best.pair.k2;
    Ok(Certificate {
        schema_version: SCHEMA_VERSION.into(),
        mode: opts.mode,
        variant: best.variant,
        inputs,
        lyapunov: best.pair,
        boundedness: best.bc,
        coefficients: k,
        t_matrix: matrix_rows(&best.t),
        psd_witness,
        kappa_used: kappa,
        lambda: best.lambda,
        c1,
        c2,
        c0,
        lambda_single_m: opts.split.then_some(best.lambda_single),
        refined,
        provenance,
        certified,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::jacobi_eigenvalues;
    use nalgebra::DMatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn thm3_constants_arithmetic() {
        let bc = constants_thm3(0.0, 1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!((bc.c1, bc.c2), (50.0, 22.75));
        let z = constants_thm3(0.3, 2.0, 0.0, 1.5, 3).unwrap();
        assert_eq!((z.c1, z.c2), (0.0, 9.0));
        let d1 = constants_thm3(0.0, 0.0, 0.7, 0.0, 1).unwrap();
        let d2 = constants_thm3(0.0, 0.0, 0.7, 0.0, 2).unwrap();
        assert_eq!(d2.c2, 4.0 * d1.c2);
        assert!(matches!(
            constants_thm3(1.0, f64::INFINITY, 1.0, 1.0, 1),
            Err(Error::MissingConstant { .. })
        ));
    }

    #[test]
    fn thm4_constants_arithmetic() {
        let bc = constants_thm4(1.0, 1.0, 0.0, 1.0, 1);
        assert_eq!(bc.c1, 250.0);
        assert!(close(bc.c2, 6.25 + 50.0 * 2f64.ln(), 1e-14));
        assert!((bc.c2 - 40.9074).abs() < 1e-4);
        let t4 = constants_thm4(0.0, 0.8, 1.3, 2.0, 2);
        let t3 = constants_thm3(0.0, 0.0, 0.8, 1.3, 2).unwrap();
        assert_eq!(t4.c1, t3.c1);
        assert!(close(t4.c2, t3.c2, 1e-15));
        let tiny = constants_thm4(1.0, 1.0, 0.0, 1e-12, 1);
        assert!(close(tiny.c1, 50.0, 1e-12));
    }

    #[test]
    fn m_constants_follow_definition() {
        let bc = BoundednessConstants::new(3.0, 1.0, 2.0, Mode::Thm3);
        assert_eq!(bc.m1, 6.0);
        assert_eq!(bc.m2, 10.0);
        assert_eq!(bc.m, 10.0);
    }

    #[test]
    fn default_coefficients_values() {
        let k = default_coefficients(1.0);
        assert_eq!((k.a, k.b, k.c, k.lambda0), (1.0 / 25.0, 1.0 / 200.0, 1.0 / 800.0, 1.0 / 440.0));
        let k = default_coefficients(10.0);
        assert!(close(k.a, 0.004, 1e-15));
        assert!(close(k.b, 5e-5, 1e-15));
        assert!(close(k.c, 1.25e-6, 1e-15));
        assert!(close(k.lambda0, 1.0 / 44000.0, 1e-15));
        assert_eq!(default_coefficients(0.5), default_coefficients(1.0));
    }

    #[test]
    fn t_matrix_entries() {
        let k = default_coefficients(1.0);
        let t = build_t(k.a, k.b, k.c, 1.0);
        assert!(close(t[(0, 0)], 1.035, 1e-15));
        assert_eq!(t, t.transpose());
        let psd = verify_coercivity(&t, k.lambda0);
        assert!(psd >= -PSD_TOL);
        let dense = DMatrix::from_fn(4, 4, |i, j| {
            t[(i, j)] - if i == j && (i == 0 || i == 2) { k.lambda0 } else { 0.0 }
        });
        assert!((jacobi_eigenvalues(&dense)[0] - psd).abs() < 1e-14);
    }

    #[test]
    fn no_mixed_term_means_no_coercivity() {
        let t = build_t(1.0, 0.0, 0.0, 1.0);
        assert!(verify_coercivity(&t, 1.0 / 440.0) < 0.0);
    }

    #[test]
    fn zero_matrix_witness() {
        assert_eq!(verify_coercivity(&Matrix4::zeros(), 0.0), 0.0);
    }

    #[test]
    fn tprime_reduces_to_t() {
        let (a, b, c) = (0.03, 0.004, 0.001);
        for m in [1.0, 7.0, 123.0] {
            assert_eq!(build_tprime(a, b, c, m, m), build_t(a, b, c, m));
            let disp = build_tprime_display(a, b, c, m, m);
            assert_eq!(symmetrize(&disp), build_t(a, b, c, m));
        }
        let disp = build_tprime_display(a, b, c, 2.0, 9.0);
        assert_ne!(disp, disp.transpose());
    }

    #[test]
    fn rate_formula() {
        let k = default_coefficients(1.0);
        let lam = rate_lambda(k.lambda0, k.a, k.c, 1.0);
        assert!((lam - 25.0 / 27.0 / 440.0).abs() < 1e-15);
        assert!((lam - 2.1044e-3).abs() < 1e-7);
        assert_eq!(rate_lambda(0.5, 0.0, 0.0, 0.3), 0.15);
        assert_eq!(rate_lambda(0.5, 0.0, 0.0, 3.0), 0.5);
        let big = rate_lambda(k.lambda0, k.a, k.c, 1e12);
        assert!(close(big, k.lambda0 / (2.0 * k.a + 1.0), 1e-12));
    }

    #[test]
    fn norm_equivalence_examples() {
        let k = default_coefficients(1.0);
        let ne = norm_equivalence(k.a, k.b, k.c).unwrap();
        let (lo, hi) = sym2_eigenvalues(0.04, 0.005, 0.00125);
        assert!((lo - 6.16e-4).abs() < 1e-6);
        assert!((hi - 4.06e-2).abs() < 1e-4);
        assert!((ne.c1 - 0.0248).abs() < 1e-4);
        assert_eq!(ne.c2, 1.0);
        assert!((ne.c0 - 40.3).abs() < 0.1);
        let diag = norm_equivalence(0.5, 0.0, 2.0).unwrap();
        assert_eq!((diag.c1, diag.c2), (0.5f64.sqrt(), 2f64.sqrt()));
        assert_eq!(norm_equivalence(1.0, 0.0, 1.0).unwrap().c0, 1.0);
        assert!(norm_equivalence(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn case1_rationals_are_exact() {
        let (a, b, g, den) = (CASE1_ALPHA.0, CASE1_BETA.0, CASE1_GAMMA.0, CASE1_BETA.1);
        assert_eq!(CASE1_ALPHA.1, den);
        assert_eq!(CASE1_GAMMA.1, den);
        // β = (α+β+γ)² over the common denominator 25921 = 161².
        assert_eq!(a + b + g, 3864);
        assert_eq!(3864u64 * 3864, 14_930_496);
        assert_eq!(3864u64 * 3864, b * den);
        assert_eq!(a * g, 2 * b * b);
        assert_eq!(8 * g, 3 * b);
        assert_eq!(3 * a, 16 * b);
    }

    #[test]
    fn case1_coefficients() {
        for m2 in [0.5, 10.0, 1e4] {
            let imp = improved_coefficients(0.5, m2);
            assert_eq!(imp.variant, Variant::SplitMCase1);
            assert!(imp.conditions_hold);
            let m = m2.max(1.0);
            let k = imp.coefficients;
            assert!(close(k.lambda0, 144.0 / (25921.0 * m.sqrt()), 1e-14));
            let t = build_tprime(k.a, k.b, k.c, 0.5, m2);
            assert!(verify_coercivity(&t, k.lambda0) >= -PSD_TOL);
        }
    }

    #[test]
    fn case2_coefficients_satisfy_conditions() {
        for m1 in [1.5, 4.0, 30.0] {
            for m2 in [1.0, 100.0, 1e6] {
                let imp = improved_coefficients(m1, m2);
                assert_eq!(imp.variant, Variant::SplitMCase2, "{m1} {m2}");
                let k = imp.coefficients;
                let t = build_tprime(k.a, k.b, k.c, m1, m2);
                assert!(verify_coercivity(&t, k.lambda0) >= -PSD_TOL);
                assert!(k.b * k.b < k.a * k.c);
            }
        }
    }

    #[test]
    fn printed_case2_coefficients_violate_conditions() {
        let (m1, m2) = (2.0f64, 100.0f64);
        let m = m2.max(1.0);
        let b = 1.0 / ((16.0 * m1 * m1 / 3.0 + 1.0 + 3.0 / (8.0 * m1)).powi(2) * m.sqrt());
        let printed = Coefficients {
            a: 16.0 * m1 * m1 / (3.0 * m.powf(0.25)),
            b,
            c: 3.0 / (8.0 * m1 * m.powf(0.75)),
            lambda0: b / 4.0,
        };
        assert!(!split_conditions(&printed, m1, m2));
    }

    #[test]
    fn split_rate_scaling_and_gain() {
        let xs: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|m: &f64| m.ln()).collect();
        let ys: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|&m2| {
                let k = improved_coefficients(1.0, m2).coefficients;
                rate_lambda(k.lambda0, k.a, k.c, 1.0).ln()
            })
            .collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((-0.55..=-0.45).contains(&slope), "{slope}");
        for e in 1..=6 {
            let m2 = 10f64.powi(e);
            let split = improved_coefficients(1.0, m2).coefficients;
            let single = default_coefficients(m2);
            assert!(
                rate_lambda(split.lambda0, split.a, split.c, 1.0)
                    >= rate_lambda(single.lambda0, single.a, single.c, 1.0)
            );
        }
    }

    #[test]
    fn refinement_improves_and_stays_psd() {
        let k = default_coefficients(1.0);
        let r = refine_coefficients(&k, 1.0, |a, b, c| build_t(a, b, c, 1.0));
        assert!(r.lambda >= rate_lambda(k.lambda0, k.a, k.c, 1.0));
        assert!(r.psd_witness >= -PSD_TOL);
        let c = r.coefficients;
        assert!(c.b * c.b < c.a * c.c);
        assert!(verify_coercivity(&build_t(c.a, c.b, c.c, 1.0), c.lambda0) >= -PSD_TOL);
    }

    fn bundle(k: f64, kp: f64) -> ConstantsBundle {
        ConstantsBundle::from_values(k, kp, 0.0, 1.0, 1).unwrap()
    }

    #[test]
    fn certify_thm3() {
        let mut b = bundle(0.1, 0.1 * (-0.5f64).exp());
        b.set_kappa(0.9, Provenance::Analytic).unwrap();
        let cert = certify(&b, &CertifyOptions::default()).unwrap();
        assert!(cert.certified, "{:?}", cert.diagnostics);
        assert!(cert.lambda > 0.0 && cert.lambda <= cert.coefficients.lambda0);
        assert_eq!(cert.schema_version, SCHEMA_VERSION);
        let json = serde_json::to_value(&cert).unwrap();
        assert!(json["t_matrix"][0][0].is_f64());
        let back: Certificate = serde_json::from_value(json).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn certify_rejections() {
        let mut b = bundle(0.1, f64::INFINITY);
        b.set_kappa(1.0, Provenance::Analytic).unwrap();
        let e = certify(&b, &CertifyOptions::default()).unwrap_err();
        assert!(matches!(e, Error::MissingConstant { ref constant, .. } if constant == "K_prime"));
        let thm4 = CertifyOptions {
            mode: Mode::Thm4,
            ..Default::default()
        };
        assert!(matches!(certify(&b, &thm4), Err(Error::MissingConstant { ref constant, .. }) if constant == "C_LS"));
        b.set_c_ls(1.0 / 0.9, Provenance::Analytic).unwrap();
        assert!(certify(&b, &thm4).unwrap().certified);
        let none = bundle(0.1, 0.1);
        assert!(matches!(
            certify(&none, &CertifyOptions::default()),
            Err(Error::MissingConstant { ref constant, .. }) if constant == "kappa"
        ));
    }

    #[test]
    fn numeric_estimates_do_not_certify() {
        let mut b = bundle(0.1, 0.1);
        b.set_kappa(0.5, Provenance::NumericEstimate).unwrap();
        let cert = certify(&b, &CertifyOptions::default()).unwrap();
        assert!(!cert.certified);
        assert!(cert.lambda > 0.0);
    }

    #[test]
    fn split_mode_reports_both_rates() {
        let mut b = ConstantsBundle::from_values(0.0, 0.0, 0.01, 30.0, 1).unwrap();
        b.set_kappa(1.0, Provenance::Analytic).unwrap();
        let opts = CertifyOptions {
            split: true,
            refine: true,
            ..Default::default()
        };
        let cert = certify(&b, &opts).unwrap();
        assert_eq!(cert.variant, Variant::SplitMCase1);
        assert!(cert.certified);
        assert!(cert.lambda >= cert.lambda_single_m.unwrap());
        let r = cert.refined.unwrap();
        assert!(r.lambda >= cert.lambda);
    }
}
