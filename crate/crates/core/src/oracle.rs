//! Ground-truth checks of the inequalities behind the certificate on small
//! instances: one-dimensional grids and two particles on the line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcineq::GridMeasure;
use crate::meanfield::ModelConfig;
use crate::potentials::PotentialSpec;
use crate::rng::Stream;

const REL_TOL: f64 = 1e-8;
pub const FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum TestFamily {
    /// `exp(-(x - center)² / 2 width²)`
    GaussianBumpFn { center: f64, width: f64 },
    /// `Σ cₖ xᵏ`
    PolynomialFn { coefficients: Vec<f64> },
    /// `1 / (1 + exp(-(x - center) / scale))`
    LogisticFn { center: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Purpose {
    #[serde(rename = "S_positive")]
    SPositive,
    #[serde(rename = "g_generic")]
    GGeneric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    #[serde(flatten)]
    pub family: TestFamily,
    pub purpose: Purpose,
}

impl TestFunctionSpec {
    pub fn new(family: TestFamily, purpose: Purpose) -> Self {
        Self { family, purpose }
    }

    /// Value and first two derivatives at `x`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        match &self.family {
            TestFamily::GaussianBumpFn { center, width } => {
                let u = (x - center) / width;
                let f = (-0.5 * u * u).exp();
                (f, -u / width * f, (u * u - 1.0) / (width * width) * f)
            }
            TestFamily::PolynomialFn { coefficients } => {
                let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coefficients.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + f;
                    f = f * x + c;
                }
                (f, d1, d2)
            }
            TestFamily::LogisticFn { center, scale } => {
                let f = 1.0 / (1.0 + (-(x - center) / scale).exp());
                let d1 = f * (1.0 - f) / scale;
                (f, d1, d1 * (1.0 - 2.0 * f) / scale)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.jet(x).1
    }

    /// A random member of a random family. Positive-purpose polynomials
    /// are quadratics without real roots.
    pub fn random(purpose: Purpose, s: &mut Stream) -> Self {
        let pick = (s.uniform() * 3.0) as usize;
        let family = match pick {
            0 => TestFamily::GaussianBumpFn {
                center: s.uniform_in(-1.5, 1.5),
                width: s.uniform_in(0.5, 2.0),
            },
            1 => match purpose {
                Purpose::SPositive => {
                    let a2 = s.uniform_in(0.1, 1.0);
                    let a0 = s.uniform_in(0.2, 2.0);
                    let lim = 2.0 * (a0 * a2).sqrt();
                    TestFamily::PolynomialFn {
                        coefficients: vec![a0, s.uniform_in(-0.9 * lim, 0.9 * lim), a2],
                    }
                }
                Purpose::GGeneric => TestFamily::PolynomialFn {
                    coefficients: (0..4).map(|_| s.uniform_in(-1.0, 1.0)).collect(),
                },
            },
            _ => TestFamily::LogisticFn {
                center: s.uniform_in(-1.5, 1.5),
                scale: s.uniform_in(0.3, 2.0),
            },
        };
        Self { family, purpose }
    }
}

/// `φ(x₁) ψ(x₂)` on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductFunction(pub TestFunctionSpec, pub TestFunctionSpec);

impl ProductFunction {
    pub fn random(purpose: Purpose, s: &mut Stream) -> Self {
        Self(TestFunctionSpec::random(purpose, s), TestFunctionSpec::random(purpose, s))
    }

    /// Value and gradient.
    pub fn eval(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let (a, da, _) = self.0.jet(x[0]);
        let (b, db, _) = self.1.jet(x[1]);
        (a * b, [da * b, a * db])
    }
}

/// Both sides of a verified inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Check {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            pass: lhs <= rhs + REL_TOL * (1.0 + rhs.abs()),
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// `∫ -(𝓗S/S) g² dm ≤ ∫ |∇g|² dm` with the grid's reversible generator.
pub fn verify_lyapunov_lemma(measure: &GridMeasure, s: &TestFunctionSpec, g: &TestFunctionSpec) -> Result<Check> {
    if measure.dims != 1 {
        return Err(Error::InvalidArgument("lyapunov lemma check needs a 1D grid".into()));
    }
    let sv = measure.tabulate(|x| s.value(x[0]));
    if let Some(k) = sv.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "S must be positive on the grid, S({}) = {}",
            measure.nodes[k], sv[k]
        )));
    }
    let gv = measure.tabulate(|x| g.value(x[0]));
    let mut hs = vec![0.0; sv.len()];
    measure.generator_apply(&sv, &mut hs);
    let lhs: f64 = (0..sv.len())
        .map(|k| measure.weights[k] * (-hs[k] / sv[k]) * gv[k] * gv[k])
        .sum();
    Ok(Check::new(lhs, measure.dirichlet_form(&gv, &gv)))
}

/// Weighted second moment of the pair distance against the entropy-type
/// bound, for two particles on the line:
///
/// ```text
/// ∫ |x₁-x₂|² g² dm ≤ (2C/τ) ∫ |∇g|² dm + (d ln(1/(1-4τC)) / 2τ) ∫ g² dm
/// ```
pub fn verify_moment_bound(measure: &GridMeasure, c_ls: f64, tau: f64, g: &ProductFunction) -> Result<Check> {
    if measure.dims != 2 {
        return Err(Error::InvalidArgument("moment bound check needs a 2D grid".into()));
    }
    if !(c_ls > 0.0 && c_ls.is_finite()) {
        return Err(Error::InvalidArgument(format!("C_LS must be positive, got {c_ls}")));
    }
    if !(tau > 0.0 && tau < 1.0 / (4.0 * c_ls)) {
        return Err(Error::InvalidArgument(format!(
            "tau must lie in (0, 1/(4 C_LS)) = (0, {}), got {tau}",
            1.0 / (4.0 * c_ls)
        )));
    }
    let d = 1.0;
    let (mut lhs, mut grad, mut mass) = (0.0, 0.0, 0.0);
    for k in 0..measure.len() {
        let x = measure.point(k);
        let (v, dv) = g.eval(&x);
        let w = measure.weights[k];
        lhs += w * (x[0] - x[1]).powi(2) * v * v;
        grad += w * (dv[0] * dv[0] + dv[1] * dv[1]);
        mass += w * v * v;
    }
    let rhs = 2.0 * c_ls / tau * grad + d * (1.0 / (1.0 - 4.0 * tau * c_ls)).ln() / (2.0 * tau) * mass;
    Ok(Check::new(lhs, rhs))
}

/// `∫ |∇²V ∇ᵥh|² dμ ≤ M₁ ∫ |∇²ₓᵥh|² dμ + M₂ ∫ |∇ᵥh|² dμ` for
/// `h(x, v) = φ(x) ⟨ψ, v⟩`, where the velocity integrals are trivial.
pub fn verify_boundedness_condition(
    model: &ModelConfig,
    measure: &GridMeasure,
    m1: f64,
    m2: f64,
    phi: &ProductFunction,
    psi: [f64; 2],
) -> Result<Check> {
    if model.size() != 2 || measure.dims != 2 {
        return Err(Error::InvalidArgument(
            "boundedness check needs two particles on the line".into(),
        ));
    }
    let psi2 = psi[0] * psi[0] + psi[1] * psi[1];
    let (mut lhs, mut mixed, mut plain) = (0.0, 0.0, 0.0);
    for k in 0..measure.len() {
        let x = measure.point(k);
        let h = model.hessian_blocks(&x)?.total();
        let (f, df) = phi.eval(&x);
        let w = measure.weights[k];
        let hp0 = h[(0, 0)] * psi[0] + h[(0, 1)] * psi[1];
        let hp1 = h[(1, 0)] * psi[0] + h[(1, 1)] * psi[1];
        lhs += w * f * f * (hp0 * hp0 + hp1 * hp1);
        mixed += w * (df[0] * df[0] + df[1] * df[1]) * psi2;
        plain += w * f * f * psi2;
    }
    let rhs = m1 * mixed + m2 * plain;
    Ok(Check {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + REL_TOL),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdEntry {
    pub label: String,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
    pub pass: bool,
}

/// Error of `approx` relative to `exact`, floored at unit scale.
fn scaled_error(approx: f64, exact: f64, scale: f64) -> f64 {
    (approx - exact).abs() / scale.max(1.0)
}

/// Central-difference checks of gradients and Hessians at random points.
pub fn fd_derivative_suite(specs: &[PotentialSpec], points: usize, seed: u64) -> Result<FdReport> {
    let mut s = Stream::new(seed, 0xFD);
    let mut entries = Vec::with_capacity(specs.len());
    for spec in specs {
        let dim = spec.dim;
        let (mut eg, mut eh) = (0.0f64, 0.0f64);
        for _ in 0..points {
            let x: Vec<f64> = (0..dim).map(|_| s.uniform_in(-3.0, 3.0)).collect();
            let e = spec.eval(&x)?;
            let h = 1e-5 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
            for k in 0..dim {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[k] += h;
                xm[k] -= h;
                let fd = (spec.value(&xp) - spec.value(&xm)) / (2.0 * h);
                eg = eg.max(scaled_error(fd, e.gradient[k], e.gradient.amax()));
                let (gp, gm) = (spec.eval(&xp)?.gradient, spec.eval(&xm)?.gradient);
                for j in 0..dim {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    eh = eh.max(scaled_error(fd, e.hessian[(j, k)], e.hessian.amax()));
                }
            }
        }
        entries.push(FdEntry {
            label: format!("{:?} d={dim}", spec.family),
            max_gradient_error: eg,
            max_hessian_error: eh,
            pass: eg < FD_TOL && eh < FD_TOL,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(FdReport { entries, pass })
}

/// Largest scaled deviation of the force from `-∇V` by central differences.
pub fn fd_force_error(model: &ModelConfig, configs: usize, seed: u64) -> Result<f64> {
    let mut s = Stream::new(seed, 0xF0);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let x: Vec<f64> = (0..model.size()).map(|_| s.uniform_in(-2.0, 2.0)).collect();
        let f = model.force(&x)?;
        let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let h = 1e-5;
        for k in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let fd = -(model.total_potential(&xp)? - model.total_potential(&xm)?) / (2.0 * h);
            worst = worst.max(scaled_error(fd, f[k], scale));
        }
    }
    Ok(worst)
}

/// Ratio `(I(n) - I(2n)) / (I(2n) - I(4n))` of a grid functional under
/// refinement at fixed half-width; near 4 for second-order convergence.
pub fn refinement_ratio<F: Fn(&GridMeasure) -> Result<f64>>(
    v: impl Fn(&[f64]) -> f64,
    dims: usize,
    half_width: f64,
    n: usize,
    functional: F,
) -> Result<f64> {
    let i1 = functional(&GridMeasure::new(&v, dims, half_width, n)?)?;
    let i2 = functional(&GridMeasure::new(&v, dims, half_width, 2 * n)?)?;
    let i4 = functional(&GridMeasure::new(&v, dims, half_width, 4 * n)?)?;
    Ok((i1 - i2) / (i2 - i4))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult<T> {
    pub case: T,
    pub check: Check,
}

/// The battery reported under `oracle_suite`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSuite {
    pub lyapunov_lemma: Vec<CaseResult<(TestFunctionSpec, TestFunctionSpec)>>,
    pub moment_bound: Vec<CaseResult<ProductFunction>>,
    pub moment_bound_tau: Option<f64>,
    pub boundedness: Vec<CaseResult<(ProductFunction, [f64; 2])>>,
    pub fd: FdReport,
    pub force_fd_error: f64,
    pub diagnostics: Vec<String>,
    pub pass: bool,
}

/// Sizes of the random batteries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSizes {
    pub lyapunov: usize,
    pub moment: usize,
    pub boundedness: usize,
    pub grid_1d: usize,
    pub grid_2d: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            lyapunov: 20,
            moment: 10,
            boundedness: 10,
            grid_1d: 800,
            grid_2d: 160,
        }
    }
}

/// Runs every check on `model`, which must be two particles on the line.
/// The one-dimensional checks use the confinement alone as potential. The
/// moment bound runs at `τ = 1/(8 C_LS)` when `c_ls` is known; the
/// boundedness condition uses `(m1, m2)` when given.
pub fn run_oracle_suite(
    model: &ModelConfig,
    c_ls: Option<f64>,
    m: Option<(f64, f64)>,
    sizes: SuiteSizes,
    seed: u64,
) -> Result<OracleSuite> {
    if model.particles != 2 || model.dim() != 1 {
        return Err(Error::InvalidArgument(
            "the oracle suite runs on two particles in one dimension".into(),
        ));
    }
    let mut s = Stream::new(seed, 0x0AC1E);
    let mut diagnostics = Vec::new();

    let u = model.confinement;
    let l1 = crate::funcineq::required_half_width(&|x: &[f64]| u.value(x), 1);
    let grid1 = GridMeasure::new(|x| u.value(x), 1, l1, sizes.grid_1d)?;
    let mut lyapunov_lemma = Vec::with_capacity(sizes.lyapunov);
    for _ in 0..sizes.lyapunov {
        let sf = TestFunctionSpec::random(Purpose::SPositive, &mut s);
        let g = TestFunctionSpec::random(Purpose::GGeneric, &mut s);
        let check = verify_lyapunov_lemma(&grid1, &sf, &g)?;
        lyapunov_lemma.push(CaseResult { case: (sf, g), check });
    }

    let v2 = |x: &[f64]| model.total_potential(x).unwrap_or(f64::INFINITY);
    let l2 = crate::funcineq::required_half_width(&v2, 2);
    let grid2 = GridMeasure::from_model(model, l2, sizes.grid_2d)?;

    let mut moment_bound = Vec::new();
    let tau = c_ls.map(|c| 1.0 / (8.0 * c));
    match (c_ls, tau) {
        (Some(c), Some(t)) => {
            for _ in 0..sizes.moment {
                let g = ProductFunction::random(Purpose::GGeneric, &mut s);
                let check = verify_moment_bound(&grid2, c, t, &g)?;
                moment_bound.push(CaseResult { case: g, check });
            }
        }
        _ => diagnostics.push("moment bound skipped: no certified C_LS".into()),
    }

    let mut boundedness = Vec::new();
    match m {
        Some((m1, m2)) => {
            for _ in 0..sizes.boundedness {
                let phi = ProductFunction::random(Purpose::GGeneric, &mut s);
                let psi = [s.uniform_in(-1.0, 1.0), s.uniform_in(-1.0, 1.0)];
                let check = verify_boundedness_condition(model, &grid2, m1, m2, &phi, psi)?;
                boundedness.push(CaseResult {
                    case: (phi, psi),
                    check,
                });
            }
        }
        None => diagnostics.push("boundedness condition skipped: no (M1, M2)".into()),
    }

    let fd = fd_derivative_suite(&[model.confinement, model.interaction], 50, seed)?;
    let force_fd_error = fd_force_error(model, 50, seed)?;
    let pass = lyapunov_lemma.iter().all(|c| c.check.pass)
        && moment_bound.iter().all(|c| c.check.pass)
        && boundedness.iter().all(|c| c.check.pass)
        && fd.pass
        && force_fd_error < FD_TOL;
    Ok(OracleSuite {
        lyapunov_lemma,
        moment_bound,
        moment_bound_tau: tau,
        boundedness,
        fd,
        force_fd_error,
        diagnostics,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::BumpSign;

    fn gauss_1d(n: usize) -> GridMeasure {
        GridMeasure::new(|x| 0.5 * x[0] * x[0], 1, 9.0, n).unwrap()
    }

    fn pair_model() -> ModelConfig {
        ModelConfig::new(
            2,
            PotentialSpec::quadratic(1.0, 1).unwrap(),
            PotentialSpec::zero(1),
        )
        .unwrap()
    }

    fn bump(c: f64, w: f64, p: Purpose) -> TestFunctionSpec {
        TestFunctionSpec::new(TestFamily::GaussianBumpFn { center: c, width: w }, p)
    }

    fn constant(c: f64) -> TestFunctionSpec {
        TestFunctionSpec::new(
            TestFamily::PolynomialFn {
                coefficients: vec![c],
            },
            Purpose::GGeneric,
        )
    }

    #[test]
    fn jets_match_finite_differences() {
        let mut s = Stream::new(1, 1);
        for _ in 0..50 {
            for p in [Purpose::SPositive, Purpose::GGeneric] {
                let f = TestFunctionSpec::random(p, &mut s);
                let x = s.uniform_in(-3.0, 3.0);
                let h = 1e-5;
                let (v, d1, d2) = f.jet(x);
                let (vp, dp, _) = f.jet(x + h);
                let (vm, dm, _) = f.jet(x - h);
                assert!(((vp - vm) / (2.0 * h) - d1).abs() < 1e-7 * (1.0 + d1.abs()), "{f:?}");
                assert!(((dp - dm) / (2.0 * h) - d2).abs() < 1e-7 * (1.0 + d2.abs()), "{f:?}");
                if p == Purpose::SPositive {
                    assert!(v > 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_g_passes() {
        let m = gauss_1d(400);
        let c = verify_lyapunov_lemma(&m, &bump(0.5, 1.0, Purpose::SPositive), &constant(1.0)).unwrap();
        assert!(c.pass);
        assert!(c.rhs.abs() < 1e-15);
        assert!(c.lhs <= 1e-12);
    }

    #[test]
    fn equality_when_s_equals_g() {
        let m = gauss_1d(400);
        let s = bump(0.3, 1.2, Purpose::SPositive);
        let c = verify_lyapunov_lemma(&m, &s, &s).unwrap();
        assert!(c.pass);
        assert!(c.slack().abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn random_pairs_pass() {
        let m = gauss_1d(600);
        let mut s = Stream::new(3, 3);
        for _ in 0..20 {
            let sf = TestFunctionSpec::random(Purpose::SPositive, &mut s);
            let g = TestFunctionSpec::random(Purpose::GGeneric, &mut s);
            let c = verify_lyapunov_lemma(&m, &sf, &g).unwrap();
            assert!(c.pass, "{sf:?} {g:?} {c:?}");
        }
    }

    #[test]
    fn nonpositive_s_rejected() {
        let m = gauss_1d(100);
        let s = TestFunctionSpec::new(
            TestFamily::PolynomialFn {
                coefficients: vec![0.0, 1.0],
            },
            Purpose::SPositive,
        );
        assert!(verify_lyapunov_lemma(&m, &s, &constant(1.0)).is_err());
    }

    #[test]
    fn lemma_integral_converges_second_order() {
        let s = bump(0.3, 1.2, Purpose::SPositive);
        let ratio = refinement_ratio(
            |x| 0.5 * x[0] * x[0],
            1,
            9.0,
            100,
            |m| Ok(verify_lyapunov_lemma(m, &s, &s)?.lhs),
        )
        .unwrap();
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn moment_bound_constant_g() {
        let m = GridMeasure::from_model(&pair_model(), 8.0, 160).unwrap();
        let g = ProductFunction(constant(1.0), constant(1.0));
        let c = verify_moment_bound(&m, 1.0, 0.125, &g).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-6, "{c:?}");
        assert!((c.rhs - 4.0 * 2f64.ln()).abs() < 1e-9);
        assert!(c.pass);
    }

    #[test]
    fn moment_bound_constants_at_eighth() {
        // at τ = 1/(8C): 2C/τ = 16C², ln 2/(2τ) = 4 ln2 · C
        let m = GridMeasure::from_model(&pair_model(), 8.0, 120).unwrap();
        let g = ProductFunction(bump(0.4, 1.0, Purpose::GGeneric), bump(-0.2, 0.7, Purpose::GGeneric));
        let c_ls = 1.0;
        let c = verify_moment_bound(&m, c_ls, 1.0 / (8.0 * c_ls), &g).unwrap();
        let (mut grad, mut mass) = (0.0, 0.0);
        for k in 0..m.len() {
            let (v, dv) = g.eval(&m.point(k));
            grad += m.weights[k] * (dv[0] * dv[0] + dv[1] * dv[1]);
            mass += m.weights[k] * v * v;
        }
        let expect = 16.0 * c_ls * c_ls * grad + 4.0 * 2f64.ln() * c_ls * mass;
        assert!((c.rhs - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn moment_bound_random_and_range() {
        let m = GridMeasure::from_model(&pair_model(), 8.0, 120).unwrap();
        let mut s = Stream::new(8, 8);
        for _ in 0..10 {
            let g = ProductFunction::random(Purpose::GGeneric, &mut s);
            assert!(verify_moment_bound(&m, 1.0, 0.125, &g).unwrap().pass);
        }
        let g = ProductFunction(constant(1.0), constant(1.0));
        assert!(verify_moment_bound(&m, 1.0, 0.25, &g).is_err());
        assert!(verify_moment_bound(&m, 1.0, 0.0, &g).is_err());
        let near = verify_moment_bound(&m, 1.0, 0.25 - 1e-12, &g).unwrap();
        // the bound diverges only logarithmically
        assert!(near.pass && near.rhs > 40.0);
    }

    #[test]
    fn boundedness_quadratic_reduces_to_m2() {
        // ∇²V = I + (K/2)[[1,-1],[-1,1]] for U = x²/2, W = K r²/2, N = 2
        let k = 0.5;
        let model = ModelConfig::new(
            2,
            PotentialSpec::quadratic(1.0, 1).unwrap(),
            PotentialSpec::quadratic(k, 1).unwrap(),
        )
        .unwrap();
        let grid = GridMeasure::from_model(&model, 8.0, 100).unwrap();
        let phi = ProductFunction(constant(1.0), constant(1.0));
        let psi = [1.0, -1.0];
        let tight = (1.0f64 + k).powi(2);
        assert!(verify_boundedness_condition(&model, &grid, 0.0, tight, &phi, psi).unwrap().pass);
        assert!(!verify_boundedness_condition(&model, &grid, 0.0, 0.9 * tight, &phi, psi).unwrap().pass);
    }

    #[test]
    fn fd_suite_passes_for_all_families() {
        let mut specs = Vec::new();
        for d in 1..=3 {
            specs.extend([
                PotentialSpec::quadratic(1.3, d).unwrap(),
                PotentialSpec::double_well(0.25, 0.5, d).unwrap(),
                PotentialSpec::bump(0.7, 1.2, BumpSign::Attractive, d).unwrap(),
                PotentialSpec::bump(0.4, 0.8, BumpSign::Repulsive, d).unwrap(),
                PotentialSpec::cosine(0.6, 1.7, d).unwrap(),
            ]);
        }
        let r = fd_derivative_suite(&specs, 100, 4).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.entries[0].max_hessian_error < 1e-9);
        let m = ModelConfig::new(
            5,
            PotentialSpec::double_well(0.25, 0.5, 2).unwrap(),
            PotentialSpec::bump(0.4, 0.8, BumpSign::Repulsive, 2).unwrap(),
        )
        .unwrap();
        assert!(fd_force_error(&m, 20, 1).unwrap() < FD_TOL);
    }

    #[test]
    fn suite_on_double_well_pair() {
        let u = PotentialSpec::double_well(0.25, 0.5, 1).unwrap();
        let w = PotentialSpec::bump(0.1, 1.0, BumpSign::Attractive, 1).unwrap();
        let model = ModelConfig::new(2, u, w).unwrap();
        let mut bundle = crate::potentials::extract_constants(&u, &w).unwrap();
        crate::funcineq::derive_functional_constants(&u, &w, &mut bundle, None).unwrap();
        let cert = crate::certify(&bundle, &crate::CertifyOptions::default()).unwrap();
        let sizes = SuiteSizes {
            grid_2d: 100,
            ..SuiteSizes::default()
        };
        let suite = run_oracle_suite(
            &model,
            Some(1.0),
            Some((cert.boundedness.m1, cert.boundedness.m2)),
            sizes,
            2,
        )
        .unwrap();
        assert!(suite.pass, "{:?}", suite.boundedness);
        assert_eq!(suite.lyapunov_lemma.len(), 20);
        assert_eq!(suite.boundedness.len(), 10);
        let json = serde_json::to_value(&suite).unwrap();
        assert_eq!(json["lyapunov_lemma"][0]["case"][1]["purpose"], "g_generic");
    }
}
