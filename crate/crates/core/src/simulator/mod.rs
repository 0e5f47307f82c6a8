//! Replica ensembles of the kinetic Langevin particle system
//!
//! ```text
//! dxᵢ = vᵢ dt
//! dvᵢ = -vᵢ dt - ∇U(xᵢ) dt - (1/N) Σⱼ ∇W(xᵢ - xⱼ) dt + √2 dBᵢ
//! ```
//!
//! Noise for replica `r`, particle label `ℓ`, step `s` is a pure function of
//! `(master_seed, r, ℓ, s)`, and forces are summed in label order, so runs
//! are bit-reproducible for any thread count and relabelling particles
//! permutes trajectories exactly.

mod fit;
mod observables;

pub use fit::{fit_decay, fit_decay_series, n_sweep, DecayFit, SweepRow, SweepTable};
pub use observables::Observable;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::meanfield::{ForceScratch, ModelConfig};
use crate::rng::CounterRng;

/// Hard cap on `horizon / dt`.
pub const MAX_STEPS: u64 = 100_000_000;
/// Largest admissible time step.
pub const MAX_DT: f64 = 0.1;
/// Replicas per work unit; also the bootstrap resampling unit.
pub const BATCH: usize = 64;

const INIT_DOMAIN: u64 = 0x1_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    #[serde(rename = "baoab")]
    SplittingBaoab,
}

/// Friction is fixed at 1 and the noise coefficient at √2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Disables noise injection (debugging only).
    #[serde(default = "yes")]
    pub noise: bool,
}

fn yes() -> bool {
    true
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Result<Self> {
        let c = Self {
            scheme,
            dt,
            noise: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidArgument(format!(
                "dt must be in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Initial law of each replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Positions `N(offset·e₁, spread² I)`, velocities `N(0, I)`.
    DisplacedGaussian { offset: f64, spread: f64 },
    /// The same configuration in every replica.
    Fixed {
        positions: Vec<f64>,
        velocities: Vec<f64>,
    },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::DisplacedGaussian {
            offset: 2.0,
            spread: 1.0,
        }
    }
}

/// `R` replicas of `N` particles in `R^d`, stored replica-major then
/// particle-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub replicas: usize,
    pub particles: usize,
    pub dim: usize,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    /// Particle labels; noise streams and force summation follow them.
    pub labels: Vec<u64>,
    pub time: f64,
    pub master_seed: u64,
    pub step_count: u64,
    forces: Vec<f64>,
    order: Vec<usize>,
}

impl EnsembleState {
    pub fn new(model: &ModelConfig, replicas: usize, init: &InitSpec, master_seed: u64) -> Result<Self> {
        let labels = (0..model.particles as u64).collect();
        Self::with_labels(model, replicas, init, master_seed, labels)
    }

    /// As [`EnsembleState::new`] with explicit particle labels. Initial
    /// Gaussian draws are keyed by label too.
    pub fn with_labels(
        model: &ModelConfig,
        replicas: usize,
        init: &InitSpec,
        master_seed: u64,
        labels: Vec<u64>,
    ) -> Result<Self> {
        model.validate()?;
        if replicas == 0 {
            return Err(Error::InvalidArgument("need at least one replica".into()));
        }
        let (n, d) = (model.particles, model.dim());
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::InvalidArgument("particle labels must be distinct".into()));
        }
        let size = n * d;
        let mut positions = vec![0.0; replicas * size];
        let mut velocities = vec![0.0; replicas * size];
        match init {
            InitSpec::DisplacedGaussian { offset, spread } => {
                let rng = CounterRng::new(master_seed);
                let mut buf = vec![0.0; 2 * d];
                for r in 0..replicas {
                    for (i, &label) in labels.iter().enumerate() {
                        rng.fill_normals(&[INIT_DOMAIN, r as u64, label], &mut buf);
                        let o = r * size + i * d;
                        for k in 0..d {
                            positions[o + k] = spread * buf[k] + if k == 0 { *offset } else { 0.0 };
                            velocities[o + k] = buf[d + k];
                        }
                    }
                }
            }
            InitSpec::Fixed {
                positions: x,
                velocities: v,
            } => {
                if x.len() != size || v.len() != size {
                    return Err(Error::DimensionMismatch {
                        expected: size,
                        got: x.len().min(v.len()),
                    });
                }
                ensure_finite("initial positions", x)?;
                ensure_finite("initial velocities", v)?;
                for r in 0..replicas {
                    positions[r * size..(r + 1) * size].copy_from_slice(x);
                    velocities[r * size..(r + 1) * size].copy_from_slice(v);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| labels[i]);
        let mut state = Self {
            replicas,
            particles: n,
            dim: d,
            positions,
            velocities,
            labels,
            time: 0.0,
            master_seed,
            step_count: 0,
            forces: vec![0.0; replicas * size],
            order,
        };
        state.refresh_forces(model);
        Ok(state)
    }

    fn size(&self) -> usize {
        self.particles * self.dim
    }

    fn refresh_forces(&mut self, model: &ModelConfig) {
        let size = self.size();
        let order = &self.order;
        self.positions
            .par_chunks(size * BATCH)
            .zip(self.forces.par_chunks_mut(size * BATCH))
            .for_each(|(x, f)| {
                let mut scratch = ForceScratch::new(model);
                for (xr, fr) in x.chunks(size).zip(f.chunks_mut(size)) {
                    model.force_into(xr, order, fr, &mut scratch);
                }
            });
    }

    /// Positions of replica `r`.
    pub fn replica_positions(&self, r: usize) -> &[f64] {
        &self.positions[r * self.size()..(r + 1) * self.size()]
    }

    pub fn replica_velocities(&self, r: usize) -> &[f64] {
        &self.velocities[r * self.size()..(r + 1) * self.size()]
    }
}

/// Exact Ornstein–Uhlenbeck velocity update `v ← e^{-dt} v + √(1-e^{-2dt}) ξ`.
#[inline]
pub fn o_step(v: &mut [f64], dt: f64, xi: &[f64]) {
    let (a, s) = o_coefficients(dt);
    o_step_with(v, a, s, xi);
}

#[inline]
fn o_coefficients(dt: f64) -> (f64, f64) {
    ((-dt).exp(), (-(-2.0 * dt).exp_m1()).sqrt())
}

#[inline]
fn o_step_with(v: &mut [f64], a: f64, s: f64, xi: &[f64]) {
    for (vk, &x) in v.iter_mut().zip(xi) {
        *vk = a * *vk + s * x;
    }
}

/// Per-replica view used by the integrators.
struct Replica<'a> {
    index: usize,
    x: &'a mut [f64],
    v: &'a mut [f64],
    f: &'a mut [f64],
}

struct Stepper<'a> {
    model: &'a ModelConfig,
    integrator: IntegratorConfig,
    rng: CounterRng,
    labels: &'a [u64],
    order: &'a [usize],
    dim: usize,
    o: (f64, f64),
}

impl Stepper<'_> {
    fn noise(&self, replica: usize, step: u64, xi: &mut [f64]) {
        if !self.integrator.noise {
            xi.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let d = self.dim;
        for (i, &label) in self.labels.iter().enumerate() {
            self.rng
                .fill_normals(&[replica as u64, label, step], &mut xi[i * d..(i + 1) * d]);
        }
    }

    /// Advances one replica by one step; `step` is the index of the step
    /// being taken.
    fn advance(&self, r: &mut Replica, step: u64, xi: &mut [f64], scratch: &mut ForceScratch) -> Result<()> {
        let dt = self.integrator.dt;
        self.noise(r.index, step, xi);
        match self.integrator.scheme {
            Scheme::EulerMaruyama => {
                let s = (2.0 * dt).sqrt();
                for k in 0..r.x.len() {
                    let v = r.v[k];
                    r.x[k] += v * dt;
                    r.v[k] += (-v + r.f[k]) * dt + s * xi[k];
                }
                self.model.force_into(r.x, self.order, r.f, scratch);
            }
            Scheme::SplittingBaoab => {
                let h = 0.5 * dt;
                for k in 0..r.x.len() {
                    r.v[k] += h * r.f[k];
                    r.x[k] += h * r.v[k];
                }
                o_step_with(r.v, self.o.0, self.o.1, xi);
                for k in 0..r.x.len() {
                    r.x[k] += h * r.v[k];
                }
                self.model.force_into(r.x, self.order, r.f, scratch);
                for k in 0..r.x.len() {
                    r.v[k] += h * r.f[k];
                }
            }
        }
        if let Some(k) = r.x.iter().chain(r.v.iter()).position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                step: step + 1,
                replica: r.index,
                detail: format!("non-finite state entry {k}"),
            });
        }
        Ok(())
    }
}

/// Advances every replica of `state` by `steps` steps.
pub fn advance(state: &mut EnsembleState, model: &ModelConfig, integrator: &IntegratorConfig, steps: u64) -> Result<()> {
    integrator.validate()?;
    if model.particles != state.particles || model.dim() != state.dim {
        return Err(Error::DimensionMismatch {
            expected: state.size(),
            got: model.size(),
        });
    }
    let size = state.size();
    let start = state.step_count;
    let stepper = Stepper {
        model,
        integrator: *integrator,
        rng: CounterRng::new(state.master_seed),
        labels: &state.labels,
        order: &state.order,
        dim: state.dim,
        o: o_coefficients(integrator.dt),
    };
    let chunk = size * BATCH;
    state
        .positions
        .par_chunks_mut(chunk)
        .zip(state.velocities.par_chunks_mut(chunk))
        .zip(state.forces.par_chunks_mut(chunk))
        .enumerate()
        .try_for_each(|(b, ((x, v), f))| {
            let mut scratch = ForceScratch::new(model);
            let mut xi = vec![0.0; size];
            for (j, ((xr, vr), fr)) in x
                .chunks_mut(size)
                .zip(v.chunks_mut(size))
                .zip(f.chunks_mut(size))
                .enumerate()
            {
                let mut rep = Replica {
                    index: b * BATCH + j,
                    x: xr,
                    v: vr,
                    f: fr,
                };
                for s in 0..steps {
                    stepper.advance(&mut rep, start + s, &mut xi, &mut scratch)?;
                }
            }
            Ok(())
        })?;
    state.step_count += steps;
    state.time = state.step_count as f64 * integrator.dt;
    Ok(())
}

/// One step of every replica.
pub fn step(state: &mut EnsembleState, model: &ModelConfig, integrator: &IntegratorConfig) -> Result<()> {
    advance(state, model, integrator, 1)
}

/// Ensemble statistics of one observable at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Sample variance across replicas (0 for a single replica).
    pub variance: f64,
}

/// Recorded ensemble statistics.
///
/// `batch_means[o][t][b]` is the mean of observable `o` at record `t` over
/// replica batch `b`; batches hold [`BATCH`] replicas except possibly the
/// last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub observables: Vec<Observable>,
    pub times: Vec<f64>,
    /// `stats[o][t]`
    pub stats: Vec<Vec<Moments>>,
    pub replicas: usize,
    pub batch_sizes: Vec<usize>,
    pub batch_means: Vec<Vec<Vec<f64>>>,
}

impl TimeSeries {
    pub fn index_of(&self, obs: Observable) -> Option<usize> {
        self.observables.iter().position(|&o| o == obs)
    }

    pub fn means(&self, obs: Observable) -> Option<Vec<f64>> {
        self.index_of(obs)
            .map(|o| self.stats[o].iter().map(|m| m.mean).collect())
    }
}

/// Parameters of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub replicas: usize,
    pub horizon: f64,
    pub init: InitSpec,
    pub observables: Vec<Observable>,
    /// Record every `stride` steps.
    pub stride: u64,
    pub seed: u64,
}

/// Simulates `spec.replicas` replicas up to `spec.horizon`, recording
/// observables at time 0 and every `stride` steps.
pub fn run(model: &ModelConfig, integrator: &IntegratorConfig, spec: &RunSpec) -> Result<TimeSeries> {
    run_with_state(model, integrator, spec).map(|(ts, _)| ts)
}

/// As [`run`], also returning the final ensemble.
pub fn run_with_state(
    model: &ModelConfig,
    integrator: &IntegratorConfig,
    spec: &RunSpec,
) -> Result<(TimeSeries, EnsembleState)> {
    integrator.validate()?;
    if spec.observables.is_empty() {
        return Err(Error::InvalidArgument("no observables requested".into()));
    }
    if !(spec.horizon >= 0.0 && spec.horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad horizon {}", spec.horizon)));
    }
    if spec.stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let steps_f = (spec.horizon / integrator.dt).round();
    if steps_f > MAX_STEPS as f64 {
        return Err(Error::ResourceCap(format!(
            "{steps_f} steps exceed the cap of {MAX_STEPS}"
        )));
    }
    let steps = steps_f as u64;
    let mut state = EnsembleState::new(model, spec.replicas, &spec.init, spec.seed)?;
    let n_obs = spec.observables.len();
    let batch_sizes: Vec<usize> = (0..spec.replicas.div_ceil(BATCH))
        .map(|b| BATCH.min(spec.replicas - b * BATCH))
        .collect();
    let mut series = TimeSeries {
        observables: spec.observables.clone(),
        times: Vec::new(),
        stats: vec![Vec::new(); n_obs],
        replicas: spec.replicas,
        batch_sizes,
        batch_means: vec![Vec::new(); n_obs],
    };
    record(&state, model, &mut series);
    let mut done = 0;
    while done < steps {
        let chunk = spec.stride.min(steps - done);
        advance(&mut state, model, integrator, chunk)?;
        done += chunk;
        record(&state, model, &mut series);
    }
    Ok((series, state))
}

/// Empirical covariance of `(x¹, v¹)` pooled over replicas and particles,
/// with the number of samples.
pub fn phase_covariance(state: &EnsembleState) -> ([[f64; 2]; 2], usize) {
    let d = state.dim;
    let xs: Vec<f64> = state.positions.iter().step_by(d).copied().collect();
    let vs: Vec<f64> = state.velocities.iter().step_by(d).copied().collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mv = vs.iter().sum::<f64>() / n;
    let mut c = [[0.0; 2]; 2];
    for (x, v) in xs.iter().zip(&vs) {
        let (a, b) = (x - mx, v - mv);
        c[0][0] += a * a;
        c[0][1] += a * b;
        c[1][1] += b * b;
    }
    for row in c.iter_mut() {
        for e in row.iter_mut() {
            *e /= n - 1.0;
        }
    }
    c[1][0] = c[0][1];
    (c, xs.len())
}

fn record(state: &EnsembleState, model: &ModelConfig, series: &mut TimeSeries) {
    let r = state.replicas;
    let obs = &series.observables;
    // Per-batch (sum, sum of squares) for each observable.
    let sums: Vec<Vec<(f64, f64)>> = (0..r.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![(0.0, 0.0); obs.len()];
            for rep in b * BATCH..((b + 1) * BATCH).min(r) {
                let x = state.replica_positions(rep);
                let v = state.replica_velocities(rep);
                for (o, a) in obs.iter().zip(acc.iter_mut()) {
                    let val = o.evaluate(model, x, v);
                    a.0 += val;
                    a.1 += val * val;
                }
            }
            acc
        })
        .collect();
    series.times.push(state.time);
    for o in 0..obs.len() {
        let total: f64 = sums.iter().map(|s| s[o].0).sum();
        let total_sq: f64 = sums.iter().map(|s| s[o].1).sum();
        let mean = total / r as f64;
        let variance = if r > 1 {
            ((total_sq - r as f64 * mean * mean) / (r as f64 - 1.0)).max(0.0)
        } else {
            0.0
        };
        series.stats[o].push(Moments { mean, variance });
        series.batch_means[o].push(
            sums.iter()
                .zip(&series.batch_sizes)
                .map(|(s, &n)| s[o].0 / n as f64)
                .collect(),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{BumpSign, PotentialSpec};

    fn ou(n: usize, d: usize) -> ModelConfig {
        ModelConfig::new(
            n,
            PotentialSpec::quadratic(1.0, d).unwrap(),
            PotentialSpec::zero(d),
        )
        .unwrap()
    }

    fn baoab(dt: f64) -> IntegratorConfig {
        IntegratorConfig::new(Scheme::SplittingBaoab, dt).unwrap()
    }

    #[test]
    fn dt_guard() {
        assert!(IntegratorConfig::new(Scheme::EulerMaruyama, 0.2).is_err());
        assert!(IntegratorConfig::new(Scheme::EulerMaruyama, 0.0).is_err());
        assert!(IntegratorConfig::new(Scheme::EulerMaruyama, 0.1).is_ok());
    }

    #[test]
    fn zero_force_no_noise_is_stationary() {
        let m = ModelConfig::new(
            3,
            PotentialSpec::quadratic(1.0, 2).unwrap(),
            PotentialSpec::zero(2),
        )
        .unwrap();
        let init = InitSpec::Fixed {
            positions: vec![0.0; 6],
            velocities: vec![0.0; 6],
        };
        for scheme in [Scheme::EulerMaruyama, Scheme::SplittingBaoab] {
            let mut s = EnsembleState::new(&m, 4, &init, 1).unwrap();
            let cfg = IntegratorConfig {
                scheme,
                dt: 0.05,
                noise: false,
            };
            advance(&mut s, &m, &cfg, 100).unwrap();
            assert!(s.positions.iter().all(|&v| v == 0.0));
            assert!(s.velocities.iter().all(|&v| v == 0.0));
            assert_eq!(s.step_count, 100);
        }
    }

    #[test]
    fn o_step_preserves_standard_normal() {
        let rng = CounterRng::new(3);
        let n = 100_000;
        let mut v = vec![0.0; n];
        rng.fill_normals(&[1], &mut v);
        let mut xi = vec![0.0; n];
        rng.fill_normals(&[2], &mut xi);
        o_step(&mut v, 0.3, &xi);
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se_mean = (1.0 / n as f64).sqrt();
        let se_var = (2.0 / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se_mean);
        assert!((var - 1.0).abs() < 4.0 * se_var);
    }

    #[test]
    fn ensemble_mean_follows_linear_ode() {
        let m = ou(2, 1);
        let spec = RunSpec {
            replicas: 4000,
            horizon: 3.0,
            init: InitSpec::DisplacedGaussian {
                offset: 2.0,
                spread: 0.5,
            },
            observables: vec![Observable::MeanPosition, Observable::MeanVelocity],
            stride: 50,
            seed: 11,
        };
        let ts = run(&m, &baoab(0.01), &spec).unwrap();
        // d/dt (mx, mv) = (mv, -mx - mv) from (2, 0)
        let w = 3f64.sqrt() / 2.0;
        let exact = |t: f64| {
            let e = (-0.5 * t).exp();
            let mx = e * (2.0 * (w * t).cos() + (1.0 / w) * (w * t).sin());
            let mv = -e * (2.0 / w) * (w * t).sin() * (0.25 + w * w);
            (mx, mv)
        };
        for (t, (px, pv)) in ts
            .times
            .iter()
            .zip(ts.stats[0].iter().zip(&ts.stats[1]))
        {
            let (mx, mv) = exact(*t);
            let sx = (px.variance / 4000.0).sqrt();
            let sv = (pv.variance / 4000.0).sqrt();
            assert!((px.mean - mx).abs() < 5.0 * sx + 1e-3, "t={t}: {} vs {mx}", px.mean);
            assert!((pv.mean - mv).abs() < 5.0 * sv + 1e-3, "t={t}: {} vs {mv}", pv.mean);
        }
    }

    #[test]
    fn zero_horizon_records_initial_state_only() {
        let m = ou(2, 1);
        let spec = RunSpec {
            replicas: 1,
            horizon: 0.0,
            init: InitSpec::default(),
            observables: vec![Observable::KineticEnergy],
            stride: 1,
            seed: 0,
        };
        let ts = run(&m, &baoab(0.01), &spec).unwrap();
        assert_eq!(ts.times, vec![0.0]);
        assert_eq!(ts.stats[0][0].variance, 0.0);
    }

    #[test]
    fn runs_are_bit_reproducible_across_thread_counts() {
        let m = ModelConfig::new(
            4,
            PotentialSpec::double_well(0.25, 0.5, 2).unwrap(),
            PotentialSpec::bump(0.3, 1.0, BumpSign::Attractive, 2).unwrap(),
        )
        .unwrap();
        let spec = RunSpec {
            replicas: 150,
            horizon: 1.0,
            init: InitSpec::default(),
            observables: Observable::ALL.to_vec(),
            stride: 10,
            seed: 99,
        };
        let cfg = baoab(0.01);
        let a = run(&m, &cfg, &spec).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| run(&m, &cfg, &spec).unwrap());
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.seed = 100;
        assert_ne!(run(&m, &cfg, &other).unwrap(), a);
    }

    #[test]
    fn relabelling_permutes_trajectories() {
        let m = ModelConfig::new(
            3,
            PotentialSpec::double_well(0.25, 0.5, 1).unwrap(),
            PotentialSpec::bump(0.5, 1.0, BumpSign::Repulsive, 1).unwrap(),
        )
        .unwrap();
        let cfg = baoab(0.02);
        let a = EnsembleState::with_labels(&m, 5, &InitSpec::default(), 7, vec![10, 20, 30]).unwrap();
        // particle 0 of `b` is particle 2 of `a`, etc.
        let b = EnsembleState::with_labels(&m, 5, &InitSpec::default(), 7, vec![30, 10, 20]).unwrap();
        let (mut a, mut b) = (a, b);
        advance(&mut a, &m, &cfg, 200).unwrap();
        advance(&mut b, &m, &cfg, 200).unwrap();
        for r in 0..5 {
            let (xa, xb) = (a.replica_positions(r), b.replica_positions(r));
            assert_eq!(xb[0], xa[2]);
            assert_eq!(xb[1], xa[0]);
            assert_eq!(xb[2], xa[1]);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let m = ModelConfig::new(
            2,
            PotentialSpec::double_well(1.0, 0.0, 1).unwrap(),
            PotentialSpec::zero(1),
        )
        .unwrap();
        let init = InitSpec::Fixed {
            positions: vec![1e3, -1e3],
            velocities: vec![0.0, 0.0],
        };
        let mut s = EnsembleState::new(&m, 1, &init, 0).unwrap();
        let e = advance(&mut s, &m, &baoab(0.1), 50).unwrap_err();
        assert!(matches!(e, Error::Diverged { replica: 0, .. }));
    }

    fn spread_of(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
    }

    #[test]
    fn doubling_replicas_shrinks_standard_error() {
        let m = ou(2, 1);
        let cfg = baoab(0.05);
        let final_means = |replicas: usize| -> Vec<f64> {
            (0..300)
                .map(|seed| {
                    let spec = RunSpec {
                        replicas,
                        horizon: 0.5,
                        init: InitSpec::default(),
                        observables: vec![Observable::MeanPosition],
                        stride: 10,
                        seed,
                    };
                    run(&m, &cfg, &spec).unwrap().stats[0].last().unwrap().mean
                })
                .collect()
        };
        let ratio = spread_of(&final_means(128)) / spread_of(&final_means(64));
        assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn equilibrium_kinetic_energy_and_covariance() {
        let m = ou(2, 2);
        let spec = RunSpec {
            replicas: 2000,
            horizon: 5.0,
            init: InitSpec::DisplacedGaussian {
                offset: 0.0,
                spread: 1.0,
            },
            observables: vec![Observable::KineticEnergy],
            stride: 100,
            seed: 21,
        };
        let (ts, state) = run_with_state(&m, &baoab(0.01), &spec).unwrap();
        let last = ts.stats[0].last().unwrap();
        let se = (last.variance / 2000.0).sqrt();
        assert!((last.mean - 1.0).abs() < 4.0 * se, "{} ± {se}", last.mean);
        let (c, n) = phase_covariance(&state);
        let sd_var = (2.0 / n as f64).sqrt();
        let sd_cov = (1.0 / n as f64).sqrt();
        assert!((c[0][0] - 1.0).abs() < 3.0 * sd_var, "{c:?}");
        assert!((c[1][1] - 1.0).abs() < 3.0 * sd_var, "{c:?}");
        assert!(c[0][1].abs() < 3.0 * sd_cov, "{c:?}");
    }

    #[test]
    fn baoab_mean_error_is_second_order() {
        let m = ou(2, 1);
        let init = InitSpec::Fixed {
            positions: vec![2.0, 1.0],
            velocities: vec![0.0, 0.5],
        };
        // with linear forces the ensemble mean obeys the noise-free recursion
        let mean_at = |dt: f64| {
            let cfg = IntegratorConfig {
                scheme: Scheme::SplittingBaoab,
                dt,
                noise: false,
            };
            let mut s = EnsembleState::new(&m, 1, &init, 0).unwrap();
            advance(&mut s, &m, &cfg, (2.0 / dt).round() as u64).unwrap();
            s.positions[0]
        };
        let (a, b, c) = (mean_at(0.08), mean_at(0.04), mean_at(0.02));
        let ratio = (a - b) / (b - c);
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn pair_moment_examples() {
        let m = ou(2, 1);
        let p = Observable::PairDistanceSecondMoment;
        assert_eq!(p.evaluate(&m, &[1.0, -1.0], &[0.0, 0.0]), 4.0);
        assert_eq!(p.evaluate(&m, &[0.3, 0.3], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn step_cap_is_enforced() {
        let spec = RunSpec {
            replicas: 1,
            horizon: 1e8,
            init: InitSpec::default(),
            observables: vec![Observable::MeanPosition],
            stride: 1,
            seed: 0,
        };
        let e = run(&ou(2, 1), &baoab(0.1), &spec).unwrap_err();
        assert!(matches!(e, Error::ResourceCap(_)));
    }
}
