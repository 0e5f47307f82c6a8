use serde::{Deserialize, Serialize};

use super::{run, IntegratorConfig, InitSpec, Observable, RunSpec, TimeSeries};
use crate::error::{Error, Result};
use crate::meanfield::ModelConfig;
use crate::numerics::golden_max;
use crate::rng::Stream;

pub const MIN_WINDOW_POINTS: usize = 20;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
const NOISE_MULTIPLE: f64 = 3.0;
const BOOTSTRAP_DOMAIN: u64 = 0xB007;

/// Exponential decay rate fitted to `|mean_t - equilibrium|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub observable_id: String,
    pub points_used: usize,
    pub oscillatory: bool,
    pub bootstrap_resamples: usize,
}

struct Window {
    start: usize,
    end: usize,
}

fn choose_window(y: &[f64], noise: &[f64]) -> Result<Window> {
    let gap0 = y[0].abs();
    if !(gap0 > NOISE_MULTIPLE * noise[0]) || gap0 == 0.0 {
        return Err(Error::NoFit(format!(
            "initial gap {gap0:.3e} below {NOISE_MULTIPLE}x noise floor {:.3e}",
            noise[0]
        )));
    }
    let start = y
        .iter()
        .position(|v| v.abs() < 0.5 * gap0)
        .ok_or_else(|| Error::NoFit("signal never falls below half its initial gap".into()))?;
    let end = (start..y.len())
        .rev()
        .find(|&i| y[i].abs() >= NOISE_MULTIPLE * noise[i])
        .ok_or_else(|| Error::NoFit("signal below noise floor after the initial drop".into()))?;
    if end < start || end - start + 1 < MIN_WINDOW_POINTS {
        return Err(Error::NoFit(format!(
            "fit window has {} points, need {MIN_WINDOW_POINTS}",
            (end + 1).saturating_sub(start)
        )));
    }
    Ok(Window { start, end })
}

/// Least squares `z ≈ α + β t`; returns `(β, r²)`.
fn regress(t: &[f64], z: &[f64]) -> Option<(f64, f64)> {
    let n = t.len() as f64;
    if t.len() < 2 {
        return None;
    }
    let tm = t.iter().sum::<f64>() / n;
    let zm = z.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    let szz: f64 = z.iter().map(|a| (a - zm).powi(2)).sum();
    let stz: f64 = t.iter().zip(z).map(|(a, b)| (a - tm) * (b - zm)).sum();
    if stt <= 0.0 {
        return None;
    }
    let beta = stz / stt;
    let r2 = if szz > 0.0 { stz * stz / (stt * szz) } else { 1.0 };
    Some((beta, r2))
}

/// Peaks of `|y|` between sign changes, refined by a parabola through the
/// three samples around each maximum.
fn half_cycle_peaks(t: &[f64], y: &[f64], noise: &[f64]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    let mut seg_start = 0;
    for i in 1..=y.len() {
        let boundary = i == y.len() || (y[i] > 0.0) != (y[i - 1] > 0.0);
        if !boundary {
            continue;
        }
        let seg = seg_start..i;
        seg_start = i;
        let Some(k) = seg.clone().max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())) else {
            continue;
        };
        // maxima on the segment edge are not turning points
        if k == seg.start || k + 1 == seg.end || k == 0 || k + 1 == y.len() {
            continue;
        }
        if y[k].abs() < NOISE_MULTIPLE * noise[k] {
            continue;
        }
        let (a, b, c) = (y[k - 1].abs(), y[k].abs(), y[k + 1].abs());
        let denom = a - 2.0 * b + c;
        let h = t[k + 1] - t[k];
        let (dt, peak) = if denom < 0.0 {
            let s = 0.5 * (a - c) / denom;
            (s * h, b - 0.25 * (a - c) * s)
        } else {
            (0.0, b)
        };
        peaks.push((t[k] + dt, peak));
    }
    peaks
}

/// Residual sum of squares of `e^{-λt}(A cos ωt + B sin ωt)` with `A, B`
/// solved by least squares.
fn damped_rss(t: &[f64], y: &[f64], lambda: f64, omega: f64) -> f64 {
    let (mut cc, mut cs, mut ss, mut cy, mut sy, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&s, &v) in t.iter().zip(y) {
        let e = (-lambda * s).exp();
        let (si, co) = (omega * s).sin_cos();
        let (c, q) = (e * co, e * si);
        cc += c * c;
        cs += c * q;
        ss += q * q;
        cy += c * v;
        sy += q * v;
        yy += v * v;
    }
    let det = cc * ss - cs * cs;
    if det.abs() <= 1e-300 {
        return yy;
    }
    let a = (ss * cy - cs * sy) / det;
    let b = (cc * sy - cs * cy) / det;
    (yy - a * cy - b * sy).max(0.0)
}

fn damped_fit(t: &[f64], y: &[f64], lambda0: f64, omega0: f64, rounds: usize) -> (f64, f64) {
    let t0 = t[0];
    let ts: Vec<f64> = t.iter().map(|s| s - t0).collect();
    let (mut lambda, mut omega) = (lambda0.max(1e-3), omega0);
    let span = ts[ts.len() - 1].max(f64::MIN_POSITIVE);
    for _ in 0..rounds {
        let lo = (lambda * 0.5 - 0.5 / span).max(-1.0 / span);
        lambda = golden_max(|l| -damped_rss(&ts, y, l, omega), lo, lambda * 2.0 + 1.0 / span, 1e-7).arg;
        omega = golden_max(|w| -damped_rss(&ts, y, lambda, w), 0.7 * omega, 1.4 * omega, 1e-7).arg;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 {
        1.0 - damped_rss(&ts, y, lambda, omega) / tss
    } else {
        1.0
    };
    (lambda, r2)
}

/// Rate, r², point count, oscillatory flag.
fn rate_on_window(
    t: &[f64],
    y: &[f64],
    noise: &[f64],
    w: &Window,
    warm: Option<f64>,
) -> Result<(f64, f64, usize, bool)> {
    let (tw, yw, nw) = (
        &t[w.start..=w.end],
        &y[w.start..=w.end],
        &noise[w.start..=w.end],
    );
    // sign changes between samples that stand above the noise floor
    let mut crossings = Vec::new();
    let mut last: Option<(f64, bool)> = None;
    for ((&s, &v), &n) in tw.iter().zip(yw).zip(nw) {
        if v.abs() < NOISE_MULTIPLE * n {
            continue;
        }
        if let Some((ls, sign)) = last {
            if sign != (v > 0.0) {
                crossings.push(0.5 * (ls + s));
            }
        }
        last = Some((s, v > 0.0));
    }
    let log_fit = || -> Result<(f64, f64)> {
        let (ts, zs): (Vec<f64>, Vec<f64>) = tw
            .iter()
            .zip(yw)
            .filter(|(_, v)| v.abs() > 0.0)
            .map(|(a, v)| (*a, v.abs().ln()))
            .unzip();
        let (beta, r2) = regress(&ts, &zs).ok_or_else(|| Error::NoFit("degenerate regression".into()))?;
        Ok((-beta, r2))
    };
    if crossings.is_empty() {
        let (l, r2) = log_fit()?;
        return Ok((l, r2, tw.len(), false));
    }
    let span = tw[tw.len() - 1] - tw[0];
    let spacing = if crossings.len() >= 2 {
        (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
    } else {
        span
    };
    let omega0 = std::f64::consts::PI / spacing.max(f64::MIN_POSITIVE);
    let lambda0 = match warm {
        Some(l) => l,
        None => {
            let peaks = half_cycle_peaks(tw, yw, nw);
            if peaks.len() >= 2 {
                let (ts, zs): (Vec<f64>, Vec<f64>) = peaks.into_iter().map(|(a, b)| (a, b.ln())).unzip();
                regress(&ts, &zs).map_or(1.0 / span, |(b, _)| -b)
            } else {
                log_fit()?.0
            }
        }
    };
    let rounds = if warm.is_some() { 4 } else { 12 };
    let (l, r2) = damped_fit(tw, yw, lambda0.max(1e-3), omega0, rounds);
    Ok((l, r2, tw.len(), true))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fits a bare series. `noise[t]` is the standard error of `mean[t]`. The
/// interval comes from the regression standard error since no replica
/// batches are available.
pub fn fit_decay_series(
    times: &[f64],
    means: &[f64],
    noise: &[f64],
    equilibrium_value: f64,
    observable_id: &str,
) -> Result<DecayFit> {
    if times.len() != means.len() || times.len() != noise.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: means.len().min(noise.len()),
        });
    }
    if times.is_empty() {
        return Err(Error::NoFit("empty series".into()));
    }
    let y: Vec<f64> = means.iter().map(|m| m - equilibrium_value).collect();
    let w = choose_window(&y, noise)?;
    let (lambda, r2, used, osc) = rate_on_window(times, &y, noise, &w, None)?;
    // slope standard error from r²
    let se = if used > 2 {
        lambda.abs() * ((1.0 - r2).max(0.0) / (r2.max(f64::MIN_POSITIVE) * (used as f64 - 2.0))).sqrt()
    } else {
        0.0
    };
    Ok(DecayFit {
        lambda_hat: lambda,
        ci_low: lambda - 1.96 * se,
        ci_high: lambda + 1.96 * se,
        r_squared: r2,
        window: [times[w.start], times[w.end]],
        observable_id: observable_id.to_string(),
        points_used: used,
        oscillatory: osc,
        bootstrap_resamples: 0,
    })
}

/// Fits the decay of `observable` towards `equilibrium_value`, with a
/// percentile bootstrap over replica batches for the 95% interval.
pub fn fit_decay(series: &TimeSeries, observable: Observable, equilibrium_value: f64, seed: u64) -> Result<DecayFit> {
    let o = series
        .index_of(observable)
        .ok_or_else(|| Error::InvalidArgument(format!("observable {observable} was not recorded")))?;
    let r = series.replicas as f64;
    let means: Vec<f64> = series.stats[o].iter().map(|m| m.mean).collect();
    let noise: Vec<f64> = series.stats[o].iter().map(|m| (m.variance / r).sqrt()).collect();
    let mut fit = fit_decay_series(&series.times, &means, &noise, equilibrium_value, observable.id())?;

    let y: Vec<f64> = means.iter().map(|m| m - equilibrium_value).collect();
    let w = choose_window(&y, &noise)?;
    let nb = series.batch_sizes.len();
    let mut stream = Stream::new(seed, BOOTSTRAP_DOMAIN);
    let mut rates = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut pick = vec![0usize; nb];
    let mut yb = vec![0.0; y.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for p in pick.iter_mut() {
            *p = ((stream.uniform() * nb as f64) as usize).min(nb - 1);
        }
        let total: usize = pick.iter().map(|&b| series.batch_sizes[b]).sum();
        for (t, v) in yb.iter_mut().enumerate() {
            let bm = &series.batch_means[o][t];
            let s: f64 = pick
                .iter()
                .map(|&b| bm[b] * series.batch_sizes[b] as f64)
                .sum();
            *v = s / total as f64 - equilibrium_value;
        }
        if let Ok((l, ..)) = rate_on_window(&series.times, &yb, &noise, &w, Some(fit.lambda_hat)) {
            rates.push(l);
        }
    }
    if rates.len() >= BOOTSTRAP_RESAMPLES / 2 {
        rates.sort_by(f64::total_cmp);
        fit.ci_low = percentile(&rates, 0.025).min(fit.lambda_hat);
        fit.ci_high = percentile(&rates, 0.975).max(fit.lambda_hat);
        fit.bootstrap_resamples = rates.len();
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub particles: usize,
    pub fit: Option<DecayFit>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `(max - min) / mean` of the fitted rates, when every N produced a fit.
    pub relative_spread: Option<f64>,
}

/// Runs the same protocol (seed, init law, integrator) for each particle
/// count and fits `observable`.
#[allow(clippy::too_many_arguments)]
pub fn n_sweep(
    template: &ModelConfig,
    ns: &[usize],
    integrator: &IntegratorConfig,
    replicas: usize,
    horizon: f64,
    init: &InitSpec,
    observable: Observable,
    equilibrium_value: f64,
    stride: u64,
    seed: u64,
) -> Result<SweepTable> {
    if ns.is_empty() || ns.windows(2).any(|p| p[0] >= p[1]) || ns[0] < 2 {
        return Err(Error::InvalidArgument(
            "particle counts must be strictly increasing and >= 2".into(),
        ));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut model = *template;
        model.particles = n;
        let spec = RunSpec {
            replicas,
            horizon,
            init: init.clone(),
            observables: vec![observable],
            stride,
            seed,
        };
        let series = run(&model, integrator, &spec)?;
        match fit_decay(&series, observable, equilibrium_value, seed) {
            Ok(f) => rows.push(SweepRow {
                particles: n,
                fit: Some(f),
                diagnostic: None,
            }),
            Err(Error::NoFit(msg)) => rows.push(SweepRow {
                particles: n,
                fit: None,
                diagnostic: Some(msg),
            }),
            Err(e) => return Err(e),
        }
    }
    let rates: Option<Vec<f64>> = rows.iter().map(|r| r.fit.as_ref().map(|f| f.lambda_hat)).collect();
    let relative_spread = rates.map(|r| {
        let max = r.iter().cloned().fold(f64::MIN, f64::max);
        let min = r.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / (r.iter().sum::<f64>() / r.len() as f64)
    });
    Ok(SweepTable {
        rows,
        relative_spread,
    })
}
