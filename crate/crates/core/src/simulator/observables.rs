use serde::{Deserialize, Serialize};

use crate::meanfield::ModelConfig;

/// Per-replica scalar observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `(1/N) Σ xᵢ¹`, first coordinate only.
    MeanPosition,
    /// `(1/N) Σ vᵢ¹`
    MeanVelocity,
    /// `(1/N) Σ |vᵢ|²/2`
    KineticEnergy,
    /// `(1/N) Σ U(xᵢ)`
    ConfinementEnergy,
    /// `(1/(N(N-1))) Σ_{i≠j} |xᵢ - xⱼ|²`
    PairDistanceSecondMoment,
}

impl Observable {
    pub const ALL: [Observable; 5] = [
        Observable::MeanPosition,
        Observable::MeanVelocity,
        Observable::KineticEnergy,
        Observable::ConfinementEnergy,
        Observable::PairDistanceSecondMoment,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Observable::MeanPosition => "mean_position",
            Observable::MeanVelocity => "mean_velocity",
            Observable::KineticEnergy => "kinetic_energy",
            Observable::ConfinementEnergy => "confinement_energy",
            Observable::PairDistanceSecondMoment => "pair_distance_second_moment",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.id() == id)
    }

    /// Evaluates on one replica's positions `x` and velocities `v`.
    pub fn evaluate(self, model: &ModelConfig, x: &[f64], v: &[f64]) -> f64 {
        let n = model.particles;
        let d = model.dim();
        let nf = n as f64;
        match self {
            Observable::MeanPosition => x.chunks(d).map(|p| p[0]).sum::<f64>() / nf,
            Observable::MeanVelocity => v.chunks(d).map(|p| p[0]).sum::<f64>() / nf,
            Observable::KineticEnergy => 0.5 * v.iter().map(|a| a * a).sum::<f64>() / nf,
            Observable::ConfinementEnergy => {
                x.chunks(d).map(|p| model.confinement.value(p)).sum::<f64>() / nf
            }
            Observable::PairDistanceSecondMoment => {
                let mut s = 0.0;
                for i in 0..n {
                    let xi = &x[i * d..(i + 1) * d];
                    for j in i + 1..n {
                        let xj = &x[j * d..(j + 1) * d];
                        s += xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    }
                }
                2.0 * s / (nf * (nf - 1.0))
            }
        }
    }
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}
