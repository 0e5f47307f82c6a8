//! Rate certification and simulation for the N-particle kinetic Langevin
//! system with mean-field interaction
//!
//! ```text
//! dxᵢ = vᵢ dt
//! dvᵢ = √2 dBᵢ - vᵢ dt - ∇U(xᵢ) dt - (1/N) Σⱼ ∇W(xᵢ - xⱼ) dt
//! ```
//!
//! The certifier turns potential constants into an explicit rate `λ` and
//! prefactor `C₀` that do not depend on `N`; the simulator and the grid
//! oracles check those numbers empirically.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certifier;
pub mod error;
pub mod funcineq;
pub mod meanfield;
pub mod numerics;
pub mod oracle;
pub mod potentials;
pub mod report;
pub mod rng;
pub mod simulator;

pub use certifier::{certify, Certificate, CertifyOptions, Mode, Variant};
pub use error::{Error, Result};
pub use meanfield::ModelConfig;
pub use simulator::{DecayFit, EnsembleState, IntegratorConfig, Observable, Scheme};
pub use potentials::{BumpSign, ConstantsBundle, Family, PotentialSpec, Provenance, Role};
