//! Effective diffusivity of a particle obeying one-dimensional underdamped
//! Langevin dynamics
//!
//! ```text
//! dq = p dt,   dp = −V′(q) dt − γ p dt + √(2γ/β) dW
//! ```
//!
//! in a smooth periodic potential `V`, computed by independent routes:
//!
//! * [`spectral`]: Hermite × Fourier Galerkin solution of the cell problem
//!   `−L_γ φ = p`, giving `D_γ` for any friction;
//! * [`langevin_mc`]: ensemble simulation with a BAOAB integrator and a
//!   mean-square-displacement fit;
//! * [`fw_graph`] and [`smoluchowski`]: closed formulas for the small-friction
//!   limit `D* = lim γD_γ` and the overdamped limit `D̄ = lim γD_γ`;
//! * [`graph_diffusion`]: simulation of the limiting energy diffusion on the
//!   graph of level-set components, estimating `D*` from path statistics.

pub mod error;
pub mod fw_graph;
pub mod graph_diffusion;
pub mod langevin_mc;
pub mod numerics;
pub mod potential;
pub mod rng;
pub mod smoluchowski;
pub mod spectral;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use fw_graph::{EnergyGraph, Edge, EdgeKind};
pub use langevin_mc::{McConfig, ScalingFamily, TrajectoryEnsemble};
pub use numerics::QuadratureSpec;
pub use potential::{CriticalSet, PartitionScalars, PeriodicPotential};
pub use spectral::{CellSolution, GalerkinBasis};

/// How a diffusivity value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FwFormula,
    FwGraphMc,
    SmoluchowskiFormula,
    LargeGammaExpansion,
    Spectral,
    LangevinMsd,
    RescaledVariance,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::FwFormula => "fw-formula",
            Method::FwGraphMc => "fw-graph-mc",
            Method::SmoluchowskiFormula => "smoluchowski-formula",
            Method::LargeGammaExpansion => "large-gamma-expansion",
            Method::Spectral => "spectral",
            Method::LangevinMsd => "langevin-msd",
            Method::RescaledVariance => "rescaled-variance",
        };
        f.write_str(s)
    }
}

/// A diffusivity together with its uncertainty and the parameters it belongs to.
///
/// `ci_half_width` is a 95% confidence half-width for Monte Carlo methods and
/// a numerical error bound for deterministic ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    pub value: f64,
    pub ci_half_width: f64,
    pub method: Method,
    /// `None` for friction-independent limits (D*, D̄).
    pub gamma: Option<f64>,
    pub beta: f64,
}

impl DiffusionEstimate {
    pub fn contains(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.ci_half_width
    }
}
