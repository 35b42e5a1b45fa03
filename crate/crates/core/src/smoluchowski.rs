//! Overdamped (large-friction) quantities: the Smoluchowski diffusivity
//! `D̄ = ℓ²/(βZẐ)`, the 1-D corrector `χ`, and the two-term large-γ expansion of
//! `D_γ`.

use crate::error::{Error, Result};
use crate::numerics::{quad_interval, QuadratureSpec};
use crate::potential::{PartitionScalars, PeriodicPotential};
use crate::{DiffusionEstimate, Method};
use serde::{Deserialize, Serialize};

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

pub fn dbar(v: &PeriodicPotential, beta: f64) -> Result<DiffusionEstimate> {
    check_beta(beta)?;
    let s = v.partition_scalars(beta)?;
    Ok(DiffusionEstimate {
        value: dbar_from(v, &s),
        ci_half_width: 1e-10 * dbar_from(v, &s),
        method: Method::SmoluchowskiFormula,
        gamma: None,
        beta,
    })
}

fn dbar_from(v: &PeriodicPotential, s: &PartitionScalars) -> f64 {
    v.period * v.period / (s.beta * s.z * s.zhat)
}

/// Corrector sampled on `grid` uniform points of `[0, ℓ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corrector {
    pub q: Vec<f64>,
    pub chi: Vec<f64>,
    /// `1 + χ′` at the same points.
    pub one_plus_dchi: Vec<f64>,
    /// `β⁻¹ ∫ (1 + χ′)² dν`, which must equal `D̄`.
    pub energy: f64,
    pub dbar: f64,
}

/// Solves `(e^{−βV}(1 + χ′))′ = 0` with periodic `χ` of zero mean under
/// `ν = e^{−βV}/Z`, using the first integral `1 + χ′ = ℓe^{βV}/Ẑ`.
pub fn corrector_chi(v: &PeriodicPotential, beta: f64, grid: usize) -> Result<Corrector> {
    check_beta(beta)?;
    if grid < 16 {
        return Err(Error::InvalidConfig(format!("corrector grid needs at least 16 points, got {grid}")));
    }
    let s = v.partition_scalars(beta)?;
    let ell = v.period;
    let dchi = |q: f64| ell * (beta * v.value(q)).exp() / s.zhat - 1.0;
    let spec = QuadratureSpec::default();
    let q: Vec<f64> = (0..grid).map(|i| ell * i as f64 / grid as f64).collect();
    // cumulative integral from 0, panel by panel
    let mut raw = Vec::with_capacity(grid);
    let mut acc = 0.0;
    for i in 0..grid {
        if i > 0 {
            acc += quad_interval(dchi, q[i - 1], q[i], &spec)?;
        }
        raw.push(acc);
    }
    // ν-mean of the raw antiderivative, by nested quadrature
    let chi_at = |x: f64| {
        let i = ((x / ell * grid as f64).floor() as usize).min(grid - 1);
        raw[i] + quad_interval(dchi, q[i], x, &spec).unwrap_or(f64::NAN)
    };
    let nu_mean = v.integrate_period(|x| chi_at(x) * (-beta * v.value(x)).exp(), &spec)? / s.z;
    let chi: Vec<f64> = raw.iter().map(|c| c - nu_mean).collect();
    let one_plus_dchi: Vec<f64> = q.iter().map(|&x| 1.0 + dchi(x)).collect();
    let energy = v.integrate_period(
        |x| {
            let g = 1.0 + dchi(x);
            g * g * (-beta * v.value(x)).exp()
        },
        &spec,
    )? / (s.z * beta);
    Ok(Corrector {
        q,
        chi,
        one_plus_dchi,
        energy,
        dbar: dbar_from(v, &s),
    })
}

/// Two terms of the large-friction expansion of `D_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeGammaExpansion {
    pub gamma: f64,
    /// `ℓ²/(βγZẐ)`
    pub leading: f64,
    /// `ℓ²βZ₁/(γ³ZẐ²)`, subtracted from the leading term.
    pub correction: f64,
    pub value: f64,
}

/// `D_γ ≈ ℓ²[1/(βγZẐ) − βZ₁/(γ³ZẐ²)]`; the remainder is `O(γ⁻⁵)`.
pub fn dgamma_large_expansion(v: &PeriodicPotential, beta: f64, gamma: f64) -> Result<LargeGammaExpansion> {
    check_beta(beta)?;
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    let s = v.partition_scalars(beta)?;
    let l2 = v.period * v.period;
    let leading = l2 / (beta * gamma * s.z * s.zhat);
    let correction = l2 * beta * s.z1 / (gamma.powi(3) * s.z * s.zhat * s.zhat);
    Ok(LargeGammaExpansion {
        gamma,
        leading,
        correction,
        value: leading - correction,
    })
}
