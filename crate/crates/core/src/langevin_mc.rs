//! Ensemble simulation of `dq = p dt, dp = −V′(q)dt − γp dt + √(2γ/β) dW` with
//! the BAOAB splitting, and diffusivity estimates from the mean-square
//! displacement.

use crate::error::{Error, Result};
use crate::potential::PeriodicPotential;
use crate::rng::{auxiliary_stream, stream};
use crate::stats::{bootstrap_half_width, mean, ols, relative_trend, variance};
use crate::{DiffusionEstimate, Method};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rejection sampler for `(q, p) ~ e^{−βH}`; the `q` envelope is uniform with
/// bound `e^{−β min V}`.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    potential: PeriodicPotential,
    beta: f64,
    v_min: f64,
}

impl GibbsSampler {
    pub fn new(v: &PeriodicPotential, beta: f64) -> Self {
        let crit = v.critical_points();
        let v_min = if v.is_constant() { v.value(0.0) } else { crit.e_min };
        Self {
            potential: v.clone(),
            beta,
            v_min,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let v = &self.potential;
        let q = loop {
            let q = v.period * rng.random::<f64>();
            let accept = (-self.beta * (v.value(q) - self.v_min)).exp();
            if rng.random::<f64>() < accept {
                break q;
            }
        };
        let xi: f64 = StandardNormal.sample(rng);
        (q, xi / self.beta.sqrt())
    }
}

/// One draw from the Gibbs measure. Builds the sampler on every call; reuse a
/// [`GibbsSampler`] for many draws.
pub fn sample_gibbs<R: Rng>(v: &PeriodicPotential, beta: f64, rng: &mut R) -> (f64, f64) {
    GibbsSampler::new(v, beta).sample(rng)
}

/// Position split into whole periods and a remainder in `[0, ℓ)`, so that long
/// runs keep full precision in the displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub winding: i64,
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64, period: f64) -> Self {
        let mut s = Self { winding: 0, x: q, p };
        s.wrap(period);
        s
    }

    fn wrap(&mut self, period: f64) {
        if self.x < 0.0 || self.x >= period {
            let k = (self.x / period).floor();
            self.winding += k as i64;
            self.x -= k * period;
            if self.x >= period {
                self.winding += 1;
                self.x -= period;
            }
        }
    }

    /// Unwrapped position.
    pub fn q(&self, period: f64) -> f64 {
        self.winding as f64 * period + self.x
    }

    /// Displacement from `origin`, computed without forming large positions.
    pub fn displacement_from(&self, origin: &PhasePoint, period: f64) -> f64 {
        (self.winding - origin.winding) as f64 * period + (self.x - origin.x)
    }
}

/// One BAOAB step (half kick, half drift, exact OU, half drift, half kick).
pub fn step_baoab<R: Rng>(state: &mut PhasePoint, dt: f64, gamma: f64, beta: f64, v: &PeriodicPotential, rng: &mut R) {
    let c = (-gamma * dt).exp();
    let noise = ((1.0 - c * c) / beta).sqrt();
    let mut force = v.force(state.x);
    baoab_with_force(state, &mut force, dt, c, noise, v, rng);
}

/// BAOAB with the force at the current position supplied and updated in place,
/// so consecutive steps share one evaluation.
#[inline]
fn baoab_with_force<R: Rng>(s: &mut PhasePoint, force: &mut f64, dt: f64, c: f64, noise: f64, v: &PeriodicPotential, rng: &mut R) {
    let h = 0.5 * dt;
    s.p += h * *force;
    s.x += h * s.p;
    let xi: f64 = StandardNormal.sample(rng);
    s.p = c * s.p + noise * xi;
    s.x += h * s.p;
    s.wrap(v.period);
    *force = v.force(s.x);
    s.p += h * *force;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub potential: PeriodicPotential,
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Steps between recorded times.
    pub record_stride: usize,
}

impl McConfig {
    /// Defaults: `dt = 0.1·min(1/γ, 1/ω_max)`, `t_end = 50/γ`, 1000 paths and
    /// about 400 recorded times.
    pub fn new(v: PeriodicPotential, beta: f64, gamma: f64) -> Self {
        let dt = Self::max_dt(&v, gamma);
        let t_end = 50.0 / gamma;
        let steps = (t_end / dt).ceil() as usize;
        Self {
            potential: v,
            beta,
            gamma,
            dt,
            t_end,
            n_paths: 1000,
            seed: 0,
            record_stride: (steps / 400).max(1),
        }
    }

    /// `0.1·min(1/γ, 1/ω_max)` with `ω_max² = max|V″|`.
    pub fn max_dt(v: &PeriodicPotential, gamma: f64) -> f64 {
        let omega = v.max_curvature().sqrt();
        let mut bound = f64::INFINITY;
        if gamma > 0.0 {
            bound = bound.min(1.0 / gamma);
        }
        if omega > 0.0 {
            bound = bound.min(1.0 / omega);
        }
        if bound.is_finite() {
            0.1 * bound
        } else {
            0.1
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    /// Sets `t_end` and rescales the stride to keep about 400 records.
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self.record_stride = (self.n_steps() / 400).max(1);
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        if !(self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        let cap = Self::max_dt(&self.potential, self.gamma);
        if !(self.dt > 0.0) || self.dt > cap * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt must lie in (0, {cap:.6e}] (0.1·min(1/γ, 1/ω_max)), got {}",
                self.dt
            )));
        }
        if !(self.t_end > self.dt) {
            return Err(Error::InvalidConfig(format!("t_end must exceed dt, got {}", self.t_end)));
        }
        if self.n_paths < 100 {
            return Err(Error::InvalidConfig(format!("n_paths must be at least 100, got {}", self.n_paths)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    /// Centered second moment of the displacement `q(t) − q(0)` across paths.
    pub msd: Vec<f64>,
    pub p_variance: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// `displacements[r][path]`, kept for resampling.
    #[serde(skip)]
    displacements: Vec<Vec<f64>>,
}

impl TrajectoryEnsemble {
    pub fn displacements(&self) -> &[Vec<f64>] {
        &self.displacements
    }
}

/// Runs the ensemble: every path starts from the Gibbs measure and draws from
/// its own stream, so the result does not depend on the number of workers.
pub fn simulate_ensemble(cfg: &McConfig) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let n_rec = n_steps / cfg.record_stride;
    if n_rec < 2 {
        return Err(Error::InvalidConfig("fewer than two recorded times".into()));
    }
    let sampler = GibbsSampler::new(&cfg.potential, cfg.beta);
    let v = &cfg.potential;
    let ell = v.period;
    let c = (-cfg.gamma * cfg.dt).exp();
    let noise = ((1.0 - c * c) / cfg.beta).sqrt();
    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i as u64);
            let (q0, p0) = sampler.sample(&mut rng);
            let origin = PhasePoint::new(q0, p0, ell);
            let mut s = origin;
            let mut force = v.force(s.x);
            let mut disp = Vec::with_capacity(n_rec);
            let mut mom = Vec::with_capacity(n_rec);
            for _ in 0..n_rec {
                for _ in 0..cfg.record_stride {
                    baoab_with_force(&mut s, &mut force, cfg.dt, c, noise, v, &mut rng);
                }
                disp.push(s.displacement_from(&origin, ell));
                mom.push(s.p);
            }
            (disp, mom)
        })
        .collect();
    let times: Vec<f64> = (1..=n_rec).map(|r| (r * cfg.record_stride) as f64 * cfg.dt).collect();
    let mut displacements = Vec::with_capacity(n_rec);
    let mut msd = Vec::with_capacity(n_rec);
    let mut p_variance = Vec::with_capacity(n_rec);
    for r in 0..n_rec {
        let d: Vec<f64> = paths.iter().map(|p| p.0[r]).collect();
        let m: Vec<f64> = paths.iter().map(|p| p.1[r]).collect();
        msd.push(variance(&d));
        p_variance.push(variance(&m));
        displacements.push(d);
    }
    Ok(TrajectoryEnsemble {
        times,
        msd,
        p_variance,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        displacements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsdFit {
    pub estimate: DiffusionEstimate,
    /// First recorded time after which `msd/2t` stays within 10% of the fit.
    pub tau_diff: f64,
    /// Relative trend of `msd/2t` over the fit window.
    pub trend: f64,
}

/// Maximum relative trend of `msd/2t` across the fit window, beyond the 95%
/// bootstrap half-width of the trend itself.
pub const MAX_TREND: f64 = 0.05;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Line fit of `msd` against `t` over `[t_end/2, t_end]`; `D = slope/2`. The
/// interval is a path-level bootstrap.
pub fn fit_msd(ens: &TrajectoryEnsemble, gamma: Option<f64>, beta: f64, scale: f64) -> Result<MsdFit> {
    let t_end = *ens.times.last().expect("nonempty ensemble");
    let window: Vec<usize> = (0..ens.times.len()).filter(|&r| ens.times[r] >= 0.5 * t_end).collect();
    let tw: Vec<f64> = window.iter().map(|&r| ens.times[r]).collect();
    let mw: Vec<f64> = window.iter().map(|&r| ens.msd[r] * scale).collect();
    let (slope, _) = ols(&tw, &mw);
    let value = 0.5 * slope;
    let ratio: Vec<f64> = tw.iter().zip(&mw).map(|(t, m)| m / (2.0 * t)).collect();
    let trend = relative_trend(&tw, &ratio);
    let resampled_msd = |idx: &[usize]| -> Vec<f64> {
        window
            .iter()
            .map(|&r| {
                let d: Vec<f64> = idx.iter().map(|&i| ens.displacements[r][i]).collect();
                variance(&d) * scale
            })
            .collect()
    };
    // Sampling noise alone gives trends of a few percent at 10³ paths, so the
    // gate fires only when the excess over MAX_TREND is significant.
    let trend_noise = bootstrap_half_width(ens.n_paths, BOOTSTRAP_RESAMPLES, &mut auxiliary_stream(ens.seed, 2), |idx| {
        let m = resampled_msd(idx);
        let ratio: Vec<f64> = tw.iter().zip(&m).map(|(t, m)| m / (2.0 * t)).collect();
        relative_trend(&tw, &ratio)
    });
    if !(trend - trend_noise <= MAX_TREND) {
        return Err(Error::NotDiffusive { trend });
    }
    let mut rng = auxiliary_stream(ens.seed, 1);
    let half_width = bootstrap_half_width(ens.n_paths, BOOTSTRAP_RESAMPLES, &mut rng, |idx| {
        0.5 * ols(&tw, &resampled_msd(idx)).0
    });
    let mut tau_diff = t_end;
    for r in (0..ens.times.len()).rev() {
        let d = ens.msd[r] * scale / (2.0 * ens.times[r]);
        if (d - value).abs() > 0.1 * value.abs() {
            break;
        }
        tau_diff = ens.times[r];
    }
    Ok(MsdFit {
        estimate: DiffusionEstimate {
            value,
            ci_half_width: half_width,
            method: Method::LangevinMsd,
            gamma,
            beta,
        },
        tau_diff,
        trend,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub ensemble: TrajectoryEnsemble,
    pub estimate: DiffusionEstimate,
    pub tau_diff: f64,
    pub trend: f64,
}

pub fn estimate_deff_msd(cfg: &McConfig) -> Result<McResult> {
    if cfg.t_end < 20.0 / cfg.gamma * (1.0 - 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "t_end = {} is shorter than the diffusive time 20/γ = {}",
            cfg.t_end,
            20.0 / cfg.gamma
        )));
    }
    let ensemble = simulate_ensemble(cfg)?;
    let fit = fit_msd(&ensemble, Some(cfg.gamma), cfg.beta, 1.0)?;
    Ok(McResult {
        ensemble,
        estimate: fit.estimate,
        tau_diff: fit.tau_diff,
        trend: fit.trend,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `λ = γ^{1+α}`, `μ = γ^{1+2α}`; the limit is `D*`.
    SmallGamma,
    /// `λ = γ^{−α}`, `μ = γ^{−(1+2α)}`; the limit is `D̄`.
    LargeGamma,
}

/// The rescaled position `q^γ(t) = λ q(t/μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFamily {
    pub kind: FamilyKind,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ScalingFamily {
    pub fn small_gamma(alpha: f64, gamma: f64) -> Result<Self> {
        Self::check(alpha, gamma)?;
        Ok(Self {
            kind: FamilyKind::SmallGamma,
            alpha,
            gamma,
            lambda: gamma.powf(1.0 + alpha),
            mu: gamma.powf(1.0 + 2.0 * alpha),
        })
    }

    pub fn large_gamma(alpha: f64, gamma: f64) -> Result<Self> {
        Self::check(alpha, gamma)?;
        Ok(Self {
            kind: FamilyKind::LargeGamma,
            alpha,
            gamma,
            lambda: gamma.powf(-alpha),
            mu: gamma.powf(-(1.0 + 2.0 * alpha)),
        })
    }

    fn check(alpha: f64, gamma: f64) -> Result<()> {
        if !(alpha >= 0.0) || !(gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("need alpha >= 0 and gamma > 0, got {alpha}, {gamma}")));
        }
        Ok(())
    }

    /// `λ²/μ`, the factor relating the rescaled variance to the original one.
    pub fn variance_factor(&self) -> f64 {
        self.lambda * self.lambda / self.mu
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledCheck {
    pub family: ScalingFamily,
    /// Rescaled times.
    pub times: Vec<f64>,
    pub variance: Vec<f64>,
    pub slope: f64,
    pub estimate: DiffusionEstimate,
}

/// Simulates the original dynamics at `family.gamma` up to `t_end/μ` and
/// returns `var(q^γ(t))` against rescaled time `t ≤ t_end`; `slope/2` is the
/// diffusivity of the rescaled process. `cfg.t_end` is in rescaled units and
/// `cfg.gamma` must equal `family.gamma`.
pub fn rescaled_process_check(family: &ScalingFamily, cfg: &McConfig) -> Result<RescaledCheck> {
    if family.kind == FamilyKind::SmallGamma && !(family.alpha > 0.5) {
        return Err(Error::InvalidConfig(format!(
            "the small-friction family needs alpha > 1/2, got {}",
            family.alpha
        )));
    }
    if (cfg.gamma - family.gamma).abs() > 1e-14 * family.gamma {
        return Err(Error::InvalidConfig(format!(
            "configuration gamma {} differs from the family's {}",
            cfg.gamma, family.gamma
        )));
    }
    let original = cfg.clone().with_t_end(cfg.t_end / family.mu);
    let ens = simulate_ensemble(&original)?;
    let scale = family.lambda * family.lambda;
    let fit = fit_msd(&ens, Some(family.gamma), cfg.beta, scale)?;
    let method = Method::RescaledVariance;
    Ok(RescaledCheck {
        family: *family,
        times: ens.times.iter().map(|t| t * family.mu).collect(),
        variance: ens.msd.iter().map(|m| m * scale).collect(),
        // rescaled time runs μ times faster: d/dt_resc = μ⁻¹ d/dt
        slope: 2.0 * fit.estimate.value / family.mu,
        estimate: DiffusionEstimate {
            value: fit.estimate.value / family.mu,
            ci_half_width: fit.estimate.ci_half_width / family.mu,
            method,
            gamma: Some(family.gamma),
            beta: cfg.beta,
        },
    })
}

/// Sample mean of the final momentum variance relative to `1/β`.
pub fn stationarity_defect(ens: &TrajectoryEnsemble, beta: f64) -> f64 {
    (mean(&ens.p_variance) * beta - 1.0).abs()
}
