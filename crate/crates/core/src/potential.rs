//! Smooth periodic potentials given as truncated Fourier series.

use crate::error::{Error, Result};
use crate::numerics::{find_roots_on_torus, quad_periodic, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `V(q) = c + Σₖ aₖ cos(2πkq/ℓ) + bₖ sin(2πkq/ℓ)`, `k = 1, 2, …`.
///
/// JSON form: `{"cos": [a1, a2, ...], "sin": [b1, ...], "period": 1.0}` with an
/// optional constant `"const"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicPotential {
    #[serde(rename = "cos", default)]
    pub cosine_coeffs: Vec<f64>,
    #[serde(rename = "sin", default)]
    pub sine_coeffs: Vec<f64>,
    #[serde(default = "unit_period")]
    pub period: f64,
    #[serde(rename = "const", default, skip_serializing_if = "is_zero")]
    pub offset: f64,
}

fn unit_period() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub q: f64,
    pub energy: f64,
}

/// Critical points of `V` on one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub minima: Vec<CriticalPoint>,
    pub maxima: Vec<CriticalPoint>,
    pub e_min: f64,
    /// Global maximum of `V`; the energy where the rotational orbits begin.
    pub e0: f64,
    pub degenerate: bool,
}

impl CriticalSet {
    /// Location of the global maximum (first one if several share the value).
    pub fn global_max(&self) -> Option<CriticalPoint> {
        self.maxima.iter().copied().max_by(|a, b| a.energy.total_cmp(&b.energy))
    }

    pub fn global_min(&self) -> Option<CriticalPoint> {
        self.minima.iter().copied().min_by(|a, b| a.energy.total_cmp(&b.energy))
    }
}

/// `Z = ∫e^{−βV}`, `Ẑ = ∫e^{βV}`, `Z₁ = ∫(V′)²e^{βV}`, all over `[0, ℓ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionScalars {
    pub z: f64,
    pub zhat: f64,
    pub z1: f64,
    pub beta: f64,
}

/// |V″| below this at a critical point marks the potential as non-Morse.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

impl PeriodicPotential {
    pub fn new(cosine_coeffs: Vec<f64>, sine_coeffs: Vec<f64>, period: f64) -> Result<Self> {
        let v = Self {
            cosine_coeffs,
            sine_coeffs,
            period,
            offset: 0.0,
        };
        v.validate()?;
        Ok(v)
    }

    /// `cos(2πq)`.
    pub fn pendulum() -> Self {
        Self {
            cosine_coeffs: vec![1.0],
            sine_coeffs: vec![],
            period: 1.0,
            offset: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            cosine_coeffs: vec![],
            sine_coeffs: vec![],
            period: 1.0,
            offset: 0.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "pendulum" | "cos" => Some(Self::pendulum()),
            "zero" | "free" | "flat" => Some(Self::zero()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("potential JSON: {e}")))?;
        v.validate()?;
        Ok(v)
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidConfig(format!("period must be positive, got {}", self.period)));
        }
        let finite = self
            .cosine_coeffs
            .iter()
            .chain(&self.sine_coeffs)
            .chain(std::iter::once(&self.offset))
            .all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("potential coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Highest wavenumber with a nonzero coefficient.
    pub fn modes(&self) -> usize {
        let last = |c: &[f64]| c.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
        last(&self.cosine_coeffs).max(last(&self.sine_coeffs))
    }

    pub fn is_constant(&self) -> bool {
        self.modes() == 0
    }

    /// Angular wavenumber `2πk/ℓ`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    fn coeff(c: &[f64], k: usize) -> f64 {
        c.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `V`, `V′` or `V″` at `q` for `order` 0, 1 or 2.
    ///
    /// # Panics
    /// If `order > 2`.
    pub fn eval(&self, q: f64, order: u8) -> f64 {
        assert!(order <= 2, "potential derivatives are available up to order 2");
        let mut acc = if order == 0 { self.offset } else { 0.0 };
        for k in 1..=self.modes() {
            let a = Self::coeff(&self.cosine_coeffs, k);
            let b = Self::coeff(&self.sine_coeffs, k);
            let w = self.wavenumber(k);
            let (s, c) = (w * q).sin_cos();
            acc += match order {
                0 => a * c + b * s,
                1 => w * (-a * s + b * c),
                _ => -w * w * (a * c + b * s),
            };
        }
        acc
    }

    pub fn value(&self, q: f64) -> f64 {
        self.eval(q, 0)
    }

    pub fn force(&self, q: f64) -> f64 {
        -self.eval(q, 1)
    }

    /// `V(q) − V(r)` without cancellation when `q ≈ r`.
    pub fn difference(&self, q: f64, r: f64) -> f64 {
        self.increment(r, q - r)
    }

    /// `V(r + dq) − V(r)` via product formulas for differences of sines and
    /// cosines; accurate to full relative precision for small `dq`.
    pub fn increment(&self, r: f64, dq: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.modes() {
            let w = self.wavenumber(k);
            let half_gap = (0.5 * w * dq).sin();
            let (s_mid, c_mid) = (w * (r + 0.5 * dq)).sin_cos();
            let a = Self::coeff(&self.cosine_coeffs, k);
            let b = Self::coeff(&self.sine_coeffs, k);
            acc += 2.0 * half_gap * (b * c_mid - a * s_mid);
        }
        acc
    }

    /// Coefficients of `V′` in the same cosine/sine layout.
    pub fn derivative_coeffs(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.modes();
        let mut c = vec![0.0; n];
        let mut s = vec![0.0; n];
        for k in 1..=n {
            let w = self.wavenumber(k);
            c[k - 1] = w * Self::coeff(&self.sine_coeffs, k);
            s[k - 1] = -w * Self::coeff(&self.cosine_coeffs, k);
        }
        (c, s)
    }

    /// The potential `q ↦ V(q − shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        let n = self.modes();
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for k in 1..=n {
            let a = Self::coeff(&self.cosine_coeffs, k);
            let b = Self::coeff(&self.sine_coeffs, k);
            let (s, c) = (self.wavenumber(k) * shift).sin_cos();
            cos[k - 1] = a * c - b * s;
            sin[k - 1] = a * s + b * c;
        }
        Self {
            cosine_coeffs: cos,
            sine_coeffs: sin,
            period: self.period,
            offset: self.offset,
        }
    }

    /// Upper bound on `|V″|` over a period (the square of the fastest harmonic
    /// frequency).
    pub fn max_curvature(&self) -> f64 {
        (1..=self.modes())
            .map(|k| {
                let w = self.wavenumber(k);
                w * w * Self::coeff(&self.cosine_coeffs, k).hypot(Self::coeff(&self.sine_coeffs, k))
            })
            .sum()
    }

    pub fn critical_points(&self) -> CriticalSet {
        if self.is_constant() {
            return CriticalSet {
                minima: vec![],
                maxima: vec![],
                e_min: self.offset,
                e0: self.offset,
                degenerate: true,
            };
        }
        let ell = self.period;
        // scale-free root tolerance in the unit variable
        let roots = find_roots_on_torus(|x| self.eval(ell * x, 1), 1e-14);
        let mut minima = Vec::new();
        let mut maxima = Vec::new();
        let mut degenerate = false;
        for r in roots {
            let q = r.x * ell;
            let curvature = self.eval(q, 2);
            let point = CriticalPoint {
                q,
                energy: self.value(q),
            };
            if curvature.abs() < DEGENERACY_THRESHOLD || r.degenerate {
                degenerate = true;
            }
            if curvature > 0.0 {
                minima.push(point);
            } else {
                maxima.push(point);
            }
        }
        let e_min = minima.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
        let e0 = maxima.iter().map(|p| p.energy).fold(f64::NEG_INFINITY, f64::max);
        CriticalSet {
            minima,
            maxima,
            e_min,
            e0,
            degenerate,
        }
    }

    /// Integral of `f(q)` over one period `[0, ℓ]`.
    pub fn integrate_period<F: Fn(f64) -> f64>(&self, f: F, spec: &QuadratureSpec) -> Result<f64> {
        let ell = self.period;
        Ok(ell * quad_periodic(|x| f(ell * x), spec)?)
    }

    pub fn partition_scalars(&self, beta: f64) -> Result<PartitionScalars> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        let spec = QuadratureSpec::default();
        let z = self.integrate_period(|q| (-beta * self.value(q)).exp(), &spec)?;
        let zhat = self.integrate_period(|q| (beta * self.value(q)).exp(), &spec)?;
        let z1 = self.integrate_period(
            |q| {
                let d = self.eval(q, 1);
                d * d * (beta * self.value(q)).exp()
            },
            &spec,
        )?;
        Ok(PartitionScalars { z, zhat, z1, beta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_i(nu: i32, x: f64) -> f64 {
        let mut term = (0.5 * x).powi(nu) / (1..=nu).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..40 {
            term *= (0.25 * x * x) / (k as f64 * (k + nu) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn eval_examples() {
        let v = PeriodicPotential::pendulum();
        assert!((v.eval(0.0, 0) - 1.0).abs() < 1e-15);
        assert!((v.eval(0.25, 1) + 2.0 * PI).abs() < 1e-12);
        assert!((v.eval(0.5, 2) - 4.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn increment_is_cancellation_free() {
        let v = PeriodicPotential::new(vec![1.0, 0.3], vec![0.2], 1.0).unwrap();
        let r = 0.123;
        let dq = 1e-9;
        let exact = v.eval(r, 1) * dq + 0.5 * v.eval(r, 2) * dq * dq;
        assert!((v.increment(r, dq) - exact).abs() < 1e-12 * exact.abs());
        assert!((v.difference(0.7, 0.2) - (v.value(0.7) - v.value(0.2))).abs() < 1e-14);
    }

    #[test]
    #[should_panic]
    fn eval_rejects_third_derivative() {
        PeriodicPotential::pendulum().eval(0.0, 3);
    }

    #[test]
    fn pendulum_critical_points() {
        let c = PeriodicPotential::pendulum().critical_points();
        assert_eq!(c.maxima.len(), 1);
        assert_eq!(c.minima.len(), 1);
        assert!(c.maxima[0].q.abs() < 1e-12 && (c.maxima[0].energy - 1.0).abs() < 1e-15);
        assert!((c.minima[0].q - 0.5).abs() < 1e-12 && (c.minima[0].energy + 1.0).abs() < 1e-15);
        assert_eq!((c.e0, c.e_min), (1.0, -1.0));
        assert!(!c.degenerate);
    }

    #[test]
    fn zero_potential_is_degenerate() {
        let c = PeriodicPotential::zero().critical_points();
        assert!(c.minima.is_empty() && c.maxima.is_empty());
        assert!(c.degenerate);
        assert_eq!((c.e0, c.e_min), (0.0, 0.0));
    }

    #[test]
    fn two_well_global_max_matches_grid_scan() {
        let v = PeriodicPotential::new(vec![1.0, 0.3], vec![], 1.0).unwrap();
        let c = v.critical_points();
        assert_eq!(c.maxima.len(), 2);
        assert_eq!(c.minima.len(), 2);
        let n = 1_000_000;
        let grid_max = (0..n).map(|i| v.value(i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
        assert!((c.e0 - grid_max).abs() < 1e-9, "{} vs {grid_max}", c.e0);
        assert!((c.maxima[0].energy - c.maxima[1].energy).abs() > 0.1);
    }

    #[test]
    fn inflection_flags_degenerate() {
        // V′ = 2π(sin 2πq)(...) with a double root: V = cos(2πq) - cos(4πq)/4 has V″(0) = 0
        let v = PeriodicPotential::new(vec![1.0, -0.25], vec![], 1.0).unwrap();
        assert!(v.eval(0.0, 2).abs() < 1e-12);
        assert!(v.critical_points().degenerate);
    }

    #[test]
    fn partition_examples() {
        let s = PeriodicPotential::zero().partition_scalars(1.0).unwrap();
        assert!((s.z - 1.0).abs() < 1e-14 && (s.zhat - 1.0).abs() < 1e-14 && s.z1 == 0.0);

        let s = PeriodicPotential::pendulum().partition_scalars(1.0).unwrap();
        assert!((s.z - bessel_i(0, 1.0)).abs() < 1e-12);
        assert!((s.zhat - bessel_i(0, 1.0)).abs() < 1e-12);
        assert!((s.z1 - 4.0 * PI * PI * bessel_i(1, 1.0)).abs() < 1e-10);
        assert!((s.z - 1.266066).abs() < 1e-6 && (s.z1 - 22.311_587).abs() < 1e-5);

        let s = PeriodicPotential::pendulum().partition_scalars(2.0).unwrap();
        assert!((s.z - bessel_i(0, 2.0)).abs() < 1e-11 && (s.z - 2.279585).abs() < 1e-6);
    }

    #[test]
    fn period_scaling_of_partition() {
        let v = PeriodicPotential::new(vec![1.0], vec![], 2.5).unwrap();
        let s = v.partition_scalars(1.0).unwrap();
        assert!((s.z - 2.5 * bessel_i(0, 1.0)).abs() < 1e-11);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let v = PeriodicPotential::from_json(r#"{"cos": [1.0, 0.3], "sin": [0.1], "period": 1.0}"#).unwrap();
        assert_eq!(v.modes(), 2);
        let back = PeriodicPotential::from_json(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, back);
        assert!(PeriodicPotential::from_json(r#"{"cos": [1.0], "period": -1}"#).is_err());
        assert!(PeriodicPotential::from_json(r#"{"cos": [1.0], "bogus": 2}"#).is_err());
        let d = PeriodicPotential::from_json(r#"{"cos": [1.0]}"#).unwrap();
        assert_eq!(d.period, 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn potential() -> impl Strategy<Value = PeriodicPotential> {
            (
                proptest::collection::vec(-1.0f64..1.0, 1..4),
                proptest::collection::vec(-1.0f64..1.0, 0..4),
                0.5f64..2.0,
            )
                .prop_map(|(c, s, l)| PeriodicPotential::new(c, s, l).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn derivative_matches_central_difference(v in potential(), q in 0.0f64..1.0) {
                let h = 1e-5;
                let fd = (v.value(q + h) - v.value(q - h)) / (2.0 * h);
                let exact = v.eval(q, 1);
                let scale = v.max_curvature().sqrt().max(1.0);
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(scale));
            }

            #[test]
            fn z_times_zhat_at_least_one(v in potential(), beta in 0.1f64..3.0) {
                let s = v.partition_scalars(beta).unwrap();
                let ell = v.period;
                prop_assert!(s.z * s.zhat >= ell * ell * (1.0 - 1e-12));
                prop_assert!(s.z > 0.0 && s.zhat > 0.0 && s.z1 >= 0.0);
            }

            #[test]
            fn partition_translation_invariant(v in potential(), shift in 0.0f64..1.0, beta in 0.2f64..2.0) {
                let a = v.partition_scalars(beta).unwrap();
                let b = v.shifted(shift).partition_scalars(beta).unwrap();
                prop_assert!((a.z - b.z).abs() <= 1e-10 * a.z);
                prop_assert!((a.zhat - b.zhat).abs() <= 1e-10 * a.zhat);
                prop_assert!((a.z1 - b.z1).abs() <= 1e-9 * a.z1.max(1.0));
            }
        }
    }
}
