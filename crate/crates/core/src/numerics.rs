//! Quadrature and root-finding kernels shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs. Integrands are passed as
//! closures; the routines never retain them.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinements: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_refinements < 1 {
            return Err(Error::InvalidConfig(format!(
                "quadrature spec needs abs_tol > 0, rel_tol > 0, max_refinements >= 1 \
                 (got {abs_tol}, {rel_tol}, {max_refinements})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_refinements,
        })
    }

    fn accept(&self, value: f64, err: f64) -> bool {
        err <= self.abs_tol.max(self.rel_tol * value.abs())
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_refinements: 18,
        }
    }
}

/// Interval whose endpoints carry opposite signs of some function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidConfig(format!("bracket needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Bisection down to `tol` in the abscissa. The caller guarantees a sign
    /// change; if there is none the endpoint with smaller |f| is returned.
    pub fn bisect<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> f64 {
        let (mut lo, mut hi) = (self.lo, self.hi);
        let mut flo = f(lo);
        let fhi = f(hi);
        if flo == 0.0 {
            return lo;
        }
        if fhi == 0.0 {
            return hi;
        }
        if flo.signum() == fhi.signum() {
            return if flo.abs() < fhi.abs() { lo } else { hi };
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= tol || mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// ∫₀¹ f(q) dq for smooth 1-periodic `f`.
///
/// Trapezoid rule with dyadic refinement; stops when two successive levels
/// agree to tolerance.
pub fn quad_periodic<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    let mut n = 16usize;
    let mut sum: f64 = (0..n).map(|j| f(j as f64 / n as f64)).sum();
    let mut prev = sum / n as f64;
    let mut prev_diff = f64::INFINITY;
    for level in 0..spec.max_refinements {
        let mid: f64 = (0..n).map(|j| f((j as f64 + 0.5) / n as f64)).sum();
        sum += mid;
        n *= 2;
        let cur = sum / n as f64;
        let diff = (cur - prev).abs();
        // two consecutive small differences guard against both levels missing a peak
        if level >= 1 && spec.accept(cur, diff) && spec.accept(cur, prev_diff.min(1e3 * diff)) {
            return Ok(cur);
        }
        prev_diff = diff;
        prev = cur;
    }
    Err(Error::NonConvergence {
        what: "periodic trapezoid",
        estimate: prev,
        error: prev_diff,
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) on a finite interval. Endpoints are
/// never evaluated, so integrable endpoint singularities are allowed.
pub fn quad_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (i0, e0) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, i0, e0)];
    let max_parts = 64 * spec.max_refinements.max(4);
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if spec.accept(total, err) {
            return Ok(sign * total);
        }
        if parts.len() >= max_parts {
            return Err(Error::NonConvergence {
                what: "adaptive Gauss-Kronrod",
                estimate: sign * total,
                error: err,
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (pa, pb, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval cannot be split further in floating point
            let total: f64 = parts.iter().map(|p| p.2).sum();
            return Err(Error::NonConvergence {
                what: "adaptive Gauss-Kronrod (interval underflow)",
                estimate: sign * total,
                error: err,
            });
        }
        let (l, le) = gk15(&f, pa, mid);
        let (r, re) = gk15(&f, mid, pb);
        parts.push((pa, mid, l, le));
        parts.push((mid, pb, r, re));
    }
}

/// ∫_{z_lo}^∞ g(z) e^{−βz} dz.
///
/// `[z_lo, z_lo + 1]` is integrated in the variable `u` with
/// `z = z_lo + e^{−u}`, which turns logarithmic and inverse-power endpoint
/// behaviour into exponential decay in `u`. The tail is covered by geometrically
/// growing Gauss–Kronrod panels scaled by `1/β`.
pub fn quad_exp_tail<G: Fn(f64) -> f64>(g: G, beta: f64, z_lo: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("quad_exp_tail needs beta > 0, got {beta}")));
    }
    // Work relative to e^{-β z_lo} so that large |z_lo| does not under/overflow.
    let head_integrand = |u: f64| {
        let t = (-u).exp();
        g(z_lo + t) * (-beta * t).exp() * t
    };
    // smallest offset that still moves z away from z_lo in floating point
    let u_max = if z_lo == 0.0 {
        700.0
    } else {
        (-(4.0 * f64::EPSILON * z_lo.abs()).ln()).min(700.0)
    };
    let panel_spec = spec.scaled(0.1);
    let mut head = 0.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    while a < u_max {
        let b_clamped = b.min(u_max);
        let part = quad_interval(head_integrand, a, b_clamped, &panel_spec)?;
        head += part;
        if a >= 8.0 && part.abs() <= 1e-3 * spec.abs_tol.max(spec.rel_tol * head.abs()) {
            break;
        }
        a = b_clamped;
        b *= 2.0;
    }

    let start = z_lo + 1.0;
    let tail_integrand = |t: f64| g(start + t) * (-beta * (1.0 + t)).exp();
    let mut tail = 0.0;
    let mut lo = 0.0;
    let mut width = 1.0 / beta;
    loop {
        let part = quad_interval(tail_integrand, lo, lo + width, &panel_spec)?;
        tail += part;
        lo += width;
        width *= 2.0;
        let scale = (head + tail).abs();
        if part.abs() <= 1e-3 * spec.abs_tol.max(spec.rel_tol * scale) || beta * lo > 740.0 {
            break;
        }
    }
    Ok((head + tail) * (-beta * z_lo).exp())
}

/// A root located by [`find_roots_on_torus`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// |f'| at the root is below tolerance, or the root is a tangency.
    pub degenerate: bool,
}

pub const ROOT_SCAN_POINTS: usize = 4096;

/// All roots of a 1-periodic function on `[0, 1)`, sorted ascending.
pub fn find_roots_on_torus<F: Fn(f64) -> f64>(f: F, tol: f64) -> Vec<Root> {
    find_roots_on_torus_with_grid(f, tol, ROOT_SCAN_POINTS)
}

pub fn find_roots_on_torus_with_grid<F: Fn(f64) -> f64>(f: F, tol: f64, grid: usize) -> Vec<Root> {
    let n = grid.max(8);
    let h = 1.0 / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let scale = fs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let wrap = |x: f64| x - x.floor();
    let deriv = |x: f64| {
        let d = 1e-6;
        (f(wrap(x + d)) - f(wrap(x - d))) / (2.0 * d)
    };
    let dscale = (0..n)
        .map(|i| ((fs[(i + 1) % n] - fs[i]) / h).abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut roots = Vec::new();
    for i in 0..n {
        let (fa, fb) = (fs[i], fs[(i + 1) % n]);
        let prev = fs[(i + n - 1) % n];
        if fa == 0.0 {
            let tangent = prev.signum() == fb.signum() && prev != 0.0;
            let d = deriv(xs[i]);
            roots.push(Root {
                x: xs[i],
                degenerate: tangent || d.abs() < tol.max(1e-9 * dscale),
            });
            continue;
        }
        if fb != 0.0 && fa.signum() != fb.signum() {
            let lo = xs[i];
            let bracket = Bracket { lo, hi: lo + h };
            let x = wrap(bracket.bisect(|x| f(wrap(x)), tol.max(1e-15)));
            let d = deriv(x);
            roots.push(Root {
                x,
                degenerate: d.abs() < tol.max(1e-9 * dscale),
            });
            continue;
        }
        // tangency between grid points: |f| has a near-zero interior minimum
        let fa_abs = fa.abs();
        if fb != 0.0 && fa_abs < prev.abs() && fa_abs <= fb.abs() && prev.signum() == fa.signum() && fa_abs < 1e-3 * scale
        {
            let x = golden_min(|x| f(wrap(x)).abs(), xs[i] - h, xs[i] + h, tol.max(1e-14));
            if f(wrap(x)).abs() <= 10.0 * tol * scale {
                roots.push(Root {
                    x: wrap(x),
                    degenerate: true,
                });
            }
        }
    }
    roots.sort_by(|a, b| a.x.total_cmp(&b.x));
    // merge duplicates found from adjacent intervals, including across the seam
    let mut merged: Vec<Root> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(last) = merged.last_mut() {
            if (r.x - last.x).abs() < 4.0 * tol.max(1e-12) {
                last.degenerate |= r.degenerate;
                continue;
            }
        }
        merged.push(r);
    }
    if merged.len() > 1 {
        let first = merged[0];
        let last = merged[merged.len() - 1];
        if 1.0 - last.x + first.x < 4.0 * tol.max(1e-12) {
            merged[0].degenerate |= last.degenerate;
            merged.pop();
        }
    }
    merged
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Gauss–Hermite rule for the standard normal weight (probabilists'
/// convention): Σ wᵢ f(xᵢ) ≈ E[f(X)], X ~ N(0,1). Golub–Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Hermite nodes for the standard normal weight with *scaled* weights
/// `wᵢ·e^{xᵢ²/2}`, computed from the Christoffel formula with normalized
/// Hermite functions so that no weight underflows at high order.
pub fn gauss_hermite_scaled(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_hermite_scaled_within(n, f64::INFINITY)
}

/// As [`gauss_hermite_scaled`], keeping only nodes with `|x| ≤ cutoff`. Nodes
/// are located by Sturm-count bisection on the Jacobi matrix, so the cost is
/// `O(n)` per node instead of a dense eigensolve.
pub fn gauss_hermite_scaled_within(n: usize, cutoff: f64) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(1);
    let bound = 2.0 * (n as f64).sqrt() + 1.0;
    let (lo, hi) = (-cutoff.min(bound), cutoff.min(bound));
    let (first, last) = (sturm_count(n, lo), sturm_count(n, hi));
    let x: Vec<f64> = (first..last).map(|k| kth_node(n, k, lo, hi)).collect();
    let w = x
        .iter()
        .map(|&xi| {
            let mut prev = 0.0;
            let mut cur = (-0.25 * xi * xi).exp();
            let mut sum = cur * cur;
            for k in 0..n - 1 {
                let next = (xi * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            1.0 / sum
        })
        .collect();
    (x, w)
}

/// Number of eigenvalues of the `n×n` Hermite Jacobi matrix below `x`.
fn sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = -x;
    for i in 0..n {
        if i > 0 {
            d = -x - i as f64 / d;
        }
        if d == 0.0 {
            d = -f64::EPSILON;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn kth_node(n: usize, k: usize, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(n, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`, never on how work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// I_ν(x) by its power series.
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
    fn periodic_examples() {
        let spec = QuadratureSpec::default();
        assert!(quad_periodic(|q| (2.0 * PI * q).cos(), &spec).unwrap().abs() < 1e-13);
        assert!((quad_periodic(|_| 1.0, &spec).unwrap() - 1.0).abs() < 1e-15);
        let v = quad_periodic(|q| (-(2.0 * PI * q).cos()).exp(), &spec).unwrap();
        assert!((v - bessel_i(0, 1.0)).abs() < 1e-12);
        assert!((v - 1.266066).abs() < 1e-6);
    }

    #[test]
    fn periodic_harmonics_vanish() {
        let spec = QuadratureSpec::default();
        for k in 1..20 {
            let c = quad_periodic(|q| (2.0 * PI * k as f64 * q).cos(), &spec).unwrap();
            let s = quad_periodic(|q| (2.0 * PI * k as f64 * q + 0.3).sin(), &spec).unwrap();
            assert!(c.abs() < spec.abs_tol && s.abs() < spec.abs_tol, "k={k}: {c} {s}");
        }
    }

    #[test]
    fn exp_tail_examples() {
        let spec = QuadratureSpec::default();
        let a = quad_exp_tail(|z| (2.0 * z).powf(-0.5), 1.0, 0.0, &spec).unwrap();
        assert!((a - (PI / 2.0).sqrt()).abs() < 1e-9, "{a}");
        let b = quad_exp_tail(|_| 1.0, 2.0, 0.0, &spec).unwrap();
        assert!((b - 0.5).abs() < 1e-12);
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let c = quad_exp_tail(|z: f64| z.ln().abs(), 1.0, 0.0, &spec).unwrap();
        // ∫₀^∞ |ln z| e^{-z} dz = γ_E + 2 E₁(1); brute force on split intervals as a second route
        const E1_OF_1: f64 = 0.219_383_934_395_520_3;
        assert!((c - (EULER_GAMMA + 2.0 * E1_OF_1)).abs() < 1e-10, "{c}");
        let brute = quad_interval(|z: f64| -z.ln() * (-z).exp(), 0.0, 1.0, &spec).unwrap()
            + quad_interval(|z: f64| z.ln() * (-z).exp(), 1.0, 60.0, &spec).unwrap();
        assert!((c - brute).abs() < 1e-10, "{c} vs {brute}");
        // the signed integral is −γ_E
        let signed = quad_exp_tail(|z: f64| z.ln(), 1.0, 0.0, &spec).unwrap();
        assert!((signed + EULER_GAMMA).abs() < 1e-10, "{signed}");
    }

    #[test]
    fn exp_tail_rejects_nonpositive_beta() {
        let spec = QuadratureSpec::default();
        assert!(matches!(quad_exp_tail(|_| 1.0, 0.0, 0.0, &spec), Err(Error::Domain(_))));
        assert!(matches!(quad_exp_tail(|_| 1.0, -1.0, 0.0, &spec), Err(Error::Domain(_))));
    }

    #[test]
    fn roots_examples() {
        let r = find_roots_on_torus(|q| (2.0 * PI * q).sin(), 1e-10);
        assert_eq!(r.len(), 2);
        assert!(r[0].x.abs() < 1e-10 && (r[1].x - 0.5).abs() < 1e-10);
        assert!(!r[0].degenerate && !r[1].degenerate);

        let r = find_roots_on_torus(|q| (2.0 * PI * q).cos() - 0.5, 1e-10);
        assert_eq!(r.len(), 2);
        assert!((r[0].x - 1.0 / 6.0).abs() < 1e-10 && (r[1].x - 5.0 / 6.0).abs() < 1e-10);

        let r = find_roots_on_torus(|q| (2.0 * PI * q).cos() - 1.0, 1e-10);
        assert_eq!(r.len(), 1);
        assert!(r[0].x.abs() < 1e-10 && r[0].degenerate);
    }

    #[test]
    fn tangent_root_off_grid_is_flagged() {
        let r = find_roots_on_torus(|q| (2.0 * PI * (q - 0.123_456_7)).cos() - 1.0, 1e-10);
        assert_eq!(r.len(), 1);
        assert!((r[0].x - 0.123_456_7).abs() < 1e-4);
        assert!(r[0].degenerate);
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn scaled_gauss_hermite_matches_plain_weights() {
        let (x, w) = gauss_hermite(30);
        let (xs, ws) = gauss_hermite_scaled(30);
        for i in 0..30 {
            assert!((x[i] - xs[i]).abs() < 1e-12 * (1.0 + x[i].abs()), "{} vs {}", x[i], xs[i]);
            let plain = ws[i] * (-0.5 * xs[i] * xs[i]).exp();
            // eigenvector weights are only accurate in absolute terms
            assert!((plain - w[i]).abs() < 1e-12 * w[i] + 1e-15, "{i}: {plain} vs {}", w[i]);
        }
        for (k, moment) in [(2, 1.0), (4, 3.0), (6, 15.0), (8, 105.0)] {
            let m: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (-0.5 * x * x).exp() * x.powi(k)).sum();
            assert!((m - moment).abs() < 1e-11 * moment);
        }
        let (x, ws) = gauss_hermite_scaled(400);
        assert!(ws.iter().all(|w| w.is_finite() && *w > 0.0));
        let m2: f64 = x.iter().zip(&ws).map(|(x, w)| w * (-0.5 * x * x).exp() * x * x).sum();
        assert!((m2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn windowed_nodes_are_a_subset() {
        let (x, w) = gauss_hermite_scaled(80);
        let (xw, ww) = gauss_hermite_scaled_within(80, 3.0);
        let inside: Vec<usize> = (0..80).filter(|&i| x[i].abs() <= 3.0).collect();
        assert_eq!(inside.len(), xw.len());
        for (k, &i) in inside.iter().enumerate() {
            assert_eq!(x[i], xw[k]);
            assert_eq!(w[i], ww[k]);
        }
    }

    #[test]
    fn bracket_validates() {
        assert!(Bracket::new(1.0, 0.0).is_err());
        let b = Bracket::new(0.0, 2.0).unwrap();
        assert!((b.bisect(|x| x * x - 2.0, 1e-14) - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn quadrature_spec_validates() {
        assert!(QuadratureSpec::new(0.0, 1e-8, 4).is_err());
        assert!(QuadratureSpec::new(1e-8, -1.0, 4).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-8, 0).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-8, 1).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn exp_tail_translation_covariance(shift in -3.0f64..3.0, beta in 0.3f64..4.0) {
                let spec = QuadratureSpec::default();
                let g = |t: f64| 1.0 / (1.0 + t).sqrt() + (t + 0.5).ln().abs();
                let shifted = quad_exp_tail(|z| g(z - shift), beta, shift, &spec).unwrap();
                let base = quad_exp_tail(g, beta, 0.0, &spec).unwrap();
                let expected = (-beta * shift).exp() * base;
                prop_assert!((shifted - expected).abs() <= 1e-9 * expected.abs());
            }

            #[test]
            fn roots_are_small(a in 0.1f64..2.0, c in -0.9f64..0.9, phase in 0.0f64..1.0) {
                let f = |q: f64| a * (2.0 * PI * (q - phase)).cos() + c * a;
                let tol = 1e-10;
                let scale = 2.0 * a;
                for r in find_roots_on_torus(f, tol) {
                    prop_assert!(r.x >= 0.0 && r.x < 1.0);
                    prop_assert!(f(r.x).abs() <= 10.0 * tol * scale);
                }
            }
        }
    }
}
