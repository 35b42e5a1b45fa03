//! Hermite × Fourier Galerkin discretization of the cell problem
//! `−L_γ φ = p`, with `L_γ = γ⁻¹(p∂_q − V′∂_p) + β⁻¹∂_p² − p∂_p`.
//!
//! Basis functions are `h_n(p) f_j(q)`: `h_n` the Hermite polynomials
//! orthonormal for `N(0, 1/β)` and `f_j` the real Fourier modes
//! `1, cos(2πkq/ℓ), sin(2πkq/ℓ)` for `k ≤ K` (`K = n_fourier`). In this basis the
//! Ornstein–Uhlenbeck part is `diag(n)`, `p` and `∂_p` are ladder operators, and
//! multiplication by `V′` is an exact finite convolution, so the operator is
//! block tridiagonal in `n` with no quadrature error. The constant mode `(0, 0)`
//! is removed to fix the mean.

mod solver;
pub mod sparse;

use crate::error::{Error, Result};
use crate::numerics::gauss_hermite_scaled_within;
use crate::potential::PeriodicPotential;
use crate::{DiffusionEstimate, Method};
use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};
use sparse::CsrMatrix;
use std::f64::consts::PI;

pub use solver::{Preconditioner, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalerkinBasis {
    /// Hermite levels `n = 0 … n_hermite − 1`.
    pub n_hermite: usize,
    /// Highest Fourier wavenumber `K`; the basis carries `2K + 1` modes in `q`.
    pub n_fourier: usize,
    pub beta: f64,
}

impl GalerkinBasis {
    pub fn new(n_hermite: usize, n_fourier: usize, beta: f64) -> Result<Self> {
        if n_hermite < 2 || n_fourier < 1 {
            return Err(Error::InvalidConfig(format!(
                "basis needs n_hermite >= 2 and n_fourier >= 1, got {n_hermite}, {n_fourier}"
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            n_hermite,
            n_fourier,
            beta,
        })
    }

    /// Default truncation. The boundary layer near the separatrix has width
    /// `√γ`, so the Hermite count grows quickly as friction decreases; the
    /// Fourier count saturates early.
    pub fn for_gamma(gamma: f64, beta: f64) -> Result<Self> {
        if gamma >= 1.0 {
            Self::new(128, 32, beta)
        } else if gamma >= 0.3 {
            Self::new(256, 32, beta)
        } else {
            Self::new(1536, 64, beta)
        }
    }

    /// Number of Fourier functions `2K + 1`.
    pub fn n_modes(&self) -> usize {
        2 * self.n_fourier + 1
    }

    /// Number of unknowns after removing the constant mode.
    pub fn dimension(&self) -> usize {
        self.n_hermite * self.n_modes() - 1
    }

    pub fn halved(&self, min_fourier: usize) -> Self {
        Self {
            n_hermite: (self.n_hermite / 2).max(2),
            n_fourier: (self.n_fourier / 2).max(min_fourier).max(1),
            beta: self.beta,
        }
    }
}

/// Wavenumber carried by Fourier index `j`.
pub fn wavenumber_of(j: usize) -> usize {
    j.div_ceil(2)
}

/// Matrix of `−L_γ` in block form. Level `n` couples to `n ± 1` through
///
/// * lower block `−γ⁻¹β^{−1/2}√n · D_q`,
/// * upper block `−γ⁻¹√(n+1) · (β^{−1/2} D_q − β^{1/2} M_{V′})`,
///
/// where `D_q` is `∂_q` and `M_{V′}` multiplication by `V′` in the Fourier basis.
#[derive(Debug, Clone)]
pub struct GalerkinOperator {
    pub basis: GalerkinBasis,
    pub gamma: f64,
    potential: PeriodicPotential,
    dq: CsrMatrix,
    coupling: CsrMatrix,
}

impl GalerkinOperator {
    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }

    fn m(&self) -> usize {
        self.basis.n_modes()
    }

    fn lower(&self, n: usize) -> f64 {
        -(n as f64).sqrt() / (self.gamma * self.basis.beta.sqrt())
    }

    fn upper(&self, n: usize) -> f64 {
        -((n + 1) as f64).sqrt() / self.gamma
    }

    /// Product on the full `n_hermite × (2K+1)` layout. The constant-mode slot
    /// is treated as an identity row so that the full system stays
    /// nonsingular; it is zero in every solution.
    fn apply_full(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m();
        let nh = self.basis.n_hermite;
        for n in 0..nh {
            let out = &mut y[n * m..(n + 1) * m];
            for (j, o) in out.iter_mut().enumerate() {
                *o = n as f64 * x[n * m + j];
            }
            if n > 0 {
                self.dq.mul_add(self.lower(n), &x[(n - 1) * m..n * m], out);
            }
            if n + 1 < nh {
                self.coupling.mul_add(self.upper(n), &x[(n + 1) * m..(n + 2) * m], out);
            }
        }
        y[0] = x[0];
    }

    /// Sparse matrix on the mean-zero subspace (constant mode deleted); index
    /// `n·(2K+1) + j − 1` for basis function `h_n f_j`.
    pub fn to_sparse(&self) -> CsrMatrix {
        let m = self.m();
        let nh = self.basis.n_hermite;
        let mut t = Vec::new();
        let mut push = |r: usize, c: usize, v: f64| {
            if r != 0 && c != 0 {
                t.push((r - 1, c - 1, v));
            }
        };
        for n in 0..nh {
            for j in 0..m {
                push(n * m + j, n * m + j, n as f64);
            }
            if n > 0 {
                for r in 0..m {
                    for (c, v) in self.dq.row(r) {
                        push(n * m + r, (n - 1) * m + c, self.lower(n) * v);
                    }
                }
            }
            if n + 1 < nh {
                for r in 0..m {
                    for (c, v) in self.coupling.row(r) {
                        push(n * m + r, (n + 1) * m + c, self.upper(n) * v);
                    }
                }
            }
        }
        let dim = self.basis.dimension();
        CsrMatrix::from_triplets(dim, dim, t)
    }
}

/// `∂_q` in the real Fourier basis.
fn derivative_matrix(m: usize, period: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for k in 1..=m / 2 {
        let w = 2.0 * PI * k as f64 / period;
        let (c, s) = (2 * k - 1, 2 * k);
        t.push((s, c, -w));
        t.push((c, s, w));
    }
    CsrMatrix::from_triplets(m, m, t)
}

/// Multiplication by `g = g₀ + Σ gc_k cos + gs_k sin`, projected onto the first
/// `m` Fourier modes (products beyond wavenumber `K` are dropped).
fn multiplication_matrix(m: usize, g_cos: &[f64], g_sin: &[f64]) -> CsrMatrix {
    let kmax = m / 2;
    let mut t = Vec::new();
    // adds coefficient v of cos(k·) (k signed) to row set for column col
    let add_cos = |t: &mut Vec<(usize, usize, f64)>, k: i64, v: f64, col: usize| {
        let k = k.unsigned_abs() as usize;
        if k == 0 {
            t.push((0, col, v));
        } else if k <= kmax {
            t.push((2 * k - 1, col, v));
        }
    };
    let add_sin = |t: &mut Vec<(usize, usize, f64)>, k: i64, v: f64, col: usize| {
        let (k, v) = if k < 0 { ((-k) as usize, -v) } else { (k as usize, v) };
        if k != 0 && k <= kmax {
            t.push((2 * k, col, v));
        }
    };
    for col in 0..m {
        let b = wavenumber_of(col) as i64;
        let col_is_cos = col == 0 || col % 2 == 1;
        for (idx, (&gc, &gs)) in g_cos.iter().zip(g_sin).enumerate() {
            let a = (idx + 1) as i64;
            if col == 0 {
                add_cos(&mut t, a, gc, col);
                add_sin(&mut t, a, gs, col);
                continue;
            }
            if col_is_cos {
                // cos a cos b, sin a cos b
                add_cos(&mut t, a - b, 0.5 * gc, col);
                add_cos(&mut t, a + b, 0.5 * gc, col);
                add_sin(&mut t, a + b, 0.5 * gs, col);
                add_sin(&mut t, a - b, 0.5 * gs, col);
            } else {
                // cos a sin b, sin a sin b
                add_sin(&mut t, a + b, 0.5 * gc, col);
                add_sin(&mut t, a - b, -0.5 * gc, col);
                add_cos(&mut t, a - b, 0.5 * gs, col);
                add_cos(&mut t, a + b, -0.5 * gs, col);
            }
        }
    }
    CsrMatrix::from_triplets(m, m, t)
}

pub fn assemble(v: &PeriodicPotential, beta: f64, gamma: f64, basis: &GalerkinBasis) -> Result<GalerkinOperator> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(beta > 0.0) || (beta - basis.beta).abs() > 1e-15 * beta {
        return Err(Error::InvalidConfig(format!(
            "beta {beta} does not match the basis (beta = {})",
            basis.beta
        )));
    }
    if v.modes() > basis.n_fourier {
        return Err(Error::Truncation {
            modes: v.modes(),
            n_fourier: basis.n_fourier,
        });
    }
    let m = basis.n_modes();
    let dq = derivative_matrix(m, v.period);
    let (dc, ds) = v.derivative_coeffs();
    let mv = multiplication_matrix(m, &dc, &ds);
    let mut t = Vec::new();
    let sb = beta.sqrt();
    for r in 0..m {
        for (c, x) in dq.row(r) {
            t.push((r, c, x / sb));
        }
        for (c, x) in mv.row(r) {
            t.push((r, c, -sb * x));
        }
    }
    Ok(GalerkinOperator {
        basis: *basis,
        gamma,
        potential: v.clone(),
        dq,
        coupling: CsrMatrix::from_triplets(m, m, t),
    })
}

/// Coefficients of `φ_γ` on the full `(n, j)` grid, constant mode zero.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub basis: GalerkinBasis,
    pub gamma: f64,
    pub beta: f64,
    /// Row-major by Hermite level: `coeffs[n·(2K+1) + j]`.
    pub coeffs: Vec<f64>,
    /// `‖b − Ax‖/‖b‖` of the final iterate.
    pub residual_norm: f64,
    /// Relative change of `D_γ` when both truncations are halved (0 if not
    /// computed).
    pub truncation_estimate: f64,
    pub iterations: usize,
    potential: PeriodicPotential,
}

impl CellSolution {
    pub fn coeff(&self, n: usize, j: usize) -> f64 {
        self.coeffs[n * self.basis.n_modes() + j]
    }

    fn level(&self, n: usize) -> &[f64] {
        let m = self.basis.n_modes();
        &self.coeffs[n * m..(n + 1) * m]
    }

    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }
}

pub fn solve_cell(op: &GalerkinOperator) -> Result<CellSolution> {
    solve_cell_with(op, &SolveOptions::default())
}

pub fn solve_cell_with(op: &GalerkinOperator, opts: &SolveOptions) -> Result<CellSolution> {
    let m = op.m();
    let nh = op.basis.n_hermite;
    let beta = op.basis.beta;
    let mut rhs = vec![0.0; nh * m];
    // p = β^{−1/2} h₁
    rhs[m] = 1.0 / beta.sqrt();
    let (x, residual, iterations) = solver::solve(op, &rhs, opts)?;
    let mut sol = CellSolution {
        basis: op.basis,
        gamma: op.gamma,
        beta,
        coeffs: x,
        residual_norm: residual,
        truncation_estimate: 0.0,
        iterations,
        potential: op.potential.clone(),
    };
    sol.coeffs[0] = 0.0;
    if opts.estimate_truncation {
        let coarse_basis = op.basis.halved(op.potential.modes());
        if coarse_basis != op.basis {
            let coarse_op = assemble(&op.potential, beta, op.gamma, &coarse_basis)?;
            let coarse = solve_cell_with(
                &coarse_op,
                &SolveOptions {
                    estimate_truncation: false,
                    ..opts.clone()
                },
            )?;
            let fine_d = diffusivity_pair(&sol).mean();
            let coarse_d = diffusivity_pair(&coarse).mean();
            sol.truncation_estimate = ((fine_d - coarse_d) / fine_d).abs();
        }
    }
    Ok(sol)
}

/// `⟨f_j⟩_ρ` and the Gram matrix `⟨f_i f_j⟩_ρ` for `ρ = e^{−βV}/Z` (mean 1 on
/// `[0, ℓ)`), by the trapezoid rule, which is exact for the trigonometric
/// polynomial part and spectrally accurate for the smooth weight.
fn weighted_moments(v: &PeriodicPotential, beta: f64, n_fourier: usize) -> (Vec<f64>, DMatrix<f64>) {
    let m = 2 * n_fourier + 1;
    let grid = 4 * n_fourier + 32 * v.modes().max(1) + 256;
    let ell = v.period;
    let rho: Vec<f64> = (0..grid).map(|i| (-beta * v.value(ell * i as f64 / grid as f64)).exp()).collect();
    let norm = rho.iter().sum::<f64>() / grid as f64;
    let f = fourier_table(n_fourier, grid);
    let mut avg = vec![0.0; m];
    let mut weighted = DMatrix::<f64>::zeros(m, grid);
    for j in 0..m {
        for g in 0..grid {
            let w = rho[g] / norm / grid as f64;
            weighted[(j, g)] = f[(j, g)] * w;
            avg[j] += f[(j, g)] * w;
        }
    }
    let gram = &weighted * f.transpose();
    (avg, gram)
}

/// `f_j(q_g)` for the uniform grid `q_g = gℓ/grid`.
fn fourier_table(n_fourier: usize, grid: usize) -> DMatrix<f64> {
    let m = 2 * n_fourier + 1;
    DMatrix::from_fn(m, grid, |j, g| {
        let x = 2.0 * PI * g as f64 / grid as f64;
        let k = wavenumber_of(j) as f64;
        if j == 0 {
            1.0
        } else if j % 2 == 1 {
            (k * x).cos()
        } else {
            (k * x).sin()
        }
    })
}

/// The two diffusivity formulas evaluated on a Galerkin solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityPair {
    /// `γ⁻¹⟨p, φ⟩_μ`
    pub inner: f64,
    /// `(γβ)⁻¹‖∂_p φ‖²_μ`
    pub energy: f64,
}

impl DiffusivityPair {
    pub fn mean(&self) -> f64 {
        0.5 * (self.inner + self.energy)
    }

    pub fn relative_difference(&self) -> f64 {
        ((self.inner - self.energy) / self.mean()).abs()
    }
}

pub fn diffusivity_pair(sol: &CellSolution) -> DiffusivityPair {
    let (avg, gram) = weighted_moments(&sol.potential, sol.beta, sol.basis.n_fourier);
    let c1 = sol.level(1);
    let inner = c1.iter().zip(&avg).map(|(c, a)| c * a).sum::<f64>() / (sol.gamma * sol.beta.sqrt());
    let mut energy = 0.0;
    for n in 1..sol.basis.n_hermite {
        let c = nalgebra::DVector::from_column_slice(sol.level(n));
        energy += n as f64 * c.dot(&(&gram * &c));
    }
    energy /= sol.gamma;
    DiffusivityPair { inner, energy }
}

/// Formulas disagreeing by more than this signal an under-resolved basis.
pub const CONSISTENCY_LIMIT: f64 = 1e-4;

pub fn deff_spectral(sol: &CellSolution) -> Result<DiffusionEstimate> {
    let pair = diffusivity_pair(sol);
    let rel = pair.relative_difference();
    if !(rel <= CONSISTENCY_LIMIT) {
        return Err(Error::InconsistentFormulas(rel));
    }
    let value = pair.mean();
    Ok(DiffusionEstimate {
        value,
        ci_half_width: (sol.truncation_estimate * value).max((pair.inner - pair.energy).abs()),
        method: Method::Spectral,
        gamma: Some(sol.gamma),
        beta: sol.beta,
    })
}

/// Slowest decay rate of `−L_γ` on the mean-zero subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub gap: f64,
    /// Imaginary part of the eigenvalue attaining the gap.
    pub imag: f64,
    pub dimension: usize,
}

/// Dense eigenvalues above this size take minutes; callers should use a
/// smaller basis for gap estimates.
pub const MAX_DENSE_GAP_DIMENSION: usize = 6000;

pub fn spectral_gap(op: &GalerkinOperator) -> Result<GapEstimate> {
    let eig = eigenvalues(op)?;
    let (gap, imag) = eig
        .iter()
        .map(|c| (c.re, c.im))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::EigSolverFailure("empty spectrum".into()))?;
    Ok(GapEstimate {
        gap,
        imag: imag.abs(),
        dimension: eig.len(),
    })
}

/// All eigenvalues of the discretized `−L_γ` on the mean-zero subspace.
pub fn eigenvalues(op: &GalerkinOperator) -> Result<Vec<nalgebra::Complex<f64>>> {
    let dim = op.basis.dimension();
    if dim > MAX_DENSE_GAP_DIMENSION {
        return Err(Error::InvalidConfig(format!(
            "basis of dimension {dim} is too large for a dense eigensolve (limit {MAX_DENSE_GAP_DIMENSION})"
        )));
    }
    let dense = op.to_sparse().to_dense();
    let schur = Schur::try_new(dense, 1e-14, 200 * dim.max(10))
        .ok_or_else(|| Error::EigSolverFailure(format!("Schur iteration did not converge (dimension {dim})")))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// For `r > 2` the factor `e^{(r−2)x²/4}` amplifies coefficient noise at large
/// standardized momenta, so nodes beyond this are dropped. Gaussian weight
/// there is below 1e-15.
const P_CUTOFF: f64 = 8.0;

/// `‖∂_p φ_γ‖_{L^r(μ)}` by tensor quadrature: Gauss–Hermite in `p`, uniform in
/// `q`. Hermite functions are evaluated by their normalized recurrence so that
/// high levels neither overflow nor lose accuracy.
pub fn lp_norm_dp_phi(sol: &CellSolution, exponent: u32) -> f64 {
    let r = f64::from(exponent);
    let nh = sol.basis.n_hermite;
    let beta = sol.beta;
    let cutoff = if exponent > 2 { P_CUTOFF } else { f64::INFINITY };
    let (x, w_scaled) = gauss_hermite_scaled_within(2 * nh + 8, cutoff);
    let nodes: Vec<(f64, f64)> = x.into_iter().zip(w_scaled).collect();
    let grid = 4 * sol.basis.n_fourier + 32 * sol.potential.modes().max(1) + 64;
    let v = &sol.potential;
    let rho: Vec<f64> = (0..grid).map(|g| (-beta * v.value(v.period * g as f64 / grid as f64)).exp()).collect();
    let rho_norm = rho.iter().sum::<f64>();
    // ∂_pφ = √β Σ √n c_n(q) h_{n−1}(p): shift levels down by one
    let m = sol.basis.n_modes();
    let mut shifted = DMatrix::<f64>::zeros(nh - 1, m);
    for n in 1..nh {
        let s = (beta * n as f64).sqrt();
        for j in 0..m {
            shifted[(n - 1, j)] = s * sol.coeff(n, j);
        }
    }
    let cq = shifted * fourier_table(sol.basis.n_fourier, grid);
    // Hermite functions ĥ_k(x) = h_k(x)e^{−x²/4} at every node
    let mut hf = DMatrix::<f64>::zeros(nodes.len(), nh - 1);
    for (i, &(xi, _)) in nodes.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = (-0.25 * xi * xi).exp();
        for k in 0..nh - 1 {
            hf[(i, k)] = cur;
            let next = (xi * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
            prev = cur;
            cur = next;
        }
    }
    let vals = hf * cq;
    let mut total = 0.0;
    for (i, &(xi, wi)) in nodes.iter().enumerate() {
        let mut acc = 0.0;
        for (g, &rg) in rho.iter().enumerate() {
            let gval = vals[(i, g)];
            if gval != 0.0 {
                acc += rg * (r * gval.abs().ln() + (r - 2.0) * 0.25 * xi * xi).exp();
            }
        }
        total += wi * acc;
    }
    (total / rho_norm).powf(1.0 / r)
}

#[cfg(test)]
mod tests;
