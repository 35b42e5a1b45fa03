//! Restarted GMRES with a right preconditioner.
//!
//! The default preconditioner is exact block elimination along the Hermite
//! index: the operator is block tridiagonal, so the Schur complements
//! `S_n = D_n − U_n S_{n+1}⁻¹ L_{n+1}` give a direct solve and GMRES only
//! polishes rounding. The OU-diagonal option is cheap but degrades as `γ → 0`.

use super::GalerkinOperator;
use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    BlockElimination,
    OuDiagonal,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target relative residual `‖b − Ax‖/‖b‖`.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
    /// Re-solve on a halved basis and report the relative change in `D_γ`.
    pub estimate_truncation: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            restart: 40,
            max_iterations: 2000,
            preconditioner: Preconditioner::BlockElimination,
            estimate_truncation: true,
        }
    }
}

trait Apply {
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

struct Identity;

impl Apply for Identity {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
}

struct OuDiagonal {
    m: usize,
}

impl Apply for OuDiagonal {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        for (i, (o, x)) in out.iter_mut().zip(r).enumerate() {
            *o = x / ((i / self.m) as f64).max(1.0);
        }
    }
}

struct BlockElimination<'a> {
    op: &'a GalerkinOperator,
    /// `S_n⁻¹` for every level.
    sinv: Vec<DMatrix<f64>>,
}

impl<'a> BlockElimination<'a> {
    fn new(op: &'a GalerkinOperator) -> Result<Self> {
        let m = op.m();
        let nh = op.basis.n_hermite;
        let mut sinv: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); nh];
        sinv[nh - 1] = DMatrix::identity(m, m) / (nh - 1) as f64;
        for n in (0..nh - 1).rev() {
            // T = S_{n+1}⁻¹ D_q: column c of D_q has a single entry
            let next = &sinv[n + 1];
            let mut t = DMatrix::<f64>::zeros(m, m);
            for r in 0..m {
                for (c, v) in op.dq.row(r) {
                    // (S⁻¹ D_q)[:, c] += S⁻¹[:, r]·D_q[r, c]
                    let col = next.column(r) * v;
                    let mut dst = t.column_mut(c);
                    dst += col;
                }
            }
            t *= op.lower(n + 1);
            // S_n = D_n − U_n T, with U_n = upper(n)·C
            let mut s = DMatrix::<f64>::from_diagonal_element(m, m, n as f64);
            let un = op.upper(n);
            for r in 0..m {
                if n == 0 && r == 0 {
                    continue;
                }
                for (c, v) in op.coupling.row(r) {
                    let row = t.row(c) * (un * v);
                    let mut dst = s.row_mut(r);
                    dst -= row;
                }
            }
            if n == 0 {
                s[(0, 0)] = 1.0;
            }
            sinv[n] = s.try_inverse().ok_or_else(|| Error::SolverStall {
                iterations: 0,
                residual: f64::INFINITY,
                suggested_hermite: nh * 2,
                suggested_fourier: op.basis.n_fourier * 2,
            })?;
        }
        Ok(Self { op, sinv })
    }
}

impl Apply for BlockElimination<'_> {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let op = self.op;
        let m = op.m();
        let nh = op.basis.n_hermite;
        // g_n = S_n⁻¹ (r_n − U_n g_{n+1}), stored in out
        let mut work = vec![0.0; m];
        for n in (0..nh).rev() {
            work.copy_from_slice(&r[n * m..(n + 1) * m]);
            if n + 1 < nh {
                op.coupling.mul_add(-op.upper(n), &out[(n + 1) * m..(n + 2) * m], &mut work);
                if n == 0 {
                    work[0] = r[0];
                }
            }
            let g = &self.sinv[n] * nalgebra::DVector::from_column_slice(&work);
            out[n * m..(n + 1) * m].copy_from_slice(g.as_slice());
        }
        // x_n = g_n − S_n⁻¹ L_n x_{n−1}
        for n in 1..nh {
            work.iter_mut().for_each(|w| *w = 0.0);
            let (prev, cur) = out.split_at_mut(n * m);
            op.dq.mul_add(op.lower(n), &prev[(n - 1) * m..], &mut work);
            let corr = &self.sinv[n] * nalgebra::DVector::from_column_slice(&work);
            for (x, c) in cur[..m].iter_mut().zip(corr.iter()) {
                *x -= c;
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    pairwise_sum(&sq).sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    pairwise_sum(&p)
}

/// Returns `(x, relative residual, iterations)`.
pub(super) fn solve(op: &GalerkinOperator, rhs: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, f64, usize)> {
    match opts.preconditioner {
        Preconditioner::BlockElimination => gmres(op, rhs, opts, &BlockElimination::new(op)?),
        Preconditioner::OuDiagonal => gmres(op, rhs, opts, &OuDiagonal { m: op.m() }),
        Preconditioner::None => gmres(op, rhs, opts, &Identity),
    }
}

fn gmres<P: Apply>(op: &GalerkinOperator, b: &[f64], opts: &SolveOptions, precond: &P) -> Result<(Vec<f64>, f64, usize)> {
    let dim = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; dim];
    if bnorm == 0.0 {
        return Ok((x, 0.0, 0));
    }
    let restart = opts.restart.max(1);
    let mut iterations = 0;
    let mut r = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut residual;
    loop {
        op.apply_full(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        residual = beta / bnorm;
        if residual <= opts.tolerance || iterations >= opts.max_iterations {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            precond.apply(&basis[k], &mut tmp);
            let mut w = vec![0.0; dim];
            op.apply_full(&tmp, &mut w);
            // modified Gram–Schmidt, twice for stability
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[i][k] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            if wn == 0.0 || g[k + 1].abs() / bnorm <= 0.1 * opts.tolerance || iterations >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution and update x += M⁻¹ V y
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut z = vec![0.0; dim];
        for (yi, v) in y.iter().zip(&basis) {
            z.iter_mut().zip(v).for_each(|(zi, vi)| *zi += yi * vi);
        }
        precond.apply(&z, &mut tmp);
        x.iter_mut().zip(&tmp).for_each(|(xi, ti)| *xi += ti);
    }
    if !(residual <= opts.tolerance) {
        return Err(Error::SolverStall {
            iterations,
            residual,
            suggested_hermite: op.basis.n_hermite * 2,
            suggested_fourier: op.basis.n_fourier * 2,
        });
    }
    Ok((x, residual, iterations))
}
