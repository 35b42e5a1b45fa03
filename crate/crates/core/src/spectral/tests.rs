use super::*;
use crate::smoluchowski::dbar;
use proptest::prelude::*;

fn pendulum_solution(gamma: f64, nh: usize, k: usize) -> CellSolution {
    let v = PeriodicPotential::pendulum();
    let basis = GalerkinBasis::new(nh, k, 1.0).unwrap();
    let op = assemble(&v, 1.0, gamma, &basis).unwrap();
    solve_cell(&op).unwrap()
}

#[test]
fn free_particle_is_exact() {
    for &(beta, gamma) in &[(1.0, 1.0), (2.5, 0.2), (0.5, 7.0)] {
        let v = PeriodicPotential::zero();
        let basis = GalerkinBasis::new(8, 4, beta).unwrap();
        let op = assemble(&v, beta, gamma, &basis).unwrap();
        let sol = solve_cell(&op).unwrap();
        assert!((sol.coeff(1, 0) - 1.0 / beta.sqrt()).abs() < 1e-13);
        let others: f64 = sol.coeffs.iter().enumerate().filter(|&(i, _)| i != basis.n_modes()).map(|(_, c)| c.abs()).sum();
        assert!(others < 1e-13);
        let d = deff_spectral(&sol).unwrap();
        assert!((d.value - 1.0 / (gamma * beta)).abs() < 1e-13 * d.value);
        assert!((lp_norm_dp_phi(&sol, 4) - 1.0).abs() < 1e-10);
        assert!((lp_norm_dp_phi(&sol, 2) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn ou_part_is_diagonal_for_constant_modes() {
    let basis = GalerkinBasis::new(6, 3, 1.7).unwrap();
    let op = assemble(&PeriodicPotential::zero(), 1.7, 0.4, &basis).unwrap();
    let a = op.to_sparse().to_dense();
    let m = basis.n_modes();
    for n in 1..6 {
        let i = n * m - 1;
        for c in 0..basis.dimension() {
            let expected = if c == i { n as f64 } else { 0.0 };
            assert_eq!(a[(i, c)], expected);
        }
    }
}

#[test]
fn operator_couples_only_neighbouring_levels() {
    let v = PeriodicPotential::new(vec![0.3, 0.1], vec![0.2], 1.0).unwrap();
    let basis = GalerkinBasis::new(7, 5, 1.0).unwrap();
    let op = assemble(&v, 1.0, 0.8, &basis).unwrap();
    let a = op.to_sparse();
    let m = basis.n_modes();
    let level = |i: usize| (i + 1) / m;
    for r in 0..a.n_rows {
        for (c, _) in a.row(r) {
            assert!(level(r).abs_diff(level(c)) <= 1);
        }
    }
}

/// Independent evaluation of `−L_γ` on a trigonometric polynomial in `q` times
/// a Hermite polynomial in `p`, by finite differences on a grid.
#[test]
fn operator_matches_pointwise_generator() {
    let v = PeriodicPotential::new(vec![0.6, -0.2], vec![0.3], 1.0).unwrap();
    let (beta, gamma) = (1.3, 0.7);
    let basis = GalerkinBasis::new(6, 4, beta).unwrap();
    let op = assemble(&v, beta, gamma, &basis).unwrap();
    let m = basis.n_modes();
    let nh = basis.n_hermite;
    let mut x = vec![0.0; nh * m];
    // a function with no content near the truncation edges
    x[2 * m + 1] = 0.7;
    x[m + 4] = -0.3;
    x[3 * m] = 0.5;
    let mut y = vec![0.0; nh * m];
    op.apply_full(&x, &mut y);
    // the pinned constant row is replaced by its unpinned value
    y[0] = op.upper(0) * op.coupling.row(0).map(|(c, a)| a * x[m + c]).sum::<f64>();
    // orthonormal Hermite polynomials for N(0, 1/β) and their derivatives
    let herm = |n: usize, p: f64| -> (f64, f64) {
        let z = p * beta.sqrt();
        let mut h = vec![1.0, z];
        for k in 1..n.max(1) {
            h.push((z * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt());
        }
        let d = if n == 0 { 0.0 } else { beta.sqrt() * (n as f64).sqrt() * h[n - 1] };
        (h[n], d)
    };
    let four = |j: usize, q: f64| -> (f64, f64) {
        let k = wavenumber_of(j) as f64;
        let w = 2.0 * PI * k;
        if j == 0 {
            (1.0, 0.0)
        } else if j % 2 == 1 {
            ((w * q).cos(), -w * (w * q).sin())
        } else {
            ((w * q).sin(), w * (w * q).cos())
        }
    };
    let eval = |c: &[f64], q: f64, p: f64| -> [f64; 4] {
        // value, ∂_q, ∂_p, ∂_p²
        let h2 = 1e-4;
        let mut out = [0.0; 4];
        for n in 0..nh {
            for j in 0..m {
                let a = c[n * m + j];
                if a == 0.0 {
                    continue;
                }
                let (h, dh) = herm(n, p);
                let (f, df) = four(j, q);
                let hp = herm(n, p + h2).0;
                let hm = herm(n, p - h2).0;
                out[0] += a * h * f;
                out[1] += a * h * df;
                out[2] += a * dh * f;
                out[3] += a * (hp - 2.0 * h + hm) / (h2 * h2) * f;
            }
        }
        out
    };
    for &(q, p) in &[(0.13, 0.4), (0.71, -1.2), (0.5, 2.0)] {
        let f = eval(&x, q, p);
        let generator = (p * f[1] + v.force(q) * f[2]) / gamma + f[3] / beta - p * f[2];
        let expected = -generator;
        let got = eval(&y, q, p)[0];
        assert!((got - expected).abs() < 1e-5 * (1.0 + expected.abs()), "{got} vs {expected}");
    }
}

#[test]
fn multiplication_matches_pointwise_product() {
    let v = PeriodicPotential::new(vec![0.4, 0.25, -0.1], vec![0.3, 0.05], 1.0).unwrap();
    let (dc, ds) = v.derivative_coeffs();
    let m = 2 * 12 + 1;
    let mv = multiplication_matrix(m, &dc, &ds);
    let mut c = vec![0.0; m];
    c[0] = 0.2;
    c[3] = -0.5;
    c[6] = 0.8;
    let mut out = vec![0.0; m];
    mv.mul_add(1.0, &c, &mut out);
    let f = |coef: &[f64], q: f64| -> f64 {
        coef.iter()
            .enumerate()
            .map(|(j, a)| {
                let k = 2.0 * PI * wavenumber_of(j) as f64;
                a * if j == 0 {
                    1.0
                } else if j % 2 == 1 {
                    (k * q).cos()
                } else {
                    (k * q).sin()
                }
            })
            .sum()
    };
    for i in 0..17 {
        let q = i as f64 / 17.0 + 0.01;
        let expected = -v.force(q) * f(&c, q);
        assert!((f(&out, q) - expected).abs() < 1e-13);
    }
}

#[test]
fn matches_dense_direct_solve() {
    let v = PeriodicPotential::new(vec![1.0, 0.3], vec![0.2], 1.0).unwrap();
    let basis = GalerkinBasis::new(10, 6, 1.0).unwrap();
    let op = assemble(&v, 1.0, 0.5, &basis).unwrap();
    let sol = solve_cell(&op).unwrap();
    let a = op.to_sparse().to_dense();
    let mut b = nalgebra::DVector::zeros(basis.dimension());
    b[basis.n_modes() - 1] = 1.0;
    let x = a.lu().solve(&b).unwrap();
    for i in 0..basis.dimension() {
        assert!((x[i] - sol.coeffs[i + 1]).abs() < 1e-11);
    }
}

#[test]
fn preconditioners_agree() {
    let v = PeriodicPotential::pendulum();
    let basis = GalerkinBasis::new(24, 10, 1.0).unwrap();
    let op = assemble(&v, 1.0, 2.0, &basis).unwrap();
    let exact = solve_cell(&op).unwrap();
    assert!(exact.iterations <= 3);
    for p in [Preconditioner::OuDiagonal, Preconditioner::None] {
        let opts = SolveOptions {
            preconditioner: p,
            restart: 300,
            estimate_truncation: false,
            ..SolveOptions::default()
        };
        let sol = solve_cell_with(&op, &opts).unwrap();
        let diff: f64 = sol.coeffs.iter().zip(&exact.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{p:?}: {diff}");
    }
}

#[test]
fn stall_is_reported() {
    let op = assemble(&PeriodicPotential::pendulum(), 1.0, 0.05, &GalerkinBasis::new(64, 32, 1.0).unwrap()).unwrap();
    let opts = SolveOptions {
        preconditioner: Preconditioner::None,
        max_iterations: 5,
        estimate_truncation: false,
        ..SolveOptions::default()
    };
    match solve_cell_with(&op, &opts) {
        Err(Error::SolverStall { suggested_hermite, .. }) => assert_eq!(suggested_hermite, 128),
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncation_error_when_basis_too_small() {
    let v = PeriodicPotential::new(vec![0.0, 0.0, 1.0], vec![], 1.0).unwrap();
    let basis = GalerkinBasis::new(8, 2, 1.0).unwrap();
    assert!(matches!(
        assemble(&v, 1.0, 1.0, &basis),
        Err(Error::Truncation { modes: 3, n_fourier: 2 })
    ));
    assert!(GalerkinBasis::new(1, 4, 1.0).is_err());
    assert!(GalerkinBasis::new(4, 0, 1.0).is_err());
}

#[test]
fn pendulum_reference_values() {
    // γD_γ at β = 1
    for &(gamma, expected) in &[(1.0, 0.250_386_5), (5.0, 0.446_238), (10.0, 0.546_038)] {
        let sol = pendulum_solution(gamma, 128, 32);
        let pair = diffusivity_pair(&sol);
        assert!(pair.relative_difference() < 1e-8, "{pair:?}");
        let d = deff_spectral(&sol).unwrap();
        assert!((gamma * d.value - expected).abs() < 2e-6, "γ={gamma}: {}", gamma * d.value);
        // halving the basis bounds the truncation error from above
        assert!(sol.truncation_estimate < 2e-3, "{}", sol.truncation_estimate);
        assert!((gamma * d.value - expected).abs() <= sol.truncation_estimate * gamma * d.value + 1e-6);
        assert!(d.value <= 1.0 / gamma);
        assert!(gamma * d.value <= dbar(&PeriodicPotential::pendulum(), 1.0).unwrap().value);
    }
}

#[test]
fn lr_norms_are_ordered() {
    let sol = pendulum_solution(1.0, 48, 24);
    let l2 = lp_norm_dp_phi(&sol, 2);
    let l4 = lp_norm_dp_phi(&sol, 4);
    // ‖∂_pφ‖²_2 = γβ·D_γ
    let d = deff_spectral(&sol).unwrap().value;
    assert!((l2 * l2 - d * sol.gamma * sol.beta).abs() < 1e-8, "{l2} {d}");
    assert!(l4 >= l2);
}

#[test]
fn free_particle_gap_is_one() {
    let basis = GalerkinBasis::new(8, 3, 1.0).unwrap();
    for gamma in [0.5, 1.0, 4.0] {
        let op = assemble(&PeriodicPotential::zero(), 1.0, gamma, &basis).unwrap();
        let g = spectral_gap(&op).unwrap();
        assert!((g.gap - 1.0).abs() < 1e-10, "{g:?}");
        assert_eq!(g.dimension, basis.dimension());
    }
}

#[test]
fn pendulum_gap_is_positive_and_bounded() {
    let op = assemble(&PeriodicPotential::pendulum(), 1.0, 1.0, &GalerkinBasis::new(24, 10, 1.0).unwrap()).unwrap();
    let g = spectral_gap(&op).unwrap();
    assert!(g.gap > 0.5 && g.gap < 2.0, "{g:?}");
}

#[test]
fn dense_eigensolve_size_is_limited() {
    let op = assemble(&PeriodicPotential::pendulum(), 1.0, 1.0, &GalerkinBasis::new(256, 128, 1.0).unwrap()).unwrap();
    assert!(matches!(spectral_gap(&op), Err(Error::InvalidConfig(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn diffusivity_is_bounded_by_free_value(
        a in -1.5f64..1.5, b in -0.5f64..0.5, beta in 0.3f64..2.0, gamma in 0.5f64..5.0,
    ) {
        let v = PeriodicPotential::new(vec![a, b], vec![], 1.0).unwrap();
        let basis = GalerkinBasis::for_gamma(gamma, beta).unwrap();
        let op = assemble(&v, beta, gamma, &basis).unwrap();
        let sol = solve_cell(&op).unwrap();
        let pair = diffusivity_pair(&sol);
        prop_assert!(pair.relative_difference() < 1e-6);
        prop_assert!(pair.mean() > 0.0);
        prop_assert!(pair.mean() <= 1.0 / (gamma * beta) * (1.0 + 1e-10));
    }

    #[test]
    fn diffusivity_is_translation_invariant(shift in 0.0f64..1.0) {
        let v = PeriodicPotential::new(vec![0.8, 0.2], vec![0.3], 1.0).unwrap();
        let basis = GalerkinBasis::new(32, 12, 1.0).unwrap();
        let d0 = diffusivity_pair(&solve_cell(&assemble(&v, 1.0, 1.5, &basis).unwrap()).unwrap()).mean();
        let v1 = v.shifted(shift);
        let d1 = diffusivity_pair(&solve_cell(&assemble(&v1, 1.0, 1.5, &basis).unwrap()).unwrap()).mean();
        prop_assert!((d0 - d1).abs() < 1e-9 * d0);
    }
}

#[test]
fn default_basis_is_converged_at_unit_friction() {
    let v = PeriodicPotential::pendulum();
    let base = GalerkinBasis::for_gamma(1.0, 1.0).unwrap();
    let doubled = GalerkinBasis::new(2 * base.n_hermite, base.n_fourier, 1.0).unwrap();
    let d = |b: &GalerkinBasis| diffusivity_pair(&solve_cell(&assemble(&v, 1.0, 1.0, b).unwrap()).unwrap()).mean();
    let (d1, d2) = (d(&base), d(&doubled));
    assert!(((d1 - d2) / d2).abs() < 1e-6);
    let lo = crate::fw_graph::dstar(&v, 1.0).unwrap().value;
    let hi = dbar(&v, 1.0).unwrap().value;
    assert!(lo <= d1 && d1 <= hi);
}
