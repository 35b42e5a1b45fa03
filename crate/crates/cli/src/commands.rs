//! One function per subcommand. Each returns the JSON `result` object, an
//! optional CSV table and whether the run passed.

use deffusion_core::fw_graph::EnergyGraph;
use deffusion_core::graph_diffusion::{simulate_qstar, total_hits, GraphSimConfig};
use deffusion_core::langevin_mc::{estimate_deff_msd, McConfig};
use deffusion_core::smoluchowski::{corrector_chi, dbar, dgamma_large_expansion};
use deffusion_core::spectral::{
    assemble, deff_spectral, diffusivity_pair, lp_norm_dp_phi, solve_cell, spectral_gap, GalerkinBasis,
};
use deffusion_core::{EdgeKind, Error, PeriodicPotential};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Resolved, Subcommand};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A checked inequality was violated.
    CheckFailed,
    /// Some rows of a sweep failed numerically.
    RowsFailed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::CheckFailed => "check-failed",
            Status::RowsFailed => "rows-failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub result: Value,
    pub table: Option<Table>,
    pub status: Status,
}

/// Locale-independent shortest round-trip formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn execute(r: &Resolved) -> Result<CommandOutput, CliError> {
    match r.cmd {
        Subcommand::Deff => deff(r),
        Subcommand::Mc => mc(r),
        Subcommand::Fw => fw(r),
        Subcommand::Smol => smol(r),
        Subcommand::GraphSim => graph_sim(r),
        Subcommand::BoundsCheck => bounds_check(r),
        Subcommand::Gap => gap(r),
        Subcommand::Sweep => sweep(r),
    }
}

fn basis_for(r: &Resolved, gamma: f64) -> deffusion_core::Result<GalerkinBasis> {
    match (r.config.nh, r.config.nk) {
        (Some(nh), Some(nk)) => GalerkinBasis::new(nh, nk, r.beta),
        _ => GalerkinBasis::for_gamma(gamma, r.beta),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeffRow {
    pub gamma: f64,
    pub beta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub ci: f64,
    #[serde(rename = "gammaD")]
    pub gamma_d: f64,
    pub residual: f64,
    pub truncation_estimate: f64,
    pub iterations: usize,
    pub n_hermite: usize,
    pub n_fourier: usize,
    pub inner: f64,
    pub energy: f64,
    pub gap: Option<f64>,
    pub l4_norm: Option<f64>,
}

fn spectral_row(r: &Resolved, gamma: f64, diagnostics: bool) -> deffusion_core::Result<DeffRow> {
    let basis = basis_for(r, gamma)?;
    let op = assemble(&r.potential, r.beta, gamma, &basis)?;
    let sol = solve_cell(&op)?;
    let est = deff_spectral(&sol)?;
    let pair = diffusivity_pair(&sol);
    let gap = match (diagnostics && r.config.gap == Some(true), r.config.gap_nh, r.config.gap_nk) {
        (true, Some(nh), Some(nk)) => {
            let small = GalerkinBasis::new(nh, nk, r.beta)?;
            Some(spectral_gap(&assemble(&r.potential, r.beta, gamma, &small)?)?.gap)
        }
        _ => None,
    };
    Ok(DeffRow {
        gamma,
        beta: r.beta,
        d: est.value,
        ci: est.ci_half_width,
        gamma_d: gamma * est.value,
        residual: sol.residual_norm,
        truncation_estimate: sol.truncation_estimate,
        iterations: sol.iterations,
        n_hermite: basis.n_hermite,
        n_fourier: basis.n_fourier,
        inner: pair.inner,
        energy: pair.energy,
        gap,
        l4_norm: diagnostics.then(|| lp_norm_dp_phi(&sol, 4)),
    })
}

fn deff(r: &Resolved) -> Result<CommandOutput, CliError> {
    let rows = r
        .gammas
        .par_iter()
        .map(|&g| spectral_row(r, g, true))
        .collect::<deffusion_core::Result<Vec<_>>>()?;
    let table = Table {
        header: vec!["gamma", "beta", "D", "gammaD", "residual", "truncation_estimate", "gap", "l4_norm"],
        rows: rows
            .iter()
            .map(|x| {
                vec![
                    fmt_f64(x.gamma),
                    fmt_f64(x.beta),
                    fmt_f64(x.d),
                    fmt_f64(x.gamma_d),
                    fmt_f64(x.residual),
                    fmt_f64(x.truncation_estimate),
                    fmt_opt(x.gap),
                    fmt_opt(x.l4_norm),
                ]
            })
            .collect(),
    };
    let mut result = json!({ "rows": rows });
    if let [only] = rows.as_slice() {
        result["D"] = json!(only.d);
        result["ci"] = json!(only.ci);
    }
    Ok(CommandOutput {
        result,
        table: Some(table),
        status: Status::Ok,
    })
}

fn mc_config(r: &Resolved, gamma: f64) -> McConfig {
    let c = &r.config;
    let mut cfg = McConfig::new(r.potential.clone(), r.beta, gamma).with_seed(r.seed());
    if let Some(dt) = c.dt {
        cfg.dt = dt;
    }
    let t_end = c.t_end.unwrap_or(cfg.t_end);
    cfg = cfg.with_t_end(t_end);
    if let Some(n) = c.n_paths {
        cfg = cfg.with_paths(n);
    }
    if let Some(s) = c.record_stride {
        cfg.record_stride = s;
    }
    cfg
}

fn mc(r: &Resolved) -> Result<CommandOutput, CliError> {
    let gamma = r.gammas[0];
    let cfg = mc_config(r, gamma);
    let res = estimate_deff_msd(&cfg)?;
    let ens = &res.ensemble;
    let rows = ens
        .times
        .iter()
        .zip(&ens.msd)
        .zip(&ens.p_variance)
        .map(|((t, m), p)| vec![fmt_f64(*t), fmt_f64(*m), fmt_f64(m / (2.0 * t)), fmt_f64(*p)])
        .collect();
    let result = json!({
        "D": res.estimate.value,
        "ci": res.estimate.ci_half_width,
        "tau_diff": res.tau_diff,
        "trend": res.trend,
        "gamma": gamma,
        "beta": r.beta,
        "n_paths": cfg.n_paths,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "record_stride": cfg.record_stride,
        "seed": cfg.seed,
    });
    Ok(CommandOutput {
        result,
        table: Some(Table {
            header: vec!["t", "msd", "msd_over_2t", "p_var"],
            rows,
        }),
        status: Status::Ok,
    })
}

/// `n` interior points of `(lo, hi)`.
fn interior(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
}

fn fw(r: &Resolved) -> Result<CommandOutput, CliError> {
    let g = EnergyGraph::build(&r.potential)?;
    let points = r.config.points.unwrap_or(50);
    let e0 = g.e0();
    let crit = g.critical();
    let z_max = r.config.z_max.unwrap_or(e0 + 2.0 * (crit.e0 - crit.e_min).max(1.0));
    if !(z_max > e0) {
        return Err(CliError::Usage(format!("z_max must exceed E0 = {e0}, got {z_max}")));
    }
    let mut rows = Vec::new();
    for e in &g.edges {
        let hi = if e.kind == EdgeKind::RotationalInfinite { z_max } else { e.z_hi };
        for z in interior(e.z_lo, hi, points) {
            rows.push(vec![fmt_f64(z), e.id.to_string(), fmt_f64(g.period_t(e.id, z)?), fmt_f64(g.action_s(e.id, z)?)]);
        }
    }
    let asym = if r.potential.is_constant() { None } else { Some(g.asymptotics(r.beta)?) };
    let result = json!({
        "E0": e0,
        "T0": asym.map(|a| a.t0),
        "S_E0": g.action_s(g.rotational_edge(1).id, e0)?,
        "Z_beta": g.partition(r.beta)?,
        "dstar": g.dstar(r.beta)?.value,
        "dstar_low_beta": asym.map(|a| a.low_beta_exact),
        "dstar_low_beta_quoted": asym.map(|a| a.low_beta_quoted),
        "dstar_high_beta": asym.map(|a| a.high_beta),
        "n_edges": g.edges.len(),
        "n_vertices": g.vertices.len(),
    });
    Ok(CommandOutput {
        result,
        table: Some(Table {
            header: vec!["z", "edge_id", "T", "S"],
            rows,
        }),
        status: Status::Ok,
    })
}

fn smol(r: &Resolved) -> Result<CommandOutput, CliError> {
    if r.gammas.len() != 1 {
        return Err(CliError::Usage("smol takes a single gamma for the expansion".into()));
    }
    let gamma = r.gammas[0];
    let s = r.potential.partition_scalars(r.beta)?;
    let d = dbar(&r.potential, r.beta)?;
    let exp = dgamma_large_expansion(&r.potential, r.beta, gamma)?;
    let chi = corrector_chi(&r.potential, r.beta, r.config.grid.unwrap_or(512))?;
    let rows = (0..chi.q.len())
        .map(|i| vec![fmt_f64(chi.q[i]), fmt_f64(chi.chi[i]), fmt_f64(chi.one_plus_dchi[i])])
        .collect();
    let result = json!({
        "dbar": d.value,
        "Z": s.z,
        "Zhat": s.zhat,
        "Z1": s.z1,
        "corrector_energy": chi.energy,
        "expansion": {
            "gamma": gamma,
            "value": exp.value,
            "leading": exp.leading,
            "correction": exp.correction,
        },
    });
    Ok(CommandOutput {
        result,
        table: Some(Table {
            header: vec!["q", "chi", "one_plus_dchi"],
            rows,
        }),
        status: Status::Ok,
    })
}

fn graph_sim(r: &Resolved) -> Result<CommandOutput, CliError> {
    let c = &r.config;
    let cfg = GraphSimConfig {
        t_end: c.t_end.unwrap_or(200.0),
        dt: c.dt.unwrap_or(1e-2),
        n_paths: c.n_paths.unwrap_or(1000),
        seed: r.seed(),
        n_records: c.n_records.unwrap_or(200),
        keep_energies: false,
    };
    let res = simulate_qstar(&r.potential, r.beta, &cfg)?;
    let formula = EnergyGraph::build(&r.potential)?.dstar(r.beta)?.value;
    let rows = res
        .times
        .iter()
        .zip(&res.mean_qstar)
        .zip(&res.var_qstar)
        .map(|((t, m), v)| vec![fmt_f64(*t), fmt_f64(*m), fmt_f64(*v)])
        .collect();
    let hits: Vec<Value> = res
        .vertex_hits
        .iter()
        .map(|h| {
            let total = total_hits(h).max(1) as f64;
            json!({
                "vertex": h.vertex,
                "counts": h.counts.iter().map(|(e, n)| json!({
                    "edge": e, "count": n, "fraction": *n as f64 / total,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let result = json!({
        "D": res.estimate.value,
        "ci": res.estimate.ci_half_width,
        "dstar_formula": formula,
        "n_paths": res.n_paths,
        "dt": res.dt,
        "t_end": cfg.t_end,
        "vertex_hits": hits,
        "max_well_qstar_change": res.max_well_qstar_change,
    });
    Ok(CommandOutput {
        result,
        table: Some(Table {
            header: vec!["t", "mean_qstar", "var_qstar"],
            rows,
        }),
        status: Status::Ok,
    })
}

fn limits(v: &PeriodicPotential, beta: f64) -> deffusion_core::Result<(f64, f64)> {
    let ds = deffusion_core::fw_graph::dstar(v, beta)?.value;
    let db = dbar(v, beta)?.value;
    Ok((ds, db))
}

fn bounds_check(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (ds, db) = limits(&r.potential, r.beta)?;
    let rows = r
        .gammas
        .par_iter()
        .map(|&g| spectral_row(r, g, false))
        .collect::<deffusion_core::Result<Vec<_>>>()?;
    let mut all_ok = true;
    let mut json_rows = Vec::new();
    let mut table = Vec::new();
    for x in &rows {
        // truncation_estimate is relative, so it is scaled by D
        let eps = 10.0 * x.truncation_estimate * x.d;
        let lower = ds / x.gamma;
        let upper = db / x.gamma;
        let ok = lower - eps <= x.d && x.d <= upper + eps;
        all_ok &= ok;
        json_rows.push(json!({
            "gamma": x.gamma, "beta": x.beta, "dstar_over_gamma": lower, "D": x.d,
            "dbar_over_gamma": upper, "eps": eps, "truncation_estimate": x.truncation_estimate, "ok": ok,
        }));
        table.push(vec![
            fmt_f64(x.gamma),
            fmt_f64(x.beta),
            fmt_f64(lower),
            fmt_f64(x.d),
            fmt_f64(upper),
            fmt_f64(eps),
            ok.to_string(),
        ]);
    }
    Ok(CommandOutput {
        result: json!({ "dstar": ds, "dbar": db, "rows": json_rows, "all_ok": all_ok }),
        table: Some(Table {
            header: vec!["gamma", "beta", "dstar_over_gamma", "D", "dbar_over_gamma", "eps", "ok"],
            rows: table,
        }),
        status: if all_ok { Status::Ok } else { Status::CheckFailed },
    })
}

fn gap(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (nh, nk) = (r.config.nh.unwrap_or(48), r.config.nk.unwrap_or(16));
    let basis = GalerkinBasis::new(nh, nk, r.beta)?;
    let gaps = r
        .gammas
        .par_iter()
        .map(|&g| spectral_gap(&assemble(&r.potential, r.beta, g, &basis)?))
        .collect::<deffusion_core::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = r
        .gammas
        .iter()
        .zip(&gaps)
        .map(|(g, e)| {
            vec![fmt_f64(*g), fmt_f64(r.beta), fmt_f64(e.gap), fmt_f64(e.imag), e.dimension.to_string()]
        })
        .collect();
    let min = gaps.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min);
    let max = gaps.iter().map(|e| e.gap).fold(f64::NEG_INFINITY, f64::max);
    let json_rows: Vec<Value> = r
        .gammas
        .iter()
        .zip(&gaps)
        .map(|(g, e)| json!({ "gamma": g, "gap": e.gap, "imag": e.imag, "dimension": e.dimension }))
        .collect();
    Ok(CommandOutput {
        result: json!({
            "rows": json_rows, "min_gap": min, "max_gap": max, "ratio": max / min,
            "n_hermite": nh, "n_fourier": nk,
        }),
        table: Some(Table {
            header: vec!["gamma", "beta", "gap", "imag", "dimension"],
            rows,
        }),
        status: Status::Ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    #[serde(rename = "gammaD_spectral")]
    pub gamma_d_spectral: Option<f64>,
    #[serde(rename = "gammaD_mc")]
    pub gamma_d_mc: Option<f64>,
    #[serde(rename = "gammaD_ci")]
    pub gamma_d_ci: Option<f64>,
    pub dstar: f64,
    pub dbar: f64,
    /// `γ` times the two-term large-friction expansion.
    pub expansion: Option<f64>,
    pub truncation_estimate: Option<f64>,
    pub error: Option<String>,
}

fn sweep(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (ds, db) = limits(&r.potential, r.beta)?;
    let mc_paths = r.config.mc_paths.unwrap_or(1000);
    let rows: Vec<SweepRow> = r
        .gammas
        .par_iter()
        .map(|&g| {
            let mut errors: Vec<String> = Vec::new();
            let mut note = |e: Error| errors.push(e.to_string());
            let spec = spectral_row(r, g, false).map_err(&mut note).ok();
            let (mut mc_val, mut mc_ci) = (None, None);
            if mc_paths > 0 {
                let cfg = McConfig::new(r.potential.clone(), r.beta, g).with_paths(mc_paths).with_seed(r.seed());
                match estimate_deff_msd(&cfg) {
                    Ok(res) => {
                        mc_val = Some(g * res.estimate.value);
                        mc_ci = Some(g * res.estimate.ci_half_width);
                    }
                    Err(e) => note(e),
                }
            }
            let expansion = dgamma_large_expansion(&r.potential, r.beta, g).map(|e| g * e.value).map_err(&mut note).ok();
            SweepRow {
                gamma: g,
                gamma_d_spectral: spec.as_ref().map(|s| s.gamma_d),
                gamma_d_mc: mc_val,
                gamma_d_ci: mc_ci,
                dstar: ds,
                dbar: db,
                expansion,
                truncation_estimate: spec.as_ref().map(|s| s.truncation_estimate),
                error: (!errors.is_empty()).then(|| errors.join("; ")),
            }
        })
        .collect();
    let failed = rows.iter().any(|x| x.error.is_some());
    let table = rows
        .iter()
        .map(|x| {
            vec![
                fmt_f64(x.gamma),
                fmt_opt(x.gamma_d_spectral),
                fmt_opt(x.gamma_d_mc),
                fmt_opt(x.gamma_d_ci),
                fmt_f64(x.dstar),
                fmt_f64(x.dbar),
                fmt_opt(x.expansion),
                x.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    Ok(CommandOutput {
        result: json!({ "rows": rows, "dstar": ds, "dbar": db, "mc_paths": mc_paths }),
        table: Some(Table {
            header: vec!["gamma", "gammaD_spectral", "gammaD_mc", "gammaD_ci", "dstar", "dbar", "expansion", "error"],
            rows: table,
        }),
        status: if failed { Status::RowsFailed } else { Status::Ok },
    })
}
