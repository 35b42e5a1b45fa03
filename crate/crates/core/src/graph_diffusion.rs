//! Simulation of the limiting energy diffusion on the graph of level-set
//! components, and the `D*` estimate obtained from the accumulated velocity
//! `q*(t) = ∫ p̄(Y_s) ds`.
//!
//! On an edge the energy obeys `dz = b(z)dt + σ(z)dW` with `b = 1/β − S/T` and
//! `σ² = 2S/(βT)`. At an interior vertex the next edge is chosen with
//! probability proportional to its one-sided limit of `S`, the probabilistic
//! form of the zero-flux gluing condition.

use crate::error::{Error, Result};
use crate::fw_graph::{EdgeKind, EnergyGraph};
use crate::numerics::{find_roots_on_torus, quad_interval, quad_periodic, QuadratureSpec};
use crate::langevin_mc::GibbsSampler;
use crate::potential::PeriodicPotential;
use crate::rng::stream;
use crate::stats::{jackknife_se, mean, variance};
use crate::{DiffusionEstimate, Method};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `(drift, diffusion)` of the energy on edge `edge` at `z`, evaluated exactly.
pub fn sde_coefficients(graph: &EnergyGraph, edge: usize, z: f64, beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let t = graph.period_t(edge, z)?;
    let s = graph.action_s(edge, z)?;
    Ok((1.0 / beta - s / t, (2.0 * s / (beta * t)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphState {
    pub edge_id: usize,
    pub z: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingRule {
    pub vertex: usize,
    pub vertex_energy: f64,
    /// `(edge id, one-sided limit of S)` for every edge at the vertex.
    pub adjacent: Vec<(usize, f64)>,
}

impl GluingRule {
    pub fn at_vertex(graph: &EnergyGraph, vertex: usize) -> Result<Self> {
        let v = graph
            .vertices
            .get(vertex)
            .ok_or_else(|| Error::InvalidConfig(format!("no vertex {vertex}")))?;
        let adjacent = v
            .edges
            .iter()
            .map(|&e| Ok((e, graph.action_s(e, v.energy)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            vertex,
            vertex_energy: v.energy,
            adjacent,
        })
    }

    /// Selection probabilities in the order of `adjacent`. All-zero weights
    /// (free particle at the bottom of the spectrum) split evenly.
    pub fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.adjacent.iter().map(|a| a.1).sum();
        let n = self.adjacent.len() as f64;
        self.adjacent
            .iter()
            .map(|a| if total > 0.0 { a.1 / total } else { 1.0 / n })
            .collect()
    }

    fn choose<R: Rng>(&self, probs: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}

/// `S/T` and `1/T` tabulated on nodes that cluster geometrically toward each
/// finite end of the edge, where `T` diverges logarithmically.
#[derive(Debug, Clone)]
struct EdgeTable {
    z: Vec<f64>,
    ratio: Vec<f64>,
    inv_t: Vec<f64>,
    lo: f64,
    hi: f64,
    mid: f64,
    /// The lower end is the bottom of a well, where both coefficients are
    /// smooth in `z` itself.
    leaf: bool,
    h_max: f64,
}

const GEOMETRIC_RATIO: f64 = 1.02;
const SMALLEST_OFFSET: f64 = 1e-13;

fn max_spacing(max: f64) -> f64 {
    (max / 500.0).min(0.02)
}

/// Offsets from an edge end: geometric near the end, then uniform.
fn geometric_offsets(max: f64) -> Vec<f64> {
    let h_max = max_spacing(max);
    let mut d = vec![];
    let mut x = SMALLEST_OFFSET * (1.0 + max);
    while x < max {
        d.push(x);
        x = (x * GEOMETRIC_RATIO).min(x + h_max);
    }
    d
}

impl EdgeTable {
    fn build(graph: &EnergyGraph, id: usize, z_cap: f64) -> Result<Self> {
        let e = graph.edge(id)?;
        let mut z: Vec<f64> = match e.kind {
            EdgeKind::RotationalInfinite => geometric_offsets(z_cap - e.z_lo).into_iter().map(|d| e.z_lo + d).collect(),
            EdgeKind::Well => {
                let half = 0.5 * (e.z_hi - e.z_lo);
                let offs = geometric_offsets(half);
                offs.iter()
                    .map(|d| e.z_lo + d)
                    .chain(std::iter::once(e.z_lo + half))
                    .chain(offs.iter().rev().map(|d| e.z_hi - d))
                    .collect()
            }
        };
        z.dedup();
        let values = z
            .iter()
            .map(|&x| Ok((graph.action_s(id, x)?, graph.period_t(id, x)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut ratio: Vec<f64> = values.iter().map(|(s, t)| s / t).collect();
        let mut inv_t: Vec<f64> = values.iter().map(|(_, t)| 1.0 / t).collect();
        // closed ends: S/T vanishes at every vertex; 1/T vanishes at interior
        // vertices and tends to 1/T₀ at the bottom of a well
        let bottom_inv_t = if e.is_leaf() { inv_t[0] } else { 0.0 };
        z.insert(0, e.z_lo);
        ratio.insert(0, 0.0);
        inv_t.insert(0, bottom_inv_t);
        if e.kind == EdgeKind::Well {
            z.push(e.z_hi);
            ratio.push(0.0);
            inv_t.push(0.0);
        }
        let mid = if e.kind == EdgeKind::Well { 0.5 * (e.z_lo + e.z_hi) } else { f64::INFINITY };
        Ok(Self {
            z,
            ratio,
            inv_t,
            lo: e.z_lo,
            hi: e.z_hi,
            mid,
            leaf: e.is_leaf(),
            h_max: match e.kind {
                EdgeKind::RotationalInfinite => max_spacing(z_cap - e.z_lo),
                EdgeKind::Well => max_spacing(0.5 * (e.z_hi - e.z_lo)),
            },
        })
    }

    fn covers(&self, z: f64) -> bool {
        z <= *self.z.last().expect("nonempty table")
    }

    fn eval(&self, z: f64) -> (f64, f64) {
        let i = self.z.partition_point(|&x| x <= z).clamp(1, self.z.len() - 1);
        let (z0, z1) = (self.z[i - 1], self.z[i]);
        // both coefficients are smooth in the logarithm of the distance to
        // the nearer end, where T diverges
        let geometric = z1 - z0 < 0.999 * self.h_max;
        let w = if !geometric || i == 1 || i == self.z.len() - 1 && self.hi.is_finite() || self.leaf && z1 <= self.mid {
            (z - z0) / (z1 - z0)
        } else if z1 <= self.mid {
            ((z - self.lo) / (z0 - self.lo)).ln() / ((z1 - self.lo) / (z0 - self.lo)).ln()
        } else {
            ((self.hi - z) / (self.hi - z0)).ln() / ((self.hi - z1) / (self.hi - z0)).ln()
        };
        let w = w.clamp(0.0, 1.0);
        (
            self.ratio[i - 1] + w * (self.ratio[i] - self.ratio[i - 1]),
            self.inv_t[i - 1] + w * (self.inv_t[i] - self.inv_t[i - 1]),
        )
    }
}

/// One accepted step: the velocity integral accrued and the vertex passages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRecord {
    pub qstar_increment: f64,
    /// `(vertex, chosen edge)` for every gluing event during the step.
    pub vertex_hits: Vec<(usize, usize)>,
}

/// The energy diffusion on the graph of a given potential at inverse
/// temperature `β`, with coefficients tabulated once.
#[derive(Debug, Clone)]
pub struct GraphDiffusion {
    graph: EnergyGraph,
    beta: f64,
    tables: Vec<EdgeTable>,
    rules: Vec<Option<(GluingRule, Vec<f64>)>>,
    sampler: GibbsSampler,
}

impl GraphDiffusion {
    pub fn new(v: &PeriodicPotential, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        let graph = EnergyGraph::build(v)?;
        let e0 = graph.e0();
        let spread = graph.critical().e0 - graph.critical().e_min;
        let z_cap = e0 + 2.0 * spread + 1.0 + 60.0 / beta;
        let tables = (0..graph.edges.len())
            .into_par_iter()
            .map(|id| EdgeTable::build(&graph, id, z_cap))
            .collect::<Result<Vec<_>>>()?;
        let rules = (0..graph.vertices.len())
            .map(|i| {
                let vx = &graph.vertices[i];
                if vx.energy.is_finite() && vx.edges.len() > 1 {
                    let rule = GluingRule::at_vertex(&graph, i)?;
                    let p = rule.probabilities();
                    Ok(Some((rule, p)))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sampler: GibbsSampler::new(v, beta),
            graph,
            beta,
            tables,
            rules,
        })
    }

    pub fn graph(&self) -> &EnergyGraph {
        &self.graph
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gluing_rule(&self, vertex: usize) -> Option<&GluingRule> {
        self.rules.get(vertex).and_then(|r| r.as_ref().map(|(g, _)| g))
    }

    /// `(S/T, 1/T)`; beyond the tabulated range the exact integrals are used.
    fn coefficients(&self, edge: usize, z: f64) -> (f64, f64) {
        let table = &self.tables[edge];
        if table.covers(z) {
            return table.eval(z);
        }
        let t = self.graph.period_t(edge, z).unwrap_or(f64::NAN);
        let s = self.graph.action_s(edge, z).unwrap_or(f64::NAN);
        (s / t, 1.0 / t)
    }

    /// Places the walker that left `edge` through `vertex` by `overshoot` on
    /// the next edge.
    fn glue<R: Rng>(&self, vertex: usize, from: usize, overshoot: f64, rng: &mut R, rec: &mut StepRecord) -> (usize, f64) {
        let energy = self.graph.vertices[vertex].energy;
        let next = match &self.rules[vertex] {
            Some((rule, probs)) => {
                let k = rule.choose(probs, rng);
                rule.adjacent[k].0
            }
            None => from,
        };
        if self.rules[vertex].is_some() {
            rec.vertex_hits.push((vertex, next));
        }
        let e = &self.graph.edges[next];
        let above = e.lower == vertex;
        let room = if above { e.z_hi - energy } else { energy - e.z_lo };
        let ov = overshoot.abs().min(0.5 * room).max(f64::MIN_POSITIVE);
        let z = if above { energy + ov } else { energy - ov };
        (next, z)
    }

    /// Advances `state` by `dt`, subdividing near vertices so that
    /// `σ√h < 0.1·(distance to the vertex)`, with `h ≥ dt/64`.
    pub fn step<R: Rng>(&self, state: &mut GraphState, dt: f64, rng: &mut R) -> StepRecord {
        let mut rec = StepRecord::default();
        let mut remaining = dt;
        let beta = self.beta;
        let ell = self.graph.potential().period;
        while remaining > 0.0 {
            let e = &self.graph.edges[state.edge_id];
            let (ratio, inv_t) = self.coefficients(state.edge_id, state.z);
            let sigma = (2.0 * ratio / beta).sqrt();
            let drift = 1.0 / beta - ratio;
            let dist = (state.z - e.z_lo).min(e.z_hi - state.z);
            let mut h = remaining;
            if sigma > 0.0 {
                let local = (0.1 * dist / sigma).powi(2);
                h = h.min(local.max(dt / 64.0));
            }
            if remaining - h < 1e-12 * dt {
                h = remaining;
            }
            if e.kind == EdgeKind::RotationalInfinite {
                rec.qstar_increment += f64::from(e.p_sign) * ell * inv_t * h;
            }
            let xi: f64 = StandardNormal.sample(rng);
            let mut z = state.z + drift * h + sigma * h.sqrt() * xi;
            let mut edge = state.edge_id;
            // vertex passages; more than one per substep is possible only on
            // very short edges
            for _ in 0..8 {
                let e = &self.graph.edges[edge];
                if z < e.z_lo {
                    (edge, z) = self.glue(e.lower, edge, e.z_lo - z, rng, &mut rec);
                } else if z > e.z_hi {
                    (edge, z) = self.glue(e.upper, edge, z - e.z_hi, rng, &mut rec);
                } else {
                    break;
                }
            }
            state.edge_id = edge;
            state.z = z;
            state.t += h;
            remaining -= h;
        }
        rec
    }

    /// Stationary draw: `(q, p)` from the Gibbs measure, mapped to the level-set
    /// component that contains it.
    pub fn sample_stationary<R: Rng>(&self, rng: &mut R) -> Result<GraphState> {
        let v = self.graph.potential();
        let (q, p) = self.sampler.sample(rng);
        let z = 0.5 * p * p + v.value(q);
        Ok(GraphState {
            edge_id: self.component_of(q, p, z)?,
            z,
            t: 0.0,
        })
    }

    /// Edge whose level-set component at energy `z` contains `(q, p)`.
    pub fn component_of(&self, q: f64, p: f64, z: f64) -> Result<usize> {
        let g = &self.graph;
        let candidates = g.edges_at(z);
        let ell = g.potential().period;
        for id in candidates.iter().copied() {
            let e = &g.edges[id];
            match e.kind {
                EdgeKind::RotationalInfinite => {
                    if (p >= 0.0) == (e.p_sign > 0) {
                        return Ok(id);
                    }
                }
                EdgeKind::Well => {
                    for (a, b) in g.q_support(id, z)? {
                        let shifted = a + (q - a).rem_euclid(ell);
                        if shifted <= b {
                            return Ok(id);
                        }
                    }
                }
            }
        }
        // rounding at a turning point; pick the nearest candidate
        candidates
            .first()
            .copied()
            .ok_or_else(|| Error::Domain(format!("no edge at energy {z}")))
    }

    /// CDF of the stationary energy, `P(H ≤ z)` under the Gibbs measure,
    /// computed directly on phase space (not from `T` or `S`).
    pub fn stationary_energy_cdf(&self, z: f64) -> Result<f64> {
        let v = self.graph.potential();
        let beta = self.beta;
        let ell = v.period;
        let spec = QuadratureSpec::default();
        let z_norm = quad_periodic(|x| (-beta * v.value(x * ell)).exp(), &spec)?;
        // the integrand has square-root kinks where V = z; split there
        let mut cuts: Vec<f64> = find_roots_on_torus(|x| v.value(x * ell) - z, 1e-14).iter().map(|r| r.x).collect();
        cuts.push(cuts.first().map_or(1.0, |c| c + 1.0));
        if cuts.len() == 1 {
            cuts.insert(0, 0.0);
        }
        let density = |x: f64| {
            let lift = z - v.value(x * ell);
            if lift <= 0.0 {
                0.0
            } else {
                (-beta * v.value(x * ell)).exp() * erf((beta * lift).sqrt())
            }
        };
        let mut mass = 0.0;
        for w in cuts.windows(2) {
            mass += quad_interval(density, w[0], w[1], &spec)?;
        }
        Ok(mass / z_norm)
    }
}

/// Error function by its continued fraction / series (double precision).
fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        // Maclaurin series
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0.0;
        while term.abs() > 1e-17 * sum.abs() {
            n += 1.0;
            term *= -x2 / n;
            sum += term / (2.0 * n + 1.0);
        }
        return 2.0 / std::f64::consts::PI.sqrt() * sum;
    }
    // erfc continued fraction (Lentz)
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        d = 1.0 / d;
        c = x + a / c;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 - (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Number of recorded times (evenly spaced, ending at `t_end`).
    pub n_records: usize,
    /// Keep the energy of every path at every recorded time.
    pub keep_energies: bool,
}

impl Default for GraphSimConfig {
    fn default() -> Self {
        Self {
            t_end: 200.0,
            dt: 1e-2,
            n_paths: 1000,
            seed: 0,
            n_records: 200,
            keep_energies: false,
        }
    }
}

impl GraphSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > self.dt) {
            return Err(Error::InvalidConfig(format!(
                "graph simulation needs 0 < dt < t_end, got dt={}, t_end={}",
                self.dt, self.t_end
            )));
        }
        if self.n_paths < 100 {
            return Err(Error::InvalidConfig(format!("n_paths must be at least 100, got {}", self.n_paths)));
        }
        if self.n_records == 0 {
            return Err(Error::InvalidConfig("n_records must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexHits {
    pub vertex: usize,
    /// `(edge, count)` in the order of the vertex's gluing rule.
    pub counts: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSimResult {
    pub times: Vec<f64>,
    pub mean_qstar: Vec<f64>,
    pub var_qstar: Vec<f64>,
    pub estimate: DiffusionEstimate,
    pub vertex_hits: Vec<VertexHits>,
    /// Longest stretch on a well edge during which `q*` moved (always 0).
    pub max_well_qstar_change: f64,
    /// `energies[r][path]` when requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub energies: Vec<Vec<f64>>,
    pub n_paths: usize,
    pub dt: f64,
}

struct PathOutput {
    qstar: Vec<f64>,
    energies: Vec<f64>,
    hits: Vec<(usize, usize)>,
    well_change: f64,
}

/// Simulates `n_paths` independent stationary paths and estimates
/// `D* = var(q*(t_end))/(2 t_end)`, with a grouped-jackknife 95% interval.
pub fn simulate_qstar(v: &PeriodicPotential, beta: f64, cfg: &GraphSimConfig) -> Result<GraphSimResult> {
    cfg.validate()?;
    let sim = GraphDiffusion::new(v, beta)?;
    simulate_with(&sim, cfg)
}

pub fn simulate_with(sim: &GraphDiffusion, cfg: &GraphSimConfig) -> Result<GraphSimResult> {
    cfg.validate()?;
    let n_steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let dt = cfg.t_end / n_steps as f64;
    let n_rec = cfg.n_records.min(n_steps);
    let record_at: Vec<usize> = (1..=n_rec).map(|r| r * n_steps / n_rec).collect();
    let outputs = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i as u64);
            let mut state = sim.sample_stationary(&mut rng)?;
            let mut out = PathOutput {
                qstar: Vec::with_capacity(n_rec),
                energies: Vec::new(),
                hits: Vec::new(),
                well_change: 0.0,
            };
            let mut qstar = 0.0;
            let mut next = 0;
            for step in 1..=n_steps {
                let on_well = sim.graph.edges[state.edge_id].kind == EdgeKind::Well;
                let rec = sim.step(&mut state, dt, &mut rng);
                if on_well && rec.vertex_hits.is_empty() {
                    out.well_change = out.well_change.max(rec.qstar_increment.abs());
                }
                qstar += rec.qstar_increment;
                out.hits.extend(rec.vertex_hits);
                if next < n_rec && record_at[next] == step {
                    out.qstar.push(qstar);
                    if cfg.keep_energies {
                        out.energies.push(state.z);
                    }
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let times: Vec<f64> = record_at.iter().map(|&s| s as f64 * dt).collect();
    let mut mean_qstar = Vec::with_capacity(n_rec);
    let mut var_qstar = Vec::with_capacity(n_rec);
    for r in 0..n_rec {
        let xs: Vec<f64> = outputs.iter().map(|o| o.qstar[r]).collect();
        mean_qstar.push(mean(&xs));
        var_qstar.push(variance(&xs));
    }
    let t_end = times[n_rec - 1];
    let finals: Vec<f64> = outputs.iter().map(|o| o.qstar[n_rec - 1]).collect();
    let value = variance(&finals) / (2.0 * t_end);
    let se = jackknife_se(&finals, 20, |xs| variance(xs) / (2.0 * t_end));

    let mut vertex_hits = Vec::new();
    for (vx, rule) in sim.rules.iter().enumerate() {
        if let Some((rule, _)) = rule {
            let counts = rule
                .adjacent
                .iter()
                .map(|&(e, _)| {
                    let c = outputs.iter().map(|o| o.hits.iter().filter(|h| **h == (vx, e)).count() as u64).sum();
                    (e, c)
                })
                .collect();
            vertex_hits.push(VertexHits { vertex: vx, counts });
        }
    }
    let energies = if cfg.keep_energies {
        (0..n_rec).map(|r| outputs.iter().map(|o| o.energies[r]).collect()).collect()
    } else {
        Vec::new()
    };
    let max_well_qstar_change = outputs.iter().map(|o| o.well_change).fold(0.0, f64::max);
    Ok(GraphSimResult {
        times,
        mean_qstar,
        var_qstar,
        estimate: DiffusionEstimate {
            value,
            ci_half_width: 1.96 * se,
            method: Method::FwGraphMc,
            gamma: None,
            beta: sim.beta,
        },
        vertex_hits,
        max_well_qstar_change,
        energies,
        n_paths: cfg.n_paths,
        dt,
    })
}

pub fn total_hits(h: &VertexHits) -> u64 {
    h.counts.iter().map(|c| c.1).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_distance;
    use std::f64::consts::PI;

    #[test]
    fn free_particle_coefficients() {
        let g = EnergyGraph::build(&PeriodicPotential::zero()).unwrap();
        let (b, s) = sde_coefficients(&g, 0, 0.5, 1.0).unwrap();
        assert!(b.abs() < 1e-12 && (s * s - 2.0).abs() < 1e-12);
        let (b, _) = sde_coefficients(&g, 1, 1.0, 1.0).unwrap();
        assert!((b + 1.0).abs() < 1e-12);
        assert!(sde_coefficients(&g, 0, 1.0, 0.0).is_err());
    }

    #[test]
    fn diffusion_matches_definition() {
        let v = PeriodicPotential::new(vec![1.0, 0.3], vec![], 1.0).unwrap();
        let g = EnergyGraph::build(&v).unwrap();
        for e in &g.edges {
            let z = if e.z_hi.is_finite() { 0.37 * e.z_lo + 0.63 * e.z_hi } else { e.z_lo + 0.8 };
            let (_, sigma) = sde_coefficients(&g, e.id, z, 1.7).unwrap();
            let (t, s) = (g.period_t(e.id, z).unwrap(), g.action_s(e.id, z).unwrap());
            assert!((sigma * sigma * 1.7 * t / (2.0 * s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gluing_probabilities() {
        let sim = GraphDiffusion::new(&PeriodicPotential::pendulum(), 1.0).unwrap();
        let top = sim.graph().vertices.iter().position(|v| (v.energy - 1.0).abs() < 1e-12).unwrap();
        let rule = sim.gluing_rule(top).unwrap();
        let mut probs: Vec<(EdgeKind, f64)> = rule
            .adjacent
            .iter()
            .zip(rule.probabilities())
            .map(|(a, p)| (sim.graph().edges[a.0].kind, p))
            .collect();
        probs.sort_by(|a, b| b.1.total_cmp(&a.1));
        assert_eq!(probs[0].0, EdgeKind::Well);
        assert!((probs[0].1 - 0.5).abs() < 1e-8);
        assert!((probs[1].1 - 0.25).abs() < 1e-8 && (probs[2].1 - 0.25).abs() < 1e-8);
        // S-limits themselves: 8/π on the well, 4/π on each rotational edge
        let well = rule.adjacent.iter().find(|a| sim.graph().edges[a.0].kind == EdgeKind::Well).unwrap();
        assert!((well.1 - 8.0 / PI).abs() < 1e-8);

        let free = GraphDiffusion::new(&PeriodicPotential::zero(), 1.0).unwrap();
        assert_eq!(free.gluing_rule(0).unwrap().probabilities(), vec![0.5, 0.5]);
    }

    #[test]
    fn tables_match_exact_coefficients() {
        let sim = GraphDiffusion::new(&PeriodicPotential::pendulum(), 1.0).unwrap();
        for e in &sim.graph().edges {
            for &z in &[-0.999, -0.3, 0.5, 0.99, 0.999_999, 1.000_001, 1.5, 4.0, 20.0] {
                if !e.contains_open(z) {
                    continue;
                }
                let (r, it) = sim.coefficients(e.id, z);
                let t = sim.graph().period_t(e.id, z).unwrap();
                let s = sim.graph().action_s(e.id, z).unwrap();
                assert!((r - s / t).abs() < 5e-6 * (s / t), "edge {} z {z}: {r} vs {}", e.id, s / t);
                assert!((it - 1.0 / t).abs() < 5e-6 / t);
            }
        }
    }

    #[test]
    fn erf_values() {
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erf(3.0) - 0.999_977_909_503_001_4).abs() < 1e-15);
    }

    #[test]
    fn stationary_sampler_and_components() {
        let sim = GraphDiffusion::new(&PeriodicPotential::pendulum(), 1.0).unwrap();
        let mut rng = stream(3, 0);
        let mut zs = Vec::new();
        for _ in 0..20_000 {
            let s = sim.sample_stationary(&mut rng).unwrap();
            assert!(sim.graph().edges[s.edge_id].contains_closed(s.z));
            zs.push(s.z);
        }
        let d = ks_distance(&zs, |z| sim.stationary_energy_cdf(z).unwrap());
        assert!(d < 0.015, "{d}");
        // CDF from phase space equals the graph form Σ∫T e^{−βz}dz / Z_β
        let zb = sim.graph().partition(1.0).unwrap();
        let z0 = (2.0 * PI).sqrt();
        assert!((zb / z0 - crate::potential::PeriodicPotential::pendulum().partition_scalars(1.0).unwrap().z).abs() < 1e-8);
        assert!((sim.stationary_energy_cdf(50.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qstar_is_frozen_on_wells_and_reproducible() {
        let cfg = GraphSimConfig {
            t_end: 5.0,
            dt: 1e-2,
            n_paths: 100,
            seed: 11,
            n_records: 10,
            keep_energies: false,
        };
        let a = simulate_qstar(&PeriodicPotential::pendulum(), 1.0, &cfg).unwrap();
        let b = simulate_qstar(&PeriodicPotential::pendulum(), 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_well_qstar_change, 0.0);
        assert!(a.vertex_hits.iter().map(total_hits).sum::<u64>() > 0);
        assert!(simulate_qstar(&PeriodicPotential::pendulum(), 1.0, &GraphSimConfig { n_paths: 10, ..cfg }).is_err());
    }

    #[test]
    fn free_particle_estimate() {
        let cfg = GraphSimConfig {
            t_end: 50.0,
            dt: 1e-2,
            n_paths: 400,
            seed: 5,
            n_records: 5,
            keep_energies: false,
        };
        let r = simulate_qstar(&PeriodicPotential::zero(), 1.0, &cfg).unwrap();
        assert!(r.estimate.contains(1.0), "{:?}", r.estimate);
    }
}
