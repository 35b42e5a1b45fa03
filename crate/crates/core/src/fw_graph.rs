//! The graph of connected components of level sets of `H(q, p) = p²/2 + V(q)`
//! on the cylinder, with the orbit integrals `T(z)` (period) and `S(z) = ∮|p|dq`
//! on each edge, and the small-friction diffusivity `D*` built from them.
//!
//! Edges below the global maximum `E0` of `V` are wells (closed orbits, one
//! edge per component of `{V < z}` per energy band); above `E0` there are two
//! rotational edges, one per sign of `p`.

use crate::error::{Error, Result};
use crate::numerics::{quad_exp_tail, quad_interval, quad_periodic, Bracket, QuadratureSpec};
use crate::potential::{CriticalSet, PeriodicPotential};
use crate::{DiffusionEstimate, Method};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Interior,
    Minimum,
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub energy: f64,
    pub kind: VertexKind,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Well,
    RotationalInfinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub kind: EdgeKind,
    pub z_lo: f64,
    /// `f64::INFINITY` for rotational edges.
    pub z_hi: f64,
    /// +1 / −1 on rotational edges, 0 on wells.
    pub p_sign: i8,
    pub lower: usize,
    pub upper: usize,
    /// Indices into the unrolled critical-point list: bounding maxima and the
    /// deepest minimum of the well.
    #[serde(skip)]
    support: Option<(usize, usize, usize)>,
    #[serde(skip)]
    lower_is_minimum: bool,
}

impl Edge {
    pub fn is_leaf(&self) -> bool {
        self.kind == EdgeKind::Well && self.lower_is_minimum
    }

    pub fn contains_open(&self, z: f64) -> bool {
        z > self.z_lo && z < self.z_hi
    }

    pub fn contains_closed(&self, z: f64) -> bool {
        z >= self.z_lo && z <= self.z_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CritPoint {
    q: f64,
    energy: f64,
    is_max: bool,
}

#[derive(Debug, Clone)]
pub struct EnergyGraph {
    potential: PeriodicPotential,
    critical: CriticalSet,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Critical points from the global maximum `q_top` to `q_top + ℓ`, both ends
    /// included.
    unrolled: Vec<CritPoint>,
    q_top: f64,
    spec: QuadratureSpec,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }
}

/// Energies closer than this (relative to the oscillation of `V`) are treated
/// as one critical level.
const LEVEL_TOL: f64 = 1e-10;

pub fn build_graph(v: &PeriodicPotential) -> Result<EnergyGraph> {
    EnergyGraph::build(v)
}

impl EnergyGraph {
    pub fn build(v: &PeriodicPotential) -> Result<Self> {
        v.validate()?;
        let critical = v.critical_points();
        let ell = v.period;
        if v.is_constant() {
            return Ok(Self::free(v.clone(), critical));
        }
        if critical.degenerate {
            return Err(Error::DegeneratePotential(
                "a critical point of V has vanishing curvature".into(),
            ));
        }
        let top = critical
            .global_max()
            .ok_or_else(|| Error::DegeneratePotential("no maximum found".into()))?;
        let q_top = top.q;
        let mut unrolled: Vec<CritPoint> = critical
            .maxima
            .iter()
            .map(|c| (c, true))
            .chain(critical.minima.iter().map(|c| (c, false)))
            .map(|(c, is_max)| CritPoint {
                q: q_top + (c.q - q_top).rem_euclid(ell),
                energy: c.energy,
                is_max,
            })
            .collect();
        unrolled.sort_by(|a, b| a.q.total_cmp(&b.q));
        // the global maximum must come first even if rem_euclid rounded it to ℓ
        if let Some(pos) = unrolled.iter().position(|c| c.is_max && c.q == q_top + ell) {
            unrolled[pos].q = q_top;
            unrolled.sort_by(|a, b| a.q.total_cmp(&b.q));
        }
        unrolled.push(CritPoint {
            q: q_top + ell,
            energy: top.energy,
            is_max: true,
        });
        let alternating = unrolled.iter().enumerate().all(|(i, c)| c.is_max == (i % 2 == 0));
        if !alternating || unrolled.len() < 3 {
            return Err(Error::DegeneratePotential(
                "maxima and minima of V do not alternate".into(),
            ));
        }

        let n_seg = (unrolled.len() - 1) / 2;
        let e0 = critical.e0;
        let spread = (e0 - critical.e_min).max(f64::MIN_POSITIVE);
        let same_level = |a: f64, b: f64| (a - b).abs() <= LEVEL_TOL * spread;

        let mut vertices: Vec<Vertex> = Vec::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut uf = UnionFind((0..n_seg).collect());
        // per component root: (lo segment, hi segment, open edge id)
        let mut comp: Vec<(usize, usize, usize)> = Vec::with_capacity(n_seg);
        let deepest = |lo: usize, hi: usize, pts: &[CritPoint]| {
            (lo..=hi)
                .map(|s| 2 * s + 1)
                .min_by(|&a, &b| pts[a].energy.total_cmp(&pts[b].energy))
                .unwrap()
        };
        for s in 0..n_seg {
            let m = unrolled[2 * s + 1];
            let vid = vertices.len();
            vertices.push(Vertex {
                energy: m.energy,
                kind: VertexKind::Minimum,
                edges: vec![edges.len()],
            });
            edges.push(Edge {
                id: edges.len(),
                kind: EdgeKind::Well,
                z_lo: m.energy,
                z_hi: f64::NAN,
                p_sign: 0,
                lower: vid,
                upper: usize::MAX,
                support: Some((2 * s, 2 * s + 2, 2 * s + 1)),
                lower_is_minimum: true,
            });
            comp.push((s, s, s));
        }

        // interior maxima, lowest first, equal levels processed together
        let mut interior: Vec<usize> = (1..n_seg).map(|i| 2 * i).filter(|&i| !same_level(unrolled[i].energy, e0)).collect();
        interior.sort_by(|&a, &b| unrolled[a].energy.total_cmp(&unrolled[b].energy));
        let mut k = 0;
        while k < interior.len() {
            let level = unrolled[interior[k]].energy;
            let mut group = Vec::new();
            while k < interior.len() && same_level(unrolled[interior[k]].energy, level) {
                group.push(interior[k] / 2);
                k += 1;
            }
            let mut merged_old: Vec<(usize, usize)> = Vec::new();
            for &i in &group {
                let (a, b) = (uf.find(i - 1), uf.find(i));
                merged_old.push((a, b));
                uf.0[b] = a;
            }
            let mut olds: Vec<usize> = merged_old.iter().flat_map(|&(a, b)| [a, b]).collect();
            olds.sort_unstable();
            olds.dedup();
            let mut new_roots: Vec<usize> = olds.iter().map(|&r| uf.find(r)).collect();
            new_roots.sort_unstable();
            new_roots.dedup();
            for root in new_roots {
                let vid = vertices.len();
                let members: Vec<usize> = olds.iter().copied().filter(|&r| uf.find(r) == root).collect();
                let lo = members.iter().map(|&r| comp[r].0).min().unwrap();
                let hi = members.iter().map(|&r| comp[r].1).max().unwrap();
                let mut adj = Vec::new();
                for &r in &members {
                    let e = comp[r].2;
                    edges[e].z_hi = level;
                    edges[e].upper = vid;
                    adj.push(e);
                }
                let new_edge = edges.len();
                adj.push(new_edge);
                vertices.push(Vertex {
                    energy: level,
                    kind: VertexKind::Interior,
                    edges: adj,
                });
                edges.push(Edge {
                    id: new_edge,
                    kind: EdgeKind::Well,
                    z_lo: level,
                    z_hi: f64::NAN,
                    p_sign: 0,
                    lower: vid,
                    upper: usize::MAX,
                    support: Some((2 * lo, 2 * hi + 2, deepest(lo, hi, &unrolled))),
                    lower_is_minimum: false,
                });
                comp[root] = (lo, hi, new_edge);
            }
        }

        let top_vertex = vertices.len();
        let mut roots: Vec<usize> = (0..n_seg).map(|s| uf.find(s)).collect();
        roots.sort_unstable();
        roots.dedup();
        let mut adj = Vec::new();
        for r in roots {
            let e = comp[r].2;
            edges[e].z_hi = e0;
            edges[e].upper = top_vertex;
            adj.push(e);
        }
        let first_rot = edges.len();
        adj.extend([first_rot, first_rot + 1]);
        vertices.push(Vertex {
            energy: e0,
            kind: VertexKind::Interior,
            edges: adj,
        });
        Self::push_rotational(&mut vertices, &mut edges, top_vertex, e0);

        Ok(Self {
            potential: v.clone(),
            critical,
            vertices,
            edges,
            unrolled,
            q_top,
            spec: QuadratureSpec::default(),
        })
    }

    fn free(v: PeriodicPotential, critical: CriticalSet) -> Self {
        let e0 = v.offset;
        let mut vertices = vec![Vertex {
            energy: e0,
            kind: VertexKind::Minimum,
            edges: vec![0, 1],
        }];
        let mut edges = Vec::new();
        Self::push_rotational(&mut vertices, &mut edges, 0, e0);
        Self {
            potential: v,
            critical,
            vertices,
            edges,
            unrolled: Vec::new(),
            q_top: 0.0,
            spec: QuadratureSpec::default(),
        }
    }

    fn push_rotational(vertices: &mut Vec<Vertex>, edges: &mut Vec<Edge>, root: usize, e0: f64) {
        for sign in [1i8, -1] {
            let id = edges.len();
            let inf = vertices.len();
            vertices.push(Vertex {
                energy: f64::INFINITY,
                kind: VertexKind::Infinity,
                edges: vec![id],
            });
            edges.push(Edge {
                id,
                kind: EdgeKind::RotationalInfinite,
                z_lo: e0,
                z_hi: f64::INFINITY,
                p_sign: sign,
                lower: root,
                upper: inf,
                support: None,
                lower_is_minimum: false,
            });
        }
    }

    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }

    pub fn critical(&self) -> &CriticalSet {
        &self.critical
    }

    pub fn with_quadrature(mut self, spec: QuadratureSpec) -> Self {
        self.spec = spec;
        self
    }

    /// Global maximum of `V`, where the rotational edges start.
    pub fn e0(&self) -> f64 {
        self.edges.iter().find(|e| e.kind == EdgeKind::RotationalInfinite).map_or(0.0, |e| e.z_lo)
    }

    pub fn edge(&self, id: usize) -> Result<&Edge> {
        self.edges
            .get(id)
            .ok_or_else(|| Error::InvalidConfig(format!("no edge with id {id}")))
    }

    pub fn rotational_edge(&self, sign: i8) -> &Edge {
        self.edges
            .iter()
            .find(|e| e.kind == EdgeKind::RotationalInfinite && e.p_sign == sign)
            .expect("every graph has two rotational edges")
    }

    pub fn well_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Well)
    }

    /// Ids of edges whose open energy interval contains `z`.
    pub fn edges_at(&self, z: f64) -> Vec<usize> {
        self.edges.iter().filter(|e| e.contains_open(z)).map(|e| e.id).collect()
    }

    fn check(&self, id: usize, z: f64, closed: bool) -> Result<&Edge> {
        let e = self.edge(id)?;
        let ok = if closed { e.contains_closed(z) } else { e.contains_open(z) };
        if !ok || !z.is_finite() {
            return Err(Error::OutOfRange {
                edge: id,
                z,
                lo: e.z_lo,
                hi: e.z_hi,
            });
        }
        Ok(e)
    }

    /// Turning points `(q₋, q₊)` of the well orbit at energy `z`, with
    /// `q₋ < q₊` in the unrolled coordinate.
    pub fn turning_points(&self, id: usize, z: f64) -> Result<(f64, f64)> {
        let e = self.check(id, z, true)?;
        let (left, right, reference) = e.support.ok_or_else(|| Error::OutOfRange {
            edge: id,
            z,
            lo: e.z_lo,
            hi: e.z_hi,
        })?;
        let pts = &self.unrolled;
        let stop = |j: usize, boundary: usize| j == boundary || (pts[j].is_max && pts[j].energy > z);
        let tol = 1e-15 * self.potential.period;
        let f = |q: f64| self.potential.value(q) - z;

        let mut j = reference;
        while !stop(j - 1, left) {
            j -= 1;
        }
        let a = Bracket {
            lo: pts[j - 1].q,
            hi: pts[j].q,
        }
        .bisect(f, tol);

        let mut j = reference;
        while !stop(j + 1, right) {
            j += 1;
        }
        let b = Bracket {
            lo: pts[j].q,
            hi: pts[j + 1].q,
        }
        .bisect(f, tol);
        Ok((a, b))
    }

    /// Intervals of `q` swept by the orbit at energy `z`.
    pub fn q_support(&self, id: usize, z: f64) -> Result<Vec<(f64, f64)>> {
        let e = self.check(id, z, true)?;
        match e.kind {
            EdgeKind::Well => Ok(vec![self.turning_points(id, z)?]),
            EdgeKind::RotationalInfinite => Ok(vec![(self.q_top, self.q_top + self.potential.period)]),
        }
    }

    fn harmonic_period(&self, q_min: f64) -> f64 {
        2.0 * PI / self.potential.eval(q_min, 2).sqrt()
    }

    /// `∫ h(p, q) dq/|p|` over the orbit at energy `z` (both branches for wells).
    fn orbit_integral_unchecked<H: Fn(f64, f64) -> f64>(&self, e: &Edge, z: f64, h: &H) -> Result<f64> {
        let v = &self.potential;
        match e.kind {
            EdgeKind::RotationalInfinite => {
                let ell = v.period;
                let q_top = self.q_top;
                let lift = z - v.value(q_top);
                let sign = f64::from(e.p_sign);
                let integrand = |u: f64| {
                    let jac = 1.0 - (2.0 * PI * u).cos();
                    if jac == 0.0 {
                        return 0.0;
                    }
                    // offset from the nearer copy of q_top
                    let t = if u <= 0.5 { u } else { u - 1.0 };
                    let dq = ell * x_minus_sin(2.0 * PI * t) / (2.0 * PI);
                    let gap = (lift - v.increment(q_top, dq)).max(0.0);
                    let p = (2.0 * gap).sqrt();
                    if p == 0.0 {
                        return 0.0;
                    }
                    ell * jac * h(sign * p, q_top + dq) / p
                };
                quad_periodic(integrand, &self.spec)
            }
            EdgeKind::Well => {
                let (a, b) = self.turning_points(e.id, z)?;
                let w = 0.5 * (b - a);
                if w <= 0.0 {
                    return Ok(0.0);
                }
                let inner: Vec<f64> = self
                    .unrolled
                    .iter()
                    .filter(|c| c.is_max && c.q > a && c.q < b)
                    .map(|c| c.q)
                    .collect();
                if !inner.is_empty() {
                    return self.split_well_integral(z, a, b, &inner, h);
                }
                // q = c − w cos θ with θ = φ − sin(2φ)/2. Each half of the orbit is
                // measured from its own turning point, taken as an exact root, so the
                // gap vanishes quadratically in θ and the even extension is smooth.
                let integrand = |phi: f64| {
                    let s = phi.sin();
                    let jac = 2.0 * s * s;
                    if jac == 0.0 {
                        return 0.0;
                    }
                    let (sin_theta, q, gap) = if phi <= 0.5 * PI {
                        let theta = 0.5 * x_minus_sin(2.0 * phi);
                        let dq = 2.0 * w * (0.5 * theta).sin().powi(2);
                        (theta.sin(), a + dq, -v.increment(a, dq))
                    } else {
                        let theta_c = 0.5 * x_minus_sin(2.0 * (PI - phi));
                        let dq = -2.0 * w * (0.5 * theta_c).sin().powi(2);
                        (theta_c.sin(), b + dq, -v.increment(b, dq))
                    };
                    let p = (2.0 * gap.max(0.0)).sqrt();
                    if p == 0.0 {
                        return 0.0;
                    }
                    jac * w * sin_theta * (h(p, q) + h(-p, q)) / p
                };
                let unit = quad_periodic(|x| integrand((2.0 * PI * x - PI).abs()), &self.spec)?;
                Ok(PI * unit)
            }
        }
    }

    /// Well orbit that passes over interior maxima: integrate piecewise between
    /// them, with `q = a + (m − a)t²` on the end pieces to absorb the
    /// inverse square root at the turning points.
    fn split_well_integral<H: Fn(f64, f64) -> f64>(&self, z: f64, a: f64, b: f64, inner: &[f64], h: &H) -> Result<f64> {
        let v = &self.potential;
        let branch_sum = |q: f64, gap: f64| {
            let p = (2.0 * gap.max(0.0)).sqrt();
            if p == 0.0 {
                0.0
            } else {
                (h(p, q) + h(-p, q)) / p
            }
        };
        let first = inner[0];
        let last = inner[inner.len() - 1];
        let left = quad_interval(
            |t| {
                let dq = (first - a) * t * t;
                2.0 * (first - a) * t * branch_sum(a + dq, -v.increment(a, dq))
            },
            0.0,
            1.0,
            &self.spec,
        )?;
        let right = quad_interval(
            |t| {
                let dq = (b - last) * t * t;
                2.0 * (b - last) * t * branch_sum(b - dq, -v.increment(b, -dq))
            },
            0.0,
            1.0,
            &self.spec,
        )?;
        let mut total = left + right;
        for pair in inner.windows(2) {
            let (m1, m2) = (pair[0], pair[1]);
            let (lift1, lift2) = (z - v.value(m1), z - v.value(m2));
            let mid = 0.5 * (m1 + m2);
            total += quad_interval(
                |q| {
                    let gap = if q < mid { lift1 - v.difference(q, m1) } else { lift2 - v.difference(q, m2) };
                    branch_sum(q, gap)
                },
                m1,
                m2,
                &self.spec,
            )?;
        }
        Ok(total)
    }

    fn near_well_bottom(&self, e: &Edge, z: f64) -> bool {
        e.is_leaf() && z - e.z_lo <= 1e-12 * (1.0 + z.abs())
    }

    /// Period of the orbit at energy `z` on edge `id`.
    pub fn period_t(&self, id: usize, z: f64) -> Result<f64> {
        let e = self.check(id, z, false)?;
        if self.near_well_bottom(e, z) {
            let (_, _, r) = e.support.expect("wells carry support");
            return Ok(self.harmonic_period(self.unrolled[r].q));
        }
        self.orbit_integral_unchecked(e, z, &|_, _| 1.0)
    }

    /// `S(z) = ∮|p| dq`; defined on the closed energy interval of the edge.
    pub fn action_s(&self, id: usize, z: f64) -> Result<f64> {
        let e = self.check(id, z, true)?;
        if e.is_leaf() && z <= e.z_lo {
            return Ok(0.0);
        }
        if self.near_well_bottom(e, z) {
            let (_, _, r) = e.support.expect("wells carry support");
            return Ok(self.harmonic_period(self.unrolled[r].q) * (z - e.z_lo));
        }
        self.orbit_integral_unchecked(e, z, &|p, _| p * p)
    }

    /// Orbit average `(1/T) ∫ f dq/|p|`.
    pub fn orbit_average<F: Fn(f64, f64) -> f64>(&self, id: usize, z: f64, f: F) -> Result<f64> {
        let e = self.check(id, z, false)?;
        let t = self.period_t(id, z)?;
        Ok(self.orbit_integral_unchecked(e, z, &f)? / t)
    }

    /// Mean velocity on the orbit: `±ℓ/T(z)` on rotational edges, 0 on wells.
    pub fn pbar(&self, id: usize, z: f64) -> Result<f64> {
        let e = self.check(id, z, false)?;
        match e.kind {
            EdgeKind::Well => Ok(0.0),
            EdgeKind::RotationalInfinite => Ok(f64::from(e.p_sign) * self.potential.period / self.period_t(id, z)?),
        }
    }

    /// `Z_β = Σ ∫ T(z) e^{−βz} dz` over all edges. Each edge term is integrated
    /// by parts using `S′ = T`, so only the bounded `S` is ever sampled.
    pub fn partition(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        let mut total = 0.0;
        for e in &self.edges {
            let s = |z: f64| self.action_s(e.id, z).unwrap_or(f64::NAN);
            match e.kind {
                EdgeKind::RotationalInfinite => {
                    let bulk = quad_exp_tail(s, beta, e.z_lo, &self.spec)?;
                    total += beta * bulk - s(e.z_lo) * (-beta * e.z_lo).exp();
                }
                EdgeKind::Well => {
                    let bulk = quad_interval(|z| s(z) * (-beta * z).exp(), e.z_lo, e.z_hi, &self.spec)?;
                    total += beta * bulk + s(e.z_hi) * (-beta * e.z_hi).exp() - s(e.z_lo) * (-beta * e.z_lo).exp();
                }
            }
        }
        Ok(total)
    }

    /// `D* = 2ℓ²/(βZ_β) ∫_{E0}^∞ e^{−βz}/S(z) dz` on the rotational edge.
    pub fn dstar(&self, beta: f64) -> Result<DiffusionEstimate> {
        let zb = self.partition(beta)?;
        let rot = self.rotational_edge(1).id;
        let e0 = self.e0();
        let tail = quad_exp_tail(|z| 1.0 / self.action_s(rot, z).unwrap_or(f64::NAN), beta, e0, &self.spec)?;
        let ell = self.potential.period;
        let value = 2.0 * ell * ell * tail / (beta * zb);
        if !value.is_finite() {
            return Err(Error::NonConvergence {
                what: "D* quadrature",
                estimate: value,
                error: f64::INFINITY,
            });
        }
        Ok(DiffusionEstimate {
            value,
            ci_half_width: 1e-9 * value.abs(),
            method: Method::FwFormula,
            gamma: None,
            beta,
        })
    }

    /// Period of small oscillations at the global minimum.
    pub fn t0(&self) -> Result<f64> {
        let m = self
            .critical
            .global_min()
            .ok_or_else(|| Error::DegeneratePotential("V has no minimum".into()))?;
        Ok(self.harmonic_period(m.q))
    }

    pub fn asymptotics(&self, beta: f64) -> Result<DstarAsymptotics> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if self.potential.is_constant() {
            return Err(Error::DegeneratePotential(
                "D* asymptotics need a potential well".into(),
            ));
        }
        let t0 = self.t0()?;
        let e0 = self.e0();
        let s_e0 = self.action_s(self.rotational_edge(1).id, e0)?;
        let barrier = e0 - self.critical.e_min;
        let ell = self.potential.period;
        Ok(DstarAsymptotics {
            low_beta_quoted: 2.0 / beta,
            low_beta_exact: 1.0 / beta,
            high_beta: 2.0 * ell * ell * (-beta * barrier).exp() / (beta * t0 * s_e0),
            t0,
            s_e0,
            barrier,
        })
    }
}

/// Closed-form limits of `D*` for small and large `β`.
///
/// `low_beta_quoted = 2/β` is the commonly quoted constant; `low_beta_exact = 1/β`
/// is what the exact formula gives in the free limit. Both are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DstarAsymptotics {
    pub low_beta_quoted: f64,
    pub low_beta_exact: f64,
    /// `2ℓ² e^{−βΔE} / (β T₀ S(E0))`, `ΔE = E0 − min V`.
    pub high_beta: f64,
    pub t0: f64,
    pub s_e0: f64,
    pub barrier: f64,
}

/// `x − sin x` without cancellation near 0.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() > 0.5 {
        return x - x.sin();
    }
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum = term;
    for k in 1..10 {
        let n = (2 * k + 2) as f64;
        term *= -x2 / (n * (n + 1.0));
        sum += term;
    }
    sum
}

pub fn period_t(g: &EnergyGraph, edge: usize, z: f64) -> Result<f64> {
    g.period_t(edge, z)
}

pub fn action_s(g: &EnergyGraph, edge: usize, z: f64) -> Result<f64> {
    g.action_s(edge, z)
}

pub fn graph_partition(v: &PeriodicPotential, beta: f64) -> Result<f64> {
    EnergyGraph::build(v)?.partition(beta)
}

pub fn dstar(v: &PeriodicPotential, beta: f64) -> Result<DiffusionEstimate> {
    EnergyGraph::build(v)?.dstar(beta)
}

pub fn dstar_asymptotics(v: &PeriodicPotential, beta: f64) -> Result<DstarAsymptotics> {
    if v.is_constant() {
        return Err(Error::DegeneratePotential(
            "D* asymptotics need a potential well".into(),
        ));
    }
    EnergyGraph::build(v)?.asymptotics(beta)
}
