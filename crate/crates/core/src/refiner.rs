//! Continuous refinement of data use and compute shares for a fixed tree
//! and placement.

use crate::error::{Error, Result};
use crate::model::{Allocation, Endpoint, Scenario, Solution};
use crate::perf::{self, ceil_epochs, KModelParams, PHI_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub max_iters: usize,
    /// Stop once a step moves no coordinate by more than this (normalized units).
    pub step_tol: f64,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    /// Largest penalty coefficient before giving up on the deadline.
    pub penalty_max: f64,
    /// Smallest compute share, as a fraction of the node share.
    pub rho_floor: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_iters: 500,
            step_tol: 1e-9,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            penalty_max: 1e12,
            rho_floor: 1e-6,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.step_tol > 0.0) || !(self.penalty_init > 0.0) {
            return Err(Error::validation("refiner iterations and tolerances must be positive"));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::validation("penalty growth factor must exceed 1"));
        }
        if !(self.rho_floor > 0.0 && self.rho_floor <= 1.0) {
            return Err(Error::validation("compute floor must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Child {
    Source,
    Instance(usize),
}

/// Coefficients of a fixed tree and placement. Variables are the data `x`
/// of each used source followed by the compute `rho` of each instance.
#[derive(Debug, Clone)]
pub struct Frame {
    pub sources: Vec<usize>,
    pub delta: Vec<f64>,
    pub share: Vec<f64>,
    rho_floor: f64,
    total_delta: f64,
    k_model: KModelParams,
    num_instances: usize,
    num_layers: usize,
    /// Incoming data of each instance per unit of each source, sparse.
    in_coef: Vec<Vec<(usize, f64)>>,
    /// Energy per Mbit of each source that does not depend on `rho`.
    linear: Vec<f64>,
    /// `r * e_f` per instance; divided by `rho` it prices incoming data.
    fixed: Vec<f64>,
    compute_req: Vec<f64>,
    /// Per instance: each child and the link pair it arrives over.
    children: Vec<Vec<(Child, Option<usize>)>>,
    /// Per node pair: capacity and flow per unit of each source.
    pairs: Vec<(f64, Vec<(usize, f64)>)>,
    /// Instances leaves first.
    order: Vec<usize>,
    root: usize,
}

/// Objective, epoch time and unrounded epochs at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub energy: f64,
    pub time: f64,
    pub epochs_raw: f64,
    pub objective: f64,
}

impl Frame {
    pub fn new(solution: &Solution, scenario: &Scenario, cfg: &RefineConfig) -> Frame {
        let tree = &solution.tree;
        let mapping = &solution.deployment.mapping;
        let topo = tree.topology(scenario.sources.len());
        let sources = tree.used_sources.clone();
        let slot_of = |d: usize| sources.iter().position(|&s| s == d).unwrap();
        let n = tree.num_instances();

        let mut in_coef: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut out_coef: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let merge = |into: &mut Vec<(usize, f64)>, from: &[(usize, f64)], scale: f64| {
            for &(s, c) in from {
                match into.iter_mut().find(|(t, _)| *t == s) {
                    Some(entry) => entry.1 += c * scale,
                    None => into.push((s, c * scale)),
                }
            }
        };
        let mut edge_coef: Vec<Vec<(usize, f64)>> = vec![Vec::new(); tree.edges.len()];
        for &i in &topo.order {
            let mut acc = Vec::new();
            for &e in &topo.children[i] {
                let c = match tree.edges[e].child {
                    Endpoint::Source(d) => vec![(slot_of(d), 1.0)],
                    Endpoint::Instance(c) => out_coef[c].clone(),
                };
                merge(&mut acc, &c, 1.0);
                edge_coef[e] = c;
            }
            let q = scenario.layers[tree.instances[i].layer].data_ratio;
            out_coef[i] = acc.iter().map(|&(s, c)| (s, c * q)).collect();
            in_coef[i] = acc;
        }

        let mut linear = vec![0.0; sources.len()];
        let mut fixed = vec![0.0; n];
        let mut compute_req = vec![0.0; n];
        for i in 0..n {
            let layer = tree.instances[i].layer;
            let node = &scenario.nodes[mapping[i]];
            let r = scenario.layers[layer].compute_req;
            compute_req[i] = r;
            fixed[i] = r * node.e_f[layer];
            for &(s, c) in &in_coef[i] {
                linear[s] += r * node.e_p * c;
            }
        }
        let mut pair_index: Vec<((usize, usize), usize)> = Vec::new();
        let mut pairs: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
        let mut children: Vec<Vec<(Child, Option<usize>)>> = vec![Vec::new(); n];
        for (e, edge) in tree.edges.iter().enumerate() {
            let (from, child) = match edge.child {
                Endpoint::Source(d) => (scenario.sources[d].host, Child::Source),
                Endpoint::Instance(c) => (mapping[c], Child::Instance(c)),
            };
            let to = mapping[edge.parent];
            let mut link = None;
            if from != to {
                let e_net = scenario.nodes[from].e_net;
                for &(s, c) in &edge_coef[e] {
                    linear[s] += e_net * c;
                }
                let p = match pair_index.iter().find(|(k, _)| *k == (from, to)) {
                    Some(&(_, p)) => p,
                    None => {
                        pairs.push((scenario.link(from, to), Vec::new()));
                        pair_index.push(((from, to), pairs.len() - 1));
                        pairs.len() - 1
                    }
                };
                merge(&mut pairs[p].1, &edge_coef[e], 1.0);
                link = Some(p);
            }
            children[edge.parent].push((child, link));
        }

        let delta: Vec<f64> = sources.iter().map(|&d| scenario.sources[d].volume).collect();
        Frame {
            total_delta: delta.iter().sum(),
            delta,
            share: solution.allocation.rho.clone(),
            sources,
            rho_floor: cfg.rho_floor,
            k_model: scenario.k_model,
            num_instances: n,
            num_layers: scenario.num_layers(),
            in_coef,
            linear,
            fixed,
            compute_req,
            children,
            pairs,
            order: topo.order,
            root: topo.root,
        }
    }

    pub fn dim(&self) -> usize {
        self.sources.len() + self.num_instances
    }

    /// Upper bound of every variable.
    pub fn upper(&self) -> Vec<f64> {
        self.delta.iter().chain(&self.share).copied().collect()
    }

    /// Lower bound of every variable.
    pub fn lower(&self) -> Vec<f64> {
        self.delta
            .iter()
            .map(|d| d * PHI_MIN)
            .chain(self.share.iter().map(|s| s * self.rho_floor))
            .collect()
    }

    pub fn in_bounds(&self, v: &[f64]) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        v.len() == self.dim()
            && v.iter()
                .zip(lo.iter().zip(&hi))
                .all(|(&x, (&l, &h))| x >= l * (1.0 - 1e-12) && x <= h * (1.0 + 1e-12))
    }

    fn incoming(&self, x: &[f64]) -> Vec<f64> {
        self.in_coef
            .iter()
            .map(|cs| cs.iter().map(|&(s, c)| c * x[s]).sum())
            .collect()
    }

    fn phi(&self, x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / self.total_delta
    }

    /// Energy, time and epochs with their gradients (when `grad` is set).
    fn eval(&self, v: &[f64], grad: Option<(&mut [f64], &mut [f64], &mut [f64])>) -> Point {
        let ns = self.sources.len();
        let (x, rho) = v.split_at(ns);
        let incoming = self.incoming(x);
        let phi = self.phi(x);
        let epochs_raw = self.k_model.raw(self.num_instances, self.num_layers, phi);

        let mut energy: f64 = self.linear.iter().zip(x).map(|(c, x)| c * x).sum();
        for i in 0..self.num_instances {
            energy += self.fixed[i] * incoming[i] / rho[i];
        }

        let link_time: Vec<f64> = self
            .pairs
            .iter()
            .map(|(cap, cs)| cs.iter().map(|&(s, c)| c * x[s]).sum::<f64>() / cap)
            .collect();
        let mut t_end = vec![0.0; self.num_instances];
        // Child on the critical path into each instance.
        let mut critical: Vec<Option<(Child, Option<usize>)>> = vec![None; self.num_instances];
        for &i in &self.order {
            let mut begin = f64::NEG_INFINITY;
            for &(child, link) in &self.children[i] {
                let ready = match child {
                    Child::Source => 0.0,
                    Child::Instance(c) => t_end[c],
                } + link.map_or(0.0, |p| link_time[p]);
                if ready > begin {
                    begin = ready;
                    critical[i] = Some((child, link));
                }
            }
            t_end[i] = begin.max(0.0) + self.compute_req[i] * incoming[i] / rho[i];
        }
        let time = t_end[self.root];

        if let Some((g_energy, g_time, g_epochs)) = grad {
            g_energy.iter_mut().for_each(|g| *g = 0.0);
            g_time.iter_mut().for_each(|g| *g = 0.0);
            g_epochs.iter_mut().for_each(|g| *g = 0.0);
            let dk = self.k_model.raw_dphi(self.num_instances, self.num_layers, phi) / self.total_delta;
            for g in g_epochs[..ns].iter_mut() {
                *g = dk;
            }
            g_energy[..ns].copy_from_slice(&self.linear[..ns]);
            for i in 0..self.num_instances {
                for &(s, c) in &self.in_coef[i] {
                    g_energy[s] += self.fixed[i] * c / rho[i];
                }
                g_energy[ns + i] = -self.fixed[i] * incoming[i] / (rho[i] * rho[i]);
            }
            let mut at = Some(self.root);
            while let Some(i) = at {
                let r = self.compute_req[i];
                for &(s, c) in &self.in_coef[i] {
                    g_time[s] += r * c / rho[i];
                }
                g_time[ns + i] -= r * incoming[i] / (rho[i] * rho[i]);
                at = None;
                if let Some((child, link)) = critical[i] {
                    if let Some(p) = link {
                        let (cap, cs) = &self.pairs[p];
                        for &(s, c) in cs {
                            g_time[s] += c / cap;
                        }
                    }
                    if let Child::Instance(c) = child {
                        at = Some(c);
                    }
                }
            }
        }
        Point {
            energy,
            time,
            epochs_raw,
            objective: epochs_raw * energy,
        }
    }

    pub fn point(&self, v: &[f64]) -> Point {
        self.eval(v, None)
    }

    /// `K * E` with unrounded `K`, and its gradient in the original variables.
    pub fn objective_and_gradient(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        if !self.in_bounds(v) {
            return Err(Error::Domain {
                fraction: self.phi(&v[..self.sources.len().min(v.len())]),
                floor: PHI_MIN,
            });
        }
        let d = self.dim();
        let (mut ge, mut gt, mut gk) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let p = self.eval(v, Some((&mut ge, &mut gt, &mut gk)));
        let grad = (0..d).map(|j| p.epochs_raw * ge[j] + p.energy * gk[j]).collect();
        Ok((p.objective, grad))
    }

    /// Scaled objective plus the quadratic deadline penalty, in normalized
    /// coordinates `u = v / upper`.
    pub fn penalized(&self, u: &[f64], scale: f64, mu: f64, t_max: f64) -> (f64, Vec<f64>) {
        let upper = self.upper();
        let v: Vec<f64> = u.iter().zip(&upper).map(|(a, b)| a * b).collect();
        let d = self.dim();
        let (mut ge, mut gt, mut gk) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let p = self.eval(&v, Some((&mut ge, &mut gt, &mut gk)));
        let excess = if t_max.is_finite() {
            (p.epochs_raw * p.time - t_max) / t_max
        } else {
            0.0
        };
        let mut value = p.objective / scale;
        let mut grad: Vec<f64> = (0..d)
            .map(|j| (p.epochs_raw * ge[j] + p.energy * gk[j]) / scale)
            .collect();
        if excess > 0.0 {
            value += mu * excess * excess;
            for j in 0..d {
                grad[j] += 2.0 * mu * excess * (p.epochs_raw * gt[j] + p.time * gk[j]) / t_max;
            }
        }
        for j in 0..d {
            grad[j] *= upper[j];
        }
        (value, grad)
    }

    /// Whether the rounded epoch count meets the deadline at `v`.
    pub fn meets_deadline(&self, v: &[f64], t_max: f64) -> bool {
        let p = self.point(v);
        ceil_epochs(p.epochs_raw) as f64 * p.time <= t_max + 1e-9
    }
}

#[derive(Debug, Clone)]
pub struct Refined {
    pub solution: Solution,
    /// False when the input was already the best feasible point found.
    pub improved: bool,
    /// Penalized objective after each iteration, one list per penalty stage.
    pub trace: Vec<Vec<f64>>,
}

fn project(u: &mut [f64], lo: &[f64]) {
    for (x, &l) in u.iter_mut().zip(lo) {
        *x = x.clamp(l, 1.0);
    }
}

/// Lowers data use and compute shares while keeping the deadline.
pub fn refine(solution: &Solution, scenario: &Scenario, t_max: f64, cfg: &RefineConfig) -> Result<Refined> {
    cfg.validate()?;
    let frame = Frame::new(solution, scenario, cfg);
    let upper = frame.upper();
    let d = frame.dim();
    let lo: Vec<f64> = frame.lower().iter().zip(&upper).map(|(l, u)| l / u).collect();
    let ns = frame.sources.len();

    let mut u0: Vec<f64> = frame
        .sources
        .iter()
        .map(|&s| solution.allocation.x[s])
        .chain(std::iter::repeat_n(0.0, frame.num_instances))
        .zip(&upper)
        .map(|(v, u)| v / u)
        .collect();
    for j in ns..d {
        u0[j] = 1.0;
    }
    project(&mut u0, &lo);
    let to_v = |u: &[f64]| -> Vec<f64> { u.iter().zip(&upper).map(|(a, b)| a * b).collect() };

    let start = frame.point(&to_v(&u0));
    let unchanged = |trace| Refined {
        solution: solution.clone(),
        improved: false,
        trace,
    };
    if !(start.objective > 0.0) || !frame.meets_deadline(&to_v(&u0), t_max) {
        return Ok(unchanged(Vec::new()));
    }
    let scale = start.objective;
    let mut best = (start.objective, u0.clone());
    let consider = |u: &[f64], best: &mut (f64, Vec<f64>)| {
        let v = to_v(u);
        let obj = frame.point(&v).objective;
        if obj < best.0 && frame.meets_deadline(&v, t_max) {
            *best = (obj, u.to_vec());
        }
    };

    let mut u = u0.clone();
    let mut mu = cfg.penalty_init;
    let mut trace = Vec::new();
    loop {
        let mut stage = Vec::new();
        let mut alpha = 1.0;
        let (mut value, mut grad) = frame.penalized(&u, scale, mu, t_max);
        stage.push(value);
        for _ in 0..cfg.max_iters {
            let mut moved = false;
            let mut step_size = 0.0;
            while alpha > 1e-20 {
                let mut cand: Vec<f64> = u.iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
                project(&mut cand, &lo);
                let decrease: f64 = grad
                    .iter()
                    .zip(u.iter().zip(&cand))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum();
                let (cv, cg) = frame.penalized(&cand, scale, mu, t_max);
                if cv <= value - 1e-4 * decrease && cv <= value {
                    step_size = u.iter().zip(&cand).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    u = cand;
                    value = cv;
                    grad = cg;
                    moved = true;
                    alpha *= 2.0;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
            stage.push(value);
            consider(&u, &mut best);
            if step_size < cfg.step_tol {
                break;
            }
        }
        trace.push(stage);
        let p = frame.point(&to_v(&u));
        let violation = if t_max.is_finite() {
            (p.epochs_raw * p.time - t_max) / t_max
        } else {
            0.0
        };
        if violation <= 1e-9 || mu > cfg.penalty_max {
            break;
        }
        mu *= cfg.penalty_growth;
    }

    // The unrounded deadline can sit just past the rounded one; walk back
    // toward the best feasible point to recover what lies between.
    if !frame.meets_deadline(&to_v(&u), t_max) {
        let (mut a, mut b) = (0.0, 1.0);
        let from = best.1.clone();
        let at = |t: f64| -> Vec<f64> { from.iter().zip(&u).map(|(p, q)| p + t * (q - p)).collect() };
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if frame.meets_deadline(&to_v(&at(mid)), t_max) {
                a = mid;
            } else {
                b = mid;
            }
        }
        consider(&at(a), &mut best);
    } else {
        consider(&u, &mut best);
    }

    if best.0 >= start.objective * (1.0 - 1e-12) {
        return Ok(unchanged(trace));
    }
    let v = to_v(&best.1);
    let mut x = vec![0.0; scenario.sources.len()];
    for (slot, &s) in frame.sources.iter().enumerate() {
        x[s] = v[slot];
    }
    let allocation = Allocation {
        rho: v[ns..].to_vec(),
        x,
    };
    let refined = perf::evaluate(solution.tree.clone(), solution.deployment.clone(), allocation, scenario)?;
    Ok(Refined {
        solution: refined,
        improved: true,
        trace,
    })
}
