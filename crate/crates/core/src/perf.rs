//! Epoch time, epoch energy, processing load and the epoch-count model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compute_flows, incoming_flows, Allocation, Deployment, Endpoint, InstanceTree, Metrics, Scenario, Solution,
};

/// Smallest data fraction the epoch model accepts.
pub const PHI_MIN: f64 = 0.01;

/// Parametric stand-in for the learned epoch predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KModelParams {
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_kappa_d")]
    pub kappa_d: f64,
    #[serde(default = "default_kappa_i")]
    pub kappa_i: f64,
    /// Target loss. Folded into `k0`, kept for the record.
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
}

fn default_k0() -> f64 {
    10.0
}
fn default_kappa_d() -> f64 {
    8.0
}
fn default_kappa_i() -> f64 {
    0.15
}
fn default_eps_max() -> f64 {
    0.1
}

impl Default for KModelParams {
    fn default() -> Self {
        KModelParams {
            k0: default_k0(),
            kappa_d: default_kappa_d(),
            kappa_i: default_kappa_i(),
            eps_max: default_eps_max(),
        }
    }
}

impl KModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0 >= 1.0) || !self.k0.is_finite() {
            return Err(Error::validation(format!("k0 = {} must be at least 1", self.k0)));
        }
        if !(self.kappa_d >= 0.0) || !self.kappa_d.is_finite() {
            return Err(Error::validation(format!(
                "kappa_d = {} must be non-negative",
                self.kappa_d
            )));
        }
        if !(self.kappa_i >= 0.0) || !self.kappa_i.is_finite() {
            return Err(Error::validation(format!(
                "kappa_i = {} must be non-negative",
                self.kappa_i
            )));
        }
        Ok(())
    }

    /// Unrounded epoch count. No domain check on `phi`.
    pub fn raw(&self, num_instances: usize, num_layers: usize, phi: f64) -> f64 {
        let extra = num_instances.saturating_sub(num_layers) as f64;
        (self.k0 - self.kappa_d * phi.ln()) * (1.0 + self.kappa_i * extra)
    }

    /// Derivative of [`raw`](Self::raw) with respect to `phi`.
    pub fn raw_dphi(&self, num_instances: usize, num_layers: usize, phi: f64) -> f64 {
        let extra = num_instances.saturating_sub(num_layers) as f64;
        -self.kappa_d / phi * (1.0 + self.kappa_i * extra)
    }
}

/// Integer epochs for a tree trained on a fraction `phi` of its sources' data.
pub fn epochs_needed(tree: &InstanceTree, num_layers: usize, phi: f64, k_model: &KModelParams) -> Result<u64> {
    if !(phi >= PHI_MIN * (1.0 - 1e-12)) || phi > 1.0 + 1e-12 {
        return Err(Error::Domain {
            fraction: phi,
            floor: PHI_MIN,
        });
    }
    Ok(ceil_epochs(k_model.raw(tree.num_instances(), num_layers, phi.min(1.0))))
}

/// `ceil` that forgives rounding noise just above an integer.
pub fn ceil_epochs(raw: f64) -> u64 {
    let r = raw.round();
    if (raw - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        raw.ceil() as u64
    }
}

/// Seconds one instance computes per epoch.
pub fn instance_compute_time(compute_req: f64, incoming: f64, rho: f64, instance: usize) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::ZeroAllocation { instance });
    }
    Ok(compute_req * incoming / rho)
}

/// Mbit per epoch carried between each ordered pair of distinct nodes.
pub fn link_flows(
    tree: &InstanceTree,
    deployment: &Deployment,
    flows: &[f64],
    scenario: &Scenario,
) -> BTreeMap<(usize, usize), f64> {
    let mut out = BTreeMap::new();
    for (e, edge) in tree.edges.iter().enumerate() {
        let from = match edge.child {
            Endpoint::Source(d) => scenario.sources[d].host,
            Endpoint::Instance(c) => deployment.mapping[c],
        };
        let to = deployment.mapping[edge.parent];
        if from != to {
            *out.entry((from, to)).or_insert(0.0) += flows[e];
        }
    }
    out
}

/// Seconds to push the aggregated flow from `from` to `to`.
pub fn link_transfer_time(
    from: usize,
    to: usize,
    link_flows: &BTreeMap<(usize, usize), f64>,
    scenario: &Scenario,
) -> Result<f64> {
    if from == to {
        return Ok(0.0);
    }
    let flow = link_flows.get(&(from, to)).copied().unwrap_or(0.0);
    if flow <= 0.0 {
        return Ok(0.0);
    }
    let s = scenario.link(from, to);
    if !(s > 0.0) {
        return Err(Error::NoLink { from, to, flow });
    }
    Ok(flow / s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub t_comp: Vec<f64>,
    /// Transfer time per used ordered node pair.
    pub t_net: BTreeMap<(usize, usize), f64>,
    pub t_begin: Vec<f64>,
    pub t_end: Vec<f64>,
    pub epoch_time: f64,
    pub e_comp: Vec<f64>,
    pub e_net: Vec<f64>,
    /// Uplink energy per scenario source, zero when its first layer runs on the host.
    pub e_uplink: Vec<f64>,
    pub epoch_energy: f64,
}

/// Times and energies in one leaves-to-root pass.
pub fn epoch_metrics(
    tree: &InstanceTree,
    deployment: &Deployment,
    allocation: &Allocation,
    scenario: &Scenario,
) -> Result<EpochMetrics> {
    let n = tree.num_instances();
    let topo = tree.topology(scenario.sources.len());
    let flows = compute_flows(tree, &allocation.x, scenario);
    let incoming = incoming_flows(tree, &flows);
    let pair_flows = link_flows(tree, deployment, &flows, scenario);
    let mut t_net = BTreeMap::new();
    for &(a, b) in pair_flows.keys() {
        t_net.insert((a, b), link_transfer_time(a, b, &pair_flows, scenario)?);
    }
    let net = |a: usize, b: usize| t_net.get(&(a, b)).copied().unwrap_or(0.0);

    let mut t_comp = vec![0.0; n];
    let mut t_begin = vec![0.0; n];
    let mut t_end = vec![0.0; n];
    let mut e_comp = vec![0.0; n];
    let mut e_net = vec![0.0; n];
    for &i in &topo.order {
        let inst = tree.instances[i];
        let node = deployment.mapping[i];
        let ph = &scenario.nodes[node];
        let mut begin: f64 = 0.0;
        for &e in &topo.children[i] {
            let ready = match tree.edges[e].child {
                Endpoint::Source(d) => net(scenario.sources[d].host, node),
                Endpoint::Instance(c) => t_end[c] + net(deployment.mapping[c], node),
            };
            begin = begin.max(ready);
        }
        let rho = allocation.rho[i];
        t_comp[i] = instance_compute_time(scenario.layers[inst.layer].compute_req, incoming[i], rho, i)?;
        t_begin[i] = begin;
        t_end[i] = begin + t_comp[i];
        e_comp[i] = t_comp[i] * (ph.e_p * rho + ph.e_f[inst.layer]);
        if let Some(e) = topo.out_edge[i] {
            if deployment.mapping[tree.edges[e].parent] != node {
                e_net[i] = ph.e_net * flows[e];
            }
        }
    }
    let mut e_uplink = vec![0.0; scenario.sources.len()];
    for (e, edge) in tree.edges.iter().enumerate() {
        if let Endpoint::Source(d) = edge.child {
            let host = scenario.sources[d].host;
            if host != deployment.mapping[edge.parent] {
                e_uplink[d] = scenario.nodes[host].e_net * flows[e];
            }
        }
    }
    let last = scenario.num_layers() - 1;
    let epoch_time = (0..n)
        .filter(|&i| tree.instances[i].layer == last)
        .map(|i| t_end[i])
        .fold(0.0, f64::max);
    let epoch_energy = e_comp.iter().sum::<f64>() + e_net.iter().sum::<f64>() + e_uplink.iter().sum::<f64>();
    Ok(EpochMetrics {
        t_comp,
        t_net,
        t_begin,
        t_end,
        epoch_time,
        e_comp,
        e_net,
        e_uplink,
        epoch_energy,
    })
}

/// Time until the last layer finishes.
pub fn epoch_time(solution: &Solution, scenario: &Scenario) -> Result<f64> {
    Ok(epoch_metrics(&solution.tree, &solution.deployment, &solution.allocation, scenario)?.epoch_time)
}

/// Compute, transmit and uplink energy per epoch.
pub fn epoch_energy(solution: &Solution, scenario: &Scenario) -> Result<f64> {
    Ok(epoch_metrics(&solution.tree, &solution.deployment, &solution.allocation, scenario)?.epoch_energy)
}

/// Share of used data: total `x` over total volume of the tree's sources.
pub fn data_fraction(tree: &InstanceTree, x: &[f64], scenario: &Scenario) -> f64 {
    let total = scenario.total_volume(&tree.used_sources);
    if total <= 0.0 {
        return 0.0;
    }
    tree.used_sources.iter().map(|&d| x[d]).sum::<f64>() / total
}

/// K at full data times the operations of every instance.
pub fn processing_load(tree: &InstanceTree, scenario: &Scenario, k_model: &KModelParams) -> f64 {
    let mut x = vec![0.0; scenario.sources.len()];
    for &d in &tree.used_sources {
        x[d] = scenario.sources[d].volume;
    }
    let flows = compute_flows(tree, &x, scenario);
    let incoming = incoming_flows(tree, &flows);
    let ops: f64 = tree
        .instances
        .iter()
        .zip(&incoming)
        .map(|(inst, chi)| scenario.layers[inst.layer].compute_req * chi)
        .sum();
    let k = ceil_epochs(k_model.raw(tree.num_instances(), scenario.num_layers(), 1.0));
    k as f64 * ops
}

/// Fills in the metrics of a solution from its other fields.
pub fn evaluate(
    tree: InstanceTree,
    deployment: Deployment,
    allocation: Allocation,
    scenario: &Scenario,
) -> Result<Solution> {
    let m = epoch_metrics(&tree, &deployment, &allocation, scenario)?;
    let phi = data_fraction(&tree, &allocation.x, scenario);
    let epochs_raw = scenario
        .k_model
        .raw(tree.num_instances(), scenario.num_layers(), phi.clamp(PHI_MIN, 1.0));
    let epochs = ceil_epochs(epochs_raw);
    let metrics = Metrics {
        epoch_time: m.epoch_time,
        epoch_energy: m.epoch_energy,
        epochs,
        epochs_raw,
        data_fraction: phi,
        objective: epochs as f64 * m.epoch_energy,
        total_time: epochs as f64 * m.epoch_time,
    };
    Ok(Solution {
        tree,
        deployment,
        allocation,
        metrics,
    })
}

/// Recomputes the metrics of an existing solution.
pub fn reevaluate(solution: &Solution, scenario: &Scenario) -> Result<Solution> {
    evaluate(
        solution.tree.clone(),
        solution.deployment.clone(),
        solution.allocation.clone(),
        scenario,
    )
}
