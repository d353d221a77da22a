use serde::{Deserialize, Serialize};

use crate::model::{Endpoint, InstanceTree, Scenario};

/// Node index per tree instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Deployment {
    pub mapping: Vec<usize>,
}

/// Continuous decisions: compute per instance and data used per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// MOPS per tree instance.
    pub rho: Vec<f64>,
    /// Mbit per epoch per scenario source. Unused sources hold 0.
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub epoch_time: f64,
    pub epoch_energy: f64,
    pub epochs: u64,
    pub epochs_raw: f64,
    pub data_fraction: f64,
    pub objective: f64,
    pub total_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub tree: InstanceTree,
    pub deployment: Deployment,
    pub allocation: Allocation,
    pub metrics: Metrics,
}

impl Solution {
    /// Whether `ceil(K) * T` fits the deadline.
    pub fn meets_deadline(&self, t_max: f64) -> bool {
        self.metrics.total_time <= t_max + 1e-9
    }
}

/// Mbit per epoch on every tree edge, in edge order.
pub fn compute_flows(tree: &InstanceTree, x: &[f64], scenario: &Scenario) -> Vec<f64> {
    let topo = tree.topology(scenario.sources.len());
    let mut flows = vec![0.0; tree.edges.len()];
    for (e, edge) in tree.edges.iter().enumerate() {
        if let Endpoint::Source(d) = edge.child {
            flows[e] = x.get(d).copied().unwrap_or(0.0);
        }
    }
    for &i in &topo.order {
        let inflow: f64 = topo.children[i].iter().map(|&e| flows[e]).sum();
        if let Some(e) = topo.out_edge[i] {
            flows[e] = scenario.layers[tree.instances[i].layer].data_ratio * inflow;
        }
    }
    flows
}

/// Mbit per epoch entering each instance.
pub fn incoming_flows(tree: &InstanceTree, flows: &[f64]) -> Vec<f64> {
    let mut incoming = vec![0.0; tree.instances.len()];
    for (e, edge) in tree.edges.iter().enumerate() {
        incoming[edge.parent] += flows[e];
    }
    incoming
}

/// Splits each node's capacity among its instances in proportion to their
/// compute load `r * incoming`.
pub fn node_share(tree: &InstanceTree, deployment: &Deployment, incoming: &[f64], scenario: &Scenario) -> Vec<f64> {
    let n = tree.instances.len();
    let load: Vec<f64> = (0..n)
        .map(|i| scenario.layers[tree.instances[i].layer].compute_req * incoming[i])
        .collect();
    let mut total = vec![0.0; scenario.nodes.len()];
    for i in 0..n {
        total[deployment.mapping[i]] += load[i];
    }
    let weight: Vec<f64> = (0..n)
        .map(|i| load[i].max(total[deployment.mapping[i]] * 1e-9).max(f64::MIN_POSITIVE))
        .collect();
    let mut weight_sum = vec![0.0; scenario.nodes.len()];
    for i in 0..n {
        weight_sum[deployment.mapping[i]] += weight[i];
    }
    (0..n)
        .map(|i| {
            let node = deployment.mapping[i];
            scenario.nodes[node].capacity * (weight[i] / weight_sum[node]) * (1.0 - 1e-12)
        })
        .collect()
}

/// All data used and node capacity split by [`node_share`].
pub fn full_allocation(tree: &InstanceTree, deployment: &Deployment, scenario: &Scenario) -> Allocation {
    let mut x = vec![0.0; scenario.sources.len()];
    for &d in &tree.used_sources {
        x[d] = scenario.sources[d].volume;
    }
    let flows = compute_flows(tree, &x, scenario);
    let incoming = incoming_flows(tree, &flows);
    let rho = node_share(tree, deployment, &incoming, scenario);
    Allocation { rho, x }
}
