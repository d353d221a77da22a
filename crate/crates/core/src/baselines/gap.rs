//! Scenarios where placement reduces to an assignment problem.

use crate::error::{Error, Result};
use crate::model::tree::EnumConfig;
use crate::model::{
    Allocation, DataSource, Deployment, InstanceTree, LayerSpec, NodeClass, PhysNode, Scenario, Solution, Tier,
};
use crate::perf::{self, KModelParams};

/// One source, a chain with `q = 1`, free links, and a fixed power per
/// (layer, node) equal to `costs[layer][node]`. A non-finite cost marks the
/// node as unable to hold the layer.
pub fn gap_scenario(costs: &[Vec<f64>]) -> Result<Scenario> {
    let layers = costs.len();
    let nodes = costs.first().map_or(0, Vec::len);
    if layers == 0 || nodes == 0 || costs.iter().any(|row| row.len() != nodes) {
        return Err(Error::validation("cost matrix must be rectangular and non-empty"));
    }
    if costs.iter().flatten().any(|&c| c < 0.0) {
        return Err(Error::validation("costs must be non-negative"));
    }
    let scenario = Scenario {
        layers: (0..layers)
            .map(|l| LayerSpec {
                name: format!("task{l}"),
                compute_req: 1.0,
                data_ratio: 1.0,
            })
            .collect(),
        nodes: (0..nodes)
            .map(|n| PhysNode {
                id: format!("n{n}"),
                class: NodeClass::Silver,
                tier: Tier::Edge,
                capacity: 1.0,
                e_p: 0.0,
                e_f: (0..layers)
                    .map(|l| if costs[l][n].is_finite() { costs[l][n] } else { 0.0 })
                    .collect(),
                e_net: 0.0,
                mu: (0..layers).map(|l| costs[l][n].is_finite()).collect(),
            })
            .collect(),
        sources: vec![DataSource {
            id: "d0".into(),
            volume: 1.0,
            host: 0,
        }],
        links: vec![vec![f64::INFINITY; nodes]; nodes],
        k_model: KModelParams {
            k0: 1.0,
            kappa_d: 0.0,
            kappa_i: 0.0,
            eps_max: 0.1,
        },
        alpha: 1.0,
        sample_mbit: 1.0,
        trees: EnumConfig::default(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Best placement with all data and every instance owning its node outright,
/// which forbids two layers on one node. Exhaustive over injective mappings.
pub fn solve_exhaustive(scenario: &Scenario) -> Result<Solution> {
    let l = scenario.num_layers();
    let n = scenario.nodes.len();
    if l > n {
        return Err(Error::infeasible(format!(
            "{l} layers cannot each own one of {n} nodes"
        )));
    }
    let tree = InstanceTree::cut(&[0], 0, l);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(l);
    let mut taken = vec![false; n];
    fn walk(
        scenario: &Scenario,
        current: &mut Vec<usize>,
        taken: &mut [bool],
        cost: f64,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let layer = current.len();
        if layer == scenario.num_layers() {
            if best.as_ref().is_none_or(|b| cost < b.0) {
                *best = Some((cost, current.clone()));
            }
            return;
        }
        for node in 0..scenario.nodes.len() {
            if taken[node] || !scenario.hosts(layer, node) {
                continue;
            }
            taken[node] = true;
            current.push(node);
            walk(scenario, current, taken, cost + scenario.nodes[node].e_f[layer], best);
            current.pop();
            taken[node] = false;
        }
    }
    walk(scenario, &mut current, &mut taken, 0.0, &mut best);
    let (_, mapping) = best.ok_or_else(|| Error::infeasible("no assignment respects memory"))?;
    let rho = mapping.iter().map(|&node| scenario.nodes[node].capacity).collect();
    let x = scenario.sources.iter().map(|s| s.volume).collect();
    perf::evaluate(tree, Deployment { mapping }, Allocation { rho, x }, scenario)
}
