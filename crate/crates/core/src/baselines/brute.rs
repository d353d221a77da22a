use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{compute_flows, full_allocation, Deployment, InstanceTree, Scenario, Solution};
use crate::perf::{self, link_flows};
use crate::refiner::{refine, RefineConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BruteConfig {
    /// Most (tree, placement) candidates to enumerate.
    pub cap: f64,
    pub refine: RefineConfig,
}

impl Default for BruteConfig {
    fn default() -> Self {
        BruteConfig {
            cap: 1e6,
            refine: RefineConfig::default(),
        }
    }
}

/// Evaluates a placement at full data with node-share compute and keeps it
/// only if links hold the flow and the deadline is met.
pub fn evaluate_placement(
    scenario: &Scenario,
    tree: &InstanceTree,
    mapping: Vec<usize>,
    t_max: f64,
) -> Option<Solution> {
    let deployment = Deployment { mapping };
    let allocation = full_allocation(tree, &deployment, scenario);
    let flows = compute_flows(tree, &allocation.x, scenario);
    for ((a, b), flow) in link_flows(tree, &deployment, &flows, scenario) {
        if flow > scenario.link(a, b) + 1e-9 {
            return None;
        }
    }
    let solution = perf::evaluate(tree.clone(), deployment, allocation, scenario).ok()?;
    solution.meets_deadline(t_max).then_some(solution)
}

/// Nodes able to host each instance of `tree`.
pub fn feasible_nodes(scenario: &Scenario, tree: &InstanceTree) -> Vec<Vec<usize>> {
    tree.instances
        .iter()
        .map(|inst| {
            (0..scenario.nodes.len())
                .filter(|&n| scenario.hosts(inst.layer, n))
                .collect()
        })
        .collect()
}

/// Number of (tree, placement) pairs an exhaustive search visits.
pub fn search_size(scenario: &Scenario, trees: &[InstanceTree]) -> f64 {
    trees
        .iter()
        .map(|t| {
            feasible_nodes(scenario, t)
                .iter()
                .map(|o| o.len() as f64)
                .product::<f64>()
        })
        .sum()
}

/// The `index`-th placement in odometer order, first instance fastest.
fn placement(options: &[Vec<usize>], mut index: usize) -> Vec<usize> {
    options
        .iter()
        .map(|o| {
            let n = o[index % o.len()];
            index /= o.len();
            n
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub solution: Solution,
    pub tree_index: usize,
    pub placement_index: usize,
    pub candidates: f64,
}

/// Tries every tree and placement, refines each feasible one and keeps the
/// lowest objective. Ties go to the earliest (tree, placement).
pub fn brute_force_optimum(
    scenario: &Scenario,
    trees: &[InstanceTree],
    t_max: f64,
    cfg: &BruteConfig,
) -> Result<Optimum> {
    let size = search_size(scenario, trees);
    if size > cfg.cap {
        return Err(Error::SizeCap { size, cap: cfg.cap });
    }
    let mut best: Option<(f64, usize, usize, Solution)> = None;
    for (ti, tree) in trees.iter().enumerate() {
        let options = feasible_nodes(scenario, tree);
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        let count: usize = options.iter().map(Vec::len).product();
        let found = (0..count)
            .into_par_iter()
            .filter_map(|pi| {
                let candidate = evaluate_placement(scenario, tree, placement(&options, pi), t_max)?;
                let refined = refine(&candidate, scenario, t_max, &cfg.refine).ok()?;
                Some((refined.solution.metrics.objective, pi, refined.solution))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((obj, pi, sol)) = found {
            if best.as_ref().is_none_or(|b| obj < b.0) {
                best = Some((obj, ti, pi, sol));
            }
        }
    }
    match best {
        Some((_, tree_index, placement_index, solution)) => Ok(Optimum {
            solution,
            tree_index,
            placement_index,
            candidates: size,
        }),
        None => Err(Error::infeasible(format!(
            "none of {size} candidates meets the deadline of {t_max} s"
        ))),
    }
}
