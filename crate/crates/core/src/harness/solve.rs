use crate::baselines::evaluate_placement;
use crate::error::{Error, Result};
use crate::mapper::{build_expanded_graph, da_steiner_tree};
use crate::model::{enumerate_instance_trees, InstanceTree, Scenario, Solution};
use crate::perf::{ceil_epochs, processing_load};
use crate::refiner::{refine, RefineConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub eps: f64,
    pub refine: RefineConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            eps: 0.1,
            refine: RefineConfig::default(),
        }
    }
}

/// Candidate trees sorted by processing load, ties by enumeration order.
pub fn ordered_trees(scenario: &Scenario) -> Result<Vec<(InstanceTree, f64)>> {
    let mut trees: Vec<(usize, InstanceTree, f64)> = enumerate_instance_trees(scenario)?
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let load = processing_load(&t, scenario, &scenario.k_model);
            (i, t, load)
        })
        .collect();
    trees.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    Ok(trees.into_iter().map(|(_, t, l)| (t, l)).collect())
}

#[derive(Debug, Clone)]
pub struct RightTrainOutcome {
    pub solution: Solution,
    /// Position of the chosen tree in load order.
    pub tree_rank: usize,
    pub steiner_weight: f64,
    pub refined: bool,
    /// Why each earlier tree was skipped.
    pub skipped: Vec<String>,
}

/// Maps and refines one tree; `Err` carries why it was rejected.
pub fn solve_tree(
    scenario: &Scenario,
    tree: &InstanceTree,
    t_max: f64,
    cfg: &SolveConfig,
) -> Result<(Solution, f64, bool)> {
    let k = ceil_epochs(scenario.k_model.raw(tree.num_instances(), scenario.num_layers(), 1.0));
    let graph = build_expanded_graph(tree, scenario, k)?;
    let st = da_steiner_tree(&graph, scenario, tree, t_max, cfg.eps)?;
    let full = evaluate_placement(scenario, tree, st.deployment.mapping, t_max)
        .ok_or_else(|| Error::infeasible("placement misses the deadline at full data"))?;
    let refined = refine(&full, scenario, t_max, &cfg.refine)?;
    Ok((refined.solution, st.weight, refined.improved))
}

/// Walks the trees in load order and returns the first one that maps and
/// refines within the deadline.
pub fn righttrain_solve(scenario: &Scenario, t_max: f64, cfg: &SolveConfig) -> Result<RightTrainOutcome> {
    if !(t_max > 0.0) {
        return Err(Error::infeasible(format!("deadline {t_max} leaves no time")));
    }
    let trees = ordered_trees(scenario)?;
    let mut skipped = Vec::new();
    for (rank, (tree, _)) in trees.iter().enumerate() {
        match solve_tree(scenario, tree, t_max, cfg) {
            Ok((solution, steiner_weight, refined)) => {
                return Ok(RightTrainOutcome {
                    solution,
                    tree_rank: rank,
                    steiner_weight,
                    refined,
                    skipped,
                })
            }
            Err(e @ (Error::Infeasible(_) | Error::EmptyGraph { .. })) => {
                skipped.push(format!("tree {rank}: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    const SHOWN: usize = 8;
    let mut msg = format!("all {} trees failed", trees.len());
    for line in skipped.iter().take(SHOWN) {
        msg.push_str("; ");
        msg.push_str(line);
    }
    if skipped.len() > SHOWN {
        msg.push_str(&format!("; and {} more", skipped.len() - SHOWN));
    }
    Err(Error::Infeasible(msg))
}
