use crate::baselines::brute::evaluate_placement;
use crate::error::{Error, Result};
use crate::model::{InstanceTree, Scenario, Solution, Tier};

/// Cut points `(a, b)`: layers `[0, a)` run on mobile nodes, `[a, b)` on an
/// edge node and `[b, L)` on a cloud node.
pub fn split_points(scenario: &Scenario) -> Vec<(usize, usize)> {
    let l = scenario.num_layers();
    let mobile_first =
        (0..scenario.nodes.len()).any(|n| scenario.nodes[n].tier == Tier::Mobile && scenario.hosts(0, n));
    let first_a = if mobile_first { 1 } else { 0 };
    let mut out = Vec::new();
    for a in first_a..l {
        for b in (a + 1)..l {
            out.push((a, b));
        }
    }
    out
}

fn hosts_range(scenario: &Scenario, node: usize, layers: std::ops::Range<usize>) -> bool {
    layers.into_iter().all(|l| scenario.hosts(l, node))
}

fn tier_nodes(scenario: &Scenario, tier: Tier, layers: std::ops::Range<usize>) -> Vec<usize> {
    (0..scenario.nodes.len())
        .filter(|&n| scenario.nodes[n].tier == tier && hosts_range(scenario, n, layers.clone()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub solution: Solution,
    pub cut: (usize, usize),
    /// Splits considered, feasible or not.
    pub splits: usize,
}

/// Split-learning baseline: all data, a three-part chain on mobile, edge
/// and cloud, best node pair per split, best split overall.
pub fn split_learning_plan(scenario: &Scenario, t_max: f64) -> Result<SplitPlan> {
    let l = scenario.num_layers();
    let sources: Vec<usize> = (0..scenario.sources.len()).collect();
    let points = split_points(scenario);
    let mut best: Option<(f64, (usize, usize), Solution)> = None;
    for &(a, b) in &points {
        let tree = InstanceTree::cut(&sources, a, l);
        // Each source runs its mobile part on its host when possible,
        // otherwise on the cheapest reachable mobile node.
        let mut mobile = Vec::with_capacity(sources.len());
        if a > 0 {
            let candidates = tier_nodes(scenario, Tier::Mobile, 0..a);
            for src in &scenario.sources {
                let pick = if candidates.contains(&src.host) {
                    Some(src.host)
                } else {
                    candidates
                        .iter()
                        .copied()
                        .filter(|&n| scenario.connected(src.host, n))
                        .min_by(|&x, &y| scenario.nodes[x].e_p.total_cmp(&scenario.nodes[y].e_p).then(x.cmp(&y)))
                };
                match pick {
                    Some(n) => mobile.push(n),
                    None => break,
                }
            }
            if mobile.len() < sources.len() {
                continue;
            }
        }
        let edges = tier_nodes(scenario, Tier::Edge, a..b);
        let clouds = tier_nodes(scenario, Tier::Cloud, b..l);
        for &e in &edges {
            for &c in &clouds {
                let mapping: Vec<usize> = tree
                    .instances
                    .iter()
                    .map(|inst| {
                        if inst.layer < a {
                            // Replica `index` serves the `index`-th source.
                            mobile[if sources.len() == 1 { 0 } else { inst.index - 1 }]
                        } else if inst.layer < b {
                            e
                        } else {
                            c
                        }
                    })
                    .collect();
                let Some(sol) = evaluate_placement(scenario, &tree, mapping, t_max) else {
                    continue;
                };
                if !crate::model::check_constraints(&sol, scenario).passed() {
                    continue;
                }
                let obj = sol.metrics.objective;
                if best.as_ref().is_none_or(|bst| obj < bst.0) {
                    best = Some((obj, (a, b), sol));
                }
            }
        }
    }
    match best {
        Some((_, cut, solution)) => Ok(SplitPlan {
            solution,
            cut,
            splits: points.len(),
        }),
        None => Err(Error::infeasible(format!(
            "no split of the {l} layers meets the deadline of {t_max} s"
        ))),
    }
}
