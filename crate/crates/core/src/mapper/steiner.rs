use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mapper::graph::{ExpandedGraph, Vertex};
use crate::mapper::rmwp::{restricted_min_weight_path, PathQuery, PathResult};
use crate::model::{full_allocation, Deployment, Endpoint, InstanceTree, Scenario};
use crate::perf::{epoch_metrics, link_flows};

#[derive(Debug, Clone, PartialEq)]
pub struct SteinerTree {
    pub deployment: Deployment,
    /// Sum of the chosen edge weights, joules per epoch.
    pub weight: f64,
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    /// `k * T` of the finished placement at full data.
    pub total_time: f64,
}

/// Places the instances of the sources in `sources` that `chosen` maps,
/// at full data, and returns `k * T` when that fits the links and `t_max`.
pub fn placement_time(
    scenario: &Scenario,
    tree: &InstanceTree,
    chosen: &[Option<usize>],
    sources: &[usize],
    k: u64,
    t_max: f64,
) -> Option<f64> {
    let keep: Vec<bool> = chosen.iter().map(Option::is_some).collect();
    let (sub, old) = tree.restrict(sources, &keep);
    let deployment = Deployment {
        mapping: old.iter().map(|&i| chosen[i].unwrap()).collect(),
    };
    let allocation = full_allocation(&sub, &deployment, scenario);
    let metrics = epoch_metrics(&sub, &deployment, &allocation, scenario).ok()?;
    let flows = crate::model::compute_flows(&sub, &allocation.x, scenario);
    for ((a, b), flow) in link_flows(&sub, &deployment, &flows, scenario) {
        if flow > scenario.link(a, b) + 1e-9 {
            return None;
        }
    }
    let total = k as f64 * metrics.epoch_time;
    (total <= t_max + 1e-9).then_some(total)
}

fn node_of(g: &ExpandedGraph, scenario: &Scenario, v: usize) -> Option<usize> {
    match g.vertices[v] {
        Vertex::Source(d) => Some(scenario.sources[d].host),
        Vertex::Map { node, .. } => Some(node),
        Vertex::Sink => None,
    }
}

struct Candidate {
    source: usize,
    target: usize,
    path: PathResult,
}

/// Restarts after a dead end. Each one connects the stuck sources first and
/// tightens the budgets of the sources connected before it.
const RESTARTS: usize = 8;
const RESTART_SHRINK: f64 = 0.75;

/// Greedy delay-aware Steiner tree over the expanded graph: repeatedly
/// connects the source whose restricted min-weight path to the partial tree
/// is lightest, rejecting additions that break the deadline.
pub fn da_steiner_tree(
    g: &ExpandedGraph,
    scenario: &Scenario,
    tree: &InstanceTree,
    t_max: f64,
    eps: f64,
) -> Result<SteinerTree> {
    if !(t_max > 0.0) {
        return Err(Error::infeasible(format!("deadline {t_max} leaves no time")));
    }
    let mut budget = vec![t_max; scenario.sources.len()];
    let mut first: Vec<usize> = Vec::new();
    let mut first_err = None;
    for _ in 0..=RESTARTS {
        match greedy(g, scenario, tree, t_max, eps, budget.clone(), &first) {
            Ok(st) => return Ok(st),
            Err(DeadEnd { error, reached, stuck }) => {
                if !error.is_infeasible() {
                    return Err(error);
                }
                first_err.get_or_insert(error);
                if reached.is_empty() {
                    break;
                }
                for &d in &reached {
                    budget[d] *= RESTART_SHRINK;
                }
                first.retain(|d| !stuck.contains(d));
                first.splice(0..0, stuck);
            }
        }
    }
    Err(first_err.expect("at least one attempt"))
}

struct DeadEnd {
    error: Error,
    reached: Vec<usize>,
    stuck: Vec<usize>,
}

/// One greedy pass. Pending sources listed in `first` are connected before
/// any other.
fn greedy(
    g: &ExpandedGraph,
    scenario: &Scenario,
    tree: &InstanceTree,
    t_max: f64,
    eps: f64,
    mut budget: Vec<f64>,
    first: &[usize],
) -> std::result::Result<SteinerTree, DeadEnd> {
    let nv = g.vertices.len();
    let topo = tree.topology(scenario.sources.len());
    let parent_of = |i: usize| topo.out_edge[i].map(|e| tree.edges[e].parent);

    let mut chosen: Vec<Option<usize>> = vec![None; tree.num_instances()];
    let mut chosen_vertex: Vec<Option<usize>> = vec![None; tree.num_instances()];
    let mut in_tree = vec![false; nv];
    in_tree[g.sink] = true;
    let mut above = vec![0.0; nv];
    let mut used_links: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut tree_edges = Vec::new();
    let mut weight = 0.0;
    let mut reached: Vec<usize> = Vec::new();
    let mut pending: Vec<usize> = tree.used_sources.clone();
    let mut attempts = 0usize;
    let mut total_time = 0.0;

    while !pending.is_empty() {
        let mut vertex_ok = vec![true; nv];
        for (i, v) in chosen_vertex.iter().enumerate() {
            if let Some(v) = v {
                for &u in &g.instance_vertices[i] {
                    vertex_ok[u] = u == *v;
                }
            }
        }
        let edge_ok: Vec<bool> = g
            .edges
            .iter()
            .map(|e| match (node_of(g, scenario, e.from), node_of(g, scenario, e.to)) {
                (Some(a), Some(b)) if a != b => {
                    let used = used_links.get(&(a, b)).copied().unwrap_or(0.0);
                    e.flow <= scenario.link(a, b) - used + 1e-9
                }
                _ => true,
            })
            .collect();

        let active: Vec<usize> = match first.iter().find(|d| pending.contains(d)) {
            Some(&d) => vec![d],
            None => pending.clone(),
        };
        let mut candidates = Vec::new();
        for &d in &active {
            let from = g.source_vertex[d].expect("used source has a vertex");
            let mut inst = topo.source_edge[d].map(|e| tree.edges[e].parent);
            while let Some(i) = inst {
                if chosen_vertex[i].is_some() {
                    break;
                }
                inst = parent_of(i);
            }
            let target = inst.and_then(|i| chosen_vertex[i]).unwrap_or(g.sink);
            let bound = budget[d] - above[target];
            if !(bound >= 0.0) {
                continue;
            }
            let mut q = PathQuery::new(from, &in_tree, bound, eps);
            q.vertex_ok = Some(&vertex_ok);
            q.edge_ok = Some(&edge_ok);
            match restricted_min_weight_path(g, &q) {
                Ok(path) => candidates.push(Candidate {
                    source: d,
                    target,
                    path,
                }),
                Err(e) if e.is_infeasible() => {}
                Err(e) => {
                    return Err(DeadEnd {
                        error: e,
                        reached,
                        stuck: active,
                    })
                }
            }
        }
        if candidates.is_empty() {
            let names: Vec<&str> = active.iter().map(|&d| scenario.sources[d].id.as_str()).collect();
            return Err(DeadEnd {
                error: Error::infeasible(format!(
                    "sources {} cannot reach the tree within {t_max} s",
                    names.join(", ")
                )),
                reached,
                stuck: active,
            });
        }
        candidates.sort_by(|a, b| {
            a.path
                .weight
                .total_cmp(&b.path.weight)
                .then(a.source.cmp(&b.source))
                .then(a.path.path.cmp(&b.path.path))
        });

        let mut accepted = None;
        for (ci, c) in candidates.iter().enumerate() {
            let mut trial = chosen.clone();
            for &v in &c.path.path {
                if let Vertex::Map { instance, node } = g.vertices[v] {
                    trial[instance] = Some(node);
                }
            }
            let mut sources = reached.clone();
            sources.push(c.source);
            if let Some(t) = placement_time(scenario, tree, &trial, &sources, g.k, t_max) {
                accepted = Some((ci, trial, t));
                break;
            }
        }
        let Some((ci, trial, t)) = accepted else {
            attempts += 1;
            if attempts > 64 {
                return Err(DeadEnd {
                    error: Error::infeasible(format!("no placement of the remaining sources fits {t_max} s")),
                    reached,
                    stuck: active,
                });
            }
            let factor = if attempts <= 16 { 1.0 - 1e-9 } else { 0.9 };
            for c in &candidates {
                let reach = above[c.target] + c.path.delay;
                budget[c.source] = budget[c.source].min(reach) * factor;
            }
            continue;
        };
        let c = &candidates[ci];
        chosen = trial;
        total_time = t;
        for (step, &e) in c.path.edges.iter().enumerate().rev() {
            let edge = &g.edges[e];
            let head = c.path.path[step + 1];
            let tail = c.path.path[step];
            above[tail] = above[head] + edge.delay;
            in_tree[tail] = true;
            if let (Some(a), Some(b)) = (node_of(g, scenario, tail), node_of(g, scenario, head)) {
                if a != b {
                    *used_links.entry((a, b)).or_insert(0.0) += edge.flow;
                }
            }
            if let Vertex::Map { instance, .. } = g.vertices[tail] {
                chosen_vertex[instance] = Some(tail);
            }
            tree_edges.push(e);
        }
        weight += c.path.weight;
        reached.push(c.source);
        pending.retain(|&d| d != c.source);
    }

    let mapping: Vec<usize> = chosen
        .iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| Error::infeasible(format!("instance {i} left unplaced"))))
        .collect::<Result<_>>()
        .map_err(|error| DeadEnd {
            error,
            reached: Vec::new(),
            stuck: Vec::new(),
        })?;
    let mut vertices: Vec<usize> = (0..nv).filter(|&v| in_tree[v]).collect();
    vertices.sort_unstable();
    tree_edges.sort_unstable();
    Ok(SteinerTree {
        deployment: Deployment { mapping },
        weight,
        vertices,
        edges: tree_edges,
        total_time,
    })
}

/// Weight of a full placement: the expanded-graph edges it uses, or `None`
/// if one of them is missing.
pub fn placement_weight(g: &ExpandedGraph, tree: &InstanceTree, mapping: &[usize]) -> Option<f64> {
    let mut total = 0.0;
    for edge in &tree.edges {
        let to = g.vertex_of(edge.parent, mapping[edge.parent])?;
        let from = match edge.child {
            Endpoint::Source(d) => g.source_vertex[d]?,
            Endpoint::Instance(c) => g.vertex_of(c, mapping[c])?,
        };
        total += g.edges[g.edge_between(from, to)?].weight;
    }
    Some(total)
}
