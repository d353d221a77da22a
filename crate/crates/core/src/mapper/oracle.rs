//! Exhaustive Steiner search for small expanded graphs.

use crate::error::{Error, Result};
use crate::mapper::graph::ExpandedGraph;
use crate::mapper::steiner::{placement_time, placement_weight};
use crate::model::{Deployment, InstanceTree, Scenario};

/// Largest number of placement vertices the oracle will enumerate.
pub const ORACLE_VERTEX_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTree {
    pub weight: f64,
    pub deployment: Deployment,
    pub vertices: Vec<usize>,
    /// Vertex count of the optimal tree, sources and sink included.
    pub size: usize,
    pub total_time: f64,
}

/// Calls `visit` on every placement with one vertex per instance.
fn for_each_placement(g: &ExpandedGraph, mut visit: impl FnMut(&[usize])) -> Result<()> {
    let count = g.mapping_vertex_count();
    if count > ORACLE_VERTEX_CAP {
        return Err(Error::SizeCap {
            size: count as f64,
            cap: ORACLE_VERTEX_CAP as f64,
        });
    }
    let options: Vec<Vec<usize>> = g
        .instance_vertices
        .iter()
        .map(|vs| {
            vs.iter()
                .map(|&v| match g.vertices[v] {
                    crate::mapper::graph::Vertex::Map { node, .. } => node,
                    _ => unreachable!(),
                })
                .collect()
        })
        .collect();
    let mut digits = vec![0usize; options.len()];
    let mut mapping: Vec<usize> = options.iter().map(|o| o[0]).collect();
    loop {
        visit(&mapping);
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(());
            }
            digits[i] += 1;
            if digits[i] < options[i].len() {
                mapping[i] = options[i][digits[i]];
                break;
            }
            digits[i] = 0;
            mapping[i] = options[i][0];
            i += 1;
        }
    }
}

/// Minimum-weight placement whose full-data time fits `t_max`, under the
/// same feasibility test the greedy search applies. `Ok(None)` when none fits.
pub fn brute_force_steiner_oracle(
    g: &ExpandedGraph,
    scenario: &Scenario,
    tree: &InstanceTree,
    t_max: f64,
) -> Result<Option<OracleTree>> {
    let mut best: Option<OracleTree> = None;
    for_each_placement(g, |mapping| {
        let Some(weight) = placement_weight(g, tree, mapping) else {
            return;
        };
        if best.as_ref().is_some_and(|b| b.weight <= weight) {
            return;
        }
        let chosen: Vec<Option<usize>> = mapping.iter().map(|&n| Some(n)).collect();
        let Some(total_time) = placement_time(scenario, tree, &chosen, &tree.used_sources, g.k, t_max) else {
            return;
        };
        let mut vertices: Vec<usize> = (0..mapping.len())
            .map(|i| g.vertex_of(i, mapping[i]).unwrap())
            .chain(tree.used_sources.iter().map(|&d| g.source_vertex[d].unwrap()))
            .chain(std::iter::once(g.sink))
            .collect();
        vertices.sort_unstable();
        best = Some(OracleTree {
            weight,
            deployment: Deployment {
                mapping: mapping.to_vec(),
            },
            size: vertices.len(),
            vertices,
            total_time,
        });
    })?;
    Ok(best)
}

/// Fastest `k * T` any placement reaches at full data.
pub fn min_total_time(g: &ExpandedGraph, scenario: &Scenario, tree: &InstanceTree) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for_each_placement(g, |mapping| {
        if placement_weight(g, tree, mapping).is_none() {
            return;
        }
        let chosen: Vec<Option<usize>> = mapping.iter().map(|&n| Some(n)).collect();
        if let Some(t) = placement_time(scenario, tree, &chosen, &tree.used_sources, g.k, f64::INFINITY) {
            best = Some(best.map_or(t, |b| b.min(t)));
        }
    })?;
    Ok(best)
}
