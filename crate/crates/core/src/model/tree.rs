use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scenario;

/// A runnable copy of a DNN layer. `layer` is zero-based, `index` one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub layer: usize,
    pub index: usize,
}

/// Child end of a tree edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Source(usize),
    Instance(usize),
}

/// Data flows from `child` into the instance at position `parent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreeEdge {
    pub child: Endpoint,
    pub parent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstanceTree {
    pub instances: Vec<Instance>,
    pub edges: Vec<TreeEdge>,
    pub used_sources: Vec<usize>,
}

/// Adjacency derived from a tree's edge list.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Incoming edge ids per instance.
    pub children: Vec<Vec<usize>>,
    /// Outgoing edge id per instance; `None` for the root.
    pub out_edge: Vec<Option<usize>>,
    /// Edge id leaving each scenario source, if the source is used.
    pub source_edge: Vec<Option<usize>>,
    /// Instances ordered leaves first.
    pub order: Vec<usize>,
    pub root: usize,
}

/// Which constraint a structural defect breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRule {
    /// Every layer keeps at least one instance.
    Coverage,
    /// Edges only join consecutive layers and form a single tree.
    Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeIssue {
    pub rule: TreeRule,
    pub message: String,
}

impl InstanceTree {
    /// Cut-style tree: each source gets its own chain of the first `depth`
    /// layers, and the chains merge into one shared chain for the rest.
    pub fn cut(sources: &[usize], depth: usize, num_layers: usize) -> InstanceTree {
        assert!(!sources.is_empty() && num_layers > 0);
        let mut sources = sources.to_vec();
        sources.sort_unstable();
        sources.dedup();
        let depth = if sources.len() == 1 {
            0
        } else {
            depth.min(num_layers - 1)
        };
        let k = sources.len();
        let mut instances = Vec::new();
        for layer in 0..num_layers {
            if layer < depth {
                instances.extend((1..=k).map(|index| Instance { layer, index }));
            } else {
                instances.push(Instance { layer, index: 1 });
            }
        }
        let pos = |layer: usize, index: usize| -> usize {
            if layer < depth {
                layer * k + index - 1
            } else {
                depth * k + (layer - depth)
            }
        };
        let mut edges = Vec::new();
        for (slot, &d) in sources.iter().enumerate() {
            let index = if depth > 0 { slot + 1 } else { 1 };
            edges.push(TreeEdge {
                child: Endpoint::Source(d),
                parent: pos(0, index),
            });
        }
        for layer in 0..num_layers - 1 {
            if layer < depth {
                for index in 1..=k {
                    let up = if layer + 1 < depth { index } else { 1 };
                    edges.push(TreeEdge {
                        child: Endpoint::Instance(pos(layer, index)),
                        parent: pos(layer + 1, up),
                    });
                }
            } else {
                edges.push(TreeEdge {
                    child: Endpoint::Instance(pos(layer, 1)),
                    parent: pos(layer + 1, 1),
                });
            }
        }
        InstanceTree {
            instances,
            edges,
            used_sources: sources,
        }
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    /// Number of per-source replicas before the chains merge, for cut trees.
    pub fn replication_depth(&self) -> usize {
        let num_layers = self.instances.iter().map(|i| i.layer + 1).max().unwrap_or(0);
        (0..num_layers)
            .take_while(|&l| self.instances.iter().filter(|i| i.layer == l).count() > 1)
            .count()
    }

    /// Builds the adjacency. Assumes the edge list references valid positions.
    pub fn topology(&self, num_sources: usize) -> Topology {
        let n = self.instances.len();
        let mut children = vec![Vec::new(); n];
        let mut out_edge = vec![None; n];
        let mut source_edge = vec![None; num_sources];
        for (e, edge) in self.edges.iter().enumerate() {
            children[edge.parent].push(e);
            match edge.child {
                Endpoint::Instance(i) => out_edge[i] = Some(e),
                Endpoint::Source(d) => {
                    if d < num_sources {
                        source_edge[d] = Some(e);
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (self.instances[i].layer, self.instances[i].index));
        let root = (0..n)
            .filter(|&i| out_edge[i].is_none())
            .max_by_key(|&i| self.instances[i].layer)
            .unwrap_or(0);
        Topology {
            children,
            out_edge,
            source_edge,
            order,
            root,
        }
    }

    /// Every structural defect of the tree against the scenario.
    pub fn issues(&self, scenario: &Scenario) -> Vec<TreeIssue> {
        let mut issues = Vec::new();
        let num_layers = scenario.num_layers();
        let num_sources = scenario.sources.len();
        let n = self.instances.len();
        let shape = |m: String| TreeIssue {
            rule: TreeRule::Shape,
            message: m,
        };

        for layer in 0..num_layers {
            if !self.instances.iter().any(|i| i.layer == layer) {
                issues.push(TreeIssue {
                    rule: TreeRule::Coverage,
                    message: format!("layer {layer} has no instance"),
                });
            }
        }
        let max_index = scenario.max_instances().max(1);
        let mut seen = BTreeSet::new();
        for inst in &self.instances {
            if inst.layer >= num_layers {
                issues.push(shape(format!("instance of unknown layer {}", inst.layer)));
            }
            if inst.index == 0 || inst.index > max_index {
                issues.push(shape(format!(
                    "instance ({}, {}) index outside 1..={max_index}",
                    inst.layer, inst.index
                )));
            }
            if !seen.insert(*inst) {
                issues.push(shape(format!("instance ({}, {}) listed twice", inst.layer, inst.index)));
            }
        }
        if self.used_sources.is_empty() {
            issues.push(shape("no data source feeds the tree".into()));
        }
        let mut used = BTreeSet::new();
        for &d in &self.used_sources {
            if d >= num_sources {
                issues.push(shape(format!("unknown source {d}")));
            } else if !used.insert(d) {
                issues.push(shape(format!("source {d} listed twice")));
            }
        }

        let mut out_count = vec![0usize; n];
        let mut in_count = vec![0usize; n];
        let mut src_out = vec![0usize; num_sources];
        for edge in &self.edges {
            if edge.parent >= n {
                issues.push(shape(format!("edge into missing instance {}", edge.parent)));
                continue;
            }
            in_count[edge.parent] += 1;
            let parent_layer = self.instances[edge.parent].layer;
            match edge.child {
                Endpoint::Source(d) => {
                    if d >= num_sources {
                        issues.push(shape(format!("edge from unknown source {d}")));
                        continue;
                    }
                    src_out[d] += 1;
                    if !used.contains(&d) {
                        issues.push(shape(format!("source {d} has an edge but is not used")));
                    }
                    if parent_layer != 0 {
                        issues.push(shape(format!(
                            "source {d} feeds layer {parent_layer} instead of the first layer"
                        )));
                    }
                }
                Endpoint::Instance(c) => {
                    if c >= n {
                        issues.push(shape(format!("edge from missing instance {c}")));
                        continue;
                    }
                    out_count[c] += 1;
                    let child_layer = self.instances[c].layer;
                    if parent_layer != child_layer + 1 {
                        issues.push(shape(format!("edge joins layer {child_layer} to layer {parent_layer}")));
                    }
                }
            }
        }
        for &d in &used {
            if d < num_sources && src_out[d] != 1 {
                issues.push(shape(format!(
                    "source {d} has {} outgoing edges instead of one",
                    src_out[d]
                )));
            }
        }
        let last = num_layers.saturating_sub(1);
        let roots: Vec<usize> = (0..n).filter(|&i| self.instances[i].layer == last).collect();
        if roots.len() > 1 {
            issues.push(shape(format!(
                "last layer has {} instances, the tree needs a single root",
                roots.len()
            )));
        }
        for i in 0..n {
            let inst = self.instances[i];
            let expected_out = usize::from(inst.layer != last);
            if out_count[i] != expected_out {
                issues.push(shape(format!(
                    "instance ({}, {}) has {} outgoing edges, expected {expected_out}",
                    inst.layer, inst.index, out_count[i]
                )));
            }
            if in_count[i] == 0 {
                issues.push(shape(format!(
                    "instance ({}, {}) receives no data",
                    inst.layer, inst.index
                )));
            }
        }
        issues
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        match self.issues(scenario).into_iter().next() {
            None => Ok(()),
            Some(issue) => Err(Error::validation(issue.message)),
        }
    }

    /// Keeps the listed sources and the instances flagged in `keep`.
    /// Returns the sub-tree and, per kept instance, its position in `self`.
    pub fn restrict(&self, sources: &[usize], keep: &[bool]) -> (InstanceTree, Vec<usize>) {
        let mut new_pos = vec![usize::MAX; self.instances.len()];
        let mut old_pos = Vec::new();
        let mut instances = Vec::new();
        for (i, inst) in self.instances.iter().enumerate() {
            if keep[i] {
                new_pos[i] = instances.len();
                old_pos.push(i);
                instances.push(*inst);
            }
        }
        let mut used: Vec<usize> = sources.to_vec();
        used.sort_unstable();
        used.dedup();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.parent])
            .filter_map(|e| {
                let child = match e.child {
                    Endpoint::Source(d) if used.binary_search(&d).is_ok() => Endpoint::Source(d),
                    Endpoint::Instance(c) if keep[c] => Endpoint::Instance(new_pos[c]),
                    _ => return None,
                };
                Some(TreeEdge {
                    child,
                    parent: new_pos[e.parent],
                })
            })
            .collect();
        (
            InstanceTree {
                instances,
                edges,
                used_sources: used,
            },
            old_pos,
        )
    }
}

/// Bounds on tree enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    /// Most source subsets considered, largest total volume first.
    #[serde(default = "default_subset_cap")]
    pub subset_cap: usize,
    /// Deepest per-source replication; `None` allows every depth.
    #[serde(default)]
    pub max_depth: Option<usize>,
    /// Whether hitting `subset_cap` silently truncates instead of failing.
    #[serde(default = "default_truncate")]
    pub truncate: bool,
    /// Hand-written trees tried after the generated ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub custom: Vec<InstanceTree>,
}

fn default_subset_cap() -> usize {
    64
}

fn default_truncate() -> bool {
    true
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            subset_cap: default_subset_cap(),
            max_depth: None,
            truncate: default_truncate(),
            custom: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct HeapItem {
    sum: f64,
    last: usize,
    set: Vec<usize>,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sum.total_cmp(&other.sum).then_with(|| self.set.cmp(&other.set))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Up to `cap` non-empty source subsets in order of decreasing total volume.
///
/// Walks the subsets of *removed* sources in increasing volume, so only the
/// emitted subsets are ever materialized.
pub fn largest_subsets(volumes: &[f64], cap: usize) -> Vec<Vec<usize>> {
    let m = volumes.len();
    let mut by_volume: Vec<usize> = (0..m).collect();
    by_volume.sort_by(|&a, &b| volumes[a].total_cmp(&volumes[b]).then(a.cmp(&b)));
    let complement = |removed: &[usize]| -> Vec<usize> {
        let mut keep = vec![true; m];
        for &p in removed {
            keep[by_volume[p]] = false;
        }
        (0..m).filter(|&d| keep[d]).collect()
    };

    let mut out = Vec::new();
    if m == 0 || cap == 0 {
        return out;
    }
    out.push((0..m).collect());
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(HeapItem {
        sum: volumes[by_volume[0]],
        last: 0,
        set: vec![0],
    }));
    while out.len() < cap {
        let Some(Reverse(item)) = heap.pop() else {
            break;
        };
        if item.set.len() < m {
            out.push(complement(&item.set));
        }
        if item.last + 1 < m {
            let next = item.last + 1;
            let mut grown = item.set.clone();
            grown.push(next);
            heap.push(Reverse(HeapItem {
                sum: item.sum + volumes[by_volume[next]],
                last: next,
                set: grown,
            }));
            let mut swapped = item.set;
            *swapped.last_mut().unwrap() = next;
            heap.push(Reverse(HeapItem {
                sum: item.sum - volumes[by_volume[item.last]] + volumes[by_volume[next]],
                last: next,
                set: swapped,
            }));
        }
    }
    out
}

/// All cut-style trees over the capped source subsets.
pub fn enumerate_instance_trees(scenario: &Scenario) -> Result<Vec<InstanceTree>> {
    let cfg = &scenario.trees;
    let num_layers = scenario.num_layers();
    let m = scenario.sources.len();
    if num_layers == 0 || m == 0 || scenario.max_instances() == 0 {
        return Err(Error::validation("scenario admits no instance tree"));
    }
    let available = 2f64.powi(m as i32) - 1.0;
    if available > cfg.subset_cap as f64 && !cfg.truncate {
        return Err(Error::CapExceeded {
            cap: cfg.subset_cap,
            available,
        });
    }
    let volumes: Vec<f64> = scenario.sources.iter().map(|s| s.volume).collect();
    let max_depth = cfg.max_depth.unwrap_or(num_layers - 1).min(num_layers - 1);
    let mut seen = BTreeSet::new();
    let mut trees = Vec::new();
    for subset in largest_subsets(&volumes, cfg.subset_cap) {
        let depths = if subset.len() == 1 { 0 } else { max_depth };
        for depth in 0..=depths {
            let tree = InstanceTree::cut(&subset, depth, num_layers);
            if seen.insert((tree.used_sources.clone(), tree.replication_depth())) {
                trees.push(tree);
            }
        }
    }
    for tree in &cfg.custom {
        tree.validate(scenario)?;
        if !trees.contains(tree) {
            trees.push(tree.clone());
        }
    }
    Ok(trees)
}
