use crate::error::{Error, Result};
use crate::mapper::rmwp::PathGraph;
use crate::model::{compute_flows, incoming_flows, Endpoint, InstanceTree, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vertex {
    /// A scenario data source.
    Source(usize),
    /// Tree instance `instance` placed on node `node`.
    Map {
        instance: usize,
        node: usize,
    },
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    /// Joules per epoch.
    pub weight: f64,
    /// Seconds over all `k` epochs.
    pub delay: f64,
    /// Mbit per epoch the edge carries at full data.
    pub flow: f64,
}

/// Every placement choice for a tree, as a DAG whose vertex ids increase
/// along edges.
#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<GraphEdge>,
    pub out: Vec<Vec<usize>>,
    pub sink: usize,
    /// Vertex id per scenario source, if the tree uses it.
    pub source_vertex: Vec<Option<usize>>,
    /// Placement vertices per tree instance, by ascending node.
    pub instance_vertices: Vec<Vec<usize>>,
    /// Epoch count the delays are scaled by.
    pub k: u64,
}

impl ExpandedGraph {
    /// Vertices of placement choices, the ones a Steiner tree may pick.
    pub fn mapping_vertex_count(&self) -> usize {
        self.instance_vertices.iter().map(Vec::len).sum()
    }

    pub fn vertex_of(&self, instance: usize, node: usize) -> Option<usize> {
        self.instance_vertices[instance]
            .iter()
            .copied()
            .find(|&v| matches!(self.vertices[v], Vertex::Map { node: n, .. } if n == node))
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        self.out[from].iter().copied().find(|&e| self.edges[e].to == to)
    }
}

impl PathGraph for ExpandedGraph {
    fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    fn edge(&self, e: usize) -> (usize, f64, f64) {
        let edge = &self.edges[e];
        (edge.to, edge.weight, edge.delay)
    }
}

/// Builds the expanded graph of `tree` at full data with every node's
/// whole capacity available to each instance placed on it.
pub fn build_expanded_graph(tree: &InstanceTree, scenario: &Scenario, k: u64) -> Result<ExpandedGraph> {
    let n_inst = tree.num_instances();
    let mut x = vec![0.0; scenario.sources.len()];
    for &d in &tree.used_sources {
        x[d] = scenario.sources[d].volume;
    }
    let flows = compute_flows(tree, &x, scenario);
    let incoming = incoming_flows(tree, &flows);
    let topo = tree.topology(scenario.sources.len());

    let mut vertices = Vec::new();
    let mut source_vertex = vec![None; scenario.sources.len()];
    for &d in &tree.used_sources {
        source_vertex[d] = Some(vertices.len());
        vertices.push(Vertex::Source(d));
    }
    let mut instance_vertices = vec![Vec::new(); n_inst];
    for &i in &topo.order {
        let layer = tree.instances[i].layer;
        for node in 0..scenario.nodes.len() {
            if scenario.hosts(layer, node) {
                instance_vertices[i].push(vertices.len());
                vertices.push(Vertex::Map { instance: i, node });
            }
        }
        if instance_vertices[i].is_empty() {
            return Err(Error::EmptyGraph { layer });
        }
    }
    let sink = vertices.len();
    vertices.push(Vertex::Sink);

    let kf = k as f64;
    let mut edges = Vec::new();
    let push = |edges: &mut Vec<GraphEdge>,
                from: usize,
                from_node: usize,
                to: usize,
                parent: usize,
                to_node: usize,
                flow: f64| {
        if !scenario.connected(from_node, to_node) {
            return;
        }
        let layer = &scenario.layers[tree.instances[parent].layer];
        let ph = &scenario.nodes[to_node];
        let r = layer.compute_req;
        let mut weight = flow * r * (ph.e_p + ph.e_f[tree.instances[parent].layer] / ph.capacity);
        let mut net = 0.0;
        if from_node != to_node {
            weight += scenario.nodes[from_node].e_net * flow;
            net = flow / scenario.link(from_node, to_node);
        }
        let delay = kf * (net + r * incoming[parent] / ph.capacity);
        edges.push(GraphEdge {
            from,
            to,
            weight,
            delay,
            flow,
        });
    };
    for (e, edge) in tree.edges.iter().enumerate() {
        let parent = edge.parent;
        match edge.child {
            Endpoint::Source(d) => {
                let from = source_vertex[d].expect("used source has a vertex");
                let host = scenario.sources[d].host;
                for &to in &instance_vertices[parent] {
                    let Vertex::Map { node, .. } = vertices[to] else {
                        unreachable!()
                    };
                    push(&mut edges, from, host, to, parent, node, flows[e]);
                }
            }
            Endpoint::Instance(c) => {
                for &from in &instance_vertices[c] {
                    let Vertex::Map { node: from_node, .. } = vertices[from] else {
                        unreachable!()
                    };
                    for &to in &instance_vertices[parent] {
                        let Vertex::Map { node, .. } = vertices[to] else {
                            unreachable!()
                        };
                        push(&mut edges, from, from_node, to, parent, node, flows[e]);
                    }
                }
            }
        }
    }
    for &v in &instance_vertices[topo.root] {
        edges.push(GraphEdge {
            from: v,
            to: sink,
            weight: 0.0,
            delay: 0.0,
            flow: 0.0,
        });
    }
    edges.sort_by_key(|e| (e.from, e.to));
    let mut out = vec![Vec::new(); vertices.len()];
    for (id, e) in edges.iter().enumerate() {
        out[e.from].push(id);
    }
    Ok(ExpandedGraph {
        vertices,
        edges,
        out,
        sink,
        source_vertex,
        instance_vertices,
        k,
    })
}
