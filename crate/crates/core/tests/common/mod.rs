#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use righttrain::harness::random_scenario;
use righttrain::mapper::{build_expanded_graph, min_total_time, Dag, ExpandedGraph};
use righttrain::model::{
    enumerate_instance_trees, Allocation, DataSource, Deployment, EnumConfig, InstanceTree, LayerSpec, NodeClass,
    PhysNode, Scenario, Solution, Tier,
};
use righttrain::perf::{self, ceil_epochs, KModelParams};

pub fn node(id: &str, capacity: f64, e_p: f64, e_f: f64, e_net: f64, layers: usize) -> PhysNode {
    PhysNode {
        id: id.to_string(),
        class: NodeClass::Silver,
        tier: Tier::Edge,
        capacity,
        e_p,
        e_f: vec![e_f; layers],
        e_net,
        mu: vec![true; layers],
    }
}

pub fn layers(spec: &[(f64, f64)]) -> Vec<LayerSpec> {
    spec.iter()
        .enumerate()
        .map(|(i, &(r, q))| LayerSpec {
            name: format!("l{}", i + 1),
            compute_req: r,
            data_ratio: q,
        })
        .collect()
}

/// Fully connected at `rate` Mbit/s.
pub fn mesh(n: usize, rate: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|a| (0..n).map(|b| if a == b { f64::INFINITY } else { rate }).collect())
        .collect()
}

pub fn k_fixed(k0: f64) -> KModelParams {
    KModelParams {
        k0,
        kappa_d: 0.0,
        kappa_i: 0.0,
        eps_max: 0.1,
    }
}

pub fn scenario(
    layer_spec: &[(f64, f64)],
    nodes: Vec<PhysNode>,
    links: Vec<Vec<f64>>,
    sources: &[(f64, usize)],
    k_model: KModelParams,
) -> Scenario {
    let s = Scenario {
        layers: layers(layer_spec),
        nodes,
        sources: sources
            .iter()
            .enumerate()
            .map(|(i, &(volume, host))| DataSource {
                id: format!("d{}", i + 1),
                volume,
                host,
            })
            .collect(),
        links,
        k_model,
        alpha: 1.0,
        sample_mbit: 1.0,
        trees: EnumConfig::default(),
    };
    s.validate().expect("fixture is valid");
    s
}

pub fn solution(scenario: &Scenario, tree: InstanceTree, mapping: Vec<usize>, rho: Vec<f64>, x: Vec<f64>) -> Solution {
    perf::evaluate(tree, Deployment { mapping }, Allocation { rho, x }, scenario).expect("fixture evaluates")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Random DAG over `n` vertices with integer delays, plus a target set.
pub fn random_dag(seed: u64) -> (Dag, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=15);
    let mut g = Dag::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if b == a + 1 || rng.gen_bool(0.35) {
                let w = if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(1..=40) as f64
                };
                g.add_edge(a, b, w, rng.gen_range(0..=6) as f64);
            }
        }
    }
    let mut targets = vec![false; n];
    targets[n - 1] = true;
    for t in targets.iter_mut().skip(n / 2) {
        if rng.gen_bool(0.2) {
            *t = true;
        }
    }
    (g, targets)
}

/// Exact constrained minimum by dynamic programming over integer delays.
pub fn dp_oracle(g: &Dag, n: usize, from: usize, targets: &[bool], bound: usize) -> Option<f64> {
    let mut best = vec![vec![f64::INFINITY; bound + 1]; n];
    best[from][0] = 0.0;
    let mut edges = g.edges().to_vec();
    edges.sort_by_key(|a| a.0);
    for v in 0..n {
        for &(a, b, w, d) in edges.iter().filter(|e| e.0 == v) {
            let d = d as usize;
            for t in 0..=bound {
                if best[a][t].is_finite() && t + d <= bound {
                    best[b][t + d] = best[b][t + d].min(best[a][t] + w);
                }
            }
        }
    }
    let out = (0..n)
        .filter(|&v| targets[v] && v != from)
        .flat_map(|v| best[v].iter().copied())
        .fold(f64::INFINITY, f64::min);
    out.is_finite().then_some(out)
}

pub struct Shrunken {
    pub seed: u64,
    pub scenario: Scenario,
    pub tree: InstanceTree,
    pub graph: ExpandedGraph,
    pub t_max: f64,
}

/// Random scenarios whose first expanded graph has at most `cap` placement
/// vertices, with a deadline `slack` times the fastest placement.
pub fn shrunken_instances(count: usize, cap: usize, slack: f64) -> Vec<Shrunken> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        seed += 1;
        let s = random_scenario(seed);
        let Ok(trees) = enumerate_instance_trees(&s) else {
            continue;
        };
        for tree in trees {
            let k = ceil_epochs(s.k_model.raw(tree.num_instances(), s.num_layers(), 1.0));
            let Ok(g) = build_expanded_graph(&tree, &s, k) else {
                continue;
            };
            if g.mapping_vertex_count() > cap || tree.used_sources.len() < 2 && seed % 3 != 0 {
                continue;
            }
            let Ok(Some(fastest)) = min_total_time(&g, &s, &tree) else {
                continue;
            };
            out.push(Shrunken {
                seed,
                scenario: s.clone(),
                tree,
                graph: g,
                t_max: fastest * slack,
            });
            break;
        }
    }
    out
}
