//! Built-in scenarios.
//!
//! Values not fixed by the hardware data sheets (link rates, fixed powers,
//! transmit energies, data ratios, the iron class, sample size) are
//! non-authoritative defaults. Seeds only perturb those.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::gap_scenario;
use crate::error::{Error, Result};
use crate::model::tree::EnumConfig;
use crate::model::{DataSource, LayerSpec, NodeClass, PhysNode, Scenario, Tier};
use crate::perf::KModelParams;

/// Preset format revision, bumped whenever a default below changes.
pub const PRESET_VERSION: u32 = 1;

/// AlexNet layers: name and MOPs per sample.
pub const ALEXNET: [(&str, f64); 8] = [
    ("conv1", 0.043),
    ("conv2", 6.771),
    ("conv3", 10.145),
    ("conv4", 13.523),
    ("conv5", 9.017),
    ("fc1", 4.001),
    ("fc2", 16.027),
    ("fc3", 0.039),
];

/// Outgoing over incoming data per layer.
pub const DATA_RATIOS: [f64; 8] = [1.5, 0.75, 1.0, 0.67, 0.25, 1.0, 0.25, 0.01];

/// Mbit per CIFAR-like sample.
pub const SAMPLE_MBIT: f64 = 0.025;

#[derive(Debug, Clone, Copy)]
pub struct ClassSpec {
    pub tops: f64,
    pub watts: f64,
    /// Fixed watts while a layer computes.
    pub fixed_watts: f64,
    /// Layers the class has memory for, counted from the first.
    pub layers: usize,
}

pub fn class_spec(class: NodeClass) -> ClassSpec {
    match class {
        NodeClass::Gold => ClassSpec {
            tops: 312.0,
            watts: 400.0,
            fixed_watts: 12.0,
            layers: 8,
        },
        NodeClass::Silver => ClassSpec {
            tops: 153.4,
            watts: 140.0,
            fixed_watts: 6.0,
            layers: 5,
        },
        NodeClass::Iron => ClassSpec {
            tops: 40.0,
            watts: 28.0,
            fixed_watts: 3.0,
            layers: 4,
        },
        NodeClass::Bronze => ClassSpec {
            tops: 11.0,
            watts: 6.0,
            fixed_watts: 1.0,
            layers: 2,
        },
    }
}

fn tier_e_net(tier: Tier) -> f64 {
    match tier {
        Tier::Mobile => 0.008,
        Tier::Edge => 0.003,
        Tier::Cloud => 0.002,
    }
}

fn jitter(rng: &mut ChaCha8Rng, value: f64, spread: f64) -> f64 {
    value * rng.gen_range(1.0 - spread..=1.0 + spread)
}

/// Per-Mbit layer specs from per-sample costs.
pub fn alexnet_layers(sample_mbit: f64) -> Vec<LayerSpec> {
    let mut size = sample_mbit;
    ALEXNET
        .iter()
        .zip(DATA_RATIOS)
        .map(|(&(name, mops), q)| {
            let spec = LayerSpec {
                name: name.to_string(),
                compute_req: mops / size,
                data_ratio: q,
            };
            size *= q;
            spec
        })
        .collect()
}

fn node(rng: &mut ChaCha8Rng, id: String, class: NodeClass, tier: Tier, num_layers: usize) -> PhysNode {
    let spec = class_spec(class);
    let capacity = spec.tops * 1e6;
    PhysNode {
        id,
        class,
        tier,
        capacity,
        e_p: spec.watts / capacity,
        e_f: vec![spec.fixed_watts; num_layers],
        e_net: jitter(rng, tier_e_net(tier), 0.1),
        mu: (0..num_layers).map(|l| l < spec.layers).collect(),
    }
}

fn link_rate(a: Tier, b: Tier) -> f64 {
    match (a, b) {
        (Tier::Edge, Tier::Edge) => 800.0,
        (Tier::Cloud, Tier::Cloud) => 10_000.0,
        (Tier::Edge, Tier::Cloud) | (Tier::Cloud, Tier::Edge) => 1000.0,
        _ => 0.0,
    }
}

fn fixed_links(rng: &mut ChaCha8Rng, nodes: &[PhysNode]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut links = vec![vec![0.0; n]; n];
    for a in 0..n {
        links[a][a] = f64::INFINITY;
        for b in (a + 1)..n {
            let base = link_rate(nodes[a].tier, nodes[b].tier);
            if base > 0.0 {
                let s = jitter(rng, base, 0.1);
                links[a][b] = s;
                links[b][a] = s;
            }
        }
    }
    links
}

/// Four sources on three silver edge nodes, two gold cloud nodes.
pub fn small(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = alexnet_layers(SAMPLE_MBIT);
    let l = layers.len();
    let mut nodes = Vec::new();
    for i in 1..=3 {
        nodes.push(node(&mut rng, format!("E{i}"), NodeClass::Silver, Tier::Edge, l));
    }
    for i in 1..=2 {
        nodes.push(node(&mut rng, format!("C{i}"), NodeClass::Gold, Tier::Cloud, l));
    }
    let links = fixed_links(&mut rng, &nodes);
    let hosts = [0, 0, 1, 2];
    let sources = hosts
        .iter()
        .enumerate()
        .map(|(i, &host)| DataSource {
            id: format!("d{}", i + 1),
            volume: jitter(&mut rng, 312.5, 0.2),
            host,
        })
        .collect();
    Scenario {
        layers,
        nodes,
        sources,
        links,
        k_model: KModelParams::default(),
        alpha: 1.0,
        sample_mbit: SAMPLE_MBIT,
        trees: EnumConfig {
            max_depth: Some(0),
            ..EnumConfig::default()
        },
    }
}

/// Fifteen sources on eight bronze phones, four iron and five silver edge
/// nodes, three gold cloud nodes.
pub fn large(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = alexnet_layers(SAMPLE_MBIT);
    let l = layers.len();
    let mut nodes = Vec::new();
    for i in 1..=8 {
        nodes.push(node(&mut rng, format!("M{i}"), NodeClass::Bronze, Tier::Mobile, l));
    }
    for i in 1..=4 {
        nodes.push(node(&mut rng, format!("I{i}"), NodeClass::Iron, Tier::Edge, l));
    }
    for i in 1..=5 {
        nodes.push(node(&mut rng, format!("E{i}"), NodeClass::Silver, Tier::Edge, l));
    }
    for i in 1..=3 {
        nodes.push(node(&mut rng, format!("C{i}"), NodeClass::Gold, Tier::Cloud, l));
    }
    let mut links = fixed_links(&mut rng, &nodes);
    let edges: Vec<usize> = (8..17).collect();
    for m in 0..8 {
        let count = rng.gen_range(2..=4);
        let mut pool = edges.clone();
        for _ in 0..count {
            let e = pool.swap_remove(rng.gen_range(0..pool.len()));
            let s = rng.gen_range(100.0..=200.0);
            links[m][e] = s;
            links[e][m] = s;
        }
    }
    let sources = (0..15)
        .map(|i| DataSource {
            id: format!("d{}", i + 1),
            volume: jitter(&mut rng, 83.3, 0.2),
            host: i % 8,
        })
        .collect();
    Scenario {
        layers,
        nodes,
        sources,
        links,
        k_model: KModelParams::default(),
        alpha: 1.0,
        sample_mbit: SAMPLE_MBIT,
        trees: EnumConfig::default(),
    }
}

/// Random 4x4 assignment instance.
pub fn gap(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..4).map(|_| rng.gen_range(1..=20) as f64).collect())
        .collect();
    gap_scenario(&costs).expect("generated costs are valid")
}

pub fn gen_scenario(preset: &str, seed: u64) -> Result<Scenario> {
    match preset {
        "small" => Ok(small(seed)),
        "large" => Ok(large(seed)),
        "gap" => Ok(gap(seed)),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Small random scenario for property tests: 2 to 4 nodes, 1 to 3 sources,
/// 2 to 4 layers, random memory and links.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.gen_range(2..=4);
    let n = rng.gen_range(2..=4);
    let layers = (0..l)
        .map(|i| LayerSpec {
            name: format!("l{i}"),
            compute_req: rng.gen_range(100.0..2000.0),
            data_ratio: rng.gen_range(0.2..1.5),
        })
        .collect();
    let classes = [NodeClass::Bronze, NodeClass::Iron, NodeClass::Silver, NodeClass::Gold];
    let tiers = [Tier::Mobile, Tier::Edge, Tier::Edge, Tier::Cloud];
    let mut nodes: Vec<PhysNode> = (0..n)
        .map(|i| {
            let c = rng.gen_range(0..4);
            let spec = class_spec(classes[c]);
            let capacity = jitter(&mut rng, spec.tops * 1e6, 0.3);
            PhysNode {
                id: format!("n{i}"),
                class: classes[c],
                tier: tiers[c],
                capacity,
                e_p: jitter(&mut rng, spec.watts / (spec.tops * 1e6), 0.3),
                e_f: (0..l).map(|_| rng.gen_range(0.5..15.0)).collect(),
                e_net: rng.gen_range(0.001..0.01),
                mu: (0..l).map(|_| rng.gen_bool(0.7)).collect(),
            }
        })
        .collect();
    // Keep every layer placeable.
    for layer in 0..l {
        if !nodes.iter().any(|nd| nd.mu[layer]) {
            let pick = rng.gen_range(0..n);
            nodes[pick].mu[layer] = true;
        }
    }
    let mut links = vec![vec![0.0; n]; n];
    for a in 0..n {
        links[a][a] = f64::INFINITY;
        for b in (a + 1)..n {
            if rng.gen_bool(0.8) {
                let s = rng.gen_range(50.0..2000.0);
                links[a][b] = s;
                links[b][a] = s;
            }
        }
    }
    let ns = rng.gen_range(1..=3);
    let sources = (0..ns)
        .map(|i| DataSource {
            id: format!("d{i}"),
            volume: rng.gen_range(20.0..400.0),
            host: rng.gen_range(0..n),
        })
        .collect();
    Scenario {
        layers,
        nodes,
        sources,
        links,
        k_model: KModelParams::default(),
        alpha: 1.0,
        sample_mbit: SAMPLE_MBIT,
        trees: EnumConfig::default(),
    }
}
