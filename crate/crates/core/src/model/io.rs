//! JSON scenario and solution files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::tree::EnumConfig;
use crate::model::{DataSource, LayerSpec, NodeClass, PhysNode, Scenario, Solution, Tier};
use crate::perf::{self, KModelParams};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    name: String,
    mops_per_sample: f64,
    q: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeFile {
    id: String,
    class: NodeClass,
    tier: Tier,
    tops: f64,
    watts: f64,
    e_f: Vec<f64>,
    e_net: f64,
    mu: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinksFile {
    /// `null` stands for an unbounded link.
    matrix: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    id: String,
    delta_mbit: f64,
    host: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    layers: Vec<LayerFile>,
    nodes: Vec<NodeFile>,
    links: LinksFile,
    sources: Vec<SourceFile>,
    #[serde(default)]
    k_model: KModelParams,
    sample_mbit: f64,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    trees: EnumConfig,
}

fn default_alpha() -> f64 {
    1.0
}

fn to_scenario(file: ScenarioFile) -> Result<Scenario> {
    if !(file.sample_mbit > 0.0) {
        return Err(Error::validation(format!(
            "sample size {} must be positive",
            file.sample_mbit
        )));
    }
    // Per-sample costs become per-Mbit of the data entering each layer.
    let mut size = file.sample_mbit;
    let mut layers = Vec::with_capacity(file.layers.len());
    for l in &file.layers {
        layers.push(LayerSpec {
            name: l.name.clone(),
            compute_req: l.mops_per_sample / size,
            data_ratio: l.q,
        });
        size *= l.q;
    }
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for n in file.nodes {
        if !(n.tops > 0.0) {
            return Err(Error::validation(format!("node {} has {} TOPS", n.id, n.tops)));
        }
        let capacity = n.tops * 1e6;
        nodes.push(PhysNode {
            id: n.id,
            class: n.class,
            tier: n.tier,
            capacity,
            e_p: n.watts / capacity,
            e_f: n.e_f,
            e_net: n.e_net,
            mu: n.mu,
        });
    }
    let mut sources = Vec::with_capacity(file.sources.len());
    for s in file.sources {
        let host = nodes
            .iter()
            .position(|n| n.id == s.host)
            .ok_or_else(|| Error::validation(format!("source {} sits on unknown node {}", s.id, s.host)))?;
        sources.push(DataSource {
            id: s.id,
            volume: s.delta_mbit,
            host,
        });
    }
    let links: Vec<Vec<f64>> = file
        .links
        .matrix
        .into_iter()
        .enumerate()
        .map(|(a, row)| {
            row.into_iter()
                .enumerate()
                .map(|(b, v)| {
                    if a == b {
                        f64::INFINITY
                    } else {
                        v.unwrap_or(f64::INFINITY)
                    }
                })
                .collect()
        })
        .collect();
    let scenario = Scenario {
        layers,
        nodes,
        sources,
        links,
        k_model: file.k_model,
        alpha: file.alpha,
        sample_mbit: file.sample_mbit,
        trees: file.trees,
    };
    scenario.validate()?;
    for tree in &scenario.trees.custom {
        tree.validate(&scenario)?;
    }
    Ok(scenario)
}

fn to_file(s: &Scenario) -> ScenarioFile {
    let mut size = s.sample_mbit;
    let mut layers = Vec::with_capacity(s.layers.len());
    for l in &s.layers {
        layers.push(LayerFile {
            name: l.name.clone(),
            mops_per_sample: round_sig(l.compute_req * size),
            q: l.data_ratio,
        });
        size *= l.data_ratio;
    }
    let nodes = s
        .nodes
        .iter()
        .map(|n| NodeFile {
            id: n.id.clone(),
            class: n.class,
            tier: n.tier,
            tops: n.capacity / 1e6,
            watts: n.e_p * n.capacity,
            e_f: n.e_f.clone(),
            e_net: n.e_net,
            mu: n.mu.clone(),
        })
        .collect();
    let matrix = s
        .links
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, &v)| if a == b || v.is_infinite() { None } else { Some(v) })
                .collect()
        })
        .collect();
    let sources = s
        .sources
        .iter()
        .map(|d| SourceFile {
            id: d.id.clone(),
            delta_mbit: d.volume,
            host: s.nodes[d.host].id.clone(),
        })
        .collect();
    ScenarioFile {
        layers,
        nodes,
        links: LinksFile { matrix },
        sources,
        k_model: s.k_model,
        sample_mbit: s.sample_mbit,
        alpha: s.alpha,
        trees: s.trees.clone(),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    to_scenario(file)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&to_file(scenario)).expect("scenario serializes");
    text.push('\n');
    text
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, scenario_to_json(scenario))?;
    Ok(())
}

pub fn solution_to_json(solution: &Solution) -> String {
    let mut text = serde_json::to_string_pretty(solution).expect("solution serializes");
    text.push('\n');
    text
}

/// Reads a solution and recomputes its metrics against `scenario`.
pub fn parse_solution(text: &str, scenario: &Scenario) -> Result<Solution> {
    let stored: Solution = serde_json::from_str(text)?;
    if stored.deployment.mapping.len() != stored.tree.instances.len()
        || stored.allocation.rho.len() != stored.tree.instances.len()
        || stored.allocation.x.len() != scenario.sources.len()
    {
        return Err(Error::validation("solution does not match the scenario"));
    }
    stored.tree.validate(scenario)?;
    if stored.deployment.mapping.iter().any(|&n| n >= scenario.nodes.len()) {
        return Err(Error::validation("solution places an instance on a missing node"));
    }
    perf::evaluate(stored.tree, stored.deployment, stored.allocation, scenario)
}

pub fn load_solution(path: impl AsRef<Path>, scenario: &Scenario) -> Result<Solution> {
    parse_solution(&fs::read_to_string(path)?, scenario)
}

/// Drops the noise a per-Mbit round trip leaves in the last digits.
fn round_sig(v: f64) -> f64 {
    format!("{v:.14e}").parse().unwrap_or(v)
}
