use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::tree::EnumConfig;
use crate::perf::KModelParams;

/// Position of a node in the mobile-edge-cloud continuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Mobile,
    Edge,
    Cloud,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Mobile, Tier::Edge, Tier::Cloud];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Mobile => "mobile",
            Tier::Edge => "edge",
            Tier::Cloud => "cloud",
        }
    }
}

/// Hardware class of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Gold,
    Silver,
    Iron,
    Bronze,
}

impl NodeClass {
    pub const ALL: [NodeClass; 4] = [NodeClass::Gold, NodeClass::Silver, NodeClass::Iron, NodeClass::Bronze];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Gold => "gold",
            NodeClass::Silver => "silver",
            NodeClass::Iron => "iron",
            NodeClass::Bronze => "bronze",
        }
    }
}

/// One layer of a chain DNN.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    /// MOPs needed per Mbit of data entering the layer.
    pub compute_req: f64,
    /// Outgoing over incoming data volume.
    pub data_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysNode {
    pub id: String,
    pub class: NodeClass,
    pub tier: Tier,
    /// MOPS available to the instances placed here.
    pub capacity: f64,
    /// Watts drawn per MOPS of allocated compute.
    pub e_p: f64,
    /// Fixed watts per layer while an instance of that layer computes here.
    pub e_f: Vec<f64>,
    /// Joules per Mbit sent to another node.
    pub e_net: f64,
    /// Whether the node has the memory to host each layer.
    pub mu: Vec<bool>,
}

impl PhysNode {
    /// W/TOPS, the unit hardware data sheets use.
    pub fn efficiency(&self) -> f64 {
        self.e_p * 1e6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub id: String,
    /// Mbit produced per epoch.
    pub volume: f64,
    /// Index of the node the source sits on.
    pub host: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layers: Vec<LayerSpec>,
    pub nodes: Vec<PhysNode>,
    pub sources: Vec<DataSource>,
    /// Mbit/s between node pairs, 0 when out of range. The diagonal is never read.
    pub links: Vec<Vec<f64>>,
    pub k_model: KModelParams,
    /// Redundancy factor bounding instances per layer to `alpha * |sources|`.
    pub alpha: f64,
    /// Mbit per input sample, used to convert per-sample layer costs.
    pub sample_mbit: f64,
    pub trees: EnumConfig,
}

impl Scenario {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Link capacity; a node talks to itself at infinite rate.
    pub fn link(&self, from: usize, to: usize) -> f64 {
        if from == to {
            f64::INFINITY
        } else {
            self.links[from][to]
        }
    }

    pub fn connected(&self, from: usize, to: usize) -> bool {
        from == to || self.links[from][to] > 0.0
    }

    pub fn hosts(&self, layer: usize, node: usize) -> bool {
        self.nodes[node].mu[layer]
    }

    /// Largest number of instances a layer may have.
    pub fn max_instances(&self) -> usize {
        (self.alpha * self.sources.len() as f64).floor() as usize
    }

    pub fn total_volume(&self, sources: &[usize]) -> f64 {
        sources.iter().map(|&d| self.sources[d].volume).sum()
    }

    /// Checks every structural invariant, reporting the first one broken.
    pub fn validate(&self) -> Result<()> {
        let l = self.layers.len();
        let n = self.nodes.len();
        if l == 0 {
            return Err(Error::validation("scenario has no layers"));
        }
        if n == 0 {
            return Err(Error::validation("scenario has no nodes"));
        }
        if self.sources.is_empty() {
            return Err(Error::validation("scenario has no data sources"));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if !(layer.compute_req >= 0.0) || !layer.compute_req.is_finite() {
                return Err(Error::validation(format!(
                    "layer {i} ({}) has compute requirement {}",
                    layer.name, layer.compute_req
                )));
            }
            if !(layer.data_ratio > 0.0) || !layer.data_ratio.is_finite() {
                return Err(Error::validation(format!(
                    "layer {i} ({}) has data ratio {}",
                    layer.name, layer.data_ratio
                )));
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !(node.capacity > 0.0) || !node.capacity.is_finite() {
                return Err(Error::validation(format!(
                    "node {} has capacity {}",
                    node.id, node.capacity
                )));
            }
            let energy_ok = |v: f64| v >= 0.0 && v.is_finite();
            if !energy_ok(node.e_p) || !energy_ok(node.e_net) {
                return Err(Error::validation(format!(
                    "node {} has a negative or non-finite energy coefficient",
                    node.id
                )));
            }
            if node.e_f.len() != l || node.mu.len() != l {
                return Err(Error::validation(format!(
                    "node {} needs {l} entries in e_f and mu",
                    node.id
                )));
            }
            if node.e_f.iter().any(|&v| !energy_ok(v)) {
                return Err(Error::validation(format!(
                    "node {} has a negative or non-finite fixed power",
                    node.id
                )));
            }
            if self.nodes[..i].iter().any(|other| other.id == node.id) {
                return Err(Error::validation(format!("duplicate node id {}", node.id)));
            }
        }
        if self.links.len() != n || self.links.iter().any(|row| row.len() != n) {
            return Err(Error::validation(format!("link matrix must be {n}x{n}")));
        }
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let s = self.links[a][b];
                if s.is_nan() || s < 0.0 {
                    return Err(Error::validation(format!(
                        "link {}-{} has capacity {s}",
                        self.nodes[a].id, self.nodes[b].id
                    )));
                }
                if s != self.links[b][a] {
                    return Err(Error::validation(format!(
                        "link matrix is not symmetric at {}-{}",
                        self.nodes[a].id, self.nodes[b].id
                    )));
                }
            }
        }
        for (i, src) in self.sources.iter().enumerate() {
            if !(src.volume > 0.0) || !src.volume.is_finite() {
                return Err(Error::validation(format!(
                    "source {} has volume {}",
                    src.id, src.volume
                )));
            }
            if src.host >= n {
                return Err(Error::validation(format!("source {} sits on a missing node", src.id)));
            }
            if self.sources[..i].iter().any(|other| other.id == src.id) {
                return Err(Error::validation(format!("duplicate source id {}", src.id)));
            }
        }
        if !(self.alpha >= 1.0) {
            return Err(Error::validation(format!(
                "redundancy factor {} is below 1",
                self.alpha
            )));
        }
        if !(self.sample_mbit > 0.0) {
            return Err(Error::validation(format!(
                "sample size {} must be positive",
                self.sample_mbit
            )));
        }
        self.k_model.validate()?;
        Ok(())
    }
}
