//! Line-oriented text dump of an expanded graph.
//!
//! ```text
//! V <id> source <source>
//! V <id> map <layer> <index> <node>
//! V <id> sink
//! E <from> <to> <weight> <delay>
//! ```
//!
//! Vertices come first in id order, then edges sorted by endpoints.

use std::io::{self, Write};

use crate::mapper::graph::{ExpandedGraph, Vertex};
use crate::model::{InstanceTree, Scenario};

pub fn write_graph(
    g: &ExpandedGraph,
    tree: &InstanceTree,
    scenario: &Scenario,
    out: &mut impl Write,
) -> io::Result<()> {
    for (id, v) in g.vertices.iter().enumerate() {
        match *v {
            Vertex::Source(d) => writeln!(out, "V {id} source {}", scenario.sources[d].id)?,
            Vertex::Map { instance, node } => {
                let inst = tree.instances[instance];
                writeln!(
                    out,
                    "V {id} map {} {} {}",
                    inst.layer, inst.index, scenario.nodes[node].id
                )?
            }
            Vertex::Sink => writeln!(out, "V {id} sink")?,
        }
    }
    for e in &g.edges {
        writeln!(out, "E {} {} {} {}", e.from, e.to, e.weight, e.delay)?;
    }
    Ok(())
}

pub fn graph_to_string(g: &ExpandedGraph, tree: &InstanceTree, scenario: &Scenario) -> String {
    let mut buf = Vec::new();
    write_graph(g, tree, scenario, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("dump is UTF-8")
}
