//! Instance-to-node mapping over the expanded graph.

pub mod dump;
mod graph;
pub mod oracle;
pub mod rmwp;
mod steiner;

pub use graph::{build_expanded_graph, ExpandedGraph, GraphEdge, Vertex};
pub use oracle::{brute_force_steiner_oracle, min_total_time, OracleTree};
pub use rmwp::{restricted_min_weight_path, Dag, PathGraph, PathQuery, PathResult};
pub use steiner::{da_steiner_tree, placement_time, placement_weight, SteinerTree};
