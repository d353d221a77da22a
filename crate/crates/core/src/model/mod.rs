//! Scenarios, instance trees, deployments, allocations and their constraints.

mod constraints;
pub mod io;
mod scenario;
mod solution;
pub mod tree;

pub use constraints::{check_constraints, ConstraintReport, Rule, RuleStatus, Violation, TOLERANCE};
pub use io::{
    load_scenario, load_solution, parse_scenario, parse_solution, save_scenario, scenario_to_json, solution_to_json,
};
pub use scenario::{DataSource, LayerSpec, NodeClass, PhysNode, Scenario, Tier};
pub use solution::{
    compute_flows, full_allocation, incoming_flows, node_share, Allocation, Deployment, Metrics, Solution,
};
pub use tree::{enumerate_instance_trees, Endpoint, EnumConfig, Instance, InstanceTree, TreeEdge};
