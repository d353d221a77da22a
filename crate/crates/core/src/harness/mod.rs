//! The outer solve loop, presets, deadline sweeps and result files.

pub mod emit;
pub mod presets;
pub mod solve;
pub mod sweep;

pub use presets::{gen_scenario, random_scenario};
pub use solve::{ordered_trees, righttrain_solve, solve_tree, RightTrainOutcome, SolveConfig};
pub use sweep::{deadline_range, processed_data, sweep, Strategy, SweepResult, SweepRow};
