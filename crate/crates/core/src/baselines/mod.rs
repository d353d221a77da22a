//! Reference strategies: split learning, exhaustive search and the
//! assignment-problem family.

pub mod brute;
pub mod gap;
pub mod split;

pub use brute::{brute_force_optimum, evaluate_placement, search_size, BruteConfig, Optimum};
pub use gap::{gap_scenario, solve_exhaustive};
pub use split::{split_learning_plan, split_points, SplitPlan};
