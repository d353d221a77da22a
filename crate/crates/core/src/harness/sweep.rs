use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{brute_force_optimum, split_learning_plan, BruteConfig};
use crate::error::{Error, Result};
use crate::harness::solve::{ordered_trees, righttrain_solve, SolveConfig};
use crate::model::{compute_flows, incoming_flows, Scenario, Solution, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    RightTrain,
    Sl,
    Optimum,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::RightTrain, Strategy::Sl, Strategy::Optimum];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::RightTrain => "righttrain",
            Strategy::Sl => "sl",
            Strategy::Optimum => "optimum",
        }
    }

    pub fn parse(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown strategy `{s}`")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t_max: f64,
    pub strategy: Strategy,
    /// `ok`, `infeasible` or `error: ...`.
    pub status: String,
    pub solution: Option<Solution>,
    /// Mbit processed per epoch on each tier, mobile first.
    pub tier_mbit: [f64; 3],
    /// Mbit processed per epoch on each node class.
    pub class_mbit: BTreeMap<String, f64>,
    /// Distinct nodes used per class.
    pub class_nodes: BTreeMap<String, usize>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.solution.is_some()
    }

    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.metrics.objective)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn of(&self, strategy: Strategy) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }
}

/// Mbit entering instances per epoch, grouped by tier and by node class.
pub fn processed_data(
    solution: &Solution,
    scenario: &Scenario,
) -> ([f64; 3], BTreeMap<String, f64>, BTreeMap<String, usize>) {
    let flows = compute_flows(&solution.tree, &solution.allocation.x, scenario);
    let incoming = incoming_flows(&solution.tree, &flows);
    let mut tiers = [0.0; 3];
    let mut classes: BTreeMap<String, f64> = BTreeMap::new();
    let mut used: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, &node) in solution.deployment.mapping.iter().enumerate() {
        let ph = &scenario.nodes[node];
        let t = Tier::ALL.iter().position(|&t| t == ph.tier).unwrap();
        tiers[t] += incoming[i];
        *classes.entry(ph.class.as_str().to_string()).or_insert(0.0) += incoming[i];
        let nodes = used.entry(ph.class.as_str().to_string()).or_default();
        if !nodes.contains(&node) {
            nodes.push(node);
        }
    }
    let counts = used.into_iter().map(|(k, v)| (k, v.len())).collect();
    (tiers, classes, counts)
}

fn row(t_max: f64, strategy: Strategy, outcome: Result<Solution>, scenario: &Scenario) -> SweepRow {
    match outcome {
        Ok(solution) => {
            let (tier_mbit, class_mbit, class_nodes) = processed_data(&solution, scenario);
            SweepRow {
                t_max,
                strategy,
                status: "ok".into(),
                solution: Some(solution),
                tier_mbit,
                class_mbit,
                class_nodes,
            }
        }
        Err(e) => SweepRow {
            t_max,
            strategy,
            status: if e.is_infeasible() {
                "infeasible".into()
            } else {
                format!("error: {e}")
            },
            solution: None,
            tier_mbit: [0.0; 3],
            class_mbit: BTreeMap::new(),
            class_nodes: BTreeMap::new(),
        },
    }
}

/// Evenly spaced deadlines from `start` to `stop` inclusive.
pub fn deadline_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::validation(format!("bad deadline range {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Runs every strategy at every deadline. Failures become row statuses.
pub fn sweep(scenario: &Scenario, deadlines: &[f64], strategies: &[Strategy], cfg: &SolveConfig) -> SweepResult {
    let mut strategies = strategies.to_vec();
    strategies.sort();
    strategies.dedup();
    let mut deadlines = deadlines.to_vec();
    deadlines.sort_by(f64::total_cmp);
    let trees = if strategies.contains(&Strategy::Optimum) {
        Some(ordered_trees(scenario).map(|ts| ts.into_iter().map(|(t, _)| t).collect::<Vec<_>>()))
    } else {
        None
    };
    let brute = BruteConfig {
        refine: cfg.refine.clone(),
        ..BruteConfig::default()
    };
    let jobs: Vec<(Strategy, f64)> = strategies
        .iter()
        .flat_map(|&s| deadlines.iter().map(move |&t| (s, t)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(strategy, t_max)| {
            let outcome = match strategy {
                Strategy::RightTrain => righttrain_solve(scenario, t_max, cfg).map(|o| o.solution),
                Strategy::Sl => split_learning_plan(scenario, t_max).map(|p| p.solution),
                Strategy::Optimum => match trees.as_ref().unwrap() {
                    Ok(trees) => brute_force_optimum(scenario, trees, t_max, &brute).map(|o| o.solution),
                    Err(e) => Err(Error::validation(e.to_string())),
                },
            };
            row(t_max, strategy, outcome, scenario)
        })
        .collect();
    SweepResult { rows }
}
