use std::fmt;

use serde::Serialize;

use crate::model::tree::TreeRule;
use crate::model::{compute_flows, incoming_flows, Scenario, Solution};
use crate::perf::{data_fraction, PHI_MIN};

/// Absolute slack allowed on continuous constraints.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Every layer has an instance.
    Coverage,
    /// Edges follow the layer chain and form a tree.
    TreeShape,
    /// Each instance sits on exactly one node.
    Placement,
    /// Nodes hold the layers placed on them.
    Memory,
    /// Per-node compute fits the capacity.
    Capacity,
    /// Per-link flow fits the link.
    Bandwidth,
    /// Flow conservation along the tree.
    Conservation,
    /// Used data within what each source produces.
    DataBounds,
    /// Enough data for the epoch model.
    DataFloor,
}

impl Rule {
    pub const ALL: [Rule; 9] = [
        Rule::Coverage,
        Rule::TreeShape,
        Rule::Placement,
        Rule::Memory,
        Rule::Capacity,
        Rule::Bandwidth,
        Rule::Conservation,
        Rule::DataBounds,
        Rule::DataFloor,
    ];

    /// Equation number in the system model, if any.
    pub fn equation(self) -> Option<u8> {
        match self {
            Rule::Coverage => Some(2),
            Rule::TreeShape => Some(3),
            Rule::Placement => Some(4),
            Rule::Memory => Some(5),
            Rule::Capacity => Some(6),
            Rule::Bandwidth => Some(7),
            Rule::Conservation => Some(8),
            Rule::DataBounds => Some(9),
            Rule::DataFloor => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub entity: String,
    /// Negative by the amount of the excess. NaN for discrete rules.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleStatus {
    pub rule: Rule,
    pub passed: bool,
    /// Smallest slack seen; infinite when nothing continuous was checked.
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub rules: Vec<RuleStatus>,
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_of(&self, rule: Rule) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.rule == rule)
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for status in &self.rules {
            let label = match status.rule.equation() {
                Some(eq) => format!("eq{eq}"),
                None => "floor".to_string(),
            };
            write!(
                f,
                "{label:<6} {:?}: {}",
                status.rule,
                if status.passed { "pass" } else { "FAIL" }
            )?;
            if status.min_slack.is_finite() {
                write!(f, " (min slack {:.3e})", status.min_slack)?;
            }
            writeln!(f)?;
            for v in self.violations_of(status.rule) {
                writeln!(f, "       {}", v.entity)?;
            }
        }
        Ok(())
    }
}

struct Collector {
    violations: Vec<Violation>,
    slack: Vec<f64>,
}

impl Collector {
    fn fail(&mut self, rule: Rule, entity: String) {
        self.violations.push(Violation {
            rule,
            entity,
            slack: f64::NAN,
        });
    }

    fn bound(&mut self, rule: Rule, entity: impl FnOnce() -> String, slack: f64) {
        let i = Rule::ALL.iter().position(|&r| r == rule).unwrap();
        self.slack[i] = self.slack[i].min(slack);
        if !(slack >= -TOLERANCE) {
            self.violations.push(Violation {
                rule,
                entity: entity(),
                slack,
            });
        }
    }
}

/// Checks the system-model constraints and reports every violation.
pub fn check_constraints(solution: &Solution, scenario: &Scenario) -> ConstraintReport {
    let mut c = Collector {
        violations: Vec::new(),
        slack: vec![f64::INFINITY; Rule::ALL.len()],
    };
    let tree = &solution.tree;
    let n_inst = tree.instances.len();
    let name = |i: usize| {
        let inst = tree.instances[i];
        format!("instance ({}, {})", inst.layer, inst.index)
    };

    let issues = tree.issues(scenario);
    for issue in &issues {
        let rule = match issue.rule {
            TreeRule::Coverage => Rule::Coverage,
            TreeRule::Shape => Rule::TreeShape,
        };
        c.fail(rule, issue.message.clone());
    }
    let mapping = &solution.deployment.mapping;
    if mapping.len() != n_inst {
        c.fail(
            Rule::Placement,
            format!("{} instances but {} placements", n_inst, mapping.len()),
        );
    }
    for (i, &node) in mapping.iter().enumerate().take(n_inst) {
        if node >= scenario.nodes.len() {
            c.fail(Rule::Placement, format!("{} placed on missing node {node}", name(i)));
        }
    }
    let rho = &solution.allocation.rho;
    let x = &solution.allocation.x;
    if rho.len() != n_inst {
        c.fail(
            Rule::Capacity,
            format!("{} instances but {} compute shares", n_inst, rho.len()),
        );
    }
    if x.len() != scenario.sources.len() {
        c.fail(
            Rule::DataBounds,
            format!("{} sources but {} data amounts", scenario.sources.len(), x.len()),
        );
    }
    // The remaining checks index through the tree and would panic on a broken one.
    if !c.violations.is_empty() {
        return finish(c);
    }

    for i in 0..n_inst {
        let inst = tree.instances[i];
        if !scenario.hosts(inst.layer, mapping[i]) {
            c.fail(
                Rule::Memory,
                format!(
                    "{} on node {} which cannot hold it",
                    name(i),
                    scenario.nodes[mapping[i]].id
                ),
            );
        }
    }

    let mut used = vec![0.0; scenario.nodes.len()];
    for i in 0..n_inst {
        if !(rho[i] > 0.0) || !rho[i].is_finite() {
            c.fail(Rule::Capacity, format!("{} has compute share {}", name(i), rho[i]));
        }
        used[mapping[i]] += rho[i];
    }
    for (node, &total) in used.iter().enumerate() {
        if total > 0.0 {
            let cap = scenario.nodes[node].capacity;
            c.bound(
                Rule::Capacity,
                || format!("node {} uses {total} of {cap} MOPS", scenario.nodes[node].id),
                cap - total,
            );
        }
    }

    let in_tree = |d: usize| tree.used_sources.contains(&d);
    for (d, src) in scenario.sources.iter().enumerate() {
        if in_tree(d) {
            c.bound(
                Rule::DataBounds,
                || format!("source {} uses {} of {} Mbit", src.id, x[d], src.volume),
                src.volume - x[d],
            );
            c.bound(
                Rule::DataBounds,
                || format!("source {} uses negative data {}", src.id, x[d]),
                x[d],
            );
        } else if x[d] != 0.0 {
            c.fail(
                Rule::DataBounds,
                format!("source {} is outside the tree but uses {} Mbit", src.id, x[d]),
            );
        }
    }
    let phi = data_fraction(tree, x, scenario);
    c.bound(
        Rule::DataFloor,
        || format!("data fraction {phi} below {PHI_MIN}"),
        phi - PHI_MIN,
    );

    let flows = compute_flows(tree, x, scenario);
    let incoming = incoming_flows(tree, &flows);
    let topo = tree.topology(scenario.sources.len());
    for i in 0..n_inst {
        if let Some(e) = topo.out_edge[i] {
            let expect = scenario.layers[tree.instances[i].layer].data_ratio * incoming[i];
            c.bound(
                Rule::Conservation,
                || format!("{} sends {} instead of {expect}", name(i), flows[e]),
                -(flows[e] - expect).abs(),
            );
        }
    }
    for (e, &f) in flows.iter().enumerate() {
        if !f.is_finite() {
            c.fail(Rule::Conservation, format!("edge {e} carries {f}"));
        }
    }

    let pairs = crate::perf::link_flows(tree, &solution.deployment, &flows, scenario);
    for (&(a, b), &flow) in &pairs {
        let cap = scenario.link(a, b);
        c.bound(
            Rule::Bandwidth,
            || {
                format!(
                    "link {} -> {} carries {flow} Mbit over {cap} Mbit/s",
                    scenario.nodes[a].id, scenario.nodes[b].id
                )
            },
            if cap.is_infinite() { f64::INFINITY } else { cap - flow },
        );
    }
    finish(c)
}

fn finish(c: Collector) -> ConstraintReport {
    let rules = Rule::ALL
        .iter()
        .enumerate()
        .map(|(i, &rule)| RuleStatus {
            rule,
            passed: !c.violations.iter().any(|v| v.rule == rule),
            min_slack: c.slack[i],
        })
        .collect();
    ConstraintReport {
        rules,
        violations: c.violations,
    }
}
