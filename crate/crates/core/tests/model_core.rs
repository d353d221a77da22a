mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use righttrain::harness::{gen_scenario, random_scenario};
use righttrain::model::tree::largest_subsets;
use righttrain::model::{
    check_constraints, compute_flows, enumerate_instance_trees, load_scenario, parse_scenario, save_scenario,
    scenario_to_json, InstanceTree, Rule,
};
use righttrain::Error;

#[test]
fn small_preset_file_loads_with_four_sources_and_five_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.json");
    save_scenario(&gen_scenario("small", 42).unwrap(), &path).unwrap();
    let s = load_scenario(&path).unwrap();
    assert_eq!(s.sources.len(), 4);
    assert_eq!(s.nodes.len(), 5);
}

#[test]
fn scenario_file_round_trips() {
    let s = gen_scenario("large", 3).unwrap();
    let text = scenario_to_json(&s);
    let back = parse_scenario(&text).unwrap();
    assert_eq!(scenario_to_json(&back), text);
    assert_eq!(back.nodes.len(), 20);
    for (a, b) in s.nodes.iter().zip(&back.nodes) {
        assert!(rel_close(a.capacity, b.capacity, 1e-12));
        assert!(rel_close(a.e_p, b.e_p, 1e-12));
    }
}

fn edit(f: impl FnOnce(&mut serde_json::Value)) -> Result<righttrain::model::Scenario, Error> {
    let mut v: serde_json::Value = serde_json::from_str(&scenario_to_json(&gen_scenario("small", 1).unwrap())).unwrap();
    f(&mut v);
    parse_scenario(&v.to_string())
}

#[test]
fn asymmetric_links_are_rejected() {
    let err = edit(|v| v["links"]["matrix"][0][1] = serde_json::json!(1.0)).unwrap_err();
    assert!(
        matches!(err, Error::Validation(ref m) if m.contains("symmetric")),
        "{err}"
    );
}

#[test]
fn empty_source_list_is_rejected() {
    let err = edit(|v| v["sources"] = serde_json::json!([])).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

#[test]
fn malformed_file_is_a_parse_error() {
    assert!(matches!(parse_scenario("{ nodes: "), Err(Error::Parse(_))));
    let err = edit(|v| v["bogus"] = serde_json::json!(1)).unwrap_err();
    assert!(matches!(err, Error::Parse(_)), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_scenario("/nonexistent/scenario.json"), Err(Error::Io(_))));
}

#[test]
fn unknown_host_is_rejected() {
    let err = edit(|v| v["sources"][0]["host"] = serde_json::json!("Z9")).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

fn chain_flows(x: f64, q: &[f64]) -> Vec<f64> {
    let spec: Vec<(f64, f64)> = q.iter().map(|&q| (1.0, q)).collect();
    let s = scenario(
        &spec,
        vec![node("a", 1.0, 0.0, 0.0, 0.0, q.len())],
        mesh(1, 1.0),
        &[(x.max(1.0), 0)],
        k_fixed(1.0),
    );
    compute_flows(&InstanceTree::cut(&[0], 0, q.len()), &[x], &s)
}

#[test]
fn flows_scale_along_a_chain() {
    assert_eq!(chain_flows(10.0, &[0.5, 2.0, 1.0]), vec![10.0, 5.0, 10.0]);
}

#[test]
fn merging_sources_sum_before_scaling() {
    let s = scenario(
        &[(1.0, 0.5), (1.0, 1.0)],
        vec![node("a", 1.0, 0.0, 0.0, 0.0, 2)],
        mesh(1, 1.0),
        &[(4.0, 0), (6.0, 0)],
        k_fixed(1.0),
    );
    let tree = InstanceTree::cut(&[0, 1], 0, 2);
    let flows = compute_flows(&tree, &[4.0, 6.0], &s);
    let out = tree
        .edges
        .iter()
        .position(|e| matches!(e.child, righttrain::model::Endpoint::Instance(0)))
        .unwrap();
    assert_eq!(flows[out], 5.0);
}

#[test]
fn zero_data_gives_zero_flows() {
    assert!(chain_flows(0.0, &[0.5, 2.0]).iter().all(|&f| f == 0.0));
}

fn two_node_fixture() -> righttrain::model::Scenario {
    let mut nodes = vec![node("a", 10.0, 0.1, 1.0, 0.1, 2), node("b", 10.0, 0.1, 1.0, 0.1, 2)];
    nodes[1].mu[0] = false;
    scenario(
        &[(1.0, 1.0), (1.0, 1.0)],
        nodes,
        mesh(2, 100.0),
        &[(5.0, 0)],
        k_fixed(1.0),
    )
}

#[test]
fn capacity_excess_names_the_node() {
    let s = two_node_fixture();
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 2), vec![0, 0], vec![5.0, 6.0], vec![5.0]);
    let report = check_constraints(&sol, &s);
    let v: Vec<_> = report.violations_of(Rule::Capacity).collect();
    assert_eq!(v.len(), 1, "{report}");
    assert!(v[0].entity.contains('a'));
    assert!((v[0].slack + 1.0).abs() < 1e-12);
}

#[test]
fn memory_violation_is_reported() {
    let s = two_node_fixture();
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 2), vec![1, 1], vec![5.0, 5.0], vec![5.0]);
    let report = check_constraints(&sol, &s);
    assert_eq!(report.violations_of(Rule::Memory).count(), 1, "{report}");
    assert!(!report.passed());
}

#[test]
fn data_above_volume_is_reported() {
    let s = two_node_fixture();
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 2), vec![0, 0], vec![5.0, 5.0], vec![6.0]);
    let report = check_constraints(&sol, &s);
    assert_eq!(report.violations_of(Rule::DataBounds).count(), 1, "{report}");
}

#[test]
fn link_overload_is_reported() {
    let mut s = two_node_fixture();
    s.links[0][1] = 1.0;
    s.links[1][0] = 1.0;
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 2), vec![0, 1], vec![5.0, 5.0], vec![5.0]);
    let report = check_constraints(&sol, &s);
    assert_eq!(report.violations_of(Rule::Bandwidth).count(), 1, "{report}");
}

#[test]
fn feasible_fixture_passes_every_rule() {
    let s = two_node_fixture();
    let sol = solution(
        &s,
        InstanceTree::cut(&[0], 0, 2),
        vec![0, 1],
        vec![10.0, 10.0],
        vec![5.0],
    );
    let report = check_constraints(&sol, &s);
    assert!(report.passed(), "{report}");
    assert_eq!(report.rules.len(), Rule::ALL.len());
}

fn enum_scenario(sources: usize, layers: usize) -> righttrain::model::Scenario {
    let spec = vec![(1.0, 1.0); layers];
    let vols: Vec<(f64, usize)> = (0..sources).map(|d| (10.0 + d as f64, 0)).collect();
    scenario(
        &spec,
        vec![node("a", 1.0, 0.0, 0.0, 0.0, layers)],
        mesh(1, 1.0),
        &vols,
        k_fixed(1.0),
    )
}

#[test]
fn single_source_yields_the_chain_only() {
    let trees = enumerate_instance_trees(&enum_scenario(1, 3)).unwrap();
    assert_eq!(trees, vec![InstanceTree::cut(&[0], 0, 3)]);
}

/// Every subset and depth, deduplicated by the shape it produces.
fn naive_trees(sources: usize, layers: usize) -> BTreeSet<(Vec<usize>, usize)> {
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << sources) {
        let subset: Vec<usize> = (0..sources).filter(|d| mask & (1 << d) != 0).collect();
        for depth in 0..layers {
            let eff = if subset.len() == 1 { 0 } else { depth };
            out.insert((subset.clone(), eff));
        }
    }
    out
}

#[test]
fn two_sources_three_layers_give_five_trees() {
    let trees = enumerate_instance_trees(&enum_scenario(2, 3)).unwrap();
    assert_eq!(trees.len(), 5);
    let got: BTreeSet<_> = trees
        .iter()
        .map(|t| (t.used_sources.clone(), t.replication_depth()))
        .collect();
    assert_eq!(got, naive_trees(2, 3));
}

#[test]
fn enumeration_matches_naive_generator() {
    for (m, l) in [(3, 2), (3, 4), (4, 3), (5, 2)] {
        let s = enum_scenario(m, l);
        let trees = enumerate_instance_trees(&s).unwrap();
        assert_eq!(trees.len(), naive_trees(m, l).len(), "|D|={m} L={l}");
        for t in &trees {
            t.validate(&s).unwrap();
        }
    }
}

#[test]
fn capped_small_preset_stays_within_bound() {
    let mut s = gen_scenario("small", 42).unwrap();
    s.trees.subset_cap = 15;
    s.trees.max_depth = None;
    let trees = enumerate_instance_trees(&s).unwrap();
    assert!(trees.len() <= 15 * s.num_layers());
    assert!(!trees.is_empty());
}

#[test]
fn cap_without_truncation_is_an_error() {
    let mut s = enum_scenario(7, 2);
    s.trees.subset_cap = 10;
    s.trees.truncate = false;
    assert!(matches!(enumerate_instance_trees(&s), Err(Error::CapExceeded { .. })));
}

#[test]
fn largest_subsets_match_sorted_enumeration() {
    let vols = [5.0, 1.0, 3.0, 2.5, 4.0];
    let fast = largest_subsets(&vols, 12);
    let mut all: Vec<(f64, Vec<usize>)> = (1u32..32)
        .map(|mask| {
            let s: Vec<usize> = (0..5).filter(|d| mask & (1 << d) != 0).collect();
            (s.iter().map(|&d| vols[d]).sum(), s)
        })
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sums: Vec<f64> = fast.iter().map(|s| s.iter().map(|&d| vols[d]).sum()).collect();
    let expect: Vec<f64> = all.iter().take(12).map(|a| a.0).collect();
    assert_eq!(sums, expect);
}

#[test]
fn custom_trees_are_appended() {
    let mut s = enum_scenario(2, 3);
    s.trees.max_depth = Some(0);
    let custom = InstanceTree::cut(&[0, 1], 2, 3);
    s.trees.custom = vec![custom.clone()];
    let trees = enumerate_instance_trees(&s).unwrap();
    assert_eq!(trees.last(), Some(&custom));
    assert_eq!(trees.len(), 4);
}

proptest! {
    #[test]
    fn enumerated_trees_are_valid(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        for t in enumerate_instance_trees(&s).unwrap() {
            prop_assert!(t.validate(&s).is_ok());
        }
    }

    #[test]
    fn flows_are_monotone_in_source_data(seed in 0u64..10_000, d in 0usize..3, bump in 0.0f64..50.0) {
        let s = random_scenario(seed);
        let trees = enumerate_instance_trees(&s).unwrap();
        let tree = &trees[0];
        let d = tree.used_sources[d % tree.used_sources.len()];
        let x: Vec<f64> = s.sources.iter().map(|src| src.volume * 0.5).collect();
        let mut more = x.clone();
        more[d] += bump;
        let a = compute_flows(tree, &x, &s);
        let b = compute_flows(tree, &more, &s);
        for (fa, fb) in a.iter().zip(&b) {
            prop_assert!(fb >= fa);
        }
    }
}
