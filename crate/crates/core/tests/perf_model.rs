mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use righttrain::harness::{gen_scenario, ordered_trees, random_scenario};
use righttrain::model::{check_constraints, enumerate_instance_trees, Endpoint, InstanceTree};
use righttrain::perf::{
    epoch_metrics, epochs_needed, instance_compute_time, link_transfer_time, processing_load, KModelParams, PHI_MIN,
};
use righttrain::Error;

#[test]
fn compute_time_is_load_over_share() {
    assert_eq!(instance_compute_time(10.0, 4.0, 20.0, 0).unwrap(), 2.0);
    assert_eq!(instance_compute_time(10.0, 0.0, 20.0, 0).unwrap(), 0.0);
    assert_eq!(instance_compute_time(6.771, 1.0, 6.771, 0).unwrap(), 1.0);
}

#[test]
fn zero_share_is_an_error() {
    assert!(matches!(
        instance_compute_time(1.0, 1.0, 0.0, 3),
        Err(Error::ZeroAllocation { instance: 3 })
    ));
}

#[test]
fn transfer_time_divides_flow_by_rate() {
    let mut s = scenario(
        &[(1.0, 1.0)],
        vec![node("a", 1.0, 0.0, 0.0, 0.0, 1), node("b", 1.0, 0.0, 0.0, 0.0, 1)],
        mesh(2, 4.0),
        &[(1.0, 0)],
        k_fixed(1.0),
    );
    let mut flows = BTreeMap::new();
    flows.insert((0, 1), 8.0);
    assert_eq!(link_transfer_time(0, 1, &flows, &s).unwrap(), 2.0);
    assert_eq!(link_transfer_time(0, 0, &flows, &s).unwrap(), 0.0);
    assert_eq!(link_transfer_time(1, 0, &flows, &s).unwrap(), 0.0);
    s.links[0][1] = 0.0;
    s.links[1][0] = 0.0;
    flows.insert((0, 1), 1.0);
    assert!(matches!(
        link_transfer_time(0, 1, &flows, &s),
        Err(Error::NoLink { .. })
    ));
}

/// Source on `a`, layer 1 on `a`, layer 2 on `b`, 1 Mbit through a 2 Mbit/s link.
fn two_node_chain(e_p: f64, e_f: f64, e_net: f64) -> (righttrain::model::Scenario, righttrain::model::Solution) {
    let s = scenario(
        &[(1.0, 1.0), (1.0, 1.0)],
        vec![node("a", 4.0, e_p, e_f, e_net, 2), node("b", 4.0, e_p, e_f, e_net, 2)],
        mesh(2, 2.0),
        &[(1.0, 0)],
        k_fixed(10.0),
    );
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 2), vec![0, 1], vec![1.0, 1.0], vec![1.0]);
    (s, sol)
}

#[test]
fn chain_time_adds_compute_and_transfer() {
    let (s, sol) = two_node_chain(0.0, 0.0, 0.0);
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    assert_eq!(m.t_comp, vec![1.0, 1.0]);
    assert_eq!(m.t_net[&(0, 1)], 0.5);
    assert_eq!(m.t_begin, vec![0.0, 1.5]);
    assert_eq!(m.epoch_time, 2.5);
}

#[test]
fn parent_waits_for_slowest_child() {
    let nodes = vec![
        node("a", 10.0, 0.0, 0.0, 0.0, 2),
        node("b", 10.0, 0.0, 0.0, 0.0, 2),
        node("c", 10.0, 0.0, 0.0, 0.0, 2),
    ];
    let mut links = mesh(3, 1.0);
    links[0][2] = 2.0;
    links[2][0] = 2.0;
    links[1][2] = 4.0;
    links[2][1] = 4.0;
    let s = scenario(
        &[(1.0, 1.0), (1.0, 1.0)],
        nodes,
        links,
        &[(2.0, 0), (4.0, 1)],
        k_fixed(1.0),
    );
    let tree = InstanceTree::cut(&[0, 1], 1, 2);
    let sol = solution(&s, tree, vec![0, 1, 2], vec![1.0, 1.0, 6.0], vec![2.0, 4.0]);
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    assert_eq!(m.t_end[0] + m.t_net[&(0, 2)], 3.0);
    assert_eq!(m.t_end[1] + m.t_net[&(1, 2)], 5.0);
    assert_eq!(m.t_comp[2], 1.0);
    assert_eq!(m.epoch_time, 6.0);
}

#[test]
fn zero_data_takes_no_time_or_energy() {
    let (s, mut sol) = two_node_chain(0.2, 1.0, 0.5);
    sol.allocation.x = vec![0.0];
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    assert_eq!(m.epoch_time, 0.0);
    assert_eq!(m.epoch_energy, 0.0);
}

#[test]
fn compute_energy_prices_share_and_fixed_power() {
    let s = scenario(
        &[(1.0, 1.0)],
        vec![node("a", 5.0, 3.0, 1.0, 0.7, 1)],
        mesh(1, 1.0),
        &[(10.0, 0)],
        k_fixed(10.0),
    );
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 1), vec![0], vec![5.0], vec![10.0]);
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    assert_eq!(m.t_comp[0], 2.0);
    assert_eq!(m.e_comp[0], 32.0);
    assert_eq!(m.e_net[0], 0.0);
    assert_eq!(m.epoch_energy, 32.0);
    assert_eq!(sol.metrics.epochs, 10);
    assert_eq!(sol.metrics.objective, 320.0);
    assert_eq!(sol.metrics.total_time, 20.0);
}

#[test]
fn transmit_energy_prices_outgoing_flow() {
    let s = scenario(
        &[(1.0, 1.0), (1.0, 1.0)],
        vec![node("a", 10.0, 0.0, 0.0, 0.5, 2), node("b", 10.0, 0.0, 0.0, 0.5, 2)],
        mesh(2, 10.0),
        &[(10.0, 0)],
        k_fixed(1.0),
    );
    let sol = solution(
        &s,
        InstanceTree::cut(&[0], 0, 2),
        vec![0, 1],
        vec![10.0, 10.0],
        vec![10.0],
    );
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    assert_eq!(m.e_net, vec![5.0, 0.0]);
    let colocated = solution(
        &s,
        InstanceTree::cut(&[0], 0, 2),
        vec![0, 0],
        vec![5.0, 5.0],
        vec![10.0],
    );
    let m = epoch_metrics(&colocated.tree, &colocated.deployment, &colocated.allocation, &s).unwrap();
    assert_eq!(m.e_net, vec![0.0, 0.0]);
}

#[test]
fn uplink_energy_counts_when_first_layer_is_remote() {
    let s = scenario(
        &[(1.0, 1.0)],
        vec![node("a", 10.0, 0.0, 0.0, 0.25, 1), node("b", 10.0, 0.0, 0.0, 0.5, 1)],
        mesh(2, 10.0),
        &[(8.0, 0)],
        k_fixed(1.0),
    );
    let sol = solution(&s, InstanceTree::cut(&[0], 0, 1), vec![1], vec![10.0], vec![8.0]);
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    assert_eq!(m.e_uplink, vec![2.0]);
    assert_eq!(m.epoch_energy, 2.0);
}

#[test]
fn processing_load_weights_operations_by_epochs() {
    let s = scenario(
        &[(2.0, 0.5), (4.0, 1.0)],
        vec![node("a", 1.0, 0.0, 0.0, 0.0, 2)],
        mesh(1, 1.0),
        &[(10.0, 0)],
        k_fixed(3.0),
    );
    assert_eq!(processing_load(&InstanceTree::cut(&[0], 0, 2), &s, &s.k_model), 120.0);
    let s = scenario(
        &[(1.0, 1.0)],
        vec![node("a", 1.0, 0.0, 0.0, 0.0, 1)],
        mesh(1, 1.0),
        &[(7.0, 0)],
        k_fixed(1.0),
    );
    assert_eq!(processing_load(&InstanceTree::cut(&[0], 0, 1), &s, &s.k_model), 7.0);
}

/// Walks each source's path to the root and sums the products independently.
fn naive_load(tree: &InstanceTree, s: &righttrain::model::Scenario) -> f64 {
    let parent_of = |child: Endpoint| tree.edges.iter().find(|e| e.child == child).map(|e| e.parent);
    let mut ops = 0.0;
    for &d in &tree.used_sources {
        let mut data = s.sources[d].volume;
        let mut at = parent_of(Endpoint::Source(d));
        while let Some(i) = at {
            let layer = &s.layers[tree.instances[i].layer];
            ops += layer.compute_req * data;
            data *= layer.data_ratio;
            at = parent_of(Endpoint::Instance(i));
        }
    }
    let k = s.k_model.raw(tree.num_instances(), s.num_layers(), 1.0).ceil();
    k * ops
}

#[test]
fn preset_tree_order_matches_naive_load() {
    let s = gen_scenario("small", 42).unwrap();
    let ranked = ordered_trees(&s).unwrap();
    for (tree, load) in &ranked {
        assert!(rel_close(*load, naive_load(tree, &s), 1e-12));
    }
    for w in ranked.windows(2) {
        assert!(naive_load(&w[0].0, &s) <= naive_load(&w[1].0, &s) * (1.0 + 1e-12));
    }
}

fn k(k0: f64, kappa_d: f64, kappa_i: f64) -> KModelParams {
    KModelParams {
        k0,
        kappa_d,
        kappa_i,
        eps_max: 0.1,
    }
}

#[test]
fn epochs_follow_the_parametric_form() {
    let chain = InstanceTree::cut(&[0], 0, 2);
    assert_eq!(epochs_needed(&chain, 2, 1.0, &k(10.0, 8.0, 0.15)).unwrap(), 10);
    assert_eq!(
        epochs_needed(&chain, 2, (-1.0f64).exp(), &k(10.0, 5.0, 0.0)).unwrap(),
        15
    );
    let wide = InstanceTree::cut(&[0, 1, 2], 1, 2);
    assert_eq!(wide.num_instances(), 4);
    assert_eq!(
        epochs_needed(&wide, 2, (-1.0f64).exp(), &k(10.0, 5.0, 0.2)).unwrap(),
        21
    );
}

#[test]
fn fraction_below_floor_is_a_domain_error() {
    let chain = InstanceTree::cut(&[0], 0, 2);
    assert!(matches!(
        epochs_needed(&chain, 2, PHI_MIN / 2.0, &KModelParams::default()),
        Err(Error::Domain { .. })
    ));
    assert!(epochs_needed(&chain, 2, PHI_MIN, &KModelParams::default()).is_ok());
}

#[test]
fn zero_data_allocation_evaluates_to_zero_but_fails_the_floor() {
    let (s, mut sol) = two_node_chain(0.2, 1.0, 0.5);
    sol.allocation.x = vec![0.0];
    let sol = righttrain::perf::reevaluate(&sol, &s).unwrap();
    assert_eq!(sol.metrics.objective, 0.0);
    assert!(!check_constraints(&sol, &s).passed());
}

#[test]
fn objective_is_epochs_times_energy() {
    for seed in 0..20 {
        let s = random_scenario(seed);
        let tree = enumerate_instance_trees(&s).unwrap().remove(0);
        let mapping: Vec<usize> = tree
            .instances
            .iter()
            .map(|i| (0..s.nodes.len()).find(|&n| s.hosts(i.layer, n)).unwrap())
            .collect();
        let deployment = righttrain::model::Deployment { mapping };
        let alloc = righttrain::model::full_allocation(&tree, &deployment, &s);
        let Ok(sol) = righttrain::perf::evaluate(tree, deployment, alloc, &s) else {
            continue;
        };
        assert_eq!(
            sol.metrics.objective,
            sol.metrics.epochs as f64 * sol.metrics.epoch_energy
        );
        assert_eq!(
            sol.metrics.total_time,
            sol.metrics.epochs as f64 * sol.metrics.epoch_time
        );
    }
}

#[test]
fn chain_time_is_sum_of_parts() {
    let s = scenario(
        &[(3.0, 0.5), (2.0, 2.0), (5.0, 1.0)],
        vec![
            node("a", 7.0, 0.0, 0.0, 0.0, 3),
            node("b", 11.0, 0.0, 0.0, 0.0, 3),
            node("c", 13.0, 0.0, 0.0, 0.0, 3),
        ],
        mesh(3, 3.0),
        &[(6.0, 2)],
        k_fixed(1.0),
    );
    let sol = solution(
        &s,
        InstanceTree::cut(&[0], 0, 3),
        vec![0, 1, 2],
        vec![7.0, 11.0, 13.0],
        vec![6.0],
    );
    let m = epoch_metrics(&sol.tree, &sol.deployment, &sol.allocation, &s).unwrap();
    let expect = 6.0 / 3.0 + 3.0 * 6.0 / 7.0 + 3.0 / 3.0 + 2.0 * 3.0 / 11.0 + 6.0 / 3.0 + 5.0 * 6.0 / 13.0;
    assert!(rel_close(m.epoch_time, expect, 1e-15));
}

proptest! {
    #[test]
    fn epochs_fall_with_data_and_rise_with_instances(
        k0 in 1.0f64..50.0, kd in 0.0f64..20.0, ki in 0.0f64..1.0,
        p1 in 0.01f64..=1.0, p2 in 0.01f64..=1.0, extra in 0usize..6,
    ) {
        let params = k(k0, kd, ki);
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(params.raw(4 + extra, 4, hi) <= params.raw(4 + extra, 4, lo));
        prop_assert!(params.raw(4 + extra, 4, lo) <= params.raw(5 + extra, 4, lo));
    }

    #[test]
    fn doubling_data_doubles_energy(seed in 0u64..5000) {
        let s = random_scenario(seed);
        let mut big = s.clone();
        for src in &mut big.sources {
            src.volume *= 2.0;
        }
        let tree = enumerate_instance_trees(&s).unwrap().remove(0);
        let mapping: Vec<usize> = tree
            .instances
            .iter()
            .map(|i| (0..s.nodes.len()).find(|&n| s.hosts(i.layer, n)).unwrap())
            .collect();
        let rho: Vec<f64> = mapping.iter().map(|&n| s.nodes[n].capacity / tree.num_instances() as f64).collect();
        let x: Vec<f64> = s.sources.iter().map(|d| d.volume).collect();
        let x2: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let dep = righttrain::model::Deployment { mapping };
        let a = righttrain::model::Allocation { rho: rho.clone(), x };
        let b = righttrain::model::Allocation { rho, x: x2 };
        let (Ok(m1), Ok(m2)) = (epoch_metrics(&tree, &dep, &a, &s), epoch_metrics(&tree, &dep, &b, &big)) else {
            return Ok(());
        };
        prop_assert!(rel_close(m2.epoch_energy, 2.0 * m1.epoch_energy, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compute_time_is_midpoint_convex_in_share(r in 0.1f64..100.0, chi in 0.0f64..100.0, a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let t = |rho: f64| instance_compute_time(r, chi, rho, 0).unwrap();
        prop_assert!(t(0.5 * (a + b)) <= 0.5 * (t(a) + t(b)) * (1.0 + 1e-12) + 1e-12);
    }
}
