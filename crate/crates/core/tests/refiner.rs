mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use righttrain::baselines::evaluate_placement;
use righttrain::harness::{gen_scenario, ordered_trees, random_scenario};
use righttrain::mapper::{build_expanded_graph, da_steiner_tree};
use righttrain::model::{
    check_constraints, compute_flows, enumerate_instance_trees, full_allocation, incoming_flows, Allocation,
    InstanceTree, Scenario, Solution,
};
use righttrain::perf::{self, ceil_epochs, KModelParams, PHI_MIN};
use righttrain::refiner::{refine, Frame, RefineConfig};
use righttrain::Error;

fn one_node(k_model: KModelParams) -> (Scenario, Solution) {
    let s = scenario(
        &[(2.0, 0.5), (3.0, 1.0)],
        vec![node("a", 100.0, 0.01, 2.0, 0.0, 2)],
        mesh(1, 1.0),
        &[(20.0, 0)],
        k_model,
    );
    let tree = InstanceTree::cut(&[0], 0, 2);
    let sol = evaluate_placement(&s, &tree, vec![0, 0], f64::INFINITY).unwrap();
    (s, sol)
}

fn unrounded(sol: &Solution) -> f64 {
    sol.metrics.epochs_raw * sol.metrics.epoch_energy
}

#[test]
fn binding_deadline_leaves_solution_unchanged() {
    let (s, sol) = one_node(KModelParams {
        k0: 1.0,
        kappa_d: 30.0,
        kappa_i: 0.0,
        eps_max: 0.1,
    });
    let out = refine(&sol, &s, sol.metrics.total_time, &RefineConfig::default()).unwrap();
    assert!(!out.improved);
    assert!(rel_close(out.solution.metrics.objective, sol.metrics.objective, 1e-6));
    assert_eq!(out.solution.allocation, sol.allocation);
}

#[test]
fn free_data_reduction_goes_to_the_floor() {
    let (s, sol) = one_node(k_fixed(10.0));
    let out = refine(&sol, &s, f64::INFINITY, &RefineConfig::default()).unwrap();
    assert!(out.improved);
    assert!(out.solution.metrics.objective < sol.metrics.objective);
    assert!(rel_close(out.solution.allocation.x[0], PHI_MIN * 20.0, 1e-6));
}

#[test]
fn share_gradient_without_proportional_power() {
    let (s, sol) = one_node(k_fixed(4.0));
    let mut s = s;
    s.nodes[0].e_p = 0.0;
    let frame = Frame::new(&sol, &s, &RefineConfig::default());
    let v: Vec<f64> = vec![20.0, 50.0, 30.0];
    let (_, g) = frame.objective_and_gradient(&v).unwrap();
    // instance 0 sees 20 Mbit at r = 2, instance 1 sees 10 Mbit at r = 3
    assert!(rel_close(g[1], -4.0 * 2.0 * 2.0 * 20.0 / (50.0 * 50.0), 1e-12));
    assert!(rel_close(g[2], -4.0 * 2.0 * 3.0 * 10.0 / (30.0 * 30.0), 1e-12));
    assert!(g[1] < 0.0 && g[2] < 0.0);
}

#[test]
fn data_gradient_at_full_data() {
    let s = scenario(
        &[(2.0, 1.0)],
        vec![node("a", 100.0, 0.01, 2.0, 0.0, 1)],
        mesh(1, 1.0),
        &[(20.0, 0)],
        KModelParams {
            k0: 10.0,
            kappa_d: 8.0,
            kappa_i: 0.0,
            eps_max: 0.1,
        },
    );
    let sol = evaluate_placement(&s, &InstanceTree::cut(&[0], 0, 1), vec![0], f64::INFINITY).unwrap();
    let frame = Frame::new(&sol, &s, &RefineConfig::default());
    let rho = sol.allocation.rho[0];
    let v = vec![20.0, rho];
    let (value, g) = frame.objective_and_gradient(&v).unwrap();
    let de_dx = 2.0 * (0.01 + 2.0 / rho);
    let energy = value / 10.0;
    let dk_dx = (g[0] - 10.0 * de_dx) / energy;
    assert!(rel_close(dk_dx, -8.0 / 20.0, 1e-12));
    assert!(rel_close(s.k_model.raw_dphi(1, 1, 1.0) / 20.0, -8.0 / 20.0, 1e-15));
}

#[test]
fn out_of_bounds_point_is_a_domain_error() {
    let (s, sol) = one_node(KModelParams::default());
    let frame = Frame::new(&sol, &s, &RefineConfig::default());
    let mut v = frame.upper();
    v[0] = 20.0 * PHI_MIN * 0.5;
    assert!(matches!(frame.objective_and_gradient(&v), Err(Error::Domain { .. })));
    v[0] = 21.0;
    assert!(frame.objective_and_gradient(&v).is_err());
}

/// A full-data solution for a random scenario, or `None` if its first tree
/// has nowhere to go.
fn random_full(seed: u64) -> Option<(Scenario, Solution)> {
    let mut s = random_scenario(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    s.k_model.kappa_d = rng.gen_range(0.0..20.0);
    s.k_model.kappa_i = rng.gen_range(0.0..0.5);
    let trees = enumerate_instance_trees(&s).ok()?;
    let tree = trees[seed as usize % trees.len()].clone();
    let mapping: Vec<usize> = tree
        .instances
        .iter()
        .map(|i| {
            let ok: Vec<usize> = (0..s.nodes.len()).filter(|&n| s.hosts(i.layer, n)).collect();
            ok[rng.gen_range(0..ok.len())]
        })
        .collect();
    let sol = evaluate_placement(&s, &tree, mapping, f64::INFINITY)?;
    Some((s, sol))
}

#[test]
fn gradient_matches_central_differences() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 500 {
        seed += 1;
        let Some((s, sol)) = random_full(seed) else { continue };
        let frame = Frame::new(&sol, &s, &RefineConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (frame.lower(), frame.upper());
        let v: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| l + (h - l) * rng.gen_range(0.05..0.95))
            .collect();
        let (_, g) = frame.objective_and_gradient(&v).unwrap();
        let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for j in 0..v.len() {
            let h = 1e-6 * hi[j];
            let (mut up, mut down) = (v.clone(), v.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (frame.point(&up).objective - frame.point(&down).objective) / (2.0 * h);
            let err = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-8 * scale);
            assert!(err <= 1e-4, "seed {seed} var {j}: {} vs {fd}", g[j]);
        }
        checked += 1;
    }
}

fn assert_monotone(trace: &[Vec<f64>]) {
    for stage in trace {
        for w in stage.windows(2) {
            assert!(w[1] <= w[0], "penalized objective rose from {} to {}", w[0], w[1]);
        }
    }
}

#[test]
fn refine_improves_monotonically_and_stays_feasible() {
    let mut done = 0;
    let mut seed = 0;
    while done < 100 {
        seed += 1;
        let Some((s, sol)) = random_full(seed) else { continue };
        for slack in [1.0, 1.5, 4.0] {
            let t_max = sol.metrics.total_time * slack;
            let out = refine(&sol, &s, t_max, &RefineConfig::default()).unwrap();
            assert_monotone(&out.trace);
            let r = &out.solution;
            assert!(unrounded(r) <= unrounded(&sol) * (1.0 + 1e-12), "seed {seed}");
            assert!(
                r.meets_deadline(t_max),
                "seed {seed}: {} > {t_max}",
                r.metrics.total_time
            );
            let report = check_constraints(r, &s);
            assert!(report.passed(), "seed {seed}: {report}");
        }
        done += 1;
    }
}

#[test]
fn refining_twice_changes_nothing() {
    let mut done = 0;
    let mut seed = 0;
    while done < 40 {
        seed += 1;
        let Some((s, sol)) = random_full(seed) else { continue };
        let t_max = sol.metrics.total_time * 2.0;
        let once = refine(&sol, &s, t_max, &RefineConfig::default()).unwrap().solution;
        let twice = refine(&once, &s, t_max, &RefineConfig::default()).unwrap().solution;
        assert!(unrounded(&twice) >= unrounded(&once) * (1.0 - 1e-6), "seed {seed}");
        done += 1;
    }
}

/// Best feasible unrounded objective over a grid of one data fraction for
/// every source and one scale for every compute share.
fn grid_search(sol: &Solution, s: &Scenario, t_max: f64) -> f64 {
    let full = full_allocation(&sol.tree, &sol.deployment, s);
    let mut best = f64::INFINITY;
    for i in 0..200 {
        let phi = PHI_MIN + (1.0 - PHI_MIN) * i as f64 / 199.0;
        for j in 0..200 {
            let scale = (j + 1) as f64 / 200.0;
            let x: Vec<f64> = full.x.iter().map(|v| v * phi).collect();
            let rho: Vec<f64> = full.rho.iter().map(|r| r * scale).collect();
            let cand = perf::evaluate(sol.tree.clone(), sol.deployment.clone(), Allocation { rho, x }, s).unwrap();
            if cand.meets_deadline(t_max) {
                best = best.min(unrounded(&cand));
            }
        }
    }
    best
}

#[test]
fn preset_refinement_tracks_grid_search() {
    let s = gen_scenario("small", 42).unwrap();
    let (tree, _) = ordered_trees(&s).unwrap().remove(0);
    let k = ceil_epochs(s.k_model.raw(tree.num_instances(), s.num_layers(), 1.0));
    let g = build_expanded_graph(&tree, &s, k).unwrap();
    for t_max in [4.0, 8.0, 20.0] {
        let st = da_steiner_tree(&g, &s, &tree, t_max, 0.1).unwrap();
        let full = evaluate_placement(&s, &tree, st.deployment.mapping, t_max).unwrap();
        let out = refine(&full, &s, t_max, &RefineConfig::default()).unwrap();
        let refined = unrounded(&out.solution);
        assert!(refined <= unrounded(&full));
        let grid = grid_search(&full, &s, t_max);
        assert!(
            (refined - grid).abs() <= 0.02 * grid,
            "t_max {t_max}: refined {refined}, grid {grid}"
        );
    }
}

#[test]
fn flows_follow_refined_data() {
    let (s, sol) = one_node(k_fixed(10.0));
    let out = refine(&sol, &s, f64::INFINITY, &RefineConfig::default())
        .unwrap()
        .solution;
    let flows = compute_flows(&out.tree, &out.allocation.x, &s);
    let incoming = incoming_flows(&out.tree, &flows);
    assert!(rel_close(incoming[1], 0.5 * out.allocation.x[0], 1e-12));
}
