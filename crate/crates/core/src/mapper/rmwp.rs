//! Minimum-weight paths under an additive delay bound on DAGs.

use crate::error::{Error, Result};

/// A DAG whose edges always go from a lower to a higher vertex id.
pub trait PathGraph {
    fn vertex_count(&self) -> usize;
    fn out_edges(&self, v: usize) -> &[usize];
    /// Head, weight and delay of edge `e`.
    fn edge(&self, e: usize) -> (usize, f64, f64);
}

/// Plain adjacency-list DAG.
#[derive(Debug, Clone, Default)]
pub struct Dag {
    out: Vec<Vec<usize>>,
    edges: Vec<(usize, usize, f64, f64)>,
}

impl Dag {
    pub fn new(vertices: usize) -> Dag {
        Dag {
            out: vec![Vec::new(); vertices],
            edges: Vec::new(),
        }
    }

    /// Adds `from -> to`. Panics unless `from < to`.
    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64, delay: f64) -> usize {
        assert!(from < to, "edges must increase the vertex id");
        self.out[from].push(self.edges.len());
        self.edges.push((from, to, weight, delay));
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[(usize, usize, f64, f64)] {
        &self.edges
    }
}

impl PathGraph for Dag {
    fn vertex_count(&self) -> usize {
        self.out.len()
    }

    fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    fn edge(&self, e: usize) -> (usize, f64, f64) {
        let (_, to, w, d) = self.edges[e];
        (to, w, d)
    }
}

#[derive(Debug, Clone)]
pub struct PathQuery<'a> {
    pub from: usize,
    /// Where a path may end. Paths stop at the first target they reach.
    pub targets: &'a [bool],
    pub bound: f64,
    pub eps: f64,
    pub vertex_ok: Option<&'a [bool]>,
    pub edge_ok: Option<&'a [bool]>,
}

impl<'a> PathQuery<'a> {
    pub fn new(from: usize, targets: &'a [bool], bound: f64, eps: f64) -> Self {
        PathQuery {
            from,
            targets,
            bound,
            eps,
            vertex_ok: None,
            edge_ok: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub weight: f64,
    pub delay: f64,
    /// Vertices from the query origin to the reached target.
    pub path: Vec<usize>,
    pub edges: Vec<usize>,
}

/// Sub-DAG reachable from the origin under the query masks.
struct Reach {
    /// Reachable vertices in increasing id order.
    order: Vec<usize>,
    /// Usable edges out of each reachable vertex, as (edge, head slot).
    out: Vec<Vec<(usize, usize, f64, f64)>>,
    targets: Vec<usize>,
}

fn reach<G: PathGraph + ?Sized>(g: &G, q: &PathQuery) -> Reach {
    let n = g.vertex_count();
    let vertex_ok = |v: usize| q.vertex_ok.is_none_or(|m| m[v]);
    let edge_ok = |e: usize| q.edge_ok.is_none_or(|m| m[e]);
    let mut seen = vec![false; n];
    seen[q.from] = true;
    let mut order = Vec::new();
    for v in q.from..n {
        if !seen[v] {
            continue;
        }
        order.push(v);
        if q.targets[v] && v != q.from {
            continue;
        }
        for &e in g.out_edges(v) {
            let (to, _, _) = g.edge(e);
            debug_assert!(to > v, "edge {e} does not increase the vertex id");
            if edge_ok(e) && vertex_ok(to) {
                seen[to] = true;
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        slot[v] = i;
    }
    let mut out = vec![Vec::new(); order.len()];
    let mut targets = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        if q.targets[v] && v != q.from {
            targets.push(i);
            continue;
        }
        for &e in g.out_edges(v) {
            let (to, w, d) = g.edge(e);
            if edge_ok(e) && vertex_ok(to) {
                out[i].push((e, slot[to], w, d));
            }
        }
    }
    Reach { order, out, targets }
}

/// Best path under a lexicographic key, as per-slot (key, predecessor edge, predecessor slot).
fn lexicographic(r: &Reach, primary_is_weight: bool) -> Vec<(f64, f64, usize, usize)> {
    let mut best = vec![(f64::INFINITY, f64::INFINITY, usize::MAX, usize::MAX); r.order.len()];
    best[0] = (0.0, 0.0, usize::MAX, usize::MAX);
    for i in 0..r.order.len() {
        let (a, b, _, _) = best[i];
        if !a.is_finite() {
            continue;
        }
        for &(e, j, w, d) in &r.out[i] {
            let (na, nb) = if primary_is_weight {
                (a + w, b + d)
            } else {
                (a + d, b + w)
            };
            let cur = best[j];
            if na < cur.0 || (na == cur.0 && nb < cur.1) {
                best[j] = (na, nb, e, i);
            }
        }
    }
    best
}

fn trace(r: &Reach, mut slot: usize, pred: impl Fn(usize) -> (usize, usize)) -> (Vec<usize>, Vec<usize>) {
    let mut path = vec![r.order[slot]];
    let mut edges = Vec::new();
    while slot != 0 {
        let (e, p) = pred(slot);
        edges.push(e);
        path.push(r.order[p]);
        slot = p;
    }
    path.reverse();
    edges.reverse();
    (path, edges)
}

fn result<G: PathGraph + ?Sized>(g: &G, path: Vec<usize>, edges: Vec<usize>) -> PathResult {
    let (weight, delay) = edges.iter().fold((0.0, 0.0), |(w, d), &e| {
        let (_, ew, ed) = g.edge(e);
        (w + ew, d + ed)
    });
    PathResult {
        weight,
        delay,
        path,
        edges,
    }
}

/// Picks the target minimizing (primary, secondary, vertex id).
fn best_target(r: &Reach, best: &[(f64, f64, usize, usize)], fits: impl Fn(usize) -> bool) -> Option<usize> {
    r.targets
        .iter()
        .copied()
        .filter(|&t| best[t].0.is_finite() && fits(t))
        .min_by(|&a, &b| {
            best[a]
                .0
                .total_cmp(&best[b].0)
                .then(best[a].1.total_cmp(&best[b].1))
                .then(a.cmp(&b))
        })
}

/// Minimum-weight path from `q.from` to a target whose delay stays within
/// `q.bound`. With `eps > 0` the weight is within `1 + eps` of optimal;
/// with `eps == 0` the search is exact.
pub fn restricted_min_weight_path<G: PathGraph + ?Sized>(g: &G, q: &PathQuery) -> Result<PathResult> {
    if !(q.bound >= 0.0) || !(q.eps >= 0.0) {
        return Err(Error::validation(format!(
            "delay bound {} and eps {} must be non-negative",
            q.bound, q.eps
        )));
    }
    let r = reach(g, q);
    let infeasible = || Error::infeasible(format!("no path from vertex {} within delay {}", q.from, q.bound));

    let by_delay = lexicographic(&r, false);
    let Some(fastest) = best_target(&r, &by_delay, |t| by_delay[t].0 <= q.bound) else {
        return Err(infeasible());
    };
    let by_weight = lexicographic(&r, true);
    let lightest = best_target(&r, &by_weight, |_| true).map(|t| by_weight[t].0);
    if let Some(t) = best_target(&r, &by_weight, |t| {
        Some(by_weight[t].0) == lightest && by_weight[t].1 <= q.bound
    }) {
        let (p, e) = trace(&r, t, |s| (by_weight[s].2, by_weight[s].3));
        return Ok(result(g, p, e));
    }
    let (p, e) = trace(&r, fastest, |s| (by_delay[s].2, by_delay[s].3));
    let fallback = result(g, p, e);
    if fallback.weight == 0.0 {
        return Ok(fallback);
    }
    if q.eps == 0.0 {
        return Ok(exact(g, &r, q.bound).unwrap_or(fallback));
    }
    let found = fptas(g, &r, q.bound, q.eps, fallback.weight);
    Ok(match found {
        Some(p) if p.weight < fallback.weight => p,
        _ => fallback,
    })
}

/// Pareto labels (weight, delay) per vertex.
fn exact<G: PathGraph + ?Sized>(g: &G, r: &Reach, bound: f64) -> Option<PathResult> {
    #[derive(Clone, Copy)]
    struct Label {
        w: f64,
        d: f64,
        edge: usize,
        prev: usize,
        prev_label: usize,
    }
    let mut labels: Vec<Vec<Label>> = vec![Vec::new(); r.order.len()];
    labels[0].push(Label {
        w: 0.0,
        d: 0.0,
        edge: usize::MAX,
        prev: usize::MAX,
        prev_label: usize::MAX,
    });
    for i in 0..r.order.len() {
        // Keep the non-dominated labels, sorted by weight.
        let mut ls = std::mem::take(&mut labels[i]);
        ls.sort_by(|a, b| a.w.total_cmp(&b.w).then(a.d.total_cmp(&b.d)));
        let mut kept: Vec<Label> = Vec::new();
        for l in ls {
            if l.d <= bound && kept.last().is_none_or(|k| l.d < k.d) {
                kept.push(l);
            }
        }
        labels[i] = kept;
        for (li, l) in labels[i].clone().iter().enumerate() {
            for &(e, j, w, d) in &r.out[i] {
                if l.d + d <= bound {
                    labels[j].push(Label {
                        w: l.w + w,
                        d: l.d + d,
                        edge: e,
                        prev: i,
                        prev_label: li,
                    });
                }
            }
        }
    }
    let (slot, li) = r
        .targets
        .iter()
        .filter_map(|&t| labels[t].first().map(|l| (t, l.w)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(t, _)| (t, 0))?;
    let mut path = vec![r.order[slot]];
    let mut edges = Vec::new();
    let (mut s, mut l) = (slot, li);
    while s != 0 {
        let lab = labels[s][l];
        edges.push(lab.edge);
        s = lab.prev;
        l = lab.prev_label;
        path.push(r.order[s]);
    }
    path.reverse();
    edges.reverse();
    Some(result(g, path, edges))
}

/// Weight-rounding dynamic program with a doubling guess of the optimum.
fn fptas<G: PathGraph + ?Sized>(g: &G, r: &Reach, bound: f64, eps: f64, upper: f64) -> Option<PathResult> {
    let m = r.order.len();
    // Longest path in edges bounds how much rounding can accumulate.
    let mut hops = vec![0usize; m];
    for i in 0..m {
        for &(_, j, _, _) in &r.out[i] {
            hops[j] = hops[j].max(hops[i] + 1);
        }
    }
    let h = r.targets.iter().map(|&t| hops[t]).max().unwrap_or(1).max(1);
    let min_positive = r
        .out
        .iter()
        .flatten()
        .map(|&(_, _, w, _)| w)
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let unconstrained = lexicographic(r, true);
    let lower = best_target(r, &unconstrained, |_| true).map_or(0.0, |t| unconstrained[t].0);
    let mut guess = lower.max(min_positive).min(upper);
    let budget = (2.0 * h as f64 / eps).ceil() as usize + h;

    loop {
        let delta = eps * guess / (2.0 * h as f64);
        // dist[slot][b]: least delay reaching slot with rounded weight b.
        let mut dist = vec![f64::INFINITY; m * (budget + 1)];
        let mut pred = vec![(usize::MAX, usize::MAX); m * (budget + 1)];
        dist[0] = 0.0;
        for i in 0..m {
            for b in 0..=budget {
                let here = dist[i * (budget + 1) + b];
                if !here.is_finite() {
                    continue;
                }
                for &(e, j, w, d) in &r.out[i] {
                    let rounded = (w / delta).floor();
                    if rounded > (budget - b) as f64 {
                        continue;
                    }
                    let nb = b + rounded as usize;
                    let nd = here + d;
                    let cell = j * (budget + 1) + nb;
                    if nd < dist[cell] {
                        dist[cell] = nd;
                        pred[cell] = (e, i * (budget + 1) + b);
                    }
                }
            }
        }
        let mut hit: Option<(usize, usize)> = None;
        for b in 0..=budget {
            for &t in &r.targets {
                if dist[t * (budget + 1) + b] <= bound {
                    hit = Some((t, b));
                    break;
                }
            }
            if hit.is_some() {
                break;
            }
        }
        if let Some((t, b)) = hit {
            let mut cell = t * (budget + 1) + b;
            let mut path = vec![r.order[t]];
            let mut edges = Vec::new();
            while cell != 0 {
                let (e, prev) = pred[cell];
                edges.push(e);
                cell = prev;
                path.push(r.order[cell / (budget + 1)]);
            }
            path.reverse();
            edges.reverse();
            return Some(result(g, path, edges));
        }
        if guess >= upper {
            return None;
        }
        guess = (guess * 2.0).min(upper);
    }
}
