//! Residual flow network with Dinic max-flow and a primal-dual min-cost flow.
//!
//! Arcs are stored in pairs: arc `a` and its reverse `a ^ 1`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

pub(crate) const INF_CAP: i64 = i64::MAX / 4;
const INF_DIST: i64 = i64::MAX / 4;

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Network {
    arcs: Vec<Arc>,
    initial: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(nodes: usize) -> Self {
        Network {
            arcs: Vec::new(),
            initial: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc { to: from, cap: 0, cost: -cost });
        self.initial.push(cap);
        self.initial.push(0);
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently carried by forward arc `a`.
    pub fn flow(&self, a: usize) -> i64 {
        self.initial[a] - self.arcs[a].cap
    }

    pub fn head(&self, a: usize) -> usize {
        self.arcs[a].to
    }

    pub fn tail(&self, a: usize) -> usize {
        self.arcs[a ^ 1].to
    }

    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_forward(&self, a: usize) -> bool {
        a & 1 == 0
    }

    /// Nodes reachable from `s` through arcs with residual capacity.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let arc = self.arcs[a];
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }

    /// Dinic's algorithm over the arcs accepted by `usable`.
    fn dinic_filtered(&mut self, s: usize, t: usize, usable: &dyn Fn(&Network, usize) -> bool) -> i64 {
        let nodes = self.node_count();
        let mut total = 0;
        let mut level = vec![usize::MAX; nodes];
        let mut it = vec![0usize; nodes];
        loop {
            level.fill(usize::MAX);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &a in &self.adj[v] {
                    let to = self.arcs[a].to;
                    if self.arcs[a].cap > 0 && level[to] == usize::MAX && usable(self, a) {
                        level[to] = level[v] + 1;
                        queue.push_back(to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            it.fill(0);
            let mut path: Vec<usize> = Vec::new();
            let mut v = s;
            loop {
                if v == t {
                    let push = path.iter().map(|&a| self.arcs[a].cap).min().unwrap_or(0);
                    for &a in &path {
                        self.arcs[a].cap -= push;
                        self.arcs[a ^ 1].cap += push;
                    }
                    total += push;
                    path.clear();
                    v = s;
                    continue;
                }
                let mut advanced = false;
                while it[v] < self.adj[v].len() {
                    let a = self.adj[v][it[v]];
                    let to = self.arcs[a].to;
                    if self.arcs[a].cap > 0 && level[to] == level[v] + 1 && usable(self, a) {
                        path.push(a);
                        v = to;
                        advanced = true;
                        break;
                    }
                    it[v] += 1;
                }
                if !advanced {
                    if v == s {
                        break;
                    }
                    level[v] = usize::MAX;
                    let a = path.pop().expect("non-source node has an entry arc");
                    v = self.tail(a);
                    it[v] += 1;
                }
            }
        }
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        self.dinic_filtered(s, t, &|_, _| true)
    }

    /// Shortest distances from `s` by label-correcting search (handles negative costs).
    fn bellman_ford_from(&self, s: usize) -> Vec<i64> {
        let mut dist = vec![INF_DIST; self.node_count()];
        let mut queued = vec![false; self.node_count()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        queued[s] = true;
        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            for &a in &self.adj[v] {
                let arc = self.arcs[a];
                if arc.cap > 0 && dist[v] + arc.cost < dist[arc.to] {
                    dist[arc.to] = dist[v] + arc.cost;
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        queue.push_back(arc.to);
                    }
                }
            }
        }
        dist
    }

    /// Minimum-cost flow of unconstrained value: augments while a negative-cost
    /// augmenting path exists. Returns `(flow, cost)`.
    ///
    /// Requires no negative-cost cycle in the initial residual graph.
    pub fn min_cost_free_flow(&mut self, s: usize, t: usize) -> (i64, i64) {
        let nodes = self.node_count();
        let mut potential: Vec<i64> = self
            .bellman_ford_from(s)
            .into_iter()
            .map(|d| if d >= INF_DIST { 0 } else { d })
            .collect();
        let mut flow = 0;
        let mut cost = 0;
        let mut dist = vec![INF_DIST; nodes];
        let mut done = vec![false; nodes];
        loop {
            dist.fill(INF_DIST);
            done.fill(false);
            dist[s] = 0;
            let mut heap = BinaryHeap::from([Reverse((0i64, s))]);
            while let Some(Reverse((d, v))) = heap.pop() {
                if done[v] {
                    continue;
                }
                done[v] = true;
                for &a in &self.adj[v] {
                    let arc = self.arcs[a];
                    if arc.cap <= 0 {
                        continue;
                    }
                    let reduced = arc.cost + potential[v] - potential[arc.to];
                    debug_assert!(reduced >= 0, "negative reduced cost {reduced}");
                    let nd = d + reduced;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[t] >= INF_DIST {
                break;
            }
            let dt = dist[t];
            for v in 0..nodes {
                potential[v] += dist[v].min(dt);
            }
            let path_cost = potential[t] - potential[s];
            if path_cost >= 0 {
                break;
            }
            let pot = potential.clone();
            let pushed = self.dinic_filtered(s, t, &|net, a| {
                let arc = net.arcs[a];
                arc.cost + pot[net.tail(a)] - pot[arc.to] == 0
            });
            debug_assert!(pushed > 0);
            flow += pushed;
            cost += pushed * path_cost;
        }
        (flow, cost)
    }

    /// Integer potentials `p` with `p[v] <= p[u] + cost` on every residual arc
    /// and on every `extra` arc `(u, v, cost)`; `None` on a negative cycle.
    pub fn residual_potentials(&self, extra: &[(usize, usize, i64)]) -> Option<Vec<i64>> {
        let nodes = self.node_count();
        let mut extra_adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); nodes];
        for &(u, v, c) in extra {
            extra_adj[u].push((v, c));
        }
        let mut dist = vec![0i64; nodes];
        let mut queued = vec![true; nodes];
        let mut relaxed = vec![0usize; nodes];
        let mut queue: VecDeque<usize> = (0..nodes).collect();
        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            let arcs = self.adj[v]
                .iter()
                .filter(|&&a| self.arcs[a].cap > 0)
                .map(|&a| (self.arcs[a].to, self.arcs[a].cost));
            for (to, c) in arcs.chain(extra_adj[v].iter().copied()) {
                if dist[v] + c < dist[to] {
                    dist[to] = dist[v] + c;
                    relaxed[to] += 1;
                    if relaxed[to] > nodes {
                        return None;
                    }
                    if !queued[to] {
                        queued[to] = true;
                        queue.push_back(to);
                    }
                }
            }
        }
        Some(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_flow_small() {
        // classic 4-node diamond
        let mut net = Network::new(4);
        net.add_arc(0, 1, 3, 0);
        net.add_arc(0, 2, 2, 0);
        net.add_arc(1, 2, 1, 0);
        net.add_arc(1, 3, 2, 0);
        net.add_arc(2, 3, 3, 0);
        assert_eq!(net.max_flow(0, 3), 5);
    }

    #[test]
    fn min_cost_stops_at_nonnegative_paths() {
        // s=0, t=3; path via 1 earns -5 per unit (cap 2), via 2 costs +1
        let mut net = Network::new(4);
        net.add_arc(0, 1, 2, 1);
        net.add_arc(1, 3, 5, -6);
        net.add_arc(0, 2, 4, 0);
        net.add_arc(2, 3, 4, 1);
        assert_eq!(net.min_cost_free_flow(0, 3), (2, -10));
        let pot = net.residual_potentials(&[]).unwrap();
        for v in 0..net.node_count() {
            for &a in net.out_arcs(v) {
                if net.arcs[a].cap > 0 {
                    assert!(pot[net.head(a)] <= pot[v] + net.arcs[a].cost);
                }
            }
        }
    }

    #[test]
    fn min_cost_matches_enumeration_on_assignment() {
        // 3x3 assignment with negative profits: min-cost free flow = best partial assignment
        let profit = [[4, 1, 3], [2, 0, 5], [3, 2, 2]];
        let mut net = Network::new(8);
        for i in 0..3 {
            net.add_arc(0, 1 + i, 1, 0);
            net.add_arc(4 + i, 7, 1, 0);
            for j in 0..3 {
                net.add_arc(1 + i, 4 + j, 1, -profit[i][j]);
            }
        }
        let (_, cost) = net.min_cost_free_flow(0, 7);
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| profit[i][p[i]]).sum::<i64>())
            .max()
            .unwrap();
        assert_eq!(cost, -best);
    }
}
