//! Min-cost flow by successive shortest paths (Bellman-Ford queue variant),
//! sized for the small transportation problems of the extended oracle.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: i128,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Adds an arc and returns its id, usable with [`Self::flow_on`].
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: i128) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.adj[from].push(id);
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently on arc `id`.
    pub fn flow_on(&self, id: usize) -> i64 {
        self.edges[id ^ 1].cap
    }

    /// Sends up to `limit` units from `s` to `t` at minimum cost. Returns
    /// the amount sent and its cost, or `None` on cost overflow.
    pub fn run(&mut self, s: usize, t: usize, limit: i64) -> Option<(i64, i128)> {
        let n = self.adj.len();
        let (mut flow, mut cost) = (0i64, 0i128);
        while flow < limit {
            let mut dist = vec![i128::MAX; n];
            let mut prev = vec![usize::MAX; n];
            let mut queued = vec![false; n];
            let mut queue = VecDeque::new();
            dist[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap <= 0 {
                        continue;
                    }
                    let nd = dist[u].checked_add(edge.cost)?;
                    if nd < dist[edge.to] {
                        dist[edge.to] = nd;
                        prev[edge.to] = e;
                        if !queued[edge.to] {
                            queued[edge.to] = true;
                            queue.push_back(edge.to);
                        }
                    }
                }
            }
            if dist[t] == i128::MAX {
                break;
            }
            let mut push = limit - flow;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
            cost = cost.checked_add(dist[t].checked_mul(i128::from(push))?)?;
        }
        Some((flow, cost))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_picks_the_cheaper_matching() {
        // two workers, two jobs; best total is 1 + 1 rather than 0 + 5
        let mut g = MinCostFlow::new(6);
        let (s, t) = (4, 5);
        g.add_edge(s, 0, 1, 0);
        g.add_edge(s, 1, 1, 0);
        let a = g.add_edge(0, 2, 1, 0);
        let b = g.add_edge(0, 3, 1, 1);
        g.add_edge(1, 2, 1, 1);
        g.add_edge(1, 3, 1, 5);
        g.add_edge(2, t, 1, 0);
        g.add_edge(3, t, 1, 0);
        assert_eq!(g.run(s, t, 2), Some((2, 2)));
        assert_eq!(g.flow_on(a), 0);
        assert_eq!(g.flow_on(b), 1);
    }

    #[test]
    fn limited_by_capacity() {
        let mut g = MinCostFlow::new(2);
        g.add_edge(0, 1, 3, -2);
        assert_eq!(g.run(0, 1, 10), Some((3, -6)));
    }
}
