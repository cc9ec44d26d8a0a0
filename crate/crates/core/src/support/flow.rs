//! Integral flow feasibility with lower bounds, reduced to a plain max-flow
//! (Dinic) between an auxiliary source and sink.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
}

#[derive(Debug, Clone)]
struct Dinic {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    level: Vec<i32>,
    it: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); n],
            arcs: Vec::new(),
            level: vec![0; n],
            it: vec![0; n],
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: i64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap });
        self.adj[u].push(id);
        self.arcs.push(Arc { to: u, cap: 0 });
        self.adj[v].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &id in &self.adj[u] {
                let a = &self.arcs[id];
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[u] + 1;
                    q.push_back(a.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: i64) -> i64 {
        if u == t {
            return pushed;
        }
        while self.it[u] < self.adj[u].len() {
            let id = self.adj[u][self.it[u]];
            let (to, cap) = (self.arcs[id].to, self.arcs[id].cap);
            if cap > 0 && self.level[to] == self.level[u] + 1 {
                let d = self.dfs(to, t, pushed.min(cap));
                if d > 0 {
                    self.arcs[id].cap -= d;
                    self.arcs[id ^ 1].cap += d;
                    return d;
                }
            }
            self.it[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.it.iter_mut().for_each(|x| *x = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// Network whose arcs carry `[lower, upper]` integral bounds.
#[derive(Debug, Clone)]
pub struct BoundedNetwork {
    n: usize,
    edges: Vec<(usize, usize, i64, i64)>,
}

impl BoundedNetwork {
    pub fn new(n: usize) -> Self {
        BoundedNetwork {
            n,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, lower: i64, upper: i64) -> usize {
        debug_assert!(0 <= lower && lower <= upper);
        self.edges.push((u, v, lower, upper));
        self.edges.len() - 1
    }

    pub fn set_bounds(&mut self, edge: usize, lower: i64, upper: i64) {
        self.edges[edge].2 = lower;
        self.edges[edge].3 = upper;
    }

    /// Finds an `s`-`t` flow meeting every bound, returning the flow per edge.
    pub fn feasible_flow(&self, s: usize, t: usize) -> Option<Vec<i64>> {
        let ss = self.n;
        let tt = self.n + 1;
        let mut g = Dinic::new(self.n + 2);
        let mut excess = vec![0i64; self.n];
        let mut ids = Vec::with_capacity(self.edges.len());
        let mut big = 0i64;
        for &(u, v, lo, hi) in &self.edges {
            ids.push(g.add(u, v, hi - lo));
            excess[v] += lo;
            excess[u] -= lo;
            big += hi;
        }
        g.add(t, s, big.max(1));
        let mut need = 0;
        for (v, &e) in excess.iter().enumerate() {
            if e > 0 {
                g.add(ss, v, e);
                need += e;
            } else if e < 0 {
                g.add(v, tt, -e);
            }
        }
        if g.max_flow(ss, tt) != need {
            return None;
        }
        Some(
            self.edges
                .iter()
                .zip(&ids)
                .map(|(&(_, _, lo, hi), &id)| lo + (hi - lo - g.arcs[id].cap))
                .collect(),
        )
    }
}
