use std::collections::VecDeque;

/// Maximum cardinality bipartite matching on rows × columns.
#[derive(Debug, Clone)]
pub struct Matching {
    pub row_to_col: Vec<Option<usize>>,
    pub col_to_row: Vec<Option<usize>>,
    pub size: usize,
}

impl Matching {
    pub fn is_perfect(&self) -> bool {
        self.size == self.row_to_col.len() && self.size == self.col_to_row.len()
    }
}

const INF: usize = usize::MAX;

/// Hopcroft–Karp. `adj[i]` lists the columns adjacent to row `i`.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_cols: usize) -> Matching {
    let n_rows = adj.len();
    let mut row_to_col = vec![None; n_rows];
    let mut col_to_row = vec![None; n_cols];
    let mut dist = vec![INF; n_rows];
    let mut size = 0;

    // greedy warm start
    for (i, cols) in adj.iter().enumerate() {
        if let Some(&j) = cols.iter().find(|&&j| col_to_row[j].is_none()) {
            row_to_col[i] = Some(j);
            col_to_row[j] = Some(i);
            size += 1;
        }
    }

    let mut it = vec![0usize; n_rows];
    while bfs(adj, &row_to_col, &col_to_row, &mut dist) {
        it.iter_mut().for_each(|x| *x = 0);
        for u in 0..n_rows {
            if row_to_col[u].is_none()
                && dfs(u, adj, &mut row_to_col, &mut col_to_row, &mut dist, &mut it)
            {
                size += 1;
            }
        }
    }

    Matching {
        row_to_col,
        col_to_row,
        size,
    }
}

fn bfs(
    adj: &[Vec<usize>],
    row_to_col: &[Option<usize>],
    col_to_row: &[Option<usize>],
    dist: &mut [usize],
) -> bool {
    let mut q = VecDeque::new();
    for (u, m) in row_to_col.iter().enumerate() {
        if m.is_none() {
            dist[u] = 0;
            q.push_back(u);
        } else {
            dist[u] = INF;
        }
    }
    let mut found = false;
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            match col_to_row[v] {
                Some(u2) => {
                    if dist[u2] == INF {
                        dist[u2] = dist[u] + 1;
                        q.push_back(u2);
                    }
                }
                None => found = true,
            }
        }
    }
    found
}

/// Iterative layered DFS; `it[u]` is the next adjacency position to try.
fn dfs(
    root: usize,
    adj: &[Vec<usize>],
    row_to_col: &mut [Option<usize>],
    col_to_row: &mut [Option<usize>],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    // stack of (row, column chosen to reach the next row)
    let mut stack: Vec<usize> = vec![root];
    let mut via: Vec<usize> = Vec::new();
    while let Some(&u) = stack.last() {
        if it[u] >= adj[u].len() {
            dist[u] = INF;
            stack.pop();
            via.pop();
            continue;
        }
        let v = adj[u][it[u]];
        it[u] += 1;
        match col_to_row[v] {
            None => {
                via.push(v);
                // augment along the stack
                for (k, &r) in stack.iter().enumerate() {
                    let c = via[k];
                    row_to_col[r] = Some(c);
                    col_to_row[c] = Some(r);
                }
                return true;
            }
            Some(u2) => {
                if dist[u2] != INF && dist[u2] == dist[u] + 1 {
                    via.push(v);
                    stack.push(u2);
                }
            }
        }
    }
    false
}
