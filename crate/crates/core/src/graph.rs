//! Directed graphs over nodes `0..n`, metric queries, cut enumeration and
//! the canonical builders (path, cycle, complete, barbell).
//!
//! Self-transitions are never stored as arcs. Dynamics on a graph may
//! always hold mass in place, so locality checks only look at
//! off-diagonal transitions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::Distribution;

/// Largest node count accepted by [`enumerate_cuts`].
pub const MAX_CUT_NODES: usize = 24;

/// A directed graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    undirected_input: bool,
}

/// On-disk form: `{"n": 4, "edges": [[0,1],...], "directed": false}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub directed: bool,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        let edges = g.edges.iter().map(|e| (e[0], e[1]));
        if g.directed {
            Graph::directed(g.n, edges)
        } else {
            Graph::undirected(g.n, edges)
        }
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        let edges = if g.undirected_input {
            g.arcs().filter(|&(i, j)| i < j).map(|(i, j)| [i, j]).collect()
        } else {
            g.arcs().map(|(i, j)| [i, j]).collect()
        };
        GraphJson {
            n: g.n,
            edges,
            directed: !g.undirected_input,
        }
    }
}

impl Graph {
    fn build(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>, undirected: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadSize("graph needs at least one node".into()));
        }
        let mut succ = vec![Vec::new(); n];
        for (i, j) in arcs {
            if i >= n || j >= n {
                return Err(Error::BadSize(format!("arc ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                continue;
            }
            succ[i].push(j);
            if undirected {
                succ[j].push(i);
            }
        }
        let mut pred = vec![Vec::new(); n];
        for (i, s) in succ.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            for &j in s.iter() {
                pred[j].push(i);
            }
        }
        Ok(Graph {
            n,
            succ,
            pred,
            undirected_input: undirected,
        })
    }

    /// Graph from ordered arcs. Self-arcs are dropped.
    pub fn directed(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::build(n, arcs, false)
    }

    /// Graph from undirected edges, each expanded to both ordered arcs.
    pub fn undirected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::build(n, edges, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_undirected_input(&self) -> bool {
        self.undirected_input
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        i < self.n && self.succ[i].binary_search(&j).is_ok()
    }

    /// True if a one-step transition `i -> j` is legal: an arc or a hold.
    pub fn allows(&self, i: usize, j: usize) -> bool {
        i == j || self.has_arc(i, j)
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.pred[i]
    }

    /// All arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }

    pub fn arc_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// The graph with every arc reversed.
    pub fn reversed(&self) -> Graph {
        Graph {
            n: self.n,
            succ: self.pred.clone(),
            pred: self.succ.clone(),
            undirected_input: self.undirected_input,
        }
    }

    /// BFS hop counts from `src` along arcs; `None` for unreachable nodes.
    pub fn distances_from(&self, src: usize) -> Vec<Option<usize>> {
        bfs(&self.succ, src)
    }

    /// BFS hop counts from every node to `dst`.
    pub fn distances_to(&self, dst: usize) -> Vec<Option<usize>> {
        bfs(&self.pred, dst)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.distances_from(0).iter().all(Option::is_some)
            && self.distances_to(0).iter().all(Option::is_some)
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_strongly_connected() {
            Ok(())
        } else {
            Err(Error::DisconnectedGraph)
        }
    }
}

fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Largest BFS distance over ordered node pairs.
pub fn diameter(g: &Graph) -> Result<usize> {
    let mut best = 0;
    for s in 0..g.n() {
        for d in g.distances_from(s) {
            best = best.max(d.ok_or(Error::DisconnectedGraph)?);
        }
    }
    Ok(best)
}

/// All-pairs hop distances, `dist[i][j]` = d(i, j).
pub fn distance_matrix(g: &Graph) -> Result<Vec<Vec<usize>>> {
    (0..g.n())
        .map(|s| {
            g.distances_from(s)
                .into_iter()
                .map(|d| d.ok_or(Error::DisconnectedGraph))
                .collect()
        })
        .collect()
}

/// Minimal-length path from `i` to `j`, choosing the lowest-index next
/// node at every tie.
pub fn shortest_path(g: &Graph, i: usize, j: usize) -> Result<Vec<usize>> {
    if i >= g.n() || j >= g.n() {
        return Err(Error::BadSize(format!("node out of range for {} nodes", g.n())));
    }
    let to_j = g.distances_to(j);
    let mut d = to_j[i].ok_or(Error::DisconnectedGraph)?;
    let mut path = vec![i];
    let mut cur = i;
    while d > 0 {
        cur = *g
            .successors(cur)
            .iter()
            .find(|&&v| to_j[v] == Some(d - 1))
            .expect("BFS distances are consistent");
        path.push(cur);
        d -= 1;
    }
    Ok(path)
}

/// Spanning tree rooted at `root`, stored as a parent map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: usize,
    /// `parent[root] == root`.
    pub parent: Vec<usize>,
    /// Every node appears after all of its descendants.
    pub leaves_first: Vec<usize>,
}

impl SpanningTree {
    pub fn children(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter(move |&(v, &p)| p == k && v != k)
            .map(|(v, _)| v)
    }
}

/// BFS tree toward `root` using arcs `(node, parent)` of `g` that pass
/// `allowed(node, parent)`. Ties go to the lowest index.
pub fn rooted_spanning_tree(
    g: &Graph,
    allowed: impl Fn(usize, usize) -> bool,
    root: usize,
) -> Result<SpanningTree> {
    let n = g.n();
    if root >= n {
        return Err(Error::BadSize(format!("root {root} out of range")));
    }
    let mut parent = vec![usize::MAX; n];
    parent[root] = root;
    let mut order = vec![root];
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &v in g.predecessors(u) {
            if parent[v] == usize::MAX && allowed(v, u) {
                parent[v] = u;
                order.push(v);
            }
        }
    }
    if order.len() < n {
        return Err(Error::NoSpanningTree { root });
    }
    order.reverse();
    Ok(SpanningTree {
        root,
        parent,
        leaves_first: order,
    })
}

/// A node subset encoded as a bit mask, with its stationary weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cut {
    pub mask: u32,
    pub weight: f64,
}

impl Cut {
    pub fn from_members(members: &[usize], pi: &Distribution) -> Result<Cut> {
        let mut mask = 0u32;
        for &m in members {
            if m >= pi.len() || m >= 32 {
                return Err(Error::BadSize(format!("cut member {m} out of range")));
            }
            mask |= 1 << m;
        }
        Ok(Cut {
            mask,
            weight: mask_weight(mask, pi.as_slice()),
        })
    }

    pub fn contains(&self, i: usize) -> bool {
        i < 32 && self.mask & (1 << i) != 0
    }

    pub fn members(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }
}

fn mask_weight(mask: u32, pi: &[f64]) -> f64 {
    pi.iter()
        .enumerate()
        .filter(|&(i, _)| mask & (1 << i) != 0)
        .map(|(_, w)| w)
        .sum()
}

/// Slack on the `pi(X) <= 1/2` filter so exact halves survive rounding.
const HALF_SLACK: f64 = 1e-12;

/// Every nonempty proper subset with `0 < pi(X) <= 1/2`, by ascending mask.
pub fn enumerate_cuts(g: &Graph, pi: &Distribution) -> Result<Vec<Cut>> {
    let n = g.n();
    if n > MAX_CUT_NODES {
        return Err(Error::TooManyNodes { n, max: MAX_CUT_NODES });
    }
    if pi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pi.len() });
    }
    let full = (1u32 << n) - 1;
    let w = pi.as_slice();
    let mut cuts = Vec::new();
    for mask in 1..full {
        let weight = mask_weight(mask, w);
        if weight > 0.0 && weight <= 0.5 + HALF_SLACK {
            cuts.push(Cut { mask, weight });
        }
    }
    Ok(cuts)
}

pub fn path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::BadSize(format!("path needs n >= 2, got {n}")));
    }
    Graph::undirected(n, (1..n).map(|i| (i - 1, i)))
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::BadSize(format!("cycle needs n >= 2, got {n}")));
    }
    Graph::undirected(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::BadSize(format!("complete graph needs n >= 2, got {n}")));
    }
    Graph::undirected(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

/// Two `K_n` cliques on `0..n` and `n..2n` joined by the edge `(n-1, n)`.
pub fn barbell(n_half: usize) -> Result<Graph> {
    if n_half < 2 {
        return Err(Error::BadSize(format!("barbell needs n_half >= 2, got {n_half}")));
    }
    let clique = |off: usize| (0..n_half).flat_map(move |i| (i + 1..n_half).map(move |j| (off + i, off + j)));
    let edges = clique(0)
        .chain(clique(n_half))
        .chain(std::iter::once((n_half - 1, n_half)));
    Graph::undirected(2 * n_half, edges)
}
