//! Circulant base graphs and seeded small-world rewiring.
//!
//! The base graph on `n` vertices connects every vertex to its `k` nearest
//! neighbors on each side: edge `(i, (i+j) mod n)` for `j = 1..=k`, stored
//! normalized as `(u, v)` with `u < v`. The edge at index `e = (j-1)*n + i`
//! keeps that index through rewiring, which is what lets one coupling vector
//! be reapplied to the rewired and unrewired versions of the same graph.
//!
//! Rewiring draws one uniform number per edge (in edge-index order) from a
//! decision stream and compares it against `p`; selected edges keep their
//! lower endpoint and redraw the other endpoint uniformly, rejecting self
//! loops and existing edges, from a separate redraw stream. Separating the
//! streams means the *set* of rewired edge indices at probability `p` is a
//! subset of the set at `p' >= p` for the same seed and attempt, and `p = 0`
//! reproduces the base circulant bitwise for any seed.
//!
//! A rewiring pass that disconnects the graph is rejected wholesale and
//! retried with fresh streams, up to [`MAX_GRAPH_ATTEMPTS`] attempts.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_GRAPH_ATTEMPTS: usize = 1000;

/// Redraws allowed for a single edge before the whole attempt is abandoned;
/// only reachable when a kept endpoint is adjacent to almost every vertex.
const MAX_REDRAWS_PER_EDGE: usize = 1 << 16;

/// Parameters of one graph draw.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphSpec {
    pub n_vertices: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::validation("k must be at least 1"));
        }
        if self.n_vertices <= 2 * self.k {
            return Err(Error::validation(format!(
                "n_vertices = {} must exceed 2k = {} so the circulant has no duplicate edges",
                self.n_vertices,
                2 * self.k
            )));
        }
        if !self.p.is_finite() || !(0.0..=1.0).contains(&self.p) {
            return Err(Error::validation(format!(
                "rewiring probability p = {} must lie in [0, 1]",
                self.p
            )));
        }
        Ok(())
    }
}

/// Undirected simple graph with a stable edge ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Build from an explicit edge list. Endpoints are normalized to
    /// `u < v`; self loops, duplicates, and out-of-range endpoints are
    /// rejected. Connectivity is *not* required here -- ad-hoc edge lists are
    /// legitimate inputs for Hamiltonian assembly; the generators below are
    /// the ones that guarantee connectivity and the `k * n` edge count.
    pub fn from_edges(n_vertices: usize, edges: Vec<(u32, u32)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a as usize >= n_vertices || b as usize >= n_vertices {
                return Err(Error::validation(format!(
                    "edge ({a}, {b}) out of range for {n_vertices} vertices"
                )));
            }
            if a == b {
                return Err(Error::validation(format!("self loop at vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::validation(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
            normalized.push(e);
        }
        Ok(Graph {
            n_vertices,
            edges: normalized,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in stable index order, each normalized to `u < v`.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_vertices];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        adj
    }

    /// Breadth-first connectivity from vertex 0.
    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut visited = vec![false; self.n_vertices];
        let mut queue = std::collections::VecDeque::from([0u32]);
        visited[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u as usize] {
                if !visited[w as usize] {
                    visited[w as usize] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n_vertices
    }
}

/// The unrewired circulant: edge index `(j-1)*n + i` joins `i` and
/// `(i+j) mod n`, for `j = 1..=k`, `i = 0..n`.
pub fn base_circulant(spec: &GraphSpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n_vertices;
    let mut edges = Vec::with_capacity(spec.k * n);
    for j in 1..=spec.k {
        for i in 0..n {
            let u = i as u32;
            let v = ((i + j) % n) as u32;
            edges.push((u.min(v), u.max(v)));
        }
    }
    Ok(Graph {
        n_vertices: n,
        edges,
    })
}

fn decision_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * attempt as u64);
    rng
}

fn redraw_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * attempt as u64 + 1);
    rng
}

/// The per-edge rewire decisions for one attempt: entry `e` is true when the
/// decision draw for edge `e` fell below `p`. Exposed so reproducibility
/// studies can inspect which edges a given seed selects; the selected set at
/// `p` is a subset of the selected set at any `p' >= p`.
pub fn rewire_decisions(spec: &GraphSpec, attempt: usize) -> Result<Vec<bool>> {
    spec.validate()?;
    let n_edges = spec.k * spec.n_vertices;
    let mut rng = decision_rng(spec.seed, attempt);
    Ok((0..n_edges).map(|_| rng.random::<f64>() < spec.p).collect())
}

fn rewire_attempt(spec: &GraphSpec, base: &Graph, attempt: usize) -> Option<Graph> {
    let n = spec.n_vertices as u32;
    let decisions = rewire_decisions(spec, attempt).expect("spec validated by caller");
    let mut edges = base.edges().to_vec();
    let mut present: HashSet<(u32, u32)> = edges.iter().copied().collect();
    let mut redraw = redraw_rng(spec.seed, attempt);
    for e in 0..edges.len() {
        if !decisions[e] {
            continue;
        }
        let old = edges[e];
        let keep = old.0;
        let mut rewired = false;
        for _ in 0..MAX_REDRAWS_PER_EDGE {
            let w = redraw.random_range(0..n);
            if w == keep {
                continue;
            }
            let cand = (keep.min(w), keep.max(w));
            // `old` is still in `present`, so redrawing the original partner
            // is rejected as a duplicate: a selected edge always moves.
            if present.contains(&cand) {
                continue;
            }
            present.remove(&old);
            present.insert(cand);
            edges[e] = cand;
            rewired = true;
            break;
        }
        if !rewired {
            return None;
        }
    }
    Some(Graph {
        n_vertices: spec.n_vertices,
        edges,
    })
}

/// Generate a small-world graph: circulant base plus seeded rewiring,
/// rejecting disconnected results wholesale.
pub fn watts_strogatz(spec: &GraphSpec) -> Result<Graph> {
    generate(spec).map(|(g, _)| g)
}

/// Like [`watts_strogatz`] but also reports which attempt succeeded.
pub(crate) fn generate(spec: &GraphSpec) -> Result<(Graph, usize)> {
    spec.validate()?;
    let base = base_circulant(spec)?;
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        if let Some(g) = rewire_attempt(spec, &base, attempt) {
            if g.is_connected() {
                return Ok((g, attempt));
            }
        }
    }
    Err(Error::non_convergence(format!(
        "no connected rewiring in {MAX_GRAPH_ATTEMPTS} attempts for n = {}, k = {}, p = {}, seed = {}",
        spec.n_vertices, spec.k, spec.p, spec.seed
    )))
}
