//! Trajectory graphs.
//!
//! Nodes are the points of a trajectory; a directed edge (src, dst) lets
//! node `dst` receive a message from node `src`. Indices are 0-based in
//! memory and 1-based in text dumps.

use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{stream, STREAM_WIRING};

/// Maximum in-degree used by default.
pub const DEFAULT_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wiring {
    /// Each node listens to predecessors at geometrically growing offsets.
    CausalGeometric,
    /// Each node listens to `k` uniformly drawn other nodes.
    RandomRegular,
}

impl FromStr for Wiring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "causal" | "causal_geometric" => Ok(Wiring::CausalGeometric),
            "random" | "random_regular" => Ok(Wiring::RandomRegular),
            other => domain(format!("unknown wiring scheme '{other}'")),
        }
    }
}

/// Deduplicated directed edges over nodes `0..n`, without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Validates and deduplicates 0-based `(src, dst)` pairs.
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(s, d)) = edges.iter().find(|&&(s, d)| s >= n || d >= n) {
            return domain(format!("edge ({s}, {d}) out of range for {n} nodes"));
        }
        if let Some(&(s, _)) = edges.iter().find(|&&(s, d)| s == d) {
            return domain(format!("self-loop at node {s}"));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        edges.retain(|e| seen.insert(*e));
        Ok(Self { n, edges })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// 0-based `(src, dst)` pairs in construction order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(_, d) in &self.edges {
            deg[d] += 1;
        }
        deg
    }

    /// Writes `src,dst` lines with 1-based indices.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for &(s, d) in &self.edges {
            writeln!(w, "{},{}", s + 1, d + 1)?;
        }
        Ok(())
    }

    /// Breadth-first distance from `from` to `to` along edge directions.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<usize> {
        let mut out_edges = vec![Vec::new(); self.n];
        for &(s, d) in &self.edges {
            out_edges[s].push(d);
        }
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            if u == to {
                return Some(dist[u]);
            }
            for &v in &out_edges[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// Geometric offsets β_1 = 1, …, β_k = n − 1 (floored), in increasing order.
fn geometric_offsets(n: usize, k: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let span = (n - 1) as f64;
    let mut offsets: Vec<usize> = (0..k)
        .map(|j| {
            if k == 1 {
                1
            } else if j == k - 1 {
                n - 1
            } else {
                span.powf(j as f64 / (k - 1) as f64).floor() as usize
            }
        })
        .collect();
    offsets.dedup();
    offsets
}

/// Causal wiring: node i (1-based) receives edges from i − ⌊β_j⌋, clamped
/// to node 1, for a geometric progression β from 1 to N − 1. Duplicates are
/// dropped, so early nodes have fewer than `k` sources.
pub fn build_causal_geometric(n: usize, k: usize) -> Result<EdgeList> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    let offsets = geometric_offsets(n, k);
    let mut edges = Vec::with_capacity(n * offsets.len());
    for dst in 1..n {
        let mut last = usize::MAX;
        for &b in &offsets {
            let src = dst.saturating_sub(b);
            // offsets increase, so sources decrease; clamping repeats node 0
            if src != last {
                edges.push((src, dst));
                last = src;
            }
        }
    }
    Ok(EdgeList { n, edges })
}

/// Random wiring: every node receives edges from min(k, N − 1) distinct
/// other nodes drawn uniformly, reproducibly from `seed`.
pub fn build_random_regular(n: usize, k: usize, seed: u64) -> Result<EdgeList> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    let mut rng = stream(seed, STREAM_WIRING);
    if n < 2 {
        return Ok(EdgeList { n, edges: Vec::new() });
    }
    let m = k.min(n - 1);
    let mut edges = Vec::with_capacity(n * m);
    for dst in 0..n {
        for idx in sample(&mut rng, n - 1, m) {
            let src = if idx >= dst { idx + 1 } else { idx };
            edges.push((src, dst));
        }
    }
    Ok(EdgeList { n, edges })
}

pub fn build(wiring: Wiring, n: usize, k: usize, seed: u64) -> Result<EdgeList> {
    match wiring {
        Wiring::CausalGeometric => build_causal_geometric(n, k),
        Wiring::RandomRegular => build_random_regular(n, k, seed),
    }
}

/// In-neighbour lists in compressed form. Sources of each node are sorted,
/// so aggregation results do not depend on edge storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    sources: Vec<u32>,
}

impl Adjacency {
    pub fn from_edges(edges: &EdgeList) -> Self {
        let n = edges.n;
        let mut offsets = vec![0usize; n + 1];
        for &(_, d) in &edges.edges {
            offsets[d + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut sources = vec![0u32; edges.edges.len()];
        for &(s, d) in &edges.edges {
            sources[fill[d]] = s as u32;
            fill[d] += 1;
        }
        for i in 0..n {
            sources[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Self { offsets, sources }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.sources.len()
    }

    pub fn in_neighbors(&self, node: usize) -> &[u32] {
        &self.sources[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Disjoint union: node indices of part `p` are shifted by the total
    /// node count of parts `0..p`.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Adjacency>) -> Self {
        let mut offsets = vec![0usize];
        let mut sources = Vec::new();
        for part in parts {
            let node_shift = (offsets.len() - 1) as u32;
            let edge_shift = sources.len();
            sources.extend(part.sources.iter().map(|&s| s + node_shift));
            offsets.extend(part.offsets[1..].iter().map(|&o| o + edge_shift));
        }
        Self { offsets, sources }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_based(e: &EdgeList) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = e.edges().iter().map(|&(s, d)| (s + 1, d + 1)).collect();
        v.sort();
        v
    }

    #[test]
    fn causal_small_cases() {
        assert!(build_causal_geometric(1, 20).unwrap().is_empty());
        let e = build_causal_geometric(3, 20).unwrap();
        assert_eq!(one_based(&e), vec![(1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn causal_first_to_last() {
        for n in [10, 100, 1000, 1001] {
            let e = build_causal_geometric(n, 20).unwrap();
            assert!(e.edges().contains(&(0, n - 1)));
            assert!(e.in_degrees().iter().all(|&d| d <= 20));
            assert!(e.edges().iter().all(|&(s, d)| s < d));
            assert!(e.len() <= 20 * n);
            let bound = 2 * (n as f64).log2().ceil() as usize;
            assert!(e.shortest_path(0, n - 1).unwrap() <= bound);
        }
    }

    #[test]
    fn causal_has_no_duplicates() {
        let e = build_causal_geometric(500, 20).unwrap();
        let mut v = e.edges().to_vec();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), e.len());
    }

    #[test]
    fn random_regular_degrees() {
        let e = build_random_regular(2, 20, 1).unwrap();
        assert_eq!(one_based(&e), vec![(1, 2), (2, 1)]);
        for seed in 0..5 {
            let e = build_random_regular(100, 20, seed).unwrap();
            assert!(e.in_degrees().iter().all(|&d| d == 20));
            assert!(e.edges().iter().all(|&(s, d)| s != d));
        }
        let a = build_random_regular(100, 20, 1).unwrap();
        let b = build_random_regular(100, 20, 2).unwrap();
        assert_ne!(one_based(&a), one_based(&b));
        assert_eq!(a, build_random_regular(100, 20, 1).unwrap());
    }

    #[test]
    fn adjacency_is_order_free() {
        let e = build_random_regular(30, 5, 4).unwrap();
        let mut rev = e.edges().to_vec();
        rev.reverse();
        let r = EdgeList::new(30, rev).unwrap();
        assert_eq!(Adjacency::from_edges(&e), Adjacency::from_edges(&r));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(EdgeList::new(3, vec![(0, 3)]).is_err());
        assert!(EdgeList::new(3, vec![(1, 1)]).is_err());
        assert_eq!(EdgeList::new(3, vec![(0, 1), (0, 1)]).unwrap().len(), 1);
    }

    #[test]
    fn dump_is_one_based() {
        let mut buf = Vec::new();
        build_causal_geometric(3, 20).unwrap().write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().all(|l| !l.contains('0')));
        assert_eq!(text.lines().count(), 3);
    }
}
