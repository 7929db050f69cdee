//! PageRank over the link graph of compiled sources.
//!
//! Uses the un-normalized form `PR(u) = (1 - d) + d * sum(PR(i) / L(i))`,
//! starting from 1 for every node, so converged ranks sum to the node count.
//! Dangling nodes spread their rank uniformly over all nodes.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connector::{compile, extract_links_with};
use crate::extract::SourceRecord;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("damping must lie in [0, 1), got {0}")]
    InvalidDamping(f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkGraph {
    pub nodes: Vec<String>,
    pub out_edges: Vec<Vec<usize>>,
}

impl LinkGraph {
    /// Builds a graph from an edge list, collapsing parallel edges.
    pub fn from_edges(nodes: Vec<String>, edges: &[(usize, usize)]) -> Self {
        let mut out_edges = vec![Vec::new(); nodes.len()];
        for &(u, v) in edges {
            assert!(u < nodes.len() && v < nodes.len(), "edge endpoint out of range");
            if !out_edges[u].contains(&v) {
                out_edges[u].push(v);
            }
        }
        Self { nodes, out_edges }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    pub scores: Vec<f64>,
    pub damping: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// One node per record; an edge `u -> v` when `u`'s body links (by its
/// database's link pattern) to another record `v`. Self-links and links
/// leaving the record set are dropped.
pub fn build_link_graph(
    records: &[SourceRecord],
    pages: &BTreeMap<String, String>,
    link_patterns: &HashMap<String, String>,
) -> LinkGraph {
    let index: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.url.as_str(), i))
        .collect();
    let mut compiled = HashMap::new();
    let mut edges = Vec::new();
    for (u, rec) in records.iter().enumerate() {
        let Some(body) = pages.get(&rec.url) else { continue };
        let Some(pattern) = link_patterns.get(&rec.database_name) else { continue };
        let re = compiled
            .entry(rec.database_name.clone())
            .or_insert_with(|| compile(pattern).ok());
        let Some(re) = re else { continue };
        for link in extract_links_with(body, re, &rec.url) {
            if let Some(&v) = index.get(link.as_str()) {
                if v != u {
                    edges.push((u, v));
                }
            }
        }
    }
    LinkGraph::from_edges(records.iter().map(|r| r.url.clone()).collect(), &edges)
}

/// Fixed-point iteration until the largest per-node change is at most
/// `tolerance` or `max_iterations` sweeps have run.
pub fn pagerank(
    graph: &LinkGraph,
    damping: f64,
    max_iterations: usize,
    tolerance: f64,
) -> Result<RankVector, RankError> {
    let n = graph.len();
    if n == 0 {
        return Err(RankError::EmptyGraph);
    }
    if !(0.0..1.0).contains(&damping) {
        return Err(RankError::InvalidDamping(damping));
    }
    let mut scores = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut iterations_used = 0;
    let mut converged = false;

    while iterations_used < max_iterations.max(1) {
        let dangling: f64 = graph
            .out_edges
            .iter()
            .zip(&scores)
            .filter(|(out, _)| out.is_empty())
            .map(|(_, s)| s)
            .sum();
        next.fill(dangling / n as f64);
        for (u, out) in graph.out_edges.iter().enumerate() {
            if out.is_empty() {
                continue;
            }
            let share = scores[u] / out.len() as f64;
            for &v in out {
                next[v] += share;
            }
        }
        let mut max_delta: f64 = 0.0;
        for (s, inflow) in scores.iter_mut().zip(&next) {
            let updated = (1.0 - damping) + damping * inflow;
            max_delta = max_delta.max((updated - *s).abs());
            *s = updated;
        }
        iterations_used += 1;
        if max_delta <= tolerance {
            converged = true;
            break;
        }
    }

    Ok(RankVector {
        scores,
        damping,
        iterations_used,
        converged,
    })
}

/// Scores as percentages of their total.
pub fn normalized_percent(ranks: &RankVector) -> Result<Vec<f64>, RankError> {
    let total: f64 = ranks.scores.iter().sum();
    if ranks.scores.is_empty() || !(total > 0.0) {
        return Err(RankError::EmptyGraph);
    }
    Ok(ranks.scores.iter().map(|s| 100.0 * s / total).collect())
}
