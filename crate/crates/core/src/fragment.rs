//! Functional-group graphs: one node per FG instance, one edge per pair of
//! instances joined by at least one bond.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::fg::FgAssignment;
use crate::mol::{write_smiles, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FgNode {
    pub label: String,
    #[serde(rename = "core")]
    pub core_smiles: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kg_entity_id: Option<String>,
}

impl FgNode {
    pub fn new(label: impl Into<String>, core_smiles: impl Into<String>) -> Self {
        FgNode { label: label.into(), core_smiles: core_smiles.into(), kg_entity_id: None }
    }

    /// Knowledge-graph entity id: explicit if set, else `label|core`.
    pub fn entity_id(&self) -> String {
        self.kg_entity_id.clone().unwrap_or_else(|| entity_id(&self.label, &self.core_smiles))
    }
}

pub fn entity_id(label: &str, core_smiles: &str) -> String {
    format!("{label}|{core_smiles}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FgGraph {
    #[serde(rename = "smiles")]
    pub source_smiles: String,
    pub nodes: Vec<FgNode>,
    /// Unordered pairs stored as (min, max), sorted, no duplicates.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, thiserror::Error)]
pub enum FgGraphError {
    #[error("edge ({0}, {1}) references a missing node")]
    DanglingEdge(usize, usize),
    #[error("self edge on node {0}")]
    SelfEdge(usize),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl FgGraph {
    /// Builds and normalizes; edges are deduplicated and oriented (min, max).
    pub fn new(
        source_smiles: impl Into<String>,
        nodes: Vec<FgNode>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<FgGraph, FgGraphError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(FgGraphError::SelfEdge(a));
            }
            if a >= nodes.len() || b >= nodes.len() {
                return Err(FgGraphError::DanglingEdge(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(FgGraph { source_smiles: source_smiles.into(), nodes, edges: set.into_iter().collect() })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn num_components(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.nodes.len()];
        let mut count = 0;
        for s in 0..self.nodes.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Relabels nodes so that new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> FgGraph {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let nodes = perm.iter().map(|&i| self.nodes[i].clone()).collect();
        FgGraph::new(
            self.source_smiles.clone(),
            nodes,
            self.edges.iter().map(|&(a, b)| (inv[a], inv[b])),
        )
        .expect("permutation preserves validity")
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json_line(line: &str) -> Result<FgGraph, FgGraphError> {
        let raw: FgGraph = serde_json::from_str(line)?;
        FgGraph::new(raw.source_smiles, raw.nodes, raw.edges)
    }
}

/// Functional-group graph of `g` under assignment `a`.
pub fn fragment(g: &MolGraph, a: &FgAssignment) -> FgGraph {
    let nodes = a.instances.iter().map(|i| FgNode::new(&i.label, &i.core_smiles)).collect();
    let edges = g.bonds().iter().filter_map(|b| {
        let (x, y) = (a.atom_to_instance[b.a], a.atom_to_instance[b.b]);
        (x != y).then_some((x, y))
    });
    FgGraph::new(write_smiles(g), nodes, edges).expect("instances index valid nodes")
}
