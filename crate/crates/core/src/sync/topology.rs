use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{sync_with, SyncOptions, SyncReport, SyncTechnique};
use crate::error::{Error, Result};
use crate::storage::{load_table, save_table};
use crate::table::Table;
use crate::value::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Warehouse,
    Mart,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub role: Role,
    /// CSV file of the node's table, relative to the topology file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub technique: SyncTechnique,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl Topology {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_owned(),
            line: e.line(),
            detail: e.to_string(),
        })
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Checks the graph and returns edge indices in execution order: edges
    /// are ranked by the topological position of their source node, ties
    /// broken by declaration order.
    pub fn execution_order(&self) -> Result<Vec<usize>> {
        let mut rank: HashMap<&str, usize> = HashMap::new();
        for node in &self.nodes {
            if rank.insert(&node.name, rank.len()).is_some() {
                return Err(Error::InvalidTopology(format!("duplicate node `{}`", node.name)));
            }
        }
        for edge in &self.edges {
            for end in [&edge.from, &edge.to] {
                if !rank.contains_key(end.as_str()) {
                    return Err(Error::MissingTable(end.clone()));
                }
            }
            if self.node(&edge.to).map(|n| n.role) == Some(Role::Source) {
                return Err(Error::InvalidTopology(format!(
                    "edge {} -> {} writes into a source",
                    edge.from, edge.to
                )));
            }
        }
        for mart in self.nodes.iter().filter(|n| n.role == Role::Mart) {
            let fed = self
                .edges
                .iter()
                .any(|e| e.to == mart.name && self.node(&e.from).map(|n| n.role) == Some(Role::Warehouse));
            if !fed {
                return Err(Error::InvalidTopology(format!(
                    "mart `{}` has no incoming edge from a warehouse",
                    mart.name
                )));
            }
        }

        // Kahn's algorithm; the ready set is ordered by declaration index.
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for edge in &self.edges {
            let (f, t) = (rank[edge.from.as_str()], rank[edge.to.as_str()]);
            out[f].push(t);
            indegree[t] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut topo_rank = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        while let Some(i) = ready.pop_first() {
            topo_rank[i] = next;
            next += 1;
            for &t in &out[i] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        if next < self.nodes.len() {
            let stuck: Vec<&str> = self
                .nodes
                .iter()
                .zip(&topo_rank)
                .filter(|(_, &r)| r == usize::MAX)
                .map(|(n, _)| n.name.as_str())
                .collect();
            return Err(Error::CyclicTopology(stuck.join(", ")));
        }
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by_key(|&e| (topo_rank[rank[self.edges[e].from.as_str()]], e));
        Ok(order)
    }
}

/// Runs every edge against the in-memory `tables`, in execution order.
pub fn run_pipeline(
    topology: &Topology,
    tables: &mut BTreeMap<String, Table>,
    as_of: Option<Timestamp>,
) -> Result<Vec<SyncReport>> {
    let order = topology.execution_order()?;
    for node in &topology.nodes {
        if !tables.contains_key(&node.name) {
            return Err(Error::MissingTable(node.name.clone()));
        }
    }
    let opts = SyncOptions { as_of, watermark: None };
    let mut reports = Vec::with_capacity(order.len());
    for i in order {
        let edge = &topology.edges[i];
        let mut dest = tables.remove(&edge.to).expect("checked above");
        let outcome = sync_with(&tables[&edge.from], &mut dest, &edge.technique, opts);
        tables.insert(edge.to.clone(), dest);
        reports.push(outcome?);
    }
    Ok(reports)
}

/// Loads every node's table from its path (relative to `base`), runs the
/// pipeline and saves the tables that were written to.
pub fn run_pipeline_files(topology: &Topology, base: &Path, as_of: Option<Timestamp>) -> Result<Vec<SyncReport>> {
    topology.execution_order()?;
    let mut paths = BTreeMap::new();
    let mut tables = BTreeMap::new();
    for node in &topology.nodes {
        let rel = node
            .path
            .as_ref()
            .ok_or_else(|| Error::InvalidTopology(format!("node `{}` has no path", node.name)))?;
        let path = base.join(rel);
        tables.insert(node.name.clone(), load_table(&path)?);
        paths.insert(node.name.clone(), path);
    }
    let reports = run_pipeline(topology, &mut tables, as_of)?;
    let written: BTreeSet<&str> = topology.edges.iter().map(|e| e.to.as_str()).collect();
    for name in written {
        save_table(&tables[name], &paths[name])?;
    }
    Ok(reports)
}
