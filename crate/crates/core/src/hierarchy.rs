//! Class hierarchy DAG: nodes, child→parent edges, transitive closure,
//! topological order, roots and the labeled subset.
//!
//! Edges point from the more specific class to the more general one
//! (`corgi → dog` reads "corgi is-a dog"). The full node set usually
//! contains more classes than the dataset labels: parent categories are
//! included to connect the classes that actually occur, and those dataset
//! classes form the labeled subset.
//!
//! A [`Hierarchy`] is immutable after construction; all queries are
//! read-only, so it can be shared freely across threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Dense index identifying a node within one [`Hierarchy`].
///
/// Indices are contiguous, start at zero and are assigned in input order,
/// so they are stable for the lifetime of the hierarchy.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn new(index: usize) -> Self {
        NodeId(index)
    }
}

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("duplicate node name '{0}'")]
    DuplicateName(String),
    #[error("unknown node name '{0}'")]
    UnknownName(String),
    #[error("self-loop on node '{0}'")]
    SelfLoop(String),
    #[error("cycle detected: {}", format_cycle(.0))]
    CycleDetected(Vec<String>),
    #[error("hierarchy has no nodes")]
    Empty,
    #[error("empty node name")]
    EmptyName,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_cycle(names: &[String]) -> String {
    let mut out = names.join(" -> ");
    if let Some(first) = names.first() {
        let _ = write!(out, " -> {first}");
    }
    out
}

/// Square bit matrix storing the (descendant, ancestor) closure densely.
#[derive(Clone, Debug)]
struct BitMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        Self {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    fn set(&mut self, row: usize, col: usize) {
        debug_assert!(row < self.n && col < self.n);
        self.bits[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.n && col < self.n);
        self.bits[row * self.words_per_row + col / 64] & (1 << (col % 64)) != 0
    }

    /// `row[dst] |= row[src]`.
    fn or_row_from(&mut self, dst: usize, src: usize) {
        let d = dst * self.words_per_row;
        let s = src * self.words_per_row;
        for w in 0..self.words_per_row {
            let v = self.bits[s + w];
            self.bits[d + w] |= v;
        }
    }

    fn iter_row(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        let start = row * self.words_per_row;
        let n = self.n;
        self.bits[start..start + self.words_per_row]
            .iter()
            .enumerate()
            .flat_map(move |(w, &word)| {
                (0..64).filter_map(move |b| {
                    let col = w * 64 + b;
                    (word & (1 << b) != 0 && col < n).then_some(col)
                })
            })
    }
}

/// Immutable class DAG with precomputed transitive closure and topological order.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    names: Vec<String>,
    name_to_id: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    labeled: Vec<NodeId>,
    labeled_mask: Vec<bool>,
    closure: BitMatrix,
    topo_order: Vec<NodeId>,
    roots: Vec<NodeId>,
}

impl Hierarchy {
    /// Builds a validated hierarchy from node names, `(child, parent)` edges
    /// and the labeled subset, all given by name.
    ///
    /// Node ids are assigned in input order. Duplicate edges and labels are
    /// collapsed. Rejects duplicate or empty names, edges or labels that
    /// reference unknown names, self-loops and directed cycles.
    pub fn build<S: AsRef<str>>(
        nodes: &[S],
        edges: &[(S, S)],
        labeled: &[S],
    ) -> Result<Self, HierarchyError> {
        if nodes.is_empty() {
            return Err(HierarchyError::Empty);
        }

        let mut names = Vec::with_capacity(nodes.len());
        let mut name_to_id = HashMap::with_capacity(nodes.len());
        for (i, name) in nodes.iter().enumerate() {
            let name = name.as_ref();
            if name.is_empty() {
                return Err(HierarchyError::EmptyName);
            }
            if name_to_id.insert(name.to_owned(), NodeId(i)).is_some() {
                return Err(HierarchyError::DuplicateName(name.to_owned()));
            }
            names.push(name.to_owned());
        }

        let n = names.len();
        let lookup = |name: &str| -> Result<NodeId, HierarchyError> {
            name_to_id
                .get(name)
                .copied()
                .ok_or_else(|| HierarchyError::UnknownName(name.to_owned()))
        };

        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (child, parent) in edges {
            let c = lookup(child.as_ref())?;
            let p = lookup(parent.as_ref())?;
            if c == p {
                return Err(HierarchyError::SelfLoop(names[c.0].clone()));
            }
            parents[c.0].push(p);
            children[p.0].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }

        let mut labeled_mask = vec![false; n];
        for name in labeled {
            labeled_mask[lookup(name.as_ref())?.0] = true;
        }
        let labeled: Vec<NodeId> = (0..n).filter(|&i| labeled_mask[i]).map(NodeId).collect();

        let topo_order = toposort(&names, &parents, &children)?;

        // Parents precede children in topo order, so each node's closure row
        // is complete by the time its descendants fold it in.
        let mut closure = BitMatrix::new(n);
        for &u in &topo_order {
            for &p in &parents[u.0] {
                closure.or_row_from(u.0, p.0);
                closure.set(u.0, p.0);
            }
        }

        let roots = (0..n).filter(|&i| parents[i].is_empty()).map(NodeId).collect();

        Ok(Self {
            names,
            name_to_id,
            parents,
            children,
            labeled,
            labeled_mask,
            closure,
            topo_order,
            roots,
        })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, s: NodeId) -> &str {
        &self.names[s.0]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.name_to_id.get(name).copied()
    }

    /// All node ids in index order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    /// Direct parents of `s`; empty exactly when `s` is a root.
    pub fn parents(&self, s: NodeId) -> &[NodeId] {
        &self.parents[s.0]
    }

    /// Direct children of `s`; empty exactly when `s` is a leaf.
    pub fn children(&self, s: NodeId) -> &[NodeId] {
        &self.children[s.0]
    }

    /// True iff `ancestor` is reachable from `descendant` through one or more
    /// child→parent edges. Irreflexive: `is_ancestor(s, s)` is false.
    pub fn is_ancestor(&self, descendant: NodeId, ancestor: NodeId) -> bool {
        self.closure.get(descendant.0, ancestor.0)
    }

    /// All ancestors of `s` in index order.
    pub fn ancestors(&self, s: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.closure.iter_row(s.0).map(NodeId)
    }

    /// Nodes with no parents, in index order. Non-empty for any hierarchy.
    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    /// Nodes with no children, in index order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&s| self.children(s).is_empty()).collect()
    }

    /// The labeled subset (classes that occur in datasets), in index order.
    pub fn labeled(&self) -> &[NodeId] {
        &self.labeled
    }

    pub fn is_labeled(&self, s: NodeId) -> bool {
        self.labeled_mask[s.0]
    }

    /// Every parent appears before all of its children.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo_order
    }

    /// All `(child, parent)` edges ordered by child id, then parent id.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.node_ids()
            .flat_map(move |c| self.parents(c).iter().map(move |&p| (c, p)))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Parses the TSV hierarchy format.
    ///
    /// Lines are either `child<TAB>parent` edges, `!label<TAB>name` marks for
    /// the labeled subset, or `#` comments; blank lines are skipped. The node
    /// set is the union of all names appearing in edge lines, with ids
    /// assigned in order of first appearance; label marks must reference one
    /// of those nodes.
    pub fn from_tsv(text: &str) -> Result<Self, HierarchyError> {
        let mut nodes: Vec<String> = Vec::new();
        let mut seen: HashMap<String, ()> = HashMap::new();
        let mut add_node = |name: &str, nodes: &mut Vec<String>| {
            if seen.insert(name.to_owned(), ()).is_none() {
                nodes.push(name.to_owned());
            }
        };

        let mut edges: Vec<(String, String)> = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let first = fields.next().unwrap_or("");
            let second = fields.next();
            if fields.next().is_some() {
                return Err(HierarchyError::Parse {
                    line: line_no,
                    message: format!("expected two tab-separated fields, got more: '{line}'"),
                });
            }
            let Some(second) = second else {
                return Err(HierarchyError::Parse {
                    line: line_no,
                    message: format!("expected two tab-separated fields: '{line}'"),
                });
            };
            if second.is_empty() {
                return Err(HierarchyError::Parse {
                    line: line_no,
                    message: "empty name field".to_owned(),
                });
            }
            if first == "!label" {
                labels.push(second.to_owned());
            } else if first.is_empty() {
                return Err(HierarchyError::Parse {
                    line: line_no,
                    message: "empty name field".to_owned(),
                });
            } else {
                add_node(first, &mut nodes);
                add_node(second, &mut nodes);
                edges.push((first.to_owned(), second.to_owned()));
            }
        }
        Self::build(&nodes, &edges, &labels)
    }

    /// Serializes back to the TSV format parsed by [`Hierarchy::from_tsv`].
    ///
    /// Edges and label marks carry the full structure. A node that touches no
    /// edge has no line of its own and cannot round-trip; such nodes can only
    /// come from [`Hierarchy::build`], never from a parsed file.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (c, p) in self.edges() {
            let _ = writeln!(out, "{}\t{}", self.name(c), self.name(p));
        }
        for &s in &self.labeled {
            let _ = writeln!(out, "!label\t{}", self.name(s));
        }
        out
    }

    pub fn from_tsv_file(path: impl AsRef<Path>) -> Result<Self, HierarchyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HierarchyError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    pub fn write_tsv_file(&self, path: impl AsRef<Path>) -> Result<(), HierarchyError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|source| HierarchyError::Io {
            path: path.to_owned(),
            source,
        })
    }
}

/// Kahn's algorithm over parent→child direction; extracts one concrete cycle
/// on failure.
fn toposort(
    names: &[String],
    parents: &[Vec<NodeId>],
    children: &[Vec<NodeId>],
) -> Result<Vec<NodeId>, HierarchyError> {
    let n = names.len();
    let mut remaining_parents: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: std::collections::VecDeque<NodeId> = (0..n)
        .filter(|&i| remaining_parents[i] == 0)
        .map(NodeId)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &c in &children[u.0] {
            remaining_parents[c.0] -= 1;
            if remaining_parents[c.0] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every node left over has an unfinished parent, so walking parents
    // inside the leftover set must revisit a node; that is the cycle.
    let stuck: Vec<bool> = remaining_parents.iter().map(|&r| r > 0).collect();
    let start = (0..n).find(|&i| stuck[i]).expect("leftover node exists");
    let mut path: Vec<usize> = vec![start];
    let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    loop {
        let cur = *path.last().expect("path is non-empty");
        let next = parents[cur]
            .iter()
            .find(|p| stuck[p.0])
            .expect("stuck node has a stuck parent")
            .0;
        if let Some(&at) = pos.get(&next) {
            let cycle = path[at..].iter().map(|&i| names[i].clone()).collect();
            return Err(HierarchyError::CycleDetected(cycle));
        }
        pos.insert(next, path.len());
        path.push(next);
    }
}
