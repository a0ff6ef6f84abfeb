//! Chimera graphs `C_k` and their node-induced subgraphs.
//!
//! `C_k` is a `k x k` grid of unit cells, each a complete bipartite graph
//! `K_{4,4}`. A cell's left partition is coupled slot-by-slot to the left
//! partitions of the cells directly above and below it, its right partition
//! to the right partitions of the cells to its left and right.
//!
//! Nodes are numbered `8 (row * k + col) + 4 side + slot` with `side = 0` for
//! the left partition and `1` for the right one. Edges are stored as
//! `(smaller, larger)` pairs in sorted order, which makes every derived file
//! format deterministic.

use std::fmt;

use crate::error::{Error, Result};

const ABSENT: u32 = u32::MAX;

/// Index of a qubit in `C_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_coord(k: u32, coord: Coord) -> NodeId {
        NodeId(8 * (coord.row * k + coord.col) + 4 * coord.side as u32 + coord.slot)
    }

    pub fn coord(self, k: u32) -> Coord {
        let cell = self.0 / 8;
        let within = self.0 % 8;
        Coord {
            row: cell / k,
            col: cell % k,
            side: if within < 4 { Side::Left } else { Side::Right },
            slot: within % 4,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left = 0,
    Right = 1,
}

/// Position of a node inside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub row: u32,
    pub col: u32,
    pub side: Side,
    pub slot: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Left slot to right slot within one cell.
    IntraCell,
    /// Right partitions of horizontally adjacent cells.
    Horizontal,
    /// Left partitions of vertically adjacent cells.
    Vertical,
}

/// Grid dimension of a Chimera graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChimeraParams {
    k: u32,
}

impl ChimeraParams {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if 8 * (k as u64) * (k as u64) >= ABSENT as u64 {
            return Err(Error::InvalidParameter(format!(
                "k = {k} overflows the 32-bit node index range"
            )));
        }
        Ok(ChimeraParams { k })
    }

    pub fn k(self) -> u32 {
        self.k
    }

    pub fn num_nodes(self) -> usize {
        8 * self.k as usize * self.k as usize
    }

    pub fn num_edges(self) -> usize {
        let k = self.k as usize;
        24 * k * k - 8 * k
    }

    pub fn contains(self, v: NodeId) -> bool {
        v.index() < self.num_nodes()
    }

    /// Returns how `a` and `b` are coupled in the full `C_k`, if at all.
    pub fn edge_kind(self, a: NodeId, b: NodeId) -> Option<EdgeKind> {
        if !self.contains(a) || !self.contains(b) || a == b {
            return None;
        }
        let (ca, cb) = (a.coord(self.k), b.coord(self.k));
        let same_cell = ca.row == cb.row && ca.col == cb.col;
        match (ca.side, cb.side) {
            (Side::Left, Side::Right) | (Side::Right, Side::Left) if same_cell => {
                Some(EdgeKind::IntraCell)
            }
            (Side::Right, Side::Right)
                if ca.slot == cb.slot && ca.row == cb.row && ca.col.abs_diff(cb.col) == 1 =>
            {
                Some(EdgeKind::Horizontal)
            }
            (Side::Left, Side::Left)
                if ca.slot == cb.slot && ca.col == cb.col && ca.row.abs_diff(cb.row) == 1 =>
            {
                Some(EdgeKind::Vertical)
            }
            _ => None,
        }
    }
}

/// An immutable (sub)graph of `C_k` with sorted nodes, canonical edges and
/// CSR adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    params: ChimeraParams,
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    // NodeId index -> position in `nodes`, ABSENT when not present
    position: Vec<u32>,
    adj_start: Vec<usize>,
    adj_node: Vec<u32>,
    adj_edge: Vec<u32>,
}

/// Builds the full Chimera graph `C_k`.
pub fn build_chimera(k: u32) -> Result<Topology> {
    let params = ChimeraParams::new(k)?;
    let nodes: Vec<NodeId> = (0..params.num_nodes() as u32).map(NodeId).collect();
    let mut edges = Vec::with_capacity(params.num_edges());
    let id = |row, col, side, slot| NodeId::from_coord(k, Coord { row, col, side, slot });
    for row in 0..k {
        for col in 0..k {
            for t in 0..4 {
                for u in 0..4 {
                    edges.push((id(row, col, Side::Left, t), id(row, col, Side::Right, u)));
                }
                if col + 1 < k {
                    edges.push((id(row, col, Side::Right, t), id(row, col + 1, Side::Right, t)));
                }
                if row + 1 < k {
                    edges.push((id(row, col, Side::Left, t), id(row + 1, col, Side::Left, t)));
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(Topology::assemble(params, nodes, edges))
}

impl Topology {
    fn assemble(params: ChimeraParams, nodes: Vec<NodeId>, edges: Vec<(NodeId, NodeId)>) -> Self {
        let mut position = vec![ABSENT; params.num_nodes()];
        for (p, v) in nodes.iter().enumerate() {
            position[v.index()] = p as u32;
        }
        let mut degree = vec![0usize; nodes.len()];
        for &(a, b) in &edges {
            degree[position[a.index()] as usize] += 1;
            degree[position[b.index()] as usize] += 1;
        }
        let mut adj_start = Vec::with_capacity(nodes.len() + 1);
        adj_start.push(0);
        for d in &degree {
            adj_start.push(adj_start.last().unwrap() + d);
        }
        let mut fill = adj_start.clone();
        let mut adj_node = vec![0u32; 2 * edges.len()];
        let mut adj_edge = vec![0u32; 2 * edges.len()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            let (pa, pb) = (position[a.index()] as usize, position[b.index()] as usize);
            adj_node[fill[pa]] = pb as u32;
            adj_edge[fill[pa]] = e as u32;
            fill[pa] += 1;
            adj_node[fill[pb]] = pa as u32;
            adj_edge[fill[pb]] = e as u32;
            fill[pb] += 1;
        }
        // neighbour lists sorted by position, which is also NodeId order
        for p in 0..nodes.len() {
            let range = adj_start[p]..adj_start[p + 1];
            let mut pairs: Vec<(u32, u32)> = adj_node[range.clone()]
                .iter()
                .copied()
                .zip(adj_edge[range.clone()].iter().copied())
                .collect();
            pairs.sort_unstable();
            for (slot, (n, e)) in range.zip(pairs) {
                adj_node[slot] = n;
                adj_edge[slot] = e;
            }
        }
        Topology { params, nodes, edges, position, adj_start, adj_node, adj_edge }
    }

    /// Builds a subgraph of `C_k` from explicit node and edge lists,
    /// validating every edge against the Chimera coupling pattern.
    pub fn from_parts(
        k: u32,
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Topology> {
        let params = ChimeraParams::new(k)?;
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        if let Some(v) = nodes.iter().find(|v| !params.contains(**v)) {
            return Err(Error::UnknownNode(v.0));
        }
        let mut present = vec![false; params.num_nodes()];
        for v in &nodes {
            present[v.index()] = true;
        }
        let mut canon = Vec::new();
        for (a, b) in edges {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            if params.edge_kind(a, b).is_none() {
                return Err(Error::NonChimeraEdge(a.0, b.0));
            }
            for v in [a, b] {
                if !present[v.index()] {
                    return Err(Error::UnknownNode(v.0));
                }
            }
            canon.push((a, b));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Topology::assemble(params, nodes, canon))
    }

    /// Restricts the graph to `keep`, retaining every edge with both ends kept.
    pub fn induce_subgraph(&self, keep: impl IntoIterator<Item = NodeId>) -> Result<Topology> {
        let mut kept = vec![false; self.params.num_nodes()];
        for v in keep {
            if self.position(v).is_none() {
                return Err(Error::UnknownNode(v.0));
            }
            kept[v.index()] = true;
        }
        let nodes = self.nodes.iter().copied().filter(|v| kept[v.index()]).collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(a, b)| kept[a.index()] && kept[b.index()])
            .collect();
        Ok(Topology::assemble(self.params, nodes, edges))
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: NodeId) -> Result<Vec<NodeId>> {
        let p = self.position(v).ok_or(Error::UnknownNode(v.0))?;
        Ok(self.adjacent(p).map(|(q, _)| self.nodes[q]).collect())
    }

    pub fn params(&self) -> ChimeraParams {
        self.params
    }

    pub fn k(&self) -> u32 {
        self.params.k
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.position(v).is_some()
    }

    /// Position of `v` in [`Topology::nodes`].
    pub fn position(&self, v: NodeId) -> Option<usize> {
        match self.position.get(v.index()) {
            Some(&p) if p != ABSENT => Some(p as usize),
            _ => None,
        }
    }

    /// Positions of the endpoints of edge `e`.
    pub fn edge_positions(&self, e: usize) -> (usize, usize) {
        let (a, b) = self.edges[e];
        (self.position[a.index()] as usize, self.position[b.index()] as usize)
    }

    /// Iterates `(neighbour position, edge index)` for the node at position `p`.
    pub fn adjacent(&self, p: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let range = self.adj_start[p]..self.adj_start[p + 1];
        self.adj_node[range.clone()]
            .iter()
            .zip(&self.adj_edge[range])
            .map(|(&n, &e)| (n as usize, e as usize))
    }

    pub fn degree(&self, p: usize) -> usize {
        self.adj_start[p + 1] - self.adj_start[p]
    }

    /// Index of the edge `{a, b}`, if present.
    pub fn edge_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let (pa, pb) = (self.position(a)?, self.position(b)?);
        self.adjacent(pa).find(|&(q, _)| q == pb).map(|(_, e)| e)
    }
}
