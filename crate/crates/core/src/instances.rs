//! Ising and QUBO instances with exact integer weights.
//!
//! Both forms share [`WeightedGraph`]: one weight per node and one per
//! unordered edge of the connectivity graph. For an Ising instance the edge
//! weights are the couplers `J` and the node weights the fields `h`:
//!
//! ```text
//! E(s) = sum_{ {i,j} in E } J_ij s_i s_j + sum_i h_i s_i,    s in {-1,+1}^n
//! ```
//!
//! For a QUBO instance they are the upper-triangular `Q` and its diagonal:
//!
//! ```text
//! f(x) = sum_{ {i,j} in E } Q_ij x_i x_j + sum_i Q_ii x_i + offset,    x in {0,1}^n
//! ```
//!
//! Objectives are accumulated in `i128` and narrowed back to `i64`, so an
//! overflow surfaces as [`Error::Overflow`] instead of wrapping.

use std::sync::Arc;

use crate::chimera::{NodeId, Topology};
use crate::error::{Error, Result};

/// Node and edge weights over a Chimera (sub)graph. Weights are stored
/// densely, aligned with [`Topology::nodes`] and [`Topology::edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    topology: Arc<Topology>,
    node_weights: Vec<i64>,
    edge_weights: Vec<i64>,
}

impl WeightedGraph {
    /// All-zero weights on `topology`.
    pub fn zeros(topology: Arc<Topology>) -> Self {
        let (n, m) = (topology.num_nodes(), topology.num_edges());
        WeightedGraph { topology, node_weights: vec![0; n], edge_weights: vec![0; m] }
    }

    pub fn from_weights(
        topology: Arc<Topology>,
        node_weights: Vec<i64>,
        edge_weights: Vec<i64>,
    ) -> Result<Self> {
        if node_weights.len() != topology.num_nodes() || edge_weights.len() != topology.num_edges()
        {
            return Err(Error::InvalidParameter(format!(
                "expected {} node and {} edge weights, got {} and {}",
                topology.num_nodes(),
                topology.num_edges(),
                node_weights.len(),
                edge_weights.len()
            )));
        }
        Ok(WeightedGraph { topology, node_weights, edge_weights })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn shared_topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn num_nodes(&self) -> usize {
        self.node_weights.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_weights.len()
    }

    pub fn node_weights(&self) -> &[i64] {
        &self.node_weights
    }

    pub fn edge_weights(&self) -> &[i64] {
        &self.edge_weights
    }

    pub fn node_weight(&self, v: NodeId) -> Option<i64> {
        self.topology.position(v).map(|p| self.node_weights[p])
    }

    pub fn edge_weight(&self, a: NodeId, b: NodeId) -> Option<i64> {
        self.topology.edge_index(a, b).map(|e| self.edge_weights[e])
    }

    pub fn set_node_weight(&mut self, v: NodeId, w: i64) -> Result<()> {
        let p = self.topology.position(v).ok_or(Error::UnknownNode(v.0))?;
        self.node_weights[p] = w;
        Ok(())
    }

    pub fn set_edge_weight(&mut self, a: NodeId, b: NodeId, w: i64) -> Result<()> {
        let e = self.topology.edge_index(a, b).ok_or(Error::MissingEdge(a.0, b.0))?;
        self.edge_weights[e] = w;
        Ok(())
    }

    /// Restriction to the subgraph induced by `keep`.
    pub fn induce(&self, keep: impl IntoIterator<Item = NodeId>) -> Result<WeightedGraph> {
        let sub = self.topology.induce_subgraph(keep)?;
        let node_weights = sub.nodes().iter().map(|&v| self.node_weight(v).unwrap()).collect();
        let edge_weights =
            sub.edges().iter().map(|&(a, b)| self.edge_weight(a, b).unwrap()).collect();
        Ok(WeightedGraph { topology: Arc::new(sub), node_weights, edge_weights })
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.num_nodes() {
            return Err(Error::IncompleteAssignment { expected: self.num_nodes(), got });
        }
        Ok(())
    }
}

/// Ising instance: couplers on edges, fields on nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsingInstance {
    pub graph: WeightedGraph,
}

/// QUBO instance: `Q_ij` on edges, `Q_ii` on nodes, plus a constant offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuboInstance {
    pub graph: WeightedGraph,
    pub offset: i64,
}

/// Spins aligned with the instance's node order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinAssignment(Vec<i8>);

/// Bits aligned with the instance's node order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinaryAssignment(Vec<u8>);

impl SpinAssignment {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v != 1 && **v != -1) {
            return Err(Error::InvalidParameter(format!("spin value {v} is not -1 or +1")));
        }
        Ok(SpinAssignment(values))
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `x = (s + 1) / 2`.
    pub fn to_binary(&self) -> BinaryAssignment {
        BinaryAssignment(self.0.iter().map(|&s| ((s + 1) / 2) as u8).collect())
    }

    pub fn negated(&self) -> SpinAssignment {
        SpinAssignment(self.0.iter().map(|s| -s).collect())
    }
}

impl BinaryAssignment {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v > 1) {
            return Err(Error::InvalidParameter(format!("binary value {v} is not 0 or 1")));
        }
        Ok(BinaryAssignment(values))
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `s = 2x - 1`.
    pub fn to_spins(&self) -> SpinAssignment {
        SpinAssignment(self.0.iter().map(|&x| 2 * x as i8 - 1).collect())
    }
}

fn narrow(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(what))
}

impl IsingInstance {
    pub fn new(graph: WeightedGraph) -> Self {
        IsingInstance { graph }
    }

    pub fn topology(&self) -> &Topology {
        self.graph.topology()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn fields(&self) -> &[i64] {
        self.graph.node_weights()
    }

    pub fn couplers(&self) -> &[i64] {
        self.graph.edge_weights()
    }

    /// Ising energy of `s`, each coupled pair counted once.
    pub fn eval(&self, s: &SpinAssignment) -> Result<i64> {
        self.graph.check_len(s.len())?;
        let s = s.values();
        let topo = self.graph.topology();
        let mut total: i128 = 0;
        for (e, &j) in self.couplers().iter().enumerate() {
            let (a, b) = topo.edge_positions(e);
            total += j as i128 * (s[a] * s[b]) as i128;
        }
        for (&h, &si) in self.fields().iter().zip(s) {
            total += h as i128 * si as i128;
        }
        narrow(total, "evaluating an Ising energy")
    }

    /// Substitutes `s_i = 2 x_i - 1` term by term:
    /// `Q_ij = 4 J_ij`, `Q_ii = 2 h_i - 2 sum_j J_ij`,
    /// `offset = sum J_ij - sum h_i`.
    pub fn to_qubo(&self) -> Result<QuboInstance> {
        let topo = self.graph.topology();
        let n = self.num_nodes();
        let mut diag: Vec<i128> = self.fields().iter().map(|&h| 2 * h as i128).collect();
        let mut offset: i128 = -self.fields().iter().map(|&h| h as i128).sum::<i128>();
        let mut edge_weights = Vec::with_capacity(self.couplers().len());
        for (e, &j) in self.couplers().iter().enumerate() {
            let (a, b) = topo.edge_positions(e);
            edge_weights.push(narrow(4 * j as i128, "scaling couplers")?);
            diag[a] -= 2 * j as i128;
            diag[b] -= 2 * j as i128;
            offset += j as i128;
        }
        let mut node_weights = Vec::with_capacity(n);
        for d in diag {
            node_weights.push(narrow(d, "computing linear QUBO terms")?);
        }
        Ok(QuboInstance {
            graph: WeightedGraph::from_weights(
                self.graph.shared_topology().clone(),
                node_weights,
                edge_weights,
            )?,
            offset: narrow(offset, "computing the QUBO offset")?,
        })
    }

    /// Same couplers, all fields zero.
    pub fn strip_fields(&self) -> IsingInstance {
        let mut graph = self.graph.clone();
        graph.node_weights.iter_mut().for_each(|h| *h = 0);
        IsingInstance { graph }
    }
}

/// Ising image of a QUBO instance, scaled by four to stay integral:
/// `4 f(x) = E(s) + offset` with `s = 2x - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledIsing {
    pub instance: IsingInstance,
    pub offset: i64,
}

impl ScaledIsing {
    pub const SCALE: i64 = 4;

    /// Maps an energy of [`ScaledIsing::instance`] back to the QUBO objective.
    pub fn qubo_value(&self, energy: i64) -> i64 {
        (energy + self.offset) / Self::SCALE
    }
}

impl QuboInstance {
    pub fn new(graph: WeightedGraph, offset: i64) -> Self {
        QuboInstance { graph, offset }
    }

    pub fn topology(&self) -> &Topology {
        self.graph.topology()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn linear(&self) -> &[i64] {
        self.graph.node_weights()
    }

    pub fn quadratic(&self) -> &[i64] {
        self.graph.edge_weights()
    }

    pub fn eval(&self, x: &BinaryAssignment) -> Result<i64> {
        self.graph.check_len(x.len())?;
        let x = x.values();
        let topo = self.graph.topology();
        let mut total: i128 = self.offset as i128;
        for (e, &q) in self.quadratic().iter().enumerate() {
            let (a, b) = topo.edge_positions(e);
            total += q as i128 * (x[a] & x[b]) as i128;
        }
        for (&q, &xi) in self.linear().iter().zip(x) {
            total += q as i128 * xi as i128;
        }
        narrow(total, "evaluating a QUBO objective")
    }

    /// Inverse of [`IsingInstance::to_qubo`] up to the factor four:
    /// `J_ij = Q_ij`, `h_i = 2 Q_ii + sum_j Q_ij`,
    /// `offset = sum Q_ij + 2 sum Q_ii + 4 offset`.
    pub fn to_ising(&self) -> Result<ScaledIsing> {
        let topo = self.graph.topology();
        let mut fields: Vec<i128> = self.linear().iter().map(|&q| 2 * q as i128).collect();
        let mut offset: i128 =
            4 * self.offset as i128 + self.linear().iter().map(|&q| 2 * q as i128).sum::<i128>();
        for (e, &q) in self.quadratic().iter().enumerate() {
            let (a, b) = topo.edge_positions(e);
            fields[a] += q as i128;
            fields[b] += q as i128;
            offset += q as i128;
        }
        let mut node_weights = Vec::with_capacity(fields.len());
        for h in fields {
            node_weights.push(narrow(h, "computing Ising fields")?);
        }
        let graph = WeightedGraph::from_weights(
            self.graph.shared_topology().clone(),
            node_weights,
            self.quadratic().to_vec(),
        )?;
        Ok(ScaledIsing {
            instance: IsingInstance { graph },
            offset: narrow(offset, "computing the Ising offset")?,
        })
    }
}

/// Either form of instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Qubo(QuboInstance),
    Ising(IsingInstance),
}

/// Either kind of assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assignment {
    Binary(BinaryAssignment),
    Spin(SpinAssignment),
}

impl Instance {
    pub fn topology(&self) -> &Topology {
        self.graph().topology()
    }

    pub fn graph(&self) -> &WeightedGraph {
        match self {
            Instance::Qubo(q) => &q.graph,
            Instance::Ising(i) => &i.graph,
        }
    }

    pub fn form(&self) -> &'static str {
        match self {
            Instance::Qubo(_) => "qubo",
            Instance::Ising(_) => "ising",
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<i64> {
        match (self, a) {
            (Instance::Qubo(q), Assignment::Binary(x)) => q.eval(x),
            (Instance::Qubo(q), Assignment::Spin(s)) => q.eval(&s.to_binary()),
            (Instance::Ising(i), Assignment::Spin(s)) => i.eval(s),
            (Instance::Ising(i), Assignment::Binary(x)) => i.eval(&x.to_spins()),
        }
    }
}
