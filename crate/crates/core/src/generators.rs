//! Seeded instance families on Chimera graphs.
//!
//! All randomness comes from [`SplitMix64`], whose update is fixed here so
//! that any implementation reproduces the same instances bit for bit:
//!
//! ```text
//! state <- state + 0x9E3779B97F4A7C15            (mod 2^64)
//! z     <- state
//! z     <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
//! z     <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
//! out   <- z ^ (z >> 31)
//! ```
//!
//! A `+-1` draw takes the top bit of one output (`1 -> +1`, `0 -> -1`).
//! A draw from `[lo, hi]` with `span = hi - lo + 1` rejects outputs below
//! `2^64 mod span` and returns `lo + out mod span`.
//!
//! Weights are drawn edges first, in canonical edge order, then nodes in
//! index order. With-fields and zero-field Ising siblings under one seed
//! therefore share their couplers.

use std::sync::Arc;

use crate::chimera::{build_chimera, NodeId, Topology};
use crate::error::{Error, Result};
use crate::instances::{Instance, IsingInstance, QuboInstance, WeightedGraph};

/// SplitMix64 generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn sign(&mut self) -> i64 {
        if self.next_u64() >> 63 == 1 {
            1
        } else {
            -1
        }
    }

    /// Uniform integer in `[0, span)`; `span = 0` means the full 64-bit range.
    pub fn below(&mut self, span: u64) -> u64 {
        if span == 0 {
            return self.next_u64();
        }
        let threshold = span.wrapping_neg() % span;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % span;
            }
        }
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi as i128 - lo as i128 + 1) as u128;
        let span = if span == 1 << 64 { 0 } else { span as u64 };
        lo.wrapping_add(self.below(span) as i64)
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Instance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// QUBO, every weight uniform on `{-1, +1}`.
    UniformPm1,
    /// QUBO, every weight uniform on the integers of `[lo, hi]`.
    UniformIntRange { lo: i64, hi: i64 },
    /// Ising, couplers and fields uniform on `{-1, +1}`.
    IsingWithFields,
    /// Ising, couplers uniform on `{-1, +1}`, fields zero.
    IsingZeroField,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::UniformPm1 => "uniform-pm1",
            Family::UniformIntRange { .. } => "uniform-int-range",
            Family::IsingWithFields => "ising-with-fields",
            Family::IsingZeroField => "ising-zero-field",
        }
    }
}

/// Everything needed to regenerate one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    pub k: u32,
    pub node_subset: Option<Vec<NodeId>>,
    pub seed: u64,
}

impl GenSpec {
    pub fn generate(&self) -> Result<Instance> {
        let topo = topology_for(self.k, self.node_subset.as_deref())?;
        generate_on(self.family, topo, self.seed)
    }
}

/// Full `C_k`, or the subgraph of it induced by `subset`.
pub fn topology_for(k: u32, subset: Option<&[NodeId]>) -> Result<Arc<Topology>> {
    let full = build_chimera(k)?;
    Ok(Arc::new(match subset {
        Some(keep) => full.induce_subgraph(keep.iter().copied())?,
        None => full,
    }))
}

/// Generates an instance of `family` on a prebuilt topology.
pub fn generate_on(family: Family, topology: Arc<Topology>, seed: u64) -> Result<Instance> {
    let mut rng = SplitMix64::new(seed);
    let (n, m) = (topology.num_nodes(), topology.num_edges());
    let draw = |rng: &mut SplitMix64, count: usize, f: &mut dyn FnMut(&mut SplitMix64) -> i64| {
        (0..count).map(|_| f(rng)).collect::<Vec<i64>>()
    };
    Ok(match family {
        Family::UniformPm1 => {
            let edges = draw(&mut rng, m, &mut SplitMix64::sign);
            let nodes = draw(&mut rng, n, &mut SplitMix64::sign);
            Instance::Qubo(QuboInstance::new(WeightedGraph::from_weights(topology, nodes, edges)?, 0))
        }
        Family::UniformIntRange { lo, hi } => {
            if lo > hi {
                return Err(Error::InvalidRange { lo, hi });
            }
            let edges = draw(&mut rng, m, &mut |r| r.range(lo, hi));
            let nodes = draw(&mut rng, n, &mut |r| r.range(lo, hi));
            Instance::Qubo(QuboInstance::new(WeightedGraph::from_weights(topology, nodes, edges)?, 0))
        }
        Family::IsingWithFields => {
            let edges = draw(&mut rng, m, &mut SplitMix64::sign);
            let nodes = draw(&mut rng, n, &mut SplitMix64::sign);
            Instance::Ising(IsingInstance::new(WeightedGraph::from_weights(topology, nodes, edges)?))
        }
        Family::IsingZeroField => {
            let edges = draw(&mut rng, m, &mut SplitMix64::sign);
            Instance::Ising(IsingInstance::new(WeightedGraph::from_weights(
                topology,
                vec![0; n],
                edges,
            )?))
        }
    })
}

pub fn gen_qubo_pm1(k: u32, seed: u64, subset: Option<&[NodeId]>) -> Result<QuboInstance> {
    match generate_on(Family::UniformPm1, topology_for(k, subset)?, seed)? {
        Instance::Qubo(q) => Ok(q),
        Instance::Ising(_) => unreachable!(),
    }
}

pub fn gen_qubo_range(
    k: u32,
    lo: i64,
    hi: i64,
    seed: u64,
    subset: Option<&[NodeId]>,
) -> Result<QuboInstance> {
    if lo > hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    match generate_on(Family::UniformIntRange { lo, hi }, topology_for(k, subset)?, seed)? {
        Instance::Qubo(q) => Ok(q),
        Instance::Ising(_) => unreachable!(),
    }
}

pub fn gen_ising_fields(k: u32, seed: u64, subset: Option<&[NodeId]>) -> Result<IsingInstance> {
    match generate_on(Family::IsingWithFields, topology_for(k, subset)?, seed)? {
        Instance::Ising(i) => Ok(i),
        Instance::Qubo(_) => unreachable!(),
    }
}

pub fn gen_ising_zero_field(k: u32, seed: u64, subset: Option<&[NodeId]>) -> Result<IsingInstance> {
    match generate_on(Family::IsingZeroField, topology_for(k, subset)?, seed)? {
        Instance::Ising(i) => Ok(i),
        Instance::Qubo(_) => unreachable!(),
    }
}

/// Uniformly random subset of `C_k` with `size` nodes, in sorted order.
pub fn random_subset(k: u32, size: usize, seed: u64) -> Result<Vec<NodeId>> {
    let total = crate::chimera::ChimeraParams::new(k)?.num_nodes();
    if size > total {
        return Err(Error::InvalidParameter(format!(
            "subset of {size} nodes requested from {total}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut ids: Vec<u32> = (0..total as u32).collect();
    for i in 0..size {
        let j = i + rng.below((total - i) as u64) as usize;
        ids.swap(i, j);
    }
    let mut keep: Vec<NodeId> = ids[..size].iter().map(|&i| NodeId(i)).collect();
    keep.sort_unstable();
    Ok(keep)
}
