//! Reference evaluators shared by the integration tests. They work from the
//! raw weight lists only and never call the library's own evaluators.
#![allow(dead_code)]

use chimera_qubo::{IsingInstance, QuboInstance, Topology};

/// Position of each edge endpoint, from a plain linear scan.
pub fn edge_ends(topo: &Topology) -> Vec<(usize, usize)> {
    let nodes = topo.nodes();
    let pos = |v| nodes.iter().position(|&u| u == v).unwrap();
    topo.edges().iter().map(|&(a, b)| (pos(a), pos(b))).collect()
}

pub fn ising_energy(inst: &IsingInstance, s: &[i8]) -> i64 {
    let ends = edge_ends(inst.topology());
    let mut e = 0;
    for (&(a, b), &j) in ends.iter().zip(inst.couplers()) {
        e += j * s[a] as i64 * s[b] as i64;
    }
    for (&h, &si) in inst.fields().iter().zip(s) {
        e += h * si as i64;
    }
    e
}

pub fn qubo_value(inst: &QuboInstance, x: &[u8]) -> i64 {
    let ends = edge_ends(inst.topology());
    let mut f = inst.offset;
    for (&(a, b), &q) in ends.iter().zip(inst.quadratic()) {
        f += q * (x[a] & x[b]) as i64;
    }
    for (&q, &xi) in inst.linear().iter().zip(x) {
        f += q * xi as i64;
    }
    f
}

/// Bits of `mask` as a 0/1 vector of length `n`.
pub fn bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

pub fn spins(mask: u64, n: usize) -> Vec<i8> {
    (0..n).map(|i| if (mask >> i) & 1 == 1 { 1 } else { -1 }).collect()
}

/// Plain enumeration of every binary point.
pub fn qubo_min(inst: &QuboInstance) -> i64 {
    let n = inst.num_nodes();
    (0..1u64 << n).map(|m| qubo_value(inst, &bits(m, n))).min().unwrap()
}

pub fn ising_min(inst: &IsingInstance) -> i64 {
    let n = inst.num_nodes();
    (0..1u64 << n).map(|m| ising_energy(inst, &spins(m, n))).min().unwrap()
}
