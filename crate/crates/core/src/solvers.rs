//! Exact oracles and the randomized local-search heuristic.
//!
//! * [`solve_brute_force_qubo`] enumerates assignments in Gray-code order.
//!   A greedy independent set of variables is minimized in closed form for
//!   every enumerated assignment of the rest, so `2^(n - |I|)` steps of
//!   `O(degree)` each cover all `2^n` points.
//! * [`solve_chimera_dp_qubo`] sweeps unit cells row by row, keeping the
//!   minimal energy per frontier configuration (left spins of the last `k`
//!   cells plus right spins of the previous cell).
//! * [`solve_local_search`] is steepest single-flip descent with random
//!   fixed-size perturbations at local minima.
//!
//! The exact solvers work on the QUBO form; Ising instances go through
//! [`IsingInstance::to_qubo`] and back, which preserves values pointwise and
//! maps the lexicographic order of `x` onto that of `s`.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::chimera::{Coord, NodeId, Side};
use crate::error::{Error, Result};
use crate::generators::SplitMix64;
use crate::instances::{BinaryAssignment, IsingInstance, QuboInstance, SpinAssignment};

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 26;
pub const DEFAULT_DP_MAX_K: u32 = 4;

/// Outcome of any solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult<A> {
    pub best_value: i64,
    pub best_assignment: A,
    pub proven_optimal: bool,
    pub iterations: u64,
    pub elapsed: Duration,
}

impl<A> SolveResult<A> {
    fn map<B>(self, value: impl FnOnce(i64) -> i64, f: impl FnOnce(A) -> B) -> SolveResult<B> {
        SolveResult {
            best_value: value(self.best_value),
            best_assignment: f(self.best_assignment),
            proven_optimal: self.proven_optimal,
            iterations: self.iterations,
            elapsed: self.elapsed,
        }
    }
}

/// Sparse QUBO with position-indexed adjacency.
struct Kernel {
    linear: Vec<i64>,
    adj: Vec<Vec<(usize, i64)>>,
    offset: i64,
}

impl Kernel {
    fn new(inst: &QuboInstance) -> Self {
        let topo = inst.topology();
        let mut adj = vec![Vec::new(); topo.num_nodes()];
        for (e, &q) in inst.quadratic().iter().enumerate() {
            if q != 0 {
                let (a, b) = topo.edge_positions(e);
                adj[a].push((b, q));
                adj[b].push((a, q));
            }
        }
        Kernel { linear: inst.linear().to_vec(), adj, offset: inst.offset }
    }

    fn eval(&self, x: &[u8]) -> i64 {
        let mut total = self.offset;
        for (p, nbrs) in self.adj.iter().enumerate() {
            if x[p] == 1 {
                total += self.linear[p];
                total += nbrs.iter().filter(|&&(q, _)| q > p && x[q] == 1).map(|&(_, w)| w).sum::<i64>();
            }
        }
        total
    }
}

/// Enumeration state: enumerated variables carry their own local field,
/// eliminated variables the field induced by their (enumerated) neighbours.
struct GrayEnumerator<'a> {
    kernel: &'a Kernel,
    n: usize,
    eliminated: Vec<bool>,
    x: Vec<u8>,
    field: Vec<i64>,
    base: i64,
    completion: i64,
    key: u128,
}

impl<'a> GrayEnumerator<'a> {
    fn new(kernel: &'a Kernel) -> Self {
        let n = kernel.linear.len();
        let mut eliminated = vec![false; n];
        for p in 0..n {
            if kernel.adj[p].iter().all(|&(q, _)| !eliminated[q]) {
                eliminated[p] = true;
            }
        }
        let mut e = GrayEnumerator {
            kernel,
            n,
            eliminated,
            x: vec![0; n],
            field: kernel.linear.clone(),
            base: kernel.offset,
            completion: 0,
            key: 0,
        };
        for p in 0..n {
            if e.eliminated[p] && e.field[p] < 0 {
                e.completion += e.field[p];
                e.key |= e.bit(p);
            }
        }
        e
    }

    fn bit(&self, p: usize) -> u128 {
        1u128 << (self.n - 1 - p)
    }

    fn value(&self) -> i64 {
        self.base + self.completion
    }

    fn flip(&mut self, v: usize) {
        let step: i64 = if self.x[v] == 0 { 1 } else { -1 };
        self.base += step * self.field[v];
        self.x[v] ^= 1;
        self.key ^= self.bit(v);
        for &(q, w) in &self.kernel.adj[v] {
            if self.eliminated[q] {
                let old = self.field[q];
                let new = old + step * w;
                self.field[q] = new;
                self.completion += new.min(0) - old.min(0);
                if (old < 0) != (new < 0) {
                    self.key ^= self.bit(q);
                }
            } else {
                self.field[q] += step * w;
            }
        }
    }

    fn assignment(&self) -> Vec<u8> {
        (0..self.n)
            .map(|p| if self.eliminated[p] { u8::from(self.field[p] < 0) } else { self.x[p] })
            .collect()
    }

    fn fresh_value(&self) -> i64 {
        self.kernel.eval(&self.assignment())
    }
}

/// Exact minimum by exhaustive enumeration; ties go to the lexicographically
/// smallest assignment in node order.
pub fn solve_brute_force_qubo(inst: &QuboInstance, cap: usize) -> Result<SolveResult<BinaryAssignment>> {
    let n = inst.num_nodes();
    if n > cap || n > 128 {
        return Err(Error::TooLarge { n, cap: cap.min(128) });
    }
    let start = Instant::now();
    let kernel = Kernel::new(inst);
    let mut state = GrayEnumerator::new(&kernel);
    let order: Vec<usize> = (0..n).filter(|&p| !state.eliminated[p]).collect();
    if order.len() >= 64 {
        return Err(Error::TooLarge { n, cap });
    }
    let mut best = (state.value(), state.key);
    let mut best_x = state.assignment();
    let steps: u64 = 1 << order.len();
    for t in 1..steps {
        state.flip(order[t.trailing_zeros() as usize]);
        if cfg!(debug_assertions) && t % 1024 == 0 {
            debug_assert_eq!(state.value(), state.fresh_value());
        }
        let candidate = (state.value(), state.key);
        if candidate < best {
            best = candidate;
            best_x = state.assignment();
        }
    }
    Ok(SolveResult {
        best_value: best.0,
        best_assignment: BinaryAssignment::new(best_x)?,
        proven_optimal: true,
        iterations: steps,
        elapsed: start.elapsed(),
    })
}

pub fn solve_brute_force_ising(inst: &IsingInstance, cap: usize) -> Result<SolveResult<SpinAssignment>> {
    Ok(solve_brute_force_qubo(&inst.to_qubo()?, cap)?.map(|v| v, |x| x.to_spins()))
}

/// Dense coefficients of an instance embedded in the full `C_k`; absent nodes
/// carry zero weights.
struct CellModel {
    k: usize,
    linear: Vec<i64>,
    // [cell][left slot][right slot]
    intra: Vec<[[i64; 4]; 4]>,
    // coupling of right slot t to the same slot of the cell on the left
    horizontal: Vec<[i64; 4]>,
    // coupling of left slot t to the same slot of the cell above
    vertical: Vec<[i64; 4]>,
}

impl CellModel {
    fn new(inst: &QuboInstance) -> Result<Self> {
        let topo = inst.topology();
        let k = topo.k();
        let cells = (k * k) as usize;
        let mut m = CellModel {
            k: k as usize,
            linear: vec![0; 8 * cells],
            intra: vec![[[0; 4]; 4]; cells],
            horizontal: vec![[0; 4]; cells],
            vertical: vec![[0; 4]; cells],
        };
        for (&v, &w) in topo.nodes().iter().zip(inst.linear()) {
            m.linear[v.index()] = w;
        }
        for (&(a, b), &w) in topo.edges().iter().zip(inst.quadratic()) {
            let (ca, cb) = (a.coord(k), b.coord(k));
            let cell = |c: Coord| (c.row * k + c.col) as usize;
            match (ca.side, cb.side) {
                (Side::Left, Side::Right) if cell(ca) == cell(cb) => m.intra[cell(ca)][ca.slot as usize][cb.slot as usize] += w,
                (Side::Right, Side::Left) if cell(ca) == cell(cb) => m.intra[cell(ca)][cb.slot as usize][ca.slot as usize] += w,
                (Side::Right, Side::Right) if ca.row == cb.row && ca.slot == cb.slot && ca.col + 1 == cb.col => {
                    m.horizontal[cell(cb)][cb.slot as usize] += w
                }
                (Side::Left, Side::Left) if ca.col == cb.col && ca.slot == cb.slot && ca.row + 1 == cb.row => {
                    m.vertical[cell(cb)][cb.slot as usize] += w
                }
                _ => return Err(Error::NonChimeraEdge(a.0, b.0)),
            }
        }
        Ok(m)
    }
}

/// A frontier bit replaced by the spin of a newly processed node.
struct Stage {
    bit: usize,
    node: usize,
    // choice[s] = previous value of `bit` behind the minimum at state s
    choice: Vec<u64>,
}

/// Exact minimum over a Chimera subgraph with `k <= max_k` by a row-major
/// sweep over unit cells. The frontier holds the left spins of the `k` most
/// recent cells and the right spins of the previous cell, `4k + 4` bits.
pub fn solve_chimera_dp_qubo(inst: &QuboInstance, max_k: u32) -> Result<SolveResult<BinaryAssignment>> {
    let k = inst.topology().k();
    if k > max_k {
        return Err(Error::KTooLarge { k, max_k });
    }
    let start = Instant::now();
    let model = CellModel::new(inst)?;
    let k = model.k;
    let width = 4 * k + 4;
    let size = 1usize << width;
    let words = size.div_ceil(64);
    let mut table = vec![0i64; size];
    let mut stages: Vec<Stage> = Vec::with_capacity(8 * k * k);
    let mut local = [0i64; 256];

    for cell in 0..k * k {
        let (row, col) = (cell / k, cell % k);
        for slot in 0..8 {
            let (bit, coupling) = if slot < 4 {
                (4 * col + slot, if row > 0 { model.vertical[cell][slot] } else { 0 })
            } else {
                (4 * k + slot - 4, if col > 0 { model.horizontal[cell][slot - 4] } else { 0 })
            };
            let mask = 1usize << bit;
            let mut choice = vec![0u64; words];
            for s0 in (0..size).filter(|s| s & mask == 0) {
                let s1 = s0 | mask;
                let (old0, old1) = (table[s0], table[s1]);
                // new bit 0: previous bit is free of cost
                if old1 < old0 {
                    table[s0] = old1;
                    choice[s0 / 64] |= 1 << (s0 % 64);
                } else {
                    table[s0] = old0;
                }
                // new bit 1: coupling paid when the previous bit is also 1
                if old1 + coupling < old0 {
                    table[s1] = old1 + coupling;
                    choice[s1 / 64] |= 1 << (s1 % 64);
                } else {
                    table[s1] = old0;
                }
            }
            stages.push(Stage { bit, node: 8 * cell + slot, choice });
        }
        for (cfg, entry) in local.iter_mut().enumerate() {
            let bit = |i: usize| ((cfg >> i) & 1) as i64;
            let mut e = 0;
            for t in 0..4 {
                e += model.linear[8 * cell + t] * bit(t) + model.linear[8 * cell + 4 + t] * bit(4 + t);
                for u in 0..4 {
                    e += model.intra[cell][t][u] * bit(t) * bit(4 + u);
                }
            }
            *entry = e;
        }
        for (s, v) in table.iter_mut().enumerate() {
            let cfg = ((s >> (4 * col)) & 0xF) | (((s >> (4 * k)) & 0xF) << 4);
            *v += local[cfg];
        }
    }

    let (mut state, &best) = table.iter().enumerate().min_by_key(|&(s, v)| (*v, s)).unwrap();
    let mut full_x = vec![0u8; 8 * k * k];
    for stage in stages.iter().rev() {
        full_x[stage.node] = ((state >> stage.bit) & 1) as u8;
        let prev = (stage.choice[state / 64] >> (state % 64)) & 1;
        state = (state & !(1 << stage.bit)) | ((prev as usize) << stage.bit);
    }
    let x: Vec<u8> = inst.topology().nodes().iter().map(|v: &NodeId| full_x[v.index()]).collect();
    Ok(SolveResult {
        best_value: best + inst.offset,
        best_assignment: BinaryAssignment::new(x)?,
        proven_optimal: true,
        iterations: (stages.len() * size) as u64,
        elapsed: start.elapsed(),
    })
}

pub fn solve_chimera_dp_ising(inst: &IsingInstance, max_k: u32) -> Result<SolveResult<SpinAssignment>> {
    Ok(solve_chimera_dp_qubo(&inst.to_qubo()?, max_k)?.map(|v| v, |x| x.to_spins()))
}

/// Stopping rule of a heuristic run; it stops at whichever limit comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Perturbation rounds after the initial descent.
    pub max_rounds: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn rounds(n: u64) -> Self {
        Budget { max_rounds: Some(n), max_time: None }
    }

    pub fn time(d: Duration) -> Self {
        Budget { max_rounds: None, max_time: Some(d) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicParams {
    pub restarts: u32,
    /// Perturbation size as the fraction `num / den` of the node count.
    pub perturbation: (u32, u32),
    pub budget: Budget,
    pub seed: u64,
    /// Stop as soon as this energy is reached.
    pub target: Option<i64>,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            restarts: 1,
            perturbation: (1, 30),
            budget: Budget::time(Duration::from_millis(250)),
            seed: 0,
            target: None,
        }
    }
}

impl HeuristicParams {
    /// `ceil(n * num / den)`, clamped to `[1, n]`.
    pub fn perturbation_size(&self, n: usize) -> usize {
        let (num, den) = (self.perturbation.0 as usize, self.perturbation.1.max(1) as usize);
        (n * num).div_ceil(den).clamp(1, n.max(1))
    }
}

/// State of one local-search trajectory in spin space.
pub struct LocalSearch<'a> {
    inst: &'a IsingInstance,
    adj: Vec<Vec<(usize, i64)>>,
    spins: Vec<i8>,
    // h_i + sum_j J_ij s_j
    field: Vec<i64>,
    energy: i64,
    moves: BTreeSet<(i64, usize)>,
    best_energy: i64,
    best_spins: Vec<i8>,
    rng: SplitMix64,
    pool: Vec<usize>,
    perturbation_size: usize,
    flips: u64,
}

impl<'a> LocalSearch<'a> {
    /// Starts from a uniformly random assignment drawn from `params.seed`.
    pub fn new(inst: &'a IsingInstance, params: &HeuristicParams) -> Result<Self> {
        let n = inst.num_nodes();
        let mut rng = SplitMix64::new(params.seed);
        let spins: Vec<i8> = (0..n).map(|_| if rng.coin() { 1 } else { -1 }).collect();
        let topo = inst.topology();
        let mut adj = vec![Vec::new(); n];
        for (e, &j) in inst.couplers().iter().enumerate() {
            if j != 0 {
                let (a, b) = topo.edge_positions(e);
                adj[a].push((b, j));
                adj[b].push((a, j));
            }
        }
        let field: Vec<i64> = (0..n)
            .map(|p| inst.fields()[p] + adj[p].iter().map(|&(q, j)| j * spins[q] as i64).sum::<i64>())
            .collect();
        let energy = inst.eval(&SpinAssignment::new(spins.clone())?)?;
        let mut search = LocalSearch {
            inst,
            adj,
            spins: spins.clone(),
            field,
            energy,
            moves: BTreeSet::new(),
            best_energy: energy,
            best_spins: spins,
            rng,
            pool: (0..n).collect(),
            perturbation_size: params.perturbation_size(n),
            flips: 0,
        };
        search.moves = (0..n).map(|p| (search.delta(p), p)).collect();
        Ok(search)
    }

    /// Energy change of flipping the node at position `p`.
    pub fn delta(&self, p: usize) -> i64 {
        -2 * self.spins[p] as i64 * self.field[p]
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn best_energy(&self) -> i64 {
        self.best_energy
    }

    pub fn best_spins(&self) -> &[i8] {
        &self.best_spins
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn has_improving_flip(&self) -> bool {
        (0..self.spins.len()).any(|p| self.delta(p) < 0)
    }

    fn flip(&mut self, p: usize) {
        self.moves.remove(&(self.delta(p), p));
        self.energy += self.delta(p);
        self.spins[p] = -self.spins[p];
        self.moves.insert((self.delta(p), p));
        let s = self.spins[p] as i64;
        for i in 0..self.adj[p].len() {
            let (q, j) = self.adj[p][i];
            self.moves.remove(&(self.delta(q), q));
            self.field[q] += 2 * j * s;
            self.moves.insert((self.delta(q), q));
        }
        self.flips += 1;
    }

    fn record(&mut self) {
        if self.energy < self.best_energy {
            self.best_energy = self.energy;
            self.best_spins.copy_from_slice(&self.spins);
        }
    }

    /// Repeatedly takes the strictly best single flip (lowest index on ties)
    /// until none improves.
    pub fn descend(&mut self) {
        while let Some(&(d, p)) = self.moves.first() {
            if d >= 0 {
                break;
            }
            self.flip(p);
        }
        self.record();
    }

    /// Flips a uniformly random subset of the fixed perturbation size.
    pub fn perturb(&mut self) {
        let n = self.pool.len();
        for i in 0..self.perturbation_size.min(n) {
            let j = i + self.rng.below((n - i) as u64) as usize;
            self.pool.swap(i, j);
            let p = self.pool[i];
            self.flip(p);
            self.record();
        }
    }
}

/// One heuristic trajectory. Deterministic per seed when the budget is a
/// round count.
pub fn solve_local_search(inst: &IsingInstance, params: &HeuristicParams) -> Result<SolveResult<SpinAssignment>> {
    solve_local_search_observed(inst, params, |_| {})
}

/// As [`solve_local_search`], calling `at_local_minimum` before every
/// perturbation.
pub fn solve_local_search_observed(
    inst: &IsingInstance,
    params: &HeuristicParams,
    mut at_local_minimum: impl FnMut(&LocalSearch<'_>),
) -> Result<SolveResult<SpinAssignment>> {
    if inst.num_nodes() == 0 {
        return Err(Error::InvalidParameter("instance has no nodes".into()));
    }
    let start = Instant::now();
    let mut search = LocalSearch::new(inst, params)?;
    search.descend();
    let mut rounds = 0u64;
    loop {
        if params.target.is_some_and(|t| search.best_energy <= t)
            || params.budget.max_rounds.is_some_and(|r| rounds >= r)
            || params.budget.max_time.is_some_and(|t| start.elapsed() >= t)
        {
            break;
        }
        if params.budget.max_rounds.is_none() && params.budget.max_time.is_none() {
            break;
        }
        at_local_minimum(&search);
        search.perturb();
        search.descend();
        rounds += 1;
    }
    debug_assert_eq!(
        search.inst.eval(&SpinAssignment::new(search.best_spins.clone())?)?,
        search.best_energy
    );
    Ok(SolveResult {
        best_value: search.best_energy,
        best_assignment: SpinAssignment::new(search.best_spins)?,
        proven_optimal: false,
        iterations: rounds,
        elapsed: start.elapsed(),
    })
}

/// Runs `params.restarts` trajectories with seeds `seed, seed + 1, ...`
/// in parallel and keeps the best, preferring the lowest restart index.
pub fn run_restarts(inst: &IsingInstance, params: &HeuristicParams) -> Result<SolveResult<SpinAssignment>> {
    if params.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let start = Instant::now();
    let runs: Vec<SolveResult<SpinAssignment>> = (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            let p = HeuristicParams { seed: params.seed.wrapping_add(r as u64), ..params.clone() };
            solve_local_search(inst, &p)
        })
        .collect::<Result<_>>()?;
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let best = runs.into_iter().enumerate().min_by_key(|(i, r)| (r.best_value, *i)).unwrap().1;
    Ok(SolveResult { iterations, elapsed: start.elapsed(), ..best })
}

/// Heuristic on a QUBO instance through its scaled Ising image.
pub fn run_restarts_qubo(inst: &QuboInstance, params: &HeuristicParams) -> Result<SolveResult<BinaryAssignment>> {
    let image = inst.to_ising()?;
    let params = HeuristicParams {
        target: params.target.map(|t| t * crate::instances::ScaledIsing::SCALE - image.offset),
        ..params.clone()
    };
    Ok(run_restarts(&image.instance, &params)?.map(|e| image.qubo_value(e), |s| s.to_binary()))
}
