//! Batch runs over instance grids, reported like a run-time table: one row
//! per (family, graph) with node and edge counts and summary statistics of
//! the per-instance wall-clock times.
//!
//! Generated instance `i` of a row uses seed `seed + i`, the same numbering
//! as the `gen` command, so any row can be regenerated file by file.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::bench::io::read_instance;
use crate::bench::stats::{compute_stats, RunStats};
use crate::error::{Error, Result};
use crate::generators::{generate_on, topology_for, Family};
use crate::instances::{Assignment, Instance};
use crate::solvers::{
    run_restarts, run_restarts_qubo, solve_brute_force_ising, solve_brute_force_qubo, solve_chimera_dp_ising,
    solve_chimera_dp_qubo, HeuristicParams, DEFAULT_BRUTE_FORCE_CAP, DEFAULT_DP_MAX_K,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    BruteForce { cap: usize },
    ChimeraDp { max_k: u32 },
    Heuristic(HeuristicParams),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::BruteForce { .. } => "brute",
            Method::ChimeraDp { .. } => "dp",
            Method::Heuristic(_) => "heur",
        }
    }
}

/// Result of one solve in the instance's own objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub value: i64,
    pub assignment: Assignment,
    pub proven_optimal: bool,
    pub iterations: u64,
    pub elapsed: Duration,
}

pub fn solve_instance(inst: &Instance, method: &Method) -> Result<Solution> {
    macro_rules! wrap {
        ($r:expr, $variant:ident) => {{
            let r = $r;
            Solution {
                value: r.best_value,
                assignment: Assignment::$variant(r.best_assignment),
                proven_optimal: r.proven_optimal,
                iterations: r.iterations,
                elapsed: r.elapsed,
            }
        }};
    }
    Ok(match (inst, method) {
        (Instance::Qubo(q), Method::BruteForce { cap }) => wrap!(solve_brute_force_qubo(q, *cap)?, Binary),
        (Instance::Qubo(q), Method::ChimeraDp { max_k }) => wrap!(solve_chimera_dp_qubo(q, *max_k)?, Binary),
        (Instance::Qubo(q), Method::Heuristic(p)) => wrap!(run_restarts_qubo(q, p)?, Binary),
        (Instance::Ising(i), Method::BruteForce { cap }) => wrap!(solve_brute_force_ising(i, *cap)?, Spin),
        (Instance::Ising(i), Method::ChimeraDp { max_k }) => wrap!(solve_chimera_dp_ising(i, *max_k)?, Spin),
        (Instance::Ising(i), Method::Heuristic(p)) => wrap!(run_restarts(i, p)?, Spin),
    })
}

/// Exact value by whichever oracle applies, if any.
fn exact_value(inst: &Instance) -> Option<i64> {
    let method = if inst.topology().k() <= DEFAULT_DP_MAX_K {
        Method::ChimeraDp { max_k: DEFAULT_DP_MAX_K }
    } else if inst.topology().num_nodes() <= DEFAULT_BRUTE_FORCE_CAP {
        Method::BruteForce { cap: DEFAULT_BRUTE_FORCE_CAP }
    } else {
        return None;
    };
    solve_instance(inst, &method).ok().map(|s| s.value)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceSource {
    Generate { family: Family, ks: Vec<u32>, per_cell: usize, seed: u64, subset: Option<Vec<crate::chimera::NodeId>> },
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub source: InstanceSource,
    pub method: Method,
    /// Also solve exactly (when an oracle applies) and report the gap.
    pub reference: bool,
    /// With a heuristic and a known reference, stop once it is reached.
    pub stop_at_reference: bool,
}

/// One solved (or failed) instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub group: String,
    pub k: u32,
    pub index: usize,
    pub label: String,
    pub nodes: usize,
    pub edges: usize,
    pub value: Option<i64>,
    pub reference: Option<i64>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl InstanceRecord {
    pub fn gap(&self) -> Option<i64> {
        Some(self.value? - self.reference?)
    }
}

/// One table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub group: String,
    pub k: u32,
    pub nodes: usize,
    pub edges: usize,
    pub solved: usize,
    pub failed: usize,
    /// Instances whose value equals the reference.
    pub hits: Option<usize>,
    pub times: Option<RunStats>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub records: Vec<InstanceRecord>,
    pub rows: Vec<ReportRow>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    let mut records = Vec::new();
    let mut run = |group: String, index: usize, label: String, inst: Result<Instance>, k_hint: u32| {
        let inst = match inst {
            Ok(i) => i,
            Err(e) => {
                records.push(InstanceRecord {
                    group,
                    k: k_hint,
                    index,
                    label,
                    nodes: 0,
                    edges: 0,
                    value: None,
                    reference: None,
                    error: Some(e.to_string()),
                    seconds: 0.0,
                });
                return;
            }
        };
        let reference = if spec.reference { exact_value(&inst) } else { None };
        let method = match (&spec.method, reference) {
            (Method::Heuristic(p), Some(r)) if spec.stop_at_reference => {
                Method::Heuristic(HeuristicParams { target: Some(r), ..p.clone() })
            }
            (m, _) => m.clone(),
        };
        let start = Instant::now();
        let outcome = solve_instance(&inst, &method);
        let seconds = start.elapsed().as_secs_f64().max(1e-9);
        let topo = inst.topology();
        let (value, error) = match outcome {
            Ok(s) => (Some(s.value), None),
            Err(e) => (None, Some(e.to_string())),
        };
        records.push(InstanceRecord {
            group,
            k: topo.k(),
            index,
            label,
            nodes: topo.num_nodes(),
            edges: topo.num_edges(),
            value,
            reference,
            error,
            seconds,
        });
    };

    match &spec.source {
        InstanceSource::Generate { family, ks, per_cell, seed, subset } => {
            for &k in ks {
                let topo = topology_for(k, subset.as_deref());
                for i in 0..*per_cell {
                    let s = seed.wrapping_add(i as u64);
                    let inst = topo.clone().and_then(|t| generate_on(*family, t, s));
                    run(family.name().to_string(), i, format!("seed={s}"), inst, k);
                }
            }
        }
        InstanceSource::Files(paths) => {
            for (i, path) in paths.iter().enumerate() {
                let inst = read_instance(path);
                let group = match &inst {
                    Ok(inst) => inst.form().to_string(),
                    Err(_) => "unreadable".to_string(),
                };
                run(group, i, path.display().to_string(), inst, 0);
            }
        }
    }
    Ok(Report { rows: summarize(&records)?, records })
}

fn summarize(records: &[InstanceRecord]) -> Result<Vec<ReportRow>> {
    let mut rows: Vec<(ReportRow, Vec<f64>)> = Vec::new();
    for r in records {
        let key = |row: &ReportRow| row.group == r.group && row.k == r.k && row.nodes == r.nodes && row.edges == r.edges;
        let slot = match rows.iter().position(|(row, _)| key(row)) {
            Some(s) => s,
            None => {
                rows.push((
                    ReportRow {
                        group: r.group.clone(),
                        k: r.k,
                        nodes: r.nodes,
                        edges: r.edges,
                        solved: 0,
                        failed: 0,
                        hits: None,
                        times: None,
                    },
                    Vec::new(),
                ));
                rows.len() - 1
            }
        };
        let (row, times) = &mut rows[slot];
        if r.value.is_some() {
            row.solved += 1;
            times.push(r.seconds);
        } else {
            row.failed += 1;
        }
        if let Some(gap) = r.gap() {
            *row.hits.get_or_insert(0) += usize::from(gap == 0);
        }
    }
    rows.into_iter()
        .map(|(mut row, times)| {
            row.times = match compute_stats(&times) {
                Ok(s) => Some(s),
                Err(Error::EmptySample) => None,
                Err(e) => return Err(e),
            };
            Ok(row)
        })
        .collect()
}

impl Report {
    /// Aligned text table of the rows.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<20} {:>5} {:>7} {:>7} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>6}",
            "group", "graph", "nodes", "edges", "solved", "mean", "g.mean", "min", "max", "std.dev", "hits"
        )
        .unwrap();
        for row in &self.rows {
            let graph = if row.k > 0 { format!("C{}", row.k) } else { "-".into() };
            write!(out, "{:<20} {:>5} {:>7} {:>7} {:>6}", row.group, graph, row.nodes, row.edges, row.solved).unwrap();
            match &row.times {
                Some(t) => write!(
                    out,
                    " {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    t.arithmetic_mean, t.geometric_mean, t.min, t.max, t.std_dev
                )
                .unwrap(),
                None => write!(out, " {:>10} {:>10} {:>10} {:>10} {:>10}", "-", "-", "-", "-", "-").unwrap(),
            }
            let hits = row.hits.map_or("-".to_string(), |h| h.to_string());
            writeln!(out, " {hits:>6}").unwrap();
        }
        out
    }

    /// Per-instance comma-separated values. Every column but `seconds` is a
    /// pure function of the experiment spec.
    pub fn to_csv(&self, with_timings: bool) -> String {
        let mut out = String::from("group,k,index,label,nodes,edges,value,reference,gap,error");
        if with_timings {
            out.push_str(",seconds");
        }
        out.push('\n');
        let opt = |v: Option<i64>| v.map_or(String::new(), |v| v.to_string());
        for r in &self.records {
            let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            write!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.group,
                r.k,
                r.index,
                r.label.replace(',', ";"),
                r.nodes,
                r.edges,
                opt(r.value),
                opt(r.reference),
                opt(r.gap()),
                error
            )
            .unwrap();
            if with_timings {
                write!(out, ",{:.9}", r.seconds).unwrap();
            }
            out.push('\n');
        }
        out
    }
}
