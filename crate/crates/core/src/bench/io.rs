//! Plain-text instance files.
//!
//! ```text
//! # comments start with '#'
//! <form> <k> <n> <m> [offset]
//! i j w
//! ...
//! ```
//!
//! `form` is `qubo` or `ising`. Each record line holds two 0-based node ids
//! and an integer weight: `i == j` is a node weight (`h_i` or `Q_ii`),
//! `i < j` an edge weight (`J_ij` or `Q_ij`). Records are strictly increasing
//! in `(i, j)`. The node set is every id with a node record or an incident
//! edge; it must have `n` members, and there must be exactly `m` edge
//! records. The optional `offset` (QUBO only) is the objective constant.
//! The writer emits a node record for every node, so zero-weight isolated
//! nodes survive a round trip.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::chimera::{ChimeraParams, NodeId, Topology};
use crate::error::{Error, Result};
use crate::instances::{Instance, IsingInstance, QuboInstance, WeightedGraph};

/// Largest grid dimension accepted from a file.
pub const MAX_FILE_K: u32 = 512;

pub fn serialize_instance(inst: &Instance) -> String {
    let graph = inst.graph();
    let topo = graph.topology();
    let mut out = String::new();
    write!(out, "{} {} {} {}", inst.form(), topo.k(), topo.num_nodes(), topo.num_edges()).unwrap();
    if let Instance::Qubo(q) = inst {
        if q.offset != 0 {
            write!(out, " {}", q.offset).unwrap();
        }
    }
    out.push('\n');
    let mut records: Vec<(NodeId, NodeId, i64)> = topo
        .nodes()
        .iter()
        .zip(graph.node_weights())
        .map(|(&v, &w)| (v, v, w))
        .chain(topo.edges().iter().zip(graph.edge_weights()).map(|(&(a, b), &w)| (a, b, w)))
        .collect();
    records.sort_unstable_by_key(|r| (r.0, r.1));
    for (i, j, w) in records {
        writeln!(out, "{i} {j} {w}").unwrap();
    }
    out
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    std::fs::write(path, serialize_instance(inst))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read(path)?)
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} `{tok}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    Qubo,
    Ising,
}

fn parse_form(tok: &str, line: usize) -> Result<Form> {
    match tok {
        "qubo" => Ok(Form::Qubo),
        "ising" => Ok(Form::Ising),
        other => Err(perr(line, format!("unknown form `{other}`"))),
    }
}

fn chimera_params(k: u32, line: usize) -> Result<ChimeraParams> {
    if k > MAX_FILE_K {
        return Err(perr(line, format!("k = {k} exceeds {MAX_FILE_K}")));
    }
    ChimeraParams::new(k).map_err(|e| perr(line, e.to_string()))
}

/// Parses the native instance format from raw bytes.
pub fn parse_instance(bytes: &[u8]) -> Result<Instance> {
    let mut header: Option<(Form, ChimeraParams, usize, usize, i64)> = None;
    let mut nodes: BTreeMap<NodeId, i64> = BTreeMap::new();
    let mut edges: Vec<((NodeId, NodeId), i64)> = Vec::new();
    let mut last: Option<(NodeId, NodeId)> = None;
    let mut line_no = 0;
    for raw in bytes.split(|&b| b == b'\n') {
        line_no += 1;
        let text = std::str::from_utf8(raw).map_err(|_| perr(line_no, "invalid UTF-8"))?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut toks = text.split_whitespace();
        let Some((_, params, ..)) = header else {
            let form = parse_form(toks.next().unwrap(), line_no)?;
            let k = chimera_params(field(toks.next(), line_no, "k")?, line_no)?;
            let n: usize = field(toks.next(), line_no, "n")?;
            let m: usize = field(toks.next(), line_no, "m")?;
            let offset = match toks.next() {
                Some(t) if form == Form::Qubo => field(Some(t), line_no, "offset")?,
                Some(_) => return Err(perr(line_no, "offset is only allowed for qubo")),
                None => 0,
            };
            if toks.next().is_some() {
                return Err(perr(line_no, "trailing tokens in header"));
            }
            header = Some((form, k, n, m, offset));
            continue;
        };
        let i: u32 = field(toks.next(), line_no, "node id")?;
        let j: u32 = field(toks.next(), line_no, "node id")?;
        let w: i64 = field(toks.next(), line_no, "weight")?;
        if toks.next().is_some() {
            return Err(perr(line_no, "expected `i j w`"));
        }
        let (a, b) = (NodeId(i), NodeId(j));
        if !params.contains(a) || !params.contains(b) {
            return Err(perr(line_no, format!("node outside C_{}", params.k())));
        }
        if i > j {
            return Err(perr(line_no, "records need i <= j"));
        }
        if let Some(prev) = last {
            if prev == (a, b) {
                return Err(Error::DuplicateEntry { line: line_no, i, j });
            }
            if prev > (a, b) {
                return Err(perr(line_no, "records out of order"));
            }
        }
        last = Some((a, b));
        if a == b {
            nodes.insert(a, w);
        } else {
            if params.edge_kind(a, b).is_none() {
                return Err(Error::NonChimeraEdge(i, j));
            }
            edges.push(((a, b), w));
        }
    }
    let Some((form, params, n, m, offset)) = header else {
        return Err(perr(line_no, "missing header"));
    };
    let node_set: BTreeSet<NodeId> =
        nodes.keys().copied().chain(edges.iter().flat_map(|((a, b), _)| [*a, *b])).collect();
    if node_set.len() != n {
        return Err(perr(line_no, format!("header declares {n} nodes, found {}", node_set.len())));
    }
    if edges.len() != m {
        return Err(perr(line_no, format!("header declares {m} edges, found {}", edges.len())));
    }
    let topo = Topology::from_parts(params.k(), node_set, edges.iter().map(|(e, _)| *e))?;
    let node_weights = topo.nodes().iter().map(|v| nodes.get(v).copied().unwrap_or(0)).collect();
    // edges arrive in canonical order, matching the topology's edge list
    let edge_weights = edges.iter().map(|(_, w)| *w).collect();
    let graph = WeightedGraph::from_weights(Arc::new(topo), node_weights, edge_weights)?;
    Ok(match form {
        Form::Qubo => Instance::Qubo(QuboInstance::new(graph, offset)),
        Form::Ising => Instance::Ising(IsingInstance::new(graph)),
    })
}

/// Foreign layouts accepted by [`convert_external`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalFormat {
    /// Headerless `i j w` triplets in any order and orientation, with the
    /// form and grid size supplied by the caller. Lines starting with `#`
    /// or `c ` are comments.
    Triplets { qubo: bool, k: u32 },
}

/// Converts a foreign instance listing into an [`Instance`].
pub fn convert_external(bytes: &[u8], format: ExternalFormat) -> Result<Instance> {
    let ExternalFormat::Triplets { qubo, k } = format;
    let params = chimera_params(k, 0)?;
    let mut records: BTreeMap<(NodeId, NodeId), (i64, usize)> = BTreeMap::new();
    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let text = std::str::from_utf8(raw).map_err(|_| perr(line_no, "invalid UTF-8"))?.trim();
        if text.is_empty() || text.starts_with('#') || text.starts_with("c ") {
            continue;
        }
        let mut toks = text.split_whitespace();
        let i: u32 = field(toks.next(), line_no, "node id")?;
        let j: u32 = field(toks.next(), line_no, "node id")?;
        let w: i64 = field(toks.next(), line_no, "weight")?;
        let key = (NodeId(i.min(j)), NodeId(i.max(j)));
        if !params.contains(key.1) {
            return Err(perr(line_no, format!("node outside C_{k}")));
        }
        if key.0 != key.1 && params.edge_kind(key.0, key.1).is_none() {
            return Err(Error::NonChimeraEdge(key.0 .0, key.1 .0));
        }
        if records.insert(key, (w, line_no)).is_some() {
            return Err(Error::DuplicateEntry { line: line_no, i: key.0 .0, j: key.1 .0 });
        }
    }
    let header = format!(
        "{} {} {} {}\n",
        if qubo { "qubo" } else { "ising" },
        k,
        records.keys().flat_map(|(a, b)| [*a, *b]).collect::<BTreeSet<_>>().len(),
        records.keys().filter(|(a, b)| a != b).count()
    );
    let mut native = header;
    for ((a, b), (w, _)) in &records {
        writeln!(native, "{a} {b} {w}").unwrap();
    }
    parse_instance(native.as_bytes())
}
