//! Mixed-integer formulations of a QUBO instance and their LP-file rendering.
//!
//! [`MilpModel`] linearizes every product `x_i x_j` of an edge with a
//! continuous `z_ij` and the four McCormick rows
//!
//! ```text
//! up_i_j_a:  z_ij - x_i        <= 0
//! up_i_j_b:  z_ij - x_j        <= 0
//! lo_i_j:    x_i + x_j - z_ij  <= 1
//! nn_i_j:    z_ij              >= 0
//! ```
//!
//! In [`McCormickMode::Reduced`] only the rows that can bind at an optimum are
//! kept: `lo`/`nn` when `Q_ij > 0`, `up_a`/`up_b` when `Q_ij < 0`, and
//! zero-weight edges lose their `z` entirely.
//!
//! [`MiqpModel`] keeps the quadratic objective. With
//! [`Repair::DiagDominant`] it carries a diagonal shift `D` so that
//! `x'(Qbar + D)x - sum D_ii x_i` is the objective and `Qbar + D` is
//! diagonally dominant with a nonnegative diagonal.
//!
//! # LP dialect
//!
//! Output follows the CPLEX LP format: `Minimize`, `Subject To`, `Bounds`,
//! `Binaries` and `End` sections, variables `x<i>` and `z_<i>_<j>` (`i < j`,
//! node indices). Every term is written as `coefficient name`; the first term
//! of an expression drops a leading `+`. Quadratic terms go inside
//! `[ ... ]/2` with doubled coefficients. The format has no objective
//! constant, so it is carried by the comment line `\ objective offset: <c>`,
//! which [`parse_lp`] reads back. Recommended CPLEX settings for hard
//! instances are `set mip cuts gomory 2` and `set mip cuts zerohalf 2`.

use std::collections::HashSet;
use std::fmt::{self, Write};

use crate::chimera::NodeId;
use crate::error::{Error, Result};
use crate::instances::QuboInstance;

const TERMS_PER_LINE: usize = 8;
const NAMES_PER_LINE: usize = 16;
const OFFSET_COMMENT: &str = "\\ objective offset:";

/// A model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(NodeId),
    Z(NodeId, NodeId),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Z(i, j) => write!(f, "z_{i}_{j}"),
        }
    }
}

impl Var {
    fn parse(name: &str) -> Option<Var> {
        let index = |s: &str| -> Option<NodeId> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
                return None;
            }
            s.parse().ok().map(NodeId)
        };
        if let Some(rest) = name.strip_prefix("z_") {
            let (i, j) = rest.split_once('_')?;
            let (i, j) = (index(i)?, index(j)?);
            (i < j).then_some(Var::Z(i, j))
        } else {
            name.strip_prefix('x').and_then(index).map(Var::X)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(i64, Var)>,
    pub sense: Sense,
    pub rhs: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub var: Var,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum McCormickMode {
    #[default]
    Full,
    Reduced,
}

/// The linearized formulation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MilpModel {
    pub objective: Vec<(i64, Var)>,
    pub offset: i64,
    pub constraints: Vec<Constraint>,
    /// Bounds of the continuous variables.
    pub bounds: Vec<Bound>,
    pub binaries: Vec<NodeId>,
}

pub fn build_milp(inst: &QuboInstance, mode: McCormickMode) -> MilpModel {
    let topo = inst.topology();
    let mut model = MilpModel { offset: inst.offset, ..Default::default() };
    model.binaries = topo.nodes().to_vec();
    for (&v, &q) in topo.nodes().iter().zip(inst.linear()) {
        if q != 0 {
            model.objective.push((q, Var::X(v)));
        }
    }
    for (&(i, j), &q) in topo.edges().iter().zip(inst.quadratic()) {
        if mode == McCormickMode::Reduced && q == 0 {
            continue;
        }
        let z = Var::Z(i, j);
        if q != 0 {
            model.objective.push((q, z));
        }
        let upper = mode == McCormickMode::Full || q < 0;
        let lower = mode == McCormickMode::Full || q > 0;
        let row = |name: String, terms: Vec<(i64, Var)>, sense, rhs| Constraint { name, terms, sense, rhs };
        if upper {
            model.constraints.push(row(format!("up_{i}_{j}_a"), vec![(1, z), (-1, Var::X(i))], Sense::Le, 0));
            model.constraints.push(row(format!("up_{i}_{j}_b"), vec![(1, z), (-1, Var::X(j))], Sense::Le, 0));
        }
        if lower {
            model.constraints.push(row(
                format!("lo_{i}_{j}"),
                vec![(1, Var::X(i)), (1, Var::X(j)), (-1, z)],
                Sense::Le,
                1,
            ));
            model.constraints.push(row(format!("nn_{i}_{j}"), vec![(1, z)], Sense::Ge, 0));
        }
        model.bounds.push(Bound { var: z, lo: 0, hi: 1 });
    }
    model
}

impl MilpModel {
    pub fn num_products(&self) -> usize {
        self.bounds.len()
    }

    /// Feasible interval of every continuous variable once the binaries are
    /// fixed by `x`. `None` when some row is violated by `x` alone or a
    /// continuous variable appears with a coefficient other than `+-1`.
    pub fn continuous_ranges(&self, x: impl Fn(NodeId) -> u8) -> Option<Vec<(Var, i64, i64)>> {
        let mut ranges: Vec<(Var, i64, i64)> =
            self.bounds.iter().map(|b| (b.var, b.lo, b.hi)).collect();
        let slot: std::collections::HashMap<Var, usize> =
            ranges.iter().enumerate().map(|(s, r)| (r.0, s)).collect();
        for row in &self.constraints {
            let mut fixed = 0i64;
            let mut free = None;
            for &(c, v) in &row.terms {
                match v {
                    Var::X(i) => fixed += c * x(i) as i64,
                    Var::Z(..) => {
                        if free.is_some() || c.abs() != 1 {
                            return None;
                        }
                        free = Some((c, *slot.get(&v)?));
                    }
                }
            }
            let rest = row.rhs - fixed;
            match free {
                None => {
                    let ok = match row.sense {
                        Sense::Le => 0 <= rest,
                        Sense::Ge => 0 >= rest,
                        Sense::Eq => rest == 0,
                    };
                    if !ok {
                        return None;
                    }
                }
                Some((c, s)) => {
                    // c * z (sense) rest with c = +-1
                    let v = rest * c;
                    let r = &mut ranges[s];
                    match (row.sense, c > 0) {
                        (Sense::Le, true) | (Sense::Ge, false) => r.2 = r.2.min(v),
                        (Sense::Ge, true) | (Sense::Le, false) => r.1 = r.1.max(v),
                        (Sense::Eq, _) => {
                            r.1 = r.1.max(v);
                            r.2 = r.2.min(v);
                        }
                    }
                }
            }
        }
        ranges.iter().all(|r| r.1 <= r.2).then_some(ranges)
    }

    /// Minimum of the objective over the continuous variables for fixed
    /// binaries, offset included.
    pub fn objective_given_binaries(&self, x: impl Fn(NodeId) -> u8) -> Option<i64> {
        let ranges = self.continuous_ranges(&x)?;
        let mut best = std::collections::HashMap::new();
        let cost: std::collections::HashMap<Var, i64> =
            self.objective.iter().map(|&(c, v)| (v, c)).collect();
        for (v, lo, hi) in ranges {
            let c = cost.get(&v).copied().unwrap_or(0);
            best.insert(v, if c < 0 { hi } else { lo });
        }
        let mut total = self.offset;
        for &(c, v) in &self.objective {
            total += c * match v {
                Var::X(i) => x(i) as i64,
                z => best[&z],
            };
        }
        Some(total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Repair {
    #[default]
    None,
    DiagDominant,
}

/// The quadratic formulation: `sum products + sum squares x_i^2 + sum linear x_i + offset`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MiqpModel {
    pub nodes: Vec<NodeId>,
    pub linear: Vec<(i64, NodeId)>,
    /// Coefficients of `x_i^2`, i.e. the diagonal of `Qbar + D`.
    pub squares: Vec<(i64, NodeId)>,
    /// Coefficients of `x_i x_j` for `i < j`, i.e. twice `Qbar_ij`.
    pub products: Vec<(i64, NodeId, NodeId)>,
    pub offset: i64,
    /// The diagonal `D` in node order, when a repair was applied.
    pub shift: Option<Vec<i64>>,
}

pub fn build_miqp(inst: &QuboInstance, repair: Repair) -> MiqpModel {
    let topo = inst.topology();
    let mut model = MiqpModel { nodes: topo.nodes().to_vec(), offset: inst.offset, ..Default::default() };
    for (&(i, j), &q) in topo.edges().iter().zip(inst.quadratic()) {
        if q != 0 {
            model.products.push((q, i, j));
        }
    }
    match repair {
        Repair::None => {
            for (&v, &q) in topo.nodes().iter().zip(inst.linear()) {
                if q != 0 {
                    model.linear.push((q, v));
                }
            }
        }
        Repair::DiagDominant => {
            // row sum of |Qbar_ij| = sum |Q_ij| / 2, rounded up to keep D integral
            let mut abs_row = vec![0i64; topo.num_nodes()];
            for (e, &q) in inst.quadratic().iter().enumerate() {
                let (a, b) = topo.edge_positions(e);
                abs_row[a] += q.abs();
                abs_row[b] += q.abs();
            }
            let mut shift = Vec::with_capacity(topo.num_nodes());
            for (p, (&v, &q)) in topo.nodes().iter().zip(inst.linear()).enumerate() {
                let d = ((abs_row[p] + 1) / 2 - q).max(0);
                shift.push(d);
                if q + d != 0 {
                    model.squares.push((q + d, v));
                }
                if d != 0 {
                    model.linear.push((-d, v));
                }
            }
            model.shift = Some(shift);
        }
    }
    model
}

impl MiqpModel {
    fn positions(&self) -> std::collections::HashMap<NodeId, usize> {
        self.nodes.iter().enumerate().map(|(p, &v)| (v, p)).collect()
    }

    /// `x' (Qbar + D) x` for a point given in node order.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let pos = self.positions();
        let products: f64 =
            self.products.iter().map(|&(c, i, j)| c as f64 * x[pos[&i]] * x[pos[&j]]).sum();
        let squares: f64 = self.squares.iter().map(|&(c, i)| c as f64 * x[pos[&i]].powi(2)).sum();
        products + squares
    }

    /// Objective at a real point given in node order.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let pos = self.positions();
        let linear: f64 = self.linear.iter().map(|&(c, i)| c as f64 * x[pos[&i]]).sum();
        self.quadratic_form(x) + linear + self.offset as f64
    }

    /// Exact objective at a binary point given in node order.
    pub fn objective_binary(&self, x: &[u8]) -> i64 {
        let pos = self.positions();
        let xi = |v: &NodeId| x[pos[v]] as i64;
        self.offset
            + self.products.iter().map(|(c, i, j)| c * xi(i) * xi(j)).sum::<i64>()
            + self.squares.iter().map(|(c, i)| c * xi(i)).sum::<i64>()
            + self.linear.iter().map(|(c, i)| c * xi(i)).sum::<i64>()
    }

    /// Whether `(Qbar + D)_ii >= sum_j |Qbar_ij|` holds on every row.
    pub fn is_diagonally_dominant(&self) -> bool {
        let pos = self.positions();
        let mut diag2 = vec![0i64; self.nodes.len()];
        let mut off = vec![0i64; self.nodes.len()];
        for &(c, i) in &self.squares {
            diag2[pos[&i]] += 2 * c;
        }
        for &(c, i, j) in &self.products {
            off[pos[&i]] += c.abs();
            off[pos[&j]] += c.abs();
        }
        diag2.iter().zip(&off).all(|(d, o)| d >= o)
    }
}

/// Renders a model in the LP dialect described in the module docs.
pub trait EmitLp {
    fn emit_lp(&self) -> String;
}

pub fn emit_lp(model: &impl EmitLp) -> String {
    model.emit_lp()
}

fn push_term(out: &mut String, first: bool, coef: i64, name: &dyn fmt::Display) {
    let sign = if coef < 0 { "- " } else if first { "" } else { "+ " };
    write!(out, "{sign}{} {name}", coef.unsigned_abs()).unwrap();
}

fn write_linear(out: &mut String, lead: &str, terms: &[(i64, Var)]) {
    out.push_str(lead);
    for (n, (c, v)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        out.push(' ');
        push_term(out, n == 0, *c, v);
    }
}

fn write_names(out: &mut String, names: impl Iterator<Item = String>) {
    for (n, name) in names.enumerate() {
        if n % NAMES_PER_LINE == 0 {
            out.push_str(if n == 0 { " " } else { "\n " });
        } else {
            out.push(' ');
        }
        out.push_str(&name);
    }
    out.push('\n');
}

impl EmitLp for MilpModel {
    fn emit_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ qubo linearization (milp)\n");
        writeln!(out, "{OFFSET_COMMENT} {}", self.offset).unwrap();
        out.push_str("Minimize\n");
        write_linear(&mut out, " obj:", &self.objective);
        out.push_str("\nSubject To\n");
        for row in &self.constraints {
            write_linear(&mut out, &format!(" {}:", row.name), &row.terms);
            writeln!(out, " {} {}", row.sense.symbol(), row.rhs).unwrap();
        }
        if !self.bounds.is_empty() {
            out.push_str("Bounds\n");
            for b in &self.bounds {
                writeln!(out, " {} <= {} <= {}", b.lo, b.var, b.hi).unwrap();
            }
        }
        if !self.binaries.is_empty() {
            out.push_str("Binaries\n");
            write_names(&mut out, self.binaries.iter().map(|v| Var::X(*v).to_string()));
        }
        out.push_str("End\n");
        out
    }
}

impl EmitLp for MiqpModel {
    fn emit_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ qubo quadratic form (miqp)\n");
        writeln!(out, "{OFFSET_COMMENT} {}", self.offset).unwrap();
        if let Some(shift) = &self.shift {
            let total: i64 = shift.iter().sum();
            writeln!(out, "\\ diagonal shift applied, trace {total}").unwrap();
        }
        out.push_str("Minimize\n obj:");
        let mut count = 0;
        for &(c, v) in &self.linear {
            if count > 0 && count % TERMS_PER_LINE == 0 {
                out.push_str("\n   ");
            }
            out.push(' ');
            push_term(&mut out, count == 0, c, &Var::X(v));
            count += 1;
        }
        let quad: Vec<(i64, String)> = self
            .products
            .iter()
            .map(|&(c, i, j)| (2 * c, format!("{} * {}", Var::X(i), Var::X(j))))
            .chain(self.squares.iter().map(|&(c, i)| (2 * c, format!("{} ^ 2", Var::X(i)))))
            .collect();
        if !quad.is_empty() {
            out.push_str(if count == 0 { " [" } else { " + [" });
            for (n, (c, name)) in quad.iter().enumerate() {
                if n > 0 && n % TERMS_PER_LINE == 0 {
                    out.push_str("\n   ");
                }
                out.push(' ');
                push_term(&mut out, n == 0, *c, name);
            }
            out.push_str(" ]/2");
        }
        out.push_str("\nSubject To\n");
        if !self.nodes.is_empty() {
            out.push_str("Binaries\n");
            write_names(&mut out, self.nodes.iter().map(|v| Var::X(*v).to_string()));
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn parse_int(tok: &str) -> Result<i64> {
    tok.parse().map_err(|_| Error::MalformedSection(format!("expected an integer, got `{tok}`")))
}

/// Parses `[+|-] [coef] name` sequences until a token accepted by `stop`.
fn parse_terms<'a>(
    toks: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
    stop: impl Fn(&str) -> bool,
) -> Result<Vec<(i64, &'a str)>> {
    let mut terms = Vec::new();
    while let Some(&tok) = toks.peek() {
        if stop(tok) {
            break;
        }
        toks.next();
        let mut sign = 1;
        let mut tok = tok;
        if tok == "+" || tok == "-" {
            if tok == "-" {
                sign = -1;
            }
            tok = toks.next().ok_or_else(|| Error::MalformedSection("dangling sign".into()))?;
        } else if !terms.is_empty() {
            return Err(Error::MalformedSection(format!("missing sign before `{tok}`")));
        }
        let (coef, name) = if tok.starts_with(|c: char| c.is_ascii_digit()) {
            let c = parse_int(tok)?;
            let name = toks.next().ok_or_else(|| Error::MalformedSection("dangling coefficient".into()))?;
            (c, name)
        } else {
            (1, tok)
        };
        if name.starts_with('[') || name == "*" || name == "^" {
            return Err(Error::MalformedSection("quadratic terms are not part of a MILP".into()));
        }
        terms.push((sign * coef, name));
    }
    Ok(terms)
}

/// Reads back the dialect written by [`MilpModel::emit_lp`].
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut section = Section::Preamble;
    let mut offset = None;
    let mut buckets: [Vec<String>; 4] = Default::default();
    let mut bound_lines = Vec::new();
    for raw in text.lines() {
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix(OFFSET_COMMENT) {
            if offset.is_some() {
                return Err(Error::MalformedSection("repeated objective offset".into()));
            }
            offset = Some(parse_int(rest.trim())?);
            continue;
        }
        let line = match trimmed.find('\\') {
            Some(cut) => trimmed[..cut].trim(),
            None => trimmed,
        };
        if line.is_empty() {
            continue;
        }
        if let Some(next) = section_header(line) {
            let order = |s: Section| s as u8;
            if order(next) <= order(section) || section == Section::End {
                return Err(Error::MalformedSection(format!("unexpected section `{line}`")));
            }
            if section == Section::Preamble && next != Section::Objective {
                return Err(Error::MalformedSection("model must start with Minimize".into()));
            }
            section = next;
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(Error::MalformedSection(format!("text before Minimize: `{line}`")))
            }
            Section::End => return Err(Error::MalformedSection("text after End".into())),
            Section::Bounds => bound_lines.push(line.to_string()),
            s => buckets[s as usize - 1].push(line.to_string()),
        }
    }
    if section != Section::End {
        return Err(Error::MalformedSection("missing End".into()));
    }

    let mut model = MilpModel { offset: offset.unwrap_or(0), ..Default::default() };
    let mut declared = HashSet::new();
    let resolve = |name: &str, declared: &HashSet<Var>| -> Result<Var> {
        Var::parse(name)
            .filter(|v| declared.contains(v))
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    };

    for line in &bound_lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [lo, "<=", name, "<=", hi] = toks[..] else {
            return Err(Error::MalformedSection(format!("unsupported bound `{line}`")));
        };
        let var = Var::parse(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        if !declared.insert(var) {
            return Err(Error::DuplicateBound(name.to_string()));
        }
        model.bounds.push(Bound { var, lo: parse_int(lo)?, hi: parse_int(hi)? });
    }
    for name in buckets[3].iter().flat_map(|l| l.split_whitespace()) {
        match Var::parse(name) {
            Some(Var::X(v)) if declared.insert(Var::X(v)) => model.binaries.push(v),
            Some(Var::X(_)) => {
                return Err(Error::MalformedSection(format!("`{name}` declared twice")))
            }
            _ => return Err(Error::UnknownVariable(name.to_string())),
        }
    }

    let objective = buckets[0].join(" ");
    let mut toks = objective.split_whitespace().peekable();
    match toks.peek() {
        Some(t) if t.ends_with(':') => {
            toks.next();
        }
        _ => {}
    }
    for (c, name) in parse_terms(&mut toks, |_| false)? {
        model.objective.push((c, resolve(name, &declared)?));
    }

    let rows = buckets[1].join(" ");
    let mut toks = rows.split_whitespace().peekable();
    let is_sense = |t: &str| matches!(t, "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">");
    while let Some(tok) = toks.next() {
        let name = tok
            .strip_suffix(':')
            .ok_or_else(|| Error::MalformedSection(format!("expected a row name, got `{tok}`")))?;
        let mut terms = Vec::new();
        for (c, var) in parse_terms(&mut toks, is_sense)? {
            terms.push((c, resolve(var, &declared)?));
        }
        let sense = match toks.next() {
            Some("<=" | "=<" | "<") => Sense::Le,
            Some(">=" | "=>" | ">") => Sense::Ge,
            Some("=") => Sense::Eq,
            _ => return Err(Error::MalformedSection(format!("row `{name}` has no sense"))),
        };
        let rhs = toks
            .next()
            .ok_or_else(|| Error::MalformedSection(format!("row `{name}` has no right-hand side")))?;
        model.constraints.push(Constraint { name: name.to_string(), terms, sense, rhs: parse_int(rhs)? });
    }
    Ok(model)
}
