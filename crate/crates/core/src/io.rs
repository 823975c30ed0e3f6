//! On-disk formats.
//!
//! * Edge lists: a `# nodes=<N>` header, then one `i j` pair per line with
//!   `i < j`, zero-based, in ascending order.
//! * Positions: CSV with header `node,x,y`, nodes listed `0..N` in order.
//! * Traces: CSV with header
//!   `iteration,avg_degree,avg_edge_length[,avg_path_length],acc_add,acc_remove,rej_disconnect,rej_ratio,connected`.
//! * Oracle dumps: CSV `graphkey,probability` plus a JSON header.
//!
//! Floats are written in Rust's shortest round-trip form, so every reader
//! here reproduces the written values bit for bit.

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, GraphStats, Point, SpatialGraph};
use crate::models::WaxmanParams;
use crate::oracle::{GraphDistribution, GraphKey};
use crate::sampler::{AcceptanceCounts, TraceRow};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn format_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Format {
        line,
        message: message.into(),
    }
}

pub fn edge_list_string(g: &SpatialGraph) -> String {
    let mut out = format!("# nodes={}\n", g.node_count());
    for (i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn write_edge_list<W: Write>(g: &SpatialGraph, mut w: W) -> Result<(), IoError> {
    w.write_all(edge_list_string(g).as_bytes())?;
    Ok(())
}

/// Parsed edge list: node count and edges in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn parse_edge_list(text: &str) -> Result<EdgeList, IoError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let (line_no, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| format_err(1, "missing `# nodes=<N>` header"))?;
    let nodes: usize = header
        .strip_prefix('#')
        .map(str::trim_start)
        .and_then(|h| h.strip_prefix("nodes="))
        .ok_or_else(|| format_err(line_no, "expected `# nodes=<N>` header"))?
        .trim()
        .parse()
        .map_err(|e| format_err(line_no, format!("bad node count: {e}")))?;

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = |what: &str| -> Result<usize, IoError> {
            fields
                .next()
                .ok_or_else(|| format_err(line_no, format!("missing {what} endpoint")))?
                .parse()
                .map_err(|e| format_err(line_no, format!("bad {what} endpoint: {e}")))
        };
        let i = next("first")?;
        let j = next("second")?;
        if fields.next().is_some() {
            return Err(format_err(line_no, "more than two fields"));
        }
        if i >= j {
            return Err(format_err(line_no, format!("expected i < j, got {i} {j}")));
        }
        if j >= nodes {
            return Err(format_err(line_no, format!("node {j} out of range for {nodes} nodes")));
        }
        if edges.last().is_some_and(|&prev| prev >= (i, j)) {
            return Err(format_err(line_no, "edges must be strictly ascending"));
        }
        edges.push((i, j));
    }
    Ok(EdgeList { nodes, edges })
}

pub fn read_edge_list<R: Read>(mut r: R) -> Result<EdgeList, IoError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_edge_list(&text)
}

pub fn positions_csv_string(positions: &[Point]) -> String {
    let mut out = String::from("node,x,y\n");
    for (k, p) in positions.iter().enumerate() {
        let _ = writeln!(out, "{k},{},{}", p.x, p.y);
    }
    out
}

pub fn write_positions_csv<W: Write>(positions: &[Point], mut w: W) -> Result<(), IoError> {
    w.write_all(positions_csv_string(positions).as_bytes())?;
    Ok(())
}

fn csv_rows(text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = reader
        .headers()
        .map_err(|e| format_err(1, e.to_string()))?
        .clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(format_err(
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| format_err(line, e.to_string()))?;
        if record.len() != header.len() {
            return Err(format_err(line, format!("expected {} fields", header.len())));
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| format_err(line, format!("bad {name} `{raw}`: {e}")))
}

pub fn parse_positions_csv(text: &str) -> Result<Vec<Point>, IoError> {
    let rows = csv_rows(text, &["node", "x", "y"])?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let node: usize = field(line, "node", &rec[0])?;
        if node != out.len() {
            return Err(format_err(line, format!("expected node {}, got {node}", out.len())));
        }
        let x: f64 = field(line, "x", &rec[1])?;
        let y: f64 = field(line, "y", &rec[2])?;
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(format_err(line, "coordinates must lie in [0, 1]"));
        }
        out.push(Point::new(x, y));
    }
    if out.is_empty() {
        return Err(format_err(2, "no positions"));
    }
    Ok(out)
}

/// Rebuilds a graph from its edge list and positions file contents.
pub fn graph_from_files(edge_list: &str, positions_csv: &str) -> Result<SpatialGraph, IoError> {
    let edges = parse_edge_list(edge_list)?;
    let positions = parse_positions_csv(positions_csv)?;
    if edges.nodes != positions.len() {
        return Err(format_err(
            1,
            format!(
                "edge list has {} nodes but positions file has {}",
                edges.nodes,
                positions.len()
            ),
        ));
    }
    Ok(SpatialGraph::from_edges(positions, edges.edges)?)
}

const TRACE_HEAD: [&str; 3] = ["iteration", "avg_degree", "avg_edge_length"];
const TRACE_TAIL: [&str; 5] = ["acc_add", "acc_remove", "rej_disconnect", "rej_ratio", "connected"];

fn trace_header(with_path_length: bool) -> Vec<&'static str> {
    let mut h: Vec<&str> = TRACE_HEAD.to_vec();
    if with_path_length {
        h.push("avg_path_length");
    }
    h.extend(TRACE_TAIL);
    h
}

pub fn trace_csv_string(rows: &[TraceRow], with_path_length: bool) -> String {
    let mut out = trace_header(with_path_length).join(",");
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{}", r.iteration, r.stats.avg_degree, r.stats.avg_edge_length);
        if with_path_length {
            match r.stats.avg_path_length {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        let c = &r.counts;
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            c.acc_add, c.acc_remove, c.rej_disconnect, c.rej_ratio, r.connected
        );
    }
    out
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], with_path_length: bool, mut w: W) -> Result<(), IoError> {
    w.write_all(trace_csv_string(rows, with_path_length).as_bytes())?;
    Ok(())
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, IoError> {
    let first = text.lines().next().unwrap_or("");
    let with_path_length = first.split(',').any(|h| h.trim() == "avg_path_length");
    let header = trace_header(with_path_length);
    let rows = csv_rows(text, &header)?;
    let mut out: Vec<TraceRow> = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let mut k = 0;
        let mut take = || {
            k += 1;
            (header[k - 1], rec[k - 1].as_str())
        };
        let (name, raw) = take();
        let iteration: u64 = field(line, name, raw)?;
        let (name, raw) = take();
        let avg_degree: f64 = field(line, name, raw)?;
        let (name, raw) = take();
        let avg_edge_length: f64 = field(line, name, raw)?;
        let avg_path_length = if with_path_length {
            let (name, raw) = take();
            if raw.is_empty() {
                None
            } else {
                Some(field::<f64>(line, name, raw)?)
            }
        } else {
            None
        };
        let mut counts = AcceptanceCounts::default();
        for slot in [
            &mut counts.acc_add,
            &mut counts.acc_remove,
            &mut counts.rej_disconnect,
            &mut counts.rej_ratio,
        ] {
            let (name, raw) = take();
            *slot = field(line, name, raw)?;
        }
        let (name, raw) = take();
        let connected: bool = field(line, name, raw)?;
        if out.last().is_some_and(|prev| prev.iteration >= iteration) {
            return Err(format_err(line, "iterations must be strictly increasing"));
        }
        out.push(TraceRow {
            iteration,
            stats: GraphStats {
                avg_degree,
                avg_edge_length,
                avg_path_length,
            },
            counts,
            connected,
        });
    }
    Ok(out)
}

/// JSON header accompanying an oracle CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleHeader {
    pub n: usize,
    pub positions: Vec<Point>,
    pub model: WaxmanParams,
    pub p_connected: Option<f64>,
}

pub fn oracle_csv_string(dist: &GraphDistribution) -> String {
    let mut out = String::from("graphkey,probability\n");
    for &key in dist.masses.keys() {
        let _ = writeln!(out, "{},{}", key.0, dist.probability(key));
    }
    out
}

pub fn parse_oracle_csv(text: &str, n: usize) -> Result<GraphDistribution, IoError> {
    let rows = csv_rows(text, &["graphkey", "probability"])?;
    let slots = crate::oracle::pair_count(n);
    let mut masses = std::collections::BTreeMap::new();
    for (line, rec) in rows {
        let key: u32 = field(line, "graphkey", &rec[0])?;
        if slots < 32 && key >> slots != 0 {
            return Err(format_err(line, format!("key {key} has bits beyond {slots} pairs")));
        }
        let p: f64 = field(line, "probability", &rec[1])?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format_err(line, "probability outside [0, 1]"));
        }
        if masses.insert(GraphKey(key), p).is_some() {
            return Err(format_err(line, format!("duplicate key {key}")));
        }
    }
    Ok(GraphDistribution {
        n,
        total_mass: masses.values().sum(),
        masses,
        p_connected: None,
    })
}
