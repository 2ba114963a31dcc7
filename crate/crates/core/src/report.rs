//! Serialization of analysis results: JSON documents, Graphviz DOT and a
//! plain-text table.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::analysis::{AnalysisReport, LayerFlag, LayerReport};
use crate::geometry::Dims;
use crate::graph::ArchGraph;
use crate::refine::{Refinement, RefinementProposal};

/// The JSON report. Field order is the serialized key order.
#[derive(Debug, Serialize)]
pub struct ReportDocument<'a> {
    pub model: &'a str,
    pub input_resolution: Dims,
    pub i_min: Dims,
    pub i_max: Dims,
    pub fully_utilized: bool,
    pub params: Option<u64>,
    pub layers: &'a [LayerReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposals: Option<&'a [RefinementProposal]>,
}

impl<'a> ReportDocument<'a> {
    pub fn new(report: &'a AnalysisReport, proposals: Option<&'a [RefinementProposal]>) -> Self {
        Self {
            model: &report.model,
            input_resolution: report.input_resolution,
            i_min: report.i_min,
            i_max: report.i_max,
            fully_utilized: report.fully_utilized,
            params: report.params,
            layers: &report.layers,
            proposals: proposals.filter(|p| !p.is_empty()),
        }
    }
}

/// JSON report, newline-terminated. The `proposals` key is omitted when
/// there are none.
pub fn to_json(report: &AnalysisReport, proposals: Option<&[RefinementProposal]>) -> String {
    let value = serde_json::to_value(ReportDocument::new(report, proposals))
        .expect("report values always serialize");
    let mut out = String::new();
    write_json(&mut out, &value, 0);
    out.push('\n');
    out
}

/// Indented JSON that keeps arrays of scalars, such as `[h, w]` pairs, on
/// one line.
fn write_json(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&item.to_string());
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_json(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn dot_quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

/// Graphviz digraph of the architecture. Unproductive layers are filled
/// red, underutilized ones orange.
pub fn to_dot(g: &ArchGraph, report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_quote(g.name()));
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    for layer in &report.layers {
        let label = format!(
            "{}\n{} k={} s={}\nr_min={} r_max={}",
            layer.name, layer.kind, layer.kernel, layer.stride, layer.r_min, layer.r_max
        );
        let fill = match layer.flag {
            LayerFlag::Unproductive => ", style=filled, fillcolor=red",
            LayerFlag::Underutilized => ", style=filled, fillcolor=orange",
            LayerFlag::Productive => "",
        };
        let _ = writeln!(
            out,
            "  {} [label={}{}];",
            dot_quote(layer.id.as_str()),
            dot_quote(&label),
            fill
        );
    }
    for node in g.topo_nodes() {
        for p in &node.predecessors {
            let _ = writeln!(
                out,
                "  {} -> {};",
                dot_quote(p.as_str()),
                dot_quote(node.id.as_str())
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Human-readable summary and per-layer table.
pub fn to_text(report: &AnalysisReport, proposals: Option<&[RefinementProposal]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model:            {}", report.model);
    let _ = writeln!(out, "input resolution: {}", report.input_resolution);
    let _ = writeln!(out, "I_min:            {}", report.i_min);
    let _ = writeln!(out, "I_max:            {}", report.i_max);
    let _ = writeln!(
        out,
        "fully utilized:   {}",
        if report.fully_utilized { "yes" } else { "no" }
    );
    match report.params {
        Some(p) => {
            let _ = writeln!(out, "parameters:       {p}");
        }
        None => out.push_str("parameters:       unknown\n"),
    }
    out.push('\n');

    let header = ["id", "kind", "kernel", "stride", "r_min", "r_max", "flag"];
    let rows: Vec<[String; 7]> = report
        .layers
        .iter()
        .map(|l| {
            [
                l.id.to_string(),
                l.kind.to_string(),
                l.kernel.to_string(),
                l.stride.to_string(),
                l.r_min.to_string(),
                l.r_max.to_string(),
                l.flag.as_str().to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                let _ = write!(s, "{cell:<w$}  ");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&header);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&cells);
    }

    if let Some(ps) = proposals.filter(|p| !p.is_empty()) {
        out.push_str("\nproposals:\n");
        for (i, p) in ps.iter().enumerate() {
            let _ = writeln!(out, "  {}. {}", i + 1, describe(p));
        }
    }
    out
}

/// One-line description of a proposal.
pub fn describe(p: &RefinementProposal) -> String {
    let what = match &p.variant {
        Refinement::StrideReduction { changes } => {
            let parts: Vec<String> = changes
                .iter()
                .map(|c| format!("{} stride {} -> {}", c.id, c.old_stride, c.new_stride))
                .collect();
            format!("stride reduction: {}", parts.join(", "))
        }
        Refinement::PruneAndWiden { removed, widened } => format!(
            "prune and widen: remove {} vertices, widen {} vertices",
            removed.len(),
            widened.len()
        ),
    };
    format!(
        "{what}; predicted I_min {}, parameter change {:+}",
        p.predicted_imin, p.param_delta
    )
}
