//! The `.rfa` text format: one vertex per line, edges by `from` references.
//!
//! ```text
//! model tiny input 32x32
//! c1: conv k=3 s=2 c=3->16 from @input
//! c2: conv k=3 c=16->16 bias block=b1      # from defaults to the previous line
//! o: output from c2
//! ```
//!
//! Statements take the form
//! `<id>: <kind> [k=HxW] [s=HxW] [d=HxW] [up] [c=IN->OUT] [g=N] [bias] [block=B] [from a,b,…]`.
//! The square shorthand `k=3` means `k=3x3`; `@input` names the implicit
//! input vertex, whose id is `input`. References must point to earlier
//! lines, so the file order is always a topological order.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::geometry::{Dims, Pair};
use crate::graph::{ArchGraph, GraphError, LayerKind, LayerNode, RawGraph, VertexId};

/// Id given to the implicit input vertex.
pub const INPUT_ID: &str = "input";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}, column {col}: unknown reference `{id}`")]
    UnknownReference { line: usize, col: usize, id: String },
    #[error("line {line}, column {col}: duplicate id `{id}`")]
    DuplicateId { line: usize, col: usize, id: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_ident_char)
}

/// A whitespace-delimited token with its 1-based column.
#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    col: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            col: line[..s].chars().count() + 1,
        });
    }
    out
}

struct LineCtx {
    line: usize,
}

impl LineCtx {
    fn syntax(&self, col: usize, msg: impl Into<String>) -> DslError {
        DslError::Syntax {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }
}

fn parse_positive(ctx: &LineCtx, tok: Token<'_>, value: &str, what: &str) -> Result<u64, DslError> {
    let col = tok.col + tok.text.len() - value.len();
    match value.parse::<u64>() {
        Ok(v) if v >= 1 && value.bytes().all(|b| b.is_ascii_digit()) => Ok(v),
        Ok(_) => Err(ctx.syntax(col, format!("{what} must be at least 1"))),
        Err(_) => Err(ctx.syntax(col, format!("invalid {what} `{value}`"))),
    }
}

fn parse_dims(ctx: &LineCtx, tok: Token<'_>, value: &str, what: &str) -> Result<Dims, DslError> {
    let col = tok.col + tok.text.len() - value.len();
    let d: Dims = value
        .parse()
        .map_err(|_| ctx.syntax(col, format!("invalid {what} `{value}`, expected HxW or N")))?;
    if !d.all(|x| x >= 1) {
        return Err(ctx.syntax(col, format!("{what} must be at least 1 on both axes")));
    }
    Ok(d)
}

fn parse_channels(ctx: &LineCtx, tok: Token<'_>, value: &str) -> Result<(u64, u64), DslError> {
    let col = tok.col + tok.text.len() - value.len();
    let err = || ctx.syntax(col, format!("invalid channels `{value}`, expected IN->OUT"));
    let (a, b) = value.split_once("->").ok_or_else(err)?;
    let num = |s: &str| -> Result<u64, DslError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        s.parse().map_err(|_| err())
    };
    Ok((num(a)?, num(b)?))
}

/// Parses `.rfa` text into a validated graph.
pub fn parse_dsl(text: &str) -> Result<ArchGraph, DslError> {
    let mut raw: Option<RawGraph> = None;
    let mut known: HashSet<String> = HashSet::new();
    let mut prev: Option<String> = None;

    for (lineno, full_line) in text.lines().enumerate() {
        let ctx = LineCtx { line: lineno + 1 };
        let content = match full_line.find('#') {
            Some(i) => &full_line[..i],
            None => full_line,
        };
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }

        let Some(graph) = raw.as_mut() else {
            raw = Some(parse_header(&ctx, &tokens)?);
            known.insert(INPUT_ID.to_string());
            prev = Some(INPUT_ID.to_string());
            continue;
        };

        let head = tokens[0];
        let Some(id) = head.text.strip_suffix(':') else {
            return Err(ctx.syntax(head.col, "expected `<id>:` at the start of a statement"));
        };
        if !is_ident(id) {
            return Err(ctx.syntax(
                head.col,
                format!("invalid id `{id}`; ids use letters, digits, `_` and `.`"),
            ));
        }
        if !known.insert(id.to_string()) {
            return Err(DslError::DuplicateId {
                line: ctx.line,
                col: head.col,
                id: id.to_string(),
            });
        }
        let Some(kind_tok) = tokens.get(1).copied() else {
            return Err(ctx.syntax(
                head.col + head.text.len(),
                "expected a layer kind after the id",
            ));
        };
        let kind = match LayerKind::from_keyword(kind_tok.text) {
            Some(LayerKind::Input) | None => {
                return Err(ctx.syntax(
                    kind_tok.col,
                    format!("unknown layer kind `{}`", kind_tok.text),
                ))
            }
            Some(k) => k,
        };

        let node = parse_statement(
            &ctx,
            id,
            kind,
            kind_tok,
            &tokens[2..],
            &known,
            prev.as_deref(),
        )?;
        graph.push(node);
        prev = Some(id.to_string());
    }

    let raw = raw.ok_or(DslError::Syntax {
        line: 1,
        col: 1,
        msg: "missing `model <name>` header".into(),
    })?;
    Ok(raw.validate()?)
}

fn parse_header(ctx: &LineCtx, tokens: &[Token<'_>]) -> Result<RawGraph, DslError> {
    if tokens[0].text != "model" {
        return Err(ctx.syntax(tokens[0].col, "expected `model <name> [input HxW]` header"));
    }
    let name = tokens
        .get(1)
        .ok_or_else(|| ctx.syntax(tokens[0].col + 5, "expected a model name"))?;
    if !name.text.chars().all(|c| is_ident_char(c) || c == '-') {
        return Err(ctx.syntax(name.col, format!("invalid model name `{}`", name.text)));
    }
    let mut raw = RawGraph::new(name.text);
    raw.push(LayerNode::new(INPUT_ID, LayerKind::Input));
    match tokens.get(2) {
        None => {}
        Some(t) if t.text == "input" => {
            let res = tokens
                .get(3)
                .ok_or_else(|| ctx.syntax(t.col + 5, "expected a resolution after `input`"))?;
            raw.design_resolution = Some(parse_dims(ctx, *res, res.text, "input resolution")?);
            if let Some(extra) = tokens.get(4) {
                return Err(ctx.syntax(extra.col, format!("unexpected `{}`", extra.text)));
            }
        }
        Some(t) => return Err(ctx.syntax(t.col, format!("unexpected `{}`", t.text))),
    }
    Ok(raw)
}

fn parse_statement(
    ctx: &LineCtx,
    id: &str,
    kind: LayerKind,
    kind_tok: Token<'_>,
    attrs: &[Token<'_>],
    known: &HashSet<String>,
    prev: Option<&str>,
) -> Result<LayerNode, DslError> {
    let mut node = LayerNode::new(id, kind);
    let mut seen: HashSet<&str> = HashSet::new();
    let mut kernel_given = false;
    let mut groups: Option<(u64, usize)> = None;
    let mut channels_col = None;
    let mut from: Option<Vec<(String, usize)>> = None;

    let mut idx = 0;
    while idx < attrs.len() {
        let tok = attrs[idx];
        idx += 1;
        let (key, value) = match tok.text.split_once('=') {
            Some((k, v)) => (k, Some(v)),
            None => (tok.text, None),
        };
        if !seen.insert(key) {
            return Err(ctx.syntax(tok.col, format!("`{key}` given twice")));
        }
        let no_value = |v: Option<&str>| match v {
            Some(_) => Err(ctx.syntax(tok.col, format!("`{key}` takes no value"))),
            None => Ok(()),
        };
        let restrict = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ctx.syntax(tok.col, format!("{what} is not allowed on `{kind}` layers")))
            }
        };
        match key {
            "k" => {
                restrict(kind.is_spatial(), "a kernel")?;
                node.kernel = parse_dims(ctx, tok, need_value(ctx, tok, key, value)?, "kernel")?;
                kernel_given = true;
            }
            "s" => {
                restrict(kind.is_spatial(), "a stride")?;
                node.stride = parse_dims(ctx, tok, need_value(ctx, tok, key, value)?, "stride")?;
            }
            "d" => {
                restrict(kind.is_spatial(), "a dilation")?;
                node.dilation =
                    parse_dims(ctx, tok, need_value(ctx, tok, key, value)?, "dilation")?;
            }
            "up" => {
                restrict(kind.is_spatial(), "upsampling")?;
                no_value(value)?;
                node.upsample = true;
            }
            "c" => {
                restrict(kind.is_parametric(), "a channel count")?;
                let (cin, cout) = parse_channels(ctx, tok, need_value(ctx, tok, key, value)?)?;
                node.channels_in = cin;
                node.channels_out = cout;
                channels_col = Some(tok.col);
            }
            "g" => {
                restrict(kind == LayerKind::Conv, "a group count")?;
                groups = Some((
                    parse_positive(ctx, tok, need_value(ctx, tok, key, value)?, "group count")?,
                    tok.col,
                ));
            }
            "bias" => {
                restrict(kind.is_parametric(), "a bias")?;
                no_value(value)?;
                node.has_bias = true;
            }
            "block" => {
                let b = need_value(ctx, tok, key, value)?;
                if !is_ident(b) {
                    return Err(ctx.syntax(tok.col + 6, format!("invalid block id `{b}`")));
                }
                node.block = Some(b.to_string());
            }
            "from" => {
                no_value(value)?;
                let rest = &attrs[idx..];
                idx = attrs.len();
                from = Some(parse_refs(ctx, tok, rest)?);
            }
            _ => return Err(ctx.syntax(tok.col, format!("unknown attribute `{}`", tok.text))),
        }
    }

    if kind.is_spatial() && !kernel_given {
        return Err(ctx.syntax(kind_tok.col, format!("`{kind}` layers need a kernel `k=`")));
    }

    let ch_col = channels_col.unwrap_or(kind_tok.col);
    match kind {
        LayerKind::DepthwiseConv => {
            node.groups = node.channels_in.max(1);
            if node.channels_in > 0 && !node.channels_out.is_multiple_of(node.channels_in) {
                return Err(ctx.syntax(
                    ch_col,
                    "depthwise output channels must be a multiple of the input channels",
                ));
            }
        }
        LayerKind::Conv => {
            if let Some((g, col)) = groups {
                if (node.channels_in > 0 && !node.channels_in.is_multiple_of(g))
                    || (node.channels_out > 0 && !node.channels_out.is_multiple_of(g))
                {
                    return Err(
                        ctx.syntax(col, format!("channels are not divisible into {g} groups"))
                    );
                }
                node.groups = g;
            }
        }
        _ => {}
    }

    let refs = match from {
        Some(r) => r,
        None => vec![(
            prev.unwrap_or(INPUT_ID).to_string(),
            kind_tok.col + kind_tok.text.len(),
        )],
    };
    for (r, col) in &refs {
        if !known.contains(r) || r == id {
            return Err(DslError::UnknownReference {
                line: ctx.line,
                col: *col,
                id: r.clone(),
            });
        }
    }
    node.predecessors = refs.into_iter().map(|(r, _)| VertexId::from(r)).collect();
    Ok(node)
}

fn need_value<'a>(
    ctx: &LineCtx,
    tok: Token<'_>,
    key: &str,
    value: Option<&'a str>,
) -> Result<&'a str, DslError> {
    value.ok_or_else(|| ctx.syntax(tok.col, format!("`{key}` needs a value")))
}

/// Parses the comma-separated reference list after `from`, which may be
/// spread over several whitespace-separated tokens.
fn parse_refs(
    ctx: &LineCtx,
    from_tok: Token<'_>,
    rest: &[Token<'_>],
) -> Result<Vec<(String, usize)>, DslError> {
    let mut refs = Vec::new();
    let mut expect_ref = true;
    for tok in rest {
        let mut col = tok.col;
        for (i, part) in tok.text.split(',').enumerate() {
            if i > 0 {
                if expect_ref {
                    return Err(ctx.syntax(col - 1, "empty reference"));
                }
                expect_ref = true;
            }
            if !part.is_empty() {
                if !expect_ref {
                    return Err(ctx.syntax(col, "expected `,` between references"));
                }
                let name = match part.strip_prefix('@') {
                    Some("input") => INPUT_ID,
                    Some(_) => {
                        return Err(ctx.syntax(col, format!("unknown special reference `{part}`")))
                    }
                    None => part,
                };
                if !is_ident(name) {
                    return Err(ctx.syntax(col, format!("invalid reference `{part}`")));
                }
                refs.push((name.to_string(), col));
                expect_ref = false;
            }
            col += part.chars().count() + 1;
        }
    }
    if refs.is_empty() || expect_ref {
        return Err(ctx.syntax(from_tok.col, "`from` needs at least one reference"));
    }
    Ok(refs)
}

/// Canonical text: topological order, defaults elided, `from` elided when it
/// names only the preceding statement. Ids that are not valid identifiers
/// are rewritten.
pub fn emit_dsl(g: &ArchGraph) -> String {
    let names = dsl_names(g);
    let mut out = String::new();
    let model: String = g
        .name()
        .chars()
        .map(|c| if is_ident_char(c) || c == '-' { c } else { '_' })
        .collect();
    let model = if model.is_empty() {
        "model".into()
    } else {
        model
    };
    let _ = write!(out, "model {model}");
    if let Some(res) = g.design_resolution() {
        let _ = write!(out, " input {res}");
    }
    out.push('\n');

    let unit: Dims = Pair::square(1);
    let mut prev = g.input_id().clone();
    for node in g.topo_nodes() {
        if node.kind == LayerKind::Input {
            continue;
        }
        let _ = write!(out, "{}: {}", names[&node.id], node.kind);
        if node.kind.is_spatial() {
            let _ = write!(out, " k={}", fmt_dims(node.kernel));
            if node.stride != unit {
                let _ = write!(out, " s={}", fmt_dims(node.stride));
            }
            if node.dilation != unit {
                let _ = write!(out, " d={}", fmt_dims(node.dilation));
            }
            if node.upsample {
                out.push_str(" up");
            }
        }
        if node.kind.is_parametric() && (node.channels_in > 0 || node.channels_out > 0) {
            let _ = write!(out, " c={}->{}", node.channels_in, node.channels_out);
        }
        if node.kind == LayerKind::Conv && node.groups != 1 {
            let _ = write!(out, " g={}", node.groups);
        }
        if node.kind.is_parametric() && node.has_bias {
            out.push_str(" bias");
        }
        if let Some(b) = &node.block {
            let _ = write!(out, " block={b}");
        }
        if node.predecessors.as_slice() != std::slice::from_ref(&prev) {
            let refs: Vec<&str> = node
                .predecessors
                .iter()
                .map(|p| names[p].as_str())
                .collect();
            let _ = write!(out, " from {}", refs.join(","));
        }
        out.push('\n');
        prev = node.id.clone();
    }
    out
}

fn fmt_dims(d: Dims) -> String {
    if d.is_square() {
        d.h.to_string()
    } else {
        d.to_string()
    }
}

/// Maps every vertex id to a unique valid DSL identifier; the input vertex
/// becomes `@input`.
fn dsl_names(g: &ArchGraph) -> HashMap<VertexId, String> {
    let mut used: HashSet<String> = HashSet::from([INPUT_ID.to_string()]);
    let mut names = HashMap::with_capacity(g.len());
    for node in g.topo_nodes() {
        if node.kind == LayerKind::Input {
            names.insert(node.id.clone(), format!("@{INPUT_ID}"));
            continue;
        }
        let base: String = node
            .id
            .as_str()
            .chars()
            .map(|c| if is_ident_char(c) { c } else { '_' })
            .collect();
        let base = if base.is_empty() {
            "v".to_string()
        } else {
            base
        };
        let mut name = base.clone();
        let mut n = 1;
        while !used.insert(name.clone()) {
            name = format!("{base}_{n}");
            n += 1;
        }
        names.insert(node.id.clone(), name);
    }
    names
}
