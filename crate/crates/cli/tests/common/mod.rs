//! Helpers shared by the command-line tests: running the binary, locating
//! fixtures, and checking documents against the published report schema
//! and the DOT grammar.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(name: &str) -> PathBuf {
    workspace_root().join("fixtures").join(name)
}

/// Every `.rfa` fixture, sorted by file name.
pub fn dsl_fixtures() -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(workspace_root().join("fixtures"))
        .expect("fixtures directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "rfa"))
        .collect();
    paths.sort();
    paths
}

pub fn rfa<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_rfa"))
        .args(args)
        .output()
        .expect("rfa binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn report_schema() -> Value {
    let path = workspace_root().join("docs/report.schema.json");
    let text = std::fs::read_to_string(&path).expect("schema file");
    serde_json::from_str(&text).expect("schema is JSON")
}

/// Validates `doc` against `schema`, supporting the keywords the report
/// schema uses: `$ref` into `$defs`, `type`, `enum`, `const`, `required`,
/// `properties`, `additionalProperties: false`, `items`, `minItems`,
/// `maxItems`, `minimum` and `oneOf`. Returns every violation found.
pub fn schema_violations(schema: &Value, doc: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(schema, schema, doc, "$", &mut errors);
    errors
}

fn resolve<'a>(root: &'a Value, schema: &'a Value) -> &'a Value {
    match schema.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let name = r.strip_prefix("#/$defs/").expect("local $defs reference");
            resolve(root, &root["$defs"][name])
        }
        None => schema,
    }
}

fn type_matches(ty: &str, v: &Value) -> bool {
    match ty {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "integer" => v.is_i64() || v.is_u64(),
        "number" => v.is_number(),
        other => panic!("unsupported type keyword `{other}`"),
    }
}

fn check(root: &Value, schema: &Value, v: &Value, at: &str, errors: &mut Vec<String>) {
    let schema = resolve(root, schema);
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(t) => type_matches(t, v),
            Value::Array(ts) => ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            errors.push(format!("{at}: expected type {ty}, got {v}"));
            return;
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(v) {
            errors.push(format!("{at}: {v} not in {allowed:?}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            errors.push(format!("{at}: expected {c}, got {v}"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errors.push(format!("{at}: {x} below minimum {min}"));
        }
    }
    if let Some(obj) = v.as_object() {
        for key in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                errors.push(format!("{at}: missing required `{key}`"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, value) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => check(root, sub, value, &format!("{at}.{key}"), errors),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errors.push(format!("{at}: unexpected property `{key}`"))
                }
                None => {}
            }
        }
    }
    if let Some(items) = v.as_array() {
        let len = items.len() as u64;
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if len < min {
                errors.push(format!("{at}: {len} items, fewer than {min}"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if len > max {
                errors.push(format!("{at}: {len} items, more than {max}"));
            }
        }
        if let Some(sub) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(root, sub, item, &format!("{at}[{i}]"), errors);
            }
        }
    }
    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let matching = options
            .iter()
            .filter(|o| {
                let mut e = Vec::new();
                check(root, o, v, at, &mut e);
                e.is_empty()
            })
            .count();
        if matching != 1 {
            errors.push(format!("{at}: matches {matching} of the oneOf branches"));
        }
    }
}

/// Checks `text` against the subset of the DOT grammar the report emits:
/// one `digraph "name" { … }` with attribute, node and edge statements,
/// quoted identifiers with escapes, and edges only between declared nodes.
/// Returns the declared node ids.
pub fn check_dot(text: &str) -> Result<Vec<String>, String> {
    let mut lx = DotLexer {
        s: text.as_bytes(),
        pos: 0,
    };
    lx.punct_or_keyword("digraph")?;
    lx.id()?;
    lx.punct_or_keyword("{")?;
    let mut nodes: Vec<String> = Vec::new();
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    loop {
        let head = match lx.token()? {
            Some(Tok::Punct("}")) => break,
            Some(Tok::Id(id)) => id,
            other => return Err(format!("unexpected {other:?} at statement start")),
        };
        let mut next = lx.token()?;
        match next {
            Some(Tok::Punct("=")) => {
                lx.id()?;
                next = lx.token()?;
            }
            Some(Tok::Punct("->")) => {
                edges.push((head, lx.id()?));
                next = lx.token()?;
            }
            _ => {
                let keyword = matches!(head.as_str(), "node" | "edge" | "graph");
                if !keyword && declared.insert(head.clone()) {
                    nodes.push(head);
                }
            }
        }
        if next == Some(Tok::Punct("[")) {
            loop {
                if lx.peek_punct("]") {
                    lx.token()?;
                    break;
                }
                lx.id()?;
                lx.punct_or_keyword("=")?;
                lx.id()?;
                match lx.token()? {
                    Some(Tok::Punct("," | ";")) => {}
                    Some(Tok::Punct("]")) => break,
                    other => return Err(format!("bad attribute separator {other:?}")),
                }
            }
            next = lx.token()?;
        }
        if next != Some(Tok::Punct(";")) {
            return Err(format!("expected `;`, found {next:?}"));
        }
    }
    if let Some(tok) = lx.token()? {
        return Err(format!("trailing {tok:?} after the graph"));
    }
    for (a, b) in &edges {
        if !declared.contains(a) || !declared.contains(b) {
            return Err(format!("edge {a} -> {b} references an undeclared node"));
        }
    }
    Ok(nodes)
}

#[derive(Debug, PartialEq, Eq)]
enum Tok {
    Punct(&'static str),
    /// A bare identifier or the unescaped contents of a quoted string.
    Id(String),
}

struct DotLexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl DotLexer<'_> {
    fn skip_space(&mut self) {
        while self.s.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek_punct(&mut self, p: &str) -> bool {
        self.skip_space();
        self.s[self.pos..].starts_with(p.as_bytes())
    }

    fn id(&mut self) -> Result<String, String> {
        match self.token()? {
            Some(Tok::Id(id)) => Ok(id),
            other => Err(format!("expected an identifier, found {other:?}")),
        }
    }

    fn punct_or_keyword(&mut self, want: &str) -> Result<(), String> {
        match self.token()? {
            Some(Tok::Punct(p)) if p == want => Ok(()),
            Some(Tok::Id(id)) if id == want => Ok(()),
            other => Err(format!("expected `{want}`, found {other:?}")),
        }
    }

    fn token(&mut self) -> Result<Option<Tok>, String> {
        self.skip_space();
        let Some(&c) = self.s.get(self.pos) else {
            return Ok(None);
        };
        self.pos += 1;
        const PUNCT: [&str; 7] = ["{", "}", "[", "]", ";", ",", "="];
        if let Some(p) = PUNCT.iter().find(|p| p.as_bytes()[0] == c) {
            return Ok(Some(Tok::Punct(p)));
        }
        match c {
            b'-' if self.s.get(self.pos) == Some(&b'>') => {
                self.pos += 1;
                Ok(Some(Tok::Punct("->")))
            }
            b'"' => {
                let mut out = Vec::new();
                loop {
                    match self.s.get(self.pos) {
                        None => return Err("unterminated string".into()),
                        Some(b'"') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'\\') => {
                            let esc = *self.s.get(self.pos + 1).ok_or("dangling escape")?;
                            out.push(if esc == b'n' { b'\n' } else { esc });
                            self.pos += 2;
                        }
                        Some(&b) => {
                            out.push(b);
                            self.pos += 1;
                        }
                    }
                }
                let text = String::from_utf8(out).map_err(|e| e.to_string())?;
                Ok(Some(Tok::Id(text)))
            }
            c if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' => {
                let start = self.pos - 1;
                while self
                    .s
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_' || *b == b'.')
                {
                    self.pos += 1;
                }
                let word = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
                Ok(Some(Tok::Id(word)))
            }
            other => Err(format!("unexpected character `{}`", other as char)),
        }
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
