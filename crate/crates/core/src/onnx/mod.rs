//! ONNX model ingestion.
//!
//! Every ONNX node that consumes at least one activation becomes one vertex;
//! the [`HandlerChain`] decides its kind and geometry. Nodes that only
//! compute on constants or tensor shapes (`Shape`, `Constant`, `Gather` on
//! a shape, weight `Identity` copies, …) are bookkeeping and are dropped:
//! they carry no activations and cannot affect any receptive field.

pub mod handlers;
pub mod proto;

use std::collections::{HashMap, HashSet};

use prost::Message;

use crate::geometry::Pair;
use crate::graph::{ArchGraph, GraphError, LayerKind, LayerNode, RawGraph, VertexId};

pub use handlers::{register_handler, Handler, HandlerChain, NodeView};
use proto::{ModelProto, TensorProto};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OnnxError {
    #[error("malformed ONNX file: {0}")]
    MalformedFile(String),
    #[error("models with more than one input are not supported (inputs: {})", .names.join(", "))]
    MultipleInputs { names: Vec<String> },
    #[error("node `{node}` has no kernel_shape attribute and no weight to infer it from")]
    MissingKernelAttribute { node: String },
    #[error("node `{node}` has an invalid `{attribute}` attribute")]
    InvalidAttribute { node: String, attribute: String },
    #[error("node `{node}` ({op}) is not supported: {reason}")]
    UnsupportedOperator {
        node: String,
        op: String,
        reason: String,
    },
    #[error("cannot insert a handler at position {position}: the fallback handler is at {terminal} and must stay last")]
    TerminalDisplaced { position: usize, terminal: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Decodes an ONNX model using the built-in handler chain.
pub fn load_onnx(bytes: &[u8]) -> Result<ArchGraph, OnnxError> {
    load_onnx_with(bytes, &HandlerChain::builtin())
}

/// Decodes an ONNX model using a custom handler chain.
pub fn load_onnx_with(bytes: &[u8], chain: &HandlerChain) -> Result<ArchGraph, OnnxError> {
    let model = ModelProto::decode(bytes).map_err(|e| OnnxError::MalformedFile(e.to_string()))?;
    let graph = model
        .graph
        .ok_or_else(|| OnnxError::MalformedFile("the model has no graph".into()))?;

    let mut constants: HashMap<String, TensorProto> = graph
        .initializer
        .iter()
        .map(|t| (t.name.clone(), t.clone()))
        .collect();
    // Tensors computed from constants or shapes only, without known values.
    let mut static_tensors: HashSet<String> = HashSet::new();

    let inputs: Vec<_> = graph
        .input
        .iter()
        .filter(|i| !constants.contains_key(&i.name))
        .collect();
    let input = match inputs.as_slice() {
        [] => return Err(OnnxError::MalformedFile("the graph has no input".into())),
        [one] => *one,
        many => {
            return Err(OnnxError::MultipleInputs {
                names: many.iter().map(|i| i.name.clone()).collect(),
            })
        }
    };

    let mut ids = IdAllocator::default();
    let model_name = if graph.name.is_empty() {
        "model".to_string()
    } else {
        sanitize(&graph.name)
    };
    let mut raw = RawGraph::new(model_name);
    if let Some(shape) = input.static_shape() {
        if let [_, _, Some(h), Some(w)] = shape.as_slice() {
            raw.design_resolution = Some(Pair::new(*h, *w));
        }
    }
    let input_id = ids.allocate(&input.name);
    raw.push(LayerNode::new(input_id.clone(), LayerKind::Input).with_name(input.name.clone()));

    let mut producer: HashMap<String, VertexId> = HashMap::new();
    producer.insert(input.name.clone(), input_id);

    for node in &graph.node {
        let label = if node.name.is_empty() {
            node.output.first().cloned().unwrap_or_default()
        } else {
            node.name.clone()
        };

        let mut preds: Vec<VertexId> = Vec::new();
        let mut dynamic = 0usize;
        let mut constant_inputs = Vec::new();
        for name in node.input.iter().filter(|s| !s.is_empty()) {
            if let Some(p) = producer.get(name) {
                dynamic += 1;
                if !preds.contains(p) {
                    preds.push(p.clone());
                }
            } else if constants.contains_key(name) || static_tensors.contains(name) {
                constant_inputs.push(name);
            } else {
                return Err(OnnxError::MalformedFile(format!(
                    "node `{label}` reads tensor `{name}`, which is never produced"
                )));
            }
        }

        match node.op_type.as_str() {
            "Constant" => {
                let value = node
                    .attribute
                    .iter()
                    .find(|a| a.name == "value")
                    .and_then(|a| a.t.clone());
                for out in &node.output {
                    match &value {
                        Some(t) => {
                            constants.insert(out.clone(), t.clone());
                        }
                        None => {
                            static_tensors.insert(out.clone());
                        }
                    }
                }
                continue;
            }
            "Shape" | "Size" => {
                static_tensors.extend(node.output.iter().cloned());
                continue;
            }
            _ if dynamic == 0 => {
                let passthrough = (node.op_type == "Identity")
                    .then(|| {
                        constant_inputs
                            .first()
                            .and_then(|n| constants.get(*n))
                            .cloned()
                    })
                    .flatten();
                for out in &node.output {
                    match &passthrough {
                        Some(t) => {
                            constants.insert(out.clone(), t.clone());
                        }
                        None => {
                            static_tensors.insert(out.clone());
                        }
                    }
                }
                continue;
            }
            _ => {}
        }

        let view = NodeView::new(node, &constants, dynamic);
        let mut vertex = chain.resolve(&view).extract(&view)?;
        let id = ids.allocate(&label);
        vertex.id = id.clone();
        vertex.name = label;
        vertex.predecessors = preds;
        raw.push(vertex);
        for out in &node.output {
            producer.insert(out.clone(), id.clone());
        }
    }

    let mut outputs = 0;
    for out in &graph.output {
        let Some(p) = producer.get(&out.name) else {
            continue;
        };
        let id = ids.allocate(&out.name);
        raw.push(
            LayerNode::new(id, LayerKind::Output)
                .with_name(out.name.clone())
                .from_ids([p.clone()]),
        );
        outputs += 1;
    }
    if outputs == 0 {
        return Err(OnnxError::MalformedFile(
            "no graph output depends on the input".into(),
        ));
    }
    Ok(raw.validate()?)
}

/// Replaces characters outside `[A-Za-z0-9_.]` so ids survive the text format.
fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    let s = s.trim_matches('_');
    if s.is_empty() {
        "v".into()
    } else {
        s.into()
    }
}

#[derive(Default)]
struct IdAllocator {
    used: HashSet<String>,
}

impl IdAllocator {
    fn allocate(&mut self, raw: &str) -> VertexId {
        let base = sanitize(raw);
        let mut id = base.clone();
        let mut n = 2;
        while !self.used.insert(id.clone()) {
            id = format!("{base}_{n}");
            n += 1;
        }
        VertexId::from(id)
    }
}
