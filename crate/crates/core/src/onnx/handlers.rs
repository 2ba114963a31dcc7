//! Operator handlers: each one recognises some ONNX nodes and turns them
//! into a vertex template. The chain is ordered most specific first and ends
//! with a catch-all that maps anything to a neutral vertex.

use std::collections::HashMap;
use std::fmt;

use crate::geometry::{Dims, Pair};
use crate::graph::{LayerKind, LayerNode, MergeOp};

use super::proto::{AttributeProto, NodeProto, TensorProto};
use super::OnnxError;

/// A node together with what the loader knows about its inputs.
pub struct NodeView<'a> {
    pub node: &'a NodeProto,
    constants: &'a HashMap<String, TensorProto>,
    dynamic_inputs: usize,
}

impl<'a> NodeView<'a> {
    pub(crate) fn new(
        node: &'a NodeProto,
        constants: &'a HashMap<String, TensorProto>,
        dynamic_inputs: usize,
    ) -> Self {
        Self {
            node,
            constants,
            dynamic_inputs,
        }
    }

    pub fn op_type(&self) -> &str {
        &self.node.op_type
    }

    pub fn display_name(&self) -> &str {
        if self.node.name.is_empty() {
            self.node.output.first().map_or("", String::as_str)
        } else {
            &self.node.name
        }
    }

    /// Number of inputs that carry activations rather than constants.
    pub fn dynamic_inputs(&self) -> usize {
        self.dynamic_inputs
    }

    pub fn attr(&self, name: &str) -> Option<&'a AttributeProto> {
        self.node.attribute.iter().find(|a| a.name == name)
    }

    pub fn attr_int(&self, name: &str) -> Option<i64> {
        self.attr(name).map(|a| a.i)
    }

    pub fn attr_ints(&self, name: &str) -> Option<&'a [i64]> {
        self.attr(name).map(|a| a.ints.as_slice())
    }

    /// The constant tensor feeding input slot `idx`, if any.
    pub fn constant_input(&self, idx: usize) -> Option<&'a TensorProto> {
        let name = self.node.input.get(idx)?;
        if name.is_empty() {
            return None;
        }
        self.constants.get(name)
    }

    pub fn has_input(&self, idx: usize) -> bool {
        self.node.input.get(idx).is_some_and(|s| !s.is_empty())
    }

    fn spatial_pair(&self, attr: &str, default: u64) -> Result<Dims, OnnxError> {
        match self.attr_ints(attr) {
            None | Some([]) => Ok(Pair::square(default)),
            Some(v) => to_pair(v).ok_or_else(|| OnnxError::InvalidAttribute {
                node: self.display_name().to_string(),
                attribute: attr.to_string(),
            }),
        }
    }
}

/// First two spatial values; 1-D operators get a width of 1.
fn to_pair(v: &[i64]) -> Option<Dims> {
    let h = *v.first()?;
    let w = v.get(1).copied().unwrap_or(1);
    (h >= 1 && w >= 1).then(|| Pair::new(h as u64, w as u64))
}

/// One entry of the handler chain.
pub trait Handler: Send + Sync {
    /// Short label used in diagnostics.
    fn name(&self) -> &str;
    fn matches(&self, node: &NodeView<'_>) -> bool;
    /// Vertex template; the loader fills in id, name and predecessors.
    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError>;
}

fn template(kind: LayerKind) -> LayerNode {
    LayerNode::new("", kind)
}

/// Shape of the weight initializer at `idx`, as unsigned dims.
fn weight_dims(node: &NodeView<'_>, idx: usize) -> Option<Vec<u64>> {
    let t = node.constant_input(idx)?;
    t.dims
        .iter()
        .map(|&d| (d >= 0).then_some(d as u64))
        .collect()
}

struct ConvHandler;

impl Handler for ConvHandler {
    fn name(&self) -> &str {
        "conv"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        matches!(node.op_type(), "Conv" | "ConvTranspose")
    }

    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        let transposed = node.op_type() == "ConvTranspose";
        let w = weight_dims(node, 1).unwrap_or_default();
        let kernel = match node.attr_ints("kernel_shape") {
            Some(k) if !k.is_empty() => to_pair(k),
            _ if w.len() >= 3 => to_pair(&w[2..].iter().map(|&d| d as i64).collect::<Vec<_>>()),
            _ => None,
        }
        .ok_or_else(|| OnnxError::MissingKernelAttribute {
            node: node.display_name().to_string(),
        })?;
        let groups = node.attr_int("group").unwrap_or(1).max(1) as u64;
        let (c_in, c_out) = match w.as_slice() {
            [a, b, ..] if transposed => (*a, b * groups),
            [a, b, ..] => (b * groups, *a),
            _ => (0, 0),
        };
        let depthwise = !transposed && groups > 1 && groups == c_in;
        let mut n = template(if depthwise {
            LayerKind::DepthwiseConv
        } else {
            LayerKind::Conv
        })
        .with_kernel(kernel)
        .with_stride(node.spatial_pair("strides", 1)?)
        .with_dilation(node.spatial_pair("dilations", 1)?)
        .with_upsample(transposed)
        .with_bias(node.has_input(2));
        n.channels_in = c_in;
        n.channels_out = c_out;
        n.groups = groups;
        Ok(n)
    }
}

struct PoolHandler;

impl Handler for PoolHandler {
    fn name(&self) -> &str {
        "pool"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        matches!(node.op_type(), "MaxPool" | "AveragePool" | "LpPool")
    }

    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        let kernel = node
            .attr_ints("kernel_shape")
            .and_then(to_pair)
            .ok_or_else(|| OnnxError::MissingKernelAttribute {
                node: node.display_name().to_string(),
            })?;
        Ok(template(LayerKind::Pool)
            .with_kernel(kernel)
            .with_stride(node.spatial_pair("strides", 1)?)
            .with_dilation(node.spatial_pair("dilations", 1)?))
    }
}

struct GlobalPoolHandler;

impl Handler for GlobalPoolHandler {
    fn name(&self) -> &str {
        "global-pool"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        matches!(
            node.op_type(),
            "GlobalAveragePool" | "GlobalMaxPool" | "GlobalLpPool"
        )
    }

    fn extract(&self, _node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        Ok(template(LayerKind::GlobalPool))
    }
}

/// `Gemm`, or `MatMul` against a constant weight matrix.
struct DenseHandler;

impl Handler for DenseHandler {
    fn name(&self) -> &str {
        "dense"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        match node.op_type() {
            "Gemm" => true,
            "MatMul" => weight_dims(node, 1).is_some_and(|d| d.len() == 2),
            _ => false,
        }
    }

    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        let w = weight_dims(node, 1).unwrap_or_default();
        let trans_b = node.op_type() == "Gemm" && node.attr_int("transB").unwrap_or(0) != 0;
        let (c_in, c_out) = match w.as_slice() {
            [a, b] if trans_b => (*b, *a),
            [a, b] => (*a, *b),
            _ => (0, 0),
        };
        Ok(template(LayerKind::Dense)
            .with_channels(c_in, c_out)
            .with_bias(node.op_type() == "Gemm" && node.has_input(2)))
    }
}

/// Element-wise sums and concatenations of two or more activations.
struct MergeHandler;

impl Handler for MergeHandler {
    fn name(&self) -> &str {
        "merge"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        matches!(node.op_type(), "Add" | "Sum" | "Concat") && node.dynamic_inputs() >= 2
    }

    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        let op = if node.op_type() == "Concat" {
            MergeOp::Concat
        } else {
            MergeOp::Add
        };
        Ok(template(LayerKind::Merge(op)))
    }
}

/// `Resize`/`Upsample` with constant integer scale factors.
struct ResizeHandler;

impl ResizeHandler {
    fn scales(node: &NodeView<'_>) -> Option<Vec<f64>> {
        let idx = match node.op_type() {
            "Upsample" => 1,
            _ => 2,
        };
        node.constant_input(idx)
            .and_then(TensorProto::values_f64)
            .or_else(|| {
                node.attr("scales")
                    .map(|a| a.floats.iter().map(|&f| f as f64).collect())
            })
            .filter(|v| !v.is_empty())
    }
}

impl Handler for ResizeHandler {
    fn name(&self) -> &str {
        "resize"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        matches!(node.op_type(), "Resize" | "Upsample")
    }

    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        let Some(scales) = Self::scales(node) else {
            return Err(OnnxError::UnsupportedOperator {
                node: node.display_name().to_string(),
                op: node.op_type().to_string(),
                reason: "scale factors are not constant".into(),
            });
        };
        // NCHW: spatial scales follow batch and channel.
        let spatial = if scales.len() > 2 {
            &scales[2..]
        } else {
            &scales[..]
        };
        let as_int = |s: f64| -> Option<u64> {
            let r = s.round();
            ((s - r).abs() < 1e-6 && r >= 1.0).then_some(r as u64)
        };
        let h = spatial.first().copied().and_then(as_int);
        let w = spatial.get(1).copied().map_or(Some(1), as_int);
        match (h, w) {
            (Some(h), Some(w)) => Ok(template(LayerKind::Pool)
                .with_stride(Pair::new(h, w))
                .with_upsample(true)),
            _ => Err(OnnxError::UnsupportedOperator {
                node: node.display_name().to_string(),
                op: node.op_type().to_string(),
                reason: format!("non-integer or shrinking scale factors {spatial:?}"),
            }),
        }
    }
}

/// Recurrences and control flow cannot be flattened into a static DAG.
struct ControlFlowHandler;

impl Handler for ControlFlowHandler {
    fn name(&self) -> &str {
        "control-flow"
    }

    fn matches(&self, node: &NodeView<'_>) -> bool {
        matches!(
            node.op_type(),
            "LSTM" | "GRU" | "RNN" | "Loop" | "If" | "Scan"
        )
    }

    fn extract(&self, node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        Err(OnnxError::UnsupportedOperator {
            node: node.display_name().to_string(),
            op: node.op_type().to_string(),
            reason: "loops and recurrences have no static receptive field".into(),
        })
    }
}

/// Catch-all: any other operator is treated as a 1×1, stride-1 layer.
struct NeutralFallback;

impl Handler for NeutralFallback {
    fn name(&self) -> &str {
        "neutral"
    }

    fn matches(&self, _node: &NodeView<'_>) -> bool {
        true
    }

    fn extract(&self, _node: &NodeView<'_>) -> Result<LayerNode, OnnxError> {
        Ok(template(LayerKind::Neutral))
    }
}

/// Ordered handler list whose last entry always matches.
pub struct HandlerChain {
    handlers: Vec<Box<dyn Handler>>,
}

impl HandlerChain {
    /// The built-in handlers followed by the neutral fallback.
    pub fn builtin() -> Self {
        Self {
            handlers: vec![
                Box::new(ControlFlowHandler),
                Box::new(ConvHandler),
                Box::new(PoolHandler),
                Box::new(GlobalPoolHandler),
                Box::new(DenseHandler),
                Box::new(MergeHandler),
                Box::new(ResizeHandler),
                Box::new(NeutralFallback),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.handlers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handlers.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.handlers.iter().map(|h| h.name()).collect()
    }

    /// Inserts `handler` at `position`. Positions past the fallback's index
    /// are rejected so the catch-all stays last.
    pub fn register(
        mut self,
        handler: Box<dyn Handler>,
        position: usize,
    ) -> Result<Self, OnnxError> {
        let terminal = self.handlers.len() - 1;
        if position > terminal {
            return Err(OnnxError::TerminalDisplaced { position, terminal });
        }
        self.handlers.insert(position, handler);
        Ok(self)
    }

    /// The first handler that matches `node`.
    pub fn resolve(&self, node: &NodeView<'_>) -> &dyn Handler {
        self.handlers
            .iter()
            .find(|h| h.matches(node))
            .map(Box::as_ref)
            .expect("the fallback matches every node")
    }
}

impl Default for HandlerChain {
    fn default() -> Self {
        Self::builtin()
    }
}

impl fmt::Debug for HandlerChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

/// Free-function form of [`HandlerChain::register`].
pub fn register_handler(
    chain: HandlerChain,
    handler: Box<dyn Handler>,
    position: usize,
) -> Result<HandlerChain, OnnxError> {
    chain.register(handler, position)
}
