//! Architecture graph IR.
//!
//! A [`RawGraph`] is a mutable candidate; [`RawGraph::validate`] checks the
//! structural invariants and freezes it into an [`ArchGraph`], which every
//! analysis consumes by shared reference.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::geometry::{effective_kernel, Dims, Pair};

/// Opaque vertex identifier, unique within one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl Serialize for VertexId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MergeOp {
    Add,
    Concat,
}

/// What a vertex does, as far as receptive-field arithmetic is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Input,
    Conv,
    DepthwiseConv,
    Pool,
    GlobalPool,
    Dense,
    /// Any layer without spatial extent: activations, normalization, reshapes,
    /// and every operator no more specific handler recognised.
    Neutral,
    Merge(MergeOp),
    Output,
}

impl LayerKind {
    pub const ALL: [LayerKind; 10] = [
        LayerKind::Input,
        LayerKind::Conv,
        LayerKind::DepthwiseConv,
        LayerKind::Pool,
        LayerKind::GlobalPool,
        LayerKind::Dense,
        LayerKind::Neutral,
        LayerKind::Merge(MergeOp::Add),
        LayerKind::Merge(MergeOp::Concat),
        LayerKind::Output,
    ];

    /// Short lowercase name used by the text format, JSON reports and DOT labels.
    pub fn keyword(self) -> &'static str {
        match self {
            LayerKind::Input => "input",
            LayerKind::Conv => "conv",
            LayerKind::DepthwiseConv => "dwconv",
            LayerKind::Pool => "pool",
            LayerKind::GlobalPool => "gpool",
            LayerKind::Dense => "dense",
            LayerKind::Neutral => "neutral",
            LayerKind::Merge(MergeOp::Add) => "add",
            LayerKind::Merge(MergeOp::Concat) => "concat",
            LayerKind::Output => "output",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Kinds that may carry a kernel, stride and dilation other than 1.
    pub fn is_spatial(self) -> bool {
        matches!(
            self,
            LayerKind::Conv | LayerKind::DepthwiseConv | LayerKind::Pool
        )
    }

    /// Kinds with trainable weights.
    pub fn is_parametric(self) -> bool {
        matches!(
            self,
            LayerKind::Conv | LayerKind::DepthwiseConv | LayerKind::Dense
        )
    }

    /// Everything except the graph's Input and Output markers.
    pub fn is_layer(self) -> bool {
        !matches!(self, LayerKind::Input | LayerKind::Output)
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl Serialize for LayerKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.keyword())
    }
}

/// One vertex of the architecture DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerNode {
    pub id: VertexId,
    pub name: String,
    pub kind: LayerKind,
    pub kernel: Dims,
    pub stride: Dims,
    pub dilation: Dims,
    /// The stride divides rather than multiplies the sampling interval
    /// (transposed convolution, unpooling).
    pub upsample: bool,
    /// 0 means unknown.
    pub channels_in: u64,
    /// 0 means unknown.
    pub channels_out: u64,
    pub groups: u64,
    pub has_bias: bool,
    /// Building-block label; removal during pruning happens per block.
    pub block: Option<String>,
    pub predecessors: Vec<VertexId>,
}

impl LayerNode {
    /// A vertex with unit geometry, unknown channels and no predecessors.
    pub fn new(id: impl Into<VertexId>, kind: LayerKind) -> Self {
        let id = id.into();
        Self {
            name: id.as_str().to_string(),
            id,
            kind,
            kernel: Pair::square(1),
            stride: Pair::square(1),
            dilation: Pair::square(1),
            upsample: false,
            channels_in: 0,
            channels_out: 0,
            groups: 1,
            has_bias: false,
            block: None,
            predecessors: Vec::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_kernel(mut self, kernel: Dims) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_stride(mut self, stride: Dims) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_dilation(mut self, dilation: Dims) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_channels(mut self, channels_in: u64, channels_out: u64) -> Self {
        self.channels_in = channels_in;
        self.channels_out = channels_out;
        if self.kind == LayerKind::DepthwiseConv {
            self.groups = channels_in.max(1);
        }
        self
    }

    pub fn with_groups(mut self, groups: u64) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_bias(mut self, has_bias: bool) -> Self {
        self.has_bias = has_bias;
        self
    }

    pub fn with_block(mut self, block: impl Into<String>) -> Self {
        self.block = Some(block.into());
        self
    }

    pub fn with_upsample(mut self, upsample: bool) -> Self {
        self.upsample = upsample;
        self
    }

    pub fn from_ids<I, T>(mut self, preds: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<VertexId>,
    {
        self.predecessors = preds.into_iter().map(Into::into).collect();
        self
    }

    pub fn effective_kernel(&self) -> Dims {
        effective_kernel(self.kernel, self.dilation)
    }

    /// True when some stride component accelerates receptive-field growth.
    pub fn is_downsampling(&self) -> bool {
        !self.upsample && self.stride.any(|s| s > 1)
    }

    /// Weight (and bias) count of this vertex alone.
    pub fn param_count(&self) -> Result<u64, GraphError> {
        if !self.kind.is_parametric() {
            return Ok(0);
        }
        if self.channels_in == 0 || self.channels_out == 0 {
            return Err(GraphError::UnknownChannels {
                id: self.id.clone(),
            });
        }
        let bias = if self.has_bias { self.channels_out } else { 0 };
        let weights = match self.kind {
            LayerKind::Dense => self.channels_in * self.channels_out,
            _ => {
                self.kernel.h
                    * self.kernel.w
                    * (self.channels_in / self.groups.max(1))
                    * self.channels_out
            }
        };
        Ok(weights + bias)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate vertex id `{id}`")]
    DuplicateId { id: VertexId },
    #[error("vertex `{id}` references missing predecessor `{missing}`")]
    MissingPredecessor { id: VertexId, missing: VertexId },
    #[error("graph has no input vertex")]
    NoInput,
    #[error("models with more than one input are not supported (inputs: {})", join_ids(.ids))]
    MultipleInputs { ids: Vec<VertexId> },
    #[error("graph has no output vertex")]
    NoOutput,
    #[error("cycle detected through vertices {}", join_ids(.ids))]
    CycleDetected { ids: Vec<VertexId> },
    #[error("vertex `{id}` is not reachable from the input")]
    UnreachableVertex { id: VertexId },
    #[error("vertex `{id}`: {reason}")]
    InvalidVertex { id: VertexId, reason: String },
    #[error("vertex `{id}` has unknown channel counts")]
    UnknownChannels { id: VertexId },
}

fn join_ids(ids: &[VertexId]) -> String {
    ids.iter()
        .map(|id| format!("`{id}`"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Unvalidated graph candidate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawGraph {
    pub name: String,
    pub design_resolution: Option<Dims>,
    pub nodes: Vec<LayerNode>,
}

impl RawGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            design_resolution: None,
            nodes: Vec::new(),
        }
    }

    pub fn with_resolution(mut self, res: Dims) -> Self {
        self.design_resolution = Some(res);
        self
    }

    pub fn push(&mut self, node: LayerNode) -> &mut Self {
        self.nodes.push(node);
        self
    }

    pub fn with(mut self, node: LayerNode) -> Self {
        self.nodes.push(node);
        self
    }

    /// Checks every graph invariant and freezes the candidate.
    pub fn validate(self) -> Result<ArchGraph, GraphError> {
        ArchGraph::build(self)
    }
}

/// Validated, immutable architecture DAG with exactly one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchGraph {
    name: String,
    design_resolution: Option<Dims>,
    nodes: Vec<LayerNode>,
    index: HashMap<VertexId, usize>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    input: usize,
    outputs: Vec<usize>,
    order: Vec<usize>,
}

impl ArchGraph {
    fn build(raw: RawGraph) -> Result<Self, GraphError> {
        let RawGraph {
            name,
            design_resolution,
            nodes,
        } = raw;

        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateId {
                    id: node.id.clone(),
                });
            }
        }

        let mut preds = Vec::with_capacity(nodes.len());
        for node in &nodes {
            let mut p = Vec::with_capacity(node.predecessors.len());
            for pid in &node.predecessors {
                match index.get(pid) {
                    Some(&j) => p.push(j),
                    None => {
                        return Err(GraphError::MissingPredecessor {
                            id: node.id.clone(),
                            missing: pid.clone(),
                        })
                    }
                }
            }
            preds.push(p);
        }

        let inputs: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].kind == LayerKind::Input)
            .collect();
        let input = match inputs.as_slice() {
            [] => return Err(GraphError::NoInput),
            [i] => *i,
            many => {
                return Err(GraphError::MultipleInputs {
                    ids: many.iter().map(|&i| nodes[i].id.clone()).collect(),
                })
            }
        };

        for (node, p) in nodes.iter().zip(&preds) {
            check_vertex(node, p.len())?;
        }

        let mut succs = vec![Vec::new(); nodes.len()];
        for (i, p) in preds.iter().enumerate() {
            for &j in p {
                if !succs[j].contains(&i) {
                    succs[j].push(i);
                }
            }
        }

        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![input];
        seen[input] = true;
        while let Some(i) = stack.pop() {
            for &s in &succs[i] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(GraphError::UnreachableVertex {
                id: nodes[i].id.clone(),
            });
        }

        let order = kahn(&preds, &succs).map_err(|stuck| GraphError::CycleDetected {
            ids: stuck.into_iter().map(|i| nodes[i].id.clone()).collect(),
        })?;

        let outputs: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].kind == LayerKind::Output)
            .collect();
        if outputs.is_empty() {
            return Err(GraphError::NoOutput);
        }

        Ok(Self {
            name,
            design_resolution,
            nodes,
            index,
            preds,
            succs,
            input,
            outputs,
            order,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn design_resolution(&self) -> Option<Dims> {
        self.design_resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Vertices in insertion order.
    pub fn nodes(&self) -> &[LayerNode] {
        &self.nodes
    }

    pub fn node(&self, id: &VertexId) -> Option<&LayerNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &VertexId) -> bool {
        self.index.contains_key(id)
    }

    pub fn input_id(&self) -> &VertexId {
        &self.nodes[self.input].id
    }

    pub fn output_ids(&self) -> Vec<&VertexId> {
        self.outputs.iter().map(|&i| &self.nodes[i].id).collect()
    }

    /// Topological order; ties are broken by insertion order.
    pub fn topo_order(&self) -> Vec<&VertexId> {
        self.order.iter().map(|&i| &self.nodes[i].id).collect()
    }

    /// Vertices in topological order.
    pub fn topo_nodes(&self) -> impl Iterator<Item = &LayerNode> + '_ {
        self.order.iter().map(|&i| &self.nodes[i])
    }

    pub fn successors(&self, id: &VertexId) -> Vec<&VertexId> {
        self.index
            .get(id)
            .map(|&i| self.succs[i].iter().map(|&s| &self.nodes[s].id).collect())
            .unwrap_or_default()
    }

    pub(crate) fn index_of(&self, id: &VertexId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn order_indices(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn pred_indices(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub(crate) fn input_index(&self) -> usize {
        self.input
    }

    /// Back to an editable candidate; `to_raw().validate()` reproduces `self`.
    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            name: self.name.clone(),
            design_resolution: self.design_resolution,
            nodes: self.nodes.clone(),
        }
    }

    /// Structural equality up to vertex ids and display names: vertices are
    /// paired by topological position and compared on every analysis-relevant
    /// field, with predecessors compared by position.
    pub fn same_structure(&self, other: &ArchGraph) -> bool {
        if self.len() != other.len() || self.design_resolution != other.design_resolution {
            return false;
        }
        let pos = |g: &ArchGraph| {
            let mut p = vec![0usize; g.len()];
            for (k, &i) in g.order.iter().enumerate() {
                p[i] = k;
            }
            p
        };
        let (pa, pb) = (pos(self), pos(other));
        self.order.iter().zip(&other.order).all(|(&i, &j)| {
            let (a, b) = (&self.nodes[i], &other.nodes[j]);
            a.kind == b.kind
                && a.kernel == b.kernel
                && a.stride == b.stride
                && a.dilation == b.dilation
                && a.upsample == b.upsample
                && a.channels_in == b.channels_in
                && a.channels_out == b.channels_out
                && a.groups == b.groups
                && a.has_bias == b.has_bias
                && a.block == b.block
                && self.preds[i].len() == other.preds[j].len()
                && self.preds[i]
                    .iter()
                    .zip(&other.preds[j])
                    .all(|(&x, &y)| pa[x] == pb[y])
        })
    }
}

fn check_vertex(node: &LayerNode, n_preds: usize) -> Result<(), GraphError> {
    let invalid = |reason: String| GraphError::InvalidVertex {
        id: node.id.clone(),
        reason,
    };
    for (what, v) in [
        ("kernel", node.kernel),
        ("stride", node.stride),
        ("dilation", node.dilation),
    ] {
        if !v.all(|x| x >= 1) {
            return Err(invalid(format!(
                "{what} {v} must be at least 1 on both axes"
            )));
        }
    }
    if !node.kind.is_spatial() {
        let unit = Pair::square(1);
        if node.kernel != unit || node.stride != unit || node.dilation != unit || node.upsample {
            return Err(invalid(format!(
                "{} vertices must have kernel, stride and dilation 1x1",
                node.kind
            )));
        }
    }
    if node.groups == 0 {
        return Err(invalid("groups must be positive".into()));
    }
    if node.channels_in > 0 && !node.channels_in.is_multiple_of(node.groups) {
        return Err(invalid(format!(
            "{} input channels are not divisible into {} groups",
            node.channels_in, node.groups
        )));
    }
    match (node.kind, n_preds) {
        (LayerKind::Input, 0) => Ok(()),
        (LayerKind::Input, _) => Err(invalid("input vertex cannot have predecessors".into())),
        (_, 0) => Err(invalid("vertex has no predecessors".into())),
        _ => Ok(()),
    }
}

/// Kahn's algorithm with a min-heap over insertion indices. On failure returns
/// the vertices left on a cycle (or downstream of one).
fn kahn(preds: &[Vec<usize>], succs: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = preds.len();
    let mut indeg: Vec<usize> = preds
        .iter()
        .map(|p| p.iter().collect::<HashSet<_>>().len())
        .collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &s in &succs[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        let placed: HashSet<usize> = order.into_iter().collect();
        Err((0..n).filter(|i| !placed.contains(i)).collect())
    }
}

/// Total weight count over all parametric vertices. Normalization layers are
/// not modelled and contribute nothing.
pub fn count_params(g: &ArchGraph) -> Result<u64, GraphError> {
    g.nodes().iter().map(LayerNode::param_count).sum()
}
