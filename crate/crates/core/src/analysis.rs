//! Layer classification against an input resolution, and the
//! architecture-level bounds `I_min` and `I_max`.

use serde::Serialize;

use crate::geometry::{Dims, Pair};
use crate::graph::{ArchGraph, LayerKind, VertexId};
use crate::rf::{Growth, RfResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerFlag {
    Productive,
    /// The layer's own minimum receptive field already covers the input,
    /// or its kernel, spread over its input's sampling grid, does.
    Underutilized,
    /// Even the layer's input already sees the whole image on its most
    /// local path, so the layer cannot extract new spatial features.
    Unproductive,
}

impl LayerFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerFlag::Productive => "productive",
            LayerFlag::Underutilized => "underutilized",
            LayerFlag::Unproductive => "unproductive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerReport {
    pub id: VertexId,
    pub name: String,
    pub kind: LayerKind,
    pub kernel: Dims,
    pub stride: Dims,
    pub r_min: Dims,
    pub r_max: Dims,
    pub flag: LayerFlag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub model: String,
    pub input_resolution: Dims,
    pub i_min: Dims,
    pub i_max: Dims,
    pub fully_utilized: bool,
    /// Total parameter count, when every parametric layer has known channels.
    pub params: Option<u64>,
    /// Every vertex, in topological order.
    pub layers: Vec<LayerReport>,
}

impl AnalysisReport {
    pub fn flagged(&self) -> impl Iterator<Item = &LayerReport> + '_ {
        self.layers
            .iter()
            .filter(|l| l.flag != LayerFlag::Productive)
    }
}

/// Extent of a layer's kernel measured in input pixels: the effective kernel
/// times the coarsest sampling interval among its inputs. Layers with a
/// pointwise kernel on an axis have no footprint on that axis (reported as 0).
///
/// A kernel whose footprint reaches the input resolution mostly samples
/// padding even when the minimum receptive field is still below it — a
/// 3×3 conv on a 2×2 feature map, for instance.
pub fn kernel_footprint(g: &ArchGraph, rf: &RfResult, id: &VertexId) -> Option<Dims> {
    let i = g.index_of(id)?;
    Some(footprint_at(g, rf, i))
}

fn footprint_at(g: &ArchGraph, rf: &RfResult, i: usize) -> Dims {
    let node = &g.nodes()[i];
    if !node.kind.is_layer() {
        return Pair::square(0);
    }
    let one = Growth::from(1);
    let g_in = g
        .pred_indices(i)
        .iter()
        .map(|&p| rf.at(p).g_max)
        .fold(Pair::square(one), |acc, x| acc.max(x));
    node.effective_kernel().zip(g_in, |k, gi| {
        if k > 1 {
            (gi * k).ceil().to_integer()
        } else {
            0
        }
    })
}

/// Minimal input resolution at which no layer is wasted: the component-wise
/// maximum, over all layers, of the minimum receptive field and of the
/// kernel footprint. Input and Output vertices are not layers.
pub fn compute_imin(g: &ArchGraph, rf: &RfResult) -> Dims {
    g.order_indices()
        .iter()
        .filter(|&&i| g.nodes()[i].kind.is_layer())
        .map(|&i| rf.at(i).r_min.max(footprint_at(g, rf, i)))
        .fold(Pair::square(1), Pair::max)
}

/// Largest input extent any vertex can relate: the component-wise maximum
/// of the maximum receptive field and of the kernel footprint. The
/// footprint only exceeds the receptive field when strides outgrow kernels
/// and leave gaps in the coverage.
pub fn compute_imax(g: &ArchGraph, rf: &RfResult) -> Dims {
    g.order_indices()
        .iter()
        .map(|&i| rf.at(i).r_max.max(footprint_at(g, rf, i)))
        .fold(Pair::square(1), Pair::max)
}

/// Flags every vertex against `i_res`. A condition only counts when it holds
/// on both axes.
pub fn classify(g: &ArchGraph, rf: &RfResult, i_res: Dims) -> AnalysisReport {
    let layers = g
        .order_indices()
        .iter()
        .map(|&i| {
            let node = &g.nodes()[i];
            let b = rf.at(i);
            let flag = if !node.kind.is_layer() {
                LayerFlag::Productive
            } else {
                let input_min = g
                    .pred_indices(i)
                    .iter()
                    .map(|&p| rf.at(p).r_min)
                    .reduce(Pair::min)
                    .unwrap_or(Pair::square(1));
                if input_min.ge_all(i_res) {
                    LayerFlag::Unproductive
                } else if b.r_min.ge_all(i_res) || footprint_at(g, rf, i).ge_all(i_res) {
                    LayerFlag::Underutilized
                } else {
                    LayerFlag::Productive
                }
            };
            LayerReport {
                id: node.id.clone(),
                name: node.name.clone(),
                kind: node.kind,
                kernel: node.kernel,
                stride: node.stride,
                r_min: b.r_min,
                r_max: b.r_max,
                flag,
            }
        })
        .collect();
    let i_min = compute_imin(g, rf);
    AnalysisReport {
        model: g.name().to_string(),
        input_resolution: i_res,
        i_min,
        i_max: compute_imax(g, rf),
        fully_utilized: i_min.lt_all(i_res),
        params: crate::graph::count_params(g).ok(),
        layers,
    }
}

/// Propagates and classifies in one step.
pub fn analyze(g: &ArchGraph, i_res: Dims) -> AnalysisReport {
    classify(g, &crate::rf::propagate(g), i_res)
}
