//! Minimum and maximum receptive fields over every input-to-vertex path.
//!
//! Each edge into a vertex with effective kernel `k` and stride `s` maps a
//! path state `(r, g)` to `(r + (k−1)·g, g·s)`: a layer's stride only affects
//! the layers after it. Instead of enumerating paths, every vertex keeps a
//! Pareto frontier of states. A state with larger `r` but smaller `g` can
//! still win further downstream, so a scalar minimum per vertex would be
//! wrong; the frontier is exact and, in practice, tiny.
//!
//! The two spatial axes never interact, so frontiers are kept per axis.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::geometry::{Axis, Dims, Pair};
use crate::graph::{ArchGraph, LayerNode, VertexId};

/// Exact cumulative stride product. Integral unless the graph upsamples.
pub type Growth = Ratio<u64>;

/// Default limit on the number of paths [`brute_force_rf`] will enumerate.
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

/// Receptive field and growth factor of one path prefix, on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathState {
    pub r: u64,
    pub g: Growth,
}

impl PathState {
    pub const ORIGIN: PathState = PathState {
        r: 1,
        g: Ratio::new_raw(1, 1),
    };

    /// State after passing through a layer with effective kernel `k` and
    /// stride `s` (a divisor when `upsample`). A fractional increment, only
    /// possible after upsampling, is rounded up to whole pixels.
    pub fn step(self, k: u64, s: u64, upsample: bool) -> PathState {
        let inc = (self.g * (k - 1)).ceil().to_integer();
        let g = if upsample { self.g / s } else { self.g * s };
        PathState { r: self.r + inc, g }
    }
}

/// Pareto set of path states on one axis, sorted by ascending `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfFrontier {
    states: Vec<PathState>,
}

impl RfFrontier {
    fn origin() -> Self {
        Self {
            states: vec![PathState::ORIGIN],
        }
    }

    /// Keeps the states not dominated from below: no other state has both
    /// `r` and `g` less or equal.
    pub fn minimal(mut states: Vec<PathState>) -> Self {
        states.sort();
        states.dedup();
        let mut kept: Vec<PathState> = Vec::with_capacity(states.len());
        for s in states {
            if kept.last().is_none_or(|last| s.g < last.g) {
                kept.push(s);
            }
        }
        Self { states: kept }
    }

    /// Keeps the states not dominated from above.
    pub fn maximal(mut states: Vec<PathState>) -> Self {
        states.sort_by(|a, b| b.cmp(a));
        states.dedup();
        let mut kept: Vec<PathState> = Vec::with_capacity(states.len());
        for s in states {
            if kept.last().is_none_or(|last| s.g > last.g) {
                kept.push(s);
            }
        }
        kept.reverse();
        Self { states: kept }
    }

    pub fn states(&self) -> &[PathState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn min_r(&self) -> u64 {
        self.states.iter().map(|s| s.r).min().unwrap_or(1)
    }

    fn max_r(&self) -> u64 {
        self.states.iter().map(|s| s.r).max().unwrap_or(1)
    }

    fn min_g(&self) -> Growth {
        self.states
            .iter()
            .map(|s| s.g)
            .min()
            .unwrap_or(Ratio::from(1))
    }

    fn max_g(&self) -> Growth {
        self.states
            .iter()
            .map(|s| s.g)
            .max()
            .unwrap_or(Ratio::from(1))
    }
}

/// Receptive-field bounds at one vertex; `g_*` are growth factors at the
/// vertex output, i.e. including its own stride.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexRf {
    pub r_min: Dims,
    pub r_max: Dims,
    pub g_min: Pair<Growth>,
    pub g_max: Pair<Growth>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct VertexFrontiers {
    min: Pair<RfFrontier>,
    max: Pair<RfFrontier>,
}

/// Result of [`propagate`]: bounds for every vertex of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfResult {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    bounds: Vec<VertexRf>,
    frontiers: Vec<VertexFrontiers>,
}

impl RfResult {
    pub fn get(&self, id: &VertexId) -> Option<&VertexRf> {
        self.index.get(id).map(|&i| &self.bounds[i])
    }

    /// Bounds in the graph's insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, &VertexRf)> + '_ {
        self.ids.iter().zip(&self.bounds)
    }

    /// Pareto-minimal frontier at `id` on `axis`.
    pub fn min_frontier(&self, id: &VertexId, axis: Axis) -> Option<&RfFrontier> {
        self.index
            .get(id)
            .map(|&i| pick(&self.frontiers[i].min, axis))
    }

    /// Pareto-maximal frontier at `id` on `axis`.
    pub fn max_frontier(&self, id: &VertexId, axis: Axis) -> Option<&RfFrontier> {
        self.index
            .get(id)
            .map(|&i| pick(&self.frontiers[i].max, axis))
    }

    pub(crate) fn at(&self, i: usize) -> &VertexRf {
        &self.bounds[i]
    }
}

fn pick<T>(p: &Pair<T>, axis: Axis) -> &T {
    match axis {
        Axis::H => &p.h,
        Axis::W => &p.w,
    }
}

fn axis_params(node: &LayerNode, axis: Axis) -> (u64, u64) {
    (node.effective_kernel().get(axis), node.stride.get(axis))
}

/// Exact minimum and maximum receptive field at every vertex.
pub fn propagate(g: &ArchGraph) -> RfResult {
    let n = g.len();
    let mut frontiers: Vec<Option<VertexFrontiers>> = vec![None; n];
    for &i in g.order_indices() {
        let node = &g.nodes()[i];
        let preds = g.pred_indices(i);
        let f = if preds.is_empty() {
            VertexFrontiers {
                min: Pair::square(RfFrontier::origin()),
                max: Pair::square(RfFrontier::origin()),
            }
        } else {
            let step_all = |select: &dyn Fn(&VertexFrontiers) -> &Pair<RfFrontier>,
                            axis: Axis|
             -> Vec<PathState> {
                let (k, s) = axis_params(node, axis);
                preds
                    .iter()
                    .flat_map(|&p| {
                        let pf = frontiers[p].as_ref().expect("topological order");
                        pick(select(pf), axis).states.clone()
                    })
                    .map(|st| st.step(k, s, node.upsample))
                    .collect()
            };
            VertexFrontiers {
                min: Pair::new(
                    RfFrontier::minimal(step_all(&|f| &f.min, Axis::H)),
                    RfFrontier::minimal(step_all(&|f| &f.min, Axis::W)),
                ),
                max: Pair::new(
                    RfFrontier::maximal(step_all(&|f| &f.max, Axis::H)),
                    RfFrontier::maximal(step_all(&|f| &f.max, Axis::W)),
                ),
            }
        };
        frontiers[i] = Some(f);
    }

    let frontiers: Vec<VertexFrontiers> = frontiers
        .into_iter()
        .map(|f| f.expect("every vertex is reachable"))
        .collect();
    let bounds = frontiers
        .iter()
        .map(|f| VertexRf {
            r_min: Pair::new(f.min.h.min_r(), f.min.w.min_r()),
            r_max: Pair::new(f.max.h.max_r(), f.max.w.max_r()),
            g_min: Pair::new(f.min.h.min_g(), f.min.w.min_g()),
            g_max: Pair::new(f.max.h.max_g(), f.max.w.max_g()),
        })
        .collect();
    let ids: Vec<VertexId> = g.nodes().iter().map(|nd| nd.id.clone()).collect();
    let index = ids
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();
    RfResult {
        ids,
        index,
        bounds,
        frontiers,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RfError {
    #[error("vertex `{0}` is not in the graph")]
    UnknownVertex(VertexId),
    #[error("more than {cap} paths lead to vertex `{id}`")]
    PathExplosion { id: VertexId, cap: u64 },
}

/// Receptive-field bounds at `v` by enumerating every input-to-`v` path.
/// Meant as a test oracle; refuses graphs with more than
/// [`DEFAULT_PATH_CAP`] paths to `v`.
pub fn brute_force_rf(g: &ArchGraph, v: &VertexId) -> Result<(Dims, Dims), RfError> {
    brute_force_rf_with_cap(g, v, DEFAULT_PATH_CAP)
}

/// [`brute_force_rf`] with an explicit path cap.
pub fn brute_force_rf_with_cap(
    g: &ArchGraph,
    v: &VertexId,
    cap: u64,
) -> Result<(Dims, Dims), RfError> {
    let target = g
        .index_of(v)
        .ok_or_else(|| RfError::UnknownVertex(v.clone()))?;

    // Count paths from the input to every vertex, saturating above the cap.
    let mut paths = vec![0u64; g.len()];
    paths[g.input_index()] = 1;
    for &i in g.order_indices() {
        for &p in g.pred_indices(i) {
            paths[i] = paths[i].saturating_add(paths[p]).min(cap.saturating_add(1));
        }
    }
    if paths[target] > cap {
        return Err(RfError::PathExplosion { id: v.clone(), cap });
    }

    // Walk backwards from the target, collecting each path as a vertex list,
    // then evaluate the closed form 1 + Σ (k_i − 1)·Π_{j<i} s_j along it.
    let mut lo = Pair::square(u64::MAX);
    let mut hi = Pair::square(0u64);
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(target, vec![target])];
    while let Some((i, suffix)) = stack.pop() {
        let preds = g.pred_indices(i);
        if preds.is_empty() {
            let r = Pair::new(path_rf(g, &suffix, Axis::H), path_rf(g, &suffix, Axis::W));
            lo = lo.min(r);
            hi = hi.max(r);
            continue;
        }
        for &p in preds {
            let mut next = suffix.clone();
            next.push(p);
            stack.push((p, next));
        }
    }
    Ok((lo, hi))
}

/// Receptive field along one path, given target-first.
fn path_rf(g: &ArchGraph, reversed_path: &[usize], axis: Axis) -> u64 {
    let mut r = 1u64;
    let mut growth = Growth::from(1);
    // The first entry is the input vertex, which contributes nothing.
    for &i in reversed_path.iter().rev().skip(1) {
        let node = &g.nodes()[i];
        let (k, s) = axis_params(node, axis);
        r += (growth * (k - 1)).ceil().to_integer();
        growth = if node.upsample {
            growth / s
        } else {
            growth * s
        };
    }
    r
}
