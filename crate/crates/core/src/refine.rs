//! Architecture rewrites that restore full utilization at a target input
//! resolution: stride reduction ("less downsampling") and prune-and-widen
//! ("shorter and wider").
//!
//! Every proposal's predicted `I_min` is obtained by actually performing
//! the rewrite and re-running the analysis, so [`apply`] followed by
//! [`compute_imin`] reproduces it exactly.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::analysis::{compute_imin, kernel_footprint};
use crate::geometry::{Dims, Pair};
use crate::graph::{count_params, ArchGraph, GraphError, LayerKind, MergeOp, RawGraph, VertexId};
use crate::rf::propagate;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrideChange {
    pub id: VertexId,
    pub old_stride: Dims,
    pub new_stride: Dims,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WidthChange {
    pub id: VertexId,
    pub old_channels: u64,
    pub new_channels: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Refinement {
    StrideReduction {
        changes: Vec<StrideChange>,
    },
    PruneAndWiden {
        removed: Vec<VertexId>,
        widened: Vec<WidthChange>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinementProposal {
    #[serde(flatten)]
    pub variant: Refinement,
    pub predicted_imin: Dims,
    /// New parameter count minus old.
    pub param_delta: i64,
}

impl RefinementProposal {
    /// A proposal that leaves the graph untouched.
    pub fn is_identity(&self) -> bool {
        match &self.variant {
            Refinement::StrideReduction { changes } => changes.is_empty(),
            Refinement::PruneAndWiden { removed, widened } => {
                removed.is_empty() && widened.is_empty()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RefineError {
    #[error("already fully utilized at {i_res}: I_min is {i_min}")]
    AlreadyFullyUtilized { i_min: Dims, i_res: Dims },
    #[error(
        "no combination of at most {max_changes} stride reductions brings I_min below {i_res}"
    )]
    NoFeasibleProposal { max_changes: usize, i_res: Dims },
    #[error("removing the flagged layers breaks the graph: {reason}")]
    RemovalBreaksGraph { reason: String },
    #[error("vertex `{id}` would be fed by several unrelated vertices after removal; resolve the merge manually")]
    AmbiguousRewire { id: VertexId },
    #[error("grouped convolution `{id}` cannot absorb a change of its input channels")]
    GroupedChannels { id: VertexId },
    #[error("vertex `{id}` cannot be widened: {reason}")]
    InvalidWidenTarget { id: VertexId, reason: String },
    #[error("no width multiplier keeps the parameter count within {tolerance} of the original (best relative change {best:.4})")]
    CannotMeetTolerance { tolerance: f64, best: f64 },
    #[error("proposal does not match this graph: {reason}")]
    StaleProposal { reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Settings for [`enumerate_stride_reductions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrideSearch {
    /// Largest number of vertices changed by one proposal.
    pub max_changes: usize,
}

impl Default for StrideSearch {
    fn default() -> Self {
        Self { max_changes: 2 }
    }
}

/// Stride-reduction proposals that bring `I_min` below `i_res`, best first.
///
/// Subsets of up to `max_changes` downsampling vertices have their stride set
/// to 1. Feasible proposals are ordered by how close their `I_min` stays to
/// `i_res` (too small a receptive field hurts as well), then by fewer
/// changes, then by how late in the network the changes happen.
pub fn enumerate_stride_reductions(
    g: &ArchGraph,
    i_res: Dims,
    search: StrideSearch,
) -> Result<Vec<RefinementProposal>, RefineError> {
    let i_min = compute_imin(g, &propagate(g));
    if i_min.lt_all(i_res) {
        return Err(RefineError::AlreadyFullyUtilized { i_min, i_res });
    }

    let candidates: Vec<(usize, &VertexId)> = g
        .topo_nodes()
        .enumerate()
        .filter(|(_, n)| n.is_downsampling())
        .map(|(pos, n)| (pos, &n.id))
        .collect();

    let mut found: Vec<(Vec<usize>, RefinementProposal)> = Vec::new();
    let mut subset: Vec<usize> = Vec::new();
    for size in 1..=search.max_changes.min(candidates.len()) {
        subset.clear();
        subset.extend(0..size);
        loop {
            let changes: Vec<StrideChange> = subset
                .iter()
                .map(|&c| {
                    let id = candidates[c].1;
                    StrideChange {
                        id: id.clone(),
                        old_stride: g.node(id).expect("candidate exists").stride,
                        new_stride: Pair::square(1),
                    }
                })
                .collect();
            let rewritten = rewrite_strides(g, &changes)?;
            let predicted = compute_imin(&rewritten, &propagate(&rewritten));
            if predicted.lt_all(i_res) {
                let mut depth: Vec<usize> = subset.iter().map(|&c| candidates[c].0).collect();
                depth.sort_unstable_by(|a, b| b.cmp(a));
                found.push((
                    depth,
                    RefinementProposal {
                        variant: Refinement::StrideReduction { changes },
                        predicted_imin: predicted,
                        param_delta: 0,
                    },
                ));
            }
            if !next_combination(&mut subset, candidates.len()) {
                break;
            }
        }
    }

    if found.is_empty() {
        return Err(RefineError::NoFeasibleProposal {
            max_changes: search.max_changes,
            i_res,
        });
    }
    let gap =
        |p: &RefinementProposal| (i_res.h - p.predicted_imin.h) + (i_res.w - p.predicted_imin.w);
    found.sort_by(|(da, a), (db, b)| {
        gap(a)
            .cmp(&gap(b))
            .then(da.len().cmp(&db.len()))
            .then_with(|| db.cmp(da))
    });
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Advances `subset` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn stale(reason: String) -> RefineError {
    RefineError::StaleProposal { reason }
}

fn rewrite_strides(g: &ArchGraph, changes: &[StrideChange]) -> Result<ArchGraph, RefineError> {
    let mut raw = g.to_raw();
    for ch in changes {
        let node = raw
            .nodes
            .iter_mut()
            .find(|n| n.id == ch.id)
            .ok_or_else(|| stale(format!("vertex `{}` does not exist", ch.id)))?;
        if node.stride != ch.old_stride {
            return Err(stale(format!(
                "vertex `{}` has stride {}, expected {}",
                ch.id, node.stride, ch.old_stride
            )));
        }
        node.stride = ch.new_stride;
    }
    Ok(raw.validate()?)
}

/// Settings for [`prune_and_widen`].
#[derive(Debug, Clone, PartialEq)]
pub struct PruneOptions {
    /// Vertices whose output channels are scaled. `None` selects every
    /// ungrouped convolution placed before the first removed vertex.
    pub widenable: Option<Vec<VertexId>>,
    /// Allowed relative parameter change.
    pub tolerance: f64,
    /// Widened channel counts are rounded to a multiple of this.
    pub quantum: u64,
}

impl Default for PruneOptions {
    fn default() -> Self {
        Self {
            widenable: None,
            tolerance: 0.02,
            quantum: 1,
        }
    }
}

/// Vertices to delete so that no remaining layer reaches `i_res`.
///
/// Repeatedly takes the first spatial layer (in topological order) whose
/// minimum receptive field or kernel footprint reaches `i_res` on some axis,
/// deletes it together with the rest of its building block, and re-analyzes.
/// Removing a block shrinks the receptive fields behind it, so later layers
/// are only dropped if they are still wasted afterwards.
fn select_removals(g: &ArchGraph, i_res: Dims) -> Result<Vec<VertexId>, RefineError> {
    let mut removed: HashSet<VertexId> = HashSet::new();
    let mut current = g.clone();
    loop {
        let rf = propagate(&current);
        let hit = current.topo_nodes().find(|n| {
            n.kind.is_spatial() && {
                let b = rf.get(&n.id).expect("propagated");
                let fp = kernel_footprint(&current, &rf, &n.id).expect("vertex exists");
                b.r_min.max(fp).ge_any(i_res)
            }
        });
        let Some(hit) = hit else { break };
        let victims: Vec<VertexId> = match &hit.block {
            Some(block) => current
                .nodes()
                .iter()
                .filter(|n| n.block.as_ref() == Some(block) && n.kind.is_layer())
                .map(|n| n.id.clone())
                .collect(),
            None => vec![hit.id.clone()],
        };
        removed.extend(victims);
        current = remove_vertices(g, &removed)?;
    }
    Ok(g.topo_nodes()
        .filter(|n| removed.contains(&n.id))
        .map(|n| n.id.clone())
        .collect())
}

/// Deletes `removed` and reconnects every survivor to its nearest surviving
/// ancestors. Channel counts are left as they were.
fn remove_vertices(g: &ArchGraph, removed: &HashSet<VertexId>) -> Result<ArchGraph, RefineError> {
    if removed.is_empty() {
        return Ok(g.clone());
    }
    let mut resolved: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
    for node in g.topo_nodes() {
        let mut preds: Vec<VertexId> = Vec::new();
        for p in &node.predecessors {
            let replacement = if removed.contains(p) {
                resolved[p].clone()
            } else {
                vec![p.clone()]
            };
            for r in replacement {
                if !preds.contains(&r) {
                    preds.push(r);
                }
            }
        }
        if !removed.contains(&node.id)
            && !matches!(node.kind, LayerKind::Merge(_))
            && preds.len() > node.predecessors.len()
        {
            return Err(RefineError::AmbiguousRewire {
                id: node.id.clone(),
            });
        }
        resolved.insert(node.id.clone(), preds);
    }

    let mut raw = RawGraph {
        name: g.name().to_string(),
        design_resolution: g.design_resolution(),
        nodes: Vec::new(),
    };
    for node in g.nodes() {
        if removed.contains(&node.id) {
            continue;
        }
        let mut n = node.clone();
        n.predecessors = resolved.remove(&node.id).unwrap_or_default();
        raw.nodes.push(n);
    }
    if !raw.nodes.iter().any(|n| n.kind.is_spatial()) {
        return Err(RefineError::RemovalBreaksGraph {
            reason: "no spatial layer would remain".into(),
        });
    }
    raw.validate().map_err(|e| RefineError::RemovalBreaksGraph {
        reason: e.to_string(),
    })
}

/// Output channels of every vertex, for channel bookkeeping. Input and
/// other unknown counts are 0.
fn output_channels(g: &ArchGraph) -> HashMap<VertexId, u64> {
    let mut out: HashMap<VertexId, u64> = HashMap::with_capacity(g.len());
    for node in g.topo_nodes() {
        let preds = node.predecessors.iter().map(|p| out[p]);
        let c = match node.kind {
            LayerKind::Input => 0,
            k if k.is_parametric() => node.channels_out,
            LayerKind::Merge(MergeOp::Concat) => preds.sum(),
            _ => preds.max().unwrap_or(0),
        };
        out.insert(node.id.clone(), c);
    }
    out
}

/// Removes vertices, sets new output widths, and propagates the resulting
/// channel counts into every consumer's input channels.
fn rewrite_prune(
    g: &ArchGraph,
    removed: &HashSet<VertexId>,
    widths: &HashMap<VertexId, u64>,
) -> Result<ArchGraph, RefineError> {
    let before = output_channels(g);
    let pruned = remove_vertices(g, removed)?;
    let mut raw = pruned.to_raw();
    let position: HashMap<VertexId, usize> = raw
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.clone(), i))
        .collect();

    let mut after: HashMap<VertexId, u64> = HashMap::with_capacity(raw.nodes.len());
    for id in pruned.topo_order() {
        let i = position[id];
        let old_in: u64 = channel_input(g, &before, id);
        let new_in: u64 = {
            let node = &raw.nodes[i];
            let ins = node.predecessors.iter().map(|p| after[p]);
            if node.kind == LayerKind::Merge(MergeOp::Concat) {
                ins.sum()
            } else {
                ins.max().unwrap_or(0)
            }
        };
        let node = &mut raw.nodes[i];
        match node.kind {
            LayerKind::DepthwiseConv => {
                if old_in > 0 && new_in != old_in && node.channels_in > 0 {
                    let mult = node.channels_out / node.channels_in;
                    node.channels_in = new_in;
                    node.groups = new_in;
                    node.channels_out = new_in * mult;
                }
            }
            LayerKind::Conv | LayerKind::Dense => {
                if old_in > 0 && new_in != old_in && node.channels_in > 0 {
                    if node.groups != 1 {
                        return Err(RefineError::GroupedChannels {
                            id: node.id.clone(),
                        });
                    }
                    let scaled = (node.channels_in as u128 * new_in as u128 + old_in as u128 / 2)
                        / old_in as u128;
                    node.channels_in = (scaled as u64).max(1);
                }
                if let Some(&w) = widths.get(&node.id) {
                    node.channels_out = w;
                }
            }
            _ => {}
        }
        let c = match node.kind {
            LayerKind::Input => 0,
            k if k.is_parametric() => node.channels_out,
            _ => new_in,
        };
        after.insert(node.id.clone(), c);
    }
    Ok(raw.validate()?)
}

/// Channels flowing into `id` in the original graph.
fn channel_input(g: &ArchGraph, out: &HashMap<VertexId, u64>, id: &VertexId) -> u64 {
    let node = g.node(id).expect("vertex exists");
    let ins = node.predecessors.iter().map(|p| out[p]);
    if node.kind == LayerKind::Merge(MergeOp::Concat) {
        ins.sum()
    } else {
        ins.max().unwrap_or(0)
    }
}

fn scaled_width(c: u64, m: f64, quantum: u64) -> u64 {
    let q = quantum.max(1) as f64;
    let steps = (c as f64 * m / q).round().max(1.0);
    steps as u64 * quantum.max(1)
}

/// Removes every building block whose layers waste receptive field at
/// `i_res`, then widens earlier layers by one common multiplier chosen by
/// bisection so that the parameter count stays within `tolerance`.
pub fn prune_and_widen(
    g: &ArchGraph,
    i_res: Dims,
    options: &PruneOptions,
) -> Result<RefinementProposal, RefineError> {
    let original = count_params(g)?;
    let removed_list = select_removals(g, i_res)?;
    if removed_list.is_empty() {
        return Ok(RefinementProposal {
            variant: Refinement::PruneAndWiden {
                removed: Vec::new(),
                widened: Vec::new(),
            },
            predicted_imin: compute_imin(g, &propagate(g)),
            param_delta: 0,
        });
    }
    let removed: HashSet<VertexId> = removed_list.iter().cloned().collect();

    let widenable: Vec<VertexId> = match &options.widenable {
        Some(ids) => {
            for id in ids {
                let node = g.node(id).ok_or_else(|| RefineError::InvalidWidenTarget {
                    id: id.clone(),
                    reason: "no such vertex".into(),
                })?;
                let reason = if removed.contains(id) {
                    Some("it is removed")
                } else if !matches!(node.kind, LayerKind::Conv | LayerKind::Dense) {
                    Some("only convolutions and dense layers are widened")
                } else if node.groups != 1 {
                    Some("grouped convolutions are not widened")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(RefineError::InvalidWidenTarget {
                        id: id.clone(),
                        reason: reason.into(),
                    });
                }
            }
            ids.clone()
        }
        None => g
            .topo_nodes()
            .take_while(|n| !removed.contains(&n.id))
            .filter(|n| n.kind == LayerKind::Conv && n.groups == 1)
            .map(|n| n.id.clone())
            .collect(),
    };

    let original_f = original as f64;
    let evaluate = |m: f64| -> Result<(HashMap<VertexId, u64>, ArchGraph, i64), RefineError> {
        let widths: HashMap<VertexId, u64> = widenable
            .iter()
            .map(|id| {
                let c = g.node(id).expect("checked").channels_out;
                (id.clone(), scaled_width(c, m, options.quantum))
            })
            .collect();
        let rewritten = rewrite_prune(g, &removed, &widths)?;
        let delta = count_params(&rewritten)? as i64 - original as i64;
        Ok((widths, rewritten, delta))
    };

    // Bracket the root of delta(m), then bisect, remembering the closest fit.
    let mut best: Option<(f64, HashMap<VertexId, u64>, ArchGraph, i64)> = None;
    let consider = |m: f64, best: &mut Option<(f64, _, _, i64)>| -> Result<i64, RefineError> {
        let (w, r, d) = evaluate(m)?;
        if best.as_ref().is_none_or(|(_, _, _, bd)| d.abs() < bd.abs()) {
            *best = Some((m, w, r, d));
        }
        Ok(d)
    };
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    let d_lo = consider(lo, &mut best)?;
    if d_lo <= 0 {
        let mut expansions = 0;
        while consider(hi, &mut best)? < 0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 12 {
                break;
            }
        }
    } else {
        hi = lo;
        lo = 0.5;
        let mut contractions = 0;
        while consider(lo, &mut best)? > 0 {
            hi = lo;
            lo /= 2.0;
            contractions += 1;
            if contractions > 12 {
                break;
            }
        }
    }
    for _ in 0..60 {
        if best.as_ref().is_some_and(|(_, _, _, d)| *d == 0) || hi - lo < 1e-9 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if consider(mid, &mut best)? < 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (_, widths, rewritten, delta) = best.expect("at least one evaluation");
    let relative = delta.unsigned_abs() as f64 / original_f.max(1.0);
    if relative > options.tolerance {
        return Err(RefineError::CannotMeetTolerance {
            tolerance: options.tolerance,
            best: relative,
        });
    }

    let widened = widenable
        .iter()
        .filter_map(|id| {
            let old = g.node(id).expect("checked").channels_out;
            let new = widths[id];
            (new != old).then(|| WidthChange {
                id: id.clone(),
                old_channels: old,
                new_channels: new,
            })
        })
        .collect();
    Ok(RefinementProposal {
        variant: Refinement::PruneAndWiden {
            removed: removed_list,
            widened,
        },
        predicted_imin: compute_imin(&rewritten, &propagate(&rewritten)),
        param_delta: delta,
    })
}

/// Performs the rewrite described by `p` on `g`.
pub fn apply(g: &ArchGraph, p: &RefinementProposal) -> Result<ArchGraph, RefineError> {
    match &p.variant {
        Refinement::StrideReduction { changes } => rewrite_strides(g, changes),
        Refinement::PruneAndWiden { removed, widened } => {
            for id in removed {
                if !g.contains(id) {
                    return Err(stale(format!("vertex `{id}` does not exist")));
                }
            }
            let mut widths = HashMap::with_capacity(widened.len());
            for w in widened {
                let node = g
                    .node(&w.id)
                    .ok_or_else(|| stale(format!("vertex `{}` does not exist", w.id)))?;
                if node.channels_out != w.old_channels {
                    return Err(stale(format!(
                        "vertex `{}` has {} output channels, expected {}",
                        w.id, node.channels_out, w.old_channels
                    )));
                }
                widths.insert(w.id.clone(), w.new_channels);
            }
            let removed: HashSet<VertexId> = removed.iter().cloned().collect();
            rewrite_prune(g, &removed, &widths)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_dsl;

    fn toy() -> ArchGraph {
        parse_dsl(
            "model toy\n\
             c1: conv k=3 s=2 c=3->16\n\
             c2: conv k=3 s=2 c=16->32\n\
             c3: conv k=3 c=32->64\n\
             gp: gpool\n\
             fc: dense c=64->10 bias\n\
             o: output\n",
        )
        .unwrap()
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut s = vec![0, 1];
        let mut all = vec![s.clone()];
        while next_combination(&mut s, 4) {
            all.push(s.clone());
        }
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn stride_search_on_toy_chain() {
        // r_min: c1 3, c2 7, c3 15 (footprint 12); I_min 15.
        let g = toy();
        let ps =
            enumerate_stride_reductions(&g, Pair::square(12), StrideSearch::default()).unwrap();
        // c2→1 gives 3,7,11 (footprint 6): I_min 11. c1→1 gives 3,5,9.
        // Both → 3,5,7.
        let imins: Vec<u64> = ps.iter().map(|p| p.predicted_imin.h).collect();
        assert_eq!(imins, vec![11, 9, 7]);
        for p in &ps {
            let applied = apply(&g, p).unwrap();
            assert_eq!(
                compute_imin(&applied, &propagate(&applied)),
                p.predicted_imin
            );
            assert_eq!(p.param_delta, 0);
        }
        assert!(matches!(
            enumerate_stride_reductions(&g, Pair::square(16), StrideSearch::default()),
            Err(RefineError::AlreadyFullyUtilized { .. })
        ));
        assert!(matches!(
            enumerate_stride_reductions(&g, Pair::square(4), StrideSearch::default()),
            Err(RefineError::NoFeasibleProposal { .. })
        ));
    }

    #[test]
    fn second_apply_is_stale() {
        let g = toy();
        let p =
            &enumerate_stride_reductions(&g, Pair::square(12), StrideSearch::default()).unwrap()[0];
        let once = apply(&g, p).unwrap();
        assert!(matches!(
            apply(&once, p),
            Err(RefineError::StaleProposal { .. })
        ));
    }

    #[test]
    fn prune_toy_chain() {
        let g = toy();
        let original = count_params(&g).unwrap();
        let p = prune_and_widen(&g, Pair::square(12), &PruneOptions::default()).unwrap();
        let Refinement::PruneAndWiden { removed, widened } = &p.variant else {
            panic!("wrong variant")
        };
        assert_eq!(removed, &[VertexId::from("c3")]);
        assert_eq!(widened.len(), 2);
        let applied = apply(&g, &p).unwrap();
        let after = count_params(&applied).unwrap();
        assert_eq!(after as i64 - original as i64, p.param_delta);
        assert!((p.param_delta.unsigned_abs() as f64) <= 0.02 * original as f64);
        assert!(p.predicted_imin.lt_all(Pair::square(12)));
        let fc = applied.node(&"fc".into()).unwrap();
        assert_eq!(
            fc.channels_in,
            applied.node(&"c2".into()).unwrap().channels_out
        );
        assert!(matches!(
            apply(&applied, &p),
            Err(RefineError::StaleProposal { .. })
        ));
    }

    #[test]
    fn identity_prune() {
        let g = toy();
        let p = prune_and_widen(&g, Pair::square(64), &PruneOptions::default()).unwrap();
        assert!(p.is_identity());
        assert_eq!(p.param_delta, 0);
        assert_eq!(apply(&g, &p).unwrap(), g);
    }

    #[test]
    fn block_removal_rewires_skips() {
        let g = parse_dsl(
            "model res\n\
             stem: conv k=3 s=2 c=3->8\n\
             a1: conv k=3 c=8->8 block=b1\n\
             a2: conv k=3 c=8->8 block=b1\n\
             add: add block=b1 from stem,a2\n\
             head: conv k=1 c=8->16\n\
             o: output\n",
        )
        .unwrap();
        let removed = select_removals(&g, Pair::square(8)).unwrap();
        assert_eq!(
            removed,
            vec![VertexId::from("a1"), "a2".into(), "add".into()]
        );
        let set: HashSet<VertexId> = removed.into_iter().collect();
        let pruned = remove_vertices(&g, &set).unwrap();
        assert_eq!(
            pruned.node(&"head".into()).unwrap().predecessors,
            vec![VertexId::from("stem")]
        );
    }

    #[test]
    fn ambiguous_rewire_is_reported() {
        let g = parse_dsl(
            "model amb\n\
             a: conv k=3 c=3->8\n\
             b: conv k=3 c=3->8 from @input\n\
             m: concat from a,b\n\
             x: conv k=9 c=16->16\n\
             y: conv k=1 c=16->16\n\
             o: output\n",
        )
        .unwrap();
        let removed: HashSet<VertexId> = ["m".into()].into_iter().collect();
        assert!(matches!(
            remove_vertices(&g, &removed),
            Err(RefineError::AmbiguousRewire { .. })
        ));
    }

    #[test]
    fn tolerance_failure() {
        let g = toy();
        let opts = PruneOptions {
            widenable: Some(vec![]),
            ..PruneOptions::default()
        };
        assert!(matches!(
            prune_and_widen(&g, Pair::square(12), &opts),
            Err(RefineError::CannotMeetTolerance { .. })
        ));
        let opts = PruneOptions {
            widenable: Some(vec!["gp".into()]),
            ..PruneOptions::default()
        };
        assert!(matches!(
            prune_and_widen(&g, Pair::square(12), &opts),
            Err(RefineError::InvalidWidenTarget { .. })
        ));
    }

    #[test]
    fn proposal_json_shape() {
        let p = RefinementProposal {
            variant: Refinement::StrideReduction {
                changes: vec![StrideChange {
                    id: "b4_dw".into(),
                    old_stride: Pair::square(2),
                    new_stride: Pair::square(1),
                }],
            },
            predicted_imin: Pair::square(175),
            param_delta: 0,
        };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"strategy":"stride_reduction","changes":[{"id":"b4_dw","old_stride":[2,2],"new_stride":[1,1]}],"predicted_imin":[175,175],"param_delta":0}"#
        );
    }
}
