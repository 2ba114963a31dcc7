//! Seeded generators of random architectures shared by the property tests
//! and the acceptance suite.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rfa_core::geometry::Pair;
use rfa_core::graph::{ArchGraph, LayerKind, LayerNode, MergeOp, RawGraph};

/// Shape of the random DAGs produced by [`random_dag`].
#[derive(Debug, Clone, Copy)]
pub struct DagShape {
    /// Vertices including the input and output.
    pub max_vertices: usize,
    pub max_merges: usize,
    pub max_kernel: u64,
    pub max_stride: u64,
    /// Allow upsampling vertices and non-square kernels.
    pub exotic: bool,
}

impl Default for DagShape {
    fn default() -> Self {
        Self {
            max_vertices: 12,
            max_merges: 3,
            max_kernel: 7,
            max_stride: 3,
            exotic: false,
        }
    }
}

/// A random single-input DAG. Every layer draws its predecessors from
/// earlier vertices; every sink feeds the single output vertex.
pub fn random_dag(seed: u64, shape: DagShape) -> ArchGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let layers = rng.gen_range(1..=shape.max_vertices.saturating_sub(2).max(1));
    let mut raw = RawGraph::new(format!("dag{seed}"));
    raw.push(LayerNode::new("input", LayerKind::Input));
    let mut ids = vec!["input".to_string()];
    let mut merges = 0;
    for i in 0..layers {
        let id = format!("v{i}");
        let node = if ids.len() >= 2 && merges < shape.max_merges && rng.gen_bool(0.3) {
            merges += 1;
            let fan_in = rng.gen_range(2..=ids.len().min(3));
            let mut preds: Vec<String> = Vec::new();
            while preds.len() < fan_in {
                let p = ids[rng.gen_range(0..ids.len())].clone();
                if !preds.contains(&p) {
                    preds.push(p);
                }
            }
            let op = if rng.gen_bool(0.5) {
                MergeOp::Add
            } else {
                MergeOp::Concat
            };
            LayerNode::new(id.as_str(), LayerKind::Merge(op)).from_ids(preds)
        } else {
            // Bias towards the most recent vertex so chains grow deep.
            let pred = if rng.gen_bool(0.6) {
                ids.last().expect("input present").clone()
            } else {
                ids[rng.gen_range(0..ids.len())].clone()
            };
            random_spatial(&mut rng, &id, shape).from_ids([pred])
        };
        raw.push(node);
        ids.push(id);
    }
    let referenced: Vec<String> = raw
        .nodes
        .iter()
        .flat_map(|n| n.predecessors.iter().map(|p| p.to_string()))
        .collect();
    let sinks: Vec<String> = ids
        .iter()
        .filter(|id| !referenced.contains(id))
        .cloned()
        .collect();
    raw.push(LayerNode::new("output", LayerKind::Output).from_ids(sinks));
    raw.validate().expect("generated graphs are valid")
}

fn random_spatial(rng: &mut StdRng, id: &str, shape: DagShape) -> LayerNode {
    let kind = match rng.gen_range(0..4) {
        0 => LayerKind::Pool,
        1 => LayerKind::DepthwiseConv,
        2 => LayerKind::Neutral,
        _ => LayerKind::Conv,
    };
    let mut node = LayerNode::new(id, kind);
    if kind == LayerKind::Neutral {
        return node;
    }
    let k = rng.gen_range(1..=shape.max_kernel);
    let s = rng.gen_range(1..=shape.max_stride);
    let (kernel, stride) = if shape.exotic && rng.gen_bool(0.3) {
        (
            Pair::new(k, rng.gen_range(1..=shape.max_kernel)),
            Pair::new(s, rng.gen_range(1..=shape.max_stride)),
        )
    } else {
        (Pair::square(k), Pair::square(s))
    };
    node = node.with_kernel(kernel).with_stride(stride);
    if shape.exotic && rng.gen_bool(0.15) {
        node = node.with_upsample(true);
    }
    if shape.exotic && rng.gen_bool(0.1) {
        node = node.with_dilation(Pair::square(2));
    }
    match kind {
        LayerKind::Conv => node.with_channels(8, 8),
        LayerKind::DepthwiseConv => node.with_channels(8, 8),
        _ => node,
    }
}

/// A random sequential toy network: a stem, three to seven building blocks
/// of two convolutions each with widths growing, then a classifier head.
pub fn random_chain(seed: u64) -> ArchGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut raw = RawGraph::new(format!("chain{seed}"));
    raw.push(LayerNode::new("input", LayerKind::Input));
    let mut width = 8 * rng.gen_range(3..=8);
    raw.push(
        LayerNode::new("stem", LayerKind::Conv)
            .with_kernel(Pair::square(3))
            .with_stride(Pair::square(2))
            .with_channels(3, width)
            .from_ids(["input"]),
    );
    let mut prev = "stem".to_string();
    let blocks = rng.gen_range(3..=7);
    for b in 0..blocks {
        let block = format!("b{b}");
        for part in ["a", "b"] {
            let id = format!("{block}{part}");
            let k = [1, 3, 3, 5][rng.gen_range(0..4)];
            let s = if part == "a" && rng.gen_bool(0.4) {
                2
            } else {
                1
            };
            // Widths grow through the network, most sharply when downsampling.
            let out = match (part, s) {
                ("a", 2) => (width * 2).min(512),
                ("a", _) => (width + 8 * rng.gen_range(1..=4)).min(512),
                _ => width,
            };
            raw.push(
                LayerNode::new(id.as_str(), LayerKind::Conv)
                    .with_kernel(Pair::square(k))
                    .with_stride(Pair::square(s))
                    .with_channels(width, out)
                    .with_block(block.as_str())
                    .from_ids([prev.as_str()]),
            );
            width = out;
            prev = id;
        }
    }
    raw.push(
        LayerNode::new("head", LayerKind::Dense)
            .with_channels(width, 10)
            .with_bias(true)
            .from_ids([prev.as_str()]),
    );
    raw.push(LayerNode::new("output", LayerKind::Output).from_ids(["head"]));
    raw.validate().expect("generated chains are valid")
}
