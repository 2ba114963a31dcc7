//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any criterion failed. Built without the
//! libtest harness so the report is always printed:
//! `cargo test -p rfa-cli --test acceptance`.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::time::{Duration, Instant};

use rfa_core::analysis::{compute_imax, compute_imin};
use rfa_core::dsl::{emit_dsl, parse_dsl};
use rfa_core::geometry::{Dims, Pair};
use rfa_core::graph::{count_params, ArchGraph, LayerKind};
use rfa_core::onnx::load_onnx;
use rfa_core::refine::{
    apply, enumerate_stride_reductions, prune_and_widen, PruneOptions, Refinement,
    RefinementProposal, StrideChange, StrideSearch,
};
use rfa_core::rf::{brute_force_rf, propagate};

use common::{code, dsl_fixtures, fixture, path_str, rfa};
use support::{random_chain, random_dag, DagShape};

type Outcome = Result<String, String>;

/// Published minimum input resolutions.
const IMIN_TABLE: &[(&str, u64)] = &[
    ("vgg11", 150),
    ("vgg13", 156),
    ("vgg16", 212),
    ("vgg19", 268),
    ("mobilenet_v1", 315),
    ("mobilenet_v2", 163),
    ("mobilenet_v3_small", 303),
    ("mobilenet_v3_large", 263),
    ("mnasnet1_0", 283),
    ("resnet18", 139),
    ("resnet34", 139),
    ("resnet50", 96),
    ("efficientnet_b0", 299),
    ("efficientnet_b1", 299),
    ("efficientnet_b2", 299),
    ("efficientnet_b3", 299),
    ("efficientnet_b4", 299),
    ("efficientnet_b5", 299),
    ("efficientnet_b6", 299),
    ("efficientnet_b7", 299),
    ("convnext_t", 224),
    ("nasnet_a_mobile", 327),
];

const RES: Dims = Pair::new(224, 224);

fn load(name: &str) -> ArchGraph {
    let path = fixture(&format!("{name}.rfa"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    parse_dsl(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn imin(g: &ArchGraph) -> Dims {
    compute_imin(g, &propagate(g))
}

fn golden_imin_table() -> Outcome {
    let texts: Vec<(&str, u64, String)> = IMIN_TABLE
        .iter()
        .map(|&(name, want)| {
            let path = fixture(&format!("{name}.rfa"));
            (name, want, std::fs::read_to_string(path).expect("fixture"))
        })
        .collect();
    let start = Instant::now();
    let mut wrong = Vec::new();
    for (name, want, text) in &texts {
        let g = parse_dsl(text).map_err(|e| format!("{name}: {e}"))?;
        let got = imin(&g);
        if got != Pair::square(*want) {
            wrong.push(format!("{name} {got} (expected {want})"));
        }
    }
    let elapsed = start.elapsed();
    if !wrong.is_empty() {
        return Err(wrong.join(", "));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "{} architectures exact in {elapsed:.2?}",
        texts.len()
    ))
}

fn golden_rmax() -> Outcome {
    let mut seen = Vec::new();
    for (name, vertex, want) in [
        ("resnet18", "l4b2_add", 435),
        ("efficientnet_b7", "head", 3079),
    ] {
        let g = load(name);
        let rf = propagate(&g);
        let got = rf
            .get(&vertex.into())
            .ok_or(format!("{name} has no `{vertex}`"))?
            .r_max;
        if got != Pair::square(want) {
            return Err(format!("{name}/{vertex}: r_max {got}, expected {want}"));
        }
        // The spot-checked vertex is also the network-wide maximum.
        let imax = compute_imax(&g, &rf);
        if imax != got {
            return Err(format!("{name}: I_max {imax} differs from r_max {got}"));
        }
        seen.push(format!("{name} {want}"));
    }
    Ok(seen.join(", "))
}

fn stride_proposal(g: &ArchGraph, changes: &[(&str, u64)]) -> RefinementProposal {
    RefinementProposal {
        variant: Refinement::StrideReduction {
            changes: changes
                .iter()
                .map(|&(id, s)| StrideChange {
                    id: id.into(),
                    old_stride: g.node(&id.into()).expect(id).stride,
                    new_stride: Pair::square(s),
                })
                .collect(),
        },
        predicted_imin: Pair::square(0),
        param_delta: 0,
    }
}

fn refinement_deltas() -> Outcome {
    let catalog: &[CatalogEntry] = &[
        (
            "mobilenet_v1",
            &[("dw7", 1), ("dw11", 2), ("dw13", 1)],
            315,
            219,
        ),
        ("mobilenet_v3_small", &[("b4_dw", 1)], 303, 175),
        ("mobilenet_v3_large", &[("b13_dw", 1)], 263, 199),
        ("mnasnet1_0", &[("s5b1_dw", 1)], 283, 219),
        ("nasnet_a_mobile", &[("stem", 1)], 327, 165),
    ];
    let mut wrong = Vec::new();
    for &(name, changes, before, after) in catalog {
        let g = load(name);
        let refined =
            apply(&g, &stride_proposal(&g, changes)).map_err(|e| format!("{name}: {e}"))?;
        let (b, a) = (imin(&g), imin(&refined));
        if (b, a) != (Pair::square(before), Pair::square(after)) {
            wrong.push(format!("{name} {b}->{a} (expected {before}->{after})"));
        }
    }
    // Modifications beyond stride changes live in variant fixtures.
    for (base, variant, before, after) in [
        ("convnext_t", "convnext_t_patch2", 224, 112),
        ("vgg19", "vgg19_refined", 268, 220),
    ] {
        let (b, a) = (imin(&load(base)), imin(&load(variant)));
        if (b, a) != (Pair::square(before), Pair::square(after)) {
            wrong.push(format!("{variant} {b}->{a} (expected {before}->{after})"));
        }
    }
    if wrong.is_empty() {
        Ok("7 modifications exact".into())
    } else {
        Err(wrong.join(", "))
    }
}

fn classification_consistency() -> Outcome {
    let mut wrong = Vec::new();
    for &(name, published) in IMIN_TABLE {
        let out = rfa([
            "check",
            path_str(&fixture(&format!("{name}.rfa"))),
            "--input-res",
            "224x224",
        ]);
        let want = if published >= 224 { 3 } else { 0 };
        if code(&out) != want {
            wrong.push(format!("{name} exit {} (expected {want})", code(&out)));
        }
    }
    if wrong.is_empty() {
        Ok(format!("{} check exits", IMIN_TABLE.len()))
    } else {
        Err(wrong.join(", "))
    }
}

fn oracle_equivalence() -> Outcome {
    let shape = DagShape::default();
    let start = Instant::now();
    let mut vertices = 0;
    for seed in 0..1000u64 {
        let g = random_dag(seed, shape);
        let merges = g
            .nodes()
            .iter()
            .filter(|n| matches!(n.kind, LayerKind::Merge(_)))
            .count();
        if g.len() > 12 || merges > 3 {
            return Err(format!(
                "generator produced an out-of-range graph (seed {seed})"
            ));
        }
        let rf = propagate(&g);
        for node in g.nodes() {
            let (lo, hi) = brute_force_rf(&g, &node.id).map_err(|e| e.to_string())?;
            let b = rf.get(&node.id).expect("propagated");
            if (b.r_min, b.r_max) != (lo, hi) {
                return Err(format!(
                    "seed {seed}, vertex {}: propagate ({}, {}) vs enumeration ({lo}, {hi})",
                    node.id, b.r_min, b.r_max
                ));
            }
            vertices += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(30) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "1000 DAGs, {vertices} vertices exact in {elapsed:.2?}"
    ))
}

fn prediction_honesty() -> Outcome {
    let mut checked = 0;
    for path in dsl_fixtures() {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let g = load(&name);
        let own = imin(&g);
        // The deployment resolution, and one below I_min so that already
        // utilized architectures emit proposals too.
        let resolutions = [g.design_resolution().unwrap_or(RES), own.map(|x| x * 3 / 4)];
        for i_res in resolutions {
            let mut proposals =
                enumerate_stride_reductions(&g, i_res, StrideSearch::default()).unwrap_or_default();
            if let Ok(p) = prune_and_widen(&g, i_res, &PruneOptions::default()) {
                proposals.push(p);
            }
            for p in proposals {
                let refined = apply(&g, &p).map_err(|e| format!("{name}: {e}"))?;
                let got = imin(&refined);
                if got != p.predicted_imin {
                    return Err(format!(
                        "{name} at {i_res}: predicted {}, got {got}",
                        p.predicted_imin
                    ));
                }
                checked += 1;
            }
        }
    }
    if checked == 0 {
        return Err("no proposals emitted".into());
    }
    Ok(format!("{checked} proposals exact"))
}

fn within(p: &RefinementProposal, g: &ArchGraph, tolerance: f64) -> Result<bool, String> {
    let before = count_params(g).map_err(|e| e.to_string())?;
    let after =
        count_params(&apply(g, p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    if after as i64 - before as i64 != p.param_delta {
        return Err(format!(
            "reported delta {} but measured {}",
            p.param_delta,
            after as i64 - before as i64
        ));
    }
    Ok(p.param_delta.unsigned_abs() as f64 <= tolerance * before as f64)
}

fn parameter_preservation() -> Outcome {
    let opts = PruneOptions::default();
    let g = load("efficientnet_b0");
    let p = prune_and_widen(&g, RES, &opts).map_err(|e| format!("efficientnet_b0: {e}"))?;
    if !within(&p, &g, opts.tolerance)? {
        return Err(format!("efficientnet_b0: delta {}", p.param_delta));
    }
    let b0_rel = p.param_delta as f64 / count_params(&g).unwrap() as f64;

    let mut pruned = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let g = random_chain(seed);
        let i_res = imin(&g).map(|x| x * 3 / 5);
        let p = prune_and_widen(&g, i_res, &opts).map_err(|e| format!("chain {seed}: {e}"))?;
        if !within(&p, &g, opts.tolerance)? {
            return Err(format!("chain {seed}: delta {}", p.param_delta));
        }
        if !p.is_identity() {
            pruned += 1;
        }
        worst = worst.max(p.param_delta.unsigned_abs() as f64 / count_params(&g).unwrap() as f64);
    }
    if pruned < 100 {
        return Err(format!("only {pruned} of 100 chains were pruned"));
    }
    Ok(format!(
        "efficientnet_b0 {:+.2}%, 100 chains worst {:.2}%",
        b0_rel * 100.0,
        worst * 100.0
    ))
}

fn round_trip() -> Outcome {
    let fixtures = dsl_fixtures();
    for path in &fixtures {
        let g = parse_dsl(&std::fs::read_to_string(path).unwrap()).map_err(|e| e.to_string())?;
        let text = emit_dsl(&g);
        let back = parse_dsl(&text).map_err(|e| format!("{path:?}: {e}"))?;
        if !back.same_structure(&g) || emit_dsl(&back) != text {
            return Err(format!("{path:?} changes through the text form"));
        }
    }

    let onnx = load_onnx(&std::fs::read(fixture("mobilenet_v2.onnx")).unwrap())
        .map_err(|e| e.to_string())?;
    let dsl = load("mobilenet_v2");
    let (ra, rb) = (propagate(&onnx), propagate(&dsl));
    let structural = |g: &ArchGraph| -> Vec<_> {
        g.topo_nodes()
            .filter(|n| n.kind != LayerKind::Neutral)
            .map(|n| n.id.clone())
            .collect()
    };
    let (a, b) = (structural(&onnx), structural(&dsl));
    if a.len() != b.len() {
        return Err(format!(
            "{} aligned ONNX vertices vs {} in the fixture",
            a.len(),
            b.len()
        ));
    }
    for (x, y) in a.iter().zip(&b) {
        let (vx, vy) = (ra.get(x).unwrap(), rb.get(y).unwrap());
        let (nx, ny) = (onnx.node(x).unwrap(), dsl.node(y).unwrap());
        if nx.kind != ny.kind || (vx.r_min, vx.r_max) != (vy.r_min, vy.r_max) {
            return Err(format!("ONNX `{x}` differs from fixture `{y}`"));
        }
    }
    Ok(format!(
        "{} fixtures round-trip; ONNX MobileNetV2 matches at {} vertices",
        fixtures.len(),
        a.len()
    ))
}

fn main() -> std::process::ExitCode {
    let criteria: [Criterion; 8] = [
        ("golden I_min table", golden_imin_table),
        ("golden r_max spot checks", golden_rmax),
        ("refinement delta reproduction", refinement_deltas),
        ("classification consistency", classification_consistency),
        ("oracle equivalence", oracle_equivalence),
        ("prediction honesty", prediction_honesty),
        ("parameter preservation", parameter_preservation),
        ("round-trip", round_trip),
    ];
    let mut failed = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        match run() {
            Ok(detail) => println!("criterion {n} PASS  {title}: {detail}"),
            Err(reason) => {
                println!("criterion {n} FAIL  {title}: {reason}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}

/// Fixture, stride changes `(layer, new stride)`, I_min side before and after.
type CatalogEntry = (&'static str, &'static [(&'static str, u64)], u64, u64);

type Criterion = (&'static str, fn() -> Outcome);
