//! Subcommand implementations and their error-to-exit-code mapping.

use std::fs;
use std::path::{Path, PathBuf};

use rfa_core::analysis::{analyze as analyze_graph, AnalysisReport};
use rfa_core::dsl::{emit_dsl, parse_dsl, DslError};
use rfa_core::geometry::Dims;
use rfa_core::graph::{ArchGraph, VertexId};
use rfa_core::onnx::{load_onnx, OnnxError};
use rfa_core::refine::{
    apply, enumerate_stride_reductions, prune_and_widen, PruneOptions, RefineError,
    RefinementProposal, StrideSearch,
};
use rfa_core::report::{to_dot, to_json, to_text};

use crate::{
    AnalyzeArgs, CheckArgs, ConvertArgs, Format, ModelArg, OutputArgs, RefineArgs, ResolutionArg,
    Strategy, Target,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", .path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", .path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Dsl { path: PathBuf, source: DslError },
    #[error("{}: {source}", .path.display())]
    Onnx { path: PathBuf, source: OnnxError },
    #[error("not fully utilized at {i_res}: I_min is {i_min}, {flagged} layers flagged")]
    NotFullyUtilized {
        i_res: Dims,
        i_min: Dims,
        flagged: usize,
    },
    #[error("refinement failed: {0}")]
    Refine(RefineError),
}

impl CliError {
    pub const USAGE: u8 = 1;
    pub const INGESTION: u8 = 2;
    pub const UNDERUTILIZED: u8 = 3;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Refine(RefineError::InvalidWidenTarget { .. }) => {
                Self::USAGE
            }
            CliError::Read { .. }
            | CliError::Write { .. }
            | CliError::Dsl { .. }
            | CliError::Onnx { .. } => Self::INGESTION,
            CliError::NotFullyUtilized { .. } | CliError::Refine(_) => Self::UNDERUTILIZED,
        }
    }
}

fn load_model(arg: &ModelArg) -> Result<ArchGraph, CliError> {
    let path = &arg.model;
    let bytes = fs::read(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let is_onnx = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("onnx"));
    if is_onnx {
        load_onnx(&bytes).map_err(|source| CliError::Onnx {
            path: path.clone(),
            source,
        })
    } else {
        let text = String::from_utf8(bytes).map_err(|e| CliError::Read {
            path: path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })?;
        parse_dsl(&text).map_err(|source| CliError::Dsl {
            path: path.clone(),
            source,
        })
    }
}

fn resolution(arg: &ResolutionArg, g: &ArchGraph) -> Result<Dims, CliError> {
    arg.input_res.or(g.design_resolution()).ok_or_else(|| {
        CliError::Usage(format!(
            "model `{}` declares no input resolution; pass --input-res HxW",
            g.name()
        ))
    })
}

fn output_format(out: &OutputArgs) -> Format {
    out.format.unwrap_or_else(|| {
        let ext = out
            .out
            .as_deref()
            .and_then(Path::extension)
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("json") => Format::Json,
            Some("dot" | "gv") => Format::Dot,
            _ => Format::Text,
        }
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let g = load_model(&args.model)?;
    let i_res = resolution(&args.resolution, &g)?;
    let report = analyze_graph(&g, i_res);
    let text = match output_format(&args.output) {
        Format::Text => to_text(&report, None),
        Format::Json => to_json(&report, None),
        Format::Dot => to_dot(&g, &report),
    };
    write_output(args.output.out.as_deref(), &text)
}

pub fn imin(args: &ModelArg) -> Result<(), CliError> {
    let g = load_model(args)?;
    // Any resolution works: I_min does not depend on it.
    let report = analyze_graph(&g, Dims::square(1));
    println!("{}", report.i_min);
    Ok(())
}

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let g = load_model(&args.model)?;
    let i_res = resolution(&args.resolution, &g)?;
    let report = analyze_graph(&g, i_res);
    if report.fully_utilized {
        println!("fully utilized at {i_res}: I_min is {}", report.i_min);
        Ok(())
    } else {
        Err(CliError::NotFullyUtilized {
            i_res,
            i_min: report.i_min,
            flagged: report.flagged().count(),
        })
    }
}

fn proposals(
    args: &RefineArgs,
    g: &ArchGraph,
    i_res: Dims,
) -> Result<Vec<RefinementProposal>, CliError> {
    let found = match args.strategy {
        Strategy::Stride => enumerate_stride_reductions(
            g,
            i_res,
            StrideSearch {
                max_changes: args.max_changes,
            },
        ),
        Strategy::Prune => {
            let options = PruneOptions {
                widenable: args
                    .widen
                    .as_ref()
                    .map(|ids| ids.iter().map(|id| VertexId::new(id.trim())).collect()),
                tolerance: args.tolerance,
                quantum: args.quantum,
            };
            prune_and_widen(g, i_res, &options).map(|p| {
                if p.is_identity() {
                    Vec::new()
                } else {
                    vec![p]
                }
            })
        }
    };
    match found {
        Ok(list) => Ok(list),
        Err(RefineError::AlreadyFullyUtilized { .. }) => Ok(Vec::new()),
        Err(e) => Err(CliError::Refine(e)),
    }
}

pub fn refine(args: &RefineArgs) -> Result<(), CliError> {
    if args.max_changes == 0 {
        return Err(CliError::Usage("--max-changes must be at least 1".into()));
    }
    if !(args.tolerance.is_finite() && args.tolerance >= 0.0) {
        return Err(CliError::Usage(
            "--tolerance must be a non-negative number".into(),
        ));
    }
    if args.quantum == 0 {
        return Err(CliError::Usage("--quantum must be at least 1".into()));
    }
    let format = output_format(&args.output);
    if format == Format::Dot {
        return Err(CliError::Usage(
            "refine writes text or json, not dot".into(),
        ));
    }

    let g = load_model(&args.model)?;
    let i_res = resolution(&args.resolution, &g)?;
    let report: AnalysisReport = analyze_graph(&g, i_res);
    let found = proposals(args, &g, i_res)?;
    if found.is_empty() {
        eprintln!(
            "rfa: nothing to refine: fully utilized at {i_res} (I_min {})",
            report.i_min
        );
    }

    if let Some(path) = &args.emit_dsl {
        match found.first() {
            Some(best) => {
                let refined = apply(&g, best).map_err(CliError::Refine)?;
                write_output(Some(path), &emit_dsl(&refined))?;
            }
            None => eprintln!("rfa: no proposal, {} not written", path.display()),
        }
    }

    let text = match format {
        Format::Json => to_json(&report, Some(&found)),
        _ => to_text(&report, Some(&found)),
    };
    write_output(args.output.out.as_deref(), &text)
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    let g = load_model(&args.model)?;
    let text = match args.to {
        Target::Dsl => emit_dsl(&g),
    };
    write_output(args.out.as_deref(), &text)
}
