use std::path::PathBuf;

use clap::Args;
use owdist::observables::weighted_voronoi_cells;
use owdist::{io, Anchor, Combinator, Observable, SpaceKind};
use serde_json::json;

use crate::error::CliError;
use crate::inputs::{emit, load_space, SpaceArg};

#[derive(Args)]
pub struct VoronoiArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_enum, default_value = "cloud")]
    space_kind: SpaceArg,
    /// Observable file; the observable at --index is used.
    #[arg(long, conflicts_with = "anchors")]
    observable_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Anchor point indices.
    #[arg(long, value_delimiter = ',')]
    anchors: Option<Vec<usize>>,
    /// Anchor weights in (0, 1] (default: all 1).
    #[arg(long, value_delimiter = ',', requires = "anchors")]
    weights: Option<Vec<f64>>,
    /// Grid resolution per axis for planar clouds.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: &VoronoiArgs) -> Result<(), CliError> {
    let space = load_space(&args.space, args.space_kind)?;
    let f = match (&args.observable_file, &args.anchors) {
        (Some(path), _) => {
            let all = io::read_observables(path)?;
            all.get(args.index).cloned().ok_or_else(|| {
                CliError::Contract(format!("observable index {} out of range ({} in file)", args.index, all.len()))
            })?
        }
        (None, Some(idx)) => {
            let weights = args.weights.clone().unwrap_or_else(|| vec![1.0; idx.len()]);
            Observable::new(idx.iter().map(|&i| Anchor::Point(i)).collect(), weights, Combinator::Min)?
        }
        (None, None) => return Err(CliError::Input("pass --observable-file or --anchors".into())),
    };
    let cells = weighted_voronoi_cells(&f, &space)?;
    let values: Vec<f64> = (0..space.size()).map(|x| f.eval(&space, x)).collect::<Result<_, _>>()?;
    let mut counts = vec![0usize; f.anchors().len()];
    cells.iter().for_each(|&c| counts[c] += 1);

    let grid = if space.kind() == SpaceKind::EuclideanCloud && space.dim() == Some(2) && args.grid >= 2 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for i in 0..space.size() {
            for k in 0..2 {
                lo[k] = lo[k].min(space.point(i)[k]);
                hi[k] = hi[k].max(space.point(i)[k]);
            }
        }
        let axis = |k: usize| -> Vec<f64> {
            let pad = 0.1 * (hi[k] - lo[k]).max(1e-12);
            let (a, b) = (lo[k] - pad, hi[k] + pad);
            (0..args.grid)
                .map(|t| a + (b - a) * t as f64 / (args.grid - 1) as f64)
                .collect()
        };
        let (xs, ys) = (axis(0), axis(1));
        let rows = ys
            .iter()
            .map(|&y| xs.iter().map(|&x| f.eval_at(&space, &[x, y])).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        json!({"x": xs, "y": ys, "values": rows})
    } else {
        serde_json::Value::Null
    };

    let report = json!({
        "observable": f,
        "cells": cells,
        "values": values,
        "cell_counts": counts,
        "grid": grid,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(args.out.as_deref(), &text)
}
