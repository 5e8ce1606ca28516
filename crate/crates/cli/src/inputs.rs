use std::path::Path;
use std::sync::Arc;

use clap::ValueEnum;
use owdist::{io, FiniteMetricSpace};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    /// CSV of coordinates, Euclidean metric.
    Cloud,
    /// JSON `{"num_nodes", "edges": [[i, j, w], ...]}`, shortest paths.
    Graph,
    /// CSV of unit vectors, geodesic metric.
    Sphere,
    /// CSV distance matrix.
    Matrix,
}

pub fn load_space(path: &Path, kind: SpaceArg) -> Result<Arc<FiniteMetricSpace>, CliError> {
    let space = match kind {
        SpaceArg::Cloud => FiniteMetricSpace::point_cloud(&io::read_point_cloud(path)?)?,
        SpaceArg::Sphere => FiniteMetricSpace::sphere(&io::read_point_cloud(path)?)?,
        SpaceArg::Matrix => FiniteMetricSpace::from_matrix(&io::read_point_cloud(path)?)?,
        SpaceArg::Graph => io::read_graph(path)?.into_space()?,
    };
    Ok(Arc::new(space))
}

/// Writes `text` to `path`, or to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
