//! Experiment commands. Parameters resolve as scale defaults, then the JSON
//! config file, then flags. The resolved config is echoed next to the output
//! as `<out>.config.json`; passing it back with `--config` reruns the same
//! experiment.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use owdist::experiments::{
    run_gaussian, run_graph, run_sphere, GaussianConfig, GraphConfig, ResultTable, SphereConfig,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scale {
    /// Reduced grids that finish in minutes.
    Desk,
    /// Full-size grids.
    Full,
}

#[derive(Args)]
pub struct Common {
    /// Base seed; repetition r uses seed + r. Required here or in --config.
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per grid point.
    #[arg(long)]
    repeats: Option<usize>,
    /// Result CSV path.
    #[arg(long)]
    out: PathBuf,
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
}

#[derive(Args)]
pub struct GaussianArgs {
    #[command(flatten)]
    common: Common,
    /// Ambient dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Samples (point clouds) per class.
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// Points per sample.
    #[arg(long)]
    points_per_sample: Option<usize>,
    /// Anchor and slice counts.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Anchor or slice draws averaged per run.
    #[arg(long)]
    draws: Option<usize>,
    /// Anchors come from N(0, v I).
    #[arg(long)]
    anchor_variance: Option<f64>,
    /// Wasserstein exponent.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
pub struct GraphArgs {
    #[command(flatten)]
    common: Common,
    /// Graph sizes.
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    /// Noise levels.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Distributions per source region.
    #[arg(long)]
    per_class: Option<usize>,
    /// Anchor counts as fractions of n.
    #[arg(long, value_delimiter = ',')]
    anchor_fractions: Option<Vec<f64>>,
    /// Heat time is this factor times n.
    #[arg(long)]
    time_factor: Option<f64>,
    /// Largest support accepted by the exact solver.
    #[arg(long)]
    atom_limit: Option<usize>,
}

#[derive(Args)]
pub struct SphereArgs {
    #[command(flatten)]
    common: Common,
    /// Sphere dimensions (points live in R^d).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Points per measure.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    /// Anchors per collection (n_f).
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<usize>>,
    /// Collections per estimate (n_o).
    #[arg(long, value_delimiter = ',')]
    observables: Option<Vec<usize>>,
    /// Candidate anchors sampled on the sphere.
    #[arg(long)]
    anchor_pool: Option<usize>,
    /// Wasserstein exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Largest support accepted by the exact solver.
    #[arg(long)]
    atom_limit: Option<usize>,
}

#[derive(Default)]
struct Overrides(Map<String, Value>);

impl Overrides {
    fn set<T: Serialize>(&mut self, key: &str, value: &Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0
                .insert(key.into(), serde_json::to_value(v).expect("flag value serializes"));
        }
        self
    }
}

fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Input(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Input(format!("{}:{}: {e}", path.display(), e.line()))),
    }
}

fn resolve<C: Serialize + DeserializeOwned>(
    base: C,
    common: &Common,
    mut flags: Overrides,
) -> Result<C, CliError> {
    let Value::Object(mut merged) = serde_json::to_value(base).expect("config serializes") else {
        unreachable!("configs are structs");
    };
    let file = match &common.config {
        Some(path) => read_config_file(path)?,
        None => Map::new(),
    };
    flags.set("seed", &common.seed).set("repeats", &common.repeats);
    if !file.contains_key("seed") && !flags.0.contains_key("seed") {
        return Err(CliError::Input("a seed is required: pass --seed or set it in --config".into()));
    }
    let origin = common
        .config
        .as_deref()
        .map_or("flags".to_string(), |p| p.display().to_string());
    merged.extend(file);
    merged.extend(flags.0);
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Input(format!("{origin}: {e}")))
}

fn echo_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

fn write_outputs<C: Serialize>(out: &Path, config: &C, table: &ResultTable) -> Result<(), CliError> {
    let io_err = |p: &Path, e: std::io::Error| CliError::Input(format!("{}: {e}", p.display()));
    std::fs::write(out, table.to_csv_string()).map_err(|e| io_err(out, e))?;
    let echo = echo_path(out);
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    std::fs::write(&echo, text).map_err(|e| io_err(&echo, e))
}

pub fn gaussian(args: &GaussianArgs) -> Result<(), CliError> {
    let base = match args.common.scale {
        Scale::Desk => GaussianConfig::default(),
        Scale::Full => GaussianConfig::full(),
    };
    let mut flags = Overrides::default();
    flags
        .set("dims", &args.dims)
        .set("samples_per_class", &args.samples_per_class)
        .set("points_per_sample", &args.points_per_sample)
        .set("counts", &args.counts)
        .set("draws", &args.draws)
        .set("anchor_variance", &args.anchor_variance)
        .set("p", &args.p);
    let config: GaussianConfig = resolve(base, &args.common, flags)?;
    let table = run_gaussian(&config)?;
    write_outputs(&args.common.out, &config, &table)
}

pub fn graph(args: &GraphArgs) -> Result<(), CliError> {
    let base = match args.common.scale {
        Scale::Desk => GraphConfig::default(),
        Scale::Full => GraphConfig::full(),
    };
    let mut flags = Overrides::default();
    flags
        .set("nodes", &args.nodes)
        .set("betas", &args.betas)
        .set("per_class", &args.per_class)
        .set("anchor_fractions", &args.anchor_fractions)
        .set("time_factor", &args.time_factor)
        .set("atom_limit", &args.atom_limit);
    let config: GraphConfig = resolve(base, &args.common, flags)?;
    let table = run_graph(&config)?;
    write_outputs(&args.common.out, &config, &table)
}

pub fn sphere(args: &SphereArgs) -> Result<(), CliError> {
    let base = match args.common.scale {
        Scale::Desk => SphereConfig::default(),
        Scale::Full => SphereConfig::full(),
    };
    let mut flags = Overrides::default();
    flags
        .set("dims", &args.dims)
        .set("samples", &args.samples)
        .set("functions", &args.functions)
        .set("observables", &args.observables)
        .set("anchor_pool", &args.anchor_pool)
        .set("p", &args.p)
        .set("atom_limit", &args.atom_limit);
    let config: SphereConfig = resolve(base, &args.common, flags)?;
    let table = run_sphere(&config)?;
    write_outputs(&args.common.out, &config, &table)
}
