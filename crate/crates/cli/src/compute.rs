use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use owdist::baselines::{reduce_slices, slice_distances};
use owdist::observables::{all_points, sample_anchored_set};
use owdist::ot::{exact_wasserstein_with_limit, DEFAULT_ATOM_LIMIT};
use owdist::{chamfer, io, owd_estimate, sample_slices, Mode, ObservableSet, Provenance, SliceReduction, WeightMode};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::inputs::{emit, load_space, SpaceArg};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Sup,
    Avg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    Unit,
    Uniform,
}

#[derive(Args)]
pub struct ComputeArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, value_enum, default_value = "cloud")]
    space_kind: SpaceArg,
    /// Measure JSON `[[index, weight], ...]`.
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "sup")]
    mode: ModeArg,
    /// Power-mean exponent for `--mode avg`.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Sampled observables as `order,count,seed`, anchored on all points.
    #[arg(long, conflicts_with = "observable_file")]
    observables: Option<String>,
    /// Weights of sampled observables.
    #[arg(long, value_enum, default_value = "unit")]
    weights: WeightArg,
    /// Explicit observables, JSON list.
    #[arg(long)]
    observable_file: Option<PathBuf>,
    /// Exact w_p by network simplex.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = DEFAULT_ATOM_LIMIT)]
    atom_limit: usize,
    /// Include the transport plan in the exact report.
    #[arg(long, requires = "exact")]
    plan: bool,
    /// Sliced and max-sliced distances over this many random directions.
    #[arg(long)]
    sliced: Option<usize>,
    #[arg(long, default_value_t = 0)]
    slice_seed: u64,
    /// Chamfer distance between the supports.
    #[arg(long)]
    chamfer: bool,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_triple(spec: &str) -> Result<(usize, usize, u64), CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("--observables expects order,count,seed, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok((
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
    ))
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn run(args: &ComputeArgs) -> Result<(), CliError> {
    if args.observables.is_none()
        && args.observable_file.is_none()
        && !args.exact
        && args.sliced.is_none()
        && !args.chamfer
    {
        return Err(CliError::Input(
            "nothing to compute: pass --observables, --observable-file, --exact, --sliced or --chamfer".into(),
        ));
    }
    let space = load_space(&args.space, args.space_kind)?;
    let mu = io::read_measure(&args.mu, space.clone())?;
    let nu = io::read_measure(&args.nu, space.clone())?;

    let mut report = Map::new();
    let mut timings = Map::new();
    report.insert("space".into(), json!({"kind": space.kind().name(), "size": space.size()}));
    report.insert("p".into(), json!(args.p));

    let set = match (&args.observables, &args.observable_file) {
        (Some(spec), _) => {
            let (order, count, seed) = parse_triple(spec)?;
            let weights = match args.weights {
                WeightArg::Unit => WeightMode::Unit,
                WeightArg::Uniform => WeightMode::Uniform,
            };
            Some(sample_anchored_set(&space, &all_points(&space), order, count, weights, seed)?)
        }
        (None, Some(path)) => Some(ObservableSet::new(io::read_observables(path)?, Provenance::Explicit)?),
        (None, None) => None,
    };
    if let Some(set) = set {
        let mode = match args.mode {
            ModeArg::Sup => Mode::Sup,
            ModeArg::Avg => Mode::Averaged { q: args.q },
        };
        let start = Instant::now();
        let result = owd_estimate(&mu, &nu, args.p, &set, mode)?;
        timings.insert("owd".into(), json!(ms(start)));
        let mut owd = result.to_json();
        owd["observable_count"] = json!(set.len());
        owd["provenance"] = serde_json::to_value(set.provenance()).expect("provenance serializes");
        if let Some(k) = result.argmax_observable {
            owd["argmax"] = serde_json::to_value(&set.observables()[k]).expect("observable serializes");
        }
        report.insert("owd".into(), owd);
    }

    if args.exact {
        let start = Instant::now();
        let (value, plan) = exact_wasserstein_with_limit(&mu, &nu, args.p, args.atom_limit)?;
        timings.insert("exact".into(), json!(ms(start)));
        let mut exact = json!({"value": value});
        if args.plan {
            exact["plan"] = plan.to_json();
        }
        report.insert("exact".into(), exact);
    }

    if let Some(count) = args.sliced {
        let start = Instant::now();
        let d = space.dim().ok_or_else(|| CliError::Contract("--sliced needs a point-cloud space".into()))?;
        let slices = sample_slices(d, count, args.slice_seed)?;
        let per = slice_distances(&mu, &nu, args.p, &slices)?;
        timings.insert("sliced".into(), json!(ms(start)));
        report.insert(
            "sliced".into(),
            json!({
                "count": count,
                "seed": args.slice_seed,
                "mean": reduce_slices(&per, args.p, SliceReduction::Mean),
                "max": reduce_slices(&per, args.p, SliceReduction::Max),
            }),
        );
    }

    if args.chamfer {
        if !space.has_coords() {
            return Err(CliError::Contract("--chamfer needs a space with coordinates".into()));
        }
        let cloud = |m: &owdist::DiscreteMeasure| -> Vec<Vec<f64>> {
            m.atoms().iter().map(|&(x, _)| space.point(x).to_vec()).collect()
        };
        let start = Instant::now();
        let value = chamfer(&cloud(&mu), &cloud(&nu))?;
        timings.insert("chamfer".into(), json!(ms(start)));
        report.insert("chamfer".into(), json!({"value": value}));
    }

    report.insert("timings_ms".into(), Value::Object(timings));
    let mut text = serde_json::to_string_pretty(&Value::Object(report)).expect("report serializes");
    text.push('\n');
    emit(args.out.as_deref(), &text)
}
