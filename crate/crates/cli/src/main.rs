//! `maptrace`: synthetic map generation, path annotation, scoring and audits.
//!
//! Exit status is 0 on success, 1 on an operational failure and 2 on a
//! usage error. Summaries go to standard output, diagnostics to standard
//! error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use maptrace::metrics::{Precision, Representation};
use maptrace::synthmap::DecorationLevel;
use maptrace::{ConfigOverrides, Coordinate, MapCategory, PipelineConfig};

#[derive(Parser)]
#[command(name = "maptrace", version, about = "Synthetic path annotations for map images")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true, env = "MAPTRACE_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed for every random choice the command makes [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(flatten)]
    overrides: ConfigFlags,
}

/// Pipeline hyperparameters. Each flag overrides the config file key of
/// the same name.
#[derive(Args)]
#[command(next_help_heading = "Pipeline config")]
struct ConfigFlags {
    /// Number of k-means color clusters [default: 8].
    #[arg(long, global = true, alias = "k_clusters")]
    k_clusters: Option<usize>,
    /// Per-channel tolerance for binarizing a dominant color [default: 25].
    #[arg(long, global = true, alias = "rgb_tolerance")]
    rgb_tolerance: Option<u32>,
    /// Block side in pixels for the mask graph [default: 4].
    #[arg(long, global = true, alias = "block_size")]
    block_size: Option<u32>,
    /// Maximum block-center distance for an edge [default: 4.0].
    #[arg(long, global = true, alias = "max_distance")]
    max_distance: Option<f64>,
    /// Low-density edge penalty [default: 50.0].
    #[arg(long, global = true, alias = "density_penalty")]
    density_penalty: Option<f64>,
    /// Minimum start/end separation in pixels [default: 200.0].
    #[arg(long, global = true, alias = "min_endpoint_distance")]
    min_endpoint_distance: Option<f64>,
    /// Path simplification tolerance in pixels [default: 2.0].
    #[arg(long, global = true, alias = "rdp_epsilon")]
    rdp_epsilon: Option<f64>,
    /// Seed for color clustering [default: 0].
    #[arg(long, global = true, alias = "random_seed")]
    random_seed: Option<u64>,
}

impl ConfigFlags {
    fn to_overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            k_clusters: self.k_clusters,
            rgb_tolerance: self.rgb_tolerance,
            block_size: self.block_size,
            max_distance: self.max_distance,
            density_penalty: self.density_penalty,
            min_endpoint_distance: self.min_endpoint_distance,
            rdp_epsilon: self.rdp_epsilon,
            random_seed: self.random_seed,
        }
    }
}

#[derive(Args, Clone)]
struct EncodingArgs {
    /// Coordinate representation: normalized, absolute, delta (normalized
    /// deltas) or delta-pixel.
    #[arg(long, default_value = "normalized")]
    encoding: Representation,
    /// Decimal places: full, 4, 3 or 2.
    #[arg(long, default_value = "4")]
    precision: Precision,
}

#[derive(Subcommand)]
enum Command {
    /// Render procedural maps with their exact corridor masks.
    Generate {
        /// Number of maps.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Decoration level: none, light or heavy [default: random per map].
        #[arg(long)]
        decoration: Option<DecorationLevel>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster a map's colors and write one mask per cluster plus the merge.
    #[command(group(ArgGroup::new("judge").required(true).args(["reference", "critic_url", "accept_all"])))]
    ExtractMask {
        /// Map image (PNG).
        #[arg(long)]
        map: PathBuf,
        /// Ground-truth mask; judges candidates with the heuristic critic.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Remote critic endpoint.
        #[arg(long)]
        critic_url: Option<String>,
        /// Merge every candidate without judging.
        #[arg(long = "accept")]
        accept_all: bool,
        /// Merge masks judged Fair as well as Good.
        #[arg(long)]
        admit_fair: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize a mask into the block graph and dump nodes and edges.
    BuildGraph {
        /// Mask image (PNG, bright = traversable).
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample annotated paths on one map and mask.
    SamplePaths {
        /// Map image (PNG).
        #[arg(long)]
        map: PathBuf,
        /// Traversability mask (PNG, bright = traversable).
        #[arg(long)]
        mask: PathBuf,
        /// Map category label.
        #[arg(long, default_value = "urban")]
        category: MapCategory,
        /// Paths to attempt.
        #[arg(long, default_value_t = 6)]
        per_map: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline into a dataset directory.
    BuildDataset {
        /// Maps to generate.
        #[arg(long, default_value_t = 10)]
        n_maps: usize,
        /// Paths to attempt per map.
        #[arg(long, default_value_t = 6)]
        per_map: usize,
        /// Decoration level: none, light or heavy [default: random per map].
        #[arg(long)]
        decoration: Option<DecorationLevel>,
        /// Remote critic endpoint; the heuristic critics are used otherwise.
        #[arg(long)]
        critic_url: Option<String>,
        /// Remote critic timeout in seconds.
        #[arg(long, default_value_t = 60)]
        critic_timeout: u64,
        /// Merge masks judged Fair as well as Good.
        #[arg(long)]
        admit_fair: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a dataset into train and validation sets by map.
    Split {
        /// Dataset directory.
        #[arg(long)]
        dataset: PathBuf,
        /// Target fraction of records in the training set.
        #[arg(long, default_value_t = 0.85)]
        train_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth with NDTW and success rate.
    Score {
        /// Predictions: one `{"map_id", "path_index", "output"}` per line.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth dataset records.
        #[arg(long)]
        truth: PathBuf,
        #[command(flatten)]
        encoding: EncodingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve queries with color segmentation and Dijkstra alone.
    #[command(group(ArgGroup::new("input").required(true).args(["map", "dataset"])))]
    BaselineSolve {
        /// Map image (PNG) for a single query.
        #[arg(long, requires_all = ["start", "end"])]
        map: Option<PathBuf>,
        /// Query start as `x,y`.
        #[arg(long, value_parser = parse_point)]
        start: Option<Coordinate>,
        /// Query end as `x,y`.
        #[arg(long, value_parser = parse_point)]
        end: Option<Coordinate>,
        /// Dataset directory; solves every record's query.
        #[arg(long, requires = "out")]
        dataset: Option<PathBuf>,
        #[command(flatten)]
        encoding: EncodingArgs,
        /// Output directory for batch predictions.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare critic verdicts with human verdicts.
    Audit {
        /// CSV with header `item_id,kind,critic_verdict,human_verdict`.
        #[arg(long)]
        records: PathBuf,
    },
}

fn parse_point(s: &str) -> Result<Coordinate, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("`{v}`: {e}"));
    Ok(Coordinate::new(p(x)?, p(y)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    if let Some(jobs) = g.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
    }
    let config = PipelineConfig::layered(g.config.as_deref(), &g.overrides.to_overrides())?;
    let ctx = commands::Context {
        config,
        seed: g.seed.unwrap_or(0),
        seed_given: g.seed.is_some(),
        exec: if g.sequential { maptrace::Exec::Sequential } else { maptrace::Exec::Parallel },
    };
    match cli.command {
        Command::Generate { count, decoration, out } => commands::generate(&ctx, count, decoration, &out),
        Command::ExtractMask { map, reference, critic_url, accept_all, admit_fair, out } => {
            let judge = match (reference, critic_url) {
                (Some(r), _) => commands::MaskJudge::Reference(r),
                (None, Some(u)) => commands::MaskJudge::Remote(u),
                (None, None) => {
                    debug_assert!(accept_all);
                    commands::MaskJudge::AcceptAll
                }
            };
            commands::extract_mask(&ctx, &map, judge, admit_fair, &out)
        }
        Command::BuildGraph { mask, out } => commands::build_graph(&ctx, &mask, &out),
        Command::SamplePaths { map, mask, category, per_map, out } => {
            commands::sample_paths(&ctx, &map, &mask, category, per_map, &out)
        }
        Command::BuildDataset { n_maps, per_map, decoration, critic_url, critic_timeout, admit_fair, out } => {
            let critic = commands::CriticChoice { url: critic_url, timeout_secs: critic_timeout };
            commands::build_dataset(&ctx, n_maps, per_map, decoration, critic, admit_fair, &out)
        }
        Command::Split { dataset, train_fraction, out } => commands::split(&ctx, &dataset, train_fraction, &out),
        Command::Score { pred, truth, encoding, out } => commands::score(&ctx, &pred, &truth, enc(&encoding), &out),
        Command::BaselineSolve { map, start, end, dataset, encoding, out } => match (map, dataset) {
            (Some(map), _) => commands::baseline_single(&ctx, &map, start.unwrap(), end.unwrap(), enc(&encoding)),
            (None, Some(ds)) => commands::baseline_dataset(&ctx, &ds, enc(&encoding), &out.unwrap()),
            (None, None) => unreachable!("clap requires one input"),
        },
        Command::Audit { records } => commands::audit(&records),
    }
}

fn enc(a: &EncodingArgs) -> maptrace::metrics::CoordinateEncoding {
    maptrace::metrics::CoordinateEncoding::new(a.encoding, a.precision)
}
