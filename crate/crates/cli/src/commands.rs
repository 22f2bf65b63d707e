use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use maptrace::baseline::{baseline_batch, baseline_solve, BaselineOutcome};
use maptrace::critic::{
    audit as run_audit, heuristic_mask_critic, read_audit_csv, HeuristicMaskCritic, HeuristicPathCritic, HttpTransport,
    MaskCritic, MaskVerdict, PathCritic, RemoteCritic,
};
use maptrace::dataset::{
    self, derive_seed, normalize_path, read_records, write_records, BuildOptions, DatasetRecord, MaskVerdictRecord,
    Provenance, QueryRecord, IMAGES_DIR, MANIFEST_FILE, RECORDS_FILE,
};
use maptrace::graph::{build_graph_with, GraphParams};
use maptrace::metrics::{aggregate_report, score_query, CoordinateEncoding, QueryScore};
use maptrace::paths::generate_annotation;
use maptrace::render::{load_map_png, load_mask_png, map_to_image, mask_to_image, path_overlay, save_png};
use maptrace::segment::{extract_candidates, merge_masks, CandidateMask};
use maptrace::synthmap::{generate_map, DecorationLevel, SpecSampler};
use maptrace::{Coordinate, Exec, MapCategory, PathQuery, PipelineConfig, RasterMap};
use serde::{Deserialize, Serialize};

pub struct Context {
    pub config: PipelineConfig,
    pub seed: u64,
    pub seed_given: bool,
    pub exec: Exec,
}

impl Context {
    /// The config for single-map commands: an explicit `--seed` also seeds
    /// color clustering.
    fn cluster_config(&self) -> PipelineConfig {
        let mut c = self.config.clone();
        if self.seed_given {
            c.random_seed = self.seed;
        }
        c
    }

    fn sampler(&self, decoration: Option<DecorationLevel>) -> SpecSampler {
        SpecSampler { decoration, ..SpecSampler::default() }
    }
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "map".to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn generate(ctx: &Context, count: usize, decoration: Option<DecorationLevel>, out: &Path) -> Result<()> {
    create_out(out)?;
    let sampler = ctx.sampler(decoration);
    let specs = ctx.exec.map_range(count, |i| -> Result<_> {
        let spec = sampler.sample(derive_seed(ctx.seed, i as u64))?;
        let (map, mask) = generate_map(&spec)?;
        let id = spec.map_id();
        save_png(&map_to_image(&map), &out.join(format!("{id}.png")))?;
        save_png(&mask_to_image(&mask), &out.join(format!("{id}.mask.png")))?;
        Ok(spec)
    });
    let specs = specs.into_iter().collect::<Result<Vec<_>>>()?;
    write_lines(&out.join("specs.jsonl"), &specs)?;
    println!("generated {} maps in {}", specs.len(), out.display());
    Ok(())
}

pub enum MaskJudge {
    Reference(PathBuf),
    Remote(String),
    AcceptAll,
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    cluster: usize,
    centroid: [f64; 3],
    member_count: usize,
    coverage_fraction: f64,
    mask_file: String,
    verdict: Option<MaskVerdict>,
    target_fraction: Option<f64>,
    accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

pub fn extract_mask(ctx: &Context, map_path: &Path, judge: MaskJudge, admit_fair: bool, out: &Path) -> Result<()> {
    let map = load_map_png(map_path, MapCategory::Urban, &stem(map_path))?;
    let reference = match &judge {
        MaskJudge::Reference(p) => Some(load_mask_png(p)?),
        _ => None,
    };
    let remote = match &judge {
        MaskJudge::Remote(url) => Some(RemoteCritic::new(HttpTransport::new(url.clone(), Duration::from_secs(60)))),
        _ => None,
    };
    let candidates = extract_candidates(&map, &ctx.cluster_config(), ctx.exec)?;
    create_out(out)?;

    let mut summaries = Vec::new();
    let mut errors = Vec::new();
    let mut accepted: Vec<&CandidateMask> = Vec::new();
    for cand in &candidates {
        let judgment = match (&reference, &remote) {
            (Some(r), _) => Some(heuristic_mask_critic(cand, r).map_err(|e| e.to_string())),
            (None, Some(c)) => Some(c.judge_mask(&map, cand, None).map_err(|e| e.to_string())),
            (None, None) => None,
        };
        let (verdict, fraction, ok) = match &judgment {
            None => (None, None, true),
            Some(Ok(j)) => (Some(j.verdict), j.target_fraction, j.verdict.accepted(admit_fair)),
            Some(Err(e)) => {
                eprintln!("cluster {}: critic error, rejected: {e}", cand.cluster.index);
                (None, None, false)
            }
        };
        errors.push(judgment.and_then(|j| j.err()));
        if ok {
            accepted.push(cand);
        }
        let file = format!("mask-{}.png", cand.cluster.index);
        save_png(&mask_to_image(&cand.mask), &out.join(&file))?;
        summaries.push((cand, file, verdict, fraction, ok));
    }
    let rows: Vec<ClusterSummary> = summaries
        .into_iter()
        .zip(&errors)
        .map(|((c, mask_file, verdict, target_fraction, accepted), err)| ClusterSummary {
            cluster: c.cluster.index,
            centroid: c.cluster.centroid,
            member_count: c.cluster.member_count,
            coverage_fraction: c.coverage_fraction,
            mask_file,
            verdict,
            target_fraction,
            accepted,
            error: err.as_deref(),
        })
        .collect();
    write_lines(&out.join("clusters.jsonl"), &rows)?;
    let merged = merge_masks(map.dims(), &accepted)?;
    save_png(&mask_to_image(&merged), &out.join("merged.png"))?;
    println!(
        "{} clusters, {} accepted, merged mask covers {} pixels",
        candidates.len(),
        accepted.len(),
        merged.count_ones()
    );
    Ok(())
}

pub fn build_graph(ctx: &Context, mask_path: &Path, out: &Path) -> Result<()> {
    let mask = load_mask_png(mask_path)?;
    let graph = build_graph_with(&mask, GraphParams::from(&ctx.config), ctx.exec)?;
    create_out(out)?;
    fs::write(out.join("graph.jsonl"), graph.to_records())?;
    println!("{} nodes, {} edges", graph.len(), graph.edge_count());
    Ok(())
}

pub fn sample_paths(
    ctx: &Context,
    map_path: &Path,
    mask_path: &Path,
    category: MapCategory,
    per_map: usize,
    out: &Path,
) -> Result<()> {
    let map_id = stem(map_path);
    let map = load_map_png(map_path, category, &map_id)?;
    let mask = load_mask_png(mask_path)?;
    if mask.dims() != map.dims() {
        bail!("mask is {:?} but the map is {:?}", mask.dims(), map.dims());
    }
    let config = &ctx.config;
    let graph = build_graph_with(&mask, GraphParams::from(config), ctx.exec)?;
    let critic = HeuristicPathCritic { margin: config.block_margin() };
    let attempts = ctx.exec.map_range(per_map, |j| {
        let path_seed = derive_seed(ctx.seed, 1 + j as u64);
        (path_seed, generate_annotation(&map, &mask, &graph, config, path_seed))
    });

    create_out(out)?;
    fs::create_dir_all(out.join(IMAGES_DIR))?;
    fs::create_dir_all(out.join("overlays"))?;
    let image_path = format!("{IMAGES_DIR}/{map_id}.png");
    let mut records = Vec::new();
    for (j, (path_seed, ann)) in attempts.into_iter().enumerate() {
        let ann = match ann {
            Ok(a) => a,
            Err(e) => {
                eprintln!("path {j}: sampling failed: {e}");
                continue;
            }
        };
        let judgment = critic.judge_path(&map, &ann, Some(&mask))?;
        if !judgment.is_good() {
            eprintln!("path {j}: rejected: {:?}", judgment.reason());
            continue;
        }
        save_png(&path_overlay(&map, &ann.points), &out.join("overlays").join(format!("{map_id}-{j}.png")))?;
        records.push(DatasetRecord {
            map_id: map_id.clone(),
            path_index: j as u32,
            category,
            width: map.width(),
            height: map.height(),
            image_path: image_path.clone(),
            query: QueryRecord { start: ann.query.start, end: ann.query.end },
            path_normalized: normalize_path(&ann.points, map.dims()),
            path_pixels: ann.points,
            provenance: Provenance {
                config: config.clone(),
                map_seed: ctx.seed,
                path_seed,
                mask_verdicts: Vec::<MaskVerdictRecord>::new(),
                path_verdict: judgment.verdict(),
            },
        });
    }
    save_png(&map_to_image(&map), &out.join(&image_path))?;
    write_records(&out.join(RECORDS_FILE), &records)?;
    println!("{} of {per_map} paths written to {}", records.len(), out.display());
    Ok(())
}

pub struct CriticChoice {
    pub url: Option<String>,
    pub timeout_secs: u64,
}

pub fn build_dataset(
    ctx: &Context,
    n_maps: usize,
    per_map: usize,
    decoration: Option<DecorationLevel>,
    critic: CriticChoice,
    admit_fair: bool,
    out: &Path,
) -> Result<()> {
    let heuristic_mask = HeuristicMaskCritic;
    let heuristic_path = HeuristicPathCritic { margin: ctx.config.block_margin() };
    let remote = critic.url.map(|u| RemoteCritic::new(HttpTransport::new(u, Duration::from_secs(critic.timeout_secs))));
    let (mc, pc): (&dyn MaskCritic, &dyn PathCritic) = match &remote {
        Some(r) => (r, r),
        None => (&heuristic_mask, &heuristic_path),
    };
    let mut opts = BuildOptions::new(mc, pc);
    opts.config = ctx.config.clone();
    opts.n_maps = n_maps;
    opts.per_map = per_map;
    opts.seed = ctx.seed;
    opts.sampler = ctx.sampler(decoration);
    opts.admit_fair = admit_fair;
    opts.exec = ctx.exec;
    create_out(out)?;
    let report = dataset::build_dataset(out, &opts)?;
    print!("{}", report.render());
    Ok(())
}

pub fn split(ctx: &Context, dataset_dir: &Path, train_fraction: f64, out: &Path) -> Result<()> {
    let records = read_records(&dataset_dir.join(RECORDS_FILE), Some(dataset_dir))?;
    let manifest = dataset::split(&records, train_fraction, ctx.seed)?;
    create_out(out)?;
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!(
        "train: {} maps, {} records; validation: {} maps, {} records",
        manifest.train_ids.len(),
        manifest.train_records,
        manifest.validation_ids.len(),
        manifest.validation_records
    );
    Ok(())
}

/// One model output for a dataset query.
#[derive(Serialize, Deserialize)]
pub struct Prediction {
    pub map_id: String,
    pub path_index: u32,
    pub output: String,
}

#[derive(Serialize)]
struct ScoreLine<'a> {
    map_id: &'a str,
    path_index: u32,
    category: &'a str,
    #[serde(flatten)]
    score: QueryScore,
}

fn read_predictions(path: &Path) -> Result<HashMap<(String, u32), String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?;
        if out.insert((p.map_id.clone(), p.path_index), p.output).is_some() {
            bail!("{} line {}: duplicate prediction for {} #{}", path.display(), i + 1, p.map_id, p.path_index);
        }
    }
    Ok(out)
}

pub fn score(ctx: &Context, pred: &Path, truth: &Path, enc: CoordinateEncoding, out: &Path) -> Result<()> {
    let records = read_records(truth, None)?;
    let mut preds = read_predictions(pred)?;
    let inputs: Vec<(&DatasetRecord, String)> =
        records.iter().map(|r| (r, preds.remove(&(r.map_id.clone(), r.path_index)).unwrap_or_default())).collect();
    if !preds.is_empty() {
        eprintln!("warning: {} predictions have no ground-truth record", preds.len());
    }
    let scored = ctx.exec.map(&inputs, |(r, text)| -> Result<QueryScore> {
        let query = PathQuery::new(r.query.start, r.query.end)?;
        let truth = maptrace::PathAnnotation::new(query, r.path_pixels.clone(), r.map_id.clone())?;
        Ok(score_query(text, &truth, (r.width, r.height), enc)?)
    });
    let scored = scored.into_iter().collect::<Result<Vec<_>>>()?;

    let lines: Vec<ScoreLine> = records
        .iter()
        .zip(&scored)
        .map(|(r, s)| ScoreLine {
            map_id: &r.map_id,
            path_index: r.path_index,
            category: r.category.label(),
            score: *s,
        })
        .collect();
    let labelled: Vec<(String, QueryScore)> =
        records.iter().zip(&scored).map(|(r, s)| (r.category.label().to_string(), *s)).collect();
    let labels: Vec<&str> = MapCategory::ALL.iter().map(|c| c.label()).collect();
    let report = aggregate_report(&labelled, &labels);

    create_out(out)?;
    write_lines(&out.join("scores.jsonl"), &lines)?;
    fs::write(out.join("report.txt"), report.to_string())?;
    print!("{report}");
    Ok(())
}

pub fn baseline_single(
    ctx: &Context,
    map_path: &Path,
    start: Coordinate,
    end: Coordinate,
    enc: CoordinateEncoding,
) -> Result<()> {
    let map = load_map_png(map_path, MapCategory::Urban, &stem(map_path))?;
    let query = PathQuery::new(start, end)?;
    let outcome = baseline_solve(&map, query, &ctx.cluster_config(), ctx.exec)?;
    match &outcome {
        BaselineOutcome::Path { tier, clusters, .. } => eprintln!("solved via {tier:?} using clusters {clusters:?}"),
        BaselineOutcome::NoPath => eprintln!("no path"),
    }
    println!("{}", outcome.to_text(map.dims(), enc)?);
    Ok(())
}

pub fn baseline_dataset(ctx: &Context, dataset_dir: &Path, enc: CoordinateEncoding, out: &Path) -> Result<()> {
    let records = read_records(&dataset_dir.join(RECORDS_FILE), Some(dataset_dir))?;
    let mut maps: HashMap<&str, RasterMap> = HashMap::new();
    for r in &records {
        if !maps.contains_key(r.map_id.as_str()) {
            let map = load_map_png(&dataset_dir.join(&r.image_path), r.category, &r.map_id)?;
            maps.insert(&r.map_id, map);
        }
    }
    let items: Vec<(&RasterMap, PathQuery)> = records
        .iter()
        .map(|r| Ok((&maps[r.map_id.as_str()], PathQuery::new(r.query.start, r.query.end)?)))
        .collect::<Result<_>>()?;
    let outcomes = baseline_batch(&items, &ctx.cluster_config(), ctx.exec);
    let mut preds = Vec::with_capacity(records.len());
    let mut no_path = 0;
    for (r, o) in records.iter().zip(outcomes) {
        let o = o.with_context(|| format!("{} #{}", r.map_id, r.path_index))?;
        no_path += usize::from(o == BaselineOutcome::NoPath);
        preds.push(Prediction {
            map_id: r.map_id.clone(),
            path_index: r.path_index,
            output: o.to_text((r.width, r.height), enc)?,
        });
    }
    create_out(out)?;
    write_lines(&out.join("predictions.jsonl"), &preds)?;
    println!("{} queries solved, {no_path} without a path", preds.len() - no_path);
    Ok(())
}

pub fn audit(records: &Path) -> Result<()> {
    let file = File::open(records).with_context(|| format!("opening {}", records.display()))?;
    let rows = read_audit_csv(file)?;
    let summary = run_audit(&rows)?;
    println!("{}", summary.display());
    Ok(())
}
