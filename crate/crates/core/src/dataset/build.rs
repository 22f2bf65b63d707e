use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::Serialize;

use super::records::{normalize_path, MaskVerdictRecord, Provenance, QueryRecord};
use super::{DatasetError, DatasetRecord, IMAGES_DIR, RECORDS_FILE, REPORT_FILE};
use crate::config::PipelineConfig;
use crate::critic::{MaskCritic, MaskVerdict, PathCritic, PathIssue};
use crate::exec::Exec;
use crate::graph::build_graph_with;
use crate::graph::GraphParams;
use crate::model::{RasterMap, TraversabilityMask};
use crate::paths::generate_annotation;
use crate::render::{map_to_image, save_png};
use crate::segment::{extract_candidates, merge_masks, CandidateMask};
use crate::synthmap::{generate_map, SpecSampler};

/// SplitMix64 finalizer over `base` and `salt`; used to give every map and
/// path its own independent seed.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct BuildOptions<'a> {
    pub config: PipelineConfig,
    pub n_maps: usize,
    pub per_map: usize,
    pub seed: u64,
    pub sampler: SpecSampler,
    pub mask_critic: &'a dyn MaskCritic,
    pub path_critic: &'a dyn PathCritic,
    /// Merge masks judged Fair as well as Good.
    pub admit_fair: bool,
    pub exec: Exec,
    /// Maps built concurrently between writes and cancellation checks.
    pub maps_per_batch: usize,
    pub cancel: Option<&'a AtomicBool>,
}

impl<'a> BuildOptions<'a> {
    pub fn new(mask_critic: &'a dyn MaskCritic, path_critic: &'a dyn PathCritic) -> Self {
        Self {
            config: PipelineConfig::default(),
            n_maps: 10,
            per_map: crate::paths::DEFAULT_PER_MAP,
            seed: 0,
            sampler: SpecSampler::default(),
            mask_critic,
            path_critic,
            admit_fair: false,
            exec: Exec::default(),
            maps_per_batch: 64,
            cancel: None,
        }
    }

    pub fn map_seed(&self, index: usize) -> u64 {
        derive_seed(self.seed, index as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapSkip {
    pub map_index: usize,
    pub map_id: String,
    pub stage: &'static str,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MapStats {
    pub masks_judged: usize,
    pub masks_accepted: usize,
    pub mask_critic_errors: usize,
    pub sampling_failures: usize,
    pub path_rejections: BTreeMap<&'static str, usize>,
}

pub struct MapOutcome {
    pub map_id: String,
    pub records: Vec<DatasetRecord>,
    pub map: Option<RasterMap>,
    pub stats: MapStats,
    pub skip: Option<MapSkip>,
}

fn issue_label(issue: PathIssue) -> &'static str {
    match issue {
        PathIssue::None => "none",
        PathIssue::BoundaryViolation => "boundary-violation",
        PathIssue::TraversabilityViolation => "traversability-violation",
        PathIssue::Unspecified => "unspecified",
    }
}

/// Build the records for map `index`. Failures become a skip, never an error.
pub fn build_map(index: usize, opts: &BuildOptions) -> MapOutcome {
    let map_seed = opts.map_seed(index);
    let mut out = MapOutcome {
        map_id: format!("map-{index}"),
        records: Vec::new(),
        map: None,
        stats: MapStats::default(),
        skip: None,
    };
    let skip = |out: &mut MapOutcome, stage, reason: String| {
        out.skip = Some(MapSkip { map_index: index, map_id: out.map_id.clone(), stage, reason });
    };

    let generated = opts
        .sampler
        .sample(map_seed)
        .map_err(|e| e.to_string())
        .and_then(|spec| generate_map(&spec).map_err(|e| e.to_string()));
    let (map, truth) = match generated {
        Ok(v) => v,
        Err(e) => {
            skip(&mut out, "generate", e);
            return out;
        }
    };
    out.map_id = map.map_id().to_string();

    let mut seg_config = opts.config.clone();
    seg_config.random_seed = derive_seed(opts.config.random_seed, map_seed);
    let candidates = match extract_candidates(&map, &seg_config, Exec::Sequential) {
        Ok(c) => c,
        Err(e) => {
            skip(&mut out, "segment", e.to_string());
            return out;
        }
    };

    let mut verdicts = Vec::with_capacity(candidates.len());
    let mut accepted: Vec<&CandidateMask> = Vec::new();
    for cand in &candidates {
        out.stats.masks_judged += 1;
        let rec = match opts.mask_critic.judge_mask(&map, cand, Some(&truth)) {
            Ok(j) => {
                let ok = j.verdict.accepted(opts.admit_fair);
                MaskVerdictRecord {
                    cluster: cand.cluster.index,
                    verdict: j.verdict,
                    target_fraction: j.target_fraction,
                    accepted: ok,
                }
            }
            Err(_) => {
                out.stats.mask_critic_errors += 1;
                MaskVerdictRecord {
                    cluster: cand.cluster.index,
                    verdict: MaskVerdict::Poor,
                    target_fraction: None,
                    accepted: false,
                }
            }
        };
        if rec.accepted {
            out.stats.masks_accepted += 1;
            accepted.push(cand);
        }
        verdicts.push(rec);
    }
    let merged: TraversabilityMask = match merge_masks(map.dims(), &accepted) {
        Ok(m) if !m.is_empty() => m,
        Ok(_) => {
            skip(&mut out, "mask-critic", "no candidate mask accepted".into());
            return out;
        }
        Err(e) => {
            skip(&mut out, "merge", e.to_string());
            return out;
        }
    };
    let graph = match build_graph_with(&merged, GraphParams::from(&opts.config), Exec::Sequential) {
        Ok(g) => g,
        Err(e) => {
            skip(&mut out, "graph", e.to_string());
            return out;
        }
    };

    for j in 0..opts.per_map {
        let path_seed = derive_seed(map_seed, 1 + j as u64);
        let ann = match generate_annotation(&map, &merged, &graph, &opts.config, path_seed) {
            Ok(a) => a,
            Err(_) => {
                out.stats.sampling_failures += 1;
                continue;
            }
        };
        let verdict = match opts.path_critic.judge_path(&map, &ann, Some(&truth)) {
            Ok(j) if j.is_good() => j.verdict(),
            Ok(j) => {
                *out.stats.path_rejections.entry(issue_label(j.reason())).or_default() += 1;
                continue;
            }
            Err(_) => {
                *out.stats.path_rejections.entry("critic-error").or_default() += 1;
                continue;
            }
        };
        out.records.push(DatasetRecord {
            map_id: out.map_id.clone(),
            path_index: j as u32,
            category: map.category(),
            width: map.width(),
            height: map.height(),
            image_path: format!("{IMAGES_DIR}/{}.png", out.map_id),
            query: QueryRecord { start: ann.query.start, end: ann.query.end },
            path_normalized: normalize_path(&ann.points, map.dims()),
            path_pixels: ann.points,
            provenance: Provenance {
                config: opts.config.clone(),
                map_seed,
                path_seed,
                mask_verdicts: verdicts.clone(),
                path_verdict: verdict,
            },
        });
    }
    out.map = Some(map);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildStatus {
    Incomplete,
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub status: BuildStatus,
    pub maps_requested: usize,
    pub maps_processed: usize,
    pub maps_skipped: usize,
    pub per_map: usize,
    pub records_written: usize,
    pub masks_judged: usize,
    pub masks_accepted: usize,
    pub mask_critic_errors: usize,
    pub sampling_failures: usize,
    pub path_rejections: BTreeMap<&'static str, usize>,
    pub skips: Vec<MapSkip>,
}

impl BuildReport {
    fn new(opts: &BuildOptions) -> Self {
        Self {
            status: BuildStatus::Incomplete,
            maps_requested: opts.n_maps,
            maps_processed: 0,
            maps_skipped: 0,
            per_map: opts.per_map,
            records_written: 0,
            masks_judged: 0,
            masks_accepted: 0,
            mask_critic_errors: 0,
            sampling_failures: 0,
            path_rejections: BTreeMap::new(),
            skips: Vec::new(),
        }
    }

    fn absorb(&mut self, outcome: &MapOutcome) {
        self.maps_processed += 1;
        self.records_written += outcome.records.len();
        let s = &outcome.stats;
        self.masks_judged += s.masks_judged;
        self.masks_accepted += s.masks_accepted;
        self.mask_critic_errors += s.mask_critic_errors;
        self.sampling_failures += s.sampling_failures;
        for (k, v) in &s.path_rejections {
            *self.path_rejections.entry(k).or_default() += v;
        }
        if let Some(skip) = &outcome.skip {
            self.maps_skipped += 1;
            self.skips.push(skip.clone());
        }
    }

    pub fn paths_attempted(&self) -> usize {
        self.maps_processed * self.per_map
    }

    pub fn path_rejections_total(&self) -> usize {
        self.path_rejections.values().sum()
    }

    /// Records, path-stage losses and skipped maps' share account for every
    /// attempted path.
    pub fn is_balanced(&self) -> bool {
        self.records_written + self.sampling_failures + self.path_rejections_total() + self.maps_skipped * self.per_map
            == self.paths_attempted()
    }

    pub fn render(&self) -> String {
        let status = match self.status {
            BuildStatus::Incomplete => "incomplete",
            BuildStatus::Complete => "complete",
            BuildStatus::Failed => "failed",
        };
        let mut s = String::new();
        let _ = writeln!(s, "status: {status}");
        let _ = writeln!(s, "maps requested: {}", self.maps_requested);
        let _ = writeln!(s, "maps processed: {}", self.maps_processed);
        let _ = writeln!(s, "maps skipped: {}", self.maps_skipped);
        let _ = writeln!(s, "paths attempted: {}", self.paths_attempted());
        let _ = writeln!(s, "records written: {}", self.records_written);
        let _ = writeln!(s, "masks judged: {}", self.masks_judged);
        let _ = writeln!(s, "masks accepted: {}", self.masks_accepted);
        let _ = writeln!(s, "mask critic errors: {}", self.mask_critic_errors);
        let _ = writeln!(s, "sampling failures: {}", self.sampling_failures);
        let _ = writeln!(s, "path critic rejections: {}", self.path_rejections_total());
        for (k, v) in &self.path_rejections {
            let _ = writeln!(s, "  {k}: {v}");
        }
        let _ = writeln!(s, "accounting: {}", if self.is_balanced() { "balanced" } else { "UNBALANCED" });
        if !self.skips.is_empty() {
            let _ = writeln!(s, "skipped maps:");
            for k in &self.skips {
                let _ = writeln!(s, "  #{} {} [{}] {}", k.map_index, k.map_id, k.stage, k.reason);
            }
        }
        s
    }

    fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        let tmp = dir.join(format!("{REPORT_FILE}.tmp"));
        fs::write(&tmp, self.render())?;
        fs::rename(&tmp, dir.join(REPORT_FILE))?;
        Ok(())
    }
}

/// Run the whole pipeline for `opts.n_maps` maps into `out_dir`.
///
/// Records are appended to `dataset.jsonl.partial` batch by batch; on
/// success they are sorted into `dataset.jsonl`. The report says
/// `incomplete` until the build finishes, so an interrupted build is
/// recognizable from its outputs.
pub fn build_dataset(out_dir: &Path, opts: &BuildOptions) -> Result<BuildReport, DatasetError> {
    if opts.n_maps == 0 || opts.per_map == 0 {
        return Err(DatasetError::Options("n_maps and per_map must be positive".into()));
    }
    opts.config.validate().map_err(|e| DatasetError::Options(e.to_string()))?;
    fs::create_dir_all(out_dir.join(IMAGES_DIR))?;
    let final_path = out_dir.join(RECORDS_FILE);
    if final_path.exists() {
        fs::remove_file(&final_path)?;
    }
    let partial_path = out_dir.join(format!("{RECORDS_FILE}.partial"));
    let mut partial = BufWriter::new(OpenOptions::new().create(true).write(true).truncate(true).open(&partial_path)?);
    let mut report = BuildReport::new(opts);
    report.write(out_dir)?;

    let mut all = Vec::new();
    let batch = opts.maps_per_batch.max(1);
    let mut start = 0;
    while start < opts.n_maps {
        if opts.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            partial.flush()?;
            report.write(out_dir)?;
            return Err(DatasetError::Interrupted { processed: report.maps_processed });
        }
        let end = (start + batch).min(opts.n_maps);
        let outcomes = opts.exec.map_range(end - start, |k| {
            let o = build_map(start + k, opts);
            let saved = match (&o.map, o.records.is_empty()) {
                (Some(map), false) => {
                    save_png(&map_to_image(map), &out_dir.join(IMAGES_DIR).join(format!("{}.png", o.map_id)))
                }
                _ => Ok(()),
            };
            (o, saved)
        });
        for (o, saved) in outcomes {
            saved?;
            for r in &o.records {
                writeln!(partial, "{}", r.to_line())?;
            }
            report.absorb(&o);
            all.extend(o.records);
        }
        partial.flush()?;
        report.write(out_dir)?;
        start = end;
    }
    drop(partial);

    if report.maps_skipped == opts.n_maps {
        report.status = BuildStatus::Failed;
        report.write(out_dir)?;
        return Err(DatasetError::AllMapsFailed { maps: opts.n_maps });
    }
    all.sort_by(|a, b| (a.map_id.as_str(), a.path_index).cmp(&(b.map_id.as_str(), b.path_index)));
    let tmp = out_dir.join(format!("{RECORDS_FILE}.tmp"));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for r in &all {
            writeln!(w, "{}", r.to_line())?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, &final_path)?;
    fs::remove_file(&partial_path)?;
    report.status = BuildStatus::Complete;
    report.write(out_dir)?;
    Ok(report)
}
