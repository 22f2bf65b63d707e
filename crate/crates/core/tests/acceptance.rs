//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the status lines always print.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use maptrace::critic::{
    audit, heuristic_mask_critic, heuristic_path_critic, AuditKind, AuditRecord, Decision, HeuristicMaskCritic,
    HeuristicPathCritic, MaskCritic, MaskVerdict,
};
use maptrace::dataset::{build_dataset, BuildOptions, RECORDS_FILE};
use maptrace::graph::{build_graph_with, GraphParams, NodeId, PixelGraph};
use maptrace::metrics::{
    dtw_distance, format_normalized, ndtw, parse_path, CoordinateEncoding, NormalizedPath, ParseMode, Point, Precision,
    Representation,
};
use maptrace::paths::generate_annotation;
use maptrace::segment::{
    binarize_cluster, extract_candidates, kmeans_colors, merge_masks, CandidateMask, ColorCluster,
};
use maptrace::synthmap::{generate_map, DecorationLevel, SpecSampler};
use maptrace::{validate_path, Coordinate, Exec, MapCategory, PipelineConfig, RasterMap, TraversabilityMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32, fill: f64) -> TraversabilityMask {
    TraversabilityMask::from_fn(w, h, |_, _| rng.random_bool(fill))
}

/// Criterion 1: every edge weight equals the formula recomputed from an
/// independent block scan of the mask.
fn graph_weight_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut full_pairs = 0;
    while checked < 1000 {
        let (w, h) = (rng.random_range(16..60), rng.random_range(16..60));
        let b = rng.random_range(2..7u32);
        let params = GraphParams {
            block_size: b,
            max_distance: b as f64 * rng.random_range(1.0..2.5),
            density_penalty: rng.random_range(0.0..60.0),
        };
        // Blocks are either solid or sparse so both density regimes occur.
        let solid: Vec<bool> = (0..((w / b + 1) * (h / b + 1))).map(|_| rng.random_bool(0.5)).collect();
        let noise = random_mask(&mut rng, w, h, 0.3);
        let cols = w.div_ceil(b);
        let mask = TraversabilityMask::from_fn(w, h, |x, y| solid[((y / b) * cols + x / b) as usize] || noise.at(x, y));
        let g = build_graph_with(&mask, params, Exec::default()).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let a = rng.random_range(0..g.len()) as NodeId;
            let Some(e) = g.edges(a).first().copied() else { continue };
            let (na, nb) = (g.node(a).unwrap(), g.node(e.to).unwrap());
            let density = |col: u32, row: u32| {
                let (x0, y0) = (col * b, row * b);
                let (x1, y1) = ((x0 + b).min(w), (y0 + b).min(h));
                let mut on = 0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        on += mask.at(x, y) as u32;
                    }
                }
                on as f64 / ((x1 - x0) * (y1 - y0)) as f64
            };
            let (ra, rb) = (density(na.block_col, na.block_row), density(nb.block_col, nb.block_row));
            let center = |col: u32, row: u32| {
                let (x0, y0) = (col * b, row * b);
                ((x0 + ((x0 + b).min(w) - x0) / 2) as f64, (y0 + ((y0 + b).min(h) - y0) / 2) as f64)
            };
            let (ca, cb) = (center(na.block_col, na.block_row), center(nb.block_col, nb.block_row));
            let d = ((ca.0 - cb.0).powi(2) + (ca.1 - cb.1).powi(2)).sqrt();
            let expected = d * (1.0 + params.density_penalty * ((1.0 - ra) + (1.0 - rb)));
            ensure((e.weight - expected).abs() <= 1e-9 * expected.abs().max(f64::MIN_POSITIVE), || {
                format!("edge {a}->{}: weight {} expected {expected}", e.to, e.weight)
            })?;
            if ra == 1.0 && rb == 1.0 {
                ensure(e.weight == d, || format!("full-density edge weight {} != distance {d}", e.weight))?;
                full_pairs += 1;
            }
            checked += 1;
        }
    }
    ensure(full_pairs > 50, || format!("only {full_pairs} full-density pairs exercised"))?;
    Ok(format!("{checked} edges, {full_pairs} with density 1 on both ends"))
}

fn enumerate_simple(g: &PixelGraph, at: NodeId, goal: NodeId, seen: &mut Vec<bool>, cost: f64, best: &mut f64) {
    if at == goal {
        *best = best.min(cost);
        return;
    }
    for e in g.edges(at) {
        if !seen[e.to as usize] {
            seen[e.to as usize] = true;
            enumerate_simple(g, e.to, goal, seen, cost + e.weight, best);
            seen[e.to as usize] = false;
        }
    }
}

/// Criterion 2: Dijkstra against exhaustive simple-path enumeration.
fn dijkstra_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut graphs = 0;
    let mut pairs = 0;
    while graphs < 200 {
        let b = 4;
        let fill = rng.random_range(0.02..0.2);
        let mask = random_mask(&mut rng, 16, 16, fill);
        let params = GraphParams {
            block_size: b,
            max_distance: rng.random_range(4.0..12.0),
            density_penalty: rng.random_range(0.0..50.0),
        };
        let Ok(g) = build_graph_with(&mask, params, Exec::Sequential) else { continue };
        let comps = g.components();
        if g.len() < 2 || g.len() > 10 || comps.iter().any(|c| *c != comps[0]) {
            continue;
        }
        graphs += 1;
        for a in 0..g.len() as NodeId {
            for t in 0..g.len() as NodeId {
                let sp = g.shortest_path(a, t).map_err(|e| e.to_string())?;
                let mut seen = vec![false; g.len()];
                seen[a as usize] = true;
                let mut best = f64::INFINITY;
                enumerate_simple(&g, a, t, &mut seen, 0.0, &mut best);
                ensure(sp.cost == best, || format!("graph {graphs} {a}->{t}: dijkstra {} brute {best}", sp.cost))?;
                pairs += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("{graphs} graphs, {pairs} ordered pairs, {took:.2?}"))
}

fn brute_dtw(a: &[Point], b: &[Point], i: usize, j: usize) -> f64 {
    let here = ((a[i][0] - b[j][0]).powi(2) + (a[i][1] - b[j][1]).powi(2)).sqrt();
    if i == 0 && j == 0 {
        return here;
    }
    let mut best = f64::INFINITY;
    if i > 0 {
        best = best.min(brute_dtw(a, b, i - 1, j));
    }
    if j > 0 {
        best = best.min(brute_dtw(a, b, i, j - 1));
    }
    if i > 0 && j > 0 {
        best = best.min(brute_dtw(a, b, i - 1, j - 1));
    }
    here + best
}

fn random_path(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Point> {
    (0..rng.random_range(1..=max_len)).map(|_| [rng.random(), rng.random()]).collect()
}

/// Criterion 3: DTW against recursion over all monotone alignments.
fn dtw_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let a = random_path(&mut rng, 8);
        let b = random_path(&mut rng, 8);
        let dp = dtw_distance(&a, &b).map_err(|e| e.to_string())?;
        let bf = brute_dtw(&a, &b, a.len() - 1, b.len() - 1);
        worst = worst.max((dp - bf).abs());
        ensure((dp - bf).abs() <= 1e-12, || format!("pair {i}: dp {dp} brute {bf}"))?;
    }
    Ok(format!("200 pairs, max |dp - brute| = {worst:.1e}"))
}

/// Criterion 4: NDTW is unchanged when the map and every absolute
/// coordinate are scaled together.
fn ndtw_scale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let abs = CoordinateEncoding::new(Representation::Absolute, Precision::Full);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (w, h) = (2 * rng.random_range(8..400u32), 2 * rng.random_range(8..400u32));
        let (np, nt) = (rng.random_range(1..15), rng.random_range(1..15));
        let mut path = |n| -> Vec<Coordinate> {
            (0..n)
                .map(|_| {
                    let x = 2 * rng.random_range(0..(w / 2) as i32);
                    Coordinate::new(x, 2 * rng.random_range(0..(h / 2) as i32))
                })
                .collect()
        };
        let (pred, truth) = (path(np), path(nt));
        let base = ndtw(
            NormalizedPath::from_pixels(&pred, (w, h)).unwrap().points(),
            NormalizedPath::from_pixels(&truth, (w, h)).unwrap().points(),
        )
        .map_err(|e| e.to_string())?
        .unwrap();
        for f in [2.0, 3.0, 7.5] {
            let (sw, sh) = ((w as f64 * f) as u32, (h as f64 * f) as u32);
            let scale = |p: &[Coordinate]| -> String {
                let pairs: Vec<String> =
                    p.iter().map(|c| format!("({}, {})", c.x as f64 * f, c.y as f64 * f)).collect();
                format!("[{}]", pairs.join(", "))
            };
            let sp = parse_path(&scale(&pred), (sw, sh), abs, ParseMode::Lenient).map_err(|e| e.to_string())?;
            let st = parse_path(&scale(&truth), (sw, sh), abs, ParseMode::Lenient).map_err(|e| e.to_string())?;
            let scaled = ndtw(&sp, &st).map_err(|e| e.to_string())?.unwrap();
            worst = worst.max((scaled - base).abs());
            ensure((scaled - base).abs() < 1e-9, || format!("factor {f}: {base} -> {scaled}"))?;
        }
    }
    Ok(format!("100 pairs x 3 factors, max change {worst:.1e}"))
}

struct Fidelity {
    annotations: usize,
    valid: usize,
    critic_good: usize,
}

fn pipeline_on_map(seed: u64, config: &PipelineConfig) -> Result<Fidelity, String> {
    let sampler = SpecSampler { decoration: Some(DecorationLevel::Light), ..Default::default() };
    let spec = sampler.sample(seed).map_err(|e| e.to_string())?;
    let (map, truth) = generate_map(&spec).map_err(|e| e.to_string())?;
    let candidates = extract_candidates(&map, config, Exec::Sequential).map_err(|e| e.to_string())?;
    let accepted: Vec<&CandidateMask> = candidates
        .iter()
        .filter(|c| HeuristicMaskCritic.judge_mask(&map, c, Some(&truth)).is_ok_and(|j| j.verdict.accepted(false)))
        .collect();
    let merged = merge_masks(map.dims(), &accepted).map_err(|e| e.to_string())?;
    let graph = build_graph_with(&merged, GraphParams::from(config), Exec::Sequential).map_err(|e| e.to_string())?;
    let margin = config.block_margin();
    let allowed = truth.dilate(margin);
    let mut f = Fidelity { annotations: 0, valid: 0, critic_good: 0 };
    for j in 0..6 {
        let Ok(ann) = generate_annotation(&map, &merged, &graph, config, seed * 100 + j) else { continue };
        f.annotations += 1;
        f.valid += validate_path(&ann.points, &allowed).is_valid() as usize;
        f.critic_good +=
            heuristic_path_critic(&ann, &map, &truth, margin).map_err(|e| e.to_string())?.is_good() as usize;
    }
    Ok(f)
}

/// Criterion 5: generated annotations stay on the true corridors.
fn pipeline_fidelity() -> Outcome {
    let start = Instant::now();
    let config = PipelineConfig::default();
    let seeds: Vec<u64> = (0..100).collect();
    let results = Exec::default().map(&seeds, |s| pipeline_on_map(*s, &config));
    let (mut n, mut valid, mut good) = (0, 0, 0);
    for r in results {
        let f = r?;
        n += f.annotations;
        valid += f.valid;
        good += f.critic_good;
    }
    let took = start.elapsed();
    ensure(n >= 300, || format!("only {n} annotations generated"))?;
    let rate = valid as f64 / n as f64;
    ensure(rate >= 0.95, || format!("validate_path pass rate {:.1}% ({valid}/{n})", rate * 100.0))?;
    ensure(good == n, || format!("heuristic critic passed {good}/{n}"))?;
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!("{n} annotations, {:.1}% valid, {good}/{n} critic GOOD, {took:.1?}", rate * 100.0))
}

/// Criterion 6: the corridor cluster binarizes back to the exact mask.
fn mask_recovery() -> Outcome {
    let sampler = SpecSampler { decoration: Some(DecorationLevel::None), ..Default::default() };
    let config = PipelineConfig::default();
    for seed in 0..25u64 {
        let spec = sampler.sample(1000 + seed).map_err(|e| e.to_string())?;
        let (map, truth) = generate_map(&spec).map_err(|e| e.to_string())?;
        let clusters = kmeans_colors(&map, config.k_clusters, seed, 50).map_err(|e| e.to_string())?;
        let cc = spec.corridor_color.map(f64::from);
        let corridor: &ColorCluster = clusters
            .iter()
            .min_by(|a, b| {
                let d = |c: &ColorCluster| (0..3).map(|i| (c.centroid[i] - cc[i]).powi(2)).sum::<f64>();
                d(a).total_cmp(&d(b))
            })
            .ok_or("no clusters")?;
        let got = binarize_cluster(&map, corridor, config.rgb_tolerance);
        ensure(got.mask == truth, || {
            let diff = got.mask.bits().iter().zip(truth.bits()).filter(|(a, b)| a != b).count();
            format!("map {seed}: {diff} pixels differ")
        })?;
    }
    Ok("25 maps, pixel-exact".into())
}

/// Criterion 7: precision 0.70 / 0.50 / 0.30 judge Good / Fair / Poor.
fn critic_thresholds() -> Outcome {
    let (w, h) = (40u32, 25u32);
    let reference = TraversabilityMask::from_fn(w, h, |x, _| x < 20);
    let mut seen = Vec::new();
    for (target, want) in [(0.70, MaskVerdict::Good), (0.50, MaskVerdict::Fair), (0.30, MaskVerdict::Poor)] {
        // 100 candidate pixels: the first `on` inside the reference.
        let on = (target * 100.0f64).round() as u32;
        let mask =
            TraversabilityMask::from_fn(
                w,
                h,
                |x, y| {
                    if x < 20 {
                        y * 20 + x < on
                    } else {
                        y * 20 + (x - 20) < 100 - on
                    }
                },
            );
        let cand = CandidateMask {
            cluster: ColorCluster { index: 0, centroid: [0.0; 3], member_count: 100 },
            coverage_fraction: 100.0 / (w * h) as f64,
            mask,
        };
        let j = heuristic_mask_critic(&cand, &reference).map_err(|e| e.to_string())?;
        ensure(j.target_fraction == Some(target), || format!("fraction {:?} != {target}", j.target_fraction))?;
        ensure(j.verdict == want, || format!("fraction {target}: {:?}, want {want:?}", j.verdict))?;
        seen.push(format!("{target:.2}->{:?}", j.verdict));
    }
    Ok(seen.join(", "))
}

fn fixture(human_reject: (usize, usize), human_accept: (usize, usize)) -> Vec<AuditRecord> {
    let mut out = Vec::new();
    let mut push = |n: usize, critic, human| {
        for _ in 0..n {
            out.push(AuditRecord {
                item_id: format!("p{}", out.len()),
                kind: AuditKind::Path,
                critic_verdict: critic,
                human_verdict: human,
            });
        }
    };
    push(human_reject.0, Decision::Accept, Decision::Reject);
    push(human_reject.1, Decision::Reject, Decision::Reject);
    push(human_accept.0, Decision::Accept, Decision::Accept);
    push(human_accept.1, Decision::Reject, Decision::Accept);
    out
}

/// Criterion 8: audit arithmetic on two constructed fixtures.
fn audit_arithmetic() -> Outcome {
    let mut lines = Vec::new();
    for (recs, acc, fpr) in [(fixture((2, 23), (68, 27)), 76, 8), (fixture((3, 30), (136, 31)), 83, 9)] {
        let s = audit(&recs).map_err(|e| e.to_string())?;
        ensure(s.accuracy_percent() == acc && s.false_positive_percent() == Some(fpr), || {
            format!("{} records: {}", recs.len(), s.display())
        })?;
        lines.push(s.display());
    }
    Ok(lines.join("; "))
}

/// Criterion 9: quantization error bounds at 4, 3 and 2 decimals.
fn precision_ladder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let paths: Vec<Vec<Point>> = (0..500)
        .map(|_| {
            let n = rng.random_range(2..30);
            (0..n).map(|_| [rng.random(), rng.random()]).collect()
        })
        .collect();
    let mut summary = Vec::new();
    for p in [Precision::Decimals4, Precision::Decimals3, Precision::Decimals2] {
        let enc = CoordinateEncoding::new(Representation::Normalized, p);
        let half = p.half_step();
        let (mut worst_axis, mut worst_ndtw): (f64, f64) = (0.0, 0.0);
        for path in &paths {
            let text = format_normalized(path, enc).map_err(|e| e.to_string())?;
            let back = parse_path(&text, (1, 1), enc, ParseMode::Strict).map_err(|e| e.to_string())?;
            for (a, b) in path.iter().zip(&back) {
                for k in 0..2 {
                    worst_axis = worst_axis.max((a[k] - b[k]).abs());
                }
            }
            worst_ndtw = worst_ndtw.max(ndtw(&back, path).map_err(|e| e.to_string())?.unwrap());
        }
        ensure(worst_axis <= half, || format!("{p} decimals: axis error {worst_axis:e} > {half:e}"))?;
        ensure(worst_ndtw <= 2f64.sqrt() * half, || format!("{p} decimals: NDTW {worst_ndtw:e}"))?;
        summary.push(format!("d={p}: axis {worst_axis:.2e}, ndtw {worst_ndtw:.2e}"));
    }
    Ok(summary.join("; "))
}

/// Criterion 10: two builds with the same seeds are byte-identical.
fn build_determinism() -> Outcome {
    let config = PipelineConfig::default();
    let (mc, pc) = (HeuristicMaskCritic, HeuristicPathCritic { margin: config.block_margin() });
    let run = || -> Result<(Vec<u8>, tempfile::TempDir), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut opts = BuildOptions::new(&mc, &pc);
        opts.n_maps = 5;
        opts.per_map = 4;
        opts.seed = 7;
        build_dataset(dir.path(), &opts).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(dir.path().join(RECORDS_FILE)).map_err(|e| e.to_string())?;
        Ok((bytes, dir))
    };
    let (a, da) = run()?;
    let (b, db) = run()?;
    ensure(!a.is_empty() && a == b, || "record files differ".into())?;
    for entry in std::fs::read_dir(da.path().join("images")).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let load = |d: &std::path::Path| {
            maptrace::render::load_map_png(&d.join("images").join(&name), MapCategory::Zoo, "x")
                .map_err(|e| e.to_string())
        };
        let (ia, ib): (RasterMap, RasterMap) = (load(da.path())?, load(db.path())?);
        ensure(ia.pixels() == ib.pixels(), || format!("image {name:?} differs"))?;
    }
    Ok(format!("{} bytes identical across runs", a.len()))
}

/// Criterion 11 is a statement, not a measurement.
fn not_reproducible() -> Outcome {
    Ok("model-comparison rows need proprietary models and fine-tuning; \
        substituted by criteria 1-10. Optional baseline run on the external benchmark not performed (data absent)"
        .into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("graph edge weight formula", graph_weight_formula),
        ("dijkstra vs exhaustive enumeration", dijkstra_oracle),
        ("dtw vs brute-force alignment", dtw_oracle),
        ("ndtw scale invariance", ndtw_scale_invariance),
        ("pipeline fidelity on oracle maps", pipeline_fidelity),
        ("mask recovery at tolerance 25", mask_recovery),
        ("mask critic thresholds", critic_thresholds),
        ("audit arithmetic", audit_arithmetic),
        ("precision ladder mechanics", precision_ladder),
        ("build determinism", build_determinism),
        ("not reproducible, stated", not_reproducible),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str()) || *s == id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} {name} ({took:.1?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name} ({took:.1?}): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
