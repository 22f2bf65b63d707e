use std::path::Path;

use maptrace::baseline::{baseline_batch, BaselineOutcome};
use maptrace::critic::{HeuristicMaskCritic, HeuristicPathCritic};
use maptrace::dataset::{build_dataset, read_records, split, BuildOptions, BuildReport, DatasetRecord, RECORDS_FILE};
use maptrace::metrics::{aggregate_report, score_query, CoordinateEncoding};
use maptrace::render::load_map_png;
use maptrace::{Exec, MapCategory, PathAnnotation, PathQuery, PipelineConfig, RasterMap};

fn build(dir: &Path, n_maps: usize, per_map: usize, seed: u64) -> BuildReport {
    let config = PipelineConfig::default();
    let mc = HeuristicMaskCritic;
    let pc = HeuristicPathCritic { margin: config.block_margin() };
    let mut opts = BuildOptions::new(&mc, &pc);
    opts.n_maps = n_maps;
    opts.per_map = per_map;
    opts.seed = seed;
    build_dataset(dir, &opts).unwrap()
}

#[test]
fn forty_map_yield() {
    let dir = tempfile::tempdir().unwrap();
    let report = build(dir.path(), 40, 6, 11);
    assert!(report.is_balanced(), "{}", report.render());
    assert_eq!(report.path_rejections_total(), 0, "{}", report.render());
    let per_map = report.records_written as f64 / 40.0;
    assert!((5.0..=6.5).contains(&per_map), "yield {per_map} per map\n{}", report.render());
    let recs = read_records(&dir.path().join(RECORDS_FILE), Some(dir.path())).unwrap();
    assert_eq!(recs.len(), report.records_written);
}

#[test]
fn records_feed_split_baseline_and_scoring() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path(), 20, 3, 5);
    let recs = read_records(&dir.path().join(RECORDS_FILE), Some(dir.path())).unwrap();

    let manifest = split(&recs, 0.8, 1).unwrap();
    assert_eq!(manifest.train_records + manifest.validation_records, recs.len());
    assert!(manifest.train_ids.iter().all(|id| !manifest.validation_ids.contains(id)));

    let load = |r: &DatasetRecord| -> RasterMap {
        load_map_png(&dir.path().join(&r.image_path), r.category, &r.map_id).unwrap()
    };
    let maps: Vec<RasterMap> = recs.iter().map(load).collect();
    let items: Vec<(&RasterMap, PathQuery)> =
        recs.iter().zip(&maps).map(|(r, m)| (m, PathQuery::new(r.query.start, r.query.end).unwrap())).collect();
    let config = PipelineConfig::default();
    let seq = baseline_batch(&items, &config, Exec::Sequential);
    let par = baseline_batch(&items, &config, Exec::default());
    assert_eq!(seq.len(), par.len());

    let enc = CoordinateEncoding::default();
    let mut scores = Vec::new();
    let mut solved = 0;
    for ((r, s), p) in recs.iter().zip(&seq).zip(&par) {
        let (s, p) = (s.as_ref().unwrap(), p.as_ref().unwrap());
        assert_eq!(s, p);
        let dims = (r.width, r.height);
        let text = s.to_text(dims, enc).unwrap();
        let truth =
            PathAnnotation::new(PathQuery::new(r.query.start, r.query.end).unwrap(), r.path_pixels.clone(), &r.map_id)
                .unwrap();
        let score = score_query(&text, &truth, dims, enc).unwrap();
        if matches!(s, BaselineOutcome::Path { .. }) {
            solved += 1;
            // Clean synthetic corridors: the baseline retraces the truth.
            assert!(score.ndtw().unwrap() < 0.05, "{} #{}: {score:?}", r.map_id, r.path_index);
        }
        scores.push((r.category.label().to_string(), score));
    }
    assert!(solved * 10 >= recs.len() * 9, "baseline solved {solved} of {}", recs.len());
    let labels: Vec<&str> = MapCategory::ALL.iter().map(|c| c.label()).collect();
    let report = aggregate_report(&scores, &labels);
    assert_eq!(report.overall.queries, recs.len());
}

/// Full-size build; slow, run with `--ignored`.
#[test]
#[ignore]
fn full_size_build() {
    let dir = tempfile::tempdir().unwrap();
    let report = build(dir.path(), 4000, 6, 0);
    assert!(report.is_balanced());
    let recs = read_records(&dir.path().join(RECORDS_FILE), None).unwrap();
    let manifest = split(&recs, 23.0 / 27.0, 0).unwrap();
    println!("{}\n{} train / {} validation", report.render(), manifest.train_records, manifest.validation_records);
}
