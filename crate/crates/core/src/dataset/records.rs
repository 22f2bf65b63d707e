use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::config::PipelineConfig;
use crate::critic::{MaskVerdict, PathVerdict};
use crate::model::{Coordinate, MapCategory, MIN_MAP_SIDE};

/// Stored decimal places of normalized coordinates.
pub const STORED_DECIMALS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub start: Coordinate,
    pub end: Coordinate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskVerdictRecord {
    pub cluster: usize,
    pub verdict: MaskVerdict,
    pub target_fraction: Option<f64>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: PipelineConfig,
    pub map_seed: u64,
    pub path_seed: u64,
    pub mask_verdicts: Vec<MaskVerdictRecord>,
    pub path_verdict: PathVerdict,
}

/// One ground-truth path sample. Field order is the serialized order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub map_id: String,
    pub path_index: u32,
    pub category: MapCategory,
    pub width: u32,
    pub height: u32,
    /// Relative to the dataset root.
    pub image_path: String,
    pub query: QueryRecord,
    pub path_pixels: Vec<Coordinate>,
    pub path_normalized: Vec<[f64; 2]>,
    pub provenance: Provenance,
}

/// `v / len` rounded half-up to four decimals, exactly.
pub fn normalize_4dp(v: i32, len: u32) -> f64 {
    let (v, len) = (v as i128, len as i128);
    let scale = 10i128.pow(STORED_DECIMALS);
    let num = 2 * v * scale + len;
    let den = 2 * len;
    let q = num.div_euclid(den);
    q as f64 / scale as f64
}

pub fn normalize_path(points: &[Coordinate], dims: (u32, u32)) -> Vec<[f64; 2]> {
    points.iter().map(|p| [normalize_4dp(p.x, dims.0), normalize_4dp(p.y, dims.1)]).collect()
}

fn is_safe_relative(path: &str) -> bool {
    let p = Path::new(path);
    !path.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

impl DatasetRecord {
    /// Check every record invariant except the image file's existence.
    pub fn validate(&self) -> Result<(), String> {
        let (w, h) = (self.width, self.height);
        if w < MIN_MAP_SIDE || h < MIN_MAP_SIDE {
            return Err(format!("map {w}x{h} below minimum side {MIN_MAP_SIDE}"));
        }
        if self.path_pixels.len() < 2 {
            return Err(format!("path has {} points, need at least 2", self.path_pixels.len()));
        }
        if let Some(p) = self.path_pixels.iter().find(|p| !p.in_bounds(w, h)) {
            return Err(format!("path point {p} outside {w}x{h}"));
        }
        if self.query.start == self.query.end {
            return Err("query start equals end".into());
        }
        if self.path_pixels[0] != self.query.start || *self.path_pixels.last().unwrap() != self.query.end {
            return Err("path does not run from query start to query end".into());
        }
        if self.path_normalized.len() != self.path_pixels.len() {
            return Err("path_normalized and path_pixels differ in length".into());
        }
        let expected = normalize_path(&self.path_pixels, (w, h));
        for (i, (got, want)) in self.path_normalized.iter().zip(&expected).enumerate() {
            if got != want {
                return Err(format!(
                    "path_normalized[{i}] = ({}, {}) but the 4-decimal normalization is ({}, {})",
                    got[0], got[1], want[0], want[1]
                ));
            }
        }
        if !is_safe_relative(&self.image_path) {
            return Err(format!("image_path `{}` must be a plain relative path", self.image_path));
        }
        Ok(())
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    out.flush()?;
    Ok(())
}

/// Read and validate a record file. `root` is the directory image paths
/// are resolved against; `None` skips the image existence check.
pub fn read_records(path: &Path, root: Option<&Path>) -> Result<Vec<DatasetRecord>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(&line)
            .map_err(|e| DatasetError::Malformed { line: line_no, message: e.to_string() })?;
        rec.validate().map_err(|message| DatasetError::Invalid { line: line_no, message })?;
        if let Some(root) = root {
            if !root.join(&rec.image_path).is_file() {
                return Err(DatasetError::MissingImage { line: line_no, path: rec.image_path });
            }
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::critic::MaskVerdict;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn sample_record(rng: &mut ChaCha8Rng, i: usize) -> DatasetRecord {
        let (w, h) = (rng.random_range(16..1500u32), rng.random_range(16..1500u32));
        let n = rng.random_range(2..12);
        let mut pts: Vec<Coordinate> = Vec::new();
        while pts.len() < n {
            let p = Coordinate::new(rng.random_range(0..w as i32), rng.random_range(0..h as i32));
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if pts[0] == pts[n - 1] {
            pts[n - 1] = Coordinate::new((pts[0].x + 1) % w as i32, pts[0].y);
        }
        DatasetRecord {
            map_id: format!("synth-{:016x}", i as u64 * 7919),
            path_index: rng.random_range(0..6),
            category: MapCategory::ALL[i % 12],
            width: w,
            height: h,
            image_path: format!("images/m{i}.png"),
            query: QueryRecord { start: pts[0], end: pts[n - 1] },
            path_normalized: normalize_path(&pts, (w, h)),
            path_pixels: pts,
            provenance: Provenance {
                config: PipelineConfig { random_seed: rng.random(), ..Default::default() },
                map_seed: rng.random(),
                path_seed: rng.random(),
                mask_verdicts: vec![MaskVerdictRecord {
                    cluster: 0,
                    verdict: MaskVerdict::Good,
                    target_fraction: Some(rng.random()),
                    accepted: true,
                }],
                path_verdict: PathVerdict::Good,
            },
        }
    }

    #[test]
    fn normalization_is_half_up() {
        assert_eq!(normalize_4dp(1, 16), 0.0625);
        assert_eq!(normalize_4dp(1, 32), 0.0313); // 0.03125 rounds up
        assert_eq!(normalize_4dp(3, 32), 0.0938); // 0.09375 rounds up
        assert_eq!(normalize_4dp(100, 200), 0.5);
        assert_eq!(normalize_4dp(2, 3), 0.6667);
    }

    #[test]
    fn round_trip_1000_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let recs: Vec<_> = (0..1000).map(|i| sample_record(&mut rng, i)).collect();
        let file = dir.path().join("dataset.jsonl");
        write_records(&file, &recs).unwrap();
        let back = read_records(&file, None).unwrap();
        assert_eq!(back, recs);
        let bytes = std::fs::read(&file).unwrap();
        write_records(&file, &back).unwrap();
        assert_eq!(std::fs::read(&file).unwrap(), bytes);
    }

    #[test]
    fn truncated_line_names_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let recs: Vec<_> = (0..3).map(|i| sample_record(&mut rng, i)).collect();
        let file = dir.path().join("d.jsonl");
        write_records(&file, &recs).unwrap();
        let mut text = std::fs::read_to_string(&file).unwrap();
        text.truncate(text.len() - 20);
        std::fs::write(&file, text).unwrap();
        match read_records(&file, None) {
            Err(DatasetError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn five_decimal_coordinates_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = sample_record(&mut rng, 0);
        r.width = 32;
        r.height = 16;
        r.path_pixels = vec![Coordinate::new(1, 0), Coordinate::new(5, 7)];
        r.query = QueryRecord { start: r.path_pixels[0], end: r.path_pixels[1] };
        r.path_normalized = vec![[0.0313, 0.0], [0.1563, 0.4375]];
        assert!(r.validate().is_ok());
        r.path_normalized[0][0] = 0.03125;
        assert!(r.validate().unwrap_err().contains("path_normalized[0]"));
    }

    #[test]
    fn other_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = sample_record(&mut rng, 0);
        let mut r = base.clone();
        r.image_path = "../escape.png".into();
        assert!(r.validate().is_err());
        let mut r = base.clone();
        r.path_pixels.truncate(1);
        assert!(r.validate().is_err());
        let mut r = base.clone();
        r.query.end = Coordinate::new(r.query.end.x, r.query.end.y + 1);
        assert!(r.validate().is_err());

        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("d.jsonl");
        write_records(&file, std::slice::from_ref(&base)).unwrap();
        assert!(matches!(read_records(&file, Some(dir.path())), Err(DatasetError::MissingImage { line: 1, .. })));
        std::fs::create_dir_all(dir.path().join("images")).unwrap();
        std::fs::write(dir.path().join(&base.image_path), b"png").unwrap();
        assert!(read_records(&file, Some(dir.path())).is_ok());
    }
}
