//! Dominant-color segmentation: k-means over raw RGB pixels, per-cluster
//! tolerance binarization, and merging of accepted candidate masks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::exec::Exec;
use crate::model::{ModelError, RasterMap, Rgb, TraversabilityMask};

/// Maps above this many pixels are clustered on a uniform subsample of this
/// size; the final assignment still covers every pixel.
pub const MAX_FIT_PIXELS: usize = 1_000_000;

/// Iteration cap used by [`extract_candidates`].
pub const DEFAULT_MAX_ITERS: usize = 50;

const CHUNK: usize = 16 * 1024;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("cannot cluster an empty image")]
    EmptyImage,
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A dominant color and the number of pixels assigned to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorCluster {
    pub index: usize,
    pub centroid: [f64; 3],
    pub member_count: usize,
}

/// A cluster's binarized mask.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateMask {
    pub cluster: ColorCluster,
    pub mask: TraversabilityMask,
    pub coverage_fraction: f64,
}

/// Full k-means result, including the per-pixel labels and the objective
/// after every assignment step.
#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub clusters: Vec<ColorCluster>,
    pub labels: Vec<u32>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

#[inline]
fn dist2(p: Rgb, c: &[f64; 3]) -> f64 {
    let d0 = p[0] as f64 - c[0];
    let d1 = p[1] as f64 - c[1];
    let d2 = p[2] as f64 - c[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

#[inline]
fn nearest(p: Rgb, centroids: &[[f64; 3]]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j as u32, d);
        }
    }
    best
}

struct ChunkStats {
    labels: Vec<u32>,
    objective: f64,
    sums: Vec<[u64; 3]>,
    counts: Vec<u64>,
    /// (distance to own centroid, global index) of the worst-fit pixel.
    farthest: (f64, usize),
}

fn assign(pixels: &[Rgb], centroids: &[[f64; 3]], exec: Exec) -> ChunkStats {
    let k = centroids.len();
    let parts = exec.map_chunks(pixels, CHUNK, |off, chunk| {
        let mut s = ChunkStats {
            labels: Vec::with_capacity(chunk.len()),
            objective: 0.0,
            sums: vec![[0; 3]; k],
            counts: vec![0; k],
            farthest: (-1.0, usize::MAX),
        };
        for (i, &p) in chunk.iter().enumerate() {
            let (j, d) = nearest(p, centroids);
            s.labels.push(j);
            s.objective += d;
            let sum = &mut s.sums[j as usize];
            sum[0] += p[0] as u64;
            sum[1] += p[1] as u64;
            sum[2] += p[2] as u64;
            s.counts[j as usize] += 1;
            if d > s.farthest.0 {
                s.farthest = (d, off + i);
            }
        }
        s
    });
    let mut total = ChunkStats {
        labels: Vec::with_capacity(pixels.len()),
        objective: 0.0,
        sums: vec![[0; 3]; k],
        counts: vec![0; k],
        farthest: (-1.0, usize::MAX),
    };
    for part in parts {
        total.labels.extend(part.labels);
        total.objective += part.objective;
        for j in 0..k {
            for c in 0..3 {
                total.sums[j][c] += part.sums[j][c];
            }
            total.counts[j] += part.counts[j];
        }
        if part.farthest.0 > total.farthest.0 {
            total.farthest = part.farthest;
        }
    }
    total
}

/// Farthest-point seeding: a random first pixel, then repeatedly the pixel
/// farthest from all chosen seeds (lowest index on ties). Stops early when
/// every pixel coincides with a seed.
fn seed_centroids(pixels: &[Rgb], k: usize, rng: &mut ChaCha8Rng, exec: Exec) -> Vec<[f64; 3]> {
    let first = pixels[rng.random_range(0..pixels.len())];
    let mut centroids = vec![to_f64(first)];
    let mut min_d: Vec<f64> =
        exec.map_chunks(pixels, CHUNK, |_, c| c.iter().map(|p| dist2(*p, &centroids[0])).collect::<Vec<_>>()).concat();
    while centroids.len() < k {
        let (best_d, best_i) = argmax(&min_d);
        if best_d <= 0.0 {
            break;
        }
        let c = to_f64(pixels[best_i]);
        centroids.push(c);
        exec.for_each_chunk_mut(&mut min_d, CHUNK, |off, chunk| {
            for (i, d) in chunk.iter_mut().enumerate() {
                let nd = dist2(pixels[off + i], &c);
                if nd < *d {
                    *d = nd;
                }
            }
        });
    }
    centroids
}

fn argmax(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in values.iter().enumerate() {
        if *v > best.0 {
            best = (*v, i);
        }
    }
    best
}

fn to_f64(p: Rgb) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

fn means(stats: &ChunkStats, old: &[[f64; 3]]) -> Vec<Option<[f64; 3]>> {
    (0..old.len())
        .map(|j| {
            let n = stats.counts[j];
            (n > 0).then(|| {
                let s = stats.sums[j];
                [s[0] as f64 / n as f64, s[1] as f64 / n as f64, s[2] as f64 / n as f64]
            })
        })
        .collect()
}

/// Cluster `pixels` into at most `k` colors.
pub fn kmeans_fit(
    pixels: &[Rgb],
    k: usize,
    seed: u64,
    max_iters: usize,
    exec: Exec,
) -> Result<KMeansFit, SegmentError> {
    if pixels.is_empty() {
        return Err(SegmentError::EmptyImage);
    }
    if k == 0 {
        return Err(SegmentError::ZeroClusters);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsample: Option<Vec<Rgb>> = (pixels.len() > MAX_FIT_PIXELS).then(|| {
        let mut idx = sample(&mut rng, pixels.len(), MAX_FIT_PIXELS).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pixels[i]).collect()
    });
    let fit: &[Rgb] = subsample.as_deref().unwrap_or(pixels);

    let mut centroids = seed_centroids(fit, k, &mut rng, exec);
    let mut stats = assign(fit, &centroids, exec);
    let mut trace = vec![stats.objective];
    let mut converged = false;

    for _ in 0..max_iters {
        let mut next: Vec<[f64; 3]> = Vec::with_capacity(centroids.len());
        let mut empties = 0usize;
        for m in means(&stats, &centroids) {
            match m {
                Some(c) => next.push(c),
                None => empties += 1,
            }
        }
        if empties > 0 {
            // Re-seed each empty cluster at the currently worst-fit pixel.
            let mut own_d: Vec<f64> =
                fit.iter().zip(&stats.labels).map(|(p, l)| dist2(*p, &centroids[*l as usize])).collect();
            for _ in 0..empties {
                let (d, i) = argmax(&own_d);
                if d <= 0.0 {
                    break;
                }
                next.push(to_f64(fit[i]));
                own_d[i] = -1.0;
            }
        }
        let new_stats = assign(fit, &next, exec);
        trace.push(new_stats.objective);
        let same = new_stats.labels == stats.labels && next.len() == centroids.len();
        centroids = next;
        stats = new_stats;
        if same {
            converged = true;
            break;
        }
    }
    if !converged {
        // Make every centroid the mean of the pixels it was last assigned.
        let m = means(&stats, &centroids);
        for (c, mean) in centroids.iter_mut().zip(m) {
            if let Some(mean) = mean {
                *c = mean;
            }
        }
    }

    let final_stats = if subsample.is_some() { assign(pixels, &centroids, exec) } else { stats };
    // Drop clusters left empty by the full-image assignment and compact ids.
    let mut remap = vec![u32::MAX; centroids.len()];
    let mut clusters = Vec::new();
    for (j, c) in centroids.iter().enumerate() {
        let n = final_stats.counts[j] as usize;
        if n > 0 {
            remap[j] = clusters.len() as u32;
            clusters.push(ColorCluster { index: clusters.len(), centroid: *c, member_count: n });
        }
    }
    let labels = final_stats.labels.into_iter().map(|l| remap[l as usize]).collect();
    Ok(KMeansFit { clusters, labels, objective_trace: trace, converged })
}

/// The dominant colors of `map`, deterministic for a fixed `seed`.
pub fn kmeans_colors(
    map: &RasterMap,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Vec<ColorCluster>, SegmentError> {
    Ok(kmeans_fit(map.pixels(), k, seed, max_iters, Exec::default())?.clusters)
}

/// Sum of squared distances from each pixel to its labelled centroid.
pub fn kmeans_objective(pixels: &[Rgb], clusters: &[ColorCluster], labels: &[u32]) -> f64 {
    pixels.iter().zip(labels).map(|(p, l)| dist2(*p, &clusters[*l as usize].centroid)).sum()
}

/// Set every pixel whose channels are each within `tolerance` of the
/// cluster centroid (an L∞ test, independent of cluster assignment).
pub fn binarize_cluster(map: &RasterMap, cluster: &ColorCluster, tolerance: u32) -> CandidateMask {
    binarize_cluster_with(map, cluster, tolerance, Exec::default())
}

pub fn binarize_cluster_with(map: &RasterMap, cluster: &ColorCluster, tolerance: u32, exec: Exec) -> CandidateMask {
    let tol = tolerance as f64;
    let c = cluster.centroid;
    let bits: Vec<bool> = exec
        .map_chunks(map.pixels(), CHUNK, |_, chunk| {
            chunk.iter().map(|p| (0..3).all(|i| (p[i] as f64 - c[i]).abs() <= tol)).collect::<Vec<_>>()
        })
        .concat();
    let mask =
        TraversabilityMask::new(map.width(), map.height(), bits).expect("bit count follows the map's pixel count");
    let coverage_fraction = mask.count_ones() as f64 / map.pixels().len() as f64;
    CandidateMask { cluster: cluster.clone(), mask, coverage_fraction }
}

/// Pixelwise OR of the accepted masks; all-zero when none are accepted.
pub fn merge_masks(dims: (u32, u32), accepted: &[&CandidateMask]) -> Result<TraversabilityMask, SegmentError> {
    let mut out = TraversabilityMask::zeros(dims.0, dims.1);
    for cand in accepted {
        out = out.union(&cand.mask)?;
    }
    Ok(out)
}

/// Cluster `map` per `config` and binarize every cluster.
pub fn extract_candidates(
    map: &RasterMap,
    config: &PipelineConfig,
    exec: Exec,
) -> Result<Vec<CandidateMask>, SegmentError> {
    let fit = kmeans_fit(map.pixels(), config.k_clusters, config.random_seed, DEFAULT_MAX_ITERS, exec)?;
    Ok(fit.clusters.iter().map(|c| binarize_cluster_with(map, c, config.rgb_tolerance, exec)).collect())
}
