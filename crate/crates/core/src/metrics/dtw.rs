use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::Coordinate;

pub type Point = [f64; 2];

/// A path in normalized coordinates (pixels divided by map width/height).
///
/// Values outside `[0, 1]` are kept: out-of-bounds predictions are scored
/// as they are rather than repaired.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedPath(Vec<Point>);

impl NormalizedPath {
    pub fn new(points: Vec<Point>) -> Result<Self, MetricError> {
        if points.is_empty() {
            return Err(MetricError::EmptyPath);
        }
        Ok(Self(points))
    }

    pub fn from_pixels(points: &[Coordinate], dims: (u32, u32)) -> Result<Self, MetricError> {
        let (w, h) = (dims.0 as f64, dims.1 as f64);
        Self::new(points.iter().map(|p| [p.x as f64 / w, p.y as f64 / h]).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Classic DTW with Euclidean local cost and the symmetric step set
/// `(i-1, j)`, `(i, j-1)`, `(i-1, j-1)`, each adding the cell cost once.
pub fn dtw_distance(a: &[Point], b: &[Point]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyPath);
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, &pa) in a.iter().enumerate() {
        for j in 0..m {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = best + dist(pa, b[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// DTW divided by the number of ground-truth points. `None` when nothing
/// was predicted.
pub fn ndtw(predicted: &[Point], truth: &[Point]) -> Result<Option<f64>, MetricError> {
    if truth.is_empty() {
        return Err(MetricError::EmptyTruth);
    }
    if predicted.is_empty() {
        return Ok(None);
    }
    Ok(Some(dtw_distance(predicted, truth)? / truth.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum cost over every monotone warping path, by plain recursion.
    fn brute(a: &[Point], b: &[Point], i: usize, j: usize) -> f64 {
        let here = dist(a[i], b[j]);
        if i == 0 && j == 0 {
            return here;
        }
        let mut best = f64::INFINITY;
        if i > 0 {
            best = best.min(brute(a, b, i - 1, j));
        }
        if j > 0 {
            best = best.min(brute(a, b, i, j - 1));
        }
        if i > 0 && j > 0 {
            best = best.min(brute(a, b, i - 1, j - 1));
        }
        here + best
    }

    #[test]
    fn examples() {
        assert_eq!(dtw_distance(&[[0.0, 0.0]], &[[0.3, 0.4]]).unwrap(), 0.5);
        let p = [[0.1, 0.2], [0.4, 0.4], [0.9, 0.1]];
        assert_eq!(dtw_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(dtw_distance(&[], &p), Err(MetricError::EmptyPath));
        assert_eq!(ndtw(&[], &p), Ok(None));
        assert_eq!(ndtw(&p, &[]), Err(MetricError::EmptyTruth));
    }

    #[test]
    fn single_far_point_scores_its_distance() {
        let truth: Vec<Point> =
            (0..9).map(|i| [0.5 + 0.3 * (i as f64 * 0.7).cos(), 0.5 + 0.3 * (i as f64 * 0.7).sin()]).collect();
        let v = ndtw(&[[0.5, 0.5]], &truth).unwrap().unwrap();
        assert!((v - 0.3).abs() < 1e-12);
    }

    #[test]
    fn overlong_prediction_exceeds_sqrt2() {
        // Two-point truth; prediction parks 5 points per truth point at 0.5
        // away, so every alignment pays at least 10 * 0.5.
        let truth = [[0.0, 0.0], [1.0, 0.0]];
        let mut pred = Vec::new();
        for t in truth {
            for _ in 0..5 {
                pred.push([t[0], t[1] + 0.5]);
            }
        }
        let d = dtw_distance(&pred, &truth).unwrap();
        assert!((d - brute(&pred, &truth, 9, 1)).abs() < 1e-12);
        let v = ndtw(&pred, &truth).unwrap().unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        assert!(v > 2f64.sqrt());
    }

    fn path_strategy(max: usize) -> impl Strategy<Value = Vec<Point>> {
        proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| [x, y]), 1..=max)
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in path_strategy(7), b in path_strategy(7)) {
            let dp = dtw_distance(&a, &b).unwrap();
            prop_assert!((dp - brute(&a, &b, a.len() - 1, b.len() - 1)).abs() <= 1e-12);
        }

        #[test]
        fn symmetric_and_reversal_invariant(a in path_strategy(12), b in path_strategy(12)) {
            let ab = dtw_distance(&a, &b).unwrap();
            prop_assert!((ab - dtw_distance(&b, &a).unwrap()).abs() <= 1e-12);
            let ra: Vec<_> = a.iter().rev().copied().collect();
            let rb: Vec<_> = b.iter().rev().copied().collect();
            prop_assert!((ab - dtw_distance(&ra, &rb).unwrap()).abs() <= 1e-12);
            prop_assert!(ab >= 0.0);
        }
    }
}
