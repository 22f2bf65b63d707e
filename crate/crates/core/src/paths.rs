//! Ground-truth path synthesis: endpoint sampling on the pixel graph,
//! Dijkstra routing and Ramer-Douglas-Peucker simplification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::graph::{GraphError, NodeId, PixelGraph};
use crate::model::{Coordinate, ModelError, PathAnnotation, PathQuery, RasterMap, TraversabilityMask};

/// Attempts per query before sampling gives up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 200;

/// Queries drawn per map by default.
pub const DEFAULT_PER_MAP: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("graph needs at least 2 nodes, has {0}")]
    GraphTooSmall(usize),
    #[error("no connected node pair at least {min_distance} px apart found in {attempts} attempts")]
    SamplingFailed { attempts: usize, min_distance: f64 },
    #[error("need at least 2 points to simplify, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledQuery {
    pub query: PathQuery,
    pub from_node: NodeId,
    pub to_node: NodeId,
    pub euclidean_separation: f64,
}

/// Draws endpoint pairs from one graph; component labels are computed once.
pub struct EndpointSampler<'g> {
    graph: &'g PixelGraph,
    components: Vec<NodeId>,
}

impl<'g> EndpointSampler<'g> {
    pub fn new(graph: &'g PixelGraph) -> Self {
        Self { graph, components: graph.components() }
    }

    /// Uniformly draw ordered node pairs until one is connected and at least
    /// `min_distance` apart (center to center).
    pub fn sample(&self, min_distance: f64, seed: u64, max_attempts: usize) -> Result<SampledQuery, PathError> {
        let n = self.graph.len();
        if n < 2 {
            return Err(PathError::GraphTooSmall(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = self.graph.nodes();
        for _ in 0..max_attempts {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b || self.components[a] != self.components[b] {
                continue;
            }
            let d = nodes[a].center.distance(nodes[b].center);
            if d >= min_distance {
                return Ok(SampledQuery {
                    query: PathQuery::new(nodes[a].center, nodes[b].center)?,
                    from_node: a as NodeId,
                    to_node: b as NodeId,
                    euclidean_separation: d,
                });
            }
        }
        Err(PathError::SamplingFailed { attempts: max_attempts, min_distance })
    }
}

pub fn sample_endpoints(
    graph: &PixelGraph,
    config: &PipelineConfig,
    seed: u64,
    max_attempts: usize,
) -> Result<SampledQuery, PathError> {
    EndpointSampler::new(graph).sample(config.min_endpoint_distance, seed, max_attempts)
}

/// Squared distance from `p` to the closed segment `a`–`b`.
fn segment_dist2(p: Coordinate, a: Coordinate, b: Coordinate) -> f64 {
    let (px, py) = (p.x as f64, p.y as f64);
    let (ax, ay) = (a.x as f64, a.y as f64);
    let (dx, dy) = ((b.x - a.x) as f64, (b.y - a.y) as f64);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    (px - qx).powi(2) + (py - qy).powi(2)
}

/// Indices kept by Ramer-Douglas-Peucker at tolerance `epsilon`.
///
/// Distances are measured to the chord segment (not its infinite line), so
/// every dropped point lies within `epsilon` of the simplified polyline.
pub fn rdp_keep(points: &[Coordinate], epsilon: f64) -> Result<Vec<usize>, PathError> {
    if points.len() < 2 {
        return Err(PathError::TooFewPoints(points.len()));
    }
    let eps2 = epsilon * epsilon;
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0usize, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let mut best = (f64::NEG_INFINITY, 0usize);
        for i in lo + 1..hi {
            let d = segment_dist2(points[i], points[lo], points[hi]);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > eps2 {
            keep[best.1] = true;
            stack.push((best.1, hi));
            stack.push((lo, best.1));
        }
    }
    Ok(keep.iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| i).collect())
}

pub fn simplify_rdp(points: &[Coordinate], epsilon: f64) -> Result<Vec<Coordinate>, PathError> {
    Ok(rdp_keep(points, epsilon)?.into_iter().map(|i| points[i]).collect())
}

/// A routed query before and after simplification.
#[derive(Clone, Debug)]
pub struct TracedPath {
    pub sampled: SampledQuery,
    pub raw: Vec<Coordinate>,
    pub simplified: Vec<Coordinate>,
    pub cost: f64,
}

/// Route a sampled query and simplify the node-center polyline.
pub fn trace_query(graph: &PixelGraph, sampled: SampledQuery, epsilon: f64) -> Result<TracedPath, PathError> {
    let sp = graph.shortest_path(sampled.from_node, sampled.to_node)?;
    let raw = graph.centers(&sp.nodes);
    let simplified = simplify_rdp(&raw, epsilon)?;
    Ok(TracedPath { sampled, raw, simplified, cost: sp.cost })
}

/// Sample, route and simplify one ground-truth annotation for `map`.
pub fn generate_annotation(
    map: &RasterMap,
    mask: &TraversabilityMask,
    graph: &PixelGraph,
    config: &PipelineConfig,
    seed: u64,
) -> Result<PathAnnotation, PathError> {
    mask.ensure_same_dims(map.dims())?;
    mask.ensure_same_dims(graph.dims())?;
    let sampled = sample_endpoints(graph, config, seed, DEFAULT_MAX_ATTEMPTS)?;
    let traced = trace_query(graph, sampled, config.rdp_epsilon)?;
    Ok(PathAnnotation::new(traced.sampled.query, traced.simplified, map.map_id())?)
}
