//! Non-learning baseline: color segmentation plus Dijkstra, no critic.
//!
//! Every k-means cluster is a candidate mask. A candidate qualifies when
//! its mask, dilated by the block margin, holds both endpoints and its graph
//! connects them. Among qualifying masks the sparsest wins, then the
//! cheapest route: walkable regions are thin, while the background is the
//! largest region and always offers the cheapest (straight) route. When no
//! single mask qualifies, the union of the three largest-coverage masks is
//! tried.

use thiserror::Error;

use crate::config::PipelineConfig;
use crate::exec::Exec;
use crate::graph::{build_graph_with, GraphParams};
use crate::metrics::{format_path, CoordinateEncoding, MetricError};
use crate::model::{Coordinate, PathQuery, RasterMap, TraversabilityMask};
use crate::paths::simplify_rdp;
use crate::segment::{extract_candidates, merge_masks, CandidateMask, SegmentError};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("query endpoint {0} is outside the {1}x{2} image")]
    OutOfBounds(Coordinate, u32, u32),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionTier {
    /// The chosen mask holds both endpoints without dilation.
    Contains,
    Dilated,
    MergedTop3,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaselineOutcome {
    Path {
        points: Vec<Coordinate>,
        cost: f64,
        tier: SelectionTier,
        clusters: Vec<usize>,
    },
    /// No candidate mask connects the endpoints.
    NoPath,
}

impl BaselineOutcome {
    /// Model-output text; a no-path outcome is empty output.
    pub fn to_text(&self, dims: (u32, u32), encoding: CoordinateEncoding) -> Result<String, MetricError> {
        match self {
            BaselineOutcome::Path { points, .. } => format_path(points, dims, encoding),
            BaselineOutcome::NoPath => Ok(String::new()),
        }
    }
}

struct Route {
    points: Vec<Coordinate>,
    cost: f64,
}

fn route(mask: &TraversabilityMask, query: PathQuery, config: &PipelineConfig, exec: Exec) -> Option<Route> {
    let graph = build_graph_with(mask, GraphParams::from(config), exec).ok()?;
    let from = graph.nearest_node(query.start).ok()?;
    let to = graph.nearest_node(query.end).ok()?;
    let sp = graph.shortest_path(from, to).ok()?;
    let mut pts = Vec::with_capacity(sp.nodes.len() + 2);
    pts.push(query.start);
    pts.extend(graph.centers(&sp.nodes));
    pts.push(query.end);
    pts.dedup();
    if pts.len() < 2 {
        pts.push(query.end);
    }
    let points = simplify_rdp(&pts, config.rdp_epsilon).ok()?;
    Some(Route { points, cost: sp.cost })
}

/// Solve one query on `map`.
pub fn baseline_solve(
    map: &RasterMap,
    query: PathQuery,
    config: &PipelineConfig,
    exec: Exec,
) -> Result<BaselineOutcome, BaselineError> {
    let (w, h) = map.dims();
    for p in [query.start, query.end] {
        if !p.in_bounds(w, h) {
            return Err(BaselineError::OutOfBounds(p, w, h));
        }
    }
    let candidates = extract_candidates(map, config, exec)?;
    let margin = config.block_margin();
    let dilated: Vec<TraversabilityMask> = exec.map(&candidates, |c| c.mask.dilate(margin));

    let ids: Vec<usize> = (0..candidates.len()).filter(|&i| query.is_on(&dilated[i])).collect();
    let routes = exec.map(&ids, |&i| route(&candidates[i].mask, query, config, Exec::Sequential));
    let best = ids.iter().zip(routes).filter_map(|(i, r)| r.map(|r| (*i, r))).min_by(|a, b| {
        let (ca, cb) = (&candidates[a.0], &candidates[b.0]);
        ca.coverage_fraction.total_cmp(&cb.coverage_fraction).then(a.1.cost.total_cmp(&b.1.cost)).then(a.0.cmp(&b.0))
    });
    if let Some((i, r)) = best {
        let tier = if query.is_on(&candidates[i].mask) { SelectionTier::Contains } else { SelectionTier::Dilated };
        return Ok(BaselineOutcome::Path { points: r.points, cost: r.cost, tier, clusters: vec![i] });
    }

    let mut by_coverage: Vec<&CandidateMask> = candidates.iter().collect();
    by_coverage.sort_by(|a, b| {
        b.coverage_fraction.total_cmp(&a.coverage_fraction).then(a.cluster.index.cmp(&b.cluster.index))
    });
    by_coverage.truncate(3);
    let merged = merge_masks(map.dims(), &by_coverage)?;
    Ok(match route(&merged, query, config, exec) {
        Some(r) => BaselineOutcome::Path {
            points: r.points,
            cost: r.cost,
            tier: SelectionTier::MergedTop3,
            clusters: by_coverage.iter().map(|c| c.cluster.index).collect(),
        },
        None => BaselineOutcome::NoPath,
    })
}

/// Solve many queries, in order. Each query runs sequentially inside.
pub fn baseline_batch(
    items: &[(&RasterMap, PathQuery)],
    config: &PipelineConfig,
    exec: Exec,
) -> Vec<Result<BaselineOutcome, BaselineError>> {
    exec.map(items, |(map, q)| baseline_solve(map, *q, config, Exec::Sequential))
}
