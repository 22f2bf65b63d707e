//! Block-quantized pixel graph over a traversability mask, with Dijkstra
//! shortest paths.
//!
//! The mask is tiled into non-overlapping `b×b` blocks. Every block holding
//! at least one traversable pixel becomes a node with density
//! `ρ = traversable / block area`. Nodes whose centers are within
//! `max_distance` are joined by an undirected edge of weight
//!
//! ```text
//! w(i, j) = ‖c_i − c_j‖₂ · (1 + λ·((1 − ρ_i) + (1 − ρ_j)))
//! ```
//!
//! Blocks clipped by the right or bottom image border use their clipped
//! extent for both the center and the density denominator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::exec::Exec;
use crate::model::{Coordinate, TraversabilityMask};

pub type NodeId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("mask has no traversable pixels")]
    EmptyGraph,
    #[error("node id {0} out of range")]
    InvalidNode(NodeId),
    #[error("no path from node {from} to node {to}")]
    NoPath { from: NodeId, to: NodeId },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphNode {
    pub block_col: u32,
    pub block_row: u32,
    pub center: Coordinate,
    pub density: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub to: NodeId,
    pub weight: f64,
}

/// Construction parameters captured from the pipeline config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphParams {
    pub block_size: u32,
    pub max_distance: f64,
    pub density_penalty: f64,
}

impl From<&PipelineConfig> for GraphParams {
    fn from(c: &PipelineConfig) -> Self {
        Self { block_size: c.block_size, max_distance: c.max_distance, density_penalty: c.density_penalty }
    }
}

#[derive(Clone, Debug)]
pub struct PixelGraph {
    nodes: Vec<GraphNode>,
    adjacency: Vec<Vec<Edge>>,
    width: u32,
    height: u32,
    params: GraphParams,
    /// Node id per block, row-major over the block grid; `u32::MAX` if none.
    block_index: Vec<NodeId>,
    grid_cols: u32,
}

/// The edge weight formula.
pub fn edge_weight(distance: f64, density_a: f64, density_b: f64, penalty: f64) -> f64 {
    distance * (1.0 + penalty * ((1.0 - density_a) + (1.0 - density_b)))
}

/// Pixel extent `(start, len)` of block `index` along an axis of `size` px.
fn block_extent(index: u32, block: u32, size: u32) -> (u32, u32) {
    let start = index * block;
    (start, block.min(size - start))
}

pub fn build_graph(mask: &TraversabilityMask, config: &PipelineConfig) -> Result<PixelGraph, GraphError> {
    build_graph_with(mask, GraphParams::from(config), Exec::default())
}

pub fn build_graph_with(mask: &TraversabilityMask, params: GraphParams, exec: Exec) -> Result<PixelGraph, GraphError> {
    let b = params.block_size.max(1);
    let (w, h) = mask.dims();
    let grid_cols = w.div_ceil(b);
    let grid_rows = h.div_ceil(b);

    // Densities per block row, in parallel.
    let rows: Vec<Vec<GraphNode>> = exec.map_range(grid_rows as usize, |row| {
        let row = row as u32;
        let (y0, bh) = block_extent(row, b, h);
        let mut out = Vec::new();
        for col in 0..grid_cols {
            let (x0, bw) = block_extent(col, b, w);
            let mut count = 0u32;
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    count += u32::from(mask.at(x, y));
                }
            }
            if count > 0 {
                out.push(GraphNode {
                    block_col: col,
                    block_row: row,
                    center: Coordinate::new((x0 + bw / 2) as i32, (y0 + bh / 2) as i32),
                    density: count as f64 / (bw * bh) as f64,
                });
            }
        }
        out
    });
    let nodes: Vec<GraphNode> = rows.into_iter().flatten().collect();
    if nodes.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut block_index = vec![NodeId::MAX; (grid_cols * grid_rows) as usize];
    for (id, n) in nodes.iter().enumerate() {
        block_index[(n.block_row * grid_cols + n.block_col) as usize] = id as NodeId;
    }

    // Clipped blocks have centers closer than b to their neighbours, so the
    // search radius in blocks gets one extra ring.
    let reach = (params.max_distance / b as f64).ceil() as i64 + 1;
    let adjacency: Vec<Vec<Edge>> = exec.map_range(nodes.len(), |i| {
        let n = &nodes[i];
        let mut edges = Vec::new();
        for dr in -reach..=reach {
            let r = n.block_row as i64 + dr;
            if r < 0 || r >= grid_rows as i64 {
                continue;
            }
            for dc in -reach..=reach {
                let c = n.block_col as i64 + dc;
                if c < 0 || c >= grid_cols as i64 || (dr == 0 && dc == 0) {
                    continue;
                }
                let j = block_index[(r as u32 * grid_cols + c as u32) as usize];
                if j == NodeId::MAX {
                    continue;
                }
                let m = &nodes[j as usize];
                let d = n.center.distance(m.center);
                if d > 0.0 && d <= params.max_distance {
                    edges.push(Edge { to: j, weight: edge_weight(d, n.density, m.density, params.density_penalty) });
                }
            }
        }
        edges.sort_by_key(|e| e.to);
        edges
    });

    Ok(PixelGraph { nodes, adjacency, width: w, height: h, params, block_index, grid_cols })
}

/// A minimum-cost node sequence and its total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortestPath {
    pub nodes: Vec<NodeId>,
    pub cost: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: NodeId,
}

impl Eq for State {}

impl Ord for State {
    // Min-heap on (cost, node id).
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PixelGraph {
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&GraphNode, GraphError> {
        self.nodes.get(id as usize).ok_or(GraphError::InvalidNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self, id: NodeId) -> &[Edge] {
        &self.adjacency[id as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn params(&self) -> GraphParams {
        self.params
    }

    /// The node owning the block that contains pixel `p`, if any.
    pub fn node_at(&self, p: Coordinate) -> Option<NodeId> {
        if !p.in_bounds(self.width, self.height) {
            return None;
        }
        let b = self.params.block_size;
        let idx = (p.y as u32 / b) * self.grid_cols + p.x as u32 / b;
        let id = self.block_index[idx as usize];
        (id != NodeId::MAX).then_some(id)
    }

    pub fn centers(&self, path: &[NodeId]) -> Vec<Coordinate> {
        path.iter().map(|id| self.nodes[*id as usize].center).collect()
    }

    /// Connected-component label for every node (labels are the smallest node
    /// id in the component).
    pub fn components(&self) -> Vec<NodeId> {
        let mut label = vec![NodeId::MAX; self.nodes.len()];
        let mut stack = Vec::new();
        for root in 0..self.nodes.len() {
            if label[root] != NodeId::MAX {
                continue;
            }
            label[root] = root as NodeId;
            stack.push(root as NodeId);
            while let Some(u) = stack.pop() {
                for e in &self.adjacency[u as usize] {
                    if label[e.to as usize] == NodeId::MAX {
                        label[e.to as usize] = root as NodeId;
                        stack.push(e.to);
                    }
                }
            }
        }
        label
    }

    /// Dijkstra from `from` to `to`. Among equal-cost routes the predecessor
    /// with the smaller node id wins, so the result is fully deterministic.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<ShortestPath, GraphError> {
        self.node(from)?;
        self.node(to)?;
        if from == to {
            return Ok(ShortestPath { nodes: vec![from], cost: 0.0 });
        }
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NodeId::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[from as usize] = 0.0;
        heap.push(State { cost: 0.0, node: from });
        while let Some(State { cost, node }) = heap.pop() {
            if done[node as usize] {
                continue;
            }
            done[node as usize] = true;
            if node == to {
                break;
            }
            for e in &self.adjacency[node as usize] {
                let v = e.to as usize;
                let next = cost + e.weight;
                if next < dist[v] {
                    dist[v] = next;
                    pred[v] = node;
                    heap.push(State { cost: next, node: e.to });
                } else if next == dist[v] && node < pred[v] {
                    pred[v] = node;
                }
            }
        }
        if !done[to as usize] {
            return Err(GraphError::NoPath { from, to });
        }
        let mut nodes = vec![to];
        let mut cur = to;
        while cur != from {
            cur = pred[cur as usize];
            nodes.push(cur);
        }
        nodes.reverse();
        Ok(ShortestPath { nodes, cost: dist[to as usize] })
    }

    /// The node whose center is nearest to `p` (smaller id on ties).
    pub fn nearest_node(&self, p: Coordinate) -> Result<NodeId, GraphError> {
        let mut best: Option<(i64, NodeId)> = None;
        for (id, n) in self.nodes.iter().enumerate() {
            let dx = (n.center.x - p.x) as i64;
            let dy = (n.center.y - p.y) as i64;
            let d2 = dx * dx + dy * dy;
            if best.is_none_or(|(bd, _)| d2 < bd) {
                best = Some((d2, id as NodeId));
            }
        }
        best.map(|(_, id)| id).ok_or(GraphError::EmptyGraph)
    }

    /// Line-delimited records: one `node` line per node, then one `edge` line
    /// per undirected edge (`a < b`). Floats use 6 decimal places.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for (id, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "{{\"type\":\"node\",\"id\":{id},\"block_col\":{},\"block_row\":{},\"x\":{},\"y\":{},\"density\":{:.6}}}\n",
                n.block_col, n.block_row, n.center.x, n.center.y, n.density
            ));
        }
        for (a, edges) in self.adjacency.iter().enumerate() {
            for e in edges.iter().filter(|e| e.to as usize > a) {
                out.push_str(&format!("{{\"type\":\"edge\",\"a\":{a},\"b\":{},\"weight\":{:.6}}}\n", e.to, e.weight));
            }
        }
        out
    }
}

pub fn shortest_path(graph: &PixelGraph, from: NodeId, to: NodeId) -> Result<ShortestPath, GraphError> {
    graph.shortest_path(from, to)
}

pub fn nearest_node(graph: &PixelGraph, point: Coordinate) -> Result<NodeId, GraphError> {
    graph.nearest_node(point)
}
