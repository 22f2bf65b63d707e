//! Procedural corridor maps with exact ground truth.
//!
//! A map is a coarse lattice of junctions joined by a random spanning tree
//! plus a few loop edges. Every edge is painted as an axis-aligned corridor
//! of `corridor_width` pixels, after all decorations, so the ground-truth
//! mask is exactly the set of corridor-colored pixels. Everything uses
//! integer rasterization and a seeded ChaCha stream, so output is identical
//! across platforms.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MapCategory, ModelError, RasterMap, Rgb, TraversabilityMask, MIN_MAP_SIDE};

/// Minimum per-channel gap (in at least one channel) between the corridor
/// color and every other palette color: twice the default RGB tolerance.
pub const MIN_SEPARATION: u8 = 50;
pub const DEFAULT_BASE_WIDTH: u32 = 512;
pub const DEFAULT_CORRIDOR_WIDTH: u32 = 12;
pub const DEFAULT_LATTICE_SPACING: u32 = 64;
/// Chance that a non-tree lattice edge is added to close a loop.
pub const LOOP_PROBABILITY: f64 = 0.15;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("corridor width {width} is too large for lattice spacing {spacing} (need 2*width <= spacing)")]
    CorridorTooWide { width: u32, spacing: u32 },
    #[error("invalid map spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AspectRatio {
    #[serde(rename = "1:1")]
    Square,
    #[serde(rename = "3:4")]
    Portrait3x4,
    #[serde(rename = "4:3")]
    Landscape4x3,
    #[serde(rename = "16:9")]
    Wide16x9,
    #[serde(rename = "9:16")]
    Tall9x16,
}

impl AspectRatio {
    pub const ALL: [AspectRatio; 5] = [
        AspectRatio::Square,
        AspectRatio::Portrait3x4,
        AspectRatio::Landscape4x3,
        AspectRatio::Wide16x9,
        AspectRatio::Tall9x16,
    ];

    /// Width to height as `(w, h)`.
    pub fn parts(self) -> (u32, u32) {
        match self {
            AspectRatio::Square => (1, 1),
            AspectRatio::Portrait3x4 => (3, 4),
            AspectRatio::Landscape4x3 => (4, 3),
            AspectRatio::Wide16x9 => (16, 9),
            AspectRatio::Tall9x16 => (9, 16),
        }
    }

    /// Image size whose longer side is `long_side`.
    pub fn dims(self, long_side: u32) -> (u32, u32) {
        let (a, b) = self.parts();
        if a >= b {
            (long_side, long_side * b / a)
        } else {
            (long_side * a / b, long_side)
        }
    }
}

impl fmt::Display for AspectRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.parts();
        write!(f, "{a}:{b}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecorationLevel {
    None,
    Light,
    Heavy,
}

impl FromStr for DecorationLevel {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(DecorationLevel::None),
            "light" => Ok(DecorationLevel::Light),
            "heavy" => Ok(DecorationLevel::Heavy),
            other => Err(SynthError::InvalidSpec(format!("unknown decoration level `{other}`"))),
        }
    }
}

impl fmt::Display for DecorationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecorationLevel::None => "none",
            DecorationLevel::Light => "light",
            DecorationLevel::Heavy => "heavy",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSpec {
    pub category: MapCategory,
    pub aspect_ratio: AspectRatio,
    /// Length of the longer image side.
    pub base_width: u32,
    pub corridor_width: u32,
    /// Distance between neighbouring lattice junctions.
    pub lattice_spacing: u32,
    pub corridor_color: Rgb,
    pub background_color: Rgb,
    pub obstacle_palette: Vec<Rgb>,
    pub text_color: Rgb,
    pub layout_seed: u64,
    pub decoration_level: DecorationLevel,
    /// Box-blur radius applied after painting; 0 disables it.
    pub blur_radius: u32,
}

fn separated(a: Rgb, b: Rgb) -> bool {
    a.iter().zip(b).any(|(x, y)| x.abs_diff(y) > MIN_SEPARATION)
}

impl MapSpec {
    pub fn dims(&self) -> (u32, u32) {
        self.aspect_ratio.dims(self.base_width)
    }

    pub fn map_id(&self) -> String {
        format!("synth-{:016x}", self.layout_seed)
    }

    /// Corridor color is separable from every other color.
    pub fn is_separable(&self) -> bool {
        std::iter::once(self.background_color)
            .chain(self.obstacle_palette.iter().copied())
            .chain(std::iter::once(self.text_color))
            .all(|c| separated(self.corridor_color, c))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let (w, h) = self.dims();
        if w < MIN_MAP_SIDE || h < MIN_MAP_SIDE {
            return Err(SynthError::InvalidSpec(format!("image {w}x{h} is below the {MIN_MAP_SIDE}px minimum")));
        }
        if self.corridor_width == 0 {
            return Err(SynthError::InvalidSpec("corridor width must be at least 1px".into()));
        }
        if self.lattice_spacing < 2 || self.corridor_width * 2 > self.lattice_spacing {
            return Err(SynthError::CorridorTooWide { width: self.corridor_width, spacing: self.lattice_spacing });
        }
        if !self.is_separable() {
            return Err(SynthError::InvalidSpec("corridor color is not separable from the palette".into()));
        }
        Ok(())
    }
}

/// Curated colors for one category theme.
#[derive(Clone, Copy, Debug)]
pub struct Palette {
    pub corridor: Rgb,
    pub background: Rgb,
    pub obstacles: [Rgb; 4],
    pub text: Rgb,
}

pub fn palette(category: MapCategory) -> Palette {
    use MapCategory::*;
    let p = |corridor, background, obstacles, text| Palette { corridor, background, obstacles, text };
    match category {
        Airport => p(
            [250, 250, 250],
            [150, 160, 175],
            [[90, 110, 140], [200, 120, 60], [120, 170, 210], [60, 60, 70]],
            [30, 30, 40],
        ),
        Campus => p(
            [235, 225, 200],
            [110, 170, 95],
            [[170, 90, 70], [140, 140, 150], [70, 110, 160], [200, 180, 80]],
            [40, 40, 40],
        ),
        Hospital => p(
            [255, 255, 255],
            [170, 205, 220],
            [[200, 90, 90], [120, 150, 190], [150, 200, 160], [90, 100, 110]],
            [20, 40, 80],
        ),
        ShoppingMall => p(
            [245, 230, 160],
            [120, 110, 140],
            [[210, 110, 150], [90, 160, 200], [170, 200, 110], [60, 50, 80]],
            [20, 20, 20],
        ),
        Museum => p(
            [230, 215, 185],
            [120, 90, 80],
            [[170, 60, 60], [70, 90, 120], [190, 160, 100], [60, 70, 60]],
            [30, 25, 20],
        ),
        NationalPark => p(
            [220, 200, 150],
            [60, 140, 70],
            [[40, 100, 170], [120, 90, 60], [170, 200, 90], [90, 60, 120]],
            [20, 50, 20],
        ),
        AmusementPark => p(
            [255, 220, 120],
            [90, 160, 170],
            [[220, 80, 120], [130, 80, 200], [240, 140, 60], [60, 120, 60]],
            [40, 20, 60],
        ),
        Zoo => p(
            [210, 180, 130],
            [90, 150, 60],
            [[160, 110, 50], [60, 120, 150], [180, 160, 60], [100, 70, 40]],
            [30, 40, 20],
        ),
        BotanicalGarden => p(
            [240, 230, 210],
            [70, 130, 80],
            [[200, 100, 150], [230, 190, 70], [100, 80, 160], [150, 70, 60]],
            [20, 60, 30],
        ),
        Hotel => p(
            [230, 210, 170],
            [110, 70, 70],
            [[170, 150, 110], [70, 90, 110], [150, 110, 150], [90, 120, 90]],
            [40, 30, 30],
        ),
        Urban => p(
            [240, 240, 120],
            [90, 95, 110],
            [[180, 70, 60], [60, 120, 180], [150, 150, 160], [40, 40, 50]],
            [220, 220, 230],
        ),
        Restaurant => p(
            [250, 250, 250],
            [60, 130, 70],
            [[180, 60, 60], [60, 80, 160], [150, 150, 150], [200, 170, 60]],
            [20, 20, 20],
        ),
    }
}

/// Draws [`MapSpec`]s. Category weights default to uniform.
#[derive(Clone, Debug)]
pub struct SpecSampler {
    pub category_weights: [f64; 12],
    /// Fixed decoration level, or uniform over the three levels.
    pub decoration: Option<DecorationLevel>,
    pub base_width: u32,
    pub corridor_width: u32,
    pub lattice_spacing: u32,
}

impl Default for SpecSampler {
    fn default() -> Self {
        Self {
            category_weights: [1.0; 12],
            decoration: None,
            base_width: DEFAULT_BASE_WIDTH,
            corridor_width: DEFAULT_CORRIDOR_WIDTH,
            lattice_spacing: DEFAULT_LATTICE_SPACING,
        }
    }
}

impl SpecSampler {
    pub fn sample(&self, seed: u64) -> Result<MapSpec, SynthError> {
        let weights = WeightedIndex::new(self.category_weights)
            .map_err(|e| SynthError::InvalidSpec(format!("category weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5bec_0000_0000);
        let category = MapCategory::ALL[weights.sample(&mut rng)];
        let aspect_ratio = AspectRatio::ALL[rng.random_range(0..AspectRatio::ALL.len())];
        let decoration_level = self.decoration.unwrap_or_else(|| {
            [DecorationLevel::None, DecorationLevel::Light, DecorationLevel::Heavy][rng.random_range(0..3)]
        });
        let pal = palette(category);
        let mut obstacles = pal.obstacles.to_vec();
        obstacles.shuffle(&mut rng);
        obstacles.truncate(rng.random_range(2..=4));
        Ok(MapSpec {
            category,
            aspect_ratio,
            base_width: self.base_width,
            corridor_width: self.corridor_width,
            lattice_spacing: self.lattice_spacing,
            corridor_color: pal.corridor,
            background_color: pal.background,
            obstacle_palette: obstacles,
            text_color: pal.text,
            layout_seed: seed,
            decoration_level,
            blur_radius: 0,
        })
    }
}

/// A spec drawn with the default sampler.
pub fn sample_spec(seed: u64) -> MapSpec {
    SpecSampler::default().sample(seed).expect("default weights are valid")
}

struct Canvas {
    w: u32,
    h: u32,
    px: Vec<Rgb>,
}

impl Canvas {
    /// Fill the half-open rectangle `[x0, x1) x [y0, y1)`, clipped.
    fn fill(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb) {
        let (x0, x1) = (x0.clamp(0, self.w as i64) as u32, x1.clamp(0, self.w as i64) as u32);
        let (y0, y1) = (y0.clamp(0, self.h as i64) as u32, y1.clamp(0, self.h as i64) as u32);
        for y in y0..y1 {
            let row = (y * self.w) as usize;
            self.px[row + x0 as usize..row + x1.max(x0) as usize].fill(c);
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

/// Junction positions along one axis of length `len`.
fn lattice_axis(len: u32, spacing: u32) -> Vec<i64> {
    let margin = spacing / 2;
    let usable = len.saturating_sub(1 + 2 * margin);
    (0..=usable / spacing).map(|i| (margin + i * spacing) as i64).collect()
}

fn box_blur(px: &[Rgb], w: u32, h: u32, r: u32) -> Vec<Rgb> {
    let (w, h, r) = (w as i64, h as i64, r as i64);
    let pass = |src: &[Rgb], horizontal: bool| -> Vec<Rgb> {
        let mut out = vec![[0u8; 3]; src.len()];
        for y in 0..h {
            for x in 0..w {
                let mut sum = [0u32; 3];
                let mut n = 0u32;
                for d in -r..=r {
                    let (sx, sy) = if horizontal { (x + d, y) } else { (x, y + d) };
                    if sx >= 0 && sy >= 0 && sx < w && sy < h {
                        let p = src[(sy * w + sx) as usize];
                        for c in 0..3 {
                            sum[c] += p[c] as u32;
                        }
                        n += 1;
                    }
                }
                out[(y * w + x) as usize] = [0, 1, 2].map(|c| ((sum[c] + n / 2) / n) as u8);
            }
        }
        out
    };
    pass(&pass(px, true), false)
}

/// Render `spec`. Returns the map and its exact corridor mask.
pub fn generate_map(spec: &MapSpec) -> Result<(RasterMap, TraversabilityMask), SynthError> {
    spec.validate()?;
    let (w, h) = spec.dims();
    let xs = lattice_axis(w, spec.lattice_spacing);
    let ys = lattice_axis(h, spec.lattice_spacing);
    let (nx, ny) = (xs.len(), ys.len());
    if nx * ny < 2 {
        return Err(SynthError::InvalidSpec(format!(
            "lattice of {w}x{h} at spacing {} has one junction",
            spec.lattice_spacing
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.layout_seed);

    // Lattice edges as (a, b) junction ids, a < b.
    let id = |i: usize, j: usize| j * nx + i;
    let mut edges = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                edges.push((id(i, j), id(i + 1, j)));
            }
            if j + 1 < ny {
                edges.push((id(i, j), id(i, j + 1)));
            }
        }
    }
    edges.shuffle(&mut rng);
    let mut uf = UnionFind((0..nx * ny).collect());
    let mut kept = Vec::new();
    for (a, b) in edges {
        if uf.union(a, b) || rng.random_bool(LOOP_PROBABILITY) {
            kept.push((a, b));
        }
    }

    let mut canvas = Canvas { w, h, px: vec![spec.background_color; (w * h) as usize] };
    let cw = spec.corridor_width as i64;
    let half = cw / 2;
    decorate(&mut canvas, spec, &xs, &ys, &mut rng);

    let pos = |n: usize| (xs[n % nx], ys[n / nx]);
    let mut mask = TraversabilityMask::zeros(w, h);
    for (a, b) in kept {
        let ((xa, ya), (xb, yb)) = (pos(a), pos(b));
        let (x0, y0, x1, y1) = (xa.min(xb) - half, ya.min(yb) - half, xa.max(xb) - half + cw, ya.max(yb) - half + cw);
        canvas.fill(x0, y0, x1, y1, spec.corridor_color);
        for y in y0.max(0)..y1.min(h as i64) {
            for x in x0.max(0)..x1.min(w as i64) {
                mask.set(x as u32, y as u32, true);
            }
        }
    }

    let px = if spec.blur_radius > 0 { box_blur(&canvas.px, w, h, spec.blur_radius) } else { canvas.px };
    let map = RasterMap::new(w, h, px, spec.category, spec.map_id())?;
    Ok((map, mask))
}

/// Obstacles and text strips inside lattice cells, clear of corridors.
fn decorate(canvas: &mut Canvas, spec: &MapSpec, xs: &[i64], ys: &[i64], rng: &mut ChaCha8Rng) {
    let (p_obstacle, p_text) = match spec.decoration_level {
        DecorationLevel::None => return,
        DecorationLevel::Light => (0.5, 0.0),
        DecorationLevel::Heavy => (0.9, 0.6),
    };
    let cw = spec.corridor_width as i64;
    let half = cw / 2;
    let gap = 2;
    for wy in ys.windows(2) {
        for wx in xs.windows(2) {
            let (x0, x1) = (wx[0] - half + cw + gap, wx[1] - half - gap);
            let (y0, y1) = (wy[0] - half + cw + gap, wy[1] - half - gap);
            if x1 - x0 < 6 || y1 - y0 < 8 {
                continue;
            }
            // Obstacle in the upper 60% of the cell, text in the rest.
            let split = y0 + (y1 - y0) * 3 / 5;
            if !spec.obstacle_palette.is_empty() && rng.random_bool(p_obstacle) {
                let ow = rng.random_range(2..=(x1 - x0));
                let oh = rng.random_range(2..=(split - y0).max(2));
                let ox = x0 + rng.random_range(0..=(x1 - x0 - ow));
                let oy = y0 + rng.random_range(0..=(split - y0 - oh).max(0));
                let c = spec.obstacle_palette[rng.random_range(0..spec.obstacle_palette.len())];
                canvas.fill(ox, oy, ox + ow, oy + oh, c);
            }
            if rng.random_bool(p_text) {
                let mut y = split + 1;
                while y + 3 <= y1 {
                    let mut x = x0;
                    while x < x1 {
                        let word = rng.random_range(3..=8);
                        canvas.fill(x, y, (x + word).min(x1), y + 2, spec.text_color);
                        x += word + 2;
                    }
                    y += 4;
                }
            }
        }
    }
}
