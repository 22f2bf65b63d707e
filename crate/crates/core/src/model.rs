//! Shared domain types: maps, traversability masks, coordinates, queries and
//! path annotations, plus path validity checking.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::supercover_line;

/// Smallest accepted map side in pixels.
pub const MIN_MAP_SIDE: u32 = 16;

pub type Rgb = [u8; 3];

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("map is {width}x{height}; both sides must be at least {MIN_MAP_SIDE}")]
    MapTooSmall { width: u32, height: u32 },
    #[error("expected {expected} pixels for the given dimensions, got {actual}")]
    PixelCount { expected: usize, actual: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("query start and end coincide at {0}")]
    DegenerateQuery(Coordinate),
    #[error("a path needs at least 2 points, got {0}")]
    PathTooShort(usize),
    #[error("unknown map category `{0}`")]
    UnknownCategory(String),
}

/// The fixed set of map environment labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MapCategory {
    #[serde(rename = "zoo")]
    Zoo,
    #[serde(rename = "urban")]
    Urban,
    #[serde(rename = "botanical garden")]
    BotanicalGarden,
    #[serde(rename = "museum")]
    Museum,
    #[serde(rename = "amusement park")]
    AmusementPark,
    #[serde(rename = "national park")]
    NationalPark,
    #[serde(rename = "hospital")]
    Hospital,
    #[serde(rename = "hotel")]
    Hotel,
    #[serde(rename = "airport")]
    Airport,
    #[serde(rename = "shopping mall")]
    ShoppingMall,
    #[serde(rename = "restaurant")]
    Restaurant,
    #[serde(rename = "campus")]
    Campus,
}

impl MapCategory {
    pub const ALL: [MapCategory; 12] = [
        MapCategory::Zoo,
        MapCategory::Urban,
        MapCategory::BotanicalGarden,
        MapCategory::Museum,
        MapCategory::AmusementPark,
        MapCategory::NationalPark,
        MapCategory::Hospital,
        MapCategory::Hotel,
        MapCategory::Airport,
        MapCategory::ShoppingMall,
        MapCategory::Restaurant,
        MapCategory::Campus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MapCategory::Zoo => "zoo",
            MapCategory::Urban => "urban",
            MapCategory::BotanicalGarden => "botanical garden",
            MapCategory::Museum => "museum",
            MapCategory::AmusementPark => "amusement park",
            MapCategory::NationalPark => "national park",
            MapCategory::Hospital => "hospital",
            MapCategory::Hotel => "hotel",
            MapCategory::Airport => "airport",
            MapCategory::ShoppingMall => "shopping mall",
            MapCategory::Restaurant => "restaurant",
            MapCategory::Campus => "campus",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl fmt::Display for MapCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MapCategory {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        Self::ALL.iter().copied().find(|c| c.label() == norm).ok_or_else(|| ModelError::UnknownCategory(s.to_string()))
    }
}

/// A pixel position: `x` is the column, `y` the row, origin top-left.
///
/// Signed so that out-of-bounds predictions can be represented and rejected
/// rather than wrapped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Coordinate {
    pub x: i32,
    pub y: i32,
}

impl Coordinate {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Coordinate) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }

    pub fn in_bounds(self, width: u32, height: u32) -> bool {
        self.x >= 0 && self.y >= 0 && (self.x as i64) < width as i64 && (self.y as i64) < height as i64
    }
}

impl From<[i32; 2]> for Coordinate {
    fn from([x, y]: [i32; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Coordinate> for [i32; 2] {
    fn from(c: Coordinate) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// An RGB map image with its category label.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterMap {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
    category: MapCategory,
    map_id: String,
}

impl RasterMap {
    pub fn new(
        width: u32,
        height: u32,
        pixels: Vec<Rgb>,
        category: MapCategory,
        map_id: impl Into<String>,
    ) -> Result<Self, ModelError> {
        if width < MIN_MAP_SIDE || height < MIN_MAP_SIDE {
            return Err(ModelError::MapTooSmall { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ModelError::PixelCount { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels, category, map_id: map_id.into() })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn category(&self) -> MapCategory {
        self.category
    }

    pub fn map_id(&self) -> &str {
        &self.map_id
    }

    pub fn with_map_id(mut self, map_id: impl Into<String>) -> Self {
        self.map_id = map_id.into();
        self
    }
}

/// Binary per-pixel traversability grid, row-major, `true` = traversable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraversabilityMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl TraversabilityMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, ModelError> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(ModelError::PixelCount { expected, actual: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn ones(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![true; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Out-of-bounds positions read as not traversable.
    pub fn get(&self, c: Coordinate) -> bool {
        c.in_bounds(self.width, self.height) && self.bits[c.y as usize * self.width as usize + c.x as usize]
    }

    pub fn at(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn ensure_same_dims(&self, other: (u32, u32)) -> Result<(), ModelError> {
        if self.dims() != other {
            return Err(ModelError::DimensionMismatch { left: self.dims(), right: other });
        }
        Ok(())
    }

    /// Dilation by a `(2r+1)×(2r+1)` square: a pixel is set when any pixel
    /// within Chebyshev distance `radius` is set.
    pub fn dilate(&self, radius: u32) -> TraversabilityMask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as usize, self.height as usize);
        let r = radius as usize;
        let mut horiz = vec![false; w * h];
        let mut prefix = vec![0u32; w.max(h) + 1];
        for y in 0..h {
            let row = &self.bits[y * w..(y + 1) * w];
            for x in 0..w {
                prefix[x + 1] = prefix[x] + u32::from(row[x]);
            }
            for x in 0..w {
                let lo = x.saturating_sub(r);
                let hi = (x + r + 1).min(w);
                horiz[y * w + x] = prefix[hi] > prefix[lo];
            }
        }
        let mut out = vec![false; w * h];
        for x in 0..w {
            for y in 0..h {
                prefix[y + 1] = prefix[y] + u32::from(horiz[y * w + x]);
            }
            for y in 0..h {
                let lo = y.saturating_sub(r);
                let hi = (y + r + 1).min(h);
                out[y * w + x] = prefix[hi] > prefix[lo];
            }
        }
        TraversabilityMask { width: self.width, height: self.height, bits: out }
    }

    /// Pixelwise OR.
    pub fn union(&self, other: &TraversabilityMask) -> Result<TraversabilityMask, ModelError> {
        self.ensure_same_dims(other.dims())?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Ok(TraversabilityMask { width: self.width, height: self.height, bits })
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &TraversabilityMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

/// A start/end request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathQuery {
    pub start: Coordinate,
    pub end: Coordinate,
}

impl PathQuery {
    pub fn new(start: Coordinate, end: Coordinate) -> Result<Self, ModelError> {
        if start == end {
            return Err(ModelError::DegenerateQuery(start));
        }
        Ok(Self { start, end })
    }

    /// Both endpoints sit on traversable pixels of `mask`.
    pub fn is_on(&self, mask: &TraversabilityMask) -> bool {
        mask.get(self.start) && mask.get(self.end)
    }
}

/// An ordered pixel path answering a [`PathQuery`] on one map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathAnnotation {
    pub query: PathQuery,
    pub points: Vec<Coordinate>,
    pub map_id: String,
}

impl PathAnnotation {
    pub fn new(query: PathQuery, points: Vec<Coordinate>, map_id: impl Into<String>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::PathTooShort(points.len()));
        }
        Ok(Self { query, points, map_id: map_id.into() })
    }
}

/// Where a path first leaves the traversable area.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    /// The first non-traversable pixel encountered.
    pub pixel: Coordinate,
    /// Index of the segment `points[i] -> points[i+1]` containing it.
    pub segment: usize,
    /// Index into the path when the pixel is one of the listed points.
    pub point: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathValidity {
    Valid,
    Invalid(Violation),
}

impl PathValidity {
    pub fn is_valid(&self) -> bool {
        matches!(self, PathValidity::Valid)
    }
}

/// Check that every listed point, and every pixel on the supercover
/// rasterization of each consecutive segment, is traversable. Out-of-bounds
/// pixels count as violations.
pub fn validate_path(points: &[Coordinate], mask: &TraversabilityMask) -> PathValidity {
    if let [p] = points {
        if !mask.get(*p) {
            return PathValidity::Invalid(Violation { pixel: *p, segment: 0, point: Some(0) });
        }
    }
    for (i, w) in points.windows(2).enumerate() {
        for px in supercover_line(w[0], w[1]) {
            if !mask.get(px) {
                let point = if px == w[0] {
                    Some(i)
                } else if px == w[1] {
                    Some(i + 1)
                } else {
                    None
                };
                return PathValidity::Invalid(Violation { pixel: px, segment: i, point });
            }
        }
    }
    PathValidity::Valid
}

/// [`validate_path`] for an annotation bound to `map`.
pub fn validate_annotation(
    path: &PathAnnotation,
    map: &RasterMap,
    mask: &TraversabilityMask,
) -> Result<PathValidity, ModelError> {
    mask.ensure_same_dims(map.dims())?;
    Ok(validate_path(&path.points, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: i32, y: i32) -> Coordinate {
        Coordinate::new(x, y)
    }

    #[test]
    fn straight_path_in_open_mask_is_valid() {
        let mask = TraversabilityMask::ones(16, 16);
        assert!(validate_path(&[c(1, 1), c(5, 1), c(5, 9)], &mask).is_valid());
    }

    #[test]
    fn point_on_blocked_pixel_reports_its_index() {
        let mut mask = TraversabilityMask::ones(16, 16);
        mask.set(5, 1, false);
        let v = validate_path(&[c(1, 1), c(3, 1), c(5, 1)], &mask);
        assert_eq!(v, PathValidity::Invalid(Violation { pixel: c(5, 1), segment: 1, point: Some(2) }));
    }

    #[test]
    fn segment_crossing_a_wall_reports_segment_zero() {
        // vertical wall at x = 8
        let mask = TraversabilityMask::from_fn(16, 16, |x, _| x != 8);
        let (a, b) = (c(2, 3), c(13, 9));
        assert!(mask.get(a) && mask.get(b));
        // The segment enters column 8 at x = 7.5 where y = 3 + 6 * 5.5 / 11 = 6,
        // the middle of row 6.
        let first_bad = c(8, 6);
        match validate_path(&[a, b], &mask) {
            PathValidity::Invalid(v) => {
                assert_eq!(v.segment, 0);
                assert_eq!(v.point, None);
                assert_eq!(v.pixel, first_bad);
            }
            PathValidity::Valid => panic!("segment through a wall accepted"),
        }
    }

    #[test]
    fn out_of_bounds_is_a_violation() {
        let mask = TraversabilityMask::ones(16, 16);
        assert!(!validate_path(&[c(1, 1), c(18, 1)], &mask).is_valid());
        assert!(!validate_path(&[c(-1, 0)], &mask).is_valid());
    }

    #[test]
    fn annotation_dimension_mismatch() {
        let map = RasterMap::new(16, 16, vec![[0; 3]; 256], MapCategory::Zoo, "m").unwrap();
        let mask = TraversabilityMask::ones(17, 16);
        let q = PathQuery::new(c(0, 0), c(1, 1)).unwrap();
        let p = PathAnnotation::new(q, vec![c(0, 0), c(1, 1)], "m").unwrap();
        assert!(matches!(validate_annotation(&p, &map, &mask), Err(ModelError::DimensionMismatch { .. })));
    }

    #[test]
    fn map_constructor_invariants() {
        assert!(matches!(
            RasterMap::new(15, 20, vec![[0; 3]; 300], MapCategory::Zoo, "m"),
            Err(ModelError::MapTooSmall { .. })
        ));
        assert!(matches!(
            RasterMap::new(16, 16, vec![[0; 3]; 10], MapCategory::Zoo, "m"),
            Err(ModelError::PixelCount { .. })
        ));
        assert!(PathQuery::new(c(1, 1), c(1, 1)).is_err());
    }

    #[test]
    fn category_labels_round_trip() {
        for cat in MapCategory::ALL {
            assert_eq!(cat.label().parse::<MapCategory>().unwrap(), cat);
            let json = serde_json::to_string(&cat).unwrap();
            assert_eq!(json, format!("\"{}\"", cat.label()));
        }
        assert_eq!("shopping_mall".parse::<MapCategory>().unwrap(), MapCategory::ShoppingMall);
        assert!("parking lot".parse::<MapCategory>().is_err());
    }

    #[test]
    fn dilation_matches_naive_scan() {
        let mask = TraversabilityMask::from_fn(23, 17, |x, y| (x * 7 + y * 13) % 19 == 0);
        for r in 0..4 {
            let fast = mask.dilate(r);
            let slow = TraversabilityMask::from_fn(23, 17, |x, y| {
                let r = r as i32;
                (-r..=r).any(|dy| (-r..=r).any(|dx| mask.get(c(x as i32 + dx, y as i32 + dy))))
            });
            assert_eq!(fast, slow, "radius {r}");
        }
    }

    fn arb_mask() -> impl Strategy<Value = TraversabilityMask> {
        proptest::collection::vec(any::<bool>(), 20 * 20)
            .prop_map(|bits| TraversabilityMask::new(20, 20, bits).unwrap())
    }

    proptest! {
        #[test]
        fn validity_is_monotone_in_mask(
            mask in arb_mask(),
            extra in arb_mask(),
            pts in proptest::collection::vec((0i32..20, 0i32..20), 1..6),
        ) {
            let pts: Vec<_> = pts.into_iter().map(|(x, y)| c(x, y)).collect();
            let bigger = mask.union(&extra).unwrap();
            if validate_path(&pts, &mask).is_valid() {
                prop_assert!(validate_path(&pts, &bigger).is_valid());
            }
            prop_assert!(validate_path(&pts, &TraversabilityMask::ones(20, 20)).is_valid());
        }
    }
}
