//! Text encodings of coordinate sequences.
//!
//! Canonical form is a bracketed list of parenthesized pairs:
//! `[(0.1234, 0.5678), (0.2000, 0.5678)]`. Pixel inputs are rounded with
//! exact integer arithmetic (half-up), so output never depends on float
//! formatting.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{MetricError, Point};
use crate::model::Coordinate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaBase {
    Pixel,
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Absolute,
    Normalized,
    /// First point absolute in the base's units, then per-step differences.
    Delta(DeltaBase),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Precision {
    /// 17 significant digits.
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "4")]
    Decimals4,
    #[serde(rename = "3")]
    Decimals3,
    #[serde(rename = "2")]
    Decimals2,
}

impl Precision {
    pub fn decimals(self) -> Option<u32> {
        match self {
            Precision::Full => None,
            Precision::Decimals4 => Some(4),
            Precision::Decimals3 => Some(3),
            Precision::Decimals2 => Some(2),
        }
    }

    /// Largest per-value rounding error, `0.5 * 10^-d`.
    pub fn half_step(self) -> f64 {
        self.decimals().map_or(0.0, |d| 0.5 * 10f64.powi(-(d as i32)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoordinateEncoding {
    pub representation: Representation,
    pub precision: Precision,
}

impl CoordinateEncoding {
    pub const fn new(representation: Representation, precision: Precision) -> Self {
        Self { representation, precision }
    }
}

impl Default for CoordinateEncoding {
    fn default() -> Self {
        Self::new(Representation::Normalized, Precision::Decimals4)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Absolute => "absolute",
            Representation::Normalized => "normalized",
            Representation::Delta(DeltaBase::Normalized) => "delta",
            Representation::Delta(DeltaBase::Pixel) => "delta-pixel",
        })
    }
}

impl FromStr for Representation {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "absolute" | "pixel" => Ok(Representation::Absolute),
            "normalized" => Ok(Representation::Normalized),
            "delta" | "delta-normalized" => Ok(Representation::Delta(DeltaBase::Normalized)),
            "delta-pixel" | "delta-absolute" => Ok(Representation::Delta(DeltaBase::Pixel)),
            other => Err(MetricError::Encoding(format!("unknown representation `{other}`"))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.decimals() {
            None => f.write_str("full"),
            Some(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for Precision {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Precision::Full),
            "4" => Ok(Precision::Decimals4),
            "3" => Ok(Precision::Decimals3),
            "2" => Ok(Precision::Decimals2),
            other => Err(MetricError::Encoding(format!("precision must be full, 4, 3 or 2, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Only the canonical grammar.
    Strict,
    /// Also pull pairs out of bracketed arrays or one pair per line.
    #[default]
    Lenient,
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn render_fixed(q: i128, d: u32) -> String {
    let scale = 10i128.pow(d);
    let sign = if q < 0 { "-" } else { "" };
    let a = q.abs();
    format!("{sign}{}.{:0width$}", a / scale, a % scale, width = d as usize)
}

fn render_full(v: f64) -> String {
    if v == 0.0 {
        return "0.0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(1) as usize;
    format!("{v:.decimals$}")
}

/// `num / den` rendered at `precision`, rounding half-up exactly.
fn render_ratio(num: i64, den: u32, precision: Precision) -> String {
    match precision.decimals() {
        None => render_full(num as f64 / den as f64),
        Some(d) => {
            let den = den as i128;
            let q = floor_div(2 * num as i128 * 10i128.pow(d) + den, 2 * den);
            render_fixed(q, d)
        }
    }
}

fn render_float(v: f64, precision: Precision) -> String {
    match precision.decimals() {
        None => render_full(v),
        Some(d) => {
            let s = format!("{v:.prec$}", prec = d as usize);
            if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
                s[1..].to_string()
            } else {
                s
            }
        }
    }
}

fn join(pairs: impl Iterator<Item = (String, String)>) -> String {
    let body: Vec<String> = pairs.map(|(x, y)| format!("({x}, {y})")).collect();
    format!("[{}]", body.join(", "))
}

/// Render a pixel path on a `dims` map.
pub fn format_path(
    points: &[Coordinate],
    dims: (u32, u32),
    encoding: CoordinateEncoding,
) -> Result<String, MetricError> {
    if points.is_empty() {
        return Err(MetricError::EmptyPath);
    }
    let (w, h) = dims;
    let p = encoding.precision;
    let steps = |i: usize| -> (i64, i64) {
        let c = points[i];
        if i == 0 {
            (c.x as i64, c.y as i64)
        } else {
            ((c.x - points[i - 1].x) as i64, (c.y - points[i - 1].y) as i64)
        }
    };
    let out = match encoding.representation {
        Representation::Absolute => join(points.iter().map(|c| (c.x.to_string(), c.y.to_string()))),
        Representation::Normalized => {
            join(points.iter().map(|c| (render_ratio(c.x as i64, w, p), render_ratio(c.y as i64, h, p))))
        }
        Representation::Delta(DeltaBase::Pixel) => join((0..points.len()).map(|i| {
            let (dx, dy) = steps(i);
            (dx.to_string(), dy.to_string())
        })),
        Representation::Delta(DeltaBase::Normalized) => join((0..points.len()).map(|i| {
            let (dx, dy) = steps(i);
            (render_ratio(dx, w, p), render_ratio(dy, h, p))
        })),
    };
    Ok(out)
}

/// Render an already-normalized path. Pixel-unit representations are
/// rejected since the map size is unknown here.
pub fn format_normalized(points: &[Point], encoding: CoordinateEncoding) -> Result<String, MetricError> {
    if points.is_empty() {
        return Err(MetricError::EmptyPath);
    }
    let p = encoding.precision;
    match encoding.representation {
        Representation::Normalized => Ok(join(points.iter().map(|q| (render_float(q[0], p), render_float(q[1], p))))),
        Representation::Delta(DeltaBase::Normalized) => Ok(join((0..points.len()).map(|i| {
            let q = points[i];
            let (x, y) = if i == 0 { (q[0], q[1]) } else { (q[0] - points[i - 1][0], q[1] - points[i - 1][1]) };
            (render_float(x, p), render_float(y, p))
        }))),
        other => Err(MetricError::Encoding(format!("{other} needs pixel coordinates"))),
    }
}

const STRICT_NUM: &str = r"-?\d+(?:\.\d+)?";
const LOOSE_NUM: &str = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?";

static STRICT_WHOLE: LazyLock<Regex> = LazyLock::new(|| {
    let pair = format!(r"\({STRICT_NUM}, {STRICT_NUM}\)");
    Regex::new(&format!(r"^\[{pair}(?:, {pair})*\]$")).unwrap()
});
static STRICT_PAIR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\(({STRICT_NUM}), ({STRICT_NUM})\)")).unwrap());
static PAREN_PAIR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\(\s*({LOOSE_NUM})\s*,\s*({LOOSE_NUM})\s*\)")).unwrap());
static BRACKET_PAIR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\[\s*({LOOSE_NUM})\s*,\s*({LOOSE_NUM})\s*\]")).unwrap());
static LINE_PAIR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"^\s*[\(\[]?\s*({LOOSE_NUM})\s*(?:,\s*|\s+)({LOOSE_NUM})\s*[\)\]]?\s*,?\s*$")).unwrap()
});

fn collect(re: &Regex, text: &str) -> Result<Vec<Point>, MetricError> {
    re.captures_iter(text)
        .map(|c| {
            let num =
                |i: usize| c[i].parse::<f64>().map_err(|e| MetricError::Parse(format!("bad number `{}`: {e}", &c[i])));
            Ok([num(1)?, num(2)?])
        })
        .collect()
}

fn extract_pairs(text: &str, mode: ParseMode) -> Result<Vec<Point>, MetricError> {
    let t = text.trim();
    if t.is_empty() || t.chars().all(|c| c == '[' || c == ']' || c.is_whitespace()) {
        return Err(MetricError::EmptyOutput);
    }
    if STRICT_WHOLE.is_match(t) {
        return collect(&STRICT_PAIR, t);
    }
    if mode == ParseMode::Strict {
        return Err(MetricError::Parse("not in canonical `[(x, y), ...]` form".into()));
    }
    for re in [&*PAREN_PAIR, &*BRACKET_PAIR] {
        let pts = collect(re, t)?;
        if !pts.is_empty() {
            return Ok(pts);
        }
    }
    let mut pts = Vec::new();
    for line in t.lines() {
        pts.extend(collect(&LINE_PAIR, line)?);
    }
    if pts.is_empty() {
        return Err(MetricError::Parse("no coordinate pairs found".into()));
    }
    Ok(pts)
}

/// Parse `text` into points in the encoding's own units (pixels for
/// absolute and pixel deltas, normalized otherwise). Deltas are
/// accumulated from the first point.
pub fn decode_path(text: &str, encoding: CoordinateEncoding, mode: ParseMode) -> Result<Vec<Point>, MetricError> {
    let mut pts = extract_pairs(text, mode)?;
    if let Representation::Delta(_) = encoding.representation {
        for i in 1..pts.len() {
            pts[i] = [pts[i - 1][0] + pts[i][0], pts[i - 1][1] + pts[i][1]];
        }
    }
    if pts.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MetricError::Parse("non-finite coordinate".into()));
    }
    Ok(pts)
}

/// Parse `text` into normalized points for a `dims` map. No clamping.
pub fn parse_path(
    text: &str,
    dims: (u32, u32),
    encoding: CoordinateEncoding,
    mode: ParseMode,
) -> Result<Vec<Point>, MetricError> {
    let mut pts = decode_path(text, encoding, mode)?;
    if matches!(encoding.representation, Representation::Absolute | Representation::Delta(DeltaBase::Pixel)) {
        let (w, h) = (dims.0 as f64, dims.1 as f64);
        for p in &mut pts {
            *p = [p[0] / w, p[1] / h];
        }
    }
    Ok(pts)
}
