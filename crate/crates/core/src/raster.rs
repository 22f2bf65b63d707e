//! Integer line walks between pixel centers.

use crate::model::Coordinate;

/// Every pixel cell the straight segment between the centers of `a` and `b`
/// passes through. When the segment crosses exactly through a cell corner,
/// both side cells are included, so the pixel set is the same for `(a, b)`
/// and `(b, a)`.
///
/// Pixels are yielded in walk order from `a`; corner side cells precede the
/// diagonal cell.
pub fn supercover_line(a: Coordinate, b: Coordinate) -> Vec<Coordinate> {
    let dx = (b.x as i64 - a.x as i64).abs();
    let dy = (b.y as i64 - a.y as i64).abs();
    let sx = if b.x >= a.x { 1 } else { -1 };
    let sy = if b.y >= a.y { 1 } else { -1 };
    let mut out = Vec::with_capacity((dx + dy + 1) as usize);
    let (mut x, mut y) = (a.x, a.y);
    out.push(Coordinate::new(x, y));
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < dx || iy < dy {
        // Compare where the segment crosses the next vertical vs horizontal
        // cell boundary; both scaled by 2*dx*dy to stay integral.
        let decision = (1 + 2 * ix) * dy - (1 + 2 * iy) * dx;
        if decision == 0 {
            out.push(Coordinate::new(x + sx, y));
            out.push(Coordinate::new(x, y + sy));
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        out.push(Coordinate::new(x, y));
    }
    out
}

/// Thin 8-connected Bresenham line from `a` to `b`, inclusive.
pub fn bresenham_line(a: Coordinate, b: Coordinate) -> Vec<Coordinate> {
    let dx = (b.x as i64 - a.x as i64).abs();
    let dy = -(b.y as i64 - a.y as i64).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (a.x, a.y);
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push(Coordinate::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Rasterize a polyline with [`bresenham_line`], without repeating the shared
/// vertex between consecutive segments.
pub fn bresenham_polyline(points: &[Coordinate]) -> Vec<Coordinate> {
    let mut out = Vec::new();
    match points {
        [] => {}
        [p] => out.push(*p),
        _ => {
            for (i, w) in points.windows(2).enumerate() {
                let seg = bresenham_line(w[0], w[1]);
                let skip = usize::from(i > 0);
                out.extend(seg.into_iter().skip(skip));
            }
        }
    }
    out
}
