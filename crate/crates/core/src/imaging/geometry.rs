//! Region geometry from a binary mask: component selection, Moore contour
//! tracing, convex hull.

use serde::{Deserialize, Serialize};

use super::Mask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGeometry {
    /// Foreground pixel count of the selected component.
    pub area: usize,
    /// Length of the (once smoothed) closed contour polygon.
    pub perimeter: f64,
    /// Boundary pixel centres in tracing order; the last point connects back to the first.
    pub contour: Vec<Point>,
    pub centroid: Point,
    /// Hull vertices, counter-clockwise in image coordinates.
    pub convex_hull: Vec<Point>,
    /// Lattice points inside or on the hull.
    pub convex_area: usize,
    pub convex_perimeter: f64,
    /// The selected component, same frame as the input mask.
    pub region: Mask,
}

// clockwise in image coordinates (y down), starting west
const DIRS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("offset between 8-neighbours")
}

/// Largest 8-connected foreground component (first in raster order on ties).
fn largest_component(mask: &Mask) -> (Mask, usize) {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut label = vec![0u32; (w * h) as usize];
    let mut sizes = vec![0usize];
    let mut stack = Vec::new();
    for (sx, sy) in mask.foreground() {
        let idx = (sy as i64 * w + sx as i64) as usize;
        if label[idx] != 0 {
            continue;
        }
        let id = sizes.len() as u32;
        sizes.push(0);
        label[idx] = id;
        stack.push((sx as i64, sy as i64));
        while let Some((x, y)) = stack.pop() {
            sizes[id as usize] += 1;
            for (dx, dy) in DIRS {
                let (nx, ny) = (x + dx, y + dy);
                if mask.get_signed(nx, ny) {
                    let n = (ny * w + nx) as usize;
                    if label[n] == 0 {
                        label[n] = id;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    let components = sizes.len() - 1;
    let best = (1..sizes.len())
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .unwrap_or(0) as u32;
    let region = Mask::from_fn(mask.width(), mask.height(), |x, y| {
        label[(y as i64 * w + x as i64) as usize] == best && best != 0
    });
    let _ = h;
    (region, components)
}

/// Moore-neighbour boundary trace with Jacob's stopping criterion.
fn trace_contour(region: &Mask) -> Vec<(i64, i64)> {
    let Some((sx, sy)) = region.foreground().next() else {
        return Vec::new();
    };
    let start = (sx as i64, sy as i64);
    let mut contour = vec![start];
    let mut p = start;
    // the raster-first pixel has background to its west
    let mut back = 0usize;
    let mut first_move: Option<(i64, i64)> = None;
    let limit = 4 * region.count() + 8;
    for _ in 0..limit {
        let mut next = None;
        for k in 1..=8 {
            let d = (back + k) % 8;
            let q = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
            if region.get_signed(q.0, q.1) {
                let prev = (back + k - 1) % 8;
                let b = (p.0 + DIRS[prev].0, p.1 + DIRS[prev].1);
                next = Some((q, dir_index(b.0 - q.0, b.1 - q.1)));
                break;
            }
        }
        let Some((q, new_back)) = next else {
            // isolated pixel
            break;
        };
        if p == start {
            match first_move {
                None => first_move = Some(q),
                Some(f) if f == q => break,
                Some(_) => {}
            }
        }
        p = q;
        back = new_back;
        contour.push(p);
    }
    if contour.len() > 1 && contour.last() == Some(&start) {
        contour.pop();
    }
    contour
}

fn closed_length(pts: &[Point]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    pts.iter()
        .zip(pts.iter().cycle().skip(1))
        .map(|(a, b)| a.dist(*b))
        .sum()
}

/// Polygon length after one pass of midpoint smoothing, which removes most
/// of the staircase bias of 8-connected chains.
fn smoothed_length(pts: &[Point]) -> f64 {
    if pts.len() < 3 {
        return closed_length(pts);
    }
    let mids: Vec<Point> = pts
        .iter()
        .zip(pts.iter().cycle().skip(1))
        .map(|(a, b)| Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0))
        .collect();
    closed_length(&mids)
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain; collinear points dropped.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside_hull(hull: &[Point], p: Point) -> bool {
    const EPS: f64 = 1e-9;
    hull.iter()
        .zip(hull.iter().cycle().skip(1))
        .all(|(&a, &b)| cross(a, b, p) >= -EPS)
}

/// Measure the mask's largest component.
///
/// Several components select the largest one and log a warning.
pub fn extract_geometry(mask: &Mask) -> Result<RegionGeometry> {
    if mask.count() == 0 {
        return Err(Error::EmptyRegion("mask has no foreground pixels".into()));
    }
    let (region, components) = largest_component(mask);
    if components > 1 {
        log::warn!("mask has {components} connected components; using the largest");
    }
    let area = region.count();
    let (mut sx, mut sy) = (0.0, 0.0);
    for (x, y) in region.foreground() {
        sx += x as f64;
        sy += y as f64;
    }
    let centroid = Point::new(sx / area as f64, sy / area as f64);

    let contour: Vec<Point> = trace_contour(&region)
        .into_iter()
        .map(|(x, y)| Point::new(x as f64, y as f64))
        .collect();
    let perimeter = smoothed_length(&contour);

    let convex_hull = convex_hull(&contour);
    let convex_area = if convex_hull.len() < 3 {
        // collinear region: every pixel lies on the hull segment
        area
    } else {
        let (min_x, max_x) = convex_hull
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
        let (min_y, max_y) = convex_hull
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
        let mut n = 0;
        for y in min_y as i64..=max_y as i64 {
            for x in min_x as i64..=max_x as i64 {
                if inside_hull(&convex_hull, Point::new(x as f64, y as f64)) {
                    n += 1;
                }
            }
        }
        n
    };
    let convex_perimeter = closed_length(&convex_hull);

    Ok(RegionGeometry {
        area,
        perimeter,
        contour,
        centroid,
        convex_hull,
        convex_area,
        convex_perimeter,
        region,
    })
}
