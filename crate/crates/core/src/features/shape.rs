//! The 41 shape descriptors of a region.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::imaging::{Point, RegionGeometry};

use super::registry::SHAPE_COUNT;

/// Samples of the resampled centroid-distance signature.
const SIGNATURE_LEN: usize = 64;

fn degenerate(slot: &'static str, reason: impl Into<String>) -> Error {
    Error::DegenerateShape {
        slot,
        reason: reason.into(),
    }
}

/// Central moments `mu_pq` for p + q <= 3, indexed `[p][q]`.
fn central_moments(geom: &RegionGeometry) -> [[f64; 4]; 4] {
    let c = geom.centroid;
    let mut mu = [[0.0; 4]; 4];
    for (x, y) in geom.region.foreground() {
        let dx = x as f64 - c.x;
        let dy = y as f64 - c.y;
        let xp = [1.0, dx, dx * dx, dx * dx * dx];
        let yp = [1.0, dy, dy * dy, dy * dy * dy];
        for p in 0..4 {
            for q in 0..4 - p {
                mu[p][q] += xp[p] * yp[q];
            }
        }
    }
    mu
}

/// The seven Hu invariants from scale-normalized central moments.
pub fn hu_moments(mu: &[[f64; 4]; 4]) -> [f64; 7] {
    let m00 = mu[0][0];
    let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));
    let a = n30 + n12;
    let b = n21 + n03;
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2),
        a * a + b * b,
        (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b) + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b) - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b),
    ]
}

/// Maximum and minimum caliper width of a convex polygon.
fn feret(hull: &[Point]) -> (f64, f64) {
    let max = hull
        .iter()
        .enumerate()
        .flat_map(|(i, a)| hull[i + 1..].iter().map(move |b| a.dist(*b)))
        .fold(0.0, f64::max);
    if hull.len() < 3 {
        return (max, 0.0);
    }
    let min = hull
        .iter()
        .zip(hull.iter().cycle().skip(1))
        .map(|(a, b)| {
            let len = a.dist(*b);
            hull.iter()
                .map(|p| ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)).abs() / len)
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Closed polygon resampled to `n` points equally spaced in arc length.
fn resample_closed(pts: &[Point], n: usize) -> Vec<Point> {
    let m = pts.len();
    let seg: Vec<f64> = (0..m).map(|i| pts[i].dist(pts[(i + 1) % m])).collect();
    let total: f64 = seg.iter().sum();
    let mut out = Vec::with_capacity(n);
    let (mut i, mut acc) = (0usize, 0.0);
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while i < m - 1 && acc + seg[i] < target {
            acc += seg[i];
            i += 1;
        }
        let (a, b) = (pts[i], pts[(i + 1) % m]);
        let t = if seg[i] > 0.0 { ((target - acc) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
        out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
    out
}

/// `|F_k| / |F_0|` for k = 1..=10 of the centroid-distance signature.
fn fourier_descriptors(contour: &[Point], centroid: Point) -> Result<[f64; 10]> {
    if contour.len() < 3 {
        return Err(degenerate("fd1", "contour has fewer than 3 points"));
    }
    let sig: Vec<f64> = resample_closed(contour, SIGNATURE_LEN)
        .into_iter()
        .map(|p| p.dist(centroid))
        .collect();
    let n = sig.len() as f64;
    let f0: f64 = sig.iter().sum::<f64>();
    if f0 <= 0.0 {
        return Err(degenerate("fd1", "zero mean radius"));
    }
    let mut fd = [0.0; 10];
    for (k, slot) in fd.iter_mut().enumerate() {
        let w = 2.0 * PI * (k + 1) as f64 / n;
        let (re, im) = sig.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &s)| {
            let a = w * t as f64;
            (re + s * a.cos(), im - s * a.sin())
        });
        *slot = re.hypot(im) / f0;
    }
    Ok(fd)
}

/// Compute the shape slots in registry order.
pub fn extract_shape(geom: &RegionGeometry) -> Result<Vec<f64>> {
    let area = geom.area as f64;
    let mu = central_moments(geom);
    let (a, b, c) = (mu[2][0] / area, mu[1][1] / area, mu[0][2] / area);
    let half_gap = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let l1 = (a + c) / 2.0 + half_gap;
    let l2 = ((a + c) / 2.0 - half_gap).max(0.0);
    let major = 4.0 * l1.sqrt();
    let minor = 4.0 * l2.sqrt();
    if minor <= 1e-9 {
        return Err(degenerate("minor axis", "region has no extent across its main axis"));
    }
    let perimeter = geom.perimeter;
    if perimeter <= 0.0 {
        return Err(degenerate("perimeter", "region has no boundary length"));
    }
    let convex_perimeter = geom.convex_perimeter;
    let (max_feret, min_feret) = feret(&geom.convex_hull);
    if min_feret <= 0.0 {
        return Err(degenerate("min feret", "convex hull is flat"));
    }
    let radii: Vec<f64> = geom.contour.iter().map(|p| p.dist(geom.centroid)).collect();
    let max_r = radii.iter().copied().fold(0.0, f64::max);
    let min_r = radii.iter().copied().fold(f64::INFINITY, f64::min);
    if max_r <= 0.0 {
        return Err(degenerate("max r", "contour collapses onto the centroid"));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (u32::MAX, 0, u32::MAX, 0);
    for (x, y) in geom.region.foreground() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let bbox_area = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;

    let mut out = vec![
        area,
        perimeter,
        geom.convex_area as f64,
        convex_perimeter,
        major,
        minor,
        (4.0 * area / PI).sqrt(),
        (1.0 - l2 / l1).max(0.0).sqrt(),
        1.0 - minor / major,
        major / minor,
        4.0 * PI * area / (perimeter * perimeter),
        4.0 * area / (PI * major * major),
        perimeter * perimeter / area,
        area / geom.convex_area as f64,
        area / bbox_area,
        4.0 * PI * area / (convex_perimeter * convex_perimeter),
        min_r / max_r,
        2.0 * min_r / max_feret,
        convex_perimeter / (PI * max_feret),
        area / (major * minor),
        max_feret,
        min_feret,
        max_r,
        min_r,
    ];
    out.extend(hu_moments(&mu));
    out.extend(fourier_descriptors(&geom.contour, geom.centroid)?);
    debug_assert_eq!(out.len(), SHAPE_COUNT);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::registry::SHAPE_NAMES;
    use crate::imaging::{extract_geometry, Mask};

    fn slot(values: &[f64], name: &str) -> f64 {
        values[SHAPE_NAMES.iter().position(|n| *n == name).unwrap()]
    }

    fn disk(side: u32, r: f64) -> Mask {
        let c = (side as f64 - 1.0) / 2.0;
        Mask::from_fn(side, side, |x, y| {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn disk_is_round() {
        let f = extract_shape(&extract_geometry(&disk(45, 20.0)).unwrap()).unwrap();
        assert!(slot(&f, "circularity") >= 0.95, "{}", slot(&f, "circularity"));
        assert!(slot(&f, "elongation") <= 0.05);
        assert!(slot(&f, "aspect ratio") <= 1.05);
        assert!(slot(&f, "fd1") < 0.05);
        assert!(slot(&f, "solidity") > 0.95 && slot(&f, "solidity") <= 1.0);
        assert!((slot(&f, "max feret") - 40.0).abs() < 1.0);
        assert!((slot(&f, "min feret") - 40.0).abs() < 1.5);
    }

    #[test]
    fn rectangle_aspect() {
        let m = Mask::from_fn(50, 20, |x, y| (5..45).contains(&x) && (5..15).contains(&y));
        let f = extract_shape(&extract_geometry(&m).unwrap()).unwrap();
        let ar = slot(&f, "aspect ratio");
        assert!((ar - 4.0).abs() / 4.0 < 0.1, "aspect ratio {ar}");
        assert_eq!(slot(&f, "extent"), 1.0);
        assert!((slot(&f, "max feret") - (39f64.hypot(9.0))).abs() < 1e-9);
        assert!((slot(&f, "min feret") - 9.0).abs() < 1e-9);
    }

    #[test]
    fn line_is_degenerate() {
        let m = Mask::from_fn(10, 3, |_, y| y == 1);
        let err = extract_shape(&extract_geometry(&m).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateShape { slot: "minor axis", .. }));
    }

    #[test]
    fn hu_rotation_invariant() {
        let m = Mask::from_fn(30, 24, |x, y| {
            let (dx, dy) = (x as f64 - 12.0, y as f64 - 11.0);
            dx * dx / 100.0 + dy * dy / 36.0 <= 1.0 || (x > 18 && x < 26 && y > 4 && y < 9)
        });
        let g0 = extract_geometry(&m).unwrap();
        let g1 = extract_geometry(&m.rotate90()).unwrap();
        let h0 = hu_moments(&central_moments(&g0));
        let h1 = hu_moments(&central_moments(&g1));
        for (a, b) in h0.iter().zip(&h1) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12), "{a} vs {b}");
        }
    }
}
