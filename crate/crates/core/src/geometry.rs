//! Planar convex polygon helpers.
//!
//! Polygons are stored as counter-clockwise vertex lists without collinear
//! points. Degenerate inputs collapse to a segment (two vertices) or a single
//! point, and every query below handles those shapes as well.

use nalgebra::Vector2;

pub type Point = Vector2<f64>;

#[inline]
pub fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counter-clockwise perpendicular.
#[inline]
pub fn perp(v: &Point) -> Point {
    Point::new(-v.y, v.x)
}

/// Closest point to `p` on the segment `[a, b]`.
pub fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

/// Andrew's monotone chain. Collinear points on the hull boundary are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a == b);
    if pts.len() <= 2 {
        return pts;
    }

    let scale = pts.iter().fold(0.0_f64, |m, p| m.max(p.x.abs()).max(p.y.abs())).max(f64::MIN_POSITIVE);
    let eps = 1e-13 * scale * scale;

    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&(hull[hull.len() - 1] - hull[hull.len() - 2]), &(p - hull[hull.len() - 2])) <= eps {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&(hull[hull.len() - 1] - hull[hull.len() - 2]), &(p - hull[hull.len() - 2])) <= eps {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    if hull.len() < 2 {
        // Every point collinear and merged: keep the two extremes.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn hull(points: &[Point]) -> Self {
        Self {
            vertices: convex_hull(points),
        }
    }

    pub fn point(p: Point) -> Self {
        Self { vertices: vec![p] }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs in counter-clockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        let count = match n {
            0 | 1 => 0,
            2 => 1,
            _ => n,
        };
        (0..count).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    pub fn translated(&self, offset: &Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
        }
    }

    pub fn minkowski_sum(&self, other: &ConvexPolygon) -> Self {
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(a + b);
            }
        }
        Self::hull(&pts)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Point::zeros(), |acc, v| acc + v) / n
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => (p - self.vertices[0]).norm() <= tol,
            2 => (p - closest_on_segment(p, &self.vertices[0], &self.vertices[1])).norm() <= tol,
            _ => self.edges().all(|(a, b)| {
                let e = b - a;
                let len = e.norm();
                cross(&e, &(p - a)) >= -tol * len
            }),
        }
    }

    /// Euclidean projection onto the polygon (the point itself when inside).
    pub fn closest_point(&self, p: &Point) -> Point {
        match self.vertices.len() {
            0 => *p,
            1 => self.vertices[0],
            2 => closest_on_segment(p, &self.vertices[0], &self.vertices[1]),
            _ => {
                if self.contains(p, 0.0) {
                    return *p;
                }
                let mut best = self.vertices[0];
                let mut best_d = f64::INFINITY;
                for (a, b) in self.edges() {
                    let c = closest_on_segment(p, &a, &b);
                    let d = (p - c).norm_squared();
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            }
        }
    }

    pub fn distance_sq(&self, p: &Point) -> f64 {
        (p - self.closest_point(p)).norm_squared()
    }

    /// Parameter `t >= 0` where the ray `origin + t * dir` leaves the polygon,
    /// together with the outward normal of the face it crosses. `origin` must
    /// lie inside the polygon.
    pub fn ray_exit(&self, origin: &Point, dir: &Point) -> Option<(f64, Point)> {
        let dnorm = dir.norm();
        if dnorm == 0.0 || self.vertices.is_empty() {
            return None;
        }
        match self.vertices.len() {
            1 => None,
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                // Segment: exit at the endpoint reached along `dir`.
                let end = if (b - a).dot(dir) >= 0.0 { b } else { a };
                let t = (end - origin).dot(dir) / (dnorm * dnorm);
                Some((t.max(0.0), dir / dnorm))
            }
            _ => {
                let mut best: Option<(f64, Point)> = None;
                for (a, b) in self.edges() {
                    let e = b - a;
                    let n = Point::new(e.y, -e.x) / e.norm();
                    let rate = n.dot(dir);
                    if rate <= 0.0 {
                        continue;
                    }
                    let t = (n.dot(&a) - n.dot(origin)) / rate;
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t.max(0.0), n));
                    }
                }
                best
            }
        }
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}
