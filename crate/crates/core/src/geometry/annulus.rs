use crate::point::{interior_point, point_in_polygon, segments_intersect, signed_area, Point};

use super::GeometryError;

/// A planar domain bounded by two disjoint simple polygonal loops.
///
/// The outer loop is stored counter-clockwise and the inner loop clockwise, so
/// the domain is always on the left of both loops.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalAnnulus {
    outer: Vec<Point>,
    inner: Vec<Point>,
}

impl PolygonalAnnulus {
    /// Validates the loops and normalizes their orientation.
    pub fn new(mut outer: Vec<Point>, mut inner: Vec<Point>) -> Result<Self, GeometryError> {
        for (name, lp) in [("outer", &outer), ("inner", &inner)] {
            if lp.len() < 3 {
                return Err(GeometryError::InvalidAnnulus(format!("{name} loop has fewer than 3 points")));
            }
            if signed_area(lp).abs() == 0.0 {
                return Err(GeometryError::InvalidAnnulus(format!("{name} loop has zero area")));
            }
            if !is_simple(lp) {
                return Err(GeometryError::InvalidAnnulus(format!("{name} loop is not simple")));
            }
        }
        if signed_area(&outer) < 0.0 {
            outer.reverse();
        }
        if signed_area(&inner) > 0.0 {
            inner.reverse();
        }
        if !inner.iter().all(|&p| point_in_polygon(p, &outer)) {
            return Err(GeometryError::InvalidAnnulus("inner loop is not inside the outer loop".into()));
        }
        if loops_cross(&outer, &inner) {
            return Err(GeometryError::InvalidAnnulus("inner and outer loops intersect".into()));
        }
        Ok(PolygonalAnnulus { outer, inner })
    }

    /// Axis-aligned square annulus `[-outer, outer]^2 \ [-inner, inner]^2` centered at `center`.
    pub fn square(center: Point, outer_half: f64, inner_half: f64) -> Result<Self, GeometryError> {
        PolygonalAnnulus::new(square_loop(center, outer_half), square_loop(center, inner_half))
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn inner(&self) -> &[Point] {
        &self.inner
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.outer) + signed_area(&self.inner)
    }

    /// A point strictly inside the hole.
    pub fn hole_point(&self) -> Point {
        let ccw: Vec<Point> = self.inner.iter().rev().copied().collect();
        interior_point(&ccw)
    }

    /// True when `p` lies in the open region between the loops (boundary points excluded up to roundoff).
    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.outer) && !point_in_polygon(p, &self.inner)
    }
}

/// Counter-clockwise axis-aligned square.
pub fn square_loop(center: Point, half: f64) -> Vec<Point> {
    vec![
        Point::new(center.x - half, center.y - half),
        Point::new(center.x + half, center.y - half),
        Point::new(center.x + half, center.y + half),
        Point::new(center.x - half, center.y + half),
    ]
}

fn is_simple(lp: &[Point]) -> bool {
    let n = lp.len();
    for i in 0..n {
        let (a, b) = (lp[i], lp[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            // adjacent segments share an endpoint
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(a, b, lp[j], lp[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn loops_cross(a: &[Point], b: &[Point]) -> bool {
    let (n, m) = (a.len(), b.len());
    (0..n).any(|i| (0..m).any(|j| segments_intersect(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_is_normalized() {
        let outer: Vec<Point> = square_loop(Point::default(), 2.0).into_iter().rev().collect();
        let inner = square_loop(Point::default(), 1.0);
        let ann = PolygonalAnnulus::new(outer, inner).unwrap();
        assert!(signed_area(ann.outer()) > 0.0);
        assert!(signed_area(ann.inner()) < 0.0);
        assert_eq!(ann.area(), 12.0);
    }

    #[test]
    fn rejects_bad_loops() {
        let c = Point::default();
        assert!(PolygonalAnnulus::square(c, 1.0, 2.0).is_err());
        let bowtie = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(PolygonalAnnulus::new(square_loop(c, 3.0), bowtie).is_err());
        let shifted = square_loop(Point::new(1.5, 0.0), 1.0);
        assert!(PolygonalAnnulus::new(square_loop(c, 2.0), shifted).is_err());
    }

    #[test]
    fn hole_point_is_inside_hole() {
        let ann = PolygonalAnnulus::square(Point::new(3.0, -1.0), 2.0, 0.5).unwrap();
        let h = ann.hole_point();
        assert!(!ann.contains(h));
        assert!((h - Point::new(3.0, -1.0)).norm() < 0.5);
    }
}
