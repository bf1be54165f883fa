use super::triangulation::{max_angle, OBTUSE_COS_TOL};
use super::voronoi::circumcenter;
use super::Triangulation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityTolerances {
    /// Largest admissible vertex valence (V1).
    pub max_neighbors: usize,
    /// Largest admissible relative midpoint offset (V2).
    pub v2_offset: f64,
}

impl Default for QualityTolerances {
    fn default() -> Self {
        QualityTolerances { max_neighbors: 10, v2_offset: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshQualityReport {
    /// max over triangles of longest edge / incircle diameter
    pub tau: f64,
    pub nonobtuse: bool,
    pub obtuse_triangles: Vec<usize>,
    pub max_neighbors: usize,
    pub v2_max_offset: f64,
    pub v1_ok: bool,
    pub v2_ok: bool,
}

impl MeshQualityReport {
    pub fn all_ok(&self) -> bool {
        self.nonobtuse && self.v1_ok && self.v2_ok
    }
}

pub fn validate_mesh(t: &Triangulation) -> MeshQualityReport {
    validate_mesh_with(t, QualityTolerances::default())
}

pub fn validate_mesh_with(t: &Triangulation, tol: QualityTolerances) -> MeshQualityReport {
    let mut tau: f64 = 0.0;
    let mut obtuse = Vec::new();
    for k in 0..t.num_triangles() {
        let c = t.corners(k);
        let (ab, bc, ca) = (c[0].dist(c[1]), c[1].dist(c[2]), c[2].dist(c[0]));
        let incircle = 4.0 * t.triangle_area(k) / (ab + bc + ca);
        tau = tau.max(ab.max(bc).max(ca) / incircle);
        if max_angle(c).0 < OBTUSE_COS_TOL {
            obtuse.push(k);
        }
    }
    let max_neighbors = (0..t.num_vertices()).map(|i| t.vertex_edges(i).len()).max().unwrap_or(0);

    let centers: Vec<_> = (0..t.num_triangles()).map(|k| circumcenter(t.corners(k))).collect();
    let mut v2: f64 = 0.0;
    for e in t.edges() {
        let (Some(l), Some(r)) = (e.left, e.right) else { continue };
        let (Some(cl), Some(cr)) = (centers[l], centers[r]) else {
            v2 = f64::INFINITY;
            continue;
        };
        let x = t.vertex(e.v[0]).midpoint(t.vertex(e.v[1]));
        let off = x.dist(cl.midpoint(cr));
        let m = cl.dist(cr);
        let rel = if m > 1e-12 * t.mesh_size() {
            off / m
        } else if off <= 1e-12 * t.mesh_size() {
            0.0
        } else {
            f64::INFINITY
        };
        v2 = v2.max(rel);
    }
    MeshQualityReport {
        tau,
        nonobtuse: obtuse.is_empty(),
        obtuse_triangles: obtuse,
        max_neighbors,
        v2_max_offset: v2,
        v1_ok: max_neighbors <= tol.max_neighbors,
        v2_ok: v2 <= tol.v2_offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_lattice_annulus, refine, PolygonalAnnulus};
    use crate::point::Point;

    #[test]
    fn equilateral_tau() {
        let h = 3f64.sqrt() / 2.0;
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, h)];
        let m = crate::geometry::build_triangulation(v, vec![[0, 1, 2]], None).unwrap();
        let q = validate_mesh(&m);
        // incircle diameter s/sqrt(3)
        assert!((q.tau - 3f64.sqrt()).abs() < 1e-14);
        assert!(q.nonobtuse);
    }

    #[test]
    fn lattice_is_invariant_under_refinement() {
        let ann = PolygonalAnnulus::square(Point::default(), 2.0, 1.0).unwrap();
        let m0 = generate_lattice_annulus(&ann, 1.0, 0).unwrap();
        let m1 = refine(&m0).unwrap();
        let (q0, q1) = (validate_mesh(&m0), validate_mesh(&m1));
        assert!((q0.tau - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((q0.tau - q1.tau).abs() < 1e-12);
        assert!(q0.all_ok() && q1.all_ok());
        assert!(q0.v2_max_offset <= 1e-12);
    }
}
