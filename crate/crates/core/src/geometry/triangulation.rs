use std::collections::HashMap;
use std::sync::OnceLock;

use crate::point::{diameter, orient, segment_distance, Point};

use super::locate::Locator;
use super::{GeometryError, PolygonalAnnulus};

/// Which boundary component (if any) a mesh vertex belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryLabel {
    Interior,
    /// Outer loop; carries potential 1 by default.
    E1,
    /// Inner loop; carries potential 0 by default.
    E2,
}

impl BoundaryLabel {
    pub fn code(self) -> u8 {
        match self {
            BoundaryLabel::Interior => 0,
            BoundaryLabel::E1 => 1,
            BoundaryLabel::E2 => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(BoundaryLabel::Interior),
            1 => Some(BoundaryLabel::E1),
            2 => Some(BoundaryLabel::E2),
            _ => None,
        }
    }

    pub fn is_boundary(self) -> bool {
        self != BoundaryLabel::Interior
    }
}

/// An undirected mesh edge with `v[0] < v[1]` and the triangles on either side
/// of the directed segment `v[0] -> v[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub v: [usize; 2],
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.left.is_none() || self.right.is_none()
    }

    pub fn other(&self, i: usize) -> usize {
        if self.v[0] == i {
            self.v[1]
        } else {
            self.v[0]
        }
    }
}

/// Validated planar triangulation with counter-clockwise triangles.
#[derive(Debug)]
pub struct Triangulation {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    labels: Vec<BoundaryLabel>,
    mesh_size: f64,
    domain: Option<PolygonalAnnulus>,
    edges: Vec<Edge>,
    /// `tri_edges[t][k]` is the edge joining corners `k` and `k+1`.
    tri_edges: Vec<[usize; 3]>,
    vertex_edges: Vec<Vec<usize>>,
    locator: OnceLock<Locator>,
}

/// Cosine threshold below which an angle counts as obtuse.
pub(crate) const OBTUSE_COS_TOL: f64 = -1e-10;

/// Checks conformity, V0 and boundary membership, and assigns labels.
///
/// With an annulus, boundary vertices on the outer loop become [`BoundaryLabel::E1`]
/// and those on the inner loop [`BoundaryLabel::E2`]. Without one the complex is
/// treated as a disk and every boundary vertex is labeled `E1`.
pub fn build_triangulation(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    annulus: Option<&PolygonalAnnulus>,
) -> Result<Triangulation, GeometryError> {
    let mesh = assemble(vertices, triangles, annulus.cloned())?;
    if let Some((t, angle)) = mesh.first_obtuse() {
        return Err(GeometryError::ObtuseTriangle { index: t, angle_deg: angle });
    }
    Ok(mesh)
}

/// Builds a triangulation from already-labeled parts, checking conformity and V0
/// but trusting the labels.
pub fn from_labeled_parts(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    labels: Vec<BoundaryLabel>,
    domain: Option<PolygonalAnnulus>,
) -> Result<Triangulation, GeometryError> {
    if labels.len() != vertices.len() {
        return Err(GeometryError::NonConformingMesh(format!(
            "{} labels for {} vertices",
            labels.len(),
            vertices.len()
        )));
    }
    let mut mesh = topology(vertices, triangles, domain)?;
    for e in &mesh.edges {
        if e.is_boundary() && (!labels[e.v[0]].is_boundary() || !labels[e.v[1]].is_boundary()) {
            let v = if labels[e.v[0]].is_boundary() { e.v[1] } else { e.v[0] };
            return Err(GeometryError::UnlabeledBoundaryVertex { vertex: v });
        }
    }
    mesh.labels = labels;
    if let Some((t, angle)) = mesh.first_obtuse() {
        return Err(GeometryError::ObtuseTriangle { index: t, angle_deg: angle });
    }
    Ok(mesh)
}

fn assemble(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    domain: Option<PolygonalAnnulus>,
) -> Result<Triangulation, GeometryError> {
    let mut mesh = topology(vertices, triangles, domain)?;
    mesh.labels = assign_labels(&mesh)?;
    if let Some(ann) = &mesh.domain {
        let area: f64 = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).sum();
        let target = ann.area();
        if (area - target).abs() > 1e-9 * target.abs() {
            return Err(GeometryError::NonConformingMesh(format!(
                "triangles cover area {area} but the annulus has area {target}"
            )));
        }
    }
    Ok(mesh)
}

fn topology(
    vertices: Vec<Point>,
    mut triangles: Vec<[usize; 3]>,
    domain: Option<PolygonalAnnulus>,
) -> Result<Triangulation, GeometryError> {
    let nv = vertices.len();
    let scale = diameter(&vertices).max(f64::MIN_POSITIVE);
    for (t, tri) in triangles.iter_mut().enumerate() {
        for &i in tri.iter() {
            if i >= nv {
                return Err(GeometryError::IndexOutOfRange { triangle: t, index: i });
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(GeometryError::NonConformingMesh(format!("triangle #{t} repeats a vertex")));
        }
        let o = orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if o.abs() <= 1e-14 * scale * scale {
            return Err(GeometryError::NonConformingMesh(format!("triangle #{t} is degenerate")));
        }
        if o < 0.0 {
            tri.swap(1, 2);
        }
    }

    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges: Vec<Edge> = Vec::new();
    let mut tri_edges = vec![[0usize; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let id = *index.entry(key).or_insert_with(|| {
                edges.push(Edge { v: [key.0, key.1], left: None, right: None });
                edges.len() - 1
            });
            let e = &mut edges[id];
            let slot = if a < b { &mut e.left } else { &mut e.right };
            if slot.is_some() {
                return Err(GeometryError::NonConformingMesh(format!(
                    "edge ({}, {}) is shared by more than two triangles or with inconsistent orientation",
                    key.0, key.1
                )));
            }
            *slot = Some(t);
            tri_edges[t][k] = id;
        }
    }

    let mut vertex_edges = vec![Vec::new(); nv];
    for (id, e) in edges.iter().enumerate() {
        vertex_edges[e.v[0]].push(id);
        vertex_edges[e.v[1]].push(id);
    }
    if let Some(v) = vertex_edges.iter().position(|l| l.is_empty()) {
        return Err(GeometryError::NonConformingMesh(format!("vertex {v} belongs to no triangle")));
    }
    for (v, list) in vertex_edges.iter().enumerate() {
        let nb = list.iter().filter(|&&e| edges[e].is_boundary()).count();
        if nb != 0 && nb != 2 {
            return Err(GeometryError::NonConformingMesh(format!(
                "vertex {v} has {nb} boundary edges (pinched boundary)"
            )));
        }
    }

    let mesh_size = edges
        .iter()
        .map(|e| vertices[e.v[0]].dist(vertices[e.v[1]]))
        .fold(0.0, f64::max);

    let mesh = Triangulation {
        labels: vec![BoundaryLabel::Interior; nv],
        vertices,
        triangles,
        mesh_size,
        domain,
        edges,
        tri_edges,
        vertex_edges,
        locator: OnceLock::new(),
    };
    mesh.check_hanging_vertices()?;
    Ok(mesh)
}

fn assign_labels(mesh: &Triangulation) -> Result<Vec<BoundaryLabel>, GeometryError> {
    let mut labels = vec![BoundaryLabel::Interior; mesh.vertices.len()];
    let tol = 1e-9 * mesh.mesh_size.max(f64::MIN_POSITIVE);
    let on_loop = |p: Point, lp: &[Point]| {
        let n = lp.len();
        (0..n).any(|k| segment_distance(p, lp[k], lp[(k + 1) % n]) <= tol)
    };
    for e in mesh.edges.iter().filter(|e| e.is_boundary()) {
        for &v in &e.v {
            let p = mesh.vertices[v];
            labels[v] = match &mesh.domain {
                None => BoundaryLabel::E1,
                Some(ann) => {
                    if on_loop(p, ann.outer()) {
                        BoundaryLabel::E1
                    } else if on_loop(p, ann.inner()) {
                        BoundaryLabel::E2
                    } else {
                        return Err(GeometryError::UnlabeledBoundaryVertex { vertex: v });
                    }
                }
            };
        }
        if let Some(ann) = &mesh.domain {
            let mid = mesh.vertices[e.v[0]].midpoint(mesh.vertices[e.v[1]]);
            let lp = if labels[e.v[0]] == BoundaryLabel::E1 { ann.outer() } else { ann.inner() };
            if labels[e.v[0]] != labels[e.v[1]] || !on_loop(mid, lp) {
                return Err(GeometryError::NonConformingMesh(format!(
                    "boundary edge ({}, {}) does not lie on an annulus loop",
                    e.v[0], e.v[1]
                )));
            }
        }
    }
    Ok(labels)
}

impl Triangulation {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn labels(&self) -> &[BoundaryLabel] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> BoundaryLabel {
        self.labels[i]
    }

    /// Longest edge over all triangles.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn domain(&self) -> Option<&PolygonalAnnulus> {
        self.domain.as_ref()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn vertex_edges(&self, i: usize) -> &[usize] {
        &self.vertex_edges[i]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.vertex_edges[a].iter().copied().find(|&e| self.edges[e].other(a) == b)
    }

    pub fn edge_length(&self, id: usize) -> f64 {
        let e = &self.edges[id];
        self.vertices[e.v[0]].dist(self.vertices[e.v[1]])
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * orient(a, b, c)
    }

    /// Vertex ids adjacent to `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertex_edges[i].iter().map(move |&e| self.edges[e].other(i))
    }

    pub fn is_boundary_vertex(&self, i: usize) -> bool {
        self.labels[i].is_boundary()
    }

    /// Triangles around vertex `i`, counter-clockwise. For a boundary vertex the
    /// fan starts at the triangle that follows the boundary edge in CCW order.
    pub fn vertex_fan(&self, i: usize) -> Vec<usize> {
        // successor of a triangle (i, a, b) around i is the triangle across edge (i, b)
        let mut start = None;
        let mut any = None;
        for &e in &self.vertex_edges[i] {
            let edge = &self.edges[e];
            for t in [edge.left, edge.right].into_iter().flatten() {
                any.get_or_insert(t);
                // the triangle whose "incoming" edge (i, a) is a boundary edge starts the fan
                let a = self.fan_incoming(i, t);
                if a == edge.other(i) && edge.is_boundary() {
                    start = Some(t);
                }
            }
        }
        let first = start.or(any).expect("vertex without triangles");
        let mut fan = vec![first];
        let mut t = first;
        loop {
            let b = self.fan_outgoing(i, t);
            let e = self.edge_between(i, b).expect("fan edge");
            let edge = &self.edges[e];
            let next = if edge.left == Some(t) { edge.right } else { edge.left };
            match next {
                Some(n) if n != first => {
                    fan.push(n);
                    t = n;
                }
                _ => break,
            }
        }
        fan
    }

    /// For triangle t = (i, a, b) in CCW order, returns a.
    pub(crate) fn fan_incoming(&self, i: usize, t: usize) -> usize {
        let tri = self.triangles[t];
        let k = tri.iter().position(|&v| v == i).expect("vertex not in triangle");
        tri[(k + 1) % 3]
    }

    /// For triangle t = (i, a, b) in CCW order, returns b.
    pub(crate) fn fan_outgoing(&self, i: usize, t: usize) -> usize {
        let tri = self.triangles[t];
        let k = tri.iter().position(|&v| v == i).expect("vertex not in triangle");
        tri[(k + 2) % 3]
    }

    /// Largest angle (degrees) of the first obtuse triangle, if any.
    pub(crate) fn first_obtuse(&self) -> Option<(usize, f64)> {
        (0..self.triangles.len()).find_map(|t| {
            let (cos_min, deg) = max_angle(self.corners(t));
            (cos_min < OBTUSE_COS_TOL).then_some((t, deg))
        })
    }

    pub(crate) fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// Triangle containing `p` with its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locator().locate(self, p)
    }

    fn check_hanging_vertices(&self) -> Result<(), GeometryError> {
        // a vertex strictly inside a boundary edge means a partial-edge overlap
        let grid = super::locate::PointGrid::new(&self.vertices, self.mesh_size.max(f64::MIN_POSITIVE));
        let tol = 1e-10 * self.mesh_size;
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
            for v in grid.near_segment(a, b) {
                if v == e.v[0] || v == e.v[1] {
                    continue;
                }
                let p = self.vertices[v];
                if segment_distance(p, a, b) <= tol {
                    return Err(GeometryError::NonConformingMesh(format!(
                        "vertex {v} lies inside edge ({}, {})",
                        e.v[0], e.v[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// (cosine of the largest angle, largest angle in degrees)
pub(crate) fn max_angle(c: [Point; 3]) -> (f64, f64) {
    let mut worst = f64::INFINITY;
    for k in 0..3 {
        let (p, q, r) = (c[k], c[(k + 1) % 3], c[(k + 2) % 3]);
        let (u, v) = (q - p, r - p);
        let cos = u.dot(v) / (u.norm() * v.norm());
        worst = worst.min(cos);
    }
    (worst, worst.clamp(-1.0, 1.0).acos().to_degrees())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::annulus::square_loop;

    fn unit_square() -> (Vec<Point>, Vec<[usize; 3]>) {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        (v, vec![[0, 1, 2], [0, 2, 3]])
    }

    #[test]
    fn unit_square_two_triangles() {
        let (v, t) = unit_square();
        let m = build_triangulation(v, t, None).unwrap();
        assert_eq!(m.mesh_size(), 2f64.sqrt());
        assert_eq!(m.edges().len(), 5);
        assert!(m.labels().iter().all(|&l| l == BoundaryLabel::E1));
    }

    #[test]
    fn obtuse_triangle_rejected() {
        // apex angle of exactly 100 degrees
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.5 / 50f64.to_radians().tan())];
        let err = build_triangulation(v, vec![[0, 1, 2]], None).unwrap_err();
        match err {
            GeometryError::ObtuseTriangle { index, angle_deg } => {
                assert_eq!(index, 0);
                assert!((angle_deg - 100.0).abs() < 1e-9);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn orientation_is_fixed_up() {
        let (v, _) = unit_square();
        let m = build_triangulation(v, vec![[0, 2, 1], [0, 3, 2]], None).unwrap();
        assert!((0..2).all(|t| m.triangle_area(t) > 0.0));
    }

    #[test]
    fn overshared_edge_rejected() {
        let mut v = unit_square().0;
        v.push(Point::new(0.5, -0.2));
        let t = vec![[0, 1, 2], [0, 2, 3], [0, 2, 4]];
        assert!(matches!(build_triangulation(v, t, None), Err(GeometryError::NonConformingMesh(_))));
    }

    #[test]
    fn hanging_vertex_rejected() {
        // vertex 4 sits on the diagonal of the left triangle but only the right side uses it
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 0.0),
        ];
        let t = vec![[0, 4, 3], [4, 2, 3], [4, 1, 2]];
        assert!(build_triangulation(v.clone(), t, None).is_ok());
        let bad = vec![[0, 1, 3], [4, 2, 3], [4, 1, 2]];
        assert!(build_triangulation(v, bad, None).is_err());
    }

    #[test]
    fn square_ring_of_sixteen_triangles() {
        let (m, _) = ring16();
        assert_eq!(m.num_triangles(), 16);
        assert_eq!(m.num_vertices(), 16);
        for (i, p) in m.vertices().iter().enumerate() {
            let expect = if p.x.abs().max(p.y.abs()) == 2.0 { BoundaryLabel::E1 } else { BoundaryLabel::E2 };
            assert_eq!(m.label(i), expect, "vertex {i} at {p:?}");
        }
        assert_eq!(m.mesh_size(), 2.0);
    }

    /// Hand-enumerated ring mesh of [-2,2]^2 \ (-1,1)^2: corners and side midpoints of
    /// both squares, 4 triangles per side.
    pub(crate) fn ring16() -> (Triangulation, PolygonalAnnulus) {
        let c = Point::default();
        let ann = PolygonalAnnulus::new(square_loop(c, 2.0), square_loop(c, 1.0)).unwrap();
        let mut v = Vec::new();
        // outer ring: 8 points CCW starting at (-2,-2); inner ring likewise
        let ring = |s: f64| {
            vec![
                Point::new(-s, -s),
                Point::new(0.0, -s),
                Point::new(s, -s),
                Point::new(s, 0.0),
                Point::new(s, s),
                Point::new(0.0, s),
                Point::new(-s, s),
                Point::new(-s, 0.0),
            ]
        };
        v.extend(ring(2.0));
        v.extend(ring(1.0));
        let mut t = Vec::new();
        for k in 0..8 {
            let (o0, o1) = (k, (k + 1) % 8);
            let (i0, i1) = (8 + k, 8 + (k + 1) % 8);
            if k % 2 == 0 {
                // outer corner -> outer midpoint, inner corner is the right-angle apex
                t.push([o0, o1, i0]);
                t.push([i0, o1, i1]);
            } else {
                t.push([o0, i1, i0]);
                t.push([o0, o1, i1]);
            }
        }
        (build_triangulation(v, t, Some(&ann)).unwrap(), ann)
    }

    #[test]
    fn fan_is_ordered_ccw() {
        let (m, _) = ring16();
        for i in 0..m.num_vertices() {
            let fan = m.vertex_fan(i);
            for w in fan.windows(2) {
                let b = m.fan_outgoing(i, w[0]);
                assert_eq!(m.fan_incoming(i, w[1]), b);
            }
        }
    }
}
