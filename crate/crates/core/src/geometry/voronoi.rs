use std::sync::Arc;

use crate::point::{orient, Point};

use super::{GeometryError, Triangulation};

/// Dual segment of one primal edge.
///
/// Walking from `from` to `to` crosses the primal edge `v[0] -> v[1]` from its
/// right side to its left side, so `v[1]` is on the right of the walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEdge {
    pub primal: usize,
    pub from: usize,
    pub to: usize,
    /// Length of the dual segment.
    pub m: f64,
    /// Length of the primal edge.
    pub d: f64,
    /// Midpoint of the primal edge, where the bisector crosses it.
    pub x: Point,
}

/// Circumcentric control volumes of a nonobtuse triangulation.
///
/// Voronoi vertices `0..T` are triangle circumcenters; vertices `T..` are clip
/// points (midpoints of boundary edges) that close the boundary cells.
#[derive(Debug)]
pub struct VoronoiDiagram {
    mesh: Arc<Triangulation>,
    points: Vec<Point>,
    /// primal boundary edge of each clip point
    clip_edge: Vec<usize>,
    /// clip point of each primal edge, if it is a boundary edge
    edge_clip: Vec<Option<usize>>,
    duals: Vec<DualEdge>,
    /// dual edges (= primal edge ids) incident to each Voronoi vertex
    incident: Vec<Vec<usize>>,
    cells: Vec<Vec<usize>>,
    areas: Vec<f64>,
    lambda_i: Vec<f64>,
    lambda: f64,
}

pub fn build_voronoi(mesh: Arc<Triangulation>) -> Result<VoronoiDiagram, GeometryError> {
    if let Some((t, angle)) = mesh.first_obtuse() {
        return Err(GeometryError::ObtuseTriangle { index: t, angle_deg: angle });
    }
    let nt = mesh.num_triangles();
    let mut points = Vec::with_capacity(nt);
    for t in 0..nt {
        points.push(circumcenter(mesh.corners(t)).ok_or(GeometryError::NumericallyDegenerate { triangle: t })?);
    }

    let mut clip_edge = Vec::new();
    let mut edge_clip = vec![None; mesh.edges().len()];
    for (id, e) in mesh.edges().iter().enumerate() {
        if e.is_boundary() {
            edge_clip[id] = Some(nt + clip_edge.len());
            clip_edge.push(id);
            points.push(mesh.vertex(e.v[0]).midpoint(mesh.vertex(e.v[1])));
        }
    }

    let mut duals = Vec::with_capacity(mesh.edges().len());
    let mut incident = vec![Vec::new(); points.len()];
    for (id, e) in mesh.edges().iter().enumerate() {
        let side = |t: Option<usize>| t.or(edge_clip[id]).expect("edge with no side");
        let (from, to) = (side(e.right), side(e.left));
        let (a, b) = (mesh.vertex(e.v[0]), mesh.vertex(e.v[1]));
        duals.push(DualEdge { primal: id, from, to, m: points[from].dist(points[to]), d: a.dist(b), x: a.midpoint(b) });
        incident[from].push(id);
        incident[to].push(id);
    }

    let nv = mesh.num_vertices();
    let mut cells = Vec::with_capacity(nv);
    let mut areas = vec![0.0; nv];
    for i in 0..nv {
        let fan = mesh.vertex_fan(i);
        let mut cell = Vec::with_capacity(fan.len() + 2);
        if mesh.is_boundary_vertex(i) {
            let a = mesh.fan_incoming(i, fan[0]);
            cell.push(edge_clip[mesh.edge_between(i, a).unwrap()].expect("boundary fan start"));
        }
        cell.extend(fan.iter().copied());
        if mesh.is_boundary_vertex(i) {
            let b = mesh.fan_outgoing(i, *fan.last().unwrap());
            cell.push(edge_clip[mesh.edge_between(i, b).unwrap()].expect("boundary fan end"));
        }
        let xi = mesh.vertex(i);
        for &t in &fan {
            let (a, b) = (mesh.vertex(mesh.fan_incoming(i, t)), mesh.vertex(mesh.fan_outgoing(i, t)));
            let (ma, mb, c) = (xi.midpoint(a), xi.midpoint(b), points[t]);
            areas[i] += 0.5 * (orient(xi, ma, c) + orient(xi, c, mb));
        }
        cells.push(cell);
    }

    let lambda_i: Vec<f64> = (0..nv)
        .map(|i| mesh.vertex_edges(i).iter().map(|&e| duals[e].m).fold(0.0, f64::max).sqrt())
        .collect();
    let lambda = lambda_i.iter().copied().fold(0.0, f64::max);

    Ok(VoronoiDiagram { mesh, points, clip_edge, edge_clip, duals, incident, cells, areas, lambda_i, lambda })
}

/// Circumcenter by a pivoted 2x2 solve; `None` if the system is numerically singular.
pub(crate) fn circumcenter(c: [Point; 3]) -> Option<Point> {
    let (b, d) = (c[1] - c[0], c[2] - c[0]);
    let scale = b.norm().max(d.norm()).max((c[2] - c[1]).norm());
    // rows: 2 b . u = |b|^2, 2 d . u = |d|^2
    let mut rows = [[2.0 * b.x, 2.0 * b.y, b.norm_sq()], [2.0 * d.x, 2.0 * d.y, d.norm_sq()]];
    if rows[1][0].abs() > rows[0][0].abs() {
        rows.swap(0, 1);
    }
    let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    if det.abs() < 1e-14 * scale * scale || rows[0][0] == 0.0 {
        return None;
    }
    let f = rows[1][0] / rows[0][0];
    let y = (rows[1][2] - f * rows[0][2]) / (rows[1][1] - f * rows[0][1]);
    let x = (rows[0][2] - rows[0][1] * y) / rows[0][0];
    Some(c[0] + Point::new(x, y))
}

impl VoronoiDiagram {
    pub fn mesh(&self) -> &Arc<Triangulation> {
        &self.mesh
    }

    /// All Voronoi vertices: circumcenters first, then clip points.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, w: usize) -> Point {
        self.points[w]
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn is_clip_point(&self, w: usize) -> bool {
        w >= self.mesh.num_triangles()
    }

    /// Primal boundary edge closed off by a clip point.
    pub fn clip_edge(&self, w: usize) -> Option<usize> {
        w.checked_sub(self.mesh.num_triangles()).map(|k| self.clip_edge[k])
    }

    pub fn edge_clip(&self, edge: usize) -> Option<usize> {
        self.edge_clip[edge]
    }

    pub fn circumcenter(&self, t: usize) -> Point {
        self.points[t]
    }

    /// Dual data indexed by primal edge id.
    pub fn duals(&self) -> &[DualEdge] {
        &self.duals
    }

    pub fn dual(&self, edge: usize) -> &DualEdge {
        &self.duals[edge]
    }

    /// Dual edges touching Voronoi vertex `w`.
    pub fn incident(&self, w: usize) -> &[usize] {
        &self.incident[w]
    }

    /// Dual edge joining two Voronoi vertices, if any. Ambiguous only for
    /// repeated circumcenters of right triangles, where the first match wins.
    pub fn dual_between(&self, a: usize, b: usize) -> Option<usize> {
        self.incident[a].iter().copied().find(|&e| {
            let d = &self.duals[e];
            (d.from == a && d.to == b) || (d.from == b && d.to == a)
        })
    }

    /// Voronoi vertices of cell `i` in counter-clockwise order. Boundary cells
    /// start and end with clip points; the cell is closed through the mesh vertex.
    pub fn cell(&self, i: usize) -> &[usize] {
        &self.cells[i]
    }

    /// Cell outline as points, including the mesh vertex for boundary cells.
    pub fn cell_polygon(&self, i: usize) -> Vec<Point> {
        let mut poly: Vec<Point> = self.cells[i].iter().map(|&w| self.points[w]).collect();
        if self.mesh.is_boundary_vertex(i) {
            poly.push(self.mesh.vertex(i));
        }
        poly
    }

    pub fn cell_area(&self, i: usize) -> f64 {
        self.areas[i]
    }

    pub fn cell_areas(&self) -> &[f64] {
        &self.areas
    }

    /// Square root of the longest dual segment around cell `i`.
    pub fn lambda_i(&self, i: usize) -> f64 {
        self.lambda_i[i]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Relative distance of the edge midpoint from the middle of its dual
    /// segment; 0 for zero-length duals that pass through the midpoint.
    pub fn v2_offset(&self, edge: usize) -> f64 {
        let d = &self.duals[edge];
        let off = d.x.dist(self.points[d.from].midpoint(self.points[d.to]));
        if d.m > 1e-12 * d.d {
            off / d.m
        } else if off <= 1e-12 * self.mesh.mesh_size() {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_triangulation;

    fn two_equilateral() -> VoronoiDiagram {
        let h = 3f64.sqrt() / 2.0;
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, h), Point::new(0.5, -h)];
        let m = build_triangulation(v, vec![[0, 1, 2], [0, 3, 1]], None).unwrap();
        build_voronoi(Arc::new(m)).unwrap()
    }

    #[test]
    fn shared_edge_of_two_equilateral_triangles() {
        let vd = two_equilateral();
        let e = vd.mesh().edge_between(0, 1).unwrap();
        let d = vd.dual(e);
        assert!((d.m - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.d, 1.0);
        assert_eq!(d.x, Point::new(0.5, 0.0));
    }

    #[test]
    fn circumcenter_is_equidistant() {
        let c = [Point::new(0.3, -1.0), Point::new(2.0, 0.1), Point::new(0.7, 1.9)];
        let o = circumcenter(c).unwrap();
        let r = o.dist(c[0]);
        assert!((o.dist(c[1]) - r).abs() < 1e-14 && (o.dist(c[2]) - r).abs() < 1e-14);
        assert!(circumcenter([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)]).is_none());
    }

    #[test]
    fn walking_from_to_keeps_second_vertex_on_the_right() {
        let vd = two_equilateral();
        for d in vd.duals() {
            let (p, q) = (vd.point(d.from), vd.point(d.to));
            if d.m > 0.0 {
                let e = vd.mesh().edge(d.primal);
                assert!(orient(p, q, vd.mesh().vertex(e.v[1])) < 0.0);
                assert!(orient(p, q, vd.mesh().vertex(e.v[0])) > 0.0);
            }
        }
    }

    #[test]
    fn cells_cover_the_domain() {
        let vd = two_equilateral();
        let total: f64 = vd.cell_areas().iter().sum();
        assert!((total - 3f64.sqrt() / 2.0).abs() < 1e-15);
        for i in 0..4 {
            let poly = vd.cell_polygon(i);
            assert!((crate::point::signed_area(&poly) - vd.cell_area(i)).abs() < 1e-14, "cell {i}");
        }
    }
}
