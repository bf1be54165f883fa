use crate::point::Point;

use super::Triangulation;

/// Uniform bucket grid over a bounding box.
#[derive(Debug)]
struct Grid {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(lo: Point, hi: Point, cell: f64) -> Grid {
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);
        Grid { lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] }
    }

    fn clamp_ix(&self, p: Point) -> (usize, usize) {
        let ix = ((p.x - self.lo.x) / self.cell).floor().max(0.0) as usize;
        let iy = ((p.y - self.lo.y) / self.cell).floor().max(0.0) as usize;
        (ix.min(self.nx - 1), iy.min(self.ny - 1))
    }

    fn insert_box(&mut self, a: Point, b: Point, id: usize) {
        let (x0, y0) = self.clamp_ix(a);
        let (x1, y1) = self.clamp_ix(b);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                self.buckets[iy * self.nx + ix].push(id);
            }
        }
    }

    fn query_box(&self, a: Point, b: Point) -> impl Iterator<Item = usize> + '_ {
        let (x0, y0) = self.clamp_ix(a);
        let (x1, y1) = self.clamp_ix(b);
        (y0..=y1).flat_map(move |iy| (x0..=x1).flat_map(move |ix| self.buckets[iy * self.nx + ix].iter().copied()))
    }
}

fn bbox(points: &[Point]) -> (Point, Point) {
    points.iter().fold(
        (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Point::new(lo.x.min(p.x), lo.y.min(p.y)), Point::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

/// Vertex buckets, used for conformity checks.
pub(crate) struct PointGrid {
    grid: Grid,
}

impl PointGrid {
    pub(crate) fn new(points: &[Point], cell: f64) -> PointGrid {
        let (lo, hi) = bbox(points);
        let mut grid = Grid::new(lo, hi, cell);
        for (i, &p) in points.iter().enumerate() {
            grid.insert_box(p, p, i);
        }
        PointGrid { grid }
    }

    /// Candidate vertices whose bucket overlaps the bounding box of [a, b].
    pub(crate) fn near_segment(&self, a: Point, b: Point) -> Vec<usize> {
        let lo = Point::new(a.x.min(b.x), a.y.min(b.y));
        let hi = Point::new(a.x.max(b.x), a.y.max(b.y));
        self.grid.query_box(lo, hi).collect()
    }
}

/// Triangle buckets for point location.
#[derive(Debug)]
pub(crate) struct Locator {
    grid: Grid,
}

/// Barycentric slack accepted for points on shared edges.
const BARY_TOL: f64 = 1e-12;

impl Locator {
    pub(crate) fn new(mesh: &Triangulation) -> Locator {
        let (lo, hi) = bbox(mesh.vertices());
        let cell = mesh.mesh_size().max(f64::MIN_POSITIVE);
        let mut grid = Grid::new(lo, hi, cell);
        for t in 0..mesh.num_triangles() {
            let (a, b) = bbox(&mesh.corners(t));
            grid.insert_box(a, b, t);
        }
        Locator { grid }
    }

    pub(crate) fn locate(&self, mesh: &Triangulation, p: Point) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in self.grid.query_box(p, p) {
            let bc = barycentric(mesh.corners(t), p);
            let worst = bc[0].min(bc[1]).min(bc[2]);
            if worst >= 0.0 {
                return Some((t, bc));
            }
            if worst >= -BARY_TOL && best.is_none_or(|b| worst > b.2) {
                best = Some((t, bc, worst));
            }
        }
        best.map(|(t, bc, _)| (t, bc))
    }
}

/// Barycentric coordinates of `p` with respect to the triangle `c`.
pub fn barycentric(c: [Point; 3], p: Point) -> [f64; 3] {
    let area = crate::point::orient(c[0], c[1], c[2]);
    let l0 = crate::point::orient(p, c[1], c[2]) / area;
    let l1 = crate::point::orient(c[0], p, c[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}
