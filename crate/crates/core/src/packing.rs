//! Tangency circle packings, their radical-center conductances, and the angle
//! transition check at a single flower.

use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, TAU};
use std::io::{BufRead, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{build_triangulation, validate_mesh, GeometryError, MeshQualityReport, Triangulation};
use crate::network::{Network, NetworkError};
use crate::point::Point;

#[derive(Debug, Error)]
pub enum PackingError {
    #[error("circle centers are collinear")]
    CollinearCenters,
    #[error("edge ({u}, {v}) has {flanks} flanking triangle(s), need 2")]
    BoundaryEdge { u: usize, v: usize, flanks: usize },
    #[error("circles {u} and {v} are not tangent (relative gap {gap:.3e})")]
    NotTangent { u: usize, v: usize, gap: f64 },
    #[error("contact complex is not a triangulated surface: {0}")]
    NonTriangulatedComplex(String),
    #[error("vertex {vertex} has no closed flower")]
    IncompleteFlower { vertex: usize },
    #[error("radius {0} is not positive and finite")]
    InvalidRadius(f64),
    #[error("finite-difference step {0} is outside [1e-8, 1e-4]")]
    InvalidStep(f64),
    #[error("petal radii do not close up around the center (angle defect {0:.3e})")]
    OpenFlower(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("mesh: {0}")]
    Geometry(#[from] GeometryError),
    #[error("network: {0}")]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub const fn new(center: Point, radius: f64) -> Self {
        Circle { center, radius }
    }

    /// `|p - z|² - R²`.
    pub fn power(&self, p: Point) -> f64 {
        (p - self.center).norm_sq() - self.radius * self.radius
    }
}

/// Point of equal power with respect to three circles.
pub fn radical_center(c1: &Circle, c2: &Circle, c3: &Circle) -> Result<Point, PackingError> {
    // power(p, c1) = power(p, ck) is linear in p
    let row = |c: &Circle| {
        let d = c.center - c1.center;
        let rhs = c.center.norm_sq() - c1.center.norm_sq() - c.radius * c.radius + c1.radius * c1.radius;
        (2.0 * d.x, 2.0 * d.y, rhs)
    };
    let (a, b, e) = row(c2);
    let (c, d, f) = row(c3);
    let det = a * d - b * c;
    let scale = (c2.center - c1.center).norm() * (c3.center - c1.center).norm();
    if det.abs() <= 4.0 * 1e-12 * scale {
        return Err(PackingError::CollinearCenters);
    }
    Ok(Point::new((e * d - b * f) / det, (a * f - e * c) / det))
}

/// Circles with a tangency graph and its triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePacking {
    circles: Vec<Circle>,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl CirclePacking {
    /// Checks radii, tangency of every edge to 1e-9 relative, and that triangles use listed edges.
    pub fn new(circles: Vec<Circle>, edges: Vec<[usize; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self, PackingError> {
        let n = circles.len();
        for c in &circles {
            if !(c.radius > 0.0 && c.radius.is_finite()) {
                return Err(PackingError::InvalidRadius(c.radius));
            }
        }
        let mut set = HashSet::new();
        for &[u, v] in &edges {
            if u >= n || v >= n || u == v {
                return Err(PackingError::NonTriangulatedComplex(format!("bad edge ({u}, {v})")));
            }
            if !set.insert(key(u, v)) {
                return Err(PackingError::NonTriangulatedComplex(format!("duplicate edge ({u}, {v})")));
            }
            let (a, b) = (circles[u], circles[v]);
            let want = a.radius + b.radius;
            let gap = ((a.center - b.center).norm() - want).abs() / want;
            if gap > 1e-9 {
                return Err(PackingError::NotTangent { u, v, gap });
            }
        }
        let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let e = key(t[k], t[(k + 1) % 3]);
                if !set.contains(&e) {
                    return Err(PackingError::NonTriangulatedComplex(format!(
                        "triangle {t:?} uses missing edge ({}, {})",
                        e.0, e.1
                    )));
                }
                *uses.entry(e).or_default() += 1;
            }
        }
        if let Some((e, _)) = uses.iter().find(|(_, &c)| c > 2) {
            return Err(PackingError::NonTriangulatedComplex(format!("edge ({}, {}) is in more than two triangles", e.0, e.1)));
        }
        Ok(CirclePacking { circles, edges, triangles })
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Third vertices of the triangles on edge `(u, v)`.
    pub fn flanks(&self, u: usize, v: usize) -> Vec<usize> {
        self.triangles
            .iter()
            .filter(|t| t.contains(&u) && t.contains(&v))
            .map(|t| t.iter().copied().find(|&w| w != u && w != v).unwrap())
            .collect()
    }

    /// Global dilation by `s` about the origin.
    pub fn scaled(&self, s: f64) -> CirclePacking {
        let circles = self.circles.iter().map(|c| Circle::new(c.center * s, c.radius * s)).collect();
        CirclePacking { circles, edges: self.edges.clone(), triangles: self.triangles.clone() }
    }

    /// Petals of `v` in counter-clockwise order.
    pub fn flower(&self, v: usize) -> Result<Vec<usize>, PackingError> {
        let incomplete = || PackingError::IncompleteFlower { vertex: v };
        // next petal after u, going counter-clockwise around v
        let mut next = HashMap::new();
        for t in self.triangles.iter().filter(|t| t.contains(&v)) {
            let k = t.iter().position(|&w| w == v).unwrap();
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            let ccw = crate::point::orient(self.circles[v].center, self.circles[a].center, self.circles[b].center) > 0.0;
            let (a, b) = if ccw { (a, b) } else { (b, a) };
            if next.insert(a, b).is_some() {
                return Err(incomplete());
            }
        }
        let &start = next.keys().min().ok_or_else(incomplete)?;
        let mut petals = vec![start];
        let mut cur = *next.get(&start).ok_or_else(incomplete)?;
        while cur != start {
            if petals.len() > next.len() {
                return Err(incomplete());
            }
            petals.push(cur);
            cur = *next.get(&cur).ok_or_else(incomplete)?;
        }
        if petals.len() != next.len() {
            return Err(incomplete());
        }
        Ok(petals)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "pack v1")?;
        for c in &self.circles {
            writeln!(w, "c {:.16e} {:.16e} {:.16e}", c.center.x, c.center.y, c.radius)?;
        }
        for [u, v] in &self.edges {
            writeln!(w, "e {u} {v}")?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(w, "t {a} {b} {c}")?;
        }
        Ok(())
    }
}

pub fn read_packing<R: BufRead>(r: R) -> Result<CirclePacking, PackingError> {
    let (mut circles, mut edges, mut tris) = (Vec::new(), Vec::new(), Vec::new());
    let mut header = false;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let err = |msg: &str| PackingError::Parse { line: k + 1, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header {
            if line != "pack v1" {
                return Err(err("expected header `pack v1`"));
            }
            header = true;
            continue;
        }
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap();
        let rest: Vec<&str> = it.collect();
        let floats = || -> Result<Vec<f64>, PackingError> {
            rest.iter().map(|s| s.parse::<f64>().map_err(|_| err(&format!("bad number `{s}`")))).collect()
        };
        let ints = || -> Result<Vec<usize>, PackingError> {
            rest.iter().map(|s| s.parse::<usize>().map_err(|_| err(&format!("bad index `{s}`")))).collect()
        };
        match (tag, rest.len()) {
            ("c", 3) => {
                let f = floats()?;
                circles.push(Circle::new(Point::new(f[0], f[1]), f[2]));
            }
            ("e", 2) => {
                let i = ints()?;
                edges.push([i[0], i[1]]);
            }
            ("t", 3) => {
                let i = ints()?;
                tris.push([i[0], i[1], i[2]]);
            }
            _ => return Err(err(&format!("unexpected record `{line}`"))),
        }
    }
    if !header {
        return Err(PackingError::Parse { line: 0, msg: "empty input".into() });
    }
    CirclePacking::new(circles, edges, tris)
}

/// `|w_x - w_y| / |z_u - z_v|` from the radical centers of the two flanking triples.
pub fn stephenson_conductance(p: &CirclePacking, u: usize, v: usize) -> Result<f64, PackingError> {
    let flanks = p.flanks(u, v);
    if flanks.len() != 2 {
        return Err(PackingError::BoundaryEdge { u, v, flanks: flanks.len() });
    }
    let c = p.circles();
    let wx = radical_center(&c[u], &c[v], &c[flanks[0]])?;
    let wy = radical_center(&c[u], &c[v], &c[flanks[1]])?;
    Ok(wx.dist(wy) / c[u].center.dist(c[v].center))
}

/// Triangulation on the centers, with Stephenson conductances on interior edges.
#[derive(Debug, Clone)]
pub struct PackingNetwork {
    pub mesh: Arc<Triangulation>,
    pub network: Network,
    pub quality: MeshQualityReport,
}

pub fn packing_to_network(p: &CirclePacking) -> Result<PackingNetwork, PackingError> {
    let centers = p.circles().iter().map(|c| c.center).collect();
    let mesh = Arc::new(build_triangulation(centers, p.triangles().to_vec(), None).map_err(|e| match e {
        GeometryError::NonConformingMesh(msg) => PackingError::NonTriangulatedComplex(msg),
        e => PackingError::Geometry(e),
    })?);
    let mut c = Vec::with_capacity(mesh.edges().len());
    for e in mesh.edges() {
        c.push(if e.is_boundary() { 0.0 } else { stephenson_conductance(p, e.v[0], e.v[1])? });
    }
    let quality = validate_mesh(&mesh);
    let network = Network::from_conductances(mesh.clone(), c)?;
    Ok(PackingNetwork { mesh, network, quality })
}

/// Equal circles of radius `r` on the hexagonal lattice, out to `rings` rings around the origin.
pub fn hexagonal_packing(rings: usize, r: f64) -> CirclePacking {
    let m = rings as i64;
    let e1 = Point::new(2.0 * r, 0.0);
    let e2 = Point::new(r, 3f64.sqrt() * r);
    let mut index = HashMap::new();
    let mut circles = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            if (a + b).abs() <= m {
                index.insert((a, b), circles.len());
                circles.push(Circle::new(e1 * a as f64 + e2 * b as f64, r));
            }
        }
    }
    let mut edges = Vec::new();
    let mut tris = Vec::new();
    for a in -m - 1..=m {
        for b in -m - 1..=m {
            let at = |da: i64, db: i64| index.get(&(a + da, b + db)).copied();
            if let Some(i) = at(0, 0) {
                for d in [(1, 0), (0, 1), (-1, 1)] {
                    if let Some(j) = at(d.0, d.1) {
                        edges.push([i, j]);
                    }
                }
            }
            if let (Some(j), Some(k)) = (at(1, 0), at(0, 1)) {
                if let Some(i) = at(0, 0) {
                    tris.push([i, j, k]);
                }
                if let Some(l) = at(1, 1) {
                    tris.push([j, l, k]);
                }
            }
        }
    }
    CirclePacking::new(circles, edges, tris).expect("hexagonal lattice is a packing")
}

/// Angle at the circle of radius `ru` in the triangle of centers of three mutually tangent circles.
pub fn tangent_angle(ru: f64, rv: f64, rw: f64) -> f64 {
    let (a, b, c) = (ru + rv, ru + rw, rv + rw);
    ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0).acos()
}

/// Radii of a center circle and its petals, in counter-clockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct Flower {
    pub center: f64,
    pub petals: Vec<f64>,
}

impl Flower {
    pub fn new(center: f64, petals: Vec<f64>) -> Result<Self, PackingError> {
        for &r in std::iter::once(&center).chain(&petals) {
            if !(r > 0.0 && r.is_finite()) {
                return Err(PackingError::InvalidRadius(r));
            }
        }
        if petals.len() < 3 {
            return Err(PackingError::IncompleteFlower { vertex: 0 });
        }
        Ok(Flower { center, petals })
    }

    /// Center radius 1 with petals (1, 1, 1.2, 1, 0.8, 1).
    pub fn default_flower() -> Self {
        Flower { center: 1.0, petals: vec![1.0, 1.0, 1.2, 1.0, 0.8, 1.0] }
    }

    pub fn regular(k: usize) -> Self {
        Flower { center: 1.0, petals: vec![1.0; k] }
    }

    /// Center radius 1.1 with six petals repeating `(1, b, 1.2)`, where `b`
    /// makes the flower close up.
    pub fn perturbed() -> Self {
        let half_turn = |b: f64| {
            tangent_angle(1.1, 1.0, b) + tangent_angle(1.1, b, 1.2) + tangent_angle(1.1, 1.2, 1.0)
        };
        let (mut lo, mut hi) = (0.25, 4.0);
        for _ in 0..200 {
            let b = 0.5 * (lo + hi);
            if half_turn(b) > PI {
                hi = b;
            } else {
                lo = b;
            }
        }
        let b = 0.5 * (lo + hi);
        Flower { center: 1.1, petals: vec![1.0, b, 1.2, 1.0, b, 1.2] }
    }

    fn petal(&self, j: isize) -> f64 {
        self.petals[j.rem_euclid(self.petals.len() as isize) as usize]
    }

    /// `2π` minus the angle sum at the center.
    pub fn angle_defect(&self) -> f64 {
        let k = self.petals.len() as isize;
        TAU - (0..k).map(|j| tangent_angle(self.center, self.petal(j), self.petal(j + 1))).sum::<f64>()
    }

    /// Lays the flower out with the center at the origin and petal 0 on the positive x axis.
    pub fn layout(&self) -> Result<CirclePacking, PackingError> {
        let defect = self.angle_defect();
        if defect.abs() > 1e-9 {
            return Err(PackingError::OpenFlower(defect));
        }
        let k = self.petals.len();
        let mut circles = vec![Circle::new(Point::default(), self.center)];
        let mut theta = 0.0;
        for j in 0..k {
            circles.push(Circle::new(Point::from_polar(self.center + self.petals[j], theta), self.petals[j]));
            theta += tangent_angle(self.center, self.petals[j], self.petal(j as isize + 1));
        }
        let mut edges = Vec::new();
        let mut tris = Vec::new();
        for j in 0..k {
            let (a, b) = (1 + j, 1 + (j + 1) % k);
            edges.push([0, a]);
            edges.push([a, b]);
            tris.push([0, a, b]);
        }
        CirclePacking::new(circles, edges, tris)
    }

    /// Conductance of the edge to petal `j`, from a layout of its two flanking triangles only.
    pub fn conductance(&self, j: usize) -> Result<f64, PackingError> {
        let (rv, ru) = (self.center, self.petals[j]);
        let (rx, ry) = (self.petal(j as isize - 1), self.petal(j as isize + 1));
        let zv = Circle::new(Point::default(), rv);
        let zu = Circle::new(Point::new(rv + ru, 0.0), ru);
        let place = |r: f64, side: f64| {
            let a = tangent_angle(rv, ru, r);
            Circle::new(Point::from_polar(rv + r, side * a), r)
        };
        let wx = radical_center(&zv, &zu, &place(rx, -1.0))?;
        let wy = radical_center(&zv, &zu, &place(ry, 1.0))?;
        Ok(wx.dist(wy) / (rv + ru))
    }

    /// Angle sum at petal `j` over the two flower triangles that contain it, with center radius `rv`.
    fn petal_angles(&self, j: usize, rv: f64) -> f64 {
        let ru = self.petals[j];
        tangent_angle(ru, rv, self.petal(j as isize - 1)) + tangent_angle(ru, rv, self.petal(j as isize + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovReport {
    /// Normalized conductances `c(v,u) / Σ c(v,·)`.
    pub conductance_rows: Vec<f64>,
    /// Normalized angle derivatives `dψ_u/dR_v / Σ dψ_·/dR_v`.
    pub angle_rows: Vec<f64>,
    pub deviation: f64,
}

/// Compares the two transition rows at the center of `flower`; `h` is the
/// central-difference step relative to the center radius.
pub fn markov_equality_check_flower(flower: &Flower, h: f64) -> Result<MarkovReport, PackingError> {
    if !(1e-8..=1e-4).contains(&h) {
        return Err(PackingError::InvalidStep(h));
    }
    let k = flower.petals.len();
    let c: Vec<f64> = (0..k).map(|j| flower.conductance(j)).collect::<Result<_, _>>()?;
    let step = h * flower.center;
    let d: Vec<f64> = (0..k)
        .map(|j| {
            (flower.petal_angles(j, flower.center + step) - flower.petal_angles(j, flower.center - step)) / (2.0 * step)
        })
        .collect();
    let (cs, ds) = (c.iter().sum::<f64>(), d.iter().sum::<f64>());
    let conductance_rows: Vec<f64> = c.iter().map(|x| x / cs).collect();
    let angle_rows: Vec<f64> = d.iter().map(|x| x / ds).collect();
    let deviation = conductance_rows.iter().zip(&angle_rows).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(MarkovReport { conductance_rows, angle_rows, deviation })
}

/// [`markov_equality_check_flower`] on the flower of interior vertex `v`.
pub fn markov_equality_check(p: &CirclePacking, v: usize, h: f64) -> Result<MarkovReport, PackingError> {
    let petals = p.flower(v)?;
    let c = p.circles();
    let flower = Flower::new(c[v].radius, petals.iter().map(|&u| c[u].radius).collect())?;
    markov_equality_check_flower(&flower, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equilateral_radical_center_is_the_centroid() {
        let s = 3f64.sqrt();
        let c = [
            Circle::new(Point::new(0.0, 0.0), 1.0),
            Circle::new(Point::new(2.0, 0.0), 1.0),
            Circle::new(Point::new(1.0, s), 1.0),
        ];
        let w = radical_center(&c[0], &c[1], &c[2]).unwrap();
        assert_relative_eq!(w.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(w.y, s / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn three_four_five() {
        // radii 1, 2, 3 give center distances 3, 4, 5
        let c = [
            Circle::new(Point::new(0.0, 0.0), 1.0),
            Circle::new(Point::new(3.0, 0.0), 2.0),
            Circle::new(Point::new(0.0, 4.0), 3.0),
        ];
        let w = radical_center(&c[0], &c[1], &c[2]).unwrap();
        let pw: Vec<f64> = c.iter().map(|c| c.power(w)).collect();
        assert!((pw[0] - pw[1]).abs() < 1e-12 * 25.0);
        assert!((pw[0] - pw[2]).abs() < 1e-12 * 25.0);
        // the orthogonal circle is the incircle: inradius 1 for the 3-4-5 triangle
        assert_relative_eq!(pw[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_centers_are_rejected() {
        let c = |x: f64| Circle::new(Point::new(x, 0.0), 0.5);
        assert!(matches!(radical_center(&c(0.0), &c(1.0), &c(2.0)), Err(PackingError::CollinearCenters)));
    }

    #[test]
    fn hexagonal_conductance() {
        let p = hexagonal_packing(2, 0.7);
        let mut interior = 0;
        for &[u, v] in p.edges() {
            match stephenson_conductance(&p, u, v) {
                Ok(c) => {
                    assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-12);
                    interior += 1;
                }
                Err(PackingError::BoundaryEdge { flanks, .. }) => assert_eq!(flanks, 1),
                Err(e) => panic!("{e}"),
            }
        }
        // 2 rings: 19 circles, 42 edges, 12 on the boundary
        assert_eq!(p.circles().len(), 19);
        assert_eq!(interior, 30);
    }

    #[test]
    fn hexagonal_flower_network() {
        let p = hexagonal_packing(1, 1.0);
        let net = packing_to_network(&p).unwrap();
        assert_eq!(net.mesh.num_triangles(), 6);
        assert!(net.quality.all_ok());
        let center = (0..7).find(|&i| !net.mesh.is_boundary_vertex(i)).unwrap();
        for (_, c) in net.network.neighbors(center) {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn default_flower_is_open_but_checkable() {
        let f = Flower::default_flower();
        assert!(f.angle_defect().abs() > 1e-3);
        assert!(matches!(f.layout(), Err(PackingError::OpenFlower(_))));
        let r = markov_equality_check_flower(&f, 1e-6).unwrap();
        assert!(r.deviation <= 1e-3);
        assert_relative_eq!(r.conductance_rows.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn regular_flower_is_uniform() {
        let r = markov_equality_check_flower(&Flower::regular(6), 1e-6).unwrap();
        for (a, b) in r.conductance_rows.iter().zip(&r.angle_rows) {
            assert!((a - 1.0 / 6.0).abs() < 1e-10);
            assert!((b - 1.0 / 6.0).abs() < 1e-10);
        }
    }

    #[test]
    fn perturbed_flower_lays_out_and_breaks_midpoint_crossing() {
        let f = Flower::perturbed();
        let p = f.layout().unwrap();
        let r = markov_equality_check(&p, 0, 1e-6).unwrap();
        assert!(r.deviation <= 1e-3);
        let net = packing_to_network(&p).unwrap();
        assert!(net.quality.v2_max_offset > 1e-3);
    }

    #[test]
    fn deviation_is_at_roundoff_for_every_step() {
        for f in [Flower::default_flower(), Flower::perturbed()] {
            for h in [1e-4, 1e-5, 1e-6] {
                assert!(markov_equality_check_flower(&f, h).unwrap().deviation < 1e-8);
            }
        }
    }

    #[test]
    fn step_bounds() {
        assert!(matches!(markov_equality_check_flower(&Flower::regular(6), 1e-3), Err(PackingError::InvalidStep(_))));
    }

    #[test]
    fn boundary_vertex_has_no_flower() {
        let p = hexagonal_packing(1, 1.0);
        let rim = (0..7).find(|&i| p.circles()[i].center.norm() > 1.0).unwrap();
        assert!(matches!(markov_equality_check(&p, rim, 1e-6), Err(PackingError::IncompleteFlower { .. })));
    }

    #[test]
    fn file_round_trip() {
        let p = Flower::perturbed().layout().unwrap();
        let mut buf = Vec::new();
        p.write(&mut buf).unwrap();
        assert_eq!(read_packing(&buf[..]).unwrap(), p);
    }

    #[test]
    fn non_tangent_edge_is_rejected() {
        let c = vec![Circle::new(Point::default(), 1.0), Circle::new(Point::new(2.5, 0.0), 1.0)];
        assert!(matches!(CirclePacking::new(c, vec![[0, 1]], vec![]), Err(PackingError::NotTangent { .. })));
    }
}
