//! Flux fellow paths and the combinatorial harmonic conjugate on Voronoi vertices.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{BoundaryLabel, Triangulation, VoronoiDiagram};
use crate::network::{crossing_sides, Network, NetworkError, ScalarField};
use crate::point::{orient, winding_number, Point};

#[derive(Debug, Error)]
pub enum ConjugateError {
    #[error("step {step} of the Voronoi path is not a dual segment")]
    NotAPath { step: usize },
    #[error("step {step} of the Voronoi path runs along a boundary-clipped segment")]
    BoundarySegment { step: usize },
    #[error("step {step}: fellow vertex is collinear with its segment")]
    AmbiguousSide { step: usize },
    #[error("field is not discrete harmonic at vertex {vertex} (|Δg| = {residual:e})")]
    NonHarmonicBeyondTolerance { vertex: usize, residual: f64 },
    #[error("Voronoi vertex {vertex} cannot be reached from the basepoint")]
    UnreachableVertex { vertex: usize },
    #[error("no closed Voronoi loop winds once around the hole")]
    NoEnclosingLoop,
    #[error("paths do not share endpoints")]
    EndpointMismatch,
    #[error("no slit path from the inner to the outer boundary: {0}")]
    NoSlit(String),
    #[error("cell set touches the boundary at vertex {vertex}")]
    NotCellAligned { vertex: usize },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A Voronoi path with the mesh vertex to the right of each segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxPath {
    pub voronoi_path: Vec<usize>,
    pub fellow_path: Vec<usize>,
    /// Primal edge dual to each segment.
    pub crossed_edges: Vec<usize>,
    /// Mesh vertex to the left of each segment.
    pub left: Vec<usize>,
}

impl FluxPath {
    /// Sum of `c (g(right) - g(left))` along the path.
    pub fn increment(&self, net: &Network, g: &ScalarField) -> f64 {
        self.crossed_edges
            .iter()
            .zip(self.fellow_path.iter().zip(&self.left))
            .map(|(&e, (&r, &l))| net.conductance(e) * (g.get(r) - g.get(l)))
            .sum()
    }
}

pub fn flux_fellow_path(v: &VoronoiDiagram, gamma: &[usize]) -> Result<FluxPath, ConjugateError> {
    if gamma.len() < 2 {
        return Err(ConjugateError::NotAPath { step: 0 });
    }
    // closed loops may run around several times; open paths must be simple
    let closed = gamma[0] == gamma[gamma.len() - 1];
    let mut seen = HashSet::with_capacity(gamma.len());
    for (k, &w) in gamma.iter().enumerate() {
        if w >= v.num_points() || !(closed || seen.insert(w)) {
            return Err(ConjugateError::NotAPath { step: k });
        }
    }
    let mesh = v.mesh();
    let mut path = FluxPath {
        voronoi_path: gamma.to_vec(),
        fellow_path: Vec::with_capacity(gamma.len() - 1),
        crossed_edges: Vec::with_capacity(gamma.len() - 1),
        left: Vec::with_capacity(gamma.len() - 1),
    };
    for (step, w) in gamma.windows(2).enumerate() {
        if v.is_clip_point(w[0]) || v.is_clip_point(w[1]) {
            return Err(ConjugateError::BoundarySegment { step });
        }
        let e = v.dual_between(w[0], w[1]).ok_or(ConjugateError::NotAPath { step })?;
        let (left, right) = crossing_sides(v, e, w[0]);
        let d = v.dual(e);
        if d.m > 1e-9 * d.d {
            let (p, q) = (v.point(w[0]), v.point(w[1]));
            let s = orient(p, q, mesh.vertex(right));
            if s >= -1e-14 * d.m * d.d {
                return Err(ConjugateError::AmbiguousSide { step });
            }
        }
        path.fellow_path.push(right);
        path.left.push(left);
        path.crossed_edges.push(e);
    }
    Ok(path)
}

/// Increment sum along a Voronoi path.
pub fn path_increment(net: &Network, v: &VoronoiDiagram, g: &ScalarField, gamma: &[usize]) -> Result<f64, ConjugateError> {
    check_meshes(net, v, g)?;
    Ok(flux_fellow_path(v, gamma)?.increment(net, g))
}

fn check_meshes(net: &Network, v: &VoronoiDiagram, g: &ScalarField) -> Result<(), ConjugateError> {
    if Arc::ptr_eq(net.mesh(), v.mesh()) && Arc::ptr_eq(net.mesh(), g.mesh()) {
        Ok(())
    } else {
        Err(ConjugateError::MeshMismatch)
    }
}

/// Where the single-valuedness cut runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlitSpec {
    /// Ray from the hole point at this angle (radians).
    Angle(f64),
    /// Ray from the hole point through this boundary vertex.
    BoundaryVertex(usize),
}

impl Default for SlitSpec {
    fn default() -> Self {
        SlitSpec::Angle(0.0)
    }
}

impl std::str::FromStr for SlitSpec {
    type Err = String;
    /// `v:<index>` selects a boundary vertex, anything else is an angle in radians.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(idx) = s.strip_prefix("v:") {
            return idx.parse().map(SlitSpec::BoundaryVertex).map_err(|_| format!("bad vertex `{idx}`"));
        }
        s.parse().map(SlitSpec::Angle).map_err(|_| format!("bad slit `{s}` (angle in radians or v:<vertex>)"))
    }
}

/// A point inside the hole of an annulus mesh.
pub fn hole_point(mesh: &Triangulation) -> Point {
    if let Some(d) = mesh.domain() {
        return d.hole_point();
    }
    let inner: Vec<Point> =
        (0..mesh.num_vertices()).filter(|&i| mesh.label(i) == BoundaryLabel::E2).map(|i| mesh.vertex(i)).collect();
    let n = inner.len().max(1) as f64;
    inner.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n)
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// Primal edge path from the inner to the outer boundary that hugs a ray from
/// the hole point. Interior vertices only, apart from its two ends.
pub fn slit_path(mesh: &Triangulation, spec: SlitSpec) -> Result<Vec<usize>, ConjugateError> {
    let o = hole_point(mesh);
    let (dir, fixed) = match spec {
        SlitSpec::Angle(a) => (Point::from_polar(1.0, a), None),
        SlitSpec::BoundaryVertex(b) => {
            if b >= mesh.num_vertices() || !mesh.is_boundary_vertex(b) {
                return Err(ConjugateError::NoSlit(format!("vertex {b} is not a boundary vertex")));
            }
            let d = mesh.vertex(b) - o;
            (d * (1.0 / d.norm()), Some(b))
        }
    };
    let off_ray = |p: Point| (p - o).cross(dir).abs();
    let ahead = |p: Point| (p - o).dot(dir) > 0.0;
    let start = match fixed.filter(|&b| mesh.label(b) == BoundaryLabel::E2) {
        Some(b) => b,
        None => (0..mesh.num_vertices())
            .filter(|&i| mesh.label(i) == BoundaryLabel::E2 && ahead(mesh.vertex(i)))
            .min_by(|&a, &b| off_ray(mesh.vertex(a)).total_cmp(&off_ray(mesh.vertex(b))))
            .ok_or_else(|| ConjugateError::NoSlit("no inner boundary vertex in the slit direction".into()))?,
    };
    let goal = |i: usize| match fixed.filter(|&b| mesh.label(b) == BoundaryLabel::E1) {
        Some(b) => i == b,
        None => mesh.label(i) == BoundaryLabel::E1,
    };

    let n = mesh.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut heap = BinaryHeap::from([Candidate(0.0, start)]);
    dist[start] = 0.0;
    let mut end = None;
    while let Some(Candidate(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        if goal(i) {
            end = Some(i);
            break;
        }
        if i != start && mesh.is_boundary_vertex(i) {
            continue;
        }
        for &e in mesh.vertex_edges(i) {
            let edge = mesh.edge(e);
            let j = edge.other(i);
            if edge.is_boundary() || mesh.label(j) == BoundaryLabel::E2 {
                continue;
            }
            let mid = mesh.vertex(i).midpoint(mesh.vertex(j));
            if !ahead(mid) {
                continue;
            }
            let nd = d + mesh.edge_length(e) + 10.0 * off_ray(mid);
            if nd < dist[j] {
                dist[j] = nd;
                via[j] = Some(e);
                heap.push(Candidate(nd, j));
            }
        }
    }
    let mut at = end.ok_or_else(|| ConjugateError::NoSlit("outer boundary not reachable along the ray".into()))?;
    let mut edges = Vec::new();
    while let Some(e) = via[at] {
        edges.push(e);
        at = mesh.edge(e).other(at);
    }
    edges.reverse();
    Ok(edges)
}

#[derive(Debug, Clone)]
pub struct ConjugateOptions {
    /// Per-vertex harmonicity threshold relative to `sum_j c_ij · max(1, |g|_inf)`.
    pub tol: f64,
    pub slit: SlitSpec,
    /// Defaults to the circumcenter of the first triangle.
    pub basepoint: Option<usize>,
    pub base_value: f64,
}

impl Default for ConjugateOptions {
    fn default() -> Self {
        ConjugateOptions { tol: 1e-8, slit: SlitSpec::default(), basepoint: None, base_value: 0.0 }
    }
}

/// Conjugate values on Voronoi vertices, single-valued on the slit annulus.
#[derive(Debug, Clone)]
pub struct ConjugateField {
    voronoi: Arc<VoronoiDiagram>,
    values: Vec<f64>,
    basepoint: usize,
    base_value: f64,
    period: f64,
    slit: Vec<usize>,
    /// `c (g(v1) - g(v0))` per dual edge, walked from `from` to `to`.
    increments: Vec<f64>,
}

impl ConjugateField {
    /// Increment for walking dual edge `e` away from Voronoi vertex `start`.
    pub fn increment(&self, e: usize, start: usize) -> f64 {
        if self.voronoi.dual(e).from == start {
            self.increments[e]
        } else {
            -self.increments[e]
        }
    }

    pub fn voronoi(&self) -> &Arc<VoronoiDiagram> {
        &self.voronoi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, w: usize) -> f64 {
        self.values[w]
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Primal edges of the cut.
    pub fn slit(&self) -> &[usize] {
        &self.slit
    }

    /// `conj v1` dump: period line then one `index value` line per Voronoi vertex.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "conj v1")?;
        writeln!(w, "period {:.16e}", self.period)?;
        for (i, x) in self.values.iter().enumerate() {
            writeln!(w, "{i} {x:.16e}")?;
        }
        Ok(())
    }
}

/// Largest per-vertex |Δg| relative to the local conductance scale, with its vertex.
pub fn harmonic_defect(net: &Network, g: &ScalarField) -> (usize, f64, f64) {
    let mesh = net.mesh();
    let gmax = g.max_abs().max(1.0);
    let mut worst = (0, 0.0, 0.0);
    for i in 0..mesh.num_vertices() {
        if mesh.is_boundary_vertex(i) {
            continue;
        }
        let lap = net.laplacian(g, i).unwrap_or(0.0).abs();
        let scale = net.degree(i) * gmax;
        let rel = if scale > 0.0 { lap / scale } else { 0.0 };
        if rel > worst.2 {
            worst = (i, lap, rel);
        }
    }
    worst
}

pub fn conjugate_field(
    net: &Network,
    v: &Arc<VoronoiDiagram>,
    g: &ScalarField,
    opts: &ConjugateOptions,
) -> Result<ConjugateField, ConjugateError> {
    check_meshes(net, v, g)?;
    let (vertex, residual, rel) = harmonic_defect(net, g);
    if rel > opts.tol {
        return Err(ConjugateError::NonHarmonicBeyondTolerance { vertex, residual });
    }
    let mesh = v.mesh();
    let slit = slit_path(mesh, opts.slit)?;
    let cut: HashSet<usize> = slit.iter().copied().collect();
    let basepoint = opts.basepoint.unwrap_or(0);
    if basepoint >= v.num_points() {
        return Err(ConjugateError::UnreachableVertex { vertex: basepoint });
    }
    let mut values = vec![f64::NAN; v.num_points()];
    values[basepoint] = opts.base_value;
    let mut queue = VecDeque::from([basepoint]);
    while let Some(p) = queue.pop_front() {
        for &e in v.incident(p) {
            if cut.contains(&e) {
                continue;
            }
            let d = v.dual(e);
            let q = if d.from == p { d.to } else { d.from };
            if !values[q].is_nan() {
                continue;
            }
            let (left, right) = crossing_sides(v, e, p);
            values[q] = values[p] + net.conductance(e) * (g.get(right) - g.get(left));
            queue.push_back(q);
        }
    }
    if let Some(w) = values.iter().position(|x| x.is_nan()) {
        return Err(ConjugateError::UnreachableVertex { vertex: w });
    }
    let period = period(net, v, g)?;
    let increments = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| net.conductance(e) * (g.get(edge.v[1]) - g.get(edge.v[0])))
        .collect();
    Ok(ConjugateField { voronoi: v.clone(), values, basepoint, base_value: opts.base_value, period, slit, increments })
}

/// Closed counter-clockwise Voronoi loops bounding a set of interior cells.
/// Each loop starts and ends at the same vertex and keeps the set on its left.
pub fn cell_set_loops(v: &VoronoiDiagram, in_set: &[bool]) -> Result<Vec<Vec<usize>>, ConjugateError> {
    let mesh = v.mesh();
    if let Some(i) = (0..mesh.num_vertices()).find(|&i| in_set[i] && mesh.is_boundary_vertex(i)) {
        return Err(ConjugateError::NotCellAligned { vertex: i });
    }
    Ok(boundary_cycles(v, in_set))
}

fn boundary_cycles(v: &VoronoiDiagram, in_set: &[bool]) -> Vec<Vec<usize>> {
    let mesh = v.mesh();
    // directed dual step (from, to, edge) keeping the set on the left
    let mut next: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.v;
        if in_set[a] == in_set[b] {
            continue;
        }
        let d = v.dual(e);
        // walking from -> to keeps edge.v[0] on the left
        let (from, to) = if in_set[a] { (d.from, d.to) } else { (d.to, d.from) };
        next.entry(from).or_default().push((to, e));
    }
    let mut used: HashSet<usize> = HashSet::new();
    let mut cycles = Vec::new();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    for s in starts {
        for k in 0..next[&s].len() {
            let (first_to, first_e) = next[&s][k];
            if used.contains(&first_e) {
                continue;
            }
            used.insert(first_e);
            let mut cycle = vec![s, first_to];
            let mut at = first_to;
            while at != s {
                let Some(&(to, e)) = next.get(&at).and_then(|l| l.iter().find(|(_, e)| !used.contains(e))) else {
                    break;
                };
                used.insert(e);
                cycle.push(to);
                at = to;
            }
            if at == s {
                cycles.push(cycle);
            }
        }
    }
    cycles
}

/// Counter-clockwise Voronoi loop around the hole, separating the inner boundary
/// and every interior vertex within `layer` hops of it from the rest.
pub fn winding_loop(v: &VoronoiDiagram, layer: usize) -> Result<Vec<usize>, ConjugateError> {
    let mesh = v.mesh();
    let n = mesh.num_vertices();
    let mut hops = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (i, h) in hops.iter_mut().enumerate() {
        if mesh.label(i) == BoundaryLabel::E2 {
            *h = 0;
            queue.push_back(i);
        }
    }
    if queue.is_empty() {
        return Err(ConjugateError::NoEnclosingLoop);
    }
    while let Some(i) = queue.pop_front() {
        if hops[i] == layer {
            continue;
        }
        for j in mesh.neighbors(i) {
            if hops[j] == usize::MAX && !mesh.is_boundary_vertex(j) {
                hops[j] = hops[i] + 1;
                queue.push_back(j);
            }
        }
    }
    let in_set: Vec<bool> = hops.iter().map(|&h| h != usize::MAX).collect();
    let hole = hole_point(mesh);
    boundary_cycles(v, &in_set)
        .into_iter()
        .find(|c| {
            let pts: Vec<Point> = c[..c.len() - 1].iter().map(|&w| v.point(w)).collect();
            winding_number(&pts, hole) == 1 && c.iter().all(|&w| !v.is_clip_point(w))
        })
        .ok_or(ConjugateError::NoEnclosingLoop)
}

/// Flux of `g` through a counter-clockwise loop around the hole.
pub fn period(net: &Network, v: &VoronoiDiagram, g: &ScalarField) -> Result<f64, ConjugateError> {
    let lp = winding_loop(v, 1).or_else(|_| winding_loop(v, 0))?;
    path_increment(net, v, g, &lp)
}

/// `|increment(γ1) - increment(γ2)|` for two paths with common ends.
pub fn path_independence_residual(
    net: &Network,
    v: &VoronoiDiagram,
    g: &ScalarField,
    gamma1: &[usize],
    gamma2: &[usize],
) -> Result<f64, ConjugateError> {
    if gamma1.first() != gamma2.first() || gamma1.last() != gamma2.last() {
        return Err(ConjugateError::EndpointMismatch);
    }
    Ok((path_increment(net, v, g, gamma1)? - path_increment(net, v, g, gamma2)?).abs())
}

/// Shortest Voronoi path between two vertices avoiding clip points and the given dual edges.
pub fn voronoi_path(v: &VoronoiDiagram, from: usize, to: usize, avoid: &HashSet<usize>) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; v.num_points()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if p == to {
            break;
        }
        for &e in v.incident(p) {
            if avoid.contains(&e) {
                continue;
            }
            let d = v.dual(e);
            let q = if d.from == p { d.to } else { d.from };
            if prev[q] == usize::MAX && !v.is_clip_point(q) {
                prev[q] = p;
                queue.push_back(q);
            }
        }
    }
    if prev[to] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}
