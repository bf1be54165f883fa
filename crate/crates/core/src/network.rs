//! Conductance networks on mesh edges and the discrete potential-theory operators.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{BoundaryLabel, Triangulation, VoronoiDiagram};
use crate::point::Point;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network is disconnected ({components} components)")]
    DisconnectedNetwork { components: usize },
    #[error("vertex {vertex} has no admissible neighbor")]
    EmptyNeighborSet { vertex: usize },
    #[error("loop does not return to its start")]
    NotClosed,
    #[error("step {step} of the loop is not an interior Voronoi segment")]
    NotCellAligned { step: usize },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value at vertex {vertex} is not finite")]
    NonFinite { vertex: usize },
    #[error("conductance of edge {edge} is negative or not finite")]
    InvalidConductance { edge: usize },
}

/// Real values on mesh vertices, extended affinely over triangles.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<Triangulation>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<Triangulation>, values: Vec<f64>) -> Result<Self, NetworkError> {
        if values.len() != mesh.num_vertices() {
            return Err(NetworkError::LengthMismatch { expected: mesh.num_vertices(), got: values.len() });
        }
        if let Some(v) = values.iter().position(|x| !x.is_finite()) {
            return Err(NetworkError::NonFinite { vertex: v });
        }
        Ok(ScalarField { mesh, values })
    }

    /// Samples `f` at every vertex.
    pub fn from_fn(mesh: Arc<Triangulation>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        ScalarField { mesh, values }
    }

    pub fn constant(mesh: Arc<Triangulation>, c: f64) -> Self {
        let n = mesh.num_vertices();
        ScalarField { mesh, values: vec![c; n] }
    }

    pub fn mesh(&self) -> &Arc<Triangulation> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn same_mesh(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Affine interpolation inside the containing triangle.
    pub fn eval(&self, p: Point) -> Option<f64> {
        let (t, bc) = self.mesh.locate(p)?;
        Some(self.eval_in(t, bc))
    }

    pub fn eval_in(&self, t: usize, bc: [f64; 3]) -> f64 {
        let [a, b, c] = self.mesh.triangles()[t];
        bc[0] * self.values[a] + bc[1] * self.values[b] + bc[2] * self.values[c]
    }

    /// Max absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Edge conductances on a triangulation's 1-skeleton.
#[derive(Debug, Clone)]
pub struct Network {
    mesh: Arc<Triangulation>,
    conductance: Vec<f64>,
}

/// Finite-volume network: `c = m/d` on interior edges, 0 on edges lying in the boundary.
pub fn build_network(v: &VoronoiDiagram) -> Result<Network, NetworkError> {
    let mesh = v.mesh().clone();
    let conductance = mesh
        .edges()
        .iter()
        .zip(v.duals())
        .map(|(e, d)| if e.is_boundary() { 0.0 } else { d.m / d.d })
        .collect();
    Network::from_conductances(mesh, conductance)
}

impl Network {
    /// Network with explicit per-edge conductances (indexed by mesh edge id).
    pub fn from_conductances(mesh: Arc<Triangulation>, conductance: Vec<f64>) -> Result<Self, NetworkError> {
        if conductance.len() != mesh.edges().len() {
            return Err(NetworkError::LengthMismatch { expected: mesh.edges().len(), got: conductance.len() });
        }
        if let Some(e) = conductance.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(NetworkError::InvalidConductance { edge: e });
        }
        let net = Network { mesh, conductance };
        let components = net.components();
        if components > 1 {
            return Err(NetworkError::DisconnectedNetwork { components });
        }
        Ok(net)
    }

    fn components(&self) -> usize {
        let n = self.mesh.num_vertices();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(i) = queue.pop_front() {
                for (j, _) in self.neighbors(i) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        count
    }

    pub fn mesh(&self) -> &Arc<Triangulation> {
        &self.mesh
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn label(&self, i: usize) -> BoundaryLabel {
        self.mesh.label(i)
    }

    /// Conductance of mesh edge `edge`.
    pub fn conductance(&self, edge: usize) -> f64 {
        self.conductance[edge]
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductance
    }

    /// `(neighbor, conductance)` pairs around `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mesh.vertex_edges(i).iter().map(move |&e| (self.mesh.edge(e).other(i), self.conductance[e]))
    }

    /// Total conductance at `i`.
    pub fn degree(&self, i: usize) -> f64 {
        self.neighbors(i).map(|(_, c)| c).sum()
    }

    /// Random-walk transition probabilities out of `i`; empty when the degree is 0.
    pub fn transition_row(&self, i: usize) -> Vec<(usize, f64)> {
        let deg = self.degree(i);
        if deg <= 0.0 {
            return Vec::new();
        }
        self.neighbors(i).map(|(j, c)| (j, c / deg)).collect()
    }

    fn check(&self, f: &ScalarField) -> Result<(), NetworkError> {
        if Arc::ptr_eq(&self.mesh, f.mesh()) {
            Ok(())
        } else {
            Err(NetworkError::MeshMismatch)
        }
    }

    /// `sum_j c_ij (f(i) - f(j))`.
    pub fn laplacian(&self, f: &ScalarField, i: usize) -> Result<f64, NetworkError> {
        self.check(f)?;
        Ok(self.laplacian_values(f.values(), i))
    }

    pub(crate) fn laplacian_values(&self, f: &[f64], i: usize) -> f64 {
        self.neighbors(i).map(|(j, c)| c * (f[i] - f[j])).sum()
    }

    /// Laplacian at every vertex.
    pub fn laplacian_all(&self, f: &ScalarField) -> Result<Vec<f64>, NetworkError> {
        self.check(f)?;
        Ok((0..self.num_vertices()).map(|i| self.laplacian_values(f.values(), i)).collect())
    }

    /// `sum c(x,y)(f(x) - f(y))` over neighbors `y` admitted by `admit`.
    pub fn normal_derivative(
        &self,
        f: &ScalarField,
        x: usize,
        admit: impl Fn(usize) -> bool,
    ) -> Result<f64, NetworkError> {
        self.check(f)?;
        let mut any = false;
        let mut s = 0.0;
        for (y, c) in self.neighbors(x) {
            if admit(y) {
                any = true;
                s += c * (f.get(x) - f.get(y));
            }
        }
        if any {
            Ok(s)
        } else {
            Err(NetworkError::EmptyNeighborSet { vertex: x })
        }
    }

    /// Flux of `f` across a closed Voronoi loop given as a vertex sequence with
    /// `lp[0] == lp[last]`: the sum of `c (f(left) - f(right))` over crossed
    /// edges. For a counter-clockwise loop this is the sum of laplacians of the
    /// enclosed cell centers.
    pub fn loop_flux(&self, v: &VoronoiDiagram, f: &ScalarField, lp: &[usize]) -> Result<f64, NetworkError> {
        self.check(f)?;
        if lp.len() < 2 || lp[0] != lp[lp.len() - 1] {
            return Err(NetworkError::NotClosed);
        }
        let mut s = 0.0;
        for (step, w) in lp.windows(2).enumerate() {
            if v.is_clip_point(w[0]) || v.is_clip_point(w[1]) {
                return Err(NetworkError::NotCellAligned { step });
            }
            let e = v.dual_between(w[0], w[1]).ok_or(NetworkError::NotCellAligned { step })?;
            let (left, right) = crossing_sides(v, e, w[0]);
            s += self.conductance[e] * (f.get(left) - f.get(right));
        }
        Ok(s)
    }

    /// `net v1` dump: one `e i j c` line per edge.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "net v1")?;
        for (e, c) in self.mesh.edges().iter().zip(&self.conductance) {
            writeln!(w, "e {} {} {:.16e}", e.v[0], e.v[1], c)?;
        }
        Ok(())
    }
}

/// `(left, right)` mesh vertices when dual edge `e` is walked starting at Voronoi vertex `start`.
pub(crate) fn crossing_sides(v: &VoronoiDiagram, e: usize, start: usize) -> (usize, usize) {
    let d = v.dual(e);
    let [a, b] = v.mesh().edge(e).v;
    if start == d.from {
        (a, b)
    } else {
        (b, a)
    }
}

/// Parses a `net v1` dump into `(i, j, c)` triples.
pub fn read_network_dump(text: &str) -> Result<Vec<(usize, usize, f64)>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("net v1") {
        return Err("missing `net v1` header".into());
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                ["e", i, j, c] => Ok((
                    i.parse().map_err(|_| format!("bad index in `{l}`"))?,
                    j.parse().map_err(|_| format!("bad index in `{l}`"))?,
                    c.parse().map_err(|_| format!("bad conductance in `{l}`"))?,
                )),
                _ => Err(format!("unexpected line `{l}`")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_triangulation, build_voronoi, generate_lattice_annulus, PolygonalAnnulus};

    /// Regular hexagon of unit equilateral triangles around vertex 0.
    pub(crate) fn flower() -> Arc<Triangulation> {
        let mut v = vec![Point::default()];
        for k in 0..6 {
            v.push(Point::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_3));
        }
        let t = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        Arc::new(build_triangulation(v, t, None).unwrap())
    }

    fn lattice(pitch: f64) -> Network {
        let ann = PolygonalAnnulus::square(Point::default(), 2.0, 1.0).unwrap();
        let m = Arc::new(generate_lattice_annulus(&ann, pitch, 1).unwrap());
        build_network(&build_voronoi(m).unwrap()).unwrap()
    }

    #[test]
    fn equilateral_spike() {
        let m = flower();
        let net = build_network(&build_voronoi(m.clone()).unwrap()).unwrap();
        for (_, c) in net.neighbors(0) {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        let mut vals = vec![0.0; 7];
        vals[0] = 1.0;
        let f = ScalarField::new(m, vals).unwrap();
        assert!((net.laplacian(&f, 0).unwrap() - 6.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lattice_is_five_point() {
        let net = lattice(1.0);
        let m = net.mesh().clone();
        for (e, edge) in m.edges().iter().enumerate() {
            let (a, b) = (m.vertex(edge.v[0]), m.vertex(edge.v[1]));
            let c = net.conductance(e);
            if edge.is_boundary() || (a.x != b.x && a.y != b.y) {
                assert_eq!(c, 0.0);
            } else {
                assert!((c - 1.0).abs() < 1e-15);
            }
        }
        let f = ScalarField::from_fn(m.clone(), |p| p.x * p.x - p.y * p.y);
        for i in 0..m.num_vertices() {
            if !m.is_boundary_vertex(i) {
                assert!(net.laplacian(&f, i).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_derivative_across_a_cut() {
        let net = lattice(1.0);
        let m = net.mesh().clone();
        let f = ScalarField::from_fn(m.clone(), |p| 3.0 * p.x);
        let x = (0..m.num_vertices()).find(|&i| m.vertex(i) == Point::new(0.0, 1.5)).unwrap();
        let right = net.normal_derivative(&f, x, |y| m.vertex(y).x > 0.0).unwrap();
        // one axis edge crosses the cut, pitch 1/2, c = 1
        assert!((right - (-3.0 * 0.5)).abs() < 1e-14);
        let all = net.normal_derivative(&f, x, |_| true).unwrap();
        assert_eq!(all, net.laplacian(&f, x).unwrap());
        assert!(net.normal_derivative(&f, x, |_| false).is_err());
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let net = lattice(1.0);
        for i in 0..net.num_vertices() {
            let row = net.transition_row(i);
            if !row.is_empty() {
                assert!((row.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_cell_loop_is_the_laplacian() {
        let m = flower();
        let vd = build_voronoi(m.clone()).unwrap();
        let net = build_network(&vd).unwrap();
        let f = ScalarField::from_fn(m, |p| p.x * p.x + 0.3 * p.y);
        let mut lp = vd.cell(0).to_vec();
        lp.push(lp[0]);
        let flux = net.loop_flux(&vd, &f, &lp).unwrap();
        assert!((flux - net.laplacian(&f, 0).unwrap()).abs() < 1e-14);
        assert!(matches!(net.loop_flux(&vd, &f, &lp[..3]), Err(NetworkError::NotClosed)));
    }

    #[test]
    fn dump_round_trip() {
        let net = lattice(1.0);
        let mut buf = Vec::new();
        net.write_dump(&mut buf).unwrap();
        let rows = read_network_dump(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(rows.len(), net.mesh().edges().len());
        for (k, (i, j, c)) in rows.into_iter().enumerate() {
            assert_eq!([i, j], net.mesh().edge(k).v);
            assert_eq!(c, net.conductance(k));
        }
    }
}
