//! Sparse Dirichlet and finite-volume Poisson solves on conductance networks.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{BoundaryLabel, Triangulation, VoronoiDiagram};
use crate::network::{Network, NetworkError, ScalarField};
use crate::point::{orient, Point};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("singular system: interior vertex {vertex} is not tied to the boundary")]
    SingularSystem { vertex: usize },
    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("network has no boundary vertex")]
    NoBoundary,
    #[error("poisson solve needs a source term")]
    MissingSource,
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("need at least 3 refinement levels, got {got}")]
    InsufficientLevels { got: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Boundary data and optional source for `Δu = f`.
#[derive(Clone)]
pub struct DirichletSpec {
    /// Value on the outer loop.
    pub e1: f64,
    /// Value on the inner loop.
    pub e2: f64,
    /// Overrides the label values when set.
    pub boundary: Option<PointFn>,
    pub source: Option<PointFn>,
}

impl std::fmt::Debug for DirichletSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletSpec")
            .field("e1", &self.e1)
            .field("e2", &self.e2)
            .field("boundary", &self.boundary.is_some())
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl Default for DirichletSpec {
    fn default() -> Self {
        DirichletSpec { e1: 1.0, e2: 0.0, boundary: None, source: None }
    }
}

impl DirichletSpec {
    /// Zero boundary values with source `f`.
    pub fn homogeneous(f: PointFn) -> Self {
        DirichletSpec { e1: 0.0, e2: 0.0, boundary: None, source: Some(f) }
    }

    pub fn with_labels(e1: f64, e2: f64) -> Self {
        DirichletSpec { e1, e2, ..Default::default() }
    }

    fn value(&self, label: BoundaryLabel, p: Point) -> f64 {
        if let Some(b) = &self.boundary {
            return b(p);
        }
        match label {
            BoundaryLabel::E1 => self.e1,
            BoundaryLabel::E2 => self.e2,
            BoundaryLabel::Interior => unreachable!("interior vertex has no boundary value"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Defaults to `50·sqrt(unknowns)`.
    pub max_iter: Option<usize>,
    /// Starting values for the interior unknowns, indexed by mesh vertex.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: None, initial: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual of the reduced system.
    pub residual: f64,
    pub elapsed: Duration,
}

/// Compressed sparse rows.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

const PAR_ROWS: usize = 8192;

impl CsrMatrix {
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        let row = |i: usize| -> f64 {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum()
        };
        if self.n >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).find(|&k| self.cols[k] == i).map_or(0.0, |k| self.vals[k]))
            .collect()
    }
}

/// Interior-only system `A u = b` after eliminating boundary values.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Mesh vertex of each unknown.
    pub unknowns: Vec<usize>,
    /// Full vertex vector with boundary values filled in and interior zeros.
    pub boundary_values: Vec<f64>,
}

/// Assembles `sum_j c_ij (u_i - u_j) = -∫_{Ω_i} f` on interior rows.
pub fn reduced_system(
    net: &Network,
    v: Option<&VoronoiDiagram>,
    spec: &DirichletSpec,
) -> Result<ReducedSystem, SolverError> {
    let mesh = net.mesh();
    let n = mesh.num_vertices();
    if !(0..n).any(|i| mesh.is_boundary_vertex(i)) {
        return Err(SolverError::NoBoundary);
    }
    check_grounded(net)?;
    let mut slot = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    let mut full = vec![0.0; n];
    for i in 0..n {
        if mesh.is_boundary_vertex(i) {
            full[i] = spec.value(mesh.label(i), mesh.vertex(i));
        } else {
            slot[i] = unknowns.len();
            unknowns.push(i);
        }
    }
    let source = match (&spec.source, v) {
        (Some(f), Some(v)) => Some((f, v)),
        (Some(_), None) => return Err(SolverError::MissingSource),
        _ => None,
    };
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut rhs = Vec::with_capacity(unknowns.len());
    for (r, &i) in unknowns.iter().enumerate() {
        let mut diag = 0.0;
        let mut b = 0.0;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (j, c) in net.neighbors(i) {
            if c == 0.0 {
                continue;
            }
            diag += c;
            if slot[j] == usize::MAX {
                b += c * full[j];
            } else {
                row.push((slot[j], -c));
            }
        }
        if diag <= 0.0 {
            return Err(SolverError::SingularSystem { vertex: i });
        }
        row.push((r, diag));
        row.sort_by_key(|e| e.0);
        for (col, val) in row {
            cols.push(col);
            vals.push(val);
        }
        row_ptr.push(cols.len());
        if let Some((f, v)) = source {
            b -= cell_integral(v, i, f.as_ref());
        }
        rhs.push(b);
    }
    let matrix = CsrMatrix { n: unknowns.len(), row_ptr, cols, vals };
    Ok(ReducedSystem { matrix, rhs, unknowns, boundary_values: full })
}

/// Every interior vertex must reach the boundary through positive conductances.
fn check_grounded(net: &Network) -> Result<(), SolverError> {
    let mesh = net.mesh();
    let n = mesh.num_vertices();
    let mut seen: Vec<bool> = (0..n).map(|i| mesh.is_boundary_vertex(i)).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| seen[i]).collect();
    while let Some(i) = queue.pop_front() {
        for (j, c) in net.neighbors(i) {
            if c > 0.0 && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(vertex) => Err(SolverError::SingularSystem { vertex }),
        None => Ok(()),
    }
}

/// `∫_{Ω_i} f` over the control volume: each incident triangle contributes the
/// quadrilateral (x_i, mid(i,a), circumcenter, mid(i,b)) split in two, with the
/// edge-midpoint rule on each piece.
pub fn cell_integral(v: &VoronoiDiagram, i: usize, f: &(dyn Fn(Point) -> f64 + Send + Sync)) -> f64 {
    let mesh = v.mesh();
    let xi = mesh.vertex(i);
    let mut s = 0.0;
    for t in mesh.vertex_fan(i) {
        let ma = xi.midpoint(mesh.vertex(mesh.fan_incoming(i, t)));
        let mb = xi.midpoint(mesh.vertex(mesh.fan_outgoing(i, t)));
        let c = v.circumcenter(t);
        s += midpoint_rule(xi, ma, c, f) + midpoint_rule(xi, c, mb, f);
    }
    s
}

fn midpoint_rule(a: Point, b: Point, c: Point, f: &(dyn Fn(Point) -> f64 + Send + Sync)) -> f64 {
    let area = 0.5 * orient(a, b, c);
    if area == 0.0 {
        return 0.0;
    }
    area * (f(a.midpoint(b)) + f(b.midpoint(c)) + f(c.midpoint(a))) / 3.0
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<(usize, f64), SolverError> {
    let n = a.n;
    let bnorm = norm(b);
    if n == 0 || bnorm == 0.0 {
        // homogeneous system with SPD matrix has the zero solution
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
        }
        return Ok((0, 0.0));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = a.mul(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rel = norm(&r) / bnorm;
    if rel <= tol {
        return Ok((0, rel));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rel = norm(&r) / bnorm;
        if rel <= tol {
            // confirm against the true residual to guard against drift
            let ax = a.mul(x);
            let true_rel = norm(&b.iter().zip(&ax).map(|(b, y)| b - y).collect::<Vec<_>>()) / bnorm;
            if true_rel <= tol * 10.0 {
                return Ok((it, true_rel));
            }
            r = b.iter().zip(&ax).map(|(b, y)| b - y).collect();
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NoConvergence { iterations: max_iter, residual: rel })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() >= PAR_ROWS {
        // fixed chunks keep the sum independent of thread scheduling
        let parts: Vec<f64> =
            a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
        parts.iter().sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn solve_system(sys: ReducedSystem, mesh: &Arc<Triangulation>, opts: &SolverOptions) -> Result<(ScalarField, SolveReport), SolverError> {
    let start = Instant::now();
    let n = sys.unknowns.len();
    let mut x: Vec<f64> = match &opts.initial {
        Some(init) => sys.unknowns.iter().map(|&i| init[i]).collect(),
        None => vec![0.0; n],
    };
    let cap = opts.max_iter.unwrap_or_else(|| ((50.0 * (n as f64).sqrt()).ceil() as usize).max(1));
    let (iterations, residual) = pcg(&sys.matrix, &sys.rhs, &mut x, opts.tol, cap)?;
    let mut values = sys.boundary_values;
    for (k, &i) in sys.unknowns.iter().enumerate() {
        values[i] = x[k];
    }
    let field = ScalarField::new(mesh.clone(), values)?;
    Ok((field, SolveReport { iterations, residual, elapsed: start.elapsed() }))
}

/// Discrete harmonic extension of the boundary data in `spec` (its source is ignored).
pub fn solve_dirichlet(net: &Network, spec: &DirichletSpec, opts: &SolverOptions) -> Result<(ScalarField, SolveReport), SolverError> {
    let spec = DirichletSpec { source: None, ..spec.clone() };
    let sys = reduced_system(net, None, &spec)?;
    solve_system(sys, net.mesh(), opts)
}

/// Finite-volume solve of `sum_j c_ij (u_j - u_i) = ∫_{Ω_i} f` with the spec's boundary values.
pub fn solve_poisson_fvm(
    net: &Network,
    v: &VoronoiDiagram,
    spec: &DirichletSpec,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveReport), SolverError> {
    if spec.source.is_none() {
        return Err(SolverError::MissingSource);
    }
    if !Arc::ptr_eq(net.mesh(), v.mesh()) {
        return Err(SolverError::MeshMismatch);
    }
    let sys = reduced_system(net, Some(v), spec)?;
    solve_system(sys, net.mesh(), opts)
}

/// `g = ũ + h̃` at every vertex.
pub fn compose_g(u_tilde: &ScalarField, h_tilde: impl Fn(Point) -> f64) -> ScalarField {
    let mesh = u_tilde.mesh().clone();
    let values = u_tilde.values().iter().zip(mesh.vertices()).map(|(u, &p)| u + h_tilde(p)).collect();
    ScalarField::new(mesh, values).expect("finite composition")
}

/// Vertexwise sum of two fields on the same mesh.
pub fn compose_fields(u_tilde: &ScalarField, projected: &ScalarField) -> Result<ScalarField, SolverError> {
    if !u_tilde.same_mesh(projected) {
        return Err(SolverError::MeshMismatch);
    }
    let values = u_tilde.values().iter().zip(projected.values()).map(|(a, b)| a + b).collect();
    Ok(ScalarField::new(u_tilde.mesh().clone(), values)?)
}

/// One refinement level for [`estimate_harmonic_order`].
pub struct HarmonicSample<'a> {
    pub net: &'a Network,
    pub g: &'a ScalarField,
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicOrder {
    /// Least-squares slope of log max|Δg| against log λ.
    pub alpha_lambda: f64,
    /// Same against log ρ.
    pub alpha_rho: f64,
    /// max |Δg| over the compact set at each level.
    pub residuals: Vec<f64>,
}

/// Fits the decay order of `max |Δg|` over interior vertices inside `compact`.
/// Returns `+∞` exponents when every level is discrete harmonic to solver precision.
pub fn estimate_harmonic_order(
    samples: &[HarmonicSample<'_>],
    compact: impl Fn(Point) -> bool,
) -> Result<HarmonicOrder, SolverError> {
    if samples.len() < 3 {
        return Err(SolverError::InsufficientLevels { got: samples.len() });
    }
    let mut residuals = Vec::with_capacity(samples.len());
    let mut at_floor = true;
    for s in samples {
        let mesh = s.net.mesh();
        if !Arc::ptr_eq(mesh, s.g.mesh()) {
            return Err(SolverError::MeshMismatch);
        }
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..mesh.num_vertices() {
            if mesh.is_boundary_vertex(i) || !compact(mesh.vertex(i)) {
                continue;
            }
            worst = worst.max(s.net.laplacian_values(s.g.values(), i).abs());
            scale = scale.max(s.net.degree(i) * (1.0 + s.g.max_abs()));
        }
        at_floor &= worst <= 1e-9 * scale;
        residuals.push(worst);
    }
    if at_floor {
        return Ok(HarmonicOrder { alpha_lambda: f64::INFINITY, alpha_rho: f64::INFINITY, residuals });
    }
    let logs: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let lam: Vec<f64> = samples.iter().map(|s| s.lambda.ln()).collect();
    let rho: Vec<f64> = samples.iter().map(|s| s.rho.ln()).collect();
    Ok(HarmonicOrder { alpha_lambda: slope(&lam, &logs), alpha_rho: slope(&rho, &logs), residuals })
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// `max_i |sum_j c_ij (g_j - g_i) - ∫_{Ω_i} f|` over interior cells admitted by `cells`.
pub fn flux_residual_per_cell(
    net: &Network,
    v: &VoronoiDiagram,
    g: &ScalarField,
    f: &(dyn Fn(Point) -> f64 + Send + Sync),
    cells: impl Fn(usize) -> bool,
) -> f64 {
    let mesh = net.mesh();
    (0..mesh.num_vertices())
        .filter(|&i| !mesh.is_boundary_vertex(i) && cells(i))
        .map(|i| (-net.laplacian_values(g.values(), i) - cell_integral(v, i, f)).abs())
        .fold(0.0, f64::max)
}

/// `field v1` dump: one `index value` line per vertex.
pub fn write_field<W: Write>(values: &[f64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "field v1")?;
    for (i, x) in values.iter().enumerate() {
        writeln!(w, "{i} {x:.16e}")?;
    }
    Ok(())
}

pub fn read_field(text: &str) -> Result<Vec<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("field v1") {
        return Err("missing `field v1` header".into());
    }
    let mut out = Vec::new();
    for l in lines {
        let mut it = l.split_whitespace();
        let (Some(i), Some(x), None) = (it.next(), it.next(), it.next()) else {
            return Err(format!("unexpected line `{l}`"));
        };
        let i: usize = i.parse().map_err(|_| format!("bad index in `{l}`"))?;
        if i != out.len() {
            return Err(format!("index {i} out of order"));
        }
        out.push(x.parse().map_err(|_| format!("bad value in `{l}`"))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_triangulation, build_voronoi, generate_round_annulus, RoundAnnulus};
    use crate::network::build_network;

    /// Three rows of N+1 lattice points; only the middle row carries conductance 1,
    /// so the interior unknowns form a chain pinned at its two ends.
    fn ladder(n: usize) -> Network {
        let mut v = Vec::new();
        for y in 0..3 {
            for k in 0..=n {
                v.push(Point::new(k as f64, y as f64));
            }
        }
        let id = |k: usize, y: usize| y * (n + 1) + k;
        let mut t = Vec::new();
        for y in 0..2 {
            for k in 0..n {
                t.push([id(k, y), id(k + 1, y), id(k + 1, y + 1)]);
                t.push([id(k, y), id(k + 1, y + 1), id(k, y + 1)]);
            }
        }
        let mesh = Arc::new(build_triangulation(v, t, None).unwrap());
        let cond = mesh
            .edges()
            .iter()
            .map(|e| {
                let (p, q) = (mesh.vertex(e.v[0]), mesh.vertex(e.v[1]));
                if p.y == 1.0 && q.y == 1.0 { 1.0 } else { 0.0 }
            })
            .collect();
        Network::from_conductances(mesh, cond).unwrap()
    }

    #[test]
    fn ladder_gives_linear_ramp() {
        let n = 8;
        let net = ladder(n);
        let spec = DirichletSpec {
            boundary: Some(Arc::new(move |p: Point| if p.x == 0.0 { 1.0 } else { 0.0 })),
            ..Default::default()
        };
        let (u, _) = solve_dirichlet(&net, &spec, &SolverOptions::default()).unwrap();
        for (i, p) in net.mesh().vertices().iter().enumerate() {
            if p.y == 1.0 {
                assert!((u.get(i) - (1.0 - p.x / n as f64)).abs() < 1e-14, "{p:?}");
            }
        }
    }

    #[test]
    fn maximum_principle_on_round_annulus() {
        let r = RoundAnnulus::new(1.0, 2.0, 0.25).unwrap();
        let mesh = Arc::new(generate_round_annulus(&r, 0).unwrap());
        let vd = build_voronoi(mesh.clone()).unwrap();
        let net = build_network(&vd).unwrap();
        let (u, rep) = solve_dirichlet(&net, &DirichletSpec::default(), &SolverOptions::default()).unwrap();
        assert!(rep.residual <= 1e-11);
        let mut worst: f64 = 0.0;
        for i in 0..mesh.num_vertices() {
            if !mesh.is_boundary_vertex(i) {
                assert!(u.get(i) > 0.0 && u.get(i) < 1.0);
                let exact = mesh.vertex(i).norm().ln() / 2f64.ln();
                worst = worst.max((u.get(i) - exact).abs());
            }
        }
        assert!(worst < 5e-3, "{worst}");
    }

    #[test]
    fn zero_source_gives_zero() {
        let r = RoundAnnulus::new(1.0, 2.0, 0.5).unwrap();
        let mesh = Arc::new(generate_round_annulus(&r, 0).unwrap());
        let vd = build_voronoi(mesh.clone()).unwrap();
        let net = build_network(&vd).unwrap();
        let spec = DirichletSpec::homogeneous(Arc::new(|_| 0.0));
        let (u, rep) = solve_poisson_fvm(&net, &vd, &spec, &SolverOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(u.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cell_quadrature_is_exact_for_affine() {
        let r = RoundAnnulus::new(1.0, 2.0, 0.5).unwrap();
        let mesh = Arc::new(generate_round_annulus(&r, 0).unwrap());
        let vd = build_voronoi(mesh.clone()).unwrap();
        let one: f64 = (0..mesh.num_vertices()).map(|i| cell_integral(&vd, i, &|_| 1.0)).sum();
        let area: f64 = vd.cell_areas().iter().sum();
        assert!((one - area).abs() < 1e-12);
        for i in 0..mesh.num_vertices() {
            // ∫ (x - x_c) over a cell vanishes at its centroid, so compare with centroid·area
            let ix = cell_integral(&vd, i, &|p| p.x);
            let poly = vd.cell_polygon(i);
            let cx = centroid_x(&poly);
            assert!((ix - cx * vd.cell_area(i)).abs() < 1e-12, "cell {i}");
        }
    }

    fn centroid_x(poly: &[Point]) -> f64 {
        let n = poly.len();
        let (mut a, mut cx) = (0.0, 0.0);
        for k in 0..n {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            let w = p.cross(q);
            a += w;
            cx += (p.x + q.x) * w;
        }
        cx / (3.0 * a)
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = RoundAnnulus::new(1.0, 2.0, 0.25).unwrap();
        let mesh = Arc::new(generate_round_annulus(&r, 0).unwrap());
        let net = build_network(&build_voronoi(mesh).unwrap()).unwrap();
        let opts = SolverOptions { max_iter: Some(2), ..Default::default() };
        assert!(matches!(
            solve_dirichlet(&net, &DirichletSpec::default(), &opts),
            Err(SolverError::NoConvergence { iterations: 2, .. })
        ));
    }

    #[test]
    fn insufficient_levels() {
        assert!(matches!(estimate_harmonic_order(&[], |_| true), Err(SolverError::InsufficientLevels { got: 0 })));
    }

    #[test]
    fn field_dump_round_trip() {
        let vals = vec![0.1, -2.5e-300, 1.0 / 3.0];
        let mut buf = Vec::new();
        write_field(&vals, &mut buf).unwrap();
        assert_eq!(read_field(std::str::from_utf8(&buf).unwrap()).unwrap(), vals);
    }
}
