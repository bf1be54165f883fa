//! Discrete conformal maps of annuli onto round annuli, and refinement studies.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::conjugate::{conjugate_field, winding_loop, ConjugateError, ConjugateField, ConjugateOptions};
use crate::geometry::{
    build_voronoi, generate_annulus_mesh, generate_round_annulus, AnnulusShape, BoundaryLabel, GeometryError, RoundAnnulus, Triangulation,
    VoronoiDiagram,
};
use crate::network::{build_network, Network, NetworkError, ScalarField};
use crate::point::{winding_number, Point};
use crate::solver::{
    compose_g, estimate_harmonic_order, slope, solve_dirichlet, solve_poisson_fvm, DirichletSpec, HarmonicOrder,
    HarmonicSample, PointFn, SolveReport, SolverError, SolverOptions,
};

#[derive(Debug, Error)]
pub enum UniformizeError {
    #[error("period must be positive and finite, got {period}")]
    ZeroPeriod { period: f64 },
    #[error("potential and conjugate live on different meshes")]
    MismatchedSupports,
    #[error("point ({x}, {y}) is not covered by an interior Voronoi cell")]
    OutsideSupport { x: f64, y: f64 },
    #[error("need at least {need} levels, got {got}")]
    InsufficientLevels { need: usize, got: usize },
    #[error("mesh: {0}")]
    Geometry(#[from] GeometryError),
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("conjugate: {0}")]
    Conjugate(#[from] ConjugateError),
}

/// `φ = exp(2π/P · (g + i ḡ*))` onto the annulus `1 < |w| < exp(2π/P)`.
#[derive(Debug, Clone)]
pub struct AnnulusMap {
    g: ScalarField,
    conj: ConjugateField,
    period: f64,
    r2: f64,
}

/// Map with the conjugate's own period.
pub fn annulus_map(g: ScalarField, conj: ConjugateField) -> Result<AnnulusMap, UniformizeError> {
    let p = conj.period();
    annulus_map_with_period(g, conj, p)
}

/// Map with an explicit period, e.g. the magnitude of a clockwise flux.
pub fn annulus_map_with_period(g: ScalarField, conj: ConjugateField, period: f64) -> Result<AnnulusMap, UniformizeError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(UniformizeError::ZeroPeriod { period });
    }
    if !Arc::ptr_eq(g.mesh(), conj.voronoi().mesh()) {
        return Err(UniformizeError::MismatchedSupports);
    }
    Ok(AnnulusMap { g, conj, period, r2: (TAU / period).exp() })
}

impl AnnulusMap {
    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn conj(&self) -> &ConjugateField {
        &self.conj
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn r1(&self) -> f64 {
        1.0
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn voronoi(&self) -> &Arc<VoronoiDiagram> {
        self.conj.voronoi()
    }

    pub fn mesh(&self) -> &Arc<Triangulation> {
        self.g.mesh()
    }

    fn phi(&self, g: f64, c: f64) -> Complex64 {
        (Complex64::new(g, c) * (TAU / self.period)).exp()
    }

    /// Potential at a Voronoi vertex.
    pub fn g_at_voronoi(&self, w: usize) -> f64 {
        let v = self.voronoi();
        let mesh = self.mesh();
        match v.clip_edge(w) {
            Some(e) => {
                let [a, b] = mesh.edge(e).v;
                0.5 * (self.g.get(a) + self.g.get(b))
            }
            None => {
                let bc = crate::geometry::barycentric(mesh.corners(w), v.point(w));
                self.g.eval_in(w, bc)
            }
        }
    }

    /// Image of a Voronoi vertex, using its stored conjugate value.
    pub fn vertex_image(&self, w: usize) -> Complex64 {
        self.phi(self.g_at_voronoi(w), self.conj.get(w))
    }

    /// Conjugate values around interior cell `i`, shifted onto one branch.
    fn cell_branch(&self, i: usize) -> Vec<f64> {
        let v = self.voronoi();
        let cell = v.cell(i);
        let mut local = self.conj.get(cell[0]);
        let mut out = Vec::with_capacity(cell.len());
        for (k, &w) in cell.iter().enumerate() {
            if k > 0 {
                let e = v.dual_between(cell[k - 1], w).expect("cell vertices are adjacent");
                local += self.conj.increment(e, cell[k - 1]);
            }
            let stored = self.conj.get(w);
            out.push(stored + self.period * ((local - stored) / self.period).round());
        }
        out
    }

    /// Conjugate at `p` inside interior cell `i`, affine on the fan of the cell.
    fn conj_in_cell(&self, i: usize, p: Point) -> f64 {
        let v = self.voronoi();
        let cell = v.cell(i);
        let vals = self.cell_branch(i);
        let mut best: Option<(f64, f64)> = None;
        let w0 = v.point(cell[0]);
        for k in 1..cell.len().saturating_sub(1) {
            let (a, b) = (v.point(cell[k]), v.point(cell[k + 1]));
            if crate::point::orient(w0, a, b).abs() <= 1e-14 * self.mesh().mesh_size().powi(2) {
                continue;
            }
            let bc = crate::geometry::barycentric([w0, a, b], p);
            let worst = bc[0].min(bc[1]).min(bc[2]);
            let val = bc[0] * vals[0] + bc[1] * vals[k] + bc[2] * vals[k + 1];
            if best.is_none_or(|(bw, _)| worst > bw) {
                best = Some((worst, val));
            }
        }
        best.map_or(vals[0], |(_, v)| v)
    }
}

/// Evaluates the map at an arbitrary point: `g` affinely on its triangle, the
/// conjugate affinely on the fan of the containing Voronoi cell.
pub fn evaluate_map(m: &AnnulusMap, p: Point) -> Result<Complex64, UniformizeError> {
    let outside = UniformizeError::OutsideSupport { x: p.x, y: p.y };
    let mesh = m.mesh();
    let (t, bc) = mesh.locate(p).ok_or(outside)?;
    let g = m.g.eval_in(t, bc);
    let tri = mesh.triangles()[t];
    let i = *tri.iter().min_by(|&&a, &&b| mesh.vertex(a).dist(p).total_cmp(&mesh.vertex(b).dist(p))).unwrap();
    if mesh.is_boundary_vertex(i) {
        return Err(UniformizeError::OutsideSupport { x: p.x, y: p.y });
    }
    Ok(m.phi(g, m.conj_in_cell(i, p)))
}

/// Relative deviation of `|φ|` from the target radius on the Voronoi vertices of
/// triangles that have an edge on the inner (first) and outer (second) boundary.
pub fn boundary_circularity(m: &AnnulusMap) -> (f64, f64) {
    let mesh = m.mesh();
    let (mut inner, mut outer): (f64, f64) = (0.0, 0.0);
    for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
        let t = e.left.or(e.right).unwrap();
        let modulus = m.vertex_image(t).norm();
        match mesh.label(e.v[0]) {
            BoundaryLabel::E2 => inner = inner.max((modulus - 1.0).abs()),
            BoundaryLabel::E1 => outer = outer.max((modulus - m.r2).abs() / m.r2),
            BoundaryLabel::Interior => {}
        }
    }
    (inner, outer)
}

/// Winding number of the image of a counter-clockwise loop around the hole.
pub fn map_winding(m: &AnnulusMap) -> Result<i64, UniformizeError> {
    let lp = winding_loop(m.voronoi(), 1)?;
    let pts: Vec<Point> = lp[..lp.len() - 1].iter().map(|&w| Point::from_complex(m.vertex_image(w))).collect();
    Ok(winding_number(&pts, Point::default()))
}

/// Every stage of the pipeline for one mesh.
#[derive(Debug, Clone)]
pub struct AnnulusSolution {
    pub voronoi: Arc<VoronoiDiagram>,
    pub network: Network,
    pub report: SolveReport,
    pub map: AnnulusMap,
}

impl AnnulusSolution {
    pub fn mesh(&self) -> &Arc<Triangulation> {
        self.voronoi.mesh()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub solver: SolverOptions,
    pub conjugate: ConjugateOptions,
    pub boundary: DirichletSpec,
}

/// mesh → Voronoi → network → harmonic solve → conjugate → map.
pub fn solve_annulus(mesh: Triangulation, opts: &PipelineOptions) -> Result<AnnulusSolution, UniformizeError> {
    let voronoi = Arc::new(build_voronoi(Arc::new(mesh))?);
    let network = build_network(&voronoi)?;
    let (g, report) = solve_dirichlet(&network, &opts.boundary, &opts.solver)?;
    let conj = conjugate_field(&network, &voronoi, &g, &opts.conjugate)?;
    let period = conj.period();
    let map = annulus_map_with_period(g, conj, period.abs())?;
    Ok(AnnulusSolution { voronoi, network, report, map })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub rho: f64,
    pub lambda: f64,
    pub potential_error: f64,
    pub period: f64,
    pub period_error: f64,
    pub circularity_error: f64,
    pub map_error: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// True when errors are measured against the closed-form round-annulus solution.
    pub oracle: bool,
    /// `max |g_l - g_{l+1}|` at the vertices of level `l`.
    pub successive: Vec<f64>,
}

impl ConvergenceTable {
    /// Log-log slope of the potential error against ρ.
    pub fn potential_rate(&self) -> f64 {
        let rows: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.potential_error > 0.0).collect();
        let x: Vec<f64> = rows.iter().map(|r| r.rho.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.potential_error.ln()).collect();
        slope(&x, &y)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,rho,lambda,potential_error,period,period_error,circularity_error,map_error\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.level, r.rho, r.lambda, r.potential_error, r.period, r.period_error, r.circularity_error, r.map_error
            ));
        }
        s
    }
}

/// Closed-form data for a round annulus with potential 1 on the outer circle.
#[derive(Debug, Clone, Copy)]
pub struct RoundOracle {
    pub annulus: RoundAnnulus,
}

impl RoundOracle {
    pub fn potential(&self, p: Point) -> f64 {
        let r = (p - self.annulus.center).norm();
        (r / self.annulus.a).ln() / (self.annulus.b / self.annulus.a).ln()
    }

    pub fn period(&self) -> f64 {
        TAU / (self.annulus.b / self.annulus.a).ln()
    }

    pub fn map(&self, p: Point) -> Complex64 {
        (p - self.annulus.center).to_complex() / self.annulus.a
    }

    /// Rings at 1/4, 1/2 and 3/4 of the radial extent, 24 points each.
    pub fn probes(&self) -> Vec<Point> {
        let RoundAnnulus { center, a, b, .. } = self.annulus;
        let mut out = Vec::new();
        for f in [0.25, 0.5, 0.75] {
            for k in 0..24 {
                out.push(center + Point::from_polar(a + f * (b - a), (k as f64 + 0.5) * TAU / 24.0));
            }
        }
        out
    }
}

impl RoundOracle {
    /// Smooth, non-harmonic extension of the boundary data with its Laplacian:
    /// `(r² - a²)/(b² - a²) + q(r) cos θ` with `q` vanishing on both circles.
    pub fn extension(&self) -> (PointFn, PointFn) {
        let RoundAnnulus { center, a, b, .. } = self.annulus;
        let k = 0.2 / ((b - a) * (b - a));
        let radial = move |p: Point| {
            let d = p - center;
            (d, d.norm())
        };
        let h: PointFn = Arc::new(move |p| {
            let (d, r) = radial(p);
            (r * r - a * a) / (b * b - a * a) + k * (r - a) * (b - r) * d.x
        });
        let lap: PointFn = Arc::new(move |p| {
            let (d, r) = radial(p);
            let q = k * r * (r - a) * (b - r);
            let dq = k * (-3.0 * r * r + 2.0 * (a + b) * r - a * b);
            let ddq = k * (-6.0 * r + 2.0 * (a + b));
            4.0 / (b * b - a * a) + (ddq + dq / r - q / (r * r)) * d.x / r
        });
        (h, lap)
    }
}

/// Residual decay of `g = ũ + Π(h̃)` on successive round-annulus meshes.
#[derive(Debug, Clone)]
pub struct HarmonicStudy {
    pub order: HarmonicOrder,
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Solves `Δũ = -Δh̃` with zero boundary values, composes `g = ũ + Π(h̃)` and fits
/// the decay of `max |Δg|` over the middle half of the annulus.
pub fn round_harmonic_order(ann: &RoundAnnulus, levels: u32, opts: &SolverOptions) -> Result<HarmonicStudy, UniformizeError> {
    let oracle = RoundOracle { annulus: *ann };
    let (h, lap) = oracle.extension();
    let fields: Vec<(Network, ScalarField, f64, f64)> = (0..levels)
        .into_par_iter()
        .map(|l| {
            let v = build_voronoi(Arc::new(generate_round_annulus(ann, l)?))?;
            let net = build_network(&v)?;
            let lap = lap.clone();
            let spec = DirichletSpec::homogeneous(Arc::new(move |p| -lap(p)));
            let (u_tilde, _) = solve_poisson_fvm(&net, &v, &spec, opts)?;
            let g = compose_g(&u_tilde, |p| h(p));
            Ok((net, g, v.lambda(), v.mesh().mesh_size()))
        })
        .collect::<Result<_, UniformizeError>>()?;
    let samples: Vec<HarmonicSample> =
        fields.iter().map(|(net, g, lambda, rho)| HarmonicSample { net, g, lambda: *lambda, rho: *rho }).collect();
    let (lo, hi) = (0.75 * ann.a + 0.25 * ann.b, 0.25 * ann.a + 0.75 * ann.b);
    let order = estimate_harmonic_order(&samples, |p| (lo..=hi).contains(&(p - ann.center).norm()))?;
    Ok(HarmonicStudy {
        order,
        lambda: fields.iter().map(|f| f.2).collect(),
        rho: fields.iter().map(|f| f.3).collect(),
    })
}

/// Largest distance between two maps on `probes` after rotating the first onto
/// the second at `probes[0]`.
pub fn aligned_map_error(
    probes: &[Point],
    a: impl Fn(Point) -> Result<Complex64, UniformizeError>,
    b: impl Fn(Point) -> Result<Complex64, UniformizeError>,
) -> Result<f64, UniformizeError> {
    let (a0, b0) = (a(probes[0])?, b(probes[0])?);
    let rot = Complex64::from_polar(1.0, (b0 / a0).arg());
    let mut worst: f64 = 0.0;
    for &p in probes {
        worst = worst.max((a(p)? * rot - b(p)?).norm());
    }
    Ok(worst)
}

/// Result of [`convergence_study`]: the table plus every level's solution.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub table: ConvergenceTable,
    pub levels: Vec<AnnulusSolution>,
}

/// Runs the pipeline on `levels` refinement levels (in parallel) and tabulates errors,
/// against the closed form for round annuli and against the finest level otherwise.
/// `seed` picks the map probes among the coarse interior vertices when there is no closed form.
pub fn convergence_study(
    shape: &AnnulusShape,
    levels: u32,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<ConvergenceStudy, UniformizeError> {
    if levels < 3 {
        return Err(UniformizeError::InsufficientLevels { need: 3, got: levels as usize });
    }
    let sols: Vec<AnnulusSolution> = (0..levels)
        .into_par_iter()
        .map(|l| solve_annulus(generate_annulus_mesh(shape, l)?, opts))
        .collect::<Result<_, _>>()?;

    let oracle = match shape {
        AnnulusShape::Round(r) => Some(RoundOracle { annulus: *r }),
        AnnulusShape::Lattice { .. } => None,
    };
    let finest = sols.last().unwrap();
    let probes = match &oracle {
        Some(o) => o.probes(),
        None => {
            let m0 = sols[0].mesh();
            let interior: Vec<usize> = (0..m0.num_vertices()).filter(|&i| !m0.is_boundary_vertex(i)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample(&mut rng, interior.len(), interior.len().min(64)).iter().map(|k| m0.vertex(interior[k])).collect()
        }
    };

    let mut rows = Vec::with_capacity(sols.len());
    for (l, s) in sols.iter().enumerate() {
        let mesh = s.mesh();
        let g = s.map.g();
        let (potential_error, period_error, map_error) = match &oracle {
            Some(o) => (
                (0..mesh.num_vertices()).map(|i| (g.get(i) - o.potential(mesh.vertex(i))).abs()).fold(0.0, f64::max),
                (s.map.period() - o.period()).abs(),
                aligned_map_error(&probes, |p| evaluate_map(&s.map, p), |p| Ok(o.map(p)))?,
            ),
            None => (
                field_gap(g, finest.map.g()),
                (s.map.period() - finest.map.period()).abs(),
                aligned_map_error(&probes, |p| evaluate_map(&s.map, p), |p| evaluate_map(&finest.map, p))?,
            ),
        };
        let (ci, co) = boundary_circularity(&s.map);
        rows.push(ConvergenceRow {
            level: l as u32,
            rho: mesh.mesh_size(),
            lambda: s.voronoi.lambda(),
            potential_error,
            period: s.map.period(),
            period_error,
            circularity_error: ci.max(co),
            map_error,
        });
    }
    let successive = sols.windows(2).map(|w| field_gap(w[0].map.g(), w[1].map.g())).collect();
    Ok(ConvergenceStudy { table: ConvergenceTable { rows, oracle: oracle.is_some(), successive }, levels: sols })
}

/// `max |coarse(x) - fine(x)|` over the coarse vertices.
pub fn field_gap(coarse: &ScalarField, fine: &ScalarField) -> f64 {
    coarse
        .mesh()
        .vertices()
        .iter()
        .zip(coarse.values())
        .map(|(&p, &v)| fine.eval(p).map_or(f64::INFINITY, |f| (f - v).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(level: u32) -> AnnulusSolution {
        let r = RoundAnnulus::new(1.0, 2.0, 0.25).unwrap();
        solve_annulus(generate_round_annulus(&r, level).unwrap(), &PipelineOptions::default()).unwrap()
    }

    #[test]
    fn radii_follow_the_period() {
        let s = round(0);
        assert_eq!(s.map.r1(), 1.0);
        assert_eq!(s.map.r2(), (TAU / s.map.period()).exp());
        // inner boundary maps to the unit circle, outer to R2
        let mesh = s.mesh();
        for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
            let w = s.voronoi.edge_clip(mesh.edge_between(e.v[0], e.v[1]).unwrap()).unwrap();
            let r = s.map.vertex_image(w).norm();
            let target = if mesh.label(e.v[0]) == BoundaryLabel::E2 { 1.0 } else { s.map.r2() };
            assert!((r - target).abs() < 1e-12 * target);
        }
    }

    #[test]
    fn voronoi_vertices_are_reproduced() {
        let s = round(0);
        let v = s.voronoi.clone();
        let mut checked = 0;
        for w in 0..v.mesh().num_triangles() {
            let tri = v.mesh().triangles()[w];
            if tri.iter().any(|&i| v.mesh().is_boundary_vertex(i)) {
                continue;
            }
            let z = evaluate_map(&s.map, v.point(w)).unwrap();
            assert!((z - s.map.vertex_image(w)).norm() < 1e-12 * z.norm(), "vertex {w}");
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn branch_is_consistent_across_the_slit() {
        let s = round(1);
        // default slit runs along the positive x axis
        for y in [1e-3, 5e-3] {
            for x in [1.3, 1.5, 1.7] {
                let above = evaluate_map(&s.map, Point::new(x, y)).unwrap();
                let below = evaluate_map(&s.map, Point::new(x, -y)).unwrap();
                let across = evaluate_map(&s.map, Point::new(x, 0.0)).unwrap();
                assert!((above - across).norm() < 0.02 * across.norm());
                assert!((below - across).norm() < 0.02 * across.norm());
            }
        }
    }

    #[test]
    fn map_winds_once() {
        assert_eq!(map_winding(&round(0).map).unwrap(), 1);
    }

    #[test]
    fn boundary_points_are_outside_support() {
        let s = round(0);
        assert!(matches!(evaluate_map(&s.map, Point::new(3.0, 0.0)), Err(UniformizeError::OutsideSupport { .. })));
        assert!(matches!(evaluate_map(&s.map, Point::new(0.0, 1.999)), Err(UniformizeError::OutsideSupport { .. })));
    }

    #[test]
    fn period_must_be_positive() {
        let s = round(0);
        let err = annulus_map_with_period(s.map.g().clone(), s.map.conj().clone(), 0.0).unwrap_err();
        assert!(matches!(err, UniformizeError::ZeroPeriod { .. }));
    }
}
