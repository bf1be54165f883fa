//! Riemann maps of simply connected lattice polygons by exhaustion with annuli.
//!
//! A small square hole `Θ_n` is cut around the puncture, the annulus between
//! it and the outer polygon is mapped with potential 1 on the hole, and the
//! result is inverted so the outer polygon lands on the unit circle.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::conjugate::ConjugateOptions;
use crate::geometry::{generate_lattice_annulus, square_loop, GeometryError, PolygonalAnnulus};
use crate::point::{loop_distance, point_in_polygon, Point};
use crate::solver::{DirichletSpec, SolverOptions};
use crate::uniformize::{evaluate_map, solve_annulus, AnnulusMap, AnnulusSolution, PipelineOptions, UniformizeError};

#[derive(Debug, Error)]
pub enum RiemannError {
    #[error("the first hole (half-width {half_width}) does not fit inside the domain around the puncture")]
    PunctureTooCloseToBoundary { half_width: f64 },
    #[error("finite-difference derivative has modulus {modulus:.3e}")]
    DegenerateDerivative { modulus: f64 },
    #[error("period did not decrease at level {level}: {previous} then {current}")]
    PeriodNotDecreasing { level: usize, previous: f64, current: f64 },
    #[error("invalid exhaustion: {0}")]
    InvalidSpec(String),
    #[error("mesh: {0}")]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Uniformize(#[from] UniformizeError),
}

#[derive(Debug, Clone)]
pub struct ExhaustionSpec {
    /// Simple axis-aligned polygon with vertices on the grid of pitch `pitch`.
    pub domain: Vec<Point>,
    pub puncture: Point,
    pub levels: u32,
    /// Half-width of the first hole.
    pub half_width: f64,
    /// Hole shrink per level, in (0, 1).
    pub factor: f64,
    /// Lattice pitch at the first level; halved at every further level.
    pub pitch: f64,
    /// Defaults to the puncture shifted right by the probe radius.
    pub anchor: Option<Point>,
    /// Defaults to the anchor.
    pub target: Option<Complex64>,
    /// Radius of the probe circle around the puncture; defaults to half the
    /// distance from the puncture to the boundary.
    pub probe_radius: Option<f64>,
    pub probe_count: usize,
    pub solver: SolverOptions,
}

impl ExhaustionSpec {
    pub fn new(domain: Vec<Point>, puncture: Point, pitch: f64) -> Self {
        ExhaustionSpec {
            domain,
            puncture,
            levels: 3,
            half_width: 2.0 * pitch,
            factor: 0.5,
            pitch,
            anchor: None,
            target: None,
            probe_radius: None,
            probe_count: 32,
            solver: SolverOptions::default(),
        }
    }

    pub fn probe_radius(&self) -> f64 {
        self.probe_radius.unwrap_or_else(|| 0.5 * loop_distance(self.puncture, &self.domain))
    }

    pub fn anchor(&self) -> Point {
        self.anchor.unwrap_or(self.puncture + Point::new(self.probe_radius(), 0.0))
    }

    pub fn target(&self) -> Complex64 {
        self.target.unwrap_or(self.anchor().to_complex())
    }

    pub fn probes(&self) -> Vec<Point> {
        let r = self.probe_radius();
        (0..self.probe_count)
            .map(|k| self.puncture + Point::from_polar(r, (k as f64 + 0.5) * TAU / self.probe_count as f64))
            .collect()
    }

    /// Hole half-width at level `n >= 1`.
    pub fn hole_half_width(&self, n: u32) -> f64 {
        self.half_width * self.factor.powi(n as i32 - 1)
    }
}

/// `Ω \ Θ_n` for `n = 1..=levels`.
pub fn nested_annuli(spec: &ExhaustionSpec) -> Result<Vec<PolygonalAnnulus>, RiemannError> {
    if !(spec.factor > 0.0 && spec.factor < 1.0) {
        return Err(RiemannError::InvalidSpec(format!("shrink factor {} is not in (0, 1)", spec.factor)));
    }
    if spec.levels == 0 {
        return Err(RiemannError::InvalidSpec("need at least one level".into()));
    }
    if !point_in_polygon(spec.puncture, &spec.domain) {
        return Err(RiemannError::InvalidSpec("puncture is outside the domain".into()));
    }
    let s = spec.half_width;
    let fits = square_loop(spec.puncture, s).iter().all(|&c| point_in_polygon(c, &spec.domain))
        && loop_distance(spec.puncture, &spec.domain) > s;
    if s.is_nan() || s <= 0.0 || !fits {
        return Err(RiemannError::PunctureTooCloseToBoundary { half_width: s });
    }
    (1..=spec.levels)
        .map(|n| {
            PolygonalAnnulus::new(spec.domain.clone(), square_loop(spec.puncture, spec.hole_half_width(n)))
                .map_err(|_| RiemannError::PunctureTooCloseToBoundary { half_width: s })
        })
        .collect()
}

/// `w ↦ a / Ψ(w) + b`.
#[derive(Debug, Clone)]
pub struct NormalizedMap {
    pub map: AnnulusMap,
    pub a: Complex64,
    pub b: Complex64,
}

impl NormalizedMap {
    pub fn eval(&self, p: Point) -> Result<Complex64, UniformizeError> {
        Ok(self.a / evaluate_map(&self.map, p)? + self.b)
    }

    /// Image of a Voronoi vertex.
    pub fn vertex_image(&self, w: usize) -> Complex64 {
        self.a / self.map.vertex_image(w) + self.b
    }
}

/// `(a, b)` with `a·F(z0) + b = ξ0` and unit centered-difference derivative at `z0`.
pub fn normalization(
    f: impl Fn(Point) -> Result<Complex64, UniformizeError>,
    z0: Point,
    xi0: Complex64,
    delta: f64,
) -> Result<(Complex64, Complex64), RiemannError> {
    let (dx, dy) = (Point::new(delta, 0.0), Point::new(0.0, delta));
    let ddx = (f(z0 + dx)? - f(z0 - dx)?) / (2.0 * delta);
    let ddy = (f(z0 + dy)? - f(z0 - dy)?) / Complex64::new(0.0, 2.0 * delta);
    let d = 0.5 * (ddx + ddy);
    if d.norm().is_nan() || d.norm() < 1e-12 {
        return Err(RiemannError::DegenerateDerivative { modulus: d.norm() });
    }
    let a = d.inv();
    Ok((a, xi0 - a * f(z0)?))
}

/// Inverts the annulus map and fixes the value and derivative at `z0`.
pub fn invert_and_normalize(map: AnnulusMap, z0: Point, xi0: Complex64, delta: f64) -> Result<NormalizedMap, RiemannError> {
    let (a, b) = normalization(|p| Ok(evaluate_map(&map, p)?.inv()), z0, xi0, delta)?;
    Ok(NormalizedMap { map, a, b })
}

#[derive(Debug, Clone)]
pub struct RiemannLevel {
    pub annulus: PolygonalAnnulus,
    pub solution: AnnulusSolution,
    /// Flux of the potential through a loop around the hole, as a positive number.
    pub period: f64,
    /// Inner radius `exp(-2π/period)` of the inverted image.
    pub inner_radius: f64,
    pub map: NormalizedMap,
}

#[derive(Debug, Clone)]
pub struct RiemannApproximation {
    pub levels: Vec<RiemannLevel>,
    pub anchor: Point,
    pub target: Complex64,
    pub probes: Vec<Point>,
    /// `max |Υ_{n+1} - Υ_n|` over the probes.
    pub cauchy: Vec<f64>,
}

impl RiemannApproximation {
    pub fn periods(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.period).collect()
    }

    pub fn inner_radii(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.inner_radius).collect()
    }
}

/// Runs every exhaustion level (in parallel) and checks that periods decrease.
pub fn riemann_map(spec: &ExhaustionSpec) -> Result<RiemannApproximation, RiemannError> {
    let annuli = nested_annuli(spec)?;
    let (z0, xi0) = (spec.anchor(), spec.target());
    let opts = PipelineOptions {
        solver: spec.solver.clone(),
        conjugate: ConjugateOptions::default(),
        boundary: DirichletSpec::with_labels(0.0, 1.0),
    };
    let levels: Vec<RiemannLevel> = annuli
        .into_par_iter()
        .enumerate()
        .map(|(k, annulus)| {
            let mesh = generate_lattice_annulus(&annulus, spec.pitch, k as u32)?;
            let delta = mesh.mesh_size() / 2f64.sqrt();
            let solution = solve_annulus(mesh, &opts)?;
            let period = solution.map.period();
            let map = invert_and_normalize(solution.map.clone(), z0, xi0, delta)?;
            Ok(RiemannLevel { annulus, solution, period, inner_radius: (-TAU / period).exp(), map })
        })
        .collect::<Result<_, RiemannError>>()?;
    for (n, w) in levels.windows(2).enumerate() {
        if w[1].period >= w[0].period {
            return Err(RiemannError::PeriodNotDecreasing { level: n + 2, previous: w[0].period, current: w[1].period });
        }
    }
    let probes = spec.probes();
    let mut cauchy = Vec::with_capacity(levels.len().saturating_sub(1));
    for w in levels.windows(2) {
        let mut worst: f64 = 0.0;
        for &p in &probes {
            worst = worst.max((w[1].map.eval(p)? - w[0].map.eval(p)?).norm());
        }
        cauchy.push(worst);
    }
    Ok(RiemannApproximation { levels, anchor: z0, target: xi0, probes, cauchy })
}

/// Boundary of the union of lattice squares of pitch `h` whose centers lie in
/// the open disk of `radius` about the origin, counter-clockwise without
/// collinear vertices.
pub fn staircase_disk(radius: f64, h: f64) -> Result<Vec<Point>, RiemannError> {
    if !(radius > h && h > 0.0) {
        return Err(RiemannError::InvalidSpec(format!("radius {radius} must exceed pitch {h}")));
    }
    let m = (radius / h).ceil() as i64 + 1;
    let inside = |i: i64, j: i64| {
        let c = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        c.norm() < radius
    };
    // directed edges with the squares on their left
    let mut next = std::collections::HashMap::new();
    for i in -m..m {
        for j in -m..m {
            if !inside(i, j) {
                continue;
            }
            if !inside(i, j - 1) {
                next.insert((i, j), (i + 1, j));
            }
            if !inside(i + 1, j) {
                next.insert((i + 1, j), (i + 1, j + 1));
            }
            if !inside(i, j + 1) {
                next.insert((i + 1, j + 1), (i, j + 1));
            }
            if !inside(i - 1, j) {
                next.insert((i, j + 1), (i, j));
            }
        }
    }
    let start = *next.keys().min().expect("disk contains a square");
    let mut corners = vec![start];
    let mut cur = next[&start];
    while cur != start {
        corners.push(cur);
        cur = next[&cur];
    }
    let n = corners.len();
    let turns: Vec<Point> = (0..n)
        .filter(|&k| {
            let (a, b, c) = (corners[(k + n - 1) % n], corners[k], corners[(k + 1) % n]);
            (b.0 - a.0) * (c.1 - b.1) != (b.1 - a.1) * (c.0 - b.0)
        })
        .map(|k| Point::new(corners[k].0 as f64 * h, corners[k].1 as f64 * h))
        .collect();
    Ok(turns)
}
