use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use uniformizer::geometry::{
    build_voronoi, generate_lattice_annulus, generate_round_annulus, BoundaryLabel, PolygonalAnnulus, RoundAnnulus,
    Triangulation,
};
use uniformizer::network::build_network;
use uniformizer::solver::{cell_integral, solve_dirichlet, solve_poisson_fvm, DirichletSpec, SolverOptions};
use uniformizer::Point;

/// Dense solve of the full vertex system with identity rows on the boundary.
fn dense(mesh: &Arc<Triangulation>, e1: f64, e2: f64, source: Option<&(dyn Fn(Point) -> f64 + Send + Sync)>) -> (Vec<f64>, Vec<f64>) {
    let vd = build_voronoi(mesh.clone()).unwrap();
    let net = build_network(&vd).unwrap();
    let n = mesh.num_vertices();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for i in 0..n {
        match mesh.label(i) {
            BoundaryLabel::E1 => {
                a[(i, i)] = 1.0;
                b[i] = e1;
            }
            BoundaryLabel::E2 => {
                a[(i, i)] = 1.0;
                b[i] = e2;
            }
            BoundaryLabel::Interior => {
                for (j, c) in net.neighbors(i) {
                    a[(i, i)] += c;
                    a[(i, j)] -= c;
                }
                if let Some(f) = source {
                    b[i] = -cell_integral(&vd, i, f);
                }
            }
        }
    }
    let x = a.lu().solve(&b).unwrap();
    let opts = SolverOptions::default();
    let (g, _) = match source {
        Some(_) => solve_poisson_fvm(&net, &vd, &DirichletSpec::homogeneous(Arc::new(|p: Point| 4.0 + p.x)), &opts),
        None => solve_dirichlet(&net, &DirichletSpec::with_labels(e1, e2), &opts),
    }
    .unwrap();
    (x.iter().copied().collect(), g.into_values())
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn small_round_mesh() {
    let mesh = Arc::new(generate_round_annulus(&RoundAnnulus::new(1.0, 2.0, 0.7).unwrap(), 0).unwrap());
    assert!(mesh.num_vertices() <= 100);
    for (e1, e2) in [(1.0, 0.0), (0.0, 1.0), (-3.0, 2.5)] {
        let (x, g) = dense(&mesh, e1, e2, None);
        assert!(linf(&x, &g) <= 1e-9, "{}", linf(&x, &g));
    }
}

#[test]
fn small_lattice_annulus() {
    let ann = PolygonalAnnulus::square(Point::new(0.3, -0.2), 1.0, 0.25).unwrap();
    let mesh = Arc::new(generate_lattice_annulus(&ann, 0.25, 0).unwrap());
    assert!(mesh.num_vertices() <= 100, "{}", mesh.num_vertices());
    let (x, g) = dense(&mesh, 1.0, 0.0, None);
    assert!(linf(&x, &g) <= 1e-9);
}

#[test]
fn small_poisson_problem() {
    let mesh = Arc::new(generate_round_annulus(&RoundAnnulus::new(1.0, 2.0, 0.7).unwrap(), 0).unwrap());
    let f = |p: Point| 4.0 + p.x;
    let (x, g) = dense(&mesh, 0.0, 0.0, Some(&f));
    assert!(x.iter().any(|v| v.abs() > 1e-3));
    assert!(linf(&x, &g) <= 1e-9, "{}", linf(&x, &g));
}
