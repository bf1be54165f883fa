use std::io::Cursor;
use std::sync::Arc;

use proptest::prelude::*;
use uniformizer::geometry::{
    build_voronoi, generate_round_annulus, read_mesh, write_mesh, RingSpacing, RoundAnnulus,
};
use uniformizer::network::{build_network, ScalarField};
use uniformizer::packing::{hexagonal_packing, radical_center, stephenson_conductance, tangent_angle, Circle};
use uniformizer::solver::{solve_dirichlet, DirichletSpec, SolverOptions};
use uniformizer::Point;

fn annulus() -> impl Strategy<Value = (RoundAnnulus, u32)> {
    (0.5f64..2.0, 1.3f64..3.0, 0.2f64..0.6, 0u32..2, any::<bool>()).prop_map(|(a, ratio, h0, level, geo)| {
        let r = RoundAnnulus::new(a, a * ratio, h0 * a).unwrap();
        let r = if geo { r.with_spacing(RingSpacing::Geometric) } else { r };
        (r, level)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn radical_center_has_equal_powers(
        c in prop::array::uniform3((-5f64..5.0, -5f64..5.0, 0.1f64..2.0)),
    ) {
        let cs = c.map(|(x, y, r)| Circle::new(Point::new(x, y), r));
        let area = (cs[1].center - cs[0].center).cross(cs[2].center - cs[0].center);
        prop_assume!(area.abs() > 0.5);
        let w = radical_center(&cs[0], &cs[1], &cs[2]).unwrap();
        let p: Vec<f64> = cs.iter().map(|c| c.power(w)).collect();
        let scale = 1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!((p[0] - p[1]).abs() <= 1e-9 * scale);
        prop_assert!((p[0] - p[2]).abs() <= 1e-9 * scale);
    }

    #[test]
    fn stephenson_conductance_is_scale_invariant(s in 0.01f64..100.0, r in 0.1f64..3.0) {
        let p = hexagonal_packing(1, r);
        let q = p.scaled(s);
        for &[u, v] in p.edges() {
            if let (Ok(a), Ok(b)) = (stephenson_conductance(&p, u, v), stephenson_conductance(&q, u, v)) {
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn tangent_angles_fill_a_triangle(a in 0.1f64..5.0, b in 0.1f64..5.0, c in 0.1f64..5.0) {
        let sum = tangent_angle(a, b, c) + tangent_angle(b, c, a) + tangent_angle(c, a, b);
        prop_assert!((sum - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn mesh_text_round_trip((r, level) in annulus()) {
        let m = generate_round_annulus(&r, level).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(Cursor::new(buf)).unwrap();
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn network_invariants((r, level) in annulus(), seed in any::<u64>()) {
        let mesh = Arc::new(generate_round_annulus(&r, level).unwrap());
        let vd = build_voronoi(mesh.clone()).unwrap();
        let net = build_network(&vd).unwrap();
        for i in 0..mesh.num_vertices() {
            if mesh.is_boundary_vertex(i) {
                continue;
            }
            let s: f64 = net.transition_row(i).iter().map(|(_, p)| p).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(net.neighbors(i).all(|(_, c)| c >= 0.0));
        }
        // laplacian of fields vanishing on the boundary is symmetric
        let field = |k: u64| {
            let vals = (0..mesh.num_vertices()).map(|i| {
                if mesh.is_boundary_vertex(i) { 0.0 } else { (((i as u64 + 1).wrapping_mul(seed ^ k) >> 11) as f64 / (1u64 << 53) as f64) - 0.5 }
            }).collect();
            ScalarField::new(mesh.clone(), vals).unwrap()
        };
        let (u, w) = (field(0x9e37), field(0x7f4a));
        let (lu, lw) = (net.laplacian_all(&u).unwrap(), net.laplacian_all(&w).unwrap());
        let a: f64 = (0..mesh.num_vertices()).map(|i| u.get(i) * lw[i]).sum();
        let b: f64 = (0..mesh.num_vertices()).map(|i| w.get(i) * lu[i]).sum();
        let scale: f64 = (0..mesh.num_vertices()).map(|i| (u.get(i) * lw[i]).abs()).sum::<f64>() + 1e-300;
        prop_assert!((a - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn maximum_principle((r, level) in annulus()) {
        let mesh = Arc::new(generate_round_annulus(&r, level).unwrap());
        let vd = build_voronoi(mesh.clone()).unwrap();
        let net = build_network(&vd).unwrap();
        let (g, _) = solve_dirichlet(&net, &DirichletSpec::default(), &SolverOptions::default()).unwrap();
        for &x in g.values() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&x));
        }
    }
}
