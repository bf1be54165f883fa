//! Radical-center conductances on a hexagonal packing and the transition check on flowers.

use uniformizer::geometry::build_voronoi;
use uniformizer::network::build_network;
use uniformizer::packing::{hexagonal_packing, markov_equality_check_flower, packing_to_network, Flower};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hex = hexagonal_packing(3, 0.5);
    let packed = packing_to_network(&hex)?;
    let fvm = build_network(&build_voronoi(packed.mesh.clone())?)?;
    let mut worst: f64 = 0.0;
    for (e, edge) in packed.mesh.edges().iter().enumerate() {
        if !edge.is_boundary() {
            worst = worst.max((packed.network.conductance(e) - fvm.conductance(e)).abs());
        }
    }
    println!("hexagonal packing: {} circles, max |stephenson - fvm| = {worst:.3e}", hex.circles().len());

    for (name, flower) in [("regular", Flower::regular(6)), ("default", Flower::default_flower()), ("perturbed", Flower::perturbed())] {
        print!("{name:>9} flower (angle defect {:+.3e}):", flower.angle_defect());
        for h in [1e-4, 1e-5, 1e-6] {
            print!("  h={h:.0e} dev={:.3e}", markov_equality_check_flower(&flower, h)?.deviation);
        }
        println!();
    }
    let perturbed = packing_to_network(&Flower::perturbed().layout()?)?;
    println!("perturbed flower midpoint offset {:.3e}", perturbed.quality.v2_max_offset);
    Ok(())
}
