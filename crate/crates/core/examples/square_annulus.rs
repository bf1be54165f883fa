//! Self-convergence of the map on the square annulus [-2,2]^2 minus [-1,1]^2.

use uniformizer::geometry::{AnnulusShape, PolygonalAnnulus};
use uniformizer::uniformize::{convergence_study, map_winding, PipelineOptions};
use uniformizer::Point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let annulus = PolygonalAnnulus::square(Point::default(), 2.0, 1.0)?;
    let study = convergence_study(&AnnulusShape::Lattice { annulus, h0: 0.5 }, 5, &PipelineOptions::default(), 7)?;
    println!("level  rho        period      |P-P_fine|  circ       map vs finest");
    for r in &study.table.rows {
        println!(
            "{:>5}  {:.3e}  {:.8}  {:.3e}  {:.3e}  {:.3e}",
            r.level, r.rho, r.period, r.period_error, r.circularity_error, r.map_error
        );
    }
    println!("successive potential differences {:?}", study.table.successive);
    let fine = &study.levels.last().unwrap().map;
    println!("modulus log(R2) = {:.6}, winding {}", fine.r2().ln(), map_winding(fine)?);
    Ok(())
}
