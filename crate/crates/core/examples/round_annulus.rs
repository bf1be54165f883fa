//! Convergence of the discrete map on the annulus 1 < |z| < 2.

use std::time::Instant;

use uniformizer::geometry::{AnnulusShape, RoundAnnulus};
use uniformizer::uniformize::{convergence_study, map_winding, PipelineOptions, RoundOracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ann = RoundAnnulus::new(1.0, 2.0, 0.25)?;
    let start = Instant::now();
    let study = convergence_study(&AnnulusShape::Round(ann), 4, &PipelineOptions::default(), 0)?;
    println!("exact period {:.6}", RoundOracle { annulus: ann }.period());
    println!("level  rho        lambda     |g-u|      period     |P-P*|     circ       map");
    for r in &study.table.rows {
        println!(
            "{:>5}  {:.3e}  {:.3e}  {:.3e}  {:.6}  {:.3e}  {:.3e}  {:.3e}",
            r.level, r.rho, r.lambda, r.potential_error, r.period, r.period_error, r.circularity_error, r.map_error
        );
    }
    println!("potential rate {:.3}", study.table.potential_rate());
    println!("winding {}", map_winding(&study.levels.last().unwrap().map)?);
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
