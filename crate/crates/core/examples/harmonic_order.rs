//! Asymptotic harmonicity of `g = ũ + Π(h̃)` on the round annulus 1 < |z| < 2.

use uniformizer::geometry::RoundAnnulus;
use uniformizer::solver::SolverOptions;
use uniformizer::uniformize::round_harmonic_order;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ann = RoundAnnulus::new(1.0, 2.0, 0.25)?;
    let study = round_harmonic_order(&ann, 4, &SolverOptions::default())?;
    for ((lambda, rho), r) in study.lambda.iter().zip(&study.rho).zip(&study.order.residuals) {
        println!("lambda {lambda:.3e}  rho {rho:.3e}  max|Δg| {r:.3e}");
    }
    println!("order vs lambda {:.3}, vs rho {:.3}", study.order.alpha_lambda, study.order.alpha_rho);
    Ok(())
}
