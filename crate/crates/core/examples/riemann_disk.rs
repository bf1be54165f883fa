//! Riemann map of a lattice approximation of the unit disk, punctured at the center.

use std::time::Instant;

use uniformizer::riemann::{riemann_map, staircase_disk, ExhaustionSpec};
use uniformizer::Point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 1.0 / 16.0;
    let start = Instant::now();
    let mut spec = ExhaustionSpec::new(staircase_disk(1.0, h)?, Point::default(), h);
    spec.half_width = 0.25;
    spec.probe_radius = Some(0.5);
    let r = riemann_map(&spec)?;
    println!("level  period      inner radius  max |Υ(w) - w| on probes");
    for (n, l) in r.levels.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for &p in &r.probes {
            worst = worst.max((l.map.eval(p)? - p.to_complex()).norm());
        }
        println!("{:>5}  {:.8}  {:.6e}  {:.3e}", n + 1, l.period, l.inner_radius, worst);
    }
    println!("cauchy differences {:?}", r.cauchy);
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
