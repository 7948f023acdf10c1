//! The Brownian area law behind the first half-cycle.

use kolcouple::markovian::{area_tail_by_quadrature, AreaLaw};

fn main() -> kolcouple::Result<()> {
    let law = AreaLaw::new(0.75)?;
    println!("{:>8} {:>14} {:>14} {:>14} {:>10}", "t", "density", "tail", "quadrature", "t^1/3 tail");
    for &t in &[0.01, 0.1, 1.0, 10.0, 100.0, 1e4] {
        let tail = law.tail(t)?;
        println!(
            "{t:8} {:14.6e} {tail:14.6e} {:14.6e} {:10.5}",
            law.density(t)?,
            area_tail_by_quadrature(0.75, t)?,
            tail * f64::cbrt(t)
        );
    }
    let (lo, hi) = law.scaled_tail_bounds(10.0);
    println!("t^1/3 tail at t = 10 lies in [{lo:.5}, {hi:.5}], limit {:.5}", law.tail_constant());
    Ok(())
}
