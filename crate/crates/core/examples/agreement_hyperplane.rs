//! Where two transition densities agree, and a check by direct evaluation.

use kolcouple::experiment::hyperplane_trial;
use kolcouple::{derive_stream, StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    let kernel = TransitionKernel::new(1)?;
    let t = 3.0;
    let plane = kernel.agreement_hyperplane(
        &StateVector::new(vec![0.0, 0.5]),
        &StateVector::new(vec![0.0, -0.5]),
        t,
    )?;
    // proportional to (-t, 2)
    println!("normal {:?}, ratio {:.6}", plane.normal.as_slice(), plane.normal[0] / plane.normal[1]);

    for k in 0..=4 {
        let kernel = TransitionKernel::new(k)?;
        let mut worst: f64 = 0.0;
        for rep in 0..20 {
            worst = worst.max(hyperplane_trial(&kernel, k + 1, 10, &mut derive_stream(k as u64, rep))?);
        }
        println!("k = {k}: largest relative density mismatch {worst:.2e}");
    }
    Ok(())
}
