//! Structure matrices of the index-k diffusion and its Gaussian transition.
//!
//! cargo run --example kernel_matrices -- 3

use kolcouple::{StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(2, |s| s.parse().expect("k"));
    let kernel = TransitionKernel::new(k)?;
    println!("H = {}", kernel.h());
    println!("V = {}", kernel.v());
    println!("L = {}", kernel.l());
    let residual = (kernel.l() * kernel.l().transpose() - kernel.v()).abs().max();
    println!("max |L L^T - V| = {residual:.2e}");

    let x = StateVector::new((0..=k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect());
    let (mean, cov) = kernel.mean_and_covariance(&x, 2.0)?;
    println!("from {:?} at T = 2: mean {:?}", x.as_slice(), mean.as_slice());
    println!("covariance = {cov}");
    Ok(())
}
