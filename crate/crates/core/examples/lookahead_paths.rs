//! Look-ahead coupling of full paths through a truncated mode expansion.

use kolcouple::lookahead::{build_e, simulate_lookahead_paths, PathCouplingSettings};
use kolcouple::{derive_stream, StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    let kernel = TransitionKernel::new(1)?;
    let e = build_e(&kernel, 512)?;
    println!("Gram residual with 512 modes: {:.2e}", e.gram_residual());
    let settings = PathCouplingSettings {
        alpha: 2.0,
        n_blocks: 8,
        grid_per_block: 500,
        interior_points: 0,
    };
    let x1 = StateVector::new(vec![1.0, 0.0]);
    let x2 = StateVector::zeros(2);
    for rep in 0..3 {
        let out = simulate_lookahead_paths(&kernel, &x1, &x2, &e, &settings, &mut derive_stream(5, rep))?;
        println!("replicate {rep}: coupled in block {:?}", out.coupled_block);
        for b in &out.blocks {
            println!(
                "  block {} [{:6.1}, {:6.1}]: f path {:.5}, f scalar {:.5}",
                b.state.n + 1,
                b.start,
                b.start + b.length,
                b.f_path,
                b.f_scalar
            );
        }
        let (a, b) = (out.first.last().unwrap(), out.second.last().unwrap());
        println!("  final difference {:?}", (a.as_ref() - b.as_ref()).as_slice());
    }
    Ok(())
}
