//! Look-ahead coupling reduced to one absorbed scalar per block.

use kolcouple::lookahead::{block_gains, nu_sequence, ScalarPlan};
use kolcouple::parallel::run_replicates;
use kolcouple::{StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    let kernel = TransitionKernel::new(1)?;
    for z in [vec![1.0, 0.0], vec![0.0, 1.0]] {
        let z = StateVector::new(z);
        let nu = nu_sequence(&kernel, &z, 2.0, 5)?;
        let gains = block_gains(&kernel, &z, 2.0, 5)?;
        println!("z = {:?}", z.as_slice());
        for (n, (v, g)) in nu.iter().zip(&gains).enumerate() {
            println!("  n = {n}: nu = ({:+.5}, {:+.5}), g = {g:.5}", v[0], v[1]);
        }
        let plan = ScalarPlan::geometric(&kernel, &z, 2.0, 20)?;
        let exact = plan.exact_survival();
        let hits = run_replicates(50_000, 1, None, |s| plan.simulate(s))?;
        for i in (0..20).step_by(4) {
            let alive = hits.iter().filter(|h| h.is_none_or(|b| b > i)).count() as f64 / 5e4;
            println!("  S_{:<2} = {:9.0}: simulated {alive:.4}, exact {:.4}", plan.blocks[i], plan.times[i], exact[i]);
        }
    }
    Ok(())
}
