//! With unit blocks the look-ahead coupling can fail outright.

use kolcouple::lookahead::{bounded_gain, zeta_partial_sum, ScalarPlan};
use kolcouple::{StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    for k in 1..=3 {
        let kernel = TransitionKernel::new(k)?;
        let mut z = vec![0.0; k + 1];
        z[0] = 1.0;
        let z = StateVector::new(z);
        let gain = bounded_gain(&kernel, &z, 1000);
        let plan = ScalarPlan::bounded_horizon(&kernel, &z, 10_000)?;
        let never = plan.exact_survival().last().copied().unwrap_or(f64::NAN);
        println!(
            "k = {k}: gain at n = 1000 is {gain:.6} ((n/(n-1))^k = {:.6}), sum of n^-2k = {:.10}, P(no coupling by 10^4) = {never:.4}",
            (1000.0f64 / 999.0).powi(k as i32),
            zeta_partial_sum(2.0 * k as f64, 10_000)
        );
    }
    Ok(())
}
