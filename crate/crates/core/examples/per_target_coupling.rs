//! The coupling tuned to one target time, at several targets.

use kolcouple::markovian::simulate_mu_t;
use kolcouple::parallel::run_replicates;

fn main() -> kolcouple::Result<()> {
    let n = 20_000;
    for (j, &t) in [10.0, 100.0, 1000.0].iter().enumerate() {
        let out = run_replicates(n, 70 + j as u64, None, |s| simulate_mu_t(t, 1e-2, s).unwrap())?;
        let frac = |f: &dyn Fn(&kolcouple::markovian::MuTOutcome) -> bool| {
            out.iter().filter(|o| f(o)).count() as f64 / n as f64
        };
        let long = frac(&|o| o.stage1_end > 1.0);
        let big_v = frac(&|o| o.v_at_stage1_end > 2.0);
        let late = frac(&|o| !o.outcome.coupled || o.outcome.tau > t + 1.0);
        println!(
            "t = {t:6}: P(stage 1 > 1) = {long:.5}, P(V > 2) = {big_v:.5}, t P(tau > t + 1) = {:.3}",
            t * late
        );
    }
    Ok(())
}
