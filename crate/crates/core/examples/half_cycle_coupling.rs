//! One traced run of the half-cycle coupling, then its survival curve.

use kolcouple::markovian::{simulate_bck, simulate_bck_traced};
use kolcouple::parallel::run_replicates;
use kolcouple::survival::log_grid;
use kolcouple::{derive_stream, estimate_survival, fit_rate, FitWindow};

fn main() -> kolcouple::Result<()> {
    let (outcome, trace) = simulate_bck_traced(1.0, 1e-2, 1e4, &mut derive_stream(3, 0))?;
    for r in trace.iter().take(8) {
        println!(
            "cycle {:2}: [{:.5}, {:.5}] U {:+.5} -> {:+.5} ({:?})",
            r.cycle, r.start, r.end, r.u_start, r.u_end, r.ended_by
        );
    }
    println!("coupled {} at {:.5} after {} half-cycles", outcome.coupled, outcome.tau, trace.len());

    let outcomes = run_replicates(20_000, 4, None, |s| simulate_bck(1.0, 1e-2, 1e3, s).unwrap())?;
    let curve = estimate_survival(&outcomes, &log_grid(0.1, 1e3, 5))?;
    for (t, p) in curve.times.iter().zip(&curve.estimates) {
        println!("{t:10.3} {:.4}", p.unwrap_or(f64::NAN));
    }
    let fit = fit_rate(&curve, FitWindow::Times { lo: 10.0, hi: 1e3 })?;
    println!("slope over [10, 1000]: {:.4} +- {:.4}", fit.slope, fit.stderr);
    Ok(())
}
