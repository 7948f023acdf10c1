//! Exact transitions against a fine-grid path.

use kolcouple::path::{exact_transition, simulate_path_euler};
use kolcouple::{derive_stream, StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    let kernel = TransitionKernel::new(2)?;
    let x = StateVector::new(vec![1.0, 0.0, 0.0]);

    let path = simulate_path_euler(&kernel, &x, 1.0, 0.1, &mut derive_stream(1, 0))?;
    path.write_csv(std::io::stdout())?;

    let n = 20_000;
    let mut second = [0.0; 3];
    for r in 0..n {
        let y = exact_transition(&kernel, &x, 1.0, &mut derive_stream(2, r))?;
        let mean = kernel.flow_matrix(1.0)? * x.as_ref();
        for i in 0..3 {
            second[i] += (y[i] - mean[i]).powi(2) / n as f64;
        }
    }
    let cov = kernel.covariance(1.0);
    for (i, s) in second.iter().enumerate() {
        println!("Var I{i}: sample {s:.4}, exact {:.4}", cov[(i, i)]);
    }
    Ok(())
}
