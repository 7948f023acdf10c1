//! Total variation between two starts and the order of its decay.

use kolcouple::{StateVector, TransitionKernel};

fn main() -> kolcouple::Result<()> {
    let kernel = TransitionKernel::new(2)?;
    let origin = StateVector::zeros(3);
    let starts = [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    println!("{:>8} {:>12} {:>12} {:>12}", "T", "z=e0", "z=e1", "z=e2");
    for e in 0..=4 {
        let t = 10f64.powi(e);
        let row: Vec<String> = starts
            .iter()
            .map(|x| {
                let tv = kernel.tv_distance(&StateVector::new(x.clone()), &origin, t).unwrap();
                format!("{tv:12.4e}")
            })
            .collect();
        println!("{t:8} {}", row.join(" "));
    }
    for x in &starts {
        let z = StateVector::new(x.clone());
        let tail = kernel.maximal_tail(&z, 1e3)?;
        let (lo, hi) = tail.naive_bounds();
        println!(
            "z = {:?}: order {}, tail {:.4e} in [{lo:.4e}, {hi:.4e}], ratio over a doubling {:.4}",
            x,
            tail.order,
            tail.lower_bound,
            kernel.maximal_tail(&z, 2e3)?.lower_bound / tail.lower_bound
        );
    }
    Ok(())
}
