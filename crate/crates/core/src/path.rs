//! Sample paths and exact transitions of the index-k diffusion.

use std::io::Write;

use nalgebra::DVector;

use crate::error::{require_positive, Result};
use crate::kernel::{factorial, StateVector, TransitionKernel};
use crate::noise::GaussianSource;

/// A path observed on an increasing time grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&StateVector> {
        self.states.last()
    }

    /// CSV with columns `t, I0, ..., Ik`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.states.first().map_or(0, |s| s.len());
        let mut header = String::from("t");
        for r in 0..dim {
            header.push_str(&format!(",I{r}"));
        }
        writeln!(out, "{header}")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.17e}")?;
            for c in s.iter() {
                write!(out, ",{c:.17e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// One exact step: `H(h) x + sqrt(h) D(h) L xi` with `xi` standard normal.
pub fn exact_transition<G: GaussianSource>(
    kernel: &TransitionKernel,
    x: &StateVector,
    h: f64,
    stream: &mut G,
) -> Result<StateVector> {
    require_positive("h", h)?;
    kernel.check_dim(x)?;
    let mut xi = DVector::zeros(kernel.dim());
    stream.fill_normals(xi.as_mut_slice());
    let noise = (kernel.l() * xi).component_mul(&kernel.scaling_diagonal(h)) * h.sqrt();
    Ok(StateVector::from_vector(
        kernel.flow_matrix_unchecked(h) * x.as_ref() + noise,
    ))
}

impl AsRef<DVector<f64>> for StateVector {
    fn as_ref(&self) -> &DVector<f64> {
        self
    }
}

/// Grid path with `sqrt(dt)` Brownian increments.
///
/// The Brownian coordinate is treated as linear within each step and the
/// iterated integrals are integrated exactly against that interpolant. For
/// `I_1` this is the trapezoidal rule `I_1 += (I_0,old + I_0,new) dt / 2`;
/// the deterministic flow `H(t) x` is reproduced exactly at every order.
pub fn simulate_path_euler<G: GaussianSource>(
    kernel: &TransitionKernel,
    x: &StateVector,
    horizon: f64,
    dt: f64,
    stream: &mut G,
) -> Result<PathSample> {
    require_positive("T", horizon)?;
    require_positive("dt", dt)?;
    kernel.check_dim(x)?;
    let dim = kernel.dim();
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x.clone());

    // 1/(j)! for the flow and 1/(j+1)! for the linear-increment correction
    let inv_fact: Vec<f64> = (0..=dim).map(|j| 1.0 / factorial(j) as f64).collect();
    let mut cur: Vec<f64> = x.iter().copied().collect();
    let mut next = vec![0.0; dim];
    let mut t = 0.0;
    for i in 0..steps {
        let t_next = if i + 1 == steps {
            horizon
        } else {
            (i + 1) as f64 * dt
        };
        let h = t_next - t;
        let db = h.sqrt() * stream.standard_normal();
        for r in 0..dim {
            let mut acc = 0.0;
            let mut hp = 1.0;
            for j in 0..=r {
                acc += cur[r - j] * hp * inv_fact[j];
                hp *= h;
            }
            // hp = h^(r+1); a linear increment db contributes db h^r / (r+1)!
            acc += db * hp / h * inv_fact[r + 1];
            next[r] = acc;
        }
        std::mem::swap(&mut cur, &mut next);
        t = t_next;
        times.push(t);
        states.push(StateVector::new(cur.clone()));
    }
    Ok(PathSample { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{derive_stream, ZeroNoise};

    #[test]
    fn brownian_step_for_index_zero() {
        let kern = TransitionKernel::new(0).unwrap();
        let mut a = derive_stream(3, 0);
        let mut b = derive_stream(3, 0);
        let x = StateVector::new(vec![0.25]);
        let y = exact_transition(&kern, &x, 4.0, &mut a).unwrap();
        assert_eq!(y[0], 0.25 + 2.0 * b.standard_normal());
        assert!(exact_transition(&kern, &x, 0.0, &mut a).is_err());
    }

    #[test]
    fn zero_noise_follows_integral_curve() {
        for k in 0..=4 {
            let kern = TransitionKernel::new(k).unwrap();
            let x = StateVector::new((0..=k).map(|i| 1.0 - 0.3 * i as f64).collect());
            let path = simulate_path_euler(&kern, &x, 2.0, 0.013, &mut ZeroNoise).unwrap();
            assert_eq!(path.times[0], 0.0);
            assert_eq!(path.states[0], x);
            assert!((path.times.last().unwrap() - 2.0).abs() < 1e-15);
            for (t, s) in path.times.iter().zip(&path.states).skip(1) {
                let expected = kern.flow_matrix(*t).unwrap() * x.as_ref();
                let err = (s.as_ref() - expected).abs().max();
                assert!(err < 1e-12, "k={k} t={t}: {err}");
            }
        }
    }

    #[test]
    fn grid_is_strictly_increasing() {
        let kern = TransitionKernel::new(2).unwrap();
        let mut s = derive_stream(1, 1);
        let p = simulate_path_euler(&kern, &StateVector::zeros(3), 1.0, 0.3, &mut s).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        assert!(simulate_path_euler(&kern, &StateVector::zeros(3), 1.0, 0.0, &mut s).is_err());
        assert!(simulate_path_euler(&kern, &StateVector::zeros(3), -1.0, 0.1, &mut s).is_err());
    }

    #[test]
    fn path_is_reproducible() {
        let kern = TransitionKernel::new(1).unwrap();
        let run = || {
            let mut s = derive_stream(9, 4);
            simulate_path_euler(&kern, &StateVector::zeros(2), 1.0, 0.01, &mut s).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn csv_layout() {
        let kern = TransitionKernel::new(1).unwrap();
        let p = simulate_path_euler(&kern, &StateVector::zeros(2), 0.2, 0.1, &mut ZeroNoise).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,I0,I1");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 3);
    }
}
