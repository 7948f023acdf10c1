//! Deterministic block recursion and the absorbed scalar process.
//!
//! With `M = L^-1 H D(1/alpha) L`, the direction of the whitened discrepancy
//! evolves deterministically, `nu_n = M^n nu_0 / |M^n nu_0|`, and the
//! rescaled discrepancy `G` is a Brownian motion absorbed at 0 whose variance
//! over block `n` is `4 T_n / g_n^2` with `g_n = |M^n nu_0|`. The coupling has
//! succeeded by `S_n` exactly when `G` has hit 0 by the end of block `n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{forward_substitute, StateVector, TransitionKernel};
use crate::noise::GaussianSource;
use crate::special;

/// Block lengths `T_n` and cumulative ends `S_n = T_1 + ... + T_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockSchedule {
    /// `T_n = alpha^n`.
    Geometric { alpha: f64 },
    /// `T_n = 1`.
    Unit,
}

impl BlockSchedule {
    pub fn geometric(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must exceed 1, got {alpha}")));
        }
        Ok(Self::Geometric { alpha })
    }

    pub fn length(&self, n: usize) -> f64 {
        match *self {
            Self::Geometric { alpha } => alpha.powi(n as i32),
            Self::Unit => 1.0,
        }
    }

    pub fn end(&self, n: usize) -> f64 {
        match *self {
            Self::Geometric { alpha } => alpha * (alpha.powi(n as i32) - 1.0) / (alpha - 1.0),
            Self::Unit => n as f64,
        }
    }

    /// `S_0, ..., S_n_max`.
    pub fn ends(&self, n_max: usize) -> Vec<f64> {
        (0..=n_max).map(|n| self.end(n)).collect()
    }
}

/// State of the scalar recursion at a block boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub n: usize,
    pub nu: DVector<f64>,
    pub f: f64,
    pub coupled_at: Option<usize>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    BlockSchedule::geometric(alpha).map(|_| ())
}

fn whitened_start(kernel: &TransitionKernel, z: &StateVector) -> Result<DVector<f64>> {
    kernel.check_dim(z)?;
    if z.leading_order().is_none() {
        return Err(Error::AlreadyCoupled);
    }
    Ok(kernel.whiten(z))
}

/// `M = L^-1 H D(1/alpha) L`.
pub fn block_matrix(kernel: &TransitionKernel, alpha: f64) -> DMatrix<f64> {
    let hd = kernel.h() * kernel.scaling(1.0 / alpha);
    kernel.l_inv() * hd * kernel.l()
}

/// `nu_0, ..., nu_n_max`.
pub fn nu_sequence(
    kernel: &TransitionKernel,
    z: &StateVector,
    alpha: f64,
    n_max: usize,
) -> Result<Vec<DVector<f64>>> {
    check_alpha(alpha)?;
    let y = whitened_start(kernel, z)?;
    let m = block_matrix(kernel, alpha);
    let mut nu = y.normalize();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(nu.clone());
    for _ in 0..n_max {
        let x = &m * &nu;
        nu = x.normalize();
        out.push(nu.clone());
    }
    Ok(out)
}

/// `g_n = |M^n nu_0|`, accumulated as a product of one-step norms.
pub fn block_gain(kernel: &TransitionKernel, z: &StateVector, alpha: f64, n: usize) -> Result<f64> {
    Ok(block_gains(kernel, z, alpha, n)?[n])
}

/// `g_0 = 1, g_1, ..., g_n_max`.
pub fn block_gains(
    kernel: &TransitionKernel,
    z: &StateVector,
    alpha: f64,
    n_max: usize,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let y = whitened_start(kernel, z)?;
    let m = block_matrix(kernel, alpha);
    let mut nu = y.normalize();
    let mut g = 1.0;
    let mut out = vec![1.0];
    for _ in 0..n_max {
        let x = &m * &nu;
        let step = x.norm();
        g *= step;
        nu = x / step;
        out.push(g);
    }
    Ok(out)
}

/// Unit eigenvectors `e_0..e_k` of `M` (eigenvalues `alpha^-i`) and the
/// coefficients `gamma` of `nu_0` in that basis.
///
/// `M` is lower triangular, so `e_i` vanishes above coordinate `i` and the
/// rest follows by forward substitution; `gamma` solves a triangular system.
pub fn eigen_coefficients(
    kernel: &TransitionKernel,
    z: &StateVector,
    alpha: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_alpha(alpha)?;
    let nu0 = whitened_start(kernel, z)?.normalize();
    let m = block_matrix(kernel, alpha);
    let dim = kernel.dim();
    let mut vecs = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let lam = m[(i, i)];
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        for a in i + 1..dim {
            let s: f64 = (i..a).map(|b| m[(a, b)] * e[b]).sum();
            e[a] = s / (lam - m[(a, a)]);
        }
        let e = e.normalize();
        vecs.set_column(i, &e);
    }
    let gamma = forward_substitute(&vecs, &nu0);
    Ok((vecs, gamma))
}

/// Variance of the absorbed scalar process over each reporting interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPlan {
    /// Starting value of `G`.
    pub g0: f64,
    /// Variance accumulated between consecutive checkpoints.
    pub variances: Vec<f64>,
    /// Block index at each checkpoint (`variances[i]` ends at `blocks[i]`).
    pub blocks: Vec<usize>,
    /// Process time `S_n` at each checkpoint.
    pub times: Vec<f64>,
}

impl ScalarPlan {
    /// Geometric schedule: `G_0 = |L^-1 z|`, variance `4 alpha^n / g_n^2` on
    /// block `n`.
    pub fn geometric(
        kernel: &TransitionKernel,
        z: &StateVector,
        alpha: f64,
        n_max: usize,
    ) -> Result<Self> {
        let schedule = BlockSchedule::geometric(alpha)?;
        let g0 = whitened_start(kernel, z)?.norm();
        let gains = block_gains(kernel, z, alpha, n_max)?;
        let variances = (1..=n_max)
            .map(|n| 4.0 * schedule.length(n) / (gains[n] * gains[n]))
            .collect();
        Ok(Self {
            g0,
            variances,
            blocks: (1..=n_max).collect(),
            times: (1..=n_max).map(|n| schedule.end(n)).collect(),
        })
    }

    /// Unit-length blocks: with `c_n = |L^-1 H(n) z|` the rescaled process
    /// starts at 1 and has variance `4 / c_n^2` on block `n`.
    pub fn bounded_horizon(kernel: &TransitionKernel, z: &StateVector, n_max: usize) -> Result<Self> {
        if kernel.k() == 0 {
            return Err(Error::InvalidArgument(
                "index 0: scalar Brownian motions couple surely".into(),
            ));
        }
        whitened_start(kernel, z)?;
        let variances = (1..=n_max)
            .map(|n| {
                let c = bounded_norm(kernel, z, n);
                4.0 / (c * c)
            })
            .collect();
        Ok(Self {
            g0: 1.0,
            variances,
            blocks: (1..=n_max).collect(),
            times: (1..=n_max).map(|n| n as f64).collect(),
        })
    }

    /// Merges blocks so that only the listed block indices are reported.
    /// The absorbed process is a Brownian motion in its accumulated
    /// variance, so merging leaves the law at the checkpoints unchanged.
    pub fn coarsen(&self, checkpoints: &[usize]) -> Result<Self> {
        let mut variances = Vec::with_capacity(checkpoints.len());
        let mut blocks = Vec::with_capacity(checkpoints.len());
        let mut times = Vec::with_capacity(checkpoints.len());
        let mut acc = 0.0;
        let mut next = 0;
        for (i, (&b, &v)) in self.blocks.iter().zip(&self.variances).enumerate() {
            acc += v;
            if next < checkpoints.len() && checkpoints[next] == b {
                variances.push(acc);
                blocks.push(b);
                times.push(self.times[i]);
                acc = 0.0;
                next += 1;
            }
        }
        if next != checkpoints.len() {
            return Err(Error::InvalidArgument(
                "checkpoints must be increasing block indices within the plan".into(),
            ));
        }
        Ok(Self {
            g0: self.g0,
            variances,
            blocks,
            times,
        })
    }

    /// Index into `blocks` of the interval in which `G` is absorbed.
    ///
    /// Each interval is sampled exactly: draw the endpoint, absorb if it is
    /// not positive, otherwise absorb with the bridge crossing probability
    /// `exp(-2 G G' / v)`.
    pub fn simulate<G: GaussianSource>(&self, stream: &mut G) -> Option<usize> {
        let mut g = self.g0;
        for (i, &v) in self.variances.iter().enumerate() {
            let next = g + v.sqrt() * stream.standard_normal();
            if next <= 0.0 {
                return Some(i);
            }
            let x = 2.0 * g * next / v;
            if x < 40.0 && stream.uniform() < (-x).exp() {
                return Some(i);
            }
            g = next;
        }
        None
    }

    /// `P(G` not absorbed by checkpoint `i)` = `erf(G_0 / sqrt(2 V_i))`.
    pub fn exact_survival(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.variances
            .iter()
            .map(|v| {
                acc += v;
                special::prob_abs_normal_within(self.g0 / acc.sqrt())
            })
            .collect()
    }
}

/// `|L^-1 H(n) z|`, with `H(0)` the identity.
pub fn bounded_norm(kernel: &TransitionKernel, z: &StateVector, n: usize) -> f64 {
    if n == 0 {
        return kernel.whiten(z).norm();
    }
    kernel.whiten(&(kernel.flow_matrix_unchecked(n as f64) * z.as_ref())).norm()
}

/// Per-block gain `c_n / c_(n-1)` of the unit-block recursion.
pub fn bounded_gain(kernel: &TransitionKernel, z: &StateVector, n: usize) -> f64 {
    bounded_norm(kernel, z, n) / bounded_norm(kernel, z, n - 1)
}

/// First absorbing block of the scalar process, or `None` within `n_max`.
pub fn simulate_lookahead_scalar<G: GaussianSource>(
    kernel: &TransitionKernel,
    z: &StateVector,
    alpha: f64,
    n_max: usize,
    stream: &mut G,
) -> Result<Option<usize>> {
    let plan = ScalarPlan::geometric(kernel, z, alpha, n_max)?;
    Ok(plan.simulate(stream).map(|i| plan.blocks[i]))
}

/// `sum_{m=1}^n m^-s`, summed from the small terms up.
pub fn zeta_partial_sum(s: f64, n: usize) -> f64 {
    (1..=n).rev().map(|m| (m as f64).powf(-s)).sum()
}
