//! Path-level look-ahead coupling on a truncated KL mode space.
//!
//! On block `n` (length `T`, starting at `S_n`) each copy's Brownian motion is
//! `B(t) = sum_k sqrt(lambda_k) w_k(T) f_k(t/T)` with mode coefficients
//! `w = P b`. `P` is the Householder reflection sending the first axis to
//! `v = E^T eta / |E^T eta|`, and `b` collects independent drivers. Copy 1
//! uses `b`, copy 2 reflects the first driver until `sigma`, the time it
//! first reaches `-|y|/2` where `y = L^-1 H D(1/T) Z`. The block-end update
//! is `I(S_n + T) = H(T) I(S_n) + D(T) L E w`.
//!
//! Only the first driver needs a path (for `sigma`); it is walked on an
//! algorithmic-time grid with a bridge-crossing correction. The other drivers
//! enter only through their endpoints.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kernel::{StateVector, TransitionKernel};
use crate::lookahead::kl::{iterated_value_unchecked, mode_frequency, CouplingMatrixE};
use crate::lookahead::scalar::{BlockSchedule, BlockState};
use crate::noise::GaussianSource;
use crate::path::PathSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCouplingSettings {
    pub alpha: f64,
    pub n_blocks: usize,
    /// Algorithmic-time grid points per block for the first driver.
    pub grid_per_block: usize,
    /// Extra process-time points reported inside each block.
    pub interior_points: usize,
}

/// What happened on one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    /// Discrepancy at the start of the block (`f` is `|L^-1 D(1/T_n) Z_n|`).
    pub state: BlockState,
    pub start: f64,
    pub length: f64,
    /// `|L^-1 H D(1/T) Z_n|` for this block's `T`.
    pub rho: f64,
    /// `B_1(sigma ^ T)`.
    pub driver_stopped: f64,
    pub crossed: bool,
    /// `|L^-1 D(1/T) Z_(n+1)|` from the reconstructed paths.
    pub f_path: f64,
    /// `rho + 2 B_1(sigma ^ T)` from the scalar recursion.
    pub f_scalar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub first: PathSample,
    pub second: PathSample,
    pub blocks: Vec<BlockRecord>,
    /// `n` such that the scalar recursion reached 0 on `[S_(n-1), S_n]`.
    pub coupled_block: Option<usize>,
}

pub fn simulate_lookahead_paths<G: GaussianSource>(
    kernel: &TransitionKernel,
    x1: &StateVector,
    x2: &StateVector,
    e: &CouplingMatrixE,
    settings: &PathCouplingSettings,
    stream: &mut G,
) -> Result<CoupledPaths> {
    kernel.check_dim(x1)?;
    kernel.check_dim(x2)?;
    let dim = kernel.dim();
    let modes = e.modes();
    if modes < dim {
        return Err(Error::InvalidArgument(format!(
            "{modes} modes cannot carry {dim} orthonormal rows"
        )));
    }
    if e.matrix().nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: e.matrix().nrows(),
        });
    }
    if settings.n_blocks == 0 || settings.grid_per_block == 0 {
        return Err(Error::InvalidArgument("n_blocks and grid_per_block must be positive".into()));
    }
    let schedule = BlockSchedule::geometric(settings.alpha)?;

    let mut a: DVector<f64> = x1.as_ref().clone();
    let mut b: DVector<f64> = x2.as_ref().clone();
    let mut first = PathSample {
        times: vec![0.0],
        states: vec![x1.clone()],
    };
    let mut second = PathSample {
        times: vec![0.0],
        states: vec![x2.clone()],
    };
    let mut blocks = Vec::with_capacity(settings.n_blocks);
    let mut coupled_block: Option<usize> = None;
    let mut synchronous = a == b;
    let mut prev_len = 1.0;

    let mut drivers = vec![0.0; modes];
    let mut w1 = DVector::zeros(modes);
    for n in 0..settings.n_blocks {
        let start = schedule.end(n);
        let t = schedule.length(n + 1);
        let z = &a - &b;
        let f_start = kernel.whiten(&z.component_mul(&kernel.scaling_diagonal(1.0 / prev_len))).norm();
        let nu = if f_start > 0.0 {
            kernel.whiten(&z.component_mul(&kernel.scaling_diagonal(1.0 / prev_len))) / f_start
        } else {
            DVector::zeros(dim)
        };
        let state = BlockState {
            n,
            nu,
            f: f_start,
            coupled_at: coupled_block,
        };

        let sqrt_t = t.sqrt();
        let (w2, rho, stopped, crossed);
        if synchronous {
            stream.fill_normals(&mut drivers);
            for (wi, d) in w1.iter_mut().zip(&drivers) {
                *wi = sqrt_t * d;
            }
            w2 = w1.clone();
            rho = 0.0;
            stopped = 0.0;
            crossed = false;
        } else {
            let y = kernel.whiten(&(kernel.h() * z.component_mul(&kernel.scaling_diagonal(1.0 / t))));
            rho = y.norm();
            let eta = &y / rho;
            let v = (e.matrix().transpose() * &eta).normalize();

            let level = -0.5 * rho;
            let (b_end, hit) = walk_first_driver(t, level, settings.grid_per_block, stream);
            crossed = hit;
            stopped = if hit { level } else { b_end };
            drivers[0] = b_end;
            for d in drivers.iter_mut().skip(1) {
                *d = sqrt_t * stream.standard_normal();
            }
            // w1 = P drivers with P = I - 2 u u^T / |u|^2, u = e_1 - v
            householder_apply(&v, &drivers, &mut w1);
            // copy 2 differs only in the first driver
            let b2_first = if hit { b_end - 2.0 * level } else { -b_end };
            w2 = &w1 + &v * (b2_first - b_end);
        }

        let ew1 = e.l_times_e() * &w1;
        let ew2 = e.l_times_e() * &w2;
        let flow = kernel.flow_matrix_unchecked(t);
        let dt = kernel.scaling_diagonal(t);

        for j in 1..=settings.interior_points {
            let s = t * j as f64 / (settings.interior_points + 1) as f64;
            let (i1, i2) = interior_increments(kernel, e, &w1, &w2, t, s);
            let fs = kernel.flow_matrix_unchecked(s);
            first.times.push(start + s);
            first.states.push(StateVector::from_vector(&fs * &a + i1));
            second.times.push(start + s);
            second.states.push(StateVector::from_vector(&fs * &b + i2));
        }

        a = &flow * &a + ew1.component_mul(&dt);
        b = &flow * &b + ew2.component_mul(&dt);
        first.times.push(start + t);
        first.states.push(StateVector::from_vector(a.clone()));
        second.times.push(start + t);
        second.states.push(StateVector::from_vector(b.clone()));

        let z_new = &a - &b;
        let f_path = kernel.whiten(&z_new.component_mul(&kernel.scaling_diagonal(1.0 / t))).norm();
        let f_scalar = if synchronous {
            f_path
        } else if crossed {
            0.0
        } else {
            rho + 2.0 * stopped
        };
        if !synchronous && crossed {
            coupled_block = Some(n + 1);
            synchronous = true;
        }
        blocks.push(BlockRecord {
            state,
            start,
            length: t,
            rho,
            driver_stopped: stopped,
            crossed,
            f_path,
            f_scalar,
        });
        prev_len = t;
    }
    Ok(CoupledPaths {
        first,
        second,
        blocks,
        coupled_block,
    })
}

/// Walks a standard Brownian motion on `[0, t]` over `steps` cells and
/// reports its endpoint and whether it reached `level < 0`.
fn walk_first_driver<G: GaussianSource>(t: f64, level: f64, steps: usize, stream: &mut G) -> (f64, bool) {
    let h = t / steps as f64;
    let sh = h.sqrt();
    let mut x = 0.0;
    for i in 0..steps {
        let next = x + sh * stream.standard_normal();
        let hit = next <= level || {
            let c = 2.0 * (x - level) * (next - level) / h;
            c < 40.0 && stream.uniform() < (-c).exp()
        };
        if hit {
            let rest = t - (i + 1) as f64 * h;
            let end = next + rest.max(0.0).sqrt() * stream.standard_normal();
            return (end, true);
        }
        x = next;
    }
    (x, false)
}

fn householder_apply(v: &DVector<f64>, x: &[f64], out: &mut DVector<f64>) {
    // u = e_1 - v; |u|^2 = 2 (1 - v_1)
    let denom = 1.0 - v[0];
    for (o, xi) in out.iter_mut().zip(x) {
        *o = *xi;
    }
    if denom.abs() < 1e-300 {
        return;
    }
    let mut ux = x[0];
    for (vi, xi) in v.iter().zip(x) {
        ux -= vi * xi;
    }
    let c = ux / denom;
    out[0] -= c;
    for (o, vi) in out.iter_mut().zip(v.iter()) {
        *o += c * vi;
    }
}

/// Noise parts of the states at `s` within a block of length `t`.
fn interior_increments(
    kernel: &TransitionKernel,
    e: &CouplingMatrixE,
    w1: &DVector<f64>,
    w2: &DVector<f64>,
    t: f64,
    s: f64,
) -> (DVector<f64>, DVector<f64>) {
    let dim = kernel.dim();
    let u = s / t;
    let mut i1 = DVector::zeros(dim);
    let mut i2 = DVector::zeros(dim);
    for (k, lam) in e.lambdas().iter().enumerate() {
        let om = mode_frequency(k + 1);
        let sl = lam.sqrt();
        for r in 0..dim {
            let f = sl * iterated_value_unchecked(r, om, u) * t.powi(r as i32);
            i1[r] += f * w1[k];
            i2[r] += f * w2[k];
        }
    }
    (i1, i2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookahead::kl::build_e;
    use crate::noise::derive_stream;

    fn settings(n_blocks: usize) -> PathCouplingSettings {
        PathCouplingSettings {
            alpha: 2.0,
            n_blocks,
            grid_per_block: 200,
            interior_points: 0,
        }
    }

    #[test]
    fn householder_maps_first_axis() {
        let v = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let mut out = DVector::zeros(3);
        householder_apply(&v, &[1.0, 0.0, 0.0], &mut out);
        assert!((&out - &v).norm() < 1e-15);
        // orthogonal: norms preserved
        householder_apply(&v, &[0.3, -1.2, 2.0], &mut out);
        assert!((out.norm() - (0.09f64 + 1.44 + 4.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn equal_starts_stay_synchronous() {
        let k = TransitionKernel::new(1).unwrap();
        let e = build_e(&k, 64).unwrap();
        let x = StateVector::new(vec![0.5, -1.0]);
        let out = simulate_lookahead_paths(&k, &x, &x, &e, &settings(5), &mut derive_stream(1, 0)).unwrap();
        for (s1, s2) in out.first.states.iter().zip(&out.second.states) {
            assert_eq!(s1, s2);
        }
        assert!(out.blocks.iter().all(|b| b.f_path == 0.0));
    }

    #[test]
    fn too_few_modes_rejected() {
        let k = TransitionKernel::new(2).unwrap();
        let e = build_e(&TransitionKernel::new(2).unwrap(), 2).unwrap();
        let x = StateVector::zeros(3);
        let y = StateVector::new(vec![1.0, 0.0, 0.0]);
        assert!(simulate_lookahead_paths(&k, &x, &y, &e, &settings(1), &mut derive_stream(1, 0)).is_err());
    }

    #[test]
    fn path_norms_follow_scalar_recursion() {
        let k = TransitionKernel::new(1).unwrap();
        let modes = 1024;
        let e = build_e(&k, modes).unwrap();
        let tol = 10.0 / (std::f64::consts::PI.powi(2) * modes as f64);
        let x1 = StateVector::new(vec![1.0, 0.0]);
        let x2 = StateVector::zeros(2);
        for rep in 0..50 {
            let out = simulate_lookahead_paths(&k, &x1, &x2, &e, &settings(6), &mut derive_stream(2, rep)).unwrap();
            for blk in out.blocks.iter().take_while(|b| b.state.coupled_at.is_none()) {
                let scale = 1f64.max(2.0 * blk.driver_stopped.abs());
                assert!((blk.f_path - blk.f_scalar).abs() <= tol * scale, "rep {rep} block {}: {} vs {}", blk.state.n, blk.f_path, blk.f_scalar);
            }
        }
    }

    #[test]
    fn interior_points_join_block_ends() {
        let k = TransitionKernel::new(1).unwrap();
        let e = build_e(&k, 256).unwrap();
        let x1 = StateVector::new(vec![1.0, 0.0]);
        let x2 = StateVector::zeros(2);
        let mut s = settings(2);
        s.interior_points = 50;
        let out = simulate_lookahead_paths(&k, &x1, &x2, &e, &s, &mut derive_stream(3, 0)).unwrap();
        assert_eq!(out.first.len(), 1 + 2 * 51);
        // the point just before a block end is close to it
        let i = 51;
        let d = (out.first.states[i].as_ref() - out.first.states[i - 1].as_ref()).abs().max();
        assert!(d < 1.0);
        assert!(out.first.times.windows(2).all(|w| w[1] > w[0]));
    }
}
