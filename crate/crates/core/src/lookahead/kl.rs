//! Karhunen-Loeve basis of Brownian motion on `[0, 1]` and its iterated
//! integrals.
//!
//! `B(t) = sum_k sqrt(lambda_k) xi_k f_k(t)` with `f_k(t) = sqrt(2) sin(omega_k t)`,
//! `omega_k = (k - 1/2) pi`, `lambda_k = 1/omega_k^2`.

use nalgebra::DMatrix;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;

pub fn mode_frequency(k_mode: usize) -> f64 {
    (k_mode as f64 - 0.5) * PI
}

/// Value at `t` of the `r`-fold iterated integral of `f_k` from 0.
///
/// Closed form: `sqrt(2) Im[(i w)^-r (e^(i w t) - sum_{j<r} (i w t)^j / j!)]`.
/// For `w t <= r + 1` the bracket suffers cancellation, so its tail series
/// `sum_{j>=r} (i w)^(j-r) t^j / j!` is summed instead.
pub fn iterated_eigenfunction_value(r: usize, k_mode: usize, t: f64) -> Result<f64> {
    if k_mode == 0 {
        return Err(Error::InvalidArgument("mode index starts at 1".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    Ok(iterated_value_unchecked(r, mode_frequency(k_mode), t))
}

pub(crate) fn iterated_value_unchecked(r: usize, w: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let x = w * t;
    if x > r as f64 + 1.0 {
        // e^(ix) - sum_{j<r} (ix)^j/j!, then divide by (iw)^r
        let (mut re, mut im) = (x.cos(), x.sin());
        let (mut pr, mut pi) = (1.0, 0.0); // (ix)^j / j!
        for j in 0..r {
            re -= pr;
            im -= pi;
            let jf = (j + 1) as f64;
            let (nr, ni) = (-pi * x / jf, pr * x / jf);
            pr = nr;
            pi = ni;
        }
        // (i)^-r = (-i)^r
        let (cr, ci) = match r % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, 1.0),
        };
        let scale = w.powi(-(r as i32));
        SQRT_2 * scale * (cr * im + ci * re)
    } else {
        // sum_{j>=r} (iw)^(j-r) t^j / j!  =  t^r/r! sum_m (ix)^m r!/(r+m)!
        let mut term_r = 1.0;
        let mut term_i = 0.0;
        let mut sr = 0.0;
        let mut si = 0.0;
        let mut m = 0usize;
        loop {
            sr += term_r;
            si += term_i;
            m += 1;
            let f = x / (r + m) as f64;
            let (nr, ni) = (-term_i * f, term_r * f);
            term_r = nr;
            term_i = ni;
            if term_r.abs() + term_i.abs() < 1e-18 * (sr.abs() + si.abs()).max(1e-300) && m > 2 {
                break;
            }
            if m > 400 {
                break;
            }
        }
        let mut pref = 1.0;
        for j in 1..=r {
            pref *= t / j as f64;
        }
        SQRT_2 * pref * si
    }
}

/// Truncated basis: eigenvalues and iterated values `f_{r,k}(1)`.
#[derive(Debug, Clone)]
pub struct KLBasis {
    modes: usize,
    lambdas: Vec<f64>,
    /// `values[r][k-1] = f_{r,k}(1)`
    values: Vec<Vec<f64>>,
}

impl KLBasis {
    pub fn new(modes: usize, max_order: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("at least one mode required".into()));
        }
        let lambdas = (1..=modes).map(|k| mode_frequency(k).powi(-2)).collect();
        let values = (0..=max_order)
            .map(|r| {
                (1..=modes)
                    .map(|k| iterated_value_unchecked(r, mode_frequency(k), 1.0))
                    .collect()
            })
            .collect();
        Ok(Self {
            modes,
            lambdas,
            values,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn value(&self, r: usize, k_mode: usize) -> f64 {
        self.values[r][k_mode - 1]
    }
}

/// `e_{j,k} = sqrt(lambda_k) sum_r (L^-1)_{j,r} f_{r,k}(1)`: the map from
/// KL coefficients to the whitened iterated integrals at time 1.
#[derive(Debug, Clone)]
pub struct CouplingMatrixE {
    e: DMatrix<f64>,
    /// `L E`, entries `sqrt(lambda_k) f_{r,k}(1)`.
    le: DMatrix<f64>,
    lambdas: Vec<f64>,
}

pub fn build_e(kernel: &TransitionKernel, modes: usize) -> Result<CouplingMatrixE> {
    let basis = KLBasis::new(modes, kernel.k())?;
    let dim = kernel.dim();
    let le = DMatrix::from_fn(dim, modes, |r, k| basis.lambdas[k].sqrt() * basis.values[r][k]);
    let e = kernel.l_inv() * &le;
    Ok(CouplingMatrixE {
        e,
        le,
        lambdas: basis.lambdas,
    })
}

impl CouplingMatrixE {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn l_times_e(&self) -> &DMatrix<f64> {
        &self.le
    }

    pub fn modes(&self) -> usize {
        self.e.ncols()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `E E^T`, which tends to the identity as the truncation grows.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.e * self.e.transpose()
    }

    /// Largest entry of `|E E^T - I|`.
    pub fn gram_residual(&self) -> f64 {
        let g = self.gram();
        let n = g.nrows();
        (g - DMatrix::<f64>::identity(n, n)).abs().max()
    }
}
