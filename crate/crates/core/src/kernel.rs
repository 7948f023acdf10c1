//! Exact linear-Gaussian machinery for the index-k Kolmogorov diffusion.
//!
//! The state is `(I_0, I_1, ..., I_k)` where `I_0` is a Brownian motion and
//! `I_r` its r-fold iterated time integral. Started at `x`, the state at time
//! `t` is Gaussian with mean `H(t) x` and covariance `t D(t) V D(t)`, where
//!
//! * `H[a][b] = 1/(a-b)!` for `a >= b` (lower triangular, unit diagonal),
//! * `D(t) = diag(1, t, ..., t^k)` and `H(t) = D(t) H D(1/t)`,
//! * `V[a][b] = binom(a+b, a) / (a+b+1)! = 1 / (a! b! (a+b+1))`,
//! * `V = L L^T` with `L` lower triangular and positive on the diagonal.
//!
//! Every matrix is built from exact integer factorials. `L` uses the closed
//! form that comes from expanding monomials in orthonormal shifted Legendre
//! polynomials (`V` is a diagonally rescaled Hilbert matrix).

use nalgebra::{DMatrix, DVector};
use std::ops::Deref;

use crate::error::{require_positive, Error, Result};
use crate::special;

/// Largest supported index: `(20!)^2 * 41` still fits in a `u128`.
pub const MAX_INDEX: usize = 20;

/// Number of iterated integrals carried by the diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiffusionIndex(usize);

impl DiffusionIndex {
    pub fn new(k: usize) -> Result<Self> {
        if k > MAX_INDEX {
            return Err(Error::IndexTooLarge(k));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// State dimension `k + 1`.
    pub fn dim(self) -> usize {
        self.0 + 1
    }
}

/// A point `(x_0, ..., x_k)` of the state space. Coordinate `r` carries
/// units of space times time^r.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(DVector::from_vec(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn from_vector(v: DVector<f64>) -> Self {
        Self(v)
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Index of the first nonzero coordinate, `None` for the zero vector.
    pub fn leading_order(&self) -> Option<usize> {
        self.0.iter().position(|&c| c != 0.0)
    }
}

impl Deref for StateVector {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

/// `{w : normal . (w - point) = 0}`, with a unit normal.
#[derive(Debug, Clone)]
pub struct Hyperplane {
    pub normal: DVector<f64>,
    pub point: DVector<f64>,
}

impl Hyperplane {
    pub fn signed_distance(&self, w: &DVector<f64>) -> f64 {
        self.normal.dot(&(w - &self.point))
    }

    /// Orthonormal basis of the directions lying in the hyperplane.
    pub fn tangent_basis(&self) -> Vec<DVector<f64>> {
        let dim = self.normal.len();
        let mut basis: Vec<DVector<f64>> = vec![self.normal.clone()];
        for axis in 0..dim {
            let mut v = DVector::zeros(dim);
            v[axis] = 1.0;
            for b in &basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
            let n = v.norm();
            if n > 1e-8 {
                basis.push(v / n);
            }
            if basis.len() == dim {
                break;
            }
        }
        basis.remove(0);
        basis
    }
}

/// Result of the maximal-coupling computation for one discrepancy.
#[derive(Debug, Clone, Copy)]
pub struct MaximalTail {
    /// `P(tau > T)` for a maximal coupling, equal to the TV distance.
    pub lower_bound: f64,
    /// Index of the first nonzero coordinate of the discrepancy; the bound
    /// decays as `T^-(order + 1/2)`.
    pub order: usize,
    /// Half-width `l = |L^-1 H D(1/T) z| / (2 sqrt T)` of the normal window.
    pub half_width: f64,
}

impl MaximalTail {
    /// `sqrt(2/pi) l exp(-l^2/2) <= P(|N| <= l) <= sqrt(2/pi) l`.
    pub fn naive_bounds(&self) -> (f64, f64) {
        let l = self.half_width;
        let c = (2.0 / std::f64::consts::PI).sqrt() * l;
        (c * (-0.5 * l * l).exp(), c)
    }
}

/// The structure matrices for a fixed index.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    index: DiffusionIndex,
    h: DMatrix<f64>,
    v: DMatrix<f64>,
    l: DMatrix<f64>,
    l_inv: DMatrix<f64>,
}

pub(crate) fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Builds `H`, `V` and the positive-diagonal Cholesky factor `L`.
pub fn build_kernel(index: DiffusionIndex) -> TransitionKernel {
    let dim = index.dim();
    let h = DMatrix::from_fn(dim, dim, |a, b| {
        if a >= b {
            1.0 / factorial(a - b) as f64
        } else {
            0.0
        }
    });
    let v = DMatrix::from_fn(dim, dim, |a, b| {
        1.0 / (factorial(a) * factorial(b) * (a + b + 1) as u128) as f64
    });
    // L[a][b] = sqrt(2b+1) a! / ((a-b)! (a+b+1)!)
    //         = sqrt(2b+1) / ((a-b)! * (a+1)(a+2)...(a+b+1))
    let l = DMatrix::from_fn(dim, dim, |a, b| {
        if a < b {
            return 0.0;
        }
        let rising: u128 = ((a + 1) as u128..=(a + b + 1) as u128).product();
        let denom = factorial(a - b) as f64 * rising as f64;
        ((2 * b + 1) as f64).sqrt() / denom
    });
    let l_inv = lower_triangular_inverse(&l);
    TransitionKernel {
        index,
        h,
        v,
        l,
        l_inv,
    }
}

/// Column-by-column forward substitution against the identity.
fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = DVector::zeros(n);
        e[col] = 1.0;
        let x = forward_substitute(l, &e);
        inv.set_column(col, &x);
    }
    inv
}

pub(crate) fn forward_substitute(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = DVector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * x[j];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

fn back_substitute_transposed(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= l[(j, i)] * x[j];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

impl TransitionKernel {
    pub fn new(k: usize) -> Result<Self> {
        Ok(build_kernel(DiffusionIndex::new(k)?))
    }

    pub fn index(&self) -> DiffusionIndex {
        self.index
    }

    pub fn k(&self) -> usize {
        self.index.get()
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn l_inv(&self) -> &DMatrix<f64> {
        &self.l_inv
    }

    pub(crate) fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Diagonal of `D(t)`: `(1, t, ..., t^k)`.
    pub fn scaling_diagonal(&self, t: f64) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| t.powi(i as i32))
    }

    pub fn scaling(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.scaling_diagonal(t))
    }

    /// `H(t) = D(t) H D(1/t)`; entry `(a, b)` is `t^(a-b)/(a-b)!`.
    pub fn flow_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        require_positive("t", t)?;
        Ok(self.flow_matrix_unchecked(t))
    }

    pub(crate) fn flow_matrix_unchecked(&self, t: f64) -> DMatrix<f64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |a, b| {
            if a >= b {
                t.powi((a - b) as i32) / factorial(a - b) as f64
            } else {
                0.0
            }
        })
    }

    /// Mean `H(T) x` and covariance `T D(T) V D(T)` of the state at time `T`.
    pub fn mean_and_covariance(
        &self,
        x: &StateVector,
        t: f64,
    ) -> Result<(StateVector, DMatrix<f64>)> {
        require_positive("T", t)?;
        self.check_dim(x)?;
        let mean = self.flow_matrix_unchecked(t) * &x.0;
        Ok((StateVector(mean), self.covariance(t)))
    }

    pub fn covariance(&self, t: f64) -> DMatrix<f64> {
        let d = self.scaling_diagonal(t);
        DMatrix::from_fn(self.dim(), self.dim(), |a, b| t * d[a] * self.v[(a, b)] * d[b])
    }

    /// `L^-1 y` by forward substitution.
    pub fn whiten(&self, y: &DVector<f64>) -> DVector<f64> {
        forward_substitute(&self.l, y)
    }

    /// `V^-1 y` by a Cholesky solve.
    pub fn v_solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let w = forward_substitute(&self.l, y);
        back_substitute_transposed(&self.l, &w)
    }

    /// `|L^-1 H D(1/T) z|`, the whitened discrepancy of the two means.
    pub fn discrepancy_norm(&self, z: &DVector<f64>, t: f64) -> f64 {
        let scaled = z.component_mul(&self.scaling_diagonal(1.0 / t));
        self.whiten(&(&self.h * scaled)).norm()
    }

    /// Total variation distance between the laws at time `T` of the
    /// diffusions started at `x1` and `x2`.
    pub fn tv_distance(&self, x1: &StateVector, x2: &StateVector, t: f64) -> Result<f64> {
        require_positive("T", t)?;
        self.check_dim(x1)?;
        self.check_dim(x2)?;
        let z = &x1.0 - &x2.0;
        let half_width = self.discrepancy_norm(&z, t) / (2.0 * t.sqrt());
        Ok(special::prob_abs_normal_within(half_width))
    }

    /// Tail of a maximal coupling for discrepancy `z` at time `T`.
    pub fn maximal_tail(&self, z: &StateVector, t: f64) -> Result<MaximalTail> {
        require_positive("T", t)?;
        self.check_dim(z)?;
        let order = z.leading_order().ok_or(Error::AlreadyCoupled)?;
        let half_width = self.discrepancy_norm(z, t) / (2.0 * t.sqrt());
        Ok(MaximalTail {
            lower_bound: special::prob_abs_normal_within(half_width),
            order,
            half_width,
        })
    }

    /// The hyperplane on which the time-`t` transition densities from
    /// `x_plus` and `x_minus` agree.
    pub fn agreement_hyperplane(
        &self,
        x_plus: &StateVector,
        x_minus: &StateVector,
        t: f64,
    ) -> Result<Hyperplane> {
        require_positive("t", t)?;
        self.check_dim(x_plus)?;
        self.check_dim(x_minus)?;
        let z = &x_plus.0 - &x_minus.0;
        if z.iter().all(|&c| c == 0.0) {
            return Err(Error::AlreadyCoupled);
        }
        // (t^k D(1/t)) V^-1 H (t^k D(1/t)) z
        let k = self.k() as i32;
        let s = DVector::from_fn(self.dim(), |i, _| t.powi(k - i as i32));
        let inner = &self.h * z.component_mul(&s);
        let normal = self.v_solve(&inner).component_mul(&s);
        let norm = normal.norm();
        let point = self.flow_matrix_unchecked(t) * (&x_plus.0 + &x_minus.0) * 0.5;
        Ok(Hyperplane {
            normal: normal / norm,
            point,
        })
    }

    /// Log of the transition density from `x` to `w` over time `t`.
    pub fn log_transition_density(&self, x: &DVector<f64>, t: f64, w: &DVector<f64>) -> f64 {
        let mean = self.flow_matrix_unchecked(t) * x;
        let scaled = (w - mean).component_mul(&self.scaling_diagonal(1.0 / t));
        let white = self.whiten(&scaled);
        let q = white.norm_squared() / t;
        let dim = self.dim() as f64;
        let k = self.k() as f64;
        // log det(t D(t) V D(t)) = dim ln t + k(k+1) ln t + 2 sum ln L_ii
        let log_det_l: f64 = (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum();
        let log_det = dim * t.ln() + k * (k + 1.0) * t.ln() + 2.0 * log_det_l;
        -0.5 * (q + log_det + dim * (2.0 * std::f64::consts::PI).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn index_one_matrices() {
        let kern = TransitionKernel::new(1).unwrap();
        assert_eq!(kern.h(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        let v = kern.v();
        assert_close(v[(0, 0)], 1.0, 0.0);
        assert_close(v[(0, 1)], 0.5, 0.0);
        assert_close(v[(1, 1)], 1.0 / 3.0, 1e-16);
        let l = kern.l();
        assert_close(l[(0, 0)], 1.0, 0.0);
        assert_close(l[(1, 0)], 0.5, 0.0);
        assert_close(l[(1, 1)], 1.0 / (2.0 * 3f64.sqrt()), 1e-16);
        assert_close(l[(0, 1)], 0.0, 0.0);
    }

    #[test]
    fn index_zero_is_scalar_brownian_motion() {
        let kern = TransitionKernel::new(0).unwrap();
        assert_eq!(kern.h()[(0, 0)], 1.0);
        assert_eq!(kern.v()[(0, 0)], 1.0);
        assert_eq!(kern.l()[(0, 0)], 1.0);
        let (m, c) = kern
            .mean_and_covariance(&StateVector::new(vec![0.3]), 2.5)
            .unwrap();
        assert_eq!(m[0], 0.3);
        assert_close(c[(0, 0)], 2.5, 1e-15);
    }

    #[test]
    fn rejects_large_index() {
        assert!(matches!(DiffusionIndex::new(21), Err(Error::IndexTooLarge(21))));
        assert!(DiffusionIndex::new(20).is_ok());
    }

    #[test]
    fn closed_form_cholesky_matches_numeric_factorization() {
        for k in 0..=8 {
            let kern = TransitionKernel::new(k).unwrap();
            let numeric = kern.v().clone().cholesky().unwrap().l();
            let diff = (&numeric - kern.l()).abs().max();
            // conditioning of V grows quickly with k
            assert!(diff < 1e-12 * 10f64.powi(k as i32), "k={k}: {diff}");
            assert_eq!(kern.l().row(0).iter().copied().collect::<Vec<_>>()[0], 1.0);
            assert!(kern.l().row(0).iter().skip(1).all(|&c| c == 0.0));
        }
    }

    #[test]
    fn inverse_of_l_matches_legendre_coefficients() {
        // (L^-1)[j][i] = sqrt(2j+1) (-1)^(i+j) binom(j,i) binom(i+j,i) i!
        fn binom(n: usize, r: usize) -> f64 {
            (factorial(n) / (factorial(r) * factorial(n - r))) as f64
        }
        for k in 0..=10 {
            let kern = TransitionKernel::new(k).unwrap();
            for j in 0..=k {
                for i in 0..=j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let expected = ((2 * j + 1) as f64).sqrt()
                        * sign
                        * binom(j, i)
                        * binom(i + j, i)
                        * factorial(i) as f64;
                    let got = kern.l_inv()[(j, i)];
                    assert!(
                        (got - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                        "k={k} ({j},{i}): {got} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn flow_matrix_examples() {
        let kern = TransitionKernel::new(1).unwrap();
        let h2 = kern.flow_matrix(2.0).unwrap();
        assert_eq!(h2, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]));
        for k in 0..6 {
            let kern = TransitionKernel::new(k).unwrap();
            assert_eq!(&kern.flow_matrix(1.0).unwrap(), kern.h());
        }
        assert!(kern.flow_matrix(0.0).is_err());
        assert!(kern.flow_matrix(-1.0).is_err());
    }

    #[test]
    fn mean_examples() {
        let kern = TransitionKernel::new(1).unwrap();
        let (m, c) = kern
            .mean_and_covariance(&StateVector::new(vec![0.0, 0.0]), 1.0)
            .unwrap();
        assert_eq!(m.as_slice(), &[0.0, 0.0]);
        assert_eq!(&c, kern.v());
        let (m, _) = kern
            .mean_and_covariance(&StateVector::new(vec![1.0, 0.0]), 2.0)
            .unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0]);
        assert!(kern
            .mean_and_covariance(&StateVector::new(vec![1.0]), 1.0)
            .is_err());
        assert!(kern
            .mean_and_covariance(&StateVector::new(vec![1.0, 0.0]), 0.0)
            .is_err());
    }

    #[test]
    fn tv_examples() {
        let k0 = TransitionKernel::new(0).unwrap();
        let a = StateVector::new(vec![2.0]);
        let b = StateVector::new(vec![0.0]);
        assert_close(k0.tv_distance(&a, &b, 1.0).unwrap(), 0.682_689_492_137_085_9, 1e-15);
        assert_eq!(k0.tv_distance(&a, &a, 3.0).unwrap(), 0.0);

        // k=1, z=(0,1): half-width sqrt(3) T^(-3/2)
        let k1 = TransitionKernel::new(1).unwrap();
        let x1 = StateVector::new(vec![0.0, 1.0]);
        let x2 = StateVector::new(vec![0.0, 0.0]);
        for &t in &[0.5f64, 1.0, 7.0, 100.0] {
            let l: f64 = 3f64.sqrt() * t.powf(-1.5);
            let expected = libm::erf(l / 2f64.sqrt());
            assert_close(k1.tv_distance(&x1, &x2, t).unwrap(), expected, 1e-15);
        }
    }

    #[test]
    fn maximal_tail_orders() {
        let kern = TransitionKernel::new(3).unwrap();
        let z = StateVector::new(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(kern.maximal_tail(&z, 10.0).unwrap().order, 0);
        let z = StateVector::new(vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(kern.maximal_tail(&z, 10.0).unwrap().order, 3);
        assert!(matches!(
            kern.maximal_tail(&StateVector::zeros(4), 1.0),
            Err(Error::AlreadyCoupled)
        ));
        let tail = kern
            .maximal_tail(&StateVector::new(vec![0.0, 2.0, -1.0, 0.5]), 4.0)
            .unwrap();
        let (lo, hi) = tail.naive_bounds();
        assert!(lo <= tail.lower_bound && tail.lower_bound <= hi);
    }

    #[test]
    fn hyperplane_index_one_normal() {
        let kern = TransitionKernel::new(1).unwrap();
        let xp = StateVector::new(vec![0.0, 0.5]);
        let xm = StateVector::new(vec![0.0, -0.5]);
        for &t in &[0.3, 1.0, 5.0] {
            let hp = kern.agreement_hyperplane(&xp, &xm, t).unwrap();
            let expected = DVector::from_vec(vec![-t, 2.0]).normalize();
            let aligned = hp.normal.dot(&expected).abs();
            assert_close(aligned, 1.0, 1e-13);
            assert_close(hp.point.norm(), 0.0, 1e-15);
        }
        assert!(kern.agreement_hyperplane(&xp, &xp, 1.0).is_err());
    }

    #[test]
    fn hyperplane_index_zero_is_midpoint() {
        let kern = TransitionKernel::new(0).unwrap();
        let hp = kern
            .agreement_hyperplane(&StateVector::new(vec![3.0]), &StateVector::new(vec![-1.0]), 2.0)
            .unwrap();
        assert_eq!(hp.point[0], 1.0);
        assert_eq!(hp.normal[0].abs(), 1.0);
        assert!(hp.tangent_basis().is_empty());
    }

    #[test]
    fn log_density_matches_scalar_normal() {
        let kern = TransitionKernel::new(0).unwrap();
        let x = DVector::from_vec(vec![0.5]);
        let w = DVector::from_vec(vec![1.7]);
        let t: f64 = 2.0;
        let expected = -0.5 * (1.2f64 * 1.2 / t) - 0.5 * (2.0 * std::f64::consts::PI * t).ln();
        assert_close(kern.log_transition_density(&x, t, &w), expected, 1e-14);
    }
}
