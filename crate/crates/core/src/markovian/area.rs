//! Law of the area swept by a Brownian motion before it first hits zero.
//!
//! For a unit-rate Brownian motion started at `a > 0` and stopped at its first
//! zero, the area has density
//! `c a u^(-4/3) exp(-2a^3/(9u))` with `c = 2^(1/3) / (3^(2/3) Gamma(1/3))`.
//! The substitution `w = 2a^3/(9u)` turns the upper tail into the regularized
//! lower incomplete gamma function `P(1/3, 2a^3/(9t))`.

use crate::error::{require_positive, Result};
use crate::quad;
use crate::special::{gamma_one_third, regularized_lower_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaLaw {
    a: f64,
}

impl AreaLaw {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Self {
            a: require_positive("a", a)?,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn density(&self, u: f64) -> Result<f64> {
        area_density(self.a, u)
    }

    pub fn tail(&self, t: f64) -> Result<f64> {
        area_tail(self.a, t)
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.tail(t)?)
    }

    /// `lim_{t->inf} t^(1/3) P(area > t) = a 6^(1/3) / Gamma(1/3)`.
    pub fn tail_constant(&self) -> f64 {
        self.a * 6f64.cbrt() / gamma_one_third()
    }

    /// Bounds on `t^(1/3) P(area > t)` valid for every `t > 0`:
    /// `C e^(-2a^3/(9t)) <= t^(1/3) tail <= C` with `C` the tail constant.
    pub fn scaled_tail_bounds(&self, t: f64) -> (f64, f64) {
        let c = self.tail_constant();
        (c * (-2.0 * self.a.powi(3) / (9.0 * t)).exp(), c)
    }
}

fn density_constant() -> f64 {
    2f64.cbrt() / (9f64.cbrt() * gamma_one_third())
}

pub fn area_density(a: f64, u: f64) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("u", u)?;
    Ok(density_constant() * a * u.powf(-4.0 / 3.0) * (-2.0 * a.powi(3) / (9.0 * u)).exp())
}

pub fn area_tail(a: f64, t: f64) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("t", t)?;
    Ok(regularized_lower_gamma(1.0 / 3.0, 2.0 * a.powi(3) / (9.0 * t)))
}

/// `P(area > t)` by adaptive quadrature of the density, independent of the
/// incomplete-gamma route.
///
/// With `u = s^-3` the tail becomes `3 c a int_0^(t^(-1/3)) exp(-(2a^3/9) s^3) ds`,
/// a smooth integrand on a finite interval.
pub fn area_tail_by_quadrature(a: f64, t: f64) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("t", t)?;
    let b = 2.0 * a.powi(3) / 9.0;
    let upper = t.cbrt().recip();
    let integral = quad::integrate(|s| (-b * s * s * s).exp(), 0.0, upper, 0.0, 1e-13);
    Ok(3.0 * density_constant() * a * integral)
}

/// Law of the first half-cycle length `S_1` of the classical coupling from
/// `(U, V) = (1, 0)`: `S_1 / 4` is an area with start height `3/4`.
pub fn first_half_cycle_tail(t: f64) -> Result<f64> {
    area_tail(0.75, t / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(area_density(0.0, 1.0).is_err());
        assert!(area_density(1.0, -1.0).is_err());
        assert!(area_tail(-1.0, 1.0).is_err());
        assert!(area_tail(1.0, 0.0).is_err());
        assert!(AreaLaw::new(f64::NAN).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        // split at 1 and map (1, inf) through u = 1/s
        for a in [0.3, 0.75, 2.0] {
            let inner = quad::integrate(|u| area_density(a, u).unwrap(), 1e-300, 1.0, 0.0, 1e-13);
            let outer = quad::integrate(
                |s| {
                    if s <= 0.0 {
                        0.0
                    } else {
                        area_density(a, 1.0 / s).unwrap() / (s * s)
                    }
                },
                0.0,
                1.0,
                0.0,
                1e-13,
            );
            assert!((inner + outer - 1.0).abs() < 1e-8, "a={a}: {}", inner + outer);
        }
    }

    #[test]
    fn density_value_at_one() {
        let g = 2.678_938_534_707_747_6_f64;
        let expect = 2f64.powf(1.0 / 3.0) / (3f64.powf(2.0 / 3.0) * g) * 0.75 * (-2.0 * 0.421_875 / 9.0f64).exp();
        assert!((area_density(0.75, 1.0).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn density_power_tail() {
        let a = 0.75;
        let limit = density_constant() * a;
        let far = area_density(a, 1e12).unwrap() * 1e16;
        assert!((far / limit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_matches_quadrature() {
        for a in [0.1, 0.75, 1.0, 3.0] {
            let mut t = 1e-2;
            while t <= 1e4 {
                let closed = area_tail(a, t).unwrap();
                let quad = area_tail_by_quadrature(a, t).unwrap();
                assert!((closed - quad).abs() <= 1e-8 * quad, "a={a} t={t}: {closed} vs {quad}");
                t *= 3.0;
            }
        }
    }

    #[test]
    fn tail_limits() {
        assert!((area_tail(1.0, 1e-9).unwrap() - 1.0).abs() < 1e-15);
        assert!(area_tail(1.0, 1e30).unwrap() < 1e-9);
    }

    #[test]
    fn scaled_tail_inside_bounds() {
        for a in [0.5, 0.75, 2.0] {
            let law = AreaLaw::new(a).unwrap();
            for t in [1e-2f64, 1.0, 10.0, 1e3, 1e6] {
                let v = t.cbrt() * law.tail(t).unwrap();
                let (lo, hi) = law.scaled_tail_bounds(t);
                assert!(lo <= v && v <= hi, "a={a} t={t}: {lo} <= {v} <= {hi}");
            }
            let v = 1e12f64.cbrt() * law.tail(1e12).unwrap();
            assert!((v / law.tail_constant() - 1.0).abs() < 1e-3);
        }
    }
}
