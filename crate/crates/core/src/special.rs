//! Thin wrappers over vetted special-function implementations.

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(|N(0,1)| <= l)`.
pub fn prob_abs_normal_within(l: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    libm::erf(l / std::f64::consts::SQRT_2)
}

/// Gamma(1/3).
pub fn gamma_one_third() -> f64 {
    statrs::function::gamma::gamma(1.0 / 3.0)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x)
}
