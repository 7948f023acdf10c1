//! Reproducible per-replicate random streams.
//!
//! A stream is a ChaCha8 keystream: the key is expanded from the master seed
//! and the ChaCha stream word is the replicate id, so every
//! `(master_seed, replicate_id)` pair selects a disjoint counter space. Output
//! depends only on that pair, never on which thread consumes it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Source of the driving noise consumed by the simulators.
pub trait GaussianSource {
    fn standard_normal(&mut self) -> f64;

    /// Uniform on the open interval (0, 1).
    fn uniform(&mut self) -> f64;

    fn fill_normals(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.standard_normal();
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    replicate_id: u64,
    rng: ChaCha8Rng,
}

/// Derives the stream for one replicate.
pub fn derive_stream(master_seed: u64, replicate_id: u64) -> NoiseStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate_id);
    NoiseStream {
        master_seed,
        replicate_id,
        rng,
    }
}

impl NoiseStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replicate_id(&self) -> u64 {
        self.replicate_id
    }

    /// Position in the keystream, in 32-bit words.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

impl GaussianSource for NoiseStream {
    #[inline]
    fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

/// Deterministic source that injects no noise; uniforms are 1/2.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl GaussianSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }

    fn uniform(&mut self) -> f64 {
        0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pairs_reproduce() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        for _ in 0..1_000_000 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn distinct_replicates_are_uncorrelated() {
        let n = 1_000_000;
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        let (mut sxy, mut sxx, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.standard_normal();
            let y = b.standard_normal();
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx * sy / (nf * nf);
        let corr = cov / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        assert!(corr.abs() < 4.0 / nf.sqrt(), "corr {corr}");
    }

    #[test]
    fn normals_pass_kolmogorov_smirnov() {
        let n = 100_000;
        let mut s = derive_stream(42, 0);
        let mut xs: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = crate::special::std_normal_cdf(x);
            d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
        }
        // 1% critical value 1.628 / sqrt(n)
        assert!(d < 1.628 / (n as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn uniforms_are_open_interval() {
        let mut s = derive_stream(1, 2);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
