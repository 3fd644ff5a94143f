//! Additive white Gaussian noise channel and its capacity-side bookkeeping.
//!
//! Unconstrained-power transmission has a noise ceiling that depends only on
//! the lattice volume: reliable decoding is possible when
//! `σ² < |det G|^{2/n} · 4 / (2πe)`. Operating points are quoted as the
//! distance in dB from that ceiling, `10·log10(σ²_max / σ²)`.
//!
//! Noise generation is hand-rolled (polar method over a counter-based
//! generator) so a `(seed, length)` pair pins the exact same sample path on
//! every platform and run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Largest tolerable noise variance for a lattice with the given generator
/// log-determinant and dimension.
pub fn sigma2_max(log_det_g: f64, n: usize) -> f64 {
    let vol_term = (2.0 * log_det_g / n as f64).exp();
    4.0 * vol_term / (2.0 * std::f64::consts::PI * std::f64::consts::E)
}

/// Noise variance at `db` decibels below the ceiling `s2_max`.
pub fn sigma2_from_db(s2_max: f64, db: f64) -> f64 {
    s2_max * 10f64.powf(-db / 10.0)
}

/// Distance from the ceiling in dB for a given noise variance.
pub fn db_from_sigma2(s2_max: f64, sigma2: f64) -> f64 {
    10.0 * (s2_max / sigma2).log10()
}

/// Deterministic standard-normal samples via the polar method.
struct NormalSource {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(seed: u64) -> Self {
        NormalSource { rng: ChaCha12Rng::seed_from_u64(seed), spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.rng.random::<f64>() - 1.0;
            let v = 2.0 * self.rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// `len` independent draws from `N(0, sigma2)`, fully determined by the seed.
pub fn awgn_noise(len: usize, sigma2: f64, seed: u64) -> Result<Vec<f64>> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive and finite, got {sigma2}"
        )));
    }
    let sd = sigma2.sqrt();
    let mut src = NormalSource::new(seed);
    Ok((0..len).map(|_| sd * src.next()).collect())
}

/// Sends `x` through the channel: `y = x + w`, `w ~ N(0, sigma2 I)`.
pub fn transmit(x: &[f64], sigma2: f64, seed: u64) -> Result<Vec<f64>> {
    let w = awgn_noise(x.len(), sigma2, seed)?;
    Ok(x.iter().zip(w).map(|(xi, wi)| xi + wi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceiling_for_unit_volume() {
        let s = sigma2_max(0.0, 100);
        assert!((s - 0.2341994).abs() < 1e-6, "sigma2_max = {s}");
        // Dimension is irrelevant at zero log-determinant.
        assert_eq!(s, sigma2_max(0.0, 7));
    }

    #[test]
    fn ceiling_scales_with_volume() {
        // Doubling |det G| in dimension 2 scales the ceiling by 2^(2/2) = 2...
        // log|det| = ln 2, n = 2: factor exp(2 ln2 / 2) = 2.
        let base = sigma2_max(0.0, 2);
        assert!((sigma2_max(std::f64::consts::LN_2, 2) - 2.0 * base).abs() < 1e-12);
    }

    #[test]
    fn db_conversions_round_trip() {
        let s2m = sigma2_max(0.0, 10);
        let s2 = sigma2_from_db(s2m, 3.0);
        assert!((db_from_sigma2(s2m, s2) - 3.0).abs() < 1e-12);
        // Zero dB means operating exactly at the ceiling.
        assert!((sigma2_from_db(s2m, 0.0) - s2m).abs() < 1e-15);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let a = awgn_noise(32, 0.5, 99).unwrap();
        let b = awgn_noise(32, 0.5, 99).unwrap();
        let c = awgn_noise(32, 0.5, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Prefix property: a longer draw starts with the shorter one.
        let long = awgn_noise(64, 0.5, 99).unwrap();
        assert_eq!(&long[..32], &a[..]);
    }

    #[test]
    fn noise_moments_are_right() {
        let n = 200_000;
        let sigma2 = 0.25;
        let w = awgn_noise(n, sigma2, 4).unwrap();
        let mean: f64 = w.iter().sum::<f64>() / n as f64;
        let var: f64 = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 5e-3, "mean = {mean}");
        assert!((var - sigma2).abs() < 5e-3, "var = {var}");
    }

    #[test]
    fn transmit_adds_noise_to_signal() {
        let x = vec![1.0, -2.0, 3.0];
        let y = transmit(&x, 0.01, 7).unwrap();
        let w = awgn_noise(3, 0.01, 7).unwrap();
        for i in 0..3 {
            assert!((y[i] - x[i] - w[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_variance() {
        assert!(awgn_noise(4, 0.0, 0).is_err());
        assert!(awgn_noise(4, -1.0, 0).is_err());
        assert!(awgn_noise(4, f64::NAN, 0).is_err());
    }
}
