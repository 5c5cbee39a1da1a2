//! Seeded random streams.
//!
//! Every Monte-Carlo trial owns a ChaCha8 generator whose seed is a
//! splitmix64 mix of the master seed and the trial index, so results do not
//! depend on how trials are spread over threads. Within a trial, independent
//! quantities (channels, reflections, noise) use separate ChaCha streams of
//! the same key.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

pub type SimRng = ChaCha8Rng;

/// Stream used for path angles and gains.
pub const CHANNEL_STREAM: u64 = 0;
/// Stream used for RIS reflection coefficients.
pub const REFLECTION_STREAM: u64 = 1;
/// Stream used for receiver noise.
pub const NOISE_STREAM: u64 = 2;

/// One round of the splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`: `splitmix64(master ^ splitmix64(trial))`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

/// Generator for one stream of one trial.
pub fn trial_rng(master: u64, trial: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master, trial));
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference splitmix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    fn draws(mut rng: SimRng) -> Vec<u64> {
        (0..4).map(|_| rng.random()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = draws(trial_rng(7, 3, 0));
        assert_eq!(a, draws(trial_rng(7, 3, 0)));
        assert_ne!(a, draws(trial_rng(7, 3, 1)));
        assert_ne!(a, draws(trial_rng(7, 4, 0)));
    }

    #[test]
    fn complex_gaussian_power() {
        let mut rng = trial_rng(1, 0, 0);
        let n = 100_000;
        let mean_power: f64 = (0..n).map(|_| complex_gaussian(&mut rng, 2.0).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_power - 2.0).abs() < 0.04, "{mean_power}");
    }
}
