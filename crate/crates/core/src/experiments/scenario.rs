//! Device placements and weights.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Nearest distance used by every placement (m).
pub const NEAREST: f64 = 2.5;
/// Spacing of the evenly spaced placements (m).
pub const SPACING: f64 = 0.3;
/// Width of the uniform distance range for random placements (m).
pub const RANDOM_SPAN: f64 = 2.7;
/// Distance from the center to the outermost device of a centered placement.
pub const HALF_SPAN: f64 = 1.35;

/// `d_i = 2.5 + 0.3 (i - 1)` for `i = 1..=n`.
pub fn deterministic_placement(n: usize) -> Vec<f64> {
    (0..n).map(|i| NEAREST + SPACING * i as f64).collect()
}

/// Ten devices spaced by 0.3 m around `d_a`: `d_a - 1.35 + 0.3 (i - 1)`.
pub fn centered_placement(d_a: f64) -> Result<Vec<f64>> {
    if !(d_a > HALF_SPAN) || !d_a.is_finite() {
        return Err(Error::invalid("d_A", format!("must exceed {HALF_SPAN} m")));
    }
    Ok((0..10).map(|i| d_a - HALF_SPAN + SPACING * i as f64).collect())
}

/// 1, 2, 1, 2, ...
pub fn alternating_weights(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect()
}

/// Uniform in `[0, 1)` with 53 random bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Distances uniform on `[2.5, 5.2)` and weights 1 or 2 with equal
/// probability.
///
/// Draw `j` of a sweep reads ChaCha8 stream `j` of `seed`; each device takes
/// two consecutive 64-bit words, the first for its distance and the top bit of
/// the second for its weight. Smaller `n` therefore sees a prefix of the same
/// devices.
pub fn random_scenario(n: usize, seed: u64, draw: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    let mut distances = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        distances.push(NEAREST + RANDOM_SPAN * unit(&mut rng));
        weights.push(1.0 + (rng.next_u64() >> 63) as f64);
    }
    (distances, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_endpoints() {
        let d = deterministic_placement(10);
        assert_eq!(d[0], 2.5);
        assert!((d[9] - 5.2).abs() < 1e-12);
        for w in d.windows(2) {
            assert!((w[1] - w[0] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn centered_matches_deterministic_at_reference() {
        let c = centered_placement(3.85).unwrap();
        for (a, b) in c.iter().zip(deterministic_placement(10)) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = centered_placement(6.85).unwrap();
        assert!((c.iter().sum::<f64>() / 10.0 - 6.85).abs() < 1e-12);
        assert!((c[0] - 5.5).abs() < 1e-12 && (c[9] - 8.2).abs() < 1e-12);
        assert!(centered_placement(1.35).is_err());
    }

    #[test]
    fn weights_alternate() {
        let w = alternating_weights(10);
        assert_eq!(&w[..2], &[1.0, 2.0]);
        assert_eq!(w.iter().sum::<f64>(), 15.0);
    }

    #[test]
    fn random_draws_are_reproducible_and_prefix_stable() {
        assert_eq!(random_scenario(12, 7, 3), random_scenario(12, 7, 3));
        assert_ne!(random_scenario(12, 7, 3), random_scenario(12, 7, 4));
        let (d10, w10) = random_scenario(10, 7, 3);
        let (d12, w12) = random_scenario(12, 7, 3);
        assert_eq!(d10[..], d12[..10]);
        assert_eq!(w10[..], w12[..10]);
    }

    #[test]
    fn random_distribution_moments() {
        let (d, w) = random_scenario(100_000, 2024, 0);
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!((mean - 3.85).abs() < 0.02, "{mean}");
        assert!(d.iter().all(|x| (2.5..5.2).contains(x)));
        let twos = w.iter().filter(|x| **x == 2.0).count() as f64 / w.len() as f64;
        assert!((twos - 0.5).abs() < 0.01, "{twos}");
        assert!(w.iter().all(|x| *x == 1.0 || *x == 2.0));
    }
}
