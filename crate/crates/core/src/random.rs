//! Seeded random streams and the complex Gaussian convention.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matlin::{c64, CMatrix, C64};

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(master seed, index, purpose)`.
///
/// Two calls with the same triple always return identical streams, so every
/// method in a scenario can see the same channel draw for a given trial.
pub fn stream(master: u64, index: u64, purpose: &str) -> Stream {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ index);
    for b in purpose.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// One CN(0, 1) draw: real and imaginary parts each carry variance 1/2.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. CN(0, 1) entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // Fill column by column so the draw order is fixed by the storage layout.
    let mut m = CMatrix::zeros(rows, cols);
    for z in m.iter_mut() {
        *z = cn01(rng);
    }
    m
}

/// Unit-modulus entry with phase uniform on [0, 2π).
pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    C64::from_polar(1.0, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(42, 3, "channel").random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream(42, 3, "channel").random()).collect();
        assert_eq!(a, b);
        let x: u64 = stream(42, 3, "channel").random();
        let y: u64 = stream(42, 3, "pilots").random();
        let z: u64 = stream(42, 4, "channel").random();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn cn01_has_unit_variance_split_evenly() {
        let mut rng = stream(1, 0, "cn");
        let n = 100_000;
        let (mut re2, mut im2) = (0.0, 0.0);
        for _ in 0..n {
            let z = cn01(&mut rng);
            re2 += z.re * z.re;
            im2 += z.im * z.im;
        }
        re2 /= n as f64;
        im2 /= n as f64;
        assert!((re2 - 0.5).abs() < 0.01, "{re2}");
        assert!((im2 - 0.5).abs() < 0.01, "{im2}");
    }
}
