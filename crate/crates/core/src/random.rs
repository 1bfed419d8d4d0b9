//! Seeded sampling. Every random choice in the crate flows from a `u64` seed
//! through these helpers so that runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::letter::CoordKind;
use crate::numeric::{C64, CMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for a labelled sub-task (FNV-1a over the label, mixed with the
/// parent seed).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian: `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(s * gaussian(rng), s * gaussian(rng))
}

/// Random value of one chart coordinate. Torus coordinates are `exp` of a
/// complex Gaussian and therefore never zero.
pub fn coordinate<R: Rng + ?Sized>(rng: &mut R, kind: CoordKind) -> C64 {
    match kind {
        CoordKind::Affine => complex_gaussian(rng),
        CoordKind::Torus => complex_gaussian(rng).exp(),
    }
}

pub fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, nrows: usize, ncols: usize) -> CMatrix {
    CMatrix::from_fn(nrows, ncols, |_, _| complex_gaussian(rng))
}
