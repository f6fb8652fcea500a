//! Seeded fixtures: invertible coefficient sequences, idempotents and
//! partial cotranslations built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cotranslation::{from_difference_seq, Cotranslation, DifferenceSeq};
use crate::error::Result;
use crate::group::GroupElement;
use crate::matrix::{Mat, DEFAULT_INV_TOL};
use crate::partial::{restrict, PartialCotranslation, ProjectorMap};

/// Condition-number cap for [`uniform_well_conditioned`].
pub const MAX_COND: f64 = 1e3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for index `n` of a sequence with seed `seed`.
fn indexed_rng(seed: u64, n: i64) -> ChaCha8Rng {
    let mut x = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(x ^ (x >> 31))
}

pub fn uniform(rng: &mut impl Rng, dim: usize) -> Mat {
    let data = (0..dim * dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Mat::new(dim, data).expect("square")
}

pub fn cond(m: &Mat) -> f64 {
    let s = m.singular_values();
    let lo = s.last().copied().unwrap_or(0.0);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        s[0] / lo
    }
}

/// Entries uniform in `[-1, 1]`, redrawn while the condition number exceeds [`MAX_COND`].
pub fn uniform_well_conditioned(rng: &mut impl Rng, dim: usize) -> Mat {
    loop {
        let m = uniform(rng, dim);
        if cond(&m) <= MAX_COND {
            return m;
        }
    }
}

pub fn orthogonal(rng: &mut impl Rng, dim: usize) -> Mat {
    uniform(rng, dim).svd().u
}

/// `Q1 diag(s) Q2` with singular values drawn from `[lo, hi]`.
pub fn spectral(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Mat {
    let q1 = orthogonal(rng, dim);
    let s: Vec<f64> = (0..dim).map(|_| rng.gen_range(lo..=hi)).collect();
    let q2 = orthogonal(rng, dim);
    &(&q1 * &Mat::diag(&s)) * &q2
}

/// `A(n)` uniform and well conditioned, drawn independently per `n`.
pub fn uniform_seq(seed: u64, dim: usize) -> DifferenceSeq {
    DifferenceSeq::new(dim, move |n| Ok(uniform_well_conditioned(&mut indexed_rng(seed, n), dim)))
}

/// `A(n)` with singular values in `[0.5, 2]`, drawn independently per `n`.
pub fn spectral_seq(seed: u64, dim: usize) -> DifferenceSeq {
    DifferenceSeq::new(dim, move |n| Ok(spectral(&mut indexed_rng(seed, n), dim, 0.5, 2.0)))
}

/// `S diag(Id_r, 0) S^-1` with `S` having singular values in `[0.5, 2]`.
pub fn idempotent(rng: &mut impl Rng, dim: usize, rank: usize) -> Result<Mat> {
    let s = spectral(rng, dim, 0.5, 2.0);
    let inv = s.try_inverse(DEFAULT_INV_TOL)?;
    Ok(&(&s * &Mat::block_projector(dim, rank, true)) * &inv)
}

/// A seeded partial cotranslation of the given rank and its ingredients.
#[derive(Clone, Debug)]
pub struct RandomPartial {
    pub seed: u64,
    pub base: Cotranslation,
    pub p0: Mat,
    pub projector: ProjectorMap,
    pub w: PartialCotranslation,
}

/// `W = restrict(Z, P)` with `Z` from [`spectral_seq`] and
/// `P(g) = Z(e,g) P0 Z(g,g^-1)` for a random idempotent `P0` of rank `rank`.
pub fn random_partial(seed: u64, dim: usize, rank: usize, window: &[GroupElement]) -> Result<RandomPartial> {
    let base = from_difference_seq(&spectral_seq(seed, dim));
    let p0 = idempotent(&mut rng(seed ^ 0xA5A5_A5A5), dim, rank)?;
    let projector = ProjectorMap::conjugated_constant(&base, p0.clone())?;
    let w = restrict(&base, &projector, window, 1e-9)?;
    Ok(RandomPartial { seed, base, p0, projector, w })
}

/// `(dim, rank)` for the `i`-th fixture: `dim` in `2..=5`, `rank` in `1..dim`.
pub fn partial_shape(i: u64) -> (usize, usize) {
    let mut r = rng(i.wrapping_add(0x5EED));
    let dim = r.gen_range(2..=5);
    (dim, r.gen_range(1..dim))
}
