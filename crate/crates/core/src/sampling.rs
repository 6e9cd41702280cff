//! Seeded, block-partitioned Monte Carlo sampling.
//!
//! Every sweep over `n` samples is cut into fixed blocks of [`BLOCK_LEN`]
//! indices. Block `k` draws from its own ChaCha stream (`seed`, stream `k`),
//! so a sweep produces the same numbers whether blocks run on one thread or
//! many. Reductions are applied in block order.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::qubit::BlochVector;

pub const BLOCK_LEN: usize = 4096;

/// Vectors shorter than this are redrawn before normalization.
pub const MIN_DRAW_NORM: f64 = 1e-6;

pub fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Derives an independent seed for a named sub-sweep (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps `f` over the blocks of `0..total` in parallel, returning results in block order.
pub fn map_blocks<T, F>(total: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>, &mut ChaCha8Rng) -> T + Sync,
{
    let blocks = total.div_ceil(BLOCK_LEN);
    (0..blocks)
        .into_par_iter()
        .map(|k| {
            let start = k * BLOCK_LEN;
            let end = (start + BLOCK_LEN).min(total);
            let mut rng = block_rng(seed, k);
            f(start..end, &mut rng)
        })
        .collect()
}

/// Uniform point on the unit sphere: a normalized standard Gaussian triple.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = gaussian_vector3(rng);
        let norm = v.norm();
        if norm >= MIN_DRAW_NORM {
            return v.scale(1.0 / norm);
        }
    }
}

pub fn gaussian_vector3<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    BlochVector::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Unit vector orthogonal to `n` (itself a unit vector), uniformly oriented.
pub fn tangent_vector<R: Rng + ?Sized>(rng: &mut R, n: BlochVector) -> BlochVector {
    loop {
        let g = gaussian_vector3(rng);
        let t = g - n.scale(g.dot(n));
        let norm = t.norm();
        if norm >= MIN_DRAW_NORM {
            return t.scale(1.0 / norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_independent_of_thread_count() {
        let sum = |pool: rayon::ThreadPool| {
            pool.install(|| {
                map_blocks(10_000, 9, |r, rng| {
                    r.map(|_| unit_vector(rng).z).sum::<f64>()
                })
            })
        };
        let one = sum(rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap());
        let four = sum(rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap());
        assert_eq!(one, four);
        assert_eq!(one.len(), 3);
    }

    #[test]
    fn sphere_second_moments_are_isotropic() {
        let mut rng = block_rng(1, 0);
        let n = 200_000;
        let (mut xx, mut zz, mut xz) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let v = unit_vector(&mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            xx += v.x * v.x;
            zz += v.z * v.z;
            xz += v.x * v.z;
        }
        let n = n as f64;
        assert!((xx / n - 1.0 / 3.0).abs() < 5e-3);
        assert!((zz / n - 1.0 / 3.0).abs() < 5e-3);
        assert!((xz / n).abs() < 5e-3);
    }

    #[test]
    fn tangent_is_orthogonal() {
        let mut rng = block_rng(3, 0);
        for _ in 0..1000 {
            let n = unit_vector(&mut rng);
            let t = tangent_vector(&mut rng, n);
            assert!(t.dot(n).abs() < 1e-12);
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
    }
}
