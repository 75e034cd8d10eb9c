//! Deterministic random streams and chunked (optionally parallel) execution.
//!
//! Work is split into fixed-size chunks. Chunk `c` of task `t` under seed
//! `s` always draws from the same ChaCha stream, and chunk results are
//! combined in chunk order, so results do not depend on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Samples per chunk for Monte Carlo loops.
pub const CHUNK: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a seed and a sequence of keys.
pub fn derive(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Stable key for a task label.
pub fn label(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, keys))
}

/// Maps `f` over `0..count` and returns results in index order.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Runs `f(chunk_index, range)` over `total` items split into `CHUNK`-sized
/// chunks, returning chunk results in order.
pub fn map_chunks<T, F>(total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    map_indexed(chunks, |c| {
        let start = c * CHUNK;
        f(c, start..(start + CHUNK).min(total))
    })
}

/// Uniform point in the Euclidean unit ball of R^n, written into `out`.
pub fn unit_ball_point<R: rand::Rng>(rng: &mut R, out: &mut [f64]) {
    let n = out.len();
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
            norm2 += *v * *v;
        }
        if norm2 > 0.0 {
            let r: f64 = rng.random::<f64>().powf(1.0 / n as f64);
            let s = r / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= s);
            return;
        }
    }
}

/// Uniform direction on the unit sphere of R^n.
pub fn unit_sphere_point<R: rand::Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
            norm2 += *v * *v;
        }
        if norm2 > 0.0 {
            let s = 1.0 / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= s);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = stream(1, &[2, 3]).random();
        let b: f64 = stream(1, &[2, 3]).random();
        let c: f64 = stream(1, &[2, 4]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn chunks_cover_range_in_order() {
        let parts = map_chunks(3 * CHUNK + 5, |c, r| (c, r.start, r.end));
        assert_eq!(parts.len(), 4);
        assert_eq!(parts[3], (3, 3 * CHUNK, 3 * CHUNK + 5));
    }

    #[test]
    fn ball_points_inside() {
        let mut rng = stream(0, &[]);
        let mut p = [0.0; 3];
        let mut mean_r3 = 0.0;
        for _ in 0..20000 {
            unit_ball_point(&mut rng, &mut p);
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r <= 1.0);
            mean_r3 += r * r * r;
        }
        // r^3 is uniform on [0,1] for a uniform point in the 3-ball.
        assert!((mean_r3 / 20000.0 - 0.5).abs() < 0.01);
    }
}
