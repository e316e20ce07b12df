//! Counter-based deterministic random numbers.
//!
//! Studies and tests draw values as a pure function of (seed, counter), so a
//! run is reproducible from the seed recorded in its outputs regardless of
//! iteration order or thread count.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` for the given seed and counter.
pub fn unit(seed: u64, counter: u64) -> f64 {
    let bits = splitmix64(seed ^ counter.wrapping_mul(GOLDEN).wrapping_add(counter));
    // 53 high bits -> double in [0, 1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform(seed: u64, counter: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(seed, counter)
}

/// A vector of uniform draws, counters `offset..offset+n`.
pub fn uniform_vec(seed: u64, offset: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|k| uniform(seed, offset + k as u64, lo, hi))
        .collect()
}
