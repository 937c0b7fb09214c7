//! Deterministic derivation of child seeds from one root seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed for the stream identified by `path`, e.g. `[fold, layer]`.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(root), |acc, &p| mix(acc ^ mix(p)))
}

// Stream tags, so that different consumers of one root never collide.
pub(crate) const FOLDS: u64 = 0x666f_6c64;
pub(crate) const TRAIN: u64 = 0x7472_6169;
