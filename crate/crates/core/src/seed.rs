//! Seed derivation for reproducible nested randomness.

/// Derives a child seed from a master seed and an index.
///
/// SplitMix64 finalizer applied to `master ^ (index + 1) * GOLDEN`; the
/// same (master, index) always yields the same child, and distinct indices
/// give decorrelated streams, so work items can run in any order or in
/// parallel without changing results.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
