//! Per-annotation seed derivation.
//!
//! Seeds are a function of `(master_seed, key)` only, so results do not
//! depend on file order, iteration order or worker scheduling.

/// SplitMix64 increment (2^64 / golden ratio).
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;
const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// SplitMix64 finalizer applied to `z + GOLDEN_GAMMA`.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// `splitmix64(master ^ splitmix64(id))`.
pub fn sub_seed(master_seed: u64, annotation_id: i64) -> u64 {
    splitmix64(master_seed ^ splitmix64(annotation_id as u64))
}

/// Seed for a named sub-run (e.g. a sweep tier): FNV-1a of the name mixed
/// with the master seed.
pub fn named_seed(master_seed: u64, name: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(master_seed ^ splitmix64(h))
}
