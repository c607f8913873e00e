//! Derivation of independent per-unit seeds from a master seed.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `master`; distinct tag sequences give unrelated seeds.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master ^ 0x5851_F42D_4C95_7F2D), |acc, &t| {
            splitmix64(acc.rotate_left(23) ^ splitmix64(t.wrapping_add(GOLDEN)))
        })
}

/// Stable numeric tag for a string label.
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01B3)
    })
}
