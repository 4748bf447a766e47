//! Counter-based Philox4x64-10 generator (Salmon et al., "Parallel random
//! numbers: as easy as 1, 2, 3", SC'11).
//!
//! Every voxel draws from its own counter `[index, 0, 0, 0]` under the key
//! `[seed, 0]`, so the noise field is a pure function of `(seed, index)` and
//! does not depend on traversal order or thread count.

const MUL0: u64 = 0xD2E7_470E_E14C_6C93;
const MUL1: u64 = 0xCA5A_8263_9512_1157;
const WEYL0: u64 = 0x9E37_79B9_7F4A_7C15;
const WEYL1: u64 = 0xBB67_AE85_84CA_A73B;
const ROUNDS: usize = 10;

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = u128::from(a) * u128::from(b);
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64-10 block.
pub fn philox4x64(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..ROUNDS {
        if round > 0 {
            k[0] = k[0].wrapping_add(WEYL0);
            k[1] = k[1].wrapping_add(WEYL1);
        }
        let (hi0, lo0) = mulhilo(MUL0, c[0]);
        let (hi1, lo1) = mulhilo(MUL1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Standard normal deviate for `(seed, index)` via the cosine branch of
/// Box-Muller on the first two words of the block.
#[inline]
pub fn standard_normal(seed: u64, index: u64) -> f64 {
    let block = philox4x64([index, 0, 0, 0], [seed, 0]);
    // u1 in (0, 1] keeps the logarithm finite
    let u1 = ((block[0] >> 11) + 1) as f64 * INV_2_53;
    let u2 = (block[1] >> 11) as f64 * INV_2_53;
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
