//! Bit-exact step-reduced SHA-256 compression.
//!
//! The compression function follows FIPS 180-4 but is parameterized by the
//! number of steps (0..=64) and by an arbitrary chaining value, which is what
//! semi-free-start collision search needs. State words use the indexing
//! `A_i`/`E_i` with the chaining value occupying steps -4..=-1:
//!
//! ```text
//! T_i = E_{i-4} + S1(E_{i-1}) + IF(E_{i-1}, E_{i-2}, E_{i-3}) + K_i + W_i
//! E_i = A_{i-4} + T_i
//! A_i = T_i + S0(A_{i-1}) + MAJ(A_{i-1}, A_{i-2}, A_{i-3})
//! ```
//!
//! All additions are modulo 2^32.

use std::fmt;

use crate::error::ParseError;

/// Round constants from FIPS 180-4 §4.2.2.
pub const K: [u32; 64] = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
];

/// Standard initialization vector (FIPS 180-4 §5.3.3), in H0..H7 order.
pub const IV: [u32; 8] = [
    0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
];

/// Rotation/shift amounts, exposed so the CNF encoder can wire the same gates.
/// The first two entries of the small sigmas are rotations, the third a shift.
pub const SMALL_SIGMA0_ROT: [u32; 2] = [7, 18];
pub const SMALL_SIGMA0_SHIFT: u32 = 3;
pub const SMALL_SIGMA1_ROT: [u32; 2] = [17, 19];
pub const SMALL_SIGMA1_SHIFT: u32 = 10;
pub const BIG_SIGMA0_ROT: [u32; 3] = [2, 13, 22];
pub const BIG_SIGMA1_ROT: [u32; 3] = [6, 11, 25];

#[inline]
pub fn small_sigma0(x: u32) -> u32 {
    x.rotate_right(7) ^ x.rotate_right(18) ^ (x >> 3)
}

#[inline]
pub fn small_sigma1(x: u32) -> u32 {
    x.rotate_right(17) ^ x.rotate_right(19) ^ (x >> 10)
}

#[inline]
pub fn big_sigma0(x: u32) -> u32 {
    x.rotate_right(2) ^ x.rotate_right(13) ^ x.rotate_right(22)
}

#[inline]
pub fn big_sigma1(x: u32) -> u32 {
    x.rotate_right(6) ^ x.rotate_right(11) ^ x.rotate_right(25)
}

/// Bitwise IF (a.k.a. Ch): picks y where x is 1, z where x is 0.
#[inline]
pub fn if_word(x: u32, y: u32, z: u32) -> u32 {
    (x & y) ^ (!x & z)
}

/// Bitwise majority of three words.
#[inline]
pub fn maj_word(x: u32, y: u32, z: u32) -> u32 {
    (x & y) ^ (x & z) ^ (y & z)
}

/// Bit-level IF over `bool`s, shared with the encoder's truth tables.
#[inline]
pub fn if_bit(x: bool, y: bool, z: bool) -> bool {
    if x {
        y
    } else {
        z
    }
}

/// Bit-level majority.
#[inline]
pub fn maj_bit(x: bool, y: bool, z: bool) -> bool {
    (x & y) | (x & z) | (y & z)
}

/// One 512-bit message block as 16 big-endian words M_0..M_15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MessageBlock(pub [u32; 16]);

/// A 256-bit chaining value in the state order [A_{-4}..A_{-1}, E_{-4}..E_{-1}].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainingValue(pub [u32; 8]);

impl ChainingValue {
    /// Converts from the FIPS H0..H7 word order. The registers at step 0 are
    /// a=H0, b=H1, ..., h=H7, which corresponds to A_{-1}=H0, A_{-2}=H1,
    /// A_{-3}=H2, A_{-4}=H3 and E_{-1}=H4, ..., E_{-4}=H7.
    pub fn from_fips(h: [u32; 8]) -> Self {
        ChainingValue([h[3], h[2], h[1], h[0], h[7], h[6], h[5], h[4]])
    }

    /// Converts back to FIPS H0..H7 order (the mapping is an involution).
    pub fn to_fips(self) -> [u32; 8] {
        let w = self.0;
        [w[3], w[2], w[1], w[0], w[7], w[6], w[5], w[4]]
    }

    pub fn to_hex(self) -> String {
        words_to_hex(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, ParseError> {
        Ok(ChainingValue(hex_to_words::<8>(s)?))
    }
}

impl fmt::Display for ChainingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl MessageBlock {
    pub fn to_hex(self) -> String {
        words_to_hex(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, ParseError> {
        Ok(MessageBlock(hex_to_words::<16>(s)?))
    }
}

impl fmt::Display for MessageBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn words_to_hex(words: &[u32]) -> String {
    words
        .iter()
        .map(|w| format!("{w:08x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn hex_to_words<const N: usize>(s: &str) -> Result<[u32; N], ParseError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != N {
        return Err(ParseError::WordCount { expected: N, got: parts.len() });
    }
    let mut out = [0u32; N];
    for (i, p) in parts.iter().enumerate() {
        if p.len() > 8 {
            return Err(ParseError::BadWord(p.to_string()));
        }
        out[i] = u32::from_str_radix(p, 16).map_err(|_| ParseError::BadWord(p.to_string()))?;
    }
    Ok(out)
}

/// Per-step values of one compression run. `a`/`e` are indexed by step+4 so
/// the chaining-value words occupy slots 0..4; `t` and `w` are indexed by step.
#[derive(Debug, Clone)]
pub struct StateTrace {
    pub n: usize,
    a: Vec<u32>,
    e: Vec<u32>,
    t: Vec<u32>,
    w: Vec<u32>,
}

impl StateTrace {
    /// A_i for i in -4..n.
    pub fn a(&self, i: isize) -> u32 {
        self.a[(i + 4) as usize]
    }

    /// E_i for i in -4..n.
    pub fn e(&self, i: isize) -> u32 {
        self.e[(i + 4) as usize]
    }

    /// T_i for i in 0..n.
    pub fn t(&self, i: usize) -> u32 {
        self.t[i]
    }

    /// W_i for i in 0..n.
    pub fn w(&self, i: usize) -> u32 {
        self.w[i]
    }
}

/// Expands a message block to the first `n` schedule words.
pub fn expand_message(m: &MessageBlock, n: usize) -> Vec<u32> {
    assert!(n <= 64, "step count out of range");
    let mut w: Vec<u32> = m.0.to_vec();
    for i in 16..n.max(16) {
        let next = small_sigma1(w[i - 2])
            .wrapping_add(w[i - 7])
            .wrapping_add(small_sigma0(w[i - 15]))
            .wrapping_add(w[i - 16]);
        w.push(next);
    }
    w.truncate(n);
    w
}

/// Runs `n` steps of the compression function and returns the feed-forward
/// output together with the full state trace.
pub fn compress_trace(cv: &ChainingValue, m: &MessageBlock, n: usize) -> (ChainingValue, StateTrace) {
    assert!(n <= 64, "step count out of range");
    let w = expand_message(m, n);
    let mut a: Vec<u32> = cv.0[0..4].to_vec();
    let mut e: Vec<u32> = cv.0[4..8].to_vec();
    let mut t: Vec<u32> = Vec::with_capacity(n);
    for i in 0..n {
        let ti = e[i]
            .wrapping_add(big_sigma1(e[i + 3]))
            .wrapping_add(if_word(e[i + 3], e[i + 2], e[i + 1]))
            .wrapping_add(K[i])
            .wrapping_add(w[i]);
        let ei = a[i].wrapping_add(ti);
        let ai = ti
            .wrapping_add(big_sigma0(a[i + 3]))
            .wrapping_add(maj_word(a[i + 3], a[i + 2], a[i + 1]));
        t.push(ti);
        e.push(ei);
        a.push(ai);
    }
    let mut out = [0u32; 8];
    for j in 0..4 {
        out[j] = cv.0[j].wrapping_add(a[n + j]);
        out[4 + j] = cv.0[4 + j].wrapping_add(e[n + j]);
    }
    (ChainingValue(out), StateTrace { n, a, e, t, w })
}

/// Feed-forward output of `n` compression steps.
pub fn compress(cv: &ChainingValue, m: &MessageBlock, n: usize) -> ChainingValue {
    compress_trace(cv, m, n).0
}

/// True iff the two messages differ and compress to the same value under the
/// shared chaining value.
pub fn verify_sfs_collision(cv: &ChainingValue, m: &MessageBlock, m2: &MessageBlock, n: usize) -> bool {
    m != m2 && compress(cv, m, n) == compress(cv, m2, n)
}

/// Full SHA-256 of a byte string (single-block inputs only, i.e. length <= 55).
/// Only used by the FIPS self-tests; collision search operates on raw blocks.
pub fn sha256_short(msg: &[u8]) -> Option<[u8; 32]> {
    if msg.len() > 55 {
        return None;
    }
    let mut block = [0u8; 64];
    block[..msg.len()].copy_from_slice(msg);
    block[msg.len()] = 0x80;
    let bits = (msg.len() as u64) * 8;
    block[56..].copy_from_slice(&bits.to_be_bytes());
    let mut words = [0u32; 16];
    for (i, w) in words.iter_mut().enumerate() {
        *w = u32::from_be_bytes(block[i * 4..i * 4 + 4].try_into().unwrap());
    }
    let out = compress(&ChainingValue::from_fips(IV), &MessageBlock(words), 64).to_fips();
    let mut digest = [0u8; 32];
    for (i, w) in out.iter().enumerate() {
        digest[i * 4..i * 4 + 4].copy_from_slice(&w.to_be_bytes());
    }
    Some(digest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent evaluation of the sigma terms, kept deliberately separate
    /// from the implementations above.
    fn sigma_oracle(x: u32, rots: &[u32], shift: Option<u32>) -> u32 {
        let mut acc = 0u32;
        for &r in rots {
            acc ^= (x >> r) | (x.checked_shl(32 - r).unwrap_or(0));
        }
        if let Some(s) = shift {
            acc ^= x >> s;
        }
        acc
    }

    #[test]
    fn sigma_values() {
        assert_eq!(small_sigma0(0), 0);
        assert_eq!(small_sigma0(1), 0x0200_4000);
        assert_eq!(small_sigma0(1), sigma_oracle(1, &[7, 18], Some(3)));
        assert_eq!(small_sigma1(1), 0x0000_a000);
        assert_eq!(small_sigma1(1), sigma_oracle(1, &[17, 19], Some(10)));
        assert_eq!(big_sigma0(0), 0);
        assert_eq!(big_sigma0(1), 0x4008_0400);
        assert_eq!(big_sigma0(1), sigma_oracle(1, &[2, 13, 22], None));
        assert_eq!(big_sigma1(0xffff_ffff), 0xffff_ffff);
    }

    #[test]
    fn if_maj_identities() {
        for &(y, z) in &[(0u32, 0u32), (0x1234_5678, 0x9abc_def0), (!0, 0)] {
            assert_eq!(if_word(!0, y, z), y);
            assert_eq!(if_word(0, y, z), z);
            assert_eq!(maj_word(y, y, z), y);
            assert_eq!(maj_word(z, y, y), y);
        }
    }

    #[test]
    fn expansion_basics() {
        let zero = MessageBlock([0; 16]);
        assert!(expand_message(&zero, 64).iter().all(|&w| w == 0));
        let m = MessageBlock([0x0102_0304; 16]);
        assert_eq!(expand_message(&m, 16), m.0.to_vec());
        assert_eq!(expand_message(&m, 3).len(), 3);
    }

    #[test]
    fn zero_step_compression_doubles_cv() {
        let cv = ChainingValue([1, 2, 3, 0x8000_0001, 5, 6, 7, 0xffff_ffff]);
        let out = compress(&cv, &MessageBlock([0; 16]), 0);
        for j in 0..8 {
            assert_eq!(out.0[j], cv.0[j].wrapping_mul(2));
        }
    }

    #[test]
    fn fips_vectors() {
        // Digests cross-checked against an independent SHA-256 implementation.
        let cases: [(&[u8], &str); 4] = [
            (b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
            (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
            (b"a", "ca978112ca1bbdcafac231b39a23dc4da786eff8147c4e72b9807785afee48bb"),
            (
                b"The quick brown fox jumps over the lazy dog",
                "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592",
            ),
        ];
        for (msg, want) in cases {
            let got = sha256_short(msg).unwrap();
            let hex: String = got.iter().map(|b| format!("{b:02x}")).collect();
            assert_eq!(hex, want, "digest mismatch for {msg:?}");
        }
    }

    #[test]
    fn trace_satisfies_state_equations() {
        let cv = ChainingValue::from_fips(IV);
        let m = MessageBlock([0xdead_beef; 16]);
        let (_, tr) = compress_trace(&cv, &m, 24);
        for i in 0..24isize {
            assert_eq!(tr.e(i), tr.a(i - 4).wrapping_add(tr.t(i as usize)));
            let want_a = tr
                .t(i as usize)
                .wrapping_add(big_sigma0(tr.a(i - 1)))
                .wrapping_add(maj_word(tr.a(i - 1), tr.a(i - 2), tr.a(i - 3)));
            assert_eq!(tr.a(i), want_a);
        }
    }

    #[test]
    fn equal_messages_never_collide() {
        let cv = ChainingValue::from_fips(IV);
        let m = MessageBlock([7; 16]);
        assert!(!verify_sfs_collision(&cv, &m, &m, 38));
    }

    #[test]
    fn random_pairs_do_not_collide() {
        let cv = ChainingValue([0x1111_1111; 8]);
        let m1 = MessageBlock([0x2222_2222; 16]);
        let mut m2 = m1;
        m2.0[15] ^= 1;
        assert!(!verify_sfs_collision(&cv, &m1, &m2, 38));
    }

    #[test]
    fn hex_round_trip_and_errors() {
        let cv = ChainingValue([0, 1, 0xffff_ffff, 3, 4, 5, 6, 0x02aa_5e80]);
        assert_eq!(ChainingValue::from_hex(&cv.to_hex()).unwrap(), cv);
        assert!(ChainingValue::from_hex("00 11 22").is_err());
        assert!(MessageBlock::from_hex(&"zz ".repeat(16)).is_err());
        assert!(ChainingValue::from_hex(&"123456789 ".repeat(8)).is_err());
    }

    proptest! {
        #[test]
        fn expansion_is_prefix_stable(words in prop::array::uniform16(any::<u32>()), k in 0usize..64, n in 0usize..64) {
            let (k, n) = if k <= n { (k, n) } else { (n, k) };
            let m = MessageBlock(words);
            let short = expand_message(&m, k);
            let long = expand_message(&m, n);
            prop_assert_eq!(&long[..k], &short[..]);
        }

        #[test]
        fn sigmas_are_linear(x in any::<u32>(), y in any::<u32>()) {
            prop_assert_eq!(small_sigma0(x ^ y), small_sigma0(x) ^ small_sigma0(y));
            prop_assert_eq!(small_sigma1(x ^ y), small_sigma1(x) ^ small_sigma1(y));
            prop_assert_eq!(big_sigma0(x ^ y), big_sigma0(x) ^ big_sigma0(y));
            prop_assert_eq!(big_sigma1(x ^ y), big_sigma1(x) ^ big_sigma1(y));
        }

        #[test]
        fn fips_order_is_involution(h in prop::array::uniform8(any::<u32>())) {
            prop_assert_eq!(ChainingValue::from_fips(h).to_fips(), h);
        }
    }
}
