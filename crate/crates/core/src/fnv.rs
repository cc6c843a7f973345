//! FNV-1a 64-bit hashing of token sequences.
//!
//! N-gram fingerprints hash the UTF-8 bytes of the tokens joined by
//! U+241F (SYMBOL FOR UNIT SEPARATOR). Both the classifier's feature buckets
//! and the decontamination index use this function.

pub const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const PRIME: u64 = 0x0000_0100_0000_01b3;

/// Token separator used when hashing n-grams.
pub const SEPARATOR: char = '\u{241F}';
const SEPARATOR_UTF8: [u8; 3] = [0xE2, 0x90, 0x9F];

#[derive(Debug, Clone, Copy)]
pub struct Fnv1a64(u64);

impl Default for Fnv1a64 {
    fn default() -> Self {
        Self(OFFSET_BASIS)
    }
}

impl Fnv1a64 {
    #[inline]
    pub fn write(&mut self, bytes: &[u8]) {
        let mut h = self.0;
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        self.0 = h;
    }

    #[inline]
    pub fn finish(self) -> u64 {
        self.0
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a64::default();
    h.write(bytes);
    h.finish()
}

/// Fingerprint of `tokens` joined by [`SEPARATOR`], without building the joined string.
pub fn hash_tokens<S: AsRef<str>>(tokens: &[S]) -> u64 {
    let mut h = Fnv1a64::default();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            h.write(&SEPARATOR_UTF8);
        }
        h.write(t.as_ref().as_bytes());
    }
    h.finish()
}
