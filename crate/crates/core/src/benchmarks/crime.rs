//! Compression of an attacker-influenced prefix next to a secret.
//!
//! The target compresses `public ++ secret` with [`lz77`](super::lz77) and
//! sends the result; the observable cost is the compressed size. A secret that
//! repeats a 4-byte substring of the public prefix compresses better than one
//! that does not.

use super::lz77::lz77_compress;
use crate::driver::{Execution, TargetError};

pub fn crime_compress(public: &[u8], secret: &[u8], exec: &mut Execution) -> Vec<u8> {
    let mut request = Vec::with_capacity(public.len() + secret.len());
    request.extend_from_slice(public);
    request.extend_from_slice(secret);
    lz77_compress(&request, exec)
}

pub(crate) fn target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(crime_compress(public, secret, exec))
}

/// True when `a` and `b` share a substring of at least `n` bytes.
pub fn shares_substring(a: &[u8], b: &[u8], n: usize) -> bool {
    n > 0 && b.windows(n).any(|w| a.windows(n).any(|v| v == w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(public: &[u8], secret: &[u8]) -> u64 {
        let mut exec = Execution::new();
        crime_compress(public, secret, &mut exec);
        exec.meter.reading().response_bytes
    }

    #[test]
    fn guessed_secret_compresses_better() {
        let public = b"cookie=SECRETxyz";
        assert!(size(public, b"SECR") < size(public, b"q8#z"));
    }

    #[test]
    fn substring_helper() {
        assert!(shares_substring(b"abcdef", b"zcdefz", 4));
        assert!(!shares_substring(b"abcdef", b"zcdezf", 4));
        assert!(!shares_substring(b"abc", b"abc", 4));
    }
}
