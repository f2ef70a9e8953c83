//! Login check against a stored salted digest.
//!
//! The stored credential is `SALT ++ digest(SALT ++ secret)`. A login attempt
//! with password `public` recomputes the record and compares it with the
//! stored one. The unsafe variant compares like `String.equals` and stops at
//! the first differing byte; the safe variant always walks the whole record.
//!
//! Cost model: 1 per hashed byte (for each of the two records), then for the
//! comparison 1 for the length check and 2 per compared byte (guard and
//! comparison), plus 1 for an early return in the unsafe variant.

use crate::coverage::site;
use crate::driver::{Execution, TargetError};

/// Fixed public salt of the stored record.
pub const SALT: &[u8; 4] = b"s4lt";

/// Salt plus 64-bit FNV-1a digest.
pub const RECORD_LEN: usize = SALT.len() + 8;

fn fnv1a64(chunks: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for chunk in chunks {
        for &b in *chunk {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Builds the stored record for `password`.
pub fn encrypt(password: &[u8], exec: &mut Execution) -> Vec<u8> {
    exec.tick((SALT.len() + password.len()) as u64);
    exec.visit(site("salted_login:encrypt"));
    let mut record = SALT.to_vec();
    record.extend_from_slice(&fnv1a64(&[SALT, password]).to_be_bytes());
    record
}

fn equals_unsafe(a: &[u8], b: &[u8], exec: &mut Execution) -> bool {
    exec.tick(1);
    if a.len() != b.len() {
        return false;
    }
    for (x, y) in a.iter().zip(b) {
        exec.tick(2);
        exec.visit(site("salted_login:compare"));
        if x != y {
            exec.tick(1);
            exec.visit(site("salted_login:mismatch"));
            return false;
        }
    }
    true
}

fn equals_constant_time(a: &[u8], b: &[u8], exec: &mut Execution) -> bool {
    exec.tick(1);
    let mut diff = (a.len() != b.len()) as u8;
    for (i, x) in a.iter().enumerate() {
        exec.tick(2);
        exec.visit(site("salted_login:ct_compare"));
        diff |= x ^ b.get(i).copied().unwrap_or(0);
    }
    diff == 0
}

pub fn login_unsafe(password: &[u8], stored_secret: &[u8], exec: &mut Execution) -> bool {
    let stored = encrypt(stored_secret, exec);
    let attempt = encrypt(password, exec);
    equals_unsafe(&attempt, &stored, exec)
}

pub fn login_safe(password: &[u8], stored_secret: &[u8], exec: &mut Execution) -> bool {
    let stored = encrypt(stored_secret, exec);
    let attempt = encrypt(password, exec);
    equals_constant_time(&attempt, &stored, exec)
}

pub(crate) fn unsafe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(vec![login_unsafe(public, secret, exec) as u8])
}

pub(crate) fn safe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(vec![login_safe(public, secret, exec) as u8])
}
