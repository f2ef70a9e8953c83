//! Left-to-right square-and-multiply modular exponentiation with a secret
//! exponent.
//!
//! Driver encoding: the base is `public` read big-endian (first 8 bytes)
//! reduced modulo [`MODULUS`]; the exponent is `secret` read big-endian
//! (first 8 bytes) with a bit width of `8 * len`. All arithmetic is on `u64`
//! operands with `u128` intermediate products, so nothing wraps.
//!
//! Cost model: 1 for setup; per exponent bit a loop guard (1), a bit test (1)
//! and a squaring ([`MULTIPLY_COST`]); a multiplication ([`MULTIPLY_COST`]) on
//! set bits. The safe variant performs a dummy multiplication on clear bits.

use crate::coverage::site;
use crate::driver::{Execution, TargetError};

/// Largest prime below 2^32; public.
pub const MODULUS: u64 = 4_294_967_291;

/// Ticks charged per modular multiplication or squaring.
pub const MULTIPLY_COST: u64 = 2;

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn be_u64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .take(8)
        .fold(0u64, |acc, &b| (acc << 8) | b as u64)
}

/// A decoded exponentiation problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModPowArgs {
    pub base: u64,
    pub exponent: u64,
    pub width: u32,
    pub modulus: u64,
}

impl ModPowArgs {
    pub fn decode(public: &[u8], secret: &[u8]) -> Self {
        ModPowArgs {
            base: be_u64(public) % MODULUS,
            exponent: be_u64(secret),
            width: 8 * secret.len().min(8) as u32,
            modulus: MODULUS,
        }
    }
}

fn check(args: &ModPowArgs) -> Result<(), TargetError> {
    if args.modulus < 2 {
        Err(TargetError::InvalidModulus(args.modulus))
    } else {
        Ok(())
    }
}

pub fn mod_pow_unsafe(args: &ModPowArgs, exec: &mut Execution) -> Result<u64, TargetError> {
    check(args)?;
    exec.tick(1);
    exec.visit(site("mod_pow_unsafe:entry"));
    let m = args.modulus;
    let mut r = 1 % m;
    for i in (0..args.width).rev() {
        exec.tick(2 + MULTIPLY_COST);
        exec.visit(site("mod_pow_unsafe:bit"));
        r = mul_mod(r, r, m);
        if (args.exponent >> i) & 1 == 1 {
            exec.tick(MULTIPLY_COST);
            exec.visit(site("mod_pow_unsafe:multiply"));
            r = mul_mod(r, args.base, m);
        }
    }
    Ok(r)
}

pub fn mod_pow_safe(args: &ModPowArgs, exec: &mut Execution) -> Result<u64, TargetError> {
    check(args)?;
    exec.tick(1);
    exec.visit(site("mod_pow_safe:entry"));
    let m = args.modulus;
    let mut r = 1 % m;
    let mut dummy = 1 % m;
    for i in (0..args.width).rev() {
        exec.tick(2 + MULTIPLY_COST);
        exec.visit(site("mod_pow_safe:bit"));
        r = mul_mod(r, r, m);
        exec.tick(MULTIPLY_COST);
        if (args.exponent >> i) & 1 == 1 {
            r = mul_mod(r, args.base, m);
        } else {
            dummy = mul_mod(dummy, args.base, m);
        }
    }
    std::hint::black_box(dummy);
    Ok(r)
}

pub(crate) fn unsafe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    mod_pow_unsafe(&ModPowArgs::decode(public, secret), exec).map(|r| r.to_be_bytes().to_vec())
}

pub(crate) fn safe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    mod_pow_safe(&ModPowArgs::decode(public, secret), exec).map(|r| r.to_be_bytes().to_vec())
}
