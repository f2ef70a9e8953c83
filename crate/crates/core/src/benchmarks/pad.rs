//! String padding to a fixed total length.
//!
//! Driver encoding: `src` is the secret up to its first NUL byte, `padChar`
//! is `public[0]`, `rightPad` is the low bit of `public[1]`, and
//! `totalLength` is `public.len()`.
//!
//! Cost model (unsafe): 1 for the length read, 1 for the `src >= total`
//! comparison, 1 for the early return when it holds; otherwise 1 for the
//! builder allocation, 2 per padding iteration (guard, append), a final guard,
//! 1 for the `rightPad` branch and 1 for the concatenation. The builder is
//! metered as `padLength` live bytes.
//!
//! Cost model (safe): the same prologue without the early return, then a loop
//! over all `totalLength` positions costing 2 each whether it appends or does
//! dummy work. The builder is metered as `totalLength` live bytes.

use crate::coverage::site;
use crate::driver::{Execution, TargetError};

/// Decoded arguments of one padding call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadArgs<'a> {
    pub src: &'a [u8],
    pub pad_char: u8,
    pub right_pad: bool,
    pub total_length: usize,
}

impl<'a> PadArgs<'a> {
    pub fn decode(public: &[u8], secret: &'a [u8]) -> Self {
        let end = secret.iter().position(|&b| b == 0).unwrap_or(secret.len());
        PadArgs {
            src: &secret[..end],
            pad_char: public.first().copied().unwrap_or(b' '),
            right_pad: public.get(1).is_some_and(|b| b & 1 == 1),
            total_length: public.len(),
        }
    }
}

fn assemble(src: &[u8], padding: &[u8], right_pad: bool) -> Vec<u8> {
    if right_pad {
        [src, padding].concat()
    } else {
        [padding, src].concat()
    }
}

pub fn pad_unsafe(args: &PadArgs, exec: &mut Execution) -> Result<Vec<u8>, TargetError> {
    exec.tick(1);
    exec.visit(site("pad_unsafe:entry"));
    let src_length = args.src.len();
    exec.tick(1);
    if src_length >= args.total_length {
        exec.tick(1);
        exec.visit(site("pad_unsafe:early_return"));
        return Ok(args.src.to_vec());
    }
    let pad_length = args.total_length - src_length;
    exec.tick(1);
    exec.alloc(pad_length as u64);
    let mut sb = Vec::with_capacity(pad_length);
    for _ in 0..pad_length {
        exec.tick(2);
        exec.visit(site("pad_unsafe:loop"));
        sb.push(args.pad_char);
    }
    exec.tick(1);
    exec.tick(1);
    let out = if args.right_pad {
        exec.visit(site("pad_unsafe:right"));
        assemble(args.src, &sb, true)
    } else {
        exec.visit(site("pad_unsafe:left"));
        assemble(args.src, &sb, false)
    };
    exec.tick(1);
    exec.free(pad_length as u64)?;
    Ok(out)
}

pub fn pad_safe(args: &PadArgs, exec: &mut Execution) -> Result<Vec<u8>, TargetError> {
    exec.tick(1);
    exec.visit(site("pad_safe:entry"));
    let src_length = args.src.len();
    exec.tick(1);
    let pad_length = args.total_length.saturating_sub(src_length);
    exec.tick(1);
    exec.alloc(args.total_length as u64);
    let mut sb = Vec::with_capacity(args.total_length);
    let mut dummy = 0u8;
    for i in 0..args.total_length {
        exec.tick(2);
        exec.visit(site("pad_safe:loop"));
        if i < pad_length {
            sb.push(args.pad_char);
        } else {
            dummy = dummy.wrapping_add(args.pad_char);
        }
    }
    std::hint::black_box(dummy);
    exec.tick(1);
    exec.tick(1);
    let out = if src_length >= args.total_length {
        args.src.to_vec()
    } else {
        assemble(args.src, &sb, args.right_pad)
    };
    exec.tick(1);
    exec.free(args.total_length as u64)?;
    Ok(out)
}

pub(crate) fn unsafe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    pad_unsafe(&PadArgs::decode(public, secret), exec)
}

pub(crate) fn safe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    pad_safe(&PadArgs::decode(public, secret), exec)
}
