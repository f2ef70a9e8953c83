//! Secret-conditioned loop microbenchmarks: Array, LoopAndbranch, Sanity and
//! Straightline, each with an unsafe and a repaired variant.
//!
//! Driver encoding: `low` is the public segment and `high` the secret segment,
//! each decoded as a big-endian `i16` from its first two bytes (a one-byte
//! segment is sign-extended). Arithmetic on them is explicitly wrapping.
//!
//! Cost model: 1 per branch condition, 1 per loop guard evaluation that enters
//! the body, 1 per loop body statement.

use crate::coverage::site;
use crate::driver::{Execution, TargetError};

/// Decodes a segment into a 16-bit signed value.
pub fn decode_i16(segment: &[u8]) -> i16 {
    match segment {
        [] => 0,
        [b] => *b as i8 as i16,
        [a, b, ..] => i16::from_be_bytes([*a, *b]),
    }
}

/// Array: when `high > 0` the unsafe variant allocates and fills an array of
/// `public.len()` cells (2 ticks and 4 metered bytes per cell). The repaired
/// variant does the same work on the other branch.
pub fn array_unsafe(n: usize, high: i16, exec: &mut Execution) -> Result<bool, TargetError> {
    exec.tick(1);
    exec.visit(site("array_unsafe:branch"));
    if high > 0 {
        fill(n, exec, site("array_unsafe:fill"))?;
    }
    Ok(high > 0)
}

pub fn array_safe(n: usize, high: i16, exec: &mut Execution) -> Result<bool, TargetError> {
    exec.tick(1);
    exec.visit(site("array_safe:branch"));
    if high > 0 {
        fill(n, exec, site("array_safe:fill"))?;
    } else {
        fill(n, exec, site("array_safe:dummy_fill"))?;
    }
    Ok(high > 0)
}

fn fill(n: usize, exec: &mut Execution, loc: u16) -> Result<(), TargetError> {
    let bytes = 4 * n as u64;
    exec.alloc(bytes);
    let mut cells = vec![0i32; n];
    for (i, c) in cells.iter_mut().enumerate() {
        exec.tick(2);
        exec.visit(loc);
        *c = i as i32;
    }
    std::hint::black_box(&cells);
    exec.free(bytes)
}

fn spin(count: u32, exec: &mut Execution, loc: u16) {
    for _ in 0..count {
        exec.tick(2);
        exec.visit(loc);
    }
}

/// LoopAndbranch (unsafe): a negative secret loops `low` times, any other
/// secret loops `high` times.
pub fn loop_and_branch_unsafe(low: i16, high: i16, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("loop_and_branch_unsafe:branch"));
    if high < 0 {
        spin(
            low.max(0) as u32,
            exec,
            site("loop_and_branch_unsafe:low_loop"),
        );
    } else {
        spin(high as u32, exec, site("loop_and_branch_unsafe:high_loop"));
    }
    high < 0
}

/// LoopAndbranch (repaired): both branches loop `low` times, except that the
/// non-negative branch guards its loop with `high + 10 > 0`. That sum wraps
/// for `high` in `32758..=32767`, which silently skips the loop.
pub fn loop_and_branch_safe(low: i16, high: i16, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("loop_and_branch_safe:branch"));
    if high < 0 {
        spin(
            low.max(0) as u32,
            exec,
            site("loop_and_branch_safe:low_loop"),
        );
    } else {
        let bound = high.wrapping_add(10);
        let mut j: i16 = 0;
        while j < low && bound > 0 {
            exec.tick(2);
            exec.visit(site("loop_and_branch_safe:bounded_loop"));
            j += 1;
        }
        if bound <= 0 {
            exec.visit(site("loop_and_branch_safe:wrapped"));
        }
    }
    high < 0
}

/// Sanity (unsafe): loops `high - low` times when `high > low`.
pub fn sanity_unsafe(low: i16, high: i16, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("sanity_unsafe:branch"));
    if high > low {
        let span = (high as i32 - low as i32) as u32;
        spin(span, exec, site("sanity_unsafe:loop"));
    }
    high > low
}

/// Sanity (repaired): a branch-free comparison.
pub fn sanity_safe(low: i16, high: i16, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("sanity_safe:compare"));
    high > low
}

/// Straightline (unsafe): eight extra statements when `high > 0`.
pub fn straightline_unsafe(high: i16, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("straightline_unsafe:branch"));
    if high > 0 {
        exec.tick(8);
        exec.visit(site("straightline_unsafe:then"));
    }
    high > 0
}

/// Straightline (repaired): eight statements on either branch.
pub fn straightline_safe(high: i16, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("straightline_safe:branch"));
    if high > 0 {
        exec.tick(8);
        exec.visit(site("straightline_safe:then"));
    } else {
        exec.tick(8);
        exec.visit(site("straightline_safe:else"));
    }
    high > 0
}

fn flag(b: bool) -> Vec<u8> {
    vec![b as u8]
}

type Res = Result<Vec<u8>, TargetError>;

pub(crate) fn array_unsafe_target(p: &[u8], s: &[u8], e: &mut Execution) -> Res {
    array_unsafe(p.len(), decode_i16(s), e).map(flag)
}

pub(crate) fn array_safe_target(p: &[u8], s: &[u8], e: &mut Execution) -> Res {
    array_safe(p.len(), decode_i16(s), e).map(flag)
}

pub(crate) fn loop_and_branch_unsafe_target(p: &[u8], s: &[u8], e: &mut Execution) -> Res {
    Ok(flag(loop_and_branch_unsafe(
        decode_i16(p),
        decode_i16(s),
        e,
    )))
}

pub(crate) fn loop_and_branch_safe_target(p: &[u8], s: &[u8], e: &mut Execution) -> Res {
    Ok(flag(loop_and_branch_safe(decode_i16(p), decode_i16(s), e)))
}

pub(crate) fn sanity_unsafe_target(p: &[u8], s: &[u8], e: &mut Execution) -> Res {
    Ok(flag(sanity_unsafe(decode_i16(p), decode_i16(s), e)))
}

pub(crate) fn sanity_safe_target(p: &[u8], s: &[u8], e: &mut Execution) -> Res {
    Ok(flag(sanity_safe(decode_i16(p), decode_i16(s), e)))
}

pub(crate) fn straightline_unsafe_target(_: &[u8], s: &[u8], e: &mut Execution) -> Res {
    Ok(flag(straightline_unsafe(decode_i16(s), e)))
}

pub(crate) fn straightline_safe_target(_: &[u8], s: &[u8], e: &mut Execution) -> Res {
    Ok(flag(straightline_safe(decode_i16(s), e)))
}
