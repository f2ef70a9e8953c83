//! Accumulating string comparison (no early exit inside the loop).
//!
//! Two cost models share one control structure:
//! - leaky: the accumulate step `result &= a[i] == b[i]` costs 3 when the
//!   characters are equal and 2 when they differ, as the compiled form of the
//!   boolean accumulate short-circuits on a false comparison
//! - constant: the accumulate step costs 3 either way
//!
//! Shared costs: 1 for `result = true`, 2 for the two length reads, 1 for the
//! length comparison (plus 1 for the assignment in the leaky model when
//! lengths differ), 1 for the minimum, 1 guard per iteration plus a final
//! guard, and 1 for the return.

use crate::coverage::site;
use crate::driver::{Execution, TargetError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccumulateCost {
    Leaky,
    Constant,
}

pub fn string_equals(a: &[u8], b: &[u8], model: AccumulateCost, exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("string_equals:entry"));
    let mut result = true;
    exec.tick(2);
    let (l1, l2) = (a.len(), b.len());
    exec.tick(1);
    match model {
        AccumulateCost::Leaky => {
            if l1 != l2 {
                exec.tick(1);
                exec.visit(site("string_equals:len_mismatch"));
                result = false;
            }
        }
        AccumulateCost::Constant => result &= l1 == l2,
    }
    exec.tick(1);
    let n = l1.min(l2);
    for i in 0..n {
        exec.tick(1);
        exec.visit(site("string_equals:loop"));
        let eq = a[i] == b[i];
        match model {
            AccumulateCost::Leaky if eq => {
                exec.tick(3);
                exec.visit(site("string_equals:eq"));
            }
            AccumulateCost::Leaky => {
                exec.tick(2);
                exec.visit(site("string_equals:ne"));
            }
            AccumulateCost::Constant => exec.tick(3),
        }
        result &= eq;
    }
    exec.tick(1);
    exec.tick(1);
    result
}

pub(crate) fn leaky_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(vec![
        string_equals(public, secret, AccumulateCost::Leaky, exec) as u8,
    ])
}

pub(crate) fn const_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(vec![
        string_equals(public, secret, AccumulateCost::Constant, exec) as u8,
    ])
}
