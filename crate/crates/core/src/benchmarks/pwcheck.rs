//! Password comparison with and without early exits.
//!
//! Cost model (unsafe):
//! - length check: 1; a length mismatch returns right there
//! - each loop iteration: guard 1 + byte comparison 1
//! - early return on a mismatching byte: 1
//!
//! A full match of `n` bytes costs `1 + 2n`; a first mismatch at index `k`
//! costs `2k + 4`.
//!
//! Cost model (safe): 1 for entry, then 4 per byte of `public` (guard, bounds
//! check, comparison, and one assignment on whichever branch is taken).

use crate::coverage::site;
use crate::driver::{Execution, TargetError};

pub fn pwcheck_unsafe(public: &[u8], secret: &[u8], exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("pwcheck_unsafe:len"));
    if public.len() != secret.len() {
        exec.visit(site("pwcheck_unsafe:len_mismatch"));
        return false;
    }
    for i in 0..public.len() {
        exec.tick(2);
        exec.visit(site("pwcheck_unsafe:loop"));
        if public[i] != secret[i] {
            exec.tick(1);
            exec.visit(site("pwcheck_unsafe:mismatch"));
            return false;
        }
    }
    exec.visit(site("pwcheck_unsafe:match"));
    true
}

pub fn pwcheck_safe(public: &[u8], secret: &[u8], exec: &mut Execution) -> bool {
    exec.tick(1);
    exec.visit(site("pwcheck_safe:entry"));
    let mut matches = true;
    for (i, &p) in public.iter().enumerate() {
        exec.tick(4);
        exec.visit(site("pwcheck_safe:loop"));
        match secret.get(i) {
            Some(&s) => matches &= p == s,
            None => matches = false,
        }
    }
    // branch-free length verdict so the result agrees with the unsafe variant
    matches & (public.len() == secret.len())
}

pub(crate) fn unsafe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(vec![pwcheck_unsafe(public, secret, exec) as u8])
}

pub(crate) fn safe_target(
    public: &[u8],
    secret: &[u8],
    exec: &mut Execution,
) -> Result<Vec<u8>, TargetError> {
    Ok(vec![pwcheck_safe(public, secret, exec) as u8])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(f: fn(&[u8], &[u8], &mut Execution) -> bool, p: &[u8], s: &[u8]) -> (bool, u64) {
        let mut exec = Execution::new();
        let r = f(p, s, &mut exec);
        (r, exec.meter.reading().ops)
    }

    #[test]
    fn empty_inputs_cost_one() {
        assert_eq!(ops(pwcheck_unsafe, &[], &[]), (true, 1));
    }

    #[test]
    fn second_byte_mismatch() {
        assert_eq!(ops(pwcheck_unsafe, &[1, 2], &[1, 3]), (false, 6));
    }

    #[test]
    fn length_mismatch_returns_after_one_op() {
        assert_eq!(ops(pwcheck_unsafe, &[1, 2, 3], &[1, 2]), (false, 1));
    }

    #[test]
    fn closed_form_costs() {
        for n in 0..=16usize {
            let p = vec![7u8; n];
            assert_eq!(ops(pwcheck_unsafe, &p, &p), (true, 1 + 2 * n as u64));
            for k in 0..n {
                let mut s = p.clone();
                s[k] = 8;
                assert_eq!(ops(pwcheck_unsafe, &p, &s), (false, 2 * k as u64 + 4));
            }
        }
    }

    #[test]
    fn safe_cost_depends_on_public_length_only() {
        for n in 0..=8usize {
            let p = vec![3u8; n];
            for s in [vec![3u8; n], vec![4u8; n], vec![], vec![3u8; n + 2]] {
                assert_eq!(ops(pwcheck_safe, &p, &s).1, 1 + 4 * n as u64);
            }
        }
    }

    #[test]
    fn safe_agrees_with_unsafe() {
        let cases: [(&[u8], &[u8]); 5] = [
            (&[], &[]),
            (&[1, 2], &[1, 2]),
            (&[1, 2], &[1, 3]),
            (&[1, 2], &[1]),
            (&[1], &[1, 2]),
        ];
        for (p, s) in cases {
            assert_eq!(ops(pwcheck_safe, p, s).0, ops(pwcheck_unsafe, p, s).0);
        }
    }
}
