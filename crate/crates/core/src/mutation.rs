//! Byte-level input mutation: AFL's deterministic stages, stacked havoc and
//! corpus splicing.

use rand::Rng;

/// Largest magnitude used by the arithmetic stages.
pub const ARITH_MAX: u32 = 35;

/// Havoc stacks at most this many operations per mutant.
pub const HAVOC_STACK_MAX: u32 = 64;

pub const INTERESTING_8: [i8; 9] = [-128, -1, 0, 1, 16, 32, 64, 100, 127];

pub const INTERESTING_16: [i16; 19] = [
    -128, -1, 0, 1, 16, 32, 64, 100, 127, // 8-bit values, sign-extended
    -32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767,
];

pub const INTERESTING_32: [i32; 27] = [
    -128,
    -1,
    0,
    1,
    16,
    32,
    64,
    100,
    127,
    -32768,
    -129,
    128,
    255,
    256,
    512,
    1000,
    1024,
    4096,
    32767,
    -2147483648,
    -100663046,
    -32769,
    32768,
    65535,
    65536,
    100663045,
    2147483647,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MutationBudget {
    /// Havoc mutants generated per queue-entry visit.
    pub havoc_iterations: usize,
    pub max_input_len: usize,
    pub rng_seed: u64,
}

impl MutationBudget {
    pub fn new(max_input_len: usize, rng_seed: u64) -> Self {
        assert!(max_input_len >= 1, "max_input_len must be at least 1");
        Self {
            havoc_iterations: 256,
            max_input_len,
            rng_seed,
        }
    }
}

/// The deterministic sub-stages, in the order they run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetStage {
    Flip1,
    Flip2,
    Flip4,
    Byte1,
    Byte2,
    Byte4,
    Arith8,
    Arith16,
    Arith32,
    Interest8,
    Interest16,
    Interest32,
}

impl DetStage {
    pub const ALL: [DetStage; 12] = [
        DetStage::Flip1,
        DetStage::Flip2,
        DetStage::Flip4,
        DetStage::Byte1,
        DetStage::Byte2,
        DetStage::Byte4,
        DetStage::Arith8,
        DetStage::Arith16,
        DetStage::Arith32,
        DetStage::Interest8,
        DetStage::Interest16,
        DetStage::Interest32,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetStage::Flip1 => "bitflip 1/1",
            DetStage::Flip2 => "bitflip 2/1",
            DetStage::Flip4 => "bitflip 4/1",
            DetStage::Byte1 => "byteflip 8/8",
            DetStage::Byte2 => "byteflip 16/8",
            DetStage::Byte4 => "byteflip 32/8",
            DetStage::Arith8 => "arith 8/8",
            DetStage::Arith16 => "arith 16/8",
            DetStage::Arith32 => "arith 32/8",
            DetStage::Interest8 => "interest 8/8",
            DetStage::Interest16 => "interest 16/8",
            DetStage::Interest32 => "interest 32/8",
        }
    }

    /// Lazily yields this stage's mutants of `input`.
    pub fn mutants<'a>(self, input: &'a [u8]) -> Box<dyn Iterator<Item = Vec<u8>> + 'a> {
        let len = input.len();
        match self {
            DetStage::Flip1 => bit_flips(input, 1),
            DetStage::Flip2 => bit_flips(input, 2),
            DetStage::Flip4 => bit_flips(input, 4),
            DetStage::Byte1 => byte_flips(input, 1),
            DetStage::Byte2 => byte_flips(input, 2),
            DetStage::Byte4 => byte_flips(input, 4),
            DetStage::Arith8 => Box::new((0..len).flat_map(move |pos| {
                (1..=ARITH_MAX as u8).flat_map(move |k| {
                    [k, k.wrapping_neg()].into_iter().map(move |delta| {
                        let mut m = input.to_vec();
                        m[pos] = m[pos].wrapping_add(delta);
                        m
                    })
                })
            })),
            DetStage::Arith16 => arith_wide(input, 2),
            DetStage::Arith32 => arith_wide(input, 4),
            DetStage::Interest8 => Box::new((0..len).flat_map(move |pos| {
                INTERESTING_8.iter().filter_map(move |&v| {
                    let v = v as u8;
                    (input[pos] != v).then(|| {
                        let mut m = input.to_vec();
                        m[pos] = v;
                        m
                    })
                })
            })),
            DetStage::Interest16 => {
                let values: Vec<[u8; 2]> = INTERESTING_16
                    .iter()
                    .flat_map(|&v| [v.to_le_bytes(), v.to_be_bytes()])
                    .collect();
                overwrite_values(input, values)
            }
            DetStage::Interest32 => {
                let values: Vec<[u8; 4]> = INTERESTING_32
                    .iter()
                    .flat_map(|&v| [v.to_le_bytes(), v.to_be_bytes()])
                    .collect();
                overwrite_values(input, values)
            }
        }
    }
}

fn bit_flips(input: &[u8], width: usize) -> Box<dyn Iterator<Item = Vec<u8>> + '_> {
    let bits = input.len() * 8;
    let positions = (bits + 1).saturating_sub(width);
    Box::new((0..positions).map(move |start| {
        let mut m = input.to_vec();
        for b in start..start + width {
            m[b / 8] ^= 1 << (b % 8);
        }
        m
    }))
}

fn byte_flips(input: &[u8], width: usize) -> Box<dyn Iterator<Item = Vec<u8>> + '_> {
    let positions = (input.len() + 1).saturating_sub(width);
    Box::new((0..positions).map(move |start| {
        let mut m = input.to_vec();
        for b in &mut m[start..start + width] {
            *b ^= 0xff;
        }
        m
    }))
}

fn arith_wide(input: &[u8], width: usize) -> Box<dyn Iterator<Item = Vec<u8>> + '_> {
    let positions = (input.len() + 1).saturating_sub(width);
    Box::new((0..positions).flat_map(move |pos| {
        (1..=ARITH_MAX).flat_map(move |k| {
            [(k, false), (k, true)]
                .into_iter()
                .flat_map(move |(k, sub)| {
                    [false, true].into_iter().map(move |big_endian| {
                        let mut m = input.to_vec();
                        add_wide(&mut m[pos..pos + width], k, sub, big_endian);
                        m
                    })
                })
        })
    }))
}

/// Adds (or subtracts) `k` to a 2- or 4-byte integer in place.
fn add_wide(slot: &mut [u8], k: u32, sub: bool, big_endian: bool) {
    match slot.len() {
        2 => {
            let arr: [u8; 2] = slot.try_into().unwrap();
            let v = if big_endian {
                u16::from_be_bytes(arr)
            } else {
                u16::from_le_bytes(arr)
            };
            let v = if sub {
                v.wrapping_sub(k as u16)
            } else {
                v.wrapping_add(k as u16)
            };
            let out = if big_endian {
                v.to_be_bytes()
            } else {
                v.to_le_bytes()
            };
            slot.copy_from_slice(&out);
        }
        4 => {
            let arr: [u8; 4] = slot.try_into().unwrap();
            let v = if big_endian {
                u32::from_be_bytes(arr)
            } else {
                u32::from_le_bytes(arr)
            };
            let v = if sub {
                v.wrapping_sub(k)
            } else {
                v.wrapping_add(k)
            };
            let out = if big_endian {
                v.to_be_bytes()
            } else {
                v.to_le_bytes()
            };
            slot.copy_from_slice(&out);
        }
        1 => {
            slot[0] = if sub {
                slot[0].wrapping_sub(k as u8)
            } else {
                slot[0].wrapping_add(k as u8)
            };
        }
        n => unreachable!("unsupported arithmetic width {n}"),
    }
}

fn overwrite_values<const W: usize>(
    input: &[u8],
    values: Vec<[u8; W]>,
) -> Box<dyn Iterator<Item = Vec<u8>> + '_> {
    let positions = (input.len() + 1).saturating_sub(W);
    Box::new((0..positions).flat_map(move |pos| {
        let values = values.clone();
        values
            .into_iter()
            .filter(move |v| input[pos..pos + W] != v[..])
            .map(move |v| {
                let mut m = input.to_vec();
                m[pos..pos + W].copy_from_slice(&v);
                m
            })
    }))
}

/// All deterministic mutants of `input`, stage by stage, lazily.
pub fn deterministic_stage(input: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    DetStage::ALL
        .into_iter()
        .flat_map(move |stage| stage.mutants(input))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HavocOp {
    FlipBit,
    SetByte,
    Arith,
    InsertBlock,
    DeleteBlock,
    OverwriteBlock,
    DuplicateBlock,
}

const HAVOC_OPS: [HavocOp; 7] = [
    HavocOp::FlipBit,
    HavocOp::SetByte,
    HavocOp::Arith,
    HavocOp::InsertBlock,
    HavocOp::DeleteBlock,
    HavocOp::OverwriteBlock,
    HavocOp::DuplicateBlock,
];

fn block_len<R: Rng + ?Sized>(rng: &mut R, limit: usize) -> usize {
    debug_assert!(limit >= 1);
    // mostly short blocks, occasionally long ones
    let cap = match rng.gen_range(0..4) {
        0..=2 => limit.min(8),
        _ => limit.min(64),
    };
    rng.gen_range(1..=cap)
}

/// Applies 1 to 64 stacked random operations to a copy of `input`.
///
/// The result always has `1 <= len <= budget.max_input_len`.
pub fn havoc<R: Rng + ?Sized>(input: &[u8], budget: &MutationBudget, rng: &mut R) -> Vec<u8> {
    assert!(!input.is_empty(), "havoc needs a non-empty input");
    let max_len = budget.max_input_len;
    let mut buf: Vec<u8> = input[..input.len().min(max_len)].to_vec();
    let stack = 1usize << rng.gen_range(0..=HAVOC_STACK_MAX.trailing_zeros());

    for _ in 0..stack {
        match HAVOC_OPS[rng.gen_range(0..HAVOC_OPS.len())] {
            HavocOp::FlipBit => {
                let bit = rng.gen_range(0..buf.len() * 8);
                buf[bit / 8] ^= 1 << (bit % 8);
            }
            HavocOp::SetByte => {
                let pos = rng.gen_range(0..buf.len());
                buf[pos] = if rng.gen_bool(0.5) {
                    INTERESTING_8[rng.gen_range(0..INTERESTING_8.len())] as u8
                } else {
                    rng.gen()
                };
            }
            HavocOp::Arith => {
                let width = [1usize, 2, 4][rng.gen_range(0..3)];
                if buf.len() >= width {
                    let pos = rng.gen_range(0..=buf.len() - width);
                    let k = rng.gen_range(1..=ARITH_MAX);
                    add_wide(&mut buf[pos..pos + width], k, rng.gen(), rng.gen());
                }
            }
            HavocOp::InsertBlock => {
                let room = max_len - buf.len();
                if room > 0 {
                    let n = block_len(rng, room);
                    let at = rng.gen_range(0..=buf.len());
                    let block: Vec<u8> = if rng.gen_bool(0.5) {
                        let fill = rng.gen();
                        vec![fill; n]
                    } else {
                        (0..n).map(|_| rng.gen()).collect()
                    };
                    buf.splice(at..at, block);
                }
            }
            HavocOp::DeleteBlock => {
                if buf.len() >= 2 {
                    let n = block_len(rng, buf.len() - 1);
                    let at = rng.gen_range(0..=buf.len() - n);
                    buf.drain(at..at + n);
                }
            }
            HavocOp::OverwriteBlock => {
                let n = block_len(rng, buf.len());
                let to = rng.gen_range(0..=buf.len() - n);
                if rng.gen_range(0..4) == 0 {
                    let fill = rng.gen();
                    buf[to..to + n].fill(fill);
                } else {
                    let from = rng.gen_range(0..=buf.len() - n);
                    buf.copy_within(from..from + n, to);
                }
            }
            HavocOp::DuplicateBlock => {
                let room = max_len - buf.len();
                if room > 0 {
                    let n = block_len(rng, room.min(buf.len()));
                    let from = rng.gen_range(0..=buf.len() - n);
                    let at = rng.gen_range(0..=buf.len());
                    let block = buf[from..from + n].to_vec();
                    buf.splice(at..at, block);
                }
            }
        }
    }
    debug_assert!(!buf.is_empty() && buf.len() <= max_len);
    buf
}

/// `a[..split_a] ++ b[split_b..]`.
pub fn splice_at(a: &[u8], b: &[u8], split_a: usize, split_b: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(split_a + b.len().saturating_sub(split_b));
    out.extend_from_slice(&a[..split_a]);
    out.extend_from_slice(&b[split_b..]);
    out
}

/// Joins a prefix of `a` with a suffix of `b`. Returns `None` when the two
/// inputs are identical, since nothing new can come out of them.
pub fn splice<R: Rng + ?Sized>(
    a: &[u8],
    b: &[u8],
    max_input_len: usize,
    rng: &mut R,
) -> Option<Vec<u8>> {
    if a == b || a.is_empty() || b.is_empty() {
        return None;
    }
    let common = a.len().min(b.len());
    let first_diff = (0..common).find(|&i| a[i] != b[i]);
    let last_diff = (0..common).rev().find(|&i| a[i] != b[i]);

    let (split_a, split_b) = match (first_diff, last_diff) {
        (Some(f), Some(l)) if l > f => {
            // same cut in both, somewhere inside the differing region
            let s = rng.gen_range(f.max(1)..=l);
            (s, s)
        }
        _ => (rng.gen_range(1..=a.len()), rng.gen_range(0..b.len())),
    };
    let mut out = splice_at(a, b, split_a, split_b);
    out.truncate(max_input_len);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_zero_byte_bit_flips() {
        let out: Vec<Vec<u8>> = DetStage::Flip1.mutants(&[0x00]).collect();
        let expected: Vec<Vec<u8>> = (0..8).map(|b| vec![1u8 << b]).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn byte_flip_examples() {
        let out: Vec<Vec<u8>> = DetStage::Byte1.mutants(&[0xff, 0x00]).collect();
        assert_eq!(out, vec![vec![0x00, 0x00], vec![0xff, 0xff]]);
    }

    #[test]
    fn arith_plus_one() {
        let out: Vec<Vec<u8>> = DetStage::Arith8.mutants(&[0x10]).collect();
        assert_eq!(out[0], vec![0x11]);
        assert_eq!(out[1], vec![0x0f]);
        assert_eq!(out.len(), 70);
    }

    #[test]
    fn short_inputs_skip_wide_stages() {
        assert_eq!(DetStage::Arith16.mutants(&[1]).count(), 0);
        assert_eq!(DetStage::Arith32.mutants(&[1, 2, 3]).count(), 0);
        assert_eq!(DetStage::Byte4.mutants(&[1, 2]).count(), 0);
    }

    // Independent count of interesting-value substitutions that would be no-ops.
    fn interesting_noops(input: &[u8]) -> usize {
        let mut noop = 0;
        for &b in input {
            noop += INTERESTING_8.iter().filter(|&&v| b == v as u8).count();
        }
        for pos in 0..input.len().saturating_sub(1) {
            let cur = &input[pos..pos + 2];
            for v in INTERESTING_16 {
                noop += (cur == v.to_le_bytes()) as usize;
                noop += (cur == v.to_be_bytes()) as usize;
            }
        }
        for pos in 0..input.len().saturating_sub(3) {
            let cur = &input[pos..pos + 4];
            for v in INTERESTING_32 {
                noop += (cur == v.to_le_bytes()) as usize;
                noop += (cur == v.to_be_bytes()) as usize;
            }
        }
        noop
    }

    /// Closed-form mutant count per sub-stage for an input of length `len`.
    pub(crate) fn closed_form(stage: DetStage, len: usize) -> usize {
        let l = len as isize;
        let pos = |w: isize| (l - w + 1).max(0) as usize;
        match stage {
            DetStage::Flip1 => pos(1) * 8,
            DetStage::Flip2 => (8 * l - 1).max(0) as usize,
            DetStage::Flip4 => (8 * l - 3).max(0) as usize,
            DetStage::Byte1 => pos(1),
            DetStage::Byte2 => pos(2),
            DetStage::Byte4 => pos(4),
            DetStage::Arith8 => pos(1) * 2 * ARITH_MAX as usize,
            DetStage::Arith16 => pos(2) * 4 * ARITH_MAX as usize,
            DetStage::Arith32 => pos(4) * 4 * ARITH_MAX as usize,
            DetStage::Interest8 => pos(1) * INTERESTING_8.len(),
            DetStage::Interest16 => pos(2) * 2 * INTERESTING_16.len(),
            DetStage::Interest32 => pos(4) * 2 * INTERESTING_32.len(),
        }
    }

    proptest! {
        #[test]
        fn deterministic_counts_match_closed_form(input in prop::collection::vec(any::<u8>(), 1..24)) {
            let mut total = 0;
            for stage in DetStage::ALL {
                let n = stage.mutants(&input).count();
                let expected = closed_form(stage, input.len());
                match stage {
                    DetStage::Interest8 | DetStage::Interest16 | DetStage::Interest32 => {
                        prop_assert!(n <= expected);
                    }
                    _ => prop_assert_eq!(n, expected, "stage {}", stage.name()),
                }
                total += expected;
            }
            prop_assert_eq!(deterministic_stage(&input).count(), total - interesting_noops(&input));
        }

        #[test]
        fn deterministic_mutants_preserve_length_and_differ(input in prop::collection::vec(any::<u8>(), 1..12)) {
            for m in deterministic_stage(&input) {
                prop_assert_eq!(m.len(), input.len());
                prop_assert_ne!(&m, &input);
                // the changed bytes form one contiguous region
                let first = m.iter().zip(&input).position(|(a, b)| a != b).unwrap();
                let last = m.iter().zip(&input).rposition(|(a, b)| a != b).unwrap();
                prop_assert!(last - first < 4);
            }
        }

        #[test]
        fn havoc_respects_length_bounds(
            input in prop::collection::vec(any::<u8>(), 1..80),
            max_len in 1usize..64,
            seed in any::<u64>(),
        ) {
            let budget = MutationBudget::new(max_len, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..32 {
                let m = havoc(&input, &budget, &mut rng);
                prop_assert!(!m.is_empty() && m.len() <= max_len);
            }
        }

        #[test]
        fn splice_output_comes_from_both_sides(
            a in prop::collection::vec(any::<u8>(), 1..40),
            b in prop::collection::vec(any::<u8>(), 1..40),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match splice(&a, &b, 64, &mut rng) {
                None => prop_assert_eq!(&a, &b),
                Some(m) => {
                    prop_assert!(!m.is_empty() && m.len() <= 64);
                    // some split (i, j) reproduces m
                    let found = (1..=a.len()).any(|i| {
                        (0..b.len()).any(|j| {
                            let mut full = splice_at(&a, &b, i, j);
                            full.truncate(64);
                            full == m
                        })
                    });
                    prop_assert!(found);
                }
            }
        }
    }

    #[test]
    fn havoc_is_reproducible_with_fixed_seed() {
        let budget = MutationBudget::new(48, 7);
        let input = b"some seed input".to_vec();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.rng_seed);
            (0..200)
                .map(|_| havoc(&input, &budget, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn havoc_never_grows_a_full_input() {
        let budget = MutationBudget::new(8, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            assert!(havoc(&[7u8; 8], &budget, &mut rng).len() <= 8);
        }
    }

    #[test]
    fn havoc_never_empties_a_single_byte() {
        let budget = MutationBudget::new(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            assert!(!havoc(&[9u8], &budget, &mut rng).is_empty());
        }
    }

    #[test]
    fn splice_construction() {
        assert_eq!(
            splice_at(&[1, 1, 1, 1], &[2, 2, 2, 2], 2, 2),
            vec![1, 1, 2, 2]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(splice(&[5, 6], &[5, 6], 16, &mut rng), None);
    }
}
