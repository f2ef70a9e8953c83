//! A small LZ77 codec.
//!
//! Format: a 4-byte little-endian length of the original data, then groups of
//! up to eight tokens, each group led by a flag byte whose bit `i` marks token
//! `i` as a back-reference. A literal is one byte. A back-reference is two
//! big-endian bytes packing `(offset - 1) << 4 | (length - MIN_MATCH)`.
//!
//! Matches never overlap the bytes they produce (`length <= offset`), and the
//! encoder always takes the longest match, preferring the nearest on ties.

use thiserror::Error;

use crate::coverage::site;
use crate::driver::Execution;

pub const WINDOW: usize = 4096;
pub const MIN_MATCH: usize = 4;
pub const MAX_MATCH: usize = MIN_MATCH + 15;
const HEADER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompressError {
    #[error("stream is shorter than its header")]
    MissingHeader,
    #[error("stream ended in the middle of a token")]
    Truncated,
    #[error("back-reference offset {offset} reaches before the start of output")]
    BadOffset { offset: usize },
    #[error("decoded {got} bytes but the header announced {want}")]
    LengthMismatch { got: usize, want: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    Literal(u8),
    Match { offset: usize, len: usize },
}

fn longest_match(data: &[u8], pos: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let start = pos.saturating_sub(WINDOW);
    for src in (start..pos).rev() {
        let offset = pos - src;
        let limit = offset.min(MAX_MATCH).min(data.len() - pos);
        let len = data[src..src + limit]
            .iter()
            .zip(&data[pos..pos + limit])
            .take_while(|(a, b)| a == b)
            .count();
        if len >= MIN_MATCH && best.is_none_or(|(_, l)| len > l) {
            best = Some((offset, len));
            if len == MAX_MATCH {
                break;
            }
        }
    }
    best
}

fn tokenize(data: &[u8]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < data.len() {
        match longest_match(data, pos) {
            Some((offset, len)) => {
                tokens.push(Token::Match { offset, len });
                pos += len;
            }
            None => {
                tokens.push(Token::Literal(data[pos]));
                pos += 1;
            }
        }
    }
    tokens
}

fn encode(data_len: usize, tokens: &[Token]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + data_len + data_len / 8 + 1);
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for group in tokens.chunks(8) {
        let flag_at = out.len();
        out.push(0);
        for (i, t) in group.iter().enumerate() {
            match *t {
                Token::Literal(b) => out.push(b),
                Token::Match { offset, len } => {
                    out[flag_at] |= 1 << i;
                    let packed = (((offset - 1) as u16) << 4) | (len - MIN_MATCH) as u16;
                    out.extend_from_slice(&packed.to_be_bytes());
                }
            }
        }
    }
    out
}

/// Compresses `data`.
pub fn compress(data: &[u8]) -> Vec<u8> {
    encode(data.len(), &tokenize(data))
}

/// Compresses `data`, charging one tick per emitted token and declaring the
/// compressed size as the response.
pub fn lz77_compress(data: &[u8], exec: &mut Execution) -> Vec<u8> {
    let tokens = tokenize(data);
    for t in &tokens {
        exec.tick(1);
        match t {
            Token::Literal(_) => exec.visit(site("lz77:literal")),
            Token::Match { .. } => exec.visit(site("lz77:match")),
        }
    }
    let out = encode(data.len(), &tokens);
    exec.respond(out.len() as u64);
    out
}

pub fn decompress(stream: &[u8]) -> Result<Vec<u8>, DecompressError> {
    let header: [u8; HEADER] = stream
        .get(..HEADER)
        .and_then(|h| h.try_into().ok())
        .ok_or(DecompressError::MissingHeader)?;
    let want = u32::from_le_bytes(header) as usize;
    let mut out = Vec::with_capacity(want);
    let mut rest = &stream[HEADER..];
    while out.len() < want {
        let (&flags, tail) = rest.split_first().ok_or(DecompressError::Truncated)?;
        rest = tail;
        for i in 0..8 {
            if out.len() >= want {
                break;
            }
            if flags & (1 << i) == 0 {
                let (&b, tail) = rest.split_first().ok_or(DecompressError::Truncated)?;
                out.push(b);
                rest = tail;
            } else {
                let pair = rest.get(..2).ok_or(DecompressError::Truncated)?;
                let packed = u16::from_be_bytes([pair[0], pair[1]]);
                rest = &rest[2..];
                let offset = (packed >> 4) as usize + 1;
                let len = (packed & 0xf) as usize + MIN_MATCH;
                if offset > out.len() {
                    return Err(DecompressError::BadOffset { offset });
                }
                let from = out.len() - offset;
                for k in 0..len {
                    out.push(out[from + k]);
                }
            }
        }
    }
    if out.len() != want || !rest.is_empty() {
        return Err(DecompressError::LengthMismatch {
            got: out.len(),
            want,
        });
    }
    Ok(out)
}
