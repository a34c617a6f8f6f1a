//! Exhaustive traversal of all binary words of a fixed length.
//!
//! Row vectors `left·A_{w1}⋯A_{wk}` are carried exactly in `u64` and shared
//! between words with a common prefix. The top levels are split into
//! independent prefix blocks that run in parallel; block results are merged
//! in lexicographic prefix order so the outcome does not depend on the
//! thread count.

use rayon::prelude::*;

use crate::error::{check_capacity, Result};
use crate::matrixgen::TransitionPair;

/// Deepest exhaustive enumeration attempted (2^26 words).
pub const MAX_EXACT_DEPTH: usize = 26;

const SPLIT_DEPTH: usize = 8;

/// Letter `i` (0-based) of the word encoded by `bits` at length `n`.
pub fn letter_at(bits: u64, n: usize, i: usize) -> u8 {
    ((bits >> (n - 1 - i)) & 1) as u8
}

pub fn word_from_bits(bits: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| letter_at(bits, n, i)).collect()
}

fn descend<A>(
    tp: &TransitionPair,
    depth_left: usize,
    bits: u64,
    levels: &mut [Vec<u64>],
    acc: &mut A,
    leaf: &(impl Fn(&mut A, u64, &[u64]) + Sync),
) {
    if depth_left == 0 {
        leaf(acc, bits, &levels[0]);
        return;
    }
    let (cur, rest) = levels.split_first_mut().expect("level buffers");
    for b in 0..2u8 {
        tp.row_times(cur, b, &mut rest[0]);
        descend(tp, depth_left - 1, (bits << 1) | b as u64, rest, acc, leaf);
    }
}

/// Runs `leaf(acc, word_bits, left·A_word)` over all `2^n` words, one
/// accumulator per prefix block, and returns `finish(acc)` for each block in
/// prefix order.
pub fn fold_word_blocks<A, B, I, L, F>(
    tp: &TransitionPair,
    n: usize,
    left: &[u64],
    init: I,
    leaf: L,
    finish: F,
) -> Result<Vec<B>>
where
    B: Send,
    I: Fn() -> A + Sync,
    L: Fn(&mut A, u64, &[u64]) + Sync,
    F: Fn(A) -> B + Sync,
{
    check_capacity("exact enumeration depth", n, MAX_EXACT_DEPTH)?;
    let dim = tp.dim();
    let split = n.min(SPLIT_DEPTH);
    Ok((0..1u64 << split)
        .into_par_iter()
        .map(|prefix| {
            let mut v = left.to_vec();
            let mut next = vec![0u64; dim];
            for i in 0..split {
                tp.row_times(&v, letter_at(prefix, split, i), &mut next);
                std::mem::swap(&mut v, &mut next);
            }
            let rest = n - split;
            let mut levels = vec![vec![0u64; dim]; rest + 1];
            levels[0] = v;
            let mut acc = init();
            descend(tp, rest, prefix, &mut levels, &mut acc, &leaf);
            finish(acc)
        })
        .collect())
}

/// Folds `leaf(acc, word_bits, left·A_word)` over all `2^n` words.
pub fn fold_words<A, I, L, M>(
    tp: &TransitionPair,
    n: usize,
    left: &[u64],
    init: I,
    leaf: L,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    L: Fn(&mut A, u64, &[u64]) + Sync,
    M: Fn(A, A) -> A,
{
    let blocks = fold_word_blocks(tp, n, left, init, leaf, |a| a)?;
    let mut it = blocks.into_iter();
    let first = it.next().expect("at least one block");
    Ok(it.fold(first, merge))
}

fn run_lengths(mut values: Vec<u64>) -> Vec<(u64, u64)> {
    values.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Multiset of `e·A_w·e` over all words of length `n`: sorted
/// `(value, multiplicity)` pairs.
pub fn product_sum_histogram(tp: &TransitionPair, n: usize) -> Result<Vec<(u64, u64)>> {
    let e = vec![1u64; tp.dim()];
    let blocks = fold_word_blocks(
        tp,
        n,
        &e,
        Vec::new,
        |acc: &mut Vec<u64>, _, v| acc.push(v.iter().sum()),
        run_lengths,
    )?;
    let mut pairs: Vec<(u64, u64)> = blocks.into_iter().flatten().collect();
    pairs.par_sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(pairs.len());
    for (v, c) in pairs {
        match out.last_mut() {
            Some((last, total)) if *last == v => *total += c,
            _ => out.push((v, c)),
        }
    }
    Ok(out)
}
