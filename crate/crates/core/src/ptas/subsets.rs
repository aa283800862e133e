//! Lexicographic `m`-subsets of `{0, …, n−1}`: counting, ranking, unranking and
//! in-place iteration.

use crate::error::{Error, Result};

/// `binomial(n, m)`, or `None` if it does not fit in a `u128`.
pub fn binomial(n: usize, m: usize) -> Option<u128> {
    if m > n {
        return Some(0);
    }
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        // acc · (n − i) / (i + 1) stays integral at every step.
        let num = (n - i) as u128;
        let den = (i + 1) as u128;
        let g = gcd(acc, den);
        acc = (acc / g).checked_mul(num / (den / g))?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `log2(binomial(n, m))`, finite for arguments far beyond `u128` range.
pub fn log2_binomial(n: u64, m: u64) -> f64 {
    if m > n {
        return f64::NEG_INFINITY;
    }
    let m = m.min(n - m);
    (0..m).map(|i| ((n - i) as f64 / (i + 1) as f64).log2()).sum()
}

/// The `rank`-th `m`-subset of `{0, …, n−1}` in lexicographic order.
pub fn subset_by_rank(n: usize, m: usize, rank: u128) -> Result<Vec<usize>> {
    let count = binomial(n, m)
        .ok_or_else(|| Error::InvalidArgument(format!("{n} choose {m} exceeds the 128-bit rank range")))?;
    if rank >= count {
        return Err(Error::RankOutOfRange { n, m, rank, count });
    }
    let mut rest = rank;
    let mut subset = Vec::with_capacity(m);
    let mut next = 0;
    for slot in 0..m {
        let mut candidate = next;
        loop {
            // Subsets that put `candidate` in this slot; all fit since they are ≤ count.
            let with_candidate = binomial(n - candidate - 1, m - slot - 1).unwrap_or(u128::MAX);
            if rest < with_candidate {
                break;
            }
            rest -= with_candidate;
            candidate += 1;
        }
        subset.push(candidate);
        next = candidate + 1;
    }
    Ok(subset)
}

/// Inverse of [`subset_by_rank`]. `subset` must be strictly increasing and below `n`.
pub fn rank_of_subset(n: usize, subset: &[usize]) -> Result<u128> {
    let m = subset.len();
    if subset.windows(2).any(|w| w[0] >= w[1]) || subset.last().is_some_and(|&x| x >= n) {
        return Err(Error::InvalidArgument(format!("{subset:?} is not a sorted subset of 0..{n}")));
    }
    binomial(n, m).ok_or_else(|| Error::InvalidArgument(format!("{n} choose {m} exceeds the 128-bit rank range")))?;
    let mut rank = 0u128;
    let mut start = 0;
    for (slot, &x) in subset.iter().enumerate() {
        for skipped in start..x {
            rank += binomial(n - skipped - 1, m - slot - 1).expect("bounded by the total count");
        }
        start = x + 1;
    }
    Ok(rank)
}

/// Steps `subset` to its lexicographic successor among `m`-subsets of `0..n`.
/// Returns false, leaving `subset` untouched, when it is already the last one.
pub fn next_subset(n: usize, subset: &mut [usize]) -> bool {
    let m = subset.len();
    let Some(slot) = (0..m).rev().find(|&i| subset[i] < n - m + i) else {
        return false;
    };
    subset[slot] += 1;
    for i in slot + 1..m {
        subset[i] = subset[i - 1] + 1;
    }
    true
}
