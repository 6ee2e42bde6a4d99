//! Ratcliff/Obershelp character similarity.

/// Ratcliff/Obershelp ratio `2·M / (|a| + |b|)` over Unicode scalar values,
/// where `M` counts characters matched by recursively taking the longest
/// common substring and recursing on the unmatched pieces to its left and
/// right. Ties between equally long substrings go to the earliest start in
/// the first sequence, then in the second. No junk heuristics are applied.
///
/// The decomposition depends on argument order (`"tide"`/`"diet"` match 1
/// or 2 characters), so the lexicographically smaller string is always
/// taken as the first sequence. This makes the ratio symmetric.
pub fn diversity_ratio(a: &str, b: &str) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched_chars(&a, &b) as f64 / total as f64
}

/// Total matched characters `M`.
pub fn matched_chars<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut matched = 0;
    let mut pending = vec![(0, a.len(), 0, b.len())];
    // scratch row for the substring DP, reused across sub-problems
    let mut row = vec![0usize; b.len() + 1];
    while let Some((alo, ahi, blo, bhi)) = pending.pop() {
        let (i, j, len) = longest_match(a, b, alo, ahi, blo, bhi, &mut row);
        if len == 0 {
            continue;
        }
        matched += len;
        if alo < i && blo < j {
            pending.push((alo, i, blo, j));
        }
        if i + len < ahi && j + len < bhi {
            pending.push((i + len, ahi, j + len, bhi));
        }
    }
    matched
}

fn longest_match<T: PartialEq>(
    a: &[T],
    b: &[T],
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
    row: &mut [usize],
) -> (usize, usize, usize) {
    let (mut best_i, mut best_j, mut best_len) = (alo, blo, 0);
    // row[j + 1] = length of the common suffix ending at a[i], b[j]
    row[blo..=bhi].fill(0);
    for (i, ai) in a.iter().enumerate().take(ahi).skip(alo) {
        let mut diag = 0;
        for j in blo..bhi {
            let above = row[j + 1];
            let len = if *ai == b[j] { diag + 1 } else { 0 };
            row[j + 1] = len;
            diag = above;
            if len > best_len {
                best_len = len;
                best_i = i + 1 - len;
                best_j = j + 1 - len;
            }
        }
    }
    (best_i, best_j, best_len)
}
