//! k-subsets of `{0, ..., n-1}`: lexicographic enumeration, exact binomial
//! counts, and unranking for uniform sampling.

/// Lexicographic iterator over all `k`-subsets of `{0, ..., n-1}`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let k = cur.len();
        // Rightmost position that can still be incremented.
        match (0..k).rev().find(|&i| cur[i] < self.n - k + i) {
            Some(i) => {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// The `rank`-th `k`-subset of `{0, ..., n-1}` in lexicographic order.
///
/// # Panics
/// If `rank >= C(n, k)`.
pub fn unrank(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    assert!(
        rank < binomial(n, k).unwrap_or(u128::MAX),
        "rank out of range"
    );
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            // Subsets that place `next` in this slot.
            let block = binomial(n - next - 1, remaining).expect("fits since total fits");
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}
