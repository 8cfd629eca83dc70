//! Conditioning-set enumeration.
//!
//! Subsets are produced by increasing cardinality and, within a
//! cardinality, in lexicographic order of positions in the pool. Pools are
//! kept sorted by variable index, so the order is reproducible and so are
//! the CI-test counts that depend on it.

use crate::Var;

/// Returns the first subset `z` of `pool` (in enumeration order) with
/// `min_size <= |z| <= max_size` for which `keep(z)` holds and `found(z)`
/// returns `Ok(true)`.
pub fn find_subset<E>(
    pool: &[Var],
    min_size: usize,
    max_size: Option<usize>,
    mut keep: impl FnMut(&[Var]) -> bool,
    mut found: impl FnMut(&[Var]) -> Result<bool, E>,
) -> Result<Option<Vec<Var>>, E> {
    let top = max_size.map_or(pool.len(), |m| m.min(pool.len()));
    let mut z = Vec::with_capacity(top);
    for size in min_size..=top {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            z.clear();
            z.extend(idx.iter().map(|&i| pool[i]));
            if keep(&z) && found(&z)? {
                return Ok(Some(z));
            }
            if !next_combination(&mut idx, pool.len()) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic
/// order. Returns false after the last one.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn all(pool: &[Var], max: Option<usize>) -> Vec<Vec<Var>> {
        let mut out = Vec::new();
        find_subset::<Infallible>(pool, 0, max, |_| true, |z| {
            out.push(z.to_vec());
            Ok(false)
        })
        .unwrap();
        out
    }

    #[test]
    fn enumerates_by_size_then_lexicographically() {
        let got = all(&[2, 5, 7], None);
        let want: Vec<Vec<Var>> = vec![
            vec![],
            vec![2],
            vec![5],
            vec![7],
            vec![2, 5],
            vec![2, 7],
            vec![5, 7],
            vec![2, 5, 7],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn respects_size_cap_and_empty_pool() {
        assert_eq!(all(&[1, 2, 3, 4], Some(1)).len(), 5);
        assert_eq!(all(&[], None), vec![Vec::<Var>::new()]);
    }

    #[test]
    fn counts_match_binomials() {
        let pool: Vec<Var> = (0..8).collect();
        assert_eq!(all(&pool, None).len(), 256);
        assert_eq!(all(&pool, Some(2)).len(), 1 + 8 + 28);
    }

    #[test]
    fn stops_at_first_hit_after_filter() {
        let hit = find_subset::<Infallible>(
            &[1, 2, 3],
            1,
            None,
            |z| z.contains(&3),
            |z| Ok(z.len() == 2),
        )
        .unwrap();
        assert_eq!(hit, Some(vec![1, 3]));
    }
}
