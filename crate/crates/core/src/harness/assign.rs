//! Minimum-cost assignment between estimated and true angles.

/// Hungarian algorithm on a rows x cols cost matrix. Returns, for each row,
/// the assigned column, or `None` when rows outnumber columns and the row
/// is left over.
pub fn assign(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    if cols == 0 {
        return vec![None; rows];
    }
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| if transpose { cost[j][i] } else { cost[i][j] };

    // Potentials formulation, 1-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=m {
        if p[j] != 0 {
            let (i, jj) = (p[j] - 1, j - 1);
            if transpose {
                out[jj] = Some(i);
            } else {
                out[i] = Some(jj);
            }
        }
    }
    out
}

/// Error of the estimate paired with `truth[target]` under the optimal
/// absolute-angle assignment; falls back to the nearest estimate when the
/// target is left unpaired. `None` if there are no estimates.
pub fn matched_error(estimates: &[f64], truth: &[f64], target: usize) -> Option<f64> {
    if estimates.is_empty() || target >= truth.len() {
        return None;
    }
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| estimates.iter().map(|e| (e - t).abs()).collect())
        .collect();
    let pairing = assign(&cost);
    let nearest = || {
        estimates
            .iter()
            .map(|e| (e - truth[target]).abs())
            .fold(f64::INFINITY, f64::min)
    };
    Some(match pairing[target] {
        Some(j) => (estimates[j] - truth[target]).abs(),
        None => nearest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
        a.iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| cost[i][j]))
            .sum()
    }

    fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items];
        }
        let mut out = Vec::new();
        for k in 0..items.len() {
            let mut rest = items.clone();
            let head = rest.remove(k);
            for mut tail in permutations(rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    // Exhaustive search over injective maps from the smaller side.
    fn brute(cost: &[Vec<f64>]) -> f64 {
        let (r, c) = (cost.len(), cost[0].len());
        let k = r.min(c);
        let mut best = f64::INFINITY;
        for perm in permutations((0..r.max(c)).collect()) {
            let s: f64 = (0..k)
                .map(|i| if r <= c { cost[i][perm[i]] } else { cost[perm[i]][i] })
                .sum();
            best = best.min(s);
        }
        best
    }

    #[test]
    fn square_example() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = assign(&cost);
        assert_eq!(total(&cost, &a), 5.0);
    }

    #[test]
    fn matched_error_uses_the_pairing() {
        // Estimate 9 is closest to the direct path at 10, but pairing it
        // with the reflection at 8 is cheaper overall.
        let err = matched_error(&[9.0, 12.0], &[10.0, 8.5], 0).unwrap();
        assert!((err - 2.0).abs() < 1e-12, "{err}");
        // More truths than estimates: unpaired target falls back to nearest.
        let err = matched_error(&[30.0], &[0.0, 29.0], 0).unwrap();
        assert_eq!(err, 30.0);
        assert_eq!(matched_error(&[], &[1.0], 0), None);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            r in 1usize..5,
            c in 1usize..5,
            seed in proptest::collection::vec(0.0f64..100.0, 25),
        ) {
            let cost: Vec<Vec<f64>> = (0..r).map(|i| (0..c).map(|j| seed[i * 5 + j]).collect()).collect();
            let a = assign(&cost);
            let used: Vec<usize> = a.iter().flatten().copied().collect();
            let mut dedup = used.clone();
            dedup.sort();
            dedup.dedup();
            prop_assert_eq!(used.len(), r.min(c));
            prop_assert_eq!(dedup.len(), used.len());
            prop_assert!((total(&cost, &a) - brute(&cost)).abs() < 1e-9);
        }
    }
}
