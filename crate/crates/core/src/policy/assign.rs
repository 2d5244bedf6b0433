//! Optimal one-to-one assignment on a similarity matrix.
//!
//! Implements the O(n³) shortest-augmenting-path algorithm (potentials form
//! of the Hungarian method) on a zero-padded square cost matrix, with costs
//! set to negated similarities so the minimum-cost perfect matching
//! maximizes total similarity.

/// Returns, for each row of `sim`, the column it is assigned to (or `None`
/// when the row is matched to padding, which can only happen on
/// rectangular inputs or zero-similarity ties). `sim` must be rectangular.
pub fn max_similarity_assignment(sim: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = sim.len();
    let cols = sim.first().map(Vec::len).unwrap_or(0);
    if rows == 0 {
        return Vec::new();
    }
    debug_assert!(sim.iter().all(|r| r.len() == cols), "ragged matrix");
    if cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    // Negated similarity, zero-padded to square: padding cells cost 0 and
    // real cells cost ≤ 0, so real matches are never worse than padding.
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -sim[i][j]
        } else {
            0.0
        }
    };

    // 1-indexed potentials; p[j] = row currently assigned to column j.
    const INF: f64 = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
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

    let mut assignment = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            assignment[i - 1] = Some(j - 1);
        }
    }
    assignment
}

/// Total similarity of an assignment (used by optimality tests).
pub fn assignment_total(sim: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| sim[i][j]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute_force_max(sim: &[Vec<f64>]) -> f64 {
        let rows = sim.len();
        let cols = sim.first().map(Vec::len).unwrap_or(0);
        // Enumerate injective maps rows→cols over the smaller side.
        fn recurse(sim: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == sim.len() {
                return 0.0;
            }
            // Option: leave this row unmatched.
            let mut best = recurse(sim, row + 1, used);
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    let total = sim[row][j] + recurse(sim, row + 1, used);
                    used[j] = false;
                    if total > best {
                        best = total;
                    }
                }
            }
            best
        }
        let _ = rows;
        let mut used = vec![false; cols];
        recurse(sim, 0, &mut used)
    }

    #[test]
    fn diagonal_dominant_matrix_assigns_identity() {
        let sim = vec![
            vec![0.9, 0.1, 0.0],
            vec![0.2, 0.8, 0.1],
            vec![0.0, 0.3, 0.7],
        ];
        let a = max_similarity_assignment(&sim);
        assert_eq!(a, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn crossing_pairs_are_resolved_optimally() {
        // Greedy row-wise matching would pick (0,0)=0.9 then (1,1)=0.1
        // for 1.0 total; optimal is (0,1)+(1,0) = 0.8+0.8 = 1.6.
        let sim = vec![vec![0.9, 0.8], vec![0.8, 0.1]];
        let a = max_similarity_assignment(&sim);
        assert_eq!(assignment_total(&sim, &a), 1.6);
    }

    #[test]
    fn rectangular_inputs_leave_extras_unmatched() {
        let sim = vec![vec![0.9, 0.2], vec![0.1, 0.8], vec![0.5, 0.5]];
        let a = max_similarity_assignment(&sim);
        let matched: Vec<usize> = a.iter().flatten().copied().collect();
        assert_eq!(matched.len(), 2); // only two columns exist
        let mut sorted = matched.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 2); // one-to-one
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let rows = rng.gen_range(1..=5);
            let cols = rng.gen_range(1..=5);
            let sim: Vec<Vec<f64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| (rng.gen_range(0..=100) as f64) / 100.0)
                        .collect()
                })
                .collect();
            let a = max_similarity_assignment(&sim);
            let total = assignment_total(&sim, &a);
            let best = brute_force_max(&sim);
            assert!(
                (total - best).abs() < 1e-9,
                "assignment total {total} != brute force {best} for {sim:?}"
            );
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(max_similarity_assignment(&[]).is_empty());
        let no_cols: Vec<Vec<f64>> = vec![vec![], vec![]];
        assert_eq!(max_similarity_assignment(&no_cols), vec![None, None]);
    }
}
