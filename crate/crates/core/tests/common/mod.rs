//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

/// `(i_min, j_min, d_min, k1, k2, l, f_video)`.
pub type RunFields = (usize, usize, f64, usize, usize, usize, f64);

/// Scans every off-band cell of a square matrix for the minimum (ties by
/// row, then column), then tries every `(k1, k2)` and keeps the largest
/// `k1`, then the largest `k2`, whose steps all stay within `eps`.
pub fn brute_force_run(m: &[Vec<f64>], eps: f64, near_band: usize, d_floor: f64) -> Option<RunFields> {
    let n = m.len();
    let mut cells: Vec<(f64, usize, usize)> = Vec::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if j > i + near_band {
                cells.push((d, i, j));
            }
        }
    }
    let &(d, i, j) = cells
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))?;
    let gap = j - i;
    let mut best = (0, 0);
    for k1 in 0..=i {
        for k2 in 0..n - j {
            if k1 + k2 >= gap {
                continue;
            }
            let back = (1..=k1).all(|s| (m[i - s][j - s] - d).abs() <= eps);
            let fwd = (1..=k2).all(|s| (m[i + s][j + s] - d).abs() <= eps);
            if back && fwd && (k1, k2) > best {
                best = (k1, k2);
            }
        }
    }
    let (k1, k2) = best;
    let l = k1 + k2 + 1;
    let d_used = if d == 0.0 { d_floor } else { d };
    Some((i, j, d, k1, k2, l, -d_used / (l as f64 * gap as f64)))
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn pair_count_auc(items: &[(f64, bool)]) -> f64 {
    let (mut twice_wins, mut pairs) = (0u64, 0u64);
    for &(p, _) in items.iter().filter(|x| x.1) {
        for &(q, _) in items.iter().filter(|x| !x.1) {
            pairs += 1;
            twice_wins += if p > q {
                2
            } else if p == q {
                1
            } else {
                0
            };
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}
