//! Dense linear solve for the Newton systems; sizes stay in the dozens.

/// Solves `a x = b` by Gaussian elimination with partial pivoting (an
/// in-place LU factorization applied to one right-hand side). Returns `None`
/// when a pivot column has no entry meaningfully above rounding noise for the
/// matrix scale, which is how singular Jacobians surface.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |m, &v| m.max(v.abs()));
    let cutoff = f64::EPSILON * scale.max(1.0) * n as f64;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() <= cutoff {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col + 1..n {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }

    for col in (0..n).rev() {
        let mut sum = b[col];
        for j in col + 1..n {
            sum -= a[col][j] * b[j];
        }
        b[col] = sum / a[col][col];
    }
    Some(b)
}
