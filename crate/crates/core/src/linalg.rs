//! Dense helpers for the small systems that show up in ridge fits and LP
//! vertex solves.

/// Solves `a x = b` for square row-major `a` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `1e-12` relative
/// to the largest entry.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - tail) / a[r * n + r];
    }
    Some(x)
}

/// Ridge regression with an unpenalized intercept. `rows` are the design
/// rows (without intercept). Returns `(intercept, coefficients)`.
pub fn ridge(rows: &[Vec<f64>], target: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 {
        return (0.0, vec![0.0; p]);
    }
    let mean_y = target.iter().sum::<f64>() / n as f64;
    let mut mean_x = vec![0.0; p];
    for r in rows {
        for (m, v) in mean_x.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for (r, &y) in rows.iter().zip(target) {
        for a in 0..p {
            let ca = r[a] - mean_x[a];
            rhs[a] += ca * (y - mean_y);
            for b in a..p {
                gram[a * p + b] += ca * (r[b] - mean_x[b]);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
        gram[a * p + a] += lambda.max(1e-12);
    }
    let beta = solve(gram, rhs).unwrap_or_else(|| vec![0.0; p]);
    let intercept = mean_y - beta.iter().zip(&mean_x).map(|(b, m)| b * m).sum::<f64>();
    (intercept, beta)
}
