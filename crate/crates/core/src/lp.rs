//! Exact solvers for the small linear programs behind the fairness oracle and
//! the equalized-odds post-processor.
//!
//! Both routines maximize `c·x` subject to `A x <= b`. [`simplex`] additionally
//! assumes `x >= 0` and `b >= 0` (the origin is feasible), which holds for
//! every program built in this crate. [`vertex_enumerate`] makes no sign
//! assumption and is only meant for a handful of variables.

use crate::linalg::solve;

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Dense tableau simplex with Bland's rule. `a` is row-major `m x n`.
///
/// Returns `None` if the program is unbounded.
pub fn simplex(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<LpSolution> {
    let n = c.len();
    let m = a.len();
    assert!(b.iter().all(|&v| v >= 0.0), "simplex requires b >= 0");
    let width = n + m + 1;
    // Rows 0..m are constraints, row m is the objective (reduced costs).
    let mut t = vec![0.0; (m + 1) * width];
    for (i, row) in a.iter().enumerate() {
        t[i * width..i * width + n].copy_from_slice(row);
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    for j in 0..n {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        let Some(enter) = (0..n + m).find(|&j| t[m * width + j] < -TOL) else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[i * width + enter];
            if coef > TOL {
                let ratio = t[i * width + width - 1] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, r)) if ratio < r - TOL || (ratio <= r + TOL && basis[i] < basis[l]) => Some((i, ratio)),
                    keep => keep,
                };
            }
        }
        let (row, _) = leave?;
        pivot(&mut t, width, m, row, enter);
        basis[row] = enter;
    }

    let mut x = vec![0.0; n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[i * width + width - 1];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Some(LpSolution { x, objective })
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for k in 0..width {
        t[row * width + k] /= p;
    }
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for k in 0..width {
                t[i * width + k] -= f * t[row * width + k];
            }
        }
    }
}

/// Enumerates every basic solution (one per `n`-subset of tight constraints)
/// and returns the best feasible one. Among vertices within `1e-12` of the
/// best objective, the one minimizing `tie·x` wins, then enumeration order.
///
/// Returns `None` when no vertex is feasible (empty or vertex-free polyhedron).
pub fn vertex_enumerate(c: &[f64], a: &[Vec<f64>], b: &[f64], tie: Option<&[f64]>) -> Option<LpSolution> {
    let n = c.len();
    let m = a.len();
    let feas_tol = 1e-10;
    let mut best: Option<(LpSolution, f64)> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    if n > m {
        return None;
    }
    loop {
        let mat: Vec<f64> = subset.iter().flat_map(|&r| a[r].iter().copied()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&r| b[r]).collect();
        if let Some(x) = solve(mat, rhs) {
            let feasible =
                a.iter().zip(b).all(|(row, &bi)| row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>() <= bi + feas_tol);
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
                let sec: f64 = tie.map_or(0.0, |t| t.iter().zip(&x).map(|(ti, xi)| ti * xi).sum());
                let better = match &best {
                    None => true,
                    Some((s, bsec)) => obj > s.objective + TOL || (obj >= s.objective - TOL && sec < bsec - TOL),
                };
                if better {
                    best = Some((LpSolution { x, objective: obj }, sec));
                }
            }
        }
        if !next_combination(&mut subset, m) {
            break;
        }
    }
    best.map(|(s, _)| s)
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
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
    use proptest::prelude::*;

    fn with_box(a: &[Vec<f64>], b: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = a.to_vec();
        let mut rhs = b.to_vec();
        for j in 0..n {
            let mut lo = vec![0.0; n];
            lo[j] = -1.0;
            rows.push(lo);
            rhs.push(0.0);
        }
        (rows, rhs)
    }

    #[test]
    fn textbook_program() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let b = vec![4.0, 12.0, 18.0];
        let s = simplex(&[3.0, 5.0], &a, &b).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        let (rows, rhs) = with_box(&a, &b, 2);
        let v = vertex_enumerate(&[3.0, 5.0], &rows, &rhs, None).unwrap();
        assert!((v.objective - 36.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        assert!(simplex(&[1.0], &[vec![-1.0]], &[1.0]).is_none());
    }

    #[test]
    fn tie_break_prefers_small_secondary() {
        // max x + y on the unit box with x + y <= 1: every point of the edge ties.
        let a = vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let (rows, rhs) = with_box(&a, &[1.0, 1.0, 1.0], 2);
        let s = vertex_enumerate(&[1.0, 1.0], &rows, &rhs, Some(&[1.0, 0.0])).unwrap();
        assert_eq!(s.x, vec![0.0, 1.0]);
    }

    proptest! {
        // Simplex and vertex enumeration agree on random box-constrained programs.
        #[test]
        fn simplex_matches_vertex_enumeration(
            c in proptest::collection::vec(-1.0f64..1.0, 3),
            extra in proptest::collection::vec((proptest::collection::vec(-1.0f64..1.0, 3), 0.0f64..1.0), 0..4),
        ) {
            let mut a: Vec<Vec<f64>> = (0..3).map(|j| { let mut r = vec![0.0; 3]; r[j] = 1.0; r }).collect();
            let mut b = vec![1.0; 3];
            for (row, rhs) in extra { a.push(row); b.push(rhs); }
            let s = simplex(&c, &a, &b).unwrap();
            let (rows, rhs) = with_box(&a, &b, 3);
            let v = vertex_enumerate(&c, &rows, &rhs, None).unwrap();
            prop_assert!((s.objective - v.objective).abs() < 1e-9, "{} vs {}", s.objective, v.objective);
        }
    }
}
