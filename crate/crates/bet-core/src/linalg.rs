//! Small dense matrix kernels for chart-sized problems (n <= 5 or so).
//!
//! Matrices are row-major `Vec<f64>` slices of length `n*n`. The solvers are
//! deliberately simple: partial-pivot Gauss-Jordan for inverses, LU for
//! determinants, cyclic Jacobi for symmetric eigenvalues, and a Cholesky
//! reduction for the generalized symmetric problem `A v = lambda B v` with
//! `B` positive definite.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

/// Flat index into a row-major `n x n` matrix.
#[inline]
pub fn at(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// Largest absolute entry of `m - m^T`.
pub fn max_asymmetry(m: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[at(n, i, j)] - m[at(n, j, i)]).abs());
        }
    }
    worst
}

/// Replace `m` by its symmetric part.
pub fn symmetrize(m: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[at(n, i, j)] + m[at(n, j, i)]);
            m[at(n, i, j)] = s;
            m[at(n, j, i)] = s;
        }
    }
}

/// Matrix-vector product.
pub fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += m[at(n, i, j)] * v[j];
        }
        out[i] = acc;
    }
    out
}

/// `v^T m w` for an `n x n` matrix.
pub fn quadratic_form(m: &[f64], v: &[f64], w: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += v[i] * m[at(n, i, j)] * w[j];
        }
    }
    acc
}

/// Determinant by LU with partial pivoting. Returns 0 for a numerically
/// singular matrix.
pub fn det(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut sign = 1.0;
    let mut d = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[at(n, r, col)].abs() > a[at(n, piv, col)].abs() {
                piv = r;
            }
        }
        if a[at(n, piv, col)] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                a.swap(at(n, piv, j), at(n, col, j));
            }
            sign = -sign;
        }
        d *= a[at(n, col, col)];
        for r in (col + 1)..n {
            let f = a[at(n, r, col)] / a[at(n, col, col)];
            for j in col..n {
                a[at(n, r, j)] -= f * a[at(n, col, j)];
            }
        }
    }
    sign * d
}

/// Inverse by Gauss-Jordan with partial pivoting. `None` if the pivot falls
/// below `1e-14` times the largest entry.
pub fn invert(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1.0);
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[at(n, i, i)] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[at(n, r, col)].abs() > a[at(n, piv, col)].abs() {
                piv = r;
            }
        }
        if a[at(n, piv, col)].abs() < 1e-14 * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(at(n, piv, j), at(n, col, j));
                inv.swap(at(n, piv, j), at(n, col, j));
            }
        }
        let p = a[at(n, col, col)];
        for j in 0..n {
            a[at(n, col, j)] /= p;
            inv[at(n, col, j)] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[at(n, r, col)];
            if f != 0.0 {
                for j in 0..n {
                    a[at(n, r, j)] -= f * a[at(n, col, j)];
                    inv[at(n, r, j)] -= f * inv[at(n, col, j)];
                }
            }
        }
    }
    Some(inv)
}

/// Cholesky factor `L` (lower triangular, `m = L L^T`) of a symmetric
/// positive-definite matrix. `None` if a pivot is not strictly positive.
pub fn cholesky(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[at(n, i, j)];
            for k in 0..j {
                s -= l[at(n, i, k)] * l[at(n, j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[at(n, i, i)] = s.sqrt();
            } else {
                l[at(n, i, j)] = s / l[at(n, j, j)];
            }
        }
    }
    Some(l)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
pub fn sym_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![m[0]];
    }
    let mut a = m.to_vec();
    symmetrize(&mut a, n);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[at(n, i, j)] * a[at(n, i, j)];
            }
        }
        let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1.0);
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[at(n, p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[at(n, p, p)];
                let aqq = a[at(n, q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[at(n, k, p)];
                    let akq = a[at(n, k, q)];
                    a[at(n, k, p)] = c * akp - s * akq;
                    a[at(n, k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[at(n, p, k)];
                    let aqk = a[at(n, q, k)];
                    a[at(n, p, k)] = c * apk - s * aqk;
                    a[at(n, q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[at(n, i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    ev
}

/// Solve `L x = b` for lower-triangular `L`.
fn forward_sub(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let f = l[at(n, i, k)];
            x[i] -= f * x[k];
        }
        x[i] /= l[at(n, i, i)];
    }
    x
}

/// Eigenvalues (ascending) of the generalized problem `A v = lambda B v`
/// with symmetric `A` and symmetric positive-definite `B`, via the Cholesky
/// reduction `C = L^{-1} A L^{-T}`. `None` if `B` is not positive definite.
pub fn generalized_sym_eigenvalues(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let l = cholesky(b, n)?;
    // C = L^{-1} A L^{-T}: first W = L^{-1} A (solve column-wise), then
    // C = L^{-1} W^T (W^T has columns L^{-1}-solved again).
    let mut w = vec![0.0; n * n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| a[at(n, i, j)]).collect();
        let x = forward_sub(&l, &col, n);
        for i in 0..n {
            w[at(n, i, j)] = x[i];
        }
    }
    let mut c = vec![0.0; n * n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| w[at(n, j, i)]).collect();
        let x = forward_sub(&l, &col, n);
        for i in 0..n {
            c[at(n, i, j)] = x[i];
        }
    }
    symmetrize(&mut c, n);
    Some(sym_eigenvalues(&c, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn det_and_inverse_2x2() {
        let m = [2.0, 1.0, 1.0, 3.0];
        assert_relative_eq!(det(&m, 2), 5.0, max_relative = 1e-14);
        let inv = invert(&m, 2).unwrap();
        assert_relative_eq!(inv[0], 0.6, max_relative = 1e-14);
        assert_relative_eq!(inv[1], -0.2, max_relative = 1e-14);
        assert_relative_eq!(inv[3], 0.4, max_relative = 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = [1.0, 2.0, 2.0, 4.0];
        assert!(invert(&m, 2).is_none());
        assert_eq!(det(&m, 2), 0.0);
    }

    #[test]
    fn jacobi_matches_closed_form_eigenvalues() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let ev = sym_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert_relative_eq!(ev[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(ev[1], 3.0, max_relative = 1e-12);
        // 3x3 with known spectrum {0, 1, 3}: diag plus coupling
        let m = [
            1.0, -1.0, 0.0, //
            -1.0, 2.0, -1.0, //
            0.0, -1.0, 1.0,
        ];
        let ev = sym_eigenvalues(&m, 3);
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(ev[2], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn generalized_problem_reduces_to_standard_for_identity() {
        let a = [2.0, 1.0, 1.0, 2.0];
        let b = [1.0, 0.0, 0.0, 1.0];
        let ev = generalized_sym_eigenvalues(&a, &b, 2).unwrap();
        assert_relative_eq!(ev[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(ev[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn generalized_problem_scales_with_metric() {
        // A = 2 B  =>  both eigenvalues exactly 2, any PD B.
        let b = [3.0, 1.0, 1.0, 2.0];
        let a = [6.0, 2.0, 2.0, 4.0];
        let ev = generalized_sym_eigenvalues(&a, &b, 2).unwrap();
        assert_relative_eq!(ev[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(ev[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}
