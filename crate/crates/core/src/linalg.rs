//! Small dense linear algebra on row-major `n × n` matrices stored in a `Vec<f64>`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, cos, dot, norm, sin, sqrt};

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

pub fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

pub fn mat_vec(a: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    mat_vec_into(a, v, n, &mut out);
    out
}

#[inline]
pub fn mat_vec_into(a: &[f64], v: &[f64], n: usize, out: &mut [f64]) {
    for i in 0..n {
        out[i] = dot(&a[i * n..(i + 1) * n], v);
    }
}

/// `max |(AᵀA − I)_{ij}| ≤ tol`.
pub fn is_orthogonal(a: &[f64], n: usize, tol: f64) -> bool {
    if a.len() != n * n {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[k * n + i] * a[k * n + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            if abs(s - target) > tol {
                return false;
            }
        }
    }
    true
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if abs(m[r * n + col]) > abs(m[piv * n + col]) {
                piv = r;
            }
        }
        if m[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
        }
    }
    det
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if abs(m[r * n + col]) > abs(m[piv * n + col]) {
                piv = r;
            }
        }
        if abs(m[piv * n + col]) < 1e-300 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Rotation by `theta` in the `(i, j)` coordinate plane.
pub fn givens(n: usize, i: usize, j: usize, theta: f64) -> Vec<f64> {
    let mut g = identity(n);
    let (c, s) = (cos(theta), sin(theta));
    g[i * n + i] = c;
    g[j * n + j] = c;
    g[i * n + j] = -s;
    g[j * n + i] = s;
    g
}

pub fn rotation_2d(theta: f64) -> Vec<f64> {
    givens(2, 0, 1, theta)
}

/// `R_z(a) R_y(b) R_z(g)`.
pub fn euler_zyz(a: f64, b: f64, g: f64) -> Vec<f64> {
    let rz1 = givens(3, 0, 1, a);
    let ry = givens(3, 2, 0, b);
    let rz2 = givens(3, 0, 1, g);
    mat_mul(&mat_mul(&rz1, &ry, 3), &rz2, 3)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of a row-major matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if abs(apq) < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new_col] = v[k * n + old_col];
        }
    }
    (values, vectors)
}

/// Column `j` of a row-major matrix.
pub fn column(a: &[f64], n: usize, j: usize) -> Vec<f64> {
    (0..n).map(|k| a[k * n + j]).collect()
}

pub fn is_orthonormal_basis(basis: &[Vec<f64>], tol: f64) -> bool {
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            if abs(dot(u, v) - target) > tol {
                return false;
            }
        }
    }
    true
}

/// Extends an orthonormal family to an orthonormal frame of ℝⁿ, returned as
/// the columns of a row-major matrix (the given vectors first).
pub fn complete_frame(basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = basis.to_vec();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let p = dot(&v, c);
                for k in 0..n {
                    v[k] -= p * c[k];
                }
            }
        }
        let len = norm(&v);
        if len > 1e-6 {
            for x in &mut v {
                *x /= len;
            }
            cols.push(v);
        }
    }
    let mut frame = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for k in 0..n {
            frame[k * n + j] = c[k];
        }
    }
    frame
}
