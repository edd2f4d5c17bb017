//! Dense linear algebra on small matrices (row-major `Vec<f64>`).

use crate::error::{GhkError, Result};

/// Cholesky factorization A = L·Lᵀ in place (lower triangle). Fails unless A
/// is symmetric positive-definite.
pub fn cholesky(a: &mut [f64], d: usize) -> Result<()> {
    debug_assert_eq!(a.len(), d * d);
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(GhkError::InvalidParameter(
                        "matrix is not positive-definite".into(),
                    ));
                }
                a[i * d + i] = s.sqrt();
            } else {
                a[i * d + j] = s / a[j * d + j];
            }
        }
        for j in (i + 1)..d {
            a[i * d + j] = 0.0;
        }
    }
    Ok(())
}

/// Determinant of an SPD matrix via its Cholesky factor.
pub fn spd_det(a: &[f64], d: usize) -> Result<f64> {
    let mut l = a.to_vec();
    cholesky(&mut l, d)?;
    let mut det = 1.0;
    for i in 0..d {
        det *= l[i * d + i] * l[i * d + i];
    }
    Ok(det)
}

/// Solve A x = b for SPD A.
pub fn spd_solve(a: &[f64], b: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = a.to_vec();
    cholesky(&mut l, d)?;
    // forward: L y = b
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
    // backward: Lᵀ x = y
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    Ok(x)
}

/// Inverse of an SPD matrix.
pub fn spd_inverse(a: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut inv = vec![0.0; d * d];
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let col = spd_solve(a, &e, d)?;
        for i in 0..d {
            inv[i * d + j] = col[i];
        }
    }
    Ok(inv)
}

/// True when A (symmetric) admits a Cholesky factorization.
pub fn is_spd(a: &[f64], d: usize) -> bool {
    let mut l = a.to_vec();
    cholesky(&mut l, d).is_ok()
}

/// Solve a general square system by Gaussian elimination with partial
/// pivoting. Returns None when the matrix is singular to working precision.
pub fn solve_general(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let mut piv = col;
        for r in (col + 1)..d {
            if m[r * d + col].abs() > m[piv * d + col].abs() {
                piv = r;
            }
        }
        if m[piv * d + col].abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for c in 0..d {
                m.swap(col * d + c, piv * d + c);
            }
            rhs.swap(col, piv);
        }
        let diag = m[col * d + col];
        for r in (col + 1)..d {
            let factor = m[r * d + col] / diag;
            if factor != 0.0 {
                for c in col..d {
                    m[r * d + c] -= factor * m[col * d + c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = rhs[i];
        for c in (i + 1)..d {
            s -= m[i * d + c] * x[c];
        }
        x[i] = s / m[i * d + i];
    }
    Some(x)
}

/// Least squares solution of (rows × cols) A x ≈ b via normal equations,
/// optionally with per-row weights. Rank failure returns None.
pub fn weighted_least_squares(
    rows: usize,
    cols: usize,
    a: &[f64],
    b: &[f64],
    w: Option<&[f64]>,
) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), rows * cols);
    let mut ata = vec![0.0; cols * cols];
    let mut atb = vec![0.0; cols];
    for r in 0..rows {
        let wr = w.map_or(1.0, |w| w[r]);
        for i in 0..cols {
            let ai = a[r * cols + i] * wr;
            atb[i] += ai * b[r];
            for j in 0..cols {
                ata[i * cols + j] += ai * a[r * cols + j];
            }
        }
    }
    solve_general(&ata, &atb, cols)
}
