use alloc::vec;
use alloc::vec::Vec;

/// Inverse and determinant of a row-major `n x n` matrix by Gauss-Jordan
/// elimination with partial pivoting. Returns `Err(det)` when
/// `|det| < threshold`.
pub(crate) fn invert(matrix: &[f64], n: usize, threshold: f64) -> Result<(Vec<f64>, f64), f64> {
    debug_assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .unwrap_or(col);
        if a[pivot * n + col] == 0.0 {
            return Err(0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for k in 0..n {
            a[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                a[r * n + k] -= factor * a[col * n + k];
                inv[r * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    if det.abs() < threshold {
        return Err(det);
    }
    Ok((inv, det))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exact() {
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let (inv, det) = invert(&id, 3, 1e-12).unwrap();
        assert_eq!(inv, id);
        assert_eq!(det, 1.0);
    }

    #[test]
    fn needs_pivoting() {
        let m = [0.0, 2.0, 1.0, 0.0];
        let (inv, det) = invert(&m, 2, 1e-12).unwrap();
        assert_eq!(det, -2.0);
        assert_eq!(inv, vec![0.0, 1.0, 0.5, 0.0]);
    }

    #[test]
    fn general_inverse() {
        let m = [4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let (inv, det) = invert(&m, 3, 1e-12).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                let s: f64 = (0..3).map(|j| m[i * 3 + j] * inv[j * 3 + k]).sum();
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-14);
            }
        }
        let expected = 4.0 * (6.0 - 0.04) - 1.0 * (2.0 + 0.1) + 0.5 * (-0.2 - 1.5);
        assert!((det - expected).abs() < 1e-13);
    }

    #[test]
    fn singular_matrices() {
        assert!(invert(&[1.0, 0.0, 0.0, 0.0], 2, 1e-12).is_err());
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2, 1e-12).is_err());
        assert!(invert(&[1e-7, 0.0, 0.0, 1e-7], 2, 1e-12).is_err());
    }
}
