//! Small dense linear algebra over jets, plus f64 helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::{dot, Jet};

pub type JetMatrix = Vec<Vec<Jet>>;

/// Inverse and determinant of a square jet matrix by Gauss–Jordan elimination,
/// pivoting on the constant terms.
pub fn invert(m: &JetMatrix) -> Result<(JetMatrix, Jet)> {
    let n = m.len();
    let mut a: JetMatrix = m.clone();
    let one = m[0][0].constant_like(1.0);
    let zero = m[0][0].constant_like(0.0);
    let mut inv: JetMatrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one.clone() } else { zero.clone() }).collect())
        .collect();
    let mut det = one.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs()))
            .unwrap();
        if a[pivot][col].value() == 0.0 {
            return Err(Error::DegenerateMetric { det: 0.0 });
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        det = &det * &a[col][col];
        let r = a[col][col].recip();
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.coefficients().iter().all(|&c| c == 0.0) {
                continue;
            }
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&f * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&f * &inv[col][j]);
            }
        }
    }
    Ok((inv, det))
}

pub fn matmul(a: &JetMatrix, b: &JetMatrix) -> JetMatrix {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let col: Vec<Jet> = (0..k).map(|l| b[l][j].clone()).collect();
                    dot(&a[i], &col)
                })
                .collect()
        })
        .collect()
}

pub fn values(m: &JetMatrix) -> DMatrix<f64> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    DMatrix::from_fn(rows, cols, |i, j| m[i][j].value())
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn dot_f(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub_f(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;
    use alloc::vec;

    #[test]
    fn inverse_of_jet_matrix_is_inverse_at_every_order() {
        let s = JetSpace::new(2, 3);
        let v = s.variables(&[0.4, 0.9]);
        let m: JetMatrix = vec![
            vec![&v[0] * &v[0] + 2.0, v[0].sin()],
            vec![v[0].sin(), v[1].exp()],
        ];
        let (inv, det) = invert(&m).unwrap();
        let prod = matmul(&m, &inv);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                for (k, c) in prod[i][j].coefficients().iter().enumerate() {
                    let w = if k == 0 { want } else { 0.0 };
                    assert!((c - w).abs() < 1e-12);
                }
            }
        }
        let direct = &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]);
        for (a, b) in det.coefficients().iter().zip(direct.coefficients()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
