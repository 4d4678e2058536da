//! Small dense linear algebra: eigenvalues, closed-form 2×2 spectra and additive compounds.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a square matrix through a real Schur decomposition (Francis QR).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::InvalidInput("QR iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Both eigenvalues of a 2×2 matrix from the characteristic polynomial.
pub fn eig2(m: &Matrix2<f64>) -> [Complex64; 2] {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_trace = 0.5 * (a + d);
    // (a - d)^2 / 4 + bc avoids the cancellation of trace^2 / 4 - det.
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        let root = disc.sqrt();
        [
            Complex64::new(half_trace + root, 0.0),
            Complex64::new(half_trace - root, 0.0),
        ]
    } else {
        let root = (-disc).sqrt();
        [
            Complex64::new(half_trace, root),
            Complex64::new(half_trace, -root),
        ]
    }
}

pub fn spectral_radius2(m: &Matrix2<f64>) -> f64 {
    let [l1, l2] = eig2(m);
    l1.norm().max(l2.norm())
}

/// Strictly increasing `k`-subsets of `0..n` in lexicographic order.
pub fn index_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// The `k`-th additive compound of an `n×n` matrix, of size `C(n,k)×C(n,k)`.
///
/// Rows and columns are indexed by `k`-subsets in lexicographic order. A diagonal entry is
/// the sum of the selected diagonal entries; an off-diagonal entry whose index sets differ
/// in a single element (`i_r` in the row set, `j_s` in the column set) is
/// `(-1)^(r+s) m[i_r, j_s]`; every other entry is zero.
pub fn additive_compound(m: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if !m.is_square() || k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "additive compound of order {k} for a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let sets = index_sets(n, k);
    let dim = sets.len();
    let mut out = DMatrix::zeros(dim, dim);
    for (row, rs) in sets.iter().enumerate() {
        for (col, cs) in sets.iter().enumerate() {
            if row == col {
                out[(row, col)] = rs.iter().map(|&i| m[(i, i)]).sum();
                continue;
            }
            let mut only_row = (0..k).filter(|&p| !cs.contains(&rs[p]));
            let (Some(r), None) = (only_row.next(), only_row.next()) else {
                continue;
            };
            let s = (0..k)
                .find(|&p| !rs.contains(&cs[p]))
                .expect("sets of equal size differing in one element");
            let sign = if (r + s) % 2 == 0 { 1.0 } else { -1.0 };
            out[(row, col)] = sign * m[(rs[r], cs[s])];
        }
    }
    Ok(out)
}
