//! Thin SVD of the forward matrix, truncated pseudo-inverses, the orthogonal
//! projection onto the complement of the null space and the diagonal weights
//! derived from it.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-8;

/// Thin SVD `A = U diag(s) V^T` with singular values sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    singular_values: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    rank: usize,
    rank_tol: f64,
    reconstruction_error: f64,
}

pub fn decompose(a: &DMatrix<f64>, rank_tol: f64) -> Result<SpectralModel> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let (u, singular_values, v) = thin_svd(a)?;

    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values.iter().filter(|&&s| s > rank_tol * sigma_max).count();

    let recon = &u * DMatrix::from_diagonal(&DVector::from_vec(singular_values.clone())) * v.transpose();
    let reconstruction_error = (a - recon).norm();

    Ok(SpectralModel {
        singular_values,
        u,
        v,
        rank,
        rank_tol,
        reconstruction_error,
    })
}

/// Thin SVD `(U, s, V)` with `s` nonincreasing. Computed with faer, which
/// stays accurate on clustered singular values.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let mat = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = mat
        .thin_svd()
        .map_err(|_| Error::Argument("SVD did not converge".into()))?;
    let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
    let s: Vec<f64> = (0..fs.nrows()).map(|i| fs[i]).collect();
    let u = DMatrix::from_fn(fu.nrows(), fu.ncols(), |i, j| fu[(i, j)]);
    let v = DMatrix::from_fn(fv.nrows(), fv.ncols(), |i, j| fv[(i, j)]);
    Ok((u, s, v))
}

/// Singular values, nonincreasing; empty if the SVD fails.
pub fn singular_values_of(a: &DMatrix<f64>) -> Vec<f64> {
    thin_svd(a).map(|(_, s, _)| s).unwrap_or_default()
}

impl SpectralModel {
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Number of singular values above `rank_tol * sigma_max`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Frobenius norm of `A - U S V^T`.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruction_error
    }

    pub fn left_vectors(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn right_vectors(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.rank {
            Err(Error::Truncation { k, rank: self.rank })
        } else {
            Ok(())
        }
    }

    /// Leading `k` right singular vectors, `n x k`.
    pub fn range_basis(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_level(k)?;
        Ok(self.v.columns(0, k).into_owned())
    }

    /// `A_k^+ B = sum_{i<k} v_i (u_i^T B) / s_i`; `B` may have several columns.
    pub fn apply_pinv(&self, k: usize, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_level(k)?;
        if b.nrows() != self.m() {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {}",
                b.nrows(),
                self.m()
            )));
        }
        let mut coeff = self.u.columns(0, k).transpose() * b;
        for (i, mut row) in coeff.row_iter_mut().enumerate() {
            row /= self.singular_values[i];
        }
        Ok(self.v.columns(0, k) * coeff)
    }

    pub fn apply_pinv_vec(&self, k: usize, b: &[f64]) -> Result<Vec<f64>> {
        let out = self.apply_pinv(k, &DMatrix::from_column_slice(b.len(), 1, b))?;
        Ok(out.iter().copied().collect())
    }

    /// Operator norm of `A_k^+`, i.e. `1 / s_k`.
    pub fn pinv_norm(&self, k: usize) -> Result<f64> {
        self.check_level(k)?;
        Ok(1.0 / self.singular_values[k - 1])
    }

    /// `P_k = V_k V_k^T`, the orthogonal projection onto the span of the
    /// leading `k` right singular vectors. With `k = rank` this is `A^+ A`.
    pub fn projection(&self, k: usize) -> Result<DMatrix<f64>> {
        let vk = self.range_basis(k)?;
        Ok(&vk * vk.transpose())
    }

    /// `(index, value)` rows, one per singular value.
    pub fn singular_values_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, s) in self.singular_values.iter().enumerate() {
            let _ = writeln!(out, "{},{:e}", i + 1, s);
        }
        out
    }
}

/// Diagonal weights `w_i = ||P e_i||_2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightMatrix {
    pub w: Vec<f64>,
    pub floor_tol: f64,
}

impl WeightMatrix {
    /// Unit weights, used for the unweighted baseline.
    pub fn identity(n: usize) -> Self {
        WeightMatrix {
            w: vec![1.0; n],
            floor_tol: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `||W x||_1`
    pub fn l1(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.w).map(|(a, w)| (a * w).abs()).sum()
    }

    /// `||W x||_2`
    pub fn norm(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.w).map(|(a, w)| (a * w).powi(2)).sum::<f64>().sqrt()
    }
}

/// Largest entrywise deviation of `P` from symmetry and idempotence.
pub fn projection_defect(p: &DMatrix<f64>) -> f64 {
    let sym = (p - p.transpose()).amax();
    let idem = (p * p - p).amax();
    sym.max(idem)
}

pub fn weight_matrix(p: &DMatrix<f64>, floor_tol: f64) -> Result<WeightMatrix> {
    if !p.is_square() {
        return Err(Error::Dimension("projection must be square".into()));
    }
    let defect = projection_defect(p);
    if !(defect <= 1e-8) {
        return Err(Error::NotProjection(defect));
    }
    let w: Vec<f64> = p.column_iter().map(|c| c.norm()).collect();
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, &v)| !(v >= floor_tol)) {
        return Err(Error::NullBasisVector {
            index,
            value,
            floor: floor_tol,
        });
    }
    Ok(WeightMatrix { w, floor_tol })
}

/// Weights straight from the factor `V_k`: `||P e_i|| = ||V_k^T e_i||`.
pub fn weights_from_basis(vk: &DMatrix<f64>, floor_tol: f64) -> Result<WeightMatrix> {
    let w: Vec<f64> = vk.row_iter().map(|r| r.norm()).collect();
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, &v)| !(v >= floor_tol)) {
        return Err(Error::NullBasisVector {
            index,
            value,
            floor: floor_tol,
        });
    }
    Ok(WeightMatrix { w, floor_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_by_three() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0])
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = decompose(&DMatrix::identity(3, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank(), 3);
        for v in s.singular_values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let p = s.projection(3).unwrap();
        assert_abs_diff_eq!(p, DMatrix::identity(3, 3), epsilon = 1e-14);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        assert_abs_diff_eq!(s.apply_pinv(3, &b).unwrap(), b, epsilon = 1e-14);
    }

    #[test]
    fn two_by_three_singular_values() {
        // Gram matrix [[2,1],[1,2]] has eigenvalues 3 and 1.
        let s = decompose(&two_by_three(), DEFAULT_RANK_TOL).unwrap();
        assert_abs_diff_eq!(s.singular_values()[0], 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.singular_values()[1], 1.0, epsilon = 1e-14);
        assert!(s.reconstruction_error() <= 1e-10 * s.sigma_max());
    }

    #[test]
    fn two_by_three_projection_and_weights() {
        let s = decompose(&two_by_three(), DEFAULT_RANK_TOL).unwrap();
        let p = s.projection(2).unwrap();
        let null = DVector::from_vec(vec![1.0, 1.0, -1.0]);
        let expected = DMatrix::identity(3, 3) - &null * null.transpose() / 3.0;
        assert_abs_diff_eq!(p, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(p.trace(), 2.0, epsilon = 1e-14);
        let w = weight_matrix(&p, DEFAULT_WEIGHT_FLOOR).unwrap();
        for wi in &w.w {
            assert_abs_diff_eq!(*wi, 6f64.sqrt() / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pinv_matches_normal_equations() {
        let a = two_by_three();
        let s = decompose(&a, DEFAULT_RANK_TOL).unwrap();
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        // Minimum-norm solution A^T (A A^T)^{-1} b.
        let gram = &a * a.transpose();
        let oracle = a.transpose() * gram.try_inverse().unwrap() * &b;
        let x = s.apply_pinv(2, &b).unwrap();
        assert_abs_diff_eq!(x, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(x[(2, 0)], 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn truncation_annihilates_trailing_directions() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let s = decompose(&a, DEFAULT_RANK_TOL).unwrap();
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 5.0]);
        assert_abs_diff_eq!(s.apply_pinv(2, &b).unwrap().norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(s.apply_pinv(4, &b), Err(Error::Truncation { .. })));
        assert!(matches!(s.projection(0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn rank_excludes_numerical_zeros() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-13]);
        let s = decompose(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank(), 1);
        assert!(matches!(
            s.apply_pinv(2, &DMatrix::zeros(2, 1)),
            Err(Error::Truncation { k: 2, rank: 1 })
        ));
    }

    #[test]
    fn null_basis_vector_is_rejected() {
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        match weight_matrix(&p, DEFAULT_WEIGHT_FLOOR) {
            Err(Error::NullBasisVector { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            weight_matrix(&DMatrix::identity(4, 4), 1e-8).unwrap(),
            WeightMatrix {
                w: vec![1.0; 4],
                floor_tol: 1e-8
            }
        );
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(decompose(&a, DEFAULT_RANK_TOL), Err(Error::NonFinite)));
    }

    #[test]
    fn non_projection_is_rejected() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(weight_matrix(&p, 1e-8), Err(Error::NotProjection(_))));
    }
}
