//! Dense real square matrices.
//!
//! Small-dimension arithmetic plus the numerically delicate pieces the rest of
//! the crate leans on: a one-sided Jacobi SVD, tolerance-relative rank, and
//! orthonormal bases for image and kernel.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::svd::jacobi_svd;

/// Relative threshold below which a singular value counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Relative threshold used by [`Mat::try_inverse`] callers that have no better choice.
pub const DEFAULT_INV_TOL: f64 = 1e-12;

/// Default ceiling on matrix dimension.
pub const DEFAULT_MAX_DIM: usize = 16;

/// A `d x d` real matrix stored row-major. Entries are finite at construction.
#[derive(Clone, PartialEq)]
pub struct Mat {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Mat {
    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Spec("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimMismatch { expected: dim * dim, got: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite entry at ({}, {})",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Mat { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Mat::new(dim, data)
    }

    /// Matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(dim: usize, cols: &[Vec<f64>]) -> Result<Self> {
        if cols.len() != dim {
            return Err(Error::DimMismatch { expected: dim, got: cols.len() });
        }
        let mut m = Mat::zeros(dim);
        for (j, c) in cols.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: c.len() });
            }
            for (i, &x) in c.iter().enumerate() {
                m.data[i * dim + j] = x;
            }
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn zeros(dim: usize) -> Self {
        Mat { dim, data: vec![0.0; dim * dim] }
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Mat::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    /// `diag(Id_rank, 0)` when `upper`, `diag(0, Id_{dim-rank})` otherwise.
    pub fn block_projector(dim: usize, rank: usize, upper: bool) -> Self {
        let v: Vec<f64> = (0..dim)
            .map(|i| if (i < rank) == upper { 1.0 } else { 0.0 })
            .collect();
        Mat::diag(&v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let d = self.dim;
        let mut t = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.data[j * d + i] = self.data[i * d + j];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn check_dim(&self, other: &Mat) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimMismatch { expected: self.dim, got: other.dim })
        }
    }

    pub fn try_mul(&self, other: &Mat) -> Result<Mat> {
        self.check_dim(other)?;
        Ok(self * other)
    }

    pub fn try_add(&self, other: &Mat) -> Result<Mat> {
        self.check_dim(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Mat) -> Result<Mat> {
        self.check_dim(other)?;
        Ok(self - other)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Singular value decomposition `self = U diag(sigma) V^T`.
    pub fn svd(&self) -> Svd {
        jacobi_svd(self, true)
    }

    /// Singular values only, in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        jacobi_svd(self, false).sigma
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.data.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        if self.dim == 1 {
            return self.data[0].abs();
        }
        self.singular_values()[0]
    }

    /// Spectral norm of `self - other`.
    pub fn dist(&self, other: &Mat) -> f64 {
        (self - other).op_norm()
    }

    /// Number of singular values above `tol_rel * sigma_max`.
    pub fn rank_eps(&self, tol_rel: f64) -> usize {
        self.rank_info(tol_rel).rank
    }

    pub fn rank_info(&self, tol_rel: f64) -> RankInfo {
        RankInfo::from_singular_values(&self.singular_values(), tol_rel)
    }

    /// Inverse via partially pivoted LU; `Singular` when `sigma_min < tol * sigma_max`.
    pub fn try_inverse(&self, tol: f64) -> Result<Mat> {
        let sigma = self.singular_values();
        let (smax, smin) = (sigma[0], *sigma.last().unwrap());
        if smax == 0.0 || smin < tol * smax {
            return Err(Error::Singular { sigma_min: smin, sigma_max: smax });
        }
        Ok(lu_inverse(self))
    }

    /// Orthonormal basis of the image: the leading left singular vectors.
    pub fn image_basis(&self, tol_rel: f64) -> SubspaceBasis {
        let svd = self.svd();
        let r = RankInfo::from_singular_values(&svd.sigma, tol_rel).rank;
        SubspaceBasis::from_columns(self.dim, (0..r).map(|j| svd.u.column(j)).collect(), tol_rel)
    }

    /// Orthonormal basis of the kernel: the trailing right singular vectors.
    pub fn kernel_basis(&self, tol_rel: f64) -> SubspaceBasis {
        let svd = self.svd();
        let r = RankInfo::from_singular_values(&svd.sigma, tol_rel).rank;
        SubspaceBasis::from_columns(self.dim, (r..self.dim).map(|j| svd.v.column(j)).collect(), tol_rel)
    }

    /// Returns whether `self^2 = self` within `tol`, and the residual `||self^2 - self||`.
    pub fn is_idempotent(&self, tol: f64) -> (bool, f64) {
        let r = (self * self).dist(self);
        (r <= tol, r)
    }
}

/// Rank decision together with the singular values bracketing the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub threshold: f64,
    /// Smallest singular value counted as nonzero (`None` for rank 0).
    pub last_kept: Option<f64>,
    /// Largest singular value counted as zero (`None` for full rank).
    pub first_dropped: Option<f64>,
}

impl RankInfo {
    pub fn from_singular_values(sigma: &[f64], tol_rel: f64) -> Self {
        let smax = sigma.first().copied().unwrap_or(0.0);
        let threshold = tol_rel * smax;
        let rank = if smax == 0.0 { 0 } else { sigma.iter().filter(|&&s| s > threshold).count() };
        RankInfo {
            rank,
            threshold,
            last_kept: rank.checked_sub(1).map(|i| sigma[i]),
            first_dropped: sigma.get(rank).copied(),
        }
    }

    /// True when a singular value sits within a factor `margin` of the threshold.
    pub fn is_borderline(&self, margin: f64) -> bool {
        if self.threshold == 0.0 {
            return false;
        }
        let kept_close = self.last_kept.is_some_and(|s| s < margin * self.threshold);
        let dropped_close = self.first_dropped.is_some_and(|s| s * margin > self.threshold);
        kept_close || dropped_close
    }
}

/// Singular value decomposition of a square matrix.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn reconstruct(&self) -> Mat {
        let d = self.u.dim();
        let mut us = self.u.clone();
        for i in 0..d {
            for j in 0..d {
                us.set(i, j, us.get(i, j) * self.sigma[j]);
            }
        }
        &us * &self.v.transpose()
    }
}

/// Orthonormal columns spanning a subspace of `R^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    dim: usize,
    columns: Vec<Vec<f64>>,
    tolerance: f64,
}

impl SubspaceBasis {
    /// Wraps orthonormal columns, flipping each so its first entry of
    /// magnitude above `1e-12` is positive.
    pub fn from_columns(dim: usize, columns: Vec<Vec<f64>>, tolerance: f64) -> Self {
        let columns = columns.into_iter().map(canonical_sign).collect();
        SubspaceBasis { dim, columns, tolerance }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Largest entry of `|columns^T columns - Id_r|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max_j ||a * column_j||`.
    pub fn image_norm_under(&self, a: &Mat) -> f64 {
        self.columns
            .iter()
            .map(|c| a.mul_vec(c).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

/// True iff `a` and `b` have the same numeric rank and each annihilates the
/// other's kernel basis up to `tol` relative to its own norm.
pub fn same_kernel(a: &Mat, b: &Mat, tol: f64) -> bool {
    same_kernel_residual(a, b, DEFAULT_RANK_TOL).is_some_and(|r| r <= tol)
}

/// `max(||a K_b|| / ||a||, ||b K_a|| / ||b||)` when the numeric ranks agree, `None` otherwise.
pub fn same_kernel_residual(a: &Mat, b: &Mat, tol_rel: f64) -> Option<f64> {
    let (ka, kb) = (a.kernel_basis(tol_rel), b.kernel_basis(tol_rel));
    if ka.rank() != kb.rank() {
        return None;
    }
    let rel = |m: &Mat, k: &SubspaceBasis| {
        let n = m.op_norm();
        if n == 0.0 {
            0.0
        } else {
            k.image_norm_under(m) / n
        }
    };
    Some(rel(a, &kb).max(rel(b, &ka)))
}

fn lu_inverse(a: &Mat) -> Mat {
    let d = a.dim;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..d).collect();
    for k in 0..d {
        let p = (k..d)
            .max_by(|&i, &j| lu[i * d + k].abs().total_cmp(&lu[j * d + k].abs()))
            .unwrap();
        if p != k {
            for j in 0..d {
                lu.swap(k * d + j, p * d + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * d + k];
        for i in (k + 1)..d {
            let f = lu[i * d + k] / pivot;
            lu[i * d + k] = f;
            for j in (k + 1)..d {
                lu[i * d + j] -= f * lu[k * d + j];
            }
        }
    }
    let mut inv = Mat::zeros(d);
    for col in 0..d {
        // solve L y = P e_col, then U x = y
        let mut x: Vec<f64> = perm.iter().map(|&p| if p == col { 1.0 } else { 0.0 }).collect();
        for i in 0..d {
            for j in 0..i {
                x[i] -= lu[i * d + j] * x[j];
            }
        }
        for i in (0..d).rev() {
            for j in (i + 1)..d {
                x[i] -= lu[i * d + j] * x[j];
            }
            x[i] /= lu[i * d + i];
        }
        for (i, xi) in x.into_iter().enumerate() {
            inv.data[i * d + col] = xi;
        }
    }
    inv
}

impl Mul<&Mat> for &Mat {
    type Output = Mat;

    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        Mat { dim: d, data: out }
    }
}

impl Add<&Mat> for &Mat {
    type Output = Mat;

    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        Mat { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub<&Mat> for &Mat {
    type Output = Mat;

    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        Mat { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Mat {
    type Output = Mat;

    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Mat::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn products() {
        let a = m(&[[1.0, 1.0], [0.0, 1.0]]);
        let b = m(&[[1.0, 0.0], [1.0, 1.0]]);
        assert_eq!(&a * &b, m(&[[2.0, 1.0], [1.0, 1.0]]));
        assert_eq!(&Mat::identity(2) * &a, a);
        assert_eq!(&a + &Mat::zeros(2), a);
        assert!(matches!(a.try_mul(&Mat::identity(3)), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(Mat::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(Mat::new(2, vec![1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn inverses() {
        let inv = Mat::diag(&[2.0, 4.0]).try_inverse(DEFAULT_INV_TOL).unwrap();
        assert_eq!(inv, Mat::diag(&[0.5, 0.25]));
        assert!(matches!(Mat::diag(&[1.0, 0.0]).try_inverse(DEFAULT_INV_TOL), Err(Error::Singular { .. })));
        let rot = m(&[[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!(rot.try_inverse(DEFAULT_INV_TOL).unwrap(), m(&[[0.0, -1.0], [1.0, 0.0]]));
    }

    #[test]
    fn singular_values_and_norms() {
        assert_eq!(Mat::identity(3).singular_values(), vec![1.0; 3]);
        assert_eq!(Mat::diag(&[3.0, 0.0]).singular_values(), vec![3.0, 0.0]);
        let sv = m(&[[0.0, 2.0], [0.0, 0.0]]).singular_values();
        assert!((sv[0] - 2.0).abs() < 1e-15 && sv[1].abs() < 1e-15);
        assert_eq!(Mat::identity(2).op_norm(), 1.0);
        assert_eq!(Mat::diag(&[3.0, -5.0]).op_norm(), 5.0);
        assert!((m(&[[0.0, 2.0], [0.0, 0.0]]).op_norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ranks() {
        assert_eq!(Mat::identity(3).rank_eps(DEFAULT_RANK_TOL), 3);
        assert_eq!(Mat::diag(&[1.0, 1e-15]).rank_eps(DEFAULT_RANK_TOL), 1);
        assert_eq!(Mat::zeros(2).rank_eps(DEFAULT_RANK_TOL), 0);
        for n in -8..=8 {
            let w = Mat::diag(&[0.0, 2f64.powi(n)]);
            assert_eq!(w.rank_eps(DEFAULT_RANK_TOL), 1);
        }
    }

    #[test]
    fn borderline_rank() {
        let info = Mat::diag(&[1.0, 5e-9]).rank_info(DEFAULT_RANK_TOL);
        assert_eq!(info.rank, 1);
        assert!(info.is_borderline(10.0));
        assert!(!Mat::diag(&[1.0, 1e-14]).rank_info(DEFAULT_RANK_TOL).is_borderline(10.0));
    }

    #[test]
    fn bases() {
        let p = Mat::diag(&[1.0, 0.0]);
        assert_eq!(p.image_basis(DEFAULT_RANK_TOL).columns(), &[vec![1.0, 0.0]]);
        assert_eq!(p.kernel_basis(DEFAULT_RANK_TOL).columns(), &[vec![0.0, 1.0]]);
        assert!(Mat::identity(3).kernel_basis(DEFAULT_RANK_TOL).is_empty());
    }

    #[test]
    fn idempotency() {
        assert_eq!(Mat::identity(2).is_idempotent(1e-12), (true, 0.0));
        assert!(Mat::diag(&[1.0, 0.0]).is_idempotent(1e-12).0);
        // [[1,1],[0,1]]^2 - [[1,1],[0,1]] = [[0,1],[0,0]], norm 1
        let (ok, r) = m(&[[1.0, 1.0], [0.0, 1.0]]).is_idempotent(1e-12);
        assert!(!ok && r >= 1.0 - 1e-12);
    }

    #[test]
    fn kernels() {
        assert!(same_kernel(&Mat::diag(&[1.0, 0.0]), &Mat::diag(&[5.0, 0.0]), 1e-10));
        assert!(!same_kernel(&Mat::diag(&[1.0, 0.0]), &Mat::diag(&[0.0, 1.0]), 1e-10));
        let a = m(&[[1.0, 2.0], [2.0, 4.0]]);
        let b = m(&[[3.0, 1.0], [-1.0, 2.0]]);
        assert!(same_kernel(&a, &(&b * &a), 1e-10));
    }

    #[test]
    fn block_projectors() {
        assert_eq!(Mat::block_projector(3, 1, true), Mat::diag(&[1.0, 0.0, 0.0]));
        assert_eq!(Mat::block_projector(3, 1, false), Mat::diag(&[0.0, 1.0, 1.0]));
    }
}
