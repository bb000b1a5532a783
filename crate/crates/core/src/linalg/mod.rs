//! Dense complex linear algebra: orthogonal factorizations, null spaces and
//! the generalized SVD of a matrix pair.

mod gsvd;

pub use gsvd::{cs_decompose, gsvd, CsDecomposition, GsvdFactors};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance used for every numerical-rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Thin SVD with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    /// `rows x k` left singular vectors.
    pub u: CMat,
    pub singular_values: Vec<f64>,
    /// `cols x k` right singular vectors (not conjugated).
    pub v: CMat,
}

impl SortedSvd {
    pub fn new(a: &CMat) -> Self {
        let k = a.nrows().min(a.ncols());
        if k == 0 {
            return Self {
                u: CMat::zeros(a.nrows(), 0),
                singular_values: Vec::new(),
                v: CMat::zeros(a.ncols(), 0),
            };
        }
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("left vectors requested");
        let v_t = svd.v_t.expect("right vectors requested");
        let mut order: Vec<usize> = (0..k).collect();
        // stable sort keeps the factorization order among ties
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let u = CMat::from_fn(a.nrows(), k, |r, c| u[(r, order[c])]);
        let v = CMat::from_fn(a.ncols(), k, |r, c| v_t[(order[c], r)].conj());
        let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
        Self { u, singular_values, v }
    }

    /// Number of singular values above `RANK_TOL * largest`.
    pub fn rank(&self) -> usize {
        let Some(&top) = self.singular_values.first() else {
            return 0;
        };
        if top == 0.0 {
            return 0;
        }
        self.singular_values.iter().take_while(|&&s| s > RANK_TOL * top).count()
    }
}

/// Householder QR with the full unitary factor: `a = q * r`, `q` is
/// `m x m`, `r` is `m x n` upper trapezoidal.
pub fn householder_qr(a: &CMat) -> (CMat, CMat) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = CMat::identity(m, m);
    let minus_two = Complex64::new(-2.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    for j in 0..n.min(m) {
        let x = r.view((j, j), (m - j, 1)).column(0).into_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { one };
        let mut v = x;
        v[0] += phase * norm;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= Complex64::new(vnorm, 0.0);

        let mut r_sub = r.view_mut((j, j), (m - j, n - j));
        let w = r_sub.ad_mul(&v);
        r_sub.gerc(minus_two, &v, &w, one);

        let mut q_sub = q.view_mut((0, j), (m, m - j));
        let w = &q_sub * &v;
        q_sub.gerc(minus_two, &w, &v, one);

        for i in j + 1..m {
            r[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    (q, r)
}

/// Orthonormal basis of the orthogonal complement of the column space of
/// `basis`, whose columns must already be orthonormal.
pub fn orthonormal_complement(basis: &CMat) -> CMat {
    let (n, k) = basis.shape();
    if k >= n {
        return CMat::zeros(n, 0);
    }
    let (q, _) = householder_qr(basis);
    q.columns(k, n - k).into_owned()
}

/// Orthonormal basis of the right null space of `a`, decided at
/// `RANK_TOL * ||a||_2`.
pub fn null_space_basis(a: &CMat) -> CMat {
    let n = a.ncols();
    let svd = SortedSvd::new(a);
    let rank = svd.rank();
    let k = svd.v.ncols();
    if k == n {
        return svd.v.columns(rank, n - rank).into_owned();
    }
    let in_row_space_gap = svd.v.columns(rank, k - rank).into_owned();
    let outside = orthonormal_complement(&svd.v);
    let mut basis = CMat::zeros(n, n - rank);
    basis.columns_mut(0, k - rank).copy_from(&in_row_space_gap);
    basis.columns_mut(k - rank, n - k).copy_from(&outside);
    basis
}

/// Numerical rank at `RANK_TOL * ||a||_2`.
pub fn numerical_rank(a: &CMat) -> usize {
    SortedSvd::new(a).rank()
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    SortedSvd::new(a).singular_values.first().copied().unwrap_or(0.0)
}

/// Frobenius distance of `a^H a` from the identity.
pub fn orthonormality_defect(a: &CMat) -> f64 {
    let k = a.ncols();
    (a.ad_mul(a) - CMat::identity(k, k)).norm()
}

/// Stacks `top` over `bottom`.
pub fn vstack(top: &CMat, bottom: &CMat) -> Result<CMat> {
    if top.ncols() != bottom.ncols() {
        return Err(Error::Shape(format!(
            "cannot stack {} columns over {} columns",
            top.ncols(),
            bottom.ncols()
        )));
    }
    let mut out = CMat::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    Ok(out)
}

/// Solves the Hermitian positive-definite system `a x = b`.
pub fn solve_hpd(a: CMat, b: &CMat) -> Result<CMat> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::DegenerateChannel("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

pub(crate) fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Rotates column `j` so that its first entry above `1e-10` of the column
/// norm is real and positive. Returns the applied unit-modulus factor.
pub(crate) fn normalize_column_phase(a: &mut CMat, j: usize) -> Complex64 {
    let mut col = a.column_mut(j);
    let norm = col.norm();
    let one = Complex64::new(1.0, 0.0);
    if norm == 0.0 {
        return one;
    }
    let Some(lead) = col.iter().find(|z| z.norm() > 1e-10 * norm).copied() else {
        return one;
    };
    let rot = lead.conj() / lead.norm();
    for z in col.iter_mut() {
        *z *= rot;
    }
    rot
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_cmat(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn qr_reconstructs_with_unitary_factor() {
        for &(m, n) in &[(6, 4), (4, 6), (5, 5), (1, 3)] {
            let a = random_cmat(m, n, (m * 10 + n) as u64);
            let (q, r) = householder_qr(&a);
            assert!((&q * &r - &a).norm() < 1e-12 * a.norm());
            assert!(orthonormality_defect(&q) < 1e-12 * m as f64);
            for j in 0..n {
                for i in j + 1..m {
                    assert_eq!(r[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn sorted_svd_descends_and_reconstructs() {
        let a = random_cmat(7, 4, 9);
        let svd = SortedSvd::new(&a);
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let s = CMat::from_diagonal(&CVec::from_iterator(
            4,
            svd.singular_values.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        assert!((&svd.u * s * svd.v.adjoint() - &a).norm() < 1e-12 * a.norm());
        assert_eq!(svd.rank(), 4);
    }

    #[test]
    fn null_space_of_row_vector() {
        let a = CMat::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let basis = null_space_basis(&a);
        assert_eq!(basis.shape(), (2, 1));
        assert!(basis[(0, 0)].norm() < 1e-15);
        assert!((basis[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn null_space_of_identity_is_empty() {
        assert_eq!(null_space_basis(&CMat::identity(3, 3)).ncols(), 0);
    }

    #[test]
    fn null_space_of_wide_random_matrix() {
        let a = random_cmat(4, 6, 21);
        let basis = null_space_basis(&a);
        assert_eq!(basis.ncols(), 2);
        assert!(orthonormality_defect(&basis) < 1e-12);
        assert!((&a * &basis).norm() <= 1e-10 * spectral_norm(&a));
    }

    #[test]
    fn null_space_of_rank_deficient_tall_matrix() {
        let b = random_cmat(6, 2, 4);
        let c = random_cmat(2, 4, 5);
        let a = b * c;
        let basis = null_space_basis(&a);
        assert_eq!(basis.ncols(), 2);
        assert!((&a * &basis).norm() <= 1e-10 * spectral_norm(&a));
    }

    #[test]
    fn complement_spans_the_rest() {
        let (q, _) = householder_qr(&random_cmat(5, 2, 8));
        let basis = q.columns(0, 2).into_owned();
        let comp = orthonormal_complement(&basis);
        assert_eq!(comp.ncols(), 3);
        assert!(basis.ad_mul(&comp).norm() < 1e-13);
        assert!(orthonormality_defect(&comp) < 1e-13);
    }

    #[test]
    fn vstack_checks_columns() {
        assert!(vstack(&CMat::zeros(2, 3), &CMat::zeros(1, 2)).is_err());
        assert_eq!(vstack(&CMat::zeros(2, 3), &CMat::zeros(1, 3)).unwrap().shape(), (3, 3));
    }
}
