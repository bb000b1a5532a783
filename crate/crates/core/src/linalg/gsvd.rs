//! Generalized SVD of a matrix pair sharing a column space,
//!
//! ```text
//! H1 = U1 * Sigma1 * V^H,   H2 = U2 * Sigma2 * V^H,
//! Sigma1^H Sigma1 + Sigma2^H Sigma2 = I
//! ```
//!
//! computed as a rank-revealing orthonormal factorization of the stacked
//! matrix `[H1; H2] = [Q1; Q2] * R` followed by a CS decomposition of the
//! pair `(Q1, Q2)`. Streams (columns of `Sigma`) come out ordered as
//! private-to-user-1, common, private-to-user-2, with the user-1 gains
//! sorted in descending order.

use num_complex::Complex64;

use super::{
    all_finite, normalize_column_phase, orthonormal_complement, vstack, CMat, SortedSvd,
};
use crate::error::{Error, Result};

/// Gains within this distance of 0 or 1 are snapped to the private blocks.
const CS_TOL: f64 = 1e-8;
const ORTHONORMAL_TOL: f64 = 1e-10;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `Q1 = U1 * C * W^H`, `Q2 = U2 * S * W^H` for a pair whose stack has
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct CsDecomposition {
    pub u1: CMat,
    pub u2: CMat,
    pub w: CMat,
    /// Diagonal of `C`, one per column of `W`, descending.
    pub cos: Vec<f64>,
    /// Matching diagonal of `S`; `cos[i]^2 + sin[i]^2 = 1`.
    pub sin: Vec<f64>,
    pub private1: usize,
    pub common: usize,
    pub private2: usize,
}

impl CsDecomposition {
    /// `m1 x q` cosine block: `C[(i, i)] = cos[i]` for the streams user 1 sees.
    pub fn c_matrix(&self) -> CMat {
        let q = self.w.ncols();
        let mut c = CMat::zeros(self.u1.nrows(), q);
        for i in 0..self.private1 + self.common {
            c[(i, i)] = real(self.cos[i]);
        }
        c
    }

    /// `m2 x q` sine block: row `j` carries stream `private1 + j`.
    pub fn s_matrix(&self) -> CMat {
        let q = self.w.ncols();
        let mut s = CMat::zeros(self.u2.nrows(), q);
        for j in 0..self.common + self.private2 {
            let i = self.private1 + j;
            s[(j, i)] = real(self.sin[i]);
        }
        s
    }
}

/// CS decomposition of `(q1, q2)`. The stacked matrix must have orthonormal
/// columns to within `1e-10`.
pub fn cs_decompose(q1: &CMat, q2: &CMat) -> Result<CsDecomposition> {
    if q1.ncols() != q2.ncols() {
        return Err(Error::Shape(format!(
            "CS blocks have {} and {} columns",
            q1.ncols(),
            q2.ncols()
        )));
    }
    if !all_finite(q1) || !all_finite(q2) {
        return Err(Error::Argument("CS input contains non-finite entries".into()));
    }
    let (m1, q) = q1.shape();
    let m2 = q2.nrows();
    let defect = (q1.ad_mul(q1) + q2.ad_mul(q2) - CMat::identity(q, q)).norm();
    if defect > ORTHONORMAL_TOL {
        return Err(Error::Argument(format!(
            "stacked CS input is not orthonormal (defect {defect:.3e})"
        )));
    }

    let svd = SortedSvd::new(q1);
    let k = svd.v.ncols();
    let mut w = CMat::zeros(q, q);
    w.columns_mut(0, k).copy_from(&svd.v);
    if k < q {
        w.columns_mut(k, q - k).copy_from(&orthonormal_complement(&svd.v));
    }
    let mut cos: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&c| c.clamp(0.0, 1.0))
        .chain(std::iter::repeat(0.0))
        .take(q)
        .collect();
    let mut sin: Vec<f64> = (0..q).map(|i| (q2 * w.column(i)).norm().min(1.0)).collect();

    let private1 = sin.iter().take_while(|&&s| s <= CS_TOL).count();
    let private2 = cos[private1..].iter().rev().take_while(|&&c| c <= CS_TOL).count();
    let common = q - private1 - private2;
    for i in 0..private1 {
        cos[i] = 1.0;
        sin[i] = 0.0;
    }
    for i in q - private2..q {
        cos[i] = 0.0;
        sin[i] = 1.0;
    }

    let seen1 = private1 + common;
    let seen2 = common + private2;
    if seen1 > m1 || seen2 > m2 {
        return Err(Error::Argument(format!(
            "CS input is not consistent: {seen1} streams on {m1} rows, {seen2} streams on {m2} rows"
        )));
    }

    let mut u1 = CMat::zeros(m1, m1);
    u1.columns_mut(0, seen1).copy_from(&svd.u.columns(0, seen1));
    for i in 0..seen1 {
        let rot = normalize_column_phase(&mut u1, i);
        for z in w.column_mut(i).iter_mut() {
            *z *= rot;
        }
    }
    if seen1 < m1 {
        let comp = orthonormal_complement(&u1.columns(0, seen1).into_owned());
        u1.columns_mut(seen1, m1 - seen1).copy_from(&comp);
        for i in seen1..m1 {
            normalize_column_phase(&mut u1, i);
        }
    }

    let mut u2 = CMat::zeros(m2, m2);
    for j in 0..seen2 {
        let i = private1 + j;
        let col = q2 * w.column(i) / real(sin[i]);
        u2.set_column(j, &col);
    }
    // Dividing by a small sine amplifies rounding; re-orthogonalize from the
    // largest sine (last column) down.
    for j in (0..seen2).rev() {
        for _ in 0..2 {
            for k in j + 1..seen2 {
                let proj = u2.column(k).dotc(&u2.column(j));
                let ck = u2.column(k).into_owned();
                u2.column_mut(j).axpy(-proj, &ck, Complex64::new(1.0, 0.0));
            }
        }
        let norm = u2.column(j).norm();
        u2.column_mut(j).unscale_mut(norm);
    }
    for j in 0..seen2 {
        let i = private1 + j;
        if i >= seen1 {
            // private to user 2: the phase is still free
            let rot = normalize_column_phase(&mut u2, j);
            for z in w.column_mut(i).iter_mut() {
                *z *= rot;
            }
        }
    }
    if seen2 < m2 {
        let comp = orthonormal_complement(&u2.columns(0, seen2).into_owned());
        u2.columns_mut(seen2, m2 - seen2).copy_from(&comp);
        for j in seen2..m2 {
            normalize_column_phase(&mut u2, j);
        }
    }

    Ok(CsDecomposition { u1, u2, w, cos, sin, private1, common, private2 })
}

/// Joint factorization of a channel pair.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub u1: CMat,
    pub u2: CMat,
    /// `n x q` joint right factor.
    pub v: CMat,
    pub sigma1: CMat,
    pub sigma2: CMat,
    /// User-1 coupling coefficients on the common block, descending.
    pub c1: Vec<f64>,
    /// User-2 coupling coefficients on the common block.
    pub c2: Vec<f64>,
    /// Streams private to user 1.
    pub r: usize,
    /// Common streams.
    pub t: usize,
    /// Streams private to user 2.
    pub r2: usize,
    /// Per-stream gains seen by user 1 and user 2 (length `q`).
    pub gains1: Vec<f64>,
    pub gains2: Vec<f64>,
    /// CS rotation: `V^H = W^H * diag(stacked_singular_values) * row_basis^H`.
    pub w: CMat,
    /// `n x q` orthonormal basis of the row space of `[H1; H2]`.
    pub row_basis: CMat,
    pub stacked_singular_values: Vec<f64>,
}

impl GsvdFactors {
    /// Stream count `q = rank([H1; H2])`.
    pub fn q(&self) -> usize {
        self.v.ncols()
    }

    /// Row of `Sigma_user` that carries `stream`, if the user sees it.
    pub fn row_for_stream(&self, user: usize, stream: usize) -> Option<usize> {
        match user {
            1 if stream < self.r + self.t => Some(stream),
            2 if stream >= self.r && stream < self.q() => Some(stream - self.r),
            _ => None,
        }
    }
}

/// Generalized SVD of `(h1, h2)`. The stacked matrix must reach the generic
/// rank `min(n, m1 + m2)`; anything less is reported as a degenerate channel.
pub fn gsvd(h1: &CMat, h2: &CMat) -> Result<GsvdFactors> {
    if !all_finite(h1) || !all_finite(h2) {
        return Err(Error::Argument("channel matrix contains non-finite entries".into()));
    }
    let stacked = vstack(h1, h2)?;
    let (m1, n) = h1.shape();
    let m2 = h2.nrows();

    let svd = SortedSvd::new(&stacked);
    let q = svd.rank();
    let expected = n.min(m1 + m2);
    if q < expected {
        return Err(Error::DegenerateChannel(format!(
            "stacked channel has rank {q}, expected {expected}"
        )));
    }
    let basis = svd.u.columns(0, q);
    let cs = cs_decompose(&basis.rows(0, m1).into_owned(), &basis.rows(m1, m2).into_owned())?;

    let (p1, p2) = (q.saturating_sub(m2), q.saturating_sub(m1));
    if cs.private1 != p1 || cs.private2 != p2 {
        return Err(Error::DegenerateChannel(format!(
            "block sizes ({}, {}, {}) differ from the generic ({p1}, {}, {p2})",
            cs.private1,
            cs.common,
            cs.private2,
            q - p1 - p2
        )));
    }

    let row_basis = svd.v.columns(0, q).into_owned();
    let stacked_singular_values = svd.singular_values[..q].to_vec();
    let mut scaled = row_basis.clone();
    for (j, &s) in stacked_singular_values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(s);
    }
    let v = scaled * &cs.w;

    let common = cs.private1..cs.private1 + cs.common;
    let gains2 = cs.sin.clone();
    let gains1: Vec<f64> =
        (0..q).map(|i| if i < cs.private1 + cs.common { cs.cos[i] } else { 0.0 }).collect();
    Ok(GsvdFactors {
        sigma1: cs.c_matrix(),
        sigma2: cs.s_matrix(),
        c1: cs.cos[common.clone()].to_vec(),
        c2: cs.sin[common].to_vec(),
        r: cs.private1,
        t: cs.common,
        r2: cs.private2,
        gains1,
        gains2,
        u1: cs.u1,
        u2: cs.u2,
        v,
        w: cs.w,
        row_basis,
        stacked_singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{householder_qr, orthonormality_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn scalar(x: f64) -> CMat {
        CMat::from_element(1, 1, real(x))
    }

    fn rel(a: &CMat, b: &CMat) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn check_invariants(h1: &CMat, h2: &CMat, f: &GsvdFactors) {
        assert!(rel(&(&f.u1 * &f.sigma1 * f.v.adjoint()), h1) <= 1e-10);
        assert!(rel(&(&f.u2 * &f.sigma2 * f.v.adjoint()), h2) <= 1e-10);
        assert!(orthonormality_defect(&f.u1) <= 1e-12 * f.u1.nrows() as f64);
        assert!(orthonormality_defect(&f.u2) <= 1e-12 * f.u2.nrows() as f64);
        let q = f.q();
        let norm = f.sigma1.ad_mul(&f.sigma1) + f.sigma2.ad_mul(&f.sigma2) - CMat::identity(q, q);
        assert!(norm.norm() <= 1e-10);
        for (a, b) in f.c1.iter().zip(&f.c2) {
            assert!((a * a + b * b - 1.0).abs() <= 1e-10);
        }
        assert!(f.c1.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn scalar_pair() {
        let f = gsvd(&scalar(1.0), &scalar(1.0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!((f.r, f.t, f.r2), (0, 1, 0));
        assert!((f.c1[0] - h).abs() < 1e-15 && (f.c2[0] - h).abs() < 1e-15);
        assert!((f.v[(0, 0)].norm() - 2f64.sqrt()).abs() < 1e-14);
        assert!((f.u1[(0, 0)] - real(1.0)).norm() < 1e-15);
        assert!((f.u2[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_and_scaled_identity() {
        let h1 = CMat::identity(2, 2);
        let h2 = CMat::identity(2, 2) * real(2.0);
        let f = gsvd(&h1, &h2).unwrap();
        check_invariants(&h1, &h2, &f);
        for (a, b) in f.c1.iter().zip(&f.c2) {
            assert!((a - 1.0 / 5f64.sqrt()).abs() < 1e-14);
            assert!((b - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        }
        // V^H = sqrt(5) times a unitary matrix
        let vv = f.v.ad_mul(&f.v);
        assert!((vv - CMat::identity(2, 2) * real(5.0)).norm() < 1e-13);
    }

    #[test]
    fn random_tall_pair() {
        let h1 = random_cmat(6, 4, 1);
        let h2 = random_cmat(6, 4, 2);
        let f = gsvd(&h1, &h2).unwrap();
        assert_eq!((f.r, f.t, f.r2), (0, 4, 0));
        check_invariants(&h1, &h2, &f);
    }

    #[test]
    fn block_shapes_for_each_layout() {
        // (m, n) -> expected (private1, common, private2)
        for &(m, n, shape) in &[(3, 4, (1, 2, 1)), (4, 3, (0, 3, 0)), (2, 5, (2, 0, 2)), (2, 4, (2, 0, 2))] {
            let h1 = random_cmat(m, n, 40 + n as u64);
            let h2 = random_cmat(m, n, 80 + m as u64);
            let f = gsvd(&h1, &h2).unwrap();
            assert_eq!((f.r, f.t, f.r2), shape, "m={m} n={n}");
            check_invariants(&h1, &h2, &f);
            for i in 0..f.r {
                assert!((f.sigma1[(i, i)] - real(1.0)).norm() == 0.0);
            }
        }
    }

    #[test]
    fn deterministic() {
        let h1 = random_cmat(3, 4, 5);
        let h2 = random_cmat(3, 4, 6);
        let a = gsvd(&h1, &h2).unwrap();
        let b = gsvd(&h1, &h2).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(a.u1, b.u1);
        assert_eq!(a.u2, b.u2);
    }

    #[test]
    fn phase_convention_on_u1() {
        let f = gsvd(&random_cmat(4, 3, 7), &random_cmat(4, 3, 8)).unwrap();
        for j in 0..f.u1.ncols() {
            let col = f.u1.column(j);
            let lead = col.iter().find(|z| z.norm() > 1e-10).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn rank_deficient_pair_is_degenerate() {
        let h = random_cmat(2, 4, 3);
        let err = gsvd(&h, &h).unwrap_err();
        assert!(matches!(err, Error::DegenerateChannel(_)));
    }

    #[test]
    fn non_finite_rejected() {
        let mut h = random_cmat(2, 2, 3);
        h[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(gsvd(&h, &h), Err(Error::Argument(_))));
    }

    #[test]
    fn cs_trivial_cases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let cs = cs_decompose(&scalar(h), &scalar(h)).unwrap();
        assert!((cs.cos[0] - h).abs() < 1e-15 && (cs.sin[0] - h).abs() < 1e-15);
        assert!((cs.w[(0, 0)] - real(1.0)).norm() < 1e-15);
        assert!((cs.u2[(0, 0)] - real(1.0)).norm() < 1e-15);

        let cs = cs_decompose(&scalar(1.0), &scalar(0.0)).unwrap();
        assert_eq!((cs.cos[0], cs.sin[0]), (1.0, 0.0));
        assert_eq!(cs.s_matrix()[(0, 0)], real(0.0));
        assert_eq!(cs.private1, 1);
    }

    #[test]
    fn cs_rejects_non_orthonormal() {
        assert!(matches!(cs_decompose(&scalar(1.0), &scalar(1.0)), Err(Error::Argument(_))));
    }

    #[test]
    fn cs_random_orthonormal_stack() {
        let (q, _) = householder_qr(&random_cmat(10, 3, 13));
        let basis = q.columns(0, 3).into_owned();
        let q1 = basis.rows(0, 5).into_owned();
        let q2 = basis.rows(5, 5).into_owned();
        let cs = cs_decompose(&q1, &q2).unwrap();
        assert!((&cs.u1 * cs.c_matrix() * cs.w.adjoint() - &q1).norm() <= 1e-11);
        assert!((&cs.u2 * cs.s_matrix() * cs.w.adjoint() - &q2).norm() <= 1e-11);
        assert!(orthonormality_defect(&cs.w) < 1e-12);
        for i in 0..3 {
            assert!((cs.cos[i].powi(2) + cs.sin[i].powi(2) - 1.0).abs() < 1e-12);
        }
    }
}
