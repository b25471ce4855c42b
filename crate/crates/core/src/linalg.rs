//! Thin wrappers over LAPACK/BLAS (system OpenBLAS) for the dense complex
//! operations everything else is built on: matrix products, Hermitian
//! eigendecomposition, QR, and a real linear solve.
//!
//! All public functions take and return row-major `ndarray` arrays; the
//! row-major/column-major conversion is handled internally.

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::C64;

#[allow(clippy::too_many_arguments)]
mod ffi {
    use super::C64;

    extern "C" {
        pub fn zgemm_(
            transa: *const u8,
            transb: *const u8,
            m: *const i32,
            n: *const i32,
            k: *const i32,
            alpha: *const C64,
            a: *const C64,
            lda: *const i32,
            b: *const C64,
            ldb: *const i32,
            beta: *const C64,
            c: *mut C64,
            ldc: *const i32,
        );

        pub fn zheev_(
            jobz: *const u8,
            uplo: *const u8,
            n: *const i32,
            a: *mut C64,
            lda: *const i32,
            w: *mut f64,
            work: *mut C64,
            lwork: *const i32,
            rwork: *mut f64,
            info: *mut i32,
        );

        pub fn zgeqrf_(
            m: *const i32,
            n: *const i32,
            a: *mut C64,
            lda: *const i32,
            tau: *mut C64,
            work: *mut C64,
            lwork: *const i32,
            info: *mut i32,
        );

        pub fn zungqr_(
            m: *const i32,
            n: *const i32,
            k: *const i32,
            a: *mut C64,
            lda: *const i32,
            tau: *const C64,
            work: *mut C64,
            lwork: *const i32,
            info: *mut i32,
        );

        pub fn dgesv_(
            n: *const i32,
            nrhs: *const i32,
            a: *mut f64,
            lda: *const i32,
            ipiv: *mut i32,
            b: *mut f64,
            ldb: *const i32,
            info: *mut i32,
        );
    }
}

/// Operation applied to a row-major operand of a matrix product.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Op {
    /// The matrix itself.
    None,
    /// Transpose.
    Transpose,
    /// Conjugate transpose.
    Adjoint,
}

impl Op {
    fn lapack_char(self) -> u8 {
        match self {
            Op::None => b'N',
            Op::Transpose => b'T',
            Op::Adjoint => b'C',
        }
    }

    fn apply_dims(self, rows: usize, cols: usize) -> (usize, usize) {
        match self {
            Op::None => (rows, cols),
            _ => (cols, rows),
        }
    }
}

fn as_slice(a: &ArrayView2<C64>) -> Vec<C64> {
    // Callers pass standard-layout arrays; copy defensively when not.
    a.as_standard_layout().iter().copied().collect()
}

/// `op_a(A) * op_b(B)` for row-major `A`, `B`.
///
/// A row-major `m x n` buffer is a column-major `n x m` matrix, so the
/// product is computed in the transposed world: `C^T = op_b(B)^T op_a(A)^T`,
/// and each `op(X)^T` is expressible with the same op character applied to
/// the column-major view of `X`.
pub fn matmul(a: &ArrayView2<C64>, op_a: Op, b: &ArrayView2<C64>, op_b: Op) -> Array2<C64> {
    let (m, k1) = op_a.apply_dims(a.nrows(), a.ncols());
    let (k2, n) = op_b.apply_dims(b.nrows(), b.ncols());
    assert_eq!(k1, k2, "inner dimensions must agree");
    let (m_i, n_i, k_i) = (n as i32, m as i32, k1 as i32);
    let lda = b.ncols() as i32;
    let ldb = a.ncols() as i32;
    let ldc = n as i32;
    let a_buf = as_slice(a);
    let b_buf = as_slice(b);
    let mut c = vec![C64::new(0.0, 0.0); m * n];
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    unsafe {
        ffi::zgemm_(
            &op_b.lapack_char(),
            &op_a.lapack_char(),
            &m_i,
            &n_i,
            &k_i,
            &one,
            b_buf.as_ptr(),
            &lda,
            a_buf.as_ptr(),
            &ldb,
            &zero,
            c.as_mut_ptr(),
            &ldc,
        );
    }
    Array2::from_shape_vec((m, n), c).expect("gemm output shape")
}

/// `A * B`.
pub fn mm(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    matmul(a, Op::None, b, Op::None)
}

/// `A^dagger * B`.
pub fn mm_adj_l(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    matmul(a, Op::Adjoint, b, Op::None)
}

/// `A * B^dagger`.
pub fn mm_adj_r(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    matmul(a, Op::None, b, Op::Adjoint)
}

/// `A * B^T`.
pub fn mm_t_r(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    matmul(a, Op::None, b, Op::Transpose)
}

/// Maximum elementwise deviation from Hermiticity.
pub fn hermiticity_defect(m: &ArrayView2<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
///
/// The returned matrix holds the eigenvectors as columns:
/// `M = Q diag(w) Q^dagger`.
pub fn eigh(m: &ArrayView2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    eigh_impl(m, true).map(|(w, q)| (w, q.expect("vectors requested")))
}

/// Eigenvalues only (ascending) of a Hermitian matrix.
pub fn eigh_values(m: &ArrayView2<C64>) -> Result<Vec<f64>> {
    eigh_impl(m, false).map(|(w, _)| w)
}

fn eigh_impl(m: &ArrayView2<C64>, vectors: bool) -> Result<(Vec<f64>, Option<Array2<C64>>)> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "eigh requires a square matrix");
    if d == 0 {
        return Ok((Vec::new(), vectors.then(|| Array2::zeros((0, 0)))));
    }
    // The column-major view of the buffer is M^T = conj(M); it has the same
    // (real) eigenvalues, and its eigenvectors are the conjugates of M's.
    let mut a = as_slice(m);
    let n = d as i32;
    let jobz = if vectors { b'V' } else { b'N' };
    let uplo = b'L';
    let mut w = vec![0.0f64; d];
    let mut rwork = vec![0.0f64; 3 * d.max(2) - 2];
    let mut info = 0i32;
    // Workspace query, then the real call.
    let mut wkopt = [C64::new(0.0, 0.0)];
    let query = -1i32;
    unsafe {
        ffi::zheev_(
            &jobz,
            &uplo,
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            wkopt.as_mut_ptr(),
            &query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    let lwork = (wkopt[0].re as i32).max(2 * n);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        ffi::zheev_(
            &jobz,
            &uplo,
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheev",
            info,
        });
    }
    let q = if vectors {
        // Column j of the LAPACK output (column-major) is an eigenvector of
        // conj(M); conjugating gives an eigenvector of M. Reading the buffer
        // row-major transposes, so Q = conj(buffer_rm)^T = buffer_rm^dagger.
        let rm = Array2::from_shape_vec((d, d), a).expect("eigh output shape");
        let mut q = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                q[[i, j]] = rm[[j, i]].conj();
            }
        }
        Some(q)
    } else {
        None
    };
    Ok((w, q))
}

/// QR decomposition of a square matrix, returning `Q` and the diagonal of `R`.
pub fn qr_q_rdiag(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Vec<C64>)> {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "qr_q_rdiag requires a square matrix");
    let n = d as i32;
    // zgeqrf factorizes the column-major matrix, so transpose going in and
    // coming out; this keeps the factorization exactly QR of `a`.
    let mut buf = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            buf[j * d + i] = a[[i, j]];
        }
    }
    let mut tau = vec![C64::new(0.0, 0.0); d];
    let mut info = 0i32;
    let query = -1i32;
    let mut wkopt = [C64::new(0.0, 0.0)];
    unsafe {
        ffi::zgeqrf_(
            &n,
            &n,
            buf.as_mut_ptr(),
            &n,
            tau.as_mut_ptr(),
            wkopt.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    let lwork = (wkopt[0].re as i32).max(n);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        ffi::zgeqrf_(
            &n,
            &n,
            buf.as_mut_ptr(),
            &n,
            tau.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgeqrf",
            info,
        });
    }
    let rdiag: Vec<C64> = (0..d).map(|j| buf[j * d + j]).collect();
    unsafe {
        ffi::zungqr_(
            &n,
            &n,
            &n,
            buf.as_mut_ptr(),
            &n,
            tau.as_ptr(),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zungqr",
            info,
        });
    }
    let mut q = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            q[[i, j]] = buf[j * d + i];
        }
    }
    Ok((q, rdiag))
}

/// Solve `A x = b` for symmetric real `A` (LU via dgesv, one refinement pass).
pub fn solve_symmetric(a: &Array2<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let d = a.nrows();
    assert_eq!(d, a.ncols());
    assert_eq!(d, b.len());
    let n = d as i32;
    let nrhs = 1i32;
    let lu_solve = |rhs: &[f64]| -> Result<Vec<f64>> {
        // dgesv sees the column-major transpose; A is symmetric so that is A.
        let mut a_buf: Vec<f64> = a.iter().copied().collect();
        let mut ipiv = vec![0i32; d];
        let mut x = rhs.to_vec();
        let mut info = 0i32;
        unsafe {
            ffi::dgesv_(
                &n,
                &nrhs,
                a_buf.as_mut_ptr(),
                &n,
                ipiv.as_mut_ptr(),
                x.as_mut_ptr(),
                &n,
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Lapack {
                routine: "dgesv",
                info,
            });
        }
        Ok(x)
    };
    let mut x = lu_solve(b)?;
    for _ in 0..2 {
        let mut residual = b.to_vec();
        for i in 0..d {
            let mut acc = 0.0f64;
            for j in 0..d {
                acc += a[[i, j]] * x[j];
            }
            residual[i] -= acc;
        }
        let correction = lu_solve(&residual)?;
        for i in 0..d {
            x[i] += correction[i];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Array2<C64>, op_a: Op, b: &Array2<C64>, op_b: Op) -> Array2<C64> {
        let get = |m: &Array2<C64>, op: Op, i: usize, j: usize| match op {
            Op::None => m[[i, j]],
            Op::Transpose => m[[j, i]],
            Op::Adjoint => m[[j, i]].conj(),
        };
        let (ma, ka) = op_a.apply_dims(a.nrows(), a.ncols());
        let (_, nb) = op_b.apply_dims(b.nrows(), b.ncols());
        let mut c = Array2::zeros((ma, nb));
        for i in 0..ma {
            for j in 0..nb {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..ka {
                    acc += get(a, op_a, i, k) * get(b, op_b, k, j);
                }
                c[[i, j]] = acc;
            }
        }
        c
    }

    fn test_matrix(rows: usize, cols: usize, shift: f64) -> Array2<C64> {
        Array2::from_shape_fn((rows, cols), |(i, j)| {
            C64::new(
                (i * cols + j) as f64 * 0.31 - shift,
                ((i + 2 * j) as f64).sin(),
            )
        })
    }

    #[test]
    fn gemm_matches_naive_for_all_ops() {
        let a = test_matrix(3, 4, 1.0);
        let b_for = |op: Op| match op {
            Op::None => test_matrix(4, 5, 0.4),
            _ => test_matrix(5, 4, 0.4),
        };
        for op_a in [Op::None, Op::Transpose, Op::Adjoint] {
            let a_used = match op_a {
                Op::None => a.clone(),
                _ => test_matrix(4, 3, 1.0),
            };
            for op_b in [Op::None, Op::Transpose, Op::Adjoint] {
                let b_used = b_for(op_b);
                let fast = matmul(&a_used.view(), op_a, &b_used.view(), op_b);
                let slow = naive(&a_used, op_a, &b_used, op_b);
                let err = (&fast - &slow).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-12, "op_a={op_a:?} op_b={op_b:?} err={err}");
            }
        }
    }

    #[test]
    fn eigh_reconstructs_hermitian_matrix() {
        let g = test_matrix(6, 6, 0.7);
        let h = mm_adj_l(&g.view(), &g.view());
        let (w, q) = eigh(&h.view()).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]), "ascending order");
        let mut lam = Array2::zeros((6, 6));
        for i in 0..6 {
            lam[[i, i]] = C64::new(w[i], 0.0);
        }
        let rebuilt = mm_adj_r(&mm(&q.view(), &lam.view()).view(), &q.view());
        let err = (&rebuilt - &h).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn qr_reproduces_input_and_unitary_q() {
        let a = test_matrix(5, 5, 0.2);
        let (q, rdiag) = qr_q_rdiag(&a.view()).unwrap();
        let qhq = mm_adj_l(&q.view(), &q.view());
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qhq[[i, j]] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        // R = Q^dagger A must be upper triangular with the reported diagonal.
        let r = mm_adj_l(&q.view(), &a.view());
        for j in 0..5 {
            assert!((r[[j, j]] - rdiag[j]).norm() < 1e-12);
            for i in (j + 1)..5 {
                assert!(r[[i, j]].norm() < 1e-12, "not upper triangular");
            }
        }
    }

    #[test]
    fn solve_symmetric_small_system() {
        let a = ndarray::arr2(&[[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]]);
        let x_true = [1.0, -2.0, 0.5];
        let mut b = [0.0f64; 3];
        for i in 0..3 {
            b[i] = (0..3).map(|j| a[[i, j]] * x_true[j]).sum();
        }
        let x = solve_symmetric(&a, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-13);
        }
    }
}
