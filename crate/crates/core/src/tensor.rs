//! States, density operators, and bipartite tensor algebra.
//!
//! One index convention is used everywhere: the composite index of a pair
//! `(a, b)` on `A (x) B` is `a * dim_b + b` (row-major). Kronecker products,
//! partial traces, channel conjugation, and the maximally entangled state
//! all refer to this same computational product basis.

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::{
    C64, HERMITICITY_TOL, MAX_OPERATOR_DIM, MAX_TOTAL_DIM, NORM_TOL, PSD_FLOOR, SPECTRUM_SUM_TOL,
    TRACE_TOL,
};

/// A unit vector on a finite-dimensional space.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: Array1<C64>,
}

impl PureState {
    /// Wraps an amplitude vector, requiring unit norm within tolerance.
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_unnormalized(v: Array1<C64>) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { deviation: 1.0 });
        }
        Ok(Self {
            amplitudes: v.mapv(|z| z / norm),
        })
    }

    /// Computational basis state |k> in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut v = Array1::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    /// |psi><psi| as a density operator.
    pub fn projector(&self) -> DensityOperator {
        let d = self.dim();
        let m = Array2::from_shape_fn((d, d), |(i, j)| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        });
        DensityOperator::from_trusted(m)
    }

    /// Tensor product of two pure states (composite index `a * dim_b + b`).
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let v = kron_vec(&self.amplitudes.view(), &other.amplitudes.view())?;
        Ok(Self { amplitudes: v })
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conjugate(&self) -> PureState {
        Self {
            amplitudes: self.amplitudes.mapv(|z| z.conj()),
        }
    }

    /// Squared overlap |<self|other>|^2.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }
}

/// A Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: Array2<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and numerical positivity.
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let defect = linalg::hermiticity_defect(&matrix.view());
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation: defect });
        }
        let trace = matrix.diag().iter().map(|z| z.re).sum::<f64>();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace });
        }
        let rho = Self::from_trusted(matrix);
        let min = linalg::eigh_values(&rho.matrix.view())?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < PSD_FLOOR {
            return Err(Error::NotPositive { value: min });
        }
        Ok(rho)
    }

    /// Construction for operators positive by construction (conjugations,
    /// partial traces of PSD inputs). Symmetrizes away roundoff drift.
    pub(crate) fn from_trusted(matrix: Array2<C64>) -> Self {
        let d = matrix.nrows();
        let mut m = matrix;
        for i in 0..d {
            m[[i, i]] = C64::new(m[[i, i]].re, 0.0);
            for j in (i + 1)..d {
                let avg = 0.5 * (m[[i, j]] + m[[j, i]].conj());
                m[[i, j]] = avg;
                m[[j, i]] = avg.conj();
            }
        }
        Self { matrix: m }
    }

    /// I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = Array2::zeros((dim, dim));
        for i in 0..dim {
            m[[i, i]] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    /// Tr rho^2, computed as the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Tensor product of two density operators.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let m = kron(&self.matrix.view(), &other.matrix.view())?;
        Ok(Self::from_trusted(m))
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conjugate(&self) -> DensityOperator {
        Self {
            matrix: self.matrix.mapv(|z| z.conj()),
        }
    }
}

/// Dimensions of a bipartite space `A (x) B`.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub struct BipartiteDims {
    dim_a: usize,
    dim_b: usize,
}

impl BipartiteDims {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a < 1 {
            return Err(Error::InvalidParameter {
                name: "dim_a",
                value: dim_a as f64,
                reason: "must be at least 1",
            });
        }
        if dim_b < 1 {
            return Err(Error::InvalidParameter {
                name: "dim_b",
                value: dim_b as f64,
                reason: "must be at least 1",
            });
        }
        let total = dim_a.checked_mul(dim_b).ok_or(Error::DimOverflow {
            dim: usize::MAX,
            max: MAX_TOTAL_DIM,
        })?;
        if total > MAX_TOTAL_DIM {
            return Err(Error::DimOverflow {
                dim: total,
                max: MAX_TOTAL_DIM,
            });
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }
}

/// Which factor a partial trace keeps.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Eigenvalues of a density operator, sorted descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Wraps a list of eigenvalues of a density operator.
    ///
    /// Values are sorted descending; anything below the PSD floor or a sum
    /// away from 1 beyond tolerance is rejected as a bug rather than roundoff.
    pub fn from_values(mut eigenvalues: Vec<f64>) -> Result<Self> {
        for &v in &eigenvalues {
            if v < PSD_FLOOR {
                return Err(Error::NotPositive { value: v });
            }
            if v > 1.0 + 1e-9 {
                return Err(Error::SpectrumNotNormalized { sum: v });
            }
        }
        let sum: f64 = eigenvalues.iter().sum();
        if (sum - 1.0).abs() > SPECTRUM_SUM_TOL {
            return Err(Error::SpectrumNotNormalized { sum });
        }
        eigenvalues.sort_by(|x, y| y.partial_cmp(x).expect("no NaN eigenvalues"));
        Ok(Self { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Raw values, descending.
    pub fn values(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Values clamped into [0, 1], descending.
    pub fn clamped(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&v| v.clamp(0.0, 1.0))
            .collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Kronecker product of two vectors: `out[a * dim_b + b] = x[a] * y[b]`.
pub fn kron_vec(x: &ArrayView1<C64>, y: &ArrayView1<C64>) -> Result<Array1<C64>> {
    let total = x.len().checked_mul(y.len()).ok_or(Error::DimOverflow {
        dim: usize::MAX,
        max: MAX_TOTAL_DIM,
    })?;
    if total > MAX_TOTAL_DIM {
        return Err(Error::DimOverflow {
            dim: total,
            max: MAX_TOTAL_DIM,
        });
    }
    let dim_b = y.len();
    let mut out = Array1::zeros(total);
    for (a, &xa) in x.iter().enumerate() {
        for (b, &yb) in y.iter().enumerate() {
            out[a * dim_b + b] = xa * yb;
        }
    }
    Ok(out)
}

/// Kronecker product of two square operators with the same index convention.
pub fn kron(x: &ArrayView2<C64>, y: &ArrayView2<C64>) -> Result<Array2<C64>> {
    assert_eq!(x.nrows(), x.ncols(), "kron operands must be square");
    assert_eq!(y.nrows(), y.ncols(), "kron operands must be square");
    let total = x.nrows().checked_mul(y.nrows()).ok_or(Error::DimOverflow {
        dim: usize::MAX,
        max: MAX_TOTAL_DIM,
    })?;
    if total > MAX_TOTAL_DIM {
        return Err(Error::DimOverflow {
            dim: total,
            max: MAX_TOTAL_DIM,
        });
    }
    if total > MAX_OPERATOR_DIM {
        return Err(Error::DimOverflow {
            dim: total,
            max: MAX_OPERATOR_DIM,
        });
    }
    let db = y.nrows();
    let mut out = Array2::zeros((total, total));
    for a in 0..x.nrows() {
        for ap in 0..x.ncols() {
            let xv = x[[a, ap]];
            if xv == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..db {
                for bp in 0..db {
                    out[[a * db + b, ap * db + bp]] = xv * y[[b, bp]];
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace of an operator on `A (x) B`, keeping the chosen factor.
pub fn partial_trace(
    rho: &DensityOperator,
    dims: BipartiteDims,
    keep: Keep,
) -> Result<DensityOperator> {
    let m = partial_trace_matrix(&rho.matrix.view(), dims, keep)?;
    Ok(DensityOperator::from_trusted(m))
}

/// Partial trace on a raw matrix; used internally where the input is a
/// projector built on the fly rather than a checked `DensityOperator`.
pub(crate) fn partial_trace_matrix(
    m: &ArrayView2<C64>,
    dims: BipartiteDims,
    keep: Keep,
) -> Result<Array2<C64>> {
    let total = dims.total();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimMismatch {
            expected: total,
            found: m.nrows(),
        });
    }
    let (da, db) = (dims.dim_a(), dims.dim_b());
    match keep {
        Keep::A => {
            let mut out = Array2::zeros((da, da));
            for a in 0..da {
                for ap in 0..da {
                    let mut acc = C64::new(0.0, 0.0);
                    for b in 0..db {
                        acc += m[[a * db + b, ap * db + b]];
                    }
                    out[[a, ap]] = acc;
                }
            }
            Ok(out)
        }
        Keep::B => {
            let mut out = Array2::zeros((db, db));
            for b in 0..db {
                for bp in 0..db {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..da {
                        acc += m[[a * db + b, a * db + bp]];
                    }
                    out[[b, bp]] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Descending eigenvalues of a density operator.
pub fn eigen_spectrum(rho: &DensityOperator) -> Result<Spectrum> {
    let vals = linalg::eigh_values(&rho.matrix.view())?;
    Spectrum::from_values(vals)
}

/// Descending eigenvalues together with matching eigenvectors (as columns).
pub fn eigen_decomposition(rho: &DensityOperator) -> Result<(Spectrum, Array2<C64>)> {
    let (vals, vecs) = linalg::eigh(&rho.matrix.view())?;
    let d = vals.len();
    // eigh returns ascending order; reverse values and columns together.
    let mut sorted_vals = vals.clone();
    sorted_vals.reverse();
    let mut sorted_vecs = Array2::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            sorted_vecs[[i, j]] = vecs[[i, d - 1 - j]];
        }
    }
    Ok((Spectrum::from_values(sorted_vals)?, sorted_vecs))
}

/// Schatten p-norm of a Hermitian operator via its singular values
/// (absolute eigenvalues). `p` may be any positive order including infinity,
/// where the norm is the largest singular value.
pub fn schatten_norm(m: &ArrayView2<C64>, p: crate::entropy::RenyiOrder) -> Result<f64> {
    let defect = linalg::hermiticity_defect(m);
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let singulars: Vec<f64> = linalg::eigh_values(m)?.iter().map(|v| v.abs()).collect();
    use crate::entropy::RenyiOrder;
    Ok(match p {
        RenyiOrder::Infinity => singulars.iter().cloned().fold(0.0, f64::max),
        RenyiOrder::One => singulars.iter().sum(),
        RenyiOrder::Finite(p) => singulars.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p),
    })
}

/// The maximally entangled state on `d (x) d` in the computational product
/// basis: amplitudes `1/sqrt(d)` on the paired indices `k * d + k`.
pub fn make_max_entangled(d: usize) -> PureState {
    assert!(d >= 1);
    let mut v = Array1::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for k in 0..d {
        v[k * d + k] = amp;
    }
    PureState { amplitudes: v }
}
