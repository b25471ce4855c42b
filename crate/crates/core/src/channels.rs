//! The two channel families under study: uniform mixtures of unitary
//! conjugations, and isometric dilations followed by a partial trace.
//!
//! Complex conjugation of a channel is entrywise conjugation of its
//! defining matrices in the computational product basis -- the same basis
//! `make_max_entangled` is written in. Keeping those two aligned is what
//! makes the conjugate-pair identities hold exactly.

use ndarray::prelude::*;
use ndarray::Axis;

use crate::ensembles::{haar_unitary, random_isometry, SeededRng};
use crate::entropy::EstimatorConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{BipartiteDims, DensityOperator, Keep, PureState};
use crate::{C64, HERMITICITY_TOL, MAX_OPERATOR_DIM};

/// A matrix `V` with `V^dagger V = I` on its input space.
#[derive(Debug, Clone)]
pub struct Isometry {
    matrix: Array2<C64>,
}

impl Isometry {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let defect = crate::ensembles::isometry_defect(&matrix.view());
        if defect > HERMITICITY_TOL {
            return Err(Error::NotIsometry { defect });
        }
        Ok(Self { matrix })
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }
}

/// Interface shared by both channel families.
pub trait QuantumChannel {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    /// Kraus operators `E_k` with `sum_k E_k^dagger E_k = I`.
    fn kraus_ops(&self) -> Vec<Array2<C64>>;

    /// Channel applied to a density operator.
    fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator>;

    /// Output density matrix for a pure input given as a unit vector.
    fn apply_pure_vec(&self, psi: &ArrayView1<C64>) -> Array2<C64>;

    /// `N^dagger(Y) |psi>` for the adjoint (Heisenberg) map; the building
    /// block of entropy gradients.
    fn adjoint_apply_vec(&self, y: &ArrayView2<C64>, psi: &ArrayView1<C64>) -> Array1<C64>;

    /// Batched pure application; columns of `psis` are unit vectors.
    fn apply_pure_batch(&self, psis: &ArrayView2<C64>) -> Vec<Array2<C64>> {
        (0..psis.ncols())
            .map(|c| self.apply_pure_vec(&psis.column(c)))
            .collect()
    }
}

fn column(v: &ArrayView1<C64>) -> Array2<C64> {
    v.to_owned().insert_axis(Axis(1))
}

/// `rho -> (1/n) sum_i V_i rho V_i^dagger` for unitaries `V_i`.
#[derive(Debug, Clone)]
pub struct RandomUnitaryChannel {
    unitaries: Vec<Array2<C64>>,
    d: usize,
}

impl RandomUnitaryChannel {
    pub fn new(unitaries: Vec<Array2<C64>>) -> Result<Self> {
        if unitaries.is_empty() {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "a random unitary channel needs at least one unitary",
            });
        }
        let d = unitaries[0].nrows();
        for u in &unitaries {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: u.nrows().max(u.ncols()),
                });
            }
            let defect = crate::ensembles::isometry_defect(&u.view());
            if defect > HERMITICITY_TOL {
                return Err(Error::NotIsometry { defect });
            }
        }
        Ok(Self { unitaries, d })
    }

    /// `n` Haar-distributed unitaries of dimension `d`.
    pub fn sample<R: rand::Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let unitaries = (0..n).map(|_| haar_unitary(rng, d)).collect();
        Ok(Self { unitaries, d })
    }

    /// The qubit Pauli mixture {I, X, Y, Z}, an exact randomizer.
    pub fn pauli_qubit() -> Self {
        let z = |re: f64, im: f64| C64::new(re, im);
        let mats = vec![
            ndarray::arr2(&[[z(1.0, 0.0), z(0.0, 0.0)], [z(0.0, 0.0), z(1.0, 0.0)]]),
            ndarray::arr2(&[[z(0.0, 0.0), z(1.0, 0.0)], [z(1.0, 0.0), z(0.0, 0.0)]]),
            ndarray::arr2(&[[z(0.0, 0.0), z(0.0, -1.0)], [z(0.0, 1.0), z(0.0, 0.0)]]),
            ndarray::arr2(&[[z(1.0, 0.0), z(0.0, 0.0)], [z(0.0, 0.0), z(-1.0, 0.0)]]),
        ];
        Self {
            unitaries: mats,
            d: 2,
        }
    }

    pub fn n(&self) -> usize {
        self.unitaries.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn unitaries(&self) -> &[Array2<C64>] {
        &self.unitaries
    }

    /// Entrywise complex conjugate channel.
    pub fn conjugate(&self) -> Self {
        Self {
            unitaries: self
                .unitaries
                .iter()
                .map(|u| u.mapv(|v| v.conj()))
                .collect(),
            d: self.d,
        }
    }

    /// `<Phi| (N (x) conj(N))(Phi) |Phi>` via the trace-overlap form
    /// `(1/n^2) sum_ij |Tr(V_j^dagger V_i)|^2 / d^2`, never materializing
    /// the d^2-dimensional output. Always at least `1/n`.
    pub fn phi_overlap(&self) -> f64 {
        let n = self.n();
        let d2 = (self.d * self.d) as f64;
        let mut acc = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let t: C64 = self.unitaries[i]
                    .iter()
                    .zip(self.unitaries[j].iter())
                    .map(|(a, b)| b.conj() * a)
                    .sum();
                acc += t.norm_sqr() / d2;
            }
        }
        acc / (n * n) as f64
    }

    /// Product-channel output on a pure input, the double sum over both
    /// unitary families (shared with the generic Kraus route).
    pub fn apply_product_pure(
        &self,
        other: &RandomUnitaryChannel,
        psi: &PureState,
    ) -> Result<DensityOperator> {
        apply_product_to_state(self, other, psi)
    }
}

impl QuantumChannel for RandomUnitaryChannel {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.d
    }

    fn kraus_ops(&self) -> Vec<Array2<C64>> {
        let w = 1.0 / (self.n() as f64).sqrt();
        self.unitaries.iter().map(|u| u.mapv(|z| z * w)).collect()
    }

    fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.d {
            return Err(Error::DimMismatch {
                expected: self.d,
                found: rho.dim(),
            });
        }
        let mut acc = Array2::zeros((self.d, self.d));
        for u in &self.unitaries {
            let t = linalg::mm(&u.view(), &rho.matrix().view());
            acc += &linalg::mm_adj_r(&t.view(), &u.view());
        }
        acc.mapv_inplace(|z| z / self.n() as f64);
        Ok(DensityOperator::from_trusted(acc))
    }

    fn apply_pure_vec(&self, psi: &ArrayView1<C64>) -> Array2<C64> {
        // Columns w_i = V_i psi, then rho = (1/n) W W^dagger.
        let n = self.n();
        let psi_col = column(psi);
        let mut w = Array2::zeros((self.d, n));
        for (i, u) in self.unitaries.iter().enumerate() {
            let wi = linalg::mm(&u.view(), &psi_col.view());
            w.column_mut(i).assign(&wi.column(0));
        }
        let mut rho = linalg::mm_adj_r(&w.view(), &w.view());
        rho.mapv_inplace(|z| z / n as f64);
        rho
    }

    fn adjoint_apply_vec(&self, y: &ArrayView2<C64>, psi: &ArrayView1<C64>) -> Array1<C64> {
        let psi_col = column(psi);
        let mut acc = Array2::zeros((self.d, 1));
        for u in &self.unitaries {
            let w = linalg::mm(&u.view(), &psi_col.view());
            let yw = linalg::mm(y, &w.view());
            acc += &linalg::mm_adj_l(&u.view(), &yw.view());
        }
        acc.mapv_inplace(|z| z / self.n() as f64);
        acc.index_axis(Axis(1), 0).to_owned()
    }
}

/// `rho -> Tr_B[V rho V^dagger]` for an isometry `V: S -> A (x) B`.
#[derive(Debug, Clone)]
pub struct StinespringChannel {
    isometry: Array2<C64>,
    dims: BipartiteDims,
    dim_s: usize,
}

impl StinespringChannel {
    pub fn new(isometry: Array2<C64>, dims: BipartiteDims) -> Result<Self> {
        let dim_s = isometry.ncols();
        if isometry.nrows() != dims.total() {
            return Err(Error::DimMismatch {
                expected: dims.total(),
                found: isometry.nrows(),
            });
        }
        if dim_s < 1 || dim_s > dims.total() {
            return Err(Error::InvalidParameter {
                name: "dim_s",
                value: dim_s as f64,
                reason: "must satisfy 1 <= dim_s <= dim_a * dim_b",
            });
        }
        let defect = crate::ensembles::isometry_defect(&isometry.view());
        if defect > HERMITICITY_TOL {
            return Err(Error::NotIsometry { defect });
        }
        Ok(Self {
            isometry,
            dims,
            dim_s,
        })
    }

    /// Channel from a uniformly random subspace of dimension `dim_s`.
    pub fn sample<R: rand::Rng + ?Sized>(
        rng: &mut R,
        dims: BipartiteDims,
        dim_s: usize,
    ) -> Result<Self> {
        let v = random_isometry(rng, dim_s, dims)?;
        Ok(Self {
            isometry: v,
            dims,
            dim_s,
        })
    }

    /// The identity channel on `dim` (trivial environment).
    pub fn identity(dim: usize) -> Result<Self> {
        let dims = BipartiteDims::new(dim, 1)?;
        let v = Array2::from_shape_fn((dim, dim), |(i, j)| {
            C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        Self::new(v, dims)
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn isometry(&self) -> &Array2<C64> {
        &self.isometry
    }

    /// Entrywise complex conjugate channel.
    pub fn conjugate(&self) -> Self {
        Self {
            isometry: self.isometry.mapv(|z| z.conj()),
            dims: self.dims,
            dim_s: self.dim_s,
        }
    }

    /// Product-channel output on a pure input without materializing a
    /// superoperator: lift through `V_1 (x) V_2`, then trace out both
    /// environment factors by regrouping indices and forming one Gram
    /// product.
    pub fn apply_product_pure(
        &self,
        other: &StinespringChannel,
        psi: &PureState,
    ) -> Result<DensityOperator> {
        let (s1, s2) = (self.dim_s, other.dim_s);
        if psi.dim() != s1 * s2 {
            return Err(Error::DimMismatch {
                expected: s1 * s2,
                found: psi.dim(),
            });
        }
        let (a1, b1) = (self.dims.dim_a(), self.dims.dim_b());
        let (a2, b2) = (other.dims.dim_a(), other.dims.dim_b());
        guard_product_dims(a1 * a2, b1 * b2)?;
        // psi reshaped to S1 x S2, lifted to (A1 B1) x (A2 B2).
        let psi_mat = psi
            .amplitudes()
            .to_owned()
            .into_shape((s1, s2))
            .expect("input reshape");
        let t = linalg::mm(&self.isometry.view(), &psi_mat.view());
        let m = linalg::mm_t_r(&t.view(), &other.isometry.view());
        // Regroup (a1 b1)(a2 b2) -> (a1 a2)(b1 b2) and trace out B1 B2.
        let mut k = Array2::zeros((a1 * a2, b1 * b2));
        for ia1 in 0..a1 {
            for ib1 in 0..b1 {
                for ia2 in 0..a2 {
                    for ib2 in 0..b2 {
                        k[[ia1 * a2 + ia2, ib1 * b2 + ib2]] =
                            m[[ia1 * b1 + ib1, ia2 * b2 + ib2]];
                    }
                }
            }
        }
        let rho = linalg::mm_adj_r(&k.view(), &k.view());
        Ok(DensityOperator::from_trusted(rho))
    }
}

impl QuantumChannel for StinespringChannel {
    fn input_dim(&self) -> usize {
        self.dim_s
    }

    fn output_dim(&self) -> usize {
        self.dims.dim_a()
    }

    fn kraus_ops(&self) -> Vec<Array2<C64>> {
        let (a, b) = (self.dims.dim_a(), self.dims.dim_b());
        (0..b)
            .map(|kb| {
                Array2::from_shape_fn((a, self.dim_s), |(ka, s)| self.isometry[[ka * b + kb, s]])
            })
            .collect()
    }

    fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.dim_s {
            return Err(Error::DimMismatch {
                expected: self.dim_s,
                found: rho.dim(),
            });
        }
        let vr = linalg::mm(&self.isometry.view(), &rho.matrix().view());
        let lifted = linalg::mm_adj_r(&vr.view(), &self.isometry.view());
        let reduced = crate::tensor::partial_trace_matrix(&lifted.view(), self.dims, Keep::A)?;
        Ok(DensityOperator::from_trusted(reduced))
    }

    fn apply_pure_vec(&self, psi: &ArrayView1<C64>) -> Array2<C64> {
        let psi_col = column(psi);
        let w = linalg::mm(&self.isometry.view(), &psi_col.view());
        let m = w
            .index_axis(Axis(1), 0)
            .to_owned()
            .into_shape((self.dims.dim_a(), self.dims.dim_b()))
            .expect("lift reshape");
        linalg::mm_adj_r(&m.view(), &m.view())
    }

    fn adjoint_apply_vec(&self, y: &ArrayView2<C64>, psi: &ArrayView1<C64>) -> Array1<C64> {
        // V^dagger (Y (x) I_B) V psi, applied factor-wise.
        let psi_col = column(psi);
        let w = linalg::mm(&self.isometry.view(), &psi_col.view());
        let m = w
            .index_axis(Axis(1), 0)
            .to_owned()
            .into_shape((self.dims.dim_a(), self.dims.dim_b()))
            .expect("lift reshape");
        let ym = linalg::mm(y, &m.view());
        let flat = ym
            .into_shape(self.dims.total())
            .expect("flatten")
            .insert_axis(Axis(1));
        let out = linalg::mm_adj_l(&self.isometry.view(), &flat.view());
        out.index_axis(Axis(1), 0).to_owned()
    }

    fn apply_pure_batch(&self, psis: &ArrayView2<C64>) -> Vec<Array2<C64>> {
        let lifted = linalg::mm(&self.isometry.view(), psis);
        let (a, b) = (self.dims.dim_a(), self.dims.dim_b());
        (0..psis.ncols())
            .map(|c| {
                let m = lifted
                    .column(c)
                    .to_owned()
                    .into_shape((a, b))
                    .expect("lift reshape");
                linalg::mm_adj_r(&m.view(), &m.view())
            })
            .collect()
    }
}

fn guard_product_dims(out_dim: usize, env_dim: usize) -> Result<()> {
    if out_dim > MAX_OPERATOR_DIM {
        return Err(Error::DimOverflow {
            dim: out_dim,
            max: MAX_OPERATOR_DIM,
        });
    }
    let lifted = out_dim.checked_mul(env_dim).ok_or(Error::DimOverflow {
        dim: usize::MAX,
        max: MAX_OPERATOR_DIM * MAX_OPERATOR_DIM,
    })?;
    if lifted > MAX_OPERATOR_DIM * MAX_OPERATOR_DIM {
        return Err(Error::DimOverflow {
            dim: lifted,
            max: MAX_OPERATOR_DIM * MAX_OPERATOR_DIM,
        });
    }
    Ok(())
}

const PRODUCT_CHUNK: usize = 256;

/// `(N1 (x) N2)(|psi><psi|)` on `A1 (x) A2` for any pair of channels,
/// accumulated over Kraus pairs in fixed-size blocks; for two random
/// unitary channels this is exactly the `n^2` double sum.
pub fn apply_product_to_state<C1, C2>(ch1: &C1, ch2: &C2, psi: &PureState) -> Result<DensityOperator>
where
    C1: QuantumChannel + ?Sized,
    C2: QuantumChannel + ?Sized,
{
    let (s1, s2) = (ch1.input_dim(), ch2.input_dim());
    if psi.dim() != s1 * s2 {
        return Err(Error::DimMismatch {
            expected: s1 * s2,
            found: psi.dim(),
        });
    }
    let (o1, o2) = (ch1.output_dim(), ch2.output_dim());
    let out_dim = o1 * o2;
    guard_product_dims(out_dim, 1)?;
    let psi_mat = psi
        .amplitudes()
        .to_owned()
        .into_shape((s1, s2))
        .expect("input reshape");
    let kraus1 = ch1.kraus_ops();
    let kraus2 = ch2.kraus_ops();
    // Precompute E_k Psi once per left Kraus operator.
    let left: Vec<Array2<C64>> = kraus1
        .iter()
        .map(|e| linalg::mm(&e.view(), &psi_mat.view()))
        .collect();
    let mut rho = Array2::zeros((out_dim, out_dim));
    let mut block = Array2::zeros((out_dim, PRODUCT_CHUNK));
    let mut filled = 0usize;
    for t in &left {
        for f in &kraus2 {
            let m = linalg::mm_t_r(&t.view(), &f.view());
            let flat = m.into_shape(out_dim).expect("vec reshape");
            block.column_mut(filled).assign(&flat);
            filled += 1;
            if filled == PRODUCT_CHUNK {
                rho += &linalg::mm_adj_r(&block.view(), &block.view());
                block.fill(C64::new(0.0, 0.0));
                filled = 0;
            }
        }
    }
    if filled > 0 {
        let partial = block.slice(ndarray::s![.., 0..filled]);
        rho += &linalg::mm_adj_r(&partial, &partial);
    }
    Ok(DensityOperator::from_trusted(rho))
}

/// `<Phi| rho |Phi>` for the maximally entangled state on `d (x) d`.
pub fn phi_expectation(rho: &DensityOperator, d: usize) -> Result<f64> {
    if rho.dim() != d * d {
        return Err(Error::DimMismatch {
            expected: d * d,
            found: rho.dim(),
        });
    }
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..d {
        for l in 0..d {
            acc += rho.matrix()[[k * d + k, l * d + l]];
        }
    }
    Ok(acc.re / d as f64)
}

/// Result of the randomizing-deviation search: a lower bound on
/// `sup_rho d * || N(rho) - I/d ||_inf` and the input realizing it.
#[derive(Debug, Clone)]
pub struct DeviationEstimate {
    pub epsilon_hat: f64,
    pub witness: PureState,
}

fn deviation_value(ch: &RandomUnitaryChannel, psi: &ArrayView1<C64>) -> (f64, f64) {
    // Returns (d * ||N(psi) - I/d||_inf, signed extreme eigenvalue).
    let d = ch.d();
    let mut e = ch.apply_pure_vec(psi);
    for i in 0..d {
        e[[i, i]] -= C64::new(1.0 / d as f64, 0.0);
    }
    let vals = linalg::eigh_values(&e.view()).expect("deviation eigensolve");
    let lo = vals[0];
    let hi = vals[d - 1];
    if -lo > hi {
        ((d as f64) * (-lo), lo)
    } else {
        ((d as f64) * hi, hi)
    }
}

/// Lower-bound estimate of the randomizing deviation by sampled pure
/// inputs plus alternating ascent: fix the input and take the extreme
/// eigenvector `y` of `N(psi) - I/d`; fix `y` and maximize
/// `<y|N(psi)|y>` over inputs, which is a top-eigenvector problem of the
/// adjoint map; repeat until the value stops improving.
pub fn randomizing_deviation(
    ch: &RandomUnitaryChannel,
    cfg: &EstimatorConfig,
    seeds: &SeededRng,
) -> Result<DeviationEstimate> {
    cfg.validate()?;
    let d = ch.d();
    let mut candidates: Vec<(f64, Array1<C64>)> = (0..cfg.samples)
        .map(|i| {
            let mut rng = seeds.lane(i as u64).rng();
            let g = crate::ensembles::gaussian_vector(&mut rng, d);
            let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let psi = g.mapv(|z| z / norm);
            let (value, _) = deviation_value(ch, &psi.view());
            (value, psi)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    candidates.truncate(cfg.restarts.max(1));

    let mut best_value = 0.0f64;
    let mut best_state = candidates[0].1.clone();
    for (value0, psi0) in candidates {
        let mut psi = psi0;
        let mut value = value0;
        for _ in 0..cfg.max_iters {
            // Extreme eigenvector of N(psi) - I/d.
            let mut e = ch.apply_pure_vec(&psi.view());
            for i in 0..d {
                e[[i, i]] -= C64::new(1.0 / d as f64, 0.0);
            }
            let (vals, vecs) = linalg::eigh(&e.view()).expect("deviation eigensolve");
            let (idx, sign) = if -vals[0] > vals[d - 1] {
                (0usize, -1.0f64)
            } else {
                (d - 1, 1.0f64)
            };
            let y = vecs.column(idx).to_owned();
            // Maximize sign * <y|N(psi)|y> over psi: top eigenvector of
            // sign * N^dagger(|y><y|), assembled as a Gram product of the
            // back-propagated vectors u_i = V_i^dagger y.
            let y_col = y.insert_axis(Axis(1));
            let n = ch.n();
            let mut u = Array2::zeros((d, n));
            for (i, v) in ch.unitaries().iter().enumerate() {
                let ui = linalg::mm_adj_l(&v.view(), &y_col.view());
                u.column_mut(i).assign(&ui.column(0));
            }
            let mut h = linalg::mm_adj_r(&u.view(), &u.view());
            h.mapv_inplace(|z| z * C64::new(sign / n as f64, 0.0));
            let (_, hvecs) = linalg::eigh(&h.view()).expect("ascent eigensolve");
            let psi_next = hvecs.column(d - 1).to_owned();
            let (value_next, _) = deviation_value(ch, &psi_next.view());
            if value_next > value + cfg.step_tol.min(1e-12) {
                value = value_next;
                psi = psi_next;
            } else {
                if value_next > value {
                    value = value_next;
                    psi = psi_next;
                }
                break;
            }
        }
        if value > best_value {
            best_value = value;
            best_state = psi;
        }
    }
    Ok(DeviationEstimate {
        epsilon_hat: best_value,
        witness: PureState::new(best_state)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::gaussian_vector;
    use crate::tensor::{eigen_spectrum, make_max_entangled};

    fn random_pure(seed: u64, dim: usize) -> PureState {
        let mut rng = SeededRng::new(seed).rng();
        PureState::from_unnormalized(gaussian_vector(&mut rng, dim)).unwrap()
    }

    #[test]
    fn single_unitary_preserves_purity() {
        let mut rng = SeededRng::new(1).rng();
        let ch = RandomUnitaryChannel::sample(&mut rng, 5, 1).unwrap();
        let psi = random_pure(2, 5);
        let out = ch.apply(&psi.projector()).unwrap();
        assert!((out.purity() - 1.0).abs() < 1e-10);
        assert!((out.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pauli_mixture_randomizes_exactly() {
        let ch = RandomUnitaryChannel::pauli_qubit();
        for seed in 0..5 {
            let psi = random_pure(10 + seed, 2);
            let out = ch.apply(&psi.projector()).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 0.5 } else { 0.0 };
                    assert!((out.matrix()[[i, j]] - C64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn haar_mixture_concentrates_towards_maximally_mixed() {
        // At n = 64, d = 8, outputs should be within 1/d of I/d in the
        // rescaled sup norm for nearly every seed.
        let mut hits = 0;
        let trials = 100;
        for seed in 0..trials {
            let seeds = SeededRng::new(900 + seed as u64);
            let ch = RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), 8, 64).unwrap();
            let psi = random_pure(3000 + seed as u64, 8);
            let mut e = ch.apply_pure_vec(&psi.amplitudes().view());
            for i in 0..8 {
                e[[i, i]] -= C64::new(1.0 / 8.0, 0.0);
            }
            let vals = linalg::eigh_values(&e.view()).unwrap();
            let sup = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if sup * 8.0 < 1.0 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/{trials} trials concentrated");
    }

    #[test]
    fn trace_and_positivity_preserved_over_random_instances() {
        for seed in 0..10u64 {
            let seeds = SeededRng::new(40 + seed);
            let ch = RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), 6, 5).unwrap();
            let mut rng = seeds.stream(1).rng();
            let g = gaussian_vector(&mut rng, 36);
            // A mixed input from a random purification.
            let m = Array2::from_shape_fn((6, 6), |(i, j)| g[i * 6 + j]);
            let gram = linalg::mm_adj_r(&m.view(), &m.view());
            let trace: f64 = gram.diag().iter().map(|z| z.re).sum();
            let rho = DensityOperator::new(gram.mapv(|z| z / trace)).unwrap();
            let out = ch.apply(&rho).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-10);
            let min = linalg::eigh_values(&out.matrix().view()).unwrap()[0];
            assert!(min >= -1e-9);

            let dims = BipartiteDims::new(3, 4).unwrap();
            let st = StinespringChannel::sample(&mut seeds.stream(2).rng(), dims, 7).unwrap();
            let psi = random_pure(700 + seed, 7);
            let out = st.apply(&psi.projector()).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-10);
            let min = linalg::eigh_values(&out.matrix().view()).unwrap()[0];
            assert!(min >= -1e-9);
        }
    }

    #[test]
    fn conjugation_is_involutive_and_covariant() {
        let seeds = SeededRng::new(77);
        let ch = RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), 4, 3).unwrap();
        let twice = ch.conjugate().conjugate();
        for (a, b) in ch.unitaries().iter().zip(twice.unitaries()) {
            assert_eq!(a, b, "double conjugation must be bitwise identity");
        }
        // conj(N)(conj(rho)) = conj(N(rho)).
        let psi = random_pure(78, 4);
        let rho = psi.projector();
        let lhs = ch.conjugate().apply(&rho.conjugate()).unwrap();
        let rhs = ch.apply(&rho).unwrap().conjugate();
        for i in 0..4 {
            for j in 0..4 {
                assert!((lhs.matrix()[[i, j]] - rhs.matrix()[[i, j]]).norm() < 1e-12);
            }
        }

        let dims = BipartiteDims::new(2, 3).unwrap();
        let st = StinespringChannel::sample(&mut seeds.stream(1).rng(), dims, 4).unwrap();
        let psi = random_pure(79, 4);
        let rho = psi.projector();
        let lhs = st.conjugate().apply(&rho.conjugate()).unwrap();
        let rhs = st.apply(&rho).unwrap().conjugate();
        for i in 0..2 {
            for j in 0..2 {
                assert!((lhs.matrix()[[i, j]] - rhs.matrix()[[i, j]]).norm() < 1e-12);
            }
        }
        // Real-entried channel is unchanged by conjugation.
        let pauli_x_only = RandomUnitaryChannel::new(vec![ndarray::arr2(&[
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])])
        .unwrap();
        assert_eq!(
            pauli_x_only.unitaries()[0],
            pauli_x_only.conjugate().unitaries()[0]
        );
    }

    #[test]
    fn stinespring_constant_channel_ignores_input() {
        let dims = BipartiteDims::new(2, 2).unwrap();
        let ch = StinespringChannel::sample(&mut SeededRng::new(5).rng(), dims, 1).unwrap();
        let out1 = ch.apply(&DensityOperator::maximally_mixed(1)).unwrap();
        let psi = PureState::basis_state(1, 0);
        let out2 = ch.apply(&psi.projector()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((out1.matrix()[[i, j]] - out2.matrix()[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn stinespring_unitary_case_fixes_maximally_mixed() {
        let dims = BipartiteDims::new(4, 1).unwrap();
        let u = haar_unitary(&mut SeededRng::new(6).rng(), 4);
        let ch = StinespringChannel::new(u, dims).unwrap();
        let out = ch.apply(&DensityOperator::maximally_mixed(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((out.matrix()[[i, j]] - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn kraus_ops_complete_for_both_families() {
        let seeds = SeededRng::new(91);
        let dims = BipartiteDims::new(3, 4).unwrap();
        let st = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 5).unwrap();
        let ru = RandomUnitaryChannel::sample(&mut seeds.stream(1).rng(), 4, 6).unwrap();
        for (kraus, dim) in [(st.kraus_ops(), 5usize), (ru.kraus_ops(), 4usize)] {
            let mut acc = Array2::<C64>::zeros((dim, dim));
            for e in &kraus {
                acc += &linalg::mm_adj_l(&e.view(), &e.view());
            }
            for i in 0..dim {
                for j in 0..dim {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((acc[[i, j]] - C64::new(want, 0.0)).norm() < 1e-10);
                }
            }
        }
        // Kraus route reproduces the direct application.
        let psi = random_pure(92, 5);
        let direct = st.apply(&psi.projector()).unwrap();
        let mut via_kraus = Array2::<C64>::zeros((3, 3));
        let psi_col = psi.amplitudes().to_owned().insert_axis(Axis(1));
        for e in st.kraus_ops() {
            let w = linalg::mm(&e.view(), &psi_col.view());
            via_kraus += &linalg::mm_adj_r(&w.view(), &w.view());
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((direct.matrix()[[i, j]] - via_kraus[[i, j]]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn product_of_identity_channels_is_identity_on_phi() {
        let id = StinespringChannel::identity(3).unwrap();
        let phi = make_max_entangled(3);
        let out = id.apply_product_pure(&id, &phi).unwrap();
        let expect = phi.projector();
        for i in 0..9 {
            for j in 0..9 {
                assert!((out.matrix()[[i, j]] - expect.matrix()[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn full_isometry_gives_pure_product_output() {
        // dim_s = dim_a * dim_b makes V unitary and the product output pure.
        let dims = BipartiteDims::new(3, 2).unwrap();
        let ch = StinespringChannel::sample(&mut SeededRng::new(8).rng(), dims, 6).unwrap();
        let phi = make_max_entangled(6);
        let out = ch.apply_product_pure(&ch.conjugate(), &phi).unwrap();
        assert!((out.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn specialized_and_kraus_product_routes_agree() {
        let seeds = SeededRng::new(17);
        let dims = BipartiteDims::new(3, 4).unwrap();
        let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 6).unwrap();
        let other = ch.conjugate();
        let psi = random_pure(18, 36);
        let fast = ch.apply_product_pure(&other, &psi).unwrap();
        let generic = apply_product_to_state(&ch, &other, &psi).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert!((fast.matrix()[[i, j]] - generic.matrix()[[i, j]]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn product_output_largest_eigenvalue_bound() {
        let dims = BipartiteDims::new(4, 4).unwrap();
        for seed in 0..5u64 {
            let ch =
                StinespringChannel::sample(&mut SeededRng::new(100 + seed).rng(), dims, 8).unwrap();
            let phi = make_max_entangled(8);
            let out = ch.apply_product_pure(&ch.conjugate(), &phi).unwrap();
            let spec = eigen_spectrum(&out).unwrap();
            let bound = 8.0 / 16.0;
            assert!(
                spec.lambda_max() >= bound - 1e-9,
                "seed {seed}: {} < {bound}",
                spec.lambda_max()
            );
            // The expectation in the maximally entangled output state also
            // witnesses the bound.
            let overlap = phi_expectation(&out, 4).unwrap();
            assert!(overlap >= bound - 1e-9);
        }
    }

    #[test]
    fn phi_overlap_cheap_form_matches_direct_and_lemma_floor() {
        for seed in 0..5u64 {
            let seeds = SeededRng::new(200 + seed);
            let (d, n) = (4usize, 3usize);
            let ch = RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), d, n).unwrap();
            let cheap = ch.phi_overlap();
            let phi = make_max_entangled(d);
            let out = ch.apply_product_pure(&ch.conjugate(), &phi).unwrap();
            let direct = phi_expectation(&out, d).unwrap();
            assert!((cheap - direct).abs() < 1e-9, "{cheap} vs {direct}");
            assert!(cheap >= 1.0 / n as f64 - 1e-9);
        }
    }

    #[test]
    fn deviation_estimator_on_exact_randomizer_and_single_unitary() {
        let cfg = EstimatorConfig {
            samples: 8,
            restarts: 4,
            max_iters: 30,
            step_tol: 1e-9,
        };
        let seeds = SeededRng::new(55);
        let pauli = RandomUnitaryChannel::pauli_qubit();
        let est = randomizing_deviation(&pauli, &cfg, &seeds.stream(1)).unwrap();
        assert!(est.epsilon_hat.abs() < 1e-9, "pauli: {}", est.epsilon_hat);

        for d in [3usize, 6] {
            let ch = RandomUnitaryChannel::sample(&mut seeds.stream(2).rng(), d, 1).unwrap();
            let est = randomizing_deviation(&ch, &cfg, &seeds.stream(3)).unwrap();
            assert!(
                (est.epsilon_hat - (d as f64 - 1.0)).abs() < 1e-9,
                "d={d}: {}",
                est.epsilon_hat
            );
        }
    }

    #[test]
    fn deviation_estimator_small_for_many_haar_unitaries() {
        // d = 32, n = 4096 is expensive; a scaled-down grid showing the
        // same concentration keeps the unit suite fast. The full-scale
        // check lives in the experiment commands.
        let cfg = EstimatorConfig {
            samples: 8,
            restarts: 3,
            max_iters: 20,
            step_tol: 1e-9,
        };
        let mut hits = 0;
        let trials = 10;
        for seed in 0..trials {
            let seeds = SeededRng::new(300 + seed as u64);
            let ch = RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), 16, 1024).unwrap();
            let est = randomizing_deviation(&ch, &cfg, &seeds.stream(1)).unwrap();
            if est.epsilon_hat < 1.0 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "only {hits}/{trials} below epsilon 1");
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let seeds = SeededRng::new(400);
        let ch = RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), 3, 2).unwrap();
        assert!(ch.apply(&DensityOperator::maximally_mixed(4)).is_err());
        let dims = BipartiteDims::new(2, 2).unwrap();
        let st = StinespringChannel::sample(&mut seeds.stream(1).rng(), dims, 3).unwrap();
        assert!(st.apply(&DensityOperator::maximally_mixed(2)).is_err());
        let phi = make_max_entangled(2);
        assert!(st.apply_product_pure(&st.conjugate(), &phi).is_err());
    }
}
