//! Fourth-moment Weingarten calculus for Haar unitaries, and the exact
//! Haar average of the two-copy output purity
//! `E Tr[((N (x) conj(N))(Phi))^2]` over random isometry channels.
//!
//! Moment sums are organized by permutation pairs `(sigma, tau)` acting on
//! the four slots of the integrand: `sigma` pairs the row (input-space)
//! indices, whose wiring is the identity, and `tau` pairs the column
//! indices, whose `A`- and `B`-factor wirings are the fixed double
//! transpositions in `ContractionWiring`. Each pair contributes
//!
//! ```text
//! dim_s^cycles(sigma) * dim_a^cycles(col_a . tau) * dim_b^cycles(col_b . tau)
//!     * Wg(class(sigma tau^-1), dim_a * dim_b) / dim_s^2
//! ```
//!
//! The composition orientation is pinned by two exact anchors (the value 1
//! at `dim_s = dim_a * dim_b`, and the dominant stack term) and by the
//! Monte Carlo cross-check in the test suite.

use ndarray::prelude::*;
use rayon::prelude::*;

use crate::ensembles::{random_isometry, SeededRng};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::BipartiteDims;
use crate::C64;

/// A permutation of four slots; `images[k]` is where slot `k` goes.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub struct PermutationS4 {
    images: [usize; 4],
}

impl PermutationS4 {
    pub fn new(images: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &i in &images {
            if i >= 4 || seen[i] {
                return Err(Error::InvalidParameter {
                    name: "images",
                    value: i as f64,
                    reason: "not a bijection on four slots",
                });
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity() -> Self {
        Self {
            images: [0, 1, 2, 3],
        }
    }

    /// All 24 elements, in a fixed deterministic order.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(24);
        for a in 0..4 {
            for b in 0..4 {
                if b == a {
                    continue;
                }
                for c in 0..4 {
                    if c == a || c == b {
                        continue;
                    }
                    let d = 6 - a - b - c;
                    out.push(Self {
                        images: [a, b, c, d],
                    });
                }
            }
        }
        out
    }

    pub fn images(&self) -> [usize; 4] {
        self.images
    }

    /// `self . other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut images = [0usize; 4];
        for k in 0..4 {
            images[k] = self.images[other.images[k]];
        }
        Self { images }
    }

    pub fn inverse(&self) -> Self {
        let mut images = [0usize; 4];
        for k in 0..4 {
            images[self.images[k]] = k;
        }
        Self { images }
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_lengths().len()
    }

    /// Cycle lengths, longest first.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = [false; 4];
        let mut lengths = Vec::new();
        for start in 0..4 {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.images[k];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }

    /// Minimal number of transpositions, `4 - cycle_count`.
    pub fn transposition_distance(&self) -> usize {
        4 - self.cycle_count()
    }

    pub fn conjugacy_class(&self) -> ConjClassS4 {
        match self.cycle_lengths().as_slice() {
            [1, 1, 1, 1] => ConjClassS4::Identity,
            [2, 1, 1] => ConjClassS4::Transposition,
            [2, 2] => ConjClassS4::DoubleTransposition,
            [3, 1] => ConjClassS4::ThreeCycle,
            [4] => ConjClassS4::FourCycle,
            other => unreachable!("impossible cycle type {other:?}"),
        }
    }
}

/// The five conjugacy classes of the symmetric group on four slots.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum ConjClassS4 {
    Identity,
    Transposition,
    DoubleTransposition,
    ThreeCycle,
    FourCycle,
}

impl ConjClassS4 {
    pub const ALL: [ConjClassS4; 5] = [
        ConjClassS4::Identity,
        ConjClassS4::Transposition,
        ConjClassS4::DoubleTransposition,
        ConjClassS4::ThreeCycle,
        ConjClassS4::FourCycle,
    ];

    fn index(&self) -> usize {
        match self {
            ConjClassS4::Identity => 0,
            ConjClassS4::Transposition => 1,
            ConjClassS4::DoubleTransposition => 2,
            ConjClassS4::ThreeCycle => 3,
            ConjClassS4::FourCycle => 4,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ConjClassS4::Identity => 1,
            ConjClassS4::Transposition => 6,
            ConjClassS4::DoubleTransposition => 3,
            ConjClassS4::ThreeCycle => 8,
            ConjClassS4::FourCycle => 6,
        }
    }
}

/// The fixed index pairings of the two-copy output purity integrand.
#[derive(Debug, Copy, Clone)]
pub struct ContractionWiring {
    pub row: PermutationS4,
    pub col_a: PermutationS4,
    pub col_b: PermutationS4,
}

impl ContractionWiring {
    /// Row wiring identity; `A` columns paired (1 4)(2 3); `B` columns
    /// paired (1 2)(3 4).
    pub fn output_purity() -> Self {
        Self {
            row: PermutationS4::identity(),
            col_a: PermutationS4::new([3, 2, 1, 0]).expect("fixed wiring"),
            col_b: PermutationS4::new([1, 0, 3, 2]).expect("fixed wiring"),
        }
    }
}

/// Weingarten values for fourth moments at total dimension `d`, one value
/// per conjugacy class, solved from the 24 x 24 Gram system
/// `sum_sigma d^cycles(sigma tau^-1) Wg(sigma) = [tau = id]`.
#[derive(Debug, Clone)]
pub struct WeingartenTable {
    d: usize,
    values: [f64; 5],
    residual: f64,
}

impl WeingartenTable {
    pub fn new(d: usize) -> Result<Self> {
        if d < 4 {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d as f64,
                reason: "the fourth-moment Gram matrix is singular below dimension 4",
            });
        }
        let perms = PermutationS4::all();
        let dd = d as f64;
        let mut gram = Array2::<f64>::zeros((24, 24));
        for (i, sigma) in perms.iter().enumerate() {
            for (j, tau) in perms.iter().enumerate() {
                let cycles = sigma.compose(&tau.inverse()).cycle_count();
                gram[[i, j]] = dd.powi(cycles as i32);
            }
        }
        let mut rhs = vec![0.0f64; 24];
        let id_pos = perms
            .iter()
            .position(|p| *p == PermutationS4::identity())
            .expect("identity present");
        rhs[id_pos] = 1.0;
        let wg = linalg::solve_symmetric(&gram, &rhs)?;

        let mut residual = 0.0f64;
        for i in 0..24 {
            let mut acc = 0.0f64;
            for j in 0..24 {
                acc += gram[[i, j]] * wg[j];
            }
            residual = residual.max((acc - rhs[i]).abs());
        }

        // Collapse to classes; conjugate permutations must agree.
        let mut values = [f64::NAN; 5];
        let mut spread = 0.0f64;
        for (i, p) in perms.iter().enumerate() {
            let slot = &mut values[p.conjugacy_class().index()];
            if slot.is_nan() {
                *slot = wg[i];
            } else {
                spread = spread.max((*slot - wg[i]).abs());
            }
        }
        if residual > 1e-10 || spread > 1e-10 * values[0].abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidParameter {
                name: "gram residual",
                value: residual.max(spread),
                reason: "Weingarten solve did not converge to tolerance",
            });
        }
        Ok(Self {
            d,
            values,
            residual,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn value(&self, class: ConjClassS4) -> f64 {
        self.values[class.index()]
    }

    pub fn of_perm(&self, p: &PermutationS4) -> f64 {
        self.value(p.conjugacy_class())
    }
}

/// Second-moment Weingarten closed forms, the hand-checkable validation
/// path: `Wg(e) = 1/(d^2 - 1)`, `Wg(swap) = -1/(d (d^2 - 1))`.
pub fn weingarten_s2(d: usize) -> (f64, f64) {
    let dd = d as f64;
    let e = 1.0 / (dd * dd - 1.0);
    (e, -e / dd)
}

/// Exact Haar average of `Tr[((N (x) conj(N))(Phi))^2]` over isometry
/// channels `S -> A (x) B` of the given dimensions, by the 576-term
/// `(sigma, tau)` moment sum.
pub fn exact_avg_purity(dims: BipartiteDims, dim_s: usize) -> Result<f64> {
    let total = dims.total();
    if dim_s < 1 || dim_s > total {
        return Err(Error::InvalidParameter {
            name: "dim_s",
            value: dim_s as f64,
            reason: "must satisfy 1 <= dim_s <= dim_a * dim_b",
        });
    }
    let table = WeingartenTable::new(total)?;
    let wiring = ContractionWiring::output_purity();
    let perms = PermutationS4::all();
    let (s, a, b) = (dim_s as f64, dims.dim_a() as f64, dims.dim_b() as f64);
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for sigma in &perms {
        let s_pow = s.powi(sigma.cycle_count() as i32);
        for tau in &perms {
            let a_pow = a.powi(wiring.col_a.compose(tau).cycle_count() as i32);
            let b_pow = b.powi(wiring.col_b.compose(tau).cycle_count() as i32);
            let wg = table.of_perm(&sigma.compose(&tau.inverse()));
            let term = s_pow * a_pow * b_pow * wg;
            // Kahan accumulation; the terms cancel by orders of magnitude.
            let y = term - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
    }
    Ok(acc / (s * s))
}

/// Monte Carlo mean and standard error.
#[derive(Debug, Copy, Clone)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo oracle for `exact_avg_purity`: purity of
/// `(N (x) conj(N))(Phi)` averaged over seeded random isometries. One lane
/// per sample, reduced in index order.
pub fn mc_avg_purity(
    dims: BipartiteDims,
    dim_s: usize,
    samples: usize,
    seeds: &SeededRng,
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least 2 samples for a standard error",
        });
    }
    if dim_s < 1 || dim_s > dims.total() {
        return Err(Error::InvalidParameter {
            name: "dim_s",
            value: dim_s as f64,
            reason: "must satisfy 1 <= dim_s <= dim_a * dim_b",
        });
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.lane(i as u64).rng();
            let v = random_isometry(&mut rng, dim_s, dims).expect("validated dims");
            sample_purity(&v, dims, dim_s)
        })
        .collect();
    let mean = kahan_sum(values.iter().copied()) / samples as f64;
    let var = kahan_sum(values.iter().map(|&x| (x - mean) * (x - mean)))
        / ((samples - 1) as f64 * samples as f64);
    Ok(McEstimate {
        mean,
        stderr: var.sqrt(),
    })
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let y = v - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc
}

/// `Tr[((N (x) conj(N))(Phi))^2]` for one isometry, via the projector onto
/// its image: the lifted state is `vec(V V^dagger) / sqrt(dim_s)`, so the
/// regrouped matrix `K[(a1 a2), (b1 b2)] = P[(a1 b1), (a2 b2)] / sqrt(s)`
/// gives the purity as `|| K^dagger K ||_F^2`.
fn sample_purity(v: &Array2<C64>, dims: BipartiteDims, dim_s: usize) -> f64 {
    let (a, b) = (dims.dim_a(), dims.dim_b());
    let p = linalg::mm_adj_r(&v.view(), &v.view());
    let scale = 1.0 / (dim_s as f64).sqrt();
    let mut k = Array2::zeros((a * a, b * b));
    for a1 in 0..a {
        for b1 in 0..b {
            for a2 in 0..a {
                for b2 in 0..b {
                    k[[a1 * a + a2, b1 * b + b2]] = p[[a1 * b + b1, a2 * b + b2]] * scale;
                }
            }
        }
    }
    let gram = if a <= b {
        linalg::mm_adj_r(&k.view(), &k.view())
    } else {
        linalg::mm_adj_l(&k.view(), &k.view())
    };
    gram.iter().map(|z| z.norm_sqr()).sum()
}
