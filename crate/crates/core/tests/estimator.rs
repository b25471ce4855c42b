//! Minimum-output-entropy estimator behavior on channels whose minima are
//! known, plus the dense-sampling cross-check at figure scale.

use chanlab_core::channels::{QuantumChannel, StinespringChannel};
use chanlab_core::ensembles::SeededRng;
use chanlab_core::entropy::{min_output_entropy_estimate, EstimatorConfig, RenyiOrder};
use chanlab_core::linalg;
use chanlab_core::tensor::BipartiteDims;

fn small_cfg() -> EstimatorConfig {
    EstimatorConfig {
        samples: 64,
        restarts: 4,
        max_iters: 60,
        step_tol: 1e-7,
    }
}

#[test]
fn identity_channel_has_zero_minimum() {
    let ch = StinespringChannel::identity(5).unwrap();
    for p in [
        RenyiOrder::One,
        RenyiOrder::new(2.0).unwrap(),
        RenyiOrder::Infinity,
    ] {
        let est =
            min_output_entropy_estimate(&ch, p, &small_cfg(), &SeededRng::new(1).stream(1))
                .unwrap();
        assert!(est.hmin_hat.abs() < 1e-8, "p={p}: {}", est.hmin_hat);
    }
}

#[test]
fn constant_channel_reports_entropy_of_fixed_output() {
    // dim_s = 1: the channel sends its one input to a fixed state.
    let dims = BipartiteDims::new(3, 3).unwrap();
    let ch = StinespringChannel::sample(&mut SeededRng::new(2).rng(), dims, 1).unwrap();
    let p = RenyiOrder::new(2.0).unwrap();
    let est =
        min_output_entropy_estimate(&ch, p, &small_cfg(), &SeededRng::new(2).stream(1)).unwrap();
    let fixed = ch.apply_pure_vec(
        &ndarray::Array1::from_elem(1, chanlab_core::C64::new(1.0, 0.0)).view(),
    );
    let purity: f64 = fixed.iter().map(|z| z.norm_sqr()).sum();
    let want = -purity.ln();
    assert!((est.hmin_hat - want).abs() < 1e-10);
    assert!((est.sampling_min - est.descent_min).abs() < 1e-10);
}

#[test]
fn estimator_stays_within_entropy_range() {
    let seeds = SeededRng::new(3);
    let dims = BipartiteDims::new(4, 5).unwrap();
    let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 10).unwrap();
    assert!(min_output_entropy_estimate(
        &ch,
        RenyiOrder::new(0.5).unwrap(),
        &small_cfg(),
        &seeds.stream(7)
    )
    .is_err());
    for p in [
        RenyiOrder::One,
        RenyiOrder::new(1.5).unwrap(),
        RenyiOrder::new(2.0).unwrap(),
        RenyiOrder::new(5.0).unwrap(),
        RenyiOrder::Infinity,
    ] {
        let est =
            min_output_entropy_estimate(&ch, p, &small_cfg(), &seeds.stream(7)).unwrap();
        assert!(est.hmin_hat >= -1e-8, "p={p}: {}", est.hmin_hat);
        assert!(
            est.hmin_hat <= (ch.output_dim() as f64).ln() + 1e-8,
            "p={p}: {}",
            est.hmin_hat
        );
        assert!(est.hmin_hat <= est.sampling_min + 1e-12);
    }
}

#[test]
fn estimator_is_deterministic_under_replay() {
    let seeds = SeededRng::new(4);
    let dims = BipartiteDims::new(3, 4).unwrap();
    let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 6).unwrap();
    let p = RenyiOrder::new(2.0).unwrap();
    let a = min_output_entropy_estimate(&ch, p, &small_cfg(), &seeds.stream(1)).unwrap();
    let b = min_output_entropy_estimate(&ch, p, &small_cfg(), &seeds.stream(1)).unwrap();
    assert_eq!(a.hmin_hat.to_bits(), b.hmin_hat.to_bits());
    assert_eq!(a.sampling_min.to_bits(), b.sampling_min.to_bits());
    assert_eq!(a.descent_min.to_bits(), b.descent_min.to_bits());
}

#[test]
fn gradient_matches_finite_differences() {
    // The descent direction comes from the analytic derivative; check it
    // against central differences along random tangent directions.
    let seeds = SeededRng::new(5);
    let dims = BipartiteDims::new(3, 4).unwrap();
    let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 6).unwrap();
    let mut rng = seeds.stream(1).rng();
    for &p in &[1.0, 1.6, 2.0, 3.0] {
        let order = RenyiOrder::new(p).unwrap();
        let psi_raw = chanlab_core::ensembles::gaussian_vector(&mut rng, 6);
        let norm = psi_raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi = psi_raw.mapv(|z| z / norm);
        let f = |v: &ndarray::Array1<chanlab_core::C64>| {
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let unit = v.mapv(|z| z / n);
            let rho = ch.apply_pure_vec(&unit.view());
            let vals = linalg::eigh_values(&rho.view()).unwrap();
            let clamped: Vec<f64> = vals.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            match order {
                RenyiOrder::One => -clamped
                    .iter()
                    .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
                    .sum::<f64>(),
                RenyiOrder::Finite(q) => {
                    clamped.iter().map(|&x| x.powf(q)).sum::<f64>().ln() / (1.0 - q)
                }
                RenyiOrder::Infinity => unreachable!(),
            }
        };
        // Analytic directional derivative via the estimator's gradient.
        let grad = chanlab_core::entropy::test_support::gradient(&ch, &psi.view(), order);
        let dir_raw = chanlab_core::ensembles::gaussian_vector(&mut rng, 6);
        let overlap: chanlab_core::C64 = psi
            .iter()
            .zip(dir_raw.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let dir = ndarray::Array1::from_shape_fn(6, |i| dir_raw[i] - overlap * psi[i]);
        let analytic: f64 = grad
            .iter()
            .zip(dir.iter())
            .map(|(g, t)| (g.conj() * t).re)
            .sum();
        let h = 1e-6;
        let plus = ndarray::Array1::from_shape_fn(6, |i| psi[i] + dir[i] * h);
        let minus = ndarray::Array1::from_shape_fn(6, |i| psi[i] - dir[i] * h);
        let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
        assert!(
            (analytic - numeric).abs() < 1e-5 * (1.0 + numeric.abs()),
            "p={p}: analytic {analytic} vs numeric {numeric}"
        );
    }
}

#[test]
fn figure_scale_sampling_concentrates_and_descent_digs_deeper() {
    // At (24, 24, 192), order 2, uniformly sampled inputs concentrate near
    // ln 12 and the dense-sampling minimum is stable in the sample count,
    // but the descent stage reaches genuinely lower-entropy outputs: the
    // ratio-1/3 subspace grazes product states with overlap near the
    // random-subspace edge value, giving outputs with one eigenvalue
    // around 0.66. Each claim is re-verified through an independent
    // evaluation path.
    let seeds = SeededRng::new(6);
    let dims = BipartiteDims::new(24, 24).unwrap();
    let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 192).unwrap();
    let p = RenyiOrder::new(2.0).unwrap();

    let oracle_cfg = EstimatorConfig {
        samples: 100_000,
        restarts: 1,
        max_iters: 1,
        step_tol: 1e30, // descent disabled: pure sampling oracle
    };
    let oracle = min_output_entropy_estimate(&ch, p, &oracle_cfg, &seeds.stream(1)).unwrap();

    let cfg = EstimatorConfig {
        samples: 10_000,
        restarts: 8,
        max_iters: 150,
        step_tol: 1e-6,
    };
    let est = min_output_entropy_estimate(&ch, p, &cfg, &seeds.stream(2)).unwrap();

    let floor = 24.0f64.ln() - 1.0;
    assert!(oracle.sampling_min >= floor, "oracle {}", oracle.sampling_min);
    assert!(est.sampling_min >= floor, "sampling {}", est.sampling_min);
    assert!(
        (oracle.sampling_min - est.sampling_min).abs() < 0.1,
        "oracle {} vs sampling stage {}",
        oracle.sampling_min,
        est.sampling_min
    );
    assert!(
        est.descent_min < est.sampling_min - 0.5,
        "descent {} vs sampling {}",
        est.descent_min,
        est.sampling_min
    );
    assert!(
        est.descent_min > 0.3 && est.descent_min < 1.3,
        "descent {}",
        est.descent_min
    );
    // Independent re-evaluation of the reported minimizer.
    let rho = ch.apply_pure_vec(&est.argmin.amplitudes().view());
    let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    assert!(((-purity.ln()) - est.hmin_hat).abs() < 1e-9);
}

#[test]
fn figure_scale_outputs_have_high_von_neumann_entropy() {
    // One random pure input per seeded channel; the output entropy should
    // clear ln(24) - 1 in at least 99 of 100 trials.
    let trials = 100;
    let mut hits = 0;
    for seed in 0..trials {
        let seeds = SeededRng::new(10_000 + seed as u64);
        let dims = BipartiteDims::new(24, 24).unwrap();
        let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, 192).unwrap();
        let mut rng = seeds.stream(1).rng();
        let raw = chanlab_core::ensembles::gaussian_vector(&mut rng, 192);
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi = raw.mapv(|z| z / norm);
        let rho = ch.apply_pure_vec(&psi.view());
        let vals = linalg::eigh_values(&rho.view()).unwrap();
        let h1: f64 = -vals
            .iter()
            .map(|&v| {
                let x = v.clamp(0.0, 1.0);
                if x > 0.0 {
                    x * x.ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>();
        if h1 >= 24.0f64.ln() - 1.0 {
            hits += 1;
        }
    }
    assert!(hits >= 99, "{hits}/{trials} trials above the entropy floor");
}
