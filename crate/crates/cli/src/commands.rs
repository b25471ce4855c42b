//! The experiment commands. Each one builds its objects from an explicit
//! seed hierarchy, computes, writes its artifacts, and appends exactly one
//! record to the store.
//!
//! Stream allocation: stream 0 samples the channel, streams 1 and 2 drive
//! the two entropy estimators, stream 3 the deviation search, stream 4
//! Monte Carlo.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use chanlab_core::channels::{
    randomizing_deviation, RandomUnitaryChannel, StinespringChannel,
};
use chanlab_core::ensembles::SeededRng;
use chanlab_core::entropy::{
    min_output_entropy_estimate, product_output_entropy_bound, renyi_entropy,
    subspace_dimension_bound, BoundsParams, EstimatorConfig, RenyiOrder,
};
use chanlab_core::moments::{exact_avg_purity, mc_avg_purity};
use chanlab_core::tensor::{
    eigen_spectrum, make_max_entangled, BipartiteDims, Spectrum,
};
use chanlab_core::Error as CoreError;

use crate::record::{ExperimentRecord, RecordStore};
use crate::report::ViolationReport;
use crate::svg::write_spectrum_svg;

/// Command failures carrying their process exit code: 2 for invalid
/// parameters, 3 for the memory guard, 1 for I/O.
#[derive(Debug)]
pub struct CommandError {
    pub exit_code: i32,
    pub message: String,
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CommandError {}

impl From<CoreError> for CommandError {
    fn from(e: CoreError) -> Self {
        let exit_code = match e {
            CoreError::DimOverflow { .. } => 3,
            _ => 2,
        };
        CommandError {
            exit_code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError {
            exit_code: 1,
            message: format!("i/o error: {e}"),
        }
    }
}

fn invalid(message: impl Into<String>) -> CommandError {
    CommandError {
        exit_code: 2,
        message: message.into(),
    }
}

pub type CmdResult<T> = Result<T, CommandError>;

fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> CmdResult<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| CommandError {
            exit_code: 1,
            message: format!("json write failed: {e}"),
        })?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Spectrum CSV: 1-based index, eigenvalues ascending, full double
/// precision.
pub fn write_spectrum_csv(path: &PathBuf, ascending: &[f64]) -> CmdResult<()> {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in ascending.iter().enumerate() {
        out.push_str(&format!("{},{:.16e}\n", i + 1, v));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn parse_spectrum_csv(text: &str) -> CmdResult<Vec<f64>> {
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            if line.trim() != "index,eigenvalue" {
                return Err(invalid("bad CSV header"));
            }
            continue;
        }
        let mut parts = line.split(',');
        let idx: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| invalid("bad CSV index"))?;
        if idx != k {
            return Err(invalid("CSV indices must be 1-based and consecutive"));
        }
        let value: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| invalid("bad CSV value"))?;
        values.push(value);
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// spectrum

#[derive(Debug, Clone)]
pub struct SpectrumParams {
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_r: usize,
    pub seed: u64,
    pub out_csv: PathBuf,
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug)]
pub struct SpectrumOutcome {
    pub spectrum: Spectrum,
    pub dim_s: usize,
    pub lambda_max: f64,
    pub h1: f64,
    pub tail_purity: f64,
    pub ref_green: f64,
    pub ref_red: f64,
    pub record: ExperimentRecord,
}

pub fn cmd_spectrum(params: &SpectrumParams, store: &RecordStore) -> CmdResult<SpectrumOutcome> {
    let started = Instant::now();
    let dims = BipartiteDims::new(params.dim_a, params.dim_b)?;
    let total = dims.total();
    if params.dim_r == 0 || total % params.dim_r != 0 {
        return Err(invalid(format!(
            "dim_r = {} must divide dim_a * dim_b = {total}",
            params.dim_r
        )));
    }
    let dim_s = total / params.dim_r;
    if total > chanlab_core::MAX_OPERATOR_DIM {
        return Err(CommandError {
            exit_code: 3,
            message: format!(
                "memory guard: lifted dimension {total} exceeds {}",
                chanlab_core::MAX_OPERATOR_DIM
            ),
        });
    }

    let seeds = SeededRng::new(params.seed);
    let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, dim_s)?;
    let phi = make_max_entangled(dim_s);
    let rho = ch.apply_product_pure(&ch.conjugate(), &phi)?;
    let spectrum = eigen_spectrum(&rho)?;

    let lambda_max = spectrum.lambda_max();
    let h1 = renyi_entropy(&spectrum, RenyiOrder::One);
    let clamped = spectrum.clamped();
    let tail_purity: f64 = clamped[1..].iter().map(|v| v * v).sum();
    let ratio = dim_s as f64 / total as f64;
    let ref_green = ratio;
    let ref_red = (1.0 - ratio) / (params.dim_a * params.dim_a) as f64;

    let mut ascending = clamped.clone();
    ascending.reverse();
    write_spectrum_csv(&params.out_csv, &ascending)?;
    if let Some(svg) = &params.out_svg {
        write_spectrum_svg(
            svg,
            &ascending,
            ref_green,
            ref_red,
            &format!(
                "Output spectrum, dims ({}, {}), subspace {dim_s}, seed {}",
                params.dim_a, params.dim_b, params.seed
            ),
        )?;
    }

    let mut record = ExperimentRecord::new(
        "spectrum",
        serde_json::json!({
            "dim_a": params.dim_a,
            "dim_b": params.dim_b,
            "dim_r": params.dim_r,
            "dim_s": dim_s,
        }),
        params.seed,
    )
    .streams(&[0]);
    record.output_f64("lambda_max", lambda_max);
    record.output_f64("h1", h1);
    record.output_f64("tail_purity", tail_purity);
    record.output_f64("ref_green", ref_green);
    record.output_f64("ref_red", ref_red);
    record.file_ref("csv", &params.out_csv);
    if let Some(svg) = &params.out_svg {
        record.file_ref("svg", svg);
    }
    record.finish(started);
    store.append(&record)?;

    Ok(SpectrumOutcome {
        spectrum,
        dim_s,
        lambda_max,
        h1,
        tail_purity,
        ref_green,
        ref_red,
        record,
    })
}

// ---------------------------------------------------------------------------
// violation

#[derive(Debug, Clone)]
pub struct ViolationParams {
    pub p: RenyiOrder,
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_s: usize,
    pub estimator: EstimatorConfig,
    pub seed: u64,
    pub out_json: PathBuf,
}

#[derive(Debug)]
pub struct ViolationOutcome {
    pub report: ViolationReport,
    pub sampling_min_n: f64,
    pub descent_min_n: f64,
    pub sampling_min_nbar: f64,
    pub descent_min_nbar: f64,
    pub record: ExperimentRecord,
}

pub fn cmd_violation(params: &ViolationParams, store: &RecordStore) -> CmdResult<ViolationOutcome> {
    let started = Instant::now();
    match params.p {
        RenyiOrder::One => return Err(invalid("violation requires p > 1")),
        RenyiOrder::Finite(p) if p <= 1.0 => return Err(invalid("violation requires p > 1")),
        _ => {}
    }
    let dims = BipartiteDims::new(params.dim_a, params.dim_b)?;
    if dims.total() > chanlab_core::MAX_OPERATOR_DIM {
        return Err(CommandError {
            exit_code: 3,
            message: "memory guard: lifted dimension too large".into(),
        });
    }

    let seeds = SeededRng::new(params.seed);
    let ch = StinespringChannel::sample(&mut seeds.stream(0).rng(), dims, params.dim_s)?;
    let ch_bar = ch.conjugate();

    let est_n = min_output_entropy_estimate(&ch, params.p, &params.estimator, &seeds.stream(1))?;
    let est_nbar =
        min_output_entropy_estimate(&ch_bar, params.p, &params.estimator, &seeds.stream(2))?;

    let phi = make_max_entangled(params.dim_s);
    let rho = ch.apply_product_pure(&ch_bar, &phi)?;
    let spectrum = eigen_spectrum(&rho)?;
    let h_product_phi = renyi_entropy(&spectrum, params.p);
    let bound_check = product_output_entropy_bound(params.p, dims, params.dim_s)?;
    let gap = est_n.hmin_hat + est_nbar.hmin_hat - h_product_phi;

    let report = ViolationReport {
        p: params.p,
        dim_a: params.dim_a,
        dim_b: params.dim_b,
        dim_s: params.dim_s,
        hmin_hat_n: est_n.hmin_hat,
        hmin_hat_nbar: est_nbar.hmin_hat,
        h_product_phi,
        gap,
        bound_check,
        seed: params.seed,
    };
    write_json(&params.out_json, &report)?;

    let mut record = ExperimentRecord::new(
        "violation",
        serde_json::json!({
            "p": params.p.to_string(),
            "dim_a": params.dim_a,
            "dim_b": params.dim_b,
            "dim_s": params.dim_s,
            "samples": params.estimator.samples,
            "restarts": params.estimator.restarts,
            "max_iters": params.estimator.max_iters,
        }),
        params.seed,
    )
    .streams(&[0, 1, 2]);
    record.output_f64("hmin_hat_n", est_n.hmin_hat);
    record.output_f64("hmin_hat_nbar", est_nbar.hmin_hat);
    record.output_f64("sampling_min_n", est_n.sampling_min);
    record.output_f64("descent_min_n", est_n.descent_min);
    record.output_f64("sampling_min_nbar", est_nbar.sampling_min);
    record.output_f64("descent_min_nbar", est_nbar.descent_min);
    record.output_f64("h_product_phi", h_product_phi);
    record.output_f64("gap", gap);
    record.output_f64("bound_check", bound_check);
    record.output_str(
        "estimator_nature",
        "hmin_hat values are upper-bound estimates; gap > 0 is evidence, not a certificate",
    );
    record.file_ref("report", &params.out_json);
    record.finish(started);
    store.append(&record)?;

    Ok(ViolationOutcome {
        report,
        sampling_min_n: est_n.sampling_min,
        descent_min_n: est_n.descent_min,
        sampling_min_nbar: est_nbar.sampling_min,
        descent_min_nbar: est_nbar.descent_min,
        record,
    })
}

// ---------------------------------------------------------------------------
// ru-violation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitaryFamily {
    Haar,
    Pauli,
}

#[derive(Debug, Clone)]
pub struct RuViolationParams {
    pub p: RenyiOrder,
    pub d: usize,
    pub n: usize,
    pub family: UnitaryFamily,
    pub deviation: EstimatorConfig,
    pub seed: u64,
    pub out_json: PathBuf,
}

#[derive(Debug)]
pub struct RuViolationOutcome {
    pub report: ViolationReport,
    pub overlap: f64,
    pub epsilon_hat: f64,
    pub nu_product_lower: f64,
    pub nu_single_pair_upper: f64,
    pub overlap_floor_ok: bool,
    pub violation: bool,
    pub record: ExperimentRecord,
}

/// Largest number of mixed unitaries a single command will sample.
pub const MAX_RU_N: usize = 1 << 16;

pub fn cmd_ru_violation(
    params: &RuViolationParams,
    store: &RecordStore,
) -> CmdResult<RuViolationOutcome> {
    let started = Instant::now();
    match params.p {
        RenyiOrder::One => return Err(invalid("ru-violation requires p > 1")),
        RenyiOrder::Finite(p) if p <= 1.0 => return Err(invalid("ru-violation requires p > 1")),
        _ => {}
    }
    if params.n == 0 || params.n > MAX_RU_N {
        return Err(invalid(format!("n must lie in 1..={MAX_RU_N}")));
    }

    let seeds = SeededRng::new(params.seed);
    let ch = match params.family {
        UnitaryFamily::Haar => {
            RandomUnitaryChannel::sample(&mut seeds.stream(0).rng(), params.d, params.n)?
        }
        UnitaryFamily::Pauli => {
            if params.d != 2 || params.n != 4 {
                return Err(invalid("the pauli family is the d = 2, n = 4 mixture"));
            }
            RandomUnitaryChannel::pauli_qubit()
        }
    };

    // Lower bound on nu_p(N (x) conj(N)) from the maximally entangled
    // witness, via the trace-overlap form.
    let overlap = ch.phi_overlap();
    let overlap_floor_ok = overlap >= 1.0 / params.n as f64 - 1e-9;
    let nu_product_lower = overlap;

    // Conditional upper bound on nu_p(N) nu_p(conj(N)): the deviation
    // estimate is itself a lower bound on the true deviation, so the
    // resulting ceiling is conditional on epsilon_hat being close to it.
    let deviation = randomizing_deviation(&ch, &params.deviation, &seeds.stream(3))?;
    let eps = deviation.epsilon_hat;
    let d = params.d as f64;
    let exponent = match params.p {
        RenyiOrder::Infinity => 2.0,
        RenyiOrder::Finite(p) => 2.0 - 2.0 / p,
        RenyiOrder::One => unreachable!(),
    };
    let nu_single_pair_upper = ((1.0 + eps) / d).powf(exponent);
    let violation = nu_product_lower > nu_single_pair_upper;

    // Entropy form of both bounds for the report.
    let hmin_single = (d / (1.0 + eps)).ln();
    let p_over_pm1 = match params.p {
        RenyiOrder::Infinity => 1.0,
        RenyiOrder::Finite(p) => p / (p - 1.0),
        RenyiOrder::One => unreachable!(),
    };
    let h_product_phi = p_over_pm1 * (1.0 / overlap).ln();
    let bound_check = p_over_pm1 * (params.n as f64).ln();
    let report = ViolationReport {
        p: params.p,
        dim_a: params.d,
        dim_b: params.d,
        dim_s: params.n,
        hmin_hat_n: hmin_single,
        hmin_hat_nbar: hmin_single,
        h_product_phi,
        gap: 2.0 * hmin_single - h_product_phi,
        bound_check,
        seed: params.seed,
    };
    write_json(&params.out_json, &report)?;

    let mut record = ExperimentRecord::new(
        "ru-violation",
        serde_json::json!({
            "p": params.p.to_string(),
            "d": params.d,
            "n": params.n,
            "family": match params.family {
                UnitaryFamily::Haar => "haar",
                UnitaryFamily::Pauli => "pauli",
            },
            "samples": params.deviation.samples,
            "restarts": params.deviation.restarts,
            "max_iters": params.deviation.max_iters,
        }),
        params.seed,
    )
    .streams(&[0, 3]);
    record.output_f64("phi_overlap", overlap);
    record.output_bool("overlap_floor_ok", overlap_floor_ok);
    record.output_f64("epsilon_hat", eps);
    record.output_f64("nu_product_lower_bound", nu_product_lower);
    record.output_f64("nu_single_pair_upper_conditional", nu_single_pair_upper);
    record.output_bool("violation_conditional", violation);
    record.output_str(
        "bound_nature",
        "overlap is a certified lower bound; the single-copy ceiling is conditional \
         (epsilon_hat is itself a lower-bound estimate of the true deviation)",
    );
    record.file_ref("report", &params.out_json);
    record.finish(started);
    store.append(&record)?;

    Ok(RuViolationOutcome {
        report,
        overlap,
        epsilon_hat: eps,
        nu_product_lower,
        nu_single_pair_upper,
        overlap_floor_ok,
        violation,
        record,
    })
}

// ---------------------------------------------------------------------------
// purity

#[derive(Debug, Clone)]
pub struct PurityParams {
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_s: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub out_json: PathBuf,
}

#[derive(Debug)]
pub struct PurityOutcome {
    pub exact: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub diff_in_stderr: f64,
    pub leading_term: f64,
    pub record: ExperimentRecord,
}

pub fn cmd_purity(params: &PurityParams, store: &RecordStore) -> CmdResult<PurityOutcome> {
    let started = Instant::now();
    let dims = BipartiteDims::new(params.dim_a, params.dim_b)?;
    let exact = exact_avg_purity(dims, params.dim_s)?;
    let mc = mc_avg_purity(dims, params.dim_s, params.mc_samples, &SeededRng::new(params.seed).stream(4))?;
    let diff = (exact - mc.mean).abs();
    let diff_in_stderr = if mc.stderr > 0.0 {
        diff / mc.stderr
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let leading_term =
        (params.dim_s * params.dim_s) as f64 / ((dims.total() * dims.total()) as f64);

    let payload = serde_json::json!({
        "dim_a": params.dim_a,
        "dim_b": params.dim_b,
        "dim_s": params.dim_s,
        "exact": exact,
        "mc_mean": mc.mean,
        "mc_stderr": mc.stderr,
        "mc_samples": params.mc_samples,
        "diff_in_stderr": if diff_in_stderr.is_finite() { serde_json::json!(diff_in_stderr) } else { serde_json::json!("inf") },
        "leading_term": leading_term,
        "seed": params.seed,
    });
    write_json(&params.out_json, &payload)?;

    let mut record = ExperimentRecord::new(
        "purity",
        serde_json::json!({
            "dim_a": params.dim_a,
            "dim_b": params.dim_b,
            "dim_s": params.dim_s,
            "mc_samples": params.mc_samples,
        }),
        params.seed,
    )
    .streams(&[4]);
    record.output_f64("exact", exact);
    record.output_f64("mc_mean", mc.mean);
    record.output_f64("mc_stderr", mc.stderr);
    record.output_f64("leading_term", leading_term);
    record.file_ref("report", &params.out_json);
    record.finish(started);
    store.append(&record)?;

    Ok(PurityOutcome {
        exact,
        mc_mean: mc.mean,
        mc_stderr: mc.stderr,
        diff_in_stderr,
        leading_term,
        record,
    })
}

// ---------------------------------------------------------------------------
// bounds

#[derive(Debug, Clone)]
pub struct BoundsCmdParams {
    pub p: RenyiOrder,
    pub dim_a: usize,
    pub dim_b: usize,
    pub alpha: f64,
    pub delta: f64,
    pub gamma: f64,
    pub seed: u64,
    pub out_json: Option<PathBuf>,
}

#[derive(Debug)]
pub struct BoundsOutcome {
    pub dim_s: usize,
    pub dim_s_vacuous: bool,
    pub failure_prob_bound: f64,
    pub failure_prob_vacuous: bool,
    pub entropy_floor: f64,
    pub beta: f64,
    pub lipschitz: f64,
    pub table: String,
    pub record: ExperimentRecord,
}

pub fn cmd_bounds(params: &BoundsCmdParams, store: &RecordStore) -> CmdResult<BoundsOutcome> {
    let started = Instant::now();
    let dims = BipartiteDims::new(params.dim_a, params.dim_b)?;
    let bp = BoundsParams::new(params.alpha, params.delta, params.gamma, dims)?;
    let bound = subspace_dimension_bound(params.p, dims, &bp)?;
    let lipschitz = chanlab_core::entropy::lipschitz_bound(params.p, params.dim_a)?;

    let dim_s_vacuous = bound.dim_s == 0;
    let failure_prob_vacuous = !(bound.failure_prob_bound < 1.0);
    let mut table = String::new();
    table.push_str(&format!(
        "p = {}, dims = ({}, {}), alpha = {}, delta = {}, gamma = {} (beta = {:.6})\n",
        params.p, params.dim_a, params.dim_b, params.alpha, params.delta, params.gamma, bp.beta
    ));
    table.push_str(&format!(
        "guaranteed subspace dimension : {}{}\n",
        bound.dim_s,
        if dim_s_vacuous {
            "  [bound vacuous at this scale]"
        } else {
            ""
        }
    ));
    table.push_str(&format!(
        "failure probability bound     : {:.6e}{}\n",
        bound.failure_prob_bound,
        if failure_prob_vacuous {
            "  [bound vacuous at this scale]"
        } else {
            ""
        }
    ));
    table.push_str(&format!(
        "entropy floor (nats)          : {:.6}\n",
        bound.entropy_floor
    ));
    table.push_str(&format!("Lipschitz bound               : {lipschitz:.6}\n"));

    if let Some(path) = &params.out_json {
        let payload = serde_json::json!({
            "p": params.p.to_string(),
            "dim_a": params.dim_a,
            "dim_b": params.dim_b,
            "alpha": params.alpha,
            "delta": params.delta,
            "gamma": params.gamma,
            "beta": bp.beta,
            "dim_s": bound.dim_s,
            "dim_s_vacuous": dim_s_vacuous,
            "failure_prob_bound": if bound.failure_prob_bound.is_finite() {
                serde_json::json!(bound.failure_prob_bound)
            } else {
                serde_json::json!("inf")
            },
            "failure_prob_vacuous": failure_prob_vacuous,
            "entropy_floor": bound.entropy_floor,
            "lipschitz": lipschitz,
        });
        write_json(path, &payload)?;
    }

    let mut record = ExperimentRecord::new(
        "bounds",
        serde_json::json!({
            "p": params.p.to_string(),
            "dim_a": params.dim_a,
            "dim_b": params.dim_b,
            "alpha": params.alpha,
            "delta": params.delta,
            "gamma": params.gamma,
        }),
        params.seed,
    );
    record.output_u64("dim_s", bound.dim_s as u64);
    record.output_bool("dim_s_vacuous", dim_s_vacuous);
    if bound.failure_prob_bound.is_finite() {
        record.output_f64("failure_prob_bound", bound.failure_prob_bound);
    } else {
        record.output_str("failure_prob_bound", "inf");
    }
    record.output_bool("failure_prob_vacuous", failure_prob_vacuous);
    record.output_f64("entropy_floor", bound.entropy_floor);
    record.output_f64("beta", bp.beta);
    record.output_f64("lipschitz", lipschitz);
    if let Some(path) = &params.out_json {
        record.file_ref("report", path);
    }
    record.finish(started);
    store.append(&record)?;

    Ok(BoundsOutcome {
        dim_s: bound.dim_s,
        dim_s_vacuous,
        failure_prob_bound: bound.failure_prob_bound,
        failure_prob_vacuous,
        entropy_floor: bound.entropy_floor,
        beta: bp.beta,
        lipschitz,
        table,
        record,
    })
}
