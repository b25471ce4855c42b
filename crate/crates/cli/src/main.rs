//! Seeded channel-entropy experiments.
//!
//! Exit codes: 0 success, 2 invalid parameters, 3 memory guard.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chanlab_cli::commands::{self, UnitaryFamily};
use chanlab_cli::RecordStore;
use chanlab_core::entropy::{EstimatorConfig, RenyiOrder};

#[derive(Parser)]
#[command(
    name = "chanlab",
    version,
    about = "Seeded experiments on random quantum channels: output spectra, minimum \
             output Renyi entropies, supermultiplicativity probes, and exact Haar \
             averages of the two-copy output purity.",
    after_help = "Every run appends one JSON line to the record store (--record), \
                  carrying the full parameter set, seeds, generator id, and all scalar \
                  outputs; replaying a record on the same build reproduces the scalars \
                  bitwise."
)]
struct Cli {
    /// Path of the append-only JSONL record store.
    #[arg(long, global = true, default_value = "chanlab_records.jsonl")]
    record: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one isometry channel and write the full eigenvalue spectrum
    /// of the conjugate-pair product output on the maximally entangled
    /// input.
    Spectrum(SpectrumArgs),
    /// Estimate the entropy gap between two single-copy minima and the
    /// conjugate-pair product output.
    Violation(ViolationArgs),
    /// Compare the certified product-output bound of a mixed-unitary
    /// channel against the conditional single-copy ceiling from its
    /// randomizing deviation.
    RuViolation(RuViolationArgs),
    /// Exact Haar-average output purity of the conjugate-pair product,
    /// cross-checked by Monte Carlo.
    Purity(PurityArgs),
    /// Closed-form subspace-size, failure-probability, entropy-floor, and
    /// Lipschitz bounds, with vacuous values flagged.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, value_name = "COUNT")]
    dim_a: usize,
    #[arg(long, value_name = "COUNT")]
    dim_b: usize,
    /// Environment dimension; the input space gets dim_a*dim_b/dim_r.
    #[arg(long, value_name = "COUNT")]
    dim_r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path (header index,eigenvalue; ascending order).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Optional SVG plot path.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ViolationArgs {
    /// Entropy order (> 1), a real number or 'inf'.
    #[arg(long)]
    p: RenyiOrder,
    #[arg(long, value_name = "COUNT")]
    dim_a: usize,
    #[arg(long, value_name = "COUNT")]
    dim_b: usize,
    #[arg(long, value_name = "COUNT")]
    dim_s: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 150)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct RuViolationArgs {
    /// Entropy order (> 1), a real number or 'inf'; the comparison is only
    /// meaningful for p > 2.
    #[arg(long)]
    p: RenyiOrder,
    /// Hilbert-space dimension of the mixed unitaries.
    #[arg(long, value_name = "COUNT")]
    dim: usize,
    /// Number of unitaries in the mixture.
    #[arg(long, value_name = "COUNT")]
    n: usize,
    /// 'haar' or 'pauli' (the exact qubit randomizer; requires dim 2, n 4).
    #[arg(long, default_value = "haar")]
    family: String,
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 60)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct PurityArgs {
    #[arg(long, value_name = "COUNT")]
    dim_a: usize,
    #[arg(long, value_name = "COUNT")]
    dim_b: usize,
    #[arg(long, value_name = "COUNT")]
    dim_s: usize,
    #[arg(long, default_value_t = 1000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    /// Entropy order (> 1), a real number or 'inf'.
    #[arg(long)]
    p: RenyiOrder,
    #[arg(long, value_name = "COUNT")]
    dim_a: usize,
    #[arg(long, value_name = "COUNT")]
    dim_b: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON copy of the table.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), commands::CommandError> {
    let store = RecordStore::new(&cli.record);
    match cli.command {
        Command::Spectrum(a) => {
            let outcome = commands::cmd_spectrum(
                &commands::SpectrumParams {
                    dim_a: a.dim_a,
                    dim_b: a.dim_b,
                    dim_r: a.dim_r,
                    seed: a.seed,
                    out_csv: a.out.clone(),
                    out_svg: a.svg.clone(),
                },
                &store,
            )?;
            println!(
                "spectrum ({},{}) subspace {} seed {}",
                a.dim_a, a.dim_b, outcome.dim_s, a.seed
            );
            println!("  lambda_max   = {:.12}", outcome.lambda_max);
            println!("  h1           = {:.12} nats", outcome.h1);
            println!("  tail purity  = {:.6e}", outcome.tail_purity);
            println!(
                "  reference lines: {:.6e} (dashed), {:.6e} (solid)",
                outcome.ref_green, outcome.ref_red
            );
            println!("  csv -> {}", a.out.display());
            if let Some(svg) = &a.svg {
                println!("  svg -> {}", svg.display());
            }
        }
        Command::Violation(a) => {
            let outcome = commands::cmd_violation(
                &commands::ViolationParams {
                    p: a.p,
                    dim_a: a.dim_a,
                    dim_b: a.dim_b,
                    dim_s: a.dim_s,
                    estimator: EstimatorConfig {
                        samples: a.samples,
                        restarts: a.restarts,
                        max_iters: a.max_iters,
                        ..EstimatorConfig::default()
                    },
                    seed: a.seed,
                    out_json: a.out.clone(),
                },
                &store,
            )?;
            let r = &outcome.report;
            println!(
                "violation p={} dims=({},{}) subspace {} seed {}",
                r.p, r.dim_a, r.dim_b, r.dim_s, r.seed
            );
            println!(
                "  hmin_hat(N)    = {:.6} nats  [upper-bound estimate; sampling {:.6}, descent {:.6}]",
                r.hmin_hat_n, outcome.sampling_min_n, outcome.descent_min_n
            );
            println!(
                "  hmin_hat(conj) = {:.6} nats  [upper-bound estimate; sampling {:.6}, descent {:.6}]",
                r.hmin_hat_nbar, outcome.sampling_min_nbar, outcome.descent_min_nbar
            );
            println!("  h_product_phi  = {:.6} nats  [exact from the spectrum]", r.h_product_phi);
            println!(
                "  bound_check    = {:.6} nats  (h_product_phi must not exceed it)",
                r.bound_check
            );
            println!("  gap            = {:.6} nats", r.gap);
            println!("  report -> {}", a.out.display());
        }
        Command::RuViolation(a) => {
            let family = match a.family.as_str() {
                "haar" => UnitaryFamily::Haar,
                "pauli" => UnitaryFamily::Pauli,
                other => {
                    return Err(commands::CommandError {
                        exit_code: 2,
                        message: format!("unknown family '{other}' (expected haar or pauli)"),
                    })
                }
            };
            let outcome = commands::cmd_ru_violation(
                &commands::RuViolationParams {
                    p: a.p,
                    d: a.dim,
                    n: a.n,
                    family,
                    deviation: EstimatorConfig {
                        samples: a.samples,
                        restarts: a.restarts,
                        max_iters: a.max_iters,
                        ..EstimatorConfig::default()
                    },
                    seed: a.seed,
                    out_json: a.out.clone(),
                },
                &store,
            )?;
            println!(
                "ru-violation p={} d={} n={} family={} seed {}",
                a.p, a.dim, a.n, a.family, a.seed
            );
            if let RenyiOrder::Finite(p) = a.p {
                if p <= 2.0 {
                    println!("  note: no violation is possible at p <= 2 for this family");
                }
            }
            println!(
                "  phi overlap            = {:.6e}  [certified lower bound on nu_p(N x conj N); floor 1/n = {:.6e}, ok = {}]",
                outcome.overlap,
                1.0 / a.n as f64,
                outcome.overlap_floor_ok
            );
            println!(
                "  epsilon_hat            = {:.6}  [lower-bound estimate of the randomizing deviation]",
                outcome.epsilon_hat
            );
            println!(
                "  nu_p(N) nu_p(conj N)  <= {:.6e}  [CONDITIONAL ceiling from epsilon_hat]",
                outcome.nu_single_pair_upper
            );
            println!(
                "  verdict: {}",
                if outcome.violation {
                    "overlap exceeds the conditional ceiling (supermultiplicative, conditional on epsilon_hat)"
                } else {
                    "no violation at these parameters (the conditional ceiling wins)"
                }
            );
            println!("  report -> {}", a.out.display());
        }
        Command::Purity(a) => {
            let outcome = commands::cmd_purity(
                &commands::PurityParams {
                    dim_a: a.dim_a,
                    dim_b: a.dim_b,
                    dim_s: a.dim_s,
                    mc_samples: a.mc_samples,
                    seed: a.seed,
                    out_json: a.out.clone(),
                },
                &store,
            )?;
            println!(
                "purity dims=({},{}) subspace {} seed {}",
                a.dim_a, a.dim_b, a.dim_s, a.seed
            );
            println!("  exact        = {:.12}", outcome.exact);
            println!(
                "  monte carlo  = {:.12} +- {:.3e} ({} samples)",
                outcome.mc_mean, outcome.mc_stderr, a.mc_samples
            );
            println!("  |diff|       = {:.3e} ({:.2} stderr)",
                (outcome.exact - outcome.mc_mean).abs(),
                outcome.diff_in_stderr
            );
            println!("  leading term = {:.12}", outcome.leading_term);
            println!("  report -> {}", a.out.display());
        }
        Command::Bounds(a) => {
            let outcome = commands::cmd_bounds(
                &commands::BoundsCmdParams {
                    p: a.p,
                    dim_a: a.dim_a,
                    dim_b: a.dim_b,
                    alpha: a.alpha,
                    delta: a.delta,
                    gamma: a.gamma,
                    seed: a.seed,
                    out_json: a.out.clone(),
                },
                &store,
            )?;
            print!("{}", outcome.table);
            if let Some(path) = &a.out {
                println!("report -> {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code as u8)
        }
    }
}
