//! Command-line interface. Exit codes: 0 success, 1 usage error,
//! 2 numerical failure.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::measures::{self, MeasureRecord, Quantity};
use crate::ree::{self, ReeOptions};
use crate::states::{density_from_pure, make_named_state, parse_state_name};
use crate::tomo::{self, ShotModel};

use super::config::load_config;
use super::csvio;
use super::{
    asymptote_record, fit_decay_semilog, run_sweep, state_at, verify_ordering, GridSpec, SweepConfig,
    TargetSpec, TomoOptions, FIT_QUANTITIES,
};

pub const ENV_SEED: &str = "DECOHERE_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "decohere",
    about = "Dephasing dynamics of correlations and coherence in small qubit registers"
)]
struct Cli {
    /// Global RNG seed; overrides the DECOHERE_SEED environment variable.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ReeArgs {
    /// Random restarts for the REE solver.
    #[arg(long)]
    restarts: Option<usize>,
    /// Maximum solver iterations per restart.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Convergence tolerance on the objective change.
    #[arg(long)]
    tol: Option<f64>,
    /// Separable ensemble size (default 4 * 2^n).
    #[arg(long)]
    ensemble: Option<usize>,
}

impl ReeArgs {
    fn to_options(&self, seed: u64) -> ReeOptions {
        let defaults = ReeOptions::default();
        ReeOptions {
            ensemble_size: self.ensemble.or(defaults.ensemble_size),
            restarts: self.restarts.unwrap_or(defaults.restarts),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            tol: self.tol.unwrap_or(defaults.tol),
            seed,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a named state's density matrix and measure record.
    State {
        #[arg(long)]
        name: String,
        /// Report measure values in bits instead of nats.
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        ree: ReeArgs,
    },
    /// Run a dephasing sweep and write the per-point measures to CSV.
    Sweep {
        /// Flat key = value config file; flags override file keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        state: Option<String>,
        /// `all`, a qubit letter, or a numeric label.
        #[arg(long)]
        targets: Option<String>,
        /// Dephasing rate in lambda0^-2 units.
        #[arg(long)]
        gamma: Option<f64>,
        /// Thickness grid `start:stop:count` in lambda0 units.
        #[arg(long)]
        ell: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Enable tomographic noise with this many shots per setting.
        #[arg(long)]
        tomo_shots: Option<u64>,
        /// Bootstrap resamples when tomographic noise is enabled.
        #[arg(long)]
        tomo_resamples: Option<usize>,
        #[command(flatten)]
        ree: ReeArgs,
    },
    /// Fit decay rates from a sweep CSV and report the rate ordering.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// State the sweep was run on (fixes the exact fit asymptotes).
        #[arg(long)]
        state: String,
        /// Dephasing targets the sweep used.
        #[arg(long)]
        targets: String,
        #[command(flatten)]
        ree: ReeArgs,
    },
    /// Solve the relative entropy of entanglement for one state.
    Ree {
        #[arg(long)]
        state: String,
        /// Optional dephasing applied before the solve.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        targets: Option<String>,
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        ree: ReeArgs,
    },
    /// Simulate tomography counts, reconstruct, report fidelity.
    Tomo {
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        /// Noiseless counts instead of multinomial sampling.
        #[arg(long)]
        exact: bool,
        /// Optional dephasing applied to the target state.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        targets: Option<String>,
        /// Write the count table CSV here.
        #[arg(long)]
        counts_out: Option<PathBuf>,
    },
}

fn env_seed() -> u64 {
    std::env::var(ENV_SEED)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn display_value(x: f64, bits: bool) -> f64 {
    if bits {
        x / std::f64::consts::LN_2
    } else {
        x
    }
}

fn print_record(record: &MeasureRecord, bits: bool) {
    let unit = if bits { "bits" } else { "nats" };
    for q in Quantity::ALL {
        let v = display_value(record.get(q), bits);
        match record.uncertainty(q) {
            Some(u) => println!(
                "{:<2} = {:.6} +/- {:.6} {unit}",
                q.label(),
                v,
                display_value(u, bits)
            ),
            None => println!("{:<2} = {:.6} {unit}", q.label(), v),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or_else(env_seed);
    match cli.command {
        Command::State { name, bits, ree } => {
            let state = parse_state_name(&name)?;
            let psi = make_named_state(state)?;
            let rho = density_from_pure(&psi);
            println!("state {name}: {} qubits", rho.n_qubits());
            for i in 0..rho.dim() {
                let row: Vec<String> = (0..rho.dim())
                    .map(|j| {
                        let z = rho.element(i, j);
                        format!("{:+.4}{:+.4}i", z.re, z.im)
                    })
                    .collect();
                println!("  [{}]", row.join(", "));
            }
            if rho.n_qubits() == 2 || rho.n_qubits() == 3 {
                let record = measures::all_measures(&rho, &ree.to_options(seed))?;
                print_record(&record, bits);
            } else {
                println!("(measure record skipped: REE defined for 2-3 qubits)");
            }
            Ok(())
        }
        Command::Sweep {
            config,
            state,
            targets,
            gamma,
            ell,
            out,
            tomo_shots,
            tomo_resamples,
            ree,
        } => {
            let file: HashMap<String, String> = match config {
                Some(path) => load_config(&path)?,
                None => HashMap::new(),
            };
            let pick = |flag: Option<String>, key: &str| -> Option<String> {
                flag.or_else(|| file.get(key).cloned())
            };
            let state_name = pick(state, "state")
                .ok_or_else(|| Error::Usage("missing --state (or `state` in config)".into()))?;
            let targets_s = pick(targets, "targets").unwrap_or_else(|| "all".into());
            let gamma = match gamma {
                Some(g) => g,
                None => file
                    .get("gamma")
                    .ok_or_else(|| Error::Usage("missing --gamma (or `gamma` in config)".into()))?
                    .parse()
                    .map_err(|_| Error::Parse("bad gamma in config".into()))?,
            };
            let ell_s = pick(ell, "ell")
                .ok_or_else(|| Error::Usage("missing --ell (or `ell` in config)".into()))?;
            let out = out
                .or_else(|| file.get("out").map(PathBuf::from))
                .ok_or_else(|| Error::Usage("missing --out (or `out` in config)".into()))?;
            let seed = match cli.seed {
                Some(s) => s,
                None => match file.get("seed") {
                    Some(s) => s
                        .parse()
                        .map_err(|_| Error::Parse("bad seed in config".into()))?,
                    None => env_seed(),
                },
            };
            let shots = match tomo_shots {
                Some(s) => Some(s),
                None => match file.get("tomo_shots") {
                    Some(s) => Some(
                        s.parse()
                            .map_err(|_| Error::Parse("bad tomo_shots in config".into()))?,
                    ),
                    None => None,
                },
            };
            let tomo_opts = match shots {
                None => None,
                Some(shots) => Some(TomoOptions {
                    shots,
                    resamples: tomo_resamples
                        .or_else(|| file.get("tomo_resamples").and_then(|s| s.parse().ok()))
                        .unwrap_or(100),
                    seed,
                }),
            };
            let config = SweepConfig {
                state: parse_state_name(&state_name)?,
                gamma,
                targets: TargetSpec::parse(&targets_s)?,
                ell: GridSpec::parse(&ell_s)?,
                ree: ree.to_options(seed),
                tomo: tomo_opts,
                out: Some(out.clone()),
            };
            let rows = run_sweep(&config)?;
            for row in &rows {
                if !row.ree_converged {
                    eprintln!("warning: REE did not converge at ell = {}", row.ell);
                }
            }
            csvio::write_file(&out, &csvio::sweep_to_csv(&rows))?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Fit {
            input,
            out,
            state,
            targets,
            ree,
        } => {
            let rows = csvio::sweep_from_csv(&csvio::read_file(&input)?)?;
            let state = parse_state_name(&state)?;
            let targets = TargetSpec::parse(&targets)?;
            let limits = asymptote_record(state, targets, &ree.to_options(seed))?;
            let mut fits = Vec::new();
            for q in FIT_QUANTITIES {
                match fit_decay_semilog(&rows, q, limits.get(q)) {
                    Ok(fit) => fits.push(fit),
                    Err(Error::InsufficientFitPoints { have, need }) =>eprintln!(
                        "no fit for {}: {have} usable points, need {need}",
                        q.label()
                    ),
                    Err(e) => return Err(e),
                }
            }
            csvio::write_file(&out, &csvio::rates_to_csv(&fits))?;
            let report = verify_ordering(&fits)?;
            println!("{}", report.summary());
            Ok(())
        }
        Command::Ree {
            state,
            gamma,
            ell,
            targets,
            bits,
            ree: ree_args,
        } => {
            let state = parse_state_name(&state)?;
            let rho = match (gamma, ell) {
                (Some(g), Some(l)) => state_at(
                    state,
                    g,
                    l,
                    TargetSpec::parse(targets.as_deref().unwrap_or("all"))?,
                )?,
                (None, None) => density_from_pure(&make_named_state(state)?),
                _ => {
                    return Err(Error::Usage(
                        "--gamma and --ell must be given together".into(),
                    ))
                }
            };
            let result = ree::ree(&rho, &ree_args.to_options(seed))?;
            let unit = if bits { "bits" } else { "nats" };
            println!(
                "E <= {:.8} {unit} (iterations {}, restarts {}, spread {:.3e}, converged {})",
                display_value(result.value, bits),
                result.iterations,
                result.restarts_used,
                result.spread,
                result.converged
            );
            if !result.converged {
                return Err(Error::NonConvergence(
                    "REE solver hit max_iters without settling".into(),
                ));
            }
            Ok(())
        }
        Command::Tomo {
            state,
            shots,
            exact,
            gamma,
            ell,
            targets,
            counts_out,
        } => {
            let state = parse_state_name(&state)?;
            let rho = match (gamma, ell) {
                (Some(g), Some(l)) => state_at(
                    state,
                    g,
                    l,
                    TargetSpec::parse(targets.as_deref().unwrap_or("all"))?,
                )?,
                (None, None) => density_from_pure(&make_named_state(state)?),
                _ => {
                    return Err(Error::Usage(
                        "--gamma and --ell must be given together".into(),
                    ))
                }
            };
            let model = if exact {
                ShotModel::Exact
            } else {
                ShotModel::Sampled { seed }
            };
            let counts = tomo::sample_counts(&rho, shots, model)?;
            if let Some(path) = counts_out {
                csvio::write_file(&path, &counts.to_csv())?;
            }
            let result = tomo::reconstruct(&counts, Some(&rho))?;
            println!(
                "fidelity {:.6}, clipped eigenvalue mass {:.3e}, shots {} per setting{}",
                result.fidelity_vs_target.unwrap_or(f64::NAN),
                result.eigen_clip_mass,
                shots,
                if exact { " (exact mode)" } else { "" }
            );
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_)
        | Error::Parse(_)
        | Error::InvalidStateSpec(_)
        | Error::DuplicateQubit(_)
        | Error::QubitOutOfRange { .. }
        | Error::EmptyKeepSet
        | Error::RegisterTooLarge(_)
        | Error::NegativeParameter(_)
        | Error::DimensionMismatch(_)
        | Error::Io(_) => 1,
        Error::NotNormalized(_)
        | Error::NotHermitian(_)
        | Error::TraceNotOne(_)
        | Error::NotPositiveSemidefinite(_)
        | Error::ZeroNormProjection
        | Error::UnsupportedRegister(_)
        | Error::NonConvergence(_)
        | Error::IncompleteCountTable(_)
        | Error::InsufficientFitPoints { .. } => 2,
    }
}

/// Run the CLI on the given argument list (including argv[0]) and return
/// the process exit code.
pub fn cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
