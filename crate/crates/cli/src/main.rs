//! `qif-shuffle`: vulnerabilities, sweeps, channel dumps and invariant checks
//! for k-RR and shuffle mechanisms.

mod commands;
mod params;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use qif_shuffle::channels::{Cap, DEFAULT_CAP};
use qif_shuffle::checks::Suite;
use qif_shuffle::closed_forms::MechanismKind;
use qif_shuffle::{Exact, QifError};

use commands::{ChannelKind, ChannelRequest, Method, SweepRequest, VulnRequest};
use params::{collect_inputs, parse_rational, PInput};

/// Largest n for which exact arithmetic is the default.
const EXACT_DEFAULT_MAX_N: u64 = 64;

#[derive(Parser, Debug)]
#[command(name = "qif-shuffle", version, about = "Leakage of k-RR and shuffle mechanisms as QIF channels")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Exact rational arithmetic
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// binary64 arithmetic
    #[arg(long, global = true)]
    float: bool,
    /// Largest number of datasets kⁿ a full channel may have
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Global {
    fn exact(&self, default: bool) -> bool {
        if self.exact {
            true
        } else if self.float {
            false
        } else {
            default
        }
    }
}

#[derive(Args, Debug)]
struct Prob {
    /// k-RR truthful-report probability, decimal or a/b
    #[arg(long, conflicts_with = "epsilon")]
    p: Option<String>,
    /// Local privacy parameter, converted to p
    #[arg(long)]
    epsilon: Option<f64>,
}

impl Prob {
    fn input(&self) -> anyhow::Result<Option<PInput>> {
        Ok(match (&self.p, self.epsilon) {
            (Some(p), _) => Some(PInput::Probability(parse_rational(p).map_err(|e| anyhow!(e))?)),
            (None, Some(e)) => Some(PInput::Epsilon(e)),
            (None, None) => None,
        })
    }
}

#[derive(Args, Debug)]
struct ProbList {
    /// Comma-separated probabilities
    #[arg(long, value_delimiter = ',', conflicts_with = "epsilon")]
    p: Vec<String>,
    /// Comma-separated epsilons
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
}

impl ProbList {
    fn inputs(&self) -> anyhow::Result<Vec<PInput>> {
        collect_inputs(&self.p, &self.epsilon).map_err(|e| anyhow!(e))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prior/posterior single-target vulnerability and leakage of one mechanism
    Vuln {
        #[arg(long)]
        mech: MechanismKind,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        prob: Prob,
        #[arg(long, value_enum, default_value = "closed")]
        method: Method,
        /// Constant of the asymptotic estimate
        #[arg(long, default_value_t = 1.0)]
        f: f64,
    },
    /// Posterior vulnerability over a grid of mechanisms, n and p, as CSV
    Sweep {
        /// Comma-separated: krr, shuffle, krr-shuffle
        #[arg(long = "mech", value_delimiter = ',', required = true)]
        mechs: Vec<MechanismKind>,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long)]
        n_start: u64,
        #[arg(long)]
        n_end: u64,
        #[arg(long, default_value_t = 1)]
        n_step: u64,
        #[command(flatten)]
        probs: ProbList,
        #[arg(long, value_enum, default_value = "closed")]
        method: Method,
        #[arg(long, default_value_t = 1.0)]
        f: f64,
    },
    /// All-but-one adversary against binary k-RR then shuffle
    Abo {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        probs: ProbList,
        /// How many of the n-1 known records hold value a
        #[arg(long, conflicts_with = "sweep_known", required_unless_present = "sweep_known")]
        known_a: Option<u64>,
        /// CSV over every known composition, for each p
        #[arg(long)]
        sweep_known: bool,
    },
    /// Dump a channel matrix as CSV
    Channel {
        #[arg(long, value_enum)]
        kind: ChannelKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        prob: Prob,
    },
    /// Run an invariant suite
    Check {
        /// equivalence, commute, oracle, brown, fastform, dpi or all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 5)]
        max_n: usize,
    },
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let g = &cli.global;
    let text = match cli.command {
        Command::Vuln { mech, n, k, prob, method, f } => {
            let p = match prob.input()? {
                Some(p) => p,
                None if mech == MechanismKind::Shuffle => PInput::one(),
                None => bail!("--p or --epsilon is required for {mech}"),
            };
            let exact = g.exact(n <= EXACT_DEFAULT_MAX_N && p.is_exact() && method != Method::Approx);
            let req = VulnRequest { kind: mech, n, k, p, method, f };
            if exact {
                commands::vuln::<Exact>(&req)?
            } else {
                commands::vuln::<f64>(&req)?
            }
        }
        Command::Sweep { mechs, k, n_start, n_end, n_step, probs, method, f } => {
            if n_step == 0 {
                bail!("--n-step must be positive");
            }
            let ns = (n_start..=n_end).step_by(n_step as usize).collect();
            let req = SweepRequest { kinds: mechs, ns, k, ps: probs.inputs()?, method, f };
            if g.exact(false) {
                commands::sweep::<Exact>(&req)?
            } else {
                commands::sweep::<f64>(&req)?
            }
        }
        Command::Abo { n, probs, known_a, sweep_known } => {
            let ps = probs.inputs()?;
            if ps.is_empty() {
                bail!("--p or --epsilon is required");
            }
            if sweep_known {
                if g.exact(false) {
                    commands::abo_sweep::<Exact>(n, &ps)?
                } else {
                    commands::abo_sweep::<f64>(n, &ps)?
                }
            } else {
                let [p] = ps.as_slice() else {
                    bail!("a single --p or --epsilon is needed without --sweep-known");
                };
                let known_a = known_a.expect("clap requires --known-a");
                if g.exact(n <= EXACT_DEFAULT_MAX_N && p.is_exact()) {
                    commands::abo_single::<Exact>(n, p, known_a)?
                } else {
                    commands::abo_single::<f64>(n, p, known_a)?
                }
            }
        }
        Command::Channel { kind, n, k, prob } => {
            let p = prob.input()?;
            let exact = g.exact(p.as_ref().is_none_or(PInput::is_exact));
            let req = ChannelRequest { kind, n, k, p, cap: Cap::new(g.cap) };
            if exact {
                commands::channel::<Exact>(&req)?
            } else {
                commands::channel::<f64>(&req)?
            }
        }
        Command::Check { suite, max_n } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>()?]
            };
            let (report, passed) = commands::check(&suites, max_n);
            emit(g.out.as_deref(), &report)?;
            return Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(3) });
        }
    };
    emit(g.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<QifError>() {
        Some(
            QifError::CapExceeded { .. }
            | QifError::CellLimitExceeded { .. }
            | QifError::OracleBoundExceeded { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
