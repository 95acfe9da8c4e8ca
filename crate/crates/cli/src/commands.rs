use std::fmt::Write as _;

use anyhow::{bail, Context};
use clap::ValueEnum;
use rayon::prelude::*;

use qif_shuffle::channels::{
    build_intro_m, build_intro_mprime, build_krr, build_krr_reduced, build_shuffle_full,
    build_shuffle_reduced, cascade, Cap, Channel,
};
use qif_shuffle::checks::{run_suite, CheckOutcome, Suite};
use qif_shuffle::closed_forms::{
    posterior_approx, posterior_closed, posterior_sum, MechanismKind, MechanismSpec,
};
use qif_shuffle::combinatorics::p_to_epsilon;
use qif_shuffle::oracle::{oracle_posterior, Stage};
use qif_shuffle::vulnerability::{abo_posterior, known_a_fraction, leakage_from, AboScenario, LeakageMode};
use qif_shuffle::{Exact, Scalar};

use crate::params::PInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Sum,
    Oracle,
    Approx,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Sum => "sum",
            Method::Oracle => "oracle",
            Method::Approx => "approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelKind {
    Krr,
    Shuffle,
    ShuffleReduced,
    KrrReduced,
    Ns,
    Sn,
    NsReduced,
    SnReduced,
    IntroM,
    IntroMprime,
}

impl ChannelKind {
    pub fn uses_p(&self) -> bool {
        !matches!(
            self,
            ChannelKind::Shuffle | ChannelKind::ShuffleReduced | ChannelKind::IntroM | ChannelKind::IntroMprime
        )
    }

    pub fn is_intro(&self) -> bool {
        matches!(self, ChannelKind::IntroM | ChannelKind::IntroMprime)
    }
}

/// `5/8 (0.625)` for exact values, plain decimal otherwise.
pub fn show<S: Scalar>(v: &S) -> String {
    if S::EXACT {
        format!("{v} ({})", v.to_f64())
    } else {
        v.to_string()
    }
}

fn stages(kind: MechanismKind) -> &'static [Stage] {
    match kind {
        MechanismKind::Krr => &[Stage::Krr],
        MechanismKind::Shuffle => &[Stage::Shuffle],
        MechanismKind::KrrShuffle => &[Stage::Krr, Stage::Shuffle],
    }
}

/// Posterior single-target vulnerability of one mechanism by the chosen method.
pub fn posterior<S: Scalar>(spec: &MechanismSpec<S>, exact_p: &PInput, method: Method, f: f64) -> anyhow::Result<S> {
    Ok(match method {
        Method::Closed => posterior_closed(spec),
        Method::Sum => posterior_sum(spec),
        Method::Oracle => {
            let p: Exact = exact_p.to_scalar(spec.k)?;
            let n = usize::try_from(spec.n).context("n too large")?;
            S::from_rational(&oracle_posterior(n, spec.k, stages(spec.kind), &p)?)
        }
        Method::Approx => {
            if S::EXACT {
                bail!("--method approx is a floating-point estimate; drop --exact");
            }
            let fspec = MechanismSpec::new(spec.kind, spec.n, spec.k, spec.p.to_f64())?;
            S::from_f64(posterior_approx(&fspec, f).value)
        }
    })
}

/// The effective p for a mechanism: validated, then fixed to 1 for the pure shuffle.
fn mechanism_p(kind: MechanismKind, p: &PInput, k: u32) -> anyhow::Result<PInput> {
    p.to_scalar::<f64>(k)?;
    Ok(if kind == MechanismKind::Shuffle { PInput::one() } else { p.clone() })
}

pub struct VulnRequest {
    pub kind: MechanismKind,
    pub n: u64,
    pub k: u32,
    pub p: PInput,
    pub method: Method,
    pub f: f64,
}

pub fn vuln<S: Scalar>(req: &VulnRequest) -> anyhow::Result<String> {
    let p_in = mechanism_p(req.kind, &req.p, req.k)?;
    let p: S = p_in.to_scalar(req.k)?;
    let spec = MechanismSpec::new(req.kind, req.n, req.k, p)?;
    let post = posterior(&spec, &p_in, req.method, req.f)?;
    // The target record is uniform under the uniform dataset prior.
    let prior = S::from_ratio(1u32, req.k);
    let mult = leakage_from(&prior, &post, LeakageMode::Multiplicative)?;
    let add = leakage_from(&prior, &post, LeakageMode::Additive)?;
    let epsilon = match p_to_epsilon(spec.p.to_f64(), req.k) {
        Ok(e) => e.to_string(),
        Err(_) => "inf".to_string(),
    };
    let mut out = String::new();
    writeln!(out, "mechanism: {}", req.kind)?;
    writeln!(out, "n: {}", req.n)?;
    writeln!(out, "k: {}", req.k)?;
    writeln!(out, "p: {}", show(&spec.p))?;
    writeln!(out, "epsilon: {epsilon}")?;
    writeln!(out, "method: {}", req.method.name())?;
    writeln!(out, "prior_v: {}", show(&prior))?;
    writeln!(out, "posterior_v: {}", show(&post))?;
    writeln!(out, "multiplicative_leakage: {}", show(&mult))?;
    writeln!(out, "additive_leakage: {}", show(&add))?;
    if req.method == Method::Approx {
        let regime = (req.n as f64) >= req.k as f64 * (req.k as f64).ln();
        writeln!(out, "in_regime: {regime}")?;
    }
    Ok(out)
}

pub struct SweepRequest {
    pub kinds: Vec<MechanismKind>,
    pub ns: Vec<u64>,
    pub k: u32,
    pub ps: Vec<PInput>,
    pub method: Method,
    pub f: f64,
}

pub const SWEEP_HEADER: &str = "mechanism,n,k,p,method,posterior_v";

/// Validated p values in ascending order, duplicates removed.
fn sorted_ps<S: Scalar>(ps: &[PInput], k: u32) -> anyhow::Result<Vec<(S, PInput)>> {
    let mut out = Vec::with_capacity(ps.len());
    for p in ps {
        out.push((p.to_scalar::<S>(k)?, p.clone()));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("probabilities are ordered"));
    out.dedup_by(|a, b| a.0 == b.0);
    Ok(out)
}

pub fn sweep<S: Scalar>(req: &SweepRequest) -> anyhow::Result<String> {
    let ps = sorted_ps::<S>(&req.ps, req.k)?;
    let mut kinds: Vec<MechanismKind> = Vec::new();
    for &kind in &req.kinds {
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.iter().any(|k| *k != MechanismKind::Shuffle) && ps.is_empty() {
        bail!("--p or --epsilon is required for k-RR mechanisms");
    }
    let shuffle_p = vec![(S::one(), PInput::one())];
    let mut grid = Vec::new();
    for &kind in &kinds {
        let kind_ps = if kind == MechanismKind::Shuffle { &shuffle_p } else { &ps };
        for &n in &req.ns {
            for (p, p_in) in kind_ps {
                grid.push((kind, n, p.clone(), p_in));
            }
        }
    }
    let rows = grid
        .par_iter()
        .map(|(kind, n, p, p_in)| -> anyhow::Result<String> {
            let spec = MechanismSpec::new(*kind, *n, req.k, p.clone())?;
            let v = posterior(&spec, p_in, req.method, req.f)?;
            Ok(format!("{kind},{n},{},{p},{},{v}\n", req.k, req.method.name()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = format!("{SWEEP_HEADER}\n");
    out.extend(rows);
    Ok(out)
}

pub fn abo_single<S: Scalar>(n: u64, p: &PInput, known_a: u64) -> anyhow::Result<String> {
    let scenario = AboScenario::new(n, p.to_scalar::<S>(2)?, known_a)?;
    Ok(format!("abo_posterior_v: {}\n", show(&abo_posterior(&scenario)?)))
}

pub const ABO_HEADER: &str = "known_a_fraction,p,abo_posterior_v";

pub fn abo_sweep<S: Scalar>(n: u64, ps: &[PInput]) -> anyhow::Result<String> {
    if n == 0 {
        bail!("n must be at least 1");
    }
    let ps = sorted_ps::<S>(ps, 2)?;
    let grid: Vec<(&S, u64)> = ps.iter().flat_map(|(p, _)| (0..n).map(move |a| (p, a))).collect();
    let rows = grid
        .par_iter()
        .map(|&(p, known_a)| -> anyhow::Result<String> {
            let v = abo_posterior(&AboScenario::new(n, p.clone(), known_a)?)?;
            Ok(format!("{},{p},{v}\n", known_a_fraction(n, known_a)))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = format!("{ABO_HEADER}\n");
    out.extend(rows);
    Ok(out)
}

pub struct ChannelRequest {
    pub kind: ChannelKind,
    pub n: usize,
    pub k: u32,
    pub p: Option<PInput>,
    pub cap: Cap,
}

pub fn channel<S: Scalar>(req: &ChannelRequest) -> anyhow::Result<String> {
    let (n, k, cap) = (req.n, req.k, req.cap);
    if req.kind.is_intro() {
        if k != 2 {
            bail!("intro mechanisms are binary; use --k 2");
        }
        let Some(PInput::Epsilon(eps)) = req.p else {
            bail!("intro mechanisms take --epsilon");
        };
        let c: Channel<S> = if req.kind == ChannelKind::IntroM {
            build_intro_m(n, eps)?
        } else {
            build_intro_mprime(n, eps)?
        };
        return Ok(c.to_csv());
    }
    let p: S = match (&req.p, req.kind.uses_p()) {
        (Some(p), _) => p.to_scalar(k)?,
        (None, false) => S::one(),
        (None, true) => bail!("--p or --epsilon is required for this channel"),
    };
    let c = match req.kind {
        ChannelKind::Krr => build_krr(n, k, &p, cap)?,
        ChannelKind::Shuffle => build_shuffle_full(n, k, cap)?,
        ChannelKind::ShuffleReduced => build_shuffle_reduced(n, k, cap)?,
        ChannelKind::KrrReduced => build_krr_reduced(n, k, &p, cap)?,
        ChannelKind::Ns => cascade(&build_krr(n, k, &p, cap)?, &build_shuffle_full(n, k, cap)?)?,
        ChannelKind::Sn => cascade(&build_shuffle_full(n, k, cap)?, &build_krr(n, k, &p, cap)?)?,
        ChannelKind::NsReduced => cascade(&build_krr(n, k, &p, cap)?, &build_shuffle_reduced(n, k, cap)?)?,
        ChannelKind::SnReduced => cascade(
            &build_shuffle_reduced(n, k, cap)?,
            &build_krr_reduced(n, k, &p, cap)?,
        )?,
        ChannelKind::IntroM | ChannelKind::IntroMprime => unreachable!("handled above"),
    };
    Ok(c.to_csv())
}

/// Runs the suites and renders a report; the flag is `true` iff everything passed.
pub fn check(suites: &[Suite], max_n: usize) -> (String, bool) {
    let mut out = String::new();
    let mut all = true;
    for &suite in suites {
        let outcomes: Vec<CheckOutcome> = run_suite(suite, max_n);
        let passed = outcomes.iter().all(|o| o.passed);
        all &= passed;
        let _ = writeln!(out, "suite {suite} (max-n {max_n})");
        for o in &outcomes {
            let _ = writeln!(out, "  {o}");
        }
        let _ = writeln!(out, "{} {suite}", if passed { "PASS" } else { "FAIL" });
    }
    (out, all)
}
