//! Named invariant suites, runnable from the command line.
//!
//! Each suite reports one [`CheckOutcome`] per property, aggregated over all
//! parameter combinations it covers.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{
    build_krr, build_krr_reduced, build_shuffle_full, build_shuffle_reduced, cascade, equivalent, Cap,
    Channel, Label,
};
use crate::closed_forms::{
    adj_intpart_sum, brown_b, ns_from_shuffle, v_post_ns_binary_fast, v_post_ns_binary_sum,
    v_post_ns_compositions, v_post_ns_general, v_post_ns_general_partition,
    v_post_shuffle_binary_fast, v_post_shuffle_binary_sum, v_post_shuffle_compositions,
    v_post_shuffle_general,
};
use crate::oracle::{oracle_posterior, Stage, ORACLE_BOUND};
use crate::scalar::{Exact, Scalar};
use crate::vulnerability::{posterior_vulnerability, GainFunction, Prior};
use crate::{QifError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Equivalence,
    Commute,
    Oracle,
    Brown,
    FastForm,
    Dpi,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Equivalence,
        Suite::Commute,
        Suite::Oracle,
        Suite::Brown,
        Suite::FastForm,
        Suite::Dpi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Equivalence => "equivalence",
            Suite::Commute => "commute",
            Suite::Oracle => "oracle",
            Suite::Brown => "brown",
            Suite::FastForm => "fastform",
            Suite::Dpi => "dpi",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = QifError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| QifError::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} cases)", self.name, self.cases)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Accumulates pass/fail over many cases of one property.
struct Tally {
    name: String,
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            cases: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, case: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(case());
        }
    }

    fn record_result(&mut self, result: Result<bool>, case: impl FnOnce() -> String) {
        match result {
            Ok(ok) => self.record(ok, case),
            Err(e) => {
                self.cases += 1;
                self.failures.push(format!("{}: {e}", case()));
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        let detail = self.failures.iter().take(5).cloned().collect::<Vec<_>>().join("; ");
        CheckOutcome {
            passed: self.failures.is_empty(),
            name: self.name,
            cases: self.cases,
            detail,
        }
    }
}

fn r(n: i64, d: i64) -> Exact {
    Exact::from_ratio(n, d)
}

fn fits(n: usize, k: u32) -> bool {
    (k as u64).checked_pow(n as u32).is_some_and(|s| s <= ORACLE_BOUND)
}

/// Parameter grid `(n, k, p)` for the channel-level suites.
fn channel_grid(max_n: usize, ks: &[u32], ps: &[Exact]) -> Vec<(usize, u32, Exact)> {
    let mut grid = Vec::new();
    for &k in ks {
        for n in 1..=max_n {
            if !fits(n, k) {
                continue;
            }
            for p in ps {
                if *p >= r(1, k as i64) {
                    grid.push((n, k, p.clone()));
                }
            }
        }
    }
    grid
}

fn lattice_probabilities() -> Vec<Exact> {
    vec![r(1, 2), r(2, 3), r(3, 4), r(1, 1)]
}

struct Channels {
    n: Channel<Exact>,
    nr: Channel<Exact>,
    s: Channel<Exact>,
    sr: Channel<Exact>,
}

fn build_all(n: usize, k: u32, p: &Exact) -> Result<Channels> {
    let cap = Cap::new(ORACLE_BOUND);
    Ok(Channels {
        n: build_krr(n, k, p, cap)?,
        nr: build_krr_reduced(n, k, p, cap)?,
        s: build_shuffle_full(n, k, cap)?,
        sr: build_shuffle_reduced(n, k, cap)?,
    })
}

/// S ≡ Sʳ, NS ≡ NSʳ, SN ≡ SʳNʳ, and the ill-typed SʳN.
pub fn equivalence_suite(max_n: usize) -> Vec<CheckOutcome> {
    let mut s_sr = Tally::new("S ≡ Sʳ");
    let mut ns_nsr = Tally::new("NS ≡ NSʳ");
    let mut sn_srnr = Tally::new("SN ≡ SʳNʳ");
    let mut ill_typed = Tally::new("SʳN is ill-typed (N ≢ Nʳ)");
    for (n, k, p) in channel_grid(max_n, &[2, 3], &lattice_probabilities()) {
        let case = || format!("n={n} k={k} p={p}");
        let ch = match build_all(n, k, &p) {
            Ok(ch) => ch,
            Err(e) => {
                s_sr.record(false, || format!("{}: {e}", case()));
                continue;
            }
        };
        s_sr.record_result(equivalent(&ch.s, &ch.sr), case);
        ns_nsr.record_result(
            cascade(&ch.n, &ch.s).and_then(|ns| equivalent(&ns, &cascade(&ch.n, &ch.sr)?)),
            case,
        );
        sn_srnr.record_result(
            cascade(&ch.s, &ch.n).and_then(|sn| equivalent(&sn, &cascade(&ch.sr, &ch.nr)?)),
            case,
        );
        // With n = 1 histograms and datasets are in bijection but carry different labels.
        ill_typed.record(
            matches!(cascade(&ch.sr, &ch.n), Err(QifError::CascadeMismatch { .. })),
            case,
        );
    }
    vec![s_sr.finish(), ns_nsr.finish(), sn_srnr.finish(), ill_typed.finish()]
}

/// NS = SN as matrices (hence NS ≡ SN), and NSʳ = SʳNʳ as matrices.
pub fn commute_suite(max_n: usize) -> Vec<CheckOutcome> {
    let mut full = Tally::new("NS = SN");
    let mut equiv = Tally::new("NS ≡ SN");
    let mut reduced = Tally::new("NSʳ = SʳNʳ");
    for (n, k, p) in channel_grid(max_n, &[2, 3], &lattice_probabilities()) {
        let case = || format!("n={n} k={k} p={p}");
        let ch = match build_all(n, k, &p) {
            Ok(ch) => ch,
            Err(e) => {
                full.record(false, || format!("{}: {e}", case()));
                continue;
            }
        };
        let ns = cascade(&ch.n, &ch.s);
        let sn = cascade(&ch.s, &ch.n);
        match (ns, sn) {
            (Ok(ns), Ok(sn)) => {
                full.record(ns == sn, case);
                equiv.record_result(equivalent(&ns, &sn), case);
            }
            (Err(e), _) | (_, Err(e)) => full.record(false, || format!("{}: {e}", case())),
        }
        reduced.record_result(
            cascade(&ch.n, &ch.sr).and_then(|a| Ok(a == cascade(&ch.sr, &ch.nr)?)),
            case,
        );
    }
    vec![full.finish(), equiv.finish(), reduced.finish()]
}

pub fn oracle_probabilities() -> Vec<Exact> {
    vec![r(1, 2), r(3, 5), r(3, 4), r(9, 10), r(1, 1)]
}

/// `(k, largest n)` pairs the oracle comparison covers at a given `max_n`.
pub fn oracle_sizes(max_n: usize) -> Vec<(u32, usize)> {
    [(2u32, 8usize), (3, 5), (4, 4)]
        .into_iter()
        .map(|(k, n)| (k, n.min(max_n)))
        .collect()
}

/// Every closed form against the brute-force oracle.
pub fn oracle_suite(max_n: usize) -> Vec<CheckOutcome> {
    let mut krr = Tally::new("V[N] = p");
    let mut binary_shuffle = Tally::new("binary V[S] sum and fast forms");
    let mut binary_ns = Tally::new("binary V[NS] sum and fast forms");
    let mut general_shuffle = Tally::new("general V[S] partition and composition forms");
    let mut general_ns = Tally::new("general V[NS] linear relation and partition form");
    for (k, top) in oracle_sizes(max_n) {
        for n in 1..=top {
            let nn = n as u64;
            let shuffle = oracle_posterior(n, k, &[Stage::Shuffle], &Exact::one());
            match &shuffle {
                Ok(v) => {
                    let case = || format!("n={n} k={k}");
                    if k == 2 {
                        binary_shuffle.record(
                            *v == v_post_shuffle_binary_sum::<Exact>(nn)
                                && *v == v_post_shuffle_binary_fast::<Exact>(nn),
                            case,
                        );
                    }
                    general_shuffle.record(
                        *v == v_post_shuffle_general::<Exact>(nn, k)
                            && *v == v_post_shuffle_compositions::<Exact>(nn, k),
                        case,
                    );
                }
                Err(e) => general_shuffle.record(false, || format!("n={n} k={k}: {e}")),
            }
            for p in oracle_probabilities() {
                if p < r(1, k as i64) {
                    continue;
                }
                let case = || format!("n={n} k={k} p={p}");
                krr.record_result(
                    oracle_posterior(n, k, &[Stage::Krr], &p).map(|v| v == p),
                    case,
                );
                let ns = oracle_posterior(n, k, &[Stage::Krr, Stage::Shuffle], &p);
                let Ok(ns) = ns else {
                    general_ns.record_result(ns.map(|_| false), case);
                    continue;
                };
                if k == 2 {
                    binary_ns.record(
                        ns == v_post_ns_binary_sum(nn, &p) && ns == v_post_ns_binary_fast(nn, &p),
                        case,
                    );
                }
                general_ns.record(
                    ns == v_post_ns_general(nn, k, &p)
                        && ns == v_post_ns_general_partition(nn, k, &p)
                        && ns == v_post_ns_compositions(nn, k, &p),
                    case,
                );
            }
        }
    }
    vec![
        krr.finish(),
        binary_shuffle.finish(),
        binary_ns.finish(),
        general_shuffle.finish(),
        general_ns.finish(),
    ]
}

/// Brown's B(n, k) against the partition form, and partitions against compositions.
pub fn brown_suite(max_n: usize) -> Vec<CheckOutcome> {
    let mut brown = Tally::new("Brown B(n,k) = partition form");
    let mut comp = Tally::new("partition form = composition form");
    for n in 1..=max_n as u64 {
        for k in 2..=5u32 {
            let case = || format!("n={n} k={k}");
            brown.record(brown_b(n, k) == adj_intpart_sum(n, k), case);
            comp.record(
                v_post_shuffle_general::<Exact>(n, k) == v_post_shuffle_compositions::<Exact>(n, k),
                case,
            );
        }
    }
    vec![brown.finish(), comp.finish()]
}

/// Fast binary formulas equal their defining sums, and the general-k linear relation.
pub fn fastform_suite(max_n: usize) -> Vec<CheckOutcome> {
    let mut shuffle = Tally::new("binary V[S] fast = sum");
    let mut ns = Tally::new("binary V[NS] fast = sum");
    let mut linear = Tally::new("V[NS] = V[S](kp-1)/(k-1) + (1-p)/(k-1)");
    let ps = [r(1, 2), r(3, 5), r(3, 4), r(9, 10), r(1, 1)];
    for n in 1..=max_n as u64 {
        shuffle.record(
            v_post_shuffle_binary_fast::<Exact>(n) == v_post_shuffle_binary_sum::<Exact>(n),
            || format!("n={n}"),
        );
        for p in &ps {
            ns.record(
                v_post_ns_binary_fast(n, p) == v_post_ns_binary_sum(n, p),
                || format!("n={n} p={p}"),
            );
        }
        if n <= 10 {
            for k in 2..=4u32 {
                let vs = v_post_shuffle_general::<Exact>(n, k);
                for p in ps.iter().filter(|p| **p >= r(1, k as i64)) {
                    linear.record(
                        ns_from_shuffle(&vs, k, p) == v_post_ns_compositions(n, k, p),
                        || format!("n={n} k={k} p={p}"),
                    );
                }
            }
        }
    }
    vec![shuffle.finish(), ns.finish(), linear.finish()]
}

fn random_prior(rng: &mut ChaCha8Rng, secrets: &[Label]) -> Prior<Exact> {
    let mut weights: Vec<Exact> = secrets.iter().map(|_| r(rng.gen_range(0..50), 1)).collect();
    if weights.iter().all(Zero::is_zero) {
        weights[0] = Exact::one();
    }
    Prior::from_weights(secrets.to_vec(), weights).expect("non-zero weights")
}

fn random_gain(rng: &mut ChaCha8Rng, secrets: &[Label]) -> GainFunction<Exact> {
    let actions = rng.gen_range(1..=6usize);
    let gains = (0..actions * secrets.len())
        .map(|_| r(rng.gen_range(0..10), rng.gen_range(1..4)))
        .collect();
    GainFunction::new(
        (0..actions).map(|w| format!("w{w}")).collect(),
        secrets.to_vec(),
        gains,
    )
    .expect("non-negative gains")
}

/// Data-processing inequality: post-processing N by S never raises vulnerability.
pub fn dpi_suite(max_n: usize, samples: usize, seed: u64) -> Vec<CheckOutcome> {
    let mut tally = Tally::new("V[π,g](NS) ≤ V[π,g](N)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = max_n.min(4);
    for k in [2u32, 3] {
        for p in [r(3, 5), r(9, 10)] {
            let case = || format!("n={n} k={k} p={p}");
            let built = build_krr(n, k, &p, Cap::default()).and_then(|nc| {
                let ns = cascade(&nc, &build_shuffle_full(n, k, Cap::default())?)?;
                Ok((nc, ns))
            });
            let (nc, ns) = match built {
                Ok(pair) => pair,
                Err(e) => {
                    tally.record(false, || format!("{}: {e}", case()));
                    continue;
                }
            };
            for _ in 0..samples {
                let pi = random_prior(&mut rng, nc.rows());
                let g = random_gain(&mut rng, nc.rows());
                tally.record_result(
                    posterior_vulnerability(&pi, &g, &ns)
                        .and_then(|a| Ok(a <= posterior_vulnerability(&pi, &g, &nc)?)),
                    case,
                );
            }
        }
    }
    vec![tally.finish()]
}

pub fn run_suite(suite: Suite, max_n: usize) -> Vec<CheckOutcome> {
    match suite {
        Suite::Equivalence => equivalence_suite(max_n),
        Suite::Commute => commute_suite(max_n),
        Suite::Oracle => oracle_suite(max_n),
        Suite::Brown => brown_suite(max_n),
        Suite::FastForm => fastform_suite(max_n),
        Suite::Dpi => dpi_suite(max_n, 50, 0x5eed),
    }
}
