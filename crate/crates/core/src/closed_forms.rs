//! Closed-form single-target posterior vulnerabilities under the uniform
//! prior, for k-RR (`N`), shuffling (`S`), and k-RR followed by shuffling
//! (`NS`), together with their asymptotic approximations.
//!
//! General-`k` shuffle vulnerabilities are evaluated one integer partition at
//! a time: every composition of `n` into `k` counts with the same multiset of
//! values contributes the same multinomial and the same maximum, so the sum
//! over compositions collapses to a sum over partitions weighted by the number
//! of ways to place the partition's parts into `k` labelled bins.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::combinatorics::{
    binomial, compositions, factorial, ln_multinomial, multinomial, partitions, IntegerPartition,
};
use crate::scalar::{check_krr_probability, CompensatedSum, Exact, Scalar};
use crate::{QifError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismKind {
    Krr,
    Shuffle,
    KrrShuffle,
}

impl MechanismKind {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::Krr => "krr",
            MechanismKind::Shuffle => "shuffle",
            MechanismKind::KrrShuffle => "krr-shuffle",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = QifError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "krr" | "n" => Ok(MechanismKind::Krr),
            "shuffle" | "s" => Ok(MechanismKind::Shuffle),
            "krr-shuffle" | "ns" | "krr-then-shuffle" => Ok(MechanismKind::KrrShuffle),
            other => Err(QifError::InvalidParameter(format!("unknown mechanism '{other}'"))),
        }
    }
}

/// A mechanism instance: `n` records over `k` values with k-RR parameter `p`
/// (`p` is ignored by the pure shuffle).
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSpec<S> {
    pub kind: MechanismKind,
    pub n: u64,
    pub k: u32,
    pub p: S,
}

impl<S: Scalar> MechanismSpec<S> {
    pub fn new(kind: MechanismKind, n: u64, k: u32, p: S) -> Result<Self> {
        if n == 0 {
            return Err(QifError::InvalidParameter("n must be at least 1".into()));
        }
        if k < 2 {
            return Err(QifError::InvalidParameter(format!("k must be at least 2, got {k}")));
        }
        check_krr_probability(&p, k)?;
        Ok(Self { kind, n, k, p })
    }

    /// Pure shuffle with `p = 1`.
    pub fn shuffle(n: u64, k: u32) -> Result<Self> {
        Self::new(MechanismKind::Shuffle, n, k, S::one())
    }
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn two_pow(n: u64) -> BigUint {
    BigUint::one() << n as usize
}

/// `V_T[N] = p`, independent of `n` and `k`.
pub fn v_post_krr<S: Scalar>(spec: &MechanismSpec<S>) -> S {
    spec.p.clone()
}

/// Binary shuffle: `(1/2ⁿ) Σ_i C(n, i) max(i, n-i) / n`.
pub fn v_post_shuffle_binary_sum<S: Scalar>(n: u64) -> S {
    assert!(n >= 1, "n must be at least 1");
    let total: BigUint = (0..=n)
        .map(|i| binomial(n, i as i64) * i.max(n - i))
        .sum();
    S::from_rational(&ratio(total, two_pow(n) * n))
}

/// Binary shuffle: `1/2 + C(n-1, ⌊(n-1)/2⌋) / 2ⁿ`.
pub fn v_post_shuffle_binary_fast<S: Scalar>(n: u64) -> S {
    assert!(n >= 1, "n must be at least 1");
    let central = binomial(n - 1, ((n - 1) / 2) as i64);
    S::from_ratio(1u32, 2u32) + S::from_rational(&ratio(central, two_pow(n)))
}

/// Binary k-RR then shuffle:
/// `(1/2ⁿ) Σ_i C(n, i) (max(i, n-i) p + min(i, n-i) (1-p)) / n`.
pub fn v_post_ns_binary_sum<S: Scalar>(n: u64, p: &S) -> S {
    assert!(n >= 1, "n must be at least 1");
    let mut major = BigUint::zero();
    let mut minor = BigUint::zero();
    for i in 0..=n {
        let c = binomial(n, i as i64);
        major += &c * i.max(n - i);
        minor += c * i.min(n - i);
    }
    let den = two_pow(n) * n;
    S::from_rational(&ratio(major, den.clone())) * p.clone()
        + S::from_rational(&ratio(minor, den)) * (S::one() - p.clone())
}

/// Binary k-RR then shuffle: `1/2 + C(n-1, ⌊(n-1)/2⌋)(2p-1) / 2ⁿ`.
pub fn v_post_ns_binary_fast<S: Scalar>(n: u64, p: &S) -> S {
    assert!(n >= 1, "n must be at least 1");
    let central = binomial(n - 1, ((n - 1) / 2) as i64);
    let spread = S::from_u64(2) * p.clone() - S::one();
    S::from_ratio(1u32, 2u32) + S::from_rational(&ratio(central, two_pow(n))) * spread
}

/// Ways to realise a partition as a labelled composition, times the number of
/// datasets per composition: `C(n; λ) · C(k; λ̄, k-ℓ)`.
pub fn partition_weight(n: u64, k: u32, lambda: &IntegerPartition) -> BigUint {
    let mut labels = lambda.multiplicity_counts();
    labels.push(k as u64 - lambda.len() as u64);
    multinomial(n, lambda.parts()).expect("parts sum to n")
        * multinomial(k as u64, &labels).expect("multiplicities sum to k")
}

fn ln_partition_weight(n: u64, k: u32, lambda: &IntegerPartition) -> f64 {
    let mut labels = lambda.multiplicity_counts();
    labels.push(k as u64 - lambda.len() as u64);
    ln_multinomial(n, lambda.parts()).expect("parts sum to n")
        + ln_multinomial(k as u64, &labels).expect("multiplicities sum to k")
}

fn collect_partitions(n: u64, k: u32) -> Vec<IntegerPartition> {
    partitions(n, k as usize).collect()
}

/// `Σ_λ C(n; λ) C(k; λ̄, k-ℓ) λ*`, i.e. `kⁿ · n · V_T[S]`.
pub fn adj_intpart_sum(n: u64, k: u32) -> BigUint {
    collect_partitions(n, k)
        .par_iter()
        .map(|lambda| partition_weight(n, k, lambda) * lambda.max_part())
        .reduce(BigUint::zero, |a, b| a + b)
}

fn shuffle_general_exact(n: u64, k: u32) -> Exact {
    let den = BigUint::from(k).pow(n as u32) * n;
    ratio(adj_intpart_sum(n, k), den)
}

fn shuffle_general_float(n: u64, k: u32) -> f64 {
    let shift = n as f64 * (k as f64).ln();
    let terms: Vec<f64> = collect_partitions(n, k)
        .par_iter()
        .map(|lambda| {
            (ln_partition_weight(n, k, lambda) - shift).exp() * lambda.max_part() as f64 / n as f64
        })
        .collect();
    terms.into_iter().collect::<CompensatedSum>().total()
}

/// General-`k` shuffle: `(1/kⁿ) Σ_λ C(n; λ) C(k; λ̄, k-ℓ) λ*/n`.
///
/// Exact backends sum big integers; the float backend evaluates each term in
/// log space and accumulates with compensated summation.
pub fn v_post_shuffle_general<S: Scalar>(n: u64, k: u32) -> S {
    assert!(n >= 1 && k >= 2, "need n >= 1 and k >= 2");
    if S::EXACT {
        S::from_rational(&shuffle_general_exact(n, k))
    } else {
        S::from_f64(shuffle_general_float(n, k))
    }
}

/// General-`k` shuffle summed literally over all compositions of `n`.
/// Exponentially slower than the partition form; kept as a cross-check.
pub fn v_post_shuffle_compositions<S: Scalar>(n: u64, k: u32) -> S {
    assert!(n >= 1 && k >= 2, "need n >= 1 and k >= 2");
    let total: BigUint = compositions(n, k as usize)
        .map(|c| {
            let max = *c.iter().max().expect("k >= 1");
            multinomial(n, &c).expect("composition sums to n") * max
        })
        .sum();
    S::from_rational(&ratio(total, BigUint::from(k).pow(n as u32) * n))
}

/// General-`k` k-RR then shuffle via `V_NS = V_S (kp-1)/(k-1) + (1-p)/(k-1)`.
pub fn v_post_ns_general<S: Scalar>(n: u64, k: u32, p: &S) -> S {
    let vs = v_post_shuffle_general::<S>(n, k);
    ns_from_shuffle(&vs, k, p)
}

/// Applies the linear relation between shuffle and k-RR-then-shuffle vulnerability.
pub fn ns_from_shuffle<S: Scalar>(vs: &S, k: u32, p: &S) -> S {
    let km1 = S::from_u64(k as u64 - 1);
    let slope = (S::from_u64(k as u64) * p.clone() - S::one()) / km1.clone();
    vs.clone() * slope + (S::one() - p.clone()) / km1
}

/// General-`k` k-RR then shuffle summed directly over partitions:
/// `(1/kⁿ) Σ_λ C(n; λ) C(k; λ̄, k-ℓ) (λ* p + (n - λ*)(1-p)/(k-1)) / n`.
pub fn v_post_ns_general_partition<S: Scalar>(n: u64, k: u32, p: &S) -> S {
    assert!(n >= 1 && k >= 2, "need n >= 1 and k >= 2");
    let other = (S::one() - p.clone()) / S::from_u64(k as u64 - 1);
    let per_record = |max: u64| {
        (S::from_u64(max) * p.clone() + S::from_u64(n - max) * other.clone()) / S::from_u64(n)
    };
    let parts = collect_partitions(n, k);
    if S::EXACT {
        let den = BigUint::from(k).pow(n as u32);
        parts.iter().fold(S::zero(), |acc, lambda| {
            let w = S::from_rational(&ratio(partition_weight(n, k, lambda), den.clone()));
            acc + w * per_record(lambda.max_part())
        })
    } else {
        let shift = n as f64 * (k as f64).ln();
        let sum: CompensatedSum = parts
            .iter()
            .map(|lambda| {
                let w = (ln_partition_weight(n, k, lambda) - shift).exp();
                w * per_record(lambda.max_part()).to_f64()
            })
            .collect();
        S::from_f64(sum.total())
    }
}

/// General-`k` k-RR then shuffle summed literally over compositions.
pub fn v_post_ns_compositions<S: Scalar>(n: u64, k: u32, p: &S) -> S {
    assert!(n >= 1 && k >= 2, "need n >= 1 and k >= 2");
    let mut major = BigUint::zero();
    let mut minor = BigUint::zero();
    for c in compositions(n, k as usize) {
        let max = *c.iter().max().expect("k >= 1");
        let w = multinomial(n, &c).expect("composition sums to n");
        major += &w * max;
        minor += w * (n - max);
    }
    let den = BigUint::from(k).pow(n as u32) * n;
    let other = (S::one() - p.clone()) / S::from_u64(k as u64 - 1);
    S::from_rational(&ratio(major, den.clone())) * p.clone()
        + S::from_rational(&ratio(minor, den)) * other
}

/// `B(n, k) = Σ_{|λ|=n} λ* · n!/(λ! λ̄!) · ℓ! · C(k, ℓ)`, the scaled
/// expected maximum load of `n` balls in `k` bins.
pub fn brown_b(n: u64, k: u32) -> BigUint {
    let n_fact = factorial(n);
    // Partitions longer than k vanish through C(k, ℓ).
    partitions(n, (k as usize).max(1))
        .map(|lambda| {
            let parts_fact: BigUint = lambda.parts().iter().map(|&p| factorial(p)).product();
            let mult_fact: BigUint = lambda
                .multiplicity_counts()
                .iter()
                .map(|&m| factorial(m))
                .product();
            let len = lambda.len() as u64;
            &n_fact / (parts_fact * mult_fact)
                * factorial(len)
                * binomial(k as u64, len as i64)
                * lambda.max_part()
        })
        .sum()
}

/// Expected number of balls in the fullest of `k` bins after `n` uniform throws.
pub fn expected_max_load<S: Scalar>(n: u64, k: u32) -> S {
    v_post_shuffle_general::<S>(n, k) * S::from_u64(n)
}

/// An asymptotic estimate together with whether `n ≥ k ln k` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approximation {
    pub value: f64,
    pub in_regime: bool,
}

fn in_regime(n: u64, k: u32) -> bool {
    n as f64 >= k as f64 * (k as f64).ln()
}

/// `1/k + f·√(ln k / (k n))`.
pub fn v_approx_shuffle(n: u64, k: u32, f: f64) -> Approximation {
    let kf = k as f64;
    Approximation {
        value: 1.0 / kf + f * (kf.ln() / (kf * n as f64)).sqrt(),
        in_regime: in_regime(n, k),
    }
}

/// `1/k + f·√(ln k / (k n))·(kp - 1)/(k - 1)`.
pub fn v_approx_ns(n: u64, k: u32, p: f64, f: f64) -> Approximation {
    let kf = k as f64;
    Approximation {
        value: 1.0 / kf + f * (kf.ln() / (kf * n as f64)).sqrt() * (kf * p - 1.0) / (kf - 1.0),
        in_regime: in_regime(n, k),
    }
}

/// Fast closed form for a mechanism: binary formulas when `k = 2`, partition
/// sums otherwise.
pub fn posterior_closed<S: Scalar>(spec: &MechanismSpec<S>) -> S {
    match (spec.kind, spec.k) {
        (MechanismKind::Krr, _) => v_post_krr(spec),
        (MechanismKind::Shuffle, 2) => v_post_shuffle_binary_fast(spec.n),
        (MechanismKind::Shuffle, k) => v_post_shuffle_general(spec.n, k),
        (MechanismKind::KrrShuffle, 2) => v_post_ns_binary_fast(spec.n, &spec.p),
        (MechanismKind::KrrShuffle, k) => v_post_ns_general(spec.n, k, &spec.p),
    }
}

/// Literal sums over histograms (binary) or compositions (general `k`).
pub fn posterior_sum<S: Scalar>(spec: &MechanismSpec<S>) -> S {
    match (spec.kind, spec.k) {
        (MechanismKind::Krr, _) => v_post_krr(spec),
        (MechanismKind::Shuffle, 2) => v_post_shuffle_binary_sum(spec.n),
        (MechanismKind::Shuffle, k) => v_post_shuffle_compositions(spec.n, k),
        (MechanismKind::KrrShuffle, 2) => v_post_ns_binary_sum(spec.n, &spec.p),
        (MechanismKind::KrrShuffle, k) => v_post_ns_compositions(spec.n, k, &spec.p),
    }
}

/// Asymptotic estimate for a mechanism (`k`-RR alone is exact).
pub fn posterior_approx(spec: &MechanismSpec<f64>, f: f64) -> Approximation {
    match spec.kind {
        MechanismKind::Krr => Approximation {
            value: spec.p,
            in_regime: true,
        },
        MechanismKind::Shuffle => v_approx_shuffle(spec.n, spec.k, f),
        MechanismKind::KrrShuffle => v_approx_ns(spec.n, spec.k, spec.p, f),
    }
}
