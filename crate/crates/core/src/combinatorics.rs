//! Exact and log-space combinatorial primitives.
//!
//! Binomial and multinomial coefficients are exact [`BigUint`]s. The log-space
//! variants serve the float sweeps where the exact integers would be wasteful
//! (e.g. multinomials of `n = 1000`); `ln Γ` carries an absolute error well
//! under `1e-11` per term at that scale.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use statrs::function::gamma::ln_gamma;

use crate::scalar::{check_probability, Scalar};
use crate::{QifError, Result};

/// Exact `C(n, i)`; zero when `i` lies outside `[0, n]`.
pub fn binomial(n: u64, i: i64) -> BigUint {
    if i < 0 || i as u64 > n {
        return BigUint::zero();
    }
    let i = (i as u64).min(n - i as u64);
    let mut acc = BigUint::one();
    for j in 0..i {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, v| acc * v)
}

/// Exact multinomial `n! / (parts[0]! ... parts[m-1]!)`.
pub fn multinomial(n: u64, parts: &[u64]) -> Result<BigUint> {
    let total: u64 = parts.iter().sum();
    if total != n {
        return Err(QifError::PartsSumMismatch {
            expected: n,
            actual: total,
        });
    }
    // Product of binomials C(prefix, part) avoids the large factorial quotient.
    let mut acc = BigUint::one();
    let mut prefix = 0u64;
    for &part in parts {
        prefix += part;
        acc *= binomial(prefix, part as i64);
    }
    Ok(acc)
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln` of the multinomial coefficient; the parts must sum to `n`.
pub fn ln_multinomial(n: u64, parts: &[u64]) -> Result<f64> {
    let total: u64 = parts.iter().sum();
    if total != n {
        return Err(QifError::PartsSumMismatch {
            expected: n,
            actual: total,
        });
    }
    Ok(ln_factorial(n) - parts.iter().map(|&p| ln_factorial(p)).sum::<f64>())
}

/// An integer partition: positive parts in non-increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerPartition {
    parts: Vec<u64>,
}

impl IntegerPartition {
    /// Builds a partition from parts in any order; zero parts are dropped.
    pub fn new(mut parts: Vec<u64>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    /// ℓ, the number of positive parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.parts.iter().sum()
    }

    /// λ*, the largest part (zero for the empty partition).
    pub fn max_part(&self) -> u64 {
        self.parts.first().copied().unwrap_or(0)
    }

    /// λ̄ as `(part value, multiplicity)` pairs, largest value first.
    pub fn multiplicities(&self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = Vec::new();
        for &p in &self.parts {
            match out.last_mut() {
                Some((value, count)) if *value == p => *count += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Just the multiplicity counts of λ̄.
    pub fn multiplicity_counts(&self) -> Vec<u64> {
        self.multiplicities().into_iter().map(|(_, c)| c).collect()
    }
}

/// Streams the partitions of `n` into at most `max_parts` positive parts in
/// decreasing lexicographic order.
pub fn partitions(n: u64, max_parts: usize) -> Partitions {
    assert!(max_parts >= 1, "max_parts must be at least 1");
    Partitions {
        current: None,
        n,
        max_parts,
        done: false,
    }
}

#[derive(Debug, Clone)]
pub struct Partitions {
    current: Option<Vec<u64>>,
    n: u64,
    max_parts: usize,
    done: bool,
}

impl Partitions {
    /// Replaces `parts` by its successor, or returns `false` when exhausted.
    fn advance(parts: &mut Vec<u64>, max_parts: usize) -> bool {
        let mut suffix: u64 = 0;
        for i in (0..parts.len()).rev() {
            let value = parts[i];
            if value > 1 {
                let remainder = suffix + 1;
                let reduced = value - 1;
                let room = (max_parts - i - 1) as u64;
                if remainder <= reduced * room {
                    parts.truncate(i);
                    parts.push(reduced);
                    let mut left = remainder;
                    while left > 0 {
                        let part = left.min(reduced);
                        parts.push(part);
                        left -= part;
                    }
                    return true;
                }
            }
            suffix += value;
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = IntegerPartition;

    fn next(&mut self) -> Option<IntegerPartition> {
        if self.done {
            return None;
        }
        match &mut self.current {
            None => {
                let first = if self.n == 0 { vec![] } else { vec![self.n] };
                self.current = Some(first);
            }
            Some(parts) => {
                if !Self::advance(parts, self.max_parts) {
                    self.done = true;
                    return None;
                }
            }
        }
        self.current.as_ref().map(|parts| IntegerPartition {
            parts: parts.clone(),
        })
    }
}

/// Streams every length-`k` vector of non-negative integers summing to `n`,
/// in decreasing lexicographic order.
pub fn compositions(n: u64, k: usize) -> Compositions {
    assert!(k >= 1, "k must be at least 1");
    let mut first = vec![0; k];
    first[0] = n;
    Compositions {
        next: Some(first),
    }
}

#[derive(Debug, Clone)]
pub struct Compositions {
    next: Option<Vec<u64>>,
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let current = self.next.take()?;
        let k = current.len();
        // Move one unit out of the rightmost non-zero slot before the last one,
        // gathering everything to its right into the slot immediately after.
        let mut successor = current.clone();
        if let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| successor[i] > 0) {
            let tail: u64 = successor[i + 1..].iter().sum();
            successor[i] -= 1;
            for slot in successor[i + 1..].iter_mut() {
                *slot = 0;
            }
            successor[i + 1] = tail + 1;
            self.next = Some(successor);
        }
        Some(current)
    }
}

/// Number of length-`k` compositions of `n`, i.e. `C(n + k - 1, k - 1)`.
pub fn composition_count(n: u64, k: u64) -> BigUint {
    binomial(n + k - 1, k as i64 - 1)
}

/// Precomputed binary k-RR histogram transitions for a fixed `n` and `p`.
///
/// `probability(a_in, a_out)` is the probability that binary k-RR maps a
/// dataset with `a_in` copies of `a` to some dataset with exactly `a_out`
/// copies of `a`. The `b` counts are implied by `n`.
#[derive(Debug, Clone)]
pub struct BinaryKrrTransitions<S> {
    n: u64,
    pascal: Vec<Vec<S>>,
    p_pows: Vec<S>,
    q_pows: Vec<S>,
}

impl<S: Scalar> BinaryKrrTransitions<S> {
    pub fn new(n: u64, p: &S) -> Result<Self> {
        check_probability(p, &S::from_ratio(1u32, 2u32))?;
        let q = S::one() - p.clone();
        let len = n as usize + 1;
        let mut pascal: Vec<Vec<BigUint>> = Vec::with_capacity(len);
        for row in 0..len {
            let mut cur = vec![BigUint::one(); row + 1];
            for j in 1..row {
                cur[j] = &pascal[row - 1][j - 1] + &pascal[row - 1][j];
            }
            pascal.push(cur);
        }
        let pascal = pascal
            .iter()
            .map(|row| row.iter().map(S::from_biguint).collect())
            .collect();
        let powers = |base: &S| {
            let mut out = Vec::with_capacity(len);
            let mut acc = S::one();
            for _ in 0..len {
                out.push(acc.clone());
                acc = acc * base.clone();
            }
            out
        };
        Ok(Self {
            n,
            pascal,
            p_pows: powers(p),
            q_pows: powers(&q),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn probability(&self, a_in: u64, a_out: u64) -> S {
        let n = self.n;
        assert!(a_in <= n && a_out <= n, "histogram count exceeds n");
        let b_in = n - a_in;
        let b_out = n - a_out;
        // m counts input a's reported as a; the remaining a's in the output
        // come from b's that flipped.
        let lo = a_in.saturating_sub(b_out);
        let hi = a_in.min(a_out);
        let mut total = S::zero();
        for m in lo..=hi {
            // b's kept as b: b_in - (a_out - m)
            let flipped_b = a_out - m;
            if flipped_b > b_in {
                continue;
            }
            let kept_b = b_in - flipped_b;
            let kept = m + kept_b;
            let term = self.pascal[a_in as usize][m as usize].clone()
                * self.pascal[b_in as usize][kept_b as usize].clone()
                * self.p_pows[kept as usize].clone()
                * self.q_pows[(n - kept) as usize].clone();
            total = total + term;
        }
        total
    }
}

/// Probability that binary k-RR maps an input histogram `(a_in, b_in)` to an
/// output dataset with histogram `(a_out, b_out)`. Requires `p ∈ [1/2, 1]`.
pub fn krr_histogram_transition<S: Scalar>(
    a_in: u64,
    b_in: u64,
    a_out: u64,
    b_out: u64,
    p: &S,
) -> Result<S> {
    let n = a_in + b_in;
    if a_out + b_out != n {
        return Err(QifError::CountMismatch {
            input: n,
            output: a_out + b_out,
        });
    }
    Ok(BinaryKrrTransitions::new(n, p)?.probability(a_in, a_out))
}

/// k-RR truthful-report probability `e^ε / (k - 1 + e^ε)`.
pub fn epsilon_to_p(epsilon: f64, k: u32) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(QifError::InvalidEpsilon(epsilon));
    }
    if k < 2 {
        return Err(QifError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    // e^ε / (k-1+e^ε) = 1 / ((k-1) e^-ε + 1) stays finite for large ε.
    Ok(1.0 / ((k - 1) as f64 * (-epsilon).exp() + 1.0))
}

/// Inverse of [`epsilon_to_p`]: `ln(p (k - 1) / (1 - p))`.
pub fn p_to_epsilon(p: f64, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(QifError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    if p.is_nan() || p > 1.0 {
        return Err(QifError::ProbabilityOutOfRange {
            p: p.to_string(),
            lower: format!("1/{k}"),
        });
    }
    if p == 1.0 {
        return Err(QifError::InfiniteEpsilon);
    }
    if p < 1.0 / k as f64 {
        return Err(QifError::BelowUniform { p, k });
    }
    Ok((p * (k - 1) as f64 / (1.0 - p)).ln().max(0.0))
}
