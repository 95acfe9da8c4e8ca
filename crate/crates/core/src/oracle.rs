//! Brute-force ground truth: full channels, literal cascades, and the
//! posterior vulnerability definition evaluated term by term over every
//! dataset. Exact arithmetic only, desk-scale sizes only.

use num_traits::{One, Zero};

use crate::channels::{build_krr, build_shuffle_full, cascade, datasets, Cap, Channel, Dataset, Histogram, Label};
use crate::scalar::{check_krr_probability, Exact};
use crate::{QifError, Result};

/// Largest number of datasets the oracle will enumerate (3⁶).
pub const ORACLE_BOUND: u64 = 729;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Krr,
    Shuffle,
}

fn check_bound(n: usize, k: u32, bound: u64) -> Result<()> {
    let secrets = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if secrets > bound as u128 {
        return Err(QifError::OracleBoundExceeded { secrets, bound });
    }
    Ok(())
}

/// Posterior single-target vulnerability under the uniform prior of the
/// cascade of `pipeline` stages, built from full `kⁿ × kⁿ` channels.
/// An empty pipeline publishes the dataset itself.
pub fn oracle_posterior(n: usize, k: u32, pipeline: &[Stage], p: &Exact) -> Result<Exact> {
    oracle_posterior_bounded(n, k, pipeline, p, ORACLE_BOUND)
}

pub fn oracle_posterior_bounded(
    n: usize,
    k: u32,
    pipeline: &[Stage],
    p: &Exact,
    bound: u64,
) -> Result<Exact> {
    check_bound(n, k, bound)?;
    check_krr_probability(p, k)?;
    let cap = Cap::new(bound);
    let labels: Vec<Label> = datasets(n, k).map(Label::Dataset).collect();
    let mut channel: Channel<Exact> = Channel::identity(labels)?;
    for stage in pipeline {
        let next = match stage {
            Stage::Krr => build_krr(n, k, p, cap)?,
            Stage::Shuffle => build_shuffle_full(n, k, cap)?,
        };
        channel = cascade(&channel, &next)?;
    }
    Ok(literal_single_target_posterior(&channel, k))
}

/// `Σ_y max_w Σ_x π_x C[x][y] g_T(w, x)` with `π_x = 1/|X|`.
fn literal_single_target_posterior(c: &Channel<Exact>, k: u32) -> Exact {
    let prior = Exact::one() / Exact::from_integer(c.n_rows().into());
    let targets: Vec<u32> = c
        .rows()
        .iter()
        .map(|l| match l {
            Label::Dataset(d) => d.target(),
            other => panic!("oracle rows are datasets, got {other}"),
        })
        .collect();
    let mut total = Exact::zero();
    for y in 0..c.n_cols() {
        let mut best = Exact::zero();
        for w in 0..k {
            let mut expected = Exact::zero();
            for (x, &target) in targets.iter().enumerate() {
                let gain = if target == w { Exact::one() } else { Exact::zero() };
                expected += prior.clone() * c.get(x, y).clone() * gain;
            }
            if expected > best {
                best = expected;
            }
        }
        total += best;
    }
    total
}

/// `Σ_{w: h(w) = z} N[x][w]`, enumerating every dataset with histogram `z`.
pub fn oracle_histogram_transition(x: &Dataset, z: &Histogram, p: &Exact) -> Result<Exact> {
    let k = z.k();
    let n = x.len();
    if z.n() != n as u64 {
        return Err(QifError::CountMismatch {
            input: n as u64,
            output: z.n(),
        });
    }
    check_bound(n, k, ORACLE_BOUND)?;
    check_krr_probability(p, k)?;
    let other = (Exact::one() - p.clone()) / Exact::from_integer((k as i64 - 1).into());
    let mut total = Exact::zero();
    for w in datasets(n, k) {
        if &w.histogram(k) != z {
            continue;
        }
        let mut prob = Exact::one();
        for (a, b) in x.values().iter().zip(w.values()) {
            prob *= if a == b { p.clone() } else { other.clone() };
        }
        total += prob;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::histograms;
    use crate::combinatorics::krr_histogram_transition;
    use crate::scalar::Scalar;

    fn r(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_posterior(3, 2, &[Stage::Shuffle], &r(1, 1)).unwrap(), r(3, 4));
        assert_eq!(
            oracle_posterior(3, 2, &[Stage::Krr, Stage::Shuffle], &r(3, 4)).unwrap(),
            r(5, 8)
        );
        assert_eq!(oracle_posterior(2, 2, &[Stage::Krr], &r(9, 10)).unwrap(), r(9, 10));
        assert_eq!(oracle_posterior(3, 3, &[], &r(1, 1)).unwrap(), r(1, 1));
    }

    #[test]
    fn oracle_bound_is_enforced() {
        assert!(matches!(
            oracle_posterior(7, 3, &[Stage::Shuffle], &r(1, 1)),
            Err(QifError::OracleBoundExceeded { secrets: 2187, bound: 729 })
        ));
        assert!(oracle_posterior(6, 3, &[], &r(1, 1)).is_ok());
    }

    #[test]
    fn pipeline_order_is_irrelevant() {
        for (n, k) in [(2usize, 2u32), (3, 2), (4, 2), (2, 3), (3, 3)] {
            for p in [r(1, 2), r(3, 4), r(1, 1)] {
                assert_eq!(
                    oracle_posterior(n, k, &[Stage::Krr, Stage::Shuffle], &p).unwrap(),
                    oracle_posterior(n, k, &[Stage::Shuffle, Stage::Krr], &p).unwrap(),
                    "n={n} k={k} p={p}"
                );
            }
        }
    }

    #[test]
    fn histogram_transition_examples() {
        let x = Dataset::new(vec![0, 0, 1], 2).unwrap();
        let z = Histogram::new(vec![2, 1]).unwrap();
        let v = oracle_histogram_transition(&x, &z, &r(3, 4)).unwrap();
        assert_eq!(v, r(33, 64));
        assert_eq!(v.to_f64(), 0.515625);
        assert_eq!(oracle_histogram_transition(&x, &z, &r(1, 1)).unwrap(), r(1, 1));
        let total = histograms(3, 2).fold(Exact::zero(), |acc, z| {
            acc + oracle_histogram_transition(&x, &z, &r(3, 5)).unwrap()
        });
        assert_eq!(total, r(1, 1));
    }

    #[test]
    fn histogram_transition_matches_closed_form() {
        for n in 1..=8usize {
            for p in [r(1, 2), r(3, 5), r(3, 4), r(1, 1)] {
                for x in datasets(n, 2) {
                    let a_in = x.histogram(2).counts()[0];
                    for z in histograms(n as u64, 2) {
                        let a_out = z.counts()[0];
                        let closed = krr_histogram_transition(
                            a_in,
                            n as u64 - a_in,
                            a_out,
                            n as u64 - a_out,
                            &p,
                        )
                        .unwrap();
                        assert_eq!(closed, oracle_histogram_transition(&x, &z, &p).unwrap());
                    }
                }
            }
        }
    }
}
