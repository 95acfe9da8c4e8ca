use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use qif_shuffle::combinatorics::epsilon_to_p;
use qif_shuffle::{QifError, Scalar};

/// Parses `"0.75"`, `"3/4"`, `"1"` or `".5"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let bad = || format!("'{s}' is not a decimal or a fraction a/b");
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(format!("'{s}' has a zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(digits, scale);
    Ok(if negative { -value } else { value })
}

/// A privacy parameter as typed: an exact probability or an ε to convert.
#[derive(Debug, Clone, PartialEq)]
pub enum PInput {
    Probability(BigRational),
    Epsilon(f64),
}

impl PInput {
    pub fn one() -> Self {
        PInput::Probability(BigRational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PInput::Probability(_))
    }

    /// Converts to a scalar, validating `p ∈ [1/k, 1]`.
    pub fn to_scalar<S: Scalar>(&self, k: u32) -> Result<S, QifError> {
        let p = match self {
            PInput::Probability(r) => S::from_rational(r),
            PInput::Epsilon(eps) => S::from_f64(epsilon_to_p(*eps, k)?),
        };
        qif_shuffle::scalar::check_krr_probability(&p, k)?;
        Ok(p)
    }
}

/// Combines `--p` and `--epsilon` lists (clap already rejects both at once).
pub fn collect_inputs(ps: &[String], epsilons: &[f64]) -> Result<Vec<PInput>, String> {
    let mut out = Vec::with_capacity(ps.len() + epsilons.len());
    for p in ps {
        out.push(PInput::Probability(parse_rational(p)?));
    }
    out.extend(epsilons.iter().map(|&e| PInput::Epsilon(e)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.9").unwrap(), r(9, 10));
        assert_eq!(parse_rational("0.75").unwrap(), r(3, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational("1.0").unwrap(), r(1, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), r(-1, 4));
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_rational("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_rational("6 / 8").unwrap(), r(3, 4));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn garbage_is_rejected() {
        for s in ["", ".", "abc", "1e-3", "0.5.5", "--1"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn range_is_validated() {
        assert!(PInput::Probability(r(1, 3)).to_scalar::<f64>(2).is_err());
        assert!(PInput::Probability(r(1, 3)).to_scalar::<f64>(3).is_ok());
        assert!(PInput::Probability(r(11, 10)).to_scalar::<f64>(2).is_err());
        assert!(PInput::Epsilon(-1.0).to_scalar::<f64>(2).is_err());
        let p: f64 = PInput::Epsilon(0.0).to_scalar(4).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
    }
}
