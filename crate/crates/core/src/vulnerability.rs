//! g-vulnerability: priors, gain functions, prior/posterior vulnerability,
//! leakage, and the all-but-one (strong) adversary.

use num_traits::Zero;

use crate::channels::{datasets, Channel, Label};
use crate::combinatorics::BinaryKrrTransitions;
use crate::scalar::Scalar;
use crate::{QifError, Result};

/// A probability distribution over labelled secrets.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior<S> {
    secrets: Vec<Label>,
    probs: Vec<S>,
}

impl<S: Scalar> Prior<S> {
    pub fn new(secrets: Vec<Label>, probs: Vec<S>) -> Result<Self> {
        if secrets.len() != probs.len() || secrets.is_empty() {
            return Err(QifError::InvalidDistribution(format!(
                "{} probabilities for {} secrets",
                probs.len(),
                secrets.len()
            )));
        }
        if probs.iter().any(Scalar::is_negative) {
            return Err(QifError::InvalidDistribution("negative probability".into()));
        }
        let total = probs.iter().fold(S::zero(), |acc, v| acc + v.clone());
        if !total.close_to(&S::one()) {
            return Err(QifError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { secrets, probs })
    }

    pub fn uniform(secrets: Vec<Label>) -> Result<Self> {
        let each = S::one() / S::from_u64(secrets.len() as u64);
        let probs = vec![each; secrets.len()];
        Self::new(secrets, probs)
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(secrets: Vec<Label>, weights: Vec<S>) -> Result<Self> {
        let total = weights.iter().fold(S::zero(), |acc, v| acc + v.clone());
        if total.is_zero() {
            return Err(QifError::InvalidDistribution("weights sum to zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total.clone()).collect();
        Self::new(secrets, probs)
    }

    pub fn point_mass(secrets: Vec<Label>, at: usize) -> Result<Self> {
        let probs = (0..secrets.len())
            .map(|i| if i == at { S::one() } else { S::zero() })
            .collect();
        Self::new(secrets, probs)
    }

    pub fn secrets(&self) -> &[Label] {
        &self.secrets
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }
}

/// Gain table `g(w, x) ≥ 0` over actions and secrets.
#[derive(Debug, Clone, PartialEq)]
pub struct GainFunction<S> {
    actions: Vec<String>,
    secrets: Vec<Label>,
    gains: Vec<S>,
}

impl<S: Scalar> GainFunction<S> {
    /// `gains` is action-major: `gains[w * secrets.len() + x]`.
    pub fn new(actions: Vec<String>, secrets: Vec<Label>, gains: Vec<S>) -> Result<Self> {
        if gains.len() != actions.len() * secrets.len() {
            return Err(QifError::InvalidParameter(format!(
                "{} gains for {} actions x {} secrets",
                gains.len(),
                actions.len(),
                secrets.len()
            )));
        }
        if gains.iter().any(Scalar::is_negative) {
            return Err(QifError::InvalidParameter("gains must be non-negative".into()));
        }
        Ok(Self {
            actions,
            secrets,
            gains,
        })
    }

    /// Identity gain: one action per secret, gain 1 for guessing it exactly.
    pub fn identity(secrets: Vec<Label>) -> Result<Self> {
        let m = secrets.len();
        let actions = secrets.iter().map(|l| l.to_string()).collect();
        let gains = (0..m * m)
            .map(|i| if i / m == i % m { S::one() } else { S::zero() })
            .collect();
        Self::new(actions, secrets, gains)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn secrets(&self) -> &[Label] {
        &self.secrets
    }

    pub fn gain(&self, action: usize, secret: usize) -> &S {
        &self.gains[action * self.secrets.len() + secret]
    }

    /// Multiplies every gain by `factor`.
    pub fn scaled(&self, factor: &S) -> Self {
        Self {
            actions: self.actions.clone(),
            secrets: self.secrets.clone(),
            gains: self.gains.iter().map(|g| g.clone() * factor.clone()).collect(),
        }
    }
}

/// Gain 1 for guessing the value of the record at `position`.
pub fn target_gain<S: Scalar>(n: usize, k: u32, position: usize) -> Result<GainFunction<S>> {
    if position >= n {
        return Err(QifError::InvalidParameter(format!("position {position} outside dataset of {n} records")));
    }
    let secrets: Vec<Label> = datasets(n, k).map(Label::Dataset).collect();
    let actions: Vec<String> = (0..k)
        .map(|v| Label::Dataset(crate::channels::Dataset::from_index(v as u64, 1, k)).to_string())
        .collect();
    let mut gains = Vec::with_capacity(actions.len() * secrets.len());
    for w in 0..k {
        for secret in &secrets {
            let Label::Dataset(d) = secret else { unreachable!() };
            gains.push(if d.values()[position] == w { S::one() } else { S::zero() });
        }
    }
    GainFunction::new(actions, secrets, gains)
}

/// Single-target gain `g_T`: guess the value of record 0.
pub fn single_target_gain<S: Scalar>(n: usize, k: u32) -> Result<GainFunction<S>> {
    target_gain(n, k, 0)
}

/// `V_g(π) = max_w Σ_x π_x g(w, x)`.
pub fn prior_vulnerability<S: Scalar>(pi: &Prior<S>, g: &GainFunction<S>) -> Result<S> {
    if g.actions.is_empty() {
        return Err(QifError::EmptyActions);
    }
    if pi.secrets != g.secrets {
        return Err(QifError::IndexMismatch);
    }
    let best = (0..g.actions.len())
        .map(|w| {
            pi.probs
                .iter()
                .enumerate()
                .fold(S::zero(), |acc, (x, px)| acc + px.clone() * g.gain(w, x).clone())
        })
        .reduce(|a, b| if b > a { b } else { a })
        .expect("non-empty");
    Ok(best)
}

/// `V_g[π ▷ C] = Σ_y max_w Σ_x π_x C[x][y] g(w, x)`.
pub fn posterior_vulnerability<S: Scalar>(
    pi: &Prior<S>,
    g: &GainFunction<S>,
    c: &Channel<S>,
) -> Result<S> {
    if g.actions.is_empty() {
        return Err(QifError::EmptyActions);
    }
    if pi.secrets != c.rows() || g.secrets != c.rows() {
        return Err(QifError::IndexMismatch);
    }
    let mut total = S::zero();
    let mut joint = Vec::with_capacity(c.n_rows());
    for y in 0..c.n_cols() {
        joint.clear();
        joint.extend((0..c.n_rows()).map(|x| pi.probs[x].clone() * c.get(x, y).clone()));
        if joint.iter().all(Zero::is_zero) {
            continue;
        }
        let mut best: Option<S> = None;
        for w in 0..g.actions.len() {
            let value = joint.iter().enumerate().fold(S::zero(), |acc, (x, j)| {
                if j.is_zero() {
                    acc
                } else {
                    acc + j.clone() * g.gain(w, x).clone()
                }
            });
            if best.as_ref().is_none_or(|b| value > *b) {
                best = Some(value);
            }
        }
        total = total + best.expect("non-empty");
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageMode {
    Multiplicative,
    Additive,
}

pub fn leakage<S: Scalar>(
    pi: &Prior<S>,
    g: &GainFunction<S>,
    c: &Channel<S>,
    mode: LeakageMode,
) -> Result<S> {
    let prior = prior_vulnerability(pi, g)?;
    let posterior = posterior_vulnerability(pi, g, c)?;
    leakage_from(&prior, &posterior, mode)
}

/// Leakage from already computed vulnerabilities.
pub fn leakage_from<S: Scalar>(prior: &S, posterior: &S, mode: LeakageMode) -> Result<S> {
    match mode {
        LeakageMode::Additive => Ok(posterior.clone() - prior.clone()),
        LeakageMode::Multiplicative => {
            if prior.is_zero() {
                Err(QifError::ZeroPriorVulnerability)
            } else {
                Ok(posterior.clone() / prior.clone())
            }
        }
    }
}

/// Binary all-but-one adversary: knows the `n - 1` non-target records, of
/// which `known_a` hold value `a`, and is left with two candidate datasets
/// (target `a` or `b`) under a uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub struct AboScenario<S> {
    n: u64,
    p: S,
    known_a: u64,
}

impl<S: Scalar> AboScenario<S> {
    pub fn new(n: u64, p: S, known_a: u64) -> Result<Self> {
        if n == 0 {
            return Err(QifError::InvalidParameter("n must be at least 1".into()));
        }
        if known_a > n - 1 {
            return Err(QifError::InvalidParameter(format!(
                "{known_a} known a's among {} known records",
                n - 1
            )));
        }
        crate::scalar::check_krr_probability(&p, 2)?;
        Ok(Self { n, p, known_a })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> &S {
        &self.p
    }

    pub fn known_a(&self) -> u64 {
        self.known_a
    }

    pub fn known_b(&self) -> u64 {
        self.n - 1 - self.known_a
    }
}

/// Posterior vulnerability of the k-RR-then-shuffle cascade against the ABO
/// adversary: `½ Σ_y max(row(x₀=a)[y], row(x₀=b)[y])` over the `n + 1` output
/// histograms, with rows taken from histogram transition probabilities.
pub fn abo_posterior<S: Scalar>(scenario: &AboScenario<S>) -> Result<S> {
    let table = BinaryKrrTransitions::new(scenario.n, &scenario.p)?;
    let with_a = scenario.known_a + 1;
    let with_b = scenario.known_a;
    let total = (0..=scenario.n).fold(S::zero(), |acc, a_out| {
        let ra = table.probability(with_a, a_out);
        let rb = table.probability(with_b, a_out);
        acc + if ra >= rb { ra } else { rb }
    });
    Ok(total / S::from_u64(2))
}

/// `known_a / (n - 1)`, or zero when nothing is known.
pub fn known_a_fraction(n: u64, known_a: u64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        known_a as f64 / (n - 1) as f64
    }
}

/// Uniform prior over the `kⁿ` datasets.
pub fn uniform_dataset_prior<S: Scalar>(n: usize, k: u32) -> Result<Prior<S>> {
    Prior::uniform(datasets(n, k).map(Label::Dataset).collect())
}
