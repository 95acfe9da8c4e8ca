//! Channel matrices for k-RR and shuffling, their cascades, and canonical
//! (abstract) forms used to decide leakage equivalence.
//!
//! Datasets are enumerated base-k big-endian with the target (position 0) as
//! the most significant digit. Histograms are enumerated in decreasing
//! lexicographic order of their count vectors, so `(a:3,b:0)` precedes
//! `(a:2,b:1)`.

use std::collections::{HashMap, HashSet};
use std::fmt;



use crate::combinatorics::{compositions, multinomial, BinaryKrrTransitions};
use crate::scalar::{check_krr_probability, Scalar};
use crate::{QifError, Result};

/// Default bound on the number of secrets (`kⁿ`) of a full channel.
pub const DEFAULT_CAP: u64 = 1 << 20;

/// Upper bound on the number of cells of any dense channel matrix.
pub const MAX_CELLS: u128 = 1 << 26;

fn symbol(value: u32) -> String {
    if value < 26 {
        char::from(b'a' + value as u8).to_string()
    } else {
        format!("v{value}")
    }
}

/// A tuple of `n` attribute values drawn from `{0, …, k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dataset {
    values: Vec<u32>,
}

impl Dataset {
    pub fn new(values: Vec<u32>, k: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(QifError::InvalidParameter("a dataset needs at least one record".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v >= k) {
            return Err(QifError::InvalidParameter(format!("value {v} outside alphabet of size {k}")));
        }
        Ok(Self { values })
    }

    /// Dataset at position `index` of the base-k big-endian enumeration.
    pub fn from_index(mut index: u64, n: usize, k: u32) -> Self {
        let mut values = vec![0; n];
        for slot in values.iter_mut().rev() {
            *slot = (index % k as u64) as u32;
            index /= k as u64;
        }
        Self { values }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn target(&self) -> u32 {
        self.values[0]
    }

    pub fn histogram(&self, k: u32) -> Histogram {
        let mut counts = vec![0u64; k as usize];
        for &v in &self.values {
            counts[v as usize] += 1;
        }
        Histogram { counts }
    }

    /// Number of positions at which two equal-length datasets differ.
    pub fn distance(&self, other: &Dataset) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.values {
            f.write_str(&symbol(v))?;
        }
        Ok(())
    }
}

/// Per-value counts of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(QifError::InvalidParameter("histograms need k >= 2 counts".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn k(&self) -> u32 {
        self.counts.len() as u32
    }

    /// `#h`, the number of datasets sharing this histogram.
    pub fn arrangements(&self) -> num_bigint::BigUint {
        multinomial(self.n(), &self.counts).expect("counts sum to n")
    }
}

impl fmt::Display for Histogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, c) in self.counts.iter().enumerate() {
            write!(f, "{}:{}", symbol(v as u32), c)?;
        }
        Ok(())
    }
}

/// Row or column label of a channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Dataset(Dataset),
    Histogram(Histogram),
    Symbol(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Dataset(d) => d.fmt(f),
            Label::Histogram(h) => h.fmt(f),
            Label::Symbol(s) => f.write_str(s),
        }
    }
}

/// All `kⁿ` datasets in enumeration order.
pub fn datasets(n: usize, k: u32) -> impl Iterator<Item = Dataset> {
    let total = (k as u64).pow(n as u32);
    (0..total).map(move |i| Dataset::from_index(i, n, k))
}

/// All histograms of `n` records over `k` values, decreasing lexicographic.
pub fn histograms(n: u64, k: u32) -> impl Iterator<Item = Histogram> {
    compositions(n, k as usize).map(|counts| Histogram { counts })
}

fn dataset_labels(n: usize, k: u32) -> Vec<Label> {
    datasets(n, k).map(Label::Dataset).collect()
}

fn histogram_labels(n: usize, k: u32) -> Vec<Label> {
    histograms(n as u64, k).map(Label::Histogram).collect()
}

/// Size guard for channel builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cap {
    pub max_secrets: u64,
}

impl Default for Cap {
    fn default() -> Self {
        Self {
            max_secrets: DEFAULT_CAP,
        }
    }
}

impl Cap {
    pub fn new(max_secrets: u64) -> Self {
        Self { max_secrets }
    }

    fn check_secrets(&self, n: usize, k: u32) -> Result<u64> {
        let secrets = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if secrets > self.max_secrets as u128 {
            return Err(QifError::CapExceeded {
                secrets,
                cap: self.max_secrets,
            });
        }
        Ok(secrets as u64)
    }

    fn check_cells(rows: u128, cols: u128) -> Result<()> {
        if rows.saturating_mul(cols) > MAX_CELLS {
            return Err(QifError::CellLimitExceeded {
                rows,
                cols,
                limit: MAX_CELLS,
            });
        }
        Ok(())
    }
}

fn check_shape(n: usize, k: u32) -> Result<()> {
    if n == 0 {
        return Err(QifError::InvalidParameter("n must be at least 1".into()));
    }
    if k < 2 {
        return Err(QifError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    Ok(())
}

/// A row-stochastic matrix from secrets to observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<S> {
    rows: Vec<Label>,
    cols: Vec<Label>,
    entries: Vec<S>,
}

impl<S: Scalar> Channel<S> {
    /// Validates shape, non-negativity, label uniqueness, and row sums.
    pub fn new(rows: Vec<Label>, cols: Vec<Label>, entries: Vec<S>) -> Result<Self> {
        if entries.len() != rows.len() * cols.len() {
            return Err(QifError::InvalidChannel(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                rows.len(),
                cols.len()
            )));
        }
        for (what, labels) in [("row", &rows), ("column", &cols)] {
            let mut seen = HashSet::with_capacity(labels.len());
            if let Some(dup) = labels.iter().find(|l| !seen.insert(*l)) {
                return Err(QifError::InvalidChannel(format!("duplicate {what} label {dup}")));
            }
        }
        if entries.iter().any(Scalar::is_negative) {
            return Err(QifError::InvalidChannel("negative entry".into()));
        }
        let channel = Self { rows, cols, entries };
        for i in 0..channel.rows.len() {
            let sum = channel.row(i).iter().fold(S::zero(), |acc, v| acc + v.clone());
            if !sum.close_to(&S::one()) {
                return Err(QifError::InvalidChannel(format!(
                    "row {} sums to {sum}",
                    channel.rows[i]
                )));
            }
        }
        Ok(channel)
    }

    pub fn identity(labels: Vec<Label>) -> Result<Self> {
        let m = labels.len();
        let mut entries = vec![S::zero(); m * m];
        for i in 0..m {
            entries[i * m + i] = S::one();
        }
        Self::new(labels.clone(), labels, entries)
    }

    pub fn rows(&self) -> &[Label] {
        &self.rows
    }

    pub fn cols(&self) -> &[Label] {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, row: usize, col: usize) -> &S {
        &self.entries[row * self.cols.len() + col]
    }

    pub fn row(&self, row: usize) -> &[S] {
        let m = self.cols.len();
        &self.entries[row * m..(row + 1) * m]
    }

    pub fn column(&self, col: usize) -> Vec<S> {
        (0..self.rows.len()).map(|i| self.get(i, col).clone()).collect()
    }

    pub fn row_index(&self, label: &Label) -> Option<usize> {
        self.rows.iter().position(|l| l == label)
    }

    pub fn col_index(&self, label: &Label) -> Option<usize> {
        self.cols.iter().position(|l| l == label)
    }

    /// Entry addressed by labels.
    pub fn entry(&self, row: &Label, col: &Label) -> Option<&S> {
        Some(self.get(self.row_index(row)?, self.col_index(col)?))
    }

    /// Renders the channel as CSV: a header of column labels (first cell
    /// `secret`), then one row per secret.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("secret");
        for c in &self.cols {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&r.to_string());
            for v in self.row(i) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Cascade `C·D`: `D` post-processes the output of `C`.
pub fn cascade<S: Scalar>(c: &Channel<S>, d: &Channel<S>) -> Result<Channel<S>> {
    if c.cols != d.rows {
        return Err(QifError::CascadeMismatch {
            left_cols: c.n_cols(),
            right_rows: d.n_rows(),
        });
    }
    Cap::check_cells(c.n_rows() as u128, d.n_cols() as u128)?;
    let m = d.n_cols();
    // Sparse view of D's rows; shuffle and reduced channels are mostly zeros.
    let sparse: Vec<Vec<(usize, S)>> = (0..d.n_rows())
        .map(|j| {
            d.row(j)
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(col, v)| (col, v.clone()))
                .collect()
        })
        .collect();
    let mut entries = vec![S::zero(); c.n_rows() * m];
    for i in 0..c.n_rows() {
        let out = &mut entries[i * m..(i + 1) * m];
        for (j, cij) in c.row(i).iter().enumerate() {
            if cij.is_zero() {
                continue;
            }
            for (col, djk) in &sparse[j] {
                out[*col] = out[*col].clone() + cij.clone() * djk.clone();
            }
        }
    }
    Ok(Channel {
        rows: c.rows.clone(),
        cols: d.cols.clone(),
        entries,
    })
}

/// Full k-RR channel `N` over all `kⁿ` datasets.
pub fn build_krr<S: Scalar>(n: usize, k: u32, p: &S, cap: Cap) -> Result<Channel<S>> {
    check_shape(n, k)?;
    check_krr_probability(p, k)?;
    let secrets = cap.check_secrets(n, k)?;
    Cap::check_cells(secrets as u128, secrets as u128)?;
    let other = (S::one() - p.clone()) / S::from_u64(k as u64 - 1);
    // weight[m] = p^m · other^(n-m) for m matching positions
    let weight: Vec<S> = (0..=n as u64)
        .map(|m| p.powu(m) * other.powu(n as u64 - m))
        .collect();
    let all: Vec<Dataset> = datasets(n, k).collect();
    let mut entries = Vec::with_capacity(all.len() * all.len());
    for x in &all {
        for y in &all {
            let matches = n - x.distance(y);
            entries.push(weight[matches].clone());
        }
    }
    let labels: Vec<Label> = all.into_iter().map(Label::Dataset).collect();
    Channel::new(labels.clone(), labels, entries)
}

/// Full shuffle channel `S`: uniform over the datasets sharing `h(x)`.
pub fn build_shuffle_full<S: Scalar>(n: usize, k: u32, cap: Cap) -> Result<Channel<S>> {
    check_shape(n, k)?;
    let secrets = cap.check_secrets(n, k)?;
    Cap::check_cells(secrets as u128, secrets as u128)?;
    let all: Vec<Dataset> = datasets(n, k).collect();
    let hists: Vec<Histogram> = all.iter().map(|d| d.histogram(k)).collect();
    let mut weights: HashMap<&Histogram, S> = HashMap::new();
    for h in &hists {
        weights
            .entry(h)
            .or_insert_with(|| S::one() / S::from_biguint(&h.arrangements()));
    }
    let mut entries = Vec::with_capacity(all.len() * all.len());
    for hx in &hists {
        for hy in &hists {
            entries.push(if hx == hy { weights[hx].clone() } else { S::zero() });
        }
    }
    let labels: Vec<Label> = all.into_iter().map(Label::Dataset).collect();
    Channel::new(labels.clone(), labels, entries)
}

/// Reduced shuffle channel `Sʳ`: each dataset deterministically to its histogram.
pub fn build_shuffle_reduced<S: Scalar>(n: usize, k: u32, cap: Cap) -> Result<Channel<S>> {
    check_shape(n, k)?;
    let secrets = cap.check_secrets(n, k)?;
    let cols = histogram_labels(n, k);
    Cap::check_cells(secrets as u128, cols.len() as u128)?;
    let index: HashMap<Label, usize> = cols.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
    let rows = dataset_labels(n, k);
    let mut entries = vec![S::zero(); rows.len() * cols.len()];
    for (i, row) in rows.iter().enumerate() {
        let Label::Dataset(d) = row else { unreachable!() };
        let j = index[&Label::Histogram(d.histogram(k))];
        entries[i * cols.len() + j] = S::one();
    }
    Channel::new(rows, cols, entries)
}

/// Reduced k-RR channel `Nʳ` between histograms.
///
/// The binary case uses closed-form histogram transitions and scales to large
/// `n`; general `k` sums the full k-RR row of a representative dataset of each
/// input histogram (all datasets with a given histogram share that row sum),
/// guarded by the cap.
pub fn build_krr_reduced<S: Scalar>(n: usize, k: u32, p: &S, cap: Cap) -> Result<Channel<S>> {
    check_shape(n, k)?;
    check_krr_probability(p, k)?;
    let labels = histogram_labels(n, k);
    let h = labels.len();
    Cap::check_cells(h as u128, h as u128)?;
    let mut entries = Vec::with_capacity(h * h);
    if k == 2 {
        let table = BinaryKrrTransitions::new(n as u64, p)?;
        for row in &labels {
            let Label::Histogram(hin) = row else { unreachable!() };
            for col in &labels {
                let Label::Histogram(hout) = col else { unreachable!() };
                entries.push(table.probability(hin.counts[0], hout.counts[0]));
            }
        }
    } else {
        cap.check_secrets(n, k)?;
        let other = (S::one() - p.clone()) / S::from_u64(k as u64 - 1);
        let weight: Vec<S> = (0..=n as u64)
            .map(|m| p.powu(m) * other.powu(n as u64 - m))
            .collect();
        let index: HashMap<&Label, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let all: Vec<(Dataset, usize)> = datasets(n, k)
            .map(|d| {
                let j = index[&Label::Histogram(d.histogram(k))];
                (d, j)
            })
            .collect();
        for row in &labels {
            let Label::Histogram(hin) = row else { unreachable!() };
            let representative = representative(hin);
            let mut out = vec![S::zero(); h];
            for (y, j) in &all {
                let matches = n - representative.distance(y);
                out[*j] = out[*j].clone() + weight[matches].clone();
            }
            entries.extend(out);
        }
    }
    Channel::new(labels.clone(), labels, entries)
}

fn representative(h: &Histogram) -> Dataset {
    let values = h
        .counts
        .iter()
        .enumerate()
        .flat_map(|(v, &c)| std::iter::repeat_n(v as u32, c as usize))
        .collect();
    Dataset { values }
}

/// Single-user k-RR channel over the alphabet itself.
pub fn build_krr_single<S: Scalar>(k: u32, p: &S) -> Result<Channel<S>> {
    check_shape(1, k)?;
    check_krr_probability(p, k)?;
    let other = (S::one() - p.clone()) / S::from_u64(k as u64 - 1);
    let labels: Vec<Label> = (0..k).map(|v| Label::Symbol(symbol(v))).collect();
    let entries = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| if i == j { p.clone() } else { other.clone() })
        .collect();
    Channel::new(labels.clone(), labels, entries)
}

fn intro_response<S: Scalar>(epsilon: f64) -> Result<(S, S)> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(QifError::InvalidEpsilon(epsilon));
    }
    let truthful = S::from_f64(1.0 / (1.0 + (-epsilon).exp()));
    let flipped = S::one() - truthful.clone();
    Ok((truthful, flipped))
}

fn intro_channel<S: Scalar>(n: usize, epsilon: f64, parity_flips: bool) -> Result<Channel<S>> {
    if n == 0 {
        return Err(QifError::InvalidParameter("n must be at least 1".into()));
    }
    let (truthful, flipped) = intro_response::<S>(epsilon)?;
    let rows = dataset_labels(n, 2);
    let cols = vec![Label::Symbol("0".into()), Label::Symbol("1".into())];
    let mut entries = Vec::with_capacity(rows.len() * 2);
    for row in &rows {
        let Label::Dataset(d) = row else { unreachable!() };
        let last = d.values[n - 1];
        let parity = d.values[..n - 1].iter().sum::<u32>() % 2;
        let honest = if parity_flips && parity == 1 {
            flipped.clone()
        } else {
            truthful.clone()
        };
        let dishonest = S::one() - honest.clone();
        if last == 0 {
            entries.extend([honest, dishonest]);
        } else {
            entries.extend([dishonest, honest]);
        }
    }
    Channel::new(rows, cols, entries)
}

/// Mechanism that reports the last bit, or its complement, with probabilities
/// `e^ε/(1+e^ε)` and `1/(1+e^ε)`. In exact mode the float response
/// probability is carried over without further rounding.
pub fn build_intro_m<S: Scalar>(n: usize, epsilon: f64) -> Result<Channel<S>> {
    intro_channel(n, epsilon, false)
}

/// Like [`build_intro_m`], but the response probabilities are swapped when
/// the other bits have odd parity.
pub fn build_intro_mprime<S: Scalar>(n: usize, epsilon: f64) -> Result<Channel<S>> {
    intro_channel(n, epsilon, true)
}

fn ratio_within<S: Scalar>(high: &S, low: &S, bound: f64) -> bool {
    if high.is_zero() && low.is_zero() {
        return true;
    }
    if low.is_zero() || high.is_zero() {
        return false;
    }
    let ratio = (high.clone() / low.clone()).to_f64();
    ratio <= bound * (1.0 + crate::scalar::FLOAT_TOLERANCE)
}

/// ε-LDP check: within every column, the ratio of any two entries is at most `e^ε`.
pub fn verify_ldp<S: Scalar>(c: &Channel<S>, epsilon: f64) -> bool {
    let bound = epsilon.exp();
    (0..c.n_cols()).all(|j| {
        let col = c.column(j);
        let max = col.iter().fold(S::zero(), |m, v| if *v > m { v.clone() } else { m });
        let min = col.iter().fold(max.clone(), |m, v| if *v < m { v.clone() } else { m });
        ratio_within(&max, &min, bound)
    })
}

/// ε-DP check over adjacent datasets (rows whose dataset labels differ in one record).
pub fn verify_dp_adjacent<S: Scalar>(c: &Channel<S>, epsilon: f64) -> Result<bool> {
    let bound = epsilon.exp();
    let sets: Vec<&Dataset> = c
        .rows
        .iter()
        .map(|l| match l {
            Label::Dataset(d) => Ok(d),
            _ => Err(QifError::InvalidParameter("adjacency needs dataset rows".into())),
        })
        .collect::<Result<_>>()?;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i].distance(sets[j]) != 1 {
                continue;
            }
            for col in 0..c.n_cols() {
                let (a, b) = (c.get(i, col), c.get(j, col));
                if !ratio_within(a, b, bound) || !ratio_within(b, a, bound) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Hyper-distribution of a channel under the uniform prior: one
/// `(outer probability, posterior)` pair per class of proportional columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalChannel<S> {
    rows: Vec<Label>,
    columns: Vec<(S, Vec<S>)>,
}

impl<S: Scalar> CanonicalChannel<S> {
    pub fn rows(&self) -> &[Label] {
        &self.rows
    }

    pub fn columns(&self) -> &[(S, Vec<S>)] {
        &self.columns
    }

    /// Re-expands into a channel with one column per merged class
    /// (`C[x][y] = outer_y · posterior_y[x] · |X|`).
    pub fn to_channel(&self) -> Result<Channel<S>> {
        let size = S::from_u64(self.rows.len() as u64);
        let cols: Vec<Label> = (0..self.columns.len())
            .map(|j| Label::Symbol(format!("y{j}")))
            .collect();
        let mut entries = Vec::with_capacity(self.rows.len() * cols.len());
        for i in 0..self.rows.len() {
            for (outer, post) in &self.columns {
                entries.push(outer.clone() * post[i].clone() * size.clone());
            }
        }
        Channel::new(self.rows.clone(), cols, entries)
    }

    /// Same secrets and a one-to-one matching of (outer, posterior) pairs.
    pub fn matches(&self, other: &Self) -> bool {
        if self.rows != other.rows || self.columns.len() != other.columns.len() {
            return false;
        }
        let mut used = vec![false; other.columns.len()];
        self.columns.iter().all(|(outer, post)| {
            let found = other.columns.iter().enumerate().position(|(j, (o, q))| {
                !used[j] && o.close_to(outer) && q.iter().zip(post).all(|(a, b)| a.close_to(b))
            });
            match found {
                Some(j) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }
}

/// Merges proportional columns, drops zero columns, and normalizes each
/// class under the uniform prior; classes are sorted by posterior vector.
pub fn canonicalize<S: Scalar>(c: &Channel<S>) -> CanonicalChannel<S> {
    let size = S::from_u64(c.n_rows() as u64);
    let mut classes: Vec<(S, Vec<S>)> = Vec::new();
    for j in 0..c.n_cols() {
        let col = c.column(j);
        let sum = col.iter().fold(S::zero(), |acc, v| acc + v.clone());
        if sum.is_zero() {
            continue;
        }
        let outer = sum.clone() / size.clone();
        let post: Vec<S> = col.into_iter().map(|v| v / sum.clone()).collect();
        match classes
            .iter_mut()
            .find(|(_, q)| q.iter().zip(&post).all(|(a, b)| a.close_to(b)))
        {
            Some((o, _)) => *o = o.clone() + outer,
            None => classes.push((outer, post)),
        }
    }
    classes.sort_by(|(oa, a), (ob, b)| {
        a.partial_cmp(b)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(oa.partial_cmp(ob).unwrap_or(std::cmp::Ordering::Equal))
    });
    CanonicalChannel {
        rows: c.rows.clone(),
        columns: classes,
    }
}

/// Leakage equivalence: identical hyper-distributions under the uniform prior
/// (which fixes them for every prior).
pub fn equivalent<S: Scalar>(c: &Channel<S>, d: &Channel<S>) -> Result<bool> {
    if c.rows != d.rows {
        return Err(QifError::RowLabelMismatch);
    }
    Ok(canonicalize(c).matches(&canonicalize(d)))
}

/// Row sums equal one (exactly in exact mode).
pub fn is_row_stochastic<S: Scalar>(c: &Channel<S>) -> bool {
    (0..c.n_rows()).all(|i| {
        c.row(i)
            .iter()
            .fold(S::zero(), |acc, v| acc + v.clone())
            .close_to(&S::one())
    })
}

impl<S: Scalar> Channel<S> {
    /// Entrywise comparison with matching labels.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.close_to(b))
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    /// Point mass rows only (a deterministic channel).
    pub fn is_deterministic(&self) -> bool {
        self.entries.iter().all(|v| v.is_zero() || v.is_one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn ds(s: &str) -> Label {
        Label::Dataset(Dataset {
            values: s.bytes().map(|b| (b - b'a') as u32).collect(),
        })
    }

    fn hist(counts: &[u64]) -> Label {
        Label::Histogram(Histogram::new(counts.to_vec()).unwrap())
    }

    fn r(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn enumeration_orders() {
        let names: Vec<String> = datasets(3, 2).map(|d| d.to_string()).collect();
        assert_eq!(names, ["aaa", "aab", "aba", "abb", "baa", "bab", "bba", "bbb"]);
        let hs: Vec<String> = histograms(3, 2).map(|h| h.to_string()).collect();
        assert_eq!(hs, ["a:3b:0", "a:2b:1", "a:1b:2", "a:0b:3"]);
    }

    #[test]
    fn krr_entries() {
        let p = r(3, 4);
        let n = build_krr(3, 2, &p, Cap::default()).unwrap();
        let pbar = r(1, 4);
        assert_eq!(
            n.entry(&ds("aaa"), &ds("aab")).unwrap(),
            &(p.clone() * p.clone() * pbar)
        );
        assert!(is_row_stochastic(&n));

        let id = build_krr(2, 3, &<Exact as num_traits::One>::one(), Cap::default()).unwrap();
        assert_eq!(id, Channel::identity(id.rows().to_vec()).unwrap());

        let single = build_krr(1, 3, &0.5f64, Cap::default()).unwrap();
        assert_eq!(*single.get(0, 1), 0.25);
        assert_eq!(*single.get(2, 0), 0.25);
    }

    #[test]
    fn krr_rejects_bad_parameters() {
        assert!(matches!(
            build_krr(3, 2, &r(1, 3), Cap::default()),
            Err(QifError::ProbabilityOutOfRange { .. })
        ));
        assert!(matches!(
            build_krr(3, 2, &r(3, 4), Cap::new(4)),
            Err(QifError::CapExceeded { secrets: 8, cap: 4 })
        ));
        assert!(build_krr(0, 2, &r(3, 4), Cap::default()).is_err());
        assert!(build_krr(2, 1, &r(3, 4), Cap::default()).is_err());
    }

    #[test]
    fn cap_error_names_the_flag() {
        let err = build_shuffle_full::<f64>(21, 2, Cap::default()).unwrap_err();
        assert!(err.to_string().contains("--cap"));
    }

    #[test]
    fn shuffle_full_rows() {
        let s = build_shuffle_full::<Exact>(3, 2, Cap::default()).unwrap();
        for col in ["aab", "aba", "baa"] {
            assert_eq!(s.entry(&ds("aab"), &ds(col)).unwrap(), &r(1, 3));
        }
        assert_eq!(s.entry(&ds("aab"), &ds("abb")).unwrap(), &r(0, 1));
        assert_eq!(s.entry(&ds("aaa"), &ds("aaa")).unwrap(), &r(1, 1));

        let s2 = build_shuffle_full::<Exact>(2, 2, Cap::default()).unwrap();
        assert_eq!(s2.entry(&ds("ab"), &ds("ab")).unwrap(), &r(1, 2));
        assert_eq!(s2.entry(&ds("ab"), &ds("ba")).unwrap(), &r(1, 2));
    }

    #[test]
    fn shuffle_reduced_shape() {
        let s = build_shuffle_reduced::<Exact>(3, 2, Cap::default()).unwrap();
        assert_eq!(s.entry(&ds("aab"), &hist(&[2, 1])).unwrap(), &r(1, 1));
        assert!(s.is_deterministic());
        for (n, k) in [(3usize, 2u32), (4, 3), (2, 5)] {
            let s = build_shuffle_reduced::<f64>(n, k, Cap::default()).unwrap();
            let expected = crate::combinatorics::composition_count(n as u64, k as u64);
            assert_eq!(num_bigint::BigUint::from(s.n_cols()), expected);
        }
        let s1 = build_shuffle_reduced::<Exact>(1, 3, Cap::default()).unwrap();
        assert_eq!(s1.n_rows(), 3);
        assert_eq!(s1.n_cols(), 3);
        assert!(s1.is_deterministic());
    }

    #[test]
    fn krr_reduced_entries() {
        let p = r(3, 4);
        let pbar = r(1, 4);
        let nr = build_krr_reduced(3, 2, &p, Cap::default()).unwrap();
        // Averaging over the three inputs of (a:2,b:1) leaves p³ + 2p·p̄² per row.
        let want = p.powu(3) + r(2, 1) * p.clone() * pbar.powu(2);
        assert_eq!(nr.entry(&hist(&[2, 1]), &hist(&[2, 1])).unwrap(), &want);
        assert_eq!(nr.entry(&hist(&[2, 1]), &hist(&[3, 0])).unwrap(), &(p.powu(2) * pbar.clone()));
        assert_eq!(nr.entry(&hist(&[2, 1]), &hist(&[2, 1])).unwrap(), &r(33, 64));
        assert_eq!(nr.entry(&hist(&[3, 0]), &hist(&[0, 3])).unwrap(), &r(1, 64));
        let id = build_krr_reduced(4, 2, &<Exact as num_traits::One>::one(), Cap::default()).unwrap();
        assert_eq!(id, Channel::identity(id.rows().to_vec()).unwrap());
    }

    #[test]
    fn krr_reduced_general_k_is_stochastic() {
        let nr = build_krr_reduced(3, 3, &r(1, 2), Cap::default()).unwrap();
        assert!(is_row_stochastic(&nr));
        assert_eq!(nr.n_rows(), 10);
    }

    #[test]
    fn cascade_examples() {
        let p = r(3, 4);
        let n = build_krr(3, 2, &p, Cap::default()).unwrap();
        let sr = build_shuffle_reduced(3, 2, Cap::default()).unwrap();
        let nsr = cascade(&n, &sr).unwrap();
        assert_eq!(nsr.entry(&ds("aab"), &hist(&[2, 1])).unwrap(), &r(33, 64));
        assert!(is_row_stochastic(&nsr));

        let id = Channel::identity(n.rows().to_vec()).unwrap();
        assert_eq!(cascade(&id, &n).unwrap(), n);

        let s = build_shuffle_full(3, 2, Cap::default()).unwrap();
        assert_eq!(cascade(&n, &s).unwrap(), cascade(&s, &n).unwrap());
    }

    #[test]
    fn cascade_in_wrong_order_is_ill_typed() {
        let n = build_krr(3, 2, &r(3, 4), Cap::default()).unwrap();
        let sr = build_shuffle_reduced(3, 2, Cap::default()).unwrap();
        let err = cascade(&sr, &n).unwrap_err();
        assert!(matches!(err, QifError::CascadeMismatch { left_cols: 4, right_rows: 8 }));
        assert!(err.to_string().contains("inner dimensions/labels differ"));
    }

    #[test]
    fn canonical_forms() {
        let s = build_shuffle_full::<Exact>(3, 2, Cap::default()).unwrap();
        let sr = build_shuffle_reduced::<Exact>(3, 2, Cap::default()).unwrap();
        assert_eq!(canonicalize(&s), canonicalize(&sr));
        assert!(equivalent(&s, &sr).unwrap());

        let rows = vec![ds("a"), ds("b")];
        let dup = Channel::new(
            rows.clone(),
            vec![Label::Symbol("x".into()), Label::Symbol("y".into()), Label::Symbol("z".into())],
            vec![r(1, 4), r(1, 4), r(1, 2), r(1, 4), r(1, 4), r(1, 2)],
        )
        .unwrap();
        let canon = canonicalize(&dup);
        // Every column is proportional to (1/2, 1/2): one class with outer 1.
        assert_eq!(canon.columns().len(), 1);
        assert_eq!(canon.columns()[0].0, r(1, 1));

        let two = Channel::new(
            rows.clone(),
            vec![Label::Symbol("x".into()), Label::Symbol("y".into()), Label::Symbol("z".into())],
            vec![r(1, 4), r(1, 4), r(1, 2), r(0, 1), r(0, 1), r(1, 1)],
        )
        .unwrap();
        let canon = canonicalize(&two);
        assert_eq!(canon.columns().len(), 2);
        // Classes sort by posterior: (1/3, 2/3) before (1, 0).
        assert_eq!(canon.columns()[0], (r(3, 4), vec![r(1, 3), r(2, 3)]));
        assert_eq!(canon.columns()[1], (r(1, 4), vec![r(1, 1), r(0, 1)]));
    }

    #[test]
    fn zero_columns_are_dropped() {
        let rows = vec![ds("a"), ds("b")];
        let c = Channel::new(
            rows.clone(),
            vec![Label::Symbol("x".into()), Label::Symbol("dead".into())],
            vec![r(1, 1), r(0, 1), r(1, 1), r(0, 1)],
        )
        .unwrap();
        assert_eq!(canonicalize(&c).columns().len(), 1);
        let t = canonicalize(&c).to_channel().unwrap();
        assert_eq!(t.n_cols(), 1);
    }

    #[test]
    fn equivalence_examples() {
        let p = r(9, 10);
        let n = build_krr(2, 2, &p, Cap::default()).unwrap();
        let s = build_shuffle_full(2, 2, Cap::default()).unwrap();
        assert!(!equivalent(&n, &s).unwrap());

        let sr = build_shuffle_reduced(2, 2, Cap::default()).unwrap();
        let ns = cascade(&n, &s).unwrap();
        let nsr = cascade(&n, &sr).unwrap();
        assert!(equivalent(&ns, &nsr).unwrap());

        let nr = build_krr_reduced(2, 2, &p, Cap::default()).unwrap();
        assert_eq!(equivalent(&nr, &n), Err(QifError::RowLabelMismatch));
    }

    #[test]
    fn float_equivalence_tolerates_rounding() {
        let n = build_krr(3, 2, &0.7f64, Cap::default()).unwrap();
        let s = build_shuffle_full(3, 2, Cap::default()).unwrap();
        let sr = build_shuffle_reduced(3, 2, Cap::default()).unwrap();
        assert!(equivalent(&cascade(&n, &s).unwrap(), &cascade(&s, &n).unwrap()).unwrap());
        assert!(equivalent(&cascade(&n, &s).unwrap(), &cascade(&n, &sr).unwrap()).unwrap());
    }

    #[test]
    fn channel_validation() {
        let rows = vec![ds("a"), ds("b")];
        let cols = vec![Label::Symbol("x".into()), Label::Symbol("y".into())];
        assert!(Channel::new(rows.clone(), cols.clone(), vec![r(1, 2), r(1, 3), r(1, 2), r(1, 2)]).is_err());
        assert!(Channel::new(rows.clone(), cols.clone(), vec![r(3, 2), r(-1, 2), r(1, 2), r(1, 2)]).is_err());
        assert!(Channel::new(vec![ds("a"), ds("a")], cols.clone(), vec![r(1, 1), r(0, 1), r(1, 1), r(0, 1)]).is_err());
        assert!(Channel::new(rows, cols, vec![r(1, 1)]).is_err());
    }

    #[test]
    fn ldp_checks() {
        for eps in [0.5f64, 1.0, 2.0] {
            for k in [2u32, 3, 5] {
                let p = crate::combinatorics::epsilon_to_p(eps, k).unwrap();
                let c = build_krr_single(k, &p).unwrap();
                assert!(verify_ldp(&c, eps));
                assert!(!verify_ldp(&c, eps - 0.01));
            }
        }
        let id = Channel::<Exact>::identity(vec![ds("a"), ds("b")]).unwrap();
        assert!(!verify_ldp(&id, 5.0));
        let uniform = build_krr_single(3, &r(1, 3)).unwrap();
        assert!(verify_ldp(&uniform, 0.0));
    }

    #[test]
    fn intro_mechanisms() {
        let eps = 1.0f64;
        let m = build_intro_m::<f64>(3, eps).unwrap();
        let e = eps.exp();
        let row = m.row_index(&ds("bba")).unwrap();
        assert!((m.get(row, 0) - e / (1.0 + e)).abs() < 1e-15);
        assert!((m.get(row, 1) - 1.0 / (1.0 + e)).abs() < 1e-15);

        let m1 = build_intro_m::<Exact>(1, eps).unwrap();
        let mp1 = build_intro_mprime::<Exact>(1, eps).unwrap();
        assert_eq!(m1, mp1);

        let mp = build_intro_mprime::<Exact>(3, eps).unwrap();
        let odd = mp.row_index(&ds("baa")).unwrap();
        let even = m.row_index(&ds("baa")).unwrap();
        // "baa": the other bits have odd parity, so M' swaps M's probabilities.
        assert_eq!(mp.get(odd, 0).to_f64(), 1.0 - m.get(even, 0));
        assert!(verify_dp_adjacent(&mp, eps).unwrap());
        assert!(verify_dp_adjacent(&build_intro_m::<Exact>(3, eps).unwrap(), eps).unwrap());
        assert!(!verify_dp_adjacent(&mp, eps - 0.01).unwrap());
    }

    #[test]
    fn csv_export() {
        let sr = build_shuffle_reduced::<Exact>(1, 2, Cap::default()).unwrap();
        assert_eq!(sr.to_csv(), "secret,a:1b:0,a:0b:1\na,1,0\nb,0,1\n");
        let nsr = cascade(
            &build_krr(3, 2, &r(3, 4), Cap::default()).unwrap(),
            &build_shuffle_reduced(3, 2, Cap::default()).unwrap(),
        )
        .unwrap();
        let csv = nsr.to_csv();
        let line = csv.lines().find(|l| l.starts_with("aab,")).unwrap();
        assert_eq!(line, "aab,9/64,33/64,19/64,3/64");
    }
}
