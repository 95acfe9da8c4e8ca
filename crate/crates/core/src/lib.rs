//! Exact quantitative-information-flow analysis of k-ary randomized response
//! (k-RR) and shuffling.
//!
//! Mechanisms are modelled as channels from datasets (or histograms) to
//! observables. The crate builds and composes those channels, decides
//! leakage equivalence, computes g-vulnerability and leakage for uninformed
//! and all-but-one adversaries, and evaluates the closed-form single-target
//! vulnerabilities far beyond brute-force scale. The [`oracle`] module
//! recomputes everything from definitions for cross-checking.
//!
//! ```
//! use qif_shuffle::channels::{build_krr, build_shuffle_reduced, cascade, Cap};
//! use qif_shuffle::closed_forms::v_post_ns_binary_fast;
//! use qif_shuffle::vulnerability::{posterior_vulnerability, single_target_gain, uniform_dataset_prior};
//! use qif_shuffle::{Exact, Scalar};
//!
//! let p = Exact::from_ratio(3, 4);
//! let ns = cascade(&build_krr(3, 2, &p, Cap::default())?, &build_shuffle_reduced(3, 2, Cap::default())?)?;
//! let v = posterior_vulnerability(&uniform_dataset_prior(3, 2)?, &single_target_gain(3, 2)?, &ns)?;
//! assert_eq!(v, v_post_ns_binary_fast(3, &p));
//! assert_eq!(v, Exact::from_ratio(5, 8));
//! # Ok::<(), qif_shuffle::QifError>(())
//! ```

pub mod channels;
pub mod checks;
pub mod closed_forms;
pub mod combinatorics;
mod error;
pub mod oracle;
pub mod scalar;
pub mod vulnerability;

pub use error::{QifError, Result};
pub use scalar::{Exact, Scalar};
