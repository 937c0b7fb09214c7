//! Multi-layer classification of 30-day hospital readmission risk for
//! heart-failure patients.
//!
//! The crate builds a labeled cohort from raw encounters ([`cohort`]),
//! prepares features and scores them with chi-square ([`features`]), trains
//! naive Bayes and linear SVM layer classifiers ([`classifiers`]), composes
//! them into a three-layer cascade ([`cascade`]) and evaluates everything
//! under stratified k-fold cross-validation ([`eval`]). [`synth`] generates
//! cohorts with a controllable signal for experiments without patient data.
//!
//! ```
//! use readmit::eval::{imbalance_ratio, is_imbalanced};
//!
//! let ir = imbalance_ratio(8293, 1477).unwrap();
//! assert!((ir - 5.615).abs() < 0.005);
//! assert!(is_imbalanced(ir));
//! ```

pub mod cascade;
pub mod classifiers;
pub mod cli;
pub mod cohort;
pub mod error;
pub mod eval;
pub mod features;
pub mod model_io;
pub mod pipeline;
pub mod seed;
pub mod synth;

pub use error::{Error, ErrorKind, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/cohort.md")]
    pub struct Cohort;
    #[doc = include_str!("../../../book/src/chi-square.md")]
    pub struct ChiSquare;
    #[doc = include_str!("../../../book/src/naive-bayes.md")]
    pub struct NaiveBayes;
    #[doc = include_str!("../../../book/src/svm.md")]
    pub struct Svm;
    #[doc = include_str!("../../../book/src/cascade.md")]
    pub struct Cascade;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub struct Synthetic;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct CommandLine;
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
}
