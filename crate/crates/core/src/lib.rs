//! Quantum hidden Markov models and the generative quantum kernels built on them.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: small dense complex matrices, Hermitian eigendecomposition,
//!   PSD square roots and partial traces.
//! - [`hmm`]: classical hidden Markov models with observable operators and the
//!   built-in four-state market model.
//! - [`qhmm`]: quantum HMMs as per-symbol Kraus channels, their unitary
//!   dilations and random model generation.
//! - [`metrics`]: trace distance, fidelity, Bures divergence and the forward
//!   distribution bounds relating them.
//! - [`kernels`]: predictive and structural feature maps, kernel values and
//!   Gram matrices with PSD repair.
//! - [`tasks`]: structural and predictive labelling tasks and dataset sampling.
//! - [`learn`]: SMO-based SVM, kernel k-NN and the repeated train/test harness.
//! - [`circuits`]: gate-level trajectory simulation, SWAP test, single-qubit
//!   tomography and the projected kernel.
//! - [`io`]: JSON model files and CSV exports.

pub mod circuits;
pub mod error;
pub mod hmm;
pub mod io;
pub mod kernels;
pub mod learn;
pub mod linalg;
pub mod metrics;
pub mod qhmm;
pub mod tasks;

pub use error::{Error, Result};
pub use hmm::{Alphabet, ClassicalHmm, GenerativeModel, SequenceDistribution, Symbol};
pub use kernels::{Family, GramMatrix, KernelSpec, Metric};
pub use linalg::{ComplexMatrix, HermitianEigen, C64};
pub use qhmm::{DensityOperator, Qhmm, SymbolChannel, UnitaryQhmm};
pub use tasks::{LabeledDataset, PredictiveLabelTable, PrefixMode, Task};

/// Probability at or below which a symbol or sequence is treated as impossible.
pub const IMPOSSIBLE_PROB: f64 = 1e-12;

/// Upper bound on the number of sequences any exhaustive enumeration may visit.
pub const ENUMERATION_CAP: usize = 1 << 20;
