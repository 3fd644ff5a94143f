//! Low-density lattice code (LDLC) toolkit.
//!
//! The crate builds lattice codes whose check or generator matrix is sparse,
//! transmits lattice points over an unconstrained-power AWGN channel, and
//! recovers the integer symbols with message-passing decoders that represent
//! every message as a Gaussian mixture:
//!
//! - [`gaussian`]: weighted Gaussian mixtures and the closed-form algebra
//!   (product, convolution, stretch, periodic extension, moment matching).
//! - [`sparse`] / [`linalg`]: compressed sparse matrices and the small dense
//!   kernel (LU, solve, determinant) used for encoding and oracles.
//! - [`code`]: Latin-square check matrices and sparse bipolar generators,
//!   determinant-normalized, with file round-tripping.
//! - [`channel`]: noise levels quoted as distance from the capacity limit in
//!   dB, plus seeded AWGN sampling.
//! - [`decoder`]: the LDLC factor-graph decoder, a generic pairwise
//!   Gaussian-mixture engine, and the sparse-generator decoders built on it.
//! - [`gabp`]: scalar Gaussian belief propagation in information form, both
//!   a solver in its own right and the single-component reference the
//!   mixture engine must reproduce.
//! - [`convergence`]: certificate checks that predict decoder behaviour and
//!   remedies (regularization, preconditioning) when they fail.
//! - [`sim`]: seeded symbol-error-rate sweeps with CSV output and cost
//!   profiles.
//!
//! Construction precondition violations (impossible shapes, non-finite
//! inputs) panic via `assert!`; runtime failures that depend on data
//! (singular matrices, divergence, capacity overruns) return [`Error`].

#![forbid(unsafe_code)]

pub mod channel;
pub mod code;
pub mod convergence;
pub mod decoder;
pub mod error;
pub mod gabp;
pub mod gaussian;
pub mod linalg;
pub mod seed;
pub mod sim;
pub mod sparse;

pub use channel::{awgn_noise, db_from_sigma2, sigma2_from_db, sigma2_max, transmit};
pub use code::{load_code, read_matrix, save_code, write_matrix, CodeKind, Encoder, LatticeCode};
pub use convergence::{
    check_gabp_conditions, check_ldlc_conditions, precondition_hht, regularize_j, spectral_radius,
    Condition, ConvergenceReport, Preconditioned, Remedy,
};
pub use decoder::factor_graph::{ldlc_decode, LdlcDecoder};
pub use decoder::pairwise::{PairwiseConfig, PairwiseModel, PairwiseNbp, RawComponent};
pub use decoder::sparse_g::{decode_sparse_g, gabp_relaxed_decode, RelaxedPrior};
pub use decoder::{DecodeResult, DecoderConfig, IntegerSet};
pub use error::{Error, Result};
pub use gabp::{
    check_observation_model, gabp_solve, joint_generator_model, GabpConfig, GabpSolution,
    GabpSolver, GaussianModel,
};
pub use gaussian::{Gaussian, GaussianMixture, WeightedComponent};
pub use linalg::DenseMatrix;
pub use sim::{
    cost_profile, emit_csv, parse_csv, run_sweep, CostProfile, DecoderKind, PointReport,
    SimulationReport, SweepSpec,
};
pub use sparse::SparseMatrix;
