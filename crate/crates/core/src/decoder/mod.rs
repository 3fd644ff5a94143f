//! Message-passing decoders over Gaussian mixtures.
//!
//! Two equivalent formulations are provided. [`factor_graph`] runs belief
//! propagation on the bipartite graph of a sparse parity check `H`, passing
//! mixtures between variable and check nodes. [`pairwise`] runs the same
//! computation on a pairwise Markov random field whose messages are raw
//! exponential-quadratic components; it also powers decoding of sparse
//! generator codes in [`sparse_g`], where the integer symbols themselves are
//! nodes with a relaxed (mixture-of-Gaussians) prior.

pub mod factor_graph;
pub mod pairwise;
pub mod sparse_g;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, DEFAULT_CROSS_CAP};

/// The set of integer symbol values a check message sums over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntegerSet {
    /// The fixed set `{-1, +1}`.
    Bipolar,
    /// All integers within `half_width` of the rounded message mean.
    Window { half_width: i64 },
}

impl IntegerSet {
    /// The candidate integers for a message component centered at `center`.
    pub fn members(&self, center: f64) -> Vec<i64> {
        match *self {
            IntegerSet::Bipolar => vec![-1, 1],
            IntegerSet::Window { half_width } => {
                let c = center.round() as i64;
                (c - half_width..=c + half_width).collect()
            }
        }
    }
}

impl Default for IntegerSet {
    fn default() -> Self {
        IntegerSet::Window { half_width: 2 }
    }
}

/// Tuning knobs shared by the mixture decoders.
#[derive(Clone, Debug)]
pub struct DecoderConfig {
    /// Hard cap on message-passing iterations.
    pub max_iterations: usize,
    /// Convergence threshold on the largest belief-variance change.
    pub variance_epsilon: f64,
    /// Mixture size after every reduction.
    pub max_components: usize,
    /// Components below this normalized weight are dropped during reduction.
    pub weight_floor: f64,
    /// Fraction of the previous message blended into the new one (0 = off).
    pub damping: f64,
    /// Integer support of the check constraints.
    pub integer_set: IntegerSet,
    /// Hard cap on intermediate cross-product sizes.
    pub cross_cap: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iterations: 100,
            variance_epsilon: 1e-3,
            max_components: 8,
            weight_floor: 1e-5,
            damping: 0.0,
            integer_set: IntegerSet::default(),
            cross_cap: DEFAULT_CROSS_CAP,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if !(self.variance_epsilon > 0.0 && self.variance_epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "variance_epsilon must be positive, got {}",
                self.variance_epsilon
            )));
        }
        if self.max_components == 0 {
            return Err(Error::InvalidArgument("max_components must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.weight_floor) {
            return Err(Error::InvalidArgument(format!(
                "weight_floor must lie in [0, 1), got {}",
                self.weight_floor
            )));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if let IntegerSet::Window { half_width } = self.integer_set {
            if half_width < 0 {
                return Err(Error::InvalidArgument("window half width must be >= 0".into()));
            }
        }
        if self.cross_cap == 0 {
            return Err(Error::InvalidArgument("cross_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a decode: point estimates plus the final per-symbol beliefs.
#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// Estimated channel input (the lattice point).
    pub x_hat: Vec<f64>,
    /// Estimated integer symbols.
    pub b_hat: Vec<i64>,
    /// Iterations actually run.
    pub iterations: usize,
    /// Whether the belief variances settled below the threshold.
    pub converged: bool,
    /// Final beliefs, one mixture per symbol (factor-graph decoding: per
    /// lattice coordinate; generator decoding: per integer symbol).
    pub beliefs: Vec<GaussianMixture>,
}
