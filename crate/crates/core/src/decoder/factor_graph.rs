//! Belief propagation on the factor graph of a sparse parity check.
//!
//! The lattice point `x` satisfies `H x = b` with integer `b`; the channel
//! observation is `y = x + w`. Variable node `i` carries the posterior of
//! `x_i`; check node `s` enforces `Σ_j H_sj x_j ∈ ℤ` over the configured
//! integer set. All messages are Gaussian mixtures.
//!
//! One iteration is a synchronous two-phase sweep: every check-to-variable
//! message is computed from the previous variable messages, then every
//! variable-to-check message from the fresh check messages.
//!
//! A variable-to-check message multiplies the channel likelihood
//! `N(y_i, σ²)` with the incoming check messages for the other checks. A
//! check-to-variable message composes, for target coefficient `h = H_si`:
//!
//! 1. stretch each incoming message by its coefficient `H_sj`,
//! 2. convolve them (the density of `z = Σ_{j≠i} H_sj x_j`),
//! 3. replicate over the integer candidates `b` (each component moves to
//!    `z - b`),
//! 4. stretch by `-1/h`, landing on `x_i = (b - z)/h`,
//! 5. reduce back to the configured resolution.
//!
//! A degree-one check has an empty convolution; it is seeded with a
//! near-delta at zero (variance 1e-12) so the integer comb itself becomes
//! the message. Exact deltas are never represented.

use crate::error::{Error, Result};
use crate::gaussian::{
    convolve_mixtures, mixture_product, mode, moments, periodic_extend, reduce, stretch, Gaussian,
    GaussianMixture, WeightedComponent,
};
use crate::sparse::SparseMatrix;

use super::{DecodeResult, DecoderConfig, IntegerSet};

/// Variance standing in for an exact delta when a check has no other
/// neighbors to convolve.
const DELTA_VARIANCE: f64 = 1e-12;

/// Variable-to-check message: the product of the channel likelihood
/// `N(y_i, sigma2)` with all incoming check messages except the target's,
/// reduced to the configured resolution.
///
/// The product is folded in one mixture at a time; when an upcoming pairing
/// would overshoot four times the configured resolution, the running product
/// is reduced first. With generous limits (exactness runs) no intermediate
/// reduction fires and the result equals the full cross product.
pub fn variable_to_factor(
    y_i: f64,
    sigma2: f64,
    incoming: &[&GaussianMixture],
    config: &DecoderConfig,
) -> Result<GaussianMixture> {
    let obs = Gaussian::new(y_i, sigma2)?;
    let fold_cap = config.max_components.saturating_mul(4);
    let mut cur = GaussianMixture::single(obs);
    for mix in incoming {
        if cur.len().saturating_mul(mix.len()) > fold_cap {
            cur = reduce(&cur, config.max_components, config.weight_floor)?;
        }
        cur = mixture_product(&[&cur, mix], None, config.cross_cap)?;
    }
    reduce(&cur, config.max_components, config.weight_floor)
}

/// Check-to-variable message for the neighbor with coefficient `coeff_out`,
/// built from the other neighbors' messages and their coefficients.
///
/// `target_hint` is the current estimate of the receiving variable; the
/// integer window is centered on the full check sum `mean(z) + coeff_out·hint`,
/// which is the integer the check enforces. A window centered on the partial
/// sum alone can miss the true integer entirely when `|coeff_out·x_i|`
/// exceeds the half-width.
pub fn factor_to_variable(
    coeff_out: f64,
    others: &[(f64, &GaussianMixture)],
    integer_set: &IntegerSet,
    target_hint: f64,
    config: &DecoderConfig,
) -> Result<GaussianMixture> {
    if coeff_out == 0.0 || !coeff_out.is_finite() {
        return Err(Error::Domain(format!(
            "check coefficient must be finite and non-zero, got {coeff_out}"
        )));
    }
    // Convolutions between reductions may breathe above the final size.
    let fold_cap = config.max_components.saturating_mul(4);

    let mut conv = GaussianMixture::single(Gaussian::new(0.0, DELTA_VARIANCE)?);
    let mut first = true;
    for &(coeff, mix) in others {
        let stretched = stretch(mix, coeff)?;
        conv =
            if first { stretched } else { convolve_mixtures(&conv, &stretched, config.cross_cap)? };
        first = false;
        if conv.len() > fold_cap {
            conv = reduce(&conv, fold_cap, config.weight_floor)?;
        }
    }
    // The integer replication below multiplies the component count by the
    // window size, so settle the cavity at the output resolution first.
    if conv.len() > config.max_components {
        conv = reduce(&conv, config.max_components, config.weight_floor)?;
    }

    let integers = match *integer_set {
        IntegerSet::Bipolar => vec![-1, 1],
        IntegerSet::Window { .. } => {
            let shift = coeff_out * target_hint;
            integer_set.members(moments(&conv).0 + shift)
        }
    };

    let extended = periodic_extend(&conv, &integers, 1.0)?;
    let back = stretch(&extended, -1.0 / coeff_out)?;
    reduce(&back, config.max_components, config.weight_floor)
}

/// Blends the previous message into the new one, component by component on
/// the weight-sorted lists (information-form parameters and log weights are
/// mixed linearly). Skipped entirely when the component counts differ.
fn damp_message(
    previous: &GaussianMixture,
    fresh: GaussianMixture,
    damping: f64,
) -> Result<GaussianMixture> {
    if damping <= 0.0 || previous.len() != fresh.len() {
        return Ok(fresh);
    }
    let keep = damping;
    let take = 1.0 - damping;
    let mut blended = Vec::with_capacity(fresh.len());
    for (old, new) in previous.components().iter().zip(fresh.components()) {
        let (ao, bo) = old.gaussian.information();
        let (an, bn) = new.gaussian.information();
        let alpha = keep * ao + take * an;
        let beta = keep * bo + take * bn;
        blended.push(WeightedComponent {
            log_weight: keep * old.log_weight + take * new.log_weight,
            gaussian: Gaussian::from_information(alpha, beta)?,
        });
    }
    GaussianMixture::new(blended)
}

/// Stepped factor-graph decoder holding all edge messages and beliefs.
pub struct LdlcDecoder<'a> {
    h: &'a SparseMatrix,
    y: Vec<f64>,
    sigma2: f64,
    config: DecoderConfig,
    /// `(check, variable, coefficient)` in row-major order of `H`.
    edges: Vec<(usize, usize, f64)>,
    check_edges: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
    var_msgs: Vec<GaussianMixture>,
    check_msgs: Vec<GaussianMixture>,
    beliefs: Vec<GaussianMixture>,
    prev_variance: Vec<f64>,
    iterations: usize,
}

impl<'a> LdlcDecoder<'a> {
    pub fn new(h: &'a SparseMatrix, y: &[f64], sigma2: f64, config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        if y.len() != h.cols() {
            return Err(Error::InvalidArgument(format!(
                "observation length {} does not match {} variables",
                y.len(),
                h.cols()
            )));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        for i in 0..h.cols() {
            if h.col_degree(i) == 0 {
                return Err(Error::InvalidArgument(format!(
                    "variable {i} participates in no check"
                )));
            }
        }
        let edges: Vec<(usize, usize, f64)> = h.iter().collect();
        let mut check_edges = vec![Vec::new(); h.rows()];
        let mut var_edges = vec![Vec::new(); h.cols()];
        for (id, &(s, i, _)) in edges.iter().enumerate() {
            check_edges[s].push(id);
            var_edges[i].push(id);
        }
        let var_msgs: Vec<GaussianMixture> = edges
            .iter()
            .map(|&(_, i, _)| Ok(GaussianMixture::single(Gaussian::new(y[i], sigma2)?)))
            .collect::<Result<_>>()?;
        let check_msgs = var_msgs.clone();
        let beliefs: Vec<GaussianMixture> = y
            .iter()
            .map(|&yi| Ok(GaussianMixture::single(Gaussian::new(yi, sigma2)?)))
            .collect::<Result<_>>()?;
        let prev_variance = vec![sigma2; h.cols()];
        Ok(LdlcDecoder {
            h,
            y: y.to_vec(),
            sigma2,
            config,
            edges,
            check_edges,
            var_edges,
            var_msgs,
            check_msgs,
            beliefs,
            prev_variance,
            iterations: 0,
        })
    }

    /// One synchronous iteration. Returns the largest absolute change in any
    /// belief variance.
    pub fn step(&mut self) -> Result<f64> {
        // Phase 1: all check-to-variable messages from the old variable ones.
        let mut new_check = Vec::with_capacity(self.edges.len());
        for (id, &(s, _, coeff)) in self.edges.iter().enumerate() {
            let others: Vec<(f64, &GaussianMixture)> = self.check_edges[s]
                .iter()
                .filter(|&&e| e != id)
                .map(|&e| (self.edges[e].2, &self.var_msgs[e]))
                .collect();
            let hint = moments(&self.var_msgs[id]).0;
            new_check.push(factor_to_variable(
                coeff,
                &others,
                &self.config.integer_set,
                hint,
                &self.config,
            )?);
        }
        self.check_msgs = new_check;

        // Phase 2: variable-to-check messages and beliefs from fresh check
        // messages.
        let mut new_var = Vec::with_capacity(self.edges.len());
        for (id, &(_, i, _)) in self.edges.iter().enumerate() {
            let incoming: Vec<&GaussianMixture> = self.var_edges[i]
                .iter()
                .filter(|&&e| e != id)
                .map(|&e| &self.check_msgs[e])
                .collect();
            let fresh = variable_to_factor(self.y[i], self.sigma2, &incoming, &self.config)?;
            new_var.push(damp_message(&self.var_msgs[id], fresh, self.config.damping)?);
        }
        self.var_msgs = new_var;

        let mut delta = 0.0f64;
        for i in 0..self.h.cols() {
            let incoming: Vec<&GaussianMixture> =
                self.var_edges[i].iter().map(|&e| &self.check_msgs[e]).collect();
            let belief = variable_to_factor(self.y[i], self.sigma2, &incoming, &self.config)?;
            let (_, var) = moments(&belief);
            delta = delta.max((var - self.prev_variance[i]).abs());
            self.prev_variance[i] = var;
            self.beliefs[i] = belief;
        }
        self.iterations += 1;
        Ok(delta)
    }

    pub fn beliefs(&self) -> &[GaussianMixture] {
        &self.beliefs
    }

    /// Message from variable `i` toward check `s`, if that edge exists.
    pub fn variable_message(&self, s: usize, i: usize) -> Option<&GaussianMixture> {
        self.edge_id(s, i).map(|e| &self.var_msgs[e])
    }

    /// Message from check `s` toward variable `i`, if that edge exists.
    pub fn check_message(&self, s: usize, i: usize) -> Option<&GaussianMixture> {
        self.edge_id(s, i).map(|e| &self.check_msgs[e])
    }

    fn edge_id(&self, s: usize, i: usize) -> Option<usize> {
        self.check_edges[s].iter().copied().find(|&e| self.edges[e].1 == i)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Runs until belief variances settle (or the iteration cap) and forms
    /// point estimates: `x̂` from belief modes, `b̂ = round(H x̂)`.
    pub fn decode(&mut self) -> Result<DecodeResult> {
        let mut converged = false;
        while self.iterations < self.config.max_iterations {
            let delta = self.step()?;
            if delta < self.config.variance_epsilon {
                converged = true;
                break;
            }
        }
        let x_hat: Vec<f64> = self.beliefs.iter().map(mode).collect();
        let b_hat: Vec<i64> = self.h.matvec(&x_hat)?.iter().map(|&v| v.round() as i64).collect();
        Ok(DecodeResult {
            x_hat,
            b_hat,
            iterations: self.iterations,
            converged,
            beliefs: self.beliefs.clone(),
        })
    }
}

/// One-call decoding of an observation against a sparse parity check.
pub fn ldlc_decode(
    h: &SparseMatrix,
    y: &[f64],
    sigma2: f64,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    LdlcDecoder::new(h, y, sigma2, config.clone())?.decode()
}
