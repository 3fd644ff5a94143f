//! Nonparametric belief propagation on pairwise models.
//!
//! The model is an undirected graph whose node potentials are sums of raw
//! exponential-quadratic components `exp(ℓ)·exp(-½αx² + βx)` (α may be zero
//! or negative — pure tilts and growing exponentials are legal potentials)
//! and whose edge potentials are `exp(x_u·c·x_v)`.
//!
//! A message from `u` toward `t` multiplies the node potential of `u` with
//! the messages arriving from its other neighbors and integrates against the
//! edge potential. On each cross-product component with totals `(ℓ, α, β)`
//! the integral maps
//!
//! ```text
//! α ↦ -c²/α        β ↦ c·β/α
//! ```
//!
//! When `α > 0` the integral converges and contributes its mass
//! `β²/(2α) + ½ln(2π/α)` to the log coefficient; when `α < 0` the transform
//! is formal (the underlying constraint semantics keep the component weights
//! flat, exactly as the check-message extension over its integer candidates
//! demands) and the coefficient is set so the outgoing mixture weight equals
//! the incoming one. A zero `α` has no meaningful transform and is reported
//! as a node singularity.
//!
//! Proper intermediate mixtures are reduced with the same resolution controls
//! as the factor-graph decoder; on single-Gaussian models the engine's
//! `(α, β)` recursion coincides term-for-term with Gaussian belief
//! propagation in information form.

use crate::error::{Error, Result};
use crate::gabp::GaussianModel;
use crate::gaussian::{reduce, Gaussian, GaussianMixture, WeightedComponent, DEFAULT_CROSS_CAP};

use super::DecoderConfig;

const LN_2PI: f64 = 1.8378770664093453;

/// Log-mass of a proper raw component: `log ∫ exp(-½αx² + βx) dx`.
fn mass(alpha: f64, beta: f64) -> f64 {
    beta * beta / (2.0 * alpha) + 0.5 * (LN_2PI - alpha.ln())
}

/// One additive term of a node potential or message:
/// `exp(log_coeff)·exp(-½·alpha·x² + beta·x)`.
#[derive(Clone, Copy, Debug)]
pub struct RawComponent {
    pub log_coeff: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl RawComponent {
    /// The multiplicative identity.
    pub fn vacuous() -> Self {
        RawComponent { log_coeff: 0.0, alpha: 0.0, beta: 0.0 }
    }

    /// A normalized Gaussian density as a raw component.
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::weighted_gaussian(0.0, mean, variance)
    }

    /// `exp(log_weight)·N(x; mean, variance)` as a raw component.
    pub fn weighted_gaussian(log_weight: f64, mean: f64, variance: f64) -> Result<Self> {
        let g = Gaussian::new(mean, variance)?;
        let (alpha, beta) = g.information();
        Ok(RawComponent { log_coeff: log_weight - mass(alpha, beta), alpha, beta })
    }

    /// A pure exponential tilt `exp(log_coeff)·exp(slope·x)`.
    pub fn tilt(log_coeff: f64, slope: f64) -> Self {
        RawComponent { log_coeff, alpha: 0.0, beta: slope }
    }

    /// Mixture-component view `(log_weight, gaussian)`; requires `alpha > 0`.
    pub fn to_weighted(self) -> Result<WeightedComponent> {
        if self.alpha <= 0.0 {
            return Err(Error::Domain(format!(
                "component with alpha = {} is not a Gaussian density",
                self.alpha
            )));
        }
        Ok(WeightedComponent {
            log_weight: self.log_coeff + mass(self.alpha, self.beta),
            gaussian: Gaussian { mean: self.beta / self.alpha, variance: 1.0 / self.alpha },
        })
    }
}

/// Resolution controls for the engine, mirroring the mixture decoder's.
#[derive(Clone, Copy, Debug)]
pub struct PairwiseConfig {
    pub max_components: usize,
    pub weight_floor: f64,
    pub cross_cap: usize,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        PairwiseConfig { max_components: 8, weight_floor: 1e-5, cross_cap: DEFAULT_CROSS_CAP }
    }
}

impl From<&DecoderConfig> for PairwiseConfig {
    fn from(c: &DecoderConfig) -> Self {
        PairwiseConfig {
            max_components: c.max_components,
            weight_floor: c.weight_floor,
            cross_cap: c.cross_cap,
        }
    }
}

/// A pairwise model: per-node potential components and symmetric bilinear
/// edge potentials `exp(x_u·c·x_v)`.
#[derive(Clone, Debug)]
pub struct PairwiseModel {
    potentials: Vec<Vec<RawComponent>>,
    edges: Vec<(usize, usize, f64)>,
}

impl PairwiseModel {
    /// A model of `n` nodes with vacuous potentials and no edges.
    pub fn new(n: usize) -> Self {
        PairwiseModel { potentials: vec![vec![RawComponent::vacuous()]; n], edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.potentials.len()
    }

    pub fn set_potential(&mut self, node: usize, components: Vec<RawComponent>) -> Result<()> {
        if node >= self.n() {
            return Err(Error::InvalidArgument(format!("node {node} out of range")));
        }
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "potential must have at least one component".into(),
            ));
        }
        for c in &components {
            if !(c.log_coeff.is_finite() && c.alpha.is_finite() && c.beta.is_finite()) {
                return Err(Error::InvalidArgument("potential components must be finite".into()));
            }
        }
        self.potentials[node] = components;
        Ok(())
    }

    pub fn add_edge(&mut self, u: usize, v: usize, coupling: f64) -> Result<()> {
        if u >= self.n() || v >= self.n() || u == v {
            return Err(Error::InvalidArgument(format!("bad edge ({u}, {v})")));
        }
        if coupling == 0.0 || !coupling.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "edge coupling must be finite and non-zero, got {coupling}"
            )));
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        if self.edges.iter().any(|&(x, y, _)| x == a && y == b) {
            return Err(Error::InvalidArgument(format!("duplicate edge ({u}, {v})")));
        }
        self.edges.push((a, b, coupling));
        Ok(())
    }

    /// Wraps an information-form Gaussian model: node `i` gets the component
    /// `(0, J_ii, h_i)` and each coupling `J_ij` becomes the edge potential
    /// `exp(-J_ij·x_i·x_j)`.
    pub fn from_gaussian_model(m: &GaussianModel) -> Self {
        let n = m.n();
        let mut model = PairwiseModel::new(n);
        for i in 0..n {
            model.potentials[i] =
                vec![RawComponent { log_coeff: 0.0, alpha: m.diag()[i], beta: m.shift()[i] }];
        }
        for (i, j, v) in m.offdiag().iter() {
            if i < j {
                model.edges.push((i, j, -v));
            }
        }
        model
    }
}

struct DirectedEdge {
    from: usize,
    to: usize,
    coupling: f64,
}

/// The message-passing engine over a [`PairwiseModel`].
pub struct PairwiseNbp<'a> {
    model: &'a PairwiseModel,
    config: PairwiseConfig,
    directed: Vec<DirectedEdge>,
    /// Directed edge ids arriving at each node.
    incoming: Vec<Vec<usize>>,
    messages: Vec<Vec<RawComponent>>,
    sweeps: usize,
}

impl<'a> PairwiseNbp<'a> {
    pub fn new(model: &'a PairwiseModel, config: PairwiseConfig) -> Self {
        let mut directed = Vec::with_capacity(model.edges.len() * 2);
        for &(u, v, c) in &model.edges {
            directed.push(DirectedEdge { from: u, to: v, coupling: c });
            directed.push(DirectedEdge { from: v, to: u, coupling: c });
        }
        let mut incoming = vec![Vec::new(); model.n()];
        for (id, e) in directed.iter().enumerate() {
            incoming[e.to].push(id);
        }
        let messages = vec![vec![RawComponent::vacuous()]; directed.len()];
        PairwiseNbp { model, config, directed, incoming, messages, sweeps: 0 }
    }

    /// Number of update sweeps performed (full or subset).
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Raw components of the message on the directed edge `from -> to`.
    pub fn message_components(&self, from: usize, to: usize) -> Option<&[RawComponent]> {
        self.edge_id(from, to).map(|id| self.messages[id].as_slice())
    }

    /// The message `from -> to` as a normalized mixture; fails if any
    /// component is improper.
    pub fn message_mixture(&self, from: usize, to: usize) -> Result<GaussianMixture> {
        let comps = self
            .message_components(from, to)
            .ok_or_else(|| Error::InvalidArgument(format!("no edge {from} -> {to}")))?;
        let weighted: Vec<WeightedComponent> =
            comps.iter().map(|c| c.to_weighted()).collect::<Result<_>>()?;
        GaussianMixture::new(weighted)
    }

    fn edge_id(&self, from: usize, to: usize) -> Option<usize> {
        self.directed.iter().position(|e| e.from == from && e.to == to)
    }

    /// One synchronous sweep over every directed edge.
    pub fn step(&mut self) -> Result<()> {
        let all: Vec<usize> = (0..self.model.n()).collect();
        self.step_subset(&all)
    }

    /// One synchronous sweep over the outgoing messages of `sources` only;
    /// all reads use the pre-sweep messages. Scheduling phases this way lets
    /// bipartite layers update in lockstep.
    pub fn step_subset(&mut self, sources: &[usize]) -> Result<()> {
        let mut is_source = vec![false; self.model.n()];
        for &s in sources {
            if s >= self.model.n() {
                return Err(Error::InvalidArgument(format!("node {s} out of range")));
            }
            is_source[s] = true;
        }
        let mut fresh: Vec<(usize, Vec<RawComponent>)> = Vec::new();
        for id in 0..self.directed.len() {
            if is_source[self.directed[id].from] {
                fresh.push((id, self.update_edge(id)?));
            }
        }
        for (id, msg) in fresh {
            self.messages[id] = msg;
        }
        self.sweeps += 1;
        Ok(())
    }

    /// The belief at `node`: potential times all incoming messages, as a
    /// reduced normalized mixture. Improper beliefs are a node singularity.
    pub fn belief(&self, node: usize) -> Result<GaussianMixture> {
        if node >= self.model.n() {
            return Err(Error::InvalidArgument(format!("node {node} out of range")));
        }
        let cross = self.cross_product(node, None)?;
        if cross.iter().any(|c| c.alpha <= 0.0) {
            return Err(Error::NodeSingularity {
                node,
                reason: "belief is not a proper density".into(),
            });
        }
        let weighted: Vec<WeightedComponent> =
            cross.iter().map(|c| c.to_weighted()).collect::<Result<_>>()?;
        reduce(
            &GaussianMixture::new(weighted)?,
            self.config.max_components,
            self.config.weight_floor,
        )
    }

    /// Folds the node potential with incoming messages (excluding the one
    /// from `exclude`), reducing proper partial products that outgrow four
    /// times the configured resolution.
    fn cross_product(&self, node: usize, exclude: Option<usize>) -> Result<Vec<RawComponent>> {
        let fold_cap = self.config.max_components.saturating_mul(4);
        let mut cur: Vec<RawComponent> = self.model.potentials[node].clone();
        for &in_id in &self.incoming[node] {
            let src = self.directed[in_id].from;
            if Some(src) == exclude {
                continue;
            }
            let next = &self.messages[in_id];
            if cur.len().saturating_mul(next.len()) > fold_cap && cur.iter().all(|c| c.alpha > 0.0)
            {
                cur = reduce_raw(&cur, self.config.max_components, self.config.weight_floor)?;
            }
            let total = cur
                .len()
                .checked_mul(next.len())
                .ok_or(Error::Capacity { requested: usize::MAX, cap: self.config.cross_cap })?;
            if total > self.config.cross_cap {
                return Err(Error::Capacity { requested: total, cap: self.config.cross_cap });
            }
            let mut folded = Vec::with_capacity(total);
            for a in &cur {
                for b in next {
                    folded.push(RawComponent {
                        log_coeff: a.log_coeff + b.log_coeff,
                        alpha: a.alpha + b.alpha,
                        beta: a.beta + b.beta,
                    });
                }
            }
            cur = folded;
        }
        for c in &cur {
            if !(c.log_coeff.is_finite() || c.log_coeff == f64::NEG_INFINITY)
                || !c.alpha.is_finite()
                || !c.beta.is_finite()
            {
                return Err(Error::Domain(format!(
                    "message product at node {node} is no longer finite"
                )));
            }
        }
        Ok(cur)
    }

    fn update_edge(&self, id: usize) -> Result<Vec<RawComponent>> {
        let edge = &self.directed[id];
        let (u, t, c) = (edge.from, edge.to, edge.coupling);
        let cross = self.cross_product(u, Some(t))?;
        if cross.iter().any(|r| r.alpha == 0.0) {
            return Err(Error::NodeSingularity {
                node: u,
                reason: format!("zero total precision on edge {u} -> {t}"),
            });
        }
        let all_proper = cross.iter().all(|r| r.alpha > 0.0);
        let all_improper = cross.iter().all(|r| r.alpha < 0.0);

        if all_proper {
            // Reduce in the source variable, then push each component through
            // the convergent integral: a normalized Gaussian maps to the
            // moment-generating form with its weight as the coefficient.
            let weighted: Vec<WeightedComponent> =
                cross.iter().map(|r| r.to_weighted()).collect::<Result<_>>()?;
            let reduced = reduce(
                &GaussianMixture::new(weighted)?,
                self.config.max_components,
                self.config.weight_floor,
            )?;
            return Ok(reduced
                .components()
                .iter()
                .map(|w| RawComponent {
                    log_coeff: w.log_weight,
                    alpha: -(c * c) * w.gaussian.variance,
                    beta: c * w.gaussian.mean,
                })
                .collect());
        }

        if all_improper {
            // Formal transform: outputs are proper, weights stay flat.
            let weighted: Vec<WeightedComponent> = cross
                .iter()
                .map(|r| {
                    let variance = -r.alpha / (c * c);
                    let mean = -r.beta / c;
                    Ok(WeightedComponent {
                        log_weight: r.log_coeff,
                        gaussian: Gaussian::new(mean, variance)?,
                    })
                })
                .collect::<Result<_>>()?;
            let reduced = reduce(
                &GaussianMixture::new(weighted)?,
                self.config.max_components,
                self.config.weight_floor,
            )?;
            return Ok(reduced
                .components()
                .iter()
                .map(|w| {
                    let (alpha, beta) = w.gaussian.information();
                    RawComponent { log_coeff: w.log_weight - mass(alpha, beta), alpha, beta }
                })
                .collect());
        }

        // Mixed signs: transform componentwise without reduction.
        if cross.len() > self.config.cross_cap {
            return Err(Error::Capacity { requested: cross.len(), cap: self.config.cross_cap });
        }
        Ok(cross
            .iter()
            .map(|r| {
                let alpha = -(c * c) / r.alpha;
                let beta = c * r.beta / r.alpha;
                let log_coeff = if r.alpha > 0.0 {
                    r.log_coeff + mass(r.alpha, r.beta)
                } else {
                    r.log_coeff - mass(alpha, beta)
                };
                RawComponent { log_coeff, alpha, beta }
            })
            .collect())
    }
}

/// Reduces a set of proper raw components as a mixture and converts back.
fn reduce_raw(
    comps: &[RawComponent],
    max_components: usize,
    weight_floor: f64,
) -> Result<Vec<RawComponent>> {
    let weighted: Vec<WeightedComponent> =
        comps.iter().map(|c| c.to_weighted()).collect::<Result<_>>()?;
    let reduced = reduce(&GaussianMixture::new(weighted)?, max_components, weight_floor)?;
    Ok(reduced
        .components()
        .iter()
        .map(|w| {
            let (alpha, beta) = w.gaussian.information();
            RawComponent { log_coeff: w.log_weight - mass(alpha, beta), alpha, beta }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabp::{GabpSolver, GaussianModel};
    use crate::sparse::SparseMatrix;

    fn gaussian_model(
        diag: Vec<f64>,
        couplings: &[(usize, usize, f64)],
        shift: Vec<f64>,
    ) -> GaussianModel {
        let n = diag.len();
        let mut trip = Vec::new();
        for &(i, j, v) in couplings {
            trip.push((i, j, v));
            trip.push((j, i, v));
        }
        GaussianModel::new(diag, SparseMatrix::from_triplets(n, n, &trip).unwrap(), shift).unwrap()
    }

    #[test]
    fn single_gaussian_messages_track_information_form_exactly() {
        // On a single-component model the engine must reproduce the classic
        // information-form recursion sweep by sweep.
        let gm = gaussian_model(
            vec![3.0, 2.5, 4.0],
            &[(0, 1, 0.8), (1, 2, -0.6), (0, 2, 0.3)],
            vec![1.0, -2.0, 0.5],
        );
        let pm = PairwiseModel::from_gaussian_model(&gm);
        let mut engine = PairwiseNbp::new(&pm, PairwiseConfig::default());
        let mut gabp = GabpSolver::new(&gm);
        for _ in 0..6 {
            engine.step().unwrap();
            gabp.step().unwrap();
            for &(i, j) in &[(0usize, 1usize), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)] {
                let raw = &engine.message_components(i, j).unwrap()[0];
                let (a, b) = gabp.message(i, j).unwrap();
                assert!((raw.alpha - a).abs() <= 1e-13 * (1.0 + a.abs()), "alpha {i}->{j}");
                assert!((raw.beta - b).abs() <= 1e-13 * (1.0 + b.abs()), "beta {i}->{j}");
            }
        }
    }

    #[test]
    fn belief_of_isolated_node_is_its_potential() {
        let mut pm = PairwiseModel::new(1);
        pm.set_potential(0, vec![RawComponent::gaussian(1.5, 0.25).unwrap()]).unwrap();
        let engine = PairwiseNbp::new(&pm, PairwiseConfig::default());
        let b = engine.belief(0).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.components()[0].gaussian.mean - 1.5).abs() < 1e-12);
        assert!((b.components()[0].gaussian.variance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn check_style_message_matches_the_factor_composition() {
        // One auxiliary node (2) with tilt components over b in {-1, +1},
        // linked to two variables with couplings 1.0 and 0.8; variable 1 holds
        // N(0.3, 0.05). After vars speak and the check answers, the message
        // 2 -> 0 must equal the factor-graph composition.
        let mut pm = PairwiseModel::new(3);
        pm.set_potential(0, vec![RawComponent::gaussian(0.0, 1.0).unwrap()]).unwrap();
        pm.set_potential(1, vec![RawComponent::gaussian(0.3, 0.05).unwrap()]).unwrap();
        let half = -(2f64.ln());
        pm.set_potential(2, vec![RawComponent::tilt(half, 1.0), RawComponent::tilt(half, -1.0)])
            .unwrap();
        pm.add_edge(2, 0, 1.0).unwrap();
        pm.add_edge(2, 1, 0.8).unwrap();

        let wide =
            PairwiseConfig { max_components: 1 << 20, weight_floor: 0.0, ..Default::default() };
        let mut engine = PairwiseNbp::new(&pm, wide);
        engine.step_subset(&[0, 1]).unwrap();
        engine.step_subset(&[2]).unwrap();
        let got = engine.message_mixture(2, 0).unwrap();

        let var_msg = GaussianMixture::single(Gaussian::new(0.3, 0.05).unwrap());
        let cfg = DecoderConfig {
            max_components: 1 << 20,
            weight_floor: 0.0,
            ..DecoderConfig::default()
        };
        let want = crate::decoder::factor_graph::factor_to_variable(
            1.0,
            &[(0.8, &var_msg)],
            &crate::decoder::IntegerSet::Bipolar,
            0.0,
            &cfg,
        )
        .unwrap();

        assert_eq!(got.len(), want.len());
        let key = |m: &GaussianMixture| {
            let mut v: Vec<(f64, f64, f64)> = m
                .components()
                .iter()
                .map(|c| (c.gaussian.mean, c.gaussian.variance, c.log_weight))
                .collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        };
        for (g, w) in key(&got).iter().zip(key(&want)) {
            assert!((g.0 - w.0).abs() < 1e-12, "mean {} vs {}", g.0, w.0);
            assert!((g.1 - w.1).abs() < 1e-12, "variance {} vs {}", g.1, w.1);
            assert!((g.2 - w.2).abs() < 1e-12, "weight {} vs {}", g.2, w.2);
        }
        // The tilt slope -b keeps weights flat across the two candidates.
        for c in got.components() {
            assert!((c.log_weight - half).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_total_precision_is_a_singularity() {
        // Two tilt-only nodes: the very first flooding sweep has no curvature
        // anywhere and must fail loudly.
        let mut pm = PairwiseModel::new(2);
        pm.set_potential(0, vec![RawComponent::tilt(0.0, 1.0)]).unwrap();
        pm.set_potential(1, vec![RawComponent::tilt(0.0, -1.0)]).unwrap();
        pm.add_edge(0, 1, 1.0).unwrap();
        let mut engine = PairwiseNbp::new(&pm, PairwiseConfig::default());
        let err = engine.step().unwrap_err();
        assert!(matches!(err, Error::NodeSingularity { .. }));
    }

    #[test]
    fn subset_sweep_leaves_other_messages_untouched() {
        let gm = gaussian_model(vec![2.0, 2.0], &[(0, 1, 0.5)], vec![1.0, -1.0]);
        let pm = PairwiseModel::from_gaussian_model(&gm);
        let mut engine = PairwiseNbp::new(&pm, PairwiseConfig::default());
        engine.step_subset(&[0]).unwrap();
        let m01 = engine.message_components(0, 1).unwrap()[0];
        let m10 = engine.message_components(1, 0).unwrap()[0];
        assert!(m01.alpha != 0.0);
        assert!(m10.alpha == 0.0 && m10.beta == 0.0, "1 -> 0 must still be vacuous");
        assert_eq!(engine.sweeps(), 1);
    }

    #[test]
    fn model_validation() {
        let mut pm = PairwiseModel::new(2);
        assert!(pm.add_edge(0, 0, 1.0).is_err());
        assert!(pm.add_edge(0, 2, 1.0).is_err());
        assert!(pm.add_edge(0, 1, 0.0).is_err());
        pm.add_edge(0, 1, 1.0).unwrap();
        assert!(pm.add_edge(1, 0, 0.5).is_err(), "duplicate edge");
        assert!(pm.set_potential(2, vec![RawComponent::vacuous()]).is_err());
        assert!(pm.set_potential(0, vec![]).is_err());
    }

    #[test]
    fn bimodal_prior_beliefs_lock_onto_the_transmitted_symbols() {
        // Two symbols with ±1 priors observed through x = G b at low noise.
        // G = [[1, 1], [1, -1]] (nodes 0,1 = symbols; 2,3 = coordinates).
        let sigma2 = 0.01;
        let b_true = [1.0, -1.0];
        let x = [b_true[0] + b_true[1], b_true[0] - b_true[1]];
        let mut pm = PairwiseModel::new(4);
        let half = -(2f64.ln());
        for s in 0..2 {
            pm.set_potential(
                s,
                vec![
                    RawComponent::weighted_gaussian(half, -1.0, 0.01).unwrap(),
                    RawComponent::weighted_gaussian(half, 1.0, 0.01).unwrap(),
                ],
            )
            .unwrap();
        }
        for i in 0..2 {
            pm.set_potential(2 + i, vec![RawComponent::gaussian(x[i], sigma2).unwrap()]).unwrap();
        }
        pm.add_edge(0, 2, 1.0).unwrap();
        pm.add_edge(1, 2, 1.0).unwrap();
        pm.add_edge(0, 3, 1.0).unwrap();
        pm.add_edge(1, 3, -1.0).unwrap();

        let mut engine = PairwiseNbp::new(&pm, PairwiseConfig::default());
        for _ in 0..20 {
            engine.step().unwrap();
        }
        for s in 0..2 {
            let belief = engine.belief(s).unwrap();
            let m = crate::gaussian::mode(&belief);
            assert!((m - b_true[s]).abs() < 0.1, "symbol {s}: mode {m} vs {}", b_true[s]);
        }
    }
}
