//! Gaussian belief propagation on sparse information-form models.
//!
//! The model is a quadratic log-density `-½ xᵀ J x + hᵀ x` described by the
//! diagonal of `J`, its off-diagonal sparsity, and the shift `h`. Message
//! passing runs in information form: each directed edge `i→j` carries a
//! precision component `α` and a shift component `β`. One synchronous sweep
//! updates every edge from the previous sweep's values:
//!
//! ```text
//! α_{i\j} = J_ii + Σ_{k≠j} α_{k→i}      β_{i\j} = h_i + Σ_{k≠j} β_{k→i}
//! α_{i→j} = -J_ij² / α_{i\j}            β_{i→j} = -J_ij · β_{i\j} / α_{i\j}
//! ```
//!
//! At a fixed point the marginal means are exact; marginal variances are
//! exact on trees and approximate on loopy graphs. A zero pivot `α_{i\j}`
//! leaves the update undefined and is reported as a node singularity — this
//! is the normal fate of models with zero diagonal entries, which is why
//! the convergence toolbox offers diagonal regularization.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Sparse information-form Gaussian model `exp(-½ xᵀ J x + hᵀ x)`.
///
/// `diag` holds `J_ii` (zeros allowed — some joint constructions have them);
/// `offdiag` stores both triangles of the off-diagonal part of `J` and must
/// be symmetric with an empty diagonal.
#[derive(Clone, Debug)]
pub struct GaussianModel {
    diag: Vec<f64>,
    offdiag: SparseMatrix,
    shift: Vec<f64>,
}

impl GaussianModel {
    pub fn new(diag: Vec<f64>, offdiag: SparseMatrix, shift: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if offdiag.rows() != n || offdiag.cols() != n {
            return Err(Error::InvalidArgument(format!(
                "off-diagonal part is {}x{}, expected {n}x{n}",
                offdiag.rows(),
                offdiag.cols()
            )));
        }
        if shift.len() != n {
            return Err(Error::InvalidArgument(format!(
                "shift has length {}, expected {n}",
                shift.len()
            )));
        }
        for (i, j, v) in offdiag.iter() {
            if i == j {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry ({i}, {i}) belongs in the diag vector"
                )));
            }
            let back = offdiag.get(j, i);
            if back != Some(v) {
                return Err(Error::InvalidArgument(format!(
                    "asymmetric coupling at ({i}, {j}): {v} vs {back:?}"
                )));
            }
        }
        if diag.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        Ok(GaussianModel { diag, offdiag, shift })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &SparseMatrix {
        &self.offdiag
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Full `J_ij`, reading the diagonal from `diag`.
    pub fn j_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.offdiag.get(i, j).unwrap_or(0.0)
        }
    }
}

/// Iteration controls for [`gabp_solve`].
#[derive(Clone, Copy, Debug)]
pub struct GabpConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the largest message change in one sweep.
    pub tolerance: f64,
}

impl Default for GabpConfig {
    fn default() -> Self {
        GabpConfig { max_iterations: 10_000, tolerance: 1e-10 }
    }
}

/// Result of a belief-propagation run.
#[derive(Clone, Debug)]
pub struct GabpSolution {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Stepped belief-propagation engine exposing per-edge messages.
pub struct GabpSolver<'a> {
    model: &'a GaussianModel,
    /// Directed edges in row-major order of the off-diagonal matrix.
    edges: Vec<(usize, usize, f64)>,
    /// For each node, the ids of its incoming edges.
    incoming: Vec<Vec<usize>>,
    /// edge id of the reverse direction of each edge.
    reverse: Vec<usize>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    iterations: usize,
    diverged: bool,
}

impl<'a> GabpSolver<'a> {
    pub fn new(model: &'a GaussianModel) -> Self {
        let edges: Vec<(usize, usize, f64)> = model.offdiag.iter().collect();
        let mut index = std::collections::HashMap::with_capacity(edges.len());
        for (id, &(i, j, _)) in edges.iter().enumerate() {
            index.insert((i, j), id);
        }
        let mut incoming = vec![Vec::new(); model.n()];
        for (id, &(_, j, _)) in edges.iter().enumerate() {
            incoming[j].push(id);
        }
        let reverse = edges.iter().map(|&(i, j, _)| index[&(j, i)]).collect();
        let m = edges.len();
        GabpSolver {
            model,
            edges,
            incoming,
            reverse,
            alpha: vec![0.0; m],
            beta: vec![0.0; m],
            iterations: 0,
            diverged: false,
        }
    }

    /// One synchronous sweep over all directed edges. Returns the largest
    /// absolute change across messages.
    pub fn step(&mut self) -> Result<f64> {
        let n = self.model.n();
        let mut alpha_in = self.model.diag.clone();
        let mut beta_in = self.model.shift.clone();
        for id in 0..self.edges.len() {
            let (_, j, _) = self.edges[id];
            alpha_in[j] += self.alpha[id];
            beta_in[j] += self.beta[id];
        }
        let _ = n;

        let mut new_alpha = vec![0.0; self.edges.len()];
        let mut new_beta = vec![0.0; self.edges.len()];
        let mut delta = 0.0f64;
        for id in 0..self.edges.len() {
            let (i, j, jij) = self.edges[id];
            let rev = self.reverse[id];
            // Cavity totals at i excluding what j itself sent.
            let a = alpha_in[i] - self.alpha[rev];
            let b = beta_in[i] - self.beta[rev];
            if a == 0.0 {
                return Err(Error::NodeSingularity {
                    node: i,
                    reason: format!("zero cavity precision on edge {i}->{j}"),
                });
            }
            new_alpha[id] = -jij * jij / a;
            new_beta[id] = -jij * b / a;
            delta = delta.max((new_alpha[id] - self.alpha[id]).abs());
            delta = delta.max((new_beta[id] - self.beta[id]).abs());
        }
        if new_alpha.iter().chain(new_beta.iter()).any(|v| !v.is_finite()) {
            self.diverged = true;
        }
        self.alpha = new_alpha;
        self.beta = new_beta;
        self.iterations += 1;
        Ok(delta)
    }

    /// Current message on the directed edge `from -> to` as `(alpha, beta)`.
    pub fn message(&self, from: usize, to: usize) -> Option<(f64, f64)> {
        self.edges
            .iter()
            .position(|&(i, j, _)| i == from && j == to)
            .map(|id| (self.alpha[id], self.beta[id]))
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// True once a sweep has produced non-finite messages.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Marginal means and variances from the current messages.
    pub fn marginals(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.model.n();
        let mut mean = vec![0.0; n];
        let mut variance = vec![0.0; n];
        for i in 0..n {
            let mut a = self.model.diag[i];
            let mut b = self.model.shift[i];
            for &id in &self.incoming[i] {
                a += self.alpha[id];
                b += self.beta[id];
            }
            if a == 0.0 {
                return Err(Error::NodeSingularity {
                    node: i,
                    reason: "zero marginal precision".into(),
                });
            }
            mean[i] = b / a;
            variance[i] = 1.0 / a;
        }
        Ok((mean, variance))
    }
}

/// Runs synchronous belief propagation to convergence (or the iteration cap,
/// or numerical divergence — reported via `converged`, not an error).
pub fn gabp_solve(model: &GaussianModel, config: &GabpConfig) -> Result<GabpSolution> {
    let mut solver = GabpSolver::new(model);
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let delta = solver.step()?;
        if solver.diverged() {
            break;
        }
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }
    if solver.diverged() {
        return Ok(GabpSolution {
            mean: vec![f64::NAN; model.n()],
            variance: vec![f64::NAN; model.n()],
            iterations: solver.iterations(),
            converged: false,
        });
    }
    let (mean, variance) = solver.marginals()?;
    Ok(GabpSolution { mean, variance, iterations: solver.iterations(), converged })
}

fn check_joint_inputs(m: &SparseMatrix, y: &[f64], sigma2: f64) -> Result<usize> {
    if m.rows() != m.cols() {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if y.len() != m.rows() {
        return Err(Error::InvalidArgument(format!(
            "observation length {} does not match dimension {}",
            y.len(),
            m.rows()
        )));
    }
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    Ok(m.rows())
}

/// Joint information-form model over stacked `(b, x)` for `x = G b`,
/// `y = x + w`: unit precision on each symbol, `σ⁻²` on each coordinate, the
/// observation shift `y_i/σ²` on coordinates, and one coupling per non-zero
/// `G_is` between symbol `s` and coordinate `i`.
///
/// `decoding_sign` selects the coupling orientation. `false` gives the model
/// whose energy penalizes `x` and `G b` moving together (`J` coupling
/// `+G_is`); `true` flips it so the quadratic form couples them positively —
/// the orientation a relaxation decoder needs, with stationary mean
/// `μ_b = (I − σ²GᵀG)⁻¹ Gᵀ y` when that matrix is invertible.
pub fn joint_generator_model(
    g: &SparseMatrix,
    y: &[f64],
    sigma2: f64,
    decoding_sign: bool,
) -> Result<GaussianModel> {
    let n = check_joint_inputs(g, y, sigma2)?;
    let mut diag = vec![1.0; n];
    diag.extend(std::iter::repeat(1.0 / sigma2).take(n));
    let mut shift = vec![0.0; n];
    shift.extend(y.iter().map(|&v| v / sigma2));
    let sign = if decoding_sign { -1.0 } else { 1.0 };
    let mut trip = Vec::with_capacity(2 * g.iter().count());
    for (i, s, v) in g.iter() {
        trip.push((s, n + i, sign * v));
        trip.push((n + i, s, sign * v));
    }
    let offdiag = SparseMatrix::from_triplets(2 * n, 2 * n, &trip)?;
    GaussianModel::new(diag, offdiag, shift)
}

/// Joint model over stacked `(slack, x)` for a check matrix `H`: one
/// zero-diagonal slack node per row of `H`, coupled to coordinate `x_i` by
/// `H_si`, with the channel precision `σ⁻²` and shift `y_i/σ²` on the
/// coordinates. The zero diagonals make the raw model singular under message
/// passing *by construction* — this is the stock example that diagonal
/// regularization and the convergence certificates are there to diagnose.
pub fn check_observation_model(h: &SparseMatrix, y: &[f64], sigma2: f64) -> Result<GaussianModel> {
    let n = check_joint_inputs(h, y, sigma2)?;
    let mut diag = vec![0.0; n];
    diag.extend(std::iter::repeat(1.0 / sigma2).take(n));
    let mut shift = vec![0.0; n];
    shift.extend(y.iter().map(|&v| v / sigma2));
    let mut trip = Vec::with_capacity(2 * h.iter().count());
    for (s, i, v) in h.iter() {
        trip.push((s, n + i, v));
        trip.push((n + i, s, v));
    }
    let offdiag = SparseMatrix::from_triplets(2 * n, 2 * n, &trip)?;
    GaussianModel::new(diag, offdiag, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn model(diag: Vec<f64>, couplings: &[(usize, usize, f64)], shift: Vec<f64>) -> GaussianModel {
        let n = diag.len();
        let mut trip = Vec::new();
        for &(i, j, v) in couplings {
            trip.push((i, j, v));
            trip.push((j, i, v));
        }
        GaussianModel::new(diag, SparseMatrix::from_triplets(n, n, &trip).unwrap(), shift).unwrap()
    }

    fn dense_j(m: &GaussianModel) -> DenseMatrix {
        let n = m.n();
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d.set(i, j, m.j_entry(i, j));
            }
        }
        d
    }

    #[test]
    fn two_node_chain_is_exact() {
        let m = model(vec![2.0, 2.0], &[(0, 1, 0.5)], vec![1.0, 2.0]);
        let sol = gabp_solve(&m, &GabpConfig::default()).unwrap();
        assert!(sol.converged);
        let mu = dense_j(&m).solve(&[1.0, 2.0]).unwrap();
        let inv = dense_j(&m).inverse().unwrap();
        for i in 0..2 {
            assert!((sol.mean[i] - mu[i]).abs() < 1e-10);
            // Trees give exact variances too.
            assert!((sol.variance[i] - inv.get(i, i)).abs() < 1e-10);
        }
    }

    #[test]
    fn chain_of_four_matches_dense_inverse() {
        let m = model(
            vec![3.0, 3.0, 3.0, 3.0],
            &[(0, 1, 1.0), (1, 2, -1.2), (2, 3, 0.7)],
            vec![1.0, 0.0, -1.0, 2.0],
        );
        let sol = gabp_solve(&m, &GabpConfig::default()).unwrap();
        assert!(sol.converged);
        let mu = dense_j(&m).solve(m.shift()).unwrap();
        let inv = dense_j(&m).inverse().unwrap();
        for i in 0..4 {
            assert!((sol.mean[i] - mu[i]).abs() < 1e-9);
            assert!((sol.variance[i] - inv.get(i, i)).abs() < 1e-9);
        }
    }

    #[test]
    fn loopy_walk_summable_means_are_exact() {
        // 3-cycle with mild couplings: converges, means exact, variances only
        // approximate.
        let m = model(
            vec![2.0, 2.0, 2.0],
            &[(0, 1, 0.4), (1, 2, 0.4), (0, 2, 0.4)],
            vec![1.0, -0.5, 0.25],
        );
        let sol = gabp_solve(&m, &GabpConfig::default()).unwrap();
        assert!(sol.converged);
        let mu = dense_j(&m).solve(m.shift()).unwrap();
        for i in 0..3 {
            assert!((sol.mean[i] - mu[i]).abs() < 1e-8);
            assert!(sol.variance[i] > 0.0);
        }
    }

    #[test]
    fn non_positive_definite_tree_still_converges_to_exact_means() {
        // det J < 0, but a 2-node model is a tree: message passing terminates
        // with the exact solve even though variances lose meaning.
        let m = model(vec![1.0, 1.0], &[(0, 1, 2.0)], vec![1.0, 1.0]);
        let sol = gabp_solve(&m, &GabpConfig::default()).unwrap();
        assert!(sol.converged);
        let mu = dense_j(&m).solve(m.shift()).unwrap();
        for i in 0..2 {
            assert!((sol.mean[i] - mu[i]).abs() < 1e-10, "{} vs {}", sol.mean[i], mu[i]);
        }
        assert!(sol.variance.iter().all(|v| *v < 0.0));
    }

    #[test]
    fn strong_loopy_couplings_diverge_gracefully() {
        let m = model(
            vec![1.0, 1.0, 1.0],
            &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.9)],
            vec![1.0, 1.0, 1.0],
        );
        let sol = gabp_solve(&m, &GabpConfig::default()).unwrap();
        assert!(!sol.converged);
    }

    #[test]
    fn zero_diagonal_without_regularization_is_singular() {
        let m = model(vec![0.0, 1.0], &[(0, 1, 1.0)], vec![0.0, 1.0]);
        let err = gabp_solve(&m, &GabpConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NodeSingularity { node: 0, .. }));
    }

    #[test]
    fn model_validation_rejects_bad_shapes() {
        let off = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(GaussianModel::new(vec![1.0], off.clone(), vec![0.0]).is_err());
        assert!(GaussianModel::new(vec![1.0, 1.0], off.clone(), vec![0.0]).is_err());
        let asym = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert!(GaussianModel::new(vec![1.0, 1.0], asym, vec![0.0, 0.0]).is_err());
        let diag_entry = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(GaussianModel::new(vec![1.0, 1.0], diag_entry, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn joint_generator_model_layout() {
        let g =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 1, 1.0)]).unwrap();
        let y = [0.5, -0.25];
        let m = joint_generator_model(&g, &y, 0.25, true).unwrap();
        assert_eq!(m.n(), 4);
        assert_eq!(m.diag(), &[1.0, 1.0, 4.0, 4.0]);
        assert_eq!(m.shift(), &[0.0, 0.0, 2.0, -1.0]);
        // Decoding orientation negates the generator entries.
        assert_eq!(m.j_entry(0, 2), -1.0);
        assert_eq!(m.j_entry(1, 2), 1.0);
        assert_eq!(m.j_entry(1, 3), -1.0);
        assert_eq!(m.j_entry(0, 3), 0.0);
        let plain = joint_generator_model(&g, &y, 0.25, false).unwrap();
        assert_eq!(plain.j_entry(0, 2), 1.0);
    }

    #[test]
    fn check_observation_model_is_singular_until_regularized() {
        let h =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 0.5), (1, 1, 1.0)]).unwrap();
        let m = check_observation_model(&h, &[0.1, 0.2], 0.5).unwrap();
        assert_eq!(m.diag(), &[0.0, 0.0, 2.0, 2.0]);
        assert_eq!(m.shift(), &[0.0, 0.0, 0.2, 0.4]);
        // Slack node s couples to coordinate i with H_si.
        assert_eq!(m.j_entry(1, 2), 0.5);
        assert_eq!(m.j_entry(1, 3), 1.0);
        let err = gabp_solve(&m, &GabpConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NodeSingularity { .. }));
    }

    #[test]
    fn solver_exposes_messages_per_sweep() {
        let m = model(vec![2.0, 2.0], &[(0, 1, 0.5)], vec![1.0, 2.0]);
        let mut s = GabpSolver::new(&m);
        assert_eq!(s.message(0, 1), Some((0.0, 0.0)));
        s.step().unwrap();
        // alpha_{0->1} = -J01²/J00 = -0.125; beta_{0->1} = -J01·h0/J00 = -0.25.
        let (a, b) = s.message(0, 1).unwrap();
        assert!((a + 0.125).abs() < 1e-15);
        assert!((b + 0.25).abs() < 1e-15);
        assert_eq!(s.iterations(), 1);
    }
}
