//! Convergence certificates for lattice decoding.
//!
//! Two families of sufficient conditions are implemented. The four legacy
//! lattice-code conditions inspect the check matrix itself: unit determinant,
//! the squared-tail ratio of the generating sequence, and two spectral-radius
//! bounds on matrices derived from the placement of the largest entries. The
//! two Gaussian-model conditions — walk-summability and diagonal dominance —
//! apply to any information-form model, in particular the joint
//! check/observation model, whose zero diagonal block makes both fail until a
//! remedy is applied: diagonal regularization, row permutation, or
//! preconditioning through `HHᵀ`.
//!
//! Every verdict ships with the numeric witness that justified it, and the
//! report renders as one `name=pass|fail witness=<value>` line per condition.

use crate::code::{CodeKind, LatticeCode};
use crate::error::{Error, Result};
use crate::gabp::GaussianModel;
use crate::linalg::DenseMatrix;
use crate::seed::derive;
use crate::sparse::SparseMatrix;

/// Default relative tolerance for [`spectral_radius`].
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;
/// Default diagonal regularization strength for [`regularize_j`].
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Unit-determinant tolerance for the first lattice condition.
pub const DET_TOL: f64 = 1e-6;

/// Relative tolerance when matching a matrix entry to the top sequence value.
const TOP_MATCH_REL_TOL: f64 = 1e-9;
const POWER_ITERATION_CAP: usize = 20_000;
const POWER_STARTS: usize = 3;
const POWER_SEED: u64 = 0x7354_11C3_9D0A_22B5;

/// One verdict: pass/fail plus the number that decided it.
#[derive(Clone, Debug)]
pub struct Condition {
    pub pass: bool,
    pub witness: f64,
    /// Extra context when the witness alone does not tell the story
    /// (e.g. "zero diagonal" when a spectral radius is undefined).
    pub note: Option<String>,
}

impl Condition {
    fn passing(witness: f64) -> Self {
        Condition { pass: true, witness, note: None }
    }

    fn failing(witness: f64) -> Self {
        Condition { pass: false, witness, note: None }
    }

    fn failing_because(witness: f64, note: impl Into<String>) -> Self {
        Condition { pass: false, witness, note: Some(note.into()) }
    }

    fn from_radius(rho: f64) -> Self {
        if rho < 1.0 {
            Condition::passing(rho)
        } else {
            Condition::failing(rho)
        }
    }

    fn render(&self, name: &str, out: &mut String) {
        out.push_str(name);
        out.push('=');
        out.push_str(if self.pass { "pass" } else { "fail" });
        out.push_str(" witness=");
        out.push_str(&display_witness(self.witness));
        if let Some(note) = &self.note {
            out.push_str(" note=");
            out.push_str(note);
        }
        out.push('\n');
    }
}

/// Witness formatting for the text report: rounded to 12 decimal places so
/// last-bit noise does not leak into otherwise-clean values (the full
/// precision stays available on the struct).
fn display_witness(w: f64) -> String {
    if w.is_finite() && w.abs() < 1e15 {
        format!("{}", (w * 1e12).round() / 1e12)
    } else {
        format!("{w}")
    }
}

/// Which workaround produced the model a report describes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Remedy {
    #[default]
    None,
    /// Zero diagonal entries replaced by a small ε.
    Epsilon,
    /// Rows permuted before applying the conditions.
    Permutation,
    /// Model rebuilt on `HHᵀ` structure.
    Hht,
}

impl Remedy {
    pub fn label(&self) -> &'static str {
        match self {
            Remedy::None => "none",
            Remedy::Epsilon => "epsilon",
            Remedy::Permutation => "permutation",
            Remedy::Hht => "hht",
        }
    }
}

/// Collected certificate verdicts. Fields are `None` when the corresponding
/// family was not evaluated (e.g. Gaussian-model conditions on a plain code
/// check).
#[derive(Clone, Debug, Default)]
pub struct ConvergenceReport {
    pub ldlc_i: Option<Condition>,
    pub ldlc_ii: Option<Condition>,
    pub ldlc_iii: Option<Condition>,
    pub ldlc_iv: Option<Condition>,
    pub gabp_walk_summable: Option<Condition>,
    /// The same condition evaluated through the literally-printed formula
    /// `ρ(I − |D^{-1/2} J D^{-1/2}|)`; kept separate so a reader can verify
    /// the two agree (they provably do — negating a matrix with zero diagonal
    /// flips eigenvalue signs, leaving the spectral radius unchanged).
    pub gabp_walk_summable_printed: Option<Condition>,
    pub gabp_diag_dominant: Option<Condition>,
    pub remedy_used: Remedy,
}

impl ConvergenceReport {
    /// Line-oriented rendering: `name=pass|fail witness=<value>` per present
    /// condition, then `remedy_used=<label>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let named: [(&str, &Option<Condition>); 7] = [
            ("ldlc_i", &self.ldlc_i),
            ("ldlc_ii", &self.ldlc_ii),
            ("ldlc_iii", &self.ldlc_iii),
            ("ldlc_iv", &self.ldlc_iv),
            ("gabp_walk_summable", &self.gabp_walk_summable),
            ("gabp_walk_summable_printed", &self.gabp_walk_summable_printed),
            ("gabp_diag_dominant", &self.gabp_diag_dominant),
        ];
        for (name, cond) in named {
            if let Some(c) = cond {
                c.render(name, &mut out);
            }
        }
        out.push_str("remedy_used=");
        out.push_str(self.remedy_used.label());
        out.push('\n');
        out
    }
}

/// Spectral radius of `|M|` (entrywise absolute value) by shifted power
/// iteration.
///
/// The shift `δ = max row sum` makes the iteration aperiodic, so alternating
/// structures (e.g. bipartite patterns) converge; the Perron root of
/// `|M| + δI` is exactly `ρ(|M|) + δ`, so the shift is subtracted back out
/// losslessly. Nilpotent patterns are detected exactly (a nonnegative matrix
/// power hits the zero vector without cancellation) and report 0. Several
/// fixed deterministic starts are run and must all converge to `tol`;
/// otherwise an estimation error carries the best bound found.
pub fn spectral_radius(m: &SparseMatrix, tol: f64) -> Result<f64> {
    if m.rows() != m.cols() {
        return Err(Error::InvalidArgument(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.rows();
    let abs_triplets: Vec<(usize, usize, f64)> =
        m.iter().map(|(i, j, v)| (i, j, v.abs())).collect();
    if abs_triplets.is_empty() {
        return Ok(0.0);
    }
    let a = SparseMatrix::from_triplets(n, n, &abs_triplets)?;

    let mut row_sums = vec![0.0f64; n];
    for (i, _, v) in a.iter() {
        row_sums[i] += v;
    }
    let delta = row_sums.iter().cloned().fold(0.0f64, f64::max);
    if delta == 0.0 {
        return Ok(0.0);
    }

    // Nilpotency sniff: for a nonnegative matrix, A^t·1 reaches exactly zero
    // within n steps iff A is nilpotent (no cancellation can occur).
    let mut v = vec![1.0f64; n];
    for _ in 0..=n.min(256) {
        v = a.matvec(&v)?;
        let peak = v.iter().cloned().fold(0.0f64, f64::max);
        if peak == 0.0 {
            return Ok(0.0);
        }
        for x in &mut v {
            *x /= peak;
        }
    }

    let mut best = 0.0f64;
    for start in 0..POWER_STARTS {
        let mut v: Vec<f64> = if start == 0 {
            vec![1.0; n]
        } else {
            (0..n)
                .map(|i| {
                    let bits = derive(POWER_SEED, &[start as u64, i as u64]);
                    0.5 + 0.5 * (bits as f64 / u64::MAX as f64)
                })
                .collect()
        };
        normalize(&mut v);
        let mut prev = f64::NAN;
        let mut stable = 0usize;
        let mut converged = false;
        // Transient iterates can overshoot the radius on non-normal matrices
        // (the vector norm is bounded by the largest singular value, not the
        // spectral radius), so only a converged estimate may enter `best`;
        // the running peak serves purely as error context.
        let mut peak = 0.0f64;
        for _ in 0..POWER_ITERATION_CAP {
            let mut w = a.matvec(&v)?;
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi += delta * *vi;
            }
            let lambda = norm(&w);
            if lambda == 0.0 {
                // Can only happen before the shift dominates; treat as zero.
                return Ok(0.0);
            }
            for x in &mut w {
                *x /= lambda;
            }
            v = w;
            if (lambda - prev).abs() <= 0.25 * tol * lambda.max(1e-300) {
                stable += 1;
                if stable >= 5 {
                    best = best.max(lambda - delta);
                    converged = true;
                    break;
                }
            } else {
                stable = 0;
            }
            prev = lambda;
            peak = peak.max(lambda - delta);
        }
        if !converged {
            return Err(Error::Estimation {
                context: "spectral radius power iteration".into(),
                best: best.max(peak),
            });
        }
    }
    Ok(best.max(0.0))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let s = norm(v);
    if s > 0.0 {
        for x in v {
            *x /= s;
        }
    }
}

/// The four legacy lattice conditions, evaluated on a Latin-square check
/// matrix. Returns a partial report (only the `ldlc_*` fields filled).
pub fn check_ldlc_conditions(code: &LatticeCode) -> Result<ConvergenceReport> {
    if code.kind() != CodeKind::LatinSquareH {
        return Err(Error::InvalidArgument(
            "lattice conditions need a Latin-square check matrix with a generating sequence".into(),
        ));
    }
    let h = code.matrix();
    let seq = code.sequence();
    let n = code.n();
    let h1 = seq[0];

    // I: |det H| = 1.
    let ldlc_i = match DenseMatrix::from_sparse(h).lu() {
        Ok(lu) => {
            let det = lu.log_abs_det.exp();
            if (det - 1.0).abs() <= DET_TOL {
                Condition::passing(det)
            } else {
                Condition::failing(det)
            }
        }
        Err(_) => Condition::failing_because(0.0, "matrix is singular"),
    };

    // II: squared tail ratio of the generating sequence.
    let alpha = seq[1..].iter().map(|v| v * v).sum::<f64>() / (h1 * h1);
    let ldlc_ii = if alpha <= 1.0 { Condition::passing(alpha) } else { Condition::failing(alpha) };

    // III: ratio matrix F over column pairs sharing a top-entry row.
    let mut f_entries: std::collections::HashMap<(usize, usize), f64> =
        std::collections::HashMap::new();
    for r in 0..n {
        let row: Vec<(usize, f64)> = h.row(r).collect();
        for &(l, vl) in &row {
            if !matches_top(vl, h1) {
                continue;
            }
            for &(k, vk) in &row {
                if k == l || vk == 0.0 {
                    continue;
                }
                let ratio = vk.abs() / vl.abs();
                f_entries.entry((k, l)).and_modify(|cur| *cur = cur.max(ratio)).or_insert(ratio);
            }
        }
    }
    let f_triplets: Vec<(usize, usize, f64)> =
        f_entries.into_iter().map(|((k, l), v)| (k, l, v)).collect();
    let f = SparseMatrix::from_triplets(n, n, &f_triplets).unwrap_or_else(|_| {
        // Only reachable when there are no entries at all (d = 1 codes).
        SparseMatrix::from_triplets(n, n, &[]).expect("empty ratio matrix")
    });
    let ldlc_iii = match spectral_radius(&f, DEFAULT_SPECTRAL_TOL) {
        Ok(rho) => Condition::from_radius(rho),
        Err(Error::Estimation { best, .. }) => {
            Condition::failing_because(best, "spectral estimate did not converge; lower bound")
        }
        Err(e) => return Err(e),
    };

    // IV: permute top entries onto the diagonal, divide rows by the signed
    // diagonal, zero it, and bound the spectral radius.
    let ldlc_iv = match top_entry_matching(h, h1) {
        Some(row_to_col) => {
            let mut trip = Vec::new();
            for r in 0..n {
                let c = row_to_col[r];
                let diag = h.get(r, c).expect("matched entry exists");
                for (k, v) in h.row(r) {
                    if k != c {
                        trip.push((c, k, v / diag));
                    }
                }
            }
            let h_tilde = SparseMatrix::from_triplets(n, n, &trip)
                .expect("permuted ratio matrix is well formed");
            match spectral_radius(&h_tilde, DEFAULT_SPECTRAL_TOL) {
                Ok(rho) => Condition::from_radius(rho),
                Err(Error::Estimation { best, .. }) => Condition::failing_because(
                    best,
                    "spectral estimate did not converge; lower bound",
                ),
                Err(e) => return Err(e),
            }
        }
        None => Condition::failing_because(
            f64::NAN,
            "no row permutation places the largest entries on the diagonal",
        ),
    };

    Ok(ConvergenceReport {
        ldlc_i: Some(ldlc_i),
        ldlc_ii: Some(ldlc_ii),
        ldlc_iii: Some(ldlc_iii),
        ldlc_iv: Some(ldlc_iv),
        ..ConvergenceReport::default()
    })
}

fn matches_top(value: f64, h1: f64) -> bool {
    (value.abs() - h1).abs() <= TOP_MATCH_REL_TOL * h1
}

/// Perfect matching of rows to columns through top-magnitude entries, by
/// greedy assignment plus augmenting paths (Kuhn's algorithm).
fn top_entry_matching(h: &SparseMatrix, h1: f64) -> Option<Vec<usize>> {
    let n = h.rows();
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|r| h.row(r).filter(|&(_, v)| matches_top(v, h1)).map(|(c, _)| c).collect())
        .collect();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    fn try_assign(
        r: usize,
        candidates: &[Vec<usize>],
        col_owner: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &c in &candidates[r] {
            if visited[c] {
                continue;
            }
            visited[c] = true;
            if col_owner[c].is_none()
                || try_assign(col_owner[c].unwrap(), candidates, col_owner, visited)
            {
                col_owner[c] = Some(r);
                return true;
            }
        }
        false
    }
    for r in 0..n {
        let mut visited = vec![false; n];
        if !try_assign(r, &candidates, &mut col_owner, &mut visited) {
            return None;
        }
    }
    let mut row_to_col = vec![0usize; n];
    for (c, owner) in col_owner.iter().enumerate() {
        row_to_col[(*owner)?] = c;
    }
    Some(row_to_col)
}

/// Walk-summability: spectral radius of the normalized absolute off-diagonal
/// part `|D^{-1/2} J D^{-1/2} − I|` strictly below one.
///
/// Models with a zero or negative diagonal entry fail outright (the
/// normalization is undefined there) — that is the expected verdict for the
/// raw joint check/observation model and the cue to regularize.
pub fn walk_summable(model: &GaussianModel) -> Condition {
    normalized_radius(model, false)
}

/// The same condition computed through the printed formula
/// `ρ(I − |D^{-1/2} J D^{-1/2}|)`; always equals [`walk_summable`]'s witness.
pub fn walk_summable_printed(model: &GaussianModel) -> Condition {
    normalized_radius(model, true)
}

fn normalized_radius(model: &GaussianModel, printed_form: bool) -> Condition {
    let diag = model.diag();
    if let Some((i, &d)) = diag.iter().enumerate().find(|&(_, &d)| d <= 0.0) {
        return Condition::failing_because(
            f64::INFINITY,
            format!("nonpositive diagonal {d} at node {i}; regularize first"),
        );
    }
    let n = model.n();
    let sign = if printed_form { -1.0 } else { 1.0 };
    let trip: Vec<(usize, usize, f64)> = model
        .offdiag()
        .iter()
        .map(|(i, j, v)| (i, j, sign * v.abs() / (diag[i] * diag[j]).sqrt()))
        .collect();
    if trip.is_empty() {
        return Condition::passing(0.0);
    }
    let normalized = match SparseMatrix::from_triplets(n, n, &trip) {
        Ok(m) => m,
        Err(_) => {
            return Condition::failing_because(
                f64::INFINITY,
                "normalization produced non-finite entries",
            )
        }
    };
    match spectral_radius(&normalized, DEFAULT_SPECTRAL_TOL) {
        Ok(rho) => Condition::from_radius(rho),
        Err(Error::Estimation { best, .. }) => {
            Condition::failing_because(best, "spectral estimate did not converge; lower bound")
        }
        Err(_) => Condition::failing_because(f64::INFINITY, "spectral estimate failed"),
    }
}

/// Weak diagonal dominance: `|J_ii| ≥ Σ_{j≠i} |J_ij|` for every row. The
/// witness is the worst row margin (negative when the condition fails).
pub fn diag_dominant(model: &GaussianModel) -> Condition {
    let mut off_sums = vec![0.0f64; model.n()];
    for (i, _, v) in model.offdiag().iter() {
        off_sums[i] += v.abs();
    }
    let margin = model
        .diag()
        .iter()
        .zip(off_sums.iter())
        .map(|(d, s)| d.abs() - s)
        .fold(f64::INFINITY, f64::min);
    if margin >= 0.0 {
        Condition::passing(margin)
    } else {
        Condition::failing(margin)
    }
}

/// Both Gaussian-model conditions bundled into a partial report.
pub fn check_gabp_conditions(model: &GaussianModel) -> ConvergenceReport {
    ConvergenceReport {
        gabp_walk_summable: Some(walk_summable(model)),
        gabp_walk_summable_printed: Some(walk_summable_printed(model)),
        gabp_diag_dominant: Some(diag_dominant(model)),
        ..ConvergenceReport::default()
    }
}

/// Remedy 1: replace exactly-zero diagonal entries by `epsilon`, leaving the
/// rest of the model untouched. The approximation sharpens as ε shrinks, at
/// the price of worse conditioning.
pub fn regularize_j(model: &GaussianModel, epsilon: f64) -> Result<GaussianModel> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "regularization strength must be positive, got {epsilon}"
        )));
    }
    let diag: Vec<f64> = model.diag().iter().map(|&d| if d == 0.0 { epsilon } else { d }).collect();
    GaussianModel::new(diag, model.offdiag().clone(), model.shift().to_vec())
}

/// Remedy 3: a preconditioned model on `HHᵀ` structure.
#[derive(Clone, Debug)]
pub struct Preconditioned {
    pub model: GaussianModel,
    /// `nnz(HHᵀ) / nnz(H)`.
    pub fill_in_ratio: f64,
    /// Set when the fill-in ratio exceeds 3 — the sparsity advantage is gone.
    pub dense_warning: bool,
}

/// Builds the preconditioned model `J = HHᵀ + σ⁻²I`, `h = H·y`. The diagonal
/// is guaranteed non-zero, so the Gaussian-model conditions apply directly.
///
/// `H` may be rectangular (rows × cols) with full row rank; `y` has one entry
/// per column.
pub fn precondition_hht(h: &SparseMatrix, y: &[f64], sigma2: f64) -> Result<Preconditioned> {
    if y.len() != h.cols() {
        return Err(Error::InvalidArgument(format!(
            "observation length {} does not match {} columns",
            y.len(),
            h.cols()
        )));
    }
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let hht = h.matmul(&h.transpose())?;
    let dense = DenseMatrix::from_sparse(&hht);
    if dense.lu().is_err() {
        return Err(Error::Singular("check matrix is rank deficient".into()));
    }
    let m = hht.rows();
    let mut diag = vec![1.0 / sigma2; m];
    let mut offdiag_trip = Vec::new();
    for (i, j, v) in hht.iter() {
        if i == j {
            diag[i] += v;
        } else {
            offdiag_trip.push((i, j, v));
        }
    }
    let offdiag = SparseMatrix::from_triplets(m, m, &offdiag_trip)?;
    let shift = h.matvec(y)?;
    let model = GaussianModel::new(diag, offdiag, shift)?;
    let nnz_h = h.iter().count().max(1);
    let fill_in_ratio = hht.iter().count() as f64 / nnz_h as f64;
    Ok(Preconditioned { model, fill_in_ratio, dense_warning: fill_in_ratio > 3.0 })
}
