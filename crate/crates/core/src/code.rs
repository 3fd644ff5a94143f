//! Lattice code construction, encoding, and matrix file I/O.
//!
//! Two code families are supported:
//!
//! * **Sparse parity-check codes** (`LatinSquareH`): the n×n check matrix `H`
//!   has a Latin-square sparsity pattern — the magnitudes in every row and
//!   every column are a permutation of one short generating sequence
//!   `h_1 ≥ h_2 ≥ … ≥ h_d > 0` — with independent random signs. The matrix is
//!   scaled so `|det H| = 1`, giving the code unit volume. Encoding solves
//!   `H x = b`.
//! * **Sparse generator codes** (`SparseG`): the n×n generator `G` has `d`
//!   entries of magnitude exactly 1 per row and column with random signs.
//!   Encoding is the sparse product `x = G b`.
//!
//! Construction draws `d` disjoint random permutations for the positions and
//! retries on collision; the retry budget is generous and exhaustion is
//! reported as an error rather than a panic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::seed;
use crate::sparse::SparseMatrix;

const CONSTRUCTION_ATTEMPTS: usize = 200;

/// Relative tolerance for Latin-square structure validation.
const LATIN_REL_TOL: f64 = 1e-9;

/// The role the stored matrix plays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    /// The matrix is a sparse parity check `H`; the generator is `H⁻¹`.
    LatinSquareH,
    /// The matrix is a sparse generator `G` with entries of magnitude 1.
    SparseG,
}

/// An n-dimensional lattice code with a sparse defining matrix.
#[derive(Clone, Debug)]
pub struct LatticeCode {
    kind: CodeKind,
    n: usize,
    degree: usize,
    /// Generating sequence of row/column magnitudes, descending. For
    /// `SparseG` this is all ones.
    seq: Vec<f64>,
    matrix: SparseMatrix,
}

impl LatticeCode {
    /// Builds a Latin-square parity-check code of dimension `n` from the
    /// generating sequence `seq` (must be positive and non-increasing),
    /// scaled to unit determinant magnitude.
    pub fn latin_square(n: usize, seq: &[f64], seed_value: u64) -> Result<Self> {
        validate_sequence(n, seq)?;
        let d = seq.len();
        let mut last_reason = String::from("no attempts made");
        for attempt in 0..CONSTRUCTION_ATTEMPTS {
            let rng_seed = seed::derive(seed_value, &[attempt as u64]);
            let triplets = match disjoint_permutation_triplets(n, seq, rng_seed) {
                Ok(t) => t,
                Err(reason) => {
                    last_reason = reason;
                    continue;
                }
            };
            let raw = SparseMatrix::from_triplets(n, n, &triplets)?;
            let dense = DenseMatrix::from_sparse(&raw);
            let (log_det, _) = match dense.log_abs_det() {
                Ok(v) => v,
                Err(_) => {
                    last_reason = "sampled check matrix is singular".into();
                    continue;
                }
            };
            let scale = (-log_det / n as f64).exp();
            let scaled: Vec<(usize, usize, f64)> =
                triplets.iter().map(|&(i, j, v)| (i, j, v * scale)).collect();
            let matrix = SparseMatrix::from_triplets(n, n, &scaled)?;
            let seq_scaled: Vec<f64> = seq.iter().map(|h| h * scale).collect();
            return Ok(LatticeCode {
                kind: CodeKind::LatinSquareH,
                n,
                degree: d,
                seq: seq_scaled,
                matrix,
            });
        }
        Err(Error::Construction { attempts: CONSTRUCTION_ATTEMPTS, reason: last_reason })
    }

    /// Builds a sparse generator code: `d` entries of magnitude 1 with random
    /// signs in every row and column, non-singular.
    pub fn bipolar_generator(n: usize, d: usize, seed_value: u64) -> Result<Self> {
        let seq = vec![1.0; d];
        validate_sequence(n, &seq)?;
        let mut last_reason = String::from("no attempts made");
        for attempt in 0..CONSTRUCTION_ATTEMPTS {
            let rng_seed = seed::derive(seed_value, &[attempt as u64]);
            let triplets = match disjoint_permutation_triplets(n, &seq, rng_seed) {
                Ok(t) => t,
                Err(reason) => {
                    last_reason = reason;
                    continue;
                }
            };
            let matrix = SparseMatrix::from_triplets(n, n, &triplets)?;
            if DenseMatrix::from_sparse(&matrix).log_abs_det().is_err() {
                last_reason = "sampled generator is singular".into();
                continue;
            }
            return Ok(LatticeCode { kind: CodeKind::SparseG, n, degree: d, seq, matrix });
        }
        Err(Error::Construction { attempts: CONSTRUCTION_ATTEMPTS, reason: last_reason })
    }

    /// Wraps an existing matrix, inferring and validating its role: a matrix
    /// whose entries all have magnitude exactly 1 is taken as a sparse
    /// generator; anything else must satisfy the Latin-square row/column
    /// structure of a parity check.
    pub fn from_matrix(matrix: SparseMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::InvalidArgument(format!(
                "code matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        let bipolar = matrix.iter().all(|(_, _, v)| v.abs() == 1.0);
        if bipolar {
            let d = matrix.row_degree(0);
            for i in 0..n {
                if matrix.row_degree(i) != d || matrix.col_degree(i) != d {
                    return Err(Error::InvalidArgument(format!(
                        "generator row/column {i} does not have constant degree {d}"
                    )));
                }
            }
            return Ok(LatticeCode {
                kind: CodeKind::SparseG,
                n,
                degree: d,
                seq: vec![1.0; d],
                matrix,
            });
        }
        let seq = validate_latin_structure(&matrix)?;
        let degree = seq.len();
        Ok(LatticeCode { kind: CodeKind::LatinSquareH, n, degree, seq, matrix })
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    /// Lattice dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row/column degree of the defining matrix.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Generating sequence of magnitudes (post scaling), descending.
    pub fn sequence(&self) -> &[f64] {
        &self.seq
    }

    /// The defining sparse matrix: `H` for parity-check codes, `G` for
    /// generator codes.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Log of `|det G|` for the code's generator.
    pub fn log_det_generator(&self) -> Result<f64> {
        let (log_det, _) = DenseMatrix::from_sparse(&self.matrix).log_abs_det()?;
        match self.kind {
            CodeKind::LatinSquareH => Ok(-log_det),
            CodeKind::SparseG => Ok(log_det),
        }
    }

    /// Prepares an encoder; parity-check codes factor `H` once so repeated
    /// encodes cost only a triangular solve.
    pub fn encoder(&self) -> Result<Encoder<'_>> {
        let lu = match self.kind {
            CodeKind::LatinSquareH => Some(DenseMatrix::from_sparse(&self.matrix).lu()?),
            CodeKind::SparseG => None,
        };
        Ok(Encoder { code: self, lu })
    }

    /// Encodes one integer vector. Prefer [`LatticeCode::encoder`] when
    /// encoding many vectors of a parity-check code.
    pub fn encode(&self, b: &[i64]) -> Result<Vec<f64>> {
        self.encoder()?.encode(b)
    }
}

/// Reusable encoder for a lattice code.
pub struct Encoder<'a> {
    code: &'a LatticeCode,
    lu: Option<Lu>,
}

impl Encoder<'_> {
    /// Maps integers `b` to the lattice point `x = G b`.
    pub fn encode(&self, b: &[i64]) -> Result<Vec<f64>> {
        if b.len() != self.code.n {
            return Err(Error::InvalidArgument(format!(
                "encode expects {} integers, got {}",
                self.code.n,
                b.len()
            )));
        }
        let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        match &self.lu {
            Some(lu) => lu.solve(&bf),
            None => self.code.matrix.matvec(&bf),
        }
    }
}

fn validate_sequence(n: usize, seq: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if seq.is_empty() {
        return Err(Error::InvalidArgument("generating sequence must be non-empty".into()));
    }
    if seq.len() > n {
        return Err(Error::InvalidArgument(format!("degree {} exceeds dimension {n}", seq.len())));
    }
    for w in seq.windows(2) {
        if w[1] > w[0] {
            return Err(Error::InvalidArgument(
                "generating sequence must be non-increasing".into(),
            ));
        }
    }
    if seq.iter().any(|&h| !h.is_finite() || h <= 0.0) {
        return Err(Error::InvalidArgument("generating sequence must be positive".into()));
    }
    Ok(())
}

/// Places `seq[t]` along `d` mutually disjoint random permutations with
/// independent random signs. Returns a collision description on failure so
/// the caller can retry with a fresh seed.
fn disjoint_permutation_triplets(
    n: usize,
    seq: &[f64],
    rng_seed: u64,
) -> std::result::Result<Vec<(usize, usize, f64)>, String> {
    let d = seq.len();
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut used = vec![false; n * n];
    let mut positions: Vec<(usize, usize, f64)> = Vec::with_capacity(n * d);
    let mut perm: Vec<usize> = (0..n).collect();
    for (t, &h) in seq.iter().enumerate() {
        for i in 0..n {
            perm[i] = i;
        }
        // Fisher-Yates, fixed algorithm for reproducibility.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        for (i, &j) in perm.iter().enumerate() {
            if used[i * n + j] {
                return Err(format!("permutation {t} collides at ({i}, {j})"));
            }
            used[i * n + j] = true;
            positions.push((i, j, h));
        }
    }
    positions.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let triplets = positions
        .into_iter()
        .map(|(i, j, h)| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (i, j, sign * h)
        })
        .collect();
    Ok(triplets)
}

/// Checks that every row and column's magnitudes form the same descending
/// multiset and returns that generating sequence.
fn validate_latin_structure(matrix: &SparseMatrix) -> Result<Vec<f64>> {
    let n = matrix.rows();
    let d = matrix.row_degree(0);
    if d == 0 {
        return Err(Error::InvalidArgument("row 0 of check matrix is empty".into()));
    }
    let mut seq: Vec<f64> = matrix.row(0).map(|(_, v)| v.abs()).collect();
    seq.sort_by(|a, b| b.total_cmp(a));

    let matches_seq = |mags: &mut Vec<f64>| -> bool {
        if mags.len() != d {
            return false;
        }
        mags.sort_by(|a, b| b.total_cmp(a));
        mags.iter().zip(seq.iter()).all(|(a, b)| (a - b).abs() <= LATIN_REL_TOL * b.abs())
    };

    for i in 0..n {
        let mut row_mags: Vec<f64> = matrix.row(i).map(|(_, v)| v.abs()).collect();
        if !matches_seq(&mut row_mags) {
            return Err(Error::InvalidArgument(format!(
                "row {i} magnitudes do not match the generating sequence"
            )));
        }
        let mut col_mags: Vec<f64> = matrix.col(i).map(|(_, v)| v.abs()).collect();
        if !matches_seq(&mut col_mags) {
            return Err(Error::InvalidArgument(format!(
                "column {i} magnitudes do not match the generating sequence"
            )));
        }
    }
    Ok(seq)
}

/// Writes a sparse matrix in the plain-text interchange format:
/// a `rows cols nnz` header followed by one `row col value` triplet per line
/// (0-based indices, full-precision scientific notation).
pub fn write_matrix<W: std::io::Write>(matrix: &SparseMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", matrix.rows(), matrix.cols(), matrix.nnz())?;
    for (i, j, v) in matrix.iter() {
        writeln!(w, "{} {} {:.16e}", i, j, v)?;
    }
    Ok(())
}

/// Reads a sparse matrix written by [`write_matrix`].
pub fn read_matrix<R: std::io::BufRead>(r: R) -> Result<SparseMatrix> {
    let mut lines = r.lines().enumerate();
    let (line_no, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty matrix file".into() })
        .map(|(i, l)| (i + 1, l))?;
    let header = header?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected 'rows cols nnz' header, got '{header}'"),
        });
    }
    let parse_usize = |s: &str, line: usize| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse { line, message: format!("bad integer '{s}'") })
    };
    let rows = parse_usize(parts[0], line_no)?;
    let cols = parse_usize(parts[1], line_no)?;
    let nnz = parse_usize(parts[2], line_no)?;

    let mut triplets = Vec::with_capacity(nnz);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 'row col value', got '{line}'"),
            });
        }
        let i = parse_usize(parts[0], line_no)?;
        let j = parse_usize(parts[1], line_no)?;
        let v: f64 = parts[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad value '{}'", parts[2]),
        })?;
        triplets.push((i, j, v));
    }
    if triplets.len() != nnz {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares {nnz} entries, file has {}", triplets.len()),
        });
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

/// Saves a code's defining matrix to a file.
pub fn save_code(code: &LatticeCode, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix(code.matrix(), std::io::BufWriter::new(file))
}

/// Loads a code from a matrix file, inferring its kind via
/// [`LatticeCode::from_matrix`].
pub fn load_code(path: &std::path::Path) -> Result<LatticeCode> {
    let file = std::fs::File::open(path)?;
    let matrix = read_matrix(std::io::BufReader::new(file))?;
    LatticeCode::from_matrix(matrix)
}
