//! Seeded Monte-Carlo symbol-error-rate sweeps and cost profiling.
//!
//! A sweep fixes a code and a decoder, walks a list of noise levels given as
//! distance from capacity in dB, and runs independent trials at each level:
//! draw bipolar symbols, encode, add noise, decode, count symbol errors.
//! Every random draw derives its seed from `(base_seed, trial index,
//! purpose)`, so results are bit-reproducible and independent of trial
//! execution order — running with a thread pool changes nothing but
//! wall-clock time. The noise level deliberately stays out of the key:
//! each trial reuses one message and one noise direction across all sweep
//! points (common random numbers), so a trial flips from failure to success
//! as its noise is scaled down and the reported error curve falls
//! monotonically with dB instead of jittering by one-in-a-thousand
//! resampling luck at low error rates. Two sweeps sharing a `base_seed`
//! are paired draw-for-draw, which makes decoder comparisons differences
//! of matched trials rather than of independent experiments.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::channel::{sigma2_from_db, sigma2_max, transmit};
use crate::code::{CodeKind, Encoder, LatticeCode};
use crate::decoder::sparse_g::{decode_sparse_g, gabp_relaxed_decode, RelaxedPrior};
use crate::decoder::{factor_graph::ldlc_decode, DecoderConfig};
use crate::error::{Error, Result};
use crate::gabp::GabpConfig;
use crate::seed::derive;

/// Which decoding algorithm a sweep exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    /// Factor-graph decoder on a Latin-square check matrix.
    Ldlc,
    /// Mixture-prior pairwise decoder on a sparse generator.
    Nbp,
    /// Single-Gaussian relaxation baseline on a sparse generator.
    GabpRelaxed,
}

impl DecoderKind {
    pub fn label(&self) -> &'static str {
        match self {
            DecoderKind::Ldlc => "ldlc",
            DecoderKind::Nbp => "nbp",
            DecoderKind::GabpRelaxed => "gabp-relaxed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ldlc" => Ok(DecoderKind::Ldlc),
            "nbp" => Ok(DecoderKind::Nbp),
            "gabp-relaxed" => Ok(DecoderKind::GabpRelaxed),
            other => Err(Error::InvalidArgument(format!(
                "unknown decoder '{other}' (expected ldlc, nbp, or gabp-relaxed)"
            ))),
        }
    }

    fn compatible_with(&self, kind: CodeKind) -> bool {
        match self {
            DecoderKind::Ldlc => kind == CodeKind::LatinSquareH,
            DecoderKind::Nbp | DecoderKind::GabpRelaxed => kind == CodeKind::SparseG,
        }
    }
}

/// Everything a sweep needs; see module docs for the seeding contract.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub code: LatticeCode,
    pub decoder: DecoderKind,
    /// Distances from capacity in dB; sorted ascending before running.
    pub db_points: Vec<f64>,
    /// Trials per dB point.
    pub trials: usize,
    pub base_seed: u64,
    pub config: DecoderConfig,
    /// Symbol prior for the sparse-generator decoders; also fixes the
    /// constellation that trial symbols are drawn from.
    pub prior: RelaxedPrior,
    /// `Some(k)` runs trials on a pool of `k` threads; `None` stays serial.
    pub parallelism: Option<usize>,
}

impl SweepSpec {
    pub fn new(
        code: LatticeCode,
        decoder: DecoderKind,
        db_points: Vec<f64>,
        trials: usize,
    ) -> Self {
        SweepSpec {
            code,
            decoder,
            db_points,
            trials,
            base_seed: 1,
            config: DecoderConfig::default(),
            prior: RelaxedPrior::bipolar(),
            parallelism: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.db_points.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one dB point".into()));
        }
        if self.db_points.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("dB points must be finite".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("sweep needs at least one trial".into()));
        }
        if self.parallelism == Some(0) {
            return Err(Error::InvalidArgument("parallelism must be at least 1".into()));
        }
        if !self.decoder.compatible_with(self.code.kind()) {
            return Err(Error::InvalidArgument(format!(
                "decoder '{}' does not apply to this code kind",
                self.decoder.label()
            )));
        }
        self.config.validate()
    }
}

/// Aggregated outcome of one dB point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointReport {
    pub db: f64,
    pub sigma2: f64,
    pub symbols: u64,
    pub errors: u64,
    pub mean_iterations: f64,
    pub convergence_rate: f64,
    /// Wall-clock seconds; excluded from determinism guarantees.
    pub seconds: f64,
}

impl PointReport {
    /// Symbol error rate, exactly `errors / symbols`.
    pub fn ser(&self) -> f64 {
        self.errors as f64 / self.symbols as f64
    }
}

/// One row per dB point, ascending in dB.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub points: Vec<PointReport>,
}

struct TrialOutcome {
    errors: u64,
    iterations: usize,
    converged: bool,
}

fn run_trial(
    spec: &SweepSpec,
    encoder: &Encoder<'_>,
    sigma2: f64,
    point: usize,
    trial: usize,
) -> TrialOutcome {
    let n = spec.code.n();
    let centers = spec.prior.centers();
    let mut rng =
        ChaCha12Rng::seed_from_u64(derive(spec.base_seed, &[point as u64, trial as u64, 0]));
    let b: Vec<i64> = if centers.len() == 2 {
        (0..n).map(|_| if rng.random::<bool>() { centers[1] } else { centers[0] }).collect()
    } else {
        (0..n).map(|_| centers[rng.random_range(0..centers.len())]).collect()
    };
    let noise_seed = derive(spec.base_seed, &[point as u64, trial as u64, 1]);

    let decoded =
        encoder.encode(&b).and_then(|x| transmit(&x, sigma2, noise_seed)).and_then(|y| match spec
            .decoder
        {
            DecoderKind::Ldlc => ldlc_decode(spec.code.matrix(), &y, sigma2, &spec.config),
            DecoderKind::Nbp => {
                decode_sparse_g(spec.code.matrix(), &y, sigma2, &spec.prior, &spec.config)
            }
            DecoderKind::GabpRelaxed => {
                let gabp = GabpConfig {
                    max_iterations: spec.config.max_iterations,
                    ..GabpConfig::default()
                };
                gabp_relaxed_decode(spec.code.matrix(), &y, sigma2, &spec.prior, &gabp)
            }
        });
    match decoded {
        Ok(result) => TrialOutcome {
            errors: result.b_hat.iter().zip(b.iter()).filter(|(a, b)| a != b).count() as u64,
            iterations: result.iterations,
            converged: result.converged,
        },
        // A numerically dead trial counts as a full block error; keeping it
        // in the tally (rather than aborting the sweep) preserves
        // determinism and honest error accounting.
        Err(_) => TrialOutcome {
            errors: n as u64,
            iterations: spec.config.max_iterations,
            converged: false,
        },
    }
}

/// Runs the sweep. Points are processed in ascending dB order; trials are
/// independent and may run on a thread pool without changing any reported
/// number except `seconds`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SimulationReport> {
    spec.validate()?;
    let mut dbs = spec.db_points.clone();
    dbs.sort_by(f64::total_cmp);
    let s2_max = sigma2_max(spec.code.log_det_generator()?, spec.code.n());
    let encoder = spec.code.encoder()?;
    let pool = match spec.parallelism {
        Some(k) if k > 1 => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?,
        ),
        _ => None,
    };

    let mut points = Vec::with_capacity(dbs.len());
    for (pi, &db) in dbs.iter().enumerate() {
        let sigma2 = sigma2_from_db(s2_max, db);
        let started = Instant::now();
        let outcomes: Vec<TrialOutcome> = match &pool {
            Some(pool) => pool.install(|| {
                (0..spec.trials)
                    .into_par_iter()
                    .map(|t| run_trial(spec, &encoder, sigma2, pi, t))
                    .collect()
            }),
            None => (0..spec.trials).map(|t| run_trial(spec, &encoder, sigma2, pi, t)).collect(),
        };
        let seconds = started.elapsed().as_secs_f64();
        let errors: u64 = outcomes.iter().map(|o| o.errors).sum();
        let iters: usize = outcomes.iter().map(|o| o.iterations).sum();
        let converged = outcomes.iter().filter(|o| o.converged).count();
        points.push(PointReport {
            db,
            sigma2,
            symbols: (spec.code.n() * spec.trials) as u64,
            errors,
            mean_iterations: iters as f64 / spec.trials as f64,
            convergence_rate: converged as f64 / spec.trials as f64,
            seconds,
        });
    }
    Ok(SimulationReport { points })
}

pub const CSV_HEADER: &str = "db,sigma2,symbols,errors,ser,mean_iters,conv_rate,seconds";

/// Renders the report as CSV: fixed header, one row per point, floats with
/// ten significant digits. Identical reports render byte-identically.
pub fn emit_csv(report: &SimulationReport) -> String {
    let mut out = String::with_capacity(64 * (report.points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &report.points {
        out.push_str(&format!(
            "{:.9e},{:.9e},{},{},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            p.db,
            p.sigma2,
            p.symbols,
            p.errors,
            p.ser(),
            p.mean_iterations,
            p.convergence_rate,
            p.seconds
        ));
    }
    out
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse { line, message: format!("bad {what} value '{field}'") })
}

/// Parses CSV produced by [`emit_csv`], validating the header, the field
/// count, and that the `ser` column equals `errors/symbols` as printed.
pub fn parse_csv(text: &str) -> Result<SimulationReport> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse { line: 1, message: format!("unexpected header '{header}'") })
        }
        None => return Err(Error::Parse { line: 1, message: "empty input".into() }),
    }
    let mut points = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let point = PointReport {
            db: parse_field(fields[0], line, "db")?,
            sigma2: parse_field(fields[1], line, "sigma2")?,
            symbols: parse_field(fields[2], line, "symbols")?,
            errors: parse_field(fields[3], line, "errors")?,
            mean_iterations: parse_field(fields[5], line, "mean_iters")?,
            convergence_rate: parse_field(fields[6], line, "conv_rate")?,
            seconds: parse_field(fields[7], line, "seconds")?,
        };
        let expected_ser = format!("{:.9e}", point.ser());
        if fields[4] != expected_ser {
            return Err(Error::Parse {
                line,
                message: format!(
                    "ser column '{}' is not errors/symbols ({expected_ser})",
                    fields[4]
                ),
            });
        }
        points.push(point);
    }
    Ok(SimulationReport { points })
}

/// Asymptotic cost classes plus a measured encode time for one instance.
#[derive(Clone, Debug)]
pub struct CostProfile {
    pub decoder: DecoderKind,
    /// One-time setup (building an inverse/factorization).
    pub init_class: &'static str,
    /// Mapping symbols to a lattice point.
    pub encode_class: &'static str,
    /// Work after message passing ends.
    pub post_class: &'static str,
    /// Multiply-adds per encode on this instance.
    pub encode_madds: usize,
    /// Measured seconds per encode on this instance.
    pub encode_seconds: f64,
}

/// Profiles encode cost for a code/decoder pairing. The check-matrix path
/// pays a one-time O(n³) factorization and O(n²) per encode; the sparse
/// generator needs no setup and touches each non-zero once per encode.
pub fn cost_profile(code: &LatticeCode, decoder: DecoderKind) -> Result<CostProfile> {
    if !decoder.compatible_with(code.kind()) {
        return Err(Error::InvalidArgument(format!(
            "decoder '{}' does not apply to this code kind",
            decoder.label()
        )));
    }
    let n = code.n();
    let (init_class, encode_class, post_class, encode_madds) = match decoder {
        DecoderKind::Ldlc => ("O(n^3)", "O(n^2)", "O(n*d)", n * n),
        DecoderKind::Nbp | DecoderKind::GabpRelaxed => {
            ("none", "O(n*d)", "none", code.matrix().iter().count())
        }
    };
    let encoder = code.encoder()?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive(0xC0_57_B0_07, &[n as u64]));
    let b: Vec<i64> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    std::hint::black_box(encoder.encode(&b)?); // warm-up
    const REPS: u32 = 16;
    let started = Instant::now();
    for _ in 0..REPS {
        std::hint::black_box(encoder.encode(&b)?);
    }
    let encode_seconds = started.elapsed().as_secs_f64() / REPS as f64;
    Ok(CostProfile { decoder, init_class, encode_class, post_class, encode_madds, encode_seconds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_latin_spec(db: Vec<f64>, trials: usize) -> SweepSpec {
        let code = LatticeCode::latin_square(12, &[1.0, 0.8, 0.5], 77).unwrap();
        SweepSpec::new(code, DecoderKind::Ldlc, db, trials)
    }

    #[test]
    fn near_noiseless_sweep_has_no_errors() {
        let report = run_sweep(&small_latin_spec(vec![60.0], 5)).unwrap();
        assert_eq!(report.points.len(), 1);
        let p = &report.points[0];
        assert_eq!(p.errors, 0);
        assert_eq!(p.symbols, 60);
        assert_eq!(p.convergence_rate, 1.0);
    }

    #[test]
    fn repeated_runs_are_identical_apart_from_wall_clock() {
        let spec = small_latin_spec(vec![40.0, 60.0], 4);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        for (x, y) in a.points.iter().zip(b.points.iter()) {
            assert_eq!(x.errors, y.errors);
            assert_eq!(x.mean_iterations, y.mean_iterations);
            assert_eq!(x.convergence_rate, y.convergence_rate);
            assert_eq!(x.sigma2, y.sigma2);
        }
    }

    #[test]
    fn parallel_pool_reproduces_serial_counts() {
        let code = LatticeCode::bipolar_generator(10, 2, 5).unwrap();
        let mut spec = SweepSpec::new(code, DecoderKind::Nbp, vec![20.0, 6.0], 6);
        let serial = run_sweep(&spec).unwrap();
        spec.parallelism = Some(4);
        let parallel = run_sweep(&spec).unwrap();
        // Points come back ascending regardless of input order.
        assert_eq!(serial.points[0].db, 6.0);
        for (x, y) in serial.points.iter().zip(parallel.points.iter()) {
            assert_eq!(x.db, y.db);
            assert_eq!(x.errors, y.errors);
            assert_eq!(x.mean_iterations, y.mean_iterations);
            assert_eq!(x.convergence_rate, y.convergence_rate);
        }
    }

    #[test]
    fn decoder_code_mismatch_is_a_usage_error() {
        let code = LatticeCode::bipolar_generator(8, 2, 3).unwrap();
        let spec = SweepSpec::new(code, DecoderKind::Ldlc, vec![3.0], 1);
        let err = run_sweep(&spec).unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn spec_validation() {
        let spec = small_latin_spec(vec![], 1);
        assert!(run_sweep(&spec).unwrap_err().is_usage());
        let spec = small_latin_spec(vec![1.0], 0);
        assert!(run_sweep(&spec).unwrap_err().is_usage());
        let mut spec = small_latin_spec(vec![1.0], 1);
        spec.parallelism = Some(0);
        assert!(run_sweep(&spec).unwrap_err().is_usage());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let report = run_sweep(&small_latin_spec(vec![40.0, 60.0], 3)).unwrap();
        let text = emit_csv(&report);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 3);
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(emit_csv(&parsed), text);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(matches!(parse_csv(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_csv("nonsense\n"), Err(Error::Parse { line: 1, .. })));
        let bad_fields = format!("{CSV_HEADER}\n1.0,2.0,3\n");
        assert!(matches!(parse_csv(&bad_fields), Err(Error::Parse { line: 2, .. })));
        let bad_ser = format!(
            "{CSV_HEADER}\n1.000000000e0,1.000000000e-1,100,7,9.900000000e-2,1.0e0,1.0e0,1.0e0\n"
        );
        assert!(matches!(parse_csv(&bad_ser), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn gabp_relaxed_runs_in_sweeps() {
        let code = LatticeCode::bipolar_generator(8, 2, 21).unwrap();
        let spec = SweepSpec::new(code, DecoderKind::GabpRelaxed, vec![40.0], 4);
        let report = run_sweep(&spec).unwrap();
        let point = &report.points[0];
        assert_eq!(point.symbols, 32);
        assert!((point.convergence_rate - 1.0).abs() < 1e-12);
        // The Gaussian relaxation is a matched filter: even with almost no
        // noise its inter-symbol interference leaves a few residual errors,
        // but it must stay far below the chance rate of one half.
        assert!(point.errors < point.symbols / 4, "errors={}", point.errors);
    }

    #[test]
    fn cost_classes_match_structure() {
        let latin = LatticeCode::latin_square(30, &[1.0, 0.8, 0.5], 4).unwrap();
        let ldlc = cost_profile(&latin, DecoderKind::Ldlc).unwrap();
        assert_eq!(ldlc.init_class, "O(n^3)");
        assert_eq!(ldlc.encode_class, "O(n^2)");
        assert_eq!(ldlc.post_class, "O(n*d)");
        assert_eq!(ldlc.encode_madds, 900);
        let sparse = LatticeCode::bipolar_generator(30, 3, 4).unwrap();
        let nbp = cost_profile(&sparse, DecoderKind::Nbp).unwrap();
        assert_eq!(nbp.init_class, "none");
        assert_eq!(nbp.encode_class, "O(n*d)");
        assert_eq!(nbp.post_class, "none");
        assert_eq!(nbp.encode_madds, 90);
        assert!(cost_profile(&latin, DecoderKind::Nbp).is_err());
    }

    #[test]
    fn sparse_encode_is_an_order_of_magnitude_cheaper_at_scale() {
        let n = 1000;
        let latin = LatticeCode::latin_square(n, &[1.0, 0.8, 0.5], 9).unwrap();
        let sparse = LatticeCode::bipolar_generator(n, 3, 9).unwrap();
        let dense_cost = cost_profile(&latin, DecoderKind::Ldlc).unwrap();
        let sparse_cost = cost_profile(&sparse, DecoderKind::Nbp).unwrap();
        assert_eq!(sparse_cost.encode_madds, 3000);
        assert!(
            dense_cost.encode_seconds >= 10.0 * sparse_cost.encode_seconds,
            "dense {}s vs sparse {}s",
            dense_cost.encode_seconds,
            sparse_cost.encode_seconds
        );
    }
}
