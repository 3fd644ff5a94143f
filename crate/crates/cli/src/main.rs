//! Command-line driver for the lattice-code toolkit.
//!
//! Subcommands: `gen` (construct a code and save its matrix), `encode`
//! (integer vector to lattice point), `simulate` / `sweep` (Monte-Carlo
//! noise sweeps emitting CSV), and `check` (convergence certificates).
//!
//! Exit codes: 0 on success, 1 when the invocation itself is wrong (bad
//! flags, incompatible decoder/code pairing), 2 when a computation fails.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldlc_core::{
    check_ldlc_conditions, emit_csv, load_code, run_sweep, save_code, DecoderConfig, DecoderKind,
    Error, LatticeCode, RelaxedPrior, Result, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "ldlc",
    about = "Lattice-code toolkit: construction, encoding, decoding sweeps, certificates",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KindArg {
    /// Latin-square parity-check code built from a generating sequence.
    Latin,
    /// Sparse generator with random ±1 entries, d per row and column.
    Bipolar,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a code and write its matrix in triplet format.
    Gen {
        /// Code family to construct.
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Dimension (number of symbols).
        #[arg(long)]
        n: usize,
        /// Non-zeros per row/column (bipolar codes; latin codes take it from --seq).
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Generating sequence for latin codes, comma separated (e.g. 1,0.8,0.5).
        #[arg(long, value_delimiter = ',')]
        seq: Option<Vec<f64>>,
        /// Construction seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output matrix file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode an integer vector (one integer per line) into a lattice point.
    Encode {
        /// Code matrix file.
        #[arg(long)]
        code: PathBuf,
        /// Input integers, one per line.
        #[arg(long)]
        b_file: PathBuf,
        /// Output lattice point, one coordinate per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo noise sweep over one or more dB points.
    Simulate(SimArgs),
    /// Alias of `simulate` for multi-dB batches.
    Sweep(SimArgs),
    /// Print convergence certificates for a code.
    Check {
        /// Code matrix file.
        #[arg(long)]
        code: PathBuf,
    },
}

#[derive(Args)]
struct SimArgs {
    /// Code matrix file.
    #[arg(long)]
    code: PathBuf,
    /// Decoder: ldlc, nbp, or gabp-relaxed.
    #[arg(long)]
    decoder: String,
    /// Distance from capacity in dB; repeat or list multiple points.
    #[arg(long, num_args = 1.., required = true)]
    db: Vec<f64>,
    /// Trials per dB point.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Base seed for the per-trial derivation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Decoder iteration cap.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Belief-variance convergence threshold.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Mixture resolution per message.
    #[arg(long, default_value_t = 8)]
    max_components: usize,
    /// Relaxed-prior component variance (generator-side decoders).
    #[arg(long, default_value_t = 0.01)]
    prior_v: f64,
    /// Message damping in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    /// Worker threads for trial evaluation.
    #[arg(long)]
    parallel: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful exits; everything else
            // is a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { kind, n, d, seq, seed, out } => {
            let code = match kind {
                KindArg::Latin => {
                    let seq = seq.ok_or_else(|| {
                        Error::InvalidArgument("--kind latin requires --seq".into())
                    })?;
                    LatticeCode::latin_square(n, &seq, seed)?
                }
                KindArg::Bipolar => {
                    if seq.is_some() {
                        return Err(Error::InvalidArgument(
                            "--seq only applies to --kind latin".into(),
                        ));
                    }
                    LatticeCode::bipolar_generator(n, d, seed)?
                }
            };
            save_code(&code, &out)?;
            println!(
                "wrote {} ({:?}, n={}, d={})",
                out.display(),
                code.kind(),
                code.n(),
                code.degree()
            );
            Ok(())
        }
        Command::Encode { code, b_file, out } => {
            let code = load_code(&code)?;
            let b = read_integers(&b_file)?;
            let x = code.encode(&b)?;
            let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
            for v in &x {
                writeln!(w, "{v:.16e}")?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Simulate(args) | Command::Sweep(args) => {
            let report = run_sweep(&sweep_spec(&args)?)?;
            let csv = emit_csv(&report);
            match &args.csv_out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Check { code } => {
            let code = load_code(&code)?;
            print!("{}", check_ldlc_conditions(&code)?.render());
            Ok(())
        }
    }
}

fn sweep_spec(args: &SimArgs) -> Result<SweepSpec> {
    let code = load_code(&args.code)?;
    let decoder = DecoderKind::parse(&args.decoder)?;
    let mut spec = SweepSpec::new(code, decoder, args.db.clone(), args.trials);
    spec.base_seed = args.seed;
    spec.config = DecoderConfig {
        max_iterations: args.max_iters,
        variance_epsilon: args.epsilon,
        max_components: args.max_components,
        damping: args.damping,
        ..DecoderConfig::default()
    };
    spec.prior = RelaxedPrior::new(&[-1, 1], args.prior_v)?;
    spec.parallelism = args.parallel;
    Ok(spec)
}

fn read_integers(path: &std::path::Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse::<i64>().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad integer '{t}'"),
            })?,
        );
    }
    Ok(out)
}
