use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use subspace_sets::embeddings::{load_word_embeddings, EmbeddingFormat};
use subspace_sets::eval::{
    algebra_binary, algebra_complement, algebra_member, algebra_span, emit, run_retrieval,
    run_sts_files, AlgebraOp, Metric, StsConfig, StsMethod,
};
use subspace_sets::retrieval::{gen_derived_sets, load_dataset, write_dataset, DerivedSetParams, ExpansionMethod, SetOp};
use subspace_sets::similarity::Weighting;
use subspace_sets::subspace::DEFAULT_ALPHA;
use subspace_sets::Result;

/// Word sets as linear subspaces of an embedding space.
#[derive(Parser)]
#[command(name = "subspace-sets", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlate sentence-pair scores with gold similarity judgements.
    Sts {
        #[arg(long)]
        pairs: PathBuf,
        /// Token-embedding file.
        #[arg(long)]
        embeddings: PathBuf,
        /// subspace_bertscore | bertscore | avg_cos
        #[arg(long, default_value = "subspace_bertscore")]
        method: StsMethod,
        /// P | R | F
        #[arg(long, default_value = "F")]
        metric: Metric,
        /// uniform | l2
        #[arg(long, default_value = "uniform")]
        weighting: Weighting,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand word sets against an embedding table and report R@k and median rank.
    Retrieve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// word2vec_text | glove_text
        #[arg(long, default_value = "glove_text")]
        format: EmbeddingFormat,
        /// subspace | fuzzy | near
        #[arg(long, default_value = "subspace")]
        method: ExpansionMethod,
        #[arg(long = "k", default_values_t = [100usize, 1000])]
        ks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build union or intersection sets from random pairs of dataset sets.
    GenSetops {
        #[arg(long)]
        dataset: PathBuf,
        /// union | intersect
        #[arg(long)]
        op: SetOp,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 50)]
        union_cap: usize,
        #[arg(long, default_value_t = 10)]
        intersect_min: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Subspace set operations on files.
    #[command(subcommand)]
    Algebra(AlgebraCommand),
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AlgebraCommand {
    /// Span of the vectors in a file (one vector per line).
    Span {
        vectors: PathBuf,
        /// Ambient dimension, needed only for an empty file.
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    Union {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    Intersect {
        a: PathBuf,
        b: PathBuf,
        /// Threshold on |σ − 1| for a shared direction.
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        out: OutArg,
    },
    Complement {
        a: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Soft membership of a single vector in a subspace.
    Member {
        vector: PathBuf,
        subspace: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sts {
            pairs,
            embeddings,
            method,
            metric,
            weighting,
            out,
        } => {
            let config = StsConfig {
                method,
                metric,
                weighting,
            };
            let outcome = run_sts_files(&pairs, &embeddings, &config, &out)?;
            print!("{}", outcome.report.to_tsv());
        }
        Command::Retrieve {
            dataset,
            embeddings,
            format,
            method,
            ks,
            out,
        } => {
            let sets = load_dataset(&dataset)?;
            let table = load_word_embeddings(&embeddings, format)?;
            if table.duplicates() > 0 {
                eprintln!("warning: {} duplicate words ignored", table.duplicates());
            }
            let report = run_retrieval(&sets, &table, method, &ks)?;
            let span_oov: usize = report.sets.iter().map(|s| s.span_oov).sum();
            let test_oov: usize = report.sets.iter().map(|s| s.test_oov).sum();
            if span_oov + test_oov > 0 {
                eprintln!("note: {span_oov} span words and {test_oov} test words not in vocabulary");
            }
            let tsv = report.to_tsv();
            fs::create_dir_all(&out)?;
            fs::write(out.join("retrieval.tsv"), &tsv)?;
            print!("{tsv}");
        }
        Command::GenSetops {
            dataset,
            op,
            seed,
            count,
            union_cap,
            intersect_min,
            out,
        } => {
            let sets = load_dataset(&dataset)?;
            let params = DerivedSetParams {
                op,
                seed,
                count,
                union_cap,
                intersect_min,
            };
            let derived = gen_derived_sets(&sets, &params)?;
            let mut buf = Vec::new();
            write_dataset(&mut buf, &derived)?;
            fs::write(&out, buf)?;
        }
        Command::Algebra(cmd) => {
            let (output, out) = match cmd {
                AlgebraCommand::Span { vectors, dim, out } => (algebra_span(&vectors, dim)?, out),
                AlgebraCommand::Union { a, b, out } => (algebra_binary(&a, &b, AlgebraOp::Union)?, out),
                AlgebraCommand::Intersect { a, b, alpha, out } => {
                    (algebra_binary(&a, &b, AlgebraOp::Intersect { alpha })?, out)
                }
                AlgebraCommand::Complement { a, out } => (algebra_complement(&a)?, out),
                AlgebraCommand::Member { vector, subspace, out } => (algebra_member(&vector, &subspace)?, out),
            };
            emit(&output.to_text(), out.out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version and 2 for usage errors.
            e.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
