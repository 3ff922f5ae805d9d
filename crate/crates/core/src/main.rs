use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use optcomplete::bench::{generate, run_benchmark, Suite, SyntheticSpec};
use optcomplete::drivers::Algorithm;
use optcomplete::io::{load_problem, read_features, read_masked_with_shape, write_features, write_masked};
use optcomplete::two_sided::{reduce_two_sided, DEFAULT_ELEMENT_CAP};
use optcomplete::{ProblemConfig, Result, WarmStartKind};

#[derive(Parser)]
#[command(name = "optcomplete", version, about = "Interpretable matrix completion with feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Exact,
    Stochastic,
}

#[derive(Clone, Copy, ValueEnum)]
enum WarmStartArg {
    Greedy,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a planted synthetic instance into a directory.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        /// Fraction of entries hidden.
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; receives matrix.coo, features.csv and truth.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Select k features and complete a matrix.
    Complete {
        /// COO file with header `i,j,value`.
        #[arg(long)]
        matrix: PathBuf,
        /// CSV with one row of p features per matrix column.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        features_header: bool,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Stochastic)]
        algorithm: AlgorithmArg,
        #[arg(long, default_value_t = 100)]
        g0: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[arg(long, value_enum)]
        warm_start: Option<WarmStartArg>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Result JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a suite of synthetic experiments and write a CSV report.
    Benchmark {
        /// TOML file with one `[[spec]]` section per configuration.
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the sparse regression instance of a two-sided problem.
    Reduce {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        row_features: PathBuf,
        #[arg(long)]
        col_features: PathBuf,
        #[arg(long)]
        features_header: bool,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_ELEMENT_CAP)]
        max_elements: usize,
        /// Design CSV; the index map goes to `<out>.index`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct Truth<'a> {
    spec: &'a SyntheticSpec,
    true_support: &'a [usize],
    observed: usize,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            n,
            m,
            p,
            k,
            mu,
            noise_sd,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                n,
                m,
                p,
                k,
                mu,
                noise_sd,
                seed,
            };
            let inst = generate(&spec)?;
            fs::create_dir_all(&out)?;
            write_masked(&inst.masked, &out.join("matrix.coo"))?;
            write_features(&inst.features, &out.join("features.csv"))?;
            let truth = Truth {
                spec: &spec,
                true_support: inst.true_support.indices(),
                observed: inst.masked.nnz(),
            };
            fs::write(out.join("truth.json"), serde_json::to_string_pretty(&truth)? + "\n")?;
            println!(
                "wrote {} observed entries, true support {}",
                inst.masked.nnz(),
                inst.true_support
            );
        }
        Command::Complete {
            matrix,
            features,
            features_header,
            k,
            gamma,
            algorithm,
            g0,
            c,
            tol,
            seed,
            max_iterations,
            warm_start,
            workers,
            out,
        } => {
            let (a, b) = load_problem(&matrix, &features, features_header)?;
            let config = ProblemConfig {
                g0,
                c_const: c,
                tolerance: tol,
                seed,
                max_iterations,
                warm_start: warm_start.map(|w| match w {
                    WarmStartArg::Greedy => WarmStartKind::Greedy,
                    WarmStartArg::Random => WarmStartKind::Random,
                }),
                workers,
                ..ProblemConfig::new(k, gamma)
            };
            let algorithm = match algorithm {
                AlgorithmArg::Exact => Algorithm::Exact,
                AlgorithmArg::Stochastic => Algorithm::Stochastic,
            };
            let result = algorithm.run(&a, &b, &config)?;
            result.write_json(&out)?;
            for w in &result.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "support {} cost {:.6e} certified {} in {:.3}s",
                result.support,
                result.final_cost(),
                result.exact_certified,
                result.elapsed_seconds
            );
        }
        Command::Benchmark { suite, out } => {
            let suite = Suite::load(&suite)?;
            let rows = run_benchmark(&suite, &out)?;
            for row in &rows {
                for (seed, e) in &row.failures {
                    eprintln!("{} seed {seed} failed: {e}", row.algorithm.label());
                }
            }
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Reduce {
            matrix,
            row_features,
            col_features,
            features_header,
            k,
            gamma,
            max_elements,
            out,
        } => {
            let u = read_features(&row_features, features_header)?;
            let b = read_features(&col_features, features_header)?;
            let a = read_masked_with_shape(&matrix, u.n_rows(), b.n_rows())?;
            let inst = reduce_two_sided(&a, &u, &b, k, gamma, max_elements)?;
            inst.write_csv(&out)?;
            let mut sidecar = out.clone().into_os_string();
            sidecar.push(".index");
            inst.write_index_map(&PathBuf::from(sidecar))?;
            println!(
                "wrote {} samples x {} features",
                inst.n_samples(),
                inst.n_coefficients()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
