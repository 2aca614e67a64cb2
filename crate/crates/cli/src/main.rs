//! `formdecomp`: command-line driver for decompositions of majorized
//! sesquilinear forms.

mod commands;
mod files;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "formdecomp", version, about = "Decompose majorized sesquilinear forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the five checks of the three-term counterexample.
    Counterexample {
        /// Seed of the multistart dual-gauge search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        /// Read A, C and U from this file instead of the built-in instance.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Write instance.json, family.json and t0.json for the built-in
        /// instance into this directory and exit.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Δ-gauge, conv K bracket and membership of a trace-class T.
    Gauge {
        family: PathBuf,
        t: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Split U into terms bounded by the family and verify them.
    Decompose {
        family: PathBuf,
        u: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 20000)]
        max_iter: usize,
        /// Regularize along a descending ε grid: `default` for 4^-k,
        /// k = 0..20, or a comma-separated list.
        #[arg(long)]
        eps_grid: Option<String>,
        /// Directory receiving terms, witnesses, certificate and report.
        #[arg(long, default_value = "decomposition")]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// SVD construction diagonalizing C ⊗ D on a tensor w.
    SvdDemo {
        c: PathBuf,
        d: PathBuf,
        /// Tensor file; defaults to Σ e_i ⊗ e_i.
        w: Option<PathBuf>,
        /// Compare the left unitary with that of a second pair.
        #[arg(long, num_args = 2, value_names = ["E", "F"])]
        second_pair: Option<Vec<PathBuf>>,
        #[arg(long)]
        json: bool,
    },
    /// Randomized feasibility (or, with --separated, certification) trials.
    RandomSuite {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        terms: usize,
        /// Perturb T0 of the three-term instance and certify the
        /// separated forms; ignores --dim and requires --terms 3.
        #[arg(long)]
        separated: bool,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Counterexample {
            seed,
            json,
            instance,
            export,
        } => commands::counterexample(seed, json, instance.as_deref(), export.as_deref()),
        Command::Gauge {
            family,
            t,
            tol,
            seed,
            json,
        } => commands::gauge(&family, &t, tol, seed, json),
        Command::Decompose {
            family,
            u,
            tol,
            max_iter,
            eps_grid,
            out,
            json,
        } => commands::decompose(&family, &u, tol, max_iter, eps_grid.as_deref(), &out, json),
        Command::SvdDemo {
            c,
            d,
            w,
            second_pair,
            json,
        } => commands::svd_demo(&c, &d, w.as_deref(), second_pair.as_deref(), json),
        Command::RandomSuite {
            trials,
            dim,
            seed,
            terms,
            separated,
            json,
        } => commands::random_suite(trials, dim, seed, terms, separated, json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("formdecomp: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
