//! Batch front end: simulate data sets, fit parameters, score deregulation,
//! evaluate against ground truth and call pairs at a target FDR.

mod formats;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dereg_core::em::FitSettings;
use dereg_core::{eval, ModelParams};

#[derive(Parser)]
#[command(
    name = "dereg",
    version,
    about = "Posterior deregulation scoring for gene regulatory networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a data set from the model and write it with its ground truth.
    Simulate(SimulateArgs),
    /// Fit model parameters to expression data by EM.
    Fit(FitArgs),
    /// Score every (sample, target) pair under fixed parameters.
    Score(ScoreArgs),
    /// Precision-recall curve and area of scores against a truth mask.
    Eval(EvalArgs),
    /// Select pairs at an intended false discovery rate.
    Fdr(FdrArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Directory receiving network.tsv, params.tsv, expression.tsv,
    /// states.tsv and mask.tsv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Reference network; a random one is generated when absent.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Generating parameters; built-in defaults when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    regulators: usize,
    #[arg(long, default_value_t = 50)]
    targets: usize,
    #[arg(long, default_value_t = 3)]
    max_regulators: usize,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the deregulation probability of the generating parameters.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override all three status deviations of the generating parameters.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    expression: PathBuf,
    #[arg(long)]
    out_params: PathBuf,
    /// Per-iteration parameter trajectory.
    #[arg(long)]
    out_trace: PathBuf,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Worker threads for the per-sample E-step; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    expression: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Deregulation mask with the true positives.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FdrArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    target_fdr: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Fdr(args) => cmd_fdr(args),
    };
    if let Err(err) = result {
        let message = format!("{err:#}").replace('\n', " | ");
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn default_simulation_params() -> ModelParams {
    ModelParams::new([1.0 / 3.0; 3], 0.1, [-1.0, 0.0, 1.0], [0.5; 3])
        .expect("baked-in defaults are valid")
}

fn check(field: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        bail!("invalid value for --{field}");
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        check("threads", n >= 1)?;
        builder = builder.num_threads(n);
    }
    builder.build().context("cannot build worker pool")
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    check("samples", args.samples >= 1)?;
    let net = match &args.network {
        Some(path) => formats::read_network(path)?,
        None => {
            check("regulators", args.regulators >= 1)?;
            check("targets", args.targets >= 1)?;
            check("max-regulators", args.max_regulators >= 1)?;
            dereg_core::random_network(
                args.regulators,
                args.targets,
                args.max_regulators,
                args.seed,
            )?
        }
    };
    let mut params = match &args.params {
        Some(path) => formats::read_params(path)?,
        None => default_simulation_params(),
    };
    if let Some(epsilon) = args.epsilon {
        check("epsilon", (0.0..1.0).contains(&epsilon))?;
        params.epsilon = epsilon;
    }
    if let Some(sigma) = args.sigma {
        check("sigma", sigma > 0.0)?;
        params.sigma = [sigma; 3];
    }
    params.validate()?;

    let (expression, truth) = dereg_core::simulate(&net, &params, args.samples, args.seed)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    formats::write_network(&args.out_dir.join("network.tsv"), &net)?;
    formats::write_params(&args.out_dir.join("params.tsv"), &params)?;
    formats::write_expression(&args.out_dir.join("expression.tsv"), &expression)?;
    formats::write_states(&args.out_dir.join("states.tsv"), &truth)?;
    formats::write_mask(&args.out_dir.join("mask.tsv"), &truth.deregulated)?;
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    check("passes", args.passes >= 1)?;
    check("damping", (0.0..1.0).contains(&args.damping))?;
    check("tol", args.tol > 0.0)?;
    check("max-iters", args.max_iters >= 1)?;
    let net = formats::read_network(&args.network)?;
    let data = formats::read_expression(&args.expression)?;
    let settings = FitSettings {
        passes: args.passes,
        damping: args.damping,
        tol: args.tol,
        max_iterations: args.max_iters,
        initial: None,
    };
    let pool = thread_pool(args.threads)?;
    let result = pool.install(|| dereg_core::fit(&net, &data, &settings))?;
    formats::write_params(&args.out_params, &result.params)?;
    formats::write_trace(&args.out_trace, &result.trajectory)?;
    if !result.converged {
        eprintln!(
            "warning: EM did not converge within {} iterations (last change {:.3e})",
            result.iterations,
            result
                .trajectory
                .last()
                .map(|r| r.max_change)
                .unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    check("passes", args.passes >= 1)?;
    check("damping", (0.0..1.0).contains(&args.damping))?;
    let net = formats::read_network(&args.network)?;
    let data = formats::read_expression(&args.expression)?;
    let params = formats::read_params(&args.params)?;
    let pool = thread_pool(args.threads)?;
    let scores =
        pool.install(|| dereg_core::score(&net, &params, &data, args.passes, args.damping))?;
    formats::write_scores(&args.out, &scores)
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let scores = formats::read_scores(&args.scores)?;
    let truth = formats::read_mask(&args.truth)?;
    let curve = eval::pr_curve(&scores, &truth)?;
    formats::write_pr_curve(&args.out, &curve)?;
    println!("auprc\t{:.16e}", curve.auprc);
    Ok(())
}

fn cmd_fdr(args: FdrArgs) -> Result<()> {
    check("target-fdr", args.target_fdr > 0.0 && args.target_fdr < 1.0)?;
    let scores = formats::read_scores(&args.scores)?;
    let selection = eval::select_at_fdr(&scores, args.target_fdr);
    formats::write_selection(&args.out, &selection, &scores)?;
    println!(
        "selected\t{}\nthreshold\t{:.16e}\nestimated_fdr\t{:.16e}",
        selection.selected.len(),
        selection.threshold,
        selection.estimated_fdr
    );
    Ok(())
}
