use clap::Parser;
use std::path::PathBuf;
use ttnflow::config::{ExperimentKind, RawConfig};
use ttnflow::output::write_out;

/// Reproducible experiments for the tree tensor network splitting integrator.
#[derive(Parser)]
#[command(name = "ttnflow", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentKind,

    /// Tree shape like "[[1,2],3]", or the name of a preset ("sample").
    #[arg(long)]
    tree: String,

    /// Leaf dimensions: one integer, or label=dim pairs joined with ';'.
    #[arg(long)]
    dims: Option<String>,

    /// Tree ranks: one integer, or subtree=rank pairs joined with ';'.
    #[arg(long)]
    ranks: Option<String>,

    /// Seed for all random draws. [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Final time of each trajectory. [default: 1]
    #[arg(long)]
    t_end: Option<f64>,

    /// Step sizes, comma separated. [default: 0.1,0.01,0.001]
    #[arg(long, value_delimiter = ',')]
    step_sizes: Option<Vec<f64>>,

    /// Tangent norms for the retraction ladder, comma separated.
    /// [default: 0.1,0.05,0.025,0.0125]
    #[arg(long, value_delimiter = ',')]
    b_norms: Option<Vec<f64>>,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Skip the per-step re-orthonormalization pass, to make its effect
    /// visible in the orthonormality experiment.
    #[arg(long, hide = true)]
    debug_skip_qr: bool,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let raw = RawConfig {
        experiment: cli.experiment,
        tree: cli.tree,
        dims: cli.dims,
        ranks: cli.ranks,
        seed: cli.seed,
        t_end: cli.t_end,
        step_sizes: cli.step_sizes,
        b_norms: cli.b_norms,
        out: cli.out,
        skip_qr: cli.debug_skip_qr,
    };
    let cfg = raw.validated()?;
    let csv = ttnflow::run_to_csv(&cfg)?;
    write_out(cfg.out.as_deref(), &csv)
}
