use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nufi::driver::{self, sample_snapshot, SliceSpec};
use nufi::spline::{read_checkpoint_header, PotentialHistory};
use nufi::{FlowContext, Real, RunConfig};

#[derive(Parser)]
#[command(name = "nufi", version, about = "Numerical flow iteration for Vlasov-Poisson")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its outputs.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the nodal electric field of run A against reference run B.
    Compare { config_a: PathBuf, config_b: PathBuf },
    /// Print the memory and cost budget of a configuration.
    Budget { config: PathBuf },
    /// Sample f on a phase-space slice from a saved potential history.
    Snapshot {
        checkpoint: PathBuf,
        /// Config of the run that wrote the checkpoint (supplies f0 and vmax).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        step: usize,
        #[arg(long, default_value_t = 256)]
        res: usize,
        /// The two free coordinates, e.g. `x1,v1`.
        #[arg(long, default_value = "x1,v1")]
        slice: String,
        /// Fixed coordinates, e.g. `--fix x2=0.5`; unlisted ones are 0.
        #[arg(long)]
        fix: Vec<String>,
        /// Output path without extension; `.csv` and `.pgm` are written.
        #[arg(long, default_value = "snapshot")]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::from_file(path).with_context(|| format!("config stage: {}", path.display()))
}

fn cmd_run(config: &Path, output: Option<PathBuf>) -> Result<()> {
    let mut cfg = load(config)?;
    if output.is_some() {
        cfg.output_dir = output;
    }
    let state = driver::run(&cfg).context("simulation stage")?;
    let last = state.steps().last().expect("at least step 0");
    println!(
        "completed {} steps, t = {}, electric energy {:e}",
        cfg.n_steps, last.t, last.electric_energy
    );
    match &cfg.output_dir {
        Some(dir) => {
            state.write_outputs(dir).with_context(|| format!("output stage: {}", dir.display()))?;
            println!("outputs written to {}", dir.display());
        }
        None => {
            println!("{}", nufi::DiagnosticsRecord::csv_header(cfg.grid.dim()));
            for r in state.diagnostics() {
                println!("{}", r.csv_row());
            }
        }
    }
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let ca = load(a)?;
    let cb = load(b)?;
    let rows = driver::run_compare(&ca, &cb).context("compare stage")?;
    println!("t,rel_l2,rel_linf");
    for r in rows {
        println!("{:e},{:e},{:e}", r.t, r.rel_l2, r.rel_linf);
    }
    Ok(())
}

fn snapshot_typed<T: Real, const D: usize>(
    checkpoint: &Path,
    cfg: &RunConfig,
    step: usize,
    res: usize,
    slice: &SliceSpec,
    out: &Path,
) -> Result<()> {
    let history = PotentialHistory::<T, D>::read_checkpoint(checkpoint).context("checkpoint stage")?;
    let ctx = FlowContext::new(&history, &cfg.initial).context("snapshot stage")?;
    let snap = sample_snapshot(&ctx, &cfg.grid, step, slice, res).context("snapshot stage")?;
    let csv = out.with_extension("csv");
    let pgm = out.with_extension("pgm");
    snap.write_csv(&csv).context("output stage")?;
    snap.write_pgm(&pgm, cfg.initial.sup()).context("output stage")?;
    println!("wrote {} and {}", csv.display(), pgm.display());
    Ok(())
}

fn cmd_snapshot(
    checkpoint: &Path,
    config: &Path,
    step: usize,
    res: usize,
    slice: &str,
    fix: &[String],
    out: &Path,
) -> Result<()> {
    let cfg = load(config)?;
    let header = read_checkpoint_header(checkpoint).context("checkpoint stage")?;
    if header.d != cfg.grid.dim() || header.nx != cfg.grid.nx() {
        bail!(
            "checkpoint stage: checkpoint (d={}, Nx={}) does not match config (d={}, Nx={})",
            header.d,
            header.nx,
            cfg.grid.dim(),
            cfg.grid.nx()
        );
    }
    let slice = SliceSpec::parse(slice, fix).context("snapshot stage")?;
    match (header.float_bytes, header.d) {
        (8, 1) => snapshot_typed::<f64, 1>(checkpoint, &cfg, step, res, &slice, out),
        (8, 2) => snapshot_typed::<f64, 2>(checkpoint, &cfg, step, res, &slice, out),
        (8, 3) => snapshot_typed::<f64, 3>(checkpoint, &cfg, step, res, &slice, out),
        (4, 1) => snapshot_typed::<f32, 1>(checkpoint, &cfg, step, res, &slice, out),
        (4, 2) => snapshot_typed::<f32, 2>(checkpoint, &cfg, step, res, &slice, out),
        (4, 3) => snapshot_typed::<f32, 3>(checkpoint, &cfg, step, res, &slice, out),
        (w, d) => bail!("checkpoint stage: unsupported layout ({w}-byte floats, d={d})"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => cmd_run(&config, output),
        Command::Compare { config_a, config_b } => cmd_compare(&config_a, &config_b),
        Command::Budget { config } => load(&config).map(|c| println!("{}", driver::report_budget(&c))),
        Command::Snapshot {
            checkpoint,
            config,
            step,
            res,
            slice,
            fix,
            out,
        } => cmd_snapshot(&checkpoint, &config, step, res, &slice, &fix, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
