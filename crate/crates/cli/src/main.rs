//! `fsi` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fsi_core::benchmarks::{
    bc_comparison, compute_edr, convergence_study, BenchmarkId, ObservableSeries,
};
use fsi_core::io::{
    parse_config, read_timeseries, write_timeseries, write_vtk_snapshot, RunManifest,
};
use fsi_core::{BoundarySpec, ShellBc, Simulation, SimulationConfig, WaveformSource};

#[derive(Parser, Debug)]
#[command(
    name = "fsi",
    version,
    about = "Blood flow in a compliant vessel",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and write the time series, snapshots and manifest.
    Run(RunArgs),
    /// Time-convergence study against a fine reference run.
    Converge(ConvergeArgs),
    /// Radial displacement with absorbing and clamped shell ends.
    BcCompare(BcArgs),
    /// Energy dissipation ratio of the diameter-pressure loop.
    Edr(EdrArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Benchmark preset: example1, example1b, example2 or cca.
    #[arg(long, conflicts_with = "config")]
    benchmark: Option<BenchmarkId>,
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Shell end condition.
    #[arg(long, value_parser = ["clamped", "absorbing"])]
    bc: Option<String>,
    /// Coarse mesh size as NZxNR.
    #[arg(long, value_parser = parse_mesh)]
    mesh: Option<(usize, usize)>,
    /// Inlet pressure waveform (CSV `t,p`, mmHg, one closed period).
    #[arg(long)]
    waveform: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "fsi-out")]
    out: PathBuf,
    /// Snapshot cadence in steps; 0 writes only the final state.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated time steps.
    #[arg(long, value_delimiter = ',', required = true)]
    dt_list: Vec<f64>,
    /// Time step of the reference run.
    #[arg(long)]
    dt_ref: f64,
    /// Comparison time; defaults to the configured final time.
    #[arg(long)]
    t_eval: Option<f64>,
    /// Output directory; the report goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BcArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated comparison times.
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    t_eval: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EdrArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Time series written by `run`; the configuration is simulated otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Length of the loop at the end of the series; defaults to the
    /// waveform period, or the whole series.
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mesh(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NZxNR, got `{s}`"))?;
    let n = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad mesh count `{v}`"))
    };
    Ok((n(a)?, n(b)?))
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<SimulationConfig> {
        let mut cfg = match (&self.config, self.benchmark) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("in {}", path.display()))?
            }
            (None, Some(id)) => fsi_core::benchmark_config(id),
            (None, None) => bail!("one of --benchmark or --config is required"),
        };
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.t_final {
            cfg.t_final = t;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(bc) = &self.bc {
            cfg.bc = bc.parse::<ShellBc>().map_err(anyhow::Error::msg)?;
        }
        if let Some((nz, nr)) = self.mesh {
            cfg.n_z = nz;
            cfg.n_r = nr;
        }
        if let Some(path) = &self.waveform {
            match &mut cfg.boundary {
                BoundarySpec::Waveform { source, .. } => {
                    *source = WaveformSource::File(path.clone())
                }
                _ => bail!("--waveform needs a configuration with waveform boundary data"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.resolve()?;
    if let Some(n) = args.snapshot_every {
        cfg.snapshot_every = n;
    }
    let manifest = RunManifest::new(cfg.clone(), args.out.clone())?;
    manifest.write()?;
    let every = manifest.snapshot_every;
    let steps = cfg.steps();
    let out = args.out.clone();
    let mut series = ObservableSeries::default();
    let mut sim = Simulation::new(cfg)?;
    let final_state = sim.run(|sim, state| {
        series.push(state.t, sim.observe(state)?);
        if state.step % every == 0 || state.step == steps {
            write_vtk_snapshot(state, &snapshot_path(&out, state.step))?;
        }
        if state.step > 0 && state.step % 1000 == 0 {
            log::info!("step {} / {steps}, t = {:.6}", state.step, state.t);
        }
        Ok(())
    })?;
    write_timeseries(&series, &out.join("timeseries.csv"))?;
    println!(
        "{} steps to t = {:.6}; outputs in {}",
        final_state.step,
        final_state.t,
        out.display()
    );
    Ok(())
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:07}.vtk"))
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn finite_or_fail(text: &str) -> anyhow::Result<()> {
    if text.contains("NaN") || text.contains("inf") {
        bail!("result contains non-finite values");
    }
    Ok(())
}

fn converge(args: ConvergeArgs) -> anyhow::Result<()> {
    let cfg = args.config.resolve()?;
    let t_eval = args.t_eval.unwrap_or(cfg.t_final);
    let report = convergence_study(&cfg, &args.dt_list, args.dt_ref, t_eval)?;
    let csv = report.to_csv();
    finite_or_fail(&csv)?;
    emit(args.out.as_deref(), "convergence.csv", &csv)
}

fn bc_compare(args: BcArgs) -> anyhow::Result<()> {
    let cfg = args.config.resolve()?;
    let profiles = bc_comparison(&cfg, &args.t_eval)?;
    let mut csv = String::from("t,z,absorbing,clamped\n");
    for p in &profiles {
        if p.first.is_empty() || p.second.is_empty() {
            bail!("t = {} is not a multiple of dt = {}", p.t, cfg.dt);
        }
        for k in 0..p.z.len() {
            csv.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.t, p.z[k], p.first[k], p.second[k]
            ));
        }
    }
    finite_or_fail(&csv)?;
    emit(args.out.as_deref(), "bc_compare.csv", &csv)
}

fn edr(args: EdrArgs) -> anyhow::Result<()> {
    let cfg = args.config.resolve().ok();
    let series = match &args.input {
        Some(path) => read_timeseries(path)?,
        None => {
            let Some(cfg) = &cfg else {
                bail!("one of --input, --benchmark or --config is required");
            };
            fsi_core::run_simulation(cfg)?.series
        }
    };
    let period = args
        .period
        .or_else(|| match cfg.as_ref().map(|c| &c.boundary) {
            Some(BoundarySpec::Waveform { source, .. }) => source.load().ok().map(|w| w.period()),
            _ => None,
        });
    let t_end = series.t.last().copied().unwrap_or(0.0);
    let start = period.map_or(0.0, |p| t_end - p);
    let idx: Vec<usize> = (0..series.len())
        .filter(|&k| series.t[k] >= start - 1e-12)
        .collect();
    let d: Vec<f64> = idx.iter().map(|&k| series.diameter[k]).collect();
    let p: Vec<f64> = idx.iter().map(|&k| series.mean_pressure[k]).collect();
    let value = compute_edr(&d, &p)?;
    emit(args.out.as_deref(), "edr.txt", &format!("{value:.6}\n"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("FSI_THREADS") {
        match v.parse::<usize>() {
            Ok(n) => fsi_core::set_threads(n),
            Err(_) => {
                eprintln!("error: FSI_THREADS must be a non-negative integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Converge(a) => converge(a),
        Command::BcCompare(a) => bc_compare(a),
        Command::Edr(a) => edr(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
