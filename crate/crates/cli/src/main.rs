use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand};
use log::{info, warn};

use wmon_core::io::{
    analyze_rows, ensure_dir, read_analysis, read_series, series_rows, summary_text, unix_now,
    write_json, write_series, AnalysisEntry, RunManifest, SimConfig, DEFAULT_VERDICT_THRESHOLD,
    MANIFEST_FILE, SERIES_FILE,
};
use wmon_core::report::write_report;
use wmon_core::runner::{sweep_sizes, SweepOptions};
use wmon_core::stats::FitWeighting;
use wmon_core::InitMode;

#[derive(Parser)]
#[command(name = "wmon", version, about = "Trajectory simulation and entanglement scaling analysis for weakly monitored spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a size sweep and write manifest, checkpoints and series CSV.
    #[command(group(ArgGroup::new("source").required(true).args(["config", "manifest"])))]
    Simulate {
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Re-run the configuration recorded in an earlier manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Continue from existing checkpoint files.
        #[arg(long)]
        resume: bool,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        workers: Option<usize>,
        /// Largest chain length accepted.
        #[arg(long = "max-L")]
        max_sites: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, env = "WMON_OUT_DIR", default_value = "wmon-out")]
        out: PathBuf,
    },
    /// F-test every setup in a series CSV.
    Analyze {
        series: PathBuf,
        /// P-value at or above which the volume law is favored.
        #[arg(long, default_value_t = DEFAULT_VERDICT_THRESHOLD)]
        threshold: f64,
        /// Weight fits by inverse squared standard errors.
        #[arg(long)]
        weighted: bool,
        /// Report JSON path; defaults to `<series>.report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit per-setup panel data (and SVGs) from series and reports.
    Report {
        #[arg(long = "series", required = true)]
        series: Vec<PathBuf>,
        #[arg(long = "report")]
        reports: Vec<PathBuf>,
        #[arg(long, overrides_with = "no_svg")]
        svg: bool,
        #[arg(long = "no-svg")]
        no_svg: bool,
        #[arg(long, env = "WMON_OUT_DIR", default_value = "wmon-out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            manifest,
            resume,
            workers,
            max_sites,
            seed,
            out,
        } => {
            let mut sim = match (config, manifest) {
                (Some(path), _) => SimConfig::load(&path)
                    .with_context(|| format!("reading config {}", path.display()))?,
                (None, Some(path)) => {
                    RunManifest::load(&path)
                        .with_context(|| format!("reading manifest {}", path.display()))?
                        .config
                }
                (None, None) => unreachable!("clap requires a source"),
            };
            if let Some(w) = workers {
                sim.workers = w;
            }
            if let Some(m) = max_sites {
                sim.max_sites = m;
            }
            if let Some(s) = seed {
                sim.seed = s;
            }
            simulate(&sim, resume, &out)
        }
        Command::Analyze {
            series,
            threshold,
            weighted,
            out,
        } => {
            let weighting = if weighted {
                FitWeighting::InverseVariance
            } else {
                FitWeighting::Unweighted
            };
            let rows = read_series(&series)?;
            let entries = analyze_rows(&rows, weighting, threshold)?;
            print!("{}", summary_text(&entries));
            let out = out.unwrap_or_else(|| series.with_extension("report.json"));
            write_json(&out, &entries)?;
            info!("wrote {}", out.display());
            Ok(())
        }
        Command::Report {
            series,
            reports,
            svg,
            no_svg,
            out,
        } => {
            let svg = svg || !no_svg;
            let mut rows = Vec::new();
            for path in &series {
                rows.extend(read_series(path)?);
            }
            let mut entries: Vec<AnalysisEntry> = Vec::new();
            for path in &reports {
                entries.extend(read_analysis(path)?);
            }
            let files = write_report(&out, &rows, &entries, svg)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn simulate(sim: &SimConfig, resume: bool, out: &Path) -> Result<()> {
    let started = unix_now();
    let base = sim.run_config()?;
    let out = ensure_dir(out)?;
    let checkpoints = out.join("checkpoints");
    let opts = SweepOptions {
        workers: sim.workers,
        max_sites: sim.max_sites,
        checkpoint_dir: Some(&checkpoints),
        resume,
    };
    let sweep = sweep_sizes(&base, &sim.sizes, &opts)?;
    for d in &sweep.diagnostics {
        if let Some(s) = d.stationarity.filter(|s| s.flagged) {
            warn!(
                "L = {}: entropy not stationary over the sample window ({:.4} → {:.4}, combined stderr {:.4})",
                d.n_sites, s.first_mean, s.last_mean, s.combined_stderr
            );
        }
        // Only a basis-state start is an S_z eigenstate, so only then must S_z stay fixed.
        if d.u1_symmetric && sim.init_mode == InitMode::Basis && d.max_sz_drift > 1e-6 {
            warn!("L = {}: magnetization drifted by {:.3e}", d.n_sites, d.max_sz_drift);
        }
    }
    let series_path = out.join(SERIES_FILE);
    write_series(&series_path, &series_rows(&base, &sweep.points))?;
    let manifest = RunManifest::new(sim, &base, started, &sweep);
    manifest.write(&out.join(MANIFEST_FILE))?;
    if sweep.points.is_empty() {
        bail!("sweep produced no points");
    }
    info!("wrote {}", series_path.display());
    Ok(())
}
