//! `bjj-sim`: runs junction scenarios from a JSON config and writes CSV
//! tables plus a run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bjj_core::cache::{sha256_hex, ModeCache};
use bjj_core::config::{schema as config_schema, Config, Model, Resolved, ScenarioId};
use bjj_core::error::{Error, Result};
use bjj_core::output::{
    write_gpe_trajectory, write_rows, write_snapshots, write_trajectory, ResultRow,
};
use bjj_core::scenarios::{
    base_junction, run_points, run_scenario, ScenarioOutput, TrajectoryData, Workbench,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bjj-sim", version, about = "Bosonic Josephson junction simulations")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Skip the on-disk stationary-state cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary states and junction parameters.
    Stationary(RunArgs),
    /// Two-mode trajectories for every two-mode model in the config.
    #[command(name = "evolve-2mode")]
    Evolve2Mode(RunArgs),
    /// GPE trajectory from the configured initial condition.
    EvolveGpe(RunArgs),
    Rabi(RunArgs),
    PiPhase(RunArgs),
    SweepLambda(RunArgs),
    SweepZ0(RunArgs),
    Mqst(RunArgs),
    /// Check a config without running anything.
    Validate {
        #[arg(long, required_unless_present = "print_schema")]
        config: Option<PathBuf>,
        #[arg(long)]
        print_schema: bool,
    },
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    preset: String,
    label: &'a str,
    version: &'a str,
    config_sha256: String,
    solver: bjj_core::stationary::SolverSettings,
    threads: usize,
    timings_s: Timings,
    cache: Option<CacheStats>,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct Timings {
    stationary: f64,
    total: f64,
}

#[derive(Serialize)]
struct CacheStats {
    dir: String,
    hits: u64,
    misses: u64,
}

fn cache_dir() -> Option<PathBuf> {
    if let Some(d) = std::env::var_os("BJJ_CACHE_DIR") {
        return Some(PathBuf::from(d));
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(PathBuf::from(d).join("bjj-sim"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("bjj-sim"))
}

fn load(path: &Path) -> Result<(Resolved, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Spec(format!("cannot read {}: {e}", path.display())))?;
    let resolved = Config::from_json(&text)?.resolve()?;
    Ok((resolved, sha256_hex(text.as_bytes())))
}

struct Writer {
    dir: PathBuf,
    written: Vec<String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn scenario(&mut self, out: &ScenarioOutput, wb: &Workbench) -> Result<()> {
        let f = self.file(&format!("{}.csv", out.scenario))?;
        write_rows(f, &out.rows)?;
        for t in &out.trajectories {
            let f = self.file(&format!("traj_{}_{}.csv", out.scenario, t.name))?;
            match &t.data {
                TrajectoryData::TwoMode(tr) => write_trajectory(f, tr, &wb.units)?,
                TrajectoryData::Gpe(tr) => {
                    write_gpe_trajectory(f, tr, &wb.units)?;
                    if !tr.snapshots.is_empty() {
                        let f = self.file(&format!("snap_{}_{}.csv", out.scenario, t.name))?;
                        write_snapshots(f, tr, wb.grid.nodes(), &wb.units)?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ModeLine {
    x_um: f64,
    potential_hz: f64,
    psi_g: f64,
    psi_e: f64,
    psi_l: f64,
    psi_r: f64,
}

fn stationary(res: &Resolved, wb: &Workbench, w: &mut Writer) -> Result<()> {
    let jn = base_junction(res, wb)?;
    let mut row = ResultRow::new("stationary", "none", 0.0, Model::Gpe.name());
    jn.describe(&mut row, &wb.units);
    write_rows(w.file("stationary.csv")?, &[row])?;
    let mut out = csv::Writer::from_writer(w.file("stationary_modes.csv")?);
    let m = &jn.modes;
    for (i, &x) in wb.grid.nodes().iter().enumerate() {
        out.serialize(ModeLine {
            x_um: wb.units.length_to_um(x),
            potential_hz: wb.units.energy_to_hz(jn.potential.values()[i]),
            psi_g: m.ground.psi[i],
            psi_e: m.excited.psi[i],
            psi_l: m.psi_l[i],
            psi_r: m.psi_r[i],
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Stdout that tolerates a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn execute(cli: Cli) -> Result<()> {
    let (name, args, scenario) = match &cli.command {
        Command::Validate {
            config,
            print_schema,
        } => {
            if *print_schema {
                emit(&serde_json::to_string_pretty(&config_schema()).expect("schema"));
            }
            if let Some(path) = config {
                let (r, hash) = load(path)?;
                // internal units: ħ = m = 1, lengths in μm
                emit(&serde_json::to_string_pretty(&r).expect("resolved config"));
                eprintln!("ok: {} (sha256 {hash})", path.display());
            }
            return Ok(());
        }
        Command::Stationary(a) => ("stationary", a, None),
        Command::Evolve2Mode(a) => ("evolve_2mode", a, None),
        Command::EvolveGpe(a) => ("evolve_gpe", a, None),
        Command::Rabi(a) => ("rabi", a, Some(ScenarioId::Rabi)),
        Command::PiPhase(a) => ("pi_phase", a, Some(ScenarioId::PiPhase)),
        Command::SweepLambda(a) => ("sweep_lambda", a, Some(ScenarioId::SweepLambda)),
        Command::SweepZ0(a) => ("sweep_z0", a, Some(ScenarioId::SweepZ0)),
        Command::Mqst(a) => ("mqst", a, Some(ScenarioId::Mqst)),
    };
    let start = Instant::now();
    let (res, hash) = load(&args.config)?;
    if let (Some(id), Some(cfg)) = (scenario, res.run.scenario) {
        if id != cfg {
            return Err(Error::Spec(format!(
                "config is for scenario `{}`, not `{}`",
                cfg.name(),
                id.name()
            )));
        }
    }
    let threads = cli.threads.unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Spec(format!("thread pool: {e}")))?;
    }
    let cache = if args.no_cache {
        None
    } else {
        cache_dir().and_then(|d| ModeCache::new(d).ok())
    };
    let mut wb = Workbench::from_resolved(&res);
    if let Some(c) = &cache {
        wb = wb.with_cache(c);
    }
    let mut w = Writer::new(&args.out_dir)?;
    match (scenario, &cli.command) {
        (Some(id), _) => {
            let out = run_scenario(id, &res, &wb)?;
            w.scenario(&out, &wb)?;
        }
        (None, Command::Stationary(_)) => stationary(&res, &wb, &mut w)?,
        (None, Command::Evolve2Mode(_)) => {
            let models: Vec<Model> = res.run.models.iter().copied().filter(|m| *m != Model::Gpe).collect();
            if models.is_empty() {
                return Err(Error::Spec("no two-mode model in run.models".to_string()));
            }
            let jn = base_junction(&res, &wb)?;
            w.scenario(&run_points(&res, &wb, &jn, "evolve_2mode", &models), &wb)?;
        }
        (None, _) => {
            let jn = base_junction(&res, &wb)?;
            w.scenario(&run_points(&res, &wb, &jn, "evolve_gpe", &[Model::Gpe]), &wb)?;
        }
    }
    let manifest = Manifest {
        command: name,
        preset: args
            .config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        label: &res.run.label,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: hash,
        solver: res.run.solver,
        threads: rayon::current_num_threads(),
        timings_s: Timings {
            stationary: wb.solve_seconds(),
            total: start.elapsed().as_secs_f64(),
        },
        cache: cache.as_ref().map(|c| CacheStats {
            dir: c.dir().display().to_string(),
            hits: wb.cache_hits(),
            misses: wb.cache_misses(),
        }),
        outputs: w.written.clone(),
        warnings: wb.take_warnings(),
    };
    for warning in &manifest.warnings {
        eprintln!("warning: {warning}");
    }
    let f = File::create(w.dir.join(format!("{name}_manifest.json")))?;
    serde_json::to_writer_pretty(f, &manifest).map_err(|e| Error::Io(e.into()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
