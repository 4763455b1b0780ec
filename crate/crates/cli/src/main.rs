mod plot;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use r2p2_core::config::{RunConfig, TerrainKind};
use r2p2_core::experiment::{self, FactorLevels, StudyResult, StudyRun};
use r2p2_core::mission::ControllerKind;
use r2p2_core::record;

#[derive(Parser)]
#[command(name = "r2p2", version, about = "Decentralized multi-robot box transport simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TerrainArg {
    Flat,
    Uphill,
    Downhill,
}

impl From<TerrainArg> for TerrainKind {
    fn from(t: TerrainArg) -> Self {
        match t {
            TerrainArg::Flat => TerrainKind::Flat,
            TerrainArg::Uphill => TerrainKind::Uphill,
            TerrainArg::Downhill => TerrainKind::Downhill,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    R2p2,
    Vlf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Generalizability,
    Bearing,
    Taguchi,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Trajectory,
    Roles,
    Speeds,
    MainEffects,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration file (TOML); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; falls back to R2P2_OUT_DIR, then the config's output_dir.
    #[arg(long, env = "R2P2_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mission and write its log and CSV.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        terrain: Option<TerrainArg>,
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
    /// Run a study sweep and write per-run and aggregate reports.
    Study {
        #[arg(value_enum)]
        study: StudyKind,
        #[command(flatten)]
        common: Common,
        /// Terrains to include; Taguchi defaults to flat, the others to all three.
        #[arg(long, value_enum, value_delimiter = ',')]
        terrain: Vec<TerrainArg>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Render a record log or main-effects CSV as SVG.
    Plot {
        path: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Destination file; defaults to the input path with an .svg suffix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a record's config snapshot and compare against the record.
    Replay { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run {
            common,
            terrain,
            controller,
        } => cmd_run(&common, terrain, controller),
        Command::Study {
            study,
            common,
            terrain,
            jobs,
        } => cmd_study(study, &common, &terrain, jobs),
        Command::Plot { path, kind, out } => cmd_plot(&path, kind, out),
        Command::Replay { path } => cmd_replay(&path),
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn cmd_run(common: &Common, terrain: Option<TerrainArg>, controller: Option<ControllerArg>) -> Result<u8> {
    let mut cfg = load_config(common)?;
    if let Some(t) = terrain {
        cfg.terrain.kind = t.into();
    }
    if let Some(c) = controller {
        cfg.mission.controller = match c {
            ControllerArg::R2p2 => ControllerKind::R2p2,
            ControllerArg::Vlf => ControllerKind::Vlf,
        };
    }
    cfg.validate()?;
    let dir = out_dir(common, &cfg)?;
    let rec = cfg.run();

    let log_path = dir.join("record.ndjson");
    let csv_path = dir.join("record.csv");
    record::write_log(&rec, std::io::BufWriter::new(fs::File::create(&log_path)?))?;
    record::write_csv(&rec, std::io::BufWriter::new(fs::File::create(&csv_path)?))?;

    let (caged, tail) = experiment::caging_fractions(&rec, 10.0);
    println!(
        "outcome={} mission_time_s={:.2} caged={:.3} caged_final_10s={:.3}",
        rec.outcome.describe(),
        rec.mission_time,
        caged,
        tail
    );
    if let Some(d) = &rec.diagnostic {
        println!("diagnostic: {d}");
    }
    Ok(if rec.outcome.is_success() { 0 } else { 2 })
}

fn cmd_study(study: StudyKind, common: &Common, terrains: &[TerrainArg], jobs: usize) -> Result<u8> {
    let base = load_config(common)?;
    base.validate()?;
    let dir = out_dir(common, &base)?;
    let selected: Vec<TerrainKind> = terrains.iter().map(|&t| t.into()).collect();
    let keep = |runs: Vec<StudyRun>| -> Vec<StudyRun> {
        if selected.is_empty() {
            return runs;
        }
        runs.into_iter()
            .filter(|r| selected.contains(&r.config.terrain.kind))
            .collect()
    };

    match study {
        StudyKind::Generalizability => {
            let results = experiment::run_study(&keep(experiment::generalizability_runs(&base)), jobs, false);
            let table = experiment::generalizability_table(&results);
            write_report(&dir, "generalizability", &results, &table)?;
        }
        StudyKind::Bearing => {
            let results = experiment::run_study(&keep(experiment::bearing_runs(&base)), jobs, false);
            let table = experiment::bearing_table(&results);
            write_report(&dir, "bearing", &results, &table)?;
        }
        StudyKind::Taguchi => {
            let terrains = if selected.is_empty() { vec![TerrainKind::Flat] } else { selected.clone() };
            let factors = FactorLevels::default();
            for terrain in terrains {
                let name = format!("taguchi_{}", terrain.label());
                let results = experiment::run_study(&experiment::taguchi_runs(&base, terrain, &factors), jobs, false);
                let obs = experiment::taguchi_observations(&results);
                let effects = experiment::main_effects(&obs, &factors);
                let sn = experiment::signal_to_noise(&obs, base.study.taguchi_ceiling_s);
                fs::write(dir.join(format!("{name}_main_effects.csv")), experiment::main_effects_csv(&effects, &factors))?;
                fs::write(dir.join(format!("{name}_sn.csv")), experiment::signal_to_noise_csv(&sn))?;
                let mut summary = experiment::main_effects_table(&effects);
                summary.push_str(&format!(
                    "control factors by delta: {}\n",
                    experiment::rank_control_factors(&effects).join(", ")
                ));
                write_report(&dir, &name, &results, &summary)?;
            }
        }
    }
    Ok(0)
}

fn write_report(dir: &Path, name: &str, results: &[StudyResult], summary: &str) -> Result<()> {
    fs::write(dir.join(format!("{name}_runs.csv")), experiment::runs_csv(name, results))?;
    fs::write(dir.join(format!("{name}_summary.txt")), summary)?;
    let failures = results.iter().filter(|r| !r.outcome.is_success()).count();
    println!("{name}: {} runs, {failures} failed", results.len());
    print!("{summary}");
    Ok(())
}

fn read_record(path: &Path) -> Result<r2p2_core::mission::RunRecord> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    record::read_log(BufReader::new(file)).with_context(|| format!("reading record {}", path.display()))
}

fn cmd_plot(path: &Path, kind: PlotKind, out: Option<PathBuf>) -> Result<u8> {
    let svg = match kind {
        PlotKind::MainEffects => {
            let text = fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
            if !text.starts_with("schema_version,factor,") {
                bail!("{} is not a main-effects CSV", path.display());
            }
            plot::main_effects(&plot::read_main_effects(&text)?)?
        }
        other => {
            let rec = read_record(path)?;
            match other {
                PlotKind::Trajectory => plot::trajectory(&rec)?,
                PlotKind::Roles => plot::roles(&rec)?,
                PlotKind::Speeds => plot::speeds(&rec)?,
                PlotKind::MainEffects => unreachable!(),
            }
        }
    };
    let dest = out.unwrap_or_else(|| path.with_extension("svg"));
    fs::write(&dest, svg)?;
    println!("wrote {}", dest.display());
    Ok(0)
}

fn cmd_replay(path: &Path) -> Result<u8> {
    let rec = read_record(path)?;
    match record::replay(&rec)? {
        None => {
            println!("replay identical: {} control steps, {}", rec.control_steps, rec.outcome.describe());
            Ok(0)
        }
        Some(diff) => {
            println!("replay differs: {diff}");
            Ok(2)
        }
    }
}
