//! Study sweeps: generalizability grid, controller bearing comparison and
//! the Taguchi crossed-array sensitivity analysis.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TerrainKind};
use crate::controller::RepositionMode;
use crate::mission::{ControllerKind, FailureBReason, Outcome, RunRecord, SCHEMA_VERSION};

/// One mission of a study, identified by a sortable id.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRun {
    pub id: String,
    /// Factor name and printed value, in report column order.
    pub labels: Vec<(String, String)>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub id: String,
    pub labels: Vec<(String, String)>,
    pub outcome: Outcome,
    pub mission_time: f64,
    /// Share of control steps with an intact cage.
    pub caged_fraction: f64,
    /// Same share over the final 10 s of the run.
    pub tail_caged_fraction: f64,
    pub diagnostic: Option<String>,
    /// Kept only when the caller asks for full records.
    pub record: Option<RunRecord>,
}

impl StudyResult {
    fn from_record(run: &StudyRun, record: RunRecord, keep: bool) -> Self {
        let (caged_fraction, tail_caged_fraction) = caging_fractions(&record, 10.0);
        Self {
            id: run.id.clone(),
            labels: run.labels.clone(),
            outcome: record.outcome,
            mission_time: record.mission_time,
            caged_fraction,
            tail_caged_fraction,
            diagnostic: record.diagnostic.clone(),
            record: keep.then_some(record),
        }
    }

    pub fn label(&self, name: &str) -> Option<&str> {
        self.labels.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

/// Caged share over all samples and over those in the last `tail` seconds.
pub fn caging_fractions(record: &RunRecord, tail: f64) -> (f64, f64) {
    let s = &record.samples;
    if s.is_empty() {
        return (1.0, 1.0);
    }
    let frac = |xs: &[crate::mission::Sample]| xs.iter().filter(|x| x.caged).count() as f64 / xs.len() as f64;
    let end = s[s.len() - 1].t;
    let start = s.partition_point(|x| x.t < end - tail - 1e-9);
    (frac(s), frac(&s[start..]))
}

/// Runs every mission on a pool of `jobs` workers; results sorted by id.
pub fn run_study(runs: &[StudyRun], jobs: usize, keep_records: bool) -> Vec<StudyResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("worker pool");
    let mut results: Vec<StudyResult> = pool.install(|| {
        runs.par_iter()
            .map(|run| StudyResult::from_record(run, run.config.run(), keep_records))
            .collect()
    });
    results.sort_by(|a, b| a.id.cmp(&b.id));
    results
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// Generalizability

pub const GEN_MU: [f64; 3] = [0.001, 0.01, 0.1];
pub const GEN_MASS: [f64; 3] = [0.5, 2.0, 6.0];

pub fn generalizability_runs(base: &RunConfig) -> Vec<StudyRun> {
    let mut runs = Vec::new();
    for (ti, terrain) in TerrainKind::ALL.into_iter().enumerate() {
        for (mi, mass) in GEN_MASS.into_iter().enumerate() {
            for (ui, mu) in GEN_MU.into_iter().enumerate() {
                let mut c = base.clone();
                c.terrain.kind = terrain;
                c.terrain.mu_dynamic = mu;
                c.box_.mass_kg = mass;
                c.mission.controller = ControllerKind::R2p2;
                runs.push(StudyRun {
                    id: format!("gen-{ti}{mi}{ui}"),
                    labels: vec![
                        ("terrain".into(), terrain.label().into()),
                        ("mass_kg".into(), fmt_num(mass)),
                        ("mu_dynamic".into(), fmt_num(mu)),
                    ],
                    config: c,
                });
            }
        }
    }
    runs
}

/// Terrain × mass rows, one column per friction coefficient.
pub fn generalizability_table(results: &[StudyResult]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<10} {:>8}", "terrain", "mass_kg");
    for mu in GEN_MU {
        let _ = write!(out, " {:>14}", format!("mu={mu}"));
    }
    out.push('\n');
    for terrain in TerrainKind::ALL {
        for mass in GEN_MASS {
            let _ = write!(out, "{:<10} {:>8}", terrain.label(), mass);
            for mu in GEN_MU {
                let cell = results
                    .iter()
                    .find(|r| {
                        r.label("terrain") == Some(terrain.label())
                            && r.label("mass_kg") == Some(&fmt_num(mass))
                            && r.label("mu_dynamic") == Some(&fmt_num(mu))
                    })
                    .map(cell_text)
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, " {cell:>14}");
            }
            out.push('\n');
        }
    }
    out
}

fn cell_text(r: &StudyResult) -> String {
    match r.outcome {
        Outcome::Success => format!("{:.2} s", r.mission_time),
        other => other.code().to_string(),
    }
}

// ---------------------------------------------------------------------------
// Bearing comparison

pub const BEARINGS_DEG: [f64; 4] = [15.0, 30.0, 45.0, 60.0];
pub const WIDE_BEARINGS_DEG: [f64; 5] = [15.0, 30.0, 45.0, 60.0, 75.0];
pub const BEARING_MASS_KG: f64 = 0.05;

/// Two tables: both controllers at a 20 cm goal tolerance, and R2P2 alone
/// at 10 cm with the extra 75° bearing.
pub fn bearing_runs(base: &RunConfig) -> Vec<StudyRun> {
    let mut runs = Vec::new();
    let mut push = |table: &str, tol: f64, controller: ControllerKind, bearings: &[f64]| {
        for (ti, terrain) in TerrainKind::ALL.into_iter().enumerate() {
            for (bi, &bearing) in bearings.iter().enumerate() {
                let mut c = base.clone();
                c.terrain.kind = terrain;
                c.terrain.mu_static = 0.9;
                c.terrain.mu_dynamic = 0.1;
                c.box_.mass_kg = BEARING_MASS_KG;
                c.mission.controller = controller;
                c.mission.goal_tolerance_m = tol;
                let b = bearing.to_radians();
                c.mission.waypoints_m = vec![[b.cos(), b.sin()]];
                runs.push(StudyRun {
                    id: format!("bear-{table}-{}-{ti}{bi}", controller.label()),
                    labels: vec![
                        ("table".into(), table.into()),
                        ("controller".into(), controller.label().into()),
                        ("terrain".into(), terrain.label().into()),
                        ("bearing_deg".into(), fmt_num(bearing)),
                        ("goal_tolerance_m".into(), fmt_num(tol)),
                    ],
                    config: c,
                });
            }
        }
    };
    push("a", 0.2, ControllerKind::R2p2, &BEARINGS_DEG);
    push("a", 0.2, ControllerKind::Vlf, &BEARINGS_DEG);
    push("b", 0.1, ControllerKind::R2p2, &WIDE_BEARINGS_DEG);
    runs
}

/// S/F matrix: one row per table, controller and terrain.
pub fn bearing_table(results: &[StudyResult]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<6} {:<6} {:<10}", "table", "ctrl", "terrain");
    for b in WIDE_BEARINGS_DEG {
        let _ = write!(out, " {:>6}", format!("{b}°"));
    }
    out.push('\n');
    for (table, ctrls) in [("a", &[ControllerKind::R2p2, ControllerKind::Vlf][..]), ("b", &[ControllerKind::R2p2][..])] {
        for ctrl in ctrls {
            for terrain in TerrainKind::ALL {
                let _ = write!(out, "{table:<6} {:<6} {:<10}", ctrl.label(), terrain.label());
                for b in WIDE_BEARINGS_DEG {
                    let cell = results
                        .iter()
                        .find(|r| {
                            r.label("table") == Some(table)
                                && r.label("controller") == Some(ctrl.label())
                                && r.label("terrain") == Some(terrain.label())
                                && r.label("bearing_deg") == Some(&fmt_num(b))
                        })
                        .map(|r| match r.outcome {
                            Outcome::Success => "S".to_string(),
                            o => o.code().to_string(),
                        })
                        .unwrap_or_else(|| "-".into());
                    let _ = write!(out, " {cell:>6}");
                }
                out.push('\n');
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Taguchi

/// Standard L9(3^4) orthogonal array, zero-based level indices.
pub fn l9_array() -> [[usize; 4]; 9] {
    [
        [0, 0, 0, 0],
        [0, 1, 1, 1],
        [0, 2, 2, 2],
        [1, 0, 1, 2],
        [1, 1, 2, 0],
        [1, 2, 0, 1],
        [2, 0, 2, 1],
        [2, 1, 0, 2],
        [2, 2, 1, 0],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub name: &'static str,
    pub levels: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorLevels {
    pub control: [Factor; 4],
    pub noise: [Factor; 4],
}

impl Default for FactorLevels {
    fn default() -> Self {
        Self {
            control: [
                Factor { name: "k_rot", levels: [0.125, 0.25, 0.5] },
                Factor { name: "k_trans", levels: [0.2, 0.3, 0.4] },
                Factor { name: "v_min_mps", levels: [0.10, 0.15, 0.20] },
                Factor { name: "contact_placement_m", levels: [0.05, 0.175, 0.30] },
            ],
            noise: [
                Factor { name: "mu", levels: [0.4, 0.7, 0.9] },
                Factor { name: "mass_kg", levels: [0.1, 0.3, 0.5] },
                Factor { name: "target_angle_deg", levels: [5.0, 10.0, 15.0] },
                Factor { name: "target_distance_m", levels: [0.2, 0.4, 0.6] },
            ],
        }
    }
}

impl FactorLevels {
    pub fn all(&self) -> impl Iterator<Item = &Factor> {
        self.control.iter().chain(self.noise.iter())
    }
}

/// One cell of the crossed array after execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaguchiObservation {
    pub inner_row: usize,
    pub outer_row: usize,
    /// Level index per factor: four control then four noise.
    pub levels: [usize; 8],
    pub success: bool,
    pub time: f64,
}

impl TaguchiObservation {
    /// Completion time with failures charged the ceiling.
    pub fn penalised(&self, ceiling: f64) -> f64 {
        if self.success {
            self.time
        } else {
            ceiling
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffect {
    pub factor: String,
    /// Mean successful completion time per level; `None` when every run failed.
    pub level_means: [Option<f64>; 3],
    /// Max minus min over levels with data.
    pub delta: Option<f64>,
    pub failures: [usize; 3],
}

pub fn main_effects(obs: &[TaguchiObservation], factors: &FactorLevels) -> Vec<MainEffect> {
    factors
        .all()
        .enumerate()
        .map(|(f, factor)| {
            let mut sum = [0.0; 3];
            let mut count = [0usize; 3];
            let mut failures = [0usize; 3];
            for o in obs {
                let l = o.levels[f];
                if o.success {
                    sum[l] += o.time;
                    count[l] += 1;
                } else {
                    failures[l] += 1;
                }
            }
            let level_means: [Option<f64>; 3] =
                std::array::from_fn(|l| (count[l] > 0).then(|| sum[l] / count[l] as f64));
            let present: Vec<f64> = level_means.iter().flatten().copied().collect();
            let delta = (!present.is_empty()).then(|| {
                present.iter().copied().fold(f64::MIN, f64::max) - present.iter().copied().fold(f64::MAX, f64::min)
            });
            MainEffect {
                factor: factor.name.to_string(),
                level_means,
                delta,
                failures,
            }
        })
        .collect()
}

/// Smaller-is-better signal-to-noise ratio per inner row, in row order.
pub fn signal_to_noise(obs: &[TaguchiObservation], ceiling: f64) -> Vec<(usize, f64)> {
    let mut rows: Vec<usize> = obs.iter().map(|o| o.inner_row).collect();
    rows.sort_unstable();
    rows.dedup();
    rows.into_iter()
        .map(|row| {
            let ys: Vec<f64> = obs
                .iter()
                .filter(|o| o.inner_row == row)
                .map(|o| o.penalised(ceiling).powi(2))
                .collect();
            let msd = ys.iter().sum::<f64>() / ys.len() as f64;
            (row, -10.0 * msd.log10())
        })
        .collect()
}

/// Control factors ranked by delta, largest first; factors without data last.
pub fn rank_control_factors(effects: &[MainEffect]) -> Vec<String> {
    let mut ranked: Vec<&MainEffect> = effects.iter().take(4).collect();
    ranked.sort_by(|a, b| {
        b.delta
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.delta.unwrap_or(f64::NEG_INFINITY))
    });
    ranked.into_iter().map(|e| e.factor.clone()).collect()
}

/// 81 runs: every inner row crossed with every outer row. Repositioning
/// teleports with a fixed penalty and the mission ceiling is the S/N ceiling.
pub fn taguchi_runs(base: &RunConfig, terrain: TerrainKind, factors: &FactorLevels) -> Vec<StudyRun> {
    let l9 = l9_array();
    let mut runs = Vec::with_capacity(81);
    for (i, inner) in l9.iter().enumerate() {
        for (o, outer) in l9.iter().enumerate() {
            let mut c = base.clone();
            c.terrain.kind = terrain;
            c.mission.controller = ControllerKind::R2p2;
            c.controller.reposition_mode = RepositionMode::Teleport;
            c.mission.max_time_s = c.study.taguchi_ceiling_s;
            c.mission.goal_tolerance_m = c.study.taguchi_goal_tolerance_m;

            let v = |fs: &[Factor; 4], row: &[usize; 4], k: usize| fs[k].levels[row[k]];
            c.controller.k_rot = v(&factors.control, inner, 0);
            c.controller.k_trans = v(&factors.control, inner, 1);
            c.controller.v_min_mps = v(&factors.control, inner, 2);
            c.robots.contact_placement_m = v(&factors.control, inner, 3);
            let mu = v(&factors.noise, outer, 0);
            c.terrain.mu_dynamic = mu;
            c.terrain.mu_static = c.terrain.mu_static.max(mu);
            c.box_.mass_kg = v(&factors.noise, outer, 1);
            let angle = v(&factors.noise, outer, 2).to_radians();
            let dist = v(&factors.noise, outer, 3);
            c.mission.waypoints_m = vec![[dist * angle.cos(), dist * angle.sin()]];

            let mut labels = vec![
                ("terrain".to_string(), terrain.label().to_string()),
                ("inner_row".to_string(), (i + 1).to_string()),
                ("outer_row".to_string(), (o + 1).to_string()),
            ];
            for (k, f) in factors.control.iter().enumerate() {
                labels.push((f.name.into(), fmt_num(f.levels[inner[k]])));
            }
            for (k, f) in factors.noise.iter().enumerate() {
                labels.push((f.name.into(), fmt_num(f.levels[outer[k]])));
            }
            runs.push(StudyRun {
                id: format!("tag-{}-{i}{o}", terrain.label()),
                labels,
                config: c,
            });
        }
    }
    runs
}

/// Recovers array coordinates from Taguchi run ids and labels.
pub fn taguchi_observations(results: &[StudyResult]) -> Vec<TaguchiObservation> {
    let l9 = l9_array();
    results
        .iter()
        .filter_map(|r| {
            let inner = r.label("inner_row")?.parse::<usize>().ok()? - 1;
            let outer = r.label("outer_row")?.parse::<usize>().ok()? - 1;
            let mut levels = [0; 8];
            levels[..4].copy_from_slice(&l9[inner]);
            levels[4..].copy_from_slice(&l9[outer]);
            Some(TaguchiObservation {
                inner_row: inner,
                outer_row: outer,
                levels,
                success: r.outcome.is_success(),
                time: r.mission_time,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Reports

fn reason_label(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::FailureB(FailureBReason::BoxSlippedOut) => "box_slipped_out",
        Outcome::FailureB(FailureBReason::InterRobotCollision) => "inter_robot_collision",
        Outcome::FailureB(FailureBReason::RepositionStuck) => "reposition_stuck",
        Outcome::FailureB(FailureBReason::BoxJammed) => "box_jammed",
        Outcome::FailureB(FailureBReason::PhysicsFault) => "physics_fault",
        Outcome::FailureA => "time_ceiling",
        Outcome::Success => "",
    }
}

/// One row per run, sorted by id. Label columns follow the first run.
pub fn runs_csv(study: &str, results: &[StudyResult]) -> String {
    let mut sorted: Vec<&StudyResult> = results.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = String::from("schema_version,study,run_id");
    if let Some(first) = sorted.first() {
        for (k, _) in &first.labels {
            let _ = write!(out, ",{k}");
        }
    }
    out.push_str(",outcome,reason,mission_time_s,caged_fraction,tail_caged_fraction\n");
    for r in sorted {
        let _ = write!(out, "{SCHEMA_VERSION},{study},{}", r.id);
        for (_, v) in &r.labels {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            r.outcome.code(),
            reason_label(r.outcome),
            r.mission_time,
            r.caged_fraction,
            r.tail_caged_fraction
        );
    }
    out
}

/// Long format: one row per factor level.
pub fn main_effects_csv(effects: &[MainEffect], factors: &FactorLevels) -> String {
    let mut out = String::from("schema_version,factor,level,value,mean_time_s,failures,delta_s\n");
    for (e, f) in effects.iter().zip(factors.all()) {
        for l in 0..3 {
            let mean = e.level_means[l].map(fmt_num).unwrap_or_default();
            let delta = e.delta.map(fmt_num).unwrap_or_default();
            let _ = writeln!(
                out,
                "{SCHEMA_VERSION},{},{},{},{mean},{},{delta}",
                e.factor,
                l + 1,
                f.levels[l],
                e.failures[l]
            );
        }
    }
    out
}

pub fn signal_to_noise_csv(sn: &[(usize, f64)]) -> String {
    let mut out = String::from("schema_version,inner_row,sn_db\n");
    for (row, v) in sn {
        let _ = writeln!(out, "{SCHEMA_VERSION},{},{v}", row + 1);
    }
    out
}

pub fn main_effects_table(effects: &[MainEffect]) -> String {
    let mut out = format!(
        "{:<22} {:>10} {:>10} {:>10} {:>10} {:>9}\n",
        "factor", "level 1", "level 2", "level 3", "delta", "failures"
    );
    for e in effects {
        let cell = |m: Option<f64>| m.map(|v| format!("{v:.2}")).unwrap_or_else(|| "no data".into());
        let _ = writeln!(
            out,
            "{:<22} {:>10} {:>10} {:>10} {:>10} {:>9}",
            e.factor,
            cell(e.level_means[0]),
            cell(e.level_means[1]),
            cell(e.level_means[2]),
            cell(e.delta),
            e.failures.iter().sum::<usize>()
        );
    }
    out
}
