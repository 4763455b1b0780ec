//! Fixtures shared by the simulation benchmarks.

use r2p2_core::config::{RunConfig, TerrainKind};
use r2p2_core::physics::WorldState;
use r2p2_core::ControlCommand;

/// Default mission on the given terrain with a short time ceiling.
pub fn short_mission(terrain: TerrainKind, max_time_s: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.terrain.kind = terrain;
    c.mission.max_time_s = max_time_s;
    c
}

/// Nominal six-robot world with every robot pushing gently inward.
pub fn pushing_world() -> (WorldState, Vec<ControlCommand>) {
    let cfg = RunConfig::default();
    let world = cfg.build_world();
    let commands = vec![ControlCommand::new(0.05, 0.0); world.robots.len()];
    (world, commands)
}
