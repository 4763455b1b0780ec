//! Whole-mission scenarios driven through the config layer.

use r2p2_core::config::{RunConfig, TerrainKind};
use r2p2_core::mission::{ControllerKind, Outcome};

fn scenario(controller: ControllerKind, mass: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.terrain.kind = TerrainKind::Flat;
    c.terrain.mu_dynamic = 0.1;
    c.box_.mass_kg = mass;
    c.mission.controller = controller;
    c
}

#[test]
fn r2p2_reaches_the_diagonal_goal() {
    let rec = scenario(ControllerKind::R2p2, 2.0).run();
    assert_eq!(rec.outcome, Outcome::Success, "{:?}", rec.diagnostic);
    let last = rec.final_box_pose().unwrap();
    let goal = (45f64.to_radians().cos(), 45f64.to_radians().sin());
    assert!(((last.x - goal.0).powi(2) + (last.y - goal.1).powi(2)).sqrt() <= 0.2);
}

#[test]
fn vlf_loses_a_light_box_on_the_diagonal() {
    let rec = scenario(ControllerKind::Vlf, 0.05).run();
    assert!(matches!(rec.outcome, Outcome::FailureB(_)), "{:?}", rec.outcome);
    assert!(rec.diagnostic.is_some());
}

#[test]
fn zero_ceiling_fails_immediately() {
    let mut c = scenario(ControllerKind::R2p2, 2.0);
    c.mission.max_time_s = 0.0;
    let rec = c.run();
    assert_eq!(rec.outcome, Outcome::FailureA);
    assert_eq!(rec.control_steps, 0);
    assert_eq!(rec.mission_time, 0.0);
}

#[test]
fn mission_time_is_steps_times_control_period() {
    let rec = scenario(ControllerKind::R2p2, 0.5).run();
    assert_eq!(rec.mission_time, rec.control_steps as f64 * 0.05);
    assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn intermediate_waypoints_are_visited_in_order() {
    let mut c = scenario(ControllerKind::R2p2, 0.5);
    c.mission.waypoints_m = vec![[0.6, 0.0], [0.6, 0.6]];
    let rec = c.run();
    assert_eq!(rec.outcome, Outcome::Success, "{:?}", rec.diagnostic);
    let first_switch = rec.samples.iter().position(|s| s.waypoint == 1).expect("advances");
    let p = rec.samples[first_switch].box_pose;
    assert!(((p.x - 0.6).powi(2) + p.y.powi(2)).sqrt() <= 0.15 + 0.02);
    assert!(rec.samples[first_switch..].iter().all(|s| s.waypoint == 1));
}

#[test]
fn same_config_gives_identical_records() {
    let mut c = scenario(ControllerKind::R2p2, 2.0);
    c.robots.spawn_jitter_m = 0.01;
    c.seed = 11;
    assert_eq!(c.run(), c.run());
    let mut other = c.clone();
    other.seed = 12;
    assert_ne!(c.run().samples[0], other.run().samples[0]);
}
