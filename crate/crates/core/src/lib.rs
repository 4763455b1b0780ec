//! Simulation and control core for decentralized multi-robot box transport.

pub mod command;
pub mod config;
pub mod controller;
pub mod error;
pub mod experiment;
pub mod formation;
pub mod geometry;
pub mod mission;
pub mod physics;
pub mod record;
pub mod vlf;

pub use command::ControlCommand;
pub use error::*;
pub use geometry::{BoxFrameCoord, Pose2D, Twist2D, Vec2};
