use crate::geometry::{Pose2D, Twist2D, Vec2};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Ground plane properties. The incline is rendered as a constant gravity
/// component on the box along `downhill_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainParams {
    /// Incline magnitude in radians, `[0, π/2)`.
    pub incline: f64,
    pub mu_static: f64,
    pub mu_dynamic: f64,
    pub gravity: f64,
    /// Unit vector pointing down the slope, world frame.
    pub downhill_dir: Vec2,
}

impl TerrainParams {
    pub fn flat(mu_static: f64, mu_dynamic: f64) -> Self {
        Self {
            incline: 0.0,
            mu_static,
            mu_dynamic,
            gravity: STANDARD_GRAVITY,
            downhill_dir: Vec2::new(1.0, 0.0),
        }
    }

    pub fn inclined(incline: f64, downhill_dir: Vec2, mu_static: f64, mu_dynamic: f64) -> Self {
        Self {
            incline,
            mu_static,
            mu_dynamic,
            gravity: STANDARD_GRAVITY,
            downhill_dir: downhill_dir.normalize(),
        }
    }

    /// Normal load per unit mass, `g cos α`.
    pub fn normal_accel(&self) -> f64 {
        self.gravity * self.incline.cos()
    }

    /// In-plane gravity per unit mass, `g sin α` along the downhill direction.
    pub fn slope_accel(&self) -> Vec2 {
        self.downhill_dir * (self.gravity * self.incline.sin())
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.mu_dynamic >= 0.0 && self.mu_dynamic <= self.mu_static) {
            return Err(format!(
                "need 0 <= mu_dynamic <= mu_static, got {} / {}",
                self.mu_dynamic, self.mu_static
            ));
        }
        if !(self.incline.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(format!("incline {} rad is not below 90°", self.incline));
        }
        if !(self.gravity > 0.0) {
            return Err("gravity must be positive".into());
        }
        if (self.downhill_dir.norm() - 1.0).abs() > 1e-9 {
            return Err("downhill direction must be a unit vector".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxBody {
    pub pose: Pose2D,
    pub twist: Twist2D,
    /// Long dimension, laid along the box-frame `w` axis.
    pub length: f64,
    /// Short dimension, laid along the heading.
    pub width: f64,
    pub mass: f64,
    pub inertia: f64,
}

impl BoxBody {
    pub fn new(pose: Pose2D, length: f64, width: f64, mass: f64) -> Self {
        Self {
            pose,
            twist: Twist2D::default(),
            length,
            width,
            mass,
            inertia: mass * (length * length + width * width) / 12.0,
        }
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }

    /// Velocity of a world point rigidly attached to the box.
    pub fn point_velocity(&self, point: Vec2) -> Vec2 {
        let r = point - self.pose.position();
        self.twist.linear() + Vec2::new(-r.y, r.x) * self.twist.omega
    }

    pub fn validate(&self, robot_radius: f64) -> Result<(), String> {
        if !(self.mass > 0.0) {
            return Err(format!("mass must be positive, got {}", self.mass));
        }
        if !(self.width > 0.0 && self.length >= self.width) {
            return Err(format!(
                "need length >= width > 0, got {} x {}",
                self.length, self.width
            ));
        }
        if self.length < 4.0 * robot_radius {
            return Err(format!(
                "long edge {} m cannot hold two robots of radius {} m",
                self.length, robot_radius
            ));
        }
        Ok(())
    }
}

/// Kinematic differential-drive disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotBody {
    pub pose: Pose2D,
    pub radius: f64,
    pub v_cmd: f64,
    pub omega_cmd: f64,
    pub v_limits: (f64, f64),
    pub omega_limits: (f64, f64),
}

/// TurtleBot3 Burger footprint and speed limits.
pub const DEFAULT_ROBOT_RADIUS: f64 = 0.105;
pub const DEFAULT_V_MAX: f64 = 0.22;
pub const DEFAULT_OMEGA_MAX: f64 = 2.84;

impl RobotBody {
    pub fn new(pose: Pose2D, radius: f64, v_max: f64, omega_max: f64) -> Self {
        Self {
            pose,
            radius,
            v_cmd: 0.0,
            omega_cmd: 0.0,
            v_limits: (-v_max, v_max),
            omega_limits: (-omega_max, omega_max),
        }
    }

    /// Stores a command after clamping it to the actuator limits.
    pub fn set_command(&mut self, v: f64, omega: f64) {
        self.v_cmd = v.clamp(self.v_limits.0, self.v_limits.1);
        self.omega_cmd = omega.clamp(self.omega_limits.0, self.omega_limits.1);
    }

    pub fn velocity(&self) -> Vec2 {
        self.pose.heading() * self.v_cmd
    }

    pub fn v_max(&self) -> f64 {
        self.v_limits.1
    }
}
