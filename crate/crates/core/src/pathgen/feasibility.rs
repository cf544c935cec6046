use crate::geom::FlsSpec;

use super::FlightPathSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityViolation {
    pub fls: usize,
    /// Frame the FLS must reach from the previous one.
    pub frame: usize,
    /// m/s
    pub required_speed: f64,
}

/// Advisory physical checks of a compiled path set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub velocity_violations: Vec<VelocityViolation>,
    /// Fleets needed to cover the span when each flies `beta` seconds,
    /// assuming a charged standby fleet is always ready.
    pub battery_waves: u64,
    pub max_required_speed: f64,
    pub span: f64,
    /// Battery charging time of the model, for context only.
    pub charging_time: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.velocity_violations.is_empty()
    }
}

/// Speed needed between consecutive frames is `distance * fps`; anything
/// above `spec.nu` is a violation.
pub fn check_feasibility(paths: &FlightPathSet, spec: &FlsSpec) -> FeasibilityReport {
    let mut velocity_violations = Vec::new();
    let mut max_required_speed: f64 = 0.0;
    for (fls, states) in paths.frame_states().iter().enumerate() {
        for (k, w) in states.windows(2).enumerate() {
            let (Some(a), Some(b)) = (w[0], w[1]) else { continue };
            let speed = a.coord.distance(&b.coord) * paths.fps;
            max_required_speed = max_required_speed.max(speed);
            if speed > spec.nu {
                velocity_violations.push(VelocityViolation {
                    fls,
                    frame: k + 1,
                    required_speed: speed,
                });
            }
        }
    }
    let span = paths.span();
    FeasibilityReport {
        velocity_violations,
        battery_waves: (span / spec.beta).ceil() as u64,
        max_required_speed,
        span,
        charging_time: spec.omega,
    }
}
