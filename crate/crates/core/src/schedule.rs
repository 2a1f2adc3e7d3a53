//! Curriculum weight schedules for the two loss terms: label supervision
//! decays toward a floor while the constraint term ramps up linearly.
//!
//! Both are pure functions of the integer epoch, exact at the knot points
//! (the arithmetic is arranged so `alpha(t_decay) == floor` and
//! `beta(t_warm) == 1.0` hold with `==`, not a tolerance).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    /// Epochs over which the label weight decays from 1 toward the floor.
    pub t_decay: u32,
    /// Epochs over which the constraint weight ramps from 0 to 1.
    pub t_warm: u32,
    /// Terminal label weight.
    pub floor: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { t_decay: 100, t_warm: 20, floor: 0.1 }
    }
}

impl ScheduleConfig {
    pub fn new(t_decay: u32, t_warm: u32, floor: f64) -> Self {
        assert!(t_decay > 0, "decay horizon must be positive");
        assert!(t_warm > 0, "warmup horizon must be positive");
        assert!(floor > 0.0 && floor <= 1.0, "floor must lie in (0, 1]");
        Self { t_decay, t_warm, floor }
    }
}

/// Label-supervision weight: `max(floor, 1 - 0.9 * t / t_decay)`.
pub fn curriculum_alpha(t: u32, cfg: &ScheduleConfig) -> f64 {
    let r = t as f64 / cfg.t_decay as f64;
    (1.0 - 0.9 * r).max(cfg.floor)
}

/// Constraint-loss weight: `min(1, t / t_warm)`.
pub fn curriculum_beta(t: u32, cfg: &ScheduleConfig) -> f64 {
    (t as f64 / cfg.t_warm as f64).min(1.0)
}
