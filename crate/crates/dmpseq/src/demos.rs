//! Parametric demonstration trajectories the built-in primitives are
//! learned from. Each style is a smooth curve designed by hand: cutting
//! styles descend from hover height to the support surface, the icing style
//! descends and then draws a lateral line. All styles start and end at rest
//! so a primitive fitted to them reproduces the motion from a standing
//! start.

use crate::dmp::{DmpError, Trajectory};
use crate::Vec3;

/// Hover height of the cutting demos, meters.
const CUT_START_HEIGHT: f64 = 0.07;
/// Horizontal progression of the sawing demo, meters.
const SAW_LENGTH: f64 = 0.10;
/// Peak sawing oscillation amplitude, meters.
const SAW_AMPLITUDE: f64 = 0.02;
/// Number of saw strokes over the demo.
const SAW_STROKES: f64 = 4.0;

/// Built-in demonstration styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoStyle {
    /// Straight downward cut: vertical descent, no horizontal motion.
    Straight,
    /// Sawing cut: forward progression with an oscillation riding on it
    /// while descending.
    Sawing,
    /// Downward cut with a slight forward push, for soft objects.
    Downward,
    /// Forward cut: a diagonal push through the object.
    Forward,
    /// Icing line: descend to the surface, then draw a lateral line.
    IcingLine,
}

impl DemoStyle {
    pub const ALL: [DemoStyle; 5] = [
        DemoStyle::Straight,
        DemoStyle::Sawing,
        DemoStyle::Downward,
        DemoStyle::Forward,
        DemoStyle::IcingLine,
    ];

    /// Dictionary keyword conventionally used for this style.
    pub fn keyword(self) -> &'static str {
        match self {
            DemoStyle::Straight => "straight",
            DemoStyle::Sawing => "sawing",
            DemoStyle::Downward => "downward",
            DemoStyle::Forward => "forward",
            DemoStyle::IcingLine => "line",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "straight" => Some(DemoStyle::Straight),
            "sawing" => Some(DemoStyle::Sawing),
            "downward" => Some(DemoStyle::Downward),
            "forward" => Some(DemoStyle::Forward),
            "line" | "icing" | "icing-line" => Some(DemoStyle::IcingLine),
            _ => None,
        }
    }
}

/// Minimum-jerk interpolation factor: 10u³ − 15u⁴ + 6u⁵.
pub fn min_jerk_blend(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// Minimum-jerk point-to-point trajectory over `duration` seconds.
pub fn min_jerk(start: Vec3, goal: Vec3, duration: f64, dt: f64) -> Result<Trajectory, DmpError> {
    sample(duration, dt, |u| start + (goal - start) * min_jerk_blend(u))
}

/// One-period raised-cosine oscillation on the x axis: starts and ends at
/// rest at the origin, peaks at `amplitude`.
pub fn raised_cosine(amplitude: f64, duration: f64, dt: f64) -> Result<Trajectory, DmpError> {
    sample(duration, dt, |u| {
        Vec3::new(amplitude * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * u).cos()), 0.0, 0.0)
    })
}

/// Generates the canonical 1-second demonstration for a built-in style.
pub fn generate(style: DemoStyle, dt: f64) -> Result<Trajectory, DmpError> {
    let duration = 1.0;
    match style {
        DemoStyle::Straight => {
            min_jerk(Vec3::new(0.0, 0.0, CUT_START_HEIGHT), Vec3::zeros(), duration, dt)
        }
        DemoStyle::Sawing => sample(duration, dt, |u| {
            let envelope = (std::f64::consts::PI * u).sin();
            let x = SAW_LENGTH * min_jerk_blend(u)
                + SAW_AMPLITUDE * (2.0 * std::f64::consts::PI * SAW_STROKES * u).sin() * envelope;
            Vec3::new(x, 0.0, CUT_START_HEIGHT * (1.0 - min_jerk_blend(u)))
        }),
        DemoStyle::Downward => {
            min_jerk(Vec3::new(0.0, 0.0, CUT_START_HEIGHT), Vec3::new(0.02, 0.0, 0.0), duration, dt)
        }
        DemoStyle::Forward => {
            min_jerk(Vec3::new(0.0, 0.0, CUT_START_HEIGHT), Vec3::new(0.08, 0.0, 0.0), duration, dt)
        }
        DemoStyle::IcingLine => sample(duration, dt, |u| {
            let descend = min_jerk_blend((u / 0.3).min(1.0));
            let draw = min_jerk_blend(((u - 0.25) / 0.75).clamp(0.0, 1.0));
            Vec3::new(0.10 * draw, 0.0, 0.03 * (1.0 - descend))
        }),
    }
}

fn sample(duration: f64, dt: f64, f: impl Fn(f64) -> Vec3) -> Result<Trajectory, DmpError> {
    if !(dt.is_finite() && dt > 0.0 && duration.is_finite() && duration > 0.0) {
        return Err(DmpError::InvalidTrajectory("demo duration and dt must be positive"));
    }
    let steps = (duration / dt).round() as usize;
    if steps < 2 {
        return Err(DmpError::DemoTooShort(steps + 1));
    }
    let points = (0..=steps).map(|i| f(i as f64 / steps as f64)).collect();
    Trajectory::new(dt, points)
}
