//! Single dynamic movement primitives: a second-order attractor toward a
//! goal position plus a phase-driven forcing term shaped by Gaussian basis
//! functions,
//!
//! ```text
//!   τ ż = α_z (β_z (y_goal − y) − z) + f(s)
//!   τ ẏ = z
//!   τ ṡ = −α_s s
//! ```
//!
//! with `f(s) = s · Σ w_i ψ_i(s) / Σ ψ_i(s)` and
//! `ψ_i(s) = exp(−h_i (s − c_i)²)`. Weights are learned from a single
//! demonstration by locally weighted regression and primitives are rolled
//! out to new start/goal pairs with per-axis amplitude rescaling and a
//! horizontal rotation that aligns the demonstrated motion direction with
//! the requested one.

use crate::sequencer::ScalingParams;
use crate::{Vec2, Vec3};
use thiserror::Error;

/// Denominator guard for the normalized forcing function.
const FORCING_NORM_EPS: f64 = 1e-10;
/// Ridge term in the locally weighted regression denominator.
const REGRESSION_EPS: f64 = 1e-8;
/// Below this amplitude (meters) an axis is treated as degenerate: its
/// rescale factor is 1 so the demo's absolute shape survives.
const AMPLITUDE_EPS: f64 = 1e-6;
/// Settle target for position residual and scaled velocity after the
/// nominal horizon.
const SETTLE_TOL: f64 = 1e-8;
/// Settle phase is capped at this multiple of the nominal step count.
const SETTLE_CAP_FACTOR: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DmpError {
    #[error("basis count must be at least 2, got {0}")]
    InvalidBasisCount(usize),
    #[error("gain {name} must be positive and finite, got {value}")]
    InvalidGains { name: &'static str, value: f64 },
    #[error("demonstration needs at least 3 points, got {0}")]
    DemoTooShort(usize),
    #[error("demonstration produced a non-finite derivative at sample {0}")]
    DegenerateDemo(usize),
    #[error("dt = {dt} is too coarse for tau = {tau} (limit {limit})")]
    StepTooCoarse { dt: f64, tau: f64, limit: f64 },
    #[error("integration diverged at step {0}")]
    NumericalDivergence(usize),
    #[error("trajectory invalid: {0}")]
    InvalidTrajectory(&'static str),
    #[error("weights matrix must be {expected}x3 finite, got {got} rows")]
    InvalidWeights { expected: usize, got: usize },
}

/// Gains of the attractor and canonical systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmpGains {
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_s: f64,
    /// Temporal scaling factor in seconds; for learned primitives this is
    /// the demonstration duration.
    pub tau: f64,
}

impl DmpGains {
    pub fn new(alpha_z: f64, beta_z: f64, alpha_s: f64, tau: f64) -> Result<Self, DmpError> {
        let g = Self { alpha_z, beta_z, alpha_s, tau };
        g.validate()?;
        Ok(g)
    }

    /// Gains with `beta_z = alpha_z / 4` (critical damping).
    pub fn critically_damped(alpha_z: f64, alpha_s: f64, tau: f64) -> Result<Self, DmpError> {
        Self::new(alpha_z, alpha_z / 4.0, alpha_s, tau)
    }

    pub fn validate(&self) -> Result<(), DmpError> {
        for (name, value) in [
            ("alpha_z", self.alpha_z),
            ("beta_z", self.beta_z),
            ("alpha_s", self.alpha_s),
            ("tau", self.tau),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DmpError::InvalidGains { name, value });
            }
        }
        Ok(())
    }

    /// Same gains with a different temporal scaling factor.
    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }
}

impl Default for DmpGains {
    fn default() -> Self {
        Self { alpha_z: 25.0, beta_z: 6.25, alpha_s: 3.0, tau: 1.0 }
    }
}

/// Gaussian basis functions over the phase variable.
///
/// Centers decrease strictly from 1 toward 0 (the phase decays), widths are
/// positive. Centers are placed at `exp(−alpha_s · i/(N−1))` so they are
/// uniform in demonstration time; widths `N^1.5 / c_i²` give overlapping
/// coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl BasisSet {
    /// Builds a basis set from explicit centers and widths (used when
    /// loading a primitive dictionary file).
    pub fn from_parts(centers: Vec<f64>, widths: Vec<f64>) -> Result<Self, DmpError> {
        if centers.len() < 2 || centers.len() != widths.len() {
            return Err(DmpError::InvalidBasisCount(centers.len()));
        }
        if centers.iter().any(|c| !(c.is_finite() && *c > 0.0 && *c <= 1.0)) {
            return Err(DmpError::InvalidTrajectory("basis centers must lie in (0, 1]"));
        }
        if centers.windows(2).any(|pair| pair[1] >= pair[0]) {
            return Err(DmpError::InvalidTrajectory("basis centers must strictly decrease"));
        }
        if widths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(DmpError::InvalidTrajectory("basis widths must be positive and finite"));
        }
        Ok(Self { centers, widths })
    }

    pub fn count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    fn kernel(&self, i: usize, s: f64) -> f64 {
        let d = s - self.centers[i];
        (-self.widths[i] * d * d).exp()
    }
}

/// Places `count` Gaussian basis functions for a canonical system with decay
/// rate `alpha_s`. `tau` is validated but does not enter the placement: the
/// phase is uniform in normalized time, so the temporal scale cancels.
pub fn make_basis(count: usize, alpha_s: f64, tau: f64) -> Result<BasisSet, DmpError> {
    if count < 2 {
        return Err(DmpError::InvalidBasisCount(count));
    }
    if !(alpha_s.is_finite() && alpha_s > 0.0) {
        return Err(DmpError::InvalidGains { name: "alpha_s", value: alpha_s });
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(DmpError::InvalidGains { name: "tau", value: tau });
    }
    let n = count as f64;
    let centers: Vec<f64> = (0..count).map(|i| (-alpha_s * i as f64 / (n - 1.0)).exp()).collect();
    let widths: Vec<f64> = centers.iter().map(|c| n.powf(1.5) / (c * c)).collect();
    BasisSet::from_parts(centers, widths)
}

/// A learned movement primitive: basis weights per spatial axis plus the
/// demonstration endpoints the weights were fitted against.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub keyword: String,
    pub gains: DmpGains,
    pub basis: BasisSet,
    /// One row per basis function, one column per axis (x, y, z).
    pub weights: Vec<[f64; 3]>,
    pub demo_start: Vec3,
    pub demo_goal: Vec3,
}

impl Primitive {
    pub fn new(
        keyword: impl Into<String>,
        gains: DmpGains,
        basis: BasisSet,
        weights: Vec<[f64; 3]>,
        demo_start: Vec3,
        demo_goal: Vec3,
    ) -> Result<Self, DmpError> {
        gains.validate()?;
        if weights.len() != basis.count() {
            return Err(DmpError::InvalidWeights { expected: basis.count(), got: weights.len() });
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(DmpError::InvalidTrajectory("weights must be finite"));
        }
        if !(demo_start.iter().all(|v| v.is_finite()) && demo_goal.iter().all(|v| v.is_finite())) {
            return Err(DmpError::InvalidTrajectory("demo endpoints must be finite"));
        }
        Ok(Self { keyword: keyword.into(), gains, basis, weights, demo_start, demo_goal })
    }

    /// Zero-weight primitive: a smooth point-to-point attractor used for
    /// translation segments.
    pub fn translation(gains: DmpGains) -> Self {
        let basis = make_basis(2, gains.alpha_s, gains.tau).expect("static basis parameters");
        Self {
            keyword: "translation".to_owned(),
            gains,
            weights: vec![[0.0; 3]; basis.count()],
            basis,
            demo_start: Vec3::zeros(),
            demo_goal: Vec3::zeros(),
        }
    }
}

/// Integration state of a single DMP: the phase variable plus position and
/// scaled velocity. The phase stays in (0, 1] and decreases strictly over a
/// rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub s: f64,
    pub y: Vec3,
    /// Scaled velocity z = τ·ẏ.
    pub z: Vec3,
}

impl PhaseState {
    /// Start-of-rollout state: at rest at `y0` with the phase at 1.
    pub fn initial(y0: Vec3) -> Self {
        Self { s: 1.0, y: y0, z: Vec3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
            && self.y.iter().all(|v| v.is_finite())
            && self.z.iter().all(|v| v.is_finite())
    }
}

/// A time-stamped position sequence: uniform timestep `dt`, points in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    points: Vec<Vec3>,
}

impl Trajectory {
    pub fn new(dt: f64, points: Vec<Vec3>) -> Result<Self, DmpError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(DmpError::InvalidTrajectory("dt must be positive and finite"));
        }
        if points.is_empty() {
            return Err(DmpError::InvalidTrajectory("trajectory must have at least one point"));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(DmpError::InvalidTrajectory("trajectory coordinates must be finite"));
        }
        Ok(Self { dt, points })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Duration in seconds, `(len − 1) · dt`.
    pub fn duration(&self) -> f64 {
        (self.points.len() - 1) as f64 * self.dt
    }

    pub fn first(&self) -> Vec3 {
        self.points[0]
    }

    pub fn last(&self) -> Vec3 {
        *self.points.last().expect("non-empty by construction")
    }

    /// Time stamp of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

/// Normalized forcing term of the primitive at phase `s`:
/// per axis, `f_d = s · Σ_i w_{i,d} ψ_i(s) / (Σ_i ψ_i(s) + ε)`.
pub fn forcing(primitive: &Primitive, s: f64) -> Vec3 {
    debug_assert!(s > 0.0 && s <= 1.0, "phase out of range: {s}");
    let basis = &primitive.basis;
    let mut num = [0.0; 3];
    let mut den = 0.0;
    for (i, row) in primitive.weights.iter().enumerate() {
        let psi = basis.kernel(i, s);
        den += psi;
        for d in 0..3 {
            num[d] += row[d] * psi;
        }
    }
    let scale = s / (den + FORCING_NORM_EPS);
    Vec3::new(num[0] * scale, num[1] * scale, num[2] * scale)
}

/// Fits a primitive to a single demonstration by locally weighted
/// regression. The temporal scaling factor is set to the demonstration
/// duration; the provided `gains.tau` is ignored.
pub fn learn_from_demo(
    demo: &Trajectory,
    gains: DmpGains,
    basis_count: usize,
    keyword: impl Into<String>,
) -> Result<Primitive, DmpError> {
    let n = demo.len();
    if n < 3 {
        return Err(DmpError::DemoTooShort(n));
    }
    let dt = demo.dt();
    let tau = demo.duration();
    let gains = gains.with_tau(tau);
    gains.validate()?;
    let basis = make_basis(basis_count, gains.alpha_s, tau)?;
    let pts = demo.points();

    // Velocity: central differences inside, one-sided at the ends.
    // Acceleration: second differences, shifted stencils at the ends.
    let mut vel = vec![Vec3::zeros(); n];
    let mut acc = vec![Vec3::zeros(); n];
    for i in 0..n {
        vel[i] = if i == 0 {
            (pts[1] - pts[0]) / dt
        } else if i == n - 1 {
            (pts[n - 1] - pts[n - 2]) / dt
        } else {
            (pts[i + 1] - pts[i - 1]) / (2.0 * dt)
        };
        let j = i.clamp(1, n - 2);
        acc[i] = (pts[j + 1] - 2.0 * pts[j] + pts[j - 1]) / (dt * dt);
    }
    for i in 0..n {
        if !(vel[i].iter().all(|v| v.is_finite()) && acc[i].iter().all(|v| v.is_finite())) {
            return Err(DmpError::DegenerateDemo(i));
        }
    }

    let start = pts[0];
    let goal = pts[n - 1];

    // Target forcing per sample: f = τ·ż − α_z(β_z(goal − y) − z) with
    // z = τ·ẏ, ż = τ·ÿ; phase s(t) = exp(−α_s t / τ).
    let mut phase = vec![0.0; n];
    let mut target = vec![[0.0; 3]; n];
    for i in 0..n {
        let t = i as f64 * dt;
        phase[i] = (-gains.alpha_s * t / tau).exp();
        let z = tau * vel[i];
        let zdot = tau * acc[i];
        let f = tau * zdot - gains.alpha_z * (gains.beta_z * (goal - pts[i]) - z);
        target[i] = [f.x, f.y, f.z];
    }

    // w_{i,d} = Σ_t ψ_i s_t f_d / (Σ_t ψ_i s_t² + ε), per basis and axis.
    let mut weights = vec![[0.0; 3]; basis.count()];
    for (k, row) in weights.iter_mut().enumerate() {
        let mut num = [0.0; 3];
        let mut den = 0.0;
        for i in 0..n {
            let psi = basis.kernel(k, phase[i]);
            let ps = psi * phase[i];
            den += ps * phase[i];
            for d in 0..3 {
                num[d] += ps * target[i][d];
            }
        }
        for d in 0..3 {
            row[d] = num[d] / (den + REGRESSION_EPS);
        }
    }

    Primitive::new(keyword, gains, basis, weights, start, goal)
}

/// Rescaling and horizontal re-orientation applied to the forcing term when
/// a primitive is rolled out to endpoints other than its demonstration's.
///
/// The forcing is decomposed in the demo's horizontal frame (along the
/// demonstrated motion direction, across it, vertical), scaled by the
/// ratio of new to demonstrated amplitude per local axis (factor 1 when the
/// demonstrated amplitude is degenerate), and re-assembled in the frame of
/// the requested motion direction. When either horizontal displacement is
/// degenerate the rotation is the identity.
struct ForcingTransform {
    demo_along: Vec2,
    demo_across: Vec2,
    new_along: Vec2,
    new_across: Vec2,
    k_along: f64,
    k_vertical: f64,
}

impl ForcingTransform {
    fn new(primitive: &Primitive, scaling: &ScalingParams) -> Self {
        let d = primitive.demo_goal - primitive.demo_start;
        let n = scaling.y_goal - scaling.y0;
        let dh = Vec2::new(d.x, d.y);
        let nh = Vec2::new(n.x, n.y);
        let demo_along =
            if dh.norm() >= AMPLITUDE_EPS { dh / dh.norm() } else { Vec2::new(1.0, 0.0) };
        let new_along = if dh.norm() >= AMPLITUDE_EPS && nh.norm() >= AMPLITUDE_EPS {
            nh / nh.norm()
        } else {
            demo_along
        };
        let k_along = if dh.norm() >= AMPLITUDE_EPS { nh.norm() / dh.norm() } else { 1.0 };
        let k_vertical = if d.z.abs() >= AMPLITUDE_EPS { n.z / d.z } else { 1.0 };
        Self {
            demo_along,
            demo_across: perp(demo_along),
            new_along,
            new_across: perp(new_along),
            k_along,
            k_vertical,
        }
    }

    fn apply(&self, f: Vec3) -> Vec3 {
        let fh = Vec2::new(f.x, f.y);
        let along = fh.dot(&self.demo_along) * self.k_along;
        let across = fh.dot(&self.demo_across);
        let out = self.new_along * along + self.new_across * across;
        Vec3::new(out.x, out.y, f.z * self.k_vertical)
    }
}

fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Integrates the primitive from `scaling.y0` toward `scaling.y_goal`.
///
/// RK2 midpoint steps over the nominal horizon `ceil(τ/dt)`, then
/// attractor-only settle steps (forcing cut off) until position and scaled
/// velocity residuals drop below 1e-8, capped at three times the nominal
/// horizon. The first sample is exactly `scaling.y0`.
pub fn rollout(
    primitive: &Primitive,
    scaling: &ScalingParams,
    dt: f64,
    tau_override: Option<f64>,
) -> Result<Trajectory, DmpError> {
    let gains = primitive.gains;
    let tau = tau_override.unwrap_or(gains.tau);
    if !(tau.is_finite() && tau > 0.0) {
        return Err(DmpError::InvalidGains { name: "tau", value: tau });
    }
    let limit = (tau / 20.0).min(2.0 * tau / gains.alpha_z).min(tau / gains.alpha_s);
    if !(dt.is_finite() && dt > 0.0) || dt > limit {
        return Err(DmpError::StepTooCoarse { dt, tau, limit });
    }

    let xform = ForcingTransform::new(primitive, scaling);
    let goal = scaling.y_goal;
    let nominal = (tau / dt).ceil() as usize;
    let cap = nominal + SETTLE_CAP_FACTOR * nominal;

    let mut state = PhaseState::initial(scaling.y0);
    let mut points = Vec::with_capacity(nominal + 2);
    points.push(state.y);

    let derivative = |st: &PhaseState, forced: bool| {
        let f = if forced { xform.apply(forcing(primitive, st.s)) } else { Vec3::zeros() };
        PhaseState {
            s: -gains.alpha_s * st.s / tau,
            y: st.z / tau,
            z: (gains.alpha_z * (gains.beta_z * (goal - st.y) - st.z) + f) / tau,
        }
    };

    for step in 0..cap {
        let forced = step < nominal;
        let k1 = derivative(&state, forced);
        let mid = PhaseState {
            s: state.s + 0.5 * dt * k1.s,
            y: state.y + 0.5 * dt * k1.y,
            z: state.z + 0.5 * dt * k1.z,
        };
        let k2 = derivative(&mid, forced);
        state.s += dt * k2.s;
        state.y += dt * k2.y;
        state.z += dt * k2.z;

        if !state.is_finite() {
            return Err(DmpError::NumericalDivergence(step));
        }
        points.push(state.y);

        if !forced && (goal - state.y).norm() < SETTLE_TOL && state.z.norm() < SETTLE_TOL {
            break;
        }
    }

    Trajectory::new(dt, points)
}

/// Rollout that also records the phase variable at every sample, for tests
/// of the canonical system.
#[doc(hidden)]
pub fn rollout_traced(
    primitive: &Primitive,
    scaling: &ScalingParams,
    dt: f64,
    tau_override: Option<f64>,
) -> Result<(Trajectory, Vec<f64>), DmpError> {
    let gains = primitive.gains;
    let tau = tau_override.unwrap_or(gains.tau);
    let traj = rollout(primitive, scaling, dt, tau_override)?;
    // The phase recursion is position-independent; reproduce it per sample.
    let mut s = 1.0;
    let mut trace = Vec::with_capacity(traj.len());
    trace.push(s);
    for _ in 1..traj.len() {
        let k1s = -gains.alpha_s * s / tau;
        let sm = s + 0.5 * dt * k1s;
        s += dt * (-gains.alpha_s * sm / tau);
        trace.push(s);
    }
    Ok((traj, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos;
    use approx::assert_abs_diff_eq;

    fn scaling(y0: Vec3, y_goal: Vec3) -> ScalingParams {
        ScalingParams { y0, y_goal }
    }

    #[test]
    fn basis_count_two_endpoints() {
        let b = make_basis(2, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(b.centers()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.centers()[1], (-1.0_f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn basis_count_three_matches_formula() {
        let b = make_basis(3, 1.0, 1.0).unwrap();
        let expected = [1.0, (-0.5_f64).exp(), (-1.0_f64).exp()];
        for (c, e) in b.centers().iter().zip(expected) {
            assert_abs_diff_eq!(*c, e, epsilon = 1e-15);
        }
        for (h, c) in b.widths().iter().zip(b.centers()) {
            assert_abs_diff_eq!(*h, 3.0_f64.powf(1.5) / (c * c), epsilon = 1e-12);
        }
    }

    #[test]
    fn basis_count_one_rejected() {
        assert!(matches!(make_basis(1, 1.0, 1.0), Err(DmpError::InvalidBasisCount(1))));
    }

    #[test]
    fn forcing_zero_weights_is_zero() {
        let p = Primitive::translation(DmpGains::default());
        for s in [1.0, 0.5, 0.01] {
            assert_eq!(forcing(&p, s), Vec3::zeros());
        }
    }

    // Hand evaluation with one active kernel: c=1, h=1, w=(2,0,0) at s=1
    // gives f=(2,0,0) up to the normalizer guard. The second kernel is
    // pushed far out with a huge width so it contributes nothing.
    #[test]
    fn forcing_single_kernel_hand_value() {
        let basis = BasisSet::from_parts(vec![1.0, 0.01], vec![1.0, 1e9]).unwrap();
        let p = Primitive::new(
            "t",
            DmpGains::default(),
            basis,
            vec![[2.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            Vec3::zeros(),
            Vec3::zeros(),
        )
        .unwrap();
        let f = forcing(&p, 1.0);
        assert_abs_diff_eq!(f.x, 2.0, epsilon = 1e-9);
        assert_eq!(f.y, 0.0);
        assert_eq!(f.z, 0.0);
    }

    #[test]
    fn forcing_vanishes_with_phase() {
        let demo = demos::generate(demos::DemoStyle::Sawing, 1e-3).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 30, "sawing").unwrap();
        let f1 = forcing(&p, 1.0).norm();
        let f0 = forcing(&p, 1e-6).norm();
        assert!(f1 > 0.0);
        assert!(f0 < 1e-4 * f1, "f(1e-6)={f0}, f(1)={f1}");
    }

    #[test]
    fn learn_constant_demo_gives_zero_weights() {
        let pts = vec![Vec3::new(0.1, 0.2, 0.0); 100];
        let demo = Trajectory::new(1e-2, pts).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 20, "hold").unwrap();
        for row in &p.weights {
            for w in row {
                assert!(w.abs() < 1e-9, "weight {w} not ~0");
            }
        }
    }

    #[test]
    fn learn_two_point_demo_rejected() {
        let demo = Trajectory::new(0.1, vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        let err = learn_from_demo(&demo, DmpGains::default(), 10, "x").unwrap_err();
        assert!(matches!(err, DmpError::DemoTooShort(2)));
    }

    fn rmse_per_axis(a: &Trajectory, b: &Trajectory) -> [f64; 3] {
        let n = a.len().min(b.len());
        let mut acc = [0.0; 3];
        for i in 0..n {
            let d = a.points()[i] - b.points()[i];
            acc[0] += d.x * d.x;
            acc[1] += d.y * d.y;
            acc[2] += d.z * d.z;
        }
        acc.map(|v| (v / n as f64).sqrt())
    }

    #[test]
    fn min_jerk_round_trip_under_two_percent() {
        let demo = demos::min_jerk(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), 1.0, 1e-3).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 50, "mj").unwrap();
        let traj = rollout(&p, &scaling(p.demo_start, p.demo_goal), 1e-3, None).unwrap();
        let rmse = rmse_per_axis(&traj, &demo);
        assert!(rmse[0] < 0.02, "x RMSE {} over 2% of unit amplitude", rmse[0]);
    }

    #[test]
    fn rollout_zero_weights_converges() {
        let gains = DmpGains { alpha_z: 25.0, beta_z: 6.25, alpha_s: 3.0, tau: 1.0 };
        let p = Primitive::translation(gains);
        let sc = scaling(Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0));
        let traj = rollout(&p, &sc, 1e-3, None).unwrap();
        assert_eq!(traj.first(), Vec3::zeros());
        assert!((traj.last() - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-3);
    }

    #[test]
    fn rollout_fixed_point_stays_put() {
        let p = Primitive::translation(DmpGains::default());
        let at = Vec3::new(0.1, 0.2, 0.3);
        let traj = rollout(&p, &scaling(at, at), 1e-3, None).unwrap();
        let max_dev = traj.points().iter().map(|q| (q - at).norm()).fold(0.0, f64::max);
        assert!(max_dev < 1e-12, "deviation {max_dev}");
    }

    #[test]
    fn rollout_rejects_coarse_step() {
        let p = Primitive::translation(DmpGains::default());
        let err = rollout(&p, &scaling(Vec3::zeros(), Vec3::zeros()), 0.2, None).unwrap_err();
        assert!(matches!(err, DmpError::StepTooCoarse { .. }));
    }

    #[test]
    fn rollout_is_deterministic() {
        let demo = demos::generate(demos::DemoStyle::Sawing, 1e-3).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 50, "sawing").unwrap();
        let sc = scaling(Vec3::new(0.05, 0.05, 0.07), Vec3::new(0.2, 0.1, 0.0));
        let a = rollout(&p, &sc, 1e-3, None).unwrap();
        let b = rollout(&p, &sc, 1e-3, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phase_strictly_decreasing_and_positive() {
        let demo = demos::generate(demos::DemoStyle::Straight, 1e-3).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 30, "straight").unwrap();
        let sc = scaling(p.demo_start, p.demo_goal);
        let (_, trace) = rollout_traced(&p, &sc, 1e-3, None).unwrap();
        for pair in trace.windows(2) {
            assert!(pair[1] > 0.0);
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn settle_phase_lands_on_goal() {
        let p = Primitive::translation(DmpGains::default());
        let sc = scaling(Vec3::zeros(), Vec3::new(0.3, 0.1, 0.0));
        let traj = rollout(&p, &sc, 1e-3, None).unwrap();
        assert!((traj.last() - sc.y_goal).norm() < 1e-7);
    }

    #[test]
    fn rotation_aligns_with_new_direction() {
        // Learn a sawing motion along +x, roll it out along +y; the
        // oscillation must rotate with the segment.
        let demo = demos::generate(demos::DemoStyle::Sawing, 1e-3).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 50, "sawing").unwrap();
        let along_y = scaling(Vec3::new(0.1, 0.0, 0.07), Vec3::new(0.1, 0.1, 0.0));
        let traj = rollout(&p, &along_y, 1e-3, None).unwrap();
        // x stays near 0.1 while y progresses: oscillation now lives on y.
        let max_x_dev = traj.points().iter().map(|q| (q.x - 0.1).abs()).fold(0.0, f64::max);
        let max_y_span = traj.points().iter().map(|q| q.y).fold(f64::MIN, f64::max);
        assert!(max_x_dev < 0.01, "x deviation {max_x_dev}");
        assert!(max_y_span > 0.09);
    }

    proptest::proptest! {
        // Rollouts from any in-range endpoints start exactly at y0 and
        // settle onto the goal.
        #[test]
        fn rollout_starts_exact_and_settles(
            x0 in 0.0..0.3f64, y0 in 0.0..0.18f64, z0 in 0.0..0.15f64,
            x1 in 0.0..0.3f64, y1 in 0.0..0.18f64, z1 in 0.0..0.15f64,
        ) {
            let p = Primitive::translation(DmpGains::default());
            let sc = scaling(Vec3::new(x0, y0, z0), Vec3::new(x1, y1, z1));
            let traj = rollout(&p, &sc, 0.02, None).unwrap();
            proptest::prop_assert_eq!(traj.first(), sc.y0);
            proptest::prop_assert!((traj.last() - sc.y_goal).norm() < 1e-6);
        }
    }

    #[test]
    fn translation_equivariance_of_rollout() {
        let demo = demos::generate(demos::DemoStyle::Sawing, 1e-3).unwrap();
        let p = learn_from_demo(&demo, DmpGains::default(), 50, "sawing").unwrap();
        let v = Vec3::new(0.03, -0.02, 0.01);
        let a = scaling(Vec3::new(0.05, 0.05, 0.07), Vec3::new(0.2, 0.1, 0.0));
        let b = scaling(a.y0 + v, a.y_goal + v);
        let ta = rollout(&p, &a, 1e-3, None).unwrap();
        let tb = rollout(&p, &b, 1e-3, None).unwrap();
        assert_eq!(ta.len(), tb.len());
        let max_dev = ta
            .points()
            .iter()
            .zip(tb.points())
            .map(|(x, y)| (x + v - y).norm())
            .fold(0.0, f64::max);
        assert!(max_dev < 1e-9, "equivariance deviation {max_dev}");
    }
}
