//! Radial shooting for positive ground states of `−Δv + λv = g_λ(v)`.
//!
//! The ODE is integrated in the scaled variables x = √λ·r, y = v/v₀ so the
//! decay scale and amplitude are both O(1) for every λ. Alongside (y, y′)
//! the state carries τ = Φ⁻¹(v)/v₀ (via τ′ = y′/φ), so the right-hand side
//! `(λΦ⁻¹(v) − f(Φ⁻¹(v)))/φ(Φ⁻¹(v))` never inverts Φ, the norm integrands,
//! and the sensitivity ∂v/∂v₀ used to decide how far the shot is trustworthy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{find_potential_witness, DualModel, NonlinearityModel, PhiModel};
use crate::numerics::ode::{self, OdeError, OdeSystem, StepControl, Tolerances};
use crate::numerics::{integrate_adaptive, unit_sphere_area, Pchip};

/// Tolerances and domain policy for the shooting method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    /// M in r_max = M/√min(λ, 1).
    pub r_max_multiplier: f64,
    /// Relative width of the final v₀ bracket.
    pub bisection_tol: f64,
    pub ode_rel_tol: f64,
    pub ode_abs_tol: f64,
    pub max_bisection_iters: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            r_max_multiplier: 40.0,
            bisection_tol: 1e-12,
            ode_rel_tol: 1e-10,
            ode_abs_tol: 1e-12,
            max_bisection_iters: 200,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.bisection_tol, self.ode_rel_tol, self.ode_abs_tol]
            .iter()
            .all(|t| *t > 0.0 && t.is_finite());
        if !positive {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.r_max_multiplier >= 20.0) {
            return Err(Error::InvalidConfig(format!(
                "r_max_multiplier = {} must be >= 20",
                self.r_max_multiplier
            )));
        }
        if self.max_bisection_iters == 0 {
            return Err(Error::InvalidConfig("max_bisection_iters must be positive".into()));
        }
        Ok(())
    }

    /// Scales the ODE tolerances by `factor`.
    pub fn with_tol_scale(mut self, factor: f64) -> Self {
        self.ode_rel_tol *= factor;
        self.ode_abs_tol *= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryClass {
    /// v reaches zero at finite r.
    Overshoot,
    /// v′ turns positive while v > 0.
    Undershoot,
    /// v decayed below 10⁻¹⁰·v₀ with v′ < 0 at r_max.
    Converged,
}

const Y: usize = 0;
const P: usize = 1;
const TAU: usize = 2;
const MASS_DUAL: usize = 3;
const MASS_V: usize = 4;
const GRAD: usize = 5;
/// ∫ x^N f(t) τ′ dx / (λv₀), the integrated-by-parts form of ∫ x^{N−1}F(t) dx.
const POT_IBP: usize = 6;
const SENS: usize = 7;
const SENS_P: usize = 8;
const STATE_DIM: usize = 9;

/// Start of the series expansion, in units of the decay scale.
const SERIES_START: f64 = 1e-6;
const UNDERSHOOT_SLOPE: f64 = 1e-14;
const UNDERSHOOT_FLOOR: f64 = 1e-12;
const CONVERGED_LEVEL: f64 = 1e-10;
/// Largest relative error, estimated from the bracket width times ∂v/∂v₀,
/// that a kept grid point may carry.
const CUT_DEVIATION: f64 = 1e-6;
const MAX_ODE_STEPS: usize = 500_000;
/// Acceptance thresholds for a returned profile.
pub const MAX_POHOZAEV: f64 = 1e-5;
pub const MAX_TAIL_FRACTION: f64 = 1e-8;

struct RadialSystem<'a> {
    phi: &'a PhiModel,
    f: &'a NonlinearityModel,
    lambda: f64,
    v0: f64,
    dim: i32,
}

impl RadialSystem<'_> {
    fn new<'a>(model: &'a DualModel, lambda: f64, v0: f64) -> RadialSystem<'a> {
        RadialSystem { phi: model.phi(), f: model.nonlinearity(), lambda, v0, dim: model.dim() as i32 }
    }

    /// Scaled force (λt − f(t))/(λv₀φ(t)) at t = Φ⁻¹(v).
    fn force(&self, t: f64) -> f64 {
        (self.lambda * t - self.f.f_raw(t)) / (self.lambda * self.v0 * self.phi.phi(t))
    }

    /// d/dv of the unscaled force, divided by λ.
    fn force_slope(&self, t: f64) -> f64 {
        let phi = self.phi.phi(t);
        let num = (self.lambda - self.f.f_prime_raw(t)) * phi
            - (self.lambda * t - self.f.f_raw(t)) * self.phi.phi_prime(t);
        num / (phi * phi * phi * self.lambda)
    }

    fn series_start(&self, tau0: f64) -> [f64; STATE_DIM] {
        let x = SERIES_START;
        let n = self.dim as f64;
        let t0 = self.v0 * tau0;
        let c = self.force(t0);
        let cz = self.force_slope(t0);
        let y = 1.0 + c * x * x / (2.0 * n);
        let p = c * x / n;
        let xn = x.powi(self.dim);
        let mut s = [0.0; STATE_DIM];
        s[Y] = y;
        s[P] = p;
        s[TAU] = tau0 + (y - 1.0) / self.phi.phi(t0);
        s[MASS_DUAL] = tau0 * tau0 * xn / n;
        s[MASS_V] = xn / n;
        s[GRAD] = (c / n) * (c / n) * xn * x * x / (n + 2.0);
        s[POT_IBP] = 0.0;
        s[SENS] = 1.0 + cz * x * x / (2.0 * n);
        s[SENS_P] = cz * x / n;
        s
    }
}

impl OdeSystem<STATE_DIM> for RadialSystem<'_> {
    fn rhs(&self, x: f64, s: &[f64; STATE_DIM], ds: &mut [f64; STATE_DIM]) {
        let tau = s[TAU].max(0.0);
        let t = self.v0 * tau;
        let phi = self.phi.phi(t);
        let f = self.f.f_raw(t);
        let lambda = self.lambda;
        let friction = (self.dim - 1) as f64 / x;
        let xw = x.powi(self.dim - 1);

        ds[Y] = s[P];
        ds[P] = (lambda * t - f) / (lambda * self.v0 * phi) - friction * s[P];
        let dtau = s[P] / phi;
        ds[TAU] = dtau;
        ds[MASS_DUAL] = xw * tau * tau;
        ds[MASS_V] = xw * s[Y] * s[Y];
        ds[GRAD] = xw * s[P] * s[P];
        ds[POT_IBP] = xw * x * f * dtau / (lambda * self.v0);

        let slope = ((lambda - self.f.f_prime_raw(t)) * phi - (lambda * t - f) * self.phi.phi_prime(t))
            / (phi * phi * phi * lambda);
        ds[SENS] = s[SENS_P];
        ds[SENS_P] = slope * s[SENS] - friction * s[SENS_P];
    }
}

/// One accepted integration step, in scaled variables.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub x: f64,
    state: [f64; STATE_DIM],
}

impl Sample {
    pub fn y(&self) -> f64 {
        self.state[Y]
    }
    pub fn slope(&self) -> f64 {
        self.state[P]
    }
    pub fn tau(&self) -> f64 {
        self.state[TAU]
    }
    /// ∂v/∂v₀.
    pub fn sensitivity(&self) -> f64 {
        self.state[SENS]
    }
}

/// A single shot: its classification and the trajectory up to the event.
#[derive(Debug, Clone)]
pub struct Shot {
    pub class: TrajectoryClass,
    pub lambda: f64,
    pub v0: f64,
    pub samples: Vec<Sample>,
}

impl Shot {
    /// Physical radii of the stored samples.
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        let scale = self.lambda.sqrt();
        self.samples.iter().map(move |s| s.x / scale)
    }

    /// Physical values v(r) of the stored samples.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| s.state[Y] * self.v0)
    }
}

fn scaled_x_max(lambda: f64, config: &ShootingConfig) -> f64 {
    // r_max = M/√min(λ,1) becomes M·max(1, √λ) in x = √λ·r
    config.r_max_multiplier * lambda.sqrt().max(1.0)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name: "lambda", value: lambda, expected: "lambda > 0" })
    }
}

/// Integrates the radial ODE from v(0) = v₀, v′(0) = 0 until the trajectory
/// is classified or r_max is reached.
pub fn integrate_radial(
    model: &DualModel,
    lambda: f64,
    v0: f64,
    config: &ShootingConfig,
) -> Result<Shot> {
    check_lambda(lambda)?;
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(Error::Domain { name: "v0", value: v0, expected: "v0 > 0" });
    }
    let sys = RadialSystem::new(model, lambda, v0);
    let tau0 = model.phi().capital_phi_inv(v0) / v0;
    let start = sys.series_start(tau0);
    let x_end = scaled_x_max(lambda, config);
    let tol = Tolerances { rel: config.ode_rel_tol, abs: config.ode_abs_tol };

    let mut samples = Vec::with_capacity(512);
    let mut origin = [0.0; STATE_DIM];
    origin[Y] = 1.0;
    origin[TAU] = tau0;
    origin[SENS] = 1.0;
    samples.push(Sample { x: 0.0, state: origin });
    samples.push(Sample { x: SERIES_START, state: start });

    let mut class = None;
    let outcome = ode::integrate(&sys, SERIES_START, start, x_end, 1e-3, tol, MAX_ODE_STEPS, |x, s| {
        if s[Y] <= 0.0 || s[TAU] <= 0.0 {
            class = Some(TrajectoryClass::Overshoot);
            return StepControl::Stop;
        }
        if s[P] >= UNDERSHOOT_SLOPE && s[Y] >= UNDERSHOOT_FLOOR {
            class = Some(TrajectoryClass::Undershoot);
            return StepControl::Stop;
        }
        samples.push(Sample { x, state: *s });
        StepControl::Continue
    });

    let class = match outcome {
        Ok(out) => match class {
            Some(c) => c,
            None if out.y[Y] <= CONVERGED_LEVEL && out.y[P] < 0.0 => TrajectoryClass::Converged,
            // still positive at r_max without turning up: treat as not having crossed
            None => TrajectoryClass::Undershoot,
        },
        Err(OdeError::StepSizeUnderflow { x, .. }) => {
            let last = samples.last().expect("origin sample");
            if last.state[P] < 0.0 && last.state[Y] < 1e-6 * last.state[P].abs() {
                TrajectoryClass::Overshoot
            } else {
                return Err(Error::StepSizeUnderflow { r: x / lambda.sqrt(), v0 });
            }
        }
        Err(OdeError::NonFinite { x }) => {
            return Err(Error::NonFiniteState { r: x / lambda.sqrt(), v0 })
        }
        Err(OdeError::MaxSteps { x }) => return Err(Error::StepBudget { r: x / lambda.sqrt() }),
    };
    Ok(Shot { class, lambda, v0, samples })
}

/// Exponential tail v(r) ≈ A·r^{−(N−1)/2}·e^{−κr} beyond the last grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    #[serde(rename = "A")]
    pub a: f64,
    pub kappa: f64,
}

/// A converged positive radial ground state with its norms.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub lambda: f64,
    /// v(0) = ‖v‖_∞.
    pub v0: f64,
    pub dim: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// Φ⁻¹(v) on the grid, the solution u of the original problem.
    pub dual_values: Vec<f64>,
    /// ρ = ‖Φ⁻¹(v)‖₂².
    pub mass_dual: f64,
    pub mass_v: f64,
    pub grad_sq: f64,
    /// ∫F(Φ⁻¹(v)).
    pub potential: f64,
    /// J(v) = ½‖∇v‖₂² − ∫F(Φ⁻¹(v)).
    pub energy: f64,
    pub pohozaev_residual: f64,
    pub tail: Tail,
    /// Share of ρ contributed by the analytic tail.
    pub tail_fraction: f64,
    /// Relative width of the final v₀ bracket.
    pub bracket_width: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    lambda: f64,
    v0: f64,
    mass_dual: f64,
    mass_v: f64,
    grad_sq: f64,
    energy: f64,
    pohozaev_residual: f64,
    tail: &'a Tail,
}

impl RadialProfile {
    pub fn sup_norm(&self) -> f64 {
        self.v0
    }

    pub fn r_last(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    fn tail_value(&self, r: f64) -> f64 {
        let half = (self.dim as f64 - 1.0) / 2.0;
        self.tail.a * r.powf(-half) * (-self.tail.kappa * r).exp()
    }

    /// Interpolant of v on the grid (monotone cubic), continued by the tail.
    pub fn interpolant(&self) -> ProfileInterpolant<'_> {
        ProfileInterpolant { profile: self, spline: Pchip::new(self.grid.clone(), self.values.clone()) }
    }

    /// Positive and strictly decreasing on (0, r_K].
    pub fn is_positive_decreasing(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
            && self.values.windows(2).skip(1).all(|w| w[1] < w[0])
            && self.slopes.iter().skip(1).all(|d| *d < 0.0)
    }

    pub fn sidecar_json(&self) -> Result<String> {
        let side = Sidecar {
            lambda: self.lambda,
            v0: self.v0,
            mass_dual: self.mass_dual,
            mass_v: self.mass_v,
            grad_sq: self.grad_sq,
            energy: self.energy,
            pohozaev_residual: self.pohozaev_residual,
            tail: &self.tail,
        };
        Ok(serde_json::to_string_pretty(&side)?)
    }

    /// CSV with header `r,v,dv`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,v,dv")?;
        for i in 0..self.grid.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.grid[i], self.values[i], self.slopes[i])?;
        }
        Ok(())
    }
}

pub struct ProfileInterpolant<'a> {
    profile: &'a RadialProfile,
    spline: Pchip,
}

impl ProfileInterpolant<'_> {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.profile.r_last() {
            self.spline.eval(r)
        } else {
            self.profile.tail_value(r)
        }
    }
}

fn classify(model: &DualModel, lambda: f64, v0: f64, config: &ShootingConfig) -> Result<Shot> {
    integrate_radial(model, lambda, v0, config)
}

fn is_under(shot: &Shot) -> bool {
    shot.class != TrajectoryClass::Overshoot
}

/// Zero of the potential F(Φ⁻¹s) − (λ/2)(Φ⁻¹s)² below the witness T:
/// any v₀ at or below it cannot reach zero.
fn potential_zero(model: &DualModel, lambda: f64) -> Result<f64> {
    let t_witness = find_potential_witness(model, lambda)?;
    let (mut lo, mut hi) = (t_witness / 2.0, t_witness);
    if model.reduced_potential(lambda, lo) > 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.reduced_potential(lambda, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

fn cold_bracket(model: &DualModel, lambda: f64, config: &ShootingConfig) -> Result<(Shot, Shot)> {
    let mut lo_v = potential_zero(model, lambda)?;
    let mut lo = classify(model, lambda, lo_v, config)?;
    let mut tries = 0;
    while !is_under(&lo) {
        tries += 1;
        if tries > 60 {
            return Err(Error::BracketNotFound { lambda });
        }
        lo_v /= 2.0;
        lo = classify(model, lambda, lo_v, config)?;
    }
    for _ in 0..200 {
        let hi = classify(model, lambda, lo.v0 * 2.0, config)?;
        if is_under(&hi) {
            lo = hi;
        } else {
            return Ok((lo, hi));
        }
    }
    Err(Error::BracketNotFound { lambda })
}

fn warm_bracket(
    model: &DualModel,
    lambda: f64,
    config: &ShootingConfig,
    guess: f64,
) -> Result<Option<(Shot, Shot)>> {
    let mut step = 1.02_f64;
    let mut lo = classify(model, lambda, guess / step, config)?;
    let mut hi = classify(model, lambda, guess * step, config)?;
    for _ in 0..30 {
        match (is_under(&lo), is_under(&hi)) {
            (true, false) => return Ok(Some((lo, hi))),
            (false, _) => {
                hi = lo;
                step *= step;
                lo = classify(model, lambda, hi.v0 / step, config)?;
            }
            (true, true) => {
                lo = hi;
                step *= step;
                hi = classify(model, lambda, lo.v0 * step, config)?;
            }
        }
        if step > 1e6 {
            break;
        }
    }
    Ok(None)
}

/// Bisects v₀ to floating-point resolution and returns the last undershoot
/// shot together with the final bracket.
fn bisect(
    model: &DualModel,
    lambda: f64,
    config: &ShootingConfig,
    mut lo: Shot,
    mut hi_v: f64,
) -> Result<(Shot, f64)> {
    for _ in 0..config.max_bisection_iters {
        let mid = 0.5 * (lo.v0 + hi_v);
        if mid <= lo.v0 || mid >= hi_v {
            break;
        }
        let shot = classify(model, lambda, mid, config)?;
        if is_under(&shot) {
            lo = shot;
        } else {
            hi_v = mid;
        }
    }
    let width = (hi_v - lo.v0) / hi_v;
    if width > config.bisection_tol {
        return Err(Error::ToleranceNotReached(format!(
            "v0 bracket width {width:e} after {} iterations",
            config.max_bisection_iters
        )));
    }
    Ok((lo, hi_v))
}

/// Ground state of `−Δv + λv = g_λ(v)` by bisection on v(0).
pub fn shoot_ground_state(model: &DualModel, lambda: f64, config: &ShootingConfig) -> Result<RadialProfile> {
    shoot(model, lambda, config, None)
}

/// As [`shoot_ground_state`], with the initial bracket centred on `guess`.
/// Falls back to the cold bracket search if `guess` does not bracket.
pub fn shoot_ground_state_near(
    model: &DualModel,
    lambda: f64,
    config: &ShootingConfig,
    guess: f64,
) -> Result<RadialProfile> {
    shoot(model, lambda, config, Some(guess))
}

fn shoot(model: &DualModel, lambda: f64, config: &ShootingConfig, guess: Option<f64>) -> Result<RadialProfile> {
    check_lambda(lambda)?;
    config.validate()?;
    let bracket = match guess {
        Some(g) if g > 0.0 && g.is_finite() => match warm_bracket(model, lambda, config, g)? {
            Some(b) => b,
            None => {
                log::debug!("warm bracket around {g:e} failed at lambda {lambda:e}; cold start");
                cold_bracket(model, lambda, config)?
            }
        },
        _ => cold_bracket(model, lambda, config)?,
    };
    let (lo, hi_v) = bisect(model, lambda, config, bracket.0, bracket.1.v0)?;
    build_profile(model, &lo, hi_v)
}

fn build_profile(model: &DualModel, shot: &Shot, hi_v: f64) -> Result<RadialProfile> {
    let lambda = shot.lambda;
    let v0 = shot.v0;
    let dim = model.dim();
    let n = dim as f64;
    let half = (n - 1.0) / 2.0;
    let samples = &shot.samples;
    let width = (hi_v - v0).max(4.0 * f64::EPSILON * hi_v);

    // keep the prefix that is positive, decreasing and insensitive to the
    // residual uncertainty in v0
    let mut cut = 1;
    for (i, s) in samples.iter().enumerate().skip(2) {
        let ok = s.state[Y] > 0.0
            && s.state[P] < 0.0
            && s.state[Y] < samples[i - 1].state[Y]
            && width * s.state[SENS].abs() <= CUT_DEVIATION * v0 * s.state[Y];
        if !ok {
            break;
        }
        cut = i;
    }
    let last = samples[cut];
    let y_cut = last.state[Y];
    if y_cut > 1e-3 || cut < 8 {
        return Err(Error::ToleranceNotReached(format!(
            "trajectory only trustworthy down to v/v0 = {y_cut:e}"
        )));
    }

    // decay rate from the last decade of kept values
    let mut first = samples[..=cut].iter().position(|s| s.state[Y] <= 10.0 * y_cut).unwrap_or(cut);
    first = first.min(cut.saturating_sub(4));
    let pts: Vec<(f64, f64)> = samples[first..=cut]
        .iter()
        .map(|s| (s.x, (s.state[Y] * s.x.powf(half)).ln()))
        .collect();
    let kappa_s = -least_squares_slope(&pts);
    if !(kappa_s > 0.0) {
        return Err(Error::ToleranceNotReached(format!("non-decaying tail fit, kappa = {kappa_s}")));
    }

    let x_cut = last.x;
    let tau_ratio = last.state[TAU] / y_cut;
    // tail in scaled form: y(x) = y_cut (x_cut/x)^half e^{−κ(x − x_cut)}
    let tail_y = |x: f64| y_cut * (x_cut / x).powf(half) * (-kappa_s * (x - x_cut)).exp();
    let base = y_cut * y_cut * x_cut.powf(n - 1.0);
    let mass_v_tail = base / (2.0 * kappa_s);
    let mass_dual_tail = tau_ratio * tau_ratio * mass_v_tail;
    let grad_tail = base
        * integrate_adaptive(
            |u| {
                let x = x_cut + u / (2.0 * kappa_s);
                let k = kappa_s + half / x;
                k * k * (-u).exp()
            },
            0.0,
            60.0,
            0.0,
            1e-12,
        )
        / (2.0 * kappa_s);
    let nl = model.nonlinearity();
    let lam_v2 = lambda * v0 * v0;
    let pot_tail = integrate_adaptive(
        |u| {
            let x = x_cut + u / kappa_s;
            x.powf(n - 1.0) * nl.capital_f_raw(v0 * tau_ratio * tail_y(x)) / lam_v2
        },
        0.0,
        60.0,
        0.0,
        1e-10,
    ) / kappa_s;
    let pot_core = x_cut.powi(dim as i32) * nl.capital_f_raw(v0 * last.state[TAU]) / (n * lam_v2)
        - last.state[POT_IBP] / n;

    let omega = unit_sphere_area(dim);
    let vol = omega * lambda.powf(-n / 2.0) * v0 * v0;
    let mass_dual = vol * (last.state[MASS_DUAL] + mass_dual_tail);
    let mass_v = vol * (last.state[MASS_V] + mass_v_tail);
    let grad_sq = vol * lambda * (last.state[GRAD] + grad_tail);
    let potential = vol * lambda * (pot_core + pot_tail);
    let energy = 0.5 * grad_sq - potential;
    let pohozaev_residual = pohozaev(dim, lambda, grad_sq, potential, mass_dual);

    let sq = lambda.sqrt();
    let kept = &samples[..=cut];
    let profile = RadialProfile {
        lambda,
        v0,
        dim,
        grid: kept.iter().map(|s| s.x / sq).collect(),
        values: kept.iter().map(|s| v0 * s.state[Y]).collect(),
        slopes: kept.iter().map(|s| v0 * sq * s.state[P]).collect(),
        dual_values: kept.iter().map(|s| v0 * s.state[TAU]).collect(),
        mass_dual,
        mass_v,
        grad_sq,
        potential,
        energy,
        pohozaev_residual,
        tail: Tail {
            a: v0 * y_cut * x_cut.powf(half) * (kappa_s * x_cut).exp() * lambda.powf(-half / 2.0),
            kappa: kappa_s * sq,
        },
        tail_fraction: mass_dual_tail / (last.state[MASS_DUAL] + mass_dual_tail),
        bracket_width: width / hi_v,
    };
    if !(profile.pohozaev_residual <= MAX_POHOZAEV) || !(profile.tail_fraction < MAX_TAIL_FRACTION) {
        return Err(Error::ToleranceNotReached(format!(
            "profile rejected at lambda {lambda:e}: Pohozaev residual {:e}, tail fraction {:e}",
            profile.pohozaev_residual, profile.tail_fraction
        )));
    }
    Ok(profile)
}

/// |(N−2)/2·‖∇v‖² − N∫[F(Φ⁻¹v) − (λ/2)(Φ⁻¹v)²]| / ‖∇v‖².
pub fn pohozaev(dim: usize, lambda: f64, grad_sq: f64, potential: f64, mass_dual: f64) -> f64 {
    let n = dim as f64;
    ((n - 2.0) / 2.0 * grad_sq - n * (potential - 0.5 * lambda * mass_dual)).abs() / grad_sq
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// U of `−ΔU + U = μU^{q−1}` (λ = 1, φ ≡ 1).
pub fn semilinear_ground_state(mu: f64, q: f64, dim: usize, config: &ShootingConfig) -> Result<RadialProfile> {
    let model = DualModel::new(PhiModel::Identity, NonlinearityModel::pure_power(q, mu), dim)?;
    shoot_ground_state(&model, 1.0, config)
}

/// Number of overshoot/undershoot switches over a geometric v₀ scan.
pub fn bracket_sign_changes(
    model: &DualModel,
    lambda: f64,
    config: &ShootingConfig,
    v_min: f64,
    v_max: f64,
    samples: usize,
) -> Result<usize> {
    let ratio = (v_max / v_min).powf(1.0 / (samples.max(2) - 1) as f64);
    let mut prev = None;
    let mut changes = 0;
    for i in 0..samples.max(2) {
        let v = v_min * ratio.powi(i as i32);
        let under = is_under(&integrate_radial(model, lambda, v, config)?);
        if let Some(p) = prev {
            if p != under {
                changes += 1;
            }
        }
        prev = Some(under);
    }
    if changes > 1 {
        log::warn!("{changes} shooting sign changes at lambda {lambda:e}");
    }
    Ok(changes)
}

/// Solution-quality record for a profile.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRecord {
    pub energy: f64,
    pub pohozaev_residual: f64,
    /// Pohozaev residual from the grid-quadrature route.
    pub pohozaev_residual_grid: f64,
    /// Largest one-step defect of (v, v′/√λ) on re-integration, relative to ‖v‖_∞.
    pub pde_residual: f64,
    pub mass_dual_grid: f64,
    pub mass_v_grid: f64,
    pub grad_sq_grid: f64,
    pub potential_grid: f64,
    /// Largest relative gap between ODE-state and grid-quadrature integrals.
    pub integral_discrepancy: f64,
    pub kappa_ratio: f64,
    pub tail_fraction: f64,
}

/// Recomputes J, the Pohozaev residual and the norms by an independent
/// quadrature over the grid, and measures the one-step defect of the ODE.
pub fn profile_diagnostics(profile: &RadialProfile, model: &DualModel, config: &ShootingConfig) -> DiagnosticsRecord {
    let dim = profile.dim;
    let n = dim as f64;
    let lambda = profile.lambda;
    let phi = model.phi();
    let nl = model.nonlinearity();
    let g = &profile.grid;
    let k = g.len();

    // integrand values and r-derivatives: (v², t², v′², F(t))
    let mut vals = vec![[0.0; 4]; k];
    let mut ders = vec![[0.0; 4]; k];
    for i in 0..k {
        let r = g[i];
        let v = profile.values[i];
        let dv = profile.slopes[i];
        let t = profile.dual_values[i].max(0.0);
        let ph = phi.phi(t);
        let dt = dv / ph;
        let ddv = if r > 0.0 {
            (lambda * t - nl.f_raw(t)) / ph - (n - 1.0) / r * dv
        } else {
            (lambda * t - nl.f_raw(t)) / (ph * n)
        };
        let w = r.powi(dim as i32 - 1);
        let dw = if dim > 1 { (n - 1.0) * r.powi(dim as i32 - 2) } else { 0.0 };
        let big_f = nl.capital_f_raw(t);
        vals[i] = [w * v * v, w * t * t, w * dv * dv, w * big_f];
        ders[i] = [
            dw * v * v + 2.0 * w * v * dv,
            dw * t * t + 2.0 * w * t * dt,
            dw * dv * dv + 2.0 * w * dv * ddv,
            dw * big_f + w * nl.f_raw(t) * dt,
        ];
    }
    let mut sums = [0.0; 4];
    for i in 0..k - 1 {
        let h = g[i + 1] - g[i];
        for j in 0..4 {
            sums[j] += 0.5 * h * (vals[i][j] + vals[i + 1][j]) + h * h / 12.0 * (ders[i][j] - ders[i + 1][j]);
        }
    }

    // analytic tail from the stored (A, κ)
    let half = (n - 1.0) / 2.0;
    let kappa = profile.tail.kappa;
    let r_k = profile.r_last();
    let v_k = profile.values[k - 1];
    let ratio = profile.dual_values[k - 1] / v_k;
    let base = v_k * v_k * r_k.powf(n - 1.0);
    let tv = base / (2.0 * kappa);
    let tg = base
        * integrate_adaptive(
            |u| {
                let r = r_k + u / (2.0 * kappa);
                let s = kappa + half / r;
                s * s * (-u).exp()
            },
            0.0,
            60.0,
            0.0,
            1e-12,
        )
        / (2.0 * kappa);
    let tf = integrate_adaptive(
        |u| {
            let r = r_k + u / kappa;
            let v = v_k * (r_k / r).powf(half) * (-kappa * (r - r_k)).exp();
            r.powf(n - 1.0) * nl.capital_f_raw(ratio * v)
        },
        0.0,
        60.0,
        0.0,
        1e-10,
    ) / kappa;

    let omega = unit_sphere_area(dim);
    let mass_v_grid = omega * (sums[0] + tv);
    let mass_dual_grid = omega * (sums[1] + ratio * ratio * tv);
    let grad_sq_grid = omega * (sums[2] + tg);
    let potential_grid = omega * (sums[3] + tf);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let integral_discrepancy = rel(mass_v_grid, profile.mass_v)
        .max(rel(mass_dual_grid, profile.mass_dual))
        .max(rel(grad_sq_grid, profile.grad_sq))
        .max(rel(potential_grid, profile.potential));

    DiagnosticsRecord {
        energy: profile.energy,
        pohozaev_residual: profile.pohozaev_residual,
        pohozaev_residual_grid: pohozaev(dim, lambda, grad_sq_grid, potential_grid, mass_dual_grid),
        pde_residual: one_step_defect(profile, model, config),
        mass_dual_grid,
        mass_v_grid,
        grad_sq_grid,
        potential_grid,
        integral_discrepancy,
        kappa_ratio: kappa / lambda.sqrt(),
        tail_fraction: profile.tail_fraction,
    }
}

/// Re-integrates every grid interval at a 10³× tighter tolerance and
/// reports the largest mismatch in (y, y′), the scaled profile and slope.
fn one_step_defect(profile: &RadialProfile, model: &DualModel, config: &ShootingConfig) -> f64 {
    let lambda = profile.lambda;
    let v0 = profile.v0;
    let sq = lambda.sqrt();
    let sys = RadialSystem::new(model, lambda, v0);
    let tol = Tolerances { rel: config.ode_rel_tol * 1e-3, abs: config.ode_abs_tol * 1e-3 };
    let mut worst: f64 = 0.0;
    // the first interval is the series start
    for i in 1..profile.grid.len() - 1 {
        let x0 = profile.grid[i] * sq;
        let x1 = profile.grid[i + 1] * sq;
        let mut s = [0.0; STATE_DIM];
        s[Y] = profile.values[i] / v0;
        s[P] = profile.slopes[i] / (v0 * sq);
        s[TAU] = profile.dual_values[i] / v0;
        s[SENS] = 1.0;
        let out = ode::integrate(&sys, x0, s, x1, (x1 - x0) / 4.0, tol, 100_000, |_, _| StepControl::Continue);
        if let Ok(out) = out {
            let dy = (out.y[Y] - profile.values[i + 1] / v0).abs();
            let dp = (out.y[P] - profile.slopes[i + 1] / (v0 * sq)).abs();
            worst = worst.max(dy).max(dp);
        } else {
            return f64::INFINITY;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> DualModel {
        DualModel::new(PhiModel::Identity, NonlinearityModel::pure_power(4.0, 1.0), 3).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ShootingConfig::default().validate().is_ok());
        let bad = ShootingConfig { r_max_multiplier: 10.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ShootingConfig { ode_rel_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn small_and_large_shots_classify() {
        let cfg = ShootingConfig::default();
        let m = cubic();
        assert_eq!(integrate_radial(&m, 1.0, 0.1, &cfg).unwrap().class, TrajectoryClass::Undershoot);
        assert_eq!(integrate_radial(&m, 1.0, 100.0, &cfg).unwrap().class, TrajectoryClass::Overshoot);
        assert!(integrate_radial(&m, 1.0, 0.0, &cfg).is_err());
        assert!(integrate_radial(&m, -1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn cubic_soliton_amplitude() {
        let p = shoot_ground_state(&cubic(), 1.0, &ShootingConfig::default()).unwrap();
        assert!((p.v0 - 4.337_387_679_977_0).abs() < 1e-9, "v0 = {:.15}", p.v0);
        assert!(p.is_positive_decreasing());
        assert!(p.pohozaev_residual < 1e-5);
        // for N = 3, q = 4 Nehari and Pohozaev together give J = ‖∇v‖²/6
        assert!((p.energy / (p.grad_sq / 6.0) - 1.0).abs() < 1e-5);
        let kappa = p.tail.kappa / p.lambda.sqrt();
        assert!((0.9..=1.1).contains(&kappa));
    }

    #[test]
    fn semilinear_scaling_in_lambda() {
        let cfg = ShootingConfig::default();
        let m = cubic();
        let one = shoot_ground_state(&m, 1.0, &cfg).unwrap();
        for lambda in [1e-2, 1e2] {
            let p = shoot_ground_state(&m, lambda, &cfg).unwrap();
            let s = lambda.sqrt();
            assert!((p.v0 / (s * one.v0) - 1.0).abs() < 1e-6);
            // exponents 2/(q−2) − N/2 and 2/(q−2) + 1 − N/2 at q = 4, N = 3
            assert!((p.mass_v * s / one.mass_v - 1.0).abs() < 1e-6);
            assert!((p.grad_sq / (s * one.grad_sq) - 1.0).abs() < 1e-6);
            assert!((p.tail.kappa / s - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn amplitude_scaling_in_mu() {
        let cfg = ShootingConfig::default();
        let q = 3.0;
        let u1 = semilinear_ground_state(1.0, q, 3, &cfg).unwrap();
        let u2 = semilinear_ground_state(2.5, q, 3, &cfg).unwrap();
        let expected = 2.5_f64.powf(-2.0 / (q - 2.0)) * u1.mass_v;
        assert!((u2.mass_v / expected - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mass_critical_soliton_mass() {
        // oracle: independent DOP853 shooting at rtol 1e-13 with direct quadrature
        let u = semilinear_ground_state(1.0, 10.0 / 3.0, 3, &ShootingConfig::default()).unwrap();
        assert!((u.mass_v / 63.783_115_784_41 - 1.0).abs() < 1e-8, "{:.12}", u.mass_v);
        assert!((u.v0 / 4.191_723_335_108 - 1.0).abs() < 1e-10);
        assert!(u.values.iter().skip(1).all(|v| *v < u.values[0]));
    }

    #[test]
    fn reference_model_diagnostics() {
        let cfg = ShootingConfig::default();
        let m = DualModel::reference();
        let p = shoot_ground_state(&m, 1.0, &cfg).unwrap();
        assert!(p.is_positive_decreasing());
        assert!(p.pohozaev_residual < 1e-5);
        assert!(p.tail_fraction < 1e-8);
        // |Φ⁻¹(v)| ≤ |v| and Φ⁻¹(v) ≥ v/a*
        assert!(p.mass_dual <= p.mass_v);
        assert!(p.mass_dual >= p.mass_v / (m.a_star() * m.a_star()));
        let d = profile_diagnostics(&p, &m, &cfg);
        assert!(d.pohozaev_residual_grid < 1e-5);
        assert!(d.pde_residual <= 10.0 * cfg.ode_rel_tol);
        assert!(d.integral_discrepancy < 1e-6);
        assert!((d.energy - (0.5 * d.grad_sq_grid - d.potential_grid)).abs() < 1e-6 * d.grad_sq_grid);
    }

    #[test]
    fn interpolant_and_exports() {
        let p = shoot_ground_state(&cubic(), 1.0, &ShootingConfig::default()).unwrap();
        let it = p.interpolant();
        assert_eq!(it.eval(0.0), p.v0);
        let r = p.r_last();
        assert!((it.eval(r) / p.values[p.values.len() - 1] - 1.0).abs() < 1e-9);
        assert!(it.eval(2.0 * r) < it.eval(r));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,v,dv\n"));
        assert_eq!(text.lines().count(), p.grid.len() + 1);
        let side: serde_json::Value = serde_json::from_str(&p.sidecar_json().unwrap()).unwrap();
        assert_eq!(side["v0"].as_f64().unwrap(), p.v0);
        assert!(side["tail"]["A"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn single_sign_change_for_cubic() {
        let n = bracket_sign_changes(&cubic(), 1.0, &ShootingConfig::default(), 0.5, 50.0, 24).unwrap();
        assert_eq!(n, 1);
    }
}
