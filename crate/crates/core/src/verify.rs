//! Run configuration and the invariant battery behind `dualmass verify`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    convergence_report, dilate, exponent_sign, mass_exponent, supnorm_band, ExponentSign, Regime, LARGE_SWEEP,
    SMALL_SWEEP,
};
use crate::branch::{
    classify_regime, existence_probe, mass_map, solve_prescribed_mass, trace_branch, Branch, CaseId, EndLimit,
    GridSpec, ProbeStatus,
};
use crate::error::{Error, Result};
use crate::models::{check_growth_conditions, DualModel, NonlinearityModel, PhiModel};
use crate::radial::{
    profile_diagnostics, semilinear_ground_state, shoot_ground_state, RadialProfile, ShootingConfig, MAX_POHOZAEV,
};

/// Contents of a `--config` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: DualModel,
    #[serde(default)]
    pub shooting: ShootingConfig,
    #[serde(default)]
    pub sweep: GridSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn reference() -> Self {
        Self { model: DualModel::reference(), shooting: ShootingConfig::default(), sweep: GridSpec::default(), output: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.shooting.validate()?;
        cfg.sweep.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Inconclusive,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub status: CheckStatus,
    pub witness: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub suite: String,
    pub checks: Vec<Check>,
    pub exit_code: i32,
}

impl Verdict {
    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// 0 when every check passes, 1 on any failure, 2 when only inconclusive
/// checks keep the suite from passing.
pub fn exit_code(checks: &[Check]) -> i32 {
    match checks.iter().map(|c| c.status).max() {
        Some(CheckStatus::Fail) => 1,
        Some(CheckStatus::Inconclusive) => 2,
        _ => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Models,
    Solver,
    Asymptotics,
    Branch,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Models => "models",
            Suite::Solver => "solver",
            Suite::Asymptotics => "asymptotics",
            Suite::Branch => "branch",
        }
    }
}

type CheckFn = fn(&RunConfig) -> Result<Outcome>;

struct Outcome {
    status: CheckStatus,
    witness: Vec<(&'static str, f64)>,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, witness: Vec<(&'static str, f64)>) -> Self {
        Self { status: if passed { CheckStatus::Pass } else { CheckStatus::Fail }, witness, detail: String::new() }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// The closed set of check ids, with their suite and description.
pub const CHECKS: &[(&str, Suite, &str)] = &[
    ("models.phi_bounds", Suite::Models, "1 <= phi <= a*, phi' >= 0, t phi'(t) -> 0"),
    ("transform.roundtrip", Suite::Models, "|Phi^-1(Phi(t)) - t| <= 1e-9 max(1,|t|) on 2001 points in [-1e3, 1e3]"),
    ("transform.sandwich", Suite::Models, "t <= Phi(t) <= a* t and Phi(t) <= t phi(t) on 1000 points"),
    ("transform.inverse_bounds", Suite::Models, "|s|/a* <= |Phi^-1(s)| <= |s| on 1000 points"),
    ("transform.antiderivative", Suite::Models, "G' = g_lambda by central differences within 1e-8 on 1000 points"),
    ("models.large_s_limit", Suite::Models, "g_lambda(s)/s^(beta-1) at s = 1e4 within 1% of mu2/a*^beta"),
    ("models.growth_conditions", Suite::Models, "sampled growth conditions of g_lambda at lambda = 1"),
    ("solver.semilinear_scaling", Suite::Solver, "cubic soliton v0 and L2 norm follow the exact lambda scaling to 1e-6"),
    ("solver.pohozaev_sweep", Suite::Solver, "Pohozaev residual <= 1e-5 on >= 50 profiles"),
    ("solver.profile_shape", Suite::Solver, "profiles positive, decreasing, tail rate in [0.9, 1.1] sqrt(lambda)"),
    ("solver.diagnostics", Suite::Solver, "one-step defect <= 10 ode_rel_tol, grid quadrature agrees to 1e-6"),
    ("asymptotics.exponent_table", Suite::Asymptotics, "sign of -N/2 + 2/(e-2) against 2 + 4/N"),
    ("asymptotics.dilation_identities", Suite::Asymptotics, "|V*|^2 = a*^(N+2)|V|^2 and V*(0) = a* V(0)"),
    ("asymptotics.small_mass_law", Suite::Asymptotics, "rho lambda^(N/2-2/(alpha-2)) / |U|^2 within 5% of 1 at lambda = 1e-3"),
    ("asymptotics.large_mass_law", Suite::Asymptotics, "rho lambda^(N/2-2/(beta-2)) / (a*^N |V|^2) within 5% of 1 at lambda = 1e3"),
    ("asymptotics.mass_critical_flatness", Suite::Asymptotics, "|d log rho / d log lambda| <= 0.05 on [1e-4, 1e-3] for alpha = beta = 2 + 4/N"),
    ("asymptotics.rescaled_convergence", Suite::Asymptotics, "sup distance to U and V* decreases and is <= 5% at the extreme lambda"),
    ("asymptotics.supnorm_band", Suite::Asymptotics, "|v|_inf^(e-2)/lambda stays in a factor-2 band over the last decade; |v|_inf increasing for large lambda"),
    ("branch.trace", Suite::Branch, "configured sweep traced completely with accepted profiles"),
    ("branch.dual_mass_inequality", Suite::Branch, "mass_v/a*^2 <= rho <= mass_v at every branch point"),
    ("branch.mass_map_limits", Suite::Branch, "sampled end trends of rho match the exponent table"),
    ("branch.prescribed_mass_closed_form", Suite::Branch, "case (i) roots certify to 1e-4 and match (c/rho(1))^2 to 1e-4"),
    ("branch.mixed_multiplicity", Suite::Branch, "mixed case: two roots for a small c, none and nonexistence verdict for a large c"),
    ("branch.existence_probe", Suite::Branch, "root counts against the classification over a mass grid"),
    ("classify.case_table", Suite::Branch, "case ids for the nine exponent orderings"),
];

fn check_fn(id: &str) -> CheckFn {
    match id {
        "models.phi_bounds" => phi_bounds,
        "transform.roundtrip" => roundtrip,
        "transform.sandwich" => sandwich,
        "transform.inverse_bounds" => inverse_bounds,
        "transform.antiderivative" => antiderivative,
        "models.large_s_limit" => large_s_limit,
        "models.growth_conditions" => growth_conditions,
        "solver.semilinear_scaling" => semilinear_scaling,
        "solver.pohozaev_sweep" => pohozaev_sweep,
        "solver.profile_shape" => profile_shape,
        "solver.diagnostics" => diagnostics,
        "asymptotics.exponent_table" => exponent_table,
        "asymptotics.dilation_identities" => dilation_identities,
        "asymptotics.small_mass_law" => small_mass_law,
        "asymptotics.large_mass_law" => large_mass_law,
        "asymptotics.mass_critical_flatness" => mass_critical_flatness,
        "asymptotics.rescaled_convergence" => rescaled_convergence,
        "asymptotics.supnorm_band" => band,
        "branch.trace" => branch_trace,
        "branch.dual_mass_inequality" => dual_mass_inequality,
        "branch.mass_map_limits" => mass_map_limits,
        "branch.prescribed_mass_closed_form" => closed_form_roots,
        "branch.mixed_multiplicity" => mixed_multiplicity,
        "branch.existence_probe" => probe,
        "classify.case_table" => case_table,
        _ => unreachable!("unknown check id {id}"),
    }
}

pub fn run_suite(config: &RunConfig, suite: Suite) -> Verdict {
    let selected: Vec<&(&str, Suite, &str)> =
        CHECKS.iter().filter(|(_, s, _)| suite == Suite::All || *s == suite).collect();
    let checks: Vec<Check> = selected
        .iter()
        .map(|&&(id, _, description)| {
            let start = std::time::Instant::now();
            let outcome = check_fn(id)(config).unwrap_or_else(|e| Outcome {
                status: CheckStatus::Fail,
                witness: Vec::new(),
                detail: e.to_string(),
            });
            log::info!("{id}: {:?} in {:.2?}", outcome.status, start.elapsed());
            Check {
                id,
                description,
                status: outcome.status,
                witness: outcome.witness.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                detail: outcome.detail,
            }
        })
        .collect();
    let exit_code = exit_code(&checks);
    Verdict { suite: suite.name().to_string(), checks, exit_code }
}

fn br(alpha: f64, beta: f64) -> DualModel {
    DualModel::new(PhiModel::REFERENCE, NonlinearityModel::power_ratio(alpha, beta, 1.0), 3).expect("catalog model")
}

fn identity(alpha: f64, beta: f64) -> DualModel {
    DualModel::new(PhiModel::Identity, NonlinearityModel::power_ratio(alpha, beta, 1.0), 3).expect("catalog model")
}

/// The configured model followed by the catalog models of the battery.
fn catalog(config: &RunConfig) -> Vec<DualModel> {
    vec![
        config.model,
        DualModel::reference(),
        br(3.0, 3.0),
        br(10.0 / 3.0, 10.0 / 3.0),
        br(2.5, 4.0),
        br(11.0 / 3.0, 11.0 / 3.0),
        identity(4.0, 4.0),
    ]
}

fn phi_families() -> [PhiModel; 3] {
    [PhiModel::Identity, PhiModel::REFERENCE, PhiModel::BoundedRational { b: 3.0 }]
}

fn phi_bounds(_: &RunConfig) -> Result<Outcome> {
    let mut worst_dev: f64 = 0.0;
    let mut ok = true;
    for phi in phi_families() {
        let a = phi.a_star();
        for i in 0..=1000 {
            let t = 1e-3 * 1.02_f64.powi(i) - 1e-3;
            let v = phi.phi(t);
            ok &= (1.0..=a).contains(&v) && phi.phi_prime(t) >= 0.0 && phi.phi(-t) == v;
        }
        let t = 1e8;
        worst_dev = worst_dev.max(t * phi.phi_prime(t));
    }
    Ok(Outcome::new(ok && worst_dev < 1e-6, vec![("max_t_phi_prime_at_1e8", worst_dev)]))
}

fn roundtrip(_: &RunConfig) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for phi in phi_families() {
        for i in 0..=2000 {
            let t = -1e3 + i as f64;
            let t = if i % 2 == 0 { t } else { t * 0.731 };
            let e = (phi.capital_phi_inv(phi.capital_phi(t)) - t).abs() / t.abs().max(1.0);
            worst = worst.max(e);
        }
    }
    Ok(Outcome::new(worst <= 1e-9, vec![("max_relative_error", worst), ("points", 3.0 * 2001.0)]))
}

fn sample_points() -> impl Iterator<Item = f64> {
    (0..1000).map(|i| 1e-6 * 10f64.powf(i as f64 * 12.0 / 999.0))
}

fn sandwich(_: &RunConfig) -> Result<Outcome> {
    let mut violations = 0.0;
    for phi in phi_families() {
        let a = phi.a_star();
        for t in sample_points() {
            let p = phi.capital_phi(t);
            let slack = 1e-14 * p;
            if !(t <= p + slack && p <= a * t + slack && p <= t * phi.phi(t) + slack) {
                violations += 1.0;
            }
            if phi.capital_phi(-t) != -p {
                violations += 1.0;
            }
        }
    }
    Ok(Outcome::new(violations == 0.0, vec![("violations", violations), ("points", 3000.0)]))
}

fn inverse_bounds(_: &RunConfig) -> Result<Outcome> {
    let mut violations = 0.0;
    for phi in phi_families() {
        let a = phi.a_star();
        for s in sample_points() {
            let t = phi.capital_phi_inv(s);
            let slack = 1e-14 * s;
            if !(t <= s + slack && t >= s / a - slack) {
                violations += 1.0;
            }
        }
    }
    Ok(Outcome::new(violations == 0.0, vec![("violations", violations), ("points", 3000.0)]))
}

fn antiderivative(config: &RunConfig) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for m in [DualModel::reference(), config.model, br(2.5, 4.0)] {
        for lambda in [0.1, 1.0, 10.0] {
            for i in 0..400 {
                let s = 1e-3 * 10f64.powf(i as f64 * 6.0 / 399.0);
                // Richardson-extrapolated central difference
                let d = |h: f64| -> Result<f64> {
                    Ok((m.g_lambda_antiderivative(lambda, s + h)? - m.g_lambda_antiderivative(lambda, s - h)?)
                        / (2.0 * h))
                };
                let h = 1e-3 * s;
                let fd = (4.0 * d(h / 2.0)? - d(h)?) / 3.0;
                let g = m.g_lambda(lambda, s)?;
                worst = worst.max(((fd - g) / g).abs());
            }
        }
    }
    Ok(Outcome::new(worst <= 1e-8, vec![("max_relative_error", worst), ("points", 3600.0)]))
}

fn large_s_limit(config: &RunConfig) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for m in [DualModel::reference(), config.model] {
        let f = m.nonlinearity();
        let target = f.mu2 / m.a_star().powf(m.beta());
        let s = 1e4;
        let ratio = m.g_lambda(1.0, s)? / s.powf(m.beta() - 1.0);
        worst = worst.max((ratio / target - 1.0).abs());
    }
    Ok(Outcome::new(worst <= 0.01, vec![("max_relative_deviation", worst)]))
}

fn growth_conditions(config: &RunConfig) -> Result<Outcome> {
    let report = check_growth_conditions(&config.model, 1.0)?;
    Ok(Outcome::new(report.all_passed(), vec![("T", report.t_witness), ("s0", report.s0)]))
}

fn semilinear_scaling(config: &RunConfig) -> Result<Outcome> {
    let cfg = &config.shooting;
    let m = identity(4.0, 4.0);
    let one = shoot_ground_state(&m, 1.0, cfg)?;
    let mut worst: f64 = 0.0;
    for lambda in [1e-2, 1e2] {
        let p = shoot_ground_state(&m, lambda, cfg)?;
        let s = lambda.sqrt();
        worst = worst
            .max((p.v0 / (s * one.v0) - 1.0).abs())
            .max((p.mass_v * s / one.mass_v - 1.0).abs())
            .max((p.grad_sq / (s * one.grad_sq) - 1.0).abs());
    }
    Ok(Outcome::new(worst <= 1e-6, vec![("max_relative_error", worst), ("v0_at_1", one.v0)]))
}

const SWEEP_LAMBDAS: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

fn sweep_profiles(config: &RunConfig) -> Result<Vec<(DualModel, RadialProfile)>> {
    let jobs: Vec<(DualModel, f64)> =
        catalog(config).into_iter().flat_map(|m| SWEEP_LAMBDAS.iter().map(move |&l| (m, l))).collect();
    jobs.into_par_iter()
        .map(|(m, l)| {
            let p = shoot_ground_state(&m, l, &config.shooting)?;
            Ok((m, p))
        })
        .collect()
}

fn pohozaev_sweep(config: &RunConfig) -> Result<Outcome> {
    let profiles = sweep_profiles(config)?;
    let worst = profiles.iter().map(|(_, p)| p.pohozaev_residual).fold(0.0, f64::max);
    let n = profiles.len() as f64;
    Ok(Outcome::new(worst <= MAX_POHOZAEV && n >= 50.0, vec![("profiles", n), ("max_residual", worst)]))
}

fn profile_shape(config: &RunConfig) -> Result<Outcome> {
    let profiles = sweep_profiles(config)?;
    let mut bad = 0.0;
    let (mut kmin, mut kmax) = (f64::INFINITY, 0.0_f64);
    for (_, p) in &profiles {
        if !p.is_positive_decreasing() {
            bad += 1.0;
        }
        let k = p.tail.kappa / p.lambda.sqrt();
        kmin = kmin.min(k);
        kmax = kmax.max(k);
    }
    let ok = bad == 0.0 && kmin >= 0.9 && kmax <= 1.1;
    Ok(Outcome::new(ok, vec![("non_monotone", bad), ("kappa_ratio_min", kmin), ("kappa_ratio_max", kmax)]))
}

fn diagnostics(config: &RunConfig) -> Result<Outcome> {
    let cfg = &config.shooting;
    let mut pde: f64 = 0.0;
    let mut disc: f64 = 0.0;
    let mut poh: f64 = 0.0;
    for m in [config.model, DualModel::reference()] {
        for lambda in [1e-2, 1.0, 1e2] {
            let p = shoot_ground_state(&m, lambda, cfg)?;
            let d = profile_diagnostics(&p, &m, cfg);
            pde = pde.max(d.pde_residual);
            disc = disc.max(d.integral_discrepancy);
            poh = poh.max(d.pohozaev_residual_grid);
        }
    }
    let ok = pde <= 10.0 * cfg.ode_rel_tol && disc <= 1e-6 && poh <= MAX_POHOZAEV;
    Ok(Outcome::new(ok, vec![("pde_residual", pde), ("integral_discrepancy", disc), ("pohozaev_grid", poh)]))
}

fn exponent_table(_: &RunConfig) -> Result<Outcome> {
    let mut ok = true;
    for dim in 3..=8usize {
        let crit = 2.0 + 4.0 / dim as f64;
        let upper = if dim > 2 { 2.0 * dim as f64 / (dim as f64 - 2.0) } else { f64::INFINITY };
        for i in 1..200 {
            let e = 2.0 + (upper - 2.0) * i as f64 / 200.0;
            let x = mass_exponent(dim, e);
            let sign = exponent_sign(dim, e);
            ok &= match sign {
                ExponentSign::Positive => x > 0.0 && e < crit,
                ExponentSign::Negative => x < 0.0 && e > crit,
                ExponentSign::Zero => x.abs() < 1e-9,
            };
        }
        ok &= exponent_sign(dim, crit) == ExponentSign::Zero && mass_exponent(dim, crit).abs() < 1e-12;
    }
    Ok(Outcome::new(ok, vec![]))
}

fn dilation_identities(config: &RunConfig) -> Result<Outcome> {
    let m = &config.model;
    let v = semilinear_ground_state(m.nonlinearity().mu2, m.beta(), m.dim(), &config.shooting)?;
    let a = m.a_star();
    let n = m.dim() as i32;
    let vs = dilate(&v, a);
    let e1 = (vs.mass_v / (a.powi(n + 2) * v.mass_v) - 1.0).abs();
    let e2 = (vs.mass_v / (a * a) / (a.powi(n) * v.mass_v) - 1.0).abs();
    let e3 = (vs.v0 / (a * v.v0) - 1.0).abs();
    let worst = e1.max(e2).max(e3);
    Ok(Outcome::new(worst <= 1e-8, vec![("max_relative_error", worst)]))
}

fn mass_law(config: &RunConfig, regime: Regime, lambda: f64) -> Result<Outcome> {
    let p = shoot_ground_state(&config.model, lambda, &config.shooting)?;
    let rep = convergence_report(&config.model, std::slice::from_ref(&p), regime, &config.shooting)?;
    let ratio = rep.rows[0].mass_ratio;
    Ok(Outcome::new((ratio - 1.0).abs() <= 0.05, vec![("lambda", lambda), ("ratio", ratio), ("limit_mass", rep.limit_mass)]))
}

fn small_mass_law(config: &RunConfig) -> Result<Outcome> {
    mass_law(config, Regime::SmallLambda, 1e-3)
}

fn large_mass_law(config: &RunConfig) -> Result<Outcome> {
    mass_law(config, Regime::LargeLambda, 1e3)
}

fn mass_critical_flatness(config: &RunConfig) -> Result<Outcome> {
    let m = br(10.0 / 3.0, 10.0 / 3.0);
    let a = shoot_ground_state(&m, 1e-3, &config.shooting)?.mass_dual;
    let b = shoot_ground_state(&m, 1e-4, &config.shooting)?.mass_dual;
    let slope = (a / b).log10();
    Ok(Outcome::new(slope.abs() <= 0.05, vec![("slope", slope)]))
}

fn rescaled_convergence(config: &RunConfig) -> Result<Outcome> {
    let mut ok = true;
    let mut w = Vec::new();
    for (regime, sweep) in [(Regime::SmallLambda, SMALL_SWEEP), (Regime::LargeLambda, LARGE_SWEEP)] {
        let ps = sweep
            .par_iter()
            .map(|&l| shoot_ground_state(&config.model, l, &config.shooting))
            .collect::<Result<Vec<_>>>()?;
        let rep = convergence_report(&config.model, &ps, regime, &config.shooting)?;
        ok &= rep.sup_diff_decreasing() && rep.sup_diff_within(0.05);
        let key = if regime == Regime::SmallLambda { "small_rel_sup_diff" } else { "large_rel_sup_diff" };
        w.push((key, rep.extreme().sup_diff / rep.limit_sup));
    }
    Ok(Outcome::new(ok, w))
}

fn band(config: &RunConfig) -> Result<Outcome> {
    let mut ok = true;
    let mut w = Vec::new();
    for (regime, sweep) in [(Regime::SmallLambda, SMALL_SWEEP), (Regime::LargeLambda, LARGE_SWEEP)] {
        let ps = sweep
            .par_iter()
            .map(|&l| shoot_ground_state(&config.model, l, &config.shooting))
            .collect::<Result<Vec<_>>>()?;
        let e = regime.exponent(&config.model);
        let pts: Vec<(f64, f64)> = ps.iter().map(|p| (p.lambda, p.v0)).collect();
        let b = supnorm_band(&pts, e, regime)?;
        let rep = convergence_report(&config.model, &ps, regime, &config.shooting)?;
        let dev = (rep.extreme().sup_ratio - 1.0).abs();
        ok &= b.passed;
        let key = if regime == Regime::SmallLambda { "small_ratio_deviation" } else { "large_ratio_deviation" };
        w.push((key, dev));
    }
    Ok(Outcome::new(ok, w))
}

fn config_branch(config: &RunConfig) -> Result<Branch> {
    trace_branch(&config.model, &config.sweep, &config.shooting)
}

fn branch_trace(config: &RunConfig) -> Result<Outcome> {
    let b = config_branch(config)?;
    let worst = b.points.iter().map(|p| p.pohozaev_residual).fold(0.0, f64::max);
    let ok = b.failures.is_empty() && b.points.len() == config.sweep.count && worst <= MAX_POHOZAEV;
    Ok(Outcome::new(ok, vec![("points", b.points.len() as f64), ("max_pohozaev", worst)]))
}

fn dual_mass_inequality(config: &RunConfig) -> Result<Outcome> {
    let b = config_branch(config)?;
    let a2 = config.model.a_star().powi(2);
    let bad = b.points.iter().filter(|p| !(p.rho <= p.mass_v * (1.0 + 1e-12) && p.rho >= p.mass_v / a2)).count();
    Ok(Outcome::new(bad == 0, vec![("violations", bad as f64)]))
}

fn mass_map_limits(config: &RunConfig) -> Result<Outcome> {
    let b = config_branch(config)?;
    let map = mass_map(&b, &config.shooting)?;
    let n = b.points.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let first = (b.points[0].rho, b.points[1].rho);
    let last = (b.points[n - 1].rho, b.points[n - 2].rho);
    // (end value, its neighbour towards the interior)
    let trend = |limit: EndLimit, (edge, inner): (f64, f64)| match limit {
        EndLimit::Zero => Some(edge < inner),
        EndLimit::Infinite => Some(edge > inner),
        EndLimit::Finite(x) => ((edge / x - 1.0).abs() <= 0.05).then_some(true),
    };
    let results = [trend(map.small_lambda_limit, first), trend(map.large_lambda_limit, last)];
    let status = if results.contains(&Some(false)) {
        CheckStatus::Fail
    } else if results.contains(&None) {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    Ok(Outcome { status, witness: vec![("rho_first", first.0), ("rho_last", last.0)], detail: String::new() })
}

/// Masses ρ(1)·10^{k}, k = −1.5, −0.75, 0, 0.75, 1.5, on the identity-φ
/// quadratic model over λ ∈ [10⁻⁴, 10⁴].
pub fn closed_form_masses(rho1: f64) -> [f64; 5] {
    [-1.5, -0.75, 0.0, 0.75, 1.5].map(|k: f64| rho1 * 10f64.powf(k))
}

fn closed_form_roots(config: &RunConfig) -> Result<Outcome> {
    let cfg = &config.shooting;
    let m = identity(3.0, 3.0);
    let b = trace_branch(&m, &GridSpec::per_decade(1e-4, 1e4, 8), cfg)?;
    b.require_complete()?;
    let rho1 = shoot_ground_state(&m, 1.0, cfg)?.mass_dual;
    let p = mass_exponent(3, 3.0);
    let (mut res, mut lam) = (0.0_f64, 0.0_f64);
    let mut count_ok = true;
    for c in closed_form_masses(rho1) {
        let roots = solve_prescribed_mass(&m, c, &b, cfg)?;
        count_ok &= roots.len() == 1;
        let predicted = (c / rho1).powf(1.0 / p);
        for r in &roots {
            res = res.max(r.certified_residual);
            lam = lam.max((r.lambda / predicted - 1.0).abs());
        }
    }
    Ok(Outcome::new(
        count_ok && res <= 1e-4 && lam <= 1e-4,
        vec![("max_mass_residual", res), ("max_lambda_error", lam), ("rho_at_1", rho1)],
    ))
}

/// Mixed-case masses: one between the larger end value and the maximum of
/// the sampled ρ, one a hundred times above the maximum.
pub fn mixed_masses(b: &Branch) -> (f64, f64) {
    let (_, hi) = b.rho_range();
    let ends = b.points[0].rho.max(b.points[b.points.len() - 1].rho);
    ((ends * hi).sqrt(), 100.0 * hi)
}

fn mixed_multiplicity(config: &RunConfig) -> Result<Outcome> {
    let cfg = &config.shooting;
    let m = br(2.5, 4.0);
    let b = trace_branch(&m, &GridSpec::per_decade(1e-4, 1e4, 8), cfg)?;
    b.require_complete()?;
    let (small, large) = mixed_masses(&b);
    let roots = solve_prescribed_mass(&m, small, &b, cfg)?;
    let mut lams: Vec<f64> = roots.iter().map(|r| r.lambda).collect();
    lams.sort_by(f64::total_cmp);
    let separated = lams.len() >= 2 && lams.windows(2).all(|w| w[1] / w[0] >= 1.1);
    let (large_ok, detail) = match solve_prescribed_mass(&m, large, &b, cfg) {
        Err(Error::NoRootInBranch { verdict, .. }) => (verdict == "nonexistence expected", verdict),
        Ok(r) => (false, format!("{} root(s) for the large mass", r.len())),
        Err(e) => return Err(e),
    };
    let case_ok = classify_regime(&m, cfg)?.case_id == CaseId::IV1;
    Ok(Outcome::new(
        separated && large_ok && case_ok,
        vec![("c_small", small), ("roots_small", lams.len() as f64), ("c_large", large)],
    )
    .with_detail(detail))
}

fn probe(config: &RunConfig) -> Result<Outcome> {
    let b = config_branch(config)?;
    if b.points.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: b.points.len() });
    }
    let (lo, hi) = b.rho_range();
    let mut grid: Vec<f64> = (0..7).map(|i| lo * (hi / lo).powf((i as f64 + 0.5) / 7.0)).collect();
    grid.push(lo / 100.0);
    grid.push(hi * 100.0);
    let report = existence_probe(&config.model, &grid, &b, &config.shooting)?;
    let count = |s: ProbeStatus| report.rows.iter().filter(|r| r.status == s).count() as f64;
    let status = if report.any_failed() {
        CheckStatus::Fail
    } else if count(ProbeStatus::Inconclusive) > 0.0 && count(ProbeStatus::Pass) == 0.0 {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    Ok(Outcome {
        status,
        witness: vec![
            ("pass", count(ProbeStatus::Pass)),
            ("inconclusive", count(ProbeStatus::Inconclusive)),
            ("fail", count(ProbeStatus::Fail)),
        ],
        detail: format!("case {}", report.case_id.as_str()),
    })
}

fn case_table(_: &RunConfig) -> Result<Outcome> {
    let crit = 10.0 / 3.0;
    let sup = 11.0 / 3.0;
    let table = [
        (3.0, 3.0, CaseId::I),
        (crit, crit, CaseId::II),
        (3.0, crit, CaseId::III1),
        (crit, 3.0, CaseId::III2),
        (2.5, 4.0, CaseId::IV1),
        (4.0, 2.5, CaseId::IV2),
        (crit, 4.0, CaseId::V1),
        (sup, crit, CaseId::V2),
        (sup, sup, CaseId::VI),
    ];
    let bad = table.iter().filter(|(a, b, c)| CaseId::from_exponents(3, *a, *b) != *c).count();
    Ok(Outcome::new(bad == 0, vec![("mismatches", bad as f64)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_ids_unique() {
        let mut ids: Vec<&str> = CHECKS.iter().map(|c| c.0).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), CHECKS.len());
        for id in ids {
            let _ = check_fn(id);
        }
    }

    #[test]
    fn exit_codes() {
        let mk = |status| Check { id: "x", description: "", status, witness: BTreeMap::new(), detail: String::new() };
        assert_eq!(exit_code(&[mk(CheckStatus::Pass)]), 0);
        assert_eq!(exit_code(&[mk(CheckStatus::Pass), mk(CheckStatus::Inconclusive)]), 2);
        assert_eq!(exit_code(&[mk(CheckStatus::Inconclusive), mk(CheckStatus::Fail)]), 1);
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let ok = r#"{"model": {"phi": {"family": "identity"}, "f": {"family": "power_ratio", "alpha": 3, "beta": 3, "mu1": 1}, "N": 3}}"#;
        assert!(RunConfig::from_json(ok).is_ok());
        let bad = r#"{"model": {"phi": {"family": "identity"}, "f": {"family": "power_ratio", "alpha": 3, "beta": 3, "mu1": 1}, "N": 3}, "extra": 1}"#;
        assert!(RunConfig::from_json(bad).is_err());
    }

    #[test]
    fn models_suite_passes() {
        let v = run_suite(&RunConfig::reference(), Suite::Models);
        for c in &v.checks {
            assert_eq!(c.status, CheckStatus::Pass, "{}: {:?} {}", c.id, c.witness, c.detail);
        }
        assert_eq!(v.exit_code, 0);
    }
}
