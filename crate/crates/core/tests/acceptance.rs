//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use dualmass::asymptotics::{convergence_report, limit_mass, limit_profile, mass_ratio, Regime, LARGE_SWEEP, SMALL_SWEEP};
use dualmass::branch::{classify_regime, solve_prescribed_mass, trace_branch, CaseId, GridSpec};
use dualmass::radial::{shoot_ground_state, ShootingConfig};
use dualmass::verify::{run_suite, CheckStatus, RunConfig, Suite};
use dualmass::{DualModel, Error, NonlinearityModel, PhiModel, Result};

/// Cubic soliton −u'' − (2/r)u' + u = u³ in 3D: u(0), scipy DOP853 at rtol 1e-13.
const CUBIC_V0: f64 = 4.337_387_679_977_0;
/// ‖u‖₂² for −Δu + u = u² in 3D, same oracle.
const QUADRATIC_MASS: f64 = 130.980_710_15;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn cfg() -> ShootingConfig {
    ShootingConfig::default()
}

fn identity(alpha: f64, beta: f64) -> DualModel {
    DualModel::new(PhiModel::Identity, NonlinearityModel::power_ratio(alpha, beta, 1.0), 3).unwrap()
}

fn bounded(alpha: f64, beta: f64) -> DualModel {
    DualModel::new(PhiModel::REFERENCE, NonlinearityModel::power_ratio(alpha, beta, 1.0), 3).unwrap()
}

fn c1_semilinear_scaling() -> Result<Outcome> {
    let start = Instant::now();
    let m = identity(4.0, 4.0);
    let one = shoot_ground_state(&m, 1.0, &cfg())?;
    let mut worst: f64 = 0.0;
    for lambda in [1e-2, 1.0, 1e2] {
        let p = shoot_ground_state(&m, lambda, &cfg())?;
        // amplitude λ^{1/2}, mass λ^{2/(q−2)−N/2} = λ^{−1/2}
        worst = worst.max((p.v0 / (lambda.sqrt() * one.v0) - 1.0).abs());
        worst = worst.max((p.mass_v / (lambda.powf(-0.5) * one.mass_v) - 1.0).abs());
        worst = worst.max((p.grad_sq / (lambda.sqrt() * one.grad_sq) - 1.0).abs());
    }
    let oracle = (one.v0 / CUBIC_V0 - 1.0).abs();
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && oracle <= 1e-6 && elapsed <= Duration::from_secs(10),
        format!("max rel err {worst:.2e}, v1(0) vs oracle {oracle:.2e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn c2_pohozaev() -> Result<Outcome> {
    let verdict = run_suite(&RunConfig::reference(), Suite::Solver);
    let check = verdict.check("solver.pohozaev_sweep").expect("check present");
    let n = check.witness.get("profiles").copied().unwrap_or(0.0);
    let worst = check.witness.get("max_residual").copied().unwrap_or(f64::INFINITY);
    outcome(
        check.status == CheckStatus::Pass && n >= 50.0 && worst <= 1e-5,
        format!("{n} profiles, max residual {worst:.2e}"),
    )
}

fn c3_large_s_limit() -> Result<Outcome> {
    let m = DualModel::reference();
    let s = 1e4;
    let ratio = m.g_lambda(1.0, s)? / (s * s * s);
    let target = 4.0 / 9.0;
    let dev = (ratio / target - 1.0).abs();
    outcome(dev <= 0.01, format!("g(1e4)/1e12 = {ratio:.6}, target 4/9, deviation {dev:.2e}"))
}

fn mass_law(regime: Regime, lambda: f64) -> Result<(f64, Duration)> {
    let start = Instant::now();
    let m = DualModel::reference();
    let limit = limit_profile(&m, regime, &cfg())?;
    let lm = limit_mass(&m, regime, &limit);
    let p = shoot_ground_state(&m, lambda, &cfg())?;
    Ok((mass_ratio(&m, regime, lambda, p.mass_dual, lm), start.elapsed()))
}

fn c4_small_mass_law() -> Result<Outcome> {
    let (r, t) = mass_law(Regime::SmallLambda, 1e-3)?;
    outcome(
        (0.95..=1.05).contains(&r) && t <= Duration::from_secs(60),
        format!("ratio {r:.6} at lambda = 1e-3, {:.2}s", t.as_secs_f64()),
    )
}

fn c5_large_mass_law() -> Result<Outcome> {
    let (r, _) = mass_law(Regime::LargeLambda, 1e3)?;
    outcome((0.95..=1.05).contains(&r), format!("ratio {r:.6} at lambda = 1e3"))
}

fn c6_critical_flatness() -> Result<Outcome> {
    let m = bounded(10.0 / 3.0, 10.0 / 3.0);
    let a = shoot_ground_state(&m, 1e-3, &cfg())?.mass_dual;
    let b = shoot_ground_state(&m, 1e-4, &cfg())?.mass_dual;
    let slope = (a / b).ln() / 10f64.ln();
    outcome(slope.abs() <= 0.05, format!("slope {slope:.3e}"))
}

fn c7_rescaled_convergence() -> Result<Outcome> {
    let m = DualModel::reference();
    let mut ok = true;
    let mut detail = Vec::new();
    for (regime, sweep) in [(Regime::SmallLambda, SMALL_SWEEP), (Regime::LargeLambda, LARGE_SWEEP)] {
        let ps = sweep.iter().map(|&l| shoot_ground_state(&m, l, &cfg())).collect::<Result<Vec<_>>>()?;
        let rep = convergence_report(&m, &ps, regime, &cfg())?;
        // sweeps run towards the limit, so distances must fall along them
        let mut d: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.lambda, r.sup_diff)).collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0));
        if regime == Regime::SmallLambda {
            d.reverse();
        }
        let decreasing = d.windows(2).all(|w| w[1].1 < w[0].1);
        let rel = d[d.len() - 1].1 / rep.limit_sup;
        ok &= decreasing && rel <= 0.05;
        detail.push(format!("{}: decreasing {decreasing}, extreme {rel:.2e}", regime.as_str()));
    }
    outcome(ok, detail.join("; "))
}

fn c8_closed_form_roots() -> Result<Outcome> {
    let m = identity(3.0, 3.0);
    let b = trace_branch(&m, &GridSpec::per_decade(1e-4, 1e4, 8), &cfg())?;
    b.require_complete()?;
    let (mut res, mut lam) = (0.0_f64, 0.0_f64);
    let mut all_found = true;
    // five masses over three decades around ρ(1)
    for k in [-1.5, -0.75, 0.0, 0.75, 1.5] {
        let c = QUADRATIC_MASS * 10f64.powf(k);
        let roots = solve_prescribed_mass(&m, c, &b, &cfg())?;
        all_found &= !roots.is_empty();
        let predicted = (c / QUADRATIC_MASS).powi(2);
        for r in &roots {
            res = res.max(((r.rho - c) / c).abs()).max(r.certified_residual);
            lam = lam.max((r.lambda / predicted - 1.0).abs());
        }
    }
    outcome(
        all_found && res <= 1e-4 && lam <= 1e-4,
        format!("max mass residual {res:.2e}, max lambda error {lam:.2e}"),
    )
}

fn c9_mixed_multiplicity() -> Result<Outcome> {
    let m = bounded(2.5, 4.0);
    let class = classify_regime(&m, &cfg())?;
    let b = trace_branch(&m, &GridSpec::per_decade(1e-4, 1e4, 8), &cfg())?;
    b.require_complete()?;
    let small = 1.0;
    let mut lams: Vec<f64> = solve_prescribed_mass(&m, small, &b, &cfg())?.iter().map(|r| r.lambda).collect();
    lams.sort_by(f64::total_cmp);
    let separated = lams.len() >= 2 && lams.windows(2).all(|w| w[1] / w[0] >= 1.1);
    let large = 1e3;
    let verdict = match solve_prescribed_mass(&m, large, &b, &cfg()) {
        Err(Error::NoRootInBranch { verdict, .. }) => verdict,
        Ok(r) => format!("{} root(s)", r.len()),
        Err(e) => return Err(e),
    };
    outcome(
        class.case_id == CaseId::IV1 && separated && verdict == "nonexistence expected",
        format!("case {}, c = {small}: roots at {lams:.4?}; c = {large}: {verdict}", class.case_id.as_str()),
    )
}

fn c10_transform_battery() -> Result<Outcome> {
    let phi = PhiModel::REFERENCE;
    let a = phi.a_star();
    let n = 2001;
    let (mut roundtrip, mut sandwich, mut inverse) = (0.0_f64, 0usize, 0usize);
    for i in 0..n {
        let t = -1e3 + 2e3 * i as f64 / (n - 1) as f64;
        roundtrip = roundtrip.max((phi.capital_phi_inv(phi.capital_phi(t)) - t).abs() / t.abs().max(1.0));
    }
    for i in 0..n {
        let t = 1e-6 * 10f64.powf(12.0 * i as f64 / (n - 1) as f64);
        let p = phi.capital_phi(t);
        if !(t <= p && p <= a * t) {
            sandwich += 1;
        }
        for s in [t, -t] {
            if phi.capital_phi_inv(s).abs() > s.abs() {
                inverse += 1;
            }
        }
    }
    let mut fd: f64 = 0.0;
    for m in [DualModel::reference(), bounded(2.5, 4.0), bounded(3.0, 3.0)] {
        for lambda in [0.1, 1.0, 10.0] {
            for i in 0..400 {
                let s = 1e-3 * 10f64.powf(6.0 * i as f64 / 399.0);
                let central = |h: f64| -> Result<f64> {
                    Ok((m.g_lambda_antiderivative(lambda, s + h)? - m.g_lambda_antiderivative(lambda, s - h)?)
                        / (2.0 * h))
                };
                let h = 1e-3 * s;
                let d = (4.0 * central(h / 2.0)? - central(h)?) / 3.0;
                let g = m.g_lambda(lambda, s)?;
                fd = fd.max(((d - g) / g).abs());
            }
        }
    }
    outcome(
        roundtrip <= 1e-9 && sandwich == 0 && inverse == 0 && fd <= 1e-8,
        format!(
            "roundtrip {roundtrip:.2e} ({n} pts), sandwich violations {sandwich}, inverse violations {inverse}, \
             FD rel err {fd:.2e} (3600 pts)"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("semilinear scaling exactness", c1_semilinear_scaling),
        ("Pohozaev residual over the verify sweep", c2_pohozaev),
        ("large-s limit of g_lambda", c3_large_s_limit),
        ("small-lambda mass law", c4_small_mass_law),
        ("large-lambda mass law", c5_large_mass_law),
        ("mass-critical flatness", c6_critical_flatness),
        ("rescaled convergence", c7_rescaled_convergence),
        ("prescribed mass, power case", c8_closed_form_roots),
        ("mixed-case multiplicity", c9_mixed_multiplicity),
        ("dual-transform battery", c10_transform_battery),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!passed);
        println!("{} criterion {:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" }, k + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
