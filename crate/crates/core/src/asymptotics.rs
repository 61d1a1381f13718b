//! Small- and large-λ rescalings of the branch and the limit laws they obey.
//!
//! As λ → 0 the rescaled profiles λ^{1/(2−α)}v(x/√λ) approach U, and the dual
//! mass behaves like λ^{−N/2+2/(α−2)}‖U‖₂². As λ → ∞ the β-rescaling
//! approaches V* = a*V(·/a*), and ρ ~ λ^{−N/2+2/(β−2)}(a*)^N‖V‖₂².

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::branch::Branch;
use crate::error::{Error, Result};
use crate::models::DualModel;
use crate::numerics::{unit_sphere_area, Pchip};
use crate::radial::{semilinear_ground_state, RadialProfile, ShootingConfig, Tail};

/// Three decades towards each end, used by the reports and the CLI.
pub const SMALL_SWEEP: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const LARGE_SWEEP: [f64; 3] = [1e1, 1e2, 1e3];

/// Relative tolerance for deciding e = 2 + 4/N.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SmallLambda,
    LargeLambda,
}

impl Regime {
    /// Which exponent governs this end of the branch.
    pub fn exponent(self, model: &DualModel) -> f64 {
        match self {
            Regime::SmallLambda => model.alpha(),
            Regime::LargeLambda => model.beta(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SmallLambda => "small_lambda",
            Regime::LargeLambda => "large_lambda",
        }
    }
}

/// λ-exponent −N/2 + 2/(e−2) of the mass map near the end governed by e.
pub fn mass_exponent(dim: usize, e: f64) -> f64 {
    -(dim as f64) / 2.0 + 2.0 / (e - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentSign {
    Negative,
    Zero,
    Positive,
}

/// Sign of the mass exponent, decided by comparing e with 2 + 4/N; the
/// exponent is positive exactly when e is mass-subcritical.
pub fn exponent_sign(dim: usize, e: f64) -> ExponentSign {
    let crit = 2.0 + 4.0 / dim as f64;
    if (e - crit).abs() <= CRITICAL_TOL * crit {
        ExponentSign::Zero
    } else if e < crit {
        ExponentSign::Positive
    } else {
        ExponentSign::Negative
    }
}

/// w(x) = λ^{1/(2−e)}·v(x/√λ) on the grid x = √λ·r.
#[derive(Debug, Clone)]
pub struct RescaledProfile {
    pub lambda: f64,
    pub regime: Regime,
    pub exponent: f64,
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    pub tail: Tail,
    dim: usize,
    spline: Pchip,
}

impl RescaledProfile {
    pub fn eval(&self, x: f64) -> f64 {
        let last = *self.grid.last().expect("non-empty grid");
        if x <= last {
            self.spline.eval(x)
        } else {
            let half = (self.dim as f64 - 1.0) / 2.0;
            self.tail.a * x.powf(-half) * (-self.tail.kappa * x).exp()
        }
    }
}

pub fn rescale(profile: &RadialProfile, exponent: f64, regime: Regime) -> RescaledProfile {
    let lambda = profile.lambda;
    let sq = lambda.sqrt();
    let amp = lambda.powf(1.0 / (2.0 - exponent));
    let grid: Vec<f64> = profile.grid.iter().map(|r| r * sq).collect();
    let w: Vec<f64> = profile.values.iter().map(|v| (amp * v).max(0.0)).collect();
    let half = (profile.dim as f64 - 1.0) / 2.0;
    let tail = Tail {
        a: amp * profile.tail.a * lambda.powf(half / 2.0),
        kappa: profile.tail.kappa / sq,
    };
    let spline = Pchip::new(grid.clone(), w.clone());
    RescaledProfile { lambda, regime, exponent, grid, w, tail, dim: profile.dim, spline }
}

/// U (small λ) or V* = a*V(·/a*) (large λ).
pub fn limit_profile(model: &DualModel, regime: Regime, config: &ShootingConfig) -> Result<RadialProfile> {
    let f = model.nonlinearity();
    let dim = model.dim();
    match regime {
        Regime::SmallLambda => semilinear_ground_state(f.mu1, model.alpha(), dim, config),
        Regime::LargeLambda => {
            let v = semilinear_ground_state(f.mu2, model.beta(), dim, config)?;
            Ok(dilate(&v, model.a_star()))
        }
    }
}

/// a·P(·/a) together with its transformed norms; the result solves
/// −ΔW + a⁻²W = μa^{−e}W^{e−1} when P solves the λ = 1 power equation.
pub fn dilate(p: &RadialProfile, a: f64) -> RadialProfile {
    let n = p.dim as f64;
    let vol = a.powf(n);
    let half = (n - 1.0) / 2.0;
    RadialProfile {
        lambda: p.lambda / (a * a),
        v0: a * p.v0,
        dim: p.dim,
        grid: p.grid.iter().map(|r| a * r).collect(),
        values: p.values.iter().map(|v| a * v).collect(),
        slopes: p.slopes.clone(),
        dual_values: p.dual_values.iter().map(|v| a * v).collect(),
        mass_dual: vol * a * a * p.mass_dual,
        mass_v: vol * a * a * p.mass_v,
        grad_sq: vol * p.grad_sq,
        potential: vol * p.potential,
        energy: vol * p.energy,
        pohozaev_residual: p.pohozaev_residual,
        tail: Tail { a: a * p.tail.a * a.powf(half), kappa: p.tail.kappa / a },
        tail_fraction: p.tail_fraction,
        bracket_width: p.bracket_width,
    }
}

/// Normaliser of the mass law: ‖U‖₂² or (a*)^N‖V‖₂² = (a*)^{−2}‖V*‖₂².
pub fn limit_mass(model: &DualModel, regime: Regime, limit: &RadialProfile) -> f64 {
    match regime {
        Regime::SmallLambda => limit.mass_v,
        Regime::LargeLambda => limit.mass_v / (model.a_star() * model.a_star()),
    }
}

/// ρ(λ)·λ^{N/2−2/(e−2)} divided by the limit mass.
pub fn mass_ratio(model: &DualModel, regime: Regime, lambda: f64, rho: f64, limit_mass: f64) -> f64 {
    let e = regime.exponent(model);
    rho * lambda.powf(-mass_exponent(model.dim(), e)) / limit_mass
}

#[derive(Debug, Clone, Serialize)]
pub struct BandRow {
    pub lambda: f64,
    pub ratio: f64,
}

/// r(λ) = ‖v_λ‖∞^{e−2}/λ along the branch.
#[derive(Debug, Clone, Serialize)]
pub struct SupnormBand {
    pub regime: Regime,
    pub rows: Vec<BandRow>,
    /// r at the λ deepest in the regime.
    pub limit: f64,
    pub bounded: bool,
    /// ‖v_λ‖∞ increasing in λ (checked for large λ only).
    pub sup_increasing: bool,
    pub passed: bool,
}

/// `points` are (λ, ‖v_λ‖∞) pairs.
pub fn supnorm_band(points: &[(f64, f64)], exponent: f64, regime: Regime) -> Result<SupnormBand> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: points.len() });
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rows: Vec<BandRow> =
        pts.iter().map(|&(lambda, sup)| BandRow { lambda, ratio: sup.powf(exponent - 2.0) / lambda }).collect();
    let (limit, deep_lambda) = match regime {
        Regime::SmallLambda => (rows[0].ratio, rows[0].lambda),
        Regime::LargeLambda => (rows[rows.len() - 1].ratio, rows[rows.len() - 1].lambda),
    };
    let bounded = rows
        .iter()
        .filter(|r| (r.lambda / deep_lambda).log10().abs() <= 1.0 + 1e-9)
        .all(|r| r.ratio >= limit / 2.0 && r.ratio <= 2.0 * limit);
    let sup_increasing = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let passed = bounded && (regime == Regime::SmallLambda || sup_increasing);
    Ok(SupnormBand { regime, rows, limit, bounded, sup_increasing, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub lambda: f64,
    /// max |w − W| over the limit's grid.
    pub sup_diff: f64,
    pub l2_diff: f64,
    /// r(λ)/W(0)^{e−2}.
    pub sup_ratio: f64,
    pub mass_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitId {
    U,
    #[serde(rename = "V*")]
    VStar,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub regime: Regime,
    pub limit_profile_id: LimitId,
    pub limit_sup: f64,
    pub limit_mass: f64,
    /// Rows sorted by λ.
    pub rows: Vec<ReportRow>,
}

impl AsymptoticsReport {
    /// Row at the λ deepest in the regime.
    pub fn extreme(&self) -> &ReportRow {
        match self.regime {
            Regime::SmallLambda => &self.rows[0],
            Regime::LargeLambda => &self.rows[self.rows.len() - 1],
        }
    }

    /// Sup distance strictly decreasing as λ moves into the regime. Once a
    /// distance is at the solver's noise floor (10⁻⁸ of the limit's sup
    /// norm, reached when the scaling law is exact) it counts as converged.
    pub fn sup_diff_decreasing(&self) -> bool {
        let floor = 1e-8 * self.limit_sup;
        let mut d: Vec<f64> = self.rows.iter().map(|r| r.sup_diff).collect();
        if self.regime == Regime::SmallLambda {
            d.reverse();
        }
        d.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
    }

    pub fn mass_ratio_within(&self, tol: f64) -> bool {
        (self.extreme().mass_ratio - 1.0).abs() <= tol
    }

    pub fn sup_diff_within(&self, tol: f64) -> bool {
        self.extreme().sup_diff <= tol * self.limit_sup
    }

    /// CSV with header `lambda,sup_diff,l2_diff,sup_ratio,mass_ratio,regime`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,sup_diff,l2_diff,sup_ratio,mass_ratio,regime")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.lambda,
                r.sup_diff,
                r.l2_diff,
                r.sup_ratio,
                r.mass_ratio,
                self.regime.as_str()
            )?;
        }
        Ok(())
    }
}

/// Distances (sup, L²) between a rescaled profile and the limit, on the
/// limit's grid.
pub fn distance_to_limit(w: &RescaledProfile, limit: &RadialProfile) -> (f64, f64) {
    let dim = limit.dim as i32;
    let g = &limit.grid;
    let mut sup: f64 = 0.0;
    let mut l2 = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (i, &x) in g.iter().enumerate() {
        let d = w.eval(x) - limit.values[i];
        sup = sup.max(d.abs());
        let wd = x.powi(dim - 1) * d * d;
        if let Some((x0, w0)) = prev {
            l2 += 0.5 * (x - x0) * (w0 + wd);
        }
        prev = Some((x, wd));
    }
    (sup, (unit_sphere_area(limit.dim) * l2).sqrt())
}

/// Convergence report for the given profiles against U or V*.
pub fn convergence_report(
    model: &DualModel,
    profiles: &[RadialProfile],
    regime: Regime,
    config: &ShootingConfig,
) -> Result<AsymptoticsReport> {
    let limit = limit_profile(model, regime, config)?;
    Ok(report_against(model, profiles.iter(), regime, &limit))
}

fn report_against<'a>(
    model: &DualModel,
    profiles: impl Iterator<Item = &'a RadialProfile>,
    regime: Regime,
    limit: &RadialProfile,
) -> AsymptoticsReport {
    let e = regime.exponent(model);
    let lm = limit_mass(model, regime, limit);
    let band_limit = limit.v0.powf(e - 2.0);
    let mut rows: Vec<ReportRow> = profiles
        .map(|p| {
            let w = rescale(p, e, regime);
            let (sup_diff, l2_diff) = distance_to_limit(&w, limit);
            ReportRow {
                lambda: p.lambda,
                sup_diff,
                l2_diff,
                sup_ratio: p.v0.powf(e - 2.0) / p.lambda / band_limit,
                mass_ratio: mass_ratio(model, regime, p.lambda, p.mass_dual, lm),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    AsymptoticsReport {
        regime,
        limit_profile_id: match regime {
            Regime::SmallLambda => LimitId::U,
            Regime::LargeLambda => LimitId::VStar,
        },
        limit_sup: limit.v0,
        limit_mass: lm,
        rows,
    }
}

/// Mass-law ratios over the branch points lying in the regime
/// (λ ≤ 10⁻¹ for small λ, λ ≥ 10 for large λ).
pub fn mass_limit_ratios(
    branch: &Branch,
    model: &DualModel,
    regime: Regime,
    config: &ShootingConfig,
) -> Result<AsymptoticsReport> {
    let idx: Vec<usize> = (0..branch.points.len())
        .filter(|&i| {
            let l = branch.points[i].lambda;
            match regime {
                Regime::SmallLambda => l <= 1e-1 * (1.0 + 1e-12),
                Regime::LargeLambda => l >= 1e1 * (1.0 - 1e-12),
            }
        })
        .collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: idx.len() });
    }
    let profiles = idx.iter().map(|&i| branch.profile(i, config)).collect::<Result<Vec<_>>>()?;
    let limit = limit_profile(model, regime, config)?;
    Ok(report_against(model, profiles.iter(), regime, &limit))
}
