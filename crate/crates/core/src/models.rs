//! Model families for the quasilinear coefficient φ and the nonlinearity
//! f, the dual change of variables v = Φ(u) and the transformed
//! nonlinearity g_λ that drives `−Δv + λv = g_λ(v)`.
//!
//! Adding a family means adding an enum variant and its closed forms; the
//! rest of the crate only talks to [`DualModel`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{carlson_rd, integrate_adaptive};

/// Coefficient φ of the quasilinear term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiModel {
    /// φ ≡ 1 (semilinear case).
    Identity,
    /// φ(t) = (1 + b·t²/(1+t²))^{1/2}.
    BoundedRational { b: f64 },
}

impl PhiModel {
    /// The model from the self-channeling laser application, b = 1/2.
    pub const REFERENCE: PhiModel = PhiModel::BoundedRational { b: 0.5 };

    fn validate(&self) -> Result<()> {
        match *self {
            PhiModel::Identity => Ok(()),
            PhiModel::BoundedRational { b } if b.is_finite() && b > 0.0 => Ok(()),
            PhiModel::BoundedRational { b } => {
                Err(Error::InvalidModel(format!("bounded_rational needs b > 0, got {b}")))
            }
        }
    }

    /// φ(t); even in t.
    pub fn phi(&self, t: f64) -> f64 {
        match *self {
            PhiModel::Identity => 1.0,
            PhiModel::BoundedRational { b } => (1.0 + b * saturation(t)).sqrt(),
        }
    }

    /// φ′(t).
    pub fn phi_prime(&self, t: f64) -> f64 {
        match *self {
            PhiModel::Identity => 0.0,
            PhiModel::BoundedRational { b } => {
                let w = 1.0 + t * t;
                b * t / (w * w * self.phi(t))
            }
        }
    }

    /// a* = lim φ(t) as t → ∞.
    pub fn a_star(&self) -> f64 {
        match *self {
            PhiModel::Identity => 1.0,
            PhiModel::BoundedRational { b } => (1.0 + b).sqrt(),
        }
    }

    /// Φ(t) = ∫₀ᵗ φ. For the bounded-rational family, integrating by parts
    /// after t = tan θ gives Φ(t) = tφ(t) − (b/3)·sin³θ·R_D(cos²θ, 1 + b sin²θ, 1).
    pub fn capital_phi(&self, t: f64) -> f64 {
        match *self {
            PhiModel::Identity => t,
            PhiModel::BoundedRational { b } => {
                if t == 0.0 {
                    return 0.0;
                }
                let a = t.abs();
                let (sin, cos2) = if a <= 1.0 {
                    let w = 1.0 + a * a;
                    (a / w.sqrt(), 1.0 / w)
                } else {
                    let inv = 1.0 / a;
                    let w = 1.0 + inv * inv;
                    (1.0 / w.sqrt(), inv * inv / w)
                };
                let value = a * self.phi(a)
                    - b / 3.0 * sin * sin * sin * carlson_rd(cos2, 1.0 + b * sin * sin, 1.0);
                value.copysign(t)
            }
        }
    }

    /// φ(t) − 1 without cancellation for small t.
    pub fn phi_minus_one(&self, t: f64) -> f64 {
        match *self {
            PhiModel::Identity => 0.0,
            PhiModel::BoundedRational { b } => {
                let bq = b * saturation(t);
                bq / ((1.0 + bq).sqrt() + 1.0)
            }
        }
    }

    /// Φ(t) − t, accurate where Φ(t) and t agree to many digits.
    pub fn excess(&self, t: f64) -> f64 {
        match *self {
            PhiModel::Identity => 0.0,
            PhiModel::BoundedRational { b } => {
                if t == 0.0 {
                    return 0.0;
                }
                let a = t.abs();
                let (sin, cos2) = if a <= 1.0 {
                    let w = 1.0 + a * a;
                    (a / w.sqrt(), 1.0 / w)
                } else {
                    let inv = 1.0 / a;
                    let w = 1.0 + inv * inv;
                    (1.0 / w.sqrt(), inv * inv / w)
                };
                let value = a * self.phi_minus_one(a)
                    - b / 3.0 * sin * sin * sin * carlson_rd(cos2, 1.0 + b * sin * sin, 1.0);
                value.copysign(t)
            }
        }
    }

    /// Φ⁻¹(s) by Newton's method from the right, safeguarded by the bracket
    /// [|s|/a*, |s|] that Φ(t) ∈ [t, a*·t] provides.
    pub fn capital_phi_inv(&self, s: f64) -> f64 {
        match *self {
            PhiModel::Identity => s,
            PhiModel::BoundedRational { .. } => {
                if s == 0.0 {
                    return 0.0;
                }
                let target = s.abs();
                let mut lo = target / self.a_star();
                let mut hi = target;
                // Φ is convex on [0, ∞), so Newton from above decreases monotonically
                let mut t = hi;
                for _ in 0..100 {
                    let r = self.capital_phi(t) - target;
                    if r == 0.0 {
                        break;
                    }
                    if r > 0.0 {
                        hi = hi.min(t);
                    } else {
                        lo = lo.max(t);
                    }
                    let mut next = t - r / self.phi(t);
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - t).abs() <= 2.0 * f64::EPSILON * t {
                        t = next;
                        break;
                    }
                    t = next;
                }
                t.copysign(s)
            }
        }
    }
}

/// t²/(1+t²), written to stay finite for huge t.
fn saturation(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        t * t / (1.0 + t * t)
    } else {
        1.0 / (1.0 + 1.0 / (t * t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityFamily {
    /// f(t) = μ₁t^{α−1} + μ₂t^{β−1}, α < β.
    SumPowers,
    /// f(t) = μ t^{α−1}(1+t)^{β−α}, any α, β; μ₁ = μ₂ = μ.
    PowerRatio,
}

/// Nonlinearity f on [0, ∞) with small- and large-amplitude exponents α, β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityModel {
    pub family: NonlinearityFamily,
    pub alpha: f64,
    pub beta: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl NonlinearityModel {
    pub fn sum_powers(alpha: f64, beta: f64, mu1: f64, mu2: f64) -> Self {
        Self { family: NonlinearityFamily::SumPowers, alpha, beta, mu1, mu2 }
    }

    pub fn power_ratio(alpha: f64, beta: f64, mu: f64) -> Self {
        Self { family: NonlinearityFamily::PowerRatio, alpha, beta, mu1: mu, mu2: mu }
    }

    /// Single power μt^{q−1}.
    pub fn pure_power(q: f64, mu: f64) -> Self {
        Self::power_ratio(q, q, mu)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let upper = critical_sobolev(dim);
        for (name, e) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(e > 2.0 && e < upper) {
                return Err(Error::InvalidModel(format!(
                    "{name} = {e} outside (2, 2N/(N-2)) = (2, {upper})"
                )));
            }
        }
        if !(self.mu1 > 0.0 && self.mu2 > 0.0 && self.mu1.is_finite() && self.mu2.is_finite()) {
            return Err(Error::InvalidModel("mu1 and mu2 must be positive".into()));
        }
        match self.family {
            NonlinearityFamily::SumPowers if self.alpha >= self.beta => Err(Error::InvalidModel(
                format!("sum_powers needs alpha < beta, got {} >= {}", self.alpha, self.beta),
            )),
            NonlinearityFamily::PowerRatio if self.mu1 != self.mu2 => Err(Error::InvalidModel(
                "power_ratio has a single amplitude: mu1 must equal mu2".into(),
            )),
            _ => Ok(()),
        }
    }

    pub(crate) fn f_raw(&self, t: f64) -> f64 {
        match self.family {
            NonlinearityFamily::SumPowers => {
                self.mu1 * t.powf(self.alpha - 1.0) + self.mu2 * t.powf(self.beta - 1.0)
            }
            NonlinearityFamily::PowerRatio => {
                self.mu1 * t.powf(self.alpha - 1.0) * (1.0 + t).powf(self.beta - self.alpha)
            }
        }
    }

    pub(crate) fn f_prime_raw(&self, t: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        match self.family {
            NonlinearityFamily::SumPowers => {
                self.mu1 * (a - 1.0) * t.powf(a - 2.0) + self.mu2 * (b - 1.0) * t.powf(b - 2.0)
            }
            NonlinearityFamily::PowerRatio => {
                let base = (1.0 + t).powf(b - a - 1.0);
                self.mu1 * t.powf(a - 2.0) * base * ((a - 1.0) * (1.0 + t) + (b - a) * t)
            }
        }
    }

    pub(crate) fn capital_f_raw(&self, t: f64) -> f64 {
        match self.family {
            NonlinearityFamily::SumPowers => {
                self.mu1 * t.powf(self.alpha) / self.alpha + self.mu2 * t.powf(self.beta) / self.beta
            }
            NonlinearityFamily::PowerRatio if self.alpha == self.beta => {
                self.mu1 * t.powf(self.alpha) / self.alpha
            }
            NonlinearityFamily::PowerRatio => {
                if t == 0.0 {
                    return 0.0;
                }
                integrate_adaptive(|x| self.f_raw(x), 0.0, t, 1e-12 * f64::MIN_POSITIVE, 1e-13)
            }
        }
    }

    /// f(t), t ≥ 0.
    pub fn f(&self, t: f64) -> Result<f64> {
        check_nonneg(t)?;
        Ok(self.f_raw(t))
    }

    /// f′(t), t ≥ 0.
    pub fn f_prime(&self, t: f64) -> Result<f64> {
        check_nonneg(t)?;
        Ok(self.f_prime_raw(t))
    }

    /// F(t) = ∫₀ᵗ f, t ≥ 0.
    pub fn capital_f(&self, t: f64) -> Result<f64> {
        check_nonneg(t)?;
        Ok(self.capital_f_raw(t))
    }
}

fn check_nonneg(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { name: "t", value: t, expected: "t >= 0" })
    }
}

/// 2* = 2N/(N−2).
pub fn critical_sobolev(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 2.0)
}

/// Mass-critical exponent 2 + 4/N.
pub fn mass_critical(dim: usize) -> f64 {
    2.0 + 4.0 / dim as f64
}

/// The dual pair (φ, f) in dimension N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct DualModel {
    phi: PhiModel,
    f: NonlinearityModel,
    dim: usize,
}

impl DualModel {
    pub fn new(phi: PhiModel, f: NonlinearityModel, dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidModel(format!("dimension N = {dim} must be >= 3")));
        }
        phi.validate()?;
        f.validate(dim)?;
        Ok(Self { phi, f, dim })
    }

    /// φ of the self-channeling model with f = t² + t³, N = 3.
    pub fn reference() -> Self {
        Self::new(PhiModel::REFERENCE, NonlinearityModel::sum_powers(3.0, 4.0, 1.0, 1.0), 3)
            .expect("reference model is admissible")
    }

    pub fn phi(&self) -> &PhiModel {
        &self.phi
    }

    pub fn nonlinearity(&self) -> &NonlinearityModel {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.f.alpha
    }

    pub fn beta(&self) -> f64 {
        self.f.beta
    }

    pub fn a_star(&self) -> f64 {
        self.phi.a_star()
    }

    pub fn mass_critical(&self) -> f64 {
        mass_critical(self.dim)
    }

    pub fn critical_sobolev(&self) -> f64 {
        critical_sobolev(self.dim)
    }

    /// Same φ and N with a different nonlinearity.
    pub fn with_nonlinearity(&self, f: NonlinearityModel) -> Result<Self> {
        Self::new(self.phi, f, self.dim)
    }

    /// g_λ(s) = f(Φ⁻¹s)/φ(Φ⁻¹s) − λΦ⁻¹(s)/φ(Φ⁻¹s) + λs.
    pub fn g_lambda(&self, lambda: f64, s: f64) -> Result<f64> {
        check_lambda(lambda)?;
        check_nonneg(s)?;
        let t = self.phi.capital_phi_inv(s);
        Ok(self.f.f_raw(t) / self.phi.phi(t) + self.h2_at(lambda, t))
    }

    /// λ(s − t/φ(t)) at s = Φ(t), as λ(Φ(t) − t) + λt(φ − 1)/φ.
    fn h2_at(&self, lambda: f64, t: f64) -> f64 {
        let p = self.phi.phi(t);
        lambda * (self.phi.excess(t) + t * self.phi.phi_minus_one(t) / p)
    }

    /// G̃(s) = F(Φ⁻¹s) − (λ/2)(Φ⁻¹s)² + (λ/2)s², the antiderivative of g_λ
    /// with G̃(0) = 0.
    pub fn g_lambda_antiderivative(&self, lambda: f64, s: f64) -> Result<f64> {
        check_lambda(lambda)?;
        check_nonneg(s)?;
        let t = self.phi.capital_phi_inv(s);
        // s² − t² = e(2t + e) with e = Φ(t) − t
        let e = self.phi.excess(t);
        Ok(self.f.capital_f_raw(t) + 0.5 * lambda * e * (2.0 * t + e))
    }

    /// G̃₀(s) = F(Φ⁻¹s) − (λ/2)(Φ⁻¹s)², the potential whose sign decides
    /// whether a trajectory started at s can reach zero.
    pub fn reduced_potential(&self, lambda: f64, s: f64) -> f64 {
        let t = self.phi.capital_phi_inv(s);
        self.f.capital_f_raw(t) - 0.5 * lambda * t * t
    }

    /// h₂(s) = λs − λΦ⁻¹(s)/φ(Φ⁻¹s), the λ-part of g_λ.
    pub fn h2(&self, lambda: f64, s: f64) -> f64 {
        self.h2_at(lambda, self.phi.capital_phi_inv(s))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name: "lambda", value: lambda, expected: "lambda > 0" })
    }
}

/// JSON form: `{"phi": {...}, "f": {...}, "N": 3}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub phi: PhiModel,
    pub f: NonlinearitySpec,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub family: NonlinearityFamily,
    pub alpha: f64,
    pub beta: f64,
    pub mu1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
}

impl TryFrom<ModelSpec> for DualModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        let f = spec.f;
        let mu2 = match (f.family, f.mu2) {
            (_, Some(m)) => m,
            (NonlinearityFamily::PowerRatio, None) => f.mu1,
            (NonlinearityFamily::SumPowers, None) => {
                return Err(Error::InvalidModel("sum_powers needs mu2".into()))
            }
        };
        let nl = NonlinearityModel { family: f.family, alpha: f.alpha, beta: f.beta, mu1: f.mu1, mu2 };
        DualModel::new(spec.phi, nl, spec.n)
    }
}

impl From<DualModel> for ModelSpec {
    fn from(m: DualModel) -> Self {
        ModelSpec {
            phi: m.phi,
            f: NonlinearitySpec {
                family: m.f.family,
                alpha: m.f.alpha,
                beta: m.f.beta,
                mu1: m.f.mu1,
                mu2: Some(m.f.mu2),
            },
            n: m.dim,
        }
    }
}

/// Outcome of one sampled growth check.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionItem {
    pub id: &'static str,
    pub passed: bool,
    pub witness: Vec<(String, f64)>,
}

/// Numeric confirmation that g_λ satisfies the Berestycki–Lions type
/// conditions used for existence of ground states.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub lambda: f64,
    pub items: Vec<ConditionItem>,
    /// Smallest geometric-grid point T with ∫₀ᵀ g_λ > λT²/2.
    pub t_witness: f64,
    /// Largest scanned s₀ such that g_λ(s) ≤ s·g′_λ(s) held on the grid in (0, s₀].
    pub s0: f64,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

/// Upper end of the geometric search for T.
pub const T_SEARCH_MAX: f64 = 1e6;

/// Central-difference derivative of g_λ with step 10⁻⁶·max(1, s), capped
/// at s/10³ so the stencil stays inside [0, ∞).
pub fn g_lambda_derivative_fd(model: &DualModel, lambda: f64, s: f64) -> Result<f64> {
    let h = (1e-6 * s.max(1.0)).min(1e-3 * s);
    Ok((model.g_lambda(lambda, s + h)? - model.g_lambda(lambda, s - h)?) / (2.0 * h))
}

/// Smallest point on the grid 10⁻³⁰·2ᵏ (up to `T_SEARCH_MAX`) where
/// ∫₀ᵀ g_λ > λT²/2.
pub fn find_potential_witness(model: &DualModel, lambda: f64) -> Result<f64> {
    let mut s = 1e-30;
    while s <= T_SEARCH_MAX {
        if model.reduced_potential(lambda, s) > 0.0 {
            return Ok(s);
        }
        s *= 2.0;
    }
    Err(Error::TNotFound { s_max: T_SEARCH_MAX })
}

/// Samples the growth conditions of g_λ: (a) g_λ(s)/s → 0, (b) a witness T,
/// (c) g_λ ≤ s·g′_λ near 0, (d) g_λ(s)/s^{β−1} → μ₂/(a*)^β.
pub fn check_growth_conditions(model: &DualModel, lambda: f64) -> Result<ConditionReport> {
    check_lambda(lambda)?;
    let mut items = Vec::with_capacity(4);

    // (a) sublinearity at zero
    let ratios: Vec<f64> = (1..=10)
        .map(|k| {
            let s = 10f64.powi(-k);
            model.g_lambda(lambda, s).map(|g| g / s)
        })
        .collect::<Result<_>>()?;
    let decreasing = ratios[1..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let last = *ratios.last().expect("ten samples");
    items.push(ConditionItem {
        id: "sublinear_at_zero",
        passed: decreasing && last < 1e-3,
        witness: vec![
            ("max_ratio".into(), ratios.iter().cloned().fold(f64::MIN, f64::max)),
            ("ratio_at_1e-10".into(), last),
        ],
    });

    // (b) potential witness
    let t_witness = find_potential_witness(model, lambda)?;
    let integral = model.g_lambda_antiderivative(lambda, t_witness)?;
    items.push(ConditionItem {
        id: "potential_witness",
        passed: integral > 0.5 * lambda * t_witness * t_witness,
        witness: vec![("T".into(), t_witness), ("integral".into(), integral)],
    });

    // (c) g ≤ s g′ on (0, s₀]
    let mut s0 = 0.0;
    for j in 0..=88 {
        let s = 1e-8 * 10f64.powf(j as f64 / 8.0);
        let g = model.g_lambda(lambda, s)?;
        let dg = g_lambda_derivative_fd(model, lambda, s)?;
        if g <= s * dg * (1.0 + 1e-7) {
            s0 = s;
        } else {
            break;
        }
    }
    items.push(ConditionItem {
        id: "monotone_quotient_near_zero",
        passed: s0 > 0.0,
        witness: vec![("s0".into(), s0)],
    });

    // (d) large-s power law
    let s = 1e4;
    let ratio = model.g_lambda(lambda, s)? / s.powf(model.beta() - 1.0);
    let limit = model.f.mu2 / model.a_star().powf(model.beta());
    items.push(ConditionItem {
        id: "large_s_power_law",
        passed: ((ratio - limit) / limit).abs() <= 0.01,
        witness: vec![("ratio".into(), ratio), ("limit".into(), limit)],
    });

    let report = ConditionReport { lambda, items, t_witness, s0 };
    if let Some(failed) = report.items.iter().find(|i| !i.passed) {
        return Err(Error::ConditionNotMet { item: failed.id, report: Box::new(report.clone()) });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_phi() -> PhiModel {
        PhiModel::REFERENCE
    }

    #[test]
    fn excess_matches_primitive() {
        let phi = reference_phi();
        for t in [0.3, 1.0, 7.0, 300.0] {
            let direct = phi.capital_phi(t) - t;
            assert!((phi.excess(t) - direct).abs() <= 1e-14 * phi.capital_phi(t));
        }
        // Φ(t) − t = b t³/6 + O(t⁵)
        let t = 1e-5;
        assert!((phi.excess(t) / (0.5 * t * t * t / 6.0) - 1.0).abs() < 1e-8);
        assert_eq!(PhiModel::Identity.excess(3.0), 0.0);
    }

    #[test]
    fn phi_values() {
        assert_eq!(reference_phi().phi(0.0), 1.0);
        assert_eq!(PhiModel::Identity.phi(5.0), 1.0);
        assert!((reference_phi().phi(1e6) - 1.5f64.sqrt()).abs() < 1e-6);
        assert_eq!(reference_phi().phi(-2.0), reference_phi().phi(2.0));
    }

    #[test]
    fn a_star_values() {
        assert_eq!(PhiModel::Identity.a_star(), 1.0);
        assert!((reference_phi().a_star() - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(PhiModel::BoundedRational { b: 3.0 }.a_star(), 2.0);
    }

    #[test]
    fn capital_phi_against_quadrature() {
        // high-order quadrature oracle, independent of the elliptic closed form
        let p = reference_phi();
        let oracle = integrate_adaptive(|x| p.phi(x), 0.0, 1.0, 1e-15, 1e-15);
        assert!((p.capital_phi(1.0) - oracle).abs() < 1e-14);
        assert!((p.capital_phi(1.0) - 1.051_593_720_823_594).abs() < 1e-13);
        for &t in &[1e-4, 0.3, 2.0, 17.0, 450.0] {
            let q = integrate_adaptive(|x| p.phi(x), 0.0, t, 1e-15, 1e-15);
            assert!((p.capital_phi(t) - q).abs() <= 1e-12 * t.max(1.0), "t = {t}");
        }
        assert_eq!(PhiModel::Identity.capital_phi(3.5), 3.5);
        assert_eq!(p.capital_phi(0.0), 0.0);
    }

    #[test]
    fn capital_phi_inverse() {
        let p = reference_phi();
        assert!((p.capital_phi_inv(p.capital_phi(2.0)) - 2.0).abs() < 1e-10);
        assert_eq!(PhiModel::Identity.capital_phi_inv(-4.0), -4.0);
        let s = 1e6;
        assert!((p.capital_phi_inv(s) / s - 1.0 / 1.5f64.sqrt()).abs() < 1e-4);
        assert!(p.capital_phi_inv(-3.0) < 0.0);
    }

    #[test]
    fn nonlinearity_values() {
        let f = NonlinearityModel::sum_powers(3.0, 4.0, 1.0, 1.0);
        assert_eq!(f.f(1.0).unwrap(), 2.0);
        assert!((f.capital_f(1.0).unwrap() - (1.0 / 3.0 + 0.25)).abs() < 1e-15);
        let g = NonlinearityModel::power_ratio(10.0 / 3.0, 3.0, 1.0);
        let t: f64 = 1e-6;
        let ratio = g.f_prime(t).unwrap() / t.powf(g.alpha - 2.0);
        assert!((ratio - (g.alpha - 1.0)).abs() < 1e-3);
        assert!(matches!(f.f(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(f.capital_f(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn power_ratio_primitive_matches_quadrature_oracle() {
        let g = NonlinearityModel::power_ratio(2.5, 4.0, 1.0);
        for &t in &[1e-3, 0.5, 3.0, 40.0] {
            let q = integrate_adaptive(|x| g.f_raw(x), 0.0, t, 0.0, 1e-14);
            assert!((g.capital_f_raw(t) - q).abs() <= 1e-12 * q.max(1e-300));
        }
        // derivative of F is f
        let t = 1.7;
        let h = 1e-5;
        let fd = (g.capital_f_raw(t + h) - g.capital_f_raw(t - h)) / (2.0 * h);
        assert!((fd - g.f_raw(t)).abs() < 1e-8);
    }

    #[test]
    fn construction_validates() {
        let phi = PhiModel::Identity;
        assert!(DualModel::new(phi, NonlinearityModel::sum_powers(4.0, 3.0, 1.0, 1.0), 3).is_err());
        assert!(DualModel::new(phi, NonlinearityModel::pure_power(6.0, 1.0), 3).is_err());
        assert!(DualModel::new(phi, NonlinearityModel::pure_power(3.0, 1.0), 2).is_err());
        assert!(DualModel::new(PhiModel::BoundedRational { b: -1.0 }, NonlinearityModel::pure_power(3.0, 1.0), 3).is_err());
        let mut bad = NonlinearityModel::power_ratio(3.0, 4.0, 1.0);
        bad.mu2 = 2.0;
        assert!(DualModel::new(phi, bad, 3).is_err());
        assert!(DualModel::new(phi, NonlinearityModel::pure_power(3.0, 1.0), 3).is_ok());
    }

    #[test]
    fn g_lambda_identity_collapses_to_f() {
        let m = DualModel::new(PhiModel::Identity, NonlinearityModel::sum_powers(3.0, 4.0, 1.0, 1.0), 3).unwrap();
        for &s in &[0.0, 0.1, 1.0, 7.0] {
            for &l in &[0.01, 1.0, 100.0] {
                let g = m.g_lambda(l, s).unwrap();
                assert!((g - m.nonlinearity().f_raw(s)).abs() <= 1e-12 * (1.0 + g.abs()));
                let big_g = m.g_lambda_antiderivative(l, s).unwrap();
                assert!((big_g - m.nonlinearity().capital_f_raw(s)).abs() <= 1e-12 * (1.0 + big_g.abs()));
            }
        }
    }

    #[test]
    fn g_lambda_zero_and_large_s_limit() {
        let m = DualModel::reference();
        assert_eq!(m.g_lambda(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(m.g_lambda_antiderivative(1.0, 0.0).unwrap(), 0.0);
        let s: f64 = 1e4;
        let ratio = m.g_lambda(1.0, s).unwrap() / s.powi(3);
        assert!((ratio / (4.0 / 9.0) - 1.0).abs() < 0.01, "ratio {ratio}");
        assert!(matches!(m.g_lambda(0.0, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn antiderivative_matches_finite_difference() {
        let m = DualModel::reference();
        let (l, s, h) = (1.0, 1.0, 1e-5);
        let fd = (m.g_lambda_antiderivative(l, s + h).unwrap() - m.g_lambda_antiderivative(l, s - h).unwrap()) / (2.0 * h);
        let g = m.g_lambda(l, s).unwrap();
        assert!(((fd - g) / g).abs() < 1e-8);
    }

    #[test]
    fn growth_conditions_identity_cubic() {
        let m = DualModel::new(PhiModel::Identity, NonlinearityModel::sum_powers(3.0, 4.0, 1.0, 1.0), 3).unwrap();
        let report = check_growth_conditions(&m, 1.0).unwrap();
        assert!(report.all_passed());
        // T = 3: ∫₀³(τ² + τ³)dτ = 9 + 81/4 > 9/2
        let g3 = m.g_lambda_antiderivative(1.0, 3.0).unwrap();
        assert!((g3 - (9.0 + 81.0 / 4.0)).abs() < 1e-12);
        assert!(g3 > 4.5);
    }

    #[test]
    fn growth_conditions_reference_and_mixed() {
        let m = DualModel::reference();
        let s: f64 = 1e-6;
        assert!(m.g_lambda(1.0, s).unwrap() / s < 1e-4);
        let report = check_growth_conditions(&m, 1.0).unwrap();
        assert!(report.s0 > 0.0);

        let mixed = DualModel::new(PhiModel::REFERENCE, NonlinearityModel::power_ratio(2.5, 4.0, 1.0), 3).unwrap();
        let report = check_growth_conditions(&mixed, 1.0).unwrap();
        assert!(report.s0 >= 1e-8, "s0 = {}", report.s0);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let text = r#"{"phi": {"family": "bounded_rational", "b": 0.5},
                       "f": {"family": "sum_powers", "alpha": 3, "beta": 4, "mu1": 1, "mu2": 1},
                       "N": 3}"#;
        let m: DualModel = serde_json::from_str(text).unwrap();
        assert_eq!(m, DualModel::reference());
        let back: DualModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);

        let identity = r#"{"phi": {"family": "identity"},
                           "f": {"family": "power_ratio", "alpha": 3, "beta": 3, "mu1": 2}, "N": 3}"#;
        let m: DualModel = serde_json::from_str(identity).unwrap();
        assert_eq!(m.nonlinearity().mu2, 2.0);

        let unknown = r#"{"phi": {"family": "identity"}, "extra": 1,
                          "f": {"family": "power_ratio", "alpha": 3, "beta": 3, "mu1": 2}, "N": 3}"#;
        assert!(serde_json::from_str::<DualModel>(unknown).is_err());
        let inadmissible = r#"{"phi": {"family": "identity"},
                               "f": {"family": "sum_powers", "alpha": 4, "beta": 3, "mu1": 1, "mu2": 1}, "N": 3}"#;
        assert!(serde_json::from_str::<DualModel>(inadmissible).is_err());
    }
}
