//! Dormand–Prince 5(4) embedded Runge–Kutta integrator with FSAL and an
//! observer hook that can stop the integration after any accepted step.

pub trait OdeSystem<const D: usize> {
    fn rhs(&self, x: f64, y: &[f64; D], dy: &mut [f64; D]);
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    StepSizeUnderflow { x: f64, h: f64 },
    NonFinite { x: f64 },
    MaxSteps { x: f64 },
}

#[derive(Debug, Clone)]
pub struct Outcome<const D: usize> {
    pub x: f64,
    pub y: [f64; D],
    pub accepted: usize,
    pub rejected: usize,
    /// `true` when the observer requested the stop.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b − b̂ (fifth minus embedded fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn combine<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrates from `x0` towards `x_end` (> `x0`). `observer` sees every
/// accepted step and may stop the integration early.
pub fn integrate<S, C, const D: usize>(
    sys: &S,
    x0: f64,
    y0: [f64; D],
    x_end: f64,
    h_init: f64,
    tol: Tolerances,
    max_steps: usize,
    mut observer: C,
) -> Result<Outcome<D>, OdeError>
where
    S: OdeSystem<D>,
    C: FnMut(f64, &[f64; D]) -> StepControl,
{
    let mut x = x0;
    let mut y = y0;
    let mut h = h_init.min(x_end - x0);
    let mut k1 = [0.0; D];
    sys.rhs(x, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFinite { x });
    }
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        ([0.0; D], [0.0; D], [0.0; D], [0.0; D], [0.0; D], [0.0; D]);

    while x < x_end {
        if accepted + rejected >= max_steps {
            return Err(OdeError::MaxSteps { x });
        }
        let h_min = 1e-14 * x.abs().max(1.0);
        if h < h_min {
            return Err(OdeError::StepSizeUnderflow { x, h });
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }

        sys.rhs(x + C2 * h, &combine(&y, h, &[(A21, &k1)]), &mut k2);
        sys.rhs(x + C3 * h, &combine(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        sys.rhs(
            x + C4 * h,
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            &mut k4,
        );
        sys.rhs(
            x + C5 * h,
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut k5,
        );
        sys.rhs(
            x + h,
            &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            &mut k6,
        );
        let y_new = combine(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        sys.rhs(x + h, &y_new, &mut k7);

        let mut err: f64 = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }

        if !err.is_finite() {
            rejected += 1;
            h *= MIN_FACTOR;
            continue;
        }

        if err <= 1.0 {
            accepted += 1;
            x = if last { x_end } else { x + h };
            y = y_new;
            k1 = k7;
            if observer(x, &y) == StepControl::Stop {
                return Ok(Outcome { x, y, accepted, rejected, stopped: true });
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok(Outcome { x, y, accepted, rejected, stopped: false })
}
