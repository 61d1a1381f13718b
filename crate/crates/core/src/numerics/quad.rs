#![allow(clippy::excessive_precision)]

//! Adaptive Gauss–Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// One 15-point Kronrod panel; returns `(estimate, error)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` by globally adaptive bisection of the
/// panel with the largest error estimate, until the summed error is below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let (est, err) = gk15(&f, lo, hi);
    let mut panels = vec![(lo, hi, est, err)];
    let mut total = est;
    let mut total_err = err;
    while total_err > abs_tol.max(rel_tol * total.abs()) && panels.len() < MAX_INTERVALS {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, pest, perr) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // panel cannot be split further in floating point
            panels.push((pa, pb, pest, 0.0));
            total_err -= perr;
            continue;
        }
        let left = gk15(&f, pa, mid);
        let right = gk15(&f, mid, pb);
        total += left.0 + right.0 - pest;
        total_err += left.1 + right.1 - perr;
        panels.push((pa, mid, left.0, left.1));
        panels.push((mid, pb, right.0, right.1));
    }
    // re-sum to shed accumulated cancellation from the running updates
    sign * panels.iter().map(|p| p.2).sum::<f64>()
}

/// `∫_{x0}^{∞} e^{-2κx} w(x) dx`, for slowly varying `w`, via the
/// substitution `u = 2κ(x − x0)`.
pub fn exp_tail_integral<W: Fn(f64) -> f64>(w: W, x0: f64, kappa: f64) -> f64 {
    let scale = 1.0 / (2.0 * kappa);
    let inner = integrate_adaptive(|u| (-u).exp() * w(x0 + u * scale), 0.0, 60.0, 0.0, 1e-13);
    scale * (-2.0 * kappa * x0).exp() * inner
}
