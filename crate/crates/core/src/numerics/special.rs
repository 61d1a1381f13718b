//! Special functions needed in closed forms.

use std::f64::consts::PI;

/// Carlson's symmetric elliptic integral of the second kind,
/// `R_D(x, y, z) = 3/2 ∫₀^∞ dt / ((t+x)^{1/2} (t+y)^{1/2} (t+z)^{3/2})`,
/// by the duplication theorem. Requires `x, y ≥ 0`, at most one of them
/// zero, and `z > 0`.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 0.0015;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.25 * C3;
    const C6: f64 = 1.5 * C4;

    let (mut xt, mut yt, mut zt) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    let (mut delx, mut dely, mut delz, mut ave);
    loop {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (zt + lambda));
        fac *= 0.25;
        xt = 0.25 * (xt + lambda);
        yt = 0.25 * (yt + lambda);
        zt = 0.25 * (zt + lambda);
        ave = 0.2 * (xt + yt + 3.0 * zt);
        delx = (ave - xt) / ave;
        dely = (ave - yt) / ave;
        delz = (ave - zt) / ave;
        if delx.abs().max(dely.abs()).max(delz.abs()) <= ERRTOL {
            break;
        }
    }
    let ea = delx * dely;
    let eb = delz * delz;
    let ec = ea - eb;
    let ed = ea - 6.0 * eb;
    let ee = ed + ec + ec;
    3.0 * sum
        + fac
            * (1.0 + ed * (-C1 + C5 * ed - C6 * delz * ee)
                + delz * (C2 * ee + delz * (-C3 * ec + delz * C4 * ea)))
            / (ave * ave.sqrt())
}

/// `Γ(n/2)` for a positive integer `n`.
fn gamma_half_integer(n: usize) -> f64 {
    let mut g = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut k = if n.is_multiple_of(2) { 2 } else { 1 };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

/// Surface area `ω_{N−1} = 2π^{N/2}/Γ(N/2)` of the unit sphere in ℝᴺ.
pub fn unit_sphere_area(dim: usize) -> f64 {
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim)
}
