//! Scalar optimization for the protocol's two tuning knobs: the auxiliary
//! gain κ² that minimizes the distilled squeezing variance, and the reference
//! squeezing ω that maximizes fidelity with a two-mode squeezed vacuum.
//!
//! Both optima have closed forms in [`crate::analytics`]; this module selects
//! among the closed-form roots by direct function-value comparison (never by
//! a sign heuristic) and provides a derivative-free bracketed minimizer as a
//! fallback and as a general tool for scan refinement.

use crate::analytics::{fidelity_tmsv, kappa_stationary_roots, v_dist};
use crate::error::{Error, Result};

const GOLDEN_STEP: f64 = 0.381_966_011_250_105; // 2 − φ

/// Minimize a scalar function on a bracket by golden-section search with
/// parabolic-interpolation acceleration. Returns (x*, f(x*)) with
/// |x − x*| ≲ tol. For non-unimodal functions this converges to *some* local
/// minimum inside the bracket — which one depends on the early probes.
pub fn minimize_scalar<F>(f: F, bracket: (f64, f64), tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = bracket;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidBracket { lo: a, hi: b });
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "minimization tolerance must be positive, got {tol}"
        )));
    }
    let mut x = a + GOLDEN_STEP * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d = 0.0f64;
    let mut e = 0.0f64;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = tol.max(1e-14 * (1.0 + x.abs()));
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // Trial parabola through (x, w, v).
            let r = (x - w) * (fx - fv);
            let q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            let mut q2 = 2.0 * (q - r);
            if q2 > 0.0 {
                p = -p;
            }
            q2 = q2.abs();
            let prev = e;
            e = d;
            if p.abs() < (0.5 * q2 * prev).abs() && p > q2 * (a - x) && p < q2 * (b - x) {
                d = p / q2;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN_STEP * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Ok((x, fx))
}

/// Auxiliary gain κ² minimizing the distilled squeezing variance at fixed
/// μ = Tλ. Picks between the two stationary gains by comparing the variance
/// values directly, and falls back to bracketed minimization if the closed
/// form ever produced a non-finite root. μ = 0 is flagged degenerate (the
/// variance is flat in κ²). Whether the returned gain is physically reachable
/// by attenuation (|κ| ≤ 1/(1−T)) depends on the caller's T — check
/// [`crate::state_prep::ProtocolParams::kappa_exceeds_physical_bound`].
pub fn optimal_kappa2(mu: f64) -> Result<f64> {
    let (plus, minus) = kappa_stationary_roots(mu)?;
    if !plus.is_finite() || !minus.is_finite() {
        let (x, _) = minimize_scalar(
            |k2| v_dist(mu, k2).unwrap_or(f64::INFINITY),
            (-3.0, 4.0),
            1e-10,
        )?;
        return Ok(x);
    }
    let vp = v_dist(mu, plus)?;
    let vm = v_dist(mu, minus)?;
    Ok(if vp <= vm { plus } else { minus })
}

/// Reference squeezing ω maximizing the distilled-state fidelity, delegating
/// to the closed-form cubic and verifying that the fidelity derivative
/// actually changes sign across the returned point.
pub fn optimal_omega(mu: f64, kappa2: f64) -> Result<f64> {
    let omega = crate::analytics::omega_star(mu, kappa2)?;
    let h = 1e-5f64.min(0.5 * (1.0 - omega.abs()));
    let middle = fidelity_tmsv(mu, kappa2, omega)?;
    let rising = middle - fidelity_tmsv(mu, kappa2, omega - h)?;
    let falling = fidelity_tmsv(mu, kappa2, omega + h)? - middle;
    if rising < 0.0 || falling > 0.0 {
        return Err(Error::DegenerateStationarity);
    }
    Ok(omega)
}
