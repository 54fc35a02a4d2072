//! Closed-form results for the distillation protocol: output amplitudes,
//! success probabilities, squeezing variances, fidelities, and their optima.
//!
//! Everything here is an explicit function of the protocol scalars — no Fock
//! lattices, no truncation. The circuit simulations in [`crate::schemes`]
//! must reproduce these numbers to within their own truncation deficit, which
//! is the crate's main correctness argument: two independent evaluation paths
//! meeting at ~1e−9.
//!
//! Conventions: μ = Tλ is the squeezing that survives the taps, κ² the signed
//! gain applied to the auxiliary-state squeezing (κ² < 0 means an imaginary
//! rescaling), ω the squeezing of a reference two-mode squeezed vacuum, and
//! the squeezing variance V is normalized so that the vacuum gives 1.

use crate::error::{Error, Result};

/// Closed-form figures of merit of one pure-state distillation setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureMetrics {
    /// Input-state squeezing variance (1−λ)/(1+λ).
    pub v_in: f64,
    /// Variance right after the two-photon subtraction.
    pub v_sub: f64,
    /// Variance of the distilled (subtracted + corrected) state at κ².
    pub v_dist: f64,
    /// Variance of the asymptotic gaussified state, (1−2Tλ)/(1+2Tλ).
    pub v_inf: f64,
    /// Success probability of the original two-copy scheme (κ² = 1).
    pub p_s: f64,
    /// Normalization constant of the distilled state at κ².
    pub normalization: f64,
}

/// Closed-form figures of merit of one lossy-channel setting (κ² = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedMetrics {
    /// Input variance after the channels, [(1−λ)/(1+λ)]η + 1−η.
    pub v_in: f64,
    /// Variance after the two-photon subtraction.
    pub v_sub: f64,
    /// Asymptotic variance of the iterated gaussification map.
    pub v_inf: f64,
    /// Effective pure-state squeezing μ̃ = (1−η+ηT)λ of the subtracted state.
    pub mu_tilde: f64,
    /// Effective transmittance η̃ = ηT/(1−η(1−T)) of the subtracted state.
    pub eta_tilde: f64,
    /// Loss floor 1−η̃: no amount of iteration squeezes below this.
    pub bound: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1), got {lambda}"
        )));
    }
    Ok(())
}

fn check_transmittance(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmittance must lie in (0, 1], got {t}"
        )));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!(
            "effective squeezing mu must lie in [0, 1), got {mu}"
        )));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "reference squeezing omega must satisfy |omega| < 1, got {omega}"
        )));
    }
    Ok(())
}

/// Shared denominator D(μ, κ²) = μ⁴ + 4μ² + [1 + κ²(1−μ²)²]².
fn shared_denominator(mu: f64, kappa2: f64) -> f64 {
    let m2 = mu * mu;
    let q = 1.0 - m2;
    let bracket = 1.0 + kappa2 * q * q;
    m2 * m2 + 4.0 * m2 + bracket * bracket
}

/// Normalization of the distilled state,
/// N(κ²) = (1−μ²)⁵ / (4 D(μ, κ²)), so that Σ μ²ⁿ[(n+1)(n+2)+2κ²]² N = 1.
fn normalization(mu: f64, kappa2: f64) -> f64 {
    let q = 1.0 - mu * mu;
    0.25 * q.powi(5) / shared_denominator(mu, kappa2)
}

/// Squeezing variance of a two-mode squeezed vacuum, (1−λ)/(1+λ).
pub fn v_tmsv(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok((1.0 - lambda) / (1.0 + lambda))
}

/// Variance after two-photon subtraction of a pure input,
/// V = (1−μ)/(1+μ) · (1−2μ+3μ²)/(1+μ²) with μ = Tλ.
pub fn v_sub_pure(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let m2 = mu * mu;
    Ok((1.0 - mu) / (1.0 + mu) * (1.0 - 2.0 * mu + 3.0 * m2) / (1.0 + m2))
}

/// Asymptotic variance of iterated gaussification on pure inputs,
/// (1−2Tλ)/(1+2Tλ); meaningful while 2Tλ < 1.
pub fn v_inf_pure(lambda: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_transmittance(t)?;
    let ld = 2.0 * t * lambda;
    Ok((1.0 - ld) / (1.0 + ld))
}

/// Squeezing variance of the distilled state as a function of the
/// auxiliary-gain κ²:
/// V = (1−μ)/(1+μ) · [1−4μ+12μ²−8μ³+5μ⁴ + 2κ²(1−2μ)(1−μ²)² + κ⁴(1−μ²)⁴] / D.
pub fn v_dist(mu: f64, kappa2: f64) -> Result<f64> {
    check_mu(mu)?;
    let m2 = mu * mu;
    let q = 1.0 - m2;
    let poly = 1.0 - 4.0 * mu + 12.0 * m2 - 8.0 * mu * m2 + 5.0 * m2 * m2
        + 2.0 * kappa2 * (1.0 - 2.0 * mu) * q * q
        + kappa2 * kappa2 * q.powi(4);
    Ok((1.0 - mu) / (1.0 + mu) * poly / shared_denominator(mu, kappa2))
}

/// Stationary points of [`v_dist`] in κ² at fixed μ:
/// κ²± = [−1+2μ−3μ³+3μ⁴−2μ⁶+μ⁷ ± μ(1−μ²)²√(8−8μ+9μ²−4μ³+μ⁴)] / (1−μ²)⁴.
/// The variance minimum sits at the larger root; the smaller is a maximum.
/// μ = 0 is rejected: the variance is then flat in κ² and nothing is
/// stationary in a useful sense.
pub fn kappa_stationary_roots(mu: f64) -> Result<(f64, f64)> {
    check_mu(mu)?;
    if mu < 1e-12 {
        return Err(Error::DegenerateStationarity);
    }
    let m2 = mu * mu;
    let q = 1.0 - m2;
    let base = -1.0 + 2.0 * mu - 3.0 * mu * m2 + 3.0 * m2 * m2 - 2.0 * m2 * m2 * m2
        + mu.powi(7);
    let disc = 8.0 - 8.0 * mu + 9.0 * m2 - 4.0 * mu * m2 + m2 * m2;
    let spread = mu * q * q * disc.sqrt();
    let denom = q.powi(4);
    Ok(((base + spread) / denom, (base - spread) / denom))
}

/// Success probability of the original two-copy scheme (single-photon
/// subtraction from all four modes, two-photon heralds on both couplers):
/// p = (1−T)⁴ λ⁴ (1−λ²)² / (16 N(κ²=1)).
pub fn p_success_original(lambda: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_transmittance(t)?;
    let n = normalization(t * lambda, 1.0);
    let l2 = lambda * lambda;
    Ok((1.0 - t).powi(4) * l2 * l2 * (1.0 - l2) * (1.0 - l2) / (16.0 * n))
}

/// Fidelity of the distilled state with a two-mode squeezed vacuum of
/// squeezing ω: F = (1−μ²)⁵(1−ω²)[1+κ²(1−μω)²]² / [(1−μω)⁶ D].
pub fn fidelity_tmsv(mu: f64, kappa2: f64, omega: f64) -> Result<f64> {
    check_mu(mu)?;
    check_omega(omega)?;
    let q = 1.0 - mu * mu;
    let w = 1.0 - mu * omega;
    let bracket = 1.0 + kappa2 * w * w;
    Ok(q.powi(5) * (1.0 - omega * omega) * bracket * bracket
        / (w.powi(6) * shared_denominator(mu, kappa2)))
}

/// Real roots of a real polynomial (coefficients low→high), computed from the
/// eigenvalues of the companion matrix after stripping negligible leading
/// coefficients.
fn real_polynomial_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() < 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut companion = nalgebra::DMatrix::<f64>::zeros(deg, deg);
    for k in 0..deg {
        companion[(k, deg - 1)] = -coeffs[k] / lead;
        if k + 1 < deg {
            companion[(k + 1, k)] = 1.0;
        }
    }
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-8 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * x + k as f64 * c;
    }
    acc
}

/// The reference squeezing ω* ∈ (−1, 1) maximizing [`fidelity_tmsv`] at fixed
/// (μ, κ²). Stationarity of F reduces to the cubic
/// μ(3+κ²) − (1+κ²+2κ²μ²)ω + μ[κ²(μ²+2)−2]ω² − κ²μ²ω³ = 0;
/// all real roots inside (−1, 1) are compared by their fidelity value and the
/// winner is polished by Newton iteration on the cubic.
pub fn omega_star(mu: f64, kappa2: f64) -> Result<f64> {
    check_mu(mu)?;
    let m2 = mu * mu;
    let coeffs = [
        mu * (3.0 + kappa2),
        -(1.0 + kappa2 + 2.0 * kappa2 * m2),
        mu * (kappa2 * (m2 + 2.0) - 2.0),
        -kappa2 * m2,
    ];
    let mut best: Option<(f64, f64)> = None;
    for root in real_polynomial_roots(&coeffs) {
        if root.abs() >= 1.0 {
            continue;
        }
        let f = fidelity_tmsv(mu, kappa2, root)?;
        if best.map_or(true, |(_, fb)| f > fb) {
            best = Some((root, f));
        }
    }
    let (mut omega, _) = best.ok_or(Error::DegenerateStationarity)?;
    for _ in 0..4 {
        let dp = horner_derivative(&coeffs, omega);
        if dp.abs() < 1e-300 {
            break;
        }
        let step = horner(&coeffs, omega) / dp;
        let next = omega - step;
        if next.abs() < 1.0 {
            omega = next;
        }
        if step.abs() < 1e-15 {
            break;
        }
    }
    Ok(omega)
}

/// Unnormalized pair amplitudes of the state after single-photon subtraction
/// from both modes: aₙ = √(1−λ²) (1−T) λ (n+1) (Tλ)ⁿ, n = 0..n_max.
/// Their squared sum is the double-subtraction success probability.
pub fn subtracted_amplitudes(lambda: f64, t: f64, n_max: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_transmittance(t)?;
    let mu = t * lambda;
    let pref = (1.0 - lambda * lambda).sqrt() * (1.0 - t) * lambda;
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut pow = 1.0;
    for n in 0..=n_max {
        amps.push(pref * (n as f64 + 1.0) * pow);
        pow *= mu;
    }
    Ok(amps)
}

/// Normalized pair amplitudes of the distilled state at auxiliary gain κ²,
/// cₙ = √N · [(n+1)(n+2) + 2κ²] μⁿ, together with the normalization N so
/// callers can undo it. κ² = 1 reproduces the quadratic (n²+3n+4) profile of
/// the plain two-copy scheme.
pub fn psi_out_prime(
    lambda: f64,
    t: f64,
    kappa2: f64,
    n_max: usize,
) -> Result<(Vec<f64>, f64)> {
    check_lambda(lambda)?;
    check_transmittance(t)?;
    let mu = t * lambda;
    let n = normalization(mu, kappa2);
    let root = n.sqrt();
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut pow = 1.0;
    for k in 0..=n_max {
        let kf = k as f64;
        amps.push(root * ((kf + 1.0) * (kf + 2.0) + 2.0 * kappa2) * pow);
        pow *= mu;
    }
    Ok((amps, n))
}

/// Unnormalized pair amplitudes of the M-copy interference output with
/// single-photon heralds on all 2M ancillas:
/// aₙ = √[(1−λ²)(1−ν²)^{M−1}] ν^M μⁿ Σ_k C(M,k) M^{−k} n!/(n−k)!,
/// ν = (1−T)λ, μ = Tλ. Squared sum = overall success probability. M = 2
/// reproduces the two-copy profile, and M → ∞ approaches a two-mode squeezed
/// vacuum with squeezing 2Tλ (amplitudes ∝ (2μ)ⁿ… in the n ≪ M regime).
pub fn multicopy_amplitudes(lambda: f64, t: f64, m: usize, n_max: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_transmittance(t)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "copy count must be at least 2, got {m}"
        )));
    }
    let mu = t * lambda;
    let nu = (1.0 - t) * lambda;
    let mf = m as f64;
    let pref = ((1.0 - lambda * lambda) * (1.0 - nu * nu).powi(m as i32 - 1)).sqrt()
        * nu.powi(m as i32);
    // binom[k] = C(M,k)/M^k, the ladder-interference weights.
    let mut binom = Vec::with_capacity(m + 1);
    let mut b = 1.0;
    for k in 0..=m {
        binom.push(b);
        b *= (mf - k as f64) / ((k as f64 + 1.0) * mf);
    }
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut pow = 1.0;
    for n in 0..=n_max {
        let mut sum = 0.0;
        let mut falling = 1.0; // n!/(n−k)! built up incrementally
        for (k, &bk) in binom.iter().enumerate().take(n.min(m) + 1) {
            sum += bk * falling;
            falling *= (n - k) as f64;
        }
        amps.push(pref * pow * sum);
        pow *= mu;
    }
    Ok(amps)
}

/// All pure-state closed forms at one setting. `p_s` always refers to the
/// κ² = 1 original scheme; `v_dist` and `normalization` use the given κ².
pub fn pure_metrics(lambda: f64, t: f64, kappa2: f64) -> Result<PureMetrics> {
    let mu = t * lambda;
    Ok(PureMetrics {
        v_in: v_tmsv(lambda)?,
        v_sub: v_sub_pure(mu)?,
        v_dist: v_dist(mu, kappa2)?,
        v_inf: v_inf_pure(lambda, t)?,
        p_s: p_success_original(lambda, t)?,
        normalization: normalization(mu, kappa2),
    })
}

/// Lossy-channel closed forms (κ² = 1). The subtracted state of a lossy input
/// is exactly a pure-protocol state at squeezing μ̃ seen through transmittance
/// η̃, so `v_sub` is the pure formula at μ̃ remixed with vacuum noise, and the
/// asymptotic variance stays above the loss floor 1−η̃.
pub fn mixed_metrics(lambda: f64, eta: f64, t: f64) -> Result<MixedMetrics> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    check_transmittance(t)?;
    let v_in = (1.0 - lambda) / (1.0 + lambda) * eta + 1.0 - eta;
    let mu_tilde = (1.0 - eta + eta * t) * lambda;
    let eta_tilde = eta * t / (1.0 - eta * (1.0 - t));
    let v_sub = v_sub_pure(mu_tilde)? * eta_tilde + 1.0 - eta_tilde;
    let e = (1.0 - eta) * lambda;
    let up = e * (1.0 + e * (1.0 + e));
    let down = 2.0 * eta * t * lambda * (1.0 + lambda * (eta - 1.0 + (1.0 - eta) * (1.0 - eta) * lambda));
    let v_inf = (1.0 + up - down) / (1.0 + up + down);
    Ok(MixedMetrics { v_in, v_sub, v_inf, mu_tilde, eta_tilde, bound: 1.0 - eta_tilde })
}

/// Number of pair terms needed before the geometric weight μ²ⁿ undercuts
/// double precision; used to size series summations and default lattices.
pub(crate) fn suggested_series_length(mu: f64) -> usize {
    if mu <= 0.0 {
        return 8;
    }
    let n = (1e-16f64.ln() / (mu * mu).ln()).ceil();
    (n as usize).clamp(8, 400)
}
