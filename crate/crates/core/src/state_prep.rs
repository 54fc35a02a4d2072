//! Protocol parameters and preparation of the input Gaussian states.
//!
//! The distillation protocol is driven by a handful of scalars: the source
//! squeezing λ of the two-mode squeezed vacuum (TMSV), the tap transmittance
//! T of the subtraction beam splitters, the ancilla gain κ² that rescales the
//! squeezing of the auxiliary state σ, the channel transmittance η, and the
//! copy count M. Everything else (μ = Tλ, ν = λ(1−ηT), η′, beam-splitter
//! angle θ = arccos√T, …) derives from those.
//!
//! σ itself is the state obtained from the distributed TMSV by local
//! noiseless attenuation. It is constructed here two equivalent ways:
//! a TMSV with squeezing κν sent through loss η′ (the compact form), or a
//! reduced-thermal-noise TMSV with squeezing κν′ sent through the *protocol*
//! channels η (the form a practical source would use). Both collapse to the
//! pure TMSV(κ(1−T)λ) when η = 1.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{C64, DensityOperator, FockState, State};

/// Scalar parameters of one distillation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub lambda: f64,
    pub transmittance: f64,
    pub kappa2: f64,
    pub eta: f64,
    pub copies: usize,
}

impl ProtocolParams {
    /// Two-copy, lossless, κ² = 1 baseline; adjust with the `with_*` builders.
    pub fn new(lambda: f64, transmittance: f64) -> Result<Self> {
        let p = ProtocolParams { lambda, transmittance, kappa2: 1.0, eta: 1.0, copies: 2 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappa2(mut self, kappa2: f64) -> Result<Self> {
        self.kappa2 = kappa2;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_copies(mut self, copies: usize) -> Result<Self> {
        self.copies = copies;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1), got {}",
                self.lambda
            )));
        }
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "transmittance must lie in (0, 1], got {}",
                self.transmittance
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !self.kappa2.is_finite() {
            return Err(Error::InvalidParameter("kappa2 must be finite".into()));
        }
        if self.copies < 2 {
            return Err(Error::InvalidParameter(format!(
                "copy count must be at least 2, got {}",
                self.copies
            )));
        }
        Ok(())
    }

    pub fn is_pure(&self) -> bool {
        self.eta == 1.0
    }

    /// μ = Tλ, the squeezing surviving the subtraction taps.
    pub fn mu(&self) -> f64 {
        self.transmittance * self.lambda
    }

    /// Beam-splitter angle with cos²θ = T.
    pub fn theta(&self) -> f64 {
        self.transmittance.sqrt().acos()
    }

    /// Unscaled σ squeezing ν = λ(1−ηT); reduces to (1−T)λ for η = 1.
    pub fn nu_unscaled(&self) -> f64 {
        self.lambda * (1.0 - self.eta * self.transmittance)
    }

    /// κ as a complex number so κ² < 0 (anti-phase squeezing of σ) works.
    pub fn kappa(&self) -> C64 {
        if self.kappa2 >= 0.0 {
            C64::new(self.kappa2.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-self.kappa2).sqrt())
        }
    }

    /// κ-scaled σ squeezing.
    pub fn nu(&self) -> C64 {
        self.kappa() * self.nu_unscaled()
    }

    /// λ′ of the loss channel equivalent to attenuating ρ: η′ = η(1−T)/(1−ηT).
    pub fn eta_prime(&self) -> f64 {
        self.eta * (1.0 - self.transmittance) / (1.0 - self.eta * self.transmittance)
    }

    /// Squeezing of the asymptotic gaussified state, λ_D = 2Tλ (pure case).
    pub fn lambda_distilled(&self) -> f64 {
        2.0 * self.mu()
    }

    /// The iterated gaussification map converges only for |λ_D| < 1.
    pub fn gaussification_converges(&self) -> bool {
        self.lambda_distilled().abs() < 1.0
    }

    /// |κ| beyond 1/(1−T) asks σ for more squeezing than any physical
    /// attenuation of the source can deliver; flagged, not rejected.
    pub fn kappa_exceeds_physical_bound(&self) -> bool {
        if self.transmittance >= 1.0 {
            return false;
        }
        let bound = 1.0 / (1.0 - self.transmittance);
        self.kappa2.abs().sqrt() > bound
    }

    /// Per-mode cutoff used when the caller does not specify one.
    pub fn default_cutoff(&self) -> usize {
        if self.copies >= 4 {
            10
        } else {
            14
        }
    }
}

/// Thermal-state picture of σ: S(s)[ρ_th(n̄)⊗ρ_th(n̄)]S†(s), plus the
/// reduced-noise source parameters (ν′, n̄′) that realize the same squeezing
/// through the protocol channels η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalDecomposition {
    /// Two-mode squeezing constant s of the thermal picture.
    pub squeeze: f64,
    /// Exact mean thermal photon number of σ.
    pub nbar: f64,
    /// Leading-order approximation n̄ ≈ η(1−η)λ²(1−T)/(1−λ²(1−ηT)²).
    pub nbar_leading: f64,
    /// Source squeezing that reproduces s after transmission through η.
    pub nu_prime: f64,
    /// Residual thermal occupation when sourcing with ν′ through η.
    pub nbar_prime: f64,
}

/// Two-mode squeezed vacuum Σₙ √(1−λ²) λⁿ |n,n⟩ at the given cutoff.
/// The dropped tail Σ_{n>c} (1−λ²)λ²ⁿ = λ^(2c+2) lands in the norm deficit.
pub fn make_tmsv(lambda: f64, cutoff: usize) -> Result<FockState> {
    make_tmsv_complex(C64::new(lambda, 0.0), cutoff)
}

/// TMSV with a complex squeezing parameter (|λ| < 1), used when κ² < 0 makes
/// the σ squeezing imaginary.
pub fn make_tmsv_complex(lambda: C64, cutoff: usize) -> Result<FockState> {
    let a2 = lambda.norm_sqr();
    if a2 >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "TMSV squeezing must satisfy |lambda| < 1, got |{lambda}|"
        )));
    }
    let mut st = FockState::vacuum(&[cutoff, cutoff]);
    st.amps_mut()[0] = C64::ZERO;
    let pref = (1.0 - a2).sqrt();
    let mut pow = C64::new(pref, 0.0);
    for n in 0..=cutoff {
        let idx = st.index_of(&[n, n]);
        st.amps_mut()[idx] = pow;
        pow *= lambda;
    }
    st.set_norm_deficit(a2.powi(cutoff as i32 + 1));
    Ok(st)
}

/// The distributed input state ρ: TMSV(λ) after transmission of both modes
/// through channels of transmittance η. Pure for η = 1, a density operator
/// otherwise.
pub fn make_input(params: &ProtocolParams, cutoff: usize) -> Result<State> {
    params.validate()?;
    let tmsv = make_tmsv(params.lambda, cutoff)?;
    if params.is_pure() {
        return Ok(State::Pure(tmsv));
    }
    let rho = apply_loss_channel(&State::Pure(tmsv), 0, params.eta)?;
    let rho = apply_loss_channel(&State::Mixed(rho), 1, params.eta)?;
    Ok(State::Mixed(rho.hermitize()))
}

/// Superposition Σₙ aₙ|n,n⟩ on the pair ladder, cutoff = len−1. The input
/// need not be normalized; downstream measures normalize internally.
pub fn make_pair_state(amps: &[f64]) -> Result<FockState> {
    if amps.is_empty() {
        return Err(Error::InvalidParameter("pair state needs at least one amplitude".into()));
    }
    let cutoff = amps.len() - 1;
    let mut st = FockState::vacuum(&[cutoff, cutoff]);
    st.amps_mut()[0] = C64::ZERO;
    for (n, &a) in amps.iter().enumerate() {
        let idx = st.index_of(&[n, n]);
        st.amps_mut()[idx] = C64::new(a, 0.0);
    }
    Ok(st)
}

/// Single-mode thermal state with mean occupation n̄.
pub fn make_thermal(nbar: f64, cutoff: usize) -> Result<DensityOperator> {
    if nbar < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation must be nonnegative, got {nbar}"
        )));
    }
    let dim = cutoff + 1;
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    let mut kept = 0.0;
    for (n, w) in thermal_weights(nbar, cutoff).into_iter().enumerate() {
        mat[(n, n)] = C64::new(w, 0.0);
        kept += w;
    }
    let mut rho = DensityOperator::from_parts(vec![cutoff], mat, 0.0);
    rho.set_trace_deficit((1.0 - kept).max(0.0));
    Ok(rho)
}

fn thermal_weights(nbar: f64, cutoff: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut w = vec![0.0; cutoff + 1];
        w[0] = 1.0;
        return w;
    }
    let ratio = nbar / (nbar + 1.0);
    let mut w = Vec::with_capacity(cutoff + 1);
    let mut p = 1.0 / (nbar + 1.0);
    for _ in 0..=cutoff {
        w.push(p);
        p *= ratio;
    }
    w
}

/// S(s)|j,k⟩ for the two-mode squeezer S = exp[s(c†d† − cd)], evaluated with
/// the disentangled product exp(t c†d†)·(cosh s)^(−n̂_c−n̂_d−1)·exp(−t cd),
/// t = tanh s. The result is exact up to the cutoff; unitarity bounds the
/// truncation loss as 1 − ‖out‖².
fn two_mode_squeeze_basis(s: f64, j: usize, k: usize, cutoff: usize) -> FockState {
    let t = s.tanh();
    let sech = 1.0 / s.cosh();
    let dim = cutoff + 1;
    let mut amps = vec![C64::ZERO; dim * dim];
    // exp(−t cd) walks (j,k) down the diagonal; the middle factor is a pure
    // gain; exp(t c†d†) walks back up.
    let qmax = j.min(k);
    let mut down = 1.0;
    for q in 0..=qmax {
        let (n, m) = (j - q, k - q);
        let alpha = down * sech.powi((n + m + 1) as i32);
        let mut up = alpha;
        let pmax = cutoff - n.max(m);
        for p in 0..=pmax {
            amps[(n + p) * dim + (m + p)] += C64::new(up, 0.0);
            up *= t * (((n + p + 1) * (m + p + 1)) as f64).sqrt() / (p + 1) as f64;
        }
        if q < qmax {
            down *= -t * (((j - q) * (k - q)) as f64).sqrt() / (q + 1) as f64;
        }
    }
    FockState::from_parts(vec![cutoff, cutoff], amps, 0.0)
}

/// Two-mode squeezed thermal state S(s)[ρ_th(n̄)⊗ρ_th(n̄)]S†(s).
pub fn make_squeezed_thermal(s: f64, nbar: f64, cutoff: usize) -> Result<DensityOperator> {
    if nbar < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation must be nonnegative, got {nbar}"
        )));
    }
    if !s.is_finite() {
        return Err(Error::InvalidParameter("squeezing constant must be finite".into()));
    }
    let dim = cutoff + 1;
    let weights = thermal_weights(nbar, cutoff);
    let mut mat = DMatrix::<C64>::zeros(dim * dim, dim * dim);
    let mut represented = 0.0;
    for (j, &pj) in weights.iter().enumerate() {
        for (k, &pk) in weights.iter().enumerate() {
            let w = pj * pk;
            if w < 1e-18 {
                continue;
            }
            let psi = two_mode_squeeze_basis(s, j, k, cutoff);
            let nz: Vec<(usize, C64)> = psi
                .amps()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(i, a)| (i, *a))
                .collect();
            for &(col, b) in &nz {
                for &(row, a) in &nz {
                    mat[(row, col)] += w * a * b.conj();
                }
            }
            represented += w * psi.norm_sq();
        }
    }
    let mut rho = DensityOperator::from_parts(vec![cutoff, cutoff], mat, 0.0);
    rho.set_trace_deficit((1.0 - represented).max(0.0));
    Ok(rho.hermitize())
}

/// Kraus operators of the pure-loss channel with transmittance η:
/// L_k|n⟩ = √(C(n,k) η^(n−k) (1−η)^k) |n−k⟩.
fn loss_kraus(eta: f64, dim: usize) -> Vec<DMatrix<C64>> {
    let mut ops = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for n in k..dim {
            let mut binom = 1.0f64;
            for i in 0..k {
                binom *= (n - i) as f64 / (i + 1) as f64;
            }
            let w = (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt();
            m[(n - k, n)] = C64::new(w, 0.0);
        }
        ops.push(m);
    }
    ops
}

/// Send one mode through a lossy channel with transmittance η. The Kraus rank
/// equals the cutoff+1, so the channel is exactly trace preserving on the
/// truncated space and the deficit is untouched.
pub fn apply_loss_channel(state: &State, mode: usize, eta: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "channel transmittance must lie in [0, 1], got {eta}"
        )));
    }
    let rho = state.to_density();
    if eta == 1.0 {
        return Ok(rho);
    }
    if mode >= rho.num_modes() {
        return Err(Error::ModeOutOfRange { mode, modes: rho.num_modes() });
    }
    let dim = rho.cutoffs()[mode] + 1;
    let kraus = loss_kraus(eta, dim);
    let mut acc: Option<DensityOperator> = None;
    for k in &kraus {
        let term = rho.sandwich_one_mode(mode, k, k)?;
        acc = Some(match acc {
            None => term,
            Some(mut a) => {
                *a.matrix_mut() += term.matrix();
                a
            }
        });
    }
    Ok(acc.unwrap().hermitize())
}

/// Probability that both local attenuations of ρ succeed,
/// P_σ = (1−λ²)/(1−ν²) with ν = λ(1−ηT).
pub fn p_sigma(params: &ProtocolParams) -> f64 {
    let nu = params.nu_unscaled();
    (1.0 - params.lambda * params.lambda) / (1.0 - nu * nu)
}

/// The auxiliary state σ: TMSV with squeezing κν through loss η′ on both
/// modes (pure TMSV(κ(1−T)λ) when η = 1), together with the heralding
/// probability P_σ of the attenuation that defines it.
pub fn make_sigma(params: &ProtocolParams, cutoff: usize) -> Result<(State, f64)> {
    params.validate()?;
    let p = p_sigma(params);
    let tmsv = make_tmsv_complex(params.nu(), cutoff)?;
    if params.is_pure() {
        return Ok((State::Pure(tmsv), p));
    }
    let ep = params.eta_prime();
    let lossy = apply_loss_channel(&State::Pure(tmsv), 0, ep)?;
    let lossy = apply_loss_channel(&State::Mixed(lossy), 1, ep)?;
    Ok((State::Mixed(lossy), p))
}

/// σ produced the way a practical source would: a TMSV with squeezing κν′
/// distributed through the protocol channels η themselves. Shares the
/// squeezing constant s of σ but carries the reduced thermal noise n̄′.
pub fn make_sigma_reduced_noise(params: &ProtocolParams, cutoff: usize) -> Result<(State, f64)> {
    params.validate()?;
    let p = p_sigma(params);
    if params.is_pure() {
        return Ok((State::Pure(make_tmsv_complex(params.nu(), cutoff)?), p));
    }
    let td = thermal_params(params)?;
    let src = make_tmsv_complex(params.kappa() * td.nu_prime, cutoff)?;
    let lossy = apply_loss_channel(&State::Pure(src), 0, params.eta)?;
    let lossy = apply_loss_channel(&State::Mixed(lossy), 1, params.eta)?;
    Ok((State::Mixed(lossy), p))
}

/// σ built the way the circuit simplification derives it: take the
/// distributed state ρ (TMSV, through the channels η when η < 1), then apply
/// the tap-port noiseless attenuation gⁿ̂ with g² = κ(1−T) to each mode.
/// Returns the normalized state together with the numeric heralding
/// probability of the two zero-photon subtractions, which equals P_σ when
/// κ² = 1. Agrees with [`make_sigma`] exactly for η = 1 (any κ) and for
/// κ² = 1 (any η); a κ-rescaled σ under loss is a different physical source
/// and is built by [`make_sigma`]/[`make_sigma_reduced_noise`] instead.
pub fn make_sigma_from_attenuation(
    params: &ProtocolParams,
    cutoff: usize,
) -> Result<(State, f64)> {
    params.validate()?;
    let g2 = params.kappa() * (1.0 - params.transmittance);
    let g = g2.sqrt();
    let tmsv = make_tmsv(params.lambda, cutoff)?;
    if params.is_pure() {
        if g2 == C64::ZERO {
            // T = 1 (or κ = 0): the taps pass everything, σ degenerates to
            // the vacuum pair and the herald mass is the TMSV vacuum weight.
            let p = tmsv.amplitude(&[0, 0]).norm_sqr();
            return Ok((State::Pure(FockState::vacuum(&[cutoff, cutoff])), p));
        }
        let psi = tmsv
            .apply_exponential_number_complex(0, g2)?
            .apply_exponential_number_complex(1, g2)?;
        let p = psi.norm_sq();
        let (psi, _) = psi.normalize()?;
        return Ok((State::Pure(psi), p));
    }
    let mut rho = apply_loss_channel(&State::Pure(tmsv), 0, params.eta)?;
    rho = apply_loss_channel(&State::Mixed(rho), 1, params.eta)?;
    let dim = cutoff + 1;
    let mut gain = DMatrix::<C64>::zeros(dim, dim);
    let mut pow = C64::new(1.0, 0.0);
    for n in 0..dim {
        gain[(n, n)] = pow;
        pow *= g;
    }
    let rho = rho.sandwich_one_mode(0, &gain, &gain)?;
    let rho = rho.sandwich_one_mode(1, &gain, &gain)?;
    let prob = rho.trace();
    let (rho, _) = rho.normalize()?;
    Ok((State::Mixed(rho.hermitize()), prob))
}

/// Thermal-picture parameters of σ (κ = 1):
/// tanh 2s = 2ηλ(1−T)/(1−λ²(1−2η+η²(2−T)T)),
/// n̄ = (√[(1−λ²(1−η(2−T))²)/(1−λ²(1−ηT)²)] − 1)/2,
/// ν′ = (√(η²+(1−2η)tanh²2s) − η)/(tanh2s (1−2η)),
/// n̄′ = [2ην′/((1−ν′²) sinh 2s) − 1]/2.
pub fn thermal_params(params: &ProtocolParams) -> Result<ThermalDecomposition> {
    params.validate()?;
    let (l, t, eta) = (params.lambda, params.transmittance, params.eta);
    let l2 = l * l;
    let t2s = 2.0 * eta * l * (1.0 - t)
        / (1.0 - l2 * (1.0 - 2.0 * eta + eta * eta * (2.0 - t) * t));
    let num = 1.0 - l2 * (1.0 - eta * (2.0 - t)).powi(2);
    let den = 1.0 - l2 * (1.0 - eta * t).powi(2);
    let nbar = ((num / den).sqrt() - 1.0) / 2.0;
    let nbar_leading = eta * (1.0 - eta) * l2 * (1.0 - t) / den;
    if t2s.abs() < 1e-14 {
        // No squeezing to decompose (λ = 0 or T = 1): σ is thermal/vacuum.
        return Ok(ThermalDecomposition {
            squeeze: 0.0,
            nbar,
            nbar_leading,
            nu_prime: 0.0,
            nbar_prime: nbar,
        });
    }
    let s = t2s.atanh() / 2.0;
    let one_minus_2eta = 1.0 - 2.0 * eta;
    let nu_prime = if one_minus_2eta.abs() < 1e-9 {
        t2s / (2.0 * eta)
    } else {
        ((eta * eta + one_minus_2eta * t2s * t2s).sqrt() - eta) / (t2s * one_minus_2eta)
    };
    let sinh2s = t2s / (1.0 - t2s * t2s).sqrt();
    let nbar_prime =
        0.5 * (2.0 * eta * nu_prime / ((1.0 - nu_prime * nu_prime) * sinh2s) - 1.0);
    Ok(ThermalDecomposition { squeeze: s, nbar, nbar_leading, nu_prime, nbar_prime })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() < tol, "{what}: {a} vs {b} (diff {})", (a - b).abs());
    }

    #[test]
    fn tmsv_amplitudes_and_tail() {
        let st = make_tmsv(0.4, 14).unwrap();
        assert_close(st.amplitude(&[0, 0]).re, 0.9165151389911680, 1e-15, "c0");
        assert_close(st.amplitude(&[1, 1]).re, 0.3666060555964672, 1e-15, "c1");
        assert!(st.amplitude(&[1, 0]).norm() == 0.0, "off-diagonal support");
        assert_close(st.norm_deficit(), 0.16f64.powi(15), 1e-25, "geometric tail");
        let vac = make_tmsv(0.0, 4).unwrap();
        assert_close(vac.amplitude(&[0, 0]).re, 1.0, 1e-15, "λ=0 is vacuum");
        assert!(make_tmsv(1.0, 4).is_err(), "|λ| ≥ 1 rejected");
    }

    #[test]
    fn complex_tmsv_is_normalized() {
        let lam = C64::new(0.0, 0.3);
        let st = make_tmsv_complex(lam, 20).unwrap();
        assert_close(st.norm_sq(), 1.0, 1e-12, "norm with imaginary squeezing");
        assert_close(st.amplitude(&[1, 1]).im, (1.0f64 - 0.09).sqrt() * 0.3, 1e-15, "phase kept");
    }

    #[test]
    fn squeezed_thermal_reduces_to_tmsv_at_zero_temperature() {
        let s = 0.4f64.atanh();
        let rho = make_squeezed_thermal(s, 0.0, 12).unwrap();
        let psi = make_tmsv(0.4, 12).unwrap().to_density();
        let diff = (rho.matrix() - psi.matrix()).norm();
        assert!(diff < 1e-12, "zero-temperature squeezed thermal vs TMSV: {diff}");
    }

    #[test]
    fn squeezed_thermal_reduces_to_thermal_at_zero_squeezing() {
        let rho = make_squeezed_thermal(0.0, 0.3, 8).unwrap();
        let th = make_thermal(0.3, 8).unwrap();
        let prod = th.tensor(&th);
        let diff = (rho.matrix() - prod.matrix()).norm();
        assert!(diff < 1e-12, "zero-squeezing squeezed thermal vs thermal product: {diff}");
    }

    #[test]
    fn squeezer_is_unitary_on_basis_states() {
        for (j, k) in [(0usize, 0usize), (1, 0), (2, 2), (3, 1)] {
            let psi = two_mode_squeeze_basis(0.25, j, k, 24);
            assert_close(psi.norm_sq(), 1.0, 1e-12, "squeezed basis norm");
        }
    }

    #[test]
    fn loss_channel_basics() {
        let one = FockState::basis(&[1], &[3]).unwrap();
        let out = apply_loss_channel(&State::Pure(one.clone()), 0, 0.7).unwrap();
        assert_close(out.element(&[1], &[1]).re, 0.7, 1e-14, "survival weight");
        assert_close(out.element(&[0], &[0]).re, 0.3, 1e-14, "decay weight");
        assert_close(out.trace(), 1.0, 1e-14, "trace preserved");
        let id = apply_loss_channel(&State::Pure(one), 0, 1.0).unwrap();
        assert_close(id.element(&[1], &[1]).re, 1.0, 1e-15, "η=1 identity");
    }

    #[test]
    fn sigma_pure_case() {
        let params = ProtocolParams::new(0.4, 0.8).unwrap();
        let (sigma, p) = make_sigma(&params, 10).unwrap();
        assert_close(p, 0.8454106280193237, 1e-15, "attenuation probability");
        let psi = sigma.as_pure().expect("pure sigma at η=1");
        let want = make_tmsv(0.08, 10).unwrap();
        for n in 0..=10 {
            assert_close(
                psi.amplitude(&[n, n]).re,
                want.amplitude(&[n, n]).re,
                1e-14,
                "TMSV(0.08) amplitude",
            );
        }
    }

    #[test]
    fn sigma_mixed_probability_and_limit() {
        let params = ProtocolParams::new(0.4, 0.8).unwrap().with_eta(0.8).unwrap();
        let (sigma, p) = make_sigma(&params, 8).unwrap();
        assert_close(p, 0.8577870727403437, 1e-14, "mixed attenuation probability");
        assert!(sigma.as_mixed().is_some());
        // T → 1 starves the taps: σ collapses to vacuum.
        let edge = ProtocolParams::new(0.4, 1.0).unwrap();
        let (vac, _) = make_sigma(&edge, 4).unwrap();
        assert_close(vac.as_pure().unwrap().amplitude(&[0, 0]).re, 1.0, 1e-14, "vacuum σ");
    }

    #[test]
    fn attenuation_path_reproduces_sigma() {
        // Pure, with κ² ≠ 1: attenuating the taps matches the rescaled TMSV.
        let params = ProtocolParams::new(0.4, 0.8).unwrap().with_kappa2(0.5).unwrap();
        let (a, pa) = make_sigma_from_attenuation(&params, 10).unwrap();
        let (b, _) = make_sigma(&params, 10).unwrap();
        let (pa_state, pb_state) = (a.as_pure().unwrap(), b.as_pure().unwrap());
        for n in 0..=10 {
            let d = (pa_state.amplitude(&[n, n]) - pb_state.amplitude(&[n, n])).norm();
            assert!(d < 1e-14, "pure attenuated σ amplitude mismatch at n={n}: {d}");
        }
        let nu2 = params.kappa2 * params.nu_unscaled().powi(2);
        assert_close(pa, (1.0 - 0.16) / (1.0 - nu2), 1e-12, "attenuation probability");

        // Mixed, κ² = 1: matches the loss-channel construction element-wise.
        let params = ProtocolParams::new(0.4, 0.8).unwrap().with_eta(0.8).unwrap();
        let (a, pa) = make_sigma_from_attenuation(&params, 8).unwrap();
        let (b, pb) = make_sigma(&params, 8).unwrap();
        let diff = (a.as_mixed().unwrap().matrix() - b.as_mixed().unwrap().matrix()).norm();
        assert!(diff < 1e-10, "mixed σ construction mismatch: {diff}");
        assert_close(pa, pb, 1e-10, "mixed heralding probability vs P_σ");
    }

    #[test]
    fn pair_state_layout() {
        let st = make_pair_state(&[0.5, 0.25]).unwrap();
        assert_eq!(st.cutoffs(), &[1, 1]);
        assert_close(st.amplitude(&[0, 0]).re, 0.5, 1e-15, "a₀");
        assert_close(st.amplitude(&[1, 1]).re, 0.25, 1e-15, "a₁");
        assert!(st.amplitude(&[0, 1]).norm() == 0.0, "no off-ladder support");
        assert!(make_pair_state(&[]).is_err(), "empty amplitude list rejected");
    }

    #[test]
    fn thermal_picture_frozen_values() {
        let params = ProtocolParams::new(0.4, 0.8).unwrap().with_eta(0.8).unwrap();
        let td = thermal_params(&params).unwrap();
        assert_close(td.squeeze, 0.06450326617795683, 1e-14, "s");
        assert_close(td.nbar, 0.005201362273865721, 1e-14, "nbar");
        assert_close(td.nbar_leading, 0.005228416443369714, 1e-14, "nbar leading order");
        assert_close(td.nu_prime, 0.08049648877599253, 1e-14, "nu prime");
        assert_close(td.nbar_prime, 0.0010424245273554496, 1e-14, "nbar prime");
        assert!(td.nbar_prime <= td.nbar, "reduced thermal noise");
        // Lossless: no thermal photons and ν′ = ν.
        let pure = ProtocolParams::new(0.4, 0.8).unwrap();
        let tdp = thermal_params(&pure).unwrap();
        assert_close(tdp.nbar, 0.0, 1e-12, "pure nbar");
        assert_close(tdp.nu_prime, pure.nu_unscaled(), 1e-12, "pure nu prime");
    }

    #[test]
    fn param_validation() {
        assert!(ProtocolParams::new(1.2, 0.8).is_err());
        assert!(ProtocolParams::new(0.4, 0.0).is_err());
        assert!(ProtocolParams::new(0.4, 0.8).unwrap().with_eta(0.0).is_err());
        assert!(ProtocolParams::new(0.4, 0.8).unwrap().with_copies(1).is_err());
        let p = ProtocolParams::new(0.4, 0.8).unwrap().with_kappa2(-0.5).unwrap();
        assert!(p.nu().im != 0.0, "negative κ² gives imaginary ν");
        assert!(ProtocolParams::new(0.7, 0.8).unwrap().gaussification_converges() == false);
        assert!(ProtocolParams::new(0.4, 0.8).unwrap().with_kappa2(30.0).unwrap()
            .kappa_exceeds_physical_bound());
    }
}
