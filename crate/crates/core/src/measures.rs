//! Entanglement and Gaussianity measures on truncated Fock states.
//!
//! Quadrature convention (fixed once, used everywhere): x = (a + a†)/√2,
//! p = −i(a − a†)/√2, so a single vacuum quadrature has variance 1/2 and the
//! squeezing variance V = ⟨(Δx_A − Δx_B)²⟩ equals 1 for the two-mode vacuum
//! and (1−λ)/(1+λ) for a two-mode squeezed vacuum. Reported covariance
//! matrices are rescaled so that the vacuum covariance is the identity.
//!
//! All measures normalize internally, so heralded states can be passed in
//! without renormalizing first; truncation deficits simply make the numbers
//! approximate at the deficit level.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fock::{C64, DensityOperator, FockState, State};
use crate::state_prep::make_squeezed_thermal;

/// First and second moments of the mode operators: means ⟨a_i⟩, the normal
/// matrix ⟨a_i†a_j⟩, and the pair matrix ⟨a_i a_j⟩.
#[derive(Debug, Clone)]
pub struct LadderMoments {
    pub means: Vec<C64>,
    pub number: DMatrix<C64>,
    pub pairs: DMatrix<C64>,
}

pub fn ladder_moments(state: &State) -> Result<LadderMoments> {
    match state {
        State::Pure(psi) => ladder_moments_pure(psi),
        State::Mixed(rho) => ladder_moments_mixed(rho),
    }
}

fn ladder_moments_pure(psi: &FockState) -> Result<LadderMoments> {
    let n = psi.num_modes();
    let norm = psi.norm_sq();
    if norm <= 0.0 {
        return Err(Error::ZeroState);
    }
    let lowered: Vec<FockState> =
        (0..n).map(|i| psi.apply_annihilation(i)).collect::<Result<_>>()?;
    let mut means = Vec::with_capacity(n);
    for low in &lowered {
        means.push(psi.inner(low)? / norm);
    }
    let mut number = DMatrix::<C64>::zeros(n, n);
    let mut pairs = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            number[(i, j)] = lowered[i].inner(&lowered[j])? / norm;
            pairs[(i, j)] = psi.inner(&lowered[j].apply_annihilation(i)?)? / norm;
        }
    }
    Ok(LadderMoments { means, number, pairs })
}

fn ladder_moments_mixed(rho: &DensityOperator) -> Result<LadderMoments> {
    let n = rho.num_modes();
    let trace = rho.trace();
    if trace <= 0.0 {
        return Err(Error::ZeroState);
    }
    let cutoffs = rho.cutoffs().to_vec();
    let mut means = vec![C64::ZERO; n];
    let mut number = DMatrix::<C64>::zeros(n, n);
    let mut pairs = DMatrix::<C64>::zeros(n, n);
    let mut ns = vec![0usize; n];
    let mut shifted = vec![0usize; n];
    let dim = rho.dim();
    for ket in 0..dim {
        decode(ket, &cutoffs, &mut ns);
        for i in 0..n {
            if ns[i] >= 1 {
                shifted.copy_from_slice(&ns);
                shifted[i] -= 1;
                means[i] += (ns[i] as f64).sqrt() * rho.element(&shifted, &ns);
            }
            for j in 0..n {
                // ⟨a_i†a_j⟩ connects |n⟩ to |n − e_j + e_i⟩.
                if i == j {
                    number[(i, i)] += ns[i] as f64 * rho.element(&ns, &ns);
                } else if ns[j] >= 1 && ns[i] < cutoffs[i] {
                    shifted.copy_from_slice(&ns);
                    shifted[j] -= 1;
                    shifted[i] += 1;
                    let w = ((ns[j] * (ns[i] + 1)) as f64).sqrt();
                    number[(i, j)] += w * rho.element(&shifted, &ns);
                }
                // ⟨a_i a_j⟩ connects |n⟩ to |n − e_i − e_j⟩.
                if i == j {
                    if ns[i] >= 2 {
                        shifted.copy_from_slice(&ns);
                        shifted[i] -= 2;
                        let w = ((ns[i] * (ns[i] - 1)) as f64).sqrt();
                        pairs[(i, i)] += w * rho.element(&shifted, &ns);
                    }
                } else if ns[i] >= 1 && ns[j] >= 1 {
                    shifted.copy_from_slice(&ns);
                    shifted[i] -= 1;
                    shifted[j] -= 1;
                    let w = ((ns[i] * ns[j]) as f64).sqrt();
                    pairs[(i, j)] += w * rho.element(&shifted, &ns);
                }
            }
        }
    }
    for v in means.iter_mut() {
        *v /= trace;
    }
    number /= C64::new(trace, 0.0);
    pairs /= C64::new(trace, 0.0);
    Ok(LadderMoments { means, number, pairs })
}

fn decode(mut flat: usize, cutoffs: &[usize], out: &mut [usize]) {
    for (k, &c) in cutoffs.iter().enumerate().rev() {
        let d = c + 1;
        out[k] = flat % d;
        flat /= d;
    }
}

/// Symmetrized quadrature covariance γ_ij = ⟨{Δr_i, Δr_j}⟩/2 with
/// r = (x₁, p₁, x₂, p₂, …) in the x = (a+a†)/√2 convention; vacuum → I/2.
pub(crate) fn covariance_matrix(state: &State) -> Result<DMatrix<f64>> {
    let mom = ladder_moments(state)?;
    let n = mom.means.len();
    let mut gamma = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let s = mom.number[(i, j)] - mom.means[i].conj() * mom.means[j];
            let m = mom.pairs[(i, j)] - mom.means[i] * mom.means[j];
            let delta = if i == j { 0.5 } else { 0.0 };
            gamma[(2 * i, 2 * j)] = m.re + s.re + delta;
            gamma[(2 * i + 1, 2 * j + 1)] = s.re - m.re + delta;
            gamma[(2 * i, 2 * j + 1)] = m.im + s.im;
            gamma[(2 * i + 1, 2 * j)] = m.im - s.im;
        }
    }
    Ok(gamma)
}

/// First and second quadrature moments of a two-mode state, rescaled so that
/// the vacuum covariance is the identity matrix (row/column order
/// x_A, p_A, x_B, p_B). In this normalization a lossy channel acts on the
/// covariance as γ ↦ ηγ + (1−η)I.
#[derive(Debug, Clone)]
pub struct CovarianceSummary {
    /// Quadrature means (2 Re⟨a⟩, 2 Im⟨a⟩ per mode); zero for all states
    /// reachable in this crate, kept for completeness.
    pub mean_vector: Vec<f64>,
    /// 4×4 symmetric covariance matrix, vacuum ⇒ identity.
    pub cov: DMatrix<f64>,
}

pub fn covariance_summary(state: &State) -> Result<CovarianceSummary> {
    require_two_modes(state)?;
    let mom = ladder_moments(state)?;
    let gamma = covariance_matrix(state)?;
    let mut mean_vector = Vec::with_capacity(4);
    for m in &mom.means {
        mean_vector.push(2.0 * m.re);
        mean_vector.push(2.0 * m.im);
    }
    Ok(CovarianceSummary { mean_vector, cov: gamma * 2.0 })
}

/// Symplectic eigenvalues of a vacuum-normalized covariance matrix: the
/// positive imaginary parts of the spectrum of Ωγ. Pure Gaussian states give
/// 1, a symmetric squeezed thermal state gives 2n̄+1 (doubly degenerate).
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = cov.nrows();
    if cov.ncols() != n || n % 2 != 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "covariance matrix must be square with even dimension, got {n}×{}",
            cov.ncols()
        )));
    }
    let prod = symplectic_form(n) * cov;
    let mut out: Vec<f64> =
        prod.complex_eigenvalues().iter().filter(|z| z.im > 0.0).map(|z| z.im).collect();
    out.sort_by(|a, b| a.partial_cmp(b).expect("symplectic eigenvalues are finite"));
    Ok(out)
}

/// How strongly γ + iΩ fails positivity: the magnitude of its most negative
/// eigenvalue, clamped to zero. Physical covariance matrices give ≲ 1e−8.
pub fn uncertainty_defect(cov: &DMatrix<f64>) -> Result<f64> {
    let n = cov.nrows();
    if cov.ncols() != n || n % 2 != 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "covariance matrix must be square with even dimension, got {n}×{}",
            cov.ncols()
        )));
    }
    let omega = symplectic_form(n);
    let mut herm = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            herm[(i, j)] = C64::new(cov[(i, j)], omega[(i, j)]);
        }
    }
    let lowest = hermitian_eigenvalues(&herm)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok((-lowest).max(0.0))
}

fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::<f64>::zeros(n, n);
    for k in 0..n / 2 {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn require_two_modes(state: &State) -> Result<()> {
    let n = state.num_modes();
    if n != 2 {
        return Err(Error::NotTwoMode(n));
    }
    Ok(())
}

/// Is the state supported entirely on the pair ladder |n,n⟩? Such states have
/// identical x− and p+ variances.
fn pair_supported(psi: &FockState) -> bool {
    let cutoffs = psi.cutoffs();
    let db = cutoffs[1] + 1;
    psi.amps().iter().enumerate().all(|(flat, amp)| {
        amp.norm_sqr() < 1e-28 || flat / db == flat % db
    })
}

/// Squeezing variance V = ⟨(Δx_A − Δx_B)²⟩, normalized so the vacuum gives 1.
/// Equals (1−λ)/(1+λ) for a two-mode squeezed vacuum; V < 1 witnesses
/// two-mode squeezing. For pure states supported on the |n,n⟩ ladder this
/// coincides with ⟨(Δp_A + Δp_B)²⟩, which is verified internally.
pub fn squeezing_variance(state: &State) -> Result<f64> {
    require_two_modes(state)?;
    let g = covariance_matrix(state)?;
    let vx = g[(0, 0)] + g[(2, 2)] - 2.0 * g[(0, 2)];
    let vp = g[(1, 1)] + g[(3, 3)] + 2.0 * g[(1, 3)];
    if let State::Pure(psi) = state {
        if pair_supported(psi) {
            debug_assert!(
                (vx - vp).abs() < 1e-9,
                "x− and p+ variances must coincide on the pair ladder: {vx} vs {vp}"
            );
        }
    }
    Ok(vx)
}

/// Eigenvalues of the hermitian part of a complex matrix.
fn hermitian_eigenvalues(mat: &DMatrix<C64>) -> Vec<f64> {
    let h = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
}

/// Von Neumann entropy S(ρ_A) = −Tr[ρ_A ln ρ_A] of the reduced state of mode
/// A, in nats. For pure two-mode states this is the entropy of entanglement;
/// for mixed inputs it is reported as-is (a reduced-state entropy, not an
/// entanglement measure). Eigenvalues below 1e−14 are dropped.
pub fn entanglement_entropy(state: &State) -> Result<f64> {
    require_two_modes(state)?;
    let reduced = match state {
        State::Pure(psi) => {
            let (psi, _) = psi.clone().normalize()?;
            psi.partial_trace(&[0])?
        }
        State::Mixed(rho) => {
            let (rho, _) = rho.clone().normalize()?;
            rho.partial_trace(&[0])?
        }
    };
    let mut entropy = 0.0;
    for p in hermitian_eigenvalues(reduced.matrix()) {
        if p > 1e-14 {
            entropy -= p * p.ln();
        }
    }
    Ok(entropy)
}

fn state_vector(psi: &FockState) -> DVector<C64> {
    DVector::from_column_slice(psi.amps())
}

fn check_same_lattice(a: &State, b: &State) -> Result<()> {
    if a.cutoffs() != b.cutoffs() {
        return Err(Error::CutoffMismatch(a.cutoffs().to_vec(), b.cutoffs().to_vec()));
    }
    Ok(())
}

/// Positive square root of a hermitian operator, negative ripples clamped.
fn hermitian_sqrt(mat: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut out = DMatrix::<C64>::zeros(mat.nrows(), mat.ncols());
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let root = C64::new(ev.sqrt(), 0.0);
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                out[(i, j)] += root * v[i] * v[j].conj();
            }
        }
    }
    out
}

/// General fidelity F(ρ,σ) = (Tr√(√ρ σ √ρ))²; reduces to |⟨ψ|φ⟩|² for pure
/// states and ⟨ψ|ρ|ψ⟩ for a pure–mixed pair. Inputs are normalized first.
/// Internal plumbing for [`gaussianity_residual`]; the public fidelity
/// surface is [`fidelity_with_tmsv`], which never needs the mixed–mixed case.
pub(crate) fn fidelity_general(a: &State, b: &State) -> Result<f64> {
    check_same_lattice(a, b)?;
    match (a, b) {
        (State::Pure(x), State::Pure(y)) => {
            let overlap = x.inner(y)?.norm_sqr();
            Ok(overlap / (x.norm_sq() * y.norm_sq()))
        }
        (State::Pure(x), State::Mixed(r)) | (State::Mixed(r), State::Pure(x)) => {
            let (r, _) = r.clone().normalize()?;
            let v = state_vector(x);
            let quad = (v.adjoint() * r.matrix() * &v)[(0, 0)].re;
            Ok((quad / x.norm_sq()).max(0.0))
        }
        (State::Mixed(r), State::Mixed(s)) => {
            let (r, _) = r.clone().normalize()?;
            let (s, _) = s.clone().normalize()?;
            let root = hermitian_sqrt(r.matrix());
            let inner = &root * s.matrix() * &root;
            let total: f64 = hermitian_eigenvalues(&inner)
                .iter()
                .filter(|&&e| e > 0.0)
                .map(|e| e.sqrt())
                .sum();
            Ok(total * total)
        }
    }
}

/// Fidelity of a two-mode state with the two-mode squeezed vacuum of
/// parameter ω: |⟨TMSV(ω)|ψ⟩|² for pure inputs, ⟨TMSV(ω)|ρ|TMSV(ω)⟩ for
/// density operators. The reference state is evaluated exactly on the
/// caller's lattice (its own truncation tail is not re-normalized away, so
/// values are exact whenever the input support fits the cutoff).
pub fn fidelity_with_tmsv(state: &State, omega: f64) -> Result<f64> {
    require_two_modes(state)?;
    if !(omega.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "TMSV parameter must satisfy |ω| < 1, got {omega}"
        )));
    }
    let cutoffs = state.cutoffs();
    let nmax = cutoffs[0].min(cutoffs[1]);
    let scale = 1.0 - omega * omega;
    match state {
        State::Pure(psi) => {
            let mut overlap = C64::ZERO;
            let mut weight = 1.0;
            for n in 0..=nmax {
                overlap += weight * psi.amplitude(&[n, n]);
                weight *= omega;
            }
            Ok(scale * overlap.norm_sqr() / psi.norm_sq())
        }
        State::Mixed(rho) => {
            let mut quad = C64::ZERO;
            for n in 0..=nmax {
                for m in 0..=nmax {
                    let w = omega.powi(n as i32) * omega.powi(m as i32);
                    quad += w * rho.element(&[n, n], &[m, m]);
                }
            }
            Ok((scale * quad.re / rho.trace()).max(0.0))
        }
    }
}

/// Trace distance D = ½‖ρ−σ‖₁; √(1−|⟨ψ|φ⟩|²) for pure pairs.
pub fn trace_distance(a: &State, b: &State) -> Result<f64> {
    check_same_lattice(a, b)?;
    if let (State::Pure(x), State::Pure(y)) = (a, b) {
        // 1−|⟨ψ|φ⟩| evaluated as the phase-aligned difference norm, which
        // stays accurate when the overlap is within rounding of 1 (where the
        // direct 1−F² subtraction bottoms out near √ε).
        let nx = x.norm_sq().sqrt();
        let ny = y.norm_sq().sqrt();
        if nx < crate::fock::DEFAULT_HERALD_FLOOR || ny < crate::fock::DEFAULT_HERALD_FLOOR {
            return Err(Error::ZeroState);
        }
        let s = x.inner(y)? / C64::new(nx * ny, 0.0);
        let mag = s.norm();
        let phase = if mag > 0.0 { s / mag } else { C64::new(1.0, 0.0) };
        let mut diff2 = 0.0;
        for (u, v) in x.amps().iter().zip(y.amps()) {
            diff2 += (u / nx - v * phase / ny).norm_sqr();
        }
        let one_minus = 0.5 * diff2;
        return Ok((one_minus * (1.0 + mag)).max(0.0).sqrt());
    }
    let (ra, _) = a.to_density().normalize()?;
    let (rb, _) = b.to_density().normalize()?;
    let diff = ra.matrix() - rb.matrix();
    let total: f64 = hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum();
    Ok(0.5 * total)
}

/// Symmetric two-mode squeezed thermal state fitted to the covariance matrix:
/// S(s)[ρ_th(n̄)⊗ρ_th(n̄)]S†(s) with tanh 2s = c/a, n̄ = √(a²−c²) − 1/2, where
/// a is the mean diagonal variance and c the mean x–x / p–p cross correlation
/// (both in the internal vacuum-1/2 normalization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    /// Mean diagonal covariance a.
    pub diag: f64,
    /// Mean cross covariance c.
    pub cross: f64,
    /// Fitted thermal occupation.
    pub nbar: f64,
    /// Fitted two-mode squeezing constant s.
    pub squeeze: f64,
    /// tanh s, the equivalent TMSV parameter when n̄ ≈ 0.
    pub lambda: f64,
}

pub fn fit_two_mode_squeezed_thermal(state: &State) -> Result<GaussianFit> {
    require_two_modes(state)?;
    let g = covariance_matrix(state)?;
    let a = (g[(0, 0)] + g[(1, 1)] + g[(2, 2)] + g[(3, 3)]) / 4.0;
    let c = (g[(0, 2)] - g[(1, 3)]) / 2.0;
    if c.abs() >= a {
        return Err(Error::InvalidParameter(format!(
            "covariance is not a physical two-mode squeezed thermal state (a={a}, c={c})"
        )));
    }
    let nbar = ((a * a - c * c).sqrt() - 0.5).max(0.0);
    let squeeze = (c / a).atanh() / 2.0;
    Ok(GaussianFit { diag: a, cross: c, nbar, squeeze, lambda: squeeze.tanh() })
}

/// Distance from Gaussianity: 1 − F(state, G), where G is the symmetric
/// squeezed thermal state built from the state's own covariance fit. Gaussian
/// inputs (TMSV, lossy TMSV, squeezed thermal states) give ≈ 0; conditionally
/// photon-subtracted states give strictly positive values, and the residual
/// shrinking across gaussification iterations quantifies convergence.
pub fn gaussianity_residual(state: &State) -> Result<f64> {
    require_two_modes(state)?;
    let cutoffs = state.cutoffs();
    if cutoffs[0] != cutoffs[1] {
        return Err(Error::InvalidParameter(format!(
            "gaussianity residual needs equal per-mode cutoffs, got {cutoffs:?}"
        )));
    }
    let fit = fit_two_mode_squeezed_thermal(state)?;
    let gauss = make_squeezed_thermal(fit.squeeze, fit.nbar, cutoffs[0])?;
    let f = fidelity_general(state, &State::Mixed(gauss))?;
    Ok((1.0 - f).max(0.0))
}
