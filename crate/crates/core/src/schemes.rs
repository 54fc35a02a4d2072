//! End-to-end heralded circuits: photon subtraction taps, the two equivalent
//! two-copy distillation layouts, iterative Gaussification, generalized
//! subtraction with a squeezed ancilla, and the M-copy interference scheme.
//!
//! Mode layouts are fixed per circuit and documented on each runner; herald
//! patterns list (mode, outcome) pairs in detector firing order using those
//! labels. Every runner evolves unnormalized amplitudes through the literal
//! beam-splitter network, heralds by raw projection, and normalizes once at
//! the end, so the reported probability is the exact chained herald mass of
//! the truncated inputs. Pure inputs stay in amplitude representation
//! throughout; mixed inputs stay in density-operator representation, with
//! detector stages evaluated as exact contractions so the largest
//! materialized operator always lives on two modes.
//!
//! Photon subtraction fixes the conventions: a tap of transmittance T on a
//! signal mode is the splitter exp[θ(ĉ†â − ĉâ†)] with θ = arccos √T against
//! a vacuum ancilla ĉ, and heralding m ancilla photons implements
//! K̂_m = (1−T)^(m/2)/√m! · T^(n̂/2) â^m on the signal.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{
    C64, DEFAULT_HERALD_FLOOR, DensityOperator, FockState, HeraldedResult, State,
};
use crate::parallel::{self, ExecMode};
use crate::state_prep::{self, ProtocolParams};

// ---------------------------------------------------------------------------
// Photon subtraction
// ---------------------------------------------------------------------------

fn check_tap_transmittance(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tap transmittance must lie in (0, 1], got {t}"
        )));
    }
    Ok(())
}

/// Matrix of K̂_m = (1−T)^(m/2)/√m! · T^(n̂/2) â^m on a single mode of
/// dimension `dim`: entry (n−m, n) is (1−T)^(m/2)/√m! · T^((n−m)/2) √(n!/(n−m)!).
fn kraus_matrix(transmittance: f64, m: usize, dim: usize) -> DMatrix<C64> {
    let mut k = DMatrix::<C64>::zeros(dim, dim);
    let mut pref = 1.0;
    for q in 1..=m {
        pref *= (1.0 - transmittance) / q as f64;
    }
    let pref = pref.sqrt();
    let root_t = transmittance.sqrt();
    for n in m..dim {
        let mut falling = 1.0;
        for q in 0..m {
            falling *= (n - q) as f64;
        }
        k[(n - m, n)] = C64::new(pref * falling.sqrt() * root_t.powi((n - m) as i32), 0.0);
    }
    k
}

/// Attach a vacuum ancilla, couple it to `mode` with a θ-tap and herald `m`
/// ancilla photons, unnormalized: returns the surviving state (same mode
/// count and cutoffs as the input) and the raw herald mass.
fn tap_herald_raw(psi: &FockState, mode: usize, theta: f64, m: usize) -> Result<(FockState, f64)> {
    let anc_cut = psi.cutoffs()[mode];
    let anc = psi.num_modes();
    let joint = psi.tensor(&FockState::vacuum(&[anc_cut]));
    let joint = joint.apply_beam_splitter(anc, mode, theta)?;
    joint.project_mode_raw(anc, m)
}

/// Subtract `m` photons from one mode with a transmittance-T tap, simulated
/// as the literal circuit: vacuum ancilla, splitter θ = arccos √T, ancilla
/// heralded on |m⟩. The output keeps the input's modes and cutoffs;
/// `probability` is the herald mass relative to the (normalized) input.
pub fn photon_subtract(
    state: &State,
    mode: usize,
    transmittance: f64,
    m: usize,
) -> Result<HeraldedResult<State>> {
    check_tap_transmittance(transmittance)?;
    let theta = transmittance.sqrt().acos();
    match state {
        State::Pure(psi) => {
            let total = psi.norm_sq();
            if total < DEFAULT_HERALD_FLOOR {
                return Err(Error::ZeroState);
            }
            let (raw, mass) = tap_herald_raw(psi, mode, theta, m)?;
            let probability = mass / total;
            if probability < DEFAULT_HERALD_FLOOR {
                return Err(Error::HeraldImpossible {
                    probability,
                    floor: DEFAULT_HERALD_FLOOR,
                });
            }
            let deficit = raw.norm_deficit();
            let (out, _) = raw.normalize()?;
            Ok(HeraldedResult {
                state: State::Pure(out),
                probability,
                norm_deficit: deficit,
                herald_pattern: vec![(psi.num_modes(), m)],
            })
        }
        State::Mixed(rho) => {
            let anc_cut = rho.cutoffs()[mode];
            let anc = rho.num_modes();
            let joint = rho.tensor(&FockState::vacuum(&[anc_cut]).to_density());
            let joint = joint.apply_beam_splitter(anc, mode, theta)?;
            let heralded = joint.project_mode(anc, m)?;
            Ok(heralded.map(|d| State::Mixed(d.hermitize())))
        }
    }
}

/// Subtract `m` photons by applying the tap's heralding operator
/// (1−T)^(m/2)/√m! · T^(n̂/2) â^m directly, without the ancilla mode. Agrees
/// with [`photon_subtract`] to machine precision; useful as an independent
/// cross-check and for operator-level compositions.
pub fn photon_subtract_operator(
    state: &State,
    mode: usize,
    transmittance: f64,
    m: usize,
) -> Result<HeraldedResult<State>> {
    check_tap_transmittance(transmittance)?;
    match state {
        State::Pure(psi) => {
            let total = psi.norm_sq();
            if total < DEFAULT_HERALD_FLOOR {
                return Err(Error::ZeroState);
            }
            let mut work = psi.clone();
            for _ in 0..m {
                work = work.apply_annihilation(mode)?;
            }
            work = work.apply_exponential_number(mode, transmittance)?;
            let mut pref = 1.0;
            for q in 1..=m {
                pref *= (1.0 - transmittance) / q as f64;
            }
            let pref = C64::new(pref.sqrt(), 0.0);
            for a in work.amps_mut() {
                *a *= pref;
            }
            let mass = work.norm_sq();
            let probability = mass / total;
            if probability < DEFAULT_HERALD_FLOOR {
                return Err(Error::HeraldImpossible {
                    probability,
                    floor: DEFAULT_HERALD_FLOOR,
                });
            }
            let deficit = work.norm_deficit();
            let (out, _) = work.normalize()?;
            Ok(HeraldedResult {
                state: State::Pure(out),
                probability,
                norm_deficit: deficit,
                herald_pattern: vec![(psi.num_modes(), m)],
            })
        }
        State::Mixed(rho) => {
            let total = rho.trace();
            if total < DEFAULT_HERALD_FLOOR {
                return Err(Error::ZeroState);
            }
            let k = kraus_matrix(transmittance, m, rho.cutoffs()[mode] + 1);
            let out = rho.sandwich_one_mode(mode, &k, &k)?;
            let probability = out.trace() / total;
            if probability < DEFAULT_HERALD_FLOOR {
                return Err(Error::HeraldImpossible {
                    probability,
                    floor: DEFAULT_HERALD_FLOOR,
                });
            }
            let deficit = out.trace_deficit();
            let (out, _) = out.normalize()?;
            Ok(HeraldedResult {
                state: State::Mixed(out.hermitize()),
                probability,
                norm_deficit: deficit,
                herald_pattern: vec![(rho.num_modes(), m)],
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Two-copy distillation, explicit layout
// ---------------------------------------------------------------------------

/// One input copy with a single photon subtracted from each of its two modes
/// via taps, unnormalized so the two herald masses stay multiplied in.
fn copy_with_single_subtractions(lambda: f64, theta: f64, cutoff: usize) -> Result<FockState> {
    let mut psi = state_prep::make_tmsv(lambda, cutoff)?;
    for mode in 0..2 {
        let (next, _) = tap_herald_raw(&psi, mode, theta, 1)?;
        psi = next;
    }
    Ok(psi)
}

/// The explicit two-copy scheme. Mode layout: 0,1 = kept pair A1,B1;
/// 2,3 = second copy A2,B2 (heralded on vacuum); 4..8 = the four tap
/// detectors in subtraction order (A1,B1,A2,B2), each heralded on |1⟩.
/// Steps: two copies of TMSV(λ), a transmittance-T tap subtracting one
/// photon from every mode, balanced splitters joining the copies pairwise,
/// and vacuum heralds on the second copy. Defined for pure inputs (η = 1);
/// `probability` is the full six-detector coincidence mass.
pub fn run_original_two_copy(
    params: &ProtocolParams,
    cutoff: usize,
) -> Result<HeraldedResult<FockState>> {
    params.validate()?;
    if !params.is_pure() {
        return Err(Error::InvalidParameter(
            "the explicit two-copy layout is defined for pure inputs (eta = 1)".into(),
        ));
    }
    let theta = params.theta();
    let copy = copy_with_single_subtractions(params.lambda, theta, cutoff)?;
    let joint = copy.tensor(&copy);
    let joint = joint.apply_beam_splitter(0, 2, FRAC_PI_4)?;
    let joint = joint.apply_beam_splitter(1, 3, FRAC_PI_4)?;
    let (joint, _) = joint.project_mode_raw(3, 0)?;
    let (joint, _) = joint.project_mode_raw(2, 0)?;
    let probability = joint.norm_sq();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    let deficit = joint.norm_deficit();
    let (state, _) = joint.normalize()?;
    Ok(HeraldedResult {
        state,
        probability,
        norm_deficit: deficit,
        herald_pattern: vec![(4, 1), (5, 1), (6, 1), (7, 1), (2, 0), (3, 0)],
    })
}

/// ⟨1,1| after the balanced ancilla coupler, as a function of how the two
/// photons were split before it: weight w[x] = ⟨1,1| coupler |x, 2−x⟩.
/// (w[1] vanishes — two-photon bunching at a balanced splitter.)
fn coupler_herald_weights() -> Result<[C64; 3]> {
    let mut w = [C64::ZERO; 3];
    for (x, slot) in w.iter_mut().enumerate() {
        let basis = FockState::basis(&[x, 2 - x], &[2, 2])?;
        let after = basis.apply_beam_splitter(0, 1, -FRAC_PI_4)?;
        *slot = after.amplitude(&[1, 1]);
    }
    Ok(w)
}

fn simplified_pure(
    params: &ProtocolParams,
    cutoff: usize,
) -> Result<HeraldedResult<FockState>> {
    let theta = params.theta();
    let rho = state_prep::make_tmsv(params.lambda, cutoff)?;
    // Each coupler conserves its ancilla pair's total photon number and the
    // detectors demand total 2, so σ rungs above 2 and ancilla occupations
    // above 2 can never fire the pattern: occupation 2 lattices are exact
    // for both the retained amplitudes and the herald mass, and σ's tail is
    // excluded from the deficit because it is provably unreachable.
    let sigma = state_prep::make_tmsv_complex(params.nu(), 2)?;
    let input_deficit = rho.norm_deficit();
    let psi = rho.tensor(&FockState::vacuum(&[2, 2])).tensor(&sigma);
    let psi = psi.apply_beam_splitter(2, 0, theta)?;
    let psi = psi.apply_beam_splitter(3, 1, theta)?;
    let psi = psi.apply_beam_splitter(2, 4, -FRAC_PI_4)?;
    let psi = psi.apply_beam_splitter(3, 5, -FRAC_PI_4)?;
    let (psi, _) = psi.project_mode_raw(5, 1)?;
    let (psi, _) = psi.project_mode_raw(4, 1)?;
    let (psi, _) = psi.project_mode_raw(3, 1)?;
    let (psi, _) = psi.project_mode_raw(2, 1)?;
    let probability = psi.norm_sq();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    let (state, _) = psi.normalize()?;
    Ok(HeraldedResult {
        state,
        probability,
        norm_deficit: input_deficit,
        herald_pattern: vec![(2, 1), (3, 1), (4, 1), (5, 1)],
    })
}

fn simplified_mixed(
    params: &ProtocolParams,
    cutoff: usize,
    exec: ExecMode,
) -> Result<HeraldedResult<DensityOperator>> {
    let theta = params.theta();
    let rho = state_prep::make_input(params, cutoff)?.to_density();
    let (sigma_state, _) = state_prep::make_sigma(params, cutoff)?;
    let sigma = sigma_state.to_density();
    let input_deficit = rho.trace_deficit() + sigma.trace_deficit();

    // Taps against vacuum ancillas, kept at occupation 2 (see the pure path).
    let four = rho.tensor(&FockState::vacuum(&[2, 2]).to_density());
    let four = four.apply_beam_splitter(2, 0, theta)?;
    let four = four.apply_beam_splitter(3, 1, theta)?;

    // Detector stage as one exact contraction. Writing the heralds as
    // ⟨1,1| coupler |x, 2−x⟩ = w[x] on each side, the surviving pair operator
    // is Σ w[c]w[d] conj(w[e]w[f]) ⟨··cd| four |··ef⟩ ⟨2−c,2−d|σ|2−e,2−f⟩,
    // so nothing larger than the two-mode output is ever materialized.
    let w = coupler_herald_weights()?;
    let da = cutoff + 1;
    let dim = da * da;
    let m4 = four.matrix();
    let rows: Vec<Vec<C64>> = parallel::indexed_map(exec, dim, |r| {
        let mut out_row = vec![C64::ZERO; dim];
        for (c, out) in out_row.iter_mut().enumerate() {
            let mut acc = C64::ZERO;
            for c1 in 0..3 {
                for d1 in 0..3 {
                    let wl = w[c1] * w[d1];
                    if wl == C64::ZERO {
                        continue;
                    }
                    let bra = (r * 3 + c1) * 3 + d1;
                    for e1 in 0..3 {
                        for f1 in 0..3 {
                            let wr = (w[e1] * w[f1]).conj();
                            if wr == C64::ZERO {
                                continue;
                            }
                            let z = m4[(bra, (c * 3 + e1) * 3 + f1)];
                            if z == C64::ZERO {
                                continue;
                            }
                            let s = sigma.element(&[2 - c1, 2 - d1], &[2 - e1, 2 - f1]);
                            acc += wl * wr * z * s;
                        }
                    }
                }
            }
            *out = acc;
        }
        out_row
    });
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            mat[(r, c)] = v;
        }
    }
    let out = DensityOperator::from_parts(vec![cutoff, cutoff], mat, input_deficit);
    let probability = out.trace();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    let (out, _) = out.normalize()?;
    Ok(HeraldedResult {
        state: out.hermitize(),
        probability,
        norm_deficit: input_deficit,
        herald_pattern: vec![(2, 1), (3, 1), (4, 1), (5, 1)],
    })
}

/// The simplified single-copy scheme with the deterministic resource σ.
/// Mode layout: 0,1 = distributed pair A,B; 2,3 = tap ancillas C1,D1
/// (vacuum in); 4,5 = σ's modes C2,D2. Steps: transmittance-T taps on
/// (A,C1) and (B,D1), balanced couplers joining (C1,C2) and (D1,D2), and
/// single-photon heralds on all four ancillas. Produces the same normalized
/// state as [`run_original_two_copy`] at κ² = 1 with a success probability
/// larger by exactly the factor 1/P_σ; the squeezing knob κ² reshapes σ and
/// with it the output polynomial. Pure params run in amplitude
/// representation; lossy params (η < 1) run the density-operator path with
/// the detector stage contracted exactly.
pub fn run_simplified_two_copy(
    params: &ProtocolParams,
    cutoff: usize,
) -> Result<HeraldedResult<State>> {
    run_simplified_two_copy_with(params, cutoff, ExecMode::Parallel)
}

/// [`run_simplified_two_copy`] with an explicit execution mode for the mixed
/// detector contraction (the pure path is unaffected by the mode).
pub fn run_simplified_two_copy_with(
    params: &ProtocolParams,
    cutoff: usize,
    exec: ExecMode,
) -> Result<HeraldedResult<State>> {
    params.validate()?;
    if cutoff < 2 {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be at least 2 to resolve the ancilla coincidences, got {cutoff}"
        )));
    }
    if params.is_pure() {
        simplified_pure(params, cutoff).map(|h| h.map(State::Pure))
    } else {
        simplified_mixed(params, cutoff, exec).map(|h| h.map(State::Mixed))
    }
}

// ---------------------------------------------------------------------------
// Mixed-state heralding as a closed Kraus sum
// ---------------------------------------------------------------------------

/// The heralded pair operator of the simplified scheme written as a closed
/// 16-term double Kraus sum instead of a circuit:
///
/// ρ_out = (1/4) Σ_{j,k,l,m ∈ {0,1}} (−1)^(j+k+l+m)
///         K̂_{2j}⊗K̂_{2k} ρ K̂†_{2l}⊗K̂†_{2m} · ⟨2−2j, 2−2k| σ |2−2l, 2−2m⟩,
///
/// with the taps' K̂ operators at transmittance T acting on A and B. Returns
/// the unnormalized operator; its trace is the herald probability for
/// normalized ρ and σ. Agrees with [`run_simplified_two_copy`]'s circuit
/// path to machine precision — the circuit's detector contraction reduces
/// term-by-term to exactly this sum.
pub fn rho_dist_formula(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    transmittance: f64,
) -> Result<DensityOperator> {
    check_tap_transmittance(transmittance)?;
    if rho.num_modes() != 2 {
        return Err(Error::NotTwoMode(rho.num_modes()));
    }
    if sigma.num_modes() != 2 {
        return Err(Error::NotTwoMode(sigma.num_modes()));
    }
    if sigma.cutoffs().iter().any(|&c| c < 2) {
        return Err(Error::InvalidParameter(format!(
            "resource operator needs cutoffs of at least 2, got {:?}",
            sigma.cutoffs()
        )));
    }
    let d0 = rho.cutoffs()[0] + 1;
    let d1 = rho.cutoffs()[1] + 1;
    let ka = [
        kraus_matrix(transmittance, 0, d0),
        kraus_matrix(transmittance, 2, d0),
    ];
    let kb = [
        kraus_matrix(transmittance, 0, d1),
        kraus_matrix(transmittance, 2, d1),
    ];
    let mut acc = DMatrix::<C64>::zeros(rho.dim(), rho.dim());
    for j in 0..2usize {
        for k in 0..2usize {
            for l in 0..2usize {
                for m in 0..2usize {
                    let sign = if (j + k + l + m) % 2 == 0 { 0.25 } else { -0.25 };
                    let weight = sigma.element(&[2 - 2 * j, 2 - 2 * k], &[2 - 2 * l, 2 - 2 * m])
                        * C64::new(sign, 0.0);
                    if weight == C64::ZERO {
                        continue;
                    }
                    let term = rho
                        .sandwich_one_mode(0, &ka[j], &ka[l])?
                        .sandwich_one_mode(1, &kb[k], &kb[m])?;
                    acc += term.matrix() * weight;
                }
            }
        }
    }
    let deficit = rho.trace_deficit() + sigma.trace_deficit();
    Ok(DensityOperator::from_parts(rho.cutoffs().to_vec(), acc, deficit).hermitize())
}

// ---------------------------------------------------------------------------
// Gaussification
// ---------------------------------------------------------------------------

/// ⟨a, 0| balanced splitter |j, a−j⟩ for every photon split of a two-copy
/// interference, tabulated from the literal two-mode circuit. Row index a
/// runs to 2·cutoff so the mass pushed past the kept lattice can be audited.
fn vacuum_coupler_weights(cutoff: usize) -> Result<Vec<Vec<f64>>> {
    let hi = 2 * cutoff;
    let mut w = vec![vec![0.0; cutoff + 1]; hi + 1];
    for (a, row) in w.iter_mut().enumerate() {
        for j in a.saturating_sub(cutoff)..=a.min(cutoff) {
            let basis = FockState::basis(&[j, a - j], &[hi, cutoff])?;
            let after = basis.apply_beam_splitter(0, 1, FRAC_PI_4)?;
            row[j] = after.amplitude(&[a, 0]).re;
        }
    }
    Ok(w)
}

fn gaussify_pure(psi: &FockState) -> Result<HeraldedResult<FockState>> {
    let (psi, _) = psi.clone().normalize()?;
    let input_deficit = psi.norm_deficit();
    let joint = psi.tensor(&psi);
    let joint = joint.apply_beam_splitter(0, 2, FRAC_PI_4)?;
    let joint = joint.apply_beam_splitter(1, 3, FRAC_PI_4)?;
    let (joint, _) = joint.project_mode_raw(3, 0)?;
    let (joint, _) = joint.project_mode_raw(2, 0)?;
    let probability = joint.norm_sq();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    // The interference pushes photons toward the kept copy, so unlike the
    // fixed-pattern heralds above, mass clipped at the lattice edge here is
    // mass the output genuinely wanted: keep it in the deficit. It is the
    // signal divergence detection watches. The two copies share one source
    // state, so its truncation loss is counted once, not compounded — the
    // joint lattice double-counts it.
    let deficit = (joint.norm_deficit() - input_deficit).max(0.0);
    let (mut state, _) = joint.normalize()?;
    state.set_norm_deficit(deficit);
    Ok(HeraldedResult {
        state,
        probability,
        norm_deficit: deficit,
        herald_pattern: vec![(2, 0), (3, 0)],
    })
}

fn gaussify_mixed(rho: &DensityOperator, exec: ExecMode) -> Result<HeraldedResult<DensityOperator>> {
    let (rho, _) = rho.clone().normalize()?;
    let input_deficit = rho.trace_deficit();
    let c0 = rho.cutoffs()[0];
    let c1 = rho.cutoffs()[1];
    let cmax = c0.max(c1);
    let w = vacuum_coupler_weights(cmax)?;
    let db = c1 + 1;
    let dim = (c0 + 1) * db;
    let m = rho.matrix();

    // Fused two-copy contraction: with both copies equal to ρ and vacuum
    // heralds on the second pair of ports,
    //   out[(a,b),(a′,b′)] = Σ w[a][j] w[b][k] w[a′][l] w[b′][m]
    //                        ρ[(j,k),(l,m)] ρ[(a−j,b−k),(a′−l,b′−m)],
    // evaluated without ever forming the four-mode product operator.
    let rows: Vec<Vec<C64>> = parallel::indexed_map(exec, dim, |r| {
        let a = r / db;
        let b = r % db;
        let mut out_row = vec![C64::ZERO; dim];
        for (col, out) in out_row.iter_mut().enumerate() {
            let ap = col / db;
            let bp = col % db;
            let mut acc = C64::ZERO;
            for j in 0..=a {
                let wa = w[a][j];
                for k in 0..=b {
                    let wab = wa * w[b][k];
                    let bra1 = j * db + k;
                    let bra2 = (a - j) * db + (b - k);
                    for l in 0..=ap {
                        let wl = w[ap][l];
                        for q in 0..=bp {
                            let z1 = m[(bra1, l * db + q)];
                            if z1 == C64::ZERO {
                                continue;
                            }
                            let z2 = m[(bra2, (ap - l) * db + (bp - q))];
                            if z2 == C64::ZERO {
                                continue;
                            }
                            acc += (wab * wl * w[bp][q]) * z1 * z2;
                        }
                    }
                }
            }
            *out = acc;
        }
        out_row
    });
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            mat[(r, c)] = v;
        }
    }

    // Diagonal herald mass that lands beyond the kept lattice (a or b above
    // cutoff): the same contraction on the extended diagonal, to keep the
    // deficit honest for divergence detection.
    let hi = 2 * cmax;
    let ext = (hi + 1) * (hi + 1);
    let dropped = parallel::indexed_fold(
        exec,
        ext,
        || 0.0f64,
        |acc_mass, idx| {
            let a = idx / (hi + 1);
            let b = idx % (hi + 1);
            if a <= c0 && b <= c1 {
                return acc_mass;
            }
            let mut acc = C64::ZERO;
            for j in a.saturating_sub(c0)..=a.min(c0) {
                let wa = w[a][j];
                for k in b.saturating_sub(c1)..=b.min(c1) {
                    let wab = wa * w[b][k];
                    let bra1 = j * db + k;
                    let bra2 = (a - j) * db + (b - k);
                    for l in a.saturating_sub(c0)..=a.min(c0) {
                        let wl = w[a][l];
                        for q in b.saturating_sub(c1)..=b.min(c1) {
                            let z1 = m[(bra1, l * db + q)];
                            if z1 == C64::ZERO {
                                continue;
                            }
                            let z2 = m[(bra2, (a - l) * db + (b - q))];
                            if z2 == C64::ZERO {
                                continue;
                            }
                            acc += (wab * wl * w[b][q]) * z1 * z2;
                        }
                    }
                }
            }
            acc_mass + acc.re
        },
        |x, y| x + y,
    );

    let out = DensityOperator::from_parts(vec![c0, c1], mat, 0.0);
    let probability = out.trace();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    // As in the pure path, the shared source's truncation loss counts once;
    // the fresh loss is the herald mass pushed past the kept lattice.
    let denom = probability + dropped;
    let deficit = input_deficit + if denom > 0.0 { dropped / denom } else { 0.0 };
    let (mut out, _) = out.normalize()?;
    out.set_trace_deficit(deficit);
    Ok(HeraldedResult {
        state: out.hermitize(),
        probability,
        norm_deficit: deficit,
        herald_pattern: vec![(2, 0), (3, 0)],
    })
}

/// One recursion of heralded Gaussification: two copies of the pair state
/// interfere on balanced splitters (A1 with A2, B1 with B2) and the second
/// copy is heralded on double vacuum. Mode layout: 0,1 = kept pair A1,B1;
/// 2,3 = heralded copy A2,B2. Inputs may be unnormalized; `probability` is
/// relative to one normalized copy squared. A two-mode squeezed vacuum is an
/// exact fixed point; pair states with small |n,n⟩ amplitude-ratio step
/// toward one with doubled first ratio, and divergent inputs show up as
/// growing `norm_deficit` and mean photon number rather than as errors.
pub fn gaussification_step(state: &State) -> Result<HeraldedResult<State>> {
    gaussification_step_with(state, ExecMode::Parallel)
}

/// [`gaussification_step`] with an explicit execution mode for the fused
/// mixed-state contraction (the pure path is unaffected by the mode).
pub fn gaussification_step_with(state: &State, exec: ExecMode) -> Result<HeraldedResult<State>> {
    if state.num_modes() != 2 {
        return Err(Error::NotTwoMode(state.num_modes()));
    }
    match state {
        State::Pure(psi) => gaussify_pure(psi).map(|h| h.map(State::Pure)),
        State::Mixed(rho) => gaussify_mixed(rho, exec).map(|h| h.map(State::Mixed)),
    }
}

/// Everything recorded about one Gaussification recursion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based recursion index.
    pub step: usize,
    /// Herald probability of this step.
    pub probability: f64,
    /// Trace distance between this iterate and the previous one.
    pub step_distance: f64,
    /// Trace distance to the iterate's best Gaussian fit (NaN if the fit
    /// fails, which only happens for runaway iterates).
    pub gaussian_distance: f64,
    /// Total mean photon number of the iterate.
    pub mean_photon: f64,
    /// Estimated truncation loss of the iterate.
    pub norm_deficit: f64,
}

/// Outcome of [`iterate_gaussification`].
#[derive(Debug, Clone)]
pub struct GaussificationRun {
    /// The last iterate (the converged state, or the partial state at the
    /// divergence/max-iteration stop).
    pub state: State,
    /// Per-step records, in order.
    pub trace: Vec<IterationRecord>,
    /// Successive iterates came within `tol` in trace distance.
    pub converged: bool,
    /// Truncation loss or photon growth crossed the runaway thresholds.
    pub diverged: bool,
}

/// Iterate [`gaussification_step`] from `initial` until successive iterates
/// are closer than `tol` in trace distance, `max_iters` is reached, or the
/// iteration runs away. Divergence (possible when the pair correlations are
/// too strong for a Gaussian limit to exist) is reported, not raised: the
/// run is flagged and the partial trace returned. The runaway thresholds are
/// a step deficit above 1e−3 or a total mean photon number beyond the
/// smaller mode cutoff (i.e. a per-mode mean past half the lattice).
pub fn iterate_gaussification(
    initial: &State,
    max_iters: usize,
    tol: f64,
) -> Result<GaussificationRun> {
    if initial.num_modes() != 2 {
        return Err(Error::NotTwoMode(initial.num_modes()));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter(
            "iteration budget must be at least 1".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "convergence tolerance must be positive, got {tol}"
        )));
    }
    let (mut current, _) = initial.clone().normalize()?;
    let mut trace = Vec::with_capacity(max_iters);
    let mut converged = false;
    let mut diverged = false;
    for step in 1..=max_iters {
        let heralded = gaussification_step(&current)?;
        let next = heralded.state;
        let step_distance = crate::measures::trace_distance(&next, &current)?;
        let gaussian_distance =
            crate::measures::gaussianity_residual(&next).unwrap_or(f64::NAN);
        let mean_photon = next.mean_photon_total()?;
        trace.push(IterationRecord {
            step,
            probability: heralded.probability,
            step_distance,
            gaussian_distance,
            mean_photon,
            norm_deficit: heralded.norm_deficit,
        });
        let min_cut = *next.cutoffs().iter().min().unwrap_or(&0) as f64;
        current = next;
        if heralded.norm_deficit > 1e-3 || mean_photon > min_cut {
            diverged = true;
            break;
        }
        if step_distance < tol {
            converged = true;
            break;
        }
    }
    Ok(GaussificationRun {
        state: current,
        trace,
        converged,
        diverged,
    })
}

// ---------------------------------------------------------------------------
// Generalized subtraction with a squeezed ancilla pair
// ---------------------------------------------------------------------------

/// Closed-form unnormalized pair amplitudes of the generalized subtraction:
/// with λ̃ = Tλ + (1−T)ν, ν̃ = Tν + (1−T)λ and c = T(1−T)(λ−ν)²,
///
/// a_n = √[(1−λ²)(1−ν²)] · [ ν̃² λ̃ⁿ + 2ν̃ c n λ̃^(n−1) + ½ c² n(n−1) λ̃^(n−2) ].
///
/// The squared sum over all n is the herald probability. At ν = 0 the
/// polynomial collapses to ∝ (n² + 3n + 2)λ̃ⁿ; at λ = ν the cross terms
/// vanish and the output is a plain two-mode squeezed vacuum shape.
pub fn generalized_subtraction_amplitudes(
    lambda: f64,
    nu: f64,
    transmittance: f64,
    len: usize,
) -> Result<Vec<f64>> {
    if !(lambda.abs() < 1.0) || !(nu.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "squeezing parameters must satisfy |lambda|, |nu| < 1, got {lambda}, {nu}"
        )));
    }
    check_tap_transmittance(transmittance)?;
    let t = transmittance;
    let lt = t * lambda + (1.0 - t) * nu;
    let nt = t * nu + (1.0 - t) * lambda;
    let cross = t * (1.0 - t) * (lambda - nu) * (lambda - nu);
    let pref = ((1.0 - lambda * lambda) * (1.0 - nu * nu)).sqrt();
    let mut amps = Vec::with_capacity(len);
    for n in 0..len {
        let nf = n as f64;
        let mut amp = nt * nt * lt.powi(n as i32);
        if n >= 1 {
            amp += 2.0 * nt * cross * nf * lt.powi(n as i32 - 1);
        }
        if n >= 2 {
            amp += 0.5 * cross * cross * nf * (nf - 1.0) * lt.powi(n as i32 - 2);
        }
        amps.push(pref * amp);
    }
    Ok(amps)
}

/// Generalized subtraction: the signal TMSV(λ) on modes A,B interferes with
/// an ancilla TMSV(ν) on modes C,D through transmittance-T splitters on
/// (A,C) and (B,D), and the ancilla pair is heralded on |2,2⟩. Mode layout:
/// 0,1 = A,B; 2,3 = C,D. The ν = 0 point reproduces double two-photon
/// subtraction up to the detector bookkeeping; dialing ν interpolates the
/// output polynomial. Output matches
/// [`generalized_subtraction_amplitudes`].
pub fn run_generalized_subtraction(
    lambda: f64,
    nu: f64,
    transmittance: f64,
    cutoff: usize,
) -> Result<HeraldedResult<FockState>> {
    if !(lambda.abs() < 1.0) || !(nu.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "squeezing parameters must satisfy |lambda|, |nu| < 1, got {lambda}, {nu}"
        )));
    }
    check_tap_transmittance(transmittance)?;
    if cutoff < 2 {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be at least 2 to resolve the two-photon heralds, got {cutoff}"
        )));
    }
    let theta = transmittance.sqrt().acos();
    let ab = state_prep::make_tmsv_complex(C64::new(lambda, 0.0), cutoff)?;
    let cd = state_prep::make_tmsv_complex(C64::new(nu, 0.0), cutoff)?;
    let input_deficit = ab.norm_deficit() + cd.norm_deficit();
    let psi = ab.tensor(&cd);
    let psi = psi.apply_beam_splitter(0, 2, theta)?;
    let psi = psi.apply_beam_splitter(1, 3, theta)?;
    let (psi, _) = psi.project_mode_raw(3, 2)?;
    let (psi, _) = psi.project_mode_raw(2, 2)?;
    let probability = psi.norm_sq();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    let (state, _) = psi.normalize()?;
    Ok(HeraldedResult {
        state,
        probability,
        norm_deficit: input_deficit,
        herald_pattern: vec![(2, 2), (3, 2)],
    })
}

// ---------------------------------------------------------------------------
// M-copy interference
// ---------------------------------------------------------------------------

/// Single-photon transfer matrix of the M-port coupling ladder, in the
/// convention that entry (j, k) is the amplitude for a photon entering port
/// j to leave through port k (ports 0..M, port 0 being the accumulator the
/// taps feed). The ladder applies splitters of transmittance
/// T_j = (M−j)/(M−j+1) between port j and port 0, for j = 1..M−1; its first
/// row is uniformly 1/√M, and the matrix is orthogonal. Only the first row
/// is load-bearing for the scheme — the remaining rows are one particular
/// completion.
pub fn multicopy_ladder_matrix(copies: usize) -> Result<DMatrix<f64>> {
    if copies < 2 {
        return Err(Error::InvalidParameter(format!(
            "copy count must be at least 2, got {copies}"
        )));
    }
    let m = copies;
    let cutoffs = vec![1usize; m];
    let mut v = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let mut ns = vec![0usize; m];
        ns[j] = 1;
        let mut psi = FockState::basis(&ns, &cutoffs)?;
        for s in 1..m {
            let tj = (m - s) as f64 / (m - s + 1) as f64;
            psi = psi.apply_beam_splitter(s, 0, tj.sqrt().acos())?;
        }
        for k in 0..m {
            let mut bra = vec![0usize; m];
            bra[k] = 1;
            v[(j, k)] = psi.amplitude(&bra).re;
        }
    }
    Ok(v)
}

/// The M-copy scheme. Full circuit layout: 0,1 = signal pair A,B;
/// 2,3 = tap ancillas C1,D1 (vacuum in); 2j+2, 2j+3 = injected pair
/// Cj+1,Dj+1 for j = 1..M−1, each prepared in TMSV(ν) with ν = κλ(1−T).
/// Transmittance-T taps couple (A,C1) and (B,D1); the coupling ladder
/// of [`multicopy_ladder_matrix`] runs over the C block and the D block;
/// every ancilla is heralded on |1⟩ (2M detectors). The simulation is
/// staged — each injected pair is attached, coupled through its ladder
/// splitter, and heralded immediately, which commutes with the later
/// splitters and keeps at most six live modes. M = 2 is exactly the
/// simplified two-copy scheme; at κ² = 1 the output amplitudes follow
/// (1 + μ n̂/M)-type polynomial profiles approaching TMSV(2μ), μ = Tλ, as
/// M grows.
pub fn run_multicopy(
    params: &ProtocolParams,
    copies: usize,
    cutoff: usize,
) -> Result<HeraldedResult<FockState>> {
    params.validate()?;
    if !params.is_pure() {
        return Err(Error::InvalidParameter(
            "the M-copy layout is defined for pure inputs (eta = 1)".into(),
        ));
    }
    if copies < 2 {
        return Err(Error::InvalidParameter(format!(
            "copy count must be at least 2, got {copies}"
        )));
    }
    if cutoff < 1 {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be at least 1 to carry the heralded photons, got {cutoff}"
        )));
    }
    let theta = params.theta();
    // Every accumulator port conserves photons between injections and the M
    // single-photon detections, so a surviving path carries k + Σ pⱼ = M
    // photons through the block (k from the tap, pⱼ from the injected
    // pairs).  Occupations above M and pair rungs above M are provably
    // unreachable: lattices of size M + 1 are exact for the retained
    // amplitudes and the herald mass, and the pair tails are excluded from
    // the deficit.
    let anc_cut = copies + 1;
    let pair_cut = cutoff.min(copies + 1);
    let ab = state_prep::make_tmsv(params.lambda, cutoff)?;
    let input_deficit = ab.norm_deficit();
    let mut psi = ab.tensor(&FockState::vacuum(&[anc_cut, anc_cut]));
    psi = psi.apply_beam_splitter(2, 0, theta)?;
    psi = psi.apply_beam_splitter(3, 1, theta)?;
    let mut herald_pattern = Vec::with_capacity(2 * copies);
    for j in 1..copies {
        let pair = state_prep::make_tmsv_complex(params.nu(), pair_cut)?;
        let tj = (copies - j) as f64 / (copies - j + 1) as f64;
        let theta_j = tj.sqrt().acos();
        psi = psi.tensor(&pair);
        psi = psi.apply_beam_splitter(4, 2, theta_j)?;
        psi = psi.apply_beam_splitter(5, 3, theta_j)?;
        let (next, _) = psi.project_mode_raw(5, 1)?;
        let (next, _) = next.project_mode_raw(4, 1)?;
        psi = next;
        herald_pattern.push((2 * j + 3, 1));
        herald_pattern.push((2 * j + 2, 1));
    }
    let (psi, _) = psi.project_mode_raw(3, 1)?;
    let (psi, _) = psi.project_mode_raw(2, 1)?;
    herald_pattern.push((3, 1));
    herald_pattern.push((2, 1));
    let probability = psi.norm_sq();
    if probability < DEFAULT_HERALD_FLOOR {
        return Err(Error::HeraldImpossible {
            probability,
            floor: DEFAULT_HERALD_FLOOR,
        });
    }
    let (state, _) = psi.normalize()?;
    Ok(HeraldedResult {
        state,
        probability,
        norm_deficit: input_deficit,
        herald_pattern,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use crate::measures;
    use crate::state_prep::{make_input, make_sigma, make_tmsv, p_sigma};

    fn params(lambda: f64, t: f64) -> ProtocolParams {
        ProtocolParams::new(lambda, t).unwrap()
    }

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got}, want {want} (|Δ| = {:.3e} > {tol:.1e})",
            (got - want).abs()
        );
    }

    /// Normalized |n,n⟩ ladder amplitudes with the global phase fixed so the
    /// first nonzero entry is positive real.
    fn pair_ladder(state: &FockState) -> Vec<f64> {
        let c = state.cutoffs()[0].min(state.cutoffs()[1]);
        let mut amps: Vec<C64> = (0..=c).map(|n| state.amplitude(&[n, n])).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 0.0, "pair ladder must carry weight");
        let phase = amps
            .iter()
            .find(|a| a.norm() > 1e-12)
            .map(|a| a / a.norm())
            .unwrap_or_else(|| C64::new(1.0, 0.0));
        for a in amps.iter_mut() {
            *a /= phase * norm;
        }
        amps.iter()
            .map(|a| {
                assert!(a.im.abs() < 1e-10, "ladder amplitudes must be real, got {a}");
                a.re
            })
            .collect()
    }

    fn normalized(v: &[f64]) -> Vec<f64> {
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    /// Compare two ladder profiles on the window of rungs the truncated
    /// circuit resolves completely, renormalizing both slices over that
    /// window so tail clipping cannot leak into the comparison.
    fn assert_ladder_window(got: &[f64], want: &[f64], upto: usize, tol: f64, label: &str) {
        let g = normalized(&got[..=upto]);
        let w = normalized(&want[..=upto]);
        for (n, (x, y)) in g.iter().zip(&w).enumerate() {
            assert!(
                (x - y).abs() <= tol,
                "{label}: rung {n}: {x} vs {y} (|Δ| = {:.3e} > {tol:.1e})",
                (x - y).abs()
            );
        }
    }

    #[test]
    fn subtraction_circuit_and_operator_agree() {
        let psi = State::Pure(make_tmsv(0.4, 10).unwrap());
        for m in 0..3usize {
            let a = photon_subtract(&psi, 0, 0.8, m).unwrap();
            let b = photon_subtract_operator(&psi, 0, 0.8, m).unwrap();
            assert_close(
                a.probability,
                b.probability,
                1e-13,
                &format!("herald probability, m = {m}"),
            );
            let (pa, pb) = match (&a.state, &b.state) {
                (State::Pure(x), State::Pure(y)) => (x, y),
                _ => panic!("pure in, pure out"),
            };
            for n in 0..=10usize {
                for k in 0..=10usize {
                    let d = (pa.amplitude(&[n, k]) - pb.amplitude(&[n, k])).norm();
                    assert!(d < 1e-10, "m = {m}, amplitude ({n},{k}) differs by {d}");
                }
            }
        }
        // Mixed representation: same agreement through the density path.
        let rho = make_input(&params(0.4, 0.8).with_eta(0.8).unwrap(), 6).unwrap();
        let a = photon_subtract(&rho, 1, 0.8, 1).unwrap();
        let b = photon_subtract_operator(&rho, 1, 0.8, 1).unwrap();
        assert_close(a.probability, b.probability, 1e-13, "mixed herald probability");
        let (da, db) = match (&a.state, &b.state) {
            (State::Mixed(x), State::Mixed(y)) => (x, y),
            _ => panic!("mixed in, mixed out"),
        };
        let diff = (da.matrix() - db.matrix()).norm();
        assert!(diff < 1e-10, "mixed subtraction paths differ by {diff}");
    }

    #[test]
    fn single_subtraction_tilts_the_ladder() {
        let psi = State::Pure(make_tmsv(0.4, 14).unwrap());
        let one = photon_subtract(&psi, 0, 0.8, 1).unwrap();
        let two = photon_subtract(&one.state, 1, 0.8, 1).unwrap();
        let out = match &two.state {
            State::Pure(p) => p,
            _ => panic!("pure chain"),
        };
        let got = pair_ladder(out);
        let want: Vec<f64> = (0..=14)
            .map(|n| (n as f64 + 1.0) * 0.32f64.powi(n))
            .collect();
        // The subtractions pull rung 15 down to 14, so the top rung of the
        // truncated lattice is the one incomplete entry.
        assert_ladder_window(&got, &want, 13, 1e-12, "(n+1)(Tλ)ⁿ profile");
        // Chained herald mass equals the squared norm of K₁⊗K₁ |in⟩, whose
        // amplitudes are √(1−λ²) λ(1−T) (n+1)(Tλ)ⁿ; the circuit holds the
        // rungs below the cutoff exactly and nothing above it.
        let profile: f64 = (0..=13)
            .map(|n| {
                let amp = (1.0 - 0.16f64).sqrt() * 0.4 * (1.0 - 0.8) * (n as f64 + 1.0)
                    * 0.32f64.powi(n);
                amp * amp
            })
            .sum();
        assert_close(
            one.probability * two.probability,
            profile,
            1e-12,
            "chained herald mass",
        );
    }

    #[test]
    fn zero_photon_tap_is_pure_attenuation() {
        let psi = make_tmsv(0.5, 8).unwrap();
        let tapped = photon_subtract(&State::Pure(psi.clone()), 0, 0.7, 0).unwrap();
        let direct = psi.apply_exponential_number(0, 0.7).unwrap();
        // Herald probabilities are reported relative to the normalized input,
        // so rescale the direct mass by the truncated input norm.
        let p_direct = direct.norm_sq() / psi.norm_sq();
        assert_close(tapped.probability, p_direct, 1e-13, "herald mass of m = 0");
        let (direct, _) = direct.normalize().unwrap();
        let out = match &tapped.state {
            State::Pure(p) => p,
            _ => panic!("pure"),
        };
        for n in 0..=8usize {
            let d = (out.amplitude(&[n, n]) - direct.amplitude(&[n, n])).norm();
            assert!(d < 1e-12, "m = 0 tap vs T^(n̂/2) at n = {n}: {d}");
        }
    }

    #[test]
    fn two_photon_subtraction_shifts_the_ladder() {
        let psi = State::Pure(make_tmsv(0.4, 12).unwrap());
        let sub = photon_subtract(&psi, 0, 0.8, 2).unwrap();
        let out = match &sub.state {
            State::Pure(p) => p,
            _ => panic!("pure"),
        };
        // K₂ on mode A alone sends |n+2, n+2⟩ → |n, n+2⟩ with weight
        // √((n+2)(n+1)) T^(n/2) λ^(n+2).
        let want = normalized(
            &(0..=10)
                .map(|n| {
                    let nf = n as f64;
                    ((nf + 2.0) * (nf + 1.0)).sqrt()
                        * 0.8f64.powf(nf / 2.0)
                        * 0.4f64.powi(n as i32 + 2)
                })
                .collect::<Vec<_>>(),
        );
        let got: Vec<f64> = (0..=10).map(|n| out.amplitude(&[n, n + 2]).re).collect();
        let norm: f64 = got.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (n, (g, w)) in got.iter().zip(&want).enumerate() {
            assert_close(g / norm, *w, 1e-10, &format!("asymmetric K₂ profile at n = {n}"));
        }
    }

    #[test]
    fn subtracting_from_vacuum_is_impossible() {
        let vac = State::Pure(FockState::vacuum(&[4, 4]));
        let err = photon_subtract(&vac, 0, 0.8, 1).unwrap_err();
        assert!(
            matches!(err, Error::HeraldImpossible { .. }),
            "vacuum cannot lose a photon, got {err:?}"
        );
    }

    #[test]
    fn explicit_two_copy_matches_polynomial_profile() {
        let run = run_original_two_copy(&params(0.4, 0.8), 14).unwrap();
        let got = pair_ladder(&run.state);
        let want: Vec<f64> = (0..=14)
            .map(|n| {
                let nf = n as f64;
                (nf * nf + 3.0 * nf + 4.0) * 0.32f64.powi(n as i32)
            })
            .collect();
        assert_ladder_window(&got, &want, 13, 1e-12, "(n²+3n+4)μⁿ profile");
        let p_want = analytics::p_success_original(0.4, 0.8).unwrap();
        assert!(
            (run.probability - p_want).abs() / p_want < 1e-8,
            "success probability {} vs closed form {p_want}",
            run.probability
        );
    }

    #[test]
    fn explicit_two_copy_needs_photons() {
        let err = run_original_two_copy(&params(0.0, 0.8), 8).unwrap_err();
        assert!(
            matches!(err, Error::HeraldImpossible { .. }),
            "λ = 0 leaves nothing to subtract, got {err:?}"
        );
    }

    #[test]
    fn simplified_scheme_is_equivalent_with_boosted_rate() {
        // Larger λ keeps more mass near the cutoff, so the lattice grows with
        // λ to push both circuits' truncation error below the tolerances.
        for &(lambda, cutoff) in &[(0.2, 10usize), (0.4, 16), (0.6, 24)] {
            for &t in &[0.6, 0.8, 0.9] {
                let p = params(lambda, t);
                let a = run_original_two_copy(&p, cutoff).unwrap();
                let e = run_simplified_two_copy(&p, cutoff).unwrap();
                let psi_e = match &e.state {
                    State::Pure(x) => x,
                    _ => panic!("pure params stay pure"),
                };
                let la = pair_ladder(&a.state);
                let le = pair_ladder(psi_e);
                assert_ladder_window(
                    &la,
                    &le,
                    cutoff - 2,
                    1e-8,
                    &format!("(λ={lambda}, T={t}) output ladder"),
                );
                let ratio = e.probability / a.probability;
                let boost = 1.0 / p_sigma(&p);
                assert!(
                    (ratio - boost).abs() / boost < 1e-8,
                    "(λ={lambda}, T={t}) rate boost {ratio} vs 1/P_σ {boost}"
                );
            }
        }
    }

    #[test]
    fn simplified_scheme_with_vacuum_resource() {
        let p = params(0.4, 0.8).with_kappa2(0.0).unwrap();
        let run = run_simplified_two_copy(&p, 14).unwrap();
        let psi = match &run.state {
            State::Pure(x) => x,
            _ => panic!("pure"),
        };
        let got = pair_ladder(psi);
        let want: Vec<f64> = (0..=14)
            .map(|n| {
                let nf = n as f64;
                (nf + 1.0) * (nf + 2.0) * 0.32f64.powi(n as i32)
            })
            .collect();
        // The two-photon route feeds rung n from rung n + 2, so the top two
        // rungs of the lattice are incomplete.
        assert_ladder_window(&got, &want, 12, 1e-12, "(n+1)(n+2)μⁿ profile");
    }

    #[test]
    fn simplified_scheme_dials_variance_with_kappa() {
        let p = params(0.4, 0.8).with_kappa2(0.3319).unwrap();
        let run = run_simplified_two_copy(&p, 18).unwrap();
        let v = measures::squeezing_variance(&run.state).unwrap();
        let want = analytics::v_dist(0.32, 0.3319).unwrap();
        assert_close(v, want, 1e-9, "dialed squeezing variance");
        assert_close(v, 0.25501, 5e-6, "quoted variance value");
    }

    #[test]
    fn mixed_circuit_matches_kraus_sum() {
        for &lambda in &[0.2, 0.4] {
            for &eta in &[0.7, 0.9] {
                for &t in &[0.6, 0.8] {
                    let p = params(lambda, t).with_eta(eta).unwrap();
                    let cutoff = 6;
                    let run = run_simplified_two_copy(&p, cutoff).unwrap();
                    let rho = make_input(&p, cutoff).unwrap().to_density();
                    let (sigma, _) = make_sigma(&p, cutoff).unwrap();
                    let formula = rho_dist_formula(&rho, &sigma.to_density(), t).unwrap();
                    let p_formula = formula.trace();
                    assert!(
                        (run.probability - p_formula).abs() / p_formula < 1e-9,
                        "(λ={lambda}, η={eta}, T={t}) probability {} vs trace {p_formula}",
                        run.probability
                    );
                    let (formula, _) = formula.normalize().unwrap();
                    let circuit = match &run.state {
                        State::Mixed(d) => d,
                        _ => panic!("lossy params give a mixed output"),
                    };
                    let diff = (circuit.matrix() - formula.matrix()).norm();
                    assert!(
                        diff < 1e-8,
                        "(λ={lambda}, η={eta}, T={t}) circuit vs Kraus sum: {diff}"
                    );
                }
            }
        }
    }

    #[test]
    fn mixed_path_collapses_to_pure_path_without_loss() {
        let p = params(0.4, 0.8);
        let cutoff = 8;
        let pure = run_simplified_two_copy(&p, cutoff).unwrap();
        let mixed = simplified_mixed(&p, cutoff, ExecMode::Sequential).unwrap();
        assert_close(
            pure.probability,
            mixed.probability,
            1e-12,
            "η = 1 probability across representations",
        );
        let psi = match &pure.state {
            State::Pure(x) => x,
            _ => panic!("pure"),
        };
        let diff = (psi.to_density().matrix() - mixed.state.matrix()).norm();
        assert!(diff < 1e-10, "density of pure output vs mixed path: {diff}");
    }

    #[test]
    fn kraus_sum_with_vacuum_resource_is_double_two_photon_subtraction() {
        let rho = make_tmsv(0.4, 8).unwrap().to_density();
        let sigma = FockState::vacuum(&[2, 2]).to_density();
        let formula = rho_dist_formula(&rho, &sigma, 0.8).unwrap();
        let k2a = kraus_matrix(0.8, 2, 9);
        let direct = rho
            .sandwich_one_mode(0, &k2a, &k2a)
            .unwrap()
            .sandwich_one_mode(1, &k2a, &k2a)
            .unwrap();
        let diff = (formula.matrix() - direct.matrix() * C64::new(0.25, 0.0)).norm();
        assert!(diff < 1e-12, "vacuum resource keeps only the K₂⊗K₂ term: {diff}");
    }

    #[test]
    fn gaussification_fixes_two_mode_squeezed_vacuum() {
        for &lam in &[0.1, 0.25, 0.4, 0.55, 0.7] {
            let tmsv = make_tmsv(lam, 14).unwrap();
            let step = gaussification_step(&State::Pure(tmsv.clone())).unwrap();
            let out = match &step.state {
                State::Pure(p) => p,
                _ => panic!("pure"),
            };
            // The step renormalizes its output, so compare against the
            // normalized truncated ladder; on the lattice the fixed point is
            // then exact, not merely approximate.
            let (want, _) = tmsv.normalize().unwrap();
            for n in 0..=14usize {
                let d = (out.amplitude(&[n, n]) - want.amplitude(&[n, n])).norm();
                assert!(d < 1e-12, "λ = {lam}: fixed point violated at n = {n} by {d}");
            }
        }
        let vac = gaussification_step(&State::Pure(FockState::vacuum(&[6, 6]))).unwrap();
        assert_close(vac.probability, 1.0, 1e-12, "vacuum heralds with certainty");
    }

    #[test]
    fn gaussification_mixed_path_matches_pure_path() {
        let input = make_tmsv(0.4, 8).unwrap();
        let sub = photon_subtract(&State::Pure(input), 0, 0.8, 1).unwrap();
        let sub = photon_subtract(&sub.state, 1, 0.8, 1).unwrap();
        let psi = match &sub.state {
            State::Pure(p) => p.clone(),
            _ => panic!("pure"),
        };
        let pure_step = gaussification_step(&State::Pure(psi.clone())).unwrap();
        let mixed_step =
            gaussification_step_with(&State::Mixed(psi.to_density()), ExecMode::Sequential)
                .unwrap();
        assert_close(
            pure_step.probability,
            mixed_step.probability,
            1e-12,
            "herald probability across representations",
        );
        let pure_out = match &pure_step.state {
            State::Pure(p) => p.to_density(),
            _ => panic!("pure"),
        };
        let mixed_out = match &mixed_step.state {
            State::Mixed(d) => d.clone(),
            _ => panic!("mixed"),
        };
        let diff = (pure_out.matrix() - mixed_out.matrix()).norm();
        assert!(diff < 1e-10, "fused contraction vs amplitude path: {diff}");
    }

    #[test]
    fn iteration_converges_to_amplified_squeezing() {
        let sub = photon_subtract(&State::Pure(make_tmsv(0.4, 20).unwrap()), 0, 0.8, 1).unwrap();
        let sub = photon_subtract(&sub.state, 1, 0.8, 1).unwrap();
        // Successive iterates approach the limit geometrically with ratio
        // 1/2, so reaching a 1e-8 step distance takes about 23 rounds.
        let run = iterate_gaussification(&sub.state, 30, 1e-8).unwrap();
        assert!(run.converged, "expected convergence within 30 steps");
        assert!(!run.diverged, "convergent run must not be flagged");
        let f = measures::fidelity_with_tmsv(&run.state, 2.0 * 0.8 * 0.4).unwrap();
        assert!(f > 1.0 - 1e-6, "fidelity with doubled squeezing: {f}");
        // The residual shrinks strictly until it reaches the numerical floor
        // of the Gaussian fit.
        for pair in run.trace.windows(2).skip(1) {
            if pair[0].gaussian_distance <= 1e-6 {
                break;
            }
            assert!(
                pair[1].gaussian_distance < pair[0].gaussian_distance,
                "Gaussian residual must shrink: step {} {} → step {} {}",
                pair[0].step,
                pair[0].gaussian_distance,
                pair[1].step,
                pair[1].gaussian_distance
            );
        }
    }

    #[test]
    fn iteration_flags_runaway_squeezing() {
        let sub = photon_subtract(&State::Pure(make_tmsv(0.7, 10).unwrap()), 0, 0.8, 1).unwrap();
        let sub = photon_subtract(&sub.state, 1, 0.8, 1).unwrap();
        let run = iterate_gaussification(&sub.state, 12, 1e-8).unwrap();
        assert!(run.diverged, "doubling 2Tλ ≥ 1 must be flagged as runaway");
        assert!(!run.converged, "runaway is not convergence");
        assert!(!run.trace.is_empty(), "partial trace must be returned");
    }

    #[test]
    fn iteration_reaches_lossy_asymptote() {
        let p = params(0.4, 0.8).with_eta(0.8).unwrap();
        let rho = make_input(&p, 12).unwrap();
        let sub = photon_subtract(&rho, 0, 0.8, 1).unwrap();
        let sub = photon_subtract(&sub.state, 1, 0.8, 1).unwrap();
        let run = iterate_gaussification(&sub.state, 40, 1e-9).unwrap();
        assert!(run.converged, "lossy iteration should settle");
        let v = measures::squeezing_variance(&run.state).unwrap();
        let want = analytics::mixed_metrics(0.4, 0.8, 0.8).unwrap().v_inf;
        assert_close(v, want, 1e-4, "asymptotic mixed squeezing variance");
    }

    #[test]
    fn generalized_subtraction_matches_closed_form() {
        let run = run_generalized_subtraction(0.4, 0.1, 0.8, 16).unwrap();
        let closed = generalized_subtraction_amplitudes(0.4, 0.1, 0.8, 17).unwrap();
        let got = pair_ladder(&run.state);
        assert_ladder_window(&got, &closed, 14, 1e-10, "generalized ladder");
        let mass: f64 = closed.iter().map(|a| a * a).sum();
        assert!(
            (run.probability - mass).abs() / mass < 1e-9,
            "herald probability {} vs closed-form mass {mass}",
            run.probability
        );
    }

    #[test]
    fn generalized_subtraction_limiting_shapes() {
        // ν = 0: the polynomial (n² + 3n + 2) pattern — linear coefficient 3,
        // constant 2.
        let amps = generalized_subtraction_amplitudes(0.4, 0.0, 0.8, 10).unwrap();
        let lt: f64 = 0.8 * 0.4;
        let base = amps[0] / 2.0;
        for (n, a) in amps.iter().enumerate() {
            let nf = n as f64;
            let want = base * (nf * nf + 3.0 * nf + 2.0) * lt.powi(n as i32);
            assert!(
                (a - want).abs() < 1e-12 * want.abs().max(1.0),
                "ν = 0 polynomial at n = {n}: {a} vs {want}"
            );
        }
        // λ = ν: cross terms vanish, pure TMSV shape.
        let flat = generalized_subtraction_amplitudes(0.3, 0.3, 0.8, 10).unwrap();
        for (n, a) in flat.iter().enumerate() {
            let want = flat[0] * 0.3f64.powi(n as i32);
            assert!(
                (a - want).abs() < 1e-12,
                "λ = ν TMSV shape at n = {n}: {a} vs {want}"
            );
        }
    }

    #[test]
    fn multicopy_ladder_splits_uniformly() {
        for &m in &[2usize, 3, 5, 8] {
            let v = multicopy_ladder_matrix(m).unwrap();
            let uniform = 1.0 / (m as f64).sqrt();
            for k in 0..m {
                assert_close(
                    v[(0, k)],
                    uniform,
                    1e-12,
                    &format!("M = {m}: accumulator row entry {k}"),
                );
            }
            let identity = v.transpose() * &v;
            for r in 0..m {
                for c in 0..m {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (identity[(r, c)] - want).abs() < 1e-12,
                        "M = {m}: VᵀV at ({r},{c}) = {}",
                        identity[(r, c)]
                    );
                }
            }
        }
    }

    #[test]
    fn two_copies_reproduce_the_simplified_scheme() {
        for &k2 in &[1.0, 0.5] {
            let p = params(0.4, 0.8).with_kappa2(k2).unwrap();
            let multi = run_multicopy(&p, 2, 10).unwrap();
            let simple = run_simplified_two_copy(&p, 10).unwrap();
            let psi_s = match &simple.state {
                State::Pure(x) => x,
                _ => panic!("pure"),
            };
            assert!(
                (multi.probability - simple.probability).abs() / simple.probability < 1e-10,
                "κ² = {k2}: M = 2 probability {} vs two-copy {}",
                multi.probability,
                simple.probability
            );
            let lm = pair_ladder(&multi.state);
            let ls = pair_ladder(psi_s);
            assert_ladder_window(&lm, &ls, 8, 1e-12, &format!("κ² = {k2} output ladder"));
        }
    }

    #[test]
    fn multicopy_matches_closed_form() {
        for &m in &[2usize, 3] {
            let cutoff = 16;
            let run = run_multicopy(&params(0.4, 0.8), m, cutoff).unwrap();
            let closed = analytics::multicopy_amplitudes(0.4, 0.8, m, cutoff).unwrap();
            let got = pair_ladder(&run.state);
            // M taps can pull rung n + M down to rung n, so the top M rungs
            // of the lattice are incomplete.
            assert_ladder_window(&got, &closed, cutoff - m, 1e-10, &format!("M = {m} ladder"));
            let mass: f64 = closed.iter().map(|a| a * a).sum();
            assert!(
                (run.probability - mass).abs() / mass < 1e-8,
                "M = {m}: probability {} vs truncated closed-form mass {mass}",
                run.probability
            );
        }
    }

    #[test]
    fn heralded_outputs_keep_pair_correlation() {
        let checks: Vec<(&str, FockState)> = vec![
            (
                "explicit two-copy",
                run_original_two_copy(&params(0.4, 0.8), 8).unwrap().state,
            ),
            (
                "simplified",
                match run_simplified_two_copy(&params(0.4, 0.8), 8).unwrap().state {
                    State::Pure(p) => p,
                    _ => panic!("pure"),
                },
            ),
            (
                "generalized",
                run_generalized_subtraction(0.4, 0.1, 0.8, 8).unwrap().state,
            ),
            (
                "three-copy",
                run_multicopy(&params(0.4, 0.8), 3, 6).unwrap().state,
            ),
        ];
        for (name, state) in &checks {
            let c0 = state.cutoffs()[0];
            let c1 = state.cutoffs()[1];
            let mut worst = 0.0f64;
            for n in 0..=c0 {
                for k in 0..=c1 {
                    if n != k {
                        worst = worst.max(state.amplitude(&[n, k]).norm());
                    }
                }
            }
            assert!(
                worst < 1e-10,
                "{name}: off-ladder support {worst} breaks photon-number correlation"
            );
        }
    }
}
