//! Parameter scans: one protocol scalar swept over a grid, every point
//! evaluated through the full circuit plus the matching closed forms.
//!
//! Grid points are independent circuit runs, so they are evaluated
//! data-parallel by default ([`ExecMode::Parallel`]) and assembled back in
//! grid order; [`ExecMode::Sequential`] runs the identical code on one
//! thread. Per-point arithmetic never depends on the execution mode, so the
//! two modes produce bit-identical records — a property the benchmarks and
//! tests rely on.

use crate::analytics;
use crate::error::{Error, Result};
use crate::measures;
use crate::parallel::{self, ExecMode};
use crate::schemes;
use crate::state_prep::ProtocolParams;

/// Which protocol scalar a scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// Source squeezing λ ∈ [0, 1).
    Lambda,
    /// Tap transmittance T ∈ (0, 1].
    Transmittance,
    /// Auxiliary gain κ² (any finite real, negative allowed).
    Kappa2,
    /// Channel transmittance η ∈ (0, 1].
    Eta,
    /// Copy count M ≥ 2 (grid values must be integral).
    Copies,
}

impl ScanAxis {
    /// Column/flag name of the axis.
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Lambda => "lambda",
            ScanAxis::Transmittance => "T",
            ScanAxis::Kappa2 => "kappa2",
            ScanAxis::Eta => "eta",
            ScanAxis::Copies => "M",
        }
    }

    /// Parse a user-facing axis name (as used by CLI flags).
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "lambda" => Ok(ScanAxis::Lambda),
            "T" | "t" | "transmittance" => Ok(ScanAxis::Transmittance),
            "kappa2" => Ok(ScanAxis::Kappa2),
            "eta" => Ok(ScanAxis::Eta),
            "M" | "m" | "copies" => Ok(ScanAxis::Copies),
            other => Err(Error::InvalidParameter(format!(
                "unknown scan axis {other:?}; expected lambda, T, kappa2, eta, or M"
            ))),
        }
    }
}

/// One evaluated grid point. Circuit-derived columns always carry the run's
/// truncation deficit; closed-form columns are NaN where no closed form
/// applies (lossy inputs away from the explicitly solved cases).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    /// The swept axis value.
    pub value: f64,
    /// Squeezing variance of the heralded output (circuit).
    pub variance: f64,
    /// Closed-form variance at the same point, NaN if none applies.
    pub variance_closed: f64,
    /// Reduced-state von Neumann entropy of the output (circuit).
    pub entropy: f64,
    /// Fidelity of the output with the reference squeezed vacuum at `omega`.
    pub fidelity: f64,
    /// Reference squeezing: the fidelity-maximizing ω* for two-copy runs, the
    /// asymptotic 2Tλ for copy-count sweeps.
    pub omega: f64,
    /// Herald probability of the run.
    pub probability: f64,
    /// Truncation deficit of the run.
    pub norm_deficit: f64,
}

/// A completed sweep: the axis, the lattice size used, and one record per
/// grid value, in grid order.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub axis: ScanAxis,
    pub cutoff: usize,
    pub records: Vec<ScanRecord>,
}

/// `count` evenly spaced values from `start` to `stop` inclusive. A single
/// point degenerates to `[start]`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid endpoints must be finite, got {start}..{stop}"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

fn with_axis(base: &ProtocolParams, axis: ScanAxis, value: f64) -> Result<ProtocolParams> {
    let mut p = *base;
    match axis {
        ScanAxis::Lambda => p.lambda = value,
        ScanAxis::Transmittance => p.transmittance = value,
        ScanAxis::Kappa2 => p.kappa2 = value,
        ScanAxis::Eta => p.eta = value,
        ScanAxis::Copies => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(Error::InvalidParameter(format!(
                    "copy-count grid values must be integers ≥ 2, got {value}"
                )));
            }
            p.copies = value as usize;
        }
    }
    p.validate()?;
    Ok(p)
}

fn evaluate_point(
    base: &ProtocolParams,
    axis: ScanAxis,
    value: f64,
    cutoff: usize,
) -> Result<ScanRecord> {
    let p = with_axis(base, axis, value)?;
    if axis == ScanAxis::Copies {
        let run = schemes::run_multicopy(&p, p.copies, cutoff)?;
        let state = crate::fock::State::Pure(run.state);
        let omega = p.lambda_distilled();
        let closed = analytics::multicopy_amplitudes(
            p.lambda,
            p.transmittance,
            p.copies,
            3 * cutoff + 20,
        )?;
        let closed_state =
            crate::fock::State::Pure(crate::state_prep::make_pair_state(&closed)?);
        return Ok(ScanRecord {
            value,
            variance: measures::squeezing_variance(&state)?,
            variance_closed: measures::squeezing_variance(&closed_state)?,
            entropy: measures::entanglement_entropy(&state)?,
            fidelity: measures::fidelity_with_tmsv(&state, omega)?,
            omega,
            probability: run.probability,
            norm_deficit: run.norm_deficit,
        });
    }
    let run = schemes::run_simplified_two_copy(&p, cutoff)?;
    let variance = measures::squeezing_variance(&run.state)?;
    let entropy = measures::entanglement_entropy(&run.state)?;
    let omega = analytics::omega_star(p.mu(), p.kappa2)?;
    let fidelity = measures::fidelity_with_tmsv(&run.state, omega)?;
    let variance_closed = if p.is_pure() {
        analytics::v_dist(p.mu(), p.kappa2)?
    } else {
        f64::NAN
    };
    Ok(ScanRecord {
        value,
        variance,
        variance_closed,
        entropy,
        fidelity,
        omega,
        probability: run.probability,
        norm_deficit: run.norm_deficit,
    })
}

/// Evaluate the sweep `axis = values[k]` around `base`, one full heralded
/// circuit per point plus closed forms, in grid order. Any invalid point
/// fails the whole scan (grids are meant to be physical end to end).
pub fn evaluate_grid(
    base: &ProtocolParams,
    axis: ScanAxis,
    values: &[f64],
    cutoff: usize,
    exec: ExecMode,
) -> Result<ScanResult> {
    base.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    let evaluated: Vec<Result<ScanRecord>> = parallel::indexed_map(exec, values.len(), |k| {
        evaluate_point(base, axis, values[k], cutoff)
    });
    let mut records = Vec::with_capacity(values.len());
    for r in evaluated {
        records.push(r?);
    }
    Ok(ScanResult { axis, cutoff, records })
}
