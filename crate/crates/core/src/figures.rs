//! Data sets behind the headline plots: the distilled-state figures of merit
//! against the auxiliary gain κ² (pure and lossy), and the thermal-noise
//! decomposition of the resource state σ against the channel transmittance.
//!
//! Everything is returned as a small column-oriented table so front ends can
//! serialize it without caring which figure it is. Closed forms are used
//! wherever they exist; the lossy κ² sweep runs the full density-matrix
//! circuit and therefore also reports per-point herald probability and
//! truncation deficit.

use crate::analytics;
use crate::error::{Error, Result};
use crate::measures;
use crate::parallel::{self, ExecMode};
use crate::schemes;
use crate::state_prep::{self, ProtocolParams};

/// A labelled numeric table: column names, rows in grid order, and named
/// per-table constants (horizontal reference lines in the plots).
#[derive(Debug, Clone)]
pub struct FigureData {
    /// Which figure this table feeds ("fig3", "fig6", "fig7").
    pub name: String,
    /// Column labels, in row order.
    pub columns: Vec<String>,
    /// One row per grid point.
    pub rows: Vec<Vec<f64>>,
    /// Named scalars valid for the whole table.
    pub constants: Vec<(String, f64)>,
}

impl FigureData {
    /// The values of one named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// The value of one named constant.
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

/// Default κ² grid for the gain sweeps: 71 points over [−0.5, 3].
pub fn default_kappa2_grid() -> Vec<f64> {
    crate::scan::linspace(-0.5, 3.0, 71).expect("static grid is valid")
}

/// Distilled-state figures of merit against the auxiliary gain κ² for a pure
/// input (columns `kappa2`, `V_dist`, `E`, `F_max`, `omega_star`), plus the
/// flat reference levels `V_in`, `V_sub`, `V_inf`. All columns are closed
/// forms except the entropy, which is summed from the exact amplitude series.
pub fn fig3_data(lambda: f64, t: f64, kappa2: &[f64]) -> Result<FigureData> {
    if kappa2.is_empty() {
        return Err(Error::InvalidParameter("gain grid needs at least one point".into()));
    }
    let metrics = analytics::pure_metrics(lambda, t, 1.0)?;
    let mu = t * lambda;
    let series_len = analytics::suggested_series_length(mu).max(40);
    let mut rows = Vec::with_capacity(kappa2.len());
    for &k2 in kappa2 {
        let v = analytics::v_dist(mu, k2)?;
        let omega = analytics::omega_star(mu, k2)?;
        let f = analytics::fidelity_tmsv(mu, k2, omega)?;
        let (amps, _) = analytics::psi_out_prime(lambda, t, k2, series_len)?;
        let e = measures::entanglement_entropy(&crate::fock::State::Pure(
            state_prep::make_pair_state(&amps)?,
        ))?;
        rows.push(vec![k2, v, e, f, omega]);
    }
    Ok(FigureData {
        name: "fig3".into(),
        columns: ["kappa2", "V_dist", "E", "F_max", "omega_star"]
            .map(String::from)
            .to_vec(),
        rows,
        constants: vec![
            ("V_in".into(), metrics.v_in),
            ("V_sub".into(), metrics.v_sub),
            ("V_inf".into(), metrics.v_inf),
        ],
    })
}

/// Which scalar the σ-decomposition table sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig6Axis {
    /// Sweep the channel transmittance η at fixed (λ, T).
    Eta,
    /// Sweep the source squeezing λ at fixed (T, η).
    Lambda,
}

/// Thermal decomposition of the resource state σ along one axis (columns
/// `<axis>`, `squeeze`, `nbar`, `nbar_leading`, `nu_prime`, `nbar_prime`).
/// `base` fixes the scalars that are not swept; κ² is pinned to 1, where the
/// decomposition is defined.
pub fn fig6_data(base: &ProtocolParams, axis: Fig6Axis, grid: &[f64]) -> Result<FigureData> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut p = *base;
        p.kappa2 = 1.0;
        match axis {
            Fig6Axis::Eta => p.eta = x,
            Fig6Axis::Lambda => p.lambda = x,
        }
        p.validate()?;
        let td = state_prep::thermal_params(&p)?;
        rows.push(vec![x, td.squeeze, td.nbar, td.nbar_leading, td.nu_prime, td.nbar_prime]);
    }
    let axis_name = match axis {
        Fig6Axis::Eta => "eta",
        Fig6Axis::Lambda => "lambda",
    };
    Ok(FigureData {
        name: "fig6".into(),
        columns: [axis_name, "squeeze", "nbar", "nbar_leading", "nu_prime", "nbar_prime"]
            .map(String::from)
            .to_vec(),
        rows,
        constants: Vec::new(),
    })
}

/// Squeezing variance of the lossy distilled state against the gain κ²
/// (columns `kappa2`, `V`, `probability`, `norm_deficit`), with the flat
/// levels `V_in`, `V_sub`, `V_inf` from the lossy closed forms. The `V`
/// column runs the full density-operator circuit at the given lattice size;
/// grid points are evaluated in parallel under [`ExecMode::Parallel`].
pub fn fig7_data(
    lambda: f64,
    eta: f64,
    t: f64,
    kappa2: &[f64],
    cutoff: usize,
    exec: ExecMode,
) -> Result<FigureData> {
    if kappa2.is_empty() {
        return Err(Error::InvalidParameter("gain grid needs at least one point".into()));
    }
    let metrics = analytics::mixed_metrics(lambda, eta, t)?;
    let evaluated: Vec<Result<Vec<f64>>> = parallel::indexed_map(exec, kappa2.len(), |k| {
        let p = ProtocolParams::new(lambda, t)?.with_eta(eta)?.with_kappa2(kappa2[k])?;
        let run = schemes::run_simplified_two_copy(&p, cutoff)?;
        let v = measures::squeezing_variance(&run.state)?;
        Ok(vec![kappa2[k], v, run.probability, run.norm_deficit])
    });
    let mut rows = Vec::with_capacity(kappa2.len());
    for r in evaluated {
        rows.push(r?);
    }
    Ok(FigureData {
        name: "fig7".into(),
        columns: ["kappa2", "V", "probability", "norm_deficit"].map(String::from).to_vec(),
        rows,
        constants: vec![
            ("V_in".into(), metrics.v_in),
            ("V_sub".into(), metrics.v_sub),
            ("V_inf".into(), metrics.v_inf),
            ("loss_floor".into(), metrics.bound),
        ],
    })
}
