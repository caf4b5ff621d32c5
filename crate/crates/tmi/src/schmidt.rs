//! Singular-value decomposition of the conversion block, conversion
//! efficiency of arbitrary input shapes, and the selectivity figure of
//! merit S = τ₁²·(τ₁²/Στ_n²) with its efficiency trade-off.

use ndarray::Array1;
use ndarray_linalg::SVD;
use num_complex::Complex64 as C64;

use crate::error::{Result, TmiError};
use crate::green::{assemble, BasisSpec, GreenFunction};
use crate::grid::{inner_product, Band, Envelope};
use crate::propagator::StageSpec;

/// Schmidt decomposition of the register-from-signal block.
#[derive(Clone, Debug)]
pub struct SchmidtData {
    /// Full singular-value spectrum, descending.
    pub singular_values: Vec<f64>,
    /// Leading `n_kept` input singular vectors (signal band), orthonormal.
    pub input_modes: Vec<Envelope>,
    /// Leading `n_kept` output singular vectors (register band), orthonormal.
    pub output_modes: Vec<Envelope>,
    pub n_kept: usize,
    /// Σ τ_n² over the discarded tail, for truncation monitoring.
    pub truncated_weight: f64,
}

/// Efficiency/discrimination summary for the leading Schmidt mode.
#[derive(Clone, Copy, Debug)]
pub struct SelectivityReport {
    /// CE of the best-matched input, τ₁².
    pub ce_target: f64,
    /// τ₁²/Σ τ_n².
    pub purity: f64,
    /// S = ce_target · purity.
    pub selectivity: f64,
}

/// One row of a strength sweep.
#[derive(Clone, Copy, Debug)]
pub struct TradeoffRow {
    pub gamma_tilde: f64,
    pub ce_target: f64,
    pub purity: f64,
    pub selectivity: f64,
}

pub fn schmidt_decompose(g: &GreenFunction, n_kept: usize) -> Result<SchmidtData> {
    let m = g.n_basis();
    if n_kept == 0 || n_kept > m {
        return Err(TmiError::InvalidParameter(format!(
            "n_kept must be in [1, {m}], got {n_kept}"
        )));
    }
    let (u, sv, vt) = g
        .g_rs
        .svd(true, true)
        .map_err(|e| TmiError::Linalg(format!("conversion-block SVD failed: {e}")))?;
    let u = u.expect("left vectors requested");
    let vt = vt.expect("right vectors requested");
    let singular_values: Vec<f64> = sv.to_vec();
    let truncated_weight: f64 = singular_values[n_kept..].iter().map(|t| t * t).sum();
    let mut input_modes = Vec::with_capacity(n_kept);
    let mut output_modes = Vec::with_capacity(n_kept);
    for n in 0..n_kept {
        let psi: Array1<C64> = vt.row(n).mapv(|v| v.conj());
        let phi: Array1<C64> = u.column(n).to_owned();
        input_modes.push(g.envelope_from_coefficients(&psi, Band::Signal, g.lambda_s_nm)?);
        output_modes.push(g.envelope_from_coefficients(&phi, Band::Register, g.lambda_r_nm)?);
    }
    Ok(SchmidtData {
        singular_values,
        input_modes,
        output_modes,
        n_kept,
        truncated_weight,
    })
}

/// CE of a normalized input: Σ_n τ_n²·|⟨ψ_n, x⟩|² over the kept modes.
pub fn ce_of_input(sd: &SchmidtData, signal_in: &Envelope) -> Result<f64> {
    let mut ce = 0.0;
    for (tau, psi) in sd.singular_values.iter().zip(&sd.input_modes) {
        ce += tau * tau * inner_product(psi, signal_in)?.norm_sqr();
    }
    Ok(ce)
}

pub fn selectivity(sd: &SchmidtData) -> Result<SelectivityReport> {
    let total: f64 = sd.singular_values.iter().map(|t| t * t).sum();
    if total <= 0.0 {
        return Err(TmiError::InvalidParameter(
            "all conversion singular values are zero".into(),
        ));
    }
    let ce_target = sd.singular_values[0].powi(2);
    let purity = ce_target / total;
    Ok(SelectivityReport {
        ce_target,
        purity,
        selectivity: ce_target * purity,
    })
}

/// Sweep pump strength: one decomposition per γ̃ on the template stage.
pub fn ce_selectivity_tradeoff(
    template: &StageSpec,
    lambda_s_nm: f64,
    basis: &BasisSpec,
    gamma_grid: &[f64],
    n_kept: usize,
) -> Result<Vec<TradeoffRow>> {
    if gamma_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TmiError::InvalidParameter(
            "gamma_grid must be strictly ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(gamma_grid.len());
    for &gamma_tilde in gamma_grid {
        let stage = template.with_effective_strength(gamma_tilde)?;
        let g = assemble(&stage, lambda_s_nm, basis)?;
        let sd = schmidt_decompose(&g, n_kept)?;
        let rep = selectivity(&sd)?;
        rows.push(TradeoffRow {
            gamma_tilde,
            ce_target: rep.ce_target,
            purity: rep.purity,
            selectivity: rep.selectivity,
        });
    }
    Ok(rows)
}
