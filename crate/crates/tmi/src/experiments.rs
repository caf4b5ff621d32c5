//! Scripted measurement procedures: shape-combination peak-CE matrix with
//! a single-pass baseline, weak-probe delay-scan cross-correlations and
//! the walk-off estimate, power-dependent skew of the mid-stage signal,
//! and the single- versus two-stage selectivity trade-off.

use crate::cascade::{net_phase, run_cascade, CascadeSpec, DelaySpec, InterstageOps};
use crate::error::{Result, TmiError};
use crate::green::BasisSpec;
use crate::grid::{Band, Envelope, TemporalGrid};
use crate::propagator::StageSpec;
use crate::schmidt::{ce_selectivity_tradeoff, schmidt_decompose, selectivity};
use crate::shapes::{make_shape_temporal, ShapeFamily, ShapeSpec};

/// A labeled numeric table plus the scalars derived from it.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub name: String,
    pub axes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Derived scalars (key, value), e.g. widths or maxima.
    pub summary: Vec<(String, f64)>,
}

impl ExperimentResult {
    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|&(_, v)| v)
    }
}

/// Shared physical configuration for one family of runs: the grid, the
/// medium, the band carriers, and the common bandwidth scale.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: TemporalGrid,
    pub length_mm: f64,
    pub beta_p: f64,
    pub beta_s: f64,
    pub beta_r: f64,
    pub n_z_steps: usize,
    pub delta_omega: f64,
    pub lambda_p_nm: f64,
    pub lambda_s_nm: f64,
}

impl Scenario {
    /// Walk-off parameter |β'_r − β'_s|·L/τ_p with τ_p = 1/Δω.
    pub fn zeta(&self) -> f64 {
        (self.beta_r - self.beta_s).abs() * self.length_mm * self.delta_omega
    }

    pub fn pump(&self, family: ShapeFamily) -> Result<Envelope> {
        make_shape_temporal(
            &ShapeSpec::new(family, self.delta_omega)?,
            self.grid,
            Band::Pump,
            self.lambda_p_nm,
        )
    }

    pub fn signal(&self, family: ShapeFamily) -> Result<Envelope> {
        make_shape_temporal(
            &ShapeSpec::new(family, self.delta_omega)?,
            self.grid,
            Band::Signal,
            self.lambda_s_nm,
        )
    }

    pub fn stage(&self, pump_family: ShapeFamily, gamma_tilde: f64) -> Result<StageSpec> {
        StageSpec::new(
            self.length_mm,
            self.beta_p,
            self.beta_s,
            self.beta_r,
            0.0,
            self.pump(pump_family)?,
            self.n_z_steps,
            0.0,
        )?
        .with_effective_strength(gamma_tilde)
    }

    /// Symmetric lossless cascade at per-stage strength γ̃.
    pub fn cascade(&self, pump_family: ShapeFamily, gamma_tilde: f64) -> Result<CascadeSpec> {
        CascadeSpec::symmetric(self.stage(pump_family, gamma_tilde)?, InterstageOps::default())
    }
}

const SHAPE_FAMILIES: [ShapeFamily; 3] = [ShapeFamily::Hg0, ShapeFamily::Hg1, ShapeFamily::Hg2];

/// Maximum of a possibly multi-lobed curve: coarse grid scan to bracket
/// the global peak, then golden-section refinement inside the bracket.
fn scan_max(
    lo: f64,
    hi: f64,
    coarse_steps: usize,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let h = (hi - lo) / coarse_steps as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=coarse_steps {
        let v = f(lo + i as f64 * h)?;
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + (best_i.saturating_sub(1)) as f64 * h;
    let b = (lo + (best_i + 1) as f64 * h).min(hi);
    golden_max(a, b, tol, f)
}

/// Golden-section maximum of a unimodal f over [lo, hi].
fn golden_max(
    lo: f64,
    hi: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    Ok((x, fx))
}

/// Bright-fringe peak CE for every pump/signal shape combination. Each
/// pump row is driven at the per-stage strength that maximizes its
/// matched-shape CE; the last column is the single-pass benchmark: the
/// theoretically predicted best-converting mode (leading input mode of
/// the first-order kernel) sent through one stage carrying the same
/// total pump energy (γ·√2).
pub fn peak_ce_matrix(scn: &Scenario, basis: &BasisSpec) -> Result<ExperimentResult> {
    use ndarray::Array1;
    use ndarray_linalg::SVD;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (pi, &pump_family) in SHAPE_FAMILIES.iter().enumerate() {
        let matched = scn.signal(pump_family)?;
        let (gamma_star, ce_star) = scan_max(0.2, 3.5, 22, 1e-4, |gt| {
            let spec = scn.cascade(pump_family, gt)?;
            Ok(run_cascade(&spec, &matched)?.ce)
        })?;
        let spec = scn.cascade(pump_family, gamma_star)?;
        let mut row = vec![pi as f64];
        for &signal_family in &SHAPE_FAMILIES {
            let s_in = scn.signal(signal_family)?;
            row.push(run_cascade(&spec, &s_in)?.ce);
        }
        // Single pass at doubled pump energy, driven with the predicted
        // best mode.
        let single = scn.stage(pump_family, gamma_star * 2.0_f64.sqrt())?;
        let kernel = crate::green::first_order_kernel(&single, basis)?;
        let (_, _, vt) = kernel
            .matrix
            .svd(false, true)
            .map_err(|e| TmiError::Linalg(format!("kernel SVD failed: {e}")))?;
        let vt = vt.expect("right vectors requested");
        let psi1: Array1<num_complex::Complex64> = vt.row(0).mapv(|v| v.conj());
        let psi_env = crate::green::envelope_from_basis(
            scn.grid,
            &kernel.basis,
            &psi1,
            Band::Signal,
            scn.lambda_s_nm,
        )?;
        row.push(crate::propagator::conversion_efficiency(&single, &psi_env)?);
        rows.push(row);
        summary.push((format!("gamma_star_p{pi}"), gamma_star));
        summary.push((format!("peak_ce_p{pi}"), ce_star));
    }
    Ok(ExperimentResult {
        name: "peak_ce_matrix".into(),
        axes: vec![
            "pump_index".into(),
            "ce_s0".into(),
            "ce_s1".into(),
            "ce_s2".into(),
            "single_pass_predicted_mode_ce".into(),
        ],
        rows,
        summary,
    })
}

/// Which mid-stage arm the scanned probe delay acts on (the other arm is
/// blocked).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanArm {
    S,
    R,
}

/// Stage-2-only CE for a blocked-arm, weak-probe delay scan at one delay
/// offset. The recorded axis is the arrival-time offset of the probed
/// pulse, i.e. minus the applied extra delay.
fn stage2_only_ce(
    scn: &Scenario,
    arm: ScanArm,
    gamma1_tilde: f64,
    gamma2_tilde: f64,
    extra_delay: f64,
    signal_in: &Envelope,
) -> Result<f64> {
    let stage1 = scn.stage(ShapeFamily::Hg0, gamma1_tilde)?;
    let stage2 = scn.stage(ShapeFamily::Hg0, gamma2_tilde)?;
    let mut ops = InterstageOps::default();
    match arm {
        ScanArm::S => {
            ops.transmission_r = 0.0;
            ops.delays = DelaySpec::Auto {
                extra_s: extra_delay,
                extra_r: 0.0,
            };
        }
        ScanArm::R => {
            ops.transmission_s = 0.0;
            ops.delays = DelaySpec::Auto {
                extra_s: 0.0,
                extra_r: extra_delay,
            };
        }
    }
    let spec = CascadeSpec::new(stage1, stage2, ops)?;
    let out = run_cascade(&spec, signal_in)?;
    // CE against the power entering stage 2 on the unblocked arm.
    Ok(match arm {
        ScanArm::S => {
            let mid = out.signal_mid.squared_norm();
            if mid <= 0.0 {
                return Err(TmiError::InvalidParameter(
                    "no signal power enters stage 2".into(),
                ));
            }
            1.0 - out.signal_out.squared_norm() / mid
        }
        ScanArm::R => {
            let mid = out.register_mid.squared_norm();
            if mid <= 0.0 {
                return Err(TmiError::InvalidParameter(
                    "no register power enters stage 2".into(),
                ));
            }
            1.0 - out.register_out.squared_norm() / mid
        }
    })
}

/// FWHM of a sampled curve by linear interpolation at half maximum.
fn fwhm(table: &[(f64, f64)]) -> Result<f64> {
    let (imax, &(_, ymax)) = table
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty table");
    if ymax <= 0.0 {
        return Err(TmiError::InvalidParameter("curve has no peak".into()));
    }
    let half = 0.5 * ymax;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev: Option<usize> = None;
        for i in range {
            if let Some(p) = prev {
                let (x0, y0) = table[p];
                let (x1, y1) = table[i];
                if (y0 - half) * (y1 - half) <= 0.0 && y0 != y1 {
                    return Some(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            prev = Some(i);
        }
        None
    };
    let left = cross(&mut (0..=imax).rev()).ok_or_else(|| {
        TmiError::InvalidParameter("curve does not fall to half maximum on the left".into())
    })?;
    let right = cross(&mut (imax..table.len())).ok_or_else(|| {
        TmiError::InvalidParameter("curve does not fall to half maximum on the right".into())
    })?;
    Ok((right - left).abs())
}

/// Excess-free kurtosis of a curve treated as a density (3 = Gaussian,
/// 2.4 = triangle).
fn curve_kurtosis(table: &[(f64, f64)]) -> f64 {
    let w: f64 = table.iter().map(|&(_, y)| y.max(0.0)).sum();
    let mean: f64 = table.iter().map(|&(x, y)| x * y.max(0.0)).sum::<f64>() / w;
    let m2: f64 = table
        .iter()
        .map(|&(x, y)| (x - mean).powi(2) * y.max(0.0))
        .sum::<f64>()
        / w;
    let m4: f64 = table
        .iter()
        .map(|&(x, y)| (x - mean).powi(4) * y.max(0.0))
        .sum::<f64>()
        / w;
    m4 / (m2 * m2)
}

fn curve_centroid_and_rms(table: &[(f64, f64)]) -> (f64, f64) {
    let w: f64 = table.iter().map(|&(_, y)| y.max(0.0)).sum();
    let mean: f64 = table.iter().map(|&(x, y)| x * y.max(0.0)).sum::<f64>() / w;
    let m2: f64 = table
        .iter()
        .map(|&(x, y)| (x - mean).powi(2) * y.max(0.0))
        .sum::<f64>()
        / w;
    (mean, m2.sqrt())
}

/// Weak-probe stage-2 CE versus arrival-time offset for one arm.
pub fn delay_scan_widths(
    scn: &Scenario,
    arm: ScanArm,
    gamma1_tilde: f64,
    gamma2_tilde: f64,
    offsets_fs: &[f64],
) -> Result<ExperimentResult> {
    if gamma2_tilde > 0.1 * gamma1_tilde {
        return Err(TmiError::InvalidParameter(format!(
            "probe strength {gamma2_tilde} exceeds 10% of the drive {gamma1_tilde}"
        )));
    }
    let s_in = scn.signal(ShapeFamily::Hg0)?;
    let mut table = Vec::with_capacity(offsets_fs.len());
    for &a in offsets_fs {
        let ce = stage2_only_ce(scn, arm, gamma1_tilde, gamma2_tilde, -a, &s_in)?;
        table.push((a, ce));
    }
    let width = fwhm(&table)?;
    let kurt = curve_kurtosis(&table);
    Ok(ExperimentResult {
        name: format!(
            "delay_scan_{}",
            match arm {
                ScanArm::S => "s",
                ScanArm::R => "r",
            }
        ),
        axes: vec!["arrival_offset_fs".into(), "stage2_ce".into()],
        rows: table.into_iter().map(|(x, y)| vec![x, y]).collect(),
        summary: vec![("fwhm_fs".into(), width), ("kurtosis".into(), kurt)],
    })
}

/// Walk-off parameter estimate from the two weak-probe scans: the s-scan
/// is the probe/signal cross-correlation (near-Gaussian with FWHM ≈
/// 2.355·τ_p when both are the pump shape), the r-scan is near-triangular
/// with FWHM ≈ the total walk-off, so ζ ≈ FWHM_r / (FWHM_s / 2.355).
pub fn estimate_zeta(
    scn: &Scenario,
    gamma1_tilde: f64,
    gamma2_tilde: f64,
    s_offsets_fs: &[f64],
    r_offsets_fs: &[f64],
) -> Result<(f64, ExperimentResult, ExperimentResult)> {
    let s_scan = delay_scan_widths(scn, ScanArm::S, gamma1_tilde, gamma2_tilde, s_offsets_fs)?;
    let r_scan = delay_scan_widths(scn, ScanArm::R, gamma1_tilde, gamma2_tilde, r_offsets_fs)?;
    let fwhm_s = s_scan.summary_value("fwhm_fs").expect("present");
    let fwhm_r = r_scan.summary_value("fwhm_fs").expect("present");
    // Equal Gaussian probe and signal: FWHM of the CE curve is
    // √(8 ln 2)·σ√2 = √(4 ln 2)·2·σ = 2.355·τ_p with τ_p = √2·σ.
    let tau_p_est = fwhm_s / (8.0 * 2.0_f64.ln()).sqrt();
    let zeta = fwhm_r / tau_p_est;
    Ok((zeta, s_scan, r_scan))
}

/// Centroid and RMS width of the s-arm weak-probe scan as the stage-1
/// drive grows: the converted-then-back-converted signal skews toward the
/// side opposite the register walk-off and compresses.
pub fn skew_vs_power(
    scn: &Scenario,
    signal_family: ShapeFamily,
    gamma1_list: &[f64],
    gamma2_tilde: f64,
    offsets_fs: &[f64],
) -> Result<ExperimentResult> {
    let s_in = scn.signal(signal_family)?;
    let mut rows = Vec::with_capacity(gamma1_list.len());
    for &g1 in gamma1_list {
        if gamma2_tilde > 0.1 * g1 {
            return Err(TmiError::InvalidParameter(format!(
                "probe strength {gamma2_tilde} exceeds 10% of the drive {g1}"
            )));
        }
        let mut table = Vec::with_capacity(offsets_fs.len());
        for &a in offsets_fs {
            let ce = stage2_only_ce(scn, ScanArm::S, g1, gamma2_tilde, -a, &s_in)?;
            table.push((a, ce));
        }
        let (centroid, rms) = curve_centroid_and_rms(&table);
        rows.push(vec![g1, centroid, rms]);
    }
    Ok(ExperimentResult {
        name: "skew_vs_power".into(),
        axes: vec![
            "gamma1_tilde".into(),
            "centroid_fs".into(),
            "rms_width_fs".into(),
        ],
        rows,
        summary: vec![],
    })
}

/// Single-stage versus bright-fringe two-stage (CE_target, S) curves over
/// a per-stage strength sweep.
pub fn tradeoff_comparison(
    scn: &Scenario,
    basis: &BasisSpec,
    gamma_grid: &[f64],
    n_kept: usize,
) -> Result<ExperimentResult> {
    let template = scn.stage(ShapeFamily::Hg0, 1.0)?;
    let single = ce_selectivity_tradeoff(&template, scn.lambda_s_nm, basis, gamma_grid, n_kept)?;
    let mut rows = Vec::with_capacity(gamma_grid.len());
    let mut max_single: f64 = 0.0;
    let mut max_two: f64 = 0.0;
    for (&gt, srow) in gamma_grid.iter().zip(&single) {
        let spec = scn.cascade(ShapeFamily::Hg0, gt)?;
        debug_assert_eq!(net_phase(&spec.ops), 0.0);
        let g = crate::cascade::cascade_green(&spec, scn.lambda_s_nm, basis)?;
        let sd = schmidt_decompose(&g, n_kept)?;
        let rep = selectivity(&sd)?;
        max_single = max_single.max(srow.selectivity);
        max_two = max_two.max(rep.selectivity);
        rows.push(vec![
            gt,
            srow.ce_target,
            srow.selectivity,
            rep.ce_target,
            rep.selectivity,
        ]);
    }
    Ok(ExperimentResult {
        name: "tradeoff_comparison".into(),
        axes: vec![
            "gamma_tilde".into(),
            "single_ce".into(),
            "single_selectivity".into(),
            "two_stage_ce".into(),
            "two_stage_selectivity".into(),
        ],
        rows,
        summary: vec![
            ("max_single_selectivity".into(), max_single),
            ("max_two_stage_selectivity".into(), max_two),
        ],
    })
}
