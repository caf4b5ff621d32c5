//! Run configuration: a TOML file with nested sections, strict
//! unknown-key rejection, defaults for every field, and resolution into
//! the physical objects the experiments consume.

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeSpec, DelaySpec, InterstageOps, MirrorScan};
use crate::error::{Result, TmiError};
use crate::experiments::{ScanArm, Scenario};
use crate::green::BasisSpec;
use crate::grid::TemporalGrid;
use crate::propagator::{calibrate_gamma, register_wavelength_nm};
use crate::shapes::ShapeFamily;

/// Complete run description. Every field has a default, so a minimal
/// file only names the experiment; unknown keys are rejected to catch
/// typos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub medium: MediumConfig,
    pub pump: PumpConfig,
    pub signal: SignalConfig,
    pub cascade: CascadeConfig,
    pub numerics: NumericsConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_points: usize,
    pub span_fs: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_points: 2048,
            span_fs: 20_000.0,
        }
    }
}

/// Medium description: either the group-slowness triple is given
/// explicitly, or the walk-off parameter `zeta` is given and the
/// slownesses are derived from it and the pump duration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub length_mm: f64,
    pub beta_p_fs_per_mm: Option<f64>,
    pub beta_s_fs_per_mm: Option<f64>,
    pub beta_r_fs_per_mm: Option<f64>,
    pub zeta: Option<f64>,
    /// Pump-signal walk-off over the full length, used only when the
    /// medium is specified through `zeta`.
    pub pump_signal_walkoff_fs: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            length_mm: 5.0,
            beta_p_fs_per_mm: None,
            beta_s_fs_per_mm: None,
            beta_r_fs_per_mm: None,
            zeta: None,
            pump_signal_walkoff_fs: 40.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub shape: String,
    /// Pump duration τ_p in fs; the common bandwidth scale is Δω = 1/τ_p.
    pub duration_fs: f64,
    pub lambda_nm: f64,
    /// Dimensionless per-stage strength; mutually exclusive with
    /// `ce_target`.
    pub gamma_tilde: Option<f64>,
    /// Matched-shape single-stage conversion efficiency to calibrate the
    /// strength to; mutually exclusive with `gamma_tilde`.
    pub ce_target: Option<f64>,
    pub phase: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig {
            shape: "hg0".into(),
            duration_fs: 500.0,
            lambda_nm: 821.0,
            gamma_tilde: None,
            ce_target: None,
            phase: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    pub shape: String,
    pub lambda_nm: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            shape: "hg0".into(),
            lambda_nm: 812.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeConfig {
    pub phase_s: f64,
    pub phase_r: f64,
    pub pump2_phase: f64,
    /// "auto" re-overlaps the register with the signal between stages;
    /// "manual" applies exactly `delay_s_fs`/`delay_r_fs`.
    pub delay: String,
    pub extra_delay_s_fs: f64,
    pub extra_delay_r_fs: f64,
    pub delay_s_fs: Option<f64>,
    pub delay_r_fs: Option<f64>,
    pub transmission_s: f64,
    pub transmission_r: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            phase_s: 0.0,
            phase_r: 0.0,
            pump2_phase: 0.0,
            delay: "auto".into(),
            extra_delay_s_fs: 0.0,
            extra_delay_r_fs: 0.0,
            delay_s_fs: None,
            delay_r_fs: None,
            transmission_s: 1.0,
            transmission_r: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub n_z_steps: usize,
    /// "delta" (full) or "fourier" (restricted to `n_eff` bins).
    pub basis: String,
    pub n_eff: usize,
    /// Singular values retained in mode analyses.
    pub n_kept: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            n_z_steps: 512,
            basis: "fourier".into(),
            n_eff: 512,
            n_kept: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// One of: fringe_scan, peak_ce_matrix, delay_scan, skew_vs_power,
    /// tradeoff_comparison.
    pub name: String,
    /// fringe_scan: which end mirror moves ("s", "r", "both_same",
    /// "both_opposite").
    pub mirror: String,
    pub scan_start_nm: f64,
    pub scan_stop_nm: f64,
    pub scan_points: usize,
    /// delay_scan: scanned arm ("s", "r" or "both"; "both" also reports
    /// the walk-off estimate).
    pub arm: String,
    pub offset_start_fs: f64,
    pub offset_stop_fs: f64,
    pub offset_points: usize,
    /// Weak stage-2 probe strength for delay scans and skew runs.
    pub probe_gamma_tilde: f64,
    /// skew_vs_power: stage-1 strengths.
    pub gamma_list: Vec<f64>,
    /// tradeoff_comparison: per-stage strength sweep.
    pub gamma_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "fringe_scan".into(),
            mirror: "s".into(),
            scan_start_nm: 0.0,
            scan_stop_nm: 2030.0,
            scan_points: 204,
            arm: "both".into(),
            offset_start_fs: -6000.0,
            offset_stop_fs: 6000.0,
            offset_points: 241,
            probe_gamma_tilde: 0.05,
            gamma_list: vec![0.6, 0.9, 1.2, 1.5],
            gamma_grid: (3..=16).map(|k| 0.15 * k as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub format: String,
    pub dump_green: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            format: "csv".into(),
            dump_green: false,
        }
    }
}

/// Physical objects derived from a valid configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub pump_family: ShapeFamily,
    pub signal_family: ShapeFamily,
    /// Per-stage strength after any CE-target calibration.
    pub gamma_tilde: f64,
    pub ops: InterstageOps,
    pub basis: BasisSpec,
    pub n_kept: usize,
    pub lambda_r_nm: f64,
}

impl Resolved {
    /// Walk-off parameter of the resolved medium.
    pub fn zeta(&self) -> f64 {
        self.scenario.zeta()
    }

    /// Symmetric cascade at the resolved strength and inter-stage
    /// settings.
    pub fn cascade_spec(&self) -> Result<CascadeSpec> {
        CascadeSpec::symmetric(
            self.scenario.stage(self.pump_family, self.gamma_tilde)?,
            self.ops,
        )
    }
}

fn parse_shape(name: &str) -> Result<ShapeFamily> {
    match name {
        "hg0" => Ok(ShapeFamily::Hg0),
        "hg1" => Ok(ShapeFamily::Hg1),
        "hg2" => Ok(ShapeFamily::Hg2),
        "gaussian" => Ok(ShapeFamily::Gaussian),
        other => {
            if let Some(idx) = other.strip_prefix("hg") {
                if let Ok(k) = idx.parse::<u32>() {
                    return Ok(ShapeFamily::HermiteGauss(k));
                }
            }
            Err(TmiError::Config(format!(
                "unknown shape '{other}' (expected hg0, hg1, hg2, hgN or gaussian)"
            )))
        }
    }
}

pub fn parse_mirror(name: &str) -> Result<MirrorScan> {
    match name {
        "s" => Ok(MirrorScan::S),
        "r" => Ok(MirrorScan::R),
        "both_same" => Ok(MirrorScan::BothSame),
        "both_opposite" => Ok(MirrorScan::BothOpposite),
        other => Err(TmiError::Config(format!(
            "unknown mirror '{other}' (expected s, r, both_same or both_opposite)"
        ))),
    }
}

pub fn parse_arm(name: &str) -> Result<Option<ScanArm>> {
    match name {
        "s" => Ok(Some(ScanArm::S)),
        "r" => Ok(Some(ScanArm::R)),
        "both" => Ok(None),
        other => Err(TmiError::Config(format!(
            "unknown arm '{other}' (expected s, r or both)"
        ))),
    }
}

/// Parse a configuration file, applying defaults and rejecting unknown
/// keys with the parser's position diagnostics.
pub fn parse_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| TmiError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Structural checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        if self.pump.gamma_tilde.is_some() && self.pump.ce_target.is_some() {
            return Err(TmiError::Config(
                "pump.gamma_tilde and pump.ce_target are mutually exclusive; give one".into(),
            ));
        }
        let betas = [
            self.medium.beta_p_fs_per_mm,
            self.medium.beta_s_fs_per_mm,
            self.medium.beta_r_fs_per_mm,
        ];
        let n_given = betas.iter().filter(|b| b.is_some()).count();
        if n_given != 0 && n_given != 3 {
            return Err(TmiError::Config(
                "medium slownesses must be given as the full triple beta_p_fs_per_mm, \
                 beta_s_fs_per_mm, beta_r_fs_per_mm"
                    .into(),
            ));
        }
        if n_given == 3 && self.medium.zeta.is_some() {
            return Err(TmiError::Config(
                "medium.zeta and the slowness triple are mutually exclusive; give one".into(),
            ));
        }
        if !(self.pump.duration_fs > 0.0) {
            return Err(TmiError::Config("pump.duration_fs must be positive".into()));
        }
        for (key, t) in [
            ("cascade.transmission_s", self.cascade.transmission_s),
            ("cascade.transmission_r", self.cascade.transmission_r),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(TmiError::Config(format!("{key} must lie in [0, 1], got {t}")));
            }
        }
        match self.cascade.delay.as_str() {
            "auto" => {
                if self.cascade.delay_s_fs.is_some() || self.cascade.delay_r_fs.is_some() {
                    return Err(TmiError::Config(
                        "cascade.delay_s_fs/delay_r_fs require cascade.delay = \"manual\""
                            .into(),
                    ));
                }
            }
            "manual" => {
                if self.cascade.delay_s_fs.is_none() || self.cascade.delay_r_fs.is_none() {
                    return Err(TmiError::Config(
                        "cascade.delay = \"manual\" needs both delay_s_fs and delay_r_fs"
                            .into(),
                    ));
                }
            }
            other => {
                return Err(TmiError::Config(format!(
                    "cascade.delay must be \"auto\" or \"manual\", got '{other}'"
                )));
            }
        }
        match self.numerics.basis.as_str() {
            "delta" | "fourier" => {}
            other => {
                return Err(TmiError::Config(format!(
                    "numerics.basis must be \"delta\" or \"fourier\", got '{other}'"
                )));
            }
        }
        match self.output.format.as_str() {
            "csv" => {}
            other => {
                return Err(TmiError::Config(format!(
                    "output.format must be \"csv\", got '{other}'"
                )));
            }
        }
        Ok(())
    }

    /// Derive the physical scenario, strengths and inter-stage operations.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let grid = TemporalGrid::centered(self.grid.n_points, self.grid.span_fs)?;
        let l = self.medium.length_mm;
        let tau_p = self.pump.duration_fs;
        let (beta_p, beta_s, beta_r) = if let (Some(bp), Some(bs), Some(br)) = (
            self.medium.beta_p_fs_per_mm,
            self.medium.beta_s_fs_per_mm,
            self.medium.beta_r_fs_per_mm,
        ) {
            (bp, bs, br)
        } else {
            let zeta = self.medium.zeta.unwrap_or(10.0);
            let bs = self.medium.pump_signal_walkoff_fs / l;
            (0.0, bs, bs + zeta * tau_p / l)
        };
        let scenario = Scenario {
            grid,
            length_mm: l,
            beta_p,
            beta_s,
            beta_r,
            n_z_steps: self.numerics.n_z_steps,
            delta_omega: 1.0 / tau_p,
            lambda_p_nm: self.pump.lambda_nm,
            lambda_s_nm: self.signal.lambda_nm,
        };
        let pump_family = parse_shape(&self.pump.shape)?;
        let signal_family = parse_shape(&self.signal.shape)?;
        let gamma_tilde = match (self.pump.gamma_tilde, self.pump.ce_target) {
            (Some(gt), None) => gt,
            (None, Some(ce)) => {
                let unit = scenario.stage(pump_family, 1.0)?;
                let matched = scenario.signal(pump_family)?;
                calibrate_gamma(&unit, &matched, ce)? / unit.gamma
            }
            (None, None) => 1.0,
            (Some(_), Some(_)) => unreachable!("rejected by validate"),
        };
        let delays = match self.cascade.delay.as_str() {
            "auto" => DelaySpec::Auto {
                extra_s: self.cascade.extra_delay_s_fs,
                extra_r: self.cascade.extra_delay_r_fs,
            },
            _ => DelaySpec::Manual {
                delay_s: self.cascade.delay_s_fs.expect("checked by validate"),
                delay_r: self.cascade.delay_r_fs.expect("checked by validate"),
            },
        };
        let ops = InterstageOps {
            phase_s: self.cascade.phase_s,
            phase_r: self.cascade.phase_r,
            pump2_phase: self.cascade.pump2_phase,
            delays,
            transmission_s: self.cascade.transmission_s,
            transmission_r: self.cascade.transmission_r,
        };
        let basis = match self.numerics.basis.as_str() {
            "delta" => BasisSpec::Delta,
            _ => BasisSpec::Fourier {
                n_eff: self.numerics.n_eff,
            },
        };
        Ok(Resolved {
            scenario,
            pump_family,
            signal_family,
            gamma_tilde,
            ops,
            basis,
            n_kept: self.numerics.n_kept,
            lambda_r_nm: register_wavelength_nm(self.pump.lambda_nm, self.signal.lambda_nm),
        })
    }

    /// Canonical text form: defaults made explicit, suitable as a
    /// metadata sidecar that re-parses to an equivalent configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| TmiError::Config(e.to_string()))
    }
}
