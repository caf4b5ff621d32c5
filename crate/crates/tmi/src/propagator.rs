//! Split-step integrator for pulsed three-wave mixing in one stage:
//! signal and register co-propagate through a pump-driven χ⁽²⁾ medium with
//! band-dependent group slownesses.
//!
//! Equations of motion (pump-comoving frame t' = t − β'_p z, pump static):
//!   (∂_z + (β'_s−β'_p) ∂_t) A_s = i γ conj(A_p(t')) A_r
//!   (∂_z + (β'_r−β'_p) ∂_t) A_r = i γ A_p(t') A_s
//! The scheme alternates spectral advection with the exact pointwise
//! two-level rotation over dz, in symmetric (Strang) splitting, so every
//! substep is unitary and the global error is O(dz²).

use num_complex::Complex64 as C64;

use crate::error::{Result, TmiError};
use crate::fft::{fft_in_place, ifft_in_place};
use crate::grid::{centroid_and_width, Band, Envelope};

/// Medium and pump parameters of one conversion stage.
///
/// Units: length in mm, group slownesses in fs/mm, coupling strength in
/// fs^(1/2)/mm.
#[derive(Clone, Debug)]
pub struct StageSpec {
    pub length_mm: f64,
    pub beta_p: f64,
    pub beta_s: f64,
    pub beta_r: f64,
    pub gamma: f64,
    pub pump: Envelope,
    pub n_z_steps: usize,
    pub pump_phase: f64,
}

impl StageSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        length_mm: f64,
        beta_p: f64,
        beta_s: f64,
        beta_r: f64,
        gamma: f64,
        pump: Envelope,
        n_z_steps: usize,
        pump_phase: f64,
    ) -> Result<Self> {
        if !(length_mm > 0.0) {
            return Err(TmiError::InvalidParameter(format!(
                "stage length must be positive, got {length_mm}"
            )));
        }
        if n_z_steps < 16 {
            return Err(TmiError::InvalidParameter(format!(
                "n_z_steps must be >= 16, got {n_z_steps}"
            )));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(TmiError::InvalidParameter(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        if pump.band() != Band::Pump {
            return Err(TmiError::InvalidParameter(
                "stage pump envelope must be in the pump band".into(),
            ));
        }
        if (pump.squared_norm() - 1.0).abs() > 1e-9 {
            return Err(TmiError::InvalidParameter(format!(
                "pump must be square normalized, squared norm = {}",
                pump.squared_norm()
            )));
        }
        Ok(Self {
            length_mm,
            beta_p,
            beta_s,
            beta_r,
            gamma,
            pump,
            n_z_steps,
            pump_phase,
        })
    }

    /// Signal/register slowness mismatch β'_r − β'_s [fs/mm].
    pub fn slowness_mismatch(&self) -> f64 {
        self.beta_r - self.beta_s
    }

    /// Effective interaction strength γ̃ = γ·sqrt(L/|β'_r − β'_s|).
    /// Infinite in the group-matched (single-mode) limit.
    pub fn effective_strength(&self) -> f64 {
        self.gamma * (self.length_mm / self.slowness_mismatch().abs()).sqrt()
    }

    /// Pump duration τ_p: for a Gaussian amplitude exp(−t²/2τ²) this is τ,
    /// recovered from the RMS intensity width as τ = √2·σ.
    pub fn pump_duration(&self) -> f64 {
        let (_, w) = centroid_and_width(&self.pump).expect("pump is normalized");
        2.0_f64.sqrt() * w
    }

    /// Walk-off ratio ζ = |β'_r − β'_s|·L / τ_p.
    pub fn zeta(&self) -> f64 {
        self.slowness_mismatch().abs() * self.length_mm / self.pump_duration()
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    /// Set γ from a target effective strength γ̃.
    pub fn with_effective_strength(&self, gamma_tilde: f64) -> Result<Self> {
        let mismatch = self.slowness_mismatch().abs();
        if mismatch == 0.0 {
            return Err(TmiError::InvalidParameter(
                "effective strength is undefined when beta_r == beta_s".into(),
            ));
        }
        Ok(self.with_gamma(gamma_tilde * (mismatch / self.length_mm).sqrt()))
    }

    pub fn with_pump_phase(&self, pump_phase: f64) -> Self {
        Self {
            pump_phase,
            ..self.clone()
        }
    }
}

/// Fields at z = L plus the boundary-leakage diagnostic.
#[derive(Clone, Debug)]
pub struct StageOutput {
    pub signal_out: Envelope,
    pub register_out: Envelope,
    pub boundary_leakage: f64,
}

/// Precomputed per-step tables; shared across all inputs of one stage.
pub(crate) struct StepTables {
    /// Advection phases per band for a half and a full dz step.
    phase_s_half: Vec<C64>,
    phase_r_half: Vec<C64>,
    phase_s_full: Vec<C64>,
    phase_r_full: Vec<C64>,
    /// Pointwise rotation: cosθ and u = i·e^{iφ}·sinθ.
    pub(crate) cos_theta: Vec<f64>,
    pub(crate) u: Vec<C64>,
    n_z_steps: usize,
}

impl StepTables {
    pub(crate) fn new(stage: &StageSpec) -> StepTables {
        let dz = stage.length_mm / stage.n_z_steps as f64;
        let a_s = stage.beta_s - stage.beta_p;
        let a_r = stage.beta_r - stage.beta_p;
        let omegas = stage.pump.grid().angular_frequencies();
        let phase = |a: f64, frac: f64| -> Vec<C64> {
            omegas
                .iter()
                .map(|&w| C64::from_polar(1.0, -w * a * dz * frac))
                .collect()
        };
        let mut cos_theta = Vec::with_capacity(omegas.len());
        let mut u = Vec::with_capacity(omegas.len());
        for p in stage.pump.samples() {
            let theta = stage.gamma * p.norm() * dz;
            let phi = p.arg() + stage.pump_phase;
            cos_theta.push(theta.cos());
            u.push(C64::new(0.0, 1.0) * C64::from_polar(theta.sin(), phi));
        }
        StepTables {
            phase_s_half: phase(a_s, 0.5),
            phase_r_half: phase(a_r, 0.5),
            phase_s_full: phase(a_s, 1.0),
            phase_r_full: phase(a_r, 1.0),
            cos_theta,
            u,
            n_z_steps: stage.n_z_steps,
        }
    }

    fn advect(&self, s: &mut [C64], r: &mut [C64], half: bool) {
        let (ps, pr) = if half {
            (&self.phase_s_half, &self.phase_r_half)
        } else {
            (&self.phase_s_full, &self.phase_r_full)
        };
        fft_in_place(s);
        for (v, p) in s.iter_mut().zip(ps) {
            *v *= p;
        }
        ifft_in_place(s);
        fft_in_place(r);
        for (v, p) in r.iter_mut().zip(pr) {
            *v *= p;
        }
        ifft_in_place(r);
    }

    fn rotate(&self, s: &mut [C64], r: &mut [C64]) {
        for k in 0..s.len() {
            let c = self.cos_theta[k];
            let u = self.u[k];
            let sv = s[k];
            let rv = r[k];
            s[k] = c * sv - u.conj() * rv;
            r[k] = u * sv + c * rv;
        }
    }

    /// Full Strang-split pass over the stage length, in place.
    pub(crate) fn run(&self, s: &mut [C64], r: &mut [C64]) {
        self.advect(s, r, true);
        for k in 0..self.n_z_steps {
            self.rotate(s, r);
            if k + 1 < self.n_z_steps {
                self.advect(s, r, false);
            }
        }
        self.advect(s, r, true);
    }
}

/// Fraction of total output power sitting in the outermost grid samples.
fn edge_power_fraction(s: &[C64], r: &[C64]) -> f64 {
    let n = s.len();
    let m = (n / 128).max(4);
    let total: f64 = s.iter().chain(r.iter()).map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edges: f64 = (0..m)
        .flat_map(|k| [k, n - 1 - k])
        .map(|k| s[k].norm_sqr() + r[k].norm_sqr())
        .sum();
    edges / total
}

fn check_shared_grid(stage: &StageSpec, signal_in: &Envelope, register_in: &Envelope) -> Result<()> {
    if signal_in.grid() != stage.pump.grid() || register_in.grid() != stage.pump.grid() {
        return Err(TmiError::GridMismatch(
            "stage pump, signal and register must share one grid".into(),
        ));
    }
    Ok(())
}

/// Propagate `signal_in` and `register_in` through one stage.
pub fn propagate(
    stage: &StageSpec,
    signal_in: &Envelope,
    register_in: &Envelope,
) -> Result<StageOutput> {
    check_shared_grid(stage, signal_in, register_in)?;
    stage.pump.check_tails(1e-10)?;
    signal_in.check_tails(1e-10)?;
    register_in.check_tails(1e-10)?;

    let tables = StepTables::new(stage);
    let mut s = signal_in.samples().to_vec();
    let mut r = register_in.samples().to_vec();
    tables.run(&mut s, &mut r);

    let leakage = edge_power_fraction(&s, &r);
    if leakage > 1e-6 {
        return Err(TmiError::BoundaryLeakage(leakage));
    }
    Ok(StageOutput {
        signal_out: Envelope::new(
            *signal_in.grid(),
            signal_in.band(),
            signal_in.carrier_wavelength_nm(),
            s,
        )?,
        register_out: Envelope::new(
            *register_in.grid(),
            register_in.band(),
            register_in.carrier_wavelength_nm(),
            r,
        )?,
        boundary_leakage: leakage,
    })
}

/// Fraction of signal power depleted by the stage for a register-free input.
pub fn conversion_efficiency(stage: &StageSpec, signal_in: &Envelope) -> Result<f64> {
    let in_norm = signal_in.squared_norm();
    if in_norm <= 0.0 {
        return Err(TmiError::ZeroNorm);
    }
    let register_in = Envelope::zero(
        *signal_in.grid(),
        Band::Register,
        register_wavelength_nm(
            stage.pump.carrier_wavelength_nm(),
            signal_in.carrier_wavelength_nm(),
        ),
    )?;
    let out = propagate(stage, signal_in, &register_in)?;
    Ok(1.0 - out.signal_out.squared_norm() / in_norm)
}

/// Register carrier from energy conservation ω_r = ω_p + ω_s.
pub fn register_wavelength_nm(lambda_p_nm: f64, lambda_s_nm: f64) -> f64 {
    1.0 / (1.0 / lambda_p_nm + 1.0 / lambda_s_nm)
}

/// Find γ so the stage converts `signal_in` with efficiency `target_ce`,
/// searching below the first CE maximum by bracketing + bisection.
pub fn calibrate_gamma(template: &StageSpec, signal_in: &Envelope, target_ce: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&target_ce) {
        return Err(TmiError::InvalidParameter(format!(
            "target CE must be in [0, 1), got {target_ce}"
        )));
    }
    if target_ce == 0.0 {
        return Ok(0.0);
    }
    let ce_at = |gamma: f64| conversion_efficiency(&template.with_gamma(gamma), signal_in);

    // Initial scale: a rotation angle of order one across the pump peak.
    let p_max = template
        .pump
        .samples()
        .iter()
        .map(|v| v.norm())
        .fold(0.0_f64, f64::max);
    let mut lo = 0.0;
    let mut ce_lo = 0.0;
    let mut hi = 0.2 / (p_max * template.length_mm);
    let mut ce_hi = ce_at(hi)?;
    let mut best = ce_hi;
    // Grow until the target is bracketed or the first maximum is passed.
    let mut grow_steps = 0;
    while ce_hi < target_ce {
        if ce_hi + 1e-12 < ce_lo || grow_steps > 60 {
            return Err(TmiError::CalibrationUnreachable {
                target: target_ce,
                best,
            });
        }
        lo = hi;
        ce_lo = ce_hi;
        hi *= 1.6;
        ce_hi = ce_at(hi)?;
        best = best.max(ce_hi);
        grow_steps += 1;
    }
    // Monotone bisection on [lo, hi].
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let ce = ce_at(mid)?;
        if (ce - target_ce).abs() <= 1e-4 {
            return Ok(mid);
        }
        if ce < target_ce {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(TmiError::CalibrationUnreachable {
        target: target_ce,
        best,
    })
}
