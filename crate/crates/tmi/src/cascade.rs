//! Two-stage temporal-mode interferometer: per-band inter-stage phases,
//! re-overlap delays, loss beamsplitters, and the net-phase bookkeeping
//! Φ_net = pump2_phase + phase_s − phase_r.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Result, TmiError};
use crate::fft::{fft_in_place, ifft_in_place, signed_index};
use crate::green::{GreenBasis, GreenFunction};
use crate::grid::{
    apply_delay, apply_phase, mirror_displacement_to_phase, Band, Envelope, C_NM_PER_FS,
};
use crate::propagator::{propagate, register_wavelength_nm, StageSpec};

/// Inter-stage delay policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelaySpec {
    /// Undo each band's accumulated walk-off relative to the pump frame,
    /// delay_j = −(β'_j − β'_p)·L, plus an optional extra offset per band.
    Auto { extra_s: f64, extra_r: f64 },
    /// Fixed delays in fs.
    Manual { delay_s: f64, delay_r: f64 },
}

impl Default for DelaySpec {
    fn default() -> Self {
        DelaySpec::Auto {
            extra_s: 0.0,
            extra_r: 0.0,
        }
    }
}

/// Everything applied between the two stages.
#[derive(Clone, Copy, Debug)]
pub struct InterstageOps {
    pub phase_s: f64,
    pub phase_r: f64,
    pub pump2_phase: f64,
    pub delays: DelaySpec,
    pub transmission_s: f64,
    pub transmission_r: f64,
}

impl Default for InterstageOps {
    fn default() -> Self {
        InterstageOps {
            phase_s: 0.0,
            phase_r: 0.0,
            pump2_phase: 0.0,
            delays: DelaySpec::default(),
            transmission_s: 1.0,
            transmission_r: 1.0,
        }
    }
}

impl InterstageOps {
    fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("transmission_s", self.transmission_s),
            ("transmission_r", self.transmission_r),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(TmiError::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.transmission_s == 1.0 && self.transmission_r == 1.0
    }
}

#[derive(Clone, Debug)]
pub struct CascadeSpec {
    pub stage1: StageSpec,
    pub stage2: StageSpec,
    pub ops: InterstageOps,
}

impl CascadeSpec {
    pub fn new(stage1: StageSpec, stage2: StageSpec, ops: InterstageOps) -> Result<CascadeSpec> {
        ops.validate()?;
        if stage1.pump.grid() != stage2.pump.grid() {
            return Err(TmiError::GridMismatch(
                "both stages must share one grid".into(),
            ));
        }
        Ok(CascadeSpec {
            stage1,
            stage2,
            ops,
        })
    }

    /// The common case: stage 2 reuses stage 1's medium and pump shape.
    pub fn symmetric(stage: StageSpec, ops: InterstageOps) -> Result<CascadeSpec> {
        let stage2 = stage.clone();
        CascadeSpec::new(stage, stage2, ops)
    }

    /// Resolved delays in fs as (base_s, base_r, extra_s, extra_r); the
    /// base and extra parts are applied as separate guarded steps so a
    /// scan offset and the re-overlap delay each get the full guard
    /// budget.
    pub fn resolved_delays(&self) -> (f64, f64, f64, f64) {
        match self.ops.delays {
            DelaySpec::Manual { delay_s, delay_r } => (delay_s, delay_r, 0.0, 0.0),
            DelaySpec::Auto { extra_s, extra_r } => {
                // Undo the register's walk-off relative to the signal
                // band; the signal (and the fresh pump) stay put.
                let l = self.stage1.length_mm;
                let d_r = -(self.stage1.beta_r - self.stage1.beta_s) * l;
                (0.0, d_r, extra_s, extra_r)
            }
        }
    }
}

/// Net interferometric phase pump2_phase + phase_s − phase_r, wrapped to
/// (−π, π].
pub fn net_phase(ops: &InterstageOps) -> f64 {
    let raw = ops.pump2_phase + ops.phase_s - ops.phase_r;
    let tau = 2.0 * std::f64::consts::PI;
    let mut w = raw.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w -= tau;
    }
    w
}

#[derive(Clone, Debug)]
pub struct CascadeOutput {
    pub signal_out: Envelope,
    pub register_out: Envelope,
    /// 1 − ‖signal_out‖²/‖signal_in‖²; the internal CE when lossless.
    pub ce: f64,
    /// Signal-band envelope between the stages (after delays/phases/loss).
    pub signal_mid: Envelope,
    /// Register-band envelope between the stages.
    pub register_mid: Envelope,
}

pub fn run_cascade(spec: &CascadeSpec, signal_in: &Envelope) -> Result<CascadeOutput> {
    spec.ops.validate()?;
    let grid = *spec.stage1.pump.grid();
    if signal_in.grid() != &grid {
        return Err(TmiError::GridMismatch(
            "signal input grid differs from cascade grid".into(),
        ));
    }
    let lambda_r = register_wavelength_nm(
        spec.stage1.pump.carrier_wavelength_nm(),
        signal_in.carrier_wavelength_nm(),
    );
    let register_zero = Envelope::zero(grid, Band::Register, lambda_r)?;
    let out1 = propagate(&spec.stage1, signal_in, &register_zero)?;

    let (base_s, base_r, extra_s, extra_r) = spec.resolved_delays();
    let mut s_mid = apply_delay(&out1.signal_out, base_s)?;
    let mut r_mid = apply_delay(&out1.register_out, base_r)?;
    if extra_s != 0.0 {
        s_mid = apply_delay(&s_mid, extra_s)?;
    }
    if extra_r != 0.0 {
        r_mid = apply_delay(&r_mid, extra_r)?;
    }
    s_mid = apply_phase(&s_mid, spec.ops.phase_s).scaled(C64::new(spec.ops.transmission_s, 0.0));
    r_mid = apply_phase(&r_mid, spec.ops.phase_r).scaled(C64::new(spec.ops.transmission_r, 0.0));

    let stage2 = spec
        .stage2
        .with_pump_phase(spec.stage2.pump_phase + spec.ops.pump2_phase);
    let out2 = propagate(&stage2, &s_mid, &r_mid)?;
    let in_norm = signal_in.squared_norm();
    let ce = 1.0 - out2.signal_out.squared_norm() / in_norm;
    Ok(CascadeOutput {
        signal_out: out2.signal_out,
        register_out: out2.register_out,
        ce,
        signal_mid: s_mid,
        register_mid: r_mid,
    })
}

/// Apply the inter-stage operator to a stacked matrix in place: per-band
/// spectral delay, constant phase, and amplitude transmission on the
/// output side (rows) of a stage-1 matrix.
fn interstage_into_stacked(
    stacked: &mut Array2<C64>,
    basis: &GreenBasis,
    grid: &crate::grid::TemporalGrid,
    ops: &InterstageOps,
    delays: (f64, f64, f64, f64),
) -> Result<()> {
    let m = stacked.nrows() / 2;
    let n = grid.n_points();
    let span = grid.span();
    let (base_s, base_r, extra_s, extra_r) = delays;
    for tau in [base_s, base_r, extra_s, extra_r] {
        if tau.abs() > 0.25 * span {
            return Err(TmiError::DelayTooLarge {
                tau_fs: tau,
                span_fs: span,
            });
        }
    }
    let domega = 2.0 * std::f64::consts::PI / span;
    // Base and extra phases multiplied separately, mirroring the two
    // apply_delay calls on the envelope path.
    let factor = |w: f64, base: f64, extra: f64, phase: f64, trans: f64| {
        C64::from_polar(trans, phase - w * base) * C64::from_polar(1.0, -w * extra)
    };
    let bands = [
        (0, base_s, extra_s, ops.phase_s, ops.transmission_s),
        (m, base_r, extra_r, ops.phase_r, ops.transmission_r),
    ];
    match basis {
        GreenBasis::Fourier { kept } => {
            for &(off, base, extra, phase, trans) in &bands {
                for (i, &k) in kept.iter().enumerate() {
                    let f = factor(k as f64 * domega, base, extra, phase, trans);
                    for j in 0..2 * m {
                        stacked[[off + i, j]] *= f;
                    }
                }
            }
        }
        GreenBasis::Delta => {
            // Delay is dense here: transform each column's band half.
            for j in 0..2 * m {
                for &(off, base, extra, phase, trans) in &bands {
                    let mut buf: Vec<C64> = (0..n).map(|i| stacked[[off + i, j]]).collect();
                    fft_in_place(&mut buf);
                    for (k, v) in buf.iter_mut().enumerate() {
                        let w = signed_index(k, n) as f64 * domega;
                        *v *= factor(w, base, extra, phase, trans);
                    }
                    ifft_in_place(&mut buf);
                    for (i, v) in buf.into_iter().enumerate() {
                        stacked[[off + i, j]] = v;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Compose two assembled stage matrices with the inter-stage operator:
/// G = G₂·D·G₁. Matches `run_cascade` on any input; stage-2 pump phase
/// must already include `pump2_phase` (see `cascade_green`).
pub fn compose_green(
    g1: &GreenFunction,
    g2: &GreenFunction,
    spec: &CascadeSpec,
) -> Result<GreenFunction> {
    if g1.grid != g2.grid || g1.basis != g2.basis {
        return Err(TmiError::GridMismatch(
            "stage matrices must share grid and basis".into(),
        ));
    }
    let mut mid = g1.stacked();
    interstage_into_stacked(
        &mut mid,
        &g1.basis,
        &g1.grid,
        &spec.ops,
        spec.resolved_delays(),
    )?;
    let total = g2.stacked().dot(&mid);
    Ok(GreenFunction::from_stacked(
        g1.grid,
        g1.lambda_s_nm,
        g1.lambda_r_nm,
        g1.basis.clone(),
        &total,
    ))
}

/// Assemble the full cascade scattering matrix.
pub fn cascade_green(
    spec: &CascadeSpec,
    lambda_s_nm: f64,
    basis: &crate::green::BasisSpec,
) -> Result<GreenFunction> {
    spec.ops.validate()?;
    let g1 = crate::green::assemble(&spec.stage1, lambda_s_nm, basis)?;
    let stage2 = spec
        .stage2
        .with_pump_phase(spec.stage2.pump_phase + spec.ops.pump2_phase);
    let g2 = crate::green::assemble(&stage2, lambda_s_nm, basis)?;
    compose_green(&g1, &g2, spec)
}

/// Which arm's end mirror is scanned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MirrorScan {
    S,
    R,
    BothSame,
    BothOpposite,
}

/// CE versus mirror displacement. Each displacement adds the reflection
/// phase 4π·dL/λ of the scanned band(s) and the matching 2·dL/c path
/// delay on top of the template's inter-stage settings.
pub fn fringe_scan(
    spec: &CascadeSpec,
    which: MirrorScan,
    displacements_nm: &[f64],
    signal_in: &Envelope,
) -> Result<Vec<(f64, f64)>> {
    let lambda_s = signal_in.carrier_wavelength_nm();
    let lambda_r = register_wavelength_nm(
        spec.stage1.pump.carrier_wavelength_nm(),
        lambda_s,
    );
    let mut table = Vec::with_capacity(displacements_nm.len());
    for &d in displacements_nm {
        let (d_sig, d_reg) = match which {
            MirrorScan::S => (d, 0.0),
            MirrorScan::R => (0.0, d),
            MirrorScan::BothSame => (d, d),
            MirrorScan::BothOpposite => (d, -d),
        };
        let mut ops = spec.ops;
        ops.phase_s += mirror_displacement_to_phase(d_sig, lambda_s)?;
        ops.phase_r += mirror_displacement_to_phase(d_reg, lambda_r)?;
        let (path_s, path_r) = (2.0 * d_sig / C_NM_PER_FS, 2.0 * d_reg / C_NM_PER_FS);
        ops.delays = match ops.delays {
            DelaySpec::Auto { extra_s, extra_r } => DelaySpec::Auto {
                extra_s: extra_s + path_s,
                extra_r: extra_r + path_r,
            },
            DelaySpec::Manual { delay_s, delay_r } => DelaySpec::Manual {
                delay_s: delay_s + path_s,
                delay_r: delay_r + path_r,
            },
        };
        let scan_spec = CascadeSpec {
            stage1: spec.stage1.clone(),
            stage2: spec.stage2.clone(),
            ops,
        };
        let out = run_cascade(&scan_spec, signal_in)?;
        table.push((d, out.ce));
    }
    Ok(table)
}

/// (CE_max − CE_min)/(CE_max + CE_min) of the register-out power fringe
/// versus net phase; the fringe is exactly sinusoidal in the net phase,
/// so three samples determine it.
pub fn register_fringe_visibility(spec: &CascadeSpec, signal_in: &Envelope) -> Result<f64> {
    let mut powers = [0.0; 3];
    for (i, phi) in [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI]
        .into_iter()
        .enumerate()
    {
        let mut ops = spec.ops;
        ops.pump2_phase += phi;
        let scan = CascadeSpec {
            stage1: spec.stage1.clone(),
            stage2: spec.stage2.clone(),
            ops,
        };
        powers[i] = run_cascade(&scan, signal_in)?.register_out.squared_norm();
    }
    let a = 0.5 * (powers[0] + powers[2]);
    let re = 0.5 * (powers[0] - powers[2]);
    let im = a - powers[1];
    let amp = (re * re + im * im).sqrt();
    if a <= 0.0 {
        return Err(TmiError::InvalidParameter(
            "no register output power; fringe undefined".into(),
        ));
    }
    Ok(amp / a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::BasisSpec;
    use crate::grid::{centroid_and_width, inner_product, TemporalGrid};
    use crate::propagator::calibrate_gamma;
    use crate::shapes::{make_shape_temporal, ShapeFamily, ShapeSpec};
    use approx::assert_abs_diff_eq;

    const TAU_P: f64 = 100.0;
    const LAMBDA_P: f64 = 821.0;
    const LAMBDA_S: f64 = 812.2;

    fn grid(n: usize) -> TemporalGrid {
        TemporalGrid::centered(n, 40.0 * TAU_P).unwrap()
    }

    fn gaussian_signal(n: usize) -> Envelope {
        make_shape_temporal(
            &ShapeSpec::new(ShapeFamily::Hg0, 1.0 / TAU_P).unwrap(),
            grid(n),
            Band::Signal,
            LAMBDA_S,
        )
        .unwrap()
    }

    /// Single-mode-limit stage (flat pump, equal slownesses) calibrated to
    /// a given CE on the Gaussian signal.
    fn rabi_stage(n: usize, ce: f64) -> StageSpec {
        let pump = Envelope::from_fn(grid(n), Band::Pump, LAMBDA_P, |t| {
            if t.abs() < 8.0 * TAU_P {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap()
        .normalized()
        .unwrap();
        let st = StageSpec::new(5.0, 0.0, 0.0, 0.0, 0.01, pump, 32, 0.0).unwrap();
        let gamma = calibrate_gamma(&st, &gaussian_signal(n), ce).unwrap();
        st.with_gamma(gamma)
    }

    fn walkoff_stage(n: usize, gamma_tilde: f64, zeta: f64) -> StageSpec {
        let pump = make_shape_temporal(
            &ShapeSpec::new(ShapeFamily::Hg0, 1.0 / TAU_P).unwrap(),
            grid(n),
            Band::Pump,
            LAMBDA_P,
        )
        .unwrap();
        let l = 5.0;
        let beta_s = 8.0 / l;
        let beta_r = beta_s + zeta * TAU_P / l;
        StageSpec::new(l, 0.0, beta_s, beta_r, 0.0, pump, 64, 0.0)
            .unwrap()
            .with_effective_strength(gamma_tilde)
            .unwrap()
    }

    #[test]
    fn net_phase_arithmetic() {
        let base = InterstageOps::default();
        assert_abs_diff_eq!(net_phase(&base), 0.0, epsilon = 1e-15);
        let mut equal = base;
        equal.phase_s = 0.7;
        equal.phase_r = 0.7;
        assert_abs_diff_eq!(net_phase(&equal), 0.0, epsilon = 1e-15);
        let mut opposite = base;
        opposite.phase_s = 0.7;
        opposite.phase_r = -0.7;
        assert_abs_diff_eq!(net_phase(&opposite), 1.4, epsilon = 1e-15);
        let mut wrap = base;
        wrap.pump2_phase = 3.0 * std::f64::consts::PI;
        assert_abs_diff_eq!(net_phase(&wrap), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn idle_cascade_only_delays_the_signal() {
        let stage = walkoff_stage(256, 0.0, 6.0).with_gamma(0.0);
        let spec = CascadeSpec::symmetric(stage.clone(), InterstageOps::default()).unwrap();
        let s_in = gaussian_signal(256);
        let out = run_cascade(&spec, &s_in).unwrap();
        assert_abs_diff_eq!(out.ce, 0.0, epsilon = 1e-12);
        // Two advections with no inter-stage undo on the signal band:
        // net shift 2·(β_s − β_p)·L.
        let (c_in, _) = centroid_and_width(&s_in).unwrap();
        let (c_out, _) = centroid_and_width(&out.signal_out).unwrap();
        let expected = 2.0 * (stage.beta_s - stage.beta_p) * stage.length_mm;
        assert_abs_diff_eq!(c_out - c_in, expected, epsilon = 1e-6);
        let undone = apply_delay(&out.signal_out, -expected).unwrap();
        let ov = inner_product(&undone, &s_in).unwrap().norm();
        assert_abs_diff_eq!(ov, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ramsey_bright_and_dark_fringes() {
        let stage = rabi_stage(128, 0.5);
        let s_in = gaussian_signal(128);
        let bright = CascadeSpec::symmetric(stage.clone(), InterstageOps::default()).unwrap();
        let ce_bright = run_cascade(&bright, &s_in).unwrap().ce;
        assert_abs_diff_eq!(ce_bright, 1.0, epsilon = 1e-6);
        let mut dark_ops = InterstageOps::default();
        dark_ops.pump2_phase = std::f64::consts::PI;
        let dark = CascadeSpec::symmetric(stage, dark_ops).unwrap();
        let ce_dark = run_cascade(&dark, &s_in).unwrap().ce;
        assert_abs_diff_eq!(ce_dark, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn ce_depends_on_phases_only_through_net_phase() {
        let stage = walkoff_stage(256, 1.0, 8.0);
        let s_in = gaussian_signal(256);
        let combos = [
            (0.4, 0.0, 0.3),
            (0.0, -0.7, 0.0),
            (1.7, 1.0, 0.0),
            (0.0, 0.0, 0.7),
        ];
        let mut ces = Vec::new();
        for &(phase_s, phase_r, pump2) in &combos {
            let mut ops = InterstageOps::default();
            ops.phase_s = phase_s;
            ops.phase_r = phase_r;
            ops.pump2_phase = pump2;
            assert_abs_diff_eq!(net_phase(&ops), 0.7, epsilon = 1e-12);
            let spec = CascadeSpec::symmetric(stage.clone(), ops).unwrap();
            ces.push(run_cascade(&spec, &s_in).unwrap().ce);
        }
        for ce in &ces[1..] {
            assert_abs_diff_eq!(*ce, ces[0], epsilon = 1e-9);
        }
    }

    #[test]
    fn composed_matrix_matches_run_cascade() {
        let stage = walkoff_stage(128, 0.9, 5.0);
        let mut ops = InterstageOps::default();
        ops.phase_s = 0.3;
        ops.phase_r = -0.2;
        ops.pump2_phase = 0.5;
        ops.transmission_s = 0.9;
        ops.transmission_r = 0.85;
        let spec = CascadeSpec::symmetric(stage, ops).unwrap();
        for basis in [BasisSpec::Delta, BasisSpec::Fourier { n_eff: 96 }] {
            let g = cascade_green(&spec, LAMBDA_S, &basis).unwrap();
            // Random-ish but deterministic test inputs.
            for seed in 0..5u64 {
                let s_in = Envelope::from_fn(grid(128), Band::Signal, LAMBDA_S, |t| {
                    let x = t / TAU_P;
                    C64::from_polar(
                        (-0.5 * x * x).exp(),
                        (seed as f64 + 1.0) * 0.37 * x,
                    )
                })
                .unwrap()
                .normalized()
                .unwrap();
                let direct = run_cascade(&spec, &s_in).unwrap();
                let r_zero = Envelope::zero(grid(128), Band::Register, g.lambda_r_nm).unwrap();
                let (s_g, r_g) = crate::green::apply(&g, &s_in, &r_zero).unwrap();
                let err = s_g
                    .samples()
                    .iter()
                    .zip(direct.signal_out.samples())
                    .chain(r_g.samples().iter().zip(direct.register_out.samples()))
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0_f64, f64::max);
                // The truncated basis carries a small projection error for
                // chirped inputs; the delta basis is exact to round-off.
                let tol = match basis {
                    BasisSpec::Delta => 1e-8,
                    BasisSpec::Fourier { .. } => 1e-4,
                };
                assert!(err < tol, "{basis:?} seed {seed}: err = {err:e}");
            }
        }
    }

    #[test]
    fn lossless_cascade_matrix_is_unitary_and_loss_contracts() {
        use ndarray_linalg::SVD;
        let stage = walkoff_stage(128, 1.1, 5.0);
        let spec = CascadeSpec::symmetric(stage.clone(), InterstageOps::default()).unwrap();
        let g = cascade_green(&spec, LAMBDA_S, &BasisSpec::Delta).unwrap();
        assert!(g.unitarity_defect() < 1e-6);
        let mut lossy_ops = InterstageOps::default();
        lossy_ops.transmission_s = 0.8;
        lossy_ops.transmission_r = 0.95;
        let lossy = CascadeSpec::symmetric(stage, lossy_ops).unwrap();
        let gl = cascade_green(&lossy, LAMBDA_S, &BasisSpec::Delta).unwrap();
        let (_, sv, _) = gl.stacked().svd(false, false).unwrap();
        assert!(sv.iter().all(|&t| t <= 1.0 + 1e-9));
        assert!(sv.iter().any(|&t| t < 0.99));
    }

    /// Mean spacing of upward zero crossings of (y − mean).
    fn fringe_period(table: &[(f64, f64)]) -> f64 {
        let mean = table.iter().map(|&(_, y)| y).sum::<f64>() / table.len() as f64;
        let mut crossings = Vec::new();
        for w in table.windows(2) {
            let (x0, y0) = (w[0].0, w[0].1 - mean);
            let (x1, y1) = (w[1].0, w[1].1 - mean);
            if y0 < 0.0 && y1 >= 0.0 {
                crossings.push(x0 - y0 * (x1 - x0) / (y1 - y0));
            }
        }
        assert!(crossings.len() >= 3, "need several fringes");
        (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64
    }

    #[test]
    fn mirror_scan_periods() {
        let stage = rabi_stage(128, 0.5);
        let spec = CascadeSpec::symmetric(stage, InterstageOps::default()).unwrap();
        let s_in = gaussian_signal(128);
        let lambda_r = register_wavelength_nm(LAMBDA_P, LAMBDA_S);

        let disps: Vec<f64> = (0..400).map(|k| 4.0 * k as f64).collect();
        let s_scan = fringe_scan(&spec, MirrorScan::S, &disps, &s_in).unwrap();
        let p_s = fringe_period(&s_scan);
        assert!(
            (p_s - LAMBDA_S / 2.0).abs() < 0.02 * LAMBDA_S / 2.0,
            "s period = {p_s}"
        );

        let disps_r: Vec<f64> = (0..400).map(|k| 2.0 * k as f64).collect();
        let r_scan = fringe_scan(&spec, MirrorScan::R, &disps_r, &s_in).unwrap();
        let p_r = fringe_period(&r_scan);
        assert!(
            (p_r - lambda_r / 2.0).abs() < 0.02 * lambda_r / 2.0,
            "r period = {p_r}"
        );

        // Matching moves beat at the difference of the band rates, giving
        // a period about twice the r-scan's.
        let both = fringe_scan(&spec, MirrorScan::BothSame, &disps, &s_in).unwrap();
        let p_both = fringe_period(&both);
        let expected_both = 0.5 / (1.0 / lambda_r - 1.0 / LAMBDA_S);
        assert!(
            (p_both - expected_both).abs() < 0.02 * expected_both,
            "both-same period = {p_both}, expected {expected_both}"
        );
        assert!(p_both > 1.9 * p_r);

        // Opposite moves beat at the sum of the rates: period below the
        // r-scan period.
        let fine: Vec<f64> = (0..400).map(|k| 1.5 * k as f64).collect();
        let opp = fringe_scan(&spec, MirrorScan::BothOpposite, &fine, &s_in).unwrap();
        let p_opp = fringe_period(&opp);
        let expected = 0.5 / (1.0 / LAMBDA_S + 1.0 / lambda_r);
        assert!(
            (p_opp - expected).abs() < 0.02 * expected,
            "opposite period = {p_opp}, expected {expected}"
        );
    }

    #[test]
    fn balanced_arms_maximize_register_fringe_visibility() {
        let stage = walkoff_stage(256, 1.0, 8.0);
        let s_in = gaussian_signal(256);
        let balanced =
            CascadeSpec::symmetric(stage.clone(), InterstageOps::default()).unwrap();
        let v_balanced = register_fringe_visibility(&balanced, &s_in).unwrap();
        let mut imbalanced_ops = InterstageOps::default();
        imbalanced_ops.transmission_s = 0.8;
        let imbalanced = CascadeSpec::symmetric(stage, imbalanced_ops).unwrap();
        let v_imbalanced = register_fringe_visibility(&imbalanced, &s_in).unwrap();
        // Multimode interference caps the balanced visibility below 1.
        assert!(v_balanced > 0.85, "v = {v_balanced}");
        assert!(v_imbalanced < v_balanced - 0.005);
    }

    #[test]
    fn two_balanced_stages_beat_one_stage_at_double_energy() {
        // Each stage calibrated to CE 0.5 on the matched input; the
        // single-stage comparison gets the same total pump energy (γ√2).
        // Wider span so the ζ = 10 auto re-overlap delay clears the guard.
        let g = TemporalGrid::centered(384, 60.0 * TAU_P).unwrap();
        let s_in = make_shape_temporal(
            &ShapeSpec::new(ShapeFamily::Hg0, 1.0 / TAU_P).unwrap(),
            g,
            Band::Signal,
            LAMBDA_S,
        )
        .unwrap();
        let pump = make_shape_temporal(
            &ShapeSpec::new(ShapeFamily::Hg0, 1.0 / TAU_P).unwrap(),
            g,
            Band::Pump,
            LAMBDA_P,
        )
        .unwrap();
        let l = 5.0;
        let stage = StageSpec::new(l, 0.0, 8.0 / l, 8.0 / l + 10.0 * TAU_P / l, 0.0, pump, 64, 0.0)
            .unwrap()
            .with_effective_strength(1.0)
            .unwrap();
        let gamma_half = calibrate_gamma(&stage, &s_in, 0.5).unwrap();
        let stage_half = stage.with_gamma(gamma_half);
        let spec = CascadeSpec::symmetric(stage_half.clone(), InterstageOps::default()).unwrap();
        let two_stage = run_cascade(&spec, &s_in).unwrap().ce;
        let single = crate::propagator::conversion_efficiency(
            &stage_half.with_gamma(gamma_half * 2.0_f64.sqrt()),
            &s_in,
        )
        .unwrap();
        assert!(
            two_stage > single,
            "two-stage {two_stage} vs single {single}"
        );
    }
}
