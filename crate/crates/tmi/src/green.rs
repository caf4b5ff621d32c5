//! Discretized input→output scattering matrix of a stage: the four band
//! blocks G_ss, G_sr, G_rs, G_rr in an orthonormal discrete basis.
//!
//! Two bases are supported. The delta basis e_k = δ_k/√dt is assembled by
//! propagating every basis column. The Fourier-restricted basis keeps the
//! `n_eff` lowest-|ω| plane waves; there the per-step split operator is a
//! fixed matrix (diagonal advection times a Toeplitz rotation block), so
//! the stage matrix is its `n_z_steps`-th power, computed by repeated
//! squaring. Both agree on in-band inputs.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, TmiError};
use crate::fft::{fft_in_place, ifft_in_place};
use crate::grid::{Band, Envelope, TemporalGrid};
use crate::propagator::{register_wavelength_nm, StageSpec, StepTables};

/// Basis selection for assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisSpec {
    /// Full delta basis, one column per grid sample.
    Delta,
    /// Fourier-restricted basis spanning the `n_eff` lowest frequencies.
    Fourier { n_eff: usize },
}

/// The basis a Green function is expressed in.
#[derive(Clone, Debug, PartialEq)]
pub enum GreenBasis {
    Delta,
    /// Signed FFT bin indices of the kept plane waves, ascending.
    Fourier { kept: Vec<i64> },
}

impl GreenBasis {
    fn from_spec(spec: &BasisSpec, n: usize) -> Result<GreenBasis> {
        match *spec {
            BasisSpec::Delta => Ok(GreenBasis::Delta),
            BasisSpec::Fourier { n_eff } => {
                if n_eff < 2 || n_eff > n {
                    return Err(TmiError::InvalidParameter(format!(
                        "n_eff must be in [2, n_points], got {n_eff}"
                    )));
                }
                let lo = -(n_eff as i64) / 2;
                Ok(GreenBasis::Fourier {
                    kept: (lo..lo + n_eff as i64).collect(),
                })
            }
        }
    }

    pub fn n_basis(&self, n_grid: usize) -> usize {
        match self {
            GreenBasis::Delta => n_grid,
            GreenBasis::Fourier { kept } => kept.len(),
        }
    }
}

/// Two-band input→output scattering matrix of a stage or cascade.
#[derive(Clone, Debug)]
pub struct GreenFunction {
    pub grid: TemporalGrid,
    pub lambda_s_nm: f64,
    pub lambda_r_nm: f64,
    pub basis: GreenBasis,
    pub g_ss: Array2<C64>,
    pub g_sr: Array2<C64>,
    pub g_rs: Array2<C64>,
    pub g_rr: Array2<C64>,
}

impl GreenFunction {
    pub fn n_basis(&self) -> usize {
        self.g_ss.nrows()
    }

    /// Identity scattering (no medium) in the delta basis.
    pub fn identity(grid: TemporalGrid, lambda_s_nm: f64, lambda_r_nm: f64) -> GreenFunction {
        let n = grid.n_points();
        GreenFunction {
            grid,
            lambda_s_nm,
            lambda_r_nm,
            basis: GreenBasis::Delta,
            g_ss: Array2::eye(n).mapv(|v: f64| C64::new(v, 0.0)),
            g_sr: Array2::zeros((n, n)),
            g_rs: Array2::zeros((n, n)),
            g_rr: Array2::eye(n).mapv(|v: f64| C64::new(v, 0.0)),
        }
    }

    /// Stacked 2m×2m matrix [[G_ss, G_sr], [G_rs, G_rr]].
    pub fn stacked(&self) -> Array2<C64> {
        let m = self.n_basis();
        let mut out = Array2::zeros((2 * m, 2 * m));
        out.slice_mut(s![..m, ..m]).assign(&self.g_ss);
        out.slice_mut(s![..m, m..]).assign(&self.g_sr);
        out.slice_mut(s![m.., ..m]).assign(&self.g_rs);
        out.slice_mut(s![m.., m..]).assign(&self.g_rr);
        out
    }

    pub fn from_stacked(
        grid: TemporalGrid,
        lambda_s_nm: f64,
        lambda_r_nm: f64,
        basis: GreenBasis,
        stacked: &Array2<C64>,
    ) -> GreenFunction {
        let m = stacked.nrows() / 2;
        GreenFunction {
            grid,
            lambda_s_nm,
            lambda_r_nm,
            basis,
            g_ss: stacked.slice(s![..m, ..m]).to_owned(),
            g_sr: stacked.slice(s![..m, m..]).to_owned(),
            g_rs: stacked.slice(s![m.., ..m]).to_owned(),
            g_rr: stacked.slice(s![m.., m..]).to_owned(),
        }
    }

    /// max |(G†G − I)_ij| over the stacked matrix.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.stacked();
        let gh = conj_transpose(&g);
        let prod = gh.dot(&g);
        let m = prod.nrows();
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let expect = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = worst.max((prod[[i, j]] - expect).norm());
            }
        }
        worst
    }

    /// Expansion coefficients of an envelope in this basis.
    pub fn coefficients(&self, e: &Envelope) -> Result<Array1<C64>> {
        if e.grid() != &self.grid {
            return Err(TmiError::GridMismatch(
                "envelope grid differs from Green-function grid".into(),
            ));
        }
        Ok(analysis(&self.basis, &self.grid, e.samples()))
    }

    /// Synthesize an envelope from coefficients in this basis.
    pub fn envelope_from_coefficients(
        &self,
        coeffs: &Array1<C64>,
        band: Band,
        lambda_nm: f64,
    ) -> Result<Envelope> {
        let samples = synthesis(&self.basis, &self.grid, coeffs);
        Envelope::new(self.grid, band, lambda_nm, samples)
    }
}

/// Synthesize an envelope from basis coefficients without a full matrix.
pub fn envelope_from_basis(
    grid: TemporalGrid,
    basis: &GreenBasis,
    coeffs: &Array1<C64>,
    band: Band,
    lambda_nm: f64,
) -> Result<Envelope> {
    Envelope::new(grid, band, lambda_nm, synthesis(basis, &grid, coeffs))
}

pub(crate) fn conj_transpose(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|v| v.conj())
}

fn analysis(basis: &GreenBasis, grid: &TemporalGrid, samples: &[C64]) -> Array1<C64> {
    let n = grid.n_points();
    let dt = grid.dt();
    match basis {
        GreenBasis::Delta => samples.iter().map(|v| v * dt.sqrt()).collect(),
        GreenBasis::Fourier { kept } => {
            let mut buf = samples.to_vec();
            fft_in_place(&mut buf);
            let scale = (dt / n as f64).sqrt();
            kept.iter()
                .map(|&k| buf[k.rem_euclid(n as i64) as usize] * scale)
                .collect()
        }
    }
}

fn synthesis(basis: &GreenBasis, grid: &TemporalGrid, coeffs: &Array1<C64>) -> Vec<C64> {
    let n = grid.n_points();
    let dt = grid.dt();
    match basis {
        GreenBasis::Delta => coeffs.iter().map(|v| v / dt.sqrt()).collect(),
        GreenBasis::Fourier { kept } => {
            let mut buf = vec![C64::new(0.0, 0.0); n];
            for (&k, &c) in kept.iter().zip(coeffs.iter()) {
                buf[k.rem_euclid(n as i64) as usize] = c;
            }
            ifft_in_place(&mut buf);
            let scale = (n as f64 / dt).sqrt();
            for v in buf.iter_mut() {
                *v *= scale;
            }
            buf
        }
    }
}

/// Assemble the scattering matrix of `stage`.
pub fn assemble(stage: &StageSpec, lambda_s_nm: f64, basis: &BasisSpec) -> Result<GreenFunction> {
    stage.pump.check_tails(1e-10)?;
    let grid = *stage.pump.grid();
    let lambda_r = register_wavelength_nm(stage.pump.carrier_wavelength_nm(), lambda_s_nm);
    let green_basis = GreenBasis::from_spec(basis, grid.n_points())?;
    let (g_ss, g_sr, g_rs, g_rr) = match &green_basis {
        GreenBasis::Delta => assemble_delta(stage),
        GreenBasis::Fourier { kept } => assemble_fourier(stage, kept),
    };
    Ok(GreenFunction {
        grid,
        lambda_s_nm,
        lambda_r_nm: lambda_r,
        basis: green_basis,
        g_ss,
        g_sr,
        g_rs,
        g_rr,
    })
}

type Blocks = (Array2<C64>, Array2<C64>, Array2<C64>, Array2<C64>);

/// Column-by-column assembly: column k of [G_ss; G_rs] is the propagated
/// delta basis vector e_k fed into the signal port (likewise register).
/// Columns are independent; execution order cannot affect the result.
fn assemble_delta(stage: &StageSpec) -> Blocks {
    let n = stage.pump.grid().n_points();
    let tables = StepTables::new(stage);
    let columns: Vec<(Vec<C64>, Vec<C64>)> = (0..2 * n)
        .into_par_iter()
        .map(|j| {
            let mut sv = vec![C64::new(0.0, 0.0); n];
            let mut rv = vec![C64::new(0.0, 0.0); n];
            if j < n {
                sv[j] = C64::new(1.0, 0.0);
            } else {
                rv[j - n] = C64::new(1.0, 0.0);
            }
            tables.run(&mut sv, &mut rv);
            (sv, rv)
        })
        .collect();
    let mut g_ss = Array2::zeros((n, n));
    let mut g_sr = Array2::zeros((n, n));
    let mut g_rs = Array2::zeros((n, n));
    let mut g_rr = Array2::zeros((n, n));
    for (j, (sv, rv)) in columns.into_iter().enumerate() {
        for i in 0..n {
            if j < n {
                g_ss[[i, j]] = sv[i];
                g_rs[[i, j]] = rv[i];
            } else {
                g_sr[[i, j - n]] = sv[i];
                g_rr[[i, j - n]] = rv[i];
            }
        }
    }
    (g_ss, g_sr, g_rs, g_rr)
}

/// Toeplitz matrix of pointwise multiplication by `f` restricted to the
/// kept plane waves: M[m, m'] = DFT(f)[(k_m − k_m') mod n] / n.
fn multiplication_operator(f_dft: &[C64], kept: &[i64]) -> Array2<C64> {
    let n = f_dft.len() as i64;
    let m = kept.len();
    let scale = 1.0 / n as f64;
    Array2::from_shape_fn((m, m), |(i, j)| {
        f_dft[(kept[i] - kept[j]).rem_euclid(n) as usize] * scale
    })
}

/// Matrix power by binary exponentiation.
fn matrix_power(t: &Array2<C64>, mut n: usize) -> Array2<C64> {
    let m = t.nrows();
    let mut result = Array2::eye(m).mapv(|v: f64| C64::new(v, 0.0));
    let mut base = t.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = result.dot(&base);
        }
        n >>= 1;
        if n > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// Fourier-restricted assembly: the split step is D·R with D diagonal
/// advection and R the (fixed) rotation operator, so the stage matrix is
/// D^{-1/2} (D·R)^N D^{1/2}.
fn assemble_fourier(stage: &StageSpec, kept: &[i64]) -> Blocks {
    let grid = stage.pump.grid();
    let m = kept.len();
    let dz = stage.length_mm / stage.n_z_steps as f64;
    let a_s = stage.beta_s - stage.beta_p;
    let a_r = stage.beta_r - stage.beta_p;
    let domega = 2.0 * std::f64::consts::PI / grid.span();

    let tables = StepTables::new(stage);
    let mut cos_dft: Vec<C64> = tables.cos_theta.iter().map(|&c| C64::new(c, 0.0)).collect();
    let mut u_dft = tables.u.clone();
    let mut ubar_dft: Vec<C64> = tables.u.iter().map(|v| v.conj()).collect();
    fft_in_place(&mut cos_dft);
    fft_in_place(&mut u_dft);
    fft_in_place(&mut ubar_dft);

    let c_op = multiplication_operator(&cos_dft, kept);
    let u_op = multiplication_operator(&u_dft, kept);
    let ubar_op = multiplication_operator(&ubar_dft, kept);

    // Stacked one-step operator T = D·R.
    let mut t = Array2::zeros((2 * m, 2 * m));
    {
        let d = |a: f64, i: usize| {
            C64::from_polar(1.0, -(kept[i] as f64) * domega * a * dz)
        };
        for i in 0..m {
            let ds = d(a_s, i);
            let dr = d(a_r, i);
            for j in 0..m {
                t[[i, j]] = ds * c_op[[i, j]];
                t[[i, m + j]] = -ds * ubar_op[[i, j]];
                t[[m + i, j]] = dr * u_op[[i, j]];
                t[[m + i, m + j]] = dr * c_op[[i, j]];
            }
        }
    }
    let mut g = matrix_power(&t, stage.n_z_steps);
    // Strang endpoints: G = D^{-1/2}·T^N·D^{1/2}.
    for i in 0..2 * m {
        let (a, idx) = if i < m { (a_s, i) } else { (a_r, i - m) };
        let half = C64::from_polar(1.0, -(kept[idx] as f64) * domega * a * dz * 0.5);
        for j in 0..2 * m {
            g[[i, j]] *= half.conj();
        }
    }
    for j in 0..2 * m {
        let (a, idx) = if j < m { (a_s, j) } else { (a_r, j - m) };
        let half = C64::from_polar(1.0, -(kept[idx] as f64) * domega * a * dz * 0.5);
        for i in 0..2 * m {
            g[[i, j]] *= half;
        }
    }
    (
        g.slice(s![..m, ..m]).to_owned(),
        g.slice(s![..m, m..]).to_owned(),
        g.slice(s![m.., ..m]).to_owned(),
        g.slice(s![m.., m..]).to_owned(),
    )
}

/// Apply the scattering matrix to a pair of input envelopes.
pub fn apply(
    g: &GreenFunction,
    signal_in: &Envelope,
    register_in: &Envelope,
) -> Result<(Envelope, Envelope)> {
    let cs = g.coefficients(signal_in)?;
    let cr = g.coefficients(register_in)?;
    let out_s = g.g_ss.dot(&cs) + g.g_sr.dot(&cr);
    let out_r = g.g_rs.dot(&cs) + g.g_rr.dot(&cr);
    Ok((
        g.envelope_from_coefficients(&out_s, Band::Signal, g.lambda_s_nm)?,
        g.envelope_from_coefficients(&out_r, Band::Register, g.lambda_r_nm)?,
    ))
}

/// First-order (perturbative) conversion kernel: register-out from
/// signal-in, exactly linear in γ.
#[derive(Clone, Debug)]
pub struct ConversionKernel {
    pub grid: TemporalGrid,
    pub basis: GreenBasis,
    pub matrix: Array2<C64>,
}

/// Build the first-order kernel by line-integrating the pump along the
/// characteristic connecting the signal ray at z to the register ray at L:
///   K = iγ e^{iφ₀} ∫₀^L dz  p(t − a_r(L−z)) ∘ Shift(a_r(L−z) + a_s z),
/// evaluated by midpoint quadrature in the Fourier-restricted basis.
pub fn first_order_kernel(stage: &StageSpec, basis: &BasisSpec) -> Result<ConversionKernel> {
    let grid = *stage.pump.grid();
    let n = grid.n_points();
    let green_basis = GreenBasis::from_spec(basis, n)?;
    let kept: Vec<i64> = match &green_basis {
        GreenBasis::Delta => (0..n).map(|k| crate::fft::signed_index(k, n)).collect(),
        GreenBasis::Fourier { kept } => kept.clone(),
    };
    let m = kept.len();
    let domega = 2.0 * std::f64::consts::PI / grid.span();
    let a_s = stage.beta_s - stage.beta_p;
    let a_r = stage.beta_r - stage.beta_p;
    let l = stage.length_mm;
    let n_z = stage.n_z_steps;
    let dz = l / n_z as f64;

    let mut pump_dft = stage.pump.samples().to_vec();
    fft_in_place(&mut pump_dft);

    let omega_of = |k: i64| crate::fft::signed_index(k.rem_euclid(n as i64) as usize, n) as f64 * domega;

    let mut kernel: Array2<C64> = Array2::zeros((m, m));
    for step in 0..n_z {
        let z = (step as f64 + 0.5) * dz;
        let lag = a_r * (l - z);
        let shift = lag + a_s * z;
        for i in 0..m {
            for j in 0..m {
                let dk = kept[i] - kept[j];
                let w_diff = omega_of(dk);
                let pv = pump_dft[dk.rem_euclid(n as i64) as usize]
                    * C64::from_polar(1.0, -w_diff * lag);
                let sh = C64::from_polar(1.0, -(kept[j] as f64) * domega * shift);
                kernel[[i, j]] += pv * sh;
            }
        }
    }
    let prefactor =
        C64::new(0.0, 1.0) * C64::from_polar(stage.gamma * dz / n as f64, stage.pump_phase);
    kernel.mapv_inplace(|v| v * prefactor);

    // In the delta basis the kernel transforms as W† K W with W = DFT/√n.
    let matrix = match &green_basis {
        GreenBasis::Delta => {
            let mut k = kernel;
            // Left: W† K  (inverse DFT of every column, times √n).
            for mut col in k.columns_mut() {
                let mut buf: Vec<C64> = col.iter().cloned().collect();
                ifft_in_place(&mut buf);
                let sn = (n as f64).sqrt();
                for (dst, v) in col.iter_mut().zip(buf) {
                    *dst = v * sn;
                }
            }
            // Right: (W† K) W  (forward DFT of every row, over √n).
            for mut row in k.rows_mut() {
                let mut buf: Vec<C64> = row.iter().cloned().collect();
                fft_in_place(&mut buf);
                let sn = (n as f64).sqrt();
                for (dst, v) in row.iter_mut().zip(buf) {
                    *dst = v / sn;
                }
            }
            k
        }
        GreenBasis::Fourier { .. } => kernel,
    };
    Ok(ConversionKernel {
        grid,
        basis: green_basis,
        matrix,
    })
}
