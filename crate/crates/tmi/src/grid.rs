//! Time-axis discretization and the algebra of complex band envelopes.
//!
//! Units: time in fs, wavelengths in nm, envelope amplitude in fs^(-1/2)
//! so that the squared norm is dimensionless.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmiError};
use crate::fft::{fft_in_place, ifft_in_place};

/// Speed of light in nm/fs.
pub const C_NM_PER_FS: f64 = 299.792458;

/// Uniform time-sample axis shared by all envelopes in a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalGrid {
    n_points: usize,
    t_start: f64,
    dt: f64,
}

impl TemporalGrid {
    pub fn new(n_points: usize, t_start: f64, dt: f64) -> Result<Self> {
        if n_points < 8 {
            return Err(TmiError::InvalidParameter(format!(
                "n_points must be >= 8, got {n_points}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() || !t_start.is_finite() {
            return Err(TmiError::InvalidParameter(format!(
                "bad grid geometry: t_start = {t_start}, dt = {dt}"
            )));
        }
        Ok(Self {
            n_points,
            t_start,
            dt,
        })
    }

    /// Grid of `n_points` samples symmetric about t = 0 covering `span_fs`.
    pub fn centered(n_points: usize, span_fs: f64) -> Result<Self> {
        if !(span_fs > 0.0) {
            return Err(TmiError::InvalidParameter(format!(
                "span must be positive, got {span_fs}"
            )));
        }
        let dt = span_fs / n_points as f64;
        Self::new(n_points, -span_fs / 2.0, dt)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Full span n·dt in fs.
    pub fn span(&self) -> f64 {
        self.n_points as f64 * self.dt
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|k| self.time(k))
    }

    /// Angular frequencies (rad/fs) of the conjugate axis, in FFT bin order.
    pub fn angular_frequencies(&self) -> Vec<f64> {
        let n = self.n_points;
        let domega = 2.0 * std::f64::consts::PI / self.span();
        (0..n)
            .map(|k| crate::fft::signed_index(k, n) as f64 * domega)
            .collect()
    }

    fn check_match(&self, other: &TemporalGrid) -> Result<()> {
        if self != other {
            return Err(TmiError::GridMismatch(format!(
                "{self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

/// Frequency band of a pulse envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Pump,
    Signal,
    Register,
}

/// Complex field amplitude of one band on a temporal grid.
#[derive(Clone, Debug)]
pub struct Envelope {
    grid: TemporalGrid,
    band: Band,
    carrier_wavelength_nm: f64,
    samples: Vec<C64>,
}

impl Envelope {
    pub fn new(
        grid: TemporalGrid,
        band: Band,
        carrier_wavelength_nm: f64,
        samples: Vec<C64>,
    ) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(TmiError::InvalidParameter(format!(
                "samples.len() = {} but grid has {} points",
                samples.len(),
                grid.n_points()
            )));
        }
        if !(carrier_wavelength_nm > 0.0) {
            return Err(TmiError::InvalidParameter(format!(
                "carrier wavelength must be positive, got {carrier_wavelength_nm}"
            )));
        }
        Ok(Self {
            grid,
            band,
            carrier_wavelength_nm,
            samples,
        })
    }

    /// Zero envelope on `grid`.
    pub fn zero(grid: TemporalGrid, band: Band, carrier_wavelength_nm: f64) -> Result<Self> {
        Self::new(
            grid,
            band,
            carrier_wavelength_nm,
            vec![C64::new(0.0, 0.0); grid.n_points()],
        )
    }

    /// Build from a real or complex amplitude function of time.
    pub fn from_fn(
        grid: TemporalGrid,
        band: Band,
        carrier_wavelength_nm: f64,
        f: impl Fn(f64) -> C64,
    ) -> Result<Self> {
        let samples = grid.times().map(f).collect();
        Self::new(grid, band, carrier_wavelength_nm, samples)
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn carrier_wavelength_nm(&self) -> f64 {
        self.carrier_wavelength_nm
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn with_band(mut self, band: Band, carrier_wavelength_nm: f64) -> Self {
        self.band = band;
        self.carrier_wavelength_nm = carrier_wavelength_nm;
        self
    }

    /// Σ|e|²·dt.
    pub fn squared_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dt()
    }

    /// Rescale to unit squared norm.
    pub fn normalized(&self) -> Result<Envelope> {
        let n2 = self.squared_norm();
        if n2 <= 0.0 {
            return Err(TmiError::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Envelope {
        let mut out = self.clone();
        for v in out.samples.iter_mut() {
            *v *= c;
        }
        out
    }

    /// Fraction of |e|² at the first/last sample relative to the peak.
    /// Errors when either edge carries more than `tol` of the peak.
    pub fn check_tails(&self, tol: f64) -> Result<()> {
        let peak = self
            .samples
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0_f64, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        let left = self.samples[0].norm_sqr() / peak;
        let right = self.samples[self.samples.len() - 1].norm_sqr() / peak;
        if left >= tol {
            return Err(TmiError::EdgeLeakage {
                edge: "left",
                fraction: left,
            });
        }
        if right >= tol {
            return Err(TmiError::EdgeLeakage {
                edge: "right",
                fraction: right,
            });
        }
        Ok(())
    }
}

/// Discrete inner product Σ conj(a_k)·b_k·dt.
pub fn inner_product(a: &Envelope, b: &Envelope) -> Result<C64> {
    a.grid.check_match(&b.grid)?;
    let acc: C64 = a
        .samples
        .iter()
        .zip(b.samples.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(acc * a.grid.dt())
}

/// Multiply every sample by exp(i·phi).
pub fn apply_phase(e: &Envelope, phi: f64) -> Envelope {
    e.scaled(C64::from_polar(1.0, phi))
}

/// Band-limited delay: returns an envelope approximating e(t − tau).
///
/// Implemented as a spectral phase so sub-sample delays keep full
/// interferometric fidelity. |tau| above 25% of the grid span is rejected
/// to guard against wraparound corrupting the pulse.
pub fn apply_delay(e: &Envelope, tau_fs: f64) -> Result<Envelope> {
    let span = e.grid.span();
    if tau_fs.abs() > 0.25 * span {
        return Err(TmiError::DelayTooLarge {
            tau_fs,
            span_fs: span,
        });
    }
    if tau_fs == 0.0 {
        return Ok(e.clone());
    }
    let mut out = e.clone();
    fft_in_place(&mut out.samples);
    for (v, omega) in out.samples.iter_mut().zip(e.grid.angular_frequencies()) {
        *v *= C64::from_polar(1.0, -omega * tau_fs);
    }
    ifft_in_place(&mut out.samples);
    Ok(out)
}

/// Interferometric phase imparted by a doublepass mirror displacement:
/// ΔΦ = 2π·(2·dL)/λ.
pub fn mirror_displacement_to_phase(dl_nm: f64, lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(TmiError::InvalidParameter(format!(
            "wavelength must be positive, got {lambda_nm}"
        )));
    }
    Ok(4.0 * std::f64::consts::PI * dl_nm / lambda_nm)
}

/// Intensity-weighted mean time and RMS width of |e(t)|².
pub fn centroid_and_width(e: &Envelope) -> Result<(f64, f64)> {
    let mut w_sum = 0.0;
    let mut t_sum = 0.0;
    for (k, v) in e.samples.iter().enumerate() {
        let w = v.norm_sqr();
        w_sum += w;
        t_sum += w * e.grid.time(k);
    }
    if w_sum <= 0.0 {
        return Err(TmiError::ZeroNorm);
    }
    let mean = t_sum / w_sum;
    let mut var = 0.0;
    for (k, v) in e.samples.iter().enumerate() {
        let d = e.grid.time(k) - mean;
        var += v.norm_sqr() * d * d;
    }
    Ok((mean, (var / w_sum).sqrt()))
}
