//! Pump/signal temporal-mode shapes: the modified Hermite-Gaussian family
//! plus general Gaussian/HG orders, normalized on a given grid.
//!
//! The width-modification constants on HG1/HG2 are fixed by the source
//! shapes: HG1 uses 0.8Δω in both polynomial and exponent, HG2 uses
//! 0.89Δω in the polynomial and 0.8078Δω in the exponent. The bare ω in
//! the polynomial prefactors is read as detuning from the band center,
//! which is the only reading that keeps the shapes pulse-like.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmiError};
use crate::fft::ifft_in_place;
use crate::grid::{Band, Envelope, TemporalGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    Hg0,
    Hg1,
    Hg2,
    Gaussian,
    HermiteGauss(u32),
}

/// A temporal-mode shape: family plus bandwidth parameter Δω (rad/fs).
///
/// Shapes are produced in the band's rotating frame, i.e. as functions of
/// detuning from the carrier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeSpec {
    pub family: ShapeFamily,
    pub delta_omega: f64,
}

impl ShapeSpec {
    pub fn new(family: ShapeFamily, delta_omega: f64) -> Result<Self> {
        if !(delta_omega > 0.0) || !delta_omega.is_finite() {
            return Err(TmiError::InvalidParameter(format!(
                "delta_omega must be positive, got {delta_omega}"
            )));
        }
        Ok(Self {
            family,
            delta_omega,
        })
    }

    /// Δω of a Gaussian pulse with amplitude duration τ (Δω = 1/τ).
    pub fn hg(index: u32, delta_omega: f64) -> Result<Self> {
        let family = match index {
            0 => ShapeFamily::Hg0,
            1 => ShapeFamily::Hg1,
            2 => ShapeFamily::Hg2,
            n => ShapeFamily::HermiteGauss(n),
        };
        Self::new(family, delta_omega)
    }

    /// Unnormalized spectral amplitude at detuning `omega`.
    fn eval(&self, omega: f64) -> f64 {
        let dw = self.delta_omega;
        match self.family {
            ShapeFamily::Hg0 | ShapeFamily::Gaussian => (-(omega * omega) / (2.0 * dw * dw)).exp(),
            ShapeFamily::Hg1 => {
                let w = 0.8 * dw;
                (omega / w) * (-(omega * omega) / (2.0 * w * w)).exp()
            }
            ShapeFamily::Hg2 => {
                let wp = 0.89 * dw;
                let we = 0.8078 * dw;
                (2.0 * (omega / wp).powi(2) - 1.0) * (-(omega * omega) / (2.0 * we * we)).exp()
            }
            ShapeFamily::HermiteGauss(n) => {
                hermite(n, omega / dw) * (-(omega * omega) / (2.0 * dw * dw)).exp()
            }
        }
    }
}

/// Physicists' Hermite polynomial H_n(x).
fn hermite(n: u32, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Spectral amplitude table on the given detuning axis, numerically
/// normalized so Σ|·|²·dω = 1. The axis must be uniformly spaced.
pub fn make_shape_spectral(spec: &ShapeSpec, omega_axis: &[f64]) -> Result<Vec<f64>> {
    if omega_axis.len() < 2 {
        return Err(TmiError::InvalidParameter(
            "frequency axis needs at least two samples".into(),
        ));
    }
    let domega = (omega_axis[1] - omega_axis[0]).abs();
    if !(domega > 0.0) {
        return Err(TmiError::InvalidParameter(
            "frequency axis must be strictly monotone".into(),
        ));
    }
    let mut vals: Vec<f64> = omega_axis.iter().map(|&w| spec.eval(w)).collect();
    let norm2: f64 = vals.iter().map(|v| v * v).sum::<f64>() * domega;
    if norm2 <= 0.0 {
        return Err(TmiError::ZeroNorm);
    }
    let s = 1.0 / norm2.sqrt();
    for v in vals.iter_mut() {
        *v *= s;
    }
    Ok(vals)
}

/// Time-domain counterpart on `grid`, obtained by Fourier transform of the
/// spectral shape and normalized in the discrete inner product. The pulse
/// is centered at t = 0. Errors if the intensity tails at the grid edges
/// exceed 1e-10 of the peak.
pub fn make_shape_temporal(
    spec: &ShapeSpec,
    grid: TemporalGrid,
    band: Band,
    carrier_wavelength_nm: f64,
) -> Result<Envelope> {
    let omegas = grid.angular_frequencies();
    let mut buf: Vec<C64> = omegas
        .iter()
        // Phase factor places t = 0 at the correct grid sample.
        .map(|&w| C64::from_polar(spec.eval(w), w * grid.t_start()))
        .collect();
    ifft_in_place(&mut buf);
    let env = Envelope::new(grid, band, carrier_wavelength_nm, buf)?.normalized()?;
    env.check_tails(1e-10)?;
    Ok(env)
}
