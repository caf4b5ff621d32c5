//! Shared helpers for the integration suites: an independent reference
//! integrator for the coupled equations, a deterministic RNG, and small
//! curve utilities.

use num_complex::Complex64 as C64;

use tmi::fft::{fft_in_place, ifft_in_place};
use tmi::grid::{Band, Envelope, TemporalGrid};
use tmi::propagator::StageSpec;

/// xorshift64* — deterministic, dependency-free uniform doubles in [0,1).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.max(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        let y = x.wrapping_mul(0x2545F4914F6CDD1D);
        (y >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// f(t) -> f(t − tau) by spectral phase, no wraparound guard (the caller
/// controls the geometry here).
fn shift(samples: &mut [C64], grid: &TemporalGrid, tau: f64) {
    if tau == 0.0 {
        return;
    }
    fft_in_place(samples);
    for (v, omega) in samples.iter_mut().zip(grid.angular_frequencies()) {
        *v *= C64::from_polar(1.0, -omega * tau);
    }
    ifft_in_place(samples);
}

/// Reference solution of the two-band coupled equations by the method of
/// characteristics: in the co-moving coordinates of each band the
/// advection disappears exactly (spectral shifts move between frames),
/// and the remaining coupling ODE in z is integrated with classical RK4.
/// Shares nothing with the production split-step scheme except the FFT
/// primitive.
pub fn characteristics_rk4(
    stage: &StageSpec,
    signal_in: &Envelope,
    n_steps: usize,
) -> (Envelope, Envelope) {
    let grid = *signal_in.grid();
    let n = grid.n_points();
    let a_s = stage.beta_s - stage.beta_p;
    let a_r = stage.beta_r - stage.beta_p;
    let pump: Vec<C64> = stage
        .pump
        .samples()
        .iter()
        .map(|&p| p * C64::from_polar(1.0, stage.pump_phase))
        .collect();
    let gamma = stage.gamma;

    // State in characteristic coordinates: b_j(z, u) = a_j(z, u + a_j z).
    let mut b_s: Vec<C64> = signal_in.samples().to_vec();
    let mut b_r: Vec<C64> = vec![C64::new(0.0, 0.0); n];

    let rhs = |z: f64, b_s: &[C64], b_r: &[C64]| -> (Vec<C64>, Vec<C64>) {
        // Back to the lab frame of this z-slice.
        let mut f_s = b_s.to_vec();
        let mut f_r = b_r.to_vec();
        shift(&mut f_s, &grid, a_s * z);
        shift(&mut f_r, &grid, a_r * z);
        let mut d_s: Vec<C64> = (0..n)
            .map(|k| C64::new(0.0, 1.0) * gamma * pump[k].conj() * f_r[k])
            .collect();
        let mut d_r: Vec<C64> = (0..n)
            .map(|k| C64::new(0.0, 1.0) * gamma * pump[k] * f_s[k])
            .collect();
        shift(&mut d_s, &grid, -a_s * z);
        shift(&mut d_r, &grid, -a_r * z);
        (d_s, d_r)
    };

    let h = stage.length_mm / n_steps as f64;
    let axpy = |y: &[C64], k: &[C64], c: f64| -> Vec<C64> {
        y.iter().zip(k).map(|(&a, &b)| a + c * b).collect()
    };
    for i in 0..n_steps {
        let z = i as f64 * h;
        let (k1s, k1r) = rhs(z, &b_s, &b_r);
        let (k2s, k2r) = rhs(z + 0.5 * h, &axpy(&b_s, &k1s, 0.5 * h), &axpy(&b_r, &k1r, 0.5 * h));
        let (k3s, k3r) = rhs(z + 0.5 * h, &axpy(&b_s, &k2s, 0.5 * h), &axpy(&b_r, &k2r, 0.5 * h));
        let (k4s, k4r) = rhs(z + h, &axpy(&b_s, &k3s, h), &axpy(&b_r, &k3r, h));
        for k in 0..n {
            b_s[k] += h / 6.0 * (k1s[k] + 2.0 * k2s[k] + 2.0 * k3s[k] + k4s[k]);
            b_r[k] += h / 6.0 * (k1r[k] + 2.0 * k2r[k] + 2.0 * k3r[k] + k4r[k]);
        }
    }
    // Leave the characteristic frames.
    let l = stage.length_mm;
    shift(&mut b_s, &grid, a_s * l);
    shift(&mut b_r, &grid, a_r * l);
    let lambda_s = signal_in.carrier_wavelength_nm();
    let lambda_r = tmi::propagator::register_wavelength_nm(
        stage.pump.carrier_wavelength_nm(),
        lambda_s,
    );
    let s = Envelope::new(grid, Band::Signal, lambda_s, b_s).unwrap();
    let r = Envelope::new(grid, Band::Register, lambda_r, b_r).unwrap();
    (s, r)
}

/// L2 distance between two envelopes over both bands.
pub fn band_pair_distance(
    a: &(Envelope, Envelope),
    b: &(Envelope, Envelope),
) -> f64 {
    let dt = a.0.grid().dt();
    let mut acc = 0.0;
    for (x, y) in [(&a.0, &b.0), (&a.1, &b.1)] {
        for (u, v) in x.samples().iter().zip(y.samples()) {
            acc += (u - v).norm_sqr();
        }
    }
    (acc * dt).sqrt()
}

/// Fringe period of a sampled oscillatory curve: mean spacing of upward
/// crossings of the curve's mean value.
pub fn fringe_period(table: &[(f64, f64)]) -> f64 {
    let mean = table.iter().map(|&(_, y)| y).sum::<f64>() / table.len() as f64;
    let mut crossings = Vec::new();
    for w in table.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if y0 < mean && y1 >= mean {
            crossings.push(x0 + (mean - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    assert!(
        crossings.len() >= 2,
        "need at least two upward crossings, got {}",
        crossings.len()
    );
    (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64
}
