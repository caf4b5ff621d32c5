//! Thin wrapper over rustfft with a per-thread plan cache.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn with_plan(n: usize, inverse: bool, buf: &mut [C64]) {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let plan = cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone();
        plan.process(buf);
    });
}

/// Unnormalized forward DFT, in place.
pub fn fft_in_place(buf: &mut [C64]) {
    with_plan(buf.len(), false, buf);
}

/// Inverse DFT normalized by 1/n, in place.
pub fn ifft_in_place(buf: &mut [C64]) {
    let n = buf.len();
    with_plan(n, true, buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed FFT bin index for bin `k` of an `n`-point transform.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
