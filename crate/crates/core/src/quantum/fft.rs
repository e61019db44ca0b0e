//! Thin wrappers over `rustfft` with a per-thread plan cache.

use std::cell::RefCell;

use rustfft::FftPlanner;

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT, in place.
pub fn forward(data: &mut [C64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(data.len()).process(data));
}

/// Inverse DFT including the `1/n` factor, in place.
pub fn inverse(data: &mut [C64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(data.len()).process(data));
    let s = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|a| *a *= s);
}
