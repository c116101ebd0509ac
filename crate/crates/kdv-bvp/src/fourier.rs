//! Shared FFT plumbing (plan cache around rustfft).

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

struct Plans {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

static PLANS: Lazy<Mutex<Plans>> = Lazy::new(|| {
    Mutex::new(Plans { planner: FftPlanner::new(), forward: HashMap::new(), inverse: HashMap::new() })
});

pub fn fft_forward(buf: &mut [Complex64]) {
    let plan = {
        let mut p = PLANS.lock().unwrap();
        let n = buf.len();
        if !p.forward.contains_key(&n) {
            let f = p.planner.plan_fft_forward(n);
            p.forward.insert(n, f);
        }
        p.forward[&n].clone()
    };
    plan.process(buf);
}

/// Unnormalized inverse; divide by len for the round trip.
pub fn fft_inverse(buf: &mut [Complex64]) {
    let plan = {
        let mut p = PLANS.lock().unwrap();
        let n = buf.len();
        if !p.inverse.contains_key(&n) {
            let f = p.planner.plan_fft_inverse(n);
            p.inverse.insert(n, f);
        }
        p.inverse[&n].clone()
    };
    plan.process(buf);
}

/// Signed angular frequency of DFT bin k on an n-point grid with spacing d.
#[inline]
pub fn bin_frequency(k: usize, n: usize, d: f64) -> f64 {
    let k = k as isize;
    let n_i = n as isize;
    let signed = if k <= n_i / 2 { k } else { k - n_i };
    2.0 * std::f64::consts::PI * signed as f64 / (n as f64 * d)
}
