//! Finite-difference stencils shared by trace extraction, the FD oracle,
//! and the diagnostics layer.
//!
//! Boundary derivatives use one-sided stencils exact through cubics
//! (first derivative) and quartics (second derivative), so trace error is
//! O(h^3) and does not dominate the second-order solvers.

/// One-sided first derivative at the left end, 4 points, order 3.
pub fn d1_left(f: &[f64], h: f64) -> f64 {
    (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * h)
}

/// One-sided first derivative at the right end, 4 points, order 3.
pub fn d1_right(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    (11.0 * f[n - 1] - 18.0 * f[n - 2] + 9.0 * f[n - 3] - 2.0 * f[n - 4]) / (6.0 * h)
}

/// One-sided second derivative at the left end, 5 points, order 3.
pub fn d2_left(f: &[f64], h: f64) -> f64 {
    (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4]) / (12.0 * h * h)
}

/// One-sided second derivative at the right end, 5 points, order 3.
pub fn d2_right(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    (35.0 * f[n - 1] - 104.0 * f[n - 2] + 114.0 * f[n - 3] - 56.0 * f[n - 4] + 11.0 * f[n - 5])
        / (12.0 * h * h)
}

/// Coefficient rows for the one-sided stencils, as (offset, coeff/h^order)
/// pairs; used by the FD oracle to assemble boundary constraint rows.
pub fn d1_left_coeffs(h: f64) -> [(usize, f64); 4] {
    let s = 1.0 / (6.0 * h);
    [(0, -11.0 * s), (1, 18.0 * s), (2, -9.0 * s), (3, 2.0 * s)]
}

pub fn d2_left_coeffs(h: f64) -> [(usize, f64); 5] {
    let s = 1.0 / (12.0 * h * h);
    [(0, 35.0 * s), (1, -104.0 * s), (2, 114.0 * s), (3, -56.0 * s), (4, 11.0 * s)]
}

/// Offsets counted backwards from the last node.
pub fn d1_right_coeffs(h: f64) -> [(usize, f64); 4] {
    let s = 1.0 / (6.0 * h);
    [(0, 11.0 * s), (1, -18.0 * s), (2, 9.0 * s), (3, -2.0 * s)]
}

pub fn d2_right_coeffs(h: f64) -> [(usize, f64); 5] {
    let s = 1.0 / (12.0 * h * h);
    [(0, 35.0 * s), (1, -104.0 * s), (2, 114.0 * s), (3, -56.0 * s), (4, 11.0 * s)]
}

/// Centered first derivative of a sampled signal, 4th order in the interior,
/// the one-sided order-3 stencils at the ends. Needs len >= 5.
pub fn derivative_signal(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5);
    let mut out = vec![0.0; n];
    out[0] = d1_left(f, h);
    out[1] = (f[2] - f[0]) / (2.0 * h);
    for i in 2..n - 2 {
        out[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
    }
    out[n - 2] = (f[n - 1] - f[n - 3]) / (2.0 * h);
    out[n - 1] = d1_right(f, h);
    out
}

/// Second derivative of a sampled signal: 4th-order centered interior,
/// order-3 one-sided ends. Needs len >= 5.
pub fn second_derivative_signal(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5);
    let h2 = h * h;
    let mut out = vec![0.0; n];
    out[0] = d2_left(f, h);
    out[1] = (f[2] - 2.0 * f[1] + f[0]) / h2;
    for i in 2..n - 2 {
        out[i] =
            (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) / (12.0 * h2);
    }
    out[n - 2] = (f[n - 1] - 2.0 * f[n - 2] + f[n - 3]) / h2;
    out[n - 1] = d2_right(f, h);
    out
}

/// Centered third derivative, 5 points, order 2: interior nodes only.
#[inline]
pub fn d3_centered(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i - 2] + 2.0 * f[i - 1] - 2.0 * f[i + 1] + f[i + 2]) / (2.0 * h.powi(3))
}

/// Third derivative biased one node off the left boundary (uses i-1..i+3), order 2.
#[inline]
pub fn d3_biased_left(f: &[f64], i: usize, h: f64) -> f64 {
    (-3.0 * f[i - 1] + 10.0 * f[i] - 12.0 * f[i + 1] + 6.0 * f[i + 2] - f[i + 3])
        / (2.0 * h.powi(3))
}

/// Third derivative biased one node off the right boundary (uses i-3..i+1), order 2.
#[inline]
pub fn d3_biased_right(f: &[f64], i: usize, h: f64) -> f64 {
    (3.0 * f[i + 1] - 10.0 * f[i] + 12.0 * f[i - 1] - 6.0 * f[i - 2] + f[i - 3])
        / (2.0 * h.powi(3))
}
