//! Discrete Sobolev norms and Kato-smoothing diagnostics.
//!
//! Space norms at general s in [0,3] use half-range spectral coefficients
//! (sine series when the signal vanishes at both endpoints, cosine series
//! otherwise) with weights (1 + wavenumber^2)^s. Time norms realize the
//! Plancherel definition on the zero-extended signal with weights
//! (1 + mu^2)^sigma, negative sigma included (dual weighting).
//!
//! Solver-internal Z/Y norms use FD-trapezoid realizations of L2/H1, which
//! carry no endpoint-extension assumptions.

use num_complex::Complex64;

use crate::boundary::ClassId;
use crate::error::{KdvError, Result};
use crate::fourier::{bin_frequency, fft_forward};
use crate::grid::{trapezoid, trapezoid_l2, Field};
use crate::stencil;

/// Fraction of weighted energy allowed in the top spectral decade before the
/// norm is declared untrustworthy.
const RESOLVED_FRACTION: f64 = 0.10;

fn endpoint_vanishing(g: &[f64]) -> bool {
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    scale == 0.0 || (g[0].abs() <= 1e-12 * scale && g[g.len() - 1].abs() <= 1e-12 * scale)
}

fn check_resolved(weighted: &[f64]) -> Result<()> {
    let total: f64 = weighted.iter().sum();
    if total <= 0.0 {
        return Ok(());
    }
    let cut = weighted.len() - (weighted.len() / 10).max(1);
    let top: f64 = weighted[cut..].iter().sum();
    if top > RESOLVED_FRACTION * total {
        return Err(KdvError::UnresolvedSignal { fraction: 100.0 * top / total });
    }
    Ok(())
}

/// H^s(0,L) norm of a sampled space signal, s in [0,3].
pub fn sobolev_norm_space(g: &[f64], length: f64, s: f64) -> Result<f64> {
    assert!((0.0..=3.0).contains(&s), "space exponent s={s} outside [0,3]");
    let n = g.len();
    assert!(n >= 4);
    let span = (n - 1) as f64;
    let pi = std::f64::consts::PI;
    if endpoint_vanishing(g) {
        // sine series on the interior nodes
        let mut weighted = Vec::with_capacity(n - 2);
        let mut total = 0.0;
        for m in 1..=n - 2 {
            let mut b = 0.0;
            for (i, gi) in g.iter().enumerate().take(n - 1).skip(1) {
                b += gi * (pi * (m * i) as f64 / span).sin();
            }
            b *= 2.0 / span;
            let wavenumber = m as f64 * pi / length;
            let w = (1.0 + wavenumber * wavenumber).powf(s) * b * b;
            weighted.push(w);
            total += w;
        }
        check_resolved(&weighted)?;
        Ok((0.5 * length * total).sqrt())
    } else {
        // cosine series with half-weighted end coefficients
        let coeff = |k: usize| {
            let mut a = 0.5 * (g[0] + (pi * k as f64).cos() * g[n - 1]);
            for (i, gi) in g.iter().enumerate().take(n - 1).skip(1) {
                a += gi * (pi * (k * i) as f64 / span).cos();
            }
            2.0 / span * a
        };
        let mut weighted = Vec::with_capacity(n);
        let mut total = 0.0;
        for k in 0..n {
            let a = coeff(k);
            let wavenumber = k as f64 * pi / length;
            let half = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            let w = half * (1.0 + wavenumber * wavenumber).powf(s) * a * a;
            weighted.push(w);
            total += w;
        }
        check_resolved(&weighted)?;
        Ok((0.5 * length * total).sqrt())
    }
}

/// H^sigma(0,T) norm of a sampled time signal via the zero-extended
/// transform, sigma in [-1/3, 4/3].
pub fn sobolev_norm_time(h: &[f64], horizon: f64, sigma: f64) -> Result<f64> {
    assert!((-1.0 / 3.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&sigma), "sigma={sigma} out of range");
    let n = h.len();
    assert!(n >= 4);
    let dt = horizon / (n - 1) as f64;
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sigma > 0.5 && scale > 0.0 && h[0].abs() > 1e-8 * scale {
        return Err(KdvError::ConfigInvalid(format!(
            "time norm with sigma={sigma} > 1/2 requires h(0) = 0"
        )));
    }
    let m = (4 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, v) in buf.iter_mut().zip(h.iter()) {
        *b = Complex64::new(*v, 0.0);
    }
    fft_forward(&mut buf);
    let mut weighted = vec![0.0; m / 2 + 1];
    let mut total = 0.0;
    for (k, v) in buf.iter().enumerate() {
        let mu = bin_frequency(k, m, dt);
        let w = (1.0 + mu * mu).powf(sigma) * v.norm_sqr();
        let bin = (k.min(m - k)).min(m / 2);
        weighted[bin] += w;
        total += w;
    }
    check_resolved(&weighted)?;
    Ok((dt / m as f64 * total).sqrt())
}

/// Trapezoid L2(0,L) norm.
pub fn l2_space(g: &[f64], length: f64) -> f64 {
    trapezoid_l2(g, length / (g.len() - 1) as f64)
}

/// FD-trapezoid H1(0,L) norm (no extension assumptions).
pub fn h1_space_fd(g: &[f64], length: f64) -> f64 {
    let dx = length / (g.len() - 1) as f64;
    let d = stencil::derivative_signal(g, dx);
    (trapezoid_l2(g, dx).powi(2) + trapezoid_l2(&d, dx).powi(2)).sqrt()
}

/// Z-norm of a field: max( sup_t ||u(.,t)||_L2 , ||u||_{L2(0,T;H1)} ).
pub fn z_norm(u: &Field) -> f64 {
    let g = &u.grid;
    let mut sup_l2 = 0.0f64;
    let mut h1_sq = Vec::with_capacity(g.nt);
    for n in 0..g.nt {
        let slice = u.space_slice(n);
        sup_l2 = sup_l2.max(l2_space(&slice, g.length));
        h1_sq.push(h1_space_fd(&slice, g.length).powi(2));
    }
    let l2h1 = trapezoid(&h1_sq, g.dt()).max(0.0).sqrt();
    sup_l2.max(l2h1)
}

/// Indices of the nine diagnostic stations x = i L/8 (nearest grid nodes).
pub fn station_indices(nx: usize) -> [usize; 9] {
    let mut out = [0usize; 9];
    for (i, o) in out.iter_mut().enumerate() {
        *o = ((i as f64 / 8.0) * (nx - 1) as f64).round() as usize;
    }
    out
}

/// Time signal of the l-th spatial derivative at a station index.
pub fn station_trace(u: &Field, ix: usize, l: usize) -> Vec<f64> {
    let g = &u.grid;
    let dx = g.dx();
    let nx = g.nx;
    let nt = g.nt;
    let mut out = vec![0.0; nt];
    match l {
        0 => out.copy_from_slice(u.time_row(ix)),
        1 | 2 => {
            let mut col = vec![0.0; nx];
            for n in 0..nt {
                for i in 0..nx {
                    col[i] = u[(i, n)];
                }
                out[n] = if l == 1 {
                    if ix == 0 {
                        stencil::d1_left(&col, dx)
                    } else if ix == nx - 1 {
                        stencil::d1_right(&col, dx)
                    } else if ix < 2 || ix > nx - 3 {
                        (col[ix + 1] - col[ix - 1]) / (2.0 * dx)
                    } else {
                        (-col[ix + 2] + 8.0 * col[ix + 1] - 8.0 * col[ix - 1] + col[ix - 2])
                            / (12.0 * dx)
                    }
                } else if ix == 0 {
                    stencil::d2_left(&col, dx)
                } else if ix == nx - 1 {
                    stencil::d2_right(&col, dx)
                } else if ix < 2 || ix > nx - 3 {
                    (col[ix + 1] - 2.0 * col[ix] + col[ix - 1]) / (dx * dx)
                } else {
                    (-col[ix + 2] + 16.0 * col[ix + 1] - 30.0 * col[ix] + 16.0 * col[ix - 1]
                        - col[ix - 2])
                        / (12.0 * dx * dx)
                };
            }
        }
        _ => panic!("derivative order {l} out of range"),
    }
    out
}

/// Y-norm: max of the Z-norm and the station trace norms H^{(s+1-l)/3}(0,T),
/// l = 0,1,2, at the nine stations (s = 0 tier).
pub fn y_norm(u: &Field) -> f64 {
    let mut best = z_norm(u);
    let g = &u.grid;
    for &ix in station_indices(g.nx).iter() {
        for l in 0..=2 {
            let tr = station_trace(u, ix, l);
            let sigma = (1.0 - l as f64) / 3.0;
            if let Ok(v) = sobolev_norm_time(&tr, g.horizon, sigma) {
                best = best.max(v);
            }
        }
    }
    best
}

/// Combined data norm ||(phi, h)||: L2 of the initial profile plus the three
/// slot norms in their class exponents.
pub fn x_data_norm(phi: &[f64], length: f64, hvec: &crate::boundary::BoundaryData) -> f64 {
    let mut total = l2_space(phi, length);
    for slot in 0..3 {
        if let Ok(v) = sobolev_norm_time(&hvec.h[slot], hvec.horizon, hvec.sigma[slot]) {
            total += v;
        }
    }
    total
}

#[derive(Debug, Clone)]
pub struct NormReport {
    pub class: Option<ClassId>,
    pub tier: f64,
    pub space_norms: Vec<(f64, f64)>,
    /// (station index, derivative order, sigma, value)
    pub time_trace_norms: Vec<(usize, usize, f64, f64)>,
    pub z_norm: f64,
    pub y_norm: f64,
    pub data_norm: f64,
    /// (derivative order, estimated smoothing constant)
    pub smoothing: Vec<(usize, f64)>,
    pub c_est: f64,
    /// Set by two-grid comparison: C_est varies by < 2x between levels.
    pub stable: Option<bool>,
}

/// Kato-smoothing report: station trace norms ||d^r_x v(x,.)||_{H^{(s+1-r)/3}}
/// against the data norm, r = 0,1,2.
pub fn kato_report(v: &Field, data_norm: f64, s: f64) -> NormReport {
    let g = &v.grid;
    let mut time_trace_norms = Vec::new();
    let mut smoothing = Vec::new();
    let mut c_all = 0.0f64;
    for r in 0..=2usize {
        let sigma = ((s + 1.0 - r as f64) / 3.0).clamp(-1.0 / 3.0, 4.0 / 3.0);
        let mut worst = 0.0f64;
        for &ix in station_indices(g.nx).iter() {
            let tr = station_trace(v, ix, r);
            if let Ok(value) = sobolev_norm_time(&tr, g.horizon, sigma) {
                time_trace_norms.push((ix, r, sigma, value));
                worst = worst.max(value);
            }
        }
        let c = if data_norm > 0.0 { worst / data_norm } else { 0.0 };
        smoothing.push((r, c));
        c_all = c_all.max(c);
    }
    let mut space_norms = Vec::new();
    let final_slice = v.space_slice(g.nt - 1);
    for sv in [0.0, s] {
        if let Ok(val) = sobolev_norm_space(&final_slice, g.length, sv) {
            space_norms.push((sv, val));
        }
    }
    NormReport {
        class: None,
        tier: s,
        space_norms,
        time_trace_norms,
        z_norm: z_norm(v),
        y_norm: y_norm(v),
        data_norm,
        smoothing,
        c_est: c_all,
        stable: None,
    }
}

/// Two-grid stability: fills the `stable` flag on the fine-grid report.
pub fn kato_two_grid(coarse: &NormReport, fine: &mut NormReport) {
    let ok = coarse.c_est > 0.0
        && fine.c_est > 0.0
        && fine.c_est / coarse.c_est < 2.0
        && coarse.c_est / fine.c_est < 2.0;
    fine.stable = Some(ok);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn sine_mode(n: usize, length: f64) -> Vec<f64> {
        (0..n).map(|i| (PI * i as f64 / (n - 1) as f64).sin() * 1.0_f64).collect()
    }

    #[test]
    fn zero_signals_have_zero_norm() {
        assert_eq!(sobolev_norm_space(&[0.0; 32], 1.0, 1.5).unwrap(), 0.0);
        assert_eq!(sobolev_norm_time(&[0.0; 32], 1.0, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn space_s0_matches_trapezoid() {
        let n = 65;
        let length = 1.3;
        // endpoint-vanishing signal -> sine branch
        let g = sine_mode(n, length);
        let spectral = sobolev_norm_space(&g, length, 0.0).unwrap();
        assert!((spectral - l2_space(&g, length)).abs() < 1e-10);
        // non-vanishing signal -> cosine branch
        let c: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.3 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
            .collect();
        let spectral_c = sobolev_norm_space(&c, length, 0.0).unwrap();
        assert!(
            (spectral_c - l2_space(&c, length)).abs() < 1e-10,
            "{spectral_c} vs {}",
            l2_space(&c, length)
        );
    }

    #[test]
    fn space_single_mode_weight_closed_form() {
        let n = 129;
        let length = 1.0;
        let g = sine_mode(n, length);
        let s0 = sobolev_norm_space(&g, length, 0.0).unwrap();
        let s1 = sobolev_norm_space(&g, length, 1.0).unwrap();
        let expect = (1.0 + PI * PI).sqrt();
        assert!(((s1 / s0).powi(2) - (1.0 + PI * PI)).abs() < 1e-8);
        assert!((s1 - (length / 2.0f64).sqrt() * expect).abs() < 1e-8);
        // interpolation sanity: s = 1/2 is the geometric mean of the weights
        let sh = sobolev_norm_space(&g, length, 0.5).unwrap();
        assert!((sh / s0 - (1.0 + PI * PI).powf(0.25)).abs() < 1e-8);
    }

    #[test]
    fn space_monotone_in_exponent() {
        let n = 65;
        let g: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                (PI * x).sin() + 0.25 * (3.0 * PI * x).sin()
            })
            .collect();
        let mut prev = 0.0;
        for k in 0..=6 {
            let s = k as f64 * 0.5;
            let v = sobolev_norm_space(&g, 1.0, s).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn norm_homogeneity_exact() {
        let n = 48;
        let g: Vec<f64> = (0..n).map(|i| (0.2 * i as f64).sin()).collect();
        let a = 3.5;
        let ga: Vec<f64> = g.iter().map(|v| a * v).collect();
        let v1 = sobolev_norm_space(&g, 1.0, 1.0).unwrap();
        let va = sobolev_norm_space(&ga, 1.0, 1.0).unwrap();
        assert!((va - a * v1).abs() <= 1e-12 * va);
        let t1 = sobolev_norm_time(&g, 1.0, 1.0 / 3.0).unwrap();
        let ta = sobolev_norm_time(&ga, 1.0, 1.0 / 3.0).unwrap();
        assert!((ta - a * t1).abs() <= 1e-12 * ta);
    }

    #[test]
    fn time_s0_matches_trapezoid_for_vanishing_ends() {
        let n = 257;
        let horizon = 0.8;
        let h: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                (s * (1.0 - s)).powi(2)
            })
            .collect();
        let spectral = sobolev_norm_time(&h, horizon, 0.0).unwrap();
        let trap = trapezoid_l2(&h, horizon / (n - 1) as f64);
        assert!((spectral - trap).abs() < 1e-6 * trap, "{spectral} vs {trap}");
    }

    #[test]
    fn time_one_third_ratio_tracks_dominant_mode_weight() {
        // h = sin(2 pi t / T) extended by zero: dominant frequency 2 pi / T
        let n = 513;
        let horizon = 1.0;
        let h: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * i as f64 / (n - 1) as f64).sin())
            .collect();
        let r = sobolev_norm_time(&h, horizon, 1.0 / 3.0).unwrap()
            / sobolev_norm_time(&h, horizon, 0.0).unwrap();
        let mu = 2.0 * PI / horizon;
        let predict = (1.0 + mu * mu).powf(1.0 / 6.0);
        assert!((r - predict).abs() < 0.05 * predict, "{r} vs {predict}");
    }

    #[test]
    fn negative_exponent_shrinks_norm() {
        let n = 129;
        let h: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                (s * (1.0 - s)).powi(2) * (10.0 * s).sin()
            })
            .collect();
        let neg = sobolev_norm_time(&h, 1.0, -1.0 / 3.0).unwrap();
        let zero = sobolev_norm_time(&h, 1.0, 0.0).unwrap();
        assert!(neg < zero);
    }

    #[test]
    fn unresolved_signal_flagged() {
        // alternating-sign signal: all energy in the top modes
        let g: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(matches!(
            sobolev_norm_space(&g, 1.0, 2.0),
            Err(KdvError::UnresolvedSignal { .. })
        ));
    }

    #[test]
    fn kato_report_zero_field() {
        let g = Grid::new(1.0, 0.5, 33, 33).unwrap();
        let rep = kato_report(&Field::zeros(&g), 1.0, 0.0);
        assert_eq!(rep.c_est, 0.0);
        assert!(rep.smoothing.iter().all(|(_, c)| *c == 0.0));
        assert_eq!(rep.z_norm, 0.0);
    }

    #[test]
    fn stations_cover_endpoints() {
        let s = station_indices(257);
        assert_eq!(s[0], 0);
        assert_eq!(s[8], 256);
        assert_eq!(s[4], 128);
    }
}
