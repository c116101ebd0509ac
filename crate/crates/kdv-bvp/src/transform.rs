//! Oscillatory transforms of sampled signals.
//!
//! `laplace_on_ray` evaluates the Laplace transform of a time signal at the
//! ray points s = i rho^3, i.e. the Fourier integral of the zero-extended
//! signal at frequency mu = rho^3. Each time cell integrates e^{-i mu t}
//! against the piecewise-linear interpolant exactly (Filon-linear), so the
//! cost is O(nt) per node with no oscillation constraint on the cell size.

use num_complex::Complex64;

use crate::error::{KdvError, Result};

/// Spectrum samples on quadrature nodes along the ray rho >= 0.
#[derive(Debug, Clone)]
pub struct RaySpectrum {
    pub rho_nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl RaySpectrum {
    pub fn new(rho_nodes: Vec<f64>, weights: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if rho_nodes.len() != values.len() || rho_nodes.len() != weights.len() {
            return Err(KdvError::ShapeMismatch("spectrum node/weight/value lengths differ".into()));
        }
        if !rho_nodes.windows(2).all(|w| w[1] > w[0]) || rho_nodes.first().is_some_and(|r| *r < 0.0) {
            return Err(KdvError::ShapeMismatch("nodes must increase from >= 0".into()));
        }
        if weights.iter().any(|w| *w <= 0.0) {
            return Err(KdvError::ShapeMismatch("weights must be positive".into()));
        }
        Ok(RaySpectrum { rho_nodes, weights, values })
    }
}

/// (e^z - 1)/z, stable near 0.
fn phi0(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(1.0, 0.0);
        for k in 2..=8 {
            term = term * z / (k as f64);
            acc += term;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// (e^z (z - 1) + 1)/z^2 = integral_0^1 u e^{z u} du, stable near 0.
fn psi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // 1/2 + z/3 + z^2/8 + z^3/30 + ... : term_k = z^k (k+1)/(k+2)!
        let mut acc = Complex64::new(0.5, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        let mut fact = 2.0f64; // (k+2)! running
        for k in 1..=8 {
            zp *= z;
            fact *= (k + 2) as f64;
            acc += zp * ((k + 1) as f64) / fact;
        }
        acc
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// integral over the sampled range of e^{-i omega s} f(s) ds with f the
/// piecewise-linear interpolant of uniformly spaced samples.
pub fn filon_linear_transform(samples: &[f64], spacing: f64, omegas: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    assert!(n >= 2);
    let dt = spacing;
    let mut out = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let zeta = Complex64::new(0.0, -omega * dt);
        let e0 = dt * phi0(zeta);
        let e1 = dt * dt * psi1(zeta);
        // cell integral = e^{-i omega t_n} (A f_n + B f_{n+1})
        let a = e0 - e1 / dt;
        let b = e1 / dt;
        let w = Complex64::from_polar(1.0, -omega * dt);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for cell in 0..n - 1 {
            if cell % 64 == 0 {
                // resync the phase recurrence
                phase = Complex64::from_polar(1.0, -omega * dt * cell as f64);
            }
            acc += phase * (a * samples[cell] + b * samples[cell + 1]);
            phase *= w;
        }
        out.push(acc);
    }
    out
}

/// Laplace transform of a time signal at s = i rho^3 for each node, i.e.
/// hat h(i rho^3) = integral_0^T e^{-i rho^3 t} h(t) dt with zero extension
/// beyond T.
pub fn laplace_on_ray(h: &[f64], dt: f64, rho_nodes: &[f64]) -> Vec<Complex64> {
    let omegas: Vec<f64> = rho_nodes.iter().map(|r| r.powi(3)).collect();
    filon_linear_transform(h, dt, &omegas)
}

/// Convenience wrapper returning a checked `RaySpectrum` on a quadrature rule.
pub fn ray_spectrum(h: &[f64], dt: f64, nodes: Vec<f64>, weights: Vec<f64>) -> Result<RaySpectrum> {
    let values = laplace_on_ray(h, dt, &nodes);
    RaySpectrum::new(nodes, weights, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_signal_transforms_to_zero() {
        let h = vec![0.0; 100];
        let v = laplace_on_ray(&h, 0.01, &[0.0, 1.0, 3.0]);
        assert!(v.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn linear_signal_at_rho_zero_gives_half_t_squared() {
        // h(t) = t on [0,1]: integral = T^2/2
        let n = 257;
        let dt = 1.0 / (n - 1) as f64;
        let h: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let v = laplace_on_ray(&h, dt, &[0.0]);
        assert!((v[0].re - 0.5).abs() < 1e-13, "{}", v[0].re);
        assert!(v[0].im.abs() < 1e-13);
    }

    #[test]
    fn smooth_signal_matches_closed_form() {
        // h(t) = t e^{-t}: integral_0^T t e^{-(1 + i rho^3) t} dt
        //      = [1 - e^{-aT}(1 + aT)]/a^2 with a = 1 + i rho^3.
        let n = 2049;
        let t_max = 1.0;
        let dt = t_max / (n - 1) as f64;
        let h: Vec<f64> = (0..n).map(|i| {
            let t = i as f64 * dt;
            t * (-t).exp()
        }).collect();
        for rho in [0.5f64, 1.0, 2.0, 3.5] {
            let a = Complex64::new(1.0, rho.powi(3));
            let exact = (1.0 - (-a * t_max).exp() * (1.0 + a * t_max)) / (a * a);
            let got = laplace_on_ray(&h, dt, &[rho])[0];
            // piecewise-linear interpolation error O(dt^2 * mu)
            let tol = 5.0 * dt * dt * (1.0 + rho.powi(3)) * 0.5 + 1e-14;
            assert!((got - exact).norm() < tol, "rho={rho}: {:e} vs tol {tol:e}", (got - exact).norm());
        }
    }

    #[test]
    fn filon_handles_high_frequency_without_cell_resolution() {
        // omega dt >> 1: exact for piecewise-linear integrand regardless
        let n = 65;
        let dt = 1.0 / (n - 1) as f64;
        let h: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect(); // h(t) = t
        let omega = 500.0; // ~8 periods per cell
        let got = filon_linear_transform(&h, dt, &[omega])[0];
        // exact for the linear function: integral_0^1 t e^{-i w t}
        let iw = Complex64::new(0.0, omega);
        let exact = ((-iw).exp() * (-iw - 1.0) + 1.0) / (iw * iw);
        assert!((got - exact).norm() < 1e-12, "{:e}", (got - exact).norm());
    }

    #[test]
    fn spectrum_invariants_enforced() {
        let r = RaySpectrum::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![Complex64::new(0.0, 0.0); 2]);
        assert!(r.is_ok());
        let bad = RaySpectrum::new(vec![1.0, 0.5], vec![0.5, 0.5], vec![Complex64::new(0.0, 0.0); 2]);
        assert!(bad.is_err());
    }
}
