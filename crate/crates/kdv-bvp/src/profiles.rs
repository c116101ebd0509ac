//! Built-in data profiles for reproducible runs: named shapes for initial
//! profiles and boundary signals (boundary signals vanish at t = 0).

use crate::error::{KdvError, Result};
use std::collections::BTreeMap;

pub type Params = BTreeMap<String, f64>;

fn get(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Sampled space profile on [0, L].
pub fn space_profile(name: &str, params: &Params, nx: usize, length: f64) -> Result<Vec<f64>> {
    let amp = get(params, "amplitude", 1.0);
    let x = |i: usize| i as f64 * length / (nx - 1) as f64;
    let values: Vec<f64> = match name {
        "zero" => vec![0.0; nx],
        "gaussian" => {
            let center = get(params, "center", 0.5 * length);
            let width = get(params, "width", 0.15 * length);
            (0..nx).map(|i| amp * (-((x(i) - center) / width).powi(2)).exp()).collect()
        }
        "sine-mode" => {
            let mode = get(params, "mode", 1.0);
            (0..nx)
                .map(|i| amp * (std::f64::consts::PI * mode * x(i) / length).sin())
                .collect()
        }
        "sech2" => {
            let center = get(params, "center", 0.5 * length);
            let width = get(params, "width", 0.1 * length);
            (0..nx)
                .map(|i| {
                    let s = (x(i) - center) / width;
                    amp / s.cosh().powi(2)
                })
                .collect()
        }
        // quartic bump: vanishes with three derivatives at both endpoints
        "bump" => (0..nx)
            .map(|i| {
                let s = x(i) / length;
                amp * 256.0 * (s * (1.0 - s)).powi(4)
            })
            .collect(),
        other => {
            return Err(KdvError::ConfigInvalid(format!(
                "unknown space profile '{other}' (expected zero|gaussian|sine-mode|sech2|bump)"
            )))
        }
    };
    Ok(values)
}

/// Sampled time signal on [0, T], vanishing at t = 0.
pub fn time_profile(name: &str, params: &Params, nt: usize, horizon: f64) -> Result<Vec<f64>> {
    let amp = get(params, "amplitude", 1.0);
    let s = |n: usize| n as f64 / (nt - 1) as f64;
    let values: Vec<f64> = match name {
        "zero" => vec![0.0; nt],
        // bump vanishing to high order at both ends
        "bump" => (0..nt).map(|n| amp * 256.0 * (s(n) * (1.0 - s(n))).powi(4)).collect(),
        "gaussian" => {
            let center = get(params, "center", 0.5 * horizon) / horizon;
            let width = get(params, "width", 0.12 * horizon) / horizon;
            (0..nt)
                .map(|n| {
                    let g = amp * (-((s(n) - center) / width).powi(2)).exp();
                    // force an exact zero start without disturbing the bulk
                    g - amp * (-(center / width).powi(2)).exp() * (1.0 - s(n))
                })
                .collect()
        }
        "sine-burst" => {
            let mode = get(params, "mode", 1.0);
            (0..nt)
                .map(|n| {
                    let ramp = s(n) * s(n) * (3.0 - 2.0 * s(n));
                    amp * ramp * (2.0 * std::f64::consts::PI * mode * s(n)).sin()
                })
                .collect()
        }
        other => {
            return Err(KdvError::ConfigInvalid(format!(
                "unknown time profile '{other}' (expected zero|bump|gaussian|sine-burst)"
            )))
        }
    };
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_have_expected_shape() {
        let p = Params::new();
        let g = space_profile("bump", &p, 65, 1.0).unwrap();
        assert_eq!(g.len(), 65);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[64], 0.0);
        assert!(g[32] > 0.9);
        let h = time_profile("sine-burst", &p, 33, 0.5).unwrap();
        assert_eq!(h[0], 0.0);
        assert!(h.iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn unknown_profile_is_config_error() {
        let p = Params::new();
        assert!(space_profile("box", &p, 16, 1.0).is_err());
        assert!(time_profile("step", &p, 16, 1.0).is_err());
    }

    #[test]
    fn boundary_profiles_vanish_at_start() {
        let p = Params::new();
        for name in ["zero", "bump", "gaussian", "sine-burst"] {
            let h = time_profile(name, &p, 65, 1.0).unwrap();
            assert!(h[0].abs() < 1e-12, "{name} starts at {}", h[0]);
        }
    }
}
