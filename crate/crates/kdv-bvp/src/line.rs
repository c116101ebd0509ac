//! Whole-line evolution e^{i xi^3 t - c t} with zero-extended data: the group
//! propagator, Duhamel forcing, and spectrally exact boundary traces.
//!
//! The periodic FFT domain is padded so that dispersive transport (group
//! velocity 3 xi^2 for the energetic band of the data) cannot wrap back into
//! (0, L) within the horizon. The interior grid nodes coincide with line
//! nodes, so interior samples and the x = 0, L trace evaluations carry no
//! interpolation bias.

use num_complex::Complex64;
use std::sync::Arc;

use crate::boundary::{BoundaryData, ClassId, TraceSet};
use crate::error::{KdvError, Result};
use crate::fourier::{bin_frequency, fft_forward, fft_inverse};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone)]
pub struct PadPolicy {
    /// Spectral amplitude threshold defining the effective support xi_eff.
    pub epsilon: f64,
    /// Hard cap on the total padding, in length units.
    pub cap: f64,
    /// Raise PadExceeded instead of flagging when the estimate busts the cap.
    pub error_on_exceed: bool,
    /// Fixed total padding override.
    pub override_pad: Option<f64>,
}

impl Default for PadPolicy {
    fn default() -> Self {
        PadPolicy { epsilon: 1e-6, cap: 2000.0, error_on_exceed: true, override_pad: None }
    }
}

#[derive(Debug, Clone)]
pub struct PadReport {
    pub xi_eff: f64,
    pub required: f64,
    pub used: f64,
    pub flagged: bool,
}

/// Uniform periodic lattice carrying the padded line.
#[derive(Debug)]
pub struct LineDomain {
    pub dx: f64,
    pub n: usize,
    /// index of x = 0
    pub i0: usize,
    pub nx: usize,
    pub length: f64,
    pub total_pad: f64,
    xi: Vec<f64>,
}

impl LineDomain {
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
}

/// Real samples on a padded line lattice.
#[derive(Clone)]
pub struct LineField {
    pub domain: Arc<LineDomain>,
    pub values: Vec<f64>,
    pub xi_eff: f64,
}

impl LineField {
    pub fn l2(&self) -> f64 {
        // rectangle rule is exact on the periodic lattice
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.domain.dx).sqrt()
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[self.domain.i0..self.domain.i0 + self.domain.nx]
    }
}

fn next_fast_len(mut n: usize) -> usize {
    loop {
        let mut m = n;
        for p in [2usize, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Effective spectral support: smallest xi beyond which the zero-extended
/// signal's spectrum stays under epsilon * peak.
pub fn effective_support(samples: &[f64], dx: f64, epsilon: f64) -> f64 {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let n = next_fast_len(8 * samples.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, v) in buf.iter_mut().zip(samples) {
        *b = Complex64::new(*v, 0.0);
    }
    fft_forward(&mut buf);
    let half = n / 2;
    let mags: Vec<f64> = (0..=half).map(|k| buf[k].norm()).collect();
    let maxmag = mags.iter().fold(0.0f64, |m, v| m.max(*v));
    if maxmag == 0.0 {
        return 0.0;
    }
    // walk down from Nyquist to the last bin above threshold
    let mut k_eff = 0;
    for k in (0..=half).rev() {
        if mags[k] > epsilon * maxmag {
            k_eff = k;
            break;
        }
    }
    bin_frequency(k_eff, n, dx).abs()
}

fn build_domain(interior: &Grid, total_pad: f64) -> Arc<LineDomain> {
    let dx = interior.dx();
    let m_left = (0.5 * total_pad / dx).ceil() as usize;
    let m_right = (0.5 * total_pad / dx).ceil() as usize;
    let n_raw = m_left + interior.nx + m_right;
    let n = next_fast_len(n_raw);
    let m_left = m_left + (n - n_raw) / 2; // distribute FFT-size slack
    let xi: Vec<f64> = (0..n).map(|k| bin_frequency(k, n, dx)).collect();
    Arc::new(LineDomain {
        dx,
        n,
        i0: m_left,
        nx: interior.nx,
        length: interior.length,
        total_pad: (n - interior.nx) as f64 * dx,
        xi,
    })
}

fn choose_pad(
    interior: &Grid,
    xi_eff: f64,
    horizon: f64,
    policy: &PadPolicy,
) -> Result<(f64, PadReport)> {
    let required = 3.0 * xi_eff * xi_eff * horizon + 2.0 * interior.length;
    let mut used = policy.override_pad.unwrap_or(required).max(2.0 * interior.length);
    let mut flagged = false;
    if used > policy.cap {
        used = policy.cap;
    }
    if required > used + 1e-9 {
        if policy.error_on_exceed {
            return Err(KdvError::PadExceeded { needed: required, pad: used });
        }
        flagged = true;
    }
    Ok((used, PadReport { xi_eff, required, used, flagged }))
}

/// Zero extension of an interior profile onto a padded line lattice.
pub fn extend_zero(phi: &[f64], interior: &Grid, policy: &PadPolicy) -> Result<(LineField, PadReport)> {
    assert_eq!(phi.len(), interior.nx);
    let xi_eff = effective_support(phi, interior.dx(), policy.epsilon);
    let (pad, report) = choose_pad(interior, xi_eff, interior.horizon, policy)?;
    let domain = build_domain(interior, pad);
    let mut values = vec![0.0; domain.n];
    values[domain.i0..domain.i0 + domain.nx].copy_from_slice(phi);
    Ok((LineField { domain, values, xi_eff }, report))
}

fn multiplier(domain: &LineDomain, t: f64, c: f64) -> Vec<Complex64> {
    domain
        .xi
        .iter()
        .map(|&xi| Complex64::from_polar((-c * t).exp(), xi.powi(3) * t))
        .collect()
}

/// One application of the group e^{i xi^3 t - delta_k t}.
pub fn airy_group(psi: &LineField, t: f64, k: ClassId) -> Result<LineField> {
    airy_group_damped(psi, t, k.delta())
}

pub fn airy_group_damped(psi: &LineField, t: f64, c: f64) -> Result<LineField> {
    assert!(t >= 0.0);
    let d = &psi.domain;
    let needed = 3.0 * psi.xi_eff * psi.xi_eff * t;
    if needed > d.total_pad + 1e-9 {
        return Err(KdvError::PadExceeded { needed, pad: d.total_pad });
    }
    let mut buf: Vec<Complex64> = psi.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_forward(&mut buf);
    for (b, e) in buf.iter_mut().zip(multiplier(d, t, c)) {
        *b *= e;
    }
    fft_inverse(&mut buf);
    let n = d.n as f64;
    let values = buf.iter().map(|z| z.re / n).collect();
    Ok(LineField { domain: psi.domain.clone(), values, xi_eff: psi.xi_eff })
}

/// Duhamel integral int_0^t W(t - tau) f(tau) dtau for interior-supported
/// forcing, evaluated at grid time t by the marching scheme.
pub fn duhamel(f: &Field, t: f64, k: ClassId, policy: &PadPolicy) -> Result<LineField> {
    let interior = &f.grid;
    let steps = ((t / interior.dt()).round() as usize).min(interior.nt - 1);
    assert!(
        (steps as f64 * interior.dt() - t).abs() < 1e-9 * interior.horizon.max(1.0),
        "duhamel time must sit on the stored grid"
    );
    let zero = vec![0.0; interior.nx];
    let march = march_line(&zero, Some(f), k.delta(), interior, policy)?;
    let mut values = vec![0.0; march.final_state.domain.n];
    values.copy_from_slice(&march.states[steps]);
    Ok(LineField { domain: march.final_state.domain.clone(), values, xi_eff: march.final_state.xi_eff })
}

/// Whole-line solve restricted to the interior plus its boundary traces.
pub struct MarchOutput {
    pub interior: Field,
    pub traces: TraceSet,
    pub pad: PadReport,
    pub final_state: LineField,
    /// Full line states per step (kept only when requested).
    pub states: Vec<Vec<f64>>,
}

/// March q_t + q_xxx + c q = f on the padded line over the interior grid's
/// time lattice, collecting interior samples and spectrally exact traces.
pub fn march_line(
    phi: &[f64],
    forcing: Option<&Field>,
    c: f64,
    interior: &Grid,
    policy: &PadPolicy,
) -> Result<MarchOutput> {
    march_line_impl(phi, forcing, c, interior, policy, false)
}

pub fn march_line_keep_states(
    phi: &[f64],
    forcing: Option<&Field>,
    c: f64,
    interior: &Grid,
    policy: &PadPolicy,
) -> Result<MarchOutput> {
    march_line_impl(phi, forcing, c, interior, policy, true)
}

fn march_line_impl(
    phi: &[f64],
    forcing: Option<&Field>,
    c: f64,
    interior: &Grid,
    policy: &PadPolicy,
    keep_states: bool,
) -> Result<MarchOutput> {
    let (nx, nt) = (interior.nx, interior.nt);
    let dt = interior.dt();
    // effective support includes the forcing band
    let mut xi_eff = effective_support(phi, interior.dx(), policy.epsilon);
    if let Some(f) = forcing {
        for n in [0, nt / 4, nt / 2, 3 * nt / 4, nt - 1] {
            let slice = f.space_slice(n);
            xi_eff = xi_eff.max(effective_support(&slice, interior.dx(), policy.epsilon));
        }
    }
    let (pad, pad_report) = choose_pad(interior, xi_eff, interior.horizon, policy)?;
    let domain = build_domain(interior, pad);
    let n = domain.n;
    let nf = n as f64;

    // spectral state
    let mut qhat = vec![Complex64::new(0.0, 0.0); n];
    for (i, v) in phi.iter().enumerate() {
        qhat[domain.i0 + i] = Complex64::new(*v, 0.0);
    }
    fft_forward(&mut qhat);

    let e_full = multiplier(&domain, dt, c);
    let e_half = multiplier(&domain, 0.5 * dt, c);

    // trace evaluation vectors: d^l/dx^l at x=0 and x=L
    let phase0: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * domain.i0) as f64 / nf))
        .collect();
    let il = domain.i0 + nx - 1;
    let phase_l: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((k * il) % n) as f64 / nf))
        .collect();

    let mut interior_field = Field::zeros(interior);
    let mut tr = TraceSet::from_parts(
        vec![0.0; nt],
        vec![0.0; nt],
        vec![0.0; nt],
        vec![0.0; nt],
        vec![0.0; nt],
        vec![0.0; nt],
        interior.horizon,
    );
    let mut states: Vec<Vec<f64>> = Vec::new();

    let extend_slice = |slice: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, v) in slice.iter().enumerate() {
            buf[domain.i0 + i] = Complex64::new(*v, 0.0);
        }
        fft_forward(&mut buf);
        buf
    };

    // forcing spectra at integer steps, lazily rolled forward
    let mut f_cur = forcing.map(|f| extend_slice(&f.space_slice(0)));

    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for step in 0..nt {
        // interior samples at this step
        scratch.copy_from_slice(&qhat);
        fft_inverse(&mut scratch);
        for i in 0..nx {
            interior_field[(i, step)] = scratch[domain.i0 + i].re / nf;
        }
        if keep_states {
            states.push(scratch.iter().map(|z| z.re / nf).collect());
        }
        // traces: value reads plus first/second-derivative spectral dots
        tr.u0[step] = scratch[domain.i0].re / nf;
        tr.u1[step] = scratch[il].re / nf;
        let (mut d10, mut d1l, mut d20, mut d2l) = (
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        for k in 0..n {
            let ix = Complex64::new(0.0, domain.xi[k]);
            let g1 = ix * qhat[k];
            let g2 = ix * g1;
            d10 += g1 * phase0[k];
            d1l += g1 * phase_l[k];
            d20 += g2 * phase0[k];
            d2l += g2 * phase_l[k];
        }
        tr.ux0[step] = d10.re / nf;
        tr.ux1[step] = d1l.re / nf;
        tr.uxx0[step] = d20.re / nf;
        tr.uxx1[step] = d2l.re / nf;

        if step + 1 == nt {
            break;
        }
        // advance one step: exact group + Simpson Duhamel
        match forcing {
            None => {
                for k in 0..n {
                    qhat[k] *= e_full[k];
                }
            }
            Some(f) => {
                let fc = f_cur.as_ref().unwrap();
                for k in 0..n {
                    qhat[k] = (qhat[k] + dt / 6.0 * fc[k]) * e_full[k];
                }
                // midpoint forcing by cubic interpolation in t
                let mid = cubic_midpoint(f, step);
                let f_mid = extend_slice(&mid);
                for k in 0..n {
                    qhat[k] += 4.0 * dt / 6.0 * e_half[k] * f_mid[k];
                }
                let f_next = extend_slice(&f.space_slice(step + 1));
                for k in 0..n {
                    qhat[k] += dt / 6.0 * f_next[k];
                }
                f_cur = Some(f_next);
            }
        }
    }

    let final_state = LineField {
        domain: domain.clone(),
        values: {
            scratch.copy_from_slice(&qhat);
            fft_inverse(&mut scratch);
            scratch.iter().map(|z| z.re / nf).collect()
        },
        xi_eff,
    };
    Ok(MarchOutput { interior: interior_field, traces: tr, pad: pad_report, final_state, states })
}

/// Forcing at t_{step + 1/2} by cubic interpolation of the stored slices.
fn cubic_midpoint(f: &Field, step: usize) -> Vec<f64> {
    let nt = f.grid.nt;
    let nx = f.grid.nx;
    let mut out = vec![0.0; nx];
    let (idx, w): ([usize; 4], [f64; 4]) = if step == 0 {
        ([0, 1, 2, 3], [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0])
    } else if step + 2 >= nt {
        let b = nt - 4;
        ([b, b + 1, b + 2, b + 3], [1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0])
    } else {
        (
            [step - 1, step, step + 1, step + 2],
            [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
        )
    };
    for i in 0..nx {
        out[i] = w[0] * f[(i, idx[0])] + w[1] * f[(i, idx[1])] + w[2] * f[(i, idx[2])]
            + w[3] * f[(i, idx[3])];
    }
    out
}

/// Principal boundary triple B_{k,0} q of the whole-line solve with data
/// (phi, f): the correction data the composed solver subtracts.
pub fn whole_line_traces(
    phi: &[f64],
    forcing: Option<&Field>,
    k: ClassId,
    interior: &Grid,
    policy: &PadPolicy,
) -> Result<BoundaryData> {
    let march = march_line(phi, forcing, k.delta(), interior, policy)?;
    let cls = crate::boundary::BoundaryClass::principal_only(k);
    Ok(cls.apply_principal(&march.traces))
}
