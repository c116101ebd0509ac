//! Characteristic roots, boundary-system determinants, and kernel ratios.
//!
//! On the ray s = i rho^3 the Laplace-transformed equation has solution basis
//! e^{lambda_j x} with lambda_j the roots of lambda^3 + c + s = 0 (c = 0 for
//! classes 1-3, c = 1 for class 4). Each class's boundary system is a 3x3
//! matrix A^k in the basis coefficients; Cramer's rule turns boundary data
//! into the kernel ratios Delta_{j,m}/Delta that weight the oscillatory
//! integrals. All determinant expressions reduce by lambda_1+lambda_2+lambda_3=0
//! (depressed cubic) to combinations of e^{+-lambda_j}, which this module
//! evaluates in exponent-scaled form so ratios survive rho up to 1e4.

use num_complex::Complex64;

use crate::boundary::ClassId;
use crate::dd::{Dd, DdC};
use crate::error::{KdvError, Result};
use crate::scaled::ScaledC;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Below this rho the k<=3 determinants lose ~3 orders to cancellation in f64;
/// evaluation switches to compensated arithmetic with series exponentials.
pub const RHO_DD_CUTOFF: f64 = 1e-3;

/// Proxy point for the analytic rho -> 0 limit of ratio quantities.
const RHO_LIMIT_EVAL: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
pub struct SpectralTriple {
    pub class: ClassId,
    pub rho: f64,
    pub lambda: [Complex64; 3],
}

impl SpectralTriple {
    /// Max relative residual of lambda^3 + c + i rho^3 over the triple.
    pub fn residual(&self) -> f64 {
        let c = self.class.delta();
        let target = Complex64::new(c, self.rho.powi(3));
        let scale = target.norm().max(self.lambda.iter().map(|l| l.norm().powi(3)).fold(0.0, f64::max));
        if scale == 0.0 {
            return 0.0;
        }
        self.lambda
            .iter()
            .map(|l| (l * l * l + target).norm())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn sum(&self) -> Complex64 {
        self.lambda[0] + self.lambda[1] + self.lambda[2]
    }
}

/// Ordered roots of lambda^3 + c + i rho^3 = 0.
///
/// lambda_1 tracks i rho, lambda_2 the positive-real-part root
/// ((sqrt3 - i)/2 rho asymptotically), lambda_3 its mirror. For c > 0 the
/// labels extend continuously down to rho = 0 along the branch
/// theta = atan2(-rho^3, -c) in (-pi, -pi/2].
pub fn char_roots_damped(rho: f64, c: f64) -> [Complex64; 3] {
    assert!(rho >= 0.0 && c >= 0.0);
    if c == 0.0 {
        let re = 0.5 * SQRT3 * rho;
        let half = 0.5 * rho;
        return [
            Complex64::new(0.0, rho),
            Complex64::new(re, -half),
            Complex64::new(-re, -half),
        ];
    }
    let r = (c * c + rho.powi(6)).powf(1.0 / 6.0);
    let theta = if rho == 0.0 { -std::f64::consts::PI } else { (-rho.powi(3)).atan2(-c) };
    let third = theta / 3.0;
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    [
        Complex64::from_polar(r, third + tau),
        Complex64::from_polar(r, third),
        Complex64::from_polar(r, third - tau),
    ]
}

pub fn char_roots(rho: f64, class: ClassId) -> SpectralTriple {
    SpectralTriple { class, rho, lambda: char_roots_damped(rho, class.delta()) }
}

/// Roots of lambda^3 + c + s = 0 for general complex s (fixed arbitrary order;
/// determinant magnitudes are permutation-invariant).
pub fn roots_at_s(s: Complex64, c: f64) -> [Complex64; 3] {
    let w = -(s + c);
    let r = w.norm().cbrt();
    let theta = w.arg() / 3.0;
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    [
        Complex64::from_polar(r, theta),
        Complex64::from_polar(r, theta + tau),
        Complex64::from_polar(r, theta - tau),
    ]
}

type Term = (Complex64, Complex64); // coeff * exp(arg)

fn delta_terms(k: ClassId, l: &[Complex64; 3]) -> [Term; 3] {
    let [l1, l2, l3] = *l;
    match k {
        ClassId::K1 => [((l3 - l2), -l1), ((l1 - l3), -l2), ((l2 - l1), -l3)],
        ClassId::K2 => [
            (l2 * l3 * (l3 - l2), -l1),
            (l1 * l3 * (l1 - l3), -l2),
            (l1 * l2 * (l2 - l1), -l3),
        ],
        ClassId::K3 => [
            (l1 * l1 * (l3 - l2), -l1),
            (l2 * l2 * (l1 - l3), -l2),
            (l3 * l3 * (l2 - l1), -l3),
        ],
        ClassId::K4 => {
            let p = l1 * l2 * l3;
            [
                (p * l1 * (l3 - l2), -l1),
                (p * l2 * (l1 - l3), -l2),
                (p * l3 * (l2 - l1), -l3),
            ]
        }
    }
}

/// The cofactor Delta_{j,m}: determinant of A^k with column j replaced by the
/// m-th unit vector, in the reduced exponential form. The (2,1) entry of
/// class 2 follows Cramer's rule: lambda_1 lambda_3 (lambda_1 - lambda_3) e^{-lambda_2}.
fn cofactor_terms(k: ClassId, j: usize, m: usize, l: &[Complex64; 3]) -> [Term; 2] {
    let [l1, l2, l3] = *l;
    let zero = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let one = |t: Term| [t, zero];
    match (k, j, m) {
        (ClassId::K1, 1, 1) => one(((l3 - l2), -l1)),
        (ClassId::K1, 2, 1) => one(((l1 - l3), -l2)),
        (ClassId::K1, 3, 1) => one(((l2 - l1), -l3)),
        (ClassId::K1, 1, 2) => [(l2, l2), (-l3, l3)],
        (ClassId::K1, 2, 2) => [(l3, l3), (-l1, l1)],
        (ClassId::K1, 3, 2) => [(l1, l1), (-l2, l2)],
        (ClassId::K1, 1, 3) => [(Complex64::new(1.0, 0.0), l3), (Complex64::new(-1.0, 0.0), l2)],
        (ClassId::K1, 2, 3) => [(Complex64::new(1.0, 0.0), l1), (Complex64::new(-1.0, 0.0), l3)],
        (ClassId::K1, 3, 3) => [(Complex64::new(1.0, 0.0), l2), (Complex64::new(-1.0, 0.0), l1)],

        (ClassId::K2, 1, 1) => one((l2 * l3 * (l3 - l2), -l1)),
        (ClassId::K2, 2, 1) => one((l1 * l3 * (l1 - l3), -l2)),
        (ClassId::K2, 3, 1) => one((l1 * l2 * (l2 - l1), -l3)),
        (ClassId::K2, 1, 2) => [(l2 * l2, l2), (-l3 * l3, l3)],
        (ClassId::K2, 2, 2) => [(l3 * l3, l3), (-l1 * l1, l1)],
        (ClassId::K2, 3, 2) => [(l1 * l1, l1), (-l2 * l2, l2)],
        (ClassId::K2, 1, 3) => [(l3, l3), (-l2, l2)],
        (ClassId::K2, 2, 3) => [(l1, l1), (-l3, l3)],
        (ClassId::K2, 3, 3) => [(l2, l2), (-l1, l1)],

        (ClassId::K3, 1, 1) => one(((l3 - l2), -l1)),
        (ClassId::K3, 2, 1) => one(((l1 - l3), -l2)),
        (ClassId::K3, 3, 1) => one(((l2 - l1), -l3)),
        (ClassId::K3, 1, 2) => [(l2 * l3 * l3, l2), (-l2 * l3 * l2, l3)],
        (ClassId::K3, 2, 2) => [(l1 * l3 * l1, l3), (-l1 * l3 * l3, l1)],
        (ClassId::K3, 3, 2) => [(l1 * l2 * l2, l1), (-l1 * l2 * l1, l2)],
        (ClassId::K3, 1, 3) => [(l2 * l2, l3), (-l3 * l3, l2)],
        (ClassId::K3, 2, 3) => [(l3 * l3, l1), (-l1 * l1, l3)],
        (ClassId::K3, 3, 3) => [(l1 * l1, l2), (-l2 * l2, l1)],

        (ClassId::K4, 1, 1) => one((l2 * l3 * (l3 - l2), -l1)),
        (ClassId::K4, 2, 1) => one((l1 * l3 * (l1 - l3), -l2)),
        (ClassId::K4, 3, 1) => one((l1 * l2 * (l2 - l1), -l3)),
        (ClassId::K4, 1, 2) => [(l2 * l2 * l3 * l3, l2), (-l2 * l2 * l3 * l3, l3)],
        (ClassId::K4, 2, 2) => [(l1 * l1 * l3 * l3, l3), (-l1 * l1 * l3 * l3, l1)],
        (ClassId::K4, 3, 2) => [(l1 * l1 * l2 * l2, l1), (-l1 * l1 * l2 * l2, l2)],
        (ClassId::K4, 1, 3) => [(l2 * l3 * l2, l3), (-l2 * l3 * l3, l2)],
        (ClassId::K4, 2, 3) => [(l1 * l3 * l3, l1), (-l1 * l3 * l1, l3)],
        (ClassId::K4, 3, 3) => [(l1 * l2 * l1, l2), (-l1 * l2 * l2, l1)],
        _ => panic!("indices (j,m)=({j},{m}) out of range"),
    }
}

/// Internal: roots with an overridden damping coefficient (the solver layer
/// rescales (0,L) to (0,1), which turns delta_4 into L^3).
pub fn delta_scaled_damped(k: ClassId, rho: f64, c: f64) -> ScaledC {
    let l = char_roots_damped(rho, c);
    ScaledC::sum_of_exp_terms(&delta_terms(k, &l))
}

pub fn delta_scaled(k: ClassId, rho: f64) -> ScaledC {
    delta_scaled_damped(k, rho, k.delta())
}

/// Delta^k(rho) as a plain complex (safe for rho up to ~700; the scaled form
/// serves beyond that).
pub fn delta(k: ClassId, rho: f64) -> Complex64 {
    delta_scaled(k, rho).to_c64()
}

pub fn delta_cofactor_scaled_damped(k: ClassId, j: usize, m: usize, rho: f64, c: f64) -> ScaledC {
    let l = char_roots_damped(rho, c);
    ScaledC::sum_of_exp_terms(&cofactor_terms(k, j, m, &l))
}

pub fn delta_cofactor_scaled(k: ClassId, j: usize, m: usize, rho: f64) -> ScaledC {
    delta_cofactor_scaled_damped(k, j, m, rho, k.delta())
}

pub fn delta_cofactor(k: ClassId, j: usize, m: usize, rho: f64) -> Complex64 {
    delta_cofactor_scaled(k, j, m, rho).to_c64()
}

/// Cramer kernel factor weighting data slot m on exponential branch j.
///
/// For j = 2 the e^{lambda_2} anchor weight is absorbed here so the j = 2
/// integrand can use the decaying form e^{-lambda_2 (1-x)}.
#[derive(Debug, Clone, Copy)]
pub struct KernelRatio {
    pub value: Complex64,
    pub class: ClassId,
    pub j: usize,
    pub m: usize,
    pub rho: f64,
}

fn ratio_scaled(k: ClassId, j: usize, m: usize, rho: f64, c: f64) -> ScaledC {
    let l = char_roots_damped(rho, c);
    let num = ScaledC::sum_of_exp_terms(&cofactor_terms(k, j, m, &l));
    let den = ScaledC::sum_of_exp_terms(&delta_terms(k, &l));
    let mut r = num.div(den);
    if j == 2 {
        r = r.mul_exp(l[1]);
    }
    r
}

/// Compensated ratio for k<=3 below the cancellation cutoff (|lambda| = rho
/// is small there, so series exponentials hold full dd precision).
fn ratio_dd(k: ClassId, j: usize, m: usize, rho: f64) -> Complex64 {
    let l = char_roots_damped(rho, 0.0);
    let eval = |terms: &[Term]| {
        let mut acc = DdC::ZERO;
        for (coeff, arg) in terms {
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            let t = DdC::from_c64(*coeff).mul(DdC::from_c64(*arg).exp_small());
            acc = acc.add(t);
        }
        acc
    };
    let num = eval(&cofactor_terms(k, j, m, &l));
    let den = eval(&delta_terms(k, &l));
    let mut r = num.div(den);
    if j == 2 {
        r = r.mul(DdC::from_c64(l[1]).exp_small());
    }
    r.to_c64()
}

pub fn kernel_ratio_damped(k: ClassId, j: usize, m: usize, rho: f64, c: f64) -> Result<KernelRatio> {
    let value = if c == 0.0 && rho < RHO_DD_CUTOFF {
        ratio_dd(k, j, m, rho.max(RHO_LIMIT_EVAL))
    } else {
        ratio_scaled(k, j, m, rho, c).to_c64()
    };
    if !value.is_finite() {
        return Err(KdvError::DegenerateKernel { class: k.index(), j, m, rho });
    }
    Ok(KernelRatio { value, class: k, j, m, rho })
}

pub fn kernel_ratio(k: ClassId, j: usize, m: usize, rho: f64) -> Result<KernelRatio> {
    kernel_ratio_damped(k, j, m, rho, k.delta())
}

/// The fused integrand weight 3 rho^2 Delta_{j,m}/Delta (with the j=2 anchor),
/// finite down to rho = 0: the k<=3 cofactors vanish like rho against
/// Delta ~ rho^3, and 3 rho^2 restores the limit.
pub fn hstar_weight_damped(k: ClassId, j: usize, m: usize, rho: f64, c: f64) -> Result<Complex64> {
    let w = if c == 0.0 && rho < RHO_DD_CUTOFF {
        let r = rho.max(RHO_LIMIT_EVAL);
        3.0 * r * r * ratio_dd(k, j, m, r)
    } else if rho == 0.0 {
        // c > 0: Delta(0) != 0 and the 3 rho^2 factor kills the weight
        Complex64::new(0.0, 0.0)
    } else {
        3.0 * rho * rho * ratio_scaled(k, j, m, rho, c).to_c64()
    };
    if !w.is_finite() {
        return Err(KdvError::DegenerateKernel { class: k.index(), j, m, rho });
    }
    Ok(w)
}

pub fn hstar_weight(k: ClassId, j: usize, m: usize, rho: f64) -> Result<Complex64> {
    hstar_weight_damped(k, j, m, rho, k.delta())
}

/// log |Delta_{j,m}/Delta| without the j=2 anchor weight — the quantity whose
/// large-rho behavior the asymptotic tables describe.
pub fn log_abs_bare_ratio(k: ClassId, j: usize, m: usize, rho: f64) -> f64 {
    let num = delta_cofactor_scaled(k, j, m, rho);
    let den = delta_scaled(k, rho);
    num.ln_abs() - den.ln_abs()
}

// ---------------------------------------------------------------------------
// Independent determinant oracle (compensated accumulation)
// ---------------------------------------------------------------------------

/// Rows of the class's boundary matrix applied to the basis e^{lambda x}:
/// entry = w(lambda) * e^{s * lambda} with s = 0 at the left end, 1 at the right.
fn matrix_entry(k: ClassId, row: usize, lam: Complex64) -> Complex64 {
    let e = lam.exp();
    match (k, row) {
        (ClassId::K1, 0) => Complex64::new(1.0, 0.0),
        (ClassId::K1, 1) => e,
        (ClassId::K1, 2) => lam * e,
        (ClassId::K2, 0) => Complex64::new(1.0, 0.0),
        (ClassId::K2, 1) => lam * e,
        (ClassId::K2, 2) => lam * lam * e,
        (ClassId::K3, 0) => lam * lam,
        (ClassId::K3, 1) => e,
        (ClassId::K3, 2) => lam * e,
        (ClassId::K4, 0) => lam * lam,
        (ClassId::K4, 1) => lam * e,
        (ClassId::K4, 2) => lam * lam * e,
        _ => unreachable!(),
    }
}

fn det3_dd(m: &[[Complex64; 3]; 3]) -> Complex64 {
    let e = |r: usize, c: usize| DdC::from_c64(m[r][c]);
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| {
        e(r1, c1).mul(e(r2, c2)).sub(e(r1, c2).mul(e(r2, c1)))
    };
    let d = e(0, 0)
        .mul(minor(1, 2, 1, 2))
        .sub(e(0, 1).mul(minor(1, 2, 0, 2)))
        .add(e(0, 2).mul(minor(1, 2, 0, 1)));
    d.to_c64()
}

/// Determinant of A^k with column j replaced by the unit vector e_m,
/// by direct cofactor expansion in compensated arithmetic. Valid while
/// e^{lambda_2} fits in f64 (rho below ~800).
pub fn cofactor_oracle_damped(k: ClassId, j: usize, m: usize, rho: f64, c: f64) -> Complex64 {
    let l = char_roots_damped(rho, c);
    let mut mat = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (col, lam) in l.iter().enumerate() {
        for row in 0..3 {
            mat[row][col] = matrix_entry(k, row, *lam);
        }
    }
    for row in 0..3 {
        mat[row][j - 1] = if row == m - 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    det3_dd(&mat)
}

pub fn cofactor_oracle(k: ClassId, j: usize, m: usize, rho: f64) -> Complex64 {
    cofactor_oracle_damped(k, j, m, rho, k.delta())
}

pub fn delta_oracle(k: ClassId, rho: f64) -> Complex64 {
    let l = char_roots_damped(rho, k.delta());
    let mut mat = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (col, lam) in l.iter().enumerate() {
        for row in 0..3 {
            mat[row][col] = matrix_entry(k, row, *lam);
        }
    }
    det3_dd(&mat)
}

// ---------------------------------------------------------------------------
// Large-rho asymptotics
// ---------------------------------------------------------------------------

/// Fitted large-rho model log|ratio| = const + slope*log(rho) + rate*rho.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub slope: f64,
    pub rate: f64,
}

/// Least-squares fit of the bare kernel ratio over log-spaced rho in [lo, hi].
pub fn fit_kernel_asymptotics(k: ClassId, j: usize, m: usize, lo: f64, hi: f64, n: usize) -> AsymptoticFit {
    assert!(n >= 3 && lo > 0.0 && hi > lo);
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for i in 0..n {
        let rho = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let row = [1.0, rho.ln(), rho];
        let y = log_abs_bare_ratio(k, j, m, rho);
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
            atb[r] += row[r] * y;
        }
    }
    let sol = solve3(ata, atb);
    AsymptoticFit { slope: sol[1], rate: sol[2] }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c2 in col..3 {
                a[row][c2] -= f * a[col][c2];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for c2 in row + 1..3 {
            s -= a[row][c2] * x[c2];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Large-rho (slope, rate) of |Delta_{j,m}/Delta| for every class and index
/// pair, derived from the determinant formulas and confirmed by 50-digit
/// evaluation. Two printed entries differ from these derived values — see
/// the class-2 (2,1) and class-3 (1,2) notes in the project history — and the
/// determinant formulas win. Indexed [j-1][m-1].
pub fn reference_asymptotics(k: ClassId) -> [[AsymptoticFit; 3]; 3] {
    let f = |slope: f64, rate_units: f64| AsymptoticFit { slope, rate: rate_units * SQRT3 };
    match k {
        ClassId::K1 => [
            [f(0.0, -0.5), f(0.0, 0.0), f(-1.0, 0.0)],
            [f(0.0, -1.0), f(0.0, -0.5), f(-1.0, -0.5)],
            [f(0.0, 0.0), f(0.0, 0.0), f(-1.0, 0.0)],
        ],
        ClassId::K2 => [
            [f(0.0, -0.5), f(-1.0, 0.0), f(-2.0, 0.0)],
            [f(0.0, -1.0), f(-1.0, -0.5), f(-2.0, -0.5)],
            [f(0.0, 0.0), f(-1.0, 0.0), f(-2.0, 0.0)],
        ],
        ClassId::K3 => [
            [f(-2.0, -0.5), f(0.0, 0.0), f(-1.0, 0.0)],
            [f(-2.0, -1.0), f(0.0, -0.5), f(-1.0, -0.5)],
            [f(-2.0, 0.0), f(0.0, 0.0), f(-1.0, 0.0)],
        ],
        ClassId::K4 => [
            [f(-2.0, -0.5), f(-1.0, 0.0), f(-2.0, 0.0)],
            [f(-2.0, -1.0), f(-1.0, -0.5), f(-2.0, -0.5)],
            [f(-2.0, 0.0), f(-1.0, 0.0), f(-2.0, 0.0)],
        ],
    }
}

// ---------------------------------------------------------------------------
// Nonvanishing sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NonvanishingReport {
    pub class: ClassId,
    pub samples: usize,
    pub skipped_degenerate: usize,
    /// Smallest |Delta(s)| relative to the largest of its three terms.
    pub min_relative: f64,
    pub min_at: Complex64,
    pub flagged: Vec<Complex64>,
}

/// Sample |Delta^k(s)| over points with Re s >= 0 and flag relative zeros.
/// The k<=3 root-coincidence point s = 0 is excluded (Delta vanishes there by
/// coincidence of the roots; the kernel weights, not Delta, stay meaningful).
pub fn verify_nonvanishing(k: ClassId, samples: &[Complex64]) -> NonvanishingReport {
    let tol = 1e-10;
    let mut report = NonvanishingReport {
        class: k,
        samples: 0,
        skipped_degenerate: 0,
        min_relative: f64::INFINITY,
        min_at: Complex64::new(0.0, 0.0),
        flagged: Vec::new(),
    };
    for &s in samples {
        assert!(s.re >= 0.0, "nonvanishing samples must have Re s >= 0");
        if k != ClassId::K4 && s.norm() < 1e-12 {
            report.skipped_degenerate += 1;
            continue;
        }
        let l = roots_at_s(s, k.delta());
        let terms = delta_terms(k, &l);
        let m = terms.iter().map(|(_, e)| e.re).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut max_term = 0.0f64;
        for (c, e) in terms {
            let t = c * Complex64::from_polar((e.re - m).exp(), e.im);
            max_term = max_term.max(t.norm());
            acc += t;
        }
        let rel = if max_term > 0.0 { acc.norm() / max_term } else { 0.0 };
        report.samples += 1;
        if rel < report.min_relative {
            report.min_relative = rel;
            report.min_at = s;
        }
        if rel <= tol {
            report.flagged.push(s);
        }
    }
    report
}
