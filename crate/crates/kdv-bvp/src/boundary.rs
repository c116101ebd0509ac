//! Boundary-condition classes, boundary data, and trace operators.
//!
//! A boundary operator row acts as
//!     B_i u = sum_j a[i][j] d^j/dx^j u(0,t) + b[i][j] d^j/dx^j u(L,t),
//! rows i = 1..3, derivative orders j = 0..2. Exactly four combinations of
//! zero/nonzero constraints on (a, b) yield a well-posed class; each class
//! splits into a principal part (one trace per slot, unit coefficient) and a
//! lower-order coupling part evaluated from traces of the current iterate.

use crate::error::{KdvError, Result};
use crate::grid::{Field, Grid};
use crate::stencil;

/// Entry magnitudes below this count as structural zeros when classifying
/// user-supplied coefficient matrices.
pub const COEFF_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassId {
    K1,
    K2,
    K3,
    K4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

impl ClassId {
    pub fn all() -> [ClassId; 4] {
        [ClassId::K1, ClassId::K2, ClassId::K3, ClassId::K4]
    }

    pub fn index(self) -> u8 {
        match self {
            ClassId::K1 => 1,
            ClassId::K2 => 2,
            ClassId::K3 => 3,
            ClassId::K4 => 4,
        }
    }

    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(ClassId::K1),
            2 => Ok(ClassId::K2),
            3 => Ok(ClassId::K3),
            4 => Ok(ClassId::K4),
            _ => Err(KdvError::ConfigInvalid(format!("class index {k} not in 1..=4"))),
        }
    }

    /// Zeroth-order damping switch of the auxiliary linear evolution.
    pub fn delta(self) -> f64 {
        match self {
            ClassId::K4 => 1.0,
            _ => 0.0,
        }
    }

    /// Principal trace of each slot: (endpoint, derivative order).
    pub fn principal_traces(self) -> [(End, usize); 3] {
        use End::*;
        match self {
            ClassId::K1 => [(Left, 0), (Right, 0), (Right, 1)],
            ClassId::K2 => [(Left, 0), (Right, 1), (Right, 2)],
            ClassId::K3 => [(Left, 2), (Right, 0), (Right, 1)],
            ClassId::K4 => [(Left, 2), (Right, 1), (Right, 2)],
        }
    }

    /// Coefficient-matrix row feeding each slot. Slots are ordered by the
    /// derivative order of their principal trace, which permutes rows 2 and 3
    /// for the classes whose second-derivative row sorts last.
    pub fn slot_rows(self) -> [usize; 3] {
        match self {
            ClassId::K1 | ClassId::K3 => [0, 1, 2],
            ClassId::K2 | ClassId::K4 => [0, 2, 1],
        }
    }

    /// Time-Sobolev exponents of the three boundary slots at regularity tier s.
    pub fn sigma_exponents(self, s: f64) -> [f64; 3] {
        match self {
            ClassId::K1 => [(s + 1.0) / 3.0, (s + 1.0) / 3.0, s / 3.0],
            ClassId::K2 => [(s + 1.0) / 3.0, s / 3.0, (s - 1.0) / 3.0],
            ClassId::K3 => [(s - 1.0) / 3.0, (s + 1.0) / 3.0, s / 3.0],
            ClassId::K4 => [(s - 1.0) / 3.0, (s - 1.0) / 3.0, s / 3.0],
        }
    }

    /// Names of the hypothesis set this class is equivalent to.
    pub fn hypotheses(self) -> [&'static str; 3] {
        match self {
            ClassId::K1 => ["A1", "B1", "C"],
            ClassId::K2 => ["A1", "B2", "C"],
            ClassId::K3 => ["A2", "B1", "C"],
            ClassId::K4 => ["A2", "B2", "C"],
        }
    }
}

/// Regularity tiers sit outside the excluded half-integer thresholds.
pub fn validate_tier(s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(KdvError::ConfigInvalid(format!("tier s={s} must be finite and >= 0")));
    }
    let twice = 2.0 * s;
    let nearest_odd = (twice - 1.0) / 2.0; // s = (2j-1)/2  <=>  2s is odd
    if (twice.round() - twice).abs() < 1e-9 && (twice.round() as i64) % 2 == 1 {
        let _ = nearest_odd;
        return Err(KdvError::ExcludedTier(s));
    }
    Ok(s)
}

type Mat3 = [[f64; 3]; 3];

fn is_zero(x: f64) -> bool {
    x.abs() < COEFF_ZERO_TOL
}

fn hyp_a1(a: &Mat3, b: &Mat3) -> bool {
    is_zero(a[0][2]) && is_zero(a[0][1]) && !is_zero(a[0][0])
        && is_zero(b[0][2]) && is_zero(b[0][1]) && is_zero(b[0][0])
}

fn hyp_a2(a: &Mat3, b: &Mat3) -> bool {
    !is_zero(a[0][2]) && is_zero(b[0][2])
}

fn hyp_b1(a: &Mat3, b: &Mat3) -> bool {
    is_zero(a[1][2]) && is_zero(a[1][1]) && is_zero(a[1][0])
        && !is_zero(b[1][0]) && is_zero(b[1][2]) && is_zero(b[1][1])
}

fn hyp_b2(a: &Mat3, b: &Mat3) -> bool {
    !is_zero(b[1][2]) && is_zero(a[1][2])
}

fn hyp_c(a: &Mat3, b: &Mat3) -> bool {
    is_zero(a[2][2]) && is_zero(a[2][1]) && !is_zero(b[2][1]) && is_zero(b[2][2])
}

/// A validated boundary-operator triple: class index plus the full raw
/// coefficient matrices (rows = functional index, columns = derivative order).
#[derive(Debug, Clone)]
pub struct BoundaryClass {
    pub id: ClassId,
    pub a: Mat3,
    pub b: Mat3,
    /// Principal (nonzero) coefficient of each slot's row, used to normalize.
    principal: [f64; 3],
}

impl BoundaryClass {
    /// Classify raw coefficient matrices against the four hypothesis sets.
    pub fn from_matrices(a: Mat3, b: Mat3) -> Result<Self> {
        let a1 = hyp_a1(&a, &b);
        let a2 = hyp_a2(&a, &b);
        let b1 = hyp_b1(&a, &b);
        let b2 = hyp_b2(&a, &b);
        let c = hyp_c(&a, &b);
        let matches = [a1 && b1 && c, a1 && b2 && c, a2 && b1 && c, a2 && b2 && c];
        let id = match matches.iter().filter(|m| **m).count() {
            0 => return Err(KdvError::NoClassMatch),
            1 => {
                let k = matches.iter().position(|m| *m).unwrap();
                [ClassId::K1, ClassId::K2, ClassId::K3, ClassId::K4][k]
            }
            // A1/A2 and B1/B2 are mutually exclusive by construction.
            _ => return Err(KdvError::AmbiguousClass),
        };
        let principal = Self::principal_coeffs(id, &a, &b);
        Ok(BoundaryClass { id, a, b, principal })
    }

    /// The class template with unit principal coefficients and no coupling.
    pub fn principal_only(id: ClassId) -> Self {
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        for (row, (end, order)) in id.slot_rows().iter().zip(id.principal_traces()) {
            match end {
                End::Left => a[*row][order] = 1.0,
                End::Right => b[*row][order] = 1.0,
            }
        }
        BoundaryClass::from_matrices(a, b).expect("template satisfies its own hypotheses")
    }

    fn principal_coeffs(id: ClassId, a: &Mat3, b: &Mat3) -> [f64; 3] {
        let rows = id.slot_rows();
        let mut p = [0.0; 3];
        for (slot, (end, order)) in id.principal_traces().iter().enumerate() {
            let row = rows[slot];
            p[slot] = match end {
                End::Left => a[row][*order],
                End::Right => b[row][*order],
            };
        }
        p
    }

    pub fn principal(&self) -> [f64; 3] {
        self.principal
    }

    /// Raw functional row i (0-based) applied to a trace set: the Sigma formula.
    pub fn raw_row(&self, i: usize, tr: &TraceSet) -> Vec<f64> {
        let nt = tr.len();
        let left = [&tr.u0, &tr.ux0, &tr.uxx0];
        let right = [&tr.u1, &tr.ux1, &tr.uxx1];
        let mut out = vec![0.0; nt];
        for j in 0..3 {
            let (ca, cb) = (self.a[i][j], self.b[i][j]);
            if ca != 0.0 {
                for (o, v) in out.iter_mut().zip(left[j].iter()) {
                    *o += ca * v;
                }
            }
            if cb != 0.0 {
                for (o, v) in out.iter_mut().zip(right[j].iter()) {
                    *o += cb * v;
                }
            }
        }
        out
    }

    /// Principal part: the slot-ordered trace triple with unit coefficients.
    pub fn apply_principal(&self, tr: &TraceSet) -> BoundaryData {
        let signals = self.id.principal_traces().map(|(end, order)| {
            let s = tr.trace(end, order);
            s.to_vec()
        });
        BoundaryData::raw(self.id, signals, tr.horizon)
    }

    /// Lower-order coupling part, normalized by each slot's principal
    /// coefficient so that principal + coupling matches the raw row / principal.
    pub fn apply_coupling(&self, tr: &TraceSet) -> BoundaryData {
        let nt = tr.len();
        let rows = self.id.slot_rows();
        let mut signals: [Vec<f64>; 3] =
            [vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]];
        for (slot, (end, order)) in self.id.principal_traces().iter().enumerate() {
            let row = rows[slot];
            let p = self.principal[slot];
            let left = [&tr.u0, &tr.ux0, &tr.uxx0];
            let right = [&tr.u1, &tr.ux1, &tr.uxx1];
            for j in 0..3 {
                let mut ca = self.a[row][j];
                let mut cb = self.b[row][j];
                // skip the principal entry itself
                if *end == End::Left && j == *order {
                    ca = 0.0;
                } else if *end == End::Right && j == *order {
                    cb = 0.0;
                }
                if ca != 0.0 {
                    for (o, v) in signals[slot].iter_mut().zip(left[j].iter()) {
                        *o += ca / p * v;
                    }
                }
                if cb != 0.0 {
                    for (o, v) in signals[slot].iter_mut().zip(right[j].iter()) {
                        *o += cb / p * v;
                    }
                }
            }
        }
        BoundaryData::raw(self.id, signals, tr.horizon)
    }
}

/// All six boundary traces of a field, sharing the field's time grid.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub ux0: Vec<f64>,
    pub ux1: Vec<f64>,
    pub uxx0: Vec<f64>,
    pub uxx1: Vec<f64>,
    pub horizon: f64,
}

impl TraceSet {
    /// Boundary traces by one-sided stencils at both ends.
    pub fn extract(u: &Field) -> Result<TraceSet> {
        let g = &u.grid;
        if g.nx < 8 {
            return Err(KdvError::GridTooCoarse(format!("trace stencils need nx >= 8, got {}", g.nx)));
        }
        let (nx, nt, dx) = (g.nx, g.nt, g.dx());
        let mut tr = TraceSet {
            u0: vec![0.0; nt],
            u1: vec![0.0; nt],
            ux0: vec![0.0; nt],
            ux1: vec![0.0; nt],
            uxx0: vec![0.0; nt],
            uxx1: vec![0.0; nt],
            horizon: g.horizon,
        };
        let mut col = vec![0.0; nx];
        for n in 0..nt {
            for i in 0..nx {
                col[i] = u[(i, n)];
            }
            tr.u0[n] = col[0];
            tr.u1[n] = col[nx - 1];
            tr.ux0[n] = stencil::d1_left(&col, dx);
            tr.ux1[n] = stencil::d1_right(&col, dx);
            tr.uxx0[n] = stencil::d2_left(&col, dx);
            tr.uxx1[n] = stencil::d2_right(&col, dx);
        }
        Ok(tr)
    }

    pub fn from_parts(
        u0: Vec<f64>,
        u1: Vec<f64>,
        ux0: Vec<f64>,
        ux1: Vec<f64>,
        uxx0: Vec<f64>,
        uxx1: Vec<f64>,
        horizon: f64,
    ) -> TraceSet {
        TraceSet { u0, u1, ux0, ux1, uxx0, uxx1, horizon }
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    pub fn trace(&self, end: End, order: usize) -> &[f64] {
        match (end, order) {
            (End::Left, 0) => &self.u0,
            (End::Left, 1) => &self.ux0,
            (End::Left, 2) => &self.uxx0,
            (End::Right, 0) => &self.u1,
            (End::Right, 1) => &self.ux1,
            (End::Right, 2) => &self.uxx1,
            _ => panic!("derivative order {order} out of range"),
        }
    }
}

/// Slot-ordered boundary data triple with its class-dependent Sobolev exponents.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub class: ClassId,
    pub h: [Vec<f64>; 3],
    pub sigma: [f64; 3],
    pub horizon: f64,
}

impl BoundaryData {
    /// Data at regularity tier s; signals must vanish at t = 0.
    pub fn new(class: ClassId, h: [Vec<f64>; 3], horizon: f64, s: f64) -> Result<Self> {
        let s = validate_tier(s)?;
        let data = BoundaryData { class, h, sigma: class.sigma_exponents(s), horizon };
        data.check_initial_vanishing()?;
        Ok(data)
    }

    /// Internal constructor for solver-produced signals (tier s = 0 exponents,
    /// no compatibility check — corrections carry solver-tolerance residue at t=0).
    pub fn raw(class: ClassId, h: [Vec<f64>; 3], horizon: f64) -> Self {
        BoundaryData { class, h, sigma: class.sigma_exponents(0.0), horizon }
    }

    pub fn zero(class: ClassId, nt: usize, horizon: f64) -> Self {
        BoundaryData::raw(class, [vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]], horizon)
    }

    pub fn len(&self) -> usize {
        self.h[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.h[0].is_empty()
    }

    fn check_initial_vanishing(&self) -> Result<()> {
        for (slot, sig) in self.h.iter().enumerate() {
            let scale = sig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if sig[0].abs() > 1e-8 * scale {
                return Err(KdvError::IncompatibleData { slot, mismatch: sig[0].abs() });
            }
        }
        Ok(())
    }

    pub fn axpy(&self, a: f64, other: &BoundaryData) -> BoundaryData {
        let mut out = self.clone();
        for slot in 0..3 {
            for (o, v) in out.h[slot].iter_mut().zip(other.h[slot].iter()) {
                *o += a * v;
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> BoundaryData {
        let mut out = self.clone();
        for slot in 0..3 {
            for o in out.h[slot].iter_mut() {
                *o *= a;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.h
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn class1_matrices(a30: f64, b30: f64) -> (Mat3, Mat3) {
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        a[0][0] = 1.0; // a10
        b[1][0] = 1.0; // b20
        b[2][1] = 1.0; // b31
        a[2][0] = a30;
        b[2][0] = b30;
        (a, b)
    }

    #[test]
    fn classify_class1_remark_example() {
        let (a, b) = class1_matrices(0.7, -0.3);
        let cls = BoundaryClass::from_matrices(a, b).unwrap();
        assert_eq!(cls.id, ClassId::K1);
        assert_eq!(cls.id.delta(), 0.0);
    }

    #[test]
    fn classify_class4_remark_example() {
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        a[0][2] = 1.0; // a12 != 0 (A2)
        b[1][2] = 1.0; // b22 != 0, a22 = 0 (B2)
        b[2][1] = 1.0; // b31 != 0, b32 = a32 = a31 = 0 (C)
        a[0][0] = 0.4;
        b[0][1] = -0.2;
        let cls = BoundaryClass::from_matrices(a, b).unwrap();
        assert_eq!(cls.id, ClassId::K4);
        assert_eq!(cls.id.delta(), 1.0);
    }

    #[test]
    fn classify_all_zero_is_no_match() {
        let z = [[0.0; 3]; 3];
        assert!(matches!(BoundaryClass::from_matrices(z, z), Err(KdvError::NoClassMatch)));
    }

    #[test]
    fn templates_round_trip_through_classification() {
        for id in ClassId::all() {
            let cls = BoundaryClass::principal_only(id);
            assert_eq!(cls.id, id);
            let re = BoundaryClass::from_matrices(cls.a, cls.b).unwrap();
            assert_eq!(re.id, id);
        }
    }

    #[test]
    fn traces_of_linear_field() {
        let g = Grid::new(2.0, 1.0, 33, 9).unwrap();
        let u = Field::from_fn(&g, |x, _| x);
        let tr = TraceSet::extract(&u).unwrap();
        for n in 0..g.nt {
            assert!((tr.ux0[n] - 1.0).abs() < 1e-12);
            assert!((tr.ux1[n] - 1.0).abs() < 1e-12);
            assert!(tr.uxx0[n].abs() < 1e-10);
            assert!(tr.uxx1[n].abs() < 1e-10);
            assert!(tr.u0[n].abs() < 1e-15);
            assert!((tr.u1[n] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn traces_of_sine_match_closed_form() {
        let g = Grid::new(1.0, 1.0, 129, 9).unwrap();
        let u = Field::from_fn(&g, |x, _| (std::f64::consts::PI * x).sin());
        let tr = TraceSet::extract(&u).unwrap();
        let dx = g.dx();
        let tol = 40.0 * dx.powi(3); // order-3 stencil truncation
        for n in 0..g.nt {
            assert!((tr.ux0[n] - std::f64::consts::PI).abs() < tol);
            assert!((tr.ux1[n] + std::f64::consts::PI).abs() < tol);
        }
    }

    #[test]
    fn traces_of_zero_field_vanish() {
        let g = Grid::new(1.0, 1.0, 16, 8).unwrap();
        let tr = TraceSet::extract(&Field::zeros(&g)).unwrap();
        assert!(tr.u0.iter().chain(&tr.uxx1).all(|v| *v == 0.0));
    }

    #[test]
    fn coupling_vanishes_without_lower_order_terms() {
        let (a, b) = class1_matrices(0.0, 0.0);
        let cls = BoundaryClass::from_matrices(a, b).unwrap();
        let g = Grid::new(1.0, 1.0, 16, 8).unwrap();
        let u = Field::from_fn(&g, |x, t| x * x + t);
        let tr = TraceSet::extract(&u).unwrap();
        let c = cls.apply_coupling(&tr);
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn coupling_class1_on_constant_field() {
        // a30 = 2, b30 = -1 on u = 1: slot 3 carries 2*1 + (-1)*1 = 1
        let (a, b) = class1_matrices(2.0, -1.0);
        let cls = BoundaryClass::from_matrices(a, b).unwrap();
        let g = Grid::new(1.0, 1.0, 16, 8).unwrap();
        let tr = TraceSet::extract(&Field::from_fn(&g, |_, _| 1.0)).unwrap();
        let c = cls.apply_coupling(&tr);
        assert!(c.h[0].iter().all(|v| v.abs() < 1e-12));
        assert!(c.h[1].iter().all(|v| v.abs() < 1e-12));
        assert!(c.h[2].iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn coupling_class4_on_linear_field() {
        // u = x on (0, L): traces (u(0), u_x(0), u(L), u_x(L)) = (0, 1, L, 1)
        let mut a = [[0.0; 3]; 3];
        let mut b = [[0.0; 3]; 3];
        a[0][2] = 1.0;
        b[1][2] = 1.0;
        b[2][1] = 1.0;
        a[0][0] = 0.5; // a10
        a[0][1] = -1.0; // a11
        b[0][0] = 2.0; // b10
        b[0][1] = 0.25; // b11
        a[1][0] = 3.0; // a20
        a[1][1] = 1.0; // a21
        b[1][0] = -2.0; // b20
        b[1][1] = 0.5; // b21
        a[2][0] = 1.5; // a30
        b[2][0] = -0.5; // b30
        let cls = BoundaryClass::from_matrices(a, b).unwrap();
        assert_eq!(cls.id, ClassId::K4);
        let lgth = 2.0;
        let g = Grid::new(lgth, 1.0, 33, 8).unwrap();
        let tr = TraceSet::extract(&Field::from_fn(&g, |x, _| x)).unwrap();
        let c = cls.apply_coupling(&tr);
        // slot 1 (row 1): a10*0 + a11*1 + b10*L + b11*1
        let s1 = 0.5 * 0.0 + (-1.0) * 1.0 + 2.0 * lgth + 0.25 * 1.0;
        // slot 2 (row 3): a30*0 + b30*L
        let s2 = 1.5 * 0.0 + (-0.5) * lgth;
        // slot 3 (row 2): a20*0 + a21*1 + b20*L + b21*1
        let s3 = 3.0 * 0.0 + 1.0 * 1.0 + (-2.0) * lgth + 0.5 * 1.0;
        for n in 0..8 {
            assert!((c.h[0][n] - s1).abs() < 1e-9, "slot1 {} vs {}", c.h[0][n], s1);
            assert!((c.h[1][n] - s2).abs() < 1e-9);
            assert!((c.h[2][n] - s3).abs() < 1e-9);
        }
    }

    #[test]
    fn principal_part_selects_slot_traces() {
        let g = Grid::new(1.0, 1.0, 33, 8).unwrap();
        // k=2 on u = x: (v(0), v_x(L), v_xx(L)) = (0, 1, 0)
        let cls = BoundaryClass::principal_only(ClassId::K2);
        let tr = TraceSet::extract(&Field::from_fn(&g, |x, _| x)).unwrap();
        let p = cls.apply_principal(&tr);
        assert!(p.h[0].iter().all(|v| v.abs() < 1e-12));
        assert!(p.h[1].iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(p.h[2].iter().all(|v| v.abs() < 1e-9));
        // k=3 on u = c: (v_xx(0), v(L), v_x(L)) = (0, c, 0)
        let cls3 = BoundaryClass::principal_only(ClassId::K3);
        let tr3 = TraceSet::extract(&Field::from_fn(&g, |_, _| 2.5)).unwrap();
        let p3 = cls3.apply_principal(&tr3);
        assert!(p3.h[0].iter().all(|v| v.abs() < 1e-9));
        assert!(p3.h[1].iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(p3.h[2].iter().all(|v| v.abs() < 1e-10));
    }

    /// principal + coupling reproduces the raw Sigma rows after slot
    /// normalization, for arbitrary hypothesis-satisfying matrices.
    #[test]
    fn decomposition_reproduces_raw_rows() {
        let cases: Vec<(Mat3, Mat3)> = vec![
            {
                let mut a = [[0.0; 3]; 3];
                let mut b = [[0.0; 3]; 3];
                a[0][0] = -2.0;
                b[1][0] = 3.0;
                b[2][1] = 0.5;
                a[2][0] = 0.9;
                b[2][0] = -1.4;
                (a, b)
            },
            {
                let mut a = [[0.0; 3]; 3];
                let mut b = [[0.0; 3]; 3];
                a[0][0] = 1.3; // A1
                b[1][2] = -0.8; // B2
                a[1][0] = 0.2;
                a[1][1] = -0.6;
                b[1][0] = 1.1;
                b[1][1] = 0.4;
                b[2][1] = 2.0; // C
                a[2][0] = -0.3;
                b[2][0] = 0.7;
                (a, b)
            },
            {
                let mut a = [[0.0; 3]; 3];
                let mut b = [[0.0; 3]; 3];
                a[0][2] = 0.6; // A2
                a[0][0] = 0.1;
                a[0][1] = -0.9;
                b[0][0] = 0.8;
                b[0][1] = 0.3;
                b[1][0] = -1.2; // B1
                b[2][1] = 1.7; // C
                a[2][0] = 0.5;
                b[2][0] = -0.25;
                (a, b)
            },
        ];
        let g = Grid::new(1.5, 0.5, 65, 9).unwrap();
        let u = Field::from_fn(&g, |x, t| (2.0 * x).sin() * (1.0 + t) + 0.3 * x * x);
        let tr = TraceSet::extract(&u).unwrap();
        for (a, b) in cases {
            let cls = BoundaryClass::from_matrices(a, b).unwrap();
            let p = cls.apply_principal(&tr);
            let cpl = cls.apply_coupling(&tr);
            let rows = cls.id.slot_rows();
            for slot in 0..3 {
                let raw = cls.raw_row(rows[slot], &tr);
                let pr = cls.principal()[slot];
                for n in 0..g.nt {
                    let composed = pr * (p.h[slot][n] + cpl.h[slot][n]);
                    assert!(
                        (composed - raw[n]).abs() < 1e-9 * (1.0 + raw[n].abs()),
                        "class {:?} slot {slot}: {} vs {}",
                        cls.id,
                        composed,
                        raw[n]
                    );
                }
            }
        }
    }

    #[test]
    fn tier_validation_refuses_half_integer_thresholds() {
        assert!(validate_tier(0.5).is_err());
        assert!(validate_tier(1.5).is_err());
        assert!(validate_tier(2.5).is_err());
        assert!(validate_tier(0.0).is_ok());
        assert!(validate_tier(1.0).is_ok());
        assert!(validate_tier(0.49999).is_ok());
    }

    #[test]
    fn boundary_data_requires_vanishing_start() {
        let h = [vec![0.5, 0.1], vec![0.0, 0.1], vec![0.0, 0.1]];
        assert!(matches!(
            BoundaryData::new(ClassId::K1, h, 1.0, 0.0),
            Err(KdvError::IncompatibleData { slot: 0, .. })
        ));
    }

    #[test]
    fn sigma_exponents_match_class_tables() {
        assert_eq!(ClassId::K1.sigma_exponents(0.0), [1.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert_eq!(ClassId::K2.sigma_exponents(0.0), [1.0 / 3.0, 0.0, -1.0 / 3.0]);
        assert_eq!(ClassId::K3.sigma_exponents(1.0), [0.0, 2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(ClassId::K4.sigma_exponents(0.0), [-1.0 / 3.0, -1.0 / 3.0, 0.0]);
    }
}
