//! Tensor grids over (0,L)×[0,T] and the space-time sample arrays that live on them.

use crate::error::{KdvError, Result};

pub const MIN_POINTS: usize = 8;

/// Uniform closed grid on [0,L]×[0,T] with `nx` space and `nt` time samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub horizon: f64,
    pub nx: usize,
    pub nt: usize,
}

impl Grid {
    pub fn new(length: f64, horizon: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(length > 0.0) || !(horizon > 0.0) {
            return Err(KdvError::ShapeMismatch(format!(
                "need L > 0 and T > 0, got L={length}, T={horizon}"
            )));
        }
        if nx < MIN_POINTS || nt < MIN_POINTS {
            return Err(KdvError::GridTooCoarse(format!(
                "need nx >= {MIN_POINTS} and nt >= {MIN_POINTS}, got nx={nx}, nt={nt}"
            )));
        }
        Ok(Grid { length, horizon, nx, nt })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / (self.nx - 1) as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / (self.nt - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.length / (self.nx - 1) as f64
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.horizon / (self.nt - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|n| self.t(n)).collect()
    }

    /// The same spatial interval rescaled to (0,1) with t -> t/L^3.
    pub fn unit_rescaled(&self) -> Grid {
        Grid {
            length: 1.0,
            horizon: self.horizon / self.length.powi(3),
            nx: self.nx,
            nt: self.nt,
        }
    }
}

/// Real space-time samples u(x_i, t_n), stored x-major so each spatial
/// station's time signal is contiguous.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field { grid: grid.clone(), values: vec![0.0; grid.nx * grid.nt] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Field::zeros(grid);
        for i in 0..grid.nx {
            let x = grid.x(i);
            for n in 0..grid.nt {
                out[(i, n)] = f(x, grid.t(n));
            }
        }
        out
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx * grid.nt {
            return Err(KdvError::ShapeMismatch(format!(
                "expected {} samples, got {}",
                grid.nx * grid.nt,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KdvError::ShapeMismatch("non-finite field sample".into()));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    #[inline]
    pub fn index(&self, ix: usize, it: usize) -> usize {
        debug_assert!(ix < self.grid.nx && it < self.grid.nt);
        ix * self.grid.nt + it
    }

    /// Contiguous time signal at space index `ix`.
    pub fn time_row(&self, ix: usize) -> &[f64] {
        &self.values[ix * self.grid.nt..(ix + 1) * self.grid.nt]
    }

    pub fn time_row_mut(&mut self, ix: usize) -> &mut [f64] {
        &mut self.values[ix * self.grid.nt..(ix + 1) * self.grid.nt]
    }

    /// Space slice at time index `it` (strided copy).
    pub fn space_slice(&self, it: usize) -> Vec<f64> {
        (0..self.grid.nx).map(|i| self[(i, it)]).collect()
    }

    pub fn set_space_slice(&mut self, it: usize, slice: &[f64]) {
        assert_eq!(slice.len(), self.grid.nx);
        for i in 0..self.grid.nx {
            self[(i, it)] = slice[i];
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L2((0,L)x(0,T)) norm by trapezoid rule in both directions.
    pub fn l2_space_time(&self) -> f64 {
        let (dx, dt) = (self.grid.dx(), self.grid.dt());
        let mut acc = 0.0;
        for i in 0..self.grid.nx {
            let wx = if i == 0 || i == self.grid.nx - 1 { 0.5 } else { 1.0 };
            let row = self.time_row(i);
            let mut rowacc = 0.0;
            for (n, v) in row.iter().enumerate() {
                let wt = if n == 0 || n == self.grid.nt - 1 { 0.5 } else { 1.0 };
                rowacc += wt * v * v;
            }
            acc += wx * rowacc;
        }
        (acc * dx * dt).sqrt()
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.clone();
        for v in out.values_mut() {
            *v *= a;
        }
        out
    }

    /// self + a*other, grids must match.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        assert_eq!(self.grid, other.grid);
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v += a * w;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Field {
    type Output = f64;
    #[inline]
    fn index(&self, (ix, it): (usize, usize)) -> &f64 {
        &self.values[ix * self.grid.nt + it]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Field {
    #[inline]
    fn index_mut(&mut self, (ix, it): (usize, usize)) -> &mut f64 {
        &mut self.values[ix * self.grid.nt + it]
    }
}

/// Trapezoid-rule L2 norm of a sampled signal with uniform spacing `h`.
pub fn trapezoid_l2(samples: &[f64], h: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (n, v) in samples.iter().enumerate() {
        let w = if n == 0 || n == samples.len() - 1 { 0.5 } else { 1.0 };
        acc += w * v * v;
    }
    (acc * h).sqrt()
}

/// Trapezoid-rule integral of uniformly sampled values.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let interior: f64 = samples[1..samples.len() - 1].iter().sum();
    h * (0.5 * samples[0] + interior + 0.5 * samples[samples.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_samples_increase() {
        let g = Grid::new(2.0, 1.0, 9, 17).unwrap();
        assert!(g.dx() > 0.0 && g.dt() > 0.0);
        assert_eq!(g.x(0), 0.0);
        assert_eq!(g.x(8), 2.0);
        assert_eq!(g.t(16), 1.0);
        for i in 1..9 {
            assert!(g.x(i) > g.x(i - 1));
        }
    }

    #[test]
    fn grid_rejects_coarse() {
        assert!(matches!(Grid::new(1.0, 1.0, 7, 16), Err(KdvError::GridTooCoarse(_))));
        assert!(matches!(Grid::new(1.0, 1.0, 16, 7), Err(KdvError::GridTooCoarse(_))));
        assert!(Grid::new(-1.0, 1.0, 16, 16).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = Grid::new(1.0, 1.0, 8, 8).unwrap();
        let mut vals = vec![0.0; 64];
        vals[5] = f64::NAN;
        assert!(Field::from_values(&g, vals).is_err());
    }

    #[test]
    fn trapezoid_l2_matches_constant() {
        let h = 0.1;
        let s = vec![2.0; 11];
        // integral of 4 over [0,1] = 4
        assert!((trapezoid_l2(&s, h) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_rescale_maps_horizon() {
        let g = Grid::new(2.0, 1.0, 16, 16).unwrap();
        let u = g.unit_rescaled();
        assert_eq!(u.length, 1.0);
        assert!((u.horizon - 0.125).abs() < 1e-15);
    }
}
