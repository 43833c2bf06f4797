//! Gridded scalar and vector fields.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Which wall-normal coordinate a field is sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    /// Physical `y` on the stretched outer axis.
    Outer,
    /// Stretched layer variable `z` on the uniform layer axis.
    Layer,
}

impl Coord {
    pub fn tag(&self) -> &'static str {
        match self {
            Coord::Outer => "outer",
            Coord::Layer => "layer",
        }
    }
}

/// Scalar samples stored x-major: `data[i * ny + j]` is node `(x_i, y_j)`,
/// so each wall-normal column is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub coord: Coord,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(nx: usize, ny: usize, coord: Coord) -> Self {
        Self { nx, ny, coord, data: vec![0.0; nx * ny] }
    }

    pub fn outer(grid: &Grid) -> Self {
        Self::zeros(grid.x.n, grid.y.len(), Coord::Outer)
    }

    pub fn layer(grid: &Grid) -> Self {
        Self::zeros(grid.x.n, grid.z.len(), Coord::Layer)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.nx, self.ny, self.coord)
    }

    /// Samples `f(x, y)` (or `f(x, z)` for layer fields) at the nodes.
    pub fn from_fn(grid: &Grid, coord: Coord, f: impl Fn(f64, f64) -> f64) -> Self {
        let axis = match coord {
            Coord::Outer => &grid.y,
            Coord::Layer => &grid.z,
        };
        let ny = axis.len();
        let mut out = Self::zeros(grid.x.n, ny, coord);
        for i in 0..grid.x.n {
            let x = grid.x.node(i);
            for j in 0..ny {
                out.data[i * ny + j] = f(x, axis.nodes[j]);
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ny + j] = v;
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.ny..(i + 1) * self.ny]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ny..(i + 1) * self.ny]
    }

    /// Values along the row `j` (fixed wall distance) as an x-profile.
    pub fn row(&self, j: usize) -> Vec<f64> {
        (0..self.nx).map(|i| self.at(i, j)).collect()
    }

    pub fn set_row(&mut self, j: usize, vals: &[f64]) {
        for (i, v) in vals.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.nx, self.ny),
                found: format!("{}x{}", other.nx, other.ny),
            });
        }
        if self.coord != other.coord {
            return Err(Error::CoordMismatch(format!(
                "{} field combined with {} field",
                self.coord.tag(),
                other.coord.tag()
            )));
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert!(self.same_shape(other).is_ok());
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    /// `self += a * x * y` pointwise.
    pub fn add_product(&mut self, a: f64, x: &Self, y: &Self) {
        for ((s, p), q) in self.data.iter_mut().zip(&x.data).zip(&y.data) {
            *s += a * p * q;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { nx: self.nx, ny: self.ny, coord: self.coord, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Linear combination `sum_k c_k f_k` of same-shaped fields.
    pub fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.zeros_like();
        for (c, f) in terms {
            out.axpy(*c, f);
        }
        out
    }
}

/// Two-component vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 2],
}

impl VectorField {
    pub fn new(a: ScalarField, b: ScalarField) -> Self {
        Self { c: [a, b] }
    }

    pub fn outer(grid: &Grid) -> Self {
        Self::new(ScalarField::outer(grid), ScalarField::outer(grid))
    }

    pub fn layer(grid: &Grid) -> Self {
        Self::new(ScalarField::layer(grid), ScalarField::layer(grid))
    }

    pub fn zeros_like(&self) -> Self {
        Self::new(self.c[0].zeros_like(), self.c[1].zeros_like())
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.c[0].axpy(a, &other.c[0]);
        self.c[1].axpy(a, &other.c[1]);
    }

    pub fn scale(&mut self, a: f64) {
        self.c[0].scale(a);
        self.c[1].scale(a);
    }

    pub fn max_abs(&self) -> f64 {
        self.c[0].max_abs().max(self.c[1].max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.c[0].is_finite() && self.c[1].is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn layout_is_x_major() {
        let grid = Grid::new(GridSpec { n_x: 4, n_y: 10, n_z: 9, ..GridSpec::default() }).unwrap();
        let f = ScalarField::from_fn(&grid, Coord::Outer, |x, y| x + 100.0 * y);
        assert_eq!(f.column(2)[0], grid.x.node(2));
        assert!((f.at(1, 9) - (grid.x.node(1) + 800.0)).abs() < 1e-12);
        let g = ScalarField::layer(&grid);
        assert!(f.same_shape(&g).is_err());
    }

    #[test]
    fn combine_is_linear() {
        let grid = Grid::new(GridSpec { n_x: 4, n_y: 10, n_z: 9, ..GridSpec::default() }).unwrap();
        let a = ScalarField::from_fn(&grid, Coord::Outer, |x, _| x);
        let b = ScalarField::from_fn(&grid, Coord::Outer, |_, y| y);
        let c = ScalarField::combine(&[(2.0, &a), (-1.0, &b)]);
        for i in 0..4 {
            for j in 0..10 {
                assert!((c.at(i, j) - (2.0 * a.at(i, j) - b.at(i, j))).abs() < 1e-14);
            }
        }
    }
}
