//! Differential operators, norms and wall traces on the discrete grid.
//!
//! x-derivatives are spectral (FFT, Nyquist bin dropped from odd-order
//! derivatives); wall-normal derivatives use the mapped finite differences of
//! [`Axis`].

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::{Coord, ScalarField, VectorField};
use crate::grid::{Axis, Grid};

/// Complex Fourier coefficients in x for bins `0..=nx/2`, stored mode-major:
/// `data[m * ny + j]`.
#[derive(Debug, Clone)]
pub struct Modes {
    pub nk: usize,
    pub ny: usize,
    pub data: Vec<Complex64>,
}

impl Modes {
    pub fn mode(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.ny..(m + 1) * self.ny]
    }

    pub fn mode_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.data[m * self.ny..(m + 1) * self.ny]
    }
}

/// Grid plus FFT plans; all field operators hang off this.
pub struct Ops {
    pub grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Ops {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ops").field("grid", &self.grid.spec).finish()
    }
}

impl Ops {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.x.n);
        let inv = planner.plan_fft_inverse(grid.x.n);
        Self { grid, fwd, inv }
    }

    pub fn axis(&self, coord: Coord) -> &Axis {
        match coord {
            Coord::Outer => &self.grid.y,
            Coord::Layer => &self.grid.z,
        }
    }

    pub fn nx(&self) -> usize {
        self.grid.x.n
    }

    /// Full-length complex spectra, one per wall-normal node, laid out
    /// row-major by node.
    fn spectra(&self, f: &ScalarField) -> Vec<Complex64> {
        let (nx, ny) = (f.nx, f.ny);
        let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            let col = f.column(i);
            for j in 0..ny {
                buf[j * nx + i].re = col[j];
            }
        }
        self.fwd.process(&mut buf);
        buf
    }

    fn from_spectra(&self, mut buf: Vec<Complex64>, ny: usize, coord: Coord) -> ScalarField {
        let nx = self.nx();
        self.inv.process(&mut buf);
        let s = 1.0 / nx as f64;
        let mut out = ScalarField::zeros(nx, ny, coord);
        for i in 0..nx {
            let col = out.column_mut(i);
            for j in 0..ny {
                col[j] = buf[j * nx + i].re * s;
            }
        }
        out
    }

    /// Applies a Fourier multiplier given per FFT bin.
    pub fn multiplier(&self, f: &ScalarField, symbol: impl Fn(usize) -> Complex64) -> ScalarField {
        let nx = self.nx();
        let mut buf = self.spectra(f);
        let sym: Vec<Complex64> = (0..nx).map(symbol).collect();
        for row in buf.chunks_mut(nx) {
            for (v, s) in row.iter_mut().zip(&sym) {
                *v *= s;
            }
        }
        self.from_spectra(buf, f.ny, f.coord)
    }

    pub fn ddx(&self, f: &ScalarField) -> ScalarField {
        self.multiplier(f, |m| Complex64::new(0.0, self.grid.x.wavenumber(m)))
    }

    /// Second x-derivative, the exact square of the `ddx` symbol.
    pub fn ddxx(&self, f: &ScalarField) -> ScalarField {
        self.multiplier(f, |m| {
            let k = self.grid.x.wavenumber(m);
            Complex64::new(-k * k, 0.0)
        })
    }

    /// x-derivative of a single x-profile.
    pub fn ddx_profile(&self, p: &[f64]) -> Vec<f64> {
        let f = ScalarField { nx: p.len(), ny: 1, coord: Coord::Outer, data: p.to_vec() };
        self.ddx(&f).data
    }

    pub fn ddxx_profile(&self, p: &[f64]) -> Vec<f64> {
        let f = ScalarField { nx: p.len(), ny: 1, coord: Coord::Outer, data: p.to_vec() };
        self.ddxx(&f).data
    }

    pub fn to_modes(&self, f: &ScalarField) -> Modes {
        let nx = self.nx();
        let nk = nx / 2 + 1;
        let buf = self.spectra(f);
        let mut out = Modes { nk, ny: f.ny, data: vec![Complex64::new(0.0, 0.0); nk * f.ny] };
        for j in 0..f.ny {
            for m in 0..nk {
                out.data[m * f.ny + j] = buf[j * nx + m];
            }
        }
        out
    }

    pub fn from_modes(&self, modes: &Modes, coord: Coord) -> ScalarField {
        let nx = self.nx();
        let ny = modes.ny;
        let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            let row = &mut buf[j * nx..(j + 1) * nx];
            for m in 0..modes.nk {
                let v = modes.data[m * ny + j];
                if m == 0 || 2 * m == nx {
                    row[m] = Complex64::new(v.re, 0.0);
                } else {
                    row[m] = v;
                    row[nx - m] = v.conj();
                }
            }
        }
        self.from_spectra(buf, ny, coord)
    }

    fn columnwise(&self, f: &ScalarField, op: impl Fn(&Axis, &[f64], &mut [f64])) -> ScalarField {
        let axis = self.axis(f.coord);
        let mut out = f.zeros_like();
        for i in 0..f.nx {
            op(axis, f.column(i), out.column_mut(i));
        }
        out
    }

    /// Wall-normal derivative in the field's own coordinate.
    pub fn ddy(&self, f: &ScalarField) -> ScalarField {
        self.columnwise(f, |a, c, o| a.d1(c, o))
    }

    pub fn ddyy(&self, f: &ScalarField) -> ScalarField {
        self.columnwise(f, |a, c, o| a.d2(c, o))
    }

    /// Wall-normal derivative biased against the sign of `vel`.
    pub fn ddy_upwind(&self, f: &ScalarField, vel: &ScalarField) -> ScalarField {
        let axis = self.axis(f.coord);
        let mut out = f.zeros_like();
        for i in 0..f.nx {
            axis.d1_upwind(f.column(i), vel.column(i), out.column_mut(i));
        }
        out
    }

    pub fn grad(&self, f: &ScalarField) -> VectorField {
        VectorField::new(self.ddx(f), self.ddy(f))
    }

    pub fn div(&self, u: &VectorField) -> ScalarField {
        let mut d = self.ddx(&u.c[0]);
        d.axpy(1.0, &self.ddy(&u.c[1]));
        d
    }

    /// `(-d_y w, d_x w)`.
    pub fn perp_grad(&self, w: &ScalarField) -> VectorField {
        VectorField::new(self.ddy(w).scaled(-1.0), self.ddx(w))
    }

    /// `d_x u_2 - d_y u_1`.
    pub fn perp_div(&self, u: &VectorField) -> ScalarField {
        let mut d = self.ddx(&u.c[1]);
        d.axpy(-1.0, &self.ddy(&u.c[0]));
        d
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let mut d = self.ddxx(f);
        d.axpy(1.0, &self.ddyy(f));
        d
    }

    pub fn vector_laplacian(&self, u: &VectorField) -> VectorField {
        VectorField::new(self.laplacian(&u.c[0]), self.laplacian(&u.c[1]))
    }

    /// `(u . grad) f`.
    pub fn advect(&self, u: &VectorField, f: &ScalarField) -> ScalarField {
        let mut out = f.zeros_like();
        out.add_product(1.0, &u.c[0], &self.ddx(f));
        out.add_product(1.0, &u.c[1], &self.ddy(f));
        out
    }

    /// Discrete L2 norm: spectral-exact rectangle rule in x, trapezoid in the
    /// wall-normal coordinate.
    pub fn l2(&self, f: &ScalarField) -> f64 {
        self.l2_sq(f).sqrt()
    }

    pub fn l2_sq(&self, f: &ScalarField) -> f64 {
        let axis = self.axis(f.coord);
        let mut s = 0.0;
        for i in 0..f.nx {
            s += f.column(i).iter().zip(&axis.weights).map(|(v, w)| w * v * v).sum::<f64>();
        }
        s * self.grid.x.dx
    }

    pub fn l2_vec(&self, u: &VectorField) -> f64 {
        (self.l2_sq(&u.c[0]) + self.l2_sq(&u.c[1])).sqrt()
    }

    pub fn linf(&self, f: &ScalarField) -> f64 {
        f.max_abs()
    }

    /// Inner product with the same quadrature as [`Ops::l2`].
    pub fn dot(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        let axis = self.axis(f.coord);
        let mut s = 0.0;
        for i in 0..f.nx {
            s += f
                .column(i)
                .iter()
                .zip(g.column(i))
                .zip(&axis.weights)
                .map(|((a, b), w)| w * a * b)
                .sum::<f64>();
        }
        s * self.grid.x.dx
    }

    /// `d^k f / dy^k` at the wall as an x-profile, `k <= 3`, fourth-order
    /// one-sided.
    pub fn taylor_trace(&self, f: &ScalarField, k: usize) -> Vec<f64> {
        assert!(k <= 3, "wall traces are available up to third derivatives");
        let axis = self.axis(f.coord);
        (0..f.nx).map(|i| axis.trace(f.column(i), k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Stretch};

    fn ops() -> Ops {
        Ops::new(
            Grid::new(GridSpec {
                n_x: 16,
                n_y: 200,
                y_max: 6.0,
                stretch: Stretch::Asinh { c: 0.05, beta: 1.0 },
                z_max: 10.0,
                n_z: 100,
                ..GridSpec::default()
            })
            .unwrap(),
        )
    }

    #[test]
    fn spectral_derivative_is_exact_on_trig() {
        let o = ops();
        let f = ScalarField::from_fn(&o.grid, Coord::Outer, |x, y| (3.0 * x).sin() * y + x.cos());
        let d = o.ddx(&f);
        let e = ScalarField::from_fn(&o.grid, Coord::Outer, |x, y| 3.0 * (3.0 * x).cos() * y - x.sin());
        let mut diff = d.clone();
        diff.axpy(-1.0, &e);
        assert!(diff.max_abs() < 1e-11);
        let dd = o.ddxx(&f);
        let ee = o.ddx(&d);
        let mut diff = dd;
        diff.axpy(-1.0, &ee);
        assert!(diff.max_abs() < 1e-10);
    }

    #[test]
    fn modes_round_trip() {
        let o = ops();
        let f = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| (x + z).sin() + (8.0 * x).cos());
        let back = o.from_modes(&o.to_modes(&f), Coord::Layer);
        let mut diff = back;
        diff.axpy(-1.0, &f);
        assert!(diff.max_abs() < 1e-13);
    }

    #[test]
    fn constant_has_unit_norm_identity() {
        let o = ops();
        let one = ScalarField::from_fn(&o.grid, Coord::Outer, |_, _| 1.0);
        let area = o.grid.x.period * o.grid.y.length;
        assert!((o.l2(&one).powi(2) - area).abs() < 1e-10 * area);
    }

    #[test]
    fn perp_grad_is_divergence_free() {
        let o = ops();
        let w = ScalarField::from_fn(&o.grid, Coord::Outer, |x, y| x.sin() * (-y * y).exp());
        let d = o.div(&o.perp_grad(&w));
        assert!(d.max_abs() < 1e-10);
    }

    #[test]
    fn perp_div_of_perp_grad_is_laplacian_consistent() {
        let o = ops();
        let w = ScalarField::from_fn(&o.grid, Coord::Outer, |x, y| x.cos() * (-y).exp() * y);
        let a = o.perp_div(&o.perp_grad(&w));
        let exact = ScalarField::from_fn(&o.grid, Coord::Outer, |x, y| {
            x.cos() * ((y - 2.0) * (-y).exp() - y * (-y).exp())
        });
        let mut diff = a;
        diff.axpy(-1.0, &exact);
        let interior: f64 = (0..16)
            .flat_map(|i| (5..195).map(move |j| (i, j)))
            .map(|(i, j)| diff.at(i, j).abs())
            .fold(0.0, f64::max);
        assert!(interior < 2e-2, "{interior}");
    }

    #[test]
    fn taylor_trace_of_smooth_profile() {
        let o = ops();
        let f = ScalarField::from_fn(&o.grid, Coord::Outer, |x, y| x.sin() * (2.0 * y).exp().recip());
        for (k, c) in [(0, 1.0), (1, -2.0), (2, 4.0), (3, -8.0)] {
            let t = o.taylor_trace(&f, k);
            for (i, v) in t.iter().enumerate() {
                let x = o.grid.x.node(i);
                assert!((v - c * x.sin()).abs() < 1e-4 * c.abs().max(1.0), "k={k} {v}");
            }
        }
    }
}
