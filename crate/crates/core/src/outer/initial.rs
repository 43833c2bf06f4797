//! Initial data: a wall-flat vortex patch, and a microrotation-only state
//! whose wall trace vanishes for all time.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::field::{Coord, ScalarField, VectorField};
use crate::ops::Ops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    /// Stream-function vortex plus a microrotation patch, both flat at the
    /// wall to a prescribed order.
    Vortex,
    /// `u = 0`, `w = A sin(kx) h(y)` with `h` discretely harmonic and
    /// `h(0) = 0`: the outer flow stays at rest and `w` never reaches the wall.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Order of vanishing at the wall is `flatness + 1`.
    pub flatness: u32,
    /// Length scale of the wall-flattening factor.
    pub flat_scale: f64,
    pub psi_amp: f64,
    pub w_amp: f64,
    /// Center and width of the Gaussian envelope in y.
    pub center: f64,
    pub width: f64,
    /// Smooth cutoff: equal to 1 below `support_start`, 0 above `support_end`.
    pub support_start: f64,
    pub support_end: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            kind: InitialKind::Vortex,
            flatness: 11,
            flat_scale: 0.25,
            psi_amp: 0.5,
            w_amp: 1.0,
            center: 0.9,
            width: 0.6,
            support_start: 2.5,
            support_end: 3.8,
        }
    }
}

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (f(1.0 - t), f(t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl InitialSpec {
    pub fn validate(&self, y_max: f64) -> Result<()> {
        let ok = self.flat_scale > 0.0
            && self.width > 0.0
            && self.support_start < self.support_end
            && self.support_start > 0.0
            && [self.psi_amp, self.w_amp, self.center].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(format!("bad initial data {self:?}")));
        }
        if self.kind == InitialKind::Vortex && self.support_end > 0.5 * y_max {
            return Err(Error::InvalidParameter(format!(
                "initial support must end below y_max / 2 = {}, got {}",
                0.5 * y_max,
                self.support_end
            )));
        }
        Ok(())
    }

    /// Wall-normal envelope `eta(y) * gaussian(y) * cutoff(y)`.
    pub fn envelope(&self, y: f64) -> f64 {
        let eta = (1.0 - (-y / self.flat_scale).exp()).powi(self.flatness as i32 + 1);
        let g = (-((y - self.center) / self.width).powi(2)).exp();
        let chi = smooth_step((y - self.support_start) / (self.support_end - self.support_start));
        eta * g * chi
    }

    /// Builds `(u0, w0)` on the outer grid.
    pub fn build(&self, ops: &Ops) -> Result<(VectorField, ScalarField)> {
        self.validate(ops.grid.y.length)?;
        match self.kind {
            InitialKind::Vortex => Ok(self.vortex(ops)),
            InitialKind::Harmonic => self.harmonic(ops),
        }
    }

    fn vortex(&self, ops: &Ops) -> (VectorField, ScalarField) {
        let g = &ops.grid;
        let kappa = 2.0 * std::f64::consts::PI / g.x.period;
        // stream function; velocity is its discrete perpendicular gradient so
        // the discrete divergence vanishes identically
        let psi = ScalarField::from_fn(g, Coord::Outer, |x, y| {
            self.psi_amp * self.envelope(y) * ((kappa * x).cos() + 0.5 * (2.0 * kappa * x).sin())
        });
        let u = ops.perp_grad(&psi);
        let mut u = u;
        for c in 0..2 {
            let n = g.y.len();
            for i in 0..g.x.n {
                let col = u.c[c].column_mut(i);
                col[0] = 0.0;
                col[n - 1] = 0.0;
            }
        }
        let w = ScalarField::from_fn(g, Coord::Outer, |x, y| {
            self.w_amp * self.envelope(y) * ((kappa * x).sin() + 0.3 * (2.0 * kappa * x).cos() + 0.4)
        });
        (u, w)
    }

    fn harmonic(&self, ops: &Ops) -> Result<(VectorField, ScalarField)> {
        let g = &ops.grid;
        let kappa = 2.0 * std::f64::consts::PI / g.x.period;
        let h = discrete_harmonic(ops, kappa)?;
        let mut w = ScalarField::outer(g);
        for i in 0..g.x.n {
            let s = self.w_amp * (kappa * g.x.node(i)).sin();
            for (dst, hv) in w.column_mut(i).iter_mut().zip(&h) {
                *dst = s * hv;
            }
        }
        Ok((VectorField::outer(g), w))
    }
}

/// Solves `D1 (D1 h) = kappa^2 h` at interior nodes with `h(0) = 0`,
/// `h(y_max) = 1`. With this profile the perpendicular gradient of
/// `sin(kappa x) h(y)` is an exact discrete gradient.
pub fn discrete_harmonic(ops: &Ops, kappa: f64) -> Result<Vec<f64>> {
    let y = &ops.grid.y;
    let n = y.len();
    let mut a = BandMatrix::zeros(n, 8, 8);
    a.add(0, 0, 1.0);
    a.add(n - 1, n - 1, 1.0);
    for j in 1..n - 1 {
        a.add(j, j, -kappa * kappa);
        for (i, s) in y.d1_stencil(j).iter() {
            for (l, t) in y.d1_stencil(i).iter() {
                a.add(j, l, s * t);
            }
        }
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    a.factor()?.solve(&mut b);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridSpec, Stretch};

    fn ops() -> Ops {
        Ops::new(
            Grid::new(GridSpec {
                n_x: 16,
                n_y: 160,
                stretch: Stretch::Asinh { c: 0.02, beta: 1.0 },
                n_z: 64,
                ..GridSpec::default()
            })
            .unwrap(),
        )
    }

    #[test]
    fn vortex_is_discretely_solenoidal_and_flat() {
        let o = Ops::new(
            Grid::new(GridSpec {
                n_x: 16,
                n_y: 300,
                stretch: Stretch::Asinh { c: 0.01, beta: 1.0 },
                n_z: 64,
                ..GridSpec::default()
            })
            .unwrap(),
        );
        let (u, w) = InitialSpec::default().build(&o).unwrap();
        assert!(o.div(&u).max_abs() < 1e-12);
        for k in 0..=3 {
            for f in [&u.c[0], &u.c[1], &w] {
                let t = o.taylor_trace(f, k);
                assert!(t.iter().all(|v| v.abs() < 1e-10), "k={k}");
            }
        }
        assert!(u.max_abs() > 0.1 && w.max_abs() > 0.1);
    }

    #[test]
    fn harmonic_profile_vanishes_at_wall() {
        let o = ops();
        let spec = InitialSpec { kind: InitialKind::Harmonic, ..InitialSpec::default() };
        let (u, w) = spec.build(&o).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert!(w.row(0).iter().all(|v| v.abs() < 1e-14));
        let h = discrete_harmonic(&o, 1.0).unwrap();
        let exact: Vec<f64> = o.grid.y.nodes.iter().map(|y| y.sinh() / 8f64.sinh()).collect();
        let err = h.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn support_must_fit() {
        let spec = InitialSpec { support_end: 5.0, ..InitialSpec::default() };
        assert!(spec.validate(8.0).is_err());
    }
}
