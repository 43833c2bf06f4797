//! A single time level of an outer-type solution with cached derivatives.

use crate::field::{ScalarField, VectorField};
use crate::ops::Ops;

/// First derivatives and Laplacians of `(u, w)`.
#[derive(Debug, Clone)]
pub struct Derivs {
    /// `d_x u`, componentwise.
    pub ux: VectorField,
    /// `d_y u`, componentwise.
    pub uy: VectorField,
    pub wx: ScalarField,
    pub wy: ScalarField,
    pub lap_u: VectorField,
    pub lap_w: ScalarField,
}

impl Derivs {
    pub fn compute(ops: &Ops, u: &VectorField, w: &ScalarField) -> Self {
        let ux = VectorField::new(ops.ddx(&u.c[0]), ops.ddx(&u.c[1]));
        let uy = VectorField::new(ops.ddy(&u.c[0]), ops.ddy(&u.c[1]));
        let wx = ops.ddx(w);
        let wy = ops.ddy(w);
        let lap_u = VectorField::new(lap_from(ops, &ux.c[0], &u.c[0]), lap_from(ops, &ux.c[1], &u.c[1]));
        let lap_w = lap_from(ops, &wx, w);
        Self { ux, uy, wx, wy, lap_u, lap_w }
    }
}

/// `d_x (d_x f) + d_yy f`, reusing an existing `d_x f`.
fn lap_from(ops: &Ops, fx: &ScalarField, f: &ScalarField) -> ScalarField {
    let mut l = ops.ddx(fx);
    l.axpy(1.0, &ops.ddyy(f));
    l
}

/// Velocity, microrotation and pressure at one time, with derivatives.
#[derive(Debug, Clone)]
pub struct OuterLevel {
    pub t: f64,
    pub u: VectorField,
    pub w: ScalarField,
    pub p: ScalarField,
    pub d: Derivs,
}

impl OuterLevel {
    pub fn new(ops: &Ops, t: f64, u: VectorField, w: ScalarField, p: ScalarField) -> Self {
        let d = Derivs::compute(ops, &u, &w);
        Self { t, u, w, p, d }
    }

    pub fn zero(ops: &Ops, t: f64) -> Self {
        let g = &ops.grid;
        Self::new(ops, t, VectorField::outer(g), ScalarField::outer(g), ScalarField::outer(g))
    }

    /// Wall traces `d^k/dy^k` at `y = 0` of `(u_1, u_2, w)` for `k = 0..=3`.
    pub fn traces(&self, ops: &Ops) -> WallTraces {
        let t = |f: &ScalarField| -> [Vec<f64>; 4] { std::array::from_fn(|k| ops.taylor_trace(f, k)) };
        WallTraces { u1: t(&self.u.c[0]), u2: t(&self.u.c[1]), w: t(&self.w) }
    }
}

/// Wall Taylor data of an outer level; `u1[k][i]` is `d_y^k u_1(x_i, 0)`.
#[derive(Debug, Clone)]
pub struct WallTraces {
    pub u1: [Vec<f64>; 4],
    pub u2: [Vec<f64>; 4],
    pub w: [Vec<f64>; 4],
}

/// Stored trajectory of an outer solution at a fixed sampling stride.
#[derive(Debug, Clone)]
pub struct OuterProfile {
    pub levels: Vec<OuterLevel>,
}

impl OuterProfile {
    pub fn times(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.t).collect()
    }

    pub fn last(&self) -> &OuterLevel {
        self.levels.last().expect("profile has at least the initial level")
    }

    /// Linear-in-time interpolation of `(u, w)` between stored levels;
    /// clamps outside the stored window.
    pub fn interpolate(&self, ops: &Ops, t: f64) -> OuterLevel {
        let lv = &self.levels;
        if t <= lv[0].t || lv.len() == 1 {
            return lv[0].clone();
        }
        if t >= self.last().t {
            return self.last().clone();
        }
        let k = lv.partition_point(|l| l.t <= t).max(1) - 1;
        let (a, b) = (&lv[k], &lv[k + 1]);
        let s = (t - a.t) / (b.t - a.t);
        if s.abs() < 1e-12 {
            return a.clone();
        }
        let mix = |p: &ScalarField, q: &ScalarField| ScalarField::combine(&[(1.0 - s, p), (s, q)]);
        let u = VectorField::new(mix(&a.u.c[0], &b.u.c[0]), mix(&a.u.c[1], &b.u.c[1]));
        OuterLevel::new(ops, t, u, mix(&a.w, &b.w), mix(&a.p, &b.p))
    }
}
