//! Outer (inviscid-microrotation) profiles: the leading nonlinear problem and
//! the linearized problems for the higher orders.

pub mod initial;
pub mod level;
pub mod project;
pub mod stepper;

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::grid::TimeGrid;
use crate::ops::Ops;

pub use level::{Derivs, OuterLevel, OuterProfile, WallTraces};
pub use stepper::{Dynamics, Forcing, OuterStepper, StepperParams};

/// Default admissible Courant number for the explicit terms.
pub const CFL_LIMIT: f64 = 0.8;

/// Parameters of the leading-order outer problem.
pub fn i0_params(zeta: f64, dt: f64) -> StepperParams {
    StepperParams { nu_u: zeta, nu_w: 0.0, zeta, dt, dynamics: Dynamics::Nonlinear, cfl_limit: CFL_LIMIT }
}

/// Parameters of the linearized outer problems.
pub fn linearized_params(zeta: f64, dt: f64) -> StepperParams {
    StepperParams { dynamics: Dynamics::Linearized, ..i0_params(zeta, dt) }
}

/// Solves the leading-order outer problem, storing every `stride`-th level
/// and the final one.
pub fn solve_i0(
    ops: &Ops,
    u0: VectorField,
    w0: ScalarField,
    zeta: f64,
    time: TimeGrid,
    stride: usize,
) -> Result<OuterProfile> {
    let mut st = OuterStepper::new(ops, i0_params(zeta, time.dt()), u0, w0, 0.0)?;
    let stride = stride.max(1);
    let mut levels = vec![st.level().clone()];
    for n in 1..=time.n_steps {
        st.advance(ops, &Forcing::default())?;
        if n % stride == 0 || n == time.n_steps {
            levels.push(st.level().clone());
        }
    }
    Ok(OuterProfile { levels })
}

/// Time-dependent data of a linearized outer problem.
pub struct LinearizedProblem<'a> {
    pub zeta: f64,
    /// Background `(a, b)` at time `t`.
    pub background: &'a dyn Fn(f64) -> OuterLevel,
    /// Sources `(f, g)` at time `t`; `None` means zero.
    pub source: &'a dyn Fn(f64) -> Option<(VectorField, ScalarField)>,
    /// Dirichlet wall velocity at time `t`.
    pub wall: &'a dyn Fn(f64) -> [Vec<f64>; 2],
}

/// Solves a linearized outer problem from zero initial data.
pub fn solve_linearized(
    ops: &Ops,
    problem: &LinearizedProblem,
    time: TimeGrid,
    stride: usize,
) -> Result<OuterProfile> {
    let dt = time.dt();
    let g = &ops.grid;
    let mut st =
        OuterStepper::new(ops, linearized_params(problem.zeta, dt), VectorField::outer(g), ScalarField::outer(g), 0.0)?;
    let stride = stride.max(1);
    let mut levels = vec![st.level().clone()];
    for n in 1..=time.n_steps {
        let t = time.time(n - 1);
        let bg = (problem.background)(t);
        let src = (problem.source)(t);
        let wall = (problem.wall)(time.time(n));
        let forcing = Forcing {
            background: Some(&bg),
            source_u: src.as_ref().map(|s| &s.0),
            source_w: src.as_ref().map(|s| &s.1),
            wall_u: Some([&wall[0], &wall[1]]),
            ..Forcing::default()
        };
        st.advance(ops, &forcing)?;
        if n % stride == 0 || n == time.n_steps {
            levels.push(st.level().clone());
        }
    }
    Ok(OuterProfile { levels })
}

/// Sources of the second-order outer problem:
/// `f = -(u1 . grad) u1 + lap u0`, `g = -(u1 . grad) w1 + lap w0`.
pub fn i2_sources(i0: &OuterLevel, i1: &OuterLevel) -> (VectorField, ScalarField) {
    let mut f = i0.d.lap_u.clone();
    for c in 0..2 {
        f.c[c].add_product(-1.0, &i1.u.c[0], &i1.d.ux.c[c]);
        f.c[c].add_product(-1.0, &i1.u.c[1], &i1.d.uy.c[c]);
    }
    let mut g = i0.d.lap_w.clone();
    g.add_product(-1.0, &i1.u.c[0], &i1.d.wx);
    g.add_product(-1.0, &i1.u.c[1], &i1.d.wy);
    (f, g)
}
