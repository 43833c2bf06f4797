//! The full system with viscous microrotation, solved on the outer grid with
//! the same discretization as the outer profiles so that errors are formed
//! node by node.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::TimeGrid;
use crate::ops::Ops;
use crate::outer::{Dynamics, Forcing, OuterLevel, OuterProfile, OuterStepper, StepperParams, CFL_LIMIT};

pub fn full_params(eps: f64, zeta: f64, dt: f64) -> StepperParams {
    StepperParams { nu_u: eps + zeta, nu_w: eps, zeta, dt, dynamics: Dynamics::Nonlinear, cfl_limit: CFL_LIMIT }
}

/// Stepper for one value of `eps`; `u = w = 0` at the wall.
pub struct EpsSolver {
    pub eps: f64,
    stepper: OuterStepper,
    zero_wall: Vec<f64>,
}

impl EpsSolver {
    pub fn new(ops: &Ops, eps: f64, zeta: f64, dt: f64, u0: VectorField, w0: ScalarField) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        if !(zeta > 0.0) {
            return Err(Error::InvalidParameter(format!("zeta must be positive, got {zeta}")));
        }
        let stepper = OuterStepper::new(ops, full_params(eps, zeta, dt), u0, w0, 0.0)?;
        Ok(Self { eps, stepper, zero_wall: vec![0.0; ops.grid.x.n] })
    }

    pub fn level(&self) -> &OuterLevel {
        self.stepper.level()
    }

    /// One step; `top_w` is the microrotation imposed at `y_max` at the new
    /// time.
    pub fn advance(&mut self, ops: &Ops, top_w: &[f64]) -> Result<()> {
        let f = Forcing { wall_w: Some(&self.zero_wall), top_w: Some(top_w), ..Forcing::default() };
        self.stepper.advance(ops, &f)
    }
}

/// Solves the full system over `time`, keeping every `stride`-th level and
/// the last. `top(t)` is the microrotation at `y_max`.
pub fn solve_epsilon(
    ops: &Ops,
    u0: VectorField,
    w0: ScalarField,
    eps: f64,
    zeta: f64,
    time: TimeGrid,
    stride: usize,
    top: &dyn Fn(f64) -> Vec<f64>,
) -> Result<OuterProfile> {
    let mut s = EpsSolver::new(ops, eps, zeta, time.dt(), u0, w0)?;
    let stride = stride.max(1);
    let mut levels = vec![s.level().clone()];
    for n in 1..=time.n_steps {
        s.advance(ops, &top(time.time(n)))?;
        if n % stride == 0 || n == time.n_steps {
            levels.push(s.level().clone());
        }
    }
    Ok(OuterProfile { levels })
}

/// Terms of the energy balance at one level:
/// `d/dt (|u|^2 + |w|^2) / 2 = -(eps + zeta) |grad u|^2 - eps |grad w|^2
/// - 4 zeta |w|^2 + 4 zeta (w, perp_div u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub energy: f64,
    pub dissipation: f64,
    pub coupling: f64,
}

pub fn energy_terms(ops: &Ops, lv: &OuterLevel, eps: f64, zeta: f64) -> EnergyTerms {
    let d = &lv.d;
    let energy = 0.5 * (ops.l2_sq(&lv.u.c[0]) + ops.l2_sq(&lv.u.c[1]) + ops.l2_sq(&lv.w));
    let grad_u: f64 = (0..2).map(|c| ops.l2_sq(&d.ux.c[c]) + ops.l2_sq(&d.uy.c[c])).sum();
    let grad_w = ops.l2_sq(&d.wx) + ops.l2_sq(&d.wy);
    let dissipation = (eps + zeta) * grad_u + eps * grad_w + 4.0 * zeta * ops.l2_sq(&lv.w);
    let curl = ScalarField::combine(&[(1.0, &d.ux.c[1]), (-1.0, &d.uy.c[0])]);
    let coupling = 4.0 * zeta * ops.dot(&lv.w, &curl);
    EnergyTerms { energy, dissipation, coupling }
}

/// Largest relative imbalance of the energy identity over consecutive
/// stored levels (trapezoid in time), relative to the dissipated amount.
pub fn energy_imbalance(ops: &Ops, levels: &[OuterLevel], eps: f64, zeta: f64) -> f64 {
    let terms: Vec<EnergyTerms> = levels.iter().map(|l| energy_terms(ops, l, eps, zeta)).collect();
    let mut worst: f64 = 0.0;
    for k in 1..levels.len() {
        let dt = levels[k].t - levels[k - 1].t;
        let (a, b) = (terms[k - 1], terms[k]);
        let lhs = b.energy - a.energy;
        let rhs = 0.5 * dt * ((a.coupling - a.dissipation) + (b.coupling - b.dissipation));
        let scale = 0.5 * dt * (a.dissipation + b.dissipation) + 1e-300;
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridSpec, Stretch};
    use crate::outer::initial::InitialSpec;

    fn ops(n_y: usize) -> Ops {
        Ops::new(
            Grid::new(GridSpec {
                n_x: 16,
                n_y,
                y_max: 8.0,
                stretch: Stretch::Asinh { c: 0.05, beta: 1.0 },
                n_z: 32,
                ..GridSpec::default()
            })
            .unwrap(),
        )
    }

    fn solve(o: &Ops, eps: f64, n_steps: usize) -> OuterProfile {
        let (u0, w0) = InitialSpec::default().build(o).unwrap();
        let zero = vec![0.0; o.grid.x.n];
        solve_epsilon(o, u0, w0, eps, 1.0, TimeGrid::new(0.25, n_steps).unwrap(), n_steps, &|_| zero.clone()).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let o = ops(64);
        let g = &o.grid;
        let p = solve_epsilon(
            &o,
            VectorField::outer(g),
            ScalarField::outer(g),
            1e-2,
            1.0,
            TimeGrid::new(0.1, 10).unwrap(),
            1,
            &|_| vec![0.0; 16],
        )
        .unwrap();
        assert!(p.levels.iter().all(|l| l.u.max_abs() == 0.0 && l.w.max_abs() == 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        let o = ops(64);
        let g = &o.grid;
        assert!(EpsSolver::new(&o, 0.0, 1.0, 0.01, VectorField::outer(g), ScalarField::outer(g)).is_err());
        assert!(EpsSolver::new(&o, 1e-2, 0.0, 0.01, VectorField::outer(g), ScalarField::outer(g)).is_err());
    }

    #[test]
    fn walls_stay_clean_and_velocity_solenoidal() {
        let o = ops(128);
        let p = solve(&o, 1e-2, 40);
        for l in &p.levels {
            assert!(o.div(&l.u).max_abs() <= 1e-9);
            assert!(l.u.c[0].row(0).iter().chain(&l.w.row(0)).all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn time_self_convergence_is_second_order() {
        let o = ops(128);
        let [a, b, c] = [40, 80, 160].map(|n| solve(&o, 1e-2, n).last().clone());
        let diff = |x: &OuterLevel, y: &OuterLevel| {
            let mut d = x.w.clone();
            d.axpy(-1.0, &y.w);
            let mut e = x.u.clone();
            e.axpy(-1.0, &y.u);
            (o.l2_sq(&d) + o.l2_vec(&e).powi(2)).sqrt()
        };
        let order = (diff(&a, &b) / diff(&b, &c)).log2();
        assert!(order >= 1.7, "order {order}");
    }

    #[test]
    fn energy_balance_closes() {
        let o = ops(192);
        let (u0, w0) = InitialSpec::default().build(&o).unwrap();
        let zero = vec![0.0; o.grid.x.n];
        let p = solve_epsilon(&o, u0, w0, 5e-2, 1.0, TimeGrid::new(0.25, 200).unwrap(), 1, &|_| zero.clone()).unwrap();
        let r = energy_imbalance(&o, &p.levels[2..], 5e-2, 1.0);
        assert!(r <= 2e-2, "relative imbalance {r}");
    }
}
