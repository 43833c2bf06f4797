//! Half-line heat equation `theta_t - theta_zz = g`, `theta(0, t) = b(t)`,
//! zero initial data, solved column by column in x.

use crate::banded::Tridiag;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Axis, TimeGrid};
use crate::ops::Ops;

/// Crank-Nicolson stepper. The first `damping_steps` steps are each replaced
/// by two backward-Euler half steps, which damps the high-frequency response
/// to non-smooth boundary data without losing second-order accuracy.
pub struct HeatStepper {
    dt: f64,
    t: f64,
    steps: usize,
    damping_steps: usize,
    /// `I - (dt / 2) D2`: the Crank-Nicolson matrix, which is also the
    /// backward-Euler matrix for a half step.
    implicit: Tridiag,
    h2: f64,
    cur: ScalarField,
    src: Option<ScalarField>,
    /// Boundary data at the current time; defaults to the state's wall value.
    wall: Option<Vec<f64>>,
}

fn implicit_matrix(z: &Axis, c: f64) -> Result<Tridiag> {
    let n = z.len();
    let h2 = z.h * z.h * z.length * z.length;
    let (mut lo, mut di, mut up) = (vec![0.0; n], vec![1.0; n], vec![0.0; n]);
    for j in 1..n - 1 {
        lo[j] = -c / h2;
        up[j] = -c / h2;
        di[j] = 1.0 + 2.0 * c / h2;
    }
    Tridiag::new(&lo, &di, &up)
}

impl HeatStepper {
    pub fn new(ops: &Ops, dt: f64, damping_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("heat step must be positive, got {dt}")));
        }
        let z = &ops.grid.z;
        let h = z.h * z.length;
        Ok(Self {
            dt,
            t: 0.0,
            steps: 0,
            damping_steps,
            implicit: implicit_matrix(z, 0.5 * dt)?,
            h2: h * h,
            cur: ScalarField::layer(&ops.grid),
            src: None,
            wall: None,
        })
    }

    /// Sets the boundary value and source at the current time, which the
    /// first step averages with the new ones.
    pub fn prime(&mut self, wall: Vec<f64>, src: Option<ScalarField>) {
        self.wall = Some(wall);
        self.src = src;
    }

    pub fn state(&self) -> &ScalarField {
        &self.cur
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Advances one step given the wall value and source at the new time.
    pub fn advance(&mut self, wall_next: &[f64], src_next: Option<&ScalarField>) -> Result<()> {
        let n = self.cur.ny;
        let nx = self.cur.nx;
        if wall_next.len() != nx {
            return Err(Error::ShapeMismatch { expected: format!("{nx} wall values"), found: wall_next.len().to_string() });
        }
        let zero_src = |f: Option<&ScalarField>, i: usize, j: usize| f.map_or(0.0, |s| s.at(i, j));
        let prev_src = self.src.as_ref();
        let mut col = vec![0.0; n];
        let damp = self.steps < self.damping_steps;
        let c = 0.5 * self.dt / self.h2;
        for i in 0..nx {
            let th = self.cur.column(i);
            if damp {
                // two backward-Euler half steps; sources at the half step
                // and at the end
                for j in 1..n - 1 {
                    let g_mid = 0.5 * (zero_src(prev_src, i, j) + zero_src(src_next, i, j));
                    col[j] = th[j] + 0.5 * self.dt * g_mid;
                }
                let w_now = self.wall.as_ref().map_or(th[0], |w| w[i]);
                col[0] = 0.5 * (w_now + wall_next[i]);
                col[n - 1] = 0.0;
                self.implicit.solve(&mut col);
                for j in 1..n - 1 {
                    col[j] += 0.5 * self.dt * zero_src(src_next, i, j);
                }
                col[0] = wall_next[i];
                col[n - 1] = 0.0;
                self.implicit.solve(&mut col);
            } else {
                for j in 1..n - 1 {
                    col[j] = th[j]
                        + c * (th[j + 1] - 2.0 * th[j] + th[j - 1])
                        + 0.5 * self.dt * (zero_src(prev_src, i, j) + zero_src(src_next, i, j));
                }
                col[0] = wall_next[i];
                col[n - 1] = 0.0;
                self.implicit.solve(&mut col);
            }
            self.cur.column_mut(i).copy_from_slice(&col);
        }
        self.src = src_next.cloned();
        self.wall = Some(wall_next.to_vec());
        self.t += self.dt;
        self.steps += 1;
        if !self.cur.is_finite() {
            return Err(Error::NonFinite { t: self.t, what: "heat solve".into() });
        }
        Ok(())
    }
}

/// Solves the heat problem over `time`, storing every `stride`-th level and
/// the last. `wall(t)` gives the boundary values, `source(t)` the optional
/// right-hand side.
pub fn heat_solve(
    ops: &Ops,
    time: TimeGrid,
    stride: usize,
    damping_steps: usize,
    wall: &dyn Fn(f64) -> Vec<f64>,
    source: &dyn Fn(f64) -> Option<ScalarField>,
) -> Result<Vec<(f64, ScalarField)>> {
    let mut st = HeatStepper::new(ops, time.dt(), damping_steps)?;
    st.prime(wall(0.0), source(0.0));
    let stride = stride.max(1);
    let mut out = vec![(0.0, st.state().clone())];
    for n in 1..=time.n_steps {
        let t = time.time(n);
        let g = source(t);
        st.advance(&wall(t), g.as_ref())?;
        if n % stride == 0 || n == time.n_steps {
            out.push((t, st.state().clone()));
        }
    }
    Ok(out)
}
