//! Time stepper shared by the inviscid-layer (outer) problems, their
//! linearizations, and the full viscous-microrotation system.
//!
//! Scheme: second-order semi-implicit BDF (SBDF2) after one IMEX Euler
//! start. Velocity diffusion (and microrotation diffusion when present) is
//! implicit; advection, the coupling terms and the `4 zeta w` damping are
//! extrapolated explicitly. Each Fourier mode in x is advanced by a single
//! banded solve for `(u_1, u_2, p)` with the discrete divergence imposed at
//! every node, so velocity and pressure are coupled without splitting error.

use rustfft::num_complex::Complex64;

use crate::banded::{BandLu, BandMatrix, Tridiag};
use crate::error::{Error, Result};
use crate::field::{Coord, ScalarField, VectorField};
use crate::grid::Axis;
use crate::ops::{Modes, Ops};
use crate::outer::level::OuterLevel;

/// Which explicit operator the stepper advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// `(u . grad) u`, `(u . grad) w`.
    Nonlinear,
    /// Linearization about a background supplied every step.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperParams {
    /// Velocity diffusion coefficient.
    pub nu_u: f64,
    /// Microrotation diffusion; zero means no diffusion and no wall condition
    /// on `w`.
    pub nu_w: f64,
    pub zeta: f64,
    pub dt: f64,
    pub dynamics: Dynamics,
    /// Largest admissible advective Courant number.
    pub cfl_limit: f64,
}

impl StepperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nu_u > 0.0
            && self.nu_w >= 0.0
            && self.zeta >= 0.0
            && self.dt > 0.0
            && self.cfl_limit > 0.0
            && [self.nu_u, self.nu_w, self.zeta, self.dt].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(format!("bad stepper parameters {self:?}")));
        }
        Ok(())
    }
}

/// Inputs for one step `t_n -> t_{n+1}`. Background and sources are taken at
/// `t_n` (they enter explicitly); boundary data at `t_{n+1}`.
#[derive(Default, Clone, Copy)]
pub struct Forcing<'a> {
    pub background: Option<&'a OuterLevel>,
    pub source_u: Option<&'a VectorField>,
    pub source_w: Option<&'a ScalarField>,
    /// `u(x, 0)` as two x-profiles; zero when absent.
    pub wall_u: Option<[&'a [f64]; 2]>,
    /// `w(x, 0)`; only used when `nu_w > 0`.
    pub wall_w: Option<&'a [f64]>,
    /// `w(x, y_max)`; only used when `nu_w > 0`.
    pub top_w: Option<&'a [f64]>,
}

enum ModeSolve {
    Mean { u1: Tridiag },
    Coupled { lu: BandLu },
    Dropped,
}

struct Factors {
    alpha: f64,
    modes: Vec<ModeSolve>,
    w: Vec<Option<Tridiag>>,
}

/// Stepper state: current and previous levels plus the previous explicit
/// terms needed by the extrapolation.
pub struct OuterStepper {
    params: StepperParams,
    step: usize,
    cur: OuterLevel,
    prev: Option<(VectorField, ScalarField)>,
    prev_explicit: Option<(VectorField, ScalarField)>,
    euler: Option<Factors>,
    bdf2: Option<Factors>,
}

impl OuterStepper {
    pub fn new(ops: &Ops, params: StepperParams, u0: VectorField, w0: ScalarField, t0: f64) -> Result<Self> {
        params.validate()?;
        let probe = ScalarField::outer(&ops.grid);
        for f in [&u0.c[0], &u0.c[1], &w0] {
            probe.same_shape(f)?;
        }
        let p0 = ScalarField::outer(&ops.grid);
        let cur = OuterLevel::new(ops, t0, u0, w0, p0);
        Ok(Self { params, step: 0, cur, prev: None, prev_explicit: None, euler: None, bdf2: None })
    }

    pub fn params(&self) -> &StepperParams {
        &self.params
    }

    pub fn level(&self) -> &OuterLevel {
        &self.cur
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Advances one step.
    pub fn advance(&mut self, ops: &Ops, forcing: &Forcing) -> Result<()> {
        let prm = self.params;
        let dt = prm.dt;
        let t_next = self.cur.t + dt;
        if prm.dynamics == Dynamics::Linearized && forcing.background.is_none() {
            return Err(Error::InvalidParameter("linearized step needs a background level".into()));
        }
        self.check_cfl(ops, forcing)?;
        let (nu, nw) = self.explicit_terms(ops, forcing);

        let first = self.prev.is_none();
        let alpha = if first { 1.0 / dt } else { 1.5 / dt };
        let mut ru = VectorField::outer(&ops.grid);
        let mut rw = ScalarField::outer(&ops.grid);
        match (&self.prev, &self.prev_explicit) {
            (Some((up, wp)), Some((nup, nwp))) => {
                let h = 0.5 / dt;
                for c in 0..2 {
                    ru.c[c].axpy(4.0 * h, &self.cur.u.c[c]);
                    ru.c[c].axpy(-h, &up.c[c]);
                    ru.c[c].axpy(2.0, &nu.c[c]);
                    ru.c[c].axpy(-1.0, &nup.c[c]);
                }
                rw.axpy(4.0 * h, &self.cur.w);
                rw.axpy(-h, wp);
                rw.axpy(2.0, &nw);
                rw.axpy(-1.0, nwp);
            }
            _ => {
                for c in 0..2 {
                    ru.c[c].axpy(1.0 / dt, &self.cur.u.c[c]);
                    ru.c[c].axpy(1.0, &nu.c[c]);
                }
                rw.axpy(1.0 / dt, &self.cur.w);
                rw.axpy(1.0, &nw);
            }
        }

        let factors = if first { &mut self.euler } else { &mut self.bdf2 };
        if factors.as_ref().is_none_or(|f| f.alpha != alpha) {
            *factors = Some(build_factors(ops, &prm, alpha)?);
        }
        let factors = factors.as_ref().expect("factors just built");

        let (u, p) = solve_velocity(ops, factors, &ru, forcing.wall_u, t_next)?;
        let w = if prm.nu_w > 0.0 {
            solve_w(ops, factors, &rw, forcing.wall_w, forcing.top_w)
        } else {
            rw.scaled(1.0 / alpha)
        };
        if !u.is_finite() || !w.is_finite() || !p.is_finite() {
            return Err(Error::NonFinite { t: t_next, what: "outer step".into() });
        }
        let old = std::mem::replace(&mut self.cur, OuterLevel::new(ops, t_next, u, w, p));
        self.prev = Some((old.u, old.w));
        self.prev_explicit = Some((nu, nw));
        self.step += 1;
        Ok(())
    }

    fn check_cfl(&self, ops: &Ops, forcing: &Forcing) -> Result<()> {
        let vel = match self.params.dynamics {
            Dynamics::Nonlinear => &self.cur.u,
            Dynamics::Linearized => &forcing.background.expect("checked").u,
        };
        let cfl = courant(ops, vel, self.params.dt);
        if cfl > self.params.cfl_limit {
            return Err(Error::Cfl { t: self.cur.t, cfl, limit: self.params.cfl_limit });
        }
        Ok(())
    }

    /// Explicit right-hand sides at the current level.
    fn explicit_terms(&self, ops: &Ops, forcing: &Forcing) -> (VectorField, ScalarField) {
        let z = self.params.zeta;
        let s = &self.cur;
        let d = &s.d;
        let mut nu = VectorField::outer(&ops.grid);
        let mut nw = ScalarField::outer(&ops.grid);
        match self.params.dynamics {
            Dynamics::Nonlinear => {
                for c in 0..2 {
                    nu.c[c].add_product(-1.0, &s.u.c[0], &d.ux.c[c]);
                    nu.c[c].add_product(-1.0, &s.u.c[1], &d.uy.c[c]);
                }
                let wy_up = ops.ddy_upwind(&s.w, &s.u.c[1]);
                nw.add_product(-1.0, &s.u.c[0], &d.wx);
                nw.add_product(-1.0, &s.u.c[1], &wy_up);
            }
            Dynamics::Linearized => {
                let a = forcing.background.expect("checked");
                let ad = &a.d;
                for c in 0..2 {
                    nu.c[c].add_product(-1.0, &s.u.c[0], &ad.ux.c[c]);
                    nu.c[c].add_product(-1.0, &s.u.c[1], &ad.uy.c[c]);
                    nu.c[c].add_product(-1.0, &a.u.c[0], &d.ux.c[c]);
                    nu.c[c].add_product(-1.0, &a.u.c[1], &d.uy.c[c]);
                }
                let wy_up = ops.ddy_upwind(&s.w, &a.u.c[1]);
                nw.add_product(-1.0, &s.u.c[0], &ad.wx);
                nw.add_product(-1.0, &s.u.c[1], &ad.wy);
                nw.add_product(-1.0, &a.u.c[0], &d.wx);
                nw.add_product(-1.0, &a.u.c[1], &wy_up);
            }
        }
        // -2 zeta perp_grad w = (2 zeta w_y, -2 zeta w_x)
        nu.c[0].axpy(2.0 * z, &d.wy);
        nu.c[1].axpy(-2.0 * z, &d.wx);
        nw.axpy(-4.0 * z, &s.w);
        nw.axpy(2.0 * z, &d.ux.c[1]);
        nw.axpy(-2.0 * z, &d.uy.c[0]);
        if let Some(f) = forcing.source_u {
            nu.axpy(1.0, f);
        }
        if let Some(g) = forcing.source_w {
            nw.axpy(1.0, g);
        }
        (nu, nw)
    }
}

/// Advective Courant number `dt * max(|v_1| / dx + |v_2| / dy)`.
pub fn courant(ops: &Ops, vel: &VectorField, dt: f64) -> f64 {
    let y = &ops.grid.y;
    let dx = ops.grid.x.dx;
    let mut c: f64 = 0.0;
    for i in 0..vel.c[0].nx {
        let (a, b) = (vel.c[0].column(i), vel.c[1].column(i));
        for j in 0..y.len() {
            c = c.max(a[j].abs() / dx + b[j].abs() * y.sig1[j] / y.h);
        }
    }
    c * dt
}

fn build_factors(ops: &Ops, prm: &StepperParams, alpha: f64) -> Result<Factors> {
    let nx = ops.grid.x.n;
    let y = &ops.grid.y;
    let nk = nx / 2 + 1;
    let mut modes = Vec::with_capacity(nk);
    let mut w = Vec::with_capacity(nk);
    for m in 0..nk {
        let k = ops.grid.x.wavenumber(m);
        if 2 * m == nx {
            modes.push(ModeSolve::Dropped);
            w.push(None);
            continue;
        }
        if m == 0 {
            modes.push(ModeSolve::Mean { u1: helmholtz(y, alpha, prm.nu_u, 0.0)? });
        } else {
            modes.push(ModeSolve::Coupled { lu: coupled_matrix(y, alpha, prm.nu_u, k).factor()? });
        }
        w.push(if prm.nu_w > 0.0 { Some(helmholtz(y, alpha, prm.nu_w, k)?) } else { None });
    }
    Ok(Factors { alpha, modes, w })
}

/// `(alpha + nu k^2) - nu D2` with Dirichlet rows at both ends.
fn helmholtz(y: &Axis, alpha: f64, nu: f64, k: f64) -> Result<Tridiag> {
    let n = y.len();
    let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    di[0] = 1.0;
    di[n - 1] = 1.0;
    for j in 1..n - 1 {
        let st = y.d2_stencil(j);
        di[j] = alpha + nu * k * k;
        for (i, c) in st.iter() {
            match i as isize - j as isize {
                -1 => lo[j] -= nu * c,
                0 => di[j] -= nu * c,
                1 => up[j] -= nu * c,
                _ => unreachable!("interior second-derivative stencil is three-point"),
            }
        }
    }
    Tridiag::new(&lo, &di, &up)
}

/// Real coupled matrix for one nonzero mode in the unknowns
/// `(v, u_2, p)` per node with `v = i * hat u_1`.
fn coupled_matrix(y: &Axis, alpha: f64, nu: f64, k: f64) -> BandMatrix {
    let n = y.len();
    let idx = |j: usize, c: usize| 3 * j + c;
    let mut a = BandMatrix::zeros(3 * n, 20, 20);
    for j in 0..n {
        let d1 = y.d1_stencil(j);
        if j == 0 || j == n - 1 {
            a.add(idx(j, 0), idx(j, 0), 1.0);
            a.add(idx(j, 1), idx(j, 1), 1.0);
        } else {
            let d2 = y.d2_stencil(j);
            for c in 0..2 {
                let r = idx(j, c);
                a.add(r, idx(j, c), alpha + nu * k * k);
                for (i, s) in d2.iter() {
                    a.add(r, idx(i, c), -nu * s);
                }
            }
            a.add(idx(j, 0), idx(j, 2), -k);
            for (i, s) in d1.iter() {
                a.add(idx(j, 1), idx(i, 2), s);
            }
        }
        let r = idx(j, 2);
        a.add(r, idx(j, 0), k);
        for (i, s) in d1.iter() {
            a.add(r, idx(i, 1), s);
        }
    }
    a
}

fn profile_modes(ops: &Ops, p: Option<&[f64]>) -> Vec<Complex64> {
    let nk = ops.grid.x.n / 2 + 1;
    match p {
        None => vec![Complex64::new(0.0, 0.0); nk],
        Some(p) => {
            let f = ScalarField { nx: p.len(), ny: 1, coord: Coord::Outer, data: p.to_vec() };
            ops.to_modes(&f).data
        }
    }
}

fn solve_velocity(
    ops: &Ops,
    factors: &Factors,
    ru: &VectorField,
    wall: Option<[&[f64]; 2]>,
    t: f64,
) -> Result<(VectorField, ScalarField)> {
    let y = &ops.grid.y;
    let n = y.len();
    let r1 = ops.to_modes(&ru.c[0]);
    let r2 = ops.to_modes(&ru.c[1]);
    let g1 = profile_modes(ops, wall.map(|w| w[0]));
    let g2 = profile_modes(ops, wall.map(|w| w[1]));
    let zero = Complex64::new(0.0, 0.0);
    let mut u1 = Modes { nk: r1.nk, ny: n, data: vec![zero; r1.data.len()] };
    let mut u2 = u1.clone();
    let mut p = u1.clone();
    let scale = g2.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    if g2[0].norm() > 1e-10 * scale * ops.grid.x.n as f64 {
        return Err(Error::Incompatible(format!(
            "wall-normal wall velocity has nonzero mean {} at t = {t:.6}",
            g2[0].re / ops.grid.x.n as f64
        )));
    }
    let mut buf_re = vec![0.0; 3 * n];
    let mut buf_im = vec![0.0; 3 * n];
    for (m, solver) in factors.modes.iter().enumerate() {
        match solver {
            ModeSolve::Dropped => {}
            ModeSolve::Mean { u1: t1 } => {
                let mut b: Vec<f64> = r1.mode(0).iter().map(|c| c.re).collect();
                b[0] = g1[0].re;
                b[n - 1] = 0.0;
                t1.solve(&mut b);
                let q = r2.mode(0);
                let mut acc = 0.0;
                let pm = p.mode_mut(0);
                pm[0] = zero;
                for j in 1..n {
                    acc += 0.5 * (y.nodes[j] - y.nodes[j - 1]) * (q[j].re + q[j - 1].re);
                    pm[j] = Complex64::new(acc, 0.0);
                }
                for (dst, v) in u1.mode_mut(0).iter_mut().zip(&b) {
                    *dst = Complex64::new(*v, 0.0);
                }
            }
            ModeSolve::Coupled { lu } => {
                let (a1, a2) = (r1.mode(m), r2.mode(m));
                for j in 0..n {
                    // i * r1
                    let ir1 = Complex64::new(-a1[j].im, a1[j].re);
                    let (b0, b1) = if j == 0 {
                        (Complex64::new(-g1[m].im, g1[m].re), g2[m])
                    } else if j == n - 1 {
                        (zero, zero)
                    } else {
                        (ir1, a2[j])
                    };
                    buf_re[3 * j] = b0.re;
                    buf_im[3 * j] = b0.im;
                    buf_re[3 * j + 1] = b1.re;
                    buf_im[3 * j + 1] = b1.im;
                    buf_re[3 * j + 2] = 0.0;
                    buf_im[3 * j + 2] = 0.0;
                }
                lu.solve(&mut buf_re);
                lu.solve(&mut buf_im);
                let o1 = u1.mode_mut(m);
                for j in 0..n {
                    // u1 = -i v
                    o1[j] = Complex64::new(buf_im[3 * j], -buf_re[3 * j]);
                }
                let o2 = u2.mode_mut(m);
                for j in 0..n {
                    o2[j] = Complex64::new(buf_re[3 * j + 1], buf_im[3 * j + 1]);
                }
                let op = p.mode_mut(m);
                for j in 0..n {
                    op[j] = Complex64::new(buf_re[3 * j + 2], buf_im[3 * j + 2]);
                }
            }
        }
    }
    let u = VectorField::new(ops.from_modes(&u1, Coord::Outer), ops.from_modes(&u2, Coord::Outer));
    Ok((u, ops.from_modes(&p, Coord::Outer)))
}

fn solve_w(
    ops: &Ops,
    factors: &Factors,
    rw: &ScalarField,
    wall: Option<&[f64]>,
    top: Option<&[f64]>,
) -> ScalarField {
    let n = ops.grid.y.len();
    let mut r = ops.to_modes(rw);
    let gw = profile_modes(ops, wall);
    let gt = profile_modes(ops, top);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for (m, solver) in factors.w.iter().enumerate() {
        let col = r.mode_mut(m);
        match solver {
            None => col.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0)),
            Some(t) => {
                for j in 0..n {
                    re[j] = col[j].re;
                    im[j] = col[j].im;
                }
                re[0] = gw[m].re;
                im[0] = gw[m].im;
                re[n - 1] = gt[m].re;
                im[n - 1] = gt[m].im;
                t.solve(&mut re);
                t.solve(&mut im);
                for j in 0..n {
                    col[j] = Complex64::new(re[j], im[j]);
                }
            }
        }
    }
    ops.from_modes(&r, Coord::Outer)
}
