//! Boundary-layer profiles on the stretched variable `z = y / sqrt(eps)`.
//!
//! The microrotation layers `w^{b,j}` solve forced heat equations; the
//! velocity layers are explicit tail integrals of them.

pub mod heat;

use tracing::warn;

use crate::error::{Error, Result};
use crate::field::{Coord, ScalarField, VectorField};
use crate::ops::Ops;
use crate::outer::WallTraces;

pub use heat::{heat_solve, HeatStepper};

fn require_layer(f: &ScalarField) -> Result<()> {
    if f.coord != Coord::Layer {
        return Err(Error::CoordMismatch("expected a layer field".into()));
    }
    Ok(())
}

/// `int_z^{z_max} f`, cumulative trapezoid from the top of the layer grid,
/// treating `f` as zero beyond `z_max`.
pub fn tail_integral(ops: &Ops, f: &ScalarField) -> Result<ScalarField> {
    require_layer(f)?;
    let h = ops.grid.z.h * ops.grid.z.length;
    let mut out = f.zeros_like();
    let n = f.ny;
    for i in 0..f.nx {
        let src = f.column(i);
        let dst = out.column_mut(i);
        dst[n - 1] = 0.0;
        for j in (0..n - 1).rev() {
            dst[j] = dst[j + 1] + 0.5 * h * (src[j] + src[j + 1]);
        }
    }
    Ok(out)
}

/// Largest value of `|f|` on the top tenth of the layer grid, relative to
/// `max |f|`. Large values mean the truncation at `z_max` is felt.
pub fn tail_fraction(f: &ScalarField) -> f64 {
    let top = f.ny - f.ny / 10;
    let mut m: f64 = 0.0;
    for i in 0..f.nx {
        for v in &f.column(i)[top..] {
            m = m.max(v.abs());
        }
    }
    let all = f.max_abs();
    if all == 0.0 {
        0.0
    } else {
        m / all
    }
}

/// Warns when a layer field has not decayed by the top of the grid.
pub fn audit_tail(name: &str, f: &ScalarField, tol: f64) -> bool {
    let r = tail_fraction(f);
    if r > tol {
        warn!(field = name, fraction = r, "layer profile has not decayed at z_max");
        return false;
    }
    true
}

/// `u^{b,1}_1 = 2 int_z^inf w^{b,0}`.
pub fn lift_ub1(ops: &Ops, w0: &ScalarField) -> Result<ScalarField> {
    Ok(tail_integral(ops, w0)?.scaled(2.0))
}

/// `u^{b,2} = (2 int_z^inf w^{b,1}, 2 int_z^inf int_s^inf d_x w^{b,0})`.
pub fn lift_ub2(ops: &Ops, w0: &ScalarField, w1: &ScalarField) -> Result<VectorField> {
    let a = tail_integral(ops, w1)?.scaled(2.0);
    let b = tail_integral(ops, &tail_integral(ops, &ops.ddx(w0))?)?.scaled(2.0);
    Ok(VectorField::new(a, b))
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "third-order layer velocity requires zeta > 0, got {zeta}"
        )));
    }
    Ok(())
}

/// `zeta d_xx u^{b,1}_1 - d_t u^{b,1}_1`.
fn ub1_forcing(ops: &Ops, zeta: f64, ub1: &ScalarField, ub1_t: &ScalarField) -> ScalarField {
    let mut q = ops.ddxx(ub1).scaled(zeta);
    q.axpy(-1.0, ub1_t);
    q
}

/// Third-order layer velocity:
/// `u^{b,3}_1 = 2 int w^{b,2} - u^{b,1}_1 / zeta - (1/zeta) int int (zeta d_xx u^{b,1}_1 - d_t u^{b,1}_1)`,
/// `u^{b,3}_2 = 2 int int d_x w^{b,1}`.
pub fn lift_ub3(
    ops: &Ops,
    zeta: f64,
    w1: &ScalarField,
    w2: &ScalarField,
    ub1: &ScalarField,
    ub1_t: &ScalarField,
) -> Result<VectorField> {
    check_zeta(zeta)?;
    let q = ub1_forcing(ops, zeta, ub1, ub1_t);
    let mut a = tail_integral(ops, w2)?.scaled(2.0);
    a.axpy(-1.0 / zeta, ub1);
    a.axpy(-1.0 / zeta, &tail_integral(ops, &tail_integral(ops, &q)?)?);
    let b = tail_integral(ops, &tail_integral(ops, &ops.ddx(w1))?)?.scaled(2.0);
    Ok(VectorField::new(a, b))
}

/// Fourth-order normal layer velocity, evaluated from its explicit
/// formula: `2 int int d_x w^{b,2} - (1/zeta) int d_x u^{b,1}_1
/// - (1/zeta) int int int (zeta d_xxx u^{b,1}_1 - d_t d_x u^{b,1}_1)`.
pub fn lift_ub4(
    ops: &Ops,
    zeta: f64,
    w2: &ScalarField,
    ub1: &ScalarField,
    ub1_t: &ScalarField,
) -> Result<ScalarField> {
    check_zeta(zeta)?;
    let q = ops.ddx(&ub1_forcing(ops, zeta, ub1, ub1_t));
    let t = |f: &ScalarField| tail_integral(ops, f);
    let mut out = t(&t(&ops.ddx(w2))?)?.scaled(2.0);
    out.axpy(-1.0 / zeta, &t(&ops.ddx(ub1))?);
    out.axpy(-1.0 / zeta, &t(&t(&t(&q)?)?)?);
    Ok(out)
}

/// `out[i, j] += c * a[i] * z_j^p * f[i, j]`.
fn add_profile_term(ops: &Ops, out: &mut ScalarField, c: f64, a: &[f64], p: i32, f: &ScalarField) {
    let z = &ops.grid.z.nodes;
    for i in 0..out.nx {
        let ai = c * a[i];
        if ai == 0.0 {
            continue;
        }
        let src = f.column(i);
        let dst = out.column_mut(i);
        for j in 0..dst.len() {
            dst[j] += ai * z[j].powi(p) * src[j];
        }
    }
}

/// `out[i, j] += c * a[i] * f[i, j]` where `f` may be absent (taken as 1).
fn add_profile(out: &mut ScalarField, c: f64, a: &[f64], f: Option<&ScalarField>) {
    for i in 0..out.nx {
        let ai = c * a[i];
        let dst = out.column_mut(i);
        match f {
            Some(f) => dst.iter_mut().zip(f.column(i)).for_each(|(d, v)| *d += ai * v),
            None => dst.iter_mut().for_each(|d| *d += ai),
        }
    }
}

/// `f - f(x, 0)`, i.e. the field minus its own wall value.
pub fn minus_wall_value(f: &ScalarField) -> ScalarField {
    let mut out = f.clone();
    for i in 0..f.nx {
        let col = out.column_mut(i);
        let w = col[0];
        col.iter_mut().for_each(|v| *v -= w);
    }
    out
}

/// Convective part of the first-order layer source, i.e. `-g^{b,1}`:
/// every term is a layer field multiplied by a wall trace of the outer
/// profiles or by another layer field.
pub fn minus_gb1(
    ops: &Ops,
    tr0: &WallTraces,
    tr1: &WallTraces,
    w0: &ScalarField,
    ub1: &ScalarField,
    ub2_2: &ScalarField,
) -> ScalarField {
    let w0x = ops.ddx(w0);
    let w0z = ops.ddy(w0);
    let w0bar_x = ops.ddx_profile(&tr0.w[0]);
    let mut out = w0.zeros_like();
    add_profile(&mut out, 1.0, &tr1.u1[0], Some(&w0x));
    add_profile(&mut out, 1.0, &w0bar_x, Some(ub1));
    out.add_product(1.0, ub1, &w0x);
    // (ubar^{I,2}_2 + u^{b,2}_2) with the outer trace equal to minus the
    // layer wall value
    out.add_product(1.0, &minus_wall_value(ub2_2), &w0z);
    add_profile_term(ops, &mut out, 0.5, &tr0.u2[2], 2, &w0z);
    add_profile_term(ops, &mut out, 1.0, &tr0.u1[1], 1, &w0x);
    add_profile_term(ops, &mut out, 1.0, &tr1.u2[1], 1, &w0z);
    out
}

/// Inputs of the second-order layer source.
pub struct Gb2Inputs<'a> {
    pub zeta: f64,
    pub tr0: &'a WallTraces,
    pub tr1: &'a WallTraces,
    pub tr2: &'a WallTraces,
    pub w0: &'a ScalarField,
    pub w1: &'a ScalarField,
    pub ub1: &'a ScalarField,
    pub ub1_t: &'a ScalarField,
    pub ub2: &'a VectorField,
}

/// Split of `-g^{b,2}` into its convective part and the rest.
pub struct MinusGb2 {
    pub convective: ScalarField,
    pub linear: ScalarField,
}

impl MinusGb2 {
    pub fn total(&self) -> ScalarField {
        let mut t = self.convective.clone();
        t.axpy(1.0, &self.linear);
        t
    }
}

pub fn minus_gb2(ops: &Ops, a: &Gb2Inputs) -> Result<MinusGb2> {
    let (tr0, tr1, tr2) = (a.tr0, a.tr1, a.tr2);
    let w0x = ops.ddx(a.w0);
    let w0z = ops.ddy(a.w0);
    let w1x = ops.ddx(a.w1);
    let w1z = ops.ddy(a.w1);
    let (ub2_1, ub2_2) = (&a.ub2.c[0], &a.ub2.c[1]);
    let w0bar_x = ops.ddx_profile(&tr0.w[0]);
    let w1bar_x = ops.ddx_profile(&tr1.w[0]);
    let w0bar_xy = ops.ddx_profile(&tr0.w[1]);

    let mut c = a.w0.zeros_like();
    add_profile(&mut c, 1.0, &tr2.u1[0], Some(&w0x));
    add_profile(&mut c, 1.0, &w0bar_x, Some(ub2_1));
    c.add_product(1.0, ub2_1, &w0x);
    add_profile(&mut c, 1.0, &tr1.u1[0], Some(&w1x));
    add_profile(&mut c, 1.0, &w1bar_x, Some(a.ub1));
    c.add_product(1.0, a.ub1, &w1x);
    add_profile(&mut c, 1.0, &tr0.w[1], Some(ub2_2));
    c.add_product(1.0, &minus_wall_value(ub2_2), &w1z);
    add_profile_term(ops, &mut c, 1.0, &tr1.u1[1], 1, &w0x);
    add_profile_term(ops, &mut c, 1.0, &w0bar_xy, 1, a.ub1);
    add_profile_term(ops, &mut c, 1.0, &tr0.u1[1], 1, &w1x);
    add_profile_term(ops, &mut c, 1.0, &tr2.u2[1], 1, &w0z);
    add_profile_term(ops, &mut c, 1.0, &tr1.u2[1], 1, &w1z);
    add_profile_term(ops, &mut c, 1.0 / 6.0, &tr0.u2[3], 3, &w0z);
    add_profile_term(ops, &mut c, 0.5, &tr0.u1[2], 2, &w0x);
    add_profile_term(ops, &mut c, 0.5, &tr0.u2[2], 2, &w1z);
    add_profile_term(ops, &mut c, 0.5, &tr1.u2[2], 2, &w0z);
    // (ubar^{I,3}_2 + u^{b,3}_2) d_z w^{b,0} = -2 int_0^z int_s^inf d_x w^{b,1}
    let ii = tail_integral(ops, &tail_integral(ops, &w1x)?)?.scaled(2.0);
    c.add_product(1.0, &minus_wall_value(&ii), &w0z);

    let mut l = ops.ddx(ub2_2).scaled(-2.0 * a.zeta);
    l.axpy(-2.0, &ops.ddy(a.ub1));
    l.axpy(-1.0, &ops.ddxx(a.w0));
    let q = ub1_forcing(ops, a.zeta, a.ub1, a.ub1_t);
    l.axpy(2.0, &tail_integral(ops, &q)?);
    Ok(MinusGb2 { convective: c, linear: l })
}

/// Centered time difference, one-sided second-order at the ends of a
/// three-level window. `which` selects the level the derivative refers to:
/// 0 (first), 1 (middle) or 2 (last).
pub fn time_derivative(levels: [&ScalarField; 3], dt: f64, which: usize) -> ScalarField {
    let [a, b, c] = levels;
    let h = 0.5 / dt;
    match which {
        0 => ScalarField::combine(&[(-3.0 * h, a), (4.0 * h, b), (-h, c)]),
        1 => ScalarField::combine(&[(-h, a), (h, c)]),
        _ => ScalarField::combine(&[(h, a), (-4.0 * h, b), (3.0 * h, c)]),
    }
}

/// `||z^l f||_{L2}` for `l = 0..=l_max`.
pub fn decay_report(ops: &Ops, f: &ScalarField, l_max: u32) -> Vec<(u32, f64)> {
    let z = &ops.grid.z.nodes;
    (0..=l_max)
        .map(|l| {
            let mut g = f.clone();
            for i in 0..g.nx {
                for (v, zj) in g.column_mut(i).iter_mut().zip(z) {
                    *v *= zj.powi(l as i32);
                }
            }
            (l, ops.l2(&g))
        })
        .collect()
}

/// Residual of a matching identity `d_z a + c * b` (max over the grid).
pub fn identity_residual(ops: &Ops, a: &ScalarField, c: f64, b: &ScalarField) -> f64 {
    let mut r = ops.ddy(a);
    r.axpy(c, b);
    r.max_abs()
}

/// Max of `|d_x u1 + d_z u2|` for a layer pair.
pub fn layer_divergence(ops: &Ops, u1: &ScalarField, u2: &ScalarField) -> f64 {
    let mut r = ops.ddx(u1);
    r.axpy(1.0, &ops.ddy(u2));
    r.max_abs()
}

/// Tolerance for identities between a tail integral and its integrand,
/// differentiated by the second-order layer stencil: `h^2 / 3 * max |f''|`
/// covers the trapezoid error plus the difference-quotient error.
pub fn identity_tolerance(ops: &Ops, integrand: &ScalarField) -> f64 {
    let h = ops.grid.z.h * ops.grid.z.length;
    h * h / 3.0 * ops.ddyy(integrand).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridSpec};

    fn ops() -> Ops {
        Ops::new(Grid::new(GridSpec { n_x: 8, n_y: 40, n_z: 400, z_max: 20.0, ..GridSpec::default() }).unwrap())
    }

    #[test]
    fn tail_of_exponential() {
        let o = ops();
        let f = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| x.cos() * (-z).exp());
        let t = tail_integral(&o, &f).unwrap();
        let h = o.grid.z.h * 20.0;
        for i in 0..8 {
            for j in 0..401 {
                let z = o.grid.z.nodes[j];
                let exact = o.grid.x.node(i).cos() * ((-z).exp() - (-20f64).exp());
                assert!((t.at(i, j) - exact).abs() < h * h / 12.0 * 20.0 + 1e-14);
            }
        }
        assert!(identity_residual(&o, &t, 1.0, &f) <= 10.0 * identity_tolerance(&o, &f));
    }

    #[test]
    fn tail_rejects_outer_fields() {
        let o = ops();
        assert!(tail_integral(&o, &ScalarField::outer(&o.grid)).is_err());
    }

    #[test]
    fn third_order_lift_rejects_zero_coupling() {
        let o = ops();
        let z = ScalarField::layer(&o.grid);
        assert!(lift_ub3(&o, 0.0, &z, &z, &z, &z).is_err());
        assert!(lift_ub4(&o, 0.0, &z, &z, &z).is_err());
    }

    #[test]
    fn fourth_order_lift_matches_tail_of_derivative() {
        let o = ops();
        let w1 = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| x.sin() * (-z * z).exp());
        let w2 = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| (2.0 * x).cos() * z * (-z).exp());
        let ub1 = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| (x.cos() + 0.5) * (-0.5 * z * z).exp());
        let ub1_t = ub1.scaled(0.3);
        let ub3 = lift_ub3(&o, 1.5, &w1, &w2, &ub1, &ub1_t).unwrap();
        let ub4 = lift_ub4(&o, 1.5, &w2, &ub1, &ub1_t).unwrap();
        let direct = tail_integral(&o, &o.ddx(&ub3.c[0])).unwrap();
        let mut d = ub4.clone();
        d.axpy(-1.0, &direct);
        assert!(d.max_abs() < 1e-12);
        let tol = identity_tolerance(&o, &o.ddx(&ub3.c[0]));
        assert!(layer_divergence(&o, &ub3.c[0], &ub4) <= 10.0 * tol);
    }

    #[test]
    fn time_derivative_is_exact_on_quadratics() {
        let o = ops();
        let f = |t: f64| ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| x.sin() * z * (1.0 + t + t * t));
        let (a, b, c) = (f(0.0), f(0.1), f(0.2));
        for (which, t) in [(0usize, 0.0), (1, 0.1), (2, 0.2)] {
            let d = time_derivative([&a, &b, &c], 0.1, which);
            let e = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| x.sin() * z * (1.0 + 2.0 * t));
            let mut r = d;
            r.axpy(-1.0, &e);
            assert!(r.max_abs() < 1e-11);
        }
    }
}
