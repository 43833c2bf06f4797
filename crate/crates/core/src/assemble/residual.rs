//! Residuals `(F, G)` of the composite approximation in the full system.
//!
//! Two independent routes: [`closed_form`] evaluates the residual as a sum
//! of labeled groups built from the profiles and their layer derivatives,
//! each group carrying its exact power of `eps`; [`direct`] applies the
//! discrete operators of the full system to the assembled composite. The
//! two agree up to discretization error.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::ops::Ops;
use crate::outer::{OuterLevel, WallTraces};

use super::{centered, Assembler, Composite, ProfileLevel, WallMoments};

/// Labeled terms whose sum is the stored total.
#[derive(Debug, Clone)]
pub struct Ledger<T> {
    pub terms: Vec<(String, T)>,
}

/// Residual of the momentum (`f`) and microrotation (`g`) equations at one
/// time.
#[derive(Debug, Clone)]
pub struct Residual {
    pub t: f64,
    pub f: VectorField,
    pub g: ScalarField,
    /// Present for the closed-form route only.
    pub f_terms: Option<Ledger<VectorField>>,
    pub g_terms: Option<Ledger<ScalarField>>,
}

impl Ledger<VectorField> {
    fn total(&self, like: &VectorField) -> VectorField {
        let mut t = like.zeros_like();
        for (_, v) in &self.terms {
            t.axpy(1.0, v);
        }
        t
    }
}

impl Ledger<ScalarField> {
    fn total(&self, like: &ScalarField) -> ScalarField {
        let mut t = like.zeros_like();
        for (_, v) in &self.terms {
            t.axpy(1.0, v);
        }
        t
    }
}

/// Zeroes the first and last wall-normal rows; residual norms are taken
/// over interior nodes, where the equations are actually imposed.
pub fn interior(f: &ScalarField) -> ScalarField {
    let mut out = f.clone();
    let n = f.ny;
    for i in 0..f.nx {
        let c = out.column_mut(i);
        c[0] = 0.0;
        c[n - 1] = 0.0;
    }
    out
}

pub fn interior_vec(v: &VectorField) -> VectorField {
    VectorField::new(interior(&v.c[0]), interior(&v.c[1]))
}

/// Value and first/second derivatives of a field on the outer grid.
#[derive(Debug, Clone)]
struct Jet {
    v: ScalarField,
    x: ScalarField,
    y: ScalarField,
    xx: ScalarField,
    yy: ScalarField,
}

impl Jet {
    fn outer(ops: &Ops, f: &ScalarField) -> Self {
        Self { v: f.clone(), x: ops.ddx(f), y: ops.ddy(f), xx: ops.ddxx(f), yy: ops.ddyy(f) }
    }

    /// Layer field rescaled to the outer grid: `d_y = eps^{-1/2} d_z`.
    fn layer(ops: &Ops, asm: &Assembler, f: &ScalarField) -> Self {
        let s = asm.eps().sqrt();
        let sm = |g: &ScalarField| asm.sampler.sample(g);
        Self {
            v: sm(f),
            x: sm(&ops.ddx(f)),
            y: sm(&ops.ddy(f)).scaled(1.0 / s),
            xx: sm(&ops.ddxx(f)),
            yy: sm(&ops.ddyy(f)).scaled(1.0 / (s * s)),
        }
    }

    fn zero(like: &ScalarField) -> Self {
        let z = like.zeros_like();
        Self { v: z.clone(), x: z.clone(), y: z.clone(), xx: z.clone(), yy: z }
    }

    fn lap(&self) -> ScalarField {
        ScalarField::combine(&[(1.0, &self.xx), (1.0, &self.yy)])
    }

    fn combine(terms: &[(f64, &Jet)]) -> Jet {
        let pick = |k: fn(&Jet) -> &ScalarField| {
            let v: Vec<(f64, &ScalarField)> = terms.iter().map(|(a, j)| (*a, k(j))).collect();
            ScalarField::combine(&v)
        };
        Jet { v: pick(|j| &j.v), x: pick(|j| &j.x), y: pick(|j| &j.y), xx: pick(|j| &j.xx), yy: pick(|j| &j.yy) }
    }

    /// `(a . grad) self`.
    fn advected(&self, a: [&ScalarField; 2]) -> ScalarField {
        let mut out = self.v.zeros_like();
        out.add_product(1.0, a[0], &self.x);
        out.add_product(1.0, a[1], &self.y);
        out
    }
}

/// `f - sum_{k = from..=to} trace_k y^k / k!`: the Taylor remainder of an
/// outer field about the wall. In layer variables `y^k = eps^{k/2} z^k`.
fn remainder(ops: &Ops, f: &ScalarField, traces: &[Vec<f64>; 4], from: usize, to: usize) -> ScalarField {
    let y = &ops.grid.y.nodes;
    let fact = [1.0, 1.0, 2.0, 6.0];
    let mut out = f.clone();
    for i in 0..f.nx {
        let col = out.column_mut(i);
        for (j, v) in col.iter_mut().enumerate() {
            for k in from..=to {
                *v -= traces[k][i] * y[j].powi(k as i32) / fact[k];
            }
        }
    }
    out
}

/// An x-profile broadcast along y.
fn broadcast(like: &ScalarField, p: &[f64]) -> ScalarField {
    let mut out = like.zeros_like();
    for i in 0..out.nx {
        out.column_mut(i).iter_mut().for_each(|v| *v = p[i]);
    }
    out
}

fn product(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let mut out = a.zeros_like();
    out.add_product(1.0, a, b);
    out
}


/// Wall traces of `d_x f` from those of `f`.
fn dx_traces(ops: &Ops, tr: &[Vec<f64>; 4]) -> [Vec<f64>; 4] {
    std::array::from_fn(|k| ops.ddx_profile(&tr[k]))
}

/// Everything the closed form needs, evaluated on the outer grid.
struct Pieces<'a> {
    ops: &'a Ops,
    eps: f64,
    zeta: f64,
    /// Outer velocity components per order.
    u: [[Jet; 2]; 3],
    /// Outer microrotation per order.
    w: [Jet; 3],
    tr: [WallTraces; 3],
    ub1: Jet,
    ub2: [Jet; 2],
    ub3: [Jet; 2],
    ub4: Jet,
    wb: [Jet; 3],
    s: [Jet; 2],
    ub2_t: [ScalarField; 2],
    ub3_t: [ScalarField; 2],
    ub4_t: ScalarField,
    s_t: VectorField,
    ub3_2_wall: Vec<f64>,
}

impl<'a> Pieces<'a> {
    fn new(ops: &'a Ops, asm: &Assembler, zeta: f64, win: [&ProfileLevel; 3], dt: f64) -> Self {
        let [prev, cur, next] = win;
        let lj = |f: &ScalarField| Jet::layer(ops, asm, f);
        let oj = |f: &ScalarField| Jet::outer(ops, f);
        let outer_u = |o: &OuterLevel| [oj(&o.u.c[0]), oj(&o.u.c[1])];
        let sm = |f: &ScalarField| asm.sampler.sample(f);
        let corr = asm.corrector.build(ops, &cur.moments);
        let s_t = asm.corrector.build(ops, &WallMoments::rate(&prev.moments, &next.moments, dt));
        Self {
            ops,
            eps: asm.eps(),
            zeta,
            u: [outer_u(&cur.outer[0]), outer_u(&cur.outer[1]), outer_u(&cur.outer[2])],
            w: [oj(&cur.outer[0].w), oj(&cur.outer[1].w), oj(&cur.outer[2].w)],
            tr: cur.traces.clone(),
            ub1: lj(&cur.ub1),
            ub2: [lj(&cur.ub2.c[0]), lj(&cur.ub2.c[1])],
            ub3: [lj(&cur.ub3.c[0]), lj(&cur.ub3.c[1])],
            ub4: lj(&cur.ub4),
            wb: [lj(&cur.wb[0]), lj(&cur.wb[1]), lj(&cur.wb[2])],
            s: [oj(&corr.c[0]), oj(&corr.c[1])],
            ub2_t: std::array::from_fn(|c| sm(&centered(&prev.ub2.c[c], &cur.ub2.c[c], &next.ub2.c[c], dt))),
            ub3_t: std::array::from_fn(|c| sm(&centered(&prev.ub3.c[c], &cur.ub3.c[c], &next.ub3.c[c], dt))),
            ub4_t: sm(&centered(&prev.ub4, &cur.ub4, &next.ub4, dt)),
            s_t,
            ub3_2_wall: cur.ub3.c[1].row(0),
        }
    }

    fn zero(&self) -> Jet {
        Jet::zero(&self.u[0][0].v)
    }

    fn u_tr(&self, order: usize, c: usize) -> &[Vec<f64>; 4] {
        if c == 0 {
            &self.tr[order].u1
        } else {
            &self.tr[order].u2
        }
    }

    /// Taylor remainder of `u^{I,order}_c` keeping wall orders `from..=to`.
    fn u_rem(&self, order: usize, c: usize, from: usize, to: usize) -> ScalarField {
        remainder(self.ops, &self.u[order][c].v, self.u_tr(order, c), from, to)
    }

    /// Component `c` of `eps u^{b,2} + eps^{3/2} (u^{b,3} + S) + eps^2 (0, u^{b,4}_2)`.
    fn high(&self, c: usize) -> Jet {
        let e = self.eps;
        let e32 = e * e.sqrt();
        let mut terms = vec![(e, &self.ub2[c]), (e32, &self.ub3[c]), (e32, &self.s[c])];
        if c == 1 {
            terms.push((e * e, &self.ub4));
        }
        Jet::combine(&terms)
    }

    /// Component `c` of `u^a - u^{I,0}`.
    fn rest(&self, c: usize) -> Jet {
        let s = self.eps.sqrt();
        let high = self.high(c);
        let ub1 = self.ub1_c(c);
        Jet::combine(&[(s, &self.u[1][c]), (self.eps, &self.u[2][c]), (s, &ub1), (1.0, &high)])
    }

    /// Component `c` of `u^a`.
    fn full(&self, c: usize) -> Jet {
        let rest = self.rest(c);
        Jet::combine(&[(1.0, &self.u[0][c]), (1.0, &rest)])
    }

    /// Component `c` of `u^{b,1}`; the normal component vanishes.
    fn ub1_c(&self, c: usize) -> Jet {
        if c == 0 {
            self.ub1.clone()
        } else {
            self.zero()
        }
    }

    fn vel(&self, order: usize) -> [&ScalarField; 2] {
        [&self.u[order][0].v, &self.u[order][1].v]
    }

    /// `w^a`.
    fn w_full(&self) -> Jet {
        let s = self.eps.sqrt();
        Jet::combine(&[
            (1.0, &self.w[0]),
            (s, &self.w[1]),
            (self.eps, &self.w[2]),
            (1.0, &self.wb[0]),
            (s, &self.wb[1]),
            (self.eps, &self.wb[2]),
        ])
    }

    /// `sqrt(eps) w^{I,1} + eps w^{I,2} + eps w^{b,2}`.
    fn w_upper(&self) -> Jet {
        let s = self.eps.sqrt();
        Jet::combine(&[(s, &self.w[1]), (self.eps, &self.w[2]), (self.eps, &self.wb[2])])
    }

    /// Groups of `-F`, each still to be negated.
    fn momentum_groups(&self) -> Vec<(&'static str, [ScalarField; 2])> {
        let e = self.eps;
        let s = e.sqrt();
        let e32 = e * s;
        let z = self.zeta;
        let u0 = &self.u[0];
        let mut out: Vec<(&'static str, [ScalarField; 2])> = Vec::new();

        out.push((
            "F1",
            std::array::from_fn(|c| {
                let mut v = ScalarField::combine(&[(e, &self.ub2_t[c]), (e32, &self.ub3_t[c]), (e32, &self.s_t.c[c])]);
                if c == 1 {
                    v.axpy(e * e, &self.ub4_t);
                }
                v
            }),
        ));

        // d_z = sqrt(eps) d_y on layer fields
        let u0_2_rem = self.u_rem(0, 1, 1, 1);
        out.push((
            "F2",
            std::array::from_fn(|c| {
                let l = self.ub1_c(c);
                let mut v = product(&u0[0].v, &l.x).scaled(s);
                v.add_product(s, &u0_2_rem, &l.y);
                v
            }),
        ));

        out.push((
            "F3",
            std::array::from_fn(|c| {
                let l2 = &self.ub2[c];
                let mut v = product(&u0[0].v, &l2.x).scaled(e);
                v.add_product(e, &u0[1].v, &l2.y);
                let ub4 = if c == 1 { self.ub4.clone() } else { self.zero() };
                let r = Jet::combine(&[(1.0, &self.ub3[c]), (1.0, &self.s[c]), (s, &ub4)]);
                v.axpy(e32, &r.advected(self.vel(0)));
                v
            }),
        ));

        out.push((
            "F4",
            std::array::from_fn(|c| {
                let h = self.high(c);
                Jet::combine(&[(e, &self.u[2][c]), (1.0, &h)]).advected(self.vel(1)).scaled(s)
            }),
        ));

        let ub1 = &self.ub1.v;
        out.push((
            "F5",
            std::array::from_fn(|c| {
                let ux_rem = remainder(self.ops, &u0[c].x, &dx_traces(self.ops, self.u_tr(0, c)), 0, 0);
                let mut v = product(ub1, &ux_rem).scaled(s);
                v.add_product(s, ub1, &self.rest(c).x);
                v
            }),
        ));

        let (h0, h1) = (self.high(0).v, self.high(1).v);
        out.push(("F6", std::array::from_fn(|c| self.full(c).advected([&h0, &h1]))));

        out.push((
            "F7",
            std::array::from_fn(|c| {
                let mut v = self.u[1][c].lap().scaled(s);
                v.axpy(s, &self.ub1_c(c).xx);
                v.axpy(e, &self.u[2][c].lap());
                v.axpy(e, &self.ub2[c].lap());
                v.axpy(e32, &self.ub3[c].lap());
                v.axpy(e32, &self.s[c].lap());
                if c == 1 {
                    v.axpy(e * e, &self.ub4.lap());
                }
                v.scaled(-e)
            }),
        ));

        out.push((
            "F8",
            std::array::from_fn(|c| {
                let mut v = self.ub2[c].xx.scaled(e);
                v.axpy(e32, &self.ub3[c].xx);
                v.axpy(e32, &self.s[c].lap());
                if c == 1 {
                    v.axpy(e * e, &self.ub4.lap());
                }
                let mut v = v.scaled(-z);
                if c == 1 {
                    v.axpy(2.0 * z * e, &self.wb[2].x);
                }
                v
            }),
        ));

        // groups produced by the expansion that the printed list leaves out
        out.push(("F9", std::array::from_fn(|c| self.ub1_c(c).advected(self.vel(1)).scaled(e))));
        out.push(("F10", std::array::from_fn(|c| self.rest(c).advected(self.vel(2)).scaled(e))));
        out
    }

    /// Groups of `-G`, each still to be negated.
    fn micro_groups(&self) -> Vec<(&'static str, ScalarField)> {
        let e = self.eps;
        let s = e.sqrt();
        let e32 = e * s;
        let z = self.zeta;
        let ops = self.ops;
        let wb = &self.wb;
        // layer z-derivatives: d_z = sqrt(eps) d_y
        let wz: [ScalarField; 3] = std::array::from_fn(|j| wb[j].y.scaled(s));
        let wx: [&ScalarField; 3] = std::array::from_fn(|j| &wb[j].x);
        let u0x = &self.u[0][0].v;
        let (u1x, u1y) = (&self.u[1][0].v, &self.u[1][1].v);
        let u2x = &self.u[2][0].v;
        let rem = |o: usize, c: usize, a: usize, b: usize| self.u_rem(o, c, a, b);
        let w0x_tr = dx_traces(ops, &self.tr[0].w);
        let w1x_tr = dx_traces(ops, &self.tr[1].w);
        let ub1 = &self.ub1.v;
        let upper = self.w_upper();
        let w_a = self.w_full();
        let mut out: Vec<(&'static str, ScalarField)> = Vec::new();

        out.push(("G1", product(&rem(0, 0, 1, 2), wx[0])));
        out.push(("G2", product(&rem(0, 1, 1, 3), &wb[0].y)));

        let mut g3 = product(&rem(0, 0, 1, 1), wx[1]).scaled(s);
        g3.add_product(1.0, &rem(0, 1, 1, 2), &wz[1]);
        out.push(("G3", g3));

        let mut g4 = product(u0x, wx[2]).scaled(e);
        g4.add_product(s, &rem(0, 1, 1, 1), &wz[2]);
        g4.add_product(s, &rem(1, 0, 0, 1), wx[0]);
        out.push(("G4", g4));

        // sign of the quadratic Taylor term follows the expansion
        let mut g5 = product(&rem(1, 1, 1, 2), &wz[0]);
        g5.add_product(e, &rem(1, 0, 0, 0), wx[1]);
        out.push(("G5", g5));

        let mut g6 = product(&rem(1, 1, 1, 1), &wz[1]).scaled(s);
        g6.add_product(e32, u1x, wx[2]);
        g6.add_product(e, u1y, &wz[2]);
        out.push(("G6", g6));

        let w0x_rem = remainder(ops, &self.w[0].x, &w0x_tr, 0, 1);
        let mut g7 = product(ub1, &w0x_rem).scaled(s);
        let w2_and_layer = ScalarField::combine(&[(e, &self.w[2].x), (e, wx[2])]);
        g7.add_product(s, ub1, &w2_and_layer);
        out.push(("G7", g7));

        let mut g8 = product(&rem(2, 0, 0, 0), wx[0]).scaled(e);
        g8.add_product(s, &rem(2, 1, 0, 1), &wz[0]);
        g8.add_product(e32, u2x, wx[1]);
        out.push(("G8", g8));

        let mut g9 = product(&rem(2, 1, 0, 0), &wz[1]).scaled(e);
        g9.axpy(e, &upper.advected(self.vel(2)));
        out.push(("G9", g9));

        let (b2x, b2y) = (&self.ub2[0].v, &self.ub2[1].v);
        let mut g10 = product(b2x, &remainder(ops, &self.w[0].x, &w0x_tr, 0, 0)).scaled(e);
        let w0y_rem = ScalarField::combine(&[(1.0, &self.w[0].y), (-1.0, &broadcast(b2y, &self.tr[0].w[1]))]);
        g10.add_product(e, b2y, &w0y_rem);
        out.push(("G10", g10));

        let mut g11 = product(b2x, wx[1]).scaled(e32);
        g11.axpy(e, &upper.advected([b2x, b2y]));
        g11.add_product(e32, &self.ub3[0].v, wx[0]);
        out.push(("G11", g11));

        let no_w0 = Jet::combine(&[(1.0, &w_a), (-1.0, &wb[0])]);
        let mut g12 = no_w0.advected([&self.ub3[0].v, &self.ub3[1].v]).scaled(e32);
        let lift1 = self.s[0].v.scaled(e32);
        let lift2 = ScalarField::combine(&[(e32, &self.s[1].v), (e * e, &self.ub4.v)]);
        g12.axpy(1.0, &w_a.advected([&lift1, &lift2]));
        // the wall value of the third normal layer velocity enters with a
        // plus sign once the second-order source is subtracted
        let wall = broadcast(&wz[0], &self.ub3_2_wall);
        g12.add_product(e, &wall, &wz[0]);
        out.push(("G12", g12));

        let mut g13 = self.w[1].lap().scaled(s);
        g13.axpy(s, &wb[1].xx);
        g13.axpy(e, &self.w[2].lap());
        g13.axpy(e, &wb[2].xx);
        out.push(("G13", g13.scaled(-e)));

        let perp_div_s = ScalarField::combine(&[(1.0, &self.s[1].x), (-1.0, &self.s[0].y)]);
        let mut g14 = self.ub3[1].x.scaled(e32);
        g14.axpy(e32, &perp_div_s);
        g14.axpy(e * e, &self.ub4.x);
        out.push(("G14", g14.scaled(-2.0 * z)));

        out.push(("G15", self.w[2].advected(self.vel(1)).scaled(e32)));
        let w1x_rem = remainder(ops, &self.w[1].x, &w1x_tr, 0, 0);
        out.push(("G16", product(ub1, &w1x_rem).scaled(e)));
        out
    }
}

/// Closed-form residual at the middle level of three consecutive profile
/// levels spaced `dt` apart.
pub fn closed_form(ops: &Ops, asm: &Assembler, zeta: f64, win: [&ProfileLevel; 3], dt: f64) -> Result<Residual> {
    check_window(win.map(|l| l.t), dt)?;
    let p = Pieces::new(ops, asm, zeta, win, dt);
    let f_terms = Ledger {
        terms: p
            .momentum_groups()
            .into_iter()
            .map(|(k, [a, b])| (k.to_string(), VectorField::new(a.scaled(-1.0), b.scaled(-1.0))))
            .collect(),
    };
    let g_terms =
        Ledger { terms: p.micro_groups().into_iter().map(|(k, v)| (k.to_string(), v.scaled(-1.0))).collect() };
    let like = VectorField::outer(&ops.grid);
    let f = f_terms.total(&like);
    let g = g_terms.total(&like.c[0]);
    Ok(Residual { t: win[1].t, f, g, f_terms: Some(f_terms), g_terms: Some(g_terms) })
}

fn check_window(t: [f64; 3], dt: f64) -> Result<()> {
    let ok = ((t[1] - t[0]) - dt).abs() <= 1e-9 * dt.max(1.0) && ((t[2] - t[1]) - dt).abs() <= 1e-9 * dt.max(1.0);
    if !ok {
        return Err(Error::InsufficientSamples(format!(
            "residual needs three consecutive levels {dt} apart, got times {t:?}"
        )));
    }
    Ok(())
}

/// Residual obtained by applying the discrete full-system operators to the
/// composite at the middle of three consecutive levels:
/// `F = -(u_t + u . grad u + grad p - (eps + zeta) lap u + 2 zeta perp_grad w)`,
/// `G = -(w_t + u . grad w + 4 zeta w - eps lap w - 2 zeta perp_div u)`.
pub fn direct(ops: &Ops, zeta: f64, win: [&Composite; 3], dt: f64) -> Result<Residual> {
    check_window(win.map(|c| c.t), dt)?;
    let [prev, cur, next] = win;
    let eps = cur.eps;
    let u = &cur.u;
    let mut f = VectorField::outer(&ops.grid);
    for c in 0..2 {
        let uc = &u.c[c];
        let mut r = ScalarField::combine(&[(1.0 / (2.0 * dt), &next.u.c[c]), (-1.0 / (2.0 * dt), &prev.u.c[c])]);
        r.add_product(1.0, &u.c[0], &ops.ddx(uc));
        r.add_product(1.0, &u.c[1], &ops.ddy(uc));
        let dp = if c == 0 { ops.ddx(&cur.p) } else { ops.ddy(&cur.p) };
        r.axpy(1.0, &dp);
        r.axpy(-(eps + zeta), &ops.laplacian(uc));
        f.c[c] = r.scaled(-1.0);
    }
    let pg = ops.perp_grad(&cur.w);
    f.axpy(-2.0 * zeta, &pg);

    let mut r = ScalarField::combine(&[(1.0 / (2.0 * dt), &next.w), (-1.0 / (2.0 * dt), &prev.w)]);
    r.axpy(1.0, &ops.advect(u, &cur.w));
    r.axpy(4.0 * zeta, &cur.w);
    r.axpy(-eps, &ops.laplacian(&cur.w));
    r.axpy(-2.0 * zeta, &ops.perp_div(u));
    Ok(Residual { t: cur.t, f: interior_vec(&f), g: interior(&r.scaled(-1.0)), f_terms: None, g_terms: None })
}

impl Residual {
    /// Interior L2 norms `(||F||, ||G||)`.
    pub fn norms(&self, ops: &Ops) -> (f64, f64) {
        (ops.l2_vec(&interior_vec(&self.f)), ops.l2(&interior(&self.g)))
    }

    /// Interior L2 norms of every ledger entry, F then G.
    pub fn term_norms(&self, ops: &Ops) -> Vec<(String, f64, f64)> {
        let mut out = Vec::new();
        if let Some(l) = &self.f_terms {
            for (k, v) in &l.terms {
                let iv = interior_vec(v);
                out.push((k.clone(), ops.l2_vec(&iv), iv.max_abs()));
            }
        }
        if let Some(l) = &self.g_terms {
            for (k, v) in &l.terms {
                let iv = interior(v);
                out.push((k.clone(), ops.l2(&iv), iv.max_abs()));
            }
        }
        out
    }

    /// Interior L2 norm of the difference to another residual.
    pub fn distance(&self, ops: &Ops, other: &Residual) -> (f64, f64) {
        let mut df = interior_vec(&self.f);
        df.axpy(-1.0, &interior_vec(&other.f));
        let mut dg = interior(&self.g);
        dg.axpy(-1.0, &interior(&other.g));
        (ops.l2_vec(&df), ops.l2(&dg))
    }
}
