//! Composite approximation: outer profiles plus layer profiles rescaled to
//! `z = y / sqrt(eps)`, plus the cutoff corrector that restores the exact wall
//! condition on the velocity.

pub mod residual;

use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::field::{Coord, ScalarField, VectorField};
use crate::layer::{tail_integral, time_derivative};
use crate::ops::Ops;
use crate::outer::{OuterLevel, WallTraces};

pub use residual::{closed_form, direct, Ledger, Residual};

/// Every profile at one time level.
#[derive(Debug, Clone)]
pub struct ProfileLevel {
    pub t: f64,
    /// Outer profiles of order 0, 1, 2.
    pub outer: [OuterLevel; 3],
    pub traces: [WallTraces; 3],
    /// Microrotation layers of order 0, 1, 2.
    pub wb: [ScalarField; 3],
    pub ub1: ScalarField,
    pub ub1_t: ScalarField,
    pub ub2: VectorField,
    pub ub3: VectorField,
    pub ub4: ScalarField,
    pub moments: WallMoments,
}

/// x-profiles that determine the corrector: `A = int_0^inf u^{b,2}_1`,
/// `B = u^{b,3}_1(x, 0)`, `C = int_0^inf u^{b,3}_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WallMoments {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl WallMoments {
    pub fn new(ops: &Ops, ub2_1: &ScalarField, ub3_1: &ScalarField) -> Result<Self> {
        Ok(Self {
            a: tail_integral(ops, ub2_1)?.row(0),
            b: ub3_1.row(0),
            c: tail_integral(ops, ub3_1)?.row(0),
        })
    }

    pub fn zero(n: usize) -> Self {
        Self { a: vec![0.0; n], b: vec![0.0; n], c: vec![0.0; n] }
    }

    /// Centered difference of three consecutive moment sets.
    pub fn rate(prev: &Self, next: &Self, dt: f64) -> Self {
        let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (b - a) / (2.0 * dt)).collect();
        Self { a: d(&prev.a, &next.a), b: d(&prev.b, &next.b), c: d(&prev.c, &next.c) }
    }
}

impl ProfileLevel {
    /// All profiles zero at time `t`.
    pub fn zero(ops: &Ops, t: f64) -> Self {
        let o = OuterLevel::zero(ops, t);
        let tr = o.traces(ops);
        let l = ScalarField::layer(&ops.grid);
        Self {
            t,
            outer: [o.clone(), o.clone(), o],
            traces: [tr.clone(), tr.clone(), tr],
            wb: [l.clone(), l.clone(), l.clone()],
            ub1: l.clone(),
            ub1_t: l.clone(),
            ub2: VectorField::layer(&ops.grid),
            ub3: VectorField::layer(&ops.grid),
            ub4: l,
            moments: WallMoments::zero(ops.grid.x.n),
        }
    }
}

/// Cubic interpolation from the uniform layer axis to the outer nodes for a
/// given `eps`. Outer nodes with `y / sqrt(eps)` beyond `z_max` receive zero.
#[derive(Debug, Clone)]
pub struct LayerSampler {
    pub eps: f64,
    /// `z` at each outer node.
    pub z: Vec<f64>,
    stencils: Vec<Option<(usize, [f64; 4])>>,
}

impl LayerSampler {
    pub fn new(ops: &Ops, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        let za = &ops.grid.z;
        let n = za.len();
        let h = za.length / (n - 1) as f64;
        let s = eps.sqrt();
        let z: Vec<f64> = ops.grid.y.nodes.iter().map(|y| y / s).collect();
        let stencils = z
            .iter()
            .map(|&zj| {
                if zj > za.length * (1.0 + 1e-14) {
                    return None;
                }
                let r = zj / h;
                let k0 = (r.floor() as usize).saturating_sub(1).min(n - 4);
                let mut w = [0.0; 4];
                for (a, wa) in w.iter_mut().enumerate() {
                    let mut p = 1.0;
                    for b in 0..4 {
                        if b != a {
                            p *= (r - (k0 + b) as f64) / (a as f64 - b as f64);
                        }
                    }
                    *wa = p;
                }
                Some((k0, w))
            })
            .collect();
        Ok(Self { eps, z, stencils })
    }

    /// Layer field evaluated at `z = y / sqrt(eps)` on the outer nodes.
    pub fn sample(&self, f: &ScalarField) -> ScalarField {
        debug_assert_eq!(f.coord, Coord::Layer);
        let ny = self.z.len();
        let mut out = ScalarField::zeros(f.nx, ny, Coord::Outer);
        for i in 0..f.nx {
            let src = f.column(i);
            let dst = out.column_mut(i);
            for (d, st) in dst.iter_mut().zip(&self.stencils) {
                if let Some((k0, w)) = st {
                    *d = w[0] * src[*k0] + w[1] * src[k0 + 1] + w[2] * src[k0 + 2] + w[3] * src[k0 + 3];
                }
            }
        }
        out
    }

    pub fn sample_vec(&self, v: &VectorField) -> VectorField {
        VectorField::new(self.sample(&v.c[0]), self.sample(&v.c[1]))
    }
}

/// Cutoff data on the outer nodes.
#[derive(Debug, Clone)]
pub struct Corrector {
    phi: Vec<f64>,
    dphi: Vec<f64>,
    /// `int_0^y phi`.
    big_phi: Vec<f64>,
    sqrt_eps: f64,
}

impl Corrector {
    pub fn new(ops: &Ops, cutoff: &Cutoff, eps: f64) -> Result<Self> {
        cutoff.validate()?;
        let y = &ops.grid.y.nodes;
        Ok(Self {
            phi: y.iter().map(|&v| cutoff.eval(v).v).collect(),
            dphi: y.iter().map(|&v| cutoff.eval(v).d1).collect(),
            big_phi: y.iter().map(|&v| cutoff.integral(v)).collect(),
            sqrt_eps: eps.sqrt(),
        })
    }

    /// Divergence-free field that cancels the remaining wall velocity:
    /// `S_1 = phi' A - (phi^2 + phi' Phi) B + sqrt(eps) phi' C`,
    /// `S_2 = -phi A_x + phi Phi B_x - sqrt(eps) phi C_x`.
    pub fn build(&self, ops: &Ops, m: &WallMoments) -> VectorField {
        let (ax, bx, cx) = (ops.ddx_profile(&m.a), ops.ddx_profile(&m.b), ops.ddx_profile(&m.c));
        let s = self.sqrt_eps;
        let mut out = VectorField::outer(&ops.grid);
        for i in 0..ops.grid.x.n {
            for j in 0..self.phi.len() {
                let (p, dp, bp) = (self.phi[j], self.dphi[j], self.big_phi[j]);
                out.c[0].set(i, j, dp * m.a[i] - (p * p + dp * bp) * m.b[i] + s * dp * m.c[i]);
                out.c[1].set(i, j, -p * ax[i] + p * bp * bx[i] - s * p * cx[i]);
            }
        }
        out
    }
}

/// `(u^a, w^a, p^a)` at one time for one `eps`.
#[derive(Debug, Clone)]
pub struct Composite {
    pub t: f64,
    pub eps: f64,
    pub u: VectorField,
    pub w: ScalarField,
    pub p: ScalarField,
    /// Unweighted corrector `S`.
    pub s: VectorField,
}

/// Layer and corrector contributions share the `eps` weights below.
pub struct Assembler {
    pub sampler: LayerSampler,
    pub corrector: Corrector,
}

impl Assembler {
    pub fn new(ops: &Ops, cutoff: &Cutoff, eps: f64) -> Result<Self> {
        Ok(Self { sampler: LayerSampler::new(ops, eps)?, corrector: Corrector::new(ops, cutoff, eps)? })
    }

    pub fn eps(&self) -> f64 {
        self.sampler.eps
    }

    pub fn composite(&self, ops: &Ops, lv: &ProfileLevel) -> Composite {
        let eps = self.eps();
        let s = eps.sqrt();
        let e32 = eps * s;
        let sm = |f: &ScalarField| self.sampler.sample(f);
        let corr = self.corrector.build(ops, &lv.moments);
        let [o0, o1, o2] = &lv.outer;
        let mut u = o0.u.clone();
        for c in 0..2 {
            u.c[c].axpy(s, &o1.u.c[c]);
            u.c[c].axpy(eps, &o2.u.c[c]);
            u.c[c].axpy(eps, &sm(&lv.ub2.c[c]));
            u.c[c].axpy(e32, &sm(&lv.ub3.c[c]));
            u.c[c].axpy(e32, &corr.c[c]);
        }
        u.c[0].axpy(s, &sm(&lv.ub1));
        u.c[1].axpy(eps * eps, &sm(&lv.ub4));
        let mut w = o0.w.clone();
        w.axpy(s, &o1.w);
        w.axpy(eps, &o2.w);
        w.axpy(1.0, &sm(&lv.wb[0]));
        w.axpy(s, &sm(&lv.wb[1]));
        w.axpy(eps, &sm(&lv.wb[2]));
        let mut p = o0.p.clone();
        p.axpy(s, &o1.p);
        p.axpy(eps, &o2.p);
        Composite { t: lv.t, eps, u, w, p, s: corr }
    }
}

/// Centered time derivative of a layer field from three consecutive levels.
pub(crate) fn centered(prev: &ScalarField, cur: &ScalarField, next: &ScalarField, dt: f64) -> ScalarField {
    time_derivative([prev, cur, next], dt, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridSpec, Stretch};

    fn ops() -> Ops {
        Ops::new(
            Grid::new(GridSpec {
                n_x: 16,
                n_y: 200,
                stretch: Stretch::Asinh { c: 0.02, beta: 1.0 },
                n_z: 400,
                ..GridSpec::default()
            })
            .unwrap(),
        )
    }

    #[test]
    fn sampling_reproduces_cubics_and_vanishes_outside_the_layer() {
        let o = ops();
        let f = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| x.sin() * (1.0 + z - 0.3 * z * z + 0.01 * z.powi(3)));
        let sm = LayerSampler::new(&o, 0.01).unwrap();
        let g = sm.sample(&f);
        for j in 0..o.grid.y.len() {
            let z = o.grid.y.nodes[j] / 0.1;
            let exact = if z <= 20.0 { 1.0 + z - 0.3 * z * z + 0.01 * z.powi(3) } else { 0.0 };
            for i in 0..16 {
                assert!((g.at(i, j) - o.grid.x.node(i).sin() * exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unit_eps_sampling_is_the_identity_on_shared_nodes() {
        let o = ops();
        let f = ScalarField::from_fn(&o.grid, Coord::Layer, |x, z| x.cos() * (-z).exp());
        let g = LayerSampler::new(&o, 1.0).unwrap().sample(&f);
        // node 0 coincides exactly
        for i in 0..16 {
            assert_eq!(g.at(i, 0), f.at(i, 0));
        }
        assert!(LayerSampler::new(&o, 0.0).is_err());
    }

    #[test]
    fn corrector_is_solenoidal_and_cancels_wall_data() {
        let o = ops();
        let n = 16;
        let xs: Vec<f64> = (0..n).map(|i| o.grid.x.node(i)).collect();
        let m = WallMoments {
            a: xs.iter().map(|x| x.sin()).collect(),
            b: xs.iter().map(|x| (2.0 * x).cos() + 0.5).collect(),
            c: xs.iter().map(|x| x.cos()).collect(),
        };
        let eps = 0.01;
        let corr = Corrector::new(&o, &Cutoff::default(), eps).unwrap();
        let s = corr.build(&o, &m);
        let div = o.div(&s);
        // interior divergence vanishes to stencil accuracy of the cutoff
        // (its high derivatives near y = 1 dominate on this grid); it is
        // small against either of its two cancelling parts
        let interior = (1..o.grid.y.len() - 1).flat_map(|j| (0..n).map(move |i| (i, j)));
        let worst = interior.map(|(i, j)| div.at(i, j).abs()).fold(0.0, f64::max);
        let part = o.ddy(&s.c[1]).max_abs();
        assert!(worst < 6e-2 * part, "div S = {worst} against {part}");
        let ax = o.ddx_profile(&m.a);
        let cx = o.ddx_profile(&m.c);
        for i in 0..n {
            assert!((s.c[0].at(i, 0) + m.b[i]).abs() < 1e-14);
            assert!((s.c[1].at(i, 0) + ax[i] + eps.sqrt() * cx[i]).abs() < 1e-13);
        }
        for (j, y) in o.grid.y.nodes.iter().enumerate() {
            if *y >= 1.0 {
                for i in 0..n {
                    assert_eq!(s.c[0].at(i, j), 0.0);
                    assert_eq!(s.c[1].at(i, j), 0.0);
                }
            }
        }
        let zero = corr.build(&o, &WallMoments::zero(n));
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn corrector_divergence_converges() {
        let err = |n_y: usize| {
            let o = Ops::new(
                Grid::new(GridSpec { n_x: 8, n_y, stretch: Stretch::Uniform, n_z: 40, ..GridSpec::default() }).unwrap(),
            );
            let xs: Vec<f64> = (0..8).map(|i| o.grid.x.node(i)).collect();
            let m = WallMoments {
                a: xs.iter().map(|x| x.sin()).collect(),
                b: xs.iter().map(|x| x.cos()).collect(),
                c: xs.iter().map(|x| (2.0 * x).sin()).collect(),
            };
            let s = Corrector::new(&o, &Cutoff::default(), 0.04).unwrap().build(&o, &m);
            o.div(&s).max_abs()
        };
        let (a, b) = (err(400), err(800));
        assert!((a / b).log2() > 1.7, "{a} -> {b}");
    }

    #[test]
    fn zero_profiles_give_zero_composite() {
        let o = ops();
        let asm = Assembler::new(&o, &Cutoff::default(), 0.01).unwrap();
        let c = asm.composite(&o, &ProfileLevel::zero(&o, 0.0));
        assert_eq!(c.u.max_abs() + c.w.max_abs() + c.p.max_abs(), 0.0);
    }
}
