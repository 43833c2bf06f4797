//! Discrete Leray projection onto fields that are divergence-free at the
//! interior nodes.
//!
//! Per Fourier mode we solve `D1 (D1 phi) - k^2 phi = div u*` at interior
//! nodes, where the outer `D1` uses the gradient that is actually subtracted:
//! zero at the two boundary nodes (the Neumann condition), so that after
//! `u = u* - grad phi` the discrete divergence vanishes exactly at interior
//! nodes. The mean mode only needs its wall-normal component removed.

use rustfft::num_complex::Complex64;

use crate::banded::BandMatrix;
use crate::error::Result;
use crate::field::{Coord, VectorField};
use crate::ops::Ops;

/// Result of a projection: the corrected velocity and the potential.
#[derive(Debug, Clone)]
pub struct Projection {
    pub u: VectorField,
    pub phi: crate::field::ScalarField,
}

pub fn pressure_project(ops: &Ops, u_star: &VectorField) -> Result<Projection> {
    let g = &ops.grid;
    let y = &g.y;
    let n = y.len();
    let div = ops.div(u_star);
    let rhs = ops.to_modes(&div);
    let mut u1 = ops.to_modes(&u_star.c[0]);
    let mut u2 = ops.to_modes(&u_star.c[1]);
    let mut phi = rhs.clone();
    phi.data.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut grad = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..rhs.nk {
        if m == 0 {
            for v in &mut u2.mode_mut(0)[1..n - 1] {
                *v = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let k = g.x.wavenumber(m);
        if k == 0.0 {
            continue;
        }
        let mut a = BandMatrix::zeros(n, 8, 8);
        for (i, s) in y.d1_stencil(0).iter() {
            a.add(0, i, s);
        }
        for (i, s) in y.d1_stencil(n - 1).iter() {
            a.add(n - 1, i, s);
        }
        for j in 1..n - 1 {
            a.add(j, j, -k * k);
            for (i, s) in y.d1_stencil(j).iter() {
                if i == 0 || i == n - 1 {
                    continue;
                }
                for (l, t) in y.d1_stencil(i).iter() {
                    a.add(j, l, s * t);
                }
            }
        }
        let lu = a.factor()?;
        let r = rhs.mode(m);
        re[0] = 0.0;
        im[0] = 0.0;
        re[n - 1] = 0.0;
        im[n - 1] = 0.0;
        for j in 1..n - 1 {
            re[j] = r[j].re;
            im[j] = r[j].im;
        }
        lu.solve(&mut re);
        lu.solve(&mut im);
        let ph = phi.mode_mut(m);
        for j in 0..n {
            ph[j] = Complex64::new(re[j], im[j]);
        }
        for (j, gj) in grad.iter_mut().enumerate() {
            *gj = y.d1_stencil(j).iter().map(|(i, s)| ph[i] * s).sum();
        }
        let ik = Complex64::new(0.0, k);
        let m1 = u1.mode_mut(m);
        for j in 1..n - 1 {
            m1[j] -= ik * ph[j];
        }
        let m2 = u2.mode_mut(m);
        for j in 1..n - 1 {
            m2[j] -= grad[j];
        }
    }
    let u = VectorField::new(ops.from_modes(&u1, Coord::Outer), ops.from_modes(&u2, Coord::Outer));
    Ok(Projection { u, phi: ops.from_modes(&phi, Coord::Outer) })
}

/// Largest divergence over the interior nodes.
pub fn interior_divergence(ops: &Ops, u: &VectorField) -> f64 {
    let d = ops.div(u);
    let n = d.ny;
    (0..d.nx).flat_map(|i| (1..n - 1).map(move |j| (i, j))).map(|(i, j)| d.at(i, j).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::grid::{Grid, GridSpec, Stretch};

    fn ops() -> Ops {
        Ops::new(
            Grid::new(GridSpec {
                n_x: 16,
                n_y: 120,
                y_max: 4.0,
                stretch: Stretch::Asinh { c: 0.05, beta: 1.0 },
                n_z: 32,
                ..GridSpec::default()
            })
            .unwrap(),
        )
    }

    fn rough(ops: &Ops) -> VectorField {
        VectorField::new(
            ScalarField::from_fn(&ops.grid, Coord::Outer, |x, y| (x + y).sin() * y * (4.0 - y)),
            ScalarField::from_fn(&ops.grid, Coord::Outer, |x, y| (2.0 * x).cos() * y * y * (4.0 - y)),
        )
    }

    #[test]
    fn projected_field_is_solenoidal_and_idempotent() {
        let o = ops();
        let p = pressure_project(&o, &rough(&o)).unwrap();
        assert!(interior_divergence(&o, &p.u) < 1e-9);
        let q = pressure_project(&o, &p.u).unwrap();
        let mut d = q.u.clone();
        d.axpy(-1.0, &p.u);
        assert!(d.max_abs() < 1e-12 * (1.0 + p.u.max_abs()), "{}", d.max_abs());
    }

    #[test]
    fn discrete_gradients_are_annihilated() {
        let o = ops();
        let y = &o.grid.y;
        let n = y.len();
        // profile whose discrete slope vanishes exactly at both ends
        let mut c: Vec<f64> = y.nodes.iter().map(|v| (std::f64::consts::PI * v / 4.0).cos()).collect();
        for end in [0, n - 1] {
            let st = y.d1_stencil(end);
            let (mut own, mut rest) = (0.0, 0.0);
            for (i, w) in st.iter() {
                if i == end {
                    own = w;
                } else {
                    rest += w * c[i];
                }
            }
            c[end] = -rest / own;
        }
        let mut q = ScalarField::outer(&o.grid);
        for i in 0..o.grid.x.n {
            let s = (o.grid.x.node(i)).cos();
            for j in 0..n {
                q.set(i, j, s * c[j]);
            }
        }
        let gq = o.grad(&q);
        let p = pressure_project(&o, &gq).unwrap();
        let mut worst: f64 = 0.0;
        for cmp in 0..2 {
            for i in 0..o.grid.x.n {
                for j in 1..n - 1 {
                    worst = worst.max(p.u.c[cmp].at(i, j).abs());
                }
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }
}
