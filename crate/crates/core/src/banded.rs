//! Banded LU with partial pivoting and a tridiagonal solver.

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals. Row `r`
/// stores columns `r - kl .. r - kl + width`, where the extra `kl` columns
/// absorb fill-in from row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, a: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, r: usize, c: usize) -> Option<usize> {
        let off = c as isize - r as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(r * self.width + off as usize)
        }
    }

    /// Adds `v` to entry `(r, c)`; panics if outside the declared band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let ok = c + self.kl >= r && c <= r + self.ku;
        assert!(ok, "entry ({r}, {c}) outside band kl={} ku={}", self.kl, self.ku);
        let p = self.pos(r, c).expect("inside band");
        self.a[p] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pos(r, c).map_or(0.0, |p| self.a[p])
    }

    /// `y = A x` using the unfactored matrix.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (r, yr) in y.iter_mut().enumerate() {
            let lo = r.saturating_sub(self.kl);
            let hi = (r + self.ku).min(self.n - 1);
            for c in lo..=hi {
                *yr += self.get(r, c) * x[c];
            }
        }
        y
    }

    /// Factors in place.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        let scale = self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= 1e-300 || best <= scale * 1e-15 {
                return Err(Error::Singular(format!("zero pivot in column {k} of {n}")));
            }
            piv[k] = p;
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (ik, ip) = (self.pos(k, c).unwrap(), self.pos(p, c).unwrap());
                    self.a.swap(ik, ip);
                }
            }
            let d = self.get(k, k);
            for r in k + 1..=last {
                let pr = self.pos(r, k).unwrap();
                let l = self.a[pr] / d;
                self.a[pr] = l;
                if l != 0.0 {
                    for c in k + 1..=cmax {
                        let kc = self.pos(k, c).unwrap();
                        let rc = self.pos(r, c).unwrap();
                        self.a[rc] -= l * self.a[kc];
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        let (kl, ku, w) = (m.kl, m.ku, m.width);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let last = (k + kl).min(n - 1);
                for r in k + 1..=last {
                    // row r, column k sits at offset k - r + kl
                    b[r] -= m.a[r * w + (k + kl - r)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let row = &m.a[k * w..(k + 1) * w];
            let cmax = (k + kl + ku).min(n - 1);
            let mut s = b[k];
            for c in k + 1..=cmax {
                s -= row[c + kl - k] * b[c];
            }
            b[k] = s / row[kl];
        }
    }
}

/// Pre-factored tridiagonal system (Thomas algorithm, no pivoting), for
/// diagonally dominant matrices.
#[derive(Debug, Clone)]
pub struct Tridiag {
    lower: Vec<f64>,
    inv_diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiag {
    /// `lower[i]` couples row i to i-1, `upper[i]` couples row i to i+1.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut inv_diag = vec![0.0; n];
        let mut up = upper.to_vec();
        let mut d = diag[0];
        for i in 0..n {
            if i > 0 {
                d = diag[i] - lower[i] * up[i - 1];
            }
            if d.abs() < 1e-300 {
                return Err(Error::Singular(format!("tridiagonal pivot {i} vanished")));
            }
            inv_diag[i] = 1.0 / d;
            if i + 1 < n {
                up[i] *= inv_diag[i];
            }
        }
        Ok(Self { lower: lower.to_vec(), inv_diag, upper: up })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        b[0] *= self.inv_diag[0];
        for i in 1..n {
            b[i] = (b[i] - self.lower[i] * b[i - 1]) * self.inv_diag[i];
        }
        for i in (0..n - 1).rev() {
            b[i] -= self.upper[i] * b[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for r in k + 1..n {
                let l = m[r][k] / m[k][k];
                for c in k..n {
                    m[r][c] -= l * m[k][c];
                }
                x[r] -= l * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|c| m[k][c] * x[c]).sum();
            x[k] = (x[k] - s) / m[k][k];
        }
        x
    }

    proptest! {
        #[test]
        fn band_lu_matches_dense(seed in proptest::collection::vec(-1.0f64..1.0, 200), kl in 0usize..4, ku in 0usize..4) {
            let n = 12;
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            let mut it = seed.iter().cycle();
            for r in 0..n {
                for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                    // zero diagonal entries force pivoting
                    let v = if r == c && r % 3 == 0 { 0.0 } else { *it.next().unwrap() + if r == c { 0.0 } else { 0.3 } };
                    band.add(r, c, v);
                    dense[r][c] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let ax = band.matvec(&b);
            if let Ok(lu) = band.factor() {
                let mut x = ax.clone();
                lu.solve(&mut x);
                let cond_ok = dense_solve(&dense, &ax).iter().all(|v| v.is_finite());
                if cond_ok {
                    let err = x.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                    let xd = dense_solve(&dense, &ax);
                    let errd = xd.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                    prop_assert!(err <= 1e-6_f64.max(100.0 * errd), "band {err} dense {errd}");
                }
            }
        }
    }

    #[test]
    fn tridiagonal_solves_poisson() {
        let n = 50;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.5; n];
        let t = Tridiag::new(&lower, &diag, &upper).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                2.5 * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i + 1 < n { x[i + 1] } else { 0.0 }
            })
            .collect();
        t.solve(&mut b);
        assert!(b.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn singular_band_is_reported() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        assert!(m.factor().is_err());
    }
}
