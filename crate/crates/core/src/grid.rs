//! Discretization geometry: periodic x, stretched wall-normal y, uniform
//! layer coordinate z, and the time axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wall-normal node distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stretch {
    Uniform,
    /// Blend of an asinh map and a linear map: nodes are equispaced in
    /// `s(y) = beta * asinh(y / c) + y`. `c` sets where clustering starts and
    /// `beta` how strong it is.
    Asinh { c: f64, beta: f64 },
}

impl Stretch {
    fn check(&self) -> Result<()> {
        match *self {
            Stretch::Uniform => Ok(()),
            Stretch::Asinh { c, beta } => {
                if !(c > 0.0 && c.is_finite() && beta >= 0.0 && beta.is_finite()) {
                    return Err(Error::InvalidGrid(format!(
                        "asinh stretch needs c > 0 and beta >= 0, got c = {c}, beta = {beta}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Unnormalized map value and its first two derivatives.
    fn raw(&self, y: f64) -> (f64, f64, f64) {
        match *self {
            Stretch::Uniform => (y, 1.0, 0.0),
            Stretch::Asinh { c, beta } => {
                let r2 = c * c + y * y;
                let r = r2.sqrt();
                (beta * (y / c).asinh() + y, beta / r + 1.0, -beta * y / (r2 * r))
            }
        }
    }
}

/// Finite-difference stencil: up to eight `(node, weight)` pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stencil {
    pub len: usize,
    pub idx: [usize; 8],
    pub w: [f64; 8],
}

impl Stencil {
    fn push(&mut self, i: usize, w: f64) {
        self.idx[self.len] = i;
        self.w[self.len] = w;
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.idx[k], self.w[k]))
    }

    pub fn apply(&self, f: &[f64]) -> f64 {
        self.iter().map(|(i, w)| w * f[i]).sum()
    }
}

/// A one-dimensional non-periodic axis on `[0, length]` whose nodes are
/// equispaced in a computational variable `sigma in [0, 1]`. Derivatives are
/// second-order central in sigma with ghost-point closures at the ends,
/// mapped to physical space by the chain rule.
#[derive(Debug, Clone)]
pub struct Axis {
    pub length: f64,
    pub stretch: Stretch,
    /// Node positions.
    pub nodes: Vec<f64>,
    /// d sigma / d y at the nodes.
    pub sig1: Vec<f64>,
    /// d^2 sigma / d y^2 at the nodes.
    pub sig2: Vec<f64>,
    /// Spacing in sigma.
    pub h: f64,
    /// Trapezoid quadrature weights on the physical nodes.
    pub weights: Vec<f64>,
    /// One-sided fourth-order weights for d^k/dy^k at the first node, k = 0..=3.
    trace_w: Vec<Vec<f64>>,
}

impl Axis {
    pub fn new(length: f64, n: usize, stretch: Stretch) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 nodes, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("axis length must be positive, got {length}")));
        }
        stretch.check()?;
        let (total, _, _) = stretch.raw(length);
        let h = 1.0 / (n - 1) as f64;
        let mut nodes = vec![0.0; n];
        for (j, y) in nodes.iter_mut().enumerate() {
            *y = invert(&stretch, total, length, j as f64 * h);
        }
        nodes[n - 1] = length;
        let mut sig1 = vec![0.0; n];
        let mut sig2 = vec![0.0; n];
        for j in 0..n {
            let (_, d1, d2) = stretch.raw(nodes[j]);
            sig1[j] = d1 / total;
            sig2[j] = d2 / total;
        }
        for j in 1..n {
            if nodes[j] <= nodes[j - 1] {
                return Err(Error::InvalidGrid("node map is not monotone".into()));
            }
        }
        let mut weights = vec![0.0; n];
        for j in 0..n - 1 {
            let d = 0.5 * (nodes[j + 1] - nodes[j]);
            weights[j] += d;
            weights[j + 1] += d;
        }
        let trace_w = (0..=3)
            .map(|k| {
                let c = fornberg(0.0, &nodes[..k + 4], k);
                c[k].clone()
            })
            .collect();
        Ok(Self { length, stretch, nodes, sig1, sig2, h, weights, trace_w })
    }

    pub fn uniform(length: f64, n: usize) -> Result<Self> {
        Self::new(length, n, Stretch::Uniform)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Spacing between the first two nodes.
    pub fn wall_spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Stencil of d/dsigma at node j (not yet mapped).
    fn dsig(&self, j: usize) -> Stencil {
        let n = self.len();
        let c = 0.5 / self.h;
        let mut s = Stencil::default();
        if j == 0 {
            for (k, w) in D1_CLOSURE.iter().enumerate() {
                s.push(k, c * w);
            }
        } else if j == n - 1 {
            for (k, w) in D1_CLOSURE.iter().enumerate().rev() {
                s.push(n - 1 - k, -c * w);
            }
        } else {
            s.push(j - 1, -c);
            s.push(j + 1, c);
        }
        s
    }

    /// Stencil of d^2/dsigma^2 at node j (not yet mapped).
    fn dsig2(&self, j: usize) -> Stencil {
        let n = self.len();
        let c = 1.0 / (self.h * self.h);
        let mut s = Stencil::default();
        if j == 0 {
            for (k, w) in D2_CLOSURE.iter().enumerate() {
                s.push(k, c * w);
            }
        } else if j == n - 1 {
            for (k, w) in D2_CLOSURE.iter().enumerate().rev() {
                s.push(n - 1 - k, c * w);
            }
        } else {
            s.push(j - 1, c);
            s.push(j, -2.0 * c);
            s.push(j + 1, c);
        }
        s
    }

    /// Physical first-derivative stencil at node j.
    pub fn d1_stencil(&self, j: usize) -> Stencil {
        let mut s = self.dsig(j);
        for k in 0..s.len {
            s.w[k] *= self.sig1[j];
        }
        s
    }

    /// Physical second-derivative stencil at node j.
    pub fn d2_stencil(&self, j: usize) -> Stencil {
        let a = self.dsig2(j);
        let b = self.dsig(j);
        let s1 = self.sig1[j];
        let s2 = self.sig2[j];
        let mut out = Stencil::default();
        let mut add = |i: usize, w: f64| {
            for k in 0..out.len {
                if out.idx[k] == i {
                    out.w[k] += w;
                    return;
                }
            }
            out.push(i, w);
        };
        for (i, w) in a.iter() {
            add(i, w * s1 * s1);
        }
        for (i, w) in b.iter() {
            add(i, w * s2);
        }
        out
    }

    /// First derivative of a column.
    pub fn d1(&self, f: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert!(f.len() == n && out.len() == n);
        let c = 0.5 / self.h;
        let (lo, hi) = closure_sums(&D1_CLOSURE, f);
        out[0] = self.sig1[0] * c * lo;
        for j in 1..n - 1 {
            out[j] = self.sig1[j] * c * (f[j + 1] - f[j - 1]);
        }
        out[n - 1] = -self.sig1[n - 1] * c * hi;
    }

    /// Second derivative of a column.
    pub fn d2(&self, f: &[f64], out: &mut [f64]) {
        let n = self.len();
        debug_assert!(f.len() == n && out.len() == n);
        let c1 = 0.5 / self.h;
        let c2 = 1.0 / (self.h * self.h);
        let mut put = |j: usize, fs: f64, fss: f64| {
            out[j] = self.sig1[j] * self.sig1[j] * fss + self.sig2[j] * fs;
        };
        let (d1_lo, d1_hi) = closure_sums(&D1_CLOSURE, f);
        let (d2_lo, d2_hi) = closure_sums(&D2_CLOSURE, f);
        put(0, c1 * d1_lo, c2 * d2_lo);
        for j in 1..n - 1 {
            put(j, c1 * (f[j + 1] - f[j - 1]), c2 * (f[j + 1] - 2.0 * f[j] + f[j - 1]));
        }
        put(n - 1, -c1 * d1_hi, c2 * d2_hi);
    }

    /// First derivative biased against the flow: backward where `vel >= 0`,
    /// forward where `vel < 0`, second-order in both cases.
    pub fn d1_upwind(&self, f: &[f64], vel: &[f64], out: &mut [f64]) {
        let n = self.len();
        let c = 0.5 / self.h;
        self.d1(f, out);
        // At j = 1 the backward stencil borrows the ghost value of the D1
        // closure, so its error keeps the interior form.
        let ghost: f64 = GHOST_D1.iter().zip(f).map(|(a, b)| a * b).sum();
        for j in 1..n - 1 {
            if vel[j] >= 0.0 {
                let back2 = if j >= 2 { f[j - 2] } else { ghost };
                out[j] = self.sig1[j] * c * (3.0 * f[j] - 4.0 * f[j - 1] + back2);
            } else if j + 2 < n {
                out[j] = self.sig1[j] * c * (-3.0 * f[j] + 4.0 * f[j + 1] - f[j + 2]);
            }
        }
    }

    /// k-th derivative at the first node (k <= 3), fourth-order one-sided.
    pub fn trace(&self, f: &[f64], k: usize) -> f64 {
        self.trace_w[k].iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Trapezoid integral of a column.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// End closures: the central formula applied with a ghost value outside the
/// axis, extrapolated by a polynomial through the first nodes (degree 6 for
/// the first derivative, 7 for the second). The leading error then matches
/// the interior stencil's and the local remainder is sixth order, which keeps
/// repeated derivatives of undiffused fields smooth up to the ends.
const D1_CLOSURE: [f64; 7] = [-7.0, 22.0, -35.0, 35.0, -21.0, 7.0, -1.0];
const D2_CLOSURE: [f64; 8] = [6.0, -27.0, 56.0, -70.0, 56.0, -28.0, 8.0, -1.0];
/// Ghost value below the first node used by `D1_CLOSURE`.
const GHOST_D1: [f64; 7] = [7.0, -21.0, 35.0, -35.0, 21.0, -7.0, 1.0];

/// Closure applied at the first node and, mirrored, at the last.
fn closure_sums(w: &[f64], f: &[f64]) -> (f64, f64) {
    let n = f.len();
    let lo = w.iter().zip(f).map(|(a, b)| a * b).sum();
    let hi = w.iter().enumerate().map(|(k, a)| a * f[n - 1 - k]).sum();
    (lo, hi)
}

/// Solves `s(y) / total = target` for `y in [0, length]`.
fn invert(stretch: &Stretch, total: f64, length: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, length);
    let mut y = target * length;
    for _ in 0..200 {
        let (s, d, _) = stretch.raw(y);
        let r = s / total - target;
        if r.abs() < 1e-15 {
            break;
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let step = y - r * total / d;
        y = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * length {
            break;
        }
    }
    y
}

/// Finite-difference weights for derivatives of order `0..=m` at `x0` using
/// nodes `xs` (Fornberg's recursion). Returns `c[k][j]`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// User-facing grid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_period: f64,
    pub n_x: usize,
    pub y_max: f64,
    pub n_y: usize,
    pub stretch: Stretch,
    pub z_max: f64,
    pub n_z: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_period: 2.0 * std::f64::consts::PI,
            n_x: 32,
            y_max: 8.0,
            n_y: 640,
            stretch: Stretch::Asinh { c: 0.01, beta: 1.0 },
            z_max: 20.0,
            n_z: 1000,
        }
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let st = match self.stretch {
            Stretch::Uniform => "uniform".to_string(),
            Stretch::Asinh { c, beta } => format!("asinh(c={c},beta={beta})"),
        };
        write!(
            f,
            "x_period={} n_x={} y_max={} n_y={} stretch={} z_max={} n_z={}",
            self.x_period, self.n_x, self.y_max, self.n_y, st, self.z_max, self.n_z
        )
    }
}

/// Periodic x axis.
#[derive(Debug, Clone)]
pub struct XAxis {
    pub n: usize,
    pub period: f64,
    pub dx: f64,
}

impl XAxis {
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Angular wavenumber of FFT bin `m`, with the Nyquist bin mapped to zero.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let n = self.n;
        let base = 2.0 * std::f64::consts::PI / self.period;
        if 2 * m == n {
            0.0
        } else if 2 * m < n {
            base * m as f64
        } else {
            -base * (n - m) as f64
        }
    }
}

/// Full spatial discretization: outer (x, y) and layer (x, z).
#[derive(Debug, Clone)]
pub struct Grid {
    pub spec: GridSpec,
    pub x: XAxis,
    pub y: Axis,
    pub z: Axis,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.n_x < 4 || !spec.n_x.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n_x must be even and >= 4, got {}", spec.n_x)));
        }
        if !(spec.x_period > 0.0 && spec.x_period.is_finite()) {
            return Err(Error::InvalidGrid(format!("x_period must be positive, got {}", spec.x_period)));
        }
        let y = Axis::new(spec.y_max, spec.n_y, spec.stretch)?;
        let z = Axis::uniform(spec.z_max, spec.n_z + 1)?;
        let x = XAxis { n: spec.n_x, period: spec.x_period, dx: spec.x_period / spec.n_x as f64 };
        Ok(Self { spec, x, y, z })
    }
}

/// Uniform time axis on `[0, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || n_steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs t_final > 0 and n_steps >= 2, got {t_final}, {n_steps}"
            )));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }
}
