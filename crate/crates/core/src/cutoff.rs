//! Smooth compactly supported cutoff used to lift wall data into the
//! interior.

use crate::error::{Error, Result};

/// `phi(y) = amplitude * exp(1 - 1 / (1 - y^2))` on `[0, 1)`, zero beyond.
/// With `amplitude = 1` this is the bump used everywhere in the solver;
/// other amplitudes exist only to exercise the self-checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub amplitude: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { amplitude: 1.0 }
    }
}

/// Value and derivatives of the cutoff at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CutoffValue {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Cutoff {
    pub fn eval(&self, y: f64) -> CutoffValue {
        let y = y.abs();
        if y >= 1.0 {
            return CutoffValue::default();
        }
        let q = 1.0 - y * y;
        let v = self.amplitude * (1.0 - 1.0 / q).exp();
        if v == 0.0 {
            return CutoffValue::default();
        }
        let g1 = -2.0 * y / (q * q);
        let g2 = -2.0 / (q * q) - 8.0 * y * y / (q * q * q);
        let g3 = -24.0 * y / (q * q * q) - 48.0 * y * y * y / (q * q * q * q);
        CutoffValue {
            v,
            d1: g1 * v,
            d2: (g2 + g1 * g1) * v,
            d3: (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * v,
        }
    }

    /// `int_0^y phi`, by adaptive Simpson quadrature.
    pub fn integral(&self, y: f64) -> f64 {
        let b = y.clamp(0.0, 1.0);
        if b == 0.0 {
            return 0.0;
        }
        let f = |s: f64| self.eval(s).v;
        let (fa, fm, fb) = (f(0.0), f(0.5 * b), f(b));
        let whole = b / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, 0.0, b, fa, fm, fb, whole, 1e-15, 40)
    }

    /// Checks the properties the lifting relies on: `phi(0) = 1`,
    /// `phi'(0) = 0`, support inside `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let at0 = self.eval(0.0);
        if (at0.v - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter(format!("cutoff must equal 1 at the wall, got {}", at0.v)));
        }
        if at0.d1.abs() > 1e-14 {
            return Err(Error::InvalidParameter(format!("cutoff slope at the wall is {}", at0.d1)));
        }
        if self.eval(1.0).v != 0.0 {
            return Err(Error::InvalidParameter("cutoff does not vanish at y = 1".into()));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_values_and_support() {
        let c = Cutoff::default();
        let at0 = c.eval(0.0);
        assert_eq!(at0.v, 1.0);
        assert_eq!(at0.d1, 0.0);
        assert_eq!(c.eval(1.0), CutoffValue::default());
        assert_eq!(c.eval(3.0), CutoffValue::default());
        assert!(c.validate().is_ok());
        assert!(Cutoff { amplitude: 1.1 }.validate().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = Cutoff::default();
        let h = 1e-5;
        for &y in &[0.1, 0.35, 0.6, 0.8, 0.93] {
            let e = c.eval(y);
            let fd1 = (c.eval(y + h).v - c.eval(y - h).v) / (2.0 * h);
            let fd2 = (c.eval(y + h).d1 - c.eval(y - h).d1) / (2.0 * h);
            let fd3 = (c.eval(y + h).d2 - c.eval(y - h).d2) / (2.0 * h);
            assert!((e.d1 - fd1).abs() < 1e-6 * (1.0 + e.d1.abs()), "y={y}");
            assert!((e.d2 - fd2).abs() < 1e-5 * (1.0 + e.d2.abs()), "y={y}");
            assert!((e.d3 - fd3).abs() < 1e-4 * (1.0 + e.d3.abs()), "y={y}");
        }
    }

    #[test]
    fn integral_is_consistent() {
        let c = Cutoff::default();
        // reference by a fine midpoint rule
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mid: f64 = (0..n).map(|k| c.eval((k as f64 + 0.5) * h).v).sum::<f64>() * h;
        assert!((c.integral(1.0) - mid).abs() < 1e-10);
        assert_eq!(c.integral(2.0), c.integral(1.0));
        assert!((c.integral(0.01) - 0.01).abs() < 1e-6);
    }
}
