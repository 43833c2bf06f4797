//! Error fields, norms, rate fits and the boundary-layer thickness test.

use serde::{Deserialize, Serialize};

use crate::assemble::Composite;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::ops::Ops;
use crate::outer::OuterLevel;

/// Errors of the full solution against the composite and against the
/// leading-order outer profile.
#[derive(Debug, Clone)]
pub struct ErrorFields {
    /// `u - u^a`.
    pub u_err: VectorField,
    /// `w - w^a`.
    pub w_err: ScalarField,
    /// `u - u^{I,0}`.
    pub u_outer: VectorField,
    /// `w - w^{I,0}`.
    pub w_outer: ScalarField,
    /// `w - w^{I,0} - w^{b,0}`.
    pub w_corrected: ScalarField,
}

impl ErrorFields {
    /// `wb0` is the leading microrotation layer already sampled on the
    /// outer grid.
    pub fn new(
        u: &VectorField,
        w: &ScalarField,
        approx: &Composite,
        i0: &OuterLevel,
        wb0: &ScalarField,
    ) -> Result<Self> {
        for f in [&u.c[0], &u.c[1], &approx.w, &i0.w, wb0, &approx.u.c[0], &i0.u.c[0]] {
            w.same_shape(f)?;
        }
        let diff = |a: &ScalarField, b: &ScalarField| ScalarField::combine(&[(1.0, a), (-1.0, b)]);
        let vdiff = |a: &VectorField, b: &VectorField| VectorField::new(diff(&a.c[0], &b.c[0]), diff(&a.c[1], &b.c[1]));
        let w_outer = diff(w, &i0.w);
        let w_corrected = diff(&w_outer, wb0);
        Ok(Self {
            u_err: vdiff(u, &approx.u),
            w_err: diff(w, &approx.w),
            u_outer: vdiff(u, &i0.u),
            w_outer,
            w_corrected,
        })
    }

    pub fn norms(&self, ops: &Ops) -> ErrorNorms {
        let u_l2 = ops.l2_vec(&self.u_err);
        let w_l2 = ops.l2(&self.w_err);
        ErrorNorms {
            u_outer_linf: self.u_outer.max_abs(),
            w_outer_linf: self.w_outer.max_abs(),
            w_corrected_linf: self.w_corrected.max_abs(),
            u_l2,
            w_l2,
            energy_l2: u_l2.hypot(w_l2),
            u_linf: self.u_err.max_abs(),
            w_linf: self.w_err.max_abs(),
        }
    }
}

/// Spatial norms of [`ErrorFields`] at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub u_outer_linf: f64,
    pub w_outer_linf: f64,
    pub w_corrected_linf: f64,
    pub u_l2: f64,
    pub w_l2: f64,
    /// `||(U, W)||_{L2}`.
    pub energy_l2: f64,
    pub u_linf: f64,
    pub w_linf: f64,
}

impl ErrorNorms {
    /// Componentwise maximum, for sup-in-time norms.
    pub fn max(&self, o: &Self) -> Self {
        Self {
            u_outer_linf: self.u_outer_linf.max(o.u_outer_linf),
            w_outer_linf: self.w_outer_linf.max(o.w_outer_linf),
            w_corrected_linf: self.w_corrected_linf.max(o.w_corrected_linf),
            u_l2: self.u_l2.max(o.u_l2),
            w_l2: self.w_l2.max(o.w_l2),
            energy_l2: self.energy_l2.max(o.energy_l2),
            u_linf: self.u_linf.max(o.u_linf),
            w_linf: self.w_linf.max(o.w_linf),
        }
    }
}

/// Thickness family `delta(eps) = eps^alpha`, `0 < alpha < 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessSpec {
    pub alpha: f64,
}

impl ThicknessSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!("thickness exponent must lie in (0, 1/2), got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn delta(&self, eps: f64) -> f64 {
        eps.powf(self.alpha)
    }
}

/// `max |(u - u^{I,0}, w - w^{I,0})|` over nodes with `y >= delta`.
/// `delta = 0` gives the full L-infinity norm.
pub fn sup_above(ops: &Ops, err: &ErrorFields, delta: f64) -> Result<f64> {
    let y = &ops.grid.y;
    if !(delta >= 0.0) || delta >= y.length {
        return Err(Error::InvalidParameter(format!("cut height {delta} must lie in [0, y_max = {})", y.length)));
    }
    let (a, b, c) = (&err.u_outer.c[0], &err.u_outer.c[1], &err.w_outer);
    let mut worst: f64 = 0.0;
    for (j, yj) in y.nodes.iter().enumerate() {
        if *yj < delta {
            continue;
        }
        for i in 0..a.nx {
            let v = (a.at(i, j).powi(2) + b.at(i, j).powi(2) + c.at(i, j).powi(2)).sqrt();
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Sup of the outer errors above `delta(eps)` at one time; the caller takes
/// the maximum over time.
pub fn thickness_sup(ops: &Ops, err: &ErrorFields, spec: &ThicknessSpec, eps: f64) -> Result<f64> {
    sup_above(ops, err, spec.delta(eps))
}

/// Least-squares fit of `log value = slope * log eps + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub const MIN_FIT_SAMPLES: usize = 4;

pub fn fit_rate(samples: &[(f64, f64)]) -> Result<Fit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "rate fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some((e, v)) = samples.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0) || !e.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate fit needs positive samples, got ({e}, {v})")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("rate fit needs distinct eps values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    // a constant sequence is fitted exactly
    let r2 = if syy <= 1e-300 { 1.0 } else { 1.0 - sse / syy };
    Ok(Fit { slope, intercept, r2 })
}

/// Required coefficient of determination for an accepted rate.
pub const MIN_R2: f64 = 0.98;

/// One fitted norm with its acceptance floor `target - margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub name: String,
    pub target: f64,
    pub margin: f64,
    pub samples: Vec<(f64, f64)>,
    pub min_r2: f64,
    pub fit: Option<Fit>,
    /// Why no fit is available.
    pub note: Option<String>,
}

impl RateRow {
    pub fn new(name: &str, target: f64, margin: f64, samples: Vec<(f64, f64)>) -> Self {
        let (fit, note) = match fit_rate(&samples) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self { name: name.into(), target, margin, samples, min_r2: MIN_R2, fit, note }
    }

    pub fn pass(&self) -> bool {
        self.fit.is_some_and(|f| f.slope >= self.target - self.margin && f.r2 >= self.min_r2)
    }
}

/// sup-in-time values of the outer errors above `eps^alpha`, per eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessRow {
    pub alpha: f64,
    pub values: Vec<(f64, f64)>,
}

impl ThicknessRow {
    /// Strictly decreasing along the ladder (largest eps first).
    pub fn monotone(&self) -> bool {
        self.values.windows(2).all(|p| p[1].1 < p[0].1)
    }

    /// Last value over first value.
    pub fn ratio(&self) -> Option<f64> {
        let (first, last) = (self.values.first()?.1, self.values.last()?.1);
        (first > 0.0).then(|| last / first)
    }

    pub fn decays(&self, max_ratio: f64) -> bool {
        self.monotone() && self.ratio().is_some_and(|r| r <= max_ratio)
    }
}

/// Largest allowed last/first ratio of the thickness sequence.
pub const THICKNESS_RATIO: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    pub eps: f64,
    /// `||w - w^{I,0}||` at the smallest eps.
    pub w_outer: f64,
    pub wb0: f64,
    pub holds: bool,
}

/// Rates, thickness table and the layer dichotomy for one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rates: Vec<RateRow>,
    pub thickness: Vec<ThicknessRow>,
    pub dichotomy: Option<Dichotomy>,
    /// Set when no boundary layer forms: every error and layer vanishes.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

pub const DEGENERATE_NOTE: &str = "degenerate: no boundary layer";

/// sup-in-time quantities of one eps that enter the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub errors: ErrorNorms,
    pub wb0: f64,
    pub f_l2: Option<f64>,
    pub g_l2: Option<f64>,
    /// `(alpha, value)` pairs.
    pub thickness: Vec<(f64, f64)>,
}

impl RateReport {
    /// `runs` ordered along the ladder, largest eps first.
    pub fn build(runs: &[EpsSummary]) -> Self {
        Self::build_with(runs, MIN_R2)
    }

    /// As [`RateReport::build`] with a different R^2 floor.
    pub fn build_with(runs: &[EpsSummary], min_r2: f64) -> Self {
        let zero_level = 1e-300;
        let degenerate = runs.iter().all(|r| {
            let e = &r.errors;
            r.wb0 <= zero_level && e.u_outer_linf <= zero_level && e.w_outer_linf <= zero_level
        });
        let mut notes = Vec::new();
        if degenerate {
            notes.push(DEGENERATE_NOTE.to_string());
            return Self { rates: Vec::new(), thickness: Vec::new(), dichotomy: None, degenerate, notes };
        }
        let col = |f: &dyn Fn(&EpsSummary) -> Option<f64>| -> Vec<(f64, f64)> {
            runs.iter().filter_map(|r| f(r).map(|v| (r.eps, v))).collect()
        };
        let mut rates = vec![
            RateRow::new("u_minus_u0_linf", 0.5, 0.1, col(&|r| Some(r.errors.u_outer_linf))),
            RateRow::new("w_minus_w0_minus_wb0_linf", 0.5, 0.1, col(&|r| Some(r.errors.w_corrected_linf))),
        ];
        if runs.iter().all(|r| r.f_l2.is_some()) {
            rates.push(RateRow::new("residual_f_l2", 1.25, 0.15, col(&|r| r.f_l2)));
            rates.push(RateRow::new("residual_g_l2", 1.25, 0.15, col(&|r| r.g_l2)));
        } else {
            notes.push("residuals not computed".into());
        }
        rates.push(RateRow::new("error_energy_l2", 1.25, 0.15, col(&|r| Some(r.errors.energy_l2))));
        rates.push(RateRow::new("error_u_linf", 0.875, 0.15, col(&|r| Some(r.errors.u_linf))));
        rates.push(RateRow::new("error_w_linf", 0.625, 0.15, col(&|r| Some(r.errors.w_linf))));
        for r in &mut rates {
            r.min_r2 = min_r2;
        }
        for r in &rates {
            if let Some(n) = &r.note {
                notes.push(format!("{}: {n}", r.name));
            }
        }

        let mut alphas: Vec<f64> = runs.iter().flat_map(|r| r.thickness.iter().map(|t| t.0)).collect();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let thickness = alphas
            .into_iter()
            .map(|alpha| ThicknessRow {
                alpha,
                values: runs
                    .iter()
                    .filter_map(|r| r.thickness.iter().find(|t| t.0 == alpha).map(|t| (r.eps, t.1)))
                    .collect(),
            })
            .collect();

        let dichotomy = runs.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).map(|r| Dichotomy {
            eps: r.eps,
            w_outer: r.errors.w_outer_linf,
            wb0: r.wb0,
            holds: r.errors.w_outer_linf > 0.5 * r.wb0,
        });
        Self { rates, thickness, dichotomy, degenerate, notes }
    }

    pub fn rate(&self, name: &str) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.name == name)
    }

    /// Every rate fitted and above its floor, every thickness row decaying,
    /// and the dichotomy holding. A degenerate run passes.
    pub fn pass(&self) -> bool {
        if self.degenerate {
            return true;
        }
        !self.rates.is_empty()
            && self.rates.iter().all(RateRow::pass)
            && self.thickness.iter().all(|t| t.decays(THICKNESS_RATIO))
            && self.dichotomy.as_ref().is_some_and(|d| d.holds)
    }

    /// True when some rate could not be fitted for lack of samples.
    pub fn insufficient_samples(&self) -> bool {
        self.rates.iter().any(|r| r.fit.is_none() && r.samples.len() < MIN_FIT_SAMPLES)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rates {
            match r.fit {
                Some(f) => s += &format!(
                    "{:<28} slope {:>7.4}  floor {:>6.3}  R2 {:.4}  {}\n",
                    r.name,
                    f.slope,
                    r.target - r.margin,
                    f.r2,
                    if r.pass() { "ok" } else { "FAIL" }
                ),
                None => s += &format!("{:<28} no fit\n", r.name),
            }
        }
        for t in &self.thickness {
            let ratio = t.ratio().map_or("-".into(), |r| format!("{r:.4}"));
            s += &format!(
                "thickness alpha {:.2}: monotone {} last/first {} {}\n",
                t.alpha,
                t.monotone(),
                ratio,
                if t.decays(THICKNESS_RATIO) { "ok" } else { "FAIL" }
            );
        }
        if let Some(d) = &self.dichotomy {
            s += &format!(
                "dichotomy at eps {:e}: |w - w0| = {:.4e}, |wb0| = {:.4e} {}\n",
                d.eps,
                d.w_outer,
                d.wb0,
                if d.holds { "ok" } else { "FAIL" }
            );
        }
        for n in &self.notes {
            s += n;
            s.push('\n');
        }
        s
    }
}
