//! Run configuration: a flat `key = value` file (TOML syntax, no tables).
//!
//! Every key has a default, so an empty file is the default campaign. The
//! only environment override is the output directory (`MPBL_OUT_DIR`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, Stretch, TimeGrid};
use crate::outer::initial::{InitialKind, InitialSpec};
use crate::pipeline::RunSpec;
use crate::verify::ThicknessSpec;

/// Environment variable that may replace `out_dir`.
pub const OUT_DIR_ENV: &str = "MPBL_OUT_DIR";

/// Smallest admissible flatness order of the initial data.
pub const MIN_FLATNESS: u32 = 9;

/// Wall spacing must not exceed this multiple of `sqrt(eps_min)`.
pub const RESOLVABILITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StretchKind {
    Uniform,
    Asinh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub x_period: f64,
    pub n_x: usize,
    pub y_max: f64,
    pub n_y: usize,
    pub stretch: StretchKind,
    pub stretch_c: f64,
    pub stretch_beta: f64,
    pub z_max: f64,
    pub n_z: usize,

    pub t_final: f64,
    pub n_steps: usize,
    /// Backward-Euler half steps at the start of each layer heat solve.
    pub damping_steps: usize,

    pub zeta: f64,
    /// Strictly decreasing.
    pub eps: Vec<f64>,

    pub initial: InitialKind,
    pub flatness: u32,
    pub flat_scale: f64,
    pub psi_amp: f64,
    pub w_amp: f64,
    pub center: f64,
    pub width: f64,
    pub support_start: f64,
    pub support_end: f64,

    /// Largest admissible layer mass beyond `z_max`, as a fraction.
    pub tail_tol: f64,
    /// Divergence bound on every stored velocity.
    pub projection_tol: f64,
    /// Bound on the composite's wall values.
    pub wall_tol: f64,
    /// Smallest admissible R^2 of a rate fit.
    pub rate_r2: f64,

    /// Errors and residuals every `stride` steps.
    pub stride: usize,
    /// Field dumps every `dump_stride` steps; 0 keeps only the final level.
    pub dump_stride: usize,
    pub residuals: bool,
    /// Exponents of the cut `delta = eps^alpha` for the thickness sups.
    pub thickness_alpha: Vec<f64>,
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        let init = InitialSpec::default();
        Self {
            x_period: 2.0 * std::f64::consts::PI,
            n_x: 32,
            y_max: 8.0,
            n_y: 1536,
            stretch: StretchKind::Asinh,
            stretch_c: 0.02,
            stretch_beta: 1.0,
            z_max: 20.0,
            n_z: 800,
            t_final: 0.5,
            n_steps: 400,
            damping_steps: 4,
            zeta: 1.0,
            eps: vec![1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4],
            initial: init.kind,
            flatness: init.flatness,
            flat_scale: init.flat_scale,
            psi_amp: init.psi_amp,
            w_amp: init.w_amp,
            center: init.center,
            width: init.width,
            support_start: init.support_start,
            support_end: init.support_end,
            tail_tol: 1e-6,
            projection_tol: 1e-9,
            wall_tol: 1e-8,
            rate_r2: crate::verify::MIN_R2,
            stride: 40,
            dump_stride: 0,
            residuals: true,
            thickness_alpha: vec![0.4],
            out_dir: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl Config {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Reads `path` and applies the output-directory override from the
    /// environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    /// Applies the one supported override; `lookup` stands in for the
    /// process environment.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(dir) = lookup(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.out_dir = PathBuf::from(dir);
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        let stretch = match self.stretch {
            StretchKind::Uniform => Stretch::Uniform,
            StretchKind::Asinh => Stretch::Asinh { c: self.stretch_c, beta: self.stretch_beta },
        };
        GridSpec {
            x_period: self.x_period,
            n_x: self.n_x,
            y_max: self.y_max,
            n_y: self.n_y,
            stretch,
            z_max: self.z_max,
            n_z: self.n_z,
        }
    }

    pub fn initial_spec(&self) -> InitialSpec {
        InitialSpec {
            kind: self.initial,
            flatness: self.flatness,
            flat_scale: self.flat_scale,
            psi_amp: self.psi_amp,
            w_amp: self.w_amp,
            center: self.center,
            width: self.width,
            support_start: self.support_start,
            support_end: self.support_end,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_final, self.n_steps)
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        Ok(RunSpec {
            grid: self.grid_spec(),
            time: self.time_grid()?,
            zeta: self.zeta,
            eps: self.eps.clone(),
            initial: self.initial_spec(),
            cutoff: Cutoff::default(),
            stride: self.stride,
            damping_steps: self.damping_steps,
            tail_tol: self.tail_tol,
            residuals: self.residuals,
            thickness: self.thickness_alpha.iter().map(|&a| ThicknessSpec::new(a)).collect::<Result<_>>()?,
        })
    }

    /// Checks every invariant and names the offending key.
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("x_period", self.x_period), ("y_max", self.y_max), ("z_max", self.z_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(k, format!("must be positive, got {v}")));
            }
        }
        if self.y_max < 8.0 {
            return Err(bad("y_max", format!("must be at least 8, got {}", self.y_max)));
        }
        if self.n_x < 4 || !self.n_x.is_multiple_of(2) {
            return Err(bad("n_x", format!("must be even and at least 4, got {}", self.n_x)));
        }
        if self.n_y < 8 {
            return Err(bad("n_y", format!("must be at least 8, got {}", self.n_y)));
        }
        if self.n_z < 8 {
            return Err(bad("n_z", format!("must be at least 8, got {}", self.n_z)));
        }
        if self.stretch == StretchKind::Asinh && !(self.stretch_c > 0.0 && self.stretch_beta >= 0.0) {
            return Err(bad("stretch_c", "asinh stretch needs stretch_c > 0 and stretch_beta >= 0"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(bad("t_final", format!("must be positive, got {}", self.t_final)));
        }
        if self.n_steps < 2 {
            return Err(bad("n_steps", format!("must be at least 2, got {}", self.n_steps)));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(bad("zeta", format!("must be positive, got {}", self.zeta)));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(bad("eps", format!("values must lie in (0, 1], got {e}")));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("eps", "ladder must be strictly decreasing"));
        }
        if self.flatness < MIN_FLATNESS {
            return Err(bad("flatness", format!("must be at least {MIN_FLATNESS}, got {}", self.flatness)));
        }
        for (k, v) in [
            ("tail_tol", self.tail_tol),
            ("projection_tol", self.projection_tol),
            ("wall_tol", self.wall_tol),
            ("rate_r2", self.rate_r2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(k, format!("must be positive, got {v}")));
            }
        }
        if self.rate_r2 > 1.0 {
            return Err(bad("rate_r2", format!("must not exceed 1, got {}", self.rate_r2)));
        }
        if self.stride == 0 || self.stride > self.n_steps {
            return Err(bad("stride", format!("must lie in 1..={}, got {}", self.n_steps, self.stride)));
        }
        for &a in &self.thickness_alpha {
            ThicknessSpec::new(a).map_err(|e| bad("thickness_alpha", e))?;
        }
        self.initial_spec().validate(self.y_max).map_err(|e| bad("initial", e))?;
        if let Some(&eps_min) = self.eps.last() {
            let axis = Axis::new(self.y_max, self.n_y, self.grid_spec().stretch).map_err(|e| bad("n_y", e))?;
            let h = axis.wall_spacing();
            let limit = RESOLVABILITY * eps_min.sqrt();
            if h > limit {
                return Err(bad(
                    "n_y",
                    format!("wall spacing {h:.3e} does not resolve eps = {eps_min:e} (needs <= {limit:.3e})"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn default_round_trips() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = Config::parse("n_yy = 3").unwrap_err().to_string();
        assert!(e.contains("n_yy"), "{e}");
    }

    #[test]
    fn increasing_ladder_is_rejected() {
        let e = Config::parse("eps = [1e-3, 1e-2]").unwrap_err().to_string();
        assert!(e.starts_with("configuration error: eps:"), "{e}");
    }

    #[test]
    fn unresolved_ladder_is_rejected() {
        let e = Config::parse("n_y = 64\neps = [1e-2, 1e-4]").unwrap_err().to_string();
        assert!(e.contains("n_y") && e.contains("wall spacing"), "{e}");
    }

    #[test]
    fn low_flatness_and_bad_tolerances_are_rejected() {
        assert!(Config::parse("flatness = 8").unwrap_err().to_string().contains("flatness"));
        assert!(Config::parse("tail_tol = 0.0").unwrap_err().to_string().contains("tail_tol"));
        assert!(Config::parse("wall_tol = -1e-8").unwrap_err().to_string().contains("wall_tol"));
    }

    #[test]
    fn only_the_output_directory_comes_from_the_environment() {
        let mut c = Config::default();
        c.apply_env(|k| match k {
            OUT_DIR_ENV => Some("elsewhere".into()),
            _ => Some("1".into()),
        });
        let mut expect = Config::default();
        expect.out_dir = PathBuf::from("elsewhere");
        assert_eq!(c, expect);
    }

    #[test]
    fn run_spec_carries_the_config() {
        let c = Config::default();
        let s = c.run_spec().unwrap();
        assert_eq!(s.grid.n_y, c.n_y);
        assert_eq!(s.eps, c.eps);
        assert_eq!(s.time.n_steps, c.n_steps);
        assert_eq!(s.thickness.len(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_configs_round_trip(
            n_x in (2usize..64).prop_map(|k| 2 * k),
            n_steps in 10usize..1000,
            zeta in 0.01f64..10.0,
            first in 1e-3f64..1.0,
            ratios in proptest::collection::vec(0.1f64..0.9, 0..5),
            alpha in 0.01f64..0.49,
            residuals in any::<bool>(),
        ) {
            let mut eps = vec![first];
            for r in ratios {
                let last = *eps.last().unwrap();
                eps.push(last * r);
            }
            let c = Config {
                n_x,
                n_steps,
                stride: 1 + n_steps / 7,
                zeta,
                eps,
                thickness_alpha: vec![alpha],
                residuals,
                // resolvability is not under test here
                n_y: 8,
                stretch: StretchKind::Uniform,
                ..Config::default()
            };
            let text = c.to_text();
            let back: Config = toml::from_str(&text).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
