//! Streaming construction of every profile, the composite for each eps, the
//! full solutions and their errors and residuals.
//!
//! Layer profiles of order 0 and 1 and all outer profiles advance together
//! one step at a time. The order-2 layer and the velocity layers of order 3
//! and 4 need `d_t u^{b,1}_1` at the same time, so they lag one step behind.
//! Only three time levels are ever kept.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::assemble::{self, Assembler, Composite, ProfileLevel, WallMoments};
use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::full::EpsSolver;
use crate::grid::{Grid, GridSpec, TimeGrid};
use crate::layer::{
    self, identity_residual, identity_tolerance, layer_divergence, lift_ub1, lift_ub2, lift_ub3, lift_ub4,
    minus_gb1, minus_gb2, tail_fraction, tail_integral, Gb2Inputs, HeatStepper,
};
use crate::ops::Ops;
use crate::outer::initial::InitialSpec;
use crate::outer::{i0_params, linearized_params, Forcing, OuterLevel, OuterStepper, WallTraces};
use crate::verify::{thickness_sup, ErrorFields, ErrorNorms, EpsSummary, ThicknessSpec};

/// Everything a run needs.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub grid: GridSpec,
    pub time: TimeGrid,
    pub zeta: f64,
    /// Decreasing ladder; may be empty for a profiles-only run.
    pub eps: Vec<f64>,
    pub initial: InitialSpec,
    pub cutoff: Cutoff,
    /// Errors and residuals are sampled every `stride` steps.
    pub stride: usize,
    pub damping_steps: usize,
    pub tail_tol: f64,
    pub residuals: bool,
    pub thickness: Vec<ThicknessSpec>,
}

/// Outer profiles and the order-0/1 layers at one step.
#[derive(Clone)]
struct EarlyLevel {
    outer: [OuterLevel; 3],
    traces: [WallTraces; 3],
    wb0: ScalarField,
    wb1: ScalarField,
    ub1: ScalarField,
    ub2: VectorField,
}

fn wall_row(f: &ScalarField, c: f64) -> Vec<f64> {
    f.row(0).into_iter().map(|v| c * v).collect()
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Produces [`ProfileLevel`]s in time order, one step at a time.
pub struct ProfileStream {
    zeta: f64,
    dt: f64,
    n_steps: usize,
    step: usize,
    i0: OuterStepper,
    i1: OuterStepper,
    i2: OuterStepper,
    heat0: HeatStepper,
    heat1: HeatStepper,
    heat2: HeatStepper,
    early: VecDeque<EarlyLevel>,
    emitted: usize,
    zero_row: Vec<f64>,
}

impl ProfileStream {
    pub fn new(
        ops: &Ops,
        u0: VectorField,
        w0: ScalarField,
        zeta: f64,
        time: TimeGrid,
        damping_steps: usize,
    ) -> Result<Self> {
        if time.n_steps < 2 {
            return Err(Error::InvalidParameter("the profile stream needs at least two steps".into()));
        }
        let dt = time.dt();
        let g = &ops.grid;
        let zero = || (VectorField::outer(g), ScalarField::outer(g));
        let i0 = OuterStepper::new(ops, i0_params(zeta, dt), u0, w0, 0.0)?;
        let (a, b) = zero();
        let i1 = OuterStepper::new(ops, linearized_params(zeta, dt), a, b, 0.0)?;
        let (a, b) = zero();
        let i2 = OuterStepper::new(ops, linearized_params(zeta, dt), a, b, 0.0)?;
        let mut s = Self {
            zeta,
            dt,
            n_steps: time.n_steps,
            step: 0,
            i0,
            i1,
            i2,
            heat0: HeatStepper::new(ops, dt, damping_steps)?,
            heat1: HeatStepper::new(ops, dt, damping_steps)?,
            heat2: HeatStepper::new(ops, dt, damping_steps)?,
            early: VecDeque::new(),
            emitted: 0,
            zero_row: vec![0.0; g.x.n],
        };
        let first = s.initial_level(ops).map_err(|e| e.in_stage("initial profiles"))?;
        s.early.push_back(first);
        Ok(s)
    }

    /// Profiles at `t = 0`: the heat steppers are primed with their boundary
    /// values and sources.
    fn initial_level(&mut self, ops: &Ops) -> Result<EarlyLevel> {
        let o0 = self.i0.level().clone();
        let o1 = self.i1.level().clone();
        let o2 = self.i2.level().clone();
        let tr = [o0.traces(ops), o1.traces(ops), o2.traces(ops)];
        self.heat0.prime(neg(&tr[0].w[0]), None);
        let wb0 = self.heat0.state().clone();
        let ub1 = lift_ub1(ops, &wb0)?;
        let ub2_2 = double_tail_dx(ops, &wb0)?;
        let g1 = minus_gb1(ops, &tr[0], &tr[1], &wb0, &ub1, &ub2_2).scaled(-1.0);
        self.heat1.prime(neg(&tr[1].w[0]), Some(g1));
        let wb1 = self.heat1.state().clone();
        let ub2 = lift_ub2(ops, &wb0, &wb1)?;
        Ok(EarlyLevel { outer: [o0, o1, o2], traces: tr, wb0, wb1, ub1, ub2 })
    }

    fn advance_early(&mut self, ops: &Ops) -> Result<EarlyLevel> {
        let prev = self.early.back().expect("stream holds at least one level").clone();
        let stage = |s: &str| format!("{s} at t = {:.6}", prev.outer[0].t + self.dt);

        self.i0.advance(ops, &Forcing::default()).map_err(|e| e.in_stage(stage("I0")))?;
        let o0 = self.i0.level().clone();
        let tr0 = o0.traces(ops);

        self.heat0.advance(&neg(&tr0.w[0]), None).map_err(|e| e.in_stage(stage("wb0")))?;
        let wb0 = self.heat0.state().clone();
        let ub1 = lift_ub1(ops, &wb0)?;
        let ub2_2 = double_tail_dx(ops, &wb0)?;

        let wall1 = wall_row(&ub1, -1.0);
        let f1 = Forcing {
            background: Some(&prev.outer[0]),
            wall_u: Some([&wall1, &self.zero_row]),
            ..Forcing::default()
        };
        self.i1.advance(ops, &f1).map_err(|e| e.in_stage(stage("I1")))?;
        let o1 = self.i1.level().clone();
        let tr1 = o1.traces(ops);

        let g1 = minus_gb1(ops, &tr0, &tr1, &wb0, &ub1, &ub2_2).scaled(-1.0);
        self.heat1.advance(&neg(&tr1.w[0]), Some(&g1)).map_err(|e| e.in_stage(stage("wb1")))?;
        let wb1 = self.heat1.state().clone();
        let ub2 = lift_ub2(ops, &wb0, &wb1)?;

        let (fu, fw) = crate::outer::i2_sources(&prev.outer[0], &prev.outer[1]);
        let (w21, w22) = (wall_row(&ub2.c[0], -1.0), wall_row(&ub2.c[1], -1.0));
        let f2 = Forcing {
            background: Some(&prev.outer[0]),
            source_u: Some(&fu),
            source_w: Some(&fw),
            wall_u: Some([&w21, &w22]),
            ..Forcing::default()
        };
        self.i2.advance(ops, &f2).map_err(|e| e.in_stage(stage("I2")))?;
        let o2 = self.i2.level().clone();
        let tr2 = o2.traces(ops);
        Ok(EarlyLevel { outer: [o0, o1, o2], traces: [tr0, tr1, tr2], wb0, wb1, ub1, ub2 })
    }

    /// Completes the level `which` of the three-level window.
    fn complete(&mut self, ops: &Ops, which: usize) -> Result<ProfileLevel> {
        let win: Vec<&EarlyLevel> = self.early.iter().collect();
        let lv = win[which];
        let t = lv.outer[0].t;
        let ub1_t = layer::time_derivative([&win[0].ub1, &win[1].ub1, &win[2].ub1], self.dt, which);
        let g2 = minus_gb2(
            ops,
            &Gb2Inputs {
                zeta: self.zeta,
                tr0: &lv.traces[0],
                tr1: &lv.traces[1],
                tr2: &lv.traces[2],
                w0: &lv.wb0,
                w1: &lv.wb1,
                ub1: &lv.ub1,
                ub1_t: &ub1_t,
                ub2: &lv.ub2,
            },
        )?
        .total()
        .scaled(-1.0);
        let wall2 = neg(&lv.traces[2].w[0]);
        if self.emitted == 0 {
            self.heat2.prime(wall2, Some(g2));
        } else {
            self.heat2.advance(&wall2, Some(&g2)).map_err(|e| e.in_stage(format!("wb2 at t = {t:.6}")))?;
        }
        let wb2 = self.heat2.state().clone();
        let ub3 = lift_ub3(ops, self.zeta, &lv.wb1, &wb2, &lv.ub1, &ub1_t)?;
        let ub4 = lift_ub4(ops, self.zeta, &wb2, &lv.ub1, &ub1_t)?;
        let moments = WallMoments::new(ops, &lv.ub2.c[0], &ub3.c[0])?;
        self.emitted += 1;
        Ok(ProfileLevel {
            t,
            outer: lv.outer.clone(),
            traces: lv.traces.clone(),
            wb: [lv.wb0.clone(), lv.wb1.clone(), wb2],
            ub1: lv.ub1.clone(),
            ub1_t,
            ub2: lv.ub2.clone(),
            ub3,
            ub4,
            moments,
        })
    }

    /// Advances one step and returns the levels completed by it, in order.
    /// After the last step the final level is returned as well.
    pub fn next_levels(&mut self, ops: &Ops) -> Result<Vec<ProfileLevel>> {
        if self.step >= self.n_steps {
            return Ok(Vec::new());
        }
        let lv = self.advance_early(ops)?;
        self.early.push_back(lv);
        self.step += 1;
        if self.early.len() > 3 {
            self.early.pop_front();
        }
        let mut out = Vec::new();
        if self.step == 2 {
            out.push(self.complete(ops, 0)?);
        }
        if self.step >= 2 {
            out.push(self.complete(ops, 1)?);
        }
        if self.step == self.n_steps {
            out.push(self.complete(ops, 2)?);
        }
        Ok(out)
    }

    pub fn done(&self) -> bool {
        self.step >= self.n_steps
    }
}

/// `2 int int d_x f`, the normal component of the second velocity layer.
fn double_tail_dx(ops: &Ops, f: &ScalarField) -> Result<ScalarField> {
    Ok(tail_integral(ops, &tail_integral(ops, &ops.ddx(f))?)?.scaled(2.0))
}

/// Worst violation of one matching identity over the sampled times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityAudit {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Largest `residual / tolerance` seen.
    pub ratio: f64,
}

/// Quality checks on the profiles, worst over the sampled times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileAudits {
    pub identities: Vec<IdentityAudit>,
    /// `(field, worst tail fraction)`.
    pub tails: Vec<(String, f64)>,
    pub wb0_linf: f64,
    /// `max |w^{I,0}(x, 0, t)|`.
    pub wall_trace: f64,
}

/// Multiple of the quadrature/stencil tolerance the identities must meet.
pub const IDENTITY_FACTOR: f64 = 10.0;

impl ProfileAudits {
    pub fn identities_hold(&self) -> bool {
        self.identities.iter().all(|a| a.residual <= IDENTITY_FACTOR * a.tolerance)
    }

    fn record_identity(&mut self, name: &str, residual: f64, tolerance: f64) {
        // roundoff floor for identically vanishing layers
        let tol = tolerance.max(1e-13);
        let ratio = residual / tol;
        match self.identities.iter_mut().find(|a| a.name == name) {
            Some(a) => {
                if ratio > a.ratio {
                    *a = IdentityAudit { name: name.into(), residual, tolerance: tol, ratio };
                }
            }
            None => self.identities.push(IdentityAudit { name: name.into(), residual, tolerance: tol, ratio }),
        }
    }

    fn record_tail(&mut self, name: &str, v: f64) {
        match self.tails.iter_mut().find(|t| t.0 == name) {
            Some(t) => t.1 = t.1.max(v),
            None => self.tails.push((name.into(), v)),
        }
    }

    /// Checks the matching identities, the layer decay and the wall trace.
    pub fn observe(&mut self, ops: &Ops, lv: &ProfileLevel) {
        let [wb0, wb1, _] = &lv.wb;
        let checks: [(&str, &ScalarField, f64, &ScalarField); 2] =
            [("dz_ub1_1 + 2 wb0", &lv.ub1, 2.0, wb0), ("dz_ub2_1 + 2 wb1", &lv.ub2.c[0], 2.0, wb1)];
        for (name, a, c, b) in checks {
            let r = identity_residual(ops, a, c, b);
            let tol = identity_tolerance(ops, &b.scaled(c));
            self.record_identity(name, r, tol);
        }
        // d_x u^{b,j}_1 + d_z u^{b,j+1}_2: the normal component is a tail
        // integral of the first
        let pairs: [(&str, &ScalarField, &ScalarField); 3] = [
            ("dx_ub1_1 + dz_ub2_2", &lv.ub1, &lv.ub2.c[1]),
            ("dx_ub2_1 + dz_ub3_2", &lv.ub2.c[0], &lv.ub3.c[1]),
            ("dx_ub3_1 + dz_ub4", &lv.ub3.c[0], &lv.ub4),
        ];
        for (name, a, b) in pairs {
            let r = layer_divergence(ops, a, b);
            let tol = identity_tolerance(ops, &ops.ddx(a));
            self.record_identity(name, r, tol);
        }
        let fields: [(&str, &ScalarField); 7] = [
            ("wb0", wb0),
            ("wb1", wb1),
            ("wb2", &lv.wb[2]),
            ("ub1", &lv.ub1),
            ("ub2_1", &lv.ub2.c[0]),
            ("ub3_1", &lv.ub3.c[0]),
            ("ub4", &lv.ub4),
        ];
        for (name, f) in fields {
            self.record_tail(name, tail_fraction(f));
        }
        self.wb0_linf = self.wb0_linf.max(wb0.max_abs());
        self.wall_trace = self.wall_trace.max(lv.traces[0].w[0].iter().fold(0.0, |m, v| m.max(v.abs())));
    }
}

/// Norms at one sampled time for one eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    pub norms: ErrorNorms,
    /// `(alpha, sup above eps^alpha)`.
    pub thickness: Vec<(f64, f64)>,
    /// `max |u^a(x, 0)|` and `max |w^a(x, 0)|`.
    pub wall_u: f64,
    pub wall_w: f64,
    pub wb0_linf: f64,
}

/// Closed-form and direct residual norms at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub t: f64,
    pub closed_f: f64,
    pub closed_g: f64,
    pub direct_f: f64,
    pub direct_g: f64,
    /// `||F_closed - F_direct||_{L2}` and the same for `G`.
    pub gap_f: f64,
    pub gap_g: f64,
    /// `(term id, L2, L-infinity)` of the closed-form groups.
    pub terms: Vec<(String, f64, f64)>,
}

/// A stage that failed; the run keeps what it measured before.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub eps: Option<f64>,
    pub message: String,
}

/// Everything measured for one eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub samples: Vec<ErrorSample>,
    pub residuals: Vec<ResidualSample>,
    /// `max ||div u||_inf` over every level of the full solution.
    pub max_divergence: f64,
    pub failure: Option<StageFailure>,
}

impl EpsRecord {
    /// sup-in-time values that enter the rate report.
    pub fn summary(&self) -> EpsSummary {
        let mut errors = ErrorNorms::default();
        let mut wb0: f64 = 0.0;
        let mut thickness: Vec<(f64, f64)> = Vec::new();
        for s in &self.samples {
            errors = errors.max(&s.norms);
            wb0 = wb0.max(s.wb0_linf);
            for (a, v) in &s.thickness {
                match thickness.iter_mut().find(|t| t.0 == *a) {
                    Some(t) => t.1 = t.1.max(*v),
                    None => thickness.push((*a, *v)),
                }
            }
        }
        let sup = |f: &dyn Fn(&ResidualSample) -> f64| self.residuals.iter().map(f).fold(0.0, f64::max);
        let has_res = !self.residuals.is_empty();
        EpsSummary {
            eps: self.eps,
            errors,
            wb0,
            f_l2: has_res.then(|| sup(&|r| r.closed_f)),
            g_l2: has_res.then(|| sup(&|r| r.closed_g)),
            thickness,
        }
    }

    pub fn max_wall(&self) -> (f64, f64) {
        self.samples.iter().fold((0.0, 0.0), |(a, b), s| (a.max(s.wall_u), b.max(s.wall_w)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<EpsRecord>,
    pub audits: ProfileAudits,
    /// `max ||div u||_inf` over every level of the three outer profiles.
    pub outer_divergence: f64,
    /// Set when the profile construction itself failed.
    pub failure: Option<StageFailure>,
}

impl RunOutput {
    pub fn summaries(&self) -> Vec<EpsSummary> {
        self.records.iter().filter(|r| r.failure.is_none()).map(EpsRecord::summary).collect()
    }

    pub fn max_divergence(&self) -> f64 {
        self.records.iter().map(|r| r.max_divergence).fold(self.outer_divergence, f64::max)
    }
}

/// Hooks for callers that want to look at the profiles or samples as they
/// are produced (dumps, progress).
pub trait Observer {
    fn profile(&mut self, _ops: &Ops, _step: usize, _lv: &ProfileLevel) {}
    fn composite(&mut self, _ops: &Ops, _step: usize, _c: &Composite) {}
    fn full(&mut self, _ops: &Ops, _step: usize, _eps: f64, _lv: &OuterLevel) {}
}

/// Observer that ignores everything.
pub struct Silent;
impl Observer for Silent {}

/// Per-eps state carried through the run.
struct EpsRun {
    asm: Assembler,
    solver: EpsSolver,
    composites: VecDeque<Composite>,
    record: EpsRecord,
}

fn top_w(lv: &ProfileLevel, eps: f64) -> Vec<f64> {
    let [o0, o1, o2] = &lv.outer;
    let last = o0.w.ny - 1;
    let s = eps.sqrt();
    let (a, b, c) = (o0.w.row(last), o1.w.row(last), o2.w.row(last));
    (0..a.len()).map(|i| a[i] + s * b[i] + eps * c[i]).collect()
}

impl EpsRun {
    fn sample(&mut self, ops: &Ops, spec: &RunSpec, lv: &ProfileLevel) -> Result<()> {
        let comp = self.composites.back().expect("composite of the current level");
        let full = self.solver.level();
        let wb0 = self.asm.sampler.sample(&lv.wb[0]);
        let err = ErrorFields::new(&full.u, &full.w, comp, &lv.outer[0], &wb0)?;
        let thickness = spec
            .thickness
            .iter()
            .map(|t| Ok((t.alpha, thickness_sup(ops, &err, t, self.record.eps)?)))
            .collect::<Result<Vec<_>>>()?;
        let wall_u = comp.u.c[0].row(0).iter().chain(&comp.u.c[1].row(0)).fold(0.0, |m: f64, v| m.max(v.abs()));
        let wall_w = comp.w.row(0).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        self.record.samples.push(ErrorSample {
            t: lv.t,
            norms: err.norms(ops),
            thickness,
            wall_u,
            wall_w,
            wb0_linf: lv.wb[0].max_abs(),
        });
        Ok(())
    }

    fn residual(&mut self, ops: &Ops, zeta: f64, dt: f64, win: [&ProfileLevel; 3]) -> Result<()> {
        let closed = assemble::closed_form(ops, &self.asm, zeta, win, dt)?;
        let c: Vec<&Composite> = self.composites.iter().collect();
        let direct = assemble::direct(ops, zeta, [c[0], c[1], c[2]], dt)?;
        let (cf, cg) = closed.norms(ops);
        let (df, dg) = direct.norms(ops);
        let (gap_f, gap_g) = closed.distance(ops, &direct);
        self.record.residuals.push(ResidualSample {
            t: closed.t,
            closed_f: cf,
            closed_g: cg,
            direct_f: df,
            direct_g: dg,
            gap_f,
            gap_g,
            terms: closed.term_norms(ops),
        });
        Ok(())
    }
}

/// Runs the profile construction and, for each eps of the ladder, the full
/// solve with errors and residuals, all in one pass over time.
pub fn run(spec: &RunSpec, observer: &mut dyn Observer) -> Result<RunOutput> {
    let ops = Ops::new(Grid::new(spec.grid.clone())?);
    if !(spec.zeta > 0.0) {
        return Err(Error::InvalidParameter(format!("zeta must be positive, got {}", spec.zeta)));
    }
    spec.initial.validate(spec.grid.y_max)?;
    let (u0, w0) = spec.initial.build(&ops)?;
    let dt = spec.time.dt();
    let stride = spec.stride.max(1);
    let n_steps = spec.time.n_steps;

    let mut runs = Vec::new();
    for &eps in &spec.eps {
        runs.push(EpsRun {
            asm: Assembler::new(&ops, &spec.cutoff, eps)?,
            solver: EpsSolver::new(&ops, eps, spec.zeta, dt, u0.clone(), w0.clone())?,
            composites: VecDeque::new(),
            record: EpsRecord { eps, samples: Vec::new(), residuals: Vec::new(), max_divergence: 0.0, failure: None },
        });
    }
    let mut stream = ProfileStream::new(&ops, u0, w0, spec.zeta, spec.time, spec.damping_steps)?;
    let mut audits = ProfileAudits::default();
    let mut outer_divergence: f64 = 0.0;
    let mut window: VecDeque<ProfileLevel> = VecDeque::new();
    let mut step = 0usize;
    let mut failure = None;

    while !stream.done() {
        let levels = match stream.next_levels(&ops) {
            Ok(l) => l,
            Err(e) => {
                warn!(error = %e, "profile construction failed");
                failure = Some(StageFailure { eps: None, message: e.to_string() });
                break;
            }
        };
        for lv in levels {
            let n = step;
            step += 1;
            let sampled = n.is_multiple_of(stride) || n == n_steps;
            for o in &lv.outer {
                outer_divergence = outer_divergence.max(ops.div(&o.u).max_abs());
            }
            if sampled {
                audits.observe(&ops, &lv);
                observer.profile(&ops, n, &lv);
            }
            window.push_back(lv);
            if window.len() > 3 {
                window.pop_front();
            }
            let lv = window.back().expect("just pushed");
            // residual at the middle of the window
            let mid = n.checked_sub(1).filter(|m| spec.residuals && *m >= 1 && *m % stride == 0 && window.len() == 3);

            for r in runs.iter_mut().filter(|r| r.record.failure.is_none()) {
                let eps = r.record.eps;
                let res: Result<()> = (|| {
                    if n > 0 {
                        r.solver.advance(&ops, &top_w(lv, eps)).map_err(|e| e.in_stage("full solve"))?;
                    }
                    let full = r.solver.level();
                    r.record.max_divergence = r.record.max_divergence.max(ops.div(&full.u).max_abs());
                    observer.full(&ops, n, eps, full);
                    let comp = r.asm.composite(&ops, lv);
                    if sampled {
                        observer.composite(&ops, n, &comp);
                    }
                    r.composites.push_back(comp);
                    if r.composites.len() > 3 {
                        r.composites.pop_front();
                    }
                    if sampled {
                        r.sample(&ops, spec, lv).map_err(|e| e.in_stage("errors"))?;
                    }
                    if mid.is_some() {
                        let w: Vec<&ProfileLevel> = window.iter().collect();
                        r.residual(&ops, spec.zeta, dt, [w[0], w[1], w[2]]).map_err(|e| e.in_stage("residuals"))?;
                    }
                    Ok(())
                })();
                if let Err(e) = res {
                    warn!(eps, error = %e, "run for this eps stopped");
                    r.record.failure = Some(StageFailure { eps: Some(eps), message: e.to_string() });
                }
            }
        }
    }
    for (name, v) in &audits.tails {
        if *v > spec.tail_tol {
            warn!(field = %name, fraction = v, "layer profile has not decayed at z_max");
        }
    }
    Ok(RunOutput { records: runs.into_iter().map(|r| r.record).collect(), audits, outer_divergence, failure })
}
