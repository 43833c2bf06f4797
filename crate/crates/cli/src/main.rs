use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mpbl::assemble::{Composite, ProfileLevel};
use mpbl::check::{run_checks, Faults};
use mpbl::config::Config;
use mpbl::field::ScalarField;
use mpbl::io::{self, Manifest, OutDir, TableWriter};
use mpbl::ops::Ops;
use mpbl::outer::level::OuterLevel;
use mpbl::pipeline::{run, Observer, RunOutput};
use mpbl::verify::RateReport;
use mpbl::Error;

/// Exit statuses.
const OK: u8 = 0;
const ACCEPTANCE_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const INSUFFICIENT_SAMPLES: u8 = 3;
const STAGE_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "mpbl", version, about = "Boundary-layer expansion and convergence study for micropolar flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the outer and layer profiles; dump them with decay and identity audits.
    Profiles(Common),
    /// Run every eps of the ladder and fit the convergence rates.
    Campaign(Common),
    /// Run the fast invariant suite.
    Check(CheckArgs),
    /// Run a single eps and dump the full solution next to the composite.
    Solve(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat key = value). Defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config file and MPBL_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated eps values replacing the ladder.
    #[arg(long, value_delimiter = ',')]
    eps_override: Option<Vec<f64>>,
    /// Sampling stride in time steps.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the cutoff amplitude (fault injection).
    #[arg(long)]
    fault_cutoff_amplitude: Option<f64>,
    /// Relative perturbation of every other quadrature weight (fault injection).
    #[arg(long, default_value_t = 0.0)]
    fault_weight_jitter: f64,
}

fn load(c: &Common) -> Result<Config, Error> {
    let mut cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => {
            let mut cfg = Config::default();
            cfg.apply_env(|k| std::env::var(k).ok());
            cfg
        }
    };
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    if let Some(eps) = &c.eps_override {
        cfg.eps = eps.clone();
    }
    if let Some(s) = c.stride {
        cfg.stride = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn should_dump(cfg: &Config, step: usize) -> bool {
    step == cfg.n_steps || (cfg.dump_stride > 0 && step.is_multiple_of(cfg.dump_stride))
}

fn dump(out: &mut OutDir, cfg: &Config, step: usize, t: f64, fields: &[(String, &ScalarField)]) -> Result<(), Error> {
    for (name, f) in fields {
        let p = out.file(&format!("step{step:05}/{name}.txt"))?;
        io::write_field_dump(&p, name, t, &cfg.grid_spec(), f)?;
    }
    Ok(())
}

/// Writes profile dumps, traces and decay norms as levels arrive.
struct ProfileWriter<'a> {
    cfg: &'a Config,
    out: &'a mut OutDir,
    traces: TableWriter,
    decay: TableWriter,
    error: Option<Error>,
}

impl ProfileWriter<'_> {
    fn write(&mut self, ops: &Ops, step: usize, lv: &ProfileLevel) -> Result<(), Error> {
        io::trace_rows(&mut self.traces, ops, lv.t, &lv.traces)?;
        let layers: [(&str, &ScalarField); 9] = [
            ("wb0", &lv.wb[0]),
            ("wb1", &lv.wb[1]),
            ("wb2", &lv.wb[2]),
            ("ub1_1", &lv.ub1),
            ("ub2_1", &lv.ub2.c[0]),
            ("ub2_2", &lv.ub2.c[1]),
            ("ub3_1", &lv.ub3.c[0]),
            ("ub3_2", &lv.ub3.c[1]),
            ("ub4_2", &lv.ub4),
        ];
        for (name, f) in layers {
            io::decay_rows(&mut self.decay, ops, name, lv.t, f, 4)?;
        }
        if should_dump(self.cfg, step) {
            let mut fields: Vec<(String, &ScalarField)> = Vec::new();
            for (k, o) in lv.outer.iter().enumerate() {
                fields.push((format!("I{k}.u1"), &o.u.c[0]));
                fields.push((format!("I{k}.u2"), &o.u.c[1]));
                fields.push((format!("I{k}.w"), &o.w));
                fields.push((format!("I{k}.p"), &o.p));
            }
            fields.extend(layers.iter().map(|(n, f)| (n.to_string(), *f)));
            dump(self.out, self.cfg, step, lv.t, &fields)?;
        }
        Ok(())
    }
}

impl Observer for ProfileWriter<'_> {
    fn profile(&mut self, ops: &Ops, step: usize, lv: &ProfileLevel) {
        if self.error.is_none() {
            self.error = self.write(ops, step, lv).err();
        }
    }
}

/// Dumps the full solution and the composite of a single-eps run.
struct SolveWriter<'a> {
    cfg: &'a Config,
    out: &'a mut OutDir,
    error: Option<Error>,
}

impl Observer for SolveWriter<'_> {
    fn composite(&mut self, _ops: &Ops, step: usize, c: &Composite) {
        if self.error.is_none() && should_dump(self.cfg, step) {
            let fields =
                [("approx.u1".to_string(), &c.u.c[0]), ("approx.u2".to_string(), &c.u.c[1]), ("approx.w".to_string(), &c.w)];
            self.error = dump(self.out, self.cfg, step, c.t, &fields).err();
        }
    }

    fn full(&mut self, _ops: &Ops, step: usize, _eps: f64, lv: &OuterLevel) {
        if self.error.is_none() && should_dump(self.cfg, step) {
            let fields = [
                ("full.u1".to_string(), &lv.u.c[0]),
                ("full.u2".to_string(), &lv.u.c[1]),
                ("full.w".to_string(), &lv.w),
                ("full.p".to_string(), &lv.p),
            ];
            self.error = dump(self.out, self.cfg, step, lv.t, &fields).err();
        }
    }
}

fn manifest(cfg: &Config, command: &str, start: Instant, status: &str, out: &mut OutDir) -> Result<(), Error> {
    let path = out.file("manifest.toml")?;
    let config_path = out.file("config.toml")?;
    std::fs::write(config_path, cfg.to_text())?;
    Manifest {
        command: command.into(),
        eps: cfg.eps.clone(),
        grid: cfg.grid_spec().to_string(),
        dt: cfg.t_final / cfg.n_steps as f64,
        n_steps: cfg.n_steps,
        stride: cfg.stride,
        wall_clock_s: start.elapsed().as_secs_f64(),
        status: status.into(),
        files: out.written().to_vec(),
    }
    .write(&path)
}

/// Stage failures recorded in the run, as printable lines.
fn failures(o: &RunOutput) -> Vec<String> {
    let mut v: Vec<String> = o.failure.iter().map(|f| format!("profiles: {}", f.message)).collect();
    for r in &o.records {
        if let Some(f) = &r.failure {
            v.push(format!("eps {:e}: {}", r.eps, f.message));
        }
    }
    v
}

fn write_run_tables(out: &mut OutDir, o: &RunOutput) -> Result<(), Error> {
    io::write_norms(&out.file("norms.csv")?, &o.records)?;
    io::write_thickness(&out.file("thickness.csv")?, &o.records)?;
    let (summary, terms) = (out.file("residuals.csv")?, out.file("residual_terms.csv")?);
    io::write_residuals(&summary, &terms, &o.records)?;
    io::write_identities(&out.file("identities.csv")?, &o.audits)?;
    Ok(())
}

/// Wall and divergence bounds of the whole run.
fn invariants(cfg: &Config, o: &RunOutput) -> Vec<String> {
    let mut bad = Vec::new();
    let div = o.max_divergence();
    if div > cfg.projection_tol {
        bad.push(format!("max divergence {div:.3e} exceeds {:e}", cfg.projection_tol));
    }
    for r in &o.records {
        let (wu, ww) = r.max_wall();
        if wu.max(ww) > cfg.wall_tol {
            bad.push(format!("eps {:e}: wall values u {wu:.3e}, w {ww:.3e} exceed {:e}", r.eps, cfg.wall_tol));
        }
    }
    if !o.audits.identities_hold() {
        bad.push("matching identities exceed their tolerance".into());
    }
    bad
}

fn profiles(c: &Common) -> Result<u8, Error> {
    let start = Instant::now();
    let mut cfg = load(c)?;
    cfg.eps.clear();
    let mut out = OutDir::create(&cfg.out_dir)?;
    let spec = cfg.run_spec()?;
    let traces = TableWriter::create(&out.file("traces.csv")?, io::TRACES)?;
    let decay = TableWriter::create(&out.file("decay.csv")?, io::DECAY)?;
    let mut w = ProfileWriter { cfg: &cfg, out: &mut out, traces, decay, error: None };
    let o = run(&spec, &mut w)?;
    if let Some(e) = w.error.take() {
        return Err(e);
    }
    w.traces.finish()?;
    w.decay.finish()?;
    io::write_identities(&out.file("identities.csv")?, &o.audits)?;
    for a in &o.audits.identities {
        println!("{:<24} residual {:.3e}  tolerance {:.3e}  ratio {:.3}", a.name, a.residual, a.tolerance, a.ratio);
    }
    let fails = failures(&o);
    let status = if !fails.is_empty() {
        STAGE_FAILED
    } else if !o.audits.identities_hold() || o.outer_divergence > cfg.projection_tol {
        ACCEPTANCE_FAILED
    } else {
        OK
    };
    fails.iter().for_each(|f| eprintln!("stage failure: {f}"));
    manifest(&cfg, "profiles", start, status_name(status), &mut out)?;
    Ok(status)
}

fn campaign(c: &Common) -> Result<u8, Error> {
    let start = Instant::now();
    let cfg = load(c)?;
    let mut out = OutDir::create(&cfg.out_dir)?;
    let o = run(&cfg.run_spec()?, &mut mpbl::pipeline::Silent)?;
    write_run_tables(&mut out, &o)?;
    let report = RateReport::build_with(&o.summaries(), cfg.rate_r2);
    io::write_slopes(&out.file("slopes.csv")?, &report)?;
    let mut text = report.summary();
    let bad = invariants(&cfg, &o);
    for b in &bad {
        text += &format!("invariant violated: {b}\n");
    }
    let fails = failures(&o);
    for f in &fails {
        text += &format!("stage failure: {f}\n");
    }
    std::fs::write(out.file("report.txt")?, &text)?;
    print!("{text}");
    let status = if !fails.is_empty() {
        STAGE_FAILED
    } else if report.insufficient_samples() {
        INSUFFICIENT_SAMPLES
    } else if !report.pass() || !bad.is_empty() {
        ACCEPTANCE_FAILED
    } else {
        OK
    };
    manifest(&cfg, "campaign", start, status_name(status), &mut out)?;
    Ok(status)
}

fn solve(c: &Common) -> Result<u8, Error> {
    let start = Instant::now();
    let mut cfg = load(c)?;
    if cfg.eps.len() != 1 {
        eprintln!("solve runs a single eps; using {:e}, the largest of the ladder", cfg.eps[0]);
        cfg.eps.truncate(1);
    }
    let mut out = OutDir::create(&cfg.out_dir)?;
    let mut w = SolveWriter { cfg: &cfg, out: &mut out, error: None };
    let o = run(&cfg.run_spec()?, &mut w)?;
    if let Some(e) = w.error.take() {
        return Err(e);
    }
    write_run_tables(&mut out, &o)?;
    let bad = invariants(&cfg, &o);
    let fails = failures(&o);
    if let Some(r) = o.records.first() {
        let s = r.summary();
        println!("eps {:e}: |U|_inf {:.4e}  |W|_inf {:.4e}  |(U, W)|_L2 {:.4e}", r.eps, s.errors.u_linf, s.errors.w_linf, s.errors.energy_l2);
    }
    bad.iter().for_each(|b| println!("invariant violated: {b}"));
    fails.iter().for_each(|f| eprintln!("stage failure: {f}"));
    let status = if !fails.is_empty() {
        STAGE_FAILED
    } else if !bad.is_empty() {
        ACCEPTANCE_FAILED
    } else {
        OK
    };
    manifest(&cfg, "solve", start, status_name(status), &mut out)?;
    Ok(status)
}

fn check(a: &CheckArgs) -> Result<u8, Error> {
    let start = Instant::now();
    let faults = Faults { cutoff_amplitude: a.fault_cutoff_amplitude, weight_jitter: a.fault_weight_jitter };
    let outcomes = run_checks(&faults);
    for o in &outcomes {
        println!("{} {:<24} {:>6.2}s  {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.seconds, o.detail);
    }
    println!("{} checks in {:.2}s", outcomes.len(), start.elapsed().as_secs_f64());
    if let Some(dir) = &a.out {
        let mut out = OutDir::create(dir)?;
        io::write_checks(&out.file("checks.csv")?, &outcomes)?;
    }
    Ok(if outcomes.iter().all(|o| o.pass) { OK } else { ACCEPTANCE_FAILED })
}

fn status_name(code: u8) -> &'static str {
    match code {
        OK => "ok",
        ACCEPTANCE_FAILED => "acceptance failed",
        CONFIG_ERROR => "configuration error",
        INSUFFICIENT_SAMPLES => "insufficient samples",
        _ => "stage failure",
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => CONFIG_ERROR,
        Error::InsufficientSamples(_) => INSUFFICIENT_SAMPLES,
        _ => STAGE_FAILED,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_max_level(tracing_subscriber::filter::LevelFilter::WARN)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Profiles(c) => profiles(c),
        Command::Campaign(c) => campaign(c),
        Command::Solve(c) => solve(c),
        Command::Check(a) => check(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
