//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Tolerances are pinned here, not read from configuration.

use std::process::ExitCode;
use std::time::Instant;

use mpbl::check::{erfc_oracle, manufactured_order, run_checks, Faults};
use mpbl::config::Config;
use mpbl::outer::initial::InitialKind;
use mpbl::pipeline::{run, RunOutput, Silent};
use mpbl::verify::{RateReport, RateRow, THICKNESS_RATIO};

const RATE_R2: f64 = 0.98;
const HARMONIC_WB0: f64 = 1e-6;
const HARMONIC_AGREEMENT: f64 = 2.0 * 1e-6;
const THICKNESS_ALPHA: f64 = 0.4;
const GAP_ORDER: f64 = 1.7;
const ERFC_NZ: usize = 512;
const ERFC_TOL: f64 = 1e-3;
const MMS_ORDER: f64 = 2.0;
const MMS_SLACK: f64 = 0.3;
const DIVERGENCE_TOL: f64 = 1e-9;
const WALL_TOL: f64 = 1e-8;
const CHECK_SECONDS: f64 = 60.0;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn campaign(cfg: &Config) -> RunOutput {
    cfg.validate().expect("acceptance configuration is valid");
    let spec = cfg.run_spec().expect("run spec");
    let start = Instant::now();
    let o = run(&spec, &mut Silent).expect("pipeline runs");
    eprintln!("  ran {} eps values in {:.1}s", cfg.eps.len(), start.elapsed().as_secs_f64());
    o
}

fn rate_line(r: Option<&RateRow>) -> (bool, String) {
    match r {
        Some(r) => match r.fit {
            Some(f) => (
                r.fit.is_some_and(|f| f.slope >= r.target - r.margin && f.r2 >= RATE_R2),
                format!("{} slope {:.4} (floor {:.3}), R2 {:.4}", r.name, f.slope, r.target - r.margin, f.r2),
            ),
            None => (false, format!("{}: no fit ({})", r.name, r.note.clone().unwrap_or_default())),
        },
        None => (false, "rate missing from the report".into()),
    }
}

fn rates(report: &RateReport, names: &[&str]) -> (bool, String) {
    let lines: Vec<(bool, String)> = names.iter().map(|n| rate_line(report.rate(n))).collect();
    (lines.iter().all(|l| l.0), lines.into_iter().map(|l| l.1).collect::<Vec<_>>().join("; "))
}

/// Largest closed-form vs direct residual gap at `eps = 1e-2`, on the
/// default grid coarsened `coarsen` times in y, z and t.
fn residual_gap(coarsen: usize) -> f64 {
    let base = Config::default();
    let cfg = Config {
        eps: vec![1e-2],
        n_y: base.n_y / coarsen,
        n_z: base.n_z / coarsen,
        n_steps: base.n_steps / coarsen,
        stride: base.stride / coarsen,
        ..base
    };
    let o = campaign(&cfg);
    o.records[0].residuals.iter().map(|r| r.gap_f.hypot(r.gap_g)).fold(0.0, f64::max)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut verdicts = Vec::new();

    eprintln!("default campaign");
    let cfg = Config { thickness_alpha: vec![THICKNESS_ALPHA], ..Config::default() };
    let o = campaign(&cfg);
    let failures: Vec<String> = o
        .records
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("eps {:e}: {}", r.eps, f.message)))
        .chain(o.failure.iter().map(|f| f.message.clone()))
        .collect();
    if !failures.is_empty() {
        eprintln!("stage failures: {}", failures.join("; "));
    }
    let report = RateReport::build_with(&o.summaries(), RATE_R2);
    eprint!("{}", report.summary());

    let (pass, detail) = rates(&report, &["u_minus_u0_linf"]);
    verdicts.push(Verdict { id: "1", pass, detail });
    let (pass, detail) = rates(&report, &["w_minus_w0_minus_wb0_linf"]);
    verdicts.push(Verdict { id: "2", pass, detail });

    let (pass, detail) = match &report.dichotomy {
        Some(d) => (
            d.w_outer > 0.5 * d.wb0,
            format!("eps {:e}: |w - w0| {:.4e} vs 0.5 |wb0| {:.4e}", d.eps, d.w_outer, 0.5 * d.wb0),
        ),
        None => (false, "no dichotomy data".into()),
    };
    verdicts.push(Verdict { id: "3a", pass, detail });

    let (pass, detail) = match report.thickness.iter().find(|t| t.alpha == THICKNESS_ALPHA) {
        Some(t) => (
            t.monotone() && t.ratio().is_some_and(|r| r <= THICKNESS_RATIO),
            format!("monotone {}, last/first {:.4} (<= {THICKNESS_RATIO})", t.monotone(), t.ratio().unwrap_or(f64::NAN)),
        ),
        None => (false, "no thickness row".into()),
    };
    verdicts.push(Verdict { id: "4", pass, detail });

    let (pass, detail) = rates(&report, &["residual_f_l2", "residual_g_l2"]);
    verdicts.push(Verdict { id: "5a", pass, detail });

    let (pass, detail) = rates(&report, &["error_energy_l2", "error_u_linf", "error_w_linf"]);
    verdicts.push(Verdict { id: "6", pass, detail });

    let worst = o.audits.identities.iter().map(|a| a.ratio).fold(0.0, f64::max);
    verdicts.push(Verdict {
        id: "8",
        pass: o.audits.identities.len() == 5 && o.audits.identities_hold(),
        detail: format!("{} identities, worst residual / tolerance {worst:.3} (<= 10)", o.audits.identities.len()),
    });

    let div = o.max_divergence();
    let (wall_u, wall_w) = o.records.iter().map(|r| r.max_wall()).fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    verdicts.push(Verdict {
        id: "9",
        pass: failures.is_empty() && div <= DIVERGENCE_TOL && wall_u <= WALL_TOL && wall_w <= WALL_TOL,
        detail: format!("max div {div:.3e}, wall |u^a| {wall_u:.3e}, wall |w^a| {wall_w:.3e}"),
    });

    eprintln!("harmonic data");
    let harmonic = Config { initial: InitialKind::Harmonic, eps: vec![1e-2, 2e-4], residuals: false, ..Config::default() };
    let h = campaign(&harmonic);
    let mut wb0: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for r in &h.records {
        let s = r.summary();
        wb0 = wb0.max(s.wb0);
        gap = gap.max((s.errors.w_outer_linf - s.errors.w_corrected_linf).abs());
    }
    verdicts.push(Verdict {
        id: "3b",
        pass: h.records.iter().all(|r| r.failure.is_none()) && wb0 <= HARMONIC_WB0 && gap <= HARMONIC_AGREEMENT,
        detail: format!("|wb0| {wb0:.3e} (<= {HARMONIC_WB0:e}), corrected vs uncorrected {gap:.3e} (<= {HARMONIC_AGREEMENT:e})"),
    });

    eprintln!("residual routes under refinement");
    let (coarse, fine) = (residual_gap(2), residual_gap(1));
    let order = (coarse / fine).log2();
    verdicts.push(Verdict {
        id: "5b",
        pass: order >= GAP_ORDER,
        detail: format!("closed vs direct gap {coarse:.3e} -> {fine:.3e}, order {order:.3} (>= {GAP_ORDER})"),
    });

    let (erfc, mms) = (erfc_oracle(ERFC_NZ, 0.0), manufactured_order());
    let (pass, detail) = match (erfc, mms) {
        (Ok(e), Ok(p)) => (
            e.max_error <= ERFC_TOL && (p - MMS_ORDER).abs() <= MMS_SLACK,
            format!("erfc max error {:.3e} at n_z = {ERFC_NZ} (<= {ERFC_TOL:e}), manufactured order {p:.3}", e.max_error),
        ),
        (e, p) => (false, format!("oracle failed: {:?} {:?}", e.err(), p.err())),
    };
    verdicts.push(Verdict { id: "7", pass, detail });

    let t = Instant::now();
    let checks = run_checks(&Faults::default());
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    verdicts.push(Verdict {
        id: "10",
        pass: failed.is_empty() && secs <= CHECK_SECONDS,
        detail: format!("{} checks in {secs:.2}s, failed: {:?}", checks.len(), failed),
    });

    let order = ["1", "2", "3a", "3b", "4", "5a", "5b", "6", "7", "8", "9", "10"];
    verdicts.sort_by_key(|v| order.iter().position(|o| *o == v.id));
    for v in &verdicts {
        println!("{} criterion {:<3} {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} of {} criteria passed in {:.0}s", verdicts.len() - failed, verdicts.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
