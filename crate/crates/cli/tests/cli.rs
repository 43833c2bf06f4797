use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mpbl::io::{self, read_field_dump, read_table, Manifest};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpbl"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mpbl-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

const SMALL: &str = "n_x = 16\nn_y = 256\nstretch_c = 0.05\nn_z = 200\nn_steps = 40\nstride = 10\neps = [1e-2, 5e-3, 2e-3, 1e-3]\n";

fn config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).arg("--out").arg(dir.join("out")).output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn check_passes_clean_and_reports_injected_faults() {
    let d = scratch("check");
    let o = run(&["check"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let rows = read_table(&d.join("out/checks.csv"), io::CHECKS).unwrap();
    assert!(rows.len() >= 9);

    let o = bin().args(["check", "--fault-cutoff-amplitude", "0.9"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("FAIL cutoff_invariants"), "{}", text(&o));

    let o = bin().args(["check", "--fault-weight-jitter", "1e-3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("FAIL heat_erfc_oracle"), "{}", text(&o));
}

#[test]
fn config_errors_name_the_key() {
    let d = scratch("badcfg");
    let p = config(&d, "zeta = -1.0\n");
    let o = run(&["campaign", "--config", p.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("zeta"), "{}", text(&o));

    let o = run(&["campaign", "--eps-override", "1e-3,1e-2"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("eps"), "{}", text(&o));
}

#[test]
fn two_point_ladder_signals_insufficient_samples() {
    let d = scratch("short");
    let p = config(&d, "");
    let o = run(&["campaign", "--config", p.to_str().unwrap(), "--eps-override", "1e-2,5e-3"], &d);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
}

#[test]
fn zero_data_campaign_is_degenerate_and_passes() {
    let d = scratch("zero");
    let p = config(&d, "psi_amp = 0.0\nw_amp = 0.0\n");
    let o = run(&["campaign", "--config", p.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("no boundary layer"));
}

#[test]
fn campaign_tables_follow_their_schemas() {
    let d = scratch("campaign");
    let p = config(&d, "");
    let o = run(&["campaign", "--config", p.to_str().unwrap()], &d);
    // coarse grid: acceptance may fail, but the run itself must not
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", text(&o));
    let out = d.join("out");
    let slopes = read_table(&out.join("slopes.csv"), io::SLOPES).unwrap();
    assert_eq!(slopes.len(), 7);
    read_table(&out.join("norms.csv"), io::NORMS).unwrap();
    read_table(&out.join("thickness.csv"), io::THICKNESS).unwrap();
    read_table(&out.join("residuals.csv"), io::RESIDUALS).unwrap();
    read_table(&out.join("residual_terms.csv"), io::RESIDUAL_TERMS).unwrap();
    read_table(&out.join("identities.csv"), io::IDENTITIES).unwrap();
    let m = Manifest::read(&out.join("manifest.toml")).unwrap();
    assert_eq!(m.command, "campaign");
    assert_eq!(m.eps.len(), 4);
    assert!(m.files.iter().all(|f| out.join(f).exists()));
}

#[test]
fn profiles_dump_every_field_with_valid_headers() {
    let d = scratch("profiles");
    let p = config(&d, "");
    let o = run(&["profiles", "--config", p.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let step = d.join("out/step00040");
    let mut names = Vec::new();
    for k in 0..3 {
        for c in ["u1", "u2", "w", "p"] {
            names.push(format!("I{k}.{c}"));
        }
    }
    for n in ["wb0", "wb1", "wb2", "ub1_1", "ub2_1", "ub2_2", "ub3_1", "ub3_2", "ub4_2"] {
        names.push(n.to_string());
    }
    for n in &names {
        let dump = read_field_dump(&step.join(format!("{n}.txt"))).unwrap();
        assert_eq!(&dump.name, n);
        assert!((dump.t - 0.5).abs() < 1e-12);
        assert_eq!(dump.field.nx, 16);
    }
    let ids = read_table(&d.join("out/identities.csv"), io::IDENTITIES).unwrap();
    assert!(ids.iter().all(|r| r[4] == io::Cell::B(true)));
    read_table(&d.join("out/traces.csv"), io::TRACES).unwrap();
    read_table(&d.join("out/decay.csv"), io::DECAY).unwrap();
}

#[test]
fn zero_data_profiles_are_zero() {
    let d = scratch("zeroprof");
    let p = config(&d, "psi_amp = 0.0\nw_amp = 0.0\n");
    let o = run(&["profiles", "--config", p.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    for n in ["I0.u1", "I1.w", "I2.p", "wb0", "ub3_1"] {
        let dump = read_field_dump(&d.join(format!("out/step00040/{n}.txt"))).unwrap();
        assert_eq!(dump.field.max_abs(), 0.0, "{n}");
    }
}

#[test]
fn solve_dumps_full_and_approximate_fields() {
    let d = scratch("solve");
    let p = config(&d, "dump_stride = 20\n");
    let o = run(&["solve", "--config", p.to_str().unwrap(), "--eps-override", "1e-3"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    for step in ["step00020", "step00040"] {
        for n in ["full.u1", "full.w", "approx.w"] {
            read_field_dump(&d.join(format!("out/{step}/{n}.txt"))).unwrap();
        }
    }
    let m = Manifest::read(&d.join("out/manifest.toml")).unwrap();
    assert_eq!(m.eps, vec![1e-3]);
}
