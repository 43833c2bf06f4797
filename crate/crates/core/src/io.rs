//! Files written by the command-line tool: field dumps, CSV tables with
//! fixed schemas, and run manifests.
//!
//! Field dump layout: `#`-prefixed `key = value` header lines (format tag,
//! name, coordinate tag, time, shape, grid), then one line per x node
//! holding the values along y (or z). Floats use the shortest
//! representation that reads back exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::check::CheckOutcome;
use crate::error::{Error, Result};
use crate::field::{Coord, ScalarField};
use crate::grid::GridSpec;
use crate::layer::decay_report;
use crate::ops::Ops;
use crate::outer::level::WallTraces;
use crate::pipeline::{EpsRecord, ProfileAudits, IDENTITY_FACTOR};
use crate::verify::RateReport;

pub const DUMP_TAG: &str = "mpbl-field-dump 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColType {
    Float,
    Int,
    Text,
    Bool,
}

/// Named column list of one CSV file kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [(&'static str, ColType)],
}

use ColType::{Bool, Float, Int, Text};

/// Per-eps error norms at each sampled time.
pub const NORMS: Schema = Schema {
    name: "norms",
    columns: &[
        ("eps", Float),
        ("t", Float),
        ("u_minus_u0_linf", Float),
        ("w_minus_w0_linf", Float),
        ("w_minus_w0_minus_wb0_linf", Float),
        ("error_u_l2", Float),
        ("error_w_l2", Float),
        ("error_energy_l2", Float),
        ("error_u_linf", Float),
        ("error_w_linf", Float),
        ("wall_u", Float),
        ("wall_w", Float),
        ("wb0_linf", Float),
    ],
};

/// Fitted slopes of the rate report.
pub const SLOPES: Schema = Schema {
    name: "slopes",
    columns: &[
        ("quantity", Text),
        ("target", Float),
        ("floor", Float),
        ("slope", Float),
        ("intercept", Float),
        ("r2", Float),
        ("samples", Int),
        ("pass", Bool),
    ],
};

/// sup over `y > eps^alpha` per eps.
pub const THICKNESS: Schema =
    Schema { name: "thickness", columns: &[("eps", Float), ("alpha", Float), ("t", Float), ("value", Float)] };

/// Residual ledger: one row per closed-form group and time.
pub const RESIDUAL_TERMS: Schema = Schema {
    name: "residual_terms",
    columns: &[("eps", Float), ("t", Float), ("term", Text), ("l2", Float), ("linf", Float)],
};

/// Closed-form against direct residuals.
pub const RESIDUALS: Schema = Schema {
    name: "residuals",
    columns: &[
        ("eps", Float),
        ("t", Float),
        ("closed_f_l2", Float),
        ("direct_f_l2", Float),
        ("gap_f_l2", Float),
        ("closed_g_l2", Float),
        ("direct_g_l2", Float),
        ("gap_g_l2", Float),
    ],
};

/// Matching-identity audit.
pub const IDENTITIES: Schema = Schema {
    name: "identities",
    columns: &[("identity", Text), ("residual", Float), ("tolerance", Float), ("ratio", Float), ("pass", Bool)],
};

/// Weighted decay norms `||z^l f||` of the layer profiles.
pub const DECAY: Schema =
    Schema { name: "decay", columns: &[("field", Text), ("t", Float), ("l", Int), ("weighted_norm", Float)] };

/// Wall traces `d_y^k` of the outer profiles.
pub const TRACES: Schema = Schema {
    name: "traces",
    columns: &[("t", Float), ("x", Float), ("k", Int), ("component", Text), ("value", Float)],
};

/// Self-check outcomes.
pub const CHECKS: Schema =
    Schema { name: "checks", columns: &[("check", Text), ("pass", Bool), ("detail", Text)] };

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    T(String),
    B(bool),
}

impl Cell {
    fn ty(&self) -> ColType {
        match self {
            Cell::F(_) => Float,
            Cell::I(_) => Int,
            Cell::T(_) => Text,
            Cell::B(_) => Bool,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:e}"),
            Cell::I(v) => v.to_string(),
            Cell::T(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn parse(ty: ColType, s: &str) -> Option<Cell> {
        match ty {
            Float => s.parse().ok().map(Cell::F),
            Int => s.parse().ok().map(Cell::I),
            Text => Some(Cell::T(s.to_string())),
            Bool => s.parse().ok().map(Cell::B),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::F(v) => Some(*v),
            Cell::I(v) => Some(*v as f64),
            _ => None,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// CSV writer that enforces its schema row by row.
pub struct TableWriter {
    schema: Schema,
    out: csv::Writer<File>,
    rows: usize,
}

impl TableWriter {
    pub fn create(path: &Path, schema: Schema) -> Result<Self> {
        let mut out = csv::Writer::from_path(path).map_err(csv_err)?;
        out.write_record(schema.columns.iter().map(|c| c.0)).map_err(csv_err)?;
        Ok(Self { schema, out, rows: 0 })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        let cols = self.schema.columns;
        if cells.len() != cols.len() || cells.iter().zip(cols).any(|(c, (_, t))| c.ty() != *t) {
            return Err(Error::ShapeMismatch {
                expected: format!("{} row {:?}", self.schema.name, cols),
                found: format!("{cells:?}"),
            });
        }
        self.out.write_record(cells.iter().map(Cell::render)).map_err(csv_err)?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<usize> {
        self.out.flush()?;
        Ok(self.rows)
    }
}

/// Reads a table back, checking the header and every cell's type.
pub fn read_table(path: &Path, schema: Schema) -> Result<Vec<Vec<Cell>>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let expected: Vec<&str> = schema.columns.iter().map(|c| c.0).collect();
    if header != expected {
        return Err(Error::Parse { line: 1, msg: format!("{} header {header:?}, expected {expected:?}", schema.name) });
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        if rec.len() != schema.columns.len() {
            return Err(Error::Parse { line, msg: format!("{} fields, expected {}", rec.len(), schema.columns.len()) });
        }
        let row = rec
            .iter()
            .zip(schema.columns)
            .map(|(s, (name, ty))| {
                Cell::parse(*ty, s).ok_or_else(|| Error::Parse { line, msg: format!("column {name}: cannot read {s:?}") })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Header and payload of one field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub name: String,
    pub t: f64,
    pub grid: String,
    pub field: ScalarField,
}

pub fn write_field_dump(path: &Path, name: &str, t: f64, grid: &GridSpec, f: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {DUMP_TAG}")?;
    writeln!(w, "# name = {name}")?;
    writeln!(w, "# coord = {}", f.coord.tag())?;
    writeln!(w, "# t = {t:e}")?;
    writeln!(w, "# nx = {}", f.nx)?;
    writeln!(w, "# ny = {}", f.ny)?;
    writeln!(w, "# grid = {grid}")?;
    for i in 0..f.nx {
        let line: Vec<String> = f.column(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_dump(path: &Path) -> Result<FieldDump> {
    let rd = BufReader::new(File::open(path)?);
    let mut header: Vec<(String, String)> = Vec::new();
    let mut data = Vec::new();
    let mut tag_seen = false;
    for (k, line) in rd.lines().enumerate() {
        let line = line?;
        let line_no = k + 1;
        if let Some(h) = line.strip_prefix("# ") {
            if k == 0 {
                tag_seen = h == DUMP_TAG;
                continue;
            }
            let (key, val) = h
                .split_once(" = ")
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("bad header line {line:?}") })?;
            header.push((key.to_string(), val.to_string()));
            continue;
        }
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|e| Error::Parse { line: line_no, msg: format!("{tok:?}: {e}") })?);
        }
    }
    if !tag_seen {
        return Err(Error::Parse { line: 1, msg: format!("missing format tag {DUMP_TAG:?}") });
    }
    let get = |key: &str| {
        header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing header key {key}") })
    };
    let num = |key: &str| -> Result<usize> {
        get(key)?.parse().map_err(|e| Error::Parse { line: 0, msg: format!("{key}: {e}") })
    };
    let coord = match get("coord")?.as_str() {
        "outer" => Coord::Outer,
        "layer" => Coord::Layer,
        other => return Err(Error::Parse { line: 0, msg: format!("unknown coordinate tag {other:?}") }),
    };
    let (nx, ny) = (num("nx")?, num("ny")?);
    if data.len() != nx * ny {
        return Err(Error::ShapeMismatch { expected: format!("{nx} x {ny} values"), found: data.len().to_string() });
    }
    let t = get("t")?.parse().map_err(|e| Error::Parse { line: 0, msg: format!("t: {e}") })?;
    Ok(FieldDump { name: get("name")?, t, grid: get("grid")?, field: ScalarField { nx, ny, coord, data } })
}

/// Structured record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub eps: Vec<f64>,
    pub grid: String,
    pub dt: f64,
    pub n_steps: usize,
    pub stride: usize,
    pub wall_clock_s: f64,
    pub status: String,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Output directory that remembers what was written into it.
pub struct OutDir {
    pub root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    /// Path for `rel`, creating parent directories and recording it.
    pub fn file(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        self.written.push(rel.to_string());
        Ok(p)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Per-eps error norms, one row per sampled time.
pub fn write_norms(path: &Path, records: &[EpsRecord]) -> Result<usize> {
    let mut w = TableWriter::create(path, NORMS)?;
    for r in records {
        for s in &r.samples {
            let n = &s.norms;
            let vals = [
                r.eps,
                s.t,
                n.u_outer_linf,
                n.w_outer_linf,
                n.w_corrected_linf,
                n.u_l2,
                n.w_l2,
                n.energy_l2,
                n.u_linf,
                n.w_linf,
                s.wall_u,
                s.wall_w,
                s.wb0_linf,
            ];
            w.row(&vals.map(Cell::F))?;
        }
    }
    w.finish()
}

pub fn write_thickness(path: &Path, records: &[EpsRecord]) -> Result<usize> {
    let mut w = TableWriter::create(path, THICKNESS)?;
    for r in records {
        for s in &r.samples {
            for (alpha, v) in &s.thickness {
                w.row(&[Cell::F(r.eps), Cell::F(*alpha), Cell::F(s.t), Cell::F(*v)])?;
            }
        }
    }
    w.finish()
}

/// Writes the residual summary and the per-term ledger.
pub fn write_residuals(summary: &Path, terms: &Path, records: &[EpsRecord]) -> Result<(usize, usize)> {
    let mut ws = TableWriter::create(summary, RESIDUALS)?;
    let mut wt = TableWriter::create(terms, RESIDUAL_TERMS)?;
    for r in records {
        for s in &r.residuals {
            let vals = [r.eps, s.t, s.closed_f, s.direct_f, s.gap_f, s.closed_g, s.direct_g, s.gap_g];
            ws.row(&vals.map(Cell::F))?;
            for (name, l2, linf) in &s.terms {
                wt.row(&[Cell::F(r.eps), Cell::F(s.t), Cell::T(name.clone()), Cell::F(*l2), Cell::F(*linf)])?;
            }
        }
    }
    Ok((ws.finish()?, wt.finish()?))
}

pub fn write_identities(path: &Path, audits: &ProfileAudits) -> Result<usize> {
    let mut w = TableWriter::create(path, IDENTITIES)?;
    for a in &audits.identities {
        w.row(&[
            Cell::T(a.name.clone()),
            Cell::F(a.residual),
            Cell::F(a.tolerance),
            Cell::F(a.ratio),
            Cell::B(a.residual <= IDENTITY_FACTOR * a.tolerance),
        ])?;
    }
    w.finish()
}

pub fn write_slopes(path: &Path, report: &RateReport) -> Result<usize> {
    let mut w = TableWriter::create(path, SLOPES)?;
    for r in &report.rates {
        let (slope, intercept, r2) = r.fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.slope, f.intercept, f.r2));
        w.row(&[
            Cell::T(r.name.clone()),
            Cell::F(r.target),
            Cell::F(r.target - r.margin),
            Cell::F(slope),
            Cell::F(intercept),
            Cell::F(r2),
            Cell::I(r.samples.len() as u64),
            Cell::B(r.pass()),
        ])?;
    }
    w.finish()
}

pub fn write_checks(path: &Path, outcomes: &[CheckOutcome]) -> Result<usize> {
    let mut w = TableWriter::create(path, CHECKS)?;
    for o in outcomes {
        w.row(&[Cell::T(o.name.clone()), Cell::B(o.pass), Cell::T(o.detail.clone())])?;
    }
    w.finish()
}

/// Appends `d_y^k` wall traces of the three outer profiles at one level.
pub fn trace_rows(w: &mut TableWriter, ops: &Ops, t: f64, traces: &[WallTraces; 3]) -> Result<()> {
    for (order, tr) in traces.iter().enumerate() {
        for (comp, data) in [("u1", &tr.u1), ("u2", &tr.u2), ("w", &tr.w)] {
            let name = format!("I{order}.{comp}");
            for (k, profile) in data.iter().enumerate() {
                for (i, v) in profile.iter().enumerate() {
                    w.row(&[Cell::F(t), Cell::F(ops.grid.x.node(i)), Cell::I(k as u64), Cell::T(name.clone()), Cell::F(*v)])?;
                }
            }
        }
    }
    Ok(())
}

/// Appends `||z^l f||` for `l = 0..=l_max`.
pub fn decay_rows(w: &mut TableWriter, ops: &Ops, name: &str, t: f64, f: &ScalarField, l_max: u32) -> Result<()> {
    for (l, v) in decay_report(ops, f, l_max) {
        w.row(&[Cell::T(name.into()), Cell::F(t), Cell::I(l as u64), Cell::F(v)])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mpbl-io-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn table_round_trips_and_rejects_wrong_rows() {
        let p = tmp("slopes").join("slopes.csv");
        let mut w = TableWriter::create(&p, SLOPES).unwrap();
        let row = vec![
            Cell::T("error_u_linf".into()),
            Cell::F(0.875),
            Cell::F(0.725),
            Cell::F(1.7086),
            Cell::F(-1.25e-3),
            Cell::F(0.9936),
            Cell::I(6),
            Cell::B(true),
        ];
        w.row(&row).unwrap();
        assert!(w.row(&row[..3]).is_err());
        let mut swapped = row.clone();
        swapped[6] = Cell::F(6.0);
        assert!(w.row(&swapped).is_err());
        assert_eq!(w.finish().unwrap(), 1);
        assert_eq!(read_table(&p, SLOPES).unwrap(), vec![row]);
        assert!(read_table(&p, NORMS).is_err());
    }

    #[test]
    fn text_cells_with_commas_survive() {
        let p = tmp("checks").join("checks.csv");
        let mut w = TableWriter::create(&p, CHECKS).unwrap();
        let row = vec![Cell::T("cutoff".into()), Cell::B(false), Cell::T("phi(0) = 0.9, expected 1".into())];
        w.row(&row).unwrap();
        w.finish().unwrap();
        assert_eq!(read_table(&p, CHECKS).unwrap(), vec![row]);
    }

    #[test]
    fn manifest_round_trips() {
        let p = tmp("manifest").join("manifest.toml");
        let m = Manifest {
            command: "campaign".into(),
            eps: vec![1e-2, 5e-3],
            grid: GridSpec::default().to_string(),
            dt: 1.25e-3,
            n_steps: 400,
            stride: 40,
            wall_clock_s: 12.5,
            status: "ok".into(),
            files: vec!["norms.csv".into()],
        };
        m.write(&p).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);
    }

    #[test]
    fn dump_rejects_a_truncated_payload() {
        let p = tmp("trunc").join("f.txt");
        let f = ScalarField { nx: 2, ny: 3, coord: Coord::Outer, data: vec![1.0; 6] };
        write_field_dump(&p, "f", 0.0, &GridSpec::default(), &f).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let cut: Vec<&str> = text.lines().collect();
        std::fs::write(&p, cut[..cut.len() - 1].join("\n")).unwrap();
        assert!(read_field_dump(&p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn dumps_round_trip_exactly(
            nx in 1usize..6,
            ny in 1usize..9,
            seed in proptest::collection::vec(-1e6f64..1e6, 54),
            scale in -300i32..300,
            layer in any::<bool>(),
            t in 0.0f64..10.0,
        ) {
            let data: Vec<f64> = (0..nx * ny).map(|k| seed[k] * 10f64.powi(scale / 4)).collect();
            let coord = if layer { Coord::Layer } else { Coord::Outer };
            let f = ScalarField { nx, ny, coord, data };
            let p = tmp("prop").join(format!("{nx}-{ny}.txt"));
            write_field_dump(&p, "I1.w", t, &GridSpec::default(), &f).unwrap();
            let back = read_field_dump(&p).unwrap();
            prop_assert_eq!(back.field, f);
            prop_assert_eq!(back.t, t);
            prop_assert_eq!(back.name, "I1.w");
            prop_assert_eq!(back.grid, GridSpec::default().to_string());
        }
    }
}
