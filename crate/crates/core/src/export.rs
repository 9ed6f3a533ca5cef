//! Solution files.
//!
//! CSV: `index,x0,..,x{d-1},u,residual,role` plus `coincidence` for obstacle
//! runs; one row per point, numbers as `{:.16e}`, `\n` line endings, empty
//! residual on boundary rows. JSON: a [`SolutionRecord`], which reads back
//! bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::obstacle::{Approximation, EpsStep, ObstacleResult};
use crate::operator::{residual_map, MonotoneSource, ScalarField};
use crate::solver::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Usage(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

/// What to write.
#[derive(Debug, Clone, Copy)]
pub enum Export<'a> {
    Dirichlet {
        u: &'a ScalarField,
        source: &'a MonotoneSource,
        report: &'a SolveReport,
    },
    Obstacle(&'a ObstacleResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleRecord {
    pub coincidence: Vec<usize>,
    pub eps_trace: Vec<EpsStep>,
    pub approximation: Approximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub dim: usize,
    pub alpha: f64,
    pub points: Vec<Vec<f64>>,
    pub boundary: Vec<usize>,
    pub u: Vec<f64>,
    /// `None` on boundary points.
    pub residual: Vec<Option<f64>>,
    pub source: MonotoneSource,
    pub report: SolveReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<ObstacleRecord>,
}

impl SolutionRecord {
    pub fn new(what: Export<'_>) -> Self {
        let (u, source, report, obstacle) = match what {
            Export::Dirichlet { u, source, report } => (u, source, report, None),
            Export::Obstacle(res) => (
                &res.u,
                &res.terminal_source,
                &res.report,
                Some(ObstacleRecord {
                    coincidence: res.coincidence.clone(),
                    eps_trace: res.eps_trace.clone(),
                    approximation: res.approximation,
                }),
            ),
        };
        let ps = u.point_set();
        Self {
            dim: ps.dim(),
            alpha: ps.alpha(),
            points: ps.points().map(<[f64]>::to_vec).collect(),
            boundary: ps.boundary().to_vec(),
            u: u.values().to_vec(),
            residual: residual_map(u, source),
            source: source.clone(),
            report: report.clone(),
            obstacle,
        }
    }

    pub fn point_set(&self) -> Result<PointSet> {
        PointSet::new(self.dim, &self.points, &self.boundary, self.alpha)
    }

    pub fn field(&self) -> Result<ScalarField> {
        ScalarField::new(Arc::new(self.point_set()?), self.u.clone())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("solution record serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn export_solution(what: Export<'_>, path: &Path, format: Format) -> Result<()> {
    let text = render_solution(what, format);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// The file contents [`export_solution`] would write.
pub fn render_solution(what: Export<'_>, format: Format) -> String {
    let record = SolutionRecord::new(what);
    match format {
        Format::Json => serde_json::to_string_pretty(&record).expect("solution record serializes") + "\n",
        Format::Csv => solution_csv(&record),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_buffer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn into_text(out: csv::Writer<Vec<u8>>) -> String {
    let bytes = out.into_inner().expect("in-memory writes cannot fail");
    String::from_utf8(bytes).expect("csv output is ASCII")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

fn solution_csv(record: &SolutionRecord) -> String {
    let mut out = csv_buffer();
    let mut is_boundary = vec![false; record.u.len()];
    for &b in &record.boundary {
        is_boundary[b] = true;
    }
    let mut coincident = vec![false; record.u.len()];
    if let Some(obs) = &record.obstacle {
        for &i in &obs.coincidence {
            coincident[i] = true;
        }
    }

    let mut header: Vec<String> = vec!["index".into()];
    header.extend((0..record.dim).map(|k| format!("x{k}")));
    header.extend(["u", "residual", "role"].map(String::from));
    if record.obstacle.is_some() {
        header.push("coincidence".into());
    }
    out.write_record(&header).expect("in-memory write");

    for (i, x) in record.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.iter().map(|&c| num(c)));
        row.push(num(record.u[i]));
        row.push(record.residual[i].map(num).unwrap_or_default());
        row.push(if is_boundary[i] { "boundary" } else { "interior" }.into());
        if record.obstacle.is_some() {
            row.push(coincident[i].to_string());
        }
        out.write_record(&row).expect("in-memory write");
    }
    into_text(out)
}

/// Continuation trace: `step,epsilon,sup_change,sweeps,residual`.
pub fn render_trace(trace: &[EpsStep]) -> String {
    let mut out = csv_buffer();
    out.write_record(["step", "epsilon", "sup_change", "sweeps", "residual"])
        .expect("in-memory write");
    for s in trace {
        out.write_record([
            s.step.to_string(),
            num(s.epsilon),
            num(s.sup_change),
            s.sweeps.to_string(),
            num(s.residual),
        ])
        .expect("in-memory write");
    }
    into_text(out)
}

pub fn write_trace_csv(trace: &[EpsStep], path: &Path) -> Result<()> {
    std::fs::write(path, render_trace(trace)).map_err(|e| Error::io(path, e))
}

/// A solution CSV read back; the exponent is not stored in CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub boundary: Vec<usize>,
    pub coincidence: Option<Vec<bool>>,
}

impl SolutionTable {
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
        let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| {
            col(name).ok_or_else(|| Error::parse(path, format!("missing column {name:?}")))
        };
        let (u_col, role_col) = (need("u")?, need("role")?);
        let coord_cols: Vec<usize> = (0..)
            .map_while(|k| col(&format!("x{k}")))
            .collect();
        if coord_cols.is_empty() {
            return Err(Error::parse(path, "no coordinate columns"));
        }
        let coin_col = col("coincidence");

        let mut table = SolutionTable {
            dim: coord_cols.len(),
            points: Vec::new(),
            u: Vec::new(),
            boundary: Vec::new(),
            coincidence: coin_col.map(|_| Vec::new()),
        };
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = row + 2;
            let float = |c: usize| -> Result<f64> {
                let s = rec.get(c).unwrap_or("");
                s.trim()
                    .parse()
                    .map_err(|_| Error::parse(path, format!("line {line}: bad number {s:?}")))
            };
            table
                .points
                .push(coord_cols.iter().map(|&c| float(c)).collect::<Result<_>>()?);
            table.u.push(float(u_col)?);
            match rec.get(role_col).map(str::trim) {
                Some("boundary") => table.boundary.push(row),
                Some("interior") => {}
                other => {
                    return Err(Error::parse(path, format!("line {line}: bad role {other:?}")));
                }
            }
            if let (Some(c), Some(flags)) = (coin_col, table.coincidence.as_mut()) {
                flags.push(rec.get(c).map(str::trim) == Some("true"));
            }
        }
        Ok(table)
    }

    pub fn point_set(&self, alpha: f64) -> Result<PointSet> {
        PointSet::new(self.dim, &self.points, &self.boundary, alpha)
    }

    pub fn field(&self, alpha: f64) -> Result<ScalarField> {
        ScalarField::new(Arc::new(self.point_set(alpha)?), self.u.clone())
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
