use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bouss_core::mesh::Mesh;
use bouss_core::verify::NO_RATE;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// Printed as [`NO_RATE`]: a rate that is not claimed or a column that
    /// does not apply to the row.
    Missing,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }

    /// Full precision: 17 significant digits, scientific notation.
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => NO_RATE.to_string(),
        }
    }

    fn to_display(&self, rate: bool) -> String {
        match self {
            Cell::Num(v) if rate => format!("{v:.4}"),
            Cell::Num(v) => format!("{v:.4e}"),
            other => other.to_csv(),
        }
    }
}

/// A result table with a caption and named columns, rows in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub caption: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(caption: impl Into<String>, headers: Vec<String>) -> Self {
        Self { caption: caption.into(), headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Index of the column named `name`.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Writes `# caption`, the header row and the data rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.caption)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.write_csv(BufWriter::new(f))
    }

    /// Aligned text rendering for the console; rates get four decimals.
    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().zip(&self.headers).map(|(c, h)| c.to_display(h.starts_with("rate"))).collect())
            .collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.headers[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |vals: Vec<&str>| {
            vals.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let mut s = format!("{}\n", self.caption);
        s += &line(self.headers.iter().map(String::as_str).collect());
        s.push('\n');
        for r in &cells {
            s += &line(r.iter().map(String::as_str).collect());
            s.push('\n');
        }
        s
    }
}

/// Point data attached to a VTK snapshot. Values live on mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum VtkField {
    Scalar { name: String, values: Vec<f64> },
    Vector { name: String, values: Vec<[f64; 2]> },
}

/// Legacy ASCII unstructured grid with triangle cells (type 5).
pub fn write_vtk<W: Write>(mut out: W, mesh: &Mesh, title: &str, fields: &[VtkField]) -> Result<()> {
    if fields.is_empty() {
        bail!("no fields to write");
    }
    let nv = mesh.n_vertices();
    for f in fields {
        let (name, len) = match f {
            VtkField::Scalar { name, values } => (name, values.len()),
            VtkField::Vector { name, values } => (name, values.len()),
        };
        if len != nv {
            bail!("field `{name}` has {len} values for {nv} points");
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1])?;
    }
    let nt = mesh.n_triangles();
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {nv}")?;
    for f in fields {
        match f {
            VtkField::Scalar { name, values } => {
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for v in values {
                    writeln!(out, "{v:.16e}")?;
                }
            }
            VtkField::Vector { name, values } => {
                writeln!(out, "VECTORS {name} double")?;
                for v in values {
                    writeln!(out, "{:.16e} {:.16e} 0", v[0], v[1])?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_vtk_file(path: &Path, mesh: &Mesh, title: &str, fields: &[VtkField]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_vtk(BufWriter::new(f), mesh, title, fields)
}

/// Output directory and `run.log` shared by the cells of one experiment.
pub struct RunContext {
    out: PathBuf,
    log: Mutex<BufWriter<File>>,
    start: Instant,
    quiet: bool,
}

impl RunContext {
    /// Creates `out` and `out/snapshots` and opens `out/run.log`.
    pub fn create(out: &Path) -> Result<Self> {
        fs::create_dir_all(out.join("snapshots")).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("run.log");
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { out: out.to_path_buf(), log: Mutex::new(BufWriter::new(f)), start: Instant::now(), quiet: false })
    }

    /// Log lines go to `run.log` only, not to stderr.
    pub fn quiet(mut self) -> Self {
        self.quiet = true;
        self
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn snapshot_path(&self, name: &str) -> PathBuf {
        self.out.join("snapshots").join(name)
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        let line = format!("[{:9.3}s] {}", self.start.elapsed().as_secs_f64(), msg.as_ref());
        if !self.quiet {
            eprintln!("{line}");
        }
        let mut f = self.log.lock().unwrap_or_else(|e| e.into_inner());
        // a failing log write must not abort a run
        let _ = writeln!(f, "{line}");
        let _ = f.flush();
    }
}
