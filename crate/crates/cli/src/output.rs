//! Deterministic result files: scientific number formatting, atomic writes
//! and the run manifest.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Twelve significant digits in scientific notation.
pub fn sci(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

/// Pretty JSON with every float written by [`sci`].
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(sci(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing into memory cannot fail");
    out.push(b'\n');
    out
}

/// In-memory CSV table whose floats are written by [`sci`].
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Table { w }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Num(v) => sci(v),
                Cell::Text(s) => s,
            })
            .collect();
        self.w.write_record(&fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("in-memory flush")
    }
}

/// Output directory whose files are each written through a temporary file
/// and renamed into place.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path(name);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let tmp = target.with_extension("partial");
        std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &to_json_bytes(value))
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub int_tol: f64,
    pub gap_tol: f64,
    pub node_limit: usize,
    pub iteration_limit: usize,
}

impl From<&gridsched_optmodel::SolverOptions> for Tolerances {
    fn from(o: &gridsched_optmodel::SolverOptions) -> Self {
        Tolerances {
            feas_tol: o.feas_tol,
            opt_tol: o.opt_tol,
            int_tol: o.int_tol,
            gap_tol: o.gap_tol,
            node_limit: o.node_limit,
            iteration_limit: o.iteration_limit,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub scenarios_sampled: Option<usize>,
    pub scenarios_kept: Option<usize>,
    pub tolerances: Tolerances,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_keeps_twelve_digits() {
        for v in [0.0, 1.0, -2.5e-7, 123456.789012345, std::f64::consts::PI * 1e12] {
            let s = sci(v);
            assert!(s.contains('e'));
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-11 * v.abs(), "{v} -> {s}");
        }
        assert_eq!(sci(1.5), "1.50000000000e0");
        assert_eq!(sci(-0.0), "0.00000000000e0");
    }

    #[test]
    fn json_floats_are_scientific_and_integers_are_not() {
        #[derive(Serialize)]
        struct S {
            n: usize,
            x: f64,
            nan: f64,
        }
        let text = String::from_utf8(to_json_bytes(&S { n: 3, x: 0.25, nan: f64::NAN })).unwrap();
        assert!(text.contains("\"n\": 3,"));
        assert!(text.contains("\"x\": 2.50000000000e-1"));
        assert!(text.contains("\"nan\": null"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.25));
    }

    #[test]
    fn table_formats_cells() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.row(vec![1usize.into(), 0.5.into(), "x".into()]);
        assert_eq!(String::from_utf8(t.into_bytes()).unwrap(), "a,b,c\n1,5.00000000000e-1,x\n");
    }
}
