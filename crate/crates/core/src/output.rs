//! Plot-ready CSV series and JSON reports, plus readers for the same files.
//!
//! Every float is written in scientific notation with 17 significant digits,
//! which round-trips `f64` exactly.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::dynamics::{SweepEntry, Verdict};
use crate::solver::{Sample, Snapshot};

pub const FRONTS_HEADER: [&str; 8] = ["t", "g", "h", "span", "sup_u", "sup_v", "energy", "r0f"];
pub const PROFILE_HEADER: [&str; 3] = ["x", "i_b", "i_m"];
pub const SWEEP_HEADER: [&str; 7] = ["value", "r0", "r0f_initial", "verdict", "h_T", "g_T", "sup_u_T"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unexpected header {found:?}, expected {expected:?}")]
    Header {
        path: PathBuf,
        found: Vec<String>,
        expected: Vec<String>,
    },
    #[error("{path}: row {row}: {reason}")]
    Field {
        path: PathBuf,
        row: usize,
        reason: String,
    },
    #[error("output directory {0} is in use by another invocation")]
    Locked(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// `x` with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose numbers carry 17 significant digits.
struct FullPrecision(PrettyFormatter<'static>);

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
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

/// Serialize `value` as pretty JSON with full-precision floats. Non-finite
/// floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), OutputError> {
    let text = to_json_string(value).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), OutputError> {
    w.flush().map_err(io_err(path))
}

fn check_header<const N: usize>(
    reader: &mut csv::Reader<File>,
    path: &Path,
    expected: [&str; N],
) -> Result<(), OutputError> {
    let found: Vec<String> = reader
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != expected {
        return Err(OutputError::Header {
            path: path.to_path_buf(),
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(())
}

fn parse_floats(record: &csv::StringRecord, path: &Path, row: usize) -> Result<Vec<f64>, OutputError> {
    record
        .iter()
        .map(|field| {
            field.trim().parse::<f64>().map_err(|_| OutputError::Field {
                path: path.to_path_buf(),
                row,
                reason: format!("{field:?} is not a number"),
            })
        })
        .collect()
}

fn read_numeric_table<const N: usize>(
    path: &Path,
    header: [&str; N],
) -> Result<Vec<[f64; N]>, OutputError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    check_header(&mut reader, path, header)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let values = parse_floats(&record, path, i + 1)?;
        let row: [f64; N] = values.try_into().map_err(|_| OutputError::Field {
            path: path.to_path_buf(),
            row: i + 1,
            reason: format!("expected {N} columns"),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// One row of `fronts.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub span: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub energy: f64,
    pub r0f: f64,
}

impl From<&Sample> for FrontRow {
    fn from(s: &Sample) -> Self {
        FrontRow {
            t: s.t,
            g: s.g,
            h: s.h,
            span: s.span,
            sup_u: s.sup_u,
            sup_v: s.sup_v,
            energy: s.energy,
            r0f: s.r0f,
        }
    }
}

pub fn write_fronts_csv(path: &Path, samples: &[Sample]) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    w.write_record(FRONTS_HEADER).map_err(csv_err(path))?;
    for s in samples {
        let row = [s.t, s.g, s.h, s.span, s.sup_u, s.sup_v, s.energy, s.r0f];
        w.write_record(row.map(format_float)).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_fronts_csv(path: &Path) -> Result<Vec<FrontRow>, OutputError> {
    Ok(read_numeric_table(path, FRONTS_HEADER)?
        .into_iter()
        .map(|[t, g, h, span, sup_u, sup_v, energy, r0f]| FrontRow {
            t,
            g,
            h,
            span,
            sup_u,
            sup_v,
            energy,
            r0f,
        })
        .collect())
}

/// File name used for the snapshot at time `t`.
pub fn profile_file_name(t: f64) -> String {
    format!("profile_{t}.csv")
}

pub fn write_profile_csv(path: &Path, snap: &Snapshot) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    w.write_record(PROFILE_HEADER).map_err(csv_err(path))?;
    for i in 0..snap.x.len() {
        let row = [snap.x[i], snap.i_b[i], snap.i_m[i]];
        w.write_record(row.map(format_float)).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Columns of a profile file.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Profile {
    pub x: Vec<f64>,
    pub i_b: Vec<f64>,
    pub i_m: Vec<f64>,
}

pub fn read_profile_csv(path: &Path) -> Result<Profile, OutputError> {
    let mut out = Profile::default();
    for [x, b, m] in read_numeric_table(path, PROFILE_HEADER)? {
        out.x.push(x);
        out.i_b.push(b);
        out.i_m.push(m);
    }
    Ok(out)
}

/// One row of `sweep.csv`; failed runs carry the `"error"` verdict and
/// `NaN` in the columns they could not fill.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub r0: f64,
    pub r0f_initial: f64,
    pub verdict: String,
    pub h_end: f64,
    pub g_end: f64,
    pub sup_u_end: f64,
}

impl SweepRow {
    pub fn from_entry(e: &SweepEntry) -> Self {
        match &e.outcome {
            Ok(o) => SweepRow {
                value: e.value,
                r0: o.report.r0,
                r0f_initial: o.report.r0f_initial,
                verdict: o.classification.verdict.to_string(),
                h_end: o.h_end,
                g_end: o.g_end,
                sup_u_end: o.sup_u_end,
            },
            Err(_) => SweepRow {
                value: e.value,
                r0: f64::NAN,
                r0f_initial: f64::NAN,
                verdict: "error".to_string(),
                h_end: f64::NAN,
                g_end: f64::NAN,
                sup_u_end: f64::NAN,
            },
        }
    }

    pub fn verdict(&self) -> Option<Verdict> {
        match self.verdict.as_str() {
            "spreading" => Some(Verdict::Spreading),
            "vanishing" => Some(Verdict::Vanishing),
            "undetermined" => Some(Verdict::Undetermined),
            _ => None,
        }
    }
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            format_float(r.value),
            format_float(r.r0),
            format_float(r.r0f_initial),
            r.verdict.clone(),
            format_float(r.h_end),
            format_float(r.g_end),
            format_float(r.sup_u_end),
        ])
        .map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, OutputError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    check_header(&mut reader, path, SWEEP_HEADER)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        if record.len() != SWEEP_HEADER.len() {
            return Err(OutputError::Field {
                path: path.to_path_buf(),
                row: i + 1,
                reason: format!("expected {} columns", SWEEP_HEADER.len()),
            });
        }
        let verdict = record[3].to_string();
        let mut numeric = record.clone();
        numeric.truncate(3);
        let mut values = parse_floats(&numeric, path, i + 1)?;
        let tail: csv::StringRecord = record.iter().skip(4).collect();
        values.extend(parse_floats(&tail, path, i + 1)?);
        rows.push(SweepRow {
            value: values[0],
            r0: values[1],
            r0f_initial: values[2],
            verdict,
            h_end: values[3],
            g_end: values[4],
            sup_u_end: values[5],
        });
    }
    Ok(rows)
}

/// Holds an output directory for the lifetime of one command.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, OutputError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                Err(OutputError::Locked(dir.to_path_buf()))
            }
            Err(e) => Err(OutputError::Io { path, source: e }),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(1.31), "1.3100000000000001e0");
        assert_eq!(format_float(-0.25), "-2.5000000000000000e-1");
        for x in [0.1, 1.0 / 3.0, 1e300, -5e-324, 14.547765456010125] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_numbers_use_full_precision() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct T {
            a: f64,
            b: Option<f64>,
            c: Vec<f64>,
        }
        let t = T {
            a: 0.1,
            b: None,
            c: vec![1.0, 2.0 / 3.0],
        };
        let s = to_json_string(&t).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"b\": null"));
        assert_eq!(serde_json::from_str::<T>(&s).unwrap(), t);
        assert!(to_json_string(&f64::NAN).unwrap().starts_with("null"));
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let first = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(OutputError::Locked(_))));
        drop(first);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn sweep_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows = vec![
            SweepRow {
                value: 0.1,
                r0: 1.3,
                r0f_initial: 0.6,
                verdict: "vanishing".into(),
                h_end: 4.5,
                g_end: -4.5,
                sup_u_end: 1e-4,
            },
            SweepRow {
                value: 0.2,
                r0: f64::NAN,
                r0f_initial: f64::NAN,
                verdict: "error".into(),
                h_end: f64::NAN,
                g_end: f64::NAN,
                sup_u_end: f64::NAN,
            },
        ];
        write_sweep_csv(&path, &rows).unwrap();
        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back[0], rows[0]);
        assert_eq!(back[1].verdict, "error");
        assert!(back[1].r0.is_nan());
        assert_eq!(back[0].verdict(), Some(Verdict::Vanishing));
    }

    #[test]
    fn profile_names() {
        assert_eq!(profile_file_name(100.0), "profile_100.csv");
        assert_eq!(profile_file_name(0.5), "profile_0.5.csv");
    }
}
