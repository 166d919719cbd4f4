//! File formats: `Σ` and triangle JSON, tail / sample / profile CSV.
//!
//! Floats are written with 17 significant digits so files round-trip exactly
//! and reruns are byte-identical. Writes go through a temporary file in the
//! target directory followed by a rename.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::covariance::CovarianceMatrix3;
use crate::error::{Error, Result};
use crate::geometry::Triangle2D;
use crate::radon::RadonProfile;
use crate::tail::{MinSampleSet, TailGrid, TailSource};

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Pretty JSON whose floats use [`fmt_f64`].
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

/// Temp file in the same directory, then rename over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaFile {
    pub sigma: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TriangleFile {
    pub vertices: [[f64; 2]; 3],
}

/// Parses `{"sigma": [[..],[..],[..]]}`. Admissibility is left to the caller.
pub fn parse_sigma_json(text: &str) -> Result<CovarianceMatrix3<f64>> {
    let f: SigmaFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("sigma JSON: {e}")))?;
    Ok(CovarianceMatrix3::new(f.sigma))
}

pub fn read_sigma_json(path: &Path) -> Result<CovarianceMatrix3<f64>> {
    parse_sigma_json(&read_text(path)?)
}

pub fn write_sigma_json(path: &Path, sigma: &CovarianceMatrix3<f64>) -> Result<()> {
    write_json(path, &SigmaFile { sigma: sigma.rows() })
}

pub fn write_triangle_json(path: &Path, t: &Triangle2D<f64>) -> Result<()> {
    write_json(path, &TriangleFile { vertices: t.to_arrays() })
}

pub fn read_triangle_json(path: &Path) -> Result<Triangle2D<f64>> {
    let f: TriangleFile =
        serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("triangle JSON: {e}")))?;
    Triangle2D::from_arrays(f.vertices)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn parse_field(s: &str, line: usize, col: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad {col} value '{s}'")))
}

/// Rows of a headed CSV file after checking the header.
fn read_csv(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let h = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if h.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse(format!("expected header '{}', found '{}'", header.join(","), h.iter().collect::<Vec<_>>().join(","))));
    }
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| Error::Parse(e.to_string()))?;
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(rows)
}

pub fn tail_csv(tail: &TailGrid) -> Result<Vec<u8>> {
    csv_bytes(
        &["t", "m", "stderr"],
        (0..tail.len()).map(|i| {
            let se = tail.stderr.as_ref().map(|s| fmt_f64(s[i])).unwrap_or_default();
            vec![fmt_f64(tail.t[i]), fmt_f64(tail.m[i]), se]
        }),
    )
}

pub fn write_tail_csv(path: &Path, tail: &TailGrid) -> Result<()> {
    write_atomic(path, &tail_csv(tail)?)
}

/// Reads `t,m,stderr`. An empty stderr column means a noiseless tail; a filled
/// one an empirical tail whose sample count is inferred from `m(1−m)/se²`.
pub fn parse_tail_csv(text: &str) -> Result<TailGrid> {
    let rows = read_csv(text, &["t", "m", "stderr"])?;
    let (mut t, mut m, mut se) = (Vec::new(), Vec::new(), Vec::new());
    for (k, r) in rows.iter().enumerate() {
        let line = k + 2;
        t.push(parse_field(&r[0], line, "t")?);
        m.push(parse_field(&r[1], line, "m")?);
        se.push(if r[2].is_empty() { None } else { Some(parse_field(&r[2], line, "stderr")?) });
    }
    match (se.iter().all(Option::is_none), se.iter().all(Option::is_some)) {
        (true, _) => TailGrid::new(t, m, TailSource::Analytic),
        (_, true) => {
            let se: Vec<f64> = se.into_iter().flatten().collect();
            let mut n: Vec<f64> = m.iter().zip(&se).filter(|(_, s)| **s > 0.0).map(|(m, s)| m * (1.0 - m) / (s * s)).collect();
            n.sort_by(f64::total_cmp);
            let count = n.get(n.len() / 2).map_or(0, |v| v.round() as usize);
            TailGrid::new(t, m, TailSource::Empirical)?.with_stderr(se, count)
        }
        _ => Err(Error::Parse("stderr column must be all empty or all filled".into())),
    }
}

pub fn read_tail_csv(path: &Path) -> Result<TailGrid> {
    parse_tail_csv(&read_text(path)?)
}

pub fn samples_csv(samples: &MinSampleSet) -> Result<Vec<u8>> {
    csv_bytes(&["x_min"], samples.values.iter().map(|v| vec![fmt_f64(*v)]))
}

pub fn write_samples_csv(path: &Path, samples: &MinSampleSet) -> Result<()> {
    write_atomic(path, &samples_csv(samples)?)
}

pub fn parse_samples_csv(text: &str) -> Result<MinSampleSet> {
    let rows = read_csv(text, &["x_min"])?;
    let values = rows.iter().enumerate().map(|(k, r)| parse_field(&r[0], k + 2, "x_min")).collect::<Result<Vec<_>>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite sample".into()));
    }
    Ok(MinSampleSet { values, seed: 0, sigma: None })
}

pub fn read_samples_csv(path: &Path) -> Result<MinSampleSet> {
    parse_samples_csv(&read_text(path)?)
}

pub fn radon_csv(profile: &RadonProfile<f64>) -> Result<Vec<u8>> {
    csv_bytes(&["rho", "value"], profile.rho.iter().zip(&profile.values).map(|(r, v)| vec![fmt_f64(*r), fmt_f64(*v)]))
}

pub fn write_radon_csv(path: &Path, profile: &RadonProfile<f64>) -> Result<()> {
    write_atomic(path, &radon_csv(profile)?)
}

pub fn parse_radon_csv(text: &str) -> Result<RadonProfile<f64>> {
    let rows = read_csv(text, &["rho", "value"])?;
    let mut rho = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        rho.push(parse_field(&r[0], k + 2, "rho")?);
        values.push(parse_field(&r[1], k + 2, "value")?);
    }
    RadonProfile::new(rho, values)
}

/// Generic numeric table, for diff and plot files.
pub fn write_table_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.len());
    if header.len() != columns.len() || columns.iter().any(|c| c.len() != n) {
        return Err(Error::InconsistentInput("table columns differ in length".into()));
    }
    write_atomic(path, &csv_bytes(header, (0..n).map(|i| columns.iter().map(|c| fmt_f64(c[i])).collect()))?)
}
