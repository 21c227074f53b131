//! Embedding sets and assignment records, plus their on-disk formats.
//!
//! Two embedding formats are supported:
//!
//! * CSV: header `id[,label],f0,f1,...,f{d-1}`, one sample per line.
//! * Binary: magic `CKEM`, `u32` version (1), `u32` N, `u32` d, N
//!   length-prefixed UTF-8 ids, a one-byte label flag optionally followed
//!   by N length-prefixed labels, then N×d `f32` values row-major. All
//!   integers and floats are little-endian.
//!
//! Vectors are held as `f32`, the precision both formats store, so a binary
//! round trip is bit-exact.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CKEM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(Error::invalid(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Binary => "binary",
        })
    }
}

/// N identified feature vectors with optional ground-truth labels.
///
/// Labels are only ever used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    vectors: Array2<f32>,
    labels: Option<Vec<String>>,
}

impl EmbeddingSet {
    pub fn new(
        ids: Vec<String>,
        vectors: Array2<f32>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, d) = vectors.dim();
        if n == 0 || d == 0 {
            return Err(Error::invalid("embedding set needs N >= 1 and d >= 1"));
        }
        if ids.len() != n {
            return Err(Error::invalid(format!("{} ids for {n} vectors", ids.len())));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::invalid(format!(
                    "{} labels for {n} vectors",
                    labels.len()
                )));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    row: row + 1,
                    id: id.clone(),
                });
            }
        }
        for (row, v) in vectors.outer_iter().enumerate() {
            if let Some(column) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column,
                });
            }
        }
        Ok(Self {
            ids,
            vectors,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &Array2<f32> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> ArrayView1<'_, f32> {
        self.vectors.row(i)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Vectors widened to `f64` for numerical work.
    pub fn to_f64(&self) -> Array2<f64> {
        self.vectors.mapv(f64::from)
    }

    pub fn with_labels(mut self, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.len() {
                return Err(Error::invalid(format!(
                    "{} labels for {} vectors",
                    l.len(),
                    self.len()
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let ids = indices.iter().map(|&i| self.ids[i].clone()).collect();
        let vectors = self.vectors.select(Axis(0), indices);
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i].clone()).collect());
        Self::new(ids, vectors, labels)
    }

    pub fn load(path: impl AsRef<Path>, format: Format) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        match format {
            Format::Csv => read_csv(BufReader::new(file)),
            Format::Binary => {
                let mut bytes = Vec::new();
                BufReader::new(file)
                    .read_to_end(&mut bytes)
                    .map_err(|e| Error::io(path, e))?;
                decode_binary(&bytes)
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, format: Format) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        match format {
            Format::Csv => self.write_csv(&mut w),
            Format::Binary => w.write_all(&self.encode_binary()),
        }
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
    }

    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = vec!["id".to_string()];
        if self.labels.is_some() {
            header.push("label".into());
        }
        header.extend((0..self.dim()).map(|j| format!("f{j}")));
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.vectors.outer_iter().enumerate() {
            w.write_all(self.ids[i].as_bytes())?;
            if let Some(labels) = &self.labels {
                write!(w, ",{}", labels[i])?;
            }
            for x in row {
                write!(w, ",{}", format_sig9(*x))?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn encode_binary(&self) -> Vec<u8> {
        let (n, d) = self.vectors.dim();
        let mut out = Vec::with_capacity(16 + n * (d * 4 + 16));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(d as u32).to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        for id in &self.ids {
            put_str(&mut out, id);
        }
        match &self.labels {
            Some(labels) => {
                out.push(1);
                for l in labels {
                    put_str(&mut out, l);
                }
            }
            None => out.push(0),
        }
        for x in self.vectors.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }
}

/// Nine significant digits, enough to round-trip any `f32`.
fn format_sig9(x: f32) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.8e}", x);
    // Trim trailing mantissa zeros so common values stay readable.
    match s.split_once('e') {
        Some((mantissa, exp)) if mantissa.contains('.') => {
            let m = mantissa.trim_end_matches('0').trim_end_matches('.');
            if exp == "0" {
                m.to_string()
            } else {
                format!("{m}e{exp}")
            }
        }
        _ => s,
    }
}

pub fn read_csv<R: Read>(reader: R) -> Result<EmbeddingSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if header.get(0) != Some("id") {
        return Err(Error::Parse {
            row: 0,
            message: "header must start with `id`".into(),
        });
    }
    let has_labels = header.get(1) == Some("label");
    let first_feature = if has_labels { 2 } else { 1 };
    let d = header.len() - first_feature;
    if d == 0 {
        return Err(Error::Parse {
            row: 0,
            message: "no feature columns".into(),
        });
    }
    for (j, name) in header.iter().skip(first_feature).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::Parse {
                row: 0,
                message: format!("expected column `f{j}`, found `{name}`"),
            });
        }
    }

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let found = record.len().saturating_sub(first_feature);
        if record.len() < first_feature || found != d {
            return Err(Error::Dimension {
                row,
                expected: d,
                found,
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row,
                message: "empty id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { row, id });
        }
        if has_labels {
            labels.push(record[1].to_string());
        }
        for (column, field) in record.iter().skip(first_feature).enumerate() {
            let x: f32 = field.trim().parse().map_err(|_| Error::Parse {
                row,
                message: format!("column f{column}: cannot parse `{field}` as a number"),
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite { row, column });
            }
            values.push(x);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "no data rows".into(),
        });
    }
    let vectors = Array2::from_shape_vec((ids.len(), d), values).expect("row lengths checked");
    EmbeddingSet::new(ids, vectors, has_labels.then_some(labels))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!("truncated while reading {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let b = self.take(len, what)?;
        String::from_utf8(b.to_vec())
            .map_err(|_| Error::Format(format!("{what} is not valid UTF-8")))
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = cur.u32("N")? as usize;
    let d = cur.u32("d")? as usize;
    if n == 0 || d == 0 {
        return Err(Error::Format(format!("N={n}, d={d}; both must be >= 1")));
    }
    let mut ids = Vec::with_capacity(n);
    let mut seen = HashSet::with_capacity(n);
    for row in 1..=n {
        let id = cur.string("id")?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { row, id });
        }
        ids.push(id);
    }
    let labels = match cur.take(1, "label flag")?[0] {
        0 => None,
        1 => Some(
            (0..n)
                .map(|_| cur.string("label"))
                .collect::<Result<Vec<_>>>()?,
        ),
        f => {
            return Err(Error::Format(format!(
                "label flag must be 0 or 1, found {f}"
            )))
        }
    };
    let body = cur.take(n * d * 4, "vector block")?;
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / d + 1,
            column: pos % d,
        });
    }
    let vectors = Array2::from_shape_vec((n, d), values).expect("length checked");
    EmbeddingSet::new(ids, vectors, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Membership came straight from the cross-iterative clustering.
    Normal,
    /// Membership was decided for an abnormal-cluster sample.
    Assigned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub id: String,
    pub cluster_index: usize,
    pub pseudo_label: String,
    pub source: Source,
}

pub fn save_assignments(records: &[AssignmentRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::invalid("no assignment records to save"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_assignments(records, file).map_err(|e| Error::io(path, e))
}

pub fn write_assignments<W: Write>(records: &[AssignmentRecord], w: W) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(true).from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()
}

pub fn load_assignments(path: impl AsRef<Path>) -> Result<Vec<AssignmentRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        out.push(rec.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Writes a 2-D layout as `id,x,y`.
pub fn save_layout(ids: &[String], points: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "id,x,y")?;
        for (id, p) in ids.iter().zip(points.outer_iter()) {
            writeln!(w, "{id},{},{}", p[0], p[1])?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> EmbeddingSet {
        EmbeddingSet::new(
            vec!["a".into(), "b".into(), "c".into()],
            array![
                [1.0, 2.0, 3.0, 4.0],
                [0.5, -1.25, 1e-7, 3.0e8],
                [0.0, 0.0, 0.0, 1.0]
            ],
            Some(vec!["x".into(), "y".into(), "x".into()]),
        )
        .unwrap()
    }

    #[test]
    fn parses_three_row_csv() {
        let text = "id,f0,f1,f2,f3\na,1,2,3,4\nb,5,6,7,8\nc,9,10,11,12\n";
        let set = read_csv(text.as_bytes()).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.dim(), 4);
        assert!(set.labels().is_none());
        assert_eq!(set.vector(2)[3], 12.0);
    }

    #[test]
    fn short_row_reports_dimension_error() {
        let text = "id,f0,f1,f2,f3\na,1,2,3,4\nb,5,6,7\nc,9,10,11,12\n";
        match read_csv(text.as_bytes()) {
            Err(Error::Dimension {
                row,
                expected,
                found,
            }) => {
                assert_eq!((row, expected, found), (2, 4, 3));
            }
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_non_finite() {
        let dup = "id,f0\na,1\na,2\n";
        assert!(matches!(
            read_csv(dup.as_bytes()),
            Err(Error::DuplicateId { row: 2, .. })
        ));
        let nan = "id,f0,f1\na,1,2\nb,NaN,1\n";
        assert!(matches!(
            read_csv(nan.as_bytes()),
            Err(Error::NonFinite { row: 2, column: 0 })
        ));
        let junk = "id,f0\na,abc\n";
        assert!(matches!(
            read_csv(junk.as_bytes()),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn labelled_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let set = sample();
        set.save(&path, Format::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,label,f0,f1,f2,f3\n"));
        assert!(!text.contains('\r'));
        assert_eq!(EmbeddingSet::load(&path, Format::Csv).unwrap(), set);
    }

    #[test]
    fn binary_layout() {
        let set = sample();
        let bytes = set.encode_binary();
        assert_eq!(&bytes[..4], b"CKEM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        // ids: 3 × (4 + 1), flag, labels: 3 × (4 + 1), floats: 12 × 4
        assert_eq!(bytes.len(), 16 + 15 + 1 + 15 + 48);
        assert_eq!(decode_binary(&bytes).unwrap(), set);
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-0.5), "-5e-1");
        assert_eq!(format_sig9(0.1f32).parse::<f32>().unwrap(), 0.1f32);
        let awkward = 1.0f32 / 3.0;
        assert_eq!(format_sig9(awkward).parse::<f32>().unwrap(), awkward);
    }

    fn record(id: &str, source: Source) -> AssignmentRecord {
        AssignmentRecord {
            id: id.into(),
            cluster_index: 0,
            pseudo_label: "M_1".into(),
            source,
        }
    }

    #[test]
    fn single_assignment_is_two_lines() {
        let mut buf = Vec::new();
        write_assignments(&[record("a", Source::Normal)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "id,cluster_index,pseudo_label,source\na,0,M_1,normal\n"
        );
    }

    #[test]
    fn both_sources_serialize_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let recs = vec![record("a", Source::Normal), record("b", Source::Assigned)];
        save_assignments(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(",normal\n") && text.contains(",assigned\n"));
        assert_eq!(load_assignments(&path).unwrap(), recs);
        assert!(save_assignments(&[], &path).is_err());
    }

    #[test]
    fn hundred_assignments_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let recs: Vec<_> = (0..100)
            .map(|i| AssignmentRecord {
                id: format!("img_{i:03}"),
                cluster_index: i % 7,
                pseudo_label: format!("M_{}", i % 7 + 1),
                source: if i % 3 == 0 {
                    Source::Assigned
                } else {
                    Source::Normal
                },
            })
            .collect();
        save_assignments(&recs, &path).unwrap();
        assert_eq!(load_assignments(&path).unwrap(), recs);
    }
}
