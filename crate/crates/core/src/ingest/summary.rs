use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};

use super::{ColumnMapping, ReadOptions, RowPolicy};
use crate::error::{Error, Result};

/// One row of a GWAS summary-statistics file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStatRecord {
    pub id: String,
    pub beta: f64,
    /// Standard error of `beta`; strictly positive.
    pub se: f64,
    /// Published p-value, in [0, 1].
    pub p: Option<f64>,
    /// Unmapped fields, in header order (see [`SummaryReader::extra_headers`]).
    pub extra: Vec<String>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .map_err(|e| Error::io(path, e))
}

fn column(headers: &StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::config(format!("column '{name}' not found in header")))
}

fn parse_f64(rec: &StringRecord, idx: usize, name: &str) -> std::result::Result<f64, String> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| format!("missing field '{name}'"))?;
    raw.trim()
        .parse::<f64>()
        .map_err(|_| format!("{name} '{raw}' is not a number"))
}

/// Streaming reader of [`SummaryStatRecord`]s.
///
/// Rows are parsed one at a time. With [`RowPolicy::Skip`], bad rows are
/// logged, counted in [`malformed`](Self::malformed) and dropped; with
/// [`RowPolicy::Abort`] the iterator yields an error and stops.
pub struct SummaryReader<R: Read = BufReader<File>> {
    reader: csv::Reader<R>,
    record: StringRecord,
    idx: [usize; 3],
    p_idx: Option<usize>,
    extra_idx: Vec<usize>,
    extra_headers: Vec<String>,
    policy: RowPolicy,
    malformed: u64,
    rows: u64,
    done: bool,
}

/// Opens `path` and prepares to stream its records.
///
/// A mapped column missing from the header is a configuration error.
pub fn read_summary_file(
    path: impl AsRef<Path>,
    mapping: &ColumnMapping,
    options: &ReadOptions,
) -> Result<SummaryReader> {
    let path = path.as_ref();
    SummaryReader::from_reader(open(path)?, mapping, options).map_err(|e| attach_path(path, e))
}

pub(super) fn attach_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("is_io_error implies an Io kind"),
        },
        e => e,
    }
}

impl<R: Read> SummaryReader<R> {
    pub fn from_reader(input: R, mapping: &ColumnMapping, options: &ReadOptions) -> Result<Self> {
        let mut reader = ReaderBuilder::new()
            .delimiter(options.delimiter)
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
            return Err(Error::EmptyInput("no header row".into()));
        }
        let idx = [
            column(&headers, &mapping.id)?,
            column(&headers, &mapping.beta)?,
            column(&headers, &mapping.se)?,
        ];
        let p_idx = mapping
            .p
            .as_deref()
            .map(|p| column(&headers, p))
            .transpose()?;
        let mapped: Vec<usize> = idx.iter().copied().chain(p_idx).collect();
        let extra_idx: Vec<usize> = (0..headers.len()).filter(|i| !mapped.contains(i)).collect();
        let extra_headers = extra_idx.iter().map(|&i| headers[i].to_string()).collect();
        Ok(SummaryReader {
            reader,
            record: StringRecord::new(),
            idx,
            p_idx,
            extra_idx,
            extra_headers,
            policy: options.policy,
            malformed: 0,
            rows: 0,
            done: false,
        })
    }

    /// Header names of [`SummaryStatRecord::extra`].
    pub fn extra_headers(&self) -> &[String] {
        &self.extra_headers
    }

    /// Rows skipped so far under [`RowPolicy::Skip`].
    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    /// Data rows read so far, good or bad.
    pub fn rows(&self) -> u64 {
        self.rows
    }

    fn parse(&self) -> std::result::Result<SummaryStatRecord, String> {
        let rec = &self.record;
        let id = rec
            .get(self.idx[0])
            .ok_or("missing id field")?
            .trim()
            .to_string();
        let beta = parse_f64(rec, self.idx[1], "beta")?;
        let se = parse_f64(rec, self.idx[2], "se")?;
        if !beta.is_finite() {
            return Err(format!("beta {beta} is not finite"));
        }
        if !(se > 0.0 && se.is_finite()) {
            return Err(format!("se {se} must be finite and > 0"));
        }
        let p = match self.p_idx {
            None => None,
            Some(i) => {
                let p = parse_f64(rec, i, "p")?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("p {p} outside [0, 1]"));
                }
                Some(p)
            }
        };
        let extra = self
            .extra_idx
            .iter()
            .map(|&i| rec.get(i).unwrap_or("").to_string())
            .collect();
        Ok(SummaryStatRecord {
            id,
            beta,
            se,
            p,
            extra,
        })
    }
}

impl<R: Read> Iterator for SummaryReader<R> {
    type Item = Result<SummaryStatRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            match self.reader.read_record(&mut self.record) {
                Ok(false) => {
                    self.done = true;
                    return None;
                }
                Ok(true) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            self.rows += 1;
            let line = self.record.position().map_or(0, |p| p.line());
            match self.parse() {
                Ok(r) => return Some(Ok(r)),
                Err(reason) => match self.policy {
                    RowPolicy::Abort => {
                        self.done = true;
                        return Some(Err(Error::MalformedRecord { line, reason }));
                    }
                    RowPolicy::Skip => {
                        log::warn!("skipping line {line}: {reason}");
                        self.malformed += 1;
                    }
                },
            }
        }
    }
}

/// A single numeric column, with optional identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct StatColumn {
    pub ids: Option<Vec<String>>,
    pub values: Vec<f64>,
    /// Rows skipped under [`RowPolicy::Skip`].
    pub malformed: u64,
}

/// Reads one numeric column (chi-square, z or t statistics) and, optionally,
/// an id column.
pub fn read_stat_column(
    path: impl AsRef<Path>,
    id_column: Option<&str>,
    value_column: &str,
    options: &ReadOptions,
) -> Result<StatColumn> {
    let path = path.as_ref();
    let mut reader = ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| attach_path(path, e.into()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::EmptyInput(format!(
            "{}: no header row",
            path.display()
        )));
    }
    let v_idx = column(&headers, value_column)?;
    let id_idx = id_column.map(|c| column(&headers, c)).transpose()?;
    let mut out = StatColumn {
        ids: id_idx.map(|_| Vec::new()),
        values: Vec::new(),
        malformed: 0,
    };
    let mut rec = StringRecord::new();
    while reader
        .read_record(&mut rec)
        .map_err(|e| attach_path(path, e.into()))?
    {
        let line = rec.position().map_or(0, |p| p.line());
        let parsed = parse_f64(&rec, v_idx, value_column).and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{value_column} {v} is not finite"))
            }
        });
        let id = match id_idx {
            Some(i) => rec.get(i).map(|s| Some(s.trim().to_string())),
            None => Some(None),
        };
        match (parsed, id) {
            (Ok(v), Some(id)) => {
                out.values.push(v);
                if let (Some(ids), Some(id)) = (out.ids.as_mut(), id) {
                    ids.push(id);
                }
            }
            (Err(reason), _) => row_error(options.policy, &mut out.malformed, line, &reason)?,
            (Ok(_), None) => {
                row_error(options.policy, &mut out.malformed, line, "missing id field")?
            }
        }
    }
    Ok(out)
}

fn row_error(policy: RowPolicy, counter: &mut u64, line: u64, reason: &str) -> Result<()> {
    match policy {
        RowPolicy::Abort => Err(Error::MalformedRecord {
            line,
            reason: reason.to_string(),
        }),
        RowPolicy::Skip => {
            log::warn!("skipping line {line}: {reason}");
            *counter += 1;
            Ok(())
        }
    }
}
