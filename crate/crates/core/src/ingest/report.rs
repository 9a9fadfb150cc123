use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::summary::attach_path;
use crate::error::{Error, Result};
use crate::estimators::{FitResult, LambdaStatus, Method, Pi0Clamp};
use crate::exec::Execution;
use crate::mixture::{decide_with, lfdr_all, threshold_hu, DecisionConfig, MixtureParams};
use crate::stats::StatVector;

/// Per-item LFDR estimates and decisions, with the fit that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LfdrReport {
    pub method: Method,
    pub params: MixtureParams,
    pub u: f64,
    pub h_u: f64,
    pub pi0_clamp: Pi0Clamp,
    pub lambda_status: LambdaStatus,
    pub log_likelihood: Option<f64>,
    pub ids: Vec<String>,
    pub x: Vec<f64>,
    pub lfdr: Vec<f64>,
    pub reject: Vec<bool>,
}

impl LfdrReport {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn rejections(&self) -> usize {
        self.reject.iter().filter(|&&r| r).count()
    }
}

/// Evaluates the fitted LFDR and the decision rule on every statistic.
pub fn build_report(
    stats: &StatVector,
    fit: &FitResult,
    config: &DecisionConfig,
    exec: Execution,
) -> LfdrReport {
    let params = fit.params;
    let ids = match stats.ids() {
        Some(ids) => ids.to_vec(),
        None => (0..stats.len()).map(|i| stats.id(i)).collect(),
    };
    LfdrReport {
        method: fit.method,
        params,
        u: config.u(),
        h_u: threshold_hu(&params, config),
        pi0_clamp: fit.diagnostics.pi0_clamp,
        lambda_status: fit.diagnostics.lambda_status,
        log_likelihood: fit.diagnostics.log_likelihood,
        ids,
        x: stats.stats().to_vec(),
        lfdr: lfdr_all(stats, &params, exec),
        reject: decide_with(stats, &params, config, exec).reject,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Writes the report to `path`; see [`write_report_to`] for the format.
pub fn write_report(report: &LfdrReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    write_report_to(report, &mut w).map_err(|e| attach_path(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a `# key=value` header block followed by `id,x,lfdr,reject` rows in
/// input order. Numbers use the shortest representation that reads back to
/// the same value, so identical inputs give identical bytes.
pub fn write_report_to<W: Write>(report: &LfdrReport, mut w: W) -> Result<()> {
    let header = [
        ("method", report.method.to_string()),
        ("pi0", report.params.pi0().to_string()),
        ("lambda", opt(report.params.lambda())),
        ("u", report.u.to_string()),
        ("h_u", report.h_u.to_string()),
        ("rejections", report.rejections().to_string()),
        ("n", report.len().to_string()),
        ("pi0_clamp", report.pi0_clamp.to_string()),
        ("lambda_status", report.lambda_status.to_string()),
        ("log_likelihood", opt(report.log_likelihood)),
    ];
    let io = |e| Error::Csv(csv::Error::from(e));
    for (k, v) in header {
        writeln!(w, "# {k}={v}").map_err(io)?;
    }
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["id", "x", "lfdr", "reject"])?;
    for i in 0..report.len() {
        csv.write_record([
            report.ids[i].as_str(),
            &report.x[i].to_string(),
            &report.lfdr[i].to_string(),
            if report.reject[i] { "1" } else { "0" },
        ])?;
    }
    csv.flush().map_err(io)?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::domain(format!("report: {}", msg.into()))
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| bad(format!("{key}={v} is not a number")))
}

fn opt_num(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "NA" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

/// Reads a report written by [`write_report`].
pub fn read_report(path: impl AsRef<Path>) -> Result<LfdrReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut header = std::collections::HashMap::new();
    let mut line = String::new();
    loop {
        let peek = input.fill_buf().map_err(|e| Error::io(path, e))?;
        if peek.first() != Some(&b'#') {
            break;
        }
        line.clear();
        input.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        let body = line.trim_start_matches('#').trim();
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| bad(format!("header line '{body}'")))?;
        header.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        header
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| bad(format!("missing header key {k}")))
    };
    let method = match get("method")? {
        "MM" => Method::Mm,
        "ML" => Method::Ml,
        m => return Err(bad(format!("unknown method {m}"))),
    };
    let pi0 = num("pi0", get("pi0")?)?;
    let params = match opt_num("lambda", get("lambda")?)? {
        Some(l) => MixtureParams::new(pi0, l)?,
        None if pi0 == 1.0 => MixtureParams::null(),
        None => return Err(bad("lambda missing with pi0 < 1")),
    };
    let pi0_clamp = match get("pi0_clamp")? {
        "none" => Pi0Clamp::None,
        "low" => Pi0Clamp::Low,
        "high" => Pi0Clamp::High,
        c => return Err(bad(format!("unknown pi0_clamp {c}"))),
    };
    let lambda_status = match get("lambda_status")? {
        "estimated" => LambdaStatus::Estimated,
        "undefined" => LambdaStatus::Undefined,
        "flat" => LambdaStatus::FlatAtLowerBound,
        s => return Err(bad(format!("unknown lambda_status {s}"))),
    };
    let mut report = LfdrReport {
        method,
        params,
        u: num("u", get("u")?)?,
        h_u: num("h_u", get("h_u")?)?,
        pi0_clamp,
        lambda_status,
        log_likelihood: opt_num("log_likelihood", get("log_likelihood")?)?,
        ids: Vec::new(),
        x: Vec::new(),
        lfdr: Vec::new(),
        reject: Vec::new(),
    };
    let rejections = num("rejections", get("rejections")?)? as usize;
    let n = num("n", get("n")?)? as usize;

    let mut rows = csv::Reader::from_reader(input);
    for rec in rows.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(bad(format!("row with {} fields", rec.len())));
        }
        report.ids.push(rec[0].to_string());
        report.x.push(num("x", &rec[1])?);
        report.lfdr.push(num("lfdr", &rec[2])?);
        report.reject.push(match &rec[3] {
            "1" => true,
            "0" => false,
            r => return Err(bad(format!("reject bit {r}"))),
        });
    }
    if report.len() != n || report.rejections() != rejections {
        return Err(bad(format!(
            "header says n={n}, rejections={rejections}; rows give {} and {}",
            report.len(),
            report.rejections()
        )));
    }
    Ok(report)
}
