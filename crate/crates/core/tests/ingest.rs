use std::fs;
use std::io::Write as _;
use std::path::Path;

use lfdr_core::ingest::{
    build_report, load_beta_se, read_report, read_stat_column, read_summary_file, stats_from_z,
    write_report, ColumnMapping, ConvertOptions, ReadOptions, RowPolicy,
};
use lfdr_core::{fit_mm, threshold_hu, DecisionConfig, Error, ErrorClass, Execution, StatVector};
use tempfile::TempDir;

fn mapping() -> ColumnMapping {
    ColumnMapping {
        id: "snp".into(),
        beta: "beta".into(),
        se: "se".into(),
        p: Some("p".into()),
    }
}

fn write(dir: &TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn three_row_fixture() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "s.tsv",
        "snp\tchr\tbeta\tse\tp\nrs1\t1\t0.1\t0.05\t0.0455\nrs2\t2\t-0.3\t0.1\t0.0027\nrs3\tX\t0\t0.2\t1\n",
    );
    let mut reader = read_summary_file(&path, &mapping(), &ReadOptions::default()).unwrap();
    assert_eq!(reader.extra_headers(), ["chr"]);
    let recs: Vec<_> = reader.by_ref().collect::<Result<_, _>>().unwrap();
    assert_eq!(reader.rows(), 3);
    assert_eq!(recs[2].extra, vec!["X".to_string()]);

    let (s, d) = load_beta_se(
        &path,
        &mapping(),
        &ReadOptions::default(),
        &ConvertOptions::default(),
    )
    .unwrap();
    assert_eq!(s.ids().unwrap(), ["rs1", "rs2", "rs3"]);
    assert!((s.stats()[0] - 4.0).abs() < 1e-12);
    assert!((s.stats()[1] - 9.0).abs() < 1e-12);
    assert_eq!(s.stats()[2], 1e-12);
    assert_eq!(d.floored, 1);
    assert_eq!(d.p_checked, 3);
    assert_eq!(d.p_mismatches, 0);
}

#[test]
fn malformed_rows_abort_or_skip() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "bad.tsv",
        "snp\tbeta\tse\tp\nrs1\t0.1\t0.05\t0.0455\nrs2\tNA\t0.1\t0.5\nrs3\t0.1\t-1\t0.5\nrs4\t0.2\t0.1\t7\n",
    );
    let err = load_beta_se(
        &path,
        &mapping(),
        &ReadOptions::default(),
        &ConvertOptions::default(),
    )
    .unwrap_err();
    assert!(
        matches!(err, Error::MalformedRecord { line: 3, .. }),
        "{err}"
    );
    assert_eq!(err.class(), ErrorClass::Domain);

    let read = ReadOptions {
        policy: RowPolicy::Skip,
        ..Default::default()
    };
    let (s, d) = load_beta_se(&path, &mapping(), &read, &ConvertOptions::default()).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(d.skipped, 3);
}

#[test]
fn missing_column_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "s.tsv", "snp\tbeta\tstderr\nrs1\t0.1\t0.05\n");
    let err = read_summary_file(&path, &mapping(), &ReadOptions::default())
        .err()
        .unwrap();
    assert_eq!(err.class(), ErrorClass::Config);
    assert!(err.to_string().contains("'se'"));
}

#[test]
fn empty_and_missing_files() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.tsv", "");
    let err = read_summary_file(&empty, &mapping(), &ReadOptions::default())
        .err()
        .unwrap();
    assert!(matches!(err, Error::EmptyInput(_)));
    assert_eq!(err.class(), ErrorClass::Config);

    let err = read_summary_file(dir.path().join("nope"), &mapping(), &ReadOptions::default())
        .err()
        .unwrap();
    assert_eq!(err.class(), ErrorClass::Io);
}

#[test]
fn stat_column_with_ids() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "t.csv", "gene,t\ng1,2.5\ng2,-1\ng3,oops\n");
    let read = ReadOptions {
        policy: RowPolicy::Skip,
        ..ReadOptions::csv()
    };
    let col = read_stat_column(&path, Some("gene"), "t", &read).unwrap();
    assert_eq!(col.values, vec![2.5, -1.0]);
    assert_eq!(col.ids.unwrap(), ["g1", "g2"]);
    assert_eq!(col.malformed, 1);
    assert!(read_stat_column(&path, None, "t", &ReadOptions::csv()).is_err());
}

fn sample_report(n: usize) -> lfdr_core::ingest::LfdrReport {
    let z: Vec<f64> = (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            if i % 10 == 0 {
                4.0 + u
            } else {
                2.0 * u - 1.0
            }
        })
        .collect();
    let ids = (0..n).map(|i| format!("v{i}")).collect();
    let (s, _) = stats_from_z(&z, Some(ids), &ConvertOptions::default()).unwrap();
    build_report(
        &s,
        &fit_mm(&s),
        &DecisionConfig::new(0.2).unwrap(),
        Execution::default(),
    )
}

#[test]
fn report_round_trip_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let report = sample_report(2000);
    assert!(report.rejections() > 0);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_report(&report, &a).unwrap();
    let back = read_report(&a).unwrap();
    assert_eq!(back, report);
    write_report(&back, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn report_header_matches_rows() {
    let dir = TempDir::new().unwrap();
    let report = sample_report(500);
    let path = dir.path().join("r.csv");
    write_report(&report, &path).unwrap();
    let back = read_report(&path).unwrap();
    assert_eq!(
        back.h_u,
        threshold_hu(&back.params, &DecisionConfig::new(back.u).unwrap())
    );
    for (x, r) in back.x.iter().zip(&back.reject) {
        assert_eq!(*r, *x > back.h_u);
    }
    for (l, r) in back.lfdr.iter().zip(&back.reject) {
        assert_eq!(*r, *l < back.u);
    }
}

#[test]
fn tampered_report_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.csv");
    write_report(&sample_report(50), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let cut: String = text
        .lines()
        .take(text.lines().count() - 1)
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&path, cut).unwrap();
    assert!(read_report(&path).is_err());
}

fn load_rows() -> usize {
    std::env::var("LFDR_LOAD_ROWS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1_000_000)
}

fn write_large(path: &Path, n: usize) {
    let mut w = std::io::BufWriter::new(fs::File::create(path).unwrap());
    writeln!(w, "snp\tchr\tpos\tbeta\tse\tp").unwrap();
    for i in 0..n {
        let beta = ((i * 7919) % 2001) as f64 / 1000.0 - 1.0;
        writeln!(w, "rs{i}\t{}\t{}\t{beta}\t0.5\t0.5", i % 22 + 1, i * 13).unwrap();
    }
}

#[test]
fn streams_a_million_rows() {
    let n = load_rows();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("big.tsv");
    write_large(&path, n);
    let map = ColumnMapping {
        p: None,
        ..mapping()
    };
    let (s, d) = load_beta_se(
        &path,
        &map,
        &ReadOptions::default(),
        &ConvertOptions::default(),
    )
    .unwrap();
    assert_eq!(s.len(), n);
    assert_eq!(d.skipped, 0);
    assert_eq!(s.id(n - 1), format!("rs{}", n - 1));
    let fit = fit_mm(&StatVector::new(s.stats().to_vec()).unwrap());
    assert!((0.0..=1.0).contains(&fit.params.pi0()));
}
