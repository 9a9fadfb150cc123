//! Turning files into [`StatVector`](crate::StatVector)s and fitted results
//! into report files.
//!
//! Inputs are delimited text with a header row. Columns are always named
//! explicitly through a [`ColumnMapping`]; nothing is guessed from header
//! names. Malformed rows abort the read unless [`RowPolicy::Skip`] is chosen.

mod convert;
mod report;
mod summary;

pub use convert::{
    load_beta_se, stats_from_beta_se, stats_from_chisq, stats_from_tstats, stats_from_z,
    ConversionDiagnostics, ConvertOptions, TAIL_EPSILON,
};
pub use report::{build_report, read_report, write_report, write_report_to, LfdrReport};
pub use summary::{
    read_stat_column, read_summary_file, StatColumn, SummaryReader, SummaryStatRecord,
};

/// What to do with a row that cannot be parsed or violates a record invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowPolicy {
    #[default]
    Abort,
    /// Drop the row, log it and count it in the diagnostics.
    Skip,
}

/// Names of the input columns that carry each field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub id: String,
    pub beta: String,
    pub se: String,
    /// Optional published p-value, used only for a consistency check.
    pub p: Option<String>,
}

/// Delimited-text reading options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub policy: RowPolicy,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b'\t',
            policy: RowPolicy::Abort,
        }
    }
}

impl ReadOptions {
    pub fn csv() -> Self {
        ReadOptions {
            delimiter: b',',
            ..Default::default()
        }
    }
}
