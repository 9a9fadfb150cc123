use crate::error::{Error, Result};

/// Observed chi-square(1) statistics `x_1..x_N`, all strictly positive, with
/// optional parallel item identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct StatVector {
    stats: Vec<f64>,
    ids: Option<Vec<String>>,
}

impl StatVector {
    pub fn new(stats: Vec<f64>) -> Result<Self> {
        Self::build(stats, None)
    }

    pub fn with_ids(stats: Vec<f64>, ids: Vec<String>) -> Result<Self> {
        if ids.len() != stats.len() {
            return Err(Error::config(format!(
                "{} ids for {} statistics",
                ids.len(),
                stats.len()
            )));
        }
        Self::build(stats, Some(ids))
    }

    fn build(stats: Vec<f64>, ids: Option<Vec<String>>) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::EmptyInput("no statistics".into()));
        }
        if let Some(i) = stats.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::domain(format!(
                "statistic #{} is {}; all statistics must be finite and > 0",
                i + 1,
                stats[i]
            )));
        }
        Ok(StatVector { stats, ids })
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    /// Identifier of item `i`: the supplied id, or its 1-based position.
    pub fn id(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => (i + 1).to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Option<Vec<String>>) {
        (self.stats, self.ids)
    }
}
