//! Yes/No word frequencies in web-archive text.
//!
//! Pages are WET conversion records. Each page is scanned either in full or
//! truncated to its first N characters, and the per-page counts are rolled up
//! into corpus statistics with a uniformity test on the totals.

mod count;
mod wet;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{chi_square_uniform, ChiSquareResult, StatsError};

pub use count::{count_yes_no, YesNoCount};
pub use wet::{open_wet, read_wet_records, WetReader, WetRecord};

/// Truncation length used by the "first 1000 characters" mode.
pub const DEFAULT_TRUNCATE_CHARS: usize = 1000;

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("corrupt WARC header at byte {offset}: {message}")]
    CorruptHeader { offset: u64, message: String },
    #[error("archive read failed: {0}")]
    Io(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlPageStats {
    pub record_id: String,
    pub yes_count: u64,
    pub no_count: u64,
    pub truncated: bool,
    pub chars_scanned: usize,
}

impl CrawlPageStats {
    pub fn from_record(record: &WetRecord, truncate_chars: Option<usize>) -> Self {
        let c = count_yes_no(&record.text, truncate_chars);
        CrawlPageStats {
            record_id: record.record_id.clone(),
            yes_count: c.yes_count,
            no_count: c.no_count,
            truncated: truncate_chars.is_some(),
            chars_scanned: c.chars_scanned,
        }
    }

    pub fn occurrences(&self) -> u64 {
        self.yes_count + self.no_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlAggregate {
    pub pages: usize,
    pub total_yes: u64,
    pub total_no: u64,
    /// total_yes / (total_yes + total_no); absent when neither word occurs.
    pub corpus_yes_fraction: Option<f64>,
    /// Share of pages containing neither word.
    pub neither_fraction: f64,
    pub pages_with_occurrence: usize,
    /// Mean of per-page yes/(yes+no) over pages with at least one occurrence.
    pub mean_page_conditional: Option<f64>,
    pub uniformity_test: Option<ChiSquareResult>,
    pub truncate_chars: Option<usize>,
}

pub fn aggregate_crawl<'a, I>(
    pages: I,
    truncate_chars: Option<usize>,
    alpha: f64,
) -> Result<CrawlAggregate, CrawlError>
where
    I: IntoIterator<Item = &'a CrawlPageStats>,
{
    let mut n_pages = 0usize;
    let (mut total_yes, mut total_no) = (0u64, 0u64);
    let mut with_occurrence = 0usize;
    let mut conditional_sum = 0.0;
    for page in pages {
        n_pages += 1;
        total_yes += page.yes_count;
        total_no += page.no_count;
        if page.occurrences() > 0 {
            with_occurrence += 1;
            conditional_sum += page.yes_count as f64 / page.occurrences() as f64;
        }
    }
    if n_pages == 0 {
        return Err(CrawlError::EmptyCorpus);
    }
    let total = total_yes + total_no;
    let uniformity_test = if total > 0 {
        Some(chi_square_uniform(total_yes, total_no, alpha)?)
    } else {
        crate::stats::check_alpha(alpha)?;
        None
    };
    Ok(CrawlAggregate {
        pages: n_pages,
        total_yes,
        total_no,
        corpus_yes_fraction: (total > 0).then(|| total_yes as f64 / total as f64),
        neither_fraction: (n_pages - with_occurrence) as f64 / n_pages as f64,
        pages_with_occurrence: with_occurrence,
        mean_page_conditional: (with_occurrence > 0)
            .then(|| conditional_sum / with_occurrence as f64),
        uniformity_test,
        truncate_chars,
    })
}

/// Scans archives in order, stopping after `sample` pages when given.
pub fn scan_archives<P: AsRef<Path>>(
    paths: &[P],
    truncate_chars: Option<usize>,
    sample: Option<usize>,
) -> Result<Vec<CrawlPageStats>, CrawlError> {
    let limit = sample.unwrap_or(usize::MAX);
    let mut pages = Vec::new();
    for path in paths {
        if pages.len() >= limit {
            break;
        }
        for record in open_wet(path.as_ref())? {
            pages.push(CrawlPageStats::from_record(&record?, truncate_chars));
            if pages.len() >= limit {
                break;
            }
        }
    }
    Ok(pages)
}

/// One row per page: record_id, yes_count, no_count, truncated, chars_scanned.
pub fn write_page_stats<W: Write>(pages: &[CrawlPageStats], sink: W) -> Result<(), CrawlError> {
    let mut w = csv::Writer::from_writer(sink);
    for p in pages {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| CrawlError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(id: &str, yes: u64, no: u64) -> CrawlPageStats {
        CrawlPageStats {
            record_id: id.into(),
            yes_count: yes,
            no_count: no,
            truncated: true,
            chars_scanned: 1000,
        }
    }

    #[test]
    fn aggregates_by_hand() {
        let pages = vec![page("a", 1, 3), page("b", 0, 0), page("c", 2, 0), page("d", 0, 0)];
        let agg = aggregate_crawl(&pages, Some(1000), 0.05).unwrap();
        assert_eq!(agg.pages, 4);
        assert_eq!((agg.total_yes, agg.total_no), (3, 3));
        assert_eq!(agg.corpus_yes_fraction, Some(0.5));
        assert_eq!(agg.neither_fraction, 0.5);
        assert_eq!(agg.pages_with_occurrence, 2);
        assert_eq!(agg.mean_page_conditional, Some((0.25 + 1.0) / 2.0));
        let u = agg.uniformity_test.unwrap();
        assert_eq!(u.statistic, 0.0);
        assert!(!u.reject_null);
    }

    #[test]
    fn no_occurrences_leave_fraction_undefined() {
        let pages = vec![page("a", 0, 0), page("b", 0, 0)];
        let agg = aggregate_crawl(&pages, None, 0.05).unwrap();
        assert_eq!(agg.neither_fraction, 1.0);
        assert_eq!(agg.corpus_yes_fraction, None);
        assert_eq!(agg.mean_page_conditional, None);
        assert!(agg.uniformity_test.is_none());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            aggregate_crawl(&[], None, 0.05),
            Err(CrawlError::EmptyCorpus)
        ));
    }

    #[test]
    fn table_scale_fraction() {
        // 100 pages, 54 yes and 606 no in total.
        let mut pages: Vec<_> = (0..100).map(|i| page(&i.to_string(), 0, 0)).collect();
        for p in &mut pages[..54] {
            p.yes_count = 1;
        }
        for p in &mut pages[..30] {
            p.no_count = 20;
        }
        pages[99].no_count = 6;
        let agg = aggregate_crawl(&pages, Some(1000), 0.05).unwrap();
        assert_eq!((agg.total_yes, agg.total_no), (54, 606));
        assert!((agg.corpus_yes_fraction.unwrap() - 0.082).abs() < 5e-4);
        assert!(agg.uniformity_test.unwrap().reject_null);
    }

    #[test]
    fn page_rows_are_csv() {
        let mut out = Vec::new();
        write_page_stats(&[page("x", 1, 2)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "record_id,yes_count,no_count,truncated,chars_scanned\nx,1,2,true,1000\n"
        );
    }
}
