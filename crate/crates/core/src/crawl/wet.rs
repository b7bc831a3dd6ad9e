//! Streaming reader for WARC/WET archives.
//!
//! Gzip input (including member-concatenated files, as Common Crawl ships
//! them) is detected from the magic bytes; plain WARC text is read as-is.
//! Records are framed by their `Content-Length` header and only `conversion`
//! records are yielded.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::CrawlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WetRecord {
    /// `WARC-Record-ID`, or the target URI when the id is missing.
    pub record_id: String,
    pub target_uri: Option<String>,
    pub text: String,
}

/// Iterator over the conversion records of one archive.
pub struct WetReader<R> {
    inner: R,
    offset: u64,
    done: bool,
}

impl<R: BufRead> WetReader<R> {
    pub fn new(inner: R) -> Self {
        WetReader {
            inner,
            offset: 0,
            done: false,
        }
    }

    fn read_line(&mut self, buf: &mut Vec<u8>) -> Result<usize, CrawlError> {
        buf.clear();
        let n = self
            .inner
            .read_until(b'\n', buf)
            .map_err(|e| CrawlError::Io(e.to_string()))?;
        self.offset += n as u64;
        Ok(n)
    }

    fn next_record(&mut self) -> Result<Option<RawRecord>, CrawlError> {
        let mut line = Vec::new();
        // Skip the blank separator lines between records.
        let start = loop {
            let start = self.offset;
            if self.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            if !trim_eol(&line).is_empty() {
                break start;
            }
        };
        if !trim_eol(&line).starts_with(b"WARC/") {
            return Err(CrawlError::CorruptHeader {
                offset: start,
                message: format!(
                    "expected WARC version line, found {:?}",
                    String::from_utf8_lossy(trim_eol(&line))
                ),
            });
        }

        let mut headers = Vec::new();
        loop {
            let line_start = self.offset;
            if self.read_line(&mut line)? == 0 {
                log::warn!("archive ends inside the header of the record at byte {start}; skipped");
                return Ok(None);
            }
            let l = trim_eol(&line);
            if l.is_empty() {
                break;
            }
            let text = String::from_utf8_lossy(l);
            let Some((name, value)) = text.split_once(':') else {
                return Err(CrawlError::CorruptHeader {
                    offset: line_start,
                    message: format!("malformed header line {text:?}"),
                });
            };
            headers.push((name.trim().to_string(), value.trim().to_string()));
        }

        let header = |name: &str| {
            headers
                .iter()
                .find(|(n, _)| n.eq_ignore_ascii_case(name))
                .map(|(_, v)| v.clone())
        };
        let length: u64 = header("Content-Length")
            .ok_or_else(|| CrawlError::CorruptHeader {
                offset: start,
                message: "missing Content-Length".into(),
            })?
            .parse()
            .map_err(|_| CrawlError::CorruptHeader {
                offset: start,
                message: "Content-Length is not a non-negative integer".into(),
            })?;

        let mut block = Vec::with_capacity(length.min(1 << 24) as usize);
        let got = (&mut self.inner)
            .take(length)
            .read_to_end(&mut block)
            .map_err(|e| CrawlError::Io(e.to_string()))?;
        self.offset += got as u64;
        if (got as u64) < length {
            log::warn!(
                "record at byte {start} declares {length} bytes but only {got} remain; skipped"
            );
            return Ok(None);
        }

        Ok(Some(RawRecord {
            warc_type: header("WARC-Type").unwrap_or_default(),
            record_id: header("WARC-Record-ID"),
            target_uri: header("WARC-Target-URI"),
            block,
        }))
    }
}

struct RawRecord {
    warc_type: String,
    record_id: Option<String>,
    target_uri: Option<String>,
    block: Vec<u8>,
}

fn trim_eol(line: &[u8]) -> &[u8] {
    let mut l = line;
    while let [rest @ .., b'\n' | b'\r'] = l {
        l = rest;
    }
    l
}

impl<R: BufRead> Iterator for WetReader<R> {
    type Item = Result<WetRecord, CrawlError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match self.next_record() {
                Ok(Some(raw)) if raw.warc_type.eq_ignore_ascii_case("conversion") => {
                    let record_id = raw
                        .record_id
                        .or_else(|| raw.target_uri.clone())
                        .unwrap_or_else(|| format!("record@{}", self.offset));
                    return Some(Ok(WetRecord {
                        record_id,
                        target_uri: raw.target_uri,
                        text: String::from_utf8_lossy(&raw.block).into_owned(),
                    }));
                }
                Ok(Some(_)) => continue,
                Ok(None) => self.done = true,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

/// Wraps a byte source, inflating it when it starts with the gzip magic.
pub fn read_wet_records<R: Read + 'static>(source: R) -> Result<WetReader<Box<dyn BufRead>>, CrawlError> {
    let mut buffered = BufReader::new(source);
    let is_gzip = {
        let head = buffered.fill_buf().map_err(|e| CrawlError::Io(e.to_string()))?;
        head.starts_with(&[0x1f, 0x8b])
    };
    let inner: Box<dyn BufRead> = if is_gzip {
        Box::new(BufReader::new(MultiGzDecoder::new(buffered)))
    } else {
        Box::new(buffered)
    };
    Ok(WetReader::new(inner))
}

pub fn open_wet(path: &Path) -> Result<WetReader<Box<dyn BufRead>>, CrawlError> {
    let file = File::open(path).map_err(|e| CrawlError::Io(format!("{}: {e}", path.display())))?;
    read_wet_records(file)
}
