//! Line-oriented reader shared by the model file formats.
//!
//! Every record is one line of whitespace-separated tokens; the first token
//! names the record. Floats are written with Rust's shortest round-trip
//! formatting, so a write/read cycle reproduces values bit for bit.

use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct LineReader<R> {
    inner: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> LineReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self {
            inner,
            line_no: 0,
            buf: String::new(),
        }
    }

    /// Next non-blank, non-comment line split into tokens.
    pub(crate) fn next_record(&mut self) -> Result<Vec<String>> {
        loop {
            self.buf.clear();
            let read = self
                .inner
                .read_line(&mut self.buf)
                .map_err(|e| Error::ModelFormat(format!("read failed: {e}")))?;
            if read == 0 {
                return Err(Error::ModelFormat(format!(
                    "unexpected end of file after line {}",
                    self.line_no
                )));
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok(line.split_whitespace().map(String::from).collect());
        }
    }

    /// Reads a record whose first token is `key`, returning the rest.
    pub(crate) fn expect(&mut self, key: &str) -> Result<Vec<String>> {
        let mut rec = self.next_record()?;
        if rec.first().map(String::as_str) != Some(key) {
            return Err(self.error(format!("expected `{key}`, found `{}`", rec.join(" "))));
        }
        rec.remove(0);
        Ok(rec)
    }

    /// `key value` record parsed as `T`.
    pub(crate) fn expect_value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let rest = self.expect(key)?;
        match rest.as_slice() {
            [v] => self.parse(v),
            _ => Err(self.error(format!("`{key}` takes one value"))),
        }
    }

    /// `key v1 v2 ...` record parsed as a vector of `T`.
    pub(crate) fn expect_values<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let rest = self.expect(key)?;
        rest.iter().map(|v| self.parse(v)).collect()
    }

    pub(crate) fn parse<T: FromStr>(&self, token: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.error(format!("cannot parse `{token}`")))
    }

    pub(crate) fn error(&self, msg: String) -> Error {
        Error::ModelFormat(format!("line {}: {msg}", self.line_no))
    }
}

pub(crate) fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
