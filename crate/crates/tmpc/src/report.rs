//! Line-oriented reports: one record per line, a record kind followed by
//! `key=value` pairs. No timestamps, so equal inputs give equal bytes.

use std::fmt::{Display, Write as _};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::transport::Metrics;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    lines: Vec<String>,
}

/// A record being built; appended to its report when dropped.
pub struct Line<'a> {
    report: &'a mut Report,
    buf: String,
}

impl Line<'_> {
    pub fn kv(mut self, key: &str, value: impl Display) -> Self {
        let v = value.to_string();
        if v.is_empty() || v.contains([' ', '"', '=']) {
            let _ = write!(self.buf, " {key}={v:?}");
        } else {
            let _ = write!(self.buf, " {key}={v}");
        }
        self
    }

    /// Floats with a fixed number of decimals.
    pub fn f(self, key: &str, value: f64, decimals: usize) -> Self {
        self.kv(key, format!("{value:.decimals$}"))
    }
}

impl Drop for Line<'_> {
    fn drop(&mut self) {
        self.report.lines.push(std::mem::take(&mut self.buf));
    }
}

impl Report {
    pub fn new(command: &str) -> Report {
        let mut r = Report::default();
        r.line("report").kv("format", "tmpc/1").kv("command", command);
        r
    }

    pub fn line(&mut self, kind: &str) -> Line<'_> {
        Line { buf: kind.to_string(), report: self }
    }

    pub fn metrics(&mut self, m: &Metrics) {
        self.line("metrics").kv("rounds", m.rounds).kv("bits", m.bits_sent).kv("bytes", m.bytes_sent).kv("messages", m.messages_sent);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    /// Writes to `path`, or to stdout when there is none.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => fs::write(p, self.text()).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
            None => {
                print!("{}", self.text());
                Ok(())
            }
        }
    }
}

/// Splits a report line into its kind and key/value pairs.
pub fn parse_line(line: &str) -> Option<(String, Vec<(String, String)>)> {
    let mut rest = line.trim();
    let kind_end = rest.find(' ').unwrap_or(rest.len());
    let kind = rest[..kind_end].to_string();
    rest = rest[kind_end..].trim_start();
    let mut pairs = Vec::new();
    while !rest.is_empty() {
        let eq = rest.find('=')?;
        let key = rest[..eq].to_string();
        rest = &rest[eq + 1..];
        let value = if let Some(q) = rest.strip_prefix('"') {
            let mut out = String::new();
            let mut chars = q.char_indices();
            let end = loop {
                match chars.next()? {
                    (i, '"') => break i,
                    (_, '\\') => out.push(chars.next()?.1),
                    (_, c) => out.push(c),
                }
            };
            rest = &q[end + 1..];
            out
        } else {
            let end = rest.find(' ').unwrap_or(rest.len());
            let v = rest[..end].to_string();
            rest = &rest[end..];
            v
        };
        pairs.push((key, value));
        rest = rest.trim_start();
    }
    Some((kind, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_round_trip() {
        let mut r = Report::new("bench-div");
        r.line("param").kv("d", 17).kv("note", "two words").f("avg", 0.3333333, 4);
        r.metrics(&Metrics { rounds: 2, bits_sent: 10, bytes_sent: 3, messages_sent: 1 });
        let t = r.text();
        assert_eq!(t.lines().count(), 3);
        let (kind, kv) = parse_line(t.lines().nth(1).unwrap()).unwrap();
        assert_eq!(kind, "param");
        assert_eq!(kv[1], ("note".into(), "two words".into()));
        assert_eq!(kv[2].1, "0.3333");
        assert_eq!(parse_line("metrics rounds=2").unwrap().1, vec![("rounds".into(), "2".into())]);
    }
}
