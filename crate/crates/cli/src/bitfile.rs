//! Bitstream files.
//!
//! Lines starting with `#` carry a JSON object of metadata; every other
//! non-empty line is one stream written with `+` and `-`.

use std::fmt::Write as _;

use robust_beta::Bit;
use serde_json::{Map, Value};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BitFile {
    pub header: Map<String, Value>,
    pub streams: Vec<Vec<Bit>>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct BitFileError {
    pub line: usize,
    pub message: String,
}

impl BitFile {
    pub fn parse(text: &str) -> Result<Self, BitFileError> {
        let mut file = BitFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| BitFileError {
                line: i + 1,
                message,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                match serde_json::from_str::<Value>(meta) {
                    Ok(Value::Object(m)) => file.header.extend(m),
                    Ok(_) => return Err(err("header is not a JSON object".into())),
                    Err(e) => return Err(err(format!("bad header: {e}"))),
                }
                continue;
            }
            let stream = line
                .chars()
                .enumerate()
                .map(|(col, c)| {
                    Bit::from_char(c).ok_or_else(|| {
                        err(format!("unexpected character {c:?} at column {}", col + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            file.streams.push(stream);
        }
        Ok(file)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.header.is_empty() {
            let meta = serde_json::to_string(&self.header).expect("JSON map serializes");
            let _ = writeln!(out, "# {meta}");
        }
        for s in &self.streams {
            out.extend(s.iter().map(|b| b.to_char()));
            out.push('\n');
        }
        out
    }

    /// The single stream of a one-stream file.
    pub fn only_stream(&self) -> Result<&[Bit], BitFileError> {
        match self.streams.as_slice() {
            [s] => Ok(s),
            other => Err(BitFileError {
                line: 1,
                message: format!("expected one stream, found {}", other.len()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut f = BitFile::default();
        f.header.insert("scheme".into(), Value::from("gre"));
        f.streams.push(vec![Bit::Plus, Bit::Minus, Bit::Minus]);
        f.streams.push(vec![Bit::Minus]);
        let text = f.render();
        assert_eq!(text, "# {\"scheme\":\"gre\"}\n+--\n-\n");
        assert_eq!(BitFile::parse(&text).unwrap(), f);
    }

    #[test]
    fn reports_line_of_bad_character() {
        let e = BitFile::parse("# {}\n++\n+x-\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("column 2"));
        assert_eq!(BitFile::parse("# [1]\n").unwrap_err().line, 1);
    }

    #[test]
    fn only_stream_requires_exactly_one() {
        let f = BitFile::parse("+-\n-+\n").unwrap();
        assert!(f.only_stream().is_err());
        assert_eq!(BitFile::parse("+-\n").unwrap().only_stream().unwrap().len(), 2);
    }
}
