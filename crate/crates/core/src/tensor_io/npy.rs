//! NPY v1.0 reader and writer.
//!
//! Only the subset used for activation dumps is accepted: 2-D, C order,
//! little-endian `f4` or `f8`. `f4` payloads are widened to `f64` on load.
//! Writers always emit `<f8`.

use std::fs;
use std::path::Path;

use super::ActivationMatrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = MAGIC.len() + 2 + 2;
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Header {
    dtype: Dtype,
    shape: (usize, usize),
}

pub fn read_array(path: impl AsRef<Path>) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_npy(&bytes)?.with_source(path.display().to_string()))
}

pub fn write_array(m: &ActivationMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_npy(m)).map_err(|e| Error::io(path, e))
}

/// Writes a row-major `f64` matrix without the activation invariants, so
/// NaN markers (such as an excluded MI diagonal) survive.
pub fn write_raw_f64(path: impl AsRef<Path>, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    let path = path.as_ref();
    assert_eq!(rows * cols, data.len(), "shape does not match data");
    fs::write(path, encode_raw(rows, cols, data)).map_err(|e| Error::io(path, e))
}

pub fn encode_npy(m: &ActivationMatrix) -> Vec<u8> {
    encode_raw(m.rows(), m.cols(), m.data())
}

fn encode_raw(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    let mut dict =
        format!("{{'descr': '<f8', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    // magic + version + length + dict + '\n' must land on a 64-byte boundary
    let unpadded = PREAMBLE_LEN + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(PREAMBLE_LEN + dict.len() + data.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_npy(bytes: &[u8]) -> Result<ActivationMatrix> {
    let (header, offset) = parse_header(bytes)?;
    let (rows, cols) = header.shape;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::MalformedHeader("shape overflows".into()))?;
    let payload = &bytes[offset..];
    let expected = count * header.dtype.size();
    if payload.len() != expected {
        return Err(Error::MalformedHeader(format!(
            "payload has {} bytes, shape ({rows}, {cols}) needs {expected}",
            payload.len()
        )));
    }
    let data: Vec<f64> = match header.dtype {
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect(),
    };
    ActivationMatrix::new(rows, cols, data)
}

fn parse_header(bytes: &[u8]) -> Result<(Header, usize)> {
    let malformed = |msg: &str| Error::MalformedHeader(msg.to_string());
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(malformed("bad magic"));
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(malformed("truncated preamble"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {major}.{minor}"
        )));
    }
    let len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let end = PREAMBLE_LEN + len;
    if bytes.len() < end {
        return Err(malformed("truncated header"));
    }
    let text = std::str::from_utf8(&bytes[PREAMBLE_LEN..end])
        .ok()
        .filter(|t| t.is_ascii())
        .ok_or_else(|| malformed("header is not ASCII"))?;
    if !text.ends_with('\n') {
        return Err(malformed("header not terminated by newline"));
    }
    let entries = parse_dict(text.trim_end())?;

    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    for (key, value) in entries {
        match (key.as_str(), value) {
            ("descr", Value::Str(s)) => descr = Some(s),
            ("fortran_order", Value::Bool(b)) => fortran = Some(b),
            ("shape", Value::Tuple(t)) => shape = Some(t),
            (k, _) => return Err(Error::MalformedHeader(format!("unexpected entry '{k}'"))),
        }
    }
    let descr = descr.ok_or_else(|| malformed("missing 'descr'"))?;
    let fortran = fortran.ok_or_else(|| malformed("missing 'fortran_order'"))?;
    let shape = shape.ok_or_else(|| malformed("missing 'shape'"))?;

    let dtype = match descr.as_str() {
        "<f8" => Dtype::F8,
        "<f4" => Dtype::F4,
        other => {
            return Err(Error::UnsupportedLayout(format!("dtype '{other}'")));
        }
    };
    if fortran {
        return Err(Error::UnsupportedLayout(
            "column-major (fortran_order) data".into(),
        ));
    }
    let shape = match shape.as_slice() {
        &[r, c] => (r, c),
        dims => {
            return Err(Error::UnsupportedLayout(format!(
                "{}-D array, activations must be 2-D",
                dims.len()
            )))
        }
    };
    Ok((Header { dtype, shape }, end))
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Parses the Python dict literal of an NPY header.
fn parse_dict(text: &str) -> Result<Vec<(String, Value)>> {
    let mut p = Cursor {
        chars: text.chars().collect(),
        pos: 0,
    };
    p.expect('{')?;
    let mut entries = Vec::new();
    loop {
        p.skip_ws();
        if p.eat('}') {
            break;
        }
        let key = p.string()?;
        p.skip_ws();
        p.expect(':')?;
        p.skip_ws();
        let value = p.value()?;
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(Error::MalformedHeader(format!("duplicate key '{key}'")));
        }
        entries.push((key, value));
        p.skip_ws();
        if p.eat(',') {
            continue;
        }
        p.skip_ws();
        p.expect('}')?;
        break;
    }
    p.skip_ws();
    if p.pos != p.chars.len() {
        return Err(Error::MalformedHeader(
            "trailing characters after dict".into(),
        ));
    }
    Ok(entries)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::MalformedHeader(format!(
                "expected '{c}' at offset {}",
                self.pos
            )))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(Error::MalformedHeader("expected quoted string".into())),
        };
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == quote {
                let s: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                return Ok(s);
            }
            self.pos += 1;
        }
        Err(Error::MalformedHeader("unterminated string".into()))
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek() {
            Some('\'' | '"') => Ok(Value::Str(self.string()?)),
            Some('(') => {
                self.pos += 1;
                let mut dims = Vec::new();
                loop {
                    self.skip_ws();
                    if self.eat(')') {
                        break;
                    }
                    let w = self.word();
                    let w = w.strip_suffix('L').unwrap_or(&w);
                    let d = w
                        .parse::<usize>()
                        .map_err(|_| Error::MalformedHeader(format!("bad dimension '{w}'")))?;
                    dims.push(d);
                    self.skip_ws();
                    if !self.eat(',') {
                        self.skip_ws();
                        self.expect(')')?;
                        break;
                    }
                }
                Ok(Value::Tuple(dims))
            }
            _ => match self.word().as_str() {
                "True" => Ok(Value::Bool(true)),
                "False" => Ok(Value::Bool(false)),
                w => Err(Error::MalformedHeader(format!("bad value '{w}'"))),
            },
        }
    }
}
