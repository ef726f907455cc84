//! Plain-text manifests and binary PGM images.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Ordered `key = value` document. Blank lines and `#` comments are skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Format(format!("line {}: empty key", lineno + 1)));
            }
            kv.set(k, v.trim());
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Inserts or replaces, keeping the first insertion position.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Format(format!("missing key `{key}`")))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Format(format!("cannot parse `{key}` = `{v}`")))
            })
            .transpose()
    }

    pub fn require_parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::Format(format!("missing key `{key}`")))
    }

    /// Comma-separated list value.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|_| Error::Format(format!("cannot parse `{s}` in `{key}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Binary PGM (P5, maxval 255). Values are rounded and clamped to `[0, 255]`.
pub fn encode_pgm(img: &Tensor) -> Result<Vec<u8>> {
    if img.rank() != 2 {
        return Err(Error::dim("PGM export needs an h×w image"));
    }
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(img.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    Ok(out)
}

pub fn write_pgm(path: &Path, img: &Tensor) -> Result<()> {
    fs::write(path, encode_pgm(img)?)?;
    Ok(())
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Tensor> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::Format("only P5 with maxval 255 is supported".into()));
    }
    let w: usize = fields[1].parse().map_err(|_| Error::Format("bad PGM width".into()))?;
    let h: usize = fields[2].parse().map_err(|_| Error::Format("bad PGM height".into()))?;
    let pixels = bytes
        .get(pos..pos + w * h)
        .ok_or_else(|| Error::Format("truncated PGM payload".into()))?;
    Tensor::new(&[h, w], pixels.iter().map(|&b| b as f32).collect())
}

/// Places equally sized images side by side with a one-pixel white gutter.
pub fn panel(images: &[&Tensor]) -> Result<Tensor> {
    let first = images
        .first()
        .ok_or_else(|| Error::dim("empty panel"))?;
    let (h, w) = (first.shape()[0], first.shape()[1]);
    let total_w = images.len() * w + images.len() - 1;
    let mut out = Tensor::full(&[h, total_w], 255.0);
    for (i, img) in images.iter().enumerate() {
        img.ensure_shape(&[h, w], "panel image")?;
        let x0 = i * (w + 1);
        for y in 0..h {
            out.data_mut()[y * total_w + x0..y * total_w + x0 + w]
                .copy_from_slice(&img.data()[y * w..(y + 1) * w]);
        }
    }
    Ok(out)
}
