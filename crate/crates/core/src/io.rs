//! PGM image and CSV vector I/O.
//!
//! Images are exchanged as netpbm PGM, both ASCII (P2) and binary (P5) with
//! 8- or 16-bit samples, and held in memory as matrices of intensities in
//! [0, 1] (value / maxval). CSV writers print floats with Rust's shortest
//! round-trip formatting, so reading a file back reproduces the written
//! values bit for bit.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Grayscale image with intensities in [0, 1], row-major pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    /// rows × cols intensity matrix; entry (i, j) is the pixel in image row
    /// i, column j.
    pub pixels: DMatrix<f64>,
}

impl GrayImage {
    pub fn rows(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn cols(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }
}

fn parse_pgm_tokens(data: &[u8]) -> Result<GrayImage> {
    // Header: magic, width, height, maxval, separated by whitespace and
    // optional '#' comments; then raster data.
    let mut pos = 0usize;
    let mut tokens: Vec<String> = Vec::new();
    let magic_is_binary;

    fn skip_ws_and_comments(data: &[u8], mut pos: usize) -> usize {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                return pos;
            }
        }
    }

    fn next_token(data: &[u8], pos: &mut usize) -> Result<String> {
        *pos = skip_ws_and_comments(data, *pos);
        let start = *pos;
        while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::InvalidInput("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
    }

    let magic = next_token(data, &mut pos)?;
    match magic.as_str() {
        "P2" => magic_is_binary = false,
        "P5" => magic_is_binary = true,
        other => {
            return Err(Error::InvalidInput(format!(
                "unsupported netpbm magic '{other}', expected P2 or P5"
            )))
        }
    }
    for _ in 0..3 {
        tokens.push(next_token(data, &mut pos)?);
    }
    let width: usize = tokens[0]
        .parse()
        .map_err(|_| Error::InvalidInput("bad PGM width".into()))?;
    let height: usize = tokens[1]
        .parse()
        .map_err(|_| Error::InvalidInput("bad PGM height".into()))?;
    let maxval: u32 = tokens[2]
        .parse()
        .map_err(|_| Error::InvalidInput("bad PGM maxval".into()))?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("empty PGM image".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::InvalidInput(format!(
            "PGM maxval must be in 1..=65535, got {maxval}"
        )));
    }

    let count = width * height;
    let mut pixels = DMatrix::zeros(height, width);
    if magic_is_binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let needed = count * bytes_per;
        if data.len() < pos + needed {
            return Err(Error::InvalidInput("truncated PGM raster".into()));
        }
        for i in 0..count {
            let raw = if bytes_per == 1 {
                data[pos + i] as u32
            } else {
                // Big-endian per the netpbm spec.
                ((data[pos + 2 * i] as u32) << 8) | data[pos + 2 * i + 1] as u32
            };
            pixels[(i / width, i % width)] = raw as f64 / maxval as f64;
        }
    } else {
        for i in 0..count {
            let token = next_token(data, &mut pos)?;
            let raw: u32 = token
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad PGM sample '{token}'")))?;
            if raw > maxval {
                return Err(Error::InvalidInput(format!(
                    "PGM sample {raw} exceeds maxval {maxval}"
                )));
            }
            pixels[(i / width, i % width)] = raw as f64 / maxval as f64;
        }
    }
    Ok(GrayImage { pixels })
}

/// Read a PGM (P2 or P5) image.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let mut data = Vec::new();
    File::open(path)?.read_to_end(&mut data)?;
    parse_pgm_tokens(&data)
}

/// Write a binary (P5) 8-bit PGM; intensities are clamped to [0, 1] and
/// rounded to the nearest of 256 levels.
pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let (h, w) = (image.rows(), image.cols());
    write!(out, "P5\n{w} {h}\n255\n")?;
    let mut raster = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            let v = (image.pixels[(i, j)].clamp(0.0, 1.0) * 255.0).round() as u8;
            raster.push(v);
        }
    }
    out.write_all(&raster)?;
    Ok(())
}

/// Write columns of equal length as CSV with the given header line.
pub fn write_csv_columns(path: impl AsRef<Path>, header: &str, columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    for c in columns {
        if c.len() != rows {
            return Err(Error::dims("CSV columns must have equal length"));
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for r in 0..rows {
        line.clear();
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{}", col[r]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Read a CSV written by this crate: returns (header fields, columns).
pub fn read_csv_columns(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV file".into()))??;
    let header: Vec<String> = header_line
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::InvalidInput(format!(
                "CSV row has {} fields, header has {}",
                fields.len(),
                header.len()
            )));
        }
        for (i, f) in fields.iter().enumerate() {
            columns[i].push(
                f.trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad CSV number '{f}'")))?,
            );
        }
    }
    Ok((header, columns))
}
