//! Array file formats.
//!
//! * CSV, one matrix row per line. Real arrays hold one value per entry;
//!   complex arrays hold `re,im` pairs. Values are written with 17
//!   significant digits so they read back bit-for-bit.
//! * PGM (8- or 16-bit grayscale), linearly mapped to and from `[0, 1]`.
//! * Raw little-endian `f64`, row-major, no header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(path: &Path, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("row {line}: `{field}` is not a number"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "empty file"));
    }
    Ok(rows)
}

fn rectangular(path: &Path, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let cols = rows[0].len();
    let nrows = rows.len();
    let mut flat = Vec::with_capacity(nrows * cols);
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != cols {
            return Err(Error::format(
                path,
                format!("row {i} has {} fields, expected {cols}", row.len()),
            ));
        }
        flat.extend(row);
    }
    Ok(Array2::from_shape_vec((nrows, cols), flat).expect("shape checked"))
}

pub fn write_real_csv(path: impl AsRef<Path>, data: &Array2<f64>) -> Result<()> {
    write_rows(
        path.as_ref(),
        data.rows().into_iter().map(|row| row.iter().map(|&v| fmt(v)).collect()),
    )
}

pub fn read_real_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    rectangular(path, read_rows(path)?)
}

pub fn write_complex_csv(path: impl AsRef<Path>, data: &Array2<Complex64>) -> Result<()> {
    write_rows(
        path.as_ref(),
        data.rows()
            .into_iter()
            .map(|row| row.iter().flat_map(|z| [fmt(z.re), fmt(z.im)]).collect()),
    )
}

pub fn read_complex_csv(path: impl AsRef<Path>) -> Result<Array2<Complex64>> {
    let path = path.as_ref();
    let pairs = rectangular(path, read_rows(path)?)?;
    if pairs.ncols() % 2 != 0 {
        return Err(Error::format(path, "complex CSV needs an even number of fields per row"));
    }
    let cols = pairs.ncols() / 2;
    Ok(Array2::from_shape_fn((pairs.nrows(), cols), |(i, j)| {
        Complex64::new(pairs[[i, 2 * j]], pairs[[i, 2 * j + 1]])
    }))
}

/// Write `data` clamped to `[0, 1]` as binary PGM (maxval 255 or 65535).
pub fn write_pgm(path: impl AsRef<Path>, data: &Array2<f64>, sixteen_bit: bool) -> Result<()> {
    let path = path.as_ref();
    let (rows, cols) = data.dim();
    let maxval: u16 = if sixteen_bit { 65535 } else { 255 };
    let mut bytes = format!("P5\n{cols} {rows}\n{maxval}\n").into_bytes();
    for &v in data.iter() {
        let q = (v.clamp(0.0, 1.0) * maxval as f64).round() as u16;
        if sixteen_bit {
            bytes.extend_from_slice(&q.to_be_bytes());
        } else {
            bytes.push(q as u8);
        }
    }
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

// Next whitespace-delimited header token, skipping `#` comments.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Read a binary (`P5`) or plain (`P2`) PGM as values in `[0, 1]`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let magic = header_token(&bytes, &mut pos);
    let binary = match magic {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::format(path, "not a PGM file (expected P5 or P2)")),
    };
    let mut number = |what: &str| -> Result<usize> {
        header_token(&bytes, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(path, format!("bad or missing {what} in PGM header")))
    };
    let cols = number("width")?;
    let rows = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(path, format!("maxval {maxval} out of range")));
    }
    let count = rows * cols;
    let samples: Vec<usize> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let raster = &bytes[(pos + 1).min(bytes.len())..];
        let width = if maxval > 255 { 2 } else { 1 };
        if raster.len() < count * width {
            return Err(Error::format(path, "truncated PGM raster"));
        }
        if width == 2 {
            raster.chunks_exact(2).take(count).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize).collect()
        } else {
            raster[..count].iter().map(|&b| b as usize).collect()
        }
    } else {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(number("sample")?);
        }
        out
    };
    if let Some(bad) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::format(path, format!("sample {bad} exceeds maxval {maxval}")));
    }
    let scale = maxval as f64;
    Ok(Array2::from_shape_vec((rows, cols), samples.into_iter().map(|v| v as f64 / scale).collect())
        .expect("sample count checked"))
}

/// Row-major little-endian `f64` dump.
pub fn write_raw_f64(path: impl AsRef<Path>, data: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for v in data.iter() {
        out.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Load a square image from `.pgm` or `.csv`. A CSV with as many fields per
/// row as rows is read as real; with twice as many, as `re,im` pairs.
pub fn read_square_image(path: impl AsRef<Path>) -> Result<Array2<Complex64>> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let data = match ext.as_deref() {
        Some("pgm") | Some("pnm") => read_pgm(path)?.mapv(|v| Complex64::new(v, 0.0)),
        Some("csv") => {
            let raw = rectangular(path, read_rows(path)?)?;
            let (r, c) = raw.dim();
            if c == r {
                raw.mapv(|v| Complex64::new(v, 0.0))
            } else if c == 2 * r {
                Array2::from_shape_fn((r, r), |(i, j)| Complex64::new(raw[[i, 2 * j]], raw[[i, 2 * j + 1]]))
            } else {
                return Err(Error::format(
                    path,
                    format!("{r} rows with {c} fields is neither a real nor a complex square image"),
                ));
            }
        }
        _ => return Err(Error::format(path, "expected a .pgm or .csv file")),
    };
    if data.nrows() != data.ncols() {
        return Err(Error::format(
            path,
            format!("image is {}x{}, expected square", data.nrows(), data.ncols()),
        ));
    }
    Ok(data)
}
