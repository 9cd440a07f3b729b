//! File formats: the `MMCAL1` binary matrix format, plain CSV matrices and PGM images.
//!
//! Binary layout: magic `"MMCAL1\0"`, `u32` rows, `u32` cols, `u8` precision
//! tag (4 or 8), then the row-major little-endian IEEE-754 payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::numeric::{DenseMatrix, Precision, Scalar};

pub const MAGIC: &[u8; 7] = b"MMCAL1\0";
const HEADER_LEN: usize = 7 + 4 + 4 + 1;

/// A matrix read from disk at its stored precision.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    F32(DenseMatrix<f32>),
    F64(DenseMatrix<f64>),
}

impl AnyMatrix {
    pub fn precision(&self) -> Precision {
        match self {
            AnyMatrix::F32(_) => Precision::Bits32,
            AnyMatrix::F64(_) => Precision::Bits64,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnyMatrix::F32(m) => m.shape(),
            AnyMatrix::F64(m) => m.shape(),
        }
    }

    /// Converts to `T` (a no-op copy when the precisions agree).
    pub fn to<T: Scalar>(&self) -> DenseMatrix<T> {
        match self {
            AnyMatrix::F32(m) => m.cast(),
            AnyMatrix::F64(m) => m.cast(),
        }
    }
}

impl From<DenseMatrix<f32>> for AnyMatrix {
    fn from(m: DenseMatrix<f32>) -> Self {
        AnyMatrix::F32(m)
    }
}

impl From<DenseMatrix<f64>> for AnyMatrix {
    fn from(m: DenseMatrix<f64>) -> Self {
        AnyMatrix::F64(m)
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

pub fn encode_matrix<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<u8>> {
    let (rows, cols) = m.shape();
    let rows32 = u32::try_from(rows).map_err(|_| Error::dim("encode_matrix", "too many rows"))?;
    let cols32 =
        u32::try_from(cols).map_err(|_| Error::dim("encode_matrix", "too many columns"))?;
    let width = T::PRECISION.byte_width() as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * width);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows32.to_le_bytes());
    out.extend_from_slice(&cols32.to_le_bytes());
    out.push(width as u8);
    for v in m.as_slice() {
        v.write_le(&mut out);
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<AnyMatrix> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        let at = bytes
            .iter()
            .zip(MAGIC)
            .position(|(a, b)| a != b)
            .unwrap_or(bytes.len().min(MAGIC.len()));
        return Err(parse_err(at, "bad magic, expected MMCAL1"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(parse_err(bytes.len(), "truncated header"));
    }
    let rows = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    let tag = bytes[15];
    let precision = Precision::from_byte_width(tag)
        .ok_or_else(|| parse_err(15, format!("precision tag must be 4 or 8, got {tag}")))?;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(tag as usize))
        .ok_or_else(|| parse_err(7, "dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        let offset = HEADER_LEN + payload.len().min(expected);
        return Err(parse_err(
            offset,
            format!(
                "payload has {} bytes, header implies {expected}",
                payload.len()
            ),
        ));
    }
    Ok(match precision {
        Precision::Bits32 => AnyMatrix::F32(decode_payload(rows, cols, payload)?),
        Precision::Bits64 => AnyMatrix::F64(decode_payload(rows, cols, payload)?),
    })
}

fn decode_payload<T: Scalar>(rows: usize, cols: usize, payload: &[u8]) -> Result<DenseMatrix<T>> {
    let width = T::PRECISION.byte_width() as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in payload.chunks_exact(width).enumerate() {
        let v = T::read_le(chunk);
        if !v.is_finite() {
            return Err(parse_err(HEADER_LEN + i * width, "non-finite value"));
        }
        data.push(v);
    }
    DenseMatrix::new(rows, cols, data)
}

/// Shortest round-trip text for a float, in exponent form outside `[1e-4, 1e16)`.
pub fn fmt_num<T: Scalar>(v: T) -> String {
    let a = v.abs().as_f64();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// One row per line, comma separated, shortest round-trip formatting.
pub fn encode_matrix_csv<T: Scalar>(m: &DenseMatrix<T>) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| fmt_num(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_matrix_csv<T: Scalar>(text: &str) -> Result<DenseMatrix<T>> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        let mut field_start = line_start;
        for field in body.split(',') {
            let v: T = field.trim().parse().map_err(|_| {
                parse_err(field_start, format!("invalid number {:?}", field.trim()))
            })?;
            if !v.is_finite() {
                return Err(parse_err(field_start, "non-finite value"));
            }
            data.push(v);
            count += 1;
            field_start += field.len() + 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(parse_err(
                    line_start,
                    format!("row {rows} has {count} fields, expected {c}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::new(rows, cols.unwrap_or(0), data)
}

/// Reads P2 or P5 PGM (maxval up to 65535), scaling pixels by `1 / maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    let binary = match magic.1.as_slice() {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(parse_err(magic.0, "expected P2 or P5")),
    };
    let (_, width) = header_number(bytes, &mut pos, "width")?;
    let (_, height) = header_number(bytes, &mut pos, "height")?;
    let (max_at, maxval) = header_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(
            max_at,
            format!("maxval must be in 1..=65535, got {maxval}"),
        ));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(0, "image dimensions overflow"))?;
    let scale = 1.0 / maxval as f64;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let raster = bytes.get(pos..).unwrap_or(&[]);
        if raster.len() < n * bpp {
            return Err(parse_err(
                pos + raster.len(),
                format!("raster has {} bytes, expected {}", raster.len(), n * bpp),
            ));
        }
        for (i, px) in raster[..n * bpp].chunks_exact(bpp).enumerate() {
            let v = if bpp == 1 {
                px[0] as usize
            } else {
                u16::from_be_bytes([px[0], px[1]]) as usize
            };
            if v > maxval {
                return Err(parse_err(
                    pos + i * bpp,
                    format!("pixel {v} exceeds maxval {maxval}"),
                ));
            }
            pixels.push(v as f64 * scale);
        }
    } else {
        for _ in 0..n {
            let (at, v) = header_number(bytes, &mut pos, "pixel")?;
            if v > maxval {
                return Err(parse_err(at, format!("pixel {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as f64 * scale);
        }
    }
    Image::try_new(height, width, pixels)
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<(usize, Vec<u8>)> {
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
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(parse_err(start, "unexpected end of file"));
    }
    Ok((start, bytes[start..*pos].to_vec()))
}

/// Next whitespace-delimited decimal and the offset it starts at.
fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<(usize, usize)> {
    let (at, tok) = next_token(bytes, pos)?;
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .map(|v| (at, v))
        .ok_or_else(|| parse_err(at, format!("invalid {what}")))
}

/// Binary P5 with maxval 255; pixels are clamped to `[0, 1]` and rounded.
pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .pixels()
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    fs::read(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

impl MatrixFormat {
    /// `.csv` is CSV; anything else is the binary format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Binary,
        }
    }
}

/// Loads a matrix, choosing the format from the extension. CSV loads as 64-bit.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<AnyMatrix> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    match MatrixFormat::from_path(path) {
        MatrixFormat::Binary => decode_matrix(&bytes),
        MatrixFormat::Csv => {
            let text = String::from_utf8(bytes)
                .map_err(|e| parse_err(e.utf8_error().valid_up_to(), "CSV is not valid UTF-8"))?;
            Ok(AnyMatrix::F64(decode_matrix_csv(&text)?))
        }
    }
}

pub fn save_matrix<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    match MatrixFormat::from_path(path) {
        MatrixFormat::Binary => atomic_write(path, &encode_matrix(m)?),
        MatrixFormat::Csv => atomic_write(path, encode_matrix_csv(m).as_bytes()),
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&read_bytes(path)?)
}

pub fn save_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    atomic_write(path, &encode_pgm(image))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_header_layout() {
        let m = DenseMatrix::from_rows(&[vec![1.0f64, 2.0]]).unwrap();
        let b = encode_matrix(&m).unwrap();
        assert_eq!(&b[..7], b"MMCAL1\0");
        assert_eq!(&b[7..11], &1u32.to_le_bytes());
        assert_eq!(&b[11..15], &2u32.to_le_bytes());
        assert_eq!(b[15], 8);
        assert_eq!(&b[16..24], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 32);
    }

    #[test]
    fn binary_errors_carry_offsets() {
        match decode_matrix(b"MMCAX1\0") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        let mut b = encode_matrix(&DenseMatrix::<f32>::identity(2)).unwrap();
        b[15] = 3;
        assert!(matches!(
            decode_matrix(&b),
            Err(Error::Parse { offset: 15, .. })
        ));
        let mut b = encode_matrix(&DenseMatrix::<f32>::identity(2)).unwrap();
        b.truncate(b.len() - 2);
        assert!(matches!(
            decode_matrix(&b),
            Err(Error::Parse { offset: 30, .. })
        ));
    }

    #[test]
    fn number_format_round_trips() {
        for v in [
            0.0,
            1e-300,
            2.5e-16,
            1.0 / 3.0,
            -7.25,
            1e20,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(2.5e-16), "2.5e-16");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1e-5f32).parse::<f32>().unwrap(), 1e-5f32);
    }

    #[test]
    fn csv_errors_carry_offsets() {
        match decode_matrix_csv::<f64>("1,2\n3,x\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            decode_matrix_csv::<f64>("1,2\n3\n"),
            Err(Error::Parse { offset: 4, .. })
        ));
    }

    #[test]
    fn pgm_scaling() {
        let mut p5 = b"P5\n# comment\n2 1\n255\n".to_vec();
        p5.extend([128u8, 255]);
        let img = decode_pgm(&p5).unwrap();
        assert_eq!((img.height(), img.width()), (1, 2));
        assert_eq!(img.pixels()[0], 128.0 / 255.0);
        assert_eq!(img.pixels()[1], 1.0);

        let p2 = b"P2 2 2 15\n0 15\n3 6\n";
        let img = decode_pgm(p2).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0, 0.2, 0.4]);

        let p5_16 = [b"P5 1 1 1000\n".as_slice(), &500u16.to_be_bytes()].concat();
        assert_eq!(decode_pgm(&p5_16).unwrap().pixels(), &[0.5]);
    }

    #[test]
    fn pgm_errors() {
        assert!(matches!(
            decode_pgm(b"P6 1 1 255\n\0"),
            Err(Error::Parse { offset: 0, .. })
        ));
        assert!(matches!(
            decode_pgm(b"P2 1 1 0\n0"),
            Err(Error::Parse { offset: 7, .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5 2 2 255\n\0"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P2 1 1 9\n12"),
            Err(Error::Parse { offset: 9, .. })
        ));
    }

    #[test]
    fn pgm_write_read() {
        let img = Image::new(2, 3, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        let back = decode_pgm(&encode_pgm(&img)).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 0.5 / 255.0);
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mmcal");
        save_matrix(&p, &DenseMatrix::<f64>::identity(3)).unwrap();
        save_matrix(&p, &DenseMatrix::<f64>::identity(2)).unwrap();
        assert_eq!(load_matrix(&p).unwrap().shape(), (2, 2));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(
            load_matrix(dir.path().join("missing.mmcal")),
            Err(Error::Io { .. })
        ));
    }
}
