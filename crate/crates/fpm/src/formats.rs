//! PFM (grayscale float) read/write and binary PGM input.

use std::fs;
use std::io::Write;
use std::path::Path;

use fpm_core::RealImage;

use crate::CliError;

/// Writes a grayscale `Pf` file, little-endian, rows stored bottom to top.
pub fn write_pfm(path: &Path, img: &RealImage) -> Result<(), CliError> {
    fs::write(path, encode_pfm(img)).map_err(|e| CliError::io(path, e))
}

pub fn encode_pfm(img: &RealImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 4 * img.len());
    write!(out, "Pf\n{} {}\n-1.0\n", img.cols(), img.rows()).expect("write to Vec");
    for r in (0..img.rows()).rev() {
        for &v in img.row(r) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Reads PFM (`Pf` grayscale, either byte order) or binary PGM (`P5`,
/// 8 or 16 bit). PGM samples are scaled to `[0, 1]` by the maxval.
pub fn read_image(path: &Path) -> Result<RealImage, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_image(&bytes).map_err(|why| CliError::Data(format!("{}: {why}", path.display())))
}

pub fn decode_image(bytes: &[u8]) -> Result<RealImage, String> {
    match bytes.get(..2) {
        Some(b"Pf") => decode_pfm(bytes),
        Some(b"PF") => Err("colour PFM is not supported; expected grayscale \"Pf\"".into()),
        Some(b"P5") => decode_pgm(bytes),
        _ => Err("not a PFM or binary PGM file".into()),
    }
}

/// Header tokenizer: whitespace separated, `#` comments to end of line.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn token(&mut self) -> Result<&'a str, String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| "header is not ASCII".to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, String> {
        let t = self.token()?;
        t.parse().map_err(|_| format!("bad {what} {t:?}"))
    }

    /// Consumes the single whitespace byte that ends the header.
    fn payload(mut self) -> Result<&'a [u8], String> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(&self.bytes[self.pos..])
            }
            _ => Err("missing separator before pixel data".into()),
        }
    }
}

fn dims(h: &mut Header) -> Result<(usize, usize), String> {
    let w: usize = h.number("width")?;
    let ht: usize = h.number("height")?;
    if w == 0 || ht == 0 {
        return Err(format!("empty image {w}x{ht}"));
    }
    Ok((w, ht))
}

fn decode_pfm(bytes: &[u8]) -> Result<RealImage, String> {
    let mut h = Header { bytes, pos: 2 };
    let (w, ht) = dims(&mut h)?;
    let scale: f64 = h.number("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format!("bad scale {scale}"));
    }
    let little = scale < 0.0;
    let data = h.payload()?;
    let n = w * ht;
    if data.len() < 4 * n {
        return Err(format!("expected {} bytes of pixel data, found {}", 4 * n, data.len()));
    }
    let mut out = vec![0.0; n];
    for (i, chunk) in data[..4 * n].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        // File rows run bottom to top.
        let (fr, c) = (i / w, i % w);
        out[(ht - 1 - fr) * w + c] = v as f64;
    }
    RealImage::new(ht, w, out).map_err(|e| e.to_string())
}

fn decode_pgm(bytes: &[u8]) -> Result<RealImage, String> {
    let mut h = Header { bytes, pos: 2 };
    let (w, ht) = dims(&mut h)?;
    let maxval: u32 = h.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let data = h.payload()?;
    let n = w * ht;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    if data.len() < need {
        return Err(format!("expected {need} bytes of pixel data, found {}", data.len()));
    }
    let m = maxval as f64;
    let out: Vec<f64> = if wide {
        data[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / m)
            .collect()
    } else {
        data[..need].iter().map(|&b| b as f64 / m).collect()
    };
    RealImage::new(ht, w, out).map_err(|e| e.to_string())
}

/// Writes an 8-bit `P5` file, clamping to `[0, 1]`. Used for quick looks.
pub fn write_pgm8(path: &Path, img: &RealImage) -> Result<(), CliError> {
    let mut out = Vec::new();
    write!(out, "P5\n{} {}\n255\n", img.cols(), img.rows()).expect("write to Vec");
    out.extend(img.as_slice().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_rows_are_bottom_up() {
        let img = RealImage::from_fn(2, 3, |r, c| (10 * r + c) as f64).unwrap();
        let bytes = encode_pfm(&img);
        let header = b"Pf\n3 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        let first = f32::from_le_bytes(bytes[header.len()..header.len() + 4].try_into().unwrap());
        assert_eq!(first, 10.0);
        assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn big_endian_pfm() {
        let mut bytes = b"Pf\n1 2\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.5f32.to_be_bytes());
        bytes.extend_from_slice(&(-1.0f32).to_be_bytes());
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.as_slice(), &[-1.0, 2.5]);
    }

    #[test]
    fn pgm_with_comments_and_16_bit() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# depth\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255]);
        assert_eq!(decode_image(&bytes).unwrap().as_slice(), &[0.0, 1.0]);

        let mut wide = b"P5 1 1 65535\n".to_vec();
        wide.extend_from_slice(&[0x80, 0x00]);
        let v = decode_image(&wide).unwrap().as_slice()[0];
        assert!((v - 32768.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_image(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(decode_image(b"Pf\n2 2\n-1.0\n\0\0").is_err());
        assert!(decode_image(b"Pf\n0 2\n-1.0\n").is_err());
        let mut nan = b"Pf\n1 1\n-1.0\n".to_vec();
        nan.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_image(&nan).is_err());
    }
}
