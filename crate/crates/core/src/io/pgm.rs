use super::RescaleRange;
use crate::error::{FormatError, Result};
use crate::tensor::Image;

/// Decoded P5 samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

/// An encoded 16-bit PGM and the range its samples span.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm16 {
    pub bytes: Vec<u8>,
    pub range: RescaleRange,
}

struct Header<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.buf.get(self.pos) {
            if b == b'#' {
                while self.buf.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.buf.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.buf.len() {
                FormatError::Truncated {
                    offset: self.pos,
                    needed: 1,
                }
            } else {
                FormatError::Header(format!("expected {what} at byte {start}"))
            });
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| FormatError::Header(format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(FormatError::BadMagic {
            expected: "P5".into(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        }
        .into());
    }
    let mut h = Header { buf: bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::Header("zero image dimension".into()).into());
    }
    if !(1..=65535).contains(&maxval) {
        return Err(FormatError::Header(format!("maxval {maxval} outside 1..=65535")).into());
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        Some(_) => return Err(FormatError::Header("missing whitespace after maxval".into()).into()),
        None => return Err(FormatError::Truncated { offset: h.pos, needed: 1 }.into()),
    }
    let bps = if maxval > 255 { 2 } else { 1 };
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bps))
        .ok_or_else(|| FormatError::Header("image dimensions overflow".into()))?;
    let data = &bytes[h.pos..];
    if data.len() < need {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed: need - data.len(),
        }
        .into());
    }
    let samples: Vec<u16> = if bps == 1 {
        data[..need].iter().map(|&b| b as u16).collect()
    } else {
        data[..need].chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()
    };
    if let Some(s) = samples.iter().find(|&&s| s as usize > maxval) {
        return Err(FormatError::Inconsistent(format!("sample {s} exceeds maxval {maxval}")).into());
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

/// Min-max rescales to `0..=65535` and encodes as 16-bit big-endian P5.
/// A constant image is written as all zeros.
pub fn encode_pgm16(img: &Image) -> Result<Pgm16> {
    let (min, max) = (img.min(), img.max());
    if !min.is_finite() || !max.is_finite() {
        return Err(crate::Error::Validation("image contains non-finite values".into()));
    }
    let spread = max - min;
    let mut bytes = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    bytes.reserve(2 * img.len());
    for &v in img.data() {
        let s = if spread > 0.0 {
            ((v - min) / spread * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    Ok(Pgm16 {
        bytes,
        range: RescaleRange { min, max },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn eight_bit_with_comment() {
        let mut f = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        f.extend_from_slice(&[0, 10, 20, 30, 40, 255]);
        let p = decode_pgm(&f).unwrap();
        assert_eq!((p.width, p.height, p.maxval), (3, 2, 255));
        assert_eq!(p.samples, vec![0, 10, 20, 30, 40, 255]);
    }

    #[test]
    fn sixteen_bit_big_endian() {
        let mut f = b"P5 2 1 1000 ".to_vec();
        f.extend_from_slice(&[0x01, 0x02, 0x03, 0x04]);
        assert_eq!(decode_pgm(&f).unwrap().samples, vec![0x0102, 0x0304]);
    }

    #[test]
    fn errors() {
        assert!(matches!(decode_pgm(b"P2 1 1 255 "), Err(Error::Format(FormatError::BadMagic { .. }))));
        assert!(matches!(
            decode_pgm(b"P5 2 2 255\n\x01\x02"),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        assert!(matches!(decode_pgm(b"P5 2 x"), Err(Error::Format(FormatError::Header(_)))));
        assert!(matches!(decode_pgm(b"P5 1 1 70000 "), Err(Error::Format(FormatError::Header(_)))));
        assert!(matches!(
            decode_pgm(b"P5 1 1 100\n\xc8"),
            Err(Error::Format(FormatError::Inconsistent(_)))
        ));
    }

    #[test]
    fn encode_then_decode() {
        let img = Image::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let Pgm16 { bytes, range } = encode_pgm16(&img).unwrap();
        let p = decode_pgm(&bytes).unwrap();
        assert_eq!(p.maxval, 65535);
        assert_eq!(p.samples[0], 0);
        assert_eq!(p.samples[5], 65535);
        assert_eq!(p.samples[1], 13107);
        assert_eq!((range.min, range.max), (0.0, 5.0));
        let flat = encode_pgm16(&Image::filled(2, 2, 3.0)).unwrap();
        assert!(decode_pgm(&flat.bytes).unwrap().samples.iter().all(|&s| s == 0));
    }
}
