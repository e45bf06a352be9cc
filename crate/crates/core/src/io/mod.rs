//! Image files: binary PGM (P5) and headerless little-endian `f32`.

mod pgm;

use std::path::{Path, PathBuf};

pub use pgm::{decode_pgm, encode_pgm16, Pgm, Pgm16};

use crate::error::{Error, FormatError, Result};
use crate::tensor::Image;

/// Intensity range a 16-bit PGM was rescaled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleRange {
    pub min: f64,
    pub max: f64,
}

impl RescaleRange {
    /// Maps a stored sample back to the original intensity scale.
    pub fn restore(&self, sample: u16) -> f64 {
        self.min + (self.max - self.min) * sample as f64 / 65535.0
    }

    fn to_text(self) -> String {
        format!("min {:e}\nmax {:e}\n", self.min, self.max)
    }

    fn parse(text: &str) -> Result<Self, FormatError> {
        let mut min = None;
        let mut max = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| FormatError::Header(format!("bad range line {line:?}")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| FormatError::Header(format!("bad range value {value:?}")))?;
            match key {
                "min" => min = Some(v),
                "max" => max = Some(v),
                _ => return Err(FormatError::Header(format!("unknown range key {key:?}"))),
            }
        }
        match (min, max) {
            (Some(min), Some(max)) if min.is_finite() && max.is_finite() && min <= max => Ok(Self { min, max }),
            _ => Err(FormatError::Header("range file needs finite min <= max".into())),
        }
    }
}

/// Path of the text file recording the rescale range of a written PGM.
pub fn range_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".range");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    RawF32,
}

impl ImageFormat {
    /// `.pgm` is PGM; anything else is raw `f32`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("pgm") => ImageFormat::Pgm,
            _ => ImageFormat::RawF32,
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a PGM. A `.range` sidecar next to a 16-bit file maps its samples
/// back to the intensities they were rescaled from.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let pgm = decode_pgm(&read_bytes(path)?)?;
    let sidecar = range_sidecar(path);
    if pgm.maxval > 255 && sidecar.is_file() {
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let range = RescaleRange::parse(&text)?;
        let data = pgm.samples.iter().map(|&s| range.restore(s)).collect();
        return Image::new(pgm.height, pgm.width, data);
    }
    Image::new(pgm.height, pgm.width, pgm.samples.iter().map(|&s| s as f64).collect())
}

/// Writes a 16-bit PGM rescaled to the full sample range, plus the
/// `.range` sidecar needed to undo the rescaling.
pub fn write_pgm16(path: &Path, img: &Image) -> Result<RescaleRange> {
    let Pgm16 { bytes, range } = encode_pgm16(img)?;
    write_bytes(path, &bytes)?;
    write_bytes(&range_sidecar(path), range.to_text().as_bytes())?;
    Ok(range)
}

pub fn decode_raw_f32(bytes: &[u8], width: usize, height: usize) -> Result<Image> {
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Validation("raw image dimensions overflow".into()))?;
    if bytes.len() != 4 * n {
        return Err(FormatError::Inconsistent(format!(
            "raw {width}x{height} f32 image needs {} bytes, file has {}",
            4 * n,
            bytes.len()
        ))
        .into());
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    Image::new(height, width, data)
}

pub fn encode_raw_f32(img: &Image) -> Vec<u8> {
    img.data().iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn read_raw_f32(path: &Path, width: usize, height: usize) -> Result<Image> {
    decode_raw_f32(&read_bytes(path)?, width, height)
}

pub fn write_raw_f32(path: &Path, img: &Image) -> Result<()> {
    write_bytes(path, &encode_raw_f32(img))
}

/// Reads by extension; raw files need `dims = Some((width, height))`.
pub fn read_image(path: &Path, dims: Option<(usize, usize)>) -> Result<Image> {
    match ImageFormat::from_path(path) {
        ImageFormat::Pgm => read_pgm(path),
        ImageFormat::RawF32 => {
            let (w, h) = dims.ok_or_else(|| {
                Error::Validation(format!("{} is raw f32 and needs --width and --height", path.display()))
            })?;
            read_raw_f32(path, w, h)
        }
    }
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    match ImageFormat::from_path(path) {
        ImageFormat::Pgm => write_pgm16(path, img).map(|_| ()),
        ImageFormat::RawF32 => write_raw_f32(path, img),
    }
}
