//! Latent-space compression of whole micrographs.
//!
//! The image is cut into non-overlapping crops of the autoencoder's input
//! size. Right and bottom remainder tiles are completed by mirroring the
//! image across its edge. Each crop is normalized, encoded in inference mode
//! and stored with its normalization stats so it decodes on its own.
//!
//! Latents and stats are rounded to `f32` when the container is built, so a
//! container decodes to the same image before and after a trip through
//! [`serialize`] / [`deserialize`].

use crate::bytes::{put_f32, put_u16, put_u32, to_f32_precision, Reader};
use crate::error::{Error, FormatError, Result};
use crate::models::AutoencoderParams;
use crate::preprocess::{denormalize, normalize_or_zeros, NormStats};
use crate::published::Modality;
use crate::tensor::{reflect_window, Image, Tensor3};

pub const MAGIC: &[u8; 4] = b"EMLC";
pub const VERSION: u16 = 1;
/// Fixed header length in bytes.
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentBlock {
    pub latent: Tensor3,
    pub stats: NormStats,
    pub tile_row: usize,
    pub tile_col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentContainer {
    pub modality: Modality,
    pub latent_depth: usize,
    pub crop_size: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub orig_height: usize,
    pub orig_width: usize,
    /// Row-major over the tile grid.
    pub blocks: Vec<LatentBlock>,
}

impl LatentContainer {
    pub fn latent_size(&self) -> usize {
        self.crop_size / 8
    }

    /// Latent values per block.
    pub fn values_per_block(&self) -> usize {
        self.latent_size() * self.latent_size() * self.latent_depth
    }

    /// Pixels per tile divided by latent values per tile (`64 / x`).
    pub fn element_ratio(&self) -> f64 {
        (self.crop_size * self.crop_size) as f64 / self.values_per_block() as f64
    }

    /// Serialized length in bytes.
    pub fn byte_len(&self) -> usize {
        HEADER_LEN + self.blocks.len() * (16 + 4 * self.values_per_block())
    }

    fn check(&self) -> std::result::Result<(), FormatError> {
        let bad = |m: String| Err(FormatError::Inconsistent(m));
        if self.latent_depth == 0 || self.latent_depth > u8::MAX as usize {
            return bad(format!("latent depth {} outside 1..=255", self.latent_depth));
        }
        if self.crop_size < 8 || self.crop_size % 8 != 0 {
            return bad(format!("crop size {} is not a positive multiple of 8", self.crop_size));
        }
        if self.orig_height < self.crop_size || self.orig_width < self.crop_size {
            return bad(format!(
                "original size {}x{} is smaller than one {} tile",
                self.orig_height, self.orig_width, self.crop_size
            ));
        }
        let rows = self.orig_height.div_ceil(self.crop_size);
        let cols = self.orig_width.div_ceil(self.crop_size);
        if (rows, cols) != (self.grid_rows, self.grid_cols) {
            return bad(format!(
                "grid {}x{} does not tile a {}x{} image (expected {rows}x{cols})",
                self.grid_rows, self.grid_cols, self.orig_height, self.orig_width
            ));
        }
        if self.blocks.len() != rows * cols {
            return bad(format!("{} blocks for a {rows}x{cols} grid", self.blocks.len()));
        }
        let l = self.latent_size();
        for (i, b) in self.blocks.iter().enumerate() {
            if (b.tile_row, b.tile_col) != (i / cols, i % cols) {
                return bad(format!(
                    "block {i} is tile ({}, {}), expected ({}, {})",
                    b.tile_row,
                    b.tile_col,
                    i / cols,
                    i % cols
                ));
            }
            if b.latent.shape() != (l, l, self.latent_depth) {
                return bad(format!("block {i} latent has shape {:?}", b.latent.shape()));
            }
        }
        Ok(())
    }
}

/// Tiles `img` and encodes every tile.
pub fn compress(params: &AutoencoderParams, modality: Modality, img: &Image) -> Result<LatentContainer> {
    let s = params.crop_size();
    if img.height() < s || img.width() < s {
        return Err(Error::Size(format!(
            "image {}x{} is smaller than one {s}x{s} tile",
            img.height(),
            img.width()
        )));
    }
    let rows = img.height().div_ceil(s);
    let cols = img.width().div_ceil(s);
    let mut blocks = Vec::with_capacity(rows * cols);
    for tile_row in 0..rows {
        for tile_col in 0..cols {
            let tile = reflect_window(img, (tile_row * s) as isize, (tile_col * s) as isize, s, s);
            // Constant tiles encode as zeros and come back as their constant.
            let (norm, stats) = normalize_or_zeros(&tile);
            let stats = NormStats {
                min: to_f32_precision(stats.min),
                mean: to_f32_precision(stats.mean),
            };
            let latent = params.encode_infer(&norm)?;
            let (h, w, d) = latent.shape();
            let latent = Tensor3::new(h, w, d, latent.data().iter().map(|&v| to_f32_precision(v)).collect())?;
            blocks.push(LatentBlock {
                latent,
                stats,
                tile_row,
                tile_col,
            });
        }
    }
    Ok(LatentContainer {
        modality,
        latent_depth: params.latent_depth(),
        crop_size: s,
        grid_rows: rows,
        grid_cols: cols,
        orig_height: img.height(),
        orig_width: img.width(),
        blocks,
    })
}

/// Decodes every block, undoes its normalization and reassembles the image.
pub fn decompress(params: &AutoencoderParams, c: &LatentContainer) -> Result<Image> {
    if params.latent_depth() != c.latent_depth {
        return Err(Error::Validation(format!(
            "container latent depth {} does not match model depth {}",
            c.latent_depth,
            params.latent_depth()
        )));
    }
    if params.crop_size() != c.crop_size {
        return Err(Error::Validation(format!(
            "container crop size {} does not match model crop size {}",
            c.crop_size,
            params.crop_size()
        )));
    }
    c.check()?;
    let s = c.crop_size;
    let mut out = vec![0.0; c.orig_height * c.orig_width];
    for b in &c.blocks {
        let tile = denormalize(&params.decode_infer(&b.latent)?, b.stats)?;
        let (top, left) = (b.tile_row * s, b.tile_col * s);
        let h = s.min(c.orig_height - top);
        let w = s.min(c.orig_width - left);
        for r in 0..h {
            let dst = (top + r) * c.orig_width + left;
            out[dst..dst + w].copy_from_slice(&tile.row(r)[..w]);
        }
    }
    Image::new(c.orig_height, c.orig_width, out)
}

pub fn serialize(c: &LatentContainer) -> Result<Vec<u8>> {
    c.check()?;
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::Validation(format!("{what} {v} does not fit in 32 bits")))
    };
    let mut out = Vec::with_capacity(c.byte_len());
    out.extend_from_slice(MAGIC);
    put_u16(&mut out, VERSION);
    out.push(c.modality.code());
    out.push(c.latent_depth as u8);
    put_u32(&mut out, to_u32(c.crop_size, "crop size")?);
    put_u32(&mut out, to_u32(c.grid_rows, "grid rows")?);
    put_u32(&mut out, to_u32(c.grid_cols, "grid cols")?);
    put_u32(&mut out, to_u32(c.orig_height, "height")?);
    put_u32(&mut out, to_u32(c.orig_width, "width")?);
    for b in &c.blocks {
        put_f32(&mut out, b.stats.min);
        put_f32(&mut out, b.stats.mean);
        put_u32(&mut out, b.tile_row as u32);
        put_u32(&mut out, b.tile_col as u32);
        for &v in b.latent.data() {
            put_f32(&mut out, v);
        }
    }
    Ok(out)
}

pub fn deserialize(bytes: &[u8]) -> Result<LatentContainer> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: version,
            supported: VERSION,
        }
        .into());
    }
    let code = r.u8()?;
    let modality = Modality::from_code(code)
        .ok_or_else(|| FormatError::Header(format!("unknown modality code {code}")))?;
    let latent_depth = r.u8()? as usize;
    let crop_size = r.u32()? as usize;
    let grid_rows = r.u32()? as usize;
    let grid_cols = r.u32()? as usize;
    let orig_height = r.u32()? as usize;
    let orig_width = r.u32()? as usize;
    let mut c = LatentContainer {
        modality,
        latent_depth,
        crop_size,
        grid_rows,
        grid_cols,
        orig_height,
        orig_width,
        blocks: Vec::new(),
    };
    // Validate the header before trusting its sizes.
    if latent_depth == 0 || crop_size < 8 || crop_size % 8 != 0 {
        return Err(FormatError::Inconsistent(format!(
            "latent depth {latent_depth} / crop size {crop_size} are not usable"
        ))
        .into());
    }
    let n_blocks = grid_rows
        .checked_mul(grid_cols)
        .ok_or_else(|| FormatError::Inconsistent("grid size overflows".into()))?;
    let per_block = 16 + 4 * c.values_per_block();
    if n_blocks.saturating_mul(per_block) > r.remaining() {
        return Err(FormatError::Truncated {
            offset: r.position(),
            needed: n_blocks.saturating_mul(per_block) - r.remaining(),
        }
        .into());
    }
    let l = c.latent_size();
    for _ in 0..n_blocks {
        let min = r.f32()? as f64;
        let mean = r.f32()? as f64;
        let tile_row = r.u32()? as usize;
        let tile_col = r.u32()? as usize;
        let data = r.f32s(l * l * latent_depth)?;
        c.blocks.push(LatentBlock {
            latent: Tensor3::new(l, l, latent_depth, data)
                .map_err(|e| FormatError::Inconsistent(e.to_string()))?,
            stats: NormStats { min, mean },
            tile_row,
            tile_col,
        });
    }
    r.finish()?;
    c.check()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AutoencoderPlan;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_ae(depth: usize) -> AutoencoderParams {
        let plan = AutoencoderPlan {
            crop_size: 16,
            channels: [2, 2, 3],
            latent_depth: depth,
        };
        let mut p = AutoencoderParams::init(plan, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        p.prime_batchnorm();
        p
    }

    fn rand_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, |_, _| rng.random_range(10.0..50.0))
    }

    #[test]
    fn tiling_and_shape_round_trip() {
        let ae = small_ae(2);
        let img = rand_image(32, 32, 1);
        let c = compress(&ae, Modality::Tem, &img).unwrap();
        assert_eq!((c.grid_rows, c.grid_cols, c.blocks.len()), (2, 2, 4));
        let img = rand_image(37, 20, 2);
        let c = compress(&ae, Modality::Stem, &img).unwrap();
        assert_eq!((c.grid_rows, c.grid_cols), (3, 2));
        let out = decompress(&ae, &c).unwrap();
        assert_eq!((out.height(), out.width()), (37, 20));
        assert!(compress(&ae, Modality::Tem, &rand_image(15, 40, 3)).is_err());
    }

    #[test]
    fn element_ratio_and_byte_len() {
        for (x, ratio) in [(1, 64.0), (16, 4.0)] {
            let plan = AutoencoderPlan::standard(x);
            let c = LatentContainer {
                modality: Modality::Tem,
                latent_depth: x,
                crop_size: plan.crop_size,
                grid_rows: 1,
                grid_cols: 1,
                orig_height: 160,
                orig_width: 160,
                blocks: vec![],
            };
            assert_eq!(c.values_per_block(), 400 * x);
            assert_eq!(c.element_ratio(), ratio);
        }
        let ae = small_ae(3);
        let c = compress(&ae, Modality::Tem, &rand_image(40, 17, 4)).unwrap();
        let bytes = serialize(&c).unwrap();
        assert_eq!(bytes.len(), 28 + c.blocks.len() * (16 + 4 * 2 * 2 * 3));
        assert_eq!(bytes.len(), c.byte_len());
    }

    #[test]
    fn serialize_round_trip_is_exact() {
        let ae = small_ae(2);
        let c = compress(&ae, Modality::TemStem, &rand_image(30, 45, 5)).unwrap();
        let bytes = serialize(&c).unwrap();
        let back = deserialize(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(serialize(&back).unwrap(), bytes);
        assert_eq!(decompress(&ae, &back).unwrap(), decompress(&ae, &c).unwrap());
    }

    #[test]
    fn constant_tile_restores_its_value() {
        let ae = small_ae(1);
        let img = Image::filled(16, 16, 7.0);
        let out = decompress(&ae, &compress(&ae, Modality::Tem, &img).unwrap()).unwrap();
        let zeros = ae.encode_infer(&Image::zeros(16, 16)).unwrap();
        let want = ae.decode_infer(&zeros).unwrap().map(|v| v + 7.0);
        for (a, b) in out.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn depth_mismatch() {
        let c = compress(&small_ae(2), Modality::Tem, &rand_image(16, 16, 6)).unwrap();
        assert!(matches!(decompress(&small_ae(1), &c), Err(Error::Validation(_))));
    }

    #[test]
    fn parse_errors_are_distinct() {
        let ae = small_ae(1);
        let bytes = serialize(&compress(&ae, Modality::Tem, &rand_image(16, 32, 7)).unwrap()).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        match deserialize(&bad) {
            Err(Error::Format(FormatError::BadMagic { expected, .. })) => assert_eq!(expected, "EMLC"),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            deserialize(&bad),
            Err(Error::Format(FormatError::UnsupportedVersion { found: 9, .. }))
        ));
        assert!(matches!(
            deserialize(&bytes[..bytes.len() - 1]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        assert!(matches!(
            deserialize(&bytes[..10]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        let mut bad = bytes.clone();
        bad[16] = 5; // grid_cols 2 -> 5 no longer tiles the width
        assert!(matches!(deserialize(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(
            deserialize(&bad),
            Err(Error::Format(FormatError::Inconsistent(_)))
        ));
        let mut bad = bytes;
        bad[6] = 7;
        assert!(matches!(deserialize(&bad), Err(Error::Format(FormatError::Header(_)))));
    }
}
