//! Convolutional denoising autoencoder with a `(s/8) × (s/8) × x` latent
//! space for `s × s` single-channel crops (20×20×x for 160×160).
//!
//! Encoder: four 3×3 convolutions with strides 2, 2, 2, 1 and channels
//! `c1, c2, c3, x`. Decoder: three stages of nearest-neighbour 2× upsampling
//! followed by a 3×3 convolution (channels `c3, c2, c1`), a 3×3 convolution to
//! one channel without batch-norm or activation, and a parameter-free
//! identity layer. Every other convolution is followed by batch-norm and ReLU.

use rand::Rng;

use super::conv::{conv_backward, conv_forward, upsample2, upsample2_backward, ConvShape, K};
use super::{Gradients, Mode, Parameters};
use crate::error::{Error, Result};
use crate::tensor::{Image, Tensor3};
use crate::training::batchnorm::{BatchNorm, BnCache};
use crate::training::init::xavier_init;

/// Latent depths with published models.
pub const LATENT_DEPTHS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

/// Crop side length of the published models.
pub const CROP_SIZE: usize = 160;

/// Size and width of an autoencoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutoencoderPlan {
    pub crop_size: usize,
    /// Encoder channels before the latent layer (mirrored by the decoder).
    pub channels: [usize; 3],
    pub latent_depth: usize,
}

impl AutoencoderPlan {
    /// 160×160 crops, channels 32, 64, 128.
    pub fn standard(latent_depth: usize) -> Self {
        Self {
            crop_size: CROP_SIZE,
            channels: [32, 64, 128],
            latent_depth,
        }
    }

    pub fn latent_size(&self) -> usize {
        self.crop_size / 8
    }

    pub fn validate(&self) -> Result<()> {
        if self.crop_size < 8 || self.crop_size % 8 != 0 {
            return Err(Error::Validation(format!(
                "crop size must be a positive multiple of 8, got {}",
                self.crop_size
            )));
        }
        if self.channels.contains(&0) {
            return Err(Error::Validation("channel counts must be positive".into()));
        }
        if self.latent_depth == 0 || self.latent_depth > u8::MAX as usize {
            return Err(Error::Validation(format!(
                "latent depth must be in 1..=255, got {}",
                self.latent_depth
            )));
        }
        Ok(())
    }
}

/// 3×3 convolution with optional 2× upsampling before it and optional
/// batch-norm and ReLU after it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub c_in: usize,
    pub c_out: usize,
    pub stride: usize,
    pub upsample: bool,
    /// `[ky][kx][c_in][c_out]`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub batchnorm: Option<BatchNorm>,
    pub relu: bool,
}

impl ConvLayer {
    fn xavier<R: Rng + ?Sized>(
        c_in: usize,
        c_out: usize,
        stride: usize,
        upsample: bool,
        batchnorm: bool,
        relu: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            c_in,
            c_out,
            stride,
            upsample,
            weight: xavier_init(K * K * c_in, K * K * c_out, K * K * c_in * c_out, rng)?,
            bias: vec![0.0; c_out],
            batchnorm: batchnorm.then(|| BatchNorm::new(c_out)),
            relu,
        })
    }

    /// Input side length → output side length.
    fn out_side(&self, side: usize) -> usize {
        let s = if self.upsample { 2 * side } else { side };
        super::conv::out_dim(s, self.stride)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    /// Parameter-free pass-through.
    Identity,
}

impl Layer {
    pub fn has_parameters(&self) -> bool {
        matches!(self, Layer::Conv(_))
    }

    pub fn has_batchnorm(&self) -> bool {
        matches!(self, Layer::Conv(c) if c.batchnorm.is_some())
    }

    pub fn has_activation(&self) -> bool {
        matches!(self, Layer::Conv(c) if c.relu)
    }

    pub fn as_conv(&self) -> Option<&ConvLayer> {
        match self {
            Layer::Conv(c) => Some(c),
            Layer::Identity => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    plan: AutoencoderPlan,
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
}

/// Per-layer values recorded for backpropagation.
pub(crate) struct LayerRecord {
    conv_input: Vec<f64>,
    in_side: usize,
    bn: Option<BnCache>,
    batch_stats: Option<(Vec<f64>, Vec<f64>)>,
    output: Vec<f64>,
}

/// Record of a batched forward pass through encoder and decoder.
pub(crate) struct Tape {
    batch: usize,
    layers: Vec<LayerRecord>,
}

impl AutoencoderParams {
    /// Xavier-initialized weights, zero biases, fresh batch-norm.
    pub fn init<R: Rng + ?Sized>(plan: AutoencoderPlan, rng: &mut R) -> Result<Self> {
        plan.validate()?;
        let [c1, c2, c3] = plan.channels;
        let x = plan.latent_depth;
        let encoder = vec![
            Layer::Conv(ConvLayer::xavier(1, c1, 2, false, true, true, rng)?),
            Layer::Conv(ConvLayer::xavier(c1, c2, 2, false, true, true, rng)?),
            Layer::Conv(ConvLayer::xavier(c2, c3, 2, false, true, true, rng)?),
            Layer::Conv(ConvLayer::xavier(c3, x, 1, false, true, true, rng)?),
        ];
        let decoder = vec![
            Layer::Conv(ConvLayer::xavier(x, c3, 1, true, true, true, rng)?),
            Layer::Conv(ConvLayer::xavier(c3, c2, 1, true, true, true, rng)?),
            Layer::Conv(ConvLayer::xavier(c2, c1, 1, true, true, true, rng)?),
            Layer::Conv(ConvLayer::xavier(c1, 1, 1, false, false, false, rng)?),
            Layer::Identity,
        ];
        Ok(Self {
            plan,
            encoder,
            decoder,
        })
    }

    /// Assembles parameters from explicit layers, checking the layer layout.
    pub fn from_layers(plan: AutoencoderPlan, encoder: Vec<Layer>, decoder: Vec<Layer>) -> Result<Self> {
        plan.validate()?;
        let reference = Self::init(plan, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0))?;
        let same_layout = |a: &[Layer], b: &[Layer]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| match (x, y) {
                    (Layer::Identity, Layer::Identity) => true,
                    (Layer::Conv(p), Layer::Conv(q)) => {
                        p.c_in == q.c_in
                            && p.c_out == q.c_out
                            && p.stride == q.stride
                            && p.upsample == q.upsample
                            && p.relu == q.relu
                            && p.batchnorm.as_ref().map(BatchNorm::channels)
                                == q.batchnorm.as_ref().map(BatchNorm::channels)
                            && p.weight.len() == q.weight.len()
                            && p.bias.len() == q.bias.len()
                    }
                    _ => false,
                })
        };
        if !same_layout(&encoder, &reference.encoder) || !same_layout(&decoder, &reference.decoder) {
            return Err(Error::Validation(
                "layer stack does not match the autoencoder layout for this plan".into(),
            ));
        }
        let finite = encoder.iter().chain(&decoder).filter_map(Layer::as_conv).all(|c| {
            c.weight.iter().chain(&c.bias).all(|v| v.is_finite())
        });
        if !finite {
            return Err(Error::Validation("autoencoder parameters must be finite".into()));
        }
        Ok(Self {
            plan,
            encoder,
            decoder,
        })
    }

    pub fn plan(&self) -> AutoencoderPlan {
        self.plan
    }

    pub fn latent_depth(&self) -> usize {
        self.plan.latent_depth
    }

    pub fn crop_size(&self) -> usize {
        self.plan.crop_size
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = &ConvLayer> {
        self.encoder.iter().chain(&self.decoder).filter_map(Layer::as_conv)
    }

    fn conv_layers_mut(&mut self) -> impl Iterator<Item = &mut ConvLayer> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut()).filter_map(|l| match l {
            Layer::Conv(c) => Some(c),
            Layer::Identity => None,
        })
    }

    /// Marks every batch-norm's running statistics as usable for inference.
    pub fn prime_batchnorm(&mut self) {
        for c in self.conv_layers_mut() {
            if let Some(bn) = &mut c.batchnorm {
                bn.prime();
            }
        }
    }

    fn check_crops(&self, batch: &[Image]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Size("empty batch".into()));
        }
        let s = self.plan.crop_size;
        for img in batch {
            if img.height() != s || img.width() != s {
                return Err(Error::Size(format!(
                    "autoencoder expects {s}x{s} crops, got {}x{}",
                    img.height(),
                    img.width()
                )));
            }
        }
        Ok(())
    }

    fn check_latents(&self, batch: &[Tensor3]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Size("empty batch".into()));
        }
        let l = self.plan.latent_size();
        let want = (l, l, self.plan.latent_depth);
        for t in batch {
            if t.shape() != want {
                return Err(Error::Size(format!(
                    "latent must have shape {want:?}, got {:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }

    /// Encodes a batch. Train mode normalizes with batch statistics and
    /// updates the running statistics with weight `1 − decay`.
    pub fn encode(&mut self, batch: &[Image], mode: Mode, decay: f64) -> Result<Vec<Tensor3>> {
        self.check_crops(batch)?;
        let input = flatten_images(batch);
        let (out, tape) = run_layers(&self.encoder, input, batch.len(), self.plan.crop_size, mode, false)?;
        if mode == Mode::Train {
            self.commit_batch_stats(&tape, 0, decay)?;
        }
        split_latents(out, batch.len(), self.plan.latent_size(), self.plan.latent_depth)
    }

    /// Decodes a batch of latents to crops.
    pub fn decode(&mut self, latents: &[Tensor3], mode: Mode, decay: f64) -> Result<Vec<Image>> {
        self.check_latents(latents)?;
        let input = flatten_latents(latents);
        let (out, tape) = run_layers(&self.decoder, input, latents.len(), self.plan.latent_size(), mode, false)?;
        if mode == Mode::Train {
            let offset = self.encoder.iter().filter(|l| l.has_parameters()).count();
            self.commit_batch_stats(&tape, offset, decay)?;
        }
        split_images(out, latents.len(), self.plan.crop_size)
    }

    pub fn encode_infer(&self, crop: &Image) -> Result<Tensor3> {
        self.check_crops(std::slice::from_ref(crop))?;
        let (out, _) = run_layers(&self.encoder, crop.data().to_vec(), 1, self.plan.crop_size, Mode::Infer, false)?;
        let l = self.plan.latent_size();
        Tensor3::new(l, l, self.plan.latent_depth, out)
    }

    pub fn decode_infer(&self, latent: &Tensor3) -> Result<Image> {
        self.check_latents(std::slice::from_ref(latent))?;
        let (out, _) = run_layers(
            &self.decoder,
            latent.data().to_vec(),
            1,
            self.plan.latent_size(),
            Mode::Infer,
            false,
        )?;
        Image::new(self.plan.crop_size, self.plan.crop_size, out)
    }

    /// Encode then decode one crop in inference mode.
    pub fn reconstruct_infer(&self, crop: &Image) -> Result<Image> {
        self.decode_infer(&self.encode_infer(crop)?)
    }

    /// Full encoder+decoder pass recording everything backprop needs.
    /// Running statistics are left untouched; see [`commit_batch_stats`].
    pub(crate) fn forward_tape(&self, batch: &[Image], mode: Mode) -> Result<(Vec<Image>, Tape)> {
        self.check_crops(batch)?;
        let n = batch.len();
        let input = flatten_images(batch);
        let (latent, mut tape) = run_layers(&self.encoder, input, n, self.plan.crop_size, mode, true)?;
        let (out, dec) = run_layers(&self.decoder, latent, n, self.plan.latent_size(), mode, true)?;
        tape.layers.extend(dec.layers);
        Ok((split_images(out, n, self.plan.crop_size)?, tape))
    }

    /// Folds the batch statistics recorded in `tape` into the running
    /// statistics, starting at conv layer index `offset`.
    pub(crate) fn commit_batch_stats(&mut self, tape: &Tape, offset: usize, decay: f64) -> Result<()> {
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::Validation(format!("decay {decay} outside [0, 1)")));
        }
        for (layer, rec) in self.conv_layers_mut().skip(offset).zip(&tape.layers) {
            if let (Some(bn), Some((mean, var))) = (&mut layer.batchnorm, &rec.batch_stats) {
                bn.update_running(mean, var, decay);
            }
        }
        Ok(())
    }

    /// Backpropagates `d_out` (gradient w.r.t. each output crop) through
    /// the recorded pass.
    pub(crate) fn backward(&self, tape: &Tape, d_out: &[Image]) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        let n = tape.batch;
        let convs: Vec<&ConvLayer> = self.conv_layers().collect();
        // gradient slot index of each conv layer's weight tensor
        let mut slot = Vec::with_capacity(convs.len());
        let mut next = 0;
        for c in &convs {
            slot.push(next);
            next += if c.batchnorm.is_some() { 4 } else { 2 };
        }
        let mut grad = flatten_images(d_out);
        let mut col = Vec::new();
        for li in (0..convs.len()).rev() {
            let layer = convs[li];
            let rec = &tape.layers[li];
            if layer.relu {
                for (g, &a) in grad.iter_mut().zip(&rec.output) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            if let (Some(bn), Some(cache)) = (&layer.batchnorm, &rec.bn) {
                let (head, tail) = grads.0.split_at_mut(slot[li] + 2);
                let _ = head;
                let (dg, db) = tail.split_at_mut(1);
                grad = bn.backward(&grad, cache, &mut dg[0], &mut db[0]);
            }
            let conv_side = if layer.upsample { 2 * rec.in_side } else { rec.in_side };
            let shape = ConvShape {
                h: conv_side,
                w: conv_side,
                c_in: layer.c_in,
                c_out: layer.c_out,
                stride: layer.stride,
            };
            let in_len = conv_side * conv_side * layer.c_in;
            let out_len = shape.out_h() * shape.out_w() * layer.c_out;
            let need_dx = li > 0;
            let mut dx = if need_dx { vec![0.0; n * in_len] } else { Vec::new() };
            {
                let (wslot, rest) = grads.0.split_at_mut(slot[li] + 1);
                let dweight = &mut wslot[slot[li]];
                let dbias = &mut rest[0];
                for s in 0..n {
                    let x = &rec.conv_input[s * in_len..(s + 1) * in_len];
                    let dz = &grad[s * out_len..(s + 1) * out_len];
                    let dxs = if need_dx {
                        Some(&mut dx[s * in_len..(s + 1) * in_len])
                    } else {
                        None
                    };
                    conv_backward(shape, x, &layer.weight, dz, dweight, dbias, dxs, &mut col);
                }
            }
            if !need_dx {
                break;
            }
            grad = if layer.upsample {
                let side = rec.in_side;
                let per = side * side * layer.c_in;
                let mut down = Vec::with_capacity(n * per);
                for s in 0..n {
                    down.extend(upsample2_backward(&dx[s * in_len..(s + 1) * in_len], side, side, layer.c_in));
                }
                down
            } else {
                dx
            };
        }
        grads
    }
}

impl Parameters for AutoencoderParams {
    fn params(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for c in self.conv_layers() {
            v.push(&c.weight);
            v.push(&c.bias);
            if let Some(bn) = &c.batchnorm {
                v.push(&bn.gamma);
                v.push(&bn.beta);
            }
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for c in self.conv_layers_mut() {
            v.push(&mut c.weight);
            v.push(&mut c.bias);
            if let Some(bn) = &mut c.batchnorm {
                v.push(&mut bn.gamma);
                v.push(&mut bn.beta);
            }
        }
        v
    }
}

/// Runs a layer stack over a batch of square `[side, side, c]` inputs.
fn run_layers(layers: &[Layer], mut act: Vec<f64>, n: usize, mut side: usize, mode: Mode, record: bool) -> Result<(Vec<f64>, Tape)> {
    let mut tape = Tape {
        batch: n,
        layers: Vec::new(),
    };
    let mut col = Vec::new();
    for layer in layers {
        let conv = match layer {
            Layer::Identity => continue,
            Layer::Conv(c) => c,
        };
        let in_side = side;
        let conv_input = if conv.upsample {
            let per = side * side * conv.c_in;
            let mut up = Vec::with_capacity(4 * n * per);
            for s in 0..n {
                up.extend(upsample2(&act[s * per..(s + 1) * per], side, side, conv.c_in));
            }
            up
        } else {
            act
        };
        let conv_side = if conv.upsample { 2 * side } else { side };
        let shape = ConvShape {
            h: conv_side,
            w: conv_side,
            c_in: conv.c_in,
            c_out: conv.c_out,
            stride: conv.stride,
        };
        let in_len = conv_side * conv_side * conv.c_in;
        let out_side = conv.out_side(side);
        let out_len = out_side * out_side * conv.c_out;
        let mut z = vec![0.0; n * out_len];
        for s in 0..n {
            conv_forward(
                shape,
                &conv_input[s * in_len..(s + 1) * in_len],
                &conv.weight,
                &conv.bias,
                &mut z[s * out_len..(s + 1) * out_len],
                &mut col,
            );
        }
        let (mut y, bn, batch_stats) = match &conv.batchnorm {
            Some(bn) => {
                let (y, cache, stats) = bn.forward_cached(&z, mode)?;
                (y, Some(cache), stats)
            }
            None => (z, None, None),
        };
        if conv.relu {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        side = out_side;
        if record {
            tape.layers.push(LayerRecord {
                conv_input,
                in_side,
                bn,
                batch_stats,
                output: y.clone(),
            });
        } else {
            tape.layers.push(LayerRecord {
                conv_input: Vec::new(),
                in_side,
                bn: None,
                batch_stats,
                output: Vec::new(),
            });
        }
        act = y;
    }
    Ok((act, tape))
}

fn flatten_images(batch: &[Image]) -> Vec<f64> {
    batch.iter().flat_map(|i| i.data().iter().copied()).collect()
}

fn flatten_latents(batch: &[Tensor3]) -> Vec<f64> {
    batch.iter().flat_map(|t| t.data().iter().copied()).collect()
}

fn split_images(flat: Vec<f64>, n: usize, side: usize) -> Result<Vec<Image>> {
    flat.chunks_exact(side * side)
        .take(n)
        .map(|c| Image::new(side, side, c.to_vec()))
        .collect()
}

fn split_latents(flat: Vec<f64>, n: usize, side: usize, depth: usize) -> Result<Vec<Tensor3>> {
    flat.chunks_exact(side * side * depth)
        .take(n)
        .map(|c| Tensor3::new(side, side, depth, c.to_vec()))
        .collect()
}

/// Free-function form of [`AutoencoderParams::encode`] for a single crop.
pub fn autoencoder_encode(params: &mut AutoencoderParams, crop: &Image, mode: Mode, decay: f64) -> Result<Tensor3> {
    Ok(params.encode(std::slice::from_ref(crop), mode, decay)?.remove(0))
}

/// Free-function form of [`AutoencoderParams::decode`] for a single latent.
pub fn autoencoder_decode(params: &mut AutoencoderParams, latent: &Tensor3, mode: Mode, decay: f64) -> Result<Image> {
    Ok(params.decode(std::slice::from_ref(latent), mode, decay)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_plan(x: usize) -> AutoencoderPlan {
        AutoencoderPlan {
            crop_size: 16,
            channels: [3, 4, 5],
            latent_depth: x,
        }
    }

    fn zero_params(plan: AutoencoderPlan) -> AutoencoderParams {
        let mut p = AutoencoderParams::init(plan, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for c in p.conv_layers_mut() {
            c.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        p.prime_batchnorm();
        p
    }

    #[test]
    fn standard_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = AutoencoderParams::init(
            AutoencoderPlan {
                crop_size: 160,
                channels: [2, 2, 2],
                latent_depth: 16,
            },
            &mut rng,
        )
        .unwrap();
        let mut p = p;
        p.prime_batchnorm();
        let crop = Image::from_fn(160, 160, |r, c| ((r + c) % 7) as f64 / 3.0);
        let z = p.encode_infer(&crop).unwrap();
        assert_eq!(z.shape(), (20, 20, 16));
        assert_eq!(crop.len() / z.len(), 64 / 16);
        let out = p.decode_infer(&z).unwrap();
        assert_eq!((out.height(), out.width()), (160, 160));
    }

    #[test]
    fn flags_follow_layout() {
        let p = zero_params(small_plan(2));
        let n = p.decoder.len();
        assert!(!p.decoder[n - 2].has_batchnorm());
        assert!(!p.decoder[n - 2].has_activation());
        assert!(p.decoder[n - 2].has_parameters());
        let last = &p.decoder[n - 1];
        assert!(!last.has_parameters() && !last.has_batchnorm() && !last.has_activation());
        assert!(p.encoder.iter().all(|l| l.has_batchnorm() && l.has_activation()));
    }

    #[test]
    fn zero_in_zero_out() {
        let p = zero_params(small_plan(2));
        let z = p.encode_infer(&Image::zeros(16, 16)).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let out = p.decode_infer(&Tensor3::zeros(2, 2, 2)).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn infer_requires_batch_stats() {
        let p = AutoencoderParams::init(small_plan(1), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(
            p.encode_infer(&Image::zeros(16, 16)),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn wrong_shapes() {
        let p = zero_params(small_plan(2));
        assert!(matches!(p.encode_infer(&Image::zeros(16, 15)), Err(Error::Size(_))));
        assert!(matches!(p.decode_infer(&Tensor3::zeros(2, 2, 3)), Err(Error::Size(_))));
    }

    #[test]
    fn train_mode_updates_running_stats() {
        let mut p = AutoencoderParams::init(small_plan(2), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let batch: Vec<Image> = (0..3)
            .map(|k| Image::from_fn(16, 16, |r, c| ((r * 3 + c * k) % 5) as f64))
            .collect();
        let lat = p.encode(&batch, Mode::Train, 0.9).unwrap();
        assert_eq!(lat.len(), 3);
        let bn = p.encoder[0].as_conv().unwrap().batchnorm.as_ref().unwrap();
        assert!(bn.ready);
        assert!(bn.running_mean.iter().any(|&m| m != 0.0));
        let out = p.decode(&lat, Mode::Train, 0.9).unwrap();
        assert_eq!(out.len(), 3);
        assert!(p.reconstruct_infer(&batch[0]).is_ok());
    }

    #[test]
    fn infer_is_deterministic() {
        let mut p = AutoencoderParams::init(small_plan(4), &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        p.prime_batchnorm();
        let crop = Image::from_fn(16, 16, |r, c| (r as f64).sin() + c as f64 * 0.1);
        let a = p.reconstruct_infer(&crop).unwrap();
        let b = p.reconstruct_infer(&crop).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn from_layers_checks_layout() {
        let p = zero_params(small_plan(2));
        assert!(AutoencoderParams::from_layers(p.plan(), p.encoder.clone(), p.decoder.clone()).is_ok());
        let mut dec = p.decoder.clone();
        dec.pop();
        assert!(AutoencoderParams::from_layers(p.plan(), p.encoder.clone(), dec).is_err());
    }
}
