//! `EMNN` model files.
//!
//! Layout (little-endian): magic `EMNN` | version u16 | kind u8 (0 kernel,
//! 1 MLP, 2 autoencoder) | modality u8 | size or latent depth u32 | hidden
//! layers u8 | flags u8 (bit 0: sigmoid MLP output) | crop size u32 | tensor
//! count u32, then per tensor: name length u16 | UTF-8 name | rank u8 | dims
//! u32 each | f32 data.
//!
//! Values are stored as `f32`, so saving rounds `f64` parameters once; a
//! loaded model saves back to identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bytes::{put_f32, put_u16, put_u32, Reader};
use crate::error::{Error, FormatError, Result};
use crate::models::{AutoencoderParams, AutoencoderPlan, HiddenLayer, KernelModel, Layer, MlpModel};
use crate::published::{Modality, PublishedKernel};

pub const MAGIC: &[u8; 4] = b"EMNN";
pub const VERSION: u16 = 1;

const FLAG_SIGMOID_OUTPUT: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Kernel(KernelModel),
    Mlp(MlpModel),
    Autoencoder(AutoencoderParams),
}

impl Model {
    fn kind_code(&self) -> u8 {
        match self {
            Model::Kernel(_) => 0,
            Model::Mlp(_) => 1,
            Model::Autoencoder(_) => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Kernel(_) => "kernel",
            Model::Mlp(_) => "mlp",
            Model::Autoencoder(_) => "autoencoder",
        }
    }
}

/// A model together with the imaging modality it was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub modality: Modality,
    pub model: Model,
}

impl ModelFile {
    pub fn from_published(k: &PublishedKernel) -> Self {
        Self {
            modality: k.modality,
            model: Model::Kernel(KernelModel::from_published(k)),
        }
    }
}

struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn tensor(dims: &[usize], data: &[f64]) -> (Vec<usize>, Vec<f64>) {
    (dims.to_vec(), data.to_vec())
}

fn ae_tensors(p: &AutoencoderParams) -> Vec<(String, (Vec<usize>, Vec<f64>))> {
    let mut out = Vec::new();
    for (prefix, layers) in [("enc", &p.encoder), ("dec", &p.decoder)] {
        for (i, layer) in layers.iter().enumerate() {
            let Layer::Conv(c) = layer else { continue };
            let name = |s: &str| format!("{prefix}{i}.{s}");
            out.push((name("weight"), tensor(&[3, 3, c.c_in, c.c_out], &c.weight)));
            out.push((name("bias"), tensor(&[c.c_out], &c.bias)));
            if let Some(bn) = &c.batchnorm {
                let n = bn.channels();
                out.push((name("bn.gamma"), tensor(&[n], &bn.gamma)));
                out.push((name("bn.beta"), tensor(&[n], &bn.beta)));
                out.push((name("bn.mean"), tensor(&[n], &bn.running_mean)));
                out.push((name("bn.var"), tensor(&[n], &bn.running_var)));
                out.push((name("bn.ready"), tensor(&[1], &[if bn.ready { 1.0 } else { 0.0 }])));
            }
        }
    }
    out
}

/// Encodes a model file to bytes.
pub fn save_model(file: &ModelFile) -> Result<Vec<u8>> {
    let (size_or_depth, hidden_layers, flags, crop_size, tensors) = match &file.model {
        Model::Kernel(k) => (
            k.size(),
            0,
            0,
            0,
            vec![("weights".to_string(), tensor(&[k.size(), k.size()], k.weights()))],
        ),
        Model::Mlp(m) => {
            let n = m.size() * m.size();
            let mut t = Vec::new();
            for (i, l) in m.hidden.iter().enumerate() {
                t.push((format!("hidden{i}.scale"), tensor(&[n], &l.scale)));
                t.push((format!("hidden{i}.bias"), tensor(&[n], &l.bias)));
                t.push((format!("hidden{i}.dense"), tensor(&[n, n], &l.dense)));
            }
            t.push(("output".to_string(), tensor(&[n], &m.output)));
            let flags = if m.sigmoid_output { FLAG_SIGMOID_OUTPUT } else { 0 };
            (m.size(), m.hidden_layers(), flags, 0, t)
        }
        Model::Autoencoder(p) => (p.latent_depth(), 0, 0, p.crop_size(), ae_tensors(p)),
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u16(&mut out, VERSION);
    out.push(file.model.kind_code());
    out.push(file.modality.code());
    put_u32(&mut out, size_or_depth as u32);
    out.push(hidden_layers as u8);
    out.push(flags);
    put_u32(&mut out, crop_size as u32);
    put_u32(&mut out, tensors.len() as u32);
    for (name, (dims, data)) in &tensors {
        put_u16(&mut out, name.len() as u16);
        out.extend_from_slice(name.as_bytes());
        out.push(dims.len() as u8);
        for &d in dims {
            put_u32(&mut out, d as u32);
        }
        for &v in data {
            put_f32(&mut out, v);
        }
    }
    Ok(out)
}

/// Named tensors read from a file; every entry must be consumed.
struct TensorSet(BTreeMap<String, Tensor>);

impl TensorSet {
    fn take(&mut self, name: &str, dims: &[usize]) -> Result<Vec<f64>, FormatError> {
        let t = self
            .0
            .remove(name)
            .ok_or_else(|| FormatError::Inconsistent(format!("missing tensor {name:?}")))?;
        if t.dims != dims {
            return Err(FormatError::Inconsistent(format!(
                "tensor {name:?} has dims {:?}, expected {dims:?}",
                t.dims
            )));
        }
        Ok(t.data)
    }

    fn dims(&self, name: &str) -> Result<&[usize], FormatError> {
        self.0
            .get(name)
            .map(|t| t.dims.as_slice())
            .ok_or_else(|| FormatError::Inconsistent(format!("missing tensor {name:?}")))
    }

    fn finish(self) -> Result<(), FormatError> {
        match self.0.keys().next() {
            Some(name) => Err(FormatError::Inconsistent(format!("unexpected tensor {name:?}"))),
            None => Ok(()),
        }
    }
}

fn read_tensors(r: &mut Reader<'_>) -> Result<TensorSet, FormatError> {
    let count = r.u32()? as usize;
    let mut set = BTreeMap::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| FormatError::Header("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u8()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32()? as usize);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| FormatError::Inconsistent(format!("tensor {name:?} dims overflow")))?;
        let data = r.f32s(n)?;
        if set.insert(name.clone(), Tensor { dims, data }).is_some() {
            return Err(FormatError::Inconsistent(format!("duplicate tensor {name:?}")));
        }
    }
    r.finish()?;
    Ok(TensorSet(set))
}

fn invalid(e: Error) -> Error {
    match e {
        Error::Format(f) => Error::Format(f),
        other => FormatError::Inconsistent(other.to_string()).into(),
    }
}

/// Decodes a model file.
pub fn load_model(bytes: &[u8]) -> Result<ModelFile> {
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
    let kind = r.u8()?;
    let code = r.u8()?;
    let modality = Modality::from_code(code)
        .ok_or_else(|| FormatError::Header(format!("unknown modality code {code}")))?;
    let size_or_depth = r.u32()? as usize;
    let hidden_layers = r.u8()? as usize;
    let flags = r.u8()?;
    let crop_size = r.u32()? as usize;
    let mut t = read_tensors(&mut r)?;
    let model = match kind {
        0 => {
            let w = size_or_depth;
            let weights = t.take("weights", &[w, w])?;
            Model::Kernel(KernelModel::new(w, weights).map_err(invalid)?)
        }
        1 => {
            let n = size_or_depth * size_or_depth;
            let mut hidden = Vec::with_capacity(hidden_layers);
            for i in 0..hidden_layers {
                hidden.push(HiddenLayer {
                    scale: t.take(&format!("hidden{i}.scale"), &[n])?,
                    bias: t.take(&format!("hidden{i}.bias"), &[n])?,
                    dense: t.take(&format!("hidden{i}.dense"), &[n, n])?,
                });
            }
            let output = t.take("output", &[n])?;
            let sigmoid = flags & FLAG_SIGMOID_OUTPUT != 0;
            Model::Mlp(MlpModel::from_parts(size_or_depth, hidden, output, sigmoid).map_err(invalid)?)
        }
        2 => Model::Autoencoder(load_autoencoder(&mut t, size_or_depth, crop_size)?),
        k => return Err(FormatError::Header(format!("unknown model kind {k}")).into()),
    };
    t.finish()?;
    Ok(ModelFile { modality, model })
}

fn load_autoencoder(t: &mut TensorSet, depth: usize, crop_size: usize) -> Result<AutoencoderParams> {
    let channel = |t: &TensorSet, name: &str| -> Result<usize, FormatError> {
        match t.dims(name)? {
            [3, 3, _, c] => Ok(*c),
            d => Err(FormatError::Inconsistent(format!("tensor {name:?} has dims {d:?}"))),
        }
    };
    let plan = AutoencoderPlan {
        crop_size,
        channels: [
            channel(t, "enc0.weight")?,
            channel(t, "enc1.weight")?,
            channel(t, "enc2.weight")?,
        ],
        latent_depth: depth,
    };
    plan.validate().map_err(invalid)?;
    // The reference layout fixes strides, upsampling and activations; only
    // the tensor values come from the file.
    let mut p = AutoencoderParams::init(plan, &mut ChaCha8Rng::seed_from_u64(0))?;
    for (prefix, layers) in [("enc", &mut p.encoder), ("dec", &mut p.decoder)] {
        for (i, layer) in layers.iter_mut().enumerate() {
            let Layer::Conv(c) = layer else { continue };
            let name = |s: &str| format!("{prefix}{i}.{s}");
            c.weight = t.take(&name("weight"), &[3, 3, c.c_in, c.c_out])?;
            c.bias = t.take(&name("bias"), &[c.c_out])?;
            if let Some(bn) = &mut c.batchnorm {
                let n = bn.channels();
                bn.gamma = t.take(&name("bn.gamma"), &[n])?;
                bn.beta = t.take(&name("bn.beta"), &[n])?;
                bn.running_mean = t.take(&name("bn.mean"), &[n])?;
                bn.running_var = t.take(&name("bn.var"), &[n])?;
                bn.ready = match t.take(&name("bn.ready"), &[1])?[0] {
                    0.0 => false,
                    1.0 => true,
                    v => {
                        return Err(FormatError::Inconsistent(format!(
                            "{} must be 0 or 1, got {v}",
                            name("bn.ready")
                        ))
                        .into())
                    }
                };
            }
        }
    }
    let (enc, dec) = (p.encoder, p.decoder);
    AutoencoderParams::from_layers(plan, enc, dec).map_err(invalid)
}

pub fn write_model_file(path: &Path, file: &ModelFile) -> Result<()> {
    std::fs::write(path, save_model(file)?).map_err(|e| Error::io(path, e))
}

pub fn read_model_file(path: &Path) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::published::get_kernel;
    use crate::tensor::Image;
    use crate::Mode;

    fn f32_round(v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| x as f32 as f64).collect()
    }

    #[test]
    fn kernel_round_trip() {
        let f = ModelFile::from_published(&get_kernel(Modality::Stem, 5).unwrap());
        let bytes = save_model(&f).unwrap();
        let back = load_model(&bytes).unwrap();
        let Model::Kernel(k) = &back.model else { panic!() };
        assert_eq!(back.modality, Modality::Stem);
        assert_eq!(k.weights()[12], 0.089f32 as f64);
        let Model::Kernel(orig) = &f.model else { panic!() };
        assert_eq!(k.weights(), f32_round(orig.weights()));
        assert_eq!(save_model(&back).unwrap(), bytes);
        assert_eq!(load_model(&save_model(&back).unwrap()).unwrap(), back);
    }

    #[test]
    fn mlp_round_trip() {
        let mut m = MlpModel::xavier(3, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        m.sigmoid_output = true;
        let f = ModelFile {
            modality: Modality::TemStem,
            model: Model::Mlp(m),
        };
        let once = load_model(&save_model(&f).unwrap()).unwrap();
        let twice = load_model(&save_model(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
        let Model::Mlp(m) = &once.model else { panic!() };
        assert!(m.sigmoid_output);
        assert_eq!(m.hidden_layers(), 2);
    }

    #[test]
    fn autoencoder_round_trip() {
        let plan = AutoencoderPlan {
            crop_size: 16,
            channels: [2, 3, 4],
            latent_depth: 2,
        };
        let mut p = AutoencoderParams::init(plan, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let batch = vec![Image::from_fn(16, 16, |r, c| ((r * 7 + c * 3) % 11) as f64)];
        p.encode(&batch, Mode::Train, 0.9).unwrap();
        let f = ModelFile {
            modality: Modality::Tem,
            model: Model::Autoencoder(p),
        };
        let bytes = save_model(&f).unwrap();
        let back = load_model(&bytes).unwrap();
        assert_eq!(save_model(&back).unwrap(), bytes);
        let Model::Autoencoder(q) = &back.model else { panic!() };
        assert_eq!(q.plan(), plan);
        // Encoder stats were updated, decoder ones were not.
        let ready: Vec<bool> = q
            .conv_layers()
            .filter_map(|c| c.batchnorm.as_ref().map(|b| b.ready))
            .collect();
        assert_eq!(ready, vec![true, true, true, true, false, false, false]);
    }

    #[test]
    fn malformed_files() {
        let f = ModelFile::from_published(&get_kernel(Modality::Tem, 3).unwrap());
        let bytes = save_model(&f).unwrap();
        assert!(matches!(
            load_model(b"EMLC\x01\x00"),
            Err(Error::Format(FormatError::BadMagic { .. }))
        ));
        assert!(matches!(
            load_model(&bytes[..bytes.len() - 2]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        let mut bad = bytes.clone();
        bad[8] = 5; // declared size 5 but weights are 3x3
        assert!(matches!(
            load_model(&bad),
            Err(Error::Format(FormatError::Inconsistent(_)))
        ));
        let mut bad = bytes.clone();
        bad[6] = 9;
        assert!(matches!(load_model(&bad), Err(Error::Format(FormatError::Header(_)))));
        let mut bad = bytes;
        bad[4] = 2;
        assert!(matches!(
            load_model(&bad),
            Err(Error::Format(FormatError::UnsupportedVersion { found: 2, .. }))
        ));
    }
}
