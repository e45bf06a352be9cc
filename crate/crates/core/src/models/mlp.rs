use rand::Rng;

use super::kernel::validate_size;
use super::{fill_patch, prepare_windows, Border, Parameters};
use crate::error::{Error, Result};
use crate::tensor::Image;
use crate::training::init::xavier_init;

/// One hidden layer: `h = sigmoid(dense · (scale ⊙ h_prev + bias))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// Elementwise input weights, length `w²`.
    pub scale: Vec<f64>,
    /// Length `w²`.
    pub bias: Vec<f64>,
    /// Row-major `w² × w²` (output node major).
    pub dense: Vec<f64>,
}

/// Per-window perceptron with `w²`-wide hidden layers and a single output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    size: usize,
    pub hidden: Vec<HiddenLayer>,
    /// Weights of the final connection to the single output node.
    pub output: Vec<f64>,
    /// Sigmoid-activate the output node. Off by default: normalized targets
    /// exceed 1.
    pub sigmoid_output: bool,
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl MlpModel {
    /// All-zero parameters.
    pub fn zeros(size: usize, hidden_layers: usize) -> Result<Self> {
        validate_size(size)?;
        validate_depth(hidden_layers)?;
        let n = size * size;
        Ok(Self {
            size,
            hidden: (0..hidden_layers)
                .map(|_| HiddenLayer {
                    scale: vec![0.0; n],
                    bias: vec![0.0; n],
                    dense: vec![0.0; n * n],
                })
                .collect(),
            output: vec![0.0; n],
            sigmoid_output: false,
        })
    }

    /// Xavier-uniform weights, zero biases.
    ///
    /// Elementwise weight vectors use `fan_in = fan_out = w²`, dense layers
    /// `w² → w²` and the output connection `w² → 1`.
    pub fn xavier<R: Rng + ?Sized>(size: usize, hidden_layers: usize, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(size, hidden_layers)?;
        let n = size * size;
        for layer in &mut m.hidden {
            layer.scale = xavier_init(n, n, n, rng)?;
            layer.dense = xavier_init(n, n, n * n, rng)?;
        }
        m.output = xavier_init(n, 1, n, rng)?;
        Ok(m)
    }

    /// Builds a model from explicit tensors, checking every shape.
    pub fn from_parts(size: usize, hidden: Vec<HiddenLayer>, output: Vec<f64>, sigmoid_output: bool) -> Result<Self> {
        validate_size(size)?;
        validate_depth(hidden.len())?;
        let n = size * size;
        for (i, l) in hidden.iter().enumerate() {
            if l.scale.len() != n || l.bias.len() != n || l.dense.len() != n * n {
                return Err(Error::Size(format!(
                    "hidden layer {i} does not have w² = {n} sized tensors"
                )));
            }
        }
        if output.len() != n {
            return Err(Error::Size(format!(
                "output weights need {n} entries, got {}",
                output.len()
            )));
        }
        let all_finite = hidden
            .iter()
            .flat_map(|l| l.scale.iter().chain(&l.bias).chain(&l.dense))
            .chain(&output)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Validation("MLP parameters must be finite".into()));
        }
        Ok(Self {
            size,
            hidden,
            output,
            sigmoid_output,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn hidden_layers(&self) -> usize {
        self.hidden.len()
    }

    /// Evaluates the network on one flattened `w × w` patch.
    pub fn forward(&self, patch: &[f64]) -> Result<f64> {
        let n = self.size * self.size;
        if patch.len() != n {
            return Err(Error::Size(format!(
                "patch has {} values, model expects {n}",
                patch.len()
            )));
        }
        let mut h = patch.to_vec();
        let mut u = vec![0.0; n];
        for layer in &self.hidden {
            for i in 0..n {
                u[i] = layer.scale[i] * h[i] + layer.bias[i];
            }
            for (o, ho) in h.iter_mut().enumerate() {
                let row = &layer.dense[o * n..(o + 1) * n];
                *ho = sigmoid(row.iter().zip(&u).map(|(d, x)| d * x).sum());
            }
        }
        let y: f64 = self.output.iter().zip(&h).map(|(a, b)| a * b).sum();
        Ok(if self.sigmoid_output { sigmoid(y) } else { y })
    }

    /// Slides the network over the image, one output per window.
    pub fn denoise(&self, img: &Image, border: Border) -> Result<Image> {
        let w = self.size;
        let (src, out_h, out_w) = prepare_windows(img, w, border)?;
        let mut patch = vec![0.0; w * w];
        let mut out = Vec::with_capacity(out_h * out_w);
        for r in 0..out_h {
            for c in 0..out_w {
                fill_patch(&src, r, c, w, &mut patch);
                out.push(self.forward(&patch)?);
            }
        }
        Image::new(out_h, out_w, out)
    }
}

impl Parameters for MlpModel {
    fn params(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(3 * self.hidden.len() + 1);
        for l in &self.hidden {
            v.push(&l.scale);
            v.push(&l.bias);
            v.push(&l.dense);
        }
        v.push(&self.output);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(3 * self.hidden.len() + 1);
        for l in &mut self.hidden {
            v.push(&mut l.scale);
            v.push(&mut l.bias);
            v.push(&mut l.dense);
        }
        v.push(&mut self.output);
        v
    }
}

pub fn mlp_forward(model: &MlpModel, patch: &[f64]) -> Result<f64> {
    model.forward(patch)
}

pub fn mlp_denoise(model: &MlpModel, img: &Image, border: Border) -> Result<Image> {
    model.denoise(img, border)
}

fn validate_depth(hidden_layers: usize) -> Result<()> {
    if !(1..=2).contains(&hidden_layers) {
        return Err(Error::Validation(format!(
            "MLPs have 1 or 2 hidden layers, got {hidden_layers}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Scalar re-implementation written independently of `forward`.
    fn scalar_oracle(m: &MlpModel, patch: &[f64]) -> f64 {
        let n = patch.len();
        let mut h: Vec<f64> = patch.to_vec();
        for l in &m.hidden {
            let mut next = vec![0.0; n];
            for o in 0..n {
                let mut z = 0.0;
                for i in 0..n {
                    z += l.dense[o * n + i] * (l.scale[i] * h[i] + l.bias[i]);
                }
                next[o] = 1.0 / (1.0 + f64::exp(-z));
            }
            h = next;
        }
        let mut y = 0.0;
        for i in 0..n {
            y += m.output[i] * h[i];
        }
        y
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = MlpModel::zeros(3, 1).unwrap();
        assert_eq!(m.forward(&[0.3; 9]).unwrap(), 0.0);
        let out = m.denoise(&Image::filled(6, 6, 2.0), Border::Reflect).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sigmoid_zero_closed_form() {
        let mut m = MlpModel::zeros(3, 1).unwrap();
        m.hidden[0].scale = vec![1.0; 9];
        m.output = vec![1.0; 9];
        assert_eq!(m.forward(&[1.7; 9]).unwrap(), 4.5);
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for layers in [1, 2] {
            let mut m = MlpModel::xavier(5, layers, &mut rng).unwrap();
            for l in &mut m.hidden {
                l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            }
            for _ in 0..20 {
                let patch: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..3.0)).collect();
                let got = m.forward(&patch).unwrap();
                assert!((got - scalar_oracle(&m, &patch)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn single_window_crop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = MlpModel::xavier(3, 1, &mut rng).unwrap();
        let img = Image::from_fn(3, 3, |r, c| (r * 3 + c) as f64 * 0.1);
        let out = m.denoise(&img, Border::Crop).unwrap();
        assert_eq!((out.height(), out.width()), (1, 1));
        assert_eq!(out.data()[0], m.forward(img.data()).unwrap());
    }

    #[test]
    fn denoise_matches_per_pixel_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = MlpModel::xavier(3, 2, &mut rng).unwrap();
        let img = Image::from_fn(16, 16, |_, _| rng.random_range(0.0..2.0));
        let out = m.denoise(&img, Border::Reflect).unwrap();
        let refl = |i: isize| -> usize {
            if i < 0 {
                (-i) as usize
            } else if i > 15 {
                (30 - i) as usize
            } else {
                i as usize
            }
        };
        for r in 0..16isize {
            for c in 0..16isize {
                let mut patch = vec![];
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        patch.push(img.get(refl(r + dr), refl(c + dc)));
                    }
                }
                let want = scalar_oracle(&m, &patch);
                assert!((out.get(r as usize, c as usize) - want).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn relabeling_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = MlpModel::xavier(3, 1, &mut rng).unwrap();
        let patch: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..2.0)).collect();
        let perm = [4usize, 0, 8, 2, 6, 1, 3, 7, 5];
        let mut p = m.clone();
        let l0 = &m.hidden[0];
        for (new, &old) in perm.iter().enumerate() {
            p.hidden[0].scale[new] = l0.scale[old];
            p.hidden[0].bias[new] = l0.bias[old];
            for o in 0..9 {
                p.hidden[0].dense[o * 9 + new] = l0.dense[o * 9 + old];
            }
        }
        let permuted: Vec<f64> = perm.iter().map(|&old| patch[old]).collect();
        let a = m.forward(&patch).unwrap();
        let b = p.forward(&permuted).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let m = MlpModel::zeros(3, 1).unwrap();
        assert!(matches!(m.forward(&[0.0; 8]), Err(Error::Size(_))));
        assert!(MlpModel::zeros(3, 3).is_err());
        assert!(MlpModel::from_parts(3, vec![], vec![0.0; 9], false).is_err());
    }
}
