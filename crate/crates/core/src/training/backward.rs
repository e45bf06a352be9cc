//! Exact reverse-mode gradients for the three model families.
//!
//! Kernels and MLPs are trained as students on the masked MSE: for a crop
//! of side `d` and window `w`, only the `(d − w + 1)²` outputs whose window
//! lies fully inside the crop contribute. Autoencoders use the huberized
//! MSE over the whole batch.

use super::loss::{huberize, huberize_derivative, HuberMse};
use crate::error::{Error, Result};
use crate::models::autoencoder::Tape;
use crate::models::mlp::sigmoid;
use crate::models::{fill_patch, AutoencoderParams, Gradients, KernelModel, MlpModel, Mode};
use crate::tensor::Image;

/// A model whose parameters can be differentiated.
#[derive(Debug, Clone, Copy)]
pub enum ModelRef<'a> {
    Kernel(&'a KernelModel),
    Mlp(&'a MlpModel),
    Autoencoder(&'a AutoencoderParams),
}

/// Loss and gradients over a batch of `(input, target)` pairs.
///
/// Kernels and MLPs: mean over the batch of the masked MSE between the
/// model output and the target. Autoencoders: huberized MSE in train mode
/// (running statistics are not updated).
pub fn backward(model: ModelRef<'_>, inputs: &[Image], targets: &[Image]) -> Result<(f64, Gradients)> {
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::Size(format!(
            "need equal non-empty batches, got {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    match model {
        ModelRef::Kernel(k) => {
            let mut total = Gradients::zeros_like(k);
            let mut loss = 0.0;
            for (x, t) in inputs.iter().zip(targets) {
                let (l, g) = kernel_masked_gradients(k, x, t)?;
                loss += l;
                total.add_scaled(&g, 1.0);
            }
            let n = inputs.len() as f64;
            total.scale(1.0 / n);
            Ok((loss / n, total))
        }
        ModelRef::Mlp(m) => {
            let mut total = Gradients::zeros_like(m);
            let mut loss = 0.0;
            for (x, t) in inputs.iter().zip(targets) {
                let (l, g) = mlp_masked_gradients(m, x, t)?;
                loss += l;
                total.add_scaled(&g, 1.0);
            }
            let n = inputs.len() as f64;
            total.scale(1.0 / n);
            Ok((loss / n, total))
        }
        ModelRef::Autoencoder(p) => {
            let (l, g, _) = autoencoder_gradients(p, inputs, targets)?;
            Ok((l.loss, g))
        }
    }
}

fn check_student_pair(w: usize, input: &Image, target: &Image) -> Result<()> {
    if input.height() != target.height() || input.width() != target.width() {
        return Err(Error::Size("input and target shapes differ".into()));
    }
    if input.height() < w || input.width() < w {
        return Err(Error::Size(format!(
            "crop {}x{} is smaller than the window {w}",
            input.height(),
            input.width()
        )));
    }
    Ok(())
}

/// Masked MSE of a kernel on one crop and its gradient.
pub fn kernel_masked_gradients(k: &KernelModel, input: &Image, target: &Image) -> Result<(f64, Gradients)> {
    let w = k.size();
    check_student_pair(w, input, target)?;
    let r = w / 2;
    let out_h = input.height() - w + 1;
    let out_w = input.width() - w + 1;
    let n = (out_h * out_w) as f64;
    let weights = k.weights();
    let mut grad = vec![0.0; w * w];
    let mut patch = vec![0.0; w * w];
    let mut loss = 0.0;
    for row in 0..out_h {
        for col in 0..out_w {
            fill_patch(input, row, col, w, &mut patch);
            let y: f64 = patch.iter().zip(weights).map(|(a, b)| a * b).sum();
            let e = y - target.get(row + r, col + r);
            loss += e * e;
            let dy = 2.0 * e / n;
            grad.iter_mut().zip(&patch).for_each(|(g, x)| *g += dy * x);
        }
    }
    Ok((loss / n, Gradients(vec![grad])))
}

/// Activations of one MLP forward pass.
struct MlpTrace {
    /// `h[0]` is the patch, `h[l]` the output of hidden layer `l`.
    h: Vec<Vec<f64>>,
    /// Pre-dense inputs `scale ⊙ h + bias` per hidden layer.
    u: Vec<Vec<f64>>,
    out: f64,
}

fn mlp_trace(m: &MlpModel, patch: &[f64]) -> MlpTrace {
    let n = patch.len();
    let mut h = vec![patch.to_vec()];
    let mut us = Vec::with_capacity(m.hidden.len());
    for layer in &m.hidden {
        let prev = h.last().expect("input layer");
        let u: Vec<f64> = (0..n).map(|i| layer.scale[i] * prev[i] + layer.bias[i]).collect();
        let next: Vec<f64> = (0..n)
            .map(|o| sigmoid(layer.dense[o * n..(o + 1) * n].iter().zip(&u).map(|(d, x)| d * x).sum()))
            .collect();
        us.push(u);
        h.push(next);
    }
    let last = h.last().expect("hidden layer");
    let y: f64 = m.output.iter().zip(last).map(|(a, b)| a * b).sum();
    let out = if m.sigmoid_output { sigmoid(y) } else { y };
    MlpTrace { h, u: us, out }
}

/// Adds `dout · ∂out/∂θ` for one patch into `grads`.
fn mlp_accumulate(m: &MlpModel, trace: &MlpTrace, dout: f64, grads: &mut Gradients) {
    let n = m.size() * m.size();
    let layers = m.hidden.len();
    let dy = if m.sigmoid_output {
        dout * trace.out * (1.0 - trace.out)
    } else {
        dout
    };
    let out_slot = 3 * layers;
    let h_last = &trace.h[layers];
    for i in 0..n {
        grads.0[out_slot][i] += dy * h_last[i];
    }
    let mut dh: Vec<f64> = m.output.iter().map(|o| dy * o).collect();
    for l in (0..layers).rev() {
        let layer = &m.hidden[l];
        let h_out = &trace.h[l + 1];
        let h_in = &trace.h[l];
        let u = &trace.u[l];
        let dz: Vec<f64> = (0..n).map(|o| dh[o] * h_out[o] * (1.0 - h_out[o])).collect();
        let mut du = vec![0.0; n];
        {
            let ddense = &mut grads.0[3 * l + 2];
            for o in 0..n {
                let row = &layer.dense[o * n..(o + 1) * n];
                let drow = &mut ddense[o * n..(o + 1) * n];
                for i in 0..n {
                    drow[i] += dz[o] * u[i];
                    du[i] += row[i] * dz[o];
                }
            }
        }
        for i in 0..n {
            grads.0[3 * l][i] += du[i] * h_in[i];
            grads.0[3 * l + 1][i] += du[i];
        }
        dh = (0..n).map(|i| du[i] * layer.scale[i]).collect();
    }
}

/// Masked MSE of an MLP on one crop and its gradient.
pub fn mlp_masked_gradients(m: &MlpModel, input: &Image, target: &Image) -> Result<(f64, Gradients)> {
    let w = m.size();
    check_student_pair(w, input, target)?;
    let r = w / 2;
    let out_h = input.height() - w + 1;
    let out_w = input.width() - w + 1;
    let n = (out_h * out_w) as f64;
    let mut grads = Gradients::zeros_like(m);
    let mut patch = vec![0.0; w * w];
    let mut loss = 0.0;
    for row in 0..out_h {
        for col in 0..out_w {
            fill_patch(input, row, col, w, &mut patch);
            let trace = mlp_trace(m, &patch);
            let e = trace.out - target.get(row + r, col + r);
            loss += e * e;
            mlp_accumulate(m, &trace, 2.0 * e / n, &mut grads);
        }
    }
    Ok((loss / n, grads))
}

/// Gradient of `out` with respect to every MLP parameter for one patch.
pub fn mlp_output_gradients(m: &MlpModel, patch: &[f64]) -> Result<(f64, Gradients)> {
    let n = m.size() * m.size();
    if patch.len() != n {
        return Err(Error::Size(format!("patch has {} values, expected {n}", patch.len())));
    }
    let trace = mlp_trace(m, patch);
    let mut grads = Gradients::zeros_like(m);
    mlp_accumulate(m, &trace, 1.0, &mut grads);
    Ok((trace.out, grads))
}

/// Huberized MSE of the autoencoder reconstructing `targets` from `inputs`
/// in train mode, with gradients and the tape holding batch statistics.
pub(crate) fn autoencoder_gradients(
    p: &AutoencoderParams,
    inputs: &[Image],
    targets: &[Image],
) -> Result<(HuberMse, Gradients, Tape)> {
    if inputs.len() != targets.len() {
        return Err(Error::Size("input and target batches differ in length".into()));
    }
    let (outputs, tape) = p.forward_tape(inputs, Mode::Train)?;
    let mut sq = 0.0;
    let mut count = 0usize;
    for (o, t) in outputs.iter().zip(targets) {
        if o.height() != t.height() || o.width() != t.width() {
            return Err(Error::Size("target crop has the wrong shape".into()));
        }
        sq += o.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += o.len();
    }
    let mse = sq / count as f64;
    let scale = huberize_derivative(mse) * 2.0 / count as f64;
    let d_out: Vec<Image> = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| {
            let d: Vec<f64> = o.data().iter().zip(t.data()).map(|(a, b)| scale * (a - b)).collect();
            Image::new(o.height(), o.width(), d)
        })
        .collect::<Result<_>>()?;
    let grads = p.backward(&tape, &d_out);
    Ok((
        HuberMse {
            loss: huberize(mse),
            mse,
        },
        grads,
        tape,
    ))
}
