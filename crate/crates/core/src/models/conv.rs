//! 3×3 zero-padded convolution via im2col and GEMM, plus nearest-neighbour
//! 2× upsampling. All buffers are single-sample `[h, w, c]`, channel fastest.

pub(crate) const K: usize = 3;

#[inline]
pub(crate) fn out_dim(input: usize, stride: usize) -> usize {
    (input - 1) / stride + 1
}

/// `c = alpha · a · b + beta · c` with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn im2col(x: &[f64], h: usize, w: usize, c: usize, stride: usize, col: &mut Vec<f64>) {
    let (oh, ow) = (out_dim(h, stride), out_dim(w, stride));
    let kc = K * K * c;
    col.clear();
    col.resize(oh * ow * kc, 0.0);
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &mut col[(oy * ow + ox) * kc..(oy * ow + ox + 1) * kc];
            for ky in 0..K {
                let iy = (oy * stride + ky) as isize - 1;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..K {
                    let ix = (ox * stride + kx) as isize - 1;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let src = (iy as usize * w + ix as usize) * c;
                    let dst = (ky * K + kx) * c;
                    row[dst..dst + c].copy_from_slice(&x[src..src + c]);
                }
            }
        }
    }
}

fn col2im_add(dcol: &[f64], h: usize, w: usize, c: usize, stride: usize, dx: &mut [f64]) {
    let (oh, ow) = (out_dim(h, stride), out_dim(w, stride));
    let kc = K * K * c;
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &dcol[(oy * ow + ox) * kc..(oy * ow + ox + 1) * kc];
            for ky in 0..K {
                let iy = (oy * stride + ky) as isize - 1;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..K {
                    let ix = (ox * stride + kx) as isize - 1;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let dst = (iy as usize * w + ix as usize) * c;
                    let src = (ky * K + kx) * c;
                    for (d, s) in dx[dst..dst + c].iter_mut().zip(&row[src..src + c]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// Shape of one convolution: input `h × w × c_in`, `c_out` filters.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvShape {
    pub h: usize,
    pub w: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub stride: usize,
}

impl ConvShape {
    pub fn out_h(&self) -> usize {
        out_dim(self.h, self.stride)
    }

    pub fn out_w(&self) -> usize {
        out_dim(self.w, self.stride)
    }

    fn positions(&self) -> usize {
        self.out_h() * self.out_w()
    }

    fn kc(&self) -> usize {
        K * K * self.c_in
    }
}

/// Below this many output channels a direct loop beats im2col + GEMM,
/// whose packing cost is paid per input element.
const DIRECT_MAX_C_OUT: usize = 32;

/// Calls `f(output_position, tap, input_position)` for every in-bounds tap.
#[inline]
fn for_each_tap(s: ConvShape, mut f: impl FnMut(usize, usize, usize)) {
    let (oh, ow) = (s.out_h(), s.out_w());
    for oy in 0..oh {
        for ox in 0..ow {
            let p = oy * ow + ox;
            for ky in 0..K {
                let iy = (oy * s.stride + ky) as isize - 1;
                if iy < 0 || iy >= s.h as isize {
                    continue;
                }
                for kx in 0..K {
                    let ix = (ox * s.stride + kx) as isize - 1;
                    if ix < 0 || ix >= s.w as isize {
                        continue;
                    }
                    f(p, ky * K + kx, iy as usize * s.w + ix as usize);
                }
            }
        }
    }
}

fn forward_direct(s: ConvShape, x: &[f64], weight: &[f64], bias: &[f64], out: &mut [f64]) {
    let (ci, co) = (s.c_in, s.c_out);
    for row in out[..s.positions() * co].chunks_exact_mut(co) {
        row.copy_from_slice(bias);
    }
    for_each_tap(s, |p, t, q| {
        let o = &mut out[p * co..(p + 1) * co];
        let wt = &weight[t * ci * co..(t + 1) * ci * co];
        for (&v, wrow) in x[q * ci..(q + 1) * ci].iter().zip(wt.chunks_exact(co)) {
            for (o, w) in o.iter_mut().zip(wrow) {
                *o += v * w;
            }
        }
    });
}

fn backward_direct(s: ConvShape, x: &[f64], weight: &[f64], dz: &[f64], dweight: &mut [f64], mut dx: Option<&mut [f64]>) {
    let (ci, co) = (s.c_in, s.c_out);
    for_each_tap(s, |p, t, q| {
        let g = &dz[p * co..(p + 1) * co];
        let xin = &x[q * ci..(q + 1) * ci];
        let dw = &mut dweight[t * ci * co..(t + 1) * ci * co];
        for (&v, dwrow) in xin.iter().zip(dw.chunks_exact_mut(co)) {
            for (d, gv) in dwrow.iter_mut().zip(g) {
                *d += v * gv;
            }
        }
        if let Some(dx) = dx.as_deref_mut() {
            let wt = &weight[t * ci * co..(t + 1) * ci * co];
            for (d, wrow) in dx[q * ci..(q + 1) * ci].iter_mut().zip(wt.chunks_exact(co)) {
                *d += wrow.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    });
}

/// Writes `conv(x) + bias` into `out` (`[out_h, out_w, c_out]`).
pub(crate) fn conv_forward(s: ConvShape, x: &[f64], weight: &[f64], bias: &[f64], out: &mut [f64], col: &mut Vec<f64>) {
    if s.c_out < DIRECT_MAX_C_OUT {
        return forward_direct(s, x, weight, bias, out);
    }
    im2col(x, s.h, s.w, s.c_in, s.stride, col);
    let p = s.positions();
    for row in out[..p * s.c_out].chunks_exact_mut(s.c_out) {
        row.copy_from_slice(bias);
    }
    gemm(p, s.kc(), s.c_out, col, (s.kc(), 1), weight, (s.c_out, 1), 1.0, out);
}

/// Accumulates weight and bias gradients and adds the input gradient to `dx`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    s: ConvShape,
    x: &[f64],
    weight: &[f64],
    dz: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    dx: Option<&mut [f64]>,
    col: &mut Vec<f64>,
) {
    let p = s.positions();
    let kc = s.kc();
    for row in dz.chunks_exact(s.c_out) {
        dbias.iter_mut().zip(row).for_each(|(b, d)| *b += d);
    }
    if s.c_out < DIRECT_MAX_C_OUT {
        return backward_direct(s, x, weight, dz, dweight, dx);
    }
    im2col(x, s.h, s.w, s.c_in, s.stride, col);
    gemm(kc, p, s.c_out, col, (1, kc), dz, (s.c_out, 1), 1.0, dweight);
    if let Some(dx) = dx {
        col.clear();
        col.resize(p * kc, 0.0);
        gemm(p, s.c_out, kc, dz, (s.c_out, 1), weight, (1, s.c_out), 0.0, col);
        col2im_add(col, s.h, s.w, s.c_in, s.stride, dx);
    }
}

pub(crate) fn upsample2(x: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![0.0; oh * ow * c];
    for y in 0..oh {
        for xx in 0..ow {
            let src = ((y / 2) * w + xx / 2) * c;
            let dst = (y * ow + xx) * c;
            out[dst..dst + c].copy_from_slice(&x[src..src + c]);
        }
    }
    out
}

pub(crate) fn upsample2_backward(dy: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let ow = 2 * w;
    let mut dx = vec![0.0; h * w * c];
    for y in 0..2 * h {
        for xx in 0..ow {
            let dst = ((y / 2) * w + xx / 2) * c;
            let src = (y * ow + xx) * c;
            for k in 0..c {
                dx[dst + k] += dy[src + k];
            }
        }
    }
    dx
}
