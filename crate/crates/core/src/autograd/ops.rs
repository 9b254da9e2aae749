use super::kernels::{self, ConvGeom};
use super::Var;
use crate::tensor::Tensor;

fn one(g: Var) -> Vec<Option<Var>> {
    vec![Some(g)]
}

fn when(need: bool, f: impl FnOnce() -> Var) -> Option<Var> {
    need.then(f)
}

pub fn add(a: &Var, b: &Var) -> Var {
    let v = a.value().zip_map(&b.value(), |x, y| x + y);
    Var::from_op(v, vec![a.clone(), b.clone()], |_, g, _| vec![Some(g.clone()), Some(g.clone())])
}

pub fn sub(a: &Var, b: &Var) -> Var {
    let v = a.value().zip_map(&b.value(), |x, y| x - y);
    Var::from_op(v, vec![a.clone(), b.clone()], |_, g, n| vec![Some(g.clone()), when(n[1], || neg(g))])
}

pub fn mul(a: &Var, b: &Var) -> Var {
    let v = a.value().zip_map(&b.value(), |x, y| x * y);
    Var::from_op(v, vec![a.clone(), b.clone()], |inp, g, n| {
        vec![when(n[0], || mul(g, &inp[1])), when(n[1], || mul(g, &inp[0]))]
    })
}

pub fn neg(a: &Var) -> Var {
    scale(a, -1.0)
}

pub fn scale(a: &Var, c: f64) -> Var {
    Var::from_op(a.value().map(|x| x * c), vec![a.clone()], move |_, g, _| one(scale(g, c)))
}

pub fn add_scalar(a: &Var, c: f64) -> Var {
    Var::from_op(a.value().map(|x| x + c), vec![a.clone()], |_, g, _| one(g.clone()))
}

pub fn square(a: &Var) -> Var {
    mul(a, a)
}

pub fn exp(a: &Var) -> Var {
    Var::from_op(a.value().map(f64::exp), vec![a.clone()], |inp, g, _| one(mul(g, &exp(&inp[0]))))
}

/// `1/x`, with `0` mapped to `0`.
pub fn recip_safe(a: &Var) -> Var {
    let v = a.value().map(|x| if x == 0.0 { 0.0 } else { 1.0 / x });
    Var::from_op(v, vec![a.clone()], |inp, g, _| {
        let r = recip_safe(&inp[0]);
        one(neg(&mul(g, &mul(&r, &r))))
    })
}

/// Square root with a zero subgradient at the origin.
pub fn sqrt(a: &Var) -> Var {
    Var::from_op(a.value().map(f64::sqrt), vec![a.clone()], |inp, g, _| {
        one(scale(&mul(g, &recip_safe(&sqrt(&inp[0]))), 0.5))
    })
}

/// Sum of every element, as a rank-0 tensor.
pub fn sum_all(a: &Var) -> Var {
    let shape = a.shape();
    Var::from_op(Tensor::scalar(a.value().sum()), vec![a.clone()], move |_, g, _| one(expand_scalar(g, &shape)))
}

pub fn mean_all(a: &Var) -> Var {
    let n = a.value().len() as f64;
    scale(&sum_all(a), 1.0 / n)
}

/// Broadcasts a single-element tensor to `shape`.
pub fn expand_scalar(a: &Var, shape: &[usize]) -> Var {
    let v = Tensor::full(shape, a.value().item());
    let src_shape = a.shape();
    Var::from_op(v, vec![a.clone()], move |_, g, _| one(reshape(&sum_all(g), &src_shape)))
}

/// Sums over all axes after the first `keep`: `[d0..dk, rest..] → [d0..dk]`.
pub fn sum_inner(a: &Var, keep: usize) -> Var {
    let t = a.value();
    let full = t.shape().to_vec();
    let out_shape = full[..keep].to_vec();
    let outer: usize = out_shape.iter().product();
    let inner = t.len() / outer.max(1);
    let data: Vec<f64> = t.data().chunks(inner.max(1)).map(|c| c.iter().sum()).collect();
    let v = Tensor::new(out_shape, data);
    Var::from_op(v, vec![a.clone()], move |_, g, _| one(expand_inner(g, &full)))
}

/// Repeats each element of `a` over the trailing axes of `shape`.
pub fn expand_inner(a: &Var, shape: &[usize]) -> Var {
    let t = a.value();
    let keep = t.ndim();
    assert_eq!(&shape[..keep], t.shape(), "expand_inner prefix mismatch");
    let inner: usize = shape[keep..].iter().product();
    let mut data = Vec::with_capacity(t.len() * inner);
    for &x in t.data() {
        data.extend(std::iter::repeat_n(x, inner));
    }
    let v = Tensor::new(shape.to_vec(), data);
    Var::from_op(v, vec![a.clone()], move |_, g, _| one(sum_inner(g, keep)))
}

fn channel_dims(shape: &[usize]) -> (usize, usize, usize) {
    assert!(shape.len() >= 2, "channel ops need rank >= 2");
    (shape[0], shape[1], shape[2..].iter().product())
}

/// Sums `[b, c, ...]` over every axis except the channel axis → `[c]`.
pub fn sum_channels(a: &Var) -> Var {
    let t = a.value();
    let full = t.shape().to_vec();
    let (b, c, s) = channel_dims(&full);
    let mut out = vec![0.0; c];
    for (i, chunk) in t.data().chunks(s).enumerate() {
        out[i % c] += chunk.iter().sum::<f64>();
    }
    debug_assert_eq!(t.len(), b * c * s);
    Var::from_op(Tensor::new(vec![c], out), vec![a.clone()], move |_, g, _| one(expand_channels(g, &full)))
}

/// Broadcasts a `[c]` vector along the channel axis of `shape`.
pub fn expand_channels(a: &Var, shape: &[usize]) -> Var {
    let t = a.value();
    let (b, c, s) = channel_dims(shape);
    assert_eq!(t.shape(), &[c], "expand_channels expects a [{c}] vector");
    let mut data = Vec::with_capacity(b * c * s);
    for _ in 0..b {
        for &x in t.data() {
            data.extend(std::iter::repeat_n(x, s));
        }
    }
    Var::from_op(Tensor::new(shape.to_vec(), data), vec![a.clone()], |_, g, _| one(sum_channels(g)))
}

/// Adds a per-channel bias.
pub fn add_bias(x: &Var, bias: &Var) -> Var {
    add(x, &expand_channels(bias, &x.shape()))
}

pub fn reshape(a: &Var, shape: &[usize]) -> Var {
    let src = a.shape();
    Var::from_op(a.value().reshape(shape), vec![a.clone()], move |_, g, _| one(reshape(g, &src)))
}

/// `op(a) · op(b)` for rank-2 operands.
pub fn matmul(a: &Var, b: &Var, trans_a: bool, trans_b: bool) -> Var {
    let (ta, tb) = (a.value(), b.value());
    assert!(ta.ndim() == 2 && tb.ndim() == 2, "matmul needs rank-2 operands");
    let (m, k) = if trans_a { (ta.shape()[1], ta.shape()[0]) } else { (ta.shape()[0], ta.shape()[1]) };
    let (k2, n) = if trans_b { (tb.shape()[1], tb.shape()[0]) } else { (tb.shape()[0], tb.shape()[1]) };
    assert_eq!(k, k2, "matmul inner dimension mismatch");
    let mut out = vec![0.0; m * n];
    kernels::gemm(m, k, n, ta.data(), trans_a, tb.data(), trans_b, 0.0, &mut out);
    Var::from_op(Tensor::new(vec![m, n], out), vec![a.clone(), b.clone()], move |inp, g, need| {
        let (a, b) = (&inp[0], &inp[1]);
        let ga = when(need[0], || if trans_a { matmul(b, g, trans_b, true) } else { matmul(g, b, false, !trans_b) });
        let gb = when(need[1], || if trans_b { matmul(g, a, true, trans_a) } else { matmul(a, g, !trans_a, false) });
        vec![ga, gb]
    })
}

fn conv_geom(x: &[usize], w: &[usize], groups: usize) -> ConvGeom {
    assert_eq!(x.len(), 4, "conv input must be [b, c, h, w], got {x:?}");
    assert_eq!(w.len(), 4, "conv weight must be [co, ci/g, k, k], got {w:?}");
    assert_eq!(w[2], w[3], "square kernels only");
    assert_eq!(w[2] % 2, 1, "odd kernels only");
    assert_eq!(x[1], w[1] * groups, "conv channel mismatch: input {x:?}, weight {w:?}, groups {groups}");
    assert_eq!(w[0] % groups, 0);
    ConvGeom {
        batch: x[0],
        in_channels: x[1],
        out_channels: w[0],
        height: x[2],
        width: x[3],
        kernel: w[2],
        groups,
    }
}

/// Stride-1, "same"-padded grouped convolution (no bias).
pub fn conv2d(x: &Var, weight: &Var, groups: usize) -> Var {
    let (tx, tw) = (x.value(), weight.value());
    let geom = conv_geom(tx.shape(), tw.shape(), groups);
    let out = kernels::conv2d(tx.data(), tw.data(), geom);
    let shape = vec![geom.batch, geom.out_channels, geom.height, geom.width];
    Var::from_op(Tensor::new(shape, out), vec![x.clone(), weight.clone()], move |inp, g, need| {
        let (x, w) = (&inp[0], &inp[1]);
        let gx = when(need[0], || conv2d(g, &flip_transpose(w, groups), groups));
        let gw = when(need[1], || conv2d_weight_grad(x, g, geom.kernel, groups));
        vec![gx, gw]
    })
}

/// Weight gradient of [`conv2d`], itself differentiable in both arguments.
pub fn conv2d_weight_grad(x: &Var, grad_out: &Var, kernel: usize, groups: usize) -> Var {
    let (tx, tg) = (x.value(), grad_out.value());
    let (xs, gs) = (tx.shape(), tg.shape());
    let wshape = [gs[1], xs[1] / groups, kernel, kernel];
    let geom = conv_geom(xs, &wshape, groups);
    let dw = kernels::conv2d_weight_grad(tx.data(), tg.data(), geom);
    Var::from_op(Tensor::new(wshape.to_vec(), dw), vec![x.clone(), grad_out.clone()], move |inp, g, need| {
        let (x, gy) = (&inp[0], &inp[1]);
        let gx = when(need[0], || conv2d(gy, &flip_transpose(g, groups), groups));
        let ggy = when(need[1], || conv2d(x, g, groups));
        vec![gx, ggy]
    })
}

/// `[co, ci/g, k, k]` → `[ci, co/g, k, k]` with the kernel flipped (an involution).
pub fn flip_transpose(weight: &Var, groups: usize) -> Var {
    let t = weight.value();
    let s = t.shape();
    let (co, cig, k) = (s[0], s[1], s[2]);
    let out = kernels::flip_transpose(t.data(), co, cig, k, groups);
    let shape = vec![cig * groups, co / groups, k, k];
    Var::from_op(Tensor::new(shape, out), vec![weight.clone()], move |_, g, _| one(flip_transpose(g, groups)))
}

/// Concatenates `[b, c_i, ...]` tensors along the channel axis.
pub fn concat_channels(parts: &[Var]) -> Var {
    assert!(!parts.is_empty());
    let values: Vec<Tensor> = parts.iter().map(Var::value).collect();
    let (b, _, s) = channel_dims(values[0].shape());
    let widths: Vec<usize> = values.iter().map(|t| t.shape()[1]).collect();
    let total: usize = widths.iter().sum();
    let mut data = Vec::with_capacity(b * total * s);
    for bi in 0..b {
        for (t, &c) in values.iter().zip(&widths) {
            assert_eq!(t.shape()[0], b, "concat batch mismatch");
            data.extend_from_slice(&t.data()[bi * c * s..(bi + 1) * c * s]);
        }
    }
    let mut shape = values[0].shape().to_vec();
    shape[1] = total;
    Var::from_op(Tensor::new(shape, data), parts.to_vec(), move |_, g, need| {
        let mut start = 0;
        widths
            .iter()
            .zip(need)
            .map(|(&c, &n)| {
                let s0 = start;
                start += c;
                when(n, || slice_channels(g, s0, c))
            })
            .collect()
    })
}

/// Channels `[start, start + len)` of `[b, c, ...]`.
pub fn slice_channels(a: &Var, start: usize, len: usize) -> Var {
    let t = a.value();
    let (b, c, s) = channel_dims(t.shape());
    assert!(start + len <= c);
    let mut data = Vec::with_capacity(b * len * s);
    for bi in 0..b {
        let off = (bi * c + start) * s;
        data.extend_from_slice(&t.data()[off..off + len * s]);
    }
    let mut shape = t.shape().to_vec();
    shape[1] = len;
    Var::from_op(Tensor::new(shape, data), vec![a.clone()], move |_, g, _| one(pad_channels(g, start, c)))
}

/// Places `[b, len, ...]` at channel offset `start` of a zero `[b, total, ...]`.
pub fn pad_channels(a: &Var, start: usize, total: usize) -> Var {
    let t = a.value();
    let (b, len, s) = channel_dims(t.shape());
    let mut data = vec![0.0; b * total * s];
    for bi in 0..b {
        let off = (bi * total + start) * s;
        data[off..off + len * s].copy_from_slice(&t.data()[bi * len * s..(bi + 1) * len * s]);
    }
    let mut shape = t.shape().to_vec();
    shape[1] = total;
    Var::from_op(Tensor::new(shape, data), vec![a.clone()], move |_, g, _| one(slice_channels(g, start, len)))
}

pub fn leaky_relu(x: &Var, slope: f64) -> Var {
    let t = x.value();
    let out = t.map(|v| if v > 0.0 { v } else { slope * v });
    Var::from_op(out, vec![x.clone()], move |inp, g, _| {
        let m = inp[0].value().map(|v| if v > 0.0 { 1.0 } else { slope });
        one(mul(g, &Var::constant(m)))
    })
}

pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
pub const SELU_SCALE: f64 = 1.050_700_987_355_480_5;

pub fn selu(x: &Var) -> Var {
    let out = x.value().map(|v| {
        if v > 0.0 {
            SELU_SCALE * v
        } else {
            SELU_SCALE * SELU_ALPHA * (v.exp() - 1.0)
        }
    });
    Var::from_op(out, vec![x.clone()], |inp, g, _| one(mul(g, &selu_derivative(&inp[0]))))
}

/// `selu'(x) = λ·[x>0] + λα·exp(min(x,0))·[x≤0]`, composed from differentiable ops.
fn selu_derivative(x: &Var) -> Var {
    let t = x.value();
    let pos = Var::constant(t.map(|v| if v > 0.0 { SELU_SCALE } else { 0.0 }));
    let neg_mask = Var::constant(t.map(|v| if v > 0.0 { 0.0 } else { 1.0 }));
    let tail = mul(&exp(&mul(x, &neg_mask)), &neg_mask);
    add(&pos, &scale(&tail, SELU_SCALE * SELU_ALPHA))
}

/// Row-wise log-softmax of a `[b, k]` matrix.
pub fn log_softmax(x: &Var) -> Var {
    let t = x.value();
    assert_eq!(t.ndim(), 2, "log_softmax expects [b, k]");
    let k = t.shape()[1];
    let mut out = Vec::with_capacity(t.len());
    for row in t.data().chunks(k) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|v| v - lse));
    }
    Var::from_op(Tensor::new(t.shape().to_vec(), out), vec![x.clone()], |inp, g, _| {
        let shape = g.shape();
        let probs = exp(&log_softmax(&inp[0]));
        one(sub(g, &mul(&probs, &expand_inner(&sum_inner(g, 1), &shape))))
    })
}

pub fn softmax(x: &Var) -> Var {
    exp(&log_softmax(x))
}
