//! Raw numeric kernels over contiguous row-major buffers.
//!
//! Convolutions are stride-1 with "same" zero padding and odd square kernels,
//! lowered to GEMM through an im2col buffer.

use matrixmultiply::dgemm;

/// `c[m×n] = beta·c + op(a)·op(b)`, with `op` an optional transpose.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides describe exactly the m×k, k×n and m×n buffers asserted above.
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub batch: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub groups: usize,
}

impl ConvGeom {
    fn in_per_group(&self) -> usize {
        self.in_channels / self.groups
    }
    fn out_per_group(&self) -> usize {
        self.out_channels / self.groups
    }
    fn plane(&self) -> usize {
        self.height * self.width
    }
}

/// `[b, c, plane]` → `[c, b, plane]` (and back, with the roles swapped).
fn swap_outer(x: &[f64], b: usize, c: usize, plane: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in 0..b {
        for j in 0..c {
            let src = (i * c + j) * plane;
            let dst = (j * b + i) * plane;
            out[dst..dst + plane].copy_from_slice(&x[src..src + plane]);
        }
    }
    out
}

/// `dst[r, n, y, x] (+)= src[r, n, y + dy, x + dx]`, zero outside the plane.
#[allow(clippy::too_many_arguments)]
fn shift_into(src: &[f64], dst: &mut [f64], planes: usize, h: usize, w: usize, dy: isize, dx: isize, accumulate: bool) {
    let plane = h * w;
    let (x0, x1) = ((-dx).max(0) as usize, (w as isize - dx).min(w as isize).max(0) as usize);
    for p in 0..planes {
        let s = &src[p * plane..(p + 1) * plane];
        let d = &mut dst[p * plane..(p + 1) * plane];
        for y in 0..h {
            let iy = y as isize + dy;
            let row = &mut d[y * w..(y + 1) * w];
            if iy < 0 || iy >= h as isize || x0 >= x1 {
                if !accumulate {
                    row.fill(0.0);
                }
                continue;
            }
            let srow = &s[iy as usize * w..(iy as usize + 1) * w];
            if !accumulate {
                row[..x0].fill(0.0);
                row[x1..].fill(0.0);
            }
            let (d, s) = (&mut row[x0..x1], &srow[(x0 as isize + dx) as usize..(x1 as isize + dx) as usize]);
            if accumulate {
                d.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            } else {
                d.copy_from_slice(s);
            }
        }
    }
}

/// `[co, ci/g, k, k]` slice for one kernel offset, as a `[cog, cig]` matrix.
fn tap(weight: &[f64], g: usize, cog: usize, cig: usize, kk: usize, off: usize) -> Vec<f64> {
    let mut t = vec![0.0; cog * cig];
    for o in 0..cog {
        for c in 0..cig {
            t[o * cig + c] = weight[((g * cog + o) * cig + c) * kk + off];
        }
    }
    t
}

/// Grouped 2-D convolution. `x: [b, ci, h, w]`, `weight: [co, ci/g, k, k]` → `[b, co, h, w]`.
///
/// Computed as one GEMM per kernel offset on a channel-major copy of `x`,
/// followed by a shifted accumulate.
pub fn conv2d(x: &[f64], weight: &[f64], geom: ConvGeom) -> Vec<f64> {
    let (cig, cog, plane) = (geom.in_per_group(), geom.out_per_group(), geom.plane());
    let (k, kk, n) = (geom.kernel, geom.kernel * geom.kernel, geom.batch * plane);
    let pad = (k / 2) as isize;
    let xt = swap_outer(x, geom.batch, geom.in_channels, plane);
    let mut yt = vec![0.0; geom.out_channels * n];
    let mut tmp = vec![0.0; cog * n];
    for g in 0..geom.groups {
        let xg = &xt[g * cig * n..(g + 1) * cig * n];
        let yg = &mut yt[g * cog * n..(g + 1) * cog * n];
        for off in 0..kk {
            let (dy, dx) = ((off / k) as isize - pad, (off % k) as isize - pad);
            gemm(cog, cig, n, &tap(weight, g, cog, cig, kk, off), false, xg, false, 0.0, &mut tmp);
            shift_into(&tmp, yg, cog * geom.batch, geom.height, geom.width, dy, dx, true);
        }
    }
    swap_outer(&yt, geom.out_channels, geom.batch, plane)
}

/// Gradient of a convolution with respect to its weight:
/// `dw[co, ci, kh, kw] = Σ_b Σ_p gy[b, co, p] · x[b, ci, p + (kh, kw) − pad]`.
pub fn conv2d_weight_grad(x: &[f64], grad_out: &[f64], geom: ConvGeom) -> Vec<f64> {
    let (cig, cog, plane) = (geom.in_per_group(), geom.out_per_group(), geom.plane());
    let (k, kk, n) = (geom.kernel, geom.kernel * geom.kernel, geom.batch * plane);
    let pad = (k / 2) as isize;
    let xt = swap_outer(x, geom.batch, geom.in_channels, plane);
    let gyt = swap_outer(grad_out, geom.batch, geom.out_channels, plane);
    let mut dw = vec![0.0; geom.out_channels * cig * kk];
    let mut shifted = vec![0.0; cig * n];
    let mut tap_grad = vec![0.0; cog * cig];
    for g in 0..geom.groups {
        let xg = &xt[g * cig * n..(g + 1) * cig * n];
        let gyg = &gyt[g * cog * n..(g + 1) * cog * n];
        for off in 0..kk {
            let (dy, dx) = ((off / k) as isize - pad, (off % k) as isize - pad);
            shift_into(xg, &mut shifted, cig * geom.batch, geom.height, geom.width, dy, dx, false);
            gemm(cog, n, cig, gyg, false, &shifted, true, 0.0, &mut tap_grad);
            for o in 0..cog {
                for c in 0..cig {
                    dw[((g * cog + o) * cig + c) * kk + off] = tap_grad[o * cig + c];
                }
            }
        }
    }
    dw
}

/// Spatially flips a grouped kernel and swaps its channel roles:
/// `[co, ci/g, k, k]` → `[ci, co/g, k, k]`. Convolving the output gradient with
/// the result gives the input gradient. The map is an involution.
pub fn flip_transpose(weight: &[f64], out_channels: usize, in_per_group: usize, k: usize, groups: usize) -> Vec<f64> {
    let cog = out_channels / groups;
    let kk = k * k;
    let mut out = vec![0.0; weight.len()];
    for g in 0..groups {
        for a in 0..cog {
            for b in 0..in_per_group {
                let src = ((g * cog + a) * in_per_group + b) * kk;
                let dst = ((g * in_per_group + b) * cog + a) * kk;
                for i in 0..kk {
                    out[dst + kk - 1 - i] = weight[src + i];
                }
            }
        }
    }
    out
}
