//! Same-padded stride-1 convolution over activations laid out as
//! `[channel][example][row][col]`, lowered to matrix products via im2col.
//! Examples are processed a few at a time so the column buffer stays in cache.

use super::Scalar;

/// Upper bound on column-buffer entries per sub-batch.
const COLS_BUDGET: usize = 1 << 19;

fn sub_batch(kk: usize, hw: usize, batch: usize) -> usize {
    (COLS_BUDGET / (kk * hw).max(1)).clamp(1, batch.max(1))
}

/// Unfolds examples `b0..b0 + nb` of `input` (`channels × batch·size²`) into
/// `cols` (`channels·k·k × nb·size²`).
#[allow(clippy::too_many_arguments)]
pub fn im2col<T: Scalar>(input: &[T], channels: usize, batch: usize, b0: usize, nb: usize, size: usize, k: usize, cols: &mut [T]) {
    let hw = size * size;
    let bhw = batch * hw;
    let nhw = nb * hw;
    let pad = (k / 2) as isize;
    debug_assert_eq!(input.len(), channels * bhw);
    debug_assert!(cols.len() >= channels * k * k * nhw);
    for c in 0..channels {
        let plane = &input[c * bhw + b0 * hw..c * bhw + (b0 + nb) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let dst = &mut cols[row * nhw..(row + 1) * nhw];
                let dx = kx as isize - pad;
                let dy = ky as isize - pad;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (size as isize - dx).min(size as isize).max(0) as usize;
                for b in 0..nb {
                    for y in 0..size {
                        let out = &mut dst[b * hw + y * size..b * hw + (y + 1) * size];
                        let sy = y as isize + dy;
                        if sy < 0 || sy >= size as isize || x_lo >= x_hi {
                            out.fill(T::zero());
                            continue;
                        }
                        let src_row = b * hw + sy as usize * size;
                        out[..x_lo].fill(T::zero());
                        let s0 = (src_row as isize + x_lo as isize + dx) as usize;
                        out[x_lo..x_hi].copy_from_slice(&plane[s0..s0 + (x_hi - x_lo)]);
                        out[x_hi..].fill(T::zero());
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates `cols` back into examples `b0..b0 + nb` of `out`.
#[allow(clippy::too_many_arguments)]
pub fn col2im<T: Scalar>(cols: &[T], channels: usize, batch: usize, b0: usize, nb: usize, size: usize, k: usize, out: &mut [T]) {
    let hw = size * size;
    let bhw = batch * hw;
    let nhw = nb * hw;
    let pad = (k / 2) as isize;
    for c in 0..channels {
        let plane = &mut out[c * bhw + b0 * hw..c * bhw + (b0 + nb) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let src = &cols[row * nhw..(row + 1) * nhw];
                let dx = kx as isize - pad;
                let dy = ky as isize - pad;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (size as isize - dx).min(size as isize).max(0) as usize;
                if x_lo >= x_hi {
                    continue;
                }
                for b in 0..nb {
                    for y in 0..size {
                        let sy = y as isize + dy;
                        if sy < 0 || sy >= size as isize {
                            continue;
                        }
                        let from = &src[b * hw + y * size + x_lo..b * hw + y * size + x_hi];
                        let s0 = (b * hw + sy as usize * size) as isize + x_lo as isize + dx;
                        let to = &mut plane[s0 as usize..s0 as usize + (x_hi - x_lo)];
                        for (t, &f) in to.iter_mut().zip(from) {
                            *t = *t + f;
                        }
                    }
                }
            }
        }
    }
}

/// `out = W * im2col(input) + bias`, before any nonlinearity.
#[allow(clippy::too_many_arguments)]
pub fn conv_forward<T: Scalar>(
    input: &[T],
    weights: &[T],
    bias: &[T],
    cin: usize,
    cout: usize,
    k: usize,
    batch: usize,
    size: usize,
    cols: &mut Vec<T>,
    out: &mut [T],
) {
    let hw = size * size;
    let bhw = batch * hw;
    let kk = cin * k * k;
    let step = sub_batch(kk, hw, batch);
    cols.resize(kk * step * hw, T::zero());
    let mut b0 = 0;
    while b0 < batch {
        let nb = step.min(batch - b0);
        let nhw = nb * hw;
        im2col(input, cin, batch, b0, nb, size, k, cols);
        T::gemm(cout, kk, nhw, T::one(), weights, kk as isize, 1, cols, nhw as isize, 1, T::zero(), &mut out[b0 * hw..], bhw as isize, 1);
        b0 += nb;
    }
    for co in 0..cout {
        let b_row = &bias[co * hw..(co + 1) * hw];
        for b in 0..batch {
            let o = &mut out[co * bhw + b * hw..co * bhw + (b + 1) * hw];
            for (v, &bb) in o.iter_mut().zip(b_row) {
                *v = *v + bb;
            }
        }
    }
}

/// Accumulates weight and bias gradients for one layer given the gradient
/// of its pre-activation output, and writes the input gradient if asked.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward<T: Scalar>(
    input: &[T],
    weights: &[T],
    grad_out: &[T],
    cin: usize,
    cout: usize,
    k: usize,
    batch: usize,
    size: usize,
    cols: &mut Vec<T>,
    grad_w: &mut [T],
    grad_b: &mut [T],
    mut grad_in: Option<&mut [T]>,
) {
    let hw = size * size;
    let bhw = batch * hw;
    let kk = cin * k * k;
    for co in 0..cout {
        let gb = &mut grad_b[co * hw..(co + 1) * hw];
        for b in 0..batch {
            let g = &grad_out[co * bhw + b * hw..co * bhw + (b + 1) * hw];
            for (acc, &v) in gb.iter_mut().zip(g) {
                *acc = *acc + v;
            }
        }
    }
    if let Some(gi) = grad_in.as_deref_mut() {
        gi.fill(T::zero());
    }
    let step = sub_batch(kk, hw, batch);
    cols.resize(kk * step * hw, T::zero());
    let mut b0 = 0;
    while b0 < batch {
        let nb = step.min(batch - b0);
        let nhw = nb * hw;
        let g = &grad_out[b0 * hw..];
        im2col(input, cin, batch, b0, nb, size, k, cols);
        // dW += dOut · colsᵀ
        T::gemm(cout, nhw, kk, T::one(), g, bhw as isize, 1, cols, 1, nhw as isize, T::one(), grad_w, kk as isize, 1);
        if let Some(gi) = grad_in.as_deref_mut() {
            // dCols = Wᵀ · dOut, reusing the column buffer.
            T::gemm(kk, cout, nhw, T::one(), weights, 1, kk as isize, g, bhw as isize, 1, T::zero(), cols, nhw as isize, 1);
            col2im(cols, cin, batch, b0, nb, size, k, gi);
        }
        b0 += nb;
    }
}
