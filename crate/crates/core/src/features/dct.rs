//! Orthonormal type-II 2-D DCT, JPEG zig-zag coefficient ordering, and
//! reconstruction-error-driven coefficient count selection.

use std::sync::OnceLock;

use crate::corpus::{Grid, RoiFrame, ROI_HEIGHT, ROI_WIDTH};
use crate::error::{Error, Result};

/// Orthonormal 1-D DCT-II matrix, row-major: C[k][n] = a_k cos(pi (2n+1) k / 2N)
/// with a_0 = sqrt(1/N), a_k = sqrt(2/N).
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let a = if k == 0 { norm0 } else { norm };
        for j in 0..n {
            c[k * n + j] =
                a * (std::f64::consts::PI * (2.0 * j as f64 + 1.0) * k as f64 / (2.0 * n as f64))
                    .cos();
        }
    }
    c
}

fn roi_matrices() -> &'static (Vec<f64>, Vec<f64>) {
    static M: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    M.get_or_init(|| (dct_matrix(ROI_HEIGHT), dct_matrix(ROI_WIDTH)))
}

/// Forward 2-D DCT restricted to the top-left `kh` x `kw` coefficient block.
/// The full transform is the `(H, W)` block; the block route produces
/// bit-identical values because the summation order per coefficient is the
/// same.
fn dct2_block_of(grid: &Grid, kh: usize, kw: usize, ch: &[f64], cw: &[f64]) -> Vec<f64> {
    let h = grid.height();
    let w = grid.width();
    let f = grid.values();
    // G = C_h[0..kh] * F  (kh x w)
    let mut g = vec![0.0; kh * w];
    for u in 0..kh {
        let crow = &ch[u * h..(u + 1) * h];
        let grow = &mut g[u * w..(u + 1) * w];
        for (y, &c) in crow.iter().enumerate() {
            let frow = &f[y * w..(y + 1) * w];
            for (gv, &fv) in grow.iter_mut().zip(frow) {
                *gv += c * fv;
            }
        }
    }
    // out = G * C_w[0..kw]^T  (kh x kw)
    let mut out = vec![0.0; kh * kw];
    for u in 0..kh {
        let grow = &g[u * w..(u + 1) * w];
        for v in 0..kw {
            let crow = &cw[v * w..(v + 1) * w];
            let mut acc = 0.0;
            for (gv, cv) in grow.iter().zip(crow) {
                acc += gv * cv;
            }
            out[u * kw + v] = acc;
        }
    }
    out
}

/// Full orthonormal 2-D DCT of a normalized ROI frame.
pub fn dct2(frame: &RoiFrame) -> Grid {
    let (ch, cw) = roi_matrices();
    let coeffs = dct2_block_of(frame.grid(), ROI_HEIGHT, ROI_WIDTH, ch, cw);
    Grid::new(ROI_HEIGHT, ROI_WIDTH, coeffs).expect("dimensions preserved")
}

/// Full 2-D DCT of an arbitrary grid (temporal gradients, tests).
pub fn dct2_grid(grid: &Grid) -> Grid {
    let (h, w) = (grid.height(), grid.width());
    let (ch, cw) = if h == ROI_HEIGHT && w == ROI_WIDTH {
        let m = roi_matrices();
        (m.0.clone(), m.1.clone())
    } else {
        (dct_matrix(h), dct_matrix(w))
    };
    Grid::new(h, w, dct2_block_of(grid, h, w, &ch, &cw)).expect("dimensions preserved")
}

/// Inverse of `dct2_grid`.
pub fn idct2(coeffs: &Grid) -> Grid {
    let h = coeffs.height();
    let w = coeffs.width();
    let ch = dct_matrix(h);
    let cw = dct_matrix(w);
    let x = coeffs.values();
    // F = C_h^T * X * C_w
    let mut g = vec![0.0; h * w]; // g = C_h^T * X (h x w)
    for y in 0..h {
        for u in 0..h {
            let c = ch[u * h + y];
            let xrow = &x[u * w..(u + 1) * w];
            let grow = &mut g[y * w..(y + 1) * w];
            for (gv, &xv) in grow.iter_mut().zip(xrow) {
                *gv += c * xv;
            }
        }
    }
    let mut f = vec![0.0; h * w];
    for y in 0..h {
        let grow = &g[y * w..(y + 1) * w];
        for x_ in 0..w {
            let mut acc = 0.0;
            for v in 0..w {
                acc += grow[v] * cw[v * w + x_];
            }
            f[y * w + x_] = acc;
        }
    }
    Grid::new(h, w, f).expect("dimensions preserved")
}

/// JPEG zig-zag traversal order of an `h` x `w` coefficient grid.
pub fn zigzag_order(h: usize, w: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(h * w);
    for s in 0..h + w - 1 {
        let y_min = s.saturating_sub(w - 1);
        let y_max = s.min(h - 1);
        if s % 2 == 0 {
            for y in (y_min..=y_max).rev() {
                order.push((y, s - y));
            }
        } else {
            for y in y_min..=y_max {
                order.push((y, s - y));
            }
        }
    }
    order
}

fn roi_zigzag() -> &'static Vec<(usize, usize)> {
    static Z: OnceLock<Vec<(usize, usize)>> = OnceLock::new();
    Z.get_or_init(|| zigzag_order(ROI_HEIGHT, ROI_WIDTH))
}

/// One orthonormal DCT basis image for coefficient (u, v), as 48x64 pixels.
pub fn basis_atom(u: usize, v: usize) -> Vec<f64> {
    let (ch, cw) = roi_matrices();
    let mut img = Vec::with_capacity(ROI_HEIGHT * ROI_WIDTH);
    for y in 0..ROI_HEIGHT {
        for x in 0..ROI_WIDTH {
            img.push(ch[u * ROI_HEIGHT + y] * cw[v * ROI_WIDTH + x]);
        }
    }
    img
}

/// The `n` lowest zig-zag-order DCT coefficients of a grid. Only the minimal
/// coefficient block covering those entries is computed.
pub fn dct_features_grid(grid: &Grid, n: usize) -> Result<Vec<f64>> {
    let h = grid.height();
    let w = grid.width();
    if n == 0 || n > h * w {
        return Err(Error::Feature(format!(
            "coefficient count {n} out of range 1..={}",
            h * w
        )));
    }
    let order: &[(usize, usize)] = if h == ROI_HEIGHT && w == ROI_WIDTH {
        roi_zigzag()
    } else {
        &zigzag_order(h, w)
    };
    let prefix = &order[..n];
    let kh = prefix.iter().map(|&(u, _)| u).max().unwrap() + 1;
    let kw = prefix.iter().map(|&(_, v)| v).max().unwrap() + 1;
    let block = if h == ROI_HEIGHT && w == ROI_WIDTH {
        let (ch, cw) = roi_matrices();
        dct2_block_of(grid, kh, kw, ch, cw)
    } else {
        dct2_block_of(grid, kh, kw, &dct_matrix(h), &dct_matrix(w))
    };
    Ok(prefix.iter().map(|&(u, v)| block[u * kw + v]).collect())
}

/// The `n` lowest zig-zag-order DCT coefficients of a frame.
pub fn dct_features(frame: &RoiFrame, n: usize) -> Result<Vec<f64>> {
    dct_features_grid(frame.grid(), n)
}

/// Smallest zig-zag coefficient count whose mean relative L2 reconstruction
/// error over the sample is at most `target_error`. Uses the Parseval
/// identity: the reconstruction error from the first n coefficients equals
/// the energy of the dropped tail.
pub fn select_dct_count(frames: &[RoiFrame], target_error: f64) -> Result<usize> {
    if frames.is_empty() {
        return Err(Error::Feature("empty sample set".into()));
    }
    if !(target_error > 0.0 && target_error < 1.0) && target_error != 1.0 {
        return Err(Error::Feature(format!(
            "target_error {target_error} must lie in (0, 1]"
        )));
    }
    let order = roi_zigzag();
    let total_coeffs = order.len();
    let mut mean_err = vec![0.0; total_coeffs + 1];
    for frame in frames {
        let coeffs = dct2(frame);
        let cv = coeffs.values();
        let energies: Vec<f64> = order.iter().map(|&(u, v)| {
            let c = cv[u * ROI_WIDTH + v];
            c * c
        }).collect();
        let total: f64 = energies.iter().sum();
        if total <= 0.0 {
            continue; // all-zero frame reconstructs exactly at any count
        }
        // tail[n] = energy dropped when keeping the first n coefficients
        let mut tail = total;
        for n in 0..total_coeffs {
            mean_err[n] += (tail.max(0.0) / total).sqrt();
            tail -= energies[n];
        }
        mean_err[total_coeffs] += 0.0;
    }
    let f = frames.len() as f64;
    for n in 1..=total_coeffs {
        if mean_err[n] / f <= target_error {
            return Ok(n);
        }
    }
    Ok(total_coeffs)
}
