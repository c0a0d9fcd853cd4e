//! Dense SIFT over a uniform keypoint grid: upright, single-scale 4x4-cell,
//! 8-orientation descriptors with trilinear binning and Gaussian windowing.
//! Grid step defaults to half the descriptor support.

use crate::corpus::Grid;

/// Pixels per descriptor cell.
const CELL: usize = 4;
/// Cells per side.
const GRID: usize = 4;
/// Orientation bins.
const BINS: usize = 8;
/// Descriptor support side in pixels.
pub const SUPPORT: usize = CELL * GRID;
/// Values per keypoint.
pub const DESCRIPTOR_LEN: usize = GRID * GRID * BINS;
/// Normalized-descriptor clipping threshold.
const CLIP: f64 = 0.2;

/// Keypoint centers along one axis: every `step` pixels, keeping the full
/// support inside the image.
pub fn grid_centers(extent: usize, step: usize) -> Vec<usize> {
    let half = SUPPORT / 2;
    if extent < SUPPORT {
        return Vec::new();
    }
    (0..)
        .map(|i| half + i * step)
        .take_while(|&c| c + half <= extent)
        .collect()
}

/// Number of keypoints dense SIFT will place on an `h` x `w` grid.
pub fn keypoint_count(h: usize, w: usize, step: usize) -> usize {
    grid_centers(h, step).len() * grid_centers(w, step).len()
}

/// Dense SIFT descriptor of a grid: keypoints in row-major grid order,
/// descriptors concatenated. Contrast scaling cancels in the normalization;
/// an all-constant window yields a zero descriptor.
pub fn dense_sift(grid: &Grid, step: usize) -> Vec<f64> {
    let h = grid.height();
    let w = grid.width();
    let ys = grid_centers(h, step);
    let xs = grid_centers(w, step);

    // Central-difference gradients with border replication.
    let mut mag = vec![0.0; h * w];
    let mut ori = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let xp = grid.get(y, (x + 1).min(w - 1));
            let xm = grid.get(y, x.saturating_sub(1));
            let yp = grid.get((y + 1).min(h - 1), x);
            let ym = grid.get(y.saturating_sub(1), x);
            let gx = (xp - xm) / 2.0;
            let gy = (yp - ym) / 2.0;
            mag[y * w + x] = (gx * gx + gy * gy).sqrt();
            let mut a = gy.atan2(gx);
            if a < 0.0 {
                a += 2.0 * std::f64::consts::PI;
            }
            ori[y * w + x] = a;
        }
    }

    let sigma = SUPPORT as f64 / 2.0;
    let two_sigma2 = 2.0 * sigma * sigma;
    let mut out = Vec::with_capacity(ys.len() * xs.len() * DESCRIPTOR_LEN);
    for &cy in &ys {
        for &cx in &xs {
            let mut hist = [0.0f64; DESCRIPTOR_LEN];
            let y0 = cy - SUPPORT / 2;
            let x0 = cx - SUPPORT / 2;
            for py in y0..y0 + SUPPORT {
                for px in x0..x0 + SUPPORT {
                    let m = mag[py * w + px];
                    if m == 0.0 {
                        continue;
                    }
                    let dy = py as f64 + 0.5 - cy as f64;
                    let dx = px as f64 + 0.5 - cx as f64;
                    let wg = (-(dx * dx + dy * dy) / two_sigma2).exp();

                    // Cell coordinates in [-0.5, GRID - 0.5).
                    let ry = (py - y0) as f64 / CELL as f64 - 0.5;
                    let rx = (px - x0) as f64 / CELL as f64 - 0.5;
                    let ob = ori[py * w + px] / (2.0 * std::f64::consts::PI) * BINS as f64;
                    let r0 = ry.floor();
                    let c0 = rx.floor();
                    let o0 = ob.floor();
                    let fr = ry - r0;
                    let fc = rx - c0;
                    let fo = ob - o0;

                    for (dr, wr) in [(0i64, 1.0 - fr), (1, fr)] {
                        let r = r0 as i64 + dr;
                        if r < 0 || r >= GRID as i64 {
                            continue;
                        }
                        for (dc, wc) in [(0i64, 1.0 - fc), (1, fc)] {
                            let c = c0 as i64 + dc;
                            if c < 0 || c >= GRID as i64 {
                                continue;
                            }
                            for (dob, wo) in [(0usize, 1.0 - fo), (1, fo)] {
                                let o = (o0 as usize + dob) % BINS;
                                hist[(r as usize * GRID + c as usize) * BINS + o] +=
                                    m * wg * wr * wc * wo;
                            }
                        }
                    }
                }
            }

            // L2 normalize, clip, renormalize; all-zero stays zero.
            let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for v in &mut hist {
                    *v = (*v / norm).min(CLIP);
                }
                let norm2 = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm2 > 1e-12 {
                    for v in &mut hist {
                        *v /= norm2;
                    }
                }
            } else {
                hist.fill(0.0);
            }
            out.extend_from_slice(&hist);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ROI_HEIGHT, ROI_WIDTH};

    #[test]
    fn roi_grid_has_35_keypoints() {
        assert_eq!(grid_centers(ROI_HEIGHT, 8), vec![8, 16, 24, 32, 40]);
        assert_eq!(grid_centers(ROI_WIDTH, 8), vec![8, 16, 24, 32, 40, 48, 56]);
        assert_eq!(keypoint_count(ROI_HEIGHT, ROI_WIDTH, 8), 35);
    }

    #[test]
    fn constant_frame_gives_zero_descriptors() {
        let grid = Grid::from_fn(ROI_HEIGHT, ROI_WIDTH, |_, _| 0.6);
        let d = dense_sift(&grid, 8);
        assert_eq!(d.len(), 35 * DESCRIPTOR_LEN);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn contrast_scaling_is_invariant() {
        let base = Grid::from_fn(ROI_HEIGHT, ROI_WIDTH, |y, x| {
            0.5 + 0.4 * ((y as f64 / 7.0).sin() * (x as f64 / 5.0).cos())
        });
        let scaled = Grid::from_fn(ROI_HEIGHT, ROI_WIDTH, |y, x| 0.1 + 0.5 * base.get(y, x));
        let a = dense_sift(&base, 8);
        let b = dense_sift(&scaled, 8);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn vertical_edge_hits_horizontal_bins() {
        // Step along x: gradients point in +/-x, angles 0 or pi -> bins 0 and 4.
        let grid = Grid::from_fn(ROI_HEIGHT, ROI_WIDTH, |_, x| if x < 32 { 0.2 } else { 0.8 });
        let d = dense_sift(&grid, 8);
        let mut per_bin = [0.0f64; BINS];
        for (i, &v) in d.iter().enumerate() {
            per_bin[i % BINS] += v;
        }
        let horizontal = per_bin[0] + per_bin[4];
        let total: f64 = per_bin.iter().sum();
        assert!(total > 0.0);
        assert!(
            horizontal / total > 0.999,
            "horizontal mass {horizontal} of {total}"
        );
    }

    #[test]
    fn descriptors_are_finite_and_bounded() {
        let grid = Grid::from_fn(ROI_HEIGHT, ROI_WIDTH, |y, x| {
            ((y * 13 + x * 7) % 17) as f64 / 17.0
        });
        let d = dense_sift(&grid, 8);
        for &v in &d {
            assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
    }
}
