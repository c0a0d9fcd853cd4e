//! Mouth-region frames: the raw grid type and the fixed-size normalized ROI.

use crate::error::{Error, Result};

/// Normalized ROI height in pixels.
pub const ROI_HEIGHT: usize = 48;
/// Normalized ROI width in pixels.
pub const ROI_WIDTH: usize = 64;

/// A row-major 2-D grid of intensities. Raw inputs and temporal gradients
/// use this type; `RoiFrame` wraps the normalized 48x64 case.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::BadRoi("empty grid".into()));
        }
        if data.len() != height * width {
            return Err(Error::BadRoi(format!(
                "grid data length {} does not match {}x{}",
                data.len(),
                height,
                width
            )));
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Grid {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Grid {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One normalized mouth-region frame: exactly 48x64, intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RoiFrame(Grid);

impl RoiFrame {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.height != ROI_HEIGHT || grid.width != ROI_WIDTH {
            return Err(Error::BadRoi(format!(
                "frame is {}x{}, expected {}x{}",
                grid.height, grid.width, ROI_HEIGHT, ROI_WIDTH
            )));
        }
        if !grid
            .data
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
        {
            return Err(Error::BadRoi(
                "frame intensities must be finite and in [0, 1]".into(),
            ));
        }
        Ok(RoiFrame(grid))
    }

    /// Build from 8-bit samples (as stored in PGM/PNG frame files).
    pub fn from_u8(height: usize, width: usize, samples: &[u8]) -> Result<Self> {
        let data = samples.iter().map(|&b| f64::from(b) / 255.0).collect();
        RoiFrame::new(Grid::new(height, width, data)?)
    }

    /// Quantize back to 8-bit samples. Exact inverse of `from_u8`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.0
            .values()
            .iter()
            .map(|&v| (v * 255.0 + 0.5).floor() as u8)
            .collect()
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.0
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.0.get(y, x)
    }
}

/// Resample an arbitrary grid to the fixed 48x64 ROI size and bring
/// intensities into [0, 1].
///
/// Resampling is bilinear with the pixel-center convention (sample position
/// `(i + 0.5) * src/dst - 0.5`, edges clamped), which is the identity when the
/// input is already 48x64. Intensity handling: inputs already inside [0, 1]
/// are left untouched; anything else is min-max rescaled, with a degenerate
/// (constant) range clamped instead.
pub fn normalize_roi(raw: &Grid) -> Result<RoiFrame> {
    if raw.height < 2 || raw.width < 2 {
        return Err(Error::BadRoi(format!(
            "input must be at least 2x2, got {}x{}",
            raw.height, raw.width
        )));
    }
    if !raw.is_finite() {
        return Err(Error::BadRoi("input contains non-finite values".into()));
    }

    let resampled = bilinear_resize(raw, ROI_HEIGHT, ROI_WIDTH);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in resampled.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }

    let grid = if lo >= 0.0 && hi <= 1.0 {
        resampled
    } else if hi - lo > 0.0 {
        let scale = 1.0 / (hi - lo);
        let data = resampled
            .values()
            .iter()
            .map(|&v| ((v - lo) * scale).clamp(0.0, 1.0))
            .collect();
        Grid::new(ROI_HEIGHT, ROI_WIDTH, data)?
    } else {
        let data = resampled
            .values()
            .iter()
            .map(|&v| v.clamp(0.0, 1.0))
            .collect();
        Grid::new(ROI_HEIGHT, ROI_WIDTH, data)?
    };

    RoiFrame::new(grid)
}

fn bilinear_resize(src: &Grid, dst_h: usize, dst_w: usize) -> Grid {
    if src.height == dst_h && src.width == dst_w {
        return src.clone();
    }
    let sy = src.height as f64 / dst_h as f64;
    let sx = src.width as f64 / dst_w as f64;
    Grid::from_fn(dst_h, dst_w, |y, x| {
        let fy = (y as f64 + 0.5) * sy - 0.5;
        let fx = (x as f64 + 0.5) * sx - 0.5;
        let y0 = fy.floor();
        let x0 = fx.floor();
        let wy = fy - y0;
        let wx = fx - x0;
        let clamp_y = |v: f64| (v.max(0.0) as usize).min(src.height - 1);
        let clamp_x = |v: f64| (v.max(0.0) as usize).min(src.width - 1);
        let y0i = clamp_y(y0);
        let y1i = clamp_y(y0 + 1.0);
        let x0i = clamp_x(x0);
        let x1i = clamp_x(x0 + 1.0);
        let top = src.get(y0i, x0i) * (1.0 - wx) + src.get(y0i, x1i) * wx;
        let bot = src.get(y1i, x0i) * (1.0 - wx) + src.get(y1i, x1i) * wx;
        top * (1.0 - wy) + bot * wy
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_stays_constant() {
        for &v in &[0.0, 0.3, 1.0, 7.5] {
            let raw = Grid::from_fn(10, 17, |_, _| v);
            let frame = normalize_roi(&raw).unwrap();
            let first = frame.values()[0];
            assert!(frame.values().iter().all(|&p| p == first));
            assert!((0.0..=1.0).contains(&first));
        }
    }

    #[test]
    fn already_normalized_is_identity() {
        let raw = Grid::from_fn(ROI_HEIGHT, ROI_WIDTH, |y, x| {
            ((y * 31 + x * 7) % 256) as f64 / 255.0
        });
        let frame = normalize_roi(&raw).unwrap();
        assert_eq!(frame.grid(), &raw);
    }

    #[test]
    fn idempotent_on_normalized_frames() {
        let raw = Grid::from_fn(30, 50, |y, x| ((y + x) % 9) as f64);
        let once = normalize_roi(&raw).unwrap();
        let twice = normalize_roi(once.grid()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn checkerboard_mean_preserved() {
        // 96x128 -> 48x64 is an exact 2:1 reduction: every output pixel is
        // the average of a 2x2 checkerboard block, so the mean is preserved.
        let raw = Grid::from_fn(96, 128, |y, x| ((y + x) % 2) as f64);
        let input_mean = raw.mean();
        let frame = normalize_roi(&raw).unwrap();
        assert!((frame.grid().mean() - input_mean).abs() < 1e-6);
    }

    #[test]
    fn rejects_tiny_and_non_finite() {
        assert!(normalize_roi(&Grid::from_fn(1, 5, |_, _| 0.0)).is_err());
        let mut bad = Grid::zeros(4, 4);
        bad.set(1, 1, f64::NAN);
        assert!(normalize_roi(&bad).is_err());
    }

    #[test]
    fn out_of_range_is_rescaled() {
        let raw = Grid::from_fn(4, 4, |y, x| (y * 4 + x) as f64 * 16.0);
        let frame = normalize_roi(&raw).unwrap();
        let lo = frame.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = frame
            .values()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= 0.0 && hi <= 1.0);
        assert!(hi > 0.9, "rescale should use the full range, hi={hi}");
    }

    #[test]
    fn u8_round_trip_is_exact() {
        let frame = RoiFrame::from_u8(
            ROI_HEIGHT,
            ROI_WIDTH,
            &(0..ROI_HEIGHT * ROI_WIDTH)
                .map(|i| (i % 256) as u8)
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let bytes = frame.to_u8();
        let again = RoiFrame::from_u8(ROI_HEIGHT, ROI_WIDTH, &bytes).unwrap();
        assert_eq!(frame, again);
    }
}
