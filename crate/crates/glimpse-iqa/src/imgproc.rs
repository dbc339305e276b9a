//! Image preprocessing and multi-scale foveal glimpse extraction.
//!
//! Pixels live in `[0, 1]` grayscale. Fixation locations use normalized
//! image-center-relative coordinates in `[-1, 1]^2`, with `lx` along
//! columns and `ly` along rows. Glimpse extraction is hard attention:
//! deterministic, total over the coordinate square, and opaque to
//! gradients.

use crate::tensor::Tensor;

/// 2-D grayscale image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Self {
        assert!(height >= 1 && width >= 1, "empty image");
        assert_eq!(data.len(), height * width);
        assert!(data.iter().all(|v| v.is_finite()), "image contains non-finite values");
        GrayImage { height, width, data }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        GrayImage::new(height, width, vec![0.0; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.width + col] = v;
    }

    /// Pixel fetch with edge clamping (border replication).
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }
}

/// Image-center-relative coordinates, both components in [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedLocation {
    pub lx: f64,
    pub ly: f64,
}

impl NormalizedLocation {
    pub const CENTER: NormalizedLocation = NormalizedLocation { lx: 0.0, ly: 0.0 };

    /// Builds a location, clamping both coordinates into [-1, 1].
    pub fn clamped(lx: f64, ly: f64) -> Self {
        NormalizedLocation { lx: lx.clamp(-1.0, 1.0), ly: ly.clamp(-1.0, 1.0) }
    }

    pub fn in_range(&self) -> bool {
        self.lx.abs() <= 1.0 && self.ly.abs() <= 1.0
    }
}

/// The three same-size patches around one fixation, stacked as channels.
/// Channel 0 is the finest scale.
#[derive(Clone, Debug)]
pub struct GlimpseStack {
    pub patches: Tensor,
    pub scales: [usize; 3],
}

/// Glimpse geometry: the three source window side lengths (strictly
/// increasing) and the common output side each is normalized to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlimpseConfig {
    pub scales: [usize; 3],
    pub output: usize,
}

impl GlimpseConfig {
    pub fn new(scales: [usize; 3], output: usize) -> Self {
        assert!(
            scales[0] < scales[1] && scales[1] < scales[2],
            "scales must be strictly increasing"
        );
        assert!(
            scales.iter().all(|s| s % output == 0),
            "every scale must be a multiple of the output side {output}"
        );
        GlimpseConfig { scales, output }
    }

    /// The full-scale default: 32/96/288 windows normalized to 32x32.
    pub fn full() -> Self {
        GlimpseConfig::new([32, 96, 288], 32)
    }
}

/// Luminance conversion of interleaved 8-bit RGB, scaled to [0, 1].
/// Uses the BT.601 weights 0.299 / 0.587 / 0.114.
pub fn to_grayscale(rgb: &[u8], height: usize, width: usize) -> GrayImage {
    assert!(height >= 1 && width >= 1, "empty image");
    assert_eq!(rgb.len(), height * width * 3);
    let data = rgb
        .chunks_exact(3)
        .map(|px| (0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64) / 255.0)
        .collect();
    GrayImage::new(height, width, data)
}

/// Divisive local contrast normalization over a zero-padded window:
/// `out = (in - mean) / (std + eps)` with mean and population standard
/// deviation taken over the window x window neighborhood.
///
/// Runs on summed-area tables; the tests hold it against the direct
/// per-pixel loop.
pub fn local_contrast_normalize(img: &GrayImage, window: usize, eps: f64) -> GrayImage {
    assert!(window % 2 == 1, "window must be odd, got {window}");
    let (h, w) = (img.height, img.width);
    let r = (window / 2) as isize;
    let n = (window * window) as f64;

    // summed-area tables of x and x^2, one extra zero row/col
    let stride = w + 1;
    let mut sat = vec![0.0; (h + 1) * stride];
    let mut sat2 = vec![0.0; (h + 1) * stride];
    for i in 0..h {
        let mut row = 0.0;
        let mut row2 = 0.0;
        for j in 0..w {
            let v = img.data[i * w + j];
            row += v;
            row2 += v * v;
            sat[(i + 1) * stride + j + 1] = sat[i * stride + j + 1] + row;
            sat2[(i + 1) * stride + j + 1] = sat2[i * stride + j + 1] + row2;
        }
    }
    let rect = |sat: &[f64], r0: usize, c0: usize, r1: usize, c1: usize| {
        sat[r1 * stride + c1] - sat[r0 * stride + c1] - sat[r1 * stride + c0]
            + sat[r0 * stride + c0]
    };

    let mut out = vec![0.0; h * w];
    for i in 0..h {
        let r0 = (i as isize - r).max(0) as usize;
        let r1 = ((i as isize + r + 1).min(h as isize)) as usize;
        for j in 0..w {
            let c0 = (j as isize - r).max(0) as usize;
            let c1 = ((j as isize + r + 1).min(w as isize)) as usize;
            // pixels outside the image count as zeros, so the divisor is
            // the full window area regardless of clipping
            let sum = rect(&sat, r0, c0, r1, c1);
            let sum2 = rect(&sat2, r0, c0, r1, c1);
            let mean = sum / n;
            let var = (sum2 / n - mean * mean).max(0.0);
            out[i * w + j] = (img.data[i * w + j] - mean) / (var.sqrt() + eps);
        }
    }
    GrayImage::new(h, w, out)
}

/// Maps a normalized location to continuous pixel coordinates,
/// `(row, col) = ((ly+1)/2 * (h-1), (lx+1)/2 * (w-1))`.
pub fn loc_to_pixel(l: NormalizedLocation, height: usize, width: usize) -> (f64, f64) {
    let l = NormalizedLocation::clamped(l.lx, l.ly);
    let row = (l.ly + 1.0) / 2.0 * (height - 1) as f64;
    let col = (l.lx + 1.0) / 2.0 * (width - 1) as f64;
    (row, col)
}

/// Inverse of [`loc_to_pixel`].
pub fn pixel_to_loc(row: f64, col: f64, height: usize, width: usize) -> NormalizedLocation {
    let ly = if height > 1 { row / (height - 1) as f64 * 2.0 - 1.0 } else { 0.0 };
    let lx = if width > 1 { col / (width - 1) as f64 * 2.0 - 1.0 } else { 0.0 };
    NormalizedLocation { lx, ly }
}

/// Extracts the multi-scale glimpse stack at `l`.
///
/// For each scale `s`, the `s x s` window centered at the nearest pixel to
/// `loc_to_pixel(l)` is cropped with edge clamping, then reduced to
/// `output x output` by exact block averaging (`s == output` is a copy).
pub fn extract_glimpse(
    img: &GrayImage,
    l: NormalizedLocation,
    cfg: &GlimpseConfig,
) -> GlimpseStack {
    let out = cfg.output;
    let (row, col) = loc_to_pixel(l, img.height, img.width);
    let (cr, cc) = (row.round() as isize, col.round() as isize);
    let mut data = Vec::with_capacity(3 * out * out);
    for &s in &cfg.scales {
        let factor = s / out;
        let top = cr - (s / 2) as isize;
        let left = cc - (s / 2) as isize;
        let count = (factor * factor) as f64;
        for oi in 0..out {
            for oj in 0..out {
                let mut acc = 0.0;
                for di in 0..factor {
                    let rr = top + (oi * factor + di) as isize;
                    for dj in 0..factor {
                        acc += img.get_clamped(rr, left + (oj * factor + dj) as isize);
                    }
                }
                data.push(acc / count);
            }
        }
    }
    GlimpseStack { patches: Tensor::new(vec![3, out, out], data), scales: cfg.scales }
}
